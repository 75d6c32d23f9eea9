//! Exact sparse elimination and Smith normal form.
//!
//! [`Reducer`] maintains an echelon basis of a growing set of sparse vectors.
//! Over a field every nonzero entry is a pivot candidate and the pivot of a
//! vector is its largest index. Over the integers only unit entries are used as
//! pivots; vectors without a unit entry are deferred and end up in a residual
//! block that is handled by dense Smith normal form, one connected component at
//! a time.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::arith::{Integer, Integers, Ring};
use crate::sparse::{Accumulator, SparseMatrix, SparseVec};

const NO_ROW: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct PivotRow<E> {
    pivot: u32,
    /// The reduced relation, normalized to coefficient 1 at `pivot`.
    entries: SparseVec<E>,
    combo: SparseVec<E>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome<E> {
    /// The vector introduced a new pivot row.
    Pivot(u32),
    /// The vector reduced to zero; the combination of inputs that vanishes.
    Zero(SparseVec<E>),
    /// No usable pivot (non-field rings only); kept for the residual block.
    Deferred,
}

#[derive(Clone, Debug)]
struct DeferredVec<E> {
    entries: SparseVec<E>,
    combo: SparseVec<E>,
}

pub struct Reducer<R: Ring> {
    ring: R,
    pivot_row: Vec<u32>,
    rows: Vec<PivotRow<R::Elem>>,
    deferred: Vec<DeferredVec<R::Elem>>,
    track: bool,
    inserted: u32,
    resolved: bool,
}

impl<R: Ring> Reducer<R> {
    /// `dim` is the length of the vectors, `track` keeps input combinations.
    pub fn new(ring: &R, dim: usize, track: bool) -> Self {
        Reducer {
            ring: ring.clone(),
            pivot_row: vec![NO_ROW; dim],
            rows: Vec::new(),
            deferred: Vec::new(),
            track,
            inserted: 0,
            resolved: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.pivot_row.len()
    }

    pub fn rank_so_far(&self) -> usize {
        self.rows.len()
    }

    pub fn is_pivot(&self, index: u32) -> bool {
        self.pivot_row[index as usize] != NO_ROW
    }

    pub fn pivots(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.iter().map(|r| r.pivot)
    }

    /// Fully reduces `v` against the current pivot rows.
    ///
    /// Rows only ever contain pivots of rows created after them, so
    /// substituting in creation order terminates.
    pub fn reduce(&self, v: &[(u32, R::Elem)], combo: SparseVec<R::Elem>) -> (SparseVec<R::Elem>, SparseVec<R::Elem>) {
        let ring = &self.ring;
        let mut acc: BTreeMap<u32, R::Elem> = v.iter().cloned().collect();
        let mut heap = BinaryHeap::new();
        for (i, _) in v {
            let r = self.pivot_row[*i as usize];
            if r != NO_ROW {
                heap.push(Reverse(r));
            }
        }
        let mut combo_acc = if self.track {
            let mut c = Accumulator::new(ring);
            c.add_scaled(&ring.one(), &combo);
            Some(c)
        } else {
            None
        };
        while let Some(Reverse(r)) = heap.pop() {
            let row = &self.rows[r as usize];
            let Some(c) = acc.remove(&row.pivot) else {
                continue;
            };
            if ring.is_zero(&c) {
                continue;
            }
            let minus_c = ring.neg(&c);
            for (k, e) in &row.entries {
                if *k == row.pivot {
                    continue;
                }
                match acc.get_mut(k) {
                    Some(a) => {
                        ring.add_mul_assign(a, &minus_c, e);
                        if ring.is_zero(a) {
                            acc.remove(k);
                        }
                    }
                    None => {
                        acc.insert(*k, ring.mul(&minus_c, e));
                        let r2 = self.pivot_row[*k as usize];
                        if r2 != NO_ROW {
                            heap.push(Reverse(r2));
                        }
                    }
                }
            }
            if let Some(ca) = combo_acc.as_mut() {
                ca.add_scaled(&minus_c, &row.combo);
            }
        }
        let reduced = acc.into_iter().filter(|(_, e)| !ring.is_zero(e)).collect();
        (reduced, combo_acc.map(Accumulator::finish).unwrap_or_default())
    }

    fn choose_pivot(&self, v: &[(u32, R::Elem)]) -> Option<usize> {
        if self.ring.is_field() {
            return v.len().checked_sub(1);
        }
        (0..v.len()).rev().find(|&k| self.ring.is_unit(&v[k].1))
    }

    fn push_row(&mut self, v: SparseVec<R::Elem>, combo: SparseVec<R::Elem>, k: usize) -> u32 {
        let ring = &self.ring;
        let pivot = v[k].0;
        let inv = ring.inv(&v[k].1).expect("pivot is a unit");
        let entries: SparseVec<R::Elem> = v.iter().map(|(i, e)| (*i, ring.mul(&inv, e))).collect();
        let combo = if self.track { combo.iter().map(|(i, e)| (*i, ring.mul(&inv, e))).collect() } else { Vec::new() };
        let id = self.rows.len() as u32;
        self.pivot_row[pivot as usize] = id;
        self.rows.push(PivotRow { pivot, entries, combo });
        self.resolved = false;
        id
    }

    /// Inserts the next input vector; input `j` is the `j`-th call.
    pub fn insert(&mut self, v: &[(u32, R::Elem)]) -> Outcome<R::Elem> {
        let id = self.inserted;
        self.inserted += 1;
        let combo = if self.track { vec![(id, self.ring.one())] } else { Vec::new() };
        self.insert_with_combo(v, combo)
    }

    pub fn insert_with_combo(&mut self, v: &[(u32, R::Elem)], combo: SparseVec<R::Elem>) -> Outcome<R::Elem> {
        let (reduced, combo) = self.reduce(v, combo);
        if reduced.is_empty() {
            return Outcome::Zero(combo);
        }
        match self.choose_pivot(&reduced) {
            Some(k) => Outcome::Pivot(self.push_row(reduced, combo, k)),
            None => {
                self.deferred.push(DeferredVec { entries: reduced, combo });
                Outcome::Deferred
            }
        }
    }

    /// Retries deferred vectors until no new unit pivot appears. Returns the
    /// combinations of deferred vectors that became zero.
    pub fn settle(&mut self) -> Vec<SparseVec<R::Elem>> {
        let mut zeros = Vec::new();
        loop {
            let pending = std::mem::take(&mut self.deferred);
            let mut progress = false;
            for d in pending {
                let (reduced, combo) = self.reduce(&d.entries, d.combo);
                if reduced.is_empty() {
                    zeros.push(combo);
                    continue;
                }
                match self.choose_pivot(&reduced) {
                    Some(k) => {
                        self.push_row(reduced, combo, k);
                        progress = true;
                    }
                    None => self.deferred.push(DeferredVec { entries: reduced, combo }),
                }
            }
            if !progress {
                break;
            }
        }
        zeros
    }

    /// Makes every pivot row free of other pivots.
    pub fn resolve(&mut self) {
        if self.resolved {
            return;
        }
        let ring = self.ring.clone();
        for r in (0..self.rows.len()).rev() {
            let row = &self.rows[r];
            if row.entries.iter().all(|(k, _)| *k == row.pivot || self.pivot_row[*k as usize] == NO_ROW) {
                continue;
            }
            let mut acc = Accumulator::new(&ring);
            let mut combo = Accumulator::new(&ring);
            combo.add_scaled(&ring.one(), &row.combo);
            for (k, e) in &row.entries {
                let r2 = self.pivot_row[*k as usize];
                if *k == row.pivot || r2 == NO_ROW {
                    acc.add_term(*k, e);
                } else {
                    let minus_e = ring.neg(e);
                    let other = &self.rows[r2 as usize];
                    for (k2, e2) in &other.entries {
                        if *k2 != other.pivot {
                            acc.add_term(*k2, &ring.mul(&minus_e, e2));
                        }
                    }
                    if self.track {
                        combo.add_scaled(&minus_e, &other.combo);
                    }
                }
            }
            let entries = acc.finish();
            let combo = combo.finish();
            let row = &mut self.rows[r];
            row.entries = entries;
            row.combo = combo;
        }
        self.resolved = true;
    }

    /// Fully reduced relation for pivot `index`: `x_index = -sum(tail)`.
    /// Call [`Reducer::resolve`] first.
    pub fn pivot_tail(&self, index: u32) -> Option<impl Iterator<Item = &(u32, R::Elem)>> {
        debug_assert!(self.resolved);
        let r = self.pivot_row[index as usize];
        (r != NO_ROW).then(|| {
            let row = &self.rows[r as usize];
            row.entries.iter().filter(move |(k, _)| *k != row.pivot)
        })
    }

    pub fn residual(&self) -> Vec<SparseVec<R::Elem>> {
        self.deferred.iter().map(|d| d.entries.clone()).collect()
    }

    /// Residual vectors with the input combinations they came from.
    pub fn residual_with_combos(&self) -> impl Iterator<Item = (&SparseVec<R::Elem>, &SparseVec<R::Elem>)> {
        self.deferred.iter().map(|d| (&d.entries, &d.combo))
    }

    /// Splits the residual block into connected components and computes the
    /// Smith form of each.
    pub fn residual_components(&self, transforms: bool) -> Vec<ResidualComponent<R::Elem>> {
        residual_components(&self.ring, &self.residual(), transforms)
    }
}

/// Dense block of the residual: `left * block * right = diag`.
#[derive(Clone, Debug)]
pub struct ResidualComponent<E> {
    /// Coordinates (rows of the block), ascending.
    pub coords: Vec<u32>,
    pub diag: Vec<E>,
    pub left: Vec<Vec<E>>,
    pub left_inv: Vec<Vec<E>>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn residual_components<R: Ring>(ring: &R, vectors: &[SparseVec<R::Elem>], transforms: bool) -> Vec<ResidualComponent<R::Elem>> {
    let mut coords: Vec<u32> = vectors.iter().flat_map(|v| v.iter().map(|e| e.0)).collect();
    coords.sort_unstable();
    coords.dedup();
    let local = |c: u32| coords.binary_search(&c).expect("coordinate present");
    let mut parent: Vec<usize> = (0..coords.len()).collect();
    for v in vectors {
        if let Some(first) = v.first() {
            let a = find(&mut parent, local(first.0));
            for e in &v[1..] {
                let b = find(&mut parent, local(e.0));
                if a != b {
                    let (lo, hi) = (a.min(b), a.max(b));
                    parent[hi] = lo;
                }
            }
        }
    }
    // re-root so that every vector's first coordinate shares a root with the rest
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for k in 0..coords.len() {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().0.push(k);
    }
    for (j, v) in vectors.iter().enumerate() {
        if let Some(first) = v.first() {
            let r = find(&mut parent, local(first.0));
            groups.get_mut(&r).expect("root exists").1.push(j);
        }
    }
    groups
        .into_values()
        .map(|(rows, cols)| {
            let block_coords: Vec<u32> = rows.iter().map(|&k| coords[k]).collect();
            let mut dense = vec![vec![ring.zero(); cols.len()]; rows.len()];
            for (cj, &j) in cols.iter().enumerate() {
                for (i, e) in &vectors[j] {
                    let ri = block_coords.binary_search(i).expect("row in block");
                    dense[ri][cj] = e.clone();
                }
            }
            let snf = smith_normal_form(ring, dense, transforms);
            ResidualComponent { coords: block_coords, diag: snf.diag, left: snf.left, left_inv: snf.left_inv }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Snf<E> {
    /// Diagonal entries in divisibility order, nonzero ones first.
    pub diag: Vec<E>,
    /// `left * a * right = diag`; empty unless transforms were requested.
    pub left: Vec<Vec<E>>,
    pub left_inv: Vec<Vec<E>>,
}

fn identity<R: Ring>(ring: &R, n: usize) -> Vec<Vec<R::Elem>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { ring.one() } else { ring.zero() }).collect())
        .collect()
}

/// Dense Smith normal form over a Euclidean ring.
pub fn smith_normal_form<R: Ring>(ring: &R, mut a: Vec<Vec<R::Elem>>, transforms: bool) -> Snf<R::Elem> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut left = if transforms { identity(ring, rows) } else { Vec::new() };
    let mut left_inv = if transforms { identity(ring, rows) } else { Vec::new() };

    // row_i += c * row_j
    let row_add = |a: &mut Vec<Vec<R::Elem>>, left: &mut Vec<Vec<R::Elem>>, left_inv: &mut Vec<Vec<R::Elem>>, i: usize, j: usize, c: &R::Elem| {
        let (src, dst) = if i < j {
            let (lo, hi) = a.split_at_mut(j);
            (&hi[0], &mut lo[i])
        } else {
            let (lo, hi) = a.split_at_mut(i);
            (&lo[j], &mut hi[0])
        };
        for (d, s) in dst.iter_mut().zip(src.iter()) {
            if !ring.is_zero(s) {
                ring.add_mul_assign(d, c, s);
            }
        }
        if transforms {
            let sj = left[j].clone();
            for (d, s) in left[i].iter_mut().zip(sj.iter()) {
                ring.add_mul_assign(d, c, s);
            }
            let minus_c = ring.neg(c);
            for row in left_inv.iter_mut() {
                let v = row[i].clone();
                ring.add_mul_assign(&mut row[j], &minus_c, &v);
            }
        }
    };

    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero entry of the trailing block
        let mut best: Option<(usize, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(t) {
            for (j, e) in row.iter().enumerate().skip(t) {
                let s = ring.size(e);
                if s > 0 && best.map_or(true, |b| s < b.2) {
                    best = Some((i, j, s));
                }
            }
        }
        let Some((pi, pj, _)) = best else { break };
        a.swap(t, pi);
        if transforms {
            left.swap(t, pi);
            for row in left_inv.iter_mut() {
                row.swap(t, pi);
            }
        }
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            // clear column t
            let mut dirty = false;
            for i in t + 1..rows {
                if ring.is_zero(&a[i][t]) {
                    continue;
                }
                let (q, r) = ring.div_rem(&a[i][t], &a[t][t]);
                row_add(&mut a, &mut left, &mut left_inv, i, t, &ring.neg(&q));
                if !ring.is_zero(&r) {
                    dirty = true;
                }
            }
            // clear row t with column operations
            for j in t + 1..cols {
                if ring.is_zero(&a[t][j]) {
                    continue;
                }
                let (q, r) = ring.div_rem(&a[t][j], &a[t][t]);
                let minus_q = ring.neg(&q);
                for row in a.iter_mut() {
                    let v = row[t].clone();
                    ring.add_mul_assign(&mut row[j], &minus_q, &v);
                }
                if !ring.is_zero(&r) {
                    dirty = true;
                }
            }
            if dirty {
                // move a smaller remainder onto the diagonal and repeat
                let mut best = (t, t, ring.size(&a[t][t]));
                for i in t + 1..rows {
                    let s = ring.size(&a[i][t]);
                    if s > 0 && s < best.2 {
                        best = (i, t, s);
                    }
                }
                for j in t + 1..cols {
                    let s = ring.size(&a[t][j]);
                    if s > 0 && s < best.2 {
                        best = (t, j, s);
                    }
                }
                if best.0 != t {
                    a.swap(t, best.0);
                    if transforms {
                        left.swap(t, best.0);
                        for row in left_inv.iter_mut() {
                            row.swap(t, best.0);
                        }
                    }
                }
                if best.1 != t {
                    for row in a.iter_mut() {
                        row.swap(t, best.1);
                    }
                }
                continue;
            }
            // divisibility of the trailing block
            let mut offender = None;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !ring.is_zero(&a[i][j]) && !ring.is_zero(&ring.div_rem(&a[i][j], &a[t][t]).1) {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => row_add(&mut a, &mut left, &mut left_inv, t, i, &ring.one()),
                None => break,
            }
        }
        let u = ring.normalizing_unit(&a[t][t]);
        a[t][t] = ring.mul(&u, &a[t][t]);
        if transforms {
            for e in left[t].iter_mut() {
                *e = ring.mul(&u, e);
            }
            let u_inv = ring.inv(&u).expect("unit");
            for row in left_inv.iter_mut() {
                row[t] = ring.mul(&u_inv, &row[t]);
            }
        }
        t += 1;
    }
    let diag = (0..rows.min(cols)).map(|i| a[i][i].clone()).collect();
    Snf { diag, left, left_inv }
}

/// Rank and non-unit invariant factors of a linear map.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MapInvariants {
    pub rank: usize,
    /// Invariant factors greater than one, in divisibility order.
    pub torsion: Vec<Integer>,
}

/// Puts a multiset of nonzero integers into divisibility order, dropping units.
pub fn invariant_factors_of_diagonal(values: &[Integer]) -> Vec<Integer> {
    let mut v: Vec<Integer> = values.iter().map(crate::arith::abs).filter(|x| *x > Integer::ONE).collect();
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            let g = crate::arith::gcd(&v[i], &v[j]);
            let l = &v[i] * &v[j] / &g;
            v[i] = g;
            v[j] = l;
        }
    }
    v.retain(|x| *x > Integer::ONE);
    v
}

/// The columns of `m` as integer vectors, for a field of characteristic zero
/// and a matrix with integral entries.
fn integral_columns<R: Ring>(ring: &R, m: &SparseMatrix<R::Elem>) -> Option<Vec<SparseVec<Integer>>> {
    if !ring.is_field() || ring.characteristic() != 0 {
        return None;
    }
    m.cols.iter().map(|c| c.iter().map(|(k, e)| ring.to_integer(e).map(|v| (*k, v))).collect()).collect()
}

/// Rank (over the ring's fraction field) and invariant factors of the map
/// whose columns are the columns of `m`.
pub fn map_invariants<R: Ring>(ring: &R, m: &SparseMatrix<R::Elem>) -> MapInvariants {
    if let Some(cols) = integral_columns(ring, m) {
        let rank = map_invariants(&Integers, &SparseMatrix { rows: m.rows, cols }).rank;
        return MapInvariants { rank, torsion: Vec::new() };
    }
    let mut red = Reducer::new(ring, m.rows, false);
    for c in &m.cols {
        red.insert(c);
    }
    red.settle();
    let mut rank = red.rank_so_far();
    let mut diag = Vec::new();
    for comp in red.residual_components(false) {
        for d in comp.diag {
            if !ring.is_zero(&d) {
                rank += 1;
                diag.push(ring.to_integer(&d).expect("integral invariant factor"));
            }
        }
    }
    let torsion = if ring.is_field() { Vec::new() } else { invariant_factors_of_diagonal(&diag) };
    MapInvariants { rank, torsion }
}

/// Basis of the kernel of the column map of `m` over a field.
pub fn kernel_basis<R: Ring>(ring: &R, m: &SparseMatrix<R::Elem>) -> Vec<SparseVec<R::Elem>> {
    assert!(ring.is_field(), "kernel_basis needs a field");
    if let Some(cols) = integral_columns(ring, m) {
        return rational_kernel(ring, m.rows, &cols);
    }
    let mut red = Reducer::new(ring, m.rows, true);
    let mut out = Vec::new();
    for c in &m.cols {
        if let Outcome::Zero(combo) = red.insert(c) {
            out.push(combo);
        }
    }
    out
}

/// Kernel over Q of an integer matrix: unit pivots over Z first, then the
/// leftover block over the field. The basis vectors are integral.
fn rational_kernel<R: Ring>(ring: &R, rows: usize, cols: &[SparseVec<Integer>]) -> Vec<SparseVec<R::Elem>> {
    let lift = |v: &SparseVec<Integer>| -> SparseVec<R::Elem> { v.iter().map(|(k, e)| (*k, ring.from_integer(e))).collect() };
    let mut red = Reducer::new(&Integers, rows, true);
    let mut out = Vec::new();
    for c in cols {
        if let Outcome::Zero(combo) = red.insert(c) {
            out.push(lift(&combo));
        }
    }
    out.extend(red.settle().iter().map(lift));
    let leftover: Vec<(SparseVec<R::Elem>, SparseVec<R::Elem>)> = red.residual_with_combos().map(|(e, c)| (lift(e), lift(c))).collect();
    let mut field = Reducer::new(ring, rows, true);
    for (entries, _) in &leftover {
        if let Outcome::Zero(c) = field.insert(entries) {
            let mut acc = Accumulator::new(ring);
            for (k, coef) in &c {
                acc.add_scaled(coef, &leftover[*k as usize].1);
            }
            let v = acc.finish();
            let scale = v.iter().fold(Integer::ONE, |l, (_, e)| {
                let d = ring.denominator(e);
                &l * &d / crate::arith::gcd(&l, &d)
            });
            let scale = ring.from_integer(&scale);
            out.push(v.iter().map(|(k, e)| (*k, ring.mul(&scale, e))).collect());
        }
    }
    out
}

/// Solves `m x = b` over a field.
pub fn solve<R: Ring>(ring: &R, m: &SparseMatrix<R::Elem>, b: &[(u32, R::Elem)]) -> Option<SparseVec<R::Elem>> {
    assert!(ring.is_field(), "solve needs a field");
    let mut red = Reducer::new(ring, m.rows, true);
    for c in &m.cols {
        red.insert(c);
    }
    let n = m.ncols() as u32;
    match red.insert_with_combo(b, vec![(n, ring.one())]) {
        Outcome::Zero(combo) => Some(
            combo
                .into_iter()
                .filter(|(i, _)| *i < n)
                .map(|(i, e)| (i, ring.neg(&e)))
                .collect(),
        ),
        _ => None,
    }
}
