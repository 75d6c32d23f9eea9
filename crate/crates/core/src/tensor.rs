//! The quadratic algebra U = T(V)/(χ), built one word length at a time.
//!
//! Slice ℓ is presented as a quotient of U_{ℓ-1} ⊗ V: its candidate
//! coordinates are pairs (basis element of U_{ℓ-1}, letter) and its relations
//! are the classes of b·χ for b in a basis of U_{ℓ-2}. This uses
//! I_ℓ = I_{ℓ-1}⊗V + V^{ℓ-2}⊗χ and keeps every matrix at the size of the
//! quotient instead of m^ℓ.
//!
//! Over a field the pivot of each relation is its lexicographically largest
//! candidate, so the basis is the set of normal words. Over the integers
//! pivots must be units; relations without a unit entry are split off by Smith
//! normal form, which also detects torsion in the quotient.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use dashu_int::IBig;
use rayon::prelude::*;

use crate::arith::{Integer, Integers, Ring};
use crate::error::{Error, Result};
use crate::forms::IntersectionForm;
use crate::linalg::Reducer;
use crate::sparse::{Accumulator, SparseMatrix, SparseVec};

pub const DEFAULT_SIZE_CAP: u64 = 5_000_000;

/// A monomial u_{i_1}⋯u_{i_ℓ} of T(V). Letters are 0-based; they print 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_one_based(letters: &[usize]) -> Word {
        Word(letters.iter().map(|&l| (l - 1) as u16).collect())
    }

    /// Position among the words of the same length in lexicographic order.
    pub fn index(&self, m: usize) -> u64 {
        self.0.iter().fold(0u64, |acc, &l| acc * m as u64 + l as u64)
    }

    pub fn from_index(mut index: u64, m: usize, len: usize) -> Word {
        let mut letters = vec![0u16; len];
        for slot in letters.iter_mut().rev() {
            *slot = (index % m as u64) as u16;
            index /= m as u64;
        }
        Word(letters)
    }

    pub fn degree(&self, n: u32) -> u64 {
        self.len() as u64 * (n as u64 - 1)
    }

    pub fn pushed(&self, letter: usize) -> Word {
        let mut w = self.0.clone();
        w.push(letter as u16);
        Word(w)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "u{}", l + 1)?;
        }
        Ok(())
    }
}

/// χ = Σ_{i<j} c_ij [u_i,u_j] + Σ_i c_ii u_i² expanded in the word basis of V⊗V.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChiElement {
    pub m: usize,
    /// Nonzero coefficients keyed by 0-based letter pairs.
    pub coefficients: BTreeMap<(usize, usize), Integer>,
}

impl ChiElement {
    pub fn coefficient(&self, i: usize, j: usize) -> Integer {
        self.coefficients.get(&(i, j)).cloned().unwrap_or(IBig::ZERO)
    }

    pub fn as_vector(&self) -> SparseVec<Integer> {
        self.coefficients
            .iter()
            .map(|(&(i, j), c)| ((i * self.m + j) as u32, c.clone()))
            .collect()
    }
}

/// Sign of the graded commutator of two elements of word lengths `a`, `b`.
fn bracket_sign_is_plus(n: u32, a: usize, b: usize) -> bool {
    // (-1)^{|x||y|} with |x| = a(n-1), |y| = b(n-1)
    (a as u64 * b as u64 * (n as u64 - 1)) % 2 == 1
}

pub fn chi(form: &IntersectionForm) -> ChiElement {
    let m = form.m();
    let n = form.n();
    let mut coefficients = BTreeMap::new();
    let mut add = |k: (usize, usize), v: Integer| {
        if v.is_zero() {
            return;
        }
        let e = coefficients.entry(k).or_insert(IBig::ZERO);
        *e += v;
        if e.is_zero() {
            coefficients.remove(&k);
        }
    };
    for i in 0..m {
        add((i, i), form.entry(i, i).clone());
        for j in i + 1..m {
            let c = form.entry(i, j).clone();
            // [u_i,u_j] = u_i u_j - (-1)^{(n-1)^2} u_j u_i
            let other = if bracket_sign_is_plus(n, 1, 1) { c.clone() } else { -c.clone() };
            add((i, j), c);
            add((j, i), other);
        }
    }
    ChiElement { m, coefficients }
}

fn check_cap(m: usize, len: usize, cap: u64) -> Result<()> {
    let ambient = (m as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if ambient > cap as u128 {
        return Err(Error::SizeCapExceeded { length: len, ambient, cap });
    }
    Ok(())
}

/// Spanning set of the ideal slice I_ℓ ⊂ V^{⊗ℓ}: the columns are
/// w_left ⊗ χ ⊗ w_right, ordered by split position, then w_left, then w_right.
pub fn ideal_slice(chi: &ChiElement, len: usize, cap: u64) -> Result<SparseMatrix<Integer>> {
    assert!(len >= 2, "ideal slices start at word length 2");
    let m = chi.m;
    check_cap(m, len, cap)?;
    let rows = m.pow(len as u32);
    let mut cols = Vec::with_capacity((len - 1) * m.pow(len as u32 - 2));
    for a in 0..=len - 2 {
        let b = len - 2 - a;
        let (ml, mr) = (m.pow(a as u32), m.pow(b as u32));
        for left in 0..ml {
            for right in 0..mr {
                let mut col: SparseVec<Integer> = chi
                    .coefficients
                    .iter()
                    .map(|(&(i, j), c)| (((left * m + i) * m + j) * mr + right, c.clone()))
                    .map(|(idx, c)| (idx as u32, c))
                    .collect();
                col.sort_by_key(|e| e.0);
                cols.push(col);
            }
        }
    }
    Ok(SparseMatrix { rows, cols })
}

/// One word-length slice of U.
#[derive(Clone, Debug)]
pub struct USlice<R: Ring> {
    length: usize,
    m: usize,
    /// Word labels of basis elements; `None` for integral combinations
    /// introduced by the Smith form step.
    labels: Vec<Option<Word>>,
    /// U-coordinates of candidate `b*m + a`, i.e. of e_b·u_a with e_b in U_{ℓ-1}.
    cand_reduce: Vec<SparseVec<R::Elem>>,
    /// Each basis element as a combination of candidates.
    lift: Vec<SparseVec<R::Elem>>,
    residual_size: usize,
}

impl<R: Ring> USlice<R> {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Option<Word>] {
        &self.labels
    }

    /// Basis words, when every basis element is a word.
    pub fn basis_words(&self) -> Option<Vec<Word>> {
        self.labels.iter().cloned().collect()
    }

    pub fn candidate_reduction(&self, candidate: usize) -> &[(u32, R::Elem)] {
        &self.cand_reduce[candidate]
    }

    pub fn lift(&self, basis: usize) -> &[(u32, R::Elem)] {
        &self.lift[basis]
    }

    pub fn num_candidates(&self) -> usize {
        self.cand_reduce.len()
    }

    /// Number of candidate coordinates that needed the Smith form step.
    pub fn residual_size(&self) -> usize {
        self.residual_size
    }

    pub fn label(&self, basis: usize) -> String {
        match &self.labels[basis] {
            Some(w) => w.to_string(),
            None => format!("e{}[{}]", self.length, basis),
        }
    }

    fn unit(ring: &R, m: usize) -> Self {
        let _ = ring;
        USlice { length: 0, m, labels: vec![Some(Word::default())], cand_reduce: Vec::new(), lift: vec![Vec::new()], residual_size: 0 }
    }

    fn generators(ring: &R, m: usize) -> Self {
        USlice {
            length: 1,
            m,
            labels: (0..m).map(|a| Some(Word(vec![a as u16]))).collect(),
            cand_reduce: (0..m).map(|a| vec![(a as u32, ring.one())]).collect(),
            lift: (0..m).map(|a| vec![(a as u32, ring.one())]).collect(),
            residual_size: 0,
        }
    }

    fn build(ring: &R, chi: &[(usize, usize, R::Elem)], prev2: &USlice<R>, prev: &USlice<R>) -> Result<Self> {
        let m = prev.m;
        let length = prev.length + 1;
        let ncand = prev.dim() * m;
        let relations: Vec<SparseVec<R::Elem>> = (0..prev2.dim())
            .into_par_iter()
            .map(|b2| {
                let mut acc = Accumulator::new(ring);
                for (a, c, coef) in chi {
                    for (b1, e) in &prev.cand_reduce[b2 * m + a] {
                        acc.add_term(*b1 * m as u32 + *c as u32, &ring.mul(coef, e));
                    }
                }
                acc.finish()
            })
            .collect();

        let mut red = Reducer::new(ring, ncand, false);
        for rel in &relations {
            red.insert(rel);
        }
        red.settle();
        red.resolve();
        let components = red.residual_components(true);

        let mut torsion = Vec::new();
        for comp in &components {
            for d in &comp.diag {
                if !ring.is_zero(d) && !ring.is_unit(d) {
                    torsion.push(ring.render(d));
                }
            }
        }
        if !torsion.is_empty() {
            return Err(Error::TorsionInU { length, factors: torsion });
        }

        let mut residual_pos: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
        for (k, comp) in components.iter().enumerate() {
            for (i, c) in comp.coords.iter().enumerate() {
                residual_pos.insert(*c, (k, i));
            }
        }

        let mut labels = Vec::new();
        let mut lift = Vec::new();
        let mut plain_index = vec![u32::MAX; ncand];
        for c in 0..ncand as u32 {
            if red.is_pivot(c) || residual_pos.contains_key(&c) {
                continue;
            }
            plain_index[c as usize] = labels.len() as u32;
            let (b, a) = (c as usize / m, c as usize % m);
            labels.push(prev.labels[b].as_ref().map(|w| w.pushed(a)));
            lift.push(vec![(c, ring.one())]);
        }
        // basis index of the first surviving coordinate of each component
        let mut comp_offset = Vec::with_capacity(components.len());
        for comp in &components {
            let rank = comp.diag.iter().filter(|d| !ring.is_zero(d)).count();
            comp_offset.push(labels.len() as isize - rank as isize);
            for k in rank..comp.coords.len() {
                labels.push(None);
                lift.push(
                    comp.coords
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !ring.is_zero(&comp.left_inv[*i][k]))
                        .map(|(i, c)| (*c, comp.left_inv[i][k].clone()))
                        .collect(),
                );
            }
        }

        let nonpivot_reduce = |c: u32| -> SparseVec<R::Elem> {
            if let Some(&(k, i)) = residual_pos.get(&c) {
                let comp = &components[k];
                let rank = comp.diag.iter().filter(|d| !ring.is_zero(d)).count();
                (rank..comp.coords.len())
                    .filter(|&r| !ring.is_zero(&comp.left[r][i]))
                    .map(|r| ((comp_offset[k] + r as isize) as u32, comp.left[r][i].clone()))
                    .collect()
            } else {
                vec![(plain_index[c as usize], ring.one())]
            }
        };

        let cand_reduce: Vec<SparseVec<R::Elem>> = (0..ncand as u32)
            .into_par_iter()
            .map(|c| match red.pivot_tail(c) {
                Some(tail) => {
                    let mut acc = Accumulator::new(ring);
                    for (k, e) in tail {
                        acc.add_scaled(&ring.neg(e), &nonpivot_reduce(*k));
                    }
                    acc.finish()
                }
                None => nonpivot_reduce(c),
            })
            .collect();

        Ok(USlice { length, m, labels, cand_reduce, lift, residual_size: residual_pos.len() })
    }
}

/// U over a coefficient ring, with slices and left-multiplication tables built
/// on demand and cached.
pub struct QuotientAlgebra<R: Ring> {
    ring: R,
    n: u32,
    m: usize,
    chi: ChiElement,
    chi_terms: Vec<(usize, usize, R::Elem)>,
    cap: u64,
    slices: Mutex<Vec<Arc<USlice<R>>>>,
    left: Mutex<Vec<Arc<Vec<SparseVec<R::Elem>>>>>,
}

impl<R: Ring> QuotientAlgebra<R> {
    pub fn new(ring: R, form: &IntersectionForm, cap: u64) -> Self {
        let chi = chi(form);
        let chi_terms = chi
            .coefficients
            .iter()
            .map(|(&(i, j), c)| (i, j, ring.from_integer(c)))
            .filter(|(_, _, c)| !ring.is_zero(c))
            .collect();
        QuotientAlgebra {
            ring,
            n: form.n(),
            m: form.m(),
            chi,
            chi_terms,
            cap,
            slices: Mutex::new(Vec::new()),
            left: Mutex::new(Vec::new()),
        }
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn chi(&self) -> &ChiElement {
        &self.chi
    }

    pub fn size_cap(&self) -> u64 {
        self.cap
    }

    pub fn check_cap(&self, len: usize) -> Result<()> {
        check_cap(self.m, len, self.cap)
    }

    /// The slice of word length `len`, building lower slices as needed.
    pub fn slice(&self, len: usize) -> Result<Arc<USlice<R>>> {
        let mut slices = self.slices.lock().expect("slice cache poisoned");
        while slices.len() <= len {
            let l = slices.len();
            check_cap(self.m, l, self.cap)?;
            let s = match l {
                0 => USlice::unit(&self.ring, self.m),
                1 => USlice::generators(&self.ring, self.m),
                _ => USlice::build(&self.ring, &self.chi_terms, &slices[l - 2], &slices[l - 1])?,
            };
            slices.push(Arc::new(s));
        }
        Ok(slices[len].clone())
    }

    pub fn dim(&self, len: usize) -> Result<usize> {
        Ok(self.slice(len)?.dim())
    }

    /// y·u_a for y in U_len.
    pub fn right_mul(&self, y: &[(u32, R::Elem)], len: usize, a: usize) -> Result<SparseVec<R::Elem>> {
        let next = self.slice(len + 1)?;
        Ok(right_mul_with(&self.ring, &next, self.m, y, a))
    }

    fn left_table(&self, len: usize) -> Result<Arc<Vec<SparseVec<R::Elem>>>> {
        if let Some(t) = self.left.lock().expect("left cache poisoned").get(len) {
            return Ok(t.clone());
        }
        for l in 0..=len {
            if self.left.lock().expect("left cache poisoned").len() > l {
                continue;
            }
            let next = self.slice(l + 1)?;
            let m = self.m;
            let table: Vec<SparseVec<R::Elem>> = if l == 0 {
                (0..m).map(|a| vec![(a as u32, self.ring.one())]).collect()
            } else {
                let cur = self.slice(l)?;
                let below = self.left.lock().expect("left cache poisoned")[l - 1].clone();
                (0..cur.dim() * m)
                    .into_par_iter()
                    .map(|idx| {
                        let (b, a) = (idx / m, idx % m);
                        let mut acc = Accumulator::new(&self.ring);
                        for (cand, coef) in cur.lift(b) {
                            let (b1, c) = (*cand as usize / m, *cand as usize % m);
                            let ua_b1 = &below[b1 * m + a];
                            acc.add_scaled(coef, &right_mul_with(&self.ring, &next, m, ua_b1, c));
                        }
                        acc.finish()
                    })
                    .collect()
            };
            let mut guard = self.left.lock().expect("left cache poisoned");
            if guard.len() == l {
                guard.push(Arc::new(table));
            }
        }
        Ok(self.left.lock().expect("left cache poisoned")[len].clone())
    }

    /// u_a·y for y in U_len.
    pub fn left_mul(&self, a: usize, y: &[(u32, R::Elem)], len: usize) -> Result<SparseVec<R::Elem>> {
        let table = self.left_table(len)?;
        let mut acc = Accumulator::new(&self.ring);
        for (b, coef) in y {
            acc.add_scaled(coef, &table[*b as usize * self.m + a]);
        }
        Ok(acc.finish())
    }

    /// [u_i, y] = u_i y - (-1)^{|u_i||y|} y u_i for y in U_len.
    pub fn bracket_left(&self, i: usize, y: &[(u32, R::Elem)], len: usize) -> Result<SparseVec<R::Elem>> {
        let dim = self.dim(len)?;
        if let Some((k, _)) = y.iter().find(|(k, _)| *k as usize >= dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: *k as usize + 1 });
        }
        if i >= self.m {
            return Err(Error::DimensionMismatch { expected: self.m, found: i + 1 });
        }
        let left = self.left_mul(i, y, len)?;
        let right = self.right_mul(y, len, i)?;
        let coef = if bracket_sign_is_plus(self.n, 1, len) { self.ring.one() } else { self.ring.neg(&self.ring.one()) };
        Ok(crate::sparse::axpy(&self.ring, &left, &coef, &right))
    }

    /// Class of a single word.
    pub fn reduce_letters(&self, word: &Word) -> Result<SparseVec<R::Elem>> {
        let mut y = vec![(0u32, self.ring.one())];
        for (l, &a) in word.0.iter().enumerate() {
            y = self.right_mul(&y, l, a as usize)?;
        }
        Ok(y)
    }

    /// Projection T(V)_len → U_len of a sparse ambient vector (word indices).
    pub fn reduce_ambient(&self, len: usize, t: &[(u32, R::Elem)]) -> Result<SparseVec<R::Elem>> {
        self.check_cap(len)?;
        let total = (self.m as u64).pow(len as u32);
        let mut acc = Accumulator::new(&self.ring);
        for (idx, coef) in t {
            if *idx as u64 >= total {
                return Err(Error::DimensionMismatch { expected: total as usize, found: *idx as usize + 1 });
            }
            let w = Word::from_index(*idx as u64, self.m, len);
            acc.add_scaled(coef, &self.reduce_letters(&w)?);
        }
        Ok(acc.finish())
    }

    /// Projection of a dense ambient vector of length m^len.
    pub fn reduce_word(&self, len: usize, t: &[R::Elem]) -> Result<SparseVec<R::Elem>> {
        self.check_cap(len)?;
        let total = self.m.pow(len as u32);
        if t.len() != total {
            return Err(Error::DimensionMismatch { expected: total, found: t.len() });
        }
        let sparse: SparseVec<R::Elem> = t
            .iter()
            .enumerate()
            .filter(|(_, e)| !self.ring.is_zero(e))
            .map(|(i, e)| (i as u32, e.clone()))
            .collect();
        self.reduce_ambient(len, &sparse)
    }

    /// A representative in T(V)_len of a basis element (word indices).
    pub fn lift_ambient(&self, len: usize, basis: usize) -> Result<SparseVec<R::Elem>> {
        if len == 0 {
            return Ok(vec![(0, self.ring.one())]);
        }
        let s = self.slice(len)?;
        let mut acc = Accumulator::new(&self.ring);
        for (cand, coef) in s.lift(basis) {
            let (b, c) = (*cand as usize / self.m, *cand as usize % self.m);
            let below = self.lift_ambient(len - 1, b)?;
            let shifted: SparseVec<R::Elem> =
                below.into_iter().map(|(w, e)| (w * self.m as u32 + c as u32, e)).collect();
            acc.add_scaled(coef, &shifted);
        }
        Ok(acc.finish())
    }

    /// Renders an element of U_len through its basis labels.
    pub fn render(&self, y: &[(u32, R::Elem)], len: usize) -> Result<String> {
        let s = self.slice(len)?;
        Ok(render_combination(&self.ring, y.iter().map(|(b, e)| (s.label(*b as usize), e.clone()))))
    }
}

fn right_mul_with<R: Ring>(ring: &R, next: &USlice<R>, m: usize, y: &[(u32, R::Elem)], a: usize) -> SparseVec<R::Elem> {
    if let [(b, e)] = y {
        return crate::sparse::scale(ring, e, &next.cand_reduce[*b as usize * m + a]);
    }
    let mut acc = Accumulator::new(ring);
    for (b, e) in y {
        acc.add_scaled(e, &next.cand_reduce[*b as usize * m + a]);
    }
    acc.finish()
}

/// "2·u1u2 - u2u1" style rendering of a combination of labelled terms.
pub fn render_combination<R: Ring>(ring: &R, terms: impl IntoIterator<Item = (String, R::Elem)>) -> String {
    let mut out = String::new();
    for (label, coef) in terms {
        if ring.is_zero(&coef) {
            continue;
        }
        let text = ring.render(&coef);
        let (neg, mag) = match text.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, text),
        };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if mag != "1" {
            out.push_str(&mag);
            out.push('·');
        }
        out.push_str(&label);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Integral torsion-freeness check of V^{⊗ℓ}/I_ℓ straight from the ideal slice.
/// Returns the non-unit invariant factors (empty when torsion-free) and the
/// free rank.
pub fn ideal_quotient_invariants(chi: &ChiElement, len: usize, cap: u64) -> Result<(usize, Vec<Integer>)> {
    let slice = ideal_slice(chi, len, cap)?;
    let inv = crate::linalg::map_invariants(&Integers, &slice);
    Ok((slice.rows - inv.rank, inv.torsion))
}
