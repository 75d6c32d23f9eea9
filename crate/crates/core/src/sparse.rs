//! Sparse vectors and column-major sparse matrices over a [`Ring`].

use crate::arith::Ring;

/// Sorted `(index, value)` pairs with no stored zeros.
pub type SparseVec<E> = Vec<(u32, E)>;

/// `y + a*x`
pub fn axpy<R: Ring>(ring: &R, y: &[(u32, R::Elem)], a: &R::Elem, x: &[(u32, R::Elem)]) -> SparseVec<R::Elem> {
    let mut out = Vec::with_capacity(y.len() + x.len());
    let (mut i, mut j) = (0, 0);
    while i < y.len() || j < x.len() {
        if j == x.len() || (i < y.len() && y[i].0 < x[j].0) {
            out.push(y[i].clone());
            i += 1;
        } else if i == y.len() || x[j].0 < y[i].0 {
            let v = ring.mul(a, &x[j].1);
            if !ring.is_zero(&v) {
                out.push((x[j].0, v));
            }
            j += 1;
        } else {
            let mut v = y[i].1.clone();
            ring.add_mul_assign(&mut v, a, &x[j].1);
            if !ring.is_zero(&v) {
                out.push((y[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn scale<R: Ring>(ring: &R, a: &R::Elem, x: &[(u32, R::Elem)]) -> SparseVec<R::Elem> {
    x.iter()
        .filter_map(|(i, v)| {
            let w = ring.mul(a, v);
            (!ring.is_zero(&w)).then_some((*i, w))
        })
        .collect()
}

pub fn get<'a, E>(x: &'a [(u32, E)], index: u32) -> Option<&'a E> {
    x.binary_search_by_key(&index, |e| e.0).ok().map(|k| &x[k].1)
}

/// Accumulates a linear combination of sparse vectors. Terms are collected
/// unsorted and merged once in [`Accumulator::finish`].
pub struct Accumulator<R: Ring> {
    ring: R,
    terms: Vec<(u32, R::Elem)>,
}

impl<R: Ring> Accumulator<R> {
    pub fn new(ring: &R) -> Self {
        Accumulator { ring: ring.clone(), terms: Vec::new() }
    }

    pub fn add_term(&mut self, index: u32, coef: &R::Elem) {
        self.terms.push((index, coef.clone()));
    }

    pub fn add_scaled(&mut self, coef: &R::Elem, x: &[(u32, R::Elem)]) {
        self.terms.extend(x.iter().map(|(i, v)| (*i, self.ring.mul(coef, v))));
    }

    pub fn finish(self) -> SparseVec<R::Elem> {
        let ring = self.ring;
        let mut terms = self.terms;
        terms.sort_unstable_by_key(|t| t.0);
        let mut out: SparseVec<R::Elem> = Vec::with_capacity(terms.len());
        for (i, v) in terms {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc = ring.add(acc, &v),
                _ => {
                    if out.last().is_some_and(|(_, acc)| ring.is_zero(acc)) {
                        out.pop();
                    }
                    out.push((i, v));
                }
            }
        }
        if out.last().is_some_and(|(_, acc)| ring.is_zero(acc)) {
            out.pop();
        }
        out
    }
}

/// Column-major sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<E> {
    pub rows: usize,
    pub cols: Vec<SparseVec<E>>,
}

impl<E: Clone> SparseMatrix<E> {
    pub fn zero(rows: usize, ncols: usize) -> Self {
        SparseMatrix { rows, cols: vec![Vec::new(); ncols] }
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    /// Coordinate triplets `(row, col, value)` sorted column-major.
    pub fn triplets(&self) -> Vec<(usize, usize, E)> {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().map(move |(i, v)| (*i as usize, j, v.clone())))
            .collect()
    }

    pub fn to_dense(&self, zero: E) -> Vec<Vec<E>> {
        let mut out = vec![vec![zero; self.cols.len()]; self.rows];
        for (j, c) in self.cols.iter().enumerate() {
            for (i, v) in c {
                out[*i as usize][j] = v.clone();
            }
        }
        out
    }
}

impl<E: Clone> SparseMatrix<E> {
    pub fn from_dense<R: Ring<Elem = E>>(ring: &R, dense: &[Vec<E>], rows: usize) -> Self {
        let ncols = dense.first().map_or(0, Vec::len);
        let cols = (0..ncols)
            .map(|j| {
                (0..rows)
                    .filter(|&i| !ring.is_zero(&dense[i][j]))
                    .map(|i| (i as u32, dense[i][j].clone()))
                    .collect()
            })
            .collect();
        SparseMatrix { rows, cols }
    }
}

/// Applies `a` to a sparse vector.
pub fn mat_vec<R: Ring>(ring: &R, a: &SparseMatrix<R::Elem>, x: &[(u32, R::Elem)]) -> SparseVec<R::Elem> {
    let mut acc = Accumulator::new(ring);
    for (j, v) in x {
        acc.add_scaled(v, &a.cols[*j as usize]);
    }
    acc.finish()
}

pub fn mat_mul<R: Ring>(ring: &R, a: &SparseMatrix<R::Elem>, b: &SparseMatrix<R::Elem>) -> SparseMatrix<R::Elem> {
    assert_eq!(a.ncols(), b.rows, "inner dimensions differ");
    SparseMatrix { rows: a.rows, cols: b.cols.iter().map(|c| mat_vec(ring, a, c)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Integers;
    use dashu_int::IBig;

    fn v(entries: &[(u32, i64)]) -> SparseVec<IBig> {
        entries.iter().map(|&(i, x)| (i, IBig::from(x))).collect()
    }

    #[test]
    fn axpy_merges_and_cancels() {
        let z = Integers;
        let y = v(&[(0, 1), (2, 3), (5, -1)]);
        let x = v(&[(1, 4), (2, 1), (5, 1)]);
        assert_eq!(axpy(&z, &y, &IBig::from(-3), &x), v(&[(0, 1), (1, -12), (5, -4)]));
        assert_eq!(axpy(&z, &y, &IBig::ONE, &x), v(&[(0, 1), (1, 4), (2, 4)]));
    }

    #[test]
    fn product_of_small_matrices() {
        let z = Integers;
        let a = SparseMatrix { rows: 2, cols: vec![v(&[(0, 1)]), v(&[(0, 2)])] };
        let b = SparseMatrix { rows: 2, cols: vec![v(&[(0, -2), (1, 1)])] };
        assert!(mat_mul(&z, &a, &b).is_zero());
    }
}
