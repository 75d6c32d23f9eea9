//! Closed-form and brute-force cross-checks.

use std::collections::BTreeMap;

use dashu_int::IBig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{Integer, PrimeField, Rationals, Ring};
use crate::error::{Error, Result};
use crate::forms::{base_change, hyperbolic_matrix, reduction_form, validate_matrix, CoefficientRing, IntersectionForm, ValidateOptions};
use crate::homology::{compute_with, w_dimension, GradedModuleSummary, Summand};
use crate::tensor::QuotientAlgebra;

/// Truncated power series with nonnegative integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeriesTable {
    pub max_degree: u64,
    /// Nonzero coefficients only.
    pub coefficients: BTreeMap<u64, u64>,
}

impl SeriesTable {
    pub fn get(&self, degree: u64) -> u64 {
        self.coefficients.get(&degree).copied().unwrap_or(0)
    }
}

fn truncated_mul(a: &[u64], b: &[u64]) -> Result<Vec<u64>> {
    let len = a.len();
    let mut out = vec![0u64; len];
    for (i, x) in a.iter().enumerate().filter(|(_, x)| **x != 0) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            let t = x.checked_mul(*y).and_then(|t| t.checked_add(out[i + j]));
            out[i + j] = t.ok_or_else(|| Error::InvalidInput("series coefficient overflow".into()))?;
        }
    }
    Ok(out)
}

/// ((1 + t^n) / (1 - t^{n-1}))^{2g}: rational loop homology of a product of
/// 2g copies of S^n, n odd, truncated at `max_degree`.
pub fn sphere_product_series(n: u32, g: u32, max_degree: u64) -> Result<SeriesTable> {
    if n % 2 == 0 || n < 3 {
        return Err(Error::ParityUnsupported(n));
    }
    let len = max_degree as usize + 1;
    let mut single = vec![0u64; len];
    let step = n as usize - 1;
    for k in (0..len).step_by(step) {
        single[k] += 1;
        if k + n as usize <= max_degree as usize {
            single[k + n as usize] += 1;
        }
    }
    let mut acc = vec![0u64; len];
    acc[0] = 1;
    for _ in 0..2 * g {
        acc = truncated_mul(&acc, &single)?;
    }
    let coefficients = acc.into_iter().enumerate().filter(|(_, c)| *c != 0).map(|(d, c)| (d as u64, c)).collect();
    Ok(SeriesTable { max_degree, coefficients })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub degree: u64,
    pub expected: u64,
    pub found: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub checked: usize,
    pub first_mismatch: Option<Mismatch>,
}

fn divisible_count(factors: &[Integer], p: u32) -> u64 {
    let p = IBig::from(p);
    factors.iter().filter(|f| (*f % &p) == IBig::ZERO).count() as u64
}

/// dim over F_p in degree k = rank over Z in degree k + #(factors in degree k
/// divisible by p) + #(factors in degree k-1 divisible by p).
pub fn ucoeff_check(over_z: &GradedModuleSummary, over_fp: &GradedModuleSummary, p: u32) -> CheckOutcome {
    let mut degrees: Vec<u64> = over_z.ranks().keys().chain(over_fp.ranks().keys()).copied().collect();
    degrees.sort_unstable();
    degrees.dedup();
    let mut checked = 0;
    for k in degrees {
        let mut expected = over_z.rank_at(k) as u64 + divisible_count(&over_z.torsion_at(k), p);
        if k > 0 {
            expected += divisible_count(&over_z.torsion_at(k - 1), p);
        }
        let found = over_fp.rank_at(k) as u64;
        checked += 1;
        if expected != found {
            return CheckOutcome { passed: false, checked, first_mismatch: Some(Mismatch { degree: k, expected, found }) };
        }
    }
    CheckOutcome { passed: true, checked, first_mismatch: None }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EulerRow {
    pub word_length: usize,
    /// dim U_ℓ - m dim U_{ℓ-1} + dim U_{ℓ-2}
    pub slices: i64,
    /// dim Q_ℓ - dim W_{ℓ-1} + dim Z_{ℓ-2}
    pub homology: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EulerReport {
    pub passed: bool,
    pub rows: Vec<EulerRow>,
}

/// Rank-nullity across the three-term column, for 2 ≤ ℓ ≤ `max_length`.
/// W is recounted by [`w_dimension`], which also checks the composite over
/// the field.
pub fn euler_check(form: &IntersectionForm, ring: CoefficientRing, max_length: usize, size_cap: u64) -> Result<EulerReport> {
    match ring {
        CoefficientRing::Rationals => euler_check_with(form, Rationals, ring, max_length, size_cap),
        CoefficientRing::PrimeField(p) => euler_check_with(form, PrimeField::new(p), ring, max_length, size_cap),
        CoefficientRing::Integers => Err(Error::InvalidInput("the Euler check runs over a field".into())),
    }
}

fn euler_check_with<R: Ring>(form: &IntersectionForm, field: R, tag: CoefficientRing, max_length: usize, size_cap: u64) -> Result<EulerReport> {
    let (work, _) = reduction_form(form)?;
    let form = &work;
    let alg = QuotientAlgebra::new(field, form, size_cap);
    let n = form.n();
    let m = form.m() as i64;
    // enough degree for Q_ℓ and Z_{ℓ-2} up to ℓ = max_length
    let max_degree = (max_length as u64 * (n as u64 - 1)).max(2 * n as u64 + max_length.saturating_sub(2) as u64 * (n as u64 - 1));
    let max_degree = u32::try_from(max_degree).map_err(|_| Error::InvalidInput("word length too large".into()))?;
    let summary = compute_with(&alg, form, tag, max_degree)?.summary;
    let rank = |s: Summand, l: usize| summary.entry(s, l).map_or(0, |e| e.free_rank as i64);
    let mut rows = Vec::new();
    let mut passed = true;
    for l in 2..=max_length {
        let dims = [alg.dim(l)? as i64, alg.dim(l - 1)? as i64, alg.dim(l - 2)? as i64];
        let slices = dims[0] - m * dims[1] + dims[2];
        let w = w_dimension(&alg, form, l - 1)? as i64;
        let homology = rank(Summand::Q, l) - w + rank(Summand::Z, l - 2);
        passed &= slices == homology;
        rows.push(EulerRow { word_length: l, slices, homology });
    }
    Ok(EulerReport { passed, rows })
}

fn random_unimodular_with(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<Integer>> {
    let mut p: Vec<Vec<Integer>> = (0..m).map(|i| (0..m).map(|k| if i == k { IBig::ONE } else { IBig::ZERO }).collect()).collect();
    if m < 2 {
        return p;
    }
    for _ in 0..2 * m {
        let a = rng.gen_range(0..m);
        let mut b = rng.gen_range(0..m - 1);
        if b >= a {
            b += 1;
        }
        let c = IBig::from([-2i64, -1, 1, 2][rng.gen_range(0..4)]);
        // column a += c * column b
        for row in p.iter_mut() {
            let add = &c * &row[b];
            row[a] += add;
        }
    }
    if rng.gen_bool(0.5) {
        // flip column 0
        for row in p.iter_mut() {
            row[0] = -row[0].clone();
        }
    }
    p
}

/// A random m×m integer matrix of determinant ±1, built from elementary
/// column operations with coefficients in {-2,...,2}.
pub fn random_unimodular(m: usize, seed: u64) -> Vec<Vec<Integer>> {
    random_unimodular_with(&mut ChaCha8Rng::seed_from_u64(seed), m)
}

/// Matrix of the permutation sending basis vector i to `perm[i]`.
pub fn permutation_matrix(perm: &[usize]) -> Vec<Vec<Integer>> {
    let m = perm.len();
    let mut p = vec![vec![IBig::ZERO; m]; m];
    for (i, &j) in perm.iter().enumerate() {
        p[j][i] = IBig::ONE;
    }
    p
}

/// A unimodular form PᵀJP with J standard (hyperbolic for odd n, a random
/// mix of ±1 diagonal and hyperbolic blocks for even n) and P a product of
/// elementary operations with coefficients in {-2,...,2}.
pub fn random_form(n: u32, m: usize, seed: u64) -> Result<IntersectionForm> {
    if n % 2 == 1 && m % 2 == 1 {
        return Err(Error::OddRankSkew { n, m });
    }
    if m == 0 {
        return Err(Error::InvalidInput("m must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ ((m as u64) << 48));
    let j: Vec<Vec<Integer>> = if n % 2 == 1 {
        hyperbolic_matrix(n, m / 2)
    } else {
        let mut j = vec![vec![IBig::ZERO; m]; m];
        let mut k = 0;
        while k < m {
            if k + 1 < m && rng.gen_bool(0.3) {
                j[k][k + 1] = IBig::ONE;
                j[k + 1][k] = IBig::ONE;
                k += 2;
            } else {
                j[k][k] = if rng.gen_bool(0.5) { IBig::ONE } else { IBig::NEG_ONE };
                k += 1;
            }
        }
        j
    };
    let opts = ValidateOptions { force: false, allow_nonunimodular: false };
    let standard = validate_matrix(n, j, &opts)?;
    let p = random_unimodular_with(&mut rng, m);
    let form = base_change(&standard, &p)?;
    validate_matrix(n, form.matrix().to_vec(), &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::compute;
    use crate::tensor::DEFAULT_SIZE_CAP;

    fn series(pairs: &[(u64, u64)]) -> BTreeMap<u64, u64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn sphere_series_examples() {
        let s = sphere_product_series(5, 1, 14).unwrap();
        assert_eq!(s.coefficients, series(&[(0, 1), (4, 2), (5, 2), (8, 3), (9, 4), (10, 1), (12, 4), (13, 6), (14, 2)]));
        assert_eq!(sphere_product_series(5, 1, 0).unwrap().coefficients, series(&[(0, 1)]));
        assert_eq!(sphere_product_series(7, 1, 6).unwrap().coefficients, series(&[(0, 1), (6, 2)]));
        assert_eq!(sphere_product_series(6, 1, 6), Err(Error::ParityUnsupported(6)));
    }

    #[test]
    fn ucoeff_examples() {
        let f = IntersectionForm::from_i64(6, &[&[0, 1], &[1, 0]], &ValidateOptions::default()).unwrap();
        let z = compute(&f, CoefficientRing::Integers, 12).unwrap();
        let f2 = compute(&f, CoefficientRing::PrimeField(2), 12).unwrap();
        let f3 = compute(&f, CoefficientRing::PrimeField(3), 12).unwrap();
        assert_eq!(f2.rank_at(10), 3);
        assert_eq!(f3.rank_at(10), 1);
        assert!(ucoeff_check(&z, &f2, 2).passed);
        assert!(ucoeff_check(&z, &f3, 3).passed);
        let bad = ucoeff_check(&z, &f3, 2);
        assert!(!bad.passed);
        assert_eq!(bad.first_mismatch.unwrap().degree, 10);
        let q = compute(&f, CoefficientRing::Rationals, 12).unwrap();
        assert!(ucoeff_check(&q, &q, 5).passed);
    }

    #[test]
    fn euler_examples() {
        let even = IntersectionForm::from_i64(6, &[&[0, 1], &[1, 0]], &ValidateOptions::default()).unwrap();
        let r = euler_check(&even, CoefficientRing::Rationals, 2, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(r.rows, vec![EulerRow { word_length: 2, slices: 0, homology: 0 }]);
        let odd = IntersectionForm::from_i64(5, &[&[0, 1], &[-1, 0]], &ValidateOptions::default()).unwrap();
        let r = euler_check(&odd, CoefficientRing::PrimeField(2), 6, DEFAULT_SIZE_CAP).unwrap();
        assert!(r.passed);
        assert_eq!(r.rows[0], EulerRow { word_length: 2, slices: 0, homology: 0 });
    }

    #[test]
    fn random_forms() {
        for seed in 0..10 {
            let f = random_form(5, 2, seed).unwrap();
            assert_eq!(crate::arith::abs(&f.determinant()), IBig::ONE);
            let f = random_form(6, 1, seed).unwrap();
            assert_eq!(crate::arith::abs(f.entry(0, 0)), IBig::ONE);
            let f = random_form(10, 4, seed).unwrap();
            assert_eq!(crate::arith::abs(&f.determinant()), IBig::ONE);
        }
        assert_eq!(random_form(7, 3, 1).unwrap_err(), Error::OddRankSkew { n: 7, m: 3 });
        assert_eq!(random_form(9, 4, 17).unwrap(), random_form(9, 4, 17).unwrap());
    }
}
