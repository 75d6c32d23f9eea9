//! Intersection forms: validation, the preset catalog and basis changes.

use std::fmt;

use dashu_int::ops::ExtendedGcd;
use dashu_int::IBig;
use serde::{Deserialize, Serialize};

use crate::arith::{determinant, is_prime, Integer, Integers};
use crate::error::{Error, Result};
use crate::linalg::smith_normal_form;

/// The intersection form of an (n-1)-connected closed 2n-manifold on a chosen
/// basis a_1..a_m of its middle cohomology. The fundamental class [M] is the
/// distinguished top label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionForm {
    n: u32,
    matrix: Vec<Vec<Integer>>,
    warnings: Vec<String>,
}

impl IntersectionForm {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<Integer>] {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> &Integer {
        &self.matrix[i][j]
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_odd(&self) -> bool {
        self.n % 2 == 1
    }

    pub fn determinant(&self) -> Integer {
        determinant(&self.matrix)
    }

    /// Builds a form without checks. Only for internal constructions whose
    /// invariants hold by design, and for tests that need invalid inputs.
    pub fn new_unchecked(n: u32, matrix: Vec<Vec<Integer>>) -> Self {
        IntersectionForm { n, matrix, warnings: Vec::new() }
    }

    pub fn from_i64(n: u32, rows: &[&[i64]], opts: &ValidateOptions) -> Result<Self> {
        let matrix = rows.iter().map(|r| r.iter().map(|&v| IBig::from(v)).collect()).collect();
        validate_matrix(n, matrix, opts)
    }
}

impl fmt::Display for IntersectionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .matrix
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "n={} C=[{}]", self.n, rows.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientRing {
    Integers,
    Rationals,
    PrimeField(u32),
}

impl CoefficientRing {
    pub fn prime_field(p: i64) -> Result<Self> {
        if p <= 0 || p >= (1i64 << 31) || !is_prime(p as u64) {
            return Err(Error::InvalidPrime(p));
        }
        Ok(CoefficientRing::PrimeField(p as u32))
    }

    /// Accepts `Z`, `Q`, `F<p>` and `Fp:<p>`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "Z" | "z" => Ok(CoefficientRing::Integers),
            "Q" | "q" => Ok(CoefficientRing::Rationals),
            _ => {
                let digits = t
                    .strip_prefix("Fp:")
                    .or_else(|| t.strip_prefix("Fp="))
                    .or_else(|| t.strip_prefix('F'))
                    .ok_or_else(|| Error::InvalidInput(format!("unknown ring '{s}'")))?;
                let p: i64 = digits.parse().map_err(|_| Error::InvalidInput(format!("unknown ring '{s}'")))?;
                Self::prime_field(p)
            }
        }
    }

    pub fn is_field(&self) -> bool {
        !matches!(self, CoefficientRing::Integers)
    }
}

impl fmt::Display for CoefficientRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientRing::Integers => write!(f, "Z"),
            CoefficientRing::Rationals => write!(f, "Q"),
            CoefficientRing::PrimeField(p) => write!(f, "F{p}"),
        }
    }
}

/// Ring field of the input document: `"Z"`, `"Q"` or `{"Fp": p}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawRing {
    Named(String),
    Prime {
        #[serde(rename = "Fp")]
        fp: i64,
    },
}

impl RawRing {
    pub fn resolve(&self) -> Result<CoefficientRing> {
        match self {
            RawRing::Named(s) if s == "Z" || s == "Q" => CoefficientRing::parse(s),
            RawRing::Named(s) => Err(Error::InvalidInput(format!("ring must be \"Z\", \"Q\" or {{\"Fp\": p}}, got \"{s}\""))),
            RawRing::Prime { fp } => CoefficientRing::prime_field(*fp),
        }
    }
}

/// The input document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n: i64,
    pub intersection_matrix: Vec<Vec<i64>>,
    pub ring: RawRing,
    #[serde(default)]
    pub max_degree: Option<i64>,
    #[serde(default)]
    pub force: Option<bool>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    pub force: bool,
    pub allow_nonunimodular: bool,
}

/// A validated input document.
#[derive(Clone, Debug)]
pub struct Input {
    pub form: IntersectionForm,
    pub ring: CoefficientRing,
    pub max_degree: Option<u32>,
}

pub const EXCLUDED_DIMENSIONS: [u32; 4] = [1, 2, 4, 8];

/// Validates a parsed input document. A `force` field in the document acts
/// like the `force` option.
pub fn validate(raw: &RawConfig, opts: &ValidateOptions) -> Result<Input> {
    let opts = ValidateOptions { force: opts.force || raw.force.unwrap_or(false), ..*opts };
    if raw.n <= 0 || raw.n > u32::MAX as i64 {
        return Err(Error::InvalidInput(format!("n must be a positive integer, got {}", raw.n)));
    }
    let max_degree = match raw.max_degree {
        Some(d) if d < 0 => return Err(Error::InvalidInput(format!("max_degree must be nonnegative, got {d}"))),
        Some(d) => Some(u32::try_from(d).map_err(|_| Error::InvalidInput("max_degree too large".into()))?),
        None => None,
    };
    let ring = raw.ring.resolve()?;
    let matrix = raw.intersection_matrix.iter().map(|r| r.iter().map(|&v| IBig::from(v)).collect()).collect();
    let form = validate_matrix(raw.n as u32, matrix, &opts)?;
    Ok(Input { form, ring, max_degree })
}

pub fn validate_matrix(n: u32, matrix: Vec<Vec<Integer>>, opts: &ValidateOptions) -> Result<IntersectionForm> {
    let m = matrix.len();
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    if m == 0 {
        return Err(Error::InvalidInput("the intersection matrix must have at least one row".into()));
    }
    if let Some((i, row)) = matrix.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(Error::NonSquareMatrix { rows: m, row: i, len: row.len() });
    }
    let odd = n % 2 == 1;
    if odd && m % 2 == 1 {
        return Err(Error::OddRankSkew { n, m });
    }
    for i in 0..m {
        for j in i..m {
            let ok = if odd {
                matrix[i][j] == -matrix[j][i].clone()
            } else {
                matrix[i][j] == matrix[j][i]
            };
            if !ok {
                let kind = if odd { "skew-symmetric" } else { "symmetric" };
                return Err(Error::SymmetryViolation { n, expected: kind, i, j });
            }
        }
    }
    let mut warnings = Vec::new();
    if EXCLUDED_DIMENSIONS.contains(&n) {
        if !opts.force {
            return Err(Error::ExcludedDimension(n));
        }
        warnings.push(format!("n = {n} is outside the range where the loop homology decomposition is known to hold; results are unsupported"));
    }
    let det = determinant(&matrix);
    if crate::arith::abs(&det) != IBig::ONE {
        if !opts.allow_nonunimodular {
            return Err(Error::NotUnimodular(det.to_string()));
        }
        warnings.push(format!("intersection matrix has determinant {det}; not the form of a closed manifold"));
    }
    Ok(IntersectionForm { n, matrix, warnings })
}

/// Catalog entry names accepted by [`preset`].
pub const PRESETS: [(&str, &str); 3] = [
    ("hyperbolic", "g blocks of the hyperbolic form (symmetric for even n, skew for odd n); param: genus g"),
    ("e8", "the E8 form (even n only)"),
    ("diag", "diagonal form with the given entries (even n only)"),
];

#[derive(Clone, Debug, Default)]
pub struct PresetParams {
    pub genus: Option<u32>,
    pub entries: Vec<i64>,
}

fn e8_matrix() -> Vec<Vec<i64>> {
    // Cartan matrix of E8, Bourbaki labelling
    let edges = [(0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)];
    let mut c = vec![vec![0i64; 8]; 8];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = 2;
    }
    for (a, b) in edges {
        c[a][b] = -1;
        c[b][a] = -1;
    }
    c
}

pub fn hyperbolic_matrix(n: u32, genus: usize) -> Vec<Vec<Integer>> {
    let m = 2 * genus;
    let mut c = vec![vec![IBig::ZERO; m]; m];
    let lower = if n % 2 == 1 { IBig::NEG_ONE } else { IBig::ONE };
    for k in 0..genus {
        c[2 * k][2 * k + 1] = IBig::ONE;
        c[2 * k + 1][2 * k] = lower.clone();
    }
    c
}

/// Builds a catalog form and validates it.
pub fn preset(name: &str, n: u32, params: &PresetParams, opts: &ValidateOptions) -> Result<IntersectionForm> {
    let matrix = match name {
        "hyperbolic" => {
            let g = params.genus.unwrap_or(1);
            if g == 0 {
                return Err(Error::InvalidInput("genus must be at least 1".into()));
            }
            hyperbolic_matrix(n, g as usize)
        }
        "e8" => {
            if n % 2 == 1 {
                return Err(Error::ParityMismatch { preset: "e8".into(), n });
            }
            e8_matrix().into_iter().map(|r| r.into_iter().map(IBig::from).collect()).collect()
        }
        "diag" => {
            if n % 2 == 1 {
                return Err(Error::ParityMismatch { preset: "diag".into(), n });
            }
            if params.entries.is_empty() {
                return Err(Error::InvalidInput("diag needs at least one entry".into()));
            }
            let m = params.entries.len();
            (0..m)
                .map(|i| (0..m).map(|j| if i == j { IBig::from(params.entries[i]) } else { IBig::ZERO }).collect())
                .collect()
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    validate_matrix(n, matrix, opts)
}

fn pairing(c: &[Vec<i128>], x: &[i128], y: &[i128]) -> i128 {
    (0..x.len()).map(|i| x[i] * (0..y.len()).map(|j| c[i][j] * y[j]).sum::<i128>()).sum()
}

/// Primitive v with vᵀCv = `target`, coordinates in [-bound, bound].
fn search_vector(c: &[Vec<i128>], targets: &[i128], bound: i128) -> Option<Vec<i128>> {
    let m = c.len();
    let mut v = vec![-bound; m];
    loop {
        let first = v.iter().find(|x| **x != 0);
        if first.is_some_and(|x| *x > 0) && targets.contains(&pairing(c, &v, &v)) {
            let g = v.iter().fold(0i128, |g, x| gcd_i128(g, *x));
            if g == 1 {
                return Some(v);
            }
        }
        let mut k = 0;
        while k < m && v[k] == bound {
            v[k] = -bound;
            k += 1;
        }
        if k == m {
            return None;
        }
        v[k] += 1;
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd_i128(b, a % b)
    }
}

/// Completes the columns of `cols` (spanning a saturated sublattice) to a
/// unimodular matrix whose last columns are exactly `cols`.
fn complete_basis(m: usize, cols: &[Vec<Integer>]) -> Vec<Vec<Integer>> {
    let k = cols.len();
    let a: Vec<Vec<Integer>> = (0..m).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
    let snf = smith_normal_form(&Integers, a, true);
    (0..m)
        .map(|i| {
            let mut row: Vec<Integer> = (k..m).map(|j| snf.left_inv[i][j].clone()).collect();
            row.extend(cols.iter().map(|c| c[i].clone()));
            row
        })
        .collect()
}

/// Sign s with sC positive definite, if C is definite.
fn definite_sign(c: &[Vec<Integer>]) -> Option<i64> {
    let minors: Vec<Integer> = (1..=c.len()).map(|k| determinant(&c[..k].iter().map(|r| r[..k].to_vec()).collect::<Vec<_>>())).collect();
    [1i64, -1].into_iter().find(|&s| minors.iter().enumerate().all(|(k, d)| (d * IBig::from(s.pow(k as u32 + 1))) > IBig::ZERO))
}

fn gram(c: &[Vec<i128>], b: &[Vec<i128>]) -> Option<Vec<Vec<i128>>> {
    let m = c.len();
    let mut g = vec![vec![0i128; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0i128;
            for k in 0..m {
                for l in 0..m {
                    acc = acc.checked_add(b[k][i].checked_mul(c[k][l])?.checked_mul(b[l][j])?)?;
                }
            }
            g[i][j] = acc;
        }
    }
    Some(g)
}

/// Greedy pairwise reduction of a definite form: b_j -= r b_i while that
/// shortens b_j. Returns the basis (as columns) and the reduced Gram matrix.
fn greedy_reduce(c: &[Vec<i128>], sign: i128) -> Option<(Vec<Vec<i128>>, Vec<Vec<i128>>)> {
    let m = c.len();
    let mut b: Vec<Vec<i128>> = (0..m).map(|i| (0..m).map(|j| i128::from(i == j)).collect()).collect();
    let mut g = gram(c, &b)?;
    loop {
        let mut changed = false;
        for i in 0..m {
            for j in 0..m {
                let (gii, gij) = (sign * g[i][i], sign * g[i][j]);
                if i == j || 2 * gij.abs() <= gii {
                    continue;
                }
                let r = (2 * gij + gii).div_euclid(2 * gii);
                for row in b.iter_mut() {
                    row[j] = row[j].checked_sub(r.checked_mul(row[i])?)?;
                }
                g = gram(c, &b)?;
                changed = true;
            }
        }
        if !changed {
            return Some((b, g));
        }
    }
}

fn to_integers(v: &[Vec<i128>]) -> Vec<Vec<Integer>> {
    v.iter().map(|r| r.iter().map(|x| IBig::from(*x)).collect()).collect()
}

fn mat_mul_i128(a: &[Vec<i128>], b: &[Vec<Integer>]) -> Vec<Vec<Integer>> {
    let m = a.len();
    (0..m).map(|i| (0..m).map(|j| (0..m).map(|k| IBig::from(a[i][k]) * &b[k][j]).sum()).collect()).collect()
}

/// Largest box radius r with (2r+1)^m within the search budget.
fn search_bound(m: usize) -> i128 {
    const BUDGET: f64 = 200_000.0;
    ((BUDGET.powf(1.0 / m as f64) - 1.0) / 2.0).floor().max(0.0) as i128
}

/// A unimodular P for which PᵀCP has c_{m-1,m} = ±1 and c_{m,m} = 0, or
/// failing that c_{m,m} = ±1. The leading word u_m u_{m-1} (resp. u_m u_m)
/// of χ then carries a unit coefficient, so the quotient reduces with unit
/// pivots over every coefficient ring. Definite forms are first brought to a
/// greedily reduced basis. Returns `None` when C already has this shape or no
/// suitable vector turns up.
pub fn reduction_basis(form: &IntersectionForm) -> Option<Vec<Vec<Integer>>> {
    let m = form.m();
    if m < 2 {
        return None;
    }
    let unit = |x: &Integer| crate::arith::abs(x) == IBig::ONE;
    let (a, b) = (m - 2, m - 1);
    let cm = form.matrix();
    if cm[b][b] == IBig::ZERO && unit(&cm[a][b]) {
        return None;
    }
    let c: Vec<Vec<i128>> = cm.iter().map(|r| r.iter().map(|x| i128::try_from(x).ok()).collect::<Option<_>>()).collect::<Option<_>>()?;
    if c.iter().flatten().any(|x| x.abs() > 1 << 40) {
        return None;
    }
    let to_int = |v: &[i128]| v.iter().map(|x| IBig::from(*x)).collect::<Vec<_>>();

    if form.is_odd() {
        let mut v = vec![0i128; m];
        v[b] = 1;
        return isotropic_completion(&c, &v);
    }
    if let Some(sign) = definite_sign(cm) {
        let (basis, g) = greedy_reduce(&c, sign as i128)?;
        let mut order: Vec<usize> = (0..m).collect();
        // a unit on the diagonal goes last
        if let Some(k) = (0..m).rev().find(|&k| g[k][k].abs() == 1) {
            order.swap(k, b);
            let p: Vec<Vec<i128>> = (0..m).map(|i| order.iter().map(|&k| basis[i][k]).collect()).collect();
            let identity = p.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, x)| *x == i128::from(i == j)));
            return (!identity).then(|| to_integers(&p));
        }
        let v = (1..=search_bound(m)).find_map(|r| search_vector(&g, &[1, -1], r))?;
        return Some(mat_mul_i128(&basis, &complete_basis(m, &[to_int(&v)])));
    }
    let v = (1..=search_bound(m)).find_map(|r| search_vector(&c, &[0], r))?;
    isotropic_completion(&c, &v)
}

/// P whose last two columns are w and v, with v isotropic and (vᵀC)·w = 1.
fn isotropic_completion(c: &[Vec<i128>], v: &[i128]) -> Option<Vec<Vec<Integer>>> {
    let m = c.len();
    let row: Vec<IBig> = (0..m).map(|j| IBig::from((0..m).map(|i| v[i] * c[i][j]).sum::<i128>())).collect();
    let mut g = IBig::ZERO;
    let mut w = vec![IBig::ZERO; m];
    for (k, r) in row.iter().enumerate().filter(|(_, r)| **r != IBig::ZERO) {
        let (g2, s, t) = (&g).gcd_ext(r);
        for x in w.iter_mut() {
            *x *= &s;
        }
        w[k] = t;
        g = IBig::from(g2);
    }
    if g != IBig::ONE {
        return None;
    }
    Some(complete_basis(m, &[w, v.iter().map(|x| IBig::from(*x)).collect()]))
}

/// The form on the basis chosen by [`reduction_basis`], with that basis.
pub fn reduction_form(form: &IntersectionForm) -> Result<(IntersectionForm, Option<Vec<Vec<Integer>>>)> {
    match reduction_basis(form) {
        Some(p) => Ok((base_change(form, &p)?, Some(p))),
        None => Ok((form.clone(), None)),
    }
}

/// Replaces C by PᵀCP for a unimodular P.
pub fn base_change(form: &IntersectionForm, p: &[Vec<Integer>]) -> Result<IntersectionForm> {
    let m = form.m();
    if p.len() != m || p.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, found: p.len() });
    }
    let det = determinant(p);
    if crate::arith::abs(&det) != IBig::ONE {
        return Err(Error::NotUnimodularChange(det.to_string()));
    }
    let c = form.matrix();
    // (PᵀCP)_ij = Σ_kl P_ki C_kl P_lj
    let cp: Vec<Vec<Integer>> = (0..m)
        .map(|k| (0..m).map(|j| (0..m).map(|l| &c[k][l] * &p[l][j]).sum()).collect())
        .collect();
    let matrix = (0..m)
        .map(|i| (0..m).map(|j| (0..m).map(|k| &p[k][i] * &cp[k][j]).sum()).collect())
        .collect();
    Ok(IntersectionForm { n: form.n, matrix, warnings: form.warnings.clone() })
}
