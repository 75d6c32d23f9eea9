//! Abelianized BV composites for odd n over Q.
//!
//! For odd n the generators u_i have even degree, S(V) is a polynomial ring
//! and the a_i anticommute in S(A). On a Q-class the composite η_w∘Δ is the
//! derivation u^e ↦ Σ_i e_i a_i⊗u^{e-1_i}; on a W-class η_z∘Δ sends a_i⊗u^e to
//! Σ_j e_j a_i a_j⊗u^{e-1_j}, which is then divided by β = Σ_{i<j} c_ij a_i a_j
//! to land in K⊗S(V).

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{Rational, Rationals};
use crate::error::{Error, Result};
use crate::forms::IntersectionForm;
use crate::homology::{q_representatives, w_representatives, LengthPlan, Summand};
use crate::linalg::solve;
use crate::sparse::{SparseMatrix, SparseVec};
use crate::tensor::{render_combination, QuotientAlgebra, DEFAULT_SIZE_CAP};

/// u_1^{e_1}⋯u_m^{e_m} in S(V).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymMonomial {
    pub exponents: Vec<u32>,
}

impl SymMonomial {
    pub fn one(m: usize) -> Self {
        SymMonomial { exponents: vec![0; m] }
    }

    pub fn word_length(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn bumped(&self, i: usize, up: bool) -> SymMonomial {
        let mut e = self.exponents.clone();
        if up {
            e[i] += 1;
        } else {
            e[i] -= 1;
        }
        SymMonomial { exponents: e }
    }

    pub fn mul(&self, other: &SymMonomial) -> SymMonomial {
        SymMonomial { exponents: self.exponents.iter().zip(&other.exponents).map(|(a, b)| a + b).collect() }
    }
}

impl fmt::Display for SymMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word_length() == 0 {
            return write!(f, "1");
        }
        for (i, e) in self.exponents.iter().enumerate() {
            match e {
                0 => {}
                1 => write!(f, "u{}", i + 1)?,
                e => write!(f, "u{}^{}", i + 1, e)?,
            }
        }
        Ok(())
    }
}

/// Element of S(V), or of K⊗S(V) with [M] left implicit.
pub type SymPoly = BTreeMap<SymMonomial, Rational>;
/// Element of A⊗S(V), keyed by (i, monomial) for a_i⊗u^e.
pub type APoly = BTreeMap<(usize, SymMonomial), Rational>;
/// Element of Λ²A⊗S(V), keyed by ((i, j), monomial) with i < j for a_i a_j⊗u^e.
pub type ExteriorPoly = BTreeMap<((usize, usize), SymMonomial), Rational>;

fn add_term<K: Ord>(map: &mut BTreeMap<K, Rational>, key: K, coef: Rational) {
    if coef == Rational::ZERO {
        return;
    }
    match map.entry(key) {
        Entry::Vacant(v) => {
            v.insert(coef);
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += coef;
            if *o.get() == Rational::ZERO {
                o.remove();
            }
        }
    }
}

pub fn poly_mul(p: &SymPoly, q: &SymPoly) -> SymPoly {
    let mut out = SymPoly::new();
    for (a, x) in p {
        for (b, y) in q {
            add_term(&mut out, a.mul(b), x * y);
        }
    }
    out
}

/// The derivation u^e ↦ Σ_i e_i a_i⊗u^{e-1_i}.
pub fn delta_q(p: &SymPoly) -> APoly {
    let mut out = APoly::new();
    for (mono, coef) in p {
        for (i, &e) in mono.exponents.iter().enumerate() {
            if e > 0 {
                add_term(&mut out, (i, mono.bumped(i, false)), coef * Rational::from(e));
            }
        }
    }
    out
}

/// a_i⊗u^e ↦ Σ_j e_j a_i a_j⊗u^{e-1_j} with a_i a_i = 0 and a_j a_i = -a_i a_j.
pub fn delta_w(w: &APoly) -> ExteriorPoly {
    let mut out = ExteriorPoly::new();
    for ((i, mono), coef) in w {
        for (j, &e) in mono.exponents.iter().enumerate() {
            if e == 0 || j == *i {
                continue;
            }
            let c = coef * Rational::from(e);
            let key = (((*i).min(j), (*i).max(j)), mono.bumped(j, false));
            add_term(&mut out, key, if *i < j { c } else { -c });
        }
    }
    out
}

/// β = Σ_{i<j} c_ij a_i a_j as a sparse vector over pairs i < j.
fn beta_pairs(form: &IntersectionForm) -> BTreeMap<(usize, usize), Rational> {
    let mut out = BTreeMap::new();
    for i in 0..form.m() {
        for j in i + 1..form.m() {
            let c = form.entry(i, j);
            if *c != crate::arith::Integer::ZERO {
                out.insert((i, j), Rational::from(c.clone()));
            }
        }
    }
    out
}

fn pair_index(m: usize, i: usize, j: usize) -> u32 {
    (i * m + j) as u32
}

/// Writes x = β⊗q and returns q, where multiplication by β is inverted by an
/// exact linear solve on each monomial.
pub fn divide_by_beta(x: &ExteriorPoly, form: &IntersectionForm) -> Result<SymPoly> {
    let m = form.m();
    let q = Rationals;
    let beta = beta_pairs(form);
    let column: SparseVec<Rational> = beta.iter().map(|(&(i, j), c)| (pair_index(m, i, j), c.clone())).collect();
    let beta_map = SparseMatrix { rows: m * m, cols: vec![column] };
    let mut by_mono: BTreeMap<&SymMonomial, SparseVec<Rational>> = BTreeMap::new();
    for (((i, j), mono), c) in x {
        by_mono.entry(mono).or_default().push((pair_index(m, *i, *j), c.clone()));
    }
    let mut out = SymPoly::new();
    for (mono, mut target) in by_mono {
        target.sort_by_key(|e| e.0);
        match solve(&q, &beta_map, &target) {
            Some(sol) => {
                for (_, c) in sol {
                    add_term(&mut out, mono.clone(), c);
                }
            }
            None => return Err(Error::NotDivisible(render_exterior(x))),
        }
    }
    Ok(out)
}

pub fn render_sym(p: &SymPoly, prefix: &str) -> String {
    render_combination(&Rationals, p.iter().map(|(mono, c)| (format!("{prefix}{mono}"), c.clone())))
}

pub fn render_a(p: &APoly) -> String {
    render_combination(&Rationals, p.iter().map(|((i, mono), c)| (format!("a{}⊗{}", i + 1, mono), c.clone())))
}

pub fn render_exterior(p: &ExteriorPoly) -> String {
    render_combination(&Rationals, p.iter().map(|(((i, j), mono), c)| (format!("a{}a{}⊗{}", i + 1, j + 1, mono), c.clone())))
}

/// Abelianization of U over Q, cached per word length.
pub struct Abelianizer<'a> {
    alg: &'a QuotientAlgebra<Rationals>,
    tables: Vec<Vec<SymPoly>>,
}

impl<'a> Abelianizer<'a> {
    pub fn new(alg: &'a QuotientAlgebra<Rationals>) -> Result<Self> {
        if alg.n() % 2 == 0 {
            return Err(Error::ParityUnsupported(alg.n()));
        }
        let one = SymPoly::from([(SymMonomial::one(alg.m()), Rational::ONE)]);
        Ok(Abelianizer { alg, tables: vec![vec![one]] })
    }

    fn table(&mut self, len: usize) -> Result<&[SymPoly]> {
        let m = self.alg.m();
        while self.tables.len() <= len {
            let l = self.tables.len();
            let slice = self.alg.slice(l)?;
            let below = &self.tables[l - 1];
            let table: Vec<SymPoly> = (0..slice.dim())
                .into_par_iter()
                .map(|b| {
                    let mut out = SymPoly::new();
                    for (cand, coef) in slice.lift(b) {
                        let (b1, c) = (*cand as usize / m, *cand as usize % m);
                        for (mono, x) in &below[b1] {
                            add_term(&mut out, mono.bumped(c, true), coef * x);
                        }
                    }
                    out
                })
                .collect();
            self.tables.push(table);
        }
        Ok(&self.tables[len])
    }

    /// η on an element of U_len.
    pub fn abelianize(&mut self, y: &[(u32, Rational)], len: usize) -> Result<SymPoly> {
        let dim = self.alg.dim(len)?;
        let table = self.table(len)?;
        let mut out = SymPoly::new();
        for (b, coef) in y {
            let image = table.get(*b as usize).ok_or(Error::DimensionMismatch { expected: dim, found: *b as usize + 1 })?;
            for (mono, x) in image {
                add_term(&mut out, mono.clone(), coef * x);
            }
        }
        Ok(out)
    }

    /// η applied to the U-factor of an element of A⊗U_len.
    pub fn abelianize_a(&mut self, v: &[(u32, Rational)], len: usize) -> Result<APoly> {
        let dim = self.alg.dim(len)?;
        let mut out = APoly::new();
        for (k, coef) in v {
            let (i, b) = (*k as usize / dim, *k as usize % dim);
            for (mono, x) in self.abelianize(&[(b as u32, Rational::ONE)], len)? {
                add_term(&mut out, (i, mono), coef * &x);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BvRow {
    pub summand: Summand,
    pub word_length: usize,
    pub degree: u64,
    pub output_degree: u64,
    pub input: String,
    pub output: String,
    /// δ_w∘η_w image before division by β (W rows only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BvReport {
    pub beta: String,
    pub q_rows: Vec<BvRow>,
    pub w_rows: Vec<BvRow>,
    pub z_rule: String,
}

impl BvRow {
    pub fn line(&self) -> String {
        format!("{} ↦ {}", self.input, self.output)
    }
}

fn render_a_u(alg: &QuotientAlgebra<Rationals>, v: &[(u32, Rational)], len: usize) -> Result<String> {
    let slice = alg.slice(len)?;
    let dim = slice.dim();
    Ok(render_combination(
        &Rationals,
        v.iter().map(|(k, c)| (format!("a{}⊗{}", *k as usize / dim + 1, slice.label(*k as usize % dim)), c.clone())),
    ))
}

/// Tabulates η_w∘Δ on a basis of Q and η_z∘Δ on a basis of W through total
/// degree `max_degree`.
pub fn bv_report(form: &IntersectionForm, max_degree: u32) -> Result<BvReport> {
    bv_report_with(form, max_degree, DEFAULT_SIZE_CAP)
}

pub fn bv_report_with(form: &IntersectionForm, max_degree: u32, size_cap: u64) -> Result<BvReport> {
    let n = form.n();
    if n % 2 == 0 {
        return Err(Error::ParityUnsupported(n));
    }
    if n <= 3 {
        return Err(Error::NotApplicable(format!("the BV composites need n > 3, got n = {n}")));
    }
    let alg = QuotientAlgebra::new(Rationals, form, size_cap);
    let mut ab = Abelianizer::new(&alg)?;
    let plan = LengthPlan::new(n, max_degree);
    let step = n as u64 - 1;
    let mut q_rows = Vec::new();
    for l in 0..=plan.q.unwrap_or(0) {
        if plan.q.is_none() {
            break;
        }
        let slice = alg.slice(l)?;
        for b in q_representatives(&alg, l)? {
            let image = delta_q(&ab.abelianize(&[(b, Rational::ONE)], l)?);
            let degree = Summand::Q.degree(n, l);
            q_rows.push(BvRow {
                summand: Summand::Q,
                word_length: l,
                degree,
                output_degree: image.keys().next().map_or(degree + 1, |(_, mono)| n as u64 + mono.word_length() as u64 * step),
                input: format!("Q[{}]", slice.label(b as usize)),
                output: render_a(&image),
                witness: None,
            });
        }
    }
    let mut w_rows = Vec::new();
    if let Some(w) = plan.w {
        for l in 0..=w {
            for rep in w_representatives(&alg, form, l)? {
                let image = delta_w(&ab.abelianize_a(&rep, l)?);
                let input = format!("W[{}]", render_a_u(&alg, &rep, l)?);
                let quotient = divide_by_beta(&image, form).map_err(|e| match e {
                    Error::NotDivisible(w) => Error::TheoremViolation(format!("{input}: {w}")),
                    other => other,
                })?;
                let degree = Summand::W.degree(n, l);
                w_rows.push(BvRow {
                    summand: Summand::W,
                    word_length: l,
                    degree,
                    output_degree: quotient.keys().next().map_or(degree + 1, |mono| 2 * n as u64 + mono.word_length() as u64 * step),
                    input,
                    output: render_sym(&quotient, "[M]⊗"),
                    witness: Some(render_exterior(&image)),
                });
            }
        }
    }
    let beta = ExteriorPoly::from_iter(beta_pairs(form).into_iter().map(|(p, c)| ((p, SymMonomial::one(form.m())), c)));
    Ok(BvReport { beta: render_exterior(&beta).replace("⊗1", ""), q_rows, w_rows, z_rule: "Δ(Z) = 0".to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{preset, PresetParams, ValidateOptions};
    use crate::homology::{build_d, build_dprime};
    use crate::sparse::axpy;

    fn hyperbolic(n: u32, g: u32) -> IntersectionForm {
        preset("hyperbolic", n, &PresetParams { genus: Some(g), entries: vec![] }, &ValidateOptions::default()).unwrap()
    }

    fn mono(e: &[u32]) -> SymMonomial {
        SymMonomial { exponents: e.to_vec() }
    }

    fn r(v: i64) -> Rational {
        Rational::from(v)
    }

    #[test]
    fn delta_q_examples() {
        let p = SymPoly::from([(mono(&[1, 1]), r(1))]);
        assert_eq!(delta_q(&p), APoly::from([((0, mono(&[0, 1])), r(1)), ((1, mono(&[1, 0])), r(1))]));
        let p = SymPoly::from([(mono(&[3, 0]), r(1))]);
        assert_eq!(delta_q(&p), APoly::from([((0, mono(&[2, 0])), r(3))]));
        assert!(delta_q(&SymPoly::from([(mono(&[0, 0]), r(1))])).is_empty());
    }

    #[test]
    fn delta_w_examples() {
        let a1u2 = APoly::from([((0, mono(&[0, 1])), r(1))]);
        assert_eq!(delta_w(&a1u2), ExteriorPoly::from([(((0, 1), mono(&[0, 0])), r(1))]));
        let a2u1 = APoly::from([((1, mono(&[1, 0])), r(1))]);
        assert_eq!(delta_w(&a2u1), ExteriorPoly::from([(((0, 1), mono(&[0, 0])), r(-1))]));
        let a1u1 = APoly::from([((0, mono(&[1, 0])), r(1))]);
        assert!(delta_w(&a1u1).is_empty());
    }

    #[test]
    fn divide_examples() {
        let f = hyperbolic(5, 1);
        let x = ExteriorPoly::from([(((0, 1), mono(&[0, 0])), r(2))]);
        assert_eq!(divide_by_beta(&x, &f).unwrap(), SymPoly::from([(mono(&[0, 0]), r(2))]));
        assert!(divide_by_beta(&ExteriorPoly::new(), &f).unwrap().is_empty());
        let g = hyperbolic(5, 2);
        let one = mono(&[0, 0, 0, 0]);
        let x = ExteriorPoly::from([(((0, 1), one.clone()), r(1)), (((0, 2), one), r(1))]);
        assert!(matches!(divide_by_beta(&x, &g), Err(Error::NotDivisible(_))));
    }

    #[test]
    fn abelianization() {
        let f = hyperbolic(5, 1);
        let alg = QuotientAlgebra::new(Rationals, &f, DEFAULT_SIZE_CAP);
        let mut ab = Abelianizer::new(&alg).unwrap();
        let y = alg.reduce_letters(&crate::tensor::Word::from_one_based(&[2, 1])).unwrap();
        assert_eq!(ab.abelianize(&y, 2).unwrap(), SymPoly::from([(mono(&[1, 1]), r(1))]));
        // brackets die
        let g = crate::oracles::random_form(7, 4, 3).unwrap();
        let alg = QuotientAlgebra::new(Rationals, &g, DEFAULT_SIZE_CAP);
        let mut ab = Abelianizer::new(&alg).unwrap();
        for l in 0..3 {
            for c in build_d(&alg, l).unwrap().cols {
                assert!(ab.abelianize(&c, l + 1).unwrap().is_empty());
            }
        }
        // χ dies
        let chi: SparseVec<Rational> = alg.chi().as_vector().into_iter().map(|(i, c)| (i, Rational::from(c))).collect();
        let class = alg.reduce_ambient(2, &chi).unwrap();
        assert!(class.is_empty());
        let even = hyperbolic(6, 1);
        let alg = QuotientAlgebra::new(Rationals, &even, DEFAULT_SIZE_CAP);
        assert!(matches!(Abelianizer::new(&alg), Err(Error::ParityUnsupported(6))));
    }

    #[test]
    fn report_rows() {
        let f = hyperbolic(5, 1);
        let rep = bv_report(&f, 13).unwrap();
        let q_lines: Vec<String> = rep.q_rows.iter().map(BvRow::line).collect();
        assert!(q_lines.contains(&"Q[u1u2] ↦ a1⊗u2 + a2⊗u1".to_string()), "{q_lines:?}");
        let w_lines: Vec<String> = rep.w_rows.iter().map(BvRow::line).collect();
        assert!(w_lines.contains(&"W[a1⊗u2] ↦ [M]⊗1".to_string()), "{w_lines:?}");
        assert_eq!(rep.beta, "a1a2");
        for row in rep.q_rows.iter().chain(&rep.w_rows) {
            assert_eq!(row.output_degree, row.degree + 1);
        }
        assert!(matches!(bv_report(&hyperbolic(6, 1), 13), Err(Error::ParityUnsupported(6))));
        let three = hyperbolic(3, 1);
        assert!(matches!(bv_report(&three, 10), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn representative_independence() {
        let f = crate::oracles::random_form(7, 4, 11).unwrap();
        let alg = QuotientAlgebra::new(Rationals, &f, DEFAULT_SIZE_CAP);
        let mut ab = Abelianizer::new(&alg).unwrap();
        for l in 1..3 {
            let d = build_d(&alg, l - 1).unwrap();
            for b in q_representatives(&alg, l).unwrap() {
                let base = vec![(b, Rational::ONE)];
                let shifted = axpy(&Rationals, &base, &r(3), &d.cols[d.ncols() / 2]);
                assert_eq!(delta_q(&ab.abelianize(&base, l).unwrap()), delta_q(&ab.abelianize(&shifted, l).unwrap()));
            }
            let dp = build_dprime(&alg, &f, l - 1).unwrap();
            for rep in w_representatives(&alg, &f, l).unwrap() {
                let shifted = axpy(&Rationals, &rep, &r(-2), &dp.cols[0]);
                let a = divide_by_beta(&delta_w(&ab.abelianize_a(&rep, l).unwrap()), &f).unwrap();
                let b = divide_by_beta(&delta_w(&ab.abelianize_a(&shifted, l).unwrap()), &f).unwrap();
                assert_eq!(a, b);
            }
        }
    }
}
