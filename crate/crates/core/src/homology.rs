//! The three-term complex 0 → K⊗U → A⊗U → U → 0 and its homology.
//!
//! d(a_i⊗y) = [u_i, y] and d'([M]⊗y) = Σ_{i,j} c_ij a_j⊗[u_i, y]. With
//! D_ℓ : A⊗U_ℓ → U_{ℓ+1} and Dp_ℓ : K⊗U_ℓ → A⊗U_{ℓ+1}:
//!
//! * Q_ℓ = coker D_{ℓ-1} in total degree ℓ(n-1),
//! * W_ℓ = ker D_ℓ / im Dp_{ℓ-1} in total degree n + ℓ(n-1),
//! * Z_ℓ = ker Dp_ℓ in total degree 2n + ℓ(n-1).
//!
//! Over the integers ker D_ℓ is a saturated sublattice of a free module, so
//! the torsion of W_ℓ equals the torsion of coker Dp_{ℓ-1}. Every summand is
//! therefore determined by the rank and invariant factors of D and Dp.

use std::collections::BTreeMap;
use std::fmt;

use dashu_int::ops::{BitTest, UnsignedAbs};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{Integer, Integers, PrimeField, Rationals, Ring};
use crate::error::{Error, Result};
use crate::forms::{reduction_form, CoefficientRing, IntersectionForm};
use crate::linalg::{invariant_factors_of_diagonal, kernel_basis, map_invariants, MapInvariants, Outcome, Reducer};
use crate::sparse::{mat_vec, Accumulator, SparseMatrix, SparseVec};
use crate::tensor::{QuotientAlgebra, DEFAULT_SIZE_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Summand {
    Q,
    W,
    Z,
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Summand::Q => "Q",
            Summand::W => "W",
            Summand::Z => "Z",
        };
        f.write_str(s)
    }
}

impl Summand {
    /// Total degree of the word-length-`len` part.
    pub fn degree(&self, n: u32, len: usize) -> u64 {
        let base = len as u64 * (n as u64 - 1);
        match self {
            Summand::Q => base,
            Summand::W => base + n as u64,
            Summand::Z => base + 2 * n as u64,
        }
    }
}

/// D: A⊗U_{ℓ-1} → U_ℓ and Dp: K⊗U_{ℓ-1} → A⊗U_ℓ.
#[derive(Clone, Debug)]
pub struct ComplexColumn<E> {
    pub length: usize,
    pub d: SparseMatrix<E>,
    pub dp: SparseMatrix<E>,
}

/// D_ℓ : A⊗U_ℓ → U_{ℓ+1}; column `i*dim U_ℓ + b` is [u_i, e_b].
pub fn build_d<R: Ring>(alg: &QuotientAlgebra<R>, len: usize) -> Result<SparseMatrix<R::Elem>> {
    let dim = alg.dim(len)?;
    let rows = alg.dim(len + 1)?;
    let m = alg.m();
    let cols = (0..m * dim)
        .into_par_iter()
        .map(|c| alg.bracket_left(c / dim, &[((c % dim) as u32, alg.ring().one())], len))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseMatrix { rows, cols })
}

/// Column of Dp_ℓ at the basis element `b` of U_ℓ, from the brackets [u_i, e_b].
fn dprime_column<R: Ring>(ring: &R, c: &[Vec<R::Elem>], brackets: &[SparseVec<R::Elem>], rows: usize) -> SparseVec<R::Elem> {
    let m = brackets.len();
    let mut out = Vec::new();
    for j in 0..m {
        let mut acc = Accumulator::new(ring);
        for (i, br) in brackets.iter().enumerate() {
            if !ring.is_zero(&c[i][j]) {
                acc.add_scaled(&c[i][j], br);
            }
        }
        let off = (j * rows) as u32;
        out.extend(acc.finish().into_iter().map(|(k, e)| (k + off, e)));
    }
    out
}

fn form_in<R: Ring>(alg: &QuotientAlgebra<R>, form: &IntersectionForm) -> Vec<Vec<R::Elem>> {
    let ring = alg.ring();
    form.matrix().iter().map(|r| r.iter().map(|v| ring.from_integer(v)).collect()).collect()
}

/// Dp_ℓ : K⊗U_ℓ → A⊗U_{ℓ+1}; row `j*dim U_{ℓ+1} + c` is the coefficient of a_j⊗e_c.
pub fn build_dprime<R: Ring>(alg: &QuotientAlgebra<R>, form: &IntersectionForm, len: usize) -> Result<SparseMatrix<R::Elem>> {
    let dim = alg.dim(len)?;
    let next = alg.dim(len + 1)?;
    let m = alg.m();
    let c = form_in(alg, form);
    let cols = (0..dim)
        .into_par_iter()
        .map(|b| {
            let y = [(b as u32, alg.ring().one())];
            let brackets = (0..m).map(|i| alg.bracket_left(i, &y, len)).collect::<Result<Vec<_>>>()?;
            Ok(dprime_column(alg.ring(), &c, &brackets, next))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseMatrix { rows: m * next, cols })
}

pub fn complex_column<R: Ring>(alg: &QuotientAlgebra<R>, form: &IntersectionForm, len: usize) -> Result<ComplexColumn<R::Elem>> {
    assert!(len >= 1, "complex columns start at word length 1");
    Ok(ComplexColumn { length: len, d: build_d(alg, len - 1)?, dp: build_dprime(alg, form, len - 1)? })
}

/// Checks `d_out ∘ d_in = 0`, reporting the first offending column.
pub fn check_composition<R: Ring>(ring: &R, d_in: &SparseMatrix<R::Elem>, d_out: &SparseMatrix<R::Elem>, length: usize) -> Result<()> {
    if d_in.rows != d_out.ncols() {
        return Err(Error::DimensionMismatch { expected: d_out.ncols(), found: d_in.rows });
    }
    match d_in.cols.par_iter().position_first(|c| !mat_vec(ring, d_out, c).is_empty()) {
        Some(column) => Err(Error::CompositionNotZero { length, column }),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldHomology {
    pub kernel_dim: usize,
    pub image_dim: usize,
    pub homology_dim: usize,
}

/// Homology at the middle term of `d_in` followed by `d_out` over a field.
pub fn homology_field<R: Ring>(ring: &R, d_in: &SparseMatrix<R::Elem>, d_out: &SparseMatrix<R::Elem>) -> Result<FieldHomology> {
    assert!(ring.is_field(), "homology_field needs a field");
    check_composition(ring, d_in, d_out, 0)?;
    let kernel_dim = d_out.ncols() - map_invariants(ring, d_out).rank;
    let image_dim = map_invariants(ring, d_in).rank;
    Ok(FieldHomology { kernel_dim, image_dim, homology_dim: kernel_dim - image_dim })
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IntegerHomology {
    pub free_rank: usize,
    pub torsion: Vec<Integer>,
}

/// Integral homology at the middle term: free rank from the two ranks, torsion
/// from the invariant factors of `d_in`.
pub fn homology_integer(d_in: &SparseMatrix<Integer>, d_out: &SparseMatrix<Integer>) -> Result<IntegerHomology> {
    check_composition(&Integers, d_in, d_out, 0)?;
    let out = map_invariants(&Integers, d_out);
    let inn = map_invariants(&Integers, d_in);
    Ok(IntegerHomology { free_rank: d_out.ncols() - out.rank - inn.rank, torsion: inn.torsion })
}

/// One summand in one word length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummandEntry {
    pub degree: u64,
    pub summand: Summand,
    pub word_length: usize,
    pub free_rank: usize,
    pub torsion: Vec<Integer>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeTotal {
    pub degree: u64,
    pub free_rank: usize,
    /// Invariant factors of the direct sum.
    pub torsion: Vec<Integer>,
    pub summands: Vec<Summand>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedModuleSummary {
    pub n: u32,
    pub m: usize,
    pub ring: CoefficientRing,
    pub max_degree: u32,
    /// Sorted by degree, then summand.
    pub entries: Vec<SummandEntry>,
}

impl GradedModuleSummary {
    pub fn totals(&self) -> Vec<DegreeTotal> {
        let mut by_degree: BTreeMap<u64, (usize, Vec<Integer>, Vec<Summand>)> = BTreeMap::new();
        for e in &self.entries {
            let t = by_degree.entry(e.degree).or_default();
            t.0 += e.free_rank;
            t.1.extend(e.torsion.iter().cloned());
            t.2.push(e.summand);
        }
        by_degree
            .into_iter()
            .map(|(degree, (free_rank, torsion, summands))| DegreeTotal {
                degree,
                free_rank,
                torsion: invariant_factors_of_diagonal(&torsion),
                summands,
            })
            .collect()
    }

    /// Total free rank per degree, including zeros at computed degrees.
    pub fn ranks(&self) -> BTreeMap<u64, usize> {
        self.totals().into_iter().map(|t| (t.degree, t.free_rank)).collect()
    }

    pub fn rank_at(&self, degree: u64) -> usize {
        self.entries.iter().filter(|e| e.degree == degree).map(|e| e.free_rank).sum()
    }

    pub fn torsion_at(&self, degree: u64) -> Vec<Integer> {
        let all: Vec<Integer> = self.entries.iter().filter(|e| e.degree == degree).flat_map(|e| e.torsion.clone()).collect();
        invariant_factors_of_diagonal(&all)
    }

    pub fn entry(&self, summand: Summand, word_length: usize) -> Option<&SummandEntry> {
        self.entries.iter().find(|e| e.summand == summand && e.word_length == word_length)
    }

    /// Truncated Poincaré polynomial of the free part, e.g. `1 + 2t^4 + 2t^5`.
    pub fn poincare_series(&self) -> String {
        let terms: Vec<String> = self
            .ranks()
            .into_iter()
            .filter(|(_, r)| *r > 0)
            .map(|(d, r)| match (d, r) {
                (0, r) => r.to_string(),
                (1, 1) => "t".to_string(),
                (1, r) => format!("{r}t"),
                (d, 1) => format!("t^{d}"),
                (d, r) => format!("{r}t^{d}"),
            })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    }
}

/// Word lengths needed for each summand below `max_degree`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LengthPlan {
    pub q: Option<usize>,
    pub w: Option<usize>,
    pub z: Option<usize>,
}

impl LengthPlan {
    pub fn new(n: u32, max_degree: u32) -> Self {
        let step = n as u64 - 1;
        let top = |offset: u64| (max_degree as u64 >= offset).then(|| ((max_degree as u64 - offset) / step) as usize);
        LengthPlan { q: top(0), w: top(n as u64), z: top(2 * n as u64) }
    }

    /// Word lengths ℓ whose D_ℓ is needed.
    pub fn d_lengths(&self) -> Vec<usize> {
        let mut v: Vec<usize> = Vec::new();
        if let Some(q) = self.q {
            v.extend(0..q);
        }
        if let Some(w) = self.w {
            v.extend(0..=w);
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Word lengths ℓ whose Dp_ℓ is needed.
    pub fn dp_lengths(&self) -> Vec<usize> {
        let mut v: Vec<usize> = Vec::new();
        if let Some(w) = self.w {
            v.extend(0..w);
        }
        if let Some(z) = self.z {
            v.extend(0..=z);
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn max_u_length(&self) -> usize {
        let d = self.d_lengths().last().map_or(0, |l| l + 1);
        let dp = self.dp_lengths().last().map_or(0, |l| l + 1);
        d.max(dp).max(self.q.unwrap_or(0))
    }
}

/// Rank and invariant factors of every needed D and Dp, plus the d∘d' checks.
#[derive(Clone, Debug)]
pub struct ComplexInvariants {
    pub dims: Vec<usize>,
    pub d: BTreeMap<usize, MapInvariants>,
    pub dp: BTreeMap<usize, MapInvariants>,
    /// Word lengths ℓ for which D_{ℓ+1}∘Dp_ℓ = 0 was verified.
    pub composites_checked: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Task {
    D(usize),
    Dp(usize),
}

pub fn complex_invariants<R: Ring>(alg: &QuotientAlgebra<R>, form: &IntersectionForm, plan: &LengthPlan) -> Result<ComplexInvariants> {
    let top = plan.max_u_length();
    let dims = (0..=top).map(|l| alg.dim(l)).collect::<Result<Vec<_>>>()?;
    if top >= 1 {
        // build the left tables up front so the parallel tasks only read caches
        alg.left_mul(0, &[], top - 1)?;
    }
    let d_lengths = plan.d_lengths();
    let dp_lengths = plan.dp_lengths();
    let mut tasks: Vec<Task> = d_lengths.iter().map(|&l| Task::D(l)).collect();
    tasks.extend(dp_lengths.iter().map(|&l| Task::Dp(l)));
    let results = tasks
        .par_iter()
        .map(|t| -> Result<(Task, MapInvariants, bool)> {
            match *t {
                Task::D(l) => Ok((*t, map_invariants(alg.ring(), &build_d(alg, l)?), false)),
                Task::Dp(l) => {
                    let dp = build_dprime(alg, form, l)?;
                    let inv = map_invariants(alg.ring(), &dp);
                    let checked = if d_lengths.contains(&(l + 1)) {
                        let d = build_d(alg, l + 1)?;
                        check_composition(alg.ring(), &dp, &d, l)?;
                        true
                    } else {
                        false
                    };
                    Ok((*t, inv, checked))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = ComplexInvariants { dims, d: BTreeMap::new(), dp: BTreeMap::new(), composites_checked: Vec::new() };
    for (t, inv, checked) in results {
        match t {
            Task::D(l) => {
                out.d.insert(l, inv);
            }
            Task::Dp(l) => {
                out.dp.insert(l, inv);
                if checked {
                    out.composites_checked.push(l);
                }
            }
        }
    }
    Ok(out)
}

fn summary_from_invariants(form: &IntersectionForm, ring: CoefficientRing, max_degree: u32, plan: &LengthPlan, inv: &ComplexInvariants) -> GradedModuleSummary {
    let n = form.n();
    let m = form.m();
    let mut entries = Vec::new();
    let zero = MapInvariants::default();
    if let Some(q) = plan.q {
        for l in 0..=q {
            let d = if l == 0 { &zero } else { &inv.d[&(l - 1)] };
            entries.push(SummandEntry {
                degree: Summand::Q.degree(n, l),
                summand: Summand::Q,
                word_length: l,
                free_rank: inv.dims[l] - d.rank,
                torsion: d.torsion.clone(),
            });
        }
    }
    if let Some(w) = plan.w {
        for l in 0..=w {
            let dp = if l == 0 { &zero } else { &inv.dp[&(l - 1)] };
            entries.push(SummandEntry {
                degree: Summand::W.degree(n, l),
                summand: Summand::W,
                word_length: l,
                free_rank: m * inv.dims[l] - inv.d[&l].rank - dp.rank,
                torsion: dp.torsion.clone(),
            });
        }
    }
    if let Some(z) = plan.z {
        for l in 0..=z {
            entries.push(SummandEntry {
                degree: Summand::Z.degree(n, l),
                summand: Summand::Z,
                word_length: l,
                free_rank: inv.dims[l] - inv.dp[&l].rank,
                torsion: Vec::new(),
            });
        }
    }
    entries.sort_by_key(|e| (e.degree, e.summand, e.word_length));
    GradedModuleSummary { n, m, ring, max_degree, entries }
}

/// Homology summary together with the invariants it was computed from.
#[derive(Clone, Debug)]
pub struct Computation {
    pub summary: GradedModuleSummary,
    pub invariants: ComplexInvariants,
    pub plan: LengthPlan,
    /// Basis labels of U_0, U_1, ... when requested.
    pub bases: Option<Vec<Vec<String>>>,
    /// Basis change P applied before computing; the complex and any basis
    /// labels refer to PᵀCP.
    pub working_basis: Option<Vec<Vec<Integer>>>,
}

#[derive(Clone, Copy, Debug)]
pub struct ComputeOptions {
    pub size_cap: u64,
    pub emit_bases: bool,
}

impl Default for ComputeOptions {
    fn default() -> Self {
        ComputeOptions { size_cap: DEFAULT_SIZE_CAP, emit_bases: false }
    }
}

pub fn compute_with<R: Ring>(alg: &QuotientAlgebra<R>, form: &IntersectionForm, ring: CoefficientRing, max_degree: u32) -> Result<Computation> {
    let plan = LengthPlan::new(form.n(), max_degree);
    let invariants = complex_invariants(alg, form, &plan)?;
    let summary = summary_from_invariants(form, ring, max_degree, &plan, &invariants);
    Ok(Computation { summary, invariants, plan, bases: None, working_basis: None })
}

fn compute_in<R: Ring>(alg: QuotientAlgebra<R>, form: &IntersectionForm, ring: CoefficientRing, max_degree: u32, opts: &ComputeOptions) -> Result<Computation> {
    let mut comp = compute_with(&alg, form, ring, max_degree)?;
    if opts.emit_bases {
        let bases = (0..comp.invariants.dims.len())
            .map(|l| {
                let s = alg.slice(l)?;
                Ok((0..s.dim()).map(|b| s.label(b)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        comp.bases = Some(bases);
    }
    Ok(comp)
}

/// Computes on the basis given by [`reduction_form`]; the summary does not
/// depend on the basis.
pub fn compute_full(form: &IntersectionForm, ring: CoefficientRing, max_degree: u32, opts: &ComputeOptions) -> Result<Computation> {
    let cap = opts.size_cap;
    let (work, p) = reduction_form(form)?;
    let mut comp = match ring {
        CoefficientRing::Integers => compute_in(QuotientAlgebra::new(Integers, &work, cap), &work, ring, max_degree, opts),
        CoefficientRing::Rationals => compute_in(QuotientAlgebra::new(Rationals, &work, cap), &work, ring, max_degree, opts),
        CoefficientRing::PrimeField(p) => compute_in(QuotientAlgebra::new(PrimeField::new(p), &work, cap), &work, ring, max_degree, opts),
    }?;
    comp.working_basis = p;
    Ok(comp)
}

/// H_*(LM) through total degree `max_degree`.
pub fn compute(form: &IntersectionForm, ring: CoefficientRing, max_degree: u32) -> Result<GradedModuleSummary> {
    Ok(compute_full(form, ring, max_degree, &ComputeOptions::default())?.summary)
}

/// One verified composite D_{ℓ+1}∘Dp_ℓ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompositeCheck {
    pub word_length: usize,
    pub columns: usize,
    /// Largest entry of Dp_ℓ and of D_{ℓ+1}, in bits.
    pub max_entry_bits_dprime: usize,
    pub max_entry_bits_d: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexVerification {
    pub checks: Vec<CompositeCheck>,
}

fn max_bits(m: &SparseMatrix<Integer>) -> usize {
    m.cols.iter().flatten().map(|(_, e)| e.unsigned_abs().bit_len()).max().unwrap_or(0)
}

/// Checks D_{ℓ+1}∘Dp_ℓ = 0 over the integers for every ℓ ≤ `max_length`.
pub fn verify_complex_with(alg: &QuotientAlgebra<Integers>, form: &IntersectionForm, max_length: usize) -> Result<ComplexVerification> {
    alg.left_mul(0, &[], max_length + 1)?;
    let checks = (0..=max_length)
        .into_par_iter()
        .map(|l| {
            let dp = build_dprime(alg, form, l)?;
            let d = build_d(alg, l + 1)?;
            check_composition(&Integers, &dp, &d, l)?;
            Ok(CompositeCheck { word_length: l, columns: dp.ncols(), max_entry_bits_dprime: max_bits(&dp), max_entry_bits_d: max_bits(&d) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexVerification { checks })
}

/// Checks the complex of `form` on the basis given by [`reduction_form`].
pub fn verify_complex(form: &IntersectionForm, max_length: usize) -> Result<ComplexVerification> {
    let (work, _) = reduction_form(form)?;
    verify_complex_with(&QuotientAlgebra::new(Integers, &work, DEFAULT_SIZE_CAP), &work, max_length)
}

/// Basis indices of U_len spanning a complement of im D_{len-1} over a field.
/// Their classes form a basis of Q_len.
pub fn q_representatives<R: Ring>(alg: &QuotientAlgebra<R>, len: usize) -> Result<Vec<u32>> {
    let ring = alg.ring();
    assert!(ring.is_field(), "representatives are computed over a field");
    let dim = alg.dim(len)?;
    let mut red = Reducer::new(ring, dim, false);
    if len > 0 {
        for c in &build_d(alg, len - 1)?.cols {
            red.insert(c);
        }
    }
    Ok((0..dim as u32).filter(|&b| !red.is_pivot(b)).collect())
}

/// Cycles in A⊗U_len whose classes form a basis of W_len over a field. The
/// coordinate of a_i⊗e_b is `i*dim U_len + b`.
pub fn w_representatives<R: Ring>(alg: &QuotientAlgebra<R>, form: &IntersectionForm, len: usize) -> Result<Vec<SparseVec<R::Elem>>> {
    let ring = alg.ring();
    assert!(ring.is_field(), "representatives are computed over a field");
    let d = build_d(alg, len)?;
    let mut red = Reducer::new(ring, d.ncols(), false);
    if len > 0 {
        for c in &build_dprime(alg, form, len - 1)?.cols {
            red.insert(c);
        }
    }
    let mut out = Vec::new();
    for k in kernel_basis(ring, &d) {
        if let Outcome::Pivot(_) = red.insert(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

/// dim W_len over a field by rank-nullity: nullity of D_len minus the rank
/// of Dp_{len-1}, once D_len∘Dp_{len-1} = 0 has been checked over the field.
pub fn w_dimension<R: Ring>(alg: &QuotientAlgebra<R>, form: &IntersectionForm, len: usize) -> Result<usize> {
    let ring = alg.ring();
    assert!(ring.is_field(), "W is counted over a field");
    let d = build_d(alg, len)?;
    let nullity = d.ncols() - map_invariants(ring, &d).rank;
    if len == 0 {
        return Ok(nullity);
    }
    let dp = build_dprime(alg, form, len - 1)?;
    check_composition(ring, &dp, &d, len - 1)?;
    Ok(nullity - map_invariants(ring, &dp).rank)
}
