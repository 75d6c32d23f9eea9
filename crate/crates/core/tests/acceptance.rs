//! Acceptance criteria 1 to 10. Every criterion prints one PASS/FAIL line;
//! the test fails if any of them fails.

use std::time::{Duration, Instant};

use dashu_int::IBig;

use loophom::arith::Integers;
use loophom::bv::bv_report;
use loophom::forms::{base_change, preset, reduction_form, PresetParams, ValidateOptions};
use loophom::homology::{compute_full, verify_complex_with, ComputeOptions, GradedModuleSummary, Summand};
use loophom::oracles::{euler_check, permutation_matrix, random_form, random_unimodular, sphere_product_series, ucoeff_check};
use loophom::report::{build_report, canonical_json, ReportInputs};
use loophom::tensor::{chi, ideal_quotient_invariants, QuotientAlgebra, DEFAULT_SIZE_CAP};
use loophom::{CoefficientRing, IntersectionForm};

const SPHERE_DEGREE: u32 = 40;
const SPHERE_BUDGET: Duration = Duration::from_secs(30);
const SWEEP_FORMS_PER_PARITY: usize = 20;
const SWEEP_MAX_LENGTH: usize = 8;
const SWEEP_BUDGET: Duration = Duration::from_secs(120);
/// Lengths at which the ideal slice itself goes through Smith normal form.
const DIRECT_SNF_MAX_LENGTH: usize = 4;
const PRESET_DEGREE: u32 = 30;
const UCOEFF_PRIMES: [u32; 3] = [2, 3, 5];
const BASE_CHANGES_PER_PRESET: u64 = 10;

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

/// Everything one pass over criteria 1 to 9 produces.
struct Run {
    outcomes: Vec<Outcome>,
    /// Serialized reports in a fixed order, compared across runs.
    reports: Vec<String>,
}

fn hyperbolic(n: u32, g: u32) -> IntersectionForm {
    preset("hyperbolic", n, &PresetParams { genus: Some(g), ..Default::default() }, &ValidateOptions::default()).unwrap()
}

fn preset_list() -> Vec<(String, IntersectionForm)> {
    let opts = ValidateOptions::default();
    let mut out: Vec<(String, IntersectionForm)> =
        [(5, 1), (6, 1), (7, 1), (5, 2), (6, 2)].iter().map(|&(n, g)| (format!("hyperbolic n={n} g={g}"), hyperbolic(n, g))).collect();
    out.push(("e8 n=10".into(), preset("e8", 10, &PresetParams::default(), &opts).unwrap()));
    for entries in [vec![1, 1], vec![1, -1]] {
        let f = preset("diag", 6, &PresetParams { entries: entries.clone(), ..Default::default() }, &opts).unwrap();
        out.push((format!("diag n=6 {entries:?}"), f));
    }
    out
}

/// n ∈ {5,7,9} with m ∈ {2,4} and n ∈ {6,10} with m ∈ {1,...,4}.
fn sweep_forms() -> Vec<IntersectionForm> {
    let mut forms = Vec::new();
    for i in 0..SWEEP_FORMS_PER_PARITY {
        forms.push(random_form([5, 7, 9][i % 3], [2, 4][i % 2], i as u64).unwrap());
    }
    for i in 0..SWEEP_FORMS_PER_PARITY {
        forms.push(random_form([6, 10][i % 2], 1 + i % 4, i as u64).unwrap());
    }
    forms
}

/// dim U_ℓ from the Hilbert series 1/(1 - mt + t²), or (1 + t) when m = 1.
fn hilbert_dims(m: usize, max_len: usize) -> Vec<i64> {
    let mut d = vec![1i64];
    for l in 1..=max_len {
        let next = if m == 1 {
            if l == 1 {
                1
            } else {
                0
            }
        } else {
            m as i64 * d[l - 1] - if l >= 2 { d[l - 2] } else { 0 }
        };
        d.push(next);
    }
    d
}

fn report_json(form: &IntersectionForm, ring: CoefficientRing, max_degree: u32) -> (GradedModuleSummary, String) {
    let comp = compute_full(form, ring, max_degree, &ComputeOptions::default()).unwrap();
    let doc = build_report(ReportInputs { form, ring, size_cap: DEFAULT_SIZE_CAP, computation: &comp, bv: None, timing_ms: None });
    (comp.summary.clone(), canonical_json(&doc))
}

/// (ring, n, m, summary) for every compute run, checked by criterion 8.
type Summaries = Vec<(IntersectionForm, GradedModuleSummary)>;

fn criterion_1(reports: &mut Vec<String>, seen: &mut Summaries) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in [5u32, 7] {
        let f = hyperbolic(n, 1);
        let (s, json) = report_json(&f, CoefficientRing::Rationals, SPHERE_DEGREE);
        let series = sphere_product_series(n, 1, SPHERE_DEGREE as u64).unwrap();
        for k in 0..=SPHERE_DEGREE as u64 {
            if s.rank_at(k) as u64 != series.get(k) {
                failures.push(format!("n={n} degree {k}: {} != {}", s.rank_at(k), series.get(k)));
            }
        }
        reports.push(json);
        seen.push((f, s));
    }
    let elapsed = start.elapsed();
    let in_time = elapsed < SPHERE_BUDGET;
    Outcome {
        id: 1,
        name: "sphere-product oracle",
        passed: failures.is_empty() && in_time,
        detail: format!("{} mismatches, {:.1}s (budget {}s) {}", failures.len(), elapsed.as_secs_f64(), SPHERE_BUDGET.as_secs(), failures.join("; ")),
    }
}

/// Criteria 2, 3 and 4 share one sweep.
fn criteria_2_3_4(reports: &mut Vec<String>) -> [Outcome; 3] {
    let start = Instant::now();
    let mut composite_fail = Vec::new();
    let mut euler_fail = Vec::new();
    let mut torsion_fail = Vec::new();
    let mut slices = 0usize;
    for (k, f) in sweep_forms().iter().enumerate() {
        let label = format!("form {k} (n={}, m={})", f.n(), f.m());
        let (work, _) = reduction_form(f).unwrap();
        let alg = QuotientAlgebra::new(Integers, &work, DEFAULT_SIZE_CAP);
        match verify_complex_with(&alg, &work, SWEEP_MAX_LENGTH) {
            Ok(v) => reports.push(canonical_json(&v)),
            Err(e) => composite_fail.push(format!("{label}: {e}")),
        }

        let expected = hilbert_dims(f.m(), SWEEP_MAX_LENGTH + 1);
        for (l, want) in expected.iter().enumerate() {
            slices += 1;
            match alg.dim(l) {
                Ok(d) if d as i64 == *want => {}
                Ok(d) => torsion_fail.push(format!("{label}: rank of U_{l} is {d}, expected {want}")),
                Err(e) => torsion_fail.push(format!("{label}: U_{l}: {e}")),
            }
        }
        for (l, want) in expected.iter().enumerate().take(DIRECT_SNF_MAX_LENGTH + 1).skip(2) {
            match ideal_quotient_invariants(&chi(f), l, DEFAULT_SIZE_CAP) {
                Ok((rank, torsion)) if torsion.is_empty() && rank as i64 == *want => {}
                Ok((rank, torsion)) => torsion_fail.push(format!("{label}: length {l} quotient rank {rank}, factors {torsion:?}")),
                Err(e) => torsion_fail.push(format!("{label}: length {l}: {e}")),
            }
        }

        for ring in [CoefficientRing::Rationals, CoefficientRing::PrimeField(2)] {
            match euler_check(f, ring, SWEEP_MAX_LENGTH, DEFAULT_SIZE_CAP) {
                Ok(e) if e.passed => reports.push(canonical_json(&e)),
                Ok(e) => euler_fail.push(format!("{label} over {ring}: {:?}", e.rows.iter().find(|r| r.slices != r.homology))),
                Err(e) => euler_fail.push(format!("{label} over {ring}: {e}")),
            }
        }
        eprintln!("  {label} done at {:.1}s", start.elapsed().as_secs_f64());
    }
    let elapsed = start.elapsed();
    let in_time = elapsed < SWEEP_BUDGET;
    let forms = 2 * SWEEP_FORMS_PER_PARITY;
    let timing = format!("{:.1}s for the whole sweep (budget {}s)", elapsed.as_secs_f64(), SWEEP_BUDGET.as_secs());
    [
        Outcome {
            id: 2,
            name: "chain-complex soundness",
            passed: composite_fail.is_empty() && in_time,
            detail: format!("{forms} forms, lengths 0..={SWEEP_MAX_LENGTH}, {timing} {}", composite_fail.join("; ")),
        },
        Outcome {
            id: 3,
            name: "Euler identity over Q and F2",
            passed: euler_fail.is_empty(),
            detail: format!("{forms} forms, {} failures {}", euler_fail.len(), euler_fail.join("; ")),
        },
        Outcome {
            id: 4,
            name: "U is free over Z",
            passed: torsion_fail.is_empty(),
            detail: format!("{slices} slices, {} failures {}", torsion_fail.len(), torsion_fail.join("; ")),
        },
    ]
}

// U = Z<u1,u2>/(u1u2 + u2u1) for the hyperbolic form with n = 6, both
// generators in odd degree 5. U_2 is free on u1², u1u2, u2². D_1 sends a_i⊗u_j
// to the anticommutator u_iu_j + u_ju_i, so its image is spanned by 2u1²,
// 2u2² and u1u2 + u2u1 = 0. Hence Q_2 = coker D_1 = Z ⊕ Z/2 ⊕ Z/2 in degree 10.
fn criterion_5(reports: &mut Vec<String>, seen: &mut Summaries) -> Outcome {
    let f = hyperbolic(6, 1);
    let (s, json) = report_json(&f, CoefficientRing::Integers, 12);
    let entry = s.entry(Summand::Q, 2).cloned();
    reports.push(json);
    seen.push((f, s));
    let passed = entry.as_ref().is_some_and(|e| e.degree == 10 && e.free_rank == 1 && e.torsion == vec![IBig::from(2), IBig::from(2)]);
    Outcome {
        id: 5,
        name: "integral torsion at degree 10",
        passed,
        detail: match entry {
            Some(e) => format!("Q_2 in degree {}: rank {}, factors {:?}", e.degree, e.free_rank, e.torsion),
            None => "no Q_2 entry".into(),
        },
    }
}

fn criterion_6(reports: &mut Vec<String>, seen: &mut Summaries) -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, f) in preset_list() {
        let (z, json) = report_json(&f, CoefficientRing::Integers, PRESET_DEGREE);
        reports.push(json);
        for p in UCOEFF_PRIMES {
            let (fp, json) = report_json(&f, CoefficientRing::PrimeField(p), PRESET_DEGREE);
            reports.push(json);
            let out = ucoeff_check(&z, &fp, p);
            checked += out.checked;
            if !out.passed {
                failures.push(format!("{name} F{p}: {:?}", out.first_mismatch));
            }
            seen.push((f.clone(), fp));
        }
        seen.push((f, z));
    }
    Outcome {
        id: 6,
        name: "universal coefficients",
        passed: failures.is_empty(),
        detail: format!("{} presets, {checked} degrees, {} failures {}", preset_list().len(), failures.len(), failures.join("; ")),
    }
}

fn criterion_7(reports: &mut Vec<String>, seen: &mut Summaries) -> Outcome {
    let mut failures = Vec::new();
    let mut runs = 0;
    for (name, f) in preset_list() {
        let m = f.m();
        let (reference, _) = report_json(&f, CoefficientRing::Integers, PRESET_DEGREE);
        let mut changes: Vec<(String, Vec<Vec<IBig>>)> =
            (0..BASE_CHANGES_PER_PRESET).map(|s| (format!("seed {s}"), random_unimodular(m, s))).collect();
        changes.push(("reversal".into(), permutation_matrix(&(0..m).rev().collect::<Vec<_>>())));
        for (label, p) in changes {
            let g = base_change(&f, &p).unwrap();
            let (s, json) = report_json(&g, CoefficientRing::Integers, PRESET_DEGREE);
            runs += 1;
            if s.entries != reference.entries {
                failures.push(format!("{name} {label}"));
            }
            reports.push(json);
            seen.push((g, s));
        }
    }
    Outcome {
        id: 7,
        name: "base-change and permutation invariance",
        passed: failures.is_empty(),
        detail: format!("{runs} changed bases, {} failures {}", failures.len(), failures.join("; ")),
    }
}

fn criterion_8(seen: &Summaries) -> Outcome {
    let mut failures = Vec::new();
    for (f, s) in seen {
        let n = f.n() as u64;
        let label = format!("n={} m={} {}", f.n(), f.m(), s.ring);
        if s.rank_at(0) != 1 {
            failures.push(format!("{label}: degree 0 has rank {}", s.rank_at(0)));
        }
        if s.max_degree as u64 >= n && s.rank_at(n) != f.m() {
            failures.push(format!("{label}: degree {n} has rank {}", s.rank_at(n)));
        }
        if s.max_degree as u64 >= 2 * n && s.entry(Summand::Z, 0).map(|e| e.free_rank) != Some(1) {
            failures.push(format!("{label}: Z_0 is not of rank 1"));
        }
    }
    Outcome {
        id: 8,
        name: "forced low-degree ranks",
        passed: failures.is_empty() && !seen.is_empty(),
        detail: format!("{} runs, {} failures {}", seen.len(), failures.len(), failures.join("; ")),
    }
}

fn criterion_9(reports: &mut Vec<String>) -> Outcome {
    let mut failures = Vec::new();
    let mut rows = 0;
    for n in [5u32, 7] {
        for g in [1u32, 2] {
            match bv_report(&hyperbolic(n, g), 4 * n) {
                Ok(r) => {
                    rows += r.w_rows.len();
                    if r.w_rows.is_empty() || r.w_rows.iter().any(|w| w.witness.is_none()) {
                        failures.push(format!("n={n} g={g}: W rows without a quotient by β"));
                    }
                    reports.push(canonical_json(&r));
                }
                Err(e) => failures.push(format!("n={n} g={g}: {e}")),
            }
        }
    }
    Outcome {
        id: 9,
        name: "divisibility by β",
        passed: failures.is_empty(),
        detail: format!("{rows} W classes, {} failures {}", failures.len(), failures.join("; ")),
    }
}

fn run_all() -> Run {
    let start = Instant::now();
    let progress = |what: &str| eprintln!("[{:>7.1}s] {what}", start.elapsed().as_secs_f64());
    let mut reports = Vec::new();
    let mut seen = Summaries::new();
    let mut outcomes = vec![criterion_1(&mut reports, &mut seen)];
    progress("criterion 1");
    outcomes.extend(criteria_2_3_4(&mut reports));
    progress("criteria 2-4");
    outcomes.push(criterion_5(&mut reports, &mut seen));
    outcomes.push(criterion_6(&mut reports, &mut seen));
    progress("criteria 5-6");
    outcomes.push(criterion_7(&mut reports, &mut seen));
    progress("criterion 7");
    outcomes.push(criterion_8(&seen));
    outcomes.push(criterion_9(&mut reports));
    progress("criteria 8-9");
    Run { outcomes, reports }
}

#[test]
fn acceptance() {
    let first = run_all();
    let second = run_all();
    let differing: Vec<usize> = (0..first.reports.len().max(second.reports.len()))
        .filter(|&i| first.reports.get(i) != second.reports.get(i))
        .collect();
    let verdicts_match = first.outcomes.iter().zip(&second.outcomes).all(|(a, b)| a.passed == b.passed);
    let mut outcomes = first.outcomes;
    outcomes.push(Outcome {
        id: 10,
        name: "determinism",
        passed: differing.is_empty() && verdicts_match && !first.reports.is_empty(),
        detail: format!("{} reports compared, {} differ {:?}", first.reports.len(), differing.len(), differing),
    });
    outcomes.sort_by_key(|o| o.id);
    for o in &outcomes {
        println!("criterion {:>2} {} {}: {}", o.id, if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail.trim_end());
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
