//! Report documents and their JSON, CSV and table renderings.

use serde::{Serialize, Serializer};

use crate::arith::Integer;
use crate::bv::BvReport;
use crate::forms::{CoefficientRing, IntersectionForm};
use crate::homology::{Computation, GradedModuleSummary, Summand};

pub const TOOL: &str = "loophom";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// An integer that serializes as a JSON number when it fits in 64 bits and
/// as a decimal string otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JsonInt(pub Integer);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(&self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

fn json_ints(v: &[Integer]) -> Vec<JsonInt> {
    v.iter().cloned().map(JsonInt).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FormEcho {
    pub n: u32,
    pub m: usize,
    pub intersection_matrix: Vec<Vec<JsonInt>>,
}

impl FormEcho {
    pub fn new(form: &IntersectionForm) -> Self {
        FormEcho { n: form.n(), m: form.m(), intersection_matrix: form.matrix().iter().map(|r| json_ints(r)).collect() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub form: FormEcho,
    pub ring: String,
    pub max_degree: u32,
    pub size_cap: u64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HomologyRow {
    pub degree: u64,
    pub summand: Summand,
    pub word_length: usize,
    pub free_rank: usize,
    pub torsion: Vec<JsonInt>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TotalRow {
    pub degree: u64,
    pub free_rank: usize,
    pub torsion: Vec<JsonInt>,
    pub summands: Vec<Summand>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositeSummary {
    pub passed: bool,
    /// Word lengths ℓ with D_{ℓ+1}∘Dp_ℓ checked to vanish.
    pub word_lengths: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EulerSummary {
    pub passed: bool,
    pub word_lengths: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub composites: CompositeSummary,
    pub euler: EulerSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisRow {
    pub word_length: usize,
    pub basis: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub metadata: Metadata,
    pub homology: Vec<HomologyRow>,
    pub totals: Vec<TotalRow>,
    pub poincare_series: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bv: Option<BvReport>,
    pub verification: Verification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bases: Option<Vec<BasisRow>>,
}

/// dim U_ℓ - m dim U_{ℓ-1} + dim U_{ℓ-2} = Q_ℓ - W_{ℓ-1} + Z_{ℓ-2} on the
/// computed free ranks, for every ℓ where all three summands were computed.
pub fn inline_euler(comp: &Computation) -> EulerSummary {
    let s = &comp.summary;
    let dims = &comp.invariants.dims;
    let mut passed = true;
    let mut word_lengths = Vec::new();
    for l in 2..dims.len() {
        let (Some(q), Some(w), Some(z)) = (s.entry(Summand::Q, l), s.entry(Summand::W, l - 1), s.entry(Summand::Z, l - 2)) else {
            continue;
        };
        let lhs = dims[l] as i64 - s.m as i64 * dims[l - 1] as i64 + dims[l - 2] as i64;
        let rhs = q.free_rank as i64 - w.free_rank as i64 + z.free_rank as i64;
        passed &= lhs == rhs;
        word_lengths.push(l);
    }
    EulerSummary { passed, word_lengths }
}

pub fn homology_rows(summary: &GradedModuleSummary) -> Vec<HomologyRow> {
    summary
        .entries
        .iter()
        .map(|e| HomologyRow {
            degree: e.degree,
            summand: e.summand,
            word_length: e.word_length,
            free_rank: e.free_rank,
            torsion: json_ints(&e.torsion),
        })
        .collect()
}

pub fn total_rows(summary: &GradedModuleSummary) -> Vec<TotalRow> {
    summary
        .totals()
        .into_iter()
        .map(|t| TotalRow { degree: t.degree, free_rank: t.free_rank, torsion: json_ints(&t.torsion), summands: t.summands })
        .collect()
}

fn warnings(form: &IntersectionForm, comp: &Computation) -> Vec<String> {
    let mut w = form.warnings().to_vec();
    if let Some(p) = &comp.working_basis {
        let cols: Vec<String> = (0..p.len()).map(|j| format!("({})", p.iter().map(|r| r[j].to_string()).collect::<Vec<_>>().join(","))).collect();
        w.push(format!("computed on the basis with columns {}", cols.join(" ")));
    }
    w
}

pub struct ReportInputs<'a> {
    pub form: &'a IntersectionForm,
    pub ring: CoefficientRing,
    pub size_cap: u64,
    pub computation: &'a Computation,
    pub bv: Option<BvReport>,
    pub timing_ms: Option<u64>,
}

pub fn build_report(inputs: ReportInputs<'_>) -> ReportDocument {
    let comp = inputs.computation;
    let summary = &comp.summary;
    let composite_lengths = comp.invariants.composites_checked.clone();
    ReportDocument {
        metadata: Metadata {
            tool: TOOL,
            version: VERSION,
            form: FormEcho::new(inputs.form),
            ring: inputs.ring.to_string(),
            max_degree: summary.max_degree,
            size_cap: inputs.size_cap,
            warnings: warnings(inputs.form, comp),
            timing_ms: inputs.timing_ms,
        },
        homology: homology_rows(summary),
        totals: total_rows(summary),
        poincare_series: summary.poincare_series(),
        bv: inputs.bv,
        verification: Verification {
            composites: CompositeSummary { passed: true, word_lengths: composite_lengths },
            euler: inline_euler(comp),
        },
        bases: comp.bases.as_ref().map(|b| {
            b.iter().enumerate().map(|(l, v)| BasisRow { word_length: l, basis: v.clone() }).collect()
        }),
    }
}

/// Pretty JSON with keys sorted at every level.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report values serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("report values serialize");
    s.push('\n');
    s
}

fn torsion_text(t: &[JsonInt], sep: &str) -> String {
    t.iter().map(|x| x.0.to_string()).collect::<Vec<_>>().join(sep)
}

/// One row per summand and word length.
pub fn to_csv(doc: &ReportDocument) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["degree", "summand", "word_length", "free_rank", "torsion"]).expect("in-memory write");
    for r in &doc.homology {
        w.write_record([
            r.degree.to_string(),
            r.summand.to_string(),
            r.word_length.to_string(),
            r.free_rank.to_string(),
            torsion_text(&r.torsion, ";"),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii output")
}

pub fn to_table(doc: &ReportDocument) -> String {
    let md = &doc.metadata;
    let mut out = format!("{} {}  n={} m={} ring={} max_degree={}\n", md.tool, md.version, md.form.n, md.form.m, md.ring, md.max_degree);
    for w in &md.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out.push_str(&format!("\n{:>6}  {:<8}  {:>9}  torsion\n", "degree", "summands", "free_rank"));
    for t in &doc.totals {
        if t.free_rank == 0 && t.torsion.is_empty() {
            continue;
        }
        let summands = t.summands.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("+");
        let torsion = if t.torsion.is_empty() { "-".to_string() } else { format!("[{}]", torsion_text(&t.torsion, ", ")) };
        out.push_str(&format!("{:>6}  {:<8}  {:>9}  {}\n", t.degree, summands, t.free_rank, torsion));
    }
    out.push_str(&format!("\nPoincaré series: {}\n", doc.poincare_series));
    if let Some(bv) = &doc.bv {
        out.push_str(&format!("\nβ = {}\n", bv.beta));
        for row in bv.q_rows.iter().chain(&bv.w_rows) {
            out.push_str(&format!("  deg {:>3}: {}\n", row.degree, row.line()));
        }
        out.push_str(&format!("  {}\n", bv.z_rule));
    }
    let v = &doc.verification;
    out.push_str(&format!(
        "\nd∘d' = 0: {} (word lengths {:?})\nEuler identity: {} (word lengths {:?})\n",
        if v.composites.passed { "ok" } else { "FAILED" },
        v.composites.word_lengths,
        if v.euler.passed { "ok" } else { "FAILED" },
        v.euler.word_lengths
    ));
    out
}
