use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use dashu_int::IBig;
use serde::Serialize;

use loophom::bv::bv_report_with;
use loophom::forms::{preset, reduction_form, validate, validate_matrix, CoefficientRing, IntersectionForm, PresetParams, RawConfig, ValidateOptions, PRESETS};
use loophom::homology::{compute_full, verify_complex_with, ComputeOptions, GradedModuleSummary};
use loophom::oracles::{euler_check, permutation_matrix, random_form, random_unimodular, ucoeff_check};
use loophom::report::{build_report, canonical_json, to_csv, to_table, ReportDocument, ReportInputs};
use loophom::tensor::{QuotientAlgebra, DEFAULT_SIZE_CAP};
use loophom::{arith::Integers, forms::base_change, Error, Result};

const DEFAULT_MAX_DEGREE: u32 = 60;
const SIZE_CAP_ENV: &str = "LOOPHOM_SIZE_CAP";

#[derive(Parser)]
#[command(name = "loophom", version, about = "Free loop space homology of (n-1)-connected 2n-manifolds from their intersection form")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute H_*(LM) over Z, Q or F_p.
    Compute(RunArgs),
    /// Compute over Q and tabulate the abelianized BV composites (odd n > 3).
    Bv(RunArgs),
    /// Run the consistency checks on one form.
    Verify(VerifyArgs),
    /// List the preset catalog.
    Presets,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "preset", "matrix", "random"])))]
struct FormArgs {
    /// JSON input document.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Preset name (see `presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Intersection matrix as inline JSON, e.g. '[[0,1],[-1,0]]'.
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
    /// Random unimodular form with this seed (needs --n and --m).
    #[arg(long)]
    random: Option<u64>,
    #[arg(long)]
    n: Option<u32>,
    /// Rank for --random.
    #[arg(long)]
    m: Option<usize>,
    /// Number of hyperbolic blocks for the hyperbolic preset.
    #[arg(long)]
    genus: Option<u32>,
    /// Diagonal entries for the diag preset, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    entries: Vec<i64>,
    /// Z, Q or F<p>; overrides the ring in the input document.
    #[arg(long)]
    ring: Option<String>,
    #[arg(long)]
    max_degree: Option<u32>,
    /// Allow n in {2, 4, 8}.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    allow_nonunimodular: bool,
    /// Largest m^ℓ allowed for a word length ℓ (default 5000000, or $LOOPHOM_SIZE_CAP).
    #[arg(long)]
    size_cap: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Include the basis labels of each U slice.
    #[arg(long)]
    emit_bases: bool,
    /// Record wall-clock time in the metadata.
    #[arg(long)]
    timing: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    form: FormArgs,
    /// Largest ℓ for the d∘d' and Euler checks.
    #[arg(long, default_value_t = 6)]
    max_length: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    primes: Vec<u32>,
    /// Number of random basis changes compared against the original form.
    #[arg(long, default_value_t = 3)]
    basis_changes: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

struct Resolved {
    form: IntersectionForm,
    ring: CoefficientRing,
    max_degree: u32,
    size_cap: u64,
}

fn size_cap(flag: Option<u64>) -> Result<u64> {
    if let Some(c) = flag {
        return Ok(c);
    }
    match std::env::var(SIZE_CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::InvalidInput(format!("{SIZE_CAP_ENV} must be a nonnegative integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_SIZE_CAP),
    }
}

fn resolve(args: &FormArgs, default_max_degree: u32) -> Result<Resolved> {
    if let Some(t) = args.threads {
        // only the first call configures the pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let opts = ValidateOptions { force: args.force, allow_nonunimodular: args.allow_nonunimodular };
    let ring_flag = args.ring.as_deref().map(CoefficientRing::parse).transpose()?;
    let need_n = || args.n.ok_or_else(|| Error::InvalidInput("--n is required with --preset, --matrix and --random".into()));
    let (form, file_ring, file_degree) = if let Some(path) = &args.input {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        let raw: RawConfig = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("bad input document: {e}")))?;
        let input = validate(&raw, &opts)?;
        (input.form, Some(input.ring), input.max_degree)
    } else if let Some(name) = &args.preset {
        let params = PresetParams { genus: args.genus, entries: args.entries.clone() };
        (preset(name, need_n()?, &params, &opts)?, None, None)
    } else if let Some(text) = &args.matrix {
        let rows: Vec<Vec<i64>> = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad --matrix: {e}")))?;
        let matrix = rows.into_iter().map(|r| r.into_iter().map(IBig::from).collect()).collect();
        (validate_matrix(need_n()?, matrix, &opts)?, None, None)
    } else {
        let seed = args.random.expect("clap enforces one source");
        let m = args.m.ok_or_else(|| Error::InvalidInput("--m is required with --random".into()))?;
        (random_form(need_n()?, m, seed)?, None, None)
    };
    Ok(Resolved {
        form,
        ring: ring_flag.or(file_ring).unwrap_or(CoefficientRing::Rationals),
        max_degree: args.max_degree.or(file_degree).unwrap_or(default_max_degree),
        size_cap: size_cap(args.size_cap)?,
    })
}

fn render(doc: &ReportDocument, format: Format) -> String {
    match format {
        Format::Json => canonical_json(doc),
        Format::Csv => to_csv(doc),
        Format::Table => to_table(doc),
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_compute(args: &RunArgs, with_bv: bool) -> Result<()> {
    let start = Instant::now();
    let r = resolve(&args.form, DEFAULT_MAX_DEGREE)?;
    if with_bv && r.ring != CoefficientRing::Rationals {
        return Err(Error::InvalidInput(format!("bv runs over Q only, got ring {}", r.ring)));
    }
    let bv = if with_bv { Some(bv_report_with(&r.form, r.max_degree, r.size_cap)?) } else { None };
    let opts = ComputeOptions { size_cap: r.size_cap, emit_bases: args.emit_bases };
    let computation = compute_full(&r.form, r.ring, r.max_degree, &opts)?;
    let doc = build_report(ReportInputs {
        form: &r.form,
        ring: r.ring,
        size_cap: r.size_cap,
        computation: &computation,
        bv,
        timing_ms: args.timing.then(|| start.elapsed().as_millis() as u64),
    });
    emit(&render(&doc, args.format), &args.output)
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifySummary {
    form: loophom::report::FormEcho,
    passed: bool,
    checks: Vec<CheckResult>,
}

fn invariant_view(s: &GradedModuleSummary) -> Vec<(u64, String, usize, usize, Vec<IBig>)> {
    s.entries.iter().map(|e| (e.degree, e.summand.to_string(), e.word_length, e.free_rank, e.torsion.clone())).collect()
}

fn run_checks(r: &Resolved, args: &VerifyArgs, checks: &mut Vec<CheckResult>) -> Result<()> {
    let form = &r.form;
    let m = form.m();
    let mut push = |name: String, passed: bool, detail: String| -> Result<()> {
        checks.push(CheckResult { name: name.clone(), passed, detail: detail.clone() });
        if passed {
            Ok(())
        } else {
            Err(Error::VerificationFailed(format!("{name}: {detail}")))
        }
    };

    let (work, _) = reduction_form(form)?;
    let v = verify_complex_with(&QuotientAlgebra::new(Integers, &work, r.size_cap), &work, args.max_length)?;
    let columns: usize = v.checks.iter().map(|c| c.columns).sum();
    push("composites".into(), true, format!("D∘Dp = 0 for word lengths 0..={} ({columns} columns)", args.max_length))?;

    for field in [CoefficientRing::Rationals, CoefficientRing::PrimeField(2)] {
        let e = euler_check(form, field, args.max_length, r.size_cap)?;
        let detail = match e.rows.iter().find(|row| row.slices != row.homology) {
            Some(row) => format!("word length {}: {} != {}", row.word_length, row.slices, row.homology),
            None => format!("word lengths 2..={}", args.max_length),
        };
        push(format!("euler/{field}"), e.passed, detail)?;
    }

    let opts = ComputeOptions { size_cap: r.size_cap, emit_bases: false };
    let over_z = compute_full(form, CoefficientRing::Integers, r.max_degree, &opts)?.summary;
    for &p in &args.primes {
        let ring = CoefficientRing::prime_field(p as i64)?;
        let over_p = compute_full(form, ring, r.max_degree, &opts)?.summary;
        let out = ucoeff_check(&over_z, &over_p, p);
        let detail = match &out.first_mismatch {
            Some(mm) => format!("degree {}: expected {}, found {}", mm.degree, mm.expected, mm.found),
            None => format!("{} degrees", out.checked),
        };
        push(format!("ucoeff/F{p}"), out.passed, detail)?;
    }

    let reference = invariant_view(&over_z);
    let mut changes: Vec<(String, Vec<Vec<IBig>>)> =
        (0..args.basis_changes).map(|s| (format!("base_change/seed{s}"), random_unimodular(m, s))).collect();
    changes.push(("permutation/reverse".into(), permutation_matrix(&(0..m).rev().collect::<Vec<_>>())));
    for (name, p) in changes {
        let changed = base_change(form, &p)?;
        let s = compute_full(&changed, CoefficientRing::Integers, r.max_degree, &opts)?.summary;
        let same = invariant_view(&s) == reference;
        push(name, same, if same { "identical summary".into() } else { "summaries differ".into() })?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let r = resolve(&args.form, 30)?;
    let mut checks = Vec::new();
    let outcome = run_checks(&r, args, &mut checks);
    let summary = VerifySummary { form: loophom::report::FormEcho::new(&r.form), passed: outcome.is_ok(), checks };
    let text = match args.format {
        Format::Json => canonical_json(&summary),
        _ => summary
            .checks
            .iter()
            .map(|c| format!("{:<24} {}  {}\n", c.name, if c.passed { "ok  " } else { "FAIL" }, c.detail))
            .collect(),
    };
    print!("{text}");
    outcome
}

fn cmd_presets() {
    for (name, description) in PRESETS {
        println!("{name:<12} {description}");
    }
}

fn fail(code: &str, message: &str, exit: u8) -> ExitCode {
    let body = serde_json::json!({ "error": { "code": code, "message": message } });
    eprintln!("{body}");
    ExitCode::from(exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail("UsageError", e.render().to_string().trim(), 2);
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => cmd_compute(a, false),
        Command::Bv(a) => cmd_compute(a, true),
        Command::Verify(a) => cmd_verify(a),
        Command::Presets => {
            cmd_presets();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.code(), &e.to_string(), e.exit_code() as u8),
    }
}
