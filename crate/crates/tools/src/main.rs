//! `scc`: cluster trajectory files, generate synthetic data, benchmark and
//! report.
//!
//! Exit codes: 0 success, 1 internal failure, 2 unreadable or malformed
//! input, 3 invalid configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use scc_core::engine::{scc_run, Projection, SccConfig};
use scc_core::evaluation::{misclassification_rate, Category};
use scc_core::synth::{synth_affine_motion, synth_subspace_mixture, SequenceRecord, SynthSpec};
use scc_core::SccError;
use scc_tools::bench::{run_bench, BenchConfig, Regime};
use scc_tools::dataio::{list_sequences, load_sequence, mixture_record, save_sequence};
use scc_tools::report::{parse_records, records_jsonl, write_report, ReportError, ReportOptions};
use scc_tools::DEFAULT_SEED;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "scc", version, about = "Spectral curvature clustering of affine subspaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster the trajectories of one .seq file.
    Cluster(ClusterArgs),
    /// Write synthetic .seq files.
    Synth(SynthArgs),
    /// Run seeded trials over a directory of labeled .seq files.
    Bench(BenchArgs),
    /// Rebuild tables and histograms from a records file.
    Report(ReportArgs),
}

#[derive(clap::Args)]
struct ClusterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Subspace dimension.
    #[arg(long)]
    d: usize,
    /// Number of clusters; defaults to the count declared in the file.
    #[arg(long = "K")]
    k: Option<usize>,
    /// d+1, 4K or 2F (no projection).
    #[arg(long, default_value = "2F")]
    proj: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Number of sampled sets; defaults to 100 K.
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    improvement_tol: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    /// Label file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON-lines diagnostics file; standard error when absent.
    #[arg(long)]
    diag: Option<PathBuf>,
    /// Include wall time in the diagnostics record.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthMode {
    Motion,
    Mixture,
    Suite,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "motion")]
    mode: SynthMode,
    #[arg(long = "K", default_value_t = 2)]
    k: usize,
    /// Frames (motion and suite).
    #[arg(long = "F", default_value_t = 30)]
    frames: usize,
    /// Total points, split evenly over the clusters.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Points per cluster when --N is absent.
    #[arg(long, default_value_t = 100)]
    points_per_cluster: usize,
    /// Subspace dimension (mixture).
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Ambient dimension (mixture).
    #[arg(long = "D", default_value_t = 10)]
    ambient: usize,
    /// Gaussian noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Number of files; seeds run from --seed upwards. Suites default to 12.
    #[arg(long)]
    count: Option<usize>,
    /// Scale each generated set to unit diameter.
    #[arg(long)]
    normalize: bool,
    /// Category written to the header (motion and mixture).
    #[arg(long)]
    category: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Regime such as 3,4K; repeatable. Defaults to the six standard regimes.
    #[arg(long = "regime")]
    regimes: Vec<String>,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    c: Option<usize>,
    /// Histogram bin width in percent.
    #[arg(long, default_value_t = 2.0)]
    bin_width: f64,
    /// Add published rows of other methods to the tables.
    #[arg(long)]
    reference: bool,
    /// Store mean trial wall time in the records file.
    #[arg(long)]
    timings: bool,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    bin_width: f64,
    #[arg(long)]
    reference: bool,
}

enum Failure {
    Input(String),
    Config(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Input(_) => 2,
            Failure::Config(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Config(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<SccError> for Failure {
    fn from(e: SccError) -> Self {
        match e {
            SccError::InvalidConfig(_)
            | SccError::InvalidDimension { .. }
            | SccError::InvalidSpec(_)
            | SccError::InvalidBinEdges
            | SccError::NonPositiveSigma(_)
            | SccError::TooFewPoints { .. } => Failure::Config(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Core(inner) => inner.into(),
            ReportError::Record { .. } => Failure::Input(e.to_string()),
            ReportError::Io { .. } => Failure::Internal(e.to_string()),
        }
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    sequence: &'a str,
    points: usize,
    d: usize,
    k: usize,
    projection: &'static str,
    seed: u64,
    c: usize,
    ols_error: f64,
    sigma_sq: f64,
    q: usize,
    iterations: usize,
    per_iteration_errors: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    error_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_s: Option<f64>,
}

fn cluster(args: ClusterArgs) -> Result<(), Failure> {
    let seq = load_sequence(&args.input).map_err(|e| Failure::Input(e.to_string()))?;
    let projection: Projection = args.proj.parse()?;
    let k = match args.k.or(seq.motions()) {
        Some(k) => k,
        None => return Err(Failure::Config("--K is required: the file declares no motion count".into())),
    };
    let mut config = SccConfig::new(args.d, k)
        .with_projection(projection)
        .with_seed(args.seed);
    if let Some(c) = args.c {
        config = config.with_samples(c);
    }
    if let Some(m) = args.max_iterations {
        config.max_iterations = m;
    }
    if let Some(t) = args.improvement_tol {
        config.improvement_tol = t;
    }
    if let Some(p) = args.patience {
        config.patience = p;
    }
    config.validate()?;

    let start = Instant::now();
    let result = scc_run(&seq.trajectories, &config)?;
    let seconds = start.elapsed().as_secs_f64();

    let error_pct = match &seq.truth {
        Some(truth) => Some(misclassification_rate(&result.partition, truth)?),
        None => None,
    };
    let labels: Vec<String> = result.partition.labels().iter().map(usize::to_string).collect();
    let labels = labels.join(" ") + "\n";
    match &args.out {
        Some(path) => write_out(path, &labels)?,
        None => print!("{labels}"),
    }
    let diag = Diagnostics {
        sequence: &seq.id,
        points: seq.num_points(),
        d: config.d,
        k,
        projection: projection.as_str(),
        seed: config.seed,
        c: config.c,
        ols_error: result.ols_error,
        sigma_sq: result.sigma_sq_chosen,
        q: result.q_chosen,
        iterations: result.iterations_run,
        per_iteration_errors: &result.per_iteration_errors,
        error_pct,
        runtime_s: args.timings.then_some(seconds),
    };
    let line = serde_json::to_string(&diag).map_err(|e| Failure::Internal(e.to_string()))? + "\n";
    match &args.diag {
        Some(path) => write_out(path, &line)?,
        None => eprint!("{line}"),
    }
    if !args.timings {
        eprintln!("{}: {:.3} s", seq.id, seconds);
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let category: Option<Category> = args.category.as_deref().map(str::parse).transpose()?;
    let count = args.count.unwrap_or(if args.mode == SynthMode::Suite { 12 } else { 1 });
    if count == 0 {
        return Err(Failure::Config("--count must be at least 1".into()));
    }
    let suite_cycle = [Category::Checkerboard, Category::Traffic, Category::Other];
    let mut records: Vec<SequenceRecord> = Vec::with_capacity(count);
    for i in 0..count {
        let seed = args.seed.wrapping_add(i as u64);
        let record = match args.mode {
            SynthMode::Motion | SynthMode::Suite => {
                let mut spec = SynthSpec::motion(args.k, args.frames, args.points_per_cluster, args.noise, seed);
                spec.total_points = args.n;
                spec.normalize = args.normalize;
                let mut rec = synth_affine_motion(&spec)?;
                if args.mode == SynthMode::Suite {
                    let cat = suite_cycle[i % suite_cycle.len()];
                    rec.id = format!("suite-{i:03}-{cat}");
                    rec.category = cat;
                } else if let Some(cat) = category {
                    rec.category = cat;
                }
                rec
            }
            SynthMode::Mixture => {
                let mut spec = SynthSpec::mixture(args.k, args.d, args.ambient, args.points_per_cluster, args.noise, seed);
                spec.total_points = args.n;
                spec.normalize = args.normalize;
                let (data, truth) = synth_subspace_mixture(&spec)?;
                let id = format!("mixture-k{}-d{}-D{}-s{seed}", args.k, args.d, args.ambient);
                mixture_record(id, &data, truth, category.unwrap_or(Category::Synthetic))
            }
        };
        records.push(record);
    }
    create_dir(&args.out)?;
    for rec in &records {
        let path = args.out.join(format!("{}.seq", rec.id));
        save_sequence(rec, &path).map_err(|e| Failure::Internal(e.to_string()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let mut config = BenchConfig::new(args.seed);
    if !args.regimes.is_empty() {
        config.regimes = args
            .regimes
            .iter()
            .map(|r| r.parse::<Regime>())
            .collect::<Result<_, _>>()?;
    }
    config.repeats = args.repeats;
    config.c = args.c;
    config.timings = args.timings;
    let options = ReportOptions {
        reference: args.reference,
        bin_width: args.bin_width,
    };
    scc_core::evaluation::uniform_edges(options.bin_width)?;

    let paths = list_sequences(&args.data).map_err(|e| Failure::Input(e.to_string()))?;
    let mut sequences = Vec::with_capacity(paths.len());
    for path in &paths {
        match load_sequence(path) {
            Ok(seq) => sequences.push(seq),
            Err(e) => eprintln!("warning: skipping {e}"),
        }
    }
    let output = run_bench(&sequences, &config)?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    if output.results.is_empty() {
        return Err(Failure::Internal(format!(
            "no usable labeled sequences in {}",
            args.data.display()
        )));
    }
    for (r, secs) in output.results.iter().zip(&output.wall_times) {
        eprintln!("{} {}: {:.3} s over {} runs", r.method, r.sequence_id, secs, r.runs);
    }
    create_dir(&args.out)?;
    write_out(&args.out.join("records.jsonl"), &records_jsonl(&output.results))?;
    for path in write_report(&args.out, &output.results, &options)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.records)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.records.display())))?;
    let results = parse_records(&text)?;
    if results.is_empty() {
        return Err(Failure::Input(format!("{}: no records", args.records.display())));
    }
    let options = ReportOptions {
        reference: args.reference,
        bin_width: args.bin_width,
    };
    for path in write_report(&args.out, &results, &options)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Cluster(a) => cluster(a),
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
