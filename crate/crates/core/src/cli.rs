//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataio::{load_csv, ColumnRef, CsvSchema};
use crate::distributions::{gaussian_distribution, uniform_distribution};
use crate::error::{Error, Result};
use crate::eval::{
    check_counterexample, check_lemma1, check_theorem1_variance, check_unbiasedness, run_benchmark,
    run_synthetic, BenchmarkSpec, CheckLine, ExperimentSpec, Method, ResultTable, Theorem1Setup,
    UnbiasednessSetup,
};
use crate::ra::{tune_weights, tune_weights_empirical, RaTuning};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "uncoupled", version, about = "Regression from unlabeled data and pairwise comparisons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Repeated experiment on linear-Gaussian synthetic data.
    Synth(SynthArgs),
    /// Repeated train/test experiment on a labeled CSV file.
    Bench(BenchArgs),
    /// Tune the risk-approximation weights for a target distribution.
    Tune(TuneArgs),
    /// Run the Monte-Carlo checks of the estimator identities.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// d=5, n_U=100000, n_R=20,40,...,10240, 100 repeats.
    Full,
    /// d=5, n_U=20000, n_R=100,1000,5000, 20 repeats.
    Desk,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the result CSV here; without it the CSV goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write whitespace-separated plot data here.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct MethodFlags {
    /// Comma-separated subset of lr, rank, ra, tt.
    #[arg(long, value_delimiter = ',', default_value = "lr,rank,ra,tt")]
    methods: Vec<String>,
    /// Two-stage RA fit with the variance-optimal λ.
    #[arg(long)]
    optimal_lambda: bool,
    /// Use the empirical CDF of the training targets instead of a density.
    #[arg(long)]
    empirical_cdf: bool,
}

impl MethodFlags {
    fn methods(&self) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for m in &self.methods {
            let m: Method = m.trim().parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out.sort();
        Ok(out)
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Starting point for the other defaults.
    #[arg(long, value_enum, default_value = "full")]
    preset: Preset,
    #[arg(long)]
    n_u: Option<usize>,
    /// Comma-separated comparison counts.
    #[arg(long, value_delimiter = ',')]
    n_r: Option<Vec<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    #[arg(long, default_value_t = 5)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    test_size: usize,
    #[command(flatten)]
    methods: MethodFlags,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    /// Target column, by name or zero-based index.
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated categorical columns, by name or index.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// TOML schema with target_column, categorical_columns, has_header, delimiter;
    /// replaces the column flags.
    #[arg(long, conflicts_with_all = ["target", "categorical", "no_header"])]
    schema: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "5000")]
    n_r: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Fit an intercept in every linear model.
    #[arg(long)]
    intercept: bool,
    /// Standardize features with training-split statistics.
    #[arg(long)]
    standardize: bool,
    #[command(flatten)]
    methods: MethodFlags,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DistKind {
    Uniform,
    Gaussian,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["dist", "targets_file"]))]
struct TuneArgs {
    #[arg(long, value_enum)]
    dist: Option<DistKind>,
    /// Uniform lower end.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    /// Uniform upper end.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mean: f64,
    #[arg(long, default_value_t = 1.0)]
    std: f64,
    /// File with one target value per line (first CSV field); tunes on the
    /// empirical objective.
    #[arg(long)]
    targets_file: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Lemma1,
    Theorem1,
    Counterexample,
    Unbiasedness,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum)]
    only: Option<CheckKind>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Sample size of the pair-identity and counterexample checks.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Synth(a) => with_jobs(a.output.jobs, || cmd_synth(&a)),
        Command::Bench(a) => with_jobs(a.output.jobs, || cmd_bench(&a)),
        Command::Tune(a) => cmd_tune(&a),
        Command::Check(a) => with_jobs(a.jobs, || cmd_check(&a)),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn with_jobs(jobs: Option<usize>, f: impl FnOnce() -> Result<i32> + Send) -> Result<i32> {
    match jobs {
        None => f(),
        Some(0) => Err(Error::param("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::param(e.to_string()))?
            .install(f),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn header_comments(command: &str, seed: u64, config: String) -> Vec<String> {
    vec![
        format!("uncoupled {}", env!("CARGO_PKG_VERSION")),
        format!("command: {command}"),
        format!("seed: {seed}"),
        format!("config: {config}"),
        "std_mse: sample standard deviation over successful repeats (divisor repeats-1); 0 when repeats = 1".into(),
    ]
}

fn emit_table(table: &ResultTable, comments: &[String], output: &Output) -> Result<i32> {
    let csv = table.to_csv(comments);
    match &output.out {
        Some(path) => {
            write_file(path, &csv)?;
            print!("{}", table.render());
        }
        None => print!("{csv}"),
    }
    if let Some(path) = &output.plot_data {
        write_file(path, &table.to_plot_data())?;
    }
    Ok(0)
}

fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    let base = match a.preset {
        Preset::Full => ExperimentSpec::full(),
        Preset::Desk => ExperimentSpec::desk(),
    };
    let spec = ExperimentSpec {
        methods: a.methods.methods()?,
        n_u: a.n_u.unwrap_or(base.n_u),
        n_r_values: a.n_r.clone().unwrap_or(base.n_r_values),
        repeats: a.repeats.unwrap_or(base.repeats),
        seed: a.seed,
        noise_std: a.noise_std,
        dim: a.dim,
        test_size: a.test_size,
        optimal_lambda: a.methods.optimal_lambda,
        empirical_cdf: a.methods.empirical_cdf,
        ..base
    };
    let table = run_synthetic(&spec)?;
    let config = format!(
        "n_u={} n_r={} repeats={} methods={} noise_std={} dim={} test_size={} optimal_lambda={} empirical_cdf={}",
        spec.n_u,
        join(&spec.n_r_values),
        spec.repeats,
        join(&spec.methods),
        spec.noise_std,
        spec.dim,
        spec.test_size,
        spec.optimal_lambda,
        spec.empirical_cdf
    );
    emit_table(&table, &header_comments("synth", spec.seed, config), &a.output)
}

fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let schema = match &a.schema {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            CsvSchema::from_toml(&text)?
        }
        None => {
            let target = a
                .target
                .as_deref()
                .ok_or_else(|| Error::Schema("--target or --schema is required".into()))?;
            CsvSchema {
                target_column: target.parse().expect("infallible"),
                categorical_columns: a.categorical.iter().map(|c| c.parse::<ColumnRef>().expect("infallible")).collect(),
                has_header: !a.no_header,
                delimiter: a.delimiter,
            }
        }
    };
    let (data, dropped) = load_csv(&a.data, &schema)?;
    let spec = BenchmarkSpec {
        methods: a.methods.methods()?,
        n_r_values: a.n_r.clone(),
        repeats: a.repeats,
        seed: a.seed,
        test_fraction: a.test_fraction,
        intercept: a.intercept,
        standardize: a.standardize,
        optimal_lambda: a.methods.optimal_lambda,
        empirical_cdf: a.methods.empirical_cdf,
        ..Default::default()
    };
    let table = run_benchmark(&data, &spec)?;
    let data_name = a.data.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let config = format!(
        "data={} rows={} dropped={} d={} n_r={} repeats={} methods={} test_fraction={} intercept={} standardize={} optimal_lambda={} empirical_cdf={}",
        data_name,
        data.len(),
        dropped,
        data.dim(),
        join(&spec.n_r_values),
        spec.repeats,
        join(&spec.methods),
        spec.test_fraction,
        spec.intercept,
        spec.standardize,
        spec.optimal_lambda,
        spec.empirical_cdf
    );
    emit_table(&table, &header_comments("bench", spec.seed, config), &a.output)
}

fn read_targets(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            // a leading header line is tolerated
            _ if values.is_empty() && lineno == 0 => {}
            _ => {
                return Err(Error::Schema(format!(
                    "{}: line {} is not a finite number: {field:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(values)
}

fn cmd_tune(a: &TuneArgs) -> Result<i32> {
    let tuning = RaTuning::default();
    let (cfg, source) = match (&a.targets_file, a.dist) {
        (Some(path), _) => {
            let targets = read_targets(path)?;
            let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            (tune_weights_empirical(&targets, &tuning)?, format!("targets_file={name} n={}", targets.len()))
        }
        (None, Some(DistKind::Uniform)) => (
            tune_weights(&uniform_distribution(a.a, a.b)?, &tuning)?,
            format!("dist=uniform a={} b={}", a.a, a.b),
        ),
        (None, Some(DistKind::Gaussian)) => (
            tune_weights(&gaussian_distribution(a.mean, a.std)?, &tuning)?,
            format!("dist=gaussian mean={} std={}", a.mean, a.std),
        ),
        (None, None) => unreachable!("clap requires a source"),
    };
    let mut csv = String::new();
    for c in [
        format!("uncoupled {}", env!("CARGO_PKG_VERSION")),
        "command: tune".into(),
        format!("config: {source}"),
    ] {
        writeln!(csv, "# {c}").unwrap();
    }
    writeln!(csv, "w1,w2,lambda\n{},{},{}", cfg.w1, cfg.w2, cfg.lambda).unwrap();
    match &a.out {
        Some(path) => {
            write_file(path, &csv)?;
            println!("w1 = {}\nw2 = {}\nlambda = {}", cfg.w1, cfg.w2, cfg.lambda);
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cmd_check(a: &CheckArgs) -> Result<i32> {
    let wanted = |k| a.only.is_none_or(|o| o == k);
    let mut lines: Vec<CheckLine> = Vec::new();
    if wanted(CheckKind::Lemma1) {
        lines.extend(check_lemma1(a.samples, a.seed)?.lines());
    }
    if wanted(CheckKind::Theorem1) {
        lines.extend(check_theorem1_variance(&Theorem1Setup::default(), a.seed)?.lines());
    }
    if wanted(CheckKind::Counterexample) {
        lines.extend(check_counterexample(a.samples, a.seed)?.lines());
    }
    if wanted(CheckKind::Unbiasedness) {
        lines.extend(check_unbiasedness(&UnbiasednessSetup::default(), a.seed)?.lines());
    }
    for l in &lines {
        println!("{l}");
    }
    if let Some(path) = &a.out {
        let mut csv = format!(
            "# uncoupled {}\n# command: check\n# seed: {}\n# config: samples={}\ncheck,value,rule,passed\n",
            env!("CARGO_PKG_VERSION"),
            a.seed,
            a.samples
        );
        for l in &lines {
            writeln!(csv, "{},{},{},{}", l.name, l.value, l.rule, l.passed).unwrap();
        }
        write_file(path, &csv)?;
    }
    Ok(if lines.iter().all(|l| l.passed) { 0 } else { 1 })
}
