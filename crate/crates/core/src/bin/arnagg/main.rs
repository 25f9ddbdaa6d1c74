//! Command-line front end: chain generation, uniformization, aggregation runs,
//! error traces, size sweeps and timing.

mod input;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use arnagg::aggregate::{pipeline_dynamic_checks, ErrorTrace, TraceFlags};
use arnagg::bench::{bench_stage, bench_table, BenchOptions, BenchStage};
use arnagg::mchain::{
    load_matrix, save_distribution, save_matrix, uniformize, GeneratorMatrix, Matrix,
};
use arnagg::report::{fmt_f64, CsvTable};
use arnagg::{
    error_trace, models, pipeline_naive, pipeline_schur, Aggregation, Distribution, DynamicConfig,
    Error, NormalizationPolicy, OrthMethod, Result, StochasticMatrix,
};

use input::{load_chain, parse_index_list, P0Source};

#[derive(Parser)]
#[command(name = "arnagg", version, about = "Arnoldi aggregation of discrete-time Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic chain in Matrix Market format.
    Gen(GenArgs),
    /// Turn a generator matrix Q into the transition matrix I + Q / gamma.
    Uniformize(UniformizeArgs),
    /// Build one aggregation and report its quality.
    Aggregate(AggregateArgs),
    /// Error and bounds of the approximated transient distribution per step.
    Trace(TraceArgs),
    /// Static error, criterion and checkpoint errors over a range of sizes.
    Sweep(SweepArgs),
    /// Median wall time of the pipeline stages.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Counterexample,
    Random,
    Ncd,
    Identity,
}

#[derive(Args)]
struct GenArgs {
    kind: GenKind,
    /// Output matrix path; `.csv` writes dense CSV, anything else Matrix Market.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    density: f64,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct UniformizeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Uniformization rate; defaults to the largest exit rate.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ChainArgs {
    /// Matrix file or `gen:counterexample:EPS`, `gen:random:N:DENSITY:SEED`,
    /// `gen:ncd:BLOCKS:SIZE:EPS:SEED`, `gen:identity:N`.
    #[arg(long)]
    input: String,
    /// `default`, `uniform`, `point:I` (0-based), `random[:SEED]` or a CSV file.
    #[arg(long, default_value = "default")]
    p0: String,
    #[arg(long, default_value = "cgsir")]
    method: OrthMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AggregateArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Aggregation size, or the largest size with `--epsilon`.
    #[arg(long)]
    size: usize,
    /// Grow the aggregation until the criterion drops to this value.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    step_size: usize,
    /// Skip the Schur criterion.
    #[arg(long)]
    naive: bool,
    /// Summary CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write Pi as dense CSV.
    #[arg(long)]
    pi_out: Option<PathBuf>,
    /// Also write A as dense CSV.
    #[arg(long)]
    a_out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long)]
    size: usize,
    /// Steps to record, e.g. `0..100` or `0,1,10..50..10`.
    #[arg(long, default_value = "0..100")]
    ks: String,
    #[arg(long, default_value = "never")]
    policy: NormalizationPolicy,
    #[arg(long, default_value_t = 1)]
    samples: usize,
    /// Output CSV; with several samples, per-sample files and a mean file are
    /// written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Sizes, e.g. `1..30` or `5..100..5`.
    #[arg(long)]
    sizes: String,
    /// Steps at which e_k is reported.
    #[arg(long, default_value = "10,100")]
    ks: String,
    #[arg(long, default_value = "never")]
    policy: NormalizationPolicy,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long)]
    sizes: String,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Comma separated subset of `arnoldi`, `arnoldi+schur`, `arnoldi+schur+trace`.
    #[arg(long, default_value = "arnoldi,arnoldi+schur,arnoldi+schur+trace")]
    stages: String,
    #[arg(long, default_value_t = 100)]
    trace_steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Uniformize(a) => cmd_uniformize(a),
        Command::Aggregate(a) => cmd_aggregate(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("ARNAGG_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("ARNAGG_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
}

fn emit(table: &CsvTable, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => table.save(path),
        None => {
            print!("{}", table.to_csv_string());
            Ok(())
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let (p, p0) = match a.kind {
        GenKind::Counterexample => {
            let (p, p0) = models::counterexample(require(a.epsilon, "epsilon")?)?;
            (p, Some(p0))
        }
        GenKind::Random => (models::random_chain(require(a.n, "n")?, a.density, a.seed)?, None),
        GenKind::Ncd => {
            let chain = models::random_ncd(
                require(a.blocks, "blocks")?,
                require(a.block_size, "block-size")?,
                require(a.epsilon, "epsilon")?,
                a.seed,
            )?;
            (chain, None)
        }
        GenKind::Identity => (StochasticMatrix::identity(require(a.n, "n")?), None),
    };
    save_matrix(p.matrix(), &a.out, None)?;
    if let Some(p0) = p0 {
        let path = sibling(&a.out, "p0.csv");
        save_distribution(p0.values(), &path)?;
        eprintln!("wrote {} and {}", a.out.display(), path.display());
    }
    Ok(())
}

/// `dir/name.ext` -> `dir/name.suffix`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_uniformize(a: UniformizeArgs) -> Result<()> {
    let q = GeneratorMatrix::new(load_matrix(&a.input, None)?)?;
    let p = uniformize(&q, a.gamma)?;
    save_matrix(p.matrix(), &a.out, None)
}

struct Loaded {
    p: StochasticMatrix,
    canonical: Option<Distribution>,
    source: P0Source,
}

impl Loaded {
    fn new(c: &ChainArgs) -> Result<Self> {
        c.method.validate()?;
        let (p, canonical) = load_chain(&c.input)?;
        let source = P0Source::parse(&c.p0, c.seed)?;
        Ok(Self { p, canonical, source })
    }

    fn p0(&self, sample: u64) -> Result<Distribution> {
        self.source.resolve(self.p.n(), self.canonical.as_ref(), sample)
    }

    fn check_size(&self, size: usize) -> Result<()> {
        if size == 0 || size > self.p.n() {
            return Err(Error::InvalidArgument(format!("size {size} must lie in 1..={}", self.p.n())));
        }
        Ok(())
    }
}

fn summary_row(p: &StochasticMatrix, agg: &Aggregation) -> Result<Vec<String>> {
    let static_error = arnagg::aggregate::exactness_defect(p, agg)?.inf_norm();
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let residual = agg
        .pi_stationary()
        .map(|pi| arnagg::aggregate::stationary_residual(p, &agg.disaggregate(pi)));
    Ok(vec![agg.size().to_string(), fmt_f64(static_error), opt(agg.criterion()), opt(residual)])
}

fn cmd_aggregate(a: AggregateArgs) -> Result<()> {
    let loaded = Loaded::new(&a.chain)?;
    loaded.check_size(a.size)?;
    let p0 = loaded.p0(0)?;
    let method = a.chain.method;
    let agg = match (a.epsilon, a.naive) {
        (Some(_), true) => {
            return Err(Error::InvalidArgument("--epsilon needs the Schur criterion; drop --naive".into()))
        }
        (Some(epsilon), false) => {
            let cfg = DynamicConfig { max_size: a.size, epsilon, step_size: a.step_size, method };
            pipeline_dynamic_checks(&loaded.p, &p0, cfg)?.0
        }
        (None, true) => pipeline_naive(&loaded.p, &p0, a.size, method)?,
        (None, false) => pipeline_schur(&loaded.p, &p0, a.size, method)?,
    };
    let mut table = CsvTable::new(["size", "static_error", "criterion", "stationary_residual"]);
    table.push(summary_row(&loaded.p, &agg)?)?;
    emit(&table, a.out.as_deref())?;
    for (path, m) in [(&a.pi_out, agg.pi()), (&a.a_out, agg.a())] {
        if let Some(path) = path {
            save_matrix(&Matrix::Dense(m.clone()), path, Some(arnagg::mchain::MatrixFormat::Csv))?;
        }
    }
    Ok(())
}

fn cmd_trace(a: TraceArgs) -> Result<()> {
    let loaded = Loaded::new(&a.chain)?;
    loaded.check_size(a.size)?;
    let ks = parse_index_list(&a.ks)?;
    if a.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be at least 1".into()));
    }
    let flags = TraceFlags { bounds: true, stationary: false };
    let run = |sample: usize| -> Result<ErrorTrace> {
        let p0 = loaded.p0(sample as u64)?;
        let agg = pipeline_naive(&loaded.p, &p0, a.size, a.chain.method)?;
        error_trace(&loaded.p, &p0, &agg, &ks, a.policy, flags)
    };
    if a.samples == 1 {
        let trace = run(0)?;
        return write_trace(&trace, a.out.as_deref());
    }
    if !loaded.source.is_random() {
        eprintln!("warning: --samples > 1 with a non-random --p0 repeats the same run");
    }
    let traces = (0..a.samples).into_par_iter().map(run).collect::<Result<Vec<_>>>()?;
    let out = require(a.out, "out (needed with --samples > 1)")?;
    for (i, t) in traces.iter().enumerate() {
        write_trace(t, Some(&sibling(&out, &format!("sample{i}.csv"))))?;
    }
    write_trace(&mean_trace(&traces), Some(&sibling(&out, "mean.csv")))
}

fn write_trace(t: &ErrorTrace, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let io = |source| Error::Io { path: path.to_path_buf(), source };
            std::fs::write(path, t.to_csv_string()).map_err(io)
        }
        None => {
            print!("{}", t.to_csv_string());
            Ok(())
        }
    }
}

fn mean_trace(traces: &[ErrorTrace]) -> ErrorTrace {
    let count = traces.len() as f64;
    let mean = |get: fn(&ErrorTrace) -> &Vec<f64>| -> Vec<f64> {
        (0..traces[0].len()).map(|i| traces.iter().map(|t| get(t)[i]).sum::<f64>() / count).collect()
    };
    ErrorTrace {
        steps: traces[0].steps.clone(),
        e_k: mean(|t| &t.e_k),
        bound_specific: mean(|t| &t.bound_specific),
        bound_general: mean(|t| &t.bound_general),
        static_error: traces.iter().map(|t| t.static_error).sum::<f64>() / count,
        criterion: None,
        stationary_residual: None,
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let loaded = Loaded::new(&a.chain)?;
    let sizes = parse_index_list(&a.sizes)?;
    sizes.iter().try_for_each(|&s| loaded.check_size(s))?;
    let ks = parse_index_list(&a.ks)?;
    let p0 = loaded.p0(0)?;
    let rows = sizes
        .par_iter()
        .map(|&j| -> Result<Vec<String>> {
            let start = Instant::now();
            let agg = pipeline_schur(&loaded.p, &p0, j, a.chain.method)?;
            let trace = error_trace(&loaded.p, &p0, &agg, &ks, a.policy, TraceFlags::default())?;
            let elapsed = start.elapsed().as_secs_f64();
            let mut row = vec![j.to_string(), fmt_f64(trace.static_error)];
            row.push(trace.criterion.map(fmt_f64).unwrap_or_default());
            row.extend(trace.e_k.iter().map(|&e| fmt_f64(e)));
            row.push(fmt_f64(elapsed));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["j".to_string(), "static_error".into(), "criterion".into()];
    header.extend(ks.iter().map(|k| format!("e_{k}")));
    header.push("wall_time".into());
    let mut table = CsvTable::new(header);
    for row in rows {
        table.push(row)?;
    }
    emit(&table, a.out.as_deref())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let loaded = Loaded::new(&a.chain)?;
    let sizes = parse_index_list(&a.sizes)?;
    sizes.iter().try_for_each(|&s| loaded.check_size(s))?;
    let stages = a
        .stages
        .split(',')
        .map(|s| s.trim().parse::<BenchStage>())
        .collect::<Result<Vec<_>>>()?;
    let p0 = loaded.p0(0)?;
    let opts = BenchOptions { reps: a.reps, warmup: a.warmup, method: a.chain.method, trace_steps: a.trace_steps };
    // Timings run sequentially so that runs do not compete for cores.
    let mut rows = Vec::new();
    for &j in &sizes {
        for &stage in &stages {
            rows.push(bench_stage(&loaded.p, &p0, j, stage, &opts)?);
        }
    }
    emit(&bench_table(&rows)?, a.out.as_deref())
}
