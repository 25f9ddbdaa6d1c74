//! Wall-clock timing of the three pipeline stages: Arnoldi alone, Arnoldi plus
//! the Schur criterion, and both followed by an error trace.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::aggregate::{error_trace, pipeline_naive, pipeline_schur, NormalizationPolicy, TraceFlags};
use crate::error::{Error, Result};
use crate::mchain::{Distribution, StochasticMatrix};
use crate::orthonorm::OrthMethod;
use crate::report::{fmt_f64, CsvTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchStage {
    Arnoldi,
    ArnoldiSchur,
    ArnoldiSchurTrace,
}

impl BenchStage {
    pub const ALL: [BenchStage; 3] =
        [BenchStage::Arnoldi, BenchStage::ArnoldiSchur, BenchStage::ArnoldiSchurTrace];

    pub fn name(self) -> &'static str {
        match self {
            BenchStage::Arnoldi => "arnoldi",
            BenchStage::ArnoldiSchur => "arnoldi+schur",
            BenchStage::ArnoldiSchurTrace => "arnoldi+schur+trace",
        }
    }
}

impl fmt::Display for BenchStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchStage::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bench stage `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub reps: usize,
    pub warmup: usize,
    pub method: OrthMethod,
    /// Number of steps traced by [`BenchStage::ArnoldiSchurTrace`].
    pub trace_steps: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { reps: 5, warmup: 1, method: OrthMethod::default(), trace_steps: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub stage: BenchStage,
    pub n: usize,
    pub j: usize,
    pub reps: usize,
    pub median_s: f64,
}

impl BenchRow {
    pub const HEADER: [&'static str; 5] = ["config", "n", "j", "reps", "median_s"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.stage.to_string(),
            self.n.to_string(),
            self.j.to_string(),
            self.reps.to_string(),
            fmt_f64(self.median_s),
        ]
    }
}

pub fn median(samples: &mut [f64]) -> f64 {
    assert!(!samples.is_empty(), "median of no samples");
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    }
}

fn run_once(p: &StochasticMatrix, p0: &Distribution, j: usize, stage: BenchStage, opts: &BenchOptions) -> Result<()> {
    match stage {
        BenchStage::Arnoldi => pipeline_naive(p, p0, j, opts.method).map(drop),
        BenchStage::ArnoldiSchur => pipeline_schur(p, p0, j, opts.method).map(drop),
        BenchStage::ArnoldiSchurTrace => {
            let agg = pipeline_schur(p, p0, j, opts.method)?;
            let ks: Vec<usize> = (0..=opts.trace_steps).collect();
            error_trace(p, p0, &agg, &ks, NormalizationPolicy::Never, TraceFlags::default()).map(drop)
        }
    }
}

/// Median wall time of `opts.reps` runs after `opts.warmup` discarded runs.
pub fn bench_stage(
    p: &StochasticMatrix,
    p0: &Distribution,
    j: usize,
    stage: BenchStage,
    opts: &BenchOptions,
) -> Result<BenchRow> {
    if opts.reps == 0 || opts.warmup == 0 {
        return Err(Error::InvalidArgument("bench needs reps >= 1 and warmup >= 1".into()));
    }
    for _ in 0..opts.warmup {
        run_once(p, p0, j, stage, opts)?;
    }
    let mut times = Vec::with_capacity(opts.reps);
    for _ in 0..opts.reps {
        let start = Instant::now();
        run_once(p, p0, j, stage, opts)?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(BenchRow { stage, n: p.n(), j, reps: opts.reps, median_s: median(&mut times) })
}

pub fn bench_table(rows: &[BenchRow]) -> Result<CsvTable> {
    let mut table = CsvTable::new(BenchRow::HEADER);
    for r in rows {
        table.push(r.fields())?;
    }
    Ok(table)
}
