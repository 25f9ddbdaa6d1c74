//! Parsing of chain sources, initial distributions and index lists.

use std::path::Path;

use arnagg::mchain::{load_distribution, load_matrix, validate_stochastic, STOCHASTIC_TOL};
use arnagg::{models, Distribution, Error, Result, StochasticMatrix};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn field<T: std::str::FromStr>(parts: &[&str], i: usize, what: &str) -> Result<T> {
    parts
        .get(i)
        .ok_or_else(|| bad(format!("missing {what}")))?
        .parse()
        .map_err(|_| bad(format!("bad {what} `{}`", parts[i])))
}

/// A matrix file, or one of `gen:counterexample:EPS`, `gen:random:N:DENSITY:SEED`,
/// `gen:ncd:BLOCKS:SIZE:EPS:SEED`, `gen:identity:N`.
///
/// Generated counterexample chains also carry their canonical `p0`.
pub fn load_chain(spec: &str) -> Result<(StochasticMatrix, Option<Distribution>)> {
    let Some(rest) = spec.strip_prefix("gen:") else {
        let m = load_matrix(Path::new(spec), None)?;
        return Ok((validate_stochastic(m, STOCHASTIC_TOL)?, None));
    };
    let parts: Vec<&str> = rest.split(':').collect();
    match parts[0] {
        "counterexample" => {
            let (p, p0) = models::counterexample(field(&parts, 1, "epsilon")?)?;
            Ok((p, Some(p0)))
        }
        "random" => Ok((
            models::random_chain(field(&parts, 1, "n")?, field(&parts, 2, "density")?, field(&parts, 3, "seed")?)?,
            None,
        )),
        "ncd" => Ok((
            models::random_ncd(
                field(&parts, 1, "block count")?,
                field(&parts, 2, "block size")?,
                field(&parts, 3, "epsilon")?,
                field(&parts, 4, "seed")?,
            )?,
            None,
        )),
        "identity" => Ok((StochasticMatrix::identity(field(&parts, 1, "n")?), None)),
        other => Err(bad(format!("unknown generator `{other}`"))),
    }
}

/// Where initial distributions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum P0Source {
    /// The chain's own canonical `p0` if it has one, else uniform.
    Default,
    Uniform,
    Point(usize),
    Random(u64),
    File(String),
}

impl P0Source {
    pub fn parse(s: &str, default_seed: u64) -> Result<Self> {
        Ok(match s {
            "default" => P0Source::Default,
            "uniform" => P0Source::Uniform,
            "random" => P0Source::Random(default_seed),
            _ => {
                if let Some(i) = s.strip_prefix("point:") {
                    P0Source::Point(i.parse().map_err(|_| bad(format!("bad state index `{i}`")))?)
                } else if let Some(seed) = s.strip_prefix("random:") {
                    P0Source::Random(seed.parse().map_err(|_| bad(format!("bad seed `{seed}`")))?)
                } else {
                    P0Source::File(s.to_string())
                }
            }
        })
    }

    pub fn is_random(&self) -> bool {
        matches!(self, P0Source::Random(_))
    }

    /// The distribution for sample `sample`; only random sources vary per sample.
    pub fn resolve(&self, n: usize, canonical: Option<&Distribution>, sample: u64) -> Result<Distribution> {
        match self {
            P0Source::Default => Ok(canonical.cloned().unwrap_or_else(|| Distribution::uniform(n))),
            P0Source::Uniform => Ok(Distribution::uniform(n)),
            P0Source::Point(i) => Distribution::point(n, *i),
            P0Source::Random(seed) => models::random_distribution(n, derive_seed(*seed, sample)),
            P0Source::File(path) => {
                let values = load_distribution(Path::new(path))?;
                if values.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: values.len() });
                }
                Distribution::strict(values)
            }
        }
    }
}

/// Per-sample seed; sample 0 keeps the base seed.
pub fn derive_seed(base: u64, sample: u64) -> u64 {
    if sample == 0 {
        return base;
    }
    // SplitMix64 finalizer over the pair.
    let mut z = base ^ sample.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Comma separated integers and ranges `A..B` or `A..B..STEP` (inclusive).
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let parts: Vec<&str> = item.split("..").collect();
        let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad(format!("bad index `{x}` in `{item}`")));
        match parts.len() {
            1 => out.push(num(parts[0])?),
            2 | 3 => {
                let (a, b) = (num(parts[0])?, num(parts[1])?);
                let step = if parts.len() == 3 { num(parts[2])? } else { 1 };
                if step == 0 || a > b {
                    return Err(bad(format!("empty range `{item}`")));
                }
                out.extend((a..=b).step_by(step));
            }
            _ => return Err(bad(format!("bad range `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(bad("empty index list"));
    }
    Ok(out)
}
