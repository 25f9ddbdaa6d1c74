use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mchain::{norm1, Distribution};

pub const DEFAULT_NORMALIZATION_TOL: f64 = 1e-6;

/// When an approximated distribution is rescaled to unit 1-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationPolicy {
    Never,
    /// Only when one of the [`NormalizationRule`]s fires.
    Conditional { tol: f64 },
    Always,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy::Never
    }
}

impl NormalizationPolicy {
    pub fn conditional() -> Self {
        NormalizationPolicy::Conditional { tol: DEFAULT_NORMALIZATION_TOL }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NormalizationPolicy::Conditional { tol } if !(tol > 0.0) => {
                Err(Error::InvalidArgument(format!("normalization tolerance {tol} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NormalizationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationPolicy::Never => "never",
            NormalizationPolicy::Conditional { .. } => "cond",
            NormalizationPolicy::Always => "always",
        })
    }
}

impl FromStr for NormalizationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "never" => Ok(NormalizationPolicy::Never),
            "cond" | "conditional" => Ok(NormalizationPolicy::conditional()),
            "always" => Ok(NormalizationPolicy::Always),
            other => Err(Error::InvalidArgument(format!("unknown policy `{other}`"))),
        }
    }
}

/// Situations in which rescaling an approximated distribution `p` to unit
/// 1-norm provably (the first two) or conjecturally (the rest) does not
/// increase its distance to the true distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormalizationRule {
    /// `||p||_1 >= 2`.
    LargeMass,
    /// All entries non-positive and `||p||_1 >= 1`.
    NonPositive,
    /// Some entry `<= -1`.
    VeryNegativeEntry,
    /// Some entry `>= 9/8`.
    LargeEntry,
    /// The signed sum of all but the largest entry is `<= -1`.
    NegativeRemainder,
}

impl NormalizationRule {
    pub const ALL: [NormalizationRule; 5] = [
        NormalizationRule::LargeMass,
        NormalizationRule::NonPositive,
        NormalizationRule::VeryNegativeEntry,
        NormalizationRule::LargeEntry,
        NormalizationRule::NegativeRemainder,
    ];

    /// True for the two rules that are theorems rather than conjectures.
    pub fn is_proven(self) -> bool {
        matches!(self, NormalizationRule::LargeMass | NormalizationRule::NonPositive)
    }

    pub fn holds(self, p: &[f64], tol: f64) -> bool {
        match self {
            NormalizationRule::LargeMass => norm1(p) >= 2.0 - tol,
            NormalizationRule::NonPositive => p.iter().all(|&x| x <= tol) && norm1(p) >= 1.0 - tol,
            NormalizationRule::VeryNegativeEntry => p.iter().any(|&x| x <= -1.0 - tol),
            NormalizationRule::LargeEntry => p.iter().any(|&x| x >= 9.0 / 8.0 + tol),
            NormalizationRule::NegativeRemainder => {
                let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                !p.is_empty() && p.iter().sum::<f64>() - max <= -1.0 - tol
            }
        }
    }
}

/// First rule (in [`NormalizationRule::ALL`] order) that fires for `p`.
pub fn normalization_rule(p: &[f64], tol: f64) -> Option<NormalizationRule> {
    NormalizationRule::ALL.into_iter().find(|r| r.holds(p, tol))
}

/// Applies `policy` in place. Returns whether `p` was rescaled.
pub fn normalize_in_place(p: &mut [f64], policy: NormalizationPolicy) -> Result<bool> {
    let fire = match policy {
        NormalizationPolicy::Never => false,
        NormalizationPolicy::Always => true,
        NormalizationPolicy::Conditional { tol } => normalization_rule(p, tol).is_some(),
    };
    if !fire {
        return Ok(false);
    }
    let norm = norm1(p);
    if !(norm > 0.0) {
        return Err(Error::ZeroVector);
    }
    p.iter_mut().for_each(|x| *x /= norm);
    Ok(true)
}

pub fn normalize(p: Distribution, policy: NormalizationPolicy) -> Result<Distribution> {
    let mut values = p.into_values();
    normalize_in_place(&mut values, policy)?;
    Ok(Distribution::approximate(values))
}
