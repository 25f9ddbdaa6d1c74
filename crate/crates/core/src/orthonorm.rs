//! Gram-Schmidt orthogonalization with optional reorthogonalization.
//!
//! Six strategies are available: classical (CGS) and modified (MGS) Gram-Schmidt,
//! their always-twice variants (CGS2, MGS2) and the selectively reorthogonalized
//! variants (CGSIR, MGSIR). A selective variant repeats the projection pass when
//! the residual after the first pass has shrunk below `kappa` times the norm of
//! the input, with `kappa = 1/sqrt(2)` as the conventional default. No variant
//! runs more than two passes.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mchain::{axpy, dot, norm2};

/// Default reorthogonalization threshold for the selective variants.
pub const DEFAULT_KAPPA: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Residual norms at or below this fraction of the input norm count as rank deficient.
pub const RANK_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrthMethod {
    Cgs,
    Mgs,
    Cgs2,
    Mgs2,
    CgsIr { kappa: f64 },
    MgsIr { kappa: f64 },
}

impl Default for OrthMethod {
    fn default() -> Self {
        OrthMethod::CgsIr { kappa: DEFAULT_KAPPA }
    }
}

impl OrthMethod {
    pub const ALL: [OrthMethod; 6] = [
        OrthMethod::Cgs,
        OrthMethod::Mgs,
        OrthMethod::Cgs2,
        OrthMethod::Mgs2,
        OrthMethod::CgsIr { kappa: DEFAULT_KAPPA },
        OrthMethod::MgsIr { kappa: DEFAULT_KAPPA },
    ];

    pub fn cgsir() -> Self {
        OrthMethod::CgsIr { kappa: DEFAULT_KAPPA }
    }

    pub fn mgsir() -> Self {
        OrthMethod::MgsIr { kappa: DEFAULT_KAPPA }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OrthMethod::CgsIr { kappa } | OrthMethod::MgsIr { kappa }
                if !(kappa > 0.0 && kappa < 1.0) =>
            {
                Err(Error::InvalidArgument(format!("kappa {kappa} must lie in (0, 1)")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OrthMethod::Cgs => "cgs",
            OrthMethod::Mgs => "mgs",
            OrthMethod::Cgs2 => "cgs2",
            OrthMethod::Mgs2 => "mgs2",
            OrthMethod::CgsIr { .. } => "cgsir",
            OrthMethod::MgsIr { .. } => "mgsir",
        }
    }

    fn is_classical(&self) -> bool {
        matches!(self, OrthMethod::Cgs | OrthMethod::Cgs2 | OrthMethod::CgsIr { .. })
    }
}

impl fmt::Display for OrthMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrthMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cgs" => Ok(OrthMethod::Cgs),
            "mgs" => Ok(OrthMethod::Mgs),
            "cgs2" => Ok(OrthMethod::Cgs2),
            "mgs2" => Ok(OrthMethod::Mgs2),
            "cgsir" => Ok(OrthMethod::cgsir()),
            "mgsir" => Ok(OrthMethod::mgsir()),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthStepResult {
    pub residual_vector: Vec<f64>,
    /// Projection coefficient onto each basis vector, in basis order.
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
}

/// Orthogonalizes `v` against an orthonormal `basis`.
pub fn orthogonalize_step<B: AsRef<[f64]>>(
    v: &[f64],
    basis: &[B],
    method: OrthMethod,
) -> Result<OrthStepResult> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(b) = basis.iter().find(|b| b.as_ref().len() != v.len()) {
        return Err(Error::dims(v.len(), b.as_ref().len()));
    }
    let mut residual_vector = v.to_vec();
    let mut coefficients = vec![0.0; basis.len()];
    let mut scratch = vec![0.0; basis.len()];
    let residual_norm =
        orthogonalize_in_place(&mut residual_vector, basis, method, &mut coefficients, &mut scratch);
    Ok(OrthStepResult { residual_vector, coefficients, residual_norm })
}

/// In-place kernel: on return `w` holds the residual, `coeffs[..basis.len()]` the
/// accumulated projection coefficients. Returns the residual 2-norm.
///
/// `scratch` must have room for `basis.len()` values; it is only used by the
/// classical variants.
pub(crate) fn orthogonalize_in_place<B: AsRef<[f64]>>(
    w: &mut [f64],
    basis: &[B],
    method: OrthMethod,
    coeffs: &mut [f64],
    scratch: &mut [f64],
) -> f64 {
    let coeffs = &mut coeffs[..basis.len()];
    coeffs.fill(0.0);
    let classical = method.is_classical();
    let input_norm = match method {
        OrthMethod::CgsIr { .. } | OrthMethod::MgsIr { .. } => norm2(w),
        _ => 0.0,
    };

    projection_pass(w, basis, classical, coeffs, scratch);
    let norm = norm2(w);
    let second = match method {
        OrthMethod::Cgs | OrthMethod::Mgs => false,
        OrthMethod::Cgs2 | OrthMethod::Mgs2 => true,
        OrthMethod::CgsIr { kappa } | OrthMethod::MgsIr { kappa } => norm < kappa * input_norm,
    };
    if !second {
        return norm;
    }
    projection_pass(w, basis, classical, coeffs, scratch);
    norm2(w)
}

fn projection_pass<B: AsRef<[f64]>>(
    w: &mut [f64],
    basis: &[B],
    classical: bool,
    coeffs: &mut [f64],
    scratch: &mut [f64],
) {
    if classical {
        let h = &mut scratch[..basis.len()];
        for (hi, q) in h.iter_mut().zip(basis) {
            *hi = dot(q.as_ref(), w);
        }
        for ((q, &hi), c) in basis.iter().zip(h.iter()).zip(coeffs.iter_mut()) {
            axpy(-hi, q.as_ref(), w);
            *c += hi;
        }
    } else {
        for (q, c) in basis.iter().zip(coeffs.iter_mut()) {
            let q = q.as_ref();
            let hi = dot(q, w);
            axpy(-hi, q, w);
            *c += hi;
        }
    }
}

/// Upper-triangular factor of a Gram-Schmidt run: `vectors[j] = sum_i r[i][j] * basis[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthonormalized {
    pub basis: Vec<Vec<f64>>,
    /// Row-major `k x k` upper-triangular coefficients.
    pub r: Vec<Vec<f64>>,
}

/// Orthonormalizes `vectors` in order.
pub fn orthonormalize_all<V: AsRef<[f64]>>(vectors: &[V], method: OrthMethod) -> Result<Orthonormalized> {
    method.validate()?;
    let k = vectors.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = vec![vec![0.0; k]; k];
    let mut coeffs = vec![0.0; k];
    let mut scratch = vec![0.0; k];
    let len = vectors.first().map_or(0, |v| v.as_ref().len());
    for (j, v) in vectors.iter().enumerate() {
        let v = v.as_ref();
        if v.is_empty() {
            return Err(Error::EmptyInput);
        }
        if v.len() != len {
            return Err(Error::dims(len, v.len()));
        }
        let input_norm = norm2(v);
        let mut w = v.to_vec();
        let norm = orthogonalize_in_place(&mut w, &basis, method, &mut coeffs, &mut scratch);
        if !(norm > RANK_TOL * input_norm) {
            return Err(Error::RankDeficient(j));
        }
        for (i, &c) in coeffs[..j].iter().enumerate() {
            r[i][j] = c;
        }
        r[j][j] = norm;
        w.iter_mut().for_each(|x| *x /= norm);
        basis.push(w);
    }
    Ok(Orthonormalized { basis, r })
}

/// `max |<q_i, q_j> - delta_ij|` over all pairs.
pub fn orthogonality_loss<B: AsRef<[f64]>>(basis: &[B]) -> f64 {
    let mut loss: f64 = 0.0;
    for (i, qi) in basis.iter().enumerate() {
        for (offset, qj) in basis[i..].iter().enumerate() {
            let g = dot(qi.as_ref(), qj.as_ref());
            let target = if offset == 0 { 1.0 } else { 0.0 };
            loss = loss.max((g - target).abs());
        }
    }
    loss
}
