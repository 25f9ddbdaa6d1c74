use std::io::Write;

use super::normalize::{normalize_in_place, NormalizationPolicy};
use crate::arnoldi::Aggregation;
use crate::error::{Error, Result};
use crate::mchain::{dist1, weighted_sum, DenseMatrix, Distribution, StochasticMatrix};

/// `|x - 1|` below which the geometric bound uses its linear branch.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// `Pi A - A P`, the exactness defect of an aggregation.
pub fn exactness_defect(p: &StochasticMatrix, agg: &Aggregation) -> Result<DenseMatrix> {
    if agg.n() != p.n() {
        return Err(Error::dims(p.n(), agg.n()));
    }
    let mut d = agg.pi().matmul(agg.a())?;
    let mut ap = vec![0.0; p.n()];
    for i in 0..agg.size() {
        p.step_into(agg.a().row(i), &mut ap);
        for (x, y) in d.row_mut(i).iter_mut().zip(&ap) {
            *x -= y;
        }
    }
    Ok(d)
}

/// `<|pi|, |Pi A - A P| 1>` for the aggregation's stationary vector.
pub fn convergence_criterion(p: &StochasticMatrix, agg: &Aggregation) -> Result<f64> {
    let pi = agg.pi_stationary().ok_or(Error::MissingStationary)?;
    let d = exactness_defect(p, agg)?;
    Ok(weighted_sum(pi, &d.row_abs_sums()))
}

/// `||x - x P||_1`.
pub fn stationary_residual(p: &StochasticMatrix, x: &[f64]) -> f64 {
    let mut xp = vec![0.0; x.len()];
    p.step_into(x, &mut xp);
    dist1(x, &xp)
}

/// Closed-form growth factor `sum_{i<k} r^i`.
pub fn geometric_factor(r: f64, k: usize) -> f64 {
    if (r - 1.0).abs() <= UNIT_NORM_TOL {
        k as f64
    } else {
        (r.powi(k as i32) - 1.0) / (r - 1.0)
    }
}

/// Which optional parts of an [`ErrorTrace`] to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceFlags {
    pub bounds: bool,
    /// Criterion and stationary residual; needs a stationary vector.
    pub stationary: bool,
}

impl Default for TraceFlags {
    fn default() -> Self {
        Self { bounds: true, stationary: true }
    }
}

/// Error of the approximated transient distribution at selected steps together
/// with both a priori bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    pub steps: Vec<usize>,
    /// `||p~_k - p_k||_1` after applying the normalization policy.
    pub e_k: Vec<f64>,
    /// Accumulated `||e_0||_1 + sum_{j<k} <|pi_j|, |Pi A - A P| 1>`; NaN when bounds are off.
    pub bound_specific: Vec<f64>,
    /// `||e_0||_1 + ||pi_0||_1 ||Pi A - A P||_inf sum_{i<k} ||Pi||_inf^i`; NaN when bounds are off.
    pub bound_general: Vec<f64>,
    /// `||Pi A - A P||_inf`.
    pub static_error: f64,
    pub criterion: Option<f64>,
    pub stationary_residual: Option<f64>,
}

impl ErrorTrace {
    pub const CSV_HEADER: &'static str = "k,e_k,bound_specific,bound_general";

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for i in 0..self.steps.len() {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e}",
                self.steps[i], self.e_k[i], self.bound_specific[i], self.bound_general[i]
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Steps the chain and the aggregation in lockstep up to `max(ks)`, recording
/// errors and bounds at every requested step.
pub fn error_trace(
    p: &StochasticMatrix,
    p0: &Distribution,
    agg: &Aggregation,
    ks: &[usize],
    policy: NormalizationPolicy,
    flags: TraceFlags,
) -> Result<ErrorTrace> {
    let n = p.n();
    if p0.len() != n {
        return Err(Error::dims(n, p0.len()));
    }
    if agg.n() != n {
        return Err(Error::dims(n, agg.n()));
    }
    if ks.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("step list must be ascending".into()));
    }
    policy.validate()?;

    let defect = exactness_defect(p, agg)?;
    let defect_rows = defect.row_abs_sums();
    let static_error = defect_rows.iter().copied().fold(0.0, f64::max);
    let pi_norm = agg.pi().inf_norm();

    let mut pk = p0.values().to_vec();
    let mut pk_next = vec![0.0; n];
    let mut pik = agg.pi0().to_vec();
    let mut pik_next = vec![0.0; agg.size()];
    let mut approx = vec![0.0; n];

    agg.a().vec_mul_into(&pik, &mut approx);
    let e0 = dist1(&approx, &pk);
    let pi0_l1: f64 = agg.pi0().iter().map(|x| x.abs()).sum();

    let mut trace = ErrorTrace {
        steps: ks.to_vec(),
        e_k: Vec::with_capacity(ks.len()),
        bound_specific: Vec::with_capacity(ks.len()),
        bound_general: Vec::with_capacity(ks.len()),
        static_error,
        criterion: None,
        stationary_residual: None,
    };

    let mut accumulated = e0;
    let mut k = 0usize;
    for &target in ks {
        while k < target {
            if flags.bounds {
                accumulated += weighted_sum(&pik, &defect_rows);
            }
            p.step_into(&pk, &mut pk_next);
            std::mem::swap(&mut pk, &mut pk_next);
            agg.pi().vec_mul_into(&pik, &mut pik_next);
            std::mem::swap(&mut pik, &mut pik_next);
            k += 1;
        }
        agg.a().vec_mul_into(&pik, &mut approx);
        normalize_in_place(&mut approx, policy)?;
        trace.e_k.push(dist1(&approx, &pk));
        if flags.bounds {
            trace.bound_specific.push(accumulated);
            // An exact aggregation has no growth term even when ||Pi||^k overflows.
            let growth = if static_error == 0.0 { 0.0 } else { pi0_l1 * static_error * geometric_factor(pi_norm, k) };
            trace.bound_general.push(e0 + growth);
        } else {
            trace.bound_specific.push(f64::NAN);
            trace.bound_general.push(f64::NAN);
        }
    }

    if flags.stationary {
        if let Some(pi) = agg.pi_stationary() {
            trace.criterion = Some(weighted_sum(pi, &defect_rows));
            trace.stationary_residual = Some(stationary_residual(p, &agg.disaggregate(pi)));
        }
    }
    Ok(trace)
}
