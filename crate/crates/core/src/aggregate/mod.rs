//! Aggregated stepping, normalization, error traces and the end-to-end
//! aggregation pipelines.

mod normalize;
mod trace;

pub use normalize::{
    normalization_rule, normalize, normalize_in_place, NormalizationPolicy, NormalizationRule,
    DEFAULT_NORMALIZATION_TOL,
};
pub use trace::{
    convergence_criterion, error_trace, exactness_defect, geometric_factor, stationary_residual,
    ErrorTrace, TraceFlags, UNIT_NORM_TOL,
};

use crate::arnoldi::{arnoldi_iterate, build_aggregation, Aggregation, ArnoldiProcess, DEFAULT_DEFLATION_TOL};
use crate::error::{Error, Result};
use crate::mchain::{Distribution, StochasticMatrix};
use crate::orthonorm::OrthMethod;
use crate::schur::attach_stationary;

/// `out^T = pi_k^T Pi`.
pub fn aggregated_step_into(agg: &Aggregation, pi_k: &[f64], out: &mut [f64]) -> Result<()> {
    if pi_k.len() != agg.size() {
        return Err(Error::dims(agg.size(), pi_k.len()));
    }
    if out.len() != agg.size() {
        return Err(Error::dims(agg.size(), out.len()));
    }
    agg.pi().vec_mul_into(pi_k, out);
    Ok(())
}

pub fn aggregated_step(agg: &Aggregation, pi_k: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; agg.size()];
    aggregated_step_into(agg, pi_k, &mut out)?;
    Ok(out)
}

/// Reusable two-buffer stepper over `pi_k^T = pi_0^T Pi^k`.
#[derive(Debug, Clone)]
pub struct AggregatedStepper<'a> {
    agg: &'a Aggregation,
    current: Vec<f64>,
    next: Vec<f64>,
    k: usize,
}

impl<'a> AggregatedStepper<'a> {
    pub fn new(agg: &'a Aggregation) -> Self {
        Self { agg, current: agg.pi0().to_vec(), next: vec![0.0; agg.size()], k: 0 }
    }

    pub fn step(&mut self) -> &[f64] {
        self.agg.pi().vec_mul_into(&self.current, &mut self.next);
        std::mem::swap(&mut self.current, &mut self.next);
        self.k += 1;
        &self.current
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// `p~ = pi_k^T A` with `policy` applied.
pub fn approximate(agg: &Aggregation, pi_k: &[f64], policy: NormalizationPolicy) -> Result<Distribution> {
    if pi_k.len() != agg.size() {
        return Err(Error::dims(agg.size(), pi_k.len()));
    }
    let mut values = agg.disaggregate(pi_k);
    normalize_in_place(&mut values, policy)?;
    Ok(Distribution::approximate(values))
}

/// Arnoldi aggregation of size `size` (smaller if the iteration deflates).
pub fn pipeline_naive(
    p: &StochasticMatrix,
    p0: &Distribution,
    size: usize,
    method: OrthMethod,
) -> Result<Aggregation> {
    let f = arnoldi_iterate(p, p0, size, method, DEFAULT_DEFLATION_TOL)?;
    Ok(build_aggregation(&f, p0))
}

/// [`pipeline_naive`] plus the aggregated stationary vector and the
/// convergence criterion.
pub fn pipeline_schur(
    p: &StochasticMatrix,
    p0: &Distribution,
    size: usize,
    method: OrthMethod,
) -> Result<Aggregation> {
    let mut agg = pipeline_naive(p, p0, size, method)?;
    finish_schur(p, &mut agg)?;
    Ok(agg)
}

fn finish_schur(p: &StochasticMatrix, agg: &mut Aggregation) -> Result<f64> {
    attach_stationary(agg)?;
    let c = convergence_criterion(p, agg)?;
    agg.set_criterion(c);
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicConfig {
    pub max_size: usize,
    pub epsilon: f64,
    pub step_size: usize,
    pub method: OrthMethod,
}

impl DynamicConfig {
    pub fn new(max_size: usize, epsilon: f64, step_size: usize) -> Self {
        Self { max_size, epsilon, step_size, method: OrthMethod::default() }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.max_size == 0 || self.max_size > n {
            return Err(Error::InvalidArgument(format!("max size {} must lie in 1..={n}", self.max_size)));
        }
        if self.step_size == 0 {
            return Err(Error::InvalidArgument("step size must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} must be positive", self.epsilon)));
        }
        self.method.validate()
    }
}

/// One convergence check made by [`pipeline_dynamic_checks`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicCheck {
    pub size: usize,
    pub criterion: f64,
}

/// Grows the Arnoldi factorization one vector at a time and checks the
/// convergence criterion every `step_size` expansions, at `max_size` and on
/// deflation. Stops at the first check with criterion `<= epsilon`.
///
/// A check whose leading eigenvector is complex counts as unconverged
/// (criterion `inf`); only at the final size is the error returned.
pub fn pipeline_dynamic(p: &StochasticMatrix, p0: &Distribution, config: DynamicConfig) -> Result<Aggregation> {
    pipeline_dynamic_checks(p, p0, config).map(|(agg, _)| agg)
}

/// [`pipeline_dynamic`] also returning every check it made.
pub fn pipeline_dynamic_checks(
    p: &StochasticMatrix,
    p0: &Distribution,
    config: DynamicConfig,
) -> Result<(Aggregation, Vec<DynamicCheck>)> {
    config.validate(p.n())?;
    let mut process = ArnoldiProcess::new(p, p0.values(), config.method, DEFAULT_DEFLATION_TOL, config.max_size)?;
    let mut checks = Vec::new();
    loop {
        process.expand();
        let j = process.size();
        let last = j >= config.max_size || !process.can_expand();
        if j % config.step_size != 0 && !last {
            continue;
        }
        let mut agg = build_aggregation(&process.factorization(), p0);
        let criterion = match finish_schur(p, &mut agg) {
            Ok(c) => c,
            // A complex pair can lead the Ritz values of a partial factorization;
            // such a size is simply not converged yet.
            Err(Error::ComplexStationary(_)) if !last => f64::INFINITY,
            Err(e) => return Err(e),
        };
        checks.push(DynamicCheck { size: j, criterion });
        if criterion <= config.epsilon || last {
            return Ok((agg, checks));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn stepping_examples() {
        let pi = crate::mchain::DenseMatrix::identity(2);
        let a = crate::mchain::DenseMatrix::identity(2);
        let agg = Aggregation::new(pi, a, vec![0.3, 0.7]).unwrap();
        assert_eq!(aggregated_step(&agg, &[0.3, 0.7]).unwrap(), vec![0.3, 0.7]);
        assert!(aggregated_step(&agg, &[1.0]).is_err());

        let (p, p0) = models::counterexample(0.5).unwrap();
        let agg = pipeline_naive(&p, &p0, 1, OrthMethod::default()).unwrap();
        assert_eq!(aggregated_step(&agg, &[1.0]).unwrap(), vec![0.0]);
        let approx = approximate(&agg, &[0.0], NormalizationPolicy::Never).unwrap();
        assert_eq!(approx.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn stepper_matches_power_oracle() {
        let p = models::random_chain(9, 0.6, 5).unwrap();
        let agg = pipeline_naive(&p, &Distribution::uniform(9), 5, OrthMethod::default()).unwrap();
        let mut stepper = AggregatedStepper::new(&agg);
        for _ in 0..3 {
            stepper.step();
        }
        let pi3 = agg.pi().matmul(agg.pi()).unwrap().matmul(agg.pi()).unwrap();
        let oracle = pi3.vec_mul(agg.pi0());
        assert_eq!(stepper.k(), 3);
        for (x, y) in stepper.current().iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn first_approximation_reproduces_p0() {
        let p = models::random_chain(12, 0.3, 2).unwrap();
        let p0 = Distribution::strict((1..=12).map(|i| i as f64 / 78.0).collect()).unwrap();
        let agg = pipeline_naive(&p, &p0, 6, OrthMethod::default()).unwrap();
        let approx = approximate(&agg, agg.pi0(), NormalizationPolicy::Never).unwrap();
        assert!(crate::mchain::dist1(approx.values(), p0.values()) < 1e-13);
        let always = approximate(&agg, &aggregated_step(&agg, agg.pi0()).unwrap(), NormalizationPolicy::Always)
            .unwrap();
        assert!((always.l1_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schur_pipeline_on_small_cases() {
        let p = StochasticMatrix::identity(3);
        let p0 = Distribution::strict(vec![0.2, 0.3, 0.5]).unwrap();
        let agg = pipeline_schur(&p, &p0, 2, OrthMethod::default()).unwrap();
        assert_eq!(agg.size(), 1);
        let q1_l1 = agg.a().row(0).iter().map(|x| x.abs()).sum::<f64>();
        assert!((agg.pi_stationary().unwrap()[0] - 1.0 / q1_l1).abs() < 1e-14);
        assert!(agg.criterion().unwrap() <= 1e-14);

        let (p, p0) = models::counterexample(0.5).unwrap();
        let agg = pipeline_schur(&p, &p0, 1, OrthMethod::default()).unwrap();
        assert_eq!(agg.pi_stationary().unwrap(), &[1.0]);
        assert!((agg.criterion().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dynamic_pipeline_examples() {
        let p = StochasticMatrix::identity(5);
        let agg = pipeline_dynamic(&p, &Distribution::uniform(5), DynamicConfig::new(5, 1e-8, 1)).unwrap();
        assert_eq!(agg.size(), 1);

        let (p, p0) = models::counterexample(0.5).unwrap();
        let (agg, checks) = pipeline_dynamic_checks(&p, &p0, DynamicConfig::new(3, 0.5, 1)).unwrap();
        assert_eq!(checks[0].size, 1);
        assert!(checks[0].criterion > 0.5);
        assert!(agg.size() > 1);
        assert!(pipeline_dynamic(&p, &p0, DynamicConfig::new(4, 0.5, 1)).is_err());
        assert!(pipeline_dynamic(&p, &p0, DynamicConfig::new(3, 0.5, 0)).is_err());
    }

    #[test]
    fn dynamic_pipeline_skips_complex_checks() {
        // At size 10 the leading Ritz values of this chain form a complex pair.
        let p = models::random_ncd(4, 5, 1e-3, 18).unwrap();
        let p0 = models::random_distribution(20, 18).unwrap();
        assert!(matches!(
            pipeline_schur(&p, &p0, 10, OrthMethod::default()),
            Err(Error::ComplexStationary(_))
        ));
        let (agg, checks) = pipeline_dynamic_checks(&p, &p0, DynamicConfig::new(20, 1e-10, 5)).unwrap();
        assert_eq!(checks[1], DynamicCheck { size: 10, criterion: f64::INFINITY });
        assert!(agg.criterion().unwrap() <= 1e-10);
    }

    #[test]
    fn dynamic_stop_respects_epsilon() {
        let p = models::random_ncd(3, 10, 1e-3, 4).unwrap();
        let p0 = Distribution::uniform(30);
        let cfg = DynamicConfig::new(30, 1e-10, 5);
        let (agg, checks) = pipeline_dynamic_checks(&p, &p0, cfg).unwrap();
        let last = checks.last().unwrap();
        assert_eq!(last.size, agg.size());
        assert!(last.criterion <= 1e-10 || agg.size() == 30);
        assert!(checks.iter().all(|c| c.size % 5 == 0 || c.size == agg.size()));
    }
}
