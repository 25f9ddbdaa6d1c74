//! Arnoldi iteration over a transition matrix and the aggregation built from it.
//!
//! Row convention: the iteration builds an orthonormal basis `q_1, ..., q_j` of
//! the row Krylov space spanned by `p_0^T, p_0^T P, p_0^T P^2, ...` and the
//! coefficients
//!
//! ```text
//! q_i^T P = sum_{l <= i} H(i, l) q_l^T + [i == j] h_{j,j+1} q_{j+1}^T
//! ```
//!
//! so `H_j Q_j + E = Q_j P` where `E` is zero except for its last row. `H_j` has
//! `H(i, l) = 0` for `l > i + 1`.

use crate::error::{Error, Result};
use crate::mchain::{norm2, DenseMatrix, Distribution, StochasticMatrix};
use crate::orthonorm::{orthogonalize_in_place, OrthMethod};

/// Residual norms at or below this fraction of `||q_j^T P||_2` end the iteration.
pub const DEFAULT_DEFLATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ArnoldiFactorization {
    basis: Vec<Vec<f64>>,
    h: DenseMatrix,
    residual_norm: f64,
    residual_direction: Option<Vec<f64>>,
    deflated: bool,
}

impl ArnoldiFactorization {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn n(&self) -> usize {
        self.basis.first().map_or(0, Vec::len)
    }

    /// Rows `q_1, ..., q_j`.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// The `j x j` Hessenberg matrix `H_j`.
    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    /// `h_{j,j+1}`.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// `q_{j+1}`, absent after deflation.
    pub fn residual_direction(&self) -> Option<&[f64]> {
        self.residual_direction.as_deref()
    }

    pub fn deflated(&self) -> bool {
        self.deflated
    }

    /// `Q_j` as a contiguous `j x n` block.
    pub fn basis_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_rows(&self.basis).expect("basis rows share one length")
    }
}

/// An Arnoldi factorization that can be grown one basis vector at a time.
#[derive(Debug)]
pub struct ArnoldiProcess<'a> {
    p: &'a StochasticMatrix,
    method: OrthMethod,
    deflation_tol: f64,
    basis: Vec<Vec<f64>>,
    // Row i holds H(i, 0..=i) and h_{i,i+1} at column i + 1.
    h: DenseMatrix,
    next: Option<Vec<f64>>,
    residual_norm: f64,
    deflated: bool,
    coeffs: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> ArnoldiProcess<'a> {
    /// Starts the iteration at `q_1 = p0 / ||p0||_2`. `capacity` sizes the
    /// preallocated Hessenberg storage; growing past it reallocates.
    pub fn new(
        p: &'a StochasticMatrix,
        p0: &[f64],
        method: OrthMethod,
        deflation_tol: f64,
        capacity: usize,
    ) -> Result<Self> {
        method.validate()?;
        if p0.len() != p.n() {
            return Err(Error::dims(p.n(), p0.len()));
        }
        if !(deflation_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("deflation tolerance {deflation_tol}")));
        }
        let norm = norm2(p0);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroInitialVector);
        }
        let q1: Vec<f64> = p0.iter().map(|x| x / norm).collect();
        let capacity = capacity.clamp(1, p.n());
        Ok(Self {
            p,
            method,
            deflation_tol,
            basis: Vec::with_capacity(capacity),
            h: DenseMatrix::zeros(capacity, capacity + 1),
            next: Some(q1),
            residual_norm: norm,
            deflated: false,
            coeffs: vec![0.0; capacity],
            scratch: vec![0.0; capacity],
        })
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn deflated(&self) -> bool {
        self.deflated
    }

    /// True while another basis vector can be added.
    pub fn can_expand(&self) -> bool {
        self.next.is_some() && self.basis.len() < self.p.n()
    }

    /// Appends `q_{j+1}` and computes row `j + 1` of `H`. Returns `false` when
    /// the process cannot grow (deflated or the basis spans the whole space).
    pub fn expand(&mut self) -> bool {
        if !self.can_expand() {
            return false;
        }
        let q = self.next.take().expect("checked by can_expand");
        let j = self.basis.len();
        if j == self.h.rows() {
            self.grow_storage();
        }
        let mut w = vec![0.0; self.p.n()];
        self.p.step_into(&q, &mut w);
        self.basis.push(q);

        let before = norm2(&w);
        let norm = orthogonalize_in_place(
            &mut w,
            &self.basis,
            self.method,
            &mut self.coeffs,
            &mut self.scratch,
        );
        let row = self.h.row_mut(j);
        row[..=j].copy_from_slice(&self.coeffs[..=j]);
        row[j + 1] = norm;
        self.residual_norm = norm;
        if norm <= self.deflation_tol * before {
            self.deflated = true;
            row[j + 1] = 0.0;
        } else {
            w.iter_mut().for_each(|x| *x /= norm);
            self.next = Some(w);
        }
        true
    }

    fn grow_storage(&mut self) {
        let cap = (self.h.rows() * 2).min(self.p.n()).max(self.h.rows() + 1);
        let mut h = DenseMatrix::zeros(cap, cap + 1);
        for i in 0..self.h.rows() {
            h.row_mut(i)[..self.h.cols()].copy_from_slice(self.h.row(i));
        }
        self.h = h;
        self.coeffs.resize(cap, 0.0);
        self.scratch.resize(cap, 0.0);
    }

    /// Snapshot of the current factorization.
    pub fn factorization(&self) -> ArnoldiFactorization {
        let j = self.basis.len();
        let mut h = DenseMatrix::zeros(j, j);
        for i in 0..j {
            let width = (i + 2).min(j);
            h.row_mut(i)[..width].copy_from_slice(&self.h.row(i)[..width]);
        }
        ArnoldiFactorization {
            basis: self.basis.clone(),
            h,
            residual_norm: if self.deflated { 0.0 } else { self.residual_norm },
            residual_direction: self.next.clone(),
            deflated: self.deflated,
        }
    }

    pub fn into_factorization(self) -> ArnoldiFactorization {
        self.factorization()
    }
}

/// Runs up to `m` Arnoldi steps, stopping early on deflation.
pub fn arnoldi_iterate(
    p: &StochasticMatrix,
    p0: &Distribution,
    m: usize,
    method: OrthMethod,
    deflation_tol: f64,
) -> Result<ArnoldiFactorization> {
    if m == 0 || m > p.n() {
        return Err(Error::InvalidArgument(format!(
            "aggregation size {m} must lie in 1..={}",
            p.n()
        )));
    }
    let mut process = ArnoldiProcess::new(p, p0.values(), method, deflation_tol, m)?;
    while process.size() < m && process.expand() {}
    Ok(process.into_factorization())
}

/// `||H_j Q_j + E - Q_j P||_inf`.
pub fn relation_residual(f: &ArnoldiFactorization, p: &StochasticMatrix) -> f64 {
    let j = f.size();
    let mut worst: f64 = 0.0;
    let mut qp = vec![0.0; p.n()];
    for (i, q) in f.basis.iter().enumerate() {
        p.step_into(q, &mut qp);
        for (l, ql) in f.basis.iter().enumerate() {
            let h = f.h.get(i, l);
            if h != 0.0 {
                crate::mchain::axpy(-h, ql, &mut qp);
            }
        }
        if i + 1 == j {
            if let Some(next) = &f.residual_direction {
                crate::mchain::axpy(-f.residual_norm, next, &mut qp);
            }
        }
        worst = worst.max(crate::mchain::norm1(&qp));
    }
    worst
}

/// An aggregation `(Pi, A, pi_0)` with an optional aggregated stationary vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pi: DenseMatrix,
    a: DenseMatrix,
    pi0: Vec<f64>,
    pi_stationary: Option<Vec<f64>>,
    criterion: Option<f64>,
}

impl Aggregation {
    /// An arbitrary aggregation: `pi` is `m x m`, `a` is `m x n`, `pi0` has length `m`.
    pub fn new(pi: DenseMatrix, a: DenseMatrix, pi0: Vec<f64>) -> Result<Self> {
        if !pi.is_square() {
            return Err(Error::NotSquare { rows: pi.rows(), cols: pi.cols() });
        }
        if a.rows() != pi.rows() {
            return Err(Error::dims(pi.rows(), a.rows()));
        }
        if pi0.len() != pi.rows() {
            return Err(Error::dims(pi.rows(), pi0.len()));
        }
        Ok(Self { pi, a, pi0, pi_stationary: None, criterion: None })
    }

    pub fn size(&self) -> usize {
        self.pi.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Aggregated step matrix.
    pub fn pi(&self) -> &DenseMatrix {
        &self.pi
    }

    /// Disaggregation matrix.
    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn pi0(&self) -> &[f64] {
        &self.pi0
    }

    pub fn pi_stationary(&self) -> Option<&[f64]> {
        self.pi_stationary.as_deref()
    }

    /// Convergence criterion, when a pipeline computed it.
    pub fn criterion(&self) -> Option<f64> {
        self.criterion
    }

    pub(crate) fn set_stationary(&mut self, pi: Vec<f64>) {
        debug_assert_eq!(pi.len(), self.size());
        self.pi_stationary = Some(pi);
    }

    pub(crate) fn set_criterion(&mut self, value: f64) {
        self.criterion = Some(value);
    }

    /// `pi^T A` for an aggregated vector `pi`.
    pub fn disaggregate(&self, pi: &[f64]) -> Vec<f64> {
        self.a.vec_mul(pi)
    }
}

/// `Pi = H_j`, `A = Q_j`, `pi_0 = (||p0||_2, 0, ..., 0)`.
pub fn build_aggregation(f: &ArnoldiFactorization, p0: &Distribution) -> Aggregation {
    let mut pi0 = vec![0.0; f.size()];
    pi0[0] = p0.l2_norm();
    Aggregation {
        pi: f.h.clone(),
        a: f.basis_matrix(),
        pi0,
        pi_stationary: None,
        criterion: None,
    }
}

/// Lower bound on the 2-norm condition number of the normalized Krylov matrix
/// with rows `p0^T P^i / ||p0^T P^i||_2`, `i < j`.
///
/// The rows are orthogonalized with two modified Gram-Schmidt passes; for unit
/// rows the reciprocal of the smallest residual norm bounds the condition
/// number from below. Returns infinity when a row falls into the span of its
/// predecessors.
pub fn krylov_condition_estimate(p: &StochasticMatrix, p0: &Distribution, j: usize) -> Result<f64> {
    if p0.len() != p.n() {
        return Err(Error::dims(p.n(), p0.len()));
    }
    let norm = norm2(p0.values());
    if !(norm > 0.0) {
        return Err(Error::ZeroInitialVector);
    }
    let mut krylov: Vec<f64> = p0.values().iter().map(|x| x / norm).collect();
    let mut next = vec![0.0; p.n()];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(j);
    let (mut coeffs, mut scratch) = (vec![0.0; j], vec![0.0; j]);
    let mut smallest: f64 = 1.0;
    for i in 0..j {
        if i > 0 {
            p.step_into(&krylov, &mut next);
            let nn = norm2(&next);
            if !(nn > 0.0) {
                return Ok(f64::INFINITY);
            }
            krylov.iter_mut().zip(&next).for_each(|(k, x)| *k = x / nn);
        }
        let mut w = krylov.clone();
        let r = orthogonalize_in_place(&mut w, &basis, OrthMethod::Mgs2, &mut coeffs, &mut scratch);
        if !(r > 0.0) {
            return Ok(f64::INFINITY);
        }
        smallest = smallest.min(r);
        w.iter_mut().for_each(|x| *x /= r);
        basis.push(w);
    }
    Ok(1.0 / smallest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn identity_deflates_immediately() {
        let p = StochasticMatrix::identity(6);
        let p0 = Distribution::strict(vec![0.1, 0.2, 0.3, 0.1, 0.2, 0.1]).unwrap();
        let f = arnoldi_iterate(&p, &p0, 5, OrthMethod::default(), DEFAULT_DEFLATION_TOL).unwrap();
        assert!(f.deflated());
        assert_eq!(f.size(), 1);
        assert!((f.h().get(0, 0) - 1.0).abs() < 1e-15);
        let norm = p0.l2_norm();
        for (q, x) in f.basis()[0].iter().zip(p0.values()) {
            assert!((q - x / norm).abs() < 1e-15);
        }
        assert!(f.residual_direction().is_none());
    }

    #[test]
    fn tightness_chain_size_one() {
        for eps in [0.1, 0.5, 0.9] {
            let (p, p0) = models::counterexample(eps).unwrap();
            let f = arnoldi_iterate(&p, &p0, 1, OrthMethod::default(), DEFAULT_DEFLATION_TOL).unwrap();
            assert_eq!(f.h().to_rows(), vec![vec![0.0]]);
            assert_eq!(f.basis(), &[vec![0.0, 0.0, 1.0]]);
            assert!(!f.deflated());
            assert_eq!(f.residual_norm(), 1.0);
            let agg = build_aggregation(&f, &p0);
            assert_eq!(agg.pi0(), &[1.0]);
        }
    }

    #[test]
    fn zero_start_vector_rejected() {
        let p = StochasticMatrix::identity(2);
        let p0 = Distribution::approximate(vec![0.0, 0.0]);
        assert!(matches!(
            arnoldi_iterate(&p, &p0, 1, OrthMethod::Cgs, 1e-12),
            Err(Error::ZeroInitialVector)
        ));
        let p0 = Distribution::uniform(3);
        assert!(matches!(
            arnoldi_iterate(&p, &p0, 1, OrthMethod::Cgs, 1e-12),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(arnoldi_iterate(&p, &Distribution::uniform(2), 3, OrthMethod::Cgs, 1e-12).is_err());
    }

    #[test]
    fn hessenberg_pattern_and_orthonormal_rows() {
        let p = models::random_chain(12, 0.5, 3).unwrap();
        let p0 = Distribution::uniform(12);
        let f = arnoldi_iterate(&p, &p0, 8, OrthMethod::default(), DEFAULT_DEFLATION_TOL).unwrap();
        for i in 0..f.size() {
            for l in (i + 2)..f.size() {
                assert_eq!(f.h().get(i, l), 0.0);
            }
        }
        assert!(crate::orthonorm::orthogonality_loss(f.basis()) < 1e-10);
        assert!(relation_residual(&f, &p) < 1e-10);
    }

    #[test]
    fn growing_past_capacity_matches_preallocated_run() {
        let p = models::random_chain(15, 0.4, 9).unwrap();
        let p0 = Distribution::uniform(15);
        let mut small = ArnoldiProcess::new(&p, p0.values(), OrthMethod::Mgs2, 1e-12, 1).unwrap();
        while small.size() < 10 && small.expand() {}
        let big = arnoldi_iterate(&p, &p0, 10, OrthMethod::Mgs2, 1e-12).unwrap();
        assert_eq!(small.factorization(), big);
    }

    #[test]
    fn aggregation_shape_checks() {
        let pi = DenseMatrix::identity(2);
        assert!(Aggregation::new(pi.clone(), DenseMatrix::zeros(3, 4), vec![1.0, 0.0]).is_err());
        assert!(Aggregation::new(pi.clone(), DenseMatrix::zeros(2, 4), vec![1.0]).is_err());
        let agg = Aggregation::new(pi, DenseMatrix::zeros(2, 4), vec![1.0, 0.0]).unwrap();
        assert_eq!((agg.size(), agg.n()), (2, 4));
    }
}
