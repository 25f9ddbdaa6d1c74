//! Arnoldi aggregation of discrete-time Markov chains.
//!
//! A chain with transition matrix `P` and initial distribution `p0` is replaced
//! by a small linear system `(Pi, A, pi_0)` built from the Arnoldi iteration:
//! `pi_k^T = pi_0^T Pi^k` evolves in a space of dimension `j` and
//! `p~_k^T = pi_k^T A` approximates the transient distribution
//! `p_k^T = p_0^T P^k`. The crate provides the iteration with six Gram-Schmidt
//! variants, a priori error bounds, normalization heuristics and a Schur-based
//! criterion for choosing `j`.
//!
//! ```
//! use arnagg::{aggregate, models, orthonorm::OrthMethod};
//!
//! let (p, p0) = models::counterexample(0.5).unwrap();
//! let agg = aggregate::pipeline_schur(&p, &p0, 1, OrthMethod::default()).unwrap();
//! assert_eq!(agg.pi().get(0, 0), 0.0);
//! assert_eq!(agg.criterion(), Some(1.0));
//! ```

pub mod aggregate;
pub mod arnoldi;
pub mod bench;
pub mod error;
pub mod mchain;
pub mod models;
pub mod orthonorm;
pub mod report;
pub mod schur;

pub use aggregate::{
    error_trace, pipeline_dynamic, pipeline_naive, pipeline_schur, DynamicConfig, ErrorTrace,
    NormalizationPolicy, TraceFlags,
};
pub use arnoldi::{arnoldi_iterate, build_aggregation, Aggregation, ArnoldiFactorization};
pub use error::{Error, Result};
pub use mchain::{Distribution, GeneratorMatrix, StochasticMatrix};
pub use orthonorm::OrthMethod;
pub use schur::{aggregated_stationary, schur_decompose, SchurDecomposition};
