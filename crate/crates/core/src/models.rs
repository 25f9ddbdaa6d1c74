//! Synthetic Markov chains: NCD compositions, the three-state tightness chain
//! and seeded random chains.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::mchain::{
    validate_stochastic, CsrMatrix, Distribution, Matrix, StochasticMatrix,
    STOCHASTIC_TOL,
};

/// Block-diagonal chain `blockdiag(P_1, ..., P_N) + epsilon * C`.
#[derive(Debug, Clone)]
pub struct NcdSpec {
    pub blocks: Vec<StochasticMatrix>,
    /// Integer coupling matrix with zero row sums.
    pub coupling: Vec<Vec<i64>>,
    pub epsilon: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(epsilon))
    }
}

pub fn ncd_compose(spec: &NcdSpec) -> Result<StochasticMatrix> {
    check_epsilon(spec.epsilon)?;
    let n: usize = spec.blocks.iter().map(StochasticMatrix::n).sum();
    if spec.coupling.len() != n {
        return Err(Error::dims(n, spec.coupling.len()));
    }
    for (row, c) in spec.coupling.iter().enumerate() {
        if c.len() != n {
            return Err(Error::dims(n, c.len()));
        }
        if c.iter().sum::<i64>() != 0 {
            return Err(Error::InvalidArgument(format!("coupling row {row} does not sum to zero")));
        }
    }

    let mut triplets = Vec::new();
    let mut offset = 0;
    for block in &spec.blocks {
        for i in 0..block.n() {
            block.matrix().for_each_in_row(i, |j, v| triplets.push((offset + i, offset + j, v)));
        }
        offset += block.n();
    }
    for (i, c) in spec.coupling.iter().enumerate() {
        for (j, &cij) in c.iter().enumerate() {
            if cij != 0 {
                triplets.push((i, j, spec.epsilon * cij as f64));
            }
        }
    }
    let mut csr = CsrMatrix::from_triplets(n, n, &triplets)?;
    for i in 0..n {
        for (j, v) in csr.row(i) {
            if v < -STOCHASTIC_TOL || v > 1.0 + STOCHASTIC_TOL {
                return Err(Error::InvalidCoupling { row: i, col: j, value: v });
            }
        }
    }
    // Cancellation can leave exact zeros or tiny negatives; drop them.
    let mut cleaned = Vec::with_capacity(csr.nnz());
    for i in 0..n {
        cleaned.extend(csr.row(i).filter(|&(_, v)| v > 0.0).map(|(j, v)| (i, j, v)));
    }
    csr = CsrMatrix::from_triplets(n, n, &cleaned)?;
    validate_stochastic(storage_for(csr), STOCHASTIC_TOL)
}

/// Dense storage once at least half the entries are filled.
fn storage_for(csr: CsrMatrix) -> Matrix {
    let n = csr.rows();
    if 2 * csr.nnz() >= n * n {
        Matrix::Dense(csr.to_dense())
    } else {
        Matrix::Sparse(csr)
    }
}

/// `[[1-eps, eps, 0], [0, 1, 0], [0, 1, 0]]` with `p0 = (0, 0, 1)`, where the
/// size-one aggregation attains the general error bound with equality.
pub fn counterexample(epsilon: f64) -> Result<(StochasticMatrix, Distribution)> {
    check_epsilon(epsilon)?;
    let spec = NcdSpec {
        blocks: vec![
            StochasticMatrix::from_rows(&[[1.0]])?,
            StochasticMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]])?,
        ],
        coupling: vec![vec![-1, 1, 0], vec![0, 0, 0], vec![0, 0, 0]],
        epsilon,
    };
    let p = ncd_compose(&spec)?.to_dense_chain();
    Ok((p, Distribution::point(3, 2)?))
}

/// Random chain with `max(1, round(density * n))` nonzeros per row at
/// distinct columns, weights drawn from Exp(1) and normalized.
pub fn random_chain(n: usize, density: f64, seed: u64) -> Result<StochasticMatrix> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {density} must lie in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_row = ((density * n as f64).round() as usize).clamp(1, n);
    let mut triplets = Vec::with_capacity(n * per_row);
    let mut weights = vec![0.0; per_row];
    for i in 0..n {
        let mut cols = sample(&mut rng, n, per_row).into_vec();
        cols.sort_unstable();
        for w in weights.iter_mut() {
            *w = rng.sample::<f64, _>(Exp1);
        }
        let total: f64 = weights.iter().sum();
        triplets.extend(cols.iter().zip(&weights).map(|(&j, &w)| (i, j, w / total)));
    }
    let csr = CsrMatrix::from_triplets(n, n, &triplets)?;
    let m = if density < 0.5 { Matrix::Sparse(csr) } else { Matrix::Dense(csr.to_dense()) };
    validate_stochastic(m, STOCHASTIC_TOL)
}

/// `n_blocks` dense random blocks of `block_size` states each. Every row leaks
/// `epsilon` from its largest in-block entry to a random state of another block.
pub fn random_ncd(n_blocks: usize, block_size: usize, epsilon: f64, seed: u64) -> Result<StochasticMatrix> {
    check_epsilon(epsilon)?;
    if n_blocks == 0 || block_size == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (0..n_blocks)
        .map(|_| random_chain(block_size, 1.0, rng.gen()))
        .collect::<Result<Vec<_>>>()?;
    let n = n_blocks * block_size;
    let mut coupling = vec![vec![0i64; n]; n];
    if n_blocks > 1 {
        for (b, block) in blocks.iter().enumerate() {
            for i in 0..block_size {
                let row = b * block_size + i;
                let largest = (0..block_size)
                    .max_by(|&x, &y| block.get(i, x).total_cmp(&block.get(i, y)))
                    .expect("block is non-empty");
                let other = (b + rng.gen_range(1..n_blocks)) % n_blocks;
                let target = other * block_size + rng.gen_range(0..block_size);
                coupling[row][b * block_size + largest] -= 1;
                coupling[row][target] += 1;
            }
        }
    }
    ncd_compose(&NcdSpec { blocks, coupling, epsilon })
}

/// A chain whose Krylov basis is badly conditioned: a sparse random chain with
/// most of its mass on a slowly mixing cycle, started from a point mass.
///
/// Each state keeps `stay` of its mass, passes most of the rest to its cycle
/// successor and spreads `leak` over `fanout` random states.
pub fn ill_conditioned_chain(n: usize, seed: u64) -> Result<(StochasticMatrix, Distribution)> {
    if n < 2 {
        return Err(Error::InvalidArgument("ill-conditioned chain needs n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (stay, leak, fanout) = (0.9, 1e-3, 3.min(n));
    let mut triplets = Vec::with_capacity(n * (fanout + 2));
    for i in 0..n {
        triplets.push((i, i, stay));
        triplets.push((i, (i + 1) % n, 1.0 - stay - leak));
        for j in sample(&mut rng, n, fanout).into_iter() {
            triplets.push((i, j, leak / fanout as f64));
        }
    }
    let csr = CsrMatrix::from_triplets(n, n, &triplets)?;
    let p = validate_stochastic(Matrix::Sparse(csr), STOCHASTIC_TOL)?;
    Ok((p, Distribution::point(n, 0)?))
}

/// Random strict distribution with Exp(1) weights.
pub fn random_distribution(n: usize, seed: u64) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = w.iter().sum();
    Distribution::strict(w.into_iter().map(|x| x / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_state_block() {
        let spec = NcdSpec {
            blocks: vec![StochasticMatrix::identity(1)],
            coupling: vec![vec![0]],
            epsilon: 0.3,
        };
        assert_eq!(ncd_compose(&spec).unwrap().to_dense().to_rows(), vec![vec![1.0]]);
    }

    #[test]
    fn tightness_chain_from_blocks() {
        let (p, p0) = counterexample(0.25).unwrap();
        assert_eq!(
            p.to_dense().to_rows(),
            vec![vec![0.75, 0.25, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]]
        );
        assert_eq!(p0.values(), &[0.0, 0.0, 1.0]);
        assert_eq!(counterexample(0.5).unwrap().0.get(0, 0), 0.5);
        assert!(counterexample(0.999).is_ok());
        assert!(matches!(counterexample(1.0), Err(Error::EpsilonOutOfRange(_))));
        assert!(matches!(counterexample(0.0), Err(Error::EpsilonOutOfRange(_))));
    }

    #[test]
    fn coupling_pushing_below_zero() {
        let spec = NcdSpec {
            blocks: vec![
                StochasticMatrix::from_rows(&[[1.0]]).unwrap(),
                StochasticMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap(),
            ],
            coupling: vec![vec![0, 0, 0], vec![0, -1, 1], vec![0, 0, 0]],
            epsilon: 0.25,
        };
        // Moves mass from (1, 1) to (1, 2): valid.
        assert!(ncd_compose(&spec).is_ok());
        let bad = NcdSpec { coupling: vec![vec![0, 0, 0], vec![0, 1, -1], vec![0, 0, 0]], ..spec };
        assert!(matches!(ncd_compose(&bad), Err(Error::InvalidCoupling { row: 1, .. })));
    }

    #[test]
    fn random_chain_is_deterministic_and_valid() {
        assert_eq!(random_chain(1, 1.0, 0).unwrap().to_dense().to_rows(), vec![vec![1.0]]);
        let a = random_chain(40, 0.2, 42).unwrap();
        let b = random_chain(40, 0.2, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.matrix().is_sparse());
        assert_ne!(a, random_chain(40, 0.2, 43).unwrap());
        assert!(validate_stochastic(a.into_matrix(), 1e-12).is_ok());
        let full = random_chain(10, 1.0, 1).unwrap();
        assert!((0..10).all(|i| (0..10).all(|j| full.get(i, j) > 0.0)));
    }

    #[test]
    fn ncd_off_block_mass_is_small() {
        let eps = 1e-4;
        let p = random_ncd(3, 10, eps, 7).unwrap();
        for i in 0..30 {
            let block = i / 10;
            let off: f64 = (0..30).filter(|j| j / 10 != block).map(|j| p.get(i, j)).sum();
            assert!(off <= 1e-3 && off > 0.0);
            assert!((off - eps).abs() < 1e-15);
        }
        assert_eq!(random_ncd(3, 10, eps, 7).unwrap(), p);
    }

    #[test]
    fn ncd_converges_to_block_diagonal() {
        let tiny = random_ncd(2, 4, 1e-12, 5).unwrap().to_dense();
        let small = random_ncd(2, 4, 1e-3, 5).unwrap().to_dense();
        for i in 0..8 {
            for j in 0..8 {
                assert!((tiny.get(i, j) - small.get(i, j)).abs() <= 1e-3 + 1e-12);
                if i / 4 != j / 4 {
                    assert!(tiny.get(i, j) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_distribution_is_strict() {
        let d = random_distribution(7, 3).unwrap();
        assert!(d.is_strict());
        assert_eq!(d, random_distribution(7, 3).unwrap());
    }

    #[test]
    fn ill_conditioned_chain_is_stochastic() {
        let (p, p0) = ill_conditioned_chain(100, 1).unwrap();
        assert_eq!(p.n(), 100);
        assert_eq!(p0.values()[0], 1.0);
    }
}
