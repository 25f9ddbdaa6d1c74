//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use arnagg::mchain::DenseMatrix;
use arnagg::schur::C64;
use arnagg::StochasticMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Every state reaches every other state.
pub fn strongly_connected(p: &StochasticMatrix) -> bool {
    let n = p.n();
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for i in 0..n {
        p.matrix().for_each_in_row(i, |j, v| {
            if v > 0.0 {
                fwd[i].push(j);
                bwd[j].push(i);
            }
        });
    }
    let reaches_all = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reaches_all(&fwd) && reaches_all(&bwd)
}

/// Stationary distribution by power iteration on the lazy chain `(P + I) / 2`.
pub fn power_stationary(p: &StochasticMatrix) -> Vec<f64> {
    let n = p.n();
    let mut x = vec![1.0 / n as f64; n];
    let mut xp = vec![0.0; n];
    for _ in 0..1_000_000 {
        p.step_into(&x, &mut xp);
        let mut delta = 0.0;
        for (a, b) in x.iter_mut().zip(&xp) {
            let next = 0.5 * (*a + b);
            delta += (next - *a).abs();
            *a = next;
        }
        if delta <= 1e-15 {
            break;
        }
    }
    let s: f64 = x.iter().sum();
    x.iter().map(|v| v / s).collect()
}

/// Eigenvalues as roots of the characteristic polynomial (Faddeev-LeVerrier
/// coefficients, Durand-Kerner iteration, Newton polish).
pub fn char_poly_roots(m: &DenseMatrix) -> Vec<C64> {
    let n = m.rows();
    // coeffs[i] multiplies lambda^i; monic.
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut mk = DenseMatrix::zeros(n, n);
    for k in 1..=n {
        let mut next = m.matmul(&mk).unwrap();
        for i in 0..n {
            next.set(i, i, next.get(i, i) + coeffs[n - k + 1]);
        }
        let am = m.matmul(&next).unwrap();
        let tr: f64 = (0..n).map(|i| am.get(i, i)).sum();
        coeffs[n - k] = -tr / k as f64;
        mk = next;
    }
    let eval = |z: C64| coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let deriv = |z: C64| {
        coeffs.iter().enumerate().skip(1).rev().fold(C64::new(0.0, 0.0), |acc, (i, &c)| acc * z + c * i as f64)
    };
    let radius = 1.0 + coeffs[..n].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|i| seed.powu(i as u32) * radius).collect();
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            change = change.max(step.norm());
        }
        if change <= 1e-15 * radius {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..5 {
            let d = deriv(*r);
            if d.norm() > 0.0 {
                *r -= eval(*r) / d;
            }
        }
    }
    roots
}

/// Largest distance in a greedy nearest pairing of two equally sized multisets.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|u, v| u.1.total_cmp(&v.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn random_dense(n: usize, rng: &mut impl Rng) -> DenseMatrix {
    let data = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(n, n, data).unwrap()
}
