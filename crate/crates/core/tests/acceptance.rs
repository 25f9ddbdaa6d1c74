//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Pass a substring as the first non-flag argument to run only matching criteria.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use arnagg::aggregate::{
    convergence_criterion, exactness_defect, normalization_rule, normalize_in_place, stationary_residual,
    NormalizationRule,
};
use arnagg::arnoldi::{krylov_condition_estimate, relation_residual, ArnoldiProcess, DEFAULT_DEFLATION_TOL};
use arnagg::bench::{bench_stage, bench_table, BenchOptions, BenchStage};
use arnagg::orthonorm::orthogonality_loss;
use arnagg::schur::{leading_eigvec, CMatrix, SchurOptions};
use arnagg::{
    aggregated_stationary, arnoldi_iterate, build_aggregation, error_trace, models, pipeline_dynamic, pipeline_naive,
    pipeline_schur, schur_decompose, Aggregation, DynamicConfig, Error, NormalizationPolicy, OrthMethod,
    StochasticMatrix, TraceFlags,
};
use common::{char_poly_roots, l1_diff, multiset_distance, power_stationary, random_dense, rng, strongly_connected};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn full_trace(p: &StochasticMatrix, p0: &arnagg::Distribution, agg: &Aggregation, k_max: usize) -> arnagg::ErrorTrace {
    let ks: Vec<usize> = (0..=k_max).collect();
    error_trace(p, p0, agg, &ks, NormalizationPolicy::Never, TraceFlags { bounds: true, stationary: false }).unwrap()
}

/// Random irreducible chain of size `n`, retrying seeds until strongly connected.
fn irreducible_chain(n: usize, density: f64, seed: u64) -> StochasticMatrix {
    (0..)
        .map(|t| models::random_chain(n, density, seed * 1000 + t).unwrap())
        .find(strongly_connected)
        .unwrap()
}

fn counterexample_tightness() -> Outcome {
    for eps in [0.1, 0.5, 0.9] {
        let (p, p0) = models::counterexample(eps).unwrap();
        let agg = pipeline_naive(&p, &p0, 1, OrthMethod::default()).unwrap();
        check(agg.pi().get(0, 0) == 0.0 && agg.size() == 1, || format!("eps {eps}: H = {:?}", agg.pi()))?;
        check(agg.pi0() == [1.0], || format!("eps {eps}: pi0 = {:?}", agg.pi0()))?;
        let t = full_trace(&p, &p0, &agg, 100);
        check(t.e_k[0].abs() <= 1e-14, || format!("eps {eps}: e_0 = {}", t.e_k[0]))?;
        for k in 1..=100 {
            check((t.e_k[k] - 1.0).abs() <= 1e-12, || format!("eps {eps}: e_{k} = {}", t.e_k[k]))?;
            check((t.bound_general[k] - t.e_k[k]).abs() <= 1e-12, || {
                format!("eps {eps}: bound_general({k}) = {} vs e_k {}", t.bound_general[k], t.e_k[k])
            })?;
        }
    }
    Ok("eps 0.1/0.5/0.9, e_k = bound_general = 1 for k = 1..100".into())
}

fn lag_exactness() -> Outcome {
    let (mut growth, mut eligible, mut checked) = (0usize, 0usize, 0usize);
    for chain in 0..50u64 {
        let n = 10 + (chain as usize * 40) / 49;
        let density = [0.15, 0.3, 0.6, 1.0][chain as usize % 4];
        let p = models::random_chain(n, density, 100 + chain).unwrap();
        let p0 = models::random_distribution(n, 200 + chain).unwrap();
        let mut process = ArnoldiProcess::new(&p, p0.values(), OrthMethod::default(), DEFAULT_DEFLATION_TOL, n).unwrap();
        for j in 2..=n {
            while process.size() < j && process.expand() {}
            let deflated = process.size() < j;
            let size = process.size();
            let agg = build_aggregation(&process.factorization(), &p0);
            let t = full_trace(&p, &p0, &agg, size);
            checked += 1;
            for k in 0..size {
                check(t.e_k[k] <= 1e-9, || format!("chain {chain} (n {n}) j {size}: e_{k} = {:e}", t.e_k[k]))?;
            }
            if deflated {
                // Every larger j yields the same aggregation.
                break;
            }
            if j < n {
                eligible += 1;
                if t.e_k[j] > t.e_k[j - 1] {
                    growth += 1;
                }
            }
        }
    }
    let share = growth as f64 / eligible as f64;
    check(share >= 0.9, || format!("error grows at k = j in only {growth}/{eligible} cases"))?;
    Ok(format!("{checked} aggregations exact up to j-1; growth at k = j in {growth}/{eligible} ({:.1}%)", 100.0 * share))
}

fn full_size_exactness() -> Outcome {
    let mut worst = [0.0f64; 5];
    for case in 0..30u64 {
        let n = 2 + (case as usize * 28) / 29;
        let density = if case % 2 == 0 { 0.3 } else { 1.0 };
        let p = irreducible_chain(n, density, 300 + case);
        let p0 = models::random_distribution(n, 400 + case).unwrap();
        let agg = pipeline_schur(&p, &p0, n, OrthMethod::default()).map_err(|e| format!("case {case}: {e}"))?;
        let defect = exactness_defect(&p, &agg).unwrap().inf_norm();
        let init = l1_diff(&agg.a().vec_mul(agg.pi0()), p0.values());
        let crit = agg.criterion().unwrap();
        let stationary = agg.disaggregate(agg.pi_stationary().unwrap());
        let residual = stationary_residual(&p, &stationary);
        let oracle = l1_diff(&stationary, &power_stationary(&p));
        let vals = [defect, init, crit, residual, oracle];
        let limits = [1e-8, 1e-12, 1e-10, 1e-8, 1e-8];
        let names = ["defect", "initial error", "criterion", "stationary residual", "oracle distance"];
        for i in 0..5 {
            worst[i] = worst[i].max(vals[i]);
            check(vals[i] <= limits[i], || format!("case {case} (n {n}): {} = {:e}", names[i], vals[i]))?;
        }
    }
    Ok(format!(
        "30 chains n = 2..30; worst defect {:.1e}, initial {:.1e}, criterion {:.1e}, residual {:.1e}, oracle {:.1e}",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    ))
}

fn bound_chain() -> Outcome {
    let mut r = rng(4);
    let mut worst_gap: f64 = f64::INFINITY;
    for triple in 0..100u64 {
        let n = r.gen_range(5..=60);
        let density = r.gen_range(0.05..=1.0);
        let j = r.gen_range(1..n);
        let k_max = r.gen_range(1..=200);
        let p = models::random_chain(n, density, 500 + triple).unwrap();
        let p0 = models::random_distribution(n, 600 + triple).unwrap();
        let agg = pipeline_naive(&p, &p0, j, OrthMethod::default()).unwrap();
        let t = full_trace(&p, &p0, &agg, k_max);
        for k in 0..=k_max {
            let (e, bs, bg) = (t.e_k[k], t.bound_specific[k], t.bound_general[k]);
            check(e <= bs + 1e-8, || format!("triple {triple} (n {n}, j {j}) k {k}: e {e:e} > specific {bs:e}"))?;
            check(bs + 1e-8 <= bg + 1e-6, || format!("triple {triple} (n {n}, j {j}) k {k}: specific {bs:e} > general {bg:e}"))?;
            worst_gap = worst_gap.min(bs - e);
        }
    }
    Ok(format!("100 triples, every k checked; smallest specific-bound slack {worst_gap:.2e}"))
}

fn orthogonalization_ordering() -> Outcome {
    let (n, j) = (100, 80);
    let (p, p0) = models::ill_conditioned_chain(n, 0).unwrap();
    let cond = krylov_condition_estimate(&p, &p0, j).unwrap();
    check(cond >= 1e8, || format!("Krylov condition estimate {cond:e} below 1e8"))?;
    let run = |m: OrthMethod| {
        let f = arnoldi_iterate(&p, &p0, j, m, DEFAULT_DEFLATION_TOL).unwrap();
        (f.size(), orthogonality_loss(f.basis()), relation_residual(&f, &p))
    };
    let (size, cgs_loss, cgs_rel) = run(OrthMethod::Cgs);
    check(size == j, || format!("CGS deflated at {size}"))?;
    let mut report = format!("cond >= {cond:.1e}; CGS loss {cgs_loss:.2e} rel {cgs_rel:.2e}");
    let mut losses = Vec::new();
    for m in [OrthMethod::Cgs2, OrthMethod::Mgs2, OrthMethod::cgsir()] {
        let (size, loss, rel) = run(m);
        check(size == j, || format!("{m} deflated at {size}"))?;
        check(cgs_loss > loss, || format!("CGS loss {cgs_loss:e} not above {m} loss {loss:e}"))?;
        check(cgs_rel > rel, || format!("CGS relation residual {cgs_rel:e} not above {m} {rel:e}"))?;
        report += &format!("; {m} loss {loss:.2e} rel {rel:.2e}");
        losses.push(loss);
    }
    let ratio = losses[0].max(losses[1]) / losses[0].min(losses[1]);
    check(ratio <= 10.0, || format!("CGS2 and MGS2 loss differ by factor {ratio:.2}"))?;
    let ir_ratio = losses[2] / losses[0];
    check(ir_ratio <= 10.0, || format!("CGSIR loss is {ir_ratio:.2} times CGS2"))?;
    Ok(report)
}

fn schur_correctness() -> Outcome {
    let mut r = rng(6);
    let (mut worst_rec, mut worst_unit, mut worst_roots) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..100usize {
        let n = 1 + case % 30;
        let m = match case % 3 {
            0 => random_dense(n, &mut r),
            1 => models::random_chain(n, r.gen_range(0.1..=1.0), case as u64).unwrap().to_dense(),
            // Upper Hessenberg input as produced by the Arnoldi iteration, transposed.
            _ => {
                let p = models::random_chain(n.max(2), 0.5, case as u64).unwrap();
                let p0 = models::random_distribution(p.n(), case as u64).unwrap();
                arnoldi_iterate(&p, &p0, n, OrthMethod::default(), DEFAULT_DEFLATION_TOL).unwrap().h().transpose()
            }
        };
        let n = m.rows();
        let s = schur_decompose(&m, SchurOptions::default()).map_err(|e| format!("case {case}: {e}"))?;
        let scale = m.inf_norm().max(f64::MIN_POSITIVE);
        let rec = CMatrix::from_real(&m).sub(&s.reconstruct()).inf_norm() / scale;
        let u = s.u();
        let unit = u.adjoint().matmul(u).sub(&CMatrix::identity(n)).inf_norm();
        let below = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| s.t()[(i, j)].norm()).fold(0.0, f64::max);
        check(rec <= 1e-9, || format!("case {case} (n {n}): reconstruction {rec:e}"))?;
        check(unit <= 1e-10, || format!("case {case} (n {n}): unitarity {unit:e}"))?;
        check(below == 0.0, || format!("case {case} (n {n}): T not triangular ({below:e})"))?;
        worst_rec = worst_rec.max(rec);
        worst_unit = worst_unit.max(unit);
        if n <= 5 {
            let d = multiset_distance(s.eigenvalues(), &char_poly_roots(&m));
            check(d <= 1e-6, || format!("case {case} (n {n}): eigenvalues off by {d:e}"))?;
            worst_roots = worst_roots.max(d);
        }
    }
    let mut worst_lambda: f64 = 0.0;
    for case in 0..20u64 {
        let n = 3 + case as usize;
        let p = irreducible_chain(n, 0.4, 700 + case);
        let p0 = models::random_distribution(n, 800 + case).unwrap();
        let agg = pipeline_naive(&p, &p0, n, OrthMethod::default()).unwrap();
        let s = schur_decompose(&agg.pi().transpose(), SchurOptions::default()).unwrap();
        let (lambda, _) = leading_eigvec(&s);
        let d = (lambda - 1.0).norm();
        check(d <= 1e-8, || format!("chain {case}: selected eigenvalue {lambda}"))?;
        worst_lambda = worst_lambda.max(d);
    }
    Ok(format!(
        "100 matrices: reconstruction {worst_rec:.1e}, unitarity {worst_unit:.1e}, roots {worst_roots:.1e}; \
         20 chains |lambda - 1| <= {worst_lambda:.1e}"
    ))
}

fn normalization_rules() -> Outcome {
    let mut r = rng(7);
    let exp = |r: &mut rand_chacha::ChaCha8Rng| -r.gen_range(f64::EPSILON..1.0f64).ln();
    let sample_pk = |r: &mut rand_chacha::ChaCha8Rng, n: usize| {
        let mut v: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.2) { 0.0 } else { exp(r) }).collect();
        if v.iter().all(|&x| x == 0.0) {
            v[r.gen_range(0..n)] = 1.0;
        }
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    };
    let helps = |pt: &[f64], pk: &[f64]| {
        let mut normalized = pt.to_vec();
        normalize_in_place(&mut normalized, NormalizationPolicy::Always).unwrap();
        (l1_diff(&normalized, pk), l1_diff(pt, pk))
    };

    let mut proven = [0usize; 2];
    for i in 0..10_000 {
        let n = 2 + i % 9;
        let pk = sample_pk(&mut r, n);
        let pt: Vec<f64> = if i % 2 == 0 {
            // ||p~||_1 >= 2: signed entries, sometimes a scaled copy of p_k.
            let mut v: Vec<f64> = if r.gen_bool(0.3) {
                pk.iter().map(|x| x + r.gen_range(-0.2..0.2)).collect()
            } else {
                (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
            };
            let target = if r.gen_bool(0.1) { 2.0 } else { 2.0 + 3.0 * r.gen::<f64>() };
            let s: f64 = v.iter().map(|x| x.abs()).sum();
            v.iter_mut().for_each(|x| *x *= target / s);
            v
        } else {
            // All entries <= 0 with ||p~||_1 >= 1.
            let mut v: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.2) { 0.0 } else { -exp(&mut r) }).collect();
            if v.iter().all(|&x| x == 0.0) {
                v[0] = -1.0;
            }
            let target = if r.gen_bool(0.1) { 1.0 } else { 1.0 + 2.0 * r.gen::<f64>() };
            let s: f64 = v.iter().map(|x| x.abs()).sum();
            v.iter_mut().for_each(|x| *x *= target / s);
            v
        };
        let rule = if i % 2 == 0 { NormalizationRule::LargeMass } else { NormalizationRule::NonPositive };
        check(rule.holds(&pt, 1e-9), || format!("sample {i} does not satisfy {rule:?}: {pt:?}"))?;
        check(normalization_rule(&pt, 1e-9).is_some(), || format!("sample {i}: no rule selected for {pt:?}"))?;
        let (after, before) = helps(&pt, &pk);
        check(after <= before + 1e-12, || {
            format!("sample {i} ({rule:?}): normalized {after:e} > unnormalized {before:e}; p~ {pt:?}, p_k {pk:?}")
        })?;
        proven[i % 2] += 1;
    }

    // Conjectured rules: logged only.
    let mut log = Vec::new();
    for rule in [NormalizationRule::VeryNegativeEntry, NormalizationRule::LargeEntry, NormalizationRule::NegativeRemainder] {
        let (mut total, mut violations, mut worst) = (0usize, 0usize, 0.0f64);
        for i in 0..3000 {
            let n = 2 + i % 9;
            let pk = sample_pk(&mut r, n);
            let mut pt: Vec<f64> = (0..n).map(|_| r.gen_range(-1.5..1.5)).collect();
            let at = r.gen_range(0..n);
            match rule {
                NormalizationRule::VeryNegativeEntry => pt[at] = -1.0 - exp(&mut r),
                NormalizationRule::LargeEntry => pt[at] = 1.125 + exp(&mut r),
                _ => {
                    let others: f64 = pt.iter().enumerate().filter(|&(k, _)| k != at).map(|(_, x)| x).sum();
                    let shift = (-1.0 - exp(&mut r) * 0.5 - others) / (n - 1) as f64;
                    for (k, x) in pt.iter_mut().enumerate() {
                        if k != at {
                            *x += shift.min(0.0);
                        }
                    }
                }
            }
            if !rule.holds(&pt, 0.0) || pt.iter().all(|&x| x == 0.0) {
                continue;
            }
            total += 1;
            let (after, before) = helps(&pt, &pk);
            if after > before + 1e-12 {
                violations += 1;
                worst = worst.max(after - before);
            }
        }
        log.push(format!("{rule:?} {violations}/{total} violations (worst excess {worst:.2e})"));
    }
    for line in &log {
        println!("    conjecture sample: {line}");
    }
    Ok(format!("{} LargeMass + {} NonPositive samples hold; {}", proven[0], proven[1], log.join(", ")))
}

fn ncd_size(seed: u64) -> (usize, usize) {
    let bs = 5 + (seed as usize % 3) * 5;
    let mut nb = 2 + seed as usize % 4;
    while nb * bs > 60 {
        nb -= 1;
    }
    (nb, bs)
}

fn dynamic_agreement() -> Outcome {
    let (eps, s) = (1e-10, 5);
    let mut summary = Vec::new();
    for seed in 0..20u64 {
        let (nb, bs) = ncd_size(seed);
        let p = models::random_ncd(nb, bs, 1e-3, seed).unwrap();
        let n = p.n();
        let p0 = models::random_distribution(n, seed).unwrap();

        // Exhaustive sweep over every size.
        let mut process = ArnoldiProcess::new(&p, p0.values(), OrthMethod::default(), DEFAULT_DEFLATION_TOL, n).unwrap();
        let mut smallest = None;
        while process.expand() {
            let agg = build_aggregation(&process.factorization(), &p0);
            let crit = match aggregated_stationary(&agg) {
                Ok(a) => convergence_criterion(&p, &a).unwrap(),
                Err(Error::ComplexStationary(_)) => f64::INFINITY,
                Err(e) => return Err(format!("seed {seed}: size {}: {e}", process.size())),
            };
            if crit <= eps {
                smallest = Some(process.size());
                break;
            }
        }
        let smallest = smallest.ok_or_else(|| format!("seed {seed}: no size reaches {eps:e}"))?;
        let dynamic = pipeline_dynamic(&p, &p0, DynamicConfig::new(n, eps, s)).map_err(|e| format!("seed {seed}: {e}"))?;
        let d = dynamic.size();
        check(d >= smallest && d < smallest + s, || {
            format!("seed {seed} (n {n}): dynamic stopped at {d}, sweep minimum {smallest}")
        })?;
        summary.push(format!("{smallest}->{d}"));
    }
    Ok(format!("20 NCD chains, sweep->dynamic sizes: {}", summary.join(" ")))
}

fn complexity_trend() -> Outcome {
    let p = models::random_chain(2000, 0.005, 9).unwrap();
    check(p.matrix().is_sparse(), || "chain is not stored sparse".into())?;
    let p0 = models::random_distribution(2000, 9).unwrap();
    let opts = BenchOptions { reps: 5, warmup: 1, ..BenchOptions::default() };
    let small = bench_stage(&p, &p0, 64, BenchStage::Arnoldi, &opts).unwrap();
    let large = bench_stage(&p, &p0, 128, BenchStage::Arnoldi, &opts).unwrap();
    let table = bench_table(&[small.clone(), large.clone()]).unwrap();
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_bench.csv");
    table.save(&path).map_err(|e| format!("writing {}: {e}", path.display()))?;
    let ratio = large.median_s / small.median_s;
    let note = if (2.5..=6.0).contains(&ratio) { "within" } else { "outside" };
    check((1.5..=10.0).contains(&ratio), || format!("runtime ratio {ratio:.2} outside [1.5, 10]"))?;
    Ok(format!(
        "j 64 -> 128: {:.2} ms -> {:.2} ms, ratio {ratio:.2} ({note} the expected [2.5, 6]); CSV at {}",
        small.median_s * 1e3,
        large.median_s * 1e3,
        path.display()
    ))
}

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "counterexample tightness", limit: Duration::from_secs(1), run: counterexample_tightness },
        Criterion { id: 2, name: "lag exactness", limit: Duration::from_secs(30), run: lag_exactness },
        Criterion { id: 3, name: "full-size exactness", limit: Duration::from_secs(10), run: full_size_exactness },
        Criterion { id: 4, name: "bound chain", limit: Duration::from_secs(60), run: bound_chain },
        Criterion { id: 5, name: "orthogonalization ordering", limit: Duration::from_secs(30), run: orthogonalization_ordering },
        Criterion { id: 6, name: "schur correctness", limit: Duration::from_secs(60), run: schur_correctness },
        Criterion { id: 7, name: "normalization rules", limit: Duration::from_secs(10), run: normalization_rules },
        Criterion { id: 8, name: "dynamic pipeline agreement", limit: Duration::from_secs(120), run: dynamic_agreement },
        Criterion { id: 9, name: "complexity trend", limit: Duration::from_secs(120), run: complexity_trend },
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.as_deref().map_or(true, |f| c.name.contains(f))) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= c.limit {
                Ok(msg)
            } else {
                Err(format!("took {elapsed:.2?}, limit {:?}", c.limit))
            }
        });
        match outcome {
            Ok(msg) => println!("PASS criterion {} ({}) [{elapsed:.2?}]: {msg}", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({}) [{elapsed:.2?}]: {msg}", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
