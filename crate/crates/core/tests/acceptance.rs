//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Run with `cargo test -p importance-sgd --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use importance_sgd::experiments::{run_sweep, tightness_demo, CaseSpec, SweepResult};
use importance_sgd::kaczmarz::{
    equivalence_gamma, hybrid_step, kaczmarz_bound, kaczmarz_step, run_kaczmarz, uniform_equivalence_gamma,
    KaczmarzConfig, KaczmarzStats, KaczmarzVariant, Reference,
};
use importance_sgd::numerics::{dist_sq, norm_sq, DenseMatrix, RngStream};
use importance_sgd::problem::{cocoercivity_gap, row_normalized, Problem, QuadraticComponent};
use importance_sgd::sampling::{AliasTable, RejectionSampler};
use importance_sgd::sgd::{
    iter_bound_value, run, sgd_step, step_size_sup_l, BoundCurve, IterBound, SgdConfig, StepSize,
};
use importance_sgd::weighting::{effective_constants, WeightScheme, WeightTable};

fn report(id: &str, pass: bool, detail: &str, elapsed: Duration, limit: Option<Duration>) {
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let verdict = if pass && in_time { "PASS" } else { "FAIL" };
    let limit = limit.map_or(String::new(), |l| format!(" (limit {:.0?})", l));
    println!("criterion {id}: {verdict}: {detail}; {:.2?}{limit}", elapsed);
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its runtime limit");
}

fn gaussian(rng: &mut RngStream, n: usize, d: usize) -> DenseMatrix {
    DenseMatrix::new(n, d, (0..n * d).map(|_| rng.standard_normal()).collect()).unwrap()
}

fn gaussian_vec(rng: &mut RngStream, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.standard_normal()).collect()
}

/// Random least-squares problem with row scales spread over two decades.
fn random_ls(rng: &mut RngStream, n: usize, d: usize, consistent: bool) -> (DenseMatrix, Vec<f64>) {
    let a = gaussian(rng, n, d);
    let scales: Vec<f64> = (0..n).map(|_| 10f64.powf(2.0 * rng.uniform() - 1.0)).collect();
    let a = a.scale_rows(&scales).unwrap();
    let x = gaussian_vec(rng, d);
    let mut b = a.matvec(&x).unwrap();
    if !consistent {
        b.iter_mut().for_each(|v| *v += 0.5 * rng.standard_normal());
    }
    (a, b)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_01_exact_recursion() {
    let start = Instant::now();
    let mut rng = RngStream::new(101);
    let schemes = |rng: &mut RngStream| {
        [
            WeightScheme::Uniform,
            WeightScheme::FullyBiasedL,
            WeightScheme::PartiallyBiasedL(rng.uniform()),
            WeightScheme::PartiallyBiasedL(0.5),
        ]
    };
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    for t in 0..20 {
        let (a, b) = random_ls(&mut rng, 50, 5, t % 2 == 0);
        let prob = Problem::from_least_squares(&a, &b).unwrap();
        let stats = prob.stats().unwrap();
        for scheme in schemes(&mut rng) {
            let table = WeightTable::build(scheme, &stats.lipschitz, prob.source_probs(), None).unwrap();
            let ec = effective_constants(&table, &stats.lipschitz, &stats.grad_norms_sq, prob.source_probs())
                .unwrap();
            let gamma = 0.5 / ec.sup_l_w;
            for _ in 0..25 {
                let x: Vec<f64> = gaussian_vec(&mut rng, 5)
                    .iter()
                    .zip(&stats.x_star)
                    .map(|(u, s)| s + 3.0 * u)
                    .collect();
                let expected: f64 = (0..prob.len())
                    .map(|i| {
                        let y = sgd_step(&x, i, table.inv_weight(i), gamma, &prob).unwrap();
                        table.sampling_probs()[i] * dist_sq(&y, &stats.x_star)
                    })
                    .sum();
                let rhs = (1.0 - 2.0 * gamma * stats.mu * (1.0 - gamma * ec.sup_l_w)) * dist_sq(&x, &stats.x_star)
                    + 2.0 * gamma * gamma * ec.sigma_sq_w;
                worst = worst.max((expected - rhs) / rhs);
                checks += 1;
            }
        }
    }
    report(
        "1",
        worst <= 1e-10,
        &format!("{checks} iterates, max relative excess {worst:.3e}"),
        start.elapsed(),
        Some(Duration::from_secs(10)),
    );
}

#[test]
fn criterion_02_bound_curve_coverage() {
    let start = Instant::now();
    let mut rng = RngStream::new(202);
    let (a, b) = random_ls(&mut rng, 200, 10, true);
    let prob = Problem::from_least_squares(&a, &b).unwrap();
    let stats = prob.stats().unwrap();
    let scheme = WeightScheme::FullyBiasedL;
    let table = WeightTable::build(scheme, &stats.lipschitz, prob.source_probs(), None).unwrap();
    let ec = effective_constants(&table, &stats.lipschitz, &stats.grad_norms_sq, prob.source_probs()).unwrap();
    let eps = 1e-4;
    let gamma = step_size_sup_l(stats.mu, eps, ec.sup_l_w, ec.sigma_sq_w).unwrap();
    let eps0 = norm_sq(&stats.x_star);
    let curve = BoundCurve::new(gamma, stats.mu, ec.sup_l_w, ec.sigma_sq_w, eps0).unwrap();
    let max_iters = 4 * (iter_bound_value(
        IterBound::SupL { sup_l: ec.sup_l_w, sigma_sq: ec.sigma_sq_w },
        stats.mu,
        eps,
        eps0,
    )
    .unwrap()
    .ceil() as usize);
    let trials = 400;
    let mut mean: Vec<(usize, f64)> = Vec::new();
    for t in 0..trials {
        let cfg = SgdConfig::new(scheme, StepSize::Fixed(gamma), max_iters, 5000 + t);
        let rec = run(&prob, &cfg).unwrap();
        if mean.is_empty() {
            mean = rec.errors_sq.iter().map(|&(k, _)| (k, 0.0)).collect();
        }
        for (m, (_, e)) in mean.iter_mut().zip(&rec.errors_sq) {
            m.1 += e / trials as f64;
        }
    }
    let worst = mean
        .iter()
        .map(|&(k, e)| e / curve.eval(k))
        .fold(f64::NEG_INFINITY, f64::max);
    report(
        "2",
        worst <= 1.1,
        &format!("{} checkpoints to k = {max_iters}, max mean/bound {worst:.4}", mean.len()),
        start.elapsed(),
        Some(Duration::from_secs(60)),
    );
}

#[test]
fn criterion_03_kaczmarz_sgd_equivalence() {
    let start = Instant::now();
    let mut rng = RngStream::new(303);
    let mut worst: f64 = 0.0;
    for t in 0..1000 {
        let n = 5 + t % 20;
        let d = 1 + t % 7;
        let (a, b) = random_ls(&mut rng, n, d, false);
        let prob = Problem::from_least_squares(&a, &b).unwrap();
        let l = prob.lipschitz();
        let frob = a.frobenius_sq();
        let x = gaussian_vec(&mut rng, d);
        let i = (rng.uniform() * n as f64) as usize % n;
        let c = 2.0 * rng.uniform();
        let scale = 1.0 + norm_sq(&x).sqrt();

        let full = WeightTable::build(WeightScheme::FullyBiasedL, &l, prob.source_probs(), None).unwrap();
        let k = kaczmarz_step(&x, a.row(i), b[i], c).unwrap();
        let s = sgd_step(&x, i, full.inv_weight(i), equivalence_gamma(c, frob), &prob).unwrap();
        worst = worst.max(dist_sq(&k, &s).sqrt() / scale);

        let half = WeightTable::build(WeightScheme::PartiallyBiasedL(0.5), &l, prob.source_probs(), None).unwrap();
        let h = hybrid_step(&x, a.row(i), b[i], c, frob, n);
        let s = sgd_step(&x, i, half.inv_weight(i), equivalence_gamma(c, frob), &prob).unwrap();
        worst = worst.max(dist_sq(&h, &s).sqrt() / scale);

        // Uniform rows: fully biased SGD on the row-normalized system.
        let (na, nb) = row_normalized(&a, &b).unwrap();
        let nprob = Problem::from_least_squares(&na, &nb).unwrap();
        let u = kaczmarz_step(&x, a.row(i), b[i], c).unwrap();
        let s = sgd_step(&x, i, 1.0, uniform_equivalence_gamma(c, n), &nprob).unwrap();
        worst = worst.max(dist_sq(&u, &s).sqrt() / scale);
    }
    report(
        "3",
        worst <= 1e-12,
        &format!("1000 triples, max relative step difference {worst:.3e}"),
        start.elapsed(),
        Some(Duration::from_secs(1)),
    );
}

fn mean_kaczmarz_curve(a: &DenseMatrix, b: &[f64], cfg: &KaczmarzConfig, trials: u64) -> (Vec<(usize, f64)>, Vec<Vec<f64>>) {
    let mut mean: Vec<(usize, f64)> = Vec::new();
    let mut finals = Vec::new();
    for t in 0..trials {
        let rec = run_kaczmarz(a, b, &KaczmarzConfig { seed: cfg.seed + t, ..cfg.clone() }).unwrap();
        if mean.is_empty() {
            mean = rec.errors_sq.iter().map(|&(k, _)| (k, 0.0)).collect();
        }
        for (m, (_, e)) in mean.iter_mut().zip(&rec.errors_sq) {
            m.1 += e / trials as f64;
        }
        finals.push(rec.final_x);
    }
    (mean, finals)
}

#[test]
fn criterion_04_row_norm_kaczmarz_regime() {
    let start = Instant::now();
    let mut rng = RngStream::new(404);
    let a = gaussian(&mut rng, 200, 10);
    let b = a.matvec(&gaussian_vec(&mut rng, 10)).unwrap();
    let stats = KaczmarzStats::compute(&a, &b).unwrap();
    let bound = kaczmarz_bound(KaczmarzVariant::Weighted(0.5), &stats).unwrap();
    let eps0 = norm_sq(&stats.x_lsq);
    // Run until the bound reaches 1e-20, well above the round-off floor of the error.
    let iters = (2.0 * stats.cond_k * (eps0 / 1e-20).ln()) as usize;
    let cfg = KaczmarzConfig::new(KaczmarzVariant::Weighted(0.5), iters, 7000);
    let (mean, _) = mean_kaczmarz_curve(&a, &b, &cfg, 400);
    let worst = mean
        .iter()
        .map(|&(k, e)| e / ((1.0 - 1.0 / (2.0 * stats.cond_k)).powf(k as f64) * eps0))
        .fold(f64::NEG_INFINITY, f64::max);
    let rate_ok = rel_err(bound.rate, 1.0 - 1.0 / (2.0 * stats.cond_k)) < 1e-15;
    report(
        "4",
        worst <= 1.1 && rate_ok,
        &format!("K(A) = {:.3}, {iters} iterations, max mean/bound {worst:.4}", stats.cond_k),
        start.elapsed(),
        Some(Duration::from_secs(60)),
    );
}

#[test]
fn criterion_05_uniform_kaczmarz_target() {
    let start = Instant::now();
    let mut rng = RngStream::new(505);
    let a = gaussian(&mut rng, 200, 10);
    let scales: Vec<f64> = (0..200).map(|j| 1.0 + 19.0 * j as f64 / 199.0).collect();
    let a = a.scale_rows(&scales).unwrap();
    let norms: Vec<f64> = a.row_norms_sq().iter().map(|v| v.sqrt()).collect();
    let spread = norms.iter().copied().fold(0.0, f64::max) / norms.iter().copied().fold(f64::INFINITY, f64::min);
    let mut b = a.matvec(&gaussian_vec(&mut rng, 10)).unwrap();
    b.iter_mut().for_each(|v| *v += 5.0 * rng.standard_normal());
    let stats = KaczmarzStats::compute(&a, &b).unwrap();
    let variant = KaczmarzVariant::Uniform(0.05);
    let bound = kaczmarz_bound(variant, &stats).unwrap();
    let x_w = stats.x_weighted.clone().unwrap();
    let eps0 = norm_sq(&x_w);
    let iters = 10_000;
    let cfg = KaczmarzConfig {
        reference: Some(Reference::WeightedLeastSquares),
        ..KaczmarzConfig::new(variant, iters, 9000)
    };
    let trials = 400;
    let (mean, finals) = mean_kaczmarz_curve(&a, &b, &cfg, trials);
    let to_w = finals.iter().map(|x| dist_sq(x, &x_w)).sum::<f64>() / trials as f64;
    let to_lsq = finals.iter().map(|x| dist_sq(x, &stats.x_lsq)).sum::<f64>() / trials as f64;
    let worst = mean
        .iter()
        .map(|&(k, e)| e / bound.eval(k, eps0))
        .fold(f64::NEG_INFINITY, f64::max);
    report(
        "5",
        spread >= 10.0 && to_w < to_lsq && worst <= 1.1,
        &format!(
            "row-norm spread {spread:.1}, mean final distance² to weighted LS {to_w:.4e} vs LS {to_lsq:.4e}, max mean/bound {worst:.4}"
        ),
        start.elapsed(),
        Some(Duration::from_secs(60)),
    );
}

fn fmt_iters(r: &SweepResult) -> String {
    r.lambdas
        .iter()
        .zip(&r.mean_iters_to_eps)
        .zip(&r.censored)
        .map(|((l, m), c)| format!("{l}:{m:.0}{}", if *c { "+" } else { "" }))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn criterion_06_case_sweeps() {
    let start = Instant::now();
    let results: Vec<SweepResult> = (1..=5).map(|c| run_sweep(&CaseSpec::standard(c)).unwrap()).collect();
    for r in &results {
        println!("  case {}: {}", r.case_id, fmt_iters(r));
    }
    let last = |r: &SweepResult| r.lambdas.len() - 1;
    let c1 = &results[0];
    let monotone = c1.mean_iters_to_eps.windows(2).all(|w| w[0] <= w[1]);
    let cutoff = c1.censored[last(c1)] && c1.mean_iters_to_eps[last(c1)] >= 50_000.0;
    let c2 = &results[1].mean_iters_to_eps;
    let ratio = c2.iter().copied().fold(0.0, f64::max) / c2.iter().copied().fold(f64::INFINITY, f64::min);
    let interior = |r: &SweepResult| {
        let i = r.argmin_lambda().unwrap();
        r.lambdas[i] > 0.0 && r.lambdas[i] < 1.0
    };
    let c5 = &results[4];
    let c5_ok = c5.lambdas[0] == 0.0 && c5.argmin_lambda() == Some(0);
    let clauses = [
        ("6a monotone", monotone),
        ("6a cutoff at lambda=1", cutoff),
        ("6b", ratio <= 3.0),
        ("6c case 3", interior(&results[2])),
        ("6c case 4", interior(&results[3])),
        ("6d", c5_ok),
    ];
    let detail = clauses
        .iter()
        .map(|(n, ok)| format!("{n} {}", if *ok { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join(", ");
    report(
        "6",
        clauses.iter().all(|c| c.1),
        &format!("{detail}; case 2 max/min {ratio:.2}"),
        start.elapsed(),
        None,
    );
}

#[test]
fn criterion_07_tightness_demo() {
    let start = Instant::now();
    let r = tightness_demo(99, 10_000, 77).unwrap();
    report(
        "7",
        (90.0..=110.0).contains(&r.uniform_mean) && (1.8..=2.2).contains(&r.biased_mean),
        &format!("uniform mean first hit {:.2}, fully biased {:.3}", r.uniform_mean, r.biased_mean),
        start.elapsed(),
        Some(Duration::from_secs(5)),
    );
}

#[test]
fn criterion_08_cocoercivity() {
    let start = Instant::now();
    let mut rng = RngStream::new(808);
    let mut worst = f64::INFINITY;
    for t in 0..10_000 {
        let d = 1 + t % 20;
        let z: Vec<f64> = gaussian_vec(&mut rng, d).iter().map(|v| v * 10f64.powf(2.0 * rng.uniform() - 1.0)).collect();
        let c = QuadraticComponent::new(z, rng.standard_normal(), 10f64.powf(3.0 * rng.uniform() - 1.0)).unwrap();
        let x = gaussian_vec(&mut rng, d);
        let y = gaussian_vec(&mut rng, d);
        let l = c.lipschitz();
        let gap = cocoercivity_gap(&c, &x, &y).unwrap();
        worst = worst.min(gap / (1.0 + l * l * dist_sq(&x, &y)));
    }
    report(
        "8",
        worst >= -1e-10,
        &format!("10000 triples, min normalized gap {worst:.3e}"),
        start.elapsed(),
        Some(Duration::from_secs(1)),
    );
}

#[test]
fn criterion_09_weight_algebra() {
    let start = Instant::now();
    let mut rng = RngStream::new(909);
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok && failures.len() < 5 {
            failures.push(what.to_string());
        }
    };
    for _ in 0..100 {
        let n = 5 + (rng.uniform() * 40.0) as usize;
        let d = 2 + (rng.uniform() * 4.0) as usize;
        let (a, b) = random_ls(&mut rng, n, d, false);
        let raw: Vec<f64> = (0..n).map(|_| rng.uniform() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let comps = a
            .row_iter()
            .zip(&b)
            .map(|(r, &bi)| QuadraticComponent::new(r.to_vec(), bi, 1.0 + rng.uniform()).unwrap())
            .collect();
        let prob = Problem::new(comps, p.clone()).unwrap();
        let s = prob.stats().unwrap();
        let g: Vec<f64> = s.grad_norms_sq.iter().map(|v| v.sqrt() + rng.uniform()).collect();
        let x = gaussian_vec(&mut rng, d);
        let objective = prob.objective(&x);
        let lambda = rng.uniform();
        let schemes = [
            WeightScheme::Uniform,
            WeightScheme::FullyBiasedL,
            WeightScheme::PartiallyBiasedL(lambda),
            WeightScheme::BiasedG,
            WeightScheme::MixedGL,
        ];
        for scheme in schemes {
            let t = WeightTable::build(scheme, &s.lipschitz, &p, Some(&g)).unwrap();
            let norm: f64 = t.weights().iter().zip(&p).map(|(w, pi)| w * pi).sum();
            check((norm - 1.0).abs() <= 1e-12, "normalization");
            let reweighted: f64 = (0..n)
                .map(|i| t.sampling_probs()[i] * prob.components()[i].value(&x) / t.weight(i))
                .sum();
            check(rel_err(reweighted, objective) <= 1e-12, "reweighting identity");
        }
        let table = |sc| WeightTable::build(sc, &s.lipschitz, &p, None).unwrap();
        let consts = |t: &WeightTable| effective_constants(t, &s.lipschitz, &s.grad_norms_sq, &p).unwrap();
        let at_one = table(WeightScheme::PartiallyBiasedL(1.0));
        let uniform = table(WeightScheme::Uniform);
        check(
            at_one.weights().iter().zip(uniform.weights()).all(|(u, v)| (u - v).abs() <= 1e-12)
                && at_one.sampling_probs().iter().zip(&p).all(|(u, v)| (u - v).abs() <= 1e-12),
            "lambda = 1 collapses to uniform",
        );
        let at_zero = table(WeightScheme::PartiallyBiasedL(0.0));
        let full = table(WeightScheme::FullyBiasedL);
        check(
            at_zero.weights().iter().zip(full.weights()).all(|(u, v)| (u - v).abs() <= 1e-12),
            "lambda = 0 collapses to full bias",
        );
        let fc = consts(&full);
        check(rel_err(fc.sup_l_w, s.l_bar) <= 1e-12, "full bias sup L_(w) = mean L");
        let sigma_direct: f64 = (0..n).map(|i| p[i] * s.l_bar / s.lipschitz[i] * s.grad_norms_sq[i]).sum();
        check(rel_err(fc.sigma_sq_w, sigma_direct) <= 1e-12, "full bias sigma_(w)^2");
        let reweighted_mean: f64 = (0..n)
            .map(|i| full.sampling_probs()[i] * s.lipschitz[i] / full.weight(i))
            .sum();
        check(rel_err(reweighted_mean, s.l_bar) <= 1e-12, "mean L invariant under reweighting");
        check(fc.sigma_sq_w <= s.l_bar / s.inf_l * s.sigma_sq * (1.0 + 1e-12), "full bias residual bound");
        let hc = consts(&table(WeightScheme::PartiallyBiasedL(0.5)));
        check(hc.sup_l_w <= 2.0 * s.l_bar * (1.0 + 1e-12), "half bias sup L_(w) <= 2 mean L");
        check(hc.sigma_sq_w <= 2.0 * s.sigma_sq * (1.0 + 1e-12), "half bias sigma_(w)^2 <= 2 sigma^2");
    }
    report(
        "9",
        failures.is_empty(),
        &if failures.is_empty() { "100 problems, all identities hold".to_string() } else { failures.join(", ") },
        start.elapsed(),
        Some(Duration::from_secs(1)),
    );
}

#[test]
fn criterion_10_rejection_sampling() {
    let start = Instant::now();
    let mut rng = RngStream::new(1010);
    let n = 10;
    let l: Vec<f64> = (0..n).map(|_| 10f64.powf(2.0 * rng.uniform())).collect();
    let p = vec![1.0 / n as f64; n];
    let table = WeightTable::build(WeightScheme::FullyBiasedL, &l, &p, None).unwrap();
    let l_bar = l.iter().sum::<f64>() / n as f64;
    let sup_l = l.iter().copied().fold(0.0, f64::max);
    let rejection = RejectionSampler::new(&p, table.weights(), table.max_weight()).unwrap();
    let mut proposals = 0usize;
    for _ in 0..100_000 {
        proposals += rejection.draw(&mut rng).1;
    }
    let rate = 100_000.0 / proposals as f64;
    let expected_rate = l_bar / sup_l;

    let alias = AliasTable::build(table.sampling_probs()).unwrap();
    let draws = 1_000_000;
    let mut h_rej = vec![0usize; n];
    let mut h_alias = vec![0usize; n];
    for _ in 0..draws {
        h_rej[rejection.draw(&mut rng).0] += 1;
        h_alias[alias.draw(&mut rng)] += 1;
    }
    let tv = 0.5 * h_rej.iter().zip(&h_alias).map(|(u, v)| (*u as f64 - *v as f64).abs()).sum::<f64>() / draws as f64;
    report(
        "10",
        rel_err(rate, expected_rate) <= 0.05 && tv < 0.005,
        &format!("acceptance rate {rate:.4} vs {expected_rate:.4}, total variation {tv:.5}"),
        start.elapsed(),
        Some(Duration::from_secs(30)),
    );
}

#[test]
fn criterion_11_iteration_counts() {
    let start = Instant::now();
    let mut rng = RngStream::new(1111);
    let mut worst: f64 = 0.0;
    let mut order_ok = true;
    for _ in 0..200 {
        let mu = 10f64.powf(2.0 * rng.uniform() - 1.0);
        let inf_l = mu * (1.0 + 5.0 * rng.uniform());
        let sup_l = inf_l * (1.0 + 50.0 * rng.uniform());
        let l_bar = inf_l + (sup_l - inf_l) * rng.uniform();
        let l_sq_bar = l_bar * l_bar * (1.0 + rng.uniform());
        let sigma = 10.0 * rng.uniform();
        let eps0 = 10f64.powf(2.0 * rng.uniform());
        let eps = eps0 * 10f64.powf(-4.0 * rng.uniform() - 0.5);
        let lambda = rng.uniform();
        let lg = (2.0 * eps0 / eps).ln();

        let pairs = [
            (
                iter_bound_value(IterBound::SupL { sup_l, sigma_sq: sigma }, mu, eps, eps0).unwrap(),
                2.0 * lg * (sup_l / mu + sigma / (mu * mu * eps)),
            ),
            (
                iter_bound_value(IterBound::MeanL { l_bar, sigma_sq: sigma }, mu, eps, eps0).unwrap(),
                4.0 * lg * (l_bar / mu + sigma / (mu * mu * eps)),
            ),
            (
                iter_bound_value(IterBound::PartialBias { lambda, l_bar, sup_l, inf_l, sigma_sq: sigma }, mu, eps, eps0)
                    .unwrap(),
                2.0 * lg
                    * ((l_bar / (1.0 - lambda)).min(sup_l / lambda) / mu
                        + (1.0 / lambda).max(l_bar / ((1.0 - lambda) * inf_l)) * sigma / (mu * mu * eps)),
            ),
            (
                iter_bound_value(IterBound::BachMoulines { l_sq_bar, sigma_sq: sigma }, mu, eps, eps0).unwrap(),
                2.0 * lg * (l_sq_bar / (mu * mu) + sigma / (mu * mu * eps)),
            ),
        ];
        for (got, want) in pairs {
            worst = worst.max(rel_err(got, want));
        }
        let l = mu * (1.0 + 100.0 * rng.uniform());
        let ours = iter_bound_value(IterBound::SupL { sup_l: l, sigma_sq: 0.0 }, mu, eps, eps0).unwrap();
        let bm = iter_bound_value(IterBound::BachMoulines { l_sq_bar: l * l, sigma_sq: 0.0 }, mu, eps, eps0).unwrap();
        order_ok &= ours <= bm;
    }
    report(
        "11",
        worst <= 1e-12 && order_ok,
        &format!("200 grid points, max relative difference {worst:.3e}, linear <= quadratic conditioning: {order_ok}"),
        start.elapsed(),
        Some(Duration::from_secs(1)),
    );
}
