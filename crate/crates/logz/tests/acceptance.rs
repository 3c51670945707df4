//! End-to-end acceptance checks. Each test prints exactly one verdict line
//! (`acceptance N (<label>): PASS|FAIL - detail`); run with `--nocapture`
//! to see the lines for passing tests as well.

use logz::diagnostics::mse_bound;
use logz::error::LogzError;
use logz::estimator::{
    estimate, median_estimate, phase_log_ratio, replicate_count,
};
use logz::oracle;
use logz::potential::builtin;
use logz::schedule::{
    build_schedule, cost_bound, PhaseParams, Preset, Regime, RegimeChoice, ScheduleConfig,
};
use logz::sampler::{run_chain, RngStream};

fn report(id: usize, label: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {id} ({label}): {verdict} - {detail}");
    assert!(pass, "acceptance {id} ({label}): FAIL - {detail}");
}

#[test]
fn acceptance_1_gaussian_d10_reproduction() {
    let p = builtin::gaussian_benchmark(10).unwrap();
    let mut diag = vec![1.0; 10];
    diag[0] = 2.0;
    let q = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    let truth = oracle::gaussian_log_evidence(&q).unwrap();
    assert!((truth - 8.842812).abs() < 1e-5);

    let mut cfg = ScheduleConfig::new(0.1, 0.1);
    cfg.preset = Preset::GaussianFig1;
    let tol = 1.1f64.ln();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let r = estimate(&p, &cfg, seed).unwrap();
        let err = (r.log_z_hat - truth).abs();
        worst = worst.max(err);
        if err <= tol {
            hits += 1;
        }
    }
    report(
        1,
        "gaussian d=10 reproduction",
        hits >= 8,
        format!("{hits}/10 seeds within {tol:.4} of {truth:.6} (worst error {worst:.4})"),
    );
}

#[test]
fn acceptance_2_radiata_evidence_vs_conjugate_oracle() {
    let mut cfg = ScheduleConfig::new(0.1, 0.1);
    cfg.preset = Preset::RegressionFig2;
    let (mu0, p0, lam) = builtin::radiata_prior();
    let raw = builtin::radiata_dataset(None).unwrap();

    let mut oracle_ev = [0.0f64; 2];
    let mut est_ev = [[0.0f64; 10]; 2];
    let mut hits = [0usize; 2];
    for (mi, which) in [1u8, 2u8].iter().enumerate() {
        let design = builtin::radiata_design(&raw, *which).unwrap();
        oracle_ev[mi] =
            oracle::conjugate_linear_log_evidence(&design, &mu0, &p0, lam).unwrap();
        let p = builtin::radiata_model(*which, None).unwrap();
        for seed in 0..10u64 {
            let r = estimate(&p, &cfg, seed).unwrap();
            let ev = r.log_z_hat - p.log_offset;
            est_ev[mi][seed as usize] = ev;
            if (ev - oracle_ev[mi]).abs() <= 0.5 {
                hits[mi] += 1;
            }
        }
    }
    let oracle_order = oracle_ev[1] > oracle_ev[0];
    let order_ok = (0..10).all(|s| (est_ev[1][s] > est_ev[0][s]) == oracle_order);
    report(
        2,
        "radiata evidence vs conjugate oracle",
        hits[0] >= 8 && hits[1] >= 8 && order_ok,
        format!(
            "M1 {}/10 within 0.5 of {:.4}, M2 {}/10 within 0.5 of {:.4}, ordering consistent in {} runs",
            hits[0],
            oracle_ev[0],
            hits[1],
            oracle_ev[1],
            if order_ok { "all" } else { "NOT all" }
        ),
    );
}

#[test]
fn acceptance_3_logcosh_theoretical_vs_quadrature() {
    let p = builtin::log_cosh_1d().unwrap();
    let cfg = ScheduleConfig::new(0.25, 0.25);
    let sched = build_schedule(&p, &cfg).unwrap();
    let cost = sched.total_cost();
    // Sustained single-chain throughput on this hardware is around 1e7-1e8
    // steps per second. 1e11 steps (roughly half an hour) is a generous
    // session budget; beyond it the run cannot complete here.
    const BUDGET: u128 = 100_000_000_000;
    if cost > BUDGET {
        report(
            3,
            "1-d log-cosh, theoretical tuning vs quadrature",
            false,
            format!(
                "theoretically tuned schedule requires {cost} Langevin steps \
                 (about {:.0} years at 1e8 steps/s); criterion not executable as stated",
                cost as f64 / 1e8 / 3.15e7
            ),
        );
        return;
    }
    let truth = oracle::quadrature_log_z(&p, 14.0, 4001).unwrap();
    let tol = 1.25f64.ln();
    let mut hits = 0;
    for seed in 0..10u64 {
        let r = estimate(&p, &cfg, seed).unwrap();
        if (r.log_z_hat - truth).abs() <= tol {
            hits += 1;
        }
    }
    report(
        3,
        "1-d log-cosh, theoretical tuning vs quadrature",
        hits >= 8,
        format!("{hits}/10 seeds within {tol:.4} of {truth:.6}"),
    );
}

#[test]
fn acceptance_4_theoretical_tuning_meets_error_budget() {
    let models = [
        builtin::gaussian_benchmark(10).unwrap(),
        builtin::radiata_model(1, None).unwrap(),
        builtin::pima_model(1, None).unwrap(),
        builtin::log_cosh_1d().unwrap(),
    ];
    let mut schedules = 0usize;
    let mut phases = 0usize;
    for p in &models {
        for regime in [RegimeChoice::Strong, RegimeChoice::Convex] {
            for a3 in [false, true] {
                for eps in [0.1, 0.25] {
                    for mu in [0.1, 0.25] {
                        let mut cfg = ScheduleConfig::new(eps, mu);
                        cfg.regime = regime;
                        cfg.a3 = a3;
                        let label = format!(
                            "{} regime={regime:?} a3={a3} eps={eps} mu={mu}",
                            p.name
                        );
                        let s = build_schedule(p, &cfg)
                            .unwrap_or_else(|e| panic!("{label}: {e}"));
                        s.validate().unwrap_or_else(|e| panic!("{label}: {e}"));
                        for phase in &s.phases {
                            let is_final = phase.index == s.m - 1;
                            if s.regime == Regime::Convex && is_final {
                                // The capped test function of the last phase
                                // sits outside the moment-bound conditions;
                                // its failure is itself the contract.
                                assert!(
                                    matches!(
                                        mse_bound(phase, p.dim, a3, p.hessian_lipschitz),
                                        Err(LogzError::Diagnostic(_))
                                    ),
                                    "{label}: final phase unexpectedly certifiable"
                                );
                                continue;
                            }
                            let e = mse_bound(phase, p.dim, a3, p.hessian_lipschitz)
                                .unwrap_or_else(|e| {
                                    panic!("{label} phase {}: {e}", phase.index)
                                });
                            let (bias_t, var_t) = match phase.chunk {
                                Some(k) => {
                                    let card = s.chunks[k].len() as f64;
                                    (
                                        (s.eta / (s.k as f64 * card)).powi(2),
                                        s.eta * s.eta / (s.k as f64 * card),
                                    )
                                }
                                None => (s.eta * s.eta, s.eta * s.eta),
                            };
                            assert!(
                                e.bias2_bound <= bias_t * (1.0 + 1e-9),
                                "{label} phase {}: bias^2 {:.3e} > {:.3e}",
                                phase.index,
                                e.bias2_bound,
                                bias_t
                            );
                            assert!(
                                e.var_bound <= var_t * (1.0 + 1e-9),
                                "{label} phase {}: var {:.3e} > {:.3e}",
                                phase.index,
                                e.var_bound,
                                var_t
                            );
                            phases += 1;
                        }
                        schedules += 1;
                    }
                }
            }
        }
    }
    report(
        4,
        "theoretical tuning meets per-phase error budget",
        true,
        format!("{schedules} schedules validated, {phases} phases certified"),
    );
}

#[test]
fn acceptance_5_ula_stationary_variance() {
    let p = builtin::gaussian_diag(&[1.0]).unwrap();
    let gamma = 0.1;
    // Push the annealing tilt 1/sigma2 far below rounding so the effective
    // curvature is q = 1.
    let q = 1.0;
    let phase = PhaseParams {
        index: 0,
        sigma2: 1e12,
        a: 0.0,
        m_i: q,
        l_i: q,
        kappa_i: q,
        gamma,
        n: 1_000_000,
        burn_in: 10_000,
        chunk: None,
    };
    let expected = 2.0 / (q * (2.0 - gamma * q));
    assert!((expected - 1.0 / (q * (1.0 - gamma * q / 2.0))).abs() < 1e-15);

    let stream = RngStream::new(7, 0, 0);
    let batch = 1000usize;
    let mut batch_means = Vec::new();
    let mut acc = 0.0;
    let mut in_batch = 0usize;
    run_chain(&p, &phase, &stream, |x| {
        acc += x[0] * x[0];
        in_batch += 1;
        if in_batch == batch {
            batch_means.push(acc / batch as f64);
            acc = 0.0;
            in_batch = 0;
        }
        Ok(())
    })
    .unwrap();
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / b;
    let var =
        batch_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    let se = (var / b).sqrt();
    let dev = (mean - expected).abs();
    report(
        5,
        "ULA stationary variance",
        dev <= 3.0 * se,
        format!("empirical {mean:.6} vs {expected:.6}, deviation {dev:.2e} <= 3 SE = {:.2e}", 3.0 * se),
    );
}

#[test]
fn acceptance_6_realized_cost_within_bound() {
    let p = builtin::gaussian_benchmark(10).unwrap();
    let cfg = ScheduleConfig::new(0.25, 0.25);
    let s = build_schedule(&p, &cfg).unwrap();
    let realized = s.total_cost() as f64;
    let bound = cost_bound(&p, &cfg).unwrap();
    report(
        6,
        "realized cost within theoretical bound",
        realized <= bound,
        format!("realized {realized:.3e} <= bound {bound:.3e}"),
    );
}

#[test]
fn acceptance_7_log_ratio_numerical_safety() {
    // Reference log-mean-exp: single max shift plus compensated summation.
    fn reference(es: &[f64]) -> f64 {
        let max = es.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0f64;
        let mut c = 0.0f64;
        for &e in es {
            let y = (e - max).exp() - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        max + (sum / es.len() as f64).ln()
    }
    let phase = PhaseParams {
        index: 0,
        sigma2: 1.0,
        a: 1.0,
        m_i: 1.0,
        l_i: 2.0,
        kappa_i: 1.0,
        gamma: 0.1,
        n: 1,
        burn_in: 0,
        chunk: None,
    };
    let patterns: Vec<Vec<f64>> = vec![
        (0..2000).map(|i| i as f64 * 5.0).collect(),
        (0..2000).rev().map(|i| i as f64 * 5.0).collect(),
        vec![1e4; 1000],
        (0..3000)
            .map(|i| (i as f64 * 0.7919).fract() * 1e4)
            .collect(),
        vec![0.0, 1e4],
    ];
    let mut worst = 0.0f64;
    for es in &patterns {
        let obs: Vec<Vec<f64>> = es.iter().map(|e| vec![e.sqrt()]).collect();
        let got =
            phase_log_ratio(&phase, obs.iter().map(|v| v.as_slice())).unwrap();
        assert!(got.is_finite());
        let want = reference(es);
        let rel = (got - want).abs() / want.abs().max(1.0);
        worst = worst.max(rel);
    }
    report(
        7,
        "streaming log-ratio numerical safety",
        worst <= 1e-10,
        format!("worst relative error {worst:.2e} over {} exponent patterns up to 1e4", patterns.len()),
    );
}

#[test]
fn acceptance_8_median_trick_replicates() {
    assert_eq!(replicate_count(0.1).unwrap(), 21);
    let p = builtin::log_cosh_1d().unwrap();
    let mut cfg = ScheduleConfig::new(0.25, 0.25);
    cfg.preset = Preset::GaussianFig1;
    let med = median_estimate(&p, &cfg, 0.1, 42).unwrap();
    let values = med.replicates.clone().unwrap();
    let count_ok = values.len() == 21;

    // The median must not depend on which replicate id got which stream.
    let mut perms_ok = true;
    for rot in [1usize, 5, 13, 20] {
        let mut perm = values.clone();
        perm.rotate_left(rot);
        perm.sort_by(f64::total_cmp);
        perms_ok &= perm[10] == med.log_z_hat;
    }
    report(
        8,
        "median trick replicate count and permutation invariance",
        count_ok && perms_ok,
        format!(
            "mu_tilde=0.1 gave {} replicates, median {:.6} invariant under reassignment",
            values.len(),
            med.log_z_hat
        ),
    );
}
