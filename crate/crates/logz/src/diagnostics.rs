//! Closed-form per-phase bias/variance bound evaluation and empirical
//! replicate reports.

use serde::Serialize;

use crate::error::{LogzError, Result};
use crate::estimator::run_phases;
use crate::potential::PotentialSpec;
use crate::schedule::{build_schedule, PhaseParams, Schedule, ScheduleConfig};

/// Bound constants and bounds for one phase.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MseBoundEntry {
    pub phase: usize,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub a0: f64,
    pub a1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    pub bias2_bound: f64,
    pub var_bound: f64,
    pub mse_bound: f64,
    /// log10 copies so extreme magnitudes stay readable.
    pub log10_bias2: f64,
    pub log10_var: f64,
    pub log10_mse: f64,
}

/// Evaluates the squared-bias and variance bounds for one phase.
///
/// With `use_hessian_lipschitz` the refined discretization term (gamma^2
/// leading order, constants B) replaces the first-order one (constants A).
pub fn mse_bound(
    phase: &PhaseParams,
    d: usize,
    use_hessian_lipschitz: bool,
    l_tilde: Option<f64>,
) -> Result<MseBoundEntry> {
    let d = d as f64;
    let (a, gamma, m_i, l_i, kappa) = (phase.a, phase.gamma, phase.m_i, phase.l_i, phase.kappa_i);
    let n = phase.n as f64;
    let burn = phase.burn_in as f64;
    if gamma <= 0.0 || gamma > 1.0 / (m_i + l_i) * (1.0 + 1e-12) {
        return Err(LogzError::Diagnostic(format!(
            "gamma_{} = {gamma:.3e} violates 0 < gamma <= 1/(m_i+L_i) = {:.3e}",
            phase.index,
            1.0 / (m_i + l_i)
        )));
    }
    let a_cap = (m_i / (4.0 * (d + 4.0))).min(1.0 / (2.0 * phase.sigma2));
    if a < 0.0 || a > a_cap * (1.0 + 1e-12) {
        return Err(LogzError::Diagnostic(format!(
            "a_{} = {a:.3e} violates 0 <= a <= m_i/(4(d+4)) ^ 1/(2 sigma2_i) = {a_cap:.3e}",
            phase.index
        )));
    }
    let c0 = (4.0 * a * (d + 2.0) / (kappa - 8.0 * a)).exp();
    let c1 = 2.0 * d * (1.0 - 8.0 * a * gamma) / (kappa - 8.0 * a);
    let c2 = 4.0 * d / m_i;
    let a0 = 2.0 * l_i * l_i / kappa * d;
    let a1 = 2.0 * d * l_i * l_i
        + d * l_i.powi(4)
            * (1.0 / kappa + 1.0 / (m_i + l_i))
            * (1.0 / m_i + 1.0 / (6.0 * (m_i + l_i)));
    let (b0, b1, disc) = if use_hessian_lipschitz {
        let lt = l_tilde.ok_or_else(|| {
            LogzError::Diagnostic("refined bound requires a Hessian-Lipschitz constant".into())
        })?;
        let b0 = d * (2.0 * l_i * l_i + (d * lt * lt / 3.0 + 4.0 * l_i.powi(4) / (3.0 * m_i)) / kappa);
        let b1 = d * l_i.powi(4) * (1.0 / kappa + 1.0 / (6.0 * (m_i + l_i)) + 1.0 / m_i);
        (
            Some(b0),
            Some(b1),
            2.0 / kappa * (b0 * gamma * gamma + b1 * gamma.powi(3)),
        )
    } else {
        (None, None, 2.0 / kappa * (a0 * gamma + a1 * gamma * gamma))
    };
    let burn_term = 4.0 * d / (n * m_i * kappa * gamma) * (-burn * kappa * gamma / 2.0).exp();
    let bias2 = 4.0 * a * a * (c2 + c0 * c1) * (burn_term + disc);
    let var = 32.0 * a * a * c0 * c1 / (kappa * kappa * n * gamma)
        * (1.0 + 2.0 / (kappa * n * gamma));
    Ok(MseBoundEntry {
        phase: phase.index,
        c0,
        c1,
        c2,
        a0,
        a1,
        b0,
        b1,
        bias2_bound: bias2,
        var_bound: var,
        mse_bound: bias2 + var,
        log10_bias2: bias2.log10(),
        log10_var: var.log10(),
        log10_mse: (bias2 + var).log10(),
    })
}

/// Per-phase empirical mean and standard deviation of the ratio estimators
/// over independent replicates.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseStat {
    pub phase: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplicateReport {
    pub per_phase: Vec<PhaseStat>,
    pub seeds: Vec<u64>,
}

impl ReplicateReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,mean,std\n");
        for s in &self.per_phase {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", s.phase, s.mean, s.std));
        }
        out
    }
}

/// Runs one pipeline per seed and aggregates the per-phase ratio estimators.
pub fn replicate_report(
    p: &PotentialSpec,
    cfg: &ScheduleConfig,
    seeds: &[u64],
) -> Result<ReplicateReport> {
    if seeds.len() < 2 {
        return Err(LogzError::Config(
            "replicate report needs at least 2 seeds".into(),
        ));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(LogzError::Config("replicate seeds must be distinct".into()));
    }
    let sched = build_schedule(p, cfg)?;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        per_seed.push(run_phases(p, &sched, seed, 0)?);
    }
    let r = seeds.len() as f64;
    let per_phase = (0..sched.m)
        .map(|i| {
            // Statistics are over the ratio estimators
            // themselves, not their logs.
            let vals: Vec<f64> = per_seed.iter().map(|v| v[i].exp()).collect();
            let mean = vals.iter().sum::<f64>() / r;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
            PhaseStat {
                phase: i,
                mean,
                std: var.sqrt(),
            }
        })
        .collect();
    Ok(ReplicateReport {
        per_phase,
        seeds: seeds.to_vec(),
    })
}

/// Realized chain length of the schedule.
pub fn cost_actual(sched: &Schedule) -> u128 {
    sched.total_cost()
}
