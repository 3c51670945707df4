//! Per-phase ratio estimation in log-space, assembly of log Z, the full
//! pipeline, and the median trick.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LogzError, Result};
use crate::potential::PotentialSpec;
use crate::sampler::{run_chain, RngStream};
use crate::schedule::{build_schedule, PhaseParams, Regime, Schedule, ScheduleConfig};

/// Streaming log-mean-exp: after pushing exponents `e_1..e_n`,
/// `value() = log((1/n) sum exp(e_k))` without overflow for any finite input.
#[derive(Clone, Debug, Default)]
pub struct LogMeanAccumulator {
    max_exponent: f64,
    scaled_sum: f64,
    count: u64,
}

impl LogMeanAccumulator {
    pub fn new() -> Self {
        Self {
            max_exponent: f64::NEG_INFINITY,
            scaled_sum: 0.0,
            count: 0,
        }
    }

    pub fn push(&mut self, exponent: f64) {
        if exponent > self.max_exponent {
            self.scaled_sum = self.scaled_sum * (self.max_exponent - exponent).exp() + 1.0;
            self.max_exponent = exponent;
        } else {
            self.scaled_sum += (exponent - self.max_exponent).exp();
        }
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn value(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(LogzError::Validation(
                "log-mean of an empty stream".into(),
            ));
        }
        Ok(self.max_exponent + (self.scaled_sum / self.count as f64).ln())
    }
}

/// `log((1/n) sum exp(a_i ||x||^2))` over the observed states.
pub fn phase_log_ratio<'a, I>(phase: &PhaseParams, observations: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = LogMeanAccumulator::new();
    for x in observations {
        acc.push(phase.a * x.iter().map(|v| v * v).sum::<f64>());
    }
    acc.value()
}

/// Final convex phase: the exponent is capped at `a ||x||^2 ^ a D^2`.
pub fn truncated_phase_log_ratio<'a, I>(
    phase: &PhaseParams,
    radius: f64,
    observations: I,
) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let d2 = radius * radius;
    let mut acc = LogMeanAccumulator::new();
    for x in observations {
        let sq = x.iter().map(|v| v * v).sum::<f64>();
        acc.push(phase.a * sq.min(d2));
    }
    acc.value()
}

/// `log Z_hat = (d/2){log(2 pi sigma2_0) - log(1 + sigma2_0 m)} + sum ratios`.
pub fn assemble_log_z(sigma2_0: f64, m: f64, d: usize, log_ratios: &[f64]) -> f64 {
    let d = d as f64;
    0.5 * d * ((std::f64::consts::TAU * sigma2_0).ln() - (sigma2_0 * m).ln_1p())
        + log_ratios.iter().sum::<f64>()
}

/// Full pipeline output.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateResult {
    pub log_z_hat: f64,
    pub per_phase_log_ratios: Vec<f64>,
    pub cost: u128,
    pub seed: u64,
    pub wall_time_secs: f64,
    /// All replicate log-Z values when the median trick was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<f64>>,
    /// Digest of the originating configuration, filled by the CLI layer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
}

/// Installs a worker pool of the requested width around `f`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => f(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("worker pool")
            .install(f),
    }
}

/// Exact log Z of the Gaussian short-circuit case m = L (so U = m||x||^2/2).
pub fn closed_form_gaussian_log_z(d: usize, m: f64) -> f64 {
    0.5 * d as f64 * (std::f64::consts::TAU / m).ln()
}

/// Runs every phase of the schedule under the given replicate id and returns
/// the per-phase log ratios.
pub fn run_phases(
    p: &PotentialSpec,
    sched: &Schedule,
    seed: u64,
    replicate: u64,
) -> Result<Vec<f64>> {
    sched
        .phases
        .par_iter()
        .map(|phase| {
            let stream = RngStream::new(seed, phase.index as u64, replicate);
            let mut acc = LogMeanAccumulator::new();
            let trunc = match (sched.regime, phase.index == sched.m - 1) {
                (Regime::Convex, true) => sched.truncation.map(|t| t.radius * t.radius),
                _ => None,
            };
            let a = phase.a;
            run_chain(p, phase, &stream, |x| {
                let sq = x.iter().map(|v| v * v).sum::<f64>();
                let sq = match trunc {
                    Some(d2) => sq.min(d2),
                    None => sq,
                };
                acc.push(a * sq);
                Ok(())
            })?;
            acc.value()
        })
        .collect()
}

/// One full estimate under a fixed replicate id.
pub fn estimate_replicate(
    p: &PotentialSpec,
    cfg: &ScheduleConfig,
    seed: u64,
    replicate: u64,
) -> Result<EstimateResult> {
    let start = std::time::Instant::now();
    if p.m >= p.l {
        return Ok(EstimateResult {
            log_z_hat: closed_form_gaussian_log_z(p.dim, p.m),
            per_phase_log_ratios: Vec::new(),
            cost: 0,
            seed,
            wall_time_secs: start.elapsed().as_secs_f64(),
            replicates: None,
            config_digest: None,
        });
    }
    let sched = build_schedule(p, cfg)?;
    let ratios = run_phases(p, &sched, seed, replicate)?;
    let log_z = assemble_log_z(sched.sigma2_0, sched.m_eff, p.dim, &ratios);
    Ok(EstimateResult {
        log_z_hat: log_z,
        per_phase_log_ratios: ratios,
        cost: sched.total_cost(),
        seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
        replicates: None,
        config_digest: None,
    })
}

/// End-to-end estimate of log Z.
pub fn estimate(p: &PotentialSpec, cfg: &ScheduleConfig, seed: u64) -> Result<EstimateResult> {
    estimate_replicate(p, cfg, seed, 0)
}

/// Median-trick replicate count `2 ceil(4 log(1/mu_tilde)) + 1`.
pub fn replicate_count(mu_tilde: f64) -> Result<usize> {
    if !(mu_tilde > 0.0 && mu_tilde < 1.0) {
        return Err(LogzError::Config(format!(
            "mu_tilde must lie in (0,1), got {mu_tilde}"
        )));
    }
    Ok(2 * (4.0 * (1.0 / mu_tilde).ln()).ceil() as usize + 1)
}

/// Runs an odd number of independent replicates with inner failure
/// probability 1/4 and returns the median one, with all values attached.
pub fn median_estimate(
    p: &PotentialSpec,
    cfg: &ScheduleConfig,
    mu_tilde: f64,
    seed: u64,
) -> Result<EstimateResult> {
    let r = replicate_count(mu_tilde)?;
    let inner = ScheduleConfig { mu: 0.25, ..*cfg };
    let start = std::time::Instant::now();
    let mut results: Vec<EstimateResult> = (0..r as u64)
        .map(|rep| estimate_replicate(p, &inner, seed, rep))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = results.iter().map(|e| e.log_z_hat).collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let median_idx = order[r / 2];
    let cost = results.iter().map(|e| e.cost).sum();
    let mut chosen = results.swap_remove(median_idx);
    chosen.replicates = Some(values);
    chosen.cost = cost;
    chosen.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(chosen)
}
