//! Annealing schedule construction: the variance recurrences, phase count,
//! dyadic chunking, truncation radius, per-phase tuning (theoretical and
//! practical presets), and the closed-form cost bounds.

use serde::Serialize;

use crate::error::{LogzError, Result};
use crate::potential::PotentialSpec;

/// Which convexity regime drives the schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Strong,
    Convex,
}

/// Regime selection before resolution; `Auto` picks `Strong` iff m > 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RegimeChoice {
    #[default]
    Auto,
    Strong,
    Convex,
}

/// Parameter preset: the fully theoretical tuning or one of the named
/// practical recipes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Theoretical,
    GaussianFig1,
    RegressionFig2,
    LogisticFig4,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "theoretical" => Ok(Self::Theoretical),
            "gaussian-fig1" => Ok(Self::GaussianFig1),
            "regression-fig2" => Ok(Self::RegressionFig2),
            "logistic-fig4" => Ok(Self::LogisticFig4),
            other => Err(LogzError::Config(format!("unknown preset '{other}'"))),
        }
    }
}

/// Inputs the schedule builder needs, distilled from the run configuration.
#[derive(Clone, Copy, Debug)]
pub struct ScheduleConfig {
    pub eps: f64,
    pub mu: f64,
    pub regime: RegimeChoice,
    pub a3: bool,
    pub preset: Preset,
    /// Number of recurrence compositions per phase (1 = every step is a
    /// phase; 5 matches the accelerated logistic-regression setup).
    pub stride: usize,
}

impl ScheduleConfig {
    pub fn new(eps: f64, mu: f64) -> Self {
        Self {
            eps,
            mu,
            regime: RegimeChoice::Auto,
            a3: false,
            preset: Preset::Theoretical,
            stride: 1,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(LogzError::Config(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(LogzError::Config(format!(
                "mu must lie in (0,1), got {}",
                self.mu
            )));
        }
        if self.stride == 0 {
            return Err(LogzError::Config("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// One annealing phase with its tilt and tuned chain parameters.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseParams {
    pub index: usize,
    pub sigma2: f64,
    /// Tilt increment of the test function `exp(a ||x||^2)`.
    pub a: f64,
    pub m_i: f64,
    pub l_i: f64,
    pub kappa_i: f64,
    pub gamma: f64,
    pub n: u128,
    pub burn_in: u128,
    /// Dyadic chunk index; `None` marks the final phase.
    pub chunk: Option<usize>,
}

/// Truncation data for the convex regime.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Truncation {
    pub tau: f64,
    pub radius: f64,
}

/// A fully tuned annealing schedule.
#[derive(Clone, Debug, Serialize)]
pub struct Schedule {
    pub phases: Vec<PhaseParams>,
    /// Phase count M.
    pub m: usize,
    /// Chunk membership: `chunks[k]` lists the non-final phase indices whose
    /// variance lies in `[2^k sigma2_0, 2^{k+1} sigma2_0)`.
    pub chunks: Vec<Vec<usize>>,
    /// Chunk count K.
    pub k: usize,
    pub eta: f64,
    pub regime: Regime,
    pub truncation: Option<Truncation>,
    pub sigma2_0: f64,
    pub stride: usize,
    /// Stopping threshold for the variance sequence: (2d+7)/m or D^2.
    pub threshold: f64,
    pub dim: usize,
    /// Effective strong-convexity constant used by the schedule (0 in the
    /// convex regime even when the potential declares m > 0).
    pub m_eff: f64,
    pub l: f64,
}

/// Starting variance `2 log(1+eps/3) / (d(L-m))`.
pub fn initial_variance(eps: f64, d: usize, m: f64, l: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LogzError::Config(format!("eps must lie in (0,1), got {eps}")));
    }
    if l <= m {
        return Err(LogzError::ClosedFormGaussian);
    }
    Ok(2.0 * (1.0 + eps / 3.0).ln() / (d as f64 * (l - m)))
}

fn chunk_index(t: f64, sigma2_0: f64) -> usize {
    let k = (t / sigma2_0).log2().floor();
    if k < 0.0 {
        0
    } else {
        k as usize
    }
}

/// Strong-regime recurrence; `None` is the +infinity sentinel for
/// `t >= (2d+7)/m`.
pub fn next_variance_strong(t: f64, sigma2_0: f64, d: usize, m: f64) -> Result<Option<f64>> {
    if t < sigma2_0 {
        return Err(LogzError::Domain(format!(
            "recurrence argument {t} below sigma2_0 = {sigma2_0}"
        )));
    }
    if m > 0.0 && t >= (2.0 * d as f64 + 7.0) / m {
        return Ok(None);
    }
    let k = chunk_index(t, sigma2_0);
    let denom = 1.0 / t - (m + 1.0 / (2f64.powi(k as i32 + 1) * sigma2_0)) / (2.0 * (d as f64 + 4.0));
    Ok(Some(1.0 / denom))
}

/// Convex-regime recurrence; `None` is the +infinity sentinel for `t >= D^2`.
pub fn next_variance_convex(t: f64, sigma2_0: f64, d: usize, d2: f64) -> Result<Option<f64>> {
    if t < sigma2_0 {
        return Err(LogzError::Domain(format!(
            "recurrence argument {t} below sigma2_0 = {sigma2_0}"
        )));
    }
    if t >= d2 {
        return Ok(None);
    }
    let k = chunk_index(t, sigma2_0);
    let denom = 1.0 / t - 1.0 / (2.0 * (d as f64 + 4.0) * 2f64.powi(k as i32 + 1) * sigma2_0);
    Ok(Some(1.0 / denom))
}

/// Truncation parameters `tau = (16 log(6/eps)/d)^{1/2}` and
/// `D = (d(tau+1)+rho2)/rho1`.
pub fn truncation_radius(eps: f64, d: usize, rho1: f64, rho2: f64) -> Result<(f64, f64)> {
    if rho1 <= 0.0 {
        return Err(LogzError::Validation(format!(
            "growth slope rho1 must be positive, got {rho1}"
        )));
    }
    let tau = (16.0 * (6.0 / eps).ln() / d as f64).sqrt();
    let radius = (d as f64 * (tau + 1.0) + rho2) / rho1;
    Ok((tau, radius))
}

struct TuneInput {
    is_final: bool,
    eta: f64,
    k_count: f64,
    d: f64,
    m_i: f64,
    l_i: f64,
    kappa_i: f64,
    sigma2: f64,
    l_tilde: Option<f64>,
}

fn tune_theoretical(regime: Regime, a3: bool, t: &TuneInput) -> Result<(f64, u128, u128)> {
    let (eta, kk, d) = (t.eta, t.k_count, t.d);
    let (m_i, l_i, kappa, s2) = (t.m_i, t.l_i, t.kappa_i, t.sigma2);
    let s = s2.sqrt();
    let cap = 1.0 / (m_i + l_i);
    let l_tilde = || {
        t.l_tilde.ok_or_else(|| {
            LogzError::Config("A3 tuning requires a Hessian-Lipschitz constant".into())
        })
    };
    let gamma = match (regime, a3, t.is_final) {
        (Regime::Strong, false, false) => {
            eta * eta * kappa * kappa * s2 * s2 * m_i / (2285.0 * kk * kk * d * d * l_i * l_i)
        }
        (Regime::Strong, false, true) => eta * eta * m_i / (40.0 * l_i * l_i),
        (Regime::Strong, true, false) => {
            let lt = l_tilde()?;
            (3.0f64 / 7.0).sqrt() * eta * kappa * m_i.sqrt() * s2 / (8.0 * kk * d)
                / (d * lt * lt + 10.0 * l_i.powi(4) / m_i).sqrt()
        }
        (Regime::Strong, true, true) => {
            let lt = l_tilde()?;
            (3.0f64 / 7.0).sqrt() * eta * kappa / (4.0 * m_i.sqrt())
                / (d * lt * lt + 10.0 * l_i.powi(4) / m_i).sqrt()
        }
        (Regime::Convex, false, false) => {
            eta * eta / (462.0 * l_i * l_i * s2 * kk * kk * d * d)
        }
        (Regime::Convex, false, true) => eta * eta * kappa / (26.0 * d * l_i * l_i),
        (Regime::Convex, true, false) => {
            let lt = l_tilde()?;
            (3.0f64 / 7.0).sqrt() * eta / (8.0 * kk * d * s)
                / (d * lt * lt + 10.0 * l_i.powi(4) * s2).sqrt()
        }
        (Regime::Convex, true, true) => {
            let lt = l_tilde()?;
            (3.0 / (8.0 * std::f64::consts::E)).sqrt() * eta * kappa * s / d.sqrt()
                / (d * lt * lt + 10.0 * l_i.powi(4) * s2).sqrt()
        }
    };
    let gamma = gamma.min(cap);
    let (n, burn) = match (regime, t.is_final) {
        (Regime::Strong, false) => (
            196.0 * kk / (eta * eta) * m_i.sqrt() / (kappa * s) / (kappa * gamma),
            2.0 / (kappa * gamma) * (5.0 * kk * d * d).ln(),
        ),
        (Regime::Strong, true) => (
            19.0 / (kappa * gamma * eta * eta),
            1.0 / (kappa * gamma),
        ),
        (Regime::Convex, false) => (
            453.0 * kk / (eta * eta * kappa * gamma),
            2.0 / (kappa * gamma) * (kk * d * d).ln(),
        ),
        (Regime::Convex, true) => (
            29.0 / (eta * eta * kappa * gamma),
            2.0 / (kappa * gamma) * d.ln(),
        ),
    };
    Ok((gamma, ceil_count(n)?, ceil_count(burn.max(0.0))?))
}

fn tune_practical(preset: Preset, i: usize, t: &TuneInput) -> Result<(f64, u128, u128)> {
    let (m_i, l_i, kappa, s2, d) = (t.m_i, t.l_i, t.kappa_i, t.sigma2, t.d);
    match preset {
        Preset::GaussianFig1 => Ok((1e-2 / (m_i + l_i), 100_000, 10_000)),
        Preset::RegressionFig2 => {
            let gamma = 1e-2 * kappa * s2 * m_i / (d * l_i * l_i);
            let n = 1e4 * m_i.sqrt() / (kappa * kappa * s2.sqrt() * gamma);
            let burn = 1e3 / (kappa * gamma);
            Ok((gamma, ceil_count(n)?, ceil_count(burn)?))
        }
        Preset::LogisticFig4 => {
            if i <= 30 {
                Ok((1e-2 / (m_i + l_i), 1_000_000, 10_000))
            } else {
                Ok((1e-1 / (m_i + l_i), 100_000, 10_000))
            }
        }
        Preset::Theoretical => Err(LogzError::Config(
            "theoretical preset handled by tune_theoretical".into(),
        )),
    }
}

fn ceil_count(x: f64) -> Result<u128> {
    if !x.is_finite() || x < 0.0 {
        return Err(LogzError::Domain(format!(
            "chain length evaluated to {x}; parameters out of range"
        )));
    }
    let c = x.ceil();
    if c > u128::MAX as f64 {
        return Err(LogzError::Domain(format!(
            "chain length {c:.3e} exceeds the representable range"
        )));
    }
    Ok(c as u128)
}

/// Builds the full tuned schedule for a potential.
pub fn build_schedule(p: &PotentialSpec, cfg: &ScheduleConfig) -> Result<Schedule> {
    cfg.check()?;
    if p.m >= p.l {
        return Err(LogzError::ClosedFormGaussian);
    }
    let regime = match cfg.regime {
        RegimeChoice::Auto => {
            if p.m > 0.0 {
                Regime::Strong
            } else {
                Regime::Convex
            }
        }
        RegimeChoice::Strong => {
            if p.m <= 0.0 {
                return Err(LogzError::Config(
                    "strong regime requires m > 0".into(),
                ));
            }
            Regime::Strong
        }
        RegimeChoice::Convex => Regime::Convex,
    };
    let d = p.dim;
    let m_eff = match regime {
        Regime::Strong => p.m,
        Regime::Convex => 0.0,
    };
    let sigma2_0 = initial_variance(cfg.eps, d, m_eff, p.l)?;
    let (threshold, truncation) = match regime {
        Regime::Strong => ((2.0 * d as f64 + 7.0) / p.m, None),
        Regime::Convex => {
            let (rho1, rho2) = p.growth.ok_or_else(|| {
                LogzError::Config(
                    "convex regime requires growth constants (rho1, rho2)".into(),
                )
            })?;
            let (tau, radius) = truncation_radius(cfg.eps, d, rho1, rho2)?;
            (radius * radius, Some(Truncation { tau, radius }))
        }
    };

    let mut variances = vec![sigma2_0];
    while *variances.last().unwrap() < threshold {
        let mut t = *variances.last().unwrap();
        for _ in 0..cfg.stride {
            if t >= threshold {
                break;
            }
            let next = match regime {
                Regime::Strong => next_variance_strong(t, sigma2_0, d, p.m)?,
                Regime::Convex => next_variance_convex(t, sigma2_0, d, threshold)?,
            };
            t = next.ok_or_else(|| {
                LogzError::Domain("variance recurrence hit the sentinel mid-stride".into())
            })?;
        }
        variances.push(t);
        if variances.len() > 10_000_000 {
            return Err(LogzError::Domain(
                "variance sequence did not reach the stopping threshold".into(),
            ));
        }
    }
    let m_count = variances.len();
    let eta = cfg.eps * cfg.mu.sqrt() / 8.0;

    // Chunk membership precedes tuning because the theoretical formulas
    // depend on K.
    let mut chunk_of = vec![None; m_count];
    let mut k_count = 0usize;
    for (i, &s2) in variances.iter().enumerate().take(m_count.saturating_sub(1)) {
        let k = chunk_index(s2, sigma2_0);
        chunk_of[i] = Some(k);
        k_count = k_count.max(k + 1);
    }
    let mut chunks = vec![Vec::new(); k_count];
    for (i, k) in chunk_of.iter().enumerate() {
        if let Some(k) = k {
            chunks[*k].push(i);
        }
    }

    let mut phases = Vec::with_capacity(m_count);
    for (i, &s2) in variances.iter().enumerate() {
        let is_final = i == m_count - 1;
        let a = if is_final {
            1.0 / (2.0 * s2)
        } else {
            0.5 * (1.0 / s2 - 1.0 / variances[i + 1])
        };
        let m_i = m_eff + 1.0 / s2;
        let l_i = p.l + 1.0 / s2;
        let kappa_i = 2.0 * m_i * l_i / (m_i + l_i);
        let tune = TuneInput {
            is_final,
            eta,
            k_count: k_count as f64,
            d: d as f64,
            m_i,
            l_i,
            kappa_i,
            sigma2: s2,
            l_tilde: p.hessian_lipschitz,
        };
        let (gamma, n, burn_in) = match cfg.preset {
            Preset::Theoretical => tune_theoretical(regime, cfg.a3, &tune)?,
            preset => tune_practical(preset, i, &tune)?,
        };
        phases.push(PhaseParams {
            index: i,
            sigma2: s2,
            a,
            m_i,
            l_i,
            kappa_i,
            gamma,
            n,
            burn_in,
            chunk: chunk_of[i],
        });
    }

    let sched = Schedule {
        phases,
        m: m_count,
        chunks,
        k: k_count,
        eta,
        regime,
        truncation,
        sigma2_0,
        stride: cfg.stride,
        threshold,
        dim: d,
        m_eff,
        l: p.l,
    };
    sched.validate()?;
    Ok(sched)
}

impl Schedule {
    /// Total chain length across phases.
    pub fn total_cost(&self) -> u128 {
        self.phases
            .iter()
            .map(|p| p.n + p.burn_in)
            .sum()
    }

    /// Checks the schedule invariants; tilt-size and chunk-budget identities
    /// are specific to stride 1 (larger strides trade them for fewer phases).
    pub fn validate(&self) -> Result<()> {
        let d = self.dim as f64;
        let tol = 1e-9;
        let growth = (4.0 * d + 16.0) / (4.0 * d + 15.0);
        for w in self.phases.windows(2) {
            if w[1].sigma2 <= w[0].sigma2 {
                return Err(LogzError::Validation(format!(
                    "variances not increasing at phase {}",
                    w[1].index
                )));
            }
            if w[0].index + 2 <= self.m && w[1].sigma2 / w[0].sigma2 < growth * (1.0 - tol) {
                return Err(LogzError::Validation(format!(
                    "variance growth ratio below (4d+16)/(4d+15) at phase {}",
                    w[1].index
                )));
            }
        }
        let last = self.phases.last().ok_or_else(|| {
            LogzError::Validation("schedule has no phases".into())
        })?;
        if last.sigma2 < self.threshold {
            return Err(LogzError::Validation(
                "final variance below the stopping threshold".into(),
            ));
        }
        if self.m >= 2 && self.phases[self.m - 2].sigma2 >= self.threshold {
            return Err(LogzError::Validation(
                "stopping rule fired one phase late".into(),
            ));
        }
        for p in &self.phases {
            if p.gamma <= 0.0 || p.gamma > 1.0 / (p.m_i + p.l_i) * (1.0 + tol) {
                return Err(LogzError::Validation(format!(
                    "gamma out of (0, 1/(m_i+L_i)] at phase {}",
                    p.index
                )));
            }
            let expected_m = self.m_eff + 1.0 / p.sigma2;
            let expected_l = self.l + 1.0 / p.sigma2;
            if (p.m_i - expected_m).abs() > tol * expected_m
                || (p.l_i - expected_l).abs() > tol * expected_l
            {
                return Err(LogzError::Validation(format!(
                    "phase constants inconsistent at phase {}",
                    p.index
                )));
            }
        }
        if (last.a - 1.0 / (2.0 * last.sigma2)).abs() > tol * last.a {
            return Err(LogzError::Validation(
                "final tilt must equal 1/(2 sigma2_{M-1})".into(),
            ));
        }
        if self.stride == 1 {
            for p in &self.phases[..self.m - 1] {
                let cap = (p.m_i / (4.0 * (d + 4.0))).min(1.0 / (2.0 * p.sigma2));
                if p.a < -tol || p.a > cap * (1.0 + tol) {
                    return Err(LogzError::Validation(format!(
                        "tilt increment outside [0, m_i/(4(d+4)) ^ 1/(2 sigma2_i)] at phase {}",
                        p.index
                    )));
                }
            }
            for (k, members) in self.chunks.iter().enumerate() {
                for &i in members {
                    let budget =
                        2f64.powi(k as i32 + 1) * self.sigma2_0 * self.phases[i].a * members.len() as f64;
                    if budget > 1.0 + tol {
                        return Err(LogzError::Validation(format!(
                            "chunk {k} budget identity violated at phase {i}: {budget}"
                        )));
                    }
                }
            }
            match self.regime {
                Regime::Strong => {
                    for p in &self.phases[..self.m - 1] {
                        if p.kappa_i * p.sigma2 > (4.0 * d + 16.0) * (1.0 + tol) {
                            return Err(LogzError::Validation(format!(
                                "kappa_i sigma2_i exceeds 4d+16 at phase {}",
                                p.index
                            )));
                        }
                    }
                }
                Regime::Convex => {
                    for p in &self.phases[..self.m - 1] {
                        let v = p.kappa_i * p.sigma2;
                        if !(1.0 - tol..=2.0 + tol).contains(&v) {
                            return Err(LogzError::Validation(format!(
                                "kappa_i sigma2_i outside [1,2] at phase {}",
                                p.index
                            )));
                        }
                    }
                    if last.sigma2 > 10.0 / 9.0 * self.threshold * (1.0 + tol) {
                        return Err(LogzError::Validation(
                            "final variance above (10/9) D^2".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// CSV dump, one row per phase.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,k,sigma2,a,m_i,L_i,kappa_i,gamma,n,N\n");
        for p in &self.phases {
            let k = p
                .chunk
                .map(|k| k.to_string())
                .unwrap_or_else(|| "final".into());
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
                p.index, k, p.sigma2, p.a, p.m_i, p.l_i, p.kappa_i, p.gamma, p.n, p.burn_in
            ));
        }
        out
    }
}

/// Closed-form upper bound on the total chain length of the tuned schedule.
pub fn cost_bound(p: &PotentialSpec, cfg: &ScheduleConfig) -> Result<f64> {
    cfg.check()?;
    let regime = match cfg.regime {
        RegimeChoice::Auto => {
            if p.m > 0.0 {
                Regime::Strong
            } else {
                Regime::Convex
            }
        }
        RegimeChoice::Strong => Regime::Strong,
        RegimeChoice::Convex => Regime::Convex,
    };
    let (eps, mu) = (cfg.eps, cfg.mu);
    let d = p.dim as f64;
    match regime {
        Regime::Strong => {
            let (m, l) = (p.m, p.l);
            if m <= 0.0 {
                return Err(LogzError::Config("strong cost bound requires m > 0".into()));
            }
            let c = (d * (d + 3.5) * (l / m - 1.0) / (1.0 + eps / 3.0).ln())
                .log2()
                .ceil();
            let front = 6272.0 * c / (eps * eps * mu) + (5.0 * c * d * d).ln();
            if cfg.a3 {
                let lt = p.hessian_lipschitz.ok_or_else(|| {
                    LogzError::Config("A3 cost bound requires a Hessian-Lipschitz constant".into())
                })?;
                Ok(front
                    * (7.0f64 / 3.0).sqrt()
                    * 512.0
                    * c
                    * d.powf(1.5)
                    * (d + 4.0)
                    * (c + 3.0)
                    / (eps * mu.sqrt())
                    * (lt * 2.0f64.powf(1.5) / m.powf(1.5)
                        + 10.0f64.sqrt() * ((m + l) / (2.0 * m)).powi(2)))
            } else {
                Ok(front * (1088.0 * c).powi(2) * d * d * (d + 4.0) / (eps * eps * mu)
                    * ((m + l) / (2.0 * m)).powi(3)
                    * (c + 3.0))
            }
        }
        Regime::Convex => {
            let (rho1, rho2) = p.growth.ok_or_else(|| {
                LogzError::Config("convex cost bound requires growth constants".into())
            })?;
            let l = p.l;
            let tau = 4.0 / d.sqrt() * (6.0 / eps).ln().sqrt();
            let dt = d * (tau + 1.0) + rho2;
            let c = (d * l * dt * dt / (2.0 * rho1 * rho1 * (1.0 + eps / 3.0).ln()))
                .log2()
                .ceil();
            let front = 17728.0 * c / (eps * eps * mu) + (c * d * d).ln();
            if cfg.a3 {
                let lt = p.hessian_lipschitz.ok_or_else(|| {
                    LogzError::Config("A3 cost bound requires a Hessian-Lipschitz constant".into())
                })?;
                let brace = 8.0 * l * l * dt.powi(4) / (3.0 * rho1.powi(4))
                    + d.sqrt() * lt * dt.powi(3) / (10.0f64.sqrt() * rho1.powi(3))
                        * (5.0 * rho1 / dt)
                            .max((5.0 / 9.0 + rho1 * rho1 / (dt * dt * l)).powi(2))
                    + 6.0 * l * dt * dt / (rho1 * rho1)
                    + c;
                Ok(2474.0 * front * (c + 1.0) * d * (d + 4.0) / (eps * mu.sqrt()) * brace)
            } else {
                Ok(front * (487.0 * c).powi(2) * d * d * (d + 4.0) / (eps * eps * mu)
                    * (c + 6.0 * l * dt * dt / (rho1 * rho1)
                        + 8.0 * l * l * dt.powi(4) / (3.0 * rho1.powi(4))))
            }
        }
    }
}
