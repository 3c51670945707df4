//! Unadjusted Langevin chains with deterministic, phase-indexed random
//! streams, plus an optional Metropolis-adjusted step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{LogzError, Result};
use crate::potential::PotentialSpec;
use crate::schedule::PhaseParams;

/// A reproducible noise stream keyed by (master seed, phase, replicate).
///
/// Distinct triples give independent ChaCha streams, so phases and replicates
/// can run concurrently without sequential splitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub phase: u64,
    pub replicate: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, phase: u64, replicate: u64) -> Self {
        Self {
            master_seed,
            phase,
            replicate,
        }
    }

    /// 256-bit key mixed from the triple; equal triples give bitwise-equal
    /// streams, distinct triples decorrelated ones.
    pub fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        let mut state = splitmix64(self.master_seed);
        state = splitmix64(state ^ self.phase.wrapping_mul(0xa076_1d64_78bd_642f));
        state = splitmix64(state ^ self.replicate.wrapping_mul(0xe703_7ed1_a0b4_28db));
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }

    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::from_seed(self.key())
    }
}

/// Current chain position and step counter.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub step_count: u64,
}

impl ChainState {
    /// Chains start at the origin.
    pub fn origin(dim: usize) -> Self {
        Self {
            position: vec![0.0; dim],
            step_count: 0,
        }
    }
}

/// One Euler step `x' = x - gamma grad + sqrt(2 gamma) noise`.
pub fn ula_step(
    state: &mut ChainState,
    grad_at_state: &[f64],
    gamma: f64,
    noise: &[f64],
    phase: usize,
) -> Result<()> {
    let scale = (2.0 * gamma).sqrt();
    let mut finite = true;
    for ((x, g), w) in state.position.iter_mut().zip(grad_at_state).zip(noise) {
        *x = *x - gamma * g + scale * w;
        finite &= x.is_finite();
    }
    state.step_count += 1;
    if !finite {
        return Err(LogzError::Divergence {
            phase,
            step: state.step_count,
        });
    }
    Ok(())
}

/// Summary returned by a completed chain.
#[derive(Clone, Copy, Debug)]
pub struct ChainReport {
    pub steps: u64,
    pub final_position_norm: f64,
}

/// Runs one phase: `burn_in` discarded steps followed by `n` observed steps
/// of the chain targeting the tilted density with potential
/// `U(x) + ||x||^2/(2 sigma2_i)`, starting from the origin.
///
/// The observer sees exactly `n` post-burn-in states.
pub fn run_chain<F>(
    p: &PotentialSpec,
    phase: &PhaseParams,
    stream: &RngStream,
    mut observer: F,
) -> Result<ChainReport>
where
    F: FnMut(&[f64]) -> Result<()>,
{
    let d = p.dim;
    let mut rng = stream.rng();
    let mut state = ChainState::origin(d);
    let mut grad = vec![0.0; d];
    let mut noise = vec![0.0; d];
    let inv_s2 = 1.0 / phase.sigma2;
    let total = phase.burn_in + phase.n;
    for step in 0..total {
        p.gradient_into(&state.position, &mut grad);
        for (g, x) in grad.iter_mut().zip(&state.position) {
            *g += x * inv_s2;
        }
        for w in noise.iter_mut() {
            *w = rng.sample(StandardNormal);
        }
        ula_step(&mut state, &grad, phase.gamma, &noise, phase.index)?;
        if step >= phase.burn_in {
            observer(&state.position)?;
        }
    }
    let norm = state.position.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(ChainReport {
        steps: state.step_count,
        final_position_norm: norm,
    })
}

/// One Metropolis-adjusted Langevin step on the energy/gradient pair.
/// Returns whether the proposal was accepted.
pub fn mala_step<E, G>(
    state: &mut ChainState,
    energy: E,
    gradient: G,
    gamma: f64,
    rng: &mut ChaCha12Rng,
    phase: usize,
) -> Result<bool>
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    let d = state.position.len();
    let mut grad_x = vec![0.0; d];
    gradient(&state.position, &mut grad_x);
    let scale = (2.0 * gamma).sqrt();
    let mut proposal = vec![0.0; d];
    for i in 0..d {
        let w: f64 = rng.sample(StandardNormal);
        proposal[i] = state.position[i] - gamma * grad_x[i] + scale * w;
    }
    if proposal.iter().any(|v| !v.is_finite()) {
        return Err(LogzError::Divergence {
            phase,
            step: state.step_count + 1,
        });
    }
    // log q(x|y) - log q(y|x) with q(y|x) = N(x - gamma grad(x), 2 gamma I).
    let mut grad_y = vec![0.0; d];
    gradient(&proposal, &mut grad_y);
    let mut fwd = 0.0;
    let mut bwd = 0.0;
    for i in 0..d {
        let df = proposal[i] - state.position[i] + gamma * grad_x[i];
        let db = state.position[i] - proposal[i] + gamma * grad_y[i];
        fwd += df * df;
        bwd += db * db;
    }
    let log_alpha =
        energy(&state.position) - energy(&proposal) + (fwd - bwd) / (4.0 * gamma);
    let accept = log_alpha >= 0.0 || rng.gen::<f64>() < log_alpha.exp();
    if accept {
        state.position = proposal;
    }
    state.step_count += 1;
    Ok(accept)
}
