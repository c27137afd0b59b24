//! Streaming per-replica kernels.
//!
//! These reproduce `simulate_driving_replica` + `convolve_direct` (and the
//! Brownian by-parts route) bit for bit without materializing field
//! matrices, and evaluate every horizon of a ladder from one set of standard
//! draws: the path for horizon `T` is the same standardized draws scaled by
//! `(T/n)^{1/α}`.

use crate::convolution::{stream_for, ModeKernel};
use crate::spectral::{weighted_norm_sq, ModeSet};
use crate::stable_rng::StableLaw;

/// Which noise drives the convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Stable(StableLaw),
    Wiener,
}

impl Engine {
    fn step_scale(&self, dt: f64) -> f64 {
        match self {
            Engine::Stable(law) => law.step_scale(dt),
            Engine::Wiener => dt.sqrt(),
        }
    }
}

/// Standard draws for every mode of one replica, mode-major.
pub(crate) fn standard_draws(engine: &Engine, n_modes: usize, n_steps: usize, seed: u64, replica: u32) -> Vec<f64> {
    let mut draws = Vec::with_capacity(n_modes * n_steps);
    for k in 0..n_modes {
        let mut stream = stream_for(seed, replica, k);
        match engine {
            Engine::Stable(law) => draws.extend((0..n_steps).map(|_| stream.standard_stable(law))),
            Engine::Wiener => draws.extend((0..n_steps).map(|_| stream.standard_normal())),
        }
    }
    draws
}

/// `max_j ‖A^θ Z(t_j)‖` for each horizon, all on `n_steps` steps.
///
/// Stable noise uses the direct midpoint recursion; Wiener noise uses the
/// by-parts route of `wiener_convolve`.
pub(crate) fn convolution_sups(
    engine: &Engine,
    modes: &ModeSet,
    theta: f64,
    horizons: &[f64],
    n_steps: usize,
    seed: u64,
    replica: u32,
) -> Vec<f64> {
    let k_modes = modes.len();
    let draws = standard_draws(engine, k_modes, n_steps, seed, replica);
    let weights = modes.norm_weights(theta);
    let mut level = vec![0.0; k_modes];
    let mut state = vec![0.0; k_modes];
    let mut z = vec![0.0; k_modes];
    horizons
        .iter()
        .map(|&horizon| {
            let dt = horizon / n_steps as f64;
            let scale = engine.step_scale(dt);
            let kernels = ModeKernel::for_modes(modes, dt);
            level.iter_mut().for_each(|v| *v = 0.0);
            state.iter_mut().for_each(|v| *v = 0.0);
            z.iter_mut().for_each(|v| *v = 0.0);
            let mut sup_sq: f64 = 0.0;
            for j in 0..n_steps {
                for k in 0..k_modes {
                    let ker = &kernels[k];
                    let left = level[k];
                    let right = left + scale * draws[k * n_steps + j];
                    level[k] = right;
                    z[k] = match engine {
                        Engine::Stable(_) => {
                            state[k] = ker.direct_step(state[k], right - left);
                            state[k]
                        }
                        Engine::Wiener => {
                            state[k] = ker.by_parts_step(state[k], left);
                            ker.beta * right - state[k]
                        }
                    };
                }
                sup_sq = sup_sq.max(weighted_norm_sq(&weights, z.iter()));
                if !sup_sq.is_finite() {
                    return f64::INFINITY;
                }
            }
            sup_sq.sqrt()
        })
        .collect()
}

/// `(max_j ‖A^θ L(t_j)‖, ‖A^θ L(T)‖)` for the weighted driving field.
pub(crate) fn driving_sup_and_end(
    engine: &Engine,
    modes: &ModeSet,
    theta: f64,
    horizon: f64,
    n_steps: usize,
    seed: u64,
    replica: u32,
) -> (f64, f64) {
    let k_modes = modes.len();
    let draws = standard_draws(engine, k_modes, n_steps, seed, replica);
    let weights = modes.norm_weights(theta);
    let betas: Vec<f64> = modes.betas().collect();
    let scale = engine.step_scale(horizon / n_steps as f64);
    let mut level = vec![0.0; k_modes];
    let mut field = vec![0.0; k_modes];
    let mut sup_sq: f64 = 0.0;
    let mut end_sq = 0.0;
    for j in 0..n_steps {
        for k in 0..k_modes {
            level[k] += scale * draws[k * n_steps + j];
            field[k] = betas[k] * level[k];
        }
        end_sq = weighted_norm_sq(&weights, field.iter());
        sup_sq = sup_sq.max(end_sq);
    }
    (sup_sq.sqrt(), end_sq.sqrt())
}
