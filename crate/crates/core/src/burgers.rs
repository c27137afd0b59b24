//! Spectral Galerkin solver for the stochastic Burgers equation
//! `dX = (ν ∂²X - X ∂X) dt + dL` on the mean-zero torus.
//!
//! Coefficients live on the real orthonormal basis of [`burgers_modes`]:
//! position `2(k-1)` is `cos(kξ)/√π`, position `2(k-1)+1` is `sin(kξ)/√π`.
//! Time stepping is exponential Euler,
//! `X_{n+1} = e^{-νAΔ}(X_n + Δ B(X_n)) + ΔZ_n`, where `ΔZ_n` is the increment
//! of the stochastic convolution for `νA` over the step.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::convolution::{convolve_by_parts, simulate_driving_replica, DrivingPath, FieldPath, Role};
use crate::error::{Error, Result};
use crate::estimators::stats::quantile;
use crate::grid::GridSpec;
use crate::spectral::{weighted_norm, Coeffs, ModeSet};
use crate::stable_rng::StableLaw;

/// Jumps larger than this multiple of the median step norm are counted.
pub const JUMP_THRESHOLD_FACTOR: f64 = 5.0;

/// Burgers noise decay needs `beta_exp > 1 + 1/(2α)`.
pub fn beta_exp_admissible(beta_exp: f64, alpha: f64) -> bool {
    beta_exp > 1.0 + 1.0 / (2.0 * alpha)
}

/// Galerkin state `X = Σ x_k e_k`; mean zero by construction (no `k = 0` channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurgersState {
    pub coeffs: Coeffs,
}

impl BurgersState {
    pub fn zero(n_fourier: usize) -> Self {
        Self { coeffs: Coeffs::zeros(2 * n_fourier) }
    }

    /// From plain Fourier amplitudes `X(ξ) = Σ a_k cos kξ + b_k sin kξ`.
    pub fn from_amplitudes(cos: &[f64], sin: &[f64]) -> Result<Self> {
        if cos.len() != sin.len() {
            return Err(Error::Contract("cosine and sine amplitudes differ in length".into()));
        }
        let root_pi = PI.sqrt();
        let coeffs = cos.iter().zip(sin).flat_map(|(a, b)| [a * root_pi, b * root_pi]).collect();
        Ok(Self { coeffs: Coeffs(coeffs) })
    }

    /// Plain Fourier amplitudes `(a_k, b_k)`.
    pub fn amplitudes(&self) -> (Vec<f64>, Vec<f64>) {
        let root_pi = PI.sqrt();
        let cos = self.coeffs.0.iter().step_by(2).map(|c| c / root_pi).collect();
        let sin = self.coeffs.0.iter().skip(1).step_by(2).map(|c| c / root_pi).collect();
        (cos, sin)
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.dot(&self.coeffs)
    }
}

pub struct BurgersSolver {
    modes: ModeSet,
    n_fourier: usize,
    nu: f64,
    grid_points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    nonlinear: bool,
}

impl std::fmt::Debug for BurgersSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BurgersSolver")
            .field("n_fourier", &self.n_fourier)
            .field("nu", &self.nu)
            .field("grid_points", &self.grid_points)
            .field("nonlinear", &self.nonlinear)
            .finish()
    }
}

/// Jump and energy diagnostics of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurgersDiagnostics {
    /// `‖X(t_{j+1}) - X(t_j)‖_H` per step.
    pub jump_sizes: Vec<f64>,
    /// `‖β (l(t_{j+1}) - l(t_j))‖_H` per step.
    pub driving_increments: Vec<f64>,
    /// `‖X(t_j)‖²_H` per grid point.
    pub energy: Vec<f64>,
    pub max_jump: f64,
    pub jump_threshold: f64,
    pub jump_count: usize,
    /// Share of above-threshold steps that are also among the same number of
    /// largest driving increments (1 when no step exceeds the threshold).
    pub jump_alignment: f64,
}

impl BurgersDiagnostics {
    fn new(jump_sizes: Vec<f64>, driving_increments: Vec<f64>, energy: Vec<f64>) -> Self {
        let max_jump = jump_sizes.iter().copied().fold(0.0, f64::max);
        let jump_threshold = JUMP_THRESHOLD_FACTOR * quantile(&jump_sizes, 0.5);
        let jumps: Vec<usize> = (0..jump_sizes.len()).filter(|&j| jump_sizes[j] > jump_threshold).collect();
        let jump_alignment = if jumps.is_empty() {
            1.0
        } else {
            let mut order: Vec<usize> = (0..driving_increments.len()).collect();
            order.sort_by(|&a, &b| driving_increments[b].total_cmp(&driving_increments[a]));
            let mut top = vec![false; driving_increments.len()];
            order.iter().take(jumps.len()).for_each(|&j| top[j] = true);
            jumps.iter().filter(|&&j| top[j]).count() as f64 / jumps.len() as f64
        };
        Self { max_jump, jump_threshold, jump_count: jumps.len(), jump_alignment, jump_sizes, driving_increments, energy }
    }
}

#[derive(Debug, Clone)]
pub struct BurgersPath {
    pub trajectory: FieldPath,
    /// The stochastic convolution for `νA` built from the same driving path.
    pub convolution: FieldPath,
    pub diagnostics: BurgersDiagnostics,
}

impl BurgersSolver {
    /// `modes` must be a [`burgers_modes`](crate::spectral::burgers_modes) layout.
    pub fn new(modes: ModeSet, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!("viscosity must be positive, got {nu}")));
        }
        if !modes.len().is_multiple_of(2) {
            return Err(Error::Contract("Burgers modes come in cosine/sine pairs".into()));
        }
        let n_fourier = modes.len() / 2;
        for (i, m) in modes.entries().iter().enumerate() {
            let k = (i / 2 + 1) as i64;
            let expected = if i % 2 == 0 { k } else { -k };
            if m.k != expected || m.gamma != (k * k) as f64 {
                return Err(Error::Contract(format!("mode {i} is not the Burgers channel {expected} with gamma = k^2")));
            }
        }
        // exact de-aliasing of quadratic terms needs at least 3N + 1 points
        let grid_points = (3 * n_fourier + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(grid_points),
            inverse: planner.plan_fft_inverse(grid_points),
            modes,
            n_fourier,
            nu,
            grid_points,
            nonlinear: true,
        })
    }

    /// Test hook: drop the `X ∂X` term, leaving the linear equation.
    pub fn without_nonlinearity(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn n_fourier(&self) -> usize {
        self.n_fourier
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    fn spectrum(&self, x: &Coeffs) -> Vec<Complex64> {
        let m = self.grid_points;
        let norm = 0.5 / PI.sqrt();
        let mut spec = vec![Complex64::new(0.0, 0.0); m];
        for k in 1..=self.n_fourier {
            let c = Complex64::new(x.0[2 * (k - 1)], -x.0[2 * (k - 1) + 1]) * norm;
            spec[k] = c;
            spec[m - k] = c.conj();
        }
        spec
    }

    /// Galerkin projection of `B(X) = -X ∂_ξ X`, evaluated pseudospectrally
    /// on `grid_points ≥ 3N + 1` points.
    pub fn nonlinearity(&self, x: &Coeffs) -> Result<Coeffs> {
        if x.len() != self.modes.len() {
            return Err(Error::Contract(format!("{} coefficients for {} Burgers modes", x.len(), self.modes.len())));
        }
        let m = self.grid_points;
        let mut field = self.spectrum(x);
        let mut slope: Vec<Complex64> =
            field.iter().enumerate().map(|(i, c)| c * Complex64::new(0.0, wavenumber(i, m))).collect();
        self.inverse.process(&mut field);
        self.inverse.process(&mut slope);
        let mut product: Vec<Complex64> = field.iter().zip(&slope).map(|(u, du)| Complex64::new(-u.re * du.re, 0.0)).collect();
        self.forward.process(&mut product);
        let back = 2.0 * PI.sqrt() / m as f64;
        let mut out = Vec::with_capacity(self.modes.len());
        for c in product.iter().skip(1).take(self.n_fourier) {
            out.push(back * c.re);
            out.push(-back * c.im);
        }
        Ok(Coeffs(out))
    }

    /// `X(ξ_j)` at `points` equally spaced points of `[0, 2π)`.
    pub fn to_physical(&self, x: &Coeffs, points: usize) -> Vec<f64> {
        let root_pi = PI.sqrt();
        (0..points)
            .map(|j| {
                let xi = 2.0 * PI * j as f64 / points as f64;
                (1..=self.n_fourier)
                    .map(|k| {
                        let kx = k as f64 * xi;
                        (x.0[2 * (k - 1)] * kx.cos() + x.0[2 * (k - 1) + 1] * kx.sin()) / root_pi
                    })
                    .sum()
            })
            .collect()
    }

    fn advance(&self, x: &Coeffs, decay: &[f64], dt: f64, z_increment: &Coeffs) -> Result<Coeffs> {
        let drift = if self.nonlinear { self.nonlinearity(x)? } else { Coeffs::zeros(x.len()) };
        Ok(Coeffs(
            x.0.iter()
                .zip(&drift.0)
                .zip(decay)
                .zip(&z_increment.0)
                .map(|(((v, b), a), dz)| a * (v + dt * b) + dz)
                .collect(),
        ))
    }

    fn decays(&self, dt: f64) -> Vec<f64> {
        self.modes.gammas().map(|g| (-self.nu * g * dt).exp()).collect()
    }

    /// One exponential-Euler step.
    pub fn step_mild(&self, state: &BurgersState, dt: f64, z_increment: &Coeffs) -> Result<BurgersState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("step must be positive, got {dt}")));
        }
        if z_increment.len() != self.modes.len() {
            return Err(Error::Contract("noise increment does not match the Burgers modes".into()));
        }
        let coeffs = self.advance(&state.coeffs, &self.decays(dt), dt, z_increment)?;
        if !coeffs.is_finite() {
            return Err(Error::BlowUp { step: 0, time: dt });
        }
        Ok(BurgersState { coeffs })
    }

    /// Simulates the driving noise for replica 0 and integrates.
    pub fn solve_path(&self, x0: &BurgersState, grid: &GridSpec, law: &StableLaw, seed: u64) -> Result<BurgersPath> {
        self.solve_path_replica(x0, grid, law, seed, 0)
    }

    pub fn solve_path_replica(
        &self,
        x0: &BurgersState,
        grid: &GridSpec,
        law: &StableLaw,
        seed: u64,
        replica: u32,
    ) -> Result<BurgersPath> {
        let driving = simulate_driving_replica(&self.modes, law, grid, seed, replica)?;
        self.solve_with_driving(x0, &driving)
    }

    /// Integrates against a given driving path (rows aligned with the Burgers modes).
    pub fn solve_with_driving(&self, x0: &BurgersState, driving: &DrivingPath) -> Result<BurgersPath> {
        if driving.modes().len() != self.modes.len() || x0.coeffs.len() != self.modes.len() {
            return Err(Error::Contract("driving path or initial state does not match the Burgers modes".into()));
        }
        let grid = *driving.grid();
        let dt = grid.dt();
        let viscous = self.modes.with_scaled_rates(self.nu)?;
        let driving = DrivingPath::from_samples(grid, viscous, driving.samples().clone())?;
        let (_, z) = convolve_by_parts(&driving);
        let decay = self.decays(dt);
        let n_modes = self.modes.len();
        let weights = vec![1.0; n_modes];
        let betas: Vec<f64> = self.modes.betas().collect();

        let mut values = Array2::zeros((n_modes, grid.n_points()));
        values.column_mut(0).assign(&ndarray::ArrayView1::from(&x0.coeffs.0));
        let mut x = x0.coeffs.clone();
        let mut jump_sizes = Vec::with_capacity(grid.n_steps());
        let mut driving_increments = Vec::with_capacity(grid.n_steps());
        let mut energy = Vec::with_capacity(grid.n_points());
        energy.push(x.dot(&x));
        for j in 0..grid.n_steps() {
            let dz = Coeffs((0..n_modes).map(|k| z.values[[k, j + 1]] - decay[k] * z.values[[k, j]]).collect());
            let next = self.advance(&x, &decay, dt, &dz)?;
            if !next.is_finite() {
                return Err(Error::BlowUp { step: j + 1, time: grid.time(j + 1) });
            }
            let diff: Vec<f64> = next.0.iter().zip(&x.0).map(|(a, b)| a - b).collect();
            jump_sizes.push(weighted_norm(&weights, diff.iter()));
            let dl: Vec<f64> =
                (0..n_modes).map(|k| betas[k] * (driving.samples()[[k, j + 1]] - driving.samples()[[k, j]])).collect();
            driving_increments.push(weighted_norm(&weights, dl.iter()));
            energy.push(next.dot(&next));
            values.column_mut(j + 1).assign(&ndarray::ArrayView1::from(&next.0));
            x = next;
        }
        let trajectory = FieldPath::new(grid, self.modes.clone(), values, Role::X)?;
        let convolution = FieldPath { modes: self.modes.clone(), ..z };
        Ok(BurgersPath {
            trajectory,
            convolution,
            diagnostics: BurgersDiagnostics::new(jump_sizes, driving_increments, energy),
        })
    }
}

impl BurgersPath {
    /// `t,channel,value` rows, channel being the signed mode index
    /// (`+k` cosine, `-k` sine).
    pub fn write_trajectory_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "channel", "value"])?;
        let field = &self.trajectory;
        for (j, t) in field.grid().times().enumerate() {
            let t = format!("{t:.16e}");
            for (mode, v) in field.modes().entries().iter().zip(field.values().column(j)) {
                w.write_record([t.as_str(), &mode.k.to_string(), &format!("{v:.16e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Signed wavenumber of FFT bin `i` for bins holding `|k| < m/2`.
fn wavenumber(i: usize, m: usize) -> f64 {
    if i <= m / 2 {
        i as f64
    } else {
        i as f64 - m as f64
    }
}
