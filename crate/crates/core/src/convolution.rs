//! Driving noise and the stochastic convolution `Z(t) = ∫_0^t e^{-A(t-s)} dL_s`.
//!
//! `Z` is computed two ways from the same driving path:
//!
//! * directly, mode by mode, with the exponential recursion
//!   `z(t_{j+1}) = e^{-γΔ} z(t_j) + e^{-γΔ/2} β Δl_j` (each step's increment
//!   placed at its midpoint);
//! * by parts, `Z = L - Y` with `Y(t) = ∫_0^t A e^{-A(t-s)} L_s ds`, where `Y`
//!   is integrated exactly against the left-endpoint piecewise-constant path:
//!   `y(t_{j+1}) = e^{-γΔ} y(t_j) + (1 - e^{-γΔ}) β l(t_j)`.

use std::io::{Read, Write};

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::{weighted_norm, Coeffs, ModeSet};
use crate::stable_rng::{sample_brownian_path, sample_path, RngStream, StableLaw, StreamId};

/// Raw scalar paths `l_k(t_j)`, one row per mode; `β_k` is applied downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingPath {
    grid: GridSpec,
    modes: ModeSet,
    samples: Array2<f64>,
}

impl DrivingPath {
    /// Wraps externally built paths. Rows must start at 0.
    pub fn from_samples(grid: GridSpec, modes: ModeSet, samples: Array2<f64>) -> Result<Self> {
        if samples.dim() != (modes.len(), grid.n_points()) {
            return Err(Error::Contract(format!(
                "driving samples have shape {:?}, expected ({}, {})",
                samples.dim(),
                modes.len(),
                grid.n_points()
            )));
        }
        if samples.column(0).iter().any(|&v| v != 0.0) {
            return Err(Error::Contract("driving paths must start at l(0) = 0".into()));
        }
        Ok(Self { grid, modes, samples })
    }

    /// Builds every row from the same scalar function of time.
    pub fn from_fn(grid: GridSpec, modes: ModeSet, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let samples = Array2::from_shape_fn((modes.len(), grid.n_points()), |(k, j)| f(k, grid.time(j)));
        Self::from_samples(grid, modes, samples)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.samples.row(k)
    }

    /// The same paths observed on every `factor`-th grid point.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let samples = self.samples.slice(ndarray::s![.., ..;factor]).to_owned();
        Ok(Self { grid, modes: self.modes.clone(), samples })
    }

    /// Pointwise sum of two driving paths on the same grid and modes.
    pub fn try_add(&self, other: &DrivingPath) -> Result<Self> {
        if self.grid != other.grid || self.modes != other.modes {
            return Err(Error::Contract("driving paths live on different grids or modes".into()));
        }
        Ok(Self { grid: self.grid, modes: self.modes.clone(), samples: &self.samples + &other.samples })
    }

    /// The weighted field `L = Σ β_k l_k e_k`.
    pub fn weighted(&self) -> FieldPath {
        let mut values = self.samples.clone();
        for (mut row, beta) in values.axis_iter_mut(Axis(0)).zip(self.modes.betas()) {
            row.mapv_inplace(|v| beta * v);
        }
        FieldPath { grid: self.grid, modes: self.modes.clone(), values, role: Role::L }
    }
}

/// Which field a [`FieldPath`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    L,
    Y,
    Z,
    #[serde(rename = "Z_W")]
    ZW,
    /// A Burgers trajectory.
    X,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::L => "L",
            Role::Y => "Y",
            Role::Z => "Z",
            Role::ZW => "Z_W",
            Role::X => "X",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "L" => Role::L,
            "Y" => Role::Y,
            "Z" => Role::Z,
            "Z_W" => Role::ZW,
            "X" => Role::X,
            _ => return None,
        })
    }
}

/// Per-mode field values `v_k(t_j)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPath {
    pub(crate) grid: GridSpec,
    pub(crate) modes: ModeSet,
    pub(crate) values: Array2<f64>,
    pub(crate) role: Role,
}

impl FieldPath {
    pub fn new(grid: GridSpec, modes: ModeSet, values: Array2<f64>, role: Role) -> Result<Self> {
        if values.dim() != (modes.len(), grid.n_points()) {
            return Err(Error::Contract(format!("field values have shape {:?}", values.dim())));
        }
        Ok(Self { grid, modes, values, role })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn at(&self, j: usize) -> Coeffs {
        Coeffs(self.values.column(j).to_vec())
    }

    /// `‖A^σ v(t_j)‖_H` for every grid point.
    pub fn norms(&self, sigma: f64) -> Vec<f64> {
        let w = self.modes.norm_weights(sigma);
        self.values
            .axis_iter(Axis(1))
            .map(|col| weighted_norm(&w, col.iter()))
            .collect()
    }

    /// `max_j ‖A^σ v(t_j)‖_H`.
    pub fn sup_norm(&self, sigma: f64) -> f64 {
        self.norms(sigma).into_iter().fold(0.0, f64::max)
    }

    /// True when any value overflowed to a non-finite number.
    pub fn is_degenerate(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }

    /// Largest absolute entrywise difference to another field on the same layout.
    pub fn max_abs_diff(&self, other: &FieldPath) -> Result<f64> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::Contract("fields have different shapes".into()));
        }
        Ok(self.values.iter().zip(other.values.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// `max_j ‖A^σ (self - other)(t_j)‖_H`.
    pub fn sup_norm_diff(&self, other: &FieldPath, sigma: f64) -> Result<f64> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::Contract("fields have different shapes".into()));
        }
        let diff = FieldPath { values: &self.values - &other.values, ..self.clone() };
        Ok(diff.sup_norm(sigma))
    }

    /// The same field observed on every `factor`-th grid point.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.slice(ndarray::s![.., ..;factor]).to_owned();
        Ok(Self { grid, values, modes: self.modes.clone(), role: self.role })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_fields_csv(out, &[self])
    }
}

/// Writes `t,mode_k,value,role` rows (time-major) with 17 significant digits.
pub fn write_fields_csv<W: Write>(out: W, fields: &[&FieldPath]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "mode_k", "value", "role"])?;
    for field in fields {
        for (j, t) in field.grid.times().enumerate() {
            let t = format!("{t:.16e}");
            for (mode, v) in field.modes.entries().iter().zip(field.values.column(j)) {
                w.write_record([t.as_str(), &mode.k.to_string(), &format!("{v:.16e}"), field.role.as_str()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// One row of a field CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRecord {
    pub t: f64,
    pub mode_k: i64,
    pub value: f64,
    pub role: Role,
}

pub fn read_fields_csv<R: Read>(input: R) -> Result<Vec<FieldRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Contract(format!("short CSV row: {rec:?}")));
        let bad = |what: &str| Error::Contract(format!("bad {what} in CSV row {rec:?}"));
        rows.push(FieldRecord {
            t: field(0)?.parse().map_err(|_| bad("t"))?,
            mode_k: field(1)?.parse().map_err(|_| bad("mode_k"))?,
            value: field(2)?.parse().map_err(|_| bad("value"))?,
            role: Role::parse(field(3)?).ok_or_else(|| bad("role"))?,
        });
    }
    Ok(rows)
}

/// Per-mode step coefficients for a fixed step `Δ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeKernel {
    /// `e^{-γΔ}`
    pub decay: f64,
    /// `e^{-γΔ/2} β`
    pub midpoint_gain: f64,
    /// `(1 - e^{-γΔ}) β`
    pub smoothing_gain: f64,
    pub beta: f64,
}

impl ModeKernel {
    pub fn new(gamma: f64, beta: f64, dt: f64) -> Self {
        let x = gamma * dt;
        Self {
            decay: (-x).exp(),
            midpoint_gain: (-0.5 * x).exp() * beta,
            smoothing_gain: -(-x).exp_m1() * beta,
            beta,
        }
    }

    pub fn for_modes(modes: &ModeSet, dt: f64) -> Vec<Self> {
        modes.entries().iter().map(|m| Self::new(m.gamma, m.beta, dt)).collect()
    }

    #[inline]
    pub fn direct_step(&self, z: f64, dl: f64) -> f64 {
        self.decay * z + self.midpoint_gain * dl
    }

    #[inline]
    pub fn by_parts_step(&self, y: f64, l_left: f64) -> f64 {
        self.decay * y + self.smoothing_gain * l_left
    }
}

/// Stream id of mode position `k` in replica `replica`.
pub fn stream_for(seed: u64, replica: u32, k: usize) -> RngStream {
    RngStream::new(seed, StreamId::new(replica, k as u32))
}

/// Driving paths for replica 0.
pub fn simulate_driving(modes: &ModeSet, law: &StableLaw, grid: &GridSpec, seed: u64) -> Result<DrivingPath> {
    simulate_driving_replica(modes, law, grid, seed, 0)
}

/// One independent stable path per mode, stream `(replica, k)`.
pub fn simulate_driving_replica(
    modes: &ModeSet,
    law: &StableLaw,
    grid: &GridSpec,
    seed: u64,
    replica: u32,
) -> Result<DrivingPath> {
    let mut samples = Array2::zeros((modes.len(), grid.n_points()));
    for (k, mut row) in samples.axis_iter_mut(Axis(0)).enumerate() {
        let path = sample_path(law, grid, &mut stream_for(seed, replica, k))?;
        row.assign(&ArrayView1::from(&path));
    }
    DrivingPath::from_samples(*grid, modes.clone(), samples)
}

/// One independent standard Brownian path per mode, stream `(replica, k)`.
pub fn simulate_brownian_driving(modes: &ModeSet, grid: &GridSpec, seed: u64, replica: u32) -> DrivingPath {
    let mut samples = Array2::zeros((modes.len(), grid.n_points()));
    for (k, mut row) in samples.axis_iter_mut(Axis(0)).enumerate() {
        let path = sample_brownian_path(grid, &mut stream_for(seed, replica, k));
        row.assign(&ArrayView1::from(&path));
    }
    DrivingPath { grid: *grid, modes: modes.clone(), samples }
}

/// `Z` by the per-mode midpoint recursion.
pub fn convolve_direct(driving: &DrivingPath) -> FieldPath {
    let kernels = ModeKernel::for_modes(&driving.modes, driving.grid.dt());
    let mut values = Array2::zeros(driving.samples.dim());
    for ((kernel, l), mut z) in kernels.iter().zip(driving.samples.axis_iter(Axis(0))).zip(values.axis_iter_mut(Axis(0))) {
        let mut state = 0.0;
        for j in 0..driving.grid.n_steps() {
            state = kernel.direct_step(state, l[j + 1] - l[j]);
            z[j + 1] = state;
        }
    }
    FieldPath { grid: driving.grid, modes: driving.modes.clone(), values, role: Role::Z }
}

/// `(Y, Z = L - Y)` by the integration-by-parts split.
pub fn convolve_by_parts(driving: &DrivingPath) -> (FieldPath, FieldPath) {
    by_parts_with_role(driving, Role::Z)
}

fn by_parts_with_role(driving: &DrivingPath, z_role: Role) -> (FieldPath, FieldPath) {
    let kernels = ModeKernel::for_modes(&driving.modes, driving.grid.dt());
    let mut y_values = Array2::zeros(driving.samples.dim());
    let mut z_values = Array2::zeros(driving.samples.dim());
    for (k, kernel) in kernels.iter().enumerate() {
        let l = driving.samples.row(k);
        let mut y = 0.0;
        for j in 0..driving.grid.n_steps() {
            y = kernel.by_parts_step(y, l[j]);
            y_values[[k, j + 1]] = y;
            z_values[[k, j + 1]] = kernel.beta * l[j + 1] - y;
        }
    }
    let y = FieldPath { grid: driving.grid, modes: driving.modes.clone(), values: y_values, role: Role::Y };
    let z = FieldPath { grid: driving.grid, modes: driving.modes.clone(), values: z_values, role: z_role };
    (y, z)
}

/// Wiener analogue: `Z_W = Q W - ∫_0^t A e^{-A(t-s)} Q W_s ds` with `q_k = β_k`.
/// Returns `(Y, Z_W)` for replica 0.
pub fn wiener_convolve(modes: &ModeSet, grid: &GridSpec, seed: u64) -> (FieldPath, FieldPath) {
    wiener_convolve_replica(modes, grid, seed, 0)
}

pub fn wiener_convolve_replica(modes: &ModeSet, grid: &GridSpec, seed: u64, replica: u32) -> (FieldPath, FieldPath) {
    by_parts_with_role(&simulate_brownian_driving(modes, grid, seed, replica), Role::ZW)
}

/// `Z_W` by the exact Gaussian transition
/// `z(t_{j+1}) = e^{-γΔ} z(t_j) + q ξ`, `ξ ~ N(0, (1 - e^{-2γΔ}) / (2γ))`.
///
/// Uses its own draws, so it is equal in law (not pathwise) to [`wiener_convolve`].
pub fn wiener_convolve_exact(modes: &ModeSet, grid: &GridSpec, seed: u64, replica: u32) -> FieldPath {
    let dt = grid.dt();
    let mut values = Array2::zeros((modes.len(), grid.n_points()));
    for (k, m) in modes.entries().iter().enumerate() {
        let decay = (-m.gamma * dt).exp();
        let sd = (-(-2.0 * m.gamma * dt).exp_m1() / (2.0 * m.gamma)).sqrt();
        let mut stream = stream_for(seed, replica, k);
        let mut z = 0.0;
        for j in 0..grid.n_steps() {
            z = decay * z + m.beta * sd * stream.standard_normal();
            values[[k, j + 1]] = z;
        }
    }
    FieldPath { grid: *grid, modes: modes.clone(), values, role: Role::ZW }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Mode;

    fn one_mode(gamma: f64, beta: f64) -> ModeSet {
        ModeSet::new(vec![Mode { k: 1, gamma, beta }]).unwrap()
    }

    #[test]
    fn single_step_driving_shape() {
        let law = StableLaw::new(1.5).unwrap();
        let grid = GridSpec::new(0.5, 1).unwrap();
        let d = simulate_driving(&one_mode(1.0, 1.0), &law, &grid, 3).unwrap();
        assert_eq!(d.samples().dim(), (1, 2));
        assert_eq!(d.samples()[[0, 0]], 0.0);
        let mut s = stream_for(3, 0, 0);
        let x = crate::stable_rng::sample_increment(&law, 0.5, &mut s).unwrap();
        assert_eq!(d.samples()[[0, 1]], x);
    }

    #[test]
    fn zero_rate_row_reproduces_weighted_driving() {
        // γ = 0 bypasses ModeSet validation on purpose: no decay at all.
        let modes = ModeSet { entries: vec![Mode { k: 1, gamma: 0.0, beta: 0.7 }] };
        let grid = GridSpec::new(1.0, 32).unwrap();
        let law = StableLaw::new(1.5).unwrap();
        let mut samples = Array2::zeros((1, 33));
        let path = sample_path(&law, &grid, &mut stream_for(1, 0, 0)).unwrap();
        samples.row_mut(0).assign(&ArrayView1::from(&path));
        let d = DrivingPath::from_samples(grid, modes, samples).unwrap();
        let z = convolve_direct(&d);
        let (_, zb) = convolve_by_parts(&d);
        let l = d.weighted();
        for j in 0..=32 {
            assert!((z.values[[0, j]] - l.values[[0, j]]).abs() <= 1e-12 * (1.0 + l.values[[0, j]].abs()));
            assert_eq!(zb.values[[0, j]], l.values[[0, j]]);
        }
    }

    #[test]
    fn from_samples_checks_shape_and_origin() {
        let grid = GridSpec::new(1.0, 4).unwrap();
        let modes = one_mode(1.0, 1.0);
        assert!(DrivingPath::from_samples(grid, modes.clone(), Array2::zeros((1, 4))).is_err());
        assert!(DrivingPath::from_fn(grid, modes, |_, t| t + 1.0).is_err());
    }

    #[test]
    fn single_jump_unrolls_by_hand() {
        let (gamma, beta, n, m) = (3.0, 0.5, 64, 20);
        let grid = GridSpec::new(1.0, n).unwrap();
        let d = DrivingPath::from_fn(grid, one_mode(gamma, beta), |_, t| if t >= grid.time(m) { 1.0 } else { 0.0 }).unwrap();
        let z = convolve_direct(&d);
        let dt = grid.dt();
        for j in 0..=n {
            let expected = if j >= m { beta * (-gamma * (grid.time(j) - grid.time(m) + dt / 2.0)).exp() } else { 0.0 };
            assert!((z.values[[0, j]] - expected).abs() < 1e-14, "j={j}");
        }
    }

    #[test]
    fn zero_driving_gives_zero_fields() {
        let grid = GridSpec::new(1.0, 16).unwrap();
        let d = DrivingPath::from_fn(grid, one_mode(2.0, 1.0), |_, _| 0.0).unwrap();
        let (y, z) = convolve_by_parts(&d);
        assert!(y.values.iter().chain(z.values.iter()).all(|&v| v == 0.0));
        assert_eq!(convolve_direct(&d).sup_norm(0.0), 0.0);
    }

    #[test]
    fn zero_beta_field_has_zero_norm() {
        let modes = ModeSet::power_law(4, 2.0, 1.0, 1.0).unwrap().with_betas(&[0.0; 4]).unwrap();
        let grid = GridSpec::new(1.0, 16).unwrap();
        let d = simulate_driving(&modes, &StableLaw::new(1.2).unwrap(), &grid, 5).unwrap();
        assert!(d.weighted().norms(0.0).iter().all(|&n| n == 0.0));
        let (_, zw) = wiener_convolve(&modes, &grid, 5);
        assert_eq!(zw.sup_norm(0.0), 0.0);
        assert_eq!(zw.role(), Role::ZW);
    }

    #[test]
    fn csv_has_header_and_round_trips() {
        let modes = ModeSet::power_law(3, 2.0, 1.5, 1.0).unwrap();
        let grid = GridSpec::new(0.3, 5).unwrap();
        let d = simulate_driving(&modes, &StableLaw::new(1.1).unwrap(), &grid, 11).unwrap();
        let z = convolve_direct(&d);
        let mut buf = Vec::new();
        z.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,mode_k,value,role\n"));
        let rows = read_fields_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 3 * 6);
        for (i, row) in rows.iter().enumerate() {
            let (j, k) = (i / 3, i % 3);
            assert_eq!(row.value.to_bits(), z.values[[k, j]].to_bits());
            assert_eq!(row.t.to_bits(), grid.time(j).to_bits());
            assert_eq!(row.role, Role::Z);
        }
    }
}
