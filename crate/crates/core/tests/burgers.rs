use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stable_convolve::burgers::{beta_exp_admissible, BurgersSolver, BurgersState};
use stable_convolve::{burgers_modes, Coeffs, Error, GridSpec, StableLaw};

fn solver(n: usize, nu: f64) -> BurgersSolver {
    BurgersSolver::new(burgers_modes(n, 1.25, 1.0).unwrap(), nu).unwrap()
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Coeffs {
    Coeffs((0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Truncated `-X X'` from the complex Fourier coefficients by direct summation.
fn direct_nonlinearity(cos: &[f64], sin: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = cos.len() as i64;
    let coeff = |k: i64| -> (f64, f64) {
        match k {
            0 => (0.0, 0.0),
            k if k > 0 => (cos[k as usize - 1] / 2.0, -sin[k as usize - 1] / 2.0),
            k => (cos[(-k) as usize - 1] / 2.0, sin[(-k) as usize - 1] / 2.0),
        }
    };
    let mut a = vec![0.0; n as usize];
    let mut b = vec![0.0; n as usize];
    for m in 1..=n {
        let (mut re, mut im) = (0.0, 0.0);
        for k in -n..=n {
            let l = m - k;
            if l.abs() > n {
                continue;
            }
            let (xr, xi) = coeff(k);
            let (yr, yi) = coeff(l);
            // X̂_k · (i l X̂_l)
            let (dr, di) = (-(l as f64) * yi, l as f64 * yr);
            re += xr * dr - xi * di;
            im += xr * di + xi * dr;
        }
        a[m as usize - 1] = -2.0 * re;
        b[m as usize - 1] = 2.0 * im;
    }
    (a, b)
}

#[test]
fn energy_neutrality_across_truncations() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [8, 16, 32] {
        let s = solver(n, 1.0);
        for _ in 0..1000 {
            let x = random_state(n, &mut rng);
            let norm = x.dot(&x).sqrt();
            let pairing = s.nonlinearity(&x).unwrap().dot(&x);
            assert!(pairing.abs() <= 1e-10 * norm.powi(3), "N={n}: {pairing}");
        }
    }
}

#[test]
fn pseudospectral_product_matches_direct_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [3, 8, 16, 32] {
        let s = solver(n, 1.0);
        for _ in 0..20 {
            let cos: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sin: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = BurgersState::from_amplitudes(&cos, &sin).unwrap();
            let (a, b) = BurgersState { coeffs: s.nonlinearity(&x.coeffs).unwrap() }.amplitudes();
            let (ea, eb) = direct_nonlinearity(&cos, &sin);
            let err = a.iter().zip(&ea).chain(b.iter().zip(&eb)).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12 * n as f64, "N={n}: {err}");
        }
    }
}

#[test]
fn grid_is_large_enough_to_dealias() {
    for n in [1, 5, 16, 33] {
        assert!(solver(n, 1.0).grid_points() > 3 * n);
    }
}

#[test]
fn linear_solver_equals_semigroup_plus_convolution() {
    let n = 8;
    let s = solver(n, 0.3).without_nonlinearity();
    let grid = GridSpec::new(1.0, 400).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x0 = BurgersState { coeffs: random_state(n, &mut rng) };
    let path = s.solve_path(&x0, &grid, &StableLaw::new(1.5).unwrap(), 9).unwrap();
    for (k, m) in s.modes().entries().iter().enumerate() {
        for j in [1, 100, 400] {
            let expected = (-0.3 * m.gamma * grid.time(j)).exp() * x0.coeffs.0[k] + path.convolution.values()[[k, j]];
            assert!((path.trajectory.values()[[k, j]] - expected).abs() < 1e-10);
        }
    }
}

#[test]
fn noiseless_energy_dissipates() {
    let quiet = BurgersSolver::new(burgers_modes(16, 1.25, 1.0).unwrap().with_betas(&[0.0; 32]).unwrap(), 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x0 = BurgersState { coeffs: random_state(16, &mut rng) };
    let path = quiet.solve_path(&x0, &GridSpec::new(1.0, 2000).unwrap(), &StableLaw::new(1.5).unwrap(), 1).unwrap();
    let e = &path.diagnostics.energy;
    assert!(e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert!(e.last().unwrap() < &e[0]);
}

#[test]
fn time_refinement_converges_at_first_order() {
    let s = BurgersSolver::new(burgers_modes(8, 1.25, 1.0).unwrap().with_betas(&[0.0; 16]).unwrap(), 0.2).unwrap();
    let law = StableLaw::new(1.5).unwrap();
    let x0 = BurgersState::from_amplitudes(&[0.5, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0])
        .unwrap();
    let end = |n: usize| s.solve_path(&x0, &GridSpec::new(1.0, n).unwrap(), &law, 1).unwrap().trajectory.at(n);
    let reference = end(16384);
    let errs: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&n| {
            let x = end(n);
            x.0.iter().zip(&reference.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    assert!(orders.iter().all(|&o| o >= 0.8), "{orders:?}");
}

#[test]
fn jumps_align_with_large_driving_increments() {
    let s = solver(16, 1.0);
    let law = StableLaw::new(1.5).unwrap();
    let grid = GridSpec::new(0.5, 1024).unwrap();
    let (mut aligned, mut jumps) = (0.0, 0usize);
    for replica in 0..10 {
        let d = s.solve_path_replica(&BurgersState::zero(16), &grid, &law, 77, replica).unwrap().diagnostics;
        assert_eq!(d.energy.len(), grid.n_points());
        assert!(d.max_jump >= d.jump_threshold || d.jump_count == 0);
        aligned += d.jump_alignment * d.jump_count as f64;
        jumps += d.jump_count;
    }
    assert!(jumps > 0 && aligned / jumps as f64 >= 0.9);
}

#[test]
fn large_states_blow_up_with_an_error() {
    let s = solver(8, 0.01);
    let x0 = BurgersState { coeffs: Coeffs(vec![1e150; 16]) };
    let r = s.solve_path(&x0, &GridSpec::new(1.0, 10).unwrap(), &StableLaw::new(1.5).unwrap(), 1);
    assert!(matches!(r, Err(Error::BlowUp { .. })));
}

#[test]
fn admissibility_threshold() {
    assert!(beta_exp_admissible(1.25, 1.5) == (1.25 > 1.0 + 1.0 / 3.0));
    assert!(beta_exp_admissible(1.5, 1.5));
    assert!(!beta_exp_admissible(1.0, 1.9));
}

#[test]
fn physical_evaluation_of_single_modes() {
    let s = solver(4, 1.0);
    let x = BurgersState::from_amplitudes(&[0.0, 2.0, 0.0, 0.0], &[0.0; 4]).unwrap();
    let values = s.to_physical(&x.coeffs, 8);
    for (j, v) in values.iter().enumerate() {
        let xi = 2.0 * std::f64::consts::PI * j as f64 / 8.0;
        assert!((v - 2.0 * (2.0 * xi).cos()).abs() < 1e-12);
    }
}
