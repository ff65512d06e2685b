//! Independent oracles and randomized checks shared by the integration tests
//! and the acceptance runner. Each `check_*` returns `Err(description)` on the
//! first violation.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use tphd::assignment::optimal_assignment;
use tphd::campaign::simulate;
use tphd::gm_tphd::{
    current_state_marginal, gmphd_reference_step, lscan_truncate, predict, prune_absorb, step_detailed, update,
    GaussianTerm, TphdState, TrajectoryComponent,
};
use tphd::metrics::{ospa, OspaParams};
use tphd::models::{
    clutter_density, constant_velocity_motion, position_measurement, BirthComponent, BirthModel, ClutterModel, Lscan,
    MeasurementModel, MotionModel, Region, ScenarioConfig,
};
use tphd::poisson::{marginal_target_phd, sample_set, GmTrajectoryPhd};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vector(rng: &mut impl Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(rand_distr::StandardNormal))
}

pub fn normal_matrix(rng: &mut impl Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * rng.sample::<f64, _>(rand_distr::StandardNormal))
}

/// `A Aᵀ + floor·I` with `A` Gaussian.
pub fn random_spd(rng: &mut impl Rng, n: usize, scale: f64, floor: f64) -> DMatrix<f64> {
    let a = normal_matrix(rng, n, n, scale);
    &a * a.transpose() + DMatrix::identity(n, n) * floor
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

// ---------------------------------------------------------------------------
// Random filter inputs

pub struct RandomFilterInput {
    pub state: TphdState,
    pub motion: MotionModel,
    pub birth: BirthModel,
    pub meas: MeasurementModel,
    pub clutter: ClutterModel,
    pub measurements: Vec<DVector<f64>>,
}

pub fn random_filter_input(rng: &mut impl Rng) -> RandomFilterInput {
    let n_x = rng.random_range(1..=3);
    let n_z = rng.random_range(1..=2);
    let time = rng.random_range(1..=6);
    let lscan = match rng.random_range(0..4) {
        0 => Lscan::Full,
        l => Lscan::window(l).unwrap(),
    };

    let j = rng.random_range(0..=6);
    let components = (0..j)
        .map(|_| {
            let len = rng.random_range(1..=time);
            let c = TrajectoryComponent::new(
                rng.random_range(0.0..5.0),
                time - len + 1,
                normal_vector(rng, len * n_x, 10.0),
                random_spd(rng, len * n_x, 1.0, 0.1),
                n_x,
            )
            .unwrap();
            lscan_truncate(&c, lscan, time)
        })
        .collect();

    let birth = BirthModel {
        components: (0..rng.random_range(0..=3))
            .map(|_| BirthComponent {
                weight: rng.random_range(0.0..1.0),
                mean: normal_vector(rng, n_x, 10.0),
                cov: random_spd(rng, n_x, 1.0, 0.1),
            })
            .collect(),
    };
    let motion = MotionModel {
        transition_matrix: normal_matrix(rng, n_x, n_x, 1.0),
        process_noise: random_spd(rng, n_x, 0.5, 0.0),
        survival_prob: rng.random_range(0.0..=1.0),
    };
    let meas = MeasurementModel {
        observation_matrix: normal_matrix(rng, n_z, n_x, 1.0),
        noise_cov: random_spd(rng, n_z, 1.0, 0.5),
        detection_prob: rng.random_range(0.0..=1.0),
    };
    let clutter = ClutterModel {
        rate: if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..20.0) },
        region: Region::new(vec![-50.0; n_z], vec![50.0; n_z]),
    };
    let measurements = (0..rng.random_range(0..=5)).map(|_| normal_vector(rng, n_z, 40.0)).collect();

    RandomFilterInput {
        state: TphdState {
            time,
            lscan,
            components,
        },
        motion,
        birth,
        meas,
        clutter,
        measurements,
    }
}

/// Σ w after prediction = p_S Σ w + Σ w_β.
pub fn check_prediction_mass(seed: u64) -> Result<(), String> {
    let input = random_filter_input(&mut rng(seed));
    let out = predict(&input.state, &input.motion, &input.birth).map_err(|e| e.to_string())?;
    let expected = input.motion.survival_prob * input.state.total_weight() + input.birth.total_weight();
    let got = out.total_weight();
    if (got - expected).abs() > 1e-12 {
        return Err(format!("seed {seed}: predicted mass {got}, expected {expected}"));
    }
    Ok(())
}

/// Missed-detection mass = (1 − p_D) Σ w; per measurement Σ_j w_j(z) ≤ 1 with
/// equality when the clutter intensity at z vanishes.
pub fn check_update_mass(seed: u64) -> Result<(), String> {
    let input = random_filter_input(&mut rng(seed));
    let out = update(&input.state, &input.measurements, &input.meas, &input.clutter).map_err(|e| e.to_string())?;
    let j = input.state.components.len();
    let w_in = input.state.total_weight();
    let p_d = input.meas.detection_prob;

    if out.components.len() != j * (1 + input.measurements.len()) {
        return Err(format!("seed {seed}: unexpected output size {}", out.components.len()));
    }
    let missed: f64 = out.components[..j].iter().map(|c| c.weight).sum();
    if (missed - (1.0 - p_d) * w_in).abs() > 1e-12 {
        return Err(format!("seed {seed}: missed mass {missed}, expected {}", (1.0 - p_d) * w_in));
    }
    for (m, z) in input.measurements.iter().enumerate() {
        let block = &out.components[j * (m + 1)..j * (m + 2)];
        let sum: f64 = block.iter().map(|c| c.weight).sum();
        if sum > 1.0 + 1e-12 {
            return Err(format!("seed {seed}: measurement {m} mass {sum} > 1"));
        }
        let clutter_zero = input.clutter.rate * clutter_density(z, &input.clutter) == 0.0;
        if clutter_zero && p_d > 0.0 && w_in > 0.0 && (sum - 1.0).abs() > 1e-12 {
            return Err(format!("seed {seed}: measurement {m} mass {sum}, expected 1 without clutter"));
        }
        if block.iter().any(|c| c.weight.is_nan() || c.weight < 0.0) {
            return Err(format!("seed {seed}: negative or NaN weight"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Smoother oracle

pub struct SmootherCase {
    pub motion: MotionModel,
    pub meas: MeasurementModel,
    pub birth: BirthComponent,
    pub measurements: Vec<DVector<f64>>,
}

pub fn smoother_case(seed: u64, scans: usize) -> SmootherCase {
    let mut r = rng(seed);
    let motion = constant_velocity_motion(0.5, 3.24, 1.0);
    let meas = position_measurement(16.0, 1.0);
    let birth = BirthComponent {
        weight: 1.0,
        mean: DVector::from_vec(vec![85.0, 0.0, 140.0, 0.0]),
        cov: DMatrix::from_diagonal_element(4, 4, 100.0),
    };
    let q_factor = motion.process_noise.clone().cholesky().unwrap().l();
    let b_factor = birth.cov.clone().cholesky().unwrap().l();
    let mut x = &birth.mean + b_factor * normal_vector(&mut r, 4, 1.0);
    let mut measurements = Vec::with_capacity(scans);
    for k in 0..scans {
        if k > 0 {
            x = &motion.transition_matrix * &x + &q_factor * normal_vector(&mut r, 4, 1.0);
        }
        measurements.push(&meas.observation_matrix * &x + normal_vector(&mut r, 2, 4.0));
    }
    SmootherCase {
        motion,
        meas,
        birth,
        measurements,
    }
}

/// Kalman filter followed by the fixed-interval RTS backward pass, written with
/// explicit inverses.
pub fn rts_smoother(case: &SmootherCase) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
    let f = &case.motion.transition_matrix;
    let q = &case.motion.process_noise;
    let h = &case.meas.observation_matrix;
    let r = &case.meas.noise_cov;
    let n = case.measurements.len();

    let mut pred_m = Vec::with_capacity(n);
    let mut pred_p = Vec::with_capacity(n);
    let mut filt_m: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut filt_p: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for (k, z) in case.measurements.iter().enumerate() {
        let (m, p) = if k == 0 {
            (case.birth.mean.clone(), case.birth.cov.clone())
        } else {
            (f * &filt_m[k - 1], f * &filt_p[k - 1] * f.transpose() + q)
        };
        let s = h * &p * h.transpose() + r;
        let gain = &p * h.transpose() * s.try_inverse().unwrap();
        filt_m.push(&m + &gain * (z - h * &m));
        filt_p.push(&p - &gain * h * &p);
        pred_m.push(m);
        pred_p.push(p);
    }

    let mut sm = filt_m.clone();
    let mut sp = filt_p.clone();
    for k in (0..n - 1).rev() {
        let c = &filt_p[k] * f.transpose() * pred_p[k + 1].clone().try_inverse().unwrap();
        sm[k] = &filt_m[k] + &c * (&sm[k + 1] - &pred_m[k + 1]);
        sp[k] = &filt_p[k] + &c * (&sp[k + 1] - &pred_p[k + 1]) * c.transpose();
    }
    (sm, sp)
}

/// Single-target filter with one birth at scan 1, p_D = 1 and no clutter.
pub fn single_target_filter(case: &SmootherCase, lscan: Lscan) -> TrajectoryComponent {
    let clutter = ClutterModel {
        rate: 0.0,
        region: Region::new(vec![-1e4, -1e4], vec![1e4, 1e4]),
    };
    let first_birth = BirthModel {
        components: vec![case.birth.clone()],
    };
    let no_birth = BirthModel::default();
    let mut state = TphdState::new(lscan);
    for (k, z) in case.measurements.iter().enumerate() {
        let birth = if k == 0 { &first_birth } else { &no_birth };
        let predicted = predict(&state, &case.motion, birth).unwrap().truncated();
        let updated = update(&predicted, std::slice::from_ref(z), &case.meas, &clutter).unwrap();
        state = prune_absorb(&updated, 1e-4, 0.1, 30).unwrap();
        assert_eq!(state.components.len(), 1);
    }
    state.components.pop().unwrap()
}

/// Largest deviation of the blocks `first..n` of `c` from the smoother output.
pub fn smoother_deviation(
    c: &TrajectoryComponent,
    smoothed: &(Vec<DVector<f64>>, Vec<DMatrix<f64>>),
    first: usize,
) -> f64 {
    let states = c.states();
    let (sm, sp) = smoothed;
    let mut worst: f64 = 0.0;
    for k in first..sm.len() {
        let (mean, cov) = c.marginal_at(c.start() + k).unwrap();
        worst = worst.max((&states[k] - &sm[k]).abs().max());
        worst = worst.max((&mean - &sm[k]).abs().max());
        worst = worst.max(max_abs_diff(&cov, &sp[k]));
    }
    worst
}

// ---------------------------------------------------------------------------
// L-neutrality

fn compare_marginals(
    label: &str,
    scan: usize,
    a: &[(f64, DVector<f64>, DMatrix<f64>)],
    b: &[(f64, DVector<f64>, DMatrix<f64>)],
    tol: f64,
) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{label}, scan {scan}: {} vs {} components", a.len(), b.len()));
    }
    for (i, ((wa, ma, pa), (wb, mb, pb))) in a.iter().zip(b).enumerate() {
        let ok = close(*wa, *wb, tol)
            && ma.iter().zip(mb.iter()).all(|(x, y)| close(*x, *y, tol))
            && pa.iter().zip(pb.iter()).all(|(x, y)| close(*x, *y, tol));
        if !ok {
            return Err(format!("{label}, scan {scan}, component {i}: weights {wa} vs {wb}"));
        }
    }
    Ok(())
}

fn tphd_marginals(state: &TphdState) -> Vec<(f64, DVector<f64>, DMatrix<f64>)> {
    state
        .components
        .iter()
        .map(|c| {
            let (m, p) = current_state_marginal(c);
            (c.weight, m, p)
        })
        .collect()
}

fn gm_marginals(terms: &[GaussianTerm]) -> Vec<(f64, DVector<f64>, DMatrix<f64>)> {
    terms.iter().map(|t| (t.weight, t.mean.clone(), t.cov.clone())).collect()
}

/// Run every L in `lscans` and the GMPHD reference on the same simulated run.
/// Per scan, the updated and pruned mixtures' weights and current-state
/// marginals must agree within `tol`, the estimate cardinality must match
/// across L, and marginalising the trajectory PHD must give the GMPHD mixture.
/// Returns the per-scan estimate cardinalities.
pub fn check_l_neutrality(config: &ScenarioConfig, seed: u64, lscans: &[Lscan], tol: f64) -> Result<Vec<usize>, String> {
    let sim = simulate(config, seed).map_err(|e| e.to_string())?;
    let mut states: Vec<TphdState> = lscans.iter().map(|&l| TphdState::new(l)).collect();
    let mut gm: Vec<GaussianTerm> = Vec::new();
    let mut cardinality = Vec::with_capacity(sim.scans.len());

    for scan in &sim.scans {
        let k = scan.scan;
        let reference = gmphd_reference_step(&gm, &scan.points, config).map_err(|e| e.to_string())?;
        let mut first_card = None;
        for (state, lscan) in states.iter_mut().zip(lscans) {
            let out = step_detailed(state, &scan.points, config).map_err(|e| e.to_string())?;
            let label = format!("seed {seed}, L={lscan}");
            compare_marginals(&label, k, &tphd_marginals(&out.updated), &gm_marginals(&reference.updated), tol)?;
            compare_marginals(&label, k, &tphd_marginals(&out.pruned), &gm_marginals(&reference.pruned), tol)?;

            let phd = GmTrajectoryPhd::new(out.pruned.components.clone());
            compare_marginals(
                &format!("{label} (marginalised)"),
                k,
                &gm_marginals(&marginal_target_phd(&phd, k)),
                &gm_marginals(&reference.pruned),
                tol,
            )?;

            let card = out.estimate.len();
            match first_card {
                None => first_card = Some(card),
                Some(c) if c != card => {
                    return Err(format!("{label}, scan {k}: cardinality {card} differs from {c}"));
                }
                Some(_) => {}
            }
            *state = out.pruned;
        }
        cardinality.push(first_card.unwrap_or(0));
        gm = reference.pruned;
    }
    Ok(cardinality)
}

// ---------------------------------------------------------------------------
// Assignment and OSPA

/// Minimum over all injective maps from the smaller side into the larger one.
pub fn brute_force_assignment(cost: &DMatrix<f64>) -> f64 {
    let c = if cost.nrows() <= cost.ncols() { cost.clone() } else { cost.transpose() };
    fn go(row: usize, c: &DMatrix<f64>, used: &mut [bool], acc: f64) -> f64 {
        if row == c.nrows() {
            return acc;
        }
        let mut best = f64::INFINITY;
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(go(row + 1, c, used, acc + c[(row, j)]));
                used[j] = false;
            }
        }
        best
    }
    go(0, &c, &mut vec![false; c.ncols()], 0.0)
}

/// Integer-valued costs so that both totals are exact.
pub fn check_assignment_instance(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let small = r.random_range(0..=5);
    let large = r.random_range(small..=7);
    let (n, m) = if r.random_bool(0.5) { (small, large) } else { (large, small) };
    let cost = DMatrix::from_fn(n, m, |_, _| r.random_range(0..50) as f64);
    let got = optimal_assignment(&cost);
    let expected = brute_force_assignment(&cost);
    if got.total_cost != expected {
        return Err(format!("seed {seed}: {n}x{m} total {} vs brute force {expected}", got.total_cost));
    }
    if got.pairs.len() != n.min(m) {
        return Err(format!("seed {seed}: {} pairs for a {n}x{m} matrix", got.pairs.len()));
    }
    let mut rows: Vec<usize> = got.pairs.iter().map(|p| p.0).collect();
    let mut cols: Vec<usize> = got.pairs.iter().map(|p| p.1).collect();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    if rows.len() != got.pairs.len() || cols.len() != got.pairs.len() {
        return Err(format!("seed {seed}: assignment is not injective"));
    }
    Ok(())
}

fn random_point_set(r: &mut impl Rng, max: usize) -> Vec<DVector<f64>> {
    (0..r.random_range(0..=max))
        .map(|_| DVector::from_fn(2, |_, _| r.random_range(0.0..20.0)))
        .collect()
}

/// Symmetry, identity, triangle inequality and the cutoff bound.
pub fn check_ospa_axioms(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let params = OspaParams {
        cutoff: r.random_range(1.0..15.0),
        order: [1.0, 2.0, 3.0][r.random_range(0..3)],
    };
    let x = random_point_set(&mut r, 4);
    let y = random_point_set(&mut r, 4);
    let z = random_point_set(&mut r, 4);
    let dxy = ospa(&x, &y, &params);
    let dyx = ospa(&y, &x, &params);
    let dyz = ospa(&y, &z, &params);
    let dxz = ospa(&x, &z, &params);
    if (dxy - dyx).abs() > 1e-10 {
        return Err(format!("seed {seed}: asymmetric {dxy} vs {dyx}"));
    }
    if ospa(&x, &x, &params) != 0.0 {
        return Err(format!("seed {seed}: d(X, X) != 0"));
    }
    if dxz > dxy + dyz + 1e-10 {
        return Err(format!("seed {seed}: triangle violated {dxz} > {dxy} + {dyz}"));
    }
    for d in [dxy, dyz, dxz] {
        if !(0.0..=params.cutoff + 1e-12).contains(&d) {
            return Err(format!("seed {seed}: distance {d} outside [0, {}]", params.cutoff));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Poisson checks

/// Pearson χ² goodness of fit of integer `draws` to Poisson(`lambda`), with the
/// upper tail pooled so that every cell expects at least 5. Returns the p-value.
pub fn poisson_chi_square_p_value(draws: &[u64], lambda: f64) -> f64 {
    let n = draws.len() as f64;
    let max_draw = draws.iter().copied().max().unwrap_or(0) as usize;
    let mut pmf = vec![(-lambda).exp()];
    while pmf.len() <= max_draw + 1 {
        let k = pmf.len() as f64;
        pmf.push(pmf.last().unwrap() * lambda / k);
    }
    // last cell takes the whole tail; pool downwards until it expects >= 5
    let head: f64 = pmf[..pmf.len() - 1].iter().sum();
    *pmf.last_mut().unwrap() = 1.0 - head;
    while pmf.len() > 1 && n * pmf[pmf.len() - 1] < 5.0 {
        let last = pmf.pop().unwrap();
        *pmf.last_mut().unwrap() += last;
    }
    let cells = pmf.len();
    let mut observed = vec![0.0; cells];
    for &d in draws {
        observed[(d as usize).min(cells - 1)] += 1.0;
    }
    let stat: f64 = observed.iter().zip(&pmf).map(|(o, p)| (o - n * p).powi(2) / (n * p)).sum();
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

pub fn uniform_chi_square_p_value(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

/// Two length-1 components and one length-2 component, all starting at scan 1.
pub fn example_mixture() -> GmTrajectoryPhd {
    let c = |mean: &[f64], cov: &[f64]| {
        let n = mean.len();
        TrajectoryComponent::new(1.0, 1, DVector::from_row_slice(mean), DMatrix::from_row_slice(n, n, cov), 1).unwrap()
    };
    GmTrajectoryPhd::new(vec![
        c(&[10.0], &[1.0]),
        c(&[1000.0], &[1.0]),
        c(&[10.0, 10.1], &[1.0, 1.0, 1.0, 2.0]),
    ])
}

pub fn sampled_cardinalities(phd: &GmTrajectoryPhd, draws: usize, seed: u64) -> Vec<u64> {
    let mut r = rng(seed);
    (0..draws).map(|_| sample_set(phd, &mut r).unwrap().len() as u64).collect()
}
