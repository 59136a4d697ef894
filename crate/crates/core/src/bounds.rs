//! Speed-limit times evaluated along a trajectory.
//!
//! All quantities are built from three time series sampled on the trajectory
//! grid: the survival angle, the non-classical uncertainty `Delta H_nc(t)` in
//! a basis containing the initial state, and the moduli `|c_i(t)|` of the
//! state's amplitudes in that basis. Time averages use composite Simpson
//! quadrature; derivatives of `|c_i(t)|` use fourth-order central stencils
//! (one-sided at the two ends of the grid).

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;

use crate::decomposition::{BasisProjection, SUPPORT_EPS};
use crate::error::{QslError, Result};
use crate::evolution::{
    evolve, integrate_uniform, monotonicity, survival_probability, time_average, HamiltonianSchedule, Monotonicity,
    Trajectory, MAX_STEPS, MONOTONE_TOL,
};
use crate::linalg::{
    angle_between, complete_basis, complete_basis_from, expectation, hilbert_angle, variance, HermitianOperator,
    OrthonormalBasis, PhysicalConstants, PureState,
};

/// Averages below this are treated as stationary evolution.
pub const DEGENERATE_AVERAGE: f64 = 1e-12;
/// Relative tolerance for declaring a bound saturated.
pub const SATURATION_TOL: f64 = 1e-6;
/// Maximum leakage out of the two-level subspace for the two-level exact time.
pub const LEAKAGE_TOL: f64 = 1e-8;
const BASIS_MATCH_TOL: f64 = 1e-10;
const SELF_INVERSE_TOL: f64 = 1e-10;

fn require_initial_first(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<()> {
    if basis.dim() != traj.dim() {
        return Err(QslError::DimensionMismatch { expected: traj.dim(), got: basis.dim() });
    }
    if !basis.starts_with(traj.initial(), BASIS_MATCH_TOL) {
        return Err(QslError::InvalidArgument("the first basis vector must be the initial state".into()));
    }
    Ok(())
}

/// `B|psi_t>` resolved in `basis` at every grid point, with `B = H(t)`.
pub fn generator_projections(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<Vec<BasisProjection>> {
    if basis.dim() != traj.dim() {
        return Err(QslError::DimensionMismatch { expected: traj.dim(), got: basis.dim() });
    }
    let fixed = traj.schedule().constant_hamiltonian();
    traj.states()
        .iter()
        .enumerate()
        .map(|(k, psi)| {
            let h_psi = match fixed {
                Some(h) => h.apply(psi)?,
                None => traj.hamiltonian_at(k).apply(psi)?,
            };
            Ok(BasisProjection::from_vectors(psi.amplitudes(), &h_psi, basis))
        })
        .collect()
}

/// `Delta H_nc(t_k)` on the grid.
pub fn nonclassical_uncertainty_series(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    Ok(generator_projections(traj, basis)?.iter().map(|p| p.nonclassical_variance().sqrt()).collect())
}

/// `Delta H(t_k)` on the grid.
pub fn uncertainty_series(traj: &Trajectory) -> Result<Vec<f64>> {
    let fixed = traj.schedule().constant_hamiltonian();
    traj.states()
        .iter()
        .enumerate()
        .map(|(k, psi)| match fixed {
            Some(h) => variance(h, psi).map(f64::sqrt),
            None => variance(&traj.hamiltonian_at(k), psi).map(f64::sqrt),
        })
        .collect()
}

/// `<<Delta H_nc>>_T`
pub fn avg_nonclassical_uncertainty(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<f64> {
    require_initial_first(traj, basis)?;
    time_average(&nonclassical_uncertainty_series(traj, basis)?, traj.span())
}

/// `Theta_0T`, the angle between the initial and final states.
pub fn survival_angle(traj: &Trajectory) -> f64 {
    angle_between(traj.initial().amplitudes(), traj.final_state().amplitudes())
}

/// Unit vector along the largest component of the trajectory orthogonal to
/// the initial state, if the state moves at all.
fn orthogonal_direction(traj: &Trajectory) -> Option<DVector<nalgebra::Complex<f64>>> {
    let psi0 = traj.initial().amplitudes();
    let mut best: Option<(f64, DVector<_>)> = None;
    for s in traj.states() {
        let v = s.amplitudes();
        let perp = v - psi0 * psi0.dotc(v);
        let n = perp.norm();
        if best.as_ref().is_none_or(|(b, _)| n > *b) {
            best = Some((n, perp));
        }
    }
    match best {
        Some((n, perp)) if n > 1e-12 => Some(perp.unscale(n)),
        _ => None,
    }
}

/// `max_t ||(I - P) psi_t||` with `P` projecting onto the span of the initial
/// state and the trajectory's dominant orthogonal direction.
pub fn effective_2d_leakage(traj: &Trajectory) -> f64 {
    let Some(perp) = orthogonal_direction(traj) else {
        return 0.0;
    };
    let psi0 = traj.initial().amplitudes();
    traj.states()
        .iter()
        .map(|s| {
            let v = s.amplitudes();
            (v - psi0 * psi0.dotc(v) - &perp * perp.dotc(v)).norm()
        })
        .fold(0.0, f64::max)
}

/// `{psi_0, psi_0_perp, ...}` where `psi_0_perp` spans the trajectory's motion
/// away from the initial state; the eigenbasis of `|psi_0><psi_0|` used by
/// the two-level exact time.
pub fn two_level_basis(traj: &Trajectory) -> OrthonormalBasis {
    match orthogonal_direction(traj) {
        Some(perp) => {
            let perp = PureState::from_vector(perp).expect("unit vector");
            complete_basis(&[traj.initial().clone(), perp])
        }
        None => complete_basis_from(traj.initial()),
    }
}

/// `hbar Theta_0T / <<Delta H_nc>>_T` for two-level (or effectively
/// two-level) evolution with decreasing survival probability.
pub fn exact_time_2d(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<f64> {
    require_initial_first(traj, basis)?;
    if traj.dim() > 2 {
        let leak = effective_2d_leakage(traj);
        if leak >= LEAKAGE_TOL {
            return Err(QslError::NotEffectively2D(leak));
        }
    }
    if monotonicity(&survival_probability(traj), MONOTONE_TOL) != Monotonicity::Decreasing {
        return Err(QslError::NonMonotonicSurvival);
    }
    let avg = avg_nonclassical_uncertainty(traj, basis)?;
    if avg < DEGENERATE_AVERAGE {
        return Err(QslError::Degenerate("time-averaged non-classical uncertainty vanishes"));
    }
    Ok(traj.constants().hbar * survival_angle(traj) / avg)
}

/// Fourth-order finite-difference derivative of uniformly sampled data.
pub fn derivative(series: &[f64], h: f64) -> Vec<f64> {
    let n = series.len();
    let f = series;
    match n {
        0 | 1 => vec![0.0; n],
        2 => vec![(f[1] - f[0]) / h; 2],
        3 | 4 => (0..n)
            .map(|k| {
                if k == 0 {
                    (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
                } else if k == n - 1 {
                    (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
                } else {
                    (f[k + 1] - f[k - 1]) / (2.0 * h)
                }
            })
            .collect(),
        _ => (0..n)
            .map(|k| {
                let d = if k == 0 {
                    -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]
                } else if k == 1 {
                    -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]
                } else if k == n - 2 {
                    3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]
                } else if k == n - 1 {
                    25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]
                } else {
                    f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]
                };
                d / (12.0 * h)
            })
            .collect(),
    }
}

/// `|<a_i|psi_t>|` for every basis index (outer) and grid point (inner).
pub fn amplitude_moduli(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<Vec<Vec<f64>>> {
    if basis.dim() != traj.dim() {
        return Err(QslError::DimensionMismatch { expected: traj.dim(), got: basis.dim() });
    }
    let coeffs: Vec<_> = traj.states().iter().map(|s| basis.coefficients(s.amplitudes())).collect();
    Ok((0..traj.dim()).map(|i| coeffs.iter().map(|c| c[i].norm()).collect()).collect())
}

/// `sqrt(sum_i (d|c_i|/dt)^2)` on the grid.
pub fn path_speed(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    let h = traj.step();
    let moduli = amplitude_moduli(traj, basis)?;
    let mut sq = vec![0.0; traj.times().len()];
    for series in &moduli {
        for (acc, d) in sq.iter_mut().zip(derivative(series, h)) {
            *acc += d * d;
        }
    }
    Ok(sq.into_iter().map(f64::sqrt).collect())
}

/// Length of the curve traced by the real vector `sum_i |c_i(t)| |a_i>`
/// (the Wootters length of the outcome distribution).
pub fn real_path_length(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<f64> {
    require_initial_first(traj, basis)?;
    integrate_uniform(&path_speed(traj, basis)?, traj.step())
}

/// `hbar l / <<Delta H_nc>>_T`, the exact evolution time in any dimension.
pub fn exact_time_ddim(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<f64> {
    let length = real_path_length(traj, basis)?;
    let avg = avg_nonclassical_uncertainty(traj, basis)?;
    if avg < DEGENERATE_AVERAGE {
        return Err(QslError::Degenerate("time-averaged non-classical uncertainty vanishes"));
    }
    Ok(traj.constants().hbar * length / avg)
}

/// Classical Fisher information `sum_i (dp_i/dt)^2 / p_i` of the basis
/// outcome distribution, over supported outcomes.
pub fn classical_fisher(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    let h = traj.step();
    let moduli = amplitude_moduli(traj, basis)?;
    let mut fisher = vec![0.0; traj.times().len()];
    for series in &moduli {
        let probs: Vec<f64> = series.iter().map(|m| m * m).collect();
        for (k, dp) in derivative(&probs, h).into_iter().enumerate() {
            if probs[k] > SUPPORT_EPS {
                fisher[k] += dp * dp / probs[k];
            }
        }
    }
    Ok(fisher)
}

const RATE_STEP: f64 = 1e-3;

fn state_at(schedule: &HamiltonianSchedule, psi0: &PureState, t: f64, consts: PhysicalConstants) -> Result<DVector<nalgebra::Complex<f64>>> {
    let v = schedule.propagate(psi0.amplitudes(), 0.0, t, consts.hbar)?;
    let n = v.norm();
    Ok(v.unscale(n))
}

fn richardson<F>(f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let coarse = f(RATE_STEP)?;
    let fine = f(0.5 * RATE_STEP)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `d/dt Theta(psi_0, psi_t)` by a Richardson-extrapolated central
/// difference. Requires `t >= 1e-3` and no schedule breakpoint within `1e-3`
/// of `t`.
pub fn angle_rate(schedule: &HamiltonianSchedule, psi0: &PureState, t: f64, consts: PhysicalConstants) -> Result<f64> {
    if t < RATE_STEP {
        return Err(QslError::InvalidArgument(format!("rate time {t} is too close to the start")));
    }
    let angle = |s: f64| -> Result<f64> { Ok(angle_between(psi0.amplitudes(), &state_at(schedule, psi0, s, consts)?)) };
    richardson(|d| Ok((angle(t + d)? - angle(t - d)?) / (2.0 * d)))
}

/// `lim Theta(psi_{t-d}, psi_{t+d}) / 2d`, the Fubini-Study speed of the
/// state itself, which equals `Delta H(t) / hbar`.
pub fn fubini_study_rate(schedule: &HamiltonianSchedule, psi0: &PureState, t: f64, consts: PhysicalConstants) -> Result<f64> {
    if t < RATE_STEP {
        return Err(QslError::InvalidArgument(format!("rate time {t} is too close to the start")));
    }
    richardson(|d| Ok(angle_between(&state_at(schedule, psi0, t - d, consts)?, &state_at(schedule, psi0, t + d, consts)?) / (2.0 * d)))
}

/// Improved and standard Mandelstam-Tamm times for a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovedBound {
    pub t_imt: f64,
    pub t_mt: f64,
    pub theta: f64,
    pub avg_dhnc: f64,
    pub avg_dh: f64,
}

pub fn improved_mt_bound(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<ImprovedBound> {
    let avg_dhnc = avg_nonclassical_uncertainty(traj, basis)?;
    let avg_dh = time_average(&uncertainty_series(traj)?, traj.span())?;
    if avg_dhnc < DEGENERATE_AVERAGE || avg_dh < DEGENERATE_AVERAGE {
        return Err(QslError::Degenerate("stationary evolution has no speed-limit time"));
    }
    let hbar = traj.constants().hbar;
    let theta = survival_angle(traj);
    Ok(ImprovedBound { t_imt: hbar * theta / avg_dhnc, t_mt: hbar * theta / avg_dh, theta, avg_dhnc, avg_dh })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MlBound {
    Defined(f64),
    /// The mean energy above the ground state vanishes.
    Undefined,
}

/// `hbar Theta_0T / <H - E_min>`, with the energy measured from the ground
/// state so that the mean is non-negative.
pub fn ml_bound(traj: &Trajectory) -> Result<MlBound> {
    let (Some(h), Some(spec)) = (traj.schedule().constant_hamiltonian(), traj.schedule().constant_spectral()) else {
        return Err(QslError::TimeDependent);
    };
    let shifted = expectation(h, traj.initial())? - spec.min_eigenvalue();
    if shifted < DEGENERATE_AVERAGE {
        return Ok(MlBound::Undefined);
    }
    Ok(MlBound::Defined(traj.constants().hbar * survival_angle(traj) / shifted))
}

fn require_self_inverse(h: &HermitianOperator) -> Result<()> {
    let dev = h.self_inverse_deviation();
    if dev < SELF_INVERSE_TOL {
        Ok(())
    } else {
        Err(QslError::NotSelfInverse(dev))
    }
}

/// Closed-form `Delta H_nc(t)` for a self-inverse `H` (`hbar = 1`):
/// `sqrt(1 - g^2) |cos t| / sqrt(1 - (1 - g^2) sin^2 t)` with
/// `g = <psi_0|H|psi_0>`.
pub fn self_inverse_closed_form(h: &HermitianOperator, psi0: &PureState, t: f64) -> Result<f64> {
    require_self_inverse(h)?;
    let g = expectation(h, psi0)?;
    let s = (1.0 - g * g).max(0.0);
    if s == 0.0 {
        return Ok(0.0);
    }
    let denom = (1.0 - s * t.sin().powi(2)).max(0.0).sqrt();
    if denom == 0.0 {
        // g = 0 at t = pi/2: the ratio tends to 1
        return Ok(1.0);
    }
    Ok(s.sqrt() * t.cos().abs() / denom)
}

/// Closed-form `<<Delta H_nc>>_T = arcsin(sqrt(1 - g^2) sin T) / T` for a
/// self-inverse `H` and `0 < T <= pi/2`.
pub fn self_inverse_average(h: &HermitianOperator, psi0: &PureState, span: f64) -> Result<f64> {
    require_self_inverse(h)?;
    let g = expectation(h, psi0)?;
    let s = (1.0 - g * g).max(0.0);
    Ok((s.sqrt() * span.sin()).clamp(-1.0, 1.0).asin() / span)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    pub saturated: bool,
    /// `|T_IMT - T| / T`
    pub gap: f64,
    pub t_imt: f64,
    pub avg_numeric: f64,
    pub avg_closed_form: f64,
    /// Largest grid deviation between the closed-form and numerical `Delta H_nc(t)`.
    pub max_pointwise_deviation: f64,
}

/// Grid size used by the fixed-resolution helpers.
pub fn default_steps(width: f64, span: f64, hbar: f64) -> usize {
    let n = (span * width / (hbar * 0.01)).ceil() as usize;
    let n = n.clamp(1024, MAX_STEPS);
    n + n % 2
}

/// Checks that a self-inverse Hamiltonian saturates the improved bound over
/// `[0, T]` with `T <= pi/2` (`hbar = 1`).
pub fn saturation_check(h: &HermitianOperator, psi0: &PureState, span: f64) -> Result<Saturation> {
    require_self_inverse(h)?;
    if !(span > 0.0 && span <= FRAC_PI_2 + 1e-12) {
        return Err(QslError::InvalidArgument(format!("span {span} outside the monotone window (0, pi/2]")));
    }
    let consts = PhysicalConstants::default();
    let schedule = HamiltonianSchedule::constant(h.clone())?;
    let traj = evolve(&schedule, psi0, span, default_steps(2.0, span, 1.0), consts)?;
    let basis = complete_basis_from(psi0);
    let series = nonclassical_uncertainty_series(&traj, &basis)?;
    let mut max_dev: f64 = 0.0;
    for (t, v) in traj.times().iter().zip(&series) {
        max_dev = max_dev.max((self_inverse_closed_form(h, psi0, *t)? - v).abs());
    }
    let avg_numeric = time_average(&series, span)?;
    let avg_closed_form = self_inverse_average(h, psi0, span)?;
    if avg_numeric < DEGENERATE_AVERAGE {
        return Err(QslError::Degenerate("initial state is an eigenstate"));
    }
    let t_imt = survival_angle(&traj) / avg_numeric;
    let gap = (t_imt - span).abs() / span;
    Ok(Saturation { saturated: gap < SATURATION_TOL, gap, t_imt, avg_numeric, avg_closed_form, max_pointwise_deviation: max_dev })
}

fn constant_trajectory(h: &HermitianOperator, psi0: &PureState, span: f64, consts: PhysicalConstants) -> Result<Trajectory> {
    let schedule = HamiltonianSchedule::constant(h.clone())?;
    let width = schedule.spectral_width(span)?;
    evolve(&schedule, psi0, span, default_steps(width, span, consts.hbar), consts)
}

/// Lower bounds on an encoded parameter `theta` from the state it produces:
/// `(hbar Theta / <<Delta H_nc>>_theta, hbar Theta / Delta H)`.
pub fn parameter_lower_bound(h: &HermitianOperator, psi0: &PureState, theta: f64, consts: PhysicalConstants) -> Result<(f64, f64)> {
    if !(theta > 0.0) {
        return Err(QslError::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    let traj = constant_trajectory(h, psi0, theta, consts)?;
    let dh = variance(h, psi0)?.sqrt();
    let avg = avg_nonclassical_uncertainty(&traj, &complete_basis_from(psi0))?;
    if dh < DEGENERATE_AVERAGE || avg < DEGENERATE_AVERAGE {
        return Err(QslError::Degenerate("initial state is stationary"));
    }
    let angle = survival_angle(&traj);
    Ok((consts.hbar * angle / avg, consts.hbar * angle / dh))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityBound {
    /// `arccos |<psi|U_theta|psi>|`
    pub complexity: f64,
    /// `theta <<Delta H_nc>>_theta / hbar`
    pub upper_nc: f64,
    /// `theta Delta H / hbar`
    pub upper_var: f64,
}

pub fn complexity_bound(h: &HermitianOperator, psi: &PureState, theta: f64, consts: PhysicalConstants) -> Result<ComplexityBound> {
    if !(theta >= 0.0) {
        return Err(QslError::InvalidArgument(format!("theta must be non-negative, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(ComplexityBound { complexity: 0.0, upper_nc: 0.0, upper_var: 0.0 });
    }
    let traj = constant_trajectory(h, psi, theta, consts)?;
    let avg = avg_nonclassical_uncertainty(&traj, &complete_basis_from(psi))?;
    let dh = variance(h, psi)?.sqrt();
    Ok(ComplexityBound {
        complexity: hilbert_angle(psi, traj.final_state())?,
        upper_nc: theta * avg / consts.hbar,
        upper_var: theta * dh / consts.hbar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Fixed(usize),
    /// Double the grid from `initial` until the report changes by less than
    /// `rel_tol` (relative), up to `MAX_STEPS`.
    Auto { initial: usize, rel_tol: f64 },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Auto { initial: 512, rel_tol: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationFlags {
    pub imt: bool,
    pub mt: bool,
    pub exact_ddim: bool,
    pub exact_2d: Option<bool>,
}

/// Every speed-limit quantity for one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub t_actual: f64,
    pub t_exact_2d: Option<f64>,
    /// Why the two-level exact time is absent, if it is.
    pub t_exact_2d_note: Option<String>,
    pub t_exact_ddim: Option<f64>,
    pub t_imt: Option<f64>,
    pub t_mt: Option<f64>,
    pub t_ml: Option<MlBound>,
    pub theta: f64,
    pub wootters_length: f64,
    pub avg_dhnc: f64,
    pub avg_dh: f64,
    pub avg_dhcl: f64,
    pub monotonicity: Monotonicity,
    pub steps: usize,
    pub max_norm_drift: f64,
    pub saturation: SaturationFlags,
}

impl BoundReport {
    /// `T_actual >= T_IMT >= T_MT` up to `1e-6 T_actual`.
    pub fn chain_holds(&self) -> bool {
        let tol = SATURATION_TOL * self.t_actual;
        match (self.t_imt, self.t_mt) {
            (Some(imt), Some(mt)) => self.t_actual >= imt - tol && imt >= mt - tol,
            _ => true,
        }
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn report_at(schedule: &HamiltonianSchedule, psi0: &PureState, span: f64, basis: &OrthonormalBasis, steps: usize, consts: PhysicalConstants) -> Result<BoundReport> {
    let traj = evolve(schedule, psi0, span, steps, consts)?;
    report_for(&traj, basis)
}

/// Full report for an existing trajectory.
pub fn report_for(traj: &Trajectory, basis: &OrthonormalBasis) -> Result<BoundReport> {
    require_initial_first(traj, basis)?;
    let hbar = traj.constants().hbar;
    let span = traj.span();
    let projections = generator_projections(traj, basis)?;
    let dhnc: Vec<f64> = projections.iter().map(|p| p.nonclassical_variance().sqrt()).collect();
    let dhcl: Vec<f64> = projections.iter().map(|p| p.classical_variance().sqrt()).collect();
    let dh: Vec<f64> = projections.iter().map(|p| (p.second_moment() - p.mean().powi(2)).max(0.0).sqrt()).collect();
    let avg_dhnc = time_average(&dhnc, span)?;
    let avg_dh = time_average(&dh, span)?;
    let avg_dhcl = time_average(&dhcl, span)?;
    let theta = survival_angle(traj);
    let wootters_length = real_path_length(traj, basis)?;
    let mono = monotonicity(&survival_probability(traj), MONOTONE_TOL);

    let moving = avg_dhnc >= DEGENERATE_AVERAGE;
    let t_imt = moving.then(|| hbar * theta / avg_dhnc);
    let t_mt = (avg_dh >= DEGENERATE_AVERAGE).then(|| hbar * theta / avg_dh);
    let t_exact_ddim = moving.then(|| hbar * wootters_length / avg_dhnc);

    let (t_exact_2d, t_exact_2d_note) = if traj.dim() == 2 && basis.starts_with(traj.initial(), BASIS_MATCH_TOL) {
        match exact_time_2d(traj, basis) {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        match exact_time_2d(traj, &two_level_basis(traj)) {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    let t_ml = match ml_bound(traj) {
        Ok(b) => Some(b),
        Err(QslError::TimeDependent) => None,
        Err(e) => return Err(e),
    };

    let saturated = |t: Option<f64>| t.is_some_and(|t| relative_change(t, span) < SATURATION_TOL);
    Ok(BoundReport {
        t_actual: span,
        t_exact_2d,
        t_exact_2d_note,
        t_exact_ddim,
        t_imt,
        t_mt,
        t_ml,
        theta,
        wootters_length,
        avg_dhnc,
        avg_dh,
        avg_dhcl,
        monotonicity: mono,
        steps: traj.step_count(),
        max_norm_drift: traj.max_norm_drift(),
        saturation: SaturationFlags {
            imt: saturated(t_imt),
            mt: saturated(t_mt),
            exact_ddim: t_exact_ddim.is_some_and(|t| relative_change(t, span) < 1e-5),
            exact_2d: t_exact_2d.map(|t| relative_change(t, span) < SATURATION_TOL),
        },
    })
}

/// Evolves and reports, refining the grid according to `policy`.
pub fn bound_report(
    schedule: &HamiltonianSchedule,
    psi0: &PureState,
    span: f64,
    basis: Option<&OrthonormalBasis>,
    policy: StepPolicy,
    consts: PhysicalConstants,
) -> Result<BoundReport> {
    let owned;
    let basis = match basis {
        Some(b) => b,
        None => {
            owned = complete_basis_from(psi0);
            &owned
        }
    };
    match policy {
        StepPolicy::Fixed(steps) => report_at(schedule, psi0, span, basis, steps, consts),
        StepPolicy::Auto { initial, rel_tol } => {
            let mut steps = initial.max(8);
            steps += steps % 2;
            let mut previous: Option<BoundReport> = None;
            let mut change = f64::INFINITY;
            while steps <= MAX_STEPS {
                match report_at(schedule, psi0, span, basis, steps, consts) {
                    Ok(report) => {
                        if let Some(prev) = &previous {
                            change = [
                                relative_change(prev.avg_dhnc, report.avg_dhnc),
                                relative_change(prev.avg_dh, report.avg_dh),
                                relative_change(prev.wootters_length, report.wootters_length),
                                relative_change(prev.theta, report.theta),
                            ]
                            .into_iter()
                            .fold(0.0, f64::max);
                            if change < rel_tol {
                                return Ok(report);
                            }
                        }
                        previous = Some(report);
                    }
                    Err(QslError::StepResolution { .. }) => {}
                    Err(e) => return Err(e),
                }
                steps *= 2;
            }
            Err(QslError::NoConvergence { steps: steps / 2, change })
        }
    }
}
