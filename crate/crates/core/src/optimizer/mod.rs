//! Search for the constant Hamiltonian that drives one state into another
//! fastest under a fixed energy scale.
//!
//! The search runs Nelder-Mead over generalized Gell-Mann coefficients. Each
//! proposal is rescaled to the energy cap, and scored by
//!
//! `f(H) = min_{0 <= t <= T_max} [ t + 2 hbar theta(t) / cap ]`,
//!
//! where `theta(t)` is the angle between the evolved state and the target.
//! Since the state cannot move faster than `cap / hbar` in angle,
//! `f(H) >= hbar Theta / cap` with equality exactly when `H` reaches the
//! target at the Mandelstam-Tamm time. Unlike the raw first-passage time,
//! `f` is finite and continuous for Hamiltonians that miss the target, which
//! gives the simplex a slope to follow. The reported time is the true first
//! passage of the best Hamiltonian.

mod gell_mann;
mod nelder_mead;

pub use gell_mann::{gell_mann_basis, GeneratorBasis};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadOutcome};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bounds::{bound_report, StepPolicy, DEGENERATE_AVERAGE};
use crate::decomposition::classical_part;
use crate::error::{QslError, Result};
use crate::evolution::{first_passage_time, golden_minimize, HamiltonianSchedule};
use crate::linalg::{angle_between, complete_basis_from, expectation, hilbert_angle, variance, HermitianOperator, PhysicalConstants, PureState, Spectral, C64};
use crate::random::rng_for;

const SALT_OPTIMIZER: u64 = 0x27d4_eb2f_1656_67c5;
/// Relative Frobenius residual below which `H` is taken to have the optimal form.
pub const FORM_MATCH_TOL: f64 = 1e-6;
const MIN_ANGLE: f64 = 1e-8;
/// Passage tolerance used when diagnosing a given Hamiltonian.
const DIAGNOSTIC_ANGLE_TOL: f64 = 1e-9;

/// How a proposal is rescaled before it is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `Delta H` in the initial state equals the cap.
    #[default]
    InitialVariance,
    /// Half the spectral width, `(E_max - E_min) / 2`, equals the cap.
    SpectralNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationConfig {
    pub restarts: usize,
    /// Random coefficient vectors sampled at the start of each restart.
    pub population: usize,
    pub seed: u64,
    /// Angle below which the target counts as reached.
    pub angle_tol: f64,
    /// Passage horizon in units of the Mandelstam-Tamm time.
    pub horizon_factor: f64,
    pub simplex_tol: f64,
    pub improvement_tol: f64,
    pub max_evaluations: usize,
    pub normalization: Normalization,
    pub constants: PhysicalConstants,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            population: 16,
            seed: 0,
            angle_tol: 1e-7,
            horizon_factor: 4.0,
            simplex_tol: 1e-8,
            improvement_tol: 1e-9,
            max_evaluations: 20_000,
            normalization: Normalization::InitialVariance,
            constants: PhysicalConstants::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Frobenius norm of the classical part of `H_opt` in the basis completed from the initial state.
    pub classical_norm: f64,
    /// `T_opt - hbar Theta / Delta H`
    pub mt_gap: f64,
    pub converged: bool,
}

/// Passage statistics over the restart winners that were checked exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateStats {
    pub evaluations: usize,
    pub passages_checked: usize,
    pub passages_reached: usize,
    /// Shortest passage time among candidates that reached the target.
    pub min_passage: f64,
    /// Smallest objective value seen; never below the floor for a correct evolution.
    pub min_objective: f64,
    /// `hbar Theta / cap`
    pub mt_floor: f64,
}

impl CandidateStats {
    /// How far the best candidate beats the floor (positive means a violation).
    pub fn floor_violation(&self) -> f64 {
        (self.mt_floor - self.min_passage).max(self.mt_floor - self.min_objective).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub h_opt: HermitianOperator,
    pub t_opt: f64,
    pub iterations: usize,
    pub diagnostics: Diagnostics,
    pub candidates: CandidateStats,
}

/// `hbar omega (|psi0><psi_perp| + h.c.)` with `Delta H = delta_h` in `psi0`,
/// whose evolution follows the geodesic to `target`.
pub fn optimal_hamiltonian(psi0: &PureState, target: &PureState, delta_h: f64) -> Result<HermitianOperator> {
    if psi0.dim() != target.dim() {
        return Err(QslError::DimensionMismatch { expected: psi0.dim(), got: target.dim() });
    }
    let overlap = psi0.inner(target);
    let phase = if overlap.norm() > 1e-12 { overlap.conj() / overlap.norm() } else { C64::new(1.0, 0.0) };
    let aligned = target.amplitudes() * phase;
    let rest = &aligned - psi0.amplitudes().scale(overlap.norm());
    let s = rest.norm();
    if s < MIN_ANGLE {
        return Err(QslError::InvalidArgument("target equals the initial state up to phase".into()));
    }
    // exp(-i omega t (|0><p| + |p><0|)) |0> = cos(omega t)|0> - i sin(omega t)|p>
    let perp = PureState::normalized((rest * C64::new(0.0, 1.0)).iter().copied().collect())?;
    HermitianOperator::symmetric_coupling(psi0, &perp, delta_h)
}

/// Angle to the target along a constant-Hamiltonian trajectory, via the
/// eigenbasis.
struct AngleProbe {
    spectral: Spectral,
    start: DVector<C64>,
    goal: DVector<C64>,
    hbar: f64,
}

impl AngleProbe {
    fn new(h: &HermitianOperator, psi0: &PureState, target: &PureState, hbar: f64) -> Result<Self> {
        let spectral = h.spectral()?;
        let start = spectral.eigenvectors.ad_mul(psi0.amplitudes());
        let goal = spectral.eigenvectors.ad_mul(target.amplitudes());
        Ok(Self { spectral, start, goal, hbar })
    }

    fn angle(&self, t: f64) -> f64 {
        let v = DVector::from_iterator(
            self.start.len(),
            self.start.iter().zip(&self.spectral.eigenvalues).map(|(c, &e)| c * C64::from_polar(1.0, -e * t / self.hbar)),
        );
        angle_between(&self.goal, &v)
    }

    fn width(&self) -> f64 {
        self.spectral.max_eigenvalue() - self.spectral.min_eigenvalue()
    }
}

struct Problem<'a> {
    basis: GeneratorBasis,
    psi0: &'a PureState,
    target: &'a PureState,
    cap: f64,
    theta: f64,
    t_max: f64,
    config: &'a OptimizationConfig,
}

impl Problem<'_> {
    fn hbar(&self) -> f64 {
        self.config.constants.hbar
    }

    /// The proposal rescaled to the cap, or `None` if it cannot be.
    fn hamiltonian(&self, x: &[f64]) -> Option<HermitianOperator> {
        let h = self.basis.combine(x);
        let scale = match self.config.normalization {
            Normalization::InitialVariance => variance(&h, self.psi0).ok()?.sqrt(),
            Normalization::SpectralNorm => {
                let s = h.spectral().ok()?;
                0.5 * (s.max_eigenvalue() - s.min_eigenvalue())
            }
        };
        (scale > DEGENERATE_AVERAGE && scale.is_finite()).then(|| h.scale(self.cap / scale))
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let hbar = self.hbar();
        let stationary = 2.0 * hbar * self.theta / self.cap;
        let Some(h) = self.hamiltonian(x) else {
            return stationary;
        };
        let Ok(probe) = AngleProbe::new(&h, self.psi0, self.target, hbar) else {
            return stationary;
        };
        let score = |t: f64| t + 2.0 * hbar * probe.angle(t) / self.cap;
        let n = ((self.t_max * probe.width() / (hbar * 0.05)).ceil() as usize).clamp(200, 1 << 16);
        let step = self.t_max / n as f64;
        let (mut best_k, mut best) = (0, score(0.0));
        for k in 1..=n {
            let v = score(k as f64 * step);
            if v < best {
                best = v;
                best_k = k;
            }
        }
        let lo = best_k.saturating_sub(1) as f64 * step;
        let hi = ((best_k + 1) as f64 * step).min(self.t_max);
        match golden_minimize(lo, hi, |t| Ok(score(t))) {
            Ok((_, v)) => v.min(best),
            Err(_) => best,
        }
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Minimizes the passage time from `psi0` to `target` over constant
/// Hamiltonians with energy scale `variance_cap`.
pub fn minimize_evolution_time(psi0: &PureState, target: &PureState, variance_cap: f64, config: &OptimizationConfig) -> Result<OptimizationResult> {
    if psi0.dim() != target.dim() {
        return Err(QslError::DimensionMismatch { expected: psi0.dim(), got: target.dim() });
    }
    if !(variance_cap > 0.0 && variance_cap.is_finite()) {
        return Err(QslError::InvalidArgument(format!("variance cap must be positive, got {variance_cap}")));
    }
    if config.restarts == 0 {
        return Err(QslError::InvalidArgument("at least one restart is required".into()));
    }
    let theta = hilbert_angle(psi0, target)?;
    if theta <= MIN_ANGLE {
        return Err(QslError::InvalidArgument("target equals the initial state up to phase".into()));
    }
    let hbar = config.constants.hbar;
    let mt_floor = hbar * theta / variance_cap;
    let problem = Problem {
        basis: gell_mann_basis(psi0.dim())?,
        psi0,
        target,
        cap: variance_cap,
        theta,
        t_max: config.horizon_factor * mt_floor,
        config,
    };
    let n = problem.basis.len();
    let mut rng = rng_for(config.seed, SALT_OPTIMIZER);
    let nm_options = NelderMeadOptions { initial_step: 0.3, x_tol: config.simplex_tol, f_tol: 1e-15, max_evaluations: config.max_evaluations };

    let mut stats = CandidateStats {
        evaluations: 0,
        passages_checked: 0,
        passages_reached: 0,
        min_passage: f64::INFINITY,
        min_objective: f64::INFINITY,
        mt_floor,
    };
    let mut best_x: Option<(Vec<f64>, f64)> = None;
    let mut best_reached: Option<(HermitianOperator, f64)> = None;
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..config.restarts {
        let mut start = best_x.as_ref().map(|(x, f)| (x.clone(), *f));
        for _ in 0..config.population {
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let f = problem.objective(&x);
            stats.evaluations += 1;
            stats.min_objective = stats.min_objective.min(f);
            if start.as_ref().is_none_or(|(_, fs)| f < *fs) {
                start = Some((x, f));
            }
        }
        let Some((mut x0, _)) = start else {
            // an empty population on the first restart starts from the first generator
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            best_x = Some((x, f64::INFINITY));
            continue;
        };
        normalize(&mut x0);

        let out = nelder_mead(
            |x| {
                let f = problem.objective(x);
                stats.min_objective = stats.min_objective.min(f);
                f
            },
            &x0,
            nm_options,
        );
        stats.evaluations += out.evaluations;
        iterations += out.iterations;

        if let Some(h) = problem.hamiltonian(&out.x) {
            stats.passages_checked += 1;
            let schedule = HamiltonianSchedule::constant(h.clone())?;
            match first_passage_time(&schedule, psi0, target, config.angle_tol, problem.t_max, config.constants) {
                Ok(t) => {
                    stats.passages_reached += 1;
                    stats.min_passage = stats.min_passage.min(t);
                    if best_reached.as_ref().is_none_or(|(_, tb)| t < *tb) {
                        best_reached = Some((h, t));
                    }
                }
                Err(QslError::NotReached { .. }) => {}
                Err(e) => return Err(e),
            }
        }

        let improvement = best_x.as_ref().map_or(f64::INFINITY, |(_, f)| f - out.f);
        if out.diameter < config.simplex_tol || improvement.abs() < config.improvement_tol {
            converged = true;
        }
        if improvement > 0.0 {
            let mut x = out.x;
            normalize(&mut x);
            best_x = Some((x, out.f));
        }
    }

    let Some((h_opt, t_opt)) = best_reached else {
        return Err(QslError::NoImprovement);
    };
    let basis = complete_basis_from(psi0);
    let classical_norm = classical_part(&h_opt, psi0, &basis)?.classical.frobenius_norm();
    let delta_h = variance(&h_opt, psi0)?.sqrt();
    Ok(OptimizationResult {
        t_opt,
        iterations,
        diagnostics: Diagnostics { classical_norm, mt_gap: t_opt - hbar * theta / delta_h, converged },
        candidates: stats,
        h_opt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityDiagnostics {
    pub classical_norm: f64,
    /// `Delta H` in the initial state.
    pub delta_h: f64,
    /// Best-fit `omega` of the optimal form.
    pub omega: f64,
    /// Relative Frobenius residual of the best optimal-form fit.
    pub form_residual: f64,
    pub form_match: bool,
    /// First passage to the target, when one is given and reached.
    pub passage_time: Option<f64>,
    /// `passage_time - hbar Theta / Delta H`
    pub mt_gap: Option<f64>,
    /// `|T_IMT - T| / T` over `[0, passage_time]`, or without a target over
    /// `[0, pi hbar / (4 |H|)]` with `|H|` the spectral radius.
    pub imt_gap: Option<f64>,
}

/// Classical part, Mandelstam-Tamm gap and optimal-form fit of `h` at `psi0`.
pub fn optimality_diagnostics(h: &HermitianOperator, psi0: &PureState, target: Option<&PureState>, consts: PhysicalConstants) -> Result<OptimalityDiagnostics> {
    if h.dim() != psi0.dim() {
        return Err(QslError::DimensionMismatch { expected: psi0.dim(), got: h.dim() });
    }
    let hbar = consts.hbar;
    let basis = complete_basis_from(psi0);
    let classical_norm = classical_part(h, psi0, &basis)?.classical.frobenius_norm();
    let delta_h = variance(h, psi0)?.sqrt();

    let h_psi = h.apply(psi0)?;
    let mean = expectation(h, psi0)?;
    let perp_part = &h_psi - psi0.amplitudes() * C64::new(mean, 0.0);
    let coupling = perp_part.norm();
    let h_norm = h.frobenius_norm();
    let (omega, form_residual) = if coupling > DEGENERATE_AVERAGE {
        let perp = PureState::normalized(perp_part.iter().copied().collect())?;
        let fit = HermitianOperator::symmetric_coupling(psi0, &perp, coupling)?;
        (coupling / hbar, h.sub(&fit)?.frobenius_norm() / h_norm)
    } else {
        (0.0, 1.0)
    };
    let form_match = form_residual < FORM_MATCH_TOL;

    let moving = delta_h > DEGENERATE_AVERAGE;
    let schedule = HamiltonianSchedule::constant(h.clone())?;
    let (passage_time, mt_gap) = match target {
        Some(target) if moving => {
            let theta = hilbert_angle(psi0, target)?;
            let t_max = 4.0 * hbar * theta.max(MIN_ANGLE) / delta_h;
            match first_passage_time(&schedule, psi0, target, DIAGNOSTIC_ANGLE_TOL, t_max, consts) {
                Ok(t) => (Some(t), Some(t - hbar * theta / delta_h)),
                Err(QslError::NotReached { .. }) => (None, None),
                Err(e) => return Err(e),
            }
        }
        _ => (None, None),
    };
    let imt_gap = if moving {
        let spec = h.spectral()?;
        let radius = spec.max_eigenvalue().abs().max(spec.min_eigenvalue().abs());
        let span = passage_time.filter(|t| *t > 0.0).unwrap_or(0.25 * std::f64::consts::PI * hbar / radius);
        let report = bound_report(&schedule, psi0, span, Some(&basis), StepPolicy::Fixed(crate::bounds::default_steps(2.0 * delta_h.max(h_norm), span, hbar)), consts)?;
        report.t_imt.map(|t| (t - span).abs() / span)
    } else {
        None
    };

    Ok(OptimalityDiagnostics { classical_norm, delta_h, omega, form_residual, form_match, passage_time, mt_gap, imt_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use crate::random::{random_self_inverse, random_state};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    const HB: PhysicalConstants = PhysicalConstants { hbar: 1.0 };

    fn zero() -> PureState {
        PureState::basis(2, 0).unwrap()
    }

    fn one() -> PureState {
        PureState::basis(2, 1).unwrap()
    }

    fn orthogonal_pair(d: usize, seed: u64) -> (PureState, PureState) {
        let a = random_state(d, seed).unwrap();
        let b = random_state(d, seed + 1000).unwrap();
        let rest = b.amplitudes() - a.amplitudes() * a.inner(&b);
        (a, PureState::normalized(rest.iter().copied().collect()).unwrap())
    }

    #[test]
    fn constructed_optimum_reaches_target_at_mt_time() {
        for (d, seed) in [(2, 1), (3, 2), (4, 3), (5, 4)] {
            let psi0 = random_state(d, seed).unwrap();
            let target = random_state(d, seed + 7).unwrap();
            let theta = hilbert_angle(&psi0, &target).unwrap();
            let h = optimal_hamiltonian(&psi0, &target, 1.3).unwrap();
            assert!((variance(&h, &psi0).unwrap().sqrt() - 1.3).abs() < 1e-12);
            let s = HamiltonianSchedule::constant(h).unwrap();
            let t = first_passage_time(&s, &psi0, &target, 1e-7, 4.0 * theta / 1.3, HB).unwrap();
            assert!((t - theta / 1.3).abs() / (theta / 1.3) < 1e-6, "d={d}: {t}");
        }
    }

    #[test]
    fn qubit_orthogonal_target() {
        let r = minimize_evolution_time(&zero(), &one(), 1.0, &OptimizationConfig::default()).unwrap();
        assert!((r.t_opt - FRAC_PI_2).abs() / FRAC_PI_2 < 0.02, "{}", r.t_opt);
        assert!(r.diagnostics.classical_norm < 1e-3);
        assert!(r.candidates.floor_violation() <= 1e-6);
        assert!(r.diagnostics.mt_gap >= -1e-6);
    }

    #[test]
    fn qubit_quarter_turn_target() {
        let target = PureState::normalized(vec![C64::new(FRAC_PI_4.cos(), 0.0), C64::new(0.0, FRAC_PI_4.sin())]).unwrap();
        let r = minimize_evolution_time(&zero(), &target, 1.0, &OptimizationConfig { seed: 3, ..Default::default() }).unwrap();
        assert!((r.t_opt - FRAC_PI_4).abs() / FRAC_PI_4 < 0.02, "{}", r.t_opt);
    }

    #[test]
    fn qutrit_orthogonal_pair_within_five_percent() {
        let (psi0, target) = orthogonal_pair(3, 11);
        let oracle = optimal_hamiltonian(&psi0, &target, 1.0).unwrap();
        let s = HamiltonianSchedule::constant(oracle).unwrap();
        let t_oracle = first_passage_time(&s, &psi0, &target, 1e-6, 10.0, HB).unwrap();
        let r = minimize_evolution_time(&psi0, &target, 1.0, &OptimizationConfig::default()).unwrap();
        assert!((r.t_opt - t_oracle).abs() / t_oracle < 0.05, "{} vs {}", r.t_opt, t_oracle);
        assert!(r.t_opt >= FRAC_PI_2 - 1e-6);
    }

    #[test]
    fn rejects_identical_states_and_bad_caps() {
        assert!(matches!(minimize_evolution_time(&zero(), &zero().with_phase(0.4), 1.0, &OptimizationConfig::default()), Err(QslError::InvalidArgument(_))));
        assert!(matches!(minimize_evolution_time(&zero(), &one(), 0.0, &OptimizationConfig::default()), Err(QslError::InvalidArgument(_))));
    }

    #[test]
    fn spectral_normalization_runs() {
        let cfg = OptimizationConfig { normalization: Normalization::SpectralNorm, restarts: 3, ..Default::default() };
        let r = minimize_evolution_time(&zero(), &one(), 1.0, &cfg).unwrap();
        assert!(r.t_opt >= FRAC_PI_2 - 1e-6);
    }

    #[test]
    fn diagnostics_of_exact_form() {
        let h = HermitianOperator::symmetric_coupling(&zero(), &one(), 0.8).unwrap();
        let d = optimality_diagnostics(&h, &zero(), Some(&one()), HB).unwrap();
        assert!(d.classical_norm < 1e-12);
        assert!(d.form_match && (d.omega - 0.8).abs() < 1e-12);
        assert!(d.mt_gap.unwrap().abs() < 1e-6);
        assert!(d.imt_gap.unwrap() < 1e-6);
    }

    #[test]
    fn diagnostics_of_biased_hamiltonian() {
        let h = pauli::z().add(&pauli::x()).unwrap();
        let d = optimality_diagnostics(&h, &zero(), Some(&one()), HB).unwrap();
        assert!((d.classical_norm - 1.0).abs() < 1e-12);
        assert!(!d.form_match);
    }

    #[test]
    fn self_inverse_saturates_without_the_optimal_form() {
        let h = random_self_inverse(4, 6).unwrap();
        let psi0 = random_state(4, 6).unwrap();
        let d = optimality_diagnostics(&h, &psi0, None, HB).unwrap();
        assert!(d.imt_gap.unwrap() < 1e-6);
        assert!(d.form_residual > 0.0);
    }
}
