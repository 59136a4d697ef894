//! Time evolution of pure states.
//!
//! Constant schedules are propagated exactly from `t = 0` with a cached
//! eigendecomposition. Piecewise-constant schedules are split at their
//! breakpoints and are therefore also exact. Smoothly driven schedules use
//! the exponential midpoint rule, `psi <- exp(-i h H(t + h/2) / hbar) psi`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{QslError, Result};
use crate::linalg::{angle_between, HermitianOperator, PhysicalConstants, PureState, Spectral, C64};

/// Minimum `|<psi_k|psi_{k+1}>|` accepted between consecutive grid states.
pub const MIN_STEP_OVERLAP: f64 = 0.9;
/// Default tolerance for [`monotonicity`].
pub const MONOTONE_TOL: f64 = 1e-10;
/// Upper bound on grid sizes produced by the refinement policies.
pub const MAX_STEPS: usize = 1 << 20;

type DriveFn = dyn Fn(f64) -> HermitianOperator + Send + Sync;

#[derive(Clone)]
struct Piece {
    h: HermitianOperator,
    spectral: Arc<Spectral>,
}

impl Piece {
    fn new(h: HermitianOperator) -> Result<Self> {
        let spectral = Arc::new(h.spectral()?);
        Ok(Self { h, spectral })
    }
}

/// Time-dependent Hamiltonian `t -> H(t)`.
#[derive(Clone)]
pub struct HamiltonianSchedule {
    kind: ScheduleKind,
    dim: usize,
}

#[derive(Clone)]
enum ScheduleKind {
    Constant(Piece),
    /// `pieces[i]` applies on `[boundaries[i-1], boundaries[i])`.
    Piecewise { boundaries: Vec<f64>, pieces: Vec<Piece> },
    Driven(Arc<DriveFn>),
}

impl fmt::Debug for HamiltonianSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScheduleKind::Constant(p) => f.debug_tuple("Constant").field(p.h.matrix()).finish(),
            ScheduleKind::Piecewise { boundaries, .. } => f.debug_struct("Piecewise").field("boundaries", boundaries).finish(),
            ScheduleKind::Driven(_) => f.debug_struct("Driven").field("dim", &self.dim).finish(),
        }
    }
}

impl HamiltonianSchedule {
    pub fn constant(h: HermitianOperator) -> Result<Self> {
        let dim = h.dim();
        Ok(Self { kind: ScheduleKind::Constant(Piece::new(h)?), dim })
    }

    /// `segments[i] = (start_i, H_i)`; `H_i` applies from `start_i` until the
    /// next start. The first start is ignored (the first piece extends to
    /// `-inf`), so `[(0, A), (1, B)]` means `A` for `t < 1` and `B` after.
    pub fn piecewise(segments: Vec<(f64, HermitianOperator)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(QslError::InvalidArgument("piecewise schedule needs at least one segment".into()));
        }
        let dim = segments[0].1.dim();
        let mut boundaries = Vec::with_capacity(segments.len() - 1);
        let mut pieces = Vec::with_capacity(segments.len());
        for (i, (start, h)) in segments.into_iter().enumerate() {
            if h.dim() != dim {
                return Err(QslError::DimensionMismatch { expected: dim, got: h.dim() });
            }
            if i > 0 {
                if !start.is_finite() || boundaries.last().is_some_and(|&b| start <= b) {
                    return Err(QslError::InvalidArgument("piecewise segment starts must be finite and increasing".into()));
                }
                boundaries.push(start);
            }
            pieces.push(Piece::new(h)?);
        }
        if pieces.len() == 1 {
            let piece = pieces.pop().expect("one piece");
            return Ok(Self { kind: ScheduleKind::Constant(piece), dim });
        }
        Ok(Self { kind: ScheduleKind::Piecewise { boundaries, pieces }, dim })
    }

    /// Arbitrary smooth drive. `f` must return Hermitian operators of dimension `dim`.
    pub fn driven<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> HermitianOperator + Send + Sync + 'static,
    {
        Self { kind: ScheduleKind::Driven(Arc::new(f)), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ScheduleKind::Constant(_))
    }

    /// The constant Hamiltonian, if this schedule has one.
    pub fn constant_hamiltonian(&self) -> Option<&HermitianOperator> {
        match &self.kind {
            ScheduleKind::Constant(p) => Some(&p.h),
            _ => None,
        }
    }

    pub(crate) fn constant_spectral(&self) -> Option<&Spectral> {
        match &self.kind {
            ScheduleKind::Constant(p) => Some(&p.spectral),
            _ => None,
        }
    }

    pub fn evaluate(&self, t: f64) -> HermitianOperator {
        match &self.kind {
            ScheduleKind::Constant(p) => p.h.clone(),
            ScheduleKind::Piecewise { boundaries, pieces } => pieces[piece_index(boundaries, t)].h.clone(),
            ScheduleKind::Driven(f) => f(t),
        }
    }

    /// `H'(t) = -H(span - t)`, which undoes the evolution over `[0, span]`.
    pub fn reversed(&self, span: f64) -> Result<Self> {
        let dim = self.dim;
        match &self.kind {
            ScheduleKind::Constant(p) => Self::constant(p.h.scale(-1.0)),
            ScheduleKind::Piecewise { boundaries, pieces } => {
                let mut segments = Vec::with_capacity(pieces.len());
                segments.push((f64::NEG_INFINITY, pieces[pieces.len() - 1].h.scale(-1.0)));
                for i in (0..boundaries.len()).rev() {
                    segments.push((span - boundaries[i], pieces[i].h.scale(-1.0)));
                }
                Self::piecewise(segments)
            }
            ScheduleKind::Driven(f) => {
                let f = Arc::clone(f);
                Ok(Self::driven(dim, move |t| f(span - t).scale(-1.0)))
            }
        }
    }

    /// Propagates `v` from `t0` to `t1`.
    pub fn propagate(&self, v: &DVector<C64>, t0: f64, t1: f64, hbar: f64) -> Result<DVector<C64>> {
        match &self.kind {
            ScheduleKind::Constant(p) => Ok(p.spectral.evolve(v, t1 - t0, hbar)),
            ScheduleKind::Piecewise { boundaries, pieces } => {
                let mut out = v.clone();
                let mut a = t0;
                let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
                let mut cuts: Vec<f64> = boundaries.iter().copied().filter(|&b| b > lo && b < hi).collect();
                if t1 < t0 {
                    cuts.reverse();
                }
                cuts.push(t1);
                for b in cuts {
                    let mid = 0.5 * (a + b);
                    out = pieces[piece_index(boundaries, mid)].spectral.evolve(&out, b - a, hbar);
                    a = b;
                }
                Ok(out)
            }
            ScheduleKind::Driven(f) => {
                let h = f(0.5 * (t0 + t1));
                if h.dim() != self.dim {
                    return Err(QslError::DimensionMismatch { expected: self.dim, got: h.dim() });
                }
                Ok(Spectral::new(&h)?.evolve(v, t1 - t0, hbar))
            }
        }
    }

    /// Largest spectral width `lambda_max - lambda_min` seen on `[0, t_max]`.
    pub fn spectral_width(&self, t_max: f64) -> Result<f64> {
        let width = |s: &Spectral| s.max_eigenvalue() - s.min_eigenvalue();
        Ok(match &self.kind {
            ScheduleKind::Constant(p) => width(&p.spectral),
            ScheduleKind::Piecewise { pieces, .. } => pieces.iter().map(|p| width(&p.spectral)).fold(0.0, f64::max),
            ScheduleKind::Driven(f) => {
                let mut w: f64 = 0.0;
                for k in 0..=32 {
                    let h = f(t_max * k as f64 / 32.0);
                    w = w.max(width(&h.spectral()?));
                }
                w
            }
        })
    }
}

fn piece_index(boundaries: &[f64], t: f64) -> usize {
    boundaries.partition_point(|&b| b <= t)
}

/// Evolved states on a uniform grid `t_k = k T / N`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<PureState>,
    schedule: HamiltonianSchedule,
    consts: PhysicalConstants,
    max_norm_drift: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn schedule(&self) -> &HamiltonianSchedule {
        &self.schedule
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.consts
    }

    pub fn step_count(&self) -> usize {
        self.times.len() - 1
    }

    pub fn span(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn step(&self) -> f64 {
        self.span() / self.step_count() as f64
    }

    pub fn dim(&self) -> usize {
        self.schedule.dim()
    }

    pub fn initial(&self) -> &PureState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &PureState {
        self.states.last().expect("non-empty trajectory")
    }

    /// Largest `| ||psi|| - 1 |` observed before renormalization.
    pub fn max_norm_drift(&self) -> f64 {
        self.max_norm_drift
    }

    pub fn hamiltonian_at(&self, k: usize) -> HermitianOperator {
        self.schedule.evaluate(self.times[k])
    }
}

/// Evolves `psi0` over `[0, span]` on `steps` uniform steps.
pub fn evolve(schedule: &HamiltonianSchedule, psi0: &PureState, span: f64, steps: usize, consts: PhysicalConstants) -> Result<Trajectory> {
    if psi0.dim() != schedule.dim() {
        return Err(QslError::DimensionMismatch { expected: schedule.dim(), got: psi0.dim() });
    }
    if !(span.is_finite() && span > 0.0) {
        return Err(QslError::InvalidArgument(format!("evolution span must be positive, got {span}")));
    }
    if steps == 0 {
        return Err(QslError::InvalidArgument("step count must be positive".into()));
    }
    let hbar = consts.hbar;
    let h = span / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|k| if k == steps { span } else { k as f64 * h }).collect();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(psi0.clone());
    let mut drift: f64 = 0.0;

    for k in 1..=steps {
        let raw = match schedule.constant_spectral() {
            Some(spec) => spec.evolve(psi0.amplitudes(), times[k], hbar),
            None => schedule.propagate(states[k - 1].amplitudes(), times[k - 1], times[k], hbar)?,
        };
        drift = drift.max((raw.norm() - 1.0).abs());
        let next = PureState::renormalized(raw);
        let overlap = states[k - 1].inner(&next).norm();
        if overlap <= MIN_STEP_OVERLAP {
            return Err(QslError::StepResolution { step: k, overlap });
        }
        states.push(next);
    }
    Ok(Trajectory { times, states, schedule: schedule.clone(), consts, max_norm_drift: drift })
}

/// Doubles the step count (starting from `initial_steps`) until successive
/// final states differ by less than `tol` in norm.
pub fn evolve_auto(
    schedule: &HamiltonianSchedule,
    psi0: &PureState,
    span: f64,
    initial_steps: usize,
    tol: f64,
    consts: PhysicalConstants,
) -> Result<Trajectory> {
    let mut steps = initial_steps.max(2);
    let mut previous: Option<Trajectory> = None;
    let mut last_change = f64::INFINITY;
    while steps <= MAX_STEPS {
        match evolve(schedule, psi0, span, steps, consts) {
            Ok(traj) => {
                if let Some(prev) = &previous {
                    last_change = (prev.final_state().amplitudes() - traj.final_state().amplitudes()).norm();
                    if last_change < tol {
                        return Ok(traj);
                    }
                }
                previous = Some(traj);
            }
            Err(QslError::StepResolution { .. }) => {}
            Err(e) => return Err(e),
        }
        steps *= 2;
    }
    Err(QslError::NoConvergence { steps: steps / 2, change: last_change })
}

/// `p_t = |<psi_0|psi_t>|^2` on the trajectory grid.
pub fn survival_probability(traj: &Trajectory) -> Vec<f64> {
    let psi0 = traj.initial();
    traj.states().iter().map(|s| psi0.inner(s).norm_sqr().clamp(0.0, 1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Monotonicity {
    Decreasing,
    Increasing,
    NonMonotonic,
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monotonicity::Decreasing => "DECREASING",
            Monotonicity::Increasing => "INCREASING",
            Monotonicity::NonMonotonic => "NON_MONOTONIC",
        })
    }
}

/// Classifies a series by its forward differences. A constant series is
/// reported as `Decreasing`.
pub fn monotonicity(series: &[f64], tol: f64) -> Monotonicity {
    let diffs = || series.windows(2).map(|w| w[1] - w[0]);
    if diffs().all(|d| d <= tol) {
        Monotonicity::Decreasing
    } else if diffs().all(|d| d >= -tol) {
        Monotonicity::Increasing
    } else {
        Monotonicity::NonMonotonic
    }
}

/// Composite Simpson rule on a uniform grid with spacing `h`; trapezoid rule
/// when the number of points is even.
pub fn integrate_uniform(series: &[f64], h: f64) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(QslError::InvalidArgument("quadrature needs at least two samples".into()));
    }
    if n.is_multiple_of(2) {
        let inner: f64 = series[1..n - 1].iter().sum();
        return Ok(h * (0.5 * (series[0] + series[n - 1]) + inner));
    }
    let mut acc = series[0] + series[n - 1];
    for (i, v) in series.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(acc * h / 3.0)
}

/// `(1/T) int_0^T x(t) dt` for samples on a uniform grid over `[0, T]`.
pub fn time_average(series: &[f64], span: f64) -> Result<f64> {
    if !(span > 0.0) {
        return Err(QslError::InvalidArgument(format!("averaging span must be positive, got {span}")));
    }
    let h = span / (series.len().max(2) - 1) as f64;
    Ok(integrate_uniform(series, h)? / span)
}

/// Time average of a series sampled on the trajectory grid.
pub fn trajectory_average(traj: &Trajectory, series: &[f64]) -> Result<f64> {
    if series.len() != traj.times().len() {
        return Err(QslError::DimensionMismatch { expected: traj.times().len(), got: series.len() });
    }
    time_average(series, traj.span())
}

const PASSAGE_STEP_ANGLE: f64 = 0.05;
const PASSAGE_TIME_RESOLUTION: f64 = 1e-10;

/// Grid size for passage searches: each step rotates the state by at most
/// about `0.05` rad.
pub fn passage_steps(schedule: &HamiltonianSchedule, t_max: f64, consts: PhysicalConstants) -> Result<usize> {
    let width = schedule.spectral_width(t_max)?;
    let n = (t_max * width / (consts.hbar * PASSAGE_STEP_ANGLE)).ceil();
    Ok((n as usize).clamp(64, MAX_STEPS))
}

/// Earliest time at which the evolving state comes within `angle_tol` of
/// `target`.
///
/// Grid points are scanned in order; a sample below tolerance, or a local
/// minimum of the angle that a golden-section search pushes below
/// tolerance, brackets the crossing, which is then bisected to `1e-10`.
pub fn first_passage_time(
    schedule: &HamiltonianSchedule,
    psi0: &PureState,
    target: &PureState,
    angle_tol: f64,
    t_max: f64,
    consts: PhysicalConstants,
) -> Result<f64> {
    if psi0.dim() != schedule.dim() || target.dim() != schedule.dim() {
        return Err(QslError::DimensionMismatch { expected: schedule.dim(), got: target.dim().min(psi0.dim()) });
    }
    if !(t_max > 0.0) {
        return Err(QslError::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    let hbar = consts.hbar;
    let goal = target.amplitudes();
    let angle_of = |v: &DVector<C64>| angle_between(goal, &v.unscale(v.norm()));

    let steps = passage_steps(schedule, t_max, consts)?;
    let h = t_max / steps as f64;

    // (time, state, angle) for the last three grid points
    let mut window: Vec<(f64, DVector<C64>, f64)> = Vec::with_capacity(3);
    let start = psi0.amplitudes().clone();
    let a0 = angle_of(&start);
    if a0 < angle_tol {
        return Ok(0.0);
    }
    let mut closest = a0;
    window.push((0.0, start, a0));

    for k in 1..=steps {
        let t = if k == steps { t_max } else { k as f64 * h };
        let (t_prev, v_prev, _) = window.last().expect("window").clone();
        let v = schedule.propagate(&v_prev, t_prev, t, hbar)?;
        let a = angle_of(&v);
        closest = closest.min(a);
        window.push((t, v, a));
        if window.len() > 3 {
            window.remove(0);
        }

        let n = window.len();
        let state_at = |base: &(f64, DVector<C64>, f64), s: f64| -> Result<f64> {
            Ok(angle_of(&schedule.propagate(&base.1, base.0, s, hbar)?))
        };

        if a < angle_tol {
            let base = &window[n - 2];
            return bisect_crossing(base.0, t, |s| state_at(base, s), angle_tol);
        }
        if n == 3 && window[1].2 < window[0].2 && window[1].2 <= window[2].2 {
            let base = window[0].clone();
            let (t_min, a_min) = golden_minimize(base.0, t, |s| state_at(&base, s))?;
            closest = closest.min(a_min);
            if a_min < angle_tol {
                return bisect_crossing(base.0, t_min, |s| state_at(&base, s), angle_tol);
            }
        }
    }
    Err(QslError::NotReached { t_max, closest_angle: closest })
}

fn bisect_crossing<F>(mut lo: f64, mut hi: f64, angle: F, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    while hi - lo > PASSAGE_TIME_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if angle(mid)? < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub(crate) fn golden_minimize<F>(mut a: f64, mut b: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, spectral_exponential};
    use crate::random::{random_hermitian, random_state};
    use std::f64::consts::{FRAC_PI_2, PI};

    const HB: PhysicalConstants = PhysicalConstants { hbar: 1.0 };

    fn zero() -> PureState {
        PureState::basis(2, 0).unwrap()
    }

    fn one() -> PureState {
        PureState::basis(2, 1).unwrap()
    }

    fn two_qubit_x() -> HermitianOperator {
        pauli::x().tensor(&pauli::identity()).unwrap().add(&pauli::identity().tensor(&pauli::x()).unwrap()).unwrap()
    }

    #[test]
    fn sigma_x_flips_zero_to_minus_i_one() {
        let s = HamiltonianSchedule::constant(pauli::x()).unwrap();
        let traj = evolve(&s, &zero(), FRAC_PI_2, 100, HB).unwrap();
        let f = traj.final_state().amplitudes();
        assert!(f[0].norm() < 1e-15);
        assert!((f[1] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert_eq!(traj.initial(), &zero());
    }

    #[test]
    fn two_qubit_flip_reaches_eleven() {
        let s = HamiltonianSchedule::constant(two_qubit_x()).unwrap();
        let traj = evolve(&s, &PureState::basis(4, 0).unwrap(), FRAC_PI_2, 200, HB).unwrap();
        let eleven = PureState::basis(4, 3).unwrap();
        assert!((eleven.inner(traj.final_state()).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn piecewise_matches_composed_propagators() {
        let s = HamiltonianSchedule::piecewise(vec![(0.0, pauli::z()), (1.0, pauli::x())]).unwrap();
        assert!(!s.is_constant());
        for steps in [2, 7, 50] {
            let traj = evolve(&s, &PureState::normalized(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap(), 2.0, steps, HB);
            let Ok(traj) = traj else { continue };
            let uz = spectral_exponential(&pauli::z(), 1.0, HB).unwrap();
            let ux = spectral_exponential(&pauli::x(), 1.0, HB).unwrap();
            let expected = &ux * (&uz * traj.initial().amplitudes());
            assert!((traj.final_state().amplitudes() - expected).norm() < 1e-8, "steps={steps}");
        }
        let traj = evolve(&s, &zero(), 2.0, 40, HB).unwrap();
        let uz = spectral_exponential(&pauli::z(), 1.0, HB).unwrap();
        let ux = spectral_exponential(&pauli::x(), 1.0, HB).unwrap();
        let expected = &ux * (&uz * zero().amplitudes());
        assert!((traj.final_state().amplitudes() - expected).norm() < 1e-8);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let s = HamiltonianSchedule::constant(pauli::x().scale(10.0)).unwrap();
        assert!(matches!(evolve(&s, &zero(), 1.0, 4, HB), Err(QslError::StepResolution { .. })));
        let traj = evolve_auto(&s, &zero(), 1.0, 4, 1e-9, HB).unwrap();
        assert!(traj.step_count() > 4);
    }

    #[test]
    fn survival_examples() {
        let s = HamiltonianSchedule::constant(pauli::x()).unwrap();
        let traj = evolve(&s, &zero(), 1.3, 130, HB).unwrap();
        let p = survival_probability(&traj);
        assert_eq!(p[0], 1.0);
        for (t, pk) in traj.times().iter().zip(&p) {
            assert!((pk - t.cos().powi(2)).abs() < 1e-9);
        }

        let s = HamiltonianSchedule::constant(pauli::z()).unwrap();
        let traj = evolve(&s, &zero(), 3.0, 30, HB).unwrap();
        assert!(survival_probability(&traj).iter().all(|&p| (p - 1.0).abs() < 1e-15));

        let n = [1.0 / 3f64.sqrt(); 3];
        let s = HamiltonianSchedule::constant(pauli::axis(n)).unwrap();
        let traj = evolve(&s, &zero(), FRAC_PI_2, 90, HB).unwrap();
        for (t, pk) in traj.times().iter().zip(survival_probability(&traj)) {
            let expected = t.cos().powi(2) + n[2] * n[2] * t.sin().powi(2);
            assert!((pk - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn monotonicity_examples() {
        let grid = |end: f64| (0..=200).map(move |k| (end * k as f64 / 200.0).cos().powi(2)).collect::<Vec<_>>();
        assert_eq!(monotonicity(&grid(FRAC_PI_2), MONOTONE_TOL), Monotonicity::Decreasing);
        assert_eq!(monotonicity(&grid(PI), MONOTONE_TOL), Monotonicity::NonMonotonic);
        assert_eq!(monotonicity(&[0.5; 10], MONOTONE_TOL), Monotonicity::Decreasing);
        assert_eq!(monotonicity(&[0.1, 0.2, 0.2, 0.9], MONOTONE_TOL), Monotonicity::Increasing);
    }

    #[test]
    fn time_average_examples() {
        assert!((time_average(&[2.5; 11], 3.0).unwrap() - 2.5).abs() < 1e-15);
        assert!((time_average(&[2.5; 10], 3.0).unwrap() - 2.5).abs() < 1e-15);
        let n = 201;
        let series: Vec<f64> = (0..n).map(|k| (FRAC_PI_2 * k as f64 / (n - 1) as f64).cos()).collect();
        assert!((time_average(&series, FRAC_PI_2).unwrap() - 2.0 / PI).abs() < 1e-8);
        assert!(time_average(&[1.0], 1.0).is_err());
    }

    #[test]
    fn trajectory_average_checks_length() {
        let s = HamiltonianSchedule::constant(pauli::x()).unwrap();
        let traj = evolve(&s, &zero(), 1.0, 10, HB).unwrap();
        assert!(matches!(trajectory_average(&traj, &[1.0; 5]), Err(QslError::DimensionMismatch { .. })));
    }

    #[test]
    fn passage_examples() {
        let s = HamiltonianSchedule::constant(pauli::x()).unwrap();
        let t = first_passage_time(&s, &zero(), &one(), 1e-8, 4.0, HB).unwrap();
        assert!((t - FRAC_PI_2).abs() < 1e-8, "{t}");

        let s = HamiltonianSchedule::constant(two_qubit_x()).unwrap();
        let t = first_passage_time(&s, &PureState::basis(4, 0).unwrap(), &PureState::basis(4, 3).unwrap(), 1e-8, 4.0, HB).unwrap();
        assert!((t - FRAC_PI_2).abs() < 1e-8);

        let s = HamiltonianSchedule::constant(pauli::z()).unwrap();
        assert!(matches!(first_passage_time(&s, &zero(), &one(), 1e-8, 10.0, HB), Err(QslError::NotReached { .. })));
    }

    #[test]
    fn passage_respects_phase_and_loose_tolerance() {
        let s = HamiltonianSchedule::constant(pauli::x()).unwrap();
        let target = one().with_phase(1.234);
        let t = first_passage_time(&s, &zero(), &target, 1e-3, 4.0, HB).unwrap();
        assert!(t < FRAC_PI_2 && FRAC_PI_2 - t < 1.01e-3);
    }

    #[test]
    fn constant_grid_refinement_changes_nothing() {
        let h = random_hermitian(4, 3).unwrap();
        let psi = random_state(4, 4).unwrap();
        let s = HamiltonianSchedule::constant(h).unwrap();
        let a = evolve(&s, &psi, 1.7, 100, HB).unwrap();
        let b = evolve(&s, &psi, 1.7, 200, HB).unwrap();
        assert!((a.final_state().amplitudes() - b.final_state().amplitudes()).norm() < 1e-12);
        assert!(a.max_norm_drift() < 1e-9);
    }

    fn driven(d: usize, seed: u64) -> HamiltonianSchedule {
        let h0 = random_hermitian(d, seed).unwrap();
        let h1 = random_hermitian(d, seed + 100).unwrap();
        HamiltonianSchedule::driven(d, move |t| h0.add(&h1.scale((2.0 * t).sin())).unwrap())
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        let s = driven(3, 9);
        let psi = random_state(3, 10).unwrap();
        let fine = evolve(&s, &psi, 1.5, 4096, HB).unwrap();
        let err = |n: usize| {
            let t = evolve(&s, &psi, 1.5, n, HB).unwrap();
            (t.final_state().amplitudes() - fine.final_state().amplitudes()).norm()
        };
        let (e1, e2) = (err(64), err(128));
        let ratio = e1 / e2;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
        assert!(fine.max_norm_drift() < 1e-7);
    }

    #[test]
    fn reversal_returns_to_start() {
        let span = 1.3;
        for s in [driven(4, 1), HamiltonianSchedule::piecewise(vec![(0.0, pauli::z()), (0.4, pauli::x()), (0.9, pauli::y())]).unwrap()] {
            let psi = random_state(s.dim(), 2).unwrap();
            let fwd = evolve(&s, &psi, span, 2000, HB).unwrap();
            let back = evolve(&s.reversed(span).unwrap(), fwd.final_state(), span, 2000, HB).unwrap();
            assert!((back.final_state().inner(&psi).norm() - 1.0).abs() < 1e-8);
            assert!((back.final_state().amplitudes() - psi.amplitudes()).norm() < 1e-8);
        }
    }
}
