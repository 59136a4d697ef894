//! Scenario files: JSON documents describing a Hamiltonian, an initial state
//! and what to compute.
//!
//! ```json
//! {
//!   "name": "example1",
//!   "dimension": 2,
//!   "hamiltonian": { "kind": "pauli-axis", "axis": [0.577, 0.577, 0.577] },
//!   "initial_state": "0",
//!   "horizon_T": 1.5707963267948966,
//!   "steps": "auto"
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use qsl_core::prelude::*;
use std::result::Result;
use serde::{Deserialize, Serialize};

/// Scenario rejected before any computation, with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub origin: String,
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.origin)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, ":{l}:{c}")?;
        }
        if !self.field.is_empty() {
            write!(f, ": {}", self.field)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Pair([f64; 2]),
    Real(f64),
}

impl ComplexSpec {
    fn value(&self) -> Complex64 {
        match *self {
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
            ComplexSpec::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

/// A named ket such as `"0"`, `"+"`, `"01"`, `"basis:2"` or `"random"`, or
/// an explicit amplitude list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Amplitudes(Vec<ComplexSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTerm {
    #[serde(default = "one")]
    pub coefficient: f64,
    /// One of `I`, `X`, `Y`, `Z` per qubit, e.g. `"XI"`.
    pub paulis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: f64,
    pub hamiltonian: HamiltonianSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    /// `scale * n.sigma` with `n` normalized.
    PauliAxis {
        axis: [f64; 3],
        #[serde(default = "one")]
        scale: f64,
    },
    MatrixLiteral { matrix: Vec<Vec<ComplexSpec>> },
    TensorSum { terms: Vec<PauliTerm> },
    SelfInverseRandom { seed: Option<u64> },
    GueRandom {
        seed: Option<u64>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `hbar omega (|psi0><perp| + h.c.)`; without `perp`, the partner state
    /// is chosen so that the evolution passes through the target.
    OptimalForm { omega: f64, perp: Option<StateSpec> },
    Piecewise { segments: Vec<Segment> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepsSpec {
    Fixed(usize),
    Named(String),
}

impl Default for StepsSpec {
    fn default() -> Self {
        StepsSpec::Named("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisSpec {
    /// `"from-initial"` or `"canonical"`.
    Named(String),
    Vectors(Vec<StateSpec>),
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec::Named("from-initial".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Number {
        value: f64,
        abs_tol: Option<f64>,
        rel_tol: Option<f64>,
    },
    Exact(serde_json::Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub dimension: usize,
    pub hamiltonian: HamiltonianSpec,
    pub initial_state: StateSpec,
    #[serde(default)]
    pub target_state: Option<StateSpec>,
    #[serde(rename = "horizon_T", default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub steps: StepsSpec,
    #[serde(default)]
    pub basis: BasisSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default)]
    pub variance_cap: Option<f64>,
    /// Reference values per command (`bounds`, `verify-ur`, `optimize`),
    /// keyed by report column.
    #[serde(default)]
    pub expect: BTreeMap<String, BTreeMap<String, Expected>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Steps {
    Fixed(usize),
    Auto,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub dimension: usize,
    pub schedule: HamiltonianSchedule,
    pub initial: PureState,
    pub target: Option<PureState>,
    pub horizon: Option<f64>,
    pub steps: Steps,
    /// `None` means the basis completed from the initial state.
    pub basis: Option<OrthonormalBasis>,
    pub seed: u64,
    pub constants: PhysicalConstants,
    pub variance_cap: Option<f64>,
    pub expect: BTreeMap<String, BTreeMap<String, Expected>>,
}

/// Line and column (1-based) of the last key of `path` in `text`, found by
/// following the keys in order.
fn locate(text: &str, path: &str) -> Option<(usize, usize)> {
    let mut offset = 0;
    let mut found = None;
    for key in path.split('.').filter(|k| !k.is_empty() && k.parse::<usize>().is_err()) {
        let key = key.split('[').next().unwrap_or(key);
        let needle = format!("\"{key}\"");
        let pos = text[offset..].find(&needle)? + offset;
        offset = pos + needle.len();
        found = Some(pos);
    }
    let pos = found?;
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let column = pos - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}

struct Ctx<'a> {
    origin: &'a str,
    text: Option<&'a str>,
}

impl Ctx<'_> {
    fn error(&self, field: &str, message: impl fmt::Display) -> ValidationError {
        let pos = self.text.and_then(|t| locate(t, field));
        ValidationError {
            origin: self.origin.to_string(),
            field: field.to_string(),
            line: pos.map(|p| p.0),
            column: pos.map(|p| p.1),
            message: message.to_string(),
        }
    }
}

impl ScenarioSpec {
    /// Parses a scenario document; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ValidationError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let parsed: Result<Self, _> = serde_path_to_error::deserialize(&mut de);
        let spec = parsed.map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ValidationError {
                origin: origin.to_string(),
                field: if path == "." { String::new() } else { path },
                line: Some(inner.line()),
                column: Some(inner.column()),
                message: inner.to_string(),
            }
        })?;
        de.end().map_err(|e| ValidationError {
            origin: origin.to_string(),
            field: String::new(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        Ok(spec)
    }

    /// Validates and builds the scenario. `text` is used to position errors.
    pub fn resolve(&self, origin: &str, text: Option<&str>) -> Result<Scenario, ValidationError> {
        let ctx = Ctx { origin, text };
        let d = self.dimension;
        if !(2..=MAX_DIMENSION).contains(&d) {
            return Err(ctx.error("dimension", format!("must be between 2 and {MAX_DIMENSION}, got {d}")));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(ctx.error("hbar", "must be positive"));
        }
        let constants = PhysicalConstants::new(self.hbar).map_err(|e| ctx.error("hbar", e))?;
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ctx.error("horizon_T", format!("must be positive, got {h}")));
            }
        }
        if let Some(cap) = self.variance_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(ctx.error("variance_cap", format!("must be positive, got {cap}")));
            }
        }
        let steps = match &self.steps {
            StepsSpec::Fixed(0) => return Err(ctx.error("steps", "must be positive")),
            StepsSpec::Fixed(n) => Steps::Fixed(*n),
            StepsSpec::Named(s) if s == "auto" => Steps::Auto,
            StepsSpec::Named(s) => return Err(ctx.error("steps", format!("expected a positive integer or \"auto\", got {s:?}"))),
        };

        let initial = resolve_state(&ctx, "initial_state", &self.initial_state, d, self.seed)?;
        let target = match &self.target_state {
            Some(t) => {
                let target = resolve_state(&ctx, "target_state", t, d, self.seed.wrapping_add(1))?;
                let angle = hilbert_angle(&initial, &target).map_err(|e| ctx.error("target_state", e))?;
                if angle < 1e-8 {
                    return Err(ctx.error("target_state", "target equals the initial state up to phase"));
                }
                Some(target)
            }
            None => None,
        };
        let schedule = resolve_schedule(&ctx, "hamiltonian", &self.hamiltonian, d, self, &initial, target.as_ref())?;

        let basis = match &self.basis {
            BasisSpec::Named(s) if s == "from-initial" => None,
            BasisSpec::Named(s) if s == "canonical" => Some(OrthonormalBasis::canonical(d).map_err(|e| ctx.error("basis", e))?),
            BasisSpec::Named(s) => return Err(ctx.error("basis", format!("expected \"from-initial\", \"canonical\" or a list of vectors, got {s:?}"))),
            BasisSpec::Vectors(vs) => {
                if vs.len() != d {
                    return Err(ctx.error("basis", format!("expected {d} vectors, got {}", vs.len())));
                }
                let states = vs
                    .iter()
                    .enumerate()
                    .map(|(i, v)| resolve_state(&ctx, &format!("basis.{i}"), v, d, self.seed))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(OrthonormalBasis::new(&states).map_err(|e| ctx.error("basis", e))?)
            }
        };

        Ok(Scenario {
            name: self.name.clone(),
            dimension: d,
            schedule,
            initial,
            target,
            horizon: self.horizon,
            steps,
            basis,
            seed: self.seed,
            constants,
            variance_cap: self.variance_cap,
            expect: self.expect.clone(),
        })
    }
}

fn qubit_ket(c: char) -> Option<[Complex64; 2]> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    Some(match c {
        '0' => [o, z],
        '1' => [z, o],
        '+' => [o * r, o * r],
        '-' => [o * r, -o * r],
        'r' => [o * r, Complex64::new(0.0, r)],
        'l' => [o * r, Complex64::new(0.0, -r)],
        _ => return None,
    })
}

fn resolve_state(ctx: &Ctx, field: &str, spec: &StateSpec, d: usize, seed: u64) -> Result<PureState, ValidationError> {
    match spec {
        StateSpec::Amplitudes(amps) => {
            if amps.len() != d {
                return Err(ctx.error(field, format!("expected {d} amplitudes, got {}", amps.len())));
            }
            PureState::new(amps.iter().map(ComplexSpec::value).collect()).map_err(|e| ctx.error(field, e))
        }
        StateSpec::Named(name) if name == "random" => random_state(d, seed).map_err(|e| ctx.error(field, e)),
        StateSpec::Named(name) if name.starts_with("basis:") => {
            let k: usize = name[6..].parse().map_err(|_| ctx.error(field, format!("bad basis index in {name:?}")))?;
            PureState::basis(d, k).map_err(|e| ctx.error(field, e))
        }
        StateSpec::Named(name) => {
            // product of single-qubit kets: 0 1 + - r (= +i) l (= -i)
            let mut amps = vec![Complex64::new(1.0, 0.0)];
            for c in name.chars() {
                let ket = qubit_ket(c).ok_or_else(|| ctx.error(field, format!("unknown ket symbol {c:?} in {name:?}")))?;
                amps = amps.iter().flat_map(|a| ket.iter().map(move |k| a * k)).collect();
            }
            if name.is_empty() || amps.len() != d {
                return Err(ctx.error(field, format!("ket {name:?} has dimension {}, scenario has {d}", amps.len())));
            }
            PureState::normalized(amps).map_err(|e| ctx.error(field, e))
        }
    }
}

fn resolve_hamiltonian(
    ctx: &Ctx,
    field: &str,
    spec: &HamiltonianSpec,
    d: usize,
    scenario: &ScenarioSpec,
    initial: &PureState,
    target: Option<&PureState>,
) -> Result<HermitianOperator, ValidationError> {
    let need_dim = |got: usize| -> Result<(), ValidationError> {
        if got == d {
            Ok(())
        } else {
            Err(ctx.error(field, format!("Hamiltonian has dimension {got}, scenario has {d}")))
        }
    };
    match spec {
        HamiltonianSpec::PauliAxis { axis, scale } => {
            need_dim(2)?;
            let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(n > 0.0 && n.is_finite()) {
                return Err(ctx.error(&format!("{field}.axis"), "axis must be a nonzero vector"));
            }
            Ok(pauli::axis([axis[0] / n, axis[1] / n, axis[2] / n]).scale(*scale))
        }
        HamiltonianSpec::MatrixLiteral { matrix } => {
            if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                return Err(ctx.error(&format!("{field}.matrix"), format!("expected a {d}x{d} matrix")));
            }
            let rows: Vec<Vec<Complex64>> = matrix.iter().map(|r| r.iter().map(ComplexSpec::value).collect()).collect();
            HermitianOperator::from_rows(&rows).map_err(|e| ctx.error(&format!("{field}.matrix"), e))
        }
        HamiltonianSpec::TensorSum { terms } => {
            let Some(first) = terms.first() else {
                return Err(ctx.error(&format!("{field}.terms"), "at least one term is required"));
            };
            let qubits = first.paulis.len();
            need_dim(1usize.checked_shl(qubits as u32).unwrap_or(0))?;
            let mut total = HermitianOperator::zeros(d).map_err(|e| ctx.error(field, e))?;
            for (i, term) in terms.iter().enumerate() {
                let here = format!("{field}.terms.{i}.paulis");
                if term.paulis.len() != qubits {
                    return Err(ctx.error(&here, "all terms must act on the same number of qubits"));
                }
                let mut op: Option<HermitianOperator> = None;
                for c in term.paulis.chars() {
                    let p = pauli::by_letter(c).ok_or_else(|| ctx.error(&here, format!("unknown Pauli letter {c:?}")))?;
                    op = Some(match op {
                        None => p,
                        Some(acc) => acc.tensor(&p).map_err(|e| ctx.error(&here, e))?,
                    });
                }
                let op = op.expect("nonempty").scale(term.coefficient);
                total = total.add(&op).map_err(|e| ctx.error(&here, e))?;
            }
            Ok(total)
        }
        HamiltonianSpec::SelfInverseRandom { seed } => random_self_inverse(d, seed.unwrap_or(scenario.seed)).map_err(|e| ctx.error(field, e)),
        HamiltonianSpec::GueRandom { seed, scale } => Ok(random_hermitian(d, seed.unwrap_or(scenario.seed)).map_err(|e| ctx.error(field, e))?.scale(*scale)),
        HamiltonianSpec::OptimalForm { omega, perp } => {
            if !(omega.is_finite() && *omega > 0.0) {
                return Err(ctx.error(&format!("{field}.omega"), "must be positive"));
            }
            let energy = scenario.hbar * omega;
            match perp {
                Some(p) => {
                    let here = format!("{field}.perp");
                    let perp = resolve_state(ctx, &here, p, d, scenario.seed.wrapping_add(2))?;
                    if initial.inner(&perp).norm() > 1e-10 {
                        return Err(ctx.error(&here, "must be orthogonal to the initial state"));
                    }
                    HermitianOperator::symmetric_coupling(initial, &perp, energy).map_err(|e| ctx.error(&here, e))
                }
                None => {
                    let target = target.ok_or_else(|| ctx.error(field, "optimal-form needs either perp or a target_state"))?;
                    optimal_hamiltonian(initial, target, energy).map_err(|e| ctx.error(field, e))
                }
            }
        }
        HamiltonianSpec::Piecewise { .. } => Err(ctx.error(field, "piecewise schedules cannot be nested")),
    }
}

fn resolve_schedule(
    ctx: &Ctx,
    field: &str,
    spec: &HamiltonianSpec,
    d: usize,
    scenario: &ScenarioSpec,
    initial: &PureState,
    target: Option<&PureState>,
) -> Result<HamiltonianSchedule, ValidationError> {
    match spec {
        HamiltonianSpec::Piecewise { segments } => {
            let mut parts = Vec::with_capacity(segments.len());
            for (i, seg) in segments.iter().enumerate() {
                let here = format!("{field}.segments.{i}.hamiltonian");
                parts.push((seg.start, resolve_hamiltonian(ctx, &here, &seg.hamiltonian, d, scenario, initial, target)?));
            }
            HamiltonianSchedule::piecewise(parts).map_err(|e| ctx.error(&format!("{field}.segments"), e))
        }
        other => {
            let h = resolve_hamiltonian(ctx, field, other, d, scenario, initial, target)?;
            HamiltonianSchedule::constant(h).map_err(|e| ctx.error(field, e))
        }
    }
}
