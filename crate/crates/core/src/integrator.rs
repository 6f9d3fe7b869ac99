//! Fixed-step RK4 integration on the simplex.
//!
//! The classical fourth-order scheme is combined with a cheap projection
//! (floor-clamp + renormalize) applied to every stage state and to the final
//! combination. The field conserves mass analytically, so the projection
//! only removes rounding drift and never moves interior points materially;
//! this keeps runs bit-reproducible for a given seed and step size.

use alloc::vec::Vec;

use crate::analysis;
use crate::dynamics::{InputSignal, StateVector, TangentVector};
use crate::error::{StepError, ValidationError};
use crate::hypergraph::HyperTensorSet;

/// Step size, horizon, projection floor, and recording stride.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Coordinates are clamped to at least this value before renormalizing.
    /// Keeps `log x_i` finite for the entropy diagnostics without distorting
    /// the dynamics.
    pub projection_floor: f64,
    /// Record every k-th step (the initial and final states are always kept).
    pub record_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-2, t_final: 20.0, projection_floor: 1e-12, record_every: 1 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ValidationError::Config { field: "dt", reason: "must be positive" });
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(ValidationError::Config { field: "t_final", reason: "must be at least dt" });
        }
        if !(self.projection_floor > 0.0 && self.projection_floor <= 1e-8) {
            return Err(ValidationError::Config {
                field: "projection_floor",
                reason: "must lie in (0, 1e-8]",
            });
        }
        if self.record_every == 0 {
            return Err(ValidationError::Config { field: "record_every", reason: "must be positive" });
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        libm::round(self.t_final / self.dt).max(1.0) as usize
    }
}

/// Per-sample diagnostics. Entropy fields are present when the integration
/// was given an equilibrium hint.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDiagnostics {
    /// Total mass `1^T x` of the recorded state.
    pub mass: f64,
    /// Relative entropy `V(x) = KL(x || v)` against the hint.
    pub entropy: Option<f64>,
    /// Chain-rule entropy rate `grad V(x)^T dx/dt` along the actual field.
    pub entropy_rate: Option<f64>,
    /// Euclidean distance `|x - v|` to the hint.
    pub equilibrium_distance: Option<f64>,
}

/// Time-stamped state samples with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    diagnostics: Vec<SampleDiagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn diagnostics(&self) -> &[SampleDiagnostics] {
        &self.diagnostics
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory is nonempty")
    }

    pub fn last_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is nonempty")
    }

    /// Largest `|1^T x(t) - 1|` over the recorded samples.
    pub fn max_mass_residual(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| libm::fabs(d.mass - 1.0))
            .fold(0.0, f64::max)
    }

    /// Smallest coordinate over the whole run.
    pub fn min_coordinate(&self) -> f64 {
        self.states
            .iter()
            .map(StateVector::min_coordinate)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Why a raw vector could not be projected back onto the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionFailure {
    /// Every coordinate is nonpositive; renormalization would fabricate a state.
    Degenerate,
    /// A coordinate is NaN or infinite.
    NonFinite,
}

/// Clamp each coordinate to at least `floor`, then renormalize to unit mass.
/// Interior points above the floor pass through unchanged up to rounding.
pub fn project_simplex(y: &[f64], floor: f64) -> Result<StateVector, ProjectionFailure> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ProjectionFailure::NonFinite);
    }
    if y.iter().all(|&v| v <= 0.0) {
        return Err(ProjectionFailure::Degenerate);
    }
    let mut out: Vec<f64> = y.iter().map(|&v| v.max(floor)).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(StateVector::new_unchecked(out))
}

fn stage_state(
    x: &StateVector,
    k: &TangentVector,
    scale: f64,
    floor: f64,
    t: f64,
) -> Result<StateVector, StepError> {
    let proposal: Vec<f64> = x
        .as_slice()
        .iter()
        .zip(k.as_slice())
        .map(|(xi, ki)| xi + scale * ki)
        .collect();
    project_simplex(&proposal, floor).map_err(|e| match e {
        ProjectionFailure::Degenerate => StepError::DegenerateState { t },
        ProjectionFailure::NonFinite => StepError::NonFinite { t },
    })
}

/// One classical RK4 update with simplex projection after each stage state
/// and after the final combination.
pub fn rk4_step<F>(field: &F, x: &StateVector, t: f64, dt: f64, floor: f64) -> Result<StateVector, StepError>
where
    F: Fn(&StateVector, f64) -> TangentVector,
{
    let k1 = field(x, t);
    let s2 = stage_state(x, &k1, dt / 2.0, floor, t)?;
    let k2 = field(&s2, t + dt / 2.0);
    let s3 = stage_state(x, &k2, dt / 2.0, floor, t)?;
    let k3 = field(&s3, t + dt / 2.0);
    let s4 = stage_state(x, &k3, dt, floor, t)?;
    let k4 = field(&s4, t + dt);

    let combined: Vec<f64> = (0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    project_simplex(&combined, floor).map_err(|e| match e {
        ProjectionFailure::Degenerate => StepError::DegenerateState { t },
        ProjectionFailure::NonFinite => StepError::NonFinite { t },
    })
}

/// Integrates the generator dynamics (optionally with an additive zero-sum
/// input) from `x0`, sampling every `record_every` steps. When an
/// equilibrium hint is supplied, entropy diagnostics are populated.
pub fn integrate(
    tensors: &HyperTensorSet,
    x0: &StateVector,
    cfg: &IntegratorConfig,
    input: Option<&InputSignal>,
    equilibrium_hint: Option<&StateVector>,
) -> Result<Trajectory, StepError> {
    cfg.validate()?;
    let field = |x: &StateVector, t: f64| match input {
        Some(w) => tensors.vector_field_with_input(x, w, t),
        None => tensors.vector_field(x),
    };
    let diagnose = |x: &StateVector, t: f64| {
        let (entropy, entropy_rate, equilibrium_distance) = match equilibrium_hint {
            Some(v) => {
                let grad = analysis::entropy_gradient(x, v);
                let f = field(x, t);
                let rate = grad.iter().zip(f.as_slice()).map(|(g, fi)| g * fi).sum();
                (Some(analysis::entropy(x, v)), Some(rate), Some(x.l2_distance(v)))
            }
            None => (None, None, None),
        };
        SampleDiagnostics { mass: x.mass(), entropy, entropy_rate, equilibrium_distance }
    };

    let steps = cfg.steps();
    let mut times = Vec::with_capacity(steps / cfg.record_every + 2);
    let mut states = Vec::with_capacity(times.capacity());
    let mut diagnostics = Vec::with_capacity(times.capacity());

    let mut x = x0.clone();
    times.push(0.0);
    diagnostics.push(diagnose(&x, 0.0));
    states.push(x.clone());

    let mut input_buf = alloc::vec![0.0; tensors.n()];
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        if let Some(w) = input {
            w.evaluate_into(t, &mut input_buf);
            let sum: f64 = input_buf.iter().sum();
            if libm::fabs(sum) > crate::dynamics::MASS_TOLERANCE {
                return Err(StepError::InputNotZeroSum { t, sum });
            }
        }
        x = rk4_step(&field, &x, t, cfg.dt, cfg.projection_floor)?;
        let done = step + 1 == steps;
        if (step + 1) % cfg.record_every == 0 || done {
            let t_next = (step + 1) as f64 * cfg.dt;
            times.push(t_next);
            diagnostics.push(diagnose(&x, t_next));
            states.push(x.clone());
        }
    }
    Ok(Trajectory { times, states, diagnostics })
}

/// Steady state is declared when the field's sup-norm at the final sample is
/// within `tol`. Returns the final state either way.
///
/// Panics on an empty trajectory.
pub fn detect_steady_state<F>(field: &F, traj: &Trajectory, tol: f64) -> (bool, StateVector)
where
    F: Fn(&StateVector, f64) -> TangentVector,
{
    let x = traj.last_state();
    let residual = field(x, traj.last_time()).linf_norm();
    (residual <= tol, x.clone())
}
