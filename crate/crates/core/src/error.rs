//! Error types shared across the crate.

use alloc::vec::Vec;
use core::fmt;

/// Identifies one tensor entry by its coordinate key. Used in error messages
/// so a rejected entry can be named exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryKey {
    pub order: usize,
    pub head: usize,
    pub tail_primary: usize,
    pub tail_rest: Vec<usize>,
}

impl fmt::Display for EntryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(order={}, head={}, tail={}",
            self.order, self.head, self.tail_primary
        )?;
        for j in &self.tail_rest {
            write!(f, ",{j}")?;
        }
        write!(f, ")")
    }
}

/// Rejections raised while constructing or validating domain objects.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationError {
    /// Node count must be at least 1.
    EmptyNodeSet,
    /// An entry references a node index `>= n`.
    IndexOutOfRange { entry: EntryKey, n: usize },
    /// `head == tail_primary` is not a transport channel.
    SelfLoop { entry: EntryKey },
    /// Weights must be nonnegative (direction tensors are exempt).
    NegativeWeight { entry: EntryKey, weight: f64 },
    /// `tail_rest` length must equal `order - 1`.
    ArityMismatch { entry: EntryKey, expected: usize, found: usize },
    /// Duplicate coordinate keys are rejected, not summed.
    DuplicateEntry { entry: EntryKey },
    /// Entry order must be at least 1.
    ZeroOrder { entry: EntryKey },
    /// Mixing tensor sets over different node counts.
    NodeCountMismatch { left: usize, right: usize },
    /// A state coordinate is not strictly positive (or not finite).
    NonPositiveCoordinate { index: usize, value: f64 },
    /// State mass deviates from 1 beyond the construction tolerance.
    MassResidual { residual: f64 },
    /// A tangent vector fails the zero-sum constraint.
    NotZeroSum { sum: f64 },
    /// Structured kernel base matrix must be square with zero diagonal.
    KernelBaseShape,
    /// Structured kernel base must be elementwise nonnegative.
    KernelBaseNegative { row: usize, col: usize, value: f64 },
    /// Coupling coefficient alpha must be nonnegative.
    NegativeAlpha { alpha: f64 },
    /// A replicator fitness went negative where the embedding needs `x_i f_i(x) >= 0`.
    ReplicatorNegativeRate { node: usize, value: f64 },
    /// A scalar configuration field is out of its admissible range.
    Config { field: &'static str, reason: &'static str },
    /// Swarm matrices must be symmetric with zero diagonal and nonnegative weights.
    SwarmBaseInvalid { reason: &'static str },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationError::*;
        match self {
            EmptyNodeSet => write!(f, "node count must be at least 1"),
            IndexOutOfRange { entry, n } => {
                write!(f, "entry {entry}: node index out of range for n={n}")
            }
            SelfLoop { entry } => write!(f, "entry {entry}: head equals tail_primary"),
            NegativeWeight { entry, weight } => {
                write!(f, "entry {entry}: negative weight {weight}")
            }
            ArityMismatch { entry, expected, found } => write!(
                f,
                "entry {entry}: tail_rest has {found} indices, order {} requires {expected}",
                entry.order
            ),
            DuplicateEntry { entry } => write!(f, "duplicate entry key {entry}"),
            ZeroOrder { entry } => write!(f, "entry {entry}: order must be at least 1"),
            NodeCountMismatch { left, right } => {
                write!(f, "node counts differ: {left} vs {right}")
            }
            NonPositiveCoordinate { index, value } => {
                write!(f, "state coordinate {index} = {value} is not strictly positive")
            }
            MassResidual { residual } => {
                write!(f, "state mass deviates from 1 by {residual:e}")
            }
            NotZeroSum { sum } => write!(f, "tangent vector sums to {sum:e}, expected 0"),
            KernelBaseShape => write!(f, "kernel base must be square with zero diagonal"),
            KernelBaseNegative { row, col, value } => {
                write!(f, "kernel base entry ({row},{col}) = {value} is negative")
            }
            NegativeAlpha { alpha } => write!(f, "alpha = {alpha} must be nonnegative"),
            ReplicatorNegativeRate { node, value } => write!(
                f,
                "sampled rate x_i*f_i for node {node} is negative ({value}); kernel would be invalid"
            ),
            Config { field, reason } => write!(f, "invalid config field `{field}`: {reason}"),
            SwarmBaseInvalid { reason } => write!(f, "invalid swarm base matrix: {reason}"),
        }
    }
}

impl core::error::Error for ValidationError {}

/// Failures raised while advancing a trajectory in time.
#[derive(Debug, Clone, PartialEq)]
pub enum StepError {
    /// Simplex projection received a state with no positive coordinate.
    DegenerateState { t: f64 },
    /// A state or stage derivative stopped being finite.
    NonFinite { t: f64 },
    /// The input signal violated the zero-sum contract at time `t`.
    InputNotZeroSum { t: f64, sum: f64 },
    /// The integrator configuration failed validation.
    Config(ValidationError),
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::DegenerateState { t } => {
                write!(f, "projection failed at t={t}: no positive coordinate")
            }
            StepError::NonFinite { t } => write!(f, "non-finite state at t={t}"),
            StepError::InputNotZeroSum { t, sum } => {
                write!(f, "input signal at t={t} sums to {sum:e}, expected 0")
            }
            StepError::Config(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StepError {}

impl From<ValidationError> for StepError {
    fn from(e: ValidationError) -> Self {
        StepError::Config(e)
    }
}

/// Failures raised by equilibrium solvers and certificate assembly.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    /// The candidate point is not an equilibrium to the required tolerance.
    NotAnEquilibrium { residual: f64, tol: f64 },
    /// No positive detailed-balance reference exists: some channel carries
    /// positive weight one way and zero the other.
    OneDirectionalChannel { head: usize, tail: usize },
    /// Ratio propagation produced a vector that fails the balance check,
    /// i.e. the pairwise ratios are inconsistent across cycles.
    InconsistentRatios { max_residual: f64 },
    /// The support graph is not connected in the required mode, so the
    /// balance equations admit a continuum of solutions.
    DisconnectedSupport,
    /// The balance condition fails at the supplied reference.
    TgdbViolated { max_residual: f64 },
    /// Reduced Jacobian is singular at the current iterate.
    SingularReducedJacobian,
    /// Newton failed to reach the residual tolerance.
    MaxIterationsExceeded { iters: usize, residual: f64 },
    /// Damped backtracking could not keep the iterate interior.
    LeftDomain { min_coordinate: f64 },
    /// Kernel infimum over the support edges is not positive.
    KernelFloorNonPositive { q_bar: f64 },
    /// The compact-set floor must satisfy `0 < theta < min_i v_i`.
    InvalidOmegaFloor { theta: f64, v_min: f64 },
    /// The eigensolver did not converge.
    EigenFailed,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use AnalysisError::*;
        match self {
            NotAnEquilibrium { residual, tol } => write!(
                f,
                "point is not an equilibrium: |f|_inf = {residual:e} exceeds {tol:e}"
            ),
            OneDirectionalChannel { head, tail } => write!(
                f,
                "channel {tail}->{head} has no positive reverse entry; no positive balance reference exists"
            ),
            InconsistentRatios { max_residual } => write!(
                f,
                "pairwise ratios are inconsistent across cycles (max residual {max_residual:e}); no balance reference exists"
            ),
            DisconnectedSupport => write!(
                f,
                "support graph is disconnected: balance equations admit a continuum of equilibria, none selected"
            ),
            TgdbViolated { max_residual } => write!(
                f,
                "generalized detailed balance fails at the reference (max residual {max_residual:e})"
            ),
            SingularReducedJacobian => write!(f, "reduced Jacobian is singular"),
            MaxIterationsExceeded { iters, residual } => write!(
                f,
                "Newton did not converge in {iters} iterations (residual {residual:e})"
            ),
            LeftDomain { min_coordinate } => write!(
                f,
                "iterate left the open simplex despite damping (min coordinate {min_coordinate:e})"
            ),
            KernelFloorNonPositive { q_bar } => {
                write!(f, "kernel floor over support edges is {q_bar:e}, expected > 0")
            }
            InvalidOmegaFloor { theta, v_min } => write!(
                f,
                "floor theta = {theta} must lie in (0, min_i v_i) with min_i v_i = {v_min}"
            ),
            EigenFailed => write!(f, "eigensolver failed to converge"),
        }
    }
}

impl core::error::Error for AnalysisError {}
