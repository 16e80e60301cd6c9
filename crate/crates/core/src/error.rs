use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("environment needs at least 2 states, got {0}")]
    TooFewStates(usize),

    #[error("goal {goal} out of range for {n_states} states")]
    GoalOutOfRange { goal: usize, n_states: usize },

    #[error("goal ({x}, {y}) outside a {width}x{height} lattice")]
    GoalOutOfBounds { x: usize, y: usize, width: usize, height: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("beta calibration impossible: {0}")]
    Calibration(String),

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("stationary system is singular")]
    SingularSystem,

    #[error("minimum stationary occupancy {min:e} at state {state} is below {threshold:e}")]
    LowOccupancy { min: f64, state: usize, threshold: f64 },

    #[error("diagonal weight {value:e} at state {state} is not strictly positive")]
    NonPositiveWeight { state: usize, value: f64 },

    #[error("requested {requested} features but at most {available} are available")]
    TooManyFeatures { requested: usize, available: usize },

    #[error("eigenvalue {0:e} is negative beyond tolerance")]
    NegativeEigenvalue(f64),

    #[error("trivial constant solution not found (smallest eigenvalue {lambda:e}, deviation {deviation:e})")]
    TrivialSolution { lambda: f64, deviation: f64 },

    #[error("least-squares system is rank deficient")]
    RankDeficient,
}
