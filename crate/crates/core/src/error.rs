use crate::solver::Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("velocity norm {0:.3e} is below the singularity guard")]
    SingularVelocity(f64),
    #[error("horizontal velocity norm {0:.3e} is below the singularity guard (vertical flight)")]
    SingularVertical(f64),
    #[error("normal load factor n_z = {0:.3e} is too small to define a bank angle")]
    ZeroNormalLoad(f64),
    #[error("time {t} is outside the trajectory domain [0, {duration}]")]
    OutOfDomain { t: f64, duration: f64 },
    #[error("banded factorization hit a zero pivot at column {0}")]
    NumericalSingular(usize),
    #[error("start and goal coincide with equal heading")]
    DegenerateEndpoints,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial guess generation failed: {0}")]
    InitFailure(String),
    #[error("objective is not finite at the initial point")]
    NonFiniteObjective,
    #[error("no feasible trajectory after {} iterations", .0.report.iterations)]
    Infeasible(Box<Solution>),
}
