use std::fmt;

/// Pipeline stage, attached to errors raised while assembling a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Model,
    Operator,
    FundamentalSystem,
    Wronskian,
    Greens,
    Constant,
    Asymptotics,
    MonteCarlo,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Model => "model",
            Stage::Operator => "operator",
            Stage::FundamentalSystem => "fundamental_system",
            Stage::Wronskian => "wronskian",
            Stage::Greens => "greens",
            Stage::Constant => "gamma_constant",
            Stage::Asymptotics => "asymptotics",
            Stage::MonteCarlo => "montecarlo",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    NonConvergence { estimate: f64, error: f64 },
    #[error("divergent integral: {0}")]
    Divergence(String),
    #[error("tail error: {0}")]
    Tail(String),
    #[error("branch error: {0}")]
    Branch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("Wronskian W_{k} vanishes or changes sign near u = {u}")]
    SingularWronskian { k: usize, u: f64 },
    #[error("stability verification failed: {0}")]
    Stability(String),
    #[error("condition violated: {0}")]
    Condition(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid model: {0}")]
    Validation(String),
    #[error("ode integration failed: {0}")]
    Ode(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
    #[error("[{stage}] {source}")]
    Staged { stage: Stage, source: Box<Error> },
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        match self {
            e @ Error::Staged { .. } => e,
            e => Error::Staged {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Staged { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
