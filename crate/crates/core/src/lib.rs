pub mod asymptotics;
pub mod error;
pub mod gerber_shiu;
pub mod greens;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod operator;
pub mod scalar;
pub mod selftest;

pub use error::{Error, Result, Stage};
pub use scalar::Real;

/// `f64` instances of the generic core.
pub type Model = model::RiskModel<f64>;
pub type Premium = model::PremiumFunction<f64>;
pub type Solution = gerber_shiu::GerberShiuSolution<f64>;
pub type Grid = numerics::grid::GridFunction<f64>;
pub type System = operator::fundamental::FundamentalSystem<f64>;
pub type Asymptote = asymptotics::AsymptoticForm<f64>;
