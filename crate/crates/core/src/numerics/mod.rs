//! Numerical building blocks: quadrature, special functions, grids, ODEs.

pub mod gamma;
pub mod grid;
pub mod hypergeometric;
pub mod jet;
pub mod linalg;
pub mod ode;
pub mod quadrature;
pub mod roots;

pub use grid::{cumulate, cumulative, default_nodes, Cumulative, CumulativeKind, CumulativeOutput, Evaluator, GridFunction, Tail};
pub use jet::Jet;
pub use quadrature::{integrate, Quadrature, Upper};
