pub mod error;
pub mod gibbs;
pub mod padic;
pub mod recursion;
pub mod sequence;
pub mod tree;
pub mod verify;
pub mod weight;

pub use error::{Error, Result};
pub use padic::{Norm, PadicContext, PadicNumber};
pub use recursion::{BoundaryField, EdgeCouplings, LogField, ModelParams};
pub use sequence::C0Vector;
pub use tree::CayleyTree;
pub use weight::{AffineValuation, Weight, WeightSpec};
