pub mod baseline;
pub mod bench;
pub mod calibration;
pub mod closed_form;
pub mod dataset;
pub mod error;
pub mod heuristic;
pub mod lp;
pub mod mechanism;
pub mod real;
pub mod simplex;
pub mod subsets;
pub mod types;

pub use error::{Error, Result};
pub use real::Real;
pub use subsets::SubsetIndex;
pub use types::{AttributeSchema, DistortionSpec, MechanismReport, Method, PrivacyBudget, SpecKind};
