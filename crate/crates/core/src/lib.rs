pub mod contour;
pub mod error;
pub mod fuss_catalan;
pub mod lve_expansion;
pub mod lvr_action;
pub mod matrix_core;
pub mod montecarlo;
pub mod partition_oracle;
pub mod quadrature;
pub mod scalar_maps;
pub mod verify;

pub use contour::KeyholeContour;
pub use error::{Error, Result};
pub use fuss_catalan::{FussCatalan, FussCatalanParams};
pub use lve_expansion::{AmplitudeEstimate, AmplitudeParams, LabeledTree, TruncatedSum, WeakeningVector};
pub use lvr_action::{ActionValue, JacobianReport};
pub use matrix_core::{Beta, CMatrix, EnsembleSpec, HermitianMatrix, SpectralData};
pub use partition_oracle::{FreeEnergy, Method, PartitionEstimate};
pub use scalar_maps::{Coupling, ScalarMaps};
pub use verify::{CriterionReport, RunOptions};
