//! Two-velocity kinetic traffic model on a merge junction, its scalar LWR
//! limit, the coupling conditions linking both, and the boundary-layer
//! analysis that derives the macroscopic conditions from the kinetic ones.

pub mod diagram;
pub mod error;
pub mod junction;
pub mod kinetic;
pub mod layer;
pub mod lwr;
pub mod network;
pub mod scenario;

pub use diagram::FundamentalDiagram;
pub use error::{Error, Result};
