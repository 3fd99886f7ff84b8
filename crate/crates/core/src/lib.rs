//! Numerical laboratory for mapping class group dynamics on the SU(2)
//! character variety of a closed surface: twist flows, Dehn twist actions,
//! simultaneous Diophantine approximation, and the experiments built on them.

pub mod config;
pub(crate) mod dd;
pub mod diophantine;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod io;
pub mod mapping_class;
pub mod su2;
pub mod surface;

pub use error::{Error, Result};
pub use flow::CurveHandle;
pub use mapping_class::{MappingClass, TwistCurve, TwistGen};
pub use su2::UnitQuaternion;
pub use surface::{SurfaceRep, Word};
