//! Rank-one systems as cutting-and-stacking schedules, symbolic blocks and
//! ordered Bratteli-Vershik path spaces, together with the telescoping and
//! spacer-replacement construction of an essentially expansive model and a
//! finite-depth checker for the isomorphism between the two.

pub mod adic;
pub mod error;
pub mod isomorphism;
pub mod num;
pub mod params;
pub mod symbolic;
pub mod transform;
pub mod word;

pub use adic::{AdicPath, Column, Diagram, Edge, Neighbor, Step};
pub use error::{Error, Result};
pub use isomorphism::{verify_iso, IsoContext, IsoReport, Mode};
pub use params::{Growth, ParamSchedule, Stage, Tail};
pub use transform::{build_expansive, telescope, ExpansiveModel, TelescopedSchedule};
pub use word::Word;
