//! Quipus for temperature-1 tile assembly systems: a finite automaton whose
//! rooted walks spell out the assembly paths of the maximal assembly, built by
//! feeding ultimately periodic candidate paths one at a time.

pub mod filtration;
pub mod path_algebra;
pub mod quipu;
pub mod regions_cogrow;
pub mod semilinear;
pub mod tas_core;

#[doc(hidden)]
pub mod testdata;

pub use path_algebra::{Direction, FreePath, GroundedPath, UltimatelyPeriodic, Vec2};
pub use semilinear::{SemiLinearSet, SemiLinearTerm};
pub use tas_core::{Assembly, Tas, TileId, Window};
