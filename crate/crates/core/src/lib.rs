//! Circle homeomorphisms with break points.
//!
//! Arbitrary-precision tools for rotation numbers, dynamical partitions,
//! break-orbit algebra, ratio distortion and conjugacy estimation.

pub mod circle;
pub mod circlemaps;
pub mod conjugacy;
pub mod distortion;
pub mod dynpart;
pub mod numberth;
pub mod orbitalg;
pub mod real;

pub use circlemaps::{Break, BuiltMap, CircleMap, MapError, MapSpec, PiecewiseMap};
pub use conjugacy::{build_conjugacy, ConjugacyError, ConjugacyTable, SingularityProfile};
pub use dynpart::{DynamicalPartition, PartitionError};
pub use numberth::{ConvergentTable, NumberError, QuadSurd, RotationSpec};
pub use orbitalg::{Connection, OrbitError, OrbitReport, PointMap};
pub use real::Real;
