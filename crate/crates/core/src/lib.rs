//! Collision-aware geometric proxies for two-person motion.
//!
//! Human bodies are approximated by cylinders and cuboids rigidly attached to
//! skeleton segments. Surface samples of one person are tested for containment
//! in the other person's primitives, every colliding sample receives an
//! escape direction towards its antipodal point, and a frozen-target quadratic
//! loss built from those directions is pushed back onto joint positions.
//!
//! Module map:
//! - [`skeleton`]: joint tree, segment frames, rigid placement of proxies
//! - [`motion`]: two-person joint position sequences and their file formats
//! - [`primitives`]: containment, surface sampling, antipodal map, depth
//! - [`mesh`]: triangle meshes and OBJ ingestion
//! - [`fitting`]: proxy dimension fitting against a body mesh
//! - [`collision`]: per-frame inter-person collision reports
//! - [`guidance`]: escape directions, multi-region aggregation, collision loss
//! - [`resolve`]: gradient-descent penetration removal on joint positions
//! - [`metrics`]: sequence plausibility metrics and mesh containment oracles
//! - [`bench`]: timing harness against a vertex-distance baseline
//! - [`scenes`]: synthetic two-person interpenetration scenes

pub mod bench;
pub mod collision;
mod error;
pub mod fitting;
pub mod guidance;
pub mod mesh;
pub mod metrics;
pub mod motion;
pub mod primitives;
pub mod resolve;
pub mod scenes;
pub mod skeleton;
pub mod spatial;

pub use error::{Error, ErrorKind, Result};

/// 3D vector in meters, world or local frame depending on context.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrix; rotation frames store their axes as columns.
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Schema tag embedded in every JSON document this crate writes.
pub const SCHEMA_VERSION: &str = "proxycoll/1";
