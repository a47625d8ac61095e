//! Hybrid additive/subtractive process planning on voxel models.
//!
//! The planner works backwards: starting from the target model it removes
//! voxels with *erosions* (inverse AM deposits) and adds temporary support
//! voxels with *accretions* (inverse SM removals) until nothing is left.
//! Reversing that sequence gives a forward program that a hybrid machine
//! can execute, which [`replay`] verifies step by step.

pub mod error;
pub mod feasibility;
pub mod fixtures;
pub mod grid;
pub mod io;
pub mod nullifier;
pub mod presupport;
pub mod replay;
pub mod stability;
pub mod toolpath;
pub mod tools;

pub use error::{Error, Result};
pub use grid::{Dims, NoMask, Voxel, VoxelGrid, VoxelMask};
pub use nullifier::{plan, InverseOp, OpKind, Phase, PlanConfig, PlanSequence};
pub use replay::{forward_program, plan_statistics, replay, ForwardOp, ReplayReport};
pub use stability::StabilityMode;
pub use tools::{SmOrientation, ToolSpec};
