//! Batched validity primitives for multi-robot motion planning.
//!
//! Robots are sphere-decomposed serial chains ([`model::RobotSpec`]). Their
//! motions are synchronized, timestep-indexed [`model::Path`]s. Two primitives
//! answer the validity questions planners ask:
//!
//! * [`validation::motion_validation`] returns whether a set of paths is free of
//!   obstacle, self and robot-robot collision. Configurations are packed into
//!   lane batches either spread over the motion ("rake") or consecutively
//!   ("linear"), and robot-obstacle work is either done first ("hierarchical")
//!   or interleaved per batch ("combined"), so that a witness collision is
//!   found as early as possible.
//! * [`validation::find_first_conflict`] returns the earliest robot-robot
//!   conflict using linear packing, so everything before the returned
//!   timestep is certified free.
//!
//! [`planners`] wires both into five multi-robot planners, and [`scenarios`]
//! generates the evaluation problems. The crate is `no_std` (it needs `alloc`).
#![no_std]
// lane loops index several parallel arrays by the same lane
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod collision;
pub mod kinematics;
pub mod math;
pub mod model;
pub mod planners;
pub mod reference;
pub mod scenarios;
pub mod validation;

pub use collision::{CollisionVerdict, EffortCounter};
pub use kinematics::{build_env_cache, fk_scalar, spheres_fk, ConfigurationBatch, Frame, SphereBatch, TransformedEnvironmentCache};
pub use model::{Configuration, Environment, Obstacle, Path, RobotSpec};
pub use validation::{
    find_first_conflict, motion_validation, oracle_first_conflict, oracle_validate, pack_cfg_batch, Backend, CheckOrder,
    Conflict, MotValStrategy, PackingStrategy,
};
