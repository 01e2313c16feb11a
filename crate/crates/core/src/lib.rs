//! Deterministic multi-agent driving-behavior simulation and benchmarking.
//!
//! One behavior-model interface serves ego planning, prediction of other
//! agents and forward simulation. Worlds step all agents simultaneously
//! from the same pre-step snapshot.

pub mod behaviors;
pub mod benchmark;
pub mod evaluators;
pub mod geometry;
pub mod map;
pub mod planners;
pub mod rng;
pub mod scenario;
pub mod world;
