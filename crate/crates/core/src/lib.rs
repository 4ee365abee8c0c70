//! Hybrid signed distance fields for soft shadows.
//!
//! A coarse SDF comes from jump flooding a voxelized scene; near surfaces
//! it is refined at higher resolution by ray tracing with temporal
//! accumulation, and the resulting fine SDF is sphere traced for soft
//! shadows. A distributed-ray-tracing reference renderer and image metrics
//! back the verification suites.

pub mod camera;
pub mod config;
pub mod geometry;
pub mod grid;
pub mod image;
pub mod jumpflood;
pub mod pipeline;
pub mod reference;
pub mod refine;
pub mod rng;
pub mod shadower;
pub mod voxelizer;
