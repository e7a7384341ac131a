//! Tracking labels over a theta-graph spanner while an evolver keeps
//! swapping nearby labels behind the scenes.
//!
//! - [`geometry`]: points, cones, bisector projections, spanning ratio
//! - [`spanner`]: theta-graph construction, cone routing, ratio certification
//! - [`world`]: true matching, hypothesis, evolver, cone oracle, distance
//! - [`tracker`]: randomized pursuit of labels at speed `c · t_θ`
//! - [`harness`]: replications, trajectory files, steady-state summaries

pub mod error;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod spanner;
pub mod tracker;
pub mod world;

pub use error::{Error, Result};
pub use geometry::{spanning_ratio, ConeSystem, Point};
pub use spanner::{ThetaGraph, VertexId};
pub use tracker::{Sample, TrackerConfig, Trajectory};
pub use world::{
    EvolverConfig, EvolverKind, GraphPos, Hypothesis, InitMode, LabelId, Matching, World,
};
