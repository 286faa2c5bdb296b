//! Coverage and connectivity of sensor deployments in a rectangle.
//!
//! A deployment is a set of sensors with sensing range `r_s` and
//! communication range `r_c` inside the closed region `[0, a] x [0, b]`.
//! The crate decides 1-coverage exactly, builds the communication graph,
//! enforces the minimum-spacing constraint, constructs routes that follow
//! the covering structure, and repairs spacing violations without losing
//! coverage. Around these sit seeded generators, a Monte Carlo harness and
//! the `covconn` command-line tool.
//!
//! With pairwise spacing at least `r_s`, region sides at least `r_s` and
//! full coverage, the communication graph is connected as soon as
//! `r_c >= sqrt(2 + sqrt(3)) * r_s`; see [`routing::bound_constant`].

pub mod cli;
pub mod commgraph;
pub mod coverage;
pub mod deployment;
pub mod experiments;
pub mod generate;
pub mod geometry;
pub mod intervals;
pub mod io;
pub mod redistribute;
pub mod routing;
mod spatial;

pub use commgraph::{
    build_graph, check_spacing, connectivity_margin, is_connected, CommGraph, SpacingReport, SpacingViolation,
};
pub use coverage::{check_coverage, is_point_covered, sample_coverage_oracle, CoverageReport};
pub use deployment::{Deployment, DeploymentError};
pub use experiments::{run_experiment, tightness_probe, ExperimentConfig, TrialRecord};
pub use generate::{generate, GenKind, GenSpec};
pub use geometry::{Point, Rectangle, Tolerance};
pub use redistribute::{max_packing_in_disk, redistribute, RedistributionResult, RedistributionStep};
pub use routing::{bound_constant, build_route, next_hop, MacroStep, RouteTrace, Router};
