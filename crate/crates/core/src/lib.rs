//! Multi-agent path finding in continuous environments.
//!
//! A constraint-tree search ([`cecbs`]) resolves conflicts between agents
//! detected in continuous time ([`conflicts`]). Each agent is planned by a
//! constraint-aware RRT* ([`planner`]) whose polyline output is repaired for a
//! minimum turning angle and smoothed with B-splines ([`bspline`]). A discrete
//! grid CBS ([`baseline`]) and a seeded benchmark harness ([`experiments`])
//! are included for comparison runs.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod bspline;
pub mod cecbs;
pub mod conflicts;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod planner;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::{Point, Polyline, Rect, Segment};
