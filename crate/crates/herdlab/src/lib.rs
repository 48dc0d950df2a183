//! Deterministic 2-D laboratory for herding attacks on obstacle-avoiding
//! mobile robots.
//!
//! A victim robot runs a go-to-goal task with obstacle avoidance (potential
//! field or dynamic window). An attacker disguised as an obstacle first
//! learns the victim's detection sector and goal by staged trials, then
//! regresses the avoidance reaction with support vector machines, and
//! finally herds the victim into a preset trap with sampling-based
//! strategies that trade path length against attack effort. The analysis
//! side provides closed-form path-length envelopes for the herded
//! trajectories and feasibility tests for trap placement.

pub mod analysis;
pub mod attack;
pub mod avoidance;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod perception;
pub mod pipeline;
pub mod probe;
pub mod regression;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use geometry::Vec2;
pub use kinematics::{Pose, RobotKind, VelocityCommand};
