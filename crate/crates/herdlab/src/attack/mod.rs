//! The attacker's planners and the geometry they rely on.

pub mod geometry;
pub mod planner;

pub use geometry::{
    classify_region, entry_point, inputs_epsilon_equivalent, pivot_sweep, side_of, trap_feasible,
    EntryPoint, EntryTiming, Region,
};
pub use planner::{run_attack, AttackOutcome, AttackerBelief, Predictor, Strategy, Termination};
