//! Reaction-model learning: dataset collection inside the learned sector,
//! feature assembly shared between training and deployment, and one-step
//! victim pose prediction.

pub mod model;
pub mod svr;

pub use model::{
    fit, load_model, predict, r_squared, save_model, AvoidanceModel, ResidualStats, Scaler,
};
pub use svr::{Kernel, SvrCore, SvrDiagnostics};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_to_pi, Vec2};
use crate::kinematics::{Pose, RobotKind};
use crate::perception::{MotionEstimate, MotionTracker};
use crate::probe::DetectionSector;
use crate::sim::Scene;

pub const FEATURE_DIM: usize = 6;
pub const OUTPUT_DIM: usize = 2;

/// One recorded reaction: the victim state and attacker placement at the
/// window start, and the observed displacement over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    /// `[heading deviation to goal, v1, v2, accel, range, bearing]`.
    pub q_in: [f64; FEATURE_DIM],
    /// `[displacement, course deviation]` over one window.
    pub q_out: [f64; OUTPUT_DIM],
}

/// Everything the attacker knows about the victim when predicting: the
/// observed posture (position and heading) plus the estimated motion.
#[derive(Debug, Clone)]
pub struct VictimView {
    pub position: Vec2,
    /// Observed posture heading; the frame for the bearing features.
    pub heading: f64,
    pub motion: MotionEstimate,
    pub kind: RobotKind,
}

/// Assemble the model features from relative geometry and the latest
/// motion estimate. The frame angles come from the observed posture; the
/// two velocity channels are (speed, turn rate) for non-holonomic victims
/// and the planar components for holonomic ones.
pub fn assemble_features(view: &VictimView, attacker: Vec2, goal: Vec2) -> [f64; FEATURE_DIM] {
    let bearing_goal = (goal - view.position).angle();
    let heading_dev = wrap_to_pi(view.heading - bearing_goal);
    let (v1, v2) = match view.kind {
        RobotKind::NonHolonomic { .. } => (view.motion.speed, view.motion.turn_rate),
        RobotKind::Holonomic => (view.motion.vx, view.motion.vy),
    };
    let rel = attacker - view.position;
    let range = rel.norm();
    let bearing = if range > 1e-12 {
        wrap_to_pi(rel.angle() - view.heading)
    } else {
        0.0
    };
    [heading_dev, v1, v2, view.motion.accel, range, bearing]
}

/// Predict the victim's pose one window ahead.
///
/// Placements outside the believed sector produce the no-reaction
/// prediction: a straight step toward the goal at the current speed.
/// In-sector placements go through the model; the predicted displacement
/// direction is the goal bearing plus the predicted course deviation.
pub fn predict_pose(
    model: &AvoidanceModel,
    view: &VictimView,
    attacker: Vec2,
    goal: Vec2,
    sector: &DetectionSector,
    window: f64,
) -> Result<Pose> {
    let bearing_goal = (goal - view.position).angle();
    if !sector.contains(view.position, view.heading, attacker) {
        let step = view.position + Vec2::from_angle(bearing_goal) * (view.motion.speed * window);
        return Ok(Pose::new(step.x, step.y, bearing_goal));
    }
    let q_in = assemble_features(view, attacker, goal);
    let out = predict(model, &q_in)?;
    let delta_s = out[0].max(0.0);
    let direction = bearing_goal + out[1];
    let next = view.position + Vec2::from_angle(direction) * delta_s;
    Ok(Pose::new(next.x, next.y, direction))
}

/// Collection session report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectOutcome {
    pub samples: Vec<TrainingSample>,
    pub trials: usize,
    pub reacted: usize,
}

/// Harass the victim from random feasible placements and record its
/// reactions.
///
/// Each trial chases a uniformly sampled pose in the sector (range within
/// `[safety_floor, sector.radius]`), records the features on arrival,
/// holds the placement for two windows and records the reaction. Trials
/// whose course deviation stays below `tol` are dropped. Runs until
/// `target` samples are stored or the trial budget is exhausted.
#[allow(clippy::too_many_arguments)]
pub fn collect_dataset(
    scene: &mut Scene,
    sector: &DetectionSector,
    goal: Vec2,
    safety_floor: f64,
    trial_limit: usize,
    target: usize,
    tol: f64,
    rng: &mut ChaCha12Rng,
) -> Result<CollectOutcome> {
    if trial_limit == 0 {
        return Err(Error::EmptyDataset { trials: 0 });
    }
    if sector.radius <= safety_floor {
        return Err(Error::EmptyDataset { trials: 0 });
    }
    let kind = scene.scenario().victim.kind;
    let window = scene.window_seconds();
    let mut tracker = MotionTracker::new();
    let mut samples = Vec::new();
    let mut trials = 0usize;

    while trials < trial_limit && samples.len() < target {
        trials += 1;
        let range = rng.random_range(safety_floor..sector.radius);
        let bearing = rng.random_range(sector.alpha_lo..sector.alpha_hi);

        // Chase the (moving) relative placement at the speed budget.
        let mut arrived = false;
        for _ in 0..400 {
            let pose = scene.victim_pose();
            let target_pos = pose.position() + Vec2::from_angle(pose.theta + bearing) * range;
            let here = scene.attacker_position();
            let hop = target_pos - here;
            let budget = scene.attacker_budget();
            if hop.norm() <= budget {
                scene.set_attacker(target_pos);
                arrived = true;
                break;
            }
            scene.set_attacker(here + hop.unit().expect("hop above budget") * budget);
            let episode = scene.episodes();
            scene.run_window()?;
            if scene.episodes() != episode {
                tracker.reset();
            }
            tracker.push(scene.victim_position(), window);
        }
        if !arrived {
            continue;
        }

        let Some(motion) = tracker.last().copied() else {
            // Not enough history yet; burn a window and retry.
            scene.run_window()?;
            tracker.push(scene.victim_position(), window);
            continue;
        };

        let view = VictimView {
            position: scene.victim_position(),
            heading: scene.victim_pose().theta,
            motion,
            kind,
        };
        let attacker = scene.attacker_position();
        let q_in = assemble_features(&view, attacker, goal);
        let bearing_goal = (goal - view.position).angle();

        // The placement is held for two windows. With position-then-
        // heading integration, the displacement magnitude responds in the
        // first window but the course change only shows in the second;
        // reading both gives the reaction to this placement rather than
        // to the previous one.
        let start = scene.victim_position();
        let episode = scene.episodes();
        scene.run_window()?;
        if scene.episodes() != episode {
            tracker.reset();
            continue;
        }
        let mid = scene.victim_position();
        tracker.push(mid, window);
        scene.run_window()?;
        if scene.episodes() != episode {
            tracker.reset();
            continue;
        }
        let end = scene.victim_position();
        tracker.push(end, window);

        let delta_s = start.dist(mid);
        let obs = crate::perception::observe_reaction(mid, end, bearing_goal);
        if obs.delta_theta.abs() > tol {
            samples.push(TrainingSample {
                q_in,
                q_out: [delta_s, obs.delta_theta],
            });
        }
    }

    if samples.is_empty() {
        return Err(Error::EmptyDataset { trials });
    }
    let reacted = samples.len();
    Ok(CollectOutcome {
        samples,
        trials,
        reacted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn view(heading: f64, speed: f64) -> VictimView {
        VictimView {
            position: Vec2::new(1.0, 1.0),
            heading,
            motion: MotionEstimate {
                vx: speed * heading.cos(),
                vy: speed * heading.sin(),
                speed,
                heading,
                accel: 0.0,
                turn_rate: 0.0,
                sample_index: 5,
                heading_held: false,
            },
            kind: RobotKind::NonHolonomic { hand_offset: 0.3 },
        }
    }

    #[test]
    fn features_zero_heading_deviation_on_course() {
        let goal = Vec2::new(1.0, 11.0); // straight up from (1,1)
        let v = view(std::f64::consts::FRAC_PI_2, 1.0);
        let q = assemble_features(&v, Vec2::new(1.0, 3.0), goal);
        assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-12); // aligned with goal
        assert_abs_diff_eq!(q[1], 1.0, epsilon = 1e-12); // speed channel
        assert_abs_diff_eq!(q[4], 2.0, epsilon = 1e-12); // range
        assert_abs_diff_eq!(q[5], 0.0, epsilon = 1e-12); // dead ahead
    }

    #[test]
    fn features_bearing_sign() {
        let goal = Vec2::new(11.0, 1.0);
        let v = view(0.0, 1.0);
        // Attacker to the victim's left (+y).
        let q = assemble_features(&v, Vec2::new(1.0, 2.5), goal);
        assert_abs_diff_eq!(q[5], std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn out_of_sector_prediction_is_straight_to_goal() {
        // A trivially constant model would predict a reaction; the sector
        // gate must bypass it.
        let samples: Vec<TrainingSample> = (0..30)
            .map(|i| TrainingSample {
                q_in: std::array::from_fn(|j| (i * 7 + j) as f64 * 0.01),
                q_out: [0.07, 0.5],
            })
            .collect();
        let model = fit(&samples, &Default::default(), 1).unwrap();
        let sector = DetectionSector::new(3.0, -1.0, 1.0);
        let v = view(0.0, 1.0);
        let goal = Vec2::new(11.0, 1.0);
        let far = Vec2::new(-5.0, -5.0);
        let predicted = predict_pose(&model, &v, far, goal, &sector, 0.1).unwrap();
        assert_abs_diff_eq!(predicted.x, 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(predicted.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn in_sector_prediction_applies_reaction() {
        let samples: Vec<TrainingSample> = (0..40)
            .map(|i| TrainingSample {
                q_in: std::array::from_fn(|j| ((i + j) % 5) as f64 * 0.1),
                q_out: [0.1, 0.4],
            })
            .collect();
        let model = fit(&samples, &Default::default(), 2).unwrap();
        let sector = DetectionSector::new(3.0, -1.0, 1.0);
        let v = view(0.0, 1.0);
        let goal = Vec2::new(11.0, 1.0);
        let ahead = Vec2::new(2.0, 1.0);
        let predicted = predict_pose(&model, &v, ahead, goal, &sector, 0.1).unwrap();
        // Constant model: displacement 0.1 rotated 0.4 rad off the goal line.
        let expect = Vec2::new(1.0, 1.0) + Vec2::from_angle(0.4) * 0.1;
        assert_abs_diff_eq!(predicted.x, expect.x, epsilon = 1e-3);
        assert_abs_diff_eq!(predicted.y, expect.y, epsilon = 1e-3);
    }
}
