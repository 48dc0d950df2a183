//! The attacker's sensing layer: finite-difference motion estimation from
//! three consecutive position samples, and reaction observation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_to_pi, Vec2};

/// Instantaneous motion estimate of the observed robot at one sample index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionEstimate {
    pub vx: f64,
    pub vy: f64,
    /// Speed over the latest window, `√(vx² + vy²)`.
    pub speed: f64,
    /// Displacement direction over the latest window.
    pub heading: f64,
    /// Speed change between the two windows divided by the window length.
    pub accel: f64,
    /// Heading change (wrapped) between the two windows divided by the
    /// window length.
    pub turn_rate: f64,
    /// Sample index of the newest position used.
    pub sample_index: u64,
    /// True when the latest window had zero displacement and the heading
    /// was carried over.
    pub heading_held: bool,
}

/// Reaction over one observation window: displacement magnitude and the
/// displacement-direction deviation from a nominal course.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionObservation {
    pub delta_s: f64,
    /// Wrapped into `(-π, π]`; zero for undisturbed straight motion.
    pub delta_theta: f64,
}

/// Estimate motion from three consecutive positions spaced `window` apart.
///
/// Velocities come from the latest difference; acceleration and turn rate
/// from the change between the two window estimates. A zero-displacement
/// window holds the previous window's heading and flags it.
pub fn estimate_motion(samples: &[Vec2], window: f64) -> Result<MotionEstimate> {
    if samples.len() != 3 {
        return Err(Error::InsufficientHistory(samples.len()));
    }
    if window <= 0.0 || !window.is_finite() {
        return Err(Error::InvalidState(format!("window {window}")));
    }
    for s in samples {
        if !s.is_finite() {
            return Err(Error::InvalidState(format!("sample {s:?}")));
        }
    }

    let d1 = samples[1] - samples[0];
    let d2 = samples[2] - samples[1];
    let v1 = d1.norm() / window;
    let v2 = d2.norm() / window;
    let theta1 = if d1.norm() > 1e-12 { d1.angle() } else { 0.0 };
    let (theta2, held) = if d2.norm() > 1e-12 {
        (d2.angle(), false)
    } else {
        (theta1, true)
    };

    Ok(MotionEstimate {
        vx: d2.x / window,
        vy: d2.y / window,
        speed: v2,
        heading: theta2,
        accel: (v2 - v1) / window,
        turn_rate: wrap_to_pi(theta2 - theta1) / window,
        sample_index: 0,
        heading_held: held,
    })
}

/// Displacement magnitude and direction deviation over one window,
/// measured against the supplied nominal course direction.
pub fn observe_reaction(p_start: Vec2, p_end: Vec2, nominal_direction: f64) -> ReactionObservation {
    let delta = p_end - p_start;
    let delta_s = delta.norm();
    let delta_theta = if delta_s > 1e-12 {
        wrap_to_pi(delta.angle() - nominal_direction)
    } else {
        0.0
    };
    ReactionObservation {
        delta_s,
        delta_theta,
    }
}

/// Deviation test: fires when the direction change exceeds the tolerance.
pub fn detect_deviation(obs: &ReactionObservation, tol: f64) -> bool {
    debug_assert!(tol > 0.0);
    obs.delta_theta.abs() > tol
}

/// Three-sample ring history owned by the attacker agent.
#[derive(Debug, Clone, Default)]
pub struct MotionTracker {
    history: Vec<Vec2>,
    next_index: u64,
    last: Option<MotionEstimate>,
}

impl MotionTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one position sample; returns the fresh estimate once three
    /// samples are available.
    pub fn push(&mut self, position: Vec2, window: f64) -> Option<MotionEstimate> {
        if self.history.len() == 3 {
            self.history.remove(0);
        }
        self.history.push(position);
        let index = self.next_index;
        self.next_index += 1;
        if self.history.len() < 3 {
            return None;
        }
        let mut est = estimate_motion(&self.history, window).ok()?;
        est.sample_index = index;
        // Zero displacement across the whole ring: keep the previous
        // estimate's heading rather than an arbitrary zero.
        if est.heading_held {
            if let Some(prev) = &self.last {
                if (self.history[1] - self.history[0]).norm() <= 1e-12 {
                    est.heading = prev.heading;
                }
            }
        }
        self.last = Some(est);
        Some(est)
    }

    pub fn last(&self) -> Option<&MotionEstimate> {
        self.last.as_ref()
    }

    pub fn latest_position(&self) -> Option<Vec2> {
        self.history.last().copied()
    }

    pub fn previous_position(&self) -> Option<Vec2> {
        if self.history.len() >= 2 {
            Some(self.history[self.history.len() - 2])
        } else {
            None
        }
    }

    pub fn reset(&mut self) {
        self.history.clear();
        self.last = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn uniform_straight_motion() {
        let est = estimate_motion(
            &[Vec2::new(0.0, 0.0), Vec2::new(0.1, 0.0), Vec2::new(0.2, 0.0)],
            0.1,
        )
        .unwrap();
        assert_abs_diff_eq!(est.speed, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.heading, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.accel, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.turn_rate, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn right_angle_turn() {
        let est = estimate_motion(
            &[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)],
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(est.speed, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.heading, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(est.accel, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.turn_rate, FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn quadrant_convention() {
        let est = estimate_motion(
            &[
                Vec2::new(0.0, 0.0),
                Vec2::new(-1.0, 0.0),
                Vec2::new(-2.0, 0.0),
            ],
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(est.heading, PI, epsilon = 1e-12);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            estimate_motion(&[Vec2::ZERO, Vec2::ZERO], 0.1),
            Err(Error::InsufficientHistory(2))
        ));
    }

    #[test]
    fn zero_displacement_holds_heading() {
        let est = estimate_motion(
            &[Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)],
            1.0,
        )
        .unwrap();
        assert!(est.heading_held);
        assert_abs_diff_eq!(est.heading, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(est.speed, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reaction_along_nominal_is_zero() {
        let obs = observe_reaction(Vec2::ZERO, Vec2::new(3.0, 4.0), (4.0f64).atan2(3.0));
        assert_abs_diff_eq!(obs.delta_s, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(obs.delta_theta, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reaction_unit_cases() {
        let a = observe_reaction(Vec2::ZERO, Vec2::new(1.0, 0.0), 0.0);
        assert_eq!((a.delta_s, a.delta_theta), (1.0, 0.0));
        let b = observe_reaction(Vec2::ZERO, Vec2::new(0.0, 1.0), 0.0);
        assert_abs_diff_eq!(b.delta_s, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.delta_theta, FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn zero_displacement_reaction() {
        let obs = observe_reaction(Vec2::new(2.0, 2.0), Vec2::new(2.0, 2.0), 1.0);
        assert_eq!((obs.delta_s, obs.delta_theta), (0.0, 0.0));
    }

    #[test]
    fn deviation_threshold() {
        let mk = |dt: f64| ReactionObservation {
            delta_s: 1.0,
            delta_theta: dt,
        };
        assert!(!detect_deviation(&mk(0.0), 1e-6));
        assert!(detect_deviation(&mk(0.3), 1e-6));
        assert!(!detect_deviation(&mk(5e-7), 1e-6));
    }

    #[test]
    fn tracker_needs_three_samples() {
        let mut tracker = MotionTracker::new();
        assert!(tracker.push(Vec2::new(0.0, 0.0), 0.1).is_none());
        assert!(tracker.push(Vec2::new(0.1, 0.0), 0.1).is_none());
        let est = tracker.push(Vec2::new(0.2, 0.0), 0.1).unwrap();
        assert_eq!(est.sample_index, 2);
        assert_abs_diff_eq!(est.speed, 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn reaction_translation_invariant(sx in -10.0f64..10.0, sy in -10.0f64..10.0,
                                          ex in -10.0f64..10.0, ey in -10.0f64..10.0,
                                          tx in -5.0f64..5.0, ty in -5.0f64..5.0,
                                          nominal in -3.0f64..3.0) {
            let shift = Vec2::new(tx, ty);
            let a = observe_reaction(Vec2::new(sx, sy), Vec2::new(ex, ey), nominal);
            let b = observe_reaction(Vec2::new(sx, sy) + shift, Vec2::new(ex, ey) + shift, nominal);
            prop_assert!((a.delta_s - b.delta_s).abs() < 1e-9);
            prop_assert!((a.delta_theta - b.delta_theta).abs() < 1e-9);
        }

        #[test]
        fn delta_theta_always_wrapped(ex in -10.0f64..10.0, ey in -10.0f64..10.0,
                                      nominal in -10.0f64..10.0) {
            let obs = observe_reaction(Vec2::ZERO, Vec2::new(ex, ey), nominal);
            prop_assert!(obs.delta_theta > -PI && obs.delta_theta <= PI);
            prop_assert!(obs.delta_s >= 0.0);
        }

        #[test]
        fn speed_consistency(ax in -5.0f64..5.0, ay in -5.0f64..5.0,
                             bx in -5.0f64..5.0, by in -5.0f64..5.0,
                             cx in -5.0f64..5.0, cy in -5.0f64..5.0) {
            let est = estimate_motion(
                &[Vec2::new(ax, ay), Vec2::new(bx, by), Vec2::new(cx, cy)],
                0.25,
            ).unwrap();
            prop_assert!((est.speed - (est.vx * est.vx + est.vy * est.vy).sqrt()).abs() < 1e-12);
        }
    }
}
