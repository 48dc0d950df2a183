//! Ground-truth victim controllers: go-to-goal attraction with potential
//! field repulsion, and a dynamic-window velocity-space search.
//!
//! Callers are responsible for obstacle visibility: only obstacles the
//! victim actually detects (inside its sector) should be passed in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_to_pi, Vec2};
use crate::kinematics::{hand_transform, step_unicycle, Pose, RobotKind, VelocityCommand};

/// Potential-field controller parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApfParams {
    /// Repulsion gain.
    pub k_rep: f64,
    /// Influence radius: repulsion vanishes beyond this distance.
    pub rho0: f64,
    /// Attraction spring gain.
    pub k_attr: f64,
    /// Speed clamp applied to attraction and to the combined command.
    pub max_speed: f64,
    /// Turn-rate cap applied after the hand transform (non-holonomic only).
    #[serde(default = "default_turn_rate")]
    pub max_turn_rate: f64,
}

fn default_turn_rate() -> f64 {
    std::f64::consts::PI
}

impl Default for ApfParams {
    fn default() -> Self {
        ApfParams {
            k_rep: 2.0,
            rho0: 3.0,
            k_attr: 1.0,
            max_speed: 1.0,
            max_turn_rate: default_turn_rate(),
        }
    }
}

/// Dynamic-window controller parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwaParams {
    /// Weight of the goal-alignment term.
    pub beta_heading: f64,
    /// Weight of the obstacle-clearance term.
    pub beta_clearance: f64,
    /// Weight of the forward-speed term.
    pub beta_velocity: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Symmetric turn-rate window bound.
    pub omega_max: f64,
    pub v_samples: usize,
    pub omega_samples: usize,
    /// Rollout length in control periods.
    pub horizon_steps: usize,
    /// Linear acceleration limit (m/s per second).
    pub accel_v: f64,
    /// Angular acceleration limit (rad/s per second).
    pub accel_omega: f64,
    /// Collision margin added to obstacle radii.
    #[serde(default = "default_margin")]
    pub safety_margin: f64,
    /// Rollouts park once they reach this distance from the goal, so
    /// near-goal candidates are scored by their arrival state.
    #[serde(default = "default_goal_stop")]
    pub goal_stop_radius: f64,
    /// Clearance cap so that empty space saturates the distance term.
    #[serde(default = "default_ceiling")]
    pub clearance_ceiling: f64,
}

fn default_margin() -> f64 {
    0.1
}

fn default_goal_stop() -> f64 {
    0.3
}

fn default_ceiling() -> f64 {
    3.0
}

impl Default for DwaParams {
    fn default() -> Self {
        DwaParams {
            beta_heading: 0.25,
            beta_clearance: 0.55,
            beta_velocity: 0.2,
            // A positive floor keeps the robot from freezing in front of
            // an obstacle; avoidance must show up as a course change.
            v_min: 0.3,
            v_max: 1.0,
            omega_max: 1.6,
            v_samples: 7,
            omega_samples: 15,
            horizon_steps: 32,
            accel_v: 4.0,
            accel_omega: 8.0,
            safety_margin: default_margin(),
            goal_stop_radius: default_goal_stop(),
            clearance_ceiling: default_ceiling(),
        }
    }
}

/// A disc obstacle. Robots are treated as points, so the attacker enters
/// as a zero-radius member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec2,
    #[serde(default)]
    pub radius: f64,
}

impl Obstacle {
    pub fn point(center: Vec2) -> Self {
        Obstacle {
            center,
            radius: 0.0,
        }
    }
}

/// Repulsive velocity contribution of a single obstacle.
///
/// Zero beyond the influence radius; inside it the magnitude grows as the
/// robot closes in, directed from the obstacle toward the robot.
pub fn apf_repulsion(p: Vec2, p_obs: Vec2, params: &ApfParams) -> Result<Vec2> {
    let delta = p - p_obs;
    let rho = delta.norm();
    if rho < 1e-12 {
        return Err(Error::CoincidentObstacle(rho));
    }
    if rho > params.rho0 {
        return Ok(Vec2::ZERO);
    }
    let grad = delta / rho;
    let magnitude = params.k_rep * (1.0 / rho - 1.0 / params.rho0) / (rho * rho);
    Ok(grad * magnitude)
}

/// Combined attraction plus repulsion command for the victim.
///
/// The planar sum is clamped to `max_speed`; non-holonomic victims receive
/// it through the hand transform with `v` clamped non-negative and ω capped.
pub fn apf_control(
    p: Pose,
    kind: RobotKind,
    goal: Vec2,
    obstacles: &[Obstacle],
    params: &ApfParams,
) -> Result<VelocityCommand> {
    if !goal.is_finite() {
        return Err(Error::InvalidState(format!("goal {goal:?}")));
    }
    let attr = clamp_norm((goal - p.position()) * params.k_attr, params.max_speed);
    let mut total = attr;
    for obs in obstacles {
        total = total + apf_repulsion(p.position(), obs.center, params)?;
    }
    let u = clamp_norm(total, params.max_speed);
    match kind {
        RobotKind::Holonomic => Ok(VelocityCommand::Planar { vx: u.x, vy: u.y }),
        RobotKind::NonHolonomic { hand_offset } => {
            let VelocityCommand::Unicycle { v, omega } = hand_transform(p, hand_offset, u.x, u.y)?
            else {
                unreachable!()
            };
            Ok(VelocityCommand::Unicycle {
                v: v.clamp(0.0, params.max_speed),
                omega: omega.clamp(-params.max_turn_rate, params.max_turn_rate),
            })
        }
    }
}

fn clamp_norm(v: Vec2, cap: f64) -> Vec2 {
    let n = v.norm();
    if n > cap && n > 0.0 {
        v * (cap / n)
    } else {
        v
    }
}

/// Result of one dynamic-window decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwaDecision {
    pub command: VelocityCommand,
    /// True when every sampled rollout collided and the robot stops.
    pub emergency_stop: bool,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    v: f64,
    omega: f64,
    heading: f64,
    clearance: f64,
    velocity: f64,
}

/// Sample the reachable velocity window, roll each candidate out, score by
/// goal alignment, clearance and speed (each min-max normalized over the
/// candidate set), and return the best first-step command.
pub fn dwa_control(
    p: Pose,
    current: VelocityCommand,
    goal: Vec2,
    obstacles: &[Obstacle],
    params: &DwaParams,
    period: f64,
) -> Result<DwaDecision> {
    let VelocityCommand::Unicycle { v: v0, omega: w0 } = current else {
        return Err(Error::ContractViolation(
            "dynamic window requires a unicycle state".into(),
        ));
    };
    if period <= 0.0 || !period.is_finite() {
        return Err(Error::InvalidState(format!("period {period}")));
    }

    let (v_lo, v_hi, w_lo, w_hi) = dynamic_window(v0, w0, params, period);

    let mut survivors: Vec<Candidate> = Vec::with_capacity(params.v_samples * params.omega_samples);
    for iv in 0..params.v_samples {
        let v = lerp_sample(v_lo, v_hi, iv, params.v_samples);
        for iw in 0..params.omega_samples {
            let omega = lerp_sample(w_lo, w_hi, iw, params.omega_samples);
            if let Some(cand) = rollout(p, v, omega, goal, obstacles, params, period)? {
                survivors.push(cand);
            }
        }
    }

    if survivors.is_empty() {
        return Ok(DwaDecision {
            command: VelocityCommand::Unicycle { v: 0.0, omega: 0.0 },
            emergency_stop: true,
        });
    }

    let h_norm = min_max(survivors.iter().map(|c| c.heading));
    let c_norm = min_max(survivors.iter().map(|c| c.clearance));
    let v_norm = min_max(survivors.iter().map(|c| c.velocity));

    let mut best: Option<(f64, &Candidate)> = None;
    for cand in &survivors {
        let score = params.beta_heading * h_norm.apply(cand.heading)
            + params.beta_clearance * c_norm.apply(cand.clearance)
            + params.beta_velocity * v_norm.apply(cand.velocity);
        let better = match best {
            None => true,
            Some((best_score, best_cand)) => {
                if score > best_score + 1e-12 {
                    true
                } else if score < best_score - 1e-12 {
                    false
                } else {
                    // Deterministic tie-break: smaller |ω|, then larger v,
                    // then earlier sample.
                    let da = cand.omega.abs();
                    let db = best_cand.omega.abs();
                    da < db - 1e-12 || ((da - db).abs() <= 1e-12 && cand.v > best_cand.v + 1e-12)
                }
            }
        };
        if better {
            best = Some((score, cand));
        }
    }

    let (_, chosen) = best.expect("non-empty survivor set");
    Ok(DwaDecision {
        command: VelocityCommand::Unicycle {
            v: chosen.v,
            omega: chosen.omega,
        },
        emergency_stop: false,
    })
}

/// Normalized score terms of every surviving candidate, exposed for tests.
pub fn dwa_score_terms(
    p: Pose,
    current: VelocityCommand,
    goal: Vec2,
    obstacles: &[Obstacle],
    params: &DwaParams,
    period: f64,
) -> Result<Vec<[f64; 3]>> {
    let VelocityCommand::Unicycle { v: v0, omega: w0 } = current else {
        return Err(Error::ContractViolation("unicycle state required".into()));
    };
    let (v_lo, v_hi, w_lo, w_hi) = dynamic_window(v0, w0, params, period);
    let mut survivors = Vec::new();
    for iv in 0..params.v_samples {
        let v = lerp_sample(v_lo, v_hi, iv, params.v_samples);
        for iw in 0..params.omega_samples {
            let omega = lerp_sample(w_lo, w_hi, iw, params.omega_samples);
            if let Some(c) = rollout(p, v, omega, goal, obstacles, params, period)? {
                survivors.push(c);
            }
        }
    }
    let h = min_max(survivors.iter().map(|c| c.heading));
    let c = min_max(survivors.iter().map(|c| c.clearance));
    let v = min_max(survivors.iter().map(|c| c.velocity));
    Ok(survivors
        .iter()
        .map(|s| [h.apply(s.heading), c.apply(s.clearance), v.apply(s.velocity)])
        .collect())
}

fn rollout(
    p: Pose,
    v: f64,
    omega: f64,
    goal: Vec2,
    obstacles: &[Obstacle],
    params: &DwaParams,
    period: f64,
) -> Result<Option<Candidate>> {
    let cmd = VelocityCommand::Unicycle { v, omega };
    let mut pose = p;
    let mut clearance = f64::INFINITY;
    for _ in 0..params.horizon_steps {
        pose = step_unicycle(pose, cmd, period)?;
        for obs in obstacles {
            let gap = pose.position().dist(obs.center) - obs.radius - params.safety_margin;
            clearance = clearance.min(gap);
        }
        if pose.position().dist(goal) <= params.goal_stop_radius {
            break; // parked at the goal
        }
    }
    if clearance <= 0.0 {
        return Ok(None);
    }
    // Goal alignment is scored one control period ahead. Judging the
    // heading at the rollout end couples its resolution to the horizon
    // length, which leaves the robot unable to settle back onto a
    // straight goal line at practical sample counts.
    let to_goal = goal - p.position();
    let heading = if to_goal.norm() < 1e-12 {
        std::f64::consts::PI
    } else {
        let next_theta = p.theta + omega * period;
        std::f64::consts::PI - wrap_to_pi(to_goal.angle() - next_theta).abs()
    };
    Ok(Some(Candidate {
        v,
        omega,
        heading,
        clearance: clearance.min(params.clearance_ceiling),
        velocity: v.abs(),
    }))
}

/// Velocity window reachable within one period, clipped to the configured
/// ranges. The speed floor wins over the acceleration limit when they
/// conflict (startup from rest).
fn dynamic_window(v0: f64, w0: f64, params: &DwaParams, period: f64) -> (f64, f64, f64, f64) {
    let v_lo = (v0 - params.accel_v * period).max(params.v_min);
    let v_hi = (v0 + params.accel_v * period).min(params.v_max).max(v_lo);
    let w_lo = (w0 - params.accel_omega * period).max(-params.omega_max);
    let w_hi = (w0 + params.accel_omega * period).min(params.omega_max).max(w_lo);
    (v_lo, v_hi, w_lo, w_hi)
}

fn lerp_sample(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n <= 1 || hi <= lo {
        return lo.max(hi.min(lo));
    }
    lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
}

struct MinMax {
    lo: f64,
    hi: f64,
}

impl MinMax {
    fn apply(&self, x: f64) -> f64 {
        if self.hi - self.lo < 1e-15 {
            1.0
        } else {
            (x - self.lo) / (self.hi - self.lo)
        }
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> MinMax {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    MinMax { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn apf() -> ApfParams {
        ApfParams {
            k_rep: 1.0,
            rho0: 2.0,
            k_attr: 1.0,
            max_speed: 1.0,
            max_turn_rate: std::f64::consts::PI,
        }
    }

    #[test]
    fn repulsion_outside_influence_is_zero() {
        let u = apf_repulsion(Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0), &apf()).unwrap();
        assert_eq!(u, Vec2::ZERO);
    }

    #[test]
    fn repulsion_vanishes_at_boundary() {
        let u = apf_repulsion(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), &apf()).unwrap();
        assert_abs_diff_eq!(u.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn repulsion_hand_evaluation() {
        // ρ = 1, gain (1/1 - 1/2) = 0.5, gradient (-1, 0), /ρ² = 1.
        let u = apf_repulsion(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &apf()).unwrap();
        assert_abs_diff_eq!(u.x, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(u.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn repulsion_rejects_coincident_obstacle() {
        assert!(matches!(
            apf_repulsion(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0), &apf()),
            Err(Error::CoincidentObstacle(_))
        ));
    }

    #[test]
    fn control_zero_at_goal() {
        let cmd = apf_control(
            Pose::new(2.0, 3.0, 0.0),
            RobotKind::Holonomic,
            Vec2::new(2.0, 3.0),
            &[],
            &apf(),
        )
        .unwrap();
        assert_eq!(cmd, VelocityCommand::Planar { vx: 0.0, vy: 0.0 });
    }

    #[test]
    fn control_points_at_goal() {
        let cmd = apf_control(
            Pose::new(0.0, 0.0, 0.0),
            RobotKind::Holonomic,
            Vec2::new(0.0, 10.0),
            &[],
            &apf(),
        )
        .unwrap();
        let VelocityCommand::Planar { vx, vy } = cmd else {
            panic!()
        };
        assert_abs_diff_eq!(vx, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vy, 1.0, epsilon = 1e-12); // clamped at max_speed
    }

    #[test]
    fn obstacle_between_robot_and_goal_reduces_progress() {
        let goal = Vec2::new(4.0, 0.0);
        let free = apf_control(
            Pose::new(0.0, 0.0, 0.0),
            RobotKind::Holonomic,
            goal,
            &[],
            &apf(),
        )
        .unwrap();
        let blocked = apf_control(
            Pose::new(0.0, 0.0, 0.0),
            RobotKind::Holonomic,
            goal,
            &[Obstacle::point(Vec2::new(1.0, 0.0))],
            &apf(),
        )
        .unwrap();
        let toward = |c: VelocityCommand| {
            let (vx, vy) = c.channels();
            Vec2::new(vx, vy).dot(Vec2::new(1.0, 0.0))
        };
        assert!(toward(blocked) < toward(free));
    }

    fn dwa() -> DwaParams {
        DwaParams::default()
    }

    #[test]
    fn dwa_free_space_picks_straight_fast() {
        let decision = dwa_control(
            Pose::new(0.0, 0.0, 0.0),
            VelocityCommand::Unicycle { v: 1.0, omega: 0.0 },
            Vec2::new(50.0, 0.0),
            &[],
            &dwa(),
            0.1,
        )
        .unwrap();
        let VelocityCommand::Unicycle { v, omega } = decision.command else {
            panic!()
        };
        assert!(!decision.emergency_stop);
        assert_abs_diff_eq!(omega, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dwa_obstacle_ahead_forces_turn() {
        let decision = dwa_control(
            Pose::new(0.0, 0.0, 0.0),
            VelocityCommand::Unicycle { v: 1.0, omega: 0.0 },
            Vec2::new(50.0, 0.0),
            &[Obstacle::point(Vec2::new(1.0, 0.0))],
            &dwa(),
            0.1,
        )
        .unwrap();
        let VelocityCommand::Unicycle { omega, .. } = decision.command else {
            panic!()
        };
        assert!(omega.abs() > 1e-9, "expected avoidance turn, got ω={omega}");
    }

    #[test]
    fn dwa_degenerate_window_stops() {
        let mut params = dwa();
        params.v_min = 0.0;
        params.v_max = 0.0;
        params.omega_max = 0.0;
        let decision = dwa_control(
            Pose::new(0.0, 0.0, 0.0),
            VelocityCommand::Unicycle { v: 0.0, omega: 0.0 },
            Vec2::new(5.0, 0.0),
            &[],
            &params,
            0.1,
        )
        .unwrap();
        assert_eq!(
            decision.command,
            VelocityCommand::Unicycle { v: 0.0, omega: 0.0 }
        );
    }

    #[test]
    fn dwa_all_blocked_emergency_stops() {
        // Ring of obstacles immediately around the robot.
        let obstacles: Vec<Obstacle> = (0..16)
            .map(|i| {
                let a = i as f64 / 16.0 * std::f64::consts::TAU;
                Obstacle {
                    center: Vec2::from_angle(a) * 0.15,
                    radius: 0.1,
                }
            })
            .collect();
        let decision = dwa_control(
            Pose::new(0.0, 0.0, 0.0),
            VelocityCommand::Unicycle { v: 0.5, omega: 0.0 },
            Vec2::new(5.0, 0.0),
            &obstacles,
            &dwa(),
            0.1,
        )
        .unwrap();
        assert!(decision.emergency_stop);
        assert_eq!(
            decision.command,
            VelocityCommand::Unicycle { v: 0.0, omega: 0.0 }
        );
    }

    proptest! {
        #[test]
        fn repulsion_monotone_in_distance(rho1 in 0.05f64..2.0, shrink in 0.1f64..1.0) {
            let params = apf();
            let rho2 = rho1 * shrink;
            let u1 = apf_repulsion(Vec2::new(rho1, 0.0), Vec2::ZERO, &params).unwrap();
            let u2 = apf_repulsion(Vec2::new(rho2, 0.0), Vec2::ZERO, &params).unwrap();
            prop_assert!(u2.norm() >= u1.norm() - 1e-12);
        }

        #[test]
        fn repulsion_points_away(px in -2.0f64..2.0, py in -2.0f64..2.0) {
            prop_assume!(px.hypot(py) > 1e-3);
            let p = Vec2::new(px, py);
            let u = apf_repulsion(p, Vec2::ZERO, &apf()).unwrap();
            prop_assert!(u.dot(p) >= 0.0);
        }

        #[test]
        fn dwa_terms_normalized(ox in 0.5f64..4.0, oy in -2.0f64..2.0) {
            let terms = dwa_score_terms(
                Pose::new(0.0, 0.0, 0.0),
                VelocityCommand::Unicycle { v: 0.5, omega: 0.0 },
                Vec2::new(10.0, 0.0),
                &[Obstacle::point(Vec2::new(ox, oy))],
                &dwa(),
                0.1,
            ).unwrap();
            for t in terms {
                for x in t {
                    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&x));
                }
            }
        }

        #[test]
        fn dwa_weight_scaling_keeps_argmax(scale in 0.1f64..10.0,
                                           ox in 0.8f64..3.0, oy in -1.0f64..1.0) {
            let base = dwa();
            let mut scaled = base;
            scaled.beta_heading *= scale;
            scaled.beta_clearance *= scale;
            scaled.beta_velocity *= scale;
            let pose = Pose::new(0.0, 0.0, 0.2);
            let cur = VelocityCommand::Unicycle { v: 0.8, omega: 0.1 };
            let goal = Vec2::new(8.0, 1.0);
            let obs = [Obstacle::point(Vec2::new(ox, oy))];
            let a = dwa_control(pose, cur, goal, &obs, &base, 0.1).unwrap();
            let b = dwa_control(pose, cur, goal, &obs, &scaled, 0.1).unwrap();
            prop_assert_eq!(a.command, b.command);
        }
    }
}
