//! Discrete-time motion models for both robot kinds and the hand-position
//! transform that turns planar velocity targets into unicycle commands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Vec2};

/// Planar position plus heading. Heading is kept normalized to `[0, 2π)`
/// after every update; for holonomic robots it is a synthetic value (the
/// last displacement direction) retained for logging and features only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading_vector(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Generalized velocity command: `(v, ω)` for unicycles, `(vx, vy)` for
/// holonomic robots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityCommand {
    Unicycle { v: f64, omega: f64 },
    Planar { vx: f64, vy: f64 },
}

impl VelocityCommand {
    pub fn zero_for(kind: RobotKind) -> Self {
        match kind {
            RobotKind::NonHolonomic { .. } => VelocityCommand::Unicycle { v: 0.0, omega: 0.0 },
            RobotKind::Holonomic => VelocityCommand::Planar { vx: 0.0, vy: 0.0 },
        }
    }

    /// The two scalar channels in storage order (v, ω) or (vx, vy).
    pub fn channels(&self) -> (f64, f64) {
        match *self {
            VelocityCommand::Unicycle { v, omega } => (v, omega),
            VelocityCommand::Planar { vx, vy } => (vx, vy),
        }
    }

    pub fn is_finite(&self) -> bool {
        let (a, b) = self.channels();
        a.is_finite() && b.is_finite()
    }
}

/// Robot kind. Non-holonomic robots carry the hand-point offset `L > 0`
/// used by the planar-to-unicycle transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RobotKind {
    NonHolonomic { hand_offset: f64 },
    Holonomic,
}

impl RobotKind {
    pub fn is_holonomic(&self) -> bool {
        matches!(self, RobotKind::Holonomic)
    }
}

/// One Euler step of the unicycle model: position advances along the old
/// heading, then the heading integrates ω.
pub fn step_unicycle(p: Pose, cmd: VelocityCommand, period: f64) -> Result<Pose> {
    let VelocityCommand::Unicycle { v, omega } = cmd else {
        return Err(Error::ContractViolation(
            "planar command fed to a unicycle".into(),
        ));
    };
    check_finite(p, cmd, period)?;
    Ok(Pose::new(
        p.x + v * p.theta.cos() * period,
        p.y + v * p.theta.sin() * period,
        p.theta + omega * period,
    ))
}

/// One Euler step of the holonomic model. The synthetic heading is set to
/// the displacement direction when moving, otherwise left unchanged.
pub fn step_holonomic(p: Pose, cmd: VelocityCommand, period: f64) -> Result<Pose> {
    let VelocityCommand::Planar { vx, vy } = cmd else {
        return Err(Error::ContractViolation(
            "unicycle command fed to a holonomic robot".into(),
        ));
    };
    check_finite(p, cmd, period)?;
    let speed_sq = vx * vx + vy * vy;
    let theta = if speed_sq > 0.0 { vy.atan2(vx) } else { p.theta };
    Ok(Pose::new(p.x + vx * period, p.y + vy * period, theta))
}

/// Invert the hand-point velocity map: given a planar velocity target
/// `(ux, uy)` for the point a distance `hand_offset` ahead of the robot,
/// produce the unicycle command realizing it exactly.
pub fn hand_transform(p: Pose, hand_offset: f64, ux: f64, uy: f64) -> Result<VelocityCommand> {
    if hand_offset <= 0.0 || !hand_offset.is_finite() {
        return Err(Error::SingularTransform(hand_offset));
    }
    let (sin_t, cos_t) = p.theta.sin_cos();
    Ok(VelocityCommand::Unicycle {
        v: cos_t * ux + sin_t * uy,
        omega: (-sin_t * ux + cos_t * uy) / hand_offset,
    })
}

/// Forward hand-point velocity map, the inverse pair of [`hand_transform`].
pub fn hand_forward(p: Pose, hand_offset: f64, cmd: VelocityCommand) -> Result<(f64, f64)> {
    let VelocityCommand::Unicycle { v, omega } = cmd else {
        return Err(Error::ContractViolation(
            "hand_forward expects a unicycle command".into(),
        ));
    };
    if hand_offset <= 0.0 {
        return Err(Error::SingularTransform(hand_offset));
    }
    let (sin_t, cos_t) = p.theta.sin_cos();
    Ok((
        cos_t * v - hand_offset * sin_t * omega,
        sin_t * v + hand_offset * cos_t * omega,
    ))
}

/// Generalized state update dispatching on the robot kind.
pub fn step(p: Pose, kind: RobotKind, cmd: VelocityCommand, period: f64) -> Result<Pose> {
    match (kind, cmd) {
        (RobotKind::NonHolonomic { .. }, VelocityCommand::Unicycle { .. }) => {
            step_unicycle(p, cmd, period)
        }
        (RobotKind::Holonomic, VelocityCommand::Planar { .. }) => step_holonomic(p, cmd, period),
        _ => Err(Error::ContractViolation(format!(
            "command {cmd:?} does not match robot kind {kind:?}"
        ))),
    }
}

fn check_finite(p: Pose, cmd: VelocityCommand, period: f64) -> Result<()> {
    if !p.is_finite() || !cmd.is_finite() || !period.is_finite() || period <= 0.0 {
        return Err(Error::InvalidState(format!(
            "pose {p:?}, command {cmd:?}, period {period}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn uni(v: f64, omega: f64) -> VelocityCommand {
        VelocityCommand::Unicycle { v, omega }
    }

    fn planar(vx: f64, vy: f64) -> VelocityCommand {
        VelocityCommand::Planar { vx, vy }
    }

    #[test]
    fn unicycle_straight_line() {
        let p = step_unicycle(Pose::new(0.0, 0.0, 0.0), uni(1.0, 0.0), 0.1).unwrap();
        assert_abs_diff_eq!(p.x, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.theta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn unicycle_axis_aligned_heading() {
        let p = step_unicycle(Pose::new(0.0, 0.0, FRAC_PI_2), uni(1.0, 0.0), 0.1).unwrap();
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.theta, FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn unicycle_pure_rotation() {
        let p = step_unicycle(Pose::new(0.0, 0.0, 0.0), uni(0.0, 1.0), 0.1).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert_abs_diff_eq!(p.theta, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn holonomic_componentwise() {
        let p = step_holonomic(Pose::new(0.0, 0.0, 0.0), planar(1.0, 1.0), 0.5).unwrap();
        assert_abs_diff_eq!(p.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.theta, FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn holonomic_zero_velocity_keeps_pose() {
        let p = step_holonomic(Pose::new(3.0, 4.0, 1.2), planar(0.0, 0.0), 1.0).unwrap();
        assert_eq!((p.x, p.y), (3.0, 4.0));
        assert_abs_diff_eq!(p.theta, 1.2, epsilon = 1e-15);
    }

    #[test]
    fn holonomic_heading_from_atan2() {
        let p = step_holonomic(Pose::new(0.0, 0.0, 0.0), planar(-1.0, 0.0), 1.0).unwrap();
        assert_abs_diff_eq!(p.x, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.theta, PI, epsilon = 1e-15);
    }

    #[test]
    fn hand_transform_identity_row() {
        let cmd = hand_transform(Pose::new(0.0, 0.0, 0.0), 1.0, 1.0, 0.0).unwrap();
        assert_eq!(cmd, uni(1.0, 0.0));
    }

    #[test]
    fn hand_transform_lateral_maps_to_rotation() {
        let cmd = hand_transform(Pose::new(0.0, 0.0, 0.0), 1.0, 0.0, 1.0).unwrap();
        assert_eq!(cmd, uni(0.0, 1.0));
    }

    #[test]
    fn hand_transform_matrix_evaluation() {
        // Direct evaluation at θ = π/2, L = 0.5, u = (0, 1):
        // v = cos·0 + sin·1 = 1, ω = (-sin·0 + cos·1)/L = 0.
        let cmd = hand_transform(Pose::new(0.0, 0.0, FRAC_PI_2), 0.5, 0.0, 1.0).unwrap();
        let VelocityCommand::Unicycle { v, omega } = cmd else {
            panic!()
        };
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(omega, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_transform_rejects_zero_offset() {
        assert!(matches!(
            hand_transform(Pose::new(0.0, 0.0, 0.0), 0.0, 1.0, 0.0),
            Err(Error::SingularTransform(_))
        ));
    }

    #[test]
    fn step_dispatch() {
        let hol = step(
            Pose::new(0.0, 0.0, 0.0),
            RobotKind::Holonomic,
            planar(2.0, 0.0),
            0.1,
        )
        .unwrap();
        assert_abs_diff_eq!(hol.x, 0.2, epsilon = 1e-15);

        let non = step(
            Pose::new(0.0, 0.0, 0.0),
            RobotKind::NonHolonomic { hand_offset: 0.2 },
            uni(1.0, PI),
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(non.x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(non.theta, PI, epsilon = 1e-12);
        assert!(non.theta < TAU && non.theta >= 0.0);
    }

    #[test]
    fn step_rejects_kind_mismatch() {
        assert!(matches!(
            step(
                Pose::new(0.0, 0.0, 0.0),
                RobotKind::NonHolonomic { hand_offset: 0.2 },
                planar(1.0, 0.0),
                0.1,
            ),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(step_unicycle(Pose::new(f64::NAN, 0.0, 0.0), uni(1.0, 0.0), 0.1).is_err());
        assert!(step_holonomic(Pose::new(0.0, 0.0, 0.0), planar(f64::INFINITY, 0.0), 0.1).is_err());
    }

    proptest! {
        #[test]
        fn heading_stays_normalized(theta in -20.0f64..20.0, omega in -10.0f64..10.0,
                                    v in -2.0f64..2.0, dt in 1e-3f64..1.0) {
            let p = step_unicycle(Pose::new(0.0, 0.0, theta), uni(v, omega), dt).unwrap();
            prop_assert!((0.0..TAU).contains(&p.theta));
        }

        #[test]
        fn zero_command_is_position_fixed_point(x in -5.0f64..5.0, y in -5.0f64..5.0,
                                                theta in 0.0f64..TAU) {
            let p0 = Pose::new(x, y, theta);
            let p1 = step_unicycle(p0, uni(0.0, 0.0), 0.3).unwrap();
            prop_assert_eq!((p1.x, p1.y), (x, y));
            let p2 = step_holonomic(p0, planar(0.0, 0.0), 0.3).unwrap();
            prop_assert_eq!((p2.x, p2.y), (x, y));
        }

        #[test]
        fn holonomic_step_splitting_is_exact(x in -5.0f64..5.0, y in -5.0f64..5.0,
                                             vx in -2.0f64..2.0, vy in -2.0f64..2.0) {
            let p0 = Pose::new(x, y, 0.0);
            let dt = 0.25;
            let full = step_holonomic(p0, planar(vx, vy), dt).unwrap();
            let half = step_holonomic(
                step_holonomic(p0, planar(vx, vy), dt / 2.0).unwrap(),
                planar(vx, vy),
                dt / 2.0,
            ).unwrap();
            prop_assert!((full.x - half.x).abs() < 1e-12);
            prop_assert!((full.y - half.y).abs() < 1e-12);
        }

        #[test]
        fn unicycle_splitting_error_shrinks_quadratically(
            theta in 0.0f64..TAU, v in 0.1f64..2.0, omega in 0.2f64..3.0) {
            let p0 = Pose::new(0.0, 0.0, theta);
            let err = |dt: f64| {
                let full = step_unicycle(p0, uni(v, omega), dt).unwrap();
                let half = step_unicycle(
                    step_unicycle(p0, uni(v, omega), dt / 2.0).unwrap(),
                    uni(v, omega),
                    dt / 2.0,
                ).unwrap();
                full.position().dist(half.position())
            };
            let e1 = err(0.2);
            let e2 = err(0.1);
            // Halving the period shrinks the splitting gap ~4x; allow slack.
            prop_assert!(e2 <= e1 / 3.0 + 1e-12);
        }

        #[test]
        fn unicycle_translation_splitting_is_exact(theta in 0.0f64..TAU, v in -2.0f64..2.0) {
            let p0 = Pose::new(1.0, -2.0, theta);
            let dt = 0.4;
            let full = step_unicycle(p0, uni(v, 0.0), dt).unwrap();
            let half = step_unicycle(
                step_unicycle(p0, uni(v, 0.0), dt / 2.0).unwrap(),
                uni(v, 0.0),
                dt / 2.0,
            ).unwrap();
            prop_assert!((full.x - half.x).abs() < 1e-12);
            prop_assert!((full.y - half.y).abs() < 1e-12);
        }

        #[test]
        fn hand_round_trip(theta in 0.0f64..TAU, l in 0.05f64..3.0,
                           ux in -2.0f64..2.0, uy in -2.0f64..2.0) {
            let p = Pose::new(0.0, 0.0, theta);
            let cmd = hand_transform(p, l, ux, uy).unwrap();
            let (rx, ry) = hand_forward(p, l, cmd).unwrap();
            prop_assert!((rx - ux).abs() < 1e-12);
            prop_assert!((ry - uy).abs() < 1e-12);
        }
    }
}
