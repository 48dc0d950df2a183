//! Intentional learning: staged trials that bracket the victim's detection
//! sector, plus least-squares goal recovery from post-reaction tracks.


use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_to_pi, Vec2};
use crate::perception::{detect_deviation, observe_reaction};
use crate::sim::Scene;

/// Forward-facing detection region: radius plus a bearing range relative
/// to the robot heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSector {
    pub radius: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

impl DetectionSector {
    pub fn new(radius: f64, alpha_lo: f64, alpha_hi: f64) -> Self {
        DetectionSector {
            radius,
            alpha_lo,
            alpha_hi,
        }
    }

    /// Membership test for a point given the observer position and heading.
    pub fn contains(&self, observer: Vec2, heading: f64, point: Vec2) -> bool {
        let rel = point - observer;
        let dist = rel.norm();
        if dist > self.radius {
            return false;
        }
        if dist < 1e-12 {
            return true;
        }
        let bearing = wrap_to_pi(rel.angle() - heading);
        (self.alpha_lo..=self.alpha_hi).contains(&bearing)
    }
}

/// Chord of the victim's settled straight-line motion toward its goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSegment {
    pub anchor: Vec2,
    /// Unit direction of travel.
    pub direction: Vec2,
}

impl TrackSegment {
    pub fn new(anchor: Vec2, direction: Vec2) -> Result<Self> {
        let direction = direction
            .unit()
            .ok_or_else(|| Error::InvalidInput("zero-length track direction".into()))?;
        Ok(TrackSegment { anchor, direction })
    }

    /// Distance from a point to the track's carrier line.
    pub fn line_distance(&self, p: Vec2) -> f64 {
        self.direction.cross(p - self.anchor).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalEstimate {
    pub position: Vec2,
    /// Mean squared point-line distance over the tracks.
    pub residual: f64,
    pub accepted: bool,
}

/// Least-squares intersection of the track carrier lines.
///
/// Each track contributes one normal-form line equation; the stacked
/// system is solved through its 2x2 normal equations and the residual is
/// the mean squared line distance. Acceptance compares the residual with
/// the squared goal radius.
pub fn estimate_goal(tracks: &[TrackSegment], goal_radius: f64) -> Result<GoalEstimate> {
    if tracks.len() < 2 {
        return Err(Error::InsufficientData(tracks.len()));
    }
    // Normal equations of rows n_j . p = n_j . anchor_j.
    let mut a11 = 0.0;
    let mut a12 = 0.0;
    let mut a22 = 0.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for t in tracks {
        let n = t.direction.perp();
        let rhs = n.dot(t.anchor);
        a11 += n.x * n.x;
        a12 += n.x * n.y;
        a22 += n.y * n.y;
        b1 += n.x * rhs;
        b2 += n.y * rhs;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() < 1e-9 * (a11 + a22).max(1e-12) {
        return Err(Error::RankDeficient);
    }
    let position = Vec2::new((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
    let residual = tracks
        .iter()
        .map(|t| t.line_distance(position).powi(2))
        .sum::<f64>()
        / tracks.len() as f64;
    Ok(GoalEstimate {
        position,
        residual,
        accepted: residual <= goal_radius * goal_radius,
    })
}

/// Probe session knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Standoff decrement per radius trial.
    pub delta_d: f64,
    /// Bearing decrement per angle trial (radians).
    pub delta_alpha: f64,
    /// Starting standoff, assumed beyond any plausible detection radius.
    pub initial_standoff: f64,
    /// Abort distance for the radius probe.
    pub safety_floor: f64,
    /// Windows of straight motion required before a trial.
    pub quiet_windows: usize,
    /// Windows recorded for one post-reaction track chord.
    pub settle_windows: usize,
    /// Goal radius used by the acceptance flag of the goal estimate.
    pub goal_radius_accept: f64,
    /// Staging gap held outside the bracketed radius between trials.
    pub stage_margin: f64,
    /// Windows the reacting placement is held after a detection, so the
    /// recorded post-reaction track starts well off the old course.
    pub push_windows: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            delta_d: 0.1,
            delta_alpha: 2.0_f64.to_radians(),
            initial_standoff: 6.0,
            safety_floor: 0.3,
            quiet_windows: 3,
            settle_windows: 30,
            goal_radius_accept: 0.5,
            stage_margin: 0.15,
            push_windows: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub sector: DetectionSector,
    /// True when one or both sweeps found no silent bearing.
    pub degenerate: bool,
    pub tracks: Vec<TrackSegment>,
    pub goal: GoalEstimate,
    pub radius_trials: usize,
    pub angle_trials: usize,
}

/// Run the full intentional-learning session: radius, angles, goal.
pub fn run_probe(
    scene: &mut Scene,
    cfg: &ProbeConfig,
    tol: f64,
    rng: &mut ChaCha12Rng,
) -> Result<ProbeOutcome> {
    let _ = rng; // placement jitter is not needed; kept for interface parity
    let mut driver = Driver::new(scene, cfg, tol);
    let (radius, track1, radius_trials) = driver.learn_radius()?;
    let angles = driver.learn_angles(radius)?;
    let tracks = vec![track1, angles.track_hi, angles.track_lo];
    let goal = estimate_goal(&tracks, cfg.goal_radius_accept)?;
    Ok(ProbeOutcome {
        sector: DetectionSector::new(radius, angles.alpha_lo, angles.alpha_hi),
        degenerate: angles.degenerate,
        tracks,
        goal,
        radius_trials,
        angle_trials: angles.trials,
    })
}

/// Bracket the detection radius by closing in dead ahead of the victim.
/// The returned radius overestimates the truth by at most `delta_d`.
pub fn learn_detection_radius(
    scene: &mut Scene,
    cfg: &ProbeConfig,
    tol: f64,
) -> Result<(f64, TrackSegment, usize)> {
    Driver::new(scene, cfg, tol).learn_radius()
}

#[derive(Debug)]
pub struct AngleOutcome {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub degenerate: bool,
    pub track_hi: TrackSegment,
    pub track_lo: TrackSegment,
    pub trials: usize,
}

/// Sweep both sector edges at a bracketed radius.
pub fn learn_detection_angles(
    scene: &mut Scene,
    radius: f64,
    cfg: &ProbeConfig,
    tol: f64,
) -> Result<AngleOutcome> {
    Driver::new(scene, cfg, tol).learn_angles(radius)
}

struct Driver<'a> {
    scene: &'a mut Scene,
    cfg: ProbeConfig,
    tol: f64,
}

/// Windows allowed for chasing a staging pose or waiting for quiet before
/// the session is declared stuck.
const PATIENCE: usize = 4000;

impl<'a> Driver<'a> {
    fn new(scene: &'a mut Scene, cfg: &ProbeConfig, tol: f64) -> Self {
        Driver {
            scene,
            cfg: *cfg,
            tol,
        }
    }

    fn learn_radius(&mut self) -> Result<(f64, TrackSegment, usize)> {
        let mut trials = 0usize;
        let mut standoff = self.cfg.initial_standoff;
        loop {
            standoff -= self.cfg.delta_d;
            if standoff < self.cfg.safety_floor {
                return Err(Error::NoReaction {
                    floor: self.cfg.safety_floor,
                });
            }
            trials += 1;
            if self.trial(standoff, 0.0)? {
                let radius = standoff + self.cfg.delta_d;
                let track = self.record_track()?;
                return Ok((radius, track, trials));
            }
        }
    }

    fn learn_angles(&mut self, radius: f64) -> Result<AngleOutcome> {
        // Place just inside the bracketed radius so bearing is the only
        // membership gate; staging stays radially outside.
        let trial_dist = (radius - self.cfg.delta_d).max(self.cfg.safety_floor);
        let (alpha_hi, hi_degenerate, hi_trials) = self.sweep_edge(trial_dist, 1.0)?;
        let track_hi = self.record_track()?;
        let (alpha_lo, lo_degenerate, lo_trials) = self.sweep_edge(trial_dist, -1.0)?;
        let track_lo = self.record_track()?;
        Ok(AngleOutcome {
            alpha_lo,
            alpha_hi,
            degenerate: hi_degenerate || lo_degenerate,
            track_hi,
            track_lo,
            trials: hi_trials + lo_trials,
        })
    }

    /// Sweep one sector edge starting at ±90°. A silent first probe sweeps
    /// inward and returns the first reacting bearing; a reacting first
    /// probe sweeps outward and returns the last reacting bearing. Finding
    /// no silence out to ±180° flags the edge as degenerate at ±π.
    fn sweep_edge(&mut self, dist: f64, sign: f64) -> Result<(f64, bool, usize)> {
        let step = self.cfg.delta_alpha;
        let mut trials = 0usize;
        let mut bearing = sign * std::f64::consts::FRAC_PI_2;
        trials += 1;
        if self.trial(dist, bearing)? {
            // Reacting at 90°: the edge is at or beyond; push outward.
            loop {
                let next = bearing + sign * step;
                if next.abs() >= std::f64::consts::PI {
                    return Ok((sign * std::f64::consts::PI, true, trials));
                }
                trials += 1;
                if self.trial(dist, next)? {
                    bearing = next;
                } else {
                    return Ok((bearing, false, trials));
                }
            }
        }
        // Silent at 90°: close inward until the victim reacts.
        loop {
            bearing -= sign * step;
            if bearing * sign < -std::f64::consts::FRAC_PI_2 {
                return Err(Error::DegenerateSector);
            }
            trials += 1;
            if self.trial(dist, bearing)? {
                return Ok((bearing, false, trials));
            }
        }
    }

    /// One placement trial: stage outside the radius at the trial bearing,
    /// wait for straight motion, then hold the exact relative placement
    /// for two windows and watch for a course deviation.
    ///
    /// Two windows, because with sampling synchronized to control ticks
    /// the displacement direction shows a reaction one tick late.
    fn trial(&mut self, dist: f64, bearing: f64) -> Result<bool> {
        let stage_dist = dist + self.cfg.stage_margin + self.cfg.delta_d;
        'retry: loop {
            self.chase_relative(stage_dist, bearing)?;
            let nominal = self.wait_quiet(stage_dist, bearing)?;
            let mut reacted = false;
            for _ in 0..2 {
                self.place_relative(dist, bearing);
                let before = self.scene.victim_position();
                let episode = self.scene.episodes();
                self.scene.run_window()?;
                if self.scene.episodes() != episode {
                    continue 'retry; // respawn mid-trial, redo it
                }
                let obs = observe_reaction(before, self.scene.victim_position(), nominal);
                if detect_deviation(&obs, self.tol) {
                    reacted = true;
                    break;
                }
            }
            if reacted {
                // Keep blocking for a while, moving in close; the
                // follow-up track should start from a clearly displaced
                // position.
                let push_dist = (0.45 * dist).max(self.cfg.safety_floor + 0.1);
                for _ in 0..self.cfg.push_windows {
                    self.place_relative(push_dist, bearing);
                    let episode = self.scene.episodes();
                    self.scene.run_window()?;
                    if self.scene.episodes() != episode {
                        break;
                    }
                }
                self.retreat()?;
            }
            return Ok(reacted);
        }
    }

    /// Move toward the (moving) victim-relative pose at the speed budget.
    fn chase_relative(&mut self, dist: f64, bearing: f64) -> Result<()> {
        for _ in 0..PATIENCE {
            let target = self.relative_point(dist, bearing);
            let here = self.scene.attacker_position();
            let hop = target - here;
            let budget = self.scene.attacker_budget();
            if hop.norm() <= budget {
                self.scene.set_attacker(target);
                return Ok(());
            }
            self.scene
                .set_attacker(here + hop.unit().expect("hop > budget > 0") * budget);
            self.scene.run_window()?;
        }
        Err(Error::ContractViolation(
            "attacker could not reach staging pose".into(),
        ))
    }

    fn place_relative(&mut self, dist: f64, bearing: f64) {
        let p = self.relative_point(dist, bearing);
        self.scene.set_attacker(p);
    }

    fn relative_point(&self, dist: f64, bearing: f64) -> Vec2 {
        let pose = self.scene.victim_pose();
        pose.position() + Vec2::from_angle(pose.theta + bearing) * dist
    }

    /// Hold a staging pose until the victim's window displacement
    /// direction is stable; returns the settled direction.
    fn wait_quiet(&mut self, stage_dist: f64, bearing: f64) -> Result<f64> {
        let mut last_dir: Option<f64> = None;
        let mut streak = 0usize;
        for _ in 0..PATIENCE {
            self.place_relative(stage_dist, bearing);
            let before = self.scene.victim_position();
            let episode = self.scene.episodes();
            self.scene.run_window()?;
            if self.scene.episodes() != episode {
                last_dir = None;
                streak = 0;
                continue;
            }
            let delta = self.scene.victim_position() - before;
            let Some(dir) = delta.unit().map(|u| u.angle()) else {
                last_dir = None;
                streak = 0;
                continue;
            };
            if let Some(prev) = last_dir {
                if wrap_to_pi(dir - prev).abs() <= self.tol {
                    streak += 1;
                    if streak >= self.cfg.quiet_windows {
                        return Ok(dir);
                    }
                } else {
                    streak = 0;
                }
            }
            last_dir = Some(dir);
        }
        Err(Error::ContractViolation(
            "victim never settled to straight motion".into(),
        ))
    }

    /// Withdraw radially beyond the initial standoff after a reaction.
    fn retreat(&mut self) -> Result<()> {
        for _ in 0..PATIENCE {
            let here = self.scene.attacker_position();
            let victim = self.scene.victim_position();
            if here.dist(victim) >= self.cfg.initial_standoff {
                return Ok(());
            }
            let away = (here - victim)
                .unit()
                .unwrap_or_else(|| Vec2::new(1.0, 0.0));
            self.scene
                .set_attacker(here + away * self.scene.attacker_budget());
            self.scene.run_window()?;
        }
        Err(Error::ContractViolation("retreat did not complete".into()))
    }

    /// Keep the attacker at the withdrawal standoff as the victim moves.
    fn hold_far(&mut self) {
        let victim = self.scene.victim_position();
        let here = self.scene.attacker_position();
        let dir = (here - victim).unit().unwrap_or(Vec2::new(1.0, 0.0));
        self.scene
            .set_attacker(victim + dir * self.cfg.initial_standoff);
    }

    /// After the victim settles, record the chord of its straight motion.
    fn record_track(&mut self) -> Result<TrackSegment> {
        self.retreat()?;
        loop {
            let mut last_dir: Option<f64> = None;
            let mut streak = 0usize;
            let mut settled = false;
            for _ in 0..PATIENCE {
                self.hold_far();
                let before = self.scene.victim_position();
                let episode = self.scene.episodes();
                self.scene.run_window()?;
                if self.scene.episodes() != episode {
                    last_dir = None;
                    streak = 0;
                    continue;
                }
                let delta = self.scene.victim_position() - before;
                let Some(dir) = delta.unit().map(|u| u.angle()) else {
                    continue;
                };
                if let Some(prev) = last_dir {
                    if wrap_to_pi(dir - prev).abs() <= self.tol {
                        streak += 1;
                        if streak >= self.cfg.quiet_windows {
                            settled = true;
                            break;
                        }
                    } else {
                        streak = 0;
                    }
                }
                last_dir = Some(dir);
            }
            if !settled {
                return Err(Error::ContractViolation(
                    "victim never settled for track recording".into(),
                ));
            }

            let anchor = self.scene.victim_position();
            let episode = self.scene.episodes();
            let mut interrupted = false;
            for _ in 0..self.cfg.settle_windows {
                self.hold_far();
                self.scene.run_window()?;
                if self.scene.episodes() != episode {
                    interrupted = true;
                    break;
                }
            }
            if interrupted {
                continue; // respawned mid-chord, redo on the fresh episode
            }
            let chord = self.scene.victim_position() - anchor;
            if let Ok(track) = TrackSegment::new(anchor, chord) {
                return Ok(track);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn track(anchor: Vec2, dir: Vec2) -> TrackSegment {
        TrackSegment::new(anchor, dir).unwrap()
    }

    #[test]
    fn goal_from_two_exact_lines() {
        let tracks = vec![
            track(Vec2::new(0.0, 14.0), Vec2::new(1.0, 0.0)),
            track(Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0)),
        ];
        let est = estimate_goal(&tracks, 0.5).unwrap();
        assert_abs_diff_eq!(est.position.x, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.position.y, 14.0, epsilon = 1e-9);
        assert!(est.residual <= 1e-18);
        assert!(est.accepted);
    }

    #[test]
    fn goal_from_three_concurrent_lines() {
        let dirs = [0.3f64, 1.4, 2.6];
        let tracks: Vec<_> = dirs
            .iter()
            .map(|&a| track(Vec2::from_angle(a) * -5.0, Vec2::from_angle(a)))
            .collect();
        let est = estimate_goal(&tracks, 0.5).unwrap();
        assert_abs_diff_eq!(est.position.x, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.position.y, 0.0, epsilon = 1e-9);
        assert!(est.residual <= 1e-18);
    }

    #[test]
    fn parallel_tracks_are_rank_deficient() {
        let tracks = vec![
            track(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)),
            track(Vec2::new(0.0, 2.0), Vec2::new(1.0, 0.0)),
        ];
        assert!(matches!(
            estimate_goal(&tracks, 0.5),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn single_track_is_insufficient() {
        let tracks = vec![track(Vec2::ZERO, Vec2::new(1.0, 0.0))];
        assert!(matches!(
            estimate_goal(&tracks, 0.5),
            Err(Error::InsufficientData(1))
        ));
    }

    #[test]
    fn acceptance_flag_uses_squared_radius() {
        // Two crossing lines plus one offset line produce a residual.
        let tracks = vec![
            track(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)),
            track(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)),
            track(Vec2::new(0.0, 0.3), Vec2::new(1.0, 1.0)),
        ];
        let est = estimate_goal(&tracks, 0.05).unwrap();
        assert!(est.residual > 0.05 * 0.05);
        assert!(!est.accepted);
    }

    #[test]
    fn sector_membership() {
        let sector = DetectionSector::new(3.0, -1.0, 1.0);
        let me = Vec2::ZERO;
        assert!(sector.contains(me, 0.0, Vec2::new(2.0, 0.0)));
        assert!(!sector.contains(me, 0.0, Vec2::new(3.5, 0.0)));
        assert!(!sector.contains(me, 0.0, Vec2::new(0.0, 2.0))); // bearing π/2
        assert!(sector.contains(me, std::f64::consts::FRAC_PI_2, Vec2::new(0.0, 2.0)));
        // Boundary distance counts as inside.
        assert!(sector.contains(me, 0.0, Vec2::new(3.0, 0.0)));
    }
}
