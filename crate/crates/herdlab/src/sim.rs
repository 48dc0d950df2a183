//! The deterministic simulation clock.
//!
//! The victim integrates every control period T; the attacker observes and
//! acts only at window boundaries (every `window_ticks` periods). The
//! attacker position is piecewise-constant within a window.

use crate::avoidance::{apf_control, dwa_control, Obstacle};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::kinematics::{step, Pose, VelocityCommand};
use crate::scenario::{ControllerConfig, Scenario};

/// What happens when the victim reaches its goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalPolicy {
    /// Teleport back to the start pose and begin a fresh episode
    /// (probing and data collection keep the victim available).
    Respawn,
    /// Freeze; the run is over (attack sessions).
    Stop,
}

#[derive(Debug, Clone)]
pub struct VictimState {
    pub pose: Pose,
    pub last_cmd: VelocityCommand,
    pub emergency_stops: u64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    victim: VictimState,
    attacker: Vec2,
    scenario: Scenario,
    policy: ArrivalPolicy,
    tick: u64,
    episodes: u64,
    arrived: bool,
    /// Latched per tick: the victim entered the trap region. A trapped
    /// victim stays put.
    captured: bool,
    /// Command applied at the first tick of the most recent window.
    last_window_cmd: VelocityCommand,
}

impl Scene {
    pub fn new(scenario: &Scenario, policy: ArrivalPolicy) -> Self {
        let kind = scenario.victim.kind;
        Scene {
            victim: VictimState {
                pose: scenario.victim.start,
                last_cmd: VelocityCommand::zero_for(kind),
                emergency_stops: 0,
            },
            attacker: scenario.attacker.start,
            scenario: scenario.clone(),
            policy,
            tick: 0,
            episodes: 0,
            arrived: false,
            captured: false,
            last_window_cmd: VelocityCommand::zero_for(kind),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn victim_pose(&self) -> Pose {
        self.victim.pose
    }

    pub fn victim_position(&self) -> Vec2 {
        self.victim.pose.position()
    }

    pub fn victim_command(&self) -> VelocityCommand {
        self.victim.last_cmd
    }

    pub fn last_window_command(&self) -> VelocityCommand {
        self.last_window_cmd
    }

    pub fn attacker_position(&self) -> Vec2 {
        self.attacker
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn arrived(&self) -> bool {
        self.arrived
    }

    /// True once the victim has entered the trap region (checked every
    /// control tick, not just at window boundaries).
    pub fn captured(&self) -> bool {
        self.captured
    }

    /// Window length in seconds.
    pub fn window_seconds(&self) -> f64 {
        self.scenario.window()
    }

    /// Farthest the attacker may move in one window.
    pub fn attacker_budget(&self) -> f64 {
        self.scenario.attacker.speed_ratio * self.scenario.victim.max_speed * self.window_seconds()
    }

    /// Reposition the attacker at a window boundary. Callers enforce
    /// their own speed budgets; the scene only keeps the clock honest.
    pub fn set_attacker(&mut self, p: Vec2) {
        self.attacker = p;
    }

    /// Ground-truth sector membership for a point.
    pub fn in_true_sector(&self, p: Vec2) -> bool {
        self.scenario
            .victim
            .sector
            .contains(self.victim.pose.position(), self.victim.pose.theta, p)
    }

    fn visible_obstacles(&self, victim: &VictimState, attacker: Vec2) -> Vec<Obstacle> {
        let sector = &self.scenario.victim.sector;
        let pos = victim.pose.position();
        let heading = victim.pose.theta;
        let mut visible: Vec<Obstacle> = self
            .scenario
            .static_obstacles
            .iter()
            .filter(|o| sector.contains(pos, heading, o.center))
            .copied()
            .collect();
        if sector.contains(pos, heading, attacker) {
            visible.push(Obstacle::point(attacker));
        }
        visible
    }

    fn control(&self, victim: &VictimState, attacker: Vec2) -> Result<(VelocityCommand, bool)> {
        let cfg = &self.scenario.victim;
        let visible = self.visible_obstacles(victim, attacker);
        match &cfg.controller {
            ControllerConfig::Apf(params) => {
                let cmd = apf_control(victim.pose, cfg.kind, cfg.goal, &visible, params)?;
                Ok((cmd, false))
            }
            ControllerConfig::Dwa(params) => {
                let decision = dwa_control(
                    victim.pose,
                    victim.last_cmd,
                    cfg.goal,
                    &visible,
                    params,
                    cfg.control_period,
                )?;
                Ok((decision.command, decision.emergency_stop))
            }
        }
    }

    fn tick_once(&mut self) -> Result<VelocityCommand> {
        if self.arrived || self.captured {
            return Ok(VelocityCommand::zero_for(self.scenario.victim.kind));
        }
        let (cmd, emergency) = self.control(&self.victim.clone(), self.attacker)?;
        if emergency {
            self.victim.emergency_stops += 1;
        }
        self.victim.pose = step(
            self.victim.pose,
            self.scenario.victim.kind,
            cmd,
            self.scenario.victim.control_period,
        )?;
        self.victim.last_cmd = cmd;
        self.tick += 1;
        if self.scenario.trap.captured(self.victim.pose.position()) {
            self.captured = true;
            return Ok(cmd);
        }
        let cfg = &self.scenario.victim;
        if self.victim.pose.position().dist(cfg.goal) <= cfg.goal_radius {
            match self.policy {
                ArrivalPolicy::Respawn => {
                    self.victim.pose = cfg.start;
                    self.victim.last_cmd = VelocityCommand::zero_for(cfg.kind);
                    self.episodes += 1;
                }
                ArrivalPolicy::Stop => self.arrived = true,
            }
        }
        Ok(cmd)
    }

    /// Advance one observation window (`window_ticks` control periods)
    /// with the attacker held still. Returns the command applied at the
    /// first tick.
    pub fn run_window(&mut self) -> Result<VelocityCommand> {
        let mut first = None;
        for _ in 0..self.scenario.attacker.window_ticks {
            let cmd = self.tick_once()?;
            if first.is_none() {
                first = Some(cmd);
            }
        }
        let cmd = first.expect("window_ticks >= 1");
        self.last_window_cmd = cmd;
        Ok(cmd)
    }

    /// Ground-truth prediction: simulate one window from the current
    /// victim state with the attacker standing at `attacker`, without
    /// touching the scene.
    pub fn predict_window(&self, attacker: Vec2) -> Result<Pose> {
        let mut victim = self.victim.clone();
        for _ in 0..self.scenario.attacker.window_ticks {
            let (cmd, _) = self.control(&victim, attacker)?;
            victim.pose = step(
                victim.pose,
                self.scenario.victim.kind,
                cmd,
                self.scenario.victim.control_period,
            )?;
            victim.last_cmd = cmd;
        }
        Ok(victim.pose)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::avoidance::DwaParams;
    use crate::kinematics::RobotKind;
    use crate::probe::DetectionSector;
    use crate::scenario::{AttackerConfig, TrapRegion, VictimConfig};

    pub fn dwa_scenario() -> Scenario {
        Scenario {
            version: "v1".into(),
            seed: 7,
            victim: VictimConfig {
                kind: RobotKind::NonHolonomic { hand_offset: 0.3 },
                start: Pose::new(0.0, 0.0, 0.0),
                goal: Vec2::new(20.0, 0.0),
                goal_radius: 0.3,
                control_period: 0.1,
                max_speed: 1.0,
                controller: ControllerConfig::Dwa(DwaParams {
                    horizon_steps: 32,
                    ..DwaParams::default()
                }),
                sector: DetectionSector::new(3.0, -1.0472, 1.0472),
            },
            attacker: AttackerConfig {
                start: Vec2::new(-5.0, -5.0),
                window_ticks: 1,
                speed_ratio: 3.0,
                deviation_tol: 1e-4,
            },
            trap: TrapRegion {
                center: Vec2::new(10.0, -5.0),
                capture_radius: 0.3,
            },
            attack: Default::default(),
            probe: Default::default(),
            collect: Default::default(),
            svr: Default::default(),
            static_obstacles: vec![],
        }
    }

    #[test]
    fn free_victim_walks_straight_to_goal() {
        let scenario = dwa_scenario();
        let mut scene = Scene::new(&scenario, ArrivalPolicy::Stop);
        for _ in 0..50 {
            scene.run_window().unwrap();
        }
        let p = scene.victim_pose();
        assert!(p.x > 4.0, "victim should make progress, at {p:?}");
        assert!(p.y.abs() < 1e-6, "straight-line course, at {p:?}");
    }

    #[test]
    fn respawn_policy_restarts_episode() {
        let mut scenario = dwa_scenario();
        scenario.victim.goal = Vec2::new(2.0, 0.0);
        let mut scene = Scene::new(&scenario, ArrivalPolicy::Respawn);
        for _ in 0..400 {
            scene.run_window().unwrap();
        }
        assert!(scene.episodes() >= 2);
        assert!(!scene.arrived());
    }

    #[test]
    fn stop_policy_freezes_at_goal() {
        let mut scenario = dwa_scenario();
        scenario.victim.goal = Vec2::new(2.0, 0.0);
        let mut scene = Scene::new(&scenario, ArrivalPolicy::Stop);
        for _ in 0..250 {
            scene.run_window().unwrap();
        }
        assert!(scene.arrived());
        let frozen = scene.victim_pose();
        scene.run_window().unwrap();
        assert_eq!(scene.victim_pose(), frozen);
    }

    #[test]
    fn attacker_in_sector_deflects_victim() {
        let scenario = dwa_scenario();
        let mut scene = Scene::new(&scenario, ArrivalPolicy::Stop);
        for _ in 0..20 {
            scene.run_window().unwrap();
        }
        // Park the attacker dead ahead, just inside the sector.
        let pose = scene.victim_pose();
        let ahead = pose.position() + pose.heading_vector() * 2.0;
        scene.set_attacker(ahead);
        assert!(scene.in_true_sector(ahead));
        let before = scene.victim_pose().theta;
        for _ in 0..5 {
            scene.run_window().unwrap();
        }
        let after = scene.victim_pose().theta;
        assert!(
            crate::geometry::wrap_to_pi(after - before).abs() > 1e-3,
            "victim should turn away from a frontal obstacle"
        );
    }

    #[test]
    fn prediction_matches_simulation() {
        let scenario = dwa_scenario();
        let mut scene = Scene::new(&scenario, ArrivalPolicy::Stop);
        for _ in 0..10 {
            scene.run_window().unwrap();
        }
        let attacker = scene.victim_position() + Vec2::new(2.0, 0.5);
        let predicted = scene.predict_window(attacker).unwrap();
        scene.set_attacker(attacker);
        scene.run_window().unwrap();
        let actual = scene.victim_pose();
        assert!(predicted.position().dist(actual.position()) < 1e-12);
    }
}
