//! Versioned scenario schema, eager validation, and load/save round trip.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::avoidance::{ApfParams, DwaParams, Obstacle};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{Pose, RobotKind};
use crate::probe::{DetectionSector, ProbeConfig};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: String,
    /// Single entropy source for the whole run.
    pub seed: u64,
    pub victim: VictimConfig,
    pub attacker: AttackerConfig,
    pub trap: TrapRegion,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub collect: CollectConfig,
    #[serde(default)]
    pub svr: SvrConfig,
    #[serde(default)]
    pub static_obstacles: Vec<Obstacle>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VictimConfig {
    pub kind: RobotKind,
    pub start: Pose,
    pub goal: Vec2,
    /// Arrival radius of the go-to-goal task.
    #[serde(default = "default_goal_radius")]
    pub goal_radius: f64,
    /// Motion control period T in seconds.
    pub control_period: f64,
    pub max_speed: f64,
    pub controller: ControllerConfig,
    /// Ground-truth detection sector.
    pub sector: DetectionSector,
}

fn default_goal_radius() -> f64 {
    0.3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControllerConfig {
    Apf(ApfParams),
    Dwa(DwaParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerConfig {
    pub start: Vec2,
    /// Observation window in control ticks (the sampling period is this
    /// many control periods).
    #[serde(default = "default_window_ticks")]
    pub window_ticks: u32,
    /// Attacker/victim speed ratio, must exceed 1.
    #[serde(default = "default_speed_ratio")]
    pub speed_ratio: f64,
    /// Course-deviation threshold used by reaction detection.
    #[serde(default = "default_deviation_tol")]
    pub deviation_tol: f64,
}

fn default_window_ticks() -> u32 {
    1
}

fn default_speed_ratio() -> f64 {
    3.0
}

fn default_deviation_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapRegion {
    pub center: Vec2,
    /// Capture radius: the run succeeds when the victim is this close.
    #[serde(default = "default_capture_radius")]
    pub capture_radius: f64,
}

fn default_capture_radius() -> f64 {
    0.3
}

impl TrapRegion {
    pub fn captured(&self, p: Vec2) -> bool {
        p.dist(self.center) <= self.capture_radius
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    /// Attack input bound (m/s).
    pub sigma: f64,
    /// Termination bound: same as the trap capture radius by default.
    pub delta: f64,
    /// Safety floor between attacker and victim.
    pub eta: f64,
    /// Relaxed distance band for the hands-off strategy.
    pub eta_band: (f64, f64),
    /// Radius of the entry neighborhood that triggers the attack.
    pub entry_radius: f64,
    pub max_iterations: usize,
    /// Candidate placements sampled per attack step.
    pub candidate_count: usize,
    /// Distance-regime switch divisor of the hands-off strategy.
    pub switch_fraction: f64,
    /// Fallback reaction radius used for the near-course entry carve-out
    /// when no measured radii are available.
    pub reaction_radius_hint: f64,
    /// Consecutive empty candidate sets tolerated before giving up.
    pub stall_limit: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            sigma: 2.0,
            delta: 0.3,
            eta: 0.4,
            eta_band: (0.4, 4.5),
            entry_radius: 0.5,
            max_iterations: 2000,
            candidate_count: 64,
            switch_fraction: 3.0,
            reaction_radius_hint: 0.5,
            stall_limit: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectConfig {
    /// Trial budget for dataset collection.
    pub trial_limit: usize,
    /// Stop early once this many reacting samples are stored.
    pub target_samples: usize,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            trial_limit: 800,
            target_samples: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvrConfig {
    pub kernel: KernelKind,
    /// RBF width; `None` selects 1/(feature count) on standardized data.
    pub gamma: Option<f64>,
    pub c: f64,
    /// Tube half-width as a fraction of each output's standard deviation.
    pub epsilon_frac: f64,
    pub holdout_frac: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub min_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rbf,
    Linear,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig {
            kernel: KernelKind::Rbf,
            gamma: None,
            c: 10.0,
            epsilon_frac: 0.01,
            holdout_frac: 0.2,
            tol: 1e-3,
            max_iter: 400_000,
            min_samples: 20,
        }
    }
}

impl Scenario {
    /// Observation window length in seconds.
    pub fn window(&self) -> f64 {
        self.victim.control_period * self.attacker.window_ticks as f64
    }

    /// Eager validation; collects every failed field.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };

        check(
            self.version == SCHEMA_VERSION,
            &format!("version: expected {SCHEMA_VERSION:?}, found {:?}", self.version),
        );

        let v = &self.victim;
        check(
            v.control_period > 0.0 && v.control_period.is_finite(),
            "victim.control_period: must be positive and finite",
        );
        check(v.max_speed > 0.0, "victim.max_speed: must be positive");
        check(v.goal.is_finite(), "victim.goal: must be finite");
        check(v.start.is_finite(), "victim.start: must be finite");
        check(
            v.goal.dist(v.start.position()) > v.goal_radius,
            "victim.goal: must lie outside the arrival radius of the start",
        );
        check(v.goal_radius > 0.0, "victim.goal_radius: must be positive");
        if let RobotKind::NonHolonomic { hand_offset } = v.kind {
            check(hand_offset > 0.0, "victim.kind.hand_offset: must be positive");
        }
        check(v.sector.radius > 0.0, "victim.sector.radius: must be positive");
        check(
            v.sector.alpha_lo < v.sector.alpha_hi,
            "victim.sector: alpha_lo must be below alpha_hi",
        );
        check(
            v.sector.alpha_lo >= -std::f64::consts::PI - 1e-12
                && v.sector.alpha_hi <= std::f64::consts::PI + 1e-12,
            "victim.sector: bearing range must lie within [-pi, pi]",
        );
        match &v.controller {
            ControllerConfig::Apf(p) => {
                check(p.rho0 > 0.0, "victim.controller.rho0: must be positive");
                check(p.k_rep >= 0.0, "victim.controller.k_rep: must be non-negative");
                check(p.k_attr > 0.0, "victim.controller.k_attr: must be positive");
                check(p.max_speed > 0.0, "victim.controller.max_speed: must be positive");
                check(
                    p.max_turn_rate > 0.0,
                    "victim.controller.max_turn_rate: must be positive",
                );
            }
            ControllerConfig::Dwa(p) => {
                check(
                    matches!(v.kind, RobotKind::NonHolonomic { .. }),
                    "victim.controller: dynamic window requires a non-holonomic victim",
                );
                check(
                    p.beta_heading >= 0.0 && p.beta_clearance >= 0.0 && p.beta_velocity >= 0.0,
                    "victim.controller: weights must be non-negative",
                );
                check(
                    p.beta_heading + p.beta_clearance + p.beta_velocity > 0.0,
                    "victim.controller: at least one weight must be positive",
                );
                check(
                    p.v_samples >= 2 && p.omega_samples >= 2,
                    "victim.controller: sample counts must be at least 2",
                );
                check(
                    p.horizon_steps >= 1,
                    "victim.controller.horizon_steps: must be at least 1",
                );
                check(p.v_min <= p.v_max, "victim.controller: v_min must not exceed v_max");
            }
        }

        let a = &self.attacker;
        check(a.start.is_finite(), "attacker.start: must be finite");
        check(a.window_ticks >= 1, "attacker.window_ticks: must be at least 1");
        check(a.speed_ratio > 1.0, "attacker.speed_ratio: must exceed 1");
        check(a.deviation_tol > 0.0, "attacker.deviation_tol: must be positive");

        check(self.trap.center.is_finite(), "trap.center: must be finite");
        check(
            self.trap.capture_radius > 0.0,
            "trap.capture_radius: must be positive",
        );

        let k = &self.attack;
        check(k.sigma > 0.0, "attack.sigma: must be positive");
        check(k.delta > 0.0, "attack.delta: must be positive");
        check(k.eta > 0.0, "attack.eta: must be positive");
        check(
            k.eta_band.0 > 0.0 && k.eta_band.0 < k.eta_band.1,
            "attack.eta_band: must satisfy 0 < lower < upper",
        );
        check(k.entry_radius > 0.0, "attack.entry_radius: must be positive");
        check(k.max_iterations >= 1, "attack.max_iterations: must be at least 1");
        check(
            k.candidate_count >= 4,
            "attack.candidate_count: must be at least 4",
        );
        check(
            k.switch_fraction >= 1.0,
            "attack.switch_fraction: must be at least 1",
        );

        let p = &self.probe;
        check(p.delta_d > 0.0, "probe.delta_d: must be positive");
        check(p.delta_alpha > 0.0, "probe.delta_alpha: must be positive");
        check(
            p.initial_standoff > v.sector.radius,
            "probe.initial_standoff: must exceed the sector radius",
        );
        check(p.safety_floor > 0.0, "probe.safety_floor: must be positive");
        check(p.settle_windows >= 2, "probe.settle_windows: must be at least 2");
        check(p.quiet_windows >= 1, "probe.quiet_windows: must be at least 1");

        check(
            self.collect.trial_limit >= 1,
            "collect.trial_limit: must be at least 1",
        );

        let s = &self.svr;
        check(s.c > 0.0, "svr.c: must be positive");
        check(s.epsilon_frac > 0.0, "svr.epsilon_frac: must be positive");
        check(
            s.holdout_frac > 0.0 && s.holdout_frac < 0.5,
            "svr.holdout_frac: must be in (0, 0.5)",
        );
        check(s.min_samples >= 4, "svr.min_samples: must be at least 4");
        if let Some(g) = s.gamma {
            check(g > 0.0, "svr.gamma: must be positive");
        }

        for (i, o) in self.static_obstacles.iter().enumerate() {
            check(
                o.radius >= 0.0,
                &format!("static_obstacles[{i}].radius: must be non-negative"),
            );
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let scenario: Scenario = serde_json::from_str(&text)?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(scenario)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
