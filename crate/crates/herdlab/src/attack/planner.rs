//! Sampling-based herding strategies: greedy shortest-path, hands-off,
//! and the naive chase baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{entry_point, side_of, trap_feasible, EntryTiming, Region};
use crate::analysis::{near_course_threshold, trace_metrics};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::Pose;
use crate::perception::MotionTracker;
use crate::probe::DetectionSector;
use crate::regression::{predict_pose, AvoidanceModel, VictimView};
use crate::rng::{event_rng, stage_rng, Stage};
use crate::sim::Scene;
use crate::trace::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Shortest,
    HandsOff,
    Simple,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shortest" => Ok(Strategy::Shortest),
            "handsoff" => Ok(Strategy::HandsOff),
            "simple" => Ok(Strategy::Simple),
            other => Err(Error::InvalidInput(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Where one-step victim predictions come from.
pub enum Predictor<'a> {
    /// Ground-truth simulation of the victim controller.
    Oracle,
    /// The learned reaction model.
    Model(&'a AvoidanceModel),
}

/// The attacker's beliefs about the victim, learned or oracle-provided.
#[derive(Debug, Clone)]
pub struct AttackerBelief {
    pub goal: Vec2,
    /// Sector the planner samples placements from; callers shrink a
    /// learned radius by the probe resolution to stay conservative.
    pub sector: DetectionSector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Captured,
    IterationLimit,
    GoalReached,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub success: bool,
    pub termination: Termination,
    /// Windows from the first attack input to the end of the trace.
    pub horizon: usize,
    /// Attack inputs per post-entry window; zeros are hands-off steps.
    pub inputs: Vec<Vec2>,
    pub active_count: usize,
    pub path_length_after_entry: f64,
    pub hands_off_ratio: f64,
    /// Post-hoc value of the accumulated predicted-displacement objective.
    pub objective: f64,
    pub final_trap_distance: f64,
    pub entry_position: Vec2,
    pub region: Region,
    pub entry_window: Option<u64>,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Holding the stealth flank pose until the victim nears the entry.
    Waiting,
    /// Closing on a front-sector placement; influence not yet possible.
    Approaching,
    /// In the detection sector, issuing attack inputs.
    Attacking,
}

struct Session<'a> {
    scene: &'a mut Scene,
    predictor: Predictor<'a>,
    belief: AttackerBelief,
    strategy: Strategy,
    seed: u64,
    tracker: MotionTracker,
    trace: Vec<TraceRecord>,
    inputs: Vec<Vec2>,
    phase: Phase,
    entry_window: Option<u64>,
    /// Side of the victim's motion the attacker stays on for the whole
    /// run: the side away from the trap at entry. Attacking from a fixed
    /// side keeps the trap and the goal from swapping sides mid-run.
    committed_side: i8,
    stall: usize,
    prev_victim: Option<Vec2>,
    prev_trap_distance: f64,
}

/// Run one attack session on a scene whose victim sits at its start pose.
pub fn run_attack(
    scene: &mut Scene,
    strategy: Strategy,
    predictor: Predictor<'_>,
    belief: AttackerBelief,
) -> Result<AttackOutcome> {
    let scenario = scene.scenario().clone();
    let trap = scenario.trap;
    let start = scene.victim_position();
    let goal = belief.goal;

    if strategy != Strategy::Simple && !trap_feasible(trap.center, start, goal)? {
        return Err(Error::TrapInfeasible);
    }
    let entry = entry_point(trap.center, start, goal)?;
    let mut entry_pos = entry.position;

    // Traps hugging the course need no staged entry; engage a little
    // earlier instead.
    let course = goal - start;
    let course_len = course.norm();
    let course_dir = course / course_len;
    let lateral = course_dir.cross(trap.center - start).abs();
    if entry.timing == EntryTiming::Exact
        && lateral < near_course_threshold(scenario.attack.reaction_radius_hint)
    {
        let along = (entry_pos - start).dot(course_dir);
        let shifted = (along - 2.0 * scenario.attack.reaction_radius_hint).max(0.0);
        entry_pos = start + course_dir * shifted;
    }

    let course_line = [start, goal];
    let trap_side = side_of(trap.center, &course_line)?;

    // Waiting pose: flank the entry position on the side away from the
    // trap, far enough out that no point of the undisturbed pass can see
    // it. A closer wait inside the entry neighborhood gets detected and
    // dodged long before the victim reaches the entry position.
    let sector = belief.sector;
    let alpha_max = sector.alpha_lo.abs().max(sector.alpha_hi.abs());
    let stealth = sector.radius * alpha_max.min(std::f64::consts::FRAC_PI_2).sin();
    let offset = stealth * 1.05 + 0.15;
    let mut rng = stage_rng(scenario.seed, Stage::Attack);
    let slide: f64 = rng.random_range(-0.5..0.5) * scenario.attack.entry_radius;
    let away = if trap_side == 0 {
        course_dir.perp()
    } else {
        course_dir.perp() * (-trap_side as f64)
    };
    let wait_pos = entry_pos + away * offset + course_dir * slide;

    let mut session = Session {
        scene,
        predictor,
        belief,
        strategy,
        seed: scenario.seed,
        tracker: MotionTracker::new(),
        trace: Vec::new(),
        inputs: Vec::new(),
        phase: Phase::Waiting,
        entry_window: None,
        committed_side: if trap_side == 0 { 1 } else { -trap_side },
        stall: 0,
        prev_victim: None,
        prev_trap_distance: f64::INFINITY,
    };
    session.run(
        &scenario,
        trap,
        entry_pos,
        wait_pos,
        offset,
        -trap_side,
        entry.timing,
        entry.region,
    )
}

impl<'a> Session<'a> {
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        scenario: &crate::scenario::Scenario,
        trap: crate::scenario::TrapRegion,
        entry_pos: Vec2,
        wait_pos: Vec2,
        wait_offset: f64,
        attack_bearing_sign: i8,
        timing: EntryTiming,
        region: Region,
    ) -> Result<AttackOutcome> {
        let window = self.scene.window_seconds();
        let cfg = scenario.attack;
        let switch_distance = entry_pos.dist(trap.center) / cfg.switch_fraction;
        let course_line = [self.scene.victim_position(), self.belief.goal];
        let mut termination = Termination::IterationLimit;

        // Begin the run-in early enough that the attacker reaches the
        // victim's sector roughly when the victim reaches the entry.
        let drift = scenario.victim.max_speed * window;
        let closing = (self.attack_budget(cfg) - drift).max(1e-6);
        let run_in = wait_offset + 0.5 * self.belief.sector.radius;
        let trigger_lead = cfg.entry_radius + run_in * drift / closing;
        let bearing_sign = if attack_bearing_sign == 0 {
            1.0
        } else {
            attack_bearing_sign as f64
        };
        let _ = bearing_sign;
        let approach_range = (0.4 * self.belief.sector.radius).max(cfg.eta + 0.15);
        let drift_per_window = scenario.victim.max_speed * window;

        for k in 0..cfg.max_iterations as u64 {
            let victim_pose = self.scene.victim_pose();
            let victim = victim_pose.position();
            self.tracker.push(victim, window);
            let d_k = victim.dist(trap.center);

            if d_k < cfg.delta || self.scene.captured() {
                termination = Termination::Captured;
                self.push_record(k, victim_pose, Vec2::ZERO, d_k, false, None, window)?;
                break;
            }
            if self.scene.arrived() {
                termination = Termination::GoalReached;
                self.push_record(k, victim_pose, Vec2::ZERO, d_k, false, None, window)?;
                break;
            }

            if self.phase == Phase::Waiting {
                let triggered = match (self.strategy, timing) {
                    (Strategy::Simple, _) => true,
                    (_, EntryTiming::Early) => true,
                    _ => victim.dist(entry_pos) < trigger_lead,
                };
                if triggered {
                    self.phase = Phase::Approaching;
                }
            }
            // The run-in lands frontal-close in the drive slot; the
            // attack starts once the attacker is placed in the wedge and
            // the victim is at the entry neighborhood.
            let drive = self.drive_bearing(victim, victim_pose.theta, trap.center);
            let approach_point =
                victim + Vec2::from_angle(victim_pose.theta + drive) * approach_range;
            if self.phase == Phase::Approaching {
                let here = self.scene.attacker_position();
                let gap = here.dist(victim);
                let in_sector = self
                    .belief
                    .sector
                    .contains(victim, victim_pose.theta, here);
                let arrived = here.dist(approach_point) <= 1.5 * self.attack_budget(cfg);
                let at_entry = match timing {
                    EntryTiming::Early => true,
                    _ => victim.dist(entry_pos) < cfg.entry_radius + 2.0 * drift_per_window,
                };
                if in_sector && arrived && gap >= cfg.eta && at_entry {
                    self.phase = Phase::Attacking;
                    self.entry_window = Some(k);
                }
            }

            let mut predicted: Option<Pose> = None;
            let target: Option<Vec2> = match self.phase {
                Phase::Waiting => Some(self.step_toward(wait_pos, cfg)),
                Phase::Approaching => Some(self.step_toward(approach_point, cfg)),
                Phase::Attacking => {
                    let entry_step = self.entry_window == Some(k);
                    match self.strategy {
                        Strategy::Simple => {
                            let (t, p) = self.simple_step(cfg, trap.center, window)?;
                            predicted = p;
                            t
                        }
                        Strategy::Shortest => {
                            let (t, p) = self.greedy_step(
                                k,
                                cfg,
                                trap.center,
                                d_k,
                                entry_step.then_some(&course_line),
                                cfg.eta,
                                self.belief.sector.radius,
                                window,
                            )?;
                            predicted = p;
                            t
                        }
                        Strategy::HandsOff => {
                            let idle = self.hands_off_idle(cfg, trap.center, d_k, switch_distance);
                            if idle && !entry_step {
                                Some(self.scene.attacker_position())
                            } else {
                                let (t, p) = self.greedy_step(
                                    k,
                                    cfg,
                                    trap.center,
                                    d_k,
                                    entry_step.then_some(&course_line),
                                    cfg.eta_band.0,
                                    self.belief.sector.radius.min(cfg.eta_band.1),
                                    window,
                                )?;
                                predicted = p;
                                t
                            }
                        }
                    }
                }
            };

            let here = self.scene.attacker_position();
            let next = target.unwrap_or(here);
            let u = (next - here) / window;
            let attacking = self.phase == Phase::Attacking;
            let active = attacking && u.norm() > 1e-12;
            self.scene.set_attacker(next);
            if attacking {
                self.inputs.push(u);
            }
            self.push_record(k, victim_pose, u, d_k, active, predicted, window)?;
            self.prev_victim = Some(victim);
            self.prev_trap_distance = d_k;
            self.scene.run_window()?;
        }

        let metrics = trace_metrics(&self.trace, trap.center)?;
        Ok(AttackOutcome {
            success: termination == Termination::Captured,
            termination,
            horizon: metrics.horizon,
            inputs: std::mem::take(&mut self.inputs),
            active_count: metrics.active_count,
            path_length_after_entry: metrics.path_length_after_entry,
            hands_off_ratio: metrics.hands_off_ratio,
            objective: metrics.objective,
            final_trap_distance: metrics.final_trap_distance,
            entry_position: entry_pos,
            region,
            entry_window: self.entry_window,
            trace: std::mem::take(&mut self.trace),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn push_record(
        &mut self,
        k: u64,
        victim_pose: Pose,
        u: Vec2,
        d_k: f64,
        active: bool,
        predicted: Option<Pose>,
        window: f64,
    ) -> Result<()> {
        // The victim command for this window is known only after the
        // window runs; log the previous window's first-tick command,
        // which is what the attacker could actually have observed.
        let attacker = self.scene.attacker_position();
        let heading = if u.norm() > 1e-12 { u.angle() } else { 0.0 };
        self.trace.push(TraceRecord {
            step: k,
            time: k as f64 * window,
            victim: victim_pose,
            attacker: Pose::new(attacker.x, attacker.y, heading),
            victim_cmd: self.scene.last_window_command().channels(),
            attacker_cmd: (u.x, u.y),
            trap_distance: d_k,
            active,
            predicted,
        });
        Ok(())
    }

    /// Attacker displacement budget per window under both the kinematic
    /// and the attack-input bounds.
    fn attack_budget(&self, cfg: crate::scenario::AttackConfig) -> f64 {
        self.scene
            .attacker_budget()
            .min(cfg.sigma * self.scene.window_seconds())
    }

    /// Move toward a fixed point at the window budget.
    fn step_toward(&mut self, target: Vec2, cfg: crate::scenario::AttackConfig) -> Vec2 {
        let here = self.scene.attacker_position();
        let hop = target - here;
        let budget = self.attack_budget(cfg);
        if hop.norm() <= budget {
            target
        } else {
            here + hop.unit().expect("hop longer than budget") * budget
        }
    }

    fn victim_view(&self) -> Option<VictimView> {
        let motion = self.tracker.last().copied()?;
        Some(VictimView {
            position: self.scene.victim_position(),
            heading: self.scene.victim_pose().theta,
            motion,
            kind: self.scene.scenario().victim.kind,
        })
    }

    fn predict_next(&self, attacker: Vec2, window: f64) -> Result<Option<Vec2>> {
        match &self.predictor {
            Predictor::Oracle => Ok(Some(self.scene.predict_window(attacker)?.position())),
            Predictor::Model(model) => {
                let Some(view) = self.victim_view() else {
                    return Ok(None);
                };
                let pose = predict_pose(
                    model,
                    &view,
                    attacker,
                    self.belief.goal,
                    &self.belief.sector,
                    window,
                )?;
                Ok(Some(pose.position()))
            }
        }
    }

    /// One sampled greedy iteration: draw candidate placements in the
    /// sector, keep the reachable ones that respect the side rule and do
    /// not increase the predicted trap distance, move to the best.
    #[allow(clippy::too_many_arguments)]
    fn greedy_step(
        &mut self,
        k: u64,
        cfg: crate::scenario::AttackConfig,
        trap: Vec2,
        d_k: f64,
        entry_line: Option<&[Vec2; 2]>,
        range_lo: f64,
        range_hi: f64,
        window: f64,
    ) -> Result<(Option<Vec2>, Option<Pose>)> {
        let victim = self.scene.victim_position();
        let heading = self.scene.victim_pose().theta;
        let here = self.scene.attacker_position();
        let budget = self.attack_budget(cfg);
        let sector = self.belief.sector;
        if range_hi <= range_lo {
            return Err(Error::ContractViolation(format!(
                "empty placement band [{range_lo}, {range_hi}]"
            )));
        }

        // Side rule: the entry move must start strictly opposite the trap
        // across the nominal course. Later placements are free; pushing
        // from the trap side never survives the argmin, so the separation
        // emerges from the progress filter itself.
        let side_ok = |cand: Vec2| -> bool {
            let Some(line) = entry_line else { return true };
            let (Ok(sc), Ok(st)) = (side_of(cand, line), side_of(trap, line)) else {
                return true;
            };
            if st == 0 {
                return true;
            }
            sc == -st
        };

        // Candidates are drawn uniformly over the reachable disc and then
        // restricted to the placement region; this matches a uniform draw
        // over the region intersected with reachability, without wasting
        // the sample budget on unreachable placements.
        let mut rng = event_rng(self.seed, Stage::Attack, k);
        let mut best: Option<(f64, Vec2, Vec2)> = None;
        let mut any_legal = false;
        // A pinned victim (frozen by an emergency stop) makes every
        // nearby placement a no-progress tie; demand strict progress so
        // the fallback backs off and releases it.
        let frozen = self.prev_victim == Some(victim);
        let progress_margin = if frozen { 1e-9 } else { -1e-12 };
        // Once the victim's motion ray passes close to the trap, the
        // hold option (standing still, possibly dropping out of the
        // sector) competes with the sampled placements; it predicts the
        // largest progress while the victim runs at the trap, releasing
        // it instead of forcing an overshoot turn.
        let aimed = self.ray_distance_to(trap) < cfg.delta.max(0.05 * d_k);
        for _ in 0..cfg.candidate_count {
            let radius = budget * rng.random::<f64>().sqrt();
            let dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let cand = here + Vec2::from_angle(dir) * radius;
            let gap = cand.dist(victim);
            if gap < range_lo
                || gap > range_hi
                || !sector.contains(victim, heading, cand)
                || !side_ok(cand)
            {
                continue;
            }
            any_legal = true;
            let Some(next) = self.predict_next(cand, window)? else {
                continue;
            };
            let d_hat = next.dist(trap);
            if d_hat > d_k - progress_margin {
                continue;
            }
            if best.map_or(true, |(bd, _, _)| d_hat < bd - 1e-12) {
                best = Some((d_hat, cand, next));
            }
        }
        // Once the victim is pointed at the trap, standing still (and
        // possibly dropping out of the sector) competes too: a release
        // must strictly beat every active nudge to be chosen.
        if aimed && !frozen {
            if let Some(next) = self.predict_next(here, window)? {
                let d_hat = next.dist(trap);
                if d_hat <= d_k + 1e-12
                    && best.map_or(true, |(bd, _, _)| d_hat < bd - 1e-12)
                {
                    best = Some((d_hat, here, next));
                }
            }
        }

        match best {
            Some((_, cand, next)) => {
                self.stall = 0;
                Ok((
                    Some(cand),
                    Some(Pose::new(next.x, next.y, self.scene.victim_pose().theta)),
                ))
            }
            None => {
                // No progress candidate this window: re-establish the
                // drive slot opposite the trap (backed off when the
                // victim is pinned). The stall counter tracks windows
                // with no legally placeable candidate at all.
                if any_legal {
                    self.stall = 0;
                } else {
                    self.stall += 1;
                    if self.stall >= cfg.stall_limit {
                        return Err(Error::StalledAttack(self.stall));
                    }
                }
                let bearing = self.drive_bearing(victim, heading, trap);
                let range = if frozen {
                    (0.6 * range_hi).max(range_lo + 0.3)
                } else {
                    (0.3 * range_hi).max(range_lo + 0.1)
                };
                let target = victim + Vec2::from_angle(heading + bearing) * range;
                let hop = target - here;
                let next = if hop.norm() <= budget {
                    target
                } else {
                    here + hop.unit().expect("hop above budget") * budget
                };
                Ok((Some(next), None))
            }
        }
    }

    /// Bearing (relative to the victim heading) of the drive slot: stand
    /// between the victim and its goal, clamped into the frontal part of
    /// the wedge where a placement actually deflects. Blocking the goal
    /// side both pushes trap-ward and catches the swing back toward the
    /// goal before it builds up.
    fn drive_bearing(&self, victim: Vec2, heading: f64, _trap: Vec2) -> f64 {
        let sector = self.belief.sector;
        let toward_goal = (self.belief.goal - victim)
            .unit()
            .unwrap_or(Vec2::new(1.0, 0.0));
        let raw = crate::geometry::wrap_to_pi(toward_goal.angle() - heading);
        raw.clamp(0.3 * sector.alpha_lo, 0.3 * sector.alpha_hi)
    }

    /// Distance from the victim's motion ray to a point; the full range
    /// when the point lies behind the motion.
    fn ray_distance_to(&self, point: Vec2) -> f64 {
        let Some(motion) = self.tracker.last() else {
            return f64::INFINITY;
        };
        let origin = self.scene.victim_position();
        let dir = Vec2::from_angle(motion.heading);
        let rel = point - origin;
        if rel.dot(dir) >= 0.0 {
            dir.cross(rel).abs()
        } else {
            rel.norm()
        }
    }

    /// Hands-off idle criteria: in the far regime idle while the trap
    /// distance keeps shrinking and the victim is pointed trap-ward;
    /// near the trap idle while the victim's motion ray passes within
    /// the capture bound. Both require the relaxed distance band.
    ///
    /// The aim requirement in the far regime is not part of the bare
    /// distance test: without it the attacker idles during the entry
    /// turn (the trap distance shrinks on its own there) and the herd
    /// never forms.
    fn hands_off_idle(
        &self,
        cfg: crate::scenario::AttackConfig,
        trap: Vec2,
        d_k: f64,
        switch_distance: f64,
    ) -> bool {
        let gap = self
            .scene
            .attacker_position()
            .dist(self.scene.victim_position());
        let band_ok = gap >= cfg.eta_band.0 && gap <= cfg.eta_band.1;
        if !band_ok {
            return false;
        }
        if d_k > switch_distance {
            d_k <= self.prev_trap_distance
                && self.ray_distance_to(trap) < (2.0 * cfg.delta).max(0.25 * d_k)
        } else {
            self.ray_distance_to(trap) < cfg.delta
        }
    }

    /// Naive baseline: chase the predicted next victim position at full
    /// speed, stopping at the safety floor.
    fn simple_step(
        &mut self,
        cfg: crate::scenario::AttackConfig,
        _trap: Vec2,
        window: f64,
    ) -> Result<(Option<Vec2>, Option<Pose>)> {
        let here = self.scene.attacker_position();
        let victim = self.scene.victim_position();
        let predicted = self
            .predict_next(here, window)?
            .unwrap_or(victim);
        let budget = self.scene.attacker_budget().min(cfg.sigma * window);
        let hop = predicted - here;
        let mut next = if hop.norm() <= budget {
            predicted
        } else {
            here + hop.unit().expect("hop above budget") * budget
        };
        // Honor the safety floor around the victim's current position.
        let gap = next - victim;
        if gap.norm() < cfg.eta {
            let dir = gap.unit().unwrap_or(Vec2::new(1.0, 0.0));
            next = victim + dir * cfg.eta;
        }
        Ok((
            Some(next),
            Some(Pose::new(predicted.x, predicted.y, 0.0)),
        ))
    }
}
