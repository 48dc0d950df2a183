//! Closed-form path-length bounds for constant-radius herding maneuvers,
//! optimality-gap bounds, and post-hoc trace metrics.
//!
//! The two reference maneuvers share an entry heading along the nominal
//! course and end at a trap a perpendicular distance `l_d` away:
//! the short one turns once (radius `r`) until the heading is tangent to
//! the trap and runs straight; the long one swings out and back through
//! two arcs totalling 7π/6 before the straight leg.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::trace::TraceRecord;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Carve-out threshold: traps closer than this to the course need no
/// staged entry.
pub fn near_course_threshold(r_min: f64) -> f64 {
    (SQRT3 + 1.0) * r_min
}

/// Closed-form envelope for the herded path length at reaction radius `r`
/// and trap offset `l_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathBounds {
    /// Angle between the straight leg of the short maneuver and the
    /// direct entry-trap line.
    pub phi: f64,
    pub l_min: f64,
    pub l_max: f64,
}

pub fn path_bounds(r: f64, l_d: f64) -> Result<PathBounds> {
    if !(r > 0.0) || !r.is_finite() || !l_d.is_finite() {
        return Err(Error::InvalidInput(format!("r {r}, l_d {l_d}")));
    }
    if l_d <= near_course_threshold(r) {
        return Err(Error::OutOfRegime(format!(
            "need l_d > (sqrt(3)+1)r = {:.4}, got {l_d}",
            near_course_threshold(r)
        )));
    }
    let phi = (r / (l_d - r)).asin();
    let l_min = (std::f64::consts::FRAC_PI_2 + phi - phi.cos()) * r + l_d * phi.cos();
    let l_max = (7.0 / 6.0 * std::f64::consts::PI - 1.0 - SQRT3) * r + l_d;
    Ok(PathBounds { phi, l_min, l_max })
}

/// Bounds on the excess of the realized objective over the ideal straight
/// path `l_d`, from the measured extreme reaction radii.
///
/// The upper bound depends only on `r_max`.
pub fn optimality_gap_bounds(r_min: f64, r_max: f64, l_d: f64) -> Result<(f64, f64)> {
    if !(r_min > 0.0 && r_max >= r_min) {
        return Err(Error::InvalidInput(format!("r_min {r_min}, r_max {r_max}")));
    }
    if l_d <= 2.0 * r_min {
        return Err(Error::OutOfRegime(format!(
            "need l_d > 2*r_min = {:.4}, got {l_d}",
            2.0 * r_min
        )));
    }
    let phi = (r_min / (l_d - r_min)).asin();
    let lower =
        (std::f64::consts::FRAC_PI_2 + phi - phi.cos()) * r_min + l_d * (phi.cos() - 1.0);
    let upper = (7.0 / 6.0 * std::f64::consts::PI - 1.0 - SQRT3) * r_max;
    Ok((lower, upper))
}

/// Extreme turning radii measured from static probe placements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReactionRadii {
    pub r_min: f64,
    pub r_max: f64,
    /// Measured radius per probed (bearing, range) placement; `None`
    /// marks a non-turning probe (flagged infinite, excluded from both
    /// extremes).
    pub per_placement: Vec<RadiusProbe>,
    /// Whether the four-corner ordering (near-center sharpest, near-edge,
    /// far-center, far-edge widest) held for this victim.
    pub corner_ordering_held: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadiusProbe {
    pub bearing: f64,
    pub range: f64,
    pub radius: Option<f64>,
}

/// Measure the victim's turning radius from static attacker placements at
/// the four sector corners plus a bearing grid at mid range.
///
/// Each probe runs a fresh scene until the victim holds a straight
/// course, parks the attacker at the relative placement, and averages
/// `v/|ω|` over the first three turning windows.
pub fn measure_reaction_radii(
    scenario: &crate::scenario::Scenario,
    grid_bearings: usize,
) -> Result<ReactionRadii> {
    use crate::kinematics::VelocityCommand;
    use crate::sim::{ArrivalPolicy, Scene};

    if scenario.victim.kind.is_holonomic() {
        return Err(Error::ContractViolation(
            "turning radii are defined for non-holonomic victims".into(),
        ));
    }
    let sector = scenario.victim.sector;
    let near = scenario.attack.eta.max(0.15 * sector.radius);
    let far = (0.85 * sector.radius).max(near + 0.05);
    let edge = sector.alpha_hi * 0.95;
    let corners = [(near, 0.0), (near, edge), (far, edge), (far, 0.0)];

    let mut placements: Vec<(f64, f64)> = corners.to_vec();
    for i in 0..grid_bearings {
        let t = if grid_bearings <= 1 {
            0.5
        } else {
            i as f64 / (grid_bearings - 1) as f64
        };
        let bearing = sector.alpha_lo + (sector.alpha_hi - sector.alpha_lo) * t;
        placements.push(((near + far) / 2.0, bearing));
    }

    let probe_one = |range: f64, bearing: f64| -> Result<Option<f64>> {
        let mut scene = Scene::new(scenario, ArrivalPolicy::Respawn);
        // Let the victim settle onto its course.
        let mut straight = 0usize;
        for _ in 0..400 {
            scene.run_window()?;
            let VelocityCommand::Unicycle { omega, .. } = scene.victim_command() else {
                unreachable!("non-holonomic victim");
            };
            if omega.abs() < 1e-9 {
                straight += 1;
                if straight >= 3 {
                    break;
                }
            } else {
                straight = 0;
            }
        }
        let pose = scene.victim_pose();
        scene.set_attacker(pose.position() + crate::geometry::Vec2::from_angle(pose.theta + bearing) * range);
        let mut samples = Vec::new();
        for _ in 0..40 {
            scene.run_window()?;
            let VelocityCommand::Unicycle { v, omega } = scene.victim_command() else {
                unreachable!()
            };
            if omega.abs() > 1e-9 {
                samples.push(v.abs() / omega.abs());
                if samples.len() >= 3 {
                    break;
                }
            }
        }
        if samples.is_empty() {
            Ok(None)
        } else {
            Ok(Some(samples.iter().sum::<f64>() / samples.len() as f64))
        }
    };

    let mut per_placement = Vec::new();
    for (range, bearing) in placements {
        per_placement.push(RadiusProbe {
            bearing,
            range,
            radius: probe_one(range, bearing)?,
        });
    }

    let finite: Vec<f64> = per_placement.iter().filter_map(|p| p.radius).collect();
    if finite.is_empty() {
        return Err(Error::NoReaction {
            floor: scenario.attack.eta,
        });
    }
    let r_min = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let r_max = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let corner_radii: Vec<Option<f64>> = per_placement[..4].iter().map(|p| p.radius).collect();
    let corner_ordering_held = match (
        corner_radii[0],
        corner_radii[1],
        corner_radii[2],
        corner_radii[3],
    ) {
        (Some(r1), Some(r2), Some(r3), Some(r4)) => r1 < r2 && r2 < r4 && r4 < r3,
        _ => false,
    };

    Ok(ReactionRadii {
        r_min,
        r_max,
        per_placement,
        corner_ordering_held,
    })
}

/// Post-hoc summary of one attack trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMetrics {
    /// Victim polyline length from the first active window to the end.
    pub path_length_after_entry: f64,
    /// Number of windows with a non-zero attack input.
    pub active_count: usize,
    /// Windows from the first active input to the end of the trace.
    pub horizon: usize,
    /// `1 - active_count / horizon`; zero for an empty horizon.
    pub hands_off_ratio: f64,
    pub final_trap_distance: f64,
    /// Accumulated per-window objective: predicted displacement magnitude
    /// where a prediction exists, realized displacement otherwise.
    pub objective: f64,
}

pub fn trace_metrics(records: &[TraceRecord], trap_center: Vec2) -> Result<TraceMetrics> {
    if records.is_empty() {
        return Err(Error::InvalidInput("empty trace".into()));
    }
    let first_active = records.iter().position(|r| r.active);
    let mut path = 0.0;
    let mut active = 0usize;
    let mut objective = 0.0;
    let mut horizon = 0usize;
    if let Some(start) = first_active {
        horizon = records.len() - start;
        for pair in records[start..].windows(2) {
            path += pair[0].victim.position().dist(pair[1].victim.position());
        }
        for (i, rec) in records[start..].iter().enumerate() {
            if rec.active {
                active += 1;
            }
            let here = rec.victim.position();
            let next = records[start + i + 1..]
                .first()
                .map(|r| r.victim.position());
            match (rec.predicted, next) {
                (Some(pred), _) => objective += pred.position().dist(here),
                (None, Some(next)) => objective += next.dist(here),
                (None, None) => {}
            }
        }
    }
    let last = records.last().expect("non-empty");
    Ok(TraceMetrics {
        path_length_after_entry: path,
        active_count: active,
        horizon,
        hands_off_ratio: if horizon > 0 {
            1.0 - active as f64 / horizon as f64
        } else {
            0.0
        },
        final_trap_distance: last.victim.position().dist(trap_center),
        objective,
    })
}
