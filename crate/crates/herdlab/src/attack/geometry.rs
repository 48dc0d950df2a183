//! Entry-point geometry: which side of a trajectory a point lies on, the
//! plane partition around the victim's nominal course, entry-point
//! selection, and the trap-feasibility test.
//!
//! The nominal course `l_T` runs from the victim's start to its goal. Two
//! 45° lines through each endpoint partition the plane: the cone opening
//! behind the start (S2), the cone beyond the goal (S3), the sideways
//! wedges between the inner diagonals (part of S4), and the band around
//! the course itself (S1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, wrap_to_pi, Vec2};

const ON_LINE_TOL: f64 = 1e-9;

/// Which side of a polyline a point lies on: +1 left, -1 right, 0 on it.
pub fn side_of(p: Vec2, trajectory: &[Vec2]) -> Result<i8> {
    if trajectory.len() < 2 {
        return Err(Error::ContractViolation(
            "trajectory needs at least two points".into(),
        ));
    }
    let mut best: Option<(f64, usize)> = None;
    for i in 0..trajectory.len() - 1 {
        let (a, b) = (trajectory[i], trajectory[i + 1]);
        if a.dist(b) < 1e-12 {
            continue;
        }
        let d = point_segment_distance(p, a, b);
        if best.map_or(true, |(bd, _)| d < bd - 1e-15) {
            best = Some((d, i));
        }
    }
    let Some((dist, i)) = best else {
        return Err(Error::DegenerateTrajectory);
    };
    if dist <= ON_LINE_TOL {
        return Ok(0);
    }
    let dir = trajectory[i + 1] - trajectory[i];
    let cross = dir.cross(p - trajectory[i]);
    Ok(if cross > 0.0 { 1 } else { -1 })
}

/// Plane regions relative to the nominal course (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    S1,
    S2,
    S3,
    S4,
}

/// Coordinates of a point in the course frame: `along` is the signed
/// distance down the course from the start, `lateral` the signed offset
/// (positive left).
fn course_frame(p: Vec2, start: Vec2, goal: Vec2) -> (f64, f64, f64) {
    let axis = goal - start;
    let len = axis.norm();
    let dir = axis / len;
    let rel = p - start;
    (rel.dot(dir), dir.cross(rel), len)
}

/// Classify a trap position against the course partition.
pub fn classify_region(p_trap: Vec2, p_start: Vec2, p_goal: Vec2) -> Result<Region> {
    if p_start.dist(p_goal) < 1e-9 {
        return Err(Error::ContractViolation("start equals goal".into()));
    }
    let (along, lateral, len) = course_frame(p_trap, p_start, p_goal);
    let abs_lat = lateral.abs();
    if -along >= abs_lat && along < 0.0 {
        return Ok(Region::S2);
    }
    if along - len >= abs_lat && along > len {
        return Ok(Region::S3);
    }
    // Up/down wedges between the inner diagonals.
    let in_wedge = abs_lat >= along && abs_lat >= len - along;
    if (0.0..=len).contains(&along) && !in_wedge {
        return Ok(Region::S1);
    }
    Ok(Region::S4)
}

/// How the entry position should be used by the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryTiming {
    /// Begin exactly when the victim passes the entry position.
    Exact,
    /// No exact point exists; engage as early as possible.
    Early,
    /// No exact point exists; engage as late as possible.
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryPoint {
    pub position: Vec2,
    pub timing: EntryTiming,
    pub region: Region,
}

/// Entry position on the course for a given trap.
///
/// S1 uses the perpendicular foot. S4 projects along the two diagonal
/// frame axes and keeps the closer on-course landing (falling back to the
/// clamped foot when both miss). S2 and S3 have no exact point and return
/// the start and goal with early/late markers.
pub fn entry_point(p_trap: Vec2, p_start: Vec2, p_goal: Vec2) -> Result<EntryPoint> {
    let region = classify_region(p_trap, p_start, p_goal)?;
    let (along, lateral, len) = course_frame(p_trap, p_start, p_goal);
    let dir = (p_goal - p_start) / len;
    let at = |t: f64| p_start + dir * t;
    let entry = match region {
        Region::S1 => EntryPoint {
            position: at(along.clamp(0.0, len)),
            timing: EntryTiming::Exact,
            region,
        },
        Region::S2 => EntryPoint {
            position: p_start,
            timing: EntryTiming::Early,
            region,
        },
        Region::S3 => EntryPoint {
            position: p_goal,
            timing: EntryTiming::Late,
            region,
        },
        Region::S4 => {
            // Diagonal projections land at along ± lateral on the course.
            let candidates = [along + lateral, along - lateral];
            let mut best: Option<(f64, f64)> = None;
            for t in candidates {
                if (0.0..=len).contains(&t) {
                    let d = p_trap.dist(at(t));
                    let better = match best {
                        None => true,
                        Some((bd, bt)) => d < bd - 1e-12 || ((d - bd).abs() <= 1e-12 && t < bt),
                    };
                    if better {
                        best = Some((d, t));
                    }
                }
            }
            let t = best
                .map(|(_, t)| t)
                .unwrap_or_else(|| along.clamp(0.0, len));
            EntryPoint {
                position: at(t),
                timing: EntryTiming::Exact,
                region,
            }
        }
    };
    Ok(entry)
}

/// Closed-form feasibility test: a trap is unavailable exactly when it
/// lies strictly inside the 45° cone opening beyond the goal (the region
/// swept by extending the sides of the square erected on the course
/// diagonal past the goal). Everywhere else a herding trajectory keeping
/// the attacker and the goal on one side and the trap on the other exists.
pub fn trap_feasible(p_trap: Vec2, p_start: Vec2, p_goal: Vec2) -> Result<bool> {
    if p_start.dist(p_goal) < 1e-9 {
        return Err(Error::ContractViolation("start equals goal".into()));
    }
    let (along, lateral, len) = course_frame(p_trap, p_start, p_goal);
    Ok(!(along > len && along - len > lateral.abs()))
}

/// Minimal angular sweep (absolute) a deflection pivoted at `pivot` must
/// rotate the victim's motion line through, starting from the direction
/// toward `from` and ending pointed at `target`.
pub fn pivot_sweep(pivot: Vec2, from_direction: f64, target: Vec2) -> Option<f64> {
    let to_target = target - pivot;
    if to_target.norm() < 1e-9 {
        return Some(std::f64::consts::PI); // standing on the target: any side works
    }
    Some(wrap_to_pi(to_target.angle() - from_direction).abs())
}

/// Input sequences within `eps` in flattened l2 norm are treated as the
/// same solution. Shorter sequences are padded with zero inputs, matching
/// the hands-off reading of an absent command.
pub fn inputs_epsilon_equivalent(a: &[Vec2], b: &[Vec2], eps: f64) -> bool {
    let n = a.len().max(b.len());
    let mut sum = 0.0;
    for i in 0..n {
        let va = a.get(i).copied().unwrap_or(Vec2::ZERO);
        let vb = b.get(i).copied().unwrap_or(Vec2::ZERO);
        sum += (va - vb).norm_sq();
    }
    sum.sqrt() <= eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seg() -> Vec<Vec2> {
        vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]
    }

    #[test]
    fn side_on_segment_is_zero() {
        assert_eq!(side_of(Vec2::new(0.5, 0.0), &seg()).unwrap(), 0);
    }

    #[test]
    fn side_left_right() {
        assert_eq!(side_of(Vec2::new(0.5, 1.0), &seg()).unwrap(), 1);
        assert_eq!(side_of(Vec2::new(0.5, -1.0), &seg()).unwrap(), -1);
    }

    #[test]
    fn side_degenerate_trajectory() {
        let t = vec![Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)];
        assert!(matches!(
            side_of(Vec2::new(0.0, 0.0), &t),
            Err(Error::DegenerateTrajectory)
        ));
    }

    fn start() -> Vec2 {
        Vec2::new(0.0, 0.0)
    }

    fn goal() -> Vec2 {
        Vec2::new(10.0, 0.0)
    }

    #[test]
    fn classify_beside_course() {
        assert_eq!(
            classify_region(Vec2::new(5.0, -3.0), start(), goal()).unwrap(),
            Region::S1
        );
    }

    #[test]
    fn classify_behind_start() {
        assert_eq!(
            classify_region(Vec2::new(-5.0, 0.0), start(), goal()).unwrap(),
            Region::S2
        );
    }

    #[test]
    fn classify_beyond_goal() {
        assert_eq!(
            classify_region(Vec2::new(15.0, 0.0), start(), goal()).unwrap(),
            Region::S3
        );
    }

    #[test]
    fn classify_deep_side_wedge() {
        assert_eq!(
            classify_region(Vec2::new(5.0, -20.0), start(), goal()).unwrap(),
            Region::S4
        );
    }

    #[test]
    fn classify_rotated_frame() {
        // Same cases under a rotated, translated course.
        let s = Vec2::new(3.0, -2.0);
        let g = s + Vec2::from_angle(0.7) * 10.0;
        let place = |along: f64, lat: f64| {
            let dir = Vec2::from_angle(0.7);
            s + dir * along + dir.perp() * lat
        };
        assert_eq!(
            classify_region(place(5.0, 3.0), s, g).unwrap(),
            Region::S1
        );
        assert_eq!(
            classify_region(place(-4.0, 1.0), s, g).unwrap(),
            Region::S2
        );
        assert_eq!(
            classify_region(place(15.0, -2.0), s, g).unwrap(),
            Region::S3
        );
        assert_eq!(
            classify_region(place(5.0, 19.0), s, g).unwrap(),
            Region::S4
        );
    }

    #[test]
    fn entry_perpendicular_foot() {
        let e = entry_point(Vec2::new(5.0, -3.0), start(), goal()).unwrap();
        assert_eq!(e.timing, EntryTiming::Exact);
        assert_abs_diff_eq!(e.position.x, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.position.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn entry_on_course_point() {
        let e = entry_point(Vec2::new(4.0, 0.0), start(), goal()).unwrap();
        assert_abs_diff_eq!(e.position.x, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.position.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn entry_markers() {
        let early = entry_point(Vec2::new(-5.0, 0.0), start(), goal()).unwrap();
        assert_eq!(early.timing, EntryTiming::Early);
        assert_eq!(early.position, start());
        let late = entry_point(Vec2::new(15.0, 0.0), start(), goal()).unwrap();
        assert_eq!(late.timing, EntryTiming::Late);
        assert_eq!(late.position, goal());
    }

    #[test]
    fn entry_wedge_axis_projection() {
        // Side wedge near the start: only one diagonal lands on course.
        let e = entry_point(Vec2::new(-3.0, 5.0), start(), goal()).unwrap();
        assert_eq!(e.region, Region::S4);
        assert_abs_diff_eq!(e.position.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.position.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn entry_deep_wedge_falls_back_to_foot() {
        let e = entry_point(Vec2::new(5.0, -20.0), start(), goal()).unwrap();
        assert_eq!(e.region, Region::S4);
        assert_abs_diff_eq!(e.position.x, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn feasibility_cases() {
        assert!(trap_feasible(Vec2::new(5.0, -2.0), start(), goal()).unwrap());
        assert!(!trap_feasible(Vec2::new(14.0, 1.0), start(), goal()).unwrap());
        assert!(trap_feasible(goal(), start(), goal()).unwrap());
        // Cone boundary is attackable.
        assert!(trap_feasible(Vec2::new(13.0, 3.0), start(), goal()).unwrap());
    }

    #[test]
    fn epsilon_equivalence_reflexive_symmetric() {
        let a = vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let b = vec![Vec2::new(1.0, 1e-7), Vec2::new(0.0, 1.0)];
        assert!(inputs_epsilon_equivalent(&a, &a, 0.0));
        assert!(inputs_epsilon_equivalent(&a, &b, 1e-6));
        assert!(inputs_epsilon_equivalent(&b, &a, 1e-6));
        assert!(!inputs_epsilon_equivalent(&a, &b, 1e-9));
    }

    #[test]
    fn epsilon_equivalence_pads_with_zeros() {
        let a = vec![Vec2::new(1.0, 0.0)];
        let b = vec![Vec2::new(1.0, 0.0), Vec2::ZERO];
        assert!(inputs_epsilon_equivalent(&a, &b, 1e-12));
    }
}
