//! Per-step attack trace records plus JSONL/CSV export and re-import.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kinematics::Pose;

/// One observation window of an attack session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Window index since session start.
    pub step: u64,
    /// Seconds since session start (`step` times the window length).
    pub time: f64,
    pub victim: Pose,
    pub attacker: Pose,
    /// Victim command applied at the first tick of the window.
    pub victim_cmd: (f64, f64),
    /// Attacker velocity over the window (zero while idle).
    pub attacker_cmd: (f64, f64),
    /// Distance from the victim to the trap center at window start.
    pub trap_distance: f64,
    /// True when the attacker issued a non-zero input this window.
    pub active: bool,
    /// Planner's predicted victim pose for the end of this window, when
    /// a prediction was evaluated.
    pub predicted: Option<Pose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Jsonl,
    Csv,
}

/// CSV header, fixed by the trace schema.
pub const CSV_HEADER: &str = "k,t,vx_x,vx_y,vx_theta,ax_x,ax_y,ax_theta,uv1,uv2,ua1,ua2,d,active";

pub fn export_trace(records: &[TraceRecord], format: TraceFormat, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        TraceFormat::Jsonl => {
            for rec in records {
                serde_json::to_writer(&mut out, rec)?;
                out.write_all(b"\n")?;
            }
        }
        TraceFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in records {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.step,
                    r.time,
                    r.victim.x,
                    r.victim.y,
                    r.victim.theta,
                    r.attacker.x,
                    r.attacker.y,
                    r.attacker.theta,
                    r.victim_cmd.0,
                    r.victim_cmd.1,
                    r.attacker_cmd.0,
                    r.attacker_cmd.1,
                    r.trap_distance,
                    u8::from(r.active),
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn import_trace_jsonl(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(step: u64, active: bool) -> TraceRecord {
        TraceRecord {
            step,
            time: step as f64 * 0.1,
            victim: Pose::new(step as f64 * 0.1, 0.0, 0.0),
            attacker: Pose::new(1.0, 1.0, 0.0),
            victim_cmd: (1.0, 0.0),
            attacker_cmd: if active { (0.5, 0.0) } else { (0.0, 0.0) },
            trap_distance: 5.0 - step as f64 * 0.1,
            active,
            predicted: active.then(|| Pose::new(step as f64 * 0.1 + 0.1, 0.0, 0.0)),
        }
    }

    #[test]
    fn csv_has_header_plus_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let records: Vec<_> = (0..3).map(|k| record(k, k > 0)).collect();
        export_trace(&records, TraceFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].ends_with(",0"));
        assert!(lines[2].ends_with(",1"));
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.jsonl");
        let records: Vec<_> = (0..10)
            .map(|k| {
                let mut r = record(k, k % 2 == 0);
                // Awkward floats must survive the round trip bit-exactly.
                r.victim = Pose::new(0.1 * k as f64 + 1e-13, 0.1 + 0.2, 0.3);
                r.trap_distance = (k as f64).sqrt();
                r
            })
            .collect();
        export_trace(&records, TraceFormat::Jsonl, &path).unwrap();
        let back = import_trace_jsonl(&path).unwrap();
        assert_eq!(records, back);
    }
}
