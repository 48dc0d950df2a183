//! Stage orchestration: probe, collect, train, attack, analyze, sweep.
//! Each stage reads its inputs from disk, writes its artifacts to the
//! output directory, and never touches artifacts it does not own.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{measure_reaction_radii, path_bounds, trace_metrics, TraceMetrics};
use crate::attack::{run_attack, AttackOutcome, AttackerBelief, Predictor, Strategy};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::probe::{run_probe, DetectionSector, GoalEstimate, ProbeOutcome, TrackSegment};
use crate::regression::{collect_dataset, fit, load_model, save_model, TrainingSample};
use crate::rng::{stage_rng, Stage};
use crate::scenario::Scenario;
use crate::sim::{ArrivalPolicy, Scene};
use crate::trace::{export_trace, TraceFormat};

pub const ARTIFACT_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StageName {
    Probe,
    Collect,
    Train,
    Attack,
}

impl std::str::FromStr for StageName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probe" => Ok(StageName::Probe),
            "collect" => Ok(StageName::Collect),
            "train" => Ok(StageName::Train),
            "attack" => Ok(StageName::Attack),
            other => Err(Error::InvalidInput(format!("unknown stage {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeArtifact {
    pub version: String,
    pub sector: DetectionSector,
    pub degenerate: bool,
    pub tracks: Vec<TrackSegment>,
    pub goal: GoalEstimate,
    pub radius_trials: usize,
    pub angle_trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetArtifact {
    pub version: String,
    /// Sector the samples were drawn in.
    pub sector: DetectionSector,
    /// Goal position the labels were measured against.
    pub goal: Vec2,
    pub trials: usize,
    pub samples: Vec<TrainingSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackSummary {
    pub version: String,
    pub strategy: Strategy,
    pub oracle: bool,
    pub seed: u64,
    pub success: bool,
    pub termination: crate::attack::Termination,
    pub entry_position: Vec2,
    pub region: crate::attack::Region,
    pub entry_window: Option<u64>,
    pub metrics: TraceMetrics,
    pub inputs: Vec<Vec2>,
}

pub struct PipelineOptions {
    pub strategy: Strategy,
    /// Bypass learned artifacts with ground truth where allowed.
    pub oracle: bool,
    pub out_dir: PathBuf,
    pub trace_format: TraceFormats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormats {
    Jsonl,
    Csv,
    Both,
}

impl std::str::FromStr for TraceFormats {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(TraceFormats::Jsonl),
            "csv" => Ok(TraceFormats::Csv),
            "both" => Ok(TraceFormats::Both),
            other => Err(Error::InvalidInput(format!("unknown format {other:?}"))),
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, stage: &str) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            stage: stage.into(),
            path: path.display().to_string(),
        });
    }
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn probe_path(out: &Path) -> PathBuf {
    out.join("probe.json")
}

pub fn dataset_path(out: &Path) -> PathBuf {
    out.join("dataset.json")
}

pub fn model_path(out: &Path) -> PathBuf {
    out.join("model.json")
}

pub fn summary_path(out: &Path) -> PathBuf {
    out.join("summary.json")
}

/// Run the requested stages in dependency order.
pub fn run_pipeline(
    scenario: &Scenario,
    stages: &BTreeSet<StageName>,
    opts: &PipelineOptions,
) -> Result<Option<AttackSummary>> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut summary = None;

    if stages.contains(&StageName::Probe) {
        let artifact = stage_probe(scenario)?;
        write_json(&artifact, &probe_path(&opts.out_dir))?;
    }
    if stages.contains(&StageName::Collect) {
        let artifact = stage_collect(scenario, opts)?;
        write_json(&artifact, &dataset_path(&opts.out_dir))?;
    }
    if stages.contains(&StageName::Train) {
        let dataset: DatasetArtifact = read_json(&dataset_path(&opts.out_dir), "train")?;
        let model = fit(&dataset.samples, &scenario.svr, scenario.seed)?;
        save_model(&model, &model_path(&opts.out_dir))?;
    }
    if stages.contains(&StageName::Attack) {
        summary = Some(stage_attack(scenario, opts)?);
    }
    Ok(summary)
}

pub fn stage_probe(scenario: &Scenario) -> Result<ProbeArtifact> {
    let mut scene = Scene::new(scenario, ArrivalPolicy::Respawn);
    let mut rng = stage_rng(scenario.seed, Stage::Probe);
    let outcome: ProbeOutcome = run_probe(
        &mut scene,
        &scenario.probe,
        scenario.attacker.deviation_tol,
        &mut rng,
    )?;
    Ok(ProbeArtifact {
        version: ARTIFACT_VERSION.into(),
        sector: outcome.sector,
        degenerate: outcome.degenerate,
        tracks: outcome.tracks,
        goal: outcome.goal,
        radius_trials: outcome.radius_trials,
        angle_trials: outcome.angle_trials,
    })
}

fn believed_world(
    scenario: &Scenario,
    opts: &PipelineOptions,
    stage: &str,
) -> Result<(DetectionSector, Vec2)> {
    if opts.oracle {
        Ok((scenario.victim.sector, scenario.victim.goal))
    } else {
        let probe: ProbeArtifact = read_json(&probe_path(&opts.out_dir), stage)?;
        // Shrink the learned radius by the probe resolution: the
        // bracketing overestimates by at most one step.
        let sector = DetectionSector::new(
            probe.sector.radius - scenario.probe.delta_d,
            probe.sector.alpha_lo,
            probe.sector.alpha_hi,
        );
        Ok((sector, probe.goal.position))
    }
}

pub fn stage_collect(scenario: &Scenario, opts: &PipelineOptions) -> Result<DatasetArtifact> {
    let (sector, goal) = believed_world(scenario, opts, "collect")?;
    let mut scene = Scene::new(scenario, ArrivalPolicy::Respawn);
    let mut rng = stage_rng(scenario.seed, Stage::Collect);
    let outcome = collect_dataset(
        &mut scene,
        &sector,
        goal,
        scenario.attack.eta,
        scenario.collect.trial_limit,
        scenario.collect.target_samples,
        scenario.attacker.deviation_tol,
        &mut rng,
    )?;
    Ok(DatasetArtifact {
        version: ARTIFACT_VERSION.into(),
        sector,
        goal,
        trials: outcome.trials,
        samples: outcome.samples,
    })
}

pub fn stage_attack(scenario: &Scenario, opts: &PipelineOptions) -> Result<AttackSummary> {
    let (sector, goal) = believed_world(scenario, opts, "attack")?;
    let model = if opts.oracle {
        None
    } else {
        Some(load_model(&model_path(&opts.out_dir))?)
    };
    let mut scene = Scene::new(scenario, ArrivalPolicy::Stop);
    let predictor = match &model {
        Some(m) => Predictor::Model(m),
        None => Predictor::Oracle,
    };
    let outcome = run_attack(
        &mut scene,
        opts.strategy,
        predictor,
        AttackerBelief { goal, sector },
    )?;
    persist_attack(scenario, opts, &outcome)
}

fn persist_attack(
    scenario: &Scenario,
    opts: &PipelineOptions,
    outcome: &AttackOutcome,
) -> Result<AttackSummary> {
    if matches!(opts.trace_format, TraceFormats::Jsonl | TraceFormats::Both) {
        export_trace(
            &outcome.trace,
            TraceFormat::Jsonl,
            &opts.out_dir.join("trace.jsonl"),
        )?;
    }
    if matches!(opts.trace_format, TraceFormats::Csv | TraceFormats::Both) {
        export_trace(
            &outcome.trace,
            TraceFormat::Csv,
            &opts.out_dir.join("trace.csv"),
        )?;
    }
    let metrics = trace_metrics(&outcome.trace, scenario.trap.center)?;
    let summary = AttackSummary {
        version: ARTIFACT_VERSION.into(),
        strategy: opts.strategy,
        oracle: opts.oracle,
        seed: scenario.seed,
        success: outcome.success,
        termination: outcome.termination,
        entry_position: outcome.entry_position,
        region: outcome.region,
        entry_window: outcome.entry_window,
        metrics,
        inputs: outcome.inputs.clone(),
    };
    write_json(&summary, &summary_path(&opts.out_dir))?;
    Ok(summary)
}

/// Closed-form bound table plus measured radii, written by `analyze`.
pub fn stage_analyze(scenario: &Scenario, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;

    // Bound sweep over a radius/offset grid in the closed-form regime.
    let mut csv = String::from("r,l_d,phi,l_min,l_max,gap_lower,gap_upper\n");
    for i in 0..10 {
        let r = 0.2 + 0.2 * i as f64;
        for j in 0..5 {
            let l_d = r * (6.0 + 6.0 * j as f64);
            let b = path_bounds(r, l_d)?;
            let (lo, hi) = crate::analysis::optimality_gap_bounds(r, r, l_d)?;
            csv.push_str(&format!(
                "{r},{l_d},{},{},{},{lo},{hi}\n",
                b.phi, b.l_min, b.l_max
            ));
        }
    }
    std::fs::write(out_dir.join("bounds.csv"), csv)?;

    if !scenario.victim.kind.is_holonomic() {
        let radii = measure_reaction_radii(scenario, 9)?;
        write_json(&radii, &out_dir.join("radii.json"))?;
    }
    Ok(())
}

/// One axis of a sweep grid: a JSON pointer-ish dotted path and values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub run_id: usize,
    pub settings: Vec<(String, String)>,
    pub result: std::result::Result<AttackSummary, String>,
}

fn patch(value: &mut serde_json::Value, path: &str, new: &serde_json::Value) -> Result<()> {
    let mut cursor = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            match cursor {
                serde_json::Value::Object(map) => {
                    map.insert(part.to_string(), new.clone());
                    return Ok(());
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "sweep path {path:?} does not land in an object"
                    )))
                }
            }
        }
        cursor = cursor
            .get_mut(*part)
            .ok_or_else(|| Error::InvalidInput(format!("sweep path {path:?} missing {part:?}")))?;
    }
    Ok(())
}

/// Run every grid point (cartesian product of the axes) and collect one
/// summary row per run. Rows are ordered by run id regardless of the
/// worker count, and each run derives its randomness only from its own
/// scenario seed.
pub fn sweep(
    scenario: &Scenario,
    grid: &SweepGrid,
    strategy: Strategy,
    oracle: bool,
    parallelism: usize,
) -> Result<Vec<SweepRow>> {
    if grid.axes.is_empty() || grid.axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::EmptyGrid);
    }
    let base = serde_json::to_value(scenario)?;
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for axis in &grid.axes {
        let mut next = Vec::new();
        for combo in &combos {
            for vi in 0..axis.values.len() {
                let mut c = combo.clone();
                c.push(vi);
                next.push(c);
            }
        }
        combos = next;
    }

    let mut jobs: Vec<(usize, Scenario, Vec<(String, String)>)> = Vec::new();
    for (run_id, combo) in combos.iter().enumerate() {
        let mut value = base.clone();
        let mut settings = Vec::new();
        for (axis, &vi) in grid.axes.iter().zip(combo) {
            patch(&mut value, &axis.path, &axis.values[vi])?;
            settings.push((axis.path.clone(), axis.values[vi].to_string()));
        }
        let patched: Scenario = serde_json::from_value(value)?;
        patched.validate()?;
        jobs.push((run_id, patched, settings));
    }

    let workers = parallelism.max(1).min(jobs.len());
    let mut rows: Vec<Option<SweepRow>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<Vec<(usize, Scenario, Vec<(String, String)>)>> = {
            let mut cs: Vec<Vec<_>> = (0..workers).map(|_| Vec::new()).collect();
            for (i, job) in jobs.into_iter().enumerate() {
                cs[i % workers].push(job);
            }
            cs
        };
        let mut handles = Vec::new();
        for chunk in chunks {
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                for (run_id, scen, settings) in chunk {
                    let result = run_sweep_point(&scen, strategy, oracle)
                        .map_err(|e| format!("{}:{e}", e.code()));
                    out.push(SweepRow {
                        run_id,
                        settings,
                        result,
                    });
                }
                out
            }));
        }
        for handle in handles {
            for row in handle.join().expect("sweep worker panicked") {
                let idx = row.run_id;
                rows[idx] = Some(row);
            }
        }
    });
    Ok(rows.into_iter().map(|r| r.expect("row filled")).collect())
}

fn run_sweep_point(scenario: &Scenario, strategy: Strategy, oracle: bool) -> Result<AttackSummary> {
    // Learned runs redo the whole pipeline in memory; oracle runs go
    // straight to the attack with ground-truth beliefs.
    let (belief, model) = if oracle {
        (
            AttackerBelief {
                goal: scenario.victim.goal,
                sector: scenario.victim.sector,
            },
            None,
        )
    } else {
        let probe = stage_probe(scenario)?;
        let sector = DetectionSector::new(
            probe.sector.radius - scenario.probe.delta_d,
            probe.sector.alpha_lo,
            probe.sector.alpha_hi,
        );
        let goal = probe.goal.position;
        let mut scene = Scene::new(scenario, ArrivalPolicy::Respawn);
        let mut rng = stage_rng(scenario.seed, Stage::Collect);
        let collected = collect_dataset(
            &mut scene,
            &sector,
            goal,
            scenario.attack.eta,
            scenario.collect.trial_limit,
            scenario.collect.target_samples,
            scenario.attacker.deviation_tol,
            &mut rng,
        )?;
        let model = fit(&collected.samples, &scenario.svr, scenario.seed)?;
        (AttackerBelief { goal, sector }, Some(model))
    };

    let mut scene = Scene::new(scenario, ArrivalPolicy::Stop);
    let predictor = match &model {
        Some(m) => Predictor::Model(m),
        None => Predictor::Oracle,
    };
    let outcome = run_attack(&mut scene, strategy, predictor, belief)?;
    let metrics = trace_metrics(&outcome.trace, scenario.trap.center)?;
    Ok(AttackSummary {
        version: ARTIFACT_VERSION.into(),
        strategy,
        oracle,
        seed: scenario.seed,
        success: outcome.success,
        termination: outcome.termination,
        entry_position: outcome.entry_position,
        region: outcome.region,
        entry_window: outcome.entry_window,
        metrics,
        inputs: outcome.inputs,
    })
}

/// Render sweep rows as CSV, ordered by run id.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let axis_names: Vec<String> = rows
        .first()
        .map(|r| r.settings.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    out.push_str("run_id");
    for name in &axis_names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(
        ",success,horizon,active_count,hands_off_ratio,path_length_after_entry,final_trap_distance,objective,error\n",
    );
    for row in rows {
        out.push_str(&row.run_id.to_string());
        for (_, v) in &row.settings {
            out.push(',');
            out.push_str(v);
        }
        match &row.result {
            Ok(s) => {
                let m = &s.metrics;
                out.push_str(&format!(
                    ",{},{},{},{},{},{},{},\n",
                    s.success,
                    m.horizon,
                    m.active_count,
                    m.hands_off_ratio,
                    m.path_length_after_entry,
                    m.final_trap_distance,
                    m.objective
                ));
            }
            Err(e) => {
                out.push_str(&format!(",,,,,,,,{e}\n"));
            }
        }
    }
    out
}

/// Write a string artifact, creating the directory first.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
