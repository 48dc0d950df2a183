//! The learned avoidance model: feature standardization, one scalar
//! regressor per reaction component, residual statistics, persistence.

use serde::{Deserialize, Serialize};

use super::svr::{train_svr, Kernel, SvrCore, SvrDiagnostics, SvrParams};
use super::{TrainingSample, FEATURE_DIM, OUTPUT_DIM};
use crate::error::{Error, Result};
use crate::scenario::{KernelKind, SvrConfig};

pub const MODEL_VERSION: &str = "v1";

/// Per-feature affine standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Features whose training variance was zero; their scale is pinned
    /// to one.
    pub degenerate: Vec<bool>,
}

impl Scaler {
    fn fit(rows: &[[f64; FEATURE_DIM]]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; FEATURE_DIM];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; FEATURE_DIM];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let mut degenerate = vec![false; FEATURE_DIM];
        let mut scale = vec![0.0; FEATURE_DIM];
        for i in 0..FEATURE_DIM {
            var[i] /= n;
            if var[i] < 1e-24 {
                degenerate[i] = true;
                scale[i] = 1.0;
            } else {
                scale[i] = var[i].sqrt();
            }
        }
        Scaler {
            mean,
            scale,
            degenerate,
        }
    }

    pub fn apply(&self, q: &[f64; FEATURE_DIM]) -> Vec<f64> {
        (0..FEATURE_DIM)
            .map(|i| (q[i] - self.mean[i]) / self.scale[i])
            .collect()
    }
}

/// Residual statistics on the held-out split: per-output mean, covariance
/// and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub mean: [f64; OUTPUT_DIM],
    pub covariance: [[f64; OUTPUT_DIM]; OUTPUT_DIM],
    pub std: [f64; OUTPUT_DIM],
    pub holdout_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvoidanceModel {
    pub version: String,
    pub c: f64,
    pub epsilons: [f64; OUTPUT_DIM],
    pub scaler: Scaler,
    pub regressors: Vec<SvrCore>,
    pub residual: ResidualStats,
    pub diagnostics: Vec<SvrDiagnostics>,
}

/// Fit the two-output reaction model.
///
/// Features are standardized on the training split; each output gets its
/// own epsilon tube proportional to its spread. Residual statistics come
/// from a seeded 20% holdout.
pub fn fit(samples: &[TrainingSample], cfg: &SvrConfig, seed: u64) -> Result<AvoidanceModel> {
    if samples.len() < cfg.min_samples {
        return Err(Error::UnderDetermined {
            n: samples.len(),
            min: cfg.min_samples,
        });
    }
    for s in samples {
        if s.q_in.iter().any(|x| !x.is_finite()) || s.q_out.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite training sample".into()));
        }
    }

    // Seeded shuffle, then split off the holdout tail.
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = crate::rng::stage_rng(seed, crate::rng::Stage::Train);
    shuffle(&mut order, &mut rng);
    let holdout_len = ((samples.len() as f64 * cfg.holdout_frac).round() as usize)
        .clamp(1, samples.len() - cfg.min_samples / 2);
    let (train_idx, hold_idx) = order.split_at(samples.len() - holdout_len);

    let train_rows: Vec<[f64; FEATURE_DIM]> = train_idx.iter().map(|&i| samples[i].q_in).collect();
    let scaler = Scaler::fit(&train_rows);
    let train_x: Vec<Vec<f64>> = train_rows.iter().map(|r| scaler.apply(r)).collect();

    let kernel = match cfg.kernel {
        KernelKind::Linear => Kernel::Linear,
        KernelKind::Rbf => Kernel::Rbf {
            // Standardized features have unit variance, so the default
            // width is one over the feature count.
            gamma: cfg.gamma.unwrap_or(1.0 / FEATURE_DIM as f64),
        },
    };

    let mut regressors = Vec::with_capacity(OUTPUT_DIM);
    let mut diagnostics = Vec::with_capacity(OUTPUT_DIM);
    let mut epsilons = [0.0; OUTPUT_DIM];
    for out in 0..OUTPUT_DIM {
        let targets: Vec<f64> = train_idx.iter().map(|&i| samples[i].q_out[out]).collect();
        let spread = std_dev(&targets);
        let epsilon = (cfg.epsilon_frac * spread).max(1e-9);
        epsilons[out] = epsilon;
        let params = SvrParams {
            kernel,
            c: cfg.c,
            epsilon,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
        };
        let (core, diag) = train_svr(&train_x, &targets, &params)?;
        regressors.push(core);
        diagnostics.push(diag);
    }

    // Holdout residuals.
    let mut residuals: Vec<[f64; OUTPUT_DIM]> = Vec::with_capacity(hold_idx.len());
    for &i in hold_idx {
        let x = scaler.apply(&samples[i].q_in);
        let mut r = [0.0; OUTPUT_DIM];
        for out in 0..OUTPUT_DIM {
            r[out] = samples[i].q_out[out] - regressors[out].predict(&x);
        }
        residuals.push(r);
    }
    let residual = residual_stats(&residuals);

    Ok(AvoidanceModel {
        version: MODEL_VERSION.into(),
        c: cfg.c,
        epsilons,
        scaler,
        regressors,
        residual,
        diagnostics,
    })
}

/// Deterministic evaluation of the fitted model.
pub fn predict(model: &AvoidanceModel, q_in: &[f64; FEATURE_DIM]) -> Result<[f64; OUTPUT_DIM]> {
    if q_in.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite features {q_in:?}")));
    }
    let x = model.scaler.apply(q_in);
    let mut out = [0.0; OUTPUT_DIM];
    for (o, reg) in out.iter_mut().zip(&model.regressors) {
        *o = reg.predict(&x);
    }
    Ok(out)
}

pub fn save_model(model: &AvoidanceModel, path: &std::path::Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(model)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &std::path::Path) -> Result<AvoidanceModel> {
    let text = std::fs::read_to_string(path)?;
    let model: AvoidanceModel = serde_json::from_str(&text)?;
    if model.version != MODEL_VERSION {
        return Err(Error::Version {
            found: model.version,
            expected: MODEL_VERSION.into(),
        });
    }
    Ok(model)
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len().max(1) as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

fn residual_stats(residuals: &[[f64; OUTPUT_DIM]]) -> ResidualStats {
    let n = residuals.len().max(1) as f64;
    let mut mean = [0.0; OUTPUT_DIM];
    for r in residuals {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let denom = (residuals.len().saturating_sub(1)).max(1) as f64;
    let mut cov = [[0.0; OUTPUT_DIM]; OUTPUT_DIM];
    for r in residuals {
        for i in 0..OUTPUT_DIM {
            for j in 0..OUTPUT_DIM {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / denom;
            }
        }
    }
    ResidualStats {
        mean,
        covariance: cov,
        std: [cov[0][0].max(0.0).sqrt(), cov[1][1].max(0.0).sqrt()],
        holdout_count: residuals.len(),
    }
}

fn shuffle(xs: &mut [usize], rng: &mut rand_chacha::ChaCha12Rng) {
    use rand::Rng;
    for i in (1..xs.len()).rev() {
        let j = rng.random_range(0..=i);
        xs.swap(i, j);
    }
}

/// Coefficient of determination of predictions against actuals.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> f64 {
    assert_eq!(pred.len(), actual.len());
    let n = actual.len().max(1) as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    if ss_tot < 1e-24 {
        if ss_res < 1e-24 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn linear_samples(n: usize, seed: u64) -> Vec<TrainingSample> {
        let mut rng = crate::rng::stage_rng(seed, crate::rng::Stage::Train);
        (0..n)
            .map(|_| {
                let q_in: [f64; FEATURE_DIM] =
                    std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let q_out = [
                    0.5 * q_in[0] - 0.2 * q_in[4] + 0.1,
                    0.3 * q_in[5] + 0.7 * q_in[1],
                ];
                TrainingSample { q_in, q_out }
            })
            .collect()
    }

    fn linear_cfg() -> SvrConfig {
        SvrConfig {
            kernel: KernelKind::Linear,
            ..SvrConfig::default()
        }
    }

    #[test]
    fn refuses_underdetermined_fit() {
        let samples = linear_samples(10, 3);
        assert!(matches!(
            fit(&samples, &SvrConfig::default(), 1),
            Err(Error::UnderDetermined { n: 10, min: 20 })
        ));
    }

    #[test]
    fn linear_ground_truth_is_recovered() {
        let samples = linear_samples(200, 5);
        let model = fit(&samples, &linear_cfg(), 1).unwrap();
        let probe = linear_samples(60, 99);
        let mut within = 0usize;
        for s in &probe {
            let pred = predict(&model, &s.q_in).unwrap();
            if (pred[0] - s.q_out[0]).abs() <= model.epsilons[0] * 2.0
                && (pred[1] - s.q_out[1]).abs() <= model.epsilons[1] * 2.0
            {
                within += 1;
            }
        }
        assert!(
            within as f64 / probe.len() as f64 >= 0.95,
            "only {within}/{} inside the tube",
            probe.len()
        );
    }

    #[test]
    fn constant_output_predicts_constant() {
        let mut samples = linear_samples(80, 11);
        for s in &mut samples {
            s.q_out = [0.1, 0.0];
        }
        let model = fit(&samples, &SvrConfig::default(), 2).unwrap();
        let pred = predict(&model, &samples[7].q_in).unwrap();
        assert!((pred[0] - 0.1).abs() < 1e-4);
        assert!(pred[1].abs() < 1e-4);
    }

    #[test]
    fn degenerate_feature_is_flagged_not_fatal() {
        let mut samples = linear_samples(60, 13);
        for s in &mut samples {
            s.q_in[3] = 2.5; // constant acceleration channel
        }
        let model = fit(&samples, &linear_cfg(), 3).unwrap();
        assert!(model.scaler.degenerate[3]);
        assert_eq!(model.scaler.scale[3], 1.0);
        assert!(predict(&model, &samples[0].q_in).is_ok());
    }

    #[test]
    fn predictions_are_deterministic_and_persistent() {
        let samples = linear_samples(120, 17);
        let model = fit(&samples, &SvrConfig::default(), 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        for s in &samples {
            let a = predict(&model, &s.q_in).unwrap();
            let b = predict(&loaded, &s.q_in).unwrap();
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
    }

    #[test]
    fn rejects_non_finite_features() {
        let samples = linear_samples(60, 19);
        let model = fit(&samples, &SvrConfig::default(), 5).unwrap();
        let mut bad = samples[0].q_in;
        bad[2] = f64::NAN;
        assert!(matches!(
            predict(&model, &bad),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dual_box_and_equality_hold() {
        let samples = linear_samples(150, 23);
        let model = fit(&samples, &SvrConfig::default(), 6).unwrap();
        for (reg, diag) in model.regressors.iter().zip(&model.diagnostics) {
            assert!(diag.equality_residual.abs() <= 1e-9);
            for b in &reg.beta {
                assert!(b.abs() <= model.c + 1e-12);
                assert!(*b != 0.0);
            }
            assert_eq!(reg.beta.len(), diag.support_count);
        }
    }

    #[test]
    fn r_squared_sanity() {
        let actual = [1.0, 2.0, 3.0, 4.0];
        assert!((r_squared(&actual, &actual) - 1.0).abs() < 1e-12);
        let mean_pred = [2.5; 4];
        assert!(r_squared(&mean_pred, &actual).abs() < 1e-12);
    }
}
