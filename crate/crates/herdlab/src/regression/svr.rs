//! Scalar epsilon-insensitive support vector regression trained by
//! sequential minimal optimization on the box-constrained dual.
//!
//! The 2n-variable dual (one pair of coefficients per sample) is solved
//! with maximal-violating-pair working-set selection; convergence is the
//! usual KKT gap criterion. Everything is deterministic: no sampling, and
//! ties resolve to the lowest index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => {
                let mut d2 = 0.0;
                for (x, y) in a.iter().zip(b) {
                    let d = x - y;
                    d2 += d * d;
                }
                (-gamma * d2).exp()
            }
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

/// Training knobs for one scalar regressor.
#[derive(Debug, Clone, Copy)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    /// KKT gap below which the dual is considered solved.
    pub tol: f64,
    pub max_iter: usize,
}

/// A trained scalar regressor: support vectors with their combined dual
/// coefficients and the bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrCore {
    pub kernel: Kernel,
    pub support: Vec<Vec<f64>>,
    /// `alpha - alpha*` per support vector; never zero.
    pub beta: Vec<f64>,
    pub bias: f64,
}

impl SvrCore {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut f = self.bias;
        for (sv, b) in self.support.iter().zip(&self.beta) {
            f += b * self.kernel.eval(sv, x);
        }
        f
    }
}

/// Solver facts used by diagnostics and tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrDiagnostics {
    pub iterations: usize,
    /// Final KKT gap.
    pub kkt_gap: f64,
    /// `Σ (alpha - alpha*)`, zero up to round-off at a feasible point.
    pub equality_residual: f64,
    /// Fraction of training targets within the epsilon tube.
    pub in_tube_fraction: f64,
    pub support_count: usize,
}

pub fn train_svr(
    features: &[Vec<f64>],
    targets: &[f64],
    params: &SvrParams,
) -> Result<(SvrCore, SvrDiagnostics)> {
    let n = features.len();
    assert_eq!(n, targets.len());
    if n == 0 {
        return Err(Error::InvalidInput("no training data".into()));
    }
    let c = params.c;
    let eps = params.epsilon;

    // Cached Gram matrix; the data sizes here stay small.
    let mut gram = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = params.kernel.eval(&features[i], &features[j]);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    let k_at = |i: usize, j: usize| gram[i * n + j];

    // theta = [alpha; alpha*] with labels +1 / -1.
    let m2 = 2 * n;
    let label = |t: usize| if t < n { 1.0 } else { -1.0 };
    let base = |t: usize| if t < n { t } else { t - n };
    let mut theta = vec![0.0f64; m2];
    let mut grad: Vec<f64> = (0..m2)
        .map(|t| {
            if t < n {
                eps - targets[t]
            } else {
                eps + targets[t - n]
            }
        })
        .collect();

    let mut iterations = 0usize;
    let mut gap = f64::INFINITY;
    loop {
        // Maximal violating pair over -y*grad.
        let mut i_up: Option<(usize, f64)> = None;
        let mut i_low: Option<(usize, f64)> = None;
        for t in 0..m2 {
            let y = label(t);
            let v = -y * grad[t];
            let in_up = (y > 0.0 && theta[t] < c) || (y < 0.0 && theta[t] > 0.0);
            let in_low = (y > 0.0 && theta[t] > 0.0) || (y < 0.0 && theta[t] < c);
            if in_up && i_up.map_or(true, |(_, best)| v > best) {
                i_up = Some((t, v));
            }
            if in_low && i_low.map_or(true, |(_, best)| v < best) {
                i_low = Some((t, v));
            }
        }
        let (Some((i, m_up)), Some((j, m_low))) = (i_up, i_low) else {
            break;
        };
        gap = m_up - m_low;
        if gap < params.tol {
            break;
        }
        if iterations >= params.max_iter {
            return Err(Error::NoConvergence(params.max_iter));
        }
        iterations += 1;

        let (bi, bj) = (base(i), base(j));
        let (yi, yj) = (label(i), label(j));
        // Curvature along the feasible direction, the same expression for
        // both label patterns.
        let quad = (k_at(bi, bi) + k_at(bj, bj) - 2.0 * k_at(bi, bj)).max(1e-12);

        let (old_i, old_j) = (theta[i], theta[j]);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = theta[i] - theta[j];
            theta[i] += delta;
            theta[j] += delta;
            if diff > 0.0 {
                if theta[j] < 0.0 {
                    theta[j] = 0.0;
                    theta[i] = diff;
                }
                if theta[i] > c {
                    theta[i] = c;
                    theta[j] = c - diff;
                }
            } else {
                if theta[i] < 0.0 {
                    theta[i] = 0.0;
                    theta[j] = -diff;
                }
                if theta[j] > c {
                    theta[j] = c;
                    theta[i] = c + diff;
                }
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = theta[i] + theta[j];
            theta[i] -= delta;
            theta[j] += delta;
            if sum > c {
                if theta[i] > c {
                    theta[i] = c;
                    theta[j] = sum - c;
                }
                if theta[j] > c {
                    theta[j] = c;
                    theta[i] = sum - c;
                }
            } else {
                if theta[j] < 0.0 {
                    theta[j] = 0.0;
                    theta[i] = sum;
                }
                if theta[i] < 0.0 {
                    theta[i] = 0.0;
                    theta[j] = sum;
                }
            }
        }

        let (di, dj) = (theta[i] - old_i, theta[j] - old_j);
        if di == 0.0 && dj == 0.0 {
            // Numerically stuck pair; treat as converged at current gap.
            break;
        }
        for t in 0..m2 {
            let q_ti = label(t) * yi * k_at(base(t), bi);
            let q_tj = label(t) * yj * k_at(base(t), bj);
            grad[t] += q_ti * di + q_tj * dj;
        }
    }

    // Bias from the KKT conditions at the solution.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..m2 {
        let y = label(t);
        let yg = y * grad[t];
        if theta[t] >= c {
            if y < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if theta[t] <= 0.0 {
            if y > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let bias = -rho;

    let beta_full: Vec<f64> = (0..n).map(|i| theta[i] - theta[i + n]).collect();
    let equality_residual = beta_full.iter().sum::<f64>();

    let mut support = Vec::new();
    let mut beta = Vec::new();
    for (i, &b) in beta_full.iter().enumerate() {
        if b != 0.0 {
            support.push(features[i].clone());
            beta.push(b);
        }
    }
    let core = SvrCore {
        kernel: params.kernel,
        support,
        beta,
        bias,
    };
    let in_tube = (0..n)
        .filter(|&i| (core.predict(&features[i]) - targets[i]).abs() <= eps + 1e-9)
        .count();
    let diag = SvrDiagnostics {
        iterations,
        kkt_gap: gap,
        equality_residual,
        in_tube_fraction: in_tube as f64 / n as f64,
        support_count: core.beta.len(),
    };
    Ok((core, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(kernel: Kernel, epsilon: f64) -> SvrParams {
        SvrParams {
            kernel,
            c: 10.0,
            epsilon,
            tol: 1e-3,
            max_iter: 200_000,
        }
    }

    #[test]
    fn fits_line_through_noise_free_points() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 10.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0] - 1.0).collect();
        let (core, diag) = train_svr(&xs, &ys, &params(Kernel::Linear, 0.01)).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((core.predict(x) - y).abs() <= 0.02);
        }
        assert!(diag.kkt_gap < 1e-3);
        assert!(diag.in_tube_fraction >= 0.95);
    }

    #[test]
    fn constant_targets_yield_constant_model() {
        let xs: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let ys = vec![0.1; 25];
        let (core, _) = train_svr(&xs, &ys, &params(Kernel::Rbf { gamma: 0.5 }, 1e-6)).unwrap();
        for x in &xs {
            assert_abs_diff_eq!(core.predict(x), 0.1, epsilon = 1e-5);
        }
    }

    #[test]
    fn dual_feasible_at_convergence() {
        let xs: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64 / 10.0;
                vec![t.sin(), t.cos()]
            })
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[1] + 0.3 * x[0]).collect();
        let p = params(Kernel::Rbf { gamma: 1.0 }, 0.01);
        let (core, diag) = train_svr(&xs, &ys, &p).unwrap();
        assert!(diag.equality_residual.abs() <= 1e-9);
        for b in &core.beta {
            assert!(*b != 0.0);
            assert!(b.abs() <= p.c + 1e-12);
        }
        assert_eq!(core.beta.len(), diag.support_count);
    }

    #[test]
    fn rbf_interpolates_smooth_function() {
        let xs: Vec<Vec<f64>> = (0..80).map(|i| vec![i as f64 * 0.1]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x[0]).sin()).collect();
        let (core, _) = train_svr(&xs, &ys, &params(Kernel::Rbf { gamma: 2.0 }, 0.01)).unwrap();
        for i in 0..79 {
            let mid = vec![i as f64 * 0.1 + 0.05];
            assert!((core.predict(&mid) - mid[0].sin()).abs() < 0.05);
        }
    }

    #[test]
    fn deterministic_training() {
        let xs: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()])
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] - 0.5 * x[1]).collect();
        let p = params(Kernel::Rbf { gamma: 0.8 }, 0.02);
        let (a, _) = train_svr(&xs, &ys, &p).unwrap();
        let (b, _) = train_svr(&xs, &ys, &p).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn non_convergence_is_reported() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        let mut p = params(Kernel::Linear, 1e-9);
        p.max_iter = 0;
        assert!(matches!(
            train_svr(&xs, &ys, &p),
            Err(Error::NoConvergence(0))
        ));
    }
}
