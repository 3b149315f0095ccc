use super::{
    require_both_classes, sigmoid, HyperParams, LinearModel, LogRegParams, ModelArtifact, ModelError, ModelParams,
    Standardization, TrainingMeta, FORMAT_VERSION,
};
use crate::dataset::Dataset;
use crate::linalg::{dot, symmetric_eigen};
use crate::prelude::*;

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

struct Problem<'a> {
    z: &'a [f64],
    d: usize,
    y: &'a [u8],
    sw: Vec<f64>,
    total_weight: f64,
    /// `1 / (C * total_weight)`.
    ridge: f64,
}

impl Problem<'_> {
    /// Objective and gradient at `theta = (w, b)`.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.d;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (w, b) = (&theta[..d], theta[d]);
        let mut loss = 0.0;
        for (i, x) in self.z.chunks(d).enumerate() {
            let s = self.sw[i];
            if s == 0.0 {
                continue;
            }
            let m = dot(w, x) + b;
            let yi = f64::from(self.y[i]);
            loss += s * (softplus(m) - yi * m);
            let r = s * (sigmoid(m) - yi);
            for (g, xj) in grad[..d].iter_mut().zip(x) {
                *g += r * xj;
            }
            grad[d] += r;
        }
        let inv = 1.0 / self.total_weight;
        grad.iter_mut().for_each(|g| *g *= inv);
        for (g, wj) in grad[..d].iter_mut().zip(w) {
            *g += self.ridge * wj;
        }
        loss * inv + 0.5 * self.ridge * dot(w, w)
    }

    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64 {
        let k = self.d + 1;
        let mut m = vec![0.0; k * k];
        let mut xt = vec![1.0; k];
        for (i, x) in self.z.chunks(self.d).enumerate() {
            let s = self.sw[i];
            if s == 0.0 {
                continue;
            }
            xt[..self.d].copy_from_slice(x);
            for a in 0..k {
                for b in a..k {
                    m[a * k + b] += s * xt[a] * xt[b];
                }
            }
        }
        for a in 0..k {
            for b in a..k {
                m[a * k + b] /= self.total_weight;
                m[b * k + a] = m[a * k + b];
            }
        }
        let top = symmetric_eigen(&m, k).values.first().copied().unwrap_or(0.0);
        0.25 * top + self.ridge
    }
}

/// Class-weighted, l2-penalized logistic regression on standardized inputs.
///
/// Minimizes `sum_i s_i * logloss_i / sum_i s_i + |w|^2 / (2 C sum_i s_i)`,
/// which has the same minimizer as `C * sum_i s_i * logloss_i + |w|^2 / 2`.
/// Full-batch accelerated gradient descent with step `1/L` and adaptive
/// momentum restart; stops after `max_iter` iterations or once the gradient
/// norm drops below `tol`.
pub fn train_logreg(ds: &Dataset, p: &LogRegParams) -> Result<ModelArtifact, ModelError> {
    require_both_classes(ds)?;
    HyperParams::LogReg(p.clone()).validate()?;
    let d = ds.n_features();
    let std = Standardization::fit(ds);
    let z = std.transform(ds);
    let sw: Vec<f64> = ds.labels().iter().map(|&l| p.class_weights[usize::from(l)]).collect();
    let total_weight: f64 = sw.iter().sum();
    if total_weight <= 0.0 {
        return Err(ModelError::invalid("class_weights", "every training row has weight 0"));
    }
    let prob = Problem {
        z: &z,
        d,
        y: ds.labels(),
        sw,
        total_weight,
        ridge: 1.0 / (p.c * total_weight),
    };
    let step = 1.0 / prob.lipschitz();

    let k = d + 1;
    let mut x = vec![0.0; k];
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut grad = vec![0.0; k];
    let mut t = 1.0_f64;
    let mut history = vec![prob.eval(&x, &mut grad)];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..p.max_iter {
        let _ = prob.eval(&y, &mut grad);
        if libm::sqrt(dot(&grad, &grad)) < p.tol {
            x.copy_from_slice(&y);
            converged = true;
            break;
        }
        iterations += 1;
        x_prev.copy_from_slice(&x);
        for j in 0..k {
            x[j] = y[j] - step * grad[j];
        }
        // Restart the momentum when it points uphill.
        let uphill: f64 = (0..k).map(|j| grad[j] * (x[j] - x_prev[j])).sum();
        let t_next = if uphill > 0.0 {
            t = 1.0;
            1.0
        } else {
            0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t))
        };
        let beta = (t - 1.0) / t_next;
        for j in 0..k {
            y[j] = x[j] + beta * (x[j] - x_prev[j]);
        }
        t = t_next;
        history.push(prob.eval(&x, &mut grad));
    }
    if !converged {
        let _ = prob.eval(&x, &mut grad);
        converged = libm::sqrt(dot(&grad, &grad)) < p.tol;
        if !converged {
            log::warn!(
                "logistic regression did not converge in {} iterations (gradient norm {:.3e})",
                p.max_iter,
                libm::sqrt(dot(&grad, &grad))
            );
        }
    }

    Ok(ModelArtifact {
        format_version: FORMAT_VERSION,
        family: super::Family::LogReg,
        hyperparams: HyperParams::LogReg(p.clone()),
        feature_names: ds.feature_names().to_vec(),
        standardization: Some(std),
        parameters: ModelParams::Linear(LinearModel {
            weights: x[..d].to_vec(),
            intercept: x[d],
        }),
        training: TrainingMeta {
            seed: None,
            iterations,
            converged,
            loss_history: history,
            train_rows: ds.n_rows(),
        },
    })
}
