use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    require_both_classes, Family, FeatureMap, HyperParams, LinearModel, ModelArtifact, ModelError, ModelParams,
    Standardization, SvmParams, TrainingMeta, FORMAT_VERSION,
};
use crate::dataset::Dataset;
use crate::linalg::dot;
use crate::prelude::*;

/// Mapped rows above this many entries are recomputed on every visit
/// instead of being cached.
const CACHE_LIMIT: usize = 1 << 24;

/// Offset between the kernel-map seed and the shuffle seed.
const SHUFFLE_STREAM: u64 = 0x5DEE_CE66_D1CE_4E5B;

/// Applies the cumulative l1 penalty `u` to one weight, remembering in `q`
/// how much has been applied so far. Weights that would cross zero stop at
/// exactly zero.
fn truncate_l1(w: &mut f64, q: &mut f64, u: f64) {
    let before = *w;
    if before > 0.0 {
        *w = (before - (u + *q)).max(0.0);
    } else if before < 0.0 {
        *w = (before + (u - *q)).min(0.0);
    }
    *q += *w - before;
}

/// Linear classifier trained by plain SGD on the hinge loss with an
/// elastic-net penalty, after an optional explicit kernel map.
///
/// Uses the "optimal" step size `1 / (alpha (t0 + t))` with `t0` chosen so
/// the first step equals `1 / sqrt(sqrt(alpha))`. The l2 part shrinks the
/// weights multiplicatively every step; the l1 part uses cumulative-penalty
/// truncation, so unhelpful weights end at exactly zero.
pub fn train_linear_svm(ds: &Dataset, p: &SvmParams) -> Result<ModelArtifact, ModelError> {
    require_both_classes(ds)?;
    HyperParams::LinearSvm(p.clone()).validate()?;
    let d = ds.n_features();
    let n = ds.n_rows();
    let std = Standardization::fit(ds);
    let z = std.transform(ds);
    let map = FeatureMap::for_svm(p, d)?;
    let m = map.output_dim();
    let cache: Option<Vec<f64>> =
        (n.saturating_mul(m) <= CACHE_LIMIT).then(|| z.chunks(d.max(1)).take(n).flat_map(|r| map.apply(r)).collect());
    let features = |i: usize| -> Vec<f64> {
        match &cache {
            Some(c) => c[i * m..(i + 1) * m].to_vec(),
            None => map.apply(&z[i * d..(i + 1) * d]),
        }
    };

    let y: Vec<f64> = ds.labels().iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let cw: Vec<f64> = ds.labels().iter().map(|&l| p.class_weights[usize::from(l)]).collect();
    let l1 = p.effective_l1_ratio();
    let alpha = p.alpha;
    let typw = libm::sqrt(1.0 / libm::sqrt(alpha));
    let t0 = 1.0 / (typw * alpha);

    let mut w = vec![0.0; m];
    let mut q = vec![0.0; m];
    let mut b = 0.0;
    let mut u = 0.0;
    let mut t = 0.0_f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ SHUFFLE_STREAM);
    let objective = |w: &[f64], b: f64| -> f64 {
        let mut loss = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            let x = features(i);
            loss += cw[i] * (1.0 - y[i] * (dot(w, &x) + b)).max(0.0);
            total += cw[i];
        }
        let l2 = 0.5 * (1.0 - l1) * dot(w, w);
        let l1n = l1 * w.iter().map(|v| v.abs()).sum::<f64>();
        loss / total.max(f64::MIN_POSITIVE) + alpha * (l2 + l1n)
    };
    let mut history = vec![objective(&w, b)];

    for _ in 0..p.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = features(i);
            let eta = 1.0 / (alpha * (t0 + t));
            let margin = y[i] * (dot(&w, &x) + b);
            if l1 < 1.0 {
                let shrink = (1.0 - (1.0 - l1) * eta * alpha).max(0.0);
                w.iter_mut().for_each(|v| *v *= shrink);
            }
            if margin <= 1.0 {
                let update = eta * y[i] * cw[i];
                for (wj, xj) in w.iter_mut().zip(&x) {
                    *wj += update * xj;
                }
                b += update;
            }
            if l1 > 0.0 {
                u += l1 * eta * alpha;
                for (wj, qj) in w.iter_mut().zip(q.iter_mut()) {
                    truncate_l1(wj, qj, u);
                }
            }
            t += 1.0;
        }
        history.push(objective(&w, b));
    }

    Ok(ModelArtifact {
        format_version: FORMAT_VERSION,
        family: Family::LinearSvm,
        hyperparams: HyperParams::LinearSvm(p.clone()),
        feature_names: ds.feature_names().to_vec(),
        standardization: Some(std),
        parameters: ModelParams::Linear(LinearModel {
            weights: w,
            intercept: b,
        }),
        training: TrainingMeta {
            seed: Some(p.seed),
            iterations: p.epochs,
            converged: true,
            loss_history: history,
            train_rows: n,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_stops_at_zero() {
        let (mut w, mut q) = (0.3, 0.0);
        truncate_l1(&mut w, &mut q, 0.1);
        assert!((w - 0.2).abs() < 1e-15);
        truncate_l1(&mut w, &mut q, 1.0);
        assert_eq!(w, 0.0);
        let (mut v, mut r) = (-0.05, 0.0);
        truncate_l1(&mut v, &mut r, 0.1);
        assert_eq!(v, 0.0);
    }
}
