use serde::{Deserialize, Serialize};

use super::EvalError;

/// Confusion counts and the rates derived from them. Undefined ratios
/// (0/0) are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub weighted_accuracy: Option<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Metrics {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        // 2PR/(P+R) == 2tp/(2tp+fp+fn), evaluated from integers.
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        Metrics {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            weighted_accuracy: None,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// f1 from precision and recall directly.
    pub fn f1_from_rates(precision: f64, recall: f64) -> f64 {
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }
}

/// Precision, recall and f1 of `y_pred` against `y_true` (label 1 = botnet).
///
/// With `class_weights = [w0, w1]` the weighted accuracy is also computed:
/// each sample counts with the weight of its true class.
pub fn prf1(y_true: &[u8], y_pred: &[u8], class_weights: Option<[f64; 2]>) -> Result<Metrics, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            (0, 0) => tn += 1,
            _ => return Err(EvalError::NonBinary),
        }
    }
    let mut m = Metrics::from_counts(tp, fp, fn_, tn);
    if let Some([w0, w1]) = class_weights {
        let correct = w0 * tn as f64 + w1 * tp as f64;
        let total = w0 * (tn + fp) as f64 + w1 * (tp + fn_) as f64;
        m.weighted_accuracy = Some(if total > 0.0 { correct / total } else { 0.0 });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [0, 1, 1, 0, 1];
        let m = prf1(&y, &y, None).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn zero_conventions() {
        let y = [0, 1, 1, 0];
        let none = prf1(&y, &[0; 4], None).unwrap();
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
        let all = prf1(&y, &[1; 4], None).unwrap();
        assert_eq!(all.recall, 1.0);
        assert_eq!(all.precision, 0.5);
        let empty = prf1(&[], &[], None).unwrap();
        assert_eq!(empty.f1, 0.0);
    }

    #[test]
    fn table_row_f1() {
        let f1 = Metrics::f1_from_rates(1.0, 0.95);
        assert!((f1 - 0.974358974358974).abs() < 1e-12);
        assert_eq!(libm::round(f1 * 1000.0) / 1000.0, 0.974);
        // two-decimal rounding of the reported value gives 0.97; the
        // three-decimal 0.975 arises from P and R themselves being rounded.
        assert!((f1 - 0.975).abs() < 1e-3);
    }

    #[test]
    fn weighted_accuracy() {
        let m = prf1(&[0, 0, 1, 1], &[0, 1, 1, 0], Some([0.5, 1.0])).unwrap();
        // correct: one class-0 (0.5) + one class-1 (1.0); total 0.5*2 + 1.0*2
        assert!((m.weighted_accuracy.unwrap() - 1.5 / 3.0).abs() < 1e-15);
        assert_eq!(prf1(&[0, 1], &[0], None), Err(EvalError::LengthMismatch(2, 1)));
        assert_eq!(prf1(&[2], &[0], None), Err(EvalError::NonBinary));
    }
}
