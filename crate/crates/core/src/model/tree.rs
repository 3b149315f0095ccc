use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dataset::Dataset;
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary decision tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    /// Checks that children follow their parent and features are in range.
    pub fn validate(&self, n_features: usize) -> Result<(), ModelError> {
        if self.nodes.is_empty() {
            return Err(ModelError::Corrupt("tree without nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Split {
                feature, left, right, ..
            } = *node
            {
                let len = self.nodes.len();
                if feature >= n_features || left <= i || right <= i || left >= len || right >= len {
                    return Err(ModelError::Corrupt(format!("tree node {i} is malformed")));
                }
            }
        }
        Ok(())
    }
}

/// Split midpoint between two consecutive distinct values. Falls back to
/// the lower value when the midpoint rounds up to the upper one.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo / 2.0 + hi / 2.0;
    if m < hi && m >= lo {
        m
    } else {
        lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features evaluated per split before settling for the best so far.
    pub max_features: usize,
}

/// Sum of squared class counts over node size, as the exact fraction
/// `(num, den)`. Larger is purer; maximizing it minimizes weighted Gini.
fn purity(a: u64, b: u64) -> (u128, u128) {
    let (a, b) = (u128::from(a), u128::from(b));
    (a * a + b * b, a + b)
}

fn split_score(left: (u64, u64), right: (u64, u64)) -> (u128, u128) {
    let (ln, ld) = purity(left.0, left.1);
    let (rn, rd) = purity(right.0, right.1);
    (ln * rd + rn * ld, ld * rd)
}

fn better(x: (u128, u128), y: (u128, u128)) -> bool {
    x.0 * y.1 > y.0 * x.1
}

fn gini_decrease(parent: (u64, u64), left: (u64, u64), right: (u64, u64)) -> f64 {
    let p = |(a, b): (u64, u64)| {
        let (a, b) = (a as f64, b as f64);
        (a * a + b * b) / (a + b)
    };
    (p(left) + p(right) - p(parent)).max(0.0)
}

/// Row indices of a node with their multiplicities in the sample.
type Members = Vec<(usize, u64)>;

struct Best {
    score: (u128, u128),
    feature: usize,
    threshold: f64,
    left: (u64, u64),
}

/// Grows one Gini classification tree on `samples` (row indices into `ds`,
/// duplicates allowed).
///
/// At each node features are visited in random order; after `max_features`
/// of them the search stops, provided at least one non-constant feature was
/// seen. Candidate thresholds are midpoints between consecutive distinct
/// values and are compared exactly in integer arithmetic, so ties go to the
/// first feature visited and then to the lowest threshold. An impure node is
/// split even when the best split does not lower impurity. Leaves predict
/// the majority class, ties to 1.
///
/// Returns the tree and the total Gini decrease credited to each feature,
/// in units of rows.
pub fn fit_classification_tree<R: Rng>(
    ds: &Dataset,
    samples: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> (Tree, Vec<f64>) {
    let d = ds.n_features();
    let labels = ds.labels();
    let mut importances = vec![0.0; d];
    let mut nodes = vec![Node::Leaf { value: 1.0 }];
    // Repeated indices become one member with a multiplicity.
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let mut weighted: Members = Vec::new();
    for i in sorted {
        match weighted.last_mut() {
            Some((last, w)) if *last == i => *w += 1,
            _ => weighted.push((i, 1)),
        }
    }
    let mut stack: Vec<(usize, Members, usize)> = vec![(0, weighted, 0)];
    let mut features: Vec<usize> = (0..d).collect();
    let mut pairs: Vec<(f64, u8, u64)> = Vec::new();

    while let Some((id, members, depth)) = stack.pop() {
        let pos: u64 = members.iter().filter(|m| labels[m.0] == 1).map(|m| m.1).sum();
        let neg = members.iter().map(|m| m.1).sum::<u64>() - pos;
        nodes[id] = Node::Leaf {
            value: if 2 * pos >= pos + neg { 1.0 } else { 0.0 },
        };
        if pos == 0 || neg == 0 || params.max_depth.is_some_and(|m| depth >= m) {
            continue;
        }

        let mut best: Option<Best> = None;
        let mut nonconstant = 0;
        // `k` features have been visited so far.
        for k in 0..d {
            if k >= params.max_features && nonconstant > 0 {
                break;
            }
            let pick = rng.random_range(k..d);
            features.swap(k, pick);
            let f = features[k];
            pairs.clear();
            pairs.extend(members.iter().map(|&(i, w)| (ds.row(i)[f], labels[i], w)));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[pairs.len() - 1].0 {
                continue;
            }
            nonconstant += 1;
            let (mut ln, mut lp) = (0u64, 0u64);
            for w in 0..pairs.len() - 1 {
                if pairs[w].1 == 1 {
                    lp += pairs[w].2;
                } else {
                    ln += pairs[w].2;
                }
                if pairs[w].0 == pairs[w + 1].0 {
                    continue;
                }
                let score = split_score((ln, lp), (neg - ln, pos - lp));
                if best.as_ref().is_none_or(|b| better(score, b.score)) {
                    best = Some(Best {
                        score,
                        feature: f,
                        threshold: midpoint(pairs[w].0, pairs[w + 1].0),
                        left: (ln, lp),
                    });
                }
            }
        }
        let Some(best) = best else { continue };
        importances[best.feature] += gini_decrease((neg, pos), best.left, (neg - best.left.0, pos - best.left.1));
        let (left_rows, right_rows): (Members, Members) = members
            .into_iter()
            .partition(|&(i, _)| ds.row(i)[best.feature] <= best.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right: left + 1,
        };
        stack.push((left + 1, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    (Tree { nodes }, importances)
}

/// Per-feature row orders by ascending value, shared by every boosting stage.
pub(crate) fn presort(values: &[f64], n: usize, d: usize) -> Vec<Vec<u32>> {
    (0..d)
        .map(|f| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| values[a as usize * d + f].total_cmp(&values[b as usize * d + f]));
            idx
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Scan {
    n: usize,
    sum: f64,
    last: f64,
    started: bool,
}

#[derive(Clone, Copy)]
struct NodeStat {
    n: usize,
    sum: f64,
    min: f64,
    max: f64,
    best: Option<(f64, usize, f64)>,
}

/// Grows a least-squares regression tree level by level to `max_depth`.
///
/// A node holding distinct targets is always split at the threshold that
/// maximizes `sum_L^2 / n_L + sum_R^2 / n_R` (first feature, then lowest
/// threshold on ties), even if the gain is zero. Leaf values are left at 0
/// for the caller to fill; the second result maps each row to its leaf.
pub(crate) fn fit_regression_tree(
    values: &[f64],
    d: usize,
    sorted: &[Vec<u32>],
    targets: &[f64],
    max_depth: usize,
) -> (Tree, Vec<usize>) {
    let n = targets.len();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut node_of = vec![0usize; n];
    let mut open: Vec<usize> = vec![0];
    for _ in 0..max_depth {
        if open.is_empty() {
            break;
        }
        let mut slot_of = vec![usize::MAX; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            slot_of[id] = s;
        }
        let mut stats = vec![
            NodeStat {
                n: 0,
                sum: 0.0,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
                best: None,
            };
            open.len()
        ];
        for (i, &t) in targets.iter().enumerate() {
            let s = slot_of[node_of[i]];
            if s != usize::MAX {
                let st = &mut stats[s];
                st.n += 1;
                st.sum += t;
                st.min = st.min.min(t);
                st.max = st.max.max(t);
            }
        }
        for (f, order) in sorted.iter().enumerate() {
            let mut scans = vec![
                Scan {
                    n: 0,
                    sum: 0.0,
                    last: 0.0,
                    started: false,
                };
                open.len()
            ];
            for &i in order {
                let i = i as usize;
                let s = slot_of[node_of[i]];
                if s == usize::MAX {
                    continue;
                }
                let v = values[i * d + f];
                let sc = &mut scans[s];
                let st = &mut stats[s];
                if sc.started && v > sc.last {
                    let (nl, nr) = (sc.n as f64, (st.n - sc.n) as f64);
                    let sr = st.sum - sc.sum;
                    let score = sc.sum * sc.sum / nl + sr * sr / nr;
                    if st.best.is_none_or(|(b, _, _)| score > b) {
                        st.best = Some((score, f, midpoint(sc.last, v)));
                    }
                }
                sc.n += 1;
                sc.sum += targets[i];
                sc.last = v;
                sc.started = true;
            }
        }
        let mut next = Vec::new();
        let mut split_of: Vec<Option<(usize, f64, usize)>> = vec![None; open.len()];
        for (s, &id) in open.iter().enumerate() {
            let st = &stats[s];
            if st.min >= st.max {
                continue;
            }
            if let Some((_, f, thr)) = st.best {
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[id] = Node::Split {
                    feature: f,
                    threshold: thr,
                    left,
                    right: left + 1,
                };
                split_of[s] = Some((f, thr, left));
                next.push(left);
                next.push(left + 1);
            }
        }
        for (i, node) in node_of.iter_mut().enumerate() {
            let s = slot_of[*node];
            if s == usize::MAX {
                continue;
            }
            if let Some((f, thr, left)) = split_of[s] {
                *node = if values[i * d + f] <= thr { left } else { left + 1 };
            }
        }
        open = next;
    }
    (Tree { nodes }, node_of)
}
