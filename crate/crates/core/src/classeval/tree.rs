use crate::dataio::Dataset;
use crate::{Error, Matrix, Result};

pub const MIN_SAMPLES_SPLIT: usize = 4;
pub const MIN_SAMPLES_LEAF: usize = 2;
/// Splits must lower the weighted impurity by more than this.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        class: usize,
        /// Weighted class mass reaching the leaf.
        mass: Vec<f64>,
        samples: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classifier with class-balanced sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedTree {
    pub nodes: Vec<Node>,
    n_features: usize,
}

impl FittedTree {
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// Weighted Gini impurity times total weight: `W - sum_c m_c^2 / W`.
fn weighted_gini(mass: &[f64]) -> f64 {
    let w: f64 = mass.iter().sum();
    if w <= 0.0 {
        return 0.0;
    }
    w - mass.iter().map(|m| m * m).sum::<f64>() / w
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted impurity of the two children.
    pub impurity: f64,
}

/// Best (feature, midpoint threshold) for the rows `idx`, over splits that
/// leave at least `MIN_SAMPLES_LEAF` rows per side. Ties keep the lower
/// feature, then the lower threshold.
pub fn best_split(x: &Matrix, labels: &[usize], weights: &[f64], n_classes: usize, idx: &[usize]) -> Option<SplitChoice> {
    let mut total = vec![0.0; n_classes];
    for &i in idx {
        total[labels[i]] += weights[i];
    }
    let mut best: Option<SplitChoice> = None;
    let mut order = idx.to_vec();
    for f in 0..x.ncols() {
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]).then(a.cmp(&b)));
        let mut left = vec![0.0; n_classes];
        for pos in 0..order.len() - 1 {
            let i = order[pos];
            left[labels[i]] += weights[i];
            let (lo, hi) = (x[[i, f]], x[[order[pos + 1], f]]);
            let n_left = pos + 1;
            if lo == hi || n_left < MIN_SAMPLES_LEAF || order.len() - n_left < MIN_SAMPLES_LEAF {
                continue;
            }
            let right: Vec<f64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let impurity = weighted_gini(&left) + weighted_gini(&right);
            if best.is_none_or(|b| impurity < b.impurity) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

/// Per-row weights `n / (C * n_c)` over the `C` classes present.
pub fn balanced_weights(train: &Dataset) -> Vec<f64> {
    let n = train.n_rows() as f64;
    let present = train.n_present_classes() as f64;
    let counts = train.class_counts();
    train
        .labels()
        .iter()
        .map(|&y| n / (present * counts[y] as f64))
        .collect()
}

pub fn tree_fit(train: &Dataset) -> Result<FittedTree> {
    if train.n_rows() == 0 {
        return Err(Error::InvalidArgument("cannot fit a tree on no rows".into()));
    }
    let x = train.features();
    let labels = train.labels();
    let weights = balanced_weights(train);
    let k = train.n_classes();
    let mut nodes = Vec::new();
    let mut stack = vec![((0..train.n_rows()).collect::<Vec<usize>>(), None::<(usize, bool)>)];
    while let Some((idx, parent)) = stack.pop() {
        let id = nodes.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                *(if is_left { left } else { right }) = id;
            }
        }
        let mut mass = vec![0.0; k];
        for &i in &idx {
            mass[labels[i]] += weights[i];
        }
        let pure = mass.iter().filter(|&&m| m > 0.0).count() <= 1;
        let split = if pure || idx.len() < MIN_SAMPLES_SPLIT {
            None
        } else {
            best_split(x, labels, &weights, k, &idx)
                .filter(|s| weighted_gini(&mass) - s.impurity > MIN_DECREASE)
        };
        match split {
            None => nodes.push(Node::Leaf {
                class: argmax_first(&mass),
                mass,
                samples: idx.len(),
            }),
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[[i, s.feature]] <= s.threshold);
                nodes.push(Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                });
                // right pushed first so the left subtree is numbered first
                stack.push((r, Some((id, false))));
                stack.push((l, Some((id, true))));
            }
        }
    }
    Ok(FittedTree {
        nodes,
        n_features: train.n_features(),
    })
}

pub fn tree_predict(model: &FittedTree, features: &Matrix) -> Result<Vec<usize>> {
    if features.ncols() != model.n_features {
        return Err(Error::dim("tree features", model.n_features, features.ncols()));
    }
    Ok(features
        .rows()
        .into_iter()
        .map(|row| {
            let mut i = 0;
            loop {
                match &model.nodes[i] {
                    Node::Leaf { class, .. } => return *class,
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => i = if row[*feature] <= *threshold { *left } else { *right },
                }
            }
        })
        .collect())
}
