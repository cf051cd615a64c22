//! Gradient-boosted regression trees for squared loss.
//!
//! Each round fits a depth-limited tree to the current residuals with exact
//! greedy splits (candidate thresholds are midpoints between consecutive
//! distinct values) and adds it with shrinkage. Trees are grown level by
//! level over presorted columns, so one level costs `O(columns * rows)`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dataset::FeatureMatrix;
use crate::evaluation::ImportanceVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Row fraction drawn (without replacement) for each tree; 1.0 disables.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.05,
            min_leaf: 5,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Node {
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Squared-error reduction achieved by this split.
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[*column] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GbdtModel {
    pub base_prediction: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub params: GbdtParams,
    /// Training MSE before the first tree and after each tree.
    pub train_loss: Vec<f64>,
    pub n_columns: usize,
    column_variables: Vec<usize>,
    variables: Vec<String>,
}

struct Frontier {
    node: usize,
    depth: usize,
    count: usize,
    sum: f64,
    sum_sq: f64,
    best: Option<(usize, f64, f64)>,
}

fn grow_tree(x: &FeatureMatrix, sorted: &[Vec<usize>], residual: &[f64], rows: &[bool], params: &GbdtParams) -> Tree {
    let n = x.rows();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    // Node currently holding each row; usize::MAX for rows outside the sample
    // or already settled in a leaf.
    let mut owner: Vec<usize> = (0..n).map(|i| if rows[i] { 0 } else { usize::MAX }).collect();
    let mut root = Frontier {
        node: 0,
        depth: 0,
        count: 0,
        sum: 0.0,
        sum_sq: 0.0,
        best: None,
    };
    for i in (0..n).filter(|&i| rows[i]) {
        root.count += 1;
        root.sum += residual[i];
        root.sum_sq += residual[i] * residual[i];
    }
    let mut frontier = vec![root];
    let mut slot_of = vec![usize::MAX; 1];

    while !frontier.is_empty() {
        slot_of.resize(nodes.len(), usize::MAX);
        slot_of.fill(usize::MAX);
        for (s, f) in frontier.iter().enumerate() {
            if f.depth < params.max_depth && f.count >= 2 * params.min_leaf {
                slot_of[f.node] = s;
            }
        }
        let k = frontier.len();
        let mut cnt = vec![0usize; k];
        let mut sum = vec![0.0f64; k];
        let mut last = vec![f64::NAN; k];
        for (j, order) in sorted.iter().enumerate() {
            cnt.fill(0);
            sum.fill(0.0);
            for &i in order {
                let o = owner[i];
                if o == usize::MAX || slot_of[o] == usize::MAX {
                    continue;
                }
                let s = slot_of[o];
                let xi = x.get(i, j);
                let f = &mut frontier[s];
                if cnt[s] >= params.min_leaf && f.count - cnt[s] >= params.min_leaf && xi > last[s] {
                    let (nl, nr) = (cnt[s] as f64, (f.count - cnt[s]) as f64);
                    let sr = f.sum - sum[s];
                    let gain = sum[s] * sum[s] / nl + sr * sr / nr - f.sum * f.sum / f.count as f64;
                    let floor = f64::EPSILON * f.sum_sq;
                    if gain > floor && f.best.is_none_or(|b| gain > b.2) {
                        f.best = Some((j, 0.5 * (last[s] + xi), gain));
                    }
                }
                cnt[s] += 1;
                sum[s] += residual[i];
                last[s] = xi;
            }
        }

        let mut next = Vec::new();
        for f in &frontier {
            match f.best {
                Some((column, threshold, gain)) if slot_of[f.node] != usize::MAX => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[f.node] = Node::Split {
                        column,
                        threshold,
                        left,
                        right: left + 1,
                        gain,
                    };
                    for c in [left, left + 1] {
                        next.push(Frontier {
                            node: c,
                            depth: f.depth + 1,
                            count: 0,
                            sum: 0.0,
                            sum_sq: 0.0,
                            best: None,
                        });
                    }
                }
                _ => {
                    nodes[f.node] = Node::Leaf {
                        value: if f.count > 0 { f.sum / f.count as f64 } else { 0.0 },
                    };
                }
            }
        }
        let index_of: std::collections::HashMap<usize, usize> =
            next.iter().enumerate().map(|(s, f)| (f.node, s)).collect();
        for i in 0..n {
            let o = owner[i];
            if o == usize::MAX {
                continue;
            }
            match &nodes[o] {
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let c = if x.get(i, *column) <= *threshold { *left } else { *right };
                    owner[i] = c;
                    let f = &mut next[index_of[&c]];
                    f.count += 1;
                    f.sum += residual[i];
                    f.sum_sq += residual[i] * residual[i];
                }
                Node::Leaf { .. } => owner[i] = usize::MAX,
            }
        }
        frontier = next;
    }
    Tree { nodes }
}

fn presort(x: &FeatureMatrix) -> Vec<Vec<usize>> {
    (0..x.cols())
        .map(|j| {
            let mut idx: Vec<usize> = (0..x.rows()).collect();
            idx.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)).then(a.cmp(&b)));
            idx
        })
        .collect()
}

pub fn fit_gbdt(x: &FeatureMatrix, y: &[f64], params: &GbdtParams) -> Result<GbdtModel, ModelError> {
    if params.n_trees == 0 {
        return Err(ModelError::Hyper("n_trees must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(ModelError::Hyper(format!(
            "learning_rate {} not in (0, 1]",
            params.learning_rate
        )));
    }
    if params.max_depth == 0 || params.min_leaf == 0 {
        return Err(ModelError::Hyper("max_depth and min_leaf must be positive".into()));
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(ModelError::Hyper(format!(
            "subsample {} not in (0, 1]",
            params.subsample
        )));
    }
    if y.len() != x.rows() {
        return Err(ModelError::Shape(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if x.rows() < 2 * params.min_leaf {
        return Err(ModelError::TooFewRows {
            rows: x.rows(),
            needed: 2 * params.min_leaf,
        });
    }
    let n = x.rows();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut fitted = vec![base; n];
    let loss = |f: &[f64]| y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
    let mut train_loss = vec![loss(&fitted)];
    let sorted = presort(x);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut residual = vec![0.0; n];
    let mut rows = vec![true; n];
    for _ in 0..params.n_trees {
        for i in 0..n {
            residual[i] = y[i] - fitted[i];
        }
        if params.subsample < 1.0 {
            let m = ((params.subsample * n as f64).round() as usize)
                .max(2 * params.min_leaf)
                .min(n);
            rows.fill(false);
            for i in index::sample(&mut rng, n, m) {
                rows[i] = true;
            }
        }
        let tree = grow_tree(x, &sorted, &residual, &rows, params);
        for (i, f) in fitted.iter_mut().enumerate() {
            *f += params.learning_rate * tree.predict_row(x.row(i));
        }
        train_loss.push(loss(&fitted));
        trees.push(tree);
    }
    Ok(GbdtModel {
        base_prediction: base,
        learning_rate: params.learning_rate,
        trees,
        params: params.clone(),
        train_loss,
        n_columns: x.cols(),
        column_variables: x.columns().iter().map(|c| c.variable).collect(),
        variables: x.variables().to_vec(),
    })
}

pub fn predict_gbdt(model: &GbdtModel, x: &FeatureMatrix) -> Result<Vec<f64>, ModelError> {
    if x.cols() != model.n_columns {
        return Err(ModelError::Shape(format!(
            "model expects {} columns, matrix has {}",
            model.n_columns,
            x.cols()
        )));
    }
    Ok((0..x.rows())
        .map(|i| {
            let row = x.row(i);
            model.base_prediction + model.learning_rate * model.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
        })
        .collect())
}

/// Split-gain importance: total squared-error reduction per column, summed
/// over all trees, folded into parent variables and normalized.
pub fn importance_gbdt(model: &GbdtModel) -> ImportanceVector {
    let mut per_var = vec![0.0; model.variables.len()];
    for t in &model.trees {
        for node in &t.nodes {
            if let Node::Split { column, gain, .. } = node {
                per_var[model.column_variables[*column]] += gain;
            }
        }
    }
    if per_var.iter().sum::<f64>() <= 0.0 {
        log::warn!("GBDT model has no split gain; reporting uniform importance");
    }
    ImportanceVector::normalized(model.variables.iter().cloned().zip(per_var).collect())
        .expect("gains are non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn step_data(n: usize) -> (FeatureMatrix, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let y = rows.iter().map(|r| if r[0] < 0.5 { 2.0 } else { 5.0 }).collect();
        (FeatureMatrix::from_rows(&rows), y)
    }

    #[test]
    fn constant_target() {
        let x = FeatureMatrix::from_rows(&(0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect::<Vec<_>>());
        let y = vec![3.25; 20];
        let m = fit_gbdt(&x, &y, &GbdtParams::default()).unwrap();
        assert_eq!(m.base_prediction, 3.25);
        for t in &m.trees {
            assert_eq!(t.nodes, vec![Node::Leaf { value: 0.0 }]);
        }
        assert!(predict_gbdt(&m, &x).unwrap().iter().all(|&p| p == 3.25));
        // Zero gain everywhere: uniform importance.
        let imp = importance_gbdt(&m);
        assert_eq!(imp.get("x0"), Some(0.5));
    }

    #[test]
    fn step_function_fits() {
        let (x, y) = step_data(100);
        let p = GbdtParams {
            max_depth: 1,
            learning_rate: 0.1,
            ..GbdtParams::default()
        };
        let m = fit_gbdt(&x, &y, &p).unwrap();
        assert!(*m.train_loss.last().unwrap() < 1e-3);
        for w in m.train_loss.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(m.trees.iter().all(|t| t.depth() <= 1));
        let imp = importance_gbdt(&m);
        assert_eq!(imp.get("x0"), Some(1.0));
    }

    #[test]
    fn single_stump_hand_trace() {
        // Rows x = 0,1,2,3 with y = 1,1,5,5; min_leaf 1, depth 1, rate 1.
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let y = [1.0, 1.0, 5.0, 5.0];
        let p = GbdtParams {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            min_leaf: 1,
            ..GbdtParams::default()
        };
        let m = fit_gbdt(&x, &y, &p).unwrap();
        // base 3, residuals -2,-2,2,2, split at 1.5 with leaves -2 and 2.
        match &m.trees[0].nodes[0] {
            Node::Split { threshold, gain, .. } => {
                assert_eq!(*threshold, 1.5);
                assert_eq!(*gain, 16.0);
            }
            n => panic!("{n:?}"),
        }
        let q = FeatureMatrix::from_rows(&[vec![1.2], vec![2.9]]);
        assert_eq!(predict_gbdt(&m, &q).unwrap(), vec![1.0, 5.0]);
        let empty = GbdtModel {
            trees: vec![],
            ..m.clone()
        };
        assert_eq!(predict_gbdt(&empty, &q).unwrap(), vec![3.0, 3.0]);
        assert!(predict_gbdt(&m, &FeatureMatrix::from_rows(&[vec![1.0, 2.0]])).is_err());
    }

    #[test]
    fn hyperparameter_guards() {
        let (x, y) = step_data(20);
        for bad in [
            GbdtParams {
                n_trees: 0,
                ..Default::default()
            },
            GbdtParams {
                learning_rate: 0.0,
                ..Default::default()
            },
            GbdtParams {
                learning_rate: 1.5,
                ..Default::default()
            },
            GbdtParams {
                min_leaf: 11,
                ..Default::default()
            },
        ] {
            assert!(fit_gbdt(&x, &y, &bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn depth_and_min_leaf_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| (r[0] * 6.0).sin() + r[1] * r[2] + rng.random::<f64>() * 0.1)
            .collect();
        let x = FeatureMatrix::from_rows(&rows);
        let m = fit_gbdt(
            &x,
            &y,
            &GbdtParams {
                n_trees: 30,
                ..Default::default()
            },
        )
        .unwrap();
        for t in &m.trees {
            assert!(t.depth() <= 3);
        }
        let imp = importance_gbdt(&m);
        assert!((imp.sum() - 1.0).abs() < 1e-9);
        assert!(imp.get("x3").unwrap() < imp.get("x0").unwrap());
    }

    #[test]
    fn subsampling_is_seeded() {
        let (x, y) = step_data(60);
        let p = GbdtParams {
            subsample: 0.5,
            seed: 9,
            n_trees: 20,
            ..Default::default()
        };
        let a = fit_gbdt(&x, &y, &p).unwrap();
        let b = fit_gbdt(&x, &y, &p).unwrap();
        assert_eq!(a.trees, b.trees);
    }
}
