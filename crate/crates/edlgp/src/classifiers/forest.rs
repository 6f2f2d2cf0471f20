//! Random forest and extremely-randomized-trees ensembles.

use super::tree::{fit_decision_tree, DecisionTree, SplitMode};
use crate::rng::StreamId;
use ndarray::{Array2, ArrayView2};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForestMode {
    /// Bootstrap resamples, Gini-optimal midpoint thresholds.
    Standard,
    /// Full sample (no bootstrap), uniformly drawn thresholds.
    Extra,
}

#[derive(Clone, Debug)]
pub struct Forest {
    pub mode: ForestMode,
    pub num_trees: usize,
    pub max_depth: usize,
    pub num_classes: usize,
    pub input_dim: usize,
    trees: Vec<DecisionTree>,
}

impl Forest {
    /// Mean of the per-tree leaf class distributions.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.num_classes));
        for (i, row) in x.rows().into_iter().enumerate() {
            let row = row.to_vec();
            for tree in &self.trees {
                for (j, &p) in tree.predict_dist(&row).iter().enumerate() {
                    out[(i, j)] += p;
                }
            }
        }
        out / self.trees.len() as f64
    }
}

/// Fit a forest of `num_trees` trees of depth at most `max_depth`. Each
/// tree's randomness comes from a stream derived from `stream` and the tree
/// index, so fits are reproducible and order-independent.
pub fn fit_forest(
    x: ArrayView2<f64>,
    y: &[usize],
    num_classes: usize,
    num_trees: usize,
    max_depth: usize,
    mode: ForestMode,
    stream: StreamId,
) -> Result<Forest, String> {
    if num_trees == 0 {
        return Err("forest needs at least one tree".into());
    }
    if x.nrows() == 0 {
        return Err("cannot fit a forest on an empty sample".into());
    }
    let n = x.nrows();
    let mut trees = Vec::with_capacity(num_trees);
    for t in 0..num_trees {
        let mut rng = stream.child_u64(t as u64).rng();
        let tree = match mode {
            ForestMode::Standard => {
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let bx = take_rows(x, &sample);
                let by: Vec<usize> = sample.iter().map(|&i| y[i]).collect();
                fit_decision_tree(bx.view(), &by, num_classes, max_depth, SplitMode::Standard, &mut rng)?
            }
            ForestMode::Extra => {
                fit_decision_tree(x, y, num_classes, max_depth, SplitMode::Extra, &mut rng)?
            }
        };
        trees.push(tree);
    }
    Ok(Forest { mode, num_trees, max_depth, num_classes, input_dim: x.ncols(), trees })
}

fn take_rows(x: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), x.ncols()));
    for (i, &r) in rows.iter().enumerate() {
        out.row_mut(i).assign(&x.row(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::argmax_label;

    fn blobs(n_per: usize, sep: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = StreamId::new(seed).rng();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for class in 0..2usize {
            let mu = class as f64 * sep;
            for _ in 0..n_per {
                // Box-Muller standard normals.
                let u1: f64 = rng.gen::<f64>().max(1e-12);
                let u2: f64 = rng.gen();
                let r = (-2.0 * u1.ln()).sqrt();
                rows.push(mu + r * (2.0 * std::f64::consts::PI * u2).cos());
                rows.push(mu + r * (2.0 * std::f64::consts::PI * u2).sin());
                y.push(class);
            }
        }
        (Array2::from_shape_vec((2 * n_per, 2), rows).unwrap(), y)
    }

    fn train_accuracy(f: &Forest, x: &Array2<f64>, y: &[usize]) -> f64 {
        let p = f.predict_proba(x.view()).into_raw_vec_and_offset().0;
        let c = f.num_classes;
        y.iter()
            .enumerate()
            .filter(|(i, &l)| argmax_label(&p[i * c..(i + 1) * c]) == l)
            .count() as f64
            / y.len() as f64
    }

    #[test]
    fn single_tree_standard_equals_one_bootstrap_tree() {
        let (x, y) = blobs(20, 4.0, 7);
        let f = fit_forest(x.view(), &y, 2, 1, 10, ForestMode::Standard, StreamId::new(3)).unwrap();
        assert_eq!(f.trees.len(), 1);
        let p = f.predict_proba(x.view());
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (x, y) = blobs(30, 4.0, 1);
        for mode in [ForestMode::Standard, ForestMode::Extra] {
            let f = fit_forest(x.view(), &y, 2, 20, 10, mode, StreamId::new(5)).unwrap();
            let p = f.predict_proba(x.view());
            for row in p.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn separated_blobs_are_learned() {
        let (x, y) = blobs(100, 4.0, 11);
        for mode in [ForestMode::Standard, ForestMode::Extra] {
            let f = fit_forest(x.view(), &y, 2, 50, 10, mode, StreamId::new(2)).unwrap();
            assert!(train_accuracy(&f, &x, &y) >= 0.95, "{mode:?}");
        }
    }

    #[test]
    fn forest_is_deterministic() {
        let (x, y) = blobs(40, 4.0, 9);
        let a = fit_forest(x.view(), &y, 2, 10, 10, ForestMode::Standard, StreamId::new(8)).unwrap();
        let b = fit_forest(x.view(), &y, 2, 10, 10, ForestMode::Standard, StreamId::new(8)).unwrap();
        assert_eq!(a.predict_proba(x.view()), b.predict_proba(x.view()));
    }
}
