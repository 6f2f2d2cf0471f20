//! Classification-layer primitives: decision-tree ensembles (random forest
//! and extremely randomized trees), multinomial logistic regression and a
//! one-vs-rest linear SVM, plus probability summation and the argmax output
//! rule.
//!
//! RF, ERF and LR are soft classifiers whose per-instance outputs are
//! probability vectors summing to 1; the SVM is a hard classifier emitting
//! one-hot vectors. Summation nodes add these vectors without
//! renormalization.

mod forest;
mod linear;
mod tree;

pub use forest::{fit_forest, Forest, ForestMode};
pub use linear::{fit_linear_svm, fit_logistic_regression, softmax_loss_grad, LinearModel};
pub use tree::{fit_decision_tree, DecisionTree};

use ndarray::{Array2, ArrayView2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierFamily {
    Rf,
    Erf,
    Lr,
    Svm,
}

/// A trained classifier attached to a phenotype node.
#[derive(Clone, Debug)]
pub enum FittedClassifier {
    Forest(Forest),
    Logistic(LinearModel),
    Svm(LinearModel),
}

impl FittedClassifier {
    pub fn family(&self) -> ClassifierFamily {
        match self {
            FittedClassifier::Forest(f) => {
                if f.mode == ForestMode::Standard {
                    ClassifierFamily::Rf
                } else {
                    ClassifierFamily::Erf
                }
            }
            FittedClassifier::Logistic(_) => ClassifierFamily::Lr,
            FittedClassifier::Svm(_) => ClassifierFamily::Svm,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FittedClassifier::Forest(f) => f.input_dim,
            FittedClassifier::Logistic(m) | FittedClassifier::Svm(m) => m.input_dim(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            FittedClassifier::Forest(f) => f.num_classes,
            FittedClassifier::Logistic(m) | FittedClassifier::Svm(m) => m.num_classes(),
        }
    }

    /// Per-instance class probabilities (one-hot rows for the SVM).
    /// Rejects inputs whose width differs from the fit width.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, String> {
        if x.ncols() != self.input_dim() {
            return Err(format!(
                "input width {} does not match fitted width {}",
                x.ncols(),
                self.input_dim()
            ));
        }
        Ok(match self {
            FittedClassifier::Forest(f) => f.predict_proba(x),
            FittedClassifier::Logistic(m) => m.predict_softmax(x),
            FittedClassifier::Svm(m) => m.predict_one_hot(x),
        })
    }
}

/// Elementwise sum of 2..=4 probability matrices; no renormalization.
pub fn sum_probabilities(parts: &[Array2<f64>]) -> Result<Array2<f64>, String> {
    assert!((2..=4).contains(&parts.len()));
    let shape = parts[0].dim();
    for p in &parts[1..] {
        if p.dim() != shape {
            return Err(format!(
                "probability shapes differ: {:?} vs {:?}",
                shape,
                p.dim()
            ));
        }
    }
    let mut out = parts[0].clone();
    for p in &parts[1..] {
        out += p;
    }
    Ok(out)
}

/// Index of the maximum entry; ties break to the lowest index.
pub fn argmax_label(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sum_is_elementwise_without_renormalization() {
        let a = array![[0.2, 0.8]];
        let b = array![[0.5, 0.5]];
        let s = sum_probabilities(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s, array![[0.7, 1.3]]);
        // Commutative for two inputs.
        assert_eq!(s, sum_probabilities(&[b, a]).unwrap());
    }

    #[test]
    fn sum3_of_identical_is_triple() {
        let v = array![[0.1, 0.9]];
        let s = sum_probabilities(&[v.clone(), v.clone(), v.clone()]).unwrap();
        assert_eq!(s, array![[0.30000000000000004, 2.7]]);
        for (a, b) in s.iter().zip(v.iter()) {
            assert!((a - 3.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn sum_rejects_mismatched_lengths() {
        let a = Array2::zeros((1, 2));
        let b = Array2::zeros((1, 3));
        assert!(sum_probabilities(&[a, b]).is_err());
    }

    #[test]
    fn argmax_tie_breaks_low() {
        assert_eq!(argmax_label(&[0.7, 1.3]), 1);
        assert_eq!(argmax_label(&[0.5, 0.5]), 0);
        assert_eq!(argmax_label(&[0.25; 4]), 0);
        // Positive scaling never changes the argmax.
        let v = [0.2, 0.5, 0.3];
        let scaled: Vec<f64> = v.iter().map(|x| x * 17.5).collect();
        assert_eq!(argmax_label(&v), argmax_label(&scaled));
    }
}
