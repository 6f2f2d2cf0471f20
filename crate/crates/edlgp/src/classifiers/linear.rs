//! Multinomial logistic regression and one-vs-rest linear SVM.
//!
//! Both standardize features internally (zero-variance features are
//! ignored); raw pipeline features arrive on wildly different scales.

use ndarray::{Array1, Array2, ArrayView2, Axis};

const L2_LAMBDA: f64 = 1e-4;
const MAX_EPOCHS: usize = 500;
const GRAD_TOL: f64 = 1e-6;
const LR_INITIAL_STEP: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Standardizer {
        let n = x.nrows() as f64;
        let mean: Vec<f64> = x.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let std: Vec<f64> = (0..x.ncols())
            .map(|j| {
                let m = mean[j];
                (x.column(j).iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.dim());
        for (i, row) in x.rows().into_iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out[(i, j)] = if self.std[j] > 0.0 { (v - self.mean[j]) / self.std[j] } else { 0.0 };
            }
        }
        out
    }
}

/// Linear scoring model over standardized features; backs both LR and SVM.
#[derive(Clone, Debug)]
pub struct LinearModel {
    standardizer: Standardizer,
    /// One weight row per class.
    weights: Array2<f64>,
    bias: Array1<f64>,
    /// Set when the fit saw a single class; predictions are then constant.
    constant_class: Option<usize>,
}

impl LinearModel {
    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    /// Raw per-class scores (margins) on unstandardized input.
    pub fn scores(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let xs = self.standardizer.transform(x);
        let mut s = xs.dot(&self.weights.t());
        for mut row in s.rows_mut() {
            row += &self.bias;
        }
        s
    }

    pub fn predict_softmax(&self, x: ArrayView2<f64>) -> Array2<f64> {
        if let Some(c) = self.constant_class {
            let mut out = Array2::zeros((x.nrows(), self.num_classes()));
            out.column_mut(c).fill(1.0);
            return out;
        }
        let mut s = self.scores(x);
        softmax_rows(&mut s);
        s
    }

    pub fn predict_one_hot(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.num_classes()));
        if let Some(c) = self.constant_class {
            out.column_mut(c).fill(1.0);
            return out;
        }
        let s = self.scores(x);
        for (i, row) in s.rows().into_iter().enumerate() {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            out[(i, best)] = 1.0;
        }
        out
    }
}

fn softmax_rows(s: &mut Array2<f64>) {
    for mut row in s.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Mean cross-entropy of the softmax model plus an L2 penalty on the
/// weights (biases unpenalized), and its gradient. Public so the gradient
/// can be checked against finite differences of the loss.
pub fn softmax_loss_grad(
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    xs: ArrayView2<f64>,
    y: &[usize],
    lambda: f64,
) -> (f64, Array2<f64>, Array1<f64>) {
    let n = xs.nrows() as f64;
    let mut p = xs.dot(&weights.t());
    for mut row in p.rows_mut() {
        row += bias;
    }
    softmax_rows(&mut p);
    let mut loss = 0.0;
    for (i, &label) in y.iter().enumerate() {
        loss -= p[(i, label)].max(1e-300).ln();
    }
    loss /= n;
    loss += lambda / 2.0 * weights.iter().map(|w| w * w).sum::<f64>();

    // d/dscores = (P - Y) / n.
    for (i, &label) in y.iter().enumerate() {
        p[(i, label)] -= 1.0;
    }
    let grad_b = p.sum_axis(Axis(0)) / n;
    let mut grad_w = p.t().dot(&xs) / n;
    grad_w += &(weights * lambda);
    (loss, grad_w, grad_b)
}

fn single_class_model(std: Standardizer, dim: usize, num_classes: usize, class: usize) -> LinearModel {
    LinearModel {
        standardizer: std,
        weights: Array2::zeros((num_classes, dim)),
        bias: Array1::zeros(num_classes),
        constant_class: Some(class),
    }
}

/// Multinomial softmax regression: full-batch gradient descent, initial
/// step 0.1 halved whenever a step would increase the loss (the step is then
/// rejected), L2 penalty 1e-4, at most 500 epochs or until the gradient norm
/// drops below 1e-6. Returns the model and the accepted-loss history.
pub(crate) fn fit_lr_impl(
    x: ArrayView2<f64>,
    y: &[usize],
    num_classes: usize,
) -> Result<(LinearModel, Vec<f64>), String> {
    check_labels(x, y, num_classes)?;
    let std = Standardizer::fit(x);
    let xs = std.transform(x);
    if let Some(c) = single_class(y) {
        return Ok((single_class_model(std, x.ncols(), num_classes, c), Vec::new()));
    }

    let mut w = Array2::zeros((num_classes, x.ncols()));
    let mut b = Array1::zeros(num_classes);
    let mut step = LR_INITIAL_STEP;
    let (mut loss, mut gw, mut gb) = softmax_loss_grad(&w, &b, xs.view(), y, L2_LAMBDA);
    let mut history = vec![loss];
    for _ in 0..MAX_EPOCHS {
        let gnorm = (gw.iter().map(|v| v * v).sum::<f64>()
            + gb.iter().map(|v| v * v).sum::<f64>())
        .sqrt();
        if gnorm < GRAD_TOL {
            break;
        }
        let wc = &w - &(&gw * step);
        let bc = &b - &(&gb * step);
        let (lc, gwc, gbc) = softmax_loss_grad(&wc, &bc, xs.view(), y, L2_LAMBDA);
        if lc <= loss {
            w = wc;
            b = bc;
            loss = lc;
            gw = gwc;
            gb = gbc;
            history.push(loss);
        } else {
            step /= 2.0;
        }
    }
    Ok((LinearModel { standardizer: std, weights: w, bias: b, constant_class: None }, history))
}

pub fn fit_logistic_regression(
    x: ArrayView2<f64>,
    y: &[usize],
    num_classes: usize,
) -> Result<LinearModel, String> {
    fit_lr_impl(x, y, num_classes).map(|(m, _)| m)
}

/// One-vs-rest linear SVM: full-batch subgradient descent on hinge loss
/// plus L2 (lambda 1e-4), 500 epochs with step 1/(lambda * epoch).
/// Prediction is hard: a one-hot vector at the argmax margin.
pub fn fit_linear_svm(
    x: ArrayView2<f64>,
    y: &[usize],
    num_classes: usize,
) -> Result<LinearModel, String> {
    check_labels(x, y, num_classes)?;
    let std = Standardizer::fit(x);
    let xs = std.transform(x);
    if let Some(c) = single_class(y) {
        return Ok(single_class_model(std, x.ncols(), num_classes, c));
    }

    let n = xs.nrows();
    let dim = xs.ncols();
    let mut weights = Array2::zeros((num_classes, dim));
    let mut bias = Array1::zeros(num_classes);
    for class in 0..num_classes {
        let ty: Vec<f64> = y.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
        let mut w = Array1::<f64>::zeros(dim);
        let mut b = 0.0f64;
        for epoch in 1..=MAX_EPOCHS {
            let step = 1.0 / (L2_LAMBDA * epoch as f64);
            let margins = xs.dot(&w) + b;
            let mut gw = &w * L2_LAMBDA;
            let mut gb = 0.0;
            for i in 0..n {
                if ty[i] * margins[i] < 1.0 {
                    gw.scaled_add(-ty[i] / n as f64, &xs.row(i));
                    gb -= ty[i] / n as f64;
                }
            }
            w.scaled_add(-step, &gw);
            b -= step * gb;
        }
        weights.row_mut(class).assign(&w);
        bias[class] = b;
    }
    Ok(LinearModel { standardizer: std, weights, bias, constant_class: None })
}

fn single_class(y: &[usize]) -> Option<usize> {
    let first = y[0];
    y.iter().all(|&l| l == first).then_some(first)
}

fn check_labels(x: ArrayView2<f64>, y: &[usize], num_classes: usize) -> Result<(), String> {
    if x.nrows() == 0 {
        return Err("cannot fit on an empty sample".into());
    }
    if x.nrows() != y.len() {
        return Err(format!("{} rows but {} labels", x.nrows(), y.len()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= num_classes) {
        return Err(format!("label {bad} outside [0, {num_classes})"));
    }
    Ok(())
}
