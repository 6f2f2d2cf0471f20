//! Tree execution: fit a genotype into a phenotype on labeled data, predict
//! on held-out data, compute cross-validation fitness, and memoize the
//! label-independent subtree outputs.
//!
//! Execution is dataset-vectorized: every node produces its value for a
//! whole list of instance rows at once. Image- and feature-typed subtrees
//! that contain no classifier are pure functions of the input images; with
//! a cache attached their full-dataset outputs are computed once and reused
//! across individuals and folds. Classifier and cascade nodes are never
//! cached.

use crate::classifiers::{
    self, fit_forest, fit_linear_svm, fit_logistic_regression, ClassifierFamily, FittedClassifier,
    ForestMode,
};
use crate::dataset::{Dataset, DatasetSignature};
use crate::error::{EdlgpError, Result};
use crate::features;
use crate::image::{self, ImagePlane};
use crate::primitives::Registry;
use crate::rng::StreamId;
use crate::sexpr;
use crate::tree::{path_string, GenotypeTree, Node, NodePath};
use crate::types::{Channel, Layer, ParamValue};
use ndarray::{Array2, ArrayView2, Axis};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Instant;

/// Vectorized node value over a list of instance rows.
#[derive(Clone, Debug)]
pub enum Value {
    Images(Vec<Arc<ImagePlane>>),
    Features(Array2<f64>),
    Probs(Array2<f64>),
}

impl Value {
    fn select(&self, positions: &[usize]) -> Value {
        match self {
            Value::Images(planes) => {
                Value::Images(positions.iter().map(|&i| planes[i].clone()).collect())
            }
            Value::Features(m) => Value::Features(m.select(Axis(0), positions)),
            Value::Probs(m) => Value::Probs(m.select(Axis(0), positions)),
        }
    }
}

/// Memo table for pure subtree outputs, keyed by dataset identity and the
/// canonical subtree rendering. Concurrent duplicate computation is
/// tolerated; both computations produce identical values.
#[derive(Default)]
pub struct SubtreeCache {
    map: RwLock<HashMap<(u64, String), Arc<Value>>>,
}

impl SubtreeCache {
    pub fn new() -> SubtreeCache {
        SubtreeCache::default()
    }

    /// Drop all entries (called at generation boundaries).
    pub fn clear(&self) {
        self.map.write().unwrap().clear();
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &(u64, String)) -> Option<Arc<Value>> {
        self.map.read().unwrap().get(key).cloned()
    }

    fn insert(&self, key: (u64, String), value: Arc<Value>) -> Arc<Value> {
        let mut map = self.map.write().unwrap();
        map.entry(key).or_insert(value).clone()
    }
}

/// A genotype with fitted classifier state attached to every classifier
/// and cascade node, bound to the signature of the dataset it was fit on.
#[derive(Clone, Debug)]
pub struct PhenotypeTree {
    pub genotype: GenotypeTree,
    pub signature: DatasetSignature,
    pub cascade_oof: bool,
    fitted: HashMap<NodePath, FittedClassifier>,
}

impl PhenotypeTree {
    pub fn fitted_nodes(&self) -> usize {
        self.fitted.len()
    }

    /// Stable textual digest of all fitted state, for hygiene checks.
    pub fn state_digest(&self) -> String {
        let mut keys: Vec<&NodePath> = self.fitted.keys().collect();
        keys.sort();
        let mut s = String::new();
        for k in keys {
            s.push_str(&format!("{}:{:?};", path_string(k), self.fitted[k]));
        }
        s
    }
}

/// Result of a fitness evaluation. Equality ignores the wall time.
#[derive(Clone, Debug)]
pub struct FitnessReport {
    /// Mean held-out accuracy, as a percentage in [0, 100].
    pub fitness: f64,
    pub per_fold: Vec<f64>,
    pub k: usize,
    pub wall_s: f64,
    pub failure: Option<String>,
}

impl PartialEq for FitnessReport {
    fn eq(&self, other: &Self) -> bool {
        self.fitness == other.fitness
            && self.per_fold == other.per_fold
            && self.k == other.k
            && self.failure == other.failure
    }
}

pub struct ExecOptions<'a> {
    pub cascade_oof: bool,
    pub cache: Option<&'a SubtreeCache>,
}

pub struct FitOutcome {
    pub phenotype: PhenotypeTree,
    pub root_probs: Array2<f64>,
    pub trace: Vec<String>,
}

pub struct PredictOutcome {
    pub labels: Vec<usize>,
    pub root_probs: Array2<f64>,
    pub trace: Vec<String>,
}

enum Phase<'a> {
    Fit { labels: &'a [usize], stream: StreamId, fitted: HashMap<NodePath, FittedClassifier> },
    Predict { fitted: &'a HashMap<NodePath, FittedClassifier> },
}

struct Executor<'a> {
    reg: &'a Registry,
    data: &'a Dataset,
    cache: Option<&'a SubtreeCache>,
    cascade_oof: bool,
    phase: Phase<'a>,
    trace: Vec<String>,
}

fn exec_err(path: &[usize], msg: impl Into<String>) -> EdlgpError {
    EdlgpError::Exec { path: path_string(path), msg: msg.into() }
}

impl<'a> Executor<'a> {
    fn eval(&mut self, node: &Node, path: &mut NodePath, rows: &[usize]) -> Result<Value> {
        if self.cache.is_some() && node.is_pure(self.reg) {
            let full = self.full_value(node, path)?;
            let positions: Vec<usize> = rows.to_vec();
            return Ok(full.select(&positions));
        }
        self.compute(node, path, rows)
    }

    /// Whole-dataset value of a pure subtree, memoized.
    fn full_value(&mut self, node: &Node, path: &mut NodePath) -> Result<Arc<Value>> {
        let cache = self.cache.unwrap();
        let key = (self.data.uid(), sexpr::render_node(node, self.reg));
        if let Some(v) = cache.get(&key) {
            return Ok(v);
        }
        let all: Vec<usize> = (0..self.data.len()).collect();
        let v = self.compute(node, path, &all)?;
        Ok(cache.insert(key, Arc::new(v)))
    }

    fn compute(&mut self, node: &Node, path: &mut NodePath, rows: &[usize]) -> Result<Value> {
        match node {
            Node::Channel(c) => self.eval_channel(*c, path, rows),
            Node::Param { .. } => Err(exec_err(path, "parameter node evaluated as data")),
            Node::Func { prim, children } => {
                let sig = self.reg.sig(*prim);
                match sig.layer {
                    Layer::Filtering => self.eval_filter(sig.name, children, path, rows),
                    Layer::FeatureExtraction => self.eval_feature(sig.name, children, path, rows),
                    Layer::Concatenation => self.eval_concat(children, path, rows),
                    Layer::Classification | Layer::ClassificationCascade => {
                        self.eval_classifier(node, sig.name, sig.layer, children, path, rows)
                    }
                    Layer::Summation => self.eval_sum(children, path, rows),
                }
            }
        }
    }

    fn eval_channel(&mut self, c: Channel, path: &mut NodePath, rows: &[usize]) -> Result<Value> {
        let planes = rows
            .iter()
            .map(|&r| self.data.channel_plane(r, c).map(Arc::new))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| exec_err(path, e.to_string()))?;
        Ok(Value::Images(planes))
    }

    fn child_images(
        &mut self,
        children: &[Node],
        idx: usize,
        path: &mut NodePath,
        rows: &[usize],
    ) -> Result<Vec<Arc<ImagePlane>>> {
        path.push(idx);
        let v = self.eval(&children[idx], path, rows)?;
        path.pop();
        match v {
            Value::Images(planes) => Ok(planes),
            _ => Err(exec_err(path, "expected an image input")),
        }
    }

    fn child_features(
        &mut self,
        children: &[Node],
        idx: usize,
        path: &mut NodePath,
        rows: &[usize],
    ) -> Result<Array2<f64>> {
        path.push(idx);
        let v = self.eval(&children[idx], path, rows)?;
        path.pop();
        match v {
            Value::Features(m) => Ok(m),
            _ => Err(exec_err(path, "expected a feature input")),
        }
    }

    fn param_values(children: &[Node]) -> Vec<ParamValue> {
        children
            .iter()
            .filter_map(|c| match c {
                Node::Param { value, .. } => Some(*value),
                _ => None,
            })
            .collect()
    }

    fn eval_filter(
        &mut self,
        name: &str,
        children: &[Node],
        path: &mut NodePath,
        rows: &[usize],
    ) -> Result<Value> {
        let params = Self::param_values(children);
        let a = self.child_images(children, 0, path, rows)?;
        let planes: Vec<Arc<ImagePlane>> = if matches!(name, "Add_MaxP" | "Sub_MaxP") {
            let b = self.child_images(children, 1, path, rows)?;
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| Arc::new(image::apply_named_filter(name, &[x, y], &params)))
                .collect()
        } else {
            a.iter().map(|x| Arc::new(image::apply_named_filter(name, &[x], &params))).collect()
        };
        Ok(Value::Images(planes))
    }

    fn rows_to_matrix(path: &[usize], rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
        let n = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Array2::from_shape_vec((n, width), flat)
            .map_err(|e| exec_err(path, format!("inconsistent feature widths: {e}")))
    }

    fn eval_feature(
        &mut self,
        name: &str,
        children: &[Node],
        path: &mut NodePath,
        rows: &[usize],
    ) -> Result<Value> {
        let params = Self::param_values(children);
        let a = self.child_images(children, 0, path, rows)?;
        let mut small_flagged = false;
        let vecs: Vec<Vec<f64>> = match name {
            "Conca" => {
                let b = self.child_images(children, 1, path, rows)?;
                a.iter().zip(b.iter()).map(|(x, y)| features::concat_images(x, y)).collect()
            }
            "Hist" => a.iter().map(|x| features::histogram_features(x)).collect(),
            "HOG" => a
                .iter()
                .map(|x| {
                    let (v, small) = features::hog_features(x);
                    small_flagged |= small;
                    v
                })
                .collect(),
            "LBP" => a.iter().map(|x| features::lbp_features(x)).collect(),
            "SIFT" => a
                .iter()
                .map(|x| {
                    let (v, small) = features::dense_sift_features(x);
                    small_flagged |= small;
                    v
                })
                .collect(),
            "LBP_FE" => a.iter().map(|x| features::filter_and_flatten("LBP_F", x, &[])).collect(),
            "HOG_FE" => a.iter().map(|x| features::filter_and_flatten("HOG_F", x, &[])).collect(),
            "Sobel_FE" => a.iter().map(|x| features::filter_and_flatten("Sobel", x, &[])).collect(),
            "Gabor_FE" => {
                a.iter().map(|x| features::filter_and_flatten("Gabor", x, &params)).collect()
            }
            "Gau_FE" => a.iter().map(|x| features::filter_and_flatten("Gau", x, &params)).collect(),
            "GauD_FE" => {
                a.iter().map(|x| features::filter_and_flatten("GauD", x, &params)).collect()
            }
            other => return Err(exec_err(path, format!("unknown feature extractor {other}"))),
        };
        if small_flagged {
            self.trace.push(format!(
                "{} at {}: small image, proportional fallback applied",
                name,
                path_string(path)
            ));
        }
        Self::rows_to_matrix(path, vecs).map(Value::Features)
    }

    fn eval_concat(
        &mut self,
        children: &[Node],
        path: &mut NodePath,
        rows: &[usize],
    ) -> Result<Value> {
        let mut parts = Vec::with_capacity(children.len());
        for i in 0..children.len() {
            parts.push(self.child_features(children, i, path, rows)?);
        }
        let vecs: Vec<Vec<f64>> = (0..rows.len())
            .map(|r| {
                let slices: Vec<Vec<f64>> = parts.iter().map(|m| m.row(r).to_vec()).collect();
                features::combine_features(&slices)
            })
            .collect();
        Self::rows_to_matrix(path, vecs).map(Value::Features)
    }

    fn eval_sum(&mut self, children: &[Node], path: &mut NodePath, rows: &[usize]) -> Result<Value> {
        let mut parts = Vec::with_capacity(children.len());
        for (i, child) in children.iter().enumerate() {
            path.push(i);
            let v = self.eval(child, path, rows)?;
            path.pop();
            match v {
                Value::Probs(m) => parts.push(m),
                _ => return Err(exec_err(path, "summation child is not a probability matrix")),
            }
        }
        classifiers::sum_probabilities(&parts)
            .map(Value::Probs)
            .map_err(|e| exec_err(path, e))
    }

    fn family_of(name: &str) -> ClassifierFamily {
        match name {
            "RF" | "CC_RF" => ClassifierFamily::Rf,
            "ERF" | "CC_ERF" => ClassifierFamily::Erf,
            "LR" | "CC_LR" => ClassifierFamily::Lr,
            _ => ClassifierFamily::Svm,
        }
    }

    fn fit_family(
        &self,
        family: ClassifierFamily,
        x: ArrayView2<f64>,
        y: &[usize],
        params: &[ParamValue],
        stream: StreamId,
        path: &[usize],
    ) -> Result<FittedClassifier> {
        let c = self.reg.num_classes;
        let fitted = match family {
            ClassifierFamily::Rf | ClassifierFamily::Erf => {
                let t = params[0].as_i64().max(1) as usize;
                let d = params[1].as_i64().max(1) as usize;
                let mode = if family == ClassifierFamily::Rf {
                    ForestMode::Standard
                } else {
                    ForestMode::Extra
                };
                fit_forest(x, y, c, t, d, mode, stream).map(FittedClassifier::Forest)
            }
            ClassifierFamily::Lr => fit_logistic_regression(x, y, c).map(FittedClassifier::Logistic),
            ClassifierFamily::Svm => fit_linear_svm(x, y, c).map(FittedClassifier::Svm),
        };
        fitted.map_err(|e| exec_err(path, e))
    }

    /// Out-of-fold predictions over the fit rows: an internal stratified
    /// 3-fold split (or fewer when the smallest class is smaller). Falls
    /// back to in-sample predictions when no split is possible.
    fn oof_block(
        &self,
        family: ClassifierFamily,
        x: ArrayView2<f64>,
        y: &[usize],
        params: &[ParamValue],
        stream: StreamId,
        path: &[usize],
        final_model: &FittedClassifier,
    ) -> Result<Array2<f64>> {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &l in y {
            *counts.entry(l).or_insert(0) += 1;
        }
        let nc = counts.values().copied().min().unwrap_or(0);
        let k = nc.min(3);
        if k < 2 {
            return final_model.predict_proba(x).map_err(|e| exec_err(path, e));
        }
        let local: Vec<usize> = (0..x.nrows()).collect();
        let folds = stratified_folds_over(&local, y, k, stream.child("oof"));
        let mut block = Array2::zeros((x.nrows(), self.reg.num_classes));
        for (j, fold) in folds.iter().enumerate() {
            let train: Vec<usize> = local.iter().copied().filter(|i| !fold.contains(i)).collect();
            let xt = x.select(Axis(0), &train);
            let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let m = self.fit_family(family, xt.view(), &yt, params, stream.child("oof-fit").child_u64(j as u64), path)?;
            let xh = x.select(Axis(0), fold);
            let ph = m.predict_proba(xh.view()).map_err(|e| exec_err(path, e))?;
            for (bi, &row) in fold.iter().enumerate() {
                block.row_mut(row).assign(&ph.row(bi));
            }
        }
        Ok(block)
    }

    fn eval_classifier(
        &mut self,
        node: &Node,
        name: &str,
        layer: Layer,
        children: &[Node],
        path: &mut NodePath,
        rows: &[usize],
    ) -> Result<Value> {
        let params = Self::param_values(children);
        let x = self.child_features(children, 0, path, rows)?;
        let family = Self::family_of(name);
        let cascade = layer == Layer::ClassificationCascade;

        // Node streams key off the canonical subtree rendering, so identical
        // subtrees within one fit train identically.
        let fit_info = match &self.phase {
            Phase::Fit { labels, stream, .. } => {
                let y: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
                Some((y, stream.child(&sexpr::render_node(node, self.reg))))
            }
            Phase::Predict { .. } => None,
        };

        let block = match fit_info {
            Some((y, node_stream)) => {
                let model = self.fit_family(family, x.view(), &y, &params, node_stream, path)?;
                let block = if cascade && self.cascade_oof {
                    self.oof_block(family, x.view(), &y, &params, node_stream, path, &model)?
                } else {
                    model.predict_proba(x.view()).map_err(|e| exec_err(path, e))?
                };
                if let Phase::Fit { fitted, .. } = &mut self.phase {
                    fitted.insert(path.clone(), model);
                }
                block
            }
            None => {
                let Phase::Predict { fitted } = &self.phase else { unreachable!() };
                let model = fitted.get(path).ok_or_else(|| {
                    exec_err(path, "no fitted classifier for this node (phenotype mismatch)")
                })?;
                model.predict_proba(x.view()).map_err(|e| exec_err(path, e))?
            }
        };

        if cascade {
            let mut out = Array2::zeros((x.nrows(), x.ncols() + block.ncols()));
            out.slice_mut(ndarray::s![.., ..x.ncols()]).assign(&x);
            out.slice_mut(ndarray::s![.., x.ncols()..]).assign(&block);
            Ok(Value::Features(out))
        } else {
            Ok(Value::Probs(block))
        }
    }
}

/// Fit every classifier node of `genotype` on the given rows and return the
/// fitted phenotype together with the root probability matrix over those
/// rows.
pub fn execute_fit(
    reg: &Registry,
    genotype: &GenotypeTree,
    data: &Dataset,
    rows: &[usize],
    stream: StreamId,
    opts: &ExecOptions,
) -> Result<FitOutcome> {
    let mut exec = Executor {
        reg,
        data,
        cache: opts.cache,
        cascade_oof: opts.cascade_oof,
        phase: Phase::Fit { labels: &data.labels, stream, fitted: HashMap::new() },
        trace: Vec::new(),
    };
    let value = exec.eval(&genotype.root, &mut Vec::new(), rows)?;
    let Value::Probs(root_probs) = value else {
        return Err(EdlgpError::Internal("root did not produce probabilities".into()));
    };
    let Phase::Fit { fitted, .. } = exec.phase else { unreachable!() };
    Ok(FitOutcome {
        phenotype: PhenotypeTree {
            genotype: genotype.clone(),
            signature: data.signature,
            cascade_oof: opts.cascade_oof,
            fitted,
        },
        root_probs,
        trace: exec.trace,
    })
}

/// Run a fitted phenotype on rows of a dataset with a matching signature;
/// labels are the per-row argmax of the root probability matrix.
pub fn execute_predict(
    reg: &Registry,
    phenotype: &PhenotypeTree,
    data: &Dataset,
    rows: &[usize],
    cache: Option<&SubtreeCache>,
) -> Result<PredictOutcome> {
    if data.signature != phenotype.signature {
        return Err(EdlgpError::Data(format!(
            "dataset signature {:?} does not match the fitted signature {:?}",
            data.signature, phenotype.signature
        )));
    }
    if rows.is_empty() {
        return Ok(PredictOutcome {
            labels: Vec::new(),
            root_probs: Array2::zeros((0, reg.num_classes)),
            trace: Vec::new(),
        });
    }
    let mut exec = Executor {
        reg,
        data,
        cache,
        cascade_oof: phenotype.cascade_oof,
        phase: Phase::Predict { fitted: &phenotype.fitted },
        trace: Vec::new(),
    };
    let value = exec.eval(&phenotype.genotype.root, &mut Vec::new(), rows)?;
    let Value::Probs(root_probs) = value else {
        return Err(EdlgpError::Internal("root did not produce probabilities".into()));
    };
    let labels = root_probs
        .rows()
        .into_iter()
        .map(|r| classifiers::argmax_label(&r.to_vec()))
        .collect();
    Ok(PredictOutcome { labels, root_probs, trace: exec.trace })
}

/// Stratified fold assignment over `rows`: within each class the rows are
/// shuffled with a seeded generator and dealt round-robin, so per-class
/// fold counts differ by at most one. Returns the k held-out sets, each
/// sorted ascending.
pub fn stratified_folds(
    data: &Dataset,
    rows: &[usize],
    k: usize,
    stream: StreamId,
) -> Vec<Vec<usize>> {
    let y: Vec<usize> = rows.iter().map(|&r| data.labels[r]).collect();
    let local = stratified_folds_over(rows, &y, k, stream);
    local
}

fn stratified_folds_over(rows: &[usize], y: &[usize], k: usize, stream: StreamId) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    let num_classes = y.iter().copied().max().unwrap_or(0) + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (&row, &label) in rows.iter().zip(y.iter()) {
        by_class[label].push(row);
    }
    let mut folds = vec![Vec::new(); k];
    for (class, mut members) in by_class.into_iter().enumerate() {
        let mut rng = stream.child_u64(class as u64).rng();
        members.shuffle(&mut rng);
        for (i, row) in members.into_iter().enumerate() {
            folds[i % k].push(row);
        }
    }
    for fold in folds.iter_mut() {
        fold.sort_unstable();
    }
    folds
}

fn accuracy_percent(predicted: &[usize], expected: &[usize]) -> f64 {
    let correct = predicted.iter().zip(expected.iter()).filter(|(a, b)| a == b).count();
    correct as f64 / expected.len() as f64 * 100.0
}

/// Cross-validation fitness: k = min(3, size of the smallest class). With
/// k = 1 (a singleton class) the tree is fitted on everything and scored on
/// the training rows; otherwise the mean of the per-fold held-out
/// accuracies is returned. Execution failures yield fitness 0 with the
/// failure recorded.
pub fn evaluate_fitness(
    reg: &Registry,
    genotype: &GenotypeTree,
    data: &Dataset,
    rows: &[usize],
    stream: StreamId,
    opts: &ExecOptions,
) -> FitnessReport {
    let start = Instant::now();
    let counts = data.class_counts(rows);
    let nc = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    let k = nc.min(3).max(1);

    let result = (|| -> Result<(f64, Vec<f64>)> {
        if k == 1 {
            let fit = execute_fit(reg, genotype, data, rows, stream.child("fold").child_u64(0), opts)?;
            let pred = execute_predict(reg, &fit.phenotype, data, rows, opts.cache)?;
            let expected: Vec<usize> = rows.iter().map(|&r| data.labels[r]).collect();
            let acc = accuracy_percent(&pred.labels, &expected);
            return Ok((acc, vec![acc]));
        }
        let folds = stratified_folds(data, rows, k, stream.child("folds"));
        let mut per_fold = Vec::with_capacity(k);
        for (j, fold) in folds.iter().enumerate() {
            let train: Vec<usize> = rows.iter().copied().filter(|r| !fold.contains(r)).collect();
            let fit =
                execute_fit(reg, genotype, data, &train, stream.child("fold").child_u64(j as u64), opts)?;
            let pred = execute_predict(reg, &fit.phenotype, data, fold, opts.cache)?;
            let expected: Vec<usize> = fold.iter().map(|&r| data.labels[r]).collect();
            per_fold.push(accuracy_percent(&pred.labels, &expected));
        }
        let fitness = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
        Ok((fitness, per_fold))
    })();

    match result {
        Ok((fitness, per_fold)) => FitnessReport {
            fitness,
            per_fold,
            k,
            wall_s: start.elapsed().as_secs_f64(),
            failure: None,
        },
        Err(e) => {
            log::warn!("fitness evaluation failed: {e}");
            FitnessReport {
                fitness: 0.0,
                per_fold: Vec::new(),
                k,
                wall_s: start.elapsed().as_secs_f64(),
                failure: Some(e.to_string()),
            }
        }
    }
}

/// Test-set report produced by `retrain_and_test`.
#[derive(Clone, Debug)]
pub struct TestReport {
    /// Overall accuracy percentage on the test rows.
    pub accuracy: f64,
    /// Per-class accuracy percentages (f64::NAN for absent classes).
    pub per_class: Vec<f64>,
    /// confusion[true][predicted] counts.
    pub confusion: Vec<Vec<usize>>,
    pub trace: Vec<String>,
}

/// Fit the genotype on the full training set and score it on the test set.
pub fn retrain_and_test(
    reg: &Registry,
    genotype: &GenotypeTree,
    train: &Dataset,
    test: &Dataset,
    stream: StreamId,
    opts: &ExecOptions,
) -> Result<TestReport> {
    let train_rows: Vec<usize> = (0..train.len()).collect();
    let test_rows: Vec<usize> = (0..test.len()).collect();
    let fit = execute_fit(reg, genotype, train, &train_rows, stream.child("retrain"), opts)?;
    let pred = execute_predict(reg, &fit.phenotype, test, &test_rows, opts.cache)?;

    let c = reg.num_classes;
    let mut confusion = vec![vec![0usize; c]; c];
    for (&p, &t) in pred.labels.iter().zip(test.labels.iter()) {
        confusion[t][p] += 1;
    }
    let accuracy = accuracy_percent(&pred.labels, &test.labels);
    let per_class = (0..c)
        .map(|t| {
            let total: usize = confusion[t].iter().sum();
            if total == 0 {
                f64::NAN
            } else {
                confusion[t][t] as f64 / total as f64 * 100.0
            }
        })
        .collect();
    let mut trace = fit.trace;
    trace.extend(pred.trace);
    Ok(TestReport { accuracy, per_class, confusion, trace })
}

/// Per-node output matrices on a dataset (for inspection dumps): every
/// function node's value, with images flattened row-major.
pub fn collect_node_outputs(
    reg: &Registry,
    genotype: &GenotypeTree,
    data: &Dataset,
    stream: StreamId,
    opts: &ExecOptions,
) -> Result<Vec<(NodePath, String, Array2<f64>)>> {
    let rows: Vec<usize> = (0..data.len()).collect();
    let fit = execute_fit(reg, genotype, data, &rows, stream.child("retrain"), opts)?;
    let mut out = Vec::new();
    for (path, node) in genotype.nodes() {
        let Node::Func { prim, .. } = node else { continue };
        let name = reg.sig(*prim).name.to_string();
        let mut exec = Executor {
            reg,
            data,
            cache: opts.cache,
            cascade_oof: opts.cascade_oof,
            phase: Phase::Predict { fitted: &fit.phenotype.fitted },
            trace: Vec::new(),
        };
        // Re-evaluates under the frozen phenotype; the node path context
        // must match the fit-time paths, so walk from the root.
        let mut p = path.clone();
        let value = exec.compute_at(&genotype.root, &mut Vec::new(), &mut p, &rows)?;
        let matrix = match value {
            Value::Images(planes) => {
                let width = planes[0].data.len();
                let flat: Vec<f64> = planes.iter().flat_map(|pl| pl.data.clone()).collect();
                Array2::from_shape_vec((rows.len(), width), flat)
                    .map_err(|e| EdlgpError::Internal(e.to_string()))?
            }
            Value::Features(m) | Value::Probs(m) => m,
        };
        out.push((path, name, matrix));
    }
    Ok(out)
}

impl<'a> Executor<'a> {
    /// Evaluate the node at `target` (a path below `node`) in its proper
    /// path context.
    fn compute_at(
        &mut self,
        node: &Node,
        path: &mut NodePath,
        target: &mut Vec<usize>,
        rows: &[usize],
    ) -> Result<Value> {
        if target.len() == path.len() {
            return self.eval(node, path, rows);
        }
        let next = target[path.len()];
        match node {
            Node::Func { children, .. } => {
                path.push(next);
                let v = self.compute_at(&children[next], path, target, rows)?;
                path.pop();
                Ok(v)
            }
            _ => Err(EdlgpError::Internal("dump path descends into a terminal".into())),
        }
    }
}
