//! Feature-extraction-layer primitives: descriptors that turn image planes
//! into per-instance feature vectors, plus the concatenation combinators.
//!
//! For a fixed input image size every operation here has a fixed output
//! length, which is what lets classifier nodes above them train and predict
//! consistently across folds.

use crate::image::{self, ImagePlane};
use crate::types::ParamValue;
use std::f64::consts::PI;

pub const HIST_BINS: usize = 256;

/// 256-bin histogram of pixel values, normalized by pixel count. Bin edges
/// are uniform over [min(0, min), max(1, max)] so unbounded filter outputs
/// remain representable.
pub fn histogram_features(img: &ImagePlane) -> Vec<f64> {
    let lo = img.data.iter().cloned().fold(0.0f64, f64::min);
    let hi = img.data.iter().cloned().fold(1.0f64, f64::max);
    let span = hi - lo;
    let mut counts = vec![0usize; HIST_BINS];
    for &v in &img.data {
        let mut idx = ((v - lo) / span * HIST_BINS as f64).floor() as isize;
        if idx < 0 {
            idx = 0;
        }
        if idx >= HIST_BINS as isize {
            idx = HIST_BINS as isize - 1;
        }
        counts[idx as usize] += 1;
    }
    let n = img.data.len() as f64;
    counts.iter().map(|&c| c as f64 / n).collect()
}

const HOG_BLOCK: usize = 4;

/// Mean of each non-overlapping 4x4 block of the HOG image, row-major block
/// order. Images smaller than 4 in either dimension fall back to the global
/// mean (length 1); the caller may note that in its trace.
pub fn hog_features(img: &ImagePlane) -> (Vec<f64>, bool) {
    let hog = image::hog_image(img);
    if img.width < HOG_BLOCK || img.height < HOG_BLOCK {
        let mean = hog.data.iter().sum::<f64>() / hog.data.len() as f64;
        return (vec![mean], true);
    }
    let bx = img.width / HOG_BLOCK;
    let by = img.height / HOG_BLOCK;
    let mut out = Vec::with_capacity(bx * by);
    for cy in 0..by {
        for cx in 0..bx {
            let mut sum = 0.0;
            for y in cy * HOG_BLOCK..(cy + 1) * HOG_BLOCK {
                for x in cx * HOG_BLOCK..(cx + 1) * HOG_BLOCK {
                    sum += hog.get(x, y);
                }
            }
            out.push(sum / (HOG_BLOCK * HOG_BLOCK) as f64);
        }
    }
    (out, false)
}

/// Normalized 59-bin histogram of uniform LBP labels over all pixels.
pub fn lbp_features(img: &ImagePlane) -> Vec<f64> {
    let labels = image::lbp_labels(img);
    let mut counts = vec![0usize; image::LBP_LABELS];
    for &l in &labels {
        counts[l as usize] += 1;
    }
    let n = labels.len() as f64;
    counts.iter().map(|&c| c as f64 / n).collect()
}

pub const SIFT_LEN: usize = 128;
const SIFT_SPATIAL: usize = 4;
const SIFT_ORIENT: usize = 8;
const SIFT_CLIP: f64 = 0.2;

/// One upright 128-dimensional SIFT descriptor centered on the image:
/// 4x4 spatial bins over a centered square patch of side min(W, H), 8
/// orientation bins, gradient-magnitude weighting, trilinear binning, L2
/// normalization, 0.2 clipping and renormalization. Zero-gradient images
/// yield the all-zero descriptor. Returns the `small` flag for images with
/// a side below 16, where the same proportionally-scaled binning applies.
pub fn dense_sift_features(img: &ImagePlane) -> (Vec<f64>, bool) {
    let small = img.width < 16 || img.height < 16;
    let side = img.width.min(img.height);
    let x0 = (img.width - side) / 2;
    let y0 = (img.height - side) / 2;
    let mut hist = vec![0.0f64; SIFT_SPATIAL * SIFT_SPATIAL * SIFT_ORIENT];
    for y in y0..y0 + side {
        for x in x0..x0 + side {
            let gx = (img.get_reflect(x as isize + 1, y as isize)
                - img.get_reflect(x as isize - 1, y as isize))
                / 2.0;
            let gy = (img.get_reflect(x as isize, y as isize + 1)
                - img.get_reflect(x as isize, y as isize - 1))
                / 2.0;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += 2.0 * PI;
            }
            // Continuous bin coordinates; the 0.5 shifts put bin centers at
            // pixel-block centers.
            let u = ((x - x0) as f64 + 0.5) / side as f64 * SIFT_SPATIAL as f64 - 0.5;
            let v = ((y - y0) as f64 + 0.5) / side as f64 * SIFT_SPATIAL as f64 - 0.5;
            let o = angle / (2.0 * PI) * SIFT_ORIENT as f64;
            let u0 = u.floor();
            let v0 = v.floor();
            let o0 = o.floor();
            let du = u - u0;
            let dv = v - v0;
            let dof = o - o0;
            for (ui, wu) in [(u0, 1.0 - du), (u0 + 1.0, du)] {
                if ui < 0.0 || ui >= SIFT_SPATIAL as f64 {
                    continue;
                }
                for (vi, wv) in [(v0, 1.0 - dv), (v0 + 1.0, dv)] {
                    if vi < 0.0 || vi >= SIFT_SPATIAL as f64 {
                        continue;
                    }
                    for (oi, wo) in [(o0, 1.0 - dof), (o0 + 1.0, dof)] {
                        let ob = (oi as usize) % SIFT_ORIENT;
                        let idx = (vi as usize * SIFT_SPATIAL + ui as usize) * SIFT_ORIENT + ob;
                        hist[idx] += mag * wu * wv * wo;
                    }
                }
            }
        }
    }
    l2_normalize(&mut hist);
    let mut clipped = false;
    for v in hist.iter_mut() {
        if *v > SIFT_CLIP {
            *v = SIFT_CLIP;
            clipped = true;
        }
    }
    if clipped {
        l2_normalize(&mut hist);
    }
    (hist, small)
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Row-major flatten of `a` followed by `b`.
pub fn concat_images(a: &ImagePlane, b: &ImagePlane) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.data.len() + b.data.len());
    out.extend_from_slice(&a.data);
    out.extend_from_slice(&b.data);
    out
}

/// Apply the filter behind an `X_FE` primitive and flatten row-major.
/// `filter_name` is the underlying filtering primitive ("Sobel", "Gabor",
/// "Gau", "GauD", "LBP_F", "HOG_F").
pub fn filter_and_flatten(filter_name: &str, img: &ImagePlane, params: &[ParamValue]) -> Vec<f64> {
    image::apply_named_filter(filter_name, &[img], params).data
}

/// Concatenate 2..=4 feature vectors in child order.
pub fn combine_features(parts: &[Vec<f64>]) -> Vec<f64> {
    assert!((2..=4).contains(&parts.len()));
    let mut out = Vec::with_capacity(parts.iter().map(Vec::len).sum());
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}
