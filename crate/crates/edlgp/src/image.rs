//! Image-plane representation and the filtering-layer primitives.
//!
//! All windowed operations use reflect padding (edge pixel not repeated,
//! period `2n-2`), so they are well defined on images as small as 1x1.
//! Every filter except the pooling combinators preserves dimensions.

use crate::types::ParamValue;
use std::f64::consts::PI;

/// A 2-D plane of real pixel values, row-major. Raw dataset channels lie in
/// [0, 1]; filter outputs may take any real value.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> ImagePlane {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        assert_eq!(data.len(), width * height);
        ImagePlane { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> ImagePlane {
        ImagePlane::new(width, height, vec![0.0; width * height])
    }

    pub fn constant(width: usize, height: usize, v: f64) -> ImagePlane {
        ImagePlane::new(width, height, vec![v; width * height])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel at a possibly out-of-range coordinate, reflect-padded.
    #[inline]
    pub fn get_reflect(&self, x: isize, y: isize) -> f64 {
        let xi = reflect_index(x, self.width);
        let yi = reflect_index(y, self.height);
        self.data[yi * self.width + xi]
    }

    /// Bilinear sample at a real coordinate, reflect-padded.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as isize;
        let y0 = y0 as isize;
        let v00 = self.get_reflect(x0, y0);
        let v10 = self.get_reflect(x0 + 1, y0);
        let v01 = self.get_reflect(x0, y0 + 1);
        let v11 = self.get_reflect(x0 + 1, y0 + 1);
        v00 * (1.0 - fx) * (1.0 - fy)
            + v10 * fx * (1.0 - fy)
            + v01 * (1.0 - fx) * fy
            + v11 * fx * fy
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImagePlane {
        ImagePlane::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Reflect an index into [0, n) without repeating the edge sample.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * n - 2;
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Dense 2-D correlation kernel.
#[derive(Clone, Debug)]
pub struct Kernel2 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Kernel2 {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Kernel2 {
        assert!(width % 2 == 1 && height % 2 == 1, "kernels must be odd-sized");
        assert_eq!(data.len(), width * height);
        Kernel2 { width, height, data }
    }

    /// Outer product of a row kernel (applied along x) and a column kernel.
    pub fn outer(kx: &[f64], ky: &[f64]) -> Kernel2 {
        let mut data = Vec::with_capacity(kx.len() * ky.len());
        for &vy in ky {
            for &vx in kx {
                data.push(vx * vy);
            }
        }
        Kernel2::new(kx.len(), ky.len(), data)
    }
}

/// Correlate an image with a 2-D kernel under reflect padding.
pub fn correlate2(img: &ImagePlane, k: &Kernel2) -> ImagePlane {
    let rx = (k.width / 2) as isize;
    let ry = (k.height / 2) as isize;
    let mut out = ImagePlane::zeros(img.width, img.height);
    for y in 0..img.height as isize {
        for x in 0..img.width as isize {
            let mut acc = 0.0;
            for ky in -ry..=ry {
                for kx in -rx..=rx {
                    let w = k.data[((ky + ry) as usize) * k.width + (kx + rx) as usize];
                    acc += w * img.get_reflect(x + kx, y + ky);
                }
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    out
}

/// Correlate with a horizontal 1-D kernel (along x).
fn correlate_rows(img: &ImagePlane, k: &[f64]) -> ImagePlane {
    let r = (k.len() / 2) as isize;
    let mut out = ImagePlane::zeros(img.width, img.height);
    for y in 0..img.height {
        for x in 0..img.width as isize {
            let mut acc = 0.0;
            for (j, &w) in k.iter().enumerate() {
                acc += w * img.get_reflect(x + j as isize - r, y as isize);
            }
            out.set(x as usize, y, acc);
        }
    }
    out
}

/// Correlate with a vertical 1-D kernel (along y).
fn correlate_cols(img: &ImagePlane, k: &[f64]) -> ImagePlane {
    let r = (k.len() / 2) as isize;
    let mut out = ImagePlane::zeros(img.width, img.height);
    for y in 0..img.height as isize {
        for x in 0..img.width {
            let mut acc = 0.0;
            for (j, &w) in k.iter().enumerate() {
                acc += w * img.get_reflect(x as isize, y + j as isize - r);
            }
            out.set(x, y as usize, acc);
        }
    }
    out
}

fn window3(img: &ImagePlane, reduce: impl Fn(&mut [f64; 9]) -> f64) -> ImagePlane {
    let mut out = ImagePlane::zeros(img.width, img.height);
    let mut buf = [0.0f64; 9];
    for y in 0..img.height as isize {
        for x in 0..img.width as isize {
            let mut i = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    buf[i] = img.get_reflect(x + dx, y + dy);
                    i += 1;
                }
            }
            out.set(x as usize, y as usize, reduce(&mut buf));
        }
    }
    out
}

pub fn mean_filter(img: &ImagePlane) -> ImagePlane {
    window3(img, |w| w.iter().sum::<f64>() / 9.0)
}

pub fn median_filter(img: &ImagePlane) -> ImagePlane {
    window3(img, |w| {
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        w[4]
    })
}

pub fn min_filter(img: &ImagePlane) -> ImagePlane {
    window3(img, |w| w.iter().cloned().fold(f64::INFINITY, f64::min))
}

pub fn max_filter(img: &ImagePlane) -> ImagePlane {
    window3(img, |w| w.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// 4-neighbour Laplacian.
pub fn laplacian_filter(img: &ImagePlane) -> ImagePlane {
    let k = Kernel2::new(3, 3, vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0]);
    correlate2(img, &k)
}

pub fn sqrt_filter(img: &ImagePlane) -> ImagePlane {
    img.map(|v| if v < 0.0 { 1.0 } else { v.sqrt() })
}

pub fn relu_filter(img: &ImagePlane) -> ImagePlane {
    img.map(|v| v.max(0.0))
}

/// Sampled Gaussian-derivative correlation kernel of the given order,
/// radius `3*sigma`. Order 0 is the smoothing kernel, normalized to sum 1.
/// The derivative orders apply the analytic Hermite factor to that base
/// kernel (with the sign flip that makes correlation act as convolution)
/// and are moment-normalized: order 1 maps a linear ramp to its exact
/// slope, order 2 maps a quadratic to its exact second derivative, and both
/// map constants to exactly zero.
pub fn gaussian_kernel_1d(sigma: f64, order: usize) -> Vec<f64> {
    assert!(sigma > 0.0);
    let radius = (3.0 * sigma).ceil() as isize;
    let s2 = sigma * sigma;
    let mut base: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * s2)).exp())
        .collect();
    let sum: f64 = base.iter().sum();
    for v in base.iter_mut() {
        *v /= sum;
    }
    let xs: Vec<f64> = (-radius..=radius).map(|i| i as f64).collect();
    let mut k: Vec<f64> = xs
        .iter()
        .zip(base.iter())
        .map(|(&x, &g)| {
            match order {
                0 => g,
                1 => x / s2 * g,
                2 => (x * x - s2) / (s2 * s2) * g,
                _ => panic!("unsupported derivative order {order}"),
            }
        })
        .collect();
    match order {
        0 => {}
        1 => {
            let m1: f64 = xs.iter().zip(k.iter()).map(|(x, v)| x * v).sum();
            for v in k.iter_mut() {
                *v /= m1;
            }
        }
        2 => {
            let mean = k.iter().sum::<f64>() / k.len() as f64;
            for v in k.iter_mut() {
                *v -= mean;
            }
            let m2: f64 = xs.iter().zip(k.iter()).map(|(x, v)| x * x * v).sum();
            for v in k.iter_mut() {
                *v *= 2.0 / m2;
            }
        }
        _ => unreachable!(),
    }
    k
}

pub fn gaussian_filter(img: &ImagePlane, sigma: i64) -> ImagePlane {
    assert!((1..=3).contains(&sigma), "sigma must be in 1..=3, got {sigma}");
    let k = gaussian_kernel_1d(sigma as f64, 0);
    correlate_rows(&correlate_cols(img, &k), &k)
}

/// Derivative-of-Gaussian filter: order `o1` along x, `o2` along y.
pub fn gaussian_derivative(img: &ImagePlane, sigma: i64, o1: i64, o2: i64) -> ImagePlane {
    assert!((1..=3).contains(&sigma), "sigma must be in 1..=3, got {sigma}");
    assert!((0..=2).contains(&o1) && (0..=2).contains(&o2), "orders must be in 0..=2");
    let kx = gaussian_kernel_1d(sigma as f64, o1 as usize);
    let ky = gaussian_kernel_1d(sigma as f64, o2 as usize);
    correlate_rows(&correlate_cols(img, &ky), &kx)
}

/// Laplacian of Gaussian: the sum of the two pure second derivatives.
pub fn log_filter(img: &ImagePlane, sigma: i64) -> ImagePlane {
    let dxx = gaussian_derivative(img, sigma, 2, 0);
    let dyy = gaussian_derivative(img, sigma, 0, 2);
    let mut out = dxx;
    for (o, v) in out.data.iter_mut().zip(dyy.data.iter()) {
        *o += v;
    }
    out
}

/// Horizontal and vertical Sobel responses (before the magnitude).
pub fn sobel_gradients(img: &ImagePlane) -> (ImagePlane, ImagePlane) {
    let gx = Kernel2::new(3, 3, vec![-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0]);
    let gy = Kernel2::new(3, 3, vec![-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0]);
    (correlate2(img, &gx), correlate2(img, &gy))
}

pub fn sobel_filter(img: &ImagePlane) -> ImagePlane {
    let (gx, gy) = sobel_gradients(img);
    let data = gx
        .data
        .iter()
        .zip(gy.data.iter())
        .map(|(&a, &b)| (a * a + b * b).sqrt())
        .collect();
    ImagePlane::new(img.width, img.height, data)
}

/// Envelope standard deviation for a 1-octave Gabor at angular frequency `f`.
pub fn gabor_sigma(f: f64) -> f64 {
    // sigma = (1/f) * sqrt(ln 2 / 2) * (2^b + 1)/(2^b - 1), bandwidth b = 1.
    (1.0 / f) * (2.0f64.ln() / 2.0).sqrt() * 3.0
}

/// Real part of the Gabor kernel at orientation `theta` and frequency `f`,
/// isotropic Gaussian envelope, radius `3*sigma`.
pub fn gabor_kernel(theta: f64, f: f64) -> Kernel2 {
    let sigma = gabor_sigma(f);
    let radius = (3.0 * sigma).ceil() as isize;
    let n = (2 * radius + 1) as usize;
    let mut data = Vec::with_capacity(n * n);
    let (sin_t, cos_t) = theta.sin_cos();
    for y in -radius..=radius {
        for x in -radius..=radius {
            let xr = x as f64 * cos_t + y as f64 * sin_t;
            let yr = -(x as f64) * sin_t + y as f64 * cos_t;
            let env = (-(xr * xr + yr * yr) / (2.0 * sigma * sigma)).exp();
            data.push(env * (f * xr).cos());
        }
    }
    Kernel2::new(n, n, data)
}

pub fn gabor_filter(img: &ImagePlane, theta: f64, f: f64) -> ImagePlane {
    correlate2(img, &gabor_kernel(theta, f))
}

/// Number of labels in the uniform LBP scheme for 8 neighbours: 58 uniform
/// patterns plus one catch-all.
pub const LBP_LABELS: usize = 59;

/// Label table for all 256 8-bit patterns: uniform patterns (at most two
/// 0/1 transitions around the circle) get labels 0..=57 in ascending pattern
/// order, everything else maps to 58.
pub fn lbp_uniform_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut next = 0u8;
    for code in 0..256usize {
        let transitions = (0..8)
            .filter(|&i| ((code >> i) & 1) != ((code >> ((i + 1) % 8)) & 1))
            .count();
        if transitions <= 2 {
            table[code] = next;
            next += 1;
        } else {
            table[code] = (LBP_LABELS - 1) as u8;
        }
    }
    debug_assert_eq!(next as usize, LBP_LABELS - 1);
    table
}

/// Raw uniform-LBP label per pixel (radius 1.5, 8 bilinear neighbours,
/// neighbour >= center sets the bit).
pub fn lbp_labels(img: &ImagePlane) -> Vec<u8> {
    let table = lbp_uniform_table();
    let radius = 1.5f64;
    let mut out = Vec::with_capacity(img.width * img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            let c = img.get(x, y);
            let mut code = 0usize;
            for k in 0..8 {
                let angle = 2.0 * PI * k as f64 / 8.0;
                let sx = x as f64 + radius * angle.cos();
                let sy = y as f64 + radius * angle.sin();
                if img.sample_bilinear(sx, sy) >= c {
                    code |= 1 << k;
                }
            }
            out.push(table[code]);
        }
    }
    out
}

/// LBP image: per-pixel uniform label rescaled to [0, 1] by dividing by 58.
pub fn lbp_image(img: &ImagePlane) -> ImagePlane {
    let labels = lbp_labels(img);
    let data = labels.iter().map(|&l| f64::from(l) / (LBP_LABELS - 1) as f64).collect();
    ImagePlane::new(img.width, img.height, data)
}

/// Central-difference gradient magnitude.
pub fn gradient_magnitude(img: &ImagePlane) -> ImagePlane {
    let mut out = ImagePlane::zeros(img.width, img.height);
    for y in 0..img.height as isize {
        for x in 0..img.width as isize {
            let gx = (img.get_reflect(x + 1, y) - img.get_reflect(x - 1, y)) / 2.0;
            let gy = (img.get_reflect(x, y + 1) - img.get_reflect(x, y - 1)) / 2.0;
            out.set(x as usize, y as usize, (gx * gx + gy * gy).sqrt());
        }
    }
    out
}

const HOG_CELL: usize = 8;
const HOG_EPS: f64 = 1e-8;

/// HOG image: gradient magnitude, L2-normalized within non-overlapping 8x8
/// cells (trailing partial cells normalize on their own). Same size as the
/// input.
pub fn hog_image(img: &ImagePlane) -> ImagePlane {
    let mag = gradient_magnitude(img);
    let mut out = ImagePlane::zeros(img.width, img.height);
    let mut cy = 0;
    while cy < img.height {
        let cell_h = HOG_CELL.min(img.height - cy);
        let mut cx = 0;
        while cx < img.width {
            let cell_w = HOG_CELL.min(img.width - cx);
            let mut norm2 = 0.0;
            for y in cy..cy + cell_h {
                for x in cx..cx + cell_w {
                    let v = mag.get(x, y);
                    norm2 += v * v;
                }
            }
            let norm = norm2.sqrt() + HOG_EPS;
            for y in cy..cy + cell_h {
                for x in cx..cx + cell_w {
                    out.set(x, y, mag.get(x, y) / norm);
                }
            }
            cx += HOG_CELL;
        }
        cy += HOG_CELL;
    }
    out
}

fn pooled_dim(n: usize) -> usize {
    if n == 1 {
        1
    } else {
        n / 2
    }
}

/// 2x2 max-pool with stride 2; a trailing odd row/column is dropped, and
/// size-1 dimensions pass through unchanged.
pub fn max_pool(img: &ImagePlane) -> ImagePlane {
    let ow = pooled_dim(img.width);
    let oh = pooled_dim(img.height);
    let mut out = ImagePlane::zeros(ow, oh);
    for oy in 0..oh {
        for ox in 0..ow {
            let x0 = if img.width == 1 { 0 } else { ox * 2 };
            let y0 = if img.height == 1 { 0 } else { oy * 2 };
            let x1 = if img.width == 1 { x0 } else { x0 + 1 };
            let y1 = if img.height == 1 { y0 } else { y0 + 1 };
            let mut m = f64::NEG_INFINITY;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    m = m.max(img.get(x, y));
                }
            }
            out.set(ox, oy, m);
        }
    }
    out
}

fn center_crop(img: &ImagePlane, w: usize, h: usize) -> ImagePlane {
    let x0 = (img.width - w) / 2;
    let y0 = (img.height - h) / 2;
    let mut out = ImagePlane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, img.get(x0 + x, y0 + y));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolCombine {
    Add,
    Sub,
}

/// Max-pool-and-combine. Equal-size inputs are both pooled once and then
/// added or subtracted (first minus second). Unequal inputs: the larger
/// image (by pixel count, ties keep the first) is pooled repeatedly until
/// both its dimensions fit, then both are center-cropped to the common
/// dimensions and combined without further pooling.
pub fn pooled_combine(op: PoolCombine, a: &ImagePlane, b: &ImagePlane) -> ImagePlane {
    let (pa, pb) = if a.width == b.width && a.height == b.height {
        (max_pool(a), max_pool(b))
    } else {
        let mut pa = a.clone();
        let mut pb = b.clone();
        let a_larger = a.width * a.height >= b.width * b.height;
        if a_larger {
            while pa.width > pb.width || pa.height > pb.height {
                pa = max_pool(&pa);
            }
        } else {
            while pb.width > pa.width || pb.height > pa.height {
                pb = max_pool(&pb);
            }
        }
        let w = pa.width.min(pb.width);
        let h = pa.height.min(pb.height);
        (center_crop(&pa, w, h), center_crop(&pb, w, h))
    };
    let data = pa
        .data
        .iter()
        .zip(pb.data.iter())
        .map(|(&x, &y)| match op {
            PoolCombine::Add => x + y,
            PoolCombine::Sub => x - y,
        })
        .collect();
    ImagePlane::new(pa.width, pa.height, data)
}

/// Dump a plane as an ASCII portable graymap (P2) after affine rescale of
/// [min, max] to [0, 255]. Constant planes map to 0.
pub fn to_pgm(img: &ImagePlane) -> String {
    let lo = img.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let mut s = format!("P2\n{} {}\n255\n", img.width, img.height);
    for y in 0..img.height {
        let row: Vec<String> = (0..img.width)
            .map(|x| format!("{}", ((img.get(x, y) - lo) * scale).round() as u32))
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Apply a filtering-layer primitive by name with already-extracted
/// parameter values; used by the executor and by `filter_and_flatten`.
pub fn apply_named_filter(
    name: &str,
    imgs: &[&ImagePlane],
    params: &[ParamValue],
) -> ImagePlane {
    match (name, imgs, params) {
        ("Mean", [img], []) => mean_filter(img),
        ("Median", [img], []) => median_filter(img),
        ("Min", [img], []) => min_filter(img),
        ("Max", [img], []) => max_filter(img),
        ("Gau", [img], [s]) => gaussian_filter(img, s.as_i64()),
        ("GauD", [img], [s, o1, o2]) => gaussian_derivative(img, s.as_i64(), o1.as_i64(), o2.as_i64()),
        ("Lap", [img], []) => laplacian_filter(img),
        ("LoG1", [img], []) => log_filter(img, 1),
        ("LoG2", [img], []) => log_filter(img, 2),
        ("Sobel", [img], []) => sobel_filter(img),
        ("Gabor", [img], [theta, f]) => gabor_filter(img, theta.as_f64(), f.as_f64()),
        ("LBP_F", [img], []) => lbp_image(img),
        ("HOG_F", [img], []) => hog_image(img),
        ("Sqrt", [img], []) => sqrt_filter(img),
        ("ReLU", [img], []) => relu_filter(img),
        ("Add_MaxP", [a, b], []) => pooled_combine(PoolCombine::Add, a, b),
        ("Sub_MaxP", [a, b], []) => pooled_combine(PoolCombine::Sub, a, b),
        _ => panic!("unknown filter {name} with {} images, {} params", imgs.len(), params.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn random_image(w: usize, h: usize, seed: u64) -> ImagePlane {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ImagePlane::new(w, h, (0..w * h).map(|_| rng.gen::<f64>()).collect())
    }

    #[test]
    fn reflect_indexing() {
        assert_eq!(reflect_index(-1, 4), 1);
        assert_eq!(reflect_index(-2, 4), 2);
        assert_eq!(reflect_index(4, 4), 2);
        assert_eq!(reflect_index(5, 4), 1);
        assert_eq!(reflect_index(-1, 1), 0);
        assert_eq!(reflect_index(7, 1), 0);
    }

    #[test]
    fn mean_of_constant_is_constant() {
        let img = ImagePlane::constant(5, 4, 0.4);
        let out = mean_filter(&img);
        for &v in &out.data {
            assert!((v - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn median_center_of_ramp() {
        let img = ImagePlane::new(3, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        let out = median_filter(&img);
        assert!((out.get(1, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sobel_on_constant_is_zero() {
        let out = sobel_filter(&ImagePlane::constant(6, 6, 0.7));
        assert!(out.data.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn gaussian_preserves_constant() {
        for sigma in 1..=3 {
            let out = gaussian_filter(&ImagePlane::constant(7, 5, 0.33), sigma);
            for &v in &out.data {
                assert!((v - 0.33).abs() < 1e-12, "sigma={sigma}");
            }
        }
    }

    #[test]
    fn gaussian_impulse_matches_kernel() {
        // Unit impulse response equals the separable kernel product.
        let mut img = ImagePlane::zeros(15, 15);
        img.set(7, 7, 1.0);
        let out = gaussian_filter(&img, 1);
        let k = gaussian_kernel_1d(1.0, 0);
        let r = k.len() / 2;
        for dy in -(r as isize)..=(r as isize) {
            for dx in -(r as isize)..=(r as isize) {
                let expect = k[(dx + r as isize) as usize] * k[(dy + r as isize) as usize];
                let got = out.get((7 + dx) as usize, (7 + dy) as usize);
                assert!((got - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_derivative_order_zero_equals_gaussian() {
        let img = random_image(8, 8, 3);
        let a = gaussian_derivative(&img, 2, 0, 0);
        let b = gaussian_filter(&img, 2);
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn first_derivative_of_constant_is_zero() {
        let out = gaussian_derivative(&ImagePlane::constant(9, 9, 0.5), 1, 1, 0);
        assert!(out.data.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn x_derivative_of_ramp_is_slope() {
        // f(x, y) = x / W has df/dx = 1/W away from the reflected borders.
        let w = 24;
        let img = ImagePlane::new(
            w,
            24,
            (0..24 * w).map(|i| (i % w) as f64 / w as f64).collect(),
        );
        let out = gaussian_derivative(&img, 1, 1, 0);
        for y in 4..20 {
            for x in 4..20 {
                assert!(
                    (out.get(x, y) - 1.0 / w as f64).abs() < 1e-6,
                    "at ({x},{y}): {}",
                    out.get(x, y)
                );
            }
        }
    }

    #[test]
    fn gabor_zero_image_is_zero() {
        let out = gabor_filter(&ImagePlane::zeros(8, 8), PI / 4.0, PI / 2.0);
        assert!(out.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gabor_orientation_selectivity() {
        // Vertical stripes (varying along x) respond to theta = 0 much more
        // strongly than to theta = pi/2.
        let f = PI / 2.0;
        let img = ImagePlane::new(
            16,
            16,
            (0..16 * 16).map(|i| ((i % 16) as f64 * f).cos() * 0.5 + 0.5).collect(),
        );
        let energy = |theta: f64| {
            gabor_filter(&img, theta, f).data.iter().map(|v| v.abs()).sum::<f64>()
        };
        assert!(energy(0.0) > energy(PI / 2.0));
    }

    #[test]
    fn lbp_constant_image_is_all_ones_label() {
        let table = lbp_uniform_table();
        let expect = f64::from(table[255]) / 58.0;
        let out = lbp_image(&ImagePlane::constant(6, 6, 0.5));
        assert!(out.data.iter().all(|&v| (v - expect).abs() < 1e-12));
        // All 256 patterns map into [0, 58].
        assert!(table.iter().all(|&l| (l as usize) < LBP_LABELS));
    }

    #[test]
    fn lbp_range() {
        let out = lbp_image(&random_image(9, 7, 11));
        assert!(out.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn hog_image_constant_is_zero_and_bounded() {
        let out = hog_image(&ImagePlane::constant(10, 10, 0.9));
        assert!(out.data.iter().all(|&v| v == 0.0));
        let out = hog_image(&random_image(20, 12, 5));
        assert!(out.data.iter().all(|&v| (0.0..=1.0 + 1e-9).contains(&v)));
    }

    #[test]
    fn hog_image_step_edge_support() {
        // Vertical step edge at x = 8: gradients vanish away from the edge.
        let img = ImagePlane::new(
            16,
            16,
            (0..256).map(|i| if i % 16 < 8 { 0.0 } else { 1.0 }).collect(),
        );
        let out = hog_image(&img);
        for y in 0..16 {
            for x in 0..16 {
                let near_edge = (6..=9).contains(&x);
                if !near_edge {
                    assert!(out.get(x, y).abs() < 1e-12, "unexpected support at ({x},{y})");
                }
            }
        }
        assert!(out.data.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn pooled_combine_equal_sizes() {
        let a = ImagePlane::constant(4, 4, 0.3);
        let out = pooled_combine(PoolCombine::Add, &a, &a);
        assert_eq!((out.width, out.height), (2, 2));
        assert!(out.data.iter().all(|&v| (v - 0.6).abs() < 1e-12));

        let x = random_image(6, 6, 2);
        let z = pooled_combine(PoolCombine::Sub, &x, &x);
        assert_eq!((z.width, z.height), (3, 3));
        assert!(z.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pooled_combine_mismatched_sizes() {
        let a = random_image(8, 8, 1);
        let b = random_image(4, 4, 2);
        let out = pooled_combine(PoolCombine::Sub, &a, &b);
        assert_eq!((out.width, out.height), (4, 4));
        // Compositional oracle: pool the larger once, no crop needed, subtract.
        let pa = max_pool(&a);
        for y in 0..4 {
            for x in 0..4 {
                assert!((out.get(x, y) - (pa.get(x, y) - b.get(x, y))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pooled_combine_odd_and_unit_dims() {
        let a = random_image(5, 1, 3);
        let b = random_image(5, 1, 4);
        let out = pooled_combine(PoolCombine::Add, &a, &b);
        assert_eq!((out.width, out.height), (2, 1));
    }

    #[test]
    fn sqrt_negative_maps_to_one() {
        let img = ImagePlane::new(2, 1, vec![-0.5, 0.25]);
        let out = sqrt_filter(&img);
        assert_eq!(out.data, vec![1.0, 0.5]);
    }

    #[test]
    fn pgm_dump_shape() {
        let s = to_pgm(&random_image(4, 3, 9));
        assert!(s.starts_with("P2\n4 3\n255\n"));
        assert_eq!(s.lines().count(), 6);
    }
}
