//! Smoothed 2x2 structure tensor and its eigen features.
//!
//! Gradients are estimated with diagonal differences, which are second-order
//! accurate at cell centers and live on a grid shifted by half a sample and
//! rotated by 45 degrees. The smoothing filter has even length so that its
//! output lands back on the pixel grid, and the dominant eigenvector is
//! rotated back by 45 degrees before the orientation is read off.
//!
//! Coordinates: `x1` is the column index, `x2` the row index (downwards).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::raster::{reflect, ImageGray};

/// Diagonal differences on the `(W-1) x (H-1)` cell-center grid.
///
/// The raw differences are stored unscaled so that outer products stay
/// exact; [`GradientField::g1`] and [`GradientField::g2`] apply the `1/sqrt 2`.
#[derive(Clone, Debug)]
pub struct GradientField {
    width: usize,
    height: usize,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Derivative along `x1' = (x1 - x2) / sqrt 2` at cell `(x + 1/2, y + 1/2)`.
    pub fn g1(&self, x: usize, y: usize) -> f64 {
        self.d1[y * self.width + x] * FRAC_1_SQRT_2
    }

    /// Derivative along `x2' = (x1 + x2) / sqrt 2`.
    pub fn g2(&self, x: usize, y: usize) -> f64 {
        self.d2[y * self.width + x] * FRAC_1_SQRT_2
    }

    /// Builds a field directly from rotated-axis gradient values.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Self {
        let mut d1 = Vec::with_capacity(width * height);
        let mut d2 = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (g1, g2) = f(x, y);
                d1.push(g1 * std::f64::consts::SQRT_2);
                d2.push(g2 * std::f64::consts::SQRT_2);
            }
        }
        Self {
            width,
            height,
            d1,
            d2,
        }
    }
}

pub fn diagonal_gradient(img: &ImageGray) -> Result<GradientField> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::TooSmall(format!(
            "structure tensor needs at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let (gw, gh) = (w - 1, h - 1);
    let mut d1 = Vec::with_capacity(gw * gh);
    let mut d2 = Vec::with_capacity(gw * gh);
    for y in 0..gh {
        let top = img.row(y);
        let bottom = img.row(y + 1);
        for x in 0..gw {
            d1.push(top[x + 1] as f64 - bottom[x] as f64);
            d2.push(bottom[x + 1] as f64 - top[x] as f64);
        }
    }
    Ok(GradientField {
        width: gw,
        height: gh,
        d1,
        d2,
    })
}

/// Per-sample tensor components `(a, b, c)`.
#[derive(Clone, Debug)]
pub struct TensorField {
    width: usize,
    height: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl TensorField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64, f64) {
        let i = y * self.width + x;
        (self.a[i], self.b[i], self.c[i])
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

/// Unsmoothed rank-one tensors `(g1^2, g1 g2, g2^2)` on the cell-center grid.
pub fn outer_products(grad: &GradientField) -> TensorField {
    let n = grad.d1.len();
    let (mut a, mut b, mut c) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for (&p, &q) in grad.d1.iter().zip(&grad.d2) {
        a.push(0.5 * (p * p));
        b.push(0.5 * (p * q));
        c.push(0.5 * (q * q));
    }
    TensorField {
        width: grad.width,
        height: grad.height,
        a,
        b,
        c,
    }
}

/// Normalized Gaussian sampled at `+-1/2, +-3/2, ..., +-(L - 1/2)` with
/// `L = ceil(3 rho)`. Tap `k` sits at offset `k - L + 1/2`.
pub fn half_sample_gaussian(rho: f64) -> Vec<f64> {
    let half = (3.0 * rho).ceil().max(1.0) as usize;
    let mut taps: Vec<f64> = (0..2 * half)
        .map(|k| {
            let t = k as f64 - half as f64 + 0.5;
            (-t * t / (2.0 * rho * rho)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= sum);
    taps
}

/// Column sources for the horizontal pass: padded position `i` reads
/// `reflect(i - L)`.
fn column_map(w: usize, taps: usize) -> Vec<usize> {
    let half = (taps / 2) as isize;
    (0..(w + 1 + taps) as isize)
        .map(|i| reflect(i - half, w))
        .collect()
}

/// Horizontal pass of one row: `out(x) = sum_k taps[k] * src(x + k - L)`.
#[inline]
fn smooth_row(src: &[f64], cols: &[usize], taps: &[f64], padded: &mut [f64], out: &mut [f64]) {
    for (p, &c) in padded.iter_mut().zip(cols) {
        *p = src[c];
    }
    let ow = out.len();
    out.fill(0.0);
    for (k, &t) in taps.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(&padded[k..k + ow]) {
            *o += t * v;
        }
    }
}

/// Vertical pass for output row `y`; `row(sy)` yields horizontally smoothed
/// cell rows.
#[inline]
fn smooth_column<'r>(
    y: usize,
    h: usize,
    taps: &[f64],
    mut row: impl FnMut(usize) -> &'r [f64],
    dst: &mut [f64],
) {
    let half = (taps.len() / 2) as isize;
    dst.fill(0.0);
    for (k, &t) in taps.iter().enumerate() {
        let src = row(reflect(y as isize + k as isize - half, h));
        for (d, s) in dst.iter_mut().zip(src) {
            *d += t * s;
        }
    }
}

/// Smooths a cell-center plane of `w x h` onto the `(w+1) x (h+1)` pixel grid.
fn smooth_plane(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let ow = w + 1;
    let cols = column_map(w, taps.len());
    let mut padded = vec![0.0; cols.len()];
    let mut tmp = vec![0.0; ow * h];
    for (y, out) in tmp.chunks_exact_mut(ow).enumerate() {
        smooth_row(&src[y * w..(y + 1) * w], &cols, taps, &mut padded, out);
    }
    let mut out = vec![0.0; ow * (h + 1)];
    for (y, dst) in out.chunks_exact_mut(ow).enumerate() {
        smooth_column(y, h, taps, |sy| &tmp[sy * ow..(sy + 1) * ow], dst);
    }
    out
}

/// Row-at-a-time structure tensor with a ring of horizontally smoothed cell
/// rows. Produces exactly the rows of [`structure_tensor`] while holding
/// only `O(rho * width)` memory.
pub struct TensorRows<'a> {
    img: &'a ImageGray,
    taps: Vec<f64>,
    cols: Vec<usize>,
    padded: Vec<f64>,
    raw: [Vec<f64>; 3],
    /// Slot `i` holds smoothed cell row `ring_rows[i]` for (a, b, c).
    ring: Vec<[Vec<f64>; 3]>,
    ring_rows: Vec<usize>,
}

impl<'a> TensorRows<'a> {
    pub fn new(img: &'a ImageGray, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let (w, h) = img.dims();
        if w < 2 || h < 2 {
            return Err(Error::TooSmall(format!(
                "structure tensor needs at least 2x2 pixels, got {w}x{h}"
            )));
        }
        let taps = half_sample_gaussian(rho);
        let cols = column_map(w - 1, taps.len());
        let slots = taps.len() + 1;
        Ok(Self {
            img,
            padded: vec![0.0; cols.len()],
            cols,
            raw: std::array::from_fn(|_| vec![0.0; w - 1]),
            ring: (0..slots)
                .map(|_| std::array::from_fn(|_| vec![0.0; w]))
                .collect(),
            ring_rows: vec![usize::MAX; slots],
            taps,
        })
    }

    fn fill_slot(&mut self, gy: usize) -> usize {
        let slot = gy % self.ring.len();
        if self.ring_rows[slot] != gy {
            let top = self.img.row(gy);
            let bottom = self.img.row(gy + 1);
            let [ra, rb, rc] = &mut self.raw;
            for x in 0..ra.len() {
                let p = top[x + 1] as f64 - bottom[x] as f64;
                let q = bottom[x + 1] as f64 - top[x] as f64;
                ra[x] = 0.5 * (p * p);
                rb[x] = 0.5 * (p * q);
                rc[x] = 0.5 * (q * q);
            }
            for ch in 0..3 {
                smooth_row(
                    &self.raw[ch],
                    &self.cols,
                    &self.taps,
                    &mut self.padded,
                    &mut self.ring[slot][ch],
                );
            }
            self.ring_rows[slot] = gy;
        }
        slot
    }

    /// Writes tensor row `y` into `a`, `b`, `c` (each of image width).
    /// Cheapest when called with increasing `y`.
    pub fn row(&mut self, y: usize, a: &mut [f64], b: &mut [f64], c: &mut [f64]) {
        let gh = self.img.height() - 1;
        let half = (self.taps.len() / 2) as isize;
        for k in 0..self.taps.len() {
            self.fill_slot(reflect(y as isize + k as isize - half, gh));
        }
        let slots = self.ring.len();
        let ring = &self.ring;
        for (ch, dst) in [a, b, c].into_iter().enumerate() {
            smooth_column(y, gh, &self.taps, |sy| &ring[sy % slots][ch], dst);
        }
    }
}

/// Forms the outer products of the gradient and smooths them with the
/// even-length Gaussian, returning a tensor per image pixel.
pub fn smooth_tensor(grad: &GradientField, rho: f64) -> Result<TensorField> {
    check_rho(rho)?;
    let raw = outer_products(grad);
    let taps = half_sample_gaussian(rho);
    let (w, h) = (grad.width, grad.height);
    Ok(TensorField {
        width: w + 1,
        height: h + 1,
        a: smooth_plane(&raw.a, w, h, &taps),
        b: smooth_plane(&raw.b, w, h, &taps),
        c: smooth_plane(&raw.c, w, h, &taps),
    })
}

/// Smoothed structure tensor of an image, one per pixel. Same result as
/// `smooth_tensor(&diagonal_gradient(img)?, rho)` without materializing the
/// gradient field.
pub fn structure_tensor(img: &ImageGray, rho: f64) -> Result<TensorField> {
    check_rho(rho)?;
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::TooSmall(format!(
            "structure tensor needs at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let (gw, gh) = (w - 1, h - 1);
    let (mut a, mut b, mut c) = (vec![0.0; gw * gh], vec![0.0; gw * gh], vec![0.0; gw * gh]);
    for y in 0..gh {
        let top = img.row(y);
        let bottom = img.row(y + 1);
        let range = y * gw..(y + 1) * gw;
        let rows = a[range.clone()]
            .iter_mut()
            .zip(&mut b[range.clone()])
            .zip(&mut c[range]);
        for (x, ((a, b), c)) in rows.enumerate() {
            let p = top[x + 1] as f64 - bottom[x] as f64;
            let q = bottom[x + 1] as f64 - top[x] as f64;
            *a = 0.5 * (p * p);
            *b = 0.5 * (p * q);
            *c = 0.5 * (q * q);
        }
    }
    let taps = half_sample_gaussian(rho);
    Ok(TensorField {
        width: w,
        height: h,
        a: smooth_plane(&a, gw, gh, &taps),
        b: smooth_plane(&b, gw, gh, &taps),
        c: smooth_plane(&c, gw, gh, &taps),
    })
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tensor smoothing rho must be positive, got {rho}"
        )));
    }
    Ok(())
}

/// Eigen decomposition of `[[a, b], [b, c]]` in the rotated frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSystem {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Dominant eigenvector (unnormalized, zero for multiples of identity).
    pub w: [f64; 2],
}

pub fn eigen_system(a: f64, b: f64, c: f64) -> EigenSystem {
    let trace = a + c;
    let delta = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    // For a nonnegative-definite matrix delta <= trace; rounding can break
    // that for singular inputs, so lambda1 is capped at the trace. Within
    // [trace/2, trace] the subtraction below is exact, which keeps
    // lambda1 + lambda2 == a + c and lambda2 >= 0 without a clamp.
    let lambda1 = (0.5 * (trace + delta)).min(trace);
    let lambda2 = trace - lambda1;
    let primary = [2.0 * b, c - a + delta];
    let fallback = [a - c + delta, 2.0 * b];
    let norm = |v: &[f64; 2]| v[0] * v[0] + v[1] * v[1];
    let w = if norm(&fallback) > norm(&primary) {
        fallback
    } else {
        primary
    };
    EigenSystem {
        lambda1,
        lambda2,
        w,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Features {
    /// Gradient direction in `(-pi/2, pi/2]`.
    pub orientation: f64,
    /// `sqrt(lambda1)`.
    pub strength: f64,
    /// `(sqrt l1 - sqrt l2) / (sqrt l1 + sqrt l2)`, zero when `l1 = 0`.
    pub coherence: f64,
}

/// Dominant eigenvector turned back from the diagonal frame into image
/// coordinates (unnormalized).
#[inline]
pub fn gradient_direction(es: &EigenSystem) -> [f64; 2] {
    let w = es.w;
    [w[0] + w[1], w[1] - w[0]]
}

/// `(strength, coherence)` of an eigensystem.
#[inline]
pub fn strength_coherence(es: &EigenSystem) -> (f64, f64) {
    let s1 = es.lambda1.sqrt();
    let s2 = es.lambda2.sqrt();
    let coherence = if s1 + s2 > 0.0 {
        (s1 - s2) / (s1 + s2)
    } else {
        0.0
    };
    (s1, coherence)
}

pub fn eigen_features(a: f64, b: f64, c: f64) -> Features {
    let es = eigen_system(a, b, c);
    let rotated = gradient_direction(&es);
    let mut orientation = rotated[1].atan2(rotated[0]);
    if orientation <= -FRAC_PI_2 {
        orientation += PI;
    } else if orientation > FRAC_PI_2 {
        orientation -= PI;
    }
    let (strength, coherence) = strength_coherence(&es);
    Features {
        orientation,
        strength,
        coherence,
    }
}
