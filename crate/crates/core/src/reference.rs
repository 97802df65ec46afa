//! Reference operators used to generate training targets: the bilateral
//! filter, curvature-motion (TV) flow and edge tangent flow by line integral
//! convolution.
//!
//! All three are written as `z_i + (weighted mean of differences)` or as
//! explicit increments, so constants are preserved exactly and a global
//! intensity shift commutes with the operator.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantizer::feature_map;
use crate::raster::{reflect, ImageGray};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    /// TV flow time step.
    pub dt: f64,
    /// TV flow step count; `dt * steps` is the evolution time.
    pub steps: usize,
    /// Gradient regularization in `|grad u|_eps = sqrt(|grad u|^2 + eps^2)`.
    pub epsilon: f64,
    /// Structure tensor smoothing for the tangent field.
    pub rho: f64,
    /// Streamline arc length on each side of the pixel.
    pub half_length: f64,
    pub sigma_r: f64,
    pub sigma_s: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            steps: 10,
            epsilon: 1e-3 * 255.0,
            rho: 1.5,
            half_length: 5.0,
            sigma_r: 25.0,
            sigma_s: 2.5,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("epsilon", self.epsilon),
            ("rho", self.rho),
            ("sigma_r", self.sigma_r),
            ("sigma_s", self.sigma_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.half_length >= 0.0) || !self.half_length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "half_length must be non-negative, got {}",
                self.half_length
            )));
        }
        Ok(())
    }

    /// Applies `key=value` overrides separated by commas, e.g.
    /// `"sigma_r=30,sigma_s=2"`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("expected key=value, got {item:?}"))
            })?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad number for {key}: {v:?}")))
            };
            match key.trim() {
                "dt" => self.dt = parse(value)?,
                "steps" => {
                    self.steps = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad step count {value:?}")))?
                }
                "epsilon" | "eps" => self.epsilon = parse(value)?,
                "rho" => self.rho = parse(value)?,
                "half_length" | "length" => self.half_length = parse(value)?,
                "sigma_r" => self.sigma_r = parse(value)?,
                "sigma_s" => self.sigma_s = parse(value)?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown operator parameter {other:?}"
                    )))
                }
            }
        }
        self.validate()?;
        Ok(self)
    }
}

/// Direct bilateral filter over a `(2r+1)^2` window, `r = ceil(3 sigma_s)`.
pub fn bilateral(img: &ImageGray, sigma_r: f64, sigma_s: f64) -> Result<ImageGray> {
    for (name, v) in [("sigma_r", sigma_r), ("sigma_s", sigma_s)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let r = (3.0 * sigma_s).ceil() as usize;
    let side = 2 * r + 1;
    let spatial: Vec<f32> = (0..side * side)
        .map(|i| {
            let dx = (i % side) as f64 - r as f64;
            let dy = (i / side) as f64 - r as f64;
            (-(dx * dx + dy * dy) / (2.0 * sigma_s * sigma_s)).exp() as f32
        })
        .collect();
    let range_scale = (-1.0 / (2.0 * sigma_r * sigma_r)) as f32;
    let padded = img.padded(r);
    let (w, h) = img.dims();
    let mut out = ImageGray::new(w, h);
    out.samples_mut()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, px) in row.iter_mut().enumerate() {
                let center = padded.get(x + r, y + r);
                let mut num = 0.0f64;
                let mut den = 0.0f64;
                for dy in 0..side {
                    let src = &padded.row(y + dy)[x..x + side];
                    let ws = &spatial[dy * side..(dy + 1) * side];
                    for (&v, &s) in src.iter().zip(ws) {
                        let diff = v - center;
                        let wgt = s * (range_scale * diff * diff).exp();
                        num += (wgt * diff) as f64;
                        den += wgt as f64;
                    }
                }
                *px = center + (num / den) as f32;
            }
        });
    Ok(out)
}

/// One explicit step of regularized curvature motion,
/// `u += dt * |grad u|_eps * div(grad u / |grad u|_eps)`, with central
/// differences and reflected borders.
fn tv_step(u: &ImageGray, dt: f64, eps2: f64) -> ImageGray {
    let (w, h) = u.dims();
    let mut out = ImageGray::new(w, h);
    out.samples_mut()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            let yi = y as isize;
            let up = u.row(reflect(yi - 1, h));
            let mid = u.row(y);
            let down = u.row(reflect(yi + 1, h));
            for (x, px) in row.iter_mut().enumerate() {
                let xl = reflect(x as isize - 1, w);
                let xr = reflect(x as isize + 1, w);
                let c = mid[x] as f64;
                let ux = 0.5 * (mid[xr] as f64 - mid[xl] as f64);
                let uy = 0.5 * (down[x] as f64 - up[x] as f64);
                let uxx = mid[xr] as f64 - 2.0 * c + mid[xl] as f64;
                let uyy = down[x] as f64 - 2.0 * c + up[x] as f64;
                let uxy =
                    0.25 * (down[xr] as f64 - up[xr] as f64 - down[xl] as f64 + up[xl] as f64);
                let num = uxx * (uy * uy + eps2) - 2.0 * ux * uy * uxy + uyy * (ux * ux + eps2);
                let den = ux * ux + uy * uy + eps2;
                *px = (c + dt * num / den) as f32;
            }
        });
    out
}

pub fn tv_flow(img: &ImageGray, params: &FlowParams) -> Result<ImageGray> {
    params.validate()?;
    let eps2 = params.epsilon * params.epsilon;
    let mut u = img.clone();
    for _ in 0..params.steps {
        u = tv_step(&u, params.dt, eps2);
    }
    Ok(u)
}

/// Unit edge tangents: the second eigenvector of the smoothed structure
/// tensor, i.e. the gradient orientation turned by 90 degrees.
pub fn tangent_field(img: &ImageGray, rho: f64) -> Result<Vec<[f64; 2]>> {
    Ok(feature_map(img, rho)?
        .into_iter()
        .map(|f| [-f.orientation.sin(), f.orientation.cos()])
        .collect())
}

#[inline]
fn align(v: [f64; 2], reference: [f64; 2]) -> [f64; 2] {
    if v[0] * reference[0] + v[1] * reference[1] < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Bilinear interpolation of a sign-ambiguous direction field: corner
/// vectors are flipped to agree with `reference` first.
fn sample_direction(
    field: &[[f64; 2]],
    w: usize,
    h: usize,
    p: [f64; 2],
    reference: [f64; 2],
) -> [f64; 2] {
    let x0 = p[0].floor();
    let y0 = p[1].floor();
    let (fx, fy) = (p[0] - x0, p[1] - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let mut acc = [0.0, 0.0];
    for (dx, dy, wgt) in [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        if wgt == 0.0 {
            continue;
        }
        let v = field[reflect(y0 + dy, h) * w + reflect(x0 + dx, w)];
        let v = align(v, reference);
        acc[0] += wgt * v[0];
        acc[1] += wgt * v[1];
    }
    let norm = (acc[0] * acc[0] + acc[1] * acc[1]).sqrt();
    if norm > 1e-12 {
        [acc[0] / norm, acc[1] / norm]
    } else {
        reference
    }
}

fn sample_bilinear(img: &ImageGray, p: [f64; 2]) -> f64 {
    let x0 = p[0].floor();
    let y0 = p[1].floor();
    let (fx, fy) = (p[0] - x0, p[1] - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let v = |dx: isize, dy: isize| img.get_reflect(x0 + dx, y0 + dy) as f64;
    let top = v(0, 0) + fx * (v(1, 0) - v(0, 0));
    let bottom = v(0, 1) + fx * (v(1, 1) - v(0, 1));
    top + fy * (bottom - top)
}

/// Streamline step along the tangent field.
const LIC_STEP: f64 = 0.5;

/// Line integral convolution along the edge tangent field: each pixel
/// averages bilinear samples taken every half pixel along its streamline in
/// both directions (midpoint RK2), with Gaussian arc-length weights of
/// deviation `half_length / 2`.
pub fn edge_tangent_flow(img: &ImageGray, params: &FlowParams) -> Result<ImageGray> {
    params.validate()?;
    let tangents = tangent_field(img, params.rho)?;
    let (w, h) = img.dims();
    let max_len = params.half_length;
    let sigma = 0.5 * max_len;
    let steps = (max_len / LIC_STEP + 1e-9).floor() as usize;
    let weights: Vec<f64> = (1..=steps)
        .map(|i| {
            let s = i as f64 * LIC_STEP;
            (-s * s / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let mut out = ImageGray::new(w, h);
    out.samples_mut()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, px) in row.iter_mut().enumerate() {
                let center = img.get(x, y) as f64;
                let start = tangents[y * w + x];
                let mut num = 0.0;
                let mut den = 1.0;
                for sign in [1.0, -1.0] {
                    let mut p = [x as f64, y as f64];
                    let mut dir = [sign * start[0], sign * start[1]];
                    for &wgt in &weights {
                        let k1 = sample_direction(&tangents, w, h, p, dir);
                        let mid = [p[0] + 0.5 * LIC_STEP * k1[0], p[1] + 0.5 * LIC_STEP * k1[1]];
                        let k2 = sample_direction(&tangents, w, h, mid, k1);
                        p = [p[0] + LIC_STEP * k2[0], p[1] + LIC_STEP * k2[1]];
                        dir = k2;
                        num += wgt * (sample_bilinear(img, p) - center);
                        den += wgt;
                    }
                }
                *px = (center + num / den) as f32;
            }
        });
    Ok(out)
}
