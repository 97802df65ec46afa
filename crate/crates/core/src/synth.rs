//! Deterministic synthetic scenes for examples, tests and benchmarks: a
//! smooth shaded background, anti-aliased shapes with soft edges, windowed
//! stripe patches and low-amplitude value-noise texture.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{ImageGray, ImageRgb};

#[derive(Clone, Copy, Debug)]
enum Shape {
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        angle: f64,
    },
    Rect {
        cx: f64,
        cy: f64,
        hw: f64,
        hh: f64,
        angle: f64,
    },
}

impl Shape {
    /// Approximate signed distance in pixels, negative inside.
    fn distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::Ellipse {
                cx,
                cy,
                rx,
                ry,
                angle,
            } => {
                let (u, v) = rotate(x - cx, y - cy, angle);
                let r = ((u / rx).powi(2) + (v / ry).powi(2)).sqrt();
                (r - 1.0) * rx.min(ry)
            }
            Shape::Rect {
                cx,
                cy,
                hw,
                hh,
                angle,
            } => {
                let (u, v) = rotate(x - cx, y - cy, angle);
                let (qx, qy) = (u.abs() - hw, v.abs() - hh);
                let outside = (qx.max(0.0).powi(2) + qy.max(0.0).powi(2)).sqrt();
                outside + qx.max(qy).min(0.0)
            }
        }
    }
}

fn rotate(x: f64, y: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (c * x + s * y, -s * x + c * y)
}

#[derive(Clone, Debug)]
struct Layer {
    shape: Shape,
    color: [f64; 3],
    opacity: f64,
    softness: f64,
}

#[derive(Clone, Debug)]
struct Stripes {
    cx: f64,
    cy: f64,
    radius: f64,
    freq: f64,
    angle: f64,
    phase: f64,
    amplitude: [f64; 3],
}

#[derive(Clone, Debug)]
struct ValueNoise {
    spacing: f64,
    cols: usize,
    lattice: Vec<f64>,
    amplitude: f64,
}

impl ValueNoise {
    fn new(
        rng: &mut ChaCha8Rng,
        width: usize,
        height: usize,
        spacing: f64,
        amplitude: f64,
    ) -> Self {
        let cols = (width as f64 / spacing).ceil() as usize + 2;
        let rows = (height as f64 / spacing).ceil() as usize + 2;
        let lattice = (0..cols * rows)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Self {
            spacing,
            cols,
            lattice,
            amplitude,
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = (x / self.spacing, y / self.spacing);
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let (fx, fy) = (gx - ix as f64, gy - iy as f64);
        // Smoothstep weights keep the texture free of lattice creases.
        let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
        let l = |dx: usize, dy: usize| self.lattice[(iy + dy) * self.cols + ix + dx];
        let top = l(0, 0) + sx * (l(1, 0) - l(0, 0));
        let bottom = l(0, 1) + sx * (l(1, 1) - l(0, 1));
        self.amplitude * (top + sy * (bottom - top))
    }
}

/// A randomly drawn scene that can be rendered at its native size.
#[derive(Clone, Debug)]
struct Scene {
    width: usize,
    height: usize,
    base: [f64; 3],
    slope: [(f64, f64); 3],
    layers: Vec<Layer>,
    stripes: Vec<Stripes>,
    noise: Vec<ValueNoise>,
}

impl Scene {
    fn random(width: usize, height: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (width as f64, height as f64);
        let scale = w.min(h);
        let base_luma: f64 = rng.random_range(60.0..190.0);
        let base = [0, 1, 2].map(|_| base_luma + rng.random_range(-25.0..25.0));
        let slope = [0, 1, 2].map(|_| {
            let g = rng.random_range(-60.0..60.0);
            (g / w, rng.random_range(-60.0..60.0) / h)
        });
        let count = rng.random_range(12..24);
        let layers = (0..count)
            .map(|_| {
                let cx = rng.random_range(0.0..w);
                let cy = rng.random_range(0.0..h);
                let angle = rng.random_range(0.0..PI);
                let size = scale * rng.random_range(0.04..0.25);
                let aspect = rng.random_range(0.3..1.0);
                let shape = if rng.random_bool(0.5) {
                    Shape::Ellipse {
                        cx,
                        cy,
                        rx: size,
                        ry: size * aspect,
                        angle,
                    }
                } else {
                    Shape::Rect {
                        cx,
                        cy,
                        hw: size,
                        hh: size * aspect,
                        angle,
                    }
                };
                let luma: f64 = rng.random_range(10.0..245.0);
                let tint: f64 = rng.random_range(0.0..60.0);
                let color =
                    [0, 1, 2].map(|_| (luma + rng.random_range(-tint..tint)).clamp(0.0, 255.0));
                Layer {
                    shape,
                    color,
                    opacity: rng.random_range(0.6..1.0),
                    softness: rng.random_range(0.5..2.5),
                }
            })
            .collect();
        let stripes = (0..rng.random_range(1..4))
            .map(|_| {
                let amp = rng.random_range(15.0..50.0);
                Stripes {
                    cx: rng.random_range(0.0..w),
                    cy: rng.random_range(0.0..h),
                    radius: scale * rng.random_range(0.08..0.2),
                    freq: rng.random_range(0.04..0.2),
                    angle: rng.random_range(0.0..PI),
                    phase: rng.random_range(0.0..2.0 * PI),
                    amplitude: [0, 1, 2].map(|_| amp * rng.random_range(0.7..1.0)),
                }
            })
            .collect();
        let noise = vec![
            ValueNoise::new(&mut rng, width, height, 24.0, 12.0),
            ValueNoise::new(&mut rng, width, height, 4.0, 3.0),
        ];
        Self {
            width,
            height,
            base,
            slope,
            layers,
            stripes,
            noise,
        }
    }

    fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let mut rgb = [0, 1, 2].map(|c| {
            let (gx, gy) = self.slope[c];
            self.base[c]
                + gx * (px - self.width as f64 / 2.0)
                + gy * (py - self.height as f64 / 2.0)
        });
        for layer in &self.layers {
            let d = layer.shape.distance(px, py);
            let coverage = (0.5 - d / layer.softness).clamp(0.0, 1.0) * layer.opacity;
            if coverage > 0.0 {
                for c in 0..3 {
                    rgb[c] += coverage * (layer.color[c] - rgb[c]);
                }
            }
        }
        for s in &self.stripes {
            let r = ((px - s.cx).powi(2) + (py - s.cy).powi(2)).sqrt();
            let window = (1.0 - r / s.radius).clamp(0.0, 1.0).min(0.25) * 4.0;
            if window > 0.0 {
                let (u, _) = rotate(px - s.cx, py - s.cy, s.angle);
                let wave = (2.0 * PI * s.freq * u + s.phase).sin() * window;
                for c in 0..3 {
                    rgb[c] += s.amplitude[c] * wave;
                }
            }
        }
        let texture: f64 = self.noise.iter().map(|n| n.at(px, py)).sum();
        rgb.map(|v| (v + texture).clamp(0.0, 255.0))
    }
}

/// A gray scene; the same seed and size always give the same image.
pub fn scene_gray(width: usize, height: usize, seed: u64) -> ImageGray {
    scene_rgb(width, height, seed).luma()
}

pub fn scene_rgb(width: usize, height: usize, seed: u64) -> ImageRgb {
    let scene = Scene::random(width, height, seed);
    let mut planes = [0, 1, 2].map(|_| ImageGray::new(width, height));
    for y in 0..height {
        for x in 0..width {
            let rgb = scene.pixel(x, y);
            for c in 0..3 {
                planes[c].set(x, y, rgb[c] as f32);
            }
        }
    }
    let [r, g, b] = planes;
    ImageRgb::from_planes(r, g, b).expect("planes share dimensions")
}

/// `count` gray scenes with consecutive seeds starting at `seed`.
pub fn corpus_gray(count: usize, width: usize, height: usize, seed: u64) -> Vec<ImageGray> {
    (0..count as u64)
        .map(|i| scene_gray(width, height, seed + i))
        .collect()
}

pub fn corpus_rgb(count: usize, width: usize, height: usize, seed: u64) -> Vec<ImageRgb> {
    (0..count as u64)
        .map(|i| scene_rgb(width, height, seed + i))
        .collect()
}
