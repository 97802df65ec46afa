//! Factor-two bicubic (Catmull-Rom, `a = -0.5`) resampling.

use crate::raster::{reflect, ImageGray};

const A: f64 = -0.5;

fn cubic(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Per output sample: `(first input index (unreflected), weights)`.
struct Taps {
    start: Vec<isize>,
    weights: Vec<f64>,
    len: usize,
}

impl Taps {
    fn downsample(n_out: usize) -> Self {
        // Output o is centered on input coordinate 2o + 1/2; the kernel is
        // stretched by two for anti-aliasing.
        let len = 8;
        let mut start = Vec::with_capacity(n_out);
        let mut weights = Vec::with_capacity(n_out * len);
        for o in 0..n_out {
            let s = 2 * o as isize - 3;
            start.push(s);
            let center = 2.0 * o as f64 + 0.5;
            let w: Vec<f64> = (0..len)
                .map(|k| cubic(((s + k as isize) as f64 - center) / 2.0) / 2.0)
                .collect();
            let sum: f64 = w.iter().sum();
            weights.extend(w.iter().map(|v| v / sum));
        }
        Taps {
            start,
            weights,
            len,
        }
    }

    fn upsample(n_out: usize) -> Self {
        let len = 4;
        let mut start = Vec::with_capacity(n_out);
        let mut weights = Vec::with_capacity(n_out * len);
        for o in 0..n_out {
            let center = (o as f64 + 0.5) / 2.0 - 0.5;
            let s = center.floor() as isize - 1;
            start.push(s);
            let w: Vec<f64> = (0..len)
                .map(|k| cubic((s + k as isize) as f64 - center))
                .collect();
            let sum: f64 = w.iter().sum();
            weights.extend(w.iter().map(|v| v / sum));
        }
        Taps {
            start,
            weights,
            len,
        }
    }
}

fn resample(img: &ImageGray, out_w: usize, out_h: usize, tx: &Taps, ty: &Taps) -> ImageGray {
    let (w, h) = img.dims();
    // Horizontal pass into f64 rows.
    let mut tmp = vec![0.0f64; out_w * h];
    for y in 0..h {
        let row = img.row(y);
        for o in 0..out_w {
            let ws = &tx.weights[o * tx.len..(o + 1) * tx.len];
            let mut acc = 0.0;
            for (k, wk) in ws.iter().enumerate() {
                acc += wk * row[reflect(tx.start[o] + k as isize, w)] as f64;
            }
            tmp[y * out_w + o] = acc;
        }
    }
    let mut out = ImageGray::new(out_w, out_h);
    for o in 0..out_h {
        let ws = &ty.weights[o * ty.len..(o + 1) * ty.len];
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, wk) in ws.iter().enumerate() {
                acc += wk * tmp[reflect(ty.start[o] + k as isize, h) * out_w + x];
            }
            out.set(x, o, acc as f32);
        }
    }
    out
}

/// Halves each dimension (rounding up).
pub fn downsample_2x(img: &ImageGray) -> ImageGray {
    let out_w = img.width().div_ceil(2);
    let out_h = img.height().div_ceil(2);
    resample(
        img,
        out_w,
        out_h,
        &Taps::downsample(out_w),
        &Taps::downsample(out_h),
    )
}

/// Doubles resolution onto an explicit target grid, so that odd sizes lost
/// by [`downsample_2x`] can be restored.
pub fn upsample_2x(img: &ImageGray, width: usize, height: usize) -> ImageGray {
    resample(
        img,
        width,
        height,
        &Taps::upsample(width),
        &Taps::upsample(height),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::add_awgn;

    #[test]
    fn kernel_partition_of_unity() {
        for t in [0.0, 0.25, 0.5, 0.9] {
            let s: f64 = (-2..=2).map(|k| cubic(k as f64 - t)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_preserved() {
        let img = ImageGray::filled(13, 7, 42.5);
        let d = downsample_2x(&img);
        assert_eq!(d.dims(), (7, 4));
        assert!(d.samples().iter().all(|&v| v == 42.5));
        let u = upsample_2x(&d, 13, 7);
        assert!(u.samples().iter().all(|&v| v == 42.5));
    }

    #[test]
    fn shapes() {
        assert_eq!(downsample_2x(&ImageGray::new(4, 4)).dims(), (2, 2));
        assert_eq!(downsample_2x(&ImageGray::new(5, 1)).dims(), (3, 1));
        assert_eq!(upsample_2x(&ImageGray::new(2, 2), 4, 3).dims(), (4, 3));
    }

    #[test]
    fn linear_ramp_survives_upsampling_in_the_interior() {
        let img = ImageGray::from_fn(16, 16, |x, _| 3.0 * x as f32 + 1.0);
        let up = upsample_2x(&img, 32, 32);
        for y in 0..32 {
            for x in 4..28 {
                let c = (x as f64 + 0.5) / 2.0 - 0.5;
                assert!((up.get(x, y) as f64 - (3.0 * c + 1.0)).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn downsampling_halves_white_noise() {
        // Monte Carlo over independent realizations.
        let clean = ImageGray::filled(128, 128, 128.0);
        let mut var = 0.0;
        let runs = 12;
        for seed in 0..runs {
            let noisy = add_awgn(&clean, 20.0, seed).unwrap();
            let d = downsample_2x(&noisy);
            let m = d.mean();
            var += d
                .samples()
                .iter()
                .map(|&v| (v as f64 - m).powi(2))
                .sum::<f64>()
                / (d.len() as f64 - 1.0);
        }
        let std = (var / runs as f64).sqrt();
        assert!((8.0..=12.0).contains(&std), "residual std {std}");
    }
}
