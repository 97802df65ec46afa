//! Image quality metrics on the `[0, 255]` scale.

use crate::error::{Error, Result};
use crate::raster::{ImageGray, ImageRgb};

const PEAK: f64 = 255.0;
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

pub fn mse(a: &ImageGray, b: &ImageGray) -> Result<f64> {
    a.check_same_dims(b)?;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio for an MSE value; `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(a: &ImageGray, b: &ImageGray) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// PSNR of the MSE pooled over all three channels.
pub fn psnr_rgb(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..3 {
        total += mse(a.plane(c), b.plane(c))?;
    }
    Ok(psnr_from_mse(total / 3.0))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable "valid" correlation with the SSIM window.
fn filter_valid(src: &[f64], width: usize, height: usize, w: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut tmp = vec![0.0; ow * height];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..ow {
            tmp[y * ow + x] = w
                .iter()
                .zip(&row[x..x + SSIM_WINDOW])
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * tmp[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean structural similarity over all fully contained 11x11 Gaussian
/// windows (sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255).
pub fn mssim(a: &ImageGray, b: &ImageGray) -> Result<f64> {
    a.check_same_dims(b)?;
    let (width, height) = a.dims();
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::TooSmall(format!(
            "MSSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {width}x{height}"
        )));
    }
    let w = gaussian_window();
    let x: Vec<f64> = a.samples().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.samples().iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(&x, width, height, &w);
    let mu_y = filter_valid(&y, width, height, &w);
    let e_xx = filter_valid(&xx, width, height, &w);
    let e_yy = filter_valid(&yy, width, height, &w);
    let e_xy = filter_valid(&xy, width, height, &w);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut sum = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (vx + vy + c2);
        sum += num / den;
    }
    Ok(sum / mu_x.len() as f64)
}

/// Channel-averaged MSSIM.
pub fn mssim_rgb(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..3 {
        total += mssim(a.plane(c), b.plane(c))?;
    }
    Ok(total / 3.0)
}
