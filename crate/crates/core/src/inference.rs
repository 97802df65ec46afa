//! Spatially varying filtering: one selected filter per pixel.
//!
//! Filters are applied as correlation, `out_i = sum_j h_j z_{i+j}`, with
//! reflected borders. Per-pixel cost is `O(D)` regardless of the bank size.

use rayon::prelude::*;

use crate::bank::FilterBank;
use crate::error::{Error, Result};
use crate::quantizer::{selection_map, SelectionMap};
use crate::raster::{ImageGray, ImageRgb};

/// `(out, selection row, padded inputs, filters, D, y, footprint side)`.
type RowKernel = fn(&mut [f32], &[u32], &[ImageGray], &[f32], usize, usize, usize);

/// Filters `inputs` (one image per stream) with output bank `output` under a
/// fixed selection map.
pub fn apply_with_selection(
    bank: &FilterBank,
    output: usize,
    inputs: &[&ImageGray],
    selection: &SelectionMap,
) -> Result<ImageGray> {
    if inputs.len() != bank.arity() {
        return Err(Error::InvalidArgument(format!(
            "bank of arity {} applied to {} input streams",
            bank.arity(),
            inputs.len()
        )));
    }
    if output >= bank.output_count() {
        return Err(Error::InvalidArgument(format!(
            "output {output} requested from a bank with {} outputs",
            bank.output_count()
        )));
    }
    let dims = selection.dims();
    for img in inputs {
        if img.dims() != dims {
            return Err(Error::DimensionMismatch(format!(
                "input {}x{} vs selection {}x{}",
                img.width(),
                img.height(),
                dims.0,
                dims.1
            )));
        }
    }
    let k = bank.buckets();
    if let Some(&bad) = selection.indices().iter().find(|&&i| i as usize >= k) {
        return Err(Error::InvalidArgument(format!(
            "selection index {bad} out of range for {k} filters"
        )));
    }
    let fp = bank.footprint();
    let filters = bank.output(output).coefficients();
    let d = bank.dim();
    let padded: Vec<ImageGray> = inputs.iter().map(|img| img.padded(fp.radius())).collect();
    let (w, h) = dims;
    let mut out = ImageGray::new(w, h);
    let row_fn: RowKernel = match fp.side() {
        3 => filter_row::<3>,
        5 => filter_row::<5>,
        7 => filter_row::<7>,
        9 => filter_row::<9>,
        11 => filter_row::<11>,
        13 => filter_row::<13>,
        _ => filter_row_dyn,
    };
    out.samples_mut()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| row_fn(row, selection.row(y), &padded, filters, d, y, fp.side()));
    Ok(out)
}

/// One output row for a footprint side known at compile time. Each tap row
/// is an f32 dot product; rows and streams are summed in f64.
fn filter_row<const N: usize>(
    out: &mut [f32],
    sel: &[u32],
    padded: &[ImageGray],
    filters: &[f32],
    d: usize,
    y: usize,
    _side: usize,
) {
    for (x, px) in out.iter_mut().enumerate() {
        let k = sel[x] as usize;
        let hk = &filters[k * d..(k + 1) * d];
        let mut acc = 0.0f64;
        for (s, p) in padded.iter().enumerate() {
            for dy in 0..N {
                let src: &[f32; N] = p.row(y + dy)[x..x + N].try_into().unwrap();
                let base = (s * N + dy) * N;
                let coef: &[f32; N] = hk[base..base + N].try_into().unwrap();
                let mut dot = 0.0f32;
                for j in 0..N {
                    dot += coef[j] * src[j];
                }
                acc += dot as f64;
            }
        }
        *px = acc as f32;
    }
}

fn filter_row_dyn(
    out: &mut [f32],
    sel: &[u32],
    padded: &[ImageGray],
    filters: &[f32],
    d: usize,
    y: usize,
    n: usize,
) {
    for (x, px) in out.iter_mut().enumerate() {
        let k = sel[x] as usize;
        let hk = &filters[k * d..(k + 1) * d];
        let mut acc = 0.0f64;
        for (s, p) in padded.iter().enumerate() {
            for dy in 0..n {
                let src = &p.row(y + dy)[x..x + n];
                let base = (s * n + dy) * n;
                let dot: f32 = hk[base..base + n].iter().zip(src).map(|(c, v)| c * v).sum();
                acc += dot as f64;
            }
        }
        *px = acc as f32;
    }
}

fn check_min_size(img: &ImageGray) -> Result<()> {
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::TooSmall(format!(
            "filtering needs at least 2x2 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Single-stream gray filtering with selection computed from `img`.
pub fn apply(bank: &FilterBank, img: &ImageGray) -> Result<ImageGray> {
    if bank.arity() != 1 || bank.is_color() {
        return Err(Error::InvalidArgument(format!(
            "gray filtering needs a single-stream gray bank (arity {}, {} outputs)",
            bank.arity(),
            bank.output_count()
        )));
    }
    check_min_size(img)?;
    let selection = selection_map(img, bank.quantizer())?;
    apply_with_selection(bank, 0, &[img], &selection)
}

/// Color banks: each output channel is an inner product over the full RGB
/// patch, with one selection computed from the luma of `img`.
pub fn apply_color(bank: &FilterBank, img: &ImageRgb) -> Result<ImageRgb> {
    if !bank.is_color() || bank.arity() != 3 {
        return Err(Error::InvalidArgument(
            "color filtering needs a color bank with three output banks".into(),
        ));
    }
    let luma = img.luma();
    check_min_size(&luma)?;
    let selection = selection_map(&luma, bank.quantizer())?;
    let [r, g, b] = img.planes();
    let inputs = [r, g, b];
    let planes = (0..3)
        .map(|o| apply_with_selection(bank, o, &inputs, &selection))
        .collect::<Result<Vec<_>>>()?;
    let [r, g, b]: [ImageGray; 3] = planes.try_into().unwrap();
    ImageRgb::from_planes(r, g, b)
}

/// A gray bank on a color image: every channel is filtered independently
/// with a selection shared from the luma.
pub fn apply_per_channel(bank: &FilterBank, img: &ImageRgb) -> Result<ImageRgb> {
    if bank.arity() != 1 || bank.is_color() {
        return Err(Error::InvalidArgument(
            "per-channel filtering needs a single-stream gray bank".into(),
        ));
    }
    let luma = img.luma();
    check_min_size(&luma)?;
    let selection = selection_map(&luma, bank.quantizer())?;
    let planes = img
        .planes()
        .iter()
        .map(|p| apply_with_selection(bank, 0, &[p], &selection))
        .collect::<Result<Vec<_>>>()?;
    let [r, g, b]: [ImageGray; 3] = planes.try_into().unwrap();
    ImageRgb::from_planes(r, g, b)
}

/// Two-stream filtering: selection from `current` only, filter taps over the
/// current patch followed by the upsampled coarser result.
pub fn apply_two_stream(
    bank: &FilterBank,
    current: &ImageGray,
    coarse_upsampled: &ImageGray,
) -> Result<ImageGray> {
    if bank.arity() != 2 {
        return Err(Error::InvalidArgument(format!(
            "two-stream filtering needs an arity-2 bank, got arity {}",
            bank.arity()
        )));
    }
    current.check_same_dims(coarse_upsampled)?;
    check_min_size(current)?;
    let selection = selection_map(current, bank.quantizer())?;
    apply_with_selection(bank, 0, &[current, coarse_upsampled], &selection)
}
