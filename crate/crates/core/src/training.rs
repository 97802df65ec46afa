//! Closed-form filter training.
//!
//! Each bucket `k` is an independent regularized least-squares problem
//!
//! ```text
//! h_k = argmin  h^T Q h + || b - A h ||^2   =>   (Q + A^T A) h = A^T b
//! ```
//!
//! where the rows of `A` are the patches of all training pixels that select
//! bucket `k` and `b` holds the corresponding target samples. Only the Gram
//! matrix `[A b]^T [A b]` and the sample count are kept, so memory does not
//! grow with the amount of training data.

use std::fmt::Write as _;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bank::{identity_filter, BankStats, FilterBank};
use crate::error::{Error, Result};
use crate::quantizer::{selection_map, QuantizerSpec, SelectionMap};
use crate::raster::{Footprint, ImageGray, ImageRgb, D4};

/// Default regularization weight on the `[0, 255]` intensity scale.
pub const DEFAULT_LAMBDA: f64 = 2.0;

/// Systems whose estimated condition number exceeds this fall back to the
/// identity filter.
pub const MAX_CONDITION: f64 = 1e12;

/// Rows buffered per bucket before they are folded into the Gram matrix.
const BLOCK_ROWS: usize = 64;

/// Quadratic penalty `h^T Q h`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizerQ {
    dim: usize,
    lambda: f64,
    matrix: Vec<f64>,
}

impl RegularizerQ {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            lambda: 0.0,
            matrix: vec![0.0; dim * dim],
        }
    }

    /// Graph Laplacian of the 4-neighbour grid of `cols x rows` taps,
    /// repeated block-diagonally for each of `streams` inputs, so that
    /// `h^T Q h = lambda * sum over unordered neighbour pairs (h_i - h_j)^2`.
    pub fn gradient_grid(cols: usize, rows: usize, streams: usize, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        let n = cols * rows;
        let dim = n * streams;
        let mut matrix = vec![0.0; dim * dim];
        let mut couple = |i: usize, j: usize| {
            matrix[i * dim + i] += lambda;
            matrix[j * dim + j] += lambda;
            matrix[i * dim + j] -= lambda;
            matrix[j * dim + i] -= lambda;
        };
        for s in 0..streams {
            let base = s * n;
            for y in 0..rows {
                for x in 0..cols {
                    let i = base + y * cols + x;
                    if x + 1 < cols {
                        couple(i, i + 1);
                    }
                    if y + 1 < rows {
                        couple(i, i + cols);
                    }
                }
            }
        }
        Ok(Self {
            dim,
            lambda,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&v| v == 0.0)
    }

    pub fn quadratic_form(&self, h: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
            acc += h[i] * row.iter().zip(h).map(|(q, v)| q * v).sum::<f64>();
        }
        acc
    }
}

pub fn build_gradient_q(fp: Footprint, arity: usize, lambda: f64) -> Result<RegularizerQ> {
    RegularizerQ::gradient_grid(fp.side(), fp.side(), arity, lambda)
}

/// Per-bucket Gram matrices over `[patch; targets]` rows.
///
/// With `T` target channels each bucket holds a `(D+T) x (D+T)` matrix whose
/// blocks are `A^T A`, `A^T b_t` and `b_s^T b_t`; the patch block is shared by
/// all targets.
#[derive(Clone, Debug)]
pub struct GramAccumulator {
    buckets: usize,
    dim: usize,
    targets: usize,
    gram: Vec<f64>,
    counts: Vec<u64>,
    pending: Vec<Vec<f64>>,
}

impl GramAccumulator {
    pub fn new(buckets: usize, dim: usize, targets: usize) -> Self {
        let p = dim + targets;
        Self {
            buckets,
            dim,
            targets,
            gram: vec![0.0; buckets * p * p],
            counts: vec![0; buckets],
            pending: vec![Vec::new(); buckets],
        }
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    #[inline]
    fn width(&self) -> usize {
        self.dim + self.targets
    }

    pub fn count(&self, bucket: usize) -> u64 {
        self.counts[bucket]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Appends one regression sample `(patch, targets)` to `bucket`.
    pub fn add_sample(&mut self, bucket: usize, patch: &[f64], targets: &[f64]) {
        debug_assert_eq!(patch.len(), self.dim);
        debug_assert_eq!(targets.len(), self.targets);
        let buf = &mut self.pending[bucket];
        buf.extend_from_slice(patch);
        buf.extend_from_slice(targets);
        self.counts[bucket] += 1;
        if buf.len() >= BLOCK_ROWS * self.width() {
            self.flush_bucket(bucket);
        }
    }

    /// Row slot for a new sample, filled in by the caller.
    #[inline]
    fn push_row(&mut self, bucket: usize) -> &mut [f64] {
        let w = self.width();
        if self.pending[bucket].len() >= BLOCK_ROWS * w {
            self.flush_bucket(bucket);
        }
        self.counts[bucket] += 1;
        let buf = &mut self.pending[bucket];
        let start = buf.len();
        buf.resize(start + w, 0.0);
        &mut buf[start..]
    }

    fn flush_bucket(&mut self, bucket: usize) {
        let p = self.width();
        let buf = std::mem::take(&mut self.pending[bucket]);
        let rows = buf.len() / p;
        if rows > 0 {
            let g = &mut self.gram[bucket * p * p..(bucket + 1) * p * p];
            // G += B^T B with B the row-major `rows x p` block.
            // SAFETY: `buf` holds `rows * p` values and `g` holds `p * p`;
            // the strides describe exactly those row-major layouts.
            unsafe {
                matrixmultiply::dgemm(
                    p,
                    rows,
                    p,
                    1.0,
                    buf.as_ptr(),
                    1,
                    p as isize,
                    buf.as_ptr(),
                    p as isize,
                    1,
                    1.0,
                    g.as_mut_ptr(),
                    p as isize,
                    1,
                );
            }
        }
        let mut buf = buf;
        buf.clear();
        self.pending[bucket] = buf;
    }

    /// Folds every buffered row into the Gram matrices.
    pub fn flush(&mut self) {
        for k in 0..self.buckets {
            self.flush_bucket(k);
        }
    }

    /// Full `(D+T) x (D+T)` Gram matrix of `bucket`, row-major.
    pub fn gram(&mut self, bucket: usize) -> &[f64] {
        self.flush_bucket(bucket);
        let p = self.width();
        &self.gram[bucket * p * p..(bucket + 1) * p * p]
    }

    /// `G_total = sum G_shard`, `M_total = sum M_shard`.
    pub fn merge(&mut self, other: &GramAccumulator) -> Result<()> {
        if (self.buckets, self.dim, self.targets) != (other.buckets, other.dim, other.targets) {
            return Err(Error::DimensionMismatch(format!(
                "cannot merge accumulators of shape {:?} and {:?}",
                (self.buckets, self.dim, self.targets),
                (other.buckets, other.dim, other.targets)
            )));
        }
        self.flush();
        let flushed;
        let other = if other.pending.iter().any(|p| !p.is_empty()) {
            let mut o = other.clone();
            o.flush();
            flushed = o;
            &flushed
        } else {
            other
        };
        for (a, b) in self.gram.iter_mut().zip(&other.gram) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.gram.iter_mut().for_each(|v| *v = 0.0);
        self.counts.iter_mut().for_each(|v| *v = 0);
        self.pending.iter_mut().for_each(Vec::clear);
    }

    /// Adds one sample per pixel: the concatenated patches of all `inputs`
    /// (one per stream) against the `targets`, filed under the pixel's
    /// bucket in `selection`.
    pub fn accumulate(
        &mut self,
        inputs: &[&ImageGray],
        targets: &[&ImageGray],
        selection: &SelectionMap,
        fp: Footprint,
    ) -> Result<()> {
        let dims = selection.dims();
        if inputs.len() * fp.taps() != self.dim || targets.len() != self.targets {
            return Err(Error::DimensionMismatch(format!(
                "{} input streams x {} taps and {} targets do not match D={} T={}",
                inputs.len(),
                fp.taps(),
                targets.len(),
                self.dim,
                self.targets
            )));
        }
        for img in inputs.iter().chain(targets) {
            if img.dims() != dims {
                return Err(Error::DimensionMismatch(format!(
                    "image {}x{} vs selection {}x{}",
                    img.width(),
                    img.height(),
                    dims.0,
                    dims.1
                )));
            }
        }
        if let Some(&bad) = selection
            .indices()
            .iter()
            .find(|&&i| i as usize >= self.buckets)
        {
            return Err(Error::InvalidArgument(format!(
                "selection index {bad} out of range for {} buckets",
                self.buckets
            )));
        }
        let n = fp.side();
        let taps = fp.taps();
        let padded: Vec<ImageGray> = inputs.iter().map(|img| img.padded(fp.radius())).collect();
        let (w, h) = dims;
        let dim = self.dim;
        for y in 0..h {
            let sel_row = selection.row(y);
            for x in 0..w {
                let bucket = sel_row[x] as usize;
                let row = self.push_row(bucket);
                for (s, p) in padded.iter().enumerate() {
                    let dst = &mut row[s * taps..(s + 1) * taps];
                    for dy in 0..n {
                        let src = &p.row(y + dy)[x..x + n];
                        for (d, &v) in dst[dy * n..(dy + 1) * n].iter_mut().zip(src) {
                            *d = v as f64;
                        }
                    }
                }
                for (t, img) in targets.iter().enumerate() {
                    row[dim + t] = img.get(x, y) as f64;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BucketStatus {
    Ok,
    /// Fewer than `2 D` samples: solved, but unreliable.
    Undersampled,
    /// `M <= D`: residual variance cannot be estimated.
    Degenerate,
    /// No samples at all.
    Empty,
    /// Condition estimate above [`MAX_CONDITION`]; the identity fallback is used.
    NearSingular,
}

impl BucketStatus {
    pub fn is_flagged(&self) -> bool {
        *self != BucketStatus::Ok
    }

    fn label(&self) -> &'static str {
        match self {
            BucketStatus::Ok => "ok",
            BucketStatus::Undersampled => "undersampled",
            BucketStatus::Degenerate => "degenerate",
            BucketStatus::Empty => "empty",
            BucketStatus::NearSingular => "near-singular",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BucketSolution {
    /// One filter per target channel.
    pub filters: Vec<Vec<f64>>,
    /// Residual variance per target; NaN when `M <= D` or no solve happened.
    pub residual_variance: Vec<f64>,
    /// Coefficient standard deviations per target.
    pub stddev: Vec<Vec<f64>>,
    pub samples: u64,
    pub status: BucketStatus,
    pub condition_estimate: f64,
}

/// Solves `(Q + A^T A) h = A^T b` for every target of `bucket` by Cholesky
/// factorization. `fallback` supplies the filter (per target) used when the
/// system is too ill-conditioned to trust.
pub fn solve_bucket(
    acc: &mut GramAccumulator,
    bucket: usize,
    q: &RegularizerQ,
    fallback: &[Vec<f64>],
) -> Result<BucketSolution> {
    let d = acc.dim();
    let t = acc.targets();
    if q.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "regularizer of size {} for filters of length {d}",
            q.dim()
        )));
    }
    let m = acc.count(bucket);
    let nan_stats = |status, filters| BucketSolution {
        filters,
        residual_variance: vec![f64::NAN; t],
        stddev: vec![vec![f64::NAN; d]; t],
        samples: m,
        status,
        condition_estimate: f64::INFINITY,
    };
    if m == 0 {
        if q.is_zero() {
            return Err(Error::Singular { bucket });
        }
        return Ok(nan_stats(BucketStatus::Empty, vec![vec![0.0; d]; t]));
    }
    let p = d + t;
    let g = acc.gram(bucket);
    let system = DMatrix::from_fn(d, d, |i, j| g[i * p + j] + q.get(i, j));
    let chol = match system.cholesky() {
        Some(c) => c,
        None => {
            warn!("bucket {bucket}: system is not positive definite, using fallback filter");
            return Ok(nan_stats(BucketStatus::NearSingular, fallback.to_vec()));
        }
    };
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let condition_estimate = (hi / lo).powi(2);
    if !condition_estimate.is_finite() || condition_estimate > MAX_CONDITION {
        warn!(
            "bucket {bucket}: condition estimate {condition_estimate:.3e}, using fallback filter"
        );
        let mut sol = nan_stats(BucketStatus::NearSingular, fallback.to_vec());
        sol.condition_estimate = condition_estimate;
        return Ok(sol);
    }

    // Diagonal of (Q + A^T A)^{-1}, one unit-vector solve per coefficient.
    let mut inv_diag = vec![0.0; d];
    let mut unit = DVector::zeros(d);
    for (j, out) in inv_diag.iter_mut().enumerate() {
        unit.fill(0.0);
        unit[j] = 1.0;
        chol.solve_mut(&mut unit);
        *out = unit[j];
    }

    let ata = |i: usize, j: usize| g[i * p + j];
    let mut filters = Vec::with_capacity(t);
    let mut residual_variance = Vec::with_capacity(t);
    let mut stddev = Vec::with_capacity(t);
    for tt in 0..t {
        let atb = DVector::from_fn(d, |i, _| g[i * p + d + tt]);
        let btb = g[(d + tt) * p + d + tt];
        let h = chol.solve(&atb);
        let h_atb: f64 = h.dot(&atb);
        let mut h_ata_h = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += ata(i, j) * h[j];
            }
            h_ata_h += h[i] * row;
        }
        let var = if m as usize > d {
            ((btb - 2.0 * h_atb + h_ata_h) / (m as usize - d) as f64).max(0.0)
        } else {
            f64::NAN
        };
        residual_variance.push(var);
        stddev.push(inv_diag.iter().map(|&v| (var * v).sqrt()).collect());
        filters.push(h.iter().copied().collect());
    }
    let status = if m as usize <= d {
        BucketStatus::Degenerate
    } else if (m as usize) < 2 * d {
        BucketStatus::Undersampled
    } else {
        BucketStatus::Ok
    };
    Ok(BucketSolution {
        filters,
        residual_variance,
        stddev,
        samples: m,
        status,
        condition_estimate,
    })
}

/// `h^T Q h + ||b - A h||^2` for target `t` of `bucket`, evaluated from the
/// Gram matrix.
pub fn bucket_objective(
    acc: &mut GramAccumulator,
    bucket: usize,
    q: &RegularizerQ,
    target: usize,
    h: &[f64],
) -> f64 {
    let d = acc.dim();
    let p = d + acc.targets();
    let g = acc.gram(bucket);
    let mut quad = 0.0;
    let mut lin = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            row += g[i * p + j] * h[j];
        }
        quad += h[i] * row;
        lin += h[i] * g[i * p + d + target];
    }
    q.quadratic_form(h) + g[(d + target) * p + d + target] - 2.0 * lin + quad
}

/// The eight flips and quarter turns of an observed/target pair.
pub fn augment_d4(observed: &ImageGray, target: &ImageGray) -> Vec<(ImageGray, ImageGray)> {
    D4::ALL
        .iter()
        .map(|t| (t.apply(observed), t.apply(target)))
        .collect()
}

/// One training example: input streams, target channels and the image the
/// filter selection is computed from.
#[derive(Clone, Debug)]
pub struct TrainingPair {
    pub inputs: Vec<ImageGray>,
    pub targets: Vec<ImageGray>,
    pub guide: ImageGray,
}

impl TrainingPair {
    pub fn gray(observed: ImageGray, target: ImageGray) -> Self {
        Self {
            guide: observed.clone(),
            inputs: vec![observed],
            targets: vec![target],
        }
    }

    /// Single-channel pair whose selection comes from a separate guide,
    /// e.g. one color channel selected by luma.
    pub fn guided(observed: ImageGray, target: ImageGray, guide: ImageGray) -> Self {
        Self {
            inputs: vec![observed],
            targets: vec![target],
            guide,
        }
    }

    /// Current-level patch plus upsampled coarser result; selection from the
    /// current level only.
    pub fn two_stream(current: ImageGray, coarse: ImageGray, target: ImageGray) -> Self {
        Self {
            guide: current.clone(),
            inputs: vec![current, coarse],
            targets: vec![target],
        }
    }

    /// RGB patch in, RGB pixel out; selection from the observed luma.
    pub fn color(observed: &ImageRgb, target: &ImageRgb) -> Self {
        Self {
            guide: observed.luma(),
            inputs: observed.planes().to_vec(),
            targets: target.planes().to_vec(),
        }
    }

    fn transformed(&self, t: D4) -> TrainingPair {
        TrainingPair {
            inputs: self.inputs.iter().map(|i| t.apply(i)).collect(),
            targets: self.targets.iter().map(|i| t.apply(i)).collect(),
            guide: t.apply(&self.guide),
        }
    }

    fn validate(&self) -> Result<()> {
        let dims = self.guide.dims();
        for img in self.inputs.iter().chain(&self.targets) {
            if img.dims() != dims {
                return Err(Error::DimensionMismatch(format!(
                    "training pair mixes {}x{} and {}x{} images",
                    dims.0,
                    dims.1,
                    img.width(),
                    img.height()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub quantizer: QuantizerSpec,
    pub footprint: Footprint,
    pub lambda: f64,
    pub augment: bool,
}

impl TrainConfig {
    pub fn new(quantizer: QuantizerSpec, footprint: Footprint) -> Self {
        Self {
            quantizer,
            footprint,
            lambda: DEFAULT_LAMBDA,
            augment: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BucketReport {
    pub samples: u64,
    pub residual_variance: Vec<f64>,
    pub status: BucketStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub buckets: Vec<BucketReport>,
    pub total_samples: u64,
}

impl TrainReport {
    pub fn flagged(&self) -> impl Iterator<Item = (usize, &BucketReport)> {
        self.buckets
            .iter()
            .enumerate()
            .filter(|(_, b)| b.status.is_flagged())
    }

    pub fn to_text(&self, q: &QuantizerSpec) -> String {
        let mut s = String::new();
        let flagged = self.flagged().count();
        let _ = writeln!(
            s,
            "# buckets={} samples={} flagged={}",
            self.buckets.len(),
            self.total_samples,
            flagged
        );
        let _ = writeln!(
            s,
            "# bucket\tstrength\tcoherence\torientation\tsamples\tresidual_variance\tstatus"
        );
        for (k, b) in self.buckets.iter().enumerate() {
            let (sb, cb, ob) = q.split_index(k);
            let vars: Vec<String> = b
                .residual_variance
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect();
            let _ = writeln!(
                s,
                "{k}\t{sb}\t{cb}\t{ob}\t{}\t{}\t{}",
                b.samples,
                vars.join(","),
                b.status.label()
            );
        }
        s
    }
}

/// Accumulates every pair (and its D4 images when augmenting) and solves
/// all buckets. The result depends only on the corpus and its order.
pub fn accumulate_corpus(corpus: &[TrainingPair], config: &TrainConfig) -> Result<GramAccumulator> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::InvalidArgument("training corpus is empty".into()))?;
    let arity = first.inputs.len();
    let targets = first.targets.len();
    for pair in corpus {
        pair.validate()?;
        if pair.inputs.len() != arity || pair.targets.len() != targets {
            return Err(Error::InvalidArgument(
                "all training pairs must have the same number of streams and targets".into(),
            ));
        }
    }
    let k = config.quantizer.buckets();
    let d = arity * config.footprint.taps();
    let transforms: &[D4] = if config.augment {
        &D4::ALL
    } else {
        &[D4::IDENTITY]
    };
    let jobs: Vec<(usize, D4)> = (0..corpus.len())
        .flat_map(|p| transforms.iter().map(move |&t| (p, t)))
        .collect();

    let mut total = GramAccumulator::new(k, d, targets);
    let shards = rayon::current_num_threads().max(1);
    let mut scratch: Vec<GramAccumulator> = (0..shards.min(jobs.len()))
        .map(|_| GramAccumulator::new(k, d, targets))
        .collect();
    for chunk in jobs.chunks(shards) {
        scratch[..chunk.len()]
            .par_iter_mut()
            .zip(chunk.par_iter())
            .try_for_each(|(acc, &(p, t))| -> Result<()> {
                acc.reset();
                let pair = corpus[p].transformed(t);
                let selection = selection_map(&pair.guide, &config.quantizer)?;
                let inputs: Vec<&ImageGray> = pair.inputs.iter().collect();
                let tgts: Vec<&ImageGray> = pair.targets.iter().collect();
                acc.accumulate(&inputs, &tgts, &selection, config.footprint)?;
                acc.flush();
                Ok(())
            })?;
        for acc in &scratch[..chunk.len()] {
            total.merge(acc)?;
        }
    }
    debug!(
        "accumulated {} samples into {k} buckets",
        total.total_count()
    );
    Ok(total)
}

/// Solves every bucket of an accumulator into a bank with statistics.
pub fn solve_all(
    acc: &mut GramAccumulator,
    config: &TrainConfig,
) -> Result<(FilterBank, TrainReport)> {
    let taps = config.footprint.taps();
    let arity = acc.dim() / taps;
    let outputs = acc.targets();
    let q = build_gradient_q(config.footprint, arity, config.lambda)?;
    let fallback: Vec<Vec<f64>> = (0..outputs)
        .map(|o| {
            identity_filter(config.footprint, arity, o)
                .into_iter()
                .map(f64::from)
                .collect()
        })
        .collect();
    let k = config.quantizer.buckets();
    let d = acc.dim();
    let mut coefficients = vec![Vec::with_capacity(k * d); outputs];
    let mut stats: Vec<BankStats> = (0..outputs)
        .map(|_| BankStats {
            samples: Vec::with_capacity(k),
            residual_variance: Vec::with_capacity(k),
            coef_stddev: Vec::with_capacity(k * d),
        })
        .collect();
    let mut buckets = Vec::with_capacity(k);
    for bucket in 0..k {
        // Buckets never seen in training pass the signal through unchanged.
        let sol = if acc.count(bucket) == 0 {
            BucketSolution {
                filters: fallback.clone(),
                residual_variance: vec![f64::NAN; outputs],
                stddev: vec![vec![f64::NAN; d]; outputs],
                samples: 0,
                status: BucketStatus::Empty,
                condition_estimate: f64::INFINITY,
            }
        } else {
            solve_bucket(acc, bucket, &q, &fallback)?
        };
        for o in 0..outputs {
            coefficients[o].extend(sol.filters[o].iter().map(|&v| v as f32));
            stats[o].samples.push(sol.samples);
            stats[o]
                .residual_variance
                .push(sol.residual_variance[o] as f32);
            stats[o]
                .coef_stddev
                .extend(sol.stddev[o].iter().map(|&v| v as f32));
        }
        buckets.push(BucketReport {
            samples: sol.samples,
            residual_variance: sol.residual_variance,
            status: sol.status,
        });
    }
    let bank = FilterBank::new(config.quantizer, config.footprint, arity, coefficients)?
        .with_stats(stats)?;
    let report = TrainReport {
        total_samples: acc.total_count(),
        buckets,
    };
    Ok((bank, report))
}

/// Trains a bank from a corpus: selection per observed image, optional D4
/// augmentation, Gram accumulation and an independent solve per bucket.
pub fn train(corpus: &[TrainingPair], config: &TrainConfig) -> Result<(FilterBank, TrainReport)> {
    let mut acc = accumulate_corpus(corpus, config)?;
    solve_all(&mut acc, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_tap_regularizer() {
        let q = RegularizerQ::gradient_grid(2, 1, 1, 1.0).unwrap();
        assert_eq!(q.matrix, vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(q.quadratic_form(&[3.0, 1.0]), 4.0);
    }

    #[test]
    fn regularizer_is_a_laplacian() {
        let fp = Footprint::new(5).unwrap();
        let q = build_gradient_q(fp, 2, 0.7).unwrap();
        assert_eq!(q.dim(), 50);
        for i in 0..50 {
            let row: f64 = (0..50).map(|j| q.get(i, j)).sum();
            assert!(row.abs() < 1e-12);
            for j in 0..50 {
                assert_eq!(q.get(i, j), q.get(j, i));
            }
        }
        // Constant filters cost nothing; streams do not interact.
        assert!(q.quadratic_form(&[4.2; 50]).abs() < 1e-9);
        assert_eq!(q.get(0, 25), 0.0);
        // 5x5 grid has 2 * 5 * 4 = 40 edges; a unit impulse touches 4 of them.
        let mut h = vec![0.0; 50];
        h[12] = 1.0;
        assert!((q.quadratic_form(&h) - 4.0 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_is_zero_matrix() {
        let q = build_gradient_q(Footprint::new(3).unwrap(), 1, 0.0).unwrap();
        assert!(q.is_zero());
        assert!(build_gradient_q(Footprint::new(3).unwrap(), 1, -1.0).is_err());
    }

    #[test]
    fn exact_linear_relation_has_zero_residual() {
        let mut acc = GramAccumulator::new(1, 1, 1);
        for (z, u) in [(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)] {
            acc.add_sample(0, &[z], &[u]);
        }
        let q = RegularizerQ::zero(1);
        let sol = solve_bucket(&mut acc, 0, &q, &[vec![1.0]]).unwrap();
        assert!((sol.filters[0][0] - 2.0).abs() < 1e-12);
        assert!(sol.residual_variance[0].abs() < 1e-12);
        assert_eq!(sol.samples, 3);
    }

    #[test]
    fn empty_bucket_without_regularizer_is_singular() {
        let mut acc = GramAccumulator::new(2, 4, 1);
        let q = RegularizerQ::zero(4);
        assert!(matches!(
            solve_bucket(&mut acc, 1, &q, &[vec![0.0; 4]]),
            Err(Error::Singular { bucket: 1 })
        ));
    }

    #[test]
    fn empty_bucket_with_regularizer_is_zero_filter() {
        let mut acc = GramAccumulator::new(1, 9, 1);
        let q = build_gradient_q(Footprint::new(3).unwrap(), 1, 2.0).unwrap();
        let sol = solve_bucket(&mut acc, 0, &q, &[vec![1.0; 9]]).unwrap();
        assert_eq!(sol.filters, vec![vec![0.0; 9]]);
        assert_eq!(sol.status, BucketStatus::Empty);
        assert!(sol.residual_variance[0].is_nan());
    }

    #[test]
    fn rank_deficient_system_falls_back() {
        let mut acc = GramAccumulator::new(1, 2, 1);
        for _ in 0..10 {
            acc.add_sample(0, &[1.0, 1.0], &[3.0]);
        }
        let sol = solve_bucket(&mut acc, 0, &RegularizerQ::zero(2), &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(sol.status, BucketStatus::NearSingular);
        assert_eq!(sol.filters, vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn degenerate_divisor_flags_nan() {
        let mut acc = GramAccumulator::new(1, 2, 1);
        acc.add_sample(0, &[1.0, 0.0], &[1.0]);
        acc.add_sample(0, &[0.0, 1.0], &[2.0]);
        let sol = solve_bucket(&mut acc, 0, &RegularizerQ::zero(2), &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(sol.status, BucketStatus::Degenerate);
        assert!(sol.residual_variance[0].is_nan());
        assert!((sol.filters[0][1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_accumulator_is_zero() {
        let mut acc = GramAccumulator::new(3, 4, 1);
        assert_eq!(acc.total_count(), 0);
        assert!(acc.gram(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn merge_rejects_mismatched_shapes() {
        let mut a = GramAccumulator::new(3, 4, 1);
        assert!(a.merge(&GramAccumulator::new(3, 5, 1)).is_err());
    }

    #[test]
    fn augmentation_of_symmetric_image_is_constant() {
        let img = ImageGray::from_fn(6, 6, |x, y| {
            let dx = (x as f32 - 2.5).abs();
            let dy = (y as f32 - 2.5).abs();
            dx.max(dy) + dx.min(dy) * 0.1
        });
        let pairs = augment_d4(&img, &img);
        assert_eq!(pairs.len(), 8);
        assert!(pairs.iter().all(|(o, t)| o == &img && t == &img));
    }

    #[test]
    fn augmentation_of_generic_image_is_distinct() {
        let img = ImageGray::from_fn(5, 5, |x, y| (x * 5 + y * y) as f32);
        let pairs = augment_d4(&img, &img);
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(pairs[i].0, pairs[j].0);
            }
        }
    }

    #[test]
    fn report_lists_every_bucket() {
        let q = QuantizerSpec::new(4, 1, (0.0, 1.0), 1, (0.0, 1.0), 1.0).unwrap();
        let report = TrainReport {
            total_samples: 5,
            buckets: (0..4)
                .map(|i| BucketReport {
                    samples: i,
                    residual_variance: vec![0.5],
                    status: if i == 0 {
                        BucketStatus::Empty
                    } else {
                        BucketStatus::Ok
                    },
                })
                .collect(),
        };
        let text = report.to_text(&q);
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains("flagged=1"));
        assert!(text.contains("empty"));
    }
}
