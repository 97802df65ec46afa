//! Task-level plumbing shared by the command-line tool and the examples:
//! training corpora per task, manifests, apply/eval helpers and the
//! throughput benchmark.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bank::FilterBank;
use crate::bayer::{bayer_mosaic, bilinear_demosaic};
use crate::error::{Error, Result};
use crate::inference::{apply, apply_color, apply_per_channel};
use crate::io::{load, Raster};
use crate::metrics::{mssim, mssim_rgb, psnr, psnr_rgb};
use crate::noise::add_awgn;
use crate::quantizer::QuantizerSpec;
use crate::raster::{Footprint, ImageGray, ImageRgb};
use crate::reference::{bilateral, edge_tangent_flow, tv_flow, FlowParams};
use crate::training::{TrainConfig, TrainingPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Bilateral,
    TvFlow,
    Etf,
    Awgn,
    /// Externally degraded/clean pairs, e.g. JPEG-compressed images.
    Pairs,
    Demosaic,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Bilateral,
        Task::TvFlow,
        Task::Etf,
        Task::Awgn,
        Task::Pairs,
        Task::Demosaic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Bilateral => "bilateral",
            Task::TvFlow => "tvflow",
            Task::Etf => "etf",
            Task::Awgn => "awgn",
            Task::Pairs => "pairs",
            Task::Demosaic => "demosaic",
        }
    }

    /// Default settings per task. TV flow and ETF reuse the
    /// common `[10, 40]` strength and `[0.2, 0.8]` coherence bounds.
    pub fn default_quantizer(&self) -> QuantizerSpec {
        let (o, s, s_range, c, rho) = match self {
            Task::Bilateral => (24, 3, (10.0, 35.0), 3, 1.2),
            Task::TvFlow => (16, 4, (10.0, 40.0), 4, 1.2),
            Task::Etf => (24, 1, (10.0, 40.0), 3, 1.2),
            Task::Awgn => (16, 5, (10.0, 40.0), 3, 1.7),
            Task::Pairs => (8, 5, (10.0, 40.0), 3, 1.2),
            Task::Demosaic => (8, 3, (10.0, 40.0), 3, 0.7),
        };
        QuantizerSpec::new(o, s, s_range, c, (0.2, 0.8), rho).expect("valid defaults")
    }

    pub fn default_footprint(&self) -> usize {
        match self {
            Task::Etf | Task::Demosaic => 5,
            _ => 7,
        }
    }

    /// D4 augmentation breaks the fixed Bayer phase, so it is off for
    /// demosaicing.
    pub fn default_augment(&self) -> bool {
        !matches!(self, Task::Demosaic)
    }

    /// Manifest columns per line: target-generating tasks list one image,
    /// `pairs` lists `observed<TAB>target`.
    pub fn columns(&self) -> usize {
        if *self == Task::Pairs {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub task: Task,
    pub train: TrainConfig,
    /// AWGN standard deviation for the `awgn` task and the cascade.
    pub sigma: f64,
    pub op: FlowParams,
    pub levels: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn for_task(task: Task) -> Self {
        let fp = Footprint::new(task.default_footprint()).expect("odd default");
        let mut train = TrainConfig::new(task.default_quantizer(), fp);
        train.augment = task.default_augment();
        Self {
            task,
            train,
            sigma: 20.0,
            op: FlowParams::default(),
            levels: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.quantizer.validate()?;
        if !(self.train.lambda >= 0.0) || !self.train.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be a non-negative number, got {}",
                self.train.lambda
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        if self.levels == 0 {
            return Err(Error::InvalidArgument("levels must be at least 1".into()));
        }
        self.op.validate()
    }
}

/// One manifest line: its paths (resolved against the manifest directory)
/// and its 1-based line number.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub line: usize,
    pub paths: Vec<PathBuf>,
}

/// Parses tab-separated manifest text. Blank lines and `#` comments are
/// skipped; every remaining line must have exactly `columns` fields.
pub fn parse_manifest(
    text: &str,
    base: &Path,
    source: &Path,
    columns: usize,
) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != columns || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Manifest {
                path: source.to_path_buf(),
                line: i + 1,
                message: format!(
                    "expected {columns} tab-separated path(s), got {}",
                    fields.len()
                ),
            });
        }
        entries.push(ManifestEntry {
            line: i + 1,
            paths: fields.iter().map(|f| base.join(f)).collect(),
        });
    }
    if entries.is_empty() {
        return Err(Error::Manifest {
            path: source.to_path_buf(),
            line: 0,
            message: "manifest lists no images".into(),
        });
    }
    Ok(entries)
}

pub fn read_manifest(path: impl AsRef<Path>, columns: usize) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, base, path, columns)
}

/// Target image for the operator-approximation tasks.
pub fn operator_target(task: Task, params: &FlowParams, img: &ImageGray) -> Result<ImageGray> {
    match task {
        Task::Bilateral => bilateral(img, params.sigma_r, params.sigma_s),
        Task::TvFlow => tv_flow(img, params),
        Task::Etf => edge_tangent_flow(img, params),
        other => Err(Error::InvalidArgument(format!(
            "{other} is not an operator task"
        ))),
    }
}

/// Bilinear demosaic of the RGGB mosaic of `clean`, paired with `clean`.
pub fn demosaic_pair(clean: &ImageRgb) -> Result<TrainingPair> {
    let observed = bilinear_demosaic(&bayer_mosaic(clean)?)?;
    Ok(TrainingPair::color(&observed, clean))
}

/// Degraded/clean pairs. Gray images give one pair; color images give one
/// pair per channel, all selected by the degraded image's luma.
pub fn external_pairs(observed: Raster, target: Raster) -> Result<Vec<TrainingPair>> {
    if observed.dims() != target.dims() {
        let (a, b) = (observed.dims(), target.dims());
        return Err(Error::DimensionMismatch(format!(
            "observed {}x{} vs target {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(match (observed, target) {
        (Raster::Gray(o), Raster::Gray(t)) => vec![TrainingPair::gray(o, t)],
        (o, t) => {
            let (o, t) = (o.into_rgb(), t.into_rgb());
            let guide = o.luma();
            o.into_planes()
                .into_iter()
                .zip(t.into_planes())
                .map(|(op, tp)| TrainingPair::guided(op, tp, guide.clone()))
                .collect()
        }
    })
}

/// Training pairs for every manifest entry. Synthetic observations are
/// seeded by `seed + entry index`, so the corpus is reproducible.
pub fn build_corpus(
    config: &PipelineConfig,
    entries: &[ManifestEntry],
) -> Result<Vec<TrainingPair>> {
    let mut corpus = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let name = entry.paths[0].display().to_string();
        let context = |e: Error| match e {
            e @ (Error::Io { .. } | Error::Image { .. }) => e,
            other => Error::InvalidArgument(format!("{name}: {other}")),
        };
        match config.task {
            Task::Bilateral | Task::TvFlow | Task::Etf => {
                let img = load(&entry.paths[0])?.into_gray();
                let target = operator_target(config.task, &config.op, &img).map_err(context)?;
                corpus.push(TrainingPair::gray(img, target));
            }
            Task::Awgn => {
                let clean = load(&entry.paths[0])?.into_gray();
                let noisy = add_awgn(&clean, config.sigma, config.seed.wrapping_add(i as u64))
                    .map_err(context)?;
                corpus.push(TrainingPair::gray(noisy, clean));
            }
            Task::Pairs => {
                let observed = load(&entry.paths[0])?;
                let target = load(&entry.paths[1])?;
                let pairs = external_pairs(observed, target).map_err(|e| {
                    Error::InvalidArgument(format!("{name} / {}: {e}", entry.paths[1].display()))
                })?;
                corpus.extend(pairs);
            }
            Task::Demosaic => {
                let clean = load(&entry.paths[0])?.into_rgb();
                corpus.push(demosaic_pair(&clean).map_err(context)?);
            }
        }
    }
    Ok(corpus)
}

/// Applies a single-level bank to a loaded raster, optionally blended with
/// the identity first. Gray banks on color images filter each channel with
/// the luma selection.
pub fn apply_raster(bank: &FilterBank, input: &Raster, alpha: Option<f32>) -> Result<Raster> {
    let blended;
    let bank = match alpha {
        Some(a) => {
            blended = bank.blend_with_identity(a)?;
            &blended
        }
        None => bank,
    };
    match (input, bank.is_color(), bank.arity()) {
        (Raster::Gray(img), false, 1) => Ok(Raster::Gray(apply(bank, img)?)),
        (Raster::Rgb(img), false, 1) => Ok(Raster::Rgb(apply_per_channel(bank, img)?)),
        (Raster::Rgb(img), true, _) => Ok(Raster::Rgb(apply_color(bank, img)?)),
        (Raster::Gray(_), true, _) => Err(Error::InvalidArgument(
            "a color bank needs an RGB input image".into(),
        )),
        (_, _, arity) => Err(Error::InvalidArgument(format!(
            "an arity-{arity} bank belongs to a multiscale cascade; use the cascade container"
        ))),
    }
}

/// Bilinear demosaic followed by color filtering.
pub fn demosaic(bank: &FilterBank, mosaic: &ImageGray) -> Result<ImageRgb> {
    if !bank.is_color() {
        return Err(Error::InvalidArgument(
            "demosaicing needs a color bank".into(),
        ));
    }
    apply_color(bank, &bilinear_demosaic(mosaic)?)
}

/// `(PSNR, MSSIM)` of `test` against `reference`; a gray/color mix is
/// compared in color.
pub fn evaluate(reference: &Raster, test: &Raster) -> Result<(f64, f64)> {
    match (reference, test) {
        (Raster::Gray(r), Raster::Gray(t)) => Ok((psnr(t, r)?, mssim(t, r)?)),
        (r, t) => {
            let (r, t) = (r.clone().into_rgb(), t.clone().into_rgb());
            Ok((psnr_rgb(&t, &r)?, mssim_rgb(&t, &r)?))
        }
    }
}

pub fn format_eval(psnr: f64, mssim: f64) -> String {
    let p = if psnr.is_infinite() {
        "inf".to_string()
    } else {
        format!("{psnr:.4}")
    };
    format!("PSNR_dB={p} MSSIM={mssim:.4}")
}

/// One benchmark row: a filter side and its timings per image size.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub side: usize,
    /// `(megapixels, median seconds, megapixels per second)` per size.
    pub timings: Vec<(f64, f64, f64)>,
    pub linearity: Option<f64>,
}

pub const BENCH_RUNS: usize = 5;

/// Square noise image of about `megapixels` million pixels.
pub fn bench_image(megapixels: f64, seed: u64) -> ImageGray {
    let side = ((megapixels * 1e6).sqrt().round() as usize).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageGray::from_fn(side, side, |_, _| rng.random_range(0.0..255.0))
}

/// A bank of random filters with the AWGN quantizer, for timing only.
pub fn bench_bank(side: usize, seed: u64) -> Result<FilterBank> {
    let q = Task::Awgn.default_quantizer();
    let fp = Footprint::new(side)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = fp.taps();
    let coeffs = (0..q.buckets() * n)
        .map(|_| rng.random_range(-1.0..1.0) / n as f32)
        .collect();
    FilterBank::new(q, fp, 1, vec![coeffs])
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of [`BENCH_RUNS`] warm runs of `apply` (selection included) per
/// filter side and image size. Each round visits every configuration once,
/// so slow phases of a shared machine hit them alike.
///
/// The linearity ratio is `time(largest) / time(smallest)` rescaled to a
/// fourfold pixel increase, i.e. exactly `time(4 MP) / time(1 MP)` for
/// `--mp-list 1,4`.
pub fn bench(sides: &[usize], megapixels: &[f64], seed: u64) -> Result<Vec<BenchRow>> {
    if let Some(&mp) = megapixels.iter().find(|&&m| !(m > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "image size must be positive, got {mp} MP"
        )));
    }
    let banks = sides
        .iter()
        .map(|&s| bench_bank(s, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut times = vec![vec![Vec::with_capacity(BENCH_RUNS); megapixels.len()]; sides.len()];
    let images: Vec<ImageGray> = megapixels.iter().map(|&mp| bench_image(mp, seed)).collect();
    let sizes: Vec<f64> = images.iter().map(|img| img.len() as f64 / 1e6).collect();
    for img in &images {
        for bank in &banks {
            std::hint::black_box(apply(bank, img)?);
        }
    }
    // The sizes of one filter side run back to back, in alternating order,
    // so drift on a shared machine cancels out of the linearity ratio.
    for run in 0..BENCH_RUNS {
        for (b, bank) in banks.iter().enumerate() {
            let mut order: Vec<usize> = (0..images.len()).collect();
            if run % 2 == 1 {
                order.reverse();
            }
            for m in order {
                let start = Instant::now();
                let out = apply(bank, &images[m])?;
                times[b][m].push(start.elapsed().as_secs_f64());
                std::hint::black_box(out);
            }
        }
    }
    Ok(sides
        .iter()
        .zip(times)
        .map(|(&side, per_size)| {
            let timings: Vec<(f64, f64, f64)> = sizes
                .iter()
                .zip(per_size)
                .map(|(&mp, runs)| {
                    let secs = median(runs);
                    (mp, secs, mp / secs)
                })
                .collect();
            BenchRow {
                side,
                linearity: linearity_ratio(&timings),
                timings,
            }
        })
        .collect())
}

fn linearity_ratio(timings: &[(f64, f64, f64)]) -> Option<f64> {
    let lo = timings.iter().min_by(|a, b| a.0.total_cmp(&b.0))?;
    let hi = timings.iter().max_by(|a, b| a.0.total_cmp(&b.0))?;
    if hi.0 <= lo.0 {
        return None;
    }
    Some(hi.1 / lo.1 * 4.0 / (hi.0 / lo.0))
}

pub fn format_bench(rows: &[BenchRow]) -> String {
    let mut out = String::from("filter");
    if let Some(first) = rows.first() {
        for (mp, _, _) in &first.timings {
            out.push_str(&format!("\t{mp:.2}MP_MP/s"));
        }
    }
    out.push_str("\tlinearity\n");
    for row in rows {
        out.push_str(&format!("{0}x{0}", row.side));
        for (_, _, rate) in &row.timings {
            out.push_str(&format!("\t{rate:.2}"));
        }
        match row.linearity {
            Some(r) => out.push_str(&format!("\t{r:.3}\n")),
            None => out.push_str("\t-\n"),
        }
    }
    out
}
