//! Coarse-to-fine denoising cascade.
//!
//! The coarsest pyramid level is denoised by a single-stream bank. Every
//! finer level uses a two-stream bank over the noisy image at that level and
//! the upsampled result of the level below. Training runs bottom-up, each
//! level seeing the output of the already trained coarser banks on the
//! training data itself.

use log::info;

use crate::bank::FilterBank;
use crate::error::{Error, Result};
use crate::inference::{apply, apply_two_stream};
use crate::raster::ImageGray;
use crate::resample::{downsample_2x, upsample_2x};
use crate::training::{train, TrainConfig, TrainReport, TrainingPair};

pub const MAGIC: [u8; 4] = *b"BLDM";

/// Banks ordered coarsest first.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiscaleBank {
    levels: Vec<FilterBank>,
}

impl MultiscaleBank {
    pub fn new(levels: Vec<FilterBank>) -> Result<Self> {
        if levels.is_empty() || levels.len() > u8::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "a cascade needs 1..=255 levels, got {}",
                levels.len()
            )));
        }
        for (i, bank) in levels.iter().enumerate() {
            let want = if i == 0 { 1 } else { 2 };
            if bank.arity() != want || bank.is_color() {
                return Err(Error::Inconsistent(format!(
                    "level {i} (coarsest first) must be a gray arity-{want} bank, got arity {}",
                    bank.arity()
                )));
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[FilterBank] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.push(self.levels.len() as u8);
        for bank in &self.levels {
            bank.write_to(&mut out);
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 5 {
            return Err(Error::Truncated {
                what: "cascade header",
                expected: 5,
                actual: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic {
                expected: MAGIC,
                found: magic,
            });
        }
        let count = bytes[4] as usize;
        let mut cursor = &bytes[5..];
        let levels = (0..count)
            .map(|_| FilterBank::read_from(&mut cursor))
            .collect::<Result<Vec<_>>>()?;
        if !cursor.is_empty() {
            return Err(Error::Inconsistent(format!(
                "{} trailing bytes after {count} cascade levels",
                cursor.len()
            )));
        }
        Self::new(levels)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.serialize()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::deserialize(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Runs the cascade bottom-up on a noisy image.
    pub fn apply(&self, noisy: &ImageGray) -> Result<ImageGray> {
        let pyramid = pyramid(noisy, self.levels.len())?;
        let mut result: Option<ImageGray> = None;
        for (bank, level) in self.levels.iter().zip(pyramid.iter().rev()) {
            result = Some(match result {
                None => apply(bank, level)?,
                Some(coarse) => {
                    let up = upsample_2x(&coarse, level.width(), level.height());
                    apply_two_stream(bank, level, &up)?
                }
            });
        }
        Ok(result.expect("at least one level"))
    }
}

/// Largest usable level count: every level must stay at least 2x2.
pub fn max_levels(width: usize, height: usize) -> usize {
    let m = width.min(height).max(1);
    m.ilog2() as usize
}

/// `levels` images, finest first, each half the size of the previous.
pub fn pyramid(img: &ImageGray, levels: usize) -> Result<Vec<ImageGray>> {
    let max = max_levels(img.width(), img.height());
    if levels == 0 || levels > max {
        return Err(Error::InvalidArgument(format!(
            "{levels} pyramid levels requested for a {}x{} image (at most {max})",
            img.width(),
            img.height()
        )));
    }
    let mut out = vec![img.clone()];
    while out.len() < levels {
        let next = downsample_2x(out.last().unwrap());
        out.push(next);
    }
    Ok(out)
}

/// Trains a cascade from `(noisy, clean)` pairs. `configs` holds one
/// training configuration per level, coarsest first.
pub fn train_multiscale(
    pairs: &[(ImageGray, ImageGray)],
    configs: &[TrainConfig],
) -> Result<(MultiscaleBank, Vec<TrainReport>)> {
    let levels = configs.len();
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("training corpus is empty".into()));
    }
    let mut noisy = Vec::with_capacity(pairs.len());
    let mut clean = Vec::with_capacity(pairs.len());
    for (n, c) in pairs {
        n.check_same_dims(c)?;
        noisy.push(pyramid(n, levels)?);
        clean.push(pyramid(c, levels)?);
    }
    let mut banks = Vec::with_capacity(levels);
    let mut reports = Vec::with_capacity(levels);
    let mut filtered: Vec<ImageGray> = Vec::new();
    for (step, config) in configs.iter().enumerate() {
        let level = levels - 1 - step;
        let corpus: Vec<TrainingPair> = (0..pairs.len())
            .map(|i| {
                let current = noisy[i][level].clone();
                let target = clean[i][level].clone();
                if step == 0 {
                    TrainingPair::gray(current, target)
                } else {
                    let up = upsample_2x(&filtered[i], current.width(), current.height());
                    TrainingPair::two_stream(current, up, target)
                }
            })
            .collect();
        let (bank, report) = train(&corpus, config)?;
        info!(
            "level {level}: {} samples, {} flagged buckets",
            report.total_samples,
            report.flagged().count()
        );
        filtered = corpus
            .iter()
            .map(|p| match p.inputs.as_slice() {
                [current] => apply(&bank, current),
                [current, up] => apply_two_stream(&bank, current, up),
                _ => unreachable!("one or two streams"),
            })
            .collect::<Result<_>>()?;
        banks.push(bank);
        reports.push(report);
    }
    Ok((MultiscaleBank::new(banks)?, reports))
}
