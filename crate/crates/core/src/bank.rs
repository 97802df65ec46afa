//! Trained filter banks: storage, identity blending, the binary file format
//! and diagnostic montages.
//!
//! A bank holds `K` filters of length `D = arity * N` for each output
//! channel (one output for gray and two-stream banks, three for color).
//! Multi-stream filters are laid out stream-major: all `N` taps of the first
//! input stream, then the second, and so on.

use crate::error::{Error, Result};
use crate::io::Raster;
use crate::quantizer::QuantizerSpec;
use crate::raster::{Footprint, ImageGray, ImageRgb};

pub const MAGIC: [u8; 4] = *b"BLDE";
pub const VERSION: u32 = 1;

/// Per-filter training statistics for one output channel.
#[derive(Clone, Debug, PartialEq)]
pub struct BankStats {
    /// Number of regression samples `M` per bucket.
    pub samples: Vec<u64>,
    /// Residual variance per bucket; NaN when it could not be estimated.
    pub residual_variance: Vec<f32>,
    /// `K * D` coefficient standard deviations.
    pub coef_stddev: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputBank {
    coefficients: Vec<f32>,
    stats: Option<BankStats>,
}

impl OutputBank {
    pub fn coefficients(&self) -> &[f32] {
        &self.coefficients
    }

    pub fn stats(&self) -> Option<&BankStats> {
        self.stats.as_ref()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    quantizer: QuantizerSpec,
    footprint: Footprint,
    arity: usize,
    outputs: Vec<OutputBank>,
}

impl FilterBank {
    /// Builds a bank without statistics. `filters[o]` holds the `K * D`
    /// coefficients of output channel `o`.
    pub fn new(
        quantizer: QuantizerSpec,
        footprint: Footprint,
        arity: usize,
        filters: Vec<Vec<f32>>,
    ) -> Result<Self> {
        let outputs = filters
            .into_iter()
            .map(|coefficients| OutputBank {
                coefficients,
                stats: None,
            })
            .collect();
        let bank = Self {
            quantizer,
            footprint,
            arity,
            outputs,
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn with_stats(mut self, stats: Vec<BankStats>) -> Result<Self> {
        if stats.len() != self.outputs.len() {
            return Err(Error::Inconsistent(format!(
                "{} stat blocks for {} output banks",
                stats.len(),
                self.outputs.len()
            )));
        }
        for (out, s) in self.outputs.iter_mut().zip(stats) {
            out.stats = Some(s);
        }
        self.validate()?;
        Ok(self)
    }

    /// Every filter is the center delta of `stream` (and of each output's own
    /// channel for color banks).
    pub fn identity(quantizer: QuantizerSpec, footprint: Footprint, arity: usize) -> Result<Self> {
        let outputs = if arity == 3 { 3 } else { 1 };
        let k = quantizer.buckets();
        let filters = (0..outputs)
            .map(|o| {
                let h = identity_filter(footprint, arity, o);
                h.iter().copied().cycle().take(k * h.len()).collect()
            })
            .collect();
        Self::new(quantizer, footprint, arity, filters)
    }

    fn validate(&self) -> Result<()> {
        self.quantizer
            .validate()
            .map_err(|e| Error::Inconsistent(e.to_string()))?;
        match (self.arity, self.outputs.len()) {
            (1, 1) | (2, 1) | (3, 3) => {}
            (a, o) => {
                return Err(Error::Inconsistent(format!(
                    "unsupported arity {a} with {o} output banks"
                )))
            }
        }
        let (k, d) = (self.buckets(), self.dim());
        for (o, out) in self.outputs.iter().enumerate() {
            if out.coefficients.len() != k * d {
                return Err(Error::Inconsistent(format!(
                    "output bank {o} has {} coefficients, expected K*D = {k}*{d}",
                    out.coefficients.len()
                )));
            }
            if let Some(s) = &out.stats {
                if s.samples.len() != k
                    || s.residual_variance.len() != k
                    || s.coef_stddev.len() != k * d
                {
                    return Err(Error::Inconsistent(format!(
                        "statistics of output bank {o} do not match K={k}, D={d}"
                    )));
                }
                if s.residual_variance.iter().any(|&v| v < 0.0) {
                    return Err(Error::Inconsistent("negative residual variance".into()));
                }
            }
        }
        Ok(())
    }

    pub fn quantizer(&self) -> &QuantizerSpec {
        &self.quantizer
    }

    pub fn footprint(&self) -> Footprint {
        self.footprint
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_color(&self) -> bool {
        self.outputs.len() == 3
    }

    /// Filter length `D`.
    pub fn dim(&self) -> usize {
        self.arity * self.footprint.taps()
    }

    pub fn buckets(&self) -> usize {
        self.quantizer.buckets()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn output(&self, o: usize) -> &OutputBank {
        &self.outputs[o]
    }

    pub fn is_trained(&self) -> bool {
        self.outputs.iter().all(|o| o.stats.is_some())
    }

    #[inline]
    pub fn filter(&self, output: usize, k: usize) -> &[f32] {
        let d = self.dim();
        &self.outputs[output].coefficients[k * d..(k + 1) * d]
    }

    pub fn filter_mut(&mut self, output: usize, k: usize) -> &mut [f32] {
        let d = self.dim();
        &mut self.outputs[output].coefficients[k * d..(k + 1) * d]
    }

    /// `(1 - alpha) * delta + alpha * h` for every filter, where `delta` is
    /// the bank's identity filter; statistics are dropped.
    pub fn blend_with_identity(&self, alpha: f32) -> Result<FilterBank> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "blend alpha must lie in [0, 1], got {alpha}"
            )));
        }
        let d = self.dim();
        let outputs = self
            .outputs
            .iter()
            .enumerate()
            .map(|(o, out)| {
                let delta = identity_filter(self.footprint, self.arity, o);
                OutputBank {
                    coefficients: out
                        .coefficients
                        .iter()
                        .enumerate()
                        .map(|(i, &h)| (1.0 - alpha) * delta[i % d] + alpha * h)
                        .collect(),
                    stats: None,
                }
            })
            .collect();
        Ok(FilterBank {
            outputs,
            ..self.clone()
        })
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out);
        out
    }

    /// Appends the binary record (little-endian throughout).
    pub fn write_to(&self, out: &mut Vec<u8>) {
        let q = &self.quantizer;
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.arity as u8);
        out.push(self.outputs.len() as u8);
        for v in [
            self.footprint.side(),
            q.orientations,
            q.strengths,
            q.coherences,
        ] {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        for v in [
            q.strength_range.0,
            q.strength_range.1,
            q.coherence_range.0,
            q.coherence_range.1,
            q.rho,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let (k, d) = (self.buckets(), self.dim());
        for bank in &self.outputs {
            put_f32s(out, &bank.coefficients);
            match &bank.stats {
                Some(s) => {
                    put_f32s(out, &s.residual_variance);
                    for &m in &s.samples {
                        out.extend_from_slice(&m.to_le_bytes());
                    }
                    put_f32s(out, &s.coef_stddev);
                }
                None => {
                    // Untrained: NaN variances, zero counts, NaN deviations.
                    put_f32s(out, &vec![f32::NAN; k]);
                    out.extend(std::iter::repeat_n(0u8, 8 * k));
                    put_f32s(out, &vec![f32::NAN; k * d]);
                }
            }
        }
    }

    pub fn deserialize(bytes: &[u8]) -> Result<FilterBank> {
        let mut cursor = bytes;
        let bank = Self::read_from(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(Error::Inconsistent(format!(
                "{} trailing bytes after filter bank",
                cursor.len()
            )));
        }
        Ok(bank)
    }

    /// Reads one record and advances `input` past it.
    pub fn read_from(input: &mut &[u8]) -> Result<FilterBank> {
        let mut r = ByteReader { buf: input };
        let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic {
                expected: MAGIC,
                found: magic,
            });
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::Version {
                expected: VERSION,
                found: version,
            });
        }
        let arity = r.take(1, "arity")?[0] as usize;
        let outputs = r.take(1, "output bank count")?[0] as usize;
        let side = r.u16("footprint side")? as usize;
        let orientations = r.u16("orientation count")? as usize;
        let strengths = r.u16("strength count")? as usize;
        let coherences = r.u16("coherence count")? as usize;
        let s_lo = r.f32("strength range")?;
        let s_hi = r.f32("strength range")?;
        let c_lo = r.f32("coherence range")?;
        let c_hi = r.f32("coherence range")?;
        let rho = r.f32("rho")?;
        let footprint = Footprint::new(side).map_err(|e| Error::Inconsistent(e.to_string()))?;
        let quantizer = QuantizerSpec {
            orientations,
            strengths,
            strength_range: (s_lo, s_hi),
            coherences,
            coherence_range: (c_lo, c_hi),
            rho,
        };
        quantizer
            .validate()
            .map_err(|e| Error::Inconsistent(e.to_string()))?;
        if !matches!((arity, outputs), (1, 1) | (2, 1) | (3, 3)) {
            return Err(Error::Inconsistent(format!(
                "unsupported arity {arity} with {outputs} output banks"
            )));
        }
        let k = quantizer.buckets();
        let d = arity * footprint.taps();
        let mut banks = Vec::with_capacity(outputs);
        for _ in 0..outputs {
            let coefficients = r.f32s(k * d, "coefficients")?;
            let residual_variance = r.f32s(k, "residual variances")?;
            let samples = r.u64s(k, "sample counts")?;
            let coef_stddev = r.f32s(k * d, "coefficient deviations")?;
            let untrained = samples.iter().all(|&m| m == 0)
                && residual_variance.iter().all(|v| v.is_nan())
                && coef_stddev.iter().all(|v| v.is_nan());
            let stats = (!untrained).then_some(BankStats {
                samples,
                residual_variance,
                coef_stddev,
            });
            banks.push(OutputBank {
                coefficients,
                stats,
            });
        }
        *input = r.buf;
        let bank = FilterBank {
            quantizer,
            footprint,
            arity,
            outputs: banks,
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.serialize()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<FilterBank> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::deserialize(&bytes)
    }

    /// Grid of `n x n` tiles, one column per orientation and one row per
    /// `(strength, coherence)` pair, with 1-pixel black separators.
    ///
    /// Coefficient tiles are scaled independently with zero at mid-gray.
    /// Deviation tiles share one scale over the whole output bank so that
    /// unreliable filters stand out; NaN deviations render white.
    /// Multi-stream gray filters are summed over streams. Color banks stack
    /// the three output banks vertically and show the R, G, B input taps in
    /// the respective channels.
    pub fn render_montage(&self, mode: MontageMode) -> Result<Raster> {
        if mode == MontageMode::Stddev && !self.is_trained() {
            return Err(Error::InvalidArgument(
                "standard deviation montage needs a trained bank".into(),
            ));
        }
        let q = &self.quantizer;
        let n = self.footprint.side();
        let rows = q.strengths * q.coherences;
        let width = (n + 1) * q.orientations + 1;
        let block_h = (n + 1) * rows;
        let height = block_h * self.outputs.len() + 1;
        let channels = if self.is_color() { 3 } else { 1 };
        let mut planes = vec![ImageGray::new(width, height); channels];
        let taps = self.footprint.taps();

        for (o, out) in self.outputs.iter().enumerate() {
            // Per-channel tap values per filter: [channel][tap].
            let tile_values = |k: usize| -> Vec<Vec<f64>> {
                let src = match mode {
                    MontageMode::Coefficients => &out.coefficients,
                    MontageMode::Stddev => &out.stats.as_ref().unwrap().coef_stddev,
                };
                let h = &src[k * self.dim()..(k + 1) * self.dim()];
                if channels == 3 {
                    (0..3)
                        .map(|c| {
                            h[c * taps..(c + 1) * taps]
                                .iter()
                                .map(|&v| v as f64)
                                .collect()
                        })
                        .collect()
                } else {
                    let combined = (0..taps)
                        .map(|j| {
                            let vals = (0..self.arity).map(|s| h[s * taps + j] as f64);
                            match mode {
                                MontageMode::Coefficients => vals.sum(),
                                MontageMode::Stddev => vals.map(|v| v * v).sum::<f64>().sqrt(),
                            }
                        })
                        .collect();
                    vec![combined]
                }
            };
            let global_max = match mode {
                MontageMode::Stddev => (0..self.buckets())
                    .flat_map(|k| tile_values(k).into_iter().flatten())
                    .filter(|v| v.is_finite())
                    .fold(0.0f64, f64::max),
                MontageMode::Coefficients => 0.0,
            };
            for k in 0..self.buckets() {
                let (s, c, orient) = q.split_index(k);
                let row = s * q.coherences + c;
                let x0 = (n + 1) * orient + 1;
                let y0 = o * block_h + (n + 1) * row + 1;
                let vals = tile_values(k);
                let tile_max = vals
                    .iter()
                    .flatten()
                    .filter(|v| v.is_finite())
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                for (ch, plane) in vals.iter().zip(planes.iter_mut()) {
                    for (j, &v) in ch.iter().enumerate() {
                        let px = match mode {
                            MontageMode::Coefficients => {
                                if tile_max > 0.0 {
                                    127.5 + 127.5 * v / tile_max
                                } else {
                                    127.5
                                }
                            }
                            MontageMode::Stddev => {
                                if !v.is_finite() {
                                    255.0
                                } else if global_max > 0.0 {
                                    255.0 * v / global_max
                                } else {
                                    0.0
                                }
                            }
                        };
                        plane.set(x0 + j % n, y0 + j / n, px as f32);
                    }
                }
            }
        }
        Ok(if channels == 3 {
            let [r, g, b]: [ImageGray; 3] = planes.try_into().unwrap();
            Raster::Rgb(ImageRgb::from_planes(r, g, b)?)
        } else {
            Raster::Gray(planes.pop().unwrap())
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MontageMode {
    Coefficients,
    Stddev,
}

/// Center delta on the stream that carries the signal to pass through:
/// the only stream for gray banks, the coarse stream for two-stream banks,
/// and the output's own channel for color banks.
pub fn identity_filter(footprint: Footprint, arity: usize, output: usize) -> Vec<f32> {
    let n = footprint.taps();
    let stream = match arity {
        1 => 0,
        2 => 1,
        _ => output.min(arity - 1),
    };
    let mut h = vec![0.0; arity * n];
    h[stream * n + footprint.center()] = 1.0;
    h
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Truncated {
                what,
                expected: n,
                actual: self.buf.len(),
            });
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &'static str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &'static str) -> Result<Vec<f32>> {
        Ok(self
            .take(4 * n, what)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u64s(&mut self, n: usize, what: &'static str) -> Result<Vec<u64>> {
        Ok(self
            .take(8 * n, what)?
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(o: usize, s: usize, c: usize) -> QuantizerSpec {
        QuantizerSpec::new(o, s, (10.0, 40.0), c, (0.2, 0.8), 1.2).unwrap()
    }

    fn ramp_bank(arity: usize) -> FilterBank {
        let q = spec(4, 2, 3);
        let fp = Footprint::new(3).unwrap();
        let outputs = if arity == 3 { 3 } else { 1 };
        let d = arity * 9;
        let filters = (0..outputs)
            .map(|o| {
                (0..q.buckets() * d)
                    .map(|i| (i as f32 * 0.37 + o as f32).sin())
                    .collect()
            })
            .collect();
        FilterBank::new(q, fp, arity, filters).unwrap()
    }

    fn with_fake_stats(bank: FilterBank) -> FilterBank {
        let (k, d) = (bank.buckets(), bank.dim());
        let stats = (0..bank.output_count())
            .map(|o| BankStats {
                samples: (0..k as u64).map(|i| i * 1000 + o as u64).collect(),
                residual_variance: (0..k)
                    .map(|i| if i == 3 { f32::NAN } else { i as f32 * 0.5 })
                    .collect(),
                coef_stddev: (0..k * d).map(|i| (i % 7) as f32 * 0.01).collect(),
            })
            .collect();
        bank.with_stats(stats).unwrap()
    }

    fn same_bits(a: &FilterBank, b: &FilterBank) -> bool {
        a.serialize() == b.serialize()
            && a.quantizer == b.quantizer
            && a.arity == b.arity
            && a.outputs.iter().zip(&b.outputs).all(|(x, y)| {
                x.coefficients
                    .iter()
                    .map(|v| v.to_bits())
                    .eq(y.coefficients.iter().map(|v| v.to_bits()))
                    && x.stats.is_some() == y.stats.is_some()
            })
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        for arity in [1, 2, 3] {
            let bank = ramp_bank(arity);
            let back = FilterBank::deserialize(&bank.serialize()).unwrap();
            assert_eq!(back, bank);
            let trained = with_fake_stats(bank);
            let back = FilterBank::deserialize(&trained.serialize()).unwrap();
            assert!(same_bits(&back, &trained));
            let s = back.output(0).stats().unwrap();
            assert!(s.residual_variance[3].is_nan());
            assert_eq!(s.samples, trained.output(0).stats().unwrap().samples);
        }
    }

    #[test]
    fn header_layout() {
        let bytes = ramp_bank(1).serialize();
        assert_eq!(&bytes[..4], b"BLDE");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(bytes[8], 1);
        assert_eq!(bytes[9], 1);
        assert_eq!(u16::from_le_bytes([bytes[10], bytes[11]]), 3);
        assert_eq!(u16::from_le_bytes([bytes[12], bytes[13]]), 4);
        let header = 4 + 4 + 2 + 8 + 20;
        let (k, d) = (24, 9);
        assert_eq!(bytes.len(), header + 4 * k * d + 4 * k + 8 * k + 4 * k * d);
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = ramp_bank(1).serialize();
        bytes[0] = b'X';
        assert!(matches!(
            FilterBank::deserialize(&bytes),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = ramp_bank(1).serialize();
        bytes[4] = 2;
        assert!(matches!(
            FilterBank::deserialize(&bytes),
            Err(Error::Version {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn truncated_coefficients_report_lengths() {
        let bytes = ramp_bank(1).serialize();
        let header = 38;
        let cut = &bytes[..header + 100];
        match FilterBank::deserialize(cut) {
            Err(Error::Truncated {
                what,
                expected,
                actual,
            }) => {
                assert_eq!(what, "coefficients");
                assert_eq!(expected, 4 * 24 * 9);
                assert_eq!(actual, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_arity_rejected() {
        let mut bytes = ramp_bank(1).serialize();
        bytes[9] = 3;
        assert!(matches!(
            FilterBank::deserialize(&bytes),
            Err(Error::Inconsistent(_))
        ));
        let mut bytes = ramp_bank(1).serialize();
        bytes.push(0);
        assert!(matches!(
            FilterBank::deserialize(&bytes),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn blend_endpoints() {
        let bank = with_fake_stats(ramp_bank(1));
        let zero = bank.blend_with_identity(0.0).unwrap();
        let delta = identity_filter(bank.footprint(), 1, 0);
        for k in 0..bank.buckets() {
            assert_eq!(zero.filter(0, k), delta.as_slice());
        }
        assert!(zero.output(0).stats().is_none());
        let one = bank.blend_with_identity(1.0).unwrap();
        assert_eq!(one.output(0).coefficients(), bank.output(0).coefficients());
        let half = bank.blend_with_identity(0.5).unwrap();
        for k in 0..bank.buckets() {
            for (j, (&b, &h)) in half.filter(0, k).iter().zip(bank.filter(0, k)).enumerate() {
                let expect = if j == 4 { 0.5 + 0.5 * h } else { 0.5 * h };
                assert_eq!(b, expect);
            }
        }
    }

    #[test]
    fn blend_composes_multiplicatively() {
        let bank = ramp_bank(1);
        let twice = bank
            .blend_with_identity(0.6)
            .unwrap()
            .blend_with_identity(0.3)
            .unwrap();
        let once = bank.blend_with_identity(0.18).unwrap();
        for (a, b) in twice
            .output(0)
            .coefficients()
            .iter()
            .zip(once.output(0).coefficients())
        {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn blend_rejects_bad_input() {
        assert!(ramp_bank(1).blend_with_identity(1.5).is_err());
        assert!(ramp_bank(1).blend_with_identity(-0.1).is_err());
    }

    #[test]
    fn color_blend_at_zero_is_per_channel_identity() {
        let bank = ramp_bank(3).blend_with_identity(0.0).unwrap();
        for o in 0..3 {
            let delta = identity_filter(bank.footprint(), 3, o);
            for k in 0..bank.buckets() {
                assert_eq!(bank.filter(o, k), delta.as_slice());
            }
        }
    }

    #[test]
    fn montage_of_single_delta() {
        let q = QuantizerSpec::single(1.0);
        let fp = Footprint::new(3).unwrap();
        let bank = FilterBank::identity(q, fp, 1).unwrap();
        let Raster::Gray(m) = bank.render_montage(MontageMode::Coefficients).unwrap() else {
            panic!("gray montage expected");
        };
        assert_eq!(m.dims(), (5, 5));
        assert_eq!(m.get(2, 2), 255.0);
        assert_eq!(m.get(1, 1), 127.5);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn montage_dimensions() {
        let bank = ramp_bank(1);
        let Raster::Gray(m) = bank.render_montage(MontageMode::Coefficients).unwrap() else {
            panic!()
        };
        assert_eq!(m.dims(), (4 * 4 + 1, 4 * 6 + 1));
        let Raster::Rgb(c) = ramp_bank(3)
            .render_montage(MontageMode::Coefficients)
            .unwrap()
        else {
            panic!()
        };
        assert_eq!(c.dims(), (17, 3 * 24 + 1));
    }

    #[test]
    fn stddev_montage_needs_stats() {
        assert!(ramp_bank(1).render_montage(MontageMode::Stddev).is_err());
        assert!(with_fake_stats(ramp_bank(1))
            .render_montage(MontageMode::Stddev)
            .is_ok());
    }
}
