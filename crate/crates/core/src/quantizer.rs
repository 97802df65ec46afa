//! Bounded uniform quantization of structure-tensor features into a flat
//! filter index.
//!
//! Layout: `index = (strength_bin * C + coherence_bin) * O + orientation_bin`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::ImageGray;
use crate::structure_tensor::{
    eigen_features, eigen_system, gradient_direction, strength_coherence, structure_tensor,
    Features, TensorRows,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizerSpec {
    pub orientations: usize,
    pub strengths: usize,
    pub strength_range: (f32, f32),
    pub coherences: usize,
    pub coherence_range: (f32, f32),
    /// Structure tensor smoothing used to compute the features.
    pub rho: f32,
}

impl QuantizerSpec {
    pub fn new(
        orientations: usize,
        strengths: usize,
        strength_range: (f32, f32),
        coherences: usize,
        coherence_range: (f32, f32),
        rho: f32,
    ) -> Result<Self> {
        let spec = Self {
            orientations,
            strengths,
            strength_range,
            coherences,
            coherence_range,
            rho,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A single bucket: every pixel selects filter 0.
    pub fn single(rho: f32) -> Self {
        Self {
            orientations: 1,
            strengths: 1,
            strength_range: (0.0, 1.0),
            coherences: 1,
            coherence_range: (0.0, 1.0),
            rho,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.orientations == 0 || self.strengths == 0 || self.coherences == 0 {
            return bad(format!("bin counts must be at least 1: {self:?}"));
        }
        if self.orientations > u16::MAX as usize
            || self.strengths > u16::MAX as usize
            || self.coherences > u16::MAX as usize
        {
            return bad(format!("bin counts must fit in 16 bits: {self:?}"));
        }
        let (slo, shi) = self.strength_range;
        let (clo, chi) = self.coherence_range;
        if !(slo < shi) || !(clo < chi) {
            return bad(format!("ranges must be increasing: {self:?}"));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return bad(format!("rho must be positive: {}", self.rho));
        }
        Ok(())
    }

    /// Number of buckets `K = O * S * C`.
    pub fn buckets(&self) -> usize {
        self.orientations * self.strengths * self.coherences
    }

    pub fn flat_index(
        &self,
        strength_bin: usize,
        coherence_bin: usize,
        orientation_bin: usize,
    ) -> usize {
        (strength_bin * self.coherences + coherence_bin) * self.orientations + orientation_bin
    }

    /// Inverse of [`QuantizerSpec::flat_index`]: `(strength, coherence, orientation)`.
    pub fn split_index(&self, index: usize) -> (usize, usize, usize) {
        let o = index % self.orientations;
        let rest = index / self.orientations;
        (rest / self.coherences, rest % self.coherences, o)
    }

    /// Orientation bin with horizontal and vertical on bin centers.
    pub fn orientation_bin(&self, orientation: f64) -> usize {
        let o = self.orientations;
        let theta = if orientation < 0.0 {
            orientation + PI
        } else {
            orientation
        };
        let bin = (theta * o as f64 / PI).round() as i64;
        bin.rem_euclid(o as i64) as usize
    }

    pub fn strength_bin(&self, strength: f64) -> usize {
        uniform_bin(strength, self.strength_range, self.strengths)
    }

    pub fn coherence_bin(&self, coherence: f64) -> usize {
        uniform_bin(coherence, self.coherence_range, self.coherences)
    }

    pub fn quantize(&self, f: &Features) -> usize {
        self.flat_index(
            self.strength_bin(f.strength),
            self.coherence_bin(f.coherence),
            self.orientation_bin(f.orientation),
        )
    }

    /// Permutation of flat indices induced by rotating the image by
    /// `quarter_turns * 90` degrees. The `O` bins cover a half turn of
    /// orientation, so a quarter turn of the image moves `O / 2` bins;
    /// requires `O` even.
    pub fn rotation_permutation(&self, quarter_turns: usize) -> Option<Vec<usize>> {
        if !self.orientations.is_multiple_of(2) {
            return None;
        }
        let shift = quarter_turns * self.orientations / 2;
        Some(
            (0..self.buckets())
                .map(|k| {
                    let (s, c, o) = self.split_index(k);
                    self.flat_index(s, c, (o + shift) % self.orientations)
                })
                .collect(),
        )
    }
}

/// Orientation binning straight from a direction vector: the bin is the
/// number of bin edges at or below the vector's angle in `[0, pi)`, found
/// by cross-product sign tests instead of an arctangent.
#[derive(Clone, Debug)]
pub struct OrientationEdges {
    orientations: usize,
    /// Unit vectors at angles `(k + 1/2) pi / O`, increasing.
    edges: Vec<[f64; 2]>,
}

impl OrientationEdges {
    pub fn new(orientations: usize) -> Self {
        let edges = (0..orientations)
            .map(|k| {
                let angle = (k as f64 + 0.5) * PI / orientations as f64;
                [angle.cos(), angle.sin()]
            })
            .collect();
        Self {
            orientations,
            edges,
        }
    }

    #[inline]
    pub fn bin(&self, dir: [f64; 2]) -> usize {
        let [mut u, mut v] = dir;
        if v < 0.0 || (v == 0.0 && u < 0.0) {
            u = -u;
            v = -v;
        }
        // Angles in [0, pi) are ordered by the sign of the cross product.
        let below = self.edges.partition_point(|e| e[0] * v - e[1] * u >= 0.0);
        below % self.orientations
    }
}

/// Clamp to `[lo, hi]`, then `floor` into `n` equal bins; `hi` maps to the
/// top bin. A value exactly on an interior edge lands in the bin above it.
fn uniform_bin(value: f64, (lo, hi): (f32, f32), n: usize) -> usize {
    let (lo, hi) = (lo as f64, hi as f64);
    if !(value > lo) {
        return 0;
    }
    if value >= hi {
        return n - 1;
    }
    let bin = ((value - lo) * n as f64 / (hi - lo)).floor() as usize;
    bin.min(n - 1)
}

/// Per-pixel flat filter indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionMap {
    width: usize,
    height: usize,
    indices: Vec<u32>,
}

impl SelectionMap {
    pub fn from_vec(width: usize, height: usize, indices: Vec<u32>) -> Result<Self> {
        if indices.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} indices for a {width}x{height} map",
                indices.len()
            )));
        }
        Ok(Self {
            width,
            height,
            indices,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> usize {
        self.indices[y * self.width + x] as usize
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn row(&self, y: usize) -> &[u32] {
        &self.indices[y * self.width..(y + 1) * self.width]
    }

    /// Histogram of indices over `k` buckets.
    pub fn counts(&self, k: usize) -> Vec<u64> {
        let mut counts = vec![0u64; k];
        for &i in &self.indices {
            counts[i as usize] += 1;
        }
        counts
    }
}

/// Feature maps for every pixel, mostly for inspection and tests.
pub fn feature_map(img: &ImageGray, rho: f64) -> Result<Vec<Features>> {
    let t = structure_tensor(img, rho)?;
    Ok((0..t.a().len())
        .map(|i| eigen_features(t.a()[i], t.b()[i], t.c()[i]))
        .collect())
}

/// Rows per parallel band of [`selection_map`].
const BAND_ROWS: usize = 32;

/// Structure tensor, eigen features and quantization for every pixel.
/// Bands of rows stream the tensor independently, so no full-size tensor
/// field is ever allocated.
pub fn selection_map(img: &ImageGray, q: &QuantizerSpec) -> Result<SelectionMap> {
    let width = img.width();
    TensorRows::new(img, q.rho as f64)?;
    let edges = OrientationEdges::new(q.orientations);
    let mut indices = vec![0u32; img.len()];
    indices
        .par_chunks_mut(width * BAND_ROWS)
        .enumerate()
        .for_each(|(band, chunk)| {
            let mut rows = TensorRows::new(img, q.rho as f64).expect("validated above");
            let (mut a, mut b, mut c) = (vec![0.0; width], vec![0.0; width], vec![0.0; width]);
            for (i, out) in chunk.chunks_exact_mut(width).enumerate() {
                rows.row(band * BAND_ROWS + i, &mut a, &mut b, &mut c);
                for (x, o) in out.iter_mut().enumerate() {
                    let es = eigen_system(a[x], b[x], c[x]);
                    let (strength, coherence) = strength_coherence(&es);
                    let bin = edges.bin(gradient_direction(&es));
                    *o = q.flat_index(q.strength_bin(strength), q.coherence_bin(coherence), bin)
                        as u32;
                }
            }
        });
    SelectionMap::from_vec(width, img.height(), indices)
}
