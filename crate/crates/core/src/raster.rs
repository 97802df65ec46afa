//! Planar floating-point rasters, footprints and patch extraction.
//!
//! Samples are `f32` on the nominal `[0, 255]` scale. Every out-of-bounds
//! read in this crate goes through [`reflect`], i.e. symmetric reflection
//! without repeating the edge sample (`dcb|abcd|cba`).

use crate::error::{Error, Result};

/// Maps a possibly out-of-range index onto `0..n` by whole-sample symmetric
/// reflection. Works for arbitrarily distant indices.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    if i >= 0 && (i as usize) < n {
        return i as usize;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "image dimensions must be positive"
        );
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples supplied for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "image dimensions must be positive"
        );
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn samples(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with reflected coordinates.
    #[inline]
    pub fn get_reflect(&self, x: isize, y: isize) -> f32 {
        self.get(reflect(x, self.width), reflect(y, self.height))
    }

    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f32, f32) -> f32) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Copy with a reflected border of `radius` samples on every side.
    pub fn padded(&self, radius: usize) -> ImageGray {
        let r = radius as isize;
        let width = self.width + 2 * radius;
        let height = self.height + 2 * radius;
        let mut data = Vec::with_capacity(width * height);
        let cols: Vec<usize> = (0..width as isize)
            .map(|x| reflect(x - r, self.width))
            .collect();
        for y in 0..height as isize {
            let src = self.row(reflect(y - r, self.height));
            data.extend(cols.iter().map(|&x| src[x]));
        }
        ImageGray {
            width,
            height,
            data,
        }
    }

    /// Rotation by 90° clockwise: `out(x, y) = in(y, H - 1 - x)`.
    pub fn rot90(&self) -> ImageGray {
        let (w, h) = (self.height, self.width);
        ImageGray::from_fn(w, h, |x, y| self.get(y, self.height - 1 - x))
    }

    /// Mirror about the vertical axis.
    pub fn flip_h(&self) -> ImageGray {
        ImageGray::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, y)
        })
    }

    /// Clamp to `[0, 255]` and round half away from zero.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }
}

#[inline]
pub(crate) fn quantize_u8(v: f32) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.clamp(0.0, 255.0).round() as u8
}

/// Three equally sized planes in R, G, B order.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRgb {
    planes: [ImageGray; 3],
}

impl ImageRgb {
    pub fn from_planes(r: ImageGray, g: ImageGray, b: ImageGray) -> Result<Self> {
        r.check_same_dims(&g)?;
        r.check_same_dims(&b)?;
        Ok(Self { planes: [r, g, b] })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        Self {
            planes: rgb.map(|v| ImageGray::filled(width, height, v)),
        }
    }

    pub fn from_gray(gray: &ImageGray) -> Self {
        Self {
            planes: [gray.clone(), gray.clone(), gray.clone()],
        }
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    pub fn plane(&self, c: usize) -> &ImageGray {
        &self.planes[c]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut ImageGray {
        &mut self.planes[c]
    }

    pub fn planes(&self) -> &[ImageGray; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [ImageGray; 3] {
        self.planes
    }

    pub fn map_planes(&self, f: impl Fn(&ImageGray) -> ImageGray) -> ImageRgb {
        ImageRgb {
            planes: [f(&self.planes[0]), f(&self.planes[1]), f(&self.planes[2])],
        }
    }

    pub fn try_map_planes(
        &self,
        mut f: impl FnMut(&ImageGray) -> Result<ImageGray>,
    ) -> Result<ImageRgb> {
        let [r, g, b] = &self.planes;
        ImageRgb::from_planes(f(r)?, f(g)?, f(b)?)
    }

    /// Rec.601 luma, `0.299 R + 0.587 G + 0.114 B`.
    pub fn luma(&self) -> ImageGray {
        let [r, g, b] = &self.planes;
        let data = r
            .samples()
            .iter()
            .zip(g.samples())
            .zip(b.samples())
            .map(|((&r, &g), &b)| 0.299 * r + 0.587 * g + 0.114 * b)
            .collect();
        ImageGray {
            width: r.width(),
            height: r.height(),
            data,
        }
    }
}

/// Centered odd `side x side` square of filter taps, enumerated row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Footprint {
    side: usize,
}

impl Footprint {
    pub fn new(side: usize) -> Result<Self> {
        if side == 0 || side.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "footprint side must be odd and positive, got {side}"
            )));
        }
        Ok(Self { side })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.side / 2
    }

    /// Number of taps `N`.
    #[inline]
    pub fn taps(&self) -> usize {
        self.side * self.side
    }

    #[inline]
    pub fn center(&self) -> usize {
        self.taps() / 2
    }

    /// `(dx, dy)` offsets in row-major order.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize)> {
        let r = self.radius() as isize;
        (-r..=r).flat_map(move |dy| (-r..=r).map(move |dx| (dx, dy)))
    }
}

/// `(R_i z)_j = z_{i+j}` for every offset `j` of the footprint.
pub fn extract_patch(img: &ImageGray, x: usize, y: usize, fp: Footprint) -> Result<Vec<f32>> {
    if x >= img.width() || y >= img.height() {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(fp
        .offsets()
        .map(|(dx, dy)| img.get_reflect(x as isize + dx, y as isize + dy))
        .collect())
}

/// One element of the dihedral group of the square: an optional horizontal
/// flip followed by `rotations` quarter turns clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct D4 {
    pub flip: bool,
    pub rotations: u8,
}

impl D4 {
    pub const IDENTITY: D4 = D4 {
        flip: false,
        rotations: 0,
    };

    pub const ALL: [D4; 8] = [
        D4 {
            flip: false,
            rotations: 0,
        },
        D4 {
            flip: false,
            rotations: 1,
        },
        D4 {
            flip: false,
            rotations: 2,
        },
        D4 {
            flip: false,
            rotations: 3,
        },
        D4 {
            flip: true,
            rotations: 0,
        },
        D4 {
            flip: true,
            rotations: 1,
        },
        D4 {
            flip: true,
            rotations: 2,
        },
        D4 {
            flip: true,
            rotations: 3,
        },
    ];

    pub fn rotation(quarter_turns: u8) -> D4 {
        D4 {
            flip: false,
            rotations: quarter_turns % 4,
        }
    }

    pub fn apply(&self, img: &ImageGray) -> ImageGray {
        let mut out = if self.flip { img.flip_h() } else { img.clone() };
        for _ in 0..self.rotations % 4 {
            out = out.rot90();
        }
        out
    }

    pub fn apply_rgb(&self, img: &ImageRgb) -> ImageRgb {
        img.map_planes(|p| self.apply(p))
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &D4) -> D4 {
        // R^a F^f followed by R^b F^g; F R = R^-1 F.
        if self.flip {
            D4 {
                flip: !other.flip,
                rotations: (self.rotations + 4 - other.rotations % 4) % 4,
            }
        } else {
            D4 {
                flip: other.flip,
                rotations: (self.rotations + other.rotations) % 4,
            }
        }
    }
}
