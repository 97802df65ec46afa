//! 8-bit PGM/PPM/PNG reading and writing. Byte `v` maps to sample `v`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};
use crate::raster::{ImageGray, ImageRgb};

#[derive(Clone, Debug, PartialEq)]
pub enum Raster {
    Gray(ImageGray),
    Rgb(ImageRgb),
}

impl Raster {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Raster::Gray(g) => g.dims(),
            Raster::Rgb(c) => c.dims(),
        }
    }

    /// Gray images pass through; color images are reduced to luma.
    pub fn into_gray(self) -> ImageGray {
        match self {
            Raster::Gray(g) => g,
            Raster::Rgb(c) => c.luma(),
        }
    }

    pub fn into_rgb(self) -> ImageRgb {
        match self {
            Raster::Gray(g) => ImageRgb::from_gray(&g),
            Raster::Rgb(c) => c,
        }
    }
}

fn image_err(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| image_err(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let has_color = img.color().has_color();
    Ok(if has_color {
        let rgb = img.into_rgb8();
        let mut planes = [
            ImageGray::new(w, h),
            ImageGray::new(w, h),
            ImageGray::new(w, h),
        ];
        for (i, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                planes[c].samples_mut()[i] = px.0[c] as f32;
            }
        }
        let [r, g, b] = planes;
        Raster::Rgb(ImageRgb::from_planes(r, g, b)?)
    } else {
        let gray = match img {
            DynamicImage::ImageLuma8(g) => g,
            other => other.into_luma8(),
        };
        Raster::Gray(ImageGray::from_vec(
            w,
            h,
            gray.into_raw().into_iter().map(f32::from).collect(),
        )?)
    })
}

pub fn load_gray(path: impl AsRef<Path>) -> Result<ImageGray> {
    load(path).map(Raster::into_gray)
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<ImageRgb> {
    load(path).map(Raster::into_rgb)
}

fn write_bytes(
    path: &Path,
    bytes: &[u8],
    w: usize,
    h: usize,
    color: ExtendedColorType,
) -> Result<()> {
    let format = ImageFormat::from_path(path).map_err(|e| image_err(path, e))?;
    match format {
        ImageFormat::Pnm => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let subtype = if color == ExtendedColorType::L8 {
                PnmSubtype::Graymap(SampleEncoding::Binary)
            } else {
                PnmSubtype::Pixmap(SampleEncoding::Binary)
            };
            PnmEncoder::new(BufWriter::new(file))
                .with_subtype(subtype)
                .write_image(bytes, w as u32, h as u32, color)
                .map_err(|e| image_err(path, e))
        }
        _ => image::save_buffer_with_format(path, bytes, w as u32, h as u32, color, format)
            .map_err(|e| image_err(path, e)),
    }
}

/// Writes an 8-bit gray image, clamping and rounding half away from zero.
pub fn save_gray(path: impl AsRef<Path>, img: &ImageGray) -> Result<()> {
    let path = path.as_ref();
    write_bytes(
        path,
        &img.to_u8(),
        img.width(),
        img.height(),
        ExtendedColorType::L8,
    )
}

pub fn save_rgb(path: impl AsRef<Path>, img: &ImageRgb) -> Result<()> {
    let path = path.as_ref();
    let planes: Vec<Vec<u8>> = img.planes().iter().map(ImageGray::to_u8).collect();
    let mut bytes = Vec::with_capacity(planes[0].len() * 3);
    for i in 0..planes[0].len() {
        bytes.extend([planes[0][i], planes[1][i], planes[2][i]]);
    }
    write_bytes(
        path,
        &bytes,
        img.width(),
        img.height(),
        ExtendedColorType::Rgb8,
    )
}

pub fn save(path: impl AsRef<Path>, img: &Raster) -> Result<()> {
    match img {
        Raster::Gray(g) => save_gray(path, g),
        Raster::Rgb(c) => save_rgb(path, c),
    }
}
