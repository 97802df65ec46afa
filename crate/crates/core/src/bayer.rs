//! RGGB Bayer sampling and bilinear demosaicing.

use crate::error::{Error, Result};
use crate::raster::{reflect, ImageGray, ImageRgb};

/// Channel sampled at `(x, y)` under the RGGB phase: 0 = R, 1 = G, 2 = B.
#[inline]
pub fn cfa_channel(x: usize, y: usize) -> usize {
    match (y % 2, x % 2) {
        (0, 0) => 0,
        (1, 1) => 2,
        _ => 1,
    }
}

fn check_even(width: usize, height: usize) -> Result<()> {
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "Bayer images need even dimensions, got {width}x{height}"
        )));
    }
    Ok(())
}

pub fn bayer_mosaic(img: &ImageRgb) -> Result<ImageGray> {
    let (w, h) = img.dims();
    check_even(w, h)?;
    Ok(ImageGray::from_fn(w, h, |x, y| {
        img.plane(cfa_channel(x, y)).get(x, y)
    }))
}

/// Fills missing samples from the two or four nearest same-channel sites.
/// Observed samples are passed through unchanged. Reflection keeps the CFA
/// phase at the borders because it never repeats the edge sample.
pub fn bilinear_demosaic(mosaic: &ImageGray) -> Result<ImageRgb> {
    let (w, h) = mosaic.dims();
    check_even(w, h)?;
    let at = |x: isize, y: isize| mosaic.get(reflect(x, w), reflect(y, h));
    let mut planes = [
        ImageGray::new(w, h),
        ImageGray::new(w, h),
        ImageGray::new(w, h),
    ];
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let site = cfa_channel(x, y);
            let center = at(xi, yi);
            let cross = 0.25 * (at(xi - 1, yi) + at(xi + 1, yi) + at(xi, yi - 1) + at(xi, yi + 1));
            let diag = 0.25
                * (at(xi - 1, yi - 1)
                    + at(xi + 1, yi - 1)
                    + at(xi - 1, yi + 1)
                    + at(xi + 1, yi + 1));
            let horiz = 0.5 * (at(xi - 1, yi) + at(xi + 1, yi));
            let vert = 0.5 * (at(xi, yi - 1) + at(xi, yi + 1));
            let (r, g, b) = match site {
                0 => (center, cross, diag),
                2 => (diag, cross, center),
                _ => {
                    // Green site: on an R row the horizontal neighbours are R.
                    if y % 2 == 0 {
                        (horiz, center, vert)
                    } else {
                        (vert, center, horiz)
                    }
                }
            };
            planes[0].set(x, y, r);
            planes[1].set(x, y, g);
            planes[2].set(x, y, b);
        }
    }
    let [r, g, b] = planes;
    ImageRgb::from_planes(r, g, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_scene_roundtrip() {
        let img = ImageRgb::filled(6, 4, [80.0; 3]);
        let m = bayer_mosaic(&img).unwrap();
        assert!(m.samples().iter().all(|&v| v == 80.0));
        let d = bilinear_demosaic(&m).unwrap();
        for c in 0..3 {
            assert!(d.plane(c).samples().iter().all(|&v| v == 80.0));
        }
    }

    #[test]
    fn pure_red_masks_other_sites() {
        let img = ImageRgb::filled(4, 4, [200.0, 0.0, 0.0]);
        let m = bayer_mosaic(&img).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expect = if x % 2 == 0 && y % 2 == 0 { 200.0 } else { 0.0 };
                assert_eq!(m.get(x, y), expect);
            }
        }
    }

    #[test]
    fn odd_dimensions_rejected() {
        assert!(bayer_mosaic(&ImageRgb::filled(5, 4, [0.0; 3])).is_err());
        assert!(bilinear_demosaic(&ImageGray::new(4, 3)).is_err());
    }

    #[test]
    fn affine_ramp_is_recovered_in_the_interior() {
        let ramp =
            |x: usize, y: usize, c: usize| 10.0 + 2.0 * x as f32 + 0.5 * y as f32 + 20.0 * c as f32;
        let img = ImageRgb::from_planes(
            ImageGray::from_fn(12, 10, |x, y| ramp(x, y, 0)),
            ImageGray::from_fn(12, 10, |x, y| ramp(x, y, 1)),
            ImageGray::from_fn(12, 10, |x, y| ramp(x, y, 2)),
        )
        .unwrap();
        let d = bilinear_demosaic(&bayer_mosaic(&img).unwrap()).unwrap();
        for c in 0..3 {
            for y in 1..9 {
                for x in 1..11 {
                    assert!((d.plane(c).get(x, y) - ramp(x, y, c)).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn demosaic_preserves_observed_samples() {
        let m = ImageGray::from_fn(8, 6, |x, y| ((x * 53 + y * 29) % 251) as f32);
        let again = bayer_mosaic(&bilinear_demosaic(&m).unwrap()).unwrap();
        assert_eq!(again, m);
    }
}
