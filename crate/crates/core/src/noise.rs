use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::ImageGray;

/// Adds i.i.d. zero-mean Gaussian noise of standard deviation `sigma`.
/// The result is not clipped, and is a pure function of `(img, sigma, seed)`.
pub fn add_awgn(img: &ImageGray, sigma: f64, seed: u64) -> Result<ImageGray> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    Ok(img.map(|v| (v as f64 + normal.sample(&mut rng)) as f32))
}
