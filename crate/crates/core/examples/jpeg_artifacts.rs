//! Training from external degraded/clean pairs: JPEG artifact removal,
//! against a bank trained on Gaussian noise of matched variance.
//!
//!     cargo run --release --example jpeg_artifacts [quality]

use image::codecs::jpeg::JpegEncoder;

use blade::metrics::{mse, psnr};
use blade::noise::add_awgn;
use blade::raster::ImageGray;
use blade::synth::corpus_gray;
use blade::{apply, train, PipelineConfig, Task, TrainingPair};

fn jpeg(img: &ImageGray, quality: u8) -> Result<ImageGray, Box<dyn std::error::Error>> {
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality).encode(
        &img.to_u8(),
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::L8,
    )?;
    let decoded = image::load_from_memory(&buf)?.to_luma8();
    Ok(ImageGray::from_vec(
        img.width(),
        img.height(),
        decoded.into_raw().into_iter().map(f32::from).collect(),
    )?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quality: u8 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(50);
    let config = PipelineConfig::for_task(Task::Pairs);
    let clean = corpus_gray(6, 256, 256, 700);
    let mut jpeg_pairs = Vec::new();
    let mut err = 0.0;
    for c in &clean {
        let j = jpeg(c, quality)?;
        err += mse(&j, c)?;
        jpeg_pairs.push(TrainingPair::gray(j, c.clone()));
    }
    let variance = err / clean.len() as f64;
    let noise_pairs = clean
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(TrainingPair::gray(
                add_awgn(c, variance.sqrt(), i as u64)?,
                c.clone(),
            ))
        })
        .collect::<blade::Result<Vec<_>>>()?;
    println!("quality {quality}: training-set JPEG MSE {variance:.1}");

    let (jpeg_bank, _) = train(&jpeg_pairs, &config.train)?;
    let (noise_bank, _) = train(&noise_pairs, &config.train)?;
    for (i, c) in corpus_gray(3, 256, 256, 800).iter().enumerate() {
        let j = jpeg(c, quality)?;
        println!(
            "image {i}: JPEG {:.2} dB, JPEG-trained {:.2} dB, noise-trained {:.2} dB",
            psnr(&j, c)?,
            psnr(&apply(&jpeg_bank, &j)?, c)?,
            psnr(&apply(&noise_bank, &j)?, c)?
        );
    }
    Ok(())
}
