//! Train a single-scale denoiser for Gaussian noise and report the gain.
//!
//!     cargo run --release --example awgn_denoise [sigma]

use blade::metrics::psnr;
use blade::noise::add_awgn;
use blade::synth::corpus_gray;
use blade::{apply, train, PipelineConfig, Task, TrainingPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sigma: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20.0);
    let mut config = PipelineConfig::for_task(Task::Awgn);
    config.sigma = sigma;

    let corpus = corpus_gray(6, 256, 256, 300)
        .into_iter()
        .enumerate()
        .map(|(i, clean)| {
            Ok(TrainingPair::gray(
                add_awgn(&clean, sigma, i as u64)?,
                clean,
            ))
        })
        .collect::<blade::Result<Vec<_>>>()?;
    let (bank, _) = train(&corpus, &config.train)?;

    let mut gains = Vec::new();
    for (i, clean) in corpus_gray(3, 256, 256, 400).iter().enumerate() {
        let noisy = add_awgn(clean, sigma, 1000 + i as u64)?;
        let denoised = apply(&bank, &noisy)?;
        let (before, after) = (psnr(&noisy, clean)?, psnr(&denoised, clean)?);
        println!("image {i}: noisy {before:.2} dB -> denoised {after:.2} dB");
        gains.push(after - before);
    }
    println!(
        "sigma {sigma}: average gain {:.2} dB",
        gains.iter().sum::<f64>() / gains.len() as f64
    );
    Ok(())
}
