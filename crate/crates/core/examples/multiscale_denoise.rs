//! Coarse-to-fine denoising cascade against the single-scale denoiser.
//!
//!     cargo run --release --example multiscale_denoise [levels]

use blade::metrics::psnr;
use blade::multiscale::{train_multiscale, MultiscaleBank};
use blade::noise::add_awgn;
use blade::synth::corpus_gray;
use blade::{apply, train, PipelineConfig, Task, TrainingPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let levels: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(3);
    let config = PipelineConfig::for_task(Task::Awgn);
    let sigma = 30.0;

    let pairs = corpus_gray(6, 256, 256, 500)
        .into_iter()
        .enumerate()
        .map(|(i, clean)| Ok((add_awgn(&clean, sigma, i as u64)?, clean)))
        .collect::<blade::Result<Vec<_>>>()?;
    let corpus: Vec<_> = pairs
        .iter()
        .map(|(n, c)| TrainingPair::gray(n.clone(), c.clone()))
        .collect();
    let (single, _) = train(&corpus, &config.train)?;
    let (cascade, reports) = train_multiscale(&pairs, &vec![config.train; levels])?;
    for (i, r) in reports.iter().enumerate() {
        println!("level {i} (coarsest first): {} samples", r.total_samples);
    }

    // The cascade container roundtrips through bytes like a single bank.
    let cascade = MultiscaleBank::deserialize(&cascade.serialize())?;

    for (i, clean) in corpus_gray(3, 256, 256, 600).iter().enumerate() {
        let noisy = add_awgn(clean, sigma, 100 + i as u64)?;
        println!(
            "image {i}: noisy {:.2} dB, single-scale {:.2} dB, {levels}-level {:.2} dB",
            psnr(&noisy, clean)?,
            psnr(&apply(&single, &noisy)?, clean)?,
            psnr(&cascade.apply(&noisy)?, clean)?
        );
    }
    Ok(())
}
