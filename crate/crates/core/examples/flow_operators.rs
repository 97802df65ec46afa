//! Approximating iterative operators (TV flow, edge tangent flow) with one
//! filter pass, and tuning the strength of the result by blending with the
//! identity.
//!
//!     cargo run --release --example flow_operators

use blade::metrics::psnr;
use blade::pipeline::operator_target;
use blade::synth::corpus_gray;
use blade::{apply, train, PipelineConfig, Task, TrainingPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for task in [Task::TvFlow, Task::Etf] {
        let config = PipelineConfig::for_task(task);
        let corpus = corpus_gray(4, 192, 192, 1000)
            .into_iter()
            .map(|img| {
                Ok(TrainingPair::gray(
                    img.clone(),
                    operator_target(task, &config.op, &img)?,
                ))
            })
            .collect::<blade::Result<Vec<_>>>()?;
        let (bank, _) = train(&corpus, &config.train)?;

        let img = &corpus_gray(1, 192, 192, 1100)[0];
        let exact = operator_target(task, &config.op, img)?;
        println!("{task}: input vs operator {:.2} dB", psnr(img, &exact)?);
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let out = apply(&bank.blend_with_identity(alpha)?, img)?;
            println!(
                "  alpha {alpha:.2}: bank vs operator {:.2} dB",
                psnr(&out, &exact)?
            );
        }
    }
    Ok(())
}
