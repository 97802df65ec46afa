//! Learn a filter bank that imitates the bilateral filter, then compare it
//! with the exact operator on held-out scenes.
//!
//!     cargo run --release --example bilateral_approximation [out_dir]

use std::path::PathBuf;
use std::time::Instant;

use blade::io::save_gray;
use blade::metrics::{mssim, psnr};
use blade::pipeline::operator_target;
use blade::synth::corpus_gray;
use blade::{apply, train, PipelineConfig, Task, TrainingPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "target/examples-out".into()),
    );
    std::fs::create_dir_all(&out)?;

    let config = PipelineConfig::for_task(Task::Bilateral);
    println!(
        "sigma_r = {}, sigma_s = {}",
        config.op.sigma_r, config.op.sigma_s
    );

    let corpus = corpus_gray(6, 256, 256, 100)
        .into_iter()
        .map(|img| {
            let target = operator_target(Task::Bilateral, &config.op, &img)?;
            Ok(TrainingPair::gray(img, target))
        })
        .collect::<blade::Result<Vec<_>>>()?;
    let t = Instant::now();
    let (bank, report) = train(&corpus, &config.train)?;
    println!(
        "trained {} filters of {}x{} on {} samples in {:.2} s ({} flagged buckets)",
        bank.buckets(),
        bank.footprint().side(),
        bank.footprint().side(),
        report.total_samples,
        t.elapsed().as_secs_f64(),
        report.flagged().count()
    );

    for (i, img) in corpus_gray(2, 256, 256, 200).iter().enumerate() {
        let t = Instant::now();
        let exact = operator_target(Task::Bilateral, &config.op, img)?;
        let t_exact = t.elapsed();
        let t = Instant::now();
        let approx = apply(&bank, img)?;
        let t_approx = t.elapsed();
        println!(
            "held-out {i}: PSNR {:.2} dB, MSSIM {:.4}; bilateral {:.1} ms, bank {:.1} ms",
            psnr(&approx, &exact)?,
            mssim(&approx, &exact)?,
            t_exact.as_secs_f64() * 1e3,
            t_approx.as_secs_f64() * 1e3
        );
        save_gray(out.join(format!("bilateral_exact_{i}.png")), &exact)?;
        save_gray(out.join(format!("bilateral_blade_{i}.png")), &approx)?;
    }
    Ok(())
}
