//! Color bank refining a bilinear demosaic of an RGGB mosaic.
//!
//!     cargo run --release --example demosaic [out_dir]

use std::path::PathBuf;

use blade::bayer::{bayer_mosaic, bilinear_demosaic};
use blade::io::save_rgb;
use blade::metrics::psnr_rgb;
use blade::pipeline::{demosaic, demosaic_pair};
use blade::synth::corpus_rgb;
use blade::{train, PipelineConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "target/examples-out".into()),
    );
    std::fs::create_dir_all(&out)?;

    let config = PipelineConfig::for_task(Task::Demosaic);
    let corpus = corpus_rgb(6, 192, 192, 900)
        .iter()
        .map(demosaic_pair)
        .collect::<blade::Result<Vec<_>>>()?;
    let (bank, _) = train(&corpus, &config.train)?;
    println!(
        "color bank: {} outputs x {} filters of {} taps",
        bank.output_count(),
        bank.buckets(),
        bank.dim()
    );

    for (i, clean) in corpus_rgb(2, 192, 192, 950).iter().enumerate() {
        let mosaic = bayer_mosaic(clean)?;
        let base = bilinear_demosaic(&mosaic)?;
        let refined = demosaic(&bank, &mosaic)?;
        println!(
            "image {i}: bilinear {:.2} dB -> BLADE {:.2} dB",
            psnr_rgb(&base, clean)?,
            psnr_rgb(&refined, clean)?
        );
        save_rgb(out.join(format!("demosaic_bilinear_{i}.png")), &base)?;
        save_rgb(out.join(format!("demosaic_blade_{i}.png")), &refined)?;
    }
    Ok(())
}
