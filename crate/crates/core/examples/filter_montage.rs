//! Inspect a trained bank: per-bucket report, filter montage, standard
//! deviation montage, and a save/load roundtrip.
//!
//!     cargo run --release --example filter_montage [out_dir]

use std::path::PathBuf;

use blade::io::save;
use blade::noise::add_awgn;
use blade::synth::corpus_gray;
use blade::{train, FilterBank, MontageMode, PipelineConfig, Task, TrainingPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "target/examples-out".into()),
    );
    std::fs::create_dir_all(&out)?;

    // A deliberately small corpus, so some buckets stay under-sampled and
    // stand out in the standard-deviation montage.
    let config = PipelineConfig::for_task(Task::Awgn);
    let corpus = corpus_gray(2, 128, 128, 1200)
        .into_iter()
        .enumerate()
        .map(|(i, c)| Ok(TrainingPair::gray(add_awgn(&c, 20.0, i as u64)?, c)))
        .collect::<blade::Result<Vec<_>>>()?;
    let (bank, report) = train(&corpus, &config.train)?;
    let text = report.to_text(bank.quantizer());
    println!("{}", text.lines().next().unwrap_or_default());
    let report_path = out.join("awgn.report.txt");
    std::fs::write(&report_path, &text)?;
    for (k, b) in report.flagged().take(5) {
        let (s, c, o) = bank.quantizer().split_index(k);
        println!(
            "  bucket {k} (strength {s}, coherence {c}, orientation {o}): {} samples, {:?}",
            b.samples, b.status
        );
    }

    let path = out.join("awgn.blde");
    bank.save(&path)?;
    let loaded = FilterBank::load(&path)?;
    assert_eq!(loaded.serialize(), bank.serialize());

    save(
        out.join("montage.png"),
        &loaded.render_montage(MontageMode::Coefficients)?,
    )?;
    save(
        out.join("montage_stddev.png"),
        &loaded.render_montage(MontageMode::Stddev)?,
    )?;
    println!("wrote {} and montages to {}", path.display(), out.display());
    Ok(())
}
