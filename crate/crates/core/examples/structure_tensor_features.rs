//! Structure-tensor features of a synthetic scene and the filter buckets
//! they select.
//!
//!     cargo run --release --example structure_tensor_features [out_dir]

use std::path::PathBuf;

use blade::io::{save_gray, save_rgb};
use blade::quantizer::{feature_map, selection_map};
use blade::raster::{ImageGray, ImageRgb};
use blade::synth::scene_gray;
use blade::Task;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "target/examples-out".into()),
    );
    std::fs::create_dir_all(&out)?;

    let img = scene_gray(320, 240, 7);
    let q = Task::Awgn.default_quantizer();
    let features = feature_map(&img, q.rho as f64)?;
    let (w, h) = img.dims();

    // Orientation as hue-ish RGB, modulated by coherence.
    let mut planes = [0, 1, 2].map(|_| ImageGray::new(w, h));
    for (i, f) in features.iter().enumerate() {
        let t = f.orientation + std::f64::consts::FRAC_PI_2;
        let k = f.coherence.clamp(0.0, 1.0);
        for (c, p) in planes.iter_mut().enumerate() {
            let phase = 2.0 * t + c as f64 * 2.0 * std::f64::consts::PI / 3.0;
            let v = 127.5 + 127.5 * k * phase.cos();
            p.samples_mut()[i] = v as f32;
        }
    }
    let [r, g, b] = planes;
    save_rgb(
        out.join("orientation.png"),
        &ImageRgb::from_planes(r, g, b)?,
    )?;

    let max_s = features.iter().map(|f| f.strength).fold(0.0, f64::max);
    let strength = ImageGray::from_vec(
        w,
        h,
        features
            .iter()
            .map(|f| (255.0 * f.strength / max_s) as f32)
            .collect(),
    )?;
    save_gray(out.join("strength.png"), &strength)?;
    save_gray(out.join("scene.png"), &img)?;

    let sel = selection_map(&img, &q)?;
    let counts = sel.counts(q.buckets());
    let used = counts.iter().filter(|&&c| c > 0).count();
    println!(
        "{}x{} scene, quantizer {}x{}x{} (K={}): {used} buckets used, max strength {max_s:.1}",
        w,
        h,
        q.orientations,
        q.strengths,
        q.coherences,
        q.buckets()
    );
    let mut per_strength = vec![0u64; q.strengths];
    for (k, &c) in counts.iter().enumerate() {
        per_strength[q.split_index(k).0] += c;
    }
    println!("pixels per strength bin: {per_strength:?}");
    println!("wrote orientation/strength maps to {}", out.display());
    Ok(())
}
