//! End-to-end runs of the `blade` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blade::io::{load_gray, save_gray, save_rgb};
use blade::synth::{scene_gray, scene_rgb};

fn blade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blade"))
        .args(args)
        .env("BLADE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = blade(args);
    assert!(
        out.status.success(),
        "blade {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = blade(args);
    assert!(
        !out.status.success(),
        "blade {args:?} unexpectedly succeeded"
    );
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two clean gray scenes and a one-column manifest naming them.
fn gray_manifest(dir: &Path) -> PathBuf {
    let mut text = String::from("# clean images\n");
    for i in 0..2 {
        let name = format!("clean{i}.pgm");
        save_gray(dir.join(&name), &scene_gray(48, 40, i)).unwrap();
        text.push_str(&name);
        text.push('\n');
    }
    let manifest = dir.join("train.txt");
    std::fs::write(&manifest, text).unwrap();
    manifest
}

const SMALL: [&str; 8] = [
    "--fp",
    "3",
    "--orient",
    "4",
    "--strength",
    "2:5:30",
    "--coherence",
    "2:0.2:0.8",
];

#[test]
fn train_apply_eval_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = gray_manifest(d);
    let bank = d.join("awgn.blde");
    let mut args = vec![
        "train",
        "--task",
        "awgn",
        "--manifest",
        s(&manifest),
        "--out",
        s(&bank),
        "--sigma",
        "15",
    ];
    args.extend(SMALL);
    let stdout = ok(&args);
    assert!(stdout.contains("16 filters"), "{stdout}");

    // Report: per-bucket counts add up to eight augmented copies per pixel.
    let report = std::fs::read_to_string(d.join("awgn.blde.report.txt")).unwrap();
    let total: u64 = report
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').nth(4).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 8 * 2 * 48 * 40);

    let input = d.join("clean0.pgm");
    let filtered = d.join("filtered.pgm");
    ok(&[
        "apply",
        "--bank",
        s(&bank),
        "--in",
        s(&input),
        "--out",
        s(&filtered),
    ]);
    assert_eq!(load_gray(&filtered).unwrap().dims(), (48, 40));

    let same = d.join("same.pgm");
    ok(&[
        "apply",
        "--bank",
        s(&bank),
        "--in",
        s(&input),
        "--out",
        s(&same),
        "--alpha",
        "0",
    ]);
    assert_eq!(
        std::fs::read(&same).unwrap(),
        std::fs::read(&input).unwrap()
    );

    let eval = ok(&["eval", "--ref", s(&input), "--test", s(&same)]);
    assert_eq!(eval.trim(), "PSNR_dB=inf MSSIM=1.0000");
    let eval = ok(&["eval", "--ref", s(&input), "--test", s(&filtered)]);
    assert!(
        eval.starts_with("PSNR_dB=") && !eval.contains("inf"),
        "{eval}"
    );

    let montage = d.join("montage.png");
    ok(&[
        "montage",
        "--bank",
        s(&bank),
        "--out",
        s(&montage),
        "--stddev",
    ]);
    // (3+1)*4+1 wide, (3+1)*2*2+1 tall.
    assert_eq!(load_gray(&montage).unwrap().dims(), (17, 17));
}

#[test]
fn errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("nope.blde");
    let img = d.join("a.pgm");
    save_gray(&img, &scene_gray(32, 32, 1)).unwrap();
    let err = fails(&[
        "apply",
        "--bank",
        s(&missing),
        "--in",
        s(&img),
        "--out",
        s(&d.join("o.pgm")),
    ]);
    assert!(
        err.starts_with("error:") && err.contains("nope.blde"),
        "{err}"
    );

    let other = d.join("b.pgm");
    save_gray(&other, &scene_gray(31, 32, 1)).unwrap();
    let err = fails(&["eval", "--ref", s(&img), "--test", s(&other)]);
    assert!(err.contains("32x32") || err.contains("31"), "{err}");

    std::fs::write(d.join("bad.blde"), b"NOPE\x01\x00\x00\x00").unwrap();
    let err = fails(&[
        "apply",
        "--bank",
        s(&d.join("bad.blde")),
        "--in",
        s(&img),
        "--out",
        s(&d.join("o.pgm")),
    ]);
    assert!(err.to_lowercase().contains("magic"), "{err}");

    let manifest = d.join("m.txt");
    std::fs::write(&manifest, "missing.pgm\n").unwrap();
    let err = fails(&[
        "train",
        "--task",
        "bilateral",
        "--manifest",
        s(&manifest),
        "--out",
        s(&d.join("x.blde")),
    ]);
    assert!(err.contains("missing.pgm"), "{err}");

    let err = fails(&[
        "train",
        "--task",
        "sharpen",
        "--manifest",
        s(&manifest),
        "--out",
        s(&d.join("x.blde")),
    ]);
    assert!(err.contains("sharpen"), "{err}");
}

#[test]
fn pairs_demosaic_and_cascade() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // External pairs: blurred-ish observation against the clean image.
    let clean = scene_gray(40, 40, 3);
    let observed = blade::resample::upsample_2x(&blade::resample::downsample_2x(&clean), 40, 40);
    save_gray(d.join("obs.pgm"), &observed).unwrap();
    save_gray(d.join("clean.pgm"), &clean).unwrap();
    let pairs = d.join("pairs.txt");
    std::fs::write(&pairs, "obs.pgm\tclean.pgm\n").unwrap();
    let bank = d.join("pairs.blde");
    let mut args = vec![
        "train",
        "--task",
        "pairs",
        "--manifest",
        s(&pairs),
        "--out",
        s(&bank),
    ];
    args.extend(SMALL);
    ok(&args);

    // Demosaic: train on an RGB image, run on its mosaic.
    let rgb = scene_rgb(40, 32, 4);
    save_rgb(d.join("rgb.ppm"), &rgb).unwrap();
    std::fs::write(d.join("rgb.txt"), "rgb.ppm\n").unwrap();
    let cbank = d.join("demosaic.blde");
    ok(&[
        "train",
        "--task",
        "demosaic",
        "--manifest",
        s(&d.join("rgb.txt")),
        "--out",
        s(&cbank),
        "--orient",
        "4",
        "--strength",
        "2:5:30",
        "--coherence",
        "1:0.2:0.8",
    ]);
    let mosaic = d.join("mosaic.pgm");
    save_gray(&mosaic, &blade::bayer::bayer_mosaic(&rgb).unwrap()).unwrap();
    let out = d.join("demosaiced.ppm");
    ok(&[
        "demosaic",
        "--bank",
        s(&cbank),
        "--in",
        s(&mosaic),
        "--out",
        s(&out),
    ]);
    assert_eq!(blade::io::load_rgb(&out).unwrap().dims(), (40, 32));
    // A color bank cannot filter a gray image.
    let err = fails(&[
        "apply",
        "--bank",
        s(&cbank),
        "--in",
        s(&mosaic),
        "--out",
        s(&d.join("x.pgm")),
    ]);
    assert!(err.contains("color"), "{err}");

    // Two-level cascade.
    let manifest = gray_manifest(d);
    let cascade = d.join("ms.bldm");
    let mut args = vec![
        "msdenoise-train",
        "--levels",
        "2",
        "--manifest",
        s(&manifest),
        "--out",
        s(&cascade),
    ];
    args.extend(SMALL);
    ok(&args);
    let denoised = d.join("dn.pgm");
    ok(&[
        "msdenoise-apply",
        "--levels",
        "2",
        "--bank",
        s(&cascade),
        "--in",
        s(&d.join("clean0.pgm")),
        "--out",
        s(&denoised),
    ]);
    assert_eq!(load_gray(&denoised).unwrap().dims(), (48, 40));
    let err = fails(&[
        "msdenoise-apply",
        "--levels",
        "3",
        "--bank",
        s(&cascade),
        "--in",
        s(&d.join("clean0.pgm")),
        "--out",
        s(&denoised),
    ]);
    assert!(err.contains("levels"), "{err}");
}

#[test]
fn bench_prints_a_table() {
    let out = ok(&["bench", "--fp-list", "3,5", "--mp-list", "0.01,0.04"]);
    assert!(out.lines().count() >= 3, "{out}");
    assert!(out.contains("3x3") || out.contains(" 3 "), "{out}");
}
