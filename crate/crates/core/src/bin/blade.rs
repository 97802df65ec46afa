use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use blade::bank::{FilterBank, MontageMode};
use blade::io::{load, save, save_rgb, Raster};
use blade::multiscale::{train_multiscale, MultiscaleBank};
use blade::noise::add_awgn;
use blade::pipeline::{
    apply_raster, bench, build_corpus, demosaic, evaluate, format_bench, format_eval,
    read_manifest, PipelineConfig, Task,
};
use blade::quantizer::QuantizerSpec;
use blade::raster::Footprint;
use blade::training::{train, TrainConfig};
use blade::{Error, Result};

#[derive(Parser)]
#[command(
    name = "blade",
    version,
    about = "Trainable edge-adaptive image filters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a filter bank for a task from a manifest of images.
    Train(TrainArgs),
    /// Filter an image with a trained bank.
    Apply {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Blend with the identity: 0 leaves the image unchanged, 1 is the bank.
        #[arg(long)]
        alpha: Option<f32>,
    },
    /// Train a coarse-to-fine AWGN denoising cascade.
    MsdenoiseTrain {
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        bank: BankArgs,
    },
    /// Denoise with a trained cascade.
    MsdenoiseApply {
        /// Expected level count; checked against the cascade file.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// PSNR and MSSIM of a test image against a reference.
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Time filtering of synthetic noise images.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "5,7,9,11,13")]
        fp_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.25,1,4")]
        mp_list: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bilinear demosaic of an RGGB mosaic refined by a color bank.
    Demosaic {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a bank's filters (or their standard deviations) as an image.
    Montage {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stddev: bool,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_parser = parse_task)]
    task: Task,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Noise deviation for `awgn`.
    #[arg(long)]
    sigma: Option<f64>,
    /// Operator parameters, e.g. `sigma_r=25,sigma_s=2.5` or `steps=20`.
    #[arg(long)]
    op_params: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-bucket report; defaults to `<out>.report.txt`.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    bank: BankArgs,
}

/// Bank shape overrides; anything left out takes the task default.
#[derive(Args)]
struct BankArgs {
    #[arg(long)]
    fp: Option<usize>,
    #[arg(long)]
    orient: Option<usize>,
    /// `S:LO:HI`
    #[arg(long, value_parser = parse_bins)]
    strength: Option<(usize, f32, f32)>,
    /// `C:LO:HI`
    #[arg(long, value_parser = parse_bins)]
    coherence: Option<(usize, f32, f32)>,
    #[arg(long)]
    rho: Option<f32>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Force D4 augmentation on or off.
    #[arg(long)]
    augment: Option<bool>,
}

impl BankArgs {
    fn resolve(&self, task: Task) -> Result<TrainConfig> {
        let d = task.default_quantizer();
        let (s, s_lo, s_hi) =
            self.strength
                .unwrap_or((d.strengths, d.strength_range.0, d.strength_range.1));
        let (c, c_lo, c_hi) =
            self.coherence
                .unwrap_or((d.coherences, d.coherence_range.0, d.coherence_range.1));
        let q = QuantizerSpec::new(
            self.orient.unwrap_or(d.orientations),
            s,
            (s_lo, s_hi),
            c,
            (c_lo, c_hi),
            self.rho.unwrap_or(d.rho),
        )?;
        let fp = Footprint::new(self.fp.unwrap_or(task.default_footprint()))?;
        let mut config = TrainConfig::new(q, fp);
        if let Some(l) = self.lambda {
            config.lambda = l;
        }
        config.augment = self.augment.unwrap_or(task.default_augment());
        Ok(config)
    }
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_bins(s: &str) -> std::result::Result<(usize, f32, f32), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [n, lo, hi] = parts.as_slice() else {
        return Err(format!("expected COUNT:LO:HI, got {s:?}"));
    };
    let n = n.parse().map_err(|_| format!("bad bin count {n:?}"))?;
    let lo = lo.parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi = hi.parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
    Ok((n, lo, hi))
}

fn report_path(out: &Path, explicit: Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let mut name = out.as_os_str().to_owned();
        name.push(".report.txt");
        PathBuf::from(name)
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut config = PipelineConfig::for_task(args.task);
    config.train = args.bank.resolve(args.task)?;
    if let Some(s) = args.sigma {
        config.sigma = s;
    }
    if let Some(p) = &args.op_params {
        config.op = config.op.with_overrides(p)?;
    }
    config.seed = args.seed;
    config.validate()?;
    let entries = read_manifest(&args.manifest, args.task.columns())?;
    let corpus = build_corpus(&config, &entries)?;
    info!("training {} on {} pairs", args.task, corpus.len());
    let (bank, report) = train(&corpus, &config.train)?;
    bank.save(&args.out)?;
    let report_file = report_path(&args.out, args.report);
    write_text(&report_file, &report.to_text(bank.quantizer()))?;
    println!(
        "wrote {} ({} filters, {} samples, {} flagged buckets); report {}",
        args.out.display(),
        bank.buckets(),
        report.total_samples,
        report.flagged().count(),
        report_file.display()
    );
    Ok(())
}

fn cmd_msdenoise_train(
    levels: usize,
    manifest: &Path,
    out: &Path,
    sigma: f64,
    seed: u64,
    bank: &BankArgs,
) -> Result<()> {
    let mut config = PipelineConfig::for_task(Task::Awgn);
    config.train = bank.resolve(Task::Awgn)?;
    config.sigma = sigma;
    config.levels = levels;
    config.seed = seed;
    config.validate()?;
    let entries = read_manifest(manifest, 1)?;
    let pairs = entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let clean = load(&e.paths[0])?.into_gray();
            let noisy = add_awgn(&clean, sigma, seed.wrapping_add(i as u64))?;
            Ok((noisy, clean))
        })
        .collect::<Result<Vec<_>>>()?;
    let configs = vec![config.train; levels];
    let (cascade, reports) = train_multiscale(&pairs, &configs)?;
    cascade.save(out)?;
    let mut text = String::new();
    for (i, (report, bank)) in reports.iter().zip(cascade.levels()).enumerate() {
        text.push_str(&format!("## level {} (coarsest first)\n", i));
        text.push_str(&report.to_text(bank.quantizer()));
    }
    let report_file = report_path(out, None);
    write_text(&report_file, &text)?;
    println!(
        "wrote {} ({levels} levels); report {}",
        out.display(),
        report_file.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Apply {
            bank,
            input,
            out,
            alpha,
        } => {
            let bank = FilterBank::load(&bank)?;
            let img = load(&input)?;
            save(&out, &apply_raster(&bank, &img, alpha)?)
        }
        Command::MsdenoiseTrain {
            levels,
            manifest,
            out,
            sigma,
            seed,
            bank,
        } => cmd_msdenoise_train(levels, &manifest, &out, sigma, seed, &bank),
        Command::MsdenoiseApply {
            levels,
            bank,
            input,
            out,
        } => {
            let cascade = MultiscaleBank::load(&bank)?;
            if let Some(l) = levels {
                if l != cascade.level_count() {
                    return Err(Error::InvalidArgument(format!(
                        "--levels {l} but {} holds {} levels",
                        bank.display(),
                        cascade.level_count()
                    )));
                }
            }
            let result = match load(&input)? {
                Raster::Gray(g) => Raster::Gray(cascade.apply(&g)?),
                Raster::Rgb(c) => Raster::Rgb(c.try_map_planes(|p| cascade.apply(p))?),
            };
            save(&out, &result)
        }
        Command::Eval { reference, test } => {
            let (p, m) = evaluate(&load(&reference)?, &load(&test)?)?;
            println!("{}", format_eval(p, m));
            Ok(())
        }
        Command::Bench {
            fp_list,
            mp_list,
            seed,
        } => {
            let rows = bench(&fp_list, &mp_list, seed)?;
            print!("{}", format_bench(&rows));
            Ok(())
        }
        Command::Demosaic { bank, input, out } => {
            let bank = FilterBank::load(&bank)?;
            let mosaic = match load(&input)? {
                Raster::Gray(g) => g,
                Raster::Rgb(_) => {
                    return Err(Error::InvalidArgument(format!(
                        "{} is a color image; expected a single-channel RGGB mosaic",
                        input.display()
                    )))
                }
            };
            save_rgb(&out, &demosaic(&bank, &mosaic)?)
        }
        Command::Montage { bank, out, stddev } => {
            let mode = if stddev {
                MontageMode::Stddev
            } else {
                MontageMode::Coefficients
            };
            save(&out, &FilterBank::load(&bank)?.render_montage(mode)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = std::env::var("BLADE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                eprintln!("warning: could not size the thread pool: {e}");
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
