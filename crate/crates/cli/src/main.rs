use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdmd::background::{fourier_modes, partition_modes};
use rdmd::dmd::{rdmd, save_decomposition, AmplitudeAnchor};
use rdmd::eval::{confusion, f_measure, precision, recall, specificity, write_metrics_csv, ThresholdRow};
use rdmd::linalg::SketchConfig;
use rdmd::pipeline::{
    benchmark_svd, generate_synthetic, load_frame_set, load_masks, numbered_stems, omega_rows, run_bgsub, save_frames,
    save_masks, write_bench_csv, write_omega_csv, Background, BenchCase, InputSource, Rect, RunConfig, SyntheticSpec,
    Threshold, DEFAULT_CHUNK_LENGTH, DEFAULT_OVERSAMPLING, DEFAULT_SUBSPACE_ITERATIONS, DEFAULT_TARGET_RANK,
};
use rdmd::{Error, Result};

/// Randomized dynamic mode decomposition for video background subtraction.
#[derive(Parser, Debug)]
#[command(name = "rdmd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time the full deterministic SVD against the randomized SVD.
    Svd(SvdArgs),
    /// Decompose a frame sequence and dump modes, eigenvalues and the ω table.
    Decompose(DecomposeArgs),
    /// Full background subtraction run.
    Bgsub(BgsubArgs),
    /// Write a synthetic video and its truth masks as PGM files.
    Synth(SynthArgs),
    /// Score masks against truth masks.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SketchArgs {
    /// Target rank
    #[arg(short, long, default_value_t = DEFAULT_TARGET_RANK)]
    k: usize,
    /// Oversampling
    #[arg(short, long, default_value_t = DEFAULT_OVERSAMPLING)]
    p: usize,
    /// Subspace iterations
    #[arg(short, long, default_value_t = DEFAULT_SUBSPACE_ITERATIONS)]
    q: usize,
}

#[derive(Args, Debug)]
struct SvdArgs {
    #[arg(long, default_value_t = 2000)]
    rows: usize,
    #[arg(long, default_value_t = 500)]
    cols: usize,
    /// Target ranks to time
    #[arg(long, value_delimiter = ',', default_value = "20")]
    ranks: Vec<usize>,
    /// Subspace iteration counts to time
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    iterations: Vec<usize>,
    #[arg(short, long, default_value_t = DEFAULT_OVERSAMPLING)]
    p: usize,
    /// Seeds for the test matrices and sketches
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// CSV output; stdout when absent
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Frame glob pattern or directory of PGM files
    #[arg(short, long)]
    frames: String,
    #[command(flatten)]
    sketch: SketchArgs,
    #[arg(long, required = true)]
    seed: u64,
    /// Amplitude anchor: first, median or frame:<i>
    #[arg(long, default_value = "median")]
    anchor: AmplitudeAnchor,
    /// Modes marked as background in the ω table
    #[arg(long, default_value_t = 3)]
    n_background: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BgsubArgs {
    /// Frame glob pattern or directory of PGM files
    #[arg(short, long)]
    frames: String,
    /// Truth mask pattern; enables evaluation and the threshold sweep
    #[arg(long)]
    truth: Option<String>,
    #[arg(long, default_value_t = DEFAULT_CHUNK_LENGTH)]
    chunk_length: usize,
    #[command(flatten)]
    sketch: SketchArgs,
    #[arg(long, required = true)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    n_background: usize,
    #[arg(long, default_value = "median")]
    anchor: AmplitudeAnchor,
    /// Fixed threshold; without it the run sweeps thresholds (needs --truth)
    #[arg(long)]
    tau: Option<f64>,
    /// Number of thresholds in the sweep
    #[arg(long, default_value_t = 51)]
    sweep: usize,
    /// Median filter side; 1 disables filtering
    #[arg(long, default_value_t = 3)]
    median_kernel: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 200)]
    frames: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Drop the moving square
    #[arg(long)]
    no_object: bool,
    /// Amplitude of a travelling-wave texture over the bottom third of the frame
    #[arg(long)]
    texture_amplitude: Option<f64>,
    #[arg(long, default_value_t = 300.0)]
    texture_period: f64,
    #[arg(long, required = true)]
    seed: u64,
    /// Writes `frames/` and `truth/` below this directory
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Predicted mask pattern
    #[arg(long)]
    masks: String,
    /// Truth mask pattern
    #[arg(long)]
    truth: String,
    /// CSV output; stdout when absent
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| Error::Io { path: p.into(), source: e })?),
        None => Box::new(io::stdout()),
    })
}

fn svd(a: SvdArgs) -> Result<()> {
    let mut cases = Vec::new();
    for &k in &a.ranks {
        for &q in &a.iterations {
            cases.push(BenchCase { rows: a.rows, cols: a.cols, k, p: a.p, q });
        }
    }
    let rows = benchmark_svd(&cases, &a.seeds)?;
    write_bench_csv(&rows, output(a.out.as_deref())?)
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let set = load_frame_set(&a.frames)?;
    let cfg = SketchConfig::new(a.sketch.k, a.sketch.p, a.sketch.q, a.seed);
    let dec = rdmd(&set.snapshots, &cfg, a.anchor)?;
    save_decomposition(&dec, &a.out)?;
    let fm = fourier_modes(&dec);
    let part = partition_modes(&fm, a.n_background.min(fm.usable().count()).max(1)).ok();
    let path = a.out.join("omega.csv");
    write_omega_csv(&omega_rows(0, &dec, &fm, part.as_ref()), output(Some(&path))?)?;
    println!("rank={} frames={} out={}", dec.rank(), dec.n_frames, a.out.display());
    Ok(())
}

fn bgsub(a: BgsubArgs) -> Result<()> {
    let input = InputSource::Frames { pattern: a.frames, truth: a.truth };
    let cfg = RunConfig {
        chunk_length: a.chunk_length,
        k: a.sketch.k,
        p: a.sketch.p,
        q: a.sketch.q,
        n_background: a.n_background,
        anchor: a.anchor,
        threshold: match a.tau {
            Some(t) => Threshold::Fixed(t),
            None => Threshold::Sweep { steps: a.sweep },
        },
        median_kernel: a.median_kernel,
        output_dir: Some(a.out),
        ..RunConfig::new(input, a.seed)
    };
    let out = run_bgsub(&cfg)?;
    print!("{}", out.report.render(true));
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut spec = SyntheticSpec::moving_square(a.seed);
    spec.height = a.height;
    spec.width = a.width;
    spec.frames = a.frames;
    spec.noise_sigma = a.noise;
    if a.no_object {
        spec.objects.clear();
    }
    if let Some(amplitude) = a.texture_amplitude {
        let rows = (a.height / 3).max(1);
        let region = Rect { row: a.height - rows, col: 0, height: rows, width: a.width };
        spec.background = Background::Texture { amplitude, period: a.texture_period, wavelength: 16.0, region };
    }
    let (d, truth) = generate_synthetic(&spec)?;
    let stems = numbered_stems(d.frames());
    save_frames(&d, a.out.join("frames"), &stems, 255)?;
    save_masks(&truth, a.out.join("truth"), &stems)?;
    println!("wrote {} frames of {}×{} to {}", d.frames(), d.height(), d.width(), a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let (pred, _) = load_masks(&a.masks)?;
    let (truth, _) = load_masks(&a.truth)?;
    let c = confusion(&pred, &truth)?;
    write_metrics_csv(&[ThresholdRow { tau: f64::NAN, counts: c }], output(a.out.as_deref())?)?;
    eprintln!(
        "recall={:.4} precision={:.4} specificity={:.4} f_measure={:.4}",
        recall(&c).value,
        precision(&c).value,
        specificity(&c).value,
        f_measure(&c).value
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Svd(a) => svd(a),
        Command::Decompose(a) => decompose(a),
        Command::Bgsub(a) => bgsub(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            eprintln!("rdmd: {} error: {e}", kind.label());
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}
