//! Command-line entry point: `run` generates one painting end to end,
//! `bench` compares the sampling strategies over a corpus of images.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use threadtone::{
    crop_region, estimate_chord_count, evaluate_corpus, evaluate_pair, export_sequence,
    load_grayscale, normalize_fitness, prepare, reconstruct, render_chord_selection,
    render_pin_sequence, sample_connected, sample_disconnected, sample_greedy_baseline,
    GrayImage, SamplerKind,
};

use config::{resolve, resolve_opt, FileConfig, ParamArgs, Settings};

#[derive(Parser)]
#[command(
    name = "threadtone",
    about = "Generates string-art paintings: an ordered pin sequence whose chords approximate an image",
    version
)]
enum Cli {
    /// Generate a painting and pin sequence from one input image
    Run(RunArgs),
    /// Compare greedy, connected and disconnected sampling over a corpus
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Input image (PNG, PGM or JPEG)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Importance mask matching the cropped size; values above 127 double
    /// the pixel weight
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Crop center x in input pixels [default: image center]
    #[arg(long)]
    center_x: Option<u32>,
    /// Crop center y in input pixels [default: image center]
    #[arg(long)]
    center_y: Option<u32>,
    /// Crop radius (circle) or half side length (square) [default: largest
    /// radius that fits the center]
    #[arg(long)]
    radius: Option<u32>,
    /// Painting output image [default: painting.png]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pin sequence output file [default: painting-pins.txt]
    #[arg(long)]
    out_seq: Option<PathBuf>,
    /// Error-map output image (written only when given)
    #[arg(long)]
    out_errmap: Option<PathBuf>,
    /// Fitness table output file (written only when given)
    #[arg(long)]
    out_fitness: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Directory of input images (PNG, PGM or JPEG)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// CSV report output [default: report.csv]
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Plain-text report output [default: report.txt]
    #[arg(long)]
    out_table: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli {
        Cli::Run(args) => run(args),
        Cli::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let file = FileConfig::load(args.params.config.as_deref())?;
    let settings = Settings::merge(&args.params, &file).context("validating configuration")?;
    let input: Option<PathBuf> = resolve_opt(args.input, &file, "input")?;
    let Some(input) = input else {
        bail!("validating configuration: --input is required");
    };
    let mask_path: Option<PathBuf> = resolve_opt(args.mask, &file, "mask")?;
    let center_x = resolve_opt(args.center_x, &file, "center-x")?;
    let center_y = resolve_opt(args.center_y, &file, "center-y")?;
    let radius = resolve_opt(args.radius, &file, "radius")?;
    let center = match (center_x, center_y) {
        (Some(x), Some(y)) => Some((x, y)),
        (None, None) => None,
        _ => bail!("validating configuration: --center-x and --center-y must be given together"),
    };
    let out: PathBuf = resolve(args.out, &file, "out", PathBuf::from("painting.png"))?;
    let out_seq: PathBuf =
        resolve(args.out_seq, &file, "out-seq", PathBuf::from("painting-pins.txt"))?;
    let out_errmap: Option<PathBuf> = resolve_opt(args.out_errmap, &file, "out-errmap")?;
    let out_fitness: Option<PathBuf> = resolve_opt(args.out_fitness, &file, "out-fitness")?;

    let image = load_grayscale(&input).context("loading input image")?;
    let (cropped, region) = crop_region(&image, settings.params.shape, center, radius)
        .context("cropping region")?;
    let mask = mask_path
        .map(|p| load_grayscale(&p))
        .transpose()
        .context("loading importance mask")?;

    let prepared = prepare(&cropped, &region, mask.as_ref(), &settings.params)
        .context("assembling the system")?;
    let (fitness, convergence) = prepared
        .solve(&settings.params)
        .context("solving chord fitness")?;
    let k = settings
        .chords
        .unwrap_or_else(|| estimate_chord_count(&cropped, &region));
    println!(
        "pins: {}, shape: {}, sampler: {}",
        settings.params.pins,
        settings.params.shape,
        settings.sampler_kind.as_str()
    );
    println!(
        "chords: k = {}{}",
        k,
        if settings.chords.is_none() { " (auto)" } else { "" }
    );
    println!(
        "solver: {} iterations, relative residual {:.3e}",
        convergence.iterations, convergence.relative_residual
    );

    let layout = prepared.space.layout();
    let painting = match settings.sampler_kind {
        SamplerKind::Connected => {
            let mut nf = normalize_fitness(&fitness, settings.sampler.temperature)
                .context("normalizing fitness")?;
            let seq = sample_connected(
                &mut nf,
                &prepared.space,
                k,
                settings.sampler.start_pin,
                settings.sampler.eps,
            )
            .context("sampling chords")?;
            export_sequence(&seq, layout, &out_seq).context("writing pin sequence")?;
            println!("sequence: {} pins -> {}", seq.len(), out_seq.display());
            render_pin_sequence(&seq, layout, &settings.render).context("rendering painting")?
        }
        SamplerKind::Greedy => {
            let outcome = sample_greedy_baseline(
                &prepared.inverted,
                &region,
                &prepared.space,
                k,
                &settings.sampler,
            );
            if outcome.terminated_early {
                println!(
                    "greedy terminated early after {} chords",
                    outcome.sequence.chord_count()
                );
            }
            export_sequence(&outcome.sequence, layout, &out_seq)
                .context("writing pin sequence")?;
            println!(
                "sequence: {} pins -> {}",
                outcome.sequence.len(),
                out_seq.display()
            );
            render_pin_sequence(&outcome.sequence, layout, &settings.render)
                .context("rendering painting")?
        }
        SamplerKind::Disconnected => {
            let mut nf = normalize_fitness(&fitness, settings.sampler.temperature)
                .context("normalizing fitness")?;
            let selection = sample_disconnected(&mut nf, &prepared.space, k, settings.sampler.eps)
                .context("sampling chords")?;
            println!("sequence: none (disconnected chords have no pin order)");
            render_chord_selection(&selection, &prepared.space, &settings.render)
                .context("rendering painting")?
        }
    };

    painting.save(&out).context("writing painting")?;
    println!(
        "painting: {}x{} -> {}",
        painting.width(),
        painting.height(),
        out.display()
    );

    if let Some(path) = out_errmap {
        let (_, error_map) = reconstruct(&prepared.system, &fitness, &region);
        error_map.save(&path).context("writing error map")?;
        println!("error map: {}", path.display());
    }
    if let Some(path) = out_fitness {
        let mut table = String::new();
        let _ = writeln!(table, "# iterations: {}", convergence.iterations);
        let _ = writeln!(
            table,
            "# relative_residual: {:.6e}",
            convergence.relative_residual
        );
        let _ = writeln!(table, "# chord pin_i pin_j fitness");
        for (chord, value) in prepared.space.chords().iter().zip(fitness.values()) {
            let _ = writeln!(table, "{} {} {} {:.6}", chord.id, chord.i, chord.j, value);
        }
        std::fs::write(&path, table)
            .with_context(|| format!("writing fitness table {}", path.display()))?;
        println!("fitness table: {}", path.display());
    }

    let score = evaluate_pair(&cropped, &painting, false).context("evaluating ssim")?;
    println!("ssim: {score:.6}");
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let file = FileConfig::load(args.params.config.as_deref())?;
    let settings = Settings::merge(&args.params, &file).context("validating configuration")?;
    let corpus: Option<PathBuf> = resolve_opt(args.corpus, &file, "corpus")?;
    let Some(corpus) = corpus else {
        bail!("validating configuration: --corpus is required");
    };
    let out_csv: PathBuf = resolve(args.out_csv, &file, "out-csv", PathBuf::from("report.csv"))?;
    let out_table: PathBuf =
        resolve(args.out_table, &file, "out-table", PathBuf::from("report.txt"))?;

    let images = load_corpus(&corpus).context("reading corpus")?;
    if images.is_empty() {
        eprintln!("warning: no images found in {}", corpus.display());
    }
    let report = evaluate_corpus(
        &images,
        settings.chords,
        &settings.params,
        &settings.sampler,
        &settings.render,
    )
    .context("evaluating corpus")?;

    std::fs::write(&out_csv, report.to_csv())
        .with_context(|| format!("writing {}", out_csv.display()))?;
    std::fs::write(&out_table, report.to_table())
        .with_context(|| format!("writing {}", out_table.display()))?;
    print!("{}", report.to_table());
    println!("reports: {} and {}", out_csv.display(), out_table.display());
    Ok(())
}

fn load_corpus(dir: &PathBuf) -> Result<Vec<(String, GrayImage)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|path| {
            path.extension()
                .and_then(|e| e.to_str())
                .map(|e| {
                    matches!(
                        e.to_ascii_lowercase().as_str(),
                        "png" | "pgm" | "pnm" | "jpg" | "jpeg"
                    )
                })
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            let image =
                load_grayscale(&path).with_context(|| format!("loading {}", path.display()))?;
            Ok((name, image))
        })
        .collect()
}
