//! Flag definitions shared by the subcommands, the key=value config file,
//! and the merge of the two onto the documented defaults. Precedence is
//! flags over config file over defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use threadtone::{Params, RegionShape, RenderConfig, SamplerKind, SamplerParams};

/// Pipeline and sampling flags common to `run` and `bench`. Omitted flags
/// fall back to the config file, then to the documented default.
#[derive(Debug, clap::Args)]
pub struct ParamArgs {
    /// Region shape: circle or square [default: circle]
    #[arg(long)]
    pub shape: Option<String>,
    /// Number of pins on the boundary [default: 300]
    #[arg(long)]
    pub pins: Option<u32>,
    /// Chord budget; omitted, it is estimated from the average gray level
    #[arg(long)]
    pub chords: Option<usize>,
    /// Target blend: 0 uses inverted gray values, 1 uses gradient magnitude
    /// [default: 0]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the short-chord regularizer [default: 5]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Weight of the edge-consistency regularizer [default: 10]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Sharpness temperature of the fitness normalization [default: 30]
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Error-diffusion neighborhood radius in pin units [default: 2]
    #[arg(long)]
    pub eps: Option<u32>,
    /// Sampling strategy: connected, disconnected or greedy
    /// [default: connected]
    #[arg(long)]
    pub sampler: Option<String>,
    /// First pin of the sequence [default: 0, or derived from --seed]
    #[arg(long)]
    pub start_pin: Option<u32>,
    /// Seed for the randomized start pin; ignored when --start-pin is given
    #[arg(long)]
    pub seed: Option<u64>,
    /// Side length of the square output canvas, must be odd [default: 1001]
    #[arg(long)]
    pub out_size: Option<u32>,
    /// Solver tolerance on the relative residual [default: 1e-6]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Solver iteration cap [default: 500]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Chords spanning fewer pins are not enumerated [default: 1]
    #[arg(long)]
    pub min_span: Option<u32>,
    /// Minimum span the greedy baseline accepts [default: 5]
    #[arg(long)]
    pub min_loop_span: Option<u32>,
    /// Gray-value reduction the greedy baseline applies [default: 15]
    #[arg(long)]
    pub reduction: Option<u8>,
    /// Key=value config file; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "input",
    "mask",
    "center-x",
    "center-y",
    "radius",
    "shape",
    "pins",
    "chords",
    "alpha",
    "beta",
    "gamma",
    "temperature",
    "eps",
    "sampler",
    "start-pin",
    "seed",
    "out",
    "out-seq",
    "out-errmap",
    "out-fitness",
    "out-size",
    "tol",
    "max-iter",
    "min-span",
    "min-loop-span",
    "reduction",
    "corpus",
    "out-csv",
    "out-table",
];

/// Parsed key=value config file. Keys mirror the long flag names; blank
/// lines and `#` comments are skipped.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (number, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "config file {} line {}: expected key=value, got {line:?}",
                    path.display(),
                    number + 1
                );
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!(
                    "config file {} line {}: unknown key {key:?}",
                    path.display(),
                    number + 1
                );
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(value) => Ok(Some(value)),
                Err(err) => bail!("config key {key}: cannot parse {raw:?}: {err}"),
            },
        }
    }
}

/// `flag` wins, then the config file, then the default.
pub fn resolve<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    Ok(flag.or(file.get(key)?).unwrap_or(default))
}

/// Like [`resolve`] but without a default.
pub fn resolve_opt<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    Ok(flag.or(file.get(key)?))
}

/// Fully merged pipeline settings shared by the subcommands.
#[derive(Debug)]
pub struct Settings {
    pub params: Params,
    pub sampler: SamplerParams,
    pub sampler_kind: SamplerKind,
    pub chords: Option<usize>,
    pub render: RenderConfig,
}

impl Settings {
    pub fn merge(args: &ParamArgs, file: &FileConfig) -> Result<Settings> {
        let defaults = Params::default();
        let shape_name: String =
            resolve(args.shape.clone(), file, "shape", "circle".to_string())?;
        let shape: RegionShape = shape_name.parse()?;
        let params = Params {
            pins: resolve(args.pins, file, "pins", defaults.pins)?,
            shape,
            alpha: resolve(args.alpha, file, "alpha", defaults.alpha)?,
            beta: resolve(args.beta, file, "beta", defaults.beta)?,
            gamma: resolve(args.gamma, file, "gamma", defaults.gamma)?,
            min_span: resolve(args.min_span, file, "min-span", defaults.min_span)?,
            tol: resolve(args.tol, file, "tol", defaults.tol)?,
            max_iter: resolve(args.max_iter, file, "max-iter", defaults.max_iter)?,
        };
        params.validate()?;

        let sampler_defaults = SamplerParams::default();
        let seed = resolve_opt(args.seed, file, "seed")?;
        let explicit_start = resolve_opt(args.start_pin, file, "start-pin")?;
        let start_pin = match (explicit_start, seed) {
            (Some(pin), _) => pin,
            (None, Some(seed)) => (splitmix64(seed) % u64::from(params.pins)) as u32,
            (None, None) => 0,
        };
        if start_pin >= params.pins {
            bail!("start pin {start_pin} out of range for {} pins", params.pins);
        }
        let sampler = SamplerParams {
            temperature: resolve(
                args.temperature,
                file,
                "temperature",
                sampler_defaults.temperature,
            )?,
            eps: resolve(args.eps, file, "eps", sampler_defaults.eps)?,
            start_pin,
            min_loop_span: resolve(
                args.min_loop_span,
                file,
                "min-loop-span",
                sampler_defaults.min_loop_span,
            )?,
            reduction: resolve(args.reduction, file, "reduction", sampler_defaults.reduction)?,
        };
        if sampler.temperature <= 0.0 || !sampler.temperature.is_finite() {
            bail!("temperature must be positive, got {}", sampler.temperature);
        }

        let sampler_name: String =
            resolve(args.sampler.clone(), file, "sampler", "connected".to_string())?;
        let sampler_kind: SamplerKind = sampler_name.parse()?;

        let render_defaults = RenderConfig::default();
        let render = RenderConfig {
            output_size: resolve(args.out_size, file, "out-size", render_defaults.output_size)?,
            ..render_defaults
        };
        if render.output_size % 2 == 0 {
            bail!("output size must be odd, got {}", render.output_size);
        }

        Ok(Settings {
            params,
            sampler,
            sampler_kind,
            chords: resolve_opt(args.chords, file, "chords")?,
            render,
        })
    }
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
