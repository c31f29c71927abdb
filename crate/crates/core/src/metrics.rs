//! SSIM-based evaluation of paintings against their inputs, including the
//! blurred variant and corpus-level comparison reports.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pipeline::{self, Params};
use crate::raster::{crop_region, GrayImage, Region};
use crate::render::{render_chord_selection, render_pin_sequence, RenderConfig};
use crate::sampler::{
    estimate_chord_count, normalize_fitness, sample_connected, sample_disconnected,
    sample_greedy_baseline, SamplerParams,
};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const SSIM_DYNAMIC_RANGE: f64 = 255.0;

/// Both images are resized to this side length before comparison.
const EVAL_SIZE: u32 = 201;

/// Gaussian sigma of the blurred comparison variant.
const BLUR_SIGMA: f64 = 2.0;

/// Structural similarity between two equally sized images: 11x11 Gaussian
/// window with sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 255, averaged
/// over all fully interior windows.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare {}x{} against {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if (a.width() as usize) < SSIM_WINDOW || (a.height() as usize) < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: a.width(),
            height: a.height(),
            min: SSIM_WINDOW as u32,
        });
    }
    let w = a.width() as usize;
    let h = a.height() as usize;
    let xs: Vec<f64> = a.as_raw().iter().map(|&v| f64::from(v)).collect();
    let ys: Vec<f64> = b.as_raw().iter().map(|&v| f64::from(v)).collect();
    let xx: Vec<f64> = xs.iter().map(|&v| v * v).collect();
    let yy: Vec<f64> = ys.iter().map(|&v| v * v).collect();
    let xy: Vec<f64> = xs.iter().zip(&ys).map(|(&x, &y)| x * y).collect();

    let kernel = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA);
    let (mu_x, ow, oh) = filter_valid(&xs, w, h, &kernel);
    let (mu_y, _, _) = filter_valid(&ys, w, h, &kernel);
    let (e_xx, _, _) = filter_valid(&xx, w, h, &kernel);
    let (e_yy, _, _) = filter_valid(&yy, w, h, &kernel);
    let (e_xy, _, _) = filter_valid(&xy, w, h, &kernel);

    let c1 = (SSIM_K1 * SSIM_DYNAMIC_RANGE).powi(2);
    let c2 = (SSIM_K2 * SSIM_DYNAMIC_RANGE).powi(2);
    let mut total = 0.0;
    for i in 0..ow * oh {
        let mx = mu_x[i];
        let my = mu_y[i];
        let sx = e_xx[i] - mx * mx;
        let sy = e_yy[i] - my * my;
        let sxy = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
            / ((mx * mx + my * my + c1) * (sx + sy + c2));
    }
    Ok(total / (ow * oh) as f64)
}

fn gaussian_kernel(len: usize, sigma: f64) -> Vec<f64> {
    let center = (len as f64 - 1.0) / 2.0;
    let mut kernel: Vec<f64> = (0..len)
        .map(|i| (-((i as f64 - center).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= sum;
    }
    kernel
}

/// Separable valid-mode convolution; shrinks each dimension by the kernel
/// length minus one.
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> (Vec<f64>, usize, usize) {
    let kl = kernel.len();
    let ow = w - kl + 1;
    let mut horizontal = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                acc += k * src[y * w + x + t];
            }
            horizontal[y * ow + x] = acc;
        }
    }
    let oh = h - kl + 1;
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                acc += k * horizontal[(y + t) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    (out, ow, oh)
}

/// Downscales (or upscales) by exact area averaging: each output pixel is
/// the mean of the source rectangle it covers.
pub fn resize_area(img: &GrayImage, out_w: u32, out_h: u32) -> GrayImage {
    let sx = f64::from(img.width()) / f64::from(out_w);
    let sy = f64::from(img.height()) / f64::from(out_h);
    GrayImage::from_fn(out_w, out_h, |ox, oy| {
        let x_start = f64::from(ox) * sx;
        let x_end = x_start + sx;
        let y_start = f64::from(oy) * sy;
        let y_end = y_start + sy;
        let ix0 = x_start.floor() as u32;
        let ix1 = (x_end.ceil() as u32).min(img.width());
        let iy0 = y_start.floor() as u32;
        let iy1 = (y_end.ceil() as u32).min(img.height());
        let mut acc = 0.0;
        for iy in iy0..iy1 {
            let wy = (y_end.min(f64::from(iy) + 1.0) - y_start.max(f64::from(iy))).max(0.0);
            for ix in ix0..ix1 {
                let wx = (x_end.min(f64::from(ix) + 1.0) - x_start.max(f64::from(ix))).max(0.0);
                acc += f64::from(img.get(ix, iy)) * wx * wy;
            }
        }
        (acc / (sx * sy)).round().clamp(0.0, 255.0) as u8
    })
}

/// Gaussian blur with edge replication; the kernel extends to three sigmas.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let radius = (3.0 * sigma).ceil() as i64;
    let kernel = gaussian_kernel(2 * radius as usize + 1, sigma);
    let (w, h) = (i64::from(img.width()), i64::from(img.height()));
    let mut horizontal = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                let sx = (x + t as i64 - radius).clamp(0, w - 1);
                acc += k * f64::from(img.get(sx as u32, y as u32));
            }
            horizontal[(y * w + x) as usize] = acc;
        }
    }
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for (t, &k) in kernel.iter().enumerate() {
            let sy = (i64::from(y) + t as i64 - radius).clamp(0, h - 1);
            acc += k * horizontal[(sy * w + i64::from(x)) as usize];
        }
        acc.round().clamp(0.0, 255.0) as u8
    })
}

/// Compares a painting against its input: both are resized to 201x201 by
/// area averaging and, for the blurred variant, convolved with the same
/// Gaussian before taking SSIM.
pub fn evaluate_pair(input: &GrayImage, painting: &GrayImage, blur: bool) -> Result<f64> {
    let mut a = resize_area(input, EVAL_SIZE, EVAL_SIZE);
    let mut b = resize_area(painting, EVAL_SIZE, EVAL_SIZE);
    if blur {
        a = gaussian_blur(&a, BLUR_SIGMA);
        b = gaussian_blur(&b, BLUR_SIGMA);
    }
    ssim(&a, &b)
}

/// The three sampling strategies under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Greedy,
    Connected,
    Disconnected,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [
        SamplerKind::Greedy,
        SamplerKind::Connected,
        SamplerKind::Disconnected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Greedy => "greedy",
            SamplerKind::Connected => "connected",
            SamplerKind::Disconnected => "disconnected",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(SamplerKind::Greedy),
            "connected" => Ok(SamplerKind::Connected),
            "disconnected" => Ok(SamplerKind::Disconnected),
            other => Err(Error::InvalidParameter(format!(
                "unknown sampler {other:?}, expected greedy, connected or disconnected"
            ))),
        }
    }
}

/// Scores of one method on one image.
#[derive(Debug, Clone)]
pub struct MethodScore {
    pub method: SamplerKind,
    pub chord_count: usize,
    pub ssim_original: f64,
    pub ssim_blurred: f64,
    pub early_termination: bool,
}

/// All method scores for one image, evaluated at the same chord budget.
#[derive(Debug, Clone)]
pub struct ImageReport {
    pub name: String,
    pub chord_budget: usize,
    pub scores: Vec<MethodScore>,
}

impl ImageReport {
    pub fn score(&self, method: SamplerKind) -> Option<&MethodScore> {
        self.scores.iter().find(|s| s.method == method)
    }
}

/// Corpus-level comparison report.
#[derive(Debug, Clone, Default)]
pub struct SsimReport {
    pub images: Vec<ImageReport>,
}

impl SsimReport {
    /// Per-method win counts: how many images each method scores best on.
    /// Ties go to the earlier method in [`SamplerKind::ALL`] order.
    pub fn win_counts(&self, blurred: bool) -> [usize; 3] {
        let mut wins = [0usize; 3];
        for image in &self.images {
            let mut best: Option<(usize, f64)> = None;
            for (idx, kind) in SamplerKind::ALL.iter().enumerate() {
                if let Some(score) = image.score(*kind) {
                    let value = if blurred {
                        score.ssim_blurred
                    } else {
                        score.ssim_original
                    };
                    if best.map_or(true, |(_, b)| value > b) {
                        best = Some((idx, value));
                    }
                }
            }
            if let Some((idx, _)) = best {
                wins[idx] += 1;
            }
        }
        wins
    }

    /// One CSV row per image and method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image,method,chords,ssim_original,ssim_blurred,early_termination\n");
        for image in &self.images {
            for score in &image.scores {
                out.push_str(&format!(
                    "{},{},{},{:.6},{:.6},{}\n",
                    image.name,
                    score.method.as_str(),
                    score.chord_count,
                    score.ssim_original,
                    score.ssim_blurred,
                    score.early_termination
                ));
            }
        }
        out
    }

    /// Human-readable summary table with win counts.
    pub fn to_table(&self) -> String {
        let name_width = self
            .images
            .iter()
            .map(|i| i.name.len())
            .chain(["image".len()])
            .max()
            .unwrap_or(5);
        let mut out = format!(
            "{:<name_width$}  {:>12}  {:>7}  {:>13}  {:>12}  {:>10}\n",
            "image", "method", "chords", "ssim_original", "ssim_blurred", "early_stop"
        );
        for image in &self.images {
            for score in &image.scores {
                out.push_str(&format!(
                    "{:<name_width$}  {:>12}  {:>7}  {:>13.6}  {:>12.6}  {:>10}\n",
                    image.name,
                    score.method.as_str(),
                    score.chord_count,
                    score.ssim_original,
                    score.ssim_blurred,
                    if score.early_termination { "yes" } else { "no" }
                ));
            }
        }
        for (label, blurred) in [("original", false), ("blurred", true)] {
            let wins = self.win_counts(blurred);
            out.push_str(&format!(
                "wins ({label}): greedy {}, connected {}, disconnected {}\n",
                wins[0], wins[1], wins[2]
            ));
        }
        out
    }
}

/// Runs the greedy baseline, the connected sampler and the disconnected
/// sampler at the same chord budget on one prepared image, and scores each
/// painting against the input with and without blur.
pub fn compare_methods(
    name: &str,
    cropped: &GrayImage,
    region: &Region,
    budget: Option<usize>,
    params: &Params,
    sampler: &SamplerParams,
    render_config: &RenderConfig,
) -> Result<ImageReport> {
    let prepared = pipeline::prepare(cropped, region, None, params)?;
    let (fitness, _) = prepared.solve(params)?;
    let k = budget.unwrap_or_else(|| estimate_chord_count(cropped, region));

    let mut scores = Vec::with_capacity(3);

    let greedy = sample_greedy_baseline(&prepared.inverted, region, &prepared.space, k, sampler);
    let painting = render_pin_sequence(&greedy.sequence, prepared.space.layout(), render_config)?;
    scores.push(MethodScore {
        method: SamplerKind::Greedy,
        chord_count: greedy.sequence.chord_count(),
        ssim_original: evaluate_pair(cropped, &painting, false)?,
        ssim_blurred: evaluate_pair(cropped, &painting, true)?,
        early_termination: greedy.terminated_early,
    });

    let mut nf = normalize_fitness(&fitness, sampler.temperature)?;
    let seq = sample_connected(&mut nf, &prepared.space, k, sampler.start_pin, sampler.eps)?;
    let painting = render_pin_sequence(&seq, prepared.space.layout(), render_config)?;
    scores.push(MethodScore {
        method: SamplerKind::Connected,
        chord_count: seq.chord_count(),
        ssim_original: evaluate_pair(cropped, &painting, false)?,
        ssim_blurred: evaluate_pair(cropped, &painting, true)?,
        early_termination: false,
    });

    let mut nf = normalize_fitness(&fitness, sampler.temperature)?;
    let selection = sample_disconnected(&mut nf, &prepared.space, k, sampler.eps)?;
    let painting = render_chord_selection(&selection, &prepared.space, render_config)?;
    scores.push(MethodScore {
        method: SamplerKind::Disconnected,
        chord_count: selection.len(),
        ssim_original: evaluate_pair(cropped, &painting, false)?,
        ssim_blurred: evaluate_pair(cropped, &painting, true)?,
        early_termination: false,
    });

    Ok(ImageReport {
        name: name.to_string(),
        chord_budget: k,
        scores,
    })
}

/// Evaluates a whole corpus: each image is cropped with the default region,
/// compared across all three methods, and merged into one report ordered by
/// image name. Images run in parallel.
pub fn evaluate_corpus(
    images: &[(String, GrayImage)],
    budget: Option<usize>,
    params: &Params,
    sampler: &SamplerParams,
    render_config: &RenderConfig,
) -> Result<SsimReport> {
    let mut sorted: Vec<&(String, GrayImage)> = images.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let reports: Result<Vec<ImageReport>> = sorted
        .par_iter()
        .map(|(name, img)| {
            let (cropped, region) = crop_region(img, params.shape, None, None)?;
            compare_methods(name, &cropped, &region, budget, params, sampler, render_config)
        })
        .collect();
    Ok(SsimReport { images: reports? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_image(width: u32, height: u32, seed: u64) -> GrayImage {
        let mut state = seed;
        GrayImage::from_fn(width, height, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as u8
        })
    }

    /// Naive per-window SSIM with explicit weighted moments, as an oracle
    /// for the separable-filter implementation.
    fn ssim_oracle(a: &GrayImage, b: &GrayImage) -> f64 {
        let window = 11usize;
        let sigma = 1.5f64;
        let mut kernel = vec![0.0; window * window];
        let mut sum = 0.0;
        for y in 0..window {
            for x in 0..window {
                let dx = x as f64 - 5.0;
                let dy = y as f64 - 5.0;
                let v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                kernel[y * window + x] = v;
                sum += v;
            }
        }
        for v in &mut kernel {
            *v /= sum;
        }
        let c1 = (0.01f64 * 255.0).powi(2);
        let c2 = (0.03f64 * 255.0).powi(2);
        let w = a.width() as usize;
        let h = a.height() as usize;
        let mut total = 0.0;
        let mut count = 0usize;
        for wy in 0..=(h - window) {
            for wx in 0..=(w - window) {
                let mut mx = 0.0;
                let mut my = 0.0;
                let mut sxx = 0.0;
                let mut syy = 0.0;
                let mut sxy = 0.0;
                for ky in 0..window {
                    for kx in 0..window {
                        let weight = kernel[ky * window + kx];
                        let xv = f64::from(a.get((wx + kx) as u32, (wy + ky) as u32));
                        let yv = f64::from(b.get((wx + kx) as u32, (wy + ky) as u32));
                        mx += weight * xv;
                        my += weight * yv;
                        sxx += weight * xv * xv;
                        syy += weight * yv * yv;
                        sxy += weight * xv * yv;
                    }
                }
                let vx = sxx - mx * mx;
                let vy = syy - my * my;
                let cxy = sxy - mx * my;
                total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn ssim_of_identical_images_is_one() {
        let img = lcg_image(32, 32, 42);
        let value = ssim(&img, &img).unwrap();
        assert!((value - 1.0).abs() < 1e-12, "{value}");
    }

    #[test]
    fn ssim_of_equal_constants_is_one() {
        let a = GrayImage::filled(20, 20, 70);
        let b = GrayImage::filled(20, 20, 70);
        assert!((ssim(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = lcg_image(24, 24, 1);
        let b = lcg_image(24, 24, 2);
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn ssim_matches_the_naive_reference() {
        for seed in 0..4u64 {
            let a = lcg_image(64, 64, seed * 2 + 1);
            let b = lcg_image(64, 64, seed * 2 + 2);
            let fast = ssim(&a, &b).unwrap();
            let slow = ssim_oracle(&a, &b);
            assert!((fast - slow).abs() < 1e-6, "seed {seed}: {fast} vs {slow}");
        }
    }

    #[test]
    fn ssim_rejects_mismatched_dimensions() {
        let a = GrayImage::filled(20, 20, 0);
        let b = GrayImage::filled(21, 20, 0);
        assert!(matches!(
            ssim(&a, &b).unwrap_err(),
            Error::DimensionMismatch(_)
        ));
    }

    #[test]
    fn integer_ratio_resize_is_a_block_mean() {
        let img = GrayImage::from_fn(402, 402, |x, y| ((x * 7 + y * 13) % 251) as u8);
        let small = resize_area(&img, 201, 201);
        for oy in 0..201u32 {
            for ox in 0..201u32 {
                let s = u32::from(img.get(2 * ox, 2 * oy))
                    + u32::from(img.get(2 * ox + 1, 2 * oy))
                    + u32::from(img.get(2 * ox, 2 * oy + 1))
                    + u32::from(img.get(2 * ox + 1, 2 * oy + 1));
                let expected = (f64::from(s) / 4.0).round() as u8;
                assert_eq!(small.get(ox, oy), expected, "pixel ({ox}, {oy})");
            }
        }
    }

    #[test]
    fn resize_preserves_constant_images() {
        let img = GrayImage::filled(401, 401, 137);
        let small = resize_area(&img, 201, 201);
        assert!(small.as_raw().iter().all(|&v| v == 137));
    }

    #[test]
    fn evaluating_an_image_against_itself_scores_one() {
        let img = lcg_image(401, 401, 9);
        assert!((evaluate_pair(&img, &img, false).unwrap() - 1.0).abs() < 1e-12);
        assert!((evaluate_pair(&img, &img, true).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blur_is_applied_to_both_sides_identically() {
        let a = lcg_image(300, 300, 5);
        // Comparing an image against itself must stay perfect through the
        // blurred path; any asymmetric preprocessing would break this.
        let plain = evaluate_pair(&a, &a, false).unwrap();
        let blurred = evaluate_pair(&a, &a, true).unwrap();
        assert!((plain - 1.0).abs() < 1e-12);
        assert!((blurred - 1.0).abs() < 1e-12);
    }

    #[test]
    fn win_counts_sum_to_the_corpus_size() {
        let mut report = SsimReport::default();
        for i in 0..15 {
            let scores = SamplerKind::ALL
                .iter()
                .enumerate()
                .map(|(idx, &method)| MethodScore {
                    method,
                    chord_count: 100,
                    ssim_original: 0.1 * ((i + idx) % 3) as f64,
                    ssim_blurred: 0.1 * ((i + 2 * idx) % 3) as f64,
                    early_termination: false,
                })
                .collect();
            report.images.push(ImageReport {
                name: format!("img{i:02}"),
                chord_budget: 100,
                scores,
            });
        }
        assert_eq!(report.win_counts(false).iter().sum::<usize>(), 15);
        assert_eq!(report.win_counts(true).iter().sum::<usize>(), 15);
    }

    #[test]
    fn csv_has_one_row_per_image_and_method() {
        let report = SsimReport {
            images: vec![ImageReport {
                name: "sample".into(),
                chord_budget: 10,
                scores: vec![MethodScore {
                    method: SamplerKind::Greedy,
                    chord_count: 8,
                    ssim_original: 0.25,
                    ssim_blurred: 0.5,
                    early_termination: true,
                }],
            }],
        };
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "image,method,chords,ssim_original,ssim_blurred,early_termination"
        );
        assert_eq!(lines[1], "sample,greedy,8,0.250000,0.500000,true");
    }
}
