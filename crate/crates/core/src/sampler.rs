//! Converts the fitness vector into a drawable chord selection: connected
//! error-diffusion sampling, disconnected priority sampling, and the greedy
//! pixel-coverage baseline.

use crate::chords::ChordSpace;
use crate::error::{Error, Result};
use crate::raster::{GrayImage, Region};
use crate::solver::FitnessVector;

/// Sampling knobs. Defaults: temperature 30, neighborhood radius 2, start
/// pin 0, greedy loop exclusion at span 5 with pixel reduction 15.
#[derive(Debug, Clone, Copy)]
pub struct SamplerParams {
    /// Sharpness temperature of the fitness normalization.
    pub temperature: f64,
    /// Chord-space radius for error diffusion.
    pub eps: u32,
    /// First pin of connected sequences.
    pub start_pin: u32,
    /// Minimum span the greedy baseline accepts.
    pub min_loop_span: u32,
    /// Gray-value decrement the greedy baseline applies to covered pixels.
    pub reduction: u8,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams {
            temperature: 30.0,
            eps: 2,
            start_pin: 0,
            min_loop_span: 5,
            reduction: 15,
        }
    }
}

/// Default chord budget from the average inside gray level of the
/// (pre-inversion) input: `500 + 10 * (255 - avg)`, rounded to nearest.
pub fn estimate_chord_count(img: &GrayImage, region: &Region) -> usize {
    let sum: u64 = region
        .inside_positions()
        .iter()
        .map(|&(x, y)| u64::from(img.get(x, y)))
        .sum();
    let avg = sum as f64 / region.pixel_count() as f64;
    (500.0 + 10.0 * (255.0 - avg)).round() as usize
}

/// Per-chord fitness mapped into `(0, 1)`, plus the consumed-chord flags the
/// samplers mutate. Values may drop below zero through diffusion decrements.
#[derive(Debug, Clone)]
pub struct NormalizedFitness {
    values: Vec<f64>,
    used: Vec<bool>,
}

impl NormalizedFitness {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, chord: u32) -> f64 {
        self.values[chord as usize]
    }

    pub fn is_used(&self, chord: u32) -> bool {
        self.used[chord as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Squashes raw fitness into `(0, 1)` with `0.5 * (tanh(f / temperature) + 1)`.
/// Strictly increasing, so the pre-diffusion argmax is preserved.
pub fn normalize_fitness(fitness: &FitnessVector, temperature: f64) -> Result<NormalizedFitness> {
    if temperature <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let values: Vec<f64> = fitness
        .values()
        .iter()
        .map(|&f| 0.5 * ((f / temperature).tanh() + 1.0))
        .collect();
    let used = vec![false; values.len()];
    Ok(NormalizedFitness { values, used })
}

/// Consumes the selected chord and diffuses its error `1 - value` evenly to
/// the other chords within distance `eps`; with no neighbors, nothing is
/// diffused. The total decrement equals the error exactly.
pub fn diffuse_error(nf: &mut NormalizedFitness, space: &ChordSpace, selected: u32, eps: u32) {
    let err = 1.0 - nf.values[selected as usize];
    let neighbors = space.neighborhood(selected, eps);
    let others = neighbors.len().saturating_sub(1);
    if others > 0 {
        let share = err / others as f64;
        for id in neighbors {
            if id != selected {
                nf.values[id as usize] -= share;
            }
        }
    }
    nf.used[selected as usize] = true;
}

/// Ordered pins of a connected painting; `k` chords give `k + 1` pins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PinSequence {
    pins: Vec<u32>,
}

impl PinSequence {
    pub fn new(pins: Vec<u32>) -> Self {
        PinSequence { pins }
    }

    pub fn pins(&self) -> &[u32] {
        &self.pins
    }

    pub fn len(&self) -> usize {
        self.pins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pins.is_empty()
    }

    /// Number of chords the sequence draws.
    pub fn chord_count(&self) -> usize {
        self.pins.len().saturating_sub(1)
    }
}

/// Chord ids picked by the disconnected sampler, in selection order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordSelection {
    chords: Vec<u32>,
}

impl ChordSelection {
    pub fn new(chords: Vec<u32>) -> Self {
        ChordSelection { chords }
    }

    pub fn chords(&self) -> &[u32] {
        &self.chords
    }

    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }
}

/// Samples `k` connected chords: from the current pin, takes the unused
/// enumerated chord with maximum fitness (ties to the smallest destination
/// pin), diffuses its error, and hops to its far pin.
pub fn sample_connected(
    nf: &mut NormalizedFitness,
    space: &ChordSpace,
    k: usize,
    start_pin: u32,
    eps: u32,
) -> Result<PinSequence> {
    if k == 0 {
        return Err(Error::InvalidParameter("chord budget must be at least 1".into()));
    }
    let pin_count = space.layout().count();
    if start_pin >= pin_count {
        return Err(Error::InvalidParameter(format!(
            "start pin {start_pin} out of range for {pin_count} pins"
        )));
    }
    let mut pins = Vec::with_capacity(k + 1);
    pins.push(start_pin);
    let mut current = start_pin;
    for drawn in 0..k {
        // Candidates are sorted by destination, so strict improvement keeps
        // the smallest destination on ties.
        let mut best: Option<(u32, u32, f64)> = None;
        for &(dest, id) in space.chords_from_pin(current) {
            if nf.used[id as usize] {
                continue;
            }
            let value = nf.values[id as usize];
            if best.map_or(true, |(_, _, b)| value > b) {
                best = Some((dest, id, value));
            }
        }
        let Some((dest, id, _)) = best else {
            return Err(Error::PinExhausted {
                pin: current,
                drawn,
                requested: k,
            });
        };
        diffuse_error(nf, space, id, eps);
        pins.push(dest);
        current = dest;
    }
    Ok(PinSequence { pins })
}

/// Samples `k` chords without the connectivity requirement: repeatedly takes
/// the global maximum (ties to the smallest chord id) and diffuses its error.
pub fn sample_disconnected(
    nf: &mut NormalizedFitness,
    space: &ChordSpace,
    k: usize,
    eps: u32,
) -> Result<ChordSelection> {
    if k > space.len() {
        return Err(Error::InvalidParameter(format!(
            "budget {k} exceeds the {} enumerated chords",
            space.len()
        )));
    }
    let mut chords = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(u32, f64)> = None;
        for (id, &value) in nf.values.iter().enumerate() {
            if nf.used[id] {
                continue;
            }
            if best.map_or(true, |(_, b)| value > b) {
                best = Some((id as u32, value));
            }
        }
        let (id, _) = best.expect("k <= chord count leaves an unused chord");
        diffuse_error(nf, space, id, eps);
        chords.push(id);
    }
    Ok(ChordSelection { chords })
}

/// Result of the greedy baseline: the pin sequence actually drawn and
/// whether it stopped before exhausting the budget.
#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub sequence: PinSequence,
    pub terminated_early: bool,
}

/// The prior-art baseline: from the current pin, draws the chord whose
/// covered (already reduced) pixel values sum highest among chords with span
/// at least `min_loop_span`, then reduces every covered pixel by
/// `reduction` (clamped at zero). Stops early once the best sum is zero.
pub fn sample_greedy_baseline(
    inverted: &GrayImage,
    region: &Region,
    space: &ChordSpace,
    k: usize,
    params: &SamplerParams,
) -> GreedyOutcome {
    let mut working: Vec<u8> = region
        .inside_positions()
        .iter()
        .map(|&(x, y)| inverted.get(x, y))
        .collect();
    let start = params.start_pin.min(space.layout().count().saturating_sub(1));
    let mut pins = vec![start];
    let mut current = start;
    let mut terminated_early = false;
    for _ in 0..k {
        let mut best: Option<(u32, u32, u64)> = None;
        for &(dest, id) in space.chords_from_pin(current) {
            let geom = space.geometry(id);
            if geom.span < params.min_loop_span {
                continue;
            }
            let sum: u64 = geom.pixels.iter().map(|&p| u64::from(working[p as usize])).sum();
            if best.map_or(true, |(_, _, b)| sum > b) {
                best = Some((dest, id, sum));
            }
        }
        let Some((dest, id, sum)) = best else {
            terminated_early = true;
            break;
        };
        if sum == 0 {
            terminated_early = true;
            break;
        }
        for &p in &space.geometry(id).pixels {
            let v = &mut working[p as usize];
            *v = v.saturating_sub(params.reduction);
        }
        pins.push(dest);
        current = dest;
    }
    GreedyOutcome {
        sequence: PinSequence { pins },
        terminated_early,
    }
}
