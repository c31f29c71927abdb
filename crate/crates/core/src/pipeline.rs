//! End-to-end orchestration shared by the CLI and the evaluation harness:
//! derives the target and weights from a cropped image, builds the chord
//! space and the sparse system, and solves for the fitness vector.

use crate::chords::{place_pins, ChordSpace};
use crate::error::{Error, Result};
use crate::raster::{
    build_pixel_weights, build_target, gradient_field, invert, GradientField, GrayImage, Region,
    RegionShape,
};
use crate::solver::{
    assemble_system, chord_regularizer, solve_fitness, Convergence, FitnessVector, SparseSystem,
};

/// Pipeline parameters up to the solve. Defaults: 300 pins on a circle,
/// alpha 0, beta 5, gamma 10, span filter 1, solver tolerance 1e-6 with at
/// most 500 iterations.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub pins: u32,
    pub shape: RegionShape,
    /// Blend between inverted gray values (0) and gradient magnitude (1).
    pub alpha: f64,
    /// Weight of the span regularizer term.
    pub beta: f64,
    /// Weight of the edge-consistency regularizer term.
    pub gamma: f64,
    /// Chords with a smaller span are not enumerated.
    pub min_span: u32,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            pins: 300,
            shape: RegionShape::Circle,
            alpha: 0.0,
            beta: 5.0,
            gamma: 10.0,
            min_span: 1,
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

impl Params {
    /// Validates every field range up front so bad configurations fail
    /// before any pixel is touched.
    pub fn validate(&self) -> Result<()> {
        if self.pins < 3 {
            return Err(Error::InvalidParameter(format!(
                "need at least 3 pins, got {}",
                self.pins
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.beta < 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be nonnegative, got {}",
                self.beta
            )));
        }
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        if self.tol <= 0.0 || !self.tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything derived from one cropped input, ready to solve and sample.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub cropped: GrayImage,
    pub inverted: GrayImage,
    pub region: Region,
    pub gradient: GradientField,
    pub space: ChordSpace,
    pub system: SparseSystem,
}

/// Builds the chord space and the sparse system for a cropped image.
pub fn prepare(
    cropped: &GrayImage,
    region: &Region,
    importance: Option<&GrayImage>,
    params: &Params,
) -> Result<Prepared> {
    params.validate()?;
    let inverted = invert(cropped);
    let gradient = gradient_field(&inverted)?;
    let target = build_target(&inverted, &gradient, region, params.alpha)?;
    let weights = build_pixel_weights(region, importance)?;
    let layout = place_pins(params.pins, params.shape, region)?;
    let space = ChordSpace::build(layout, region, params.min_span);
    let spans: Vec<u32> = space.geometries().iter().map(|g| g.span).collect();
    let consistencies = space.edge_consistencies(&gradient, region);
    let regularizer =
        chord_regularizer(&spans, &consistencies, params.pins, params.beta, params.gamma);
    let system = assemble_system(&space, &target, &weights, &regularizer)?;
    Ok(Prepared {
        cropped: cropped.clone(),
        inverted,
        region: region.clone(),
        gradient,
        space,
        system,
    })
}

impl Prepared {
    /// Solves for the fitness vector.
    pub fn solve(&self, params: &Params) -> Result<(FitnessVector, Convergence)> {
        solve_fitness(&self.system, params.tol, params.max_iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::crop_region;

    #[test]
    fn prepare_builds_consistent_dimensions() {
        let img = GrayImage::from_fn(41, 41, |x, y| ((x * 5 + y * 11) % 256) as u8);
        let (cropped, region) = crop_region(&img, RegionShape::Circle, None, None).unwrap();
        let params = Params {
            pins: 24,
            ..Params::default()
        };
        let prepared = prepare(&cropped, &region, None, &params).unwrap();
        assert_eq!(prepared.space.len(), 24 * 23 / 2);
        assert_eq!(prepared.system.pixel_count(), region.pixel_count());
        assert_eq!(prepared.system.chord_count(), prepared.space.len());
        let (fitness, conv) = prepared.solve(&params).unwrap();
        assert_eq!(fitness.len(), prepared.space.len());
        assert!(conv.iterations > 0);
        assert!(fitness.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn invalid_params_fail_before_any_work() {
        let bad = Params {
            alpha: 2.0,
            ..Params::default()
        };
        assert!(bad.validate().is_err());
        let bad = Params {
            pins: 2,
            ..Params::default()
        };
        assert!(bad.validate().is_err());
        let bad = Params {
            tol: 0.0,
            ..Params::default()
        };
        assert!(bad.validate().is_err());
    }
}
