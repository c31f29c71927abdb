//! String-art painting generation: approximates a raster image by an ordered
//! sequence of pins on a circular (or square) board whose connecting chords,
//! drawn as straight lines, reproduce the image.
//!
//! The pipeline has two stages. First, a regularized weighted least-squares
//! solve assigns every possible chord a real-valued fitness so that the
//! chords' summed gray levels reconstruct the (inverted) input. Second, an
//! error-diffusion sampling process selects a budget of chords with high
//! fitness, either as one connected thread or as a free selection; a greedy
//! pixel-coverage baseline is included for comparison. Paintings are
//! rendered at high resolution and scored against the input with SSIM.

pub mod chords;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod render;
pub mod sampler;
pub mod solver;

pub use chords::{
    chord_distance, chord_span, edge_consistency, place_pins, rasterize_chord, Chord,
    ChordGeometry, ChordSpace, PinLayout,
};
pub use error::{Error, Result};
pub use metrics::{
    compare_methods, evaluate_corpus, evaluate_pair, ssim, ImageReport, MethodScore, SamplerKind,
    SsimReport,
};
pub use pipeline::{prepare, Params, Prepared};
pub use raster::{
    build_pixel_weights, build_target, crop_region, gradient_field, invert, load_grayscale,
    GradientField, GrayImage, PixelWeights, Region, RegionShape, TargetVector,
};
pub use render::{
    export_sequence, import_sequence, render_chord_selection, render_pin_sequence, RenderConfig,
};
pub use sampler::{
    diffuse_error, estimate_chord_count, normalize_fitness, sample_connected,
    sample_disconnected, sample_greedy_baseline, ChordSelection, GreedyOutcome,
    NormalizedFitness, PinSequence, SamplerParams,
};
pub use solver::{
    assemble_system, chord_regularizer, reconstruct, solve_fitness, Convergence, FitnessVector,
    SparseSystem,
};
