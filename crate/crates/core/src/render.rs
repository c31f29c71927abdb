//! Draws chord selections onto a high-resolution canvas and exports pin
//! sequences for physical reproduction.

use std::io::Write;
use std::path::Path;

use crate::chords::{line_pixels, ChordSpace, PinLayout};
use crate::error::{Error, Result};
use crate::raster::{GrayImage, RegionShape};
use crate::sampler::{ChordSelection, PinSequence};

/// Output canvas configuration. The canvas is square with an odd side so a
/// center pixel exists; chords composite with `min`, so crossings are not
/// darker and redrawing is a no-op.
#[derive(Debug, Clone, Copy)]
pub struct RenderConfig {
    pub output_size: u32,
    pub line_value: u8,
    pub background: u8,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            output_size: 1001,
            line_value: 0,
            background: 255,
        }
    }
}

impl RenderConfig {
    fn validate(&self) -> Result<()> {
        if self.output_size % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "output size must be odd, got {}",
                self.output_size
            )));
        }
        if self.line_value >= self.background {
            return Err(Error::InvalidParameter(format!(
                "line value {} must be darker than background {}",
                self.line_value, self.background
            )));
        }
        Ok(())
    }
}

struct Canvas {
    image: GrayImage,
    scale: f64,
    center_in: (f64, f64),
    center_out: f64,
    line_value: u8,
}

impl Canvas {
    fn new(layout: &PinLayout, config: &RenderConfig) -> Canvas {
        let size = config.output_size;
        let center_out = f64::from((size - 1) / 2);
        let scale = if layout.radius() > 0.0 {
            center_out / layout.radius()
        } else {
            1.0
        };
        Canvas {
            image: GrayImage::filled(size, size, config.background),
            scale,
            center_in: layout.center(),
            center_out,
            line_value: config.line_value,
        }
    }

    fn project(&self, (x, y): (f64, f64)) -> (i64, i64) {
        let px = (x - self.center_in.0) * self.scale + self.center_out;
        let py = (y - self.center_in.1) * self.scale + self.center_out;
        (px.round() as i64, py.round() as i64)
    }

    fn draw(&mut self, a: (f64, f64), b: (f64, f64)) {
        let size = i64::from(self.image.width());
        for (x, y) in line_pixels(self.project(a), self.project(b)) {
            if (0..size).contains(&x) && (0..size).contains(&y) {
                let (x, y) = (x as u32, y as u32);
                let value = self.image.get(x, y).min(self.line_value);
                self.image.set(x, y, value);
            }
        }
    }
}

/// Renders a connected pin sequence as 1-pixel chords on the scaled canvas.
pub fn render_pin_sequence(
    seq: &PinSequence,
    layout: &PinLayout,
    config: &RenderConfig,
) -> Result<GrayImage> {
    config.validate()?;
    for &pin in seq.pins() {
        if pin >= layout.count() {
            return Err(Error::InvalidParameter(format!(
                "pin {pin} out of range for {} pins",
                layout.count()
            )));
        }
    }
    let mut canvas = Canvas::new(layout, config);
    for pair in seq.pins().windows(2) {
        canvas.draw(layout.position(pair[0]), layout.position(pair[1]));
    }
    Ok(canvas.image)
}

/// Renders a disconnected chord selection.
pub fn render_chord_selection(
    selection: &ChordSelection,
    space: &ChordSpace,
    config: &RenderConfig,
) -> Result<GrayImage> {
    config.validate()?;
    let layout = space.layout();
    let mut canvas = Canvas::new(layout, config);
    for &id in selection.chords() {
        if id as usize >= space.len() {
            return Err(Error::InvalidParameter(format!(
                "chord {id} out of range for {} chords",
                space.len()
            )));
        }
        let chord = space.chord(id);
        canvas.draw(layout.position(chord.i), layout.position(chord.j));
    }
    Ok(canvas.image)
}

/// Writes a pin sequence as plain text: a `P <pincount> <shape>` header, then
/// one pin index per line (ASCII, LF line endings).
pub fn export_sequence(seq: &PinSequence, layout: &PinLayout, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    writeln!(out, "P {} {}", layout.count(), layout.shape().as_str()).map_err(io_err)?;
    for &pin in seq.pins() {
        writeln!(out, "{pin}").map_err(io_err)?;
    }
    std::fs::write(path, out).map_err(io_err)
}

/// Reads a sequence file written by [`export_sequence`], returning the
/// sequence with the pin count and shape from the header.
pub fn import_sequence(path: &Path) -> Result<(PinSequence, u32, RegionShape)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::SequenceParse("empty file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("P") {
        return Err(Error::SequenceParse(format!("bad header {header:?}")));
    }
    let count: u32 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::SequenceParse(format!("bad pin count in {header:?}")))?;
    let shape: RegionShape = parts
        .next()
        .ok_or_else(|| Error::SequenceParse(format!("missing shape in {header:?}")))?
        .parse()?;
    let mut pins = Vec::new();
    for line in lines {
        let pin: u32 = line
            .trim()
            .parse()
            .map_err(|_| Error::SequenceParse(format!("bad pin index {line:?}")))?;
        if pin >= count {
            return Err(Error::SequenceParse(format!(
                "pin {pin} out of range for {count} pins"
            )));
        }
        pins.push(pin);
    }
    Ok((PinSequence::new(pins), count, shape))
}
