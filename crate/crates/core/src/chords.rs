//! Pin placement on the region boundary, enumeration of the discrete chord
//! set, the wrap-around chord metric with its neighborhoods, and per-chord
//! geometry (rasterized pixel coverage, span, direction).

use crate::error::{Error, Result};
use crate::raster::{GradientField, Region, RegionShape};

const NO_CHORD: u32 = u32::MAX;

/// Pins uniformly spaced along the region boundary, in sub-image pixel
/// coordinates.
#[derive(Debug, Clone)]
pub struct PinLayout {
    count: u32,
    shape: RegionShape,
    positions: Vec<(f64, f64)>,
    center: (f64, f64),
    radius: f64,
}

impl PinLayout {
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn shape(&self) -> RegionShape {
        self.shape
    }

    pub fn position(&self, pin: u32) -> (f64, f64) {
        self.positions[pin as usize]
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Places `count` pins on the region boundary.
///
/// On a circle, pin `t` sits at angle `2*pi*t / count` from the positive
/// x-axis. On a square, pins are spaced uniformly by arc length along the
/// perimeter, measured from the top-left corner and offset by half a spacing
/// so no pin lands on a corner.
pub fn place_pins(count: u32, shape: RegionShape, region: &Region) -> Result<PinLayout> {
    if count < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 pins, got {count}"
        )));
    }
    let r = f64::from(region.radius());
    let center = (r, r);
    let positions = match shape {
        RegionShape::Circle => (0..count)
            .map(|t| {
                let angle = std::f64::consts::TAU * f64::from(t) / f64::from(count);
                (r + r * angle.cos(), r + r * angle.sin())
            })
            .collect(),
        RegionShape::Square => {
            let side = 2.0 * r;
            let spacing = 4.0 * side / f64::from(count);
            (0..count)
                .map(|t| {
                    let arc = (f64::from(t) + 0.5) * spacing;
                    walk_square_perimeter(arc, side)
                })
                .collect()
        }
    };
    Ok(PinLayout {
        count,
        shape,
        positions,
        center,
        radius: r,
    })
}

/// Point at arc length `arc` along the square perimeter, walking clockwise in
/// image coordinates from the top-left corner.
fn walk_square_perimeter(arc: f64, side: f64) -> (f64, f64) {
    if arc < side {
        (arc, 0.0)
    } else if arc < 2.0 * side {
        (side, arc - side)
    } else if arc < 3.0 * side {
        (side - (arc - 2.0 * side), side)
    } else {
        (0.0, side - (arc - 3.0 * side))
    }
}

/// A chord between two pins, `i < j`. Ids densely index the enumeration
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chord {
    pub id: u32,
    pub i: u32,
    pub j: u32,
}

/// Cached geometry for one enumerated chord.
#[derive(Debug, Clone)]
pub struct ChordGeometry {
    /// Dense region indices of covered inside pixels.
    pub pixels: Vec<u32>,
    /// Wrap-around pin distance of the endpoints.
    pub span: u32,
    /// Unit direction between the (unrounded) pin positions.
    pub direction: (f64, f64),
}

/// The enumerated chord set with lookup structures.
///
/// Built once, then immutable; every query is read-only.
#[derive(Debug, Clone)]
pub struct ChordSpace {
    layout: PinLayout,
    chords: Vec<Chord>,
    geometry: Vec<ChordGeometry>,
    pair_index: Vec<u32>,
    from_pin: Vec<Vec<(u32, u32)>>,
}

impl ChordSpace {
    /// Enumerates all pin pairs `i < j` with span at least `min_span`,
    /// caching geometry for each retained chord. On square layouts, pairs
    /// lying on the same boundary side are excluded.
    pub fn build(layout: PinLayout, region: &Region, min_span: u32) -> ChordSpace {
        let pin_count = layout.count;
        let mut chords = Vec::new();
        let mut geometry = Vec::new();
        let mut pair_index = vec![NO_CHORD; (pin_count * pin_count) as usize];
        let mut from_pin = vec![Vec::new(); pin_count as usize];
        for i in 0..pin_count {
            for j in (i + 1)..pin_count {
                let span = chord_span(i, j, pin_count);
                if span < min_span {
                    continue;
                }
                if layout.shape == RegionShape::Square && same_square_side(&layout, i, j) {
                    continue;
                }
                let id = chords.len() as u32;
                let pixels = rasterize_chord(i, j, &layout, region);
                let (ax, ay) = layout.positions[i as usize];
                let (bx, by) = layout.positions[j as usize];
                let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
                let direction = ((bx - ax) / len, (by - ay) / len);
                chords.push(Chord { id, i, j });
                geometry.push(ChordGeometry {
                    pixels,
                    span,
                    direction,
                });
                pair_index[(i * pin_count + j) as usize] = id;
                from_pin[i as usize].push((j, id));
                from_pin[j as usize].push((i, id));
            }
        }
        // The push order above leaves each per-pin list sorted by
        // destination, which the samplers rely on for tie-breaking.
        ChordSpace {
            layout,
            chords,
            geometry,
            pair_index,
            from_pin,
        }
    }

    pub fn layout(&self) -> &PinLayout {
        &self.layout
    }

    /// Number of enumerated chords.
    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }

    pub fn chords(&self) -> &[Chord] {
        &self.chords
    }

    pub fn chord(&self, id: u32) -> Chord {
        self.chords[id as usize]
    }

    pub fn geometry(&self, id: u32) -> &ChordGeometry {
        &self.geometry[id as usize]
    }

    pub fn geometries(&self) -> &[ChordGeometry] {
        &self.geometry
    }

    /// Id of the chord between two pins, if it was enumerated.
    pub fn find(&self, a: u32, b: u32) -> Option<u32> {
        if a == b || a >= self.layout.count || b >= self.layout.count {
            return None;
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        match self.pair_index[(i * self.layout.count + j) as usize] {
            NO_CHORD => None,
            id => Some(id),
        }
    }

    /// Chords incident to `pin` as `(destination, chord id)`, sorted by
    /// destination.
    pub fn chords_from_pin(&self, pin: u32) -> &[(u32, u32)] {
        &self.from_pin[pin as usize]
    }

    /// Ids of all enumerated chords within metric distance `eps` of the
    /// given chord, including the chord itself. Sorted ascending.
    pub fn neighborhood(&self, id: u32, eps: u32) -> Vec<u32> {
        let Chord { i, j, .. } = self.chords[id as usize];
        let p = i64::from(self.layout.count);
        let e = i64::from(eps);
        let mut out = Vec::with_capacity(((2 * e + 1) * (2 * e + 1)) as usize);
        for du in -e..=e {
            for dv in -e..=e {
                let a = (i64::from(i) + du).rem_euclid(p) as u32;
                let b = (i64::from(j) + dv).rem_euclid(p) as u32;
                if a == b {
                    continue;
                }
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                let candidate = self.pair_index[(a * self.layout.count + b) as usize];
                if candidate != NO_CHORD {
                    out.push(candidate);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Both pins lie on the same side line of the square boundary, so the chord
/// runs along the border and is excluded from the optimization.
fn same_square_side(layout: &PinLayout, a: u32, b: u32) -> bool {
    let side = 2.0 * layout.radius;
    let (ax, ay) = layout.positions[a as usize];
    let (bx, by) = layout.positions[b as usize];
    (ax == 0.0 && bx == 0.0)
        || (ax == side && bx == side)
        || (ay == 0.0 && by == 0.0)
        || (ay == side && by == side)
}

/// Wrap-around pin distance between chord endpoints:
/// `min(|i - j|, count - |i - j|)`.
pub fn chord_span(i: u32, j: u32, pin_count: u32) -> u32 {
    let d = i.abs_diff(j);
    d.min(pin_count - d)
}

/// Metric distance between two chords: the minimal L-infinity distance over
/// the equivalence classes generated by endpoint swap and shifts by the pin
/// count. Both chords must use pin indices below `pin_count`.
pub fn chord_distance(a: (u32, u32), b: (u32, u32), pin_count: u32) -> u32 {
    let p = i64::from(pin_count);
    let (i1, j1) = (i64::from(a.0), i64::from(a.1));
    let (i2, j2) = (i64::from(b.0), i64::from(b.1));
    let mut best = i64::MAX;
    for (x, y) in [(i1, j1), (j1, i1)] {
        for sx in [-p, 0, p] {
            for sy in [-p, 0, p] {
                let d = (x + sx - i2).abs().max((y + sy - j2).abs());
                best = best.min(d);
            }
        }
    }
    best as u32
}

/// Inside pixels covered by the chord between two pins, as dense region
/// indices. Pin positions are rounded to the nearest pixel centers and the
/// walk always starts from the lower pin id, so the result depends only on
/// the unordered pair.
pub fn rasterize_chord(a: u32, b: u32, layout: &PinLayout, region: &Region) -> Vec<u32> {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    let (ax, ay) = layout.positions[a as usize];
    let (bx, by) = layout.positions[b as usize];
    let p0 = (ax.round() as i64, ay.round() as i64);
    let p1 = (bx.round() as i64, by.round() as i64);
    let mut pixels = Vec::new();
    for (x, y) in line_pixels(p0, p1) {
        if x < 0 || y < 0 {
            continue;
        }
        if let Some(idx) = region.index_of(x as u32, y as u32) {
            pixels.push(idx);
        }
    }
    pixels
}

/// 8-connected line between two lattice points: walks the major axis and
/// rounds the minor coordinate (halves away from zero).
pub(crate) fn line_pixels(p0: (i64, i64), p1: (i64, i64)) -> Vec<(i64, i64)> {
    let dx = p1.0 - p0.0;
    let dy = p1.1 - p0.1;
    let steps = dx.abs().max(dy.abs());
    if steps == 0 {
        return vec![p0];
    }
    let mut out = Vec::with_capacity(steps as usize + 1);
    if dx.abs() >= dy.abs() {
        let sx = dx.signum();
        for t in 0..=steps {
            out.push((p0.0 + t * sx, p0.1 + div_round(t * dy, dx.abs())));
        }
    } else {
        let sy = dy.signum();
        for t in 0..=steps {
            out.push((p0.0 + div_round(t * dx, dy.abs()), p0.1 + t * sy));
        }
    }
    out
}

/// Rounds `num / den` to the nearest integer, halves toward positive
/// infinity. `den` must be positive.
fn div_round(num: i64, den: i64) -> i64 {
    (2 * num + den).div_euclid(2 * den)
}

/// Mean cross-product magnitude between the chord direction and the gradient
/// at each covered pixel: the average of `|gx * ey - gy * ex|`.
pub fn edge_consistency(
    direction: (f64, f64),
    pixels: &[u32],
    grad: &GradientField,
    region: &Region,
) -> Result<f64> {
    if pixels.is_empty() {
        return Err(Error::EmptyChord);
    }
    let (ex, ey) = direction;
    let sum: f64 = pixels
        .iter()
        .map(|&idx| {
            let (x, y) = region.position_of(idx);
            (grad.gx(x, y) * ey - grad.gy(x, y) * ex).abs()
        })
        .sum();
    Ok(sum / pixels.len() as f64)
}

impl ChordSpace {
    /// Edge consistency of every enumerated chord. Chords covering no inside
    /// pixels get consistency 0.
    pub fn edge_consistencies(&self, grad: &GradientField, region: &Region) -> Vec<f64> {
        self.geometry
            .iter()
            .map(|g| {
                if g.pixels.is_empty() {
                    0.0
                } else {
                    edge_consistency(g.direction, &g.pixels, grad, region)
                        .expect("nonempty pixel list")
                }
            })
            .collect()
    }
}
