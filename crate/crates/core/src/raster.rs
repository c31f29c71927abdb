//! Image decoding, region cropping, and the per-pixel quantities the
//! optimization consumes: inverted gray values, Sobel gradients, the blended
//! target vector and importance weights.

use std::path::Path;

use crate::error::{Error, Result};

/// Rec. 601 luminance weights used for color-to-gray conversion.
const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Importance masks are thresholded at this gray value; brighter pixels mark
/// the important region.
pub const MASK_THRESHOLD: u8 = 127;

/// Weight assigned to pixels inside the marked important region.
pub const IMPORTANT_WEIGHT: f64 = 2.0;

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    /// All-black image of the given size.
    pub fn new(width: u32, height: u32) -> Self {
        Self::filled(width, height, 0)
    }

    /// Constant image of the given size.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        GrayImage {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    /// Wraps a row-major pixel buffer.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "buffer of {} bytes does not match {}x{} image",
                data.len(),
                width,
                height
            )));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    /// Writes the image to `path`; the format is chosen from the extension
    /// (PNG and PGM are always available).
    pub fn save(&self, path: &Path) -> Result<()> {
        let buffer: image::ImageBuffer<image::Luma<u8>, _> =
            image::ImageBuffer::from_raw(self.width, self.height, self.data.clone())
                .expect("buffer length matches dimensions");
        buffer.save(path).map_err(|source| Error::ImageWrite {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Decodes a raster image as 8-bit grayscale.
///
/// Single-channel inputs pass through unchanged; color inputs are converted
/// with fixed Rec. 601 luminance weights, rounded to the nearest level.
pub fn load_grayscale(path: &Path) -> Result<GrayImage> {
    let read_err = |source| Error::ImageRead {
        path: path.to_path_buf(),
        source,
    };
    let decoded = image::ImageReader::open(path)
        .map_err(|e| read_err(image::ImageError::IoError(e)))?
        .decode()
        .map_err(read_err)?;
    Ok(match decoded {
        image::DynamicImage::ImageLuma8(img) => GrayImage {
            width: img.width(),
            height: img.height(),
            data: img.into_raw(),
        },
        other => {
            let rgb = other.to_rgb8();
            GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
                let p = rgb.get_pixel(x, y);
                luminance(p[0], p[1], p[2])
            })
        }
    })
}

fn luminance(r: u8, g: u8, b: u8) -> u8 {
    (LUMA_R * f64::from(r) + LUMA_G * f64::from(g) + LUMA_B * f64::from(b)).round() as u8
}

/// Boundary shape of the painted region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionShape {
    Circle,
    Square,
}

impl RegionShape {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionShape::Circle => "circle",
            RegionShape::Square => "square",
        }
    }
}

impl std::str::FromStr for RegionShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(RegionShape::Circle),
            "square" => Ok(RegionShape::Square),
            other => Err(Error::InvalidParameter(format!(
                "unknown shape {other:?}, expected circle or square"
            ))),
        }
    }
}

impl std::fmt::Display for RegionShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const NO_PIXEL: u32 = u32::MAX;

/// Pixel membership and dense indexing for the painted region of a cropped
/// sub-image. The region center is at `(radius, radius)` in sub-image
/// coordinates.
///
/// A pixel belongs to a circle region iff its center lies within `radius` of
/// the region center; the square region uses the Chebyshev distance and so
/// covers the whole sub-image.
#[derive(Debug, Clone)]
pub struct Region {
    shape: RegionShape,
    radius: u32,
    side: u32,
    mask: Vec<bool>,
    dense: Vec<u32>,
    positions: Vec<(u32, u32)>,
}

impl Region {
    fn build(shape: RegionShape, radius: u32) -> Self {
        let side = 2 * radius + 1;
        let r = i64::from(radius);
        let mut mask = vec![false; side as usize * side as usize];
        let mut dense = vec![NO_PIXEL; side as usize * side as usize];
        let mut positions = Vec::new();
        for y in 0..side {
            for x in 0..side {
                let dx = i64::from(x) - r;
                let dy = i64::from(y) - r;
                let inside = match shape {
                    RegionShape::Circle => dx * dx + dy * dy <= r * r,
                    RegionShape::Square => true,
                };
                if inside {
                    let flat = (y * side + x) as usize;
                    mask[flat] = true;
                    dense[flat] = positions.len() as u32;
                    positions.push((x, y));
                }
            }
        }
        Region {
            shape,
            radius,
            side,
            mask,
            dense,
            positions,
        }
    }

    pub fn shape(&self) -> RegionShape {
        self.shape
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Side length of the enclosing sub-image, `2 * radius + 1`.
    pub fn side(&self) -> u32 {
        self.side
    }

    /// Region center in sub-image coordinates.
    pub fn center(&self) -> (u32, u32) {
        (self.radius, self.radius)
    }

    /// Number of inside pixels.
    pub fn pixel_count(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_inside(&self, x: u32, y: u32) -> bool {
        x < self.side && y < self.side && self.mask[(y * self.side + x) as usize]
    }

    /// Dense index of an inside pixel, if any.
    #[inline]
    pub fn index_of(&self, x: u32, y: u32) -> Option<u32> {
        if x >= self.side || y >= self.side {
            return None;
        }
        match self.dense[(y * self.side + x) as usize] {
            NO_PIXEL => None,
            idx => Some(idx),
        }
    }

    /// Sub-image coordinates of the inside pixel with the given dense index.
    #[inline]
    pub fn position_of(&self, index: u32) -> (u32, u32) {
        self.positions[index as usize]
    }

    /// Inside pixels in dense-index order.
    pub fn inside_positions(&self) -> &[(u32, u32)] {
        &self.positions
    }
}

/// Crops the square window enclosing the requested region and describes the
/// region inside it.
///
/// When center or radius are omitted they default to the image center and the
/// largest radius that fits there (`floor(min(width, height) / 2)` for
/// odd-sized images).
pub fn crop_region(
    img: &GrayImage,
    shape: RegionShape,
    center: Option<(u32, u32)>,
    radius: Option<u32>,
) -> Result<(GrayImage, Region)> {
    let (cx, cy) = center.unwrap_or((img.width / 2, img.height / 2));
    if cx >= img.width || cy >= img.height {
        return Err(Error::RegionOutOfBounds {
            cx,
            cy,
            radius: radius.unwrap_or(0),
            width: img.width,
            height: img.height,
        });
    }
    let max_fit = cx.min(cy).min(img.width - 1 - cx).min(img.height - 1 - cy);
    let radius = radius.unwrap_or(max_fit);
    if radius > max_fit {
        return Err(Error::RegionOutOfBounds {
            cx,
            cy,
            radius,
            width: img.width,
            height: img.height,
        });
    }
    let side = 2 * radius + 1;
    let (x0, y0) = (cx - radius, cy - radius);
    let sub = GrayImage::from_fn(side, side, |x, y| img.get(x0 + x, y0 + y));
    Ok((sub, Region::build(shape, radius)))
}

/// Reverses every gray value: `v -> 255 - v`.
pub fn invert(img: &GrayImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&v| 255 - v).collect(),
    }
}

/// Per-pixel Sobel gradients with the magnitude rescaled to `[0, 255]`.
#[derive(Debug, Clone)]
pub struct GradientField {
    width: u32,
    height: u32,
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
}

impl GradientField {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn gx(&self, x: u32, y: u32) -> f64 {
        self.gx[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn gy(&self, x: u32, y: u32) -> f64 {
        self.gy[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn magnitude(&self, x: u32, y: u32) -> f64 {
        self.magnitude[(y * self.width + x) as usize]
    }
}

/// Computes the 3x3 Sobel gradient field; borders sample with edge
/// replication. The magnitude is linearly rescaled so its maximum maps to 255
/// (an all-zero field stays zero).
pub fn gradient_field(img: &GrayImage) -> Result<GradientField> {
    if img.width < 3 || img.height < 3 {
        return Err(Error::ImageTooSmall {
            width: img.width,
            height: img.height,
            min: 3,
        });
    }
    let (w, h) = (img.width, img.height);
    let sample = |x: i64, y: i64| -> f64 {
        let x = x.clamp(0, i64::from(w) - 1) as u32;
        let y = y.clamp(0, i64::from(h) - 1) as u32;
        f64::from(img.get(x, y))
    };
    let mut gx = Vec::with_capacity((w * h) as usize);
    let mut gy = Vec::with_capacity((w * h) as usize);
    for y in 0..i64::from(h) {
        for x in 0..i64::from(w) {
            let p = |dx: i64, dy: i64| sample(x + dx, y + dy);
            gx.push(
                (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1)),
            );
            gy.push(
                (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1)),
            );
        }
    }
    let raw: Vec<f64> = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| (a * a + b * b).sqrt())
        .collect();
    let max = raw.iter().cloned().fold(0.0, f64::max);
    let magnitude = if max > 0.0 {
        raw.iter().map(|&v| v * 255.0 / max).collect()
    } else {
        raw
    };
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
    })
}

/// Right-hand side of the reconstruction system, one value per inside pixel.
#[derive(Debug, Clone)]
pub struct TargetVector {
    values: Vec<f64>,
}

impl TargetVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Blends inverted gray values with gradient magnitudes:
/// `b = (1 - alpha) * inverted + alpha * magnitude` per inside pixel.
pub fn build_target(
    inverted: &GrayImage,
    grad: &GradientField,
    region: &Region,
    alpha: f64,
) -> Result<TargetVector> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if inverted.width != region.side || inverted.height != region.side {
        return Err(Error::DimensionMismatch(format!(
            "image is {}x{} but the region expects {}x{}",
            inverted.width, inverted.height, region.side, region.side
        )));
    }
    if grad.width != region.side || grad.height != region.side {
        return Err(Error::DimensionMismatch(format!(
            "gradient field is {}x{} but the region expects {}x{}",
            grad.width, grad.height, region.side, region.side
        )));
    }
    let values = region
        .inside_positions()
        .iter()
        .map(|&(x, y)| (1.0 - alpha) * f64::from(inverted.get(x, y)) + alpha * grad.magnitude(x, y))
        .collect();
    Ok(TargetVector { values })
}

/// Per-pixel weights, one value per inside pixel.
#[derive(Debug, Clone)]
pub struct PixelWeights {
    values: Vec<f64>,
}

impl PixelWeights {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Uniform unit weights for `n` pixels.
    pub fn uniform(n: usize) -> Self {
        PixelWeights {
            values: vec![1.0; n],
        }
    }
}

/// Builds pixel weights from an optional importance mask: pixels whose mask
/// value exceeds [`MASK_THRESHOLD`] get weight 2.0, everything else 1.0.
pub fn build_pixel_weights(region: &Region, importance: Option<&GrayImage>) -> Result<PixelWeights> {
    let Some(mask) = importance else {
        return Ok(PixelWeights::uniform(region.pixel_count()));
    };
    if mask.width != region.side || mask.height != region.side {
        return Err(Error::DimensionMismatch(format!(
            "importance mask is {}x{} but the region expects {}x{}",
            mask.width, mask.height, region.side, region.side
        )));
    }
    let values = region
        .inside_positions()
        .iter()
        .map(|&(x, y)| {
            if mask.get(x, y) > MASK_THRESHOLD {
                IMPORTANT_WEIGHT
            } else {
                1.0
            }
        })
        .collect();
    Ok(PixelWeights { values })
}
