//! Planar floating-point image container and boundary-aware sampling.
//!
//! Every image in the pipeline is stored as `f64` planes, one plane per
//! channel, row-major inside each plane. Codec loads produce values in
//! `[0, 1]`; intermediate results (Laplacian levels, the airlight-shifted
//! image) may leave that range and are only clamped when written out.

use crate::error::{Error, Result};

/// An `H x W x C` image with `C` in `{1, 3}`, channel-planar.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Signed image such as a Laplacian level or `Z - A`.
///
/// Same layout as [`PlanarImage`]; values are not bounded to `[0, 1]`.
pub type ShiftedImage = PlanarImage;

impl PlanarImage {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Wraps existing planar data. Fails when the buffer length does not
    /// match the dimensions.
    pub fn from_planar(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::param(
                "channels",
                format!("{channels} (expected 1 or 3)"),
            ));
        }
        if data.len() != width * height * channels {
            return Err(Error::param(
                "data",
                format!(
                    "length {} does not match {width}x{height}x{channels}",
                    data.len()
                ),
            ));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(row, col, channel)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut img = Self::new(width, height, channels);
        for c in 0..channels {
            for i in 0..height {
                for j in 0..width {
                    img.set(i, j, c, f(i, j, c));
                }
            }
        }
        img
    }

    /// A 3-channel image where every pixel has the given color.
    pub fn uniform_rgb(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        Self::from_fn(width, height, 3, |_, _, c| rgb[c])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixel_count();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(c * self.height + i) * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f64) {
        self.data[(c * self.height + i) * self.width + j] = v;
    }

    /// All channel values at `(i, j)`; single-channel images repeat their
    /// value three times.
    #[inline]
    pub fn rgb(&self, i: usize, j: usize) -> [f64; 3] {
        if self.channels == 1 {
            let v = self.get(i, j, 0);
            [v, v, v]
        } else {
            [self.get(i, j, 0), self.get(i, j, 1), self.get(i, j, 2)]
        }
    }

    /// Value at `(i, j)` with half-sample symmetric reflection outside the
    /// image: row `-1` reads row `0`, row `height` reads row `height - 1`.
    #[inline]
    pub fn sample_mirror(&self, i: isize, j: isize, c: usize) -> f64 {
        self.get(mirror_index(i, self.height), mirror_index(j, self.width), c)
    }

    pub fn same_dims(&self, other: &PlanarImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn ensure_same_dims(&self, other: &PlanarImage) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            })
        }
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn clamped(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Sample-wise `self + other`. Panics on shape mismatch.
    pub fn add(&self, other: &PlanarImage) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    /// Sample-wise `self - other`. Panics on shape mismatch.
    pub fn sub(&self, other: &PlanarImage) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    pub fn zip_with(&self, other: &PlanarImage, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(
            (self.width, self.height, self.channels),
            (other.width, other.height, other.channels),
            "shape mismatch"
        );
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..*self
        }
    }

    /// Subtracts a per-channel constant, e.g. `Z - A`.
    pub fn shifted(&self, offset: [f64; 3]) -> ShiftedImage {
        let mut out = self.clone();
        for c in 0..self.channels {
            for v in out.plane_mut(c) {
                *v -= offset[c];
            }
        }
        out
    }

    /// Largest absolute sample difference.
    pub fn max_abs_diff(&self, other: &PlanarImage) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Per-channel average, giving a single-channel image.
    pub fn to_gray(&self) -> PlanarImage {
        if self.channels == 1 {
            return self.clone();
        }
        let n = self.pixel_count();
        let mut out = PlanarImage::new(self.width, self.height, 1);
        for p in 0..n {
            out.data[p] = (self.data[p] + self.data[n + p] + self.data[2 * n + p]) / 3.0;
        }
        out
    }

    /// Returns a copy with `channel` as its only plane.
    pub fn channel(&self, c: usize) -> PlanarImage {
        PlanarImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.plane(c).to_vec(),
        }
    }

    /// Three-channel copy; a gray image is replicated into R, G and B.
    pub fn to_rgb(&self) -> PlanarImage {
        if self.channels == 3 {
            return self.clone();
        }
        let mut data = Vec::with_capacity(self.data.len() * 3);
        for _ in 0..3 {
            data.extend_from_slice(&self.data);
        }
        PlanarImage {
            channels: 3,
            data,
            ..*self
        }
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|v| v.is_nan())
    }
}

/// Half-sample symmetric reflection of `i` into `0..n`.
///
/// Total for every `i`: the mirrored signal has period `2n`.
#[inline]
pub fn mirror_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    if (0..n).contains(&i) {
        return i as usize;
    }
    let k = i.rem_euclid(2 * n);
    (if k < n { k } else { 2 * n - 1 - k }) as usize
}
