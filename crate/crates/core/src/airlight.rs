//! Global atmospheric light estimation by hierarchical quad-tree search.
//!
//! The region is split into four quadrants, each scored by
//! `mean(gray) - std(gray)`; the search descends into the best quadrant
//! (first in raster order on ties) until the region holds fewer than
//! [`TERMINAL_AREA`] pixels. Inside the terminal block the pixel closest to
//! white is located and the 3x3 mean color around it is returned, floored
//! at `1/255` per channel.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::PlanarImage;

/// Regions smaller than this many pixels stop the quad-tree descent.
pub const TERMINAL_AREA: usize = 1024;

/// Smallest admissible channel value.
pub const CHANNEL_FLOOR: f64 = 1.0 / 255.0;

/// Per-channel atmospheric light, each channel in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Airlight([f64; 3]);

impl Airlight {
    pub fn new(rgb: [f64; 3]) -> Result<Self> {
        if rgb.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::param(
                "airlight",
                format!("every channel must lie in (0, 1], got {rgb:?}"),
            ));
        }
        Ok(Self(rgb))
    }

    /// Clamps into `[1/255, 1]`; NaN maps to the floor.
    pub fn clamped(rgb: [f64; 3]) -> Self {
        Self(rgb.map(|v| {
            if v.is_nan() {
                CHANNEL_FLOOR
            } else {
                v.clamp(CHANNEL_FLOOR, 1.0)
            }
        }))
    }

    pub fn rgb(&self) -> [f64; 3] {
        self.0
    }

    #[inline]
    pub fn channel(&self, c: usize) -> f64 {
        self.0[c]
    }
}

impl fmt::Display for Airlight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Region {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Region {
    fn area(&self) -> usize {
        self.height * self.width
    }

    /// Quadrants in raster order: top-left, top-right, bottom-left, bottom-right.
    fn quadrants(&self) -> [Region; 4] {
        let h0 = self.height / 2;
        let w0 = self.width / 2;
        let (h1, w1) = (self.height - h0, self.width - w0);
        [
            Region {
                top: self.top,
                left: self.left,
                height: h0,
                width: w0,
            },
            Region {
                top: self.top,
                left: self.left + w0,
                height: h0,
                width: w1,
            },
            Region {
                top: self.top + h0,
                left: self.left,
                height: h1,
                width: w0,
            },
            Region {
                top: self.top + h0,
                left: self.left + w0,
                height: h1,
                width: w1,
            },
        ]
    }
}

/// `mean - std` of the gray values inside `r`.
pub(crate) fn region_score(gray: &PlanarImage, r: Region) -> f64 {
    let n = r.area() as f64;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for i in r.top..r.top + r.height {
        for j in r.left..r.left + r.width {
            let v = gray.get(i, j, 0);
            sum += v;
            sq += v * v;
        }
    }
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0);
    mean - var.sqrt()
}

/// Terminal block of the quad-tree search.
pub(crate) fn search_region(gray: &PlanarImage) -> Region {
    let mut region = Region {
        top: 0,
        left: 0,
        height: gray.height(),
        width: gray.width(),
    };
    while region.area() >= TERMINAL_AREA && region.height >= 2 && region.width >= 2 {
        let mut best = region.quadrants()[0];
        let mut best_score = f64::NEG_INFINITY;
        for q in region.quadrants() {
            let s = region_score(gray, q);
            if s > best_score {
                best_score = s;
                best = q;
            }
        }
        region = best;
    }
    region
}

/// Estimates the atmospheric light from `img`, normally the low-pass
/// expanded image `expand(reduce(Z))`.
pub fn estimate_airlight(img: &PlanarImage) -> Airlight {
    let gray = img.to_gray();
    let region = search_region(&gray);

    let mut best = (region.top, region.left);
    let mut best_dist = f64::INFINITY;
    for i in region.top..region.top + region.height {
        for j in region.left..region.left + region.width {
            let d: f64 = img.rgb(i, j).iter().map(|v| (1.0 - v) * (1.0 - v)).sum();
            if d < best_dist {
                best_dist = d;
                best = (i, j);
            }
        }
    }

    let mut color = [0.0; 3];
    for di in -1..=1isize {
        for dj in -1..=1isize {
            let (i, j) = (best.0 as isize + di, best.1 as isize + dj);
            for (c, v) in color.iter_mut().enumerate() {
                let ch = c.min(img.channels() - 1);
                *v += img.sample_mirror(i, j, ch);
            }
        }
    }
    Airlight::clamped(color.map(|v| v / 9.0))
}
