//! Gaussian and Laplacian pyramids.
//!
//! `reduce` smooths with the separable 3x3 kernel
//! `[1/4, 1/2, 1/4] x [1/4, 1/2, 1/4]` and keeps every second sample;
//! `expand` is its parity-restricted transpose scaled by 4. Both use
//! half-sample mirroring at the borders, so constant images are exact fixed
//! points. Level `l + 1` has `ceil(n / 2)` samples per axis of level `l`,
//! and `expand` takes the finer level's size explicitly so odd dimensions
//! reconstruct exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{mirror_index, PlanarImage, ShiftedImage};

/// One-dimensional kernel weights for offsets `-1, 0, 1`.
pub const KERNEL_1D: [f64; 3] = [0.25, 0.5, 0.25];

/// 2-D weight `w(m, n) = w1(m) * w1(n)` for `m, n` in `-1..=1`.
#[inline]
pub fn kernel_weight(m: isize, n: isize) -> f64 {
    KERNEL_1D[(m + 1) as usize] * KERNEL_1D[(n + 1) as usize]
}

/// Size of the next coarser level along one axis.
#[inline]
pub fn coarser(n: usize) -> usize {
    n.div_ceil(2)
}

fn reduce_plane(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let (ow, oh) = (coarser(w), coarser(h));
    let [k0, k1, k2] = KERNEL_1D;
    // horizontal pass: h x ow
    let mut tmp = vec![0.0; h * ow];
    tmp.par_chunks_mut(ow).enumerate().for_each(|(i, out)| {
        let row = &src[i * w..(i + 1) * w];
        for (j, o) in out.iter_mut().enumerate() {
            let c = 2 * j as isize;
            *o = k0 * row[mirror_index(c - 1, w)]
                + k1 * row[mirror_index(c, w)]
                + k2 * row[mirror_index(c + 1, w)];
        }
    });
    let mut dst = vec![0.0; oh * ow];
    dst.par_chunks_mut(ow).enumerate().for_each(|(i, out)| {
        let c = 2 * i as isize;
        let r0 = &tmp[mirror_index(c - 1, h) * ow..][..ow];
        let r1 = &tmp[mirror_index(c, h) * ow..][..ow];
        let r2 = &tmp[mirror_index(c + 1, h) * ow..][..ow];
        for j in 0..ow {
            out[j] = k0 * r0[j] + k1 * r1[j] + k2 * r2[j];
        }
    });
    dst
}

fn expand_plane(src: &[f64], cw: usize, ch: usize, tw: usize, th: usize) -> Vec<f64> {
    // horizontal pass: ch x tw
    let mut tmp = vec![0.0; ch * tw];
    tmp.par_chunks_mut(tw).enumerate().for_each(|(i, out)| {
        let row = &src[i * cw..(i + 1) * cw];
        for (j, o) in out.iter_mut().enumerate() {
            *o = if j % 2 == 0 {
                row[j / 2]
            } else {
                0.5 * (row[(j - 1) / 2] + row[mirror_index(j.div_ceil(2) as isize, cw)])
            };
        }
    });
    let mut dst = vec![0.0; th * tw];
    dst.par_chunks_mut(tw).enumerate().for_each(|(i, out)| {
        if i % 2 == 0 {
            out.copy_from_slice(&tmp[(i / 2) * tw..][..tw]);
        } else {
            let a = &tmp[((i - 1) / 2) * tw..][..tw];
            let b = &tmp[mirror_index(i.div_ceil(2) as isize, ch) * tw..][..tw];
            for j in 0..tw {
                out[j] = 0.5 * (a[j] + b[j]);
            }
        }
    });
    dst
}

/// One Gaussian reduction step: smooth and subsample by two.
pub fn reduce(img: &PlanarImage) -> PlanarImage {
    let (w, h) = (img.width(), img.height());
    let mut data = Vec::with_capacity(coarser(w) * coarser(h) * img.channels());
    for c in 0..img.channels() {
        data.extend(reduce_plane(img.plane(c), w, h));
    }
    PlanarImage::from_planar(coarser(w), coarser(h), img.channels(), data).expect("sizes agree")
}

/// Upsamples `img` to `target_h x target_w`, the size of the finer level it
/// was reduced from.
pub fn expand(img: &PlanarImage, target_h: usize, target_w: usize) -> Result<PlanarImage> {
    if coarser(target_h) != img.height() || coarser(target_w) != img.width() {
        return Err(Error::DimensionMismatch {
            expected: (coarser(target_h), coarser(target_w)),
            actual: img.dims(),
        });
    }
    let mut data = Vec::with_capacity(target_h * target_w * img.channels());
    for c in 0..img.channels() {
        data.extend(expand_plane(
            img.plane(c),
            img.width(),
            img.height(),
            target_w,
            target_h,
        ));
    }
    Ok(PlanarImage::from_planar(target_w, target_h, img.channels(), data).expect("sizes agree"))
}

/// Gaussian levels `0..=levels`, level 0 being `img` itself.
pub fn gaussian_pyramid(img: &PlanarImage, levels: usize) -> Vec<PlanarImage> {
    let mut out = Vec::with_capacity(levels + 1);
    out.push(img.clone());
    for l in 0..levels {
        let next = reduce(&out[l]);
        out.push(next);
    }
    out
}

/// Gaussian and Laplacian pyramids of one image.
#[derive(Debug, Clone)]
pub struct PyramidPair {
    /// Levels `0..=L0`; level 0 is the input.
    pub gaussian: Vec<PlanarImage>,
    /// Band-pass residuals, levels `0..L0`, signed and unclamped.
    pub laplacian: Vec<ShiftedImage>,
}

impl PyramidPair {
    /// Number of reduction steps `L0`.
    pub fn levels(&self) -> usize {
        self.laplacian.len()
    }

    pub fn base(&self) -> &PlanarImage {
        self.gaussian.last().expect("at least one level")
    }

    /// `expand(gaussian[l + 1])` at the size of level `l`, i.e. the
    /// low-pass part of level `l`.
    pub fn expanded(&self, l: usize) -> PlanarImage {
        let (h, w) = self.gaussian[l].dims();
        expand(&self.gaussian[l + 1], h, w).expect("pyramid levels are consistent")
    }

    /// Reconstruction without the final clamp.
    pub fn collapse_unclamped(&self) -> Result<PlanarImage> {
        collapse_levels(self.base(), &self.laplacian)
    }

    /// Reconstruction clamped to `[0, 1]`.
    pub fn collapse(&self) -> Result<PlanarImage> {
        Ok(self.collapse_unclamped()?.clamped())
    }
}

/// Builds `L0 = levels` reduction steps. Requires `min(width, height) >= 2^levels`.
pub fn build_pyramid(img: &PlanarImage, levels: usize) -> Result<PyramidPair> {
    if levels == 0 {
        return Err(Error::param("levels", "must be at least 1"));
    }
    let min_side = img.width().min(img.height());
    if levels >= usize::BITS as usize || min_side < (1usize << levels) {
        return Err(Error::TooSmall {
            width: img.width(),
            height: img.height(),
            levels,
        });
    }
    let gaussian = gaussian_pyramid(img, levels);
    let laplacian = (0..levels)
        .map(|l| {
            let (h, w) = gaussian[l].dims();
            let e = expand(&gaussian[l + 1], h, w)?;
            Ok(gaussian[l].sub(&e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PyramidPair {
        gaussian,
        laplacian,
    })
}

/// Folds from the coarsest level: `acc <- expand(acc) + laplacian[l]`.
/// No clamping is applied.
pub fn collapse_levels(base: &PlanarImage, laplacian: &[ShiftedImage]) -> Result<PlanarImage> {
    let mut acc = base.clone();
    for lap in laplacian.iter().rev() {
        if lap.channels() != acc.channels() {
            return Err(Error::param(
                "laplacian",
                "channel count differs between levels",
            ));
        }
        let (h, w) = lap.dims();
        acc = expand(&acc, h, w)?.add(lap);
    }
    Ok(acc)
}

/// Clamped reconstruction from a base level and Laplacian residuals.
pub fn collapse(base: &PlanarImage, laplacian: &[ShiftedImage]) -> Result<PlanarImage> {
    Ok(collapse_levels(base, laplacian)?.clamped())
}
