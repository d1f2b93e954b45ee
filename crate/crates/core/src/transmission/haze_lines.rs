//! Haze-line clustering and non-local transmission averaging.
//!
//! Each pixel's airlight-shifted color `Z - A` is written in spherical
//! coordinates `(r, theta, psi)` with
//!
//! ```text
//! Zr - Ar = r sin(psi) cos(theta)
//! Zg - Ag = r sin(psi) sin(theta)
//! Zb - Ab = r cos(psi)
//! ```
//!
//! Pixels sharing a `(theta, psi)` histogram bin lie on one haze line. Every
//! nonempty bin is split, in raster order, into `ceil(|H| / nu)` subsets
//! whose sizes differ by at most one. Within a subset `H_s` the averaged
//! transmission is `t = r * sum(t0) / sum(r)`, which makes `t / r` constant
//! over the subset and keeps `sum(t) = sum(t0)` before clamping.
//!
//! Pixels with `r < r_min` sit too close to the airlight for the angles to
//! mean anything; they form singleton subsets and keep `t0`.

use std::f64::consts::PI;

use crate::airlight::Airlight;
use crate::error::{Error, Result};
use crate::image::PlanarImage;

use super::{Stage, TransmissionMap, T_FLOOR};

/// `(r, theta, psi)` of a shifted color, `theta` in `[0, 2 pi)` and `psi`
/// in `[0, pi]`. A zero vector maps to `(0, 0, 0)`.
pub fn spherical(d: [f64; 3]) -> (f64, f64, f64) {
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let mut theta = d[1].atan2(d[0]);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    let psi = (d[2] / r).clamp(-1.0, 1.0).acos();
    (r, theta, psi)
}

/// Pixel-to-haze-line assignment.
#[derive(Debug, Clone)]
pub struct HazeLineClusters {
    width: usize,
    height: usize,
    /// `||Z - A||` per pixel.
    pub radius: Vec<f64>,
    /// Histogram bin per pixel; `None` for pixels below `r_min`.
    pub bin: Vec<Option<u32>>,
    /// Index into `subsets` per pixel.
    pub subset_of: Vec<u32>,
    /// Pixel indices of each subset, in raster order.
    pub subsets: Vec<Vec<u32>>,
    /// Whether each subset is a bypassed near-airlight singleton.
    pub bypass: Vec<bool>,
    pub theta_bins: usize,
    pub psi_bins: usize,
}

impl HazeLineClusters {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn subset_count(&self) -> usize {
        self.subsets.len()
    }

    /// Number of distinct occupied bins.
    pub fn bin_count(&self) -> usize {
        let mut bins: Vec<u32> = self.bin.iter().flatten().copied().collect();
        bins.sort_unstable();
        bins.dedup();
        bins.len()
    }
}

fn bins_per_axis(span: f64, step: f64) -> Result<usize> {
    let ratio = span / step;
    let n = ratio.round();
    if !(step > 0.0) || !step.is_finite() || n < 1.0 || (ratio - n).abs() > 1e-6 * n.max(1.0) {
        return Err(Error::param(
            "bin_step",
            format!("{step} must be positive and divide pi"),
        ));
    }
    Ok(n as usize)
}

#[inline]
fn bin_index(angle: f64, step: f64, bins: usize) -> usize {
    ((angle / step).floor().max(0.0) as usize).min(bins - 1)
}

/// Groups pixels of `img` into haze-line subsets of at most `nu` members.
pub fn cluster_haze_lines(
    img: &PlanarImage,
    a: &Airlight,
    bin_step: f64,
    nu: usize,
    r_min: f64,
) -> Result<HazeLineClusters> {
    if nu == 0 {
        return Err(Error::param("nu", "must be at least 1"));
    }
    if !(r_min >= 0.0) {
        return Err(Error::param("r_min", "must be non-negative"));
    }
    let psi_bins = bins_per_axis(PI, bin_step)?;
    let theta_bins = 2 * psi_bins;
    let n = img.pixel_count();
    let (w, h) = (img.width(), img.height());

    let mut radius = vec![0.0; n];
    let mut bin = vec![None; n];
    for p in 0..n {
        let z = img.rgb(p / w, p % w);
        let d = [
            z[0] - a.channel(0),
            z[1] - a.channel(1),
            z[2] - a.channel(2),
        ];
        let (r, theta, psi) = spherical(d);
        radius[p] = r;
        if r > 0.0 && r >= r_min {
            let ti = bin_index(theta, bin_step, theta_bins);
            let pi = bin_index(psi, bin_step, psi_bins);
            bin[p] = Some((ti * psi_bins + pi) as u32);
        }
    }

    let mut order: Vec<(u32, u32)> = bin
        .iter()
        .enumerate()
        .filter_map(|(p, b)| b.map(|b| (b, p as u32)))
        .collect();
    order.sort_unstable();

    let mut subsets: Vec<Vec<u32>> = Vec::new();
    let mut bypass = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let key = order[start].0;
        let mut end = start;
        while end < order.len() && order[end].0 == key {
            end += 1;
        }
        let members = &order[start..end];
        let count = members.len();
        let parts = count.div_ceil(nu);
        let base = count / parts;
        let extra = count % parts;
        let mut offset = 0;
        for s in 0..parts {
            let size = base + usize::from(s < extra);
            subsets.push(
                members[offset..offset + size]
                    .iter()
                    .map(|&(_, p)| p)
                    .collect(),
            );
            bypass.push(false);
            offset += size;
        }
        start = end;
    }
    for (p, b) in bin.iter().enumerate() {
        if b.is_none() {
            subsets.push(vec![p as u32]);
            bypass.push(true);
        }
    }

    let mut subset_of = vec![0u32; n];
    for (s, members) in subsets.iter().enumerate() {
        for &p in members {
            subset_of[p as usize] = s as u32;
        }
    }

    Ok(HazeLineClusters {
        width: w,
        height: h,
        radius,
        bin,
        subset_of,
        subsets,
        bypass,
        theta_bins,
        psi_bins,
    })
}

/// `sum(t0) / sum(r)` per subset; bypassed subsets get `None`.
pub fn subset_scales(t0: &TransmissionMap, clusters: &HazeLineClusters) -> Vec<Option<f64>> {
    let t = t0.values();
    clusters
        .subsets
        .iter()
        .zip(&clusters.bypass)
        .map(|(members, &bypass)| {
            if bypass {
                return None;
            }
            let (mut st, mut sr) = (0.0, 0.0);
            for &p in members {
                st += t[p as usize];
                sr += clusters.radius[p as usize];
            }
            Some(st / sr)
        })
        .collect()
}

/// Averaged transmission before the `[1/255, 1]` clamp.
pub fn haze_line_average_unclamped(
    t0: &TransmissionMap,
    clusters: &HazeLineClusters,
) -> Result<Vec<f64>> {
    if t0.width() != clusters.width || t0.height() != clusters.height {
        return Err(Error::DimensionMismatch {
            expected: (clusters.height, clusters.width),
            actual: (t0.height(), t0.width()),
        });
    }
    let scales = subset_scales(t0, clusters);
    Ok(t0
        .values()
        .iter()
        .enumerate()
        .map(|(p, &t)| match scales[clusters.subset_of[p] as usize] {
            Some(scale) => clusters.radius[p] * scale,
            None => t,
        })
        .collect())
}

/// Haze-line averaging of an initial map, clamped to `[1/255, 1]`.
pub fn haze_line_average(
    t0: &TransmissionMap,
    clusters: &HazeLineClusters,
) -> Result<TransmissionMap> {
    let raw = haze_line_average_unclamped(t0, clusters)?;
    let data = raw.into_iter().map(|v| v.clamp(T_FLOOR, 1.0)).collect();
    TransmissionMap::new(
        PlanarImage::from_planar(clusters.width, clusters.height, 1, data)?,
        Stage::Averaged,
    )
}

/// Mean over multi-member subsets of the population variance of `map`
/// inside the subset.
pub fn within_line_variance(map: &[f64], clusters: &HazeLineClusters) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for members in clusters.subsets.iter().filter(|m| m.len() > 1) {
        let n = members.len() as f64;
        let mean = members.iter().map(|&p| map[p as usize]).sum::<f64>() / n;
        let var = members
            .iter()
            .map(|&p| (map[p as usize] - mean).powi(2))
            .sum::<f64>()
            / n;
        total += var;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}
