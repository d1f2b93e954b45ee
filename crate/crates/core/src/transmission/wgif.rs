//! Weighted guided image filter.
//!
//! Inside every window `W` of radius `rho` the map is modelled as an affine
//! function of the guidance, `t = a G + b`, with `(a, b)` minimizing
//!
//! ```text
//! sum_W [ Gamma(k) (a G + b - t)^2 + lambda a^2 ]
//! ```
//!
//! whose closed form is `a = cov(G, t) / (var(G) + lambda / Gamma(k))`,
//! `b = mean(t) - a mean(G)`. The output averages the per-window
//! coefficients: `t*(p) = mean_a(p) G(p) + mean_b(p)`.
//!
//! `Gamma` is the edge-aware weight computed from 3x3 variances of `G`:
//! `Gamma(k) = (s2(k) + eps) * mean_p 1 / (s2(p) + eps)`, `eps = 0.001^2`.

use crate::error::{Error, Result};
use crate::image::PlanarImage;

use super::window::{box_mean, box_variance};
use super::{GuidanceImage, Stage, TransmissionMap, T_FLOOR};

/// Regularizer of the edge-aware weight.
pub const GAMMA_EPSILON: f64 = 1e-6;

/// Edge-aware weight per pixel, normalized to mean `1 / mean(1/(s2+eps))`.
pub fn edge_aware_weights(guide: &[f64], width: usize, height: usize) -> Vec<f64> {
    let var = box_variance(guide, width, height, 1);
    let inv_mean = var.iter().map(|v| 1.0 / (v + GAMMA_EPSILON)).sum::<f64>() / var.len() as f64;
    var.iter().map(|v| (v + GAMMA_EPSILON) * inv_mean).collect()
}

/// Filters `target` with `guide`; no clamping.
pub fn guided_filter(
    target: &[f64],
    guide: &[f64],
    width: usize,
    height: usize,
    radius: usize,
    lambda: f64,
) -> Vec<f64> {
    let gamma = edge_aware_weights(guide, width, height);
    let gt: Vec<f64> = guide.iter().zip(target).map(|(g, t)| g * t).collect();
    let gg: Vec<f64> = guide.iter().map(|g| g * g).collect();
    let mean_g = box_mean(guide, width, height, radius);
    let mean_t = box_mean(target, width, height, radius);
    let mean_gt = box_mean(&gt, width, height, radius);
    let mean_gg = box_mean(&gg, width, height, radius);

    let n = width * height;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for k in 0..n {
        let var = (mean_gg[k] - mean_g[k] * mean_g[k]).max(0.0);
        let cov = mean_gt[k] - mean_g[k] * mean_t[k];
        let denom = var + lambda / gamma[k];
        a[k] = if denom > 1e-15 { cov / denom } else { 0.0 };
        b[k] = mean_t[k] - a[k] * mean_g[k];
    }
    let mean_a = box_mean(&a, width, height, radius);
    let mean_b = box_mean(&b, width, height, radius);
    (0..n).map(|p| mean_a[p] * guide[p] + mean_b[p]).collect()
}

/// Refines a transmission map; output is clamped to `[1/255, 1]`.
pub fn wgif_refine(
    t: &TransmissionMap,
    g: &GuidanceImage,
    radius: usize,
    lambda: f64,
) -> Result<TransmissionMap> {
    if !t.map.same_dims(&g.0) || g.0.channels() != 1 {
        return Err(Error::DimensionMismatch {
            expected: t.map.dims(),
            actual: g.0.dims(),
        });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", "must be finite and non-negative"));
    }
    let (w, h) = (t.width(), t.height());
    let out = guided_filter(t.values(), g.values(), w, h, radius, lambda);
    let data = out.into_iter().map(|v| v.clamp(T_FLOOR, 1.0)).collect();
    TransmissionMap::new(PlanarImage::from_planar(w, h, 1, data)?, Stage::Refined)
}
