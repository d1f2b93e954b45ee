//! Scene radiance recovery per pyramid level, and the full pipeline.
//!
//! The coarsest Gaussian level is restored with the usual model inversion
//! floored at `eta`. Each Laplacian level blends that inversion with a
//! bounded amplification `psi = t/eta + 1`, weighted by the sigmoid
//! `phi = 1 / (1 + exp(32 (t/eta - 1)))` scaled by `2^-l`. In the sky
//! (`t -> 0`, `phi -> 1`) level-0 detail therefore passes with unit gain
//! instead of being divided by a small transmission, which is what keeps
//! sensor noise in check.

use std::time::Instant;

use rayon::prelude::*;

use crate::airlight::{estimate_airlight, Airlight};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::image::{PlanarImage, ShiftedImage};
use crate::pyramid::{build_pyramid, collapse_levels, PyramidPair};
use crate::transmission::{
    estimate_transmission, transmission_pyramid, TransmissionMap, TransmissionStages,
};

/// Sigmoid steepness.
const SIGMOID_SLOPE: f64 = 32.0;

/// Default restoration floor for normal haze.
pub const ETA_NORMAL: f64 = 0.25;
/// Restoration floor for heavy haze.
pub const ETA_HEAVY: f64 = 0.125;

#[derive(Debug, Clone, PartialEq)]
pub struct RestoreConfig {
    pub eta: f64,
    pub levels: usize,
    pub detail_gain: Vec<f64>,
}

impl Default for RestoreConfig {
    fn default() -> Self {
        Self {
            eta: ETA_NORMAL,
            levels: 1,
            detail_gain: vec![1.0],
        }
    }
}

impl From<&PipelineConfig> for RestoreConfig {
    fn from(c: &PipelineConfig) -> Self {
        Self {
            eta: c.eta,
            levels: c.levels,
            detail_gain: c.detail_gain.clone(),
        }
    }
}

pub fn phi(t: f64, eta: f64) -> f64 {
    1.0 / (1.0 + (SIGMOID_SLOPE * (t / eta - 1.0)).exp())
}

pub fn psi_amp(t: f64, eta: f64) -> f64 {
    t / eta + 1.0
}

fn check_level(img: &PlanarImage, t: &PlanarImage) -> Result<()> {
    if t.channels() != 1 {
        return Err(Error::param("transmission", "must be single-channel"));
    }
    img.ensure_same_dims(t)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("eta", format!("{eta} must lie in (0, 1]")))
    }
}

/// Applies `f(value, t, airlight_channel)` per sample with a shared scalar `t`.
fn per_pixel(
    img: &PlanarImage,
    t: &PlanarImage,
    airlight: [f64; 3],
    f: impl Fn(f64, f64, f64) -> f64 + Sync,
) -> PlanarImage {
    let mut out = img.clone();
    let n = img.pixel_count();
    let tv = t.data();
    out.data_mut()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(c, plane)| {
            let a = airlight[c.min(2)];
            for (v, &tp) in plane.iter_mut().zip(tv) {
                *v = f(*v, tp, a);
            }
        });
    out
}

/// `(z - A) / m + A`, written so that `m = 1` returns `z` bit for bit.
#[inline]
fn invert(z: f64, m: f64, a: f64) -> f64 {
    z / m + a * (1.0 - 1.0 / m)
}

/// `(z - A) / max(t, eta) + A` per channel; not clamped.
pub fn restore_base(
    zg: &PlanarImage,
    tg: &PlanarImage,
    a: &Airlight,
    eta: f64,
) -> Result<PlanarImage> {
    check_level(zg, tg)?;
    check_eta(eta)?;
    Ok(per_pixel(zg, tg, a.rgb(), |z, t, ac| {
        invert(z, t.max(eta), ac)
    }))
}

/// Blends inversion and bounded amplification of one Laplacian level.
pub fn restore_laplacian(
    zl: &ShiftedImage,
    tg: &PlanarImage,
    l: usize,
    eta: f64,
) -> Result<ShiftedImage> {
    check_level(zl, tg)?;
    check_eta(eta)?;
    let scale = 0.5f64.powi(l as i32);
    Ok(per_pixel(zl, tg, [0.0; 3], |z, t, _| {
        let w = phi(t, eta) * scale;
        (1.0 - w) * z / t.max(eta) + w * psi_amp(t, eta) * z
    }))
}

/// `(Z - A) / max(t, t_L) + A` without clamping.
pub fn restore_single_scale_unclamped(
    z: &PlanarImage,
    t: &TransmissionMap,
    a: &Airlight,
    t_l: f64,
) -> Result<PlanarImage> {
    if !(t_l > 0.0) {
        return Err(Error::param("t_l", format!("{t_l} must be positive")));
    }
    check_level(z, &t.map)?;
    Ok(per_pixel(z, &t.map, a.rgb(), |v, tp, ac| {
        invert(v, tp.max(t_l), ac)
    }))
}

/// Single-scale baseline, clamped to `[0, 1]`.
pub fn restore_single_scale(
    z: &PlanarImage,
    t: &TransmissionMap,
    a: &Airlight,
    t_l: f64,
) -> Result<PlanarImage> {
    Ok(restore_single_scale_unclamped(z, t, a, t_l)?.clamped())
}

/// Restores every level of `pyr` and collapses without clamping.
pub fn restore_pyramid(
    pyr: &PyramidPair,
    t_pyr: &[PlanarImage],
    a: &Airlight,
    cfg: &RestoreConfig,
) -> Result<PlanarImage> {
    let levels = pyr.levels();
    if t_pyr.len() != levels + 1 {
        return Err(Error::param(
            "transmission",
            "pyramid depth differs from the image pyramid",
        ));
    }
    if cfg.detail_gain.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::param("detail_gain", "gains must be > 0"));
    }
    let base = restore_base(pyr.base(), &t_pyr[levels], a, cfg.eta)?;
    let laps = (0..levels)
        .map(|l| {
            let gain = cfg.detail_gain.get(l).copied().unwrap_or(1.0);
            Ok(restore_laplacian(&pyr.laplacian[l], &t_pyr[l], l, cfg.eta)?.scale(gain))
        })
        .collect::<Result<Vec<_>>>()?;
    collapse_levels(&base, &laps)
}

/// Values that replace estimated quantities.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub airlight: Option<Airlight>,
}

/// Everything one pipeline run produced.
#[derive(Debug, Clone)]
pub struct DehazeOutput {
    pub image: PlanarImage,
    pub airlight: Airlight,
    pub stages: TransmissionStages,
    pub pyramid: PyramidPair,
    pub t_pyramid: Vec<PlanarImage>,
    /// `(stage, milliseconds)` in execution order.
    pub timings: Vec<(&'static str, f64)>,
}

struct Stopwatch {
    last: Instant,
    laps: Vec<(&'static str, f64)>,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            last: Instant::now(),
            laps: Vec::new(),
        }
    }

    fn lap(&mut self, name: &'static str) {
        let now = Instant::now();
        self.laps
            .push((name, (now - self.last).as_secs_f64() * 1e3));
        self.last = now;
    }
}

/// Full multi-scale pipeline; with `single_scale` the final step is the
/// single-scale baseline at full resolution instead.
pub fn dehaze_with(
    z: &PlanarImage,
    cfg: &PipelineConfig,
    overrides: &Overrides,
    single_scale: bool,
) -> Result<DehazeOutput> {
    cfg.validate()?;
    if z.channels() != 3 {
        return Err(Error::param("input", "expected an RGB image"));
    }
    let mut clock = Stopwatch::new();
    let pyramid = build_pyramid(z, cfg.levels)?;
    let low_pass = pyramid.expanded(0);
    clock.lap("pyramid");

    let airlight = match overrides.airlight {
        Some(a) => a,
        None => estimate_airlight(&low_pass),
    };
    clock.lap("airlight");

    let stages = estimate_transmission(&low_pass, &airlight, &cfg.transmission_params())?;
    clock.lap("transmission");

    let t_pyramid = transmission_pyramid(&stages.refined, cfg.levels)?;
    let image = if single_scale {
        restore_single_scale(z, &stages.refined, &airlight, cfg.t_l)?
    } else {
        restore_pyramid(&pyramid, &t_pyramid, &airlight, &RestoreConfig::from(cfg))?.clamped()
    };
    clock.lap("restore");

    Ok(DehazeOutput {
        image,
        airlight,
        stages,
        pyramid,
        t_pyramid,
        timings: clock.laps,
    })
}

/// Multi-scale dehazing of an RGB image in `[0, 1]`.
pub fn dehaze(
    z: &PlanarImage,
    cfg: &PipelineConfig,
    overrides: &Overrides,
) -> Result<DehazeOutput> {
    dehaze_with(z, cfg, overrides, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_t(w: usize, h: usize, v: f64) -> PlanarImage {
        PlanarImage::filled(w, h, 1, v)
    }

    fn textured(w: usize, h: usize) -> PlanarImage {
        PlanarImage::from_fn(w, h, 3, |i, j, c| {
            let k = (i * 7 + j * 13 + c * 5) % 17;
            0.2 + 0.6 * k as f64 / 16.0
        })
    }

    #[test]
    fn base_scalar_example() {
        let a = Airlight::new([1.0, 1.0, 1.0]).unwrap();
        let z = PlanarImage::uniform_rgb(1, 1, [0.8; 3]);
        let out = restore_base(&z, &flat_t(1, 1, 0.1), &a, 0.25).unwrap();
        assert!((out.get(0, 0, 0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn base_trivial_cases() {
        let a = Airlight::new([0.7, 0.8, 0.9]).unwrap();
        let z = textured(5, 4);
        assert_eq!(restore_base(&z, &flat_t(5, 4, 1.0), &a, 0.25).unwrap(), z);
        let za = PlanarImage::uniform_rgb(5, 4, a.rgb());
        let out = restore_base(&za, &flat_t(5, 4, 0.03), &a, 0.25).unwrap();
        assert!(out.max_abs_diff(&za) < 1e-12);
        assert!(restore_base(&z, &flat_t(4, 4, 1.0), &a, 0.25).is_err());
        assert!(restore_base(&z, &flat_t(5, 4, 1.0), &a, 0.0).is_err());
    }

    #[test]
    fn sigmoid_spot_values() {
        let eta = 0.25;
        assert_eq!(phi(eta, eta), 0.5);
        assert_eq!(psi_amp(eta, eta), 2.0);
        assert!((phi(0.0, eta) - 1.0).abs() <= 1e-13);
        assert_eq!(psi_amp(0.0, eta), 1.0);
        assert!(phi(2.0 * eta, eta) <= 1e-13);
        assert_eq!(psi_amp(2.0 * eta, eta), 3.0);
    }

    #[test]
    fn phi_decreases_strictly_in_open_unit_interval() {
        let mut prev = f64::INFINITY;
        for k in 0..=60 {
            let t = k as f64 / 60.0 * 0.5;
            let p = phi(t, 0.25);
            assert!(p > 0.0 && p < 1.0 && p < prev);
            prev = p;
        }
    }

    #[test]
    fn laplacian_near_camera_inverts() {
        let eta = 0.25;
        let zl = PlanarImage::from_fn(4, 3, 3, |i, j, c| {
            (i as f64 - j as f64) * 0.05 + c as f64 * 0.01
        });
        let t = 4.0 * eta;
        let out = restore_laplacian(&zl, &flat_t(4, 3, t), 0, eta).unwrap();
        for (o, z) in out.data().iter().zip(zl.data()) {
            assert!((o - z / t).abs() <= 1e-6 * z.abs());
        }
    }

    #[test]
    fn laplacian_sky_gain_at_level_one() {
        let eta = 0.25;
        let zl = PlanarImage::filled(2, 2, 3, 0.04);
        let out = restore_laplacian(&zl, &flat_t(2, 2, 0.0), 1, eta).unwrap();
        let expected = 0.5 * 0.04 / eta + 0.5 * 0.04;
        assert!((out.get(0, 0, 0) - expected).abs() < 1e-13);
        assert!((out.get(1, 1, 2) / 0.04 - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_scale_examples() {
        let a = Airlight::new([1.0; 3]).unwrap();
        let z = PlanarImage::uniform_rgb(1, 1, [0.9; 3]);
        let t =
            TransmissionMap::new(flat_t(1, 1, 0.0), crate::transmission::Stage::Refined).unwrap();
        let out = restore_single_scale(&z, &t, &a, 0.1).unwrap();
        assert!(out.get(0, 0, 0).abs() < 1e-12);
        let one =
            TransmissionMap::new(flat_t(1, 1, 1.0), crate::transmission::Stage::Refined).unwrap();
        assert_eq!(restore_single_scale(&z, &one, &a, 0.1).unwrap(), z);
    }

    #[test]
    fn airlight_image_stays_airlight() {
        let a = Airlight::new([0.75, 0.8, 0.85]).unwrap();
        let z = PlanarImage::uniform_rgb(32, 24, a.rgb());
        let out = dehaze(
            &z,
            &PipelineConfig::default(),
            &Overrides { airlight: Some(a) },
        )
        .unwrap();
        assert!(out.image.max_abs_diff(&z) < 1e-12);
        let out = dehaze(&z, &PipelineConfig::default(), &Overrides::default()).unwrap();
        assert!(out.image.max_abs_diff(&z) < 1e-9);
    }

    #[test]
    fn haze_free_input_is_nearly_unchanged() {
        // 8x8 cells, each with one zero channel: every 15x15 window holds a
        // dark cell interior, which survives the low-pass the estimate runs on.
        let z = PlanarImage::from_fn(64, 48, 3, |i, j, c| {
            let cell = (i / 8) * 8 + j / 8;
            if c == cell % 3 {
                0.0
            } else {
                0.3 + 0.6 * (((cell * 7 + c * 3) % 10) as f64 / 9.0)
            }
        });
        let out = dehaze(&z, &PipelineConfig::default(), &Overrides::default()).unwrap();
        let err = out.image.max_abs_diff(&z);
        assert!(err <= 0.05, "max error {err}");
    }

    #[test]
    fn detail_gain_keeps_the_base() {
        let a = Airlight::new([0.9, 0.9, 0.9]).unwrap();
        let z = textured(40, 36);
        let pyr = build_pyramid(&z, 2).unwrap();
        let t_pyr = crate::pyramid::gaussian_pyramid(&PlanarImage::filled(40, 36, 1, 0.6), 2);
        let plain = RestoreConfig {
            eta: 0.25,
            levels: 2,
            detail_gain: vec![1.0],
        };
        let boosted = RestoreConfig {
            detail_gain: vec![2.0, 1.5],
            ..plain.clone()
        };
        let base = restore_base(pyr.base(), &t_pyr[2], &a, 0.25).unwrap();
        let x = restore_pyramid(&pyr, &t_pyr, &a, &plain).unwrap();
        let y = restore_pyramid(&pyr, &t_pyr, &a, &boosted).unwrap();
        assert!(x.max_abs_diff(&y) > 1e-3);
        // Both collapse the same restored base; their means differ only by
        // the boundary-driven mean of the boosted residuals.
        assert_eq!(base, restore_base(pyr.base(), &t_pyr[2], &a, 0.25).unwrap());
        assert!((x.mean() - y.mean()).abs() < 1e-2);
    }

    #[test]
    fn dehaze_is_deterministic_and_in_range() {
        let z = textured(48, 40).map(|v| 0.5 * v + 0.4);
        let cfg = PipelineConfig {
            levels: 2,
            ..Default::default()
        };
        let a = dehaze(&z, &cfg, &Overrides::default()).unwrap();
        let b = dehaze(&z, &cfg, &Overrides::default()).unwrap();
        assert_eq!(a.image, b.image);
        assert!(a.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(a.t_pyramid.len(), 3);
    }
}
