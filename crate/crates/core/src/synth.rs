//! Synthetic haze and full-reference metrics.
//!
//! Haze follows `Z = I t + A (1 - t) + n` with `t = exp(-alpha depth)` and
//! `n` i.i.d. Gaussian per sample, drawn by Box-Muller from a counter-based
//! splitmix64 stream so a given `(seed, index)` always yields the same value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::airlight::Airlight;
use crate::error::{Error, Result};
use crate::image::PlanarImage;

/// Pixels with true transmission below this are treated as sky.
pub const SKY_T: f64 = 0.02;

/// Transmission of the farthest band of [`make_layered_scene`].
pub const FAR_T: f64 = 0.015;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output for counter `k` of stream `seed`.
pub fn splitmix64(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in `(0, 1]`, 53 bits.
pub fn uniform(seed: u64, k: u64) -> f64 {
    ((splitmix64(seed, k) >> 11) + 1) as f64 / (1u64 << 53) as f64
}

/// Standard normal number `k` of stream `seed` (Box-Muller, cosine branch,
/// counters `2k` and `2k + 1`).
pub fn gaussian(seed: u64, k: u64) -> f64 {
    let u1 = uniform(seed, 2 * k);
    let u2 = uniform(seed, 2 * k + 1);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Stream used for clean-image texture, kept apart from the noise stream.
fn texture_seed(seed: u64) -> u64 {
    seed ^ 0x5445_5854_5552_4531
}

#[derive(Debug, Clone, PartialEq)]
pub struct HazeScene {
    pub clean: PlanarImage,
    /// Single-channel, values `>= 0`.
    pub depth: PlanarImage,
    pub alpha: f64,
    pub airlight: Airlight,
    pub noise_std: f64,
    pub seed: u64,
}

impl HazeScene {
    pub fn validate(&self) -> Result<()> {
        if self.clean.channels() != 3 || self.depth.channels() != 1 {
            return Err(Error::param(
                "scene",
                "clean must be RGB and depth single-channel",
            ));
        }
        self.clean.ensure_same_dims(&self.depth)?;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", "must be positive"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::param("noise", "must be finite and >= 0"));
        }
        if self.depth.data().iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::param("depth", "must be >= 0"));
        }
        Ok(())
    }

    /// `exp(-alpha depth)`.
    pub fn transmission(&self) -> PlanarImage {
        self.depth.map(|d| (-self.alpha * d).exp())
    }

    /// Same scene with every depth chosen so that `t` is constant.
    pub fn with_constant_t(
        clean: PlanarImage,
        t: f64,
        airlight: Airlight,
        noise_std: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::param("t", format!("{t} must lie in (0, 1]")));
        }
        let depth = PlanarImage::filled(clean.width(), clean.height(), 1, -t.ln());
        Ok(Self {
            clean,
            depth,
            alpha: 1.0,
            airlight,
            noise_std,
            seed,
        })
    }

    pub fn noise_free(&self) -> Self {
        Self {
            noise_std: 0.0,
            ..self.clone()
        }
    }
}

/// Renders the hazy observation, clamped to `[0, 1]`.
pub fn synthesize(scene: &HazeScene) -> Result<PlanarImage> {
    scene.validate()?;
    let t = scene.transmission();
    let n = scene.clean.pixel_count();
    let mut out = scene.clean.clone();
    for c in 0..3 {
        let a = scene.airlight.channel(c);
        for (p, v) in out.plane_mut(c).iter_mut().enumerate() {
            let tp = t.data()[p];
            let mut z = *v * tp + a * (1.0 - tp);
            if scene.noise_std > 0.0 {
                z += scene.noise_std * gaussian(scene.seed, (c * n + p) as u64);
            }
            *v = z.clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Textured clean image: 8x8 cells of random color, each with one channel
/// in `[0, 0.1]`, plus faint sinusoidal detail.
pub fn textured_image(width: usize, height: usize, seed: u64) -> PlanarImage {
    let s = texture_seed(seed);
    let cells_x = width.div_ceil(8) as u64;
    PlanarImage::from_fn(width, height, 3, |i, j, c| {
        let cell = (i / 8) as u64 * cells_x + (j / 8) as u64;
        let dark = (splitmix64(s, 4 * cell) % 3) as usize;
        let u = uniform(s, 4 * cell + 1 + c as u64);
        let base = if c == dark { 0.1 * u } else { 0.3 + 0.6 * u };
        let detail = 0.03 * ((i as f64 * 0.9).sin() * (j as f64 * 0.7).cos());
        (base + detail).clamp(0.0, 1.0)
    })
}

/// Band depths, farthest (top) first: linear from `-ln(FAR_T)/alpha` to 0.
pub fn layer_depths(n_layers: usize, alpha: f64) -> Vec<f64> {
    let far = -FAR_T.ln() / alpha;
    (0..n_layers)
        .map(|b| far * (n_layers - 1 - b) as f64 / (n_layers - 1) as f64)
        .collect()
}

/// Scene of `n_layers` horizontal bands; the top band is sky
/// (`t = FAR_T`), the bottom band has depth 0.
pub fn make_layered_scene(
    width: usize,
    height: usize,
    n_layers: usize,
    alpha: f64,
    airlight: Airlight,
    seed: u64,
) -> Result<HazeScene> {
    if n_layers < 2 {
        return Err(Error::param("layers", "need at least 2"));
    }
    if width == 0 || height < n_layers {
        return Err(Error::param(
            "size",
            format!("{width}x{height} cannot hold {n_layers} bands"),
        ));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "must be positive"));
    }
    let depths = layer_depths(n_layers, alpha);
    let depth = PlanarImage::from_fn(width, height, 1, |i, _, _| depths[i * n_layers / height]);
    Ok(HazeScene {
        clean: textured_image(width, height, seed),
        depth,
        alpha,
        airlight,
        noise_std: 0.0,
        seed,
    })
}

/// Sky mask `t < SKY_T` as a single-channel 0/1 image.
pub fn sky_mask(t_true: &PlanarImage) -> PlanarImage {
    t_true.map(|t| if t < SKY_T { 1.0 } else { 0.0 })
}

/// Full-reference metrics. Optional entries are `null` when their inputs
/// were not supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub psnr_db: f64,
    pub mae: f64,
    pub input_psnr_db: Option<f64>,
    pub input_mae: Option<f64>,
    pub transmission_mae: Option<f64>,
    pub sky_noise_gain: Option<f64>,
    pub stage_timings_ms: BTreeMap<String, f64>,
}

pub fn mse(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    check_same(a, b)?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64)
}

pub fn mae(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    check_same(a, b)?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / a.data().len() as f64)
}

/// `10 log10(1 / MSE)`, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / m).log10()).min(PSNR_CAP_DB)
    })
}

fn check_same(a: &PlanarImage, b: &PlanarImage) -> Result<()> {
    a.ensure_same_dims(b)?;
    if a.channels() != b.channels() {
        return Err(Error::param(
            "channels",
            "images have different channel counts",
        ));
    }
    Ok(())
}

/// Transmission MAE over non-sky pixels of `t_true`, or over all pixels
/// when everything is sky.
pub fn transmission_mae(t_true: &PlanarImage, t_est: &PlanarImage) -> Result<f64> {
    check_same(t_true, t_est)?;
    let pairs: Vec<(f64, f64)> = t_true
        .data()
        .iter()
        .copied()
        .zip(t_est.data().iter().copied())
        .collect();
    let valid: Vec<&(f64, f64)> = pairs.iter().filter(|(t, _)| *t >= SKY_T).collect();
    let used: Vec<&(f64, f64)> = if valid.is_empty() {
        pairs.iter().collect()
    } else {
        valid
    };
    Ok(used.iter().map(|(t, e)| (t - e).abs()).sum::<f64>() / used.len() as f64)
}

/// `std(restored - reference) / noise_std` over every sample of the masked pixels.
pub fn sky_noise_gain(
    restored: &PlanarImage,
    reference: &PlanarImage,
    mask: &PlanarImage,
    noise_std: f64,
) -> Result<f64> {
    check_same(restored, reference)?;
    restored.ensure_same_dims(mask)?;
    if !(noise_std > 0.0) {
        return Err(Error::param(
            "noise",
            "sky noise gain needs a positive noise level",
        ));
    }
    let n = restored.pixel_count();
    let mut diffs = Vec::new();
    for p in (0..n).filter(|&p| mask.data()[p] > 0.5) {
        for c in 0..restored.channels() {
            diffs.push(restored.plane(c)[p] - reference.plane(c)[p]);
        }
    }
    if diffs.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / diffs.len() as f64;
    Ok(var.sqrt() / noise_std)
}

/// Sky-noise inputs: mask, restoration of the noise-free synthesis, noise level.
pub struct SkyReference<'a> {
    pub mask: &'a PlanarImage,
    pub clean_restored: &'a PlanarImage,
    pub noise_std: f64,
}

/// Computes a report; optional inputs enable the optional fields.
pub fn evaluate(
    clean: &PlanarImage,
    restored: &PlanarImage,
    hazy: Option<&PlanarImage>,
    transmissions: Option<(&PlanarImage, &PlanarImage)>,
    sky: Option<SkyReference<'_>>,
) -> Result<MetricsReport> {
    let input = match hazy {
        Some(h) => Some((psnr(clean, h)?, mae(clean, h)?)),
        None => None,
    };
    Ok(MetricsReport {
        psnr_db: psnr(clean, restored)?,
        mae: mae(clean, restored)?,
        input_psnr_db: input.map(|x| x.0),
        input_mae: input.map(|x| x.1),
        transmission_mae: match transmissions {
            Some((t, e)) => Some(transmission_mae(t, e)?),
            None => None,
        },
        sky_noise_gain: match sky {
            Some(s) => Some(sky_noise_gain(
                restored,
                s.clean_restored,
                s.mask,
                s.noise_std,
            )?),
            None => None,
        },
        stage_timings_ms: BTreeMap::new(),
    })
}
