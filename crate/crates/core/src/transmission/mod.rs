//! Transmission map estimation.
//!
//! The estimate is built in three stages on the low-pass expanded image:
//!
//! 1. **initial**: `t0 = 1 - (31/32) * darkchannel(Z / A)`, a dark direct
//!    attenuation bound that also holds in the sky (range `[1/32, 1]`);
//! 2. **averaged**: non-local averaging of `t0 / ||Z - A||` along haze lines
//!    (see [`haze_lines`]);
//! 3. **refined**: weighted guided filtering against
//!    `G = 1 - min_c(Z_c / A_c)` (see [`wgif`]).

pub mod dark;
pub mod haze_lines;
pub mod wgif;
pub mod window;

use crate::airlight::Airlight;
use crate::error::{Error, Result};
use crate::image::PlanarImage;
use crate::pyramid::gaussian_pyramid;

pub use dark::dark_channel;
pub use haze_lines::{cluster_haze_lines, haze_line_average, HazeLineClusters};
pub use wgif::wgif_refine;

/// Coefficient applied to the dark channel of `Z / A`.
pub const DDAP_COEFFICIENT: f64 = 31.0 / 32.0;

/// Lower bound of the initial stage.
pub const INITIAL_MIN: f64 = 1.0 / 32.0;

/// Floor applied after averaging and refinement.
pub const T_FLOOR: f64 = 1.0 / 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Initial,
    Averaged,
    Refined,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Initial => "initial",
            Stage::Averaged => "averaged",
            Stage::Refined => "refined",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "initial" => Ok(Stage::Initial),
            "averaged" => Ok(Stage::Averaged),
            "refined" => Ok(Stage::Refined),
            other => Err(Error::param(
                "stage",
                format!("`{other}` (expected initial, averaged or refined)"),
            )),
        }
    }
}

/// Single-channel transmission map tagged with the stage that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap {
    pub map: PlanarImage,
    pub stage: Stage,
}

impl TransmissionMap {
    pub fn new(map: PlanarImage, stage: Stage) -> Result<Self> {
        if map.channels() != 1 {
            return Err(Error::param("transmission", "must be single-channel"));
        }
        Ok(Self { map, stage })
    }

    pub fn values(&self) -> &[f64] {
        self.map.data()
    }

    pub fn width(&self) -> usize {
        self.map.width()
    }

    pub fn height(&self) -> usize {
        self.map.height()
    }
}

/// `G = clamp(1 - min_c(Z_c / A_c), 0, 1)`; large where the scene is dark
/// relative to the airlight.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceImage(pub PlanarImage);

impl GuidanceImage {
    pub fn values(&self) -> &[f64] {
        self.0.data()
    }
}

/// `Z / A` per channel, clamped to `[0, 1]`.
pub fn normalized_by_airlight(img: &PlanarImage, a: &Airlight) -> PlanarImage {
    let mut out = img.clone();
    for c in 0..img.channels() {
        let ac = a.channel(c);
        for v in out.plane_mut(c) {
            *v = (*v / ac).clamp(0.0, 1.0);
        }
    }
    out
}

/// Initial transmission from the dark direct attenuation prior.
pub fn initial_transmission(img: &PlanarImage, a: &Airlight, rho: usize) -> TransmissionMap {
    let dark = dark_channel(&normalized_by_airlight(img, a), rho);
    TransmissionMap {
        map: dark.map(|f| 1.0 - DDAP_COEFFICIENT * f),
        stage: Stage::Initial,
    }
}

pub fn guidance(img: &PlanarImage, a: &Airlight) -> GuidanceImage {
    let mins = dark::channel_min(&normalized_by_airlight(img, a));
    let data = mins
        .into_iter()
        .map(|m| (1.0 - m).clamp(0.0, 1.0))
        .collect();
    GuidanceImage(
        PlanarImage::from_planar(img.width(), img.height(), 1, data).expect("sizes agree"),
    )
}

/// Gaussian pyramid `{t}_G^l`, `l = 0..=levels`, of a refined map.
pub fn transmission_pyramid(t: &TransmissionMap, levels: usize) -> Result<Vec<PlanarImage>> {
    if t.stage != Stage::Refined {
        return Err(Error::param(
            "transmission",
            "pyramid requires the refined stage",
        ));
    }
    Ok(gaussian_pyramid(&t.map, levels))
}

/// Tunables of the three estimation stages.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionParams {
    pub rho_dark: usize,
    pub rho_wgif: usize,
    pub lambda: f64,
    pub bin_step: f64,
    pub nu: usize,
    pub r_min: f64,
}

impl Default for TransmissionParams {
    fn default() -> Self {
        Self {
            rho_dark: 7,
            rho_wgif: 25,
            lambda: 1e-3,
            bin_step: std::f64::consts::PI / 720.0,
            nu: 200,
            r_min: 0.02,
        }
    }
}

/// All intermediate maps of one estimation run.
#[derive(Debug, Clone)]
pub struct TransmissionStages {
    pub initial: TransmissionMap,
    pub averaged: TransmissionMap,
    pub refined: TransmissionMap,
    pub guidance: GuidanceImage,
    pub clusters: HazeLineClusters,
}

impl TransmissionStages {
    pub fn get(&self, stage: Stage) -> &TransmissionMap {
        match stage {
            Stage::Initial => &self.initial,
            Stage::Averaged => &self.averaged,
            Stage::Refined => &self.refined,
        }
    }
}

/// Runs initial estimate, haze-line averaging and guided refinement.
pub fn estimate_transmission(
    img: &PlanarImage,
    a: &Airlight,
    params: &TransmissionParams,
) -> Result<TransmissionStages> {
    let initial = initial_transmission(img, a, params.rho_dark);
    let clusters = cluster_haze_lines(img, a, params.bin_step, params.nu, params.r_min)?;
    let averaged = haze_line_average(&initial, &clusters)?;
    let guidance = guidance(img, a);
    let refined = wgif_refine(&averaged, &guidance, params.rho_wgif, params.lambda)?;
    Ok(TransmissionStages {
        initial,
        averaged,
        refined,
        guidance,
        clusters,
    })
}
