//! Multi-scale single image dehazing.
//!
//! The hazy image is split into a Gaussian base level and Laplacian
//! residuals. Transmission is estimated once on the low-pass image, from a
//! dark-channel bound, haze-line averaging and weighted guided filtering,
//! then every pyramid level is restored with its own rule before collapsing.
//!
//! ```no_run
//! use msdehaze::{codec, config::PipelineConfig, restore};
//!
//! let hazy = codec::load_image("hazy.ppm")?;
//! let out = restore::dehaze(&hazy, &PipelineConfig::default(), &Default::default())?;
//! codec::save_image(&out.image, "clear.png")?;
//! # Ok::<(), msdehaze::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod airlight;
pub mod cli;
pub mod codec;
pub mod config;
pub mod error;
pub mod image;
pub mod pyramid;
pub mod restore;
pub mod synth;
pub mod transmission;

pub use airlight::{estimate_airlight, Airlight};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use image::{PlanarImage, ShiftedImage};
pub use restore::{dehaze, DehazeOutput, Overrides};
