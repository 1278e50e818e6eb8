//! Alignment of differently exposed photographs of one scene.
//!
//! The pipeline normalizes an exposure pair with intensity mapping functions
//! so that both images agree on which regions are saturated ([`imf`]), codes
//! the normalized luminance as binary local patterns ([`coder`]), and solves
//! for a rotation plus translation by linearized least squares on the bit
//! planes, coarse to fine ([`align`]).
//!
//! ```no_run
//! use exposalign::{align, load_gray, AlignConfig};
//!
//! let reference = load_gray("long.png")?;
//! let slave = load_gray("short.png")?;
//! let out = align(&reference, &slave, &AlignConfig::default())?;
//! println!("theta = {:.3} deg", out.result.motion.theta_degrees());
//! # Ok::<(), exposalign::Error>(())
//! ```

#![allow(clippy::needless_range_loop)]

pub mod align;
pub mod coder;
pub mod error;
pub mod eval;
pub mod filter;
pub mod image;
pub mod imf;
pub mod io;
pub mod pyramid;
pub mod warp;

#[cfg(test)]
mod testutil;

pub use crate::align::{align, align_level, align_pyramid, AlignConfig, AlignResult, Alignment, LevelStats};
pub use crate::coder::{BitPlanes, CoderKind, PlaneGradients};
pub use crate::error::{Error, Result};
pub use crate::image::{FloatImage, GrayImage, RgbImage};
pub use crate::imf::{IntensityLut, NormalizedPair, SaturationThresholds};
pub use crate::io::{load_gray, save_gray};
pub use crate::pyramid::Pyramid;
pub use crate::warp::{Motion, ValidityMask};
