//! Intensity mapping functions between two exposures of one scene, and the
//! saturation-synchronized normalization built on top of them.
//!
//! `z1` is always the longer exposure. `f12` maps its intensities onto the
//! shorter exposure `z2`, `f21` maps back. Dark pixels of `z1` that `z2`
//! cannot resolve (below `zeta1`) are pushed through `f12` so both images
//! agree on what is under-exposed; bright pixels of `z2` that `z1` clips
//! (above `zeta2`) are pushed through `f21` so both agree on what is
//! over-exposed.

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const DEFAULT_ALPHA: u8 = 5;
pub const DEFAULT_BETA: u8 = 254;

/// Means within this many levels count as the same exposure.
pub const EXPOSURE_TIE_BAND: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub counts: [u64; 256],
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn cumulative(&self) -> [u64; 256] {
        let mut acc = 0;
        let mut out = [0; 256];
        for (o, &c) in out.iter_mut().zip(&self.counts) {
            acc += c;
            *o = acc;
        }
        out
    }

    /// Lowest intensity at which the cumulative count reaches half the pixels.
    pub fn lower_median(&self) -> u8 {
        let total = self.total();
        let target = total.div_ceil(2).max(1);
        let cum = self.cumulative();
        cum.iter().position(|&c| c >= target).unwrap_or(255) as u8
    }
}

pub fn histogram(img: &GrayImage) -> Histogram {
    let mut counts = [0u64; 256];
    for &v in img.as_slice() {
        counts[v as usize] += 1;
    }
    Histogram { counts }
}

/// A 256-entry monotone non-decreasing intensity lookup table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntensityLut {
    table: [u8; 256],
}

impl IntensityLut {
    pub fn identity() -> Self {
        let mut table = [0u8; 256];
        for (z, t) in table.iter_mut().enumerate() {
            *t = z as u8;
        }
        Self { table }
    }

    pub fn from_table(table: [u8; 256]) -> Result<Self> {
        if table.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parameter("intensity LUT must be non-decreasing".into()));
        }
        Ok(Self { table })
    }

    #[inline]
    pub fn apply(&self, z: u8) -> u8 {
        self.table[z as usize]
    }

    pub fn table(&self) -> &[u8; 256] {
        &self.table
    }

    pub fn is_monotone(&self) -> bool {
        self.table.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Histogram specification: for each level of `from`, the smallest level of
/// `to` whose normalized cumulative count reaches it.
fn match_cumulative(from: &Histogram, to: &Histogram) -> IntensityLut {
    let (cf, ct) = (from.cumulative(), to.cumulative());
    let (nf, nt) = (u128::from(from.total()), u128::from(to.total()));
    let mut table = [0u8; 256];
    let mut v = 0usize;
    for z in 0..256 {
        // H_to(v) >= H_from(z)  <=>  ct[v] * nf >= cf[z] * nt
        let need = u128::from(cf[z]) * nt;
        while v < 255 && u128::from(ct[v]) * nf < need {
            v += 1;
        }
        table[z] = v as u8;
    }
    IntensityLut { table }
}

/// Estimate `(f12, f21)` from the cumulative histograms of the two exposures.
pub fn estimate_imf(z1: &GrayImage, z2: &GrayImage) -> Result<(IntensityLut, IntensityLut)> {
    for img in [z1, z2] {
        if img.is_empty() {
            return Err(Error::Dimension {
                width: img.width(),
                height: img.height(),
                reason: "cannot estimate an IMF from an empty image",
            });
        }
    }
    let (h1, h2) = (histogram(z1), histogram(z2));
    Ok((match_cumulative(&h1, &h2), match_cumulative(&h2, &h1)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SaturationThresholds {
    pub alpha: u8,
    pub beta: u8,
    pub zeta1: u8,
    pub zeta2: u8,
}

/// `zeta1` is the last level of `z1` that `f12` sends to `<= alpha`, `zeta2`
/// the first level of `z2` that `f21` sends to `>= beta`, each then clamped
/// so that `zeta1 <= beta` and `zeta2 >= alpha`.
pub fn compute_thresholds(
    f12: &IntensityLut,
    f21: &IntensityLut,
    alpha: u8,
    beta: u8,
) -> Result<SaturationThresholds> {
    if alpha >= beta {
        return Err(Error::Parameter(format!(
            "alpha ({alpha}) must be below beta ({beta})"
        )));
    }
    let zeta1 = (0..=255u8).rev().find(|&z| f12.apply(z) <= alpha).unwrap_or(0);
    let zeta2 = (0..=255u8).find(|&z| f21.apply(z) >= beta).unwrap_or(255);
    Ok(SaturationThresholds {
        alpha,
        beta,
        zeta1: zeta1.min(beta),
        zeta2: zeta2.max(alpha),
    })
}

#[derive(Clone, Debug)]
pub struct NormalizedPair {
    pub z1_hat: GrayImage,
    pub z2_hat: GrayImage,
    pub thresholds: SaturationThresholds,
    pub f12: IntensityLut,
    pub f21: IntensityLut,
}

impl NormalizedPair {
    /// Count pixels violating the range property of the normalized pair.
    pub fn range_violations(&self) -> usize {
        let t = &self.thresholds;
        let bad1 = self
            .z1_hat
            .as_slice()
            .iter()
            .filter(|&&v| !(v <= t.alpha || v >= t.zeta1))
            .count();
        let bad2 = self
            .z2_hat
            .as_slice()
            .iter()
            .filter(|&&v| !(v <= t.zeta2 || v >= t.beta))
            .count();
        bad1 + bad2
    }
}

/// Map both exposures with already-estimated IMFs and thresholds.
pub fn apply_normalization(
    z1: &GrayImage,
    z2: &GrayImage,
    f12: &IntensityLut,
    f21: &IntensityLut,
    thresholds: &SaturationThresholds,
) -> (GrayImage, GrayImage) {
    let z1_hat = z1.map(|v| if v >= thresholds.zeta1 { v } else { f12.apply(v) });
    let z2_hat = z2.map(|v| if v <= thresholds.zeta2 { v } else { f21.apply(v) });
    (z1_hat, z2_hat)
}

/// Normalize a (long, short) exposure pair with the default saturation levels.
pub fn normalize_pair(z1: &GrayImage, z2: &GrayImage) -> Result<NormalizedPair> {
    normalize_pair_with(z1, z2, DEFAULT_ALPHA, DEFAULT_BETA)
}

pub fn normalize_pair_with(
    z1: &GrayImage,
    z2: &GrayImage,
    alpha: u8,
    beta: u8,
) -> Result<NormalizedPair> {
    let (m1, m2) = (z1.mean(), z2.mean());
    if m1 + EXPOSURE_TIE_BAND < m2 {
        return Err(Error::Ordering {
            first: m1,
            second: m2,
        });
    }
    let (f12, f21) = estimate_imf(z1, z2)?;
    let thresholds = compute_thresholds(&f12, &f21, alpha, beta)?;
    let (z1_hat, z2_hat) = apply_normalization(z1, z2, &f12, &f21, &thresholds);
    Ok(NormalizedPair {
        z1_hat,
        z2_hat,
        thresholds,
        f12,
        f21,
    })
}

/// The two images with the brighter (longer) exposure first.
#[derive(Clone, Debug)]
pub struct ExposureOrder<'a> {
    pub long: &'a GrayImage,
    pub short: &'a GrayImage,
    pub swapped: bool,
}

pub fn order_by_exposure<'a>(a: &'a GrayImage, b: &'a GrayImage) -> ExposureOrder<'a> {
    if b.mean() > a.mean() + EXPOSURE_TIE_BAND {
        ExposureOrder {
            long: b,
            short: a,
            swapped: true,
        }
    } else {
        ExposureOrder {
            long: a,
            short: b,
            swapped: false,
        }
    }
}
