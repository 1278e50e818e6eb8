//! Coarse-to-fine alignment of coded exposures.
//!
//! At every pyramid level the moving image is warped by the current motion,
//! smoothed, re-coded and compared plane by plane with the coded reference.
//! The squared bit difference equals the Hamming distance on binary planes,
//! so its linearization gives a 3x3 least-squares update.

mod init;
mod normal;

pub use init::{init_histogram_match, SEARCH_FRACTION};
pub use normal::{build_normal_equations, solve_update, NormalEquations, MAX_CONDITION};

use crate::coder::{encode, plane_gradients, squared_cost, BitPlanes, CoderKind, PlaneGradients};
use crate::error::{Error, Result};
use crate::filter::gaussian_smooth;
use crate::image::{FloatImage, GrayImage};
use crate::imf::{normalize_pair_with, order_by_exposure, NormalizedPair, DEFAULT_ALPHA, DEFAULT_BETA};
use crate::pyramid::build_pyramid;
use crate::warp::{scale_motion_to_finer, warp_euclidean, Motion, ValidityMask};

/// An iteration may raise the mean cost by at most this factor.
pub const MAX_COST_INCREASE: f64 = 1.01;

#[derive(Clone, Debug, PartialEq)]
pub struct AlignConfig {
    pub max_pyramid_levels: usize,
    pub max_iters_per_level: usize,
    /// Stop once `|Δθ|` (radians) falls below this...
    pub theta_tolerance: f64,
    /// ...and both translation increments (pixels) fall below this.
    pub translation_tolerance: f64,
    pub coder: CoderKind,
    pub sigma: f64,
    pub alpha: u8,
    pub beta: u8,
    pub use_histogram_init: bool,
    /// Map both exposures through the intensity mapping functions before coding.
    pub imf_normalization: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            max_pyramid_levels: 4,
            max_iters_per_level: 10,
            theta_tolerance: 1e-4,
            translation_tolerance: 0.01,
            coder: CoderKind::Lbp,
            sigma: 0.5,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            use_histogram_init: true,
            imf_normalization: true,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_pyramid_levels == 0 || self.max_iters_per_level == 0 {
            return Err(Error::Parameter("level and iteration counts must be at least 1".into()));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.alpha >= self.beta {
            return Err(Error::Parameter("alpha must be below beta".into()));
        }
        Ok(())
    }

    fn converged(&self, step: &Motion) -> bool {
        step.theta.abs() < self.theta_tolerance
            && step.tx.abs().max(step.ty.abs()) < self.translation_tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelStats {
    /// 0 is full resolution.
    pub level: usize,
    pub iterations: usize,
    /// Squared bit difference over the valid pixels.
    pub cost: f64,
    pub valid_fraction: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelOutcome {
    pub motion: Motion,
    pub stats: LevelStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignResult {
    /// Maps reference pixels onto the slave: `slave(psi(p)) ≈ reference(p)`.
    pub motion: Motion,
    /// Translation seed at full resolution, when initialization ran.
    pub init: Option<Motion>,
    /// Coarsest level first.
    pub per_level: Vec<LevelStats>,
    pub converged: bool,
}

impl AlignResult {
    pub fn final_cost(&self) -> f64 {
        self.per_level.last().map_or(0.0, |s| s.cost)
    }
}

/// Smoothing radius used ahead of coding.
const CODE_SMOOTH_RADIUS: usize = 1;

fn code(img: &FloatImage, cfg: &AlignConfig) -> Result<BitPlanes> {
    encode(&gaussian_smooth(img, cfg.sigma, CODE_SMOOTH_RADIUS)?, cfg.coder)
}

struct Evaluation {
    planes: BitPlanes,
    mask: ValidityMask,
    cost: f64,
}

impl Evaluation {
    fn mean_cost(&self) -> f64 {
        self.cost / self.mask.count().max(1) as f64
    }
}

/// Reference side of one level, fixed across iterations.
struct LevelReference {
    planes: BitPlanes,
    grads: PlaneGradients,
}

impl LevelReference {
    fn new(img: &FloatImage, cfg: &AlignConfig) -> Result<Self> {
        let planes = code(img, cfg)?;
        let grads = plane_gradients(&planes)?;
        Ok(Self { planes, grads })
    }

    fn evaluate(&self, mov: &FloatImage, motion: &Motion, cfg: &AlignConfig) -> Result<Evaluation> {
        let (warped, mask) = warp_euclidean(mov, motion);
        // Codes near the warp border read filled-in samples through both the
        // smoothing and the neighbor comparisons.
        let mask = mask.eroded(CODE_SMOOTH_RADIUS + 1);
        let planes = code(&warped, cfg)?;
        let cost = squared_cost(&self.planes, &planes, &mask)?;
        Ok(Evaluation { planes, mask, cost })
    }
}

fn acceptable(trial: &Evaluation, limit: f64) -> bool {
    trial.mask.count() > 0 && trial.mean_cost() <= limit
}

/// Refine `init` on one pyramid level.
pub fn align_level(
    ref_img: &FloatImage,
    mov_img: &FloatImage,
    init: Motion,
    cfg: &AlignConfig,
) -> Result<LevelOutcome> {
    if !ref_img.same_dims(mov_img) {
        return Err(Error::Shape(format!(
            "level images {}x{} and {}x{} differ",
            ref_img.width(),
            ref_img.height(),
            mov_img.width(),
            mov_img.height()
        )));
    }
    let reference = LevelReference::new(ref_img, cfg)?;
    let mut motion = init;
    let mut current = reference.evaluate(mov_img, &motion, cfg)?;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters_per_level {
        iterations += 1;
        let step = build_normal_equations(&reference.planes, &current.planes, &reference.grads, &current.mask)
            .and_then(|eq| solve_update(&eq));
        let step = match step {
            Ok(step) => step,
            Err(Error::Degenerate(_)) if iterations == 1 => {
                return Ok(LevelOutcome {
                    motion: init,
                    stats: LevelStats {
                        level: 0,
                        iterations,
                        cost: current.cost,
                        valid_fraction: current.mask.fraction(),
                        converged: false,
                    },
                });
            }
            Err(Error::Degenerate(_)) => break,
            Err(e) => return Err(e),
        };

        let candidate = motion.compose(&step);
        let trial = reference.evaluate(mov_img, &candidate, cfg)?;
        let limit = current.mean_cost() * MAX_COST_INCREASE;
        if acceptable(&trial, limit) {
            motion = candidate;
            current = trial;
            if cfg.converged(&step) {
                converged = true;
                break;
            }
            continue;
        }
        // Rejected: retry once with half the step, then stop either way.
        let half = step * 0.5;
        let candidate = motion.compose(&half);
        let trial = reference.evaluate(mov_img, &candidate, cfg)?;
        if acceptable(&trial, limit) {
            motion = candidate;
            current = trial;
            converged = cfg.converged(&half);
        }
        break;
    }

    Ok(LevelOutcome {
        motion,
        stats: LevelStats {
            level: 0,
            iterations,
            cost: current.cost,
            valid_fraction: current.mask.fraction(),
            converged,
        },
    })
}

/// Integer search radius around each translation seed, in coarse pixels.
pub const SEED_SEARCH_RADIUS: i32 = 2;

/// Profiles can lock onto large flat or filled regions, so the projection
/// seed is checked against zero motion: integer translations around both are
/// scored by coarse coded cost and the cheapest one wins.
fn refine_seed(ref_img: &FloatImage, mov_img: &FloatImage, seed: Motion, cfg: &AlignConfig) -> Result<Motion> {
    let reference = LevelReference::new(ref_img, cfg)?;
    let mut best: Option<(f64, f64, Motion)> = None;
    for center in [Motion::IDENTITY, seed] {
        for dy in -SEED_SEARCH_RADIUS..=SEED_SEARCH_RADIUS {
            for dx in -SEED_SEARCH_RADIUS..=SEED_SEARCH_RADIUS {
                let m = Motion::new(0.0, center.tx + f64::from(dx), center.ty + f64::from(dy));
                let e = reference.evaluate(mov_img, &m, cfg)?;
                if e.mask.count() == 0 {
                    continue;
                }
                let key = (e.mean_cost(), m.tx.abs() + m.ty.abs());
                if best.is_none_or(|(c, n, _)| key.0 < c || (key.0 == c && key.1 < n)) {
                    best = Some((key.0, key.1, m));
                }
            }
        }
    }
    Ok(best.map_or(Motion::IDENTITY, |(_, _, m)| m))
}

/// Align two already-normalized exposures of identical dimensions.
pub fn align_pyramid(z1_hat: &GrayImage, z2_hat: &GrayImage, cfg: &AlignConfig) -> Result<AlignResult> {
    cfg.validate()?;
    if !z1_hat.same_dims(z2_hat) {
        return Err(Error::Shape(format!(
            "images {}x{} and {}x{} differ",
            z1_hat.width(),
            z1_hat.height(),
            z2_hat.width(),
            z2_hat.height()
        )));
    }
    let pyr1 = build_pyramid(&z1_hat.to_float(), cfg.max_pyramid_levels)?;
    let pyr2 = build_pyramid(&z2_hat.to_float(), cfg.max_pyramid_levels)?;
    let coarsest = pyr1.len().min(pyr2.len()) - 1;

    let mut motion = Motion::IDENTITY;
    let mut init = None;
    if cfg.use_histogram_init {
        let (ref_c, mov_c) = (pyr1.level(coarsest), pyr2.level(coarsest));
        let seed = init_histogram_match(&code(ref_c, cfg)?, &code(mov_c, cfg)?);
        let seed = refine_seed(ref_c, mov_c, seed, cfg)?;
        let scale = f64::from(1u32 << coarsest);
        init = Some(Motion::new(seed.theta, seed.tx * scale, seed.ty * scale));
        motion = seed;
    }

    let mut per_level = Vec::with_capacity(coarsest + 1);
    for level in (0..=coarsest).rev() {
        let outcome = align_level(pyr1.level(level), pyr2.level(level), motion, cfg)?;
        per_level.push(LevelStats {
            level,
            ..outcome.stats
        });
        motion = outcome.motion;
        if level > 0 {
            motion = scale_motion_to_finer(motion);
        }
    }
    let converged = per_level.last().is_some_and(|s| s.converged);
    Ok(AlignResult {
        motion,
        init,
        per_level,
        converged,
    })
}

#[derive(Clone, Debug)]
pub struct Alignment {
    pub result: AlignResult,
    /// The original slave resampled onto the reference frame.
    pub aligned: GrayImage,
    /// Pixels of `aligned` that came from inside the slave.
    pub mask: ValidityMask,
    /// Absent when normalization is switched off.
    pub normalized: Option<NormalizedPair>,
    /// True when the slave was the longer exposure.
    pub swapped: bool,
}

/// Full pipeline: order, normalize, align, resample the original slave.
pub fn align(z1: &GrayImage, z2: &GrayImage, cfg: &AlignConfig) -> Result<Alignment> {
    cfg.validate()?;
    if !z1.same_dims(z2) {
        return Err(Error::Shape(format!(
            "reference {}x{} and slave {}x{} differ",
            z1.width(),
            z1.height(),
            z2.width(),
            z2.height()
        )));
    }
    let order = order_by_exposure(z1, z2);
    let (result, normalized) = if cfg.imf_normalization {
        let normalized = normalize_pair_with(order.long, order.short, cfg.alpha, cfg.beta)?;
        let (ref_hat, slave_hat) = if order.swapped {
            (&normalized.z2_hat, &normalized.z1_hat)
        } else {
            (&normalized.z1_hat, &normalized.z2_hat)
        };
        (align_pyramid(ref_hat, slave_hat, cfg)?, Some(normalized))
    } else {
        (align_pyramid(z1, z2, cfg)?, None)
    };
    let (aligned, mask) = warp_euclidean(&z2.to_float(), &result.motion);
    Ok(Alignment {
        result,
        aligned: aligned.to_gray(),
        mask,
        normalized,
        swapped: order.swapped,
    })
}
