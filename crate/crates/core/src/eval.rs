//! Synthetic test data and accuracy metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filter::gaussian_smooth;
use crate::image::{FloatImage, GrayImage};
use crate::warp::{warp_euclidean, Motion, ValidityMask};

/// Exponent of the simulated camera response.
pub const RESPONSE_GAMMA: f64 = 2.2;

pub const DEFAULT_MI_BINS: usize = 64;

/// A slave image produced by moving the content of a reference.
#[derive(Clone, Debug)]
pub struct SynthWarp {
    pub image: GrayImage,
    /// Pixels that received content from inside the source.
    pub mask: ValidityMask,
    pub truth: Motion,
}

/// Move the content of `img` by `motion`: the returned image satisfies
/// `out(psi(p)) = img(p)`, so aligning it back to `img` recovers `motion`.
pub fn synth_warp(img: &GrayImage, motion: &Motion) -> SynthWarp {
    let (warped, mask) = warp_euclidean(&img.to_float(), &motion.inverse());
    SynthWarp {
        image: warped.to_gray(),
        mask,
        truth: *motion,
    }
}

/// Re-expose `img` by `ev` stops through a gamma response with hard clipping.
pub fn synth_exposure(img: &GrayImage, ev: f64) -> Result<GrayImage> {
    if !(-4.0..=4.0).contains(&ev) {
        return Err(Error::Parameter(format!("exposure change {ev} EV outside [-4, 4]")));
    }
    let gain = ev.exp2();
    let mut lut = [0u8; 256];
    for (z, out) in lut.iter_mut().enumerate() {
        let radiance = (z as f64 / 255.0).powf(RESPONSE_GAMMA) * gain;
        *out = (255.0 * radiance.powf(1.0 / RESPONSE_GAMMA)).round().clamp(0.0, 255.0) as u8;
    }
    Ok(img.map(|v| lut[v as usize]))
}

/// Deterministic textured test scene with a broad intensity histogram:
/// multi-octave value noise overlaid with random blobs and bars.
pub fn synth_scene(width: usize, height: usize, seed: u64) -> Result<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = FloatImage::filled(width, height, 0.0)?;

    let mut cell = (width.max(height) as f64 / 4.0).max(4.0);
    let mut amplitude = 1.0;
    while cell >= 2.0 {
        add_value_noise(&mut acc, cell, amplitude, &mut rng)?;
        cell /= 2.0;
        amplitude *= 0.62;
    }

    let span = width.min(height) as f64;
    let shapes = 12 + (width * height) / 8000;
    for _ in 0..shapes {
        let level = rng.gen_range(-1.2..1.2);
        let (cx, cy) = (rng.gen_range(0.0..width as f64), rng.gen_range(0.0..height as f64));
        let size = rng.gen_range(0.02..0.12) * span;
        if rng.gen_bool(0.5) {
            let (rx, ry) = (size, size * rng.gen_range(0.4..1.6));
            paint(&mut acc, level, |x, y| ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0);
        } else {
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let (s, c) = angle.sin_cos();
            let (hl, hw) = (size * rng.gen_range(1.0..3.0), size * rng.gen_range(0.15..0.5));
            paint(&mut acc, level, |x, y| {
                let (dx, dy) = (x - cx, y - cy);
                (c * dx + s * dy).abs() <= hl && (-s * dx + c * dy).abs() <= hw
            });
        }
    }

    let acc = gaussian_smooth(&acc, 0.7, 2)?;
    let mut sorted = acc.as_slice().to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[sorted.len() / 100];
    let hi = sorted[sorted.len() - 1 - sorted.len() / 100];
    let range = (hi - lo).max(1e-9);
    Ok(acc.map(|v| (12.0 + 232.0 * (v - lo) / range).round().clamp(0.0, 255.0) as u8))
}

fn add_value_noise(acc: &mut FloatImage, cell: f64, amplitude: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    let gw = (acc.width() as f64 / cell).ceil() as usize + 2;
    let gh = (acc.height() as f64 / cell).ceil() as usize + 2;
    let lattice = FloatImage::from_fn(gw, gh, |_, _| rng.gen_range(-1.0..1.0))?;
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    for y in 0..acc.height() {
        let fy = y as f64 / cell;
        let (iy, ty) = (fy.floor() as usize, smooth(fy.fract()));
        for x in 0..acc.width() {
            let fx = x as f64 / cell;
            let (ix, tx) = (fx.floor() as usize, smooth(fx.fract()));
            let top = lattice.get(ix, iy) * (1.0 - tx) + lattice.get(ix + 1, iy) * tx;
            let bottom = lattice.get(ix, iy + 1) * (1.0 - tx) + lattice.get(ix + 1, iy + 1) * tx;
            let v = acc.get(x, y) + amplitude * (top * (1.0 - ty) + bottom * ty);
            acc.set(x, y, v);
        }
    }
    Ok(())
}

fn paint(acc: &mut FloatImage, level: f64, inside: impl Fn(f64, f64) -> bool) {
    for y in 0..acc.height() {
        for x in 0..acc.width() {
            if inside(x as f64, y as f64) {
                let v = 0.5 * acc.get(x, y) + level;
                acc.set(x, y, v);
            }
        }
    }
}

/// Absolute per-parameter error; `d_theta` in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotionError {
    pub d_theta: f64,
    pub d_ty: f64,
    pub d_tx: f64,
}

impl MotionError {
    pub fn max_translation(&self) -> f64 {
        self.d_tx.max(self.d_ty)
    }
}

pub fn motion_error(est: &Motion, truth: &Motion) -> MotionError {
    MotionError {
        d_theta: (est.theta - truth.theta).abs().to_degrees(),
        d_ty: (est.ty - truth.ty).abs(),
        d_tx: (est.tx - truth.tx).abs(),
    }
}

/// Joint intensity histogram over `bins x bins` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct JointHistogram {
    bins: usize,
    counts: Vec<u64>,
}

impl JointHistogram {
    pub fn new(a: &GrayImage, b: &GrayImage, mask: &ValidityMask, bins: usize) -> Result<Self> {
        if !(2..=256).contains(&bins) {
            return Err(Error::Parameter(format!("bin count {bins} outside [2, 256]")));
        }
        if !a.same_dims(b) || !a.same_dims(mask) {
            return Err(Error::Shape("images and mask must share dimensions".into()));
        }
        let bin = |v: u8| usize::from(v) * bins / 256;
        let mut counts = vec![0u64; bins * bins];
        for ((&va, &vb), &m) in a.as_slice().iter().zip(b.as_slice()).zip(mask.as_slice()) {
            if m {
                counts[bin(va) * bins + bin(vb)] += 1;
            }
        }
        Ok(Self { bins, counts })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.bins + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mutual_information(&self) -> f64 {
        let n = self.total() as f64;
        let b = self.bins;
        let mut ca = vec![0u64; b];
        let mut cb = vec![0u64; b];
        for i in 0..b {
            for j in 0..b {
                ca[i] += self.count(i, j);
                cb[j] += self.count(i, j);
            }
        }
        let pa: Vec<f64> = ca.iter().map(|&c| c as f64 / n).collect();
        let pb: Vec<f64> = cb.iter().map(|&c| c as f64 / n).collect();
        // Sorted summation keeps the result exactly symmetric in (a, b).
        let mut terms = Vec::new();
        for i in 0..b {
            for j in 0..b {
                let c = self.count(i, j);
                if c > 0 {
                    let p = c as f64 / n;
                    terms.push(p * (p / (pa[i] * pb[j])).log2());
                }
            }
        }
        terms.sort_by(f64::total_cmp);
        let mi: f64 = terms.iter().sum();
        mi.max(0.0)
    }
}

/// Mutual information in bits over the masked pixels.
pub fn mutual_information(a: &GrayImage, b: &GrayImage, mask: &ValidityMask, bins: usize) -> Result<f64> {
    let joint = JointHistogram::new(a, b, mask, bins)?;
    if joint.total() == 0 {
        return Err(Error::Degenerate("mutual information over an empty mask"));
    }
    Ok(joint.mutual_information())
}

/// Shannon entropy in bits of the binned intensity distribution.
pub fn entropy(img: &GrayImage, mask: &ValidityMask, bins: usize) -> Result<f64> {
    let joint = JointHistogram::new(img, img, mask, bins)?;
    let n = joint.total() as f64;
    if n == 0.0 {
        return Err(Error::Degenerate("entropy over an empty mask"));
    }
    Ok((0..bins)
        .map(|i| joint.count(i, i) as f64 / n)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum())
}
