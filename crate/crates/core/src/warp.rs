//! Euclidean motion and bilinear warping.
//!
//! Coordinates follow image convention: `x` is the column, `y` the row,
//! origin at the top-left pixel. Rotation is about the image center
//! `((w - 1) / 2, (h - 1) / 2)`, so a motion maps a reference pixel `p` to
//!
//! ```text
//! psi(p) = R(theta) (p - c) + c + t
//! ```
//!
//! in the other image. Warping an image by a motion samples it at `psi(p)`.

use std::ops::Mul;

use crate::image::{FloatImage, Image};

/// Rigid 2D motion. `theta` is in radians, translations in pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Motion {
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Motion {
    pub const IDENTITY: Motion = Motion {
        theta: 0.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn new(theta: f64, tx: f64, ty: f64) -> Self {
        Self { theta, tx, ty }
    }

    pub fn from_degrees(theta_deg: f64, tx: f64, ty: f64) -> Self {
        Self::new(theta_deg.to_radians(), tx, ty)
    }

    pub fn theta_degrees(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.tx.is_finite() && self.ty.is_finite()
    }

    /// Apply to a point given relative to the rotation center.
    #[inline]
    pub fn apply_centered(&self, dx: f64, dy: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (c * dx - s * dy + self.tx, s * dx + c * dy + self.ty)
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Motion) -> Motion {
        let (tx, ty) = self.apply_centered(inner.tx, inner.ty);
        Motion::new(self.theta + inner.theta, tx, ty)
    }

    pub fn inverse(&self) -> Motion {
        let back = Motion::new(-self.theta, 0.0, 0.0);
        let (tx, ty) = back.apply_centered(-self.tx, -self.ty);
        Motion::new(-self.theta, tx, ty)
    }
}

impl Mul<f64> for Motion {
    type Output = Motion;

    fn mul(self, k: f64) -> Motion {
        Motion::new(self.theta * k, self.tx * k, self.ty * k)
    }
}

/// Map a motion estimated at one pyramid level to the next finer level.
pub fn scale_motion_to_finer(motion: Motion) -> Motion {
    Motion::new(motion.theta, 2.0 * motion.tx, 2.0 * motion.ty)
}

/// Per-pixel flag, true where a warped sample is fully inside its source.
pub type ValidityMask = Image<bool>;

impl ValidityMask {
    pub fn all_valid(width: usize, height: usize) -> ValidityMask {
        ValidityMask::filled(width, height, true).expect("mask dimensions come from an image")
    }

    pub fn count(&self) -> usize {
        self.as_slice().iter().filter(|&&v| v).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.len() as f64
    }

    pub fn and(&self, other: &ValidityMask) -> ValidityMask {
        ValidityMask::from_fn(self.width(), self.height(), |x, y| self.get(x, y) && other.get(x, y))
            .expect("mask dimensions come from an image")
    }

    /// Keep only pixels whose whole `(2r+1)²` neighborhood is valid and inside the frame.
    pub fn eroded(&self, radius: usize) -> ValidityMask {
        let (w, h) = (self.width(), self.height());
        let r = radius as isize;
        ValidityMask::from_fn(w, h, |x, y| {
            let (x, y) = (x as isize, y as isize);
            if x < r || y < r || x + r >= w as isize || y + r >= h as isize {
                return false;
            }
            (-r..=r).all(|dy| (-r..=r).all(|dx| self.get((x + dx) as usize, (y + dy) as usize)))
        })
        .expect("mask dimensions come from an image")
    }
}

/// Rotation center used by every motion on a `width x height` frame.
#[inline]
pub fn center(width: usize, height: usize) -> (f64, f64) {
    ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
}

/// Resolve one axis of a bilinear lookup. Returns the base index and the
/// fractional weight, or `None` when a tap with non-zero weight falls outside.
#[inline]
fn bilinear_axis(s: f64, len: usize) -> Option<(usize, f64)> {
    let base = s.floor();
    let frac = s - base;
    if base < 0.0 || base > (len - 1) as f64 {
        return None;
    }
    let i = base as usize;
    if frac > 0.0 && i + 1 >= len {
        return None;
    }
    Some((i, frac))
}

/// Bilinear sample at fractional coordinates, `None` when out of frame.
#[inline]
pub fn sample_bilinear(img: &FloatImage, sx: f64, sy: f64) -> Option<f64> {
    let (x0, fx) = bilinear_axis(sx, img.width())?;
    let (y0, fy) = bilinear_axis(sy, img.height())?;
    let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
    let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
    let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
    let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}

/// Resample `img` at `psi(p)` for every output pixel `p`. Out-of-frame
/// samples are set to zero and flagged false in the mask.
pub fn warp_euclidean(img: &FloatImage, motion: &Motion) -> (FloatImage, ValidityMask) {
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = center(w, h);
    let mut out = FloatImage::filled(w, h, 0.0).expect("output matches a non-empty input");
    let mut mask = ValidityMask::filled(w, h, false).expect("output matches a non-empty input");
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let (sx, sy) = motion.apply_centered(x as f64 - cx, dy);
            if let Some(v) = sample_bilinear(img, sx + cx, sy + cy) {
                out.set(x, y, v);
                mask.set(x, y, true);
            }
        }
    }
    (out, mask)
}
