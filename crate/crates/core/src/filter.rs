//! Separable Gaussian smoothing with edge replication.

use crate::error::{Error, Result};
use crate::image::FloatImage;

/// Normalized 1D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Vec<f64>> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    if radius == 0 {
        return Err(Error::Parameter("kernel radius must be at least 1".into()));
    }
    let r = radius as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

pub fn gaussian_smooth(img: &FloatImage, sigma: f64, radius: usize) -> Result<FloatImage> {
    let kernel = gaussian_kernel(sigma, radius)?;
    let (w, h) = (img.width(), img.height());
    let r = radius as isize;

    let horizontal = FloatImage::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, &t)| t * img.get_clamped(x as isize + k as isize - r, y as isize))
            .sum()
    })?;
    FloatImage::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, &t)| t * horizontal.get_clamped(x as isize, y as isize + k as isize - r))
            .sum()
    })
}
