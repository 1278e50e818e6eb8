//! Gaussian pyramids, finest level first.

use crate::error::{Error, Result};
use crate::filter::gaussian_smooth;
use crate::image::FloatImage;

/// Levels stop before either dimension would drop below this.
pub const MIN_LEVEL_DIM: usize = 32;

const DOWNSAMPLE_SIGMA: f64 = 1.0;
const DOWNSAMPLE_RADIUS: usize = 2;

#[derive(Clone, Debug)]
pub struct Pyramid {
    levels: Vec<FloatImage>,
}

impl Pyramid {
    pub fn levels(&self) -> &[FloatImage] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &FloatImage {
        &self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn coarsest(&self) -> &FloatImage {
        self.levels.last().expect("a pyramid has at least one level")
    }
}

fn downsample(img: &FloatImage) -> Result<FloatImage> {
    let smooth = gaussian_smooth(img, DOWNSAMPLE_SIGMA, DOWNSAMPLE_RADIUS)?;
    FloatImage::from_fn(img.width() / 2, img.height() / 2, |x, y| smooth.get(2 * x, 2 * y))
}

pub fn build_pyramid(img: &FloatImage, max_levels: usize) -> Result<Pyramid> {
    if img.width().min(img.height()) < MIN_LEVEL_DIM {
        return Err(Error::Dimension {
            width: img.width(),
            height: img.height(),
            reason: "pyramid base must be at least 32 pixels on each side",
        });
    }
    if max_levels == 0 {
        return Err(Error::Parameter("pyramid needs at least one level".into()));
    }
    let mut levels = vec![img.clone()];
    while levels.len() < max_levels {
        let last = levels.last().expect("non-empty");
        if (last.width() / 2).min(last.height() / 2) < MIN_LEVEL_DIM {
            break;
        }
        let next = downsample(last)?;
        levels.push(next);
    }
    Ok(Pyramid { levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(p: &Pyramid) -> Vec<(usize, usize)> {
        p.levels().iter().map(|l| (l.width(), l.height())).collect()
    }

    #[test]
    fn halving_sequence() {
        let img = FloatImage::filled(256, 256, 3.0).unwrap();
        let p = build_pyramid(&img, 4).unwrap();
        assert_eq!(dims(&p), vec![(256, 256), (128, 128), (64, 64), (32, 32)]);
    }

    #[test]
    fn stops_at_minimum_dimension() {
        let img = FloatImage::filled(40, 40, 3.0).unwrap();
        assert_eq!(build_pyramid(&img, 8).unwrap().len(), 1);
        let img = FloatImage::filled(131, 67, 3.0).unwrap();
        assert_eq!(dims(&build_pyramid(&img, 8).unwrap()), vec![(131, 67), (65, 33)]);
    }

    #[test]
    fn constant_levels_stay_constant() {
        let img = FloatImage::filled(200, 120, 77.0).unwrap();
        for level in build_pyramid(&img, 5).unwrap().levels() {
            assert!(level.as_slice().iter().all(|&v| (v - 77.0).abs() < 1e-9));
        }
    }

    #[test]
    fn small_input_rejected() {
        let img = FloatImage::filled(31, 100, 0.0).unwrap();
        assert!(matches!(build_pyramid(&img, 3), Err(Error::Dimension { .. })));
    }
}
