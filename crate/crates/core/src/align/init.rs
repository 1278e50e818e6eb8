//! Translation seed from projection profiles of the coded images.

use crate::coder::{to_decimal, BitPlanes};
use crate::warp::Motion;

/// Search range as a fraction of each dimension.
pub const SEARCH_FRACTION: f64 = 0.25;

fn code_values(planes: &BitPlanes) -> Vec<f64> {
    match to_decimal(planes) {
        Ok(img) => img.as_slice().iter().map(|&v| f64::from(v)).collect(),
        // Single-plane codes: the bit itself.
        Err(_) => planes.plane(0).iter().map(|&b| f64::from(b)).collect(),
    }
}

fn profiles(planes: &BitPlanes) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (planes.width(), planes.height());
    let values = code_values(planes);
    let mut cols = vec![0.0; w];
    let mut rows = vec![0.0; h];
    for y in 0..h {
        for x in 0..w {
            let v = values[y * w + x];
            cols[x] += v;
            rows[y] += v;
        }
    }
    (cols, rows)
}

/// Zero-mean normalized correlation of `a[i]` with `b[i + shift]` over the overlap.
fn ncc_at(a: &[f64], b: &[f64], shift: isize) -> Option<f64> {
    let n = a.len() as isize;
    let start = 0.max(-shift);
    let end = n.min(b.len() as isize - shift);
    if end - start < 2 {
        return None;
    }
    let len = (end - start) as f64;
    let pairs = || (start..end).map(|i| (a[i as usize], b[(i + shift) as usize]));
    let (ma, mb) = pairs().fold((0.0, 0.0), |(sa, sb), (x, y)| (sa + x, sb + y));
    let (ma, mb) = (ma / len, mb / len);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in pairs() {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Shift maximizing the profile correlation; ties go to the smallest |shift|.
fn best_shift(reference: &[f64], moving: &[f64]) -> f64 {
    let range = (reference.len() as f64 * SEARCH_FRACTION).floor() as isize;
    let mut best: Option<(f64, isize)> = None;
    for mag in 0..=range {
        for shift in if mag == 0 { vec![0] } else { vec![-mag, mag] } {
            if let Some(score) = ncc_at(reference, moving, shift) {
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, shift));
                }
            }
        }
    }
    best.map_or(0.0, |(_, s)| s as f64)
}

/// Translation-only seed: `theta = 0`, `(tx, ty)` from column and row profiles.
pub fn init_histogram_match(ref_planes: &BitPlanes, mov_planes: &BitPlanes) -> Motion {
    let (ref_cols, ref_rows) = profiles(ref_planes);
    let (mov_cols, mov_rows) = profiles(mov_planes);
    Motion::new(0.0, best_shift(&ref_cols, &mov_cols), best_shift(&ref_rows, &mov_rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coder::{encode, CoderKind};
    use crate::image::FloatImage;
    use crate::testutil::textured;

    fn crop(img: &FloatImage, x0: usize, y0: usize, w: usize, h: usize) -> FloatImage {
        FloatImage::from_fn(w, h, |x, y| img.get(x0 + x, y0 + y)).unwrap()
    }

    #[test]
    fn identical_images_zero() {
        let img = textured(96, 80, 1);
        let p = encode(&img, CoderKind::Lbp).unwrap();
        assert_eq!(init_histogram_match(&p, &p), Motion::IDENTITY);
    }

    #[test]
    fn constant_images_fall_back_to_zero() {
        let img = FloatImage::filled(64, 64, 90.0).unwrap();
        let p = encode(&img, CoderKind::Lbp).unwrap();
        assert_eq!(init_histogram_match(&p, &p), Motion::IDENTITY);
    }

    /// Exhaustive 2D shift search on the code images, for comparison.
    fn oracle_shift(a: &BitPlanes, b: &BitPlanes, range: isize) -> (isize, isize) {
        let (va, vb) = (code_values(a), code_values(b));
        let (w, h) = (a.width() as isize, a.height() as isize);
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for sy in -range..=range {
            for sx in -range..=range {
                let mut pairs = Vec::new();
                for y in 0.max(-sy)..h.min(h - sy) {
                    for x in 0.max(-sx)..w.min(w - sx) {
                        pairs.push((va[(y * w + x) as usize], vb[((y + sy) * w + x + sx) as usize]));
                    }
                }
                let n = pairs.len() as f64;
                let (ma, mb) = pairs.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / n, acc.1 + p.1 / n));
                let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
                for (x, y) in pairs {
                    ab += (x - ma) * (y - mb);
                    aa += (x - ma) * (x - ma);
                    bb += (y - mb) * (y - mb);
                }
                let score = ab / (aa * bb).sqrt();
                if score > best.0 {
                    best = (score, sx, sy);
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn integer_shift_recovered() {
        let big = textured(160, 160, 4);
        // Slave content moved by (+8, -4) relative to the reference.
        let reference = crop(&big, 20, 20, 128, 128);
        let slave = crop(&big, 12, 24, 128, 128);
        let (rp, sp) = (
            encode(&reference, CoderKind::Lbp).unwrap(),
            encode(&slave, CoderKind::Lbp).unwrap(),
        );
        assert_eq!(oracle_shift(&rp, &sp, 10), (8, -4));
        assert_eq!(init_histogram_match(&rp, &sp), Motion::new(0.0, 8.0, -4.0));
    }
}
