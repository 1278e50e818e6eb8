//! Binary local-pattern coding of luminance images.
//!
//! LBP and census codes compare each pixel with its eight neighbors and keep
//! one bit plane per neighbor. Planes are indexed `0..8` for neighbors
//! NW, N, NE, E, SE, S, SW, W; plane `j` carries weight `2^j` in the
//! single-byte view. MTB keeps a single plane thresholded at the median.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{FloatImage, GrayImage};
use crate::warp::ValidityMask;

/// Neighbor offsets `(dx, dy)` in plane order.
pub const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CoderKind {
    /// Bit set when the neighbor is strictly brighter than the center.
    #[default]
    Lbp,
    /// Bit set when the neighbor is at least as bright as the center.
    Census,
    /// Median threshold bitmap.
    Mtb,
}

impl CoderKind {
    pub fn plane_count(self) -> usize {
        match self {
            CoderKind::Lbp | CoderKind::Census => 8,
            CoderKind::Mtb => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CoderKind::Lbp => "lbp",
            CoderKind::Census => "census",
            CoderKind::Mtb => "mtb",
        }
    }
}

impl fmt::Display for CoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lbp" => Ok(CoderKind::Lbp),
            "census" => Ok(CoderKind::Census),
            "mtb" => Ok(CoderKind::Mtb),
            other => Err(Error::Parameter(format!("unknown coder `{other}`"))),
        }
    }
}

/// A stack of binary planes, plane-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitPlanes {
    width: usize,
    height: usize,
    planes: usize,
    bits: Vec<u8>,
}

impl BitPlanes {
    pub fn from_bits(width: usize, height: usize, planes: usize, bits: Vec<u8>) -> Result<Self> {
        if planes != 1 && planes != 8 {
            return Err(Error::Shape(format!("{planes} planes; expected 1 or 8")));
        }
        if bits.len() != width * height * planes {
            return Err(Error::Shape(format!(
                "{} bits for {planes} planes of {width}x{height}",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Parameter("bit planes must hold only 0 or 1".into()));
        }
        Ok(Self {
            width,
            height,
            planes,
            bits,
        })
    }

    /// Split per-pixel bytes into 8 planes, bit `j` into plane `j`.
    pub fn from_bytes(img: &GrayImage) -> Self {
        let n = img.len();
        let mut bits = vec![0u8; n * 8];
        for (i, &v) in img.as_slice().iter().enumerate() {
            for j in 0..8 {
                bits[j * n + i] = (v >> j) & 1;
            }
        }
        Self {
            width: img.width(),
            height: img.height(),
            planes: 8,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn plane(&self, j: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.bits[j * n..(j + 1) * n]
    }

    #[inline]
    pub fn bit(&self, j: usize, x: usize, y: usize) -> u8 {
        self.bits[(j * self.height + y) * self.width + x]
    }

    fn check_compatible(&self, other: &BitPlanes, mask: &ValidityMask) -> Result<()> {
        if self.width != other.width || self.height != other.height || self.planes != other.planes {
            return Err(Error::Shape(format!(
                "{}x{}x{} planes vs {}x{}x{}",
                self.width, self.height, self.planes, other.width, other.height, other.planes
            )));
        }
        if mask.width() != self.width || mask.height() != self.height {
            return Err(Error::Shape(format!(
                "mask {}x{} vs planes {}x{}",
                mask.width(),
                mask.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }
}

pub fn encode(img: &FloatImage, kind: CoderKind) -> Result<BitPlanes> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::Dimension {
            width: w,
            height: h,
            reason: "coding needs at least a 3x3 image",
        });
    }
    let n = w * h;
    match kind {
        CoderKind::Lbp | CoderKind::Census => {
            let strict = kind == CoderKind::Lbp;
            let mut bits = vec![0u8; n * 8];
            for y in 0..h {
                for x in 0..w {
                    let c = img.get(x, y);
                    for (j, &(dx, dy)) in NEIGHBORS.iter().enumerate() {
                        let v = img.get_clamped(x as isize + dx, y as isize + dy);
                        let set = if strict { v > c } else { v >= c };
                        bits[j * n + y * w + x] = u8::from(set);
                    }
                }
            }
            Ok(BitPlanes {
                width: w,
                height: h,
                planes: 8,
                bits,
            })
        }
        CoderKind::Mtb => {
            let mut sorted = img.as_slice().to_vec();
            let idx = (n - 1) / 2;
            let (_, median, _) = sorted.select_nth_unstable_by(idx, f64::total_cmp);
            let median = *median;
            let bits = img.as_slice().iter().map(|&v| u8::from(v > median)).collect();
            Ok(BitPlanes {
                width: w,
                height: h,
                planes: 1,
                bits,
            })
        }
    }
}

/// Pack 8 planes into one byte per pixel.
pub fn to_decimal(planes: &BitPlanes) -> Result<GrayImage> {
    if planes.planes != 8 {
        return Err(Error::Shape(format!(
            "decimal view needs 8 planes, got {}",
            planes.planes
        )));
    }
    let n = planes.width * planes.height;
    let data = (0..n)
        .map(|i| (0..8).fold(0u8, |acc, j| acc | (planes.bits[j * n + i] << j)))
        .collect();
    GrayImage::from_vec(planes.width, planes.height, data)
}

/// Number of differing bits over masked pixels.
pub fn hamming_cost(a: &BitPlanes, b: &BitPlanes, mask: &ValidityMask) -> Result<u64> {
    a.check_compatible(b, mask)?;
    let n = a.width * a.height;
    let mut total = 0u64;
    for j in 0..a.planes {
        let (pa, pb) = (&a.bits[j * n..(j + 1) * n], &b.bits[j * n..(j + 1) * n]);
        total += pa
            .iter()
            .zip(pb)
            .zip(mask.as_slice())
            .filter(|&((&x, &y), &m)| m && (x ^ y) == 1)
            .count() as u64;
    }
    Ok(total)
}

/// Sum of squared bit differences over masked pixels.
pub fn squared_cost(a: &BitPlanes, b: &BitPlanes, mask: &ValidityMask) -> Result<f64> {
    a.check_compatible(b, mask)?;
    let n = a.width * a.height;
    let mut total = 0.0;
    for j in 0..a.planes {
        for i in 0..n {
            if mask.as_slice()[i] {
                let d = f64::from(a.bits[j * n + i]) - f64::from(b.bits[j * n + i]);
                total += d * d;
            }
        }
    }
    Ok(total)
}

/// Central-difference derivatives of every plane.
#[derive(Clone, Debug)]
pub struct PlaneGradients {
    width: usize,
    height: usize,
    planes: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl PlaneGradients {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn dx(&self, j: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.dx[j * n..(j + 1) * n]
    }

    pub fn dy(&self, j: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.dy[j * n..(j + 1) * n]
    }

    /// Gradients of real-valued planes stored plane-major.
    pub(crate) fn from_real_planes(width: usize, height: usize, planes: usize, values: &[f64]) -> Self {
        let n = width * height;
        let mut dx = vec![0.0; n * planes];
        let mut dy = vec![0.0; n * planes];
        for j in 0..planes {
            let p = &values[j * n..(j + 1) * n];
            for y in 0..height {
                let (yu, yd) = (y.saturating_sub(1), (y + 1).min(height - 1));
                for x in 0..width {
                    let (xl, xr) = (x.saturating_sub(1), (x + 1).min(width - 1));
                    dx[j * n + y * width + x] = (p[y * width + xr] - p[y * width + xl]) / 2.0;
                    dy[j * n + y * width + x] = (p[yd * width + x] - p[yu * width + x]) / 2.0;
                }
            }
        }
        Self {
            width,
            height,
            planes,
            dx,
            dy,
        }
    }
}

pub fn plane_gradients(planes: &BitPlanes) -> Result<PlaneGradients> {
    if planes.width < 3 || planes.height < 3 {
        return Err(Error::Dimension {
            width: planes.width,
            height: planes.height,
            reason: "gradients need at least a 3x3 plane",
        });
    }
    let values: Vec<f64> = planes.bits.iter().map(|&b| f64::from(b)).collect();
    Ok(PlaneGradients::from_real_planes(
        planes.width,
        planes.height,
        planes.planes,
        &values,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_planes(w: usize, h: usize, planes: usize, rng: &mut ChaCha8Rng) -> BitPlanes {
        let bits = (0..w * h * planes).map(|_| rng.gen_range(0..=1)).collect();
        BitPlanes::from_bits(w, h, planes, bits).unwrap()
    }

    fn single_pixel(bits: [u8; 8]) -> BitPlanes {
        BitPlanes::from_bits(1, 1, 8, bits.to_vec()).unwrap()
    }

    #[test]
    fn constant_image_codes() {
        let img = FloatImage::filled(6, 5, 42.0).unwrap();
        let lbp = encode(&img, CoderKind::Lbp).unwrap();
        assert!((0..8).all(|j| lbp.plane(j).iter().all(|&b| b == 0)));
        let census = encode(&img, CoderKind::Census).unwrap();
        assert!((0..8).all(|j| census.plane(j).iter().all(|&b| b == 1)));
        let mtb = encode(&img, CoderKind::Mtb).unwrap();
        assert_eq!(mtb.planes(), 1);
        assert!(mtb.plane(0).iter().all(|&b| b == 0));
    }

    #[test]
    fn center_pixel_bits() {
        // Row-major 3x3 patch with neighbors NW..W = 20,5,20,5,20,5,20,5.
        let patch = [20.0, 5.0, 20.0, 5.0, 10.0, 5.0, 20.0, 5.0, 20.0];
        let img = FloatImage::from_vec(3, 3, patch.to_vec()).unwrap();
        let planes = encode(&img, CoderKind::Lbp).unwrap();
        let bits: Vec<u8> = (0..8).map(|j| planes.bit(j, 1, 1)).collect();
        assert_eq!(bits, vec![1, 0, 1, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn mtb_thresholds_at_lower_median() {
        let img = FloatImage::from_vec(3, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        let planes = encode(&img, CoderKind::Mtb).unwrap();
        assert_eq!(planes.plane(0), &[0, 0, 0, 0, 0, 1, 1, 1, 1]);
        let img = FloatImage::from_vec(4, 1, vec![4.0, 1.0, 3.0, 2.0]).unwrap();
        assert!(encode(&img, CoderKind::Mtb).is_err());
        let img = FloatImage::from_vec(2, 3, vec![4.0, 1.0, 3.0, 2.0, 6.0, 5.0]).unwrap();
        assert!(encode(&img, CoderKind::Mtb).is_err());
    }

    #[test]
    fn small_images_rejected() {
        let img = FloatImage::filled(2, 5, 0.0).unwrap();
        assert!(matches!(encode(&img, CoderKind::Lbp), Err(Error::Dimension { .. })));
    }

    #[test]
    fn decimal_view() {
        assert_eq!(to_decimal(&single_pixel([0; 8])).unwrap().get(0, 0), 0);
        assert_eq!(to_decimal(&single_pixel([1; 8])).unwrap().get(0, 0), 255);
        assert_eq!(
            to_decimal(&single_pixel([1, 0, 1, 0, 1, 1, 1, 0])).unwrap().get(0, 0),
            117
        );
        let mtb = BitPlanes::from_bits(1, 1, 1, vec![1]).unwrap();
        assert!(matches!(to_decimal(&mtb), Err(Error::Shape(_))));
    }

    #[test]
    fn decimal_round_trip() {
        let img = GrayImage::from_fn(16, 16, |x, y| (y * 16 + x) as u8).unwrap();
        assert_eq!(to_decimal(&BitPlanes::from_bytes(&img)).unwrap(), img);
    }

    #[test]
    fn hamming_matches_bit_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b) = (random_planes(13, 9, 8, &mut rng), random_planes(13, 9, 8, &mut rng));
        let mask = ValidityMask::from_fn(13, 9, |x, y| (x + y) % 3 != 0).unwrap();
        let mut expected = 0;
        for j in 0..8 {
            for y in 0..9 {
                for x in 0..13 {
                    if mask.get(x, y) && a.bit(j, x, y) != b.bit(j, x, y) {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(hamming_cost(&a, &b, &mask).unwrap(), expected);
        assert_eq!(squared_cost(&a, &b, &mask).unwrap(), expected as f64);
        assert_eq!(hamming_cost(&a, &a, &mask).unwrap(), 0);
        assert_eq!(squared_cost(&a, &a, &mask).unwrap(), 0.0);
    }

    #[test]
    fn single_bit_pairs_have_unit_distance() {
        let mask = ValidityMask::all_valid(1, 1);
        let a = single_pixel([1, 0, 1, 0, 1, 1, 1, 0]);
        let b = single_pixel([1, 1, 1, 0, 1, 1, 1, 0]);
        assert_eq!(hamming_cost(&a, &b, &mask).unwrap(), 1);
        let c = single_pixel([1, 1, 1, 0, 1, 1, 1, 1]);
        let d = single_pixel([1, 1, 1, 0, 1, 1, 1, 0]);
        assert_eq!(squared_cost(&c, &d, &mask).unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_planes(4, 4, 8, &mut rng);
        let b = random_planes(4, 5, 8, &mut rng);
        let c = random_planes(4, 4, 1, &mut rng);
        let mask = ValidityMask::all_valid(4, 4);
        assert!(matches!(hamming_cost(&a, &b, &mask), Err(Error::Shape(_))));
        assert!(matches!(squared_cost(&a, &c, &mask), Err(Error::Shape(_))));
        assert!(matches!(
            hamming_cost(&a, &a, &ValidityMask::all_valid(3, 4)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn gradient_examples() {
        let flat = BitPlanes::from_bits(5, 4, 1, vec![1; 20]).unwrap();
        let g = plane_gradients(&flat).unwrap();
        assert!(g.dx(0).iter().chain(g.dy(0)).all(|&v| v == 0.0));

        // Columns 0..3 zero, 3..6 one: the step sits between columns 2 and 3.
        let step = BitPlanes::from_bits(6, 3, 1, (0..18).map(|i| u8::from(i % 6 >= 3)).collect()).unwrap();
        let g = plane_gradients(&step).unwrap();
        for y in 0..3 {
            for x in 0..6 {
                let expected = if x == 2 || x == 3 { 0.5 } else { 0.0 };
                assert_eq!(g.dx(0)[y * 6 + x], expected);
                assert_eq!(g.dy(0)[y * 6 + x], 0.0);
            }
        }
    }

    #[test]
    fn gradients_match_difference_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = random_planes(10, 7, 8, &mut rng);
        let g = plane_gradients(&p).unwrap();
        for j in 0..8 {
            for y in 0..7isize {
                for x in 0..10isize {
                    let at = |x: isize, y: isize| f64::from(p.bit(j, x.clamp(0, 9) as usize, y.clamp(0, 6) as usize));
                    let i = (y * 10 + x) as usize;
                    assert_eq!(g.dx(j)[i], (at(x + 1, y) - at(x - 1, y)) / 2.0);
                    assert_eq!(g.dy(j)[i], (at(x, y + 1) - at(x, y - 1)) / 2.0);
                    assert!(g.dx(j)[i].abs() <= 0.5);
                }
            }
        }
    }

    #[test]
    fn coder_names_parse() {
        for kind in [CoderKind::Lbp, CoderKind::Census, CoderKind::Mtb] {
            assert_eq!(kind.name().parse::<CoderKind>().unwrap(), kind);
        }
        assert!("brief".parse::<CoderKind>().is_err());
    }

    proptest! {
        #[test]
        fn lbp_is_invariant_to_increasing_maps(seed in any::<u64>(), gain in 0.2f64..3.0, gamma in 0.3f64..2.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = FloatImage::from_fn(12, 12, |_, _| rng.gen_range(1.0..250.0)).unwrap();
            let mapped = img.map(|v| gain * (v / 255.0).powf(gamma) * 255.0 + 3.0);
            for kind in [CoderKind::Lbp, CoderKind::Census] {
                prop_assert_eq!(encode(&img, kind).unwrap(), encode(&mapped, kind).unwrap());
            }
        }

        #[test]
        fn hamming_is_a_metric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b, c) = (
                random_planes(6, 6, 8, &mut rng),
                random_planes(6, 6, 8, &mut rng),
                random_planes(6, 6, 8, &mut rng),
            );
            let m = ValidityMask::all_valid(6, 6);
            let d = |x: &BitPlanes, y: &BitPlanes| hamming_cost(x, y, &m).unwrap();
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        }

        #[test]
        fn decimal_byte_round_trip(bytes in proptest::collection::vec(any::<u8>(), 9)) {
            let img = GrayImage::from_vec(3, 3, bytes).unwrap();
            prop_assert_eq!(to_decimal(&BitPlanes::from_bytes(&img)).unwrap(), img);
        }
    }
}
