//! Linearized least squares over `(tx, ty, theta)`.
//!
//! Each masked pixel and plane contributes a Jacobian row
//! `g = (dS/dx, dS/dy, x dS/dy - y dS/dx)` taken on the reference planes
//! (`x`, `y` relative to the frame center) and a residual
//! `r = S_ref - S_mov`. The increment solves `A u = b` with `A = Σ g gᵀ`,
//! `b = Σ g r`, and is composed on the inside of the current motion.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::coder::{BitPlanes, PlaneGradients};
use crate::error::{Error, Result};
use crate::warp::{center, Motion, ValidityMask};

/// Damping kicks in above this condition number.
pub const MAX_CONDITION: f64 = 1e8;
const DAMPING_SCALE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct NormalEquations {
    /// Row/column order `(tx, ty, theta)`.
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub n_valid: usize,
}

impl NormalEquations {
    pub fn trace(&self) -> f64 {
        self.a[0][0] + self.a[1][1] + self.a[2][2]
    }
}

fn check_shapes(
    ref_planes: &BitPlanes,
    mov_planes: &BitPlanes,
    grads: &PlaneGradients,
    mask: &ValidityMask,
) -> Result<()> {
    let dims = (ref_planes.width(), ref_planes.height(), ref_planes.planes());
    let ok = dims == (mov_planes.width(), mov_planes.height(), mov_planes.planes())
        && dims == (grads.width(), grads.height(), grads.planes())
        && (dims.0, dims.1) == (mask.width(), mask.height());
    if ok {
        Ok(())
    } else {
        Err(Error::Shape("planes, gradients and mask must share dimensions".into()))
    }
}

pub fn build_normal_equations(
    ref_planes: &BitPlanes,
    mov_planes: &BitPlanes,
    grads: &PlaneGradients,
    mask: &ValidityMask,
) -> Result<NormalEquations> {
    check_shapes(ref_planes, mov_planes, grads, mask)?;
    accumulate(grads, mask, |j, i| {
        f64::from(ref_planes.plane(j)[i]) - f64::from(mov_planes.plane(j)[i])
    })
}

/// Shared accumulation over any residual source.
pub(crate) fn accumulate(
    grads: &PlaneGradients,
    mask: &ValidityMask,
    residual: impl Fn(usize, usize) -> f64,
) -> Result<NormalEquations> {
    let (w, h) = (grads.width(), grads.height());
    let (cx, cy) = center(w, h);
    let n_valid = mask.count();
    if n_valid == 0 {
        return Err(Error::Degenerate("no valid pixels to build the normal equations"));
    }
    // Unique entries: a00 a01 a02 a11 a12 a22.
    let mut s = [0.0f64; 6];
    let mut b = [0.0f64; 3];
    for j in 0..grads.planes() {
        let (gx, gy) = (grads.dx(j), grads.dy(j));
        for y in 0..h {
            let yc = y as f64 - cy;
            for x in 0..w {
                let i = y * w + x;
                if !mask.as_slice()[i] {
                    continue;
                }
                let (dx, dy) = (gx[i], gy[i]);
                if dx == 0.0 && dy == 0.0 {
                    continue;
                }
                let dt = (x as f64 - cx) * dy - yc * dx;
                let r = residual(j, i);
                s[0] += dx * dx;
                s[1] += dx * dy;
                s[2] += dx * dt;
                s[3] += dy * dy;
                s[4] += dy * dt;
                s[5] += dt * dt;
                b[0] += dx * r;
                b[1] += dy * r;
                b[2] += dt * r;
            }
        }
    }
    Ok(NormalEquations {
        a: [[s[0], s[1], s[2]], [s[1], s[3], s[4]], [s[2], s[4], s[5]]],
        b,
        n_valid,
    })
}

fn condition_number(a: &Matrix3<f64>) -> f64 {
    let eig = SymmetricEigen::new(*a);
    let abs = eig.eigenvalues.map(f64::abs);
    let (lo, hi) = (abs.min(), abs.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solve for the increment. Returned as a motion `(theta, tx, ty)`.
pub fn solve_update(eq: &NormalEquations) -> Result<Motion> {
    let mut a = Matrix3::from_fn(|r, c| eq.a[r][c]);
    if a.iter().any(|v| !v.is_finite()) || eq.b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite normal equations"));
    }
    let trace = eq.trace();
    if trace <= 0.0 {
        return Err(Error::Degenerate("normal matrix has zero trace"));
    }
    if condition_number(&a) > MAX_CONDITION {
        let lambda = DAMPING_SCALE * trace / 3.0;
        a += Matrix3::identity() * lambda;
    }
    let b = Vector3::new(eq.b[0], eq.b[1], eq.b[2]);
    let u = match a.cholesky() {
        Some(chol) => chol.solve(&b),
        None => a
            .lu()
            .solve(&b)
            .ok_or(Error::Degenerate("normal matrix is singular"))?,
    };
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("normal matrix is singular"));
    }
    Ok(Motion::new(u[2], u[0], u[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coder::plane_gradients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_planes(w: usize, h: usize, rng: &mut ChaCha8Rng) -> BitPlanes {
        let bits = (0..w * h * 8).map(|_| rng.gen_range(0..=1)).collect();
        BitPlanes::from_bits(w, h, 8, bits).unwrap()
    }

    fn eq_with(a: [[f64; 3]; 3], b: [f64; 3]) -> NormalEquations {
        NormalEquations { a, b, n_valid: 1 }
    }

    /// Per-pixel accumulation with explicit rows and outer products.
    fn naive(ref_p: &BitPlanes, mov_p: &BitPlanes, mask: &ValidityMask) -> ([[f64; 3]; 3], [f64; 3]) {
        let (w, h) = (ref_p.width(), ref_p.height());
        let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        let s = |j: usize, x: isize, y: isize| {
            f64::from(ref_p.bit(j, x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize))
        };
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for y in 0..h {
            for x in 0..w {
                if !mask.get(x, y) {
                    continue;
                }
                for j in 0..8 {
                    let (xi, yi) = (x as isize, y as isize);
                    let gx = (s(j, xi + 1, yi) - s(j, xi - 1, yi)) / 2.0;
                    let gy = (s(j, xi, yi + 1) - s(j, xi, yi - 1)) / 2.0;
                    let row = [gx, gy, (x as f64 - cx) * gy - (y as f64 - cy) * gx];
                    let r = f64::from(ref_p.bit(j, x, y)) - f64::from(mov_p.bit(j, x, y));
                    for p in 0..3 {
                        for q in 0..3 {
                            a[p][q] += row[p] * row[q];
                        }
                        b[p] += row[p] * r;
                    }
                }
            }
        }
        (a, b)
    }

    #[test]
    fn matches_naive_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (r, m) = (random_planes(16, 16, &mut rng), random_planes(16, 16, &mut rng));
        let mask = ValidityMask::from_fn(16, 16, |x, y| x * y % 5 != 1).unwrap();
        let eq = build_normal_equations(&r, &m, &plane_gradients(&r).unwrap(), &mask).unwrap();
        let (a, b) = naive(&r, &m, &mask);
        for p in 0..3 {
            assert!((eq.b[p] - b[p]).abs() <= 1e-9 * b[p].abs().max(1.0));
            for q in 0..3 {
                assert!((eq.a[p][q] - a[p][q]).abs() <= 1e-9 * a[p][q].abs().max(1.0));
                assert_eq!(eq.a[p][q], eq.a[q][p]);
            }
        }
        assert_eq!(eq.n_valid, mask.count());
    }

    #[test]
    fn identical_planes_zero_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = random_planes(12, 12, &mut rng);
        let mask = ValidityMask::all_valid(12, 12);
        let eq = build_normal_equations(&r, &r, &plane_gradients(&r).unwrap(), &mask).unwrap();
        assert_eq!(eq.b, [0.0; 3]);
    }

    #[test]
    fn constant_planes_are_degenerate() {
        let r = BitPlanes::from_bits(8, 8, 8, vec![1; 512]).unwrap();
        let mask = ValidityMask::all_valid(8, 8);
        let eq = build_normal_equations(&r, &r, &plane_gradients(&r).unwrap(), &mask).unwrap();
        assert_eq!(eq.a, [[0.0; 3]; 3]);
        assert_eq!(eq.n_valid, 64);
        assert!(matches!(solve_update(&eq), Err(Error::Degenerate(_))));
    }

    #[test]
    fn empty_mask_is_degenerate() {
        let r = BitPlanes::from_bits(4, 4, 8, vec![0; 128]).unwrap();
        let mask = ValidityMask::filled(4, 4, false).unwrap();
        let err = build_normal_equations(&r, &r, &plane_gradients(&r).unwrap(), &mask);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn identity_system() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let delta = solve_update(&eq_with(id, [0.5, -0.25, 0.01])).unwrap();
        assert_eq!(delta, Motion::new(0.01, 0.5, -0.25));
        assert_eq!(solve_update(&eq_with(id, [0.0; 3])).unwrap(), Motion::IDENTITY);
    }

    #[test]
    fn recovers_constructed_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let a = m * m.transpose() + Matrix3::identity() * 0.5;
            let u = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-0.1..0.1));
            let b = a * u;
            let eq = eq_with(
                [[a[(0, 0)], a[(0, 1)], a[(0, 2)]], [a[(1, 0)], a[(1, 1)], a[(1, 2)]], [a[(2, 0)], a[(2, 1)], a[(2, 2)]]],
                [b[0], b[1], b[2]],
            );
            let d = solve_update(&eq).unwrap();
            assert!((d.tx - u[0]).abs() < 1e-9);
            assert!((d.ty - u[1]).abs() < 1e-9);
            assert!((d.theta - u[2]).abs() < 1e-9);
        }
    }

    #[test]
    fn near_singular_is_damped() {
        // Rank one: the undamped system has no unique solution.
        let a = [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        let d = solve_update(&eq_with(a, [1.0, 1.0, 0.0])).unwrap();
        assert!(d.is_finite());
        assert!((d.tx - d.ty).abs() < 1e-9);
        assert!((d.tx + d.ty - 1.0).abs() < 1e-3);
    }
}
