//! Radial calculus for `f(x) = v(|x - y|)` and the fundamental solution.
//!
//! For `r = |x - y| > 0` and `u = (x - y)/r`:
//!
//! ```text
//! ∇f = v' u,     H f = v'' u uᵀ + (v'/r)(I - u uᵀ),     Δf = v'' + (n-1) v'/r
//! ```
//!
//! The fundamental solution has `v'(r) = -c r^{(1-n)/(p-1)}`, which solves
//! `(p-1) v'' + (n-1) v'/r = 0`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{dot, ln, powf};
use crate::params::Params;

/// Value and first two radial derivatives of the fundamental solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub r: f64,
    pub v: f64,
    pub dv: f64,
    pub ddv: f64,
}

impl RadialProfile {
    /// `(p-1) v'' + (n-1) v'/r`, zero up to rounding.
    pub fn ode_residual(&self, params: &Params) -> f64 {
        (params.p() - 1.0) * self.ddv + (params.n_f64() - 1.0) * self.dv / self.r
    }
}

pub fn fundamental_profile(params: &Params, r: f64) -> Result<RadialProfile> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain("radius must be positive and finite"));
    }
    let p = params.p();
    let n = params.n_f64();
    let c = params.c();
    let slope_exp = (1.0 - n) / (p - 1.0);
    let dv = -c * powf(r, slope_exp);
    let ddv = slope_exp * dv / r;
    let v = if params.is_critical() {
        -c * ln(r)
    } else {
        -c * (p - 1.0) / (p - n) * powf(r, (p - n) / (p - 1.0))
    };
    Ok(RadialProfile { r, v, dv, ddv })
}

/// Offset `x - y`, its length, and the matching profile.
fn offset(params: &Params, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, RadialProfile)> {
    params.check_dim(x.len())?;
    params.check_dim(y.len())?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let r = crate::math::norm(&d);
    if r == 0.0 {
        return Err(Error::PoleSingularity);
    }
    Ok((d, fundamental_profile(params, r)?))
}

/// `∇_x w(x - y)`.
pub fn radial_gradient(params: &Params, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (d, prof) = offset(params, x, y)?;
    let s = prof.dv / prof.r;
    Ok(d.into_iter().map(|di| s * di).collect())
}

/// Hessian of `x ↦ w(x - y)`.
pub fn radial_hessian(params: &Params, x: &[f64], y: &[f64]) -> Result<Matrix> {
    let (d, prof) = offset(params, x, y)?;
    Ok(hessian_from_profile(&d, &prof))
}

pub(crate) fn hessian_from_profile(d: &[f64], prof: &RadialProfile) -> Matrix {
    let n = d.len();
    let tangential = prof.dv / prof.r;
    let radial = (prof.ddv - tangential) / (prof.r * prof.r);
    let mut h = Matrix::outer(d).scaled(radial);
    for i in 0..n {
        h[(i, i)] += tangential;
    }
    h
}

/// `zᵀ H z / |z|²`.
pub fn rayleigh_quotient(h: &Matrix, z: &[f64]) -> Result<f64> {
    if z.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: z.len(),
        });
    }
    let zz = dot(z, z);
    if zz == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    Ok(h.quad_form(z) / zz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v_at(params: &Params, x: &[f64], y: &[f64]) -> f64 {
        let r = crate::math::dist(x, y);
        fundamental_profile(params, r).unwrap().v
    }

    fn fd_gradient(params: &Params, x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (v_at(params, &xp, y) - v_at(params, &xm, y)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn newtonian_profile() {
        let params = Params::new(2.0, 3).unwrap();
        let prof = fundamental_profile(&params, 2.0).unwrap();
        assert_relative_eq!(prof.v, 0.5, max_relative = 1e-15);
        assert_relative_eq!(prof.dv, -0.25, max_relative = 1e-15);
    }

    #[test]
    fn logarithmic_profile() {
        let params = Params::new(3.0, 3).unwrap();
        let prof = fundamental_profile(&params, 1.0).unwrap();
        assert_eq!(prof.v, 0.0);
        assert_eq!(prof.dv, -1.0);
    }

    #[test]
    fn nonpositive_radius_is_domain_error() {
        let params = Params::new(3.0, 2).unwrap();
        assert!(matches!(
            fundamental_profile(&params, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fundamental_profile(&params, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn slope_matches_finite_difference_of_value() {
        let params = Params::new(4.0, 2).unwrap();
        let h = 1e-5;
        for k in 0..50 {
            let r = 0.1 + (10.0 - 0.1) * (k as f64 + 0.5) / 50.0;
            let prof = fundamental_profile(&params, r).unwrap();
            let fd = (fundamental_profile(&params, r + h).unwrap().v
                - fundamental_profile(&params, r - h).unwrap().v)
                / (2.0 * h);
            assert_relative_eq!(prof.dv, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn ode_residual_vanishes() {
        for n in 1..=6usize {
            for &p in &[2.0, 2.5, 3.0, n as f64, 6.0] {
                let Ok(params) = Params::new(p, n) else {
                    continue;
                };
                for k in 0..=60 {
                    let r = powf(10.0, -3.0 + 6.0 * k as f64 / 60.0);
                    let prof = fundamental_profile(&params, r).unwrap();
                    let scale =
                        ((p - 1.0) * prof.ddv).abs() + ((n as f64 - 1.0) * prof.dv / r).abs();
                    assert!(
                        prof.ode_residual(&params).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE),
                        "p={p} n={n} r={r}"
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_substitution() {
        let params = Params::new(2.0, 3).unwrap();
        let g = radial_gradient(&params, &[2.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert_relative_eq!(g[0], -0.25, max_relative = 1e-15);
        assert_eq!(&g[1..], &[0.0, 0.0]);
    }

    #[test]
    fn pole_is_an_error() {
        let params = Params::new(3.0, 2).unwrap();
        assert_eq!(
            radial_gradient(&params, &[1.0, 1.0], &[1.0, 1.0]),
            Err(Error::PoleSingularity)
        );
        assert_eq!(
            radial_hessian(&params, &[1.0, 1.0], &[1.0, 1.0]),
            Err(Error::PoleSingularity)
        );
    }

    #[test]
    fn rayleigh_of_identity_is_one() {
        let id = Matrix::identity(3);
        assert_relative_eq!(
            rayleigh_quotient(&id, &[0.3, -2.0, 1.0]).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_eq!(
            rayleigh_quotient(&id, &[0.0; 3]),
            Err(Error::DegenerateDirection)
        );
    }

    #[test]
    fn rayleigh_along_radius_is_second_derivative() {
        let params = Params::new(4.0, 3).unwrap();
        let x = [0.4, -1.2, 0.7];
        let y = [0.1, 0.2, -0.3];
        let h = radial_hessian(&params, &x, &y).unwrap();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let prof = fundamental_profile(&params, crate::math::norm(&d)).unwrap();
        assert_relative_eq!(
            rayleigh_quotient(&h, &d).unwrap(),
            prof.ddv,
            max_relative = 1e-13
        );
        // x - y is an eigenvector with eigenvalue v''
        let hd = h.mul_vec(&d);
        for (a, b) in hd.iter().zip(&d) {
            assert_relative_eq!(*a, prof.ddv * b, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0..2.0f64, n)
    }

    proptest! {
        #[test]
        fn gradient_norm_is_slope_magnitude(x in point(4), y in point(4), p in 1.2..7.0f64) {
            prop_assume!(crate::math::dist(&x, &y) > 1e-3);
            let params = Params::new(p, 4).unwrap();
            let g = radial_gradient(&params, &x, &y).unwrap();
            let prof = fundamental_profile(&params, crate::math::dist(&x, &y)).unwrap();
            prop_assert!((crate::math::norm(&g) - prof.dv.abs()).abs() <= 1e-14 * prof.dv.abs());
        }

        #[test]
        fn gradient_matches_central_differences(x in point(4), y in point(4)) {
            prop_assume!(crate::math::dist(&x, &y) > 0.2);
            let params = Params::new(3.5, 4).unwrap();
            let g = radial_gradient(&params, &x, &y).unwrap();
            let fd = fd_gradient(&params, &x, &y, 1e-5);
            let scale = crate::math::norm(&g);
            for (a, b) in g.iter().zip(&fd) {
                prop_assert!((a - b).abs() <= 1e-6 * scale);
            }
        }

        #[test]
        fn hessian_trace_is_laplacian(x in point(3), y in point(3), p in 1.5..6.0f64) {
            prop_assume!(crate::math::dist(&x, &y) > 1e-2);
            let params = Params::new(p, 3).unwrap();
            let h = radial_hessian(&params, &x, &y).unwrap();
            let prof = fundamental_profile(&params, crate::math::dist(&x, &y)).unwrap();
            let lap = prof.ddv + 2.0 * prof.dv / prof.r;
            let scale = prof.ddv.abs() + 2.0 * (prof.dv / prof.r).abs();
            prop_assert!((h.trace() - lap).abs() <= 1e-12 * scale);
        }

        #[test]
        fn hessian_matches_nested_differences(x in point(2), y in point(2)) {
            prop_assume!(crate::math::dist(&x, &y) > 0.3);
            let params = Params::new(3.0, 2).unwrap();
            let h = radial_hessian(&params, &x, &y).unwrap();
            let step = 1e-4;
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = 0.0;
                    for (si, sj, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        let mut z = x.clone();
                        z[i] += si * step;
                        z[j] += sj * step;
                        acc += sign * v_at(&params, &z, &y);
                    }
                    let fd = acc / (4.0 * step * step);
                    prop_assert!((h[(i, j)] - fd).abs() <= 1e-4 * (1.0 + h.max_abs()));
                }
            }
        }

        #[test]
        fn rayleigh_is_angular_blend(x in point(3), y in point(3), z in point(3)) {
            prop_assume!(crate::math::dist(&x, &y) > 1e-2 && crate::math::norm(&z) > 1e-3);
            let params = Params::new(4.0, 3).unwrap();
            let h = radial_hessian(&params, &x, &y).unwrap();
            let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let prof = fundamental_profile(&params, crate::math::norm(&d)).unwrap();
            let cos = dot(&d, &z) / (crate::math::norm(&d) * crate::math::norm(&z));
            let theta = libm::acos(cos.clamp(-1.0, 1.0));
            let (s, c) = (libm::sin(theta), libm::cos(theta));
            let expected = prof.ddv * c * c + prof.dv / prof.r * s * s;
            let scale = prof.ddv.abs() + (prof.dv / prof.r).abs();
            prop_assert!((rayleigh_quotient(&h, &z).unwrap() - expected).abs() <= 1e-12 * scale);
        }

        #[test]
        fn gradient_is_rotation_equivariant(x in point(2), y in point(2), angle in 0.0..core::f64::consts::TAU) {
            prop_assume!(crate::math::dist(&x, &y) > 1e-2);
            let params = Params::new(3.0, 2).unwrap();
            let (s, c) = (libm::sin(angle), libm::cos(angle));
            let rot = |v: &[f64]| vec![c * v[0] - s * v[1], s * v[0] + c * v[1]];
            let g = radial_gradient(&params, &x, &y).unwrap();
            let g_rot = radial_gradient(&params, &rot(&x), &rot(&y)).unwrap();
            let expected = rot(&g);
            for (a, b) in g_rot.iter().zip(&expected) {
                prop_assert!((a - b).abs() <= 1e-13 * (1.0 + crate::math::norm(&g)));
            }
        }
    }
}
