//! Fundamental solutions of the evolutionary equations `u_t = Δ_p u`
//! (Barenblatt profile `B`) and `(|u|^{p-2}u)_t = Δ_p u` (kernel `W`), `p > 2`,
//! and the defects showing that superposing them fails.
//!
//! ```text
//! B(x,t) = t^{-nβ} (C - (p-2)/p β^{1/(p-1)} (|x|/t^β)^{p/(p-1)})_+^{(p-1)/(p-2)},  β = 1/(n(p-2)+p)
//! W(x,t) = c t^{-n/(p(p-1))} exp(-(p-1)/p (1/p)^{1/(p-1)} (|x|/t^{1/p})^{p/(p-1)})
//! ```
//!
//! Since `Δ_p(aB) = a^{p-1} B_t`, the defect `Δ_p(aB) - (aB)_t = (a^{p-1} - a) B_t`
//! changes sign where `B_t` does: at `|x| = (Cpn)^{(p-1)/p} β^{(p-2)/p} t^β`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, norm, powf};
use crate::params::Params;

/// Relative time step of the central differences in `t`.
pub const FD_TIME_STEP: f64 = 1e-6;
/// Spatial step of the central differences, scaled by `1 + |x|`.
pub const FD_SPACE_STEP: f64 = 1e-4;
/// Margin, in time-FD steps, kept from the Barenblatt free boundary.
pub const FREE_BOUNDARY_MARGIN: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `B`, for `u_t = Δ_p u`.
    Barenblatt,
    /// `W`, for `(|u|^{p-2}u)_t = Δ_p u`.
    Homogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionKernel {
    kind: KernelKind,
    p: f64,
    n: usize,
    /// `C` for the Barenblatt profile, `c` for the homogeneous kernel.
    constant: f64,
    beta: f64,
}

/// Result of [`EvolutionKernel::barenblatt_defect`]; `a = 1` is flagged as
/// degenerate since the defect then vanishes identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    pub value: f64,
    pub degenerate: bool,
}

impl EvolutionKernel {
    fn new(kind: KernelKind, params: &Params, constant: f64) -> Result<Self> {
        let p = params.p();
        if !(p > 2.0) {
            return Err(Error::Domain("evolution kernels require p > 2"));
        }
        if !(constant > 0.0) || !constant.is_finite() {
            return Err(Error::Domain("kernel constant must be positive"));
        }
        let n = params.n();
        let beta = 1.0 / (n as f64 * (p - 2.0) + p);
        Ok(EvolutionKernel {
            kind,
            p,
            n,
            constant,
            beta,
        })
    }

    /// Barenblatt profile with constant `C > 0`.
    pub fn barenblatt(params: &Params, big_c: f64) -> Result<Self> {
        Self::new(KernelKind::Barenblatt, params, big_c)
    }

    /// Homogeneous-equation kernel with constant `c > 0`.
    pub fn homogeneous(params: &Params, small_c: f64) -> Result<Self> {
        Self::new(KernelKind::Homogeneous, params, small_c)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `β = 1/(n(p-2)+p)`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn check(&self, x: &[f64], t: f64) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain("time must be positive"));
        }
        Ok(())
    }

    fn require(&self, kind: KernelKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Domain(match kind {
                KernelKind::Barenblatt => "operation requires the Barenblatt profile",
                KernelKind::Homogeneous => "operation requires the homogeneous kernel",
            }))
        }
    }

    /// `(p-2)/p β^{1/(p-1)}`.
    fn barenblatt_coefficient(&self) -> f64 {
        (self.p - 2.0) / self.p * powf(self.beta, 1.0 / (self.p - 1.0))
    }

    /// `(p-1)/p (1/p)^{1/(p-1)}`.
    fn homogeneous_coefficient(&self) -> f64 {
        (self.p - 1.0) / self.p * powf(1.0 / self.p, 1.0 / (self.p - 1.0))
    }

    /// Radius of the support of `B(·, t)`.
    pub fn support_radius(&self, t: f64) -> Result<f64> {
        self.require(KernelKind::Barenblatt)?;
        if !(t > 0.0) {
            return Err(Error::Domain("time must be positive"));
        }
        let q = self.p / (self.p - 1.0);
        Ok(powf(self.constant / self.barenblatt_coefficient(), 1.0 / q) * powf(t, self.beta))
    }

    /// Value of the radial profile at radius `r >= 0`.
    pub fn profile(&self, r: f64, t: f64) -> f64 {
        let p = self.p;
        let q = p / (p - 1.0);
        match self.kind {
            KernelKind::Barenblatt => {
                let g =
                    self.constant - self.barenblatt_coefficient() * powf(r / powf(t, self.beta), q);
                if g <= 0.0 {
                    0.0
                } else {
                    powf(t, -(self.n as f64) * self.beta) * powf(g, (p - 1.0) / (p - 2.0))
                }
            }
            KernelKind::Homogeneous => {
                let a = self.n as f64 / (p * (p - 1.0));
                let zeta = r / powf(t, 1.0 / p);
                self.constant * powf(t, -a) * exp(-self.homogeneous_coefficient() * powf(zeta, q))
            }
        }
    }

    pub fn kernel_value(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check(x, t)?;
        Ok(self.profile(norm(x), t))
    }

    /// Analytic `∂_t` of [`kernel_value`](Self::kernel_value).
    pub fn kernel_time_derivative(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check(x, t)?;
        let r = norm(x);
        let p = self.p;
        let q = p / (p - 1.0);
        let n = self.n as f64;
        match self.kind {
            KernelKind::Barenblatt => {
                let edge = self.support_radius(t)?;
                if (r / edge - 1.0).abs() <= FREE_BOUNDARY_MARGIN * FD_TIME_STEP {
                    return Err(Error::NonDifferentiable);
                }
                if r >= edge {
                    return Ok(0.0);
                }
                let k1 = self.barenblatt_coefficient();
                let xi_q = powf(r / powf(t, self.beta), q);
                let g = self.constant - k1 * xi_q;
                let m = (p - 1.0) / (p - 2.0);
                let amp = powf(t, -n * self.beta);
                // B = t^{-nβ} G^m with ∂_t G = k1 q β ξ^q / t
                Ok(-n * self.beta / t * amp * powf(g, m)
                    + amp * m * powf(g, m - 1.0) * k1 * q * self.beta * xi_q / t)
            }
            KernelKind::Homogeneous => {
                let w = self.profile(r, t);
                let zeta_q = powf(r / powf(t, 1.0 / p), q);
                let a = n / (p * (p - 1.0));
                Ok(w / t * (-a + self.homogeneous_coefficient() * q / p * zeta_q))
            }
        }
    }

    /// Analytic spatial gradient.
    pub fn spatial_gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check(x, t)?;
        let r = norm(x);
        if r == 0.0 {
            return Ok(x.iter().map(|_| 0.0).collect());
        }
        let p = self.p;
        let q = p / (p - 1.0);
        let dr = match self.kind {
            KernelKind::Barenblatt => {
                let k1 = self.barenblatt_coefficient();
                let tb = powf(t, self.beta);
                let g = self.constant - k1 * powf(r / tb, q);
                if g <= 0.0 {
                    0.0
                } else {
                    let m = (p - 1.0) / (p - 2.0);
                    let amp = powf(t, -(self.n as f64) * self.beta);
                    amp * m * powf(g, m - 1.0) * (-k1 * q * powf(r / tb, q - 1.0) / tb)
                }
            }
            KernelKind::Homogeneous => {
                let ts = powf(t, 1.0 / p);
                self.profile(r, t)
                    * (-self.homogeneous_coefficient() * q * powf(r / ts, q - 1.0) / ts)
            }
        };
        Ok(x.iter().map(|xi| dr * xi / r).collect())
    }

    /// `Δ_p(aB) - (aB)_t = (a^{p-1} - a) B_t`.
    pub fn barenblatt_defect(&self, a: f64, x: &[f64], t: f64) -> Result<Defect> {
        self.require(KernelKind::Barenblatt)?;
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain("scale a must be positive"));
        }
        let bt = self.kernel_time_derivative(x, t)?;
        let factor = powf(a, self.p - 1.0) - a;
        Ok(Defect {
            value: factor * bt,
            degenerate: a == 1.0,
        })
    }

    /// `(Cpn)^{(p-1)/p} β^{(p-2)/p} t^β`, where `B_t(·, t)` changes sign.
    pub fn sign_change_radius(&self, t: f64) -> Result<f64> {
        self.require(KernelKind::Barenblatt)?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain("time must be positive"));
        }
        let p = self.p;
        let cpn = self.constant * p * self.n as f64;
        Ok(powf(cpn, (p - 1.0) / p) * powf(self.beta, (p - 2.0) / p) * powf(t, self.beta))
    }

    /// `∂_t(|V|^{p-2}V) - Δ_p V` at `x = 0` for `V(x,t) = W(x+y,t) + W(x-y,t)`:
    /// `∇V(0,t) = 0` by symmetry and `Δ_p V(0,t) = 0` by continuous extension,
    /// leaving `2(p-1)(2W(y,t))^{p-2} W_t(y,t)`.
    pub fn two_bump_defect(&self, y: &[f64], t: f64) -> Result<f64> {
        self.require(KernelKind::Homogeneous)?;
        self.check(y, t)?;
        if norm(y) == 0.0 {
            return Err(Error::Domain("two-bump construction needs y != 0"));
        }
        let w = self.kernel_value(y, t)?;
        let wt = self.kernel_time_derivative(y, t)?;
        Ok(2.0 * (self.p - 1.0) * powf(2.0 * w, self.p - 2.0) * wt)
    }

    /// `V(x,t) = W(x+y,t) + W(x-y,t)`.
    pub fn two_bump_value(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        Ok(self.kernel_value(&plus, t)? + self.kernel_value(&minus, t)?)
    }

    /// Analytic spatial gradient of the two-bump combination.
    pub fn two_bump_gradient(&self, x: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>> {
        let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let gp = self.spatial_gradient(&plus, t)?;
        let gm = self.spatial_gradient(&minus, t)?;
        Ok(gp.iter().zip(&gm).map(|(a, b)| a + b).collect())
    }
}

/// `div(|∇u|^{p-2}∇u)` at `x` with both the gradient and the divergence taken
/// by central differences of step `h`.
pub fn fd_p_laplacian<F>(u: F, x: &[f64], p: f64, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let mut z = x.to_vec();
    let mut grad = |center: &[f64]| -> Vec<f64> {
        z.copy_from_slice(center);
        (0..n)
            .map(|k| {
                z[k] = center[k] + h;
                let up = u(&z);
                z[k] = center[k] - h;
                let down = u(&z);
                z[k] = center[k];
                (up - down) / (2.0 * h)
            })
            .collect()
    };
    let mut div = 0.0;
    let mut c = x.to_vec();
    for k in 0..n {
        let mut fk = [0.0; 2];
        for (slot, sign) in [(0usize, 1.0), (1, -1.0)] {
            c[k] = x[k] + sign * h;
            let g = grad(&c);
            let gn = norm(&g);
            let s = if gn == 0.0 { 0.0 } else { powf(gn, p - 2.0) };
            fk[slot] = s * g[k];
        }
        c[k] = x[k];
        div += (fk[0] - fk[1]) / (2.0 * h);
    }
    div
}

/// Central difference in `t` with step `FD_TIME_STEP · t`.
pub fn fd_time_derivative<F>(u: F, t: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let dt = FD_TIME_STEP * t;
    (u(t + dt) - u(t - dt)) / (2.0 * dt)
}

impl EvolutionKernel {
    /// Finite-difference assembly of `Δ_p(aB) - (aB)_t`, independent of the
    /// analytic derivatives.
    pub fn barenblatt_defect_fd(&self, a: f64, x: &[f64], t: f64) -> Result<f64> {
        self.require(KernelKind::Barenblatt)?;
        self.check(x, t)?;
        let h = FD_SPACE_STEP * (1.0 + norm(x));
        let lap = fd_p_laplacian(|z| a * self.profile(norm(z), t), x, self.p, h);
        let r = norm(x);
        let dt = fd_time_derivative(|s| a * self.profile(r, s), t);
        Ok(lap - dt)
    }

    /// Finite-difference assembly of `∂_t(|V|^{p-2}V) - Δ_p V` at `x` for the
    /// two-bump combination.
    pub fn two_bump_operator_fd(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        self.require(KernelKind::Homogeneous)?;
        self.check(x, t)?;
        self.check(y, t)?;
        let p = self.p;
        let value = |z: &[f64], s: f64| -> f64 {
            let plus: Vec<f64> = z.iter().zip(y).map(|(a, b)| a + b).collect();
            let minus: Vec<f64> = z.iter().zip(y).map(|(a, b)| a - b).collect();
            self.profile(norm(&plus), s) + self.profile(norm(&minus), s)
        };
        let h = FD_SPACE_STEP * (1.0 + norm(x));
        let lap = fd_p_laplacian(|z| value(z, t), x, p, h);
        let dt = fd_time_derivative(
            |s| {
                let v = value(x, s);
                powf(v.abs(), p - 2.0) * v
            },
            t,
        );
        Ok(dt - lap)
    }
}
