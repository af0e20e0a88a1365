//! Superpositions `W(x) = Σ a_i w(x - y_i) + K(x)` and their p-Laplacian.
//!
//! `Δ_p` is available through three routes that share only [`eval`]:
//!
//! - [`delta_p_direct`] expands `div(|∇W|^{p-2}∇W)` as
//!   `|∇W|^{p-2}((p-2) ∇W H ∇Wᵀ/|∇W|² + ΔW)` with the assembled Hessian;
//! - [`delta_p_closed_form`] sums the per-pole identity
//!   `-C_{n,p} |∇V|^{p-2} Σ a_i sin²θ_i / |x-y_i|^{(p+n-2)/(p-1)}`
//!   (pure superpositions only);
//! - [`delta_p_fd`] differentiates the flux `|∇W|^{p-2}∇W` numerically.

use alloc::vec;
use alloc::vec::Vec;

use crate::concave::{eval_concave, ConcaveTerm};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{atan2, dist, dot, norm, powf, sqrt};
use crate::params::Params;
use crate::radial::{fundamental_profile, hessian_from_profile};

/// Relative gradient threshold below which `Δ_p` takes its continuous
/// extension (0 for `p > 2`).
pub const GRADIENT_EPSILON: f64 = 1e-12;
/// Gradient norm below which results for `p < 2` are flagged low-confidence.
pub const LOW_CONFIDENCE_GRADIENT: f64 = 1e-8;
/// Default finite-difference step of [`delta_p_fd`] (scaled by `1 + |x|`).
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub weight: f64,
    pub location: Vec<f64>,
}

/// Weighted poles `{(a_i, y_i)}` sharing one [`Params`].
///
/// Construction merges poles at identical locations (weights summed) and drops
/// zero weights. Only finite truncations are represented; whether a series of
/// such sets converges is up to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    params: Params,
    poles: Vec<Pole>,
}

impl PoleSet {
    pub fn new(params: Params, poles: Vec<Pole>) -> Result<Self> {
        let mut merged: Vec<Pole> = Vec::with_capacity(poles.len());
        for pole in poles {
            params.check_dim(pole.location.len())?;
            if !(pole.weight >= 0.0) || !pole.weight.is_finite() {
                return Err(Error::Domain(
                    "pole weights must be finite and non-negative",
                ));
            }
            if pole.location.iter().any(|c| !c.is_finite()) {
                return Err(Error::Domain("pole locations must be finite"));
            }
            if pole.weight == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|q| q.location == pole.location) {
                Some(q) => q.weight += pole.weight,
                None => merged.push(pole),
            }
        }
        if merged.is_empty() {
            return Err(Error::EmptyPoleSet);
        }
        Ok(PoleSet {
            params,
            poles: merged,
        })
    }

    /// No poles at all, for evaluating the concave term on its own.
    pub fn without_poles(params: Params) -> Self {
        PoleSet {
            params,
            poles: Vec::new(),
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.poles.iter().map(|p| p.weight).sum()
    }

    /// Same poles with every weight multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::Domain("weight scale must be positive"));
        }
        let poles = self.poles.iter().map(|p| Pole {
            weight: s * p.weight,
            location: p.location.clone(),
        });
        Ok(PoleSet {
            params: self.params,
            poles: poles.collect(),
        })
    }

    /// `GRADIENT_EPSILON · c Σ a_i` (or `GRADIENT_EPSILON` with no poles).
    pub fn gradient_epsilon(&self) -> f64 {
        let scale = self.params.c() * self.total_weight();
        GRADIENT_EPSILON * if scale > 0.0 { scale } else { 1.0 }
    }

    /// Smallest distance from `x` to a pole (`+∞` without poles).
    pub fn nearest_pole_distance(&self, x: &[f64]) -> f64 {
        self.poles
            .iter()
            .map(|p| dist(x, &p.location))
            .fold(f64::INFINITY, f64::min)
    }
}

/// First and second order data at a non-pole point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    /// `ξ = ∇V + ∇K`.
    pub gradient: Vec<f64>,
    pub hessian: Matrix,
    /// Angle `θ_i ∈ [0, π]` between `x - y_i` and `ξ`; 0 when `ξ` vanishes.
    pub angles: Vec<f64>,
    /// `sin²θ_i`, computed from the rejection rather than from the angle.
    pub sin_sq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// `+∞` at a pole where the fundamental solution blows up.
    pub value: f64,
    pub distances: Vec<f64>,
    /// `None` at a pole.
    pub derivatives: Option<Derivatives>,
}

impl EvalResult {
    pub fn gradient(&self) -> Result<&[f64]> {
        self.derivatives
            .as_ref()
            .map(|d| d.gradient.as_slice())
            .ok_or(Error::PoleSingularity)
    }

    pub fn gradient_norm(&self) -> Result<f64> {
        self.gradient().map(norm)
    }

    /// For `p < 2` the factor `|ξ|^{p-2}` amplifies rounding once `|ξ|` is small.
    pub fn low_confidence(&self, params: &Params) -> bool {
        params.p() < 2.0
            && self
                .gradient_norm()
                .map_or(true, |g| g < LOW_CONFIDENCE_GRADIENT)
    }
}

pub fn eval(ps: &PoleSet, k: &ConcaveTerm, x: &[f64]) -> Result<EvalResult> {
    let params = ps.params();
    params.check_dim(x.len())?;
    let n = x.len();
    let distances: Vec<f64> = ps.poles.iter().map(|p| dist(x, &p.location)).collect();

    if distances.contains(&0.0) {
        // w -> +∞ at its pole exactly when 1 < p <= n
        if params.p() > 1.0 && params.p() <= params.n_f64() {
            return Ok(EvalResult {
                value: f64::INFINITY,
                distances,
                derivatives: None,
            });
        }
        return Err(Error::PoleSingularity);
    }

    let ke = eval_concave(k, x)?;
    let mut value = ke.value;
    let mut gradient = ke.gradient;
    let mut hessian = ke.hessian;
    let mut offsets = Vec::with_capacity(ps.len());
    for (pole, &r) in ps.poles.iter().zip(&distances) {
        let d: Vec<f64> = x.iter().zip(&pole.location).map(|(a, b)| a - b).collect();
        let prof = fundamental_profile(params, r)?;
        value += pole.weight * prof.v;
        let s = pole.weight * prof.dv / r;
        gradient.iter_mut().zip(&d).for_each(|(g, di)| *g += s * di);
        hessian.add_assign_scaled(&hessian_from_profile(&d, &prof), pole.weight);
        offsets.push(d);
    }

    let gnorm = norm(&gradient);
    let degenerate = gnorm < ps.gradient_epsilon();
    // one pole and no K: ξ is parallel to x - y_1 by construction; in 1D every
    // pair of vectors is parallel
    let parallel = n == 1 || (ps.len() == 1 && k.is_zero());
    let mut angles = vec![0.0; ps.len()];
    let mut sin_sq = vec![0.0; ps.len()];
    if !degenerate {
        for (i, d) in offsets.iter().enumerate() {
            let proj = dot(d, &gradient) / gnorm;
            if parallel {
                angles[i] = if proj < 0.0 {
                    core::f64::consts::PI
                } else {
                    0.0
                };
                continue;
            }
            // rejection of x - y_i from the gradient direction
            let rej2: f64 = d
                .iter()
                .zip(&gradient)
                .map(|(di, gi)| {
                    let e = di - proj * gi / gnorm;
                    e * e
                })
                .sum();
            let dd = distances[i] * distances[i];
            angles[i] = atan2(sqrt(rej2), proj);
            sin_sq[i] = (rej2 / dd).min(1.0);
        }
    }

    Ok(EvalResult {
        value,
        distances,
        derivatives: Some(Derivatives {
            gradient,
            hessian,
            angles,
            sin_sq,
        }),
    })
}

/// Value of `W` only. At a pole this is `+∞` when `1 < p <= n` and the finite
/// limit of the fundamental solution otherwise, so grid nodes may sit on poles.
pub fn potential_value(ps: &PoleSet, k: &ConcaveTerm, x: &[f64]) -> Result<f64> {
    let params = ps.params();
    params.check_dim(x.len())?;
    let mut value = k.value(x)?;
    for pole in &ps.poles {
        let r = dist(x, &pole.location);
        if r == 0.0 {
            if params.p() > 1.0 && params.p() <= params.n_f64() {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        value += pole.weight * fundamental_profile(params, r)?.v;
    }
    Ok(value)
}

/// `Δ_p W` from the expanded divergence identity.
pub fn delta_p_direct(ps: &PoleSet, k: &ConcaveTerm, x: &[f64]) -> Result<f64> {
    let res = eval(ps, k, x)?;
    let d = res.derivatives.ok_or(Error::PoleSingularity)?;
    let p = ps.params().p();
    if p == 2.0 {
        return Ok(d.hessian.trace());
    }
    let g2 = dot(&d.gradient, &d.gradient);
    let gnorm = sqrt(g2);
    if gnorm < ps.gradient_epsilon() {
        return if p > 2.0 {
            Ok(0.0)
        } else {
            Err(Error::UndefinedOperator)
        };
    }
    let rayleigh = d.hessian.quad_form(&d.gradient) / g2;
    Ok(powf(gnorm, p - 2.0) * ((p - 2.0) * rayleigh + d.hessian.trace()))
}

/// `Δ_p V` from the closed-form `sin²θ_i` sum; `k` must be [`ConcaveTerm::Zero`].
pub fn delta_p_closed_form(ps: &PoleSet, k: &ConcaveTerm, x: &[f64]) -> Result<f64> {
    if !k.is_zero() {
        return Err(Error::UnsupportedConfiguration(
            "closed form covers pure superpositions only",
        ));
    }
    let params = ps.params();
    let res = eval(ps, k, x)?;
    let d = res.derivatives.ok_or(Error::PoleSingularity)?;
    let p = params.p();
    if p == 2.0 {
        return Ok(0.0);
    }
    let gnorm = norm(&d.gradient);
    if gnorm < ps.gradient_epsilon() {
        return if p > 2.0 {
            Ok(0.0)
        } else {
            Err(Error::UndefinedOperator)
        };
    }
    let e = params.sign_exponent();
    let sum: f64 = ps
        .poles
        .iter()
        .zip(&res.distances)
        .zip(&d.sin_sq)
        .map(|((pole, &r), &s2)| {
            if s2 == 0.0 {
                0.0
            } else {
                pole.weight * s2 / powf(r, e)
            }
        })
        .sum();
    Ok(-params.big_c() * powf(gnorm, p - 2.0) * sum)
}

/// Gradient of `W` without the Hessian and angle bookkeeping.
fn gradient_at(ps: &PoleSet, k: &ConcaveTerm, x: &[f64]) -> Result<Vec<f64>> {
    let params = ps.params();
    let mut g = eval_concave(k, x)?.gradient;
    for pole in &ps.poles {
        let r = dist(x, &pole.location);
        if r == 0.0 {
            return Err(Error::PoleSingularity);
        }
        let prof = fundamental_profile(params, r)?;
        let s = pole.weight * prof.dv / r;
        g.iter_mut()
            .zip(x.iter().zip(&pole.location))
            .for_each(|(gi, (a, b))| *gi += s * (a - b));
    }
    Ok(g)
}

fn flux(ps: &PoleSet, k: &ConcaveTerm, x: &[f64]) -> Result<Vec<f64>> {
    let p = ps.params().p();
    let g = gradient_at(ps, k, x)?;
    if p == 2.0 {
        return Ok(g);
    }
    let gnorm = norm(&g);
    if gnorm < ps.gradient_epsilon() {
        return if p > 2.0 {
            Ok(vec![0.0; g.len()])
        } else {
            Err(Error::UndefinedOperator)
        };
    }
    let s = powf(gnorm, p - 2.0);
    Ok(g.into_iter().map(|gi| s * gi).collect())
}

/// `div(|∇W|^{p-2}∇W)` by fourth-order central differences of the analytic
/// flux with per-axis step `step · (1 + |x|)`.
///
/// The fourth-order stencil keeps the truncation error well below the value
/// when `x` is nearly collinear with the poles and the result is small
/// against its individual terms.
pub fn delta_p_fd(ps: &PoleSet, k: &ConcaveTerm, x: &[f64], step: f64) -> Result<f64> {
    ps.params().check_dim(x.len())?;
    if !(step > 0.0) {
        return Err(Error::Domain("finite-difference step must be positive"));
    }
    let h = step * (1.0 + norm(x));
    if ps.nearest_pole_distance(x) <= 10.0 * h {
        return Err(Error::Domain("stencil too close to a pole"));
    }
    let mut div = 0.0;
    let mut z = x.to_vec();
    for axis in 0..x.len() {
        let mut at = |offset: f64| -> Result<f64> {
            z[axis] = x[axis] + offset;
            flux(ps, k, &z).map(|f| f[axis])
        };
        let (f2, f1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
        z[axis] = x[axis];
        div += (8.0 * (f1 - m1) - (f2 - m2)) / (12.0 * h);
    }
    Ok(div)
}

/// Sign of `Δ_p V` over all superpositions, as a function of `(p, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignClass {
    NonPositive,
    IdenticallyZero,
    NonNegative,
    Excluded,
}

impl SignClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignClass::NonPositive => "NonPositive",
            SignClass::IdenticallyZero => "IdenticallyZero",
            SignClass::NonNegative => "NonNegative",
            SignClass::Excluded => "Excluded",
        }
    }

    /// Whether `value` lies in the half-line (or point) of this class.
    pub fn admits(&self, value: f64, slack: f64) -> bool {
        match self {
            SignClass::NonPositive => value <= slack,
            SignClass::NonNegative => value >= -slack,
            SignClass::IdenticallyZero => value.abs() <= slack,
            SignClass::Excluded => false,
        }
    }
}

impl core::fmt::Display for SignClass {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies by the sign of `-(p-2)(p+n-2)/(p-1)`; the lines `p = 2`,
/// `n = 1` and `p + n = 2` (matched to within 1e-12) are identically zero.
pub fn sign_region(p: f64, n: usize) -> SignClass {
    const LINE: f64 = 1e-12;
    if (p - 1.0).abs() <= LINE {
        return SignClass::Excluded;
    }
    let nf = n as f64;
    if (p - 2.0).abs() <= LINE || n == 1 || (p + nf - 2.0).abs() <= LINE {
        return SignClass::IdenticallyZero;
    }
    let factor = -(p - 2.0) * (p + nf - 2.0) / (p - 1.0);
    if factor < 0.0 {
        SignClass::NonPositive
    } else {
        SignClass::NonNegative
    }
}

/// Regular grid of `counts[k]` cells of size `cell_size[k]` starting at `lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    pub lower: Vec<f64>,
    pub cell_size: Vec<f64>,
    pub counts: Vec<usize>,
}

impl CellGrid {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.iter().product()
    }

    /// Center of cell `index` (axis 0 varies fastest).
    pub fn center(&self, mut index: usize) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.counts.len());
        for k in 0..self.counts.len() {
            let i = index % self.counts[k];
            index /= self.counts[k];
            c.push(self.lower[k] + (i as f64 + 0.5) * self.cell_size[k]);
        }
        c
    }
}

/// Riemann-sum pole set for `∫ ρ(y) w(x - y) dy`: one pole per cell with
/// weight `ρ · volume` at the cell center.
pub fn riemann_pole_set(grid: &CellGrid, density: &[f64], params: Params) -> Result<PoleSet> {
    let dim = grid.counts.len();
    if grid.lower.len() != dim || grid.cell_size.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: grid.lower.len().min(grid.cell_size.len()),
        });
    }
    params.check_dim(dim)?;
    if density.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: density.len(),
        });
    }
    let volume = grid.cell_volume();
    if !(volume > 0.0) {
        return Err(Error::Domain("grid cells must have positive volume"));
    }
    if density.iter().any(|&rho| !(rho >= 0.0)) {
        return Err(Error::Domain("density must be non-negative"));
    }
    let poles = density
        .iter()
        .enumerate()
        .filter(|(_, &rho)| rho > 0.0)
        .map(|(i, &rho)| Pole {
            weight: rho * volume,
            location: grid.center(i),
        })
        .collect();
    PoleSet::new(params, poles)
}
