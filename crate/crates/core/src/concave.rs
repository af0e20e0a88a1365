//! Concave additive terms `K` and the sufficient conditions under which
//! `Δ_p(V + K) <= 0` survives the addition.
//!
//! Three families are representable: quadratics, minima of affine functions,
//! and mollifications `K_δ = φ_δ * K` of either. Quadratics that are not
//! concave are allowed so the non-concave counterexample `diag(1-m, 1, ..., 1)`
//! can be expressed; they carry a flag.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{dot, exp};

/// Relative tolerance for two affine pieces to count as tied.
pub const TIE_EPSILON: f64 = 1e-9;
/// Absolute slack of [`eigenvalue_criterion`].
pub const CRITERION_SLACK: f64 = 1e-12;
/// Gauss–Legendre nodes per axis of the mollifier quadrature.
pub const MOLLIFIER_NODES: usize = 16;

/// `½ xᵀ A x + b·x + c0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    a: Matrix,
    b: Vec<f64>,
    c0: f64,
    concave: bool,
}

impl Quadratic {
    pub fn new(a: Matrix, b: Vec<f64>, c0: f64) -> Result<Self> {
        if b.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.len(),
            });
        }
        if !a.is_symmetric(1e-12) {
            return Err(Error::Domain("quadratic form matrix must be symmetric"));
        }
        let concave = is_negative_semidefinite(&a);
        Ok(Quadratic { a, b, c0, concave })
    }

    /// Pure form `½ xᵀ A x`.
    pub fn form(a: Matrix) -> Result<Self> {
        let n = a.dim();
        Self::new(a, vec![0.0; n], 0.0)
    }

    /// `A = diag(1 - m, 1, ..., 1)` with `m = p + n - 2`: not concave, yet
    /// passes the eigenvalue criterion with equality.
    pub fn non_concave_example(p: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension n must be at least 1"));
        }
        let m = p + n as f64 - 2.0;
        let mut diag = vec![1.0; n];
        diag[0] = 1.0 - m;
        Self::form(Matrix::from_diag(&diag))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }

    pub fn constant(&self) -> f64 {
        self.c0
    }

    pub fn is_concave(&self) -> bool {
        self.concave
    }
}

/// `ℓ(x) = slope·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl Affine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.slope, x) + self.offset
    }
}

/// `K_δ = φ_δ * base` with the compactly supported bump
/// `φ(z) ∝ exp(-1/(1 - |z/δ|²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollified {
    base: Box<ConcaveTerm>,
    delta: f64,
}

impl Mollified {
    pub fn base(&self) -> &ConcaveTerm {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum ConcaveTerm {
    #[default]
    Zero,
    Quadratic(Quadratic),
    AffineMin(Vec<Affine>),
    Mollified(Mollified),
}

/// Value, gradient and Hessian of a concave term at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Matrix,
}

impl ConcaveTerm {
    pub fn affine_min(pieces: Vec<Affine>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::Domain("minimum of an empty family"));
        };
        let n = first.slope.len();
        if let Some(bad) = pieces.iter().find(|l| l.slope.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.slope.len(),
            });
        }
        Ok(ConcaveTerm::AffineMin(pieces))
    }

    pub fn mollified(base: ConcaveTerm, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain("mollification radius must be positive"));
        }
        Ok(ConcaveTerm::Mollified(Mollified {
            base: Box::new(base),
            delta,
        }))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ConcaveTerm::Zero)
    }

    pub fn is_concave(&self) -> bool {
        match self {
            ConcaveTerm::Zero | ConcaveTerm::AffineMin(_) => true,
            ConcaveTerm::Quadratic(q) => q.is_concave(),
            ConcaveTerm::Mollified(m) => m.base.is_concave(),
        }
    }

    /// Dimension fixed by the representation, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConcaveTerm::Zero => None,
            ConcaveTerm::Quadratic(q) => Some(q.a.dim()),
            ConcaveTerm::AffineMin(pieces) => pieces.first().map(|l| l.slope.len()),
            ConcaveTerm::Mollified(m) => m.base.dim(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.dim() {
            Some(n) if n != x.len() => Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Value only; defined at kinks as well.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            ConcaveTerm::Zero => 0.0,
            ConcaveTerm::Quadratic(q) => quadratic_value(q, x),
            ConcaveTerm::AffineMin(pieces) => pieces
                .iter()
                .map(|l| l.eval(x))
                .fold(f64::INFINITY, f64::min),
            ConcaveTerm::Mollified(m) => mollify(m, x, false)?.value,
        })
    }
}

fn quadratic_value(q: &Quadratic, x: &[f64]) -> f64 {
    0.5 * q.a.quad_form(x) + dot(&q.b, x) + q.c0
}

/// Scale-aware test `λ_max <= 1e-12 ‖A‖`.
pub fn is_negative_semidefinite(a: &Matrix) -> bool {
    let ev = a.symmetric_eigenvalues();
    let top = ev.last().copied().unwrap_or(0.0);
    top <= 1e-12 * a.frobenius_norm()
}

pub fn eval_concave(k: &ConcaveTerm, x: &[f64]) -> Result<ConcaveEval> {
    k.check_dim(x)?;
    let n = x.len();
    match k {
        ConcaveTerm::Zero => Ok(ConcaveEval {
            value: 0.0,
            gradient: vec![0.0; n],
            hessian: Matrix::zeros(n),
        }),
        ConcaveTerm::Quadratic(q) => {
            let mut gradient = q.a.mul_vec(x);
            gradient.iter_mut().zip(&q.b).for_each(|(g, b)| *g += b);
            Ok(ConcaveEval {
                value: quadratic_value(q, x),
                gradient,
                hessian: q.a.clone(),
            })
        }
        ConcaveTerm::AffineMin(pieces) => {
            let values: Vec<f64> = pieces.iter().map(|l| l.eval(x)).collect();
            let (best, min) =
                values
                    .iter()
                    .copied()
                    .enumerate()
                    .fold(
                        (0, f64::INFINITY),
                        |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
                    );
            let tie = TIE_EPSILON * min.abs().max(1.0);
            if values
                .iter()
                .enumerate()
                .any(|(i, v)| i != best && (v - min).abs() <= tie)
            {
                return Err(Error::Kink);
            }
            Ok(ConcaveEval {
                value: min,
                gradient: pieces[best].slope.clone(),
                hessian: Matrix::zeros(n),
            })
        }
        ConcaveTerm::Mollified(m) => mollify(m, x, true),
    }
}

/// Sorted-eigenvalue combination `λ_1 + ... + λ_{n-1} + (p-1) λ_n`.
pub fn criterion_sum(h: &Matrix, p: f64) -> Result<f64> {
    if !h.is_symmetric(1e-12) {
        return Err(Error::Domain("matrix must be symmetric"));
    }
    let ev = h.symmetric_eigenvalues();
    let Some((&top, rest)) = ev.split_last() else {
        return Ok(0.0);
    };
    Ok(rest.iter().sum::<f64>() + (p - 1.0) * top)
}

/// Whether a symmetric Hessian `H` satisfies
/// `λ_1 + ... + λ_{n-1} + (p-1) λ_n <= 0` (up to [`CRITERION_SLACK`]).
///
/// When every summand's Hessian passes at `x`, `Δ_p` of the sum is
/// non-positive there. Negative semidefinite matrices always pass.
pub fn eigenvalue_criterion(h: &Matrix, p: f64) -> Result<bool> {
    if !(p > 2.0) {
        return Err(Error::Domain("eigenvalue criterion requires p > 2"));
    }
    Ok(criterion_sum(h, p)? <= CRITERION_SLACK)
}

/// `(p-2) ξᵀ(H K)ξ/|ξ|² + ΔK` at `x`: the part of `Δ_p(V + K)` contributed by `K`,
/// up to the factor `|ξ|^{p-2}`.
pub fn operator_term(k: &ConcaveTerm, p: f64, xi: &[f64], x: &[f64]) -> Result<f64> {
    let ke = eval_concave(k, x)?;
    if xi.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: xi.len(),
        });
    }
    let xx = dot(xi, xi);
    if xx == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    Ok((p - 2.0) * ke.hessian.quad_form(xi) / xx + ke.hessian.trace())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_m`.
pub(crate) fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut t = crate::math::cos(core::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = mf * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[i] = -t;
        nodes[m - 1 - i] = t;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Convolution of `m.base` with the normalized bump by tensor-product
/// Gauss–Legendre quadrature on `[-δ, δ]^n`.
///
/// Derivatives are moved onto the mollifier, so the base only needs values.
/// Constant offsets `K(x)` are subtracted before the derivative sums, and the
/// gradient/Hessian sums are divided by the rule's own first and second
/// moments (both exactly 1 for the continuous integral), which makes affine
/// inputs exact and removes most of the quadrature bias.
fn mollify(m: &Mollified, x: &[f64], derivatives: bool) -> Result<ConcaveEval> {
    let n = x.len();
    let delta = m.delta;
    let (t, w) = gauss_legendre(MOLLIFIER_NODES);
    let total = MOLLIFIER_NODES.pow(n as u32);
    let center = m.base.value(x)?;

    let mut mass = 0.0;
    let mut first_moment = 0.0;
    let mut second_moment = 0.0;
    let mut value = 0.0;
    let mut gradient = vec![0.0; n];
    let mut hessian = Matrix::zeros(n);
    let mut z = vec![0.0; n];
    let mut shifted = vec![0.0; n];
    let mut idx = vec![0usize; n];
    let inv_d2 = 1.0 / (delta * delta);

    for _ in 0..total {
        let mut weight = 1.0;
        let mut s = 0.0;
        for k in 0..n {
            z[k] = delta * t[idx[k]];
            weight *= delta * w[idx[k]];
            s += z[k] * z[k];
        }
        s *= inv_d2;
        if s < 1.0 {
            let q = 1.0 / (1.0 - s);
            let psi = exp(-q);
            for k in 0..n {
                shifted[k] = x[k] - z[k];
            }
            let kv = m.base.value(&shifted)?;
            mass += weight * psi;
            value += weight * psi * kv;
            if derivatives {
                // ψ(s) = exp(-1/(1-s)); chain rule through s = |z|²/δ²
                let dpsi = -psi * q * q;
                let ddpsi = psi * (q * q * q * q - 2.0 * q * q * q);
                let diff = kv - center;
                let z0 = z[0];
                first_moment -= weight * dpsi * 2.0 * z0 * inv_d2 * z0;
                second_moment += weight
                    * (ddpsi * 4.0 * z0 * z0 * inv_d2 * inv_d2 + dpsi * 2.0 * inv_d2)
                    * 0.5
                    * z0
                    * z0;
                for i in 0..n {
                    gradient[i] += weight * dpsi * 2.0 * z[i] * inv_d2 * diff;
                    for j in 0..=i {
                        let mut d2 = ddpsi * 4.0 * z[i] * z[j] * inv_d2 * inv_d2;
                        if i == j {
                            d2 += dpsi * 2.0 * inv_d2;
                        }
                        hessian[(i, j)] += weight * d2 * diff;
                    }
                }
            }
        }
        for k in 0..n {
            idx[k] += 1;
            if idx[k] < MOLLIFIER_NODES {
                break;
            }
            idx[k] = 0;
        }
    }

    if !(mass > 0.0) {
        return Err(Error::Quadrature);
    }
    let value = value / mass;
    if derivatives {
        for g in gradient.iter_mut() {
            *g /= first_moment;
        }
        for i in 0..n {
            for j in 0..=i {
                let v = hessian[(i, j)] / second_moment;
                hessian[(i, j)] = v;
                hessian[(j, i)] = v;
            }
        }
    }
    let finite = value.is_finite()
        && gradient.iter().all(|g| g.is_finite())
        && (0..n).all(|i| hessian.row(i).iter().all(|h| h.is_finite()));
    if !finite {
        return Err(Error::Quadrature);
    }
    Ok(ConcaveEval {
        value,
        gradient,
        hessian,
    })
}
