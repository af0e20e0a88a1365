//! Discrete p-harmonic Dirichlet problems on rectangular grids and a
//! comparison harness: with boundary data `h = W` on `∂D`, a p-superharmonic
//! `W` must satisfy `h <= W` inside `D`.
//!
//! `h` minimizes the regularized p-Dirichlet energy
//!
//! ```text
//! E(h) = Σ_cells Σ_corners |cell|/2^d (|∇_c h|² + ε²)^{p/2}
//! ```
//!
//! where `∇_c h` is the one-sided gradient at corner `c` of the cell (the
//! gradient of the linear interpolant on the corner simplex). Averaging over
//! all corners keeps the stencil symmetric and free of checkerboard modes; for
//! `p = 2` it reduces to the standard `2d + 1` point Laplacian. Affine data are
//! reproduced exactly for every `p`.

use alloc::vec;
use alloc::vec::Vec;

use crate::concave::ConcaveTerm;
use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::math::{dist, powf};
use crate::superpose::{potential_value, PoleSet};

/// Default regularization `ε` of the energy density.
pub const REG_EPS: f64 = 1e-8;
/// Default tolerance on the sup-norm of the energy gradient.
pub const SOLVER_TOL: f64 = 1e-9;
/// Default iteration budget.
pub const MAX_ITER: usize = 100_000;
/// Allowed negative gap `min(W - h)` at spacing 1/32.
pub const COMPARISON_TOL: f64 = 1e-3;
/// Excision radius around singular poles, in node spacings.
pub const EXCISION_SPACINGS: f64 = 3.0;
/// Minimum nodes per axis.
pub const MIN_NODES: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    nodes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
}

impl GridDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, nodes: Vec<usize>) -> Result<Self> {
        let dim = lower.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::Domain("grid dimension must be 2 or 3"));
        }
        if upper.len() != dim || nodes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: upper.len().min(nodes.len()),
            });
        }
        if nodes.iter().any(|&m| m < MIN_NODES) {
            return Err(Error::Domain("grid needs at least 9 nodes per axis"));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::Domain("grid bounds must satisfy lower < upper"));
        }
        Ok(GridDomain {
            lower,
            upper,
            nodes,
        })
    }

    /// `[lo, hi]^dim` with `nodes` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![nodes; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.nodes[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.spacing(k))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of node `idx` (axis 0 varies fastest).
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .map(|&m| {
                let i = idx % m;
                idx /= m;
                i
            })
            .collect()
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.nodes)
            .rev()
            .fold(0, |acc, (&i, &m)| acc * m + i)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                if i == self.nodes[k] - 1 {
                    self.upper[k]
                } else {
                    self.lower[k] + i as f64 * self.spacing(k)
                }
            })
            .collect()
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        let on_face = self
            .multi_index(idx)
            .iter()
            .zip(&self.nodes)
            .any(|(&i, &m)| i == 0 || i == m - 1);
        if on_face {
            NodeKind::Boundary
        } else {
            NodeKind::Interior
        }
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kind(i) == NodeKind::Boundary)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kind(i) == NodeKind::Interior)
    }
}

/// Values at every node of a [`GridDomain`]; node kinds come from the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: GridDomain,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid function values must be finite"));
        }
        Ok(GridFunction { domain, values })
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(domain: GridDomain, mut f: F) -> Result<Self> {
        let values = (0..domain.len()).map(|i| f(&domain.coords(i))).collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.domain.kind(idx)
    }

    /// Extremes over boundary nodes.
    pub fn boundary_range(&self) -> (f64, f64) {
        self.domain
            .boundary_nodes()
            .map(|i| self.values[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub reg_eps: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            reg_eps: REG_EPS,
            tol: SOLVER_TOL,
            max_iter: MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final sup-norm of the energy gradient.
    pub residual: f64,
    /// Energy after each accepted step (first entry: initial guess).
    pub energy_history: Vec<f64>,
}

/// Cell/corner bookkeeping shared by energy, gradient and Hessian.
struct Assembly<'a> {
    domain: &'a GridDomain,
    p: f64,
    eps2: f64,
    /// Unknown index of each node, `None` on the boundary.
    unknown: Vec<Option<usize>>,
    unknowns: usize,
    bandwidth: usize,
    /// Global node indices of the `2^d` corners of each cell.
    cells: Vec<Vec<usize>>,
    inv_h: Vec<f64>,
    corner_weight: f64,
}

impl<'a> Assembly<'a> {
    fn new(domain: &'a GridDomain, p: f64, reg_eps: f64) -> Self {
        let d = domain.dim();
        let mut unknown = vec![None; domain.len()];
        let mut unknowns = 0;
        for (i, slot) in unknown.iter_mut().enumerate() {
            if domain.kind(i) == NodeKind::Interior {
                *slot = Some(unknowns);
                unknowns += 1;
            }
        }
        let interior: Vec<usize> = domain.nodes.iter().map(|m| m - 2).collect();
        // neighbours within a cell differ by at most one step per axis
        let bandwidth = match d {
            2 => interior[0] + 1,
            _ => interior[0] * interior[1] + interior[0] + 1,
        };
        let cell_counts: Vec<usize> = domain.nodes.iter().map(|m| m - 1).collect();
        let n_cells: usize = cell_counts.iter().product();
        let mut cells = Vec::with_capacity(n_cells);
        for c in 0..n_cells {
            let mut rem = c;
            let base: Vec<usize> = cell_counts
                .iter()
                .map(|&m| {
                    let i = rem % m;
                    rem /= m;
                    i
                })
                .collect();
            let corners = (0..1usize << d)
                .map(|bits| {
                    let multi: Vec<usize> = (0..d).map(|k| base[k] + ((bits >> k) & 1)).collect();
                    domain.linear_index(&multi)
                })
                .collect();
            cells.push(corners);
        }
        let inv_h = (0..d).map(|k| 1.0 / domain.spacing(k)).collect();
        let volume: f64 = (0..d).map(|k| domain.spacing(k)).product();
        Assembly {
            domain,
            p,
            eps2: reg_eps * reg_eps,
            unknown,
            unknowns,
            bandwidth,
            cells,
            inv_h,
            corner_weight: volume / (1usize << d) as f64,
        }
    }

    fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Gradient at corner `bits` of `cell`, plus the node pair of each component.
    #[inline]
    fn corner_gradient(
        &self,
        cell: &[usize],
        bits: usize,
        u: &[f64],
        g: &mut [f64],
        pairs: &mut [(usize, usize)],
    ) {
        for k in 0..self.dim() {
            let hi = cell[bits | (1 << k)];
            let lo = cell[bits & !(1 << k)];
            g[k] = (u[hi] - u[lo]) * self.inv_h[k];
            pairs[k] = (hi, lo);
        }
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let d = self.dim();
        let mut g = [0.0; 3];
        let mut pairs = [(0, 0); 3];
        let mut e = 0.0;
        for cell in &self.cells {
            for bits in 0..1usize << d {
                self.corner_gradient(cell, bits, u, &mut g[..d], &mut pairs[..d]);
                let s: f64 = g[..d].iter().map(|x| x * x).sum::<f64>() + self.eps2;
                e += powf(s, 0.5 * self.p);
            }
        }
        e * self.corner_weight
    }

    /// Energy gradient with respect to the unknowns.
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.unknowns];
        let mut g = [0.0; 3];
        let mut pairs = [(0, 0); 3];
        for cell in &self.cells {
            for bits in 0..1usize << d {
                self.corner_gradient(cell, bits, u, &mut g[..d], &mut pairs[..d]);
                let s: f64 = g[..d].iter().map(|x| x * x).sum::<f64>() + self.eps2;
                let f1 = self.corner_weight * self.p * powf(s, 0.5 * self.p - 1.0);
                for k in 0..d {
                    let (hi, lo) = pairs[k];
                    let c = f1 * g[k] * self.inv_h[k];
                    if let Some(j) = self.unknown[hi] {
                        out[j] += c;
                    }
                    if let Some(j) = self.unknown[lo] {
                        out[j] -= c;
                    }
                }
            }
        }
        out
    }

    fn hessian(&self, u: &[f64]) -> BandMatrix {
        let d = self.dim();
        let mut hm = BandMatrix::zeros(self.unknowns, self.bandwidth);
        let mut g = [0.0; 3];
        let mut pairs = [(0, 0); 3];
        for cell in &self.cells {
            for bits in 0..1usize << d {
                self.corner_gradient(cell, bits, u, &mut g[..d], &mut pairs[..d]);
                let s: f64 = g[..d].iter().map(|x| x * x).sum::<f64>() + self.eps2;
                let iso = self.p * powf(s, 0.5 * self.p - 1.0);
                let aniso = if self.p == 2.0 {
                    0.0
                } else {
                    self.p * (self.p - 2.0) * powf(s, 0.5 * self.p - 2.0)
                };
                for k in 0..d {
                    for l in 0..d {
                        let mut m = aniso * g[k] * g[l];
                        if k == l {
                            m += iso;
                        }
                        let m = m * self.corner_weight * self.inv_h[k] * self.inv_h[l];
                        let (ka, kb) = pairs[k];
                        let (la, lb) = pairs[l];
                        for (a, sa) in [(ka, 1.0), (kb, -1.0)] {
                            let Some(i) = self.unknown[a] else { continue };
                            for (b, sb) in [(la, 1.0), (lb, -1.0)] {
                                let Some(j) = self.unknown[b] else { continue };
                                // symmetric storage: count each unordered pair once
                                if i >= j {
                                    hm.add(i, j, sa * sb * m);
                                }
                            }
                        }
                    }
                }
            }
        }
        hm
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes the regularized discrete p-Dirichlet energy over interior values,
/// with boundary values taken from `boundary` (its interior values are ignored).
///
/// Damped Newton iteration: each step solves `(H + μ D) d = -∇E` with a banded
/// Cholesky factorization, `μ` grows when the factorization or the Armijo line
/// search fails and shrinks after full steps. Starts from the `p = 2` solution.
pub fn solve_p_harmonic(
    boundary: &GridFunction,
    p: f64,
    opts: &SolverOptions,
) -> Result<(GridFunction, SolveStats)> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::Domain("p-harmonic solver requires p >= 2"));
    }
    if !(opts.reg_eps > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::Domain("solver tolerances must be positive"));
    }
    let domain = boundary.domain();
    let mut u = boundary.values().to_vec();
    for i in domain.interior_nodes() {
        u[i] = 0.0;
    }
    let mut iterations = 0;
    if p != 2.0 {
        // linear warm start
        let lin = Assembly::new(domain, 2.0, opts.reg_eps);
        let grad = lin.gradient(&u);
        if let Some(chol) = lin.hessian(&u).cholesky() {
            let step = chol.solve(&grad);
            for (i, slot) in lin.unknown.iter().enumerate() {
                if let Some(j) = slot {
                    u[i] -= step[*j];
                }
            }
        }
    }

    let asm = Assembly::new(domain, p, opts.reg_eps);
    let mut energy = asm.energy(&u);
    let mut grad = asm.gradient(&u);
    let mut residual = sup_norm(&grad);
    let mut history = vec![energy];
    let mut mu = 0.0f64;

    while residual > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::SolverFailure {
                iterations,
                residual,
            });
        }
        iterations += 1;
        let hess = asm.hessian(&u);
        let scale = (0..hess.size())
            .map(|i| hess.diag(i))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);

        let mut accepted = false;
        while !accepted {
            if mu > 1e12 {
                return Err(Error::SolverFailure {
                    iterations,
                    residual,
                });
            }
            let mut shifted = hess.clone();
            if mu > 0.0 {
                shifted.add_diag(mu * scale);
            }
            let Some(chol) = shifted.cholesky() else {
                mu = (mu * 10.0).max(1e-12);
                continue;
            };
            let mut dir = chol.solve(&grad);
            dir.iter_mut().for_each(|x| *x = -*x);
            let slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            let mut trial = u.clone();
            for _ in 0..40 {
                for (i, slot) in asm.unknown.iter().enumerate() {
                    if let Some(j) = slot {
                        trial[i] = u[i] + t * dir[*j];
                    }
                }
                let e_new = asm.energy(&trial);
                let armijo = e_new <= energy + 1e-4 * t * slope;
                // near the optimum energy differences drown in rounding; fall
                // back to a decrease of the gradient norm
                let stalled = e_new <= energy + 8.0 * f64::EPSILON * energy.abs();
                let g_new = if armijo || stalled {
                    Some(asm.gradient(&trial))
                } else {
                    None
                };
                if let Some(g_new) = g_new {
                    let r_new = sup_norm(&g_new);
                    if armijo || r_new < residual {
                        u.copy_from_slice(&trial);
                        energy = e_new;
                        grad = g_new;
                        residual = r_new;
                        history.push(energy);
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted {
                mu = if t == 1.0 {
                    if mu < 1e-10 {
                        0.0
                    } else {
                        mu * 0.1
                    }
                } else {
                    mu
                };
            } else {
                mu = (mu * 10.0).max(1e-8);
            }
        }
    }

    let solution = GridFunction::new(domain.clone(), u)?;
    Ok((
        solution,
        SolveStats {
            iterations,
            residual,
            energy_history: history,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `min (W - h)` over compared interior nodes.
    pub min_gap: f64,
    /// Node attaining `min_gap`.
    pub min_gap_node: usize,
    /// Compared nodes with `W - h < -COMPARISON_TOL`.
    pub violations: usize,
    pub compared_nodes: usize,
    pub excised_nodes: usize,
    /// Whether `W >= max h` on every excised node (the ε-ball condition).
    pub excision_dominates: bool,
    pub tolerance: f64,
    pub solver: SolveStats,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.min_gap >= -self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRun {
    /// `W` at the nodes; infinite values at excised nodes are clamped to
    /// `max h + 1`.
    pub w: GridFunction,
    pub h: GridFunction,
    pub excised: Vec<bool>,
    pub report: ComparisonReport,
}

/// Solves for `h` with `h = W + boundary_shift` on `∂D` and reports
/// `min (W - h)` over the interior.
///
/// When the fundamental solution is singular at its poles (`1 < p <= n`),
/// interior nodes within `3` spacings of a pole are excised: `W` is `+∞` or
/// nearly so there and the comparison is made on the remaining nodes. For
/// `p > n`, `W` is continuous and every interior node is compared.
pub fn comparison_check(
    ps: &PoleSet,
    k: &ConcaveTerm,
    domain: &GridDomain,
    boundary_shift: f64,
    opts: &SolverOptions,
) -> Result<ComparisonRun> {
    let params = ps.params();
    if params.n() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            found: params.n(),
        });
    }
    let p = params.p();
    let touch = 0.5 * domain.min_spacing();
    for pole in ps.poles() {
        if domain
            .boundary_nodes()
            .any(|b| dist(&domain.coords(b), &pole.location) < touch)
        {
            return Err(Error::Configuration("pole lies on the boundary node set"));
        }
    }

    let singular = params.singular_at_pole();
    let radius = EXCISION_SPACINGS * domain.max_spacing();
    let mut w = Vec::with_capacity(domain.len());
    let mut excised = vec![false; domain.len()];
    for i in 0..domain.len() {
        let x = domain.coords(i);
        if singular && domain.kind(i) == NodeKind::Interior && ps.nearest_pole_distance(&x) < radius
        {
            excised[i] = true;
        }
        w.push(potential_value(ps, k, &x)?);
    }

    let mut data = w.clone();
    for (i, v) in data.iter_mut().enumerate() {
        if domain.kind(i) == NodeKind::Boundary {
            *v += boundary_shift;
        } else {
            *v = 0.0;
        }
    }
    let boundary = GridFunction::new(domain.clone(), data)?;
    let (h, stats) = solve_p_harmonic(&boundary, p, opts)?;

    let h_max = h.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut min_gap = f64::INFINITY;
    let mut min_gap_node = 0;
    let mut violations = 0;
    let mut compared = 0;
    let mut excision_dominates = true;
    for i in domain.interior_nodes() {
        if excised[i] {
            excision_dominates &= w[i] >= h_max;
            continue;
        }
        compared += 1;
        let gap = w[i] - h.values()[i];
        if gap < min_gap {
            min_gap = gap;
            min_gap_node = i;
        }
        if gap < -COMPARISON_TOL {
            violations += 1;
        }
    }
    let clamp = h_max + 1.0;
    for v in w.iter_mut() {
        if !v.is_finite() {
            *v = clamp;
        }
    }
    let excised_nodes = excised.iter().filter(|&&e| e).count();
    Ok(ComparisonRun {
        w: GridFunction::new(domain.clone(), w)?,
        h,
        excised,
        report: ComparisonReport {
            min_gap,
            min_gap_node,
            violations,
            compared_nodes: compared,
            excised_nodes,
            excision_dominates,
            tolerance: COMPARISON_TOL,
            solver: stats,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;
    use crate::superpose::Pole;

    #[test]
    fn domain_validation_and_indexing() {
        assert!(GridDomain::cube(2, -1.0, 1.0, 8).is_err());
        assert!(GridDomain::cube(1, -1.0, 1.0, 9).is_err());
        assert!(GridDomain::new(vec![0.0, 0.0], vec![1.0, 0.0], vec![9, 9]).is_err());
        let d = GridDomain::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![9, 17]).unwrap();
        assert_eq!(d.len(), 153);
        assert_eq!(d.spacing(0), 0.125);
        assert_eq!(d.coords(0), vec![0.0, -1.0]);
        assert_eq!(d.coords(d.len() - 1), vec![1.0, 1.0]);
        assert_eq!(d.linear_index(&d.multi_index(77)), 77);
        assert_eq!(d.boundary_nodes().count(), 2 * 9 + 2 * 15);
        assert_eq!(d.kind(10), NodeKind::Interior);
    }

    #[test]
    fn grid_function_rejects_non_finite() {
        let d = GridDomain::cube(2, 0.0, 1.0, 9).unwrap();
        assert!(GridFunction::new(d.clone(), vec![0.0; 80]).is_err());
        let mut v = vec![0.0; 81];
        v[3] = f64::NAN;
        assert!(GridFunction::new(d, v).is_err());
    }

    #[test]
    fn affine_data_are_reproduced() {
        let d = GridDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![17, 13]).unwrap();
        let affine = |x: &[f64]| 0.3 + 1.2 * x[0] - 0.7 * x[1];
        let exact = GridFunction::from_fn(d.clone(), affine).unwrap();
        for p in [2.0, 3.0, 4.0] {
            let (h, stats) = solve_p_harmonic(&exact, p, &SolverOptions::default()).unwrap();
            assert!(
                h.max_abs_diff(&exact) <= 1e-8,
                "p={p}: {}",
                h.max_abs_diff(&exact)
            );
            assert!(stats.residual <= SOLVER_TOL);
        }
    }

    #[test]
    fn one_dimensional_profile_is_reproduced_in_3d() {
        let d = GridDomain::cube(3, 0.0, 1.0, 9).unwrap();
        let exact = GridFunction::from_fn(d.clone(), |x| 2.0 * x[2] - 1.0).unwrap();
        let (h, _) = solve_p_harmonic(&exact, 3.0, &SolverOptions::default()).unwrap();
        assert!(h.max_abs_diff(&exact) <= 1e-8);
    }

    #[test]
    fn harmonic_polynomial_at_p2() {
        let d = GridDomain::cube(2, -1.0, 1.0, 65).unwrap();
        let exact = GridFunction::from_fn(d.clone(), |x| x[0] * x[0] - x[1] * x[1]).unwrap();
        let (h, _) = solve_p_harmonic(&exact, 2.0, &SolverOptions::default()).unwrap();
        assert!(h.max_abs_diff(&exact) <= 5e-3);
    }

    #[test]
    fn radial_p_harmonic_profile() {
        // p = 3, n = 2: w = -2 |x|^{1/2}, pole outside the box
        let d = GridDomain::new(vec![0.5, -0.5], vec![1.5, 0.5], vec![33, 33]).unwrap();
        let exact =
            GridFunction::from_fn(d.clone(), |x| -2.0 * libm::sqrt(libm::hypot(x[0], x[1])))
                .unwrap();
        let (h, _) = solve_p_harmonic(&exact, 3.0, &SolverOptions::default()).unwrap();
        assert!(h.max_abs_diff(&exact) <= 1e-2, "{}", h.max_abs_diff(&exact));
    }

    #[test]
    fn maximum_principle_and_monotone_energy() {
        let d = GridDomain::cube(2, -1.0, 1.0, 21).unwrap();
        let data = GridFunction::from_fn(d.clone(), |x| {
            libm::sin(3.0 * x[0]) * libm::cos(2.0 * x[1]) + x[0] * x[1]
        })
        .unwrap();
        let (lo, hi) = data.boundary_range();
        for p in [2.0, 2.5, 3.0, 4.0] {
            let (h, stats) = solve_p_harmonic(&data, p, &SolverOptions::default()).unwrap();
            for i in d.interior_nodes() {
                let v = h.values()[i];
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "p={p}");
            }
            for w in stats.energy_history.windows(2) {
                assert!(w[1] <= w[0] + 8.0 * f64::EPSILON * w[0].abs(), "p={p}");
            }
        }
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let d = GridDomain::cube(2, -1.0, 1.0, 17).unwrap();
        let data = GridFunction::from_fn(d, |x| x[0] * x[0] * x[1]).unwrap();
        let opts = SolverOptions {
            max_iter: 0,
            ..SolverOptions::default()
        };
        assert!(matches!(
            solve_p_harmonic(&data, 3.0, &opts),
            Err(Error::SolverFailure { .. })
        ));
    }

    #[test]
    fn single_fundamental_solution_is_reproduced() {
        let params = Params::new(3.0, 2).unwrap();
        let ps = PoleSet::new(
            params,
            vec![Pole {
                weight: 1.0,
                location: vec![-0.2, -0.3],
            }],
        )
        .unwrap();
        let d = GridDomain::new(vec![0.5, 0.0], vec![1.5, 1.0], vec![33, 33]).unwrap();
        let run =
            comparison_check(&ps, &ConcaveTerm::Zero, &d, 0.0, &SolverOptions::default()).unwrap();
        assert!(
            run.report.min_gap.abs() <= COMPARISON_TOL,
            "{:?}",
            run.report.min_gap
        );
        assert!(run.report.passed());
    }

    #[test]
    fn shifted_boundary_data_shift_the_gap() {
        let params = Params::new(3.0, 2).unwrap();
        let ps = PoleSet::new(
            params,
            vec![
                Pole {
                    weight: 1.0,
                    location: vec![0.3, 0.1],
                },
                Pole {
                    weight: 0.5,
                    location: vec![-0.4, -0.2],
                },
            ],
        )
        .unwrap();
        let k = ConcaveTerm::Quadratic(
            crate::concave::Quadratic::form(crate::linalg::Matrix::identity(2).scaled(-0.5))
                .unwrap(),
        );
        let d = GridDomain::cube(2, -1.0, 1.0, 33).unwrap();
        let base = comparison_check(&ps, &k, &d, 0.0, &SolverOptions::default()).unwrap();
        assert!(base.report.passed(), "{:?}", base.report.min_gap);
        let shifted = comparison_check(&ps, &k, &d, -1.0, &SolverOptions::default()).unwrap();
        assert!(shifted.report.min_gap >= 1.0 - COMPARISON_TOL);
    }

    #[test]
    fn singular_poles_are_excised() {
        let params = Params::new(2.5, 3).unwrap();
        let ps = PoleSet::new(
            params,
            vec![Pole {
                weight: 1.0,
                location: vec![0.0, 0.0, 0.0],
            }],
        )
        .unwrap();
        let d = GridDomain::cube(3, -1.0, 1.0, 17).unwrap();
        let run =
            comparison_check(&ps, &ConcaveTerm::Zero, &d, 0.0, &SolverOptions::default()).unwrap();
        assert!(run.report.excised_nodes > 0);
        assert!(run.w.values().iter().all(|v| v.is_finite()));
        assert!(run.report.passed(), "{:?}", run.report.min_gap);
    }

    #[test]
    fn pole_on_boundary_is_rejected() {
        let params = Params::new(3.0, 2).unwrap();
        let ps = PoleSet::new(
            params,
            vec![Pole {
                weight: 1.0,
                location: vec![1.0, 0.0],
            }],
        )
        .unwrap();
        let d = GridDomain::cube(2, -1.0, 1.0, 17).unwrap();
        assert!(matches!(
            comparison_check(&ps, &ConcaveTerm::Zero, &d, 0.0, &SolverOptions::default()),
            Err(Error::Configuration(_))
        ));
    }
}
