//! Randomized and deterministic checks of the library's identities, grouped
//! into the suites run by `plap verify` and by the acceptance target.
//!
//! Relative errors use [`scaled_rel_err`]: errors are relative to the
//! reference value, except where the reference is negligible against the
//! natural scale of the quantity, in which case they are relative to that
//! scale.

use std::fmt;

use plap_core::comparison::{
    comparison_check, solve_p_harmonic, GridDomain, GridFunction, SolverOptions,
};
use plap_core::concave::{criterion_sum, is_negative_semidefinite};
use plap_core::evolution::{fd_time_derivative, FD_SPACE_STEP};
use plap_core::superpose::DEFAULT_FD_STEP;
use plap_core::{
    delta_p_closed_form, delta_p_direct, delta_p_fd, eigenvalue_criterion, eval, eval_concave,
    fundamental_profile, operator_term, sign_region, Affine, ConcaveTerm, EvolutionKernel, Params,
    Pole, PoleSet, Quadratic, SignClass,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sampling::{self, substream};

/// Values below `ZERO_FLOOR` times the natural scale count as zero.
pub const ZERO_FLOOR: f64 = 1e-8;

/// Error of `value` relative to `reference`, or to `scale` when
/// `|reference| < ZERO_FLOOR · scale`.
pub fn scaled_rel_err(value: f64, reference: f64, scale: f64) -> f64 {
    if reference.abs() < ZERO_FLOOR * scale {
        (value - reference).abs() / scale
    } else {
        (value - reference).abs() / reference.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `worst <= tolerance`.
    Upper,
    /// `worst >= tolerance`.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    pub worst: f64,
    pub bound: Bound,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: &str, samples: usize, worst: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            passed: worst <= tolerance,
            samples,
            worst,
            bound: Bound::Upper,
            tolerance,
            detail: String::new(),
        }
    }

    pub fn at_least(name: &str, samples: usize, worst: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            passed: worst >= tolerance,
            samples,
            worst,
            bound: Bound::Lower,
            tolerance,
            detail: String::new(),
        }
    }

    /// Counts failures; passes when there are none.
    pub fn no_failures(name: &str, samples: usize, failures: usize) -> Self {
        Self::at_most(name, samples, failures as f64, 0.0)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Marks the check failed, keeping the reason.
    fn failed(mut self, reason: impl fmt::Display) -> Self {
        self.passed = false;
        self.detail = reason.to_string();
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::Upper => "<=",
            Bound::Lower => ">=",
        };
        write!(
            f,
            "{} {}: worst {:.3e} {} {:.3e} over {} samples",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            op,
            self.tolerance,
            self.samples
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Superpose,
    Concave,
    Comparison,
    Evolution,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Superpose => "superpose",
            Suite::Concave => "concave",
            Suite::Comparison => "comparison",
            Suite::Evolution => "evolution",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let checks = match suite {
        Suite::Superpose => superpose_suite(seed),
        Suite::Concave => concave_suite(seed),
        Suite::Comparison => comparison_suite(seed),
        Suite::Evolution => evolution_suite(seed),
        Suite::All => {
            let mut all = superpose_suite(seed);
            all.extend(concave_suite(seed));
            all.extend(comparison_suite(seed));
            all.extend(evolution_suite(seed));
            all
        }
    };
    SuiteReport {
        suite: suite.name().into(),
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

pub fn superpose_suite(seed: u64) -> Vec<Check> {
    let mut checks = three_way_agreement(seed, 200);
    checks.push(sign_map_reproduction());
    checks.push(sign_soundness(seed, 300));
    checks.push(isometry_equivariance(seed, 200));
    checks.push(weight_scaling(seed, 200));
    checks.push(single_pole_nullity(seed, 200));
    checks
}

pub fn concave_suite(seed: u64) -> Vec<Check> {
    let mut checks = vec![
        concavity_implies_criterion(seed, 500),
        criterion_implies_sign(seed, 500),
        concave_addition(seed, 100),
    ];
    checks.extend(non_concave_counterexample(seed, 1000));
    checks.extend(mollification(seed));
    checks
}

pub fn comparison_suite(seed: u64) -> Vec<Check> {
    let mut checks = solver_validation();
    checks.push(maximum_principle(seed));
    checks.push(energy_monotonicity(seed));
    checks.extend(comparison_principle(seed, &[2.5, 3.0, 4.0], 4, 65));
    checks.push(grid_refinement(seed));
    checks
}

pub fn evolution_suite(seed: u64) -> Vec<Check> {
    let mut checks = vec![
        evolution_identity(seed, 30),
        sign_change_bracketing(),
        support_radius(),
        two_bump_gradient_symmetry(seed, 200),
    ];
    checks.extend(two_bump_defect_checks());
    checks
}

/// Natural size of `Δ_p V` at `x`: `|ξ|^{p-2}` times the summed second
/// derivative magnitudes of the individual poles.
fn operator_scale(ps: &PoleSet, x: &[f64]) -> f64 {
    let params = ps.params();
    let p = params.p();
    let n = params.n_f64();
    let curvature: f64 = ps
        .poles()
        .iter()
        .map(|pole| {
            let r = distance(x, &pole.location);
            let prof = fundamental_profile(params, r).expect("r > 0 at sampled points");
            pole.weight * prof.dv.abs() / r
        })
        .sum::<f64>()
        * (p + n);
    let g = eval(ps, &ConcaveTerm::Zero, x)
        .ok()
        .and_then(|e| e.gradient_norm().ok())
        .unwrap_or(0.0);
    let s = if p == 2.0 || g == 0.0 {
        curvature
    } else {
        g.powf(p - 2.0) * curvature
    };
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

struct Sample {
    ps: PoleSet,
    x: Vec<f64>,
}

/// Random pole set with `N <= 8` poles in `[-1, 1]^n` and a point in
/// `[-2, 2]^n` at distance `>= 0.3` from every pole.
fn random_sample(rng: &mut sampling::ExperimentRng, ps_list: &[f64], ns: &[usize]) -> Sample {
    let p = sampling::choose(rng, ps_list);
    let n = sampling::choose(rng, ns);
    let count = rng.gen_range(1..=8);
    let params = Params::new(p, n).expect("valid sampled parameters");
    let ps = sampling::pole_set(rng, params, count, -1.0, 1.0);
    let x = sampling::point_away_from_poles(rng, &ps, -2.0, 2.0, 0.3);
    Sample { ps, x }
}

/// Closed form vs. expanded identity (1e-10) and vs. finite differences (1e-4).
pub fn three_way_agreement(seed: u64, configs: usize) -> Vec<Check> {
    let results: Vec<Result<(f64, f64), String>> = (0..configs)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let s = random_sample(&mut rng, &[2.0, 2.5, 3.0, 4.0], &[2, 3, 5]);
            let k = ConcaveTerm::Zero;
            let closed = delta_p_closed_form(&s.ps, &k, &s.x).map_err(|e| e.to_string())?;
            let direct = delta_p_direct(&s.ps, &k, &s.x).map_err(|e| e.to_string())?;
            let fd = delta_p_fd(&s.ps, &k, &s.x, DEFAULT_FD_STEP).map_err(|e| e.to_string())?;
            let scale = operator_scale(&s.ps, &s.x);
            Ok((
                scaled_rel_err(closed, direct, scale),
                scaled_rel_err(fd, closed, scale),
            ))
        })
        .collect();
    let mut worst_direct = 0.0f64;
    let mut worst_fd = 0.0f64;
    let mut error = None;
    for r in results {
        match r {
            Ok((d, f)) => {
                worst_direct = worst_direct.max(d);
                worst_fd = worst_fd.max(f);
            }
            Err(e) => error = Some(e),
        }
    }
    let mut direct = Check::at_most(
        "three-way: closed form vs direct",
        configs,
        worst_direct,
        1e-10,
    );
    let mut fd = Check::at_most(
        "three-way: closed form vs finite differences",
        configs,
        worst_fd,
        1e-4,
    );
    if let Some(e) = error {
        direct = direct.failed(&e);
        fd = fd.failed(&e);
    }
    vec![direct, fd]
}

/// `p` on `[0.2, 4]` in steps of `0.05` (as `k / 20`), `n = 1..6`.
pub fn sign_map_grid() -> Vec<(f64, usize)> {
    (4..=80)
        .flat_map(|k| (1..=6).map(move |n| (k as f64 / 20.0, n)))
        .collect()
}

pub fn expected_sign_class(p: f64, n: usize) -> SignClass {
    let nf = n as f64;
    if p == 1.0 {
        return SignClass::Excluded;
    }
    if p == 2.0 || n == 1 || p + nf == 2.0 {
        return SignClass::IdenticallyZero;
    }
    if -(p - 2.0) * (p + nf - 2.0) / (p - 1.0) < 0.0 {
        SignClass::NonPositive
    } else {
        SignClass::NonNegative
    }
}

pub fn sign_map_reproduction() -> Check {
    let grid = sign_map_grid();
    let mismatches: Vec<String> = grid
        .iter()
        .filter(|&&(p, n)| sign_region(p, n) != expected_sign_class(p, n))
        .map(|(p, n)| format!("({p}, {n})"))
        .collect();
    let check = Check::no_failures("sign map over (p, n) grid", grid.len(), mismatches.len());
    if mismatches.is_empty() {
        check
    } else {
        check.with_detail(mismatches.join(" "))
    }
}

/// Closed-form values lie in the half-line of their sign class.
pub fn sign_soundness(seed: u64, configs: usize) -> Check {
    let ps_list = [0.3, 0.6, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0];
    let failures: usize = (0..configs)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed ^ 0x5167, i as u64);
            let s = random_sample(&mut rng, &ps_list, &[1, 2, 3, 4, 5]);
            let params = s.ps.params();
            let class = sign_region(params.p(), params.n());
            match delta_p_closed_form(&s.ps, &ConcaveTerm::Zero, &s.x) {
                Ok(v) => usize::from(!class.admits(v, 1e-12 * operator_scale(&s.ps, &s.x))),
                Err(_) => 1,
            }
        })
        .sum();
    Check::no_failures("sign soundness of closed form", configs, failures)
}

pub fn isometry_equivariance(seed: u64, configs: usize) -> Check {
    let worst = (0..configs)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed ^ 0x150, i as u64);
            let s = random_sample(&mut rng, &[1.5, 2.0, 2.5, 3.0, 4.0], &[2, 3, 5]);
            let params = *s.ps.params();
            let n = params.n();
            let q = sampling::orthogonal_matrix(&mut rng, n);
            let shift = sampling::point_in_box(&mut rng, &vec![-3.0; n], &vec![3.0; n]);
            let map = |y: &[f64]| -> Vec<f64> {
                q.mul_vec(y)
                    .iter()
                    .zip(&shift)
                    .map(|(a, b)| a + b)
                    .collect()
            };
            let moved: Vec<Pole> =
                s.ps.poles()
                    .iter()
                    .map(|p| Pole {
                        weight: p.weight,
                        location: map(&p.location),
                    })
                    .collect();
            let moved = PoleSet::new(params, moved).expect("isometry keeps poles valid");
            let a = delta_p_closed_form(&s.ps, &ConcaveTerm::Zero, &s.x);
            let b = delta_p_closed_form(&moved, &ConcaveTerm::Zero, &map(&s.x));
            match (a, b) {
                (Ok(a), Ok(b)) => scaled_rel_err(a, b, operator_scale(&s.ps, &s.x)),
                _ => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    Check::at_most(
        "isometry equivariance of closed form",
        configs,
        worst,
        1e-12,
    )
}

pub fn weight_scaling(seed: u64, configs: usize) -> Check {
    let worst = (0..configs)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed ^ 0x5ca1e, i as u64);
            let s = random_sample(&mut rng, &[2.5, 3.0, 4.0, 1.5], &[2, 3, 5]);
            let factor = rng.gen_range(0.1..10.0);
            let p = s.ps.params().p();
            let scaled = s.ps.scaled(factor).expect("positive factor");
            let a = delta_p_closed_form(&s.ps, &ConcaveTerm::Zero, &s.x);
            let b = delta_p_closed_form(&scaled, &ConcaveTerm::Zero, &s.x);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let expected = factor.powf(p - 1.0) * a;
                    scaled_rel_err(
                        b,
                        expected,
                        factor.powf(p - 1.0) * operator_scale(&s.ps, &s.x),
                    )
                }
                _ => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    Check::at_most("weight scaling s^(p-1)", configs, worst, 1e-11)
}

pub fn single_pole_nullity(seed: u64, configs: usize) -> Check {
    let mut rng = sampling::rng(seed ^ 0x1);
    let mut worst = 0.0f64;
    for _ in 0..configs {
        let p = sampling::choose(&mut rng, &[0.5, 1.5, 2.5, 3.0, 4.0]);
        let n = rng.gen_range(1..=5);
        let params = Params::new(p, n).expect("valid parameters");
        let ps = sampling::pole_set(&mut rng, params, 1, -1.0, 1.0);
        let x = sampling::point_away_from_poles(&mut rng, &ps, -2.0, 2.0, 0.1);
        let v = delta_p_closed_form(&ps, &ConcaveTerm::Zero, &x).map_or(f64::INFINITY, f64::abs);
        worst = worst.max(v);
    }
    Check::at_most("single pole gives exactly zero", configs, worst, 0.0)
}

pub fn concavity_implies_criterion(seed: u64, cases: usize) -> Check {
    let mut rng = sampling::rng(seed ^ 0xc0c);
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=6);
        let p = rng.gen_range(2.0..8.0);
        let scale = rng.gen_range(0.01..10.0);
        let h = sampling::nsd_matrix(&mut rng, n, scale);
        if !eigenvalue_criterion(&h, p).unwrap_or(false) {
            failures += 1;
        }
    }
    Check::no_failures(
        "negative semidefinite passes eigenvalue criterion",
        cases,
        failures,
    )
}

pub fn criterion_implies_sign(seed: u64, cases: usize) -> Check {
    let mut rng = sampling::rng(seed ^ 0xc71);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let n = rng.gen_range(1..=6);
        let p = rng.gen_range(2.01..8.0);
        let h = sampling::symmetric_matrix(&mut rng, n, 1.0);
        let sum = criterion_sum(&h, p).expect("symmetric sample");
        // shifting by -sI lowers the criterion sum by s(p + n - 2)
        let shift = sum.max(0.0) / (p + n as f64 - 2.0) + 1e-9;
        let mut h = h;
        h.add_assign_scaled(&plap_core::Matrix::identity(n), -shift);
        if !eigenvalue_criterion(&h, p).unwrap_or(false) {
            worst = f64::INFINITY;
            continue;
        }
        let k = ConcaveTerm::Quadratic(Quadratic::form(h).expect("symmetric"));
        let x = vec![0.0; n];
        for _ in 0..10 {
            let xi = sampling::gaussian_vector(&mut rng, n);
            let v = operator_term(&k, p, &xi, &x).unwrap_or(f64::INFINITY);
            worst = worst.max(v);
        }
    }
    Check::at_most(
        "eigenvalue criterion implies operator term <= 0",
        cases * 10,
        worst,
        1e-12,
    )
}

/// Adding a concave quadratic keeps `Δ_p(V + K) <= 0` for `p > 2`.
pub fn concave_addition(seed: u64, pairs: usize) -> Check {
    let worst = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed ^ 0x1e2, i as u64);
            let s = random_sample(&mut rng, &[2.5, 3.0, 4.0, 5.0], &[2, 3, 5]);
            let n = s.ps.params().n();
            let scale = rng.gen_range(0.1..5.0);
            let k = ConcaveTerm::Quadratic(sampling::concave_quadratic(&mut rng, n, scale));
            let mut worst = delta_p_direct(&s.ps, &k, &s.x).unwrap_or(f64::INFINITY);
            for _ in 0..9 {
                let x = sampling::point_away_from_poles(&mut rng, &s.ps, -2.0, 2.0, 0.05);
                worst = worst.max(delta_p_direct(&s.ps, &k, &x).unwrap_or(f64::INFINITY));
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Check::at_most(
        "concave addition keeps delta_p <= 0",
        pairs * 10,
        worst,
        1e-10,
    )
}

/// `A = diag(1 - m, 1, ..., 1)`, `m = p + n - 2`: not concave, criterion sum
/// zero, operator term non-positive.
pub fn non_concave_counterexample(seed: u64, directions: usize) -> Vec<Check> {
    let cases = [(3.0, 2usize), (3.0, 3), (4.0, 5)];
    let mut rng = sampling::rng(seed ^ 0xa11);
    let mut concave_flags = 0;
    let mut criterion_failures = 0;
    let mut worst_residual = 0.0f64;
    let mut worst_term = f64::NEG_INFINITY;
    for &(p, n) in &cases {
        let q = Quadratic::non_concave_example(p, n).expect("valid example");
        let a = q.matrix().clone();
        if is_negative_semidefinite(&a) || q.is_concave() {
            concave_flags += 1;
        }
        if !eigenvalue_criterion(&a, p).unwrap_or(false) {
            criterion_failures += 1;
        }
        worst_residual = worst_residual.max(criterion_sum(&a, p).map_or(f64::INFINITY, f64::abs));
        let k = ConcaveTerm::Quadratic(q);
        for _ in 0..directions {
            let xi = sampling::unit_vector(&mut rng, n);
            let x = sampling::point_in_box(&mut rng, &vec![-2.0; n], &vec![2.0; n]);
            worst_term = worst_term.max(operator_term(&k, p, &xi, &x).unwrap_or(f64::INFINITY));
        }
    }
    vec![
        Check::no_failures(
            "counterexample matrix is not negative semidefinite",
            cases.len(),
            concave_flags,
        ),
        Check::no_failures(
            "counterexample passes eigenvalue criterion",
            cases.len(),
            criterion_failures,
        ),
        Check::at_most(
            "counterexample criterion sum residual",
            cases.len(),
            worst_residual,
            1e-12,
        ),
        Check::at_most(
            "counterexample operator term",
            cases.len() * directions,
            worst_term,
            1e-12,
        ),
    ]
}

/// Mollified min-of-affine: sup distance shrinks as `δ` halves and the
/// quadrature Hessians stay negative semidefinite up to quadrature error.
pub fn mollification(seed: u64) -> Vec<Check> {
    let mut rng = sampling::rng(seed ^ 0x3011);
    let pieces: Vec<Affine> = (0..4)
        .map(|_| Affine {
            slope: sampling::point_in_box(&mut rng, &[-2.0, -2.0], &[2.0, 2.0]),
            offset: rng.gen_range(-0.5..0.5),
        })
        .collect();
    let base = ConcaveTerm::affine_min(pieces).expect("non-empty pieces");
    let slope_scale = 4.0 * 2f64.sqrt();
    let points: Vec<Vec<f64>> = (0..200)
        .map(|_| sampling::point_in_box(&mut rng, &[-1.0, -1.0], &[1.0, 1.0]))
        .collect();
    let deltas = [0.4, 0.2, 0.1, 0.05];
    let mut sup = Vec::new();
    let mut worst_eig = f64::NEG_INFINITY;
    for &delta in &deltas {
        let k = ConcaveTerm::mollified(base.clone(), delta).expect("positive delta");
        let mut d = 0.0f64;
        for x in &points {
            d = d.max((k.value(x).unwrap_or(f64::INFINITY) - base.value(x).unwrap_or(0.0)).abs());
            if let Ok(e) = eval_concave(&k, x) {
                let top = e
                    .hessian
                    .symmetric_eigenvalues()
                    .last()
                    .copied()
                    .unwrap_or(0.0);
                // Hessians of K_δ are of size |Δslope| / δ
                worst_eig = worst_eig.max(top * delta / slope_scale);
            } else {
                worst_eig = f64::INFINITY;
            }
        }
        sup.push(d);
    }
    let ratio = sup.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    vec![
        Check::at_most(
            "mollifier sup distance ratio per halving",
            deltas.len() - 1,
            ratio,
            1.0,
        )
        .with_detail(format!("sup distances {sup:?}")),
        Check::at_most(
            "mollified Hessian top eigenvalue (relative)",
            points.len() * deltas.len(),
            worst_eig,
            1e-2,
        ),
    ]
}

pub fn solver_validation() -> Vec<Check> {
    let opts = SolverOptions::default();
    let domain = GridDomain::cube(2, -1.0, 1.0, 65).expect("valid grid");
    let exact =
        GridFunction::from_fn(domain.clone(), |x| x[0] * x[0] - x[1] * x[1]).expect("finite data");
    let harmonic = match solve_p_harmonic(&exact, 2.0, &opts) {
        Ok((h, _)) => Check::at_most(
            "p = 2 harmonic polynomial at spacing 1/32",
            1,
            h.max_abs_diff(&exact),
            5e-3,
        ),
        Err(e) => Check::at_most(
            "p = 2 harmonic polynomial at spacing 1/32",
            1,
            f64::INFINITY,
            5e-3,
        )
        .failed(e),
    };
    let affine_domain =
        GridDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![33, 25]).expect("valid grid");
    let affine = GridFunction::from_fn(affine_domain, |x| 0.25 - 1.5 * x[0] + 0.75 * x[1])
        .expect("finite data");
    let mut worst = 0.0f64;
    let mut error = None;
    for p in [2.0, 3.0, 4.0] {
        match solve_p_harmonic(&affine, p, &opts) {
            Ok((h, _)) => worst = worst.max(h.max_abs_diff(&affine)),
            Err(e) => error = Some(e),
        }
    }
    let mut affine_check = Check::at_most("affine data reproduced for p = 2, 3, 4", 3, worst, 1e-8);
    if let Some(e) = error {
        affine_check = affine_check.failed(e);
    }
    vec![harmonic, affine_check]
}

fn oscillating_boundary(domain: &GridDomain) -> GridFunction {
    GridFunction::from_fn(domain.clone(), |x| {
        (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + x[0] * x[1]
    })
    .expect("finite data")
}

pub fn maximum_principle(seed: u64) -> Check {
    let domain = GridDomain::cube(2, -1.0, 1.0, 33).expect("valid grid");
    let mut rng = sampling::rng(seed ^ 0x3a);
    let mut cases = vec![oscillating_boundary(&domain)];
    let noise: Vec<f64> = (0..domain.len())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    cases.push(GridFunction::new(domain.clone(), noise).expect("finite data"));
    let mut worst = 0.0f64;
    let mut runs = 0;
    for data in &cases {
        let (lo, hi) = data.boundary_range();
        for p in [2.0, 2.5, 3.0, 4.0] {
            runs += 1;
            match solve_p_harmonic(data, p, &SolverOptions::default()) {
                Ok((h, _)) => {
                    for i in domain.interior_nodes() {
                        let v = h.values()[i];
                        worst = worst.max(lo - v).max(v - hi);
                    }
                }
                Err(_) => worst = f64::INFINITY,
            }
        }
    }
    Check::at_most(
        "discrete maximum principle (excess over boundary range)",
        runs,
        worst.max(0.0),
        1e-12,
    )
}

pub fn energy_monotonicity(seed: u64) -> Check {
    let domain = GridDomain::cube(2, -1.0, 1.0, 33).expect("valid grid");
    let mut rng = sampling::rng(seed ^ 0xe6);
    let noise: Vec<f64> = (0..domain.len())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let data = GridFunction::new(domain, noise).expect("finite data");
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for p in [2.5, 3.0, 4.0, 6.0] {
        match solve_p_harmonic(&data, p, &SolverOptions::default()) {
            Ok((_, stats)) => {
                for w in stats.energy_history.windows(2) {
                    steps += 1;
                    // rounding slack of a few ulps of the energy
                    worst = worst.max((w[1] - w[0]) / (8.0 * f64::EPSILON * w[0].abs()));
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    Check::at_most(
        "energy non-increasing per accepted step (in rounding units)",
        steps,
        worst.max(0.0),
        1.0,
    )
}

/// Random pole set and concave quadratic in two dimensions for the
/// comparison harness, with poles kept off the boundary nodes.
fn comparison_configuration(seed: u64, index: u64, p: f64) -> (PoleSet, ConcaveTerm) {
    let mut rng = substream(seed ^ 0xc0a7, index);
    let params = Params::new(p, 2).expect("valid parameters");
    let count = rng.gen_range(1..=4);
    let ps = sampling::pole_set(&mut rng, params, count, -0.8, 0.8);
    let scale = rng.gen_range(0.1..2.0);
    let k = ConcaveTerm::Quadratic(sampling::concave_quadratic(&mut rng, 2, scale));
    (ps, k)
}

/// `min (W - h) >= -tol` for random configurations and, with boundary data
/// shifted by -1, `min (W - h) >= 1 - tol`.
pub fn comparison_principle(seed: u64, ps_list: &[f64], per_p: usize, nodes: usize) -> Vec<Check> {
    let domain = GridDomain::cube(2, -1.0, 1.0, nodes).expect("valid grid");
    let tol = plap_core::comparison::COMPARISON_TOL;
    let jobs: Vec<(f64, u64, f64)> = ps_list
        .iter()
        .enumerate()
        .flat_map(|(j, &p)| {
            (0..per_p).flat_map(move |i| {
                [
                    (p, (j * per_p + i) as u64, 0.0),
                    (p, (j * per_p + i) as u64, -1.0),
                ]
            })
        })
        .collect();
    let results: Vec<(f64, Result<f64, String>)> = jobs
        .par_iter()
        .map(|&(p, index, shift)| {
            let (ps, k) = comparison_configuration(seed, index, p);
            let run = comparison_check(&ps, &k, &domain, shift, &SolverOptions::default());
            (
                shift,
                run.map(|r| r.report.min_gap).map_err(|e| e.to_string()),
            )
        })
        .collect();
    let mut plain = f64::INFINITY;
    let mut shifted = f64::INFINITY;
    let mut error = None;
    for (shift, r) in results {
        match r {
            Ok(gap) if shift == 0.0 => plain = plain.min(gap),
            Ok(gap) => shifted = shifted.min(gap),
            Err(e) => error = Some(e),
        }
    }
    let runs = ps_list.len() * per_p;
    let label = ps_list
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    let mut a = Check::at_least(
        &format!("comparison min(W - h), p in {{{label}}}"),
        runs,
        plain,
        -tol,
    )
    .with_detail(format!("{nodes}x{nodes} grid"));
    let mut b = Check::at_least(
        &format!("comparison shifted by -1, p in {{{label}}}"),
        runs,
        shifted,
        1.0 - tol,
    );
    if let Some(e) = error {
        a = a.failed(&e);
        b = b.failed(&e);
    }
    vec![a, b]
}

/// Negative gaps must shrink (or vanish) as the spacing halves.
pub fn grid_refinement(seed: u64) -> Check {
    let (ps, k) = comparison_configuration(seed, 1 << 20, 3.0);
    let mut violations = Vec::new();
    for nodes in [17, 33, 65] {
        let domain = GridDomain::cube(2, -1.0, 1.0, nodes).expect("valid grid");
        match comparison_check(&ps, &k, &domain, 0.0, &SolverOptions::default()) {
            Ok(run) => violations.push((-run.report.min_gap).max(0.0)),
            Err(e) => {
                return Check::at_most("negative gap under refinement", 3, f64::INFINITY, 0.0)
                    .failed(e);
            }
        }
    }
    let growth = violations
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = plap_core::comparison::COMPARISON_TOL;
    let check = Check::at_most(
        "negative gap growth under refinement",
        3,
        growth.max(0.0),
        1e-12,
    )
    .with_detail(format!("negative parts {violations:?}"));
    if violations.last().copied().unwrap_or(0.0) > tol {
        return check.failed("persistent violation on the finest grid");
    }
    check
}

/// Finite-difference `Δ_p(aB) - (aB)_t` against `(a^{p-1} - a) B_t`.
pub fn evolution_identity(seed: u64, per_case: usize) -> Check {
    let params = Params::new(3.0, 2).expect("valid parameters");
    let kernel = EvolutionKernel::barenblatt(&params, 1.0).expect("p > 2");
    let mut rng = sampling::rng(seed ^ 0xb4);
    let mut worst = 0.0f64;
    let mut samples = 0;
    for a in [0.5, 2.0] {
        for t in [0.5, 1.0, 2.0] {
            let edge = kernel.support_radius(t).expect("barenblatt");
            let b_scale = kernel.profile(0.0, t) / t;
            for _ in 0..per_case / 3 + 1 {
                let r = edge * rng.gen_range(0.05..0.95);
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let x = [r * angle.cos(), r * angle.sin()];
                let closed = kernel.barenblatt_defect(a, &x, t).map(|d| d.value);
                let fd = kernel.barenblatt_defect_fd(a, &x, t);
                let scale = (a.powf(2.0) - a).abs() * b_scale;
                worst = worst.max(match (closed, fd) {
                    (Ok(c), Ok(f)) => scaled_rel_err(f, c, scale),
                    _ => f64::INFINITY,
                });
                samples += 1;
            }
        }
    }
    Check::at_most(
        "Barenblatt defect identity (FD vs closed form)",
        samples,
        worst,
        1e-3,
    )
}

/// Radius where the finite-difference `B_t` changes sign, by bisection.
pub fn bisect_sign_change(kernel: &EvolutionKernel, t: f64) -> Option<f64> {
    let edge = kernel.support_radius(t).ok()?;
    let bt = |r: f64| fd_time_derivative(|s| kernel.profile(r, s), t);
    let (mut lo, mut hi) = (0.0, edge * (1.0 - 1e-3));
    if !(bt(lo) < 0.0 && bt(hi) > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bt(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * edge {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn sign_change_bracketing() -> Check {
    let cases = [(3.0, 2usize, 1.0, 1.0), (4.0, 3, 2.0, 0.5)];
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for &(p, n, c, t) in &cases {
        let params = Params::new(p, n).expect("valid parameters");
        let kernel = EvolutionKernel::barenblatt(&params, c).expect("p > 2");
        let formula = kernel.sign_change_radius(t).expect("barenblatt");
        match bisect_sign_change(&kernel, t) {
            Some(r) => {
                worst = worst.max((r - formula).abs() / formula);
                detail.push(format!(
                    "(p={p}, n={n}, C={c}, t={t}): bisection {r:.6} vs {formula:.6}"
                ));
            }
            None => worst = f64::INFINITY,
        }
    }
    Check::at_most(
        "sign-change radius by bisection on B_t",
        cases.len(),
        worst,
        1e-2,
    )
    .with_detail(detail.join("; "))
}

/// Outermost positive sample of `B(·, t)` against the analytic support radius.
pub fn support_radius() -> Check {
    let mut worst = 0.0f64;
    let cases = [
        (3.0, 2usize, 1.0, 1.0),
        (4.0, 3, 2.0, 0.5),
        (2.5, 1, 0.7, 3.0),
    ];
    for &(p, n, c, t) in &cases {
        let params = Params::new(p, n).expect("valid parameters");
        let kernel = EvolutionKernel::barenblatt(&params, c).expect("p > 2");
        let edge = kernel.support_radius(t).expect("barenblatt");
        let step = FD_SPACE_STEP * (1.0 + edge);
        let mut r = 0.0;
        while kernel.profile(r + step, t) > 0.0 {
            r += step;
        }
        // the first zero lies in (r, r + step]
        worst = worst.max(((r + step) - edge).abs() / step);
    }
    Check::at_most(
        "support radius vs first zero (in FD steps)",
        cases.len(),
        worst,
        1.0,
    )
}

pub fn two_bump_gradient_symmetry(seed: u64, cases: usize) -> Check {
    let mut rng = sampling::rng(seed ^ 0x2b);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.gen_range(1..=5);
        let p = rng.gen_range(2.1..6.0);
        let params = Params::new(p, n).expect("valid parameters");
        let kernel = EvolutionKernel::homogeneous(&params, rng.gen_range(0.5..2.0)).expect("p > 2");
        let y = sampling::point_in_box(&mut rng, &vec![-2.0; n], &vec![2.0; n]);
        let t = rng.gen_range(0.05..5.0);
        let g = kernel
            .two_bump_gradient(&vec![0.0; n], &y, t)
            .map_or(f64::INFINITY, |g| g.iter().fold(0.0, |m, v| m.max(v.abs())));
        worst = worst.max(g);
    }
    Check::at_most(
        "two-bump gradient vanishes at the origin",
        cases,
        worst,
        1e-14,
    )
}

/// Sign change in `t` of the two-bump defect at fixed `y`, and agreement of
/// the finite-difference operator at `x = 0` with the closed form.
pub fn two_bump_defect_checks() -> Vec<Check> {
    let params = Params::new(3.0, 2).expect("valid parameters");
    let kernel = EvolutionKernel::homogeneous(&params, 1.0).expect("p > 2");
    let y = [1.0, 0.0];
    let times: Vec<f64> = (0..=60)
        .map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / 60.0))
        .collect();
    let values: Vec<f64> = times
        .iter()
        .map(|&t| kernel.two_bump_defect(&y, t).unwrap_or(f64::NAN))
        .collect();
    let positive = values.iter().any(|&v| v > 0.0);
    let negative = values.iter().any(|&v| v < 0.0);
    let crossing = values
        .windows(2)
        .zip(times.windows(2))
        .find(|(v, _)| v[0] > 0.0 && v[1] < 0.0)
        .map(|(_, t)| format!("sign change for t in ({:.4}, {:.4})", t[0], t[1]))
        .unwrap_or_else(|| "no sign change".into());
    let sign_change = Check::no_failures(
        "two-bump defect changes sign in t",
        times.len(),
        usize::from(!(positive && negative)),
    )
    .with_detail(crossing);

    let mut worst = 0.0f64;
    let probe = [0.02, 0.05, 0.2, 1.0, 5.0];
    for &t in &probe {
        let closed = kernel.two_bump_defect(&y, t);
        let fd = kernel.two_bump_operator_fd(&[0.0, 0.0], &y, t);
        let w = kernel.kernel_value(&y, t).unwrap_or(0.0);
        let scale = 2.0 * (kernel.p() - 1.0) * (2.0 * w).powf(kernel.p() - 2.0) * w / t;
        worst = worst.max(match (closed, fd) {
            (Ok(c), Ok(f)) => scaled_rel_err(f, c, scale),
            _ => f64::INFINITY,
        });
    }
    vec![
        sign_change,
        Check::at_most(
            "two-bump FD operator at origin vs closed form",
            probe.len(),
            worst,
            1e-3,
        ),
    ]
}
