//! Seeded random configurations. Every randomized path goes through
//! [`ExperimentRng`], so a seed fixes the output bytes.

use plap_core::{Matrix, Params, Pole, PoleSet, Quadratic};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ExperimentRng = ChaCha8Rng;

/// Seed used when neither the command line nor the config provides one.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub fn rng(seed: u64) -> ExperimentRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` of `seed`, so parallel cases draw the same
/// numbers regardless of scheduling.
pub fn substream(seed: u64, index: u64) -> ExperimentRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn point_in_box(rng: &mut ExperimentRng, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&a, &b)| rng.gen_range(a..b))
        .collect()
}

pub fn gaussian_vector(rng: &mut ExperimentRng, n: usize) -> Vec<f64> {
    // Box–Muller keeps the dependency list short
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let v: f64 = rng.gen();
            (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        })
        .collect()
}

/// Uniform direction on the unit sphere.
pub fn unit_vector(rng: &mut ExperimentRng, n: usize) -> Vec<f64> {
    loop {
        let g = gaussian_vector(rng, n);
        let len = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-8 {
            return g.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Random orthogonal matrix from Gram–Schmidt on Gaussian columns.
pub fn orthogonal_matrix(rng: &mut ExperimentRng, n: usize) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = gaussian_vector(rng, n);
        let start = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // modified Gram-Schmidt, run twice so the columns stay orthogonal to rounding
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-3 * start {
            cols.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    let mut q = Matrix::zeros(n);
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            q[(i, j)] = v;
        }
    }
    q
}

/// `count` poles in `[lower, upper]` with weights in `[0.2, 2]`.
pub fn pole_set(
    rng: &mut ExperimentRng,
    params: Params,
    count: usize,
    lower: f64,
    upper: f64,
) -> PoleSet {
    let n = params.n();
    let poles = (0..count)
        .map(|_| Pole {
            weight: rng.gen_range(0.2..2.0),
            location: point_in_box(rng, &vec![lower; n], &vec![upper; n]),
        })
        .collect();
    PoleSet::new(params, poles).expect("sampled poles are valid")
}

/// A point at distance at least `min_dist` from every pole.
pub fn point_away_from_poles(
    rng: &mut ExperimentRng,
    ps: &PoleSet,
    lower: f64,
    upper: f64,
    min_dist: f64,
) -> Vec<f64> {
    let n = ps.params().n();
    loop {
        let x = point_in_box(rng, &vec![lower; n], &vec![upper; n]);
        if ps.nearest_pole_distance(&x) >= min_dist {
            return x;
        }
    }
}

/// Random symmetric matrix with entries of order `scale`.
pub fn symmetric_matrix(rng: &mut ExperimentRng, n: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = scale * rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Negative semidefinite `-B Bᵀ` with entries of `B` of order `sqrt(scale)`,
/// occasionally rank-deficient.
pub fn nsd_matrix(rng: &mut ExperimentRng, n: usize, scale: f64) -> Matrix {
    let rank = rng.gen_range(1..=n);
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..rank)
                .map(|_| scale.sqrt() * rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum::<f64>();
        }
    }
    m
}

/// Concave quadratic `½ xᵀ A x + b·x + c0` with `A` negative semidefinite.
pub fn concave_quadratic(rng: &mut ExperimentRng, n: usize, scale: f64) -> Quadratic {
    let a = nsd_matrix(rng, n, scale);
    let b = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c0 = rng.gen_range(-1.0..1.0);
    Quadratic::new(a, b, c0).expect("sampled quadratic is symmetric")
}

pub fn choose<T: Copy>(rng: &mut ExperimentRng, items: &[T]) -> T {
    items[rng.gen_range(0..items.len())]
}
