//! Values of `W` and `Δ_p W` checked against high-precision symbolic
//! evaluations (computed independently with sympy at 25 digits).
#![allow(clippy::excessive_precision)]

use plap_core::{
    delta_p_closed_form, delta_p_direct, delta_p_fd, potential_value, ConcaveTerm, Matrix, Params,
    Pole, PoleSet, Quadratic,
};

struct Case {
    name: &'static str,
    p: f64,
    n: usize,
    poles: &'static [(f64, &'static [f64])],
    x: &'static [f64],
    value: f64,
    delta_p: f64,
}

const CASES: &[Case] = &[
    Case {
        name: "pair p=3 n=2",
        p: 3.0,
        n: 2,
        poles: &[(1.0, &[1.0, 0.0]), (1.0, &[-1.0, 0.0])],
        x: &[0.0, 1.0],
        value: -4.756828460010884266870000,
        delta_p: -1.060660171779821286601267,
    },
    Case {
        name: "three poles p=3.5 n=3",
        p: 3.5,
        n: 3,
        poles: &[
            (0.7, &[0.2, -0.1, 0.4]),
            (1.3, &[-0.5, 0.3, 0.0]),
            (0.4, &[0.1, 0.8, -0.6]),
        ],
        x: &[0.9, -0.7, 0.35],
        value: -13.00428949728676568437895,
        delta_p: -0.4000874100852383559054751,
    },
    Case {
        name: "critical p=n=3",
        p: 3.0,
        n: 3,
        poles: &[(1.0, &[0.0, 0.0, 0.0]), (2.0, &[1.0, 1.0, 0.0])],
        x: &[0.3, -0.8, 0.5],
        value: -1.371180465637586612587348,
        delta_p: -0.7165716355812484012548025,
    },
    Case {
        name: "singular p=2.5 n=5",
        p: 2.5,
        n: 5,
        poles: &[
            (1.0, &[0.0, 0.0, 0.0, 0.0, 0.0]),
            (0.5, &[1.0, 0.0, 0.0, 0.0, 0.0]),
            (1.5, &[0.0, 0.5, 0.5, 0.0, 0.0]),
        ],
        x: &[0.4, 0.9, -0.3, 0.2, 0.1],
        value: 1.682142139373703165328981,
        delta_p: -1.383091313595468150248077,
    },
    Case {
        name: "sublinear p=1.5 n=2",
        p: 1.5,
        n: 2,
        poles: &[(1.0, &[0.0, 0.0]), (1.0, &[1.0, 0.0])],
        x: &[0.3, 0.7],
        value: 2.323216873149436315637410,
        delta_p: 0.8675274368053248391086866,
    },
];

fn pole_set(case: &Case) -> PoleSet {
    let poles = case
        .poles
        .iter()
        .map(|&(weight, loc)| Pole {
            weight,
            location: loc.to_vec(),
        })
        .collect();
    PoleSet::new(Params::new(case.p, case.n).unwrap(), poles).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn superpositions_match_symbolic_reference() {
    let k = ConcaveTerm::Zero;
    for case in CASES {
        let ps = pole_set(case);
        let v = potential_value(&ps, &k, case.x).unwrap();
        let direct = delta_p_direct(&ps, &k, case.x).unwrap();
        let closed = delta_p_closed_form(&ps, &k, case.x).unwrap();
        let fd = delta_p_fd(&ps, &k, case.x, 1e-4).unwrap();
        assert!(rel(v, case.value) < 1e-13, "{}: value {v}", case.name);
        assert!(
            rel(direct, case.delta_p) < 1e-10,
            "{}: direct {direct}",
            case.name
        );
        assert!(
            rel(closed, case.delta_p) < 1e-10,
            "{}: closed {closed}",
            case.name
        );
        assert!(rel(fd, case.delta_p) < 1e-5, "{}: fd {fd}", case.name);
    }
}

#[test]
fn quadratic_term_matches_symbolic_reference() {
    // K(x) = -(2 x0² + x0 x1 + x1²)/2 + 0.3 x0
    let a = Matrix::from_rows(&[[-2.0, -0.5], [-0.5, -1.0]]).unwrap();
    let k = ConcaveTerm::Quadratic(Quadratic::new(a, vec![0.3, 0.0], 0.0).unwrap());
    let params = Params::new(3.0, 2).unwrap();
    let ps = PoleSet::new(
        params,
        vec![
            Pole {
                weight: 1.0,
                location: vec![0.5, 0.5],
            },
            Pole {
                weight: 2.0,
                location: vec![-0.5, 0.2],
            },
        ],
    )
    .unwrap();
    let x = [0.1, -0.6];
    let v = potential_value(&ps, &k, &x).unwrap();
    let direct = delta_p_direct(&ps, &k, &x).unwrap();
    let fd = delta_p_fd(&ps, &k, &x, 1e-4).unwrap();
    assert!(rel(v, -6.293765228551344024864989) < 1e-13, "value {v}");
    assert!(
        rel(direct, -14.67338832247109020440837) < 1e-10,
        "direct {direct}"
    );
    assert!(rel(fd, -14.67338832247109020440837) < 1e-5, "fd {fd}");
    // the closed form covers K = 0 only
    assert!(delta_p_closed_form(&ps, &k, &x).is_err());
}
