mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use pvsplit::dynamics::{time_grid, FlowEngine, FlowKind, FlowParams, TauDistribution, TauSchedule, Trajectory};
use pvsplit::observables::*;
use pvsplit::{config_distance, Configuration, Error, GreenEvaluator, TorusPoint};
use rand::SeedableRng;

/// Calibrated constants of the logarithmic bound for N = 4.
const FIXTURE_C: f64 = 0.661_906_800_457_954_8;
const FIXTURE_C_HAT: f64 = 2.100_845_248_813_018_7;
const FIXTURE_OFFSET: f64 = -0.660_706_800_457_955_2;

fn cfg(raw: &[[f64; 2]], xi: &[f64]) -> Configuration {
    Configuration::from_raw(raw, xi).unwrap()
}

#[test]
fn hamiltonian_symmetries() {
    let g = GreenEvaluator::default();
    let xi = [1.0, -2.0, 0.5, 1.5];
    for seed in 0..10 {
        let x = random_config(4, &xi, seed);
        let h = hamiltonian(&g, &x).unwrap();
        let shifted = x.translate([0.37 * seed as f64, -1.91]);
        assert!((hamiltonian(&g, &shifted).unwrap() - h).abs() < 1e-10);
        let flipped = x.with_intensities(&[-1.0, 2.0, -0.5, -1.5]).unwrap();
        assert!((hamiltonian(&g, &flipped).unwrap() - h).abs() < 1e-14);
        let p = x.positions();
        let relabeled = Configuration::new(
            vec![p[2], p[0], p[3], p[1]],
            vec![xi[2], xi[0], xi[3], xi[1]],
        )
        .unwrap();
        assert!((hamiltonian(&g, &relabeled).unwrap() - h).abs() < 1e-13);
    }
}

#[test]
fn hamiltonian_of_pair_matches_oracle() {
    let g = GreenEvaluator::default();
    let x = cfg(&[[0.12, 0.8], [0.51, 0.33]], &[1.0, 1.0]);
    let d = pvsplit::min_displacement(x.position(0), x.position(1));
    let h = hamiltonian(&g, &x).unwrap();
    assert!((h - 2.0 * fourier_green_resummed(d, 200)).abs() < 1e-8);
    let y = cfg(&[[0.3, 0.3], [0.3, 0.3]], &[1.0, 1.0]);
    assert!(matches!(hamiltonian(&g, &y), Err(Error::SingularConfiguration { .. })));
}

#[test]
fn min_pair_distance_examples() {
    assert_eq!(min_pair_distance(&cfg(&[[0.2, 0.2], [0.2, 0.2]], &[1.0, 1.0])), 0.0);
    let d = min_pair_distance(&cfg(&[[0.0, 0.0], [0.5, 0.5]], &[1.0, 1.0]));
    assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
    let ring = cfg(&[[0.0, 0.3], [0.25, 0.3], [0.5, 0.3], [0.75, 0.3]], &[1.0; 4]);
    assert!((min_pair_distance(&ring) - 0.25).abs() < 1e-15);
}

#[test]
fn l_functional_constants_match_fixture() {
    let g = GreenEvaluator::default();
    let l = LFunctional::new(&g, 4);
    assert!((l.c - FIXTURE_C).abs() < 1e-9);
    assert!((l.c_hat - FIXTURE_C_HAT).abs() < 1e-12);
    assert!((l.c_hat - 12.0 * 1.1 / (2.0 * PI)).abs() < 1e-14);
    assert!((l.offset - FIXTURE_OFFSET).abs() < 1e-9);
    // the minimum of G sits at the half-period point
    let gmin = g.green_at([0.5, 0.5]);
    assert!((g.extrema().green_min - gmin).abs() < 1e-12);
}

#[test]
fn l_functional_examples() {
    let g = GreenEvaluator::default();
    let l = LFunctional::new(&g, 4);
    // all pairs at distance ≥ 0.4: grid bound by the largest G beyond 0.4
    let n = 400;
    let mut gmax_far = f64::NEG_INFINITY;
    for a in 0..n {
        for b in 0..n {
            let x = [a as f64 / n as f64 - 0.5, b as f64 / n as f64 - 0.5];
            if x[0].hypot(x[1]) >= 0.4 {
                gmax_far = gmax_far.max(g.green_at(x));
            }
        }
    }
    let x = cfg(&[[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]], &[1.0, -1.0, 1.0, 2.0]);
    assert!(min_pair_distance(&x) >= 0.4);
    let lx = l.eval(&g, &x).unwrap();
    assert!(lx >= 0.0 && lx <= l.c + 12.0 * gmax_far + 1e-12);

    // shrinking one pair: L grows like −2·log r / 2π (the pair counts twice)
    let vals: Vec<f64> = [1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&r| {
            let y = cfg(&[[0.2, 0.2], [0.2 + r, 0.2], [0.7, 0.3], [0.4, 0.8]], &[1.0; 4]);
            l.eval(&g, &y).unwrap() + 2.0 * r.ln() / (2.0 * PI)
        })
        .collect();
    assert!((vals[0] - vals[1]).abs() < 1e-3 && (vals[1] - vals[2]).abs() < 1e-4);

    let other = x.with_intensities(&[3.0, 3.0, -0.1, 1.0]).unwrap();
    assert_eq!(l.eval(&g, &other).unwrap(), lx);
    assert_eq!(l_functional(&g, &x).unwrap(), lx);
}

#[test]
fn logarithmic_bound_holds() {
    let g = GreenEvaluator::default();
    let l = LFunctional {
        n: 4,
        c: FIXTURE_C,
        c_hat: FIXTURE_C_HAT,
        offset: FIXTURE_OFFSET,
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let x = near_collision_config(&mut rng);
        assert!(l.bound_slack(&g, &x).unwrap() <= 0.0);
        assert!(l.eval(&g, &x).unwrap() >= 0.0);
    }
}

#[test]
fn sup_l_along_examples() {
    let g = Arc::new(GreenEvaluator::default());
    let x = random_config(3, &[1.0, 1.0, -1.0], 4);
    let l0 = l_functional(&g, &x).unwrap();
    let constant = Trajectory::new(
        vec![0.0, 0.5, 1.0],
        vec![x.clone(), x.clone(), x.clone()],
        FlowKind::Deterministic,
        None,
    )
    .unwrap();
    assert_eq!(sup_l_along(&g, &constant).unwrap(), l0);

    let e = FlowEngine::new(g.clone(), FlowParams::default()).unwrap();
    let dip = Configuration::from_raw(&[[0.25, 0.5], [0.75, 0.5]], &[1.0, -1.0]).unwrap();
    let t = e.deterministic_trajectory(&dip, &time_grid(11)).unwrap();
    let r = ObservableReport::from_trajectory("L", &t, |y| l_functional(&g, y)).unwrap();
    assert!(r.summary.sup_drift < 1e-9);
}

#[test]
fn sup_l_moment_bound_statistics() {
    let g = Arc::new(GreenEvaluator::default());
    let e = FlowEngine::new(g.clone(), FlowParams::default()).unwrap();
    let times = time_grid(101);
    let (mut sup_mean, mut l0_mean) = (0.0, 0.0);
    let count = 200;
    for k in 0..count {
        let x = random_config(3, &[1.0, 1.0, -1.0], 5000 + k);
        let mut s = TauSchedule::new(TauDistribution::Exponential, k);
        let traj = e.interpolated_trajectory(&x, &times, 32, &mut s).unwrap();
        sup_mean += sup_l_along(&g, &traj).unwrap() / count as f64;
        l0_mean += l_functional(&g, &x).unwrap() / count as f64;
    }
    assert!(sup_mean.is_finite());
    assert!(sup_mean <= 3.0 * l0_mean, "{sup_mean} vs {l0_mean}");
}

#[test]
fn report_serialization() {
    let r = ObservableReport::new("h", vec![0.0, 0.5, 1.0], vec![2.0, 2.5, 1.0]).unwrap();
    assert_eq!(r.summary.min, 1.0);
    assert_eq!(r.summary.max, 2.5);
    assert!((r.summary.mean - 5.5 / 3.0).abs() < 1e-15);
    assert_eq!(r.summary.sup_drift, 0.5);
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "t,value\n0.0,2.0\n0.5,2.5\n1.0,1.0\n");
    let j: serde_json::Value = serde_json::from_str(&r.summary_json().unwrap()).unwrap();
    assert_eq!(j["summary"]["max"], 2.5);
    assert!(ObservableReport::new("x", vec![0.0], vec![]).is_err());
}

#[test]
fn center_of_vorticity_and_neighbours() {
    let x = cfg(&[[0.1, 0.2], [0.3, 0.2], [0.9, 0.6]], &[1.0, 1.0, -1.0]);
    let nn = same_sign_nearest(&x);
    assert!((nn[0] - 0.2).abs() < 1e-15 && (nn[1] - 0.2).abs() < 1e-15);
    assert!(nn[2].is_infinite());
    let c = center_of_vorticity(&x.translate([0.25, 0.5]));
    let c0 = center_of_vorticity(&x);
    let d = |a: f64, b: f64| ((a - b).rem_euclid(1.0)).min((b - a).rem_euclid(1.0));
    assert!(d(c[0], c0[0] + 0.25) < 1e-12 && d(c[1], c0[1] + 0.5) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]
    #[test]
    fn min_pair_distance_is_one_lipschitz(
        a in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 4),
        b in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 4),
    ) {
        let mk = |v: &[(f64, f64)]| {
            Configuration::new(
                v.iter().map(|&(u, w)| TorusPoint::wrap([u, w]).unwrap()).collect(),
                vec![1.0; 4],
            ).unwrap()
        };
        let (x, y) = (mk(&a), mk(&b));
        let lhs = (min_pair_distance(&x) - min_pair_distance(&y)).abs();
        // each pair distance moves by at most |δx_i| + |δx_j| ≤ √2 d_T
        prop_assert!(lhs <= 2f64.sqrt() * config_distance(&x, &y).unwrap() + 1e-12);
    }
}
