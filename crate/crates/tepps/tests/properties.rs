//! Property tests for the structural invariants: lossless study round
//! trips, multiplicative modifier composition, clustering conservation
//! laws, annuity monotonicity and LP certificates on random instances.

mod common;

use proptest::prelude::*;
use tepps::costs::annuity_factor;
use tepps::ingest::{apply_modifiers, parse_matpower, read_study, write_study};
use tepps::scenarios::{kmeans_reduce, HourlySeries};
use tepps::solver::{simplex_solve, LpProblem, LpStatus, SparseMatrix};

const TWO_BUS: &str = r#"
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0    0 0 0 1 1 0 138 1 1.05 0.95;
    2  1  80.0 0 0 0 1 1 0 138 1 1.05 0.95;
];
mpc.gen = [
    1  0 0 0 0 1 100 1 150 10;
];
mpc.branch = [
    1 2 0.01 0.1 0 120 0 0 0 0 1 -360 360;
];
mpc.gencost = [
    2 0 0 3 0.0 25.0 0;
];
"#;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Studies survive the native format field for field, including odd
    /// but valid numeric values.
    #[test]
    fn study_round_trip(
        peak in 0.0..5000.0f64,
        cost in 0.0..500.0f64,
        rating in 0.1..2000.0f64,
        hours in 1.0..8760.0f64,
        cf in 0.0..1.0f64,
        pst_budget in prop_oneof![Just(f64::INFINITY), 0.0..100.0],
    ) {
        let mut study = common::fixture_radial_reinforcement();
        study.network.loads[0].peak_demand = peak;
        study.network.generators[0].marginal_cost = cost;
        study.network.branches[1].rating = rating;
        study.scenarios[0].hours = hours;
        study.scenarios[0].wind_cf[0] = cf;
        study.pst_budget = pst_budget;
        let mut buf = Vec::new();
        write_study(&study, &mut buf).unwrap();
        let back = read_study(buf.as_slice()).unwrap();
        prop_assert_eq!(back, study);
    }

    /// Applying two modifier triples equals applying their product.
    #[test]
    fn modifiers_compose(
        a in 0.2..3.0f64, b in 0.2..3.0f64, c in 0.2..3.0f64,
        d in 0.2..3.0f64, e in 0.2..3.0f64, f in 0.2..3.0f64,
    ) {
        let case = parse_matpower(TWO_BUS).unwrap();
        let sequential = apply_modifiers(&apply_modifiers(&case, a, b, c), d, e, f);
        let combined = apply_modifiers(&case, a * d, b * e, c * f);
        for (x, y) in sequential.buses.iter().zip(&combined.buses) {
            prop_assert!((x.load - y.load).abs() <= 1e-9 * (1.0 + y.load.abs()));
        }
        for (x, y) in sequential.generators.iter().zip(&combined.generators) {
            prop_assert!((x.p_max - y.p_max).abs() <= 1e-9 * (1.0 + y.p_max.abs()));
        }
        for (x, y) in sequential.branches.iter().zip(&combined.branches) {
            prop_assert!((x.rating - y.rating).abs() <= 1e-9 * (1.0 + y.rating.abs()));
        }
    }

    /// Cluster hours sum to the series length, centroids stay inside the
    /// data's bounding box, and a repeated run is bitwise identical.
    #[test]
    fn kmeans_conservation(
        seed in 0u64..500,
        k in 1usize..8,
        n in 20usize..120,
    ) {
        let load = HourlySeries {
            values: (0..n).map(|i| 0.3 + 0.7 * ((i as f64 * 0.13 + seed as f64).sin().abs())).collect(),
        };
        let wind = HourlySeries {
            values: (0..n).map(|i| ((i as f64 * 0.29).cos().abs())).collect(),
        };
        let scenarios = kmeans_reduce(&load, &wind, k, seed).unwrap();
        prop_assert_eq!(scenarios.len(), k);
        let hours: f64 = scenarios.iter().map(|s| s.hours).sum();
        prop_assert_eq!(hours, n as f64);

        let (lmin, lmax) = load.values.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let (wmin, wmax) = wind.values.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        for s in &scenarios {
            prop_assert!(s.load_level >= lmin - 1e-12 && s.load_level <= lmax + 1e-12);
            prop_assert!(s.wind_cf[0] >= wmin - 1e-12 && s.wind_cf[0] <= wmax + 1e-12);
            prop_assert!(s.hours >= 1.0);
        }

        let again = kmeans_reduce(&load, &wind, k, seed).unwrap();
        prop_assert_eq!(again, scenarios);
    }

    /// Capital-recovery factor: increasing in the rate, decreasing in the
    /// lifetime, and never amortizes below the principal.
    #[test]
    fn annuity_shape(d in 0.001..0.5f64, lt in 1.0..60.0f64) {
        let f = annuity_factor(d, lt);
        prop_assert!(f * lt >= 1.0);
        prop_assert!(annuity_factor(d + 0.01, lt) > f);
        if lt >= 2.0 {
            prop_assert!(annuity_factor(d, lt - 1.0) > f);
        }
    }

    /// Feasible-by-construction random LPs come back optimal with clean
    /// certificates.
    #[test]
    fn lp_certificates(seed in 0u64..200) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(5..20usize);
        let m = rng.gen_range(2..12usize);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = SparseMatrix::new(n);
        let mut b = Vec::new();
        for _ in 0..m {
            let mut row = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.5) {
                    row.push((j, rng.gen_range(-2.0..2.0)));
                }
            }
            let lhs: f64 = row.iter().map(|&(j, v)| v * x0[j]).sum();
            b.push(lhs + rng.gen_range(0.05..1.0));
            a.push_row(&row);
        }
        let lp = LpProblem {
            cost: (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            a_ineq: a,
            b_ineq: b,
            a_eq: SparseMatrix::new(n),
            b_eq: vec![],
            lower: vec![-5.0; n],
            upper: vec![5.0; n],
        };
        let sol = simplex_solve(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let cert = sol.certificate(&lp);
        prop_assert!(cert.primal_infeasibility <= 1e-8);
        prop_assert!(cert.dual_infeasibility <= 1e-8);
        prop_assert!(cert.complementarity <= 1e-8);
        prop_assert!(cert.duality_gap <= 1e-9);
    }
}
