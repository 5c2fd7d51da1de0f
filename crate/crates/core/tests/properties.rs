use std::f64::consts::{FRAC_PI_2, PI};

use kuramoto_core::applications::{power_rhs, PowerNetwork};
use kuramoto_core::diagnostics::{
    detect_phase_sync, jacobian, kinetic_s, lyapunov_u1, minimal_containing_arc, order_parameter_graph,
};
use kuramoto_core::dynamics::{rhs_classic, rhs_graph, rhs_meanfield_order, rhs_weighted};
use kuramoto_core::fixed_point::sinc_weights;
use kuramoto_core::graph::{build_incidence, laplacian, pseudoinverse, spectrum, DEFAULT_ZERO_TOL};
use kuramoto_core::nalgebra::{DMatrix, DVector};
use kuramoto_core::scenario::parse_config;
use kuramoto_core::thresholds::{k_c_onset, k_inv, k_l_classical, k_lower_spectral, k_unique};
use kuramoto_core::{
    integrate, order_parameter, solve_fixed_point, CouplingMode, IntegratorConfig, OscillatorNetwork, StabilityClass,
    WeightedGraph,
};
use proptest::prelude::*;

/// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        prop::collection::vec(prop::option::weighted(0.4, 0.1f64..3.0), pairs).prop_map(move |ws| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if let Some(w) = ws[k] {
                        edges.push((i, j, w));
                    }
                    k += 1;
                }
            }
            WeightedGraph::new(n, edges).unwrap()
        })
    })
}

/// Connected: a path backbone with random extra edges.
fn connected_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            prop::collection::vec(0.1f64..3.0, n - 1),
            prop::collection::vec(prop::option::weighted(0.2, 0.1f64..3.0), pairs),
        )
            .prop_map(move |(backbone, extra)| {
                let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|j| (j - 1, j, backbone[j - 1])).collect();
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if j > i + 1 {
                            if let Some(w) = extra[k] {
                                edges.push((i, j, w));
                            }
                        }
                        k += 1;
                    }
                }
                WeightedGraph::new(n, edges).unwrap()
            })
    })
}

fn vec_strategy(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(lo..hi, n).prop_map(DVector::from_vec)
}

fn graph_and_phases(max_n: usize) -> impl Strategy<Value = (WeightedGraph, DVector<f64>, DVector<f64>)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), vec_strategy(n, -2.0 * PI, 2.0 * PI), vec_strategy(n, -3.0, 3.0))
    })
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_b_w_bt(g in graph_strategy(20)) {
        let b = build_incidence(&g).matrix;
        let w = DMatrix::from_diagonal(&g.weights());
        let diff = max_abs(&(laplacian(&g) - &b * w * b.transpose()));
        prop_assert!(diff <= 1e-12, "{diff}");
    }

    #[test]
    fn zero_multiplicity_counts_components(g in graph_strategy(20)) {
        let spec = spectrum(&laplacian(&g), DEFAULT_ZERO_TOL).unwrap();
        prop_assert!(spec.eigenvalues.iter().all(|&v| v >= -1e-10));
        prop_assert_eq!(spec.zero_multiplicity, g.component_count());
    }

    #[test]
    fn eigenvalues_match_jacobi_oracle(g in graph_strategy(15)) {
        let l = laplacian(&g);
        let ours = spectrum(&l, DEFAULT_ZERO_TOL).unwrap().eigenvalues;
        let oracle = jacobi_eigenvalues(&l);
        for (a, b) in ours.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{ours:?} vs {oracle:?}");
        }
    }

    #[test]
    fn pseudoinverse_penrose(g in connected_strategy(50)) {
        let l = laplacian(&g);
        let p = pseudoinverse(&l).unwrap();
        let (lp, pl) = (&l * &p, &p * &l);
        prop_assert!(max_abs(&(&lp * &l - &l)) <= 1e-9);
        prop_assert!(max_abs(&(&pl * &p - &p)) <= 1e-9);
        prop_assert!(max_abs(&(&lp - lp.transpose())) <= 1e-9);
        prop_assert!(max_abs(&(&pl - pl.transpose())) <= 1e-9);
    }

    #[test]
    fn rhs_forms_agree_on_complete_graph(
        (theta, omega) in (1usize..25).prop_flat_map(|n| (vec_strategy(n, -10.0, 10.0), vec_strategy(n, -3.0, 3.0))),
        k in 0.0f64..5.0,
    ) {
        let n = theta.len();
        let g = WeightedGraph::complete(n, 1.0).unwrap();
        let inc = build_incidence(&g);
        let a = rhs_classic(&theta, &omega, k).unwrap();
        let b = rhs_meanfield_order(&theta, &omega, k).unwrap();
        let c = rhs_graph(&theta, &omega, k, &inc, &g.weights()).unwrap();
        prop_assert!((&a - &b).amax() <= 1e-12);
        prop_assert!((&a - &c).amax() <= 1e-12);
    }

    #[test]
    fn rhs_mean_is_mean_omega((g, theta, omega) in graph_and_phases(20), k in 0.0f64..4.0) {
        for mode in [CouplingMode::GraphIncidence, CouplingMode::WeightedAdjacency] {
            let net = OscillatorNetwork::new(g.clone(), omega.clone(), k, mode).unwrap();
            prop_assert!((net.rhs(&theta).mean() - omega.mean()).abs() <= 1e-12);
        }
        let a = g.adjacency();
        prop_assert!((rhs_weighted(&theta, &omega, &a).unwrap().mean() - omega.mean()).abs() <= 1e-12);
    }

    #[test]
    fn rhs_translation_invariant((g, theta, omega) in graph_and_phases(20), c in -50.0f64..50.0) {
        let net = OscillatorNetwork::new(g, omega, 1.5, CouplingMode::WeightedAdjacency).unwrap();
        let shifted = theta.add_scalar(c);
        prop_assert!((net.rhs(&theta) - net.rhs(&shifted)).amax() <= 1e-10);
    }

    #[test]
    fn containing_arc_rotation_and_permutation(
        theta in (1usize..20).prop_flat_map(|n| vec_strategy(n, -20.0, 20.0)),
        c in -30.0f64..30.0,
        seed in any::<u64>(),
    ) {
        let base = minimal_containing_arc(&theta);
        prop_assert!((0.0..=2.0 * PI).contains(&base));
        prop_assert!((minimal_containing_arc(&theta.add_scalar(c)) - base).abs() <= 1e-9);
        let mut idx: Vec<usize> = (0..theta.len()).collect();
        let mut s = seed;
        for i in (1..idx.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(i, (s >> 33) as usize % (i + 1));
        }
        let perm = DVector::from_iterator(theta.len(), idx.iter().map(|&i| theta[i]));
        prop_assert_eq!(minimal_containing_arc(&perm), base);
    }

    #[test]
    fn u1_range_and_zero_set(theta in (1usize..30).prop_flat_map(|n| vec_strategy(n, -10.0, 10.0))) {
        let u = lyapunov_u1(&theta);
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&u));
        let r = order_parameter(&theta).r;
        prop_assert!((u - (1.0 - r * r)).abs() <= 1e-12);
        prop_assert!((order_parameter_graph(&theta) - r).abs() <= 1e-10);
        let equal = DVector::from_element(theta.len(), theta[0]);
        prop_assert!(lyapunov_u1(&equal).abs() <= 1e-14);
    }

    #[test]
    fn jacobian_rows_sum_to_zero((g, theta, _) in graph_and_phases(12)) {
        let j = jacobian(&theta, &g.adjacency()).unwrap().j;
        let ones = DVector::from_element(g.n(), 1.0);
        prop_assert!((&j * ones).amax() <= 1e-12);
    }

    #[test]
    fn sinc_identity((g, theta, _) in graph_and_phases(15)) {
        let inc = build_incidence(&g);
        let phi = inc.edge_phases(&theta).unwrap();
        let s = DMatrix::from_diagonal(&sinc_weights(&phi));
        let lhs = &inc.matrix * s * inc.matrix.transpose() * &theta;
        let rhs = &inc.matrix * phi.phi.map(f64::sin);
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn thresholds_scale_linearly(
        omega in (3usize..20).prop_flat_map(|n| vec_strategy(n, -2.0, 2.0)),
        c in 0.1f64..10.0,
    ) {
        let scaled = &omega * c;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * (1.0 + b.abs());
        let n = omega.len();
        let (l2, lmax) = (n as f64, n as f64);
        prop_assert!(close(k_c_onset(&scaled).unwrap(), c * k_c_onset(&omega).unwrap()));
        prop_assert!(close(k_l_classical(&scaled).unwrap(), c * k_l_classical(&omega).unwrap()));
        prop_assert!(close(k_inv(&scaled, 0.3).unwrap(), c * k_inv(&omega, 0.3).unwrap()));
        prop_assert!(close(k_lower_spectral(&scaled, l2).unwrap(), c * k_lower_spectral(&omega, l2).unwrap()));
        prop_assert!(close(k_unique(&scaled, l2, lmax).unwrap(), c * k_unique(&omega, l2, lmax).unwrap()));
    }

    #[test]
    fn power_rhs_conserves_mean(
        (p, theta) in (2usize..10).prop_flat_map(|n| (vec_strategy(n, -1.0, 1.0), vec_strategy(n, -PI, PI))),
    ) {
        let n = p.len();
        let y = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 + ((i + j) % 3) as f64 });
        let net = PowerNetwork::new(p.clone(), DVector::from_element(n, 1.05), y).unwrap();
        prop_assert!((power_rhs(&theta, &net).unwrap().mean() - p.mean()).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn converged_fixed_points_are_equilibria(
        omega in (2usize..8).prop_flat_map(|n| vec_strategy(n, -1.0, 1.0)),
        extra in 1.05f64..3.0,
    ) {
        let n = omega.len();
        let probe = OscillatorNetwork::new(WeightedGraph::complete(n, 1.0).unwrap(), omega, 1.0, CouplingMode::GraphIncidence).unwrap();
        let kc = k_c_onset(probe.omega()).unwrap();
        let net = probe.with_k(extra * kc.max(0.1) * 2.0).unwrap();
        let tol = 1e-10;
        let fp = solve_fixed_point(&net, &DVector::zeros(n), tol, 2000).unwrap();
        prop_assume!(fp.converged);
        let theta = DVector::from_vec(fp.theta_star.clone());
        let drift = net.rhs(&theta).add_scalar(-net.omega().mean());
        prop_assert!(drift.amax() <= 10.0 * tol);
        if fp.max_edge_difference < FRAC_PI_2 {
            prop_assert_eq!(fp.stability, StabilityClass::LocallyExponentiallyStable);
        }
        let tr = integrate(&net, &theta, &IntegratorConfig::new(0.01, 10.0, 10).unwrap()).unwrap();
        let r0 = order_parameter(&theta).r;
        for th in &tr.thetas {
            prop_assert!((order_parameter(th).r - r0).abs() <= 1e-6);
        }
    }

    #[test]
    fn kinetic_energy_decreases_inside_cohesive_set(
        omega in (3usize..7).prop_flat_map(|n| vec_strategy(n, -1.0, 1.0)),
        frac in prop::collection::vec(0.0f64..1.0, 7),
    ) {
        let n = omega.len();
        let eps = PI / 16.0;
        let gamma = FRAC_PI_2 - 2.0 * eps;
        let k = 1.05 * k_inv(&omega, eps).unwrap();
        let net = OscillatorNetwork::mean_field(omega, k).unwrap();
        let theta0 = DVector::from_iterator(n, frac.iter().take(n).map(|f| f * 0.9 * gamma));
        let tr = integrate(&net, &theta0, &IntegratorConfig::new(0.01, 20.0, 1).unwrap()).unwrap();
        let s: Vec<f64> = tr.theta_dots.iter().map(kinetic_s).collect();
        for w in s.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn config_round_trips(
        values in prop::collection::vec(-1e3f64..1e3, 1..8),
        k in 0.0f64..1e3,
        h in 1e-4f64..0.1,
    ) {
        let n = values.len();
        let text = format!(
            "[network]\ntopology = \"path\"\nn = {n}\ncoupling_mode = \"graph_incidence\"\nk = {k:?}\n\
             [omega]\nkind = \"explicit\"\nvalues = {values:?}\n\
             [theta0]\nkind = \"explicit\"\nvalues = {values:?}\n\
             [integrator]\nh = {h:?}\nt_end = 1.0\n"
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }
}

#[test]
fn lambda2_of_complete_graph_is_n() {
    for n in 2..=20 {
        let spec = spectrum(&laplacian(&WeightedGraph::complete(n, 1.0).unwrap()), DEFAULT_ZERO_TOL).unwrap();
        assert!((spec.lambda2 - n as f64).abs() < 1e-9, "n={n}: {}", spec.lambda2);
        let oracle = jacobi_eigenvalues(&laplacian(&WeightedGraph::complete(n, 1.0).unwrap()));
        assert!((oracle[1] - n as f64).abs() < 1e-9);
    }
}

#[test]
fn distinct_frequencies_never_phase_sync() {
    for (omega, k) in [
        (vec![0.0, 0.3, 0.6], 4.0),
        (vec![-1.0, -0.5, 0.0, 0.5, 1.0], 8.0),
        (vec![0.1, -0.1], 10.0),
    ] {
        let n = omega.len();
        let net = OscillatorNetwork::mean_field(DVector::from_vec(omega), k).unwrap();
        let tr = integrate(&net, &DVector::zeros(n), &IntegratorConfig::new(0.01, 50.0, 5).unwrap()).unwrap();
        assert!(!detect_phase_sync(&tr, 1e-6, 5.0));
    }
}

#[test]
fn traces_are_bit_identical() {
    let g = WeightedGraph::cycle(7, 1.3).unwrap();
    let net = OscillatorNetwork::new(g, DVector::from_fn(7, |i, _| 0.1 * i as f64), 2.0, CouplingMode::GraphIncidence).unwrap();
    let th0 = DVector::from_fn(7, |i, _| (i as f64).sin());
    let cfg = IntegratorConfig::new(0.01, 5.0, 3).unwrap();
    assert_eq!(integrate(&net, &th0, &cfg).unwrap(), integrate(&net, &th0, &cfg).unwrap());
}
