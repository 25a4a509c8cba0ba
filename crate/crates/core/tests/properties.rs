use gibbs_consensus::cavity_bp::{
    bp_residual, ising_cavity_map, ising_fixed_points, theta_to_boundary_law, IsingParams,
    Specification,
};
use gibbs_consensus::conditional_limits::{classify, phase_diagram, two_spin_c_ref};
use gibbs_consensus::graph_lab::{
    exact_conditional, gen_regular_graph, heat_bath_prob, Direction, RegularGraph,
};
use gibbs_consensus::spin_measures::{
    edge_rate_j, relative_entropy, EdgeMeasure, EdgePotential, Pmf, SpinSpace,
};
use gibbs_consensus::tis_gibbs::star_measure;
use proptest::prelude::*;

fn edge_measure(q: usize) -> impl Strategy<Value = EdgeMeasure> {
    prop::collection::vec(0.01f64..1.0, q * (q + 1) / 2).prop_map(move |upper| {
        let mut w = vec![0.0; q * q];
        let mut k = 0;
        for x in 0..q {
            for z in x..q {
                w[x * q + z] = upper[k];
                w[z * q + x] = upper[k];
                k += 1;
            }
        }
        EdgeMeasure::from_unnormalized(SpinSpace::numbered(q).unwrap(), w).unwrap()
    })
}

fn pmf(q: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(0.05f64..1.0, q)
        .prop_map(move |w| Pmf::from_unnormalized(SpinSpace::numbered(q).unwrap(), w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_rate_is_nonnegative(
        (pi, nu) in (2usize..4).prop_flat_map(|q| (edge_measure(q), pmf(q))),
        kappa in 2usize..7,
    ) {
        prop_assert!(edge_rate_j(&pi, &nu, kappa).unwrap() >= -1e-12);
    }

    #[test]
    fn rate_vanishes_at_product_measure(nu in pmf(3), kappa in 2usize..7) {
        let pi = EdgeMeasure::product(&nu, &nu).unwrap();
        prop_assert!(edge_rate_j(&pi, &nu, kappa).unwrap().abs() < 1e-12);
    }

    #[test]
    fn star_measure_has_edge_marginal_pi(pi in edge_measure(3), kappa in 2usize..5) {
        let e = star_measure(&pi, kappa).unwrap().edge_marginal().unwrap();
        prop_assert!(e.tv(&pi) < 1e-13);
    }

    #[test]
    fn relative_entropy_is_nonnegative(a in pmf(4), b in pmf(4)) {
        prop_assert!(relative_entropy(&a, &b).unwrap() >= -1e-14);
        prop_assert!(relative_entropy(&a, &a).unwrap().abs() < 1e-14);
    }

    #[test]
    fn cavity_fixed_points_are_bp_fixed_points(
        kappa in 2usize..7,
        beta in -3.0f64..3.0,
        field in -3.0f64..3.0,
    ) {
        let params = IsingParams::new(kappa, beta, field);
        let spec = Specification::ising(beta, field).unwrap();
        for theta in ising_fixed_points(&params).unwrap().thetas() {
            prop_assert!((ising_cavity_map(theta, &params).unwrap() - theta).abs() < 1e-9);
            let ell = theta_to_boundary_law(theta);
            prop_assert!(bp_residual(&ell, &spec, kappa).unwrap() < 1e-9);
        }
    }

    #[test]
    fn classify_limits_hit_the_consensus(
        kappa in 3usize..7,
        p in 0.05f64..0.95,
        u in 0.01f64..0.99,
    ) {
        let k = kappa as f64;
        let c = -k + 2.0 * k * u;
        prop_assume!((c - two_spin_c_ref(kappa, p)).abs() > 1e-3);
        let report = classify(kappa, p, c).unwrap();
        prop_assert!(report.consensus_check < 1e-8, "check {}", report.consensus_check);
        prop_assert_eq!(report.measures.len(), report.n_limits);
    }

    #[test]
    fn phase_diagram_preserves_grid_order(
        kappa in 3usize..6,
        p in 0.1f64..0.9,
        mut grid in prop::collection::vec(-0.99f64..0.99, 1..12),
    ) {
        let k = kappa as f64;
        grid.iter_mut().for_each(|c| *c *= k);
        let c_ref = two_spin_c_ref(kappa, p);
        grid.retain(|c| (c - c_ref).abs() > 1e-6);
        let rows = phase_diagram(kappa, p, &grid).unwrap();
        let cs: Vec<f64> = rows.iter().map(|r| r.c).collect();
        prop_assert_eq!(cs, grid);
    }

    #[test]
    fn generated_graphs_are_simple_and_regular(half_n in 3usize..20, kappa in 2usize..5, seed in any::<u64>()) {
        let n = 2 * half_n;
        prop_assume!(n > kappa);
        let g = gen_regular_graph(n, kappa, seed).unwrap();
        let mut deg = vec![0usize; n];
        for w in g.edges.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        for &(u, v) in &g.edges {
            prop_assert!(u < v);
            deg[u] += 1;
            deg[v] += 1;
        }
        prop_assert!(deg.iter().all(|&d| d == kappa));
    }

    #[test]
    fn edge_list_round_trip(half_n in 3usize..15, kappa in 2usize..5, seed in any::<u64>()) {
        let g = gen_regular_graph(2 * half_n, kappa, seed).unwrap();
        prop_assert_eq!(RegularGraph::from_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn enumeration_mass_and_probability(
        seed in any::<u64>(),
        p in 0.05f64..0.95,
        u in 0.0f64..1.0,
        ge in any::<bool>(),
    ) {
        let g = gen_regular_graph(10, 3, seed).unwrap();
        let nu = Pmf::bernoulli(p).unwrap();
        let c = -3.0 + 6.0 * u;
        let dir = if ge { Direction::Ge } else { Direction::Le };
        let e = exact_conditional(&g, &nu, &EdgePotential::consensus(), c, dir, 0.0).unwrap();
        prop_assert!((e.total_mass - 1.0).abs() < 1e-12);
        prop_assert!((-1e-15..=1.0 + 1e-12).contains(&e.probability));
        prop_assert!(e.min_consensus >= -3.0 - 1e-12 && e.max_consensus <= 3.0 + 1e-12);
        if let Some(m) = e.conditional_edge_marginal {
            let cons: f64 = m.weights().iter().zip([1.0, -1.0, -1.0, 1.0]).map(|(w, h)| w * h).sum::<f64>() * 3.0;
            prop_assert!(dir.holds(cons, c) || (cons - c).abs() < 1e-9);
        }
    }

    #[test]
    fn heat_bath_satisfies_detailed_balance(
        kappa in 1i32..8,
        beta in -2.0f64..2.0,
        field in -2.0f64..2.0,
        k in 0i32..8,
    ) {
        let s = 2 * (k % (kappa + 1)) - kappa;
        let up = heat_bath_prob(s, beta, field);
        let energy_gap = 2.0 * (beta * s as f64 + field);
        let expected = 1.0 / (1.0 + (-energy_gap).exp());
        prop_assert!((up - expected).abs() < 1e-15);
        let down = heat_bath_prob(-s, beta, -field);
        prop_assert!((up + down - 1.0).abs() < 1e-15);
        let lhs = up * (-0.5 * energy_gap).exp();
        let rhs = down * (0.5 * energy_gap).exp();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.max(rhs));
    }
}
