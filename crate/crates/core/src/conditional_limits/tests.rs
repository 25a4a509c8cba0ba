use super::*;
use crate::cavity_bp::p_from_field;
use crate::edge_optimizer::solve_two_spin;
use crate::spin_measures::{Pmf, SpinSpace};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn symmetric_unique_closed_form() {
    let r = classify(3, 0.5, 1.0).unwrap();
    assert_eq!(r.regime, Regime::FerroUniqueSymmetric);
    assert_eq!(r.case, "3a");
    close(r.beta, (1.0f64 / 3.0).atanh(), 1e-15);
    close(r.beta, 0.346573590, 1e-9);
    assert_eq!(r.measures.len(), 1);
    assert!(r.consensus_check < 1e-12);
}

#[test]
fn transition_point_is_uniqueness_threshold() {
    let b = solve_beta(3, 0.5, 1.5).unwrap();
    close(b, 0.5f64.atanh(), 1e-15);
    close(b, beta_crit(3, 0.0), 1e-12);
    assert_eq!(regime(3, 0.5, 1.5).unwrap(), Regime::FerroUniqueSymmetric);
}

#[test]
fn symmetric_pair_above_transition() {
    let r = classify(3, 0.5, 1.6).unwrap();
    assert_eq!(r.regime, Regime::FerroPair);
    assert_eq!(r.n_limits, 2);
    assert!(r.beta > beta_crit(3, 0.0));
    assert!(r.consensus_check < 1e-9);
    close(r.thetas[0], -r.thetas[1], 0.0);
    assert!(r.thetas[0] > 0.0);
    close(r.magnetizations[0], -r.magnetizations[1], 1e-15);
}

#[test]
fn antiferro_without_field() {
    for kappa in [3, 4, 7] {
        let r = classify(kappa, 0.5, -1.0).unwrap();
        assert_eq!(r.regime, Regime::AntiferroUnique);
        close(r.beta, (-1.0 / kappa as f64).atanh(), 1e-15);
        assert_eq!(r.thetas, vec![0.0]);
    }
}

#[test]
fn freezing_endpoints() {
    let r = classify(4, 0.3, -4.0).unwrap();
    assert_eq!(r.regime, Regime::FreezingAlternating);
    assert_eq!(r.beta, f64::NEG_INFINITY);
    assert_eq!(r.predicted_edge_marginals[0].weights(), &[0.0, 0.5, 0.5, 0.0]);
    assert_eq!(classify(4, 0.7, 4.0).unwrap().regime, Regime::FreezingPlus);
    assert_eq!(classify(4, 0.3, 4.0).unwrap().regime, Regime::FreezingMinus);
    let pair = classify(4, 0.5, 4.0).unwrap();
    assert_eq!(pair.regime, Regime::FreezingPair);
    assert_eq!(pair.n_limits, 2);
    assert_eq!(pair.beta, f64::INFINITY);
    assert_eq!(pair.magnetizations, vec![1.0, -1.0]);
}

#[test]
fn degenerate_and_infeasible_inputs() {
    assert!(matches!(classify(3, 0.7, 3.0 * 0.16), Err(Error::Degenerate(_))));
    assert!(matches!(classify(3, 0.5, 0.0), Err(Error::Degenerate(_))));
    assert!(matches!(classify(3, 0.5, 3.5), Err(Error::Infeasible { .. })));
    assert!(classify(3, 1.0, 1.0).is_err());
}

#[test]
fn sign_rule() {
    for (p, c, want) in [
        (0.7, 2.0, Regime::FerroPlus),
        (0.3, 2.0, Regime::FerroMinus),
        (0.7, 0.1, Regime::AntiferroUnique),
        (0.3, -2.0, Regime::AntiferroUnique),
    ] {
        let r = classify(3, p, c).unwrap();
        assert_eq!(r.regime, want);
        assert!(r.consensus_check < 1e-9, "{p} {c}: {}", r.consensus_check);
        match want {
            Regime::AntiferroUnique => assert!(r.beta < 0.0),
            _ => assert!(r.beta > 0.0),
        }
    }
}

#[test]
fn minority_branch_is_flagged() {
    let field = 5.4;
    let p = p_from_field(field);
    let c = ising_consensus(
        ising_fixed_points(&IsingParams::new(6, 1.75, field)).unwrap().smallest(),
        1.75,
        6,
    );
    close(c, 5.99884722, 1e-7);
    assert!(c < two_spin_c_ref(6, p));
    let b = minority_branch_beta(6, field, c).unwrap();
    close(b, 1.75, 1e-9);
    let r = classify(6, p, c).unwrap();
    assert_eq!(r.regime, Regime::AntiferroUnique);
    assert!(r.beta < 0.0);
    assert_eq!(r.notes.len(), 1);
    assert!(r.consensus_check < 1e-9);
}

#[test]
fn agrees_with_edge_optimizer() {
    let h = EdgePotential::consensus();
    for kappa in [3, 4, 5] {
        let k = kappa as f64;
        for p in [0.2, 0.5, 0.65] {
            for frac in [-0.9, -0.4, 0.1, 0.45, 0.8, 0.97] {
                let c = frac * k;
                if (c - two_spin_c_ref(kappa, p)).abs() < 1e-3 {
                    continue;
                }
                let r = classify(kappa, p, c).unwrap();
                let opt = solve_two_spin(&Pmf::bernoulli(p).unwrap(), &h, c, kappa).unwrap();
                assert_eq!(opt.minimizers.len(), r.n_limits, "{kappa} {p} {c}");
                for pi in &r.predicted_edge_marginals {
                    let d = opt
                        .minimizers
                        .iter()
                        .map(|m| m.pi.tv(pi))
                        .fold(f64::INFINITY, f64::min);
                    assert!(d <= 1e-7, "{kappa} {p} {c}: tv {d}");
                }
            }
        }
    }
}

#[test]
fn beta_monotone_in_c() {
    let cs: Vec<f64> = (1..60).map(|i| -3.0 + 0.1 * i as f64).filter(|c: &f64| c.abs() > 1e-9).collect();
    let betas: Vec<f64> = cs.iter().map(|&c| solve_beta(3, 0.5, c).unwrap()).collect();
    assert!(betas.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn phase_diagram_regimes() {
    let rows = phase_diagram(3, 0.5, &[-2.0, -1.0, 1.0, 1.4, 1.6, 2.0]).unwrap();
    let regimes: Vec<Regime> = rows.iter().map(|r| r.regime).collect();
    use Regime::*;
    assert_eq!(
        regimes,
        vec![
            AntiferroUnique,
            AntiferroUnique,
            FerroUniqueSymmetric,
            FerroUniqueSymmetric,
            FerroPair,
            FerroPair
        ]
    );
    let n: Vec<usize> = rows.iter().map(|r| r.n_limits).collect();
    assert_eq!(n, vec![1, 1, 1, 1, 2, 2]);
    let plus = phase_diagram(3, 0.7, &[0.6, 1.0, 2.0, 2.9]).unwrap();
    assert!(plus.iter().all(|r| r.regime == FerroPlus));
}

#[test]
fn phase_csv_schema() {
    let rows = phase_diagram(3, 0.5, &[-3.0, 0.0, 1.6]).unwrap();
    assert_eq!(rows.len(), 2);
    let mut buf = Vec::new();
    write_phase_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "c,regime,beta,B,thetas,magnetizations,consensus_check,n_limits"
    );
    assert!(lines[1].contains(",freezing_alternating,-inf,"));
    assert_eq!(lines[2].split(',').nth(4).unwrap().split(';').count(), 2);
}

#[test]
fn report_serializes_infinite_beta() {
    let v = serde_json::to_value(classify(3, 0.5, 3.0).unwrap()).unwrap();
    assert_eq!(v["beta"], "inf");
    assert_eq!(v["thetas"][1], "-inf");
    assert_eq!(v["regime"], "freezing_pair");
}

#[test]
fn limit_set_boundary_example() {
    let nu = Pmf::bernoulli(1.0 / 3.0).unwrap();
    let h = EdgePotential::two_spin(7.0, -5.0, 4.0);
    let s = general_limit_set(&nu, &h, 20.0, 5).unwrap();
    assert_eq!(s.limits.len(), 1);
    assert!(s.limits[0].degenerate);
    assert_eq!(s.limits[0].support, vec!["-1".to_string()]);
    assert_eq!(
        s.limits[0].measure,
        LimitMeasure::Frozen { label: "-1".into() }
    );
    assert!(!s.nondegeneracy_guaranteed);
}

#[test]
fn limit_set_uniform_two_spin_is_nondegenerate() {
    let nu = Pmf::uniform(SpinSpace::two_spin());
    let h = EdgePotential::two_spin(0.3, -1.1, 0.8);
    let s = general_limit_set(&nu, &h, 1.2, 3).unwrap();
    assert!(s.nondegeneracy_guaranteed);
    for l in &s.limits {
        assert!(!l.degenerate);
        assert!(matches!(l.measure, LimitMeasure::Gibbs { .. }));
    }
    let cr = crate::edge_optimizer::c_ref(&nu, &h, 3);
    assert!(matches!(general_limit_set(&nu, &h, cr, 3), Err(Error::Degenerate(_))));
}

#[test]
fn limit_set_restricted_gibbs() {
    let space = SpinSpace::numbered(3).unwrap();
    let mut hv = vec![0.5; 9];
    for x in 0..3 {
        hv[x * 3 + 2] = -1.0;
        hv[2 * 3 + x] = -1.0;
    }
    hv[8] = 1.0;
    let h = EdgePotential::new(space.clone(), hv).unwrap();
    let nu = Pmf::uniform(space);
    let s = general_limit_set(&nu, &h, 1.5, 3).unwrap();
    assert_eq!(s.limits.len(), 1);
    let l = &s.limits[0];
    assert!(l.degenerate);
    assert_eq!(l.support, vec!["1".to_string(), "2".to_string()]);
    match &l.measure {
        LimitMeasure::RestrictedGibbs { measure } => {
            assert_eq!(measure.spec.q(), 2);
            for w in measure.edge_marginal.weights() {
                close(*w, 0.25, 1e-9);
            }
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(s.c_in_range_of_kappa_h);
}
