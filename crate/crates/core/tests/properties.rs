//! Property tests for the structural invariants of each module.

use std::f64::consts::PI;

use attractor_core::compactness::{hausdorff_semidist, phi, Cloud, PairRun};
use attractor_core::dynamics::{audit_damping, audit_nonlinearity, fit_energy_lower_bound, AuditRange};
use attractor_core::energy::lower_bound_slack;
use attractor_core::forcing::{l2b_norm, linf_norm};
use attractor_core::process::evolve;
use attractor_core::{
    Basis, DampingSpec, HullSample, NonlinearitySpec, SolverConfig, State, Symbol, SymbolKind, System, Time,
};
use proptest::prelude::*;

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn basis_strategy() -> impl Strategy<Value = Basis> {
    prop_oneof![
        (1usize..24, 0.5f64..5.0).prop_map(|(n, l)| Basis::new(1, n, &[l]).unwrap()),
        (1usize..6, 0.5f64..3.0, 0.5f64..3.0).prop_map(|(n, a, b)| Basis::new(2, n, &[a, b]).unwrap()),
    ]
}

fn damping_strategy() -> impl Strategy<Value = DampingSpec> {
    prop_oneof![
        (0.1f64..5.0).prop_map(DampingSpec::linear),
        (2u32..=3).prop_map(|p| DampingSpec::polynomial(p).unwrap()),
        (0.1f64..3.0, 0.1f64..2.0).prop_map(|(a, k)| DampingSpec::saturating(a, k)),
    ]
}

fn symbol_strategy(n: usize) -> impl Strategy<Value = Symbol> {
    let kind = prop_oneof![
        (-2.0f64..2.0).prop_map(|level| SymbolKind::Constant { level }),
        (0.1f64..2.0, 0.2f64..3.0, 0.0f64..PI).prop_map(|(amplitude, frequency, phase)| SymbolKind::Periodic {
            amplitude,
            frequency,
            phase
        }),
        (0.1f64..2.0, 1.1f64..2.0).prop_map(|(amplitude, w)| SymbolKind::Quasiperiodic {
            amplitude,
            frequencies: vec![1.0, w]
        }),
        (0.0f64..1.0, 1.0f64..2.0, 0.05f64..0.5).prop_map(|(low, high, ramp)| SymbolKind::RampedSwitch { low, high, ramp }),
    ];
    (kind, coeffs(n)).prop_map(|(k, p)| Symbol::new(k, p).unwrap())
}

fn ticks() -> impl Strategy<Value = Time> {
    (-1_000_000i64..1_000_000).prop_map(|k| Time::from_f64(1e-3) * k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_reproduces_orthonormality(basis in basis_strategy()) {
        let n = basis.len();
        let w = basis.quad_weights();
        for a in 0..n {
            for b in 0..=a {
                let g: f64 = (0..basis.grid_len()).map(|i| w[i] * basis.basis_value(a, i) * basis.basis_value(b, i)).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                prop_assert!((g - expect).abs() < 1e-12, "({a},{b}) -> {g}");
            }
        }
    }

    #[test]
    fn basis_values_are_scaled_sines(n in 1usize..20, l in 0.5f64..5.0) {
        let basis = Basis::new(1, n, &[l]).unwrap();
        for m in 0..n {
            for i in 0..basis.grid_len() {
                let x = basis.quad_node(i)[0];
                let exact = (2.0 / l).sqrt() * ((m + 1) as f64 * PI * x / l).sin();
                prop_assert!((basis.basis_value(m, i) - exact).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn transforms_round_trip(basis in basis_strategy(), seed in any::<u64>()) {
        let a: Vec<f64> = (0..basis.len()).map(|k| ((seed.wrapping_mul(k as u64 + 1) % 2001) as f64 - 1000.0) / 1000.0).collect();
        let back = basis.to_modal(&basis.to_physical(&a).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn modal_h1_matches_gradient_quadrature((basis, a) in basis_strategy().prop_flat_map(|b| { let n = b.len(); (Just(b), coeffs(n)) })) {
        let modal = basis.norms(&a).unwrap().h1.powi(2);
        let quad = basis.gradient_sq_quadrature(&a).unwrap();
        prop_assert!((modal - quad).abs() <= 1e-10 * modal.max(1e-300), "{modal} vs {quad}");
    }

    #[test]
    fn eigenvalues_sorted_with_lexicographic_ties(n in 1usize..8, a in 0.5f64..3.0, square in any::<bool>()) {
        let b = if square { a } else { 2.0 * a };
        let basis = Basis::new(2, n, &[a, b]).unwrap();
        let again = Basis::new(2, n, &[a, b]).unwrap();
        prop_assert_eq!(basis.mode_indices(), again.mode_indices());
        let lam = basis.eigenvalues();
        let idx = basis.mode_indices();
        for k in 1..lam.len() {
            // ties: equal to 12 significant digits
            let tie = format!("{:.11e}", lam[k - 1]) == format!("{:.11e}", lam[k]);
            prop_assert!(lam[k - 1] <= lam[k] || tie);
            if tie {
                prop_assert!(idx[k - 1] < idx[k]);
            }
        }
    }

    #[test]
    fn builtin_dampings_pass_their_audit(h in damping_strategy()) {
        let range = AuditRange::default();
        let report = audit_damping(&h, range).unwrap();
        prop_assert!(report.passed(), "{:?}", report.checks);
        let c = report.constant("c_power_bound").unwrap();
        let r = (h.growth_exponent + 1.0) / h.growth_exponent;
        for s in range.grid() {
            let lhs = h.h(s).abs().powf(r);
            prop_assert!(lhs <= c * (1.0 + h.h(s) * s) * (1.0 + 1e-12), "s={s}");
        }
    }

    #[test]
    fn builtin_dampings_are_monotone_on_pair_grid(h in damping_strategy(), s_max in 0.5f64..50.0) {
        let grid: Vec<f64> = (0..100).map(|i| -s_max + 2.0 * s_max * i as f64 / 99.0).collect();
        for &a in &grid {
            for &b in &grid {
                prop_assert!((h.h(a) - h.h(b)) * (a - b) >= 0.0);
            }
        }
    }

    #[test]
    fn symbol_translation_is_exact(sigma in symbol_strategy(4), s in ticks(), t in ticks()) {
        let shifted = sigma.translate(s);
        prop_assert_eq!(shifted.evaluate_at(t), sigma.evaluate_at(t + s));
        prop_assert_eq!(shifted.evaluate_dt_at(t), sigma.evaluate_dt_at(t + s));
        prop_assert_eq!(shifted.translate(-s).evaluate_at(t), sigma.evaluate_at(t));
    }

    #[test]
    fn hull_members_do_not_exceed_the_base_norm(sigma in symbol_strategy(3), shifts in prop::collection::vec(0.0f64..20.0, 1..4)) {
        let hull = HullSample::new(&sigma, &shifts).unwrap();
        let dt = 0.05;
        let base = linf_norm(&sigma, (-40.0, 40.0), dt).unwrap();
        // slope of ‖g(t)‖ bounds what a scan of step dt can miss
        let slope = linf_norm_dt(&sigma);
        for member in &hull.symbols {
            let m = linf_norm(member, (-15.0, 15.0), dt).unwrap();
            prop_assert!(m <= base + dt * slope + 1e-12, "{m} > {base}");
        }
    }
}

fn linf_norm_dt(sigma: &Symbol) -> f64 {
    (0..=8000)
        .map(|j| Time::from_f64(-40.0 + 0.01 * j as f64))
        .map(|t| sigma.evaluate_dt_at(t).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn l2b_norm_is_translation_invariant(amp in 0.1f64..2.0, w in 0.5f64..3.0, s in 0.0f64..10.0) {
        // periodic symbol over a window of many periods: only scan resolution separates the two sups
        let sigma = Symbol::new(SymbolKind::Periodic { amplitude: amp, frequency: w, phase: 0.0 }, vec![1.0, 0.5]).unwrap();
        let a = l2b_norm(&sigma, (0.0, 60.0), 0.01).unwrap();
        let b = l2b_norm(&sigma.translate(Time::from_f64(s)), (0.0, 60.0), 0.01).unwrap();
        prop_assert!((a - b).abs() <= 1e-3 * a, "{a} vs {b}");
    }

    #[test]
    fn phi_vanishes_on_identical_pairs(u in coeffs(6), v in coeffs(6), sigma in symbol_strategy(6)) {
        let sys = System::new(Basis::new(1, 6, &[PI]).unwrap(), DampingSpec::polynomial(3).unwrap(), NonlinearitySpec::cubic_double_well());
        let y = State::new(u, v, Time::ZERO).unwrap();
        let traj = evolve(&sigma, Time::ZERO, Time::from_f64(2.0), &y, &sys, &SolverConfig::rk4(0.01)).unwrap();
        let pair = PairRun::new(traj.clone(), traj, sigma.clone(), sigma).unwrap();
        let (value, comps) = phi(&pair, Time::from_f64(2.0), 1.7, &sys).unwrap();
        prop_assert!(value.abs() < 1e-12);
        prop_assert!(comps.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn energy_lower_bound_holds_along_trajectories(u in coeffs(8), v in coeffs(8), scale in 0.1f64..4.0) {
        let sys = System::new(Basis::new(1, 8, &[PI]).unwrap(), DampingSpec::linear(0.5), NonlinearitySpec::cubic_double_well());
        let (c0, c1) = fit_energy_lower_bound(&sys.nonlinearity, sys.basis.lambda1(), sys.basis.domain_measure(), AuditRange::default()).unwrap();
        let y = State::new(u.iter().map(|x| x * scale).collect(), v, Time::ZERO).unwrap();
        let traj = evolve(&Symbol::zero(8), Time::ZERO, Time::from_f64(3.0), &y, &sys, &SolverConfig::rk4(0.005)).unwrap();
        prop_assert!(lower_bound_slack(&traj, &sys, c0, c1).unwrap() >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn builtin_nonlinearities_pass_their_audit(pick in 0usize..5) {
        let f = match pick {
            0 => NonlinearitySpec::zero(),
            1 => NonlinearitySpec::linear(),
            2 => NonlinearitySpec::cubic(),
            3 => NonlinearitySpec::cubic_double_well(),
            _ => NonlinearitySpec::power_minus_linear(2.0).unwrap(),
        };
        let report = audit_nonlinearity(&f, 1.0, AuditRange::default()).unwrap();
        prop_assert!(report.passed(), "{}: {:?}", f.name, report.checks);
    }

    #[test]
    fn semidistance_is_resolution_qualified(points in prop::collection::vec(coeffs(4), 1..6), eps_exp in prop_oneof![-14i32..-9, -8i32..-3]) {
        let basis = Basis::new(1, 2, &[PI]).unwrap();
        let states: Vec<State> = points.iter().map(|p| State::new(p[..2].to_vec(), p[2..].to_vec(), Time::ZERO).unwrap()).collect();
        let a = Cloud::new(states.clone(), "a", &basis).unwrap();
        prop_assert_eq!(hausdorff_semidist(&a, &a, &basis).unwrap(), 0.0);

        // move every point by eps in X
        let eps = 10f64.powi(eps_exp);
        let moved: Vec<State> = states.iter().map(|s| {
            let mut m = s.clone();
            m.v[0] += eps;
            m
        }).collect();
        let b = Cloud::new(moved, "b", &basis).unwrap();
        let d = hausdorff_semidist(&a, &b, &basis).unwrap();
        prop_assert!(d <= eps * (1.0 + 1e-6) + 1e-15);
        prop_assert_eq!(d == 0.0, eps < 1e-9);

        // a superset attracts its subset exactly
        let mut more = states.clone();
        more.push(State::zero(2));
        let sup = Cloud::new(more, "sup", &basis).unwrap();
        prop_assert_eq!(hausdorff_semidist(&a, &sup, &basis).unwrap(), 0.0);
    }

    #[test]
    fn time_conversion_is_decimal_exact(k in -10_000_000i64..10_000_000) {
        let t = Time::from_f64(k as f64 / 1000.0);
        prop_assert_eq!(t, Time::from_f64(1e-3) * k);
        prop_assert_eq!(Time::from_f64(t.to_f64()), t);
    }
}
