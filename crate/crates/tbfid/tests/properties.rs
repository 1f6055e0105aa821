use proptest::prelude::*;

use tbfid::branching::*;
use tbfid::excitation::*;
use tbfid::kernel::*;
use tbfid::model::*;
use tbfid::oracle::*;

fn betas() -> impl Strategy<Value = BranchingParams> {
    (0.5f64..1.0, 0.0f64..0.3, 0.0f64..0.3, 0.0f64..0.3).prop_map(|(a, b, c, d)| {
        let s = a + b + c + d;
        BranchingParams::with_closure(b / s, c / s, d / s).unwrap()
    })
}

fn collection() -> impl Strategy<Value = CollectionParams> {
    (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0)
        .prop_map(|(eta, xi2, f)| CollectionParams::new(eta, xi2, f * xi2).unwrap())
}

fn small_betas() -> impl Strategy<Value = BranchingParams> {
    (0.0f64..0.02, 0.0f64..0.01, 0.0f64..0.02)
        .prop_map(|(b, c, d)| BranchingParams::with_closure(b, c, d).unwrap())
}

fn target(max_n: usize) -> impl Strategy<Value = TargetState> {
    (any::<bool>(), 1..=max_n).prop_map(|(g, n)| {
        TargetState::new(
            if g {
                TargetKind::Ghz
            } else {
                TargetKind::Cluster
            },
            n,
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detection_probs_are_a_distribution(b in betas(), c in collection()) {
        let p = derive_detection_probs(&b, &c);
        for x in [p.p_par, p.p_perp, p.p_par_prime, p.p_perp_prime] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert!((p.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_collection_is_identity(b in betas()) {
        let p = derive_detection_probs(&b, &CollectionParams::unfiltered());
        prop_assert_eq!(
            (p.p_par, p.p_perp, p.p_par_prime, p.p_perp_prime),
            (b.beta_par, b.beta_perp, b.beta_par_prime, b.beta_perp_prime)
        );
    }

    #[test]
    fn detection_grows_with_efficiency(b in betas(), c in collection(), k in 1.0f64..2.0) {
        let p = derive_detection_probs(&b, &c);
        let more = CollectionParams::new((c.eta * k).min(1.0), c.xi2, c.xi3).unwrap();
        prop_assert!(derive_detection_probs(&b, &more).p_par >= p.p_par);
        let xi2 = (c.xi2 * k).min(1.0);
        let more = CollectionParams::new(c.eta, xi2, c.xi3).unwrap();
        prop_assert!(derive_detection_probs(&b, &more).p_par >= p.p_par);
    }

    #[test]
    fn param_file_round_trips(
        g in proptest::option::of(0.01f64..10.0),
        d in proptest::option::of(0.0f64..1.0),
        x in proptest::option::of(0.0f64..1.0),
    ) {
        let f = ParamFile { gamma_ns: g, gamma_d_ns: d, xi3: x, ..ParamFile::default() };
        prop_assert_eq!(ParamFile::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn one_photon_targets_agree(i in 0.0f64..=1.0) {
        let k = Kernel::symmetric(i).unwrap();
        let g = kernel_fidelity(&k, TargetState::ghz(1).unwrap());
        let c = kernel_fidelity(&k, TargetState::cluster(1).unwrap());
        prop_assert!((g - c).abs() < 1e-15);
    }

    #[test]
    fn phonon_first_order_is_a_tight_lower_bound(gamma in 0.1f64..10.0, r in 0.0f64..0.1, t in target(40)) {
        let p = EmitterParams::new(gamma, gamma * r, 10.0, 10.0).unwrap();
        let rep = phonon_fidelity(&p, t).unwrap();
        let x = t.n_photons as f64 * (1.0 - indistinguishability(p.gamma, p.gamma_d));
        let gap = rep.conditional - rep.first_order.unwrap();
        prop_assert!(gap >= -1e-12);
        prop_assert!(gap <= x * x / 4.0 + 1e-12);
    }

    #[test]
    fn overhauser_is_harmless(d in -1e3f64..1e3, t in target(1000)) {
        prop_assert_eq!(kernel_fidelity(&kernel_overhauser(d), t), 1.0);
    }

    #[test]
    fn ghz_beats_cluster_under_dephasing(gamma in 0.1f64..10.0, gd in 0.0f64..5.0, n in 1usize..200) {
        let k = kernel_phonon(gamma, gd).unwrap();
        let g = kernel_fidelity(&k, TargetState::ghz(n).unwrap());
        let c = kernel_fidelity(&k, TargetState::cluster(n).unwrap());
        prop_assert!(g >= c - 1e-15);
    }

    #[test]
    fn success_never_grows(b in betas(), c in collection(), kind in any::<bool>()) {
        let p = derive_detection_probs(&b, &c);
        let m = transfer_matrix(&p, if kind { TargetKind::Ghz } else { TargetKind::Cluster });
        let cs = m.column_sums();
        prop_assert!(cs[0] <= 1.0 + 1e-12 && cs[1] <= 1.0 + 1e-12);
        let mut prev = 1.0;
        for n in 1..30 {
            let s = success_probability(&m, n);
            prop_assert!(s <= prev + 1e-15);
            prev = s;
        }
    }

    #[test]
    fn filters_raise_first_order(b in small_betas(), n in 1usize..50) {
        prop_assume!(b.beta_perp > 0.0);
        prop_assert!(branching_first_order(n, &b, true) >= branching_first_order(n, &b, false));
    }

    #[test]
    fn filtered_branching_first_order_where_high(b in small_betas(), t in target(30)) {
        let c = CollectionParams::perfect_filter();
        let fo = branching_first_order(t.n_photons, &b, true);
        prop_assume!(fo >= 0.9);
        let r = branching_fidelity(&derive_detection_probs(&b, &c), t).unwrap();
        prop_assert!((r.exact.conditional - fo).abs() <= 0.02, "{} vs {}", r.exact.conditional, fo);
    }

    #[test]
    fn excitation_factors_are_ordered(t in 0.01f64..0.3, gamma in 0.5f64..6.0, ghz in 8.0f64..64.0, c in collection()) {
        let p = EmitterParams::new(gamma, 0.0, ghz_to_rad(ghz), 10.0).unwrap();
        let a = excitation_amplitudes(&PulseSpec::gaussian(t).unwrap(), &p, 2000);
        prop_assume!(a.is_ok());
        let a = a.unwrap();
        prop_assert!(a.resonant_norm() <= 1.0 + 1e-6);
        prop_assert!(a.detuned_norm() <= 1.0 + 1e-6);
        let d = detection_factors(&a, &c);
        prop_assert!(d.d1 <= d.d2 + 1e-15);
        prop_assert!(d.d2 + d.d3 <= 1.0 + 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn enumeration_matches_transfer_evaluation(b in betas(), c in collection(), t in target(3)) {
        let p = derive_detection_probs(&b, &c);
        let s = success_probability(&transfer_matrix(&p, t.kind), t.n_photons);
        prop_assume!(s > 1e-6);
        let r = branching_fidelity(&p, t).unwrap();
        let o = branching_oracle(&p, t).unwrap();
        prop_assert!((r.exact.conditional - o.fidelity).abs() < 1e-10);
        prop_assert!((r.exact.success - o.success).abs() < 1e-10);
    }

    #[test]
    fn rounds_preserve_norm(b in betas(), c in collection(), t in target(3)) {
        let p = derive_detection_probs(&b, &c);
        let s = run_protocol(&branching_round(&p, t.kind), t.n_photons).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decomposition_holds(b in betas(), c in collection()) {
        let p = derive_detection_probs(&b, &c);
        let r = decomposition_check(&p);
        prop_assert!(r.residual <= 1e-12);
        prop_assert!((r.error_probability - p.p_perp_prime * p.p_par).abs() < 1e-15);
    }

    #[test]
    fn kernel_oracle_agrees(gamma in 0.5f64..5.0, r in 0.0f64..0.2, t in target(5)) {
        let p = EmitterParams::new(gamma, gamma * r, 10.0, 10.0).unwrap();
        let k = kernel_fidelity(&kernel_phonon(p.gamma, p.gamma_d).unwrap(), t);
        prop_assert!((phonon_oracle(&p, t).unwrap() - k).abs() < 1e-10);
    }
}
