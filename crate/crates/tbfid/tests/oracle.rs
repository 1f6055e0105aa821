use std::f64::consts::FRAC_1_SQRT_2;

use tbfid::kernel::indistinguishability;
use tbfid::model::*;
use tbfid::oracle::*;
use tbfid::Error;

fn lossy_probs() -> DetectionProbs {
    let b = BranchingParams::with_closure(0.05, 0.0025, 0.0025).unwrap();
    derive_detection_probs(&b, &CollectionParams::unfiltered())
}

fn bins(label: &Label) -> Vec<ModeSymbol> {
    label.rounds().iter().flat_map(|m| m.symbols()).collect()
}

#[test]
fn ideal_ghz_has_two_terms() {
    for n in 1..=8 {
        let s = run_protocol(&ideal_round(TargetKind::Ghz), n).unwrap();
        assert_eq!(s.len(), 2);
        for (_, a) in s.iter() {
            assert!((a.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
        }
        let r = conditional_fidelity(&s, TargetState::ghz(n).unwrap()).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12 && (r.success - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ideal_ghz_single_round() {
    let s = run_protocol(&ideal_round(TargetKind::Ghz), 1).unwrap();
    let terms: Vec<(u8, Vec<ModeSymbol>)> = s.iter().map(|(l, _)| (l.spin, bins(l))).collect();
    // spin 1 with an early photon and spin 0 with a late one
    assert!(terms.contains(&(1, vec![ModeSymbol::DetResEarly])));
    assert!(terms.contains(&(0, vec![ModeSymbol::DetResLate])));
}

#[test]
fn ideal_cluster_single_round() {
    let s = run_protocol(&ideal_round(TargetKind::Cluster), 1).unwrap();
    assert_eq!(s.len(), 4);
    let mut neg = 0;
    for (l, a) in s.iter() {
        assert!((a.norm() - 0.5).abs() < 1e-12);
        if a.re < 0.0 {
            neg += 1;
            assert_eq!((l.spin, bins(l)), (1, vec![ModeSymbol::DetResLate]));
        }
    }
    assert_eq!(neg, 1);
}

#[test]
fn ideal_cluster_passes_stabilizers() {
    for n in 1..=8 {
        let g = ideal_cluster_stabilizers(n).unwrap();
        assert_eq!(g.len(), n + 1);
        assert!(g.iter().all(|x| (x - 1.0).abs() < 1e-12), "n={n}: {g:?}");
    }
    let s = run_protocol(&ideal_round(TargetKind::Cluster), 4).unwrap();
    assert_eq!(s.len(), 2 * 16);
}

#[test]
fn two_photon_cluster_in_logical_basis() {
    let s = run_protocol(&ideal_round(TargetKind::Cluster), 2).unwrap();
    let v = logical_vector(&s).unwrap();
    assert_eq!(v.len(), 8);
    // Z-basis weights of a three-qubit linear cluster state are uniform
    for a in &v {
        assert!((a.norm_sqr() - 0.125).abs() < 1e-12);
    }
}

#[test]
fn ghz_is_not_a_cluster_state() {
    let s = run_protocol(&ideal_round(TargetKind::Ghz), 2).unwrap();
    let g = stabilizer_check(&s).unwrap();
    assert!((g[1] - 1.0).abs() > 0.5);
}

#[test]
fn lossy_state_has_no_logical_form() {
    let s = run_protocol(&branching_round(&lossy_probs(), TargetKind::Cluster), 2).unwrap();
    assert!(matches!(logical_vector(&s), Err(Error::Mapping(_))));
}

#[test]
fn branching_round_weights() {
    let p = lossy_probs();
    for kind in [TargetKind::Ghz, TargetKind::Cluster] {
        let op = branching_round(&p, kind);
        let w = op.coherent_weights();
        assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
    }
    let op = branching_round(&DetectionProbs::ideal(), TargetKind::Ghz);
    let s = run_protocol(&op, 3).unwrap();
    let r = conditional_fidelity(&s, TargetState::ghz(3).unwrap()).unwrap();
    assert!((r.fidelity - 1.0).abs() < 1e-12);
}

#[test]
fn one_branching_round_has_fourteen_terms() {
    let s = run_protocol(&branching_round(&lossy_probs(), TargetKind::Ghz), 1).unwrap();
    assert_eq!(s.len(), 14);
    let amps: Vec<f64> = s.iter().map(|(_, a)| a.norm_sqr()).collect();
    let p = lossy_probs();
    // the resonant detected terms carry p∥/2
    assert_eq!(
        amps.iter()
            .filter(|w| (*w - p.p_par / 2.0).abs() < 1e-15)
            .count(),
        2
    );
}

#[test]
fn norm_is_preserved() {
    let p = lossy_probs();
    for kind in [TargetKind::Ghz, TargetKind::Cluster] {
        for n in 1..=4 {
            let s = run_protocol(&branching_round(&p, kind), n).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
    let s = run_protocol(&phonon_round(0.8, TargetKind::Cluster), 5).unwrap();
    assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn kernel_oracles() {
    let p = EmitterParams::new(1.0, 0.05, 10.0, 10.0).unwrap();
    let i = indistinguishability(1.0, 0.05);
    let f = phonon_oracle(&p, TargetState::ghz(3).unwrap()).unwrap();
    assert!((f - (1.0 + i.powi(3)) / 2.0).abs() < 1e-10);
    let f = phonon_oracle(&p, TargetState::cluster(3).unwrap()).unwrap();
    assert!((f - ((1.0 + i) / 2.0).powi(3)).abs() < 1e-10);
    let clean = EmitterParams::new(1.0, 0.0, 10.0, 10.0).unwrap();
    assert!((phonon_oracle(&clean, TargetState::ghz(4).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    for d in [0.0, 3.3, -40.0] {
        for t in [
            TargetState::ghz(4).unwrap(),
            TargetState::cluster(4).unwrap(),
        ] {
            assert!((overhauser_oracle(d, 10.0, t).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn overhauser_round_is_phased() {
    let op = overhauser_round(1.3, 10.0, TargetKind::Ghz);
    let ideal = ideal_round(TargetKind::Ghz);
    assert_eq!(op.branches.len(), ideal.branches.len());
    assert!(op.branches.iter().any(|b| b.amp.im.abs() > 1e-3));
}

#[test]
fn capacity_and_round_limits() {
    let op = branching_round(&lossy_probs(), TargetKind::Cluster);
    assert!(matches!(
        run_rounds_capped(&[op.clone(), op.clone(), op.clone()], 100),
        Err(Error::Capacity { .. })
    ));
    assert!(run_protocol(&op, MAX_ROUNDS + 1).is_err());
}

#[test]
fn zero_detection_is_undefined() {
    let p = DetectionProbs::new(0.0, 0.0, 0.6, 0.4).unwrap();
    assert!(matches!(
        branching_oracle(&p, TargetState::ghz(2).unwrap()),
        Err(Error::Postselection(_))
    ));
}

#[test]
fn retained_model_matches_paper_formulas() {
    let p = lossy_probs();
    let (a, b, b_) = (p.p_par, p.p_perp, p.p_perp_prime);
    for n in 1..=4i32 {
        let r = retained_oracle(&p, TargetState::ghz(n as usize).unwrap()).unwrap();
        let want = ((a + b_ * b).powi(n) + a.powi(n) * (3.0 + b_)) / 4.0;
        assert!((r.unconditional - want).abs() < 1e-10);
        let r = retained_oracle(&p, TargetState::cluster(n as usize).unwrap()).unwrap();
        let g = a + b * b_ / 4.0;
        assert!((r.unconditional - g.powi(n - 1) * (g + a * b_ / 4.0)).abs() < 1e-10);
    }
}

#[test]
fn decomposition_identity() {
    let p = lossy_probs();
    let r = decomposition_check(&p);
    assert!(r.residual <= 1e-12);
    assert!((r.error_probability - p.p_perp_prime * p.p_par).abs() < 1e-15);
    let q = DetectionProbs::new(0.9, 0.1, 0.0, 0.0).unwrap();
    assert_eq!(decomposition_check(&q).error_probability, 0.0);
}

#[test]
fn modes_serialize_as_symbols() {
    let m = Modes::of(&[ModeSymbol::DetDiagLate, ModeSymbol::LostParEarly]);
    assert_eq!(m.detected_count(), 1);
    let j = serde_json::to_string(&m).unwrap();
    assert_eq!(j, r#"["det_diag_late","lost_par_early"]"#);
    assert_eq!(ModeSymbol::DetDiagEarly.detected_bin(), Some(0));
    assert!(!ModeSymbol::PhononLate.is_detected());
}
