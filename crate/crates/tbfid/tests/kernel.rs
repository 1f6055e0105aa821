use tbfid::kernel::*;
use tbfid::model::{EmitterParams, TargetState};
use tbfid::C64;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[test]
fn ideal_kernel_is_perfect() {
    assert_eq!(
        kernel_fidelity(&Kernel::ideal(), TargetState::ghz(7).unwrap()),
        1.0
    );
    assert_eq!(
        kernel_fidelity(&Kernel::ideal(), TargetState::cluster(7).unwrap()),
        1.0
    );
}

#[test]
fn phonon_kernel_values() {
    let k = kernel_phonon(1.0, 0.05).unwrap();
    let i: f64 = 1.0 / 1.1;
    let g = kernel_fidelity(&k, TargetState::ghz(10).unwrap());
    let cl = kernel_fidelity(&k, TargetState::cluster(10).unwrap());
    assert!((g - (1.0 + i.powi(10)) / 2.0).abs() < 1e-12);
    assert!((cl - ((1.0 + i) / 2.0).powi(10)).abs() < 1e-12);
    assert!((g - 0.6928).abs() < 1e-4);
    assert!((cl - 0.6280).abs() < 1e-4);
}

#[test]
fn indistinguishability_values() {
    assert_eq!(kernel_phonon(2.0, 0.0).unwrap(), Kernel::ideal());
    assert!((indistinguishability(3.2, 0.06) - 0.96386).abs() < 1e-5);
    assert_eq!(indistinguishability(1.0, 0.5), 0.5);
}

#[test]
fn overhauser_kernel_is_all_ones() {
    for d in [0.0, 5.0, -12.7] {
        assert_eq!(kernel_overhauser(d), Kernel::ideal());
        for n in 1..20 {
            assert_eq!(
                kernel_fidelity(&kernel_overhauser(d), TargetState::ghz(n).unwrap()),
                1.0
            );
        }
    }
}

#[test]
fn phonon_fidelity_reports() {
    let p = EmitterParams::new(1.0, 0.01, 10.0, 10.0).unwrap();
    let r = phonon_fidelity(&p, TargetState::ghz(5).unwrap()).unwrap();
    let want = (1.0 + (1.0f64 / 1.02).powi(5)) / 2.0;
    assert!((r.conditional - want).abs() < 1e-12);
    assert!((r.conditional - 0.9529).abs() < 1e-4);
    assert_eq!(r.success, 1.0);

    let p = EmitterParams::new(3.2, 0.06, 10.0, 10.0).unwrap();
    let r = phonon_fidelity(&p, TargetState::ghz(5).unwrap()).unwrap();
    assert!((r.conditional - 0.9160).abs() < 1e-4);
    let i = 3.2 / 3.32;
    assert!((r.first_order.unwrap() - (1.0 - 5.0 * (1.0 - i) / 2.0)).abs() < 1e-12);

    let p = EmitterParams::new(7.0, 0.0, 10.0, 10.0).unwrap();
    assert_eq!(
        phonon_fidelity(&p, TargetState::cluster(1).unwrap())
            .unwrap()
            .conditional,
        1.0
    );
}

#[test]
fn kernel_validation() {
    let z = c(0.0);
    assert!(Kernel::new([[c(1.0), c(0.5)], [c(0.4), c(1.0)]]).is_err());
    assert!(Kernel::new([[c(1.0), c(1.5)], [c(1.5), c(1.0)]]).is_err());
    assert!(Kernel::new([[C64::new(1.0, 0.1), z], [z, c(1.0)]]).is_err());
    assert!(Kernel::new([[c(1.0), C64::new(0.0, 0.5)], [C64::new(0.0, -0.5), c(1.0)]]).is_ok());
    assert!(Kernel::symmetric(1.01).is_err());
    assert!(kernel_phonon(0.0, 0.1).is_err());
    assert!(kernel_phonon(1.0, -0.1).is_err());
}

#[test]
fn complex_kernel_takes_real_part() {
    let h = C64::new(0.0, 0.5);
    let k = Kernel::new([[c(1.0), h], [h.conj(), c(1.0)]]).unwrap();
    // ¼(2 + (i/2)² + (−i/2)²) at N = 2
    let f = kernel_fidelity(&k, TargetState::ghz(2).unwrap());
    assert!((f - 0.25 * (2.0 - 0.5)).abs() < 1e-15);
}
