//! Fidelity engine for errors that never flip the spin.
//!
//! Such errors enter only through a 2×2 overlap kernel `k[u][v]` between the
//! early (`u = 0`) and late (`u = 1`) single-round emissions. GHZ and cluster
//! fidelities are then closed-form functions of the kernel.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EmitterParams, FidelityReport, TargetKind, TargetState, C64};

const HERM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kernel {
    k: [[C64; 2]; 2],
}

impl Kernel {
    pub fn new(k: [[C64; 2]; 2]) -> Result<Self> {
        for (u, row) in k.iter().enumerate() {
            let d = row[u];
            if d.im.abs() > HERM_TOL || d.re < -HERM_TOL || d.re > 1.0 + HERM_TOL {
                return Err(Error::validation(
                    "kernel",
                    format!("diagonal entry {u} is {d}, expected real in [0, 1]"),
                ));
            }
        }
        if (k[1][0] - k[0][1].conj()).norm() > HERM_TOL {
            return Err(Error::validation("kernel", "not Hermitian"));
        }
        if k[0][1].norm() > (k[0][0].re * k[1][1].re).sqrt() + HERM_TOL {
            return Err(Error::validation("kernel", "violates Cauchy-Schwarz"));
        }
        Ok(Kernel { k })
    }

    /// Unit diagonal with real off-diagonal overlap `i`.
    pub fn symmetric(i: f64) -> Result<Self> {
        let one = C64::new(1.0, 0.0);
        let x = C64::new(i, 0.0);
        Self::new([[one, x], [x, one]])
    }

    pub fn ideal() -> Self {
        let one = C64::new(1.0, 0.0);
        Kernel {
            k: [[one, one], [one, one]],
        }
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.k
    }
}

fn clamp_unit(x: f64) -> f64 {
    if x < 0.0 && x > -HERM_TOL {
        0.0
    } else if x > 1.0 && x < 1.0 + HERM_TOL {
        1.0
    } else {
        x
    }
}

/// Fidelity of the `N`-photon target built from rounds with kernel `k`.
pub fn kernel_fidelity(k: &Kernel, target: TargetState) -> f64 {
    let n = target.n_photons as i32;
    let f = match target.kind {
        TargetKind::Ghz => {
            let mut s = C64::new(0.0, 0.0);
            for row in &k.k {
                for &x in row {
                    s += x.powi(n);
                }
            }
            0.25 * s.re
        }
        TargetKind::Cluster => {
            let s: C64 = k.k.iter().flatten().sum();
            (0.25 * s.re).powi(n)
        }
    };
    clamp_unit(f)
}

/// Photon indistinguishability `γ/(γ+2γ_d)`.
pub fn indistinguishability(gamma: f64, gamma_d: f64) -> f64 {
    gamma / (gamma + 2.0 * gamma_d)
}

pub fn kernel_phonon(gamma: f64, gamma_d: f64) -> Result<Kernel> {
    if !(gamma > 0.0) {
        return Err(Error::validation("gamma", "must be positive"));
    }
    if !(gamma_d >= 0.0) {
        return Err(Error::validation("gamma_d", "must be nonnegative"));
    }
    Kernel::symmetric(indistinguishability(gamma, gamma_d))
}

/// The Overhauser phase appears as `e^{iΔ21(t′−t″)}` under a delta function
/// in time, so every entry is exactly one whatever `delta21` is.
pub fn kernel_overhauser(_delta21: f64) -> Kernel {
    Kernel::ideal()
}

/// Exact and first-order fidelity under phonon pure dephasing.
pub fn phonon_fidelity(params: &EmitterParams, target: TargetState) -> Result<FidelityReport> {
    let k = kernel_phonon(params.gamma, params.gamma_d)?;
    let i = indistinguishability(params.gamma, params.gamma_d);
    let first = 1.0 - target.n_photons as f64 * (1.0 - i) / 2.0;
    Ok(FidelityReport::lossless(
        kernel_fidelity(&k, target),
        Some(first),
    ))
}
