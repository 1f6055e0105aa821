//! Physical parameters, unit conventions and detection probabilities.
//!
//! Rates are stored in 1/ns and detunings in rad/ns. Files and command-line
//! flags take detunings in GHz; `Δ[rad/ns] = 2π·Δ[GHz]`.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance on probability sums.
pub const SUM_TOL: f64 = 1e-12;
/// Sums off by more than [`SUM_TOL`] but at most this much are renormalized.
pub const RENORM_TOL: f64 = 1e-9;
/// Largest photon number accepted by the analytic formulas.
pub const MAX_PHOTONS: usize = 1_000_000;

fn check_unit(field: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::validation(field, format!("{x} is not in [0, 1]")));
    }
    Ok(())
}

pub fn ghz_to_rad(ghz: f64) -> f64 {
    2.0 * PI * ghz
}

pub fn rad_to_ghz(rad: f64) -> f64 {
    rad / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Radiative decay rate, 1/ns.
    pub gamma: f64,
    /// Pure dephasing rate, 1/ns.
    pub gamma_d: f64,
    /// Detuning of the off-resonant transition, rad/ns.
    pub delta: f64,
    /// Full time-bin period, ns.
    pub t_bin: f64,
}

impl EmitterParams {
    pub fn new(gamma: f64, gamma_d: f64, delta: f64, t_bin: f64) -> Result<Self> {
        let p = EmitterParams {
            gamma,
            gamma_d,
            delta,
            t_bin,
        };
        p.validate()?;
        for w in p.warnings() {
            log::warn!("{w}");
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::validation("gamma", "must be positive"));
        }
        if !(self.gamma_d >= 0.0 && self.gamma_d.is_finite()) {
            return Err(Error::validation("gamma_d", "must be nonnegative"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::validation("delta", "must be positive"));
        }
        if !(self.t_bin > 0.0 && self.t_bin.is_finite()) {
            return Err(Error::validation("t_bin", "must be positive"));
        }
        Ok(())
    }

    /// Soft violations. The formulas assume a bin much longer than the lifetime.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.gamma * self.t_bin < 10.0 {
            w.push(format!(
                "gamma*t_bin = {:.3} < 10; photons may leak out of their time bin",
                self.gamma * self.t_bin
            ));
        }
        w
    }

    /// Δ/γ.
    pub fn delta_tilde(&self) -> f64 {
        self.delta / self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchingParams {
    pub beta_par: f64,
    pub beta_perp: f64,
    pub beta_par_prime: f64,
    pub beta_perp_prime: f64,
}

impl BranchingParams {
    /// Validates ranges and the unit sum. Sums off by at most 1e-9 are rescaled.
    pub fn new(
        beta_par: f64,
        beta_perp: f64,
        beta_par_prime: f64,
        beta_perp_prime: f64,
    ) -> Result<Self> {
        check_unit("beta_par", beta_par)?;
        check_unit("beta_perp", beta_perp)?;
        check_unit("beta_par_prime", beta_par_prime)?;
        check_unit("beta_perp_prime", beta_perp_prime)?;
        let s = beta_par + beta_perp + beta_par_prime + beta_perp_prime;
        let dev = (s - 1.0).abs();
        if dev <= SUM_TOL {
            return Ok(BranchingParams {
                beta_par,
                beta_perp,
                beta_par_prime,
                beta_perp_prime,
            });
        }
        if dev <= RENORM_TOL {
            log::warn!("beta sum is {s}; renormalizing");
            return Ok(BranchingParams {
                beta_par: beta_par / s,
                beta_perp: beta_perp / s,
                beta_par_prime: beta_par_prime / s,
                beta_perp_prime: beta_perp_prime / s,
            });
        }
        Err(Error::validation(
            "beta",
            format!("probabilities sum to {s}, expected 1"),
        ))
    }

    /// Fixes `beta_par` so the four probabilities sum to one.
    pub fn with_closure(beta_perp: f64, beta_par_prime: f64, beta_perp_prime: f64) -> Result<Self> {
        let beta_par = 1.0 - beta_perp - beta_par_prime - beta_perp_prime;
        Self::new(beta_par, beta_perp, beta_par_prime, beta_perp_prime)
    }

    /// No loss and no diagonal decay.
    pub fn ideal() -> Self {
        BranchingParams {
            beta_par: 1.0,
            beta_perp: 0.0,
            beta_par_prime: 0.0,
            beta_perp_prime: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectionParams {
    /// Overall setup efficiency.
    pub eta: f64,
    /// Filter transmission of resonant photons.
    pub xi2: f64,
    /// Filter transmission of off-resonant photons.
    pub xi3: f64,
}

impl CollectionParams {
    pub fn new(eta: f64, xi2: f64, xi3: f64) -> Result<Self> {
        check_unit("eta", eta)?;
        check_unit("xi2", xi2)?;
        check_unit("xi3", xi3)?;
        if xi3 > xi2 {
            return Err(Error::validation(
                "xi3",
                format!("off-resonant transmission {xi3} exceeds resonant transmission {xi2}"),
            ));
        }
        Ok(CollectionParams { eta, xi2, xi3 })
    }

    /// Unit efficiency, no filter.
    pub fn unfiltered() -> Self {
        CollectionParams {
            eta: 1.0,
            xi2: 1.0,
            xi3: 1.0,
        }
    }

    /// Unit efficiency, off-resonant photons fully rejected.
    pub fn perfect_filter() -> Self {
        CollectionParams {
            eta: 1.0,
            xi2: 1.0,
            xi3: 0.0,
        }
    }

    pub fn eta2(&self) -> f64 {
        self.eta * self.xi2
    }

    pub fn eta3(&self) -> f64 {
        self.eta * self.xi3
    }

    pub fn is_filtered(&self) -> bool {
        self.xi3 < self.xi2
    }
}

/// Per-round probabilities of detecting (`p_par`, `p_perp`) or losing
/// (`p_par_prime`, `p_perp_prime`) the photon of each decay path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionProbs {
    pub p_par: f64,
    pub p_perp: f64,
    pub p_par_prime: f64,
    pub p_perp_prime: f64,
}

impl DetectionProbs {
    pub fn new(p_par: f64, p_perp: f64, p_par_prime: f64, p_perp_prime: f64) -> Result<Self> {
        let b = BranchingParams::new(p_par, p_perp, p_par_prime, p_perp_prime)?;
        Ok(DetectionProbs {
            p_par: b.beta_par,
            p_perp: b.beta_perp,
            p_par_prime: b.beta_par_prime,
            p_perp_prime: b.beta_perp_prime,
        })
    }

    pub fn ideal() -> Self {
        DetectionProbs {
            p_par: 1.0,
            p_perp: 0.0,
            p_par_prime: 0.0,
            p_perp_prime: 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.p_par + self.p_perp + self.p_par_prime + self.p_perp_prime
    }
}

pub fn derive_detection_probs(b: &BranchingParams, c: &CollectionParams) -> DetectionProbs {
    let (eta2, eta3) = (c.eta2(), c.eta3());
    DetectionProbs {
        p_par: eta2 * b.beta_par,
        p_perp: eta3 * b.beta_perp,
        p_par_prime: b.beta_par_prime + (1.0 - eta2) * b.beta_par,
        p_perp_prime: b.beta_perp_prime + (1.0 - eta3) * b.beta_perp,
    }
}

/// `(β∥+β∥′)/(β⊥+β⊥′)`; `f64::INFINITY` when there is no diagonal decay.
pub fn branching_ratio(b: &BranchingParams) -> f64 {
    let den = b.beta_perp + b.beta_perp_prime;
    if den == 0.0 {
        return f64::INFINITY;
    }
    (b.beta_par + b.beta_par_prime) / den
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Ghz,
    Cluster,
}

impl std::fmt::Display for TargetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetKind::Ghz => write!(f, "ghz"),
            TargetKind::Cluster => write!(f, "cluster"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetState {
    pub kind: TargetKind,
    pub n_photons: usize,
}

impl TargetState {
    pub fn new(kind: TargetKind, n_photons: usize) -> Result<Self> {
        if n_photons == 0 {
            return Err(Error::validation("n_photons", "must be at least 1"));
        }
        if n_photons > MAX_PHOTONS {
            return Err(Error::validation(
                "n_photons",
                format!("{n_photons} exceeds the cap {MAX_PHOTONS}"),
            ));
        }
        Ok(TargetState { kind, n_photons })
    }

    pub fn ghz(n: usize) -> Result<Self> {
        Self::new(TargetKind::Ghz, n)
    }

    pub fn cluster(n: usize) -> Result<Self> {
        Self::new(TargetKind::Cluster, n)
    }
}

/// Conditional fidelity with the postselection data it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Fidelity before postselection.
    pub unconditional: f64,
    /// Probability that every round yields a detected photon.
    pub success: f64,
    /// `unconditional / success`.
    pub conditional: f64,
    /// Leading-order expansion of `conditional`, where one exists.
    pub first_order: Option<f64>,
}

impl FidelityReport {
    pub fn new(unconditional: f64, success: f64, first_order: Option<f64>) -> Result<Self> {
        if !(success > 0.0) {
            return Err(Error::Postselection(format!(
                "success probability is {success}"
            )));
        }
        Ok(FidelityReport {
            unconditional,
            success,
            conditional: unconditional / success,
            first_order,
        })
    }

    /// A channel without loss: conditional and unconditional coincide.
    pub fn lossless(fidelity: f64, first_order: Option<f64>) -> Self {
        FidelityReport {
            unconditional: fidelity,
            success: 1.0,
            conditional: fidelity,
            first_order,
        }
    }
}

/// Flat parameter file. Every field is optional so a file can hold just the
/// blocks a subcommand needs; command-line flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_d_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_bin_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_par: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_perp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_par_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_perp_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi3: Option<f64>,
}

/// Time bin used when a file gives none: long enough for any γ above 1/ns.
pub const DEFAULT_T_BIN_NS: f64 = 10.0;

fn need(v: Option<f64>, field: &str) -> Result<f64> {
    v.ok_or_else(|| Error::validation(field, "missing"))
}

impl ParamFile {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::validation("params", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    pub fn emitter(&self) -> Result<EmitterParams> {
        EmitterParams::new(
            need(self.gamma_ns, "gamma_ns")?,
            self.gamma_d_ns.unwrap_or(0.0),
            ghz_to_rad(need(self.delta_ghz, "delta_ghz")?),
            self.t_bin_ns.unwrap_or(DEFAULT_T_BIN_NS),
        )
    }

    /// Missing `beta_par` is filled in so the four probabilities sum to one.
    pub fn branching(&self) -> Result<BranchingParams> {
        let perp = self.beta_perp.unwrap_or(0.0);
        let par_p = self.beta_par_prime.unwrap_or(0.0);
        let perp_p = self.beta_perp_prime.unwrap_or(0.0);
        match self.beta_par {
            Some(par) => BranchingParams::new(par, perp, par_p, perp_p),
            None => BranchingParams::with_closure(perp, par_p, perp_p),
        }
    }

    pub fn collection(&self) -> Result<CollectionParams> {
        let xi2 = self.xi2.unwrap_or(1.0);
        CollectionParams::new(self.eta.unwrap_or(1.0), xi2, self.xi3.unwrap_or(xi2))
    }
}
