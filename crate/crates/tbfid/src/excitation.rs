//! Excitation errors: emission while the pulse is still on, and driving of the
//! off-resonant transition.
//!
//! Both branches of the emitter are treated as driven two-level systems in
//! dimensionless time `τ = γt`:
//!
//! ```text
//! dc_e/dτ = i(Ω̃/2)c_g − (1/2 + iΔ̃)c_e
//! dc_g/dτ = i(Ω̃/2)c_e
//! ```
//!
//! A photon emitted at `τ_e` leaves the pair `(φ_g, φ_e)` which obeys the same
//! equations from `φ_g = i·e^{−iΔ̃τ_e}c_e(τ_e)`, `φ_e = 0`. The weights
//! `Φ = ∫dτ_e |φ(τ_p, τ_e)|²` are what the detection factors need.
//!
//! The system is linear, so one RK4 step is a 2×2 matrix `S_k`. Propagators to
//! the end of the pulse are accumulated backwards, `U_k = U_{k+1}·S_k`, which
//! gives every `φ(τ_p, τ_k)` in O(n) instead of one integration per `τ_k`.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CollectionParams, EmitterParams, TargetKind, TargetState, C64};

pub const DEFAULT_GRID: usize = 4000;
pub const MIN_GRID: usize = 200;
/// Largest accepted change between grid `n` and `2n`.
pub const CONVERGENCE_LIMIT: f64 = 1e-6;
pub const DEFAULT_TRUNCATION: f64 = 3.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum PulseShape {
    /// Gaussian cut to a window of `truncation·t_fwhm`, centred in it.
    Gaussian {
        t_fwhm: f64,
        truncation: f64,
    },
    Square {
        duration: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    #[serde(flatten)]
    pub shape: PulseShape,
    /// Pulse area on the resonant transition, rad.
    pub area: f64,
}

impl PulseSpec {
    pub fn gaussian(t_fwhm: f64) -> Result<Self> {
        let p = PulseSpec {
            shape: PulseShape::Gaussian {
                t_fwhm,
                truncation: DEFAULT_TRUNCATION,
            },
            area: PI,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn square(duration: f64) -> Result<Self> {
        let p = PulseSpec {
            shape: PulseShape::Square { duration },
            area: PI,
        };
        p.validate()?;
        Ok(p)
    }

    /// Square pulse of length `√3π/Δ`: a 2π rotation on the off-resonant
    /// transition while the resonant one gets π.
    pub fn square_optimal(delta: f64) -> Result<Self> {
        Self::square(3f64.sqrt() * PI / delta)
    }

    pub fn with_area(mut self, area: f64) -> Self {
        self.area = area;
        self
    }

    pub fn with_truncation(mut self, factor: f64) -> Result<Self> {
        if let PulseShape::Gaussian { truncation, .. } = &mut self.shape {
            *truncation = factor;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            PulseShape::Gaussian { t_fwhm, truncation } => {
                if !(t_fwhm > 0.0 && t_fwhm.is_finite()) {
                    return Err(Error::validation("t_fwhm", "must be positive"));
                }
                if !(truncation > 0.0 && truncation.is_finite()) {
                    return Err(Error::validation("truncation", "must be positive"));
                }
            }
            PulseShape::Square { duration } => {
                if !(duration > 0.0 && duration.is_finite()) {
                    return Err(Error::validation("duration", "must be positive"));
                }
            }
        }
        if !self.area.is_finite() {
            return Err(Error::validation("area", "must be finite"));
        }
        Ok(())
    }

    /// Total pulse window, ns.
    pub fn window_ns(&self) -> f64 {
        match self.shape {
            PulseShape::Gaussian { t_fwhm, truncation } => t_fwhm * truncation,
            PulseShape::Square { duration } => duration,
        }
    }

    /// Rabi frequency profile in units of `γ`.
    pub fn profile(&self, gamma: f64) -> Profile {
        match self.shape {
            PulseShape::Gaussian { t_fwhm, truncation } => {
                let tau_fwhm = gamma * t_fwhm;
                let tau_p = truncation * tau_fwhm;
                let s = 4.0 * LN_2 / (tau_fwhm * tau_fwhm);
                // area of the truncated window, not of the full Gaussian
                let norm = (PI / s).sqrt() * libm::erf(s.sqrt() * tau_p / 2.0);
                Profile {
                    tau_p,
                    kind: ProfileKind::Gaussian {
                        peak: self.area / norm,
                        s,
                    },
                }
            }
            PulseShape::Square { duration } => {
                let tau_p = gamma * duration;
                Profile {
                    tau_p,
                    kind: ProfileKind::Flat(self.area / tau_p),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProfileKind {
    Gaussian { peak: f64, s: f64 },
    Flat(f64),
}

/// `Ω̃(τ)` on `[0, τ_p]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub tau_p: f64,
    kind: ProfileKind,
}

impl Profile {
    pub fn omega(&self, tau: f64) -> f64 {
        match self.kind {
            ProfileKind::Gaussian { peak, s } => {
                let x = tau - self.tau_p / 2.0;
                peak * (-s * x * x).exp()
            }
            ProfileKind::Flat(w) => w,
        }
    }
}

type M2 = [[C64; 2]; 2];

fn mat_mul(a: &M2, b: &M2) -> M2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat_add(a: &M2, b: &M2, scale: C64) -> M2 {
    let mut r = *a;
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] += scale * b[i][j];
        }
    }
    r
}

const ID: M2 = [
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
];

/// Generator in the `(c_g, c_e)` basis.
fn generator(omega: f64, delta_tilde: f64) -> M2 {
    let drive = C64::new(0.0, omega / 2.0);
    [
        [C64::new(0.0, 0.0), drive],
        [drive, C64::new(-0.5, -delta_tilde)],
    ]
}

/// Classical RK4 step of `y' = A(τ)y` written as a matrix.
fn rk4_step(p: &Profile, delta_tilde: f64, tau: f64, h: f64) -> M2 {
    let a0 = generator(p.omega(tau), delta_tilde);
    let am = generator(p.omega(tau + h / 2.0), delta_tilde);
    let a1 = generator(p.omega(tau + h), delta_tilde);
    let half = C64::new(h / 2.0, 0.0);
    let k1 = a0;
    let k2 = mat_mul(&am, &mat_add(&ID, &k1, half));
    let k3 = mat_mul(&am, &mat_add(&ID, &k2, half));
    let k4 = mat_mul(&a1, &mat_add(&ID, &k3, C64::new(h, 0.0)));
    let mut s = ID;
    let w = C64::new(h / 6.0, 0.0);
    s = mat_add(&s, &k1, w);
    s = mat_add(&s, &k2, w * 2.0);
    s = mat_add(&s, &k3, w * 2.0);
    mat_add(&s, &k4, w)
}

/// End-of-pulse state of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevel {
    pub c_g: C64,
    pub c_e: C64,
    /// `∫dτ_e |φ_g(τ_p, τ_e)|²`
    pub phi_g: f64,
    /// `∫dτ_e |φ_e(τ_p, τ_e)|²`
    pub phi_e: f64,
}

impl TwoLevel {
    /// `|c_g|² + |c_e|² + Φ_g + Φ_e`; one up to two-photon terms.
    pub fn norm(&self) -> f64 {
        self.c_g.norm_sqr() + self.c_e.norm_sqr() + self.phi_g + self.phi_e
    }

    fn max_diff(&self, o: &TwoLevel) -> f64 {
        [
            (self.c_g.norm_sqr() - o.c_g.norm_sqr()).abs(),
            (self.c_e.norm_sqr() - o.c_e.norm_sqr()).abs(),
            (self.phi_g - o.phi_g).abs(),
            (self.phi_e - o.phi_e).abs(),
        ]
        .into_iter()
        // NaN from a blown-up solve must not be dropped by `max`
        .fold(0.0, |m, d| {
            if d.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(d)
            }
        })
    }
}

/// Single solve on a fixed grid of `n` steps.
pub fn solve_on_grid(p: &Profile, delta_tilde: f64, n: usize) -> TwoLevel {
    let h = p.tau_p / n as f64;
    let steps: Vec<M2> = (0..n)
        .map(|k| rk4_step(p, delta_tilde, k as f64 * h, h))
        .collect();

    let mut ce = Vec::with_capacity(n + 1);
    let mut y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    ce.push(y[1]);
    for s in &steps {
        y = [
            s[0][0] * y[0] + s[0][1] * y[1],
            s[1][0] * y[0] + s[1][1] * y[1],
        ];
        ce.push(y[1]);
    }

    // φ(τ_p, τ_k) = U_k·(i e^{−iΔ̃τ_k} c_e(τ_k), 0), so only column 0 of U_k matters
    let mut u = ID;
    let mut fg = vec![0.0; n + 1];
    let mut fe = vec![0.0; n + 1];
    for k in (0..=n).rev() {
        if k < n {
            u = mat_mul(&u, &steps[k]);
        }
        let tau = k as f64 * h;
        let amp = C64::new(0.0, 1.0) * C64::from_polar(1.0, -delta_tilde * tau) * ce[k];
        fg[k] = (u[0][0] * amp).norm_sqr();
        fe[k] = (u[1][0] * amp).norm_sqr();
    }
    let (mut sum_g, mut sum_e) = (0.0, 0.0);
    for k in 0..=n {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        sum_g += w * fg[k];
        sum_e += w * fe[k];
    }
    TwoLevel {
        c_g: y[0],
        c_e: y[1],
        phi_g: h * sum_g,
        phi_e: h * sum_e,
    }
}

/// Result of a solve together with its convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Solved {
    pub state: TwoLevel,
    /// Largest change of any output between grid `n` and `2n`.
    pub estimate: f64,
}

/// Solves one branch at `grid` and `2·grid` steps and returns the finer
/// result. Fails if the two disagree by more than [`CONVERGENCE_LIMIT`].
pub fn solve_two_level(
    pulse: &PulseSpec,
    gamma: f64,
    delta_tilde: f64,
    grid: usize,
) -> Result<Solved> {
    pulse.validate()?;
    if grid < MIN_GRID {
        return Err(Error::validation(
            "grid",
            format!("{grid} steps, need at least {MIN_GRID}"),
        ));
    }
    if !(gamma > 0.0) {
        return Err(Error::validation("gamma", "must be positive"));
    }
    let p = pulse.profile(gamma);
    let coarse = solve_on_grid(&p, delta_tilde, grid);
    let fine = solve_on_grid(&p, delta_tilde, 2 * grid);
    let estimate = fine.max_diff(&coarse);
    if !(estimate <= CONVERGENCE_LIMIT) {
        return Err(Error::Numerical {
            what: format!("two-level solve at grid {grid} (delta_tilde {delta_tilde})"),
            estimate,
            limit: CONVERGENCE_LIMIT,
        });
    }
    Ok(Solved {
        state: fine,
        estimate,
    })
}

/// End-of-pulse amplitudes of both branches. `c[1], c[2]` and `phi[1], phi[2]`
/// come from the resonant branch, `c[0], c[3]` and `phi[0], phi[3]` from the
/// detuned one. `phi` holds the integrated weights `|Φ_i|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcitationAmplitudes {
    pub c: [C64; 4],
    pub phi: [f64; 4],
    /// Convergence estimate of the solve; zero for closed forms.
    pub estimate: f64,
}

impl ExcitationAmplitudes {
    pub fn ideal() -> Self {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        ExcitationAmplitudes {
            c: [one, z, one, z],
            phi: [0.0; 4],
            estimate: 0.0,
        }
    }

    /// First-order closed forms for the square pulse of length `√3π/Δ`.
    pub fn square_closed_form(delta_tilde: f64) -> Self {
        let a = 3f64.sqrt() * PI / delta_tilde;
        let d2 = delta_tilde * delta_tilde;
        let re = |x: f64| C64::new(x.max(0.0).sqrt(), 0.0);
        ExcitationAmplitudes {
            c: [re(1.0), re(a / 2.0), re(1.0 - a / 2.0), re(0.0)],
            phi: [
                13.0 * a / 128.0 * (1.0 - a / 2.0),
                3.0 * a / 8.0 - 3.0 * PI * PI / (2.0 * d2) * (3.0 / 8.0 - 1.0 / (PI * PI)),
                a / 8.0 * (1.0 - a / 2.0),
                3.0 / 16.0 * (a / 8.0 - 3.0 * PI * PI / (16.0 * d2)),
            ],
            estimate: 0.0,
        }
    }

    pub fn resonant_norm(&self) -> f64 {
        self.c[1].norm_sqr() + self.c[2].norm_sqr() + self.phi[1] + self.phi[2]
    }

    pub fn detuned_norm(&self) -> f64 {
        self.c[0].norm_sqr() + self.c[3].norm_sqr() + self.phi[0] + self.phi[3]
    }
}

pub fn excitation_amplitudes(
    pulse: &PulseSpec,
    params: &EmitterParams,
    grid: usize,
) -> Result<ExcitationAmplitudes> {
    let res = solve_two_level(pulse, params.gamma, 0.0, grid)?;
    let det = solve_two_level(pulse, params.gamma, params.delta_tilde(), grid)?;
    Ok(ExcitationAmplitudes {
        c: [det.state.c_g, res.state.c_g, res.state.c_e, det.state.c_e],
        phi: [
            det.state.phi_g,
            res.state.phi_g,
            res.state.phi_e,
            det.state.phi_e,
        ],
        estimate: res.estimate.max(det.estimate),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionFactors {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl DetectionFactors {
    /// Probability of detecting at least one photon in a round.
    pub fn success(&self) -> f64 {
        self.d2 + self.d3
    }
}

pub fn detection_factors(a: &ExcitationAmplitudes, c: &CollectionParams) -> DetectionFactors {
    let (eta2, eta3) = (c.eta2(), c.eta3());
    let s: [f64; 4] = [
        a.c[0].norm_sqr(),
        a.c[1].norm_sqr(),
        a.c[2].norm_sqr(),
        a.c[3].norm_sqr(),
    ];
    let f = a.phi;
    // |xy|² summed over end-of-pulse and during-pulse parts of levels i and j
    let pair = |i: usize, j: usize| s[i] * s[j] + s[i] * f[j] + f[i] * s[j] + f[i] * f[j];
    let d1 = eta2 * s[0] * s[2];
    let d2 = eta2 * pair(0, 2) + eta2 * (1.0 - eta3) * pair(2, 3);
    let d3 = eta3 * (pair(3, 1) + pair(3, 2));
    DetectionFactors { d1, d2, d3 }
}

pub fn excitation_fidelity(d: &DetectionFactors, target: TargetState) -> Result<f64> {
    let p = d.success();
    if !(p > 0.0) {
        return Err(Error::Postselection(
            "no photon is ever detected (D2 + D3 = 0)".into(),
        ));
    }
    let n = target.n_photons as i32;
    Ok(match target.kind {
        TargetKind::Ghz => 0.5 * ((d.d1 / p).powi(n) + (d.d2 / p).powi(n)),
        TargetKind::Cluster => ((d.d1 + d.d2) / (2.0 * p)).powi(n),
    })
}

/// Leading order in `γ/Δ` for the optimal square pulse. Reduces to
/// `1 − N√3πγ/(8Δ)` when the filter removes all off-resonant photons.
pub fn excitation_fidelity_first_order(
    n: usize,
    params: &EmitterParams,
    c: &CollectionParams,
) -> f64 {
    let ratio = if c.xi3 == 0.0 { 0.0 } else { c.xi3 / c.xi2 };
    let g = params.gamma / params.delta;
    1.0 - n as f64 * g * 3f64.sqrt() * PI / 256.0 * (29.0 + 3.0 * (1.0 + ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcitationReport {
    pub amplitudes: ExcitationAmplitudes,
    pub factors: DetectionFactors,
    pub ghz: f64,
    pub cluster: f64,
    pub first_order: f64,
}

pub fn excitation_report(
    pulse: &PulseSpec,
    params: &EmitterParams,
    c: &CollectionParams,
    n: usize,
    grid: usize,
) -> Result<ExcitationReport> {
    let amplitudes = excitation_amplitudes(pulse, params, grid)?;
    let factors = detection_factors(&amplitudes, c);
    Ok(ExcitationReport {
        amplitudes,
        factors,
        ghz: excitation_fidelity(&factors, TargetState::ghz(n)?)?,
        cluster: excitation_fidelity(&factors, TargetState::cluster(n)?)?,
        first_order: excitation_fidelity_first_order(n, params, c),
    })
}
