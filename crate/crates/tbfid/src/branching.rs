//! Branching errors: decay through the diagonal transition and photon loss.
//!
//! Two evaluations of the conditional fidelity are provided.
//!
//! [`closed_form_unconditional`] gives the short formulas obtained by keeping
//! only the single-round terms that can still end in the target state. These
//! omit three single-detection branches (a diagonal photon from a spin that
//! stays put, and a detected diagonal photon after a lost or undetected first
//! one) whose contribution to the overlap is of order `p⊥·p⊥′`.
//!
//! [`exact_unconditional`] keeps every branch. The overlap with the target,
//! summed over orthogonal environment records, is a linear function of
//! `X ⊗ X̄` where `X` is a 2×2 spin operator, so `N` rounds are one 16×16
//! matrix power.
//!
//! Success probabilities come from the 2×2 transfer matrix `M`, which is exact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    BranchingParams, DetectionProbs, FidelityReport, TargetKind, TargetState, C64, MAX_PHOTONS,
};

/// `m[i][j]`: probability of at least one detected photon in a round while
/// the spin goes from `j` to `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferMatrix {
    pub m: [[f64; 2]; 2],
}

impl TransferMatrix {
    pub fn identity() -> Self {
        TransferMatrix {
            m: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    fn mul(&self, o: &TransferMatrix) -> TransferMatrix {
        let (a, b) = (&self.m, &o.m);
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix { m: r }
    }

    pub fn pow(&self, mut n: usize) -> TransferMatrix {
        let mut base = *self;
        let mut acc = TransferMatrix::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    pub fn column_sums(&self) -> [f64; 2] {
        [self.m[0][0] + self.m[1][0], self.m[0][1] + self.m[1][1]]
    }
}

pub fn transfer_matrix(p: &DetectionProbs, kind: TargetKind) -> TransferMatrix {
    let DetectionProbs {
        p_par: a,
        p_perp: b,
        p_par_prime: a_,
        p_perp_prime: b_,
    } = *p;
    match kind {
        TargetKind::Ghz => TransferMatrix {
            m: [[a, a * (b + b_) + a_ * b], [b, a + 2.0 * b * b_ + b * b]],
        },
        TargetKind::Cluster => {
            let odd = (a + b * b + b * a + b_ * a + b * a_ + 2.0 * b * b_) / 2.0;
            let even = (a + b) / 2.0;
            TransferMatrix {
                m: [[even, odd], [even, odd]],
            }
        }
    }
}

/// `(1 1)·Mᴺ·(½, ½)ᵀ`.
pub fn success_probability(m: &TransferMatrix, n: usize) -> f64 {
    let p = m.pow(n).m;
    0.5 * (p[0][0] + p[0][1] + p[1][0] + p[1][1])
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_PHOTONS {
        return Err(Error::validation(
            "n_photons",
            format!("{n} is outside 1..={MAX_PHOTONS}"),
        ));
    }
    Ok(())
}

/// Unconditional fidelity from the retained-term formulas.
pub fn closed_form_unconditional(p: &DetectionProbs, target: TargetState) -> f64 {
    let DetectionProbs {
        p_par: a,
        p_perp: b,
        p_perp_prime: b_,
        ..
    } = *p;
    let n = target.n_photons as i32;
    match target.kind {
        TargetKind::Ghz => ((a + b_ * b).powi(n) + a.powi(n) * (3.0 + b_)) / 4.0,
        TargetKind::Cluster => {
            let g = a + b * b_ / 4.0;
            g.powi(n - 1) * (g + a * b_ / 4.0)
        }
    }
}

type M2 = [[C64; 2]; 2];

const Z: C64 = C64::new(0.0, 0.0);

fn ket_bra(out: usize, inp: usize, amp: f64) -> M2 {
    let mut m = [[Z; 2]; 2];
    m[out][inp] = C64::new(amp, 0.0);
    m
}

fn m2_mul(a: &M2, b: &M2) -> M2 {
    let mut r = [[Z; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// Spin rotation closing each round.
fn rotation(kind: TargetKind) -> M2 {
    let one = C64::new(1.0, 0.0);
    match kind {
        TargetKind::Ghz => [[Z, one], [one, Z]],
        TargetKind::Cluster => {
            let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            [[h, h], [h, -h]]
        }
    }
}

/// Single-detection Kraus operators of one round, grouped by environment
/// record. Each group holds the operator for a detected early photon and for
/// a detected late photon.
fn kraus_groups(p: &DetectionProbs, kind: TargetKind) -> Vec<[M2; 2]> {
    let DetectionProbs {
        p_par: a,
        p_perp: b,
        p_par_prime: a_,
        p_perp_prime: b_,
    } = *p;
    let r = rotation(kind);
    let zero = [[Z; 2]; 2];
    let rot = |m: M2| m2_mul(&r, &m);
    // (early, late) before the rotation, spin labels |out⟩⟨in|
    let pre: [[M2; 2]; 6] = [
        // resonant photon, nothing else emitted
        [ket_bra(0, 1, a.sqrt()), ket_bra(1, 0, a.sqrt())],
        // diagonal early photon, then a lost vertical one
        [ket_bra(1, 1, (b * a_).sqrt()), zero],
        // diagonal early photon, then a lost diagonal one
        [ket_bra(0, 1, (b * b_).sqrt()), zero],
        // lost diagonal early photon, then a detected vertical one
        [zero, ket_bra(1, 1, (b_ * a).sqrt())],
        // lost diagonal early photon, then a detected diagonal one
        [zero, ket_bra(0, 1, (b_ * b).sqrt())],
        // diagonal late photon
        [zero, ket_bra(0, 0, b.sqrt())],
    ];
    pre.iter().map(|g| [rot(g[0]), rot(g[1])]).collect()
}

type M16 = [[C64; 16]; 16];

fn m16_mul(a: &M16, b: &M16) -> M16 {
    let mut r = [[Z; 16]; 16];
    for i in 0..16 {
        for k in 0..16 {
            let x = a[i][k];
            if x == Z {
                continue;
            }
            for j in 0..16 {
                r[i][j] += x * b[k][j];
            }
        }
    }
    r
}

fn m16_identity() -> M16 {
    let mut r = [[Z; 16]; 16];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    r
}

// Y is a 4×4 operator on spin ⊗ spin, vectorized row-major as y[4·r + c]
// with r = 2·s + s′.
fn idx(s: usize, s2: usize, t: usize, t2: usize) -> usize {
    4 * (2 * s + s2) + (2 * t + t2)
}

/// Round map `Y ↦ Σ_c Σ_{x,x′} (A_{c,x} ⊗ Ā_{c,x′}) Y (B_x ⊗ B̄_{x′})†` as a 16×16 matrix.
fn overlap_map(p: &DetectionProbs, kind: TargetKind) -> M16 {
    let groups = kraus_groups(p, kind);
    let ideal = kraus_groups(&DetectionProbs::ideal(), kind)[0];
    let mut t = [[Z; 16]; 16];
    for g in &groups {
        for x in 0..2 {
            for x2 in 0..2 {
                let (a1, a2) = (&g[x], &g[x2]);
                let (b1, b2) = (&ideal[x], &ideal[x2]);
                // Y'[(i,i2),(j,j2)] = Σ a1[i][k] ā2[i2][k2] Y[(k,k2),(l,l2)] conj(b1[j][l]) b2[j2][l2]
                for i in 0..2 {
                    for i2 in 0..2 {
                        for j in 0..2 {
                            for j2 in 0..2 {
                                for k in 0..2 {
                                    for k2 in 0..2 {
                                        let left = a1[i][k] * a2[i2][k2].conj();
                                        if left == Z {
                                            continue;
                                        }
                                        for l in 0..2 {
                                            for l2 in 0..2 {
                                                let right = b1[j][l].conj() * b2[j2][l2];
                                                if right == Z {
                                                    continue;
                                                }
                                                t[idx(i, i2, j, j2)][idx(k, k2, l, l2)] +=
                                                    left * right;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    t
}

/// Unconditional fidelity with every single-round branch kept.
pub fn exact_unconditional(p: &DetectionProbs, target: TargetState) -> f64 {
    let t = overlap_map(p, target.kind);
    let mut n = target.n_photons;
    let mut base = t;
    let mut acc = m16_identity();
    while n > 0 {
        if n & 1 == 1 {
            acc = m16_mul(&acc, &base);
        }
        base = m16_mul(&base, &base);
        n >>= 1;
    }
    // Y_0 = ρ0 ⊗ ρ̄0 with ρ0 = |+⟩⟨+|, every entry 1/4
    let y0 = [C64::new(0.25, 0.0); 16];
    let mut f = Z;
    for s in 0..2 {
        for s2 in 0..2 {
            let row = idx(s, s2, s, s2);
            f += acc[row].iter().zip(&y0).map(|(a, b)| a * b).sum::<C64>();
        }
    }
    f.re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchingReport {
    /// Every branch kept.
    pub exact: FidelityReport,
    /// Retained-term formulas.
    pub closed_form: FidelityReport,
}

pub fn branching_fidelity(p: &DetectionProbs, target: TargetState) -> Result<BranchingReport> {
    check_n(target.n_photons)?;
    let success = success_probability(&transfer_matrix(p, target.kind), target.n_photons);
    Ok(BranchingReport {
        exact: FidelityReport::new(exact_unconditional(p, target), success, None)?,
        closed_form: FidelityReport::new(closed_form_unconditional(p, target), success, None)?,
    })
}

/// Leading order in the diagonal decay probabilities; the same for GHZ and
/// cluster targets.
pub fn branching_first_order(n: usize, b: &BranchingParams, filtered: bool) -> f64 {
    let n = n as f64;
    if filtered {
        1.0 - (n - 0.5) * (b.beta_perp + b.beta_perp_prime) / 2.0
    } else {
        1.0 - n * (3.0 * b.beta_perp + b.beta_perp_prime) / 2.0 + b.beta_perp_prime / 4.0
    }
}

/// Filtered first-order value in terms of the branching ratio `B`.
pub fn branching_first_order_ratio(n: usize, ratio: f64) -> f64 {
    let x = 1.0 / (ratio + 1.0);
    1.0 + x / 4.0 - n as f64 * x / 2.0
}

fn m16_apply(t: &M16, y: &[C64; 16]) -> [C64; 16] {
    let mut r = [Z; 16];
    for (i, row) in t.iter().enumerate() {
        r[i] = row.iter().zip(y).map(|(a, b)| a * b).sum();
    }
    r
}

/// Exact and closed-form reports for `N = 1..=n_max`, built round by round.
pub fn branching_series(
    p: &DetectionProbs,
    kind: TargetKind,
    n_max: usize,
) -> Result<Vec<BranchingReport>> {
    check_n(n_max)?;
    let t = overlap_map(p, kind);
    let m = transfer_matrix(p, kind);
    let mut y = [C64::new(0.25, 0.0); 16];
    let mut v = [0.5, 0.5];
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        y = m16_apply(&t, &y);
        v = [
            m.m[0][0] * v[0] + m.m[0][1] * v[1],
            m.m[1][0] * v[0] + m.m[1][1] * v[1],
        ];
        let success = v[0] + v[1];
        let mut f = Z;
        for s in 0..2 {
            for s2 in 0..2 {
                f += y[idx(s, s2, s, s2)];
            }
        }
        let target = TargetState { kind, n_photons: n };
        out.push(BranchingReport {
            exact: FidelityReport::new(f.re, success, None)?,
            closed_form: FidelityReport::new(closed_form_unconditional(p, target), success, None)?,
        });
    }
    Ok(out)
}
