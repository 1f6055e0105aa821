//! Brute-force enumeration of the protocol state.
//!
//! The state is a map from labels (final spin, per-round set of emitted mode
//! symbols) to amplitudes. Continuous emission times are replaced by one
//! orthonormal mode per symbol. Every error model in this crate only ever
//! needs single-mode overlaps, so this loses nothing.
//!
//! Fidelities are computed from the definition: project every round onto one
//! detected photon, sum the overlap with the ideal state separately for each
//! orthogonal environment record, and add the squared moduli. A resonant and
//! a diagonal photon of the same time bin fire the same detector but differ in
//! frequency, so the frequency is part of the environment record.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::indistinguishability;
use crate::model::{DetectionProbs, EmitterParams, TargetKind, TargetState, C64};

pub const MAX_ROUNDS: usize = 8;
pub const DEFAULT_CAP: usize = 10_000_000;
pub const PRUNE_BELOW: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSymbol {
    Vacuum,
    DetResEarly,
    DetResLate,
    DetDiagEarly,
    DetDiagLate,
    LostParEarly,
    LostParLate,
    LostPerpEarly,
    LostPerpLate,
    PhononEarly,
    PhononLate,
    PulsePhotonRes,
    PulsePhotonDiag,
}

use ModeSymbol::*;

const ALL_SYMBOLS: [ModeSymbol; 13] = [
    Vacuum,
    DetResEarly,
    DetResLate,
    DetDiagEarly,
    DetDiagLate,
    LostParEarly,
    LostParLate,
    LostPerpEarly,
    LostPerpLate,
    PhononEarly,
    PhononLate,
    PulsePhotonRes,
    PulsePhotonDiag,
];

impl ModeSymbol {
    fn bit(self) -> u16 {
        match self {
            Vacuum => 0,
            s => 1 << (s as u16),
        }
    }

    pub fn is_detected(self) -> bool {
        matches!(self, DetResEarly | DetResLate | DetDiagEarly | DetDiagLate)
    }

    /// 0 for early, 1 for late; `None` if not a detected photon.
    pub fn detected_bin(self) -> Option<u8> {
        match self {
            DetResEarly | DetDiagEarly => Some(0),
            DetResLate | DetDiagLate => Some(1),
            _ => None,
        }
    }
}

const DETECTED: u16 = (1 << DetResEarly as u16)
    | (1 << DetResLate as u16)
    | (1 << DetDiagEarly as u16)
    | (1 << DetDiagLate as u16);
const DIAG: u16 = (1 << DetDiagEarly as u16) | (1 << DetDiagLate as u16);
const FLAVOR_BIT: u16 = 1 << 15;

/// Set of mode symbols emitted in one round, as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Modes(u16);

impl Modes {
    pub fn of(symbols: &[ModeSymbol]) -> Self {
        Modes(symbols.iter().fold(0, |m, s| m | s.bit()))
    }

    pub fn symbols(self) -> Vec<ModeSymbol> {
        ALL_SYMBOLS
            .iter()
            .copied()
            .filter(|s| *s != Vacuum && self.0 & s.bit() != 0)
            .collect()
    }

    pub fn detected_count(self) -> u32 {
        (self.0 & DETECTED).count_ones()
    }
}

impl Serialize for Modes {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.symbols().serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub spin: u8,
    len: u8,
    rounds: [Modes; MAX_ROUNDS],
}

impl Label {
    fn start(spin: u8) -> Self {
        Label {
            spin,
            len: 0,
            rounds: [Modes::default(); MAX_ROUNDS],
        }
    }

    pub fn rounds(&self) -> &[Modes] {
        &self.rounds[..self.len as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    amps: BTreeMap<Label, C64>,
    n_rounds: usize,
}

impl SparseState {
    /// `(|0⟩ + |1⟩)/√2` with every mode empty.
    pub fn initial() -> Self {
        let a = C64::new(FRAC_1_SQRT_2, 0.0);
        let mut amps = BTreeMap::new();
        amps.insert(Label::start(0), a);
        amps.insert(Label::start(1), a);
        SparseState { amps, n_rounds: 0 }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &C64)> {
        self.amps.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub spin_in: u8,
    pub spin_out: u8,
    pub amp: C64,
    pub modes: Modes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundOperator {
    pub branches: Vec<Branch>,
}

impl RoundOperator {
    /// Total branch weight leaving each input spin.
    pub fn weights(&self) -> [f64; 2] {
        let mut w = [0.0; 2];
        for b in &self.branches {
            w[b.spin_in as usize] += b.amp.norm_sqr();
        }
        w
    }

    /// Weight per input spin after summing amplitudes that end in the same
    /// spin and modes. This is the norm the round operator preserves.
    pub fn coherent_weights(&self) -> [f64; 2] {
        let mut m: BTreeMap<(u8, u8, Modes), C64> = BTreeMap::new();
        for b in &self.branches {
            *m.entry((b.spin_in, b.spin_out, b.modes)).or_default() += b.amp;
        }
        let mut w = [0.0; 2];
        for ((sin, _, _), a) in m {
            w[sin as usize] += a.norm_sqr();
        }
        w
    }

    /// Applies a per-branch phase factor.
    fn map_amp(mut self, f: impl Fn(&Branch) -> C64) -> Self {
        for b in &mut self.branches {
            b.amp *= f(b);
        }
        self
    }
}

/// A branch before the closing spin rotation.
struct Pre {
    spin_in: u8,
    spin_out: u8,
    amp: f64,
    modes: Modes,
}

fn pre(spin_in: u8, spin_out: u8, amp: f64, modes: &[ModeSymbol]) -> Pre {
    Pre {
        spin_in,
        spin_out,
        amp,
        modes: Modes::of(modes),
    }
}

fn rotate(pre: &[Pre], kind: TargetKind) -> RoundOperator {
    let mut branches = Vec::new();
    for p in pre {
        let modes = p.modes;
        let amp = C64::new(p.amp, 0.0);
        match kind {
            TargetKind::Ghz => branches.push(Branch {
                spin_in: p.spin_in,
                spin_out: 1 - p.spin_out,
                amp,
                modes,
            }),
            TargetKind::Cluster => {
                let h = amp * FRAC_1_SQRT_2;
                let sign = if p.spin_out == 0 { 1.0 } else { -1.0 };
                branches.push(Branch {
                    spin_in: p.spin_in,
                    spin_out: 0,
                    amp: h,
                    modes,
                });
                branches.push(Branch {
                    spin_in: p.spin_in,
                    spin_out: 1,
                    amp: h * sign,
                    modes,
                });
            }
        }
    }
    RoundOperator { branches }
}

/// Spin `1` emits early, spin `0` emits late, then the rotation (X for GHZ,
/// Hadamard for cluster).
pub fn ideal_round(kind: TargetKind) -> RoundOperator {
    branching_round(&DetectionProbs::ideal(), kind)
}

fn branching_pre(p: &DetectionProbs) -> Vec<Pre> {
    let DetectionProbs {
        p_par: a,
        p_perp: b,
        p_par_prime: a_,
        p_perp_prime: b_,
    } = *p;
    let mut v = vec![
        pre(1, 0, a.sqrt(), &[DetResEarly]),
        pre(1, 0, a_.sqrt(), &[LostParEarly]),
    ];
    // the diagonal early decay leaves the spin in 0, so the late pulse excites it again
    for (w, first) in [(b, DetDiagEarly), (b_, LostPerpEarly)] {
        let seconds = [
            (1, a, DetResLate),
            (1, a_, LostParLate),
            (0, b, DetDiagLate),
            (0, b_, LostPerpLate),
        ];
        for (out, w2, second) in seconds {
            v.push(pre(1, out, (w * w2).sqrt(), &[first, second]));
        }
    }
    v.extend([
        pre(0, 1, a.sqrt(), &[DetResLate]),
        pre(0, 1, a_.sqrt(), &[LostParLate]),
        pre(0, 0, b.sqrt(), &[DetDiagLate]),
        pre(0, 0, b_.sqrt(), &[LostPerpLate]),
    ]);
    v
}

/// All fourteen single-round outcomes with their `√p` amplitudes, followed by
/// the rotation. Zero-weight branches are kept so the structure is fixed.
pub fn branching_round(p: &DetectionProbs, kind: TargetKind) -> RoundOperator {
    rotate(&branching_pre(p), kind)
}

/// Which single-round branches to keep when rebuilding the retained-term
/// closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Retained {
    /// Keep the branch "lost diagonal early photon, detected vertical late".
    pub cross_bin: bool,
}

/// The branching round without the three single-detection branches the
/// closed forms discard. Outcomes with no or two detected photons are kept.
pub fn retained_round(p: &DetectionProbs, kind: TargetKind, keep: Retained) -> RoundOperator {
    let kept: Vec<Pre> = branching_pre(p)
        .into_iter()
        .filter(|b| {
            let m = b.modes;
            let dropped = m == Modes::of(&[DetDiagEarly, LostParLate])
                || m == Modes::of(&[LostPerpEarly, DetDiagLate])
                || (b.spin_in == 0 && m == Modes::of(&[DetDiagLate]))
                || (!keep.cross_bin && m == Modes::of(&[LostPerpEarly, DetResLate]));
            !dropped
        })
        .collect();
    rotate(&kept, kind)
}

/// Ideal round where each emitted photon carries a phonon sideband with
/// weight `1 − I`, tagged by its time bin.
pub fn phonon_round(i: f64, kind: TargetKind) -> RoundOperator {
    let (c, s) = (i.sqrt(), (1.0 - i).max(0.0).sqrt());
    let branches = [
        pre(1, 0, c, &[DetResEarly]),
        pre(1, 0, s, &[DetResEarly, PhononEarly]),
        pre(0, 1, c, &[DetResLate]),
        pre(0, 1, s, &[DetResLate, PhononLate]),
    ];
    rotate(&branches, kind)
}

/// Ideal round under a static Overhauser splitting `delta21` (rad/ns). The
/// spin state holding the excitation-free level accrues `e^{−iΔ21·T/2}` in
/// each half of the bin; the π flip between halves swaps which level that is,
/// so both spin paths pick up the same total phase.
pub fn overhauser_round(delta21: f64, t_bin: f64, kind: TargetKind) -> RoundOperator {
    let half = t_bin / 2.0;
    ideal_round(kind).map_amp(move |b| {
        // first half: phase on spin_in = 1; second half: on the flipped spin
        let first = if b.spin_in == 1 { delta21 * half } else { 0.0 };
        let second = if b.spin_in == 0 { delta21 * half } else { 0.0 };
        C64::from_polar(1.0, -(first + second))
    })
}

fn apply(state: &SparseState, op: &RoundOperator, cap: usize) -> Result<SparseState> {
    if state.n_rounds >= MAX_ROUNDS {
        return Err(Error::validation(
            "n",
            format!("at most {MAX_ROUNDS} rounds can be enumerated"),
        ));
    }
    let mut by_spin: [Vec<&Branch>; 2] = [Vec::new(), Vec::new()];
    for b in &op.branches {
        by_spin[b.spin_in as usize].push(b);
    }
    let mut next: BTreeMap<Label, C64> = BTreeMap::new();
    for (label, a) in &state.amps {
        for b in &by_spin[label.spin as usize] {
            let mut l = *label;
            l.rounds[l.len as usize] = b.modes;
            l.len += 1;
            l.spin = b.spin_out;
            *next.entry(l).or_default() += a * b.amp;
        }
        if next.len() > cap {
            return Err(Error::Capacity {
                terms: next.len(),
                cap,
            });
        }
    }
    let before = next.len();
    next.retain(|_, a| a.norm() >= PRUNE_BELOW);
    if next.len() < before {
        log::debug!("pruned {} amplitudes", before - next.len());
    }
    Ok(SparseState {
        amps: next,
        n_rounds: state.n_rounds + 1,
    })
}

pub fn run_protocol(op: &RoundOperator, n: usize) -> Result<SparseState> {
    run_rounds(&vec![op.clone(); n])
}

/// Applies a possibly different operator in every round.
pub fn run_rounds(ops: &[RoundOperator]) -> Result<SparseState> {
    run_rounds_capped(ops, DEFAULT_CAP)
}

pub fn run_rounds_capped(ops: &[RoundOperator], cap: usize) -> Result<SparseState> {
    if ops.len() > MAX_ROUNDS {
        return Err(Error::validation(
            "n",
            format!("{} rounds requested, at most {MAX_ROUNDS}", ops.len()),
        ));
    }
    let mut s = SparseState::initial();
    for op in ops {
        s = apply(&s, op, cap)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    /// Conditional fidelity.
    pub fidelity: f64,
    pub unconditional: f64,
    pub success: f64,
    pub n_terms: usize,
}

fn ideal_logical(kind: TargetKind, n: usize) -> Result<HashMap<(u8, u16), C64>> {
    let ideal = run_protocol(&ideal_round(kind), n)?;
    let mut m = HashMap::new();
    for (label, a) in ideal.iter() {
        let mut bins = 0u16;
        for (j, r) in label.rounds().iter().enumerate() {
            if r.0 & (1 << DetResLate as u16) != 0 {
                bins |= 1 << j;
            }
        }
        m.insert((label.spin, bins), *a);
    }
    Ok(m)
}

pub fn conditional_fidelity(state: &SparseState, target: TargetState) -> Result<OracleResult> {
    let n = state.n_rounds;
    if n != target.n_photons {
        return Err(Error::validation(
            "n_photons",
            format!("state has {n} rounds, target has {}", target.n_photons),
        ));
    }
    let ideal = ideal_logical(target.kind, n)?;
    let mut success = 0.0;
    let mut overlaps: BTreeMap<[u16; MAX_ROUNDS], C64> = BTreeMap::new();
    for (label, a) in state.iter() {
        let rounds = label.rounds();
        if rounds.iter().all(|r| r.detected_count() >= 1) {
            success += a.norm_sqr();
        }
        if !rounds.iter().all(|r| r.detected_count() == 1) {
            continue;
        }
        let mut bins = 0u16;
        let mut env = [0u16; MAX_ROUNDS];
        for (j, r) in rounds.iter().enumerate() {
            let det = r.0 & DETECTED;
            let bin = ALL_SYMBOLS
                .iter()
                .find(|s| s.bit() == det)
                .and_then(|s| s.detected_bin())
                .expect("one detected symbol");
            bins |= (bin as u16) << j;
            env[j] = (r.0 & !DETECTED) | if det & DIAG != 0 { FLAVOR_BIT } else { 0 };
        }
        if let Some(b) = ideal.get(&(label.spin, bins)) {
            *overlaps.entry(env).or_default() += b.conj() * a;
        }
    }
    let unconditional: f64 = overlaps.values().map(|v| v.norm_sqr()).sum();
    if !(success > 0.0) {
        return Err(Error::Postselection(
            "no outcome has a detected photon in every round".into(),
        ));
    }
    Ok(OracleResult {
        fidelity: unconditional / success,
        unconditional,
        success,
        n_terms: state.len(),
    })
}

/// Enumerates the full branching model.
pub fn branching_oracle(p: &DetectionProbs, target: TargetState) -> Result<OracleResult> {
    let s = run_protocol(&branching_round(p, target.kind), target.n_photons)?;
    conditional_fidelity(&s, target)
}

/// Enumerates the retained-term model behind the closed forms. For cluster
/// targets the cross-bin branch survives only in the first round.
pub fn retained_oracle(p: &DetectionProbs, target: TargetState) -> Result<OracleResult> {
    let ops: Vec<RoundOperator> = (0..target.n_photons)
        .map(|j| {
            let cross_bin = target.kind == TargetKind::Ghz || j == 0;
            retained_round(p, target.kind, Retained { cross_bin })
        })
        .collect();
    conditional_fidelity(&run_rounds(&ops)?, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelModel {
    Phonon,
    /// Static Overhauser splitting, rad/ns.
    Overhauser(f64),
}

/// Conditional fidelity of an enumerated non-spin-mixing model.
pub fn kernel_oracle(
    model: KernelModel,
    params: &EmitterParams,
    target: TargetState,
) -> Result<f64> {
    match model {
        KernelModel::Phonon => phonon_oracle(params, target),
        KernelModel::Overhauser(d21) => overhauser_oracle(d21, params.t_bin, target),
    }
}

/// Conditional fidelity of the enumerated phonon-dephasing model.
pub fn phonon_oracle(params: &EmitterParams, target: TargetState) -> Result<f64> {
    let i = indistinguishability(params.gamma, params.gamma_d);
    let s = run_protocol(&phonon_round(i, target.kind), target.n_photons)?;
    Ok(conditional_fidelity(&s, target)?.fidelity)
}

/// Conditional fidelity of the enumerated Overhauser model.
pub fn overhauser_oracle(delta21: f64, t_bin: f64, target: TargetState) -> Result<f64> {
    let s = run_protocol(
        &overhauser_round(delta21, t_bin, target.kind),
        target.n_photons,
    )?;
    Ok(conditional_fidelity(&s, target)?.fidelity)
}

/// Writes a state with one resonant detected photon per round as a dense
/// vector over `N + 1` qubits after the logical relabelling: spin `0 ↔ 1`,
/// early photon → `|0⟩`, late photon → `−|1⟩`. Qubit `j < N` is photon
/// `j + 1`, qubit `N` is the spin; index bit `j` holds qubit `j`.
pub fn logical_vector(state: &SparseState) -> Result<Vec<C64>> {
    let n = state.n_rounds;
    let mut v = vec![C64::new(0.0, 0.0); 1 << (n + 1)];
    for (label, a) in state.iter() {
        let mut idx = 0usize;
        let mut sign = 1.0;
        for (j, r) in label.rounds().iter().enumerate() {
            if r.0 == DetResEarly.bit() {
            } else if r.0 == DetResLate.bit() {
                idx |= 1 << j;
                sign = -sign;
            } else {
                return Err(Error::Mapping(format!(
                    "round {} holds {:?}, not one resonant photon",
                    j + 1,
                    r.symbols()
                )));
            }
        }
        if label.spin == 0 {
            idx |= 1 << n;
        }
        v[idx] += a * sign;
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pauli {
    X,
    Z,
}

fn expectation(v: &[C64], ops: &[(usize, Pauli)]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    let mut norm = 0.0;
    for (i, a) in v.iter().enumerate() {
        norm += a.norm_sqr();
        let mut j = i;
        let mut s = 1.0;
        for &(q, p) in ops {
            match p {
                Pauli::X => j ^= 1 << q,
                Pauli::Z => {
                    if i >> q & 1 == 1 {
                        s = -s;
                    }
                }
            }
        }
        // ⟨v|P|v⟩ = Σ_i conj(v[j]) s v[i] with P|i⟩ = s|j⟩
        acc += v[j].conj() * a * s;
    }
    acc.re / norm
}

/// `⟨g_0⟩ … ⟨g_N⟩` for the linear-chain generators
/// `g_0 = X_0Z_1`, `g_i = Z_{i−1}X_iZ_{i+1}`, `g_N = Z_{N−1}X_N`.
pub fn stabilizer_check(state: &SparseState) -> Result<Vec<f64>> {
    let v = logical_vector(state)?;
    let q = state.n_rounds + 1;
    Ok((0..q)
        .map(|i| {
            let mut ops = vec![(i, Pauli::X)];
            if i > 0 {
                ops.push((i - 1, Pauli::Z));
            }
            if i + 1 < q {
                ops.push((i + 1, Pauli::Z));
            }
            expectation(&v, &ops)
        })
        .collect())
}

/// Generator expectations of the ideal `n`-photon cluster state.
pub fn ideal_cluster_stabilizers(n: usize) -> Result<Vec<f64>> {
    stabilizer_check(&run_protocol(&ideal_round(TargetKind::Cluster), n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionReport {
    /// Max-norm of the difference of the two sides.
    pub residual: f64,
    /// Probability per round of the spin-flip branch, `p⊥′·p∥`.
    pub error_probability: f64,
}

// Two-round space: spin (2) ⊗ photon j (vacuum, e, l) ⊗ photon j+1 (vacuum, e, l).
const DIM: usize = 18;
type Dense = Vec<[C64; DIM]>;

fn d_idx(spin: usize, pj: usize, pk: usize) -> usize {
    spin * 9 + pj * 3 + pk
}

fn d_zero() -> Dense {
    vec![[C64::new(0.0, 0.0); DIM]; DIM]
}

fn d_mul(a: &Dense, b: &Dense) -> Dense {
    let mut r = d_zero();
    for i in 0..DIM {
        for k in 0..DIM {
            if a[i][k] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..DIM {
                r[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    r
}

/// `Σ |out⟩⟨in| a†` with the photon created in slot `slot` (0 = j, 1 = j+1),
/// acting where that slot is empty.
fn d_emit(terms: &[([f64; 2], usize, usize)], slot: usize) -> Dense {
    let mut r = d_zero();
    for &(out, sin, mode) in terms {
        for (s_out, &amp) in out.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            for other in 0..3 {
                let (from, to) = if slot == 0 {
                    (d_idx(sin, 0, other), d_idx(s_out, mode, other))
                } else {
                    (d_idx(sin, other, 0), d_idx(s_out, other, mode))
                };
                r[to][from] += C64::new(amp, 0.0);
            }
        }
    }
    r
}

/// Checks `O_{j+1}·Õ_j = −a†_{l,j}a_{e,j}·Z_{j+1}·O_{j+1}·O_j` for the cluster
/// rotation, with `O = |+⟩⟨1|a†_e + |−⟩⟨0|a†_l` and `Õ = |−⟩⟨1|a†_l` (the lost
/// diagonal photon is a spectator and is left out). Also reports the
/// probability of that branch.
pub fn decomposition_check(p: &DetectionProbs) -> DecompositionReport {
    let h = FRAC_1_SQRT_2;
    let plus = [h, h];
    let minus = [h, -h];
    let (e, l) = (1usize, 2usize);
    let o = |slot| d_emit(&[(plus, 1, e), (minus, 0, l)], slot);
    let o_tilde = d_emit(&[(minus, 1, l)], 0);
    let lhs = d_mul(&o(1), &o_tilde);

    // −a†_l a_e on photon j, Z on photon j+1 (early +1, late −1)
    let mut err = d_zero();
    for s in 0..2 {
        for pk in 0..3 {
            let z = match pk {
                1 => 1.0,
                2 => -1.0,
                _ => 0.0,
            };
            err[d_idx(s, l, pk)][d_idx(s, e, pk)] = C64::new(-z, 0.0);
        }
    }
    let rhs = d_mul(&err, &d_mul(&o(1), &o(0)));

    let mut residual: f64 = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            residual = residual.max((lhs[i][j] - rhs[i][j]).norm());
        }
    }
    DecompositionReport {
        residual,
        error_probability: p.p_perp_prime * p.p_par,
    }
}
