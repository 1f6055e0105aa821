//! Combined fidelities, parameter sweeps and per-photon-number curves.
//!
//! The combined fidelity is the product of the phonon, excitation and
//! branching fidelities. Each factor is exact for its own channel; the product
//! ignores correlations between channels.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching::{branching_fidelity, branching_series};
use crate::error::{Error, Result};
use crate::excitation::{
    detection_factors, excitation_amplitudes, excitation_fidelity, DetectionFactors, PulseSpec,
    DEFAULT_GRID,
};
use crate::kernel::{indistinguishability, kernel_fidelity, kernel_phonon};
use crate::model::{
    branching_ratio, derive_detection_probs, BranchingParams, CollectionParams, EmitterParams,
    ParamFile, TargetKind, TargetState,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CombinedReport {
    pub phonon: f64,
    pub excitation: f64,
    pub branching: f64,
    pub product: f64,
}

fn phonon_factor(params: &EmitterParams, target: TargetState) -> Result<f64> {
    Ok(kernel_fidelity(
        &kernel_phonon(params.gamma, params.gamma_d)?,
        target,
    ))
}

/// `F_ph · F_exc · F_br`, all conditional and exact for their channel.
pub fn combined_fidelity(
    n: usize,
    params: &EmitterParams,
    b: &BranchingParams,
    c: &CollectionParams,
    pulse: &PulseSpec,
    target: TargetKind,
    grid: usize,
) -> Result<CombinedReport> {
    let amps = excitation_amplitudes(pulse, params, grid)?;
    combined_with_factors(n, params, b, c, &detection_factors(&amps, c), target)
}

/// Same as [`combined_fidelity`] with the detection factors already known.
pub fn combined_with_factors(
    n: usize,
    params: &EmitterParams,
    b: &BranchingParams,
    c: &CollectionParams,
    d: &DetectionFactors,
    target: TargetKind,
) -> Result<CombinedReport> {
    let t = TargetState::new(target, n)?;
    let phonon = phonon_factor(params, t)?;
    let excitation = excitation_fidelity(d, t)?;
    let branching = branching_fidelity(&derive_detection_probs(b, c), t)?
        .exact
        .conditional;
    Ok(CombinedReport {
        phonon,
        excitation,
        branching,
        product: phonon * excitation * branching,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrder {
    pub n: usize,
    pub value: f64,
    /// Per-photon infidelity from phonon dephasing.
    pub dephasing: f64,
    /// Per-photon infidelity from branching.
    pub branching: f64,
    /// Per-photon infidelity from excitation errors.
    pub excitation: f64,
    pub per_photon: f64,
}

/// Leading-order combined fidelity with the branching entering only through
/// the ratio `B`.
pub fn combined_first_order(n: usize, params: &EmitterParams, ratio: f64) -> FirstOrder {
    let x = 1.0 / (ratio + 1.0);
    let dephasing = params.gamma_d / (params.gamma + 2.0 * params.gamma_d);
    let branching = x / 2.0;
    let excitation = 3f64.sqrt() * PI / 8.0 * params.gamma / params.delta;
    let per_photon = dephasing + branching + excitation;
    FirstOrder {
        n,
        value: 1.0 + x / 4.0 - n as f64 * per_photon,
        dephasing,
        branching,
        excitation,
        per_photon,
    }
}

/// Photon number at which a first-order curve reaches `level`.
pub fn first_order_crossing(fo: &FirstOrder, level: f64) -> f64 {
    (fo.value + fo.n as f64 * fo.per_photon - level) / fo.per_photon
}

/// Maximizes the excitation fidelity over the Gaussian pulse length by
/// golden-section search on `log t_fwhm` within `[lo, hi]` ns.
pub fn optimize_t_fwhm(
    params: &EmitterParams,
    c: &CollectionParams,
    target: TargetState,
    lo: f64,
    hi: f64,
    grid: usize,
) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::validation("t_fwhm range", format!("[{lo}, {hi}]")));
    }
    let eval = |log_t: f64| -> Result<f64> {
        let pulse = PulseSpec::gaussian(log_t.exp())?;
        let d = detection_factors(&excitation_amplitudes(&pulse, params, grid)?, c);
        excitation_fidelity(&d, target)
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    while b - a > 1e-5 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = eval(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = eval(x1)?;
        }
    }
    let best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Ok((best.0.exp(), best.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    /// `γ·T_FWHM`, with `γ` taken from the other axis or the fixed block.
    GammaTFwhm,
    /// `Δ/γ`; sets `γ` from the fixed `Δ`.
    DeltaOverGamma,
    TFwhmNs,
    GammaNs,
    GammaDNs,
    DeltaGhz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                let f = if n == 1 {
                    0.0
                } else {
                    i as f64 / (n - 1) as f64
                };
                match self.scale {
                    Scale::Linear => self.min + f * (self.max - self.min),
                    Scale::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.points < 1 {
            return Err(Error::validation("axis", "needs at least one point"));
        }
        if !(self.min <= self.max) {
            return Err(Error::validation("axis", "min exceeds max"));
        }
        if self.scale == Scale::Log && !(self.min > 0.0) {
            return Err(Error::validation("axis", "log axis needs positive bounds"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    ExcitationOnly,
    Combined,
}

/// Parameter block shared by sweeps and curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: ParamFile,
    /// Gaussian pulse length, ns; searched for when absent.
    #[serde(default)]
    pub t_fwhm_ns: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Overrides the β-derived ratio in the first-order column.
    #[serde(default)]
    pub branching_ratio: Option<f64>,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<Axis>,
    pub scenario: Scenario,
    pub objective: Objective,
    pub target: TargetKind,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub index: Vec<usize>,
    pub coords: Vec<f64>,
    pub gamma: f64,
    pub t_fwhm: f64,
    pub report: Option<CombinedReport>,
    pub error: Option<String>,
}

impl Cell {
    pub fn value(&self, objective: Objective) -> Option<f64> {
        self.report.map(|r| match objective {
            Objective::ExcitationOnly => r.excitation,
            Objective::Combined => r.product,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axes: Vec<AxisName>,
    pub objective: Objective,
    /// Row-major: the last axis varies fastest.
    pub cells: Vec<Cell>,
    /// Position in `cells` of the best value; lowest index wins ties.
    pub argmax: Option<usize>,
}

fn cell_params(grid: &SweepGrid, coords: &[f64]) -> Result<(EmitterParams, f64)> {
    let mut pf = grid.scenario.params.clone();
    let mut t_fwhm = grid.scenario.t_fwhm_ns;
    let mut gamma_t = None;
    let mut ratio = None;
    for (axis, &x) in grid.axes.iter().zip(coords) {
        match axis.name {
            AxisName::GammaTFwhm => gamma_t = Some(x),
            AxisName::DeltaOverGamma => ratio = Some(x),
            AxisName::TFwhmNs => t_fwhm = Some(x),
            AxisName::GammaNs => pf.gamma_ns = Some(x),
            AxisName::GammaDNs => pf.gamma_d_ns = Some(x),
            AxisName::DeltaGhz => pf.delta_ghz = Some(x),
        }
    }
    if let Some(r) = ratio {
        let delta = crate::model::ghz_to_rad(
            pf.delta_ghz
                .ok_or_else(|| Error::validation("delta_ghz", "needed by delta_over_gamma"))?,
        );
        pf.gamma_ns = Some(delta / r);
    }
    let params = pf.emitter()?;
    if let Some(x) = gamma_t {
        t_fwhm = Some(x / params.gamma);
    }
    let t = t_fwhm.ok_or_else(|| Error::validation("t_fwhm_ns", "missing"))?;
    Ok((params, t))
}

fn eval_cell(grid: &SweepGrid, index: Vec<usize>, coords: Vec<f64>) -> Cell {
    let run = || -> Result<(EmitterParams, f64, CombinedReport)> {
        let (params, t) = cell_params(grid, &coords)?;
        let b = grid.scenario.params.branching()?;
        let c = grid.scenario.params.collection()?;
        let pulse = PulseSpec::gaussian(t)?;
        let r = combined_fidelity(
            grid.n,
            &params,
            &b,
            &c,
            &pulse,
            grid.target,
            grid.scenario.grid,
        )?;
        Ok((params, t, r))
    };
    match run() {
        Ok((p, t, r)) => Cell {
            index,
            coords,
            gamma: p.gamma,
            t_fwhm: t,
            report: Some(r),
            error: None,
        },
        Err(e) => Cell {
            index,
            coords,
            gamma: f64::NAN,
            t_fwhm: f64::NAN,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

/// Thread cap from `TBFID_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("TBFID_THREADS")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

/// Evaluates every cell. Cells run concurrently and are merged by index, so
/// the table does not depend on the thread count.
pub fn sweep(grid: &SweepGrid) -> Result<SweepTable> {
    if grid.axes.is_empty() || grid.axes.len() > 2 {
        return Err(Error::validation("axes", "need one or two axes"));
    }
    for a in &grid.axes {
        a.validate()?;
    }
    TargetState::new(grid.target, grid.n)?;
    let values: Vec<Vec<f64>> = grid.axes.iter().map(Axis::values).collect();
    let mut jobs = Vec::new();
    match values.len() {
        1 => {
            for (i, &x) in values[0].iter().enumerate() {
                jobs.push((vec![i], vec![x]));
            }
        }
        _ => {
            for (i, &x) in values[0].iter().enumerate() {
                for (j, &y) in values[1].iter().enumerate() {
                    jobs.push((vec![i, j], vec![x, y]));
                }
            }
        }
    }
    let run = || -> Vec<Cell> {
        jobs.clone()
            .into_par_iter()
            .map(|(i, c)| eval_cell(grid, i, c))
            .collect()
    };
    let cells = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::validation("TBFID_THREADS", e.to_string()))?
            .install(run),
        None => run(),
    };
    let mut argmax: Option<usize> = None;
    for (k, c) in cells.iter().enumerate() {
        if let Some(v) = c.value(grid.objective) {
            if argmax.is_none_or(|a| v > cells[a].value(grid.objective).unwrap()) {
                argmax = Some(k);
            }
        } else if let Some(e) = &c.error {
            log::warn!("cell {:?} failed: {e}", c.index);
        }
    }
    Ok(SweepTable {
        axes: grid.axes.iter().map(|a| a.name).collect(),
        objective: grid.objective,
        cells,
        argmax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub n: usize,
    pub target: TargetKind,
    pub phonon: f64,
    pub excitation: f64,
    pub branching: f64,
    pub product: f64,
    pub first_order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSet {
    pub t_fwhm: f64,
    pub branching_ratio: f64,
    pub rows: Vec<CurveRow>,
}

impl CurveSet {
    pub fn rows_for(&self, target: TargetKind) -> impl Iterator<Item = &CurveRow> {
        self.rows.iter().filter(move |r| r.target == target)
    }

    /// Photon number where the product first drops to `level`, interpolated
    /// linearly between neighbouring rows.
    pub fn crossing(&self, target: TargetKind, level: f64) -> Option<f64> {
        let rows: Vec<&CurveRow> = self.rows_for(target).collect();
        rows.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            (a.product >= level && b.product < level).then(|| {
                a.n as f64 + (a.product - level) / (a.product - b.product) * (b.n - a.n) as f64
            })
        })
    }
}

/// Search window for the Gaussian pulse length, ns.
pub const T_FWHM_SEARCH: (f64, f64) = (0.002, 0.5);

/// Resolved pulse length of a scenario: the given value, or the one that
/// maximizes the five-photon GHZ excitation fidelity.
pub fn scenario_t_fwhm(s: &Scenario) -> Result<f64> {
    match s.t_fwhm_ns {
        Some(t) => Ok(t),
        None => {
            let params = s.params.emitter()?;
            let c = s.params.collection()?;
            let (t, _) = optimize_t_fwhm(
                &params,
                &c,
                TargetState::ghz(5)?,
                T_FWHM_SEARCH.0,
                T_FWHM_SEARCH.1,
                s.grid,
            )?;
            Ok(t)
        }
    }
}

/// Channel breakdown for `N = 1..=n_max` and both targets.
pub fn curves(n_max: usize, s: &Scenario) -> Result<CurveSet> {
    if n_max == 0 || n_max > 10_000 {
        return Err(Error::validation(
            "n_max",
            format!("{n_max} is outside 1..=10000"),
        ));
    }
    let params = s.params.emitter()?;
    let b = s.params.branching()?;
    let c = s.params.collection()?;
    let t_fwhm = scenario_t_fwhm(s)?;
    let d = detection_factors(
        &excitation_amplitudes(&PulseSpec::gaussian(t_fwhm)?, &params, s.grid)?,
        &c,
    );
    let ratio = s.branching_ratio.unwrap_or_else(|| branching_ratio(&b));
    let i = indistinguishability(params.gamma, params.gamma_d);
    let p = derive_detection_probs(&b, &c);
    let mut rows = Vec::with_capacity(2 * n_max);
    for kind in [TargetKind::Ghz, TargetKind::Cluster] {
        let series = branching_series(&p, kind, n_max)?;
        for (k, br) in series.iter().enumerate() {
            let n = k + 1;
            let t = TargetState::new(kind, n)?;
            let phonon = kernel_fidelity(&crate::kernel::Kernel::symmetric(i)?, t);
            let excitation = excitation_fidelity(&d, t)?;
            let branching = br.exact.conditional;
            rows.push(CurveRow {
                n,
                target: kind,
                phonon,
                excitation,
                branching,
                product: phonon * excitation * branching,
                first_order: combined_first_order(n, &params, ratio).value,
            });
        }
    }
    Ok(CurveSet {
        t_fwhm,
        branching_ratio: ratio,
        rows,
    })
}

/// Formats `x` with 12 significant digits without locale dependence.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..15).contains(&e) {
        let prec = (11 - e).max(0) as usize;
        format!("{x:.prec$}")
    } else {
        format!("{x:.11e}")
    }
}

impl SweepTable {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = self
            .axes
            .iter()
            .map(|a| {
                serde_json::to_value(a)
                    .unwrap()
                    .as_str()
                    .unwrap()
                    .to_string()
            })
            .collect();
        header.extend(
            [
                "gamma_ns",
                "t_fwhm_ns",
                "f_phonon",
                "f_excitation",
                "f_branching",
                "f_combined",
                "error",
            ]
            .map(String::from),
        );
        out.write_record(&header)?;
        for c in &self.cells {
            let mut rec: Vec<String> = c.coords.iter().map(|&x| fmt_sig(x)).collect();
            rec.push(fmt_sig(c.gamma));
            rec.push(fmt_sig(c.t_fwhm));
            match c.report {
                Some(r) => {
                    for v in [r.phonon, r.excitation, r.branching, r.product] {
                        rec.push(fmt_sig(v));
                    }
                }
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
            rec.push(c.error.clone().unwrap_or_default());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

impl CurveSet {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "target",
            "n",
            "f_phonon",
            "f_excitation",
            "f_branching",
            "f_product",
            "f_first_order",
        ])?;
        for r in &self.rows {
            out.write_record([
                r.target.to_string(),
                r.n.to_string(),
                fmt_sig(r.phonon),
                fmt_sig(r.excitation),
                fmt_sig(r.branching),
                fmt_sig(r.product),
                fmt_sig(r.first_order),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Sweep file: either a grid sweep or a per-`N` curve set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SweepConfig {
    Grid(SweepGrid),
    Curves { n_max: usize, scenario: Scenario },
}
