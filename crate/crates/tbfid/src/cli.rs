//! Command-line front end for the `tbfid` binary.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 numerical-accuracy
//! error or failed verification, 3 undefined postselection.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::json;

use crate::branching::{
    branching_fidelity, branching_first_order, exact_unconditional, success_probability,
    transfer_matrix,
};
use crate::error::Error;
use crate::excitation::{excitation_report, PulseSpec, DEFAULT_GRID};
use crate::kernel::{indistinguishability, kernel_fidelity, kernel_overhauser, kernel_phonon};
use crate::model::{
    branching_ratio, derive_detection_probs, BranchingParams, CollectionParams, DetectionProbs,
    EmitterParams, ParamFile, TargetKind, TargetState,
};
use crate::oracle::{
    branching_oracle, decomposition_check, ideal_cluster_stabilizers, kernel_oracle,
    retained_oracle, KernelModel,
};
use crate::sweep::{combined_fidelity, combined_first_order, curves, sweep, SweepConfig};

#[derive(Debug, Parser)]
#[command(
    name = "tbfid",
    version,
    about = "Fidelities of time-bin GHZ and cluster states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Target {
    Ghz,
    Cluster,
}

impl From<Target> for TargetKind {
    fn from(t: Target) -> Self {
        match t {
            Target::Ghz => TargetKind::Ghz,
            Target::Cluster => TargetKind::Cluster,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Channel {
    Phonon,
    Overhauser,
    Excitation,
    Branching,
    Combined,
    CombinedFirstOrder,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Shape {
    Gaussian,
    Square,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    Branching,
    Retained,
    Phonon,
    Overhauser,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// JSON parameter file; flags override its fields.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gamma_d: Option<f64>,
    #[arg(long)]
    pub delta_ghz: Option<f64>,
    #[arg(long)]
    pub t_bin: Option<f64>,
    #[arg(long)]
    pub beta_par: Option<f64>,
    #[arg(long)]
    pub beta_perp: Option<f64>,
    #[arg(long)]
    pub beta_par_prime: Option<f64>,
    #[arg(long)]
    pub beta_perp_prime: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub xi2: Option<f64>,
    #[arg(long)]
    pub xi3: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PulseArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub pulse: Shape,
    /// Gaussian full width at half maximum, ns.
    #[arg(long)]
    pub t_fwhm: Option<f64>,
    /// Square pulse length, ns; defaults to the optimal `√3π/Δ`.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fidelity of one error channel or of their product.
    Fidelity {
        #[arg(long, value_enum)]
        channel: Channel,
        #[arg(long, value_enum, default_value = "ghz")]
        target: Target,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        p: ParamArgs,
        #[command(flatten)]
        pulse: PulseArgs,
        /// Branching ratio for the first-order combined value.
        #[arg(long)]
        ratio: Option<f64>,
        /// Overhauser splitting, rad/ns.
        #[arg(long, default_value_t = 0.0)]
        delta21: f64,
    },
    /// End-of-pulse amplitudes, detection factors and excitation fidelities.
    Excitation {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        p: ParamArgs,
        #[command(flatten)]
        pulse: PulseArgs,
    },
    /// Branching fidelity report.
    Branching {
        #[arg(long, value_enum, default_value = "ghz")]
        target: Target,
        #[arg(long)]
        n: usize,
        /// Reject all off-resonant photons (xi3 = 0).
        #[arg(long)]
        filtered: bool,
        #[command(flatten)]
        p: ParamArgs,
    },
    /// Brute-force enumeration of the protocol state.
    Oracle {
        #[arg(long, value_enum, default_value = "ghz")]
        target: Target,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "branching")]
        model: Model,
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, default_value_t = 0.0)]
        delta21: f64,
    },
    /// Cluster-state generator expectations of the ideal protocol.
    Stabilizers {
        #[arg(long)]
        n: usize,
    },
    /// Grid sweep or per-N curves from a JSON config; writes CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Checks every analytic formula against enumeration.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, hide = true)]
        mutate: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io(String),
    Verify(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Verify(e) => write!(f, "verification failed: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) => e.exit_code(),
            CliError::Io(_) => 1,
            CliError::Verify(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

impl ParamArgs {
    pub fn resolve(&self) -> CliResult<ParamFile> {
        let mut f = match &self.params {
            Some(p) => ParamFile::from_json(&read(p)?)?,
            None => ParamFile::default(),
        };
        let set = |slot: &mut Option<f64>, v: Option<f64>| {
            if v.is_some() {
                *slot = v;
            }
        };
        set(&mut f.gamma_ns, self.gamma);
        set(&mut f.gamma_d_ns, self.gamma_d);
        set(&mut f.delta_ghz, self.delta_ghz);
        set(&mut f.t_bin_ns, self.t_bin);
        set(&mut f.beta_par, self.beta_par);
        set(&mut f.beta_perp, self.beta_perp);
        set(&mut f.beta_par_prime, self.beta_par_prime);
        set(&mut f.beta_perp_prime, self.beta_perp_prime);
        set(&mut f.eta, self.eta);
        set(&mut f.xi2, self.xi2);
        set(&mut f.xi3, self.xi3);
        Ok(f)
    }
}

fn pulse_spec(a: &PulseArgs, params: &EmitterParams) -> CliResult<PulseSpec> {
    Ok(match a.pulse {
        Shape::Gaussian => PulseSpec::gaussian(
            a.t_fwhm
                .ok_or_else(|| Error::validation("t_fwhm", "required for a gaussian pulse"))?,
        )?,
        Shape::Square => match a.duration {
            Some(d) => PulseSpec::square(d)?,
            None => PulseSpec::square_optimal(params.delta)?,
        },
    })
}

fn gamma_pair(f: &ParamFile) -> CliResult<(f64, f64)> {
    let g = f
        .gamma_ns
        .ok_or_else(|| Error::validation("gamma", "missing"))?;
    let gd = f.gamma_d_ns.unwrap_or(0.0);
    kernel_phonon(g, gd)?;
    Ok((g, gd))
}

enum Output {
    Json(serde_json::Value),
    Text(String),
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

fn run_command(cmd: &Command) -> CliResult<Output> {
    match cmd {
        Command::Fidelity {
            channel,
            target,
            n,
            p,
            pulse,
            ratio,
            delta21,
        } => {
            let f = p.resolve()?;
            let kind: TargetKind = (*target).into();
            let t = TargetState::new(kind, *n)?;
            let v = match channel {
                Channel::Phonon => {
                    let (g, gd) = gamma_pair(&f)?;
                    let i = indistinguishability(g, gd);
                    json!({
                        "channel": "phonon",
                        "target": kind,
                        "n": n,
                        "indistinguishability": i,
                        "exact": kernel_fidelity(&kernel_phonon(g, gd)?, t),
                        "first_order": 1.0 - *n as f64 * (1.0 - i) / 2.0,
                    })
                }
                Channel::Overhauser => json!({
                    "channel": "overhauser",
                    "target": kind,
                    "n": n,
                    "exact": kernel_fidelity(&kernel_overhauser(*delta21), t),
                }),
                Channel::Excitation => {
                    let params = f.emitter()?;
                    let c = f.collection()?;
                    let r = excitation_report(
                        &pulse_spec(pulse, &params)?,
                        &params,
                        &c,
                        *n,
                        pulse.grid,
                    )?;
                    let exact = if kind == TargetKind::Ghz {
                        r.ghz
                    } else {
                        r.cluster
                    };
                    json!({
                        "channel": "excitation",
                        "target": kind,
                        "n": n,
                        "exact": exact,
                        "first_order": r.first_order,
                    })
                }
                Channel::Branching => {
                    let b = f.branching()?;
                    let c = f.collection()?;
                    let r = branching_fidelity(&derive_detection_probs(&b, &c), t)?;
                    json!({
                        "channel": "branching",
                        "target": kind,
                        "n": n,
                        "exact": r.exact.conditional,
                        "closed_form": r.closed_form.conditional,
                        "success": r.exact.success,
                        "first_order": branching_first_order(*n, &b, c.is_filtered()),
                    })
                }
                Channel::Combined => {
                    let params = f.emitter()?;
                    let b = f.branching()?;
                    let c = f.collection()?;
                    let r = combined_fidelity(
                        *n,
                        &params,
                        &b,
                        &c,
                        &pulse_spec(pulse, &params)?,
                        kind,
                        pulse.grid,
                    )?;
                    json!({
                        "channel": "combined",
                        "target": kind,
                        "n": n,
                        "exact": r.product,
                        "factors": r,
                        "first_order": combined_first_order(*n, &params, ratio.unwrap_or_else(|| branching_ratio(&b))),
                    })
                }
                Channel::CombinedFirstOrder => {
                    let params = f.emitter()?;
                    let b = match ratio {
                        Some(r) => *r,
                        None => branching_ratio(&f.branching()?),
                    };
                    json!({
                        "channel": "combined_first_order",
                        "n": n,
                        "branching_ratio": b,
                        "first_order": combined_first_order(*n, &params, b),
                    })
                }
            };
            Ok(Output::Json(v))
        }
        Command::Excitation { n, p, pulse } => {
            let f = p.resolve()?;
            let params = f.emitter()?;
            let c = f.collection()?;
            let r = excitation_report(&pulse_spec(pulse, &params)?, &params, &c, *n, pulse.grid)?;
            let a = r.amplitudes;
            Ok(Output::Json(json!({
                "c": a.c.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "c_abs2": a.c.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>(),
                "phi": a.phi,
                "d": [r.factors.d1, r.factors.d2, r.factors.d3],
                "convergence_estimate": a.estimate,
                "fidelity": {"ghz": r.ghz, "cluster": r.cluster, "first_order": r.first_order},
            })))
        }
        Command::Branching {
            target,
            n,
            filtered,
            p,
        } => {
            let mut f = p.resolve()?;
            if *filtered {
                f.xi3 = Some(0.0);
            }
            let b = f.branching()?;
            let c = f.collection()?;
            let probs = derive_detection_probs(&b, &c);
            let r = branching_fidelity(&probs, TargetState::new((*target).into(), *n)?)?;
            Ok(Output::Json(json!({
                "target": TargetKind::from(*target),
                "n": n,
                "detection": probs,
                "branching_ratio": branching_ratio(&b),
                "unconditional": r.exact.unconditional,
                "success": r.exact.success,
                "conditional": r.exact.conditional,
                "closed_form": r.closed_form,
                "first_order": branching_first_order(*n, &b, c.is_filtered()),
            })))
        }
        Command::Oracle {
            target,
            n,
            model,
            p,
            delta21,
        } => {
            let f = p.resolve()?;
            let t = TargetState::new((*target).into(), *n)?;
            let v = match model {
                Model::Branching | Model::Retained => {
                    let probs = derive_detection_probs(&f.branching()?, &f.collection()?);
                    let r = if matches!(model, Model::Branching) {
                        branching_oracle(&probs, t)?
                    } else {
                        retained_oracle(&probs, t)?
                    };
                    to_json(&r)
                }
                Model::Phonon | Model::Overhauser => {
                    let (g, gd) = gamma_pair(&f)?;
                    let params = EmitterParams {
                        gamma: g,
                        gamma_d: gd,
                        delta: 1.0,
                        t_bin: f.t_bin_ns.unwrap_or(crate::model::DEFAULT_T_BIN_NS),
                    };
                    let m = if matches!(model, Model::Phonon) {
                        KernelModel::Phonon
                    } else {
                        KernelModel::Overhauser(*delta21)
                    };
                    json!({ "fidelity": kernel_oracle(m, &params, t)? })
                }
            };
            Ok(Output::Json(v))
        }
        Command::Stabilizers { n } => {
            TargetState::cluster(*n)?;
            Ok(Output::Json(to_json(&ideal_cluster_stabilizers(*n)?)))
        }
        Command::Sweep { config } => {
            let cfg: SweepConfig = serde_json::from_str(&read(config)?)
                .map_err(|e| Error::validation("config", e.to_string()))?;
            let mut buf = Vec::new();
            let io = |e: csv::Error| CliError::Io(e.to_string());
            match cfg {
                SweepConfig::Grid(g) => {
                    let table = sweep(&g)?;
                    if let Some(k) = table.argmax {
                        let c = &table.cells[k];
                        log::info!(
                            "argmax at {:?}: gamma {:.4} ns^-1, t_fwhm {:.4} ns",
                            c.index,
                            c.gamma,
                            c.t_fwhm
                        );
                    }
                    table.write_csv(&mut buf).map_err(io)?;
                }
                SweepConfig::Curves { n_max, scenario } => {
                    curves(n_max, &scenario)?.write_csv(&mut buf).map_err(io)?;
                }
            }
            Ok(Output::Text(String::from_utf8(buf).expect("csv is utf-8")))
        }
        Command::Verify { seed, mutate } => {
            let report = verify(*seed, *mutate);
            let text = report.render();
            if let Some(f) = report.first_failure() {
                print!("{text}");
                return Err(CliError::Verify(f));
            }
            Ok(Output::Text(text))
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = match run_command(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let text = match out {
        Output::Json(v) => format!("{}\n", serde_json::to_string_pretty(&v).expect("json")),
        Output::Text(s) => s,
    };
    let written = match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Serialized inputs of the worst case when the suite fails.
    pub failing: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn first_failure(&self) -> Option<String> {
        self.suites
            .iter()
            .find(|s| !s.passed)
            .map(|s| format!("{} ({})", s.name, s.failing.clone().unwrap_or_default()))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.suites {
            s.push_str(&format!(
                "{} {:<44} max residual {:.2e} (tol {:.0e})\n",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.max_residual,
                r.tolerance
            ));
            if let Some(f) = &r.failing {
                s.push_str(&format!("     worst case: {f}\n"));
            }
        }
        s
    }
}

struct Suite {
    name: &'static str,
    tol: f64,
    worst: f64,
    worst_case: String,
    error: Option<String>,
}

impl Suite {
    fn new(name: &'static str, tol: f64) -> Self {
        Suite {
            name,
            tol,
            worst: 0.0,
            worst_case: String::new(),
            error: None,
        }
    }

    fn record(&mut self, residual: f64, case: impl FnOnce() -> String) {
        if !(residual <= self.worst) {
            self.worst = residual;
            self.worst_case = case();
        }
    }

    fn check(&mut self, r: crate::error::Result<()>) {
        if let Err(e) = r {
            if self.error.is_none() {
                self.error = Some(e.to_string());
            }
        }
    }

    fn finish(self) -> SuiteResult {
        let passed = self.error.is_none() && self.worst <= self.tol;
        SuiteResult {
            name: self.name.to_string(),
            passed,
            max_residual: self.worst,
            tolerance: self.tol,
            failing: if passed {
                None
            } else {
                Some(self.error.unwrap_or(self.worst_case))
            },
        }
    }
}

/// Random valid branching and collection parameters.
pub fn random_probs(rng: &mut impl Rng) -> (BranchingParams, CollectionParams, DetectionProbs) {
    let w: [f64; 4] = [
        rng.gen_range(0.5..1.0),
        rng.gen_range(0.0..0.3),
        rng.gen_range(0.0..0.3),
        rng.gen_range(0.0..0.3),
    ];
    let s: f64 = w.iter().sum();
    let b =
        BranchingParams::with_closure(w[1] / s, w[2] / s, w[3] / s).expect("valid by construction");
    let xi2: f64 = rng.gen_range(0.5..=1.0);
    let c = CollectionParams::new(rng.gen_range(0.5..=1.0), xi2, rng.gen_range(0.0..=xi2))
        .expect("valid by construction");
    (b, c, derive_detection_probs(&b, &c))
}

/// Runs the oracle-versus-analytic suites. `mutate` perturbs the exact
/// branching formula so the harness can be seen to fail.
pub fn verify(seed: u64, mutate: bool) -> VerifyReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut suites = Vec::new();

    let mut s = Suite::new("overhauser kernel and enumeration", 1e-12);
    for _ in 0..10 {
        let d21: f64 = rng.gen_range(-50.0..50.0);
        for n in 1..=6 {
            for kind in [TargetKind::Ghz, TargetKind::Cluster] {
                let t = TargetState { kind, n_photons: n };
                let k = kernel_fidelity(&kernel_overhauser(d21), t);
                s.record((k - 1.0).abs(), || format!("delta21={d21} n={n} {kind}"));
                let params = EmitterParams {
                    gamma: 1.0,
                    gamma_d: 0.0,
                    delta: 1.0,
                    t_bin: 10.0,
                };
                match kernel_oracle(KernelModel::Overhauser(d21), &params, t) {
                    Ok(o) => s.record((o - 1.0).abs(), || {
                        format!("oracle delta21={d21} n={n} {kind}")
                    }),
                    Err(e) => s.check(Err(e)),
                }
            }
        }
    }
    suites.push(s.finish());

    let mut s = Suite::new("phonon kernel vs enumeration", 1e-10);
    for _ in 0..10 {
        let gamma: f64 = rng.gen_range(0.5..6.0);
        let gd = gamma * rng.gen_range(0.0..0.2);
        let params = EmitterParams {
            gamma,
            gamma_d: gd,
            delta: 1.0,
            t_bin: 10.0,
        };
        for n in 1..=6 {
            for kind in [TargetKind::Ghz, TargetKind::Cluster] {
                let t = TargetState { kind, n_photons: n };
                let k = kernel_fidelity(&kernel_phonon(gamma, gd).expect("valid"), t);
                match kernel_oracle(KernelModel::Phonon, &params, t) {
                    Ok(o) => s.record((k - o).abs(), || {
                        format!("gamma={gamma} gamma_d={gd} n={n} {kind}")
                    }),
                    Err(e) => s.check(Err(e)),
                }
            }
        }
    }
    suites.push(s.finish());

    let mut exact = Suite::new("branching exact transfer vs enumeration", 1e-10);
    let mut closed = Suite::new("branching closed form vs retained terms", 1e-10);
    let mut succ = Suite::new("branching success probability", 1e-10);
    for _ in 0..50 {
        let (b, c, p) = random_probs(&mut rng);
        for n in 1..=4 {
            for kind in [TargetKind::Ghz, TargetKind::Cluster] {
                let t = TargetState { kind, n_photons: n };
                let case = || format!("beta={b:?} collection={c:?} n={n} {kind}");
                let mut f = exact_unconditional(&p, t);
                if mutate {
                    f *= 1.001;
                }
                let pr = success_probability(&transfer_matrix(&p, kind), n);
                match branching_oracle(&p, t) {
                    Ok(o) => {
                        exact.record((f / pr - o.fidelity).abs(), case);
                        succ.record((pr - o.success).abs(), case);
                    }
                    Err(e) => exact.check(Err(e)),
                }
                match retained_oracle(&p, t) {
                    Ok(o) => {
                        let cf = crate::branching::closed_form_unconditional(&p, t);
                        closed.record((cf - o.unconditional).abs(), case);
                    }
                    Err(e) => closed.check(Err(e)),
                }
            }
        }
    }
    suites.extend([exact.finish(), closed.finish(), succ.finish()]);

    let mut s = Suite::new("cluster stabilizers, n <= 8", 1e-12);
    for n in 1..=8 {
        match ideal_cluster_stabilizers(n) {
            Ok(g) => {
                let worst = g.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
                s.record(worst, || format!("n={n} generators={g:?}"));
            }
            Err(e) => s.check(Err(e)),
        }
    }
    suites.push(s.finish());

    let mut s = Suite::new("two-photon error decomposition", 1e-12);
    for _ in 0..20 {
        let (_, _, p) = random_probs(&mut rng);
        let r = decomposition_check(&p);
        s.record(r.residual, || format!("{p:?}"));
        s.record(
            (r.error_probability - p.p_perp_prime * p.p_par).abs(),
            || format!("probability {p:?}"),
        );
    }
    suites.push(s.finish());

    VerifyReport { seed, suites }
}
