//! Command-line front end.
//!
//! Exit codes: 0 success or safe verdict, 1 parse or usage error, 2 an
//! unbounded stealthy attack exists, 3 marginal verdict, 4 unstable loop or
//! plant.

pub mod document;
pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::attack::{self, AttackProblem, AttackStatus, RowSet, Scenario, SolveOptions};
use crate::error::Error;
use crate::horizon::SignalWindow;
use crate::lti::{close_loop, decay_horizon, is_stable, pulse_response, ClosedLoopMaps, GeneralizedPlant, Matrix, StateSpaceModel};
use crate::resilience::{kd_iterate, SynthesisConfig, SETTLING_EPS};
use crate::simkit::{detect, simulate};
use crate::vulnerability::{actuator_attack_existence, sensor_attack_existence, Verdict, DEFAULT_TOL};

use document::{
    window_rows, youla_rows, AnalyzeReport, AttackReport, ChannelReport, IterationReport, ReportDocument,
    SimulateReport, SynthReport,
};
use io::{load_system, read_attack_csv, write_trajectory_csv, LoadedSystem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNBOUNDED: i32 = 2;
pub const EXIT_MARGINAL: i32 = 3;
pub const EXIT_UNSTABLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "stealthlp", version, about = "Worst-case stealthy attack analysis for LTI feedback loops")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Audit a SISO plant for unbounded stealthy actuator and sensor attacks.
    Analyze(AnalyzeArgs),
    /// Compute the worst bounded stealthy attack on a closed loop.
    Attack(AttackArgs),
    /// Run the attack / controller iteration on an open-loop-stable plant.
    Synth(SynthArgs),
    /// Replay an attack CSV through the closed loop.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub model: PathBuf,
    /// Unit-circle tolerance for root classification.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Which attack channel to audit.
    #[arg(long, value_parser = ["actuator", "sensor", "both"], default_value = "both")]
    pub channel: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LoopArgs {
    /// Treat a missing controller as K = 0.
    #[arg(long)]
    pub open_loop: bool,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub scenario: u8,
    #[arg(long)]
    pub t_a: usize,
    /// Stealth threshold, one value or one per monitored channel.
    #[arg(long, value_delimiter = ',', required = true)]
    pub theta: Vec<f64>,
    /// Attack magnitude bound; `inf` allowed.
    #[arg(long)]
    pub alpha: f64,
    /// Tail tolerance for automatic windows (default 1e-6 * min theta).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub t_zd: Option<usize>,
    #[arg(long)]
    pub t_psi_d: Option<usize>,
    /// Longest window considered by automatic selection.
    #[arg(long, default_value_t = 1000)]
    pub horizon_max: usize,
    #[command(flatten)]
    pub loop_args: LoopArgs,
    /// Search every impact row regardless of scenario.
    #[arg(long)]
    pub full_rows: bool,
    #[arg(long, env = "STEALTHLP_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Write the critical row LP in text form.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Attack and trajectory CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub n_q: usize,
    /// Evaluation horizon; defaults to the smallest admissible one.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub theta: Vec<f64>,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub scenario: u8,
    #[arg(long)]
    pub t_a: usize,
    #[arg(long, default_value_t = 0)]
    pub t_zd: usize,
    #[arg(long, default_value_t = 0)]
    pub t_psi_d: usize,
    #[arg(long, default_value_t = 10)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1)]
    pub min_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub gamma_tol: f64,
    /// Constrain only against the latest attack.
    #[arg(long)]
    pub no_accumulate: bool,
    #[arg(long, default_value_t = 1000)]
    pub horizon_max: usize,
    #[arg(long, env = "STEALTHLP_JOBS", default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub model: PathBuf,
    /// CSV with `d_1..d_m` columns; other columns are ignored.
    #[arg(long)]
    pub attack: PathBuf,
    /// Last simulated sample; defaults to the attack length minus one.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub theta: Vec<f64>,
    /// Last sample checked against the threshold (default: horizon).
    #[arg(long)]
    pub window_end: Option<usize>,
    /// Last sample counted for impact (default: horizon).
    #[arg(long)]
    pub impact_end: Option<usize>,
    #[command(flatten)]
    pub loop_args: LoopArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Stability(_) => EXIT_UNSTABLE,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::LoadError> for Failure {
    fn from(e: io::LoadError) -> Self {
        Self::usage(e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parse arguments, run, and return the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn emit(doc: &ReportDocument, out: Option<&Path>) -> std::result::Result<(), Failure> {
    let text = doc.to_json();
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_theta(theta: &[f64]) -> std::result::Result<(), Failure> {
    if theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Failure::usage("--theta values must be finite and non-negative"));
    }
    Ok(())
}

fn worst(a: Verdict, b: Verdict) -> Verdict {
    let rank = |v: Verdict| match v {
        Verdict::Safe => 0,
        Verdict::Marginal => 1,
        Verdict::UnboundedAttackExists => 2,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> CmdResult {
    let sys = load_system(&args.model)?;
    let p = sys.file.transfer()?;
    let mut channels = Vec::new();
    if args.channel != "sensor" {
        channels.push(ChannelReport::new("actuator", &actuator_attack_existence(&p, args.tol)?));
    }
    if args.channel != "actuator" {
        channels.push(ChannelReport::new("sensor", &sensor_attack_existence(&p, args.tol)?));
    }
    let verdict = channels.iter().fold(Verdict::Safe, |acc, c| worst(acc, c.verdict));
    for c in &channels {
        let fmt = |v: &[[f64; 2]]| {
            v.iter()
                .map(|r| if r[1] == 0.0 { format!("{}", r[0]) } else { format!("{}{:+}i", r[0], r[1]) })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let detail = match c.verdict {
            Verdict::UnboundedAttackExists => format!(" (unstable: {})", fmt(&c.unstable)),
            Verdict::Marginal => format!(" (on unit circle: {})", fmt(&c.marginal)),
            Verdict::Safe => String::new(),
        };
        println!("{}: {:?}{detail}", c.channel, c.verdict);
        if let Some(n) = &c.note {
            println!("  note: {n}");
        }
    }
    if let Some(out) = &args.out {
        let params = json!({"tol": args.tol, "channel": args.channel});
        let mut doc = ReportDocument::new("analyze", &sys.file.name, &sys.bytes, &params);
        doc.analyze = Some(AnalyzeReport {
            tol: args.tol,
            num: p.num().to_vec(),
            den: p.den().to_vec(),
            channels,
            verdict,
        });
        emit(&doc, Some(out))?;
    }
    Ok(match verdict {
        Verdict::Safe => EXIT_OK,
        Verdict::UnboundedAttackExists => EXIT_UNBOUNDED,
        Verdict::Marginal => EXIT_MARGINAL,
    })
}

/// Closed loop from the file's controller, or `K = 0` under `--open-loop`.
fn closed_loop(sys: &LoadedSystem, loop_args: &LoopArgs) -> std::result::Result<(GeneralizedPlant, ClosedLoopMaps), Failure> {
    let plant = sys.file.plant()?;
    let k = match sys.file.controller(&plant)? {
        Some(k) => k,
        None if loop_args.open_loop => StateSpaceModel::static_gain(Matrix::zeros(plant.m_u(), plant.p_y())),
        None => return Err(Failure::usage("system file has no controller; pass --open-loop to use K = 0")),
    };
    let maps = close_loop(&plant, &k)?;
    if !is_stable(&maps.phi_zd)? {
        return Err(Failure {
            code: EXIT_UNSTABLE,
            message: "closed loop is not stable".into(),
        });
    }
    Ok((plant, maps))
}

fn scenario_of(n: u8) -> Scenario {
    Scenario::from_number(n).expect("clap restricts the range")
}

pub fn cmd_attack(args: &AttackArgs) -> CmdResult {
    check_theta(&args.theta)?;
    if !(args.alpha > 0.0) {
        return Err(Failure::usage("--alpha must be positive"));
    }
    let scenario = scenario_of(args.scenario);
    if scenario == Scenario::ImpactDuring && (args.t_zd.unwrap_or(0) != 0 || args.t_psi_d.unwrap_or(0) != 0) {
        return Err(Failure::usage("scenario 3 requires t_zd = t_psi_d = 0"));
    }
    let sys = load_system(&args.model)?;
    let (_, maps) = closed_loop(&sys, &args.loop_args)?;

    let min_theta = args.theta.iter().copied().fold(f64::INFINITY, f64::min);
    let epsilon = args.epsilon.unwrap_or(1e-6 * min_theta);
    let needs_auto = match scenario {
        Scenario::StealthAlways => args.t_zd.is_none() || args.t_psi_d.is_none(),
        Scenario::StealthDuring => args.t_zd.is_none(),
        Scenario::ImpactDuring => false,
    };
    if needs_auto && !(epsilon > 0.0) {
        return Err(Failure::usage("automatic windows need a positive epsilon; pass --epsilon or explicit windows"));
    }
    if needs_auto && args.alpha.is_infinite() {
        return Err(Failure::usage("automatic windows need a finite alpha; pass --t-zd and --t-psi-d"));
    }
    let auto = |sys: &StateSpaceModel| decay_horizon(sys, args.alpha, epsilon, args.horizon_max);
    let (t_zd, t_psi_d) = match scenario {
        Scenario::ImpactDuring => (0, 0),
        Scenario::StealthDuring => (
            args.t_zd.map_or_else(|| auto(&maps.phi_zd), Ok)?,
            args.t_psi_d.unwrap_or(0),
        ),
        Scenario::StealthAlways => (
            args.t_zd.map_or_else(|| auto(&maps.phi_zd), Ok)?,
            args.t_psi_d.map_or_else(|| auto(&maps.phi_psi_d), Ok)?,
        ),
    };
    let t_d = t_zd.max(t_psi_d);
    let horizon = args.t_a + t_d;
    let problem = AttackProblem::new(
        pulse_response(&maps.phi_zd, horizon),
        pulse_response(&maps.phi_psi_d, horizon),
        args.t_a,
        t_zd,
        t_psi_d,
        &args.theta,
        args.alpha,
        scenario,
    )?;
    let opts = SolveOptions {
        jobs: args.jobs.max(1),
        rows: if args.full_rows { RowSet::Full } else { RowSet::Scenario },
        ..Default::default()
    };
    let sol = attack::solve_with(&problem, &opts)?;

    if let Some(path) = &args.dump_lp {
        let lp = attack::build_row_lp(&problem, sol.n_star, sol.critical_component, problem.stealth_end())?;
        std::fs::write(path, lp.to_string()).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }

    let bounded = sol.status == AttackStatus::Bounded;
    let traj = simulate(&maps, &sol.d_hat, horizon)?;
    let (replay_impact, detection, window_detection) = if bounded {
        let impact = (0..=problem.impact_end())
            .flat_map(|k| traj.z.sample(k).iter().map(|v| v.abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        (
            Some(impact),
            Some(detect(&traj.psi, problem.theta(), problem.stealth_end())?),
            Some(detect(&traj.psi, problem.theta(), horizon)?),
        )
    } else {
        (None, None, None)
    };

    let params = json!({
        "scenario": args.scenario, "t_a": args.t_a, "theta": args.theta, "alpha": args.alpha.to_string(),
        "epsilon": epsilon, "t_zd": t_zd, "t_psi_d": t_psi_d, "full_rows": args.full_rows,
        "open_loop": args.loop_args.open_loop,
    });
    let mut doc = ReportDocument::new("attack", &sys.file.name, &sys.bytes, &params);
    doc.attack = Some(AttackReport {
        scenario: args.scenario,
        t_a: args.t_a,
        t_zd,
        t_psi_d,
        t_d,
        windows_auto: needs_auto,
        epsilon: needs_auto.then_some(epsilon),
        theta: problem.theta().to_vec(),
        alpha: args.alpha,
        status: sol.status,
        mu: sol.mu,
        n_star: sol.n_star,
        critical_component: sol.critical_component,
        per_row_values: sol.per_row_values.clone(),
        d_hat: window_rows(&sol.d_hat),
        stealth_window_end: problem.stealth_end(),
        impact_window_end: problem.impact_end(),
        replay_impact,
        detection,
        window_detection,
    });
    if let Some(csv) = &args.csv {
        write_trajectory_csv(csv, &sol.d_hat, Some(&traj.z), Some(&traj.psi))?;
    }
    emit(&doc, args.out.as_deref())?;
    if bounded {
        eprintln!("mu = {} at n* = {}, component {}", sol.mu, sol.n_star, sol.critical_component);
        Ok(EXIT_OK)
    } else {
        eprintln!("unbounded stealthy attack");
        Ok(EXIT_UNBOUNDED)
    }
}

pub fn cmd_synth(args: &SynthArgs) -> CmdResult {
    check_theta(&args.theta)?;
    let scenario = scenario_of(args.scenario);
    let sys = load_system(&args.model)?;
    let plant = sys.file.plant()?;
    if !is_stable(plant.model())? {
        return Err(Failure {
            code: EXIT_UNSTABLE,
            message: "plant is not open-loop stable".into(),
        });
    }
    let t_d = args.t_zd.max(args.t_psi_d);
    let horizon = match args.horizon {
        Some(t) => t,
        None => {
            let settle = decay_horizon(plant.model(), 1.0, SETTLING_EPS, args.horizon_max)?;
            (args.n_q + settle).max(args.t_a + t_d)
        }
    };
    let config = SynthesisConfig {
        n_q: args.n_q,
        horizon,
        theta: args.theta.clone(),
        alpha: args.alpha,
        scenario,
        t_a: args.t_a,
        t_zd: args.t_zd,
        t_psi_d: args.t_psi_d,
        max_iters: args.max_iters,
        min_iters: args.min_iters,
        gamma_tol: args.gamma_tol,
        accumulate: !args.no_accumulate,
        jobs: args.jobs.max(1),
    };
    let (trace, q_final) = kd_iterate(&plant, &config)?;
    let params = json!({
        "n_q": args.n_q, "horizon": horizon, "theta": args.theta, "alpha": args.alpha, "scenario": args.scenario,
        "t_a": args.t_a, "t_zd": args.t_zd, "t_psi_d": args.t_psi_d, "max_iters": args.max_iters,
        "min_iters": args.min_iters, "gamma_tol": args.gamma_tol.to_string(), "accumulate": config.accumulate,
    });
    let mut doc = ReportDocument::new("synth", &sys.file.name, &sys.bytes, &params);
    doc.synth = Some(SynthReport {
        n_q: args.n_q,
        horizon,
        theta: args.theta.clone(),
        alpha: args.alpha,
        scenario: args.scenario,
        t_a: args.t_a,
        t_zd: args.t_zd,
        t_psi_d: args.t_psi_d,
        max_iters: args.max_iters,
        min_iters: args.min_iters,
        gamma_tol: args.gamma_tol,
        accumulate: config.accumulate,
        termination: trace.termination,
        iterations: trace
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| IterationReport {
                index: i,
                gamma: r.gamma,
                mu: r.mu,
                tail_bound: r.tail_bound,
                d: window_rows(&r.d),
                q: youla_rows(&r.q),
            })
            .collect(),
        q_final: youla_rows(&q_final),
    });
    emit(&doc, args.out.as_deref())?;
    for (i, r) in trace.records.iter().enumerate() {
        eprintln!("iter {i}: gamma = {} mu = {}", r.gamma, r.mu);
    }
    Ok(EXIT_OK)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    check_theta(&args.theta)?;
    let sys = load_system(&args.model)?;
    let (plant, maps) = closed_loop(&sys, &args.loop_args)?;
    let d: SignalWindow = read_attack_csv(&args.attack)?;
    if d.width() != plant.m_d() {
        return Err(Failure::usage(format!(
            "attack CSV has {} channels, plant expects {}",
            d.width(),
            plant.m_d()
        )));
    }
    let horizon = args.horizon.unwrap_or(d.len() - 1);
    let window_end = args.window_end.unwrap_or(horizon);
    let impact_end = args.impact_end.unwrap_or(horizon);
    if window_end > horizon || impact_end > horizon {
        return Err(Failure::usage("window ends must not exceed the horizon"));
    }
    let traj = simulate(&maps, &d, horizon)?;
    let detection = detect(&traj.psi, &args.theta, window_end)?;
    let (mut max_z, mut impact_time, mut impact_component) = (0.0f64, 0, 0);
    for k in 0..=impact_end {
        for (i, v) in traj.z.sample(k).iter().enumerate() {
            if v.abs() > max_z {
                (max_z, impact_time, impact_component) = (v.abs(), k, i);
            }
        }
    }
    let attack_bytes = std::fs::read(&args.attack).unwrap_or_default();
    let params = json!({
        "horizon": horizon, "theta": args.theta, "window_end": window_end, "impact_end": impact_end,
        "attack_digest": document::digest(&attack_bytes, &json!(null)), "open_loop": args.loop_args.open_loop,
    });
    let mut doc = ReportDocument::new("simulate", &sys.file.name, &sys.bytes, &params);
    doc.simulate = Some(SimulateReport {
        horizon,
        theta: args.theta.clone(),
        impact_window_end: impact_end,
        max_z,
        impact_time,
        impact_component,
        window_end,
        detection: detection.clone(),
    });
    if let Some(csv) = &args.csv {
        write_trajectory_csv(csv, &d.resized(horizon + 1), Some(&traj.z), Some(&traj.psi))?;
    }
    emit(&doc, args.out.as_deref())?;
    match detection.alarm {
        Some((t, ch)) => eprintln!("alarm at k = {t}, channel {ch}; max |z| = {max_z}"),
        None => eprintln!("no alarm; max |z| = {max_z}"),
    }
    Ok(EXIT_OK)
}
