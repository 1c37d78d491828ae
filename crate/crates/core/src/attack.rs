//! Worst-case bounded stealthy attacks as families of row LPs.
//!
//! The attack `d(0..=t_a)` is the LP decision vector; samples after `t_a`
//! are eliminated rather than constrained. Each candidate row `(n, i)` of the
//! lifted impact operator gives one LP maximizing `z_i(n)` under the stealth
//! and magnitude bounds. Because the feasible set is symmetric under
//! `d -> -d`, maximizing `+z_i(n)` also maximizes `|z_i(n)|`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::horizon::{apply, lift, SignalWindow};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::lti::PulseResponse;

/// Absolute tolerance for replay checks, scaled by `max(1, |value|)`.
pub const VERIFY_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Scenario {
    /// Stealthy during and after the attack; impact anywhere in the window.
    StealthAlways,
    /// Stealthy only while attacking; impact anywhere in the window.
    StealthDuring,
    /// Stealthy while attacking; impact only up to the end of the attack.
    ImpactDuring,
}

impl Scenario {
    pub fn number(self) -> u8 {
        match self {
            Scenario::StealthAlways => 1,
            Scenario::StealthDuring => 2,
            Scenario::ImpactDuring => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Scenario::StealthAlways),
            2 => Some(Scenario::StealthDuring),
            3 => Some(Scenario::ImpactDuring),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackProblem {
    phi_zd: PulseResponse,
    phi_psi_d: PulseResponse,
    t_a: usize,
    t_zd: usize,
    t_psi_d: usize,
    theta: Vec<f64>,
    alpha: f64,
    scenario: Scenario,
}

impl AttackProblem {
    /// `theta` is either one value broadcast to every monitored channel or one per channel.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        phi_zd: PulseResponse,
        phi_psi_d: PulseResponse,
        t_a: usize,
        t_zd: usize,
        t_psi_d: usize,
        theta: &[f64],
        alpha: f64,
        scenario: Scenario,
    ) -> Result<Self> {
        if phi_zd.cols() != phi_psi_d.cols() {
            return Err(Error::Dimension(format!(
                "impact map has {} attack inputs, monitor map has {}",
                phi_zd.cols(),
                phi_psi_d.cols()
            )));
        }
        let need = t_a + t_zd.max(t_psi_d);
        if phi_zd.horizon() < need || phi_psi_d.horizon() < need {
            return Err(Error::InvalidArgument(format!(
                "pulse horizons {} and {} are shorter than t_a + t_d = {need}",
                phi_zd.horizon(),
                phi_psi_d.horizon()
            )));
        }
        let q = phi_psi_d.rows();
        let theta = match theta.len() {
            1 => vec![theta[0]; q],
            l if l == q => theta.to_vec(),
            l => {
                return Err(Error::Dimension(format!("{l} thresholds for {q} monitored channels")));
            }
        };
        if theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidArgument("thresholds must be finite and non-negative".into()));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("attack bound must be positive, got {alpha}")));
        }
        if scenario == Scenario::ImpactDuring && (t_zd != 0 || t_psi_d != 0) {
            return Err(Error::InvalidArgument(
                "impact-during-attack scenario requires t_zd = t_psi_d = 0".into(),
            ));
        }
        Ok(Self {
            phi_zd,
            phi_psi_d,
            t_a,
            t_zd,
            t_psi_d,
            theta,
            alpha,
            scenario,
        })
    }

    pub fn phi_zd(&self) -> &PulseResponse {
        &self.phi_zd
    }
    pub fn phi_psi_d(&self) -> &PulseResponse {
        &self.phi_psi_d
    }
    pub fn t_a(&self) -> usize {
        self.t_a
    }
    pub fn t_zd(&self) -> usize {
        self.t_zd
    }
    pub fn t_psi_d(&self) -> usize {
        self.t_psi_d
    }
    pub fn t_d(&self) -> usize {
        self.t_zd.max(self.t_psi_d)
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn scenario(&self) -> Scenario {
        self.scenario
    }
    pub fn attack_width(&self) -> usize {
        self.phi_zd.cols()
    }

    /// Samples in the analysis window `0..=t_a + t_d`.
    pub fn window_len(&self) -> usize {
        self.t_a + self.t_d() + 1
    }

    /// Same data under another scenario (windows are kept).
    pub fn with_scenario(&self, scenario: Scenario) -> Result<Self> {
        Self::new(
            self.phi_zd.clone(),
            self.phi_psi_d.clone(),
            self.t_a,
            self.t_zd,
            self.t_psi_d,
            &self.theta,
            self.alpha,
            scenario,
        )
    }

    /// Same data with `theta` and `alpha` multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let theta: Vec<f64> = self.theta.iter().map(|t| t * c).collect();
        Self::new(
            self.phi_zd.clone(),
            self.phi_psi_d.clone(),
            self.t_a,
            self.t_zd,
            self.t_psi_d,
            &theta,
            self.alpha * c,
            self.scenario,
        )
    }

    /// Last time index of the stealth constraints.
    pub fn stealth_end(&self) -> usize {
        match self.scenario {
            Scenario::StealthAlways => self.t_a + self.t_psi_d,
            Scenario::StealthDuring | Scenario::ImpactDuring => self.t_a,
        }
    }

    /// Last time index at which impact counts.
    pub fn impact_end(&self) -> usize {
        match self.scenario {
            Scenario::StealthAlways | Scenario::StealthDuring => self.t_a + self.t_zd,
            Scenario::ImpactDuring => self.t_a,
        }
    }

    /// Row positions `n` searched by the scenario's solver.
    pub fn searched_rows(&self) -> std::ops::RangeInclusive<usize> {
        match self.scenario {
            Scenario::StealthAlways => 0..=self.t_a + self.t_zd,
            Scenario::StealthDuring => self.t_a..=self.t_a + self.t_zd,
            Scenario::ImpactDuring => self.t_a..=self.t_a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AttackStatus {
    Bounded,
    UnboundedAttack,
}

/// Optimum of one `(n, component)` row LP.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RowValue {
    pub n: usize,
    pub component: usize,
    /// `None` when the row was skipped as dominated; `+inf` when unbounded.
    #[serde(with = "crate::report::opt_f64")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSolution {
    pub status: AttackStatus,
    /// Attack over `0..=t_a + t_d`, zero after `t_a`.
    pub d_hat: SignalWindow,
    pub mu: f64,
    pub n_star: usize,
    pub critical_component: usize,
    pub per_row_values: Vec<RowValue>,
}

/// Which row positions to search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowSet {
    /// The scenario's own row set.
    #[default]
    Scenario,
    /// Every row `0..=t_a + t_zd`, whatever the scenario.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Worker threads for independent row LPs; `1` solves sequentially.
    pub jobs: usize,
    /// Skip rows whose magnitude bound cannot beat the incumbent.
    pub skip_dominated: bool,
    pub rows: RowSet,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            skip_dominated: true,
            rows: RowSet::Scenario,
        }
    }
}

/// LP maximizing `z_i(n)` subject to stealth rows `tau = 0..=stealth_horizon`.
pub fn build_row_lp(problem: &AttackProblem, n: usize, i: usize, stealth_horizon: usize) -> Result<LinearProgram> {
    if n > problem.t_a + problem.t_zd || i >= problem.phi_zd.rows() {
        return Err(Error::InvalidArgument(format!("row ({n}, {i}) is outside the impact window")));
    }
    if stealth_horizon > problem.phi_psi_d.horizon() {
        return Err(Error::InvalidArgument(format!(
            "stealth horizon {stealth_horizon} exceeds the monitor pulse horizon"
        )));
    }
    let m = problem.attack_width();
    let vars = (problem.t_a + 1) * m;
    let mut lp = LinearProgram::new(vars);

    let mut c = vec![0.0; vars];
    for k in 0..=n.min(problem.t_a) {
        let phi = problem.phi_zd.sample(n - k);
        for l in 0..m {
            c[k * m + l] = phi[(i, l)];
        }
    }
    lp.maximize(c);

    for tau in 0..=stealth_horizon {
        for j in 0..problem.phi_psi_d.rows() {
            let mut row = vec![0.0; vars];
            for k in 0..=tau.min(problem.t_a) {
                let phi = problem.phi_psi_d.sample(tau - k);
                for l in 0..m {
                    row[k * m + l] = phi[(j, l)];
                }
            }
            // 0 <= theta holds trivially.
            if row.iter().any(|v| *v != 0.0) {
                lp.add_abs_le(row, problem.theta[j]);
            }
        }
    }
    lp.set_all_bounds(-problem.alpha, problem.alpha);
    Ok(lp)
}

pub fn solve_scenario1(problem: &AttackProblem) -> Result<AttackSolution> {
    expect_scenario(problem, Scenario::StealthAlways)?;
    solve_with(problem, &SolveOptions::default())
}

pub fn solve_scenario2(problem: &AttackProblem) -> Result<AttackSolution> {
    expect_scenario(problem, Scenario::StealthDuring)?;
    solve_with(problem, &SolveOptions::default())
}

pub fn solve_scenario3(problem: &AttackProblem) -> Result<AttackSolution> {
    expect_scenario(problem, Scenario::ImpactDuring)?;
    solve_with(problem, &SolveOptions::default())
}

/// Dispatch on the problem's scenario with default options.
pub fn solve(problem: &AttackProblem) -> Result<AttackSolution> {
    solve_with(problem, &SolveOptions::default())
}

fn expect_scenario(problem: &AttackProblem, want: Scenario) -> Result<()> {
    if problem.scenario != want {
        return Err(Error::InvalidArgument(format!(
            "problem is posed for {:?}, solver expects {:?}",
            problem.scenario, want
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Candidate {
    n: usize,
    component: usize,
    bound: f64,
}

#[derive(Debug, Clone)]
struct RowResult {
    n: usize,
    component: usize,
    value: f64,
    x: Vec<f64>,
}

/// `a` beats `b`: larger value, ties to the smaller `(n, component)`.
fn beats(a: &RowResult, b: &RowResult) -> bool {
    if a.value.is_infinite() || b.value.is_infinite() {
        return match (a.value.is_infinite(), b.value.is_infinite()) {
            (true, false) => true,
            (false, true) => false,
            _ => (a.n, a.component) < (b.n, b.component),
        };
    }
    let tol = TIE_TOL * b.value.abs().max(1.0);
    if a.value > b.value + tol {
        return true;
    }
    (a.value - b.value).abs() <= tol && (a.n, a.component) < (b.n, b.component)
}

fn solve_row(problem: &AttackProblem, cand: &Candidate, stealth_horizon: usize) -> Result<RowResult> {
    let vars = (problem.t_a + 1) * problem.attack_width();
    if cand.bound == 0.0 {
        return Ok(RowResult {
            n: cand.n,
            component: cand.component,
            value: 0.0,
            x: vec![0.0; vars],
        });
    }
    let lp = build_row_lp(problem, cand.n, cand.component, stealth_horizon)?;
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(RowResult {
            n: cand.n,
            component: cand.component,
            value: sol.value,
            x: sol.x,
        }),
        LpStatus::Unbounded => Ok(RowResult {
            n: cand.n,
            component: cand.component,
            value: f64::INFINITY,
            x: vec![0.0; vars],
        }),
        LpStatus::Infeasible => Err(Error::Numerical(format!(
            "row LP ({}, {}) reported infeasible although the zero attack is feasible",
            cand.n, cand.component
        ))),
    }
}

/// Solve the problem's scenario with explicit options.
pub fn solve_with(problem: &AttackProblem, opts: &SolveOptions) -> Result<AttackSolution> {
    let rows = match opts.rows {
        RowSet::Scenario => problem.searched_rows(),
        RowSet::Full => 0..=problem.t_a + problem.t_zd,
    };
    let stealth_horizon = problem.stealth_end();
    let m = problem.attack_width();

    let mut candidates = Vec::new();
    for n in rows {
        for component in 0..problem.phi_zd.rows() {
            let mut s = 0.0;
            for k in 0..=n.min(problem.t_a) {
                let phi = problem.phi_zd.sample(n - k);
                s += (0..m).map(|l| phi[(component, l)].abs()).sum::<f64>();
            }
            let bound = if s == 0.0 { 0.0 } else { problem.alpha * s };
            candidates.push(Candidate { n, component, bound });
        }
    }
    // Stable sort keeps (n, component) order among equal bounds.
    candidates.sort_by(|a, b| b.bound.partial_cmp(&a.bound).unwrap_or(Ordering::Equal));

    // Parallel runs solve every row up front, then replay the sequential
    // scan so skipped rows and tie-breaks come out identical.
    let solved: Option<Vec<RowResult>> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        use rayon::prelude::*;
        let all: Vec<Result<RowResult>> =
            pool.install(|| candidates.par_iter().map(|c| solve_row(problem, c, stealth_horizon)).collect());
        Some(all.into_iter().collect::<Result<_>>()?)
    } else {
        None
    };

    let mut results: Vec<Option<RowResult>> = vec![None; candidates.len()];
    let mut best: Option<RowResult> = None;
    for (i, cand) in candidates.iter().enumerate() {
        if let Some(b) = &best {
            if b.value.is_infinite() {
                continue;
            }
            let tol = TIE_TOL * b.value.abs().max(1.0);
            if opts.skip_dominated && cand.bound < b.value - tol {
                continue;
            }
        }
        let r = match &solved {
            Some(all) => all[i].clone(),
            None => solve_row(problem, cand, stealth_horizon)?,
        };
        if best.as_ref().map_or(true, |b| beats(&r, b)) {
            best = Some(r.clone());
        }
        results[i] = Some(r);
    }

    let best = results
        .iter()
        .flatten()
        .fold(None::<&RowResult>, |acc, r| match acc {
            Some(b) if !beats(r, b) => Some(b),
            _ => Some(r),
        })
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("attack problem has no impact rows".into()))?;

    let mut per_row_values: Vec<RowValue> = candidates
        .iter()
        .zip(&results)
        .map(|(c, r)| RowValue {
            n: c.n,
            component: c.component,
            value: r.as_ref().map(|r| r.value),
        })
        .collect();
    per_row_values.sort_by_key(|r| (r.n, r.component));

    let len = problem.window_len();
    let mut d_hat = SignalWindow::zeros(m, len);
    for k in 0..=problem.t_a {
        d_hat.sample_mut(k).copy_from_slice(&best.x[k * m..(k + 1) * m]);
    }

    let solution = AttackSolution {
        status: if best.value.is_infinite() {
            AttackStatus::UnboundedAttack
        } else {
            AttackStatus::Bounded
        },
        d_hat,
        mu: best.value,
        n_star: best.n,
        critical_component: best.component,
        per_row_values,
    };
    if solution.status == AttackStatus::Bounded {
        verify_attack(problem, &solution)?;
    }
    Ok(solution)
}

/// Replay of an attack through both pulse responses.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VerificationReport {
    /// `max |z|` over the impact window.
    pub max_z: f64,
    pub impact_time: usize,
    pub impact_component: usize,
    /// `max |psi|` over the stealth window.
    pub max_psi: f64,
    /// Smallest `theta_j - |psi_j(tau)|` over the stealth window.
    pub stealth_margin: f64,
    /// First `(time, channel)` where `|psi_j| > theta_j` beyond tolerance.
    pub first_violation: Option<(usize, usize)>,
}

/// Convolve `d` through the problem's maps and measure impact and stealth.
pub fn replay_attack(problem: &AttackProblem, d: &SignalWindow) -> Result<VerificationReport> {
    let len = problem.window_len();
    let horizon = len - 1;
    let d = d.resized(len);
    let z = apply(&lift(problem.phi_zd(), horizon)?, &d)?;
    let psi = apply(&lift(problem.phi_psi_d(), horizon)?, &d)?;

    let (mut max_z, mut impact_time, mut impact_component) = (0.0f64, 0, 0);
    for n in 0..=problem.impact_end() {
        for (i, v) in z.sample(n).iter().enumerate() {
            if v.abs() > max_z {
                max_z = v.abs();
                impact_time = n;
                impact_component = i;
            }
        }
    }
    let mut max_psi = 0.0f64;
    let mut stealth_margin = f64::INFINITY;
    let mut first_violation = None;
    for tau in 0..=problem.stealth_end() {
        for (j, v) in psi.sample(tau).iter().enumerate() {
            let theta = problem.theta[j];
            max_psi = max_psi.max(v.abs());
            stealth_margin = stealth_margin.min(theta - v.abs());
            if first_violation.is_none() && v.abs() > theta + VERIFY_TOL * theta.max(1.0) {
                first_violation = Some((tau, j));
            }
        }
    }
    Ok(VerificationReport {
        max_z,
        impact_time,
        impact_component,
        max_psi,
        stealth_margin,
        first_violation,
    })
}

/// Replay `sol.d_hat` and check it against the claimed impact and the stealth bounds.
pub fn verify_attack(problem: &AttackProblem, sol: &AttackSolution) -> Result<VerificationReport> {
    if sol.status != AttackStatus::Bounded {
        return Err(Error::InvalidArgument("only bounded attacks can be replayed".into()));
    }
    let d = &sol.d_hat;
    let slack = VERIFY_TOL * problem.alpha.max(1.0);
    for k in 0..d.len() {
        let limit = if k <= problem.t_a { problem.alpha + slack } else { 0.0 };
        if d.sample(k).iter().any(|v| v.abs() > limit) {
            return Err(Error::InvalidArgument(format!("attack sample {k} exceeds its magnitude bound")));
        }
    }
    let report = replay_attack(problem, d)?;
    let tol = VERIFY_TOL * sol.mu.abs().max(1.0);
    if (report.max_z - sol.mu).abs() > tol || report.first_violation.is_some() {
        return Err(Error::VerificationMismatch {
            expected: sol.mu,
            observed: report.max_z,
            violation: report.first_violation,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: &[f64], h: usize) -> PulseResponse {
        PulseResponse::scalar(v).unwrap().with_horizon(h)
    }

    fn example_a(scenario: Scenario) -> AttackProblem {
        let (t_zd, t_psi) = if scenario == Scenario::ImpactDuring { (0, 0) } else { (1, 1) };
        AttackProblem::new(scalar(&[1.0, 1.0], 2), scalar(&[1.0], 2), 1, t_zd, t_psi, &[1.0], 2.0, scenario).unwrap()
    }

    fn example_b(scenario: Scenario) -> AttackProblem {
        AttackProblem::new(scalar(&[1.0], 2), scalar(&[0.0, 1.0], 2), 1, 1, 1, &[1.0], 2.0, scenario).unwrap()
    }

    #[test]
    fn row_lp_transcription() {
        let p = example_a(Scenario::StealthAlways);
        let lp = build_row_lp(&p, 1, 0, 1).unwrap();
        assert_eq!(
            lp.to_string(),
            "maximize\n  + 1 x0 + 1 x1\nsubject to\n  r0: + 1 x0 <= 1\n  r1: - 1 x0 <= 1\n  r2: + 1 x1 <= 1\n  r3: - 1 x1 <= 1\nbounds\n  -2 <= x0 <= 2\n  -2 <= x1 <= 2\n"
        );
        let lp0 = build_row_lp(&p, 0, 0, 1).unwrap();
        assert_eq!(lp0.objective(), &[1.0, 0.0]);
        assert!(build_row_lp(&p, 3, 0, 1).is_err());
    }

    #[test]
    fn zero_threshold_pins_attack_to_zero() {
        let p = AttackProblem::new(scalar(&[1.0, 1.0], 2), scalar(&[1.0], 2), 1, 1, 1, &[0.0], 2.0, Scenario::StealthAlways)
            .unwrap();
        let s = solve_scenario1(&p).unwrap();
        assert_eq!(s.mu, 0.0);
        assert!(s.d_hat.as_flat().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn example_a_scenario1() {
        let s = solve_scenario1(&example_a(Scenario::StealthAlways)).unwrap();
        assert_eq!(s.status, AttackStatus::Bounded);
        assert!((s.mu - 2.0).abs() < 1e-12);
        assert_eq!(s.n_star, 1);
        let d = s.d_hat.as_flat();
        assert_eq!(d.len(), 3);
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[1] - 1.0).abs() < 1e-12 && d[2] == 0.0);
    }

    #[test]
    fn example_a_scenario3() {
        let s = solve_scenario3(&example_a(Scenario::ImpactDuring)).unwrap();
        assert!((s.mu - 2.0).abs() < 1e-12);
        assert_eq!(s.n_star, 1);
        assert!((s.d_hat.as_flat()[0] - 1.0).abs() < 1e-12 && (s.d_hat.as_flat()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn example_b_orders_scenarios() {
        let s2 = solve_scenario2(&example_b(Scenario::StealthDuring)).unwrap();
        assert!((s2.mu - 2.0).abs() < 1e-12);
        assert_eq!(s2.n_star, 1);
        assert!((s2.d_hat.sample(1)[0].abs() - 2.0).abs() < 1e-12);
        let s1 = solve_scenario1(&example_b(Scenario::StealthAlways)).unwrap();
        assert!((s1.mu - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loose_threshold_gives_sign_matched_row_sum() {
        let phi = [0.5, -1.0, 0.25, 2.0, -0.5];
        let p = AttackProblem::new(scalar(&phi, 6), scalar(&[1.0, 0.5], 6), 2, 3, 2, &[100.0], 1.5, Scenario::StealthAlways)
            .unwrap();
        let s = solve_scenario1(&p).unwrap();
        // Oracle: d(k) = alpha * sign(phi(n-k)) on each reachable row.
        let oracle = (0..=5)
            .map(|n: usize| (0..=n.min(2)).map(|k| phi.get(n - k).copied().unwrap_or(0.0).abs()).sum::<f64>() * 1.5)
            .fold(0.0, f64::max);
        assert!((s.mu - oracle).abs() < 1e-12, "{} vs {oracle}", s.mu);
    }

    #[test]
    fn zero_impact_map() {
        let p = AttackProblem::new(scalar(&[0.0], 3), scalar(&[1.0], 3), 2, 1, 1, &[1.0], 1.0, Scenario::StealthAlways)
            .unwrap();
        let s = solve_scenario1(&p).unwrap();
        assert_eq!(s.mu, 0.0);
        assert_eq!(s.status, AttackStatus::Bounded);
    }

    #[test]
    fn single_step_scenarios_agree() {
        let p1 = AttackProblem::new(scalar(&[0.7, 0.2], 3), scalar(&[1.0, -0.4], 3), 0, 3, 0, &[0.3], 1.0, Scenario::StealthAlways)
            .unwrap();
        let p2 = p1.with_scenario(Scenario::StealthDuring).unwrap();
        let a = solve(&p1).unwrap().mu;
        let b = solve(&p2).unwrap().mu;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn one_variable_scenario3() {
        let p = AttackProblem::new(scalar(&[-3.0], 0), scalar(&[0.5], 0), 0, 0, 0, &[2.0], 1.5, Scenario::ImpactDuring)
            .unwrap();
        assert!((solve_scenario3(&p).unwrap().mu - 4.5).abs() < 1e-12);
    }

    #[test]
    fn unbounded_when_attack_unconstrained_by_monitor() {
        // psi(k) = d(k-1) - 2 d(k-2): unstable monitor zero plus a delay leaves d(t_a) free,
        // while z(k) = d(k) sees it directly.
        let p = AttackProblem::new(
            scalar(&[1.0], 4),
            scalar(&[0.0, 1.0, -2.0], 4),
            4,
            0,
            0,
            &[1.0],
            f64::INFINITY,
            Scenario::ImpactDuring,
        )
        .unwrap();
        let s = solve_scenario3(&p).unwrap();
        assert_eq!(s.status, AttackStatus::UnboundedAttack);
        assert!(s.mu.is_infinite());
    }

    #[test]
    fn wrong_scenario_rejected() {
        assert!(solve_scenario2(&example_a(Scenario::StealthAlways)).is_err());
        assert!(AttackProblem::new(scalar(&[1.0], 2), scalar(&[1.0], 2), 1, 1, 0, &[1.0], 1.0, Scenario::ImpactDuring).is_err());
        assert!(AttackProblem::new(scalar(&[1.0], 1), scalar(&[1.0], 1), 1, 1, 0, &[1.0], 1.0, Scenario::StealthAlways).is_err());
        assert!(AttackProblem::new(scalar(&[1.0], 2), scalar(&[1.0], 2), 1, 0, 0, &[1.0], 0.0, Scenario::StealthAlways).is_err());
    }

    #[test]
    fn verify_reports_violation() {
        let p = AttackProblem::new(scalar(&[1.0], 2), scalar(&[1.0], 2), 2, 0, 0, &[1e-3], 1.0, Scenario::StealthDuring)
            .unwrap();
        let forged = AttackSolution {
            status: AttackStatus::Bounded,
            d_hat: SignalWindow::scalar(&[1.0, 1.0, 1.0]).unwrap(),
            mu: 1.0,
            n_star: 2,
            critical_component: 0,
            per_row_values: Vec::new(),
        };
        match verify_attack(&p, &forged) {
            Err(Error::VerificationMismatch { violation, .. }) => assert_eq!(violation, Some((0, 0))),
            other => panic!("expected mismatch, got {other:?}"),
        }
        let zero = AttackSolution {
            d_hat: SignalWindow::zeros(1, 3),
            mu: 0.0,
            ..forged
        };
        let r = verify_attack(&p, &zero).unwrap();
        assert_eq!(r.max_z, 0.0);
        assert_eq!(r.first_violation, None);
    }

    #[test]
    fn parallel_matches_sequential() {
        let phi_z = [0.3, -0.8, 0.6, 0.1, -0.2, 0.05];
        let phi_p = [1.0, 0.4, -0.3, 0.2, 0.0, 0.0];
        let p = AttackProblem::new(scalar(&phi_z, 8), scalar(&phi_p, 8), 4, 4, 4, &[0.5], 1.0, Scenario::StealthAlways)
            .unwrap();
        let seq = solve(&p).unwrap();
        let par = solve_with(&p, &SolveOptions { jobs: 4, ..Default::default() }).unwrap();
        assert_eq!(seq, par);
        let full = solve_with(&p, &SolveOptions { jobs: 4, skip_dominated: false, ..Default::default() }).unwrap();
        assert!(full.per_row_values.iter().all(|r| r.value.is_some()));
        assert_eq!(full.mu, seq.mu);
    }
}
