//! Alternating attack / controller synthesis over a FIR Youla parameter.
//!
//! For an open-loop-stable plant every stabilizing controller is
//! `K = Q (I + G_yu Q)^-1` for some stable `Q`, and the closed-loop maps are
//! affine in `Q`. Restricting `Q` to a FIR filter turns both the worst-attack
//! step and the l1-minimizing controller step into linear programs.

use crate::attack::{self, AttackProblem, AttackStatus, Scenario, SolveOptions};
use crate::error::{Error, Result};
use crate::horizon::{l1_norm_truncated, SignalWindow};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::lti::{
    close_loop, decay_horizon, is_stable, pulse_response, tail_bound, GeneralizedPlant, Matrix, PulseResponse,
    StateSpaceModel, WELL_POSEDNESS_TOL,
};

/// Decay level defining the plant settling horizon.
pub const SETTLING_EPS: f64 = 1e-6;
const MONOTONE_TOL: f64 = 1e-9;

/// FIR Youla parameter `Q(0..N_Q)`, each sample `m_u x p_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct YoulaParam {
    q: PulseResponse,
}

impl YoulaParam {
    pub fn new(q: PulseResponse) -> Self {
        Self { q }
    }

    pub fn zeros(m_u: usize, p_y: usize, n_q: usize) -> Result<Self> {
        if n_q == 0 {
            return Err(Error::InvalidArgument("FIR length must be at least 1".into()));
        }
        Ok(Self {
            q: PulseResponse::zeros(m_u, p_y, n_q - 1),
        })
    }

    pub fn len(&self) -> usize {
        self.q.horizon() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pulse(&self) -> &PulseResponse {
        &self.q
    }

    pub fn coeff(&self, k: usize) -> &Matrix {
        self.q.sample(k)
    }
}

fn add(a: &PulseResponse, b: &PulseResponse) -> Result<PulseResponse> {
    PulseResponse::new(a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect())
}

fn require_stable(plant: &GeneralizedPlant) -> Result<()> {
    if !is_stable(plant.model())? {
        return Err(Error::Stability(
            "plant is not open-loop stable; the FIR Youla parameterization needs a stable plant".into(),
        ));
    }
    Ok(())
}

/// Pulse responses of `G_zd + G_zu Q G_yd` and of `[G_yd + G_yu Q G_yd; Q G_yd]` up to `horizon`.
pub fn affine_closed_loop(plant: &GeneralizedPlant, q: &YoulaParam, horizon: usize) -> Result<(PulseResponse, PulseResponse)> {
    require_stable(plant)?;
    if q.pulse().rows() != plant.m_u() || q.pulse().cols() != plant.p_y() {
        return Err(Error::Dimension(format!(
            "Q is {}x{}, plant needs {}x{}",
            q.pulse().rows(),
            q.pulse().cols(),
            plant.m_u(),
            plant.p_y()
        )));
    }
    let g_zd = pulse_response(&plant.g_zd(), horizon);
    let g_zu = pulse_response(&plant.g_zu(), horizon);
    let g_yd = pulse_response(&plant.g_yd(), horizon);
    let g_yu = pulse_response(&plant.g_yu(), horizon);
    let qg = q.pulse().with_horizon(horizon).convolve(&g_yd)?;
    let phi_zd = add(&g_zd, &g_zu.convolve(&qg)?)?;
    let psi_y = add(&g_yd, &g_yu.convolve(&qg)?)?;
    Ok((phi_zd, psi_y.vstack(&qg)?))
}

/// The controller `K = Q (I + G_yu Q)^-1` as an internal-model loop around `G_yu`.
///
/// States are the model state of `G_yu` followed by the last `N_Q - 1`
/// samples of the model-mismatch signal `w = y - G_yu u`.
pub fn recover_controller(q: &YoulaParam, g_yu: &StateSpaceModel) -> Result<StateSpaceModel> {
    let (m_u, p_y) = (q.pulse().rows(), q.pulse().cols());
    if g_yu.inputs() != m_u || g_yu.outputs() != p_y {
        return Err(Error::Dimension(format!(
            "G_yu is {}x{}, Q needs {p_y}x{m_u}",
            g_yu.outputs(),
            g_yu.inputs()
        )));
    }
    let (am, bm, cm, dm) = (g_yu.a(), g_yu.b(), g_yu.c(), g_yu.d());
    let nm = g_yu.states();
    let q0 = q.coeff(0);
    let loop_mat = Matrix::identity(p_y, p_y) + dm * q0;
    let sigma_min = loop_mat.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
    if p_y > 0 && sigma_min < WELL_POSEDNESS_TOL {
        return Err(Error::WellPosedness { sigma_min });
    }
    let m = loop_mat
        .try_inverse()
        .ok_or(Error::WellPosedness { sigma_min })?;

    let taps = q.len() - 1;
    let nb = taps * p_y;
    let mut hb = Matrix::zeros(m_u, nb);
    for k in 1..=taps {
        hb.view_mut((0, (k - 1) * p_y), (m_u, p_y)).copy_from(q.coeff(k));
    }
    let wx = -(&m * cm);
    let wb = -(&m * dm * &hb);

    let n = nm + nb;
    let mut a = Matrix::zeros(n, n);
    let mut b = Matrix::zeros(n, p_y);
    let mut c = Matrix::zeros(m_u, n);
    let d = q0 * &m;

    let cu_x = q0 * &wx;
    let cu_b = q0 * &wb + &hb;
    c.view_mut((0, 0), (m_u, nm)).copy_from(&cu_x);
    c.view_mut((0, nm), (m_u, nb)).copy_from(&cu_b);

    a.view_mut((0, 0), (nm, nm)).copy_from(&(am + bm * &cu_x));
    a.view_mut((0, nm), (nm, nb)).copy_from(&(bm * &cu_b));
    b.view_mut((0, 0), (nm, p_y)).copy_from(&(bm * &d));
    if taps > 0 {
        a.view_mut((nm, 0), (p_y, nm)).copy_from(&wx);
        a.view_mut((nm, nm), (p_y, nb)).copy_from(&wb);
        b.view_mut((nm, 0), (p_y, p_y)).copy_from(&m);
        for k in 1..taps {
            a.view_mut((nm + k * p_y, nm + (k - 1) * p_y), (p_y, p_y))
                .copy_from(&Matrix::identity(p_y, p_y));
        }
    }
    StateSpaceModel::new(a, b, c, d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    pub n_q: usize,
    /// Evaluation horizon `T` of the truncated closed-loop maps.
    pub horizon: usize,
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub scenario: Scenario,
    pub t_a: usize,
    pub t_zd: usize,
    pub t_psi_d: usize,
    pub max_iters: usize,
    /// Controller updates to run before the convergence test may stop the loop.
    pub min_iters: usize,
    pub gamma_tol: f64,
    /// Constrain against every past attack rather than only the latest.
    pub accumulate: bool,
    pub jobs: usize,
}

impl SynthesisConfig {
    pub fn new(n_q: usize, horizon: usize, theta: f64, alpha: f64, t_a: usize) -> Self {
        Self {
            n_q,
            horizon,
            theta: vec![theta],
            alpha,
            scenario: Scenario::StealthAlways,
            t_a,
            t_zd: 0,
            t_psi_d: 0,
            max_iters: 10,
            min_iters: 1,
            gamma_tol: 1e-6,
            accumulate: true,
            jobs: 1,
        }
    }

    /// Check the configuration against a plant; returns its settling horizon.
    pub fn validate(&self, plant: &GeneralizedPlant) -> Result<usize> {
        if self.n_q == 0 {
            return Err(Error::InvalidArgument("N_Q must be at least 1".into()));
        }
        if !(self.gamma_tol > 0.0) {
            return Err(Error::InvalidArgument("gamma_tol must be positive".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidArgument("synthesis needs a finite positive attack bound".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        require_stable(plant)?;
        let settle = decay_horizon(plant.model(), 1.0, SETTLING_EPS, self.horizon)?;
        if self.horizon < self.n_q + settle {
            return Err(Error::Horizon {
                t_max: self.horizon,
                reason: format!("T must be at least N_Q + settling horizon = {}", self.n_q + settle),
            });
        }
        let need = self.t_a + self.t_zd.max(self.t_psi_d);
        if self.horizon < need {
            return Err(Error::Horizon {
                t_max: self.horizon,
                reason: format!("T must cover the attack window t_a + t_d = {need}"),
            });
        }
        Ok(settle)
    }

    fn problem(&self, phi_zd: PulseResponse, phi_psi_d: PulseResponse) -> Result<AttackProblem> {
        AttackProblem::new(
            phi_zd,
            phi_psi_d,
            self.t_a,
            self.t_zd,
            self.t_psi_d,
            &self.theta,
            self.alpha,
            self.scenario,
        )
    }

    fn impact_rows(&self) -> std::ops::RangeInclusive<usize> {
        match self.scenario {
            Scenario::StealthAlways => 0..=self.t_a + self.t_zd,
            Scenario::StealthDuring => self.t_a..=self.t_a + self.t_zd,
            Scenario::ImpactDuring => self.t_a..=self.t_a,
        }
    }
}

/// Worst attack against the loop closed by `q`.
pub fn d_step(plant: &GeneralizedPlant, q: &YoulaParam, config: &SynthesisConfig) -> Result<(SignalWindow, f64)> {
    let (phi_zd, phi_psi) = affine_closed_loop(plant, q, config.horizon)?;
    let problem = config.problem(phi_zd, phi_psi)?;
    let sol = attack::solve_with(
        &problem,
        &SolveOptions {
            jobs: config.jobs,
            ..Default::default()
        },
    )?;
    if sol.status == AttackStatus::UnboundedAttack {
        return Err(Error::Invariant("d-step produced an unbounded attack with finite alpha".into()));
    }
    Ok((sol.d_hat, sol.mu))
}

/// Sensitivity of `Phi_zd(t)` to one Youla coefficient `Q(k)[a, b]`.
struct Basis {
    /// `Phi_zd(t)` at `Q = 0`.
    offset: PulseResponse,
    /// One pulse per Youla coefficient, ordered `(k, a, b)`.
    terms: Vec<PulseResponse>,
}

fn basis(plant: &GeneralizedPlant, config: &SynthesisConfig) -> Result<Basis> {
    let t = config.horizon;
    let g_zd = pulse_response(&plant.g_zd(), t);
    let g_zu = pulse_response(&plant.g_zu(), t);
    let g_yd = pulse_response(&plant.g_yd(), t);
    let (m_u, p_y) = (plant.m_u(), plant.p_y());
    let mut terms = Vec::with_capacity(config.n_q * m_u * p_y);
    for k in 0..config.n_q {
        for a in 0..m_u {
            for b in 0..p_y {
                let mut e = PulseResponse::zeros(m_u, p_y, t);
                if k <= t {
                    let mut samples = e.samples().to_vec();
                    samples[k][(a, b)] = 1.0;
                    e = PulseResponse::new(samples)?;
                }
                terms.push(g_zu.convolve(&e)?.convolve(&g_yd)?);
            }
        }
    }
    Ok(Basis { offset: g_zd, terms })
}

fn param_from(x: &[f64], plant: &GeneralizedPlant, n_q: usize) -> Result<YoulaParam> {
    let (m_u, p_y) = (plant.m_u(), plant.p_y());
    let samples = (0..n_q)
        .map(|k| Matrix::from_fn(m_u, p_y, |a, b| x[(k * m_u + a) * p_y + b]))
        .collect();
    Ok(YoulaParam::new(PulseResponse::new(samples)?))
}

/// `min ||Phi_zd(Q)||_1` (truncated at `T`) subject to `|Phi_zd(Q) d_j|(n) <= mu_j` on the impact rows.
pub fn k_step(plant: &GeneralizedPlant, attacks: &[(SignalWindow, f64)], config: &SynthesisConfig) -> Result<(YoulaParam, f64)> {
    require_stable(plant)?;
    let basis = basis(plant, config)?;
    let nv = basis.terms.len();
    let (p_z, m_d) = (plant.p_z(), plant.m_d());
    let t = config.horizon;

    // Entries of Phi_zd that depend on Q get an absolute-value epigraph variable.
    let mut entries = Vec::new();
    let mut constant_abs = vec![0.0; p_z];
    for s in 0..=t {
        for i in 0..p_z {
            for j in 0..m_d {
                let coeffs: Vec<f64> = basis.terms.iter().map(|h| h.sample(s)[(i, j)]).collect();
                let c0 = basis.offset.sample(s)[(i, j)];
                if coeffs.iter().all(|c| *c == 0.0) {
                    constant_abs[i] += c0.abs();
                } else {
                    entries.push((i, coeffs, c0));
                }
            }
        }
    }
    let gamma_var = nv + entries.len();
    let vars = gamma_var + 1;
    let mut lp = LinearProgram::new(vars);
    let mut obj = vec![0.0; vars];
    obj[gamma_var] = -1.0;
    lp.maximize(obj);

    for (e, (_, coeffs, c0)) in entries.iter().enumerate() {
        // |c0 + coeffs.q| <= v_e
        let mut up = vec![0.0; vars];
        up[..nv].copy_from_slice(coeffs);
        up[nv + e] = -1.0;
        lp.add_le(up, -c0);
        let mut dn: Vec<f64> = vec![0.0; vars];
        for (x, c) in dn[..nv].iter_mut().zip(coeffs) {
            *x = -c;
        }
        dn[nv + e] = -1.0;
        lp.add_le(dn, *c0);
    }
    for i in 0..p_z {
        let mut row = vec![0.0; vars];
        for (e, (ie, _, _)) in entries.iter().enumerate() {
            if *ie == i {
                row[nv + e] = 1.0;
            }
        }
        row[gamma_var] = -1.0;
        lp.add_le(row, -constant_abs[i]);
    }

    let retained: &[(SignalWindow, f64)] = if config.accumulate {
        attacks
    } else {
        attacks.last().map(std::slice::from_ref).unwrap_or(&[])
    };
    for (d, mu) in retained {
        if d.width() != m_d {
            return Err(Error::Dimension(format!("attack has width {}, plant expects {m_d}", d.width())));
        }
        for n in config.impact_rows() {
            for i in 0..p_z {
                let mut row = vec![0.0; vars];
                let mut c0 = 0.0;
                for s in 0..=n.min(t) {
                    if n - s >= d.len() {
                        continue;
                    }
                    let dk = d.sample(n - s);
                    for (j, dv) in dk.iter().enumerate() {
                        if *dv == 0.0 {
                            continue;
                        }
                        c0 += basis.offset.sample(s)[(i, j)] * dv;
                        for (v, h) in basis.terms.iter().enumerate() {
                            row[v] += h.sample(s)[(i, j)] * dv;
                        }
                    }
                }
                if row.iter().all(|x| *x == 0.0) {
                    continue;
                }
                lp.add_le(row.clone(), mu - c0);
                lp.add_ge(row, -mu - c0);
            }
        }
    }
    let mut lower = vec![f64::NEG_INFINITY; vars];
    let upper = vec![f64::INFINITY; vars];
    for l in lower.iter_mut().skip(nv) {
        *l = 0.0;
    }
    for v in 0..vars {
        lp.set_bounds(v, lower[v], upper[v]);
    }

    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Invariant("controller LP infeasible although the previous Q is feasible".into()))
        }
        LpStatus::Unbounded => return Err(Error::Invariant("controller LP unbounded below zero".into())),
    }
    let q = param_from(&sol.x[..nv], plant, config.n_q)?;
    Ok((q, sol.x[gamma_var]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Truncated l1 norm of `Phi_zd` under `q`, from the controller LP.
    pub gamma: f64,
    /// Worst-case impact against `q`.
    pub mu: f64,
    pub d: SignalWindow,
    pub q: YoulaParam,
    /// Bound on the l1 mass of `Phi_zd` past the horizon, when computable.
    pub tail_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

fn phi_tail(plant: &GeneralizedPlant, q: &YoulaParam, horizon: usize) -> Option<f64> {
    let k = recover_controller(q, &plant.g_yu()).ok()?;
    let maps = close_loop(plant, &k).ok()?;
    tail_bound(&maps.phi_zd, horizon).ok()
}

/// Alternate worst-attack and controller updates from the unconstrained l1-optimal `Q_0`.
///
/// Record `i` holds controller `Q_i`, its norm `gamma_i` and the worst attack
/// `(d_i, mu_i)` against it. Each iteration adds `(d_i, mu_i)` to the
/// controller LP and computes `Q_{i+1}`.
pub fn kd_iterate(plant: &GeneralizedPlant, config: &SynthesisConfig) -> Result<(IterationTrace, YoulaParam)> {
    config.validate(plant)?;
    let mut attacks: Vec<(SignalWindow, f64)> = Vec::new();
    let (mut q, mut gamma) = k_step(plant, &attacks, config)?;
    let mut records = Vec::new();
    let termination = loop {
        let (d, mu) = d_step(plant, &q, config)?;
        if mu > gamma * config.alpha + MONOTONE_TOL {
            return Err(Error::Invariant(format!(
                "impact {mu} exceeds gamma * alpha = {}",
                gamma * config.alpha
            )));
        }
        records.push(IterationRecord {
            gamma,
            mu,
            d: d.clone(),
            q: q.clone(),
            tail_bound: phi_tail(plant, &q, config.horizon),
        });
        let done = records.len() - 1;
        if done >= config.max_iters {
            break Termination::MaxIterations;
        }
        if done >= config.min_iters.max(1) {
            let prev = records[done - 1].gamma;
            if (prev - gamma).abs() <= config.gamma_tol * prev.abs().max(f64::MIN_POSITIVE) {
                break Termination::Converged;
            }
        }
        attacks.push((d, mu));
        let (q_next, gamma_next) = k_step(plant, &attacks, config)?;
        if gamma_next > gamma + MONOTONE_TOL {
            return Err(Error::Invariant(format!(
                "gamma increased from {gamma} to {gamma_next}"
            )));
        }
        q = q_next;
        gamma = gamma_next;
    };
    Ok((IterationTrace { records, termination }, q))
}

/// Truncated l1 norm of `Phi_zd` under `q`, evaluated directly.
pub fn evaluate_gamma(plant: &GeneralizedPlant, q: &YoulaParam, horizon: usize) -> Result<f64> {
    Ok(l1_norm_truncated(&affine_closed_loop(plant, q, horizon)?.0))
}
