//! Machine-readable result records written by every subcommand.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::RowValue;
use crate::horizon::SignalWindow;
use crate::report::{f64_inf, opt_f64, vec_f64_inf};
use crate::resilience::{Termination, YoulaParam};
use crate::simkit::DetectionResult;
use crate::vulnerability::{Verdict, ZeroReport};

use super::io::Rows;

pub const TOOL: &str = "stealthlp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub system: String,
    /// SHA-256 over the system file bytes and the canonical request parameters.
    pub input_digest: String,
    /// Seconds since the Unix epoch; the only field allowed to differ between identical runs.
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateReport>,
}

impl ReportDocument {
    pub fn new(command: &str, system: &str, input: &[u8], params: &serde_json::Value) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            system: system.into(),
            input_digest: digest(input, params),
            timestamp: timestamp(),
            analyze: None,
            attack: None,
            synth: None,
            simulate: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

pub fn digest(input: &[u8], params: &serde_json::Value) -> String {
    let mut h = Sha256::new();
    h.update(input);
    h.update([0u8]);
    h.update(params.to_string().as_bytes());
    hex::encode(h.finalize())
}

/// `SOURCE_DATE_EPOCH` when set, otherwise the wall clock.
fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return v;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn window_rows(w: &SignalWindow) -> Rows {
    w.iter().map(|s| s.to_vec()).collect()
}

pub fn youla_rows(q: &YoulaParam) -> Vec<Rows> {
    q.pulse()
        .samples()
        .iter()
        .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: String,
    /// `[re, im]` pairs.
    pub roots: Vec<[f64; 2]>,
    pub unstable: Vec<[f64; 2]>,
    pub marginal: Vec<[f64; 2]>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ChannelReport {
    pub fn new(channel: &str, r: &ZeroReport) -> Self {
        let pairs = |v: &[num_complex::Complex64]| v.iter().map(|c| [c.re, c.im]).collect();
        Self {
            channel: channel.into(),
            roots: pairs(&r.roots),
            unstable: pairs(&r.unstable),
            marginal: pairs(&r.marginal),
            verdict: r.verdict,
            note: r.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub tol: f64,
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub channels: Vec<ChannelReport>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub scenario: u8,
    pub t_a: usize,
    pub t_zd: usize,
    pub t_psi_d: usize,
    pub t_d: usize,
    /// Whether `t_zd` / `t_psi_d` were chosen from the closed-loop decay.
    pub windows_auto: bool,
    #[serde(with = "opt_f64")]
    pub epsilon: Option<f64>,
    pub theta: Vec<f64>,
    #[serde(with = "f64_inf")]
    pub alpha: f64,
    pub status: crate::attack::AttackStatus,
    #[serde(with = "f64_inf")]
    pub mu: f64,
    pub n_star: usize,
    pub critical_component: usize,
    pub per_row_values: Vec<RowValue>,
    pub d_hat: Rows,
    pub stealth_window_end: usize,
    pub impact_window_end: usize,
    /// Impact recomputed by state-space replay of `d_hat`.
    #[serde(with = "opt_f64")]
    pub replay_impact: Option<f64>,
    /// Threshold check over the stealth window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionResult>,
    /// Threshold check over the whole analysis window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_detection: Option<DetectionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub index: usize,
    pub gamma: f64,
    pub mu: f64,
    #[serde(with = "opt_f64")]
    pub tail_bound: Option<f64>,
    pub d: Rows,
    pub q: Vec<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub n_q: usize,
    pub horizon: usize,
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub scenario: u8,
    pub t_a: usize,
    pub t_zd: usize,
    pub t_psi_d: usize,
    pub max_iters: usize,
    pub min_iters: usize,
    #[serde(with = "f64_inf")]
    pub gamma_tol: f64,
    pub accumulate: bool,
    pub termination: Termination,
    pub iterations: Vec<IterationReport>,
    pub q_final: Vec<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub horizon: usize,
    #[serde(with = "vec_f64_inf")]
    pub theta: Vec<f64>,
    pub impact_window_end: usize,
    pub max_z: f64,
    pub impact_time: usize,
    pub impact_component: usize,
    pub window_end: usize,
    pub detection: DetectionResult,
}
