//! Time-domain replay of attacks and threshold detection.

use crate::error::{Error, Result};
use crate::horizon::{apply, lift, SignalWindow};
use crate::lti::{ClosedLoopMaps, GeneralizedPlant, Matrix, StateSpaceModel};
use crate::resilience::{affine_closed_loop, YoulaParam};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub z: SignalWindow,
    /// `y` stacked over `u` at every sample.
    pub psi: SignalWindow,
    pub y: SignalWindow,
    pub u: SignalWindow,
}

impl Trajectory {
    fn from_parts(z: SignalWindow, psi: SignalWindow, p_y: usize) -> Self {
        let m_u = psi.width() - p_y;
        Self {
            y: psi.channels(0, p_y),
            u: psi.channels(p_y, m_u),
            z,
            psi,
        }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Zero-state response of `sys` to `d(0..len)`; `d` is zero-padded.
pub fn run(sys: &StateSpaceModel, d: &SignalWindow, len: usize) -> Result<SignalWindow> {
    if d.width() != sys.inputs() {
        return Err(Error::Dimension(format!(
            "input has width {}, system expects {}",
            d.width(),
            sys.inputs()
        )));
    }
    let d = d.resized(len);
    let mut x = nalgebra::DVector::zeros(sys.states());
    let mut out = SignalWindow::zeros(sys.outputs(), len);
    for k in 0..len {
        let dk = nalgebra::DVector::from_column_slice(d.sample(k));
        let y = sys.c() * &x + sys.d() * &dk;
        out.sample_mut(k).copy_from_slice(y.as_slice());
        x = sys.a() * &x + sys.b() * &dk;
    }
    Ok(out)
}

/// Replay `d` through a closed loop over `0..=horizon` by state recursion.
pub fn simulate(maps: &ClosedLoopMaps, d: &SignalWindow, horizon: usize) -> Result<Trajectory> {
    let len = horizon + 1;
    let z = run(&maps.phi_zd, d, len)?;
    let psi = run(&maps.phi_psi_d, d, len)?;
    Ok(Trajectory::from_parts(z, psi, maps.p_y()))
}

/// Replay `d` through the loop parameterized by `q` by finite convolution.
pub fn simulate_youla(plant: &GeneralizedPlant, q: &YoulaParam, d: &SignalWindow, horizon: usize) -> Result<Trajectory> {
    if d.width() != plant.m_d() {
        return Err(Error::Dimension(format!(
            "attack has width {}, plant expects {}",
            d.width(),
            plant.m_d()
        )));
    }
    let (phi_zd, phi_psi) = affine_closed_loop(plant, q, horizon)?;
    let z = apply(&lift(&phi_zd, horizon)?, d)?;
    let psi = apply(&lift(&phi_psi, horizon)?, d)?;
    Ok(Trajectory::from_parts(z, psi, plant.p_y()))
}

/// Relative slack before a sample counts as over threshold; absorbs the
/// rounding of LP solutions that sit exactly on `|psi| = theta`.
pub const DETECT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectionResult {
    /// First `(time, channel)` with `|psi_j| > theta_j (1 + DETECT_TOL)`.
    pub alarm: Option<(usize, usize)>,
    pub peak_psi: f64,
    /// `min (theta_j - |psi_j(tau)|)` over the checked window.
    pub margin: f64,
}

/// Threshold check over `0..=window_end`; `|psi| = theta` does not alarm.
pub fn detect(psi: &SignalWindow, theta: &[f64], window_end: usize) -> Result<DetectionResult> {
    if window_end >= psi.len() {
        return Err(Error::InvalidArgument(format!(
            "window end {window_end} is past the signal of length {}",
            psi.len()
        )));
    }
    let q = psi.width();
    let theta: Vec<f64> = match theta.len() {
        1 => vec![theta[0]; q],
        l if l == q => theta.to_vec(),
        l => return Err(Error::Dimension(format!("{l} thresholds for {q} channels"))),
    };
    let mut alarm = None;
    let mut peak_psi = 0.0f64;
    let mut margin = f64::INFINITY;
    for tau in 0..=window_end {
        for (j, v) in psi.sample(tau).iter().enumerate() {
            peak_psi = peak_psi.max(v.abs());
            margin = margin.min(theta[j] - v.abs());
            if alarm.is_none() && v.abs() > theta[j] + DETECT_TOL * theta[j].max(1.0) {
                alarm = Some((tau, j));
            }
        }
    }
    Ok(DetectionResult { alarm, peak_psi, margin })
}

/// Unit pulse on input channel `channel` over `len` samples.
pub fn unit_pulse(width: usize, channel: usize, len: usize) -> SignalWindow {
    let mut d = SignalWindow::zeros(width, len);
    d.sample_mut(0)[channel] = 1.0;
    d
}

/// Column `channel` of each pulse sample, as a signal.
pub fn pulse_column(samples: &[Matrix], channel: usize) -> SignalWindow {
    let rows = samples.first().map_or(0, |s| s.nrows());
    let mut out = SignalWindow::zeros(rows, samples.len());
    for (k, s) in samples.iter().enumerate() {
        for i in 0..rows {
            out.sample_mut(k)[i] = s[(i, channel)];
        }
    }
    out
}
