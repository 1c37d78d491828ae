//! Finite-horizon lifting and the l-infinity / l1 norms used throughout.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lti::{max_row_sum, tail_bound, Matrix, PulseResponse, StateSpaceModel};

/// A finite signal `x(0..=T)` of fixed width, stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalWindow {
    width: usize,
    data: Vec<f64>,
}

impl SignalWindow {
    pub fn zeros(width: usize, len: usize) -> Self {
        Self { width, data: vec![0.0; width * len] }
    }

    pub fn from_samples(width: usize, samples: Vec<Vec<f64>>) -> Result<Self> {
        let mut data = Vec::with_capacity(width * samples.len());
        for (k, s) in samples.into_iter().enumerate() {
            if s.len() != width {
                return Err(Error::Dimension(format!("sample {k} has width {}, expected {width}", s.len())));
            }
            data.extend(s);
        }
        Self::from_flat(width, data)
    }

    pub fn from_flat(width: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 && !data.is_empty() || width > 0 && data.len() % width != 0 {
            return Err(Error::Dimension(format!("{} values do not split into width {width}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal window"));
        }
        Ok(Self { width, data })
    }

    /// Width-one signal.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.width..(k + 1) * self.width]
    }

    pub fn sample_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.width..(k + 1) * self.width]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.width.max(1))
    }

    /// Zero-extend, or truncate, to `len` samples.
    pub fn resized(&self, len: usize) -> Self {
        let mut data = self.data.clone();
        data.resize(len * self.width, 0.0);
        Self { width: self.width, data }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            width: self.width,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Same samples delayed by `steps`, keeping the length.
    pub fn delayed(&self, steps: usize) -> Self {
        let mut out = Self::zeros(self.width, self.len());
        for k in steps..self.len() {
            out.sample_mut(k).copy_from_slice(self.sample(k - steps));
        }
        out
    }

    /// Rows `start..start+width` of every sample.
    pub fn channels(&self, start: usize, width: usize) -> Self {
        let mut data = Vec::with_capacity(width * self.len());
        for s in self.iter().take(self.len()) {
            data.extend_from_slice(&s[start..start + width]);
        }
        Self { width, data }
    }
}

/// Block lower-triangular Toeplitz matrix of a pulse response over `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedOperator {
    pulse: PulseResponse,
    horizon: usize,
    dense: Matrix,
}

impl LiftedOperator {
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn dense(&self) -> &Matrix {
        &self.dense
    }
    pub fn pulse(&self) -> &PulseResponse {
        &self.pulse
    }

    /// Block `(i, j)` of the lifted matrix.
    pub fn block(&self, i: usize, j: usize) -> Matrix {
        let (p, m) = (self.pulse.rows(), self.pulse.cols());
        self.dense.view((i * p, j * m), (p, m)).into_owned()
    }
}

pub fn lift(pulse: &PulseResponse, horizon: usize) -> Result<LiftedOperator> {
    if horizon > pulse.horizon() {
        return Err(Error::InvalidArgument(format!(
            "lift horizon {horizon} exceeds stored pulse horizon {}",
            pulse.horizon()
        )));
    }
    let (p, m) = (pulse.rows(), pulse.cols());
    let mut dense = DMatrix::zeros((horizon + 1) * p, (horizon + 1) * m);
    for i in 0..=horizon {
        for j in 0..=i {
            dense.view_mut((i * p, j * m), (p, m)).copy_from(pulse.sample(i - j));
        }
    }
    Ok(LiftedOperator {
        pulse: pulse.with_horizon(horizon),
        horizon,
        dense,
    })
}

/// `z(n) = sum_{k<=n} Phi(n-k) d(k)` for `n = 0..=T`.
pub fn apply(op: &LiftedOperator, d: &SignalWindow) -> Result<SignalWindow> {
    let (p, m) = (op.pulse.rows(), op.pulse.cols());
    if d.width() != m {
        return Err(Error::Dimension(format!("signal width {} does not match operator input width {m}", d.width())));
    }
    let len = op.horizon + 1;
    let d = d.resized(len);
    let v = nalgebra::DVector::from_column_slice(d.as_flat());
    let z = &op.dense * v;
    SignalWindow::from_flat(p, z.as_slice().to_vec())
}

/// `max_k max_i |x_i(k)|`.
pub fn linf_norm(x: &SignalWindow) -> f64 {
    x.as_flat().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// `max_i sum_k sum_j |Phi_ij(k)|` over the stored horizon.
pub fn l1_norm_truncated(pulse: &PulseResponse) -> f64 {
    (0..pulse.rows())
        .map(|i| {
            pulse
                .samples()
                .iter()
                .map(|s| s.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Truncated l1 norm together with a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Estimate {
    pub truncated: f64,
    pub tail_bound: f64,
}

impl L1Estimate {
    pub fn upper(&self) -> f64 {
        self.truncated + self.tail_bound
    }
}

pub fn l1_norm_estimate(sys: &StateSpaceModel, horizon: usize) -> Result<L1Estimate> {
    let pulse = crate::lti::pulse_response(sys, horizon);
    Ok(L1Estimate {
        truncated: l1_norm_truncated(&pulse),
        tail_bound: tail_bound(sys, horizon)?,
    })
}

/// Sum of `max_row_sum` over every stored sample; an upper bound on the l1 norm.
pub fn sample_norm_sum(pulse: &PulseResponse) -> f64 {
    pulse.samples().iter().map(max_row_sum).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_convolution(pulse: &PulseResponse, d: &SignalWindow, horizon: usize) -> SignalWindow {
        let mut z = SignalWindow::zeros(pulse.rows(), horizon + 1);
        for n in 0..=horizon {
            for k in 0..=n.min(d.len().saturating_sub(1)) {
                let phi = pulse.sample(n - k);
                for i in 0..pulse.rows() {
                    for j in 0..pulse.cols() {
                        z.sample_mut(n)[i] += phi[(i, j)] * d.sample(k)[j];
                    }
                }
            }
        }
        z
    }

    #[test]
    fn lift_examples() {
        let op = lift(&PulseResponse::scalar(&[1.0]).unwrap(), 0).unwrap();
        assert_eq!(op.dense(), &Matrix::from_element(1, 1, 1.0));
        let op = lift(&PulseResponse::scalar(&[1.0, 2.0, 3.0]).unwrap(), 2).unwrap();
        assert_eq!(
            op.dense(),
            &Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 3.0, 2.0, 1.0])
        );
        let tall = PulseResponse::new(vec![
            Matrix::from_column_slice(2, 1, &[1.0, 2.0]),
            Matrix::from_column_slice(2, 1, &[3.0, 4.0]),
        ])
        .unwrap();
        let op = lift(&tall, 1).unwrap();
        assert_eq!(
            op.dense(),
            &Matrix::from_row_slice(4, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 1.0, 4.0, 2.0])
        );
        assert!(lift(&tall, 2).is_err());
    }

    #[test]
    fn apply_examples() {
        let op = lift(&PulseResponse::scalar(&[1.0, 1.0]).unwrap(), 1).unwrap();
        let z = apply(&op, &SignalWindow::scalar(&[1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(z.as_flat(), &[1.0, 2.0]);
        let z = apply(&op, &SignalWindow::zeros(1, 2)).unwrap();
        assert_eq!(z.as_flat(), &[0.0, 0.0]);
    }

    #[test]
    fn norms() {
        let x = SignalWindow::from_samples(2, vec![vec![1.0, -3.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(linf_norm(&x), 3.0);
        assert_eq!(linf_norm(&x.scaled(-2.5)), 7.5);
        assert_eq!(linf_norm(&SignalWindow::zeros(3, 4)), 0.0);
        assert_eq!(l1_norm_truncated(&PulseResponse::scalar(&[1.0, -2.0, 3.0]).unwrap()), 6.0);
        let two = PulseResponse::new(vec![
            Matrix::from_column_slice(2, 1, &[1.0, -3.0]),
            Matrix::from_column_slice(2, 1, &[3.0, 4.0]),
        ])
        .unwrap();
        assert_eq!(l1_norm_truncated(&two), 7.0);
    }

    #[test]
    fn l1_truncation_converges_within_tail_bound() {
        let sys = StateSpaceModel::new(
            Matrix::from_row_slice(2, 2, &[0.6, 0.3, -0.4, 0.5]),
            Matrix::from_column_slice(2, 1, &[1.0, 0.5]),
            Matrix::from_row_slice(1, 2, &[1.0, 2.0]),
            Matrix::from_element(1, 1, 0.2),
        )
        .unwrap();
        for t in [5, 10, 20] {
            let est = l1_norm_estimate(&sys, t).unwrap();
            let long = l1_norm_truncated(&crate::lti::pulse_response(&sys, 2 * t));
            assert!(long >= est.truncated - 1e-12);
            assert!(long <= est.upper() + 1e-12);
        }
    }

    fn arb_pulse() -> impl Strategy<Value = PulseResponse> {
        (1usize..4, 1usize..3, 0usize..6).prop_flat_map(|(p, m, h)| {
            prop::collection::vec(-3.0f64..3.0, p * m * (h + 1)).prop_map(move |v| {
                PulseResponse::new(v.chunks(p * m).map(|c| Matrix::from_column_slice(p, m, c)).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn apply_equals_naive_convolution(pulse in arb_pulse(), seed in prop::collection::vec(-2.0f64..2.0, 0..20)) {
            let h = pulse.horizon();
            let m = pulse.cols();
            let mut flat = seed;
            flat.resize(m * (h + 1), 0.5);
            let d = SignalWindow::from_flat(m, flat).unwrap();
            let op = lift(&pulse, h).unwrap();
            let z = apply(&op, &d).unwrap();
            let oracle = naive_convolution(&pulse, &d, h);
            for (a, b) in z.as_flat().iter().zip(oracle.as_flat()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert!(linf_norm(&z) <= l1_norm_truncated(&pulse) * linf_norm(&d) + 1e-12);
            // Block Toeplitz and causal.
            for i in 0..h {
                for j in 0..=i {
                    prop_assert_eq!(op.block(i, j), op.block(i + 1, j + 1));
                }
                for j in i + 1..=h {
                    prop_assert!(op.block(i, j).iter().all(|v| *v == 0.0));
                }
            }
        }

        #[test]
        fn lift_is_causal(pulse in arb_pulse(), k0 in 0usize..6) {
            let h = pulse.horizon();
            let m = pulse.cols();
            let mut d = SignalWindow::from_flat(m, vec![1.0; m * (h + 1)]).unwrap();
            for k in 0..k0.min(h + 1) {
                d.sample_mut(k).fill(0.0);
            }
            let z = apply(&lift(&pulse, h).unwrap(), &d).unwrap();
            for k in 0..k0.min(h + 1) {
                prop_assert!(z.sample(k).iter().all(|v| *v == 0.0));
            }
        }
    }
}
