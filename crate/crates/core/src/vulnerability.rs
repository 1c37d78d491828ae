//! Existence audit for unbounded stealthy attacks on SISO plants.
//!
//! An actuator-only attacker can stay hidden while driving the state to
//! infinity iff the plant has a zero outside the unit circle. A sensor-only
//! attacker can do the same iff the plant has an unstable pole.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lti::{eigenvalues, Matrix, StateSpaceModel};

pub const DEFAULT_TOL: f64 = 1e-7;
const CANCEL_TOL: f64 = 1e-7;

/// `num(z) / den(z)`, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTransfer {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn strip_leading(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|c| *c != 0.0).unwrap_or(p.len());
    p[first..].to_vec()
}

impl RationalTransfer {
    /// Leading zeros are dropped and roots shared by `num` and `den` are cancelled.
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self> {
        if num.iter().chain(den).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("transfer coefficients"));
        }
        let den = strip_leading(den);
        if den.is_empty() {
            return Err(Error::InvalidArgument("denominator is identically zero".into()));
        }
        let num = strip_leading(num);
        if num.len() > den.len() {
            return Err(Error::InvalidArgument(format!(
                "improper transfer: numerator degree {} exceeds denominator degree {}",
                num.len() - 1,
                den.len() - 1
            )));
        }
        let mut tf = Self { num, den };
        tf.cancel_common_roots()?;
        Ok(tf)
    }

    /// Transfer function of a single-input single-output realization.
    pub fn from_state_space(sys: &StateSpaceModel) -> Result<Self> {
        if sys.inputs() != 1 || sys.outputs() != 1 {
            return Err(Error::Dimension(format!(
                "transfer form needs a SISO model, got {} inputs and {} outputs",
                sys.inputs(),
                sys.outputs()
            )));
        }
        let n = sys.states();
        let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d()[(0, 0)]);
        // Faddeev-LeVerrier: adj(zI - A) = sum_k M_k z^(n-k), det = sum_k c_k z^(n-k).
        let mut den = vec![1.0];
        let mut num = vec![d];
        let mut m = Matrix::identity(n, n);
        for k in 1..=n {
            if k > 1 {
                m = a * &m + Matrix::identity(n, n) * den[k - 1];
            }
            let am = a * &m;
            let ck = -am.trace() / k as f64;
            let cmb = (c * &m * b)[(0, 0)];
            den.push(ck);
            num.push(cmb + d * ck);
        }
        Self::new(&num, &den)
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    fn cancel_common_roots(&mut self) -> Result<()> {
        if self.num.len() < 2 || self.den.len() < 2 {
            return Ok(());
        }
        let zeros = polynomial_roots(&self.num)?;
        let mut poles = polynomial_roots(&self.den)?;
        let mut common = Vec::new();
        for z in zeros {
            if let Some(pos) = poles
                .iter()
                .position(|p| (p - z).norm() <= CANCEL_TOL * z.norm().max(1.0))
            {
                common.push(z);
                poles.swap_remove(pos);
            }
        }
        if common.is_empty() {
            return Ok(());
        }
        let factor = real_poly_from_roots(&common);
        self.num = poly_div(&self.num, &factor);
        self.den = poly_div(&self.den, &factor);
        Ok(())
    }
}

/// Monic real polynomial with the given roots (conjugates assumed paired).
fn real_poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        p = next;
    }
    p.iter().map(|c| c.re).collect()
}

/// Quotient of `p / q`; the remainder is dropped.
fn poly_div(p: &[f64], q: &[f64]) -> Vec<f64> {
    if p.len() < q.len() {
        return vec![0.0];
    }
    let mut rem = p.to_vec();
    let mut quot = vec![0.0; p.len() - q.len() + 1];
    for i in 0..quot.len() {
        let c = rem[i] / q[0];
        quot[i] = c;
        for (j, qj) in q.iter().enumerate() {
            rem[i + j] -= c * qj;
        }
    }
    quot
}

fn horner(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    for c in p {
        dv = dv * z + v;
        v = v * z + c;
    }
    (v, dv)
}

/// Roots of a real polynomial (descending coefficients), largest modulus first.
pub fn polynomial_roots(p: &[f64]) -> Result<Vec<Complex64>> {
    if p.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("polynomial coefficients"));
    }
    let p = strip_leading(p);
    if p.len() < 2 {
        return Err(Error::InvalidArgument("polynomial must have degree at least 1".into()));
    }
    let trailing = p.iter().rev().take_while(|c| **c == 0.0).count();
    let core = &p[..p.len() - trailing];
    let deg = core.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); trailing];
    if deg > 0 {
        let mut comp = Matrix::zeros(deg, deg);
        for j in 0..deg {
            comp[(0, j)] = -core[j + 1] / core[0];
        }
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        for r in eigenvalues(&comp)? {
            let (v, dv) = horner(core, r);
            let refined = if dv.norm() > 0.0 { r - v / dv } else { r };
            let keep = refined.is_finite() && horner(core, refined).0.norm() < v.norm();
            let mut r = if keep { refined } else { r };
            if r.im.abs() <= f64::EPSILON * r.norm() {
                r.im = 0.0;
            }
            roots.push(r);
        }
    }
    roots.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    UnboundedAttackExists,
    Marginal,
    Safe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroReport {
    pub roots: Vec<Complex64>,
    /// Roots with `|r| > 1 + tol`.
    pub unstable: Vec<Complex64>,
    /// Roots with `||r| - 1| <= tol`.
    pub marginal: Vec<Complex64>,
    pub verdict: Verdict,
    pub note: Option<String>,
}

fn classify(roots: Vec<Complex64>, tol: f64) -> ZeroReport {
    let unstable: Vec<_> = roots.iter().copied().filter(|r| r.norm() > 1.0 + tol).collect();
    let marginal: Vec<_> = roots
        .iter()
        .copied()
        .filter(|r| (r.norm() - 1.0).abs() <= tol)
        .collect();
    let verdict = if !unstable.is_empty() {
        Verdict::UnboundedAttackExists
    } else if !marginal.is_empty() {
        Verdict::Marginal
    } else {
        Verdict::Safe
    };
    ZeroReport {
        roots,
        unstable,
        marginal,
        verdict,
        note: None,
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be finite and non-negative, got {tol}")));
    }
    Ok(())
}

/// Zeros of the plant numerator decide the actuator channel.
pub fn actuator_attack_existence(p: &RationalTransfer, tol: f64) -> Result<ZeroReport> {
    check_tol(tol)?;
    let roots = if p.num.len() < 2 {
        Vec::new()
    } else {
        polynomial_roots(&p.num)?
    };
    Ok(classify(roots, tol))
}

/// Poles of the plant decide the sensor channel.
pub fn sensor_attack_existence(p: &RationalTransfer, tol: f64) -> Result<ZeroReport> {
    check_tol(tol)?;
    let roots = if p.den.len() < 2 {
        Vec::new()
    } else {
        polynomial_roots(&p.den)?
    };
    let mut report = classify(roots, tol);
    if report.verdict == Verdict::UnboundedAttackExists {
        report.note = Some(
            "unstable plant poles cannot be removed by multirate sampling; a sensor-only attacker stays undetected".into(),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<f64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re));
        v.iter().map(|c| c.re).collect()
    }

    #[test]
    fn roots_of_small_polynomials() {
        assert!((polynomial_roots(&[1.0, -2.0]).unwrap()[0] - 2.0).norm() < 1e-14);
        let r = sorted_re(polynomial_roots(&[1.0, 0.0, -1.0]).unwrap());
        assert!((r[0] + 1.0).abs() < 1e-14 && (r[1] - 1.0).abs() < 1e-14);
        for r in polynomial_roots(&[1.0, -1.0, 0.25]).unwrap() {
            assert!((r - 0.5).norm() < 1e-7, "{r}");
        }
        assert!(polynomial_roots(&[3.0]).is_err());
        assert!(polynomial_roots(&[0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_roots_split_off_exactly() {
        let r = polynomial_roots(&[1.0, -0.5, 0.0, 0.0]).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[1], Complex64::new(0.0, 0.0));
        assert!((r[0] - 0.5).norm() < 1e-15);
    }

    #[test]
    fn common_roots_cancel() {
        let p = RationalTransfer::new(&[1.0, -0.5], &[1.0, -0.8, 0.15]).unwrap();
        assert_eq!(p.den().len(), 2);
        assert!((p.num()[0] - 1.0).abs() < 1e-12);
        assert!((p.den()[1] + 0.3).abs() < 1e-9);
        let q = RationalTransfer::new(&[0.0, 2.0, 4.0], &[1.0, 1.0]).unwrap();
        assert_eq!(q.num(), &[2.0, 4.0]);
        assert!(RationalTransfer::new(&[1.0, 0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(RationalTransfer::new(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn actuator_verdicts() {
        let v = |n: &[f64], d: &[f64]| actuator_attack_existence(&RationalTransfer::new(n, d).unwrap(), DEFAULT_TOL).unwrap();
        let r = v(&[1.0, -2.0], &[1.0, -0.5, 0.0]);
        assert_eq!(r.verdict, Verdict::UnboundedAttackExists);
        assert!((r.unstable[0] - 2.0).norm() < 1e-12);
        assert_eq!(v(&[1.0, -0.5], &[1.0, -0.3, 0.0]).verdict, Verdict::Safe);
        assert_eq!(v(&[1.0, -1.0], &[1.0, 0.0, 0.0]).verdict, Verdict::Marginal);
        assert_eq!(v(&[3.0], &[1.0, 0.2]).verdict, Verdict::Safe);
    }

    #[test]
    fn sensor_verdicts() {
        let v = |d: &[f64]| sensor_attack_existence(&RationalTransfer::new(&[1.0], d).unwrap(), DEFAULT_TOL).unwrap();
        let r = v(&[1.0, -2.0]);
        assert_eq!(r.verdict, Verdict::UnboundedAttackExists);
        assert!(r.note.is_some());
        assert_eq!(v(&[1.0, -0.5]).verdict, Verdict::Safe);
        assert_eq!(v(&[1.0, -1.0]).verdict, Verdict::Marginal);
    }

    #[test]
    fn state_space_transfer() {
        // x1' = 0.5 x1 + u, x2' = x1, y = x1 - 2 x2  =>  (z - 2) / (z^2 - 0.5 z)
        let sys = StateSpaceModel::new(
            Matrix::from_row_slice(2, 2, &[0.5, 0.0, 1.0, 0.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 0.0]),
            Matrix::from_row_slice(1, 2, &[1.0, -2.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let p = RationalTransfer::from_state_space(&sys).unwrap();
        let expect_num = [1.0, -2.0];
        let expect_den = [1.0, -0.5, 0.0];
        assert_eq!(p.num().len(), 2);
        for (a, b) in p.num().iter().zip(expect_num) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in p.den().iter().zip(expect_den) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = RationalTransfer::from_state_space(&StateSpaceModel::scalar(0.3, 2.0, 1.5, 0.5)).unwrap();
        // 0.5 + 3 / (z - 0.3) = (0.5 z + 2.85) / (z - 0.3)
        assert!((g.num()[0] - 0.5).abs() < 1e-12 && (g.num()[1] - 2.85).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn recovers_constructed_roots(
            reals in proptest::collection::vec(-3.0f64..3.0, 0..4),
            pairs in proptest::collection::vec((0.05f64..2.5, 0.2f64..3.0), 0..2),
        ) {
            let mut want: Vec<Complex64> = reals.iter().map(|r| Complex64::new(*r, 0.0)).collect();
            for (m, ang) in &pairs {
                let c = Complex64::from_polar(*m, *ang);
                want.push(c);
                want.push(c.conj());
            }
            prop_assume!(!want.is_empty());
            // Well separated roots only; clusters are ill-conditioned.
            for i in 0..want.len() {
                for j in 0..i {
                    prop_assume!((want[i] - want[j]).norm() > 0.1);
                }
            }
            let p = real_poly_from_roots(&want);
            let got = polynomial_roots(&p).unwrap();
            prop_assert_eq!(got.len(), want.len());
            for w in &want {
                let best = got.iter().map(|g| (g - w).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(best < 1e-6, "root {} missed by {}", w, best);
            }
        }
    }
}
