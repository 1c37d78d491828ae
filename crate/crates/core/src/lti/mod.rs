//! Discrete-time LTI models, loop interconnection and decay horizons.

pub mod eig;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use eig::{eigenvalues, spectral_radius};

pub type Matrix = DMatrix<f64>;

/// Default stability margin: stable means spectral radius below `1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Smallest singular value of the feedthrough loop matrix accepted by [`close_loop`].
pub const WELL_POSEDNESS_TOL: f64 = 1e-9;

/// Largest power searched for a contractive `A^s` when bounding infinite tails.
const MAX_CONTRACTION_POWER: usize = 100_000;

/// Discrete-time realization `x(k+1) = A x(k) + B w(k)`, `v(k) = C x(k) + D w(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl StateSpaceModel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}, must be square", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "B is {}x{} and C is {}x{} for {} states",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                n
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless gain `v = D w`.
    pub fn static_gain(d: Matrix) -> Self {
        let (p, m) = d.shape();
        Self::new(Matrix::zeros(0, 0), Matrix::zeros(0, m), Matrix::zeros(p, 0), d)
            .expect("static gain dimensions are consistent")
    }

    /// Scalar first-order section `x+ = a x + b w`, `v = c x + d w`.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(
            Matrix::from_element(1, 1, a),
            Matrix::from_element(1, 1, b),
            Matrix::from_element(1, 1, c),
            Matrix::from_element(1, 1, d),
        )
        .expect("scalar dimensions are consistent")
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn d(&self) -> &Matrix {
        &self.d
    }
    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
}

/// Plant with inputs partitioned as `[d; u]` and outputs as `[z; y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedPlant {
    model: StateSpaceModel,
    m_d: usize,
    m_u: usize,
    p_z: usize,
    p_y: usize,
}

impl GeneralizedPlant {
    pub fn new(model: StateSpaceModel, m_d: usize, m_u: usize, p_z: usize, p_y: usize) -> Result<Self> {
        if m_d + m_u != model.inputs() || p_z + p_y != model.outputs() {
            return Err(Error::Dimension(format!(
                "partition d:{m_d} u:{m_u} z:{p_z} y:{p_y} does not match a {}-input {}-output model",
                model.inputs(),
                model.outputs()
            )));
        }
        Ok(Self { model, m_d, m_u, p_z, p_y })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_blocks(
        a: Matrix,
        b_d: Matrix,
        b_u: Matrix,
        c_z: Matrix,
        c_y: Matrix,
        d_zd: Matrix,
        d_zu: Matrix,
        d_yd: Matrix,
        d_yu: Matrix,
    ) -> Result<Self> {
        let (m_d, m_u) = (b_d.ncols(), b_u.ncols());
        let (p_z, p_y) = (c_z.nrows(), c_y.nrows());
        let check = |m: &Matrix, r: usize, c: usize, name: &str| -> Result<()> {
            if m.shape() != (r, c) {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {r}x{c}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(())
        };
        let n = a.nrows();
        check(&b_d, n, m_d, "B_d")?;
        check(&b_u, n, m_u, "B_u")?;
        check(&c_z, p_z, n, "C_z")?;
        check(&c_y, p_y, n, "C_y")?;
        check(&d_zd, p_z, m_d, "D_zd")?;
        check(&d_zu, p_z, m_u, "D_zu")?;
        check(&d_yd, p_y, m_d, "D_yd")?;
        check(&d_yu, p_y, m_u, "D_yu")?;
        let b = hstack(&b_d, &b_u);
        let c = vstack(&c_z, &c_y);
        let d = vstack(&hstack(&d_zd, &d_zu), &hstack(&d_yd, &d_yu));
        Self::new(StateSpaceModel::new(a, b, c, d)?, m_d, m_u, p_z, p_y)
    }

    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }
    pub fn m_d(&self) -> usize {
        self.m_d
    }
    pub fn m_u(&self) -> usize {
        self.m_u
    }
    pub fn p_z(&self) -> usize {
        self.p_z
    }
    pub fn p_y(&self) -> usize {
        self.p_y
    }

    fn block(&self, out_z: bool, in_d: bool) -> StateSpaceModel {
        let m = &self.model;
        let n = m.states();
        let (r0, rn) = if out_z { (0, self.p_z) } else { (self.p_z, self.p_y) };
        let (c0, cn) = if in_d { (0, self.m_d) } else { (self.m_d, self.m_u) };
        StateSpaceModel {
            a: m.a.clone(),
            b: m.b.view((0, c0), (n, cn)).into_owned(),
            c: m.c.view((r0, 0), (rn, n)).into_owned(),
            d: m.d.view((r0, c0), (rn, cn)).into_owned(),
        }
    }

    pub fn g_zd(&self) -> StateSpaceModel {
        self.block(true, true)
    }
    pub fn g_zu(&self) -> StateSpaceModel {
        self.block(true, false)
    }
    pub fn g_yd(&self) -> StateSpaceModel {
        self.block(false, true)
    }
    pub fn g_yu(&self) -> StateSpaceModel {
        self.block(false, false)
    }
}

/// Closed-loop maps from the attack `d` to `z` and to `psi = [y; u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopMaps {
    pub phi_zd: StateSpaceModel,
    pub phi_psi_d: StateSpaceModel,
    p_y: usize,
    m_u: usize,
}

impl ClosedLoopMaps {
    pub fn p_y(&self) -> usize {
        self.p_y
    }
    pub fn m_u(&self) -> usize {
        self.m_u
    }
}

/// Markov parameters `Phi(0..=T)` of a system, all of equal shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseResponse {
    rows: usize,
    cols: usize,
    samples: Vec<Matrix>,
}

impl PulseResponse {
    pub fn new(samples: Vec<Matrix>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("pulse response needs at least one sample".into()))?;
        let (rows, cols) = first.shape();
        for (k, s) in samples.iter().enumerate() {
            if s.shape() != (rows, cols) {
                return Err(Error::Dimension(format!(
                    "sample {k} is {}x{}, expected {rows}x{cols}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("pulse response sample"));
            }
        }
        Ok(Self { rows, cols, samples })
    }

    /// Single-input single-output pulse from scalar samples.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Matrix::from_element(1, 1, v)).collect())
    }

    pub fn zeros(rows: usize, cols: usize, horizon: usize) -> Self {
        Self {
            rows,
            cols,
            samples: vec![Matrix::zeros(rows, cols); horizon + 1],
        }
    }

    pub fn horizon(&self) -> usize {
        self.samples.len() - 1
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn samples(&self) -> &[Matrix] {
        &self.samples
    }
    pub fn sample(&self, k: usize) -> &Matrix {
        &self.samples[k]
    }

    /// `Phi(k)` or a zero sample past the stored horizon.
    pub fn sample_or_zero(&self, k: usize) -> Matrix {
        self.samples
            .get(k)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(self.rows, self.cols))
    }

    /// Extend with zero samples, or truncate, to exactly `horizon`.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            samples: (0..=horizon).map(|k| self.sample_or_zero(k)).collect(),
        }
    }

    /// Stack row-wise with another pulse response of the same width and horizon.
    pub fn vstack(&self, other: &PulseResponse) -> Result<Self> {
        if self.cols != other.cols || self.horizon() != other.horizon() {
            return Err(Error::Dimension("vstack needs equal widths and horizons".into()));
        }
        Self::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| vstack(a, b))
                .collect(),
        )
    }

    /// Causal convolution `self * other` truncated to the shorter horizon.
    pub fn convolve(&self, other: &PulseResponse) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot convolve {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let t = self.horizon().min(other.horizon());
        let samples = (0..=t)
            .map(|k| {
                let mut acc = Matrix::zeros(self.rows, other.cols);
                for j in 0..=k {
                    acc += &self.samples[j] * &other.samples[k - j];
                }
                acc
            })
            .collect();
        Ok(Self { rows: self.rows, cols: other.cols, samples })
    }
}

/// `Phi(0) = D`, `Phi(k) = C A^(k-1) B`.
pub fn pulse_response(sys: &StateSpaceModel, horizon: usize) -> PulseResponse {
    let mut samples = Vec::with_capacity(horizon + 1);
    samples.push(sys.d.clone());
    let mut ca = sys.c.clone();
    for _ in 1..=horizon {
        samples.push(&ca * &sys.b);
        ca = &ca * &sys.a;
    }
    PulseResponse {
        rows: sys.outputs(),
        cols: sys.inputs(),
        samples,
    }
}

/// Interconnect `plant` with `u = K y`.
pub fn close_loop(plant: &GeneralizedPlant, controller: &StateSpaceModel) -> Result<ClosedLoopMaps> {
    let (m_u, p_y) = (plant.m_u, plant.p_y);
    if controller.inputs() != p_y || controller.outputs() != m_u {
        return Err(Error::Dimension(format!(
            "controller maps {} inputs to {} outputs, plant needs {p_y} -> {m_u}",
            controller.inputs(),
            controller.outputs()
        )));
    }
    let g = &plant.model;
    let n = g.states();
    let nk = controller.states();
    let (p_z, m_d) = (plant.p_z, plant.m_d);

    let sub = |m: &Matrix, r0: usize, rn: usize, c0: usize, cn: usize| m.view((r0, c0), (rn, cn)).into_owned();
    let b_d = sub(&g.b, 0, n, 0, m_d);
    let b_u = sub(&g.b, 0, n, m_d, m_u);
    let c_z = sub(&g.c, 0, p_z, 0, n);
    let c_y = sub(&g.c, p_z, p_y, 0, n);
    let d_zd = sub(&g.d, 0, p_z, 0, m_d);
    let d_zu = sub(&g.d, 0, p_z, m_d, m_u);
    let d_yd = sub(&g.d, p_z, p_y, 0, m_d);
    let d_yu = sub(&g.d, p_z, p_y, m_d, m_u);
    let (ak, bk, ck, dk) = (&controller.a, &controller.b, &controller.c, &controller.d);

    let loop_y = Matrix::identity(p_y, p_y) - &d_yu * dk;
    let sigma_min = if p_y == 0 {
        1.0
    } else {
        loop_y.clone().svd(false, false).singular_values.min()
    };
    if sigma_min < WELL_POSEDNESS_TOL {
        return Err(Error::WellPosedness { sigma_min });
    }
    // (I - D_K D_yu) is invertible iff (I - D_yu D_K) is.
    let loop_u = Matrix::identity(m_u, m_u) - dk * &d_yu;
    let l = loop_u
        .try_inverse()
        .ok_or(Error::WellPosedness { sigma_min })?;

    // u = Ux x + Uk xk + Ud d, y = Yx x + Yk xk + Yd d
    let ux = &l * dk * &c_y;
    let uk = &l * ck;
    let ud = &l * dk * &d_yd;
    let yx = &c_y + &d_yu * &ux;
    let yk = &d_yu * &uk;
    let yd = &d_yd + &d_yu * &ud;

    let acl = vstack(
        &hstack(&(&g.a + &b_u * &ux), &(&b_u * &uk)),
        &hstack(&(bk * &yx), &(ak + bk * &yk)),
    );
    let bcl = vstack(&(&b_d + &b_u * &ud), &(bk * &yd));
    let cz = hstack(&(&c_z + &d_zu * &ux), &(&d_zu * &uk));
    let dz = &d_zd + &d_zu * &ud;
    let cpsi = vstack(&hstack(&yx, &yk), &hstack(&ux, &uk));
    let dpsi = vstack(&yd, &ud);
    debug_assert_eq!(acl.nrows(), n + nk);

    Ok(ClosedLoopMaps {
        phi_zd: StateSpaceModel::new(acl.clone(), bcl.clone(), cz, dz)?,
        phi_psi_d: StateSpaceModel::new(acl, bcl, cpsi, dpsi)?,
        p_y,
        m_u,
    })
}

/// Spectral radius strictly inside `1 - STABILITY_MARGIN`.
pub fn is_stable(sys: &StateSpaceModel) -> Result<bool> {
    is_stable_with_margin(sys, STABILITY_MARGIN)
}

pub fn is_stable_with_margin(sys: &StateSpaceModel, margin: f64) -> Result<bool> {
    Ok(spectral_radius(&sys.a)? < 1.0 - margin)
}

/// Induced infinity norm: largest absolute row sum.
pub fn max_row_sum(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Upper bound on `sum_{k > from} max_row_sum(Phi(k))` for the infinite tail of `sys`.
///
/// `C A^from` is pushed forward until some power `A^s` contracts in the
/// induced infinity norm; the remaining tail is then a geometric series in
/// `||A^s||`.
pub fn tail_bound(sys: &StateSpaceModel, from: usize) -> Result<f64> {
    if sys.states() == 0 {
        return Ok(0.0);
    }
    if !is_stable(sys)? {
        return Err(Error::Stability("tail bound needs a stable realization".into()));
    }
    let mut head = sys.c.clone();
    for _ in 0..from {
        head = &head * &sys.a;
    }
    tail_from_head(sys, &head)
}

fn tail_from_head(sys: &StateSpaceModel, head: &Matrix) -> Result<f64> {
    let b_norm = max_row_sum(&sys.b);
    let n = sys.states();
    let mut power = Matrix::identity(n, n);
    let mut best: Option<(usize, f64)> = None;
    for s in 1..=MAX_CONTRACTION_POWER {
        power = &power * &sys.a;
        let q = max_row_sum(&power);
        if q < 1.0 {
            best = Some((s, q));
            if q <= 0.5 {
                break;
            }
        }
        if best.is_some() && s >= 4 * best.unwrap().0 {
            break;
        }
    }
    let (s, q) = best.ok_or_else(|| Error::Horizon {
        t_max: MAX_CONTRACTION_POWER,
        reason: "no contractive power of A found".into(),
    })?;
    let mut exact = 0.0;
    let mut coarse = 0.0;
    let mut h = head.clone();
    for _ in 0..s {
        exact += max_row_sum(&(&h * &sys.b));
        coarse += max_row_sum(&h);
        h = &h * &sys.a;
    }
    Ok(exact + q / (1.0 - q) * coarse * b_norm)
}

/// Smallest `t <= t_max` with `amplitude * sum_{k>t} max_row_sum(Phi(k)) <= epsilon`.
pub fn decay_horizon(sys: &StateSpaceModel, amplitude: f64, epsilon: f64, t_max: usize) -> Result<usize> {
    if !(amplitude > 0.0 && amplitude.is_finite()) || !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decay horizon needs finite amplitude > 0 and epsilon > 0, got {amplitude} and {epsilon}"
        )));
    }
    if !is_stable(sys)? {
        return Err(Error::Horizon {
            t_max,
            reason: "system is not stable".into(),
        });
    }
    if sys.states() == 0 {
        return Ok(0);
    }
    // norms[k] = ||Phi(k)|| for k = 1..=t_max
    let mut norms = vec![0.0; t_max + 1];
    let mut ca = sys.c.clone();
    for norm in norms.iter_mut().skip(1) {
        *norm = max_row_sum(&(&ca * &sys.b));
        ca = &ca * &sys.a;
    }
    let mut tail = tail_from_head(sys, &ca)?;
    let mut best = None;
    for t in (0..=t_max).rev() {
        if amplitude * tail <= epsilon {
            best = Some(t);
        } else {
            break;
        }
        tail += norms[t];
    }
    best.ok_or_else(|| Error::Horizon {
        t_max,
        reason: format!("tail at t_max is {:.3e}, epsilon {epsilon:.3e}", amplitude * tail),
    })
}

pub(crate) fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut m = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

pub(crate) fn vstack(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.ncols(), b.ncols());
    let mut m = Matrix::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}
