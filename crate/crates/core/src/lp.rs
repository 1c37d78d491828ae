//! Dense two-phase primal simplex for small maximization LPs.
//!
//! Problems are stated as
//!
//! ```text
//! maximize    c'x
//! subject to  A x <= b,  E x = f,  l <= x <= u
//! ```
//!
//! with infinite bounds allowed. Internally every variable is written as an
//! offset plus non-negative parts (bounded where the original is bounded) and
//! the tableau keeps nonbasic columns at either their lower or upper bound, so
//! box constraints never become rows.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const FEASIBILITY_TOL: f64 = 1e-8;
pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-11;
/// Degenerate pivots tolerated before switching to Bland's rule.
pub const BLAND_AFTER: usize = 1000;
/// Pivot budget per variable-plus-constraint.
pub const PIVOTS_PER_DIM: usize = 50;
/// Candidate columns rejected for tiny pivots before giving up.
const TINY_PIVOT_LIMIT: usize = 50;
/// Pivots smaller than this fraction of their column's largest entry are refused.
const REL_PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
/// Bound relaxation of the first ratio-test pass.
const HARRIS_TOL: f64 = 1e-9;
/// Pivots between refactorizations of the basis.
const REINVERT_EVERY: usize = 50;

#[derive(Debug, Clone, PartialEq)]
struct Row {
    coeffs: Vec<f64>,
    rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    ineq: Vec<Row>,
    eq: Vec<Row>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimizer when `status == Optimal`, empty otherwise.
    pub x: Vec<f64>,
    /// `c'x` at the optimum; `+inf` when unbounded, `NaN` when infeasible.
    pub value: f64,
    pub pivots: usize,
}

impl LinearProgram {
    /// `vars` free variables and a zero objective.
    pub fn new(vars: usize) -> Self {
        Self {
            objective: vec![0.0; vars],
            ineq: Vec::new(),
            eq: Vec::new(),
            lower: vec![f64::NEG_INFINITY; vars],
            upper: vec![f64::INFINITY; vars],
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn inequality_count(&self) -> usize {
        self.ineq.len()
    }

    pub fn equality_count(&self) -> usize {
        self.eq.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn inequality(&self, i: usize) -> (&[f64], f64) {
        (&self.ineq[i].coeffs, self.ineq[i].rhs)
    }

    pub fn equality(&self, i: usize) -> (&[f64], f64) {
        (&self.eq[i].coeffs, self.eq[i].rhs)
    }

    pub fn maximize(&mut self, c: Vec<f64>) -> &mut Self {
        assert_eq!(c.len(), self.vars(), "objective length");
        self.objective = c;
        self
    }

    /// `row . x <= rhs`
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.vars(), "constraint length");
        self.ineq.push(Row { coeffs: row, rhs });
        self
    }

    /// `row . x >= rhs`
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs)
    }

    /// `|row . x| <= bound`, as two linear rows.
    pub fn add_abs_le(&mut self, row: Vec<f64>, bound: f64) -> &mut Self {
        let neg = row.iter().map(|v| -v).collect();
        self.add_le(row, bound);
        self.add_le(neg, bound)
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.vars(), "constraint length");
        self.eq.push(Row { coeffs: row, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn set_all_bounds(&mut self, lower: f64, upper: f64) -> &mut Self {
        self.lower.fill(lower);
        self.upper.fill(upper);
        self
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &f64| v.is_finite();
        if !self.objective.iter().all(finite) {
            return Err(Error::NonFinite("LP objective"));
        }
        for r in self.ineq.iter().chain(&self.eq) {
            if !r.coeffs.iter().all(finite) || !r.rhs.is_finite() {
                return Err(Error::NonFinite("LP constraint"));
            }
        }
        for (j, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!("variable {j} has bounds [{l}, {u}]")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |r: &Row| r.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut worst: f64 = 0.0;
        for r in &self.ineq {
            worst = worst.max(dot(r) - r.rhs);
        }
        for r in &self.eq {
            worst = worst.max((dot(r) - r.rhs).abs());
        }
        for ((v, l), u) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(l - v).max(v - u);
        }
        worst
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Scale used for the relative feasibility check after solving.
    fn magnitude(&self) -> f64 {
        let mut s: f64 = 1.0;
        for r in self.ineq.iter().chain(&self.eq) {
            s = s.max(r.rhs.abs());
        }
        for v in self.lower.iter().chain(&self.upper) {
            if v.is_finite() {
                s = s.max(v.abs());
            }
        }
        s
    }
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Human-readable dump used by golden tests and `--dump-lp`.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = |coeffs: &[f64]| {
            let parts: Vec<String> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, c)| format!("{}{} x{j}", if *c < 0.0 { "- " } else { "+ " }, fmt_num(c.abs())))
                .collect();
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" ")
            }
        };
        writeln!(f, "maximize")?;
        writeln!(f, "  {}", terms(&self.objective))?;
        writeln!(f, "subject to")?;
        for (i, r) in self.ineq.iter().enumerate() {
            writeln!(f, "  r{i}: {} <= {}", terms(&r.coeffs), fmt_num(r.rhs))?;
        }
        for (i, r) in self.eq.iter().enumerate() {
            writeln!(f, "  e{i}: {} = {}", terms(&r.coeffs), fmt_num(r.rhs))?;
        }
        writeln!(f, "bounds")?;
        for (j, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            writeln!(f, "  {} <= x{j} <= {}", fmt_num(*l), fmt_num(*u))?;
        }
        Ok(())
    }
}

/// How one original variable is rebuilt from tableau columns.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    parts: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`, always `B^-1 [A | I | art]`.
    t: Vec<f64>,
    /// Original standard-form matrix and right-hand side, for the final refinement.
    a0: Vec<f64>,
    b0: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    basic_row: Vec<Option<usize>>,
    artificial_start: usize,
    reduced: Vec<f64>,
    cost: Vec<f64>,
    pivots: usize,
    pivot_limit: usize,
    degenerate: usize,
    tiny_rejects: usize,
    harris: f64,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.reduced = cost.clone();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                for (r, a) in self.reduced.iter_mut().zip(row) {
                    *r -= cb * a;
                }
            }
        }
        self.cost = cost;
    }

    fn objective_value(&self) -> f64 {
        let mut v = 0.0;
        for j in 0..self.cols {
            let x = match self.basic_row[j] {
                Some(i) => self.xb[i],
                None => self.nonbasic_value(j),
            };
            v += self.cost[j] * x;
        }
        v
    }

    /// Entering column and direction (+1 from lower, -1 from upper).
    fn choose_entering(&self, bland: bool, rejected: &[bool]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.artificial_start {
            if self.basic_row[j].is_some() || rejected[j] {
                continue;
            }
            let d = self.reduced[j];
            let dir = if !self.at_upper[j] && d > OPTIMALITY_TOL && self.upper[j] > 0.0 {
                1.0
            } else if self.at_upper[j] && d < -OPTIMALITY_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.map_or(true, |(_, _, s)| d.abs() > s) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Step length and blocking row (`None` means the entering bound flips).
    ///
    /// Two passes: the first finds the longest step keeping every basic
    /// variable within `HARRIS_TOL` of its bounds, the second picks the largest
    /// pivot among rows blocking no later than that. Bland mode uses the exact
    /// minimum ratio with the smallest basic index instead.
    fn ratio_test(&self, j: usize, dir: f64, bland: bool, rel: f64) -> (f64, Option<usize>, bool) {
        let mut tiny_block = false;
        let mut candidates: Vec<(usize, f64, f64, f64)> = Vec::new();
        let col_max = (0..self.rows).map(|i| self.at(i, j).abs()).fold(1.0, f64::max);
        let tol = PIVOT_TOL.max(rel * col_max);
        for i in 0..self.rows {
            let alpha = dir * self.at(i, j);
            let bi = self.basis[i];
            let (room, a) = if alpha > tol {
                (self.xb[i], alpha)
            } else if alpha < -tol && self.upper[bi].is_finite() {
                (self.upper[bi] - self.xb[i], -alpha)
            } else {
                if alpha != 0.0 && (alpha > 0.0 || self.upper[bi].is_finite()) {
                    tiny_block = true;
                }
                continue;
            };
            let ratio = room.max(0.0) / a;
            let relaxed = (room + self.harris).max(0.0) / a;
            candidates.push((i, ratio, relaxed, a));
        }
        let bound = if bland {
            candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min)
        } else {
            candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min)
        };
        if self.upper[j] <= bound {
            return (self.upper[j], None, tiny_block);
        }
        if bound.is_infinite() {
            return (f64::INFINITY, None, tiny_block);
        }
        let mut leave: Option<(usize, f64, f64)> = None;
        for &(i, ratio, _, a) in &candidates {
            if bland {
                if ratio > bound + RATIO_TIE * (1.0 + bound) {
                    continue;
                }
                if leave.map_or(true, |(l, _, _)| self.basis[i] < self.basis[l]) {
                    leave = Some((i, ratio, a));
                }
            } else if ratio <= bound && leave.map_or(true, |(_, _, la)| a > la) {
                leave = Some((i, ratio, a));
            }
        }
        let (r, step, _) = leave.expect("a finite bound has a blocking row");
        (step, Some(r), tiny_block)
    }

    /// Rebuild `B^-1 [A | I | art]`, the basic values and the reduced costs from the original data.
    fn reinvert(&mut self) -> Result<()> {
        let m = self.rows;
        if m == 0 {
            return Ok(());
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.a0[i * self.cols + self.basis[k]]);
        let lu = bmat.lu();
        let a = DMatrix::from_row_slice(m, self.cols, &self.a0);
        let t = lu
            .solve(&a)
            .ok_or_else(|| Error::Numerical("basis matrix became singular".into()))?;
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("basis matrix became singular".into()));
        }
        let mut rhs = DVector::from_column_slice(&self.b0);
        for j in 0..self.cols {
            if self.basic_row[j].is_none() && self.at_upper[j] {
                for i in 0..m {
                    rhs[i] -= self.a0[i * self.cols + j] * self.upper[j];
                }
            }
        }
        let xb = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("basis matrix became singular".into()))?;
        for i in 0..m {
            for j in 0..self.cols {
                self.t[i * self.cols + j] = t[(i, j)];
            }
            self.t[i * self.cols + self.basis[i]] = 1.0;
            self.xb[i] = xb[i];
        }
        let cost = std::mem::take(&mut self.cost);
        self.set_cost(cost);
        Ok(())
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.t[r * cols + j];
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f != 0.0 {
                let row = &mut self.t[i * cols..(i + 1) * cols];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        let f = self.reduced[j];
        if f != 0.0 {
            for (v, pv) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.reduced[j] = 0.0;
        }
    }

    fn run(&mut self) -> Result<Outcome> {
        let mut rejected = vec![false; self.cols];
        loop {
            let bland = self.degenerate > BLAND_AFTER;
            let Some((j, dir)) = self.choose_entering(bland, &rejected) else {
                if rejected.iter().any(|r| *r) {
                    return Err(Error::Numerical(
                        "every improving column was rejected for tiny pivot elements".into(),
                    ));
                }
                return Ok(Outcome::Optimal);
            };
            if self.pivots >= self.pivot_limit {
                return Err(Error::IterationLimit(self.pivot_limit));
            }
            let (mut step, mut leave, mut tiny_block) = self.ratio_test(j, dir, bland, REL_PIVOT_TOL);
            if step.is_infinite() && tiny_block {
                (step, leave, tiny_block) = self.ratio_test(j, dir, bland, 0.0);
            }
            if step.is_infinite() {
                if tiny_block {
                    self.tiny_rejects += 1;
                    if self.tiny_rejects > TINY_PIVOT_LIMIT {
                        return Err(Error::Numerical(format!(
                            "pivot elements below {PIVOT_TOL:e} encountered {} times",
                            self.tiny_rejects
                        )));
                    }
                    rejected[j] = true;
                    continue;
                }
                return Ok(Outcome::Unbounded);
            }
            rejected.iter_mut().for_each(|r| *r = false);
            self.pivots += 1;
            if step <= RATIO_TIE {
                self.degenerate += 1;
            }
            for i in 0..self.rows {
                let a = self.t[i * self.cols + j];
                if a != 0.0 {
                    self.xb[i] -= step * dir * a;
                }
            }
            match leave {
                None => {
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some(r) => {
                    let entering_value = if dir > 0.0 {
                        self.nonbasic_value(j) + step
                    } else {
                        self.upper[j] - step
                    };
                    let out = self.basis[r];
                    let alpha = dir * self.at(r, j);
                    // Leaving variable settles on the bound it reached.
                    self.at_upper[out] = alpha < 0.0;
                    self.basic_row[out] = None;
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.basic_row[j] = Some(r);
                    self.at_upper[j] = false;
                    self.xb[r] = entering_value;
                }
            }
            if self.pivots % REINVERT_EVERY == 0 {
                self.reinvert()?;
            }
        }
    }

    /// Column values of the current basic solution.
    fn column_values(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| match self.basic_row[j] {
                Some(i) => self.xb[i],
                None => self.nonbasic_value(j),
            })
            .collect()
    }

    /// Basic values recomputed from the original columns by an LU solve.
    fn refined_values(&self) -> Option<Vec<f64>> {
        let m = self.rows;
        if m == 0 {
            return Some(self.column_values());
        }
        let mut vals = self.column_values();
        let mut rhs = DVector::from_column_slice(&self.b0);
        for j in 0..self.cols {
            if self.basic_row[j].is_none() && vals[j] != 0.0 {
                for i in 0..m {
                    rhs[i] -= self.a0[i * self.cols + j] * vals[j];
                }
            }
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.a0[i * self.cols + self.basis[k]]);
        let sol = bmat.lu().solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for (k, v) in sol.iter().enumerate() {
            vals[self.basis[k]] = *v;
        }
        Some(vals)
    }
}

/// Solve `lp` with the two-phase bounded simplex.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    // Retry with the exact ratio test.
    match solve_inner(lp, HARRIS_TOL) {
        Err(Error::Numerical(_)) => solve_inner(lp, 0.0),
        r => r,
    }
}

fn solve_inner(lp: &LinearProgram, harris: f64) -> Result<LpSolution> {
    let n = lp.vars();

    // Split each original variable into bounded non-negative parts.
    let mut maps = Vec::with_capacity(n);
    let mut part_upper: Vec<f64> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let base = if l > 0.0 {
            l
        } else if u < 0.0 {
            u
        } else {
            0.0
        };
        let mut parts = Vec::new();
        if u > base {
            parts.push((part_upper.len(), 1.0));
            part_upper.push(u - base);
        }
        if l < base {
            parts.push((part_upper.len(), -1.0));
            part_upper.push(base - l);
        }
        maps.push(VarMap { offset: base, parts });
    }
    let ns = part_upper.len();
    let mi = lp.ineq.len();
    let me = lp.eq.len();
    let rows = mi + me;

    // Row data over structural parts, shifted right-hand side.
    let expand = |coeffs: &[f64], rhs: f64| {
        let mut r = vec![0.0; ns];
        let mut shifted = rhs;
        for (j, m) in maps.iter().enumerate() {
            let c = coeffs[j];
            if c == 0.0 {
                continue;
            }
            shifted -= c * m.offset;
            for &(col, s) in &m.parts {
                r[col] += c * s;
            }
        }
        (r, shifted)
    };
    let mut rows_data = Vec::with_capacity(rows);
    let mut needs_art = Vec::with_capacity(rows);
    for r in &lp.ineq {
        let (coeffs, rhs) = expand(&r.coeffs, r.rhs);
        needs_art.push(rhs < 0.0);
        rows_data.push((coeffs, rhs));
    }
    for r in &lp.eq {
        let (coeffs, rhs) = expand(&r.coeffs, r.rhs);
        needs_art.push(true);
        rows_data.push((coeffs, rhs));
    }
    let n_art = needs_art.iter().filter(|b| **b).count();
    let artificial_start = ns + mi;
    let cols = artificial_start + n_art;

    let mut t = vec![0.0; rows * cols];
    let mut b0 = vec![0.0; rows];
    let mut basis = vec![0; rows];
    let mut upper = part_upper.clone();
    upper.extend(std::iter::repeat(f64::INFINITY).take(mi + n_art));
    let mut art = artificial_start;
    for (i, (coeffs, rhs)) in rows_data.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        let row = &mut t[i * cols..(i + 1) * cols];
        for (v, c) in row.iter_mut().zip(coeffs) {
            *v = sign * c;
        }
        if i < mi {
            row[ns + i] = sign;
        }
        b0[i] = sign * rhs;
        if needs_art[i] {
            row[art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = ns + i;
        }
    }
    let mut basic_row = vec![None; cols];
    for (i, &b) in basis.iter().enumerate() {
        basic_row[b] = Some(i);
    }
    let mut tab = Tableau {
        rows,
        cols,
        a0: t.clone(),
        t,
        b0: b0.clone(),
        xb: b0,
        basis,
        upper,
        at_upper: vec![false; cols],
        basic_row,
        artificial_start,
        reduced: vec![0.0; cols],
        cost: vec![0.0; cols],
        pivots: 0,
        pivot_limit: PIVOTS_PER_DIM * (n + rows).max(1),
        degenerate: 0,
        tiny_rejects: 0,
        harris,
    };

    let scale = lp.magnitude();
    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        cost[artificial_start..].fill(-1.0);
        tab.set_cost(cost);
        // Artificials never re-enter once they leave; only the structural and
        // slack columns are candidates in `choose_entering`.
        tab.run()?;
        tab.reinvert()?;
        let infeasibility = -tab.objective_value();
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                value: f64::NAN,
                pivots: tab.pivots,
            });
        }
        for j in artificial_start..cols {
            tab.upper[j] = 0.0;
            tab.at_upper[j] = false;
        }
        tab.degenerate = 0;
    }

    let mut cost = vec![0.0; cols];
    for (j, m) in maps.iter().enumerate() {
        for &(col, s) in &m.parts {
            cost[col] += lp.objective[j] * s;
        }
    }
    tab.set_cost(cost);
    if tab.run()? == Outcome::Unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            value: f64::INFINITY,
            pivots: tab.pivots,
        });
    }

    let to_original = |vals: &[f64]| -> Vec<f64> {
        maps.iter()
            .map(|m| m.offset + m.parts.iter().map(|&(c, s)| s * vals[c]).sum::<f64>())
            .collect()
    };
    let clamp = |x: Vec<f64>| -> Vec<f64> {
        x.into_iter()
            .zip(lp.lower.iter().zip(&lp.upper))
            .map(|(v, (l, u))| v.max(*l).min(*u))
            .collect()
    };
    let plain = clamp(to_original(&tab.column_values()));
    let mut x = plain.clone();
    if let Some(refined) = tab.refined_values() {
        let refined = clamp(to_original(&refined));
        if lp.max_violation(&refined) <= lp.max_violation(&plain) {
            x = refined;
        }
    }
    let violation = lp.max_violation(&x);
    if violation > 1e-6 * scale {
        return Err(Error::Numerical(format!("optimal basis violates constraints by {violation:.3e}")));
    }
    let value = lp.value_at(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
        pivots: tab.pivots,
    })
}
