//! Small dense convex QCQP solver: maximize `cᵀd` subject to convex
//! quadratic and linear inequalities, by a log-barrier interior-point method.

use nalgebra::{DMatrix, DVector};

/// Barrier stages stop once `m/t` falls below this.
const GAP_TOL: f64 = 1e-9;
const NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON_PER_STAGE: usize = 200;
const LS_ALPHA: f64 = 0.25;
const LS_BETA: f64 = 0.5;

/// `dᵀPd + qᵀd + r ≤ 0` with `P` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub r: f64,
}

impl QuadConstraint {
    pub fn value(&self, d: &DVector<f64>) -> f64 {
        (d.transpose() * &self.p * d)[(0, 0)] + self.q.dot(d) + self.r
    }

    pub fn gradient(&self, d: &DVector<f64>) -> DVector<f64> {
        &self.p * d * 2.0 + &self.q
    }

    /// `(d[i] − center)² ≤ radius²`: one coordinate restricted to an interval
    /// through a quadratic row.
    pub fn coordinate_disk(n: usize, i: usize, center: f64, half_width: f64) -> Self {
        let mut p = DMatrix::zeros(n, n);
        p[(i, i)] = 1.0;
        let mut q = DVector::zeros(n);
        q[i] = -2.0 * center;
        Self {
            p,
            q,
            r: center * center - half_width * half_width,
        }
    }
}

/// Linear objective, convex quadratic rows, linear rows `A·d ≤ b` and
/// per-coordinate bounds (possibly infinite).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProgram {
    pub c: DVector<f64>,
    pub quad_constraints: Vec<QuadConstraint>,
    pub lin_a: DMatrix<f64>,
    pub lin_b: DVector<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl ConvexProgram {
    /// Program over `n` variables with no constraints besides the bounds.
    pub fn new(c: DVector<f64>, bounds: Vec<(f64, f64)>) -> Self {
        let n = c.len();
        assert_eq!(bounds.len(), n, "one bound pair per variable");
        Self {
            c,
            quad_constraints: Vec::new(),
            lin_a: DMatrix::zeros(0, n),
            lin_b: DVector::zeros(0),
            bounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn add_quad(&mut self, c: QuadConstraint) {
        self.quad_constraints.push(c);
    }

    pub fn add_linear(&mut self, a: &[f64], b: f64) {
        let rows = self.lin_a.nrows();
        let n = self.dim();
        self.lin_a = self.lin_a.clone().insert_row(rows, 0.0);
        for j in 0..n {
            self.lin_a[(rows, j)] = a[j];
        }
        self.lin_b = self.lin_b.clone().insert_row(rows, b);
    }

    pub fn objective(&self, d: &DVector<f64>) -> f64 {
        self.c.dot(d)
    }

    /// Every constraint as a generic row, bounds expanded into linear rows.
    fn rows(&self) -> Vec<Row> {
        let n = self.dim();
        let mut rows: Vec<Row> = self
            .quad_constraints
            .iter()
            .map(|c| Row::Quad {
                p: c.p.clone(),
                q: c.q.clone(),
                r: c.r,
            })
            .collect();
        for i in 0..self.lin_a.nrows() {
            rows.push(Row::Lin {
                a: self.lin_a.row(i).transpose(),
                b: self.lin_b[i],
            });
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if hi.is_finite() {
                let mut a = DVector::zeros(n);
                a[i] = 1.0;
                rows.push(Row::Lin { a, b: hi });
            }
            if lo.is_finite() {
                let mut a = DVector::zeros(n);
                a[i] = -1.0;
                rows.push(Row::Lin { a, b: -lo });
            }
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub d: DVector<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    /// Objective after each centering stage of the final phase.
    pub stage_objectives: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Row {
    Quad { p: DMatrix<f64>, q: DVector<f64>, r: f64 },
    Lin { a: DVector<f64>, b: f64 },
}

impl Row {
    fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Row::Quad { p, q, r } => (x.transpose() * p * x)[(0, 0)] + q.dot(x) + r,
            Row::Lin { a, b } => a.dot(x) - b,
        }
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Row::Quad { p, q, .. } => p * x * 2.0 + q,
            Row::Lin { a, .. } => a.clone(),
        }
    }

    /// Phase-I row `f(x)/scale − s ≤ 0` over `(x, s)`.
    fn lifted(&self, scale: f64) -> Row {
        let n = match self {
            Row::Quad { q, .. } => q.len(),
            Row::Lin { a, .. } => a.len(),
        };
        match self {
            Row::Quad { p, q, r } => {
                let mut pp = DMatrix::zeros(n + 1, n + 1);
                pp.view_mut((0, 0), (n, n)).copy_from(&(p / scale));
                let mut qq = DVector::zeros(n + 1);
                qq.rows_mut(0, n).copy_from(&(q / scale));
                qq[n] = -1.0;
                Row::Quad { p: pp, q: qq, r: r / scale }
            }
            Row::Lin { a, b } => {
                let mut aa = DVector::zeros(n + 1);
                aa.rows_mut(0, n).copy_from(&(a / scale));
                aa[n] = -1.0;
                Row::Lin { a: aa, b: b / scale }
            }
        }
    }
}

fn max_value(rows: &[Row], x: &DVector<f64>) -> f64 {
    rows.iter().map(|r| r.value(x)).fold(f64::NEG_INFINITY, f64::max)
}

fn strictly_feasible(rows: &[Row], x: &DVector<f64>) -> bool {
    rows.iter().all(|r| {
        let v = r.value(x);
        v < 0.0 && v.is_finite()
    })
}

/// Change of the barrier function along `x + s·step`, computed from the
/// increments of each row so it stays accurate when `t` is large. `None` if
/// the trial point leaves the strict interior.
fn barrier_change(
    t: f64,
    c: &DVector<f64>,
    rows: &[Row],
    values: &[f64],
    x: &DVector<f64>,
    step: &DVector<f64>,
    s: f64,
) -> Option<f64> {
    let mut delta = t * s * c.dot(step);
    for (r, &v0) in rows.iter().zip(values) {
        let inc = match r {
            Row::Lin { a, .. } => s * a.dot(step),
            Row::Quad { p, q, .. } => {
                let pd = p * step;
                s * (2.0 * x.dot(&pd) + q.dot(step)) + s * s * step.dot(&pd)
            }
        };
        let v1 = v0 + inc;
        if !(v1 < 0.0) || !v1.is_finite() {
            return None;
        }
        delta -= (inc / v0).ln_1p();
    }
    Some(delta)
}

struct BarrierOutcome {
    x: DVector<f64>,
    max_iter_hit: bool,
    stage_objectives: Vec<f64>,
}

/// Minimizes `cᵀx` over the strict interior of `rows` from strictly feasible
/// `x`. `early_exit` is consulted after every centering stage.
fn barrier_minimize(
    c: &DVector<f64>,
    rows: &[Row],
    mut x: DVector<f64>,
    early_exit: &dyn Fn(&DVector<f64>) -> bool,
) -> BarrierOutcome {
    let n = x.len();
    let m = rows.len().max(1) as f64;
    let mut t = 1.0;
    let mut max_iter_hit = false;
    let mut stage_objectives = Vec::new();
    loop {
        let mut converged = false;
        for _ in 0..MAX_NEWTON_PER_STAGE {
            let mut grad = c * t;
            let mut hess = DMatrix::<f64>::zeros(n, n);
            for r in rows {
                let v = r.value(&x);
                let g = r.gradient(&x);
                let inv = -1.0 / v;
                grad += &g * inv;
                hess += &g * g.transpose() * (inv * inv);
                if let Row::Quad { p, .. } = r {
                    hess += p * (2.0 * inv);
                }
            }
            let step = match newton_step(&hess, &grad) {
                Some(s) => s,
                None => break,
            };
            let decrement = -grad.dot(&step);
            if decrement / 2.0 <= NEWTON_TOL {
                converged = true;
                break;
            }
            let values: Vec<f64> = rows.iter().map(|r| r.value(&x)).collect();
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-20 {
                if let Some(delta) = barrier_change(t, c, rows, &values, &x, &step, s) {
                    if delta <= -LS_ALPHA * s * decrement {
                        x += &step * s;
                        accepted = true;
                        break;
                    }
                }
                s *= LS_BETA;
            }
            // Stop once no further progress is representable at this t.
            if !accepted || s * step.norm() <= 4.0 * f64::EPSILON * (1.0 + x.norm()) {
                converged = true;
                break;
            }
        }
        if !converged {
            max_iter_hit = true;
        }
        stage_objectives.push(c.dot(&x));
        if early_exit(&x) || m / t < GAP_TOL {
            break;
        }
        t *= 10.0;
    }
    BarrierOutcome {
        x,
        max_iter_hit,
        stage_objectives,
    }
}

fn newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = grad.len();
    let scale = hess.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        for i in 0..n {
            h[(i, i)] += reg;
        }
        if let Some(ch) = h.cholesky() {
            let s = ch.solve(&(-grad));
            if s.iter().all(|v| v.is_finite()) {
                return Some(s);
            }
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    None
}

/// Finds a strictly feasible point starting from `start`, or `None`.
/// Rows are normalized by their gradient norm at the start so the slack is
/// measured in comparable units.
pub fn phase_one(program: &ConvexProgram, start: &DVector<f64>) -> Option<DVector<f64>> {
    let rows = program.rows();
    if strictly_feasible(&rows, start) {
        return Some(start.clone());
    }
    let n = program.dim();
    let lifted: Vec<Row> = rows
        .iter()
        .map(|r| {
            let g = r.gradient(start).norm();
            r.lifted(if g > 0.0 && g.is_finite() { g } else { 1.0 })
        })
        .collect();
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(start);
    let s0 = max_value(&lifted, &z);
    if !s0.is_finite() {
        return None;
    }
    z[n] = s0.max(0.0) + 1.0;
    let floor = -(s0.abs() + 1.0);
    let mut rows1 = lifted;
    let mut a = DVector::zeros(n + 1);
    a[n] = -1.0;
    rows1.push(Row::Lin { a, b: -floor });
    let mut c = DVector::zeros(n + 1);
    c[n] = 1.0;
    let outcome = barrier_minimize(&c, &rows1, z, &|z: &DVector<f64>| z[n] < 0.0);
    let x = outcome.x.rows(0, n).into_owned();
    strictly_feasible(&rows, &x).then_some(x)
}

/// Maximizes `cᵀd`. A start that is not strictly feasible goes through
/// [`phase_one`] first.
pub fn solve(program: &ConvexProgram, start: &DVector<f64>) -> Solution {
    let infeasible = || Solution {
        d: start.clone(),
        status: SolveStatus::Infeasible,
        objective: program.objective(start),
        stage_objectives: Vec::new(),
    };
    let Some(x0) = phase_one(program, start) else {
        return infeasible();
    };
    let cn = program.c.norm();
    if cn == 0.0 || !cn.is_finite() {
        return Solution {
            objective: program.objective(&x0),
            d: x0,
            status: SolveStatus::Optimal,
            stage_objectives: Vec::new(),
        };
    }
    let rows = program.rows();
    let c = -&program.c / cn;
    let outcome = barrier_minimize(&c, &rows, x0.clone(), &|_| false);
    let mut d = outcome.x;
    if program.objective(&d) < program.objective(&x0) {
        d = x0;
    }
    Solution {
        objective: program.objective(&d),
        d,
        status: if outcome.max_iter_hit {
            SolveStatus::MaxIter
        } else {
            SolveStatus::Optimal
        },
        stage_objectives: outcome.stage_objectives.iter().map(|v| -v * cn).collect(),
    }
}

/// Which constraint family a residual belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRef {
    Quad(usize),
    Linear(usize),
    Lower(usize),
    Upper(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Largest residual `f(d)`; negative means strictly inside.
    pub max_residual: f64,
    pub worst: Option<ConstraintRef>,
    pub feasible: bool,
    pub quad_residuals: Vec<f64>,
    pub linear_residuals: Vec<f64>,
}

/// Residuals of every constraint at `d` (`≤ 0` when satisfied).
pub fn feasibility_check(program: &ConvexProgram, d: &DVector<f64>, tol: f64) -> FeasibilityReport {
    let quad_residuals: Vec<f64> = program.quad_constraints.iter().map(|c| c.value(d)).collect();
    let linear_residuals: Vec<f64> = (0..program.lin_a.nrows())
        .map(|i| program.lin_a.row(i).transpose().dot(d) - program.lin_b[i])
        .collect();
    let mut max_residual = f64::NEG_INFINITY;
    let mut worst = None;
    let mut consider = |v: f64, r: ConstraintRef| {
        if v > max_residual || v.is_nan() {
            max_residual = v;
            worst = Some(r);
        }
    };
    for (i, &v) in quad_residuals.iter().enumerate() {
        consider(v, ConstraintRef::Quad(i));
    }
    for (i, &v) in linear_residuals.iter().enumerate() {
        consider(v, ConstraintRef::Linear(i));
    }
    for (i, &(lo, hi)) in program.bounds.iter().enumerate() {
        if lo.is_finite() {
            consider(lo - d[i], ConstraintRef::Lower(i));
        }
        if hi.is_finite() {
            consider(d[i] - hi, ConstraintRef::Upper(i));
        }
    }
    FeasibilityReport {
        feasible: max_residual <= tol,
        max_residual,
        worst,
        quad_residuals,
        linear_residuals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(n: usize) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); n]
    }

    #[test]
    fn separable_lp_saturates_box() {
        let c = DVector::from_vec(vec![2.0, -1.0, 0.5]);
        let prog = ConvexProgram::new(c, vec![(-1.0, 2.0), (-3.0, 1.0), (0.0, 4.0)]);
        let sol = solve(&prog, &DVector::from_vec(vec![0.0, 0.0, 1.0]));
        assert_eq!(sol.status, SolveStatus::Optimal);
        let want = [2.0, -3.0, 4.0];
        for i in 0..3 {
            assert!((sol.d[i] - want[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn ball_constraint_is_exact() {
        let n = 4;
        let c = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let mut prog = ConvexProgram::new(c.clone(), vec![(f64::NEG_INFINITY, f64::INFINITY); n]);
        let r = 1.7;
        prog.add_quad(QuadConstraint {
            p: DMatrix::identity(n, n),
            q: DVector::zeros(n),
            r: -r * r,
        });
        let sol = solve(&prog, &DVector::zeros(n));
        let want = &c * (r / c.norm());
        assert!((&sol.d - want).norm() < 1e-9);
    }

    #[test]
    fn phase_one_recovers_from_boundary_and_outside_starts() {
        let c = DVector::from_vec(vec![1.0, 1.0]);
        let mut prog = ConvexProgram::new(c, unit_box(2));
        prog.add_linear(&[1.0, -1.0], 0.0);
        // Start exactly on the face y₀ = y₁ and outside the box.
        for start in [vec![0.3, 0.3], vec![1.5, -2.0]] {
            let sol = solve(&prog, &DVector::from_vec(start));
            assert_eq!(sol.status, SolveStatus::Optimal);
            assert!((sol.objective - 2.0).abs() < 1e-8);
        }
        let mut bad = ConvexProgram::new(DVector::from_vec(vec![1.0]), vec![(0.0, 1.0)]);
        bad.add_linear(&[1.0], -0.5);
        assert_eq!(solve(&bad, &DVector::from_vec(vec![0.5])).status, SolveStatus::Infeasible);
    }

    #[test]
    fn stage_objectives_increase() {
        let n = 3;
        let c = DVector::from_vec(vec![0.3, -0.7, 1.1]);
        let mut prog = ConvexProgram::new(c, unit_box(n));
        prog.add_quad(QuadConstraint {
            p: DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 1.5]),
            q: DVector::from_vec(vec![0.1, 0.0, -0.2]),
            r: -0.8,
        });
        let sol = solve(&prog, &DVector::zeros(n));
        for w in sol.stage_objectives.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        let rep = feasibility_check(&prog, &sol.d, 1e-8);
        assert!(rep.feasible);
        assert!(rep.max_residual > -1e-8);
    }

    #[test]
    fn zero_objective_returns_feasible_start() {
        let prog = ConvexProgram::new(DVector::zeros(2), unit_box(2));
        let sol = solve(&prog, &DVector::from_vec(vec![0.2, -0.1]));
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn feasibility_report_cases() {
        let mut prog = ConvexProgram::new(DVector::zeros(2), unit_box(2));
        prog.add_linear(&[1.0, 1.0], 1.0);
        prog.add_linear(&[-1.0, 0.0], 0.5);
        prog.add_quad(QuadConstraint::coordinate_disk(2, 1, 0.0, 0.9));

        let inside = feasibility_check(&prog, &DVector::from_vec(vec![0.0, 0.0]), 0.0);
        assert!(inside.max_residual < 0.0 && inside.feasible);

        let face = feasibility_check(&prog, &DVector::from_vec(vec![0.5, 0.5]), 1e-12);
        assert!(face.linear_residuals[0].abs() < 1e-12 && face.feasible);

        let out = feasibility_check(&prog, &DVector::from_vec(vec![-0.8, 0.1]), 1e-12);
        assert_eq!(out.worst, Some(ConstraintRef::Linear(1)));
        assert!(!out.feasible);

        let out = feasibility_check(&prog, &DVector::from_vec(vec![0.0, -0.95]), 1e-12);
        assert_eq!(out.worst, Some(ConstraintRef::Quad(0)));

        let boxed = ConvexProgram::new(DVector::zeros(2), unit_box(2));
        let out = feasibility_check(&boxed, &DVector::from_vec(vec![-0.2, -1.5]), 1e-12);
        assert_eq!(out.worst, Some(ConstraintRef::Lower(1)));
    }
}
