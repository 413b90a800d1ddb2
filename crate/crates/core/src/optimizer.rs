//! Antenna position optimization: feasible-direction ascent per axis, outer
//! alternation between the axes, and the CRB maximin initializer.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::comm::{expected_min_rate_on, CommScenario, UserBatch};
use crate::error::{Error, Result};
use crate::geometry::{
    apply_b, build_upa, pairwise_min, perimeter_layout, sparse_upa_spacing, var_cov, ArrayLayout, Axis, MovementRegion,
};
use crate::qcqp::{solve, ConvexProgram, QuadConstraint, SolveStatus};
use crate::sensing::{eta_lower_bound, SensingSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Outer convergence threshold on the rate increase (bits/s/Hz).
    pub eps1: f64,
    /// Inner (per-axis) convergence threshold.
    pub eps2: f64,
    /// Forward-difference step ξ in meters.
    pub fd_step: f64,
    pub line_search_points: usize,
    pub max_inner: usize,
    pub max_outer: usize,
    pub feasibility_tolerance: f64,
    /// Minimum inter-antenna spacing `D₀` in meters.
    pub min_distance: f64,
}

impl OptimizerConfig {
    pub fn for_wavelength(wavelength: f64) -> Self {
        Self {
            eps1: 1e-3,
            eps2: 1e-3,
            fd_step: 1e-4 * wavelength,
            line_search_points: 51,
            max_inner: 20,
            max_outer: 10,
            feasibility_tolerance: 1e-9,
            min_distance: wavelength / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.eps1, self.eps2, self.fd_step, self.feasibility_tolerance, self.min_distance];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("optimizer thresholds and steps must be positive".into()));
        }
        if self.line_search_points < 2 {
            return Err(Error::InvalidArgument("line search needs at least 2 points".into()));
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(Error::InvalidArgument("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIter,
    InfeasibleStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    /// Rate at the start and after every accepted inner step.
    pub objective_trace: Vec<f64>,
    /// Rate at the start and after every outer iteration.
    pub outer_trace: Vec<f64>,
    pub iterate_trace: Vec<ArrayLayout>,
    /// `(term_y − η̄, term_z − η̄)` for every iterate.
    pub crb_slack: Vec<(f64, f64)>,
    pub min_distance_trace: Vec<f64>,
    pub termination: Termination,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
}

impl OptimizerReport {
    fn start(layout: &ArrayLayout, value: f64, eta_bar: f64) -> Self {
        let mut r = Self {
            objective_trace: Vec::new(),
            outer_trace: vec![value],
            iterate_trace: Vec::new(),
            crb_slack: Vec::new(),
            min_distance_trace: Vec::new(),
            termination: Termination::Converged,
            inner_iterations: 0,
            outer_iterations: 0,
        };
        r.record(layout, value, eta_bar);
        r
    }

    fn record(&mut self, layout: &ArrayLayout, value: f64, eta_bar: f64) {
        let st = layout.stats();
        self.objective_trace.push(value);
        self.crb_slack.push((st.term_y() - eta_bar, st.term_z() - eta_bar));
        self.min_distance_trace
            .push(pairwise_min(layout.y(), layout.z()).unwrap_or(f64::INFINITY));
        self.iterate_trace.push(layout.clone());
    }

    /// Appends an axis pass, skipping its duplicated starting entry.
    fn extend(&mut self, pass: OptimizerReport) {
        self.objective_trace.extend_from_slice(&pass.objective_trace[1..]);
        self.crb_slack.extend_from_slice(&pass.crb_slack[1..]);
        self.min_distance_trace.extend_from_slice(&pass.min_distance_trace[1..]);
        self.iterate_trace.extend(pass.iterate_trace.into_iter().skip(1));
        self.inner_iterations += pass.inner_iterations;
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("report always holds the start")
    }
}

/// Monte-Carlo rate on a fixed batch of user locations.
#[derive(Debug, Clone, PartialEq)]
pub struct RateObjective {
    scenario: CommScenario,
    batch: UserBatch,
}

impl RateObjective {
    pub fn new(scenario: CommScenario) -> Result<Self> {
        scenario.validate()?;
        let batch = scenario.sample_batch();
        Ok(Self { scenario, batch })
    }

    pub fn with_batch(scenario: CommScenario, batch: UserBatch) -> Result<Self> {
        scenario.validate()?;
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty user batch".into()));
        }
        Ok(Self { scenario, batch })
    }

    pub fn scenario(&self) -> &CommScenario {
        &self.scenario
    }

    pub fn batch(&self) -> &UserBatch {
        &self.batch
    }

    pub fn value(&self, layout: &ArrayLayout) -> f64 {
        expected_min_rate_on(layout, &self.scenario, &self.batch)
    }

    /// Objective restricted to realization `q`.
    pub fn single(&self, q: usize) -> Self {
        Self {
            scenario: self.scenario.clone(),
            batch: self.batch.single(q),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn centering_matrix(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |r, c| if r == c { 1.0 / nf } else { 0.0 } - 1.0 / (nf * nf))
}

/// Convex inner approximations of the two variance-term constraints when
/// the axis `x` moves and the other axis `w` is fixed, with `d` the new `x`:
///
/// * own axis: `(2xᵖᵀBd − xᵖᵀBxᵖ)·wᵀBw − (dᵀBw)² ≥ η̄·wᵀBw`
/// * other axis: `(2xᵖᵀBd − xᵖᵀBxᵖ)·wᵀBw − (dᵀBw)² ≥ η̄·dᵀBd`
///
/// both returned in `dᵀPd + qᵀd + r ≤ 0` form.
pub fn linearized_crb_constraints(x_p: &[f64], w: &[f64], eta_bar: f64) -> Result<[QuadConstraint; 2]> {
    let n = x_p.len();
    let bw = DVector::from_vec(apply_b(w));
    let wbw = dot(w, bw.as_slice());
    if !(wbw > 0.0) {
        return Err(Error::DegenerateAxis);
    }
    let bx = DVector::from_vec(apply_b(x_p));
    let xbx = dot(x_p, bx.as_slice());
    let rank_one = &bw * bw.transpose();
    let q = &bx * (-2.0 * wbw);
    let own = QuadConstraint {
        p: rank_one.clone(),
        q: q.clone(),
        r: wbw * (xbx + eta_bar),
    };
    let other = QuadConstraint {
        p: rank_one + centering_matrix(n) * eta_bar,
        q,
        r: wbw * xbx,
    };
    Ok([own, other])
}

/// Exact variance-term constraints at `x`, in the same `≤ 0` convention:
/// `(η̄·wᵀBw − det, η̄·xᵀBx − det)` with `det = xᵀBx·wᵀBw − (xᵀBw)²`.
pub fn exact_crb_residuals(x: &[f64], w: &[f64], eta_bar: f64) -> (f64, f64) {
    let bw = apply_b(w);
    let wbw = dot(w, &bw);
    let xbx = dot(x, &apply_b(x));
    let xbw = dot(x, &bw);
    let det = xbx * wbw - xbw * xbw;
    (eta_bar * wbw - det, eta_bar * xbx - det)
}

/// Row of the pair `(m, n)`, `1 ≤ n < m ≤ N`, in the min-distance system.
pub fn pair_row_index(antennas: usize, m: usize, n: usize) -> usize {
    (2 * antennas - n) * (n - 1) / 2 + m - n
}

/// Linear minorant of the pairwise distances along `axis`: `D·d ≥ g`, one row
/// per pair ordered by [`pair_row_index`].
pub fn min_distance_linearization(
    layout_p: &ArrayLayout,
    axis: Axis,
    min_distance: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let x = layout_p.axis(axis);
    let w = layout_p.axis(axis.other());
    let n = x.len();
    let pairs = n * (n - 1) / 2;
    let mut d = DMatrix::zeros(pairs, n);
    let mut g = DVector::zeros(pairs);
    for a in 0..n {
        for b in a + 1..n {
            let dist = (x[a] - x[b]).hypot(w[a] - w[b]);
            if dist == 0.0 {
                return Err(Error::LinearizationUndefined(a, b));
            }
            let row = pair_row_index(n, b + 1, a + 1) - 1;
            let dx = x[a] - x[b];
            d[(row, a)] = dx;
            d[(row, b)] = -dx;
            g[row] = min_distance * dist - (w[a] - w[b]).powi(2);
        }
    }
    Ok((d, g))
}

/// Forward-difference gradient of the rate with respect to one axis.
pub fn objective_gradient_fd(objective: &RateObjective, layout: &ArrayLayout, axis: Axis, xi: f64) -> Vec<f64> {
    let base = objective.value(layout);
    let x = layout.axis(axis).to_vec();
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut v = x.clone();
            v[i] += xi;
            (objective.value(&layout.with_axis_unchecked(axis, v)) - base) / xi
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub d: Vec<f64>,
    /// The subproblem produced no ascent: `d` equals the expansion point.
    pub null_step: bool,
    pub status: SolveStatus,
}

/// Bounds, region rows and min-distance rows shared by every direction
/// subproblem.
fn direction_program(
    c: DVector<f64>,
    layout_p: &ArrayLayout,
    axis: Axis,
    quads: Vec<QuadConstraint>,
    min_distance: f64,
) -> Result<ConvexProgram> {
    let n = layout_p.n();
    let w = layout_p.axis(axis.other());
    let region = layout_p.region();
    let mut bounds = Vec::with_capacity(n);
    let mut region_rows = Vec::new();
    for i in 0..n {
        let (lo, hi) = region.slice(axis, w[i]).ok_or_else(|| {
            Error::InfeasibleLayout(format!("antenna {i} lies outside the region on the fixed axis"))
        })?;
        match region {
            MovementRegion::Rectangle { .. } => bounds.push((lo, hi)),
            MovementRegion::Disk { .. } => {
                bounds.push((f64::NEG_INFINITY, f64::INFINITY));
                region_rows.push(QuadConstraint::coordinate_disk(n, i, 0.5 * (lo + hi), 0.5 * (hi - lo)));
            }
        }
    }
    let mut prog = ConvexProgram::new(c, bounds);
    for q in quads.into_iter().chain(region_rows) {
        prog.add_quad(q);
    }
    let (dm, g) = min_distance_linearization(layout_p, axis, min_distance)?;
    let mut row = vec![0.0; n];
    for r in 0..dm.nrows() {
        let mut any = false;
        for j in 0..n {
            row[j] = -dm[(r, j)];
            any |= row[j] != 0.0;
        }
        // Pairs separated only along the fixed axis give constant rows.
        if !any && g[r] <= 0.0 {
            continue;
        }
        prog.add_linear(&row, -g[r]);
    }
    Ok(prog)
}

fn feasible_direction(
    grad: &[f64],
    layout_p: &ArrayLayout,
    axis: Axis,
    quads: Vec<QuadConstraint>,
    min_distance: f64,
) -> Result<Direction> {
    let x_p = layout_p.axis(axis).to_vec();
    let null = |status| Direction {
        d: x_p.clone(),
        null_step: true,
        status,
    };
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Ok(null(SolveStatus::Optimal));
    }
    let c = DVector::from_iterator(grad.len(), grad.iter().map(|g| g / norm));
    let prog = direction_program(c.clone(), layout_p, axis, quads, min_distance)?;
    let sol = solve(&prog, &DVector::from_column_slice(&x_p));
    if sol.status == SolveStatus::Infeasible {
        return Ok(null(sol.status));
    }
    let ascent: f64 = (0..x_p.len()).map(|i| c[i] * (sol.d[i] - x_p[i])).sum();
    if !(ascent > 0.0) {
        return Ok(null(sol.status));
    }
    Ok(Direction {
        d: sol.d.as_slice().to_vec(),
        null_step: false,
        status: sol.status,
    })
}

/// Ascent direction on one axis: maximizes `gradᵀd` over the linearized CRB
/// constraints, the region and the min-distance rows.
pub fn direction_subproblem(
    grad: &[f64],
    layout_p: &ArrayLayout,
    axis: Axis,
    eta_bar: f64,
    min_distance: f64,
) -> Result<Direction> {
    let x_p = layout_p.axis(axis);
    let w = layout_p.axis(axis.other());
    let quads = linearized_crb_constraints(x_p, w, eta_bar)?.to_vec();
    feasible_direction(grad, layout_p, axis, quads, min_distance)
}

/// Grid search of `f(xᵖ + τ(d − xᵖ))` over `τ ∈ {0, 1/(M−1), …, 1}`; ties go
/// to the smallest `τ`.
fn grid_line_search<F>(x_p: &[f64], d: &[f64], points: usize, f: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|i| {
            let tau = i as f64 / (points - 1) as f64;
            let x: Vec<f64> = x_p.iter().zip(d).map(|(a, b)| a + tau * (b - a)).collect();
            f(&x)
        })
        .collect();
    let mut best = (0.0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i as f64 / (points - 1) as f64, v);
        }
    }
    best
}

/// Step size along `d` maximizing the rate; returns `(τ, R̃)`.
pub fn line_search(
    objective: &RateObjective,
    layout_p: &ArrayLayout,
    axis: Axis,
    d: &[f64],
    points: usize,
) -> (f64, f64) {
    grid_line_search(layout_p.axis(axis), d, points, |x| {
        objective.value(&layout_p.with_axis_unchecked(axis, x.to_vec()))
    })
}

fn step_to(x_p: &[f64], d: &[f64], tau: f64) -> Vec<f64> {
    x_p.iter().zip(d).map(|(a, b)| a + tau * (b - a)).collect()
}

/// Checks region, spacing and CRB feasibility, describing the first failure.
pub fn audit_layout(layout: &ArrayLayout, eta_bar: f64, min_distance: f64, tol: f64) -> std::result::Result<(), String> {
    let dmin = pairwise_min(layout.y(), layout.z()).map_err(|e| e.to_string())?;
    if dmin < min_distance - tol {
        return Err(format!("minimum spacing {dmin:.6e} m below {min_distance:.6e} m"));
    }
    let st = layout.stats();
    for (name, term) in [("y", st.term_y()), ("z", st.term_z())] {
        if term < eta_bar * (1.0 - tol) {
            return Err(format!("{name} variance term {term:.6e} below threshold {eta_bar:.6e}"));
        }
    }
    Ok(())
}

fn check_antennas(layout: &ArrayLayout, spec: &SensingSpec) -> Result<()> {
    if spec.antennas != layout.n() {
        return Err(Error::InvalidArgument(format!(
            "sensing spec is for N={} but the layout has {} antennas",
            spec.antennas,
            layout.n()
        )));
    }
    Ok(())
}

/// Feasible-direction ascent of the rate over one axis with the other fixed.
pub fn optimize_axis(
    layout: &ArrayLayout,
    objective: &RateObjective,
    spec: &SensingSpec,
    config: &OptimizerConfig,
    axis: Axis,
) -> Result<(ArrayLayout, OptimizerReport)> {
    config.validate()?;
    check_antennas(layout, spec)?;
    let eta_bar = spec.eta_bar();
    let mut current = layout.clone();
    let mut value = objective.value(&current);
    let mut report = OptimizerReport::start(&current, value, eta_bar);
    if audit_layout(&current, eta_bar, config.min_distance, config.feasibility_tolerance).is_err() {
        report.termination = Termination::InfeasibleStart;
        return Ok((current, report));
    }
    report.termination = Termination::MaxIter;
    for _ in 0..config.max_inner {
        let grad = objective_gradient_fd(objective, &current, axis, config.fd_step);
        let dir = direction_subproblem(&grad, &current, axis, eta_bar, config.min_distance)?;
        if dir.null_step {
            report.termination = Termination::Converged;
            break;
        }
        let (tau, _) = line_search(objective, &current, axis, &dir.d, config.line_search_points);
        if tau == 0.0 {
            report.termination = Termination::Converged;
            break;
        }
        let next = current.with_axis_projected(axis, step_to(current.axis(axis), &dir.d, tau))?;
        let next_value = objective.value(&next);
        if next_value < value {
            report.termination = Termination::Converged;
            break;
        }
        let increase = next_value - value;
        current = next;
        value = next_value;
        report.inner_iterations += 1;
        report.record(&current, value, eta_bar);
        if increase < config.eps2 {
            report.termination = Termination::Converged;
            break;
        }
    }
    report.outer_trace = vec![report.objective_trace[0], value];
    Ok((current, report))
}

/// Alternates y- and z-axis passes until the rate gain of a full pass drops
/// below `eps1` or `max_outer` passes have run.
pub fn optimize_with(
    layout0: &ArrayLayout,
    objective: &RateObjective,
    spec: &SensingSpec,
    config: &OptimizerConfig,
) -> Result<(ArrayLayout, OptimizerReport)> {
    config.validate()?;
    check_antennas(layout0, spec)?;
    let eta_bar = spec.eta_bar();
    let mut current = layout0.clone();
    let mut value = objective.value(&current);
    let mut report = OptimizerReport::start(&current, value, eta_bar);
    if audit_layout(&current, eta_bar, config.min_distance, config.feasibility_tolerance).is_err() {
        report.termination = Termination::InfeasibleStart;
        return Ok((current, report));
    }
    report.termination = Termination::MaxIter;
    for _ in 0..config.max_outer {
        let start = value;
        for axis in [Axis::Y, Axis::Z] {
            let (next, pass) = optimize_axis(&current, objective, spec, config, axis)?;
            if pass.termination == Termination::InfeasibleStart {
                return Err(Error::InvariantViolation("axis pass started from an infeasible iterate".into()));
            }
            value = pass.final_objective();
            current = next;
            report.extend(pass);
        }
        report.outer_iterations += 1;
        report.outer_trace.push(value);
        if value - start < config.eps1 {
            report.termination = Termination::Converged;
            break;
        }
    }
    Ok((current, report))
}

/// [`optimize_with`] on a batch drawn from the scenario's seed.
pub fn optimize(
    layout0: &ArrayLayout,
    scenario: &CommScenario,
    spec: &SensingSpec,
    config: &OptimizerConfig,
) -> Result<(ArrayLayout, OptimizerReport)> {
    optimize_with(layout0, &RateObjective::new(scenario.clone())?, spec, config)
}

/// Per-realization optimization: Algorithm 2 run on each realization of the
/// batch separately.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantaneousReport {
    /// Optimized minimum rate of each realization.
    pub rates: Vec<f64>,
    /// Mean over realizations of the outer trace, padded with final values.
    pub mean_trace: Vec<f64>,
    pub layouts: Vec<ArrayLayout>,
}

impl InstantaneousReport {
    pub fn mean_rate(&self) -> f64 {
        self.rates.iter().sum::<f64>() / self.rates.len() as f64
    }
}

pub fn optimize_instantaneous(
    layout0: &ArrayLayout,
    objective: &RateObjective,
    spec: &SensingSpec,
    config: &OptimizerConfig,
    realizations: usize,
) -> Result<InstantaneousReport> {
    let count = realizations.min(objective.batch().len());
    let runs: Vec<Result<(ArrayLayout, OptimizerReport)>> = (0..count)
        .into_par_iter()
        .map(|q| optimize_with(layout0, &objective.single(q), spec, config))
        .collect();
    let mut rates = Vec::with_capacity(count);
    let mut layouts = Vec::with_capacity(count);
    let mut traces = Vec::with_capacity(count);
    for run in runs {
        let (layout, report) = run?;
        rates.push(report.final_objective());
        layouts.push(layout);
        traces.push(report.outer_trace);
    }
    let len = traces.iter().map(Vec::len).max().unwrap_or(0);
    let mean_trace = (0..len)
        .map(|i| {
            traces
                .iter()
                .map(|t| t[i.min(t.len() - 1)])
                .sum::<f64>()
                / count as f64
        })
        .collect();
    Ok(InstantaneousReport {
        rates,
        mean_trace,
        layouts,
    })
}

/// Relative slack left on the non-active variance term during maximin steps.
const MAXIMIN_SLACK: f64 = 1e-6;
const MAXIMIN_CYCLES: usize = 200;
const MAXIMIN_INNER: usize = 20;

/// Gradients of `(term of x's axis, term of w's axis)` with respect to `x`.
fn term_gradients(x: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let bx = apply_b(x);
    let bw = apply_b(w);
    let xbx = dot(x, &bx);
    let wbw = dot(w, &bw);
    let xbw = dot(x, &bw);
    let own = bx.iter().zip(&bw).map(|(a, b)| 2.0 * (a - xbw / wbw * b)).collect();
    let cross = bx
        .iter()
        .zip(&bw)
        .map(|(a, b)| -2.0 * xbw / xbx * b + 2.0 * xbw * xbw / (xbx * xbx) * a)
        .collect();
    (own, cross)
}

/// Inner approximation of `term_w(x) ≥ t` where `term_w = wᵀBw − (xᵀBw)²/xᵀBx`:
/// `(wᵀBw − t)(2xᵖᵀBd − xᵖᵀBxᵖ) − (dᵀBw)² ≥ 0`.
fn cross_term_constraint(x_p: &[f64], w: &[f64], t: f64) -> QuadConstraint {
    let bw = DVector::from_vec(apply_b(w));
    let bx = DVector::from_vec(apply_b(x_p));
    let a = dot(w, bw.as_slice()) - t;
    QuadConstraint {
        p: &bw * bw.transpose(),
        q: bx.clone() * (-2.0 * a),
        r: a * dot(x_p, bx.as_slice()),
    }
}

/// Inner approximation of `term_x(x) ≥ t`: the own-axis constraint of
/// [`linearized_crb_constraints`] with threshold `t`.
fn own_term_constraint(x_p: &[f64], w: &[f64], t: f64) -> Result<QuadConstraint> {
    let [own, _] = linearized_crb_constraints(x_p, w, t)?;
    Ok(own)
}

/// Layout maximizing `min(term_y, term_z)` (hence minimizing the larger
/// worst-case CRB). Feasible-direction steps alternate between the axes,
/// started from the sparse UPA and from even spreads along the boundary;
/// the better result is kept.
pub fn initialize_crb_maximin(
    n: usize,
    region: MovementRegion,
    min_distance: f64,
    wavelength: f64,
) -> Result<ArrayLayout> {
    region.validate()?;
    let mut starts = Vec::new();
    let spacing = sparse_upa_spacing(n, &region);
    if spacing >= min_distance {
        starts.push(build_upa(n, spacing, region, wavelength)?);
    }
    for phase in [0.0, 0.5] {
        let ring = perimeter_layout(n, region, wavelength, phase)?;
        if pairwise_min(ring.y(), ring.z())? >= min_distance {
            starts.push(ring);
        }
    }
    if starts.is_empty() {
        return Err(Error::InfeasibleLayout(format!(
            "no starting layout holds {n} antennas at spacing {min_distance:.6e} m"
        )));
    }
    let mut best: Option<ArrayLayout> = None;
    for start in starts {
        let layout = maximin_ascent(start, min_distance)?;
        if best
            .as_ref()
            .is_none_or(|b| layout.stats().min_term() > b.stats().min_term())
        {
            best = Some(layout);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Maximin objective with a vanishing weight on the larger term, so that a
/// step raising only the larger term of a tied pair still counts as progress.
fn maximin_key(st: crate::geometry::VarCov) -> f64 {
    let (a, b) = (st.term_y(), st.term_z());
    a.min(b) + 1e-9 * a.max(b)
}

fn maximin_ascent(mut layout: ArrayLayout, min_distance: f64) -> Result<ArrayLayout> {
    let mut key = maximin_key(layout.stats());
    for _ in 0..MAXIMIN_CYCLES {
        let cycle_start = key;
        for axis in [Axis::Y, Axis::Z] {
            for _ in 0..MAXIMIN_INNER {
                let x_p = layout.axis(axis).to_vec();
                let w = layout.axis(axis.other()).to_vec();
                let st = layout.stats();
                let t = (1.0 - MAXIMIN_SLACK) * st.min_term();
                let (g_own, g_cross) = term_gradients(&x_p, &w);
                // Push the smaller term, keep the other above the slackened minimum.
                let (grad, keep) = if st.term(axis) <= st.term(axis.other()) {
                    (g_own, cross_term_constraint(&x_p, &w, t))
                } else {
                    (g_cross, own_term_constraint(&x_p, &w, t)?)
                };
                let dir = feasible_direction(&grad, &layout, axis, vec![keep], min_distance)?;
                if dir.null_step {
                    break;
                }
                let (tau, best) = grid_line_search(&x_p, &dir.d, 51, |x| match axis {
                    Axis::Y => maximin_key(var_cov(x, layout.z())),
                    Axis::Z => maximin_key(var_cov(layout.y(), x)),
                });
                if tau == 0.0 || best <= key * (1.0 + 1e-12) {
                    break;
                }
                layout = layout.with_axis_projected(axis, step_to(&x_p, &dir.d, tau))?;
                key = maximin_key(layout.stats());
            }
        }
        if key <= cycle_start * (1.0 + 1e-12) {
            break;
        }
    }
    Ok(layout)
}

/// Initial layout for the given sensing threshold: checks the threshold
/// against the aperture bound and against the maximin layout.
pub fn initialize_for(region: MovementRegion, spec: &SensingSpec, min_distance: f64) -> Result<ArrayLayout> {
    spec.validate()?;
    let lower = eta_lower_bound(&region, spec);
    if spec.eta < lower {
        return Err(Error::InfeasibleThreshold(format!(
            "η = {:.6e} is below the attainable bound {lower:.6e}",
            spec.eta
        )));
    }
    let layout = initialize_crb_maximin(spec.antennas, region, min_distance, spec.wavelength)?;
    let achieved = layout.stats().min_term();
    if achieved < spec.eta_bar() {
        return Err(Error::InfeasibleThreshold(format!(
            "best variance term {achieved:.6e} m² is below the required {:.6e} m²",
            spec.eta_bar()
        )));
    }
    Ok(layout)
}
