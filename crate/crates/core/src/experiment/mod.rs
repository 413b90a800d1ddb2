//! Experiment harness: configuration, sweeps and CSV output.
//!
//! Every run returns its rows in sweep order with row invariants already
//! checked, so a violation surfaces as [`Error::InvariantViolation`].

mod config;
mod results;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{CommSection, ConfigFile, Experiment, OptimizerSection, Profile, Scheme, SensingSection, SweepSection};
pub use results::{
    check_rows, mse_tolerance, write_correlation, write_rows, CorrelationCell, ResultRow, RowStatus,
    CORRELATION_FORMAT, RESULTS_FORMAT,
};

use crate::comm::{rate_upper_bound_on, CommScenario, UserBatch};
use crate::error::{Error, Result};
use crate::geometry::{
    build_upa, perimeter_layout, sparse_upa_spacing, steering_vector, ArrayLayout, WaveVector2D,
};
use crate::optimizer::{
    audit_layout, initialize_crb_maximin, optimize_instantaneous, optimize_with, OptimizerReport, RateObjective,
};
use crate::sensing::{crb_closed_form, eta_lower_bound, mse_simulation, worst_case_crb, SensingSpec};
use crate::units::dbm_to_mw;

/// Boundary phases tried as extra starting layouts for the MA design.
const PERIMETER_PHASES: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

pub fn upa_dense(exp: &Experiment, n: usize) -> Result<ArrayLayout> {
    build_upa(n, exp.optimizer.min_distance, exp.region, exp.scenario.wavelength)
}

pub fn upa_sparse(exp: &Experiment, n: usize) -> Result<ArrayLayout> {
    build_upa(n, sparse_upa_spacing(n, &exp.region), exp.region, exp.scenario.wavelength)
}

/// CRB-maximin layout used to start Algorithm 2.
pub fn maximin_layout(exp: &Experiment, n: usize) -> Result<ArrayLayout> {
    initialize_crb_maximin(n, exp.region, exp.optimizer.min_distance, exp.scenario.wavelength)
}

fn spec_for(exp: &Experiment, n: usize, eta: f64) -> SensingSpec {
    SensingSpec {
        antennas: n,
        snapshots: exp.sensing.snapshots.max(n),
        eta,
        ..exp.sensing
    }
}

/// True when `eta` is attainable: above the aperture bound and met by the
/// maximin layout.
fn threshold_attainable(exp: &Experiment, spec: &SensingSpec, init: &ArrayLayout) -> bool {
    spec.eta >= eta_lower_bound(&exp.region, spec) && init.stats().min_term() >= spec.eta_bar()
}

fn feasible_for(exp: &Experiment, layout: &ArrayLayout, spec: &SensingSpec) -> bool {
    audit_layout(
        layout,
        spec.eta_bar(),
        exp.optimizer.min_distance,
        exp.optimizer.feasibility_tolerance,
    )
    .is_ok()
}

/// MA design at one threshold. Algorithm 2 is run from the maximin layout,
/// from `extra` starts and from the baseline and boundary layouts that meet
/// the constraints; the best result wins (first on ties).
/// Returns `None` when the threshold is not attainable.
pub fn design_ma(
    exp: &Experiment,
    objective: &RateObjective,
    spec: &SensingSpec,
    init: &ArrayLayout,
    extra: &[ArrayLayout],
) -> Result<Option<(ArrayLayout, OptimizerReport)>> {
    if !threshold_attainable(exp, spec, init) {
        return Ok(None);
    }
    let n = spec.antennas;
    let mut starts = vec![init.clone()];
    starts.extend(extra.iter().cloned());
    for layout in [upa_dense(exp, n), upa_sparse(exp, n)].into_iter().flatten() {
        starts.push(layout);
    }
    for phase in PERIMETER_PHASES {
        starts.push(perimeter_layout(n, exp.region, exp.scenario.wavelength, phase)?);
    }
    starts.retain(|s| feasible_for(exp, s, spec));
    let runs: Vec<Result<(ArrayLayout, OptimizerReport)>> = starts
        .par_iter()
        .map(|s| optimize_with(s, objective, spec, &exp.optimizer))
        .collect();
    let mut best: Option<(ArrayLayout, OptimizerReport)> = None;
    for run in runs {
        let (layout, report) = run?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| report.final_objective() > b.final_objective())
        {
            best = Some((layout, report));
        }
    }
    Ok(best)
}

fn head(batch: &UserBatch, count: usize) -> UserBatch {
    UserBatch {
        locations: batch.locations[..count.min(batch.len())].to_vec(),
    }
}

fn seconds(exp: &Experiment, since: Instant) -> Option<f64> {
    exp.timing.then(|| since.elapsed().as_secs_f64())
}

fn fill_crb(row: &mut ResultRow, layout: &ArrayLayout, spec: &SensingSpec) {
    if let Ok(c) = worst_case_crb(layout, spec) {
        row.crb_u = Some(c.u);
        row.crb_v = Some(c.v);
    }
}

fn fixed_row(
    exp: &Experiment,
    scheme: Scheme,
    sweep_value: f64,
    layout: &ArrayLayout,
    objective: &RateObjective,
    spec: &SensingSpec,
) -> ResultRow {
    let t = Instant::now();
    let mut row = ResultRow::new(scheme.name(), sweep_value, RowStatus::Ok);
    row.r_tilde = Some(objective.value(layout));
    row.upper_bound = Some(rate_upper_bound_on(objective.scenario(), layout.n(), objective.batch()));
    fill_crb(&mut row, layout, spec);
    row.wall_time = seconds(exp, t);
    row
}

/// Statistical and, if requested, instantaneous MA rows at one operating
/// point. The instantaneous design starts each realization from the
/// statistical layout.
fn ma_rows(
    exp: &Experiment,
    sweep_value: f64,
    objective: &RateObjective,
    spec: &SensingSpec,
    init: &ArrayLayout,
    extra: &[ArrayLayout],
) -> Result<(Vec<ResultRow>, Option<ArrayLayout>)> {
    let t = Instant::now();
    let n = spec.antennas;
    let Some((layout, report)) = design_ma(exp, objective, spec, init, extra)? else {
        let rows = [Scheme::MaStatistical, Scheme::MaInstantaneous]
            .into_iter()
            .filter(|s| exp.has(*s))
            .map(|s| ResultRow::new(s.name(), sweep_value, RowStatus::Infeasible))
            .collect();
        return Ok((rows, None));
    };
    let mut rows = Vec::new();
    if exp.has(Scheme::MaStatistical) {
        let mut row = ResultRow::new(Scheme::MaStatistical.name(), sweep_value, RowStatus::Ok);
        row.r_tilde = Some(report.final_objective());
        row.upper_bound = Some(rate_upper_bound_on(objective.scenario(), n, objective.batch()));
        row.iterations = Some(report.outer_iterations);
        fill_crb(&mut row, &layout, spec);
        row.wall_time = seconds(exp, t);
        check_design(exp, &layout, spec)?;
        rows.push(row);
    }
    if exp.has(Scheme::MaInstantaneous) {
        let t = Instant::now();
        let inst = optimize_instantaneous(
            &layout,
            objective,
            spec,
            &exp.optimizer,
            exp.instantaneous_realizations,
        )?;
        let subset = head(objective.batch(), inst.rates.len());
        let mut row = ResultRow::new(Scheme::MaInstantaneous.name(), sweep_value, RowStatus::Ok);
        row.r_tilde = Some(inst.mean_rate());
        row.upper_bound = Some(rate_upper_bound_on(objective.scenario(), n, &subset));
        row.iterations = Some(inst.mean_trace.len().saturating_sub(1));
        let (mut cu, mut cv) = (0.0f64, 0.0f64);
        for l in &inst.layouts {
            check_design(exp, l, spec)?;
            let c = worst_case_crb(l, spec)?;
            cu = cu.max(c.u);
            cv = cv.max(c.v);
        }
        row.crb_u = Some(cu);
        row.crb_v = Some(cv);
        row.wall_time = seconds(exp, t);
        rows.push(row);
    }
    Ok((rows, Some(layout)))
}

/// Every emitted MA layout must meet the threshold and the spacing.
fn check_design(exp: &Experiment, layout: &ArrayLayout, spec: &SensingSpec) -> Result<()> {
    if spec.eta < eta_lower_bound(&exp.region, spec) {
        return Err(Error::InvariantViolation(format!(
            "accepted threshold {:.6e} is below the attainable bound",
            spec.eta
        )));
    }
    let tol = exp.optimizer.feasibility_tolerance;
    audit_layout(layout, spec.eta_bar(), exp.optimizer.min_distance, tol).map_err(Error::InvariantViolation)?;
    let crb = worst_case_crb(layout, spec)?;
    if crb.max() > spec.eta * (1.0 + 1e-6) {
        return Err(Error::InvariantViolation(format!(
            "worst-case CRB {:.6e} exceeds threshold {:.6e}",
            crb.max(),
            spec.eta
        )));
    }
    Ok(())
}

/// Rate versus CRB threshold. Thresholds are processed from tight to loose
/// and each design also starts from the previous optimum, so the MA rate
/// cannot drop as the threshold is relaxed. Rows follow the configured order.
pub fn run_tradeoff(exp: &Experiment) -> Result<Vec<ResultRow>> {
    let n = exp.antennas;
    let objective = RateObjective::new(exp.scenario.clone())?;
    let etas = exp.eta_values();
    let init = maximin_layout(exp, n)?;

    let mut order: Vec<usize> = (0..etas.len()).collect();
    order.sort_by(|&a, &b| etas[a].total_cmp(&etas[b]));
    let mut ma: Vec<Vec<ResultRow>> = vec![Vec::new(); etas.len()];
    let mut previous: Option<ArrayLayout> = None;
    for &i in &order {
        let spec = spec_for(exp, n, etas[i]);
        let extra: Vec<ArrayLayout> = previous.iter().cloned().collect();
        let (rows, layout) = ma_rows(exp, etas[i], &objective, &spec, &init, &extra)?;
        ma[i] = rows;
        if layout.is_some() {
            previous = layout;
        }
    }

    let fixed = fixed_layouts(exp, n)?;
    let mut out = Vec::new();
    for (i, &eta) in etas.iter().enumerate() {
        out.append(&mut ma[i]);
        let spec = spec_for(exp, n, eta);
        for (scheme, layout) in &fixed {
            out.push(fixed_row(exp, *scheme, eta, layout, &objective, &spec));
        }
    }
    check_rows(&out)?;
    Ok(out)
}

fn fixed_layouts(exp: &Experiment, n: usize) -> Result<Vec<(Scheme, ArrayLayout)>> {
    let mut out = Vec::new();
    if exp.has(Scheme::UpaDense) {
        out.push((Scheme::UpaDense, upa_dense(exp, n)?));
    }
    if exp.has(Scheme::UpaSparse) {
        out.push((Scheme::UpaSparse, upa_sparse(exp, n)?));
    }
    Ok(out)
}

/// Layout of a scheme at the configured threshold, designed on the
/// configured scenario. `None` when the MA threshold is not attainable.
pub fn scheme_layout(exp: &Experiment, scheme: Scheme) -> Result<Option<ArrayLayout>> {
    let n = exp.antennas;
    match scheme {
        Scheme::UpaDense => upa_dense(exp, n).map(Some),
        Scheme::UpaSparse => upa_sparse(exp, n).map(Some),
        Scheme::MaStatistical => {
            let objective = RateObjective::new(exp.scenario.clone())?;
            let spec = spec_for(exp, n, exp.sensing.eta);
            let init = maximin_layout(exp, n)?;
            Ok(design_ma(exp, &objective, &spec, &init, &[])?.map(|(l, _)| l))
        }
        Scheme::MaInstantaneous => Err(Error::InvalidArgument(
            "the instantaneous design has one layout per realization".into(),
        )),
    }
}

/// Empirical MLE error against the CRB over the probing power sweep. All
/// points share one noise seed.
pub fn run_mse_sweep(exp: &Experiment) -> Result<Vec<ResultRow>> {
    let n = exp.antennas;
    let schemes: Vec<Scheme> = exp
        .baselines
        .iter()
        .copied()
        .filter(|s| *s != Scheme::MaInstantaneous)
        .collect();
    let mut layouts = Vec::new();
    for &s in &schemes {
        layouts.push(scheme_layout(exp, s)?);
    }
    let beta_power = exp.truth.beta.norm_sqr();
    let tol = mse_tolerance(exp.mse_trials);
    let mut out = Vec::new();
    for &dbm in &exp.mse_power_dbm {
        let spec = SensingSpec {
            probing_power_mw: dbm_to_mw(dbm),
            ..spec_for(exp, n, exp.sensing.eta)
        };
        for (scheme, layout) in schemes.iter().zip(&layouts) {
            let Some(layout) = layout else {
                out.push(ResultRow::new(scheme.name(), dbm, RowStatus::Infeasible));
                continue;
            };
            let t = Instant::now();
            let mut row = ResultRow::new(scheme.name(), dbm, RowStatus::Ok);
            let crb = crb_closed_form(layout, &spec, beta_power)?;
            let (mu, mv) = mse_simulation(layout, &exp.truth, &spec, exp.mse_trials, &exp.grid, exp.seed)?;
            row.crb_u = Some(crb.u);
            row.crb_v = Some(crb.v);
            row.mse_u = Some(mu);
            row.mse_v = Some(mv);
            row.mse_tolerance = Some(tol);
            row.wall_time = seconds(exp, t);
            out.push(row);
        }
    }
    check_rows(&out)?;
    Ok(out)
}

/// Rate versus number of users, on the first `K` configured zones. User
/// counts above the antenna count cannot be zero-forced and are marked
/// unsupported.
pub fn run_rate_vs_k(exp: &Experiment) -> Result<Vec<ResultRow>> {
    let n = exp.antennas;
    let spec = spec_for(exp, n, exp.sensing.eta);
    let init = maximin_layout(exp, n)?;
    let fixed = fixed_layouts(exp, n)?;
    let points: Vec<Result<Vec<ResultRow>>> = exp
        .users_sweep
        .par_iter()
        .map(|&k| {
            let kv = k as f64;
            if k > n {
                return Ok(exp
                    .baselines
                    .iter()
                    .map(|s| ResultRow::new(s.name(), kv, RowStatus::Unsupported))
                    .collect());
            }
            let scenario: CommScenario = exp.all_zones.with_users(k);
            let objective = RateObjective::new(scenario)?;
            let (mut rows, _) = ma_rows(exp, kv, &objective, &spec, &init, &[])?;
            for (scheme, layout) in &fixed {
                rows.push(fixed_row(exp, *scheme, kv, layout, &objective, &spec));
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for p in points {
        out.extend(p?);
    }
    check_rows(&out)?;
    Ok(out)
}

/// Grid coordinates over `[−1, 1]` with spacing `2/(resolution − 1)`,
/// shifted so that `anchor` is a node.
pub fn anchored_axis(anchor: f64, resolution: usize) -> Vec<f64> {
    let h = 2.0 / (resolution - 1) as f64;
    let lo = ((-1.0 - anchor) / h - 1e-9).ceil() as i64;
    let hi = ((1.0 - anchor) / h + 1e-9).floor() as i64;
    (lo..=hi).map(|k| if k == 0 { anchor } else { anchor + k as f64 * h }).collect()
}

/// `(1/N²)|α(a)ᴴα(b)|²`.
pub fn steering_correlation(layout: &ArrayLayout, a: WaveVector2D, b: WaveVector2D) -> f64 {
    let sa = steering_vector(layout, a);
    let sb = steering_vector(layout, b);
    let inner: num_complex::Complex64 = sa.iter().zip(&sb).map(|(x, y)| x.conj() * y).sum();
    let n = layout.n() as f64;
    inner.norm_sqr() / (n * n)
}

/// Steering-vector correlation towards the center of zone `zone_index`,
/// on a grid over `[−1, 1]²` that has the zone direction as a node. Cells
/// are ordered u-major.
pub fn emit_correlation_map(exp: &Experiment, layout: &ArrayLayout, zone_index: usize) -> Result<Vec<CorrelationCell>> {
    let zone = exp
        .all_zones
        .zones
        .get(zone_index)
        .ok_or_else(|| Error::InvalidArgument(format!("no zone {zone_index}")))?;
    let anchor = zone.center_direction();
    let us = anchored_axis(anchor.u, exp.correlation_resolution);
    let vs = anchored_axis(anchor.v, exp.correlation_resolution);
    let reference = steering_vector(layout, anchor);
    let n2 = (layout.n() * layout.n()) as f64;
    let cells: Vec<Vec<CorrelationCell>> = us
        .par_iter()
        .map(|&u| {
            vs.iter()
                .map(|&v| {
                    let s = steering_vector(layout, WaveVector2D::new(u, v));
                    let inner: num_complex::Complex64 = reference.iter().zip(&s).map(|(x, y)| x.conj() * y).sum();
                    CorrelationCell {
                        u,
                        v,
                        correlation: inner.norm_sqr() / n2,
                    }
                })
                .collect()
        })
        .collect();
    let cells: Vec<CorrelationCell> = cells.into_iter().flatten().collect();
    if let Some(c) = cells.iter().find(|c| !(c.correlation <= 1.0 + 1e-12 && c.correlation >= 0.0)) {
        return Err(Error::InvariantViolation(format!(
            "correlation {} at ({}, {}) outside [0, 1]",
            c.correlation, c.u, c.v
        )));
    }
    Ok(cells)
}

/// Per-iteration rate of Algorithm 2 from the maximin layout: the statistical
/// design over the full batch and the mean of per-realization designs over
/// the first realizations. `sweep_value` is the outer iteration index.
pub fn run_convergence(exp: &Experiment) -> Result<Vec<ResultRow>> {
    let n = exp.antennas;
    let objective = RateObjective::new(exp.scenario.clone())?;
    let spec = spec_for(exp, n, exp.sensing.eta);
    let init = maximin_layout(exp, n)?;
    let mut out = Vec::new();
    if !threshold_attainable(exp, &spec, &init) {
        for s in [Scheme::MaStatistical, Scheme::MaInstantaneous] {
            if exp.has(s) {
                out.push(ResultRow::new(s.name(), 0.0, RowStatus::Infeasible));
            }
        }
        return Ok(out);
    }
    let trace_rows = |scheme: Scheme, trace: &[f64], ub: f64| -> Vec<ResultRow> {
        trace
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let mut row = ResultRow::new(scheme.name(), i as f64, RowStatus::Ok);
                row.r_tilde = Some(r);
                row.upper_bound = Some(ub);
                row.iterations = Some(i);
                row
            })
            .collect()
    };
    if exp.has(Scheme::MaStatistical) {
        let (layout, report) = optimize_with(&init, &objective, &spec, &exp.optimizer)?;
        check_trace(&report.outer_trace)?;
        check_design(exp, &layout, &spec)?;
        let ub = rate_upper_bound_on(&exp.scenario, n, objective.batch());
        out.extend(trace_rows(Scheme::MaStatistical, &report.outer_trace, ub));
    }
    if exp.has(Scheme::MaInstantaneous) {
        let inst = optimize_instantaneous(&init, &objective, &spec, &exp.optimizer, exp.instantaneous_realizations)?;
        check_trace(&inst.mean_trace)?;
        let subset = head(objective.batch(), inst.rates.len());
        let ub = rate_upper_bound_on(&exp.scenario, n, &subset);
        out.extend(trace_rows(Scheme::MaInstantaneous, &inst.mean_trace, ub));
    }
    check_rows(&out)?;
    Ok(out)
}

fn check_trace(trace: &[f64]) -> Result<()> {
    for w in trace.windows(2) {
        if w[1] < w[0] - 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "objective decreased from {} to {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}
