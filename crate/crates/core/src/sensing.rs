//! Monostatic sensing: probing waveform, echo model, grid maximum-likelihood
//! angle estimation and the Cramér-Rao bound.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{steering_vector, ArrayLayout, MovementRegion, WaveVector2D};
use crate::ComplexMatrix;

/// Relative threshold on `var(y)var(z) − cov²` below which the array is
/// considered colinear.
const COLINEAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingSpec {
    pub antennas: usize,
    /// Probing power `Pˢ` in milliwatts.
    pub probing_power_mw: f64,
    pub snapshots: usize,
    /// Worst-case channel power, substituted for `|β|²`.
    pub beta_tilde: f64,
    pub noise_mw: f64,
    pub wavelength: f64,
    /// Worst-case CRB threshold `η`.
    pub eta: f64,
}

impl SensingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snapshots < self.antennas {
            return Err(Error::InvalidWaveform(format!(
                "need T ≥ N, got T={} N={}",
                self.snapshots, self.antennas
            )));
        }
        let positive = [self.probing_power_mw, self.beta_tilde, self.noise_mw, self.wavelength, self.eta];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(
                "sensing powers, wavelength and threshold must be positive".into(),
            ));
        }
        if self.antennas == 0 {
            return Err(Error::InvalidArgument("need at least one antenna".into()));
        }
        Ok(())
    }

    /// CRB numerator for a given channel power `|β|²`.
    pub fn crb_scale(&self, beta_power: f64) -> f64 {
        self.noise_mw * self.wavelength * self.wavelength
            / (16.0
                * PI
                * PI
                * self.probing_power_mw
                * self.snapshots as f64
                * self.antennas as f64
                * beta_power)
    }

    /// `ζ`: the worst-case CRB numerator.
    pub fn zeta(&self) -> f64 {
        self.crb_scale(self.beta_tilde)
    }

    /// `η̄ = ζ/η`, the variance-form threshold in square meters.
    pub fn eta_bar(&self) -> f64 {
        self.zeta() / self.eta
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingTruth {
    pub chi: WaveVector2D,
    pub beta: Complex64,
}

/// Omnidirectional probing matrix: `S[n,t] = √(Pˢ/N)·exp(j2π·t·n/T)`.
pub fn probing_matrix(n: usize, t: usize, probing_power_mw: f64) -> Result<ComplexMatrix> {
    if n == 0 || t < n {
        return Err(Error::InvalidWaveform(format!("need 1 ≤ N ≤ T, got N={n} T={t}")));
    }
    let amp = (probing_power_mw / n as f64).sqrt();
    Ok(DMatrix::from_fn(n, t, |row, col| {
        Complex64::from_polar(amp, 2.0 * PI * ((row * col) % t) as f64 / t as f64)
    }))
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    Complex64::new(
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Received echo `Y = β·α(χ)α(χ)ᵀ·S + Z`.
pub fn synthesize_echo<R: Rng + ?Sized>(
    layout: &ArrayLayout,
    truth: &SensingTruth,
    spec: &SensingSpec,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let s = probing_matrix(layout.n(), spec.snapshots, spec.probing_power_mw)?;
    Ok(echo_with(layout, truth, &s, spec.noise_mw, rng))
}

fn echo_with<R: Rng + ?Sized>(
    layout: &ArrayLayout,
    truth: &SensingTruth,
    s: &ComplexMatrix,
    noise_mw: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let n = layout.n();
    let alpha = nalgebra::DVector::from_vec(steering_vector(layout, truth.chi));
    // αᵀS as a row, then the rank-one product.
    let alpha_t_s = s.transpose() * &alpha;
    let mut y = DMatrix::from_fn(n, s.ncols(), |r, c| truth.beta * alpha[r] * alpha_t_s[c]);
    if noise_mw > 0.0 {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, noise_mw);
        }
    }
    y
}

/// Grid used by the maximum-likelihood search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per axis of the coarse uniform grid over `[−1, 1]`.
    pub coarse_points: usize,
    pub refine_stages: usize,
    /// Each refinement divides the step by this factor and scans ±1 previous step.
    pub refine_factor: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            coarse_points: 201,
            refine_stages: 2,
            refine_factor: 10,
        }
    }
}

impl GridSpec {
    pub fn coarse_step(&self) -> f64 {
        2.0 / (self.coarse_points - 1) as f64
    }

    /// Spacing of the finest refinement grid.
    pub fn resolution(&self) -> f64 {
        self.coarse_step() / (self.refine_factor as f64).powi(self.refine_stages as i32)
    }
}

/// Likelihood surface `|α(χ̄)ᵀ M α(χ̄)|²` with `M = S·Yᴴ`.
pub fn mle_objective(layout: &ArrayLayout, m: &ComplexMatrix, chi: WaveVector2D) -> f64 {
    let alpha = nalgebra::DVector::from_vec(steering_vector(layout, chi));
    let ma = m * &alpha;
    (alpha.transpose() * ma)[(0, 0)].norm_sqr()
}

fn axis_phasors(coord: &[f64], values: &[f64], k: f64) -> Vec<Vec<Complex64>> {
    values
        .iter()
        .map(|&w| coord.iter().map(|&c| Complex64::from_polar(1.0, k * w * c)).collect())
        .collect()
}

/// Exhaustive search over the product grid `us × vs`; ties go to the lowest
/// flat index (u-major).
fn grid_argmax(layout: &ArrayLayout, m: &ComplexMatrix, us: &[f64], vs: &[f64]) -> (usize, usize) {
    let k = 2.0 * PI / layout.wavelength();
    let n = layout.n();
    let ey = axis_phasors(layout.y(), us, k);
    let ez = axis_phasors(layout.z(), vs, k);
    let row_best: Vec<(f64, usize)> = ey
        .par_iter()
        .map(|py| {
            let mut alpha = vec![Complex64::new(0.0, 0.0); n];
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (iv, pz) in ez.iter().enumerate() {
                for i in 0..n {
                    alpha[i] = py[i] * pz[i];
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    let mut row = Complex64::new(0.0, 0.0);
                    for c in 0..n {
                        row += m[(r, c)] * alpha[c];
                    }
                    acc += alpha[r] * row;
                }
                let val = acc.norm_sqr();
                if val > best.0 {
                    best = (val, iv);
                }
            }
            best
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (iu, &(val, iv)) in row_best.iter().enumerate() {
        if val > best.0 {
            best = (val, iu, iv);
        }
    }
    (best.1, best.2)
}

fn refine_axis(center: f64, step: f64, half: usize) -> Vec<f64> {
    (0..=2 * half)
        .map(|i| center + (i as f64 - half as f64) * step)
        .filter(|w| w.abs() <= 1.0 + 1e-12)
        .collect()
}

/// Maximum-likelihood angle estimate: coarse grid scan then local refinement.
pub fn mle_estimate(layout: &ArrayLayout, s: &ComplexMatrix, y: &ComplexMatrix, grid: &GridSpec) -> WaveVector2D {
    let m = s * y.adjoint();
    mle_from_moment(layout, &m, grid)
}

fn mle_from_moment(layout: &ArrayLayout, m: &ComplexMatrix, grid: &GridSpec) -> WaveVector2D {
    let mut step = grid.coarse_step();
    let coarse: Vec<f64> = (0..grid.coarse_points).map(|i| -1.0 + i as f64 * step).collect();
    let (iu, iv) = grid_argmax(layout, m, &coarse, &coarse);
    let (mut u, mut v) = (coarse[iu], coarse[iv]);
    for _ in 0..grid.refine_stages {
        let fine = step / grid.refine_factor as f64;
        let us = refine_axis(u, fine, grid.refine_factor);
        let vs = refine_axis(v, fine, grid.refine_factor);
        let (iu, iv) = grid_argmax(layout, m, &us, &vs);
        u = us[iu];
        v = vs[iv];
        step = fine;
    }
    WaveVector2D::new(u, v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crb {
    pub u: f64,
    pub v: f64,
}

impl Crb {
    pub fn max(&self) -> f64 {
        self.u.max(self.v)
    }
}

/// Closed-form CRB for the spatial AoAs at channel power `|β|²`.
pub fn crb_closed_form(layout: &ArrayLayout, spec: &SensingSpec, beta_power: f64) -> Result<Crb> {
    let st = layout.stats();
    let scale = st.var_y * st.var_z;
    if !(st.determinant() > COLINEAR_TOL * scale) || scale <= 0.0 {
        return Err(Error::SingularGeometry("colinear layout has a singular Fisher information".into()));
    }
    let c = SensingSpec { antennas: layout.n(), ..*spec }.crb_scale(beta_power);
    Ok(Crb {
        u: c / st.term_y(),
        v: c / st.term_z(),
    })
}

/// Worst-case CRBs with `β̃` in place of `|β|²`.
pub fn worst_case_crb(layout: &ArrayLayout, spec: &SensingSpec) -> Result<Crb> {
    crb_closed_form(layout, spec, spec.beta_tilde)
}

/// Fisher information for `(u, v, Re β, Im β)`, assembled from the analytic
/// derivatives of `f = β·vec(ααᵀS)`.
pub fn fim_numeric(layout: &ArrayLayout, truth: &SensingTruth, spec: &SensingSpec) -> Result<Matrix4<f64>> {
    let n = layout.n();
    let s = probing_matrix(n, spec.snapshots, spec.probing_power_mw)?;
    let alpha = nalgebra::DVector::from_vec(steering_vector(layout, truth.chi));
    let k = 2.0 * PI / layout.wavelength();
    let jk = Complex64::new(0.0, k);
    let da_u = nalgebra::DVector::from_fn(n, |i, _| jk * layout.y()[i] * alpha[i]);
    let da_v = nalgebra::DVector::from_fn(n, |i, _| jk * layout.z()[i] * alpha[i]);
    let a = &alpha * alpha.transpose();
    let a_u = &da_u * alpha.transpose() + &alpha * da_u.transpose();
    let a_v = &da_v * alpha.transpose() + &alpha * da_v.transpose();
    let b = a * &s;
    let derivs = [
        (a_u * &s) * truth.beta,
        (a_v * &s) * truth.beta,
        b.clone(),
        b * Complex64::new(0.0, 1.0),
    ];
    let mut f = Matrix4::zeros();
    for p in 0..4 {
        for q in 0..4 {
            f[(p, q)] = 2.0 / spec.noise_mw * derivs[p].dotc(&derivs[q]).re;
        }
    }
    Ok(f)
}

/// CRBs of `(u, v)` from the FIM via the Schur complement of the `β` block.
pub fn crb_from_fim(f: &Matrix4<f64>) -> Result<Crb> {
    let jxx: Matrix2<f64> = f.fixed_view::<2, 2>(0, 0).into();
    let jxb: Matrix2<f64> = f.fixed_view::<2, 2>(0, 2).into();
    let jbb: Matrix2<f64> = f.fixed_view::<2, 2>(2, 2).into();
    let jbb_inv = jbb
        .try_inverse()
        .ok_or_else(|| Error::SingularGeometry("singular channel-gain information".into()))?;
    let schur = jxx - jxb * jbb_inv * jxb.transpose();
    let lambda = schur
        .try_inverse()
        .ok_or_else(|| Error::SingularGeometry("singular angle information".into()))?;
    Ok(Crb {
        u: lambda[(0, 0)],
        v: lambda[(1, 1)],
    })
}

/// Smallest attainable worst-case CRB threshold for the region.
pub fn eta_lower_bound(region: &MovementRegion, spec: &SensingSpec) -> f64 {
    let a_cir = region.circumradius();
    2.0 * spec.zeta() / (a_cir * a_cir)
}

/// Empirical MSE of the grid MLE over independent noise and phase draws.
/// Trial `i` uses stream `i` of `seed`, so results do not depend on threading.
pub fn mse_simulation(
    layout: &ArrayLayout,
    truth: &SensingTruth,
    spec: &SensingSpec,
    trials: usize,
    grid: &GridSpec,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let s = probing_matrix(layout.n(), spec.snapshots, spec.probing_power_mw)?;
    let magnitude = truth.beta.norm();
    let errors: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let phase = rng.random::<f64>() * 2.0 * PI;
            let draw = SensingTruth {
                chi: truth.chi,
                beta: Complex64::from_polar(magnitude, phase),
            };
            let y = echo_with(layout, &draw, &s, spec.noise_mw, &mut rng);
            let est = mle_estimate(layout, &s, &y, grid);
            ((est.u - truth.chi.u).powi(2), (est.v - truth.chi.v).powi(2))
        })
        .collect();
    let (mut su, mut sv) = (0.0, 0.0);
    for (eu, ev) in &errors {
        su += eu;
        sv += ev;
    }
    Ok((su / trials as f64, sv / trials as f64))
}
