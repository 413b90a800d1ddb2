//! Downlink multiuser model: user zones, line-of-sight channels, zero-forcing
//! precoding and the Monte-Carlo expected minimum rate.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{steering_vector, ArrayLayout, WaveVector2D};
use crate::ComplexMatrix;

/// Realizations whose Gram matrix `HᴴH` is worse conditioned than this are
/// treated as singular.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Spherical zone in which one user moves. The base station sits at the
/// origin and the array faces the `x > 0` half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserZone {
    pub center: [f64; 3],
    pub radius: f64,
}

impl UserZone {
    pub fn new(center: [f64; 3], radius: f64) -> Result<Self> {
        let zone = Self { center, radius };
        zone.validate()?;
        Ok(zone)
    }

    pub fn validate(&self) -> Result<()> {
        let d = norm3(self.center);
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("zone radius must be non-negative, got {}", self.radius)));
        }
        if !(d > self.radius) {
            return Err(Error::InvalidArgument(format!(
                "zone centered at {:?} with radius {} contains the base station",
                self.center, self.radius
            )));
        }
        Ok(())
    }

    /// Wave vector towards the zone center.
    pub fn center_direction(&self) -> WaveVector2D {
        WaveVector2D::towards(self.center).expect("validated zone center is away from the origin")
    }
}

/// Communication side of the problem: zones, powers, wavelength and the
/// Monte-Carlo batch definition.
#[derive(Debug, Clone, PartialEq)]
pub struct CommScenario {
    pub zones: Vec<UserZone>,
    /// Transmit power budget `P` in milliwatts.
    pub power_mw: f64,
    /// Noise power `σ²` in milliwatts.
    pub noise_mw: f64,
    pub wavelength: f64,
    /// Number of Monte-Carlo user-location realizations `Q`.
    pub realizations: usize,
    pub seed: u64,
}

impl CommScenario {
    pub fn validate(&self) -> Result<()> {
        if self.zones.is_empty() {
            return Err(Error::InvalidArgument("scenario needs at least one user zone".into()));
        }
        for zone in &self.zones {
            zone.validate()?;
        }
        if !(self.power_mw > 0.0) || !(self.noise_mw > 0.0) {
            return Err(Error::InvalidArgument("transmit and noise powers must be positive".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidArgument("wavelength must be positive".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidArgument("need at least one Monte-Carlo realization".into()));
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.zones.len()
    }

    /// Draws the `Q × K` batch of user locations used by every rate evaluation.
    pub fn sample_batch(&self) -> UserBatch {
        UserBatch {
            locations: (0..self.realizations)
                .map(|q| sample_user_locations(self, q))
                .collect(),
        }
    }

    /// Restricts the scenario to its first `k` zones.
    pub fn with_users(&self, k: usize) -> Self {
        let mut s = self.clone();
        s.zones.truncate(k);
        s
    }
}

/// Fixed set of sampled user locations (common random numbers).
#[derive(Debug, Clone, PartialEq)]
pub struct UserBatch {
    pub locations: Vec<Vec<[f64; 3]>>,
}

impl UserBatch {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Batch holding only realization `q`.
    pub fn single(&self, q: usize) -> UserBatch {
        UserBatch {
            locations: vec![self.locations[q].clone()],
        }
    }
}

fn norm3(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Stream for user `k` of realization `q`: independent of how many
/// realizations or users the scenario asks for.
fn user_rng(seed: u64, q: usize, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((q as u64) << 20) | k as u64);
    rng
}

/// Draws one location per zone, uniformly inside each ball.
pub fn sample_user_locations(scenario: &CommScenario, realization: usize) -> Vec<[f64; 3]> {
    scenario
        .zones
        .iter()
        .enumerate()
        .map(|(k, zone)| {
            let mut rng = user_rng(scenario.seed, realization, k);
            let dir: [f64; 3] = loop {
                let g = [
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ];
                let n = norm3(g);
                if n > 1e-12 {
                    break [g[0] / n, g[1] / n, g[2] / n];
                }
            };
            let r = zone.radius * rng.random::<f64>().cbrt();
            [
                zone.center[0] + r * dir[0],
                zone.center[1] + r * dir[1],
                zone.center[2] + r * dir[2],
            ]
        })
        .collect()
}

/// Line-of-sight channel from the array to a user at `user` (meters).
pub fn los_channel(layout: &ArrayLayout, user: [f64; 3]) -> Result<Vec<Complex64>> {
    let d = norm3(user);
    let dir = WaveVector2D::towards(user)
        .ok_or_else(|| Error::SingularGeometry("user located at the base station".into()))?;
    let lambda = layout.wavelength();
    let gain = Complex64::from_polar(lambda / (4.0 * PI * d), 2.0 * PI * d / lambda);
    Ok(steering_vector(layout, dir).into_iter().map(|a| a * gain).collect())
}

/// `N × K` channel matrix, one column per user.
pub fn channel_matrix(layout: &ArrayLayout, users: &[[f64; 3]]) -> Result<ComplexMatrix> {
    let n = layout.n();
    let mut h = DMatrix::zeros(n, users.len());
    for (k, &u) in users.iter().enumerate() {
        for (row, value) in los_channel(layout, u)?.into_iter().enumerate() {
            h[(row, k)] = value;
        }
    }
    Ok(h)
}

/// `(HᴴH)⁻¹` through a Cholesky factorization, rejecting ill-conditioned
/// Gram matrices.
fn gram_inverse(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h.ncols() > h.nrows() {
        return Err(Error::InvalidArgument(format!(
            "zero-forcing needs K ≤ N, got K={} N={}",
            h.ncols(),
            h.nrows()
        )));
    }
    let gram = h.adjoint() * h;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(Error::SingularChannel { condition: f64::INFINITY })?;
    let inv = chol.inverse();
    let condition = one_norm(&gram) * one_norm(&inv);
    if !condition.is_finite() || condition > GRAM_CONDITION_LIMIT {
        return Err(Error::SingularChannel { condition });
    }
    Ok(inv)
}

fn one_norm(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Zero-forcing precoder `√P · H(HᴴH)⁻¹ / ‖H(HᴴH)⁻¹‖_F`.
pub fn zf_precoder(h: &ComplexMatrix, power_mw: f64) -> Result<ComplexMatrix> {
    let inv = gram_inverse(h)?;
    let w = h * inv;
    let norm = w.norm();
    Ok(w * Complex64::new(power_mw.sqrt() / norm, 0.0))
}

/// Common SINR of all users under zero-forcing: `P / (Tr((HᴴH)⁻¹) σ²)`.
pub fn zf_min_sinr(h: &ComplexMatrix, power_mw: f64, noise_mw: f64) -> Result<f64> {
    let inv = gram_inverse(h)?;
    let trace: f64 = (0..inv.nrows()).map(|i| inv[(i, i)].re).sum();
    Ok(power_mw / (trace * noise_mw))
}

/// Per-user SINR for an arbitrary precoder.
pub fn sinr_per_user(h: &ComplexMatrix, w: &ComplexMatrix, noise_mw: f64) -> Vec<f64> {
    let k_users = h.ncols();
    (0..k_users)
        .map(|k| {
            let hk = h.column(k);
            let mut signal = 0.0;
            let mut interference = 0.0;
            for i in 0..w.ncols() {
                let p = w.column(i).dotc(&hk).norm_sqr();
                if i == k {
                    signal = p;
                } else {
                    interference += p;
                }
            }
            signal / (interference + noise_mw)
        })
        .collect()
}

/// Per-user achievable rate `log₂(1 + γₖ)` in bits/s/Hz.
pub fn rates(h: &ComplexMatrix, w: &ComplexMatrix, noise_mw: f64) -> Vec<f64> {
    sinr_per_user(h, w, noise_mw).into_iter().map(|g| (1.0 + g).log2()).collect()
}

/// Zero-forcing minimum rate of every realization in the batch. Singular
/// realizations contribute zero.
pub fn min_rates_on(layout: &ArrayLayout, scenario: &CommScenario, batch: &UserBatch) -> Vec<f64> {
    batch
        .locations
        .par_iter()
        .map(|users| {
            channel_matrix(layout, users)
                .and_then(|h| zf_min_sinr(&h, scenario.power_mw, scenario.noise_mw))
                .map(|g| (1.0 + g).log2())
                .unwrap_or(0.0)
        })
        .collect()
}

/// Monte-Carlo expected minimum rate on a given batch. The sum runs in
/// realization order so the value is bit-reproducible.
pub fn expected_min_rate_on(layout: &ArrayLayout, scenario: &CommScenario, batch: &UserBatch) -> f64 {
    let per = min_rates_on(layout, scenario, batch);
    per.iter().sum::<f64>() / per.len() as f64
}

/// Monte-Carlo expected minimum rate on the scenario's own batch.
pub fn expected_min_rate(layout: &ArrayLayout, scenario: &CommScenario) -> f64 {
    expected_min_rate_on(layout, scenario, &scenario.sample_batch())
}

/// Interference-free minimum-SINR bound for one realization with `n` antennas.
pub fn sinr_upper_bound(scenario: &CommScenario, antennas: usize, users: &[[f64; 3]]) -> f64 {
    let lambda = scenario.wavelength;
    let sum_d2: f64 = users.iter().map(|&u| norm3(u).powi(2)).sum();
    scenario.power_mw * lambda * lambda * antennas as f64 / (16.0 * PI * PI * scenario.noise_mw) / sum_d2
}

/// Upper bound on the expected minimum rate over a given batch.
pub fn rate_upper_bound_on(scenario: &CommScenario, antennas: usize, batch: &UserBatch) -> f64 {
    let total: f64 = batch
        .locations
        .iter()
        .map(|users| (1.0 + sinr_upper_bound(scenario, antennas, users)).log2())
        .sum();
    total / batch.len() as f64
}

pub fn rate_upper_bound(scenario: &CommScenario, antennas: usize) -> f64 {
    rate_upper_bound_on(scenario, antennas, &scenario.sample_batch())
}
