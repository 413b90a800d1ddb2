//! Antenna positions, the movement region, steering vectors and the
//! position statistics (variance / covariance) that drive the CRB.
//!
//! Coordinates are meters in the y-z plane of the base station. The
//! wavelength is carried by the layout so every phase computation and the
//! "positions in units of λ" reporting use the same value.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute slack (meters) allowed when testing region membership, to absorb
/// rounding of grid constructions that land exactly on the boundary.
pub const REGION_TOL: f64 = 1e-12;

/// One of the two in-plane coordinate axes of the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Y,
    Z,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Y => Axis::Z,
            Axis::Z => Axis::Y,
        }
    }
}

/// Spatial direction cosines `(u, v)` with respect to the y and z axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector2D {
    pub u: f64,
    pub v: f64,
}

impl WaveVector2D {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// Direction cosines from elevation `theta` and azimuth `phi` (radians):
    /// `u = sin θ cos φ`, `v = cos θ`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self {
            u: theta.sin() * phi.cos(),
            v: theta.cos(),
        }
    }

    /// Projection of the unit vector towards a 3D point onto the y-z plane.
    pub fn towards(point: [f64; 3]) -> Option<Self> {
        let d = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
        if d == 0.0 {
            return None;
        }
        Some(Self {
            u: point[1] / d,
            v: point[2] / d,
        })
    }

    pub fn neg(self) -> Self {
        Self {
            u: -self.u,
            v: -self.v,
        }
    }

    /// True for directions that correspond to a physical wave (`u² + v² ≤ 1`).
    pub fn is_physical(&self) -> bool {
        self.u * self.u + self.v * self.v <= 1.0
    }
}

/// Convex 2D region inside which the antennas may move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MovementRegion {
    Rectangle {
        y_min: f64,
        y_max: f64,
        z_min: f64,
        z_max: f64,
    },
    Disk {
        center: (f64, f64),
        radius: f64,
    },
}

impl MovementRegion {
    /// Square of side `side` centered at the origin.
    pub fn square(side: f64) -> Self {
        let h = side / 2.0;
        MovementRegion::Rectangle {
            y_min: -h,
            y_max: h,
            z_min: -h,
            z_max: h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MovementRegion::Rectangle {
                y_min,
                y_max,
                z_min,
                z_max,
            } => {
                if !(y_min < y_max && z_min < z_max) || ![y_min, y_max, z_min, z_max].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "rectangle bounds must be finite and ordered, got y=[{y_min}, {y_max}] z=[{z_min}, {z_max}]"
                    )));
                }
            }
            MovementRegion::Disk { center, radius } => {
                if !(radius > 0.0 && radius.is_finite() && center.0.is_finite() && center.1.is_finite()) {
                    return Err(Error::InvalidArgument(format!("disk radius must be positive, got {radius}")));
                }
            }
        }
        Ok(())
    }

    /// Radius of the minimum circumscribed circle.
    pub fn circumradius(&self) -> f64 {
        match *self {
            MovementRegion::Rectangle {
                y_min,
                y_max,
                z_min,
                z_max,
            } => 0.5 * ((y_max - y_min).powi(2) + (z_max - z_min).powi(2)).sqrt(),
            MovementRegion::Disk { radius, .. } => radius,
        }
    }

    pub fn centroid(&self) -> (f64, f64) {
        match *self {
            MovementRegion::Rectangle {
                y_min,
                y_max,
                z_min,
                z_max,
            } => (0.5 * (y_min + y_max), 0.5 * (z_min + z_max)),
            MovementRegion::Disk { center, .. } => center,
        }
    }

    /// Largest extent of the region, used as a length scale.
    pub fn diameter(&self) -> f64 {
        2.0 * self.circumradius()
    }

    pub fn contains(&self, y: f64, z: f64, tol: f64) -> bool {
        match *self {
            MovementRegion::Rectangle {
                y_min,
                y_max,
                z_min,
                z_max,
            } => y >= y_min - tol && y <= y_max + tol && z >= z_min - tol && z <= z_max + tol,
            MovementRegion::Disk { center, radius } => {
                let dy = y - center.0;
                let dz = z - center.1;
                (dy * dy + dz * dz).sqrt() <= radius + tol
            }
        }
    }

    /// Interval of admissible values along `axis` when the other coordinate is
    /// held at `other`. `None` when the line misses the region.
    pub fn slice(&self, axis: Axis, other: f64) -> Option<(f64, f64)> {
        match *self {
            MovementRegion::Rectangle {
                y_min,
                y_max,
                z_min,
                z_max,
            } => {
                let ((lo, hi), (olo, ohi)) = match axis {
                    Axis::Y => ((y_min, y_max), (z_min, z_max)),
                    Axis::Z => ((z_min, z_max), (y_min, y_max)),
                };
                (other >= olo - REGION_TOL && other <= ohi + REGION_TOL).then_some((lo, hi))
            }
            MovementRegion::Disk { center, radius } => {
                let (c, oc) = match axis {
                    Axis::Y => (center.0, center.1),
                    Axis::Z => (center.1, center.0),
                };
                let rem = radius * radius - (other - oc).powi(2);
                (rem >= -REGION_TOL).then(|| {
                    let w = rem.max(0.0).sqrt();
                    (c - w, c + w)
                })
            }
        }
    }

    /// Nearest point of the region. Only used to absorb rounding noise.
    pub fn project(&self, y: f64, z: f64) -> (f64, f64) {
        match *self {
            MovementRegion::Rectangle {
                y_min,
                y_max,
                z_min,
                z_max,
            } => (y.clamp(y_min, y_max), z.clamp(z_min, z_max)),
            MovementRegion::Disk { center, radius } => {
                let dy = y - center.0;
                let dz = z - center.1;
                let r = (dy * dy + dz * dz).sqrt();
                if r <= radius {
                    (y, z)
                } else {
                    (center.0 + dy * radius / r, center.1 + dz * radius / r)
                }
            }
        }
    }
}

/// Positions of the `N` movable antennas (the APV) inside their region.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    y: Vec<f64>,
    z: Vec<f64>,
    region: MovementRegion,
    wavelength: f64,
}

impl ArrayLayout {
    /// Builds a layout, checking shape and region membership.
    pub fn new(y: Vec<f64>, z: Vec<f64>, region: MovementRegion, wavelength: f64) -> Result<Self> {
        region.validate()?;
        if y.len() != z.len() {
            return Err(Error::InvalidArgument(format!(
                "y has {} entries but z has {}",
                y.len(),
                z.len()
            )));
        }
        if y.len() < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 antennas, got {}", y.len())));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavelength must be positive, got {wavelength}")));
        }
        for (n, (&yn, &zn)) in y.iter().zip(&z).enumerate() {
            if !yn.is_finite() || !zn.is_finite() || !region.contains(yn, zn, REGION_TOL) {
                return Err(Error::InfeasibleLayout(format!(
                    "antenna {n} at ({yn:.6e}, {zn:.6e}) lies outside the movement region"
                )));
            }
        }
        Ok(Self {
            y,
            z,
            region,
            wavelength,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn axis(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }

    pub fn region(&self) -> &MovementRegion {
        &self.region
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn position(&self, n: usize) -> (f64, f64) {
        (self.y[n], self.z[n])
    }

    /// Copy of the layout with one axis replaced.
    pub fn with_axis(&self, axis: Axis, values: Vec<f64>) -> Result<Self> {
        match axis {
            Axis::Y => Self::new(values, self.z.clone(), self.region, self.wavelength),
            Axis::Z => Self::new(self.y.clone(), values, self.region, self.wavelength),
        }
    }

    /// Same as [`with_axis`](Self::with_axis) but pulls coordinates that drift
    /// outside the region by rounding back onto it.
    pub(crate) fn with_axis_projected(&self, axis: Axis, values: Vec<f64>) -> Result<Self> {
        let mut next = match axis {
            Axis::Y => (values, self.z.clone()),
            Axis::Z => (self.y.clone(), values),
        };
        for n in 0..next.0.len() {
            let (y, z) = self.region.project(next.0[n], next.1[n]);
            next.0[n] = y;
            next.1[n] = z;
        }
        Self::new(next.0, next.1, self.region, self.wavelength)
    }

    /// Replaces one axis without the region check; only for evaluating
    /// objectives at perturbed positions.
    pub(crate) fn with_axis_unchecked(&self, axis: Axis, values: Vec<f64>) -> Self {
        let mut next = self.clone();
        match axis {
            Axis::Y => next.y = values,
            Axis::Z => next.z = values,
        }
        next
    }

    /// y coordinates expressed in wavelengths.
    pub fn y_in_wavelengths(&self) -> Vec<f64> {
        self.y.iter().map(|v| v / self.wavelength).collect()
    }

    pub fn z_in_wavelengths(&self) -> Vec<f64> {
        self.z.iter().map(|v| v / self.wavelength).collect()
    }

    pub fn stats(&self) -> VarCov {
        var_cov(&self.y, &self.z)
    }
}

/// Array steering vector: entry `n` is `exp(j 2π/λ (u yₙ + v zₙ))`.
pub fn steering_vector(layout: &ArrayLayout, chi: WaveVector2D) -> Vec<Complex64> {
    let k = 2.0 * PI / layout.wavelength;
    layout
        .y
        .iter()
        .zip(&layout.z)
        .map(|(&y, &z)| Complex64::from_polar(1.0, k * (chi.u * y + chi.v * z)))
        .collect()
}

/// Population variance / covariance of the two position vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarCov {
    pub var_y: f64,
    pub var_z: f64,
    pub cov_yz: f64,
}

impl VarCov {
    /// `var(y) − cov²/var(z)`; the ratio is taken as 0 when `var(z) = 0`.
    pub fn term_y(&self) -> f64 {
        self.var_y - ratio_or_zero(self.cov_yz * self.cov_yz, self.var_z)
    }

    /// `var(z) − cov²/var(y)`.
    pub fn term_z(&self) -> f64 {
        self.var_z - ratio_or_zero(self.cov_yz * self.cov_yz, self.var_y)
    }

    pub fn term(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Y => self.term_y(),
            Axis::Z => self.term_z(),
        }
    }

    /// The smaller of the two variance terms; the CRB-maximin objective.
    pub fn min_term(&self) -> f64 {
        self.term_y().min(self.term_z())
    }

    /// `var(y) var(z) − cov²`, zero for colinear arrays.
    pub fn determinant(&self) -> f64 {
        self.var_y * self.var_z - self.cov_yz * self.cov_yz
    }
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `var(y) = mean(y²) − mean(y)²`, `cov(y, z) = mean(yz) − mean(y) mean(z)`.
///
/// Computed from centered values; the variances are clamped at zero.
pub fn var_cov(y: &[f64], z: &[f64]) -> VarCov {
    assert_eq!(y.len(), z.len(), "var_cov needs equal lengths");
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let (mut syy, mut szz, mut syz) = (0.0, 0.0, 0.0);
    for (&a, &b) in y.iter().zip(z) {
        let (da, db) = (a - my, b - mz);
        syy += da * da;
        szz += db * db;
        syz += da * db;
    }
    VarCov {
        var_y: (syy / n).max(0.0),
        var_z: (szz / n).max(0.0),
        cov_yz: syz / n,
    }
}

/// `xᵀ B w` with `B = I/N − 𝟙𝟙ᵀ/N²`.
pub fn quadratic_form_b(x: &[f64], w: &[f64]) -> f64 {
    assert_eq!(x.len(), w.len(), "quadratic_form_b needs equal lengths");
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sw: f64 = w.iter().sum();
    let sxw: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    sxw / n - sx * sw / (n * n)
}

/// `B w` with `B = I/N − 𝟙𝟙ᵀ/N²`.
pub fn apply_b(w: &[f64]) -> Vec<f64> {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    w.iter().map(|&v| (v - mean) / n).collect()
}

/// Uniform planar grid of `n` antennas with the given spacing, centered on the
/// region centroid. When `n` is not a perfect square the first `n` points of
/// the row-major `⌈√n⌉ × ⌈√n⌉` grid are used.
pub fn build_upa(n: usize, spacing: f64, region: MovementRegion, wavelength: f64) -> Result<ArrayLayout> {
    region.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 antennas, got {n}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidArgument(format!("spacing must be positive, got {spacing}")));
    }
    let side = (n as f64).sqrt().ceil() as usize;
    let (cy, cz) = region.centroid();
    let half = 0.5 * (side - 1) as f64 * spacing;
    let tol = 1e-9 * region.diameter();
    // The full grid footprint must fit, not just the first n points.
    for (sy, sz) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
        if !region.contains(cy + sy * half, cz + sz * half, tol) {
            return Err(Error::InfeasibleLayout(format!(
                "a {side}x{side} grid with spacing {spacing:.6e} m does not fit the movement region"
            )));
        }
    }
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    'rows: for row in 0..side {
        for col in 0..side {
            if y.len() == n {
                break 'rows;
            }
            let (py, pz) = region.project(cy - half + col as f64 * spacing, cz + half - row as f64 * spacing);
            y.push(py);
            z.push(pz);
        }
    }
    ArrayLayout::new(y, z, region, wavelength)
}

/// Largest grid spacing at which the `⌈√n⌉ × ⌈√n⌉` UPA still fits the region.
pub fn sparse_upa_spacing(n: usize, region: &MovementRegion) -> f64 {
    let side = (n as f64).sqrt().ceil().max(2.0);
    let span = match *region {
        MovementRegion::Rectangle {
            y_min,
            y_max,
            z_min,
            z_max,
        } => (y_max - y_min).min(z_max - z_min),
        MovementRegion::Disk { radius, .. } => std::f64::consts::SQRT_2 * radius,
    };
    span / (side - 1.0)
}

/// `n` antennas evenly spaced along the region boundary. `phase` shifts the
/// first antenna by that fraction of the spacing away from the top-left
/// corner (rectangle) or the rightmost point (disk).
pub fn perimeter_layout(n: usize, region: MovementRegion, wavelength: f64, phase: f64) -> Result<ArrayLayout> {
    region.validate()?;
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    match region {
        MovementRegion::Rectangle {
            y_min,
            y_max,
            z_min,
            z_max,
        } => {
            let (w, h) = (y_max - y_min, z_max - z_min);
            let total = 2.0 * (w + h);
            for i in 0..n {
                let s = total * (i as f64 + phase) / n as f64;
                let (py, pz) = if s < w {
                    (y_min + s, z_max)
                } else if s < w + h {
                    (y_max, z_max - (s - w))
                } else if s < 2.0 * w + h {
                    (y_max - (s - w - h), z_min)
                } else {
                    (y_min, z_min + (s - 2.0 * w - h))
                };
                let (py, pz) = region.project(py, pz);
                y.push(py);
                z.push(pz);
            }
        }
        MovementRegion::Disk { center, radius } => {
            for i in 0..n {
                let a = 2.0 * PI * (i as f64 + phase) / n as f64;
                let (py, pz) = region.project(center.0 + radius * a.cos(), center.1 + radius * a.sin());
                y.push(py);
                z.push(pz);
            }
        }
    }
    ArrayLayout::new(y, z, region, wavelength)
}

/// Smallest Euclidean distance over all antenna pairs.
pub fn min_pairwise_distance(layout: &ArrayLayout) -> Result<f64> {
    pairwise_min(&layout.y, &layout.z)
}

pub(crate) fn pairwise_min(y: &[f64], z: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::InvalidArgument("minimum distance needs at least 2 antennas".into()));
    }
    let mut best = f64::INFINITY;
    for n in 0..y.len() {
        for m in n + 1..y.len() {
            best = best.min((y[n] - y[m]).hypot(z[n] - z[m]));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LAMBDA: f64 = 0.05;

    fn upa4x4() -> ArrayLayout {
        let mut y = Vec::new();
        let mut z = Vec::new();
        for r in 0..4 {
            for c in 0..4 {
                y.push(c as f64 * LAMBDA / 2.0);
                z.push(r as f64 * LAMBDA / 2.0);
            }
        }
        ArrayLayout::new(y, z, MovementRegion::square(1.0), LAMBDA).unwrap()
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        let layout = upa4x4();
        for a in steering_vector(&layout, WaveVector2D::new(0.0, 0.0)) {
            assert_eq!(a, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn half_wavelength_pair_flips_sign() {
        let layout = ArrayLayout::new(vec![0.0, LAMBDA / 2.0], vec![0.0, 0.0], MovementRegion::square(1.0), LAMBDA).unwrap();
        let a = steering_vector(&layout, WaveVector2D::new(1.0, 0.0));
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_matches_scalar_evaluation() {
        let layout = upa4x4();
        let chi = WaveVector2D::new(0.35, 0.71);
        let a = steering_vector(&layout, chi);
        assert_eq!(a.len(), 16);
        for n in 0..16 {
            let (y, z) = layout.position(n);
            let phase = 2.0 * PI / LAMBDA * (0.35 * y + 0.71 * z);
            let expected = Complex64::new(phase.cos(), phase.sin());
            assert!((a[n] - expected).norm() < 1e-13);
            assert!((a[n].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn var_cov_reference_cases() {
        let a = 0.3;
        let s = var_cov(&[-a, a], &[0.0, 0.0]);
        assert!((s.var_y - a * a).abs() < 1e-15);
        assert_eq!(s.var_z, 0.0);
        assert_eq!(s.cov_yz, 0.0);

        // 4x4 grid spacing λ/2 from the origin: direct summation oracle.
        let layout = upa4x4();
        let y = layout.y();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let my = mean(y);
        let direct: f64 = y.iter().map(|v| v * v).sum::<f64>() / 16.0 - my * my;
        let s = layout.stats();
        assert!((s.var_y - direct).abs() < 1e-15);
        assert!((s.var_y - 0.3125 * LAMBDA * LAMBDA).abs() < 1e-15);
        assert!((s.var_z - 0.3125 * LAMBDA * LAMBDA).abs() < 1e-15);
        assert!(s.cov_yz.abs() < 1e-18);
    }

    #[test]
    fn quadratic_form_reference_cases() {
        assert!(quadratic_form_b(&[1.0; 5], &[1.0; 5]).abs() < 1e-16);
        // 2x2 expansion: B = [[1/4, -1/4], [-1/4, 1/4]].
        assert!((quadratic_form_b(&[-1.0, 1.0], &[1.0, -1.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_form_matches_var_cov_n8() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = var_cov(&x, &w);
            assert!((quadratic_form_b(&x, &x) - s.var_y).abs() <= 1e-12 * s.var_y);
            assert!((quadratic_form_b(&w, &w) - s.var_z).abs() <= 1e-12 * s.var_z);
            assert!((quadratic_form_b(&x, &w) - s.cov_yz).abs() <= 1e-12 * (s.var_y * s.var_z).sqrt());
        }
    }

    #[test]
    fn upa_baselines() {
        let region = MovementRegion::square(5.0 * LAMBDA);
        let dense = build_upa(16, LAMBDA / 2.0, region, LAMBDA).unwrap();
        assert!((min_pairwise_distance(&dense).unwrap() - LAMBDA / 2.0).abs() < 1e-15);
        let s = dense.stats();
        assert!((s.var_y - 0.3125 * LAMBDA * LAMBDA).abs() < 1e-15);
        let mean_y = dense.y().iter().sum::<f64>() / 16.0;
        assert!(mean_y.abs() < 1e-15);

        let sparse = build_upa(16, 5.0 * LAMBDA / 3.0, region, LAMBDA).unwrap();
        let ymax = sparse.y().iter().cloned().fold(f64::MIN, f64::max);
        assert!((ymax - 2.5 * LAMBDA).abs() < 1e-12);

        let small = build_upa(4, LAMBDA / 2.0, region, LAMBDA).unwrap();
        assert!((min_pairwise_distance(&small).unwrap() - LAMBDA / 2.0).abs() < 1e-15);

        let partial = build_upa(8, LAMBDA, region, LAMBDA).unwrap();
        assert_eq!(partial.n(), 8);

        assert!(matches!(build_upa(16, 2.0 * LAMBDA, region, LAMBDA), Err(Error::InfeasibleLayout(_))));

        assert!((sparse_upa_spacing(16, &region) - 5.0 * LAMBDA / 3.0).abs() < 1e-15);
        assert!((sparse_upa_spacing(8, &region) - 2.5 * LAMBDA).abs() < 1e-15);
        assert!(build_upa(8, sparse_upa_spacing(8, &region), region, LAMBDA).is_ok());
        let disk = MovementRegion::Disk { center: (0.0, 0.0), radius: 0.2 };
        assert!(build_upa(9, sparse_upa_spacing(9, &disk), disk, LAMBDA).is_ok());
    }

    #[test]
    fn upa_in_disk() {
        let region = MovementRegion::Disk { center: (0.1, -0.2), radius: 0.2 };
        let layout = build_upa(9, 0.1, region, LAMBDA).unwrap();
        assert!((layout.y()[4] - 0.1).abs() < 1e-15 && (layout.z()[4] + 0.2).abs() < 1e-15);
        assert!(build_upa(9, 0.2, region, LAMBDA).is_err());
    }

    #[test]
    fn pairwise_distance_cases() {
        let region = MovementRegion::square(10.0);
        let colinear = ArrayLayout::new(vec![0.0, 1.0, 3.0], vec![0.0; 3], region, LAMBDA).unwrap();
        assert_eq!(min_pairwise_distance(&colinear).unwrap(), 1.0);
        assert!(pairwise_min(&[0.0], &[0.0]).is_err());

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let y: Vec<f64> = (0..16).map(|_| rng.random_range(-5.0..5.0)).collect();
        let z: Vec<f64> = (0..16).map(|_| rng.random_range(-5.0..5.0)).collect();
        let layout = ArrayLayout::new(y.clone(), z.clone(), region, LAMBDA).unwrap();
        let mut pairs = Vec::new();
        for n in 0..16 {
            for m in 0..16 {
                if n < m {
                    pairs.push(((y[n] - y[m]).powi(2) + (z[n] - z[m]).powi(2)).sqrt());
                }
            }
        }
        assert_eq!(pairs.len(), 120);
        let brute = pairs.into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(min_pairwise_distance(&layout).unwrap(), brute);
    }

    #[test]
    fn region_membership_is_checked() {
        let region = MovementRegion::square(1.0);
        assert!(matches!(
            ArrayLayout::new(vec![0.0, 0.6], vec![0.0, 0.0], region, LAMBDA),
            Err(Error::InfeasibleLayout(_))
        ));
        assert!(ArrayLayout::new(vec![0.0], vec![0.0], region, LAMBDA).is_err());
        assert!(ArrayLayout::new(vec![0.0, 0.1], vec![0.0], region, LAMBDA).is_err());
        assert!((MovementRegion::square(2.0).circumradius() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(MovementRegion::Disk { center: (0.0, 0.0), radius: 3.0 }.circumradius(), 3.0);
    }

    fn layout_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(-0.125f64..0.125, n),
                prop::collection::vec(-0.125f64..0.125, n),
            )
        })
    }

    proptest! {
        #[test]
        fn steering_unit_modulus_and_conjugate_symmetry((y, z) in layout_strategy(), u in -1.0f64..1.0, v in -1.0f64..1.0) {
            let layout = ArrayLayout::new(y, z, MovementRegion::square(0.25), LAMBDA).unwrap();
            let chi = WaveVector2D::new(u, v);
            let a = steering_vector(&layout, chi);
            let b = steering_vector(&layout, chi.neg());
            for (x, w) in a.iter().zip(&b) {
                prop_assert!((x.norm() - 1.0).abs() < 1e-12);
                prop_assert!((x.conj() - w).norm() < 1e-12);
            }
        }

        #[test]
        fn translation_invariance((y, z) in layout_strategy(), dy in -0.1f64..0.1, dz in -0.1f64..0.1, u in -1.0f64..1.0, v in -1.0f64..1.0) {
            let s = var_cov(&y, &z);
            let ys: Vec<f64> = y.iter().map(|v| v + dy).collect();
            let zs: Vec<f64> = z.iter().map(|v| v + dz).collect();
            let t = var_cov(&ys, &zs);
            prop_assert!((s.var_y - t.var_y).abs() < 1e-14);
            prop_assert!((s.var_z - t.var_z).abs() < 1e-14);
            prop_assert!((s.cov_yz - t.cov_yz).abs() < 1e-14);
            prop_assert!(s.cov_yz.abs() <= (s.var_y * s.var_z).sqrt() + 1e-15);

            let region = MovementRegion::square(1.0);
            let a = steering_vector(&ArrayLayout::new(y, z, region, LAMBDA).unwrap(), WaveVector2D::new(u, v));
            let b = steering_vector(&ArrayLayout::new(ys, zs, region, LAMBDA).unwrap(), WaveVector2D::new(u, v));
            let g = b[0] / a[0];
            prop_assert!((g.norm() - 1.0).abs() < 1e-12);
            for (x, w) in a.iter().zip(&b) {
                prop_assert!((x * g - w).norm() < 1e-9);
            }
        }

        #[test]
        fn aperture_bound((y, z) in layout_strategy()) {
            // Square region: each variance term is below (A^cir)²/2 = A²/4.
            let region = MovementRegion::square(0.25);
            let s = var_cov(&y, &z);
            let bound = region.circumradius().powi(2) / 2.0;
            prop_assert!(s.term_y() <= bound + 1e-15);
            prop_assert!(s.term_z() <= bound + 1e-15);
            prop_assert!(s.min_term() <= bound + 1e-15);
        }
    }
}
