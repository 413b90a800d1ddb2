use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::comm::{CommScenario, UserZone};
use crate::error::{Error, Result};
use crate::geometry::{MovementRegion, WaveVector2D};
use crate::optimizer::OptimizerConfig;
use crate::sensing::{eta_lower_bound, GridSpec, SensingSpec, SensingTruth};
use crate::units::dbm_to_mw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    MaStatistical,
    MaInstantaneous,
    UpaDense,
    UpaSparse,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::MaStatistical => "ma-statistical",
            Scheme::MaInstantaneous => "ma-instantaneous",
            Scheme::UpaDense => "upa-dense",
            Scheme::UpaSparse => "upa-sparse",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        [
            Scheme::MaStatistical,
            Scheme::MaInstantaneous,
            Scheme::UpaDense,
            Scheme::UpaSparse,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

/// On-disk configuration. See `configs/` for annotated examples.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: String,
    pub wavelength_m: f64,
    /// Side `A` of the square movement region, in wavelengths.
    pub region_side_wavelengths: f64,
    /// Minimum spacing `D₀`, in wavelengths.
    pub min_distance_wavelengths: f64,
    #[serde(default)]
    pub seed: u64,
    pub baselines: Vec<Scheme>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub communication: CommSection,
    pub sensing: SensingSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub profile: BTreeMap<String, Profile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommSection {
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub zone_radius_m: f64,
    /// Zone centers in meters; the first `users` entries are used.
    pub zones: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSection {
    pub probing_power_dbm: f64,
    pub noise_dbm: f64,
    pub beta_tilde: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    /// Absolute CRB threshold. Exactly one of `eta` and
    /// `eta_over_lower_bound` must be given.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub eta_over_lower_bound: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub eps1: f64,
    pub eps2: f64,
    pub fd_step_wavelengths: f64,
    pub line_search_points: usize,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::for_wavelength(1.0);
        Self {
            eps1: d.eps1,
            eps2: d.eps2,
            fd_step_wavelengths: d.fd_step,
            line_search_points: d.line_search_points,
            max_inner: d.max_inner,
            max_outer: d.max_outer,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Trade-off thresholds as multiples of the attainable lower bound.
    pub eta_over_lower_bound: Option<Vec<f64>>,
    /// Trade-off thresholds in absolute terms.
    pub eta: Option<Vec<f64>>,
    pub users: Vec<usize>,
    pub correlation_resolution: usize,
    pub reference_zone: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            eta_over_lower_bound: Some(vec![1.5, 2.0, 4.0, 10.0, 50.0]),
            eta: None,
            users: (1..=8).collect(),
            correlation_resolution: 201,
            reference_zone: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub antennas: usize,
    pub users: usize,
    pub realizations: usize,
    pub snapshots: usize,
    pub coarse_grid: usize,
    pub mse_trials: usize,
    pub mse_power_dbm: Vec<f64>,
    /// Realizations optimized one by one for the instantaneous baseline.
    pub instantaneous_realizations: usize,
}

impl Profile {
    pub fn desk() -> Self {
        Self {
            antennas: 8,
            users: 4,
            realizations: 200,
            snapshots: 8,
            coarse_grid: 201,
            mse_trials: 200,
            mse_power_dbm: vec![60.0, 65.0, 70.0, 75.0, 80.0],
            instantaneous_realizations: 20,
        }
    }

    pub fn paper() -> Self {
        Self {
            antennas: 16,
            users: 8,
            realizations: 5000,
            snapshots: 16,
            coarse_grid: 201,
            mse_trials: 5000,
            mse_power_dbm: vec![30.0, 35.0, 40.0, 45.0, 50.0],
            instantaneous_realizations: 5000,
        }
    }
}

/// Fully resolved experiment: a config file with one profile applied.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub profile: String,
    pub region: MovementRegion,
    pub antennas: usize,
    /// Scenario over the profile's first `users` zones.
    pub scenario: CommScenario,
    /// Scenario over every configured zone, for user-count sweeps.
    pub all_zones: CommScenario,
    /// Sensing parameters with the configured threshold resolved.
    pub sensing: SensingSpec,
    pub truth: SensingTruth,
    pub optimizer: OptimizerConfig,
    pub grid: GridSpec,
    pub mse_trials: usize,
    pub mse_power_dbm: Vec<f64>,
    pub instantaneous_realizations: usize,
    pub baselines: Vec<Scheme>,
    pub eta_over_lower_bound: Option<Vec<f64>>,
    pub eta_absolute: Option<Vec<f64>>,
    pub users_sweep: Vec<usize>,
    pub correlation_resolution: usize,
    pub reference_zone: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Fill the `wall_time` column. Off by default so that output is
    /// reproducible byte for byte.
    pub timing: bool,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn profile_named(&self, name: &str) -> Result<Profile> {
        if let Some(p) = self.profile.get(name) {
            return Ok(p.clone());
        }
        match name {
            "desk" => Ok(Profile::desk()),
            "paper" => Ok(Profile::paper()),
            _ => Err(Error::Config(format!("unknown profile `{name}`"))),
        }
    }

    pub fn resolve(&self, profile_name: &str, seed: Option<u64>) -> Result<Experiment> {
        let p = self.profile_named(profile_name)?;
        let lambda = self.wavelength_m;
        if !(lambda > 0.0) || !(self.region_side_wavelengths > 0.0) || !(self.min_distance_wavelengths > 0.0) {
            return Err(Error::Config("wavelength, region side and minimum distance must be positive".into()));
        }
        if self.baselines.is_empty() {
            return Err(Error::Config("at least one scheme must be listed in `baselines`".into()));
        }
        let c = &self.communication;
        if p.users == 0 || c.zones.len() < p.users {
            return Err(Error::Config(format!(
                "profile `{profile_name}` needs {} zones, {} configured",
                p.users,
                c.zones.len()
            )));
        }
        let seed = seed.unwrap_or(self.seed);
        let zones = c
            .zones
            .iter()
            .map(|z| UserZone::new(*z, c.zone_radius_m))
            .collect::<Result<Vec<_>>>()?;
        let all_zones = CommScenario {
            zones,
            power_mw: dbm_to_mw(c.power_dbm),
            noise_mw: dbm_to_mw(c.noise_dbm),
            wavelength: lambda,
            realizations: p.realizations,
            seed,
        };
        all_zones.validate()?;
        let scenario = all_zones.with_users(p.users);

        let region = MovementRegion::square(self.region_side_wavelengths * lambda);
        let s = &self.sensing;
        let mut sensing = SensingSpec {
            antennas: p.antennas,
            probing_power_mw: dbm_to_mw(s.probing_power_dbm),
            snapshots: p.snapshots,
            beta_tilde: s.beta_tilde,
            noise_mw: dbm_to_mw(s.noise_dbm),
            wavelength: lambda,
            eta: 1.0,
        };
        let lower = eta_lower_bound(&region, &sensing);
        sensing.eta = match (s.eta, s.eta_over_lower_bound) {
            (Some(eta), None) => eta,
            (None, Some(m)) => m * lower,
            _ => {
                return Err(Error::Config(
                    "give exactly one of `sensing.eta` and `sensing.eta_over_lower_bound`".into(),
                ))
            }
        };
        sensing.validate()?;
        let truth = SensingTruth {
            chi: WaveVector2D::from_angles(s.theta_deg.to_radians(), s.phi_deg.to_radians()),
            beta: Complex64::new(s.beta_tilde.sqrt(), 0.0),
        };

        let o = &self.optimizer;
        let optimizer = OptimizerConfig {
            eps1: o.eps1,
            eps2: o.eps2,
            fd_step: o.fd_step_wavelengths * lambda,
            line_search_points: o.line_search_points,
            max_inner: o.max_inner,
            max_outer: o.max_outer,
            feasibility_tolerance: 1e-9,
            min_distance: self.min_distance_wavelengths * lambda,
        };
        optimizer.validate()?;

        let sw = &self.sweep;
        let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        // An absolute list takes precedence over the relative default.
        match (&sw.eta, &sw.eta_over_lower_bound) {
            (Some(v), _) | (None, Some(v)) if !v.is_empty() && positive(v) => {}
            _ => {
                return Err(Error::Config(
                    "the threshold sweep must be a non-empty list of positive values".into(),
                ))
            }
        }
        if sw.users.contains(&0) || sw.users.iter().any(|&k| k > c.zones.len()) {
            return Err(Error::Config(format!(
                "user sweep values must lie in 1..={}",
                c.zones.len()
            )));
        }
        if p.mse_power_dbm.is_empty() || p.mse_power_dbm.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("profile needs a non-empty probing power sweep".into()));
        }
        if sw.correlation_resolution < 2 {
            return Err(Error::Config("correlation resolution must be at least 2".into()));
        }
        if sw.reference_zone >= p.users {
            return Err(Error::Config("reference zone index out of range".into()));
        }
        if p.coarse_grid < 3 || p.mse_trials == 0 {
            return Err(Error::Config("profile needs a coarse grid of ≥ 3 points and ≥ 1 trial".into()));
        }

        Ok(Experiment {
            name: self.name.clone(),
            profile: profile_name.to_string(),
            region,
            antennas: p.antennas,
            scenario,
            all_zones,
            sensing,
            truth,
            optimizer,
            grid: GridSpec {
                coarse_points: p.coarse_grid,
                ..GridSpec::default()
            },
            mse_trials: p.mse_trials,
            mse_power_dbm: p.mse_power_dbm,
            instantaneous_realizations: p.instantaneous_realizations,
            baselines: self.baselines.clone(),
            eta_over_lower_bound: sw.eta_over_lower_bound.clone(),
            eta_absolute: sw.eta.clone(),
            users_sweep: sw.users.clone(),
            correlation_resolution: sw.correlation_resolution,
            reference_zone: sw.reference_zone,
            seed,
            output: self.output.clone(),
            timing: false,
        })
    }
}

impl Experiment {
    pub fn from_path(path: &Path, profile: &str, seed: Option<u64>) -> Result<Self> {
        ConfigFile::load(path)?.resolve(profile, seed)
    }

    pub fn eta_lower_bound(&self) -> f64 {
        eta_lower_bound(&self.region, &self.sensing)
    }

    /// Trade-off thresholds in absolute terms, in configured order.
    pub fn eta_values(&self) -> Vec<f64> {
        let lower = self.eta_lower_bound();
        match (&self.eta_absolute, &self.eta_over_lower_bound) {
            (Some(v), _) => v.clone(),
            (None, Some(m)) => m.iter().map(|x| x * lower).collect(),
            (None, None) => vec![self.sensing.eta],
        }
    }

    pub fn has(&self, scheme: Scheme) -> bool {
        self.baselines.contains(&scheme)
    }
}
