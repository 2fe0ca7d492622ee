//! Scenario configuration and the builders turning it into models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cooperation::{coop_geometry, coop_links, half_lattice_offset};
use crate::dynamics::{BehaviorFactors, MarketModel, ServiceLink, TasteAveraging};
use crate::equilibrium::{solve, EconParams, EquilibriumResult, Game};
use crate::error::{ensure, Result};
use crate::geometry::{Channel, CrowdParams, DeploymentParams, Fleet, RadioParams, SpectralMethod};
use crate::quality::QualityParams;
use crate::scalar::{db_to_linear, dbm_to_watts};

/// One provider's fleet and spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    /// AAP altitude (m).
    pub altitude: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    /// Carrier frequency (Hz).
    pub frequency: f64,
    pub aap_count: usize,
}

impl ProviderConfig {
    pub fn licensed() -> Self {
        Self {
            altitude: 15.0,
            bandwidth: 2e9,
            frequency: 28e9,
            aap_count: 18,
        }
    }

    pub fn unlicensed() -> Self {
        Self {
            altitude: 30.0,
            bandwidth: 6e9,
            frequency: 60e9,
            aap_count: 5,
        }
    }
}

/// Full scenario. Missing fields take their default values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Quality law `s(T) = T/(T+b) + cT`.
    pub quality_b: f64,
    pub quality_c: f64,
    pub theta_max: f64,
    /// Throughput offered by the top-quality LSP (Mbit/s).
    pub max_throughput: f64,
    /// Marginal cost of quality.
    pub nu: f64,

    pub area_side: f64,
    pub body_density: f64,
    pub device_density: f64,
    pub body_height: f64,
    pub body_radius: f64,
    pub device_height: f64,
    pub beam_half_angle_deg: f64,
    pub max_inclination_deg: f64,
    pub viewing_angle_deg: f64,
    pub tx_power: f64,
    pub noise_dbm: f64,
    pub nlos_gain_db: f64,
    pub snr_max_db: f64,
    pub eff_bw_factor: f64,
    pub spectral_method: SpectralMethod,

    /// Both licensed providers use this fleet.
    pub lsp: ProviderConfig,
    pub usp: ProviderConfig,

    pub behavior: BehaviorFactors<f64>,
    pub averaging: TasteAveraging,

    /// Game played by default in runs.
    pub game: Game,
    /// Whether runs enable proxy cooperation by default.
    pub coop: bool,
    /// Number of agent-based replications (seeds `1..=seeds`).
    pub seeds: u64,
    /// Agents in the agent-based simulation.
    pub population: usize,
    /// Time step of the agent-based simulation (min).
    pub abm_dt: f64,
    /// Simulated horizon (min).
    pub horizon: f64,
    /// Integration step of the mean-field model (min).
    pub dt: f64,
    /// Sample points used to estimate the proxy shares.
    pub coop_samples: usize,
    pub coop_seed: u64,
    /// Shift of the LSP2 grid relative to LSP1 (m); half the row spacing when unset.
    pub lsp2_offset: Option<[f64; 2]>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            quality_b: 0.5619,
            quality_c: 0.0098,
            theta_max: 234.03,
            max_throughput: 100.0,
            nu: 0.0647,
            area_side: 200.0,
            body_density: 2.0,
            device_density: 0.2,
            body_height: 1.7,
            body_radius: 0.2,
            device_height: 1.2,
            beam_half_angle_deg: 10.0,
            max_inclination_deg: 60.0,
            viewing_angle_deg: 270.0,
            tx_power: 0.2,
            noise_dbm: -80.0,
            nlos_gain_db: -30.0,
            snr_max_db: 20.0,
            eff_bw_factor: 0.5,
            spectral_method: SpectralMethod::Quadrature,
            lsp: ProviderConfig::licensed(),
            usp: ProviderConfig::unlicensed(),
            behavior: BehaviorFactors {
                xi: 1.0,
                gamma: 0.05,
                alpha_c: 0.05,
                delta: 0.1,
                c_u: 0.1,
                c_price: 0.1,
            },
            averaging: TasteAveraging::default(),
            game: Game::Bertrand,
            coop: false,
            seeds: 10,
            population: 8000,
            abm_dt: 1.0,
            horizon: 120.0,
            dt: 0.05,
            coop_samples: 200_000,
            coop_seed: 7,
            lsp2_offset: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn quality(&self) -> QualityParams<f64> {
        QualityParams {
            b: self.quality_b,
            c: self.quality_c,
            theta_max: self.theta_max,
        }
    }

    pub fn econ(&self) -> Result<EconParams<f64>> {
        EconParams::from_quality(&self.quality(), self.max_throughput, self.nu)
    }

    pub fn crowd(&self) -> CrowdParams<f64> {
        CrowdParams {
            body_density: self.body_density,
            device_density: self.device_density,
            body_height: self.body_height,
            body_radius: self.body_radius,
            device_height: self.device_height,
        }
    }

    pub fn deployment(&self, p: &ProviderConfig) -> DeploymentParams<f64> {
        DeploymentParams {
            area_side: self.area_side,
            altitude: p.altitude,
            beam_half_angle: self.beam_half_angle_deg.to_radians(),
            max_inclination: self.max_inclination_deg.to_radians(),
            viewing_angle: self.viewing_angle_deg.to_radians(),
        }
    }

    pub fn radio(&self, p: &ProviderConfig) -> RadioParams<f64> {
        RadioParams {
            tx_power: self.tx_power,
            frequency: p.frequency,
            bandwidth: p.bandwidth,
            eff_bw_factor: self.eff_bw_factor,
            noise_power: dbm_to_watts(self.noise_dbm),
            nlos_gain: db_to_linear(self.nlos_gain_db),
            snr_max: db_to_linear(self.snr_max_db),
        }
    }

    pub fn fleet(&self, p: &ProviderConfig) -> Fleet<f64> {
        Fleet::hexagonal(p.aap_count, self.deployment(p), self.radio(p))
    }

    /// Checks every parameter group.
    pub fn validate(&self) -> Result<()> {
        self.quality().validate()?;
        self.econ()?;
        self.crowd().validate()?;
        for p in [&self.lsp, &self.usp] {
            self.deployment(p).validate()?;
            self.radio(p).validate()?;
            ensure(p.aap_count >= 1, "aap_count", "at least one AAP")?;
            ensure(p.altitude > self.body_height, "altitude", "AAP above the blockers")?;
        }
        self.behavior.validate()?;
        ensure(self.seeds >= 1, "seeds", "seeds >= 1")?;
        ensure(self.population >= 1, "population", "population >= 1")?;
        ensure(self.abm_dt > 0.0, "abm_dt", "abm_dt > 0")?;
        ensure(self.dt > 0.0, "dt", "dt > 0")?;
        ensure(self.horizon >= 0.0, "horizon", "horizon >= 0")?;
        ensure(self.coop_samples >= 1, "coop_samples", "coop_samples >= 1")
    }
}

/// Everything derived from a configuration: fleets, channels and the two
/// initial equilibria.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub quality: QualityParams<f64>,
    pub econ: EconParams<f64>,
    pub usp_fleet: Fleet<f64>,
    /// LSP1 and LSP2 fleets; the second one is shifted to interleave with the first.
    pub lsp_fleets: [Fleet<f64>; 2],
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let lsp1 = config.fleet(&config.lsp);
        let offset = config.lsp2_offset.unwrap_or_else(|| half_lattice_offset(&lsp1));
        let lsp2 = lsp1.translated(offset);
        Ok(Self {
            quality: config.quality(),
            econ: config.econ()?,
            usp_fleet: config.fleet(&config.usp),
            lsp_fleets: [lsp1, lsp2],
            config,
        })
    }

    pub fn channel(&self, fleet: &Fleet<f64>) -> Channel<f64> {
        Channel {
            crowd: self.config.crowd(),
            radio: fleet.radio,
            deploy: fleet.deployment,
        }
    }

    /// Rate and load model of a fleet with the given cell radius.
    pub fn service_link(&self, fleet: &Fleet<f64>, cell_radius: f64) -> Result<ServiceLink<f64>> {
        let eta_bar = self
            .channel(fleet)
            .avg_spectral_efficiency(cell_radius, self.config.spectral_method)?;
        Ok(ServiceLink {
            bandwidth: fleet.radio.effective_bandwidth(),
            eta_bar,
            devices_per_share: self.config.device_density * std::f64::consts::PI * cell_radius * cell_radius,
        })
    }

    pub fn equilibrium(&self, game: Game) -> Result<EquilibriumResult<f64>> {
        solve(game, &self.econ)
    }

    /// Mean-field model of the dynamic stage.
    pub fn model(&self, game: Game, coop: bool) -> Result<MarketModel<f64>> {
        let usp = self.service_link(&self.usp_fleet, self.usp_fleet.cell_radius)?;
        let lsp = [
            self.service_link(&self.lsp_fleets[0], self.lsp_fleets[0].cell_radius)?,
            self.service_link(&self.lsp_fleets[1], self.lsp_fleets[1].cell_radius)?,
        ];
        let coop = if coop {
            Some(coop_links(self, &coop_geometry(self)?)?)
        } else {
            None
        };
        Ok(MarketModel {
            game,
            equilibrium: self.equilibrium(game)?,
            quality: self.quality,
            behavior: self.config.behavior,
            averaging: self.config.averaging,
            usp,
            lsp,
            coop,
        })
    }
}
