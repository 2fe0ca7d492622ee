//! Proxy-AAP cooperation between the two licensed providers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::dynamics::{CoopLinks, MarketModel, ServiceLink, Trajectory};
use crate::equilibrium::Game;
use crate::error::Result;
use crate::geometry::Channel;
use crate::geometry::{group_throughput, min_pairwise_distance, CrowdParams, Fleet, SpectralMethod};
use crate::scalar::{lit, Scalar};

/// Geometry of the combined deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoopGeometry<T> {
    /// Probability that a customer's nearest AAP belongs to the partner LSP.
    pub epsilon: T,
    pub eta_coop: [T; 2],
    /// Half the nearest-neighbour spacing of the union grid, capped at the beam reach.
    pub r_aap_coop: T,
}

/// Monte Carlo estimate of ε: the probability that a uniform point is closer to
/// the other fleet than to its own, averaged over customers of both fleets.
/// Exact ties stay with the own fleet; an empty fleet gives 0.
pub fn foreign_share<T: Scalar>(a: &Fleet<T>, b: &Fleet<T>, samples: usize, seed: u64) -> T {
    if a.is_empty() || b.is_empty() || samples == 0 {
        return T::zero();
    }
    let side = a.deployment.area_side;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut foreign = 0usize;
    for _ in 0..samples {
        let p = [side * lit(rng.gen::<f64>()), side * lit(rng.gen::<f64>())];
        let da = a.nearest(p).map_or(T::infinity(), |x| x.1);
        let db = b.nearest(p).map_or(T::infinity(), |x| x.1);
        // A customer of `a` goes foreign when b is strictly closer and vice versa.
        if da != db {
            foreign += 1;
        }
    }
    lit::<T>(foreign as f64) / lit(2.0 * samples as f64)
}

/// Half of the shortest in-row lattice vector of a fleet, used to interleave a
/// second copy of the grid.
pub fn half_lattice_offset<T: Scalar>(fleet: &Fleet<T>) -> [T; 2] {
    let p = &fleet.positions;
    let mut best: Option<T> = None;
    for (i, a) in p.iter().enumerate() {
        for b in &p[i + 1..] {
            if (a[1] - b[1]).abs() <= T::tol(64.0) * fleet.deployment.area_side {
                let dx = (a[0] - b[0]).abs();
                if dx > T::zero() {
                    best = Some(best.map_or(dx, |v| v.min(dx)));
                }
            }
        }
    }
    let row = best.unwrap_or(fleet.deployment.area_side);
    [row * lit(0.5), T::zero()]
}

/// Cell radius in the union deployment.
pub fn union_cell_radius<T: Scalar>(a: &Fleet<T>, b: &Fleet<T>) -> T {
    let reach = a.deployment.reach().min(b.deployment.reach());
    let mut union = a.positions.clone();
    union.extend(b.positions.iter().copied());
    min_pairwise_distance(&union)
        .map_or(a.cell_radius, |d| d * lit(0.5))
        .min(reach)
}

/// Average spectral efficiency of fleet i's radio over a union-grid cell.
pub fn coop_spectral_efficiency<T: Scalar>(
    fleet_i: &Fleet<T>,
    fleet_j: &Fleet<T>,
    crowd: &CrowdParams<T>,
    method: SpectralMethod,
) -> Result<T> {
    Channel {
        crowd: *crowd,
        radio: fleet_i.radio,
        deploy: fleet_i.deployment,
    }
    .avg_spectral_efficiency(union_cell_radius(fleet_i, fleet_j), method)
}

/// Throughput (Mbit/s) of a customer served by the partner's AAP with
/// effective bandwidth `bandwidth`, spectral efficiency `eta` and `n_devices` sharing it.
pub fn proxy_throughput<T: Scalar>(bandwidth: T, eta: T, n_devices: T) -> T {
    group_throughput(bandwidth, T::one(), eta, n_devices)
}

/// Geometry of the scenario's combined LSP deployment.
pub fn coop_geometry(scenario: &Scenario) -> Result<CoopGeometry<f64>> {
    let [a, b] = &scenario.lsp_fleets;
    let crowd = scenario.config.crowd();
    let method = scenario.config.spectral_method;
    Ok(CoopGeometry {
        epsilon: foreign_share(a, b, scenario.config.coop_samples, scenario.config.coop_seed),
        eta_coop: [
            coop_spectral_efficiency(a, b, &crowd, method)?,
            coop_spectral_efficiency(b, a, &crowd, method)?,
        ],
        r_aap_coop: union_cell_radius(a, b),
    })
}

/// Own and proxy service links of both LSPs.
///
/// Loads keep the standalone per-AAP area; without foreign customers
/// (`ε = 0`) the links equal the standalone ones.
pub fn coop_links(scenario: &Scenario, geometry: &CoopGeometry<f64>) -> Result<CoopLinks<f64>> {
    let fleets = &scenario.lsp_fleets;
    let mut own = Vec::with_capacity(2);
    for (i, fleet) in fleets.iter().enumerate() {
        let mut link = scenario.service_link(fleet, fleet.cell_radius)?;
        if geometry.epsilon > 0.0 {
            link.eta_bar = geometry.eta_coop[i];
        }
        own.push(link);
    }
    let own = [own[0], own[1]];
    let proxy = [0, 1].map(|i| ServiceLink {
        eta_bar: own[i].eta_bar,
        ..own[1 - i]
    });
    Ok(CoopLinks {
        epsilon: geometry.epsilon,
        own,
        proxy,
    })
}

/// Shapley split of the cooperative value `v12` between two players with
/// standalone values `v1`, `v2`.
pub fn shapley_split<T: Scalar>(v1: T, v2: T, v12: T) -> [T; 2] {
    let surplus = (v12 - v1 - v2) * lit(0.5);
    [v1 + surplus, v2 + surplus]
}

/// Coalition values and their Shapley split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapleySummary {
    pub v1: f64,
    pub v2: f64,
    pub v12: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl ShapleySummary {
    pub fn new(v1: f64, v2: f64, v12: f64) -> Self {
        let [phi1, phi2] = shapley_split(v1, v2, v12);
        Self {
            v1,
            v2,
            v12,
            phi1,
            phi2,
        }
    }

    /// Whether the coalition is worth at least the sum of its parts.
    pub fn superadditive(&self) -> bool {
        self.v12 >= self.v1 + self.v2
    }
}

/// Stationary outcome with and without cooperation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoopSummary {
    pub game: Game,
    pub horizon: f64,
    pub geometry: CoopGeometry<f64>,
    /// `(Π0, Π1, Π2)` at the horizon without cooperation.
    pub standalone: [f64; 3],
    /// `(Π0, Π1, Π2)` at the horizon with cooperation.
    pub cooperative: [f64; 3],
    pub shapley: ShapleySummary,
}

impl CoopSummary {
    /// Cooperative minus standalone LSP profits.
    pub fn gain(&self) -> [f64; 2] {
        [
            self.cooperative[1] - self.standalone[1],
            self.cooperative[2] - self.standalone[2],
        ]
    }
}

/// Runs both settings to `horizon` and summarises the stationary profits.
pub fn compare_cooperation(
    scenario: &Scenario,
    game: Game,
    horizon: f64,
    dt: f64,
) -> Result<(Trajectory<f64>, Trajectory<f64>, CoopSummary)> {
    let nu = scenario.econ.nu;
    let run = |m: &MarketModel<f64>| m.integrate(m.initial_state(), horizon, dt, nu);
    let plain = scenario.model(game, false)?;
    let coop = scenario.model(game, true)?;
    let a = run(&plain)?;
    let b = run(&coop)?;
    let last = |t: &Trajectory<f64>| t.last().map_or([0.0; 3], |s| s.profit);
    let (pa, pb) = (last(&a), last(&b));
    let summary = CoopSummary {
        game,
        horizon,
        geometry: coop_geometry(scenario)?,
        standalone: pa,
        cooperative: pb,
        shapley: ShapleySummary::new(pa[1], pa[2], pb[1] + pb[2]),
    };
    Ok((a, b, summary))
}
