//! AAP deployment geometry, human-body blockage and reflection, received power
//! and area-averaged spectral efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ModelError, Result};
use crate::quadrature;
use crate::scalar::{lit, Scalar};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Geometry of one fleet: area, altitude and beam constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentParams<T> {
    /// Side of the square area of interest (m).
    pub area_side: T,
    /// AAP altitude (m).
    pub altitude: T,
    /// Beam half-angle φ (rad).
    pub beam_half_angle: T,
    /// Maximum beam inclination β_max (rad).
    pub max_inclination: T,
    /// Antenna viewing angle (rad); informational only.
    pub viewing_angle: T,
}

impl<T: Scalar> DeploymentParams<T> {
    pub fn validate(&self) -> Result<()> {
        let half_pi = T::FRAC_PI_2();
        ensure(self.area_side > T::zero(), "area_side", "R > 0")?;
        ensure(self.altitude > T::zero(), "altitude", "h > 0")?;
        ensure(
            self.beam_half_angle > T::zero() && self.beam_half_angle < half_pi,
            "beam_half_angle",
            "0 < phi < pi/2",
        )?;
        ensure(
            self.max_inclination > T::zero() && self.max_inclination < half_pi,
            "max_inclination",
            "0 < beta_max < pi/2",
        )
    }

    /// Largest serviceable ground distance `h·tan β_max`.
    pub fn reach(&self) -> T {
        self.altitude * self.max_inclination.tan()
    }
}

/// Crowd of human bodies (blockers and reflectors) and active devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrowdParams<T> {
    /// Density of bodies μ (1/m²).
    pub body_density: T,
    /// Density of active devices μ0 (1/m²).
    pub device_density: T,
    /// Body height h_b (m).
    pub body_height: T,
    /// Body radius r_b (m).
    pub body_radius: T,
    /// Device elevation h_d (m).
    pub device_height: T,
}

impl<T: Scalar> CrowdParams<T> {
    pub fn validate(&self) -> Result<()> {
        ensure(self.body_density > T::zero(), "mu", "mu > 0")?;
        ensure(self.device_density > T::zero(), "mu0", "mu0 > 0")?;
        ensure(self.device_density < self.body_density, "mu0", "mu0 < mu")?;
        ensure(self.body_radius > T::zero(), "r_b", "r_b > 0")?;
        ensure(self.device_height >= T::zero(), "h_d", "h_d >= 0")?;
        ensure(self.device_height < self.body_height, "h_d", "h_d < h_b")
    }
}

/// Radio settings of one fleet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams<T> {
    /// Transmit power (W).
    pub tx_power: T,
    /// Carrier frequency (Hz).
    pub frequency: T,
    /// Channel bandwidth (Hz).
    pub bandwidth: T,
    /// Effective-bandwidth multiplier in (0, 1].
    pub eff_bw_factor: T,
    /// Noise plus interference power (W).
    pub noise_power: T,
    /// Linear attenuation of the reflected path.
    pub nlos_gain: T,
    /// Linear SNR cap.
    pub snr_max: T,
}

impl<T: Scalar> RadioParams<T> {
    pub fn validate(&self) -> Result<()> {
        ensure(self.tx_power > T::zero(), "tx_power", "p_tx > 0")?;
        ensure(self.frequency > T::zero(), "frequency", "f > 0")?;
        ensure(self.bandwidth > T::zero(), "bandwidth", "B > 0")?;
        ensure(
            self.eff_bw_factor > T::zero() && self.eff_bw_factor <= T::one(),
            "eff_bw_factor",
            "0 < eff_bw_factor <= 1",
        )?;
        ensure(self.noise_power > T::zero(), "noise_power", "N0 > 0")?;
        ensure(
            self.nlos_gain > T::zero() && self.nlos_gain <= T::one(),
            "nlos_gain",
            "0 < G_nlos <= 1",
        )?;
        ensure(self.snr_max > T::zero(), "snr_max", "snr_max > 0")
    }

    /// Free-space path gain `(c / 4πf)²`.
    pub fn path_gain(&self) -> T {
        let g = lit::<T>(SPEED_OF_LIGHT) / (lit::<T>(4.0) * T::PI() * self.frequency);
        g * g
    }

    /// Effective bandwidth in Hz.
    pub fn effective_bandwidth(&self) -> T {
        self.bandwidth * self.eff_bw_factor
    }
}

/// Ideal cone antenna gain `2 / (1 − cos φ)`.
pub fn antenna_gain<T: Scalar>(beam_half_angle: T) -> T {
    lit::<T>(2.0) / (T::one() - beam_half_angle.cos())
}

/// Lower bound on the number of AAPs covering a square of side `area_side`,
/// evaluated exactly as the published hexagonal-grid expression.
pub fn min_aap_count<T: Scalar>(area_side: T, altitude: T, max_inclination: T) -> u64 {
    let span = lit::<T>(2.0) * altitude * max_inclination.tan();
    let cols = (area_side / span + T::one() - T::SQRT_2()).ceil().max(T::zero());
    let rows = (area_side * lit::<T>(4.0 / 3.0).sqrt() / (span + T::one() - lit::<T>(8.0 / 3.0).sqrt()))
        .ceil()
        .max(T::zero());
    let total = cols * rows + rows.floor();
    total.to_u64().unwrap_or(u64::MAX)
}

/// Published closed-form AAP coverage radius, kept for reference.
pub fn coverage_radius_formula<T: Scalar>(area_side: T, altitude: T, max_inclination: T) -> T {
    let span = lit::<T>(2.0) * altitude * max_inclination.tan();
    let cols = (area_side / span + T::one() - T::SQRT_2()).ceil();
    area_side / (T::SQRT_2() + cols - T::one())
}

/// AAP positions on a (possibly stretched) hexagonal lattice and the derived cell radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexGrid<T> {
    pub positions: Vec<[T; 2]>,
    /// Smallest pairwise distance between AAPs.
    pub spacing: T,
    /// Half the spacing, capped at the beam reach.
    pub cell_radius: T,
}

#[derive(Clone, Copy)]
enum RowPattern {
    /// All rows hold `k` points, odd rows shifted by a quarter spacing each way.
    Full,
    /// Rows alternate between `k` and `k − 1` points, short rows sit in the gaps.
    Alternating,
}

fn lattice<T: Scalar>(area: T, rows: usize, k: usize, pattern: RowPattern) -> Vec<[T; 2]> {
    let a = area / lit(k as f64);
    let dy = area / lit(rows as f64);
    let mut out = Vec::new();
    for i in 0..rows {
        let y = (lit::<T>(i as f64) + lit(0.5)) * dy;
        let odd = i % 2 == 1;
        match pattern {
            RowPattern::Full => {
                let shift = if rows == 1 {
                    0.5
                } else if odd {
                    0.75
                } else {
                    0.25
                };
                for j in 0..k {
                    out.push([(lit::<T>(j as f64) + lit(shift)) * a, y]);
                }
            }
            RowPattern::Alternating => {
                let (count, shift) = if odd { (k - 1, 1.0) } else { (k, 0.5) };
                for j in 0..count {
                    out.push([(lit::<T>(j as f64) + lit(shift)) * a, y]);
                }
            }
        }
    }
    out
}

/// Smallest pairwise distance, or `None` for fewer than two points.
pub fn min_pairwise_distance<T: Scalar>(points: &[[T; 2]]) -> Option<T> {
    let mut best: Option<T> = None;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    best
}

/// Places exactly `n_target` AAPs over the square `[0, R]²`.
///
/// Every row layout whose point count equals `n_target` is considered and the one
/// maximising the nearest-neighbour spacing wins (fewer rows on ties). The cell
/// radius is half that spacing capped at `reach`; a single AAP sits at the centre
/// with radius `R/√2` capped at `reach`.
pub fn hex_grid<T: Scalar>(area_side: T, n_target: usize, reach: T) -> HexGrid<T> {
    assert!(n_target >= 1, "hex_grid needs at least one AAP");
    if n_target == 1 {
        let c = area_side * lit(0.5);
        return HexGrid {
            positions: vec![[c, c]],
            spacing: T::infinity(),
            cell_radius: (area_side / T::SQRT_2()).min(reach),
        };
    }
    let mut best: Option<(T, Vec<[T; 2]>)> = None;
    let mut consider = |pts: Vec<[T; 2]>| {
        debug_assert_eq!(pts.len(), n_target);
        let d = min_pairwise_distance(&pts).expect("at least two points");
        if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
            best = Some((d, pts));
        }
    };
    for rows in 1..=n_target {
        if n_target.is_multiple_of(rows) {
            consider(lattice(area_side, rows, n_target / rows, RowPattern::Full));
        }
        if rows >= 2 {
            let long = rows.div_ceil(2);
            let short = rows / 2;
            // long·k + short·(k − 1) = n
            let numer = n_target + short;
            if numer.is_multiple_of(rows) {
                let k = numer / rows;
                if k >= 2 {
                    consider(lattice(area_side, rows, k, RowPattern::Alternating));
                }
            }
            let _ = long;
        }
    }
    let (spacing, positions) = best.expect("single-row layout always fits");
    HexGrid {
        positions,
        spacing,
        cell_radius: (spacing * lit(0.5)).min(reach),
    }
}

/// A provider's fleet: positions, geometry, radio, and the effective cell radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fleet<T> {
    pub positions: Vec<[T; 2]>,
    pub deployment: DeploymentParams<T>,
    pub radio: RadioParams<T>,
    pub cell_radius: T,
}

impl<T: Scalar> Fleet<T> {
    /// Builds a fleet of `count` AAPs on the hexagonal grid.
    pub fn hexagonal(count: usize, deployment: DeploymentParams<T>, radio: RadioParams<T>) -> Self {
        let grid = hex_grid(deployment.area_side, count, deployment.reach());
        Self {
            positions: grid.positions,
            deployment,
            radio,
            cell_radius: grid.cell_radius,
        }
    }

    /// Same fleet translated by `offset`, wrapped back into the area.
    pub fn translated(&self, offset: [T; 2]) -> Self {
        let side = self.deployment.area_side;
        let wrap = |v: T| {
            let r = v % side;
            if r < T::zero() {
                r + side
            } else {
                r
            }
        };
        Self {
            positions: self
                .positions
                .iter()
                .map(|p| [wrap(p[0] + offset[0]), wrap(p[1] + offset[1])])
                .collect(),
            ..self.clone()
        }
    }

    /// Index and distance of the AAP closest to `point`; ties go to the lower index.
    pub fn nearest(&self, point: [T; 2]) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for (i, p) in self.positions.iter().enumerate() {
            let d = (p[0] - point[0]).hypot(p[1] - point[1]);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Probability that the direct path at ground distance `d` is not blocked by a body.
pub fn q_los<T: Scalar>(d: T, crowd: &CrowdParams<T>, altitude: T) -> Result<T> {
    if altitude <= crowd.body_height {
        return Err(ModelError::BlockerAboveAap {
            altitude: altitude.as_f64(),
            body_height: crowd.body_height.as_f64(),
        });
    }
    let shadow = (crowd.body_height - crowd.device_height) / (altitude - crowd.device_height);
    Ok((-crowd.body_density * d.max(T::zero()) * lit(2.0) * crowd.body_radius * shadow).exp())
}

/// Ratio between the ground footprint of a beam tilted towards distance `d` and the
/// nadir footprint.
pub fn beam_area_ratio<T: Scalar>(d: T, altitude: T, beam_half_angle: T) -> Result<T> {
    let cos_phi = beam_half_angle.cos();
    let tilt = d * d / (d * d + altitude * altitude);
    let gap = cos_phi * cos_phi - tilt;
    if !(gap > T::zero()) {
        return Err(ModelError::UnboundedFootprint { distance: d.as_f64() });
    }
    Ok(cos_phi / gap.sqrt())
}

/// Probability that the direct path is blocked but a body reflection is available.
pub fn q_nlos<T: Scalar>(d: T, crowd: &CrowdParams<T>, altitude: T, beam_half_angle: T) -> Result<T> {
    let footprint = altitude * beam_half_angle.tan();
    let area = T::PI() * footprint * footprint * beam_area_ratio(d, altitude, beam_half_angle)?;
    let reflect = T::one() - (-crowd.body_density * area).exp();
    Ok(reflect * (T::one() - q_los(d, crowd, altitude)?))
}

/// State of a single device-to-AAP link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkState {
    Los,
    Nlos,
    Blocked,
}

/// Received power with a flag for devices beyond the beam reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedPower<T> {
    pub watts: T,
    pub out_of_range: bool,
}

/// Free-space received power for the given link state.
pub fn received_power<T: Scalar>(
    d: T,
    state: LinkState,
    radio: &RadioParams<T>,
    deploy: &DeploymentParams<T>,
) -> ReceivedPower<T> {
    if d > deploy.reach() {
        return ReceivedPower {
            watts: T::zero(),
            out_of_range: true,
        };
    }
    let h = deploy.altitude;
    let los = radio.tx_power * antenna_gain(deploy.beam_half_angle) * radio.path_gain() / (h * h + d * d);
    let watts = match state {
        LinkState::Los => los,
        LinkState::Nlos => los * radio.nlos_gain,
        LinkState::Blocked => T::zero(),
    };
    ReceivedPower {
        watts,
        out_of_range: false,
    }
}

/// Spectral efficiency `log2(1 + min(snr, snr_max))`.
#[inline]
pub fn capped_shannon<T: Scalar>(snr: T, snr_max: T) -> T {
    (T::one() + snr.max(T::zero()).min(snr_max)).log2()
}

/// Averaging method for the cell spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    Quadrature,
    ClosedForm,
}

/// Channel seen by devices of one fleet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel<T> {
    pub crowd: CrowdParams<T>,
    pub radio: RadioParams<T>,
    pub deploy: DeploymentParams<T>,
}

impl<T: Scalar> Channel<T> {
    pub fn q_los(&self, d: T) -> Result<T> {
        q_los(d, &self.crowd, self.deploy.altitude)
    }

    pub fn q_nlos(&self, d: T) -> Result<T> {
        q_nlos(d, &self.crowd, self.deploy.altitude, self.deploy.beam_half_angle)
    }

    /// Uncapped SNR at distance `d` with LOS and NLOS contributions weighted by
    /// their probabilities.
    pub fn mean_snr(&self, d: T) -> Result<T> {
        let h = self.deploy.altitude;
        let base = self.radio.tx_power * self.radio.path_gain() * antenna_gain(self.deploy.beam_half_angle)
            / ((h * h + d * d) * self.radio.noise_power);
        Ok(base * (self.q_los(d)? + self.q_nlos(d)? * self.radio.nlos_gain))
    }

    /// SNR of a realised link state (zero when blocked or out of reach).
    pub fn link_snr(&self, d: T, state: LinkState) -> T {
        received_power(d, state, &self.radio, &self.deploy).watts / self.radio.noise_power
    }

    pub fn spectral_efficiency(&self, d: T) -> Result<T> {
        Ok(capped_shannon(self.mean_snr(d)?, self.radio.snr_max))
    }

    /// Spectral efficiency averaged over a disc of radius `cell_radius` with the
    /// uniform-device distance density `2x/r²`.
    pub fn avg_spectral_efficiency(&self, cell_radius: T, method: SpectralMethod) -> Result<T> {
        let reach = self.deploy.reach();
        if cell_radius > reach * (T::one() + T::tol(16.0)) {
            return Err(ModelError::OutOfReach {
                distance: cell_radius.as_f64(),
                reach: reach.as_f64(),
            });
        }
        if cell_radius <= T::zero() {
            return self.spectral_efficiency(T::zero());
        }
        match method {
            SpectralMethod::ClosedForm => self.spectral_efficiency(cell_radius * lit(2.0 / 3.0)),
            SpectralMethod::Quadrature => {
                // Validate the whole range once so the integrand can stay infallible.
                self.mean_snr(cell_radius)?;
                let r2 = cell_radius * cell_radius;
                let integrand = |x: T| {
                    let eta = self.spectral_efficiency(x).unwrap_or(T::zero());
                    eta * lit::<T>(2.0) * x / r2
                };
                Ok(quadrature::integrate(integrand, T::zero(), cell_radius, lit(1e-9)).value)
            }
        }
    }
}

/// Free-function form of [`Channel::avg_spectral_efficiency`].
pub fn avg_spectral_efficiency<T: Scalar>(
    cell_radius: T,
    crowd: &CrowdParams<T>,
    radio: &RadioParams<T>,
    deploy: &DeploymentParams<T>,
    method: SpectralMethod,
) -> Result<T> {
    Channel {
        crowd: *crowd,
        radio: *radio,
        deploy: *deploy,
    }
    .avg_spectral_efficiency(cell_radius, method)
}

/// Expected number of devices served by one AAP: `μ0·π·r²·share`.
pub fn devices_per_aap<T: Scalar>(device_density: T, cell_radius: T, share: T) -> T {
    device_density * T::PI() * cell_radius * cell_radius * share.max(T::zero())
}

/// Per-device throughput in Mbit/s under equal airtime sharing among `n_devices`.
pub fn group_throughput<T: Scalar>(bandwidth: T, eff_bw_factor: T, eta_bar: T, n_devices: T) -> T {
    bandwidth * eff_bw_factor * eta_bar / n_devices.max(T::one()) * lit(1e-6)
}
