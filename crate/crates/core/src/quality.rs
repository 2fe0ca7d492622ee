//! Customer taste, perceived quality, utility and demand in a vertically
//! differentiated market.
//!
//! Perceived quality follows the tariff law observed across operators,
//! `s(T) = T/(T+b) + c·T`, where the leading coefficient of the fitted law has
//! been absorbed into the taste parameter θ. All prices and θ_max are therefore
//! expressed in the rescaled unit system.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ModelError, Result};
use crate::scalar::{lit, Scalar};

/// `(b, c)` of the quality law and the upper taste bound θ_max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityParams<T> {
    /// Throughput offset in Mbit/s.
    pub b: T,
    /// Linear quality slope per Mbit/s.
    pub c: T,
    /// Maximum taste.
    pub theta_max: T,
}

impl<T: Scalar> QualityParams<T> {
    pub fn new(b: T, c: T, theta_max: T) -> Result<Self> {
        let q = Self { b, c, theta_max };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.b >= T::zero(), "b", "b >= 0")?;
        ensure(self.c >= T::zero(), "c", "c >= 0")?;
        ensure(self.theta_max > T::zero(), "theta_max", "theta_max > 0")
    }

    /// Quality at throughput `t`; negative throughput is treated as zero.
    #[inline]
    pub fn at(&self, t: T) -> T {
        let t = t.max(T::zero());
        if t == T::zero() {
            return T::zero();
        }
        t / (t + self.b) + self.c * t
    }

    pub fn taste(&self) -> TasteDistribution<T> {
        TasteDistribution::Uniform {
            theta_max: self.theta_max,
        }
    }
}

/// Perceived quality of throughput `t` (Mbit/s).
pub fn quality<T: Scalar>(t: T, q: &QualityParams<T>) -> Result<T> {
    if t < T::zero() || t.is_nan() {
        return Err(ModelError::NegativeThroughput(t.as_f64()));
    }
    Ok(q.at(t))
}

/// Throughput whose perceived quality equals `s`. Bisection on the strictly
/// increasing quality law.
pub fn inverse_quality<T: Scalar>(s: T, q: &QualityParams<T>) -> T {
    if s <= T::zero() {
        return T::zero();
    }
    let mut lo = T::zero();
    let mut hi = T::one();
    while q.at(hi) < s {
        hi = hi * lit(2.0);
        if hi > lit(1e300_f64.min(T::max_value().as_f64() / 4.0)) {
            return T::infinity();
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if q.at(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * lit(0.5)
}

/// `U = θ·s − p` for a known quality value.
#[inline]
pub fn utility_from_quality<T: Scalar>(theta: T, s: T, price: T) -> T {
    theta * s - price
}

/// `U = θ·s(T) − p`. Negative utility means the customer abstains.
pub fn utility<T: Scalar>(theta: T, throughput: T, price: T, q: &QualityParams<T>) -> Result<T> {
    ensure(theta >= T::zero(), "theta", "theta >= 0")?;
    Ok(utility_from_quality(theta, quality(throughput, q)?, price))
}

/// Taste distribution of the customer population. Only the uniform law is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TasteDistribution<T> {
    Uniform { theta_max: T },
}

impl<T: Scalar> TasteDistribution<T> {
    pub fn theta_max(&self) -> T {
        match *self {
            TasteDistribution::Uniform { theta_max } => theta_max,
        }
    }

    pub fn cdf(&self, theta: T) -> T {
        match *self {
            TasteDistribution::Uniform { theta_max } => crate::scalar::clamp(theta / theta_max, T::zero(), T::one()),
        }
    }

    /// Probability mass of `[lo, hi]`.
    pub fn mass(&self, lo: T, hi: T) -> T {
        (self.cdf(hi) - self.cdf(lo)).max(T::zero())
    }
}

/// Taste thresholds splitting the population between abstaining, LSP2 and LSP1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndifferencePoints<T> {
    /// Indifference between abstaining and buying from LSP2.
    pub theta_none_2: T,
    /// Indifference between LSP1 and LSP2.
    pub theta_1_2: T,
}

/// Indifference points for offers `(s1, p1)` and `(s2, p2)` with `s1 > s2 > 0`.
pub fn indifference_points<T: Scalar>(s1: T, s2: T, p1: T, p2: T) -> Result<IndifferencePoints<T>> {
    ensure(s2 > T::zero(), "s2", "s2 > 0")?;
    if s1 == s2 {
        return Err(ModelError::DegenerateDifferentiation(s1.as_f64()));
    }
    ensure(s1 > s2, "s1", "s1 > s2")?;
    Ok(IndifferencePoints {
        theta_none_2: p2 / s2,
        theta_1_2: (p1 - p2) / (s1 - s2),
    })
}

/// Demands `(D1, D2)` under uniform taste on `[0, θ_max]`.
///
/// Thresholds outside the taste support are clamped. Undifferentiated offers
/// (`s1 = s2`) are treated as a homogeneous product: the cheaper provider takes
/// every buyer and equal prices split the buyers evenly.
pub fn demands<T: Scalar>(s1: T, s2: T, p1: T, p2: T, theta_max: T) -> (T, T) {
    let taste = TasteDistribution::Uniform { theta_max };
    if s1 == s2 {
        if s1 <= T::zero() {
            return (T::zero(), T::zero());
        }
        let cheapest = p1.min(p2);
        let buyers = taste.mass(cheapest / s1, theta_max);
        return if p1 < p2 {
            (buyers, T::zero())
        } else if p2 < p1 {
            (T::zero(), buyers)
        } else {
            (buyers * lit(0.5), buyers * lit(0.5))
        };
    }
    let (hi_s, lo_s, hi_p, lo_p, swapped) = if s1 > s2 {
        (s1, s2, p1, p2, false)
    } else {
        (s2, s1, p2, p1, true)
    };
    if lo_s <= T::zero() {
        // Zero-quality offer attracts nobody.
        let d = taste.mass(hi_p / hi_s, theta_max);
        return if swapped { (T::zero(), d) } else { (d, T::zero()) };
    }
    let theta_12 = (hi_p - lo_p) / (hi_s - lo_s);
    let theta_none = lo_p / lo_s;
    let (d_hi, d_lo) = if theta_12 <= theta_none {
        // The cheaper-per-quality top offer captures every buyer.
        (taste.mass(hi_p / hi_s, theta_max), T::zero())
    } else {
        let d_hi = taste.mass(theta_12, theta_max);
        (d_hi, taste.mass(theta_none, theta_12).min(T::one() - d_hi))
    };
    if swapped {
        (d_lo, d_hi)
    } else {
        (d_hi, d_lo)
    }
}

/// Coefficients of the tariff law `p/T = a/(T+b) + c` and the correlation of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TariffFit<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub r_coefficient: T,
}

impl<T: Scalar> TariffFit<T> {
    /// Fitted price per unit throughput at `t`.
    pub fn price_per_unit(&self, t: T) -> T {
        self.a / (t + self.b) + self.c
    }

    /// Quality parameters after absorbing `a` into the taste scale.
    pub fn normalized_quality(&self, theta_max: T) -> QualityParams<T> {
        QualityParams {
            b: self.b,
            c: self.c / self.a,
            theta_max,
        }
    }
}

const TARIFF_GRID: usize = 256;

/// Least-squares fit of `p/T = a/(T+b) + c` with `b ∈ [0, max T]`.
///
/// For fixed `b` the model is linear in `(a, c)`, so the residual is profiled over
/// `b`: a multi-start grid brackets the global minimum, golden-section search
/// refines it.
pub fn fit_tariff<T: Scalar>(points: &[(T, T)]) -> Result<TariffFit<T>> {
    if points.len() < 3 {
        return Err(ModelError::FitFailure(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(t, y)| !(t > T::zero()) || !y.is_finite() || !t.is_finite())
    {
        return Err(ModelError::FitFailure(
            "throughput must be positive and values finite".into(),
        ));
    }
    let mut distinct: Vec<T> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(ModelError::FitFailure(
            "need at least 3 distinct throughput values".into(),
        ));
    }
    let t_max = *distinct.last().expect("non-empty");

    let profile = |b: T| -> Option<(T, T, T)> { linear_fit(points, b) };
    let sse = |b: T| profile(b).map(|r| r.2).unwrap_or(T::infinity());

    // Grid mixes linear and logarithmic spacing so small offsets are resolved.
    let mut grid: Vec<T> = Vec::with_capacity(2 * TARIFF_GRID + 1);
    grid.push(T::zero());
    let t_min = distinct[0];
    let log_lo = (t_min * lit(1e-6)).ln();
    let log_hi = t_max.ln();
    for k in 0..TARIFF_GRID {
        let f = lit::<T>(k as f64 / (TARIFF_GRID - 1) as f64);
        grid.push((log_lo + (log_hi - log_lo) * f).exp());
        grid.push(t_max * lit::<T>((k + 1) as f64 / TARIFF_GRID as f64));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.dedup();
    let values: Vec<T> = grid.iter().map(|&b| sse(b)).collect();
    let (best, _) =
        values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .fold(
                (usize::MAX, T::infinity()),
                |acc, (i, &v)| {
                    if v < acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                },
            );
    if best == usize::MAX {
        return Err(ModelError::FitFailure("degenerate data".into()));
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let b = golden_section(&sse, lo, hi, lit(1e-14));
    let b = if sse(b) <= values[best] { b } else { grid[best] };
    let (a, c, res) = profile(b).ok_or_else(|| ModelError::FitFailure("singular design".into()))?;

    let n = lit::<T>(points.len() as f64);
    let mean = points.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let tot = points.iter().fold(T::zero(), |s, p| s + (p.1 - mean) * (p.1 - mean));
    let r2 = if tot > T::zero() {
        T::one() - res / tot
    } else if res <= T::epsilon() {
        T::one()
    } else {
        T::zero()
    };
    Ok(TariffFit {
        a,
        b,
        c,
        r_coefficient: crate::scalar::clamp(r2, T::zero(), T::one()).sqrt(),
    })
}

/// Ordinary least squares of `y` on `1/(T+b)`; returns `(a, c, sse)`.
fn linear_fit<T: Scalar>(points: &[(T, T)], b: T) -> Option<(T, T, T)> {
    let n = lit::<T>(points.len() as f64);
    let (su, sy) = points.iter().fold((T::zero(), T::zero()), |(su, sy), &(t, y)| {
        (su + T::one() / (t + b), sy + y)
    });
    let (mu, my) = (su / n, sy / n);
    let (suu, suy) = points.iter().fold((T::zero(), T::zero()), |(suu, suy), &(t, y)| {
        let du = T::one() / (t + b) - mu;
        (suu + du * du, suy + du * (y - my))
    });
    if !(suu > T::epsilon() * mu * mu * n) {
        return None;
    }
    let a = suy / suu;
    let c = my - a * mu;
    let sse = points.iter().fold(T::zero(), |s, &(t, y)| {
        let r = y - (a / (t + b) + c);
        s + r * r
    });
    Some((a, c, sse))
}

fn golden_section<T: Scalar, F: Fn(T) -> T>(f: &F, mut lo: T, mut hi: T, tol: T) -> T {
    let inv_phi = lit::<T>(0.618_033_988_749_894_9);
    let mut x1 = hi - (hi - lo) * inv_phi;
    let mut x2 = lo + (hi - lo) * inv_phi;
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if (hi - lo) <= tol * (T::one() + lo.abs() + hi.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - (hi - lo) * inv_phi;
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + (hi - lo) * inv_phi;
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

#[derive(Debug, Deserialize)]
struct TariffRow {
    #[serde(rename = "T_mbps")]
    t_mbps: f64,
    price_per_unit: f64,
}

/// Reads tariff observations from CSV with columns `T_mbps,price_per_unit`.
pub fn read_tariff_csv<R: Read>(reader: R) -> std::result::Result<Vec<(f64, f64)>, csv::Error> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize::<TariffRow>()
        .map(|row| row.map(|r| (r.t_mbps, r.price_per_unit)))
        .collect()
}

pub fn read_tariff_file(path: &Path) -> std::result::Result<Vec<(f64, f64)>, csv::Error> {
    read_tariff_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table3() -> QualityParams<f64> {
        QualityParams::new(0.5619, 0.0098, 234.03).unwrap()
    }

    #[test]
    fn quality_values() {
        let q = table3();
        assert_eq!(quality(0.0, &q).unwrap(), 0.0);
        assert!((quality(100.0, &q).unwrap() - 1.97441).abs() < 5e-6);
        assert!(quality(200.0, &q).unwrap() > quality(100.0, &q).unwrap());
        assert!(matches!(quality(-1.0, &q), Err(ModelError::NegativeThroughput(_))));
    }

    #[test]
    fn inverse_quality_roundtrip() {
        let q = table3();
        for &t in &[0.01, 1.0, 57.0, 100.0, 5000.0] {
            let s = q.at(t);
            assert!((inverse_quality(s, &q) - t).abs() < 1e-9 * t.max(1.0));
        }
    }

    #[test]
    fn utility_values() {
        let q = table3();
        assert_eq!(utility(0.0, 100.0, 5.0, &q).unwrap(), -5.0);
        let u = utility(2.0, 100.0, 0.0, &q).unwrap();
        assert!((u - 3.94882).abs() < 1e-5);
        let s = q.at(100.0);
        assert!(utility_from_quality(5.0 / s, s, 5.0).abs() < 1e-12);
        assert!(utility(-1.0, 1.0, 1.0, &q).is_err());
    }

    #[test]
    fn indifference_at_unit_bertrand() {
        let pts = indifference_points(1.0_f64, 4.0 / 7.0, 0.25, 1.0 / 14.0).unwrap();
        assert!((pts.theta_none_2 - 0.125).abs() < 1e-12);
        assert!((pts.theta_1_2 - 0.4167).abs() < 5e-5);
    }

    #[test]
    fn indifference_equal_prices_and_degenerate() {
        let pts = indifference_points(2.0, 1.0, 0.3, 0.3).unwrap();
        assert_eq!(pts.theta_1_2, 0.0);
        assert!(matches!(
            indifference_points(1.0, 1.0, 0.2, 0.1),
            Err(ModelError::DegenerateDifferentiation(_))
        ));
    }

    #[test]
    fn demand_values_and_clamping() {
        let (d1, d2) = demands(1.0_f64, 4.0 / 7.0, 0.25, 1.0 / 14.0, 1.0);
        assert!((d1 - 0.5833).abs() < 5e-5);
        assert!((d2 - 0.2917).abs() < 5e-5);
        // θ_12 above θ_max leaves LSP1 without customers.
        let (d1, _) = demands(1.0, 0.5, 5.0, 0.1, 1.0);
        assert_eq!(d1, 0.0);
        // Low-quality offer priced out: the top offer serves everyone above p1/s1.
        let (d1, d2) = demands(1.0_f64, 0.5, 0.2, 0.3, 1.0);
        assert!((d1 - 0.8).abs() < 1e-12 && d2 == 0.0);
        // Homogeneous offers split evenly.
        let (a, b) = demands(1.0_f64, 1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0);
        assert!((a - 1.0 / 3.0).abs() < 1e-12 && (a - b).abs() < 1e-15);
    }

    #[test]
    fn tariff_roundtrip_recovers_dna_row() {
        let (a, b, c) = (12.36, 0.5619, 0.1216);
        let pts: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0]
            .iter()
            .map(|&t| (t, a / (t + b) + c))
            .collect();
        let fit = fit_tariff(&pts).unwrap();
        assert!((fit.a - a).abs() < 1e-6, "{fit:?}");
        assert!((fit.b - b).abs() < 1e-6, "{fit:?}");
        assert!((fit.c - c).abs() < 1e-6, "{fit:?}");
        assert!((fit.r_coefficient - 1.0).abs() < 1e-9);
        // Rescaled slope matches the quality parameter used in scenarios.
        let q = fit.normalized_quality(234.03);
        assert!((q.c - 0.0098).abs() < 5e-5);
    }

    #[test]
    fn tariff_rejects_underdetermined() {
        assert!(fit_tariff(&[(1.0, 2.0), (2.0, 1.5)]).is_err());
        assert!(fit_tariff(&[(1.0, 2.0), (1.0, 1.5), (1.0, 1.4)]).is_err());
        assert!(fit_tariff(&[(0.0, 2.0), (1.0, 1.5), (2.0, 1.4)]).is_err());
    }

    #[test]
    fn tariff_csv_ingestion() {
        let data = "T_mbps,price_per_unit\n1,10\n2,6.5\n4,4.2\n";
        let pts = read_tariff_csv(data.as_bytes()).unwrap();
        assert_eq!(pts, vec![(1.0, 10.0), (2.0, 6.5), (4.0, 4.2)]);
    }
}
