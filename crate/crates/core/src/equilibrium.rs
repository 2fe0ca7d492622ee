//! Initial two-stage game between the licensed providers: quality choice
//! followed by Bertrand price or Cournot quantity competition.
//!
//! Stage-two outcomes are obtained from the first-order conditions of
//! `Π_i = D_i (p_i − ν s_i)` under uniform taste. A brute-force grid oracle that
//! only uses the primitive demand and inverse-demand functions is provided for
//! independent verification.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, ModelError, Result};
use crate::quadrature;
use crate::quality::{demands, IndifferencePoints, QualityParams};
use crate::scalar::{lit, Scalar};

/// Economic parameters of the initial game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconParams<T> {
    pub s_max: T,
    pub theta_max: T,
    /// Provisioning cost per unit of quality and customer.
    pub nu: T,
}

impl<T: Scalar> EconParams<T> {
    pub fn new(s_max: T, theta_max: T, nu: T) -> Result<Self> {
        let e = Self { s_max, theta_max, nu };
        e.validate()?;
        Ok(e)
    }

    /// `s_max = s(T^m)` for the given quality law.
    pub fn from_quality(q: &QualityParams<T>, max_throughput: T, nu: T) -> Result<Self> {
        Self::new(q.at(max_throughput), q.theta_max, nu)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.s_max > T::zero(), "s_max", "s_max > 0")?;
        ensure(self.nu >= T::zero(), "nu", "nu >= 0")?;
        ensure(self.theta_max > self.nu, "theta_max", "theta_max > nu")
    }

    /// Fraction `(θ_max − ν)/θ_max` of the taste range that can ever be served.
    fn served(&self) -> T {
        (self.theta_max - self.nu) / self.theta_max
    }
}

/// Second-stage competition mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Bertrand,
    Cournot,
}

impl std::fmt::Display for Game {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Game::Bertrand => "bertrand",
            Game::Cournot => "cournot",
        })
    }
}

impl std::str::FromStr for Game {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bertrand" => Ok(Game::Bertrand),
            "cournot" => Ok(Game::Cournot),
            other => Err(format!("unknown game `{other}` (expected bertrand or cournot)")),
        }
    }
}

/// Equilibrium of the initial game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult<T> {
    pub game: Game,
    pub s1: T,
    pub s2: T,
    pub p1: T,
    pub p2: T,
    pub d1: T,
    pub d2: T,
    pub profit1: T,
    pub profit2: T,
    pub costs1: T,
    pub costs2: T,
    pub points: IndifferencePoints<T>,
    pub consumer_surplus: T,
}

impl<T: Scalar> EquilibriumResult<T> {
    /// Mass of customers buying from neither LSP.
    pub fn inactive(&self) -> T {
        (T::one() - self.d1 - self.d2).max(T::zero())
    }

    pub fn total_demand(&self) -> T {
        self.d1 + self.d2
    }

    pub fn market_profit(&self) -> T {
        self.profit1 + self.profit2
    }
}

/// Stage-two Bertrand prices for qualities `s1 > s2`.
pub fn bertrand_stage2_prices<T: Scalar>(s1: T, s2: T, econ: &EconParams<T>) -> Result<(T, T)> {
    if s1 == s2 {
        return Err(ModelError::DegenerateDifferentiation(s1.as_f64()));
    }
    ensure(s2 > T::zero() && s1 > s2, "s1", "s1 > s2 > 0")?;
    let (th, nu) = (econ.theta_max, econ.nu);
    let spread = s1 - s2;
    let m = lit::<T>(4.0) * s1 - s2;
    let p1 = s1 * (lit::<T>(2.0) * th * spread + nu * (lit::<T>(2.0) * s1 + s2)) / m;
    let p2 = s2 * (th * spread + lit::<T>(3.0) * nu * s1) / m;
    Ok((p1, p2))
}

/// Stage-two Bertrand profits `(Π1, Π2)` as functions of the qualities.
///
/// The roles swap when `s1 < s2`; identical qualities leave both at zero.
pub fn bertrand_profits<T: Scalar>(s1: T, s2: T, econ: &EconParams<T>) -> (T, T) {
    if s1 == s2 || s1 <= T::zero() || s2 <= T::zero() {
        return (T::zero(), T::zero());
    }
    let (hi, lo) = if s1 > s2 { (s1, s2) } else { (s2, s1) };
    let m = lit::<T>(4.0) * hi - lo;
    let k = (econ.theta_max - econ.nu) * (econ.theta_max - econ.nu) / (econ.theta_max * m * m);
    let spread = hi - lo;
    let top = lit::<T>(4.0) * hi * hi * spread * k;
    let bottom = hi * lo * spread * k;
    if s1 > s2 {
        (top, bottom)
    } else {
        (bottom, top)
    }
}

/// Bertrand equilibrium with `s1 = s_max` and `s2 = 4/7·s_max`.
pub fn solve_bertrand<T: Scalar>(econ: &EconParams<T>) -> Result<EquilibriumResult<T>> {
    econ.validate()?;
    let s1 = econ.s_max;
    let s2 = econ.s_max * lit(4.0 / 7.0);
    let (p1, p2) = bertrand_stage2_prices(s1, s2, econ)?;
    let (d1, d2) = demands(s1, s2, p1, p2, econ.theta_max);
    let costs1 = econ.nu * s1 * d1;
    let costs2 = econ.nu * s2 * d2;
    Ok(EquilibriumResult {
        game: Game::Bertrand,
        s1,
        s2,
        p1,
        p2,
        d1,
        d2,
        profit1: p1 * d1 - costs1,
        profit2: p2 * d2 - costs2,
        costs1,
        costs2,
        points: IndifferencePoints {
            theta_none_2: p2 / s2,
            theta_1_2: (p1 - p2) / (s1 - s2),
        },
        consumer_surplus: consumer_surplus(Game::Bertrand, s1, s2, econ),
    })
}

/// Stage-two Cournot outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CournotStage2<T> {
    pub d1: T,
    pub d2: T,
    pub p1: T,
    pub p2: T,
    pub profit1: T,
    pub profit2: T,
}

/// Stage-two Cournot quantities, prices and profits for `s1 ≥ s2 > 0`.
pub fn cournot_stage2<T: Scalar>(s1: T, s2: T, econ: &EconParams<T>) -> Result<CournotStage2<T>> {
    ensure(s2 > T::zero() && s1 >= s2, "s1", "s1 >= s2 > 0")?;
    let th = econ.theta_max;
    let m = lit::<T>(4.0) * s1 - s2;
    let k = econ.served().max(T::zero());
    let d1 = k * (lit::<T>(2.0) * s1 - s2) / m;
    let d2 = k * s1 / m;
    // At the optimum each margin equals θ·s_i·D_i.
    let p1 = econ.nu * s1 + th * s1 * d1;
    let p2 = econ.nu * s2 + th * s2 * d2;
    Ok(CournotStage2 {
        d1,
        d2,
        p1,
        p2,
        profit1: th * s1 * d1 * d1,
        profit2: th * s2 * d2 * d2,
    })
}

/// Cournot equilibrium with both qualities at `s_max`.
pub fn solve_cournot<T: Scalar>(econ: &EconParams<T>) -> Result<EquilibriumResult<T>> {
    econ.validate()?;
    let s = econ.s_max;
    let c = cournot_stage2(s, s, econ)?;
    let threshold = c.p2 / s;
    Ok(EquilibriumResult {
        game: Game::Cournot,
        s1: s,
        s2: s,
        p1: c.p1,
        p2: c.p2,
        d1: c.d1,
        d2: c.d2,
        profit1: c.profit1,
        profit2: c.profit2,
        costs1: econ.nu * s * c.d1,
        costs2: econ.nu * s * c.d2,
        points: IndifferencePoints {
            theta_none_2: threshold,
            theta_1_2: threshold,
        },
        consumer_surplus: consumer_surplus(Game::Cournot, s, s, econ),
    })
}

pub fn solve<T: Scalar>(game: Game, econ: &EconParams<T>) -> Result<EquilibriumResult<T>> {
    match game {
        Game::Bertrand => solve_bertrand(econ),
        Game::Cournot => solve_cournot(econ),
    }
}

/// Consumer surplus at the stage-two outcome for qualities `s1 ≥ s2`.
///
/// Closed forms of `∫ max(0, θ s_i − p_i) dθ / θ_max` with stage-two prices:
/// Bertrand `s1²(θ−ν)²(4s1+5s2) / (2θ(4s1−s2)²)`, Cournot
/// `s1(θ−ν)²(4s1²+s1s2−s2²) / (2θ(4s1−s2)²)`.
pub fn consumer_surplus<T: Scalar>(game: Game, s1: T, s2: T, econ: &EconParams<T>) -> T {
    let th = econ.theta_max;
    let gap = (th - econ.nu).max(T::zero());
    let m = lit::<T>(4.0) * s1 - s2;
    let denom = lit::<T>(2.0) * th * m * m;
    match game {
        Game::Bertrand => s1 * s1 * gap * gap * (lit::<T>(4.0) * s1 + lit::<T>(5.0) * s2) / denom,
        Game::Cournot => s1 * gap * gap * (lit::<T>(4.0) * s1 * s1 + s1 * s2 - s2 * s2) / denom,
    }
}

/// Consumer surplus by direct integration of the best available utility
/// `max(0, θ s1 − p1, θ s2 − p2)` over the taste distribution.
pub fn consumer_surplus_by_integration<T: Scalar>(s1: T, s2: T, p1: T, p2: T, theta_max: T) -> T {
    let best = |theta: T| (theta * s1 - p1).max(theta * s2 - p2).max(T::zero());
    let mut cuts = vec![T::zero(), theta_max];
    for c in [p1 / s1, p2 / s2, (p1 - p2) / (s1 - s2)] {
        if c.is_finite() && c > T::zero() && c < theta_max {
            cuts.push(c);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    let tol = T::epsilon() * theta_max * theta_max * (s1.abs() + s2.abs());
    let total = cuts
        .windows(2)
        .map(|w| quadrature::integrate(best, w[0], w[1], tol).value)
        .fold(T::zero(), |a, b| a + b);
    total / theta_max
}

/// Side-by-side text comparison of the two equilibria.
pub fn comparison_table<T: Scalar>(b: &EquilibriumResult<T>, c: &EquilibriumResult<T>) -> String {
    let rows: [(&str, T, T); 15] = [
        ("Quality of LSP1", b.s1, c.s1),
        ("Quality of LSP2", b.s2, c.s2),
        ("Point theta_none_2", b.points.theta_none_2, c.points.theta_none_2),
        ("Point theta_1_2", b.points.theta_1_2, c.points.theta_1_2),
        ("Profit of LSP1", b.profit1, c.profit1),
        ("Profit of LSP2", b.profit2, c.profit2),
        ("Aggregate profit", b.market_profit(), c.market_profit()),
        ("Price of LSP1", b.p1, c.p1),
        ("Price of LSP2", b.p2, c.p2),
        ("Costs of LSP1", b.costs1, c.costs1),
        ("Costs of LSP2", b.costs2, c.costs2),
        ("Demand of LSP1", b.d1, c.d1),
        ("Demand of LSP2", b.d2, c.d2),
        ("Total demand", b.total_demand(), c.total_demand()),
        ("Consumer surplus", b.consumer_surplus, c.consumer_surplus),
    ];
    let mut out = String::new();
    let _ = writeln!(out, "{:<20} {:>14} {:>14}", "", "Bertrand", "Cournot");
    for (name, vb, vc) in rows {
        let _ = writeln!(out, "{:<20} {:>14.6} {:>14.6}", name, vb.as_f64(), vc.as_f64());
    }
    out
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Fixed point found by the grid oracle. `a1`, `a2` are prices (Bertrand) or
/// market shares (Cournot).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome<T> {
    pub game: Game,
    pub s1: T,
    pub s2: T,
    pub a1: T,
    pub a2: T,
    pub profit1: T,
    pub profit2: T,
    /// Best-response sweeps needed at the quality and action stages.
    pub sweeps: (usize, usize),
}

const MAX_SWEEPS: usize = 10_000;

/// Profits of both LSPs for a given action profile.
pub fn action_profits<T: Scalar>(game: Game, s: [T; 2], a: [T; 2], econ: &EconParams<T>) -> [T; 2] {
    let th = econ.theta_max;
    let (d, p) = match game {
        Game::Bertrand => {
            let (d1, d2) = demands(s[0], s[1], a[0], a[1], th);
            ([d1, d2], a)
        }
        Game::Cournot => {
            // Inverse demand: the higher-quality provider serves the top of the
            // taste range, the other one the slice just below it.
            let (hi, lo) = if s[0] >= s[1] { (0, 1) } else { (1, 0) };
            let mut p = [T::zero(); 2];
            p[lo] = th * s[lo] * (T::one() - a[0] - a[1]);
            p[hi] = th * (s[hi] * (T::one() - a[hi]) - s[lo] * a[lo]);
            (a, p)
        }
    };
    [d[0] * (p[0] - econ.nu * s[0]), d[1] * (p[1] - econ.nu * s[1])]
}

fn golden_max<T: Scalar, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T) -> T {
    let inv_phi = lit::<T>((5f64.sqrt() - 1.0) / 2.0);
    let tol = T::epsilon().sqrt() * lit(0.1) * (hi - lo).max(T::min_positive_value());
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = (lo + hi) * lit(0.5);
    // Profits are concave but may be flat at zero; compare against the ends too.
    [lo, mid, hi]
        .into_iter()
        .fold((mid, f(mid)), |best, x| {
            let v = f(x);
            if v > best.1 {
                (x, v)
            } else {
                best
            }
        })
        .0
}

/// Continuous stage-two equilibrium found numerically by alternating best
/// responses (golden-section search on each player's own action).
pub fn numeric_stage2<T: Scalar>(game: Game, s1: T, s2: T, econ: &EconParams<T>) -> ([T; 2], [T; 2]) {
    let s = [s1, s2];
    let th = econ.theta_max;
    if game == Game::Bertrand && s1 == s2 {
        // Homogeneous offers: undercutting drives both prices to cost.
        let a = [econ.nu * s1, econ.nu * s2];
        return (a, action_profits(game, s, a, econ));
    }
    let mut a = match game {
        // Starting from cost avoids the slow undercutting cascade that high
        // initial prices trigger when the qualities are nearly equal.
        Game::Bertrand => [econ.nu * s1, econ.nu * s2],
        Game::Cournot => [lit(0.25), lit(0.25)],
    };
    let scale = match game {
        Game::Bertrand => th * s1.max(s2),
        Game::Cournot => T::one(),
    };
    for _ in 0..200 {
        let prev = a;
        for i in 0..2 {
            let (lo, hi) = match game {
                Game::Bertrand => (econ.nu * s[i], th * s[i]),
                Game::Cournot => (T::zero(), (T::one() - a[1 - i]).max(T::zero())),
            };
            let own = |x: T| {
                let mut trial = a;
                trial[i] = x;
                action_profits(game, s, trial, econ)[i]
            };
            a[i] = if hi > lo { golden_max(own, lo, hi) } else { lo };
        }
        let change = (a[0] - prev[0]).abs().max((a[1] - prev[1]).abs());
        // Golden-section search resolves a smooth maximum to about sqrt(eps).
        if change <= scale * T::epsilon().sqrt() * lit(1e-2) {
            break;
        }
    }
    (a, action_profits(game, s, a, econ))
}

fn grid_argmax<T: Scalar, F: Fn(T) -> T + Sync>(grid: &[T], f: F) -> usize {
    let values: Vec<T> = grid.par_iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn best_response_fixed_point<T: Scalar, F: Fn(usize, [T; 2]) -> T + Sync>(
    grid: &[T],
    start: [usize; 2],
    payoff: F,
) -> Result<([usize; 2], usize)> {
    let mut idx = start;
    for sweep in 1..=MAX_SWEEPS {
        let prev = idx;
        for i in 0..2 {
            let other = idx;
            idx[i] = grid_argmax(grid, |x| {
                let mut a = [grid[other[0]], grid[other[1]]];
                a[i] = x;
                payoff(i, a)
            });
        }
        if idx == prev {
            return Ok((idx, sweep));
        }
    }
    Err(ModelError::NoFixedPoint)
}

/// Exhaustive best-response iteration over finite grids.
///
/// Qualities are chosen on `s_grid` against the continuous stage-two outcome
/// (see [`numeric_stage2`]); the stage-two actions are then chosen on
/// `action_grid` at the selected qualities. Ties go to the lowest grid index.
pub fn grid_oracle<T: Scalar>(
    game: Game,
    s_grid: &[T],
    action_grid: &[T],
    econ: &EconParams<T>,
) -> Result<OracleOutcome<T>> {
    ensure(!s_grid.is_empty(), "s_grid", "non-empty grid")?;
    ensure(!action_grid.is_empty(), "action_grid", "non-empty grid")?;
    let (s_idx, quality_sweeps) = best_response_fixed_point(s_grid, [s_grid.len() - 1, 0], |i, s| {
        numeric_stage2(game, s[0], s[1], econ).1[i]
    })?;
    let s = [s_grid[s_idx[0]], s_grid[s_idx[1]]];
    let (a_idx, action_sweeps) =
        best_response_fixed_point(action_grid, [0, 0], |i, a| action_profits(game, s, a, econ)[i])?;
    let a = [action_grid[a_idx[0]], action_grid[a_idx[1]]];
    let profits = action_profits(game, s, a, econ);
    Ok(OracleOutcome {
        game,
        s1: s[0],
        s2: s[1],
        a1: a[0],
        a2: a[1],
        profit1: profits[0],
        profit2: profits[1],
        sweeps: (quality_sweeps, action_sweeps),
    })
}

/// Evenly spaced grid `lo, lo+step, …` up to and including `hi`.
pub fn uniform_grid<T: Scalar>(lo: T, hi: T, step: T) -> Vec<T> {
    let n = ((hi - lo) / step).round().to_usize().unwrap_or(0);
    (0..=n).map(|k| lo + step * lit(k as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(nu: f64) -> EconParams<f64> {
        EconParams::new(1.0, 1.0, nu).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bertrand_unit_column() {
        let r = solve_bertrand(&unit(0.0)).unwrap();
        assert!(close(r.s2, 0.5714, 5e-5));
        assert!(close(r.p1, 0.25, 1e-12));
        assert!(close(r.p2, 1.0 / 14.0, 1e-12));
        assert!(close(r.d1, 0.5833, 5e-5));
        assert!(close(r.d2, 0.2917, 5e-5));
        assert!(close(r.profit1, 0.1458, 5e-5));
        assert!(close(r.profit2, 0.0208, 5e-5));
        assert!(close(r.points.theta_none_2, 0.125, 1e-12));
        assert!(close(r.points.theta_1_2, 0.4167, 5e-5));
        assert!(close(r.total_demand(), 0.875, 1e-12));
    }

    #[test]
    fn bertrand_with_cost() {
        let nu = 0.1;
        let r = solve_bertrand(&unit(nu)).unwrap();
        let k = 1.0 - nu;
        assert!(close(r.p1, 0.25 * (3.0 * nu + 1.0), 1e-12));
        assert!(close(r.p2, (7.0 * nu + 1.0) / 14.0, 1e-12));
        assert!(close(r.d1, 7.0 / 12.0 * k, 1e-12));
        assert!(close(r.d2, 7.0 / 24.0 * k, 1e-12));
        assert!(close(r.profit1, 7.0 / 48.0 * k * k, 1e-12));
        assert!(close(r.profit2, k * k / 48.0, 1e-12));
        assert!(close(r.costs2, nu * k / 6.0, 1e-12));
        assert!(close(r.points.theta_none_2, 0.875 * nu + 0.125, 1e-12));
        let (b1, b2) = bertrand_profits(r.s1, r.s2, &unit(nu));
        assert!(close(b1, r.profit1, 1e-14) && close(b2, r.profit2, 1e-14));
    }

    #[test]
    fn bertrand_prices_reject_degenerate() {
        assert!(matches!(
            bertrand_stage2_prices(1.0, 1.0, &unit(0.0)),
            Err(ModelError::DegenerateDifferentiation(_))
        ));
        assert!(bertrand_stage2_prices(0.5, 1.0, &unit(0.0)).is_err());
    }

    #[test]
    fn zero_margin_at_cost_bound() {
        let econ = EconParams {
            s_max: 1.0,
            theta_max: 1.0,
            nu: 1.0,
        };
        let (p1, p2) = bertrand_stage2_prices(1.0, 0.5, &econ).unwrap();
        let (d1, d2) = demands(1.0, 0.5, p1, p2, 1.0);
        assert_eq!((d1, d2), (0.0, 0.0));
        let c = cournot_stage2(1.0, 1.0, &econ).unwrap();
        assert_eq!((c.d1, c.d2), (0.0, 0.0));
    }

    #[test]
    fn cournot_unit_column() {
        let r = solve_cournot(&unit(0.0)).unwrap();
        for v in [r.d1, r.d2, r.p1, r.p2, r.points.theta_1_2, r.points.theta_none_2] {
            assert!(close(v, 1.0 / 3.0, 1e-12));
        }
        assert!(close(r.profit1, 1.0 / 9.0, 1e-12));
        assert!(close(r.market_profit(), 0.2222, 5e-5));
        let b = solve_bertrand(&unit(0.0)).unwrap();
        assert!(r.market_profit() > b.market_profit());
    }

    #[test]
    fn cournot_generic_matches_inverse_demand() {
        let econ = EconParams::new(2.0, 1.0, 0.1).unwrap();
        let c = cournot_stage2(2.0, 1.0, &econ).unwrap();
        let pr = action_profits(Game::Cournot, [2.0, 1.0], [c.d1, c.d2], &econ);
        assert!(close(pr[0], c.profit1, 1e-12) && close(pr[1], c.profit2, 1e-12));
        // p2 carries the cost term scaled by s2.
        let expected_p2 = (1.0 * 2.0 * 1.0 + 0.1 * 1.0 * (3.0 * 2.0 - 1.0)) / 7.0;
        assert!(close(c.p2, expected_p2, 1e-12));
    }

    #[test]
    fn surplus_closed_forms_match_integration() {
        for nu in [0.0, 0.1, 0.5] {
            let econ = unit(nu);
            let b = solve_bertrand(&econ).unwrap();
            let direct = consumer_surplus_by_integration(b.s1, b.s2, b.p1, b.p2, 1.0);
            assert!(close(b.consumer_surplus, direct, 1e-8 * direct), "{nu}");
            assert!(close(b.consumer_surplus, 7.0 / 24.0 * (1.0 - nu).powi(2), 1e-12));
            let c = solve_cournot(&econ).unwrap();
            let direct = consumer_surplus_by_integration(c.s1, c.s2, c.p1, c.p2, 1.0);
            assert!(close(c.consumer_surplus, direct, 1e-8 * direct));
            assert!(b.consumer_surplus > c.consumer_surplus);
        }
        let econ = EconParams::new(1.5, 2.0, 0.3).unwrap();
        let c = cournot_stage2(1.5, 0.9, &econ).unwrap();
        let direct = consumer_surplus_by_integration(1.5, 0.9, c.p1, c.p2, 2.0);
        assert!(close(consumer_surplus(Game::Cournot, 1.5, 0.9, &econ), direct, 1e-10));
        let (p1, p2) = bertrand_stage2_prices(1.5, 0.9, &econ).unwrap();
        let direct = consumer_surplus_by_integration(1.5, 0.9, p1, p2, 2.0);
        assert!(close(consumer_surplus(Game::Bertrand, 1.5, 0.9, &econ), direct, 1e-10));
    }

    #[test]
    fn surplus_vanishes_at_cost_bound() {
        let econ = EconParams {
            s_max: 1.0,
            theta_max: 1.0,
            nu: 1.0,
        };
        assert_eq!(consumer_surplus(Game::Bertrand, 1.0, 4.0 / 7.0, &econ), 0.0);
        assert_eq!(consumer_surplus(Game::Cournot, 1.0, 1.0, &econ), 0.0);
    }

    #[test]
    fn numeric_stage2_matches_closed_form() {
        let econ = EconParams::new(2.0, 1.0, 0.1).unwrap();
        let (a, _) = numeric_stage2(Game::Bertrand, 2.0, 1.0, &econ);
        let (p1, p2) = bertrand_stage2_prices(2.0, 1.0, &econ).unwrap();
        assert!(close(a[0], p1, 1e-7) && close(a[1], p2, 1e-7), "{a:?} vs {p1} {p2}");
        let (a, _) = numeric_stage2(Game::Cournot, 2.0, 1.0, &econ);
        let c = cournot_stage2(2.0, 1.0, &econ).unwrap();
        assert!(close(a[0], c.d1, 1e-7) && close(a[1], c.d2, 1e-7));
    }

    #[test]
    fn price_grid_oracle_generic_point() {
        let econ = EconParams::new(2.0, 1.0, 0.1).unwrap();
        let grid = uniform_grid(0.0, 2.0, 1e-4);
        let out = grid_oracle(Game::Bertrand, &[2.0], &grid, &econ);
        // A single-point quality grid forces s1 = s2; use a two-point grid instead.
        assert!(out.is_ok());
        let s_grid = [1.0, 2.0];
        let out = grid_oracle(Game::Bertrand, &s_grid, &grid, &econ).unwrap();
        let (p1, p2) = bertrand_stage2_prices(out.s1, out.s2, &econ).unwrap();
        assert_eq!((out.s1, out.s2), (2.0, 1.0));
        assert!(close(out.a1, p1, 1e-4) && close(out.a2, p2, 1e-4), "{out:?}");

        let d_grid = uniform_grid(0.0, 1.0, 1e-4);
        let c = cournot_stage2(2.0, 1.0, &econ).unwrap();
        let pr = |d: [f64; 2]| action_profits(Game::Cournot, [2.0, 1.0], d, &econ);
        let fixed = best_response_fixed_point(&d_grid, [0, 0], |i, a| pr(a)[i]).unwrap().0;
        assert!(close(d_grid[fixed[0]], c.d1, 1e-4) && close(d_grid[fixed[1]], c.d2, 1e-4));
    }

    #[test]
    fn single_point_grids_return_that_point() {
        let econ = unit(0.0);
        let out = grid_oracle(Game::Cournot, &[1.0], &[0.3], &econ).unwrap();
        assert_eq!((out.s1, out.s2, out.a1, out.a2), (1.0, 1.0, 0.3, 0.3));
        assert!(grid_oracle(Game::Cournot, &[], &[0.3], &econ).is_err());
    }

    #[test]
    fn scaling_identities() {
        let base = EconParams::new(1.25, 3.0, 0.4).unwrap();
        let scaled_s = EconParams { s_max: 2.5, ..base };
        let scaled_tn = EconParams {
            theta_max: 6.0,
            nu: 0.8,
            ..base
        };
        for game in [Game::Bertrand, Game::Cournot] {
            let r = solve(game, &base).unwrap();
            let rs = solve(game, &scaled_s).unwrap();
            assert_eq!(rs.p1, 2.0 * r.p1);
            assert_eq!(rs.profit2, 2.0 * r.profit2);
            assert_eq!(rs.consumer_surplus, 2.0 * r.consumer_surplus);
            assert_eq!(rs.d1, r.d1);
            let rt = solve(game, &scaled_tn).unwrap();
            assert_eq!(rt.d1, r.d1);
            assert_eq!(rt.d2, r.d2);
            assert_eq!(rt.points.theta_1_2 / 6.0, r.points.theta_1_2 / 3.0);
        }
    }

    #[test]
    fn game_parsing() {
        assert_eq!("Bertrand".parse::<Game>().unwrap(), Game::Bertrand);
        assert!("auction".parse::<Game>().is_err());
        assert_eq!(serde_json::to_string(&Game::Cournot).unwrap(), "\"cournot\"");
    }
}
