//! Short-term market evolution after the unlicensed provider (USP) enters.
//!
//! The state holds the USP-connected shares `y0` (previously inactive), `y1`,
//! `y2` (LSP subscribers) and, under cooperation, `z1`, `z2` (LSP subscribers
//! that would otherwise be served by the partner's proxy AAPs), plus the USP
//! price `p0`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{EquilibriumResult, Game};
use crate::error::{ensure, ModelError, Result};
use crate::geometry::group_throughput;
use crate::quality::QualityParams;
use crate::scalar::{lit, Scalar};

/// Behavioural rates and coefficients of the customer revision process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorFactors<T> {
    /// Revision rate (1/min).
    pub xi: T,
    pub gamma: T,
    pub alpha_c: T,
    pub delta: T,
    /// Impatience coefficient of the switching logistic.
    pub c_u: T,
    /// USP price-update coefficient.
    pub c_price: T,
}

impl<T: Scalar> BehaviorFactors<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        ensure(self.xi >= T::zero(), "xi", "xi >= 0")?;
        ensure(unit(self.gamma), "gamma", "0 <= gamma <= 1")?;
        ensure(unit(self.alpha_c), "alpha_c", "0 <= alpha_c <= 1")?;
        ensure(unit(self.delta), "delta", "0 <= delta <= 1")?;
        ensure(self.c_u >= T::zero(), "c_u", "c_u >= 0")?;
        ensure(self.c_price >= T::zero(), "c_price", "c_price >= 0")
    }
}

/// How taste-averaged switching probabilities are normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TasteAveraging {
    /// Divide by the width of the group's taste interval: the mean switching
    /// probability of a group member.
    #[default]
    Group,
    /// Divide by θ_max: the group integral weighted by the population density.
    Population,
}

/// `2/(1 + e^{−c_u ΔU}) − 1`, i.e. `tanh(c_u ΔU / 2)`.
#[inline]
pub fn switch_probability<T: Scalar>(delta_u: T, c_u: T) -> T {
    (c_u * delta_u * lit(0.5)).tanh()
}

// Below this value of |k|·(hi − lo) the antiderivative difference loses digits
// and an 8-point Gauss–Legendre rule is used instead.
const SMALL_SLOPE: f64 = 1e-2;

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `ln cosh(u)` without overflow.
#[inline]
fn ln_cosh<T: Scalar>(u: T) -> T {
    let a = u.abs();
    a + (lit::<T>(-2.0) * a).exp().ln_1p() - T::LN_2()
}

/// `ln cosh(a) − ln cosh(b)` given `a − b = diff` computed separately.
fn ln_cosh_diff<T: Scalar>(a: T, b: T, diff: T) -> T {
    if (a >= T::zero()) == (b >= T::zero()) {
        let linear = if a >= T::zero() { diff } else { -diff };
        let tail = |u: T| (lit::<T>(-2.0) * u.abs()).exp().ln_1p();
        linear + (tail(a) - tail(b))
    } else {
        ln_cosh(a) - ln_cosh(b)
    }
}

/// `(1/θ_max) ∫_lo^hi [2/(1 + e^{−(kθ − offset)}) − 1] dθ`.
///
/// With `k = c_u Δs` and `offset = c_u Δp` this is the taste average of the
/// switching probability. Empty intervals give zero; over an interval on which
/// the integrand is non-negative the result lies in `[0, (hi − lo)/θ_max]`.
pub fn logistic_mean_integral<T: Scalar>(lo: T, hi: T, k: T, offset: T, theta_max: T) -> T {
    if !(hi > lo) {
        return T::zero();
    }
    let width = hi - lo;
    let half = lit::<T>(0.5);
    let integral = if k.abs() * width < lit(SMALL_SLOPE) {
        let mid = (lo + hi) * half;
        let radius = width * half;
        let f = |theta: T| ((k * theta - offset) * half).tanh();
        let mut acc = T::zero();
        for (&x, &w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            let dx = radius * lit(x);
            acc = acc + lit::<T>(w) * (f(mid - dx) + f(mid + dx));
        }
        acc * radius
    } else {
        let a = (k * hi - offset) * half;
        let b = (k * lo - offset) * half;
        lit::<T>(2.0) / k * ln_cosh_diff(a, b, k * width * half)
    };
    integral / theta_max
}

/// Experienced quality levels of the three services.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceQualities<T> {
    pub s0: T,
    pub s1: T,
    pub s2: T,
}

/// The ten taste-averaged transition coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QCoefficients<T> {
    pub q_g_1to0: T,
    pub q_g_2to0: T,
    pub q_g_0to1: T,
    pub q_g_0to2: T,
    pub q_d_1to0: T,
    pub q_d_2to0: T,
    pub q_d_0to1: T,
    pub q_d_0to2: T,
    pub q_none_to0: T,
    pub q_0tonone: T,
}

impl<T: Scalar> QCoefficients<T> {
    pub fn as_array(&self) -> [T; 10] {
        [
            self.q_g_1to0,
            self.q_g_2to0,
            self.q_g_0to1,
            self.q_g_0to2,
            self.q_d_1to0,
            self.q_d_2to0,
            self.q_d_0to1,
            self.q_d_0to2,
            self.q_none_to0,
            self.q_0tonone,
        ]
    }

    pub const NAMES: [&'static str; 10] = [
        "q_g_1to0",
        "q_g_2to0",
        "q_g_0to1",
        "q_g_0to2",
        "q_d_1to0",
        "q_d_2to0",
        "q_d_0to1",
        "q_d_0to2",
        "q_none_to0",
        "q_0tonone",
    ];
}

/// Taste interval `[lo, hi]` of a customer group fixed by the initial game.
/// Group 0 is the initially inactive population.
pub fn group_interval<T: Scalar>(game: Game, eq: &EquilibriumResult<T>, theta_max: T, group: usize) -> (T, T) {
    let fit = |v: T| v.max(T::zero()).min(theta_max);
    let none2 = fit(eq.points.theta_none_2);
    let one2 = fit(eq.points.theta_1_2);
    match (game, group) {
        (_, 0) => (T::zero(), none2),
        (Game::Bertrand, 1) => (one2, theta_max),
        (Game::Bertrand, 2) => (none2, one2),
        (Game::Cournot, _) => (none2, theta_max),
        _ => panic!("group index must be 0, 1 or 2"),
    }
}

/// Taste interval on which `θ·ds − dp > 0`, intersected with `[lo, hi]`.
pub fn gain_interval<T: Scalar>(ds: T, dp: T, lo: T, hi: T) -> Option<(T, T)> {
    let (a, b) = if ds > T::zero() {
        (lo.max(dp / ds), hi)
    } else if ds < T::zero() {
        (lo, hi.min(dp / ds))
    } else if dp < T::zero() {
        (lo, hi)
    } else {
        return None;
    };
    (b > a).then_some((a, b))
}

/// Averaged switching probability for a utility gain `θ·ds − dp` over the group
/// interval `[lo, hi]`.
pub fn gain_average<T: Scalar>(ds: T, dp: T, (lo, hi): (T, T), c_u: T, theta_max: T, averaging: TasteAveraging) -> T {
    let norm = match averaging {
        TasteAveraging::Population => theta_max,
        TasteAveraging::Group => hi - lo,
    };
    if !(norm > T::zero()) {
        return T::zero();
    }
    match gain_interval(ds, dp, lo, hi) {
        Some((a, b)) => {
            let v = logistic_mean_integral(a, b, c_u * ds, c_u * dp, norm);
            v.max(T::zero()).min(T::one())
        }
        None => T::zero(),
    }
}

/// All ten transition coefficients for the current experienced qualities and
/// USP price. Announced qualities and LSP prices come from the equilibrium.
pub fn transition_coefficients<T: Scalar>(
    game: Game,
    eq: &EquilibriumResult<T>,
    current: &ServiceQualities<T>,
    p0: T,
    c_u: T,
    theta_max: T,
    averaging: TasteAveraging,
) -> QCoefficients<T> {
    let g1 = group_interval(game, eq, theta_max, 1);
    let g2 = group_interval(game, eq, theta_max, 2);
    let g0 = group_interval(game, eq, theta_max, 0);
    let avg = |ds: T, dp: T, g: (T, T)| gain_average(ds, dp, g, c_u, theta_max, averaging);
    let s0 = current.s0;
    QCoefficients {
        q_g_1to0: avg(s0 - current.s1, p0 - eq.p1, g1),
        q_g_2to0: avg(s0 - current.s2, p0 - eq.p2, g2),
        q_g_0to1: avg(current.s1 - s0, eq.p1 - p0, g1),
        q_g_0to2: avg(current.s2 - s0, eq.p2 - p0, g2),
        q_d_1to0: avg(eq.s1 - current.s1, T::zero(), g1),
        q_d_2to0: avg(eq.s2 - current.s2, T::zero(), g2),
        q_d_0to1: avg(eq.s1 - s0, eq.p1 - p0, g1),
        q_d_0to2: avg(eq.s2 - s0, eq.p2 - p0, g2),
        q_none_to0: avg(s0, p0, g0),
        q_0tonone: avg(-s0, -p0, g0),
    }
}

/// Capacity of one provider's service: effective rate per AAP and the number
/// of devices per AAP per unit of market share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceLink<T> {
    /// Effective bandwidth (Hz).
    pub bandwidth: T,
    /// Average spectral efficiency (bit/s/Hz).
    pub eta_bar: T,
    /// `μ0·π·r²`: devices per AAP when the whole population is on this service.
    pub devices_per_share: T,
}

impl<T: Scalar> ServiceLink<T> {
    /// Per-device throughput (Mbit/s) when a `share` of the population is served.
    pub fn throughput(&self, share: T) -> T {
        group_throughput(
            self.bandwidth,
            T::one(),
            self.eta_bar,
            self.devices_per_share * share.max(T::zero()),
        )
    }
}

/// Cooperative (proxy AAP) setting between the two LSPs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoopLinks<T> {
    /// Probability that a customer's nearest AAP belongs to the partner LSP.
    pub epsilon: T,
    /// Own-AAP service of each LSP in the combined deployment.
    pub own: [ServiceLink<T>; 2],
    /// Service of LSP-i customers by the partner's AAPs: partner bandwidth and
    /// load model, LSP i's spectral efficiency.
    pub proxy: [ServiceLink<T>; 2],
}

/// Market state; `z1 = z2 = 0` without cooperation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MarketState<T> {
    pub y0: T,
    pub y1: T,
    pub y2: T,
    pub z1: T,
    pub z2: T,
    pub p0: T,
}

/// Cooperative state; same layout as [`MarketState`].
pub type CoopState<T> = MarketState<T>;

impl<T: Scalar> MarketState<T> {
    pub fn initial(p0: T) -> Self {
        Self {
            y0: T::zero(),
            y1: T::zero(),
            y2: T::zero(),
            z1: T::zero(),
            z2: T::zero(),
            p0,
        }
    }

    /// Total USP share.
    pub fn usp_share(&self) -> T {
        self.y0 + self.y1 + self.y2 + self.z1 + self.z2
    }

    pub fn to_array(&self) -> [T; 6] {
        [self.y0, self.y1, self.y2, self.z1, self.z2, self.p0]
    }

    pub fn from_array(v: [T; 6]) -> Self {
        Self {
            y0: v[0],
            y1: v[1],
            y2: v[2],
            z1: v[3],
            z2: v[4],
            p0: v[5],
        }
    }
}

/// Per-group throughputs (Mbit/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughputs<T> {
    pub t0: T,
    pub t1: T,
    pub t2: T,
    /// Proxy-served throughput of LSP-i customers (equals `t_i` without cooperation).
    pub tz1: T,
    pub tz2: T,
}

/// Complete description of the dynamic stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketModel<T> {
    pub game: Game,
    pub equilibrium: EquilibriumResult<T>,
    pub quality: QualityParams<T>,
    pub behavior: BehaviorFactors<T>,
    pub averaging: TasteAveraging,
    pub usp: ServiceLink<T>,
    pub lsp: [ServiceLink<T>; 2],
    pub coop: Option<CoopLinks<T>>,
}

impl<T: Scalar> MarketModel<T> {
    pub fn theta_max(&self) -> T {
        self.quality.theta_max
    }

    /// Demands `(D0, D1, D2)` fixed by the initial game.
    pub fn demands(&self) -> [T; 3] {
        [self.equilibrium.inactive(), self.equilibrium.d1, self.equilibrium.d2]
    }

    /// `y(0) = 0`, `p0(0) = p2/2`.
    pub fn initial_state(&self) -> MarketState<T> {
        MarketState::initial(self.equilibrium.p2 * lit(0.5))
    }

    fn epsilon(&self) -> T {
        self.coop.map_or(T::zero(), |c| c.epsilon)
    }

    /// Active (still subscribed and not on the USP) shares of the two LSPs.
    pub fn lsp_active(&self, s: &MarketState<T>) -> [T; 2] {
        let d = self.demands();
        [(d[1] - s.y1 - s.z1).max(T::zero()), (d[2] - s.y2 - s.z2).max(T::zero())]
    }

    pub fn throughputs(&self, s: &MarketState<T>) -> Throughputs<T> {
        let t0 = self.usp.throughput(s.usp_share());
        let active = self.lsp_active(s);
        match &self.coop {
            None => {
                let t1 = self.lsp[0].throughput(active[0]);
                let t2 = self.lsp[1].throughput(active[1]);
                Throughputs {
                    t0,
                    t1,
                    t2,
                    tz1: t1,
                    tz2: t2,
                }
            }
            Some(c) => {
                // LSP i's AAPs carry its own nearest customers and the partner's
                // customers that are closer to them.
                let e = c.epsilon;
                let load = |i: usize| (T::one() - e) * active[i] + e * active[1 - i];
                let (l1, l2) = (load(0), load(1));
                Throughputs {
                    t0,
                    t1: c.own[0].throughput(l1),
                    t2: c.own[1].throughput(l2),
                    tz1: c.proxy[0].throughput(l2),
                    tz2: c.proxy[1].throughput(l1),
                }
            }
        }
    }

    /// Plain and proxy-based coefficients at the given state.
    pub fn coefficients(&self, s: &MarketState<T>) -> (QCoefficients<T>, QCoefficients<T>) {
        let t = self.throughputs(s);
        let q = &self.quality;
        let s0 = q.at(t.t0);
        let plain = ServiceQualities {
            s0,
            s1: q.at(t.t1),
            s2: q.at(t.t2),
        };
        let coef = |cur: &ServiceQualities<T>| {
            transition_coefficients(
                self.game,
                &self.equilibrium,
                cur,
                s.p0,
                self.behavior.c_u,
                self.theta_max(),
                self.averaging,
            )
        };
        let plain_q = coef(&plain);
        let proxy_q = if self.coop.is_some() {
            coef(&ServiceQualities {
                s0,
                s1: q.at(t.tz1),
                s2: q.at(t.tz2),
            })
        } else {
            plain_q
        };
        (plain_q, proxy_q)
    }

    /// Time derivative of `(y0, y1, y2, z1, z2, p0)`.
    pub fn derivative(&self, s: &MarketState<T>) -> [T; 6] {
        let b = &self.behavior;
        let d = self.demands();
        let (q, qt) = self.coefficients(s);
        let eps = self.epsilon();
        let usp = s.usp_share().max(T::zero());
        let active = self.lsp_active(s);
        let curiosity = b.xi * b.alpha_c * (T::one() - b.gamma);
        let gossip = b.xi * b.gamma;
        let dissat = b.xi * b.delta * (T::one() - b.gamma);

        let flow = |a: T, own: T, frac: T, g_out: T, d_out: T, g_back: T, d_back: T| {
            let inflow = a * frac * (gossip * usp * g_out + curiosity + dissat * d_out);
            let outflow = own * (gossip * a * g_back + curiosity + dissat * d_back);
            inflow - outflow
        };
        let one = T::one();
        let dy1 = flow(
            active[0],
            s.y1,
            one - eps,
            q.q_g_1to0,
            q.q_d_1to0,
            q.q_g_0to1,
            q.q_d_0to1,
        );
        let dy2 = flow(
            active[1],
            s.y2,
            one - eps,
            q.q_g_2to0,
            q.q_d_2to0,
            q.q_g_0to2,
            q.q_d_0to2,
        );
        let (dz1, dz2) = if self.coop.is_some() {
            (
                flow(active[0], s.z1, eps, qt.q_g_1to0, qt.q_d_1to0, qt.q_g_0to1, qt.q_d_0to1),
                flow(active[1], s.z2, eps, qt.q_g_2to0, qt.q_d_2to0, qt.q_g_0to2, qt.q_d_0to2),
            )
        } else {
            (T::zero(), T::zero())
        };
        let idle = (d[0] - s.y0).max(T::zero());
        let dy0 = idle * (gossip * usp * q.q_none_to0 + curiosity) - s.y0 * b.xi * q.q_0tonone;
        let dusp = dy0 + dy1 + dy2 + dz1 + dz2;
        let dp0 = b.c_price * s.p0 * dusp;
        [dy0, dy1, dy2, dz1, dz2, dp0]
    }

    /// Largest absolute share derivative.
    pub fn share_rate(&self, s: &MarketState<T>) -> T {
        self.derivative(s)[..5].iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Profits `(Π0, Π1, Π2)`: USP revenue and LSP revenue minus provisioned cost.
    pub fn profits(&self, s: &MarketState<T>, nu: T) -> [T; 3] {
        let eq = &self.equilibrium;
        let active = self.lsp_active(s);
        [
            s.p0 * s.usp_share(),
            eq.p1 * active[0] - nu * eq.s1 * eq.d1,
            eq.p2 * active[1] - nu * eq.s2 * eq.d2,
        ]
    }

    fn violation(&self, s: &MarketState<T>) -> (T, &'static str) {
        let d = self.demands();
        let checks = [
            (-s.y0, "y0"),
            (-s.y1, "y1"),
            (-s.y2, "y2"),
            (-s.z1, "z1"),
            (-s.z2, "z2"),
            (s.y0 - d[0], "y0"),
            (s.y1 + s.z1 - d[1], "y1+z1"),
            (s.y2 + s.z2 - d[2], "y2+z2"),
        ];
        checks
            .into_iter()
            .fold((T::zero(), "none"), |acc, c| if c.0 > acc.0 { c } else { acc })
    }

    fn project(&self, s: MarketState<T>) -> MarketState<T> {
        let d = self.demands();
        let nn = |v: T| v.max(T::zero());
        let mut out = MarketState {
            y0: nn(s.y0).min(d[0]),
            y1: nn(s.y1),
            y2: nn(s.y2),
            z1: nn(s.z1),
            z2: nn(s.z2),
            p0: s.p0,
        };
        for (y, z, cap) in [(&mut out.y1, &mut out.z1, d[1]), (&mut out.y2, &mut out.z2, d[2])] {
            let total = *y + *z;
            if total > cap && total > T::zero() {
                let f = cap / total;
                *y = *y * f;
                *z = *z * f;
            }
        }
        out
    }

    /// Fixed-step RK4 integration over `[0, horizon]`, sampled every `dt`.
    ///
    /// The state is projected onto its admissible box after each step; an
    /// excursion larger than 1e-6 aborts the run.
    pub fn integrate(&self, state0: MarketState<T>, horizon: T, dt: T, nu: T) -> Result<Trajectory<T>> {
        ensure(dt > T::zero(), "dt", "dt > 0")?;
        ensure(horizon >= T::zero(), "horizon", "horizon >= 0")?;
        ensure(state0.p0 > T::zero(), "p0", "p0 > 0")?;
        let steps = (horizon / dt).round().to_usize().unwrap_or(0);
        let mut out = Trajectory {
            coop: self.coop.is_some(),
            samples: Vec::with_capacity(steps + 1),
        };
        let mut s = state0;
        out.samples.push(self.sample(T::zero(), &s, nu));
        let tol = lit::<T>(1e-6);
        for k in 1..=steps {
            let next = rk4_step(
                |st: &[T; 6]| self.derivative(&MarketState::from_array(*st)),
                s.to_array(),
                dt,
            );
            let cand = MarketState::from_array(next);
            let (excess, component) = self.violation(&cand);
            let t = dt * lit(k as f64);
            if excess > tol || !next.iter().all(|v| v.is_finite()) {
                return Err(ModelError::InvariantViolation {
                    component,
                    excess: excess.as_f64(),
                    time: t.as_f64(),
                });
            }
            s = self.project(cand);
            out.samples.push(self.sample(t, &s, nu));
        }
        Ok(out)
    }

    fn sample(&self, t: T, s: &MarketState<T>, nu: T) -> Sample<T> {
        let th = self.throughputs(s);
        Sample {
            t,
            state: *s,
            x: self.lsp_active(s),
            throughput: [th.t0, th.t1, th.t2],
            profit: self.profits(s, nu),
        }
    }

    /// Earliest sample time after which the share derivative stays below
    /// `threshold` until the end of the trajectory.
    pub fn settling_time(&self, traj: &Trajectory<T>, threshold: T) -> Option<T> {
        let mut settled: Option<T> = None;
        for sm in &traj.samples {
            if self.share_rate(&sm.state) < threshold {
                settled.get_or_insert(sm.t);
            } else {
                settled = None;
            }
        }
        settled
    }
}

/// One classical Runge–Kutta step.
pub fn rk4_step<T: Scalar, const N: usize, F: Fn(&[T; N]) -> [T; N]>(f: F, y: [T; N], dt: T) -> [T; N] {
    let half = dt * lit(0.5);
    let axpy = |a: &[T; N], k: &[T; N], h: T| {
        let mut o = *a;
        for i in 0..N {
            o[i] = a[i] + k[i] * h;
        }
        o
    };
    let k1 = f(&y);
    let k2 = f(&axpy(&y, &k1, half));
    let k3 = f(&axpy(&y, &k2, half));
    let k4 = f(&axpy(&y, &k3, dt));
    let mut out = y;
    let sixth = dt / lit(6.0);
    for i in 0..N {
        out[i] = y[i] + sixth * (k1[i] + lit::<T>(2.0) * (k2[i] + k3[i]) + k4[i]);
    }
    out
}

/// Free-function form of [`MarketModel::derivative`].
pub fn market_derivative<T: Scalar>(model: &MarketModel<T>, state: &MarketState<T>) -> [T; 6] {
    model.derivative(state)
}

/// Free-function form of [`MarketModel::integrate`].
pub fn integrate<T: Scalar>(
    model: &MarketModel<T>,
    state0: MarketState<T>,
    horizon: T,
    dt: T,
    nu: T,
) -> Result<Trajectory<T>> {
    model.integrate(state0, horizon, dt, nu)
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub t: T,
    pub state: MarketState<T>,
    /// Active LSP shares `D_i − y_i − z_i`.
    pub x: [T; 2],
    /// `(T0, T1, T2)` in Mbit/s.
    pub throughput: [T; 3],
    /// `(Π0, Π1, Π2)`.
    pub profit: [T; 3],
}

/// Time series of market states with derived quantities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub coop: bool,
    pub samples: Vec<Sample<T>>,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "t", "y0", "y1", "y2", "x1", "x2", "p0", "T0", "T1", "T2", "profit0", "profit1", "profit2",
];

impl<T: Scalar> Trajectory<T> {
    pub fn horizon(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.t)
    }

    pub fn last(&self) -> Option<&Sample<T>> {
        self.samples.last()
    }

    /// Column names of the CSV export.
    pub fn header(&self) -> Vec<&'static str> {
        let mut h = CSV_COLUMNS.to_vec();
        if self.coop {
            h.extend(["z1", "z2"]);
        }
        h
    }

    /// Row values in header order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let s = &self.samples[i];
        let mut r = vec![
            s.t,
            s.state.y0,
            s.state.y1,
            s.state.y2,
            s.x[0],
            s.x[1],
            s.state.p0,
            s.throughput[0],
            s.throughput[1],
            s.throughput[2],
            s.profit[0],
            s.profit[1],
            s.profit[2],
        ];
        if self.coop {
            r.extend([s.state.z1, s.state.z2]);
        }
        r.into_iter().map(|v| v.as_f64()).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        self.write_csv_with(writer, None)
    }

    /// CSV export; with `seed` a leading seed column is added.
    pub fn write_csv_with<W: Write>(&self, writer: W, seed: Option<u64>) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = Vec::new();
        if seed.is_some() {
            header.push("seed");
        }
        header.extend(self.header());
        w.write_record(&header)?;
        for i in 0..self.samples.len() {
            let mut rec: Vec<String> = Vec::new();
            if let Some(sd) = seed {
                rec.push(sd.to_string());
            }
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> std::result::Result<(), csv::Error> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

impl Trajectory<f64> {
    /// Reads a trajectory written by [`Trajectory::write_csv`] (optionally with a
    /// seed column, which is ignored).
    pub fn read_csv<R: Read>(reader: R) -> std::result::Result<Self, csv::Error> {
        let mut rd = csv::Reader::from_reader(reader);
        let headers = rd.headers()?.clone();
        let idx = |name: &str| headers.iter().position(|h| h == name);
        let missing = |name: &str| {
            csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("missing column `{name}`"),
            ))
        };
        let mut cols = Vec::new();
        for name in CSV_COLUMNS {
            cols.push(idx(name).ok_or_else(|| missing(name))?);
        }
        let z = (idx("z1"), idx("z2"));
        let coop = z.0.is_some() && z.1.is_some();
        let mut samples = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let get = |i: usize| -> std::result::Result<f64, csv::Error> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
            };
            let v: Vec<f64> = cols.iter().map(|&i| get(i)).collect::<std::result::Result<_, _>>()?;
            let (z1, z2) = match z {
                (Some(a), Some(b)) => (get(a)?, get(b)?),
                _ => (0.0, 0.0),
            };
            samples.push(Sample {
                t: v[0],
                state: MarketState {
                    y0: v[1],
                    y1: v[2],
                    y2: v[3],
                    z1,
                    z2,
                    p0: v[6],
                },
                x: [v[4], v[5]],
                throughput: [v[7], v[8], v[9]],
                profit: [v[10], v[11], v[12]],
            });
        }
        Ok(Self { coop, samples })
    }
}
