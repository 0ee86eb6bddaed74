//! Claims reserving on stable-1/2 random bridges.

use crate::bridges::{stable_half_bridge_cdf, stable_half_bridge_partial_moment, stable_half_bridge_second_moment};
use crate::error::{LrbError, Result};
use crate::lrb::{ConditionedState, LrbSpec, NamedDensity, TailClass, TerminalLaw};
use crate::marginals::{ig_moment, IncrementFamily};
use crate::specfn::{erfcx, gig_density};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Deterministic change from calendar to operational time on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeChange {
    /// Exposure rate proportional to a Weibull density with scale `a` and shape `b`.
    Weibull { a: f64, b: f64 },
    /// Piecewise-constant exposure rate `rates[i]` on `[times[i], times[i+1])`.
    Tabulated { times: Vec<f64>, rates: Vec<f64> },
}

impl TimeChange {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            TimeChange::Weibull { a, b } => {
                if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(LrbError::config("Weibull time change needs a > 0 and b > 0"));
                }
            }
            TimeChange::Tabulated { times, rates } => {
                if times.len() != rates.len() + 1 || times.is_empty() || times[0] != 0.0 {
                    return Err(LrbError::config("tabulated exposure needs knots 0 = t_0 < ... < t_n and n rates"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || *times.last().unwrap() < horizon {
                    return Err(LrbError::config("tabulated exposure knots must increase and cover the horizon"));
                }
                if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                    return Err(LrbError::config("exposure rates must be nonnegative"));
                }
                if self.cumulative(horizon) <= 0.0 {
                    return Err(LrbError::config("exposure vanishes on the whole horizon"));
                }
            }
        }
        Ok(())
    }

    fn cumulative(&self, t: f64) -> f64 {
        match self {
            TimeChange::Weibull { a, b } => -(-(t / a).powf(*b)).exp_m1(),
            TimeChange::Tabulated { times, rates } => {
                let mut acc = 0.0;
                for (i, r) in rates.iter().enumerate() {
                    let (lo, hi) = (times[i], times[i + 1]);
                    if t <= lo {
                        break;
                    }
                    acc += r * (t.min(hi) - lo);
                }
                acc
            }
        }
    }

    /// Operational time `tau(t) = T E(t) / E(T)` with `E` the cumulative exposure.
    pub fn tau(&self, horizon: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= horizon {
            return horizon;
        }
        (horizon * self.cumulative(t) / self.cumulative(horizon)).clamp(0.0, horizon)
    }
}

/// Weibull operational time `tau(t) = T (1 - e^{-(t/a)^b}) / (1 - e^{-(T/a)^b})`.
pub fn weibull_tau(a: f64, b: f64, horizon: f64, t: f64) -> Result<f64> {
    let tc = TimeChange::Weibull { a, b };
    tc.validate(horizon)?;
    Ok(tc.tau(horizon, t))
}

/// Calendar time of peak exposure `a ((b-1)/b)^{1/b}`; only defined for `b > 1`.
pub fn weibull_peak(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 1.0) {
        return Err(LrbError::domain("the exposure rate peaks inside (0, inf) only for b > 1"));
    }
    Ok(a * ((b - 1.0) / b).powf(1.0 / b))
}

/// Reinsurance layer: `limit` excess of `attachment`, unbounded for stop-loss cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReinsuranceLayer {
    pub attachment: f64,
    #[serde(default)]
    pub limit: Option<f64>,
}

impl ReinsuranceLayer {
    pub fn validate(&self) -> Result<()> {
        if !(self.attachment >= 0.0 && self.attachment.is_finite()) {
            return Err(LrbError::config("layer attachment must be finite and nonnegative"));
        }
        if let Some(l) = self.limit {
            if !(l > 0.0) {
                return Err(LrbError::config("layer limit must be positive"));
            }
        }
        Ok(())
    }
}

/// Best-estimate ultimate, reserve and conditional variance of the ultimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestEstimate {
    pub ultimate: f64,
    pub reserve: f64,
    pub variance: f64,
}

/// Tail ratio `lim Q[U_T > L] / Q[U_T - xi_t > L | xi_t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TailRatio {
    Finite(f64),
    Divergent,
}

/// Paid-claims model: a stable-1/2 random bridge for cumulative paid claims
/// with the ultimate loss as its terminal value.
#[derive(Debug, Clone)]
pub struct ReserveModel {
    pub spec: LrbSpec,
}

impl ReserveModel {
    pub fn new(c: f64, horizon: f64, nu: TerminalLaw) -> Result<Self> {
        Self::from_spec(LrbSpec::new(IncrementFamily::StableHalf { c }, horizon, nu)?)
    }

    pub fn from_spec(spec: LrbSpec) -> Result<Self> {
        if !matches!(spec.family, IncrementFamily::StableHalf { .. }) {
            return Err(LrbError::config("the reserving model needs the stable-1/2 family"));
        }
        if spec.nu.atoms.iter().any(|a| a.1 > 0.0 && a.0 <= 0.0)
            || spec.nu.continuous.as_ref().is_some_and(|(m, p)| *m > 0.0 && p.support.0 < 0.0)
        {
            return Err(LrbError::config("the ultimate loss must be positive"));
        }
        Ok(ReserveModel { spec })
    }

    pub fn with_time_change(self, tc: TimeChange) -> Result<Self> {
        Ok(ReserveModel { spec: self.spec.with_time_change(tc)? })
    }

    pub fn activity(&self) -> f64 {
        match self.spec.family {
            IncrementFamily::StableHalf { c } => c,
            _ => unreachable!("checked on construction"),
        }
    }

    pub fn horizon(&self) -> f64 {
        self.spec.horizon
    }

    /// Conditional law of the ultimate given `xi` paid by calendar time `s`.
    pub fn condition(&self, s: f64, xi: f64) -> Result<ConditionedState> {
        if !(s >= 0.0 && s < self.spec.horizon) {
            return Err(LrbError::domain(format!("valuation time {s} outside [0, T)")));
        }
        if !(xi >= 0.0) {
            return Err(LrbError::domain("paid claims must be nonnegative"));
        }
        if s == 0.0 && xi != 0.0 {
            return Err(LrbError::domain("paid claims start at 0"));
        }
        self.spec.condition(self.spec.op_time(s), xi)
    }

    pub fn best_estimate(&self, s: f64, xi: f64) -> Result<BestEstimate> {
        let st = self.condition(s, xi)?;
        let ultimate = st.posterior.mean()?;
        let variance = st.posterior.variance()?;
        Ok(BestEstimate { ultimate, reserve: ultimate - xi, variance })
    }

    /// Quantile of the ultimate loss given the paid claims.
    pub fn ultimate_quantile(&self, s: f64, xi: f64, p: f64) -> Result<f64> {
        self.condition(s, xi)?.posterior.quantile(p, 1e-12)
    }

    pub fn ultimate_cdf(&self, s: f64, xi: f64, x: f64) -> Result<f64> {
        self.condition(s, xi)?.posterior.cdf(x)
    }

    /// Operational times of `s < t`.
    fn op_pair(&self, s: f64, t: f64) -> Result<(f64, f64)> {
        if !(s < t && t <= self.spec.horizon) {
            return Err(LrbError::domain(format!("needs s < t <= T, got s={s}, t={t}")));
        }
        Ok((self.spec.op_time(s), self.spec.op_time(t)))
    }

    /// `int g(F(y; z - xi), M(y; z - xi), z) nu_s(dz)` with bridge CDF `F` and
    /// partial first moment `M` of the increment over `(s, t]`.
    fn bridge_integral(
        &self,
        st: &ConditionedState,
        ts: f64,
        tt: f64,
        y: f64,
        g: &dyn Fn(f64, f64, f64) -> f64,
    ) -> Result<f64> {
        let (c, horizon, xi) = (self.activity(), self.spec.horizon, st.xi);
        let (dt, dh) = (tt - ts, horizon - ts);
        let v = st.posterior.expect(&|z| {
            let w = z - xi;
            if w <= 0.0 {
                return g(if y >= 0.0 { 1.0 } else { 0.0 }, 0.0, z);
            }
            if dt <= 0.0 {
                return g(if y >= 0.0 { 1.0 } else { 0.0 }, 0.0, z);
            }
            g(stable_half_bridge_cdf(dt, dh, y, w, c), stable_half_bridge_partial_moment(dt, dh, y, w, c), z)
        })?;
        if !v.is_finite() {
            return Err(LrbError::numeric("bridge integral is not finite", v));
        }
        Ok(v)
    }

    /// `E[xi_t | xi_s]` for calendar times `s <= t <= T`.
    pub fn conditional_mean(&self, s: f64, xi: f64, t: f64) -> Result<f64> {
        let st = self.condition(s, xi)?;
        if t == s {
            return Ok(xi);
        }
        let (ts, tt) = self.op_pair(s, t)?;
        Ok(xi + (tt - ts) / (self.spec.horizon - ts) * (st.posterior.mean()? - xi))
    }

    /// `E[xi_t^2 | xi_s]`, combining the bridge second moment with the posterior.
    pub fn conditional_second_moment(&self, s: f64, xi: f64, t: f64) -> Result<f64> {
        let st = self.condition(s, xi)?;
        if t == s {
            return Ok(xi * xi);
        }
        let (ts, tt) = self.op_pair(s, t)?;
        let (c, horizon) = (self.activity(), self.spec.horizon);
        let f = (tt - ts) / (horizon - ts);
        st.posterior.expect(&|z| {
            let w = z - xi;
            let m2 = if w <= 0.0 || f <= 0.0 {
                0.0
            } else if f >= 1.0 {
                w * w
            } else {
                stable_half_bridge_second_moment(tt - ts, horizon - ts, w, c)
            };
            xi * xi + 2.0 * xi * f * w.max(0.0) + m2
        })
    }

    /// Expected exceedence `D_st(K) = E[(xi_t - K)^+ | xi_s]`.
    pub fn expected_exceedence(&self, s: f64, xi: f64, t: f64, strike: f64) -> Result<f64> {
        if t == s {
            self.condition(s, xi)?;
            return Ok((xi - strike).max(0.0));
        }
        let mean = self.conditional_mean(s, xi, t)?;
        if strike <= xi {
            return Ok(mean - strike);
        }
        let st = self.condition(s, xi)?;
        let (ts, tt) = self.op_pair(s, t)?;
        if tt >= self.spec.horizon {
            let extra = st.posterior.expect_below(&|z| strike - z, strike)?;
            return Ok((mean - strike + extra).max(0.0));
        }
        let y = strike - xi;
        let extra = self.bridge_integral(&st, ts, tt, y, &|f, m, _| y * f - m)?;
        Ok((mean - strike + extra).max(0.0))
    }

    /// Expected recovery over `(t, u]` on a layer, seen from `(s, xi_s)`.
    pub fn layer_recovery(&self, s: f64, xi: f64, t: f64, u: f64, layer: &ReinsuranceLayer) -> Result<f64> {
        layer.validate()?;
        if !(s <= t && t <= u) {
            return Err(LrbError::domain("needs s <= t <= u"));
        }
        let d = |at: f64, k: f64| self.expected_exceedence(s, xi, at, k);
        let (k, top) = (layer.attachment, layer.limit.map(|l| layer.attachment + l));
        let slice = |at: f64| -> Result<f64> {
            let hi = match top {
                Some(kl) => d(at, kl)?,
                None => 0.0,
            };
            Ok(d(at, k)? - hi)
        };
        Ok(slice(u)? - slice(t)?)
    }

    /// `E[xi_t | xi_t > theta, xi_s]`.
    pub fn cvar_exceedence(&self, s: f64, xi: f64, t: f64, theta: f64) -> Result<f64> {
        if !(theta > xi) {
            return Err(LrbError::domain("threshold must exceed the paid claims"));
        }
        let mean = self.conditional_mean(s, xi, t)?;
        let st = self.condition(s, xi)?;
        let (ts, tt) = self.op_pair(s, t)?;
        if tt >= self.spec.horizon {
            let p = 1.0 - st.posterior.cdf(theta)?;
            if !(p > 1e-300) {
                return Err(LrbError::domain(format!("xi_t exceeds {theta} with probability 0")));
            }
            return Ok(((mean - st.posterior.expect_below(&|z| z, theta)?) / p).max(theta));
        }
        let y = theta - xi;
        let below_p = self.bridge_integral(&st, ts, tt, y, &|f, _, _| f)?;
        let below_m = self.bridge_integral(&st, ts, tt, y, &|f, m, _| xi * f + m)?;
        let p = 1.0 - below_p;
        if !(p > 1e-300) {
            return Err(LrbError::domain(format!("xi_t exceeds {theta} with probability 0")));
        }
        Ok(((mean - below_m) / p).max(theta))
    }

    /// Tail ratio `T/(T-t) psi_t(R; xi) lim p(L)/p(L + xi)`, read off the
    /// tail class registered on the prior density.
    pub fn tail_ratio(&self, s: f64, xi: f64) -> Result<TailRatio> {
        let st = self.condition(s, xi)?;
        let part = match &self.spec.nu.continuous {
            Some((m, p)) if *m > 0.0 => p,
            _ => return Err(LrbError::domain("tail ratio needs a prior with a density")),
        };
        let ts = self.spec.op_time(s);
        let front = self.spec.horizon / (self.spec.horizon - ts) * st.psi;
        let lim = match part.tail {
            TailClass::Exponential { rate } => (rate * xi).exp(),
            TailClass::Power { .. } | TailClass::Levy => 1.0,
            TailClass::Gaussian => {
                return Ok(if xi > 0.0 { TailRatio::Divergent } else { TailRatio::Finite(front) });
            }
            TailClass::Bounded => return Err(LrbError::domain("a bounded prior has no tail")),
            TailClass::Unknown => return Err(LrbError::unsupported("prior density has no registered tail class")),
        };
        Ok(TailRatio::Finite(front * lim))
    }
}

fn choose(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Generalized inverse-Gaussian prior `GIG(n - 1/2, cT, gamma)` for the
/// ultimate loss, under which everything is a finite sum of IG moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigPrior {
    pub n: u32,
    pub c: f64,
    pub gamma: f64,
    pub horizon: f64,
}

impl GigPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.gamma > 0.0 && self.horizon > 0.0) {
            return Err(LrbError::config("GIG prior needs c, gamma and T positive"));
        }
        Ok(())
    }

    pub fn law(&self) -> Result<TerminalLaw> {
        self.validate()?;
        TerminalLaw::named(NamedDensity::Gig {
            lambda: self.n as f64 - 0.5,
            delta: self.c * self.horizon,
            gamma: self.gamma,
        })
    }

    pub fn model(&self) -> Result<ReserveModel> {
        ReserveModel::new(self.c, self.horizon, self.law()?)
    }

    /// `E[Y_tau^k]` for the IG subordinator with activity `c` and drift `gamma`.
    fn m(&self, k: u32, tau: f64, gamma: f64) -> Result<f64> {
        if k == 0 {
            Ok(1.0)
        } else if tau == 0.0 {
            Ok(0.0)
        } else {
            ig_moment(k as f64, self.c, gamma, tau)
        }
    }

    /// `E[(x + Y_tau)^j]`.
    fn poly(&self, j: u32, x: f64, tau: f64, gamma: f64) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..=j {
            acc += choose(j, i) * x.powi(i as i32) * self.m(j - i, tau, gamma)?;
        }
        Ok(acc)
    }

    fn check(&self, t: f64, xi: f64) -> Result<()> {
        self.validate()?;
        if !(t >= 0.0 && t < self.horizon && xi >= 0.0) {
            return Err(LrbError::domain("needs 0 <= t < T and xi >= 0"));
        }
        Ok(())
    }

    /// Mixture weights of the law of `xi_t - xi_s` given `xi_s = x`; entry
    /// `j` multiplies the `GIG(j - 1/2, c(t-s), gamma)` density.
    pub fn weights(&self, s: f64, x: f64, t: f64) -> Result<Vec<f64>> {
        self.check(s, x)?;
        if !(t > s && t <= self.horizon) {
            return Err(LrbError::domain("weights need s < t <= T"));
        }
        let g = self.gamma;
        let den = self.poly(self.n, x, self.horizon - s, g)?;
        (0..=self.n)
            .map(
                |j| Ok(choose(self.n, j) * self.m(j, t - s, g)? * self.poly(self.n - j, x, self.horizon - t, g)? / den),
            )
            .collect()
    }

    /// Density of `xi_t` at `y` given `xi_s = x`.
    pub fn transition_density(&self, s: f64, x: f64, t: f64, y: f64) -> Result<f64> {
        let w = self.weights(s, x, t)?;
        if y <= x {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (j, wj) in w.iter().enumerate() {
            acc += wj * gig_density(y - x, j as f64 - 0.5, self.c * (t - s), self.gamma)?;
        }
        Ok(acc)
    }

    /// `E[U_T^m | xi_t = xi]`.
    pub fn moment(&self, m: u32, t: f64, xi: f64) -> Result<f64> {
        self.check(t, xi)?;
        let tau = self.horizon - t;
        Ok(self.poly(self.n + m, xi, tau, self.gamma)? / self.poly(self.n, xi, tau, self.gamma)?)
    }

    /// Best-estimate ultimate `U_tT`.
    pub fn ultimate(&self, t: f64, xi: f64) -> Result<f64> {
        self.moment(1, t, xi)
    }

    /// `E[e^{alpha^2 U_T / 2} | xi_t = xi]` for `0 < alpha < gamma`.
    pub fn exp_moment(&self, alpha: f64, t: f64, xi: f64) -> Result<f64> {
        self.check(t, xi)?;
        if !(alpha > 0.0 && alpha < self.gamma) {
            return Err(LrbError::domain("exponential moment needs 0 < alpha < gamma"));
        }
        let tau = self.horizon - t;
        let gbar = (self.gamma * self.gamma - alpha * alpha).sqrt();
        let ratio = self.poly(self.n, xi, tau, gbar)? / self.poly(self.n, xi, tau, self.gamma)?;
        Ok((0.5 * alpha * alpha * xi + self.c * tau * (self.gamma - gbar)).exp() * ratio)
    }
}

/// Two paid-claims processes cut from one stable-1/2 master bridge on
/// `[0, T*]`: line 1 is the master on `[0, T]`, line 2 is `k^2` times the
/// master increment over `[T, T + lambda t]`.
#[derive(Debug, Clone)]
pub struct TwoLineModel {
    pub master: LrbSpec,
    pub split: f64,
    pub c2: f64,
}

/// A priori moments of the two ultimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLineMoments {
    pub mean1: f64,
    pub mean2: f64,
    pub second1: f64,
    pub second2: f64,
    pub cross: f64,
    pub correlation: f64,
    pub c_star: f64,
}

impl TwoLineModel {
    pub fn new(master: LrbSpec, split: f64, c2: f64) -> Result<Self> {
        if !matches!(master.family, IncrementFamily::StableHalf { .. }) {
            return Err(LrbError::config("the master process must be stable-1/2"));
        }
        if master.time_change.is_some() {
            return Err(LrbError::config("the two-line model runs in operational time"));
        }
        if !(split > 0.0 && split < master.horizon) {
            return Err(LrbError::config("split time must lie in (0, T*)"));
        }
        if !(c2 > 0.0 && c2.is_finite()) {
            return Err(LrbError::config("second activity must be positive"));
        }
        Ok(TwoLineModel { master, split, c2 })
    }

    fn c(&self) -> f64 {
        match self.master.family {
            IncrementFamily::StableHalf { c } => c,
            _ => unreachable!("checked on construction"),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.master.horizon / self.split - 1.0
    }

    pub fn k(&self) -> f64 {
        self.c2 / (self.c() * self.lambda())
    }

    /// Master times `t`, `T`, `T + lambda t` needed to read both lines at `t`.
    pub fn master_times(&self, t: f64) -> [f64; 3] {
        [t, self.split, self.split + self.lambda() * t]
    }

    /// Both lines from master values at [`TwoLineModel::master_times`].
    pub fn slice(&self, master_values: [f64; 3]) -> (f64, f64) {
        (master_values[0], self.k().powi(2) * (master_values[2] - master_values[1]))
    }

    /// Best-estimate ultimates `(U^1, U^2)` given `xi^1_t = x1`, `xi^2_t = x2`.
    pub fn best_estimates(&self, t: f64, x1: f64, x2: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0 && t < self.split) {
            return Err(LrbError::domain("needs 0 <= t < T"));
        }
        let lam = self.lambda();
        let k2 = self.k().powi(2);
        let a = x1 + x2 / k2;
        let e = self.master.condition((1.0 + lam) * t, a)?.terminal_mean()?;
        let u1 = x1 + (e - a) / (1.0 + lam);
        let u2 = x2 / (1.0 + lam) + k2 * lam * (e - x1) / (1.0 + lam);
        Ok((u1, u2))
    }

    /// `C_{T*} = c sqrt(2 pi) int z^{3/2} e^{c^2 T*^2/(2z)} Phi(-c T*/sqrt z) p(z) dz`.
    pub fn c_star(&self) -> Result<f64> {
        let c = self.c();
        let ts = self.master.horizon;
        let v = self.master.nu.expect(&|z| {
            if z <= 0.0 {
                return 0.0;
            }
            z.powf(1.5) * 0.5 * erfcx(c * ts / (z.sqrt() * SQRT_2))
        })?;
        Ok(c * (2.0 * PI).sqrt() * v)
    }

    pub fn moments(&self) -> Result<TwoLineMoments> {
        let (ts, t) = (self.master.horizon, self.split);
        let k2 = self.k().powi(2);
        let es = self.master.nu.mean()?;
        let es2 = self.master.nu.moment(2.0)?;
        if !es2.is_finite() {
            return Err(LrbError::domain("the master ultimate has no second moment"));
        }
        let cs = self.c_star()?;
        let g = t * (ts - t) / ts * cs;
        let mean1 = t / ts * es;
        let mean2 = k2 * (1.0 - t / ts) * es;
        let second1 = t / ts * es2 - g;
        let second2 = k2 * k2 * ((1.0 - t / ts) * es2 - g);
        let cross = k2 * g;
        let correlation = (cross - mean1 * mean2) / ((second1 - mean1 * mean1) * (second2 - mean2 * mean2)).sqrt();
        Ok(TwoLineMoments { mean1, mean2, second1, second2, cross, correlation, c_star: cs })
    }
}

/// Reads a paid-claims history with columns `t,cumulative_paid`, both
/// strictly increasing.
pub fn read_claims_csv<R: std::io::Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        t: f64,
        cumulative_paid: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| LrbError::config(format!("claims row {}: {e}", i + 1)))?;
        if !(row.t.is_finite() && row.cumulative_paid.is_finite() && row.t >= 0.0 && row.cumulative_paid >= 0.0) {
            return Err(LrbError::config(format!("claims row {}: values must be finite and nonnegative", i + 1)));
        }
        if let Some(&(t0, x0)) = out.last() {
            if !(row.t > t0 && row.cumulative_paid > x0) {
                return Err(LrbError::config(format!(
                    "claims row {}: time and cumulative paid must both increase strictly",
                    i + 1
                )));
            }
        }
        out.push((row.t, row.cumulative_paid));
    }
    Ok(out)
}

/// Latest `(t, paid)` point of a history; the prior state `(0, 0)` when empty.
pub fn latest_state(claims: &[(f64, f64)]) -> (f64, f64) {
    claims.last().copied().unwrap_or((0.0, 0.0))
}
