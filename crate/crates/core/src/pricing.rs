//! Information-based pricing: a cash flow revealed at the horizon is priced
//! by conditioning its law on the current value of a random bridge.

use crate::bridges::BridgeLaw;
use crate::error::{LrbError, Result};
use crate::lrb::{family_scale, ConditionedState, LrbSpec, TerminalLaw};
use crate::marginals::{ln_vg_standard_density, nig_derive, vg_k, IncrementFamily, Support};
use crate::specfn::{kummer_m, ln_bessel_k, ln_factorial, ln_gamma, norm_cdf, reg_inc_beta};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Deterministic short rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscountCurve {
    Constant {
        rate: f64,
    },
    /// `rates[i]` applies on `[times[i], times[i+1])`; the last rate runs on.
    Piecewise {
        times: Vec<f64>,
        rates: Vec<f64>,
    },
}

impl DiscountCurve {
    pub fn flat(rate: f64) -> Self {
        DiscountCurve::Constant { rate }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |r: &f64| !(*r >= 0.0 && r.is_finite());
        match self {
            DiscountCurve::Constant { rate } => {
                if bad(rate) {
                    return Err(LrbError::config(format!("rate must be finite and nonnegative, got {rate}")));
                }
            }
            DiscountCurve::Piecewise { times, rates } => {
                if times.is_empty() || times.len() != rates.len() || times[0] != 0.0 {
                    return Err(LrbError::config("piecewise curve needs matching times and rates starting at 0"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || rates.iter().any(bad) {
                    return Err(LrbError::config("piecewise curve needs increasing times and nonnegative rates"));
                }
            }
        }
        Ok(())
    }

    fn integral(&self, t: f64) -> f64 {
        match self {
            DiscountCurve::Constant { rate } => rate * t,
            DiscountCurve::Piecewise { times, rates } => {
                let mut acc = 0.0;
                for i in 0..times.len() {
                    let a = times[i];
                    if t <= a {
                        break;
                    }
                    let b = times.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t);
                    acc += rates[i] * (b - a);
                }
                acc
            }
        }
    }

    /// `P_{st} = exp(-int_s^t r_u du)`.
    pub fn discount(&self, s: f64, t: f64) -> Result<f64> {
        if !(s >= 0.0 && t >= s && t.is_finite()) {
            return Err(LrbError::domain(format!("discount factor needs 0 <= s <= t, got s={s}, t={t}")));
        }
        Ok((-(self.integral(t) - self.integral(s))).exp())
    }

    /// Constant rate, when there is one.
    pub fn constant_rate(&self) -> Option<f64> {
        match self {
            DiscountCurve::Constant { rate } => Some(*rate),
            DiscountCurve::Piecewise { rates, .. } if rates.iter().all(|r| *r == rates[0]) => Some(rates[0]),
            _ => None,
        }
    }
}

/// Two-point cash flow: `k0` with probability `p`, `k1` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryPayoff {
    pub k0: f64,
    pub k1: f64,
    pub p: f64,
}

impl BinaryPayoff {
    pub fn new(k0: f64, k1: f64, p: f64) -> Result<Self> {
        let b = BinaryPayoff { k0, k1, p };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k0 < self.k1) || !self.k0.is_finite() || !self.k1.is_finite() {
            return Err(LrbError::config("binary payoff needs finite k0 < k1"));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(LrbError::config("binary payoff needs 0 < p < 1"));
        }
        Ok(())
    }

    pub fn law(&self) -> Result<TerminalLaw> {
        TerminalLaw::binary(self.k0, self.k1, self.p)
    }

    pub fn mean(&self) -> f64 {
        self.k0 * self.p + self.k1 * (1.0 - self.p)
    }
}

/// `P_{tT} int h(z) nu_t(dz)` at a conditioned state.
pub fn cashflow_price(state: &ConditionedState, curve: &DiscountCurve, h: &dyn Fn(f64) -> f64) -> Result<f64> {
    let p = curve.discount(state.s, state.horizon)?;
    let v = state.posterior.expect(h)?;
    if !v.is_finite() {
        return Err(LrbError::numeric("payoff is not integrable under the conditional law", v));
    }
    Ok(p * v)
}

// ---------------------------------------------------------------------------
// Binary bonds
// ---------------------------------------------------------------------------

/// A credit-risky zero-coupon bond whose redemption is revealed by an
/// information process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum BinaryBond {
    /// Redemption `X_T in {k0, k1}` pinned by a bridge of `family`.
    Generic { family: IncrementFamily, payoff: BinaryPayoff },
    /// `X_T in {0, sigma}` with `Q[X_T = 0] = p`, standard VG information
    /// with parameter `m`, redemption `X_T / sigma`.
    Vg { m: f64, sigma: f64, p: f64 },
    /// As `Vg` with standard NIG information of parameter `alpha`.
    Nig { alpha: f64, sigma: f64, p: f64 },
    /// Redemption `X_T in {k0, k1}` pinned by a Cauchy bridge.
    Cauchy { c: f64, payoff: BinaryPayoff },
}

impl BinaryBond {
    fn payoff(&self) -> Result<BinaryPayoff> {
        match *self {
            BinaryBond::Generic { payoff, .. } | BinaryBond::Cauchy { payoff, .. } => {
                payoff.validate()?;
                Ok(payoff)
            }
            BinaryBond::Vg { sigma, p, .. } | BinaryBond::Nig { sigma, p, .. } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(LrbError::config("rate parameter sigma must be positive"));
                }
                BinaryPayoff::new(0.0, sigma, p)
            }
        }
    }

    pub fn family(&self) -> IncrementFamily {
        match *self {
            BinaryBond::Generic { family, .. } => family,
            BinaryBond::Vg { m, .. } => IncrementFamily::VarianceGamma { m, theta: 0.0, sigma: 1.0 },
            BinaryBond::Nig { alpha, .. } => {
                IncrementFamily::NormalInverseGaussian { c: alpha, theta: 0.0, sigma: 1.0 }
            }
            BinaryBond::Cauchy { c, .. } => IncrementFamily::Cauchy { c },
        }
    }

    /// The information process.
    pub fn info_spec(&self, horizon: f64) -> Result<LrbSpec> {
        LrbSpec::new(self.family(), horizon, self.payoff()?.law()?)
    }

    /// Cash paid at the horizon for terminal information value `x`.
    pub fn redemption(&self, x: f64) -> f64 {
        match *self {
            BinaryBond::Vg { sigma, .. } | BinaryBond::Nig { sigma, .. } => x / sigma,
            _ => x,
        }
    }

    /// `Q[X_T = k0 | xi_t = xi]`.
    pub fn default_probability(&self, horizon: f64, t: f64, xi: f64) -> Result<f64> {
        if !(t >= 0.0 && t < horizon) {
            return Err(LrbError::domain(format!("bond time {t} outside [0, {horizon})")));
        }
        if !xi.is_finite() {
            return Err(LrbError::domain("information value must be finite"));
        }
        let pay = self.payoff()?;
        if t == 0.0 {
            return Ok(pay.p);
        }
        let tau = horizon - t;
        // ln of the odds Q[k1]/Q[k0].
        let ln_odds = match *self {
            BinaryBond::Vg { m, sigma, p } => vg_ln_odds(m, sigma, p, horizon, tau, xi)?,
            BinaryBond::Nig { alpha, sigma, p } => nig_ln_odds(alpha, sigma, p, horizon, tau, xi)?,
            BinaryBond::Cauchy { c, payoff } => {
                let (a0, a1) = (
                    c * c * horizon * horizon + payoff.k0 * payoff.k0,
                    c * c * horizon * horizon + payoff.k1 * payoff.k1,
                );
                let d = c * c * tau * tau;
                ((1.0 - payoff.p) * a1 * (d + (payoff.k0 - xi).powi(2))).ln()
                    - (payoff.p * a0 * (d + (payoff.k1 - xi).powi(2))).ln()
            }
            BinaryBond::Generic { family, payoff } => {
                let l = |tt: f64, x: f64| family.ln_density(tt, x);
                let a = l(tau, payoff.k1 - xi)? - l(horizon, payoff.k1)? + (1.0 - payoff.p).ln();
                let b = l(tau, payoff.k0 - xi)? - l(horizon, payoff.k0)? + payoff.p.ln();
                if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
                    return Err(LrbError::model(format!("state {xi} cannot reach either redemption value")));
                }
                a - b
            }
        };
        if ln_odds.is_nan() {
            return Err(LrbError::numeric("binary odds are undefined", f64::NAN));
        }
        Ok(logistic(-ln_odds))
    }

    /// Bond price `P_{tT} E[h(X_T) | xi_t]` from the closed-form odds.
    pub fn price(&self, horizon: f64, t: f64, xi: f64, curve: &DiscountCurve) -> Result<f64> {
        let pay = self.payoff()?;
        let q0 = self.default_probability(horizon, t, xi)?;
        let p = curve.discount(t, horizon)?;
        Ok(p * (self.redemption(pay.k0) * q0 + self.redemption(pay.k1) * (1.0 - q0)))
    }

    /// Same price through the general conditioning engine.
    pub fn price_generic(&self, horizon: f64, t: f64, xi: f64, curve: &DiscountCurve) -> Result<f64> {
        let spec = self.info_spec(horizon)?;
        let st = spec.condition(t, xi)?;
        cashflow_price(&st, curve, &|z| self.redemption(z))
    }
}

/// `1 / (1 + e^{-x})` without overflow.
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// VG odds: `ln c + (m tau - 1/2) ln|xi/(sigma-xi)| + ln K(sqrt(2m)|xi|) - ln K(sqrt(2m)|sigma-xi|)`
/// with `c = 2 p (m sigma^2/2)^{mT/2-1/4} K_{mT-1/2}(sqrt(2m) sigma) / ((1-p) Gamma(mT-1/2))`
/// the ratio of prior odds. Returned as `ln(Q[sigma]/Q[0])`.
fn vg_ln_odds(m: f64, sigma: f64, p: f64, horizon: f64, tau: f64, xi: f64) -> Result<f64> {
    let mt = m * horizon;
    if mt <= 0.5 {
        return Err(LrbError::model("an atom at 0 needs m T > 1/2 for the VG bond"));
    }
    let r2m = (2.0 * m).sqrt();
    let ln_c =
        (2.0 * p).ln() + (mt / 2.0 - 0.25) * (m * sigma * sigma / 2.0).ln() + ln_bessel_k(mt - 0.5, r2m * sigma)?
            - (1.0 - p).ln()
            - ln_gamma(mt - 0.5);
    let nu = m * tau - 0.5;
    let a = xi.abs();
    let b = (sigma - xi).abs();
    // ln [f_tau(-xi) / f_tau(sigma - xi)]
    let ln_ratio = if a > 0.0 && b > 0.0 {
        nu * (a / b).ln() + ln_bessel_k(nu, r2m * a)? - ln_bessel_k(nu, r2m * b)?
    } else {
        ln_vg_standard_density(m, tau, -xi)? - ln_vg_standard_density(m, tau, sigma - xi)?
    };
    // Q[0]/Q[sigma] = c * ratio, so ln(Q[sigma]/Q[0]) is its negative.
    Ok(-(ln_c + ln_ratio))
}

/// NIG odds with
/// `gamma = p/(1-p) sqrt(a^2T^2/(a^2T^2+sigma^2)) K1(a sqrt(a^2T^2+sigma^2)) / K1(a^2 T)`.
fn nig_ln_odds(alpha: f64, sigma: f64, p: f64, horizon: f64, tau: f64, xi: f64) -> Result<f64> {
    let a2 = alpha * alpha;
    let big = a2 * horizon * horizon;
    let ln_g = (p / (1.0 - p)).ln()
        + 0.5 * (big / (big + sigma * sigma)).ln()
        + ln_bessel_k(1.0, alpha * (big + sigma * sigma).sqrt())?
        - ln_bessel_k(1.0, a2 * horizon)?;
    let d = a2 * tau * tau;
    let r0 = (d + xi * xi).sqrt();
    let r1 = (d + (sigma - xi).powi(2)).sqrt();
    let ln_ratio = (r1 / r0).ln() + ln_bessel_k(1.0, alpha * r0)? - ln_bessel_k(1.0, alpha * r1)?;
    Ok(-(ln_g + ln_ratio))
}

// ---------------------------------------------------------------------------
// Call options on the bond price
// ---------------------------------------------------------------------------

/// Price of a call together with the exercise set it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct CallQuote {
    pub price: f64,
    /// Disjoint open intervals of information values at `t` where the
    /// option is exercised.
    pub exercise_set: Vec<(f64, f64)>,
}

/// `Lambda(t, x) = P_{tT} E[h(X_T) | xi_t = x]`, or `None` when `x` is not a
/// reachable state.
fn lambda_at(spec: &LrbSpec, t: f64, x: f64, p_tt: f64, h: &dyn Fn(f64) -> f64) -> Result<Option<f64>> {
    match spec.condition(t, x) {
        Ok(st) => Ok(Some(p_tt * st.posterior.expect(h)?)),
        Err(LrbError::Model(_)) | Err(LrbError::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_call_times(spec: &LrbSpec, state: &ConditionedState, t: f64, strike: f64) -> Result<()> {
    if !(state.s < t && t < spec.horizon) {
        return Err(LrbError::domain(format!("call needs s < t < T, got s={}, t={t}", state.s)));
    }
    if !(strike >= 0.0 && strike.is_finite()) {
        return Err(LrbError::domain("strike must be finite and nonnegative"));
    }
    Ok(())
}

/// Exercise set `{x : Lambda(t, x) > K}`, located by sampling `Lambda` on a
/// sinh-spaced grid and bisecting every sign change.
pub fn exercise_set(
    spec: &LrbSpec,
    state: &ConditionedState,
    t: f64,
    strike: f64,
    curve: &DiscountCurve,
    h: &dyn Fn(f64) -> f64,
) -> Result<Vec<(f64, f64)>> {
    check_call_times(spec, state, t, strike)?;
    if let IncrementFamily::Gamma { m } = spec.family {
        if m * (spec.horizon - t) <= 1.0 {
            return Err(LrbError::unsupported(format!(
                "gamma information with m(T-t) = {} <= 1: the bond price need not be monotone in the information",
                m * (spec.horizon - t)
            )));
        }
    }
    let p_tt = curve.discount(t, spec.horizon)?;
    let s = state.s;
    let frac = (t - s) / (spec.horizon - s);
    let center = state.conditional_mean(t).ok().filter(|v| v.is_finite()).unwrap_or(state.xi);
    let iqr = match (state.posterior.quantile(0.25, 1e-8), state.posterior.quantile(0.75, 1e-8)) {
        (Ok(a), Ok(b)) => b - a,
        _ => 0.0,
    };
    let w = family_scale(&spec.family, t - s).max(iqr * frac).max(1e-9 * (1.0 + center.abs()));
    let grid: Vec<f64> = if spec.family.support() == Support::Positive {
        (0..=350).map(|i| state.xi + w * (-25.0 + 0.1 * i as f64).exp()).collect()
    } else {
        (0..=200).map(|i| center + w * (-10.0 + 0.1 * i as f64).sinh()).collect()
    };
    let g = |x: f64| -> Result<bool> { Ok(lambda_at(spec, t, x, p_tt, h)?.is_some_and(|v| v > strike)) };
    let mut flags = Vec::with_capacity(grid.len());
    for &x in &grid {
        flags.push(g(x)?);
    }
    let root = |mut lo: f64, mut hi: f64, lo_in: bool| -> Result<f64> {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-13 * (1.0 + mid.abs()) {
                break;
            }
            if g(mid)? == lo_in {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let mut out = Vec::new();
    let mut start = if flags[0] { Some(f64::NEG_INFINITY) } else { None };
    for i in 1..grid.len() {
        if flags[i] != flags[i - 1] {
            let x = root(grid[i - 1], grid[i], flags[i - 1])?;
            if flags[i] {
                start = Some(x);
            } else if let Some(a) = start.take() {
                out.push((a, x));
            }
        }
    }
    if let Some(a) = start {
        out.push((a, f64::INFINITY));
    }
    Ok(out)
}

/// `mu_st(A; z)`: probability that the bridge from `(s, xi_s)` to `(T, z)`
/// sits in `A` at time `t`.
fn bridge_mass(
    family: IncrementFamily,
    s: f64,
    xi_s: f64,
    t: f64,
    horizon: f64,
    z: f64,
    set: &[(f64, f64)],
) -> Result<f64> {
    let law = BridgeLaw::new(family, t - s, horizon - s, z - xi_s)?;
    let cdf = |x: f64| -> Result<f64> {
        if x == f64::NEG_INFINITY {
            Ok(0.0)
        } else if x == f64::INFINITY {
            Ok(1.0)
        } else {
            law.cdf(x - xi_s)
        }
    };
    let mut acc = 0.0;
    for &(a, b) in set {
        acc += cdf(b)? - cdf(a)?;
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// Time-`s` price of a call struck at `K` and expiring at `t` on the price
/// `Lambda(t, xi_t)` of the cash flow `h(X_T)`:
/// `C = P_st int (P_tT h(z) - K) mu_st(B_t; z) nu_s(dz)`.
pub fn call_on_bond(
    spec: &LrbSpec,
    state: &ConditionedState,
    t: f64,
    strike: f64,
    curve: &DiscountCurve,
    h: &dyn Fn(f64) -> f64,
) -> Result<CallQuote> {
    check_call_times(spec, state, t, strike)?;
    let p_st = curve.discount(state.s, t)?;
    let p_tt = curve.discount(t, spec.horizon)?;
    if let IncrementFamily::Poisson { .. } = spec.family {
        return poisson_call(spec, state, t, strike, p_st, p_tt, h);
    }
    let set = exercise_set(spec, state, t, strike, curve, h)?;
    if set.is_empty() {
        return Ok(CallQuote { price: 0.0, exercise_set: set });
    }
    let (s, xi, tt, fam) = (state.s, state.xi, spec.horizon, spec.family);
    let mut acc = 0.0;
    for &(z, w) in &state.posterior.atoms {
        if w > 0.0 {
            acc += w * (p_tt * h(z) - strike) * bridge_mass(fam, s, xi, t, tt, z, &set)?;
        }
    }
    if let Some((m, part)) = &state.posterior.continuous {
        if *m > 0.0 {
            let g = |z: f64| match bridge_mass(fam, s, xi, t, tt, z, &set) {
                Ok(mu) => (p_tt * h(z) - strike) * mu,
                Err(_) => f64::NAN,
            };
            let v = part.expect(&g)?;
            if !v.is_finite() {
                return Err(LrbError::numeric("bridge probabilities failed inside the call integral", v));
            }
            acc += m * v;
        }
    }
    Ok(CallQuote { price: (p_st * acc).max(0.0), exercise_set: set })
}

fn poisson_call(
    spec: &LrbSpec,
    state: &ConditionedState,
    t: f64,
    strike: f64,
    p_st: f64,
    p_tt: f64,
    h: &dyn Fn(f64) -> f64,
) -> Result<CallQuote> {
    let n = state.xi.round();
    let top = state.posterior.atoms.iter().map(|a| a.0).fold(n, f64::max);
    let frac = (t - state.s) / (spec.horizon - state.s);
    let mut set = Vec::new();
    let mut in_set = Vec::new();
    let mut j = n;
    while j <= top {
        let inside = lambda_at(spec, t, j, p_tt, h)?.is_some_and(|v| v > strike);
        in_set.push(inside);
        if inside {
            set.push((j - 0.5, j + 0.5));
        }
        j += 1.0;
    }
    let mut acc = 0.0;
    for &(z, w) in &state.posterior.atoms {
        if w <= 0.0 {
            continue;
        }
        let k = (z - n) as u64;
        let mut mu = 0.0;
        for (i, inside) in in_set.iter().enumerate().take(k as usize + 1) {
            if *inside {
                mu += crate::bridges::poisson_bridge_pmf(k, frac, 1.0, i as u64);
            }
        }
        acc += w * (p_tt * h(z) - strike) * mu;
    }
    Ok(CallQuote { price: (p_st * acc).max(0.0), exercise_set: set })
}

/// Critical information value `xi_t^*` solving `Lambda(t, x) = K` for a
/// binary bond under Brownian information with volatility `sigma`.
pub fn brownian_critical_value(
    payoff: &BinaryPayoff,
    sigma: f64,
    horizon: f64,
    t: f64,
    strike: f64,
    p_tt: f64,
) -> Result<f64> {
    payoff.validate()?;
    let (k0, k1) = (payoff.k0, payoff.k1);
    if !(strike > p_tt * k0 && strike < p_tt * k1) {
        return Err(LrbError::domain("critical value exists only for P k0 < K < P k1"));
    }
    let odds = payoff.p / (1.0 - payoff.p) * (strike - p_tt * k0) / (p_tt * k1 - strike);
    Ok(t * (k0 + k1) / (2.0 * horizon) + sigma * sigma * (horizon - t) / (k1 - k0) * odds.ln())
}

/// Closed-form call on a Brownian-information binary bond.
#[allow(clippy::too_many_arguments)]
pub fn brownian_binary_call(
    payoff: &BinaryPayoff,
    sigma: f64,
    horizon: f64,
    s: f64,
    xi_s: f64,
    t: f64,
    strike: f64,
    curve: &DiscountCurve,
) -> Result<f64> {
    if !(s < t && t < horizon) {
        return Err(LrbError::domain("call needs s < t < T"));
    }
    let bond = BinaryBond::Generic { family: IncrementFamily::Brownian { theta: 0.0, sigma }, payoff: *payoff };
    let p_st = curve.discount(s, t)?;
    let p_tt = curve.discount(t, horizon)?;
    let q0 = bond.default_probability(horizon, s, xi_s)?;
    if strike <= p_tt * payoff.k0 {
        return Ok(p_st * (p_tt * (payoff.k0 * q0 + payoff.k1 * (1.0 - q0)) - strike));
    }
    if strike >= p_tt * payoff.k1 {
        return Ok(0.0);
    }
    let x_star = brownian_critical_value(payoff, sigma, horizon, t, strike, p_tt)?;
    let v = sigma * sigma * (t - s) * (horizon - t) / (horizon - s);
    let mean = |z: f64| ((horizon - t) * xi_s + (t - s) * z) / (horizon - s);
    let leg = |z: f64, q: f64| (p_tt * z - strike) * norm_cdf((mean(z) - x_star) / v.sqrt()) * q;
    Ok(p_st * (leg(payoff.k0, q0) + leg(payoff.k1, 1.0 - q0)))
}

/// Closed-form call under gamma information (`h(x) = x`), valid when
/// `m (T - t) > 1` so that the exercise set is a half-line `(xi*, inf)`.
pub fn gamma_call(spec: &LrbSpec, state: &ConditionedState, t: f64, strike: f64, curve: &DiscountCurve) -> Result<f64> {
    let m = match spec.family {
        IncrementFamily::Gamma { m } => m,
        _ => return Err(LrbError::domain("gamma_call needs the gamma family")),
    };
    check_call_times(spec, state, t, strike)?;
    let tt = spec.horizon;
    if m * (tt - t) <= 1.0 {
        return Err(LrbError::unsupported(format!("gamma call with m(T-t) = {} <= 1", m * (tt - t))));
    }
    let p_st = curve.discount(state.s, t)?;
    let p_tt = curve.discount(t, tt)?;
    let id = |z: f64| z;
    let above = |x: f64| -> Result<bool> { Ok(lambda_at(spec, t, x, p_tt, &id)?.is_some_and(|v| v > strike)) };
    let xs = state.xi;
    let scale = family_scale(&spec.family, tt - state.s).max(1e-12);
    let mut lo = xs;
    if above(xs + 1e-12 * scale)? {
        return Ok(p_st * (p_tt * state.terminal_mean()? - strike));
    }
    let mut hi = xs + scale;
    let mut step = scale;
    loop {
        if above(hi)? {
            break;
        }
        lo = hi;
        step *= 2.0;
        hi += step;
        if lambda_at(spec, t, hi, p_tt, &id)?.is_none() || !hi.is_finite() {
            return Ok(0.0);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x_star = 0.5 * (lo + hi);
    let (a, b) = (m * (tt - t), m * (t - state.s));
    let g = |z: f64| {
        if z <= x_star {
            return 0.0;
        }
        match reg_inc_beta((z - x_star) / (z - xs), a, b) {
            Ok(i) => (p_tt * z - strike) * i,
            Err(_) => f64::NAN,
        }
    };
    let v = state.posterior.expect(&g)?;
    if !v.is_finite() {
        return Err(LrbError::numeric("incomplete beta failed inside the gamma call", v));
    }
    Ok((p_st * v).max(0.0))
}

/// Numerator and denominator coefficients of the Cauchy bond price
/// `Lambda(t, x) = P_{tT} (a0 + a1 x + a2 x^2) / (b0 + b1 x + b2 x^2)`.
pub fn cauchy_lambda_coefficients(c: f64, payoff: &BinaryPayoff, horizon: f64, t: f64) -> ([f64; 3], [f64; 3]) {
    let (k0, k1, p) = (payoff.k0, payoff.k1, payoff.p);
    let ct2 = c * c * horizon * horizon;
    let d = c * c * (horizon - t).powi(2);
    let a0 = p * (ct2 + k0 * k0);
    let a1 = (1.0 - p) * (ct2 + k1 * k1);
    let alpha = [k0 * a0 * (d + k1 * k1) + k1 * a1 * (d + k0 * k0), -2.0 * k0 * k1 * (a0 + a1), k0 * a0 + k1 * a1];
    let beta = [a0 * (d + k1 * k1) + a1 * (d + k0 * k0), -2.0 * (k1 * a0 + k0 * a1), a0 + a1];
    (alpha, beta)
}

/// Closed-form call on the Cauchy binary bond.
#[allow(clippy::too_many_arguments)]
pub fn cauchy_call_closed_form(
    c: f64,
    payoff: &BinaryPayoff,
    horizon: f64,
    s: f64,
    xi_s: f64,
    t: f64,
    strike: f64,
    curve: &DiscountCurve,
) -> Result<CallQuote> {
    payoff.validate()?;
    if !(s < t && t < horizon) {
        return Err(LrbError::domain("call needs s < t < T"));
    }
    let bond = BinaryBond::Cauchy { c, payoff: *payoff };
    let p_st = curve.discount(s, t)?;
    let p_tt = curve.discount(t, horizon)?;
    let q0 = bond.default_probability(horizon, s, xi_s)?;
    let b_st = p_st * p_tt * (payoff.k0 * q0 + payoff.k1 * (1.0 - q0));
    let (al, be) = cauchy_lambda_coefficients(c, payoff, horizon, t);
    let lam = |x: f64| p_tt * (al[0] + al[1] * x + al[2] * x * x) / (be[0] + be[1] * x + be[2] * x * x);
    let root = ((payoff.k0 - payoff.k1).powi(2) + 4.0 * c * c * (horizon - t).powi(2)).sqrt();
    let x_hi = 0.5 * (payoff.k0 + payoff.k1 + root);
    let x_lo = 0.5 * (payoff.k0 + payoff.k1 - root);
    if strike >= lam(x_hi) {
        return Ok(CallQuote { price: 0.0, exercise_set: vec![] });
    }
    if strike <= lam(x_lo) {
        return Ok(CallQuote { price: b_st - p_st * strike, exercise_set: vec![(f64::NEG_INFINITY, f64::INFINITY)] });
    }
    // Lambda - K has the sign of a x^2 + b x + e since the denominator is positive.
    let a = p_tt * al[2] - strike * be[2];
    let b = p_tt * al[1] - strike * be[1];
    let e = p_tt * al[0] - strike * be[0];
    let k_star = p_tt * al[2] / be[2];
    let set = if (strike - k_star).abs() <= 1e-14 * k_star.abs().max(1e-300) {
        let x = -e / b;
        if b > 0.0 {
            vec![(x, f64::INFINITY)]
        } else {
            vec![(f64::NEG_INFINITY, x)]
        }
    } else {
        let disc = (b * b - 4.0 * a * e).max(0.0).sqrt();
        // Stable quadratic roots.
        let qq = -0.5 * (b + b.signum() * disc);
        let (mut r1, mut r2) = (qq / a, e / qq);
        if r1 > r2 {
            std::mem::swap(&mut r1, &mut r2);
        }
        if a < 0.0 {
            vec![(r1, r2)]
        } else {
            vec![(f64::NEG_INFINITY, r1), (r2, f64::INFINITY)]
        }
    };
    let fam = IncrementFamily::Cauchy { c };
    let mut acc = 0.0;
    for (z, q) in [(payoff.k0, q0), (payoff.k1, 1.0 - q0)] {
        acc += q * (p_tt * z - strike) * bridge_mass(fam, s, xi_s, t, horizon, z, &set)?;
    }
    Ok(CallQuote { price: (p_st * acc).max(0.0), exercise_set: set })
}

// ---------------------------------------------------------------------------
// Equity models
// ---------------------------------------------------------------------------

/// Exponential Lévy stock model `S_t = S_0 exp(r t + L_t + w t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquityModel {
    /// `L` variance gamma `(m, theta, sigma)`.
    Vg { m: f64, theta: f64, sigma: f64 },
    /// `L` normal inverse Gaussian `(c, theta, sigma)`.
    Nig { c: f64, theta: f64, sigma: f64 },
}

impl EquityModel {
    pub fn levy_family(&self) -> IncrementFamily {
        match *self {
            EquityModel::Vg { m, theta, sigma } => IncrementFamily::VarianceGamma { m, theta, sigma },
            EquityModel::Nig { c, theta, sigma } => IncrementFamily::NormalInverseGaussian { c, theta, sigma },
        }
    }

    /// Drift correction `w` with `E[e^{L_t}] = e^{-w t}`.
    pub fn drift(&self) -> Result<f64> {
        self.levy_family().validate()?;
        match *self {
            EquityModel::Vg { m, theta, sigma } => {
                let a = 1.0 - theta / m - sigma * sigma / (2.0 * m);
                if !(a > 0.0) {
                    return Err(LrbError::domain("VG exponential moment needs theta + sigma^2/2 < m"));
                }
                Ok(m * a.ln())
            }
            EquityModel::Nig { c, theta, sigma } => {
                let a = c * c - sigma * sigma - 2.0 * theta;
                if !(a > 0.0) {
                    return Err(LrbError::domain("NIG exponential moment needs c^2 > sigma^2 + 2 theta"));
                }
                Ok(c * a.sqrt() - c * c)
            }
        }
    }

    /// Symmetric standard information process, its terminal law and the
    /// scale `rho` with `sigma xi / rho` equal in law to `L`.
    pub fn info_spec(&self, horizon: f64) -> Result<(LrbSpec, f64)> {
        self.drift()?;
        let (family, terminal, rho) = match *self {
            EquityModel::Vg { m, theta, sigma } => {
                let rho = vg_k(m, theta, sigma);
                (
                    IncrementFamily::VarianceGamma { m, theta: 0.0, sigma: 1.0 },
                    IncrementFamily::VarianceGamma { m, theta: theta * rho / sigma, sigma: rho },
                    rho,
                )
            }
            EquityModel::Nig { c, theta, sigma } => {
                let d = nig_derive(c, theta, sigma)?;
                (
                    IncrementFamily::NormalInverseGaussian { c: d.alpha, theta: 0.0, sigma: 1.0 },
                    IncrementFamily::NormalInverseGaussian { c, theta: theta * d.k_factor / sigma, sigma: d.k_factor },
                    d.k_factor,
                )
            }
        };
        let nu = TerminalLaw::named(crate::lrb::NamedDensity::Marginal { family: terminal, t: horizon })?;
        Ok((LrbSpec::new(family, horizon, nu)?, rho))
    }
}

/// Outcome of the information-based recovery check of an equity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityCheck {
    pub w: f64,
    pub rho: f64,
    /// `E[e^{sigma (xi_T - xi_t)/rho} | xi_t] e^{w (T-t)}`; equals 1.
    pub unit_mean: f64,
    /// `P_{tT} E[h(X_T) | xi_t]` with `h(x) = S0 e^{rT + sigma x/rho + wT}`.
    pub info_price: f64,
    /// `S0 e^{rt + sigma xi_t/rho + wt}`.
    pub model_price: f64,
}

pub fn equity_model_check(
    model: &EquityModel,
    horizon: f64,
    rate: f64,
    s0: f64,
    t: f64,
    xi: f64,
) -> Result<EquityCheck> {
    let w = model.drift()?;
    let (spec, rho) = model.info_spec(horizon)?;
    let sigma = match *model {
        EquityModel::Vg { sigma, .. } | EquityModel::Nig { sigma, .. } => sigma,
    };
    let st = spec.condition(t, xi)?;
    let tau = horizon - t;
    let unit_mean = st.posterior.expect(&|z| (sigma * (z - xi) / rho + w * tau).exp())?;
    let curve = DiscountCurve::flat(rate);
    let info_price = cashflow_price(&st, &curve, &|z| s0 * (rate * horizon + sigma * z / rho + w * horizon).exp())?;
    let model_price = s0 * (rate * t + sigma * xi / rho + w * t).exp();
    Ok(EquityCheck { w, rho, unit_mean, info_price, model_price })
}

// ---------------------------------------------------------------------------
// Poisson random bridges
// ---------------------------------------------------------------------------

fn poisson_state(spec: &LrbSpec, s: f64, n_s: u64) -> Result<ConditionedState> {
    if !matches!(spec.family, IncrementFamily::Poisson { .. }) {
        return Err(LrbError::domain("needs the Poisson family"));
    }
    spec.condition(s, n_s as f64)
}

/// Intensity `(E[N_T | N_s] - N_s) / (T - s)`.
pub fn prb_intensity(spec: &LrbSpec, s: f64, n_s: u64) -> Result<f64> {
    let st = poisson_state(spec, s, n_s)?;
    Ok((st.terminal_mean()? - n_s as f64) / (spec.horizon - s))
}

/// `Q[no jump in (s, u] | N_s] = w^{-N_s} G_{P_s}(w)` with `w = (T-u)/(T-s)`.
/// The expression is analytic in `u`, so `u` slightly below `s` is accepted.
pub fn prb_next_jump_survival(spec: &LrbSpec, s: f64, n_s: u64, u: f64) -> Result<f64> {
    let st = poisson_state(spec, s, n_s)?;
    let w = (spec.horizon - u) / (spec.horizon - s);
    let n = n_s as f64;
    Ok(st.posterior.atoms.iter().map(|&(k, p)| p * w.powf(k - n)).sum())
}

fn pgf(atoms: &[(f64, f64)], shift: f64, z: Complex64) -> Complex64 {
    atoms.iter().map(|&(k, p)| z.powf(k - shift) * p).sum()
}

/// Characteristic function of the compound PRB `Y_t = sum_{i <= N_t} X_i`:
/// `G_P(1 - t/T + (t/T) chi_X(alpha))`.
pub fn cprb_char_fn(spec: &LrbSpec, jump_cf: &dyn Fn(f64) -> Complex64, t: f64, alpha: f64) -> Result<Complex64> {
    if !matches!(spec.family, IncrementFamily::Poisson { .. }) {
        return Err(LrbError::domain("needs the Poisson family"));
    }
    if !(t >= 0.0 && t <= spec.horizon) {
        return Err(LrbError::domain("time outside [0, T]"));
    }
    let f = t / spec.horizon;
    let z = Complex64::new(1.0 - f, 0.0) + jump_cf(alpha) * f;
    Ok(pgf(&spec.nu.atoms, 0.0, z))
}

/// Conditional characteristic function of `Y_t` given `(Y_s, N_s)`.
pub fn cprb_char_fn_conditional(
    spec: &LrbSpec,
    jump_cf: &dyn Fn(f64) -> Complex64,
    s: f64,
    n_s: u64,
    y_s: f64,
    t: f64,
    alpha: f64,
) -> Result<Complex64> {
    if !(t >= s && t <= spec.horizon) {
        return Err(LrbError::domain("needs s <= t <= T"));
    }
    let st = poisson_state(spec, s, n_s)?;
    let f = (t - s) / (spec.horizon - s);
    let z = Complex64::new(1.0 - f, 0.0) + jump_cf(alpha) * f;
    Ok(Complex64::from_polar(1.0, alpha * y_s) * pgf(&st.posterior.atoms, n_s as f64, z))
}

fn ln_choose_real(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `Q[N_t = j | N_s = i]` under a negative-binomial `(m, p)` terminal law.
pub fn nb_transition(m: f64, p: f64, horizon: f64, s: f64, i: u64, t: f64, j: u64) -> f64 {
    if j < i {
        return 0.0;
    }
    let a = p + s / horizon * (1.0 - p);
    let b = p + t / horizon * (1.0 - p);
    let d = (j - i) as f64;
    let e = (t - s) / horizon * (1.0 - p);
    let ln_c = ln_gamma(j as f64 + m) - ln_gamma(i as f64 + m) - ln_factorial(j - i);
    let ln_e = if d == 0.0 { 0.0 } else { d * (e / b).ln() };
    (ln_c + (i as f64 + m) * (a / b).ln() + ln_e).exp()
}

/// `Q[N_T = j | N_s = i]` under a negative-binomial `(m, p)` terminal law.
pub fn nb_terminal(m: f64, p: f64, horizon: f64, s: f64, i: u64, j: u64) -> f64 {
    if j < i {
        return 0.0;
    }
    let a = p + s / horizon * (1.0 - p);
    let d = (j - i) as f64;
    let ln_c = ln_gamma(j as f64 + m) - ln_gamma(i as f64 + m) - ln_factorial(j - i);
    let ln_e = if d == 0.0 { 0.0 } else { d * ((1.0 - s / horizon) * (1.0 - p)).ln() };
    (ln_c + (i as f64 + m) * a.ln() + ln_e).exp()
}

/// Intensity `(N_s + m)(1 - p) / (p T + s (1 - p))` of the negative-binomial PRB.
pub fn nb_intensity(m: f64, p: f64, horizon: f64, s: f64, n_s: u64) -> f64 {
    (n_s as f64 + m) * (1.0 - p) / (p * horizon + s * (1.0 - p))
}

/// `Q[N_t = j | N_s = i]` under a log-series `(p)` terminal law.
pub fn log_series_transition(p: f64, horizon: f64, s: f64, i: u64, t: f64, j: u64) -> f64 {
    if j < i {
        return 0.0;
    }
    let a = p + s / horizon * (1.0 - p);
    let b = p + t / horizon * (1.0 - p);
    let e = (t - s) / horizon * (1.0 - p) / b;
    if i == 0 {
        if j == 0 {
            b.ln() / a.ln()
        } else {
            -(j as f64 * e.ln()).exp() / (j as f64 * a.ln())
        }
    } else {
        let d = (j - i) as f64;
        let ln_e = if d == 0.0 { 0.0 } else { d * e.ln() };
        (ln_choose_real((j - 1) as f64, d) + i as f64 * (a / b).ln() + ln_e).exp()
    }
}

/// `Q[N_T = j | N_s = i]` under a log-series `(p)` terminal law.
pub fn log_series_terminal(p: f64, horizon: f64, s: f64, i: u64, j: u64) -> f64 {
    if j < i || j == 0 {
        return 0.0;
    }
    let a = p + s / horizon * (1.0 - p);
    let e = (1.0 - s / horizon) * (1.0 - p);
    if i == 0 {
        -(j as f64 * e.ln()).exp() / (j as f64 * a.ln())
    } else {
        let d = (j - i) as f64;
        let ln_e = if d == 0.0 { 0.0 } else { d * e.ln() };
        (ln_choose_real((j - 1) as f64, d) + i as f64 * a.ln() + ln_e).exp()
    }
}

/// Mixed Poisson terminal law `P(k) = T^k/k! int theta^k e^{-theta T} pi(theta) dtheta`.
#[derive(Debug, Clone)]
pub struct MixedPoisson {
    pub mixing: crate::lrb::ContinuousPart,
}

impl MixedPoisson {
    pub fn new(mixing: crate::lrb::ContinuousPart) -> Result<Self> {
        if mixing.support.0 < 0.0 {
            return Err(LrbError::config("mixing density must live on (0, inf)"));
        }
        Ok(MixedPoisson { mixing })
    }

    /// `ln int theta^j e^{-theta t} pi(theta) dtheta`, scaled at the mode of
    /// the weight to stay in range.
    fn ln_weighted(&self, j: f64, t: f64) -> Result<f64> {
        let peak = if t > 0.0 && j > 0.0 { j * (j / t).ln() - j } else { 0.0 };
        let v = self.mixing.expect(&|th: f64| {
            if th <= 0.0 {
                return if j == 0.0 { 1.0 } else { 0.0 };
            }
            (j * th.ln() - th * t - peak).exp()
        })?;
        Ok(v.ln() + peak)
    }

    /// Posterior mean `E[Theta | N_s]`; this is the intensity at `s`.
    pub fn posterior_mean(&self, s: f64, n_s: u64) -> Result<f64> {
        let n = n_s as f64;
        Ok((self.ln_weighted(n + 1.0, s)? - self.ln_weighted(n, s)?).exp())
    }

    pub fn intensity(&self, s: f64, n_s: u64) -> Result<f64> {
        self.posterior_mean(s, n_s)
    }

    /// `E[N_T | N_s] = N_s + (T - s) E[Theta | N_s]`.
    pub fn expected_terminal(&self, horizon: f64, s: f64, n_s: u64) -> Result<f64> {
        Ok(n_s as f64 + (horizon - s) * self.posterior_mean(s, n_s)?)
    }

    /// `Q[N_t = j | N_s = i]`, valid for `t <= T` including the horizon.
    pub fn transition(&self, s: f64, i: u64, t: f64, j: u64) -> Result<f64> {
        if j < i {
            return Ok(0.0);
        }
        let d = (j - i) as f64;
        let ln =
            self.ln_weighted(j as f64, t)? - self.ln_weighted(i as f64, s)? + d * (t - s).ln() - ln_factorial(j - i);
        Ok(if d == 0.0 && t == s { 1.0 } else { ln.exp() })
    }

    /// Prior mass `P(k)` at horizon `T`.
    pub fn pmf(&self, horizon: f64, k: u64) -> Result<f64> {
        self.transition(0.0, 0, horizon, k)
    }
}

// ---------------------------------------------------------------------------
// nth-to-default baskets
// ---------------------------------------------------------------------------

/// Homogeneous credit basket with defaults at the jumps of a Poisson bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasketSpec {
    /// Number of names `K`.
    pub size: usize,
    /// Terminal pmf of the default count on `{0, ..., K}`.
    pub pmf: Vec<f64>,
    /// Index `n` of the protected default.
    pub n: usize,
    pub premium: f64,
    pub rate: f64,
    pub recovery: f64,
    pub maturity: f64,
}

impl BasketSpec {
    pub fn validate(&self) -> Result<()> {
        if self.pmf.len() != self.size + 1 {
            return Err(LrbError::config("pmf must have K + 1 entries"));
        }
        if self.pmf.iter().any(|p| !(*p >= 0.0)) || (self.pmf.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(LrbError::config("pmf must be nonnegative and sum to 1"));
        }
        if !(self.n >= 1 && self.n <= self.size) {
            return Err(LrbError::config("default index needs 1 <= n <= K"));
        }
        if !(self.recovery >= 0.0 && self.recovery <= 1.0) {
            return Err(LrbError::config("recovery must lie in [0, 1]"));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) || !self.rate.is_finite() || !self.premium.is_finite() {
            return Err(LrbError::config("maturity, rate and premium must be finite, maturity positive"));
        }
        Ok(())
    }

    /// `P_s(k)` proportional to `k!/(k-N_s)! (1 - s/T)^k P(k)` for `k >= N_s`.
    pub fn conditional_pmf(&self, s: f64, n_s: usize) -> Result<Vec<f64>> {
        if !(s >= 0.0 && s < self.maturity) {
            return Err(LrbError::domain("conditioning time outside [0, T)"));
        }
        let r = 1.0 - s / self.maturity;
        let mut out = vec![0.0; self.size + 1];
        let mut lw = vec![f64::NEG_INFINITY; self.size + 1];
        #[allow(clippy::needless_range_loop)]
        for k in n_s..=self.size {
            if self.pmf[k] > 0.0 {
                let d = (k - n_s) as f64;
                lw[k] = ln_factorial(k as u64) - ln_factorial((k - n_s) as u64)
                    + if d == 0.0 { 0.0 } else { d * r.ln() }
                    + self.pmf[k].ln();
            }
        }
        let top = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(LrbError::model(format!("{n_s} defaults by time {s} has zero probability")));
        }
        let mut tot = 0.0;
        for k in 0..=self.size {
            out[k] = (lw[k] - top).exp();
            tot += out[k];
        }
        for v in &mut out {
            *v /= tot;
        }
        Ok(out)
    }
}

/// The two legs of the swap, discounted to time 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NtdLegs {
    /// `E[int_s^{T_n ^ T} e^{-rt} e^{qt} dt | N_s]`.
    pub premium: f64,
    /// `(1 - R) E[1{T_n <= T} e^{-r T_n} | N_s]`.
    pub protection: f64,
    /// `Q[T_n > T | N_s]`.
    pub survival: f64,
}

impl NtdLegs {
    /// Swap value to the buyer with both legs added.
    pub fn value(&self) -> f64 {
        self.premium + self.protection
    }
}

/// `(e^x - 1) / x`.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 + x / 2.0 + x * x / 6.0
    } else {
        x.exp_m1() / x
    }
}

/// `(M(a, b, x) - 1) / x`, the expected value of `(e^{x B} - 1)/x` over
/// `B ~ Beta(a, b - a)`; a series near `x = 0`.
fn kummer_increment(a: f64, b: f64, x: f64) -> Result<f64> {
    if x.abs() < 0.5 {
        let mut term = a / b;
        let mut sum = term;
        for j in 1..200 {
            let jf = j as f64;
            term *= (a + jf) / (b + jf) * x / (jf + 1.0);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        Ok(sum)
    } else {
        Ok((kummer_m(a, b, x)? - 1.0) / x)
    }
}

/// Both legs at time `s` given `N_s < n` defaults so far.
pub fn ntd_legs(b: &BasketSpec, s: f64, n_s: usize) -> Result<NtdLegs> {
    b.validate()?;
    if n_s >= b.n {
        return Err(LrbError::domain("the protected default has already occurred"));
    }
    let ps = b.conditional_pmf(s, n_s)?;
    let tau = b.maturity - s;
    let z = b.premium - b.rate;
    let x = z * tau;
    let survival: f64 = ps[..b.n].iter().sum();
    let a = (b.n - n_s) as f64;
    let mut beta_leg = 0.0;
    let mut prot = 0.0;
    for (k, &p) in ps.iter().enumerate().skip(b.n) {
        if p == 0.0 {
            continue;
        }
        let bb = (k - n_s + 1) as f64;
        beta_leg += p * kummer_increment(a, bb, x)?;
        prot += p * kummer_m(a, bb, -b.rate * tau)?;
    }
    let premium = (z * s).exp() * tau * (beta_leg + survival * phi1(x));
    let protection = (1.0 - b.recovery) * (-b.rate * s).exp() * prot;
    Ok(NtdLegs { premium, protection, survival })
}

/// Value of the swap to the buyer, premium leg `int e^{-rt} e^{qt} dt` plus
/// protection leg.
pub fn ntd_swap_value(b: &BasketSpec, s: f64, n_s: usize) -> Result<f64> {
    Ok(ntd_legs(b, s, n_s)?.value())
}

/// Premium rate `q` at which protection equals the premium paid at rate `q`
/// discounted at `r` (buyer pays `q e^{-rt} dt`), by bisection to `1e-10`.
pub fn ntd_par_premium(b: &BasketSpec) -> Result<f64> {
    let at_zero = BasketSpec { premium: 0.0, ..b.clone() };
    let legs = ntd_legs(&at_zero, 0.0, 0)?;
    // legs.premium at q = 0 is the risky annuity E[int_0^{T_n ^ T} e^{-rt} dt].
    let value = |q: f64| legs.protection - q * legs.premium;
    let (mut lo, mut hi) = (0.0, 1.0);
    while value(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(LrbError::numeric("par premium bracket diverged", hi));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let v = value(mid);
        if v.abs() <= 1e-10 || hi - lo <= 1e-15 * hi {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
