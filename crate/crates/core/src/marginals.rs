//! Increment laws of the Lévy families used as bridge generators.

use crate::error::{LrbError, Result};
use crate::quad::{integrate_endpoint_singular, integrate_with_breaks, QuadConfig};
use crate::specfn::{exp_times_norm_cdf, ln_bessel_k, ln_factorial, ln_gamma, norm_cdf, reg_inc_gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A Lévy family, identified by the law of its increments over a time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum IncrementFamily {
    /// `theta t + sigma W_t`.
    Brownian { theta: f64, sigma: f64 },
    /// Gamma subordinator with mean `t` and variance `t/m`.
    Gamma { m: f64 },
    /// `theta G_t + sigma W(G_t)` with `G` a gamma subordinator of rate `m`.
    #[serde(rename = "vg")]
    VarianceGamma { m: f64, theta: f64, sigma: f64 },
    /// Stable subordinator of index 1/2 with activity `c`.
    StableHalf { c: f64 },
    /// Symmetric Cauchy process with scale `c t`.
    Cauchy { c: f64 },
    /// Inverse-Gaussian subordinator.
    #[serde(rename = "ig")]
    InverseGaussian { c: f64, gamma: f64 },
    /// `theta X_t + sigma W(X_t)` with `X` an IG subordinator, `c = gamma`.
    #[serde(rename = "nig")]
    NormalInverseGaussian { c: f64, theta: f64, sigma: f64 },
    /// Poisson counting process.
    Poisson { lambda: f64 },
}

/// Where increments live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Real,
    Positive,
    Counts,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LrbError::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(LrbError::domain(format!("{name} must be finite, got {v}")))
    }
}

impl IncrementFamily {
    pub fn validate(&self) -> Result<()> {
        use IncrementFamily::*;
        match *self {
            Brownian { theta, sigma } => {
                finite("theta", theta)?;
                positive("sigma", sigma)
            }
            Gamma { m } => positive("m", m),
            VarianceGamma { m, theta, sigma } => {
                positive("m", m)?;
                finite("theta", theta)?;
                positive("sigma", sigma)
            }
            StableHalf { c } | Cauchy { c } => positive("c", c),
            InverseGaussian { c, gamma } => {
                positive("c", c)?;
                positive("gamma", gamma)
            }
            NormalInverseGaussian { c, theta, sigma } => {
                positive("c", c)?;
                finite("theta", theta)?;
                positive("sigma", sigma)
            }
            Poisson { lambda } => positive("lambda", lambda),
        }
    }

    pub fn name(&self) -> &'static str {
        use IncrementFamily::*;
        match self {
            Brownian { .. } => "brownian",
            Gamma { .. } => "gamma",
            VarianceGamma { .. } => "vg",
            StableHalf { .. } => "stable_half",
            Cauchy { .. } => "cauchy",
            InverseGaussian { .. } => "ig",
            NormalInverseGaussian { .. } => "nig",
            Poisson { .. } => "poisson",
        }
    }

    pub fn support(&self) -> Support {
        use IncrementFamily::*;
        match self {
            Gamma { .. } | StableHalf { .. } | InverseGaussian { .. } => Support::Positive,
            Poisson { .. } => Support::Counts,
            _ => Support::Real,
        }
    }

    pub fn is_subordinator(&self) -> bool {
        matches!(self.support(), Support::Positive | Support::Counts)
    }

    pub fn is_discrete(&self) -> bool {
        self.support() == Support::Counts
    }

    /// Log density (or log mass for Poisson) of an increment over time `t`.
    /// Returns `-inf` off the support and `+inf` at the variance-gamma pole.
    pub fn ln_density(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(LrbError::domain(format!("increment time must be positive, got {t}")));
        }
        if x.is_nan() {
            return Err(LrbError::domain("NaN increment"));
        }
        use IncrementFamily::*;
        Ok(match *self {
            Brownian { theta, sigma } => {
                let v = sigma * sigma * t;
                let d = x - theta * t;
                -0.5 * d * d / v - 0.5 * v.ln() - LN_SQRT_2PI
            }
            Gamma { m } => ln_gamma_density(m, t, x),
            VarianceGamma { m, theta, sigma } => ln_vg_density(m, theta, sigma, t, x)?,
            StableHalf { c } => ln_stable_half_density(c, t, x),
            Cauchy { c } => {
                let s = c * t;
                (s / (PI * (x * x + s * s))).ln()
            }
            InverseGaussian { c, gamma } => {
                if !(x > 0.0) || x.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    let d = x - c * t / gamma;
                    (c * t).ln() - LN_SQRT_2PI - 1.5 * x.ln() - 0.5 * gamma * gamma * d * d / x
                }
            }
            NormalInverseGaussian { c, theta, sigma } => ln_nig_density(c, theta, sigma, t, x)?,
            Poisson { lambda } => {
                if x < 0.0 || x.fract() != 0.0 || x.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    ln_poisson_pmf(lambda, t, x as u64)
                }
            }
        })
    }

    /// Density (mass for Poisson) of an increment over time `t`.
    pub fn density(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.ln_density(t, x)?.exp())
    }

    /// Distribution function of an increment over time `t`.
    pub fn cdf(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(LrbError::domain(format!("increment time must be positive, got {t}")));
        }
        use IncrementFamily::*;
        match *self {
            Brownian { theta, sigma } => Ok(norm_cdf((x - theta * t) / (sigma * t.sqrt()))),
            Gamma { m } => {
                if x <= 0.0 {
                    Ok(0.0)
                } else {
                    reg_inc_gamma(m * t, m * x)
                }
            }
            StableHalf { c } => Ok(if x <= 0.0 { 0.0 } else { 2.0 * norm_cdf(-c * t / x.sqrt()) }),
            Cauchy { c } => Ok(0.5 + (x / (c * t)).atan() / PI),
            InverseGaussian { c, gamma } => {
                if x <= 0.0 {
                    return Ok(0.0);
                }
                let r = x.sqrt();
                let a = (gamma * x - c * t) / r;
                let b = -(gamma * x + c * t) / r;
                Ok((norm_cdf(a) + exp_times_norm_cdf(2.0 * gamma * c * t, b)).min(1.0))
            }
            Poisson { lambda } => {
                if x < 0.0 {
                    return Ok(0.0);
                }
                let n = x.floor();
                // P[N <= n] = Q(n+1, lambda t)
                crate::specfn::reg_inc_gamma_upper(n + 1.0, lambda * t)
            }
            VarianceGamma { .. } | NormalInverseGaussian { .. } => self.cdf_by_quadrature(t, x),
        }
    }

    /// Integrates the density on the side of `x` away from the origin, so that
    /// the variance-gamma pole at 0 is at most an endpoint of the tanh-sinh piece.
    fn cdf_by_quadrature(&self, t: f64, x: f64) -> Result<f64> {
        let cfg = QuadConfig::with_tol(1e-11, 1e-15);
        let sd = self.variance(t).map(f64::sqrt).unwrap_or(1.0);
        let f = |u: f64| self.density(t, u).unwrap_or(0.0);
        if x <= 0.0 {
            let far = integrate_with_breaks(f, f64::NEG_INFINITY, x - sd, &[], &cfg.with_scale(sd))?;
            let near = integrate_endpoint_singular(|u, _, _| f(u), x - sd, x, &cfg)?;
            Ok((far.value + near.value).clamp(0.0, 1.0))
        } else {
            let far = integrate_with_breaks(f, x + sd, f64::INFINITY, &[], &cfg.with_scale(sd))?;
            let near = integrate_endpoint_singular(|u, _, _| f(u), x, x + sd, &cfg)?;
            Ok((1.0 - far.value - near.value).clamp(0.0, 1.0))
        }
    }

    /// Mean of an increment over time `t`, when finite.
    pub fn mean(&self, t: f64) -> Option<f64> {
        use IncrementFamily::*;
        match *self {
            Brownian { theta, .. } | VarianceGamma { theta, .. } | NormalInverseGaussian { theta, .. } => {
                Some(theta * t)
            }
            Gamma { .. } => Some(t),
            InverseGaussian { c, gamma } => Some(c * t / gamma),
            Poisson { lambda } => Some(lambda * t),
            StableHalf { .. } | Cauchy { .. } => None,
        }
    }

    /// Variance of an increment over time `t`, when finite.
    pub fn variance(&self, t: f64) -> Option<f64> {
        use IncrementFamily::*;
        match *self {
            Brownian { sigma, .. } => Some(sigma * sigma * t),
            Gamma { m } => Some(t / m),
            VarianceGamma { m, theta, sigma } => Some(t * (sigma * sigma + theta * theta / m)),
            InverseGaussian { c, gamma } => Some(c * t / gamma.powi(3)),
            NormalInverseGaussian { c, theta, sigma } => Some(t * (sigma * sigma + theta * theta / (c * c))),
            Poisson { lambda } => Some(lambda * t),
            StableHalf { .. } | Cauchy { .. } => None,
        }
    }
}

fn ln_gamma_density(m: f64, t: f64, x: f64) -> f64 {
    if !(x > 0.0) || x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let a = m * t;
    a * m.ln() - ln_gamma(a) + (a - 1.0) * x.ln() - m * x
}

fn ln_stable_half_density(c: f64, t: f64, x: f64) -> f64 {
    if !(x > 0.0) || x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let ct = c * t;
    ct.ln() - LN_SQRT_2PI - 1.5 * x.ln() - 0.5 * ct * ct / x
}

/// Log density of the symmetric, unit-scale variance-gamma law `f^{(m)}_t`.
pub fn ln_vg_standard_density(m: f64, t: f64, y: f64) -> Result<f64> {
    let a = m * t;
    let nu = a - 0.5;
    let ay = y.abs();
    if ay == 0.0 {
        if a > 0.5 {
            return Ok(0.5 * (m / (2.0 * PI)).ln() + ln_gamma(a - 0.5) - ln_gamma(a));
        }
        return Ok(f64::INFINITY);
    }
    if ay.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let z = (2.0 * m).sqrt() * ay;
    Ok(0.5 * (2.0 / PI).ln() + a * m.ln() - ln_gamma(a)
        + (0.5 * a - 0.25) * (y * y / (2.0 * m)).ln()
        + ln_bessel_k(nu, z)?)
}

fn ln_vg_density(m: f64, theta: f64, sigma: f64, t: f64, x: f64) -> Result<f64> {
    let k = vg_k(m, theta, sigma);
    let base = ln_vg_standard_density(m, t, k * x / sigma)?;
    if base == f64::INFINITY {
        return Ok(base);
    }
    Ok(-sigma.ln() + theta * x / (sigma * sigma) + (1.0 - 2.0 * m * t) * k.ln() + base)
}

fn ln_nig_density(c: f64, theta: f64, sigma: f64, t: f64, x: f64) -> Result<f64> {
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let s2 = sigma * sigma;
    let a = c * c * s2 + theta * theta;
    let b = c * c * s2 * t * t + x * x;
    let arg = (a * b).sqrt() / s2;
    Ok((c * t / (sigma * PI)).ln() + c * c * t + theta * x / s2 + 0.5 * (a / b).ln() + ln_bessel_k(1.0, arg)?)
}

fn ln_poisson_pmf(lambda: f64, t: f64, k: u64) -> f64 {
    let mu = lambda * t;
    if mu == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * mu.ln() - mu - ln_factorial(k)
}

/// Poisson probability `P[N_t = k]` for intensity `lambda`; zero for negative `k`.
pub fn poisson_pmf(lambda: f64, t: f64, k: i64) -> Result<f64> {
    positive("lambda", lambda)?;
    if !(t >= 0.0) {
        return Err(LrbError::domain("time must be nonnegative"));
    }
    if k < 0 {
        return Ok(0.0);
    }
    Ok(ln_poisson_pmf(lambda, t, k as u64).exp())
}

/// `k_{(m,theta,sigma)} = sqrt(1 + theta^2 / (2 m sigma^2))`.
pub fn vg_k(m: f64, theta: f64, sigma: f64) -> f64 {
    (1.0 + theta * theta / (2.0 * m * sigma * sigma)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgDerived {
    pub k_factor: f64,
    /// Scale solving `rho = k_{(m,theta,rho)}`.
    pub rho: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
}

pub fn vg_derive(m: f64, theta: f64, sigma: f64) -> Result<VgDerived> {
    IncrementFamily::VarianceGamma { m, theta, sigma }.validate()?;
    let rho = (0.5 * (1.0 + (1.0 + 2.0 * theta * theta / m).sqrt())).sqrt();
    let root = (theta * theta + 2.0 * m * sigma * sigma).sqrt();
    Ok(VgDerived {
        k_factor: vg_k(m, theta, sigma),
        rho,
        mu_plus: 0.5 * (root + theta),
        mu_minus: 0.5 * (root - theta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigDerived {
    pub k_factor: f64,
    pub alpha: f64,
}

/// Scale and standard-law parameter that write `f^{(c,theta,sigma)}` as a
/// tilted, rescaled standard NIG density. The drift enters as
/// `theta / sigma`, which makes the rescaling exact for every `sigma`.
pub fn nig_derive(c: f64, theta: f64, sigma: f64) -> Result<NigDerived> {
    IncrementFamily::NormalInverseGaussian { c, theta, sigma }.validate()?;
    let th = theta / sigma;
    let r = (th * th + c * c).sqrt();
    Ok(NigDerived { k_factor: (r / c).sqrt(), alpha: (c * r).sqrt() })
}

/// Scale `k` for which the NIG law with parameters `(c, theta, k)` is an
/// exponential tilt of the standard NIG law with parameter `alpha = c k`.
/// Solves `c^2 u^3 - c^2 u - theta^2 = 0` for `u = k^2 >= 1`.
pub fn nig_self_consistent(c: f64, theta: f64) -> Result<NigDerived> {
    positive("c", c)?;
    finite("theta", theta)?;
    let q = theta * theta / (c * c);
    // u^3 - u - q = 0 has exactly one root >= 1.
    let mut u = 1.0 + q.cbrt().max(q / 2.0).min(q);
    for _ in 0..100 {
        let f = u * u * u - u - q;
        let step = f / (3.0 * u * u - 1.0);
        u -= step;
        if step.abs() <= 1e-16 * u {
            break;
        }
    }
    let k = u.sqrt();
    Ok(NigDerived { k_factor: k, alpha: c * k })
}

/// Moment `E[X_t^k]` of the inverse-Gaussian subordinator.
pub fn ig_moment(k: f64, c: f64, gamma: f64, t: f64) -> Result<f64> {
    positive("c", c)?;
    positive("gamma", gamma)?;
    positive("t", t)?;
    let z = gamma * c * t;
    Ok((k * (c * t / gamma).ln() + ln_bessel_k(k - 0.5, z)? - ln_bessel_k(0.5, z)?).exp())
}
