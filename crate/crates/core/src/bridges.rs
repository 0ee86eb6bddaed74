//! Lévy bridges: marginal laws of a Lévy process pinned at a terminal value,
//! closed-form distribution functions and moments, and elementary samplers.

use crate::error::{LrbError, Result};
use crate::marginals::IncrementFamily;
use crate::quad::{integrate, integrate_endpoint_singular, QuadConfig};
use crate::specfn::{erfcx, exp_times_norm_cdf, ln_beta, ln_factorial, norm_cdf, reg_inc_beta};
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, StandardNormal};
use std::f64::consts::{PI, SQRT_2};

/// Marginal law at time `t` of a bridge of `family` from 0 at time 0 to `z`
/// at time `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeLaw {
    pub family: IncrementFamily,
    pub t: f64,
    pub horizon: f64,
    pub z: f64,
}

impl BridgeLaw {
    pub fn new(family: IncrementFamily, t: f64, horizon: f64, z: f64) -> Result<Self> {
        family.validate()?;
        if !(t > 0.0 && t < horizon && horizon.is_finite()) {
            return Err(LrbError::domain(format!("bridge needs 0 < t < T, got t={t}, T={horizon}")));
        }
        let f = family.density(horizon, z)?;
        if !(f > 0.0 && f.is_finite()) {
            return Err(LrbError::domain(format!(
                "terminal value {z} has density {f} under the {} family",
                family.name()
            )));
        }
        Ok(BridgeLaw { family, t, horizon, z })
    }

    /// `f_t(y) f_{T-t}(z - y) / f_T(z)`; a binomial mass for Poisson.
    pub fn density(&self, y: f64) -> Result<f64> {
        let (t, tt, z) = (self.t, self.horizon, self.z);
        let fam = &self.family;
        let ln = fam.ln_density(t, y)? + fam.ln_density(tt - t, z - y)? - fam.ln_density(tt, z)?;
        if ln.is_nan() {
            // Pole of the variance-gamma law met by a zero-mass factor.
            return Ok(0.0);
        }
        Ok(ln.exp())
    }

    /// Distribution function; closed forms where available, quadrature otherwise.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        let (t, tt, z) = (self.t, self.horizon, self.z);
        use IncrementFamily::*;
        match self.family {
            StableHalf { c } | InverseGaussian { c, .. } => Ok(stable_half_bridge_cdf(t, tt, y, z, c)),
            Cauchy { c } => cauchy_bridge_cdf(t, tt, y, z, c),
            Brownian { sigma, .. } => {
                let sd = sigma * (t * (tt - t) / tt).sqrt();
                Ok(norm_cdf((y - t / tt * z) / sd))
            }
            Gamma { m } => {
                if y <= 0.0 {
                    Ok(0.0)
                } else if y >= z {
                    Ok(1.0)
                } else {
                    reg_inc_beta(y / z, m * t, m * (tt - t))
                }
            }
            Poisson { .. } => {
                let k = z.round() as u64;
                if y < 0.0 {
                    return Ok(0.0);
                }
                let top = (y.floor() as u64).min(k);
                Ok((0..=top).map(|j| binomial_pmf(k, j, t / tt)).sum::<f64>().min(1.0))
            }
            VarianceGamma { .. } | NormalInverseGaussian { .. } => self.cdf_by_quadrature(y),
        }
    }

    fn cdf_by_quadrature(&self, y: f64) -> Result<f64> {
        let cfg = QuadConfig::with_tol(1e-11, 1e-15);
        let f = |u: f64| self.density(u).unwrap_or(0.0);
        let (lo, hi) = (self.z.min(0.0), self.z.max(0.0));
        let scale = self.family.variance(self.horizon).map(f64::sqrt).unwrap_or(1.0).max(hi - lo);
        // Poles of the two factors sit at 0 and z; keep them at segment ends.
        let mut knots = vec![f64::NEG_INFINITY, lo - scale, lo];
        if hi > lo {
            knots.push(hi);
        }
        knots.push(hi + scale);
        knots.push(f64::INFINITY);
        let mut acc = 0.0;
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1].min(y));
            if b <= a {
                break;
            }
            acc += if a.is_infinite() || b.is_infinite() {
                integrate(f, a, b, &cfg.with_scale(scale))?.value
            } else {
                integrate_endpoint_singular(|u, _, _| f(u), a, b, &cfg)?.value
            };
        }
        Ok(acc.clamp(0.0, 1.0))
    }

    /// Mean of the bridge marginal.
    pub fn mean(&self) -> f64 {
        self.t / self.horizon * self.z
    }
}

fn binomial_pmf(k: u64, j: u64, p: f64) -> f64 {
    if j > k {
        return 0.0;
    }
    if p <= 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if j == k { 1.0 } else { 0.0 };
    }
    (ln_factorial(k) - ln_factorial(j) - ln_factorial(k - j) + j as f64 * p.ln() + (k - j) as f64 * (1.0 - p).ln())
        .exp()
}

/// Poisson bridge law: `Binomial(k, t/T)` mass at `j`.
pub fn poisson_bridge_pmf(k: u64, t: f64, horizon: f64, j: u64) -> f64 {
    binomial_pmf(k, j, t / horizon)
}

/// Arguments of the two normal distribution functions in the stable-1/2
/// bridge law, with the shared exponent `2 c^2 t (T-t) / z`.
fn stable_half_terms(t: f64, horizon: f64, y: f64, z: f64, c: f64) -> (f64, f64, f64) {
    let r = (y * z * (z - y)).sqrt();
    let a1 = c * (horizon * y - t * z) / r;
    let a2 = c * ((2.0 * t - horizon) * y - t * z) / r;
    let e = 2.0 * c * c * t * (horizon - t) / z;
    (a1, a2, e)
}

/// Distribution function of the stable-1/2 bridge from 0 to `z` over `[0, T]`.
pub fn stable_half_bridge_cdf(t: f64, horizon: f64, y: f64, z: f64, c: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= z {
        return 1.0;
    }
    let (a1, a2, e) = stable_half_terms(t, horizon, y, z, c);
    let v = norm_cdf(a1) + (1.0 - 2.0 * t / horizon) * exp_times_norm_cdf(e, a2);
    v.clamp(0.0, 1.0)
}

/// Incomplete first moment `int_0^y u f_{tT}(u; z) du` of the stable-1/2 bridge.
pub fn stable_half_bridge_partial_moment(t: f64, horizon: f64, y: f64, z: f64, c: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= z {
        return t / horizon * z;
    }
    let (a1, a2, e) = stable_half_terms(t, horizon, y, z, c);
    (t / horizon * z * (norm_cdf(a1) - exp_times_norm_cdf(e, a2))).max(0.0)
}

/// `e^{x^2/2} Phi(-x) sqrt(2 pi) x` for `x > 0`.
fn mills_times(x: f64) -> f64 {
    0.5 * erfcx(x / SQRT_2) * (2.0 * PI).sqrt() * x
}

/// Second moment of the stable-1/2 bridge marginal.
pub fn stable_half_bridge_second_moment(t: f64, horizon: f64, z: f64, c: f64) -> f64 {
    let x = c * horizon / z.sqrt();
    t / horizon * z * z * (1.0 - (horizon - t) / horizon * mills_times(x))
}

/// Variance of the stable-1/2 bridge marginal.
pub fn stable_half_bridge_variance(t: f64, horizon: f64, z: f64, c: f64) -> f64 {
    let x = c * horizon / z.sqrt();
    t * (horizon - t) / (horizon * horizon) * z * z * (1.0 - mills_times(x))
}

/// Distribution function of the Cauchy bridge from 0 to `z` over `[0, T]`.
pub fn cauchy_bridge_cdf(t: f64, horizon: f64, y: f64, z: f64, c: f64) -> Result<f64> {
    if y == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if y == f64::INFINITY {
        return Ok(1.0);
    }
    let a = c * t;
    let b = c * (horizon - t);
    let d = c * c * (horizon - 2.0 * t).powi(2) + z * z;
    if d > 1e-4 * (a + b).powi(2) {
        let den = PI * horizon * d;
        let q = c * c * horizon * (horizon - 2.0 * t);
        let v = 0.5
            + (horizon - t) * (q + z * z) / den * (y / a).atan()
            + t * (q - z * z) / den * ((z - y) / b).atan()
            + c * t * (horizon - t) * z / den * ((y * y + a * a) / ((z - y).powi(2) + b * b)).ln();
        return Ok(v.clamp(0.0, 1.0));
    }
    // Near z = 0, t = T/2 the coefficients above cancel; integrate the density.
    let f = |u: f64| cauchy_bridge_density(t, horizon, u, z, c);
    let cfg = QuadConfig::with_tol(1e-13, 1e-16).with_scale(a.max(b));
    let centre = t / horizon * z;
    if y <= centre {
        Ok(integrate(f, f64::NEG_INFINITY, y, &cfg)?.value.clamp(0.0, 1.0))
    } else {
        Ok((1.0 - integrate(f, y, f64::INFINITY, &cfg)?.value).clamp(0.0, 1.0))
    }
}

pub fn cauchy_bridge_density(t: f64, horizon: f64, y: f64, z: f64, c: f64) -> f64 {
    let a = c * t;
    let b = c * (horizon - t);
    c * t * (horizon - t) / (PI * horizon) * (z * z + c * c * horizon * horizon)
        / ((y * y + a * a) * ((z - y).powi(2) + b * b))
}

/// First and second moments of the Cauchy bridge marginal.
pub fn cauchy_bridge_moments(t: f64, horizon: f64, z: f64, c: f64) -> (f64, f64) {
    let r = t / horizon;
    (r * z, r * (z * z + c * c * horizon * (horizon - t)))
}

/// Conditional first and second moments of a Cauchy bridge at `t` given the
/// value `x` at `s`.
pub fn cauchy_bridge_conditional_moments(s: f64, x: f64, t: f64, horizon: f64, z: f64, c: f64) -> (f64, f64) {
    let r = (t - s) / (horizon - s);
    ((1.0 - r) * x + r * z, (1.0 - r) * x * x + r * (z * z + c * c * (horizon - s) * (horizon - t)))
}

/// The stable-1/2 bridge midpoint: maps a standard normal `zn` to a draw of
/// the bridge from `y0` at one time to `y1` a time `dt` later, at the middle.
pub fn stable_half_midpoint(y0: f64, y1: f64, dt: f64, c: f64, zn: f64) -> f64 {
    let w = y1 - y0;
    if w <= 0.0 {
        return y0;
    }
    let v = y0 + 0.5 * w * (1.0 + zn / (c * c * dt * dt / w + zn * zn).sqrt());
    v.clamp(y0, y1)
}

/// Exact draw of a stable-1/2 bridge from 0 to `z` over `[0, T]` at time `t`.
///
/// With `a = (T - 2t)/T`, the distribution function pulls back to
/// `x -> Phi(x) - a int_{-inf}^x phi h` under the monotone map `u` below, so
/// `x` is a standard normal whose sign is flipped with probability
/// `(1 + a h(x))/2`.
pub fn stable_half_bridge_sample<R: Rng + ?Sized>(t: f64, horizon: f64, z: f64, c: f64, rng: &mut R) -> f64 {
    if z <= 0.0 || t <= 0.0 {
        return 0.0;
    }
    if t >= horizon {
        return z;
    }
    let zn: f64 = StandardNormal.sample(rng);
    let a = (horizon - 2.0 * t) / horizon;
    let k = 4.0 * c * c * t * (horizon - t) * z;
    let h = |x: f64| x * z / (k + x * x * z * z).sqrt();
    let keep = (1.0 - a * h(zn)) / 2.0;
    let x = if rng.random::<f64>() < keep { zn } else { -zn };
    stable_half_bridge_transform(t, horizon, z, c, x)
}

/// The monotone map from the normal scale to the bridge value used by
/// [`stable_half_bridge_sample`].
pub fn stable_half_bridge_transform(t: f64, horizon: f64, z: f64, c: f64, x: f64) -> f64 {
    let k = 4.0 * c * c * t * (horizon - t) * z;
    let root = (k + x * x * z * z).sqrt();
    let den = 2.0 * (c * c * horizon * horizon + x * x * z);
    if x <= 0.0 {
        // x^2 z + x root, written without cancellation.
        let q = if x == 0.0 { 0.0 } else { -k * x * x / (x * x * z + x.abs() * root) };
        (z * (2.0 * c * c * t * horizon + q) / den).clamp(0.0, z)
    } else {
        let q = -k * x * x / (x * x * z + x * root);
        let gap = z * (2.0 * c * c * horizon * (horizon - t) + q) / den;
        (z - gap).clamp(0.0, z)
    }
}

/// Gamma bridge from 0 to 1 on `grid` (first point 0, last point `T`).
pub fn gamma_bridge_sample<R: Rng + ?Sized>(m: f64, grid: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let n = grid.len();
    let mut out = vec![0.0; n];
    if n == 1 {
        return Ok(out);
    }
    let mut acc = 0.0;
    let mut cum = vec![0.0; n];
    for i in 1..n {
        let shape = m * (grid[i] - grid[i - 1]);
        let g = if shape > 0.0 {
            GammaDist::new(shape, 1.0).map_err(|e| LrbError::domain(e.to_string()))?.sample(rng)
        } else {
            0.0
        };
        acc += g;
        cum[i] = acc;
    }
    for i in 1..n - 1 {
        out[i] = if acc > 0.0 { (cum[i] / acc).min(1.0) } else { grid[i] / grid[n - 1] };
    }
    out[n - 1] = 1.0;
    Ok(out)
}

/// Transition density of the gamma bridge to 1: a scaled beta law.
pub fn gamma_bridge_transition_density(m: f64, s: f64, x: f64, t: f64, horizon: f64, y: f64) -> f64 {
    if !(y > x && y < 1.0) {
        return 0.0;
    }
    let a = m * (t - s);
    let b = m * (horizon - t);
    let u = (y - x) / (1.0 - x);
    let v = (1.0 - y) / (1.0 - x);
    ((a - 1.0) * u.ln() + (b - 1.0) * v.ln() - ln_beta(a, b)).exp() / (1.0 - x)
}

/// Brownian bridge from 0 to 0 on `grid` (first point 0, last point `T`).
pub fn brownian_bridge_sample<R: Rng + ?Sized>(grid: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let zn: f64 = StandardNormal.sample(rng);
        w[i] = w[i - 1] + (grid[i] - grid[i - 1]).sqrt() * zn;
    }
    let tt = grid[n - 1];
    let wt = w[n - 1];
    let mut out: Vec<f64> = grid.iter().zip(&w).map(|(t, v)| v - t / tt * wt).collect();
    out[n - 1] = 0.0;
    out[0] = 0.0;
    Ok(out)
}

/// `Q[T_i <= t]` for the `i`-th jump time of a Poisson bridge with `k` jumps on `[0, T]`.
pub fn poisson_bridge_jump_time_cdf(i: u64, k: u64, t: f64, horizon: f64) -> Result<f64> {
    if i == 0 {
        return Err(LrbError::domain("jump index starts at 1"));
    }
    if i > k {
        return Ok(if t >= horizon { 1.0 } else { 0.0 });
    }
    let u = (t / horizon).clamp(0.0, 1.0);
    reg_inc_beta(u, i as f64, (k - i + 1) as f64)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid[0] != 0.0 {
        return Err(LrbError::domain("time grid must start at 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|v| !v.is_finite()) {
        return Err(LrbError::domain("time grid must be finite and strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stable_half_cdf_boundaries_and_midpoint() {
        assert_eq!(stable_half_bridge_cdf(0.3, 1.0, 0.0, 2.0, 1.0), 0.0);
        assert_eq!(stable_half_bridge_cdf(0.3, 1.0, 2.0, 2.0, 1.0), 1.0);
        assert_relative_eq!(stable_half_bridge_cdf(0.5, 1.0, 1.0, 2.0, 3.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn stable_half_moment_endpoints() {
        let (t, tt, z, c) = (1.0, 2.0, 4.0, 1.0);
        assert_eq!(stable_half_bridge_partial_moment(t, tt, z, z, c), 2.0);
        assert_relative_eq!(stable_half_bridge_second_moment(tt, tt, z, c), z * z, max_relative = 1e-15);
    }

    #[test]
    fn stable_half_large_activity_concentrates() {
        let (t, tt, z, c) = (0.4, 1.0, 1.0, 1e3);
        assert!(stable_half_bridge_cdf(t, tt, 0.4 - 0.01, z, c) < 1e-12);
        assert!(stable_half_bridge_cdf(t, tt, 0.4 + 0.01, z, c) > 1.0 - 1e-12);
    }

    #[test]
    fn cauchy_bridge_reference_points() {
        assert_relative_eq!(cauchy_bridge_cdf(0.5, 1.0, 0.0, 0.0, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(cauchy_bridge_moments(1.0, 2.0, 0.0, 1.0).1, 1.0);
    }

    #[test]
    fn cauchy_cdf_branches_agree() {
        // Close to the switching point the closed form and the quadrature agree.
        let (t, tt, c) = (0.499, 1.0, 1.0);
        for &y in &[-2.0, -0.3, 0.1, 1.7] {
            let closed = cauchy_bridge_cdf(t, tt, y, 0.05, c).unwrap();
            let cfg = QuadConfig::with_tol(1e-13, 0.0);
            let q = integrate(|u| cauchy_bridge_density(t, tt, u, 0.05, c), f64::NEG_INFINITY, y, &cfg).unwrap().value;
            assert!((closed - q).abs() < 1e-10, "y={y}: {closed} vs {q}");
        }
    }

    #[test]
    fn transform_at_midpoint_matches_closed_form_identity() {
        let (tt, z, c) = (2.0, 3.0, 1.3);
        for &x in &[-3.0, -0.4, 0.0, 0.9, 4.0] {
            let a = stable_half_bridge_transform(1.0, tt, z, c, x);
            let b = stable_half_midpoint(0.0, z, tt, c, x);
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn general_time_sampler_pulls_back_the_cdf() {
        // F(u(x)) = Phi(x) - a int_{-inf}^x phi(v) h(v) dv
        let (t, tt, z, c) = (0.2, 1.0, 1.5, 2.0);
        let a = (tt - 2.0 * t) / tt;
        let k = 4.0 * c * c * t * (tt - t) * z;
        let cfg = QuadConfig::with_tol(1e-12, 1e-15);
        for &x in &[-2.5, -1.0, 0.0, 0.7, 2.0] {
            let tail = integrate(
                |v: f64| crate::specfn::norm_pdf(v) * v * z / (k + v * v * z * z).sqrt(),
                f64::NEG_INFINITY,
                x,
                &cfg,
            )
            .unwrap()
            .value;
            let want = norm_cdf(x) - a * tail;
            let got = stable_half_bridge_cdf(t, tt, stable_half_bridge_transform(t, tt, z, c, x), z, c);
            assert!((want - got).abs() < 1e-11, "x={x}: {want} vs {got}");
        }
    }

    #[test]
    fn gamma_bridge_endpoints_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let p = gamma_bridge_sample(3.0, &grid, &mut rng).unwrap();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[10], 1.0);
        assert!(p.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(gamma_bridge_sample(3.0, &[0.0], &mut rng).unwrap(), vec![0.0]);
    }

    #[test]
    fn brownian_bridge_pinned() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = brownian_bridge_sample(&[0.0, 0.25, 0.5, 1.0], &mut rng).unwrap();
        assert_eq!(p[3], 0.0);
        assert!(brownian_bridge_sample(&[0.0, 0.5, 0.5], &mut rng).is_err());
    }

    #[test]
    fn jump_time_distribution() {
        assert_relative_eq!(poisson_bridge_jump_time_cdf(1, 1, 0.3, 1.0).unwrap(), 0.3, max_relative = 1e-14);
        assert_relative_eq!(poisson_bridge_jump_time_cdf(1, 3, 0.5, 1.0).unwrap(), 0.875, max_relative = 1e-14);
        assert_eq!(poisson_bridge_jump_time_cdf(4, 3, 0.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn poisson_bridge_mean() {
        let m: f64 = (0..=4).map(|j| j as f64 * poisson_bridge_pmf(4, 0.5, 1.0, j)).sum();
        assert_relative_eq!(m, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn unreachable_terminal_is_rejected() {
        let vg = IncrementFamily::VarianceGamma { m: 1.0, theta: 0.0, sigma: 1.0 };
        assert!(BridgeLaw::new(vg, 0.1, 0.4, 0.0).is_err());
        assert!(BridgeLaw::new(vg, 0.1, 0.4, 0.2).is_ok());
        assert!(BridgeLaw::new(IncrementFamily::Gamma { m: 1.0 }, 0.1, 1.0, -1.0).is_err());
    }
}
