//! Exact-in-law path samplers for Lévy random bridges.
//!
//! Every sampler draws the terminal value from the terminal law first and
//! then fills in a Lévy bridge to that value. Randomness comes from an
//! [`RngStream`], so a path is a pure function of `(seed, stream)`.

use crate::bridges::{check_grid, gamma_bridge_sample, stable_half_bridge_sample, stable_half_midpoint};
use crate::error::{LrbError, Result};
use crate::lrb::{ContinuousPart, LrbSpec, TerminalLaw};
use crate::marginals::{vg_k, IncrementFamily};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, InverseGaussian, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A reproducible random stream: one master seed, many independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    pub spec_id: String,
    /// Jump times of counting paths; empty otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jump_times: Vec<f64>,
    /// Rejected proposals spent by acceptance-rejection steps.
    #[serde(default)]
    pub rejections: u64,
}

impl PathSample {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("paths are never empty")
    }
}

/// How variance-gamma bridges are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VgMethod {
    /// Gamma-bridge time change of a Brownian bridge with a GIG variance.
    #[default]
    GigMixture,
    /// Difference of two gamma bridges with an acceptance-rejection scale.
    GammaDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub vg_method: VgMethod,
    /// Cap on acceptance-rejection proposals per variate.
    pub max_rejections: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { vg_method: VgMethod::GigMixture, max_rejections: 1_000_000 }
    }
}

pub fn std_normal(rng: &mut dyn RngCore) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform on the open interval `(0, 1)`.
pub fn open_unit(rng: &mut dyn RngCore) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn exp1(rng: &mut dyn RngCore) -> f64 {
    <Exp1 as Distribution<f64>>::sample(&Exp1, rng)
}

/// Gamma variate with unit rate.
pub fn gamma_variate(shape: f64, rng: &mut dyn RngCore) -> f64 {
    match Gamma::new(shape, 1.0) {
        Ok(g) => g.sample(rng),
        Err(_) => f64::NAN,
    }
}

fn gig_mode_std(l: f64, w: f64) -> f64 {
    if l >= 1.0 {
        ((l - 1.0).hypot(w) + (l - 1.0)) / w
    } else {
        w / ((1.0 - l).hypot(w) + (1.0 - l))
    }
}

/// GIG variate with density proportional to `x^{lambda-1} exp(-(delta^2/x + gamma^2 x)/2)`.
///
/// Uses the ratio-of-uniforms method with and without mode shift, and a
/// piecewise hat for small `lambda` and small `delta gamma`
/// (Hörmann and Leydold).
pub fn gig_variate(lambda: f64, delta: f64, gamma: f64, rng: &mut dyn RngCore) -> Result<f64> {
    crate::specfn::gig_check(lambda, delta, gamma)?;
    if delta == 0.0 {
        return Ok(2.0 * gamma_variate(lambda, rng) / (gamma * gamma));
    }
    if gamma == 0.0 {
        return Ok(delta * delta / (2.0 * gamma_variate(-lambda, rng)));
    }
    let omega = delta * gamma;
    let alpha = delta / gamma;
    let l = lambda.abs();
    let y = if l > 2.0 || omega > 3.0 {
        gig_rou_shift(l, omega, rng)
    } else if l >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        gig_rou_noshift(l, omega, rng)
    } else {
        gig_small(l, omega, rng)
    };
    if !(y > 0.0 && y.is_finite()) {
        return Err(LrbError::numeric("GIG sampler produced an invalid variate", y));
    }
    Ok(if lambda < 0.0 { alpha / y } else { alpha * y })
}

fn gig_rou_noshift(l: f64, w: f64, rng: &mut dyn RngCore) -> f64 {
    let t = 0.5 * (l - 1.0);
    let s = 0.25 * w;
    let xm = gig_mode_std(l, w);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((l + 1.0) + (l + 1.0).hypot(w)) / w;
    let um = (0.5 * (l + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v = open_unit(rng);
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_rou_shift(l: f64, w: f64, rng: &mut dyn RngCore) -> f64 {
    let t = 0.5 * (l - 1.0);
    let s = 0.25 * w;
    let xm = gig_mode_std(l, w);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    // Extremes of (x - xm) sqrt(f(x)) solve a cubic; Cardano's rule.
    let a = -(2.0 * (l + 1.0) / w + xm);
    let b = 2.0 * (l - 1.0) * xm / w - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v = open_unit(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_small(l: f64, w: f64, rng: &mut dyn RngCore) -> f64 {
    let xm = gig_mode_std(l, w);
    let x0 = w / (1.0 - l);
    let k0 = ((l - 1.0) * xm.ln() - 0.5 * w * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / w {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(l - 1.0);
        a2 = k2 * 2.0 * (-w * x0 / 2.0).exp() / w;
    } else {
        k1 = (-w).exp();
        a1 = if l == 0.0 { k1 * (2.0 / (w * w)).ln() } else { k1 / l * ((2.0 / w).powf(l) - x0.powf(l)) };
        k2 = (2.0 / w).powf(l - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / w;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if l == 0.0 {
                    x = w * (v * w.exp()).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(l) + l / k1 * v).powf(1.0 / l);
                    hx = k1 * x.powf(l - 1.0);
                }
            } else {
                v -= a1;
                let a = x0.max(2.0 / w);
                x = -2.0 / w * ((-w / 2.0 * a).exp() - w / (2.0 * k2) * v).ln();
                hx = k2 * (-w / 2.0 * x).exp();
            }
        }
        if !(x > 0.0 && x.is_finite()) {
            continue;
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (l - 1.0) * x.ln() - w / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// One increment of `family` over a time `t`.
pub fn sample_increment(family: &IncrementFamily, t: f64, rng: &mut dyn RngCore) -> f64 {
    match *family {
        IncrementFamily::Brownian { theta, sigma } => theta * t + sigma * t.sqrt() * std_normal(rng),
        IncrementFamily::Gamma { m } => gamma_variate(m * t, rng) / m,
        IncrementFamily::VarianceGamma { m, theta, sigma } => {
            let g = gamma_variate(m * t, rng) / m;
            theta * g + sigma * g.sqrt() * std_normal(rng)
        }
        IncrementFamily::StableHalf { c } => {
            let n = std_normal(rng);
            c * c * t * t / (n * n)
        }
        IncrementFamily::Cauchy { c } => c * t * (std::f64::consts::PI * (open_unit(rng) - 0.5)).tan(),
        IncrementFamily::InverseGaussian { c, gamma } => ig_variate(c * t / gamma, c * c * t * t, rng),
        IncrementFamily::NormalInverseGaussian { c, theta, sigma } => {
            let i = ig_variate(t, c * c * t * t, rng);
            theta * i + sigma * i.sqrt() * std_normal(rng)
        }
        IncrementFamily::Poisson { lambda } => match Poisson::new(lambda * t) {
            Ok(p) => p.sample(rng),
            Err(_) => 0.0,
        },
    }
}

fn ig_variate(mean: f64, shape: f64, rng: &mut dyn RngCore) -> f64 {
    match InverseGaussian::new(mean, shape) {
        Ok(d) => d.sample(rng),
        Err(_) => f64::NAN,
    }
}

/// A draw from the terminal law.
pub fn sample_terminal(nu: &TerminalLaw, rng: &mut dyn RngCore) -> Result<f64> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(z, w) in &nu.atoms {
        acc += w;
        if u < acc {
            return Ok(z);
        }
    }
    match &nu.continuous {
        Some((m, part)) if *m > 0.0 => sample_continuous(part, rng),
        _ => Ok(nu.atoms.iter().rev().find(|a| a.1 > 0.0).map(|a| a.0).unwrap_or(0.0)),
    }
}

fn sample_continuous(part: &ContinuousPart, rng: &mut dyn RngCore) -> Result<f64> {
    if let Some(v) = part.sample(rng) {
        if v.is_nan() {
            return Err(LrbError::numeric("terminal sampler returned NaN", v));
        }
        return Ok(v);
    }
    if !part.has_cdf() {
        return Err(LrbError::config("terminal density has neither a sampler nor a distribution function"));
    }
    let u = open_unit(rng);
    let law = TerminalLaw::from_density(part.clone());
    law.quantile(u, 1e-12)
}

/// Brownian bridge from 0 to 0 over `[0, times.last()]` at nondecreasing
/// `times` starting at 0. Repeated times give repeated values.
fn brownian_bridge_at(times: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let dt = (times[i] - times[i - 1]).max(0.0);
        w[i] = w[i - 1] + if dt > 0.0 { dt.sqrt() * std_normal(rng) } else { 0.0 };
    }
    let tt = times[n - 1];
    let wt = w[n - 1];
    let mut out: Vec<f64> = times.iter().zip(&w).map(|(t, v)| if tt > 0.0 { v - t / tt * wt } else { 0.0 }).collect();
    out[n - 1] = 0.0;
    out
}

/// Stable-1/2 bridge from 0 to `z` on an arbitrary grid ending at the
/// horizon, sampled left to right with the exact interior-time sampler.
fn stable_half_bridge_path(c: f64, grid: &[f64], z: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let n = grid.len();
    let tt = grid[n - 1];
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let s = grid[i - 1];
        let x = out[i - 1];
        out[i] = x + stable_half_bridge_sample(grid[i] - s, tt - s, z - x, c, rng);
        out[i] = out[i].clamp(x, z);
    }
    out[n - 1] = z;
    out
}

/// Acceptance-rejection draw of the gamma-leg scale in the two-gamma
/// representation of a standard VG bridge. The target density on
/// `y > (-w)^+` is proportional to `(y (y + w))^{mT-1} e^{-2my}`; the
/// hat is a truncated or shifted `Gamma(2mT - 1, 2m)` law depending on
/// the sign of `mT - 1`.
fn vg_scale_variate(m: f64, tt: f64, w: f64, max_rej: u64, rng: &mut dyn RngCore) -> Result<(f64, u64)> {
    let a = m * tt - 1.0;
    let shape = 2.0 * m * tt - 1.0;
    let rate = 2.0 * m;
    if shape <= 0.0 {
        return Err(LrbError::unsupported("two-gamma VG sampler needs T > 1/(2m)"));
    }
    let mut rejected = 0u64;
    loop {
        let (y, ratio) = if a >= 0.0 {
            // Hat: the larger of the two factors squared.
            if w <= 0.0 {
                let g = truncated_gamma(shape, rate, -w, rng);
                (g, (1.0 + w / g).powf(a))
            } else {
                let g = truncated_gamma(shape, rate, w, rng);
                (g - w, (1.0 - w / g).powf(a))
            }
        } else if w <= 0.0 {
            let g = gamma_variate(shape, rng) / rate;
            (g - w, (1.0 - w / g).powf(a))
        } else {
            let g = gamma_variate(shape, rng) / rate;
            (g, (1.0 + w / g).powf(a))
        };
        if y > 0.0 && y > -w && rng.random::<f64>() < ratio {
            return Ok((y, rejected));
        }
        rejected += 1;
        if rejected >= max_rej {
            return Err(LrbError::numeric(format!("VG acceptance-rejection exceeded {max_rej} proposals"), y));
        }
    }
}

/// Gamma(shape, rate) conditioned to exceed `lo`, for `shape >= 1`.
fn truncated_gamma(shape: f64, rate: f64, lo: f64, rng: &mut dyn RngCore) -> f64 {
    if lo <= 0.0 || rate * lo <= shape {
        loop {
            let g = gamma_variate(shape, rng) / rate;
            if g > lo {
                return g;
            }
        }
    }
    // Beyond the mode: shifted exponential hat with rate rate - (shape-1)/lo.
    let lam = rate - (shape - 1.0) / lo;
    loop {
        let g = lo + exp1(rng) / lam;
        let ln_ratio = (shape - 1.0) * (g / lo).ln() - (rate - lam) * (g - lo);
        if open_unit(rng).ln() <= ln_ratio {
            return g;
        }
    }
}

/// Lévy bridge from 0 to `z` on `grid` (first point 0, last point the
/// bridge horizon). Returns the path and the rejection count.
pub fn levy_bridge_path(
    family: &IncrementFamily,
    grid: &[f64],
    z: f64,
    opts: &SimOptions,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, u64)> {
    check_grid(grid)?;
    let n = grid.len();
    let tt = grid[n - 1];
    if n == 1 {
        return Ok((vec![0.0], 0));
    }
    let mut rej = 0;
    let mut path = match *family {
        IncrementFamily::Brownian { sigma, .. } => {
            let b = brownian_bridge_at(grid, rng);
            grid.iter().zip(b).map(|(t, b)| z * t / tt + sigma * b).collect()
        }
        IncrementFamily::Gamma { m } => gamma_bridge_sample(m, grid, rng)?.into_iter().map(|g| z * g).collect(),
        IncrementFamily::StableHalf { c } | IncrementFamily::InverseGaussian { c, .. } => {
            stable_half_bridge_path(c, grid, z, rng)
        }
        IncrementFamily::VarianceGamma { m, theta, sigma } => {
            // Rescale to the standard VG bridge.
            let k = vg_k(m, theta, sigma);
            let zs = k * z / sigma;
            let g = gamma_bridge_sample(m, grid, rng)?;
            let std_path: Vec<f64> = match opts.vg_method {
                VgMethod::GigMixture => {
                    let var = gig_variate(m * tt - 0.5, zs.abs(), (2.0 * m).sqrt(), rng)?;
                    let b = brownian_bridge_at(&g, rng);
                    g.iter().zip(b).map(|(g, b)| zs * g + var.sqrt() * b).collect()
                }
                VgMethod::GammaDifference => {
                    let mu = (0.5 * m).sqrt();
                    let (y, r) = vg_scale_variate(m, tt, zs / mu, opts.max_rejections, rng)?;
                    rej += r;
                    let gb = gamma_bridge_sample(m, grid, rng)?;
                    gb.iter().zip(&g).map(|(a, b)| zs * a + mu * y * (a - b)).collect()
                }
            };
            std_path.into_iter().map(|u| sigma / k * u).collect()
        }
        IncrementFamily::Cauchy { c } => {
            let a = z * z + c * c * tt * tt;
            let st = a / (2.0 * exp1(rng));
            let s = stable_half_bridge_path(c, grid, st, rng);
            subordinated_bridge(&s, z, 1.0, rng)
        }
        IncrementFamily::NormalInverseGaussian { c, theta, sigma } => {
            let del = (c * c * tt * tt + z * z / (sigma * sigma)).sqrt();
            let gam = (c * c + theta * theta / (sigma * sigma)).sqrt();
            let it = gig_variate(-1.0, del, gam, rng)?;
            let s = stable_half_bridge_path(c, grid, it, rng);
            subordinated_bridge(&s, z, sigma, rng)
        }
        IncrementFamily::Poisson { .. } => {
            let (vals, _) = poisson_bridge_path(grid, z, rng)?;
            vals
        }
    };
    path[0] = 0.0;
    path[n - 1] = z;
    Ok((path, rej))
}

/// `(S_t/S_T) z + sigma sqrt(S_T) beta(S_t/S_T)` for a subordinator path `s`.
fn subordinated_bridge(s: &[f64], z: f64, sigma: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let st = *s.last().unwrap();
    let u: Vec<f64> = s.iter().map(|v| if st > 0.0 { (v / st).clamp(0.0, 1.0) } else { 0.0 }).collect();
    let b = brownian_bridge_at(&u, rng);
    u.iter().zip(b).map(|(u, b)| u * z + sigma * st.sqrt() * b).collect()
}

fn poisson_bridge_path(grid: &[f64], z: f64, rng: &mut dyn RngCore) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(z >= 0.0 && z.fract() == 0.0) {
        return Err(LrbError::domain(format!("counting terminal value must be a nonnegative integer, got {z}")));
    }
    let tt = *grid.last().unwrap();
    let k = z as usize;
    let mut jumps = Vec::with_capacity(k);
    if k > 0 {
        let e: Vec<f64> = (0..=k).map(|_| exp1(rng)).collect();
        let total: f64 = e.iter().sum();
        let mut acc = 0.0;
        for v in &e[..k] {
            acc += v;
            jumps.push(tt * acc / total);
        }
    }
    let vals = grid.iter().map(|t| jumps.iter().filter(|j| **j <= *t).count() as f64).collect();
    Ok((vals, jumps))
}

fn spec_id(spec: &LrbSpec) -> String {
    format!("{}:T={}", spec.family.name(), spec.horizon)
}

fn check_horizon(spec: &LrbSpec, grid: &[f64]) -> Result<()> {
    check_grid(grid)?;
    let last = *grid.last().unwrap();
    if (last - spec.horizon).abs() > 1e-12 * spec.horizon {
        return Err(LrbError::domain("time grid must end at the horizon"));
    }
    Ok(())
}

/// `n + 1` equally spaced times on `[0, T]`.
pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let mut g: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
    g[n] = horizon;
    g
}

/// Path of the bridge on `grid` (first point 0, last point the horizon).
/// Calendar times are mapped through the time change when one is set.
pub fn sample_path(spec: &LrbSpec, grid: &[f64], opts: &SimOptions, stream: RngStream) -> Result<PathSample> {
    check_horizon(spec, grid)?;
    let mut rng = stream.rng();
    let z = sample_terminal(&spec.nu, &mut rng)?;
    let op: Vec<f64> = grid.iter().map(|t| spec.op_time(*t)).collect();
    // Operational time may stall; sample on distinct times and repeat values.
    let mut uniq: Vec<f64> = Vec::with_capacity(op.len());
    let mut idx = Vec::with_capacity(op.len());
    for &t in &op {
        if uniq.last().is_none_or(|l| t > *l) {
            uniq.push(t);
        }
        idx.push(uniq.len() - 1);
    }
    let (values, jumps, rej) = if let IncrementFamily::Poisson { .. } = spec.family {
        let (v, j) = poisson_bridge_path(&uniq, z, &mut rng)?;
        (v, j, 0)
    } else {
        let (v, r) = levy_bridge_path(&spec.family, &uniq, z, opts, &mut rng)?;
        (v, vec![], r)
    };
    Ok(PathSample {
        times: grid.to_vec(),
        values: idx.iter().map(|&i| values[i]).collect(),
        seed: stream.seed,
        stream: stream.stream,
        spec_id: spec_id(spec),
        jump_times: jumps,
        rejections: rej,
    })
}

/// Stable-1/2 (or IG) random bridge on the dyadic grid with `2^depth + 1`
/// points, filled in by repeated midpoint draws.
pub fn sample_stable_half_rb(spec: &LrbSpec, depth: u32, stream: RngStream) -> Result<PathSample> {
    let c = match spec.family {
        IncrementFamily::StableHalf { c } | IncrementFamily::InverseGaussian { c, .. } => c,
        _ => return Err(LrbError::unsupported("dyadic bisection needs the stable-1/2 or IG family")),
    };
    if spec.time_change.is_some() {
        return Err(LrbError::unsupported("dyadic bisection runs in operational time; use sample_path"));
    }
    if depth > 30 {
        return Err(LrbError::domain("dyadic depth above 30"));
    }
    let mut rng = stream.rng();
    let z = sample_terminal(&spec.nu, &mut rng)?;
    let n = 1usize << depth;
    let tt = spec.horizon;
    let mut v = vec![0.0; n + 1];
    v[n] = z;
    let mut step = n;
    while step > 1 {
        let half = step / 2;
        let dt = tt * step as f64 / n as f64;
        let mut i = 0;
        while i < n {
            let zn = std_normal(&mut rng);
            v[i + half] = stable_half_midpoint(v[i], v[i + step], dt, c, zn);
            i += step;
        }
        step = half;
    }
    Ok(PathSample {
        times: uniform_grid(tt, n),
        values: v,
        seed: stream.seed,
        stream: stream.stream,
        spec_id: spec_id(spec),
        jump_times: vec![],
        rejections: 0,
    })
}

fn require(spec: &LrbSpec, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(LrbError::unsupported(format!("{what} sampler called with the {} family", spec.family.name())))
    }
}

pub fn sample_vgrb(spec: &LrbSpec, grid: &[f64], stream: RngStream, method: VgMethod) -> Result<PathSample> {
    require(spec, matches!(spec.family, IncrementFamily::VarianceGamma { .. }), "VG")?;
    sample_path(spec, grid, &SimOptions { vg_method: method, ..SimOptions::default() }, stream)
}

pub fn sample_cauchy_rb(spec: &LrbSpec, grid: &[f64], stream: RngStream) -> Result<PathSample> {
    require(spec, matches!(spec.family, IncrementFamily::Cauchy { .. }), "Cauchy")?;
    sample_path(spec, grid, &SimOptions::default(), stream)
}

pub fn sample_nigrb(spec: &LrbSpec, grid: &[f64], stream: RngStream) -> Result<PathSample> {
    require(spec, matches!(spec.family, IncrementFamily::NormalInverseGaussian { .. }), "NIG")?;
    sample_path(spec, grid, &SimOptions::default(), stream)
}

pub fn sample_prb(spec: &LrbSpec, grid: &[f64], stream: RngStream) -> Result<PathSample> {
    require(spec, matches!(spec.family, IncrementFamily::Poisson { .. }), "Poisson")?;
    sample_path(spec, grid, &SimOptions::default(), stream)
}

/// `n` paths on independent streams `0..n` of `seed`, in parallel. The
/// output does not depend on the number of threads.
pub fn sample_paths(spec: &LrbSpec, grid: &[f64], n: usize, seed: u64, opts: &SimOptions) -> Result<Vec<PathSample>> {
    (0..n as u64).into_par_iter().map(|i| sample_path(spec, grid, opts, RngStream::new(seed, i))).collect()
}
