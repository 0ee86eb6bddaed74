//! Lévy random bridges: a Lévy process conditioned to have a prescribed law
//! at the horizon. The engine here works for any [`IncrementFamily`] and any
//! terminal law made of atoms plus an absolutely continuous part.

use crate::error::{LrbError, Result};
use crate::marginals::{IncrementFamily, Support};
use crate::quad::{integrate, integrate_endpoint_singular, QuadConfig};
use crate::reserving::TimeChange;
use crate::specfn::{self, ln_gamma, ln_gig_density, norm_cdf, LN_SQRT_2PI};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Decay class of a density's right tail, used for truncation and for tail
/// ratios in the reserving model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TailClass {
    /// `p(z) ~ e^{-rate z}` up to sub-exponential factors.
    Exponential {
        rate: f64,
    },
    /// `p(z) ~ z^{-index}`.
    Power {
        index: f64,
    },
    /// `p(z) ~ e^{-z^2 / (2 s^2)}`.
    Gaussian,
    /// `p(z) ~ z^{-3/2}`, the stable-1/2 tail.
    Levy,
    /// Compact support.
    Bounded,
    Unknown,
}

impl TailClass {
    /// Whether `E[|Z|^k]` is finite under this tail.
    fn moment_finite(&self, k: f64) -> Option<bool> {
        match *self {
            TailClass::Power { index } => Some(index - 1.0 > k),
            TailClass::Levy => Some(k < 0.5),
            TailClass::Unknown => None,
            _ => Some(true),
        }
    }
}

/// Parametric densities and mass functions accepted as terminal laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NamedDensity {
    Normal {
        mean: f64,
        sd: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Exponential {
        rate: f64,
    },
    HalfNormal {
        sigma: f64,
    },
    /// `sqrt(s / 2 pi) z^{-3/2} e^{-s / (2z)}`.
    Levy {
        scale: f64,
    },
    Gig {
        lambda: f64,
        delta: f64,
        gamma: f64,
    },
    /// Generalized Pareto with shape `xi`.
    Gpd {
        xi: f64,
        sigma: f64,
        mu: f64,
    },
    Cauchy {
        location: f64,
        scale: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Law of an increment of `family` over time `t`.
    Marginal {
        family: IncrementFamily,
        t: f64,
    },
    /// `C(k+m-1, k) p^m (1-p)^k` on `k = 0, 1, ...`.
    NegativeBinomial {
        m: f64,
        p: f64,
    },
    /// `-(1-p)^k / (k log p)` on `k = 1, 2, ...`.
    LogSeries {
        p: f64,
    },
    Poisson {
        mean: f64,
    },
}

type LnPdf1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Log density as a function of `z` and of `z - anchor`, the latter exact
/// near the anchor.
type LnPdf = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;
type Cdf = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Absolutely continuous part of a terminal law, normalised to unit mass.
#[derive(Clone)]
pub struct ContinuousPart {
    ln_pdf: LnPdf,
    /// Point where the density may be singular; see [`LnPdf`].
    anchor: f64,
    pub support: (f64, f64),
    /// Points where the density may be singular or sharply peaked.
    pub breaks: Vec<f64>,
    /// Length scale of the bulk of the law.
    pub scale: f64,
    pub tail: TailClass,
    pub named: Option<NamedDensity>,
    sampler: Option<Sampler>,
    cdf: Option<Cdf>,
}

impl fmt::Debug for ContinuousPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousPart")
            .field("support", &self.support)
            .field("breaks", &self.breaks)
            .field("scale", &self.scale)
            .field("tail", &self.tail)
            .field("named", &self.named)
            .field("sampler", &self.sampler.is_some())
            .field("cdf", &self.cdf.is_some())
            .finish()
    }
}

fn pos(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LrbError::config(format!("{name} must be positive, got {v}")))
    }
}

impl ContinuousPart {
    /// A user-supplied density. `ln_pdf` must integrate (after `exp`) to 1
    /// over `support`; this is checked by quadrature.
    pub fn custom(
        ln_pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
        breaks: Vec<f64>,
        scale: f64,
        tail: TailClass,
    ) -> Result<Self> {
        if !(support.0 < support.1) || support.0.is_nan() || support.1.is_nan() {
            return Err(LrbError::config("density support must be a nonempty interval"));
        }
        pos("density scale", scale)?;
        let part = ContinuousPart {
            ln_pdf: Arc::new(move |z, _| ln_pdf(z)),
            anchor: 0.0,
            support,
            breaks,
            scale,
            tail,
            named: None,
            sampler: None,
            cdf: None,
        };
        let total = part.expect(&|_| 1.0)?;
        if (total - 1.0).abs() > 1e-8 {
            return Err(LrbError::config(format!("density integrates to {total}, not 1")));
        }
        Ok(part)
    }

    pub fn with_sampler(mut self, f: impl Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static) -> Self {
        self.sampler = Some(Arc::new(f));
        self
    }

    pub fn with_cdf(mut self, f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        self.cdf = Some(Arc::new(f));
        self
    }

    pub fn from_named(d: NamedDensity) -> Result<Self> {
        use NamedDensity::*;
        let inf = f64::INFINITY;
        let (ln_pdf, support, breaks, scale, tail, sampler, cdf): (
            LnPdf1,
            _,
            Vec<f64>,
            f64,
            TailClass,
            Sampler,
            Option<Cdf>,
        ) = match d {
            Normal { mean, sd } => {
                pos("sd", sd)?;
                (
                    Arc::new(move |z: f64| {
                        let u = (z - mean) / sd;
                        -0.5 * u * u - sd.ln() - LN_SQRT_2PI
                    }),
                    (-inf, inf),
                    vec![mean],
                    sd,
                    TailClass::Gaussian,
                    Arc::new(move |r: &mut dyn RngCore| mean + sd * crate::simulate::std_normal(r)),
                    Some(Arc::new(move |z: f64| Ok(norm_cdf((z - mean) / sd)))),
                )
            }
            Gamma { shape, rate } => {
                pos("shape", shape)?;
                pos("rate", rate)?;
                (
                    Arc::new(move |z: f64| {
                        if z > 0.0 {
                            shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * z.ln() - rate * z
                        } else {
                            f64::NEG_INFINITY
                        }
                    }),
                    (0.0, inf),
                    vec![(shape - 1.0).max(0.0) / rate],
                    shape.sqrt() / rate,
                    TailClass::Exponential { rate },
                    Arc::new(move |r: &mut dyn RngCore| crate::simulate::gamma_variate(shape, r) / rate),
                    Some(Arc::new(
                        move |z: f64| {
                            if z <= 0.0 {
                                Ok(0.0)
                            } else {
                                specfn::reg_inc_gamma(shape, rate * z)
                            }
                        },
                    )),
                )
            }
            Exponential { rate } => {
                return ContinuousPart::from_named(Gamma { shape: 1.0, rate }).map(|mut p| {
                    p.named = Some(d);
                    p
                })
            }
            HalfNormal { sigma } => {
                pos("sigma", sigma)?;
                (
                    Arc::new(move |z: f64| {
                        if z >= 0.0 {
                            let u = z / sigma;
                            -0.5 * u * u - sigma.ln() - LN_SQRT_2PI + std::f64::consts::LN_2
                        } else {
                            f64::NEG_INFINITY
                        }
                    }),
                    (0.0, inf),
                    vec![],
                    sigma,
                    TailClass::Gaussian,
                    Arc::new(move |r: &mut dyn RngCore| sigma * crate::simulate::std_normal(r).abs()),
                    Some(Arc::new(move |z: f64| Ok(if z <= 0.0 { 0.0 } else { 2.0 * norm_cdf(z / sigma) - 1.0 }))),
                )
            }
            Levy { scale } => {
                pos("scale", scale)?;
                (
                    Arc::new(move |z: f64| {
                        if z > 0.0 {
                            0.5 * scale.ln() - LN_SQRT_2PI - 1.5 * z.ln() - 0.5 * scale / z
                        } else {
                            f64::NEG_INFINITY
                        }
                    }),
                    (0.0, inf),
                    vec![scale / 3.0],
                    scale,
                    TailClass::Levy,
                    Arc::new(move |r: &mut dyn RngCore| {
                        let n = crate::simulate::std_normal(r);
                        scale / (n * n)
                    }),
                    Some(Arc::new(move |z: f64| Ok(if z <= 0.0 { 0.0 } else { 2.0 * norm_cdf(-(scale / z).sqrt()) }))),
                )
            }
            Gig { lambda, delta, gamma } => {
                specfn::gig_check(lambda, delta, gamma).map_err(|e| LrbError::config(e.to_string()))?;
                let mode = gig_mode(lambda, delta, gamma);
                let sd = {
                    let m1 = specfn::gig_moment(1.0, lambda, delta, gamma)?;
                    let m2 = specfn::gig_moment(2.0, lambda, delta, gamma)?;
                    let v = m2 - m1 * m1;
                    if v.is_finite() && v > 0.0 {
                        v.sqrt()
                    } else {
                        mode.max(delta * delta).max(1e-3)
                    }
                };
                let tail = if gamma > 0.0 {
                    TailClass::Exponential { rate: 0.5 * gamma * gamma }
                } else {
                    TailClass::Power { index: 1.0 - lambda }
                };
                (
                    Arc::new(move |z: f64| ln_gig_density(z, lambda, delta, gamma).unwrap_or(f64::NEG_INFINITY)),
                    (0.0, inf),
                    vec![mode],
                    sd,
                    tail,
                    Arc::new(move |r: &mut dyn RngCore| {
                        crate::simulate::gig_variate(lambda, delta, gamma, r).unwrap_or(f64::NAN)
                    }),
                    None,
                )
            }
            Gpd { xi, sigma, mu } => {
                pos("sigma", sigma)?;
                if !xi.is_finite() || !mu.is_finite() {
                    return Err(LrbError::config("GPD parameters must be finite"));
                }
                let hi = if xi < 0.0 { mu - sigma / xi } else { inf };
                let tail = if xi > 0.0 {
                    TailClass::Power { index: 1.0 / xi + 1.0 }
                } else if xi == 0.0 {
                    TailClass::Exponential { rate: 1.0 / sigma }
                } else {
                    TailClass::Bounded
                };
                (
                    Arc::new(move |z: f64| {
                        let u = (z - mu) / sigma;
                        if z < mu || z > hi {
                            f64::NEG_INFINITY
                        } else if xi == 0.0 {
                            -u - sigma.ln()
                        } else {
                            (-1.0 / xi - 1.0) * (xi * u).ln_1p() - sigma.ln()
                        }
                    }),
                    (mu, hi),
                    vec![],
                    sigma,
                    tail,
                    Arc::new(move |r: &mut dyn RngCore| {
                        let u = crate::simulate::open_unit(r);
                        if xi == 0.0 {
                            mu - sigma * u.ln()
                        } else {
                            mu + sigma * (u.powf(-xi) - 1.0) / xi
                        }
                    }),
                    Some(Arc::new(move |z: f64| {
                        let u = ((z - mu) / sigma).max(0.0);
                        Ok(if z >= hi {
                            1.0
                        } else if xi == 0.0 {
                            -(-u).exp_m1()
                        } else {
                            -((-1.0 / xi) * (xi * u).ln_1p()).exp_m1()
                        })
                    })),
                )
            }
            Cauchy { location, scale } => {
                pos("scale", scale)?;
                (
                    Arc::new(move |z: f64| {
                        let u = (z - location) / scale;
                        -(PI * scale * (1.0 + u * u)).ln()
                    }),
                    (-inf, inf),
                    vec![location],
                    scale,
                    TailClass::Power { index: 2.0 },
                    Arc::new(move |r: &mut dyn RngCore| {
                        location + scale * (PI * (crate::simulate::open_unit(r) - 0.5)).tan()
                    }),
                    Some(Arc::new(move |z: f64| Ok(0.5 + ((z - location) / scale).atan() / PI))),
                )
            }
            Uniform { low, high } => {
                if !(low < high) || !low.is_finite() || !high.is_finite() {
                    return Err(LrbError::config("uniform law needs finite low < high"));
                }
                let w = high - low;
                (
                    Arc::new(move |z: f64| if z >= low && z <= high { -w.ln() } else { f64::NEG_INFINITY }),
                    (low, high),
                    vec![],
                    w,
                    TailClass::Bounded,
                    Arc::new(move |r: &mut dyn RngCore| low + w * crate::simulate::open_unit(r)),
                    Some(Arc::new(move |z: f64| Ok(((z - low) / w).clamp(0.0, 1.0)))),
                )
            }
            Marginal { family, t } => {
                family.validate().map_err(|e| LrbError::config(e.to_string()))?;
                pos("t", t)?;
                if family.is_discrete() {
                    return Err(LrbError::config("Poisson marginals are discrete; use atoms"));
                }
                let support = match family.support() {
                    Support::Positive => (0.0, inf),
                    _ => (-inf, inf),
                };
                let centre = family.mean(t).unwrap_or(0.0);
                let scale = family_scale(&family, t);
                let tail = match family {
                    IncrementFamily::Brownian { .. } => TailClass::Gaussian,
                    IncrementFamily::Gamma { m } => TailClass::Exponential { rate: m },
                    IncrementFamily::StableHalf { .. } => TailClass::Levy,
                    IncrementFamily::Cauchy { .. } => TailClass::Power { index: 2.0 },
                    IncrementFamily::InverseGaussian { gamma, .. } => {
                        TailClass::Exponential { rate: 0.5 * gamma * gamma }
                    }
                    IncrementFamily::VarianceGamma { m, theta, sigma } => {
                        let d = crate::marginals::vg_derive(m, theta, sigma)?;
                        TailClass::Exponential { rate: m / d.mu_plus }
                    }
                    IncrementFamily::NormalInverseGaussian { .. } => TailClass::Unknown,
                    IncrementFamily::Poisson { .. } => unreachable!(),
                };
                let mut breaks = vec![centre];
                if matches!(family, IncrementFamily::VarianceGamma { .. }) {
                    breaks.push(0.0);
                }
                (
                    Arc::new(move |z: f64| family.ln_density(t, z).unwrap_or(f64::NEG_INFINITY)),
                    support,
                    breaks,
                    scale,
                    tail,
                    Arc::new(move |r: &mut dyn RngCore| crate::simulate::sample_increment(&family, t, r)),
                    Some(Arc::new(move |z: f64| family.cdf(t, z))),
                )
            }
            NegativeBinomial { .. } | LogSeries { .. } | Poisson { .. } => {
                return Err(LrbError::config("discrete law has no density; expand it into atoms"));
            }
        };
        Ok(ContinuousPart {
            ln_pdf: Arc::new(move |z, _| ln_pdf(z)),
            anchor: 0.0,
            support,
            breaks,
            scale,
            tail,
            named: Some(d),
            sampler: Some(sampler),
            cdf,
        })
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        if z < self.support.0 || z > self.support.1 {
            return f64::NEG_INFINITY;
        }
        (self.ln_pdf)(z, z - self.anchor)
    }

    fn ln_pdf_local(&self, z: f64, u: f64) -> f64 {
        if z < self.support.0 || z > self.support.1 {
            return f64::NEG_INFINITY;
        }
        (self.ln_pdf)(z, u)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.ln_pdf(z).exp()
    }

    pub fn has_cdf(&self) -> bool {
        self.cdf.is_some()
    }

    pub fn has_sampler(&self) -> bool {
        self.sampler.is_some()
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Option<f64> {
        self.sampler.as_ref().map(|s| s(rng))
    }

    /// Integration pieces: tanh-sinh next to every finite knot, Gauss-Kronrod
    /// between knots and on infinite tails.
    /// Largest log-density found on a geometric scan around the anchor and
    /// the break points; 0 when nothing finite turns up.
    fn scan_peak(&self) -> f64 {
        let (lo, hi) = self.support;
        let mut centers = vec![self.anchor];
        centers.extend(self.breaks.iter().cloned().filter(|b| b.is_finite()));
        if lo.is_finite() {
            centers.push(lo);
        }
        let mut best = f64::NEG_INFINITY;
        let sc = self.scale.max(1e-300);
        for &c in &centers {
            for i in 0..=90 {
                let d = sc * (-30.0 + 0.5 * i as f64).exp();
                for z in [c - d, c + d] {
                    if z > lo && z < hi {
                        let v = self.ln_pdf_local(z, z - self.anchor);
                        if v.is_finite() && v > best {
                            best = v;
                        }
                    }
                }
            }
        }
        if best.is_finite() {
            best
        } else {
            0.0
        }
    }

    fn pieces(&self) -> Vec<(f64, f64, bool)> {
        let (lo, hi) = self.support;
        let mut knots: Vec<f64> = self.breaks.iter().cloned().filter(|b| b.is_finite() && *b > lo && *b < hi).collect();
        if lo.is_infinite() && hi.is_infinite() && knots.is_empty() {
            knots.push(0.0);
        }
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        let mut pts = vec![lo];
        pts.extend(knots);
        pts.push(hi);
        let w0 = self.scale;
        let mut out = Vec::new();
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            match (a.is_finite(), b.is_finite()) {
                (true, true) => {
                    let w = w0.min((b - a) / 3.0);
                    if b - a <= 3.0 * w0 {
                        out.push((a, b, true));
                    } else {
                        out.push((a, a + w, true));
                        out.push((a + w, b - w, false));
                        out.push((b - w, b, true));
                    }
                }
                (true, false) => {
                    out.push((a, a + w0, true));
                    out.push((a + w0, b, false));
                }
                (false, true) => {
                    out.push((a, b - w0, false));
                    out.push((b - w0, b, true));
                }
                (false, false) => out.push((a, b, false)),
            }
        }
        out
    }

    fn integrate_pieces(
        &self,
        h: &dyn Fn(f64, f64) -> f64,
        pieces: &[(f64, f64, bool)],
        rel: f64,
        abs: f64,
    ) -> Result<f64> {
        let strict = QuadConfig { rel, abs, ..QuadConfig::default() }.with_scale(self.scale);
        // Pieces far below the bulk can stall at the strict target; one retry
        // a thousand times looser keeps their contribution negligible.
        let loose = QuadConfig { rel: rel * 1e3, abs: abs * 1e3, ..QuadConfig::default() }.with_scale(self.scale);
        let mut acc = 0.0;
        for &piece in pieces {
            acc += match self.integrate_piece(h, piece, &strict) {
                Err(LrbError::Numeric { .. }) => self.integrate_split(h, piece, &loose, 8)?,
                other => other?,
            };
        }
        Ok(acc)
    }

    /// Loose retry that halves a finite piece until each half converges.
    fn integrate_split(
        &self,
        h: &dyn Fn(f64, f64) -> f64,
        piece: (f64, f64, bool),
        cfg: &QuadConfig,
        depth: u32,
    ) -> Result<f64> {
        match self.integrate_piece(h, piece, cfg) {
            Err(LrbError::Numeric { .. }) if depth > 0 && piece.0.is_finite() && piece.1.is_finite() => {
                let (a, b, _) = piece;
                let m = 0.5 * (a + b);
                Ok(self.integrate_split(h, (a, m, true), cfg, depth - 1)?
                    + self.integrate_split(h, (m, b, true), cfg, depth - 1)?)
            }
            other => other,
        }
    }

    fn integrate_piece(&self, h: &dyn Fn(f64, f64) -> f64, piece: (f64, f64, bool), cfg: &QuadConfig) -> Result<f64> {
        let (a, b, singular) = piece;
        let c = self.anchor;
        // Pieces within |c| of the anchor are integrated in offsets from it,
        // which keeps features much narrower than ulp(c) resolved.
        let near = |x: f64| !x.is_finite() || (x - c).abs() <= c.abs();
        let (o, la, lb) = if near(a) && near(b) { (c, a - c, b - c) } else { (0.0, a, b) };
        let at = |v: f64| if o == 0.0 { (v, v - c) } else { (c + v, v) };
        let sc = self.scale;
        let tail_value = |v: f64, db: f64| {
            let (z, u) = at(v);
            let r = h(z, u);
            if r == 0.0 {
                return 0.0;
            }
            let r = r * sc / (db * db);
            if r.is_finite() {
                r
            } else {
                0.0
            }
        };
        Ok(if singular {
            let local = |v: f64, da: f64, db: f64| {
                let u = if a == c {
                    da
                } else if b == c {
                    -db
                } else {
                    at(v).1
                };
                h(at(v).0, u)
            };
            integrate_endpoint_singular(local, la, lb, cfg)?.value
        } else if b == f64::INFINITY {
            // v = a + s t/(1-t); tanh-sinh absorbs algebraic decay at t = 1.
            integrate_endpoint_singular(|t: f64, _: f64, db: f64| tail_value(la + sc * t / db, db), 0.0, 1.0, cfg)?
                .value
        } else if a == f64::NEG_INFINITY {
            integrate_endpoint_singular(|t: f64, _: f64, db: f64| tail_value(lb - sc * t / db, db), 0.0, 1.0, cfg)?
                .value
        } else {
            integrate(
                |v| {
                    let (z, u) = at(v);
                    h(z, u)
                },
                la,
                lb,
                cfg,
            )?
            .value
        })
    }

    /// `int g(z) p(z) dz` over the support.
    pub fn expect(&self, g: &dyn Fn(f64) -> f64) -> Result<f64> {
        self.expect_on(g, None)
    }

    fn expect_on(&self, g: &dyn Fn(f64) -> f64, upper: Option<f64>) -> Result<f64> {
        let h = |z: f64, u: f64| {
            let lp = self.ln_pdf_local(z, u);
            if lp == f64::NEG_INFINITY || lp.is_nan() {
                return 0.0;
            }
            let v = g(z) * lp.exp();
            if v.is_nan() {
                0.0
            } else {
                v
            }
        };
        let mut pieces = self.pieces();
        if let Some(u) = upper {
            pieces = pieces
                .into_iter()
                .filter(|p| p.0 < u)
                .map(|(a, b, s)| if b > u { (a, u, true) } else { (a, b, s) })
                .collect();
        }
        let rough = self.integrate_pieces(&h, &pieces, 1e-6, 1e-300)?;
        if rough == 0.0 {
            return Ok(0.0);
        }
        let rel = crate::quad::default_rel_tol();
        self.integrate_pieces(&h, &pieces, rel, 1e-2 * rel * rough.abs() / pieces.len() as f64)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= self.support.0 {
            return Ok(0.0);
        }
        if x >= self.support.1 {
            return Ok(1.0);
        }
        if let Some(c) = &self.cdf {
            return c(x);
        }
        Ok(self.expect_on(&|_| 1.0, Some(x))?.clamp(0.0, 1.0))
    }

    fn moment(&self, k: f64) -> Result<f64> {
        if self.tail.moment_finite(k) == Some(false) {
            return Err(LrbError::domain(format!("moment of order {k} is infinite for a {:?} tail", self.tail)));
        }
        self.expect(&|z| z.powf(k))
    }

    /// Same law translated by `d`.
    pub fn shifted(&self, d: f64) -> ContinuousPart {
        let f = self.ln_pdf.clone();
        let sampler = self.sampler.clone();
        let cdf = self.cdf.clone();
        ContinuousPart {
            ln_pdf: Arc::new(move |z, u| f(z - d, u)),
            anchor: self.anchor + d,
            support: (self.support.0 + d, self.support.1 + d),
            breaks: self.breaks.iter().map(|b| b + d).collect(),
            scale: self.scale,
            tail: self.tail,
            named: None,
            sampler: sampler.map(|s| Arc::new(move |r: &mut dyn RngCore| s(r) + d) as Sampler),
            cdf: cdf.map(|c| Arc::new(move |x: f64| c(x - d)) as Cdf),
        }
    }
}

fn gig_mode(lambda: f64, delta: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return delta * delta / (2.0 * (1.0 - lambda));
    }
    let a = gamma * gamma;
    let l1 = lambda - 1.0;
    (l1 + (l1 * l1 + a * delta * delta).sqrt()) / a
}

/// Length scale of increments of `family` over time `t`.
pub fn family_scale(family: &IncrementFamily, t: f64) -> f64 {
    match *family {
        IncrementFamily::StableHalf { c } => c * c * t * t,
        IncrementFamily::Cauchy { c } => c * t,
        _ => family.variance(t).map(f64::sqrt).unwrap_or(1.0),
    }
}

/// A priori law of the terminal value: point masses plus an optional
/// absolutely continuous part.
#[derive(Debug, Clone)]
pub struct TerminalLaw {
    pub atoms: Vec<(f64, f64)>,
    pub continuous: Option<(f64, ContinuousPart)>,
}

impl TerminalLaw {
    pub fn new(atoms: Vec<(f64, f64)>, continuous: Option<(f64, ContinuousPart)>) -> Result<Self> {
        for &(z, w) in &atoms {
            if !z.is_finite() || !(w >= 0.0) || !w.is_finite() {
                return Err(LrbError::config(format!("invalid atom ({z}, {w})")));
            }
        }
        let mut total: f64 = atoms.iter().map(|a| a.1).sum();
        if let Some((m, _)) = &continuous {
            if !(*m >= 0.0 && *m <= 1.0) {
                return Err(LrbError::config(format!("continuous mass {m} outside [0,1]")));
            }
            total += m;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(LrbError::config(format!("terminal law has total mass {total}")));
        }
        Ok(TerminalLaw { atoms, continuous })
    }

    pub fn point(z: f64) -> Self {
        TerminalLaw { atoms: vec![(z, 1.0)], continuous: None }
    }

    /// `k0` with probability `p`, `k1` otherwise.
    pub fn binary(k0: f64, k1: f64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(LrbError::config("binary law needs 0 < p < 1"));
        }
        TerminalLaw::new(vec![(k0, p), (k1, 1.0 - p)], None)
    }

    pub fn from_density(part: ContinuousPart) -> Self {
        TerminalLaw { atoms: vec![], continuous: Some((1.0, part)) }
    }

    /// Named law; discrete laws are expanded into atoms until the remaining
    /// tail mass is below `1e-16`.
    pub fn named(d: NamedDensity) -> Result<Self> {
        match d {
            NamedDensity::NegativeBinomial { m, p } => {
                pos("m", m)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(LrbError::config("negative binomial needs 0 < p < 1"));
                }
                let lnp = move |k: u64| {
                    let kf = k as f64;
                    ln_gamma(kf + m) - ln_gamma(m) - specfn::ln_factorial(k) + m * p.ln() + kf * (1.0 - p).ln()
                };
                Ok(TerminalLaw { atoms: expand_pmf(lnp, 0)?, continuous: None })
            }
            NamedDensity::LogSeries { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(LrbError::config("log-series law needs 0 < p < 1"));
                }
                let lnp = move |k: u64| {
                    let kf = k as f64;
                    kf * (1.0 - p).ln() - kf.ln() - (-p.ln()).ln()
                };
                Ok(TerminalLaw { atoms: expand_pmf(lnp, 1)?, continuous: None })
            }
            NamedDensity::Poisson { mean } => {
                pos("mean", mean)?;
                let lnp = move |k: u64| k as f64 * mean.ln() - mean - specfn::ln_factorial(k);
                Ok(TerminalLaw { atoms: expand_pmf(lnp, 0)?, continuous: None })
            }
            _ => Ok(TerminalLaw::from_density(ContinuousPart::from_named(d)?)),
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.continuous.as_ref().is_none_or(|(m, _)| *m == 0.0)
    }

    /// `E[g(Z)]`.
    pub fn expect(&self, g: &dyn Fn(f64) -> f64) -> Result<f64> {
        let mut acc: f64 = self.atoms.iter().map(|&(z, w)| if w > 0.0 { w * g(z) } else { 0.0 }).sum();
        if let Some((m, part)) = &self.continuous {
            if *m > 0.0 {
                acc += m * part.expect(g)?;
            }
        }
        Ok(acc)
    }

    /// `E[g(Z); Z <= x]`.
    pub fn expect_below(&self, g: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
        let mut acc: f64 = self.atoms.iter().map(|&(z, w)| if w > 0.0 && z <= x { w * g(z) } else { 0.0 }).sum();
        if let Some((m, part)) = &self.continuous {
            if *m > 0.0 && x > part.support.0 {
                acc += m * part.expect_on(g, Some(x))?;
            }
        }
        Ok(acc)
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1.0)
    }

    pub fn moment(&self, k: f64) -> Result<f64> {
        let mut acc: f64 = self.atoms.iter().map(|&(z, w)| w * z.powf(k)).sum();
        if let Some((m, part)) = &self.continuous {
            if *m > 0.0 {
                acc += m * part.moment(k)?;
            }
        }
        Ok(acc)
    }

    pub fn variance(&self) -> Result<f64> {
        let m1 = self.mean()?;
        Ok((self.moment(2.0)? - m1 * m1).max(0.0))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let mut acc: f64 = self.atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
        if let Some((m, part)) = &self.continuous {
            if *m > 0.0 {
                acc += m * part.cdf(x)?;
            }
        }
        Ok(acc.min(1.0))
    }

    /// Smallest `x` with `cdf(x) >= p`, by bisection to `tol`.
    pub fn quantile(&self, p: f64, tol: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(LrbError::domain("quantile level must lie in (0,1)"));
        }
        let (mut lo, mut hi) = self.bracket();
        let mut step = self.spread();
        while self.cdf(lo)? >= p {
            lo -= step;
            step *= 2.0;
            if !lo.is_finite() {
                return Err(LrbError::numeric("quantile bracket diverged", lo));
            }
        }
        step = self.spread();
        while self.cdf(hi)? < p {
            hi += step;
            step *= 2.0;
            if !hi.is_finite() {
                return Err(LrbError::numeric("quantile bracket diverged", hi));
            }
        }
        for _ in 0..200 {
            if hi - lo <= tol * (1.0 + hi.abs().max(lo.abs())) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    fn bracket(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(z, _) in &self.atoms {
            lo = lo.min(z);
            hi = hi.max(z);
        }
        if let Some((_, part)) = &self.continuous {
            let (a, b) = part.support;
            let c = part.breaks.first().cloned().unwrap_or(if a.is_finite() { a } else { 0.0 });
            lo = lo.min(if a.is_finite() { a } else { c - part.scale });
            hi = hi.max(if b.is_finite() { b } else { c + part.scale });
        }
        (lo - 1e-12 * lo.abs(), hi)
    }

    fn spread(&self) -> f64 {
        let s = self.continuous.as_ref().map(|(_, p)| p.scale).unwrap_or(1.0);
        let (lo, hi) = self.bracket();
        s.max(hi - lo).max(1e-12)
    }

    /// Same law translated by `d`.
    pub fn shifted(&self, d: f64) -> TerminalLaw {
        TerminalLaw {
            atoms: self.atoms.iter().map(|&(z, w)| (z + d, w)).collect(),
            continuous: self.continuous.as_ref().map(|(m, p)| (*m, p.shifted(d))),
        }
    }

    /// Reweights by `exp(ln_w)`. Returns the normaliser and the renormalised law.
    /// `extra_breaks` and `lower` describe where the weight is singular or vanishes.
    pub fn reweight(
        &self,
        ln_w: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        anchor: f64,
        extra_breaks: &[f64],
        lower: Option<f64>,
        weight_scale: f64,
    ) -> Result<(f64, TerminalLaw)> {
        let mut lw: Vec<(f64, f64)> = Vec::with_capacity(self.atoms.len());
        for &(z, w) in &self.atoms {
            if w > 0.0 {
                lw.push((z, w.ln() + ln_w(z, z - anchor)));
            }
        }
        let max_lw = lw.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
        let mut ln_atoms = f64::NEG_INFINITY;
        if max_lw.is_finite() {
            ln_atoms = max_lw + lw.iter().map(|a| (a.1 - max_lw).exp()).sum::<f64>().ln();
        }
        let mut cont: Option<ContinuousPart> = None;
        let mut ln_cont = f64::NEG_INFINITY;
        if let Some((m, part)) = &self.continuous {
            if *m > 0.0 {
                let mut support = part.support;
                if let Some(l) = lower {
                    support.0 = support.0.max(l);
                }
                if support.0 < support.1 {
                    let base = part.ln_pdf.clone();
                    let base_anchor = part.anchor;
                    let lw2 = ln_w.clone();
                    let joint: LnPdf = Arc::new(move |z, u| {
                        let ub = if base_anchor == anchor { u } else { z - base_anchor };
                        let v = base(z, ub) + lw2(z, u);
                        if v.is_nan() {
                            f64::NEG_INFINITY
                        } else {
                            v
                        }
                    });
                    let mut breaks = part.breaks.clone();
                    breaks.extend_from_slice(extra_breaks);
                    let tmp = ContinuousPart {
                        ln_pdf: joint.clone(),
                        anchor,
                        support,
                        breaks: breaks.clone(),
                        scale: part.scale.min(weight_scale).max(1e-300),
                        tail: part.tail,
                        named: None,
                        sampler: None,
                        cdf: None,
                    };
                    // Shift by a scanned peak so far states neither overflow nor underflow.
                    let shift = tmp.scan_peak();
                    let j1 = joint.clone();
                    let shifted = ContinuousPart { ln_pdf: Arc::new(move |z, u| j1(z, u) - shift), ..tmp.clone() };
                    let integral = shifted.expect(&|_| 1.0)?;
                    if integral > 0.0 && integral.is_finite() {
                        ln_cont = m.ln() + shift + integral.ln();
                        let ln_i = integral.ln() + shift;
                        let j2 = joint.clone();
                        let mut post = ContinuousPart { ln_pdf: Arc::new(move |z, u| j2(z, u) - ln_i), ..tmp };
                        let snapshot = post.clone();
                        post.cdf = Some(Arc::new(move |x| Ok(snapshot.expect_on(&|_| 1.0, Some(x))?.clamp(0.0, 1.0))));
                        cont = Some(post);
                    }
                }
            }
        }
        let hi = ln_atoms.max(ln_cont);
        if hi == f64::NEG_INFINITY || hi.is_nan() {
            return Err(LrbError::domain("reweighted terminal law has total mass 0"));
        }
        let ln_total = hi + ((ln_atoms - hi).exp() + (ln_cont - hi).exp()).ln();
        let atoms: Vec<(f64, f64)> = if max_lw.is_finite() {
            lw.iter().map(|&(z, l)| (z, (l - ln_total).exp())).filter(|a| a.1 > 0.0).collect()
        } else {
            vec![]
        };
        let continuous = cont.map(|p| ((ln_cont - ln_total).exp(), p));
        Ok((ln_total.exp(), TerminalLaw { atoms, continuous }))
    }
}

fn expand_pmf(lnp: impl Fn(u64) -> f64, start: u64) -> Result<Vec<(f64, f64)>> {
    let mut atoms = Vec::new();
    let mut total = 0.0;
    let mut k = start;
    let mut peaked = false;
    let mut prev = f64::NEG_INFINITY;
    loop {
        let p = lnp(k).exp();
        total += p;
        if p > 0.0 {
            atoms.push((k as f64, p));
        }
        let lp = lnp(k);
        if lp < prev {
            peaked = true;
        }
        prev = lp;
        if peaked && (1.0 - total < 1e-16 || p < 1e-20 * total) {
            break;
        }
        k += 1;
        if k - start > 5_000_000 {
            return Err(LrbError::numeric("discrete law has too heavy a tail to expand", total));
        }
    }
    for a in &mut atoms {
        a.1 /= total;
    }
    Ok(atoms)
}

/// The full identity of a Lévy random bridge.
#[derive(Debug, Clone)]
pub struct LrbSpec {
    pub family: IncrementFamily,
    pub horizon: f64,
    pub nu: TerminalLaw,
    pub time_change: Option<TimeChange>,
}

/// State of a bridge observed at time `s` with value `xi`, together with the
/// conditional terminal law.
#[derive(Debug, Clone)]
pub struct ConditionedState {
    pub s: f64,
    pub xi: f64,
    pub horizon: f64,
    /// `psi_s(R; xi)`.
    pub psi: f64,
    pub posterior: TerminalLaw,
}

impl LrbSpec {
    pub fn new(family: IncrementFamily, horizon: f64, nu: TerminalLaw) -> Result<Self> {
        family.validate()?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(LrbError::config(format!("horizon must be positive, got {horizon}")));
        }
        for &(z, w) in &nu.atoms {
            if w == 0.0 {
                continue;
            }
            let f = family.density(horizon, z)?;
            if !(f > 0.0 && f.is_finite()) {
                return Err(LrbError::model(format!(
                    "atom at {z} has terminal density {f} under the {} family",
                    family.name()
                )));
            }
        }
        if let Some((m, part)) = &nu.continuous {
            if *m > 0.0 {
                if family.is_discrete() {
                    return Err(LrbError::model("a counting family needs a purely atomic terminal law"));
                }
                if family.support() == Support::Positive && part.support.0 < 0.0 {
                    return Err(LrbError::model("terminal density charges negative values for a subordinator"));
                }
            }
        }
        Ok(LrbSpec { family, horizon, nu, time_change: None })
    }

    pub fn with_time_change(mut self, tc: TimeChange) -> Result<Self> {
        tc.validate(self.horizon)?;
        self.time_change = Some(tc);
        Ok(self)
    }

    /// Operational time of calendar time `t`.
    pub fn op_time(&self, t: f64) -> f64 {
        match &self.time_change {
            Some(tc) => tc.tau(self.horizon, t),
            None => t,
        }
    }

    fn check_time(&self, t: f64, allow_horizon: bool) -> Result<()> {
        let ok = t >= 0.0 && (t < self.horizon || (allow_horizon && t == self.horizon));
        if ok {
            Ok(())
        } else {
            Err(LrbError::domain(format!("time {t} outside [0, {})", self.horizon)))
        }
    }

    /// Log of the weight `f_{T-t}(z - xi) / f_T(z)`.
    fn ln_weight(&self, t: f64) -> Arc<dyn Fn(f64, f64) -> f64 + Send + Sync> {
        let fam = self.family;
        let tt = self.horizon;
        Arc::new(move |z: f64, u: f64| {
            let a = fam.ln_density(tt - t, u).unwrap_or(f64::NEG_INFINITY);
            if a == f64::NEG_INFINITY {
                return a;
            }
            let b = fam.ln_density(tt, z).unwrap_or(f64::NEG_INFINITY);
            let v = a - b;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
    }

    fn reweight_at(&self, t: f64, xi: f64) -> Result<(f64, TerminalLaw)> {
        if t == 0.0 && xi == 0.0 {
            return Ok((1.0, self.nu.clone()));
        }
        let lower = if self.family.is_subordinator() { Some(xi) } else { None };
        let mut breaks = vec![xi];
        if matches!(self.family, IncrementFamily::VarianceGamma { .. }) {
            breaks.push(0.0);
        }
        let scale = family_scale(&self.family, self.horizon - t);
        // Geometric ladder from the weight scale up to the prior scale, so a
        // sharply peaked weight with a long tail is integrated piece by piece.
        if let Some((_, part)) = &self.nu.continuous {
            let mut d = 10.0 * scale;
            while d < part.scale && breaks.len() < 64 {
                breaks.push(xi + d);
                if lower.is_none() {
                    breaks.push(xi - d);
                }
                d *= 10.0;
            }
        }
        self.nu.reweight(self.ln_weight(t), xi, &breaks, lower, scale)
    }

    /// `psi_t(R; xi) = int f_{T-t}(z - xi) / f_T(z) nu(dz)`.
    pub fn psi(&self, t: f64, xi: f64) -> Result<f64> {
        self.check_time(t, false)?;
        if !xi.is_finite() {
            return Err(LrbError::domain("state must be finite"));
        }
        let (psi, _) = self.reweight_at(t, xi).map_err(|e| match e {
            LrbError::Domain(m) => LrbError::domain(format!("state {xi} unreachable at t={t}: {m}")),
            other => other,
        })?;
        Ok(psi)
    }

    /// Density (mass for counting families) of `xi_t` given `xi_s = x`.
    pub fn transition_density(&self, s: f64, x: f64, t: f64, y: f64) -> Result<f64> {
        self.check_time(s, false)?;
        self.check_time(t, true)?;
        if !(t > s) {
            return Err(LrbError::domain("transition needs s < t"));
        }
        if t == self.horizon {
            let st = self.condition(s, x)?;
            return st.posterior_density(y);
        }
        let f = self.family.density(t - s, y - x)?;
        if f == 0.0 {
            return Ok(0.0);
        }
        let ps = self.psi(s, x)?;
        let pt = match self.psi(t, y) {
            Ok(v) => v,
            Err(LrbError::Domain(_)) => 0.0,
            Err(e) => return Err(e),
        };
        Ok(pt / ps * f)
    }

    /// Marginal density of `xi_t`.
    pub fn marginal_density(&self, t: f64, y: f64) -> Result<f64> {
        if t == 0.0 {
            return Err(LrbError::domain("the bridge starts at 0"));
        }
        self.transition_density(0.0, 0.0, t, y)
    }

    /// Conditional terminal law given `xi_s = xi`.
    pub fn condition(&self, s: f64, xi: f64) -> Result<ConditionedState> {
        self.check_time(s, false)?;
        let (psi, posterior) = self.reweight_at(s, xi).map_err(|e| match e {
            LrbError::Domain(m) => LrbError::model(format!("no terminal mass reachable from {xi} at s={s}: {m}")),
            other => other,
        })?;
        Ok(ConditionedState { s, xi, horizon: self.horizon, psi, posterior })
    }

    /// Restarts the bridge at a conditioned state: a new bridge on `[0, T-s]`
    /// with terminal law `nu_s(. + xi_s)`.
    pub fn rebase(&self, state: &ConditionedState) -> Result<LrbSpec> {
        if !(state.s < self.horizon) {
            return Err(LrbError::domain("cannot rebase at the horizon"));
        }
        Ok(LrbSpec {
            family: self.family,
            horizon: self.horizon - state.s,
            nu: state.posterior.shifted(-state.xi),
            time_change: None,
        })
    }

    /// Joint density of the increments over a partition of `[0, T]` with
    /// durations `alphas`. Atoms of a continuous-family terminal law give a
    /// singular component that is not included.
    pub fn increment_joint_density(&self, alphas: &[f64], ys: &[f64]) -> Result<f64> {
        if alphas.len() != ys.len() || alphas.is_empty() {
            return Err(LrbError::domain("need one increment per interval"));
        }
        let total: f64 = alphas.iter().sum();
        if (total - self.horizon).abs() > 1e-12 * self.horizon || alphas.iter().any(|a| !(*a > 0.0)) {
            return Err(LrbError::domain("durations must be positive and sum to the horizon"));
        }
        let z: f64 = ys.iter().sum();
        let mut ln = 0.0;
        for (a, y) in alphas.iter().zip(ys) {
            ln += self.family.ln_density(*a, *y)?;
        }
        if ln == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let lft = self.family.ln_density(self.horizon, z)?;
        let num = if self.family.is_discrete() {
            self.nu.atoms.iter().filter(|a| a.0 == z).map(|a| a.1).sum::<f64>()
        } else {
            match &self.nu.continuous {
                Some((m, p)) => m * p.pdf(z),
                None => 0.0,
            }
        };
        if num == 0.0 {
            return Ok(0.0);
        }
        Ok((num.ln() - lft + ln).exp())
    }
}

impl ConditionedState {
    /// `E[xi_T | xi_s]`.
    pub fn terminal_mean(&self) -> Result<f64> {
        self.posterior.mean()
    }

    /// `E[xi_t | xi_s] = ((T-t) xi_s + (t-s) E[xi_T | xi_s]) / (T-s)`.
    pub fn conditional_mean(&self, t: f64) -> Result<f64> {
        if !(t >= self.s && t <= self.horizon) {
            return Err(LrbError::domain("conditional mean needs s <= t <= T"));
        }
        if t == self.s {
            return Ok(self.xi);
        }
        let u = self.terminal_mean()?;
        Ok(((self.horizon - t) * self.xi + (t - self.s) * u) / (self.horizon - self.s))
    }

    /// Density of the continuous part of the posterior at `z`, or the mass of
    /// an atom located at `z`.
    pub fn posterior_density(&self, z: f64) -> Result<f64> {
        let atom: f64 = self.posterior.atoms.iter().filter(|a| a.0 == z).map(|a| a.1).sum();
        if atom > 0.0 {
            return Ok(atom);
        }
        Ok(match &self.posterior.continuous {
            Some((m, p)) => m * p.pdf(z),
            None => 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn named_densities_are_normalised() {
        let laws = [
            NamedDensity::Normal { mean: 1.0, sd: 2.0 },
            NamedDensity::Gamma { shape: 0.7, rate: 1.5 },
            NamedDensity::HalfNormal { sigma: 0.4 },
            NamedDensity::Levy { scale: 2.0 },
            NamedDensity::Gig { lambda: 1.0, delta: 1.0, gamma: 2.0 },
            NamedDensity::Gpd { xi: 0.25, sigma: 1.0, mu: 1.0 },
            NamedDensity::Cauchy { location: -1.0, scale: 0.3 },
            NamedDensity::Uniform { low: 2.0, high: 5.0 },
            NamedDensity::Marginal {
                family: IncrementFamily::VarianceGamma { m: 2.0, theta: 0.5, sigma: 1.0 },
                t: 0.4,
            },
        ];
        for d in laws {
            let p = ContinuousPart::from_named(d).unwrap();
            let total = p.expect(&|_| 1.0).unwrap_or_else(|e| panic!("{d:?}: {e}"));
            assert!((total - 1.0).abs() < 1e-9, "{d:?}: {total}");
        }
    }

    #[test]
    fn discrete_expansions_sum_to_one() {
        for d in [
            NamedDensity::NegativeBinomial { m: 8.0, p: 0.4 },
            NamedDensity::LogSeries { p: 0.3 },
            NamedDensity::Poisson { mean: 3.5 },
        ] {
            let law = TerminalLaw::named(d).unwrap();
            let s: f64 = law.atoms.iter().map(|a| a.1).sum();
            assert_relative_eq!(s, 1.0, max_relative = 1e-14);
        }
        let nb = TerminalLaw::named(NamedDensity::NegativeBinomial { m: 8.0, p: 0.4 }).unwrap();
        assert_relative_eq!(nb.mean().unwrap(), 8.0 * 0.6 / 0.4, max_relative = 1e-12);
    }

    #[test]
    fn psi_is_one_when_nu_is_the_levy_marginal() {
        let fam = IncrementFamily::Gamma { m: 2.0 };
        let nu = TerminalLaw::named(NamedDensity::Marginal { family: fam, t: 1.0 }).unwrap();
        let spec = LrbSpec::new(fam, 1.0, nu).unwrap();
        for &(t, x) in &[(0.2, 0.1), (0.5, 0.7), (0.9, 2.5)] {
            assert_relative_eq!(spec.psi(t, x).unwrap(), 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn gamma_scaled_terminal_psi_closed_form() {
        let (m, kappa, tt) = (1.5, 2.0, 1.0);
        let fam = IncrementFamily::Gamma { m };
        let nu = TerminalLaw::named(NamedDensity::Gamma { shape: m * tt, rate: m / kappa }).unwrap();
        let spec = LrbSpec::new(fam, tt, nu).unwrap();
        for &(t, y) in &[(0.3, 0.2), (0.6, 1.1)] {
            let want = kappa.powf(-m * t) * (m * (1.0 - 1.0 / kappa) * y).exp();
            assert_relative_eq!(spec.psi(t, y).unwrap(), want, max_relative = 1e-9);
        }
    }

    #[test]
    fn binary_posterior_odds() {
        let fam = IncrementFamily::Brownian { theta: 0.0, sigma: 1.0 };
        let (k0, k1, p, tt) = (0.0, 1.0, 0.3, 1.0);
        let spec = LrbSpec::new(fam, tt, TerminalLaw::binary(k0, k1, p).unwrap()).unwrap();
        let (s, xi) = (0.4, 0.6);
        let st = spec.condition(s, xi).unwrap();
        let w = |k: f64| (k * xi - 0.5 * k * k * s) / (tt - s);
        let q0 = p * w(k0).exp() / (p * w(k0).exp() + (1.0 - p) * w(k1).exp());
        assert_relative_eq!(st.posterior.atoms[0].1, q0, max_relative = 1e-13);
        assert_eq!(spec.condition(0.0, 0.0).unwrap().posterior.atoms, spec.nu.atoms);
    }

    #[test]
    fn rebase_at_origin_is_identity() {
        let fam = IncrementFamily::Cauchy { c: 1.0 };
        let spec = LrbSpec::new(fam, 2.0, TerminalLaw::binary(-1.0, 3.0, 0.4).unwrap()).unwrap();
        let r = spec.rebase(&spec.condition(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(r.horizon, 2.0);
        assert_eq!(r.nu.atoms, spec.nu.atoms);
    }

    #[test]
    fn vg_atom_at_pole_is_rejected() {
        let fam = IncrementFamily::VarianceGamma { m: 1.0, theta: 0.0, sigma: 1.0 };
        let err = LrbSpec::new(fam, 0.4, TerminalLaw::binary(0.0, 1.0, 0.5).unwrap()).unwrap_err();
        assert!(matches!(err, LrbError::Model(_)));
        assert!(LrbSpec::new(fam, 0.6, TerminalLaw::binary(0.0, 1.0, 0.5).unwrap()).is_ok());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = TerminalLaw::named(NamedDensity::Gig { lambda: 0.5, delta: 1.0, gamma: 1.0 }).unwrap();
        let q = law.quantile(0.9, 1e-12).unwrap();
        assert_relative_eq!(law.cdf(q).unwrap(), 0.9, max_relative = 1e-8);
    }
}
