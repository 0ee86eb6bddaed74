//! Globally adaptive Gauss-Kronrod (10/21 point) quadrature on finite,
//! semi-infinite and infinite intervals, with optional interior breakpoints.

use crate::error::{LrbError, Result};
use std::sync::OnceLock;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_519_920,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Relative tolerance used when callers do not pass one. Overridden by the
/// `LRB_QUAD_TOL` environment variable.
pub fn default_rel_tol() -> f64 {
    static TOL: OnceLock<f64> = OnceLock::new();
    *TOL.get_or_init(|| {
        std::env::var("LRB_QUAD_TOL")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| *v > 0.0 && v.is_finite())
            .unwrap_or(1e-10)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel: f64,
    pub abs: f64,
    pub max_subdiv: usize,
    /// Length scale for the maps of infinite segments onto `[0, 1)`.
    pub scale: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel: default_rel_tol(), abs: 1e-15, max_subdiv: 4000, scale: 1.0 }
    }
}

impl QuadConfig {
    pub fn with_tol(rel: f64, abs: f64) -> Self {
        QuadConfig { rel, abs, ..Default::default() }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        if scale > 0.0 && scale.is_finite() {
            self.scale = scale;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

#[derive(Clone, Copy)]
enum Map {
    Identity,
    /// x = a + s t / (1 - t)
    Right(f64, f64),
    /// x = b - s t / (1 - t)
    Left(f64, f64),
}

impl Map {
    #[inline]
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            Map::Identity => (t, 1.0),
            Map::Right(a, s) => {
                let u = 1.0 - t;
                (a + s * t / u, s / (u * u))
            }
            Map::Left(b, s) => {
                let u = 1.0 - t;
                (b - s * t / u, s / (u * u))
            }
        }
    }
}

struct Piece {
    map: Map,
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: u32,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, map: Map, a: f64, b: f64) -> Result<(f64, f64)> {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let eval = |t: f64| -> Result<f64> {
        let (x, jac) = map.apply(t);
        let v = f(x);
        if !v.is_finite() {
            return Err(LrbError::numeric(format!("non-finite integrand {v} at x={x}"), f64::NAN));
        }
        Ok(v * jac)
    };
    let fc = eval(centr)?;
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = hlgth * XGK[j];
        let f1 = eval(centr - dx)?;
        let f2 = eval(centr + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * hlgth;
    resabs *= hlgth.abs();
    resasc *= hlgth.abs();
    let mut abserr = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * (200.0 * abserr / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        abserr = abserr.max(50.0 * f64::EPSILON * resabs);
    }
    if !(result.is_finite() && abserr.is_finite()) {
        return Err(LrbError::numeric("quadrature rule overflowed", result));
    }
    Ok((result, abserr))
}

/// Integrates `f` over `[a, b]` (either end may be infinite).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    integrate_with_breaks(f, a, b, &[], cfg)
}

/// Integrates `f` over `[a, b]`, splitting first at the given interior points.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if a.is_nan() || b.is_nan() {
        return Err(LrbError::domain("NaN integration limit"));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_err: 0.0, evals: 0 });
    }
    if a > b {
        let r = integrate_with_breaks(f, b, a, breaks, cfg)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let mut pts: Vec<f64> = breaks.iter().cloned().filter(|x| x.is_finite() && *x > a && *x < b).collect();
    if a.is_infinite() && b.is_infinite() && pts.is_empty() {
        pts.push(0.0);
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut knots = vec![a];
    knots.extend(pts);
    knots.push(b);

    let s = cfg.scale;
    let mut pieces: Vec<Piece> = Vec::new();
    let mut evals = 0usize;
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (map, t0, t1) = if lo.is_infinite() {
            (Map::Left(hi, s), 0.0, 1.0)
        } else if hi.is_infinite() {
            (Map::Right(lo, s), 0.0, 1.0)
        } else {
            (Map::Identity, lo, hi)
        };
        let (v, e) = gk21(&f, map, t0, t1)?;
        evals += 21;
        pieces.push(Piece { map, a: t0, b: t1, value: v, err: e, depth: 0 });
    }

    loop {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        let target = cfg.abs.max(cfg.rel * total.abs());
        if err <= target {
            return Ok(QuadResult { value: total, abs_err: err, evals });
        }
        if pieces.len() >= cfg.max_subdiv {
            return Err(LrbError::numeric(
                format!("quadrature did not reach tolerance: error estimate {err:.3e} > target {target:.3e}"),
                total,
            ));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < 60)
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .ok_or_else(|| LrbError::numeric("quadrature subdivision exhausted", total))?;
        let p = pieces.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // Interval too small to split further; keep its estimate.
            pieces.push(Piece { depth: 60, ..p });
            continue;
        }
        let (v1, e1) = gk21(&f, p.map, p.a, mid)?;
        let (v2, e2) = gk21(&f, p.map, mid, p.b)?;
        evals += 42;
        pieces.push(Piece { map: p.map, a: p.a, b: mid, value: v1, err: e1, depth: p.depth + 1 });
        pieces.push(Piece { map: p.map, a: mid, b: p.b, value: v2, err: e2, depth: p.depth + 1 });
    }
}

/// Double-exponential (tanh-sinh) rule on a finite interval. Suited to
/// integrable algebraic or logarithmic singularities at either endpoint.
///
/// The integrand receives `(x, x - a, b - x)` with both distances computed
/// without cancellation, so factors such as `(b - x)^p` stay accurate when
/// `x` rounds onto `b`.
pub fn integrate_endpoint_singular<F: Fn(f64, f64, f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(LrbError::domain("tanh-sinh rule needs finite limits"));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_err: 0.0, evals: 0 });
    }
    if a > b {
        let r = integrate_endpoint_singular(f, b, a, cfg)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    const T_MAX: f64 = 5.0;
    let half = 0.5 * (b - a);
    let hpi = std::f64::consts::FRAC_PI_2;
    let mut evals = 0usize;
    // Contribution of the node pair at +-t.
    let pair = |t: f64, evals: &mut usize| -> Result<f64> {
        let u = hpi * t.sinh();
        let ch = u.cosh();
        let w = half * hpi * t.cosh() / (ch * ch);
        let d = 2.0 * half / (1.0 + (2.0 * u).exp());
        let mut s = 0.0;
        if d > 0.0 {
            for (x, da, db) in [(a + d, d, 2.0 * half - d), (b - d, 2.0 * half - d, d)] {
                let v = f(x, da, db);
                *evals += 1;
                if !v.is_finite() {
                    return Err(LrbError::numeric(format!("non-finite integrand {v} at x={x}"), f64::NAN));
                }
                s += v;
            }
        }
        Ok(w * s)
    };
    let mut h = 0.5;
    let mut sum = {
        let c = f(a + half, half, half);
        evals += 1;
        if !c.is_finite() {
            return Err(LrbError::numeric("non-finite integrand at midpoint", f64::NAN));
        }
        half * hpi * c
    };
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        sum += pair(k as f64 * h, &mut evals)?;
        k += 1;
    }
    let mut prev = sum * h;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            sum += pair(k as f64 * h, &mut evals)?;
            k += 2;
        }
        let cur = sum * h;
        let err = (cur - prev).abs();
        if err <= cfg.abs.max(cfg.rel * cur.abs()) {
            return Ok(QuadResult { value: cur, abs_err: err, evals });
        }
        prev = cur;
    }
    Err(LrbError::numeric("tanh-sinh rule did not converge", prev))
}
