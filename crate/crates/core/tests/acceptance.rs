//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured figure and the pinned tolerance, then asserts it.

mod common;

use std::time::Instant;

use common::{chi_square_counts, ks_one_sample, ks_two_sample, mean_se, report};
use lrb_core::bridges::{
    cauchy_bridge_cdf, cauchy_bridge_moments, stable_half_bridge_cdf, stable_half_bridge_partial_moment,
    stable_half_bridge_second_moment, stable_half_midpoint,
};
use lrb_core::lrb::ContinuousPart;
use lrb_core::lrb::{LrbSpec, NamedDensity, TerminalLaw};
use lrb_core::marginals::{nig_self_consistent, vg_derive, IncrementFamily};
use lrb_core::pricing::{
    call_on_bond, cauchy_call_closed_form, nb_intensity, nb_terminal, nb_transition, ntd_legs, prb_intensity,
    prb_next_jump_survival, BasketSpec, BinaryBond, BinaryPayoff, DiscountCurve, MixedPoisson,
};
use lrb_core::quad::{integrate_with_breaks, QuadConfig};
use lrb_core::reserving::{GigPrior, TwoLineModel};
use lrb_core::simulate::{
    sample_path, sample_paths, sample_stable_half_rb, std_normal, RngStream, SimOptions, VgMethod,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Continuous, Gamma, Normal};

fn verdict(id: &str, ok: bool, detail: String) {
    report(&format!("criterion {id}: {} | {detail}", if ok { "PASS" } else { "FAIL" }));
}

fn t_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

// 1. Stable-1/2 bridge closed forms against quadrature of the bridge kernel.
#[test]
fn criterion_01_stable_half_bridge_closed_forms() {
    const TOL: f64 = 1e-8;
    const MAX_SECONDS: f64 = 5.0;
    let start = Instant::now();
    let horizon = 1.0;
    let cfg = QuadConfig::with_tol(1e-13, 1e-16);
    let mut worst = 0.0f64;
    let mut points = 0;
    for t in t_grid() {
        for z in [0.5, 1.0, 4.0] {
            for c in [1.0, 5.0, 10.0] {
                let fam = IncrementFamily::StableHalf { c };
                let fz = fam.density(horizon, z).unwrap();
                let kernel = |u: f64| fam.density(t, u).unwrap() * fam.density(horizon - t, z - u).unwrap() / fz;
                let mode = t / horizon * z;
                for frac in [0.2, 0.5, 0.8] {
                    let y = frac * z;
                    let cdf = integrate_with_breaks(kernel, 0.0, y, &[mode], &cfg).unwrap().value;
                    let pm = integrate_with_breaks(|u| u * kernel(u), 0.0, y, &[mode], &cfg).unwrap().value;
                    worst = worst.max((stable_half_bridge_cdf(t, horizon, y, z, c) - cdf).abs());
                    worst = worst.max((stable_half_bridge_partial_moment(t, horizon, y, z, c) - pm).abs());
                    points += 2;
                }
                let m2 = integrate_with_breaks(|u| u * u * kernel(u), 0.0, z, &[mode], &cfg).unwrap().value;
                worst = worst.max((stable_half_bridge_second_moment(t, horizon, z, c) - m2).abs());
                points += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst <= TOL && secs < MAX_SECONDS;
    verdict(
        "1",
        ok,
        format!("{points} points, max abs error {worst:.2e} (tol {TOL:.0e}), {secs:.2} s (limit {MAX_SECONDS} s)"),
    );
    assert!(ok);
}

// 2. Cauchy bridge closed forms against quadrature of the bridge kernel.
#[test]
fn criterion_02_cauchy_bridge_closed_forms() {
    const TOL: f64 = 1e-7;
    let horizon = 1.0;
    let mut worst = 0.0f64;
    let mut points = 0;
    for t in t_grid() {
        for z in [0.5, 1.0, 4.0] {
            for c in [1.0, 5.0, 10.0] {
                let fam = IncrementFamily::Cauchy { c };
                let fz = fam.density(horizon, z).unwrap();
                let kernel = |u: f64| fam.density(t, u).unwrap() * fam.density(horizon - t, z - u).unwrap() / fz;
                let cfg = QuadConfig::with_tol(1e-11, 1e-14).with_scale(c * t.min(horizon - t));
                let brk = [0.0, z];
                let mean = t / horizon * z;
                for off in [-3.0, -0.5, 0.5, 3.0] {
                    let y = mean + off * c * t.min(horizon - t);
                    let q = integrate_with_breaks(kernel, f64::NEG_INFINITY, y, &brk, &cfg).unwrap().value;
                    worst = worst.max((cauchy_bridge_cdf(t, horizon, y, z, c).unwrap() - q).abs());
                    points += 1;
                }
                let (m1, m2) = cauchy_bridge_moments(t, horizon, z, c);
                let q1 = integrate_with_breaks(|u| u * kernel(u), f64::NEG_INFINITY, f64::INFINITY, &brk, &cfg)
                    .unwrap()
                    .value;
                let q2 = integrate_with_breaks(|u| u * u * kernel(u), f64::NEG_INFINITY, f64::INFINITY, &brk, &cfg)
                    .unwrap()
                    .value;
                worst = worst.max((m1 - q1).abs()).max((m2 - q2).abs() / m2.max(1.0));
                points += 2;
            }
        }
    }
    let ok = worst <= TOL;
    verdict("2", ok, format!("{points} points, max error {worst:.2e} (tol {TOL:.0e}; second moment relative above 1)"));
    assert!(ok);
}

/// Largest gap between the bridge transition density and a reference Lévy
/// increment density over a fixed set of states.
fn recovery_gap(spec: &LrbSpec, reference: &dyn Fn(f64, f64) -> f64, xs: &[f64], dys: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (s, t) in [(0.0, 0.4), (0.0, 0.9), (0.3, 0.6), (0.3, 0.9), (0.5, 0.8)] {
        let starts: Vec<f64> = if s == 0.0 { vec![0.0] } else { xs.to_vec() };
        for &x in &starts {
            for &dy in dys {
                let p = spec.transition_density(s, x, t, x + dy).unwrap();
                worst = worst.max((p - reference(t - s, dy)).abs());
            }
        }
    }
    worst
}

// 3. Bridges with Lévy-marginal terminal laws are the Lévy processes.
#[test]
fn criterion_03_levy_recovery() {
    const TOL: f64 = 1e-8;
    let horizon = 1.0;
    let mut rows = vec![];

    // (a) Standard VG information, asymmetric VG terminal law with the fixed-point scale.
    let (m, theta) = (2.0, 0.4);
    let rho = vg_derive(m, theta, 1.0).unwrap().rho;
    let target = IncrementFamily::VarianceGamma { m, theta, sigma: rho };
    let nu = TerminalLaw::named(NamedDensity::Marginal { family: target, t: horizon }).unwrap();
    let spec = LrbSpec::new(IncrementFamily::VarianceGamma { m, theta: 0.0, sigma: 1.0 }, horizon, nu).unwrap();
    rows.push((
        "a VG",
        recovery_gap(&spec, &|dt, d| target.density(dt, d).unwrap(), &[-0.5, 0.2, 1.0], &[-1.0, -0.3, 0.4, 1.2]),
    ));

    // (b) NIG with the self-consistent scale.
    let (c, theta) = (1.5, 0.5);
    let d = nig_self_consistent(c, theta).unwrap();
    let target = IncrementFamily::NormalInverseGaussian { c, theta, sigma: d.k_factor };
    let nu = TerminalLaw::named(NamedDensity::Marginal { family: target, t: horizon }).unwrap();
    let info = IncrementFamily::NormalInverseGaussian { c: d.alpha, theta: 0.0, sigma: 1.0 };
    let spec = LrbSpec::new(info, horizon, nu).unwrap();
    rows.push((
        "b NIG",
        recovery_gap(&spec, &|dt, d| target.density(dt, d).unwrap(), &[-0.5, 0.2, 1.0], &[-1.0, -0.3, 0.0, 0.4, 1.2]),
    ));

    // (c) Gamma information, scaled-gamma terminal: gamma increments with mean kappa per unit time.
    let (m, kappa) = (1.5, 2.0);
    let nu = TerminalLaw::named(NamedDensity::Gamma { shape: m * horizon, rate: m / kappa }).unwrap();
    let spec = LrbSpec::new(IncrementFamily::Gamma { m }, horizon, nu).unwrap();
    let reference = |dt: f64, d: f64| Gamma::new(m * dt, m / kappa).unwrap().pdf(d);
    rows.push(("c gamma", recovery_gap(&spec, &reference, &[0.1, 0.7, 2.0], &[0.05, 0.3, 1.0, 2.5])));

    // (d) Brownian information, N(theta T, T) terminal: Brownian motion with drift theta.
    let theta = 0.7;
    let nu = TerminalLaw::named(NamedDensity::Normal { mean: theta * horizon, sd: horizon.sqrt() }).unwrap();
    let spec = LrbSpec::new(IncrementFamily::Brownian { theta: 0.0, sigma: 1.0 }, horizon, nu).unwrap();
    let reference = |dt: f64, d: f64| Normal::new(theta * dt, dt.sqrt()).unwrap().pdf(d);
    rows.push(("d Brownian", recovery_gap(&spec, &reference, &[-0.5, 0.2, 1.0], &[-1.0, -0.3, 0.0, 0.4, 1.2])));

    let ok = rows.iter().all(|r| r.1 <= TOL);
    let detail: Vec<String> = rows.iter().map(|(n, g)| format!("{n} {g:.2e}")).collect();
    verdict("3", ok, format!("max abs density gap: {} (tol {TOL:.0e})", detail.join(", ")));
    assert!(ok);
}

// 4. Stationary increments for every sampler with a two-atom terminal law.
#[test]
fn criterion_04_stationary_increments() {
    const N: usize = 100_000;
    const P_MIN: f64 = 0.01;
    const MAX_SECONDS: f64 = 60.0;
    let start = Instant::now();
    let grid = [0.0, 0.2, 0.5, 0.7, 1.0];
    let gig = SimOptions::default();
    let gd = SimOptions { vg_method: VgMethod::GammaDifference, ..SimOptions::default() };
    let cases: Vec<(&str, IncrementFamily, (f64, f64), SimOptions)> = vec![
        ("brownian", IncrementFamily::Brownian { theta: 0.0, sigma: 1.0 }, (-1.0, 1.0), gig),
        ("gamma", IncrementFamily::Gamma { m: 2.0 }, (0.5, 2.0), gig),
        ("vg/gig", IncrementFamily::VarianceGamma { m: 2.0, theta: 0.0, sigma: 1.0 }, (-1.0, 1.0), gig),
        ("vg/gamma-diff", IncrementFamily::VarianceGamma { m: 2.0, theta: 0.0, sigma: 1.0 }, (-1.0, 1.0), gd),
        ("stable-1/2", IncrementFamily::StableHalf { c: 1.0 }, (0.5, 2.0), gig),
        ("cauchy", IncrementFamily::Cauchy { c: 1.0 }, (-1.0, 2.0), gig),
        ("nig", IncrementFamily::NormalInverseGaussian { c: 1.0, theta: 0.0, sigma: 1.0 }, (-1.0, 1.0), gig),
    ];
    let mut lines = vec![];
    let mut ok = true;
    for (i, (name, fam, (k0, k1), opts)) in cases.into_iter().enumerate() {
        let spec = LrbSpec::new(fam, 1.0, TerminalLaw::binary(k0, k1, 0.4).unwrap()).unwrap();
        let a = sample_paths(&spec, &grid, N, 1000 + 2 * i as u64, &opts).unwrap();
        let b = sample_paths(&spec, &grid, N, 1001 + 2 * i as u64, &opts).unwrap();
        let head: Vec<f64> = a.iter().map(|p| p.values[1]).collect();
        let incr: Vec<f64> = b.iter().map(|p| p.values[3] - p.values[2]).collect();
        let p = ks_two_sample(&head, &incr);
        ok &= p > P_MIN;
        lines.push(format!("{name} p={p:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < MAX_SECONDS;
    verdict(
        "4",
        ok,
        format!("{} (need p > {P_MIN}), {N} samples each, {secs:.1} s (limit {MAX_SECONDS} s)", lines.join(", ")),
    );
    assert!(ok);
}

/// `(t, mean, se)` of a process evaluated along paths, and whether every
/// mean is within `k` standard errors of `target`.
fn martingale_rows(values: &[Vec<f64>], times: &[f64], target: f64, k: f64) -> (bool, String) {
    let mut ok = true;
    let mut parts = vec![];
    for (j, t) in times.iter().enumerate() {
        let col: Vec<f64> = values.iter().map(|v| v[j]).collect();
        let (m, se) = mean_se(&col);
        let z = (m - target).abs() / se;
        ok &= z <= k;
        parts.push(format!("t={t}: {z:.2} SE"));
    }
    (ok, parts.join(" "))
}

// 5. Best estimates and discounted bond prices are martingales.
#[test]
fn criterion_05_martingales() {
    const N: usize = 10_000;
    const K_SE: f64 = 3.0;
    let times = [0.25, 0.5, 0.75];
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut ok = true;
    let mut detail = vec![];

    let prior = GigPrior { n: 1, c: 1.0, gamma: 1.0, horizon: 1.0 };
    let spec = prior.model().unwrap().spec;
    let u0 = prior.ultimate(0.0, 0.0).unwrap();
    let paths = sample_paths(&spec, &grid, N, 51, &SimOptions::default()).unwrap();
    let values: Vec<Vec<f64>> = paths
        .par_iter()
        .map(|p| times.iter().enumerate().map(|(j, &t)| prior.ultimate(t, p.values[j + 1]).unwrap()).collect())
        .collect();
    let (o, d) = martingale_rows(&values, &times, u0, K_SE);
    ok &= o;
    detail.push(format!("reserving U [{d}]"));

    let r = 0.05;
    let curve = DiscountCurve::flat(r);
    let payoff = BinaryPayoff::new(0.0, 1.0, 0.3).unwrap();
    let bonds = [
        ("VG", BinaryBond::Vg { m: 2.0, sigma: 1.0, p: 0.3 }),
        ("NIG", BinaryBond::Nig { alpha: 1.2, sigma: 1.0, p: 0.3 }),
        ("Cauchy", BinaryBond::Cauchy { c: 1.0, payoff }),
    ];
    for (i, (name, bond)) in bonds.iter().enumerate() {
        let spec = bond.info_spec(1.0).unwrap();
        let target = bond.price(1.0, 0.0, 0.0, &curve).unwrap();
        let paths = sample_paths(&spec, &grid, N, 60 + i as u64, &SimOptions::default()).unwrap();
        let values: Vec<Vec<f64>> = paths
            .par_iter()
            .map(|p| {
                times
                    .iter()
                    .enumerate()
                    .map(|(j, &t)| (-r * t).exp() * bond.price(1.0, t, p.values[j + 1], &curve).unwrap())
                    .collect()
            })
            .collect();
        let (o, d) = martingale_rows(&values, &times, target, K_SE);
        ok &= o;
        detail.push(format!("{name} bond [{d}]"));
    }
    verdict("5", ok, format!("{} (limit {K_SE} SE, {N} paths)", detail.join("; ")));
    assert!(ok);
}

// 6. Midpoint of the bisection sampler against the closed midpoint transform.
#[test]
fn criterion_06_midpoint_law() {
    const N: usize = 100_000;
    const P_MIN: f64 = 0.01;
    let (c, z, horizon) = (1.3, 2.0, 1.0);
    let spec = LrbSpec::new(IncrementFamily::StableHalf { c }, horizon, TerminalLaw::point(z)).unwrap();
    let mids: Vec<f64> = (0..N as u64)
        .into_par_iter()
        .map(|i| sample_stable_half_rb(&spec, 1, RngStream::new(77, i)).unwrap().values[1])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let transform: Vec<f64> = (0..N).map(|_| stable_half_midpoint(0.0, z, horizon, c, std_normal(&mut rng))).collect();
    let p = ks_two_sample(&mids, &transform);
    let p_cdf = ks_one_sample(&mids, |y| stable_half_bridge_cdf(0.5, horizon, y, z, c));
    let ok = p > P_MIN;
    verdict("6", ok, format!("two-sample KS p={p:.3} (need > {P_MIN}); against the bridge CDF p={p_cdf:.3}"));
    assert!(ok);
}

// 7. Poisson random bridges with a negative-binomial terminal law.
#[test]
fn criterion_07_poisson_bridges() {
    const N: usize = 100_000;
    const P_MIN: f64 = 0.01;
    const TOL_INTENSITY: f64 = 1e-6;
    const TOL_MIXED: f64 = 1e-10;
    let (m, p, horizon) = (2.5, 0.4, 1.0);
    let nu = TerminalLaw::named(NamedDensity::NegativeBinomial { m, p }).unwrap();
    let spec = LrbSpec::new(IncrementFamily::Poisson { lambda: 1.0 }, horizon, nu).unwrap();

    let grid = [0.0, 0.3, 0.4, 0.7, 1.0];
    let paths = sample_paths(&spec, &grid, N, 91, &SimOptions::default()).unwrap();
    let probs: Vec<f64> = (0..200).map(|j| nb_transition(m, p, horizon, 0.0, 0, 0.4, j)).collect();
    let head: Vec<u64> = paths.iter().map(|q| q.values[2] as u64).collect();
    let incr: Vec<u64> = paths.iter().map(|q| (q.values[3] - q.values[1]) as u64).collect();
    let p_head = chi_square_counts(&head, &probs);
    let p_incr = chi_square_counts(&incr, &probs);

    let mut gap_int = 0.0f64;
    let h = 1e-4;
    for (s, n) in [(0.1, 0), (0.3, 2), (0.5, 1), (0.6, 5)] {
        let d = (prb_next_jump_survival(&spec, s, n, s - h).unwrap()
            - prb_next_jump_survival(&spec, s, n, s + h).unwrap())
            / (2.0 * h);
        gap_int = gap_int.max((d - prb_intensity(&spec, s, n).unwrap()).abs());
    }

    let mix = ContinuousPart::from_named(NamedDensity::Gamma { shape: m, rate: p * horizon / (1.0 - p) }).unwrap();
    let mp = MixedPoisson::new(mix).unwrap();
    let mut gap_mix = 0.0f64;
    for k in 0..15 {
        gap_mix = gap_mix.max((mp.pmf(horizon, k).unwrap() - nb_terminal(m, p, horizon, 0.0, 0, k)).abs());
    }
    for (s, i, t, j) in [(0.2, 1, 0.5, 3), (0.5, 4, 0.9, 4), (0.1, 0, 0.3, 2), (0.7, 6, 0.95, 9)] {
        gap_mix = gap_mix.max((mp.transition(s, i, t, j).unwrap() - nb_transition(m, p, horizon, s, i, t, j)).abs());
    }
    for (s, n) in [(0.2, 0), (0.4, 2), (0.8, 7)] {
        gap_mix = gap_mix.max((mp.intensity(s, n).unwrap() - nb_intensity(m, p, horizon, s, n)).abs());
    }

    let ok = p_head > P_MIN && p_incr > P_MIN && gap_int <= TOL_INTENSITY && gap_mix <= TOL_MIXED;
    verdict(
        "7",
        ok,
        format!(
            "chi-square p={p_head:.3} (N_0.4), p={p_incr:.3} (N_0.7-N_0.3) (need > {P_MIN}); intensity gap {gap_int:.2e} (tol {TOL_INTENSITY:.0e}); mixed-Poisson gap {gap_mix:.2e} (tol {TOL_MIXED:.0e})"
        ),
    );
    assert!(ok);
}

// 8. Cauchy closed-form call against the generic pricer and Monte Carlo;
// binary bonds at time zero.
#[test]
fn criterion_08_pricing_cross_checks() {
    const TOL: f64 = 1e-6;
    const N_STATES: usize = 50;
    const N_MC: usize = 100_000;
    const K_SE: f64 = 3.0;
    let (c, horizon) = (1.0, 1.0);
    let payoff = BinaryPayoff::new(0.2, 1.0, 0.35).unwrap();
    let curve = DiscountCurve::flat(0.03);
    let spec = LrbSpec::new(IncrementFamily::Cauchy { c }, horizon, payoff.law().unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..N_STATES {
        let s: f64 = rng.random_range(0.0..0.6);
        let t: f64 = rng.random_range(s + 0.05..0.95);
        let xi: f64 = if s == 0.0 { 0.0 } else { rng.random_range(-2.0..3.0) };
        let strike: f64 = rng.random_range(0.1..1.05);
        let closed = cauchy_call_closed_form(c, &payoff, horizon, s, xi, t, strike, &curve).unwrap().price;
        let state = spec.condition(s, xi).unwrap();
        let generic = call_on_bond(&spec, &state, t, strike, &curve, &|x| x).unwrap().price;
        worst = worst.max((closed - generic).abs());
    }

    // Monte Carlo of the same call from one state.
    let (s, xi, t, strike) = (0.2, 0.4, 0.6, 0.55);
    let bond = BinaryBond::Cauchy { c, payoff };
    let state = spec.condition(s, xi).unwrap();
    let ahead = spec.rebase(&state).unwrap();
    let p_st = curve.discount(s, t).unwrap();
    let sub = [0.0, t - s, horizon - s];
    let draws: Vec<f64> = (0..N_MC as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(&ahead, &sub, &SimOptions::default(), RngStream::new(88, i)).unwrap();
            let lam = bond.price(horizon, t, xi + path.values[1], &curve).unwrap();
            p_st * (lam - strike).max(0.0)
        })
        .collect();
    let (mc, se) = mean_se(&draws);
    let closed = cauchy_call_closed_form(c, &payoff, horizon, s, xi, t, strike, &curve).unwrap().price;
    let z = (mc - closed).abs() / se;

    // Binary bonds at t = 0 pay the discounted prior mean exactly.
    let mut exact = true;
    let p0t = curve.discount(0.0, horizon).unwrap();
    let cases = [
        BinaryBond::Generic { family: IncrementFamily::Brownian { theta: 0.0, sigma: 1.0 }, payoff },
        BinaryBond::Generic { family: IncrementFamily::Gamma { m: 2.0 }, payoff },
        BinaryBond::Vg { m: 2.0, sigma: 1.0, p: 0.3 },
        BinaryBond::Nig { alpha: 1.2, sigma: 2.0, p: 0.3 },
        BinaryBond::Cauchy { c, payoff },
    ];
    for bond in cases {
        let want = match bond {
            BinaryBond::Vg { p, .. } | BinaryBond::Nig { p, .. } => p0t * (1.0 - p),
            _ => p0t * (payoff.k0 * payoff.p + payoff.k1 * (1.0 - payoff.p)),
        };
        exact &= bond.price(horizon, 0.0, 0.0, &curve).unwrap() == want;
    }

    let ok = worst <= TOL && z <= K_SE && exact;
    verdict(
        "8",
        ok,
        format!(
            "closed vs generic max gap {worst:.2e} over {N_STATES} states (tol {TOL:.0e}); MC {mc:.6} vs closed {closed:.6}, {z:.2} SE (limit {K_SE}); t=0 bond prices exact: {exact}"
        ),
    );
    assert!(ok);
}

// 9. nth-to-default swaps.
#[test]
fn criterion_09_nth_to_default() {
    const TOL: f64 = 1e-9;
    const N_MC: usize = 100_000;
    const K_SE: f64 = 3.0;

    // One name defaulting uniformly on [0, T]: both legs in closed form.
    let mut worst = 0.0f64;
    for (q, r, rec, s) in
        [(0.08, 0.03, 0.4, 0.0), (0.03, 0.03, 0.0, 0.0), (0.01, 0.05, 0.6, 0.5), (0.05, 0.02, 0.3, 1.2)]
    {
        let tt = 2.0;
        let b = BasketSpec { size: 1, pmf: vec![0.0, 1.0], n: 1, premium: q, rate: r, recovery: rec, maturity: tt };
        let a: f64 = q - r;
        let premium = if a == 0.0 {
            (tt - s) / 2.0
        } else {
            (((a * tt).exp() - (a * s).exp()) / (a * (tt - s)) - (a * s).exp()) / a
        };
        let protection = (1.0 - rec) * ((-r * s).exp() - (-r * tt).exp()) / (r * (tt - s));
        let legs = ntd_legs(&b, s, 0).unwrap();
        worst = worst.max((legs.premium - premium).abs()).max((legs.protection - protection).abs());
    }

    // Five names, second to default, against simulated default times.
    let b = BasketSpec {
        size: 5,
        pmf: vec![0.3, 0.25, 0.2, 0.1, 0.1, 0.05],
        n: 2,
        premium: 0.02,
        rate: 0.03,
        recovery: 0.4,
        maturity: 3.0,
    };
    let atoms: Vec<(f64, f64)> = b.pmf.iter().enumerate().map(|(k, &w)| (k as f64, w)).collect();
    let spec =
        LrbSpec::new(IncrementFamily::Poisson { lambda: 1.0 }, b.maturity, TerminalLaw::new(atoms, None).unwrap())
            .unwrap();
    let a = b.premium - b.rate;
    let legs: Vec<(f64, f64)> = (0..N_MC as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(&spec, &[0.0, b.maturity], &SimOptions::default(), RngStream::new(99, i)).unwrap();
            match path.jump_times.get(b.n - 1) {
                Some(&tau) if tau <= b.maturity => ((a * tau).exp_m1() / a, (1.0 - b.recovery) * (-b.rate * tau).exp()),
                _ => ((a * b.maturity).exp_m1() / a, 0.0),
            }
        })
        .collect();
    let want = ntd_legs(&b, 0.0, 0).unwrap();
    let (pm, pse) = mean_se(&legs.iter().map(|l| l.0).collect::<Vec<_>>());
    let (rm, rse) = mean_se(&legs.iter().map(|l| l.1).collect::<Vec<_>>());
    let (zp, zr) = ((pm - want.premium).abs() / pse, (rm - want.protection).abs() / rse);

    let ok = worst <= TOL && zp <= K_SE && zr <= K_SE;
    verdict(
        "9",
        ok,
        format!(
            "single-name gap {worst:.2e} (tol {TOL:.0e}); K=5 n=2 premium leg {zp:.2} SE, protection leg {zr:.2} SE (limit {K_SE}, {N_MC} sims)"
        ),
    );
    assert!(ok);
}

// 10. GIG priors with half-integer index.
#[test]
fn criterion_10_gig_reserving() {
    const TOL_W: f64 = 1e-12;
    const TOL_U: f64 = 1e-7;
    let mut gap_w = 0.0f64;
    let mut gap_u = 0.0f64;
    for n in 0..=2u32 {
        let prior = GigPrior { n, c: 1.0, gamma: 1.5, horizon: 1.0 };
        let model = prior.model().unwrap();
        for (s, x) in [(0.0, 0.0), (0.2, 0.1), (0.5, 0.6), (0.8, 1.5), (0.95, 0.9)] {
            for t in [s + 0.5 * (1.0 - s), 1.0] {
                let w: f64 = prior.weights(s, x, t).unwrap().iter().sum();
                gap_w = gap_w.max((w - 1.0).abs());
            }
            let closed = prior.ultimate(s, x).unwrap();
            let generic = model.best_estimate(s, x).unwrap().ultimate;
            gap_u = gap_u.max((closed - generic).abs());
        }
    }
    let ok = gap_w <= TOL_W && gap_u <= TOL_U;
    verdict(
        "10",
        ok,
        format!("weights sum gap {gap_w:.2e} (tol {TOL_W:.0e}); U closed vs engine {gap_u:.2e} (tol {TOL_U:.0e})"),
    );
    assert!(ok);
}

// 11. Two-line model against the sliced master process.
#[test]
fn criterion_11_two_line_model() {
    const N: usize = 100_000;
    const K_SE: f64 = 3.0;
    let master_prior = GigPrior { n: 1, c: 1.0, gamma: 1.0, horizon: 2.0 };
    let master = LrbSpec::new(IncrementFamily::StableHalf { c: 1.0 }, 2.0, master_prior.law().unwrap()).unwrap();
    let model = TwoLineModel::new(master.clone(), 1.0, 0.8).unwrap();
    let k2 = model.k().powi(2);
    let t = 0.4;
    let [a, b, c] = model.master_times(t);
    let grid = [0.0, a, b, c, master.horizon];
    let mom = model.moments().unwrap();
    let paths = sample_paths(&master, &grid, N, 111, &SimOptions::default()).unwrap();
    // Per path: U1, U2 at maturity, residuals against the best estimates at t, and x1.
    let rows: Vec<[f64; 6]> = paths
        .par_iter()
        .map(|p| {
            let v = &p.values;
            let (x1, x2) = model.slice([v[1], v[2], v[3]]);
            let (u1, u2) = (v[2], k2 * (v[4] - v[2]));
            let (b1, b2) = model.best_estimates(t, x1, x2).unwrap();
            [u1 * u2, u1 * u1, u2 * u2, u1 - b1, u2 - b2, x1]
        })
        .collect();
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let weighted = |j: usize| rows.iter().map(|r| r[j] * r[5]).collect::<Vec<f64>>();
    let checks = [
        ("cross", col(0), mom.cross),
        ("second1", col(1), mom.second1),
        ("second2", col(2), mom.second2),
        ("U1 residual", col(3), 0.0),
        ("U2 residual", col(4), 0.0),
        ("U1 residual*x1", weighted(3), 0.0),
        ("U2 residual*x1", weighted(4), 0.0),
    ];
    let mut ok = true;
    let mut parts = vec![];
    for (name, v, want) in checks {
        let (m, se) = mean_se(&v);
        let z = (m - want).abs() / se;
        ok &= z <= K_SE;
        parts.push(format!("{name} {z:.2} SE"));
    }
    verdict("11", ok, format!("{} (limit {K_SE} SE, {N} paths)", parts.join(", ")));
    assert!(ok);
}
