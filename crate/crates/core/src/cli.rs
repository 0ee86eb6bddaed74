//! Command-line front end: JSON model configs, path simulation, pricing,
//! reserving and plot-ready tables.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{LrbError, Result};
use crate::lrb::{ContinuousPart, LrbSpec, NamedDensity, TailClass, TerminalLaw};
use crate::marginals::IncrementFamily;
use crate::pricing::{
    brownian_binary_call, call_on_bond, cashflow_price, cauchy_call_closed_form, equity_model_check, gamma_call,
    ntd_legs, ntd_par_premium, BasketSpec, BinaryPayoff, DiscountCurve, EquityModel,
};
use crate::quad::{default_rel_tol, integrate, QuadConfig};
use crate::reserving::{latest_state, read_claims_csv, GigPrior, ReinsuranceLayer, ReserveModel, TimeChange};
use crate::simulate::{sample_path, sample_terminal, uniform_grid, RngStream, SimOptions, VgMethod};

// ---------------------------------------------------------------------------
// Configuration documents
// ---------------------------------------------------------------------------

/// Terminal law: weighted atoms and/or one named law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalConfig {
    /// `[value, probability]` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<NamedDensity>,
    /// Mass of `density`; defaults to one minus the atom mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_weight: Option<f64>,
    /// Overrides the tail class derived from `density`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailClass>,
}

impl TerminalConfig {
    pub fn law(&self) -> Result<TerminalLaw> {
        let atom_mass: f64 = self.atoms.iter().map(|a| a.1).sum();
        let Some(d) = self.density else {
            if self.density_weight.is_some() || self.tail.is_some() {
                return Err(LrbError::config("density_weight and tail need a density"));
            }
            if self.atoms.is_empty() {
                return Err(LrbError::config("terminal law needs atoms or a density"));
            }
            return TerminalLaw::new(self.atoms.clone(), None);
        };
        let weight = self.density_weight.unwrap_or(1.0 - atom_mass);
        let discrete = matches!(
            d,
            NamedDensity::NegativeBinomial { .. } | NamedDensity::LogSeries { .. } | NamedDensity::Poisson { .. }
        );
        if discrete {
            if self.tail.is_some() {
                return Err(LrbError::config("tail hints apply to continuous densities only"));
            }
            let mut atoms = self.atoms.clone();
            for (z, w) in TerminalLaw::named(d)?.atoms {
                atoms.push((z, w * weight));
            }
            return TerminalLaw::new(atoms, None);
        }
        let mut part = ContinuousPart::from_named(d)?;
        if let Some(tail) = self.tail {
            part.tail = tail;
        }
        TerminalLaw::new(self.atoms.clone(), Some((weight, part)))
    }

    /// `(k0, k1, Q[X_T = k0])` when the law is two atoms.
    fn binary(&self) -> Option<BinaryPayoff> {
        if self.density.is_some() || self.atoms.len() != 2 {
            return None;
        }
        let mut a = self.atoms.clone();
        a.sort_by(|x, y| x.0.total_cmp(&y.0));
        BinaryPayoff::new(a[0].0, a[1].0, a[0].1).ok()
    }
}

/// Discounting and cash-flow map for pricing commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    #[serde(default = "zero_curve")]
    pub curve: DiscountCurve,
    /// Cash flow `h(x) = x / payoff_scale` at the horizon.
    #[serde(default = "one")]
    pub payoff_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument: Option<Instrument>,
}

fn zero_curve() -> DiscountCurve {
    DiscountCurve::flat(0.0)
}

fn one() -> f64 {
    1.0
}

/// Instruments understood by `lrb price`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Instrument {
    /// Bond paying `h(X_T)` on a two-atom terminal law, priced at `(t, xi)`.
    BinaryBond {
        t: f64,
        xi: f64,
        /// Monte Carlo draws from the conditional terminal law; 0 disables.
        #[serde(default)]
        mc_paths: usize,
    },
    /// Call expiring at `t` with strike `strike` on the bond price, seen from `(s, xi)`.
    Call { s: f64, xi: f64, t: f64, strike: f64 },
    /// nth-to-default swap on a Poisson-bridge basket.
    Ntd { basket: BasketSpec, s: f64, n_s: usize },
    /// Information-based recovery of an exponential Lévy stock.
    EquityCheck { model: EquityModel, rate: f64, s0: f64, t: f64, xi: f64 },
}

/// Reserving outputs requested by `lrb reserve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReserveConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<ReinsuranceLayer>,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    /// Confidence levels of the conditional value at risk of the ultimate.
    #[serde(default = "default_cvar_levels")]
    pub cvar_levels: Vec<f64>,
}

impl Default for ReserveConfig {
    fn default() -> Self {
        ReserveConfig { layers: vec![], quantiles: default_quantiles(), cvar_levels: default_cvar_levels() }
    }
}

fn default_quantiles() -> Vec<f64> {
    vec![0.5, 0.75, 0.9, 0.95, 0.99]
}

fn default_cvar_levels() -> Vec<f64> {
    vec![0.95, 0.99]
}

/// A complete model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: IncrementFamily,
    pub horizon: f64,
    pub terminal: TerminalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_change: Option<TimeChange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vg_method: Option<VgMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve: Option<ReserveConfig>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LrbError::config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LrbError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn spec(&self) -> Result<LrbSpec> {
        let spec = LrbSpec::new(self.family, self.horizon, self.terminal.law()?)?;
        match &self.time_change {
            Some(tc) => spec.with_time_change(tc.clone()),
            None => Ok(spec),
        }
    }

    fn market(&self) -> MarketConfig {
        self.market.clone().unwrap_or(MarketConfig { curve: zero_curve(), payoff_scale: 1.0, instrument: None })
    }

    /// The prior as a closed-form GIG prior when it is one.
    fn gig_prior(&self) -> Option<GigPrior> {
        let IncrementFamily::StableHalf { c } = self.family else { return None };
        let t = &self.terminal;
        let Some(NamedDensity::Gig { lambda, delta, gamma }) = t.density else { return None };
        let n = lambda + 0.5;
        let closed = t.atoms.is_empty()
            && t.density_weight.is_none_or(|w| w == 1.0)
            && self.time_change.is_none()
            && n >= 0.0
            && n.fract() == 0.0
            && (delta - c * self.horizon).abs() <= 1e-12 * delta;
        closed.then_some(GigPrior { n: n as u32, c, gamma, horizon: self.horizon })
    }
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "lrb", version, about = "Lévy random bridges: simulation, pricing and reserving")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Model configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw; overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample bridge paths on a uniform grid as `path_id,t,value` CSV.
    Simulate {
        #[arg(long, default_value_t = 100)]
        paths: usize,
        /// Number of grid steps on `[0, T]`.
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Price the instrument in the config's market block.
    Price,
    /// Best estimate, reserve, quantiles and reinsurance from a claims history.
    Reserve {
        /// Paid-claims CSV with columns `t,cumulative_paid`; no claims when omitted.
        #[arg(long)]
        claims: Option<PathBuf>,
        /// Valuation time; defaults to the latest claims time.
        #[arg(long)]
        asof: Option<f64>,
        /// Extra layer `ATTACHMENT[:LIMIT]`; repeatable.
        #[arg(long = "layer", value_parser = parse_layer)]
        layers: Vec<ReinsuranceLayer>,
    },
    /// Tabulate a quantity on a grid as `x,value` CSV.
    Table {
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// `START:END:N`, N points including both ends.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Grid,
        /// Time of the marginal or of the bond price; defaults to T/2.
        #[arg(long)]
        time: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// Marginal density of `xi_t`.
    Density,
    /// Marginal distribution function of `xi_t`.
    Cdf,
    /// Bond price `Lambda(t, x)`.
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self.n {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.end - self.start) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let p: Vec<&str> = s.split(':').collect();
    if p.len() != 3 {
        return Err("expected START:END:N".into());
    }
    let f = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"));
    let (start, end) = (f(p[0])?, f(p[1])?);
    let n = p[2].trim().parse::<usize>().map_err(|e| format!("{}: {e}", p[2]))?;
    if !(start.is_finite() && end.is_finite() && start <= end) {
        return Err("grid needs finite START <= END".into());
    }
    Ok(Grid { start, end, n })
}

fn parse_layer(s: &str) -> std::result::Result<ReinsuranceLayer, String> {
    let (a, l) = match s.split_once(':') {
        Some((a, l)) => (a, Some(l)),
        None => (s, None),
    };
    let attachment = a.trim().parse::<f64>().map_err(|e| format!("{a}: {e}"))?;
    let limit = match l.map(str::trim) {
        None | Some("inf") | Some("") => None,
        Some(l) => Some(l.parse::<f64>().map_err(|e| format!("{l}: {e}"))?),
    };
    let layer = ReinsuranceLayer { attachment, limit };
    layer.validate().map_err(|e| e.to_string())?;
    Ok(layer)
}

// ---------------------------------------------------------------------------
// Output formatting
// ---------------------------------------------------------------------------

/// JSON text with every float printed to 17 significant digits; non-finite
/// floats become `null`.
pub fn json_17(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', 2 * n));
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("checked f64");
            out.push_str(&format!("{x:.16e}"));
        }
        Value::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Machine-readable error report.
pub fn error_report(e: &LrbError) -> String {
    let kind = match e {
        LrbError::Domain(_) => "domain",
        LrbError::Numeric { .. } => "numeric",
        LrbError::Unsupported(_) => "unsupported",
        LrbError::Model(_) => "model",
        LrbError::Config(_) => "config",
    };
    let mut err = json!({"kind": kind, "exit_code": e.exit_code(), "message": e.to_string()});
    if let LrbError::Numeric { partial, .. } = e {
        err["partial"] = json!(partial);
    }
    json_17(&json!({ "error": err }))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| LrbError::config(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn io_err(e: impl std::fmt::Display) -> LrbError {
    LrbError::config(format!("write failed: {e}"))
}

fn write_json(path: Option<&Path>, v: &Value) -> Result<()> {
    let mut w = open_out(path)?;
    w.write_all(json_17(v).as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn write_table(path: Option<&Path>, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(path)?);
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.serialize(row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let path = cli.common.config.as_deref().ok_or_else(|| LrbError::config("--config FILE is required"))?;
    let cfg = ModelConfig::load(path)?;
    let seed = cli.common.seed.or(cfg.seed).unwrap_or(0);
    let out = cli.common.out.as_deref();
    let work = || -> Result<()> {
        match &cli.command {
            Command::Simulate { paths, steps } => cmd_simulate(&cfg, *paths, *steps, seed, out),
            Command::Price => cmd_price(&cfg, seed, out),
            Command::Reserve { claims, asof, layers } => {
                let history = match claims {
                    Some(p) => read_claims_csv(open_in(p)?)?,
                    None => vec![],
                };
                cmd_reserve(&cfg, &history, *asof, layers, out)
            }
            Command::Table { quantity, grid, time } => cmd_table(&cfg, *quantity, grid, *time, out),
        }
    };
    match cli.common.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LrbError::config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn open_in(p: &Path) -> Result<impl Read> {
    File::open(p).map_err(|e| LrbError::config(format!("cannot read {}: {e}", p.display())))
}

/// Writes `n_paths` paths on a `steps`-step uniform grid.
pub fn cmd_simulate(cfg: &ModelConfig, n_paths: usize, steps: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let spec = cfg.spec()?;
    let opts = SimOptions { vg_method: cfg.vg_method.unwrap_or_default(), ..SimOptions::default() };
    let grid = uniform_grid(spec.horizon, steps);
    let paths: Vec<_> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| sample_path(&spec, &grid, &opts, RngStream::new(seed, i)))
        .collect::<Result<_>>()?;
    let rows = paths.iter().enumerate().flat_map(|(i, p)| p.times.iter().zip(&p.values).map(move |(t, v)| (i, *t, *v)));
    let mut w = csv::Writer::from_writer(open_out(out)?);
    w.write_record(["path_id", "t", "value"]).map_err(io_err)?;
    for row in rows {
        w.serialize(row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Price of the configured instrument as a JSON value.
pub fn price_value(cfg: &ModelConfig, seed: u64) -> Result<Value> {
    let market = cfg.market();
    market.curve.validate()?;
    let scale = market.payoff_scale;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(LrbError::config("payoff_scale must be positive"));
    }
    let h = move |x: f64| x / scale;
    let tol = default_rel_tol();
    let instrument = market.instrument.clone().ok_or_else(|| LrbError::config("market.instrument is missing"))?;
    match instrument {
        Instrument::BinaryBond { t, xi, mc_paths } => {
            if cfg.terminal.binary().is_none() {
                return Err(LrbError::config("binary_bond needs a terminal law of two atoms"));
            }
            let spec = cfg.spec()?;
            let state = spec.condition(t, xi)?;
            let price = cashflow_price(&state, &market.curve, &h)?;
            let mut diag = json!({ "quadrature_error": tol * price.abs() });
            if mc_paths > 0 {
                let p = market.curve.discount(t, spec.horizon)?;
                let draws: Vec<f64> = (0..mc_paths as u64)
                    .into_par_iter()
                    .map(|i| Ok(p * h(sample_terminal(&state.posterior, &mut RngStream::new(seed, i).rng())?)))
                    .collect::<Result<_>>()?;
                let (mean, se) = mean_se(&draws);
                diag["mc_price"] = json!(mean);
                diag["mc_stderr"] = json!(se);
            }
            Ok(json!({ "instrument": "binary_bond", "price": price, "diagnostics": diag }))
        }
        Instrument::Call { s, xi, t, strike } => {
            let spec = cfg.spec()?;
            let state = spec.condition(s, xi)?;
            let bond_price = cashflow_price(&state, &market.curve, &h)?;
            let binary = cfg.terminal.binary().filter(|_| scale == 1.0 && cfg.time_change.is_none());
            let (price, method) = match (cfg.family, binary) {
                (IncrementFamily::Cauchy { c }, Some(pay)) => (
                    cauchy_call_closed_form(c, &pay, spec.horizon, s, xi, t, strike, &market.curve)?.price,
                    "cauchy_closed_form",
                ),
                (IncrementFamily::Brownian { sigma, .. }, Some(pay)) => (
                    brownian_binary_call(&pay, sigma, spec.horizon, s, xi, t, strike, &market.curve)?,
                    "brownian_closed_form",
                ),
                (IncrementFamily::Gamma { .. }, _) if scale == 1.0 && cfg.time_change.is_none() => {
                    (gamma_call(&spec, &state, t, strike, &market.curve)?, "gamma_closed_form")
                }
                _ => (call_on_bond(&spec, &state, t, strike, &market.curve, &h)?.price, "generic"),
            };
            Ok(json!({
                "instrument": "call",
                "price": price,
                "bond_price": bond_price,
                "method": method,
                "diagnostics": { "quadrature_error": tol * price.abs().max(bond_price.abs()) },
            }))
        }
        Instrument::Ntd { basket, s, n_s } => {
            let legs = ntd_legs(&basket, s, n_s)?;
            let par = if s == 0.0 && n_s == 0 { Some(ntd_par_premium(&basket)?) } else { None };
            let price = legs.value();
            Ok(json!({
                "instrument": "ntd",
                "price": price,
                "premium_leg": legs.premium,
                "protection_leg": legs.protection,
                "par_premium": par,
                "diagnostics": { "quadrature_error": tol * legs.premium.abs().max(legs.protection.abs()) },
            }))
        }
        Instrument::EquityCheck { model, rate, s0, t, xi } => {
            let chk = equity_model_check(&model, cfg.horizon, rate, s0, t, xi)?;
            Ok(json!({
                "instrument": "equity_check",
                "price": chk.info_price,
                "model_price": chk.model_price,
                "unit_mean": chk.unit_mean,
                "w": chk.w,
                "rho": chk.rho,
                "diagnostics": { "quadrature_error": tol * chk.info_price.abs() },
            }))
        }
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn cmd_price(cfg: &ModelConfig, seed: u64, out: Option<&Path>) -> Result<()> {
    write_json(out, &price_value(cfg, seed)?)
}

/// Reserving summary as a JSON value. The state is the latest claims point,
/// carried forward to `asof`.
pub fn reserve_value(
    cfg: &ModelConfig,
    claims: &[(f64, f64)],
    asof: Option<f64>,
    extra_layers: &[ReinsuranceLayer],
) -> Result<Value> {
    let model = ReserveModel::from_spec(cfg.spec()?)?;
    let horizon = model.horizon();
    let (t_last, xi) = latest_state(claims);
    let s = asof.unwrap_or(t_last);
    if !(s >= t_last && s < horizon) {
        return Err(LrbError::config(format!("asof {s} must lie in [{t_last}, {horizon})")));
    }
    let rc = cfg.reserve.clone().unwrap_or_default();
    let be = model.best_estimate(s, xi)?;
    let mut quantiles = vec![];
    for &p in &rc.quantiles {
        if !(p > 0.0 && p < 1.0) {
            return Err(LrbError::config(format!("quantile level {p} outside (0, 1)")));
        }
        quantiles.push(json!({ "p": p, "value": model.ultimate_quantile(s, xi, p)? }));
    }
    let mut layers = vec![];
    for layer in rc.layers.iter().chain(extra_layers) {
        let r = model.layer_recovery(s, xi, s, horizon, layer)?;
        layers.push(json!({ "attachment": layer.attachment, "limit": layer.limit, "recovery": r }));
    }
    let mut cvar = vec![];
    for &a in &rc.cvar_levels {
        if !(a > 0.0 && a < 1.0) {
            return Err(LrbError::config(format!("cvar level {a} outside (0, 1)")));
        }
        let theta = model.ultimate_quantile(s, xi, a)?;
        cvar.push(json!({ "level": a, "threshold": theta, "value": model.cvar_exceedence(s, xi, horizon, theta)? }));
    }
    let mut v = json!({
        "asof": s,
        "paid": xi,
        "U": be.ultimate,
        "R": be.reserve,
        "var": be.variance,
        "quantiles": quantiles,
        "layer_recoveries": layers,
        "cvar": cvar,
    });
    if let Some(g) = cfg.gig_prior() {
        v["U_closed_form"] = json!(g.ultimate(model.spec.op_time(s), xi)?);
    }
    Ok(v)
}

pub fn cmd_reserve(
    cfg: &ModelConfig,
    claims: &[(f64, f64)],
    asof: Option<f64>,
    layers: &[ReinsuranceLayer],
    out: Option<&Path>,
) -> Result<()> {
    write_json(out, &reserve_value(cfg, claims, asof, layers)?)
}

/// `(x, value)` rows of a tabulated quantity. Unreachable states give NaN.
pub fn table_rows(cfg: &ModelConfig, quantity: Quantity, grid: &Grid, time: Option<f64>) -> Result<Vec<(f64, f64)>> {
    let spec = cfg.spec()?;
    let t = time.unwrap_or(spec.horizon / 2.0);
    let xs = grid.points();
    let value: Box<dyn Fn(f64) -> Result<f64> + Sync> = match quantity {
        Quantity::Density => {
            if !(t > 0.0 && t <= spec.horizon) {
                return Err(LrbError::config("density needs 0 < t <= T"));
            }
            if t == spec.horizon {
                Box::new(|x| terminal_density(&spec.nu, x))
            } else {
                Box::new(|x| spec.marginal_density(t, x))
            }
        }
        Quantity::Cdf => {
            if !(t > 0.0 && t <= spec.horizon) {
                return Err(LrbError::config("cdf needs 0 < t <= T"));
            }
            Box::new(|x| marginal_cdf(&spec, t, x))
        }
        Quantity::Lambda => {
            let market = cfg.market();
            market.curve.validate()?;
            let (scale, p) = (market.payoff_scale, market.curve.discount(t, spec.horizon)?);
            Box::new(move |x| match spec.condition(t, x) {
                Ok(st) => Ok(p * st.posterior.expect(&|z| z / scale)?),
                Err(LrbError::Model(_)) | Err(LrbError::Domain(_)) => Ok(f64::NAN),
                Err(e) => Err(e),
            })
        }
    };
    xs.par_iter().map(|&x| Ok((x, value(x)?))).collect()
}

fn terminal_density(nu: &TerminalLaw, x: f64) -> Result<f64> {
    let atom: f64 = nu.atoms.iter().filter(|a| a.0 == x).map(|a| a.1).sum();
    let cont = match &nu.continuous {
        Some((m, part)) => m * part.pdf(x),
        None => 0.0,
    };
    Ok(atom + cont)
}

fn marginal_cdf(spec: &LrbSpec, t: f64, x: f64) -> Result<f64> {
    if t == spec.horizon {
        return spec.nu.cdf(x);
    }
    if spec.family.is_discrete() {
        let mut acc = 0.0;
        let mut k = 0.0;
        while k <= x {
            acc += spec.marginal_density(t, k)?;
            k += 1.0;
        }
        return Ok(acc.min(1.0));
    }
    let positive = spec.family.support() == crate::marginals::Support::Positive;
    if positive && x <= 0.0 {
        return Ok(0.0);
    }
    let f = |y: f64| spec.marginal_density(t, y).unwrap_or(f64::NAN);
    let cfg = QuadConfig::default();
    // Integrate the lighter side and complement when x is past the bulk.
    let mean = spec.condition(0.0, 0.0)?.conditional_mean(t);
    let upper = matches!(mean, Ok(m) if x > m);
    let r = if upper {
        1.0 - integrate(f, x, f64::INFINITY, &cfg)?.value
    } else {
        integrate(f, if positive { 0.0 } else { f64::NEG_INFINITY }, x, &cfg)?.value
    };
    Ok(r.clamp(0.0, 1.0))
}

pub fn cmd_table(
    cfg: &ModelConfig,
    quantity: Quantity,
    grid: &Grid,
    time: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let rows = table_rows(cfg, quantity, grid, time)?;
    write_table(out, &["x", "value"], rows.into_iter().map(|(x, v)| vec![x, v]))
}
