use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lrb_core::pricing::{ntd_legs, BasketSpec};
use lrb_core::reserving::GigPrior;
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn lrb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrb")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

const VG_FIGURE: &str = r#"{
  "family": {"name": "vg", "m": 2.0, "theta": 0.0, "sigma": 1.0},
  "horizon": 1.0,
  "terminal": {"atoms": [[0.0, 0.3], [1.0, 0.7]]},
  "seed": 3,
  "market": {"curve": {"kind": "constant", "rate": 0.0},
             "instrument": {"kind": "binary_bond", "t": 0.0, "xi": 0.0}}
}"#;

#[test]
fn zero_paths_give_a_header_only_csv() {
    let out = lrb(&["simulate", "--config", data("vg_binary_bond.json").to_str().unwrap(), "--paths", "0"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "path_id,t,value\n");
}

#[test]
fn fixed_seed_gives_identical_bytes_for_any_thread_count() {
    let cfg = data("vg_binary_bond.json");
    let cfg = cfg.to_str().unwrap();
    let base = ["simulate", "--config", cfg, "--seed", "42", "--paths", "64", "--steps", "16"];
    let a = lrb(&base);
    let b = lrb(&base);
    let c = lrb(&[&base[..], &["--threads", "3"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let d = lrb(&["simulate", "--config", cfg, "--seed", "43", "--paths", "64", "--steps", "16"]);
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn vg_figure_setup_paths_end_on_the_redemption_atoms() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "vg.json", VG_FIGURE);
    let out_path = dir.path().join("paths.csv");
    let out =
        lrb(&["simulate", "--config", &cfg, "--paths", "200", "--steps", "50", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(&out_path).unwrap();
    let rows: Vec<(u64, f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 200 * 51);
    let ends: Vec<f64> = rows.iter().filter(|r| r.1 == 1.0).map(|r| r.2).collect();
    assert!(ends.iter().all(|&z| z == 0.0 || z == 1.0));
    let defaults = ends.iter().filter(|&&z| z == 0.0).count() as f64 / 200.0;
    assert!((defaults - 0.3).abs() < 0.12, "{defaults}");
    // t = 0 price is the discounted prior mean.
    let v = json_of(&lrb(&["price", "--config", &cfg]));
    assert_eq!(num(&v, "price"), 0.7);
}

#[test]
fn binary_bond_reports_a_monte_carlo_error() {
    let v = json_of(&lrb(&["price", "--config", data("vg_binary_bond.json").to_str().unwrap()]));
    let d = &v["diagnostics"];
    let (price, mc, se) = (num(&v, "price"), num(d, "mc_price"), num(d, "mc_stderr"));
    assert!((price - mc).abs() < 4.0 * se);
    assert!(num(d, "quadrature_error") < 1e-8);
}

#[test]
fn call_struck_at_zero_is_the_bond() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "call.json",
        r#"{
          "family": {"name": "brownian", "theta": 0.0, "sigma": 1.0},
          "horizon": 1.0,
          "terminal": {"atoms": [[0.2, 0.4], [1.0, 0.6]]},
          "market": {"curve": {"kind": "constant", "rate": 0.04},
                     "instrument": {"kind": "call", "s": 0.2, "xi": 0.3, "t": 0.6, "strike": 0.0}}
        }"#,
    );
    let v = json_of(&lrb(&["price", "--config", &cfg]));
    assert!((num(&v, "price") - num(&v, "bond_price")).abs() < 1e-12);
}

#[test]
fn unsupported_gamma_call_exits_with_3() {
    let out = lrb(&["price", "--config", data("gamma_call.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "unsupported");
    assert!(err["error"]["message"].as_str().unwrap().contains("m(T-t)"));
}

#[test]
fn ntd_single_name_closed_case() {
    let dir = TempDir::new().unwrap();
    let (q, r, rec, tt) = (0.06f64, 0.02f64, 0.4f64, 2.0f64);
    let cfg = write(
        &dir,
        "ntd.json",
        &format!(
            r#"{{
              "family": {{"name": "poisson", "lambda": 1.0}},
              "horizon": {tt},
              "terminal": {{"atoms": [[0.0, 0.0], [1.0, 1.0]]}},
              "market": {{"instrument": {{"kind": "ntd", "s": 0.0, "n_s": 0,
                "basket": {{"size": 1, "pmf": [0.0, 1.0], "n": 1, "premium": {q}, "rate": {r}, "recovery": {rec}, "maturity": {tt}}}}}}}
            }}"#
        ),
    );
    let v = json_of(&lrb(&["price", "--config", &cfg]));
    let a = q - r;
    let premium = ((a * tt).exp() - 1.0 - a * tt) / (a * a * tt);
    let protection = (1.0 - rec) * (1.0 - (-r * tt).exp()) / (r * tt);
    assert!((num(&v, "price") - (premium + protection)).abs() < 1e-9);
    let b = BasketSpec { size: 1, pmf: vec![0.0, 1.0], n: 1, premium: q, rate: r, recovery: rec, maturity: tt };
    assert!((num(&v, "premium_leg") - ntd_legs(&b, 0.0, 0).unwrap().premium).abs() < 1e-15);
}

#[test]
fn equity_check_recovers_the_stock() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "eq.json",
        r#"{
          "family": {"name": "vg", "m": 2.0, "theta": 0.0, "sigma": 1.0},
          "horizon": 1.0,
          "terminal": {"atoms": [[1.0, 1.0]]},
          "market": {"instrument": {"kind": "equity_check", "model": {"kind": "vg", "m": 3.0, "theta": -0.1, "sigma": 0.2},
                                    "rate": 0.03, "s0": 100.0, "t": 0.4, "xi": 0.1}}
        }"#,
    );
    let v = json_of(&lrb(&["price", "--config", &cfg]));
    assert!((num(&v, "unit_mean") - 1.0).abs() < 1e-8);
}

#[test]
fn reserve_without_claims_is_the_prior_mean() {
    let v = json_of(&lrb(&["reserve", "--config", data("gig_reserve.json").to_str().unwrap()]));
    let prior = GigPrior { n: 1, c: 2.0, gamma: 1.0, horizon: 1.0 };
    let mean = prior.law().unwrap().mean().unwrap();
    assert!((num(&v, "U") - mean).abs() < 1e-9);
    assert_eq!(num(&v, "asof"), 0.0);
}

#[test]
fn reserve_matches_the_gig_closed_form_and_stop_loss() {
    let v = json_of(&lrb(&[
        "reserve",
        "--config",
        data("gig_reserve.json").to_str().unwrap(),
        "--claims",
        data("claims.csv").to_str().unwrap(),
        "--layer",
        "0",
    ]));
    let prior = GigPrior { n: 1, c: 2.0, gamma: 1.0, horizon: 1.0 };
    let closed = prior.ultimate(0.4, 1.5).unwrap();
    assert!((num(&v, "U") - closed).abs() < 1e-7);
    assert!((num(&v, "U_closed_form") - closed).abs() < 1e-15);
    assert!(num(&v, "R") >= 0.0);
    let layers = v["layer_recoveries"].as_array().unwrap();
    assert_eq!(layers.len(), 3);
    for l in layers.iter().filter(|l| l["attachment"].as_f64() == Some(0.0)) {
        assert!((num(l, "recovery") - num(&v, "R")).abs() < 1e-8);
    }
    let q: Vec<f64> = v["quantiles"].as_array().unwrap().iter().map(|x| num(x, "value")).collect();
    assert!(q.windows(2).all(|w| w[0] <= w[1]) && q[0] >= 1.5);
}

#[test]
fn non_monotone_claims_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let claims = write(&dir, "c.csv", "t,cumulative_paid\n0.1,1.0\n0.2,0.5\n");
    let out = lrb(&["reserve", "--config", data("gig_reserve.json").to_str().unwrap(), "--claims", &claims]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn schema_violation_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", r#"{"family": {"name": "vg", "m": 2.0}, "horizon": 1.0}"#);
    let out = lrb(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(serde_json::from_slice::<Value>(&out.stderr).is_ok());
}

#[test]
fn json_output_uses_17_significant_digits() {
    let out = lrb(&["price", "--config", data("vg_binary_bond.json").to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"price\"")).unwrap();
    let digits = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa = digits.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{line}");
}

#[test]
fn tables_for_plotting() {
    let cfg = data("gig_reserve.json");
    let cfg = cfg.to_str().unwrap();
    let out = lrb(&["table", "--config", cfg, "--quantity", "cdf", "--grid", "0:6:13", "--time", "0.5"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    assert_eq!(rdr.headers().unwrap(), vec!["x", "value"]);
    let rows: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 13);
    assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-12));
    let dens = lrb(&["table", "--config", cfg, "--quantity", "density", "--grid", "0.01:20:400", "--time", "0.5"]);
    let rows: Vec<(f64, f64)> = csv::Reader::from_reader(&dens.stdout[..]).deserialize().map(|r| r.unwrap()).collect();
    let h = rows[1].0 - rows[0].0;
    let mass: f64 = rows.iter().map(|r| r.1).sum::<f64>() * h;
    assert!((mass - 1.0).abs() < 0.05, "{mass}");
    let lam = lrb(&[
        "table",
        "--config",
        data("vg_binary_bond.json").to_str().unwrap(),
        "--quantity",
        "lambda",
        "--grid",
        "-1:2:7",
    ]);
    let rows: Vec<(f64, f64)> = csv::Reader::from_reader(&lam.stdout[..]).deserialize().map(|r| r.unwrap()).collect();
    assert!(rows.iter().all(|r| r.1 > 0.0 && r.1 < 1.0));
    assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-12));
}
