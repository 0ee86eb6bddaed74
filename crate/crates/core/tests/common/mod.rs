//! Statistics shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Writes straight to the process stderr so the line survives output capture.
pub fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Asymptotic Kolmogorov tail `Q(lambda)` with the usual small-sample
/// correction on the effective size.
fn kolmogorov_q(d: f64, ne: f64) -> f64 {
    let lam = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lam * lam).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    kolmogorov_q(d, na * nb / (na + nb))
}

/// One-sample Kolmogorov-Smirnov p-value against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    kolmogorov_q(d, n)
}

/// Pearson chi-square p-value of integer counts against probabilities on
/// `0, 1, ...`; cells are merged from the right until every expected count
/// is at least 5, and the remaining tail mass goes into the last cell.
pub fn chi_square_counts(values: &[u64], probs: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mut k = probs.len();
    while k > 1 && probs[k - 1] * n < 5.0 {
        k -= 1;
    }
    let mut observed = vec![0.0; k];
    for &v in values {
        observed[(v as usize).min(k - 1)] += 1.0;
    }
    let mut expected: Vec<f64> = probs[..k].iter().map(|p| p * n).collect();
    let head: f64 = expected[..k - 1].iter().sum();
    expected[k - 1] = n - head;
    let stat: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (k - 1) as f64;
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat)
}
