//! Individual checks. Each returns a [`CheckRecord`] carrying its own
//! verdict under the supplied [`Thresholds`].

use serde::{Deserialize, Serialize};

use super::stats::{chi_square, ks_one_sample, ks_two_sample, mean_se};
use crate::error::{Error, Result};
use crate::rng::{domain, StreamRng};

pub const MIN_SCALAR_SAMPLES: usize = 1000;
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub z_cap: f64,
    pub p_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { z_cap: 3.0, p_floor: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    ZScore,
    ChiSquare,
    KolmogorovSmirnov,
    Deterministic,
}

/// One row of a report. `statistic` is the z-score, the chi-square or KS
/// statistic, or the absolute deviation for deterministic checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub kind: CheckKind,
    pub n: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub predicted: f64,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckRecord {
    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

fn z_record(name: &str, values: &[f64], predicted: f64, th: &Thresholds) -> Result<CheckRecord> {
    if values.len() < MIN_SCALAR_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{name}: {} samples, need at least {MIN_SCALAR_SAMPLES}",
            values.len()
        )));
    }
    let (mean, se) = mean_se(values);
    let z = if se > 0.0 {
        (mean - predicted) / se
    } else if (mean - predicted).abs() <= 1e-12 * predicted.abs().max(1.0) {
        0.0
    } else {
        return Err(Error::DegenerateVariance { value: mean, predicted });
    };
    Ok(CheckRecord {
        name: name.to_string(),
        kind: CheckKind::ZScore,
        n: values.len(),
        estimate: mean,
        std_error: se,
        predicted,
        statistic: z,
        p_value: None,
        pass: z.abs() <= th.z_cap,
        note: String::new(),
    })
}

/// Mean of `e^{−q·sample}` against a predicted Laplace transform.
pub fn check_scalar_laplace(name: &str, samples: &[f64], q: f64, predicted: f64, th: &Thresholds) -> Result<CheckRecord> {
    let values: Vec<f64> = samples.iter().map(|&s| (-q * s).exp()).collect();
    z_record(name, &values, predicted, th)
}

/// Sample mean against a predicted mean.
pub fn check_mean(name: &str, samples: &[f64], predicted: f64, th: &Thresholds) -> Result<CheckRecord> {
    z_record(name, samples, predicted, th)
}

/// Frequency of `true` against a predicted probability.
pub fn check_proportion(name: &str, hits: &[bool], predicted: f64, th: &Thresholds) -> Result<CheckRecord> {
    let values: Vec<f64> = hits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    z_record(name, &values, predicted, th)
}

/// `E e^{−⟨X_t,f⟩}` from per-replica values of `⟨X_t,f⟩` against
/// `e^{−U_t f(a)}`.
pub fn check_laplace_functional(name: &str, values: &[f64], u: f64, th: &Thresholds) -> Result<CheckRecord> {
    check_scalar_laplace(name, values, 1.0, (-u).exp(), th)
}

/// `E⟨X_t,f⟩` against `π_t f(a)`.
pub fn check_moment(name: &str, values: &[f64], pi: f64, th: &Thresholds) -> Result<CheckRecord> {
    z_record(name, values, pi, th)
}

fn chi_record(name: &str, n: usize, observed: &[f64], expected: &[f64], th: &Thresholds) -> Result<CheckRecord> {
    let r = chi_square(observed, expected, MIN_EXPECTED_COUNT)
        .map_err(|e| Error::InsufficientSamples(format!("{name}: {e}")))?;
    Ok(CheckRecord {
        name: name.to_string(),
        kind: CheckKind::ChiSquare,
        n,
        estimate: r.statistic,
        std_error: 0.0,
        predicted: r.dof as f64,
        statistic: r.statistic,
        p_value: Some(r.p_value),
        pass: r.p_value >= th.p_floor,
        note: format!("{} pooled bins, dof {}", r.bins, r.dof),
    })
}

/// Chi-square of integer observations against a pmf. Mass missing from
/// the pmf goes to a tail bin `n ≥ pmf.len()`.
pub fn check_pmf(name: &str, samples: &[usize], pmf: &[f64], th: &Thresholds) -> Result<CheckRecord> {
    let k = pmf.len();
    let mut observed = vec![0.0; k + 1];
    for &s in samples {
        observed[s.min(k)] += 1.0;
    }
    let n = samples.len() as f64;
    let mut expected: Vec<f64> = pmf.iter().map(|p| p * n).collect();
    expected.push((1.0 - pmf.iter().sum::<f64>()).max(0.0) * n);
    chi_record(name, samples.len(), &observed, &expected, th)
}

/// Binned chi-square of real samples. Bins are `[edges[i], edges[i+1])`
/// plus an overflow bin `[edges.last(), ∞)` whose mass is whatever
/// `bin_mass` leaves of 1. Samples below `edges[0]` count in the first bin.
pub fn check_density(
    name: &str,
    samples: &[f64],
    edges: &[f64],
    bin_mass: impl Fn(f64, f64) -> f64,
    th: &Thresholds,
) -> Result<CheckRecord> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!("{name}: bin edges must be increasing")));
    }
    let nb = edges.len() - 1;
    let mut observed = vec![0.0; nb + 1];
    for &x in samples {
        let i = edges.partition_point(|&e| e <= x);
        observed[i.saturating_sub(1).min(nb)] += 1.0;
    }
    let n = samples.len() as f64;
    let mut expected: Vec<f64> = edges.windows(2).map(|w| bin_mass(w[0], w[1]) * n).collect();
    let covered: f64 = expected.iter().sum::<f64>() / n;
    expected.push((1.0 - covered).max(0.0) * n);
    chi_record(name, samples.len(), &observed, &expected, th)
}

/// Uniform edges `0, w, 2w, …, hi`.
pub fn uniform_edges(hi: f64, width: f64) -> Vec<f64> {
    let k = (hi / width).round() as usize;
    (0..=k).map(|i| i as f64 * width).collect()
}

fn jittered(xs: &[f64], width: f64, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = StreamRng::with_domain(seed, domain::JITTER, stream);
    xs.iter().map(|&x| x + width * rng.uniform()).collect()
}

/// Two-sample Kolmogorov-Smirnov. With `jitter = Some((seed, w))` every
/// value on both sides gets an independent `U(0, w)` offset first, which
/// turns a common discrete or mixed law into a common continuous one.
pub fn check_two_sample(
    name: &str,
    a: &[f64],
    b: &[f64],
    jitter: Option<(u64, f64)>,
    th: &Thresholds,
) -> Result<CheckRecord> {
    if a.len() < MIN_SCALAR_SAMPLES || b.len() < MIN_SCALAR_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{name}: sample sizes {} and {}, need at least {MIN_SCALAR_SAMPLES} each",
            a.len(),
            b.len()
        )));
    }
    let (r, note) = match jitter {
        Some((seed, w)) => (
            ks_two_sample(&jittered(a, w, seed, 0), &jittered(b, w, seed, 1)),
            format!("values jittered by U(0,{w}); p from Q_KS((sqrt(ne)+0.12+0.11/sqrt(ne)) D)"),
        ),
        None => (ks_two_sample(a, b), "p from Q_KS((sqrt(ne)+0.12+0.11/sqrt(ne)) D)".to_string()),
    };
    Ok(CheckRecord {
        name: name.to_string(),
        kind: CheckKind::KolmogorovSmirnov,
        n: a.len().min(b.len()),
        estimate: r.statistic,
        std_error: 0.0,
        predicted: 0.0,
        statistic: r.statistic,
        p_value: Some(r.p_value),
        pass: r.p_value >= th.p_floor,
        note,
    })
}

/// One-sample Kolmogorov-Smirnov against a continuous CDF.
pub fn check_cdf(name: &str, samples: &[f64], cdf: impl Fn(f64) -> f64, th: &Thresholds) -> Result<CheckRecord> {
    if samples.len() < MIN_SCALAR_SAMPLES {
        return Err(Error::InsufficientSamples(format!("{name}: {} samples", samples.len())));
    }
    let r = ks_one_sample(samples, cdf);
    Ok(CheckRecord {
        name: name.to_string(),
        kind: CheckKind::KolmogorovSmirnov,
        n: samples.len(),
        estimate: r.statistic,
        std_error: 0.0,
        predicted: 0.0,
        statistic: r.statistic,
        p_value: Some(r.p_value),
        pass: r.p_value >= th.p_floor,
        note: String::new(),
    })
}

/// `|estimate − predicted| ≤ tol`.
pub fn check_close(name: &str, estimate: f64, predicted: f64, tol: f64) -> CheckRecord {
    let dev = (estimate - predicted).abs();
    CheckRecord {
        name: name.to_string(),
        kind: CheckKind::Deterministic,
        n: 1,
        estimate,
        std_error: tol,
        predicted,
        statistic: dev,
        p_value: None,
        pass: dev <= tol,
        note: String::new(),
    }
}

/// A property that either holds or not; `estimate` and `bound` are the
/// worst observed value and the limit it was held to.
pub fn check_holds(name: &str, holds: bool, estimate: f64, bound: f64) -> CheckRecord {
    CheckRecord {
        name: name.to_string(),
        kind: CheckKind::Deterministic,
        n: 1,
        estimate,
        std_error: 0.0,
        predicted: bound,
        statistic: estimate - bound,
        p_value: None,
        pass: holds,
        note: String::new(),
    }
}
