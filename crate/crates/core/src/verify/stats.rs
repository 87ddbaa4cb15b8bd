//! Test statistics: Pearson chi-square with tail pooling and
//! Kolmogorov-Smirnov with the asymptotic Kolmogorov distribution.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Order-independent-enough running sum (Neumaier).
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n;
    let mut v = CompensatedSum::default();
    xs.iter().for_each(|&x| v.add((x - mean) * (x - mean)));
    let var = if xs.len() > 1 { v.value() / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Pearson chi-square of observed counts against expected counts. Adjacent
/// bins are merged left to right until each expected count is at least
/// `min_expected`; a short remainder joins the last merged bin.
pub fn chi_square(observed: &[f64], expected: &[f64], min_expected: f64) -> Result<ChiSquare> {
    assert_eq!(observed.len(), expected.len());
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&oi, &ei) in observed.iter().zip(expected) {
        o += oi;
        e += ei;
        if e >= min_expected {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if o > 0.0 || e > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    if bins.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "chi-square needs at least two bins with expected count >= {min_expected}"
        )));
    }
    let statistic: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquare { statistic, dof, p_value: dist.sf(statistic), bins: bins.len() })
}

/// `Q_KS(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ks {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// Two-sample Kolmogorov-Smirnov test for continuous data.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Ks {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ks { statistic: d, p_value: ks_p(d, n * m / (n + m)) }
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Ks {
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ks { statistic: d, p_value: ks_p(d, n) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.36) ≈ 0.0495, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_q(1.36) - 0.0495).abs() < 2e-4);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn chi_square_pools_small_bins() {
        let obs = [50.0, 30.0, 15.0, 3.0, 1.0, 1.0, 0.0];
        let exp = [50.0, 30.0, 15.0, 3.0, 1.5, 0.5, 0.4];
        let r = chi_square(&obs, &exp, 5.0).unwrap();
        assert_eq!(r.bins, 4);
        // the 0.4 remainder joins the last pooled bin: (5 − 5.4)²/5.4
        assert!((r.statistic - 0.16 / 5.4).abs() < 1e-12);
        assert_eq!(r.dof, 3);
        assert!(chi_square(&[1.0], &[1.0], 5.0).is_err());
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.2).collect();
        let r = ks_two_sample(&a, &b);
        assert!((r.statistic - 0.2).abs() <= 1.001e-3);
        assert!(r.p_value < 1e-6);
        let r = ks_one_sample(&a, |x| x.clamp(0.0, 1.0));
        assert!(r.statistic <= 1e-3 + 1e-12);
    }

    #[test]
    fn compensated_mean() {
        let xs = vec![1e16, 1.0, -1e16, 1.0];
        let mut s = CompensatedSum::default();
        xs.iter().for_each(|&x| s.add(x));
        assert_eq!(s.value(), 2.0);
        let (m, se) = mean_se(&[2.0, 4.0]);
        assert_eq!(m, 3.0);
        assert!((se - 1.0).abs() < 1e-15);
    }
}
