//! Sample statistics shared by the measurement and validation code.

use serde::{Deserialize, Serialize};

/// Moments of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (n−1) variance; zero for a single sample.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
        let variance = if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 };
        let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
        Some(Self { count: n, mean, variance, skewness, excess_kurtosis })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn stderr(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Sarle's bimodality coefficient; 5/9 is the value of a uniform distribution.
    pub fn bimodality_coefficient(&self) -> f64 {
        let n = self.count as f64;
        if self.count < 4 {
            return 0.0;
        }
        let correction = 3.0 * (n - 1.0).powi(2) / ((n - 2.0) * (n - 3.0));
        (self.skewness.powi(2) + 1.0) / (self.excess_kurtosis + correction)
    }
}

/// Linear interpolated quantile of already sorted data, `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Freedman–Diaconis bin width, `None` for degenerate data.
pub fn freedman_diaconis_width(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let width = 2.0 * iqr / (values.len() as f64).cbrt();
    (width > 0.0 && width.is_finite()).then_some(width)
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Least-squares line through `(x, y)`: `(intercept, slope, slope_stderr)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Some((intercept, slope, (rss / (nf - 2.0) / sxx).sqrt()))
}

/// Number of inversions of `values` (pairs i<j with values[i] > values[j]).
pub fn inversion_count(values: &[f64]) -> u64 {
    fn sort_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
        let n = v.len();
        if n < 2 {
            return 0;
        }
        let mid = n / 2;
        let mut count = sort_count(&mut v[..mid], buf) + sort_count(&mut v[mid..], buf);
        buf.clear();
        let (mut i, mut j) = (0, mid);
        while i < mid && j < n {
            if v[j] < v[i] {
                count += (mid - i) as u64;
                buf.push(v[j]);
                j += 1;
            } else {
                buf.push(v[i]);
                i += 1;
            }
        }
        buf.extend_from_slice(&v[i..mid]);
        buf.extend_from_slice(&v[j..n]);
        v.copy_from_slice(buf);
        count
    }
    let mut copy = values.to_vec();
    sort_count(&mut copy, &mut Vec::with_capacity(values.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_constant_sample() {
        let s = Summary::of(&[2.0; 5]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, 0.0);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn ks_of_uniform_grid() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn inversions() {
        assert_eq!(inversion_count(&[1.0, 2.0, 3.0]), 0);
        assert_eq!(inversion_count(&[3.0, 2.0, 1.0]), 3);
        assert_eq!(inversion_count(&[2.0, 1.0, 4.0, 3.0]), 2);
    }

    #[test]
    fn line_recovered() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 + 0.25 * v).collect();
        let (a, b, e) = linear_fit(&x, &y).unwrap();
        assert!((a - 1.5).abs() < 1e-12 && (b - 0.25).abs() < 1e-12 && e < 1e-12);
    }

    #[test]
    fn bimodality_separates_mixture() {
        let unimodal: Vec<f64> = (0..2001).map(|i| ((i as f64 - 1000.0) / 400.0).tanh()).collect();
        let mut bimodal: Vec<f64> = (0..1000).map(|i| -5.0 + i as f64 * 1e-3).collect();
        bimodal.extend((0..1000).map(|i| 5.0 + i as f64 * 1e-3));
        let b = Summary::of(&bimodal).unwrap().bimodality_coefficient();
        let u = Summary::of(&unimodal).unwrap().bimodality_coefficient();
        assert!(b > 0.9, "{b}");
        assert!(u < b);
    }
}
