use std::io::Write;

use serde::{Deserialize, Serialize};

use super::MeasurementError;
use crate::stats::{freedman_diaconis_width, Summary};

/// Sarle's coefficient above which a distribution is treated as multimodal.
pub const BIMODALITY_LIMIT: f64 = 5.0 / 9.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Binning {
    FreedmanDiaconis,
    Count(usize),
    Width(f64),
}

/// Histogram of pointer values at time `time`, keeping the raw samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointerDistribution {
    pub origin: f64,
    pub width: f64,
    pub counts: Vec<u64>,
    pub time: f64,
    samples: Vec<f64>,
}

impl PointerDistribution {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.width
    }

    pub fn density(&self, i: usize) -> f64 {
        self.counts[i] as f64 / (self.total() as f64 * self.width)
    }

    pub fn summary(&self) -> Summary {
        Summary::of(&self.samples).expect("distribution holds at least one sample")
    }

    pub fn mean(&self) -> f64 {
        self.summary().mean
    }

    pub fn variance(&self) -> f64 {
        self.summary().variance
    }

    /// Probability density at `value` (0 outside the histogram).
    pub fn density_at(&self, value: f64) -> f64 {
        let s = (value - self.origin) / self.width;
        if s < 0.0 || s >= self.counts.len() as f64 {
            return 0.0;
        }
        self.density(s as usize)
    }

    /// Merges a histogram built on the same bin lattice.
    pub fn merge(&mut self, other: &PointerDistribution) -> Result<(), MeasurementError> {
        let offset = (other.origin - self.origin) / self.width;
        if (other.width - self.width).abs() > 1e-12 * self.width || (offset - offset.round()).abs() > 1e-6 {
            return Err(MeasurementError::DegenerateBinWidth(other.width));
        }
        let shift = offset.round() as i64;
        let lo = shift.min(0);
        let hi = (self.counts.len() as i64).max(shift + other.counts.len() as i64);
        let mut counts = vec![0u64; (hi - lo) as usize];
        for (i, c) in self.counts.iter().enumerate() {
            counts[(i as i64 - lo) as usize] += c;
        }
        for (i, c) in other.counts.iter().enumerate() {
            counts[(i as i64 + shift - lo) as usize] += c;
        }
        self.origin += lo as f64 * self.width;
        self.counts = counts;
        self.samples.extend_from_slice(&other.samples);
        Ok(())
    }

    /// CSV with columns bin_center_A, count, probability_density.
    pub fn write_csv<W: Write>(&self, mut out: W, header_comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = header_comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "bin_center_A,count,probability_density")?;
        for i in 0..self.counts.len() {
            writeln!(out, "{:.9e},{},{:.9e}", self.bin_center(i), self.counts[i], self.density(i))?;
        }
        Ok(())
    }
}

/// Histogram of `values` on a lattice anchored at zero.
pub fn build_distribution(
    values: &[f64],
    binning: Binning,
    time: f64,
) -> Result<PointerDistribution, MeasurementError> {
    if values.is_empty() {
        return Err(MeasurementError::Empty);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(MeasurementError::DegenerateBinWidth(f64::NAN));
    }
    let width = if lo == hi {
        if lo == 0.0 {
            1.0
        } else {
            lo.abs() * 1e-6
        }
    } else {
        match binning {
            Binning::FreedmanDiaconis => freedman_diaconis_width(values).unwrap_or(0.0),
            Binning::Count(n) => (hi - lo) / n.max(1) as f64 * (1.0 + 1e-12),
            Binning::Width(w) => w,
        }
    };
    if !(width > 0.0) || !width.is_finite() {
        return Err(MeasurementError::DegenerateBinWidth(width));
    }
    let first = (lo / width).floor();
    let origin = first * width;
    let n = ((hi / width).floor() - first) as usize + 1;
    let mut counts = vec![0u64; n];
    for &v in values {
        let i = (((v / width).floor() - first) as usize).min(n - 1);
        counts[i] += 1;
    }
    Ok(PointerDistribution { origin, width, counts, time, samples: values.to_vec() })
}

/// Maximum-likelihood Gaussian fit of a pointer distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianFit {
    pub mean: f64,
    /// Standard deviation of the pointer values (A).
    pub sigma: f64,
    /// Same width converted to momentum, σ·mL_x/q (kg·m/s).
    pub sigma_momentum: f64,
    /// Width σ_w of the momentum Kraus operator producing this spread, √2·σ_momentum.
    pub kraus_width: f64,
    pub count: usize,
    pub bimodality: f64,
    pub excess_kurtosis: f64,
}

/// ML Gaussian fit; rejects distributions whose bimodality coefficient exceeds [`BIMODALITY_LIMIT`].
pub fn fit_gaussian_sigma(
    distribution: &PointerDistribution,
    mass: f64,
    device_length: f64,
    charge: f64,
) -> Result<GaussianFit, MeasurementError> {
    let s = distribution.summary();
    let b = s.bimodality_coefficient();
    if s.count >= 20 && b > BIMODALITY_LIMIT {
        return Err(MeasurementError::Multimodal(b));
    }
    let n = s.count as f64;
    let sigma = if s.count > 1 { (s.variance * (n - 1.0) / n).sqrt() } else { 0.0 };
    let sigma_momentum = sigma * mass * device_length / charge.abs();
    Ok(GaussianFit {
        mean: s.mean,
        sigma,
        sigma_momentum,
        kraus_width: std::f64::consts::SQRT_2 * sigma_momentum,
        count: s.count,
        bimodality: b,
        excess_kurtosis: s.excess_kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian(n: usize, mean: f64, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(mean, sigma).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn equal_samples_fill_one_bin() {
        let d = build_distribution(&[1e-7; 30], Binning::FreedmanDiaconis, 0.0).unwrap();
        assert_eq!(d.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(d.total(), 30);
    }

    #[test]
    fn histogram_is_normalized() {
        let v = gaussian(5000, 1e-7, 2e-7, 1);
        let d = build_distribution(&v, Binning::FreedmanDiaconis, 3e-13).unwrap();
        assert_eq!(d.total(), 5000);
        let integral: f64 = (0..d.counts.len()).map(|i| d.density(i) * d.width).sum();
        assert!((integral - 1.0).abs() < 1e-12);
        let with_count = build_distribution(&v, Binning::Count(40), 0.0).unwrap();
        assert!(with_count.counts.len() >= 40 && with_count.counts.len() <= 42);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(build_distribution(&[], Binning::FreedmanDiaconis, 0.0), Err(MeasurementError::Empty)));
        assert!(matches!(
            build_distribution(&[1.0, 2.0], Binning::Width(0.0), 0.0),
            Err(MeasurementError::DegenerateBinWidth(_))
        ));
    }

    #[test]
    fn synthetic_gaussian_round_trip() {
        let sigma = 1.7e-7;
        let v = gaussian(10_000, 1e-7, sigma, 2);
        let d = build_distribution(&v, Binning::FreedmanDiaconis, 0.0).unwrap();
        let fit = fit_gaussian_sigma(&d, ELECTRON_MASS, 280e-9, ELEMENTARY_CHARGE).unwrap();
        assert!((fit.sigma - sigma).abs() / sigma < 0.02);
        assert!((fit.sigma_momentum - fit.sigma * ELECTRON_MASS * 280e-9 / ELEMENTARY_CHARGE).abs() < 1e-40);
        assert!(fit.excess_kurtosis.abs() < 0.5);
    }

    #[test]
    fn two_peaks_are_rejected() {
        let mut v = gaussian(3000, -1.0, 0.1, 3);
        v.extend(gaussian(3000, 1.0, 0.1, 4));
        let d = build_distribution(&v, Binning::FreedmanDiaconis, 0.0).unwrap();
        assert!(matches!(fit_gaussian_sigma(&d, 1.0, 1.0, 1.0), Err(MeasurementError::Multimodal(_))));
    }

    #[test]
    fn merging_partial_histograms_is_order_independent() {
        let v = gaussian(3000, 0.0, 1.0, 5);
        let whole = build_distribution(&v, Binning::Width(0.25), 0.0).unwrap();
        let mut a = build_distribution(&v[..1000], Binning::Width(0.25), 0.0).unwrap();
        let b = build_distribution(&v[1000..2000], Binning::Width(0.25), 0.0).unwrap();
        let c = build_distribution(&v[2000..], Binning::Width(0.25), 0.0).unwrap();
        let mut c2 = c.clone();
        a.merge(&b).unwrap();
        a.merge(&c).unwrap();
        c2.merge(&b).unwrap();
        c2.merge(&build_distribution(&v[..1000], Binning::Width(0.25), 0.0).unwrap()).unwrap();
        let trim = |d: &PointerDistribution| {
            let first = d.counts.iter().position(|&c| c > 0).unwrap();
            let last = d.counts.iter().rposition(|&c| c > 0).unwrap();
            (d.origin + first as f64 * d.width, d.counts[first..=last].to_vec())
        };
        assert_eq!(trim(&a).1, trim(&whole).1);
        assert_eq!(trim(&c2).1, trim(&whole).1);
        assert!((trim(&a).0 - trim(&whole).0).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let d = build_distribution(&[1.0, 2.0, 2.5], Binning::Width(1.0), 0.0).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, Some("config 00ff")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# config 00ff");
        assert_eq!(lines[1], "bin_center_A,count,probability_density");
        assert_eq!(lines.len(), 2 + d.counts.len());
    }
}
