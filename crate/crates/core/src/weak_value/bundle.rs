use std::io::Write;

use super::{ExperimentRecord, WeakValueError};
use crate::stats::{inversion_count, ks_statistic};

/// Trajectories sampled on a shared time axis; shorter ones end early.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBundle {
    pub times: Vec<f64>,
    /// (j, positions on `times[..len]`).
    pub paths: Vec<(u64, Vec<f64>)>,
}

impl TrajectoryBundle {
    /// Positions of every path that reaches time index `k`.
    pub fn positions_at(&self, k: usize) -> Vec<f64> {
        self.paths.iter().filter_map(|(_, p)| p.get(k).copied()).collect()
    }

    /// Index of the sample time closest to `t`.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        (0..self.times.len()).min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))
    }

    /// Largest number of pairs whose order differs from the initial order at any sample time.
    pub fn crossing_count(&self) -> u64 {
        let mut order: Vec<&(u64, Vec<f64>)> = self.paths.iter().filter(|(_, p)| !p.is_empty()).collect();
        order.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]));
        (0..self.times.len())
            .map(|k| {
                let at: Vec<f64> = order.iter().filter_map(|(_, p)| p.get(k).copied()).collect();
                inversion_count(&at)
            })
            .max()
            .unwrap_or(0)
    }

    /// KS distance between the positions at time index `k` and `cdf`.
    pub fn ks_at<F: Fn(f64) -> f64>(&self, k: usize, cdf: F) -> f64 {
        ks_statistic(&self.positions_at(k), cdf)
    }

    /// Number of paths within `half_width` of `x` at time index `k`.
    pub fn count_near(&self, k: usize, x: f64, half_width: f64) -> usize {
        self.positions_at(k).iter().filter(|p| (*p - x).abs() <= half_width).count()
    }

    /// Long format `j,t_s,x_m`.
    pub fn write_csv<W: Write>(&self, mut out: W, header_comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = header_comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "j,t_s,x_m")?;
        for (j, p) in &self.paths {
            for (t, x) in self.times.iter().zip(p) {
                writeln!(out, "{j},{t:e},{x:e}")?;
            }
        }
        Ok(())
    }
}

/// Collects the stored samples of every record onto the longest time axis.
pub fn reconstruct_trajectories(records: &[ExperimentRecord]) -> Result<TrajectoryBundle, WeakValueError> {
    if records.is_empty() {
        return Err(WeakValueError::NoRecords);
    }
    let times = records.iter().map(|r| &r.trajectory.times).max_by_key(|t| t.len()).cloned().unwrap_or_default();
    let paths = records
        .iter()
        .map(|r| {
            let n = r
                .trajectory
                .times
                .iter()
                .zip(&times)
                .take_while(|(a, b)| (*a - *b).abs() <= 1e-9 * b.abs().max(1e-18))
                .count();
            (r.seed, r.trajectory.positions[..n].to_vec())
        })
        .collect();
    Ok(TrajectoryBundle { times, paths })
}
