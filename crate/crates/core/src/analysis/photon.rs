use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum number of windows for a Fano estimate.
pub const MIN_WINDOWS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FanoEstimate {
    pub value: f64,
    /// Jackknife standard error.
    pub stderr: f64,
    pub windows: usize,
    pub mean: f64,
}

fn fano(xs: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let (n, s) = xs.clone().fold((0.0, 0.0), |(n, s), x| (n + 1.0, s + x));
    let mean = s / n;
    if mean == 0.0 {
        return None;
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Some(var / mean)
}

/// Variance-to-mean ratio of window counts; `Ok(None)` when the mean is 0.
pub fn fano_factor(counts: &[u64]) -> Result<Option<FanoEstimate>> {
    let n = counts.len();
    if n < MIN_WINDOWS {
        return Err(Error::invalid(format!(
            "Fano factor needs ≥ {MIN_WINDOWS} windows, got {n}"
        )));
    }
    let xs = counts.iter().map(|&c| c as f64);
    let Some(value) = fano(xs.clone()) else {
        return Ok(None);
    };
    let loo: Vec<f64> = (0..n)
        .map(|k| {
            let it = counts
                .iter()
                .enumerate()
                .filter(move |(i, _)| *i != k)
                .map(|(_, &c)| c as f64);
            fano(it).unwrap_or(0.0)
        })
        .collect();
    let mbar = loo.iter().sum::<f64>() / n as f64;
    let ss: f64 = loo.iter().map(|f| (f - mbar) * (f - mbar)).sum();
    Ok(Some(FanoEstimate {
        value,
        stderr: ((n as f64 - 1.0) / n as f64 * ss).sqrt(),
        windows: n,
        mean: xs.sum::<f64>() / n as f64,
    }))
}
