//! Per-run records and their grouped summaries.
//!
//! Quartiles use piecewise-linear interpolation between order statistics
//! placed at `(k - 0.5) / n` (Hyndman-Fan type 5), which gives `1.5` and `3.5`
//! for `[1, 2, 3, 4]`. Standard deviations use the `n - 1` denominator and
//! are zero for a single record.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::BenchError;

/// One scalar observation from one Monte Carlo run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub run: usize,
    pub seed: u64,
    /// Estimator or controller, e.g. `smm-tc` or `deepc`.
    pub method: String,
    /// Sweep point or scenario, e.g. `N=200` or `example2-unknown-past`.
    pub setting: String,
    pub metric: String,
    /// Position within a sequence metric (coefficient or time step); 0 for scalars.
    pub index: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub setting: String,
    pub metric: String,
    pub index: usize,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile of already sorted data by linear interpolation at `n p + 1/2`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let h = n as f64 * p + 0.5;
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Summary statistics of one group.
pub fn describe(values: &[f64]) -> Result<[f64; 7], BenchError> {
    if values.is_empty() {
        return Err(BenchError::EmptyGroup);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Ok([mean, std, v[0], quantile_sorted(&v, 0.25), quantile_sorted(&v, 0.5), quantile_sorted(&v, 0.75), v[v.len() - 1]])
}

/// Groups records by `(method, setting, metric, index)` in sorted key order.
pub fn aggregate(records: &[Record]) -> Result<Vec<SummaryRow>, BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyGroup);
    }
    let mut groups: BTreeMap<(&str, &str, &str, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.method, &r.setting, &r.metric, r.index)).or_default().push(r.value);
    }
    groups
        .into_iter()
        .map(|((method, setting, metric, index), values)| {
            let [mean, std, min, q1, median, q3, max] = describe(&values)?;
            Ok(SummaryRow {
                method: method.to_string(),
                setting: setting.to_string(),
                metric: metric.to_string(),
                index,
                count: values.len(),
                mean,
                std,
                min,
                q1,
                median,
                q3,
                max,
            })
        })
        .collect()
}

/// Looks up one summary row.
pub fn find<'a>(rows: &'a [SummaryRow], method: &str, setting: &str, metric: &str) -> Option<&'a SummaryRow> {
    rows.iter().find(|r| r.method == method && r.setting == setting && r.metric == metric && r.index == 0)
}
