//! Correlation statistics for benchmarking predictions against opinion scores.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VdpError};

/// One benchmarked item: predicted score and mean opinion score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub content_id: String,
    pub predicted: f64,
    pub mos: f64,
}

fn columns(rows: &[BenchmarkRow]) -> Result<(Vec<f64>, Vec<f64>)> {
    if rows.len() < 2 {
        return Err(VdpError::InsufficientData(format!(
            "correlation needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    if let Some(r) = rows.iter().find(|r| !(r.predicted.is_finite() && r.mos.is_finite())) {
        return Err(VdpError::Numeric(format!("non-finite value in row `{}`", r.content_id)));
    }
    Ok(rows.iter().map(|r| (r.predicted, r.mos)).unzip())
}

/// Ranks starting at 1; tied values share the average of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of two equally long samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(VdpError::DimensionMismatch(format!(
            "{} vs {} samples",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(VdpError::InsufficientData(
            "correlation needs at least 2 samples".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(VdpError::ZeroVariance("first sample"));
    }
    if syy == 0.0 {
        return Err(VdpError::ZeroVariance("second sample"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank-order correlation of two equally long samples.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Spearman rank-order correlation between predictions and opinion scores.
pub fn srocc(rows: &[BenchmarkRow]) -> Result<f64> {
    let (p, m) = columns(rows)?;
    spearman(&p, &m)
}

/// Pearson linear correlation between predictions and opinion scores.
pub fn plcc(rows: &[BenchmarkRow]) -> Result<f64> {
    let (p, m) = columns(rows)?;
    pearson(&p, &m).map_err(|e| match e {
        VdpError::ZeroVariance("first sample") => VdpError::ZeroVariance("predicted scores"),
        VdpError::ZeroVariance(_) => VdpError::ZeroVariance("opinion scores"),
        other => other,
    })
}
