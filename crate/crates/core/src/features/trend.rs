//! Per-chunk least-squares trends with aggregation across chunks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendAttr {
    Slope,
    Intercept,
    /// Standard error of the slope estimate.
    Stderr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendAgg {
    Mean,
    Min,
    Max,
    Var,
}

impl TrendAttr {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendAttr::Slope => "slope",
            TrendAttr::Intercept => "intercept",
            TrendAttr::Stderr => "stderr",
        }
    }
}

impl TrendAgg {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendAgg::Mean => "mean",
            TrendAgg::Min => "min",
            TrendAgg::Max => "max",
            TrendAgg::Var => "var",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Least-squares line through (k, y_k) for k = 0..len.
pub fn fit_line(y: &[f64]) -> LineFit {
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (k, &v) in y.iter().enumerate() {
        let dx = k as f64 - xm;
        sxx += dx * dx;
        sxy += dx * (v - ym);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = ym - slope * xm;
    let stderr = if y.len() > 2 && sxx > 0.0 {
        let sse: f64 = y
            .iter()
            .enumerate()
            .map(|(k, &v)| (v - intercept - slope * k as f64).powi(2))
            .sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        stderr,
    }
}

/// Fits a line to each full chunk of `chunk_len` samples (local index
/// 0..chunk_len) and aggregates the chosen attribute across chunks.
pub fn linear_trend(signal: &[f64], chunk_len: usize, attr: TrendAttr, agg: TrendAgg) -> Result<f64> {
    if chunk_len < 2 {
        return Err(Error::invalid("chunk_len must be at least 2"));
    }
    if signal.len() < chunk_len {
        return Err(Error::invalid(format!(
            "signal of {} samples shorter than one chunk ({chunk_len})",
            signal.len()
        )));
    }
    let vals: Vec<f64> = signal
        .chunks_exact(chunk_len)
        .map(|c| {
            let f = fit_line(c);
            match attr {
                TrendAttr::Slope => f.slope,
                TrendAttr::Intercept => f.intercept,
                TrendAttr::Stderr => f.stderr,
            }
        })
        .collect();
    let n = vals.len() as f64;
    Ok(match agg {
        TrendAgg::Mean => vals.iter().sum::<f64>() / n,
        TrendAgg::Min => vals.iter().cloned().fold(f64::INFINITY, f64::min),
        TrendAgg::Max => vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        TrendAgg::Var => {
            let m = vals.iter().sum::<f64>() / n;
            vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        }
    })
}
