//! Cycle-comparison event detectors and post-trigger capture.
//!
//! Both detectors compare the sum of absolute samples over the cycle
//! ending at sample `t + n_c − 1` with the sum over the preceding cycle.
//! The ED index divides the change by the current-cycle sum; the CDF index
//! divides it by the trailing-cycle sum. Either way the index is a ratio of
//! like sums and therefore independent of units and scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{Phase, ThreePhaseRecord};

fn default_alpha() -> f64 {
    0.05
}
fn default_pre() -> f64 {
    0.5
}
fn default_post() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// ED trigger threshold.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Threshold on the normalized CDF index.
    #[serde(default = "default_alpha")]
    pub th: f64,
    #[serde(default = "default_pre")]
    pub pre_cycles: f64,
    #[serde(default = "default_post")]
    pub post_cycles: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            th: 0.05,
            pre_cycles: 0.5,
            post_cycles: 1.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha must be positive"));
        }
        if !(self.th > 0.0 && self.th.is_finite()) {
            return Err(Error::invalid("th must be positive"));
        }
        if !(self.pre_cycles >= 0.0 && self.pre_cycles.is_finite()) {
            return Err(Error::invalid("pre_cycles must be non-negative"));
        }
        if !(self.post_cycles >= 1.0 && self.post_cycles.is_finite()) {
            return Err(Error::invalid("post_cycles must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub triggered: bool,
    pub trigger_index: Option<usize>,
    pub trigger_phase: Option<Phase>,
    /// Sample index of `index_trace[p][0]`; entry k belongs to the cycle
    /// ending at `trace_origin + k`.
    pub trace_origin: usize,
    pub index_trace: [Vec<f64>; 3],
    /// Unnormalized difference of cycle sums (CDF scan only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_trace: Option<[Vec<f64>; 3]>,
}

/// Sliding cycle sums: returns (S_prev, S_cur) for every t in n..=len−n.
fn cycle_sums(x: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    // prefix sums keep the sliding window free of accumulated drift
    let mut prefix = Vec::with_capacity(abs.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in &abs {
        acc += v;
        prefix.push(acc);
    }
    let count = x.len() + 1 - 2 * n;
    let mut prev = Vec::with_capacity(count);
    let mut cur = Vec::with_capacity(count);
    for t in n..=x.len() - n {
        prev.push(prefix[t] - prefix[t - n]);
        cur.push(prefix[t + n] - prefix[t]);
    }
    (prev, cur)
}

fn guard_eps(record: &ThreePhaseRecord) -> f64 {
    (1e-12 * record.max_abs()).max(1e-30)
}

fn check_length(record: &ThreePhaseRecord) -> Result<usize> {
    let n = record.sampling().samples_per_cycle();
    if record.len() < 2 * n {
        return Err(Error::invalid(format!(
            "record of {} samples is shorter than two cycles ({})",
            record.len(),
            2 * n
        )));
    }
    Ok(n)
}

fn first_trigger(
    traces: &[Vec<f64>; 3],
    threshold: f64,
    origin: usize,
    lookahead: usize,
    len: usize,
) -> (Option<usize>, Option<Phase>) {
    for k in 0..traces[0].len() {
        // phases are checked in a, b, c order so ties resolve to the earliest
        for p in Phase::ALL {
            if traces[p.index()][k] >= threshold {
                let idx = origin + k;
                if idx + lookahead > len {
                    return (None, None);
                }
                return (Some(idx), Some(p));
            }
        }
    }
    (None, None)
}

/// ED(t) = (S_cur − S_prev) / S_cur per phase.
pub fn ed_scan(record: &ThreePhaseRecord, cfg: &DetectorConfig) -> Result<DetectionResult> {
    cfg.validate()?;
    let n = check_length(record)?;
    let eps = guard_eps(record);
    let index_trace = [0, 1, 2].map(|p| {
        let (prev, cur) = cycle_sums(&record.phases()[p], n);
        prev.iter()
            .zip(&cur)
            .map(|(&sp, &sc)| if sc < eps { 0.0 } else { (sc - sp) / sc })
            .collect::<Vec<_>>()
    });
    let origin = 2 * n - 1;
    let lookahead = record.sampling().cycles_to_samples(cfg.post_cycles);
    let (trigger_index, trigger_phase) = first_trigger(&index_trace, cfg.alpha, origin, lookahead, record.len());
    Ok(DetectionResult {
        triggered: trigger_index.is_some(),
        trigger_index,
        trigger_phase,
        trace_origin: origin,
        index_trace,
        raw_trace: None,
    })
}

/// CDF(t) = S_cur − S_prev, normalized by max(S_prev, ε) before thresholding.
pub fn cdf_scan(record: &ThreePhaseRecord, cfg: &DetectorConfig) -> Result<DetectionResult> {
    cfg.validate()?;
    let n = check_length(record)?;
    let eps = guard_eps(record);
    let mut raw: [Vec<f64>; 3] = Default::default();
    let mut norm: [Vec<f64>; 3] = Default::default();
    for p in 0..3 {
        let (prev, cur) = cycle_sums(&record.phases()[p], n);
        raw[p] = prev.iter().zip(&cur).map(|(sp, sc)| sc - sp).collect();
        norm[p] = prev
            .iter()
            .zip(&raw[p])
            .map(|(&sp, &d)| if d.abs() < eps { 0.0 } else { d / sp.max(eps) })
            .collect();
    }
    let origin = 2 * n - 1;
    let lookahead = record.sampling().cycles_to_samples(cfg.post_cycles);
    let (trigger_index, trigger_phase) = first_trigger(&norm, cfg.th, origin, lookahead, record.len());
    Ok(DetectionResult {
        triggered: trigger_index.is_some(),
        trigger_index,
        trigger_phase,
        trace_origin: origin,
        index_trace: norm,
        raw_trace: Some(raw),
    })
}

/// Window of `floor((pre + post)·n_c)` samples starting `floor(pre·n_c)`
/// samples before `trigger_index`.
pub fn capture_at(record: &ThreePhaseRecord, trigger_index: usize, pre_cycles: f64, post_cycles: f64) -> Result<ThreePhaseRecord> {
    if !(pre_cycles >= 0.0 && post_cycles > 0.0) {
        return Err(Error::invalid("capture needs pre >= 0 and post > 0 cycles"));
    }
    let s = record.sampling();
    let pre = s.cycles_to_samples(pre_cycles);
    let total = s.cycles_to_samples(pre_cycles + post_cycles);
    if trigger_index < pre {
        return Err(Error::OutOfRange(format!(
            "trigger at sample {trigger_index} leaves fewer than {pre} pre-trigger samples"
        )));
    }
    let start = trigger_index - pre;
    if start + total > record.len() {
        return Err(Error::OutOfRange(format!(
            "capture [{start}, {}) exceeds record length {}",
            start + total,
            record.len()
        )));
    }
    record.window(start, total)
}

pub fn capture(record: &ThreePhaseRecord, det: &DetectionResult, cfg: &DetectorConfig) -> Result<ThreePhaseRecord> {
    cfg.validate()?;
    let idx = match (det.triggered, det.trigger_index) {
        (true, Some(i)) => i,
        _ => return Err(Error::invalid("capture requires a triggered detection")),
    };
    capture_at(record, idx, cfg.pre_cycles, cfg.post_cycles)
}
