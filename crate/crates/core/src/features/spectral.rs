//! DFT coefficients and Welch power spectral density.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// X(k) = Σ x_t·e^{−j2πkt/n} for k = 0..=⌊n/2⌋.
pub fn fft_coefficients(signal: &[f64]) -> Result<Vec<Complex64>> {
    let n = signal.len();
    if n == 0 {
        return Err(Error::invalid("empty signal"));
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    Ok(buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    /// Periodic (DFT-even) window of length n.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; n],
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelchConfig {
    pub segment_len: usize,
    pub overlap_fraction: f64,
    #[serde(default)]
    pub window: WindowKind,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_len: 64,
            overlap_fraction: 0.5,
            window: WindowKind::Hann,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchSpectrum {
    pub freqs: Vec<f64>,
    /// One-sided power spectral density, units²/Hz.
    pub psd: Vec<f64>,
    pub segments: usize,
}

impl WelchSpectrum {
    /// ∫ PSD df, the total power represented by the estimate.
    pub fn total_power(&self) -> f64 {
        let df = if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        };
        self.psd.iter().sum::<f64>() * df
    }
}

/// Averaged periodogram of windowed, overlapping segments. Segments are
/// not detrended, so the mean of the signal stays in the low bins.
pub fn welch_density(signal: &[f64], sample_rate_hz: f64, cfg: &WelchConfig) -> Result<WelchSpectrum> {
    let seg = cfg.segment_len;
    if seg < 2 {
        return Err(Error::invalid("Welch segment length must be at least 2"));
    }
    if seg > signal.len() {
        return Err(Error::invalid(format!(
            "Welch segment of {seg} samples longer than signal ({})",
            signal.len()
        )));
    }
    if !(0.0..1.0).contains(&cfg.overlap_fraction) {
        return Err(Error::invalid("overlap_fraction must lie in [0, 1)"));
    }
    if !(sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let overlap = (seg as f64 * cfg.overlap_fraction).floor() as usize;
    let step = seg - overlap;
    let win = cfg.window.coefficients(seg);
    let scale = 1.0 / (sample_rate_hz * win.iter().map(|w| w * w).sum::<f64>());
    let fft = FftPlanner::new().plan_fft_forward(seg);
    let bins = seg / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut segments = 0;
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    let mut start = 0;
    while start + seg <= signal.len() {
        for (b, (x, w)) in buf.iter_mut().zip(signal[start..start + seg].iter().zip(&win)) {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in psd.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    for (k, p) in psd.iter_mut().enumerate() {
        *p *= scale / segments as f64;
        let nyquist = seg % 2 == 0 && k == seg / 2;
        if k != 0 && !nyquist {
            *p *= 2.0;
        }
    }
    let freqs = (0..bins).map(|k| k as f64 * sample_rate_hz / seg as f64).collect();
    Ok(WelchSpectrum {
        freqs,
        psd,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fft_examples() {
        let x = fft_coefficients(&[2.5; 8]).unwrap();
        assert_eq!(x.len(), 5);
        assert!((x[0].re - 20.0).abs() < 1e-12);
        assert!(x[1..].iter().all(|c| c.norm() < 1e-12));

        let mut imp = vec![0.0; 9];
        imp[0] = 1.0;
        assert!(fft_coefficients(&imp).unwrap().iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-12));

        let cos: Vec<f64> = (0..64).map(|t| (2.0 * PI * 3.0 * t as f64 / 64.0).cos()).collect();
        let x = fft_coefficients(&cos).unwrap();
        for (k, c) in x.iter().enumerate() {
            if k == 3 {
                assert!((c.norm() - 32.0).abs() < 1e-9);
            } else {
                assert!(c.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn welch_constant_is_dc_only() {
        let rect = WelchConfig {
            window: WindowKind::Rectangular,
            ..WelchConfig::default()
        };
        let s = welch_density(&[3.0; 256], 1000.0, &rect).unwrap();
        assert!(s.psd[0] > 0.0);
        assert!(s.psd[1..].iter().all(|&p| p < 1e-20 * s.psd[0]));
        assert!((s.total_power() - 9.0).abs() < 1e-9);

        // the Hann window's own spectrum spreads DC into bin 1 and no further
        let s = welch_density(&[3.0; 256], 1000.0, &WelchConfig::default()).unwrap();
        assert!(s.psd[0] > s.psd[1]);
        assert!(s.psd[2..].iter().all(|&p| p < 1e-20 * s.psd[0]));
        assert!((s.total_power() - 9.0).abs() < 1e-9);
    }

    #[test]
    fn welch_peak_at_bin_centre() {
        let fs = 6400.0;
        let f0 = 600.0; // bin 6 at 100 Hz resolution
        let x: Vec<f64> = (0..640).map(|i| (2.0 * PI * f0 * i as f64 / fs).sin()).collect();
        let s = welch_density(&x, fs, &WelchConfig::default()).unwrap();
        let arg = s.psd.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(s.freqs[arg], f0);
        assert!((s.total_power() - 0.5).abs() < 0.025);
    }

    #[test]
    fn welch_rejects_long_segment() {
        assert!(welch_density(&[1.0; 10], 100.0, &WelchConfig::default()).is_err());
    }
}
