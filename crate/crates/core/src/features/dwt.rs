//! Multilevel discrete wavelet transform with coefficient-exact
//! compatibility with the common `symmetric` and `periodization` modes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::filters::{FilterBankData, FILTER_BANKS};
use crate::error::{Error, Result};

/// Longest supported filter (coif5).
pub const MAX_FILTER_LEN: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletFamily {
    Daubechies,
    Symlet,
    Coiflet,
    Biorthogonal,
    ReverseBiorthogonal,
}

impl WaveletFamily {
    fn prefix(self) -> &'static str {
        match self {
            WaveletFamily::Daubechies => "db",
            WaveletFamily::Symlet => "sym",
            WaveletFamily::Coiflet => "coif",
            WaveletFamily::Biorthogonal => "bior",
            WaveletFamily::ReverseBiorthogonal => "rbio",
        }
    }

    pub fn is_orthogonal(self) -> bool {
        matches!(
            self,
            WaveletFamily::Daubechies | WaveletFamily::Symlet | WaveletFamily::Coiflet
        )
    }
}

/// Boundary handling for the analysis filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionMode {
    /// Half-point symmetric extension; coefficient count grows by the filter
    /// length at every level.
    #[default]
    Symmetric,
    /// Periodic extension with exactly ceil(n/2) coefficients per level.
    Periodization,
}

/// A named wavelet and decomposition depth, e.g. `db4` at level 4.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    /// Family designator such as "4" or "2.2".
    pub order: String,
    pub level: usize,
}

impl WaveletSpec {
    pub fn new(family: WaveletFamily, order: impl Into<String>, level: usize) -> Result<Self> {
        let spec = Self {
            family,
            order: order.into(),
            level,
        };
        spec.filter_bank()?;
        if level == 0 {
            return Err(Error::invalid("wavelet level must be at least 1"));
        }
        Ok(spec)
    }

    /// Parses short names such as `db4`, `sym10`, `rbio3.1`.
    pub fn from_name(name: &str, level: usize) -> Result<Self> {
        let family = [
            WaveletFamily::Daubechies,
            WaveletFamily::Symlet,
            WaveletFamily::Coiflet,
            WaveletFamily::Biorthogonal,
            WaveletFamily::ReverseBiorthogonal,
        ]
        .into_iter()
        .find(|f| {
            name.strip_prefix(f.prefix())
                .is_some_and(|rest| rest.starts_with(|c: char| c.is_ascii_digit()))
        })
        .ok_or_else(|| Error::invalid(format!("unknown wavelet '{name}'")))?;
        Self::new(family, &name[family.prefix().len()..], level)
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.family.prefix(), self.order)
    }

    pub fn filter_bank(&self) -> Result<FilterBank> {
        FilterBank::by_name(&self.name())
    }
}

impl fmt::Display for WaveletSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name(), self.level)
    }
}

/// Analysis and synthesis filters of one wavelet.
#[derive(Debug, Clone, Copy)]
pub struct FilterBank {
    data: &'static FilterBankData,
}

impl FilterBank {
    pub fn by_name(name: &str) -> Result<Self> {
        FILTER_BANKS
            .iter()
            .find(|b| b.name == name)
            .map(|data| FilterBank { data })
            .ok_or_else(|| Error::invalid(format!("unsupported wavelet '{name}'")))
    }

    pub fn names() -> impl Iterator<Item = &'static str> {
        FILTER_BANKS.iter().map(|b| b.name)
    }

    pub fn name(&self) -> &'static str {
        self.data.name
    }

    pub fn len(&self) -> usize {
        self.data.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dec_lo(&self) -> &'static [f64] {
        self.data.dec_lo
    }

    pub fn dec_hi(&self) -> &'static [f64] {
        self.data.dec_hi
    }

    pub fn rec_lo(&self) -> &'static [f64] {
        self.data.rec_lo
    }

    pub fn rec_hi(&self) -> &'static [f64] {
        self.data.rec_hi
    }
}

impl FromStr for FilterBank {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FilterBank::by_name(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub approx: Vec<f64>,
    /// `details[l]` holds the level-(l+1) detail coefficients.
    pub details: Vec<Vec<f64>>,
    /// Length of the input at every level, deepest last; used for inversion.
    pub lengths: Vec<usize>,
    pub mode: ExtensionMode,
}

/// floor(log2(signal_len / (filter_len − 1))).
pub fn max_level(signal_len: usize, filter_len: usize) -> Result<usize> {
    if filter_len < 2 {
        return Err(Error::invalid("filter length must be at least 2"));
    }
    if signal_len < filter_len {
        return Err(Error::invalid(format!(
            "signal length {signal_len} shorter than filter length {filter_len}"
        )));
    }
    // integer form of the logarithm avoids rounding at exact powers of two
    let ratio = signal_len / (filter_len - 1);
    Ok(usize::BITS as usize - 1 - ratio.leading_zeros() as usize)
}

#[inline]
fn sym_index(k: isize, n: usize) -> usize {
    let n2 = 2 * n as isize;
    let k = if k < 0 { -k - 1 } else { k };
    let k = k.rem_euclid(n2) as usize;
    if k < n {
        k
    } else {
        2 * n - 1 - k
    }
}

fn analysis_symmetric(x: &[f64], bank: &FilterBank) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let f = bank.len();
    let out = (n + f - 1) / 2;
    let (lo, hi) = (bank.dec_lo(), bank.dec_hi());
    let mut a = Vec::with_capacity(out);
    let mut d = Vec::with_capacity(out);
    for o in 0..out {
        let centre = 1 + 2 * o as isize;
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..f {
            let v = x[sym_index(centre - j as isize, n)];
            sa += lo[j] * v;
            sd += hi[j] * v;
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

fn synthesis_symmetric(a: &[f64], d: &[f64], bank: &FilterBank) -> Vec<f64> {
    let n = a.len();
    let f = bank.len();
    let out = (2 * n + 2).saturating_sub(f);
    let (rlo, rhi) = (bank.rec_lo(), bank.rec_hi());
    let mut y = vec![0.0; out];
    for (o, yo) in y.iter_mut().enumerate() {
        let m = o + f - 2;
        // coefficients i with 0 <= m - 2i < f
        let i_min = (m + 1).saturating_sub(f).div_ceil(2);
        let i_max = (m / 2).min(n - 1);
        let mut s = 0.0;
        for i in i_min..=i_max {
            let k = m - 2 * i;
            s += a[i] * rlo[k] + d[i] * rhi[k];
        }
        *yo = s;
    }
    y
}

fn analysis_periodic(x: &[f64], bank: &FilterBank) -> (Vec<f64>, Vec<f64>) {
    let mut ext = x.to_vec();
    if ext.len() % 2 == 1 {
        ext.push(*x.last().expect("non-empty"));
    }
    let n = ext.len();
    let f = bank.len();
    let (lo, hi) = (bank.dec_lo(), bank.dec_hi());
    let shift = (f / 2) as isize;
    let mut a = Vec::with_capacity(n / 2);
    let mut d = Vec::with_capacity(n / 2);
    for o in 0..n / 2 {
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..f {
            let idx = (2 * o as isize + shift - j as isize).rem_euclid(n as isize) as usize;
            sa += lo[j] * ext[idx];
            sd += hi[j] * ext[idx];
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

fn synthesis_periodic(a: &[f64], d: &[f64], bank: &FilterBank) -> Vec<f64> {
    let n = 2 * a.len();
    let f = bank.len();
    let (rlo, rhi) = (bank.rec_lo(), bank.rec_hi());
    let shift = (f / 2) as isize;
    let mut y = vec![0.0; n];
    // adjoint of the analysis step with the synthesis filters
    for o in 0..a.len() {
        for k in 0..f {
            let j = f - 1 - k;
            let idx = (2 * o as isize + shift - j as isize).rem_euclid(n as isize) as usize;
            y[idx] += a[o] * rlo[k] + d[o] * rhi[k];
        }
    }
    y
}

/// Multilevel decomposition; `details[l]` are level-(l+1) coefficients.
pub fn dwt(signal: &[f64], spec: &WaveletSpec, mode: ExtensionMode) -> Result<Decomposition> {
    let bank = spec.filter_bank()?;
    if signal.len() < bank.len() {
        return Err(Error::invalid(format!(
            "signal length {} shorter than {} filter length {}",
            signal.len(),
            spec.name(),
            bank.len()
        )));
    }
    let ml = max_level(signal.len(), bank.len())?;
    if spec.level == 0 || spec.level > ml {
        return Err(Error::OutOfRange(format!(
            "level {} exceeds max level {ml} for {} on {} samples",
            spec.level,
            spec.name(),
            signal.len()
        )));
    }
    dwt_unchecked(signal, &bank, spec.level, mode)
}

/// Decomposition with an explicit filter bank and no level cap.
pub fn dwt_unchecked(signal: &[f64], bank: &FilterBank, level: usize, mode: ExtensionMode) -> Result<Decomposition> {
    if signal.is_empty() {
        return Err(Error::invalid("empty signal"));
    }
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(level);
    let mut lengths = Vec::with_capacity(level);
    for _ in 0..level {
        lengths.push(approx.len());
        let (a, d) = match mode {
            ExtensionMode::Symmetric => analysis_symmetric(&approx, bank),
            ExtensionMode::Periodization => analysis_periodic(&approx, bank),
        };
        approx = a;
        details.push(d);
    }
    Ok(Decomposition {
        approx,
        details,
        lengths,
        mode,
    })
}

/// Inverse of [`dwt`]; returns a signal of the original length.
pub fn idwt(dec: &Decomposition, bank: &FilterBank) -> Result<Vec<f64>> {
    let mut a = dec.approx.clone();
    for (lvl, d) in dec.details.iter().enumerate().rev() {
        if a.len() != d.len() {
            return Err(Error::invalid("approximation and detail lengths differ"));
        }
        let mut y = match dec.mode {
            ExtensionMode::Symmetric => synthesis_symmetric(&a, d, bank),
            ExtensionMode::Periodization => synthesis_periodic(&a, d, bank),
        };
        let target = dec.lengths[lvl];
        if y.len() < target {
            return Err(Error::invalid("coefficients too short to reconstruct"));
        }
        y.truncate(target);
        a = y;
    }
    Ok(a)
}

/// Σ d(k)².
pub fn wavelet_energy(detail: &[f64]) -> f64 {
    detail.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_level_examples() {
        assert_eq!(max_level(167, 8).unwrap(), 4);
        assert_eq!(max_level(167, 2).unwrap(), 7);
        assert_eq!(max_level(16, 2).unwrap(), 4);
        assert!(max_level(7, 8).is_err());
        assert!(max_level(10, 1).is_err());
    }

    #[test]
    fn registry_is_complete() {
        assert_eq!(FilterBank::names().count(), 36);
        assert!(FilterBank::names().all(|n| FilterBank::by_name(n).unwrap().len() <= MAX_FILTER_LEN));
        assert_eq!(FilterBank::by_name("db4").unwrap().len(), 8);
        assert!(FilterBank::by_name("dmey").is_err());
    }

    #[test]
    fn names_parse() {
        let s = WaveletSpec::from_name("rbio3.1", 2).unwrap();
        assert_eq!(s.family, WaveletFamily::ReverseBiorthogonal);
        assert_eq!(s.name(), "rbio3.1");
        assert_eq!(WaveletSpec::from_name("sym10", 1).unwrap().family, WaveletFamily::Symlet);
        assert!(WaveletSpec::from_name("haar", 1).is_err());
    }

    #[test]
    fn haar_detail_of_constant_is_zero() {
        let spec = WaveletSpec::from_name("db1", 1).unwrap();
        let dec = dwt(&[3.0; 16], &spec, ExtensionMode::Symmetric).unwrap();
        assert!(dec.details[0].iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn haar_alternating_energy() {
        let x: Vec<f64> = (0..32).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let spec = WaveletSpec::from_name("db1", 1).unwrap();
        let dec = dwt(&x, &spec, ExtensionMode::Symmetric).unwrap();
        assert!((wavelet_energy(&dec.details[0]) - 32.0).abs() < 1e-12);
        assert_eq!(wavelet_energy(&[3.0, 4.0]), 25.0);
        assert_eq!(wavelet_energy(&[0.0; 5]), 0.0);
    }

    #[test]
    fn level_above_max_rejected() {
        let spec = WaveletSpec::from_name("db4", 5).unwrap();
        assert!(dwt(&[1.0; 167], &spec, ExtensionMode::Symmetric).is_err());
    }

    #[test]
    fn matches_reference_coefficients() {
        // known reference output for this input (symmetric db2,
        // periodized bior3.1)
        let x = [1.0, 4.0, -2.0, 3.0, 0.5, 2.0, -1.0];
        let db2 = WaveletSpec::from_name("db2", 1).unwrap();
        let dec = dwt(&x, &db2, ExtensionMode::Symmetric).unwrap();
        let a = [2.4748737341529163, 2.9925118243579583, 1.3968759738428416, 1.81977971855713, -0.9358962420739455];
        let d = [-1.8371173070873834, -4.1479063416285324, -0.9612802334436839, -0.8665458879529307, 1.7851045414966225];
        for (u, v) in dec.approx.iter().zip(&a).chain(dec.details[0].iter().zip(&d)) {
            assert!((u - v).abs() < 1e-13);
        }
        let back = idwt(&dec, &db2.filter_bank().unwrap()).unwrap();
        for (u, v) in back.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }

        let b31 = WaveletSpec::from_name("bior3.1", 1).unwrap();
        let dec = dwt_unchecked(&x, &b31.filter_bank().unwrap(), 1, ExtensionMode::Periodization).unwrap();
        let a = [6.363961030678928, -0.5303300858899107, 1.9445436482630054, -3.1819805153394634];
        let d = [1.7677669529663689, 3.270368862987782, 1.5026019100214136, 0.17677669529663692];
        for (u, v) in dec.approx.iter().zip(&a).chain(dec.details[0].iter().zip(&d)) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}
