//! Saturation-histogram smoke classifiers.
//!
//! Smoke washes colors out, so smoky frames pile their HSV saturation mass
//! into the low bins. `SAN` thresholds the fraction of low-saturation mass,
//! `SPA` compares the number of histogram peaks below and above the
//! threshold `t_c`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{rgb_to_saturation, PlanarImage};

pub const SATURATION_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationHistogram {
    bins: Vec<u64>,
    total: u64,
}

impl SaturationHistogram {
    pub fn from_counts(bins: Vec<u64>) -> Result<Self> {
        if bins.len() != SATURATION_BINS {
            return Err(Error::invalid(format!(
                "expected {SATURATION_BINS} bins, got {}",
                bins.len()
            )));
        }
        let total = bins.iter().sum();
        Ok(Self { bins, total })
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bin_center(k: usize) -> f64 {
        (k as f64 + 0.5) / SATURATION_BINS as f64
    }

    fn require_mass(&self) -> Result<()> {
        if self.total == 0 {
            return Err(Error::invalid("empty saturation histogram"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatParams {
    /// Saturation threshold separating "washed out" from colorful bins.
    pub t_c: f64,
    /// Minimum peak prominence as a fraction of the smoothed histogram maximum.
    pub peak_min_prominence: f64,
    /// Moving-average radius in bins.
    pub smooth_radius: usize,
}

impl Default for SatParams {
    fn default() -> Self {
        Self {
            t_c: 0.35,
            peak_min_prominence: 0.05,
            smooth_radius: 2,
        }
    }
}

impl SatParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_c > 0.0 && self.t_c < 1.0) {
            return Err(Error::invalid(format!("t_c must be in (0, 1), got {}", self.t_c)));
        }
        if !(self.peak_min_prominence >= 0.0 && self.peak_min_prominence.is_finite()) {
            return Err(Error::invalid("peak_min_prominence must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SatMethod {
    San,
    Spa,
}

impl SatMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SatMethod::San => "san",
            SatMethod::Spa => "spa",
        }
    }

    pub fn classify(self, hist: &SaturationHistogram, params: &SatParams) -> Result<Classification> {
        match self {
            SatMethod::San => san_classify(hist, params),
            SatMethod::Spa => spa_classify(hist, params),
        }
    }
}

impl fmt::Display for SatMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SatMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "san" => Ok(SatMethod::San),
            "spa" => Ok(SatMethod::Spa),
            other => Err(Error::invalid(format!("unknown saturation method '{other}'"))),
        }
    }
}

/// Hard label (1 = smoke) plus a continuous score for ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: u8,
    pub score: f64,
}

/// 256-bin histogram; bin `k` covers `[k/256, (k+1)/256)`, the last bin is closed.
pub fn saturation_histogram(img: &PlanarImage) -> Result<SaturationHistogram> {
    let sat = rgb_to_saturation(img)?;
    let mut bins = vec![0u64; SATURATION_BINS];
    for &s in sat.data() {
        let k = ((s * SATURATION_BINS as f64) as usize).min(SATURATION_BINS - 1);
        bins[k] += 1;
    }
    SaturationHistogram::from_counts(bins)
}

/// Fraction of pixels in bins whose center lies below `t_c`.
fn low_fraction(hist: &SaturationHistogram, t_c: f64) -> f64 {
    let low: u64 = hist
        .bins
        .iter()
        .enumerate()
        .filter(|(k, _)| SaturationHistogram::bin_center(*k) < t_c)
        .map(|(_, c)| c)
        .sum();
    low as f64 / hist.total as f64
}

/// Smoke iff more than half of the saturation mass lies below `t_c`.
pub fn san_classify(hist: &SaturationHistogram, params: &SatParams) -> Result<Classification> {
    hist.require_mass()?;
    params.validate()?;
    let score = low_fraction(hist, params.t_c);
    Ok(Classification {
        label: u8::from(score > 0.5),
        score,
    })
}

/// Normalized histogram smoothed by a centered moving average; the window is
/// cut at both ends and averaged over the bins it covers.
pub fn smooth_histogram(hist: &SaturationHistogram, radius: usize) -> Vec<f64> {
    let total = hist.total.max(1) as f64;
    let n = hist.bins.len();
    (0..n)
        .map(|k| {
            let (lo, hi) = (k.saturating_sub(radius), (k + radius).min(n - 1));
            let sum: u64 = hist.bins[lo..=hi].iter().sum();
            sum as f64 / total / (hi - lo + 1) as f64
        })
        .collect()
}

/// Peaks of a 1-D signal as plateau-center indices.
///
/// A peak is a maximal run of equal values whose neighbours on both sides
/// (where they exist) are strictly lower. Its prominence is the height above
/// the higher of the two lowest points reached on each side before meeting a
/// strictly higher sample or the signal end. A plateau touching one end is
/// measured against the other side only.
pub fn find_peaks(signal: &[f64], min_prominence: f64) -> Vec<usize> {
    let n = signal.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && signal[j + 1] == signal[i] {
            j += 1;
        }
        let v = signal[i];
        let left_lower = i == 0 || signal[i - 1] < v;
        let right_lower = j + 1 == n || signal[j + 1] < v;
        if left_lower && right_lower {
            // Lowest point on each side before a higher sample; a side with
            // no samples at all does not constrain the base.
            let left = (i > 0).then(|| {
                signal[..i]
                    .iter()
                    .rev()
                    .take_while(|&&s| s <= v)
                    .fold(v, |m, &s| m.min(s))
            });
            let right = (j + 1 < n).then(|| {
                signal[j + 1..]
                    .iter()
                    .take_while(|&&s| s <= v)
                    .fold(v, |m, &s| m.min(s))
            });
            let base = match (left, right) {
                (Some(l), Some(r)) => Some(l.max(r)),
                (l, r) => l.or(r),
            };
            if let Some(base) = base {
                let prominence = v - base;
                if prominence > 0.0 && prominence >= min_prominence {
                    peaks.push((i + j) / 2);
                }
            }
        }
        i = j + 1;
    }
    peaks
}

/// Peak counts of the smoothed histogram on each side of `t_c`.
pub fn peak_counts(hist: &SaturationHistogram, params: &SatParams) -> (usize, usize) {
    let smooth = smooth_histogram(hist, params.smooth_radius);
    let max = smooth.iter().copied().fold(0.0, f64::max);
    let peaks = find_peaks(&smooth, params.peak_min_prominence * max);
    let below = peaks
        .iter()
        .filter(|&&k| SaturationHistogram::bin_center(k) < params.t_c)
        .count();
    (below, peaks.len() - below)
}

/// Smoke iff there is a peak below `t_c` and at least as many below as above.
pub fn spa_classify(hist: &SaturationHistogram, params: &SatParams) -> Result<Classification> {
    hist.require_mass()?;
    params.validate()?;
    let (below, above) = peak_counts(hist, params);
    let smoke = below >= 1 && below >= above;
    let score = below as f64 - above as f64 + 1e-3 * low_fraction(hist, params.t_c);
    Ok(Classification {
        label: u8::from(smoke),
        score,
    })
}
