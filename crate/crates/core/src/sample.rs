use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a sample came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Catalog density id, or `None` for external data.
    pub density: Option<u32>,
    pub seed: Option<u64>,
    pub replicate: Option<u64>,
}

/// Real observations in draw order, at least two and all finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_provenance(values, Provenance::default())
    }

    pub fn with_provenance(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(format!("a sample needs at least 2 values, got {}", values.len())));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite observation {bad}")));
        }
        Ok(Sample { values, provenance })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Standard deviation with the n − 1 divisor.
    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (self.len() - 1) as f64).sqrt()
    }

    /// Interquartile range with linear interpolation between order statistics.
    pub fn iqr(&self) -> f64 {
        let s = self.sorted();
        quantile(&s, 0.75) - quantile(&s, 0.25)
    }

    pub fn range(&self) -> f64 {
        let s = self.sorted();
        s[s.len() - 1] - s[0]
    }

    /// Smallest strictly positive gap between order statistics, if any.
    pub fn min_gap(&self) -> Option<f64> {
        self.sorted().windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).reduce(f64::min)
    }

    pub fn has_ties(&self) -> bool {
        self.sorted().windows(2).any(|w| w[1] == w[0])
    }

    /// Error unless at least two distinct values are present.
    pub fn require_spread(&self) -> Result<()> {
        if self.min_gap().is_none() {
            Err(Error::DegenerateSample(format!("all {} observations are identical", self.len())))
        } else {
            Ok(())
        }
    }

    /// The sample a·X + b.
    pub fn affine(&self, a: f64, b: f64) -> Sample {
        Sample { values: self.values.iter().map(|v| a * v + b).collect(), provenance: self.provenance.clone() }
    }

    /// FNV-1a over the IEEE bit patterns, in draw order.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.values {
            for byte in v.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Angles reduced to [0, 2π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularSample {
    angles: Vec<f64>,
}

impl CircularSample {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.len() < 2 {
            return Err(Error::InvalidArgument(format!("a sample needs at least 2 angles, got {}", angles.len())));
        }
        if let Some(bad) = angles.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite angle {bad}")));
        }
        let tau = std::f64::consts::TAU;
        let angles = angles
            .into_iter()
            .map(|a| {
                let r = a.rem_euclid(tau);
                if r >= tau {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        Ok(CircularSample { angles })
    }

    /// Accepts only angles already in [0, 2π).
    pub fn strict(angles: Vec<f64>) -> Result<Self> {
        let tau = std::f64::consts::TAU;
        if let Some(bad) = angles.iter().find(|a| !(**a >= 0.0 && **a < tau)) {
            return Err(Error::InvalidArgument(format!("angle {bad} outside [0, 2π)")));
        }
        Self::new(angles)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn rotated(&self, c: f64) -> CircularSample {
        CircularSample::new(self.angles.iter().map(|a| a + c).collect()).expect("rotation keeps angles finite")
    }
}
