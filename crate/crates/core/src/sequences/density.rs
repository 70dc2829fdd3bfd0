use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};

use super::IndexSequence;
use crate::error::{Error, Result};

/// `#(P ∩ {q_1..q_m}) / m`, exact.
pub fn upper_density(p: &IndexSequence, q: &IndexSequence, m: u64) -> Result<Ratio<u64>> {
    if m == 0 {
        return Err(Error::InvalidParameter("prefix length must be at least 1".into()));
    }
    let mut hits = 0u64;
    for k in 1..=m {
        if p.contains(q.nth(k)?)? {
            hits += 1;
        }
    }
    Ok(Ratio::new(hits, m))
}

/// The family of sets `P` with upper density at least `a` relative to
/// `Q` (and infinite intersection with `Q`).
#[derive(Clone, Debug)]
pub struct DensityFamily {
    base: IndexSequence,
    threshold: f64,
}

impl DensityFamily {
    pub fn new(base: IndexSequence, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParameter(format!(
                "density threshold {threshold} outside [0,1]"
            )));
        }
        Ok(DensityFamily { base, threshold })
    }

    pub fn base(&self) -> &IndexSequence {
        &self.base
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// The threshold as an exact rational (every finite double is one).
    pub fn threshold_exact(&self) -> BigRational {
        BigRational::from_float(self.threshold).unwrap_or_else(|| BigRational::from(BigInt::from(0)))
    }

    /// Whether a measured tail-sup meets the threshold.
    pub fn admits(&self, tail_sup: &BigRational) -> bool {
        *tail_sup >= self.threshold_exact()
    }
}
