use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Outcome of a metric evaluation at a finite precision window.
///
/// `Exact(d)` is the true distance. `Below(b)` means the scan found no
/// disagreement and only certifies `d <= b`; it is a value, not an error,
/// so callers must decide explicitly what an unresolved comparison means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Distance {
    Exact(f64),
    Below(f64),
}

impl Distance {
    /// The number reported by the verdict: the distance itself or its bound.
    pub fn magnitude(&self) -> f64 {
        match *self {
            Distance::Exact(d) | Distance::Below(d) => d,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Distance::Exact(_))
    }

    /// `Some(d < t)` when decidable. A `Below(b)` bound decides only when
    /// `b < t`.
    pub fn is_below(&self, t: f64) -> Option<bool> {
        match *self {
            Distance::Exact(d) => Some(d < t),
            Distance::Below(b) if b < t => Some(true),
            Distance::Below(_) => None,
        }
    }

    /// `Some(d > t)` when decidable.
    pub fn exceeds(&self, t: f64) -> Option<bool> {
        match *self {
            Distance::Exact(d) => Some(d > t),
            Distance::Below(b) if b <= t => Some(false),
            Distance::Below(_) => None,
        }
    }

    // Below(b) sorts before Exact(b): its true value is at most b.
    fn key(&self) -> (f64, u8) {
        match *self {
            Distance::Below(b) => (b, 0),
            Distance::Exact(d) => (d, 1),
        }
    }

    pub fn total_cmp(&self, other: &Distance) -> Ordering {
        let (a, ra) = self.key();
        let (b, rb) = other.key();
        a.total_cmp(&b).then(ra.cmp(&rb))
    }

    pub fn min(self, other: Distance) -> Distance {
        if other.total_cmp(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Distance) -> Distance {
        if other.total_cmp(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

/// `2^{-exp}` as an exactly representable double.
pub fn dyadic(exp: u32) -> f64 {
    (-(exp as f64)).exp2()
}

/// Smallest window `W` with `2^{-W} < t`; the precision needed so that an
/// unresolved scan still decides "below `t`".
pub fn window_for(t: f64) -> u32 {
    assert!(t > 0.0, "threshold must be positive");
    let mut w = 0u32;
    while dyadic(w) >= t {
        w += 1;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_decides_only_under_threshold() {
        let d = Distance::Below(dyadic(8));
        assert_eq!(d.is_below(dyadic(6)), Some(true));
        assert_eq!(d.is_below(dyadic(8)), None);
        assert_eq!(d.exceeds(0.5), Some(false));
        assert_eq!(Distance::Exact(1.0).exceeds(0.5), Some(true));
    }

    #[test]
    fn ordering_puts_bounds_first() {
        let b = Distance::Below(0.25);
        let e = Distance::Exact(0.25);
        assert_eq!(b.min(e), b);
        assert_eq!(b.max(e), e);
        assert_eq!(Distance::Exact(1.0).min(Distance::Exact(0.5)), Distance::Exact(0.5));
    }

    #[test]
    fn window_for_thresholds() {
        assert_eq!(window_for(1.0), 1);
        assert_eq!(window_for(0.5), 2);
        assert_eq!(window_for(dyadic(6)), 7);
        assert_eq!(window_for(0.3), 2);
    }
}
