//! Dynamical systems: full shifts, designed subshifts and interval maps,
//! with orbit evaluation and a metric evaluated at an explicit precision
//! window.

mod distance;
mod interval;
mod symbolic;

pub use distance::{dyadic, window_for, Distance};
pub use interval::IntervalMapSpec;
pub use symbolic::{scan_offsets, symbolic_distance, Alphabet, RunLayout, Sidedness, SymbolicPoint};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};

/// A dynamical system `(X, f, d)`.
#[derive(Clone, Debug, PartialEq)]
pub enum System {
    /// `Σ_n` or `Σ_n⁺` with the shift map.
    FullShift {
        alphabet: Alphabet,
        sidedness: Sidedness,
    },
    /// A subshift whose points are produced by a named construction. Orbits
    /// and distances are those of the ambient full shift.
    Subshift {
        alphabet: Alphabet,
        sidedness: Sidedness,
        name: String,
    },
    IntervalMap(IntervalMapSpec),
}

/// A point of some system's state space.
#[derive(Clone, Debug)]
pub enum State {
    Symbolic(SymbolicPoint),
    /// Double-precision interval point; exploratory statistics only.
    Real(f64),
    /// Exact rational interval point.
    Exact(BigRational),
}

impl State {
    pub fn as_symbolic(&self) -> Option<&SymbolicPoint> {
        match self {
            State::Symbolic(p) => Some(p),
            _ => None,
        }
    }
}

impl From<SymbolicPoint> for State {
    fn from(p: SymbolicPoint) -> Self {
        State::Symbolic(p)
    }
}

impl System {
    pub fn full_shift(alphabet: Alphabet, sidedness: Sidedness) -> Self {
        System::FullShift {
            alphabet,
            sidedness,
        }
    }

    pub fn interval(spec: IntervalMapSpec) -> Self {
        System::IntervalMap(spec)
    }

    pub fn alphabet(&self) -> Option<Alphabet> {
        match self {
            System::FullShift { alphabet, .. } | System::Subshift { alphabet, .. } => {
                Some(*alphabet)
            }
            System::IntervalMap(_) => None,
        }
    }

    pub fn sidedness(&self) -> Option<Sidedness> {
        match self {
            System::FullShift { sidedness, .. } | System::Subshift { sidedness, .. } => {
                Some(*sidedness)
            }
            System::IntervalMap(_) => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        !matches!(self, System::IntervalMap(_))
    }

    /// Checks that `state` belongs to this system's domain.
    pub fn check(&self, state: &State) -> Result<()> {
        match (self, state) {
            (
                System::FullShift {
                    alphabet,
                    sidedness,
                }
                | System::Subshift {
                    alphabet,
                    sidedness,
                    ..
                },
                State::Symbolic(p),
            ) => {
                if p.alphabet() != *alphabet || p.sidedness() != *sidedness {
                    return Err(Error::ContractViolation(format!(
                        "point over {} symbols ({:?}) does not belong to a {:?} shift on {} symbols",
                        p.alphabet().size(),
                        p.sidedness(),
                        sidedness,
                        alphabet.size()
                    )));
                }
                Ok(())
            }
            (System::IntervalMap(_), State::Real(x)) => {
                if (0.0..=1.0).contains(x) {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("{x} lies outside [0,1]")))
                }
            }
            (System::IntervalMap(_), State::Exact(x)) => {
                if !x.is_negative() && x.to_f64().is_some_and(|v| v <= 1.0) {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("{x} lies outside [0,1]")))
                }
            }
            _ => Err(Error::ContractViolation(
                "state kind does not match system kind".into(),
            )),
        }
    }

    /// `f^k(point)`. Shift kinds adjust an offset in O(1); interval maps
    /// iterate `k` times.
    pub fn iterate(&self, point: &State, k: u64) -> Result<State> {
        self.check(point)?;
        match (self, point) {
            (System::IntervalMap(spec), State::Real(x)) => {
                let mut x = *x;
                for _ in 0..k {
                    x = spec.apply_f64(x)?;
                }
                Ok(State::Real(x))
            }
            (System::IntervalMap(spec), State::Exact(x)) => {
                let mut x = x.clone();
                for _ in 0..k {
                    x = spec.apply_exact(&x)?;
                }
                Ok(State::Exact(x))
            }
            (_, State::Symbolic(p)) => Ok(State::Symbolic(p.shift(k)?)),
            _ => unreachable!("checked above"),
        }
    }

    /// Metric evaluation. Shift kinds return `Exact(2^{-j})` for the first
    /// disagreement `j` within the window, else `Below(2^{-window})`.
    /// Interval maps return `Exact(|a - b|)`.
    pub fn distance(&self, a: &State, b: &State, window: u32) -> Result<Distance> {
        self.check(a)?;
        self.check(b)?;
        match (a, b) {
            (State::Symbolic(x), State::Symbolic(y)) => {
                if window == 0 {
                    return Err(Error::InvalidParameter(
                        "shift distances need a window of at least 1".into(),
                    ));
                }
                symbolic_distance(x, y, window)
            }
            (State::Real(x), State::Real(y)) => Ok(Distance::Exact((x - y).abs())),
            (State::Exact(x), State::Exact(y)) => Ok(Distance::Exact(
                (x - y).abs().to_f64().unwrap_or(f64::INFINITY),
            )),
            (State::Real(x), State::Exact(y)) | (State::Exact(y), State::Real(x)) => {
                Ok(Distance::Exact((x - y.to_f64().unwrap_or(f64::NAN)).abs()))
            }
            _ => Err(Error::ContractViolation("mixed state kinds".into())),
        }
    }
}
