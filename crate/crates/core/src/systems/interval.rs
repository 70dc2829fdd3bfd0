use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A continuous piecewise-linear self-map of `[0,1]`, or the doubling map.
///
/// Piecewise-linear maps interpolate `values` between `breakpoints`; both are
/// exact rationals so iteration can run without rounding. The doubling map
/// `x -> 2x mod 1` is kept separate because it is not continuous at `1/2`.
#[derive(Clone, Debug, PartialEq)]
pub enum IntervalMapSpec {
    PiecewiseLinear {
        breakpoints: Vec<BigRational>,
        values: Vec<BigRational>,
    },
    Doubling,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn unit_interval(x: &BigRational) -> bool {
    *x >= BigRational::zero() && *x <= BigRational::one()
}

impl IntervalMapSpec {
    pub fn piecewise_linear(
        breakpoints: Vec<BigRational>,
        values: Vec<BigRational>,
    ) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(
                "need at least two breakpoints and one value per breakpoint".into(),
            ));
        }
        if breakpoints[0] != BigRational::zero()
            || *breakpoints.last().unwrap() != BigRational::one()
        {
            return Err(Error::InvalidParameter(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if !values.iter().all(unit_interval) {
            return Err(Error::InvalidParameter(
                "values must lie in [0,1]".into(),
            ));
        }
        Ok(IntervalMapSpec::PiecewiseLinear {
            breakpoints,
            values,
        })
    }

    /// Builds a piecewise-linear map from doubles (converted exactly).
    pub fn piecewise_linear_f64(breakpoints: &[f64], values: &[f64]) -> Result<Self> {
        let conv = |v: &[f64]| -> Result<Vec<BigRational>> {
            v.iter()
                .map(|&x| {
                    BigRational::from_float(x)
                        .ok_or_else(|| Error::InvalidParameter(format!("non-finite value {x}")))
                })
                .collect()
        };
        Self::piecewise_linear(conv(breakpoints)?, conv(values)?)
    }

    /// Slope-2 tent: breakpoints `{0, 1/2, 1}` with values `{0, 1, 0}`.
    pub fn tent() -> Self {
        IntervalMapSpec::PiecewiseLinear {
            breakpoints: vec![rat(0, 1), rat(1, 2), rat(1, 1)],
            values: vec![rat(0, 1), rat(1, 1), rat(0, 1)],
        }
    }

    pub fn doubling() -> Self {
        IntervalMapSpec::Doubling
    }

    pub fn apply_exact(&self, x: &BigRational) -> Result<BigRational> {
        if !unit_interval(x) {
            return Err(Error::Domain(format!("{x} lies outside [0,1]")));
        }
        Ok(match self {
            IntervalMapSpec::Doubling => {
                let y = x * BigInt::from(2);
                if y >= BigRational::one() {
                    y - BigRational::one()
                } else {
                    y
                }
            }
            IntervalMapSpec::PiecewiseLinear {
                breakpoints,
                values,
            } => {
                let seg = breakpoints
                    .partition_point(|b| b <= x)
                    .clamp(1, breakpoints.len() - 1);
                let (x0, x1) = (&breakpoints[seg - 1], &breakpoints[seg]);
                let (y0, y1) = (&values[seg - 1], &values[seg]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        })
    }

    pub fn apply_f64(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("{x} lies outside [0,1]")));
        }
        Ok(match self {
            IntervalMapSpec::Doubling => {
                let y = 2.0 * x;
                if y >= 1.0 {
                    y - 1.0
                } else {
                    y
                }
            }
            IntervalMapSpec::PiecewiseLinear {
                breakpoints,
                values,
            } => {
                let bx: Vec<f64> = breakpoints.iter().map(|b| b.to_f64().unwrap()).collect();
                let seg = bx.partition_point(|&b| b <= x).clamp(1, bx.len() - 1);
                let (x0, x1) = (bx[seg - 1], bx[seg]);
                let y0 = values[seg - 1].to_f64().unwrap();
                let y1 = values[seg].to_f64().unwrap();
                (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).clamp(0.0, 1.0)
            }
        })
    }

    /// Largest difference quotient over a uniform grid of `samples + 1`
    /// points. A heuristic modulus of continuity: exact for piecewise-linear
    /// maps whose breakpoints fall on the grid, and meaningless for the
    /// (discontinuous) doubling map, which reports slope 2.
    pub fn sampled_lipschitz(&self, samples: u32) -> f64 {
        if let IntervalMapSpec::Doubling = self {
            return 2.0;
        }
        let h = 1.0 / samples as f64;
        let mut prev = self.apply_f64(0.0).unwrap();
        let mut best = 0.0f64;
        for i in 1..=samples {
            let x = (i as f64 * h).min(1.0);
            let y = self.apply_f64(x).unwrap();
            best = best.max((y - prev).abs() / h);
            prev = y;
        }
        best
    }
}
