use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::systems::{dyadic, scan_offsets, Distance, Sidedness, State, SymbolicPoint, System};

/// An ordered tuple `(x_1, ..., x_n)`, `n >= 2`, of points of one system.
///
/// Shift points are evaluated at any time directly (layout-backed points
/// even at times beyond `i64`). Interval orbits are cached per point and
/// extended under a lock; the cache only grows, so concurrent readers see
/// the same iterates.
#[derive(Clone, Debug)]
pub struct OrbitTuple {
    system: System,
    points: Vec<State>,
    cache: Arc<Vec<Mutex<Vec<State>>>>,
}

impl OrbitTuple {
    pub fn new(system: System, points: Vec<State>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("a tuple needs at least two points".into()));
        }
        for p in &points {
            system.check(p)?;
        }
        let cache = points.iter().map(|p| Mutex::new(vec![p.clone()])).collect();
        Ok(OrbitTuple {
            system,
            points,
            cache: Arc::new(cache),
        })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn points(&self) -> &[State] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub(crate) fn symbolic_points(&self) -> Option<Vec<&SymbolicPoint>> {
        self.points.iter().map(State::as_symbolic).collect()
    }

    /// `f^k(x_i)`.
    pub fn state_at(&self, i: usize, k: u64) -> Result<State> {
        let p = self
            .points
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("no point {i} in tuple")))?;
        if let State::Symbolic(s) = p {
            return Ok(State::Symbolic(s.shift(k)?));
        }
        let System::IntervalMap(spec) = &self.system else {
            unreachable!("checked at construction")
        };
        let mut orbit = self.cache[i].lock().unwrap();
        while (orbit.len() as u64) <= k {
            let next = match orbit.last().unwrap() {
                State::Real(x) => State::Real(spec.apply_f64(*x)?),
                State::Exact(x) => State::Exact(spec.apply_exact(x)?),
                State::Symbolic(_) => unreachable!(),
            };
            orbit.push(next);
        }
        Ok(orbit[k as usize].clone())
    }

    /// Min and max pairwise distance at time `k` with precision window `w`.
    pub fn extrema_at(&self, k: u64, window: u32) -> Result<(Distance, Distance)> {
        self.extrema_big(&BigInt::from(k), window)
    }

    /// As [`extrema_at`](Self::extrema_at) for an arbitrary nonnegative
    /// time. Times past `i64` need layout-backed shift points.
    pub fn extrema_big(&self, time: &BigInt, window: u32) -> Result<(Distance, Distance)> {
        let dists = self.pair_distances(time, window)?;
        let mut it = dists.into_iter();
        let first = it.next().expect("n >= 2");
        Ok(it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d))))
    }

    fn pair_distances(&self, time: &BigInt, window: u32) -> Result<Vec<Distance>> {
        if time.sign() == num_bigint::Sign::Minus {
            return Err(Error::InvalidParameter("times are nonnegative".into()));
        }
        let n = self.points.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        match self.symbolic_points() {
            Some(pts) => {
                if window == 0 {
                    return Err(Error::InvalidParameter(
                        "shift distances need a window of at least 1".into(),
                    ));
                }
                let side = pts[0].sidedness();
                // Symbols at each scanned offset, one row per point.
                let offsets: Vec<i64> = scan_offsets(side, window).collect();
                let rows: Vec<Vec<u8>> = pts
                    .iter()
                    .map(|p| {
                        offsets
                            .iter()
                            .map(|&j| symbol_at_time(p, time, j))
                            .collect::<Result<Vec<u8>>>()
                    })
                    .collect::<Result<_>>()?;
                for a in 0..n {
                    for b in a + 1..n {
                        let d = offsets
                            .iter()
                            .enumerate()
                            .find(|&(c, _)| rows[a][c] != rows[b][c])
                            .map_or(Distance::Below(dyadic(window)), |(_, &j)| {
                                Distance::Exact(dyadic(j.unsigned_abs() as u32))
                            });
                        out.push(d);
                    }
                }
            }
            None => {
                let k = time.to_u64().ok_or_else(|| {
                    Error::MaterializationBound(format!("interval orbit time {time} exceeds u64"))
                })?;
                let states: Vec<State> = (0..n).map(|i| self.state_at(i, k)).collect::<Result<_>>()?;
                for a in 0..n {
                    for b in a + 1..n {
                        out.push(self.system.distance(&states[a], &states[b], window.max(1))?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `d(f^k x_i, x_i)` for every point.
    pub fn return_distances(&self, k: u64, window: u32) -> Result<Vec<Distance>> {
        (0..self.points.len())
            .map(|i| {
                let later = self.state_at(i, k)?;
                self.system.distance(&later, &self.points[i], window.max(1))
            })
            .collect()
    }
}

/// Coordinate `j` of `σ^time(p)`.
pub(crate) fn symbol_at_time(p: &SymbolicPoint, time: &BigInt, j: i64) -> Result<u8> {
    if p.sidedness() == Sidedness::OneSided && (time + j) < BigInt::zero() {
        return Err(Error::InvalidParameter(format!(
            "one-sided point has no coordinate {j} at time {time}"
        )));
    }
    if let Some((layout, off)) = p.layout() {
        return Ok(layout.symbol_at(&(time + off + j)));
    }
    let t = time.to_i64().and_then(|t| t.checked_add(j)).ok_or_else(|| {
        Error::MaterializationBound(format!(
            "time {time} exceeds i64 for a function-backed point"
        ))
    })?;
    Ok(p.symbol(t))
}

/// Min and max pairwise distance at time `k`.
pub fn pairwise_extrema(tuple: &OrbitTuple, k: u64, window: u32) -> Result<(Distance, Distance)> {
    tuple.extrema_at(k, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Alphabet, IntervalMapSpec};

    fn consts(n: u8, side: Sidedness) -> OrbitTuple {
        let a = Alphabet::new(n).unwrap();
        let pts = (0..n)
            .map(|s| SymbolicPoint::constant(a, side, s).unwrap().into())
            .collect();
        OrbitTuple::new(System::full_shift(a, side), pts).unwrap()
    }

    #[test]
    fn distinct_constants_are_far() {
        let t = consts(3, Sidedness::TwoSided);
        for k in [0u64, 5, 1 << 40] {
            assert_eq!(
                pairwise_extrema(&t, k, 8).unwrap(),
                (Distance::Exact(1.0), Distance::Exact(1.0))
            );
        }
    }

    #[test]
    fn equal_points_are_below_window() {
        let a = Alphabet::new(2).unwrap();
        let x = SymbolicPoint::periodic(a, Sidedness::OneSided, &[0, 1, 1]).unwrap();
        let t = OrbitTuple::new(
            System::full_shift(a, Sidedness::OneSided),
            vec![x.clone().into(), x.into()],
        )
        .unwrap();
        let (lo, hi) = pairwise_extrema(&t, 3, 6).unwrap();
        assert_eq!(lo, Distance::Below(dyadic(6)));
        assert_eq!(hi, Distance::Below(dyadic(6)));
    }

    #[test]
    fn huge_times_on_layouts() {
        let a = Alphabet::new(2).unwrap();
        let start = BigInt::from(10u32).pow(30);
        let layout = crate::systems::RunLayout::new(0, vec![(start.clone(), 1)]).unwrap();
        let x = SymbolicPoint::from_layout(a, Sidedness::TwoSided, layout).unwrap();
        let z = SymbolicPoint::constant(a, Sidedness::TwoSided, 0).unwrap();
        let t = OrbitTuple::new(System::full_shift(a, Sidedness::TwoSided), vec![x.into(), z.into()]).unwrap();
        let (lo, _) = t.extrema_big(&(start.clone() - 3), 8).unwrap();
        assert_eq!(lo, Distance::Exact(dyadic(3)));
        let (lo, _) = t.extrema_big(&(start + 5), 8).unwrap();
        assert_eq!(lo, Distance::Exact(1.0));
    }

    #[test]
    fn mixed_tuple_is_rejected() {
        let a = Alphabet::new(2).unwrap();
        let x = SymbolicPoint::constant(a, Sidedness::OneSided, 0).unwrap();
        let r = OrbitTuple::new(
            System::full_shift(a, Sidedness::OneSided),
            vec![x.into(), State::Real(0.5)],
        );
        assert!(matches!(r, Err(Error::ContractViolation(_))));
    }

    #[test]
    fn interval_orbit_cache() {
        let t = OrbitTuple::new(
            System::interval(IntervalMapSpec::tent()),
            vec![State::Real(0.4), State::Real(0.8)],
        )
        .unwrap();
        let (lo, _) = t.extrema_at(1, 1).unwrap();
        // T(0.4) = 0.8, T(0.8) = 0.4
        assert!((lo.magnitude() - 0.4).abs() < 1e-12);
        let r = t.return_distances(2, 1).unwrap();
        assert!(r.iter().all(|d| d.magnitude() < 1e-12));
    }
}
