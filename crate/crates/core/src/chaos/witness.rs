use serde::{Deserialize, Serialize};

use super::tuple::OrbitTuple;
use crate::error::{Error, Result};
use crate::systems::{dyadic, window_for, Distance, State, System};

/// A time and the distance measured there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWitness {
    pub time: u64,
    pub distance: Distance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximalRecurrent {
    /// Smallest `k >= 1` with max pairwise distance below ε.
    pub proximal: Option<TimeWitness>,
    /// Smallest `k >= 1` with `d(f^k x_i, x_i) < ε` for every point.
    pub recurrent: Option<TimeWitness>,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} must be positive")));
    }
    Ok(())
}

pub fn proximal_recurrent_witness(tuple: &OrbitTuple, eps: f64, horizon: u64) -> Result<ProximalRecurrent> {
    check_eps(eps)?;
    let w = window_for(eps);
    let mut proximal = None;
    for k in 1..=horizon {
        let (_, max) = tuple.extrema_at(k, w)?;
        if max.is_below(eps) == Some(true) {
            proximal = Some(TimeWitness { time: k, distance: max });
            break;
        }
    }
    let mut recurrent = None;
    for k in 1..=horizon {
        let d = worst(tuple.return_distances(k, w)?);
        if d.is_below(eps) == Some(true) {
            recurrent = Some(TimeWitness { time: k, distance: d });
            break;
        }
    }
    Ok(ProximalRecurrent { proximal, recurrent })
}

fn worst(ds: Vec<Distance>) -> Distance {
    ds.into_iter()
        .reduce(Distance::max)
        .unwrap_or(Distance::Exact(0.0))
}

/// Steps a finite set of states forward together.
struct Walker<'a> {
    system: &'a System,
    start: Vec<State>,
    current: Vec<State>,
    time: u64,
}

impl<'a> Walker<'a> {
    fn new(system: &'a System, points: &[State]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("point set is empty".into()));
        }
        for p in points {
            system.check(p)?;
        }
        Ok(Walker {
            system,
            start: points.to_vec(),
            current: points.to_vec(),
            time: 0,
        })
    }

    fn advance_to(&mut self, k: u64) -> Result<()> {
        if k < self.time {
            self.current = self.start.clone();
            self.time = 0;
        }
        let steps = k - self.time;
        self.current = self
            .current
            .iter()
            .map(|s| self.system.iterate(s, steps))
            .collect::<Result<_>>()?;
        self.time = k;
        Ok(())
    }

    /// `diam(f^k K)` at window `w`.
    fn diameter(&self, w: u32) -> Result<Distance> {
        let mut d = Distance::Exact(0.0);
        for i in 0..self.current.len() {
            for j in i + 1..self.current.len() {
                d = d.max(self.system.distance(&self.current[i], &self.current[j], w)?);
            }
        }
        Ok(d)
    }

    /// `max_x d(f^k x, x)` at window `w`.
    fn max_return(&self, w: u32) -> Result<Distance> {
        let ds = self
            .current
            .iter()
            .zip(&self.start)
            .map(|(a, b)| self.system.distance(a, b, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(worst(ds))
    }
}

/// Smallest `n` in `1..=horizon` with `diam(f^n K) < ε`.
pub fn uniform_proximality_time(
    system: &System,
    points: &[State],
    eps: f64,
    horizon: u64,
) -> Result<Option<TimeWitness>> {
    check_eps(eps)?;
    let w = window_for(eps);
    let mut walk = Walker::new(system, points)?;
    for n in 1..=horizon {
        walk.advance_to(n)?;
        let d = walk.diameter(w)?;
        if d.is_below(eps) == Some(true) {
            return Ok(Some(TimeWitness { time: n, distance: d }));
        }
    }
    Ok(None)
}

/// Smallest `n` in `1..=horizon` with `d(f^n x, x) < ε` for every point.
pub fn uniform_recurrence_time(
    system: &System,
    points: &[State],
    eps: f64,
    horizon: u64,
) -> Result<Option<TimeWitness>> {
    Ok(first_return(system, points, eps, horizon, 1, 0)?.map(|(n, d)| TimeWitness { time: n, distance: d }))
}

/// Smallest `n` in `1..=horizon` with `n ≡ residue (mod modulus)` and
/// `max_x d(f^n x, x) < eps`.
fn first_return(
    system: &System,
    points: &[State],
    eps: f64,
    horizon: u64,
    modulus: u64,
    residue: u64,
) -> Result<Option<(u64, Distance)>> {
    check_eps(eps)?;
    let w = window_for(eps);
    let mut walk = Walker::new(system, points)?;
    let first = if residue == 0 { modulus } else { residue };
    let mut n = first;
    while n <= horizon {
        walk.advance_to(n)?;
        let d = walk.max_return(w)?;
        if d.is_below(eps) == Some(true) {
            return Ok(Some((n, d)));
        }
        n += modulus;
    }
    Ok(None)
}

/// How the cascade bounds `d(f^k y, f^k z)` in terms of `d(y, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Modulus {
    /// Shift maps: agreement on `|i| <= k + e - 1` survives `k` shifts as
    /// agreement on `|i| <= e - 1`.
    Exact,
    /// `d(f^k y, f^k z) <= L^k d(y, z)` with `L` a sampled slope bound.
    /// Heuristic: the grid can miss steeper pieces.
    SampledLipschitz { lipschitz: f64, samples: u32 },
}

impl Modulus {
    fn for_system(system: &System) -> Self {
        match system {
            System::IntervalMap(spec) => {
                let samples = 1 << 16;
                Modulus::SampledLipschitz {
                    lipschitz: spec.sampled_lipschitz(samples),
                    samples,
                }
            }
            _ => Modulus::Exact,
        }
    }

    /// A `δ` with `d(y, z) < δ ⇒ d(f^k y, f^k z) < η`.
    pub fn delta(&self, k: u64, eta: f64) -> f64 {
        match self {
            Modulus::Exact => {
                let e = window_for(eta) as u64;
                u32::try_from(k + e - 1).map_or(0.0, dyadic)
            }
            Modulus::SampledLipschitz { lipschitz, .. } => {
                let growth = lipschitz.max(1.0).powf(k as f64);
                eta / growth
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeStep {
    pub index: usize,
    /// `ε_i`
    pub eps: f64,
    /// `n_i`, with `n_i ≡ s (mod r)`
    pub n: u64,
    /// `n_1 + ... + n_i`
    pub cumulative: u64,
    /// `δ_i` for `n_1 + ... + n_i` and `ε_i / 2`
    pub delta: f64,
    /// `max_x d(f^{n_i} x, x)`, below `ε_i`
    pub max_return: Distance,
}

/// The full `ε`-cascade for a power `r`: `ε_1 = ε/2`,
/// `ε_{i+1} = min(δ_i, ε_i/2)`, each `n_i` a return time below `ε_i` in the
/// residue class `s` of the first return, and `N = Σ n_i ≡ 0 (mod r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeCertificate {
    pub r: u64,
    pub eps: f64,
    pub residue: u64,
    pub steps: Vec<CascadeStep>,
    pub total: u64,
    /// `max_x d(f^N x, x)`
    pub final_return: Distance,
    /// `Σ_{i<r} ε_1 / 2^i`, which must stay below ε.
    pub series_bound: f64,
    pub modulus: Modulus,
}

/// Builds a time `N ≡ 0 (mod r)` with `d(f^N x, x) < ε` for all points by
/// composing `r` return times of one residue class.
pub fn power_recurrence_compose(
    system: &System,
    points: &[State],
    r: u64,
    eps: f64,
    horizon: u64,
) -> Result<CascadeCertificate> {
    check_eps(eps)?;
    if r == 0 {
        return Err(Error::InvalidParameter("power r must be at least 1".into()));
    }
    let modulus = Modulus::for_system(system);
    let exhausted = |steps: &[CascadeStep]| Error::HorizonExhausted {
        horizon,
        steps_found: steps.len(),
        partial: format!("{steps:?}"),
    };
    let mut steps: Vec<CascadeStep> = Vec::with_capacity(r as usize);
    let mut cur = eps / 2.0;
    let Some((n1, d1)) = first_return(system, points, cur, horizon, 1, 0)? else {
        return Err(exhausted(&steps));
    };
    let residue = n1 % r;
    let mut total = 0u64;
    for i in 1..=r as usize {
        let (n, d) = if i == 1 {
            (n1, d1)
        } else {
            if !(cur > 0.0) {
                return Err(Error::PrecisionInsufficient {
                    needed_window: u32::MAX,
                    detail: format!("cascade tolerance underflowed at step {i}"),
                });
            }
            match first_return(system, points, cur, horizon, r, residue)? {
                Some(found) => found,
                None => return Err(exhausted(&steps)),
            }
        };
        total = total
            .checked_add(n)
            .ok_or_else(|| Error::MaterializationBound("cascade total overflows u64".into()))?;
        let delta = modulus.delta(total, cur / 2.0);
        steps.push(CascadeStep {
            index: i,
            eps: cur,
            n,
            cumulative: total,
            delta,
            max_return: d,
        });
        cur = delta.min(cur / 2.0);
    }
    let eps1 = eps / 2.0;
    let series_bound: f64 = (0..r).map(|i| eps1 / 2f64.powi(i as i32)).sum();
    let mut walk = Walker::new(system, points)?;
    walk.advance_to(total)?;
    let final_return = walk.max_return(window_for(eps))?;
    let cert = CascadeCertificate {
        r,
        eps,
        residue,
        steps,
        total,
        final_return,
        series_bound,
        modulus,
    };
    cert.verify(system, points)?;
    Ok(cert)
}

impl CascadeCertificate {
    /// Re-derives every inequality of the certificate by direct iteration.
    pub fn verify(&self, system: &System, points: &[State]) -> Result<()> {
        let fail = |what: String| Err(Error::ContractViolation(format!("cascade certificate: {what}")));
        if self.steps.len() as u64 != self.r {
            return fail(format!("{} steps for r = {}", self.steps.len(), self.r));
        }
        let mut expected_eps = self.eps / 2.0;
        let mut sum = 0u64;
        let mut walk = Walker::new(system, points)?;
        for s in &self.steps {
            if s.eps != expected_eps {
                return fail(format!("ε_{} = {} but the recursion gives {expected_eps}", s.index, s.eps));
            }
            if s.n == 0 || s.n % self.r != self.residue {
                return fail(format!("n_{} = {} is not ≡ {} mod {}", s.index, s.n, self.residue, self.r));
            }
            walk.advance_to(s.n)?;
            let d = walk.max_return(window_for(s.eps))?;
            if d.is_below(s.eps) != Some(true) {
                return fail(format!("d(f^{} x, x) = {d:?} is not below ε_{}", s.n, s.index));
            }
            sum += s.n;
            if s.cumulative != sum || s.delta != self.modulus.delta(sum, s.eps / 2.0) {
                return fail(format!("step {} bookkeeping", s.index));
            }
            expected_eps = s.delta.min(s.eps / 2.0);
        }
        if sum != self.total || !self.total.is_multiple_of(self.r) {
            return fail(format!("N = {} is not a multiple of r = {}", self.total, self.r));
        }
        if !(self.series_bound < self.eps) {
            return fail(format!("series bound {} is not below ε", self.series_bound));
        }
        walk.advance_to(self.total)?;
        let d = walk.max_return(window_for(self.eps))?;
        if d.is_below(self.eps) != Some(true) || d != self.final_return {
            return fail(format!("d(f^N x, x) = {d:?} is not below ε = {}", self.eps));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Alphabet, IntervalMapSpec, Sidedness, SymbolicPoint};

    fn a2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn periodic(words: &[&[u8]]) -> (System, Vec<State>) {
        let sys = System::full_shift(a2(), Sidedness::OneSided);
        let pts = words
            .iter()
            .map(|w| SymbolicPoint::periodic(a2(), Sidedness::OneSided, w).unwrap().into())
            .collect();
        (sys, pts)
    }

    #[test]
    fn equal_points_are_proximal_at_once() {
        let (sys, pts) = periodic(&[&[0, 1, 1], &[0, 1, 1]]);
        let t = OrbitTuple::new(sys, pts).unwrap();
        let w = proximal_recurrent_witness(&t, 0.01, 10).unwrap();
        assert_eq!(w.proximal.unwrap().time, 1);
        assert_eq!(w.recurrent.unwrap().time, 3);
    }

    #[test]
    fn uniform_times() {
        let (sys, pts) = periodic(&[&[0, 0, 0, 1], &[0, 0, 1, 1]]);
        assert_eq!(uniform_recurrence_time(&sys, &pts, 1e-3, 50).unwrap().unwrap().time, 4);
        let single = vec![pts[0].clone()];
        assert_eq!(uniform_proximality_time(&sys, &single, 1e-3, 5).unwrap().unwrap().time, 1);
        let x: State = SymbolicPoint::from_word(a2(), Sidedness::OneSided, &[1], 0).unwrap().into();
        let z: State = SymbolicPoint::constant(a2(), Sidedness::OneSided, 0).unwrap().into();
        assert_eq!(uniform_proximality_time(&sys, &[x, z], 0.5, 5).unwrap().unwrap().time, 1);
    }

    #[test]
    fn cascade_examples() {
        let (sys, pts) = periodic(&[&[0, 0, 0, 1], &[0, 1, 1, 1]]);
        let c = power_recurrence_compose(&sys, &pts, 3, 0.25, 1000).unwrap();
        assert_eq!(c.total, 12);
        assert_eq!(c.residue, 1);
        assert!(c.steps.iter().all(|s| s.n == 4));

        let (sys, pts) = periodic(&[&[0]]);
        for r in 1..6 {
            assert_eq!(power_recurrence_compose(&sys, &pts, r, 0.1, 100).unwrap().total, r);
        }

        let (sys, pts) = periodic(&[&[0, 1], &[1, 0]]);
        let c = power_recurrence_compose(&sys, &pts, 2, 0.5, 100).unwrap();
        assert_eq!(c.total % 2, 0);
        assert!(c.total == 2 || c.total == 4);
    }

    #[test]
    fn cascade_horizon_exhausted() {
        let (sys, pts) = periodic(&[&[0, 0, 0, 0, 0, 1]]);
        match power_recurrence_compose(&sys, &pts, 2, 0.1, 4) {
            Err(Error::HorizonExhausted { steps_found, .. }) => assert_eq!(steps_found, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tampered_certificate_fails() {
        let (sys, pts) = periodic(&[&[0, 0, 1]]);
        let mut c = power_recurrence_compose(&sys, &pts, 2, 0.25, 100).unwrap();
        c.steps[1].n += 1;
        assert!(c.verify(&sys, &pts).is_err());
    }

    #[test]
    fn interval_cascade_uses_heuristic_modulus() {
        // 2/5 has period 2 under the tent map.
        let sys = System::interval(IntervalMapSpec::tent());
        let x = State::Exact(num_rational::BigRational::new(2.into(), 5.into()));
        let c = power_recurrence_compose(&sys, &[x], 3, 0.1, 100).unwrap();
        assert_eq!(c.total, 6);
        assert!(matches!(c.modulus, Modulus::SampledLipschitz { .. }));
    }
}
