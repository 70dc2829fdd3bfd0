use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::profile::{
    finish, phi_profile, run_engine, unstable_intervals, CheckpointSchedule,
    DensityProfile, ProfileMode, ProfileOptions, Sample, Strategy, Witness,
};
use super::tuple::{symbol_at_time, OrbitTuple};
use crate::error::{Error, Result};
use crate::numfmt;
use crate::sequences::{DensityFamily, IndexSequence};
use crate::systems::{dyadic, Distance, Sidedness, State, SymbolicPoint, System};

/// A point of the orbit, as seen by a target set.
pub enum Observation<'a> {
    /// `σ^time(point)`.
    Symbolic {
        point: &'a SymbolicPoint,
        time: &'a BigInt,
    },
    Interval(&'a State),
}

impl Observation<'_> {
    /// Coordinate `j` of an observed shift point.
    pub fn symbol(&self, j: i64) -> Result<u8> {
        match self {
            Observation::Symbolic { point, time } => symbol_at_time(point, time, j),
            Observation::Interval(_) => Err(Error::ContractViolation(
                "interval states have no coordinates".into(),
            )),
        }
    }

    pub fn sidedness(&self) -> Option<Sidedness> {
        match self {
            Observation::Symbolic { point, .. } => Some(point.sidedness()),
            Observation::Interval(_) => None,
        }
    }
}

/// A set `A` that can report `d(y, A)`, so that membership in `A`, in its
/// open fattening `[A]_ε` and outside the closed `δ`-fattening can all be
/// decided.
pub trait TargetSet: Send + Sync + fmt::Debug {
    fn distance_to(&self, y: &Observation<'_>) -> Result<Distance>;

    /// Coordinates `lo..=hi` that `distance_to` reads, if bounded. Enables
    /// segmented evaluation along layout-backed orbits.
    fn support(&self) -> Option<(i64, i64)> {
        None
    }

    fn describe(&self) -> String;
}

/// The cylinder `{y : y_{anchor+i} = word_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cylinder {
    pub word: Vec<u8>,
    pub anchor: i64,
}

impl Cylinder {
    pub fn new(word: Vec<u8>, anchor: i64) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidParameter("cylinder word must be nonempty".into()));
        }
        Ok(Cylinder { word, anchor })
    }
}

impl TargetSet for Cylinder {
    /// `2^{-|j|}` for the mismatching coordinate `j` nearest the origin;
    /// `0` inside the cylinder. Always exact.
    fn distance_to(&self, y: &Observation<'_>) -> Result<Distance> {
        if y.sidedness() == Some(Sidedness::OneSided) && self.anchor < 0 {
            return Err(Error::ContractViolation(
                "cylinder anchored at a negative coordinate on a one-sided shift".into(),
            ));
        }
        let mut nearest: Option<u64> = None;
        for (i, &w) in self.word.iter().enumerate() {
            let j = self.anchor + i as i64;
            if y.symbol(j)? != w {
                let a = j.unsigned_abs();
                nearest = Some(nearest.map_or(a, |n| n.min(a)));
            }
        }
        Ok(Distance::Exact(nearest.map_or(0.0, |a| dyadic(a as u32))))
    }

    fn support(&self) -> Option<(i64, i64)> {
        Some((self.anchor, self.anchor + self.word.len() as i64 - 1))
    }

    fn describe(&self) -> String {
        let w: Vec<String> = self.word.iter().map(u8::to_string).collect();
        format!("cylinder[{}]@{}", w.join(""), self.anchor)
    }
}

type DistanceFn = dyn Fn(&Observation<'_>) -> Result<Distance> + Send + Sync;

/// A target set given by a distance oracle.
#[derive(Clone)]
pub struct Predicate {
    name: String,
    distance: Arc<DistanceFn>,
    support: Option<(i64, i64)>,
}

impl Predicate {
    pub fn new<F>(name: impl Into<String>, distance: F) -> Self
    where
        F: Fn(&Observation<'_>) -> Result<Distance> + Send + Sync + 'static,
    {
        Predicate {
            name: name.into(),
            distance: Arc::new(distance),
            support: None,
        }
    }

    pub fn with_support(mut self, lo: i64, hi: i64) -> Self {
        self.support = Some((lo, hi));
        self
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predicate").field("name", &self.name).finish()
    }
}

impl TargetSet for Predicate {
    fn distance_to(&self, y: &Observation<'_>) -> Result<Distance> {
        (self.distance)(y)
    }

    fn support(&self) -> Option<(i64, i64)> {
        self.support
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// One threshold of a verdict and what was measured against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub parameter: f64,
    #[serde(with = "numfmt::rational")]
    pub measured: BigRational,
    pub witness: Option<Witness>,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct AttachOptions {
    /// ε values for the adherence test; empty selects `2^-1 .. 2^-(W-1)`.
    pub eps_ladder: Vec<f64>,
    /// Escape threshold `δ`, if the escaping test should run.
    pub delta: Option<f64>,
    /// Tolerance subtracted from the family threshold before comparing.
    pub slack: f64,
    pub profile: ProfileOptions,
}

impl Default for AttachOptions {
    fn default() -> Self {
        AttachOptions {
            eps_ladder: Vec::new(),
            delta: None,
            slack: 0.0,
            profile: ProfileOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttachReport {
    pub target: String,
    pub sequence: String,
    pub threshold: f64,
    pub slack: f64,
    /// Frequency of visits to the target itself.
    pub membership: DensityProfile,
    pub attaching: ThresholdCheck,
    pub adherent_ladder: Vec<ThresholdCheck>,
    pub adherent: bool,
    pub escaping: Option<ThresholdCheck>,
    pub escape_profile: Option<DensityProfile>,
}

pub(crate) fn default_ladder(window: u32) -> Vec<f64> {
    (1..window.max(2)).map(dyadic).collect()
}

fn meets(measured: &BigRational, threshold: f64, slack: f64) -> bool {
    let need = BigRational::from_float(threshold - slack).unwrap_or_else(|| BigRational::from(BigInt::from(0)));
    *measured >= need
}

/// Profiles the visit times of `x` to the target along the family's base
/// sequence and tests attaching (visits to `A`), adherence (visits to every
/// `[A]_ε` on the ladder) and, when `δ` is given, escaping (visits to
/// `d(·, A) > δ`). Each positive check needs `tail-sup >= a - slack` and at
/// least one witness time.
pub fn classify_attaching(
    system: &System,
    x: &State,
    target: &dyn TargetSet,
    family: &DensityFamily,
    schedule: &CheckpointSchedule,
    opts: &AttachOptions,
) -> Result<AttachReport> {
    system.check(x)?;
    let q = family.base();
    let a = family.threshold();
    let run = |mode: ProfileMode, t: f64| target_profile(system, x, target, q, schedule, mode, t, &opts.profile);
    let check = |p: &DensityProfile, param: f64| {
        let measured = p.tail_sup();
        let witness = p.witnesses.first().cloned();
        ThresholdCheck {
            parameter: param,
            holds: witness.is_some() && meets(&measured, a, opts.slack),
            measured,
            witness,
        }
    };

    let membership = run(ProfileMode::Membership, 0.0)?;
    let attaching = check(&membership, 0.0);
    let ladder = if opts.eps_ladder.is_empty() {
        default_ladder(opts.profile.window.unwrap_or(8))
    } else {
        opts.eps_ladder.clone()
    };
    let mut adherent_ladder = Vec::with_capacity(ladder.len());
    for &eps in &ladder {
        let p = run(ProfileMode::Membership, eps)?;
        adherent_ladder.push(check(&p, eps));
    }
    let adherent = adherent_ladder.iter().all(|c| c.holds);
    let (escaping, escape_profile) = match opts.delta {
        Some(delta) => {
            let p = run(ProfileMode::Escape, delta)?;
            (Some(check(&p, delta)), Some(p))
        }
        None => (None, None),
    };
    Ok(AttachReport {
        target: target.describe(),
        sequence: q.label().to_string(),
        threshold: a,
        slack: opts.slack,
        membership,
        attaching,
        adherent_ladder,
        adherent,
        escaping,
        escape_profile,
    })
}

#[allow(clippy::too_many_arguments)]
fn target_profile(
    system: &System,
    x: &State,
    target: &dyn TargetSet,
    q: &IndexSequence,
    schedule: &CheckpointSchedule,
    mode: ProfileMode,
    t: f64,
    opts: &ProfileOptions,
) -> Result<DensityProfile> {
    let decide = |d: Distance| -> Option<bool> {
        match mode {
            ProfileMode::Escape => d.exceeds(t),
            _ if t == 0.0 => match d {
                Distance::Exact(v) => Some(v == 0.0),
                Distance::Below(_) => None,
            },
            _ => d.is_below(t),
        }
    };
    // Interval orbits are walked forward from a cursor; times only grow.
    let cursor: RefCell<(u64, State)> = RefCell::new((0, x.clone()));
    let eval = |time: &BigInt| -> Result<Sample> {
        let d = match x {
            State::Symbolic(p) => target.distance_to(&Observation::Symbolic { point: p, time })?,
            _ => {
                let k = time.to_u64().ok_or_else(|| {
                    Error::MaterializationBound(format!("interval orbit time {time} exceeds u64"))
                })?;
                let mut c = cursor.borrow_mut();
                if k < c.0 {
                    *c = (0, x.clone());
                }
                let steps = k - c.0;
                let next = system.iterate(&c.1, steps)?;
                *c = (k, next);
                target.distance_to(&Observation::Interval(&c.1))?
            }
        };
        Ok(Sample {
            outcome: decide(d),
            distance: Some(d),
        })
    };
    let layout = x.as_symbolic().and_then(|p| p.layout());
    let segment = match opts.strategy {
        Strategy::Enumerate => None,
        _ => layout.zip(target.support()),
    };
    let raw = match segment {
        Some(((l, off), (lo, hi))) => {
            let horizon = BigInt::from(q.nth_big(schedule.last())?);
            let unstable = unstable_intervals(&[(l, off)], lo, hi, &horizon);
            run_engine(&eval, Some(&unstable), q, schedule, opts.witness_limit)?
        }
        None => run_engine(&eval, None, q, schedule, opts.witness_limit)?,
    };
    let window = opts.window.unwrap_or(1);
    finish(raw, mode, t, window, q, opts.tolerance)
}

/// Which scrambling notion a parameter set specializes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScrambleKind {
    /// `Q = P = ℕ`, `a = b = 0`: the orbit comes arbitrarily close to the
    /// diagonal and separates beyond `δ` infinitely often.
    Plain,
    /// `a = b = 1`: distributional scrambling along `(Q, P)`.
    Distributional,
    General,
}

#[derive(Clone, Debug)]
pub struct ScrambleParams {
    pub delta: f64,
    pub q: IndexSequence,
    pub p: IndexSequence,
    pub a: f64,
    pub b: f64,
    /// `None` selects `2^-1 .. 2^-(W-1)` for the profile window `W`
    /// (default 8).
    pub eps_ladder: Option<Vec<f64>>,
    /// Finite-horizon allowance: proximity needs `tail-sup >= a - slack`,
    /// separation needs `tail-inf Φ(δ) <= 1 - b + slack`.
    pub slack: f64,
    pub profile: ProfileOptions,
}

impl ScrambleParams {
    pub fn plain(delta: f64) -> Self {
        ScrambleParams {
            delta,
            q: IndexSequence::naturals(),
            p: IndexSequence::naturals(),
            a: 0.0,
            b: 0.0,
            eps_ladder: None,
            slack: 0.0,
            profile: ProfileOptions::default(),
        }
    }

    pub fn distributional(delta: f64, q: IndexSequence, p: IndexSequence, slack: f64) -> Self {
        ScrambleParams {
            delta,
            q,
            p,
            a: 1.0,
            b: 1.0,
            eps_ladder: None,
            slack,
            profile: ProfileOptions::default(),
        }
    }

    pub fn kind(&self) -> ScrambleKind {
        if self.a == 1.0 && self.b == 1.0 {
            ScrambleKind::Distributional
        } else if self.a == 0.0
            && self.b == 0.0
            && self.q.as_arithmetic() == Some((1, 1))
            && self.p.as_arithmetic() == Some((1, 1))
        {
            ScrambleKind::Plain
        } else {
            ScrambleKind::General
        }
    }

    pub(crate) fn window(&self) -> u32 {
        self.profile.window.unwrap_or(8)
    }

    pub fn ladder(&self) -> Vec<f64> {
        self.eps_ladder
            .clone()
            .unwrap_or_else(|| default_ladder(self.window()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScrambleReport {
    pub n: usize,
    pub kind: ScrambleKind,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub slack: f64,
    pub window: u32,
    pub q: String,
    pub p: String,
    #[serde(with = "numfmt::biguint_vec")]
    pub checkpoints: Vec<BigUint>,
    /// Per ε: tail-sup of `Φ*(ε)` along `Q` with a time where max pairwise
    /// distance was below ε.
    pub proximity: Vec<ThresholdCheck>,
    /// Tail-inf of `Φ(δ)` along `P` with a time where min pairwise distance
    /// was at least δ.
    pub separation: ThresholdCheck,
    pub adherent: bool,
    pub escaping: bool,
    pub scrambled: bool,
    pub profiles: Vec<DensityProfile>,
}

/// Tests the tuple against the scrambling definition parametrized by
/// `(Q, a)` for proximity to the diagonal and `(P, b)` for separation.
pub fn classify_scrambled(
    tuple: &OrbitTuple,
    params: &ScrambleParams,
    schedule: &CheckpointSchedule,
) -> Result<ScrambleReport> {
    if !(params.delta > 0.0) {
        return Err(Error::InvalidParameter("δ must be positive".into()));
    }
    for v in [params.a, params.b] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("threshold {v} outside [0,1]")));
        }
    }
    let window = params.window();
    let opts = ProfileOptions {
        window: Some(window),
        ..params.profile.clone()
    };
    let mut profiles = Vec::new();
    let mut proximity = Vec::new();
    for eps in params.ladder() {
        let p = phi_profile(tuple, eps, &params.q, schedule, ProfileMode::Upper, &opts)?;
        let measured = p.tail_sup();
        let witness = p.witnesses.first().cloned();
        proximity.push(ThresholdCheck {
            parameter: eps,
            holds: witness.is_some() && meets(&measured, params.a, params.slack),
            measured,
            witness,
        });
        profiles.push(p);
    }
    let sep_opts = ProfileOptions {
        window: Some(window.max(crate::systems::window_for(params.delta))),
        ..params.profile.clone()
    };
    let phi = phi_profile(tuple, params.delta, &params.p, schedule, ProfileMode::Lower, &sep_opts)?;
    let phi_inf = phi.tail_inf();
    let allowance = BigRational::from_float(1.0 - params.b + params.slack)
        .unwrap_or_else(BigRational::one);
    let sep_witness = phi.non_events.first().cloned();
    let separation = ThresholdCheck {
        parameter: params.delta,
        holds: sep_witness.is_some() && phi_inf <= allowance,
        measured: phi_inf,
        witness: sep_witness,
    };
    profiles.push(phi);
    let adherent = proximity.iter().all(|c| c.holds);
    let escaping = separation.holds;
    Ok(ScrambleReport {
        n: tuple.len(),
        kind: params.kind(),
        delta: params.delta,
        a: params.a,
        b: params.b,
        slack: params.slack,
        window,
        q: params.q.label().to_string(),
        p: params.p.label().to_string(),
        checkpoints: schedule.checkpoints().to_vec(),
        proximity,
        separation,
        adherent,
        escaping,
        scrambled: adherent && escaping,
        profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numfmt::frac;
    use crate::systems::Alphabet;
    use num_traits::Zero;

    fn a2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn shift() -> System {
        System::full_shift(a2(), Sidedness::OneSided)
    }

    #[test]
    fn alternating_point_visits_half_the_time() {
        let x: State = SymbolicPoint::periodic(a2(), Sidedness::OneSided, &[0, 1]).unwrap().into();
        let cyl = Cylinder::new(vec![0], 0).unwrap();
        let sched = CheckpointSchedule::from_u64(&[10, 100, 1000]).unwrap();
        for (a, expect) in [(0.5, true), (0.4, true), (0.6, false)] {
            let fam = DensityFamily::new(IndexSequence::naturals(), a).unwrap();
            let r = classify_attaching(&shift(), &x, &cyl, &fam, &sched, &AttachOptions::default()).unwrap();
            assert!(r.membership.values().all(|v| *v == frac(1, 2)));
            assert_eq!(r.attaching.holds, expect, "a = {a}");
        }
    }

    #[test]
    fn invariant_target_gives_density_one() {
        let x: State = SymbolicPoint::constant(a2(), Sidedness::OneSided, 0).unwrap().into();
        let cyl = Cylinder::new(vec![0], 0).unwrap();
        let fam = DensityFamily::new(IndexSequence::naturals(), 1.0).unwrap();
        let sched = CheckpointSchedule::from_u64(&[64, 1 << 20]).unwrap();
        let r = classify_attaching(&shift(), &x, &cyl, &fam, &sched, &AttachOptions::default()).unwrap();
        assert!(r.attaching.holds && r.adherent);
    }

    #[test]
    fn constant_ones_escape_cylinder_zero() {
        let x: State = SymbolicPoint::constant(a2(), Sidedness::OneSided, 1).unwrap().into();
        let cyl = Cylinder::new(vec![0], 0).unwrap();
        let fam = DensityFamily::new(IndexSequence::naturals(), 1.0).unwrap();
        let sched = CheckpointSchedule::from_u64(&[64, 4096]).unwrap();
        let opts = AttachOptions {
            delta: Some(0.75),
            ..AttachOptions::default()
        };
        let r = classify_attaching(&shift(), &x, &cyl, &fam, &sched, &opts).unwrap();
        assert!(r.membership.values().all(|v| v.is_zero()));
        assert!(!r.attaching.holds);
        assert!(r.escaping.unwrap().holds);
    }

    #[test]
    fn segmented_membership_matches_enumeration() {
        let runs = vec![(BigInt::from(3), 1u8), (BigInt::from(20), 0), (BigInt::from(21), 1), (BigInt::from(50), 0)];
        let l = crate::systems::RunLayout::new(0, runs).unwrap();
        let x: State = SymbolicPoint::from_layout(a2(), Sidedness::OneSided, l).unwrap().into();
        let cyl = Cylinder::new(vec![1, 0], 2).unwrap();
        let sched = CheckpointSchedule::from_u64(&[5, 30, 90]).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let p = |s| {
                let opts = ProfileOptions {
                    strategy: s,
                    ..ProfileOptions::default()
                };
                target_profile(&shift(), &x, &cyl, &IndexSequence::odds(), &sched, ProfileMode::Membership, t, &opts)
                    .unwrap()
                    .points
            };
            assert_eq!(p(Strategy::Enumerate), p(Strategy::Auto));
        }
    }

    #[test]
    fn interval_predicate_target() {
        // Doubling orbit of 1/3 alternates 1/3, 2/3; target is [0, 1/2].
        let sys = System::interval(crate::systems::IntervalMapSpec::doubling());
        let x = State::Exact(BigRational::new(1.into(), 3.into()));
        let target = Predicate::new("[0,1/2]", |y| match y {
            Observation::Interval(State::Exact(v)) => {
                let half = BigRational::new(1.into(), 2.into());
                let d = if *v <= half { 0.0 } else { (v - half).to_f64().unwrap() };
                Ok(Distance::Exact(d))
            }
            _ => Err(Error::ContractViolation("exact interval states only".into())),
        });
        let fam = DensityFamily::new(IndexSequence::naturals(), 0.5).unwrap();
        let sched = CheckpointSchedule::from_u64(&[10, 20]).unwrap();
        let r = classify_attaching(&sys, &x, &target, &fam, &sched, &AttachOptions::default()).unwrap();
        assert_eq!(r.membership.points[0].value, frac(1, 2));
        assert!(r.attaching.holds);
    }

    #[test]
    fn constants_are_not_scrambled() {
        let a = Alphabet::new(3).unwrap();
        let pts = (0..3)
            .map(|s| SymbolicPoint::constant(a, Sidedness::OneSided, s).unwrap().into())
            .collect();
        let t = OrbitTuple::new(System::full_shift(a, Sidedness::OneSided), pts).unwrap();
        let sched = CheckpointSchedule::from_u64(&[64, 256]).unwrap();
        let r = classify_scrambled(&t, &ScrambleParams::plain(0.5), &sched).unwrap();
        assert_eq!(r.kind, ScrambleKind::Plain);
        assert!(!r.adherent && r.escaping && !r.scrambled);
        assert!(r.proximity.iter().all(|c| c.witness.is_none()));
    }
}
