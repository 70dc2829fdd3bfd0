use std::io::{self, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::tuple::OrbitTuple;
use crate::error::{Error, Result};
use crate::numfmt::{self, decimal};
use crate::sequences::{IndexSequence, SeqTag};
use crate::systems::{window_for, Distance, RunLayout, Sidedness};

/// Which event a profile counts along `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileMode {
    /// min pairwise distance `< t`
    #[serde(rename = "min-pairwise-below-t")]
    Lower,
    /// max pairwise distance `< t`
    #[serde(rename = "max-pairwise-below-t")]
    Upper,
    /// distance to a target set `< t` (`t = 0`: membership in the set)
    #[serde(rename = "membership")]
    Membership,
    /// distance to a target set `> t`
    #[serde(rename = "distance-above-t")]
    Escape,
}

impl ProfileMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileMode::Lower => "min-pairwise-below-t",
            ProfileMode::Upper => "max-pairwise-below-t",
            ProfileMode::Membership => "membership",
            ProfileMode::Escape => "distance-above-t",
        }
    }
}

/// Strictly increasing prefix lengths `m` at which profiles are reported.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointSchedule {
    #[serde(with = "numfmt::biguint_vec")]
    checkpoints: Vec<BigUint>,
}

impl CheckpointSchedule {
    pub fn new(checkpoints: Vec<BigUint>) -> Result<Self> {
        if checkpoints.is_empty() {
            return Err(Error::InvalidParameter("schedule has no checkpoints".into()));
        }
        if checkpoints[0].is_zero() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "checkpoints must be positive and strictly increasing".into(),
            ));
        }
        Ok(CheckpointSchedule { checkpoints })
    }

    pub fn from_u64(checkpoints: &[u64]) -> Result<Self> {
        Self::new(checkpoints.iter().map(|&m| BigUint::from(m)).collect())
    }

    /// `2^lo, 2^(lo+1), ..., 2^hi`.
    pub fn geometric(lo: u32, hi: u32) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParameter("empty geometric schedule".into()));
        }
        Self::new((lo..=hi).map(|e| BigUint::one() << e).collect())
    }

    pub fn checkpoints(&self) -> &[BigUint] {
        &self.checkpoints
    }

    pub fn last(&self) -> &BigUint {
        self.checkpoints.last().expect("nonempty")
    }

    /// Checkpoints `<= bound`, or an error if none remain.
    pub fn truncated(&self, bound: &BigUint) -> Result<Self> {
        Self::new(self.checkpoints.iter().filter(|m| *m <= bound).cloned().collect())
    }
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        Self::geometric(6, 20).unwrap()
    }
}

/// How a profile walks the time axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Segmented when every point is layout-backed, else enumerated.
    #[default]
    Auto,
    /// Evaluate every `q_k`.
    Enumerate,
    /// Evaluate once per stretch where every point's window is constant,
    /// and individually near run boundaries. Counts along `Q` come from
    /// its closed form, so astronomically long horizons stay cheap.
    Segmented,
}

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    /// Precision window; `None` picks the smallest window that decides
    /// every comparison against the threshold.
    pub window: Option<u32>,
    /// Largest tolerated fraction of indeterminate samples at any
    /// checkpoint.
    pub tolerance: f64,
    pub strategy: Strategy,
    /// Event times recorded as witnesses.
    pub witness_limit: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            window: None,
            tolerance: 0.0,
            strategy: Strategy::Auto,
            witness_limit: 4,
        }
    }
}

impl ProfileOptions {
    pub fn with_window(window: u32) -> Self {
        ProfileOptions {
            window: Some(window),
            ..Self::default()
        }
    }

    pub(crate) fn window_for(&self, t: f64) -> u32 {
        self.window
            .unwrap_or_else(|| if t > 0.0 { window_for(t) } else { 1 })
            .max(1)
    }
}

/// A time `q_k` at which the counted event occurred.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "numfmt::biguint")]
    pub rank: BigUint,
    #[serde(with = "numfmt::bigint")]
    pub time: BigInt,
    pub distance: Option<Distance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    #[serde(with = "numfmt::biguint")]
    pub checkpoint: BigUint,
    #[serde(with = "numfmt::biguint")]
    pub hits: BigUint,
    #[serde(with = "numfmt::biguint")]
    pub indeterminate: BigUint,
    /// `hits / checkpoint`
    #[serde(with = "numfmt::rational")]
    pub value: BigRational,
}

/// Exact event frequencies along `Q` at each checkpoint.
///
/// Limits are never claimed: [`tail_sup`](Self::tail_sup) and
/// [`tail_inf`](Self::tail_inf) are the extreme values over the
/// materialized checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub mode: ProfileMode,
    pub threshold: f64,
    pub window: u32,
    pub sequence: String,
    pub sequence_tag: SeqTag,
    pub points: Vec<ProfilePoint>,
    /// Earliest times where the event held.
    pub witnesses: Vec<Witness>,
    /// Earliest times where it was decided not to hold.
    pub non_events: Vec<Witness>,
}

pub const CSV_HEADER: &str =
    "checkpoint_m,value_decimal,value_num,value_den,indeterminate_count,mode,threshold,sequence";

impl DensityProfile {
    pub fn values(&self) -> impl Iterator<Item = &BigRational> {
        self.points.iter().map(|p| &p.value)
    }

    pub fn tail_sup(&self) -> BigRational {
        self.tail_sup_from(0)
    }

    pub fn tail_inf(&self) -> BigRational {
        self.tail_inf_from(0)
    }

    /// Max over checkpoints with index `>= from`.
    pub fn tail_sup_from(&self, from: usize) -> BigRational {
        self.points[from.min(self.points.len() - 1)..]
            .iter()
            .map(|p| p.value.clone())
            .max()
            .expect("nonempty profile")
    }

    pub fn tail_inf_from(&self, from: usize) -> BigRational {
        self.points[from.min(self.points.len() - 1)..]
            .iter()
            .map(|p| p.value.clone())
            .min()
            .expect("nonempty profile")
    }

    pub fn value_at(&self, checkpoint: &BigUint) -> Option<&BigRational> {
        self.points
            .iter()
            .find(|p| &p.checkpoint == checkpoint)
            .map(|p| &p.value)
    }

    pub fn total_indeterminate(&self) -> BigUint {
        self.points.last().map_or_else(BigUint::zero, |p| p.indeterminate.clone())
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> io::Result<()> {
        if header {
            writeln!(out, "{CSV_HEADER}")?;
        }
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.checkpoint,
                decimal(&p.value, 12),
                p.value.numer(),
                p.value.denom(),
                p.indeterminate,
                self.mode.as_str(),
                self.threshold,
                csv_field(&self.sequence)
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, true).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Outcome of one evaluation: `Some(event)` or `None` when the precision
/// window cannot decide.
pub(crate) struct Sample {
    pub outcome: Option<bool>,
    pub distance: Option<Distance>,
}

pub(crate) struct RawProfile {
    pub points: Vec<(BigUint, BigUint, BigUint)>,
    pub witnesses: Vec<Witness>,
    pub non_events: Vec<Witness>,
}

/// Time stretches `[c - hi, c - lo - 1]` (at least one time)
/// around every run boundary `c`, clipped to `[1, horizon]`, sorted and
/// merged. Outside them every point's coordinates `lo..=hi` are constant.
pub(crate) fn unstable_intervals(
    layouts: &[(&RunLayout, i64)],
    lo: i64,
    hi: i64,
    horizon: &BigInt,
) -> Vec<(BigInt, BigInt)> {
    let one = BigInt::one();
    let mut v: Vec<(BigInt, BigInt)> = Vec::new();
    for (layout, off) in layouts {
        for b in layout.boundaries() {
            let c: BigInt = b - *off;
            let s: BigInt = (&c - hi).max(one.clone());
            let e: BigInt = (&c - lo - 1i64).max(&c - hi).min(horizon.clone());
            if s <= e {
                v.push((s, e));
            }
        }
    }
    v.sort();
    let mut merged: Vec<(BigInt, BigInt)> = Vec::with_capacity(v.len());
    for (s, e) in v {
        match merged.last_mut() {
            Some((_, le)) if s <= &*le + 1 => {
                if e > *le {
                    *le = e;
                }
            }
            _ => merged.push((s, e)),
        }
    }
    merged
}

fn to_uint(x: &BigInt) -> BigUint {
    x.to_biguint().expect("nonnegative")
}

/// Counts event times along `q` at each checkpoint. `unstable == None`
/// evaluates every `q_k`; otherwise stretches between the listed intervals
/// are evaluated once.
pub(crate) fn run_engine(
    eval: &dyn Fn(&BigInt) -> Result<Sample>,
    unstable: Option<&[(BigInt, BigInt)]>,
    q: &IndexSequence,
    schedule: &CheckpointSchedule,
    witness_limit: usize,
) -> Result<RawProfile> {
    let times: Vec<BigInt> = schedule
        .checkpoints()
        .iter()
        .map(|m| q.nth_big(m).map(BigInt::from))
        .collect::<Result<_>>()?;
    let horizon = times.last().unwrap().clone();
    let one = BigInt::one();

    // (start, end, stable)
    let mut segments: Vec<(BigInt, BigInt, bool)> = Vec::new();
    match unstable {
        None => segments.push((one.clone(), horizon.clone(), false)),
        Some(list) => {
            let mut cursor = one.clone();
            for (s, e) in list {
                if *s > horizon {
                    break;
                }
                if *s > cursor {
                    segments.push((cursor.clone(), s - 1, true));
                }
                let e = e.clone().min(horizon.clone());
                segments.push((s.clone(), e.clone(), false));
                cursor = e + 1;
            }
            if cursor <= horizon {
                segments.push((cursor, horizon.clone(), true));
            }
        }
    }

    let mut st = EngineState {
        hits: BigUint::zero(),
        indet: BigUint::zero(),
        witnesses: Vec::new(),
        non_events: Vec::new(),
        witness_limit,
    };
    let mut points = Vec::with_capacity(times.len());
    let mut cp = 0usize;
    'outer: for (s, e, stable) in segments {
        let mut s = s;
        loop {
            let hit_cp = cp < times.len() && times[cp] <= e;
            let end = if hit_cp { times[cp].clone() } else { e.clone() };
            st.process(eval, q, &s, &end, stable)?;
            if hit_cp {
                points.push((
                    schedule.checkpoints()[cp].clone(),
                    st.hits.clone(),
                    st.indet.clone(),
                ));
                cp += 1;
                if cp == times.len() {
                    break 'outer;
                }
            }
            if end == e {
                break;
            }
            s = end + 1;
        }
    }
    Ok(RawProfile {
        points,
        witnesses: st.witnesses,
        non_events: st.non_events,
    })
}

struct EngineState {
    hits: BigUint,
    indet: BigUint,
    witnesses: Vec<Witness>,
    non_events: Vec<Witness>,
    witness_limit: usize,
}

impl EngineState {
    fn record(&mut self, rank: BigUint, time: &BigInt, sample: &Sample, count: BigUint) {
        let list = match sample.outcome {
            Some(true) => {
                self.hits += count;
                &mut self.witnesses
            }
            Some(false) => &mut self.non_events,
            None => {
                self.indet += count;
                return;
            }
        };
        if list.len() < self.witness_limit {
            list.push(Witness {
                rank,
                time: time.clone(),
                distance: sample.distance,
            });
        }
    }

    fn wants(&self, sample: &Sample) -> bool {
        match sample.outcome {
            Some(true) => self.witnesses.len() < self.witness_limit,
            Some(false) => self.non_events.len() < self.witness_limit,
            None => false,
        }
    }

    fn process(
        &mut self,
        eval: &dyn Fn(&BigInt) -> Result<Sample>,
        q: &IndexSequence,
        s: &BigInt,
        e: &BigInt,
        stable: bool,
    ) -> Result<()> {
        if s > e {
            return Ok(());
        }
        let before = q.count_le_big(&to_uint(&(s - 1)))?;
        if stable {
            let upto = q.count_le_big(&to_uint(e))?;
            if upto > before {
                let rank = &before + 1u32;
                let time = BigInt::from(q.nth_big(&rank)?);
                let sample = eval(&time)?;
                self.record(rank.clone(), &time, &sample, &upto - &before);
                // Coordinates are frozen here, so later ranks share the sample.
                let mut rank = rank;
                while rank < upto && self.wants(&sample) {
                    rank += 1u32;
                    let time = BigInt::from(q.nth_big(&rank)?);
                    self.record(rank.clone(), &time, &sample, BigUint::zero());
                }
            }
            return Ok(());
        }
        // Small u64 ranges walk the sequence directly.
        if let (Some(mut rank), Some(e64)) = (before.to_u64(), e.to_u64()) {
            loop {
                rank += 1;
                let Some(v) = q.try_nth(rank)? else { break };
                if v > e64 {
                    break;
                }
                let time = BigInt::from(v);
                let sample = eval(&time)?;
                self.record(BigUint::from(rank), &time, &sample, BigUint::one());
            }
            return Ok(());
        }
        let mut rank = before;
        loop {
            rank += 1u32;
            let time = BigInt::from(q.nth_big(&rank)?);
            if &time > e {
                break;
            }
            let sample = eval(&time)?;
            self.record(rank.clone(), &time, &sample, BigUint::one());
        }
        Ok(())
    }
}

pub(crate) fn finish(
    raw: RawProfile,
    mode: ProfileMode,
    threshold: f64,
    window: u32,
    q: &IndexSequence,
    tolerance: f64,
) -> Result<DensityProfile> {
    let tol = BigRational::from_float(tolerance).unwrap_or_else(BigRational::zero);
    let mut points = Vec::with_capacity(raw.points.len());
    for (m, hits, indet) in raw.points {
        let frac_indet = numfmt::ratio(&indet, &m);
        if frac_indet > tol {
            let needed = if threshold > 0.0 {
                window_for(threshold).max(window + 1)
            } else {
                window + 1
            };
            return Err(Error::PrecisionInsufficient {
                needed_window: needed,
                detail: format!(
                    "{indet} of {m} samples undecided at window {window} against threshold {threshold}"
                ),
            });
        }
        points.push(ProfilePoint {
            value: numfmt::ratio(&hits, &m),
            checkpoint: m,
            hits,
            indeterminate: indet,
        });
    }
    Ok(DensityProfile {
        mode,
        threshold,
        window,
        sequence: q.label().to_string(),
        sequence_tag: q.tag(),
        points,
        witnesses: raw.witnesses,
        non_events: raw.non_events,
    })
}

/// Coordinate span `(lo, hi)` scanned by the metric at window `w`.
pub(crate) fn scan_span(side: Sidedness, w: u32) -> (i64, i64) {
    match side {
        Sidedness::OneSided => (0, w as i64),
        Sidedness::TwoSided => (-(w as i64), w as i64),
    }
}

/// Layouts of every point when all of them are layout-backed.
pub(crate) fn all_layouts(tuple: &OrbitTuple) -> Option<Vec<(&RunLayout, i64)>> {
    tuple
        .symbolic_points()?
        .into_iter()
        .map(|p| p.layout())
        .collect()
}

/// Fraction of `k <= m` (at each checkpoint `m`) with the min (lower mode)
/// or max (upper mode) pairwise distance at time `q_k` strictly below `t`.
///
/// Samples a window cannot decide are counted separately as indeterminate;
/// if their fraction exceeds `opts.tolerance` at any checkpoint the result
/// is [`Error::PrecisionInsufficient`].
pub fn phi_profile(
    tuple: &OrbitTuple,
    t: f64,
    q: &IndexSequence,
    schedule: &CheckpointSchedule,
    mode: ProfileMode,
    opts: &ProfileOptions,
) -> Result<DensityProfile> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold {t} must be positive")));
    }
    if !matches!(mode, ProfileMode::Lower | ProfileMode::Upper) {
        return Err(Error::InvalidParameter(
            "phi profiles use the lower or upper mode".into(),
        ));
    }
    let window = opts.window_for(t);
    let eval = |time: &BigInt| -> Result<Sample> {
        let (lo, hi) = tuple.extrema_big(time, window)?;
        let d = if mode == ProfileMode::Lower { lo } else { hi };
        Ok(Sample {
            outcome: d.is_below(t),
            distance: Some(d),
        })
    };
    let layouts = all_layouts(tuple);
    let segmented = match opts.strategy {
        Strategy::Enumerate => false,
        Strategy::Auto => layouts.is_some(),
        Strategy::Segmented => {
            if layouts.is_none() {
                return Err(Error::InvalidParameter(
                    "segmented profiles need layout-backed shift points".into(),
                ));
            }
            true
        }
    };
    let raw = if segmented {
        let side = tuple.system().sidedness().expect("symbolic");
        let (lo, hi) = scan_span(side, window);
        let horizon = BigInt::from(q.nth_big(schedule.last())?);
        let unstable = unstable_intervals(&layouts.unwrap(), lo, hi, &horizon);
        run_engine(&eval, Some(&unstable), q, schedule, opts.witness_limit)?
    } else {
        run_engine(&eval, None, q, schedule, opts.witness_limit)?
    };
    finish(raw, mode, t, window, q, opts.tolerance)
}
