use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::chaos::{CheckpointSchedule, OrbitTuple};
use crate::error::{Error, Result};
use crate::numfmt;
use crate::sequences::IndexSequence;
use crate::systems::{Alphabet, RunLayout, Sidedness, State, SymbolicPoint, System};

/// Name under which the full-shift construction is registered.
pub const FULLSHIFT_QP: &str = "fullshift-qp";

const MAX_COORDINATE: u64 = 1 << 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// All points carry `0`.
    Proximal,
    /// Point `i` carries symbol `i`.
    Separated,
}

/// Coordinates `[start, end)` of one window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockWindow {
    pub index: usize,
    pub regime: Regime,
    pub start: u64,
    pub end: u64,
}

impl BlockWindow {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Last time counted for this window: proximal windows lose `guard`
    /// trailing times, where the points still agree at coordinate 0 but
    /// not on the whole precision window.
    pub fn last_time(&self, guard: u32) -> Option<u64> {
        let cut = match self.regime {
            Regime::Proximal => guard as u64 + 1,
            Regime::Separated => 1,
        };
        (self.end >= self.start + cut).then(|| self.end - cut)
    }
}

/// Consecutive windows from coordinate 0, each at least `growth` times as
/// long as everything before it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    growth: u64,
    guard: u32,
    windows: Vec<BlockWindow>,
}

impl BlockSchedule {
    /// Windows of the given lengths and regimes.
    pub fn new(lengths: &[u64], regimes: &[Regime], growth: u64, guard: u32) -> Result<Self> {
        if lengths.len() != regimes.len() || lengths.is_empty() {
            return Err(Error::InvalidParameter(
                "need one regime per window and at least one window".into(),
            ));
        }
        if growth < 2 {
            return Err(Error::InvalidParameter(format!("growth {growth} is below 2")));
        }
        let mut windows = Vec::with_capacity(lengths.len());
        let mut start = 0u64;
        for (i, (&len, &regime)) in lengths.iter().zip(regimes).enumerate() {
            if len == 0 || len < growth.saturating_mul(start) {
                return Err(Error::InvalidParameter(format!(
                    "window {} of length {len} does not dominate the {start} coordinates before it",
                    i + 1
                )));
            }
            let end = start
                .checked_add(len)
                .filter(|&e| e <= MAX_COORDINATE)
                .ok_or_else(|| Error::MaterializationBound("window schedule overflows".into()))?;
            windows.push(BlockWindow {
                index: i + 1,
                regime,
                start,
                end,
            });
            start = end;
        }
        Ok(BlockSchedule {
            growth,
            guard,
            windows,
        })
    }

    /// `count` alternating windows, proximal first, with window `t` the
    /// shortest length (from `first_len`, doubling then bisecting) that
    /// dominates by `growth` and lifts the running density of its regime's
    /// times along its sequence (`q` for proximal, `p` for separated) to
    /// `1 - 1/t` at the window's last counted time.
    pub fn adapted(
        q: &IndexSequence,
        p: &IndexSequence,
        growth: u64,
        count: usize,
        first_len: u64,
        guard: u32,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("need at least one window".into()));
        }
        let regimes: Vec<Regime> = (0..count)
            .map(|i| if i % 2 == 0 { Regime::Proximal } else { Regime::Separated })
            .collect();
        let mut lengths: Vec<u64> = Vec::with_capacity(count);
        for t in 1..=count {
            let start: u64 = lengths.iter().sum();
            let floor = first_len.max(growth.saturating_mul(start)).max(guard as u64 + 2);
            let feasible = |len: u64| -> Result<bool> {
                let mut trial = lengths.clone();
                trial.push(len);
                let s = BlockSchedule::new(&trial, &regimes[..t], growth, guard)?;
                let seq = match regimes[t - 1] {
                    Regime::Proximal => q,
                    Regime::Separated => p,
                };
                Ok(s.window_check(t - 1, seq)?.is_some_and(|c| c.meets))
            };
            let mut hi = floor;
            while !feasible(hi)? {
                hi = hi
                    .checked_mul(2)
                    .filter(|&h| start + h <= MAX_COORDINATE)
                    .ok_or_else(|| {
                        Error::InsufficientSchedule(format!(
                            "window {t} cannot reach density 1 - 1/{t}"
                        ))
                    })?;
            }
            let mut lo = floor.max(hi / 2);
            if lo < hi && feasible(lo)? {
                hi = lo;
            }
            while lo + 1 < hi {
                let mid = lo + (hi - lo) / 2;
                if feasible(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            lengths.push(hi);
        }
        BlockSchedule::new(&lengths, &regimes, growth, guard)
    }

    pub fn growth(&self) -> u64 {
        self.growth
    }

    pub fn guard(&self) -> u32 {
        self.guard
    }

    pub fn windows(&self) -> &[BlockWindow] {
        &self.windows
    }

    pub fn end(&self) -> u64 {
        self.windows.last().map_or(0, |w| w.end)
    }

    /// The same lengths with every window proximal.
    pub fn without_separation(&self) -> Self {
        let mut s = self.clone();
        for w in &mut s.windows {
            w.regime = Regime::Proximal;
        }
        s
    }

    /// Running density, along `seq`, of the times counted for windows of
    /// the same regime as window `i`, measured at its last counted time.
    /// `None` if that time precedes every element of `seq`.
    fn window_check(&self, i: usize, seq: &IndexSequence) -> Result<Option<WindowCheck>> {
        let w = &self.windows[i];
        let Some(last) = w.last_time(self.guard) else {
            return Ok(None);
        };
        let total = seq.count_le(last)?;
        if total == 0 {
            return Ok(None);
        }
        let mut hits = 0u64;
        for v in self.windows[..=i].iter().filter(|v| v.regime == w.regime) {
            if let Some(l) = v.last_time(self.guard) {
                let below = if v.start == 0 { 0 } else { seq.count_le(v.start - 1)? };
                hits += seq.count_le(l)? - below;
            }
        }
        let t = w.index as u64;
        let density = numfmt::frac(hits, total);
        let target = numfmt::frac(t - 1, t);
        Ok(Some(WindowCheck {
            index: w.index,
            regime: w.regime,
            sequence: seq.label().to_string(),
            last_time: last,
            checkpoint: total,
            hits,
            meets: density >= target,
            density,
            target,
        }))
    }
}

/// The running density of a window's regime at its last counted time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub index: usize,
    pub regime: Regime,
    pub sequence: String,
    pub last_time: u64,
    /// Number of sequence elements up to `last_time`: the profile
    /// checkpoint at which the density is attained.
    pub checkpoint: u64,
    pub hits: u64,
    #[serde(with = "numfmt::rational")]
    pub density: BigRational,
    #[serde(with = "numfmt::rational")]
    pub target: BigRational,
    pub meets: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullshiftCertificate {
    pub n: usize,
    pub q: String,
    pub p: String,
    pub delta: f64,
    pub horizon: u64,
    pub schedule: BlockSchedule,
    pub checks: Vec<WindowCheck>,
}

impl FullshiftCertificate {
    pub fn all_met(&self) -> bool {
        self.checks.iter().all(|c| c.meets)
    }

    /// Checkpoints of every window check, sorted, for profiling the tuple
    /// along both sequences at once.
    pub fn design_checkpoints(&self) -> Result<CheckpointSchedule> {
        let mut v: Vec<BigUint> = self.checks.iter().map(|c| BigUint::from(c.checkpoint)).collect();
        v.sort();
        v.dedup();
        CheckpointSchedule::new(v)
    }
}

/// An `n`-tuple of one-sided points over `n` symbols that agree
/// everywhere on proximal windows and pairwise disagree at every
/// coordinate of separated windows. After the last window the last regime
/// continues.
pub fn fullshift_scrambled_tuple(
    n: u8,
    q: &IndexSequence,
    p: &IndexSequence,
    schedule: &BlockSchedule,
    horizon: u64,
) -> Result<(OrbitTuple, FullshiftCertificate)> {
    let alphabet = Alphabet::new(n)?;
    let ws = schedule.windows();
    if ws.len() < 2 || horizon < ws[1].end {
        return Err(Error::InsufficientSchedule(format!(
            "horizon {horizon} does not span two windows"
        )));
    }
    if schedule.end() < horizon {
        return Err(Error::InsufficientSchedule(format!(
            "windows end at {} before the horizon {horizon}",
            schedule.end()
        )));
    }
    let points = (0..n)
        .map(|i| {
            let runs = ws
                .iter()
                .map(|w| {
                    let s = match w.regime {
                        Regime::Proximal => 0,
                        Regime::Separated => i,
                    };
                    (BigInt::from(w.start), s)
                })
                .collect();
            SymbolicPoint::from_layout(alphabet, Sidedness::OneSided, RunLayout::new(0, runs)?)
                .map(State::from)
        })
        .collect::<Result<Vec<_>>>()?;
    let tuple = OrbitTuple::new(System::full_shift(alphabet, Sidedness::OneSided), points)?;
    let mut checks = Vec::new();
    for (i, w) in ws.iter().enumerate() {
        if w.end > horizon {
            break;
        }
        let seq = match w.regime {
            Regime::Proximal => q,
            Regime::Separated => p,
        };
        if let Some(c) = schedule.window_check(i, seq)? {
            checks.push(c);
        }
    }
    Ok((
        tuple,
        FullshiftCertificate {
            n: n as usize,
            q: q.label().to_string(),
            p: p.label().to_string(),
            delta: 0.5,
            horizon,
            schedule: schedule.clone(),
            checks,
        },
    ))
}
