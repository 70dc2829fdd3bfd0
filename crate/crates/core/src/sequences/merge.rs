use std::sync::Arc;

use num_integer::Integer;
use num_rational::Ratio;

use super::IndexSequence;
use crate::error::{Error, Result};

/// One contiguous run of a source inside the merged sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct MergeRun {
    pub source: usize,
    /// 1-based rank in the source of the run's first element.
    pub first_rank: u64,
    pub len: u64,
    pub first_value: u64,
    pub last_value: u64,
    /// Merged-sequence elements before this run.
    pub offset: u64,
}

/// State at the end of one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeCheckpoint {
    pub round: u32,
    /// Index into the source list.
    pub source: usize,
    /// Merged rank of the run's first element.
    pub run_start: u64,
    pub prefix_len: u64,
    /// `#(S_source ∩ {q_1..q_prefix_len})`.
    pub hits: u64,
    pub density: Ratio<u64>,
    /// `1 - 1/round`.
    pub target: Ratio<u64>,
}

impl MergeCheckpoint {
    pub fn meets_target(&self) -> bool {
        self.density >= self.target
    }
}

#[derive(Clone, Debug)]
pub struct MergedSequence {
    /// The merged prefix; a finite sequence of `len()` elements.
    pub sequence: IndexSequence,
    pub checkpoints: Vec<MergeCheckpoint>,
}

impl MergedSequence {
    pub fn len(&self) -> u64 {
        self.checkpoints.last().map_or(0, |c| c.prefix_len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Round-robin run-length merge. In round `t` each of the first
/// `min(t, |S|)` sources appends the shortest run of its own next elements
/// after which its running density in the merged prefix is at least
/// `1 - 1/t` (and at least one element). Every round extends the previous
/// prefix, and all bookkeeping is exact integer arithmetic.
pub fn merge_full_density(sources: &[IndexSequence], rounds: u32) -> Result<MergedSequence> {
    if sources.is_empty() || rounds == 0 {
        return Err(Error::InvalidParameter(
            "merge needs at least one source and one round".into(),
        ));
    }
    let s = sources.len();
    let mut hits = vec![0u64; s];
    let mut len = 0u64;
    let mut max: Option<u64> = None;
    let mut runs = Vec::new();
    let mut checkpoints = Vec::new();
    for t in 1..=rounds {
        for i in 0..(t as usize).min(s) {
            let src = &sources[i];
            let first_rank = match max {
                None => 1,
                Some(m) => src.count_le(m)? + 1,
            };
            let need = (t as i128 - 1) * len as i128 - t as i128 * hits[i] as i128;
            let x = u64::try_from(need.max(1)).map_err(|_| {
                Error::MaterializationBound("merge run length overflows u64".into())
            })?;
            let exhausted = || {
                Error::EnumerationExhausted(format!(
                    "{} stopped before supplying a run of {x} elements",
                    src.label()
                ))
            };
            let first_value = src.try_nth(first_rank)?.ok_or_else(exhausted)?;
            let last_value = src.try_nth(first_rank + x - 1)?.ok_or_else(exhausted)?;
            for (j, target) in sources.iter().enumerate() {
                hits[j] += if j == i {
                    x
                } else {
                    count_in_run(target, src, first_rank, x)?
                };
            }
            runs.push(MergeRun {
                source: i,
                first_rank,
                len: x,
                first_value,
                last_value,
                offset: len,
            });
            let run_start = len + 1;
            len = len.checked_add(x).ok_or_else(|| {
                Error::MaterializationBound("merged prefix length overflows u64".into())
            })?;
            max = Some(last_value);
            checkpoints.push(MergeCheckpoint {
                round: t,
                source: i,
                run_start,
                prefix_len: len,
                hits: hits[i],
                density: Ratio::new(hits[i], len),
                target: Ratio::new(t as u64 - 1, t as u64),
            });
        }
    }
    let sources: Arc<[IndexSequence]> = sources.to_vec().into();
    Ok(MergedSequence {
        sequence: IndexSequence::merged(sources, runs.into()),
        checkpoints,
    })
}

const RUN_SCAN_LIMIT: u64 = 1 << 26;

/// `#{r in [first_rank, first_rank + len) : src_r ∈ target}`.
fn count_in_run(target: &IndexSequence, src: &IndexSequence, first_rank: u64, len: u64) -> Result<u64> {
    if let (Some((aj, dj)), Some((ai, di))) = (target.as_arithmetic(), src.as_arithmetic()) {
        let s0 = first_rank as i128 - 1;
        return Ok(ap_hits(ai as i128, di as i128, aj as i128, dj as i128, s0, s0 + len as i128 - 1));
    }
    if len > RUN_SCAN_LIMIT {
        return Err(Error::MaterializationBound(format!(
            "counting {} inside a run of {len} elements of {} needs a closed form",
            target.label(),
            src.label()
        )));
    }
    let mut count = 0;
    for r in first_rank..first_rank + len {
        if target.contains(src.nth(r)?)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Number of `s ∈ [s_lo, s_hi]` with `ai + di·s` in the progression
/// `aj + dj·ℕ₀`.
fn ap_hits(ai: i128, di: i128, aj: i128, dj: i128, s_lo: i128, s_hi: i128) -> u64 {
    // ai + di·s >= aj
    let s_lo = if aj > ai {
        s_lo.max(Integer::div_ceil(&(aj - ai), &di))
    } else {
        s_lo
    };
    if s_lo > s_hi {
        return 0;
    }
    let g = di.gcd(&dj);
    let c = (aj - ai).rem_euclid(dj);
    if c % g != 0 {
        return 0;
    }
    let m = dj / g;
    let residue = if m == 1 {
        0
    } else {
        let inv = mod_inverse((di / g).rem_euclid(m), m);
        ((c / g) % m * inv).rem_euclid(m)
    };
    let upto = |n: i128| -> i128 {
        if n < residue {
            0
        } else {
            (n - residue) / m + 1
        }
    };
    (upto(s_hi) - upto(s_lo - 1)) as u64
}

fn mod_inverse(a: i128, m: i128) -> i128 {
    let e = a.extended_gcd(&m);
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m)
}

fn total(runs: &[MergeRun]) -> u64 {
    runs.last().map_or(0, |r| r.offset + r.len)
}

pub(super) fn nth(sources: &[IndexSequence], runs: &[MergeRun], k: u64) -> Result<Option<u64>> {
    if k > total(runs) {
        return Ok(None);
    }
    let idx = runs.partition_point(|r| r.offset + r.len < k);
    let run = &runs[idx];
    sources[run.source]
        .nth(run.first_rank + (k - run.offset - 1))
        .map(Some)
}

pub(super) fn count_le(sources: &[IndexSequence], runs: &[MergeRun], x: u64) -> Result<u64> {
    let idx = runs.partition_point(|r| r.last_value <= x);
    if idx == runs.len() {
        return Ok(total(runs));
    }
    let run = &runs[idx];
    let partial = if x < run.first_value {
        0
    } else {
        sources[run.source].count_le(x)? - (run.first_rank - 1)
    };
    Ok(run.offset + partial)
}

pub(super) fn contains(sources: &[IndexSequence], runs: &[MergeRun], x: u64) -> Result<bool> {
    let idx = runs.partition_point(|r| r.last_value < x);
    match runs.get(idx) {
        Some(run) if run.first_value <= x => sources[run.source].contains(x),
        _ => Ok(false),
    }
}
