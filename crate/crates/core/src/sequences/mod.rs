//! Strictly increasing integer sequences (infinite subsets of ℕ), relative
//! densities, the `r`-to-1 quotient maps, the full-density merge, and the
//! cluster / Banach-density predicates.

mod density;
mod merge;
mod predicates;
mod transform;

pub use density::{upper_density, DensityFamily};
pub use merge::{merge_full_density, MergeCheckpoint, MergedSequence};
pub use predicates::{cluster_property_k, ip_set, lower_banach_density};
pub use transform::{
    cover_quotient, phi_ceil_map, phi_floor_map, transform_sequence, CoverHalf, CoverQuotient,
    TransformMode,
};

use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use merge::MergeRun;

/// Closed-form tag of a sequence, echoed in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeqTag {
    Arithmetic,
    Geometric,
    Powers,
    IpSet,
    Merged,
    ExplicitList,
    CoverQuotient,
    Transform,
    Custom,
}

type NthFn = dyn Fn(u64) -> Option<u64> + Send + Sync;

#[derive(Clone)]
enum Kind {
    Arithmetic { start: u64, step: u64 },
    Geometric { start: u64, ratio: u64 },
    Powers { exponent: u32 },
    Explicit(Arc<[u64]>),
    Ip { generators: IndexSequence },
    Merged { sources: Arc<[IndexSequence]>, runs: Arc<[MergeRun]> },
    CoverQuotient { base: IndexSequence, r: u64, half: CoverHalf },
    Transform { base: IndexSequence, r: u64, mode: TransformMode },
    Func(Arc<NthFn>),
}

#[derive(Default)]
struct Memo {
    prefix: Vec<u64>,
    /// Every element `<= covered` is in `prefix`.
    covered: u64,
    exhausted: bool,
    /// Next unread 1-based index of the base sequence (derived kinds).
    cursor: u64,
    /// Largest horizon for which IP sums were computed.
    ip_horizon: u64,
}

struct Inner {
    kind: Kind,
    label: String,
    memo: Mutex<Memo>,
}

/// A lazily enumerable strictly increasing sequence `q_1 < q_2 < ...`.
///
/// Closed forms answer queries directly; other kinds memoize a prefix that
/// is extended under a lock, so a sequence can be shared across threads.
/// Elements are positive, except that cover quotients may contain the block
/// index `0`. Explicit lists are finite; reading past their end is an
/// [`Error::EnumerationExhausted`].
#[derive(Clone)]
pub struct IndexSequence {
    inner: Arc<Inner>,
}

impl fmt::Debug for IndexSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndexSequence")
            .field("label", &self.inner.label)
            .field("tag", &self.tag())
            .finish()
    }
}

pub(crate) const ENUMERATION_LIMIT: usize = 1 << 26;

impl IndexSequence {
    fn make(kind: Kind, label: impl Into<String>) -> Self {
        IndexSequence {
            inner: Arc::new(Inner {
                kind,
                label: label.into(),
                memo: Mutex::new(Memo::default()),
            }),
        }
    }

    /// `start, start + step, start + 2 step, ...`
    pub fn arithmetic(start: u64, step: u64) -> Result<Self> {
        if start == 0 || step == 0 {
            return Err(Error::InvalidParameter(
                "arithmetic sequences need start >= 1 and step >= 1".into(),
            ));
        }
        Ok(Self::make(
            Kind::Arithmetic { start, step },
            format!("arithmetic({start},{step})"),
        ))
    }

    pub fn naturals() -> Self {
        Self::make(Kind::Arithmetic { start: 1, step: 1 }, "naturals")
    }

    pub fn evens() -> Self {
        Self::make(Kind::Arithmetic { start: 2, step: 2 }, "evens")
    }

    pub fn odds() -> Self {
        Self::make(Kind::Arithmetic { start: 1, step: 2 }, "odds")
    }

    /// `start, start·ratio, start·ratio², ...`
    pub fn geometric(start: u64, ratio: u64) -> Result<Self> {
        if start == 0 || ratio < 2 {
            return Err(Error::InvalidParameter(
                "geometric sequences need start >= 1 and ratio >= 2".into(),
            ));
        }
        Ok(Self::make(
            Kind::Geometric { start, ratio },
            format!("geometric({start},{ratio})"),
        ))
    }

    /// `1^e, 2^e, 3^e, ...`
    pub fn powers(exponent: u32) -> Result<Self> {
        if exponent == 0 {
            return Err(Error::InvalidParameter("exponent must be positive".into()));
        }
        let label = match exponent {
            1 => "naturals".to_string(),
            2 => "squares".to_string(),
            3 => "cubes".to_string(),
            e => format!("powers({e})"),
        };
        Ok(Self::make(Kind::Powers { exponent }, label))
    }

    pub fn squares() -> Self {
        Self::powers(2).unwrap()
    }

    /// A finite strictly increasing list of positive integers.
    pub fn explicit(values: Vec<u64>) -> Result<Self> {
        Self::explicit_labeled(values, None)
    }

    pub fn explicit_labeled(values: Vec<u64>, label: Option<String>) -> Result<Self> {
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "explicit sequences must be strictly increasing".into(),
            ));
        }
        if values.first() == Some(&0) {
            return Err(Error::InvalidParameter(
                "explicit sequences live in ℕ = {1, 2, ...}".into(),
            ));
        }
        let label = label.unwrap_or_else(|| {
            let shown: Vec<String> = values.iter().take(8).map(u64::to_string).collect();
            let more = if values.len() > 8 { ",..." } else { "" };
            format!("list({}{more})", shown.join(","))
        });
        Ok(Self::make(Kind::Explicit(values.into()), label))
    }

    /// All finite sums of distinct generators (the pure IP-set), enumerated
    /// lazily by raising a horizon.
    pub fn ip(generators: IndexSequence) -> Self {
        let label = format!("ip({})", generators.label());
        Self::make(Kind::Ip { generators }, label)
    }

    /// A sequence given by its `k`-th element (1-based); `None` ends it.
    /// The function must be strictly increasing in `k`.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(u64) -> Option<u64> + Send + Sync + 'static,
    {
        Self::make(Kind::Func(Arc::new(f)), label)
    }

    pub(crate) fn merged(sources: Arc<[IndexSequence]>, runs: Arc<[MergeRun]>) -> Self {
        let names: Vec<&str> = sources.iter().map(|s| s.label()).collect();
        let label = format!("merge({})", names.join(","));
        Self::make(Kind::Merged { sources, runs }, label)
    }

    pub(crate) fn cover(base: IndexSequence, r: u64, half: CoverHalf) -> Self {
        let label = format!("cover({},{r},{})", base.label(), half.as_str());
        Self::make(Kind::CoverQuotient { base, r, half }, label)
    }

    pub(crate) fn transformed(base: IndexSequence, r: u64, mode: TransformMode) -> Self {
        let label = format!("transform({},{r},{})", base.label(), mode.as_str());
        Self::make(Kind::Transform { base, r, mode }, label)
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    /// Same sequence under a different report label.
    pub fn with_label(&self, label: impl Into<String>) -> Self {
        IndexSequence {
            inner: Arc::new(Inner {
                kind: self.inner.kind.clone(),
                label: label.into(),
                memo: Mutex::new(Memo::default()),
            }),
        }
    }

    pub fn tag(&self) -> SeqTag {
        match &self.inner.kind {
            Kind::Arithmetic { .. } => SeqTag::Arithmetic,
            Kind::Geometric { .. } => SeqTag::Geometric,
            Kind::Powers { .. } => SeqTag::Powers,
            Kind::Explicit(_) => SeqTag::ExplicitList,
            Kind::Ip { .. } => SeqTag::IpSet,
            Kind::Merged { .. } => SeqTag::Merged,
            Kind::CoverQuotient { .. } => SeqTag::CoverQuotient,
            Kind::Transform { .. } => SeqTag::Transform,
            Kind::Func(_) => SeqTag::Custom,
        }
    }

    /// `(start, step)` for arithmetic progressions.
    pub fn as_arithmetic(&self) -> Option<(u64, u64)> {
        match self.inner.kind {
            Kind::Arithmetic { start, step } => Some((start, step)),
            _ => None,
        }
    }

    /// `q_k` for 1-based `k`, or `None` when a finite sequence has ended.
    pub fn try_nth(&self, k: u64) -> Result<Option<u64>> {
        if k == 0 {
            return Err(Error::InvalidParameter("sequence indices are 1-based".into()));
        }
        match &self.inner.kind {
            Kind::Arithmetic { start, step } => (k - 1)
                .checked_mul(*step)
                .and_then(|v| v.checked_add(*start))
                .map(Some)
                .ok_or_else(|| overflow(self.label(), k)),
            Kind::Geometric { start, ratio } => u32::try_from(k - 1)
                .ok()
                .and_then(|e| ratio.checked_pow(e))
                .and_then(|p| p.checked_mul(*start))
                .map(Some)
                .ok_or_else(|| overflow(self.label(), k)),
            Kind::Powers { exponent } => k
                .checked_pow(*exponent)
                .map(Some)
                .ok_or_else(|| overflow(self.label(), k)),
            Kind::Explicit(v) => Ok(v.get((k - 1) as usize).copied()),
            Kind::Merged { sources, runs } => merge::nth(sources, runs, k),
            _ => {
                let mut memo = self.inner.memo.lock().unwrap();
                self.extend_to_len(&mut memo, k as usize)?;
                Ok(memo.prefix.get((k - 1) as usize).copied())
            }
        }
    }

    /// `q_k` for 1-based `k`.
    pub fn nth(&self, k: u64) -> Result<u64> {
        self.try_nth(k)?.ok_or_else(|| {
            Error::EnumerationExhausted(format!("{} has fewer than {k} elements", self.label()))
        })
    }

    /// Exactly the first `m` elements.
    pub fn prefix(&self, m: usize) -> Result<Vec<u64>> {
        let v = self.take_up_to(m)?;
        if v.len() < m {
            return Err(Error::EnumerationExhausted(format!(
                "{} has only {} elements, {m} requested",
                self.label(),
                v.len()
            )));
        }
        Ok(v)
    }

    /// At most the first `m` elements (fewer only for finite sequences).
    pub fn take_up_to(&self, m: usize) -> Result<Vec<u64>> {
        match &self.inner.kind {
            Kind::Explicit(v) => Ok(v[..m.min(v.len())].to_vec()),
            Kind::Arithmetic { .. }
            | Kind::Geometric { .. }
            | Kind::Powers { .. }
            | Kind::Merged { .. } => {
                let mut out = Vec::with_capacity(m.min(ENUMERATION_LIMIT));
                for k in 1..=m as u64 {
                    match self.try_nth(k)? {
                        Some(v) => out.push(v),
                        None => break,
                    }
                }
                Ok(out)
            }
            _ => {
                let mut memo = self.inner.memo.lock().unwrap();
                self.extend_to_len(&mut memo, m)?;
                Ok(memo.prefix[..m.min(memo.prefix.len())].to_vec())
            }
        }
    }

    /// `#{k : q_k <= x}`.
    pub fn count_le(&self, x: u64) -> Result<u64> {
        match &self.inner.kind {
            Kind::Arithmetic { start, step } => Ok(if x < *start {
                0
            } else {
                (x - start) / step + 1
            }),
            Kind::Powers { exponent } => Ok(x.nth_root(*exponent)),
            Kind::Geometric { start, ratio } => {
                let mut count = 0;
                let mut v = *start as u128;
                while v <= x as u128 {
                    count += 1;
                    v *= *ratio as u128;
                }
                Ok(count)
            }
            Kind::Explicit(v) => Ok(v.partition_point(|&e| e <= x) as u64),
            Kind::Merged { sources, runs } => merge::count_le(sources, runs, x),
            _ => {
                let mut memo = self.inner.memo.lock().unwrap();
                self.extend_to_value(&mut memo, x)?;
                Ok(memo.prefix.partition_point(|&e| e <= x) as u64)
            }
        }
    }

    pub fn contains(&self, x: u64) -> Result<bool> {
        match &self.inner.kind {
            Kind::Arithmetic { start, step } => Ok(x >= *start && (x - start).is_multiple_of(*step)),
            Kind::Powers { exponent } => {
                let root = x.nth_root(*exponent);
                Ok(x >= 1 && root.checked_pow(*exponent) == Some(x))
            }
            Kind::Explicit(v) => Ok(v.binary_search(&x).is_ok()),
            Kind::Merged { sources, runs } => merge::contains(sources, runs, x),
            _ => {
                let below = if x == 0 { 0 } else { self.count_le(x - 1)? };
                Ok(self.count_le(x)? > below)
            }
        }
    }

    /// `#{k : q_k <= x}` for arbitrarily large `x`. Closed forms answer
    /// exactly; other kinds need `x` to fit in `u64`.
    pub fn count_le_big(&self, x: &BigUint) -> Result<BigUint> {
        match &self.inner.kind {
            Kind::Arithmetic { start, step } => {
                let start = BigUint::from(*start);
                Ok(if *x < start {
                    BigUint::zero()
                } else {
                    (x - &start) / BigUint::from(*step) + BigUint::one()
                })
            }
            Kind::Powers { exponent } => Ok(x.nth_root(*exponent)),
            Kind::Geometric { start, ratio } => {
                let mut count = BigUint::zero();
                let mut v = BigUint::from(*start);
                while v <= *x {
                    count += 1u32;
                    v *= *ratio;
                }
                Ok(count)
            }
            _ => match x.to_u64() {
                Some(x) => Ok(BigUint::from(self.count_le(x)?)),
                None => Err(Error::MaterializationBound(format!(
                    "{} cannot be counted up to {x}: no closed form",
                    self.label()
                ))),
            },
        }
    }

    /// `q_k` for arbitrarily large 1-based `k` (closed forms only beyond
    /// `u64`).
    pub fn nth_big(&self, k: &BigUint) -> Result<BigUint> {
        if k.is_zero() {
            return Err(Error::InvalidParameter("sequence indices are 1-based".into()));
        }
        let km1 = k - 1u32;
        match &self.inner.kind {
            Kind::Arithmetic { start, step } => Ok(km1 * *step + *start),
            Kind::Powers { exponent } => Ok(k.pow(*exponent)),
            Kind::Geometric { start, ratio } => {
                let e = km1.to_u32().ok_or_else(|| {
                    Error::MaterializationBound(format!("{} element {k} too large", self.label()))
                })?;
                Ok(BigUint::from(*ratio).pow(e) * *start)
            }
            _ => match k.to_u64() {
                Some(k) => Ok(BigUint::from(self.nth(k)?)),
                None => Err(Error::MaterializationBound(format!(
                    "{} element {k}: no closed form",
                    self.label()
                ))),
            },
        }
    }

    /// Iterator over elements; stops at the end of finite sequences and on
    /// the first error.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (1u64..).map_while(move |k| self.try_nth(k).ok().flatten())
    }

    fn extend_to_len(&self, memo: &mut Memo, len: usize) -> Result<()> {
        while memo.prefix.len() < len && !memo.exhausted {
            if memo.prefix.len() >= ENUMERATION_LIMIT {
                return Err(Error::MaterializationBound(format!(
                    "{}: prefix limit of {ENUMERATION_LIMIT} elements",
                    self.label()
                )));
            }
            self.step(memo)?;
        }
        Ok(())
    }

    fn extend_to_value(&self, memo: &mut Memo, x: u64) -> Result<()> {
        while memo.covered < x && !memo.exhausted {
            if memo.prefix.len() >= ENUMERATION_LIMIT {
                return Err(Error::MaterializationBound(format!(
                    "{}: prefix limit of {ENUMERATION_LIMIT} elements",
                    self.label()
                )));
            }
            if let Kind::Ip { .. } = self.inner.kind {
                let target = x.max(memo.ip_horizon.saturating_mul(2)).max(16);
                self.fill_ip(memo, target)?;
            } else {
                self.step(memo)?;
            }
        }
        Ok(())
    }

    /// Produces at least one more element, or marks the sequence exhausted.
    fn step(&self, memo: &mut Memo) -> Result<()> {
        let push = |memo: &mut Memo, v: u64| {
            if memo.prefix.last().is_none_or(|&l| v > l) {
                memo.prefix.push(v);
                memo.covered = v;
            }
        };
        match &self.inner.kind {
            Kind::Func(f) => {
                let k = memo.prefix.len() as u64 + 1;
                match f(k) {
                    Some(v) => {
                        if memo.prefix.last().is_some_and(|&l| v <= l) {
                            return Err(Error::ContractViolation(format!(
                                "{} is not strictly increasing at index {k}",
                                self.label()
                            )));
                        }
                        push(memo, v);
                    }
                    None => memo.exhausted = true,
                }
            }
            Kind::Ip { .. } => {
                let target = memo.ip_horizon.saturating_mul(2).max(16);
                self.fill_ip(memo, target)?;
            }
            Kind::CoverQuotient { base, r, half } => {
                let before = memo.prefix.len();
                while memo.prefix.len() == before {
                    let Some(q) = base.try_nth(memo.cursor.max(1))? else {
                        memo.exhausted = true;
                        memo.covered = u64::MAX;
                        break;
                    };
                    memo.cursor = memo.cursor.max(1) + 1;
                    let block = half.block_of(q, *r);
                    if memo.prefix.is_empty() || block > *memo.prefix.last().unwrap() {
                        memo.prefix.push(block);
                    }
                    memo.covered = block;
                }
            }
            Kind::Transform { base, r, mode } => {
                let before = memo.prefix.len();
                while memo.prefix.len() == before {
                    let Some(q) = base.try_nth(memo.cursor.max(1))? else {
                        memo.exhausted = true;
                        memo.covered = u64::MAX;
                        break;
                    };
                    memo.cursor = memo.cursor.max(1) + 1;
                    for v in mode.expand(q, *r)? {
                        push(memo, v);
                    }
                }
            }
            _ => unreachable!("closed forms are not memoized"),
        }
        Ok(())
    }

    fn fill_ip(&self, memo: &mut Memo, horizon: u64) -> Result<()> {
        let Kind::Ip { generators } = &self.inner.kind else {
            unreachable!()
        };
        let gens = generators.take_up_to(generators.count_le(horizon)? as usize)?;
        let total: u128 = gens.iter().map(|&g| g as u128).sum();
        let finite_and_done = generators.try_nth(gens.len() as u64 + 1)?.is_none()
            && total <= horizon as u128;
        let cap = if finite_and_done { total as u64 } else { horizon };
        memo.prefix = subset_sums_up_to(&gens, cap)?;
        memo.ip_horizon = horizon;
        memo.covered = cap;
        if finite_and_done {
            memo.exhausted = true;
            memo.covered = u64::MAX;
        }
        Ok(())
    }
}

fn overflow(label: &str, k: u64) -> Error {
    Error::MaterializationBound(format!("{label}: element {k} overflows u64"))
}

/// Sorted distinct sums of nonempty subsets of `gens` that are `<= cap`.
pub(crate) fn subset_sums_up_to(gens: &[u64], cap: u64) -> Result<Vec<u64>> {
    if cap as usize > ENUMERATION_LIMIT * 16 {
        return Err(Error::MaterializationBound(format!(
            "subset sums up to {cap} exceed the enumeration limit"
        )));
    }
    let n = cap as usize + 1;
    let words = n.div_ceil(64);
    let mut reach = vec![0u64; words];
    reach[0] = 1; // the empty sum, removed below
    for &g in gens {
        let g = g as usize;
        if g >= n {
            continue;
        }
        let (ws, bs) = (g / 64, g % 64);
        for i in (ws..words).rev() {
            let lo = reach[i - ws] << bs;
            let hi = if bs > 0 && i > ws {
                reach[i - ws - 1] >> (64 - bs)
            } else {
                0
            };
            reach[i] |= lo | hi;
        }
    }
    let mut out = Vec::new();
    for (i, &w) in reach.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let b = w.trailing_zeros() as usize;
            let v = i * 64 + b;
            if v > 0 && v < n {
                out.push(v as u64);
            }
            w &= w - 1;
        }
    }
    Ok(out)
}
