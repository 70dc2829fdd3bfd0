use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::distance::{dyadic, Distance};
use crate::error::{Error, Result};

/// Symbol set `{0, 1, ..., n-1}` with `n >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Alphabet(u8);

impl Alphabet {
    pub fn new(size: u8) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidParameter(format!(
                "alphabet size must be at least 2, got {size}"
            )));
        }
        Ok(Alphabet(size))
    }

    pub fn size(&self) -> u8 {
        self.0
    }

    pub fn contains(&self, symbol: u8) -> bool {
        symbol < self.0
    }

    pub fn symbols(&self) -> impl Iterator<Item = u8> {
        0..self.0
    }
}

impl TryFrom<u8> for Alphabet {
    type Error = Error;
    fn try_from(size: u8) -> Result<Self> {
        Alphabet::new(size)
    }
}

impl From<Alphabet> for u8 {
    fn from(a: Alphabet) -> u8 {
        a.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Run-length description of a total symbol sequence.
///
/// Coordinates below the first run start carry `before`; run `i` covers
/// `[start_i, start_{i+1})` and the last run extends to infinity. Starts are
/// arbitrary-precision so layouts can describe points whose structure lives
/// at astronomically large coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunLayout {
    before: u8,
    runs: Vec<(BigInt, u8)>,
}

impl RunLayout {
    /// Builds a layout, merging adjacent runs that carry the same symbol.
    pub fn new(before: u8, runs: Vec<(BigInt, u8)>) -> Result<Self> {
        let mut merged: Vec<(BigInt, u8)> = Vec::with_capacity(runs.len());
        let mut current = before;
        for (start, symbol) in runs {
            if let Some((last, _)) = merged.last() {
                if start <= *last {
                    return Err(Error::InvalidParameter(
                        "run starts must be strictly increasing".into(),
                    ));
                }
            }
            if symbol == current {
                continue;
            }
            merged.push((start, symbol));
            current = symbol;
        }
        Ok(RunLayout {
            before,
            runs: merged,
        })
    }

    pub fn constant(symbol: u8) -> Self {
        RunLayout {
            before: symbol,
            runs: Vec::new(),
        }
    }

    pub fn before(&self) -> u8 {
        self.before
    }

    pub fn runs(&self) -> &[(BigInt, u8)] {
        &self.runs
    }

    /// Coordinates `b` where `symbol(b - 1) != symbol(b)`.
    pub fn boundaries(&self) -> impl Iterator<Item = &BigInt> {
        self.runs.iter().map(|(s, _)| s)
    }

    pub fn symbol_at(&self, index: &BigInt) -> u8 {
        match self.runs.partition_point(|(s, _)| s <= index) {
            0 => self.before,
            p => self.runs[p - 1].1,
        }
    }

    pub fn symbol_at_i64(&self, index: i64) -> u8 {
        self.symbol_at(&BigInt::from(index))
    }

    fn max_symbol(&self) -> u8 {
        self.runs
            .iter()
            .map(|(_, s)| *s)
            .fold(self.before, u8::max)
    }
}

#[derive(Clone)]
enum Oracle {
    Func(Arc<dyn Fn(i64) -> u8 + Send + Sync>),
    Layout(Arc<RunLayout>),
}

/// A point of a full shift, given by a total coordinate oracle plus an
/// accumulated shift offset.
///
/// Querying index `i` of a point shifted by `k` returns coordinate `i + k`
/// of the original. Oracles are immutable after creation.
#[derive(Clone)]
pub struct SymbolicPoint {
    alphabet: Alphabet,
    sidedness: Sidedness,
    oracle: Oracle,
    offset: i64,
}

impl fmt::Debug for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let start = match self.sidedness {
            Sidedness::OneSided => 0,
            Sidedness::TwoSided => -4,
        };
        let window: String = (start..start + 12)
            .map(|i| char::from_digit(self.symbol(i) as u32, 36).unwrap_or('?'))
            .collect();
        f.debug_struct("SymbolicPoint")
            .field("alphabet", &self.alphabet.size())
            .field("sidedness", &self.sidedness)
            .field("offset", &self.offset)
            .field("layout", &matches!(self.oracle, Oracle::Layout(_)))
            .field("window", &window)
            .finish()
    }
}

impl SymbolicPoint {
    /// Wraps a coordinate function. The function must be deterministic and
    /// return symbols of `alphabet`; one-sided points are only queried at
    /// non-negative indices.
    pub fn from_fn<F>(alphabet: Alphabet, sidedness: Sidedness, f: F) -> Self
    where
        F: Fn(i64) -> u8 + Send + Sync + 'static,
    {
        SymbolicPoint {
            alphabet,
            sidedness,
            oracle: Oracle::Func(Arc::new(f)),
            offset: 0,
        }
    }

    pub fn from_layout(
        alphabet: Alphabet,
        sidedness: Sidedness,
        layout: RunLayout,
    ) -> Result<Self> {
        if !alphabet.contains(layout.max_symbol()) {
            return Err(Error::InvalidParameter(format!(
                "layout uses symbol {} outside an alphabet of size {}",
                layout.max_symbol(),
                alphabet.size()
            )));
        }
        Ok(SymbolicPoint {
            alphabet,
            sidedness,
            oracle: Oracle::Layout(Arc::new(layout)),
            offset: 0,
        })
    }

    pub fn constant(alphabet: Alphabet, sidedness: Sidedness, symbol: u8) -> Result<Self> {
        Self::from_layout(alphabet, sidedness, RunLayout::constant(symbol))
    }

    /// `word` at coordinates `0..word.len()`, `fill` everywhere else.
    pub fn from_word(
        alphabet: Alphabet,
        sidedness: Sidedness,
        word: &[u8],
        fill: u8,
    ) -> Result<Self> {
        let mut runs: Vec<(BigInt, u8)> = word
            .iter()
            .enumerate()
            .map(|(i, &s)| (BigInt::from(i), s))
            .collect();
        runs.push((BigInt::from(word.len()), fill));
        Self::from_layout(alphabet, sidedness, RunLayout::new(fill, runs)?)
    }

    /// The periodic point `word word word ...` (extended periodically to
    /// negative indices for two-sided points).
    pub fn periodic(alphabet: Alphabet, sidedness: Sidedness, word: &[u8]) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidParameter("periodic word must be nonempty".into()));
        }
        if let Some(&s) = word.iter().find(|&&s| !alphabet.contains(s)) {
            return Err(Error::InvalidParameter(format!(
                "symbol {s} outside alphabet of size {}",
                alphabet.size()
            )));
        }
        let word: Arc<[u8]> = word.into();
        let period = word.len() as i64;
        Ok(Self::from_fn(alphabet, sidedness, move |i| {
            word[i.rem_euclid(period) as usize]
        }))
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// The backing run layout and the offset applied to it, when the point
    /// is layout-backed.
    pub fn layout(&self) -> Option<(&RunLayout, i64)> {
        match &self.oracle {
            Oracle::Layout(l) => Some((l, self.offset)),
            Oracle::Func(_) => None,
        }
    }

    /// Coordinate `index` of the (shifted) point.
    ///
    /// # Panics
    /// On a negative index for a one-sided point.
    pub fn symbol(&self, index: i64) -> u8 {
        assert!(
            self.sidedness == Sidedness::TwoSided || index >= 0,
            "one-sided points have no coordinate {index}"
        );
        let i = index
            .checked_add(self.offset)
            .expect("coordinate index overflow");
        match &self.oracle {
            Oracle::Func(f) => f(i),
            Oracle::Layout(l) => l.symbol_at_i64(i),
        }
    }

    /// `sigma^k` applied to the point; an O(1) offset adjustment.
    pub fn shift(&self, k: u64) -> Result<Self> {
        let k = i64::try_from(k)
            .ok()
            .and_then(|k| self.offset.checked_add(k))
            .ok_or_else(|| Error::MaterializationBound(format!("shift by {k} overflows i64")))?;
        Ok(SymbolicPoint {
            offset: k,
            ..self.clone()
        })
    }

    /// True iff `symbol(anchor + i) == word[i]` for all `i`.
    pub fn in_cylinder(&self, word: &[u8], anchor: i64) -> bool {
        word.iter()
            .enumerate()
            .all(|(i, &s)| self.symbol(anchor + i as i64) == s)
    }

    pub fn window(&self, from: i64, len: usize) -> Vec<u8> {
        (0..len as i64).map(|i| self.symbol(from + i)).collect()
    }
}

/// Scan order of coordinate indices for a window `W`: `0..=W` one-sided,
/// `0, -1, 1, -2, 2, ...` up to `|i| <= W` two-sided. The first index in
/// this order where two points disagree fixes the distance `2^{-|i|}`.
pub fn scan_offsets(sidedness: Sidedness, window: u32) -> impl Iterator<Item = i64> {
    let w = window as i64;
    (0..=w).flat_map(move |j| {
        let neg = (sidedness == Sidedness::TwoSided && j > 0).then_some(-j);
        std::iter::once(j).chain(neg)
    })
}

/// Shift-metric distance evaluated to precision window `window`.
pub fn symbolic_distance(a: &SymbolicPoint, b: &SymbolicPoint, window: u32) -> Result<Distance> {
    if a.sidedness != b.sidedness {
        return Err(Error::ContractViolation(
            "distance between one-sided and two-sided points".into(),
        ));
    }
    for i in scan_offsets(a.sidedness, window) {
        if a.symbol(i) != b.symbol(i) {
            return Ok(Distance::Exact(dyadic(i.unsigned_abs() as u32)));
        }
    }
    Ok(Distance::Below(dyadic(window)))
}
