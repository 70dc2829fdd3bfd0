use serde::{Deserialize, Serialize};

use super::IndexSequence;
use crate::error::{Error, Result};

/// `⌊n/r⌋`.
pub fn phi_floor_map(n: u64, r: u64) -> Result<u64> {
    check_nr(n, r)?;
    Ok(n / r)
}

/// `⌈n/r⌉`.
pub fn phi_ceil_map(n: u64, r: u64) -> Result<u64> {
    check_nr(n, r)?;
    Ok(n.div_ceil(r))
}

fn check_nr(n: u64, r: u64) -> Result<()> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and r >= 1".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformMode {
    FloorImage,
    CeilImage,
    FloorPreimage,
    CeilPreimage,
}

impl TransformMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransformMode::FloorImage => "floor-image",
            TransformMode::CeilImage => "ceil-image",
            TransformMode::FloorPreimage => "floor-preimage",
            TransformMode::CeilPreimage => "ceil-preimage",
        }
    }

    /// Contribution of one element `q` in increasing order; images inside ℕ
    /// only, so `⌊q/r⌋ = 0` is dropped.
    pub(super) fn expand(&self, q: u64, r: u64) -> Result<Vec<u64>> {
        let overflow = || Error::MaterializationBound(format!("{q}·{r} overflows u64"));
        Ok(match self {
            TransformMode::FloorImage => match q / r {
                0 => vec![],
                v => vec![v],
            },
            TransformMode::CeilImage => vec![q.div_ceil(r)],
            TransformMode::FloorPreimage => {
                let lo = q.checked_mul(r).ok_or_else(overflow)?;
                lo.checked_add(r - 1).ok_or_else(overflow)?;
                (lo..lo + r).collect()
            }
            TransformMode::CeilPreimage => {
                let hi = q.checked_mul(r).ok_or_else(overflow)?;
                (hi - r + 1..=hi).collect()
            }
        })
    }
}

/// Image or full preimage of `q` under `⌊·/r⌋` or `⌈·/r⌉`, sorted and
/// deduplicated, enumerated lazily.
pub fn transform_sequence(q: &IndexSequence, r: u64, mode: TransformMode) -> Result<IndexSequence> {
    if r == 0 {
        return Err(Error::InvalidParameter("r must be at least 1".into()));
    }
    if r == 1 {
        return Ok(q.clone());
    }
    Ok(IndexSequence::transformed(q.clone(), r, mode))
}

/// Which half-open convention the length-`r` blocks use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverHalf {
    /// `I_m = [mr, (m+1)r)`
    Left,
    /// `J_m = (mr, (m+1)r]`
    Right,
}

impl CoverHalf {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoverHalf::Left => "left",
            CoverHalf::Right => "right",
        }
    }

    pub(super) fn block_of(&self, q: u64, r: u64) -> u64 {
        match self {
            CoverHalf::Left => q / r,
            CoverHalf::Right => (q - 1) / r,
        }
    }

    /// Inclusive bounds of block `m`.
    pub fn block(&self, m: u64, r: u64) -> (u64, u64) {
        match self {
            CoverHalf::Left => (m * r, m * r + r - 1),
            CoverHalf::Right => (m * r + 1, m * r + r),
        }
    }
}

/// The indices of length-`r` blocks that meet `Q`, with the hit tally.
#[derive(Clone, Debug)]
pub struct CoverQuotient {
    pub blocks: IndexSequence,
    base: IndexSequence,
    r: u64,
    half: CoverHalf,
}

impl CoverQuotient {
    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn half(&self) -> CoverHalf {
        self.half
    }

    /// `#(Q ∩ block)` for block index `m`.
    pub fn hits(&self, m: u64) -> Result<u64> {
        let (lo, hi) = self.half.block(m, self.r);
        let below = if lo == 0 { 0 } else { self.base.count_le(lo - 1)? };
        Ok(self.base.count_le(hi)? - below)
    }

    /// `Σ_{i <= t'} #(Q ∩ block(q'_i))`: how many elements of `Q` the first
    /// `t'` blocks account for. Always between `t'` and `r·t'`.
    pub fn tally(&self, t_prime: usize) -> Result<u64> {
        self.blocks
            .prefix(t_prime)?
            .into_iter()
            .map(|m| self.hits(m))
            .sum()
    }
}

/// Block indices `m` whose block meets `Q`. The index `0` appears when `Q`
/// meets the first block, so unlike other sequences this one may start at 0.
pub fn cover_quotient(q: &IndexSequence, r: u64, half: CoverHalf) -> Result<CoverQuotient> {
    if r < 2 {
        return Err(Error::InvalidParameter("cover quotients need r >= 2".into()));
    }
    Ok(CoverQuotient {
        blocks: IndexSequence::cover(q.clone(), r, half),
        base: q.clone(),
        r,
        half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(v: &[u64]) -> IndexSequence {
        IndexSequence::explicit(v.to_vec()).unwrap()
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(phi_floor_map(7, 3).unwrap(), 2);
        assert_eq!(phi_ceil_map(7, 3).unwrap(), 3);
        for r in 1..6 {
            for k in 1..20 {
                assert_eq!(phi_floor_map(r * k, r).unwrap(), k);
                assert_eq!(phi_ceil_map(r * k, r).unwrap(), k);
            }
        }
        let pre: Vec<u64> = (1..30).filter(|&n| phi_floor_map(n, 3).unwrap() == 2).collect();
        assert_eq!(pre, vec![6, 7, 8]);
    }

    #[test]
    fn images_and_preimages() {
        let img = transform_sequence(&list(&[6, 7, 8]), 3, TransformMode::FloorImage).unwrap();
        assert_eq!(img.take_up_to(10).unwrap(), vec![2]);
        let pre = transform_sequence(&list(&[2]), 3, TransformMode::FloorPreimage).unwrap();
        assert_eq!(pre.take_up_to(10).unwrap(), vec![6, 7, 8]);
        let cpre = transform_sequence(&list(&[2]), 3, TransformMode::CeilPreimage).unwrap();
        assert_eq!(cpre.take_up_to(10).unwrap(), vec![4, 5, 6]);
        let cimg = transform_sequence(&list(&[1, 2, 4, 9]), 3, TransformMode::CeilImage).unwrap();
        assert_eq!(cimg.take_up_to(10).unwrap(), vec![1, 2, 3]);
        // ⌊1/3⌋ = 0 is outside ℕ.
        let low = transform_sequence(&list(&[1, 2, 3]), 3, TransformMode::FloorImage).unwrap();
        assert_eq!(low.take_up_to(10).unwrap(), vec![1]);
    }

    #[test]
    fn identity_at_r_one() {
        for mode in [
            TransformMode::FloorImage,
            TransformMode::CeilImage,
            TransformMode::FloorPreimage,
            TransformMode::CeilPreimage,
        ] {
            let t = transform_sequence(&IndexSequence::naturals(), 1, mode).unwrap();
            assert_eq!(t.prefix(20).unwrap(), (1..=20).collect::<Vec<_>>());
        }
    }

    #[test]
    fn preimage_of_infinite_is_lazy() {
        let pre = transform_sequence(&IndexSequence::evens(), 4, TransformMode::FloorPreimage).unwrap();
        assert_eq!(pre.prefix(6).unwrap(), vec![8, 9, 10, 11, 16, 17]);
        assert_eq!(pre.count_le(17).unwrap(), 6);
    }

    #[test]
    fn cover_examples() {
        let c = cover_quotient(&list(&[5, 6, 14]), 4, CoverHalf::Left).unwrap();
        assert_eq!(c.blocks.take_up_to(10).unwrap(), vec![1, 3]);
        assert_eq!(c.tally(2).unwrap(), 3);
        let c = cover_quotient(&IndexSequence::arithmetic(4, 4).unwrap(), 4, CoverHalf::Left).unwrap();
        assert_eq!(c.blocks.prefix(5).unwrap(), vec![1, 2, 3, 4, 5]);
        let c = cover_quotient(&list(&[1]), 4, CoverHalf::Left).unwrap();
        assert_eq!(c.blocks.take_up_to(3).unwrap(), vec![0]);
        let c = cover_quotient(&list(&[4, 5, 8]), 4, CoverHalf::Right).unwrap();
        assert_eq!(c.blocks.take_up_to(3).unwrap(), vec![0, 1]);
        assert_eq!(c.tally(2).unwrap(), 3);
        assert!(cover_quotient(&list(&[1]), 1, CoverHalf::Left).is_err());
    }
}
