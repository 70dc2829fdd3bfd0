use std::borrow::Cow;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::chaos::{CheckpointSchedule, OrbitTuple};
use crate::error::{Error, Result};
use crate::numfmt;
use crate::systems::{Alphabet, RunLayout, Sidedness, State, SymbolicPoint, System};

/// Name under which the sparse-block subshift is registered.
pub const SPARSE_BLOCKS: &str = "sparse-blocks";

const MAX_CANONICAL_BLOCKS: usize = 10;

/// Parameters of the sparse-block subshift of `Σ_n`.
///
/// With intervals `I_i = [a_i, a_{i+1})`, the point `z^x` built from a
/// one-sided `x` carries `x_k` on `I_{m_k}` and `0` everywhere else. Only
/// the prefixes `m_0..=m_K` and `a_0..=a_{m_K}` are stored, so `z^x` is
/// known exactly on coordinates below `a_{m_K}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBlockParams {
    alphabet: Alphabet,
    m: Vec<u64>,
    a: Vec<BigUint>,
    canonical: bool,
}

impl SparseBlockParams {
    pub const DEFAULT_BLOCKS: usize = 6;

    /// `m_{k+1} = m_k + 2^{k+1} + 1` and `a_i = (i+1)!`, materialized
    /// through `m_6`.
    pub fn defaults(n: u8) -> Result<Self> {
        Self::canonical(n, Self::DEFAULT_BLOCKS)
    }

    /// The default growth with `m_0..=m_blocks` materialized.
    pub fn canonical(n: u8, blocks: usize) -> Result<Self> {
        if !(1..=MAX_CANONICAL_BLOCKS).contains(&blocks) {
            return Err(Error::MaterializationBound(format!(
                "{blocks} blocks requested; between 1 and {MAX_CANONICAL_BLOCKS} are supported"
            )));
        }
        let mut m = vec![0u64];
        for k in 0..blocks {
            m.push(m[k] + (1u64 << (k + 1)) + 1);
        }
        let last = *m.last().unwrap() as usize;
        let mut a = Vec::with_capacity(last + 1);
        let mut f = BigUint::one();
        for i in 0..=last {
            f *= BigUint::from(i as u64 + 1);
            a.push(f.clone());
        }
        Ok(SparseBlockParams {
            alphabet: Alphabet::new(n)?,
            m,
            a,
            canonical: true,
        })
    }

    /// Explicit prefixes. Requires `m_0 = 0`, `m_{k+1} - m_k > 2^{k+1}`,
    /// `1 <= a_0 < a_1 < ...` with strictly decreasing ratios
    /// `a_i / a_{i+1}`, and `a` long enough to reach index `m_K`.
    pub fn new(n: u8, m: Vec<u64>, a: Vec<BigUint>) -> Result<Self> {
        let alphabet = Alphabet::new(n)?;
        if m.len() < 2 || m[0] != 0 {
            return Err(Error::InvalidParameter(
                "block indices need m_0 = 0 and at least one more entry".into(),
            ));
        }
        for k in 0..m.len() - 1 {
            let gap = m[k + 1].saturating_sub(m[k]);
            if k >= 63 || gap <= 1u64 << (k + 1) {
                return Err(Error::InvalidParameter(format!(
                    "m_{} - m_{k} = {gap} does not exceed 2^{}",
                    k + 1,
                    k + 1
                )));
            }
        }
        let last = *m.last().unwrap() as usize;
        if a.len() <= last {
            return Err(Error::InvalidParameter(format!(
                "lengths must reach index m_K = {last}, got {} entries",
                a.len()
            )));
        }
        let mut a = a;
        a.truncate(last + 1);
        if a[0].is_zero() {
            return Err(Error::InvalidParameter("a_0 must be positive".into()));
        }
        if a.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("lengths a_i must strictly increase".into()));
        }
        // a_i / a_{i+1} > a_{i+1} / a_{i+2} with everything positive.
        if a.windows(3).any(|w| &w[0] * &w[2] <= &w[1] * &w[1]) {
            return Err(Error::InvalidParameter(
                "ratios a_i / a_{i+1} must strictly decrease".into(),
            ));
        }
        Ok(SparseBlockParams {
            alphabet,
            m,
            a,
            canonical: false,
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn m(&self) -> &[u64] {
        &self.m
    }

    pub fn a(&self) -> &[BigUint] {
        &self.a
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Number of blocks `I_{m_k}` lying inside the exact region.
    pub fn blocks(&self) -> usize {
        self.m.len() - 1
    }

    /// `a_{m_K}`: coordinates below it are exact.
    pub fn exact_below(&self) -> &BigUint {
        &self.a[*self.m.last().unwrap() as usize]
    }

    /// `[a_{m_k}, a_{m_k + 1})` for `k < blocks()`.
    pub fn block(&self, k: usize) -> (&BigUint, &BigUint) {
        let i = self.m[k] as usize;
        (&self.a[i], &self.a[i + 1])
    }

    /// Zero run `[a_{m_k + 1}, a_{m_{k+1}})` following block `k`.
    pub fn gap(&self, k: usize) -> (&BigUint, &BigUint) {
        (&self.a[self.m[k] as usize + 1], &self.a[self.m[k + 1] as usize])
    }

    /// `a_i / a_{i+1} <= 1/(i+2)` on the whole materialized prefix.
    pub fn ratio_bound_holds(&self) -> bool {
        self.a
            .windows(2)
            .enumerate()
            .all(|(i, w)| &w[0] * BigUint::from(i as u64 + 2) <= w[1])
    }

    /// The same parameters reaching past coordinate `j`, extending the
    /// canonical choice when needed.
    pub fn covering(&self, j: &BigInt) -> Result<Cow<'_, Self>> {
        if j < &BigInt::from(self.exact_below().clone()) {
            return Ok(Cow::Borrowed(self));
        }
        if !self.canonical {
            return Err(Error::MaterializationBound(format!(
                "coordinate {j} lies beyond the materialized prefix a_(m_K) = {}",
                self.exact_below()
            )));
        }
        for blocks in self.blocks() + 1..=MAX_CANONICAL_BLOCKS {
            let p = Self::canonical(self.alphabet.size(), blocks)?;
            if j < &BigInt::from(p.exact_below().clone()) {
                return Ok(Cow::Owned(p));
            }
        }
        Err(Error::MaterializationBound(format!(
            "coordinate {j} needs more than {MAX_CANONICAL_BLOCKS} blocks"
        )))
    }

    /// `k` with `j ∈ I_{m_k}`, by binary search. `j` must be exact.
    fn block_of(&self, j: &BigInt) -> Option<usize> {
        let j = j.to_biguint()?;
        let i = self.a.partition_point(|a| a <= &j).checked_sub(1)?;
        self.m.binary_search(&(i as u64)).ok()
    }

    /// Smallest `c` such that every block and gap from `c` on is longer
    /// than `2N + 1`, returned as the coordinate `a_{m_c}`. Past it any
    /// window of radius `N` meets at most one block.
    pub fn coincidence_threshold(&self, radius: u64) -> Result<BigUint> {
        let span = BigUint::from(2 * radius + 1);
        let long = |(s, e): (&BigUint, &BigUint)| e - s > span;
        let mut c = None;
        for k in (0..self.blocks()).rev() {
            if long(self.block(k)) && long(self.gap(k)) {
                c = Some(k);
            } else {
                break;
            }
        }
        match c {
            Some(c) => Ok(self.block(c).0.clone()),
            None => Err(Error::MaterializationBound(format!(
                "no materialized block is long enough for radius {radius}"
            ))),
        }
    }
}

fn check_selector(params: &SparseBlockParams, x: &SymbolicPoint) -> Result<()> {
    if x.sidedness() != Sidedness::OneSided || x.alphabet() != params.alphabet {
        return Err(Error::ContractViolation(format!(
            "selector must be a one-sided point over {} symbols",
            params.alphabet.size()
        )));
    }
    Ok(())
}

/// Coordinate `j` of `z^x`, locating `j` by binary search over `a`.
pub fn sparse_block_symbol(params: &SparseBlockParams, x: &SymbolicPoint, j: &BigInt) -> Result<u8> {
    check_selector(params, x)?;
    let p = params.covering(j)?;
    Ok(p.block_of(j).map_or(0, |k| x.symbol(k as i64)))
}

/// As [`sparse_block_symbol`], scanning the blocks in order.
pub fn sparse_block_symbol_linear(
    params: &SparseBlockParams,
    x: &SymbolicPoint,
    j: &BigInt,
) -> Result<u8> {
    check_selector(params, x)?;
    let p = params.covering(j)?;
    let Some(j) = j.to_biguint() else {
        return Ok(0);
    };
    for k in 0..p.blocks() {
        let (s, e) = p.block(k);
        if &j < s {
            break;
        }
        if &j < e {
            return Ok(x.symbol(k as i64));
        }
    }
    Ok(0)
}

/// `z^x` as a two-sided run layout, exact below
/// [`exact_below`](SparseBlockParams::exact_below) and zero beyond.
pub fn sparse_block_point(params: &SparseBlockParams, x: &SymbolicPoint) -> Result<SymbolicPoint> {
    check_selector(params, x)?;
    let mut runs = Vec::with_capacity(2 * params.blocks());
    for k in 0..params.blocks() {
        let (s, e) = params.block(k);
        runs.push((BigInt::from(s.clone()), x.symbol(k as i64)));
        runs.push((BigInt::from(e.clone()), 0));
    }
    SymbolicPoint::from_layout(params.alphabet, Sidedness::TwoSided, RunLayout::new(0, runs)?)
}

/// The subshift the points live in.
pub fn sparse_block_system(params: &SparseBlockParams) -> System {
    System::Subshift {
        alphabet: params.alphabet,
        sidedness: Sidedness::TwoSided,
        name: SPARSE_BLOCKS.into(),
    }
}

/// Ends of blocks `0..=last_block` and of the zero gaps between them, as
/// checkpoints along `ℕ` (times `1..=m`), keeping those `>= min`. Block
/// ends are where visits to the blocks peak; gap ends where they are
/// rarest.
pub fn sparse_block_checkpoints(
    params: &SparseBlockParams,
    last_block: usize,
    min: u64,
) -> Result<CheckpointSchedule> {
    if last_block >= params.blocks() {
        return Err(Error::MaterializationBound(format!(
            "block {last_block} is not materialized ({} blocks)",
            params.blocks()
        )));
    }
    let mut v = Vec::new();
    for k in 0..=last_block {
        v.push(params.block(k).1 - 1u32);
        if k < last_block {
            v.push(params.gap(k).1 - 1u32);
        }
    }
    v.retain(|c| *c >= BigUint::from(min.max(1)));
    v.sort();
    v.dedup();
    CheckpointSchedule::new(v)
}

/// A block `I_{m_k}` on which every pair of points differs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationBlock {
    pub k: usize,
    pub index: u64,
    #[serde(with = "numfmt::biguint")]
    pub start: BigUint,
    #[serde(with = "numfmt::biguint")]
    pub end: BigUint,
}

/// A maximal run `[start, end)` where every point is `0`. At time
/// `center` all points agree on coordinates `-radius..=radius`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroGap {
    #[serde(with = "numfmt::biguint")]
    pub start: BigUint,
    #[serde(with = "numfmt::biguint")]
    pub end: BigUint,
    #[serde(with = "numfmt::biguint")]
    pub center: BigUint,
    #[serde(with = "numfmt::biguint")]
    pub radius: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseBlockCertificate {
    pub n: usize,
    pub m: Vec<u64>,
    /// `x_0 .. x_{K-1}` of each selector.
    pub selectors: Vec<Vec<u8>>,
    #[serde(with = "numfmt::biguint")]
    pub exact_below: BigUint,
    pub separation_blocks: Vec<SeparationBlock>,
    pub zero_gaps: Vec<ZeroGap>,
}

/// `(z^{x_1}, ..., z^{x_n})` with a certificate of its separating blocks
/// and all-zero gaps. Without selectors, the constant points `0, 1, ...,
/// n-1` over the whole alphabet are used.
pub fn sparse_block_tuple(
    params: &SparseBlockParams,
    selectors: Option<&[SymbolicPoint]>,
) -> Result<(OrbitTuple, SparseBlockCertificate)> {
    let owned;
    let xs = match selectors {
        Some(xs) => xs,
        None => {
            owned = params
                .alphabet
                .symbols()
                .map(|s| SymbolicPoint::constant(params.alphabet, Sidedness::OneSided, s))
                .collect::<Result<Vec<_>>>()?;
            &owned
        }
    };
    for x in xs {
        check_selector(params, x)?;
    }
    let kk = params.blocks();
    let words: Vec<Vec<u8>> = xs.iter().map(|x| x.window(0, kk)).collect();
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            if words[i] == words[j] {
                return Err(Error::ContractViolation(format!(
                    "selectors {i} and {j} agree on every materialized block"
                )));
            }
        }
    }
    let mut separation_blocks = Vec::new();
    let mut active = Vec::new();
    for k in 0..kk {
        let col: Vec<u8> = words.iter().map(|w| w[k]).collect();
        if col.iter().any(|&s| s != 0) {
            active.push(k);
        }
        let mut sorted = col.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == col.len() {
            let (s, e) = params.block(k);
            separation_blocks.push(SeparationBlock {
                k,
                index: params.m[k],
                start: s.clone(),
                end: e.clone(),
            });
        }
    }
    let mut zero_gaps = Vec::new();
    for (pos, &k) in active.iter().enumerate() {
        let start = params.block(k).1.clone();
        let end = match active.get(pos + 1) {
            Some(&next) => params.block(next).0.clone(),
            None => params.exact_below().clone(),
        };
        if end > start {
            let radius = (&end - &start - 1u32) / 2u32;
            zero_gaps.push(ZeroGap {
                center: &start + &radius,
                start,
                end,
                radius,
            });
        }
    }
    let points = xs
        .iter()
        .map(|x| sparse_block_point(params, x).map(State::from))
        .collect::<Result<Vec<_>>>()?;
    let tuple = OrbitTuple::new(sparse_block_system(params), points)?;
    Ok((
        tuple,
        SparseBlockCertificate {
            n: xs.len(),
            m: params.m.clone(),
            selectors: words,
            exact_below: params.exact_below().clone(),
            separation_blocks,
            zero_gaps,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use crate::systems::{dyadic, Distance};

    fn small(v: &BigUint) -> Option<u64> {
        v.to_u64()
    }

    fn x210() -> SymbolicPoint {
        let a = Alphabet::new(3).unwrap();
        SymbolicPoint::from_word(a, Sidedness::OneSided, &[2, 1, 0], 0).unwrap()
    }

    #[test]
    fn defaults_follow_the_growth_rules() {
        let p = SparseBlockParams::defaults(3).unwrap();
        assert_eq!(p.m(), &[0, 3, 8, 17, 34, 67, 132]);
        assert_eq!(small(&p.a()[4]), Some(120));
        assert!(p.ratio_bound_holds());
        for k in 0..p.blocks() {
            assert_eq!(p.m()[k + 1] - p.m()[k], (1 << (k + 1)) + 1);
        }
    }

    #[test]
    fn symbol_examples() {
        let p = SparseBlockParams::defaults(3).unwrap();
        let x = x210();
        let z = |j: i64| sparse_block_symbol(&p, &x, &BigInt::from(j)).unwrap();
        assert_eq!(z(1), 2);
        assert_eq!(z(10), 0);
        assert_eq!(z(24), 1);
        assert_eq!(z(119), 1);
        assert_eq!(z(120), 0);
        for j in [-5, 0] {
            assert_eq!(z(j), 0);
        }
        let point = sparse_block_point(&p, &x).unwrap();
        for j in -3..800 {
            assert_eq!(point.symbol(j), z(j));
            assert_eq!(sparse_block_symbol_linear(&p, &x, &BigInt::from(j)).unwrap(), z(j));
        }
    }

    #[test]
    fn extends_past_the_prefix() {
        let p = SparseBlockParams::canonical(2, 2).unwrap();
        let x = SymbolicPoint::constant(Alphabet::new(2).unwrap(), Sidedness::OneSided, 1).unwrap();
        // a_17 = 18!, the start of the block m_3 = 17.
        let a17: BigUint = (1..=18u32).map(BigUint::from).product();
        let j = BigInt::from(a17);
        assert_eq!(sparse_block_symbol(&p, &x, &j).unwrap(), 1);
        assert_eq!(sparse_block_symbol(&p, &x, &(j - 1)).unwrap(), 0);
        let custom = SparseBlockParams::new(2, p.m().to_vec(), p.a().to_vec()).unwrap();
        assert!(matches!(
            sparse_block_symbol(&custom, &x, &BigInt::from(u64::MAX)),
            Err(Error::MaterializationBound(_))
        ));
    }

    #[test]
    fn rejects_bad_params() {
        let a: Vec<BigUint> = (1..20u32).map(|i| BigUint::from(i * i)).collect();
        assert!(SparseBlockParams::new(2, vec![0, 2], a.clone()).is_err());
        assert!(SparseBlockParams::new(2, vec![0, 3], a).is_err());
    }

    #[test]
    fn constant_selectors_separate_and_meet() {
        let p = SparseBlockParams::defaults(3).unwrap();
        let (t, cert) = sparse_block_tuple(&p, None).unwrap();
        assert_eq!(cert.separation_blocks.len(), p.blocks());
        // interior of I_{m_1} = [24, 120)
        assert_eq!(t.extrema_at(60, 8).unwrap().0, Distance::Exact(1.0));
        let gap = cert.zero_gaps.iter().find(|g| g.radius >= BigUint::from(8u32)).unwrap();
        let c = BigInt::from(&gap.start + 8u32);
        assert_eq!(t.extrema_big(&c, 8).unwrap().1, Distance::Below(dyadic(8)));
    }

    #[test]
    fn equal_selectors_are_rejected() {
        let p = SparseBlockParams::defaults(2).unwrap();
        let a = p.alphabet();
        let x = SymbolicPoint::constant(a, Sidedness::OneSided, 1).unwrap();
        assert!(matches!(
            sparse_block_tuple(&p, Some(&[x.clone(), x])),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn threshold_grows_with_radius() {
        let p = SparseBlockParams::defaults(2).unwrap();
        assert_eq!(small(&p.coincidence_threshold(1).unwrap()), Some(24));
        assert_eq!(small(&p.coincidence_threshold(100).unwrap()), Some(362_880));
    }
}
