use num_rational::Ratio;

use super::IndexSequence;
use crate::error::{Error, Result};

/// All finite sums of distinct generators, with every sum `<= horizon`
/// already materialized. The result stays lazily extendable: queries past
/// the horizon raise it.
pub fn ip_set(generators: &IndexSequence, horizon: u64) -> Result<IndexSequence> {
    let ip = IndexSequence::ip(generators.clone());
    ip.count_le(horizon)?;
    Ok(ip)
}

/// Minimum over windows `[s, s+w) ⊆ [1, B]` of `#(P ∩ window) / w`.
/// Shrinks (weakly) as `B` grows.
pub fn lower_banach_density(p: &IndexSequence, w: u64, scan_bound: u64) -> Result<Ratio<u64>> {
    if w == 0 || scan_bound < w {
        return Err(Error::InvalidParameter("need w >= 1 and B >= w".into()));
    }
    let count = p.count_le(scan_bound)?;
    let elems = p.take_up_to(count as usize)?;
    let mut best = u64::MAX;
    // Two pointers over the sorted elements as the window slides right.
    let (mut lo, mut hi) = (0usize, 0usize);
    for s in 1..=scan_bound - w + 1 {
        while lo < elems.len() && elems[lo] < s {
            lo += 1;
        }
        while hi < elems.len() && elems[hi] < s + w {
            hi += 1;
        }
        best = best.min((hi - lo) as u64);
        if best == 0 {
            break;
        }
    }
    Ok(Ratio::new(best, w))
}

/// Smallest `k <= K` such that each of the first `m` elements `i` of `P`
/// has more than `n` elements of `P` within `[i-k, i+k]`.
///
/// Neighbours are read up to `q_m + K`, so every element of the prefix is
/// judged on its full neighbourhood. Returns `None` when no `k <= K` works
/// or `P` has at most `n` elements in reach.
pub fn cluster_property_k(p: &IndexSequence, n: u64, m: usize, k_bound: u64) -> Result<Option<u64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let tested = p.take_up_to(m)?;
    let Some(&last) = tested.last() else {
        return Ok(None);
    };
    let reach = last.saturating_add(k_bound);
    let mut elems = tested.clone();
    while let Some(v) = p.try_nth(elems.len() as u64 + 1)? {
        if v > reach {
            break;
        }
        if elems.len() >= super::ENUMERATION_LIMIT {
            return Err(Error::MaterializationBound(format!(
                "more than {} elements below {reach}",
                super::ENUMERATION_LIMIT
            )));
        }
        elems.push(v);
    }
    if (elems.len() as u64) <= n {
        return Ok(None);
    }
    let mut worst = 0u64;
    for (idx, &i) in tested.iter().enumerate() {
        // Merge outward from i; the n-th nearest other element sets k_i.
        let (mut l, mut r) = (idx, idx + 1);
        let mut k_i = 0u64;
        for _ in 0..n {
            let left = (l > 0).then(|| i - elems[l - 1]);
            let right = elems.get(r).map(|&v| v - i);
            match (left, right) {
                (Some(a), Some(b)) if a <= b => {
                    k_i = a;
                    l -= 1;
                }
                (Some(a), None) => {
                    k_i = a;
                    l -= 1;
                }
                (_, Some(b)) => {
                    k_i = b;
                    r += 1;
                }
                (None, None) => unreachable!("more than n elements are in reach"),
            }
        }
        worst = worst.max(k_i);
        if worst > k_bound {
            return Ok(None);
        }
    }
    Ok(Some(worst))
}
