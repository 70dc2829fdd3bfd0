use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sparse::{sparse_block_point, SparseBlockParams};
use crate::chaos::symbol_at_time;
use crate::error::{Error, Result};
use crate::numfmt;
use crate::systems::{dyadic, scan_offsets, Distance, Sidedness, SymbolicPoint};

/// A window read as `0^r a^s 0^t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowForm {
    pub point: usize,
    pub r: u64,
    pub s: u64,
    pub t: u64,
    /// The block symbol `a`; `0` when `s = 0`.
    pub symbol: u8,
}

/// Two of the points share the whole window `[k - N, k + N]`, so their
/// distance at time `k` is below `2^-N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PigeonholeCertificate {
    pub radius: u64,
    #[serde(with = "numfmt::bigint")]
    pub center: BigInt,
    #[serde(with = "numfmt::biguint")]
    pub threshold: BigUint,
    pub forms: Vec<WindowForm>,
    pub pair: (usize, usize),
    /// `d(σ^k z^{i_1}, σ^k z^{i_2})` at window `N + 1`.
    pub distance: Distance,
    pub bound: f64,
}

fn decompose(point: usize, w: &[u8]) -> Option<WindowForm> {
    let r = w.iter().take_while(|&&s| s == 0).count();
    if r == w.len() {
        return Some(WindowForm {
            point,
            r: r as u64,
            s: 0,
            t: 0,
            symbol: 0,
        });
    }
    let t = w.iter().rev().take_while(|&&s| s == 0).count();
    let mid = &w[r..w.len() - t];
    let a = mid[0];
    mid.iter().all(|&s| s == a).then_some(WindowForm {
        point,
        r: r as u64,
        s: mid.len() as u64,
        t: t as u64,
        symbol: a,
    })
}

/// Checks that among `n + 1` points of the sparse-block subshift two agree
/// on `[k - N, k + N]`. Any window that is not `0^r a^s 0^t`, or a tuple
/// without a coinciding pair, is reported as a contract violation: it
/// would contradict the construction.
pub fn verify_pigeonhole(
    params: &SparseBlockParams,
    points: &[SymbolicPoint],
    radius: u64,
    center: &BigInt,
) -> Result<PigeonholeCertificate> {
    let n = params.alphabet().size() as usize;
    if points.len() < n + 1 {
        return Err(Error::InvalidParameter(format!(
            "{} points given; the coincidence needs at least {}",
            points.len(),
            n + 1
        )));
    }
    if radius == 0 || radius > 1 << 20 {
        return Err(Error::InvalidParameter(format!("radius {radius} outside 1..=2^20")));
    }
    for p in points {
        if p.sidedness() != Sidedness::TwoSided || p.alphabet() != params.alphabet() {
            return Err(Error::ContractViolation(
                "points must be two-sided over the parameter alphabet".into(),
            ));
        }
    }
    let threshold = params.coincidence_threshold(radius)?;
    let lo = center - radius;
    if lo < BigInt::from(threshold.clone()) {
        return Err(Error::Precondition(format!(
            "window starts at {lo}, below the coincidence threshold {threshold}"
        )));
    }
    let hi = center + radius;
    if hi >= BigInt::from(params.exact_below().clone()) {
        return Err(Error::MaterializationBound(format!(
            "window ends at {hi}, past the exact region below {}",
            params.exact_below()
        )));
    }
    let r = radius as i64;
    let mut forms = Vec::with_capacity(points.len());
    let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut pair = None;
    for (i, p) in points.iter().enumerate() {
        let w = (-r..=r)
            .map(|j| symbol_at_time(p, center, j))
            .collect::<Result<Vec<u8>>>()?;
        let form = decompose(i, &w).ok_or_else(|| {
            Error::ContractViolation(format!(
                "counterexample: point {i} at center {center} reads {w:?}, not 0^r a^s 0^t"
            ))
        })?;
        forms.push(form);
        if pair.is_none() {
            if let Some(&first) = seen.get(&w) {
                pair = Some((first, i));
            } else {
                seen.insert(w, i);
            }
        }
    }
    let pair = pair.ok_or_else(|| {
        Error::ContractViolation(format!(
            "counterexample: no two of {} windows coincide at center {center}",
            points.len()
        ))
    })?;
    let w = radius as u32 + 1;
    let (a, b) = (&points[pair.0], &points[pair.1]);
    let mut distance = Distance::Below(dyadic(w));
    for j in scan_offsets(Sidedness::TwoSided, w) {
        if symbol_at_time(a, center, j)? != symbol_at_time(b, center, j)? {
            distance = Distance::Exact(dyadic(j.unsigned_abs() as u32));
            break;
        }
    }
    let bound = dyadic(radius as u32);
    if distance.is_below(bound) != Some(true) {
        return Err(Error::ContractViolation(format!(
            "counterexample: coinciding windows at distance {distance:?}"
        )));
    }
    Ok(PigeonholeCertificate {
        radius,
        center: center.clone(),
        threshold,
        forms,
        pair,
        distance,
        bound,
    })
}

/// `count` points `z^x` with independent uniform selector prefixes.
pub fn random_points<R: Rng>(
    params: &SparseBlockParams,
    count: usize,
    rng: &mut R,
) -> Result<Vec<SymbolicPoint>> {
    let alpha = params.alphabet();
    (0..count)
        .map(|_| {
            let word: Vec<u8> = (0..params.blocks())
                .map(|_| rng.random_range(0..alpha.size()))
                .collect();
            let x = SymbolicPoint::from_word(alpha, Sidedness::OneSided, &word, 0)?;
            sparse_block_point(params, &x)
        })
        .collect()
}

fn below<R: Rng>(bound: &BigUint, rng: &mut R) -> BigUint {
    match u64::try_from(bound) {
        Ok(0) => BigUint::ZERO,
        Ok(b) => BigUint::from(rng.random_range(0..b)),
        Err(_) => BigUint::from(rng.random::<u64>()),
    }
}

/// `count` centers admissible for [`verify_pigeonhole`] at `radius`. Most
/// sit within `2N + 1` of a block edge, where windows straddle the edge;
/// every fourth lands anywhere in a block or gap.
pub fn random_centers<R: Rng>(
    params: &SparseBlockParams,
    radius: u64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<BigInt>> {
    let threshold = BigInt::from(params.coincidence_threshold(radius)?);
    let lo = &threshold + radius;
    let hi = BigInt::from(params.exact_below().clone()) - radius - 1;
    if lo > hi {
        return Err(Error::MaterializationBound(format!(
            "no admissible centers for radius {radius}"
        )));
    }
    let first = params
        .a()
        .iter()
        .position(|a| BigInt::from(a.clone()) == threshold)
        .and_then(|i| params.m().iter().position(|&m| m as usize == i))
        .expect("threshold is a block start");
    let span = 2 * radius as i64 + 1;
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        let k = rng.random_range(first..params.blocks());
        let (bs, be) = params.block(k);
        let (gs, ge) = params.gap(k);
        let raw = if c % 4 == 3 {
            let (s, e) = if rng.random_bool(0.5) { (bs, be) } else { (gs, ge) };
            BigInt::from(s + below(&(e - s), rng))
        } else {
            let edge = if rng.random_bool(0.5) { bs } else { be };
            BigInt::from(edge.clone()) + rng.random_range(-span..=span)
        };
        out.push(raw.clamp(lo.clone(), hi.clone()));
    }
    Ok(out)
}
