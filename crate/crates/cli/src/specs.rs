//! Compact string and JSON forms of sequences, points, maps and schedules.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use dchaos::chaos::CheckpointSchedule;
use dchaos::sequences::{cover_quotient, merge_full_density, transform_sequence, CoverHalf, TransformMode};
use dchaos::systems::{IntervalMapSpec, RunLayout};
use dchaos::{Alphabet, IndexSequence, Sidedness, State, SymbolicPoint};

use crate::error::{CliError, CliResult};

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn nums(list: &str, what: &str) -> CliResult<Vec<u64>> {
    list.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| schema(format!("{what}: {v:?} is not a natural number")))
        })
        .collect()
}

/// Parses `naturals`, `evens`, `odds`, `squares`, `arithmetic:a:d`,
/// `geometric:a:r`, `powers:k`, `ip:g1,g2,...` or `list:v1,v2,...`.
pub fn parse_sequence(spec: &str) -> CliResult<IndexSequence> {
    let mut parts = spec.splitn(2, ':');
    let head = parts.next().unwrap_or_default().trim();
    let rest = parts.next();
    let two = |rest: Option<&str>| -> CliResult<(u64, u64)> {
        let v = nums(&rest.unwrap_or_default().replace(':', ","), spec)?;
        match v[..] {
            [a, b] => Ok((a, b)),
            _ => Err(schema(format!("{spec}: expected two parameters"))),
        }
    };
    let seq = match (head, rest) {
        ("naturals", None) => IndexSequence::naturals(),
        ("evens", None) => IndexSequence::evens(),
        ("odds", None) => IndexSequence::odds(),
        ("squares", None) => IndexSequence::squares(),
        ("arithmetic", r) => {
            let (a, d) = two(r)?;
            IndexSequence::arithmetic(a, d)?
        }
        ("geometric", r) => {
            let (a, q) = two(r)?;
            IndexSequence::geometric(a, q)?
        }
        ("powers", Some(k)) => {
            let k: u32 = k.trim().parse().map_err(|_| schema(format!("{spec}: bad exponent")))?;
            IndexSequence::powers(k)?
        }
        ("ip", Some(g)) => {
            let gens = IndexSequence::explicit(nums(g, spec)?)?;
            IndexSequence::ip(gens).with_label(format!("ip({g})"))
        }
        ("list", Some(v)) => IndexSequence::explicit(nums(v, spec)?)?,
        _ => return Err(schema(format!("unknown sequence {spec:?}"))),
    };
    Ok(seq)
}

/// A sequence as a shorthand string or a structured combinator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeqSpec {
    Short(String),
    Node(SeqNode),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeqNode {
    List { values: Vec<u64> },
    Arithmetic { start: u64, step: u64 },
    Geometric { start: u64, ratio: u64 },
    Ip { generators: Vec<u64> },
    /// Density-one merge of the sources over `rounds` rounds; finite.
    Merge { sources: Vec<SeqSpec>, rounds: u32 },
    CoverQuotient { base: Box<SeqSpec>, r: u64, half: CoverHalf },
    Transform { base: Box<SeqSpec>, r: u64, mode: TransformMode },
}

impl SeqSpec {
    pub fn build(&self) -> CliResult<IndexSequence> {
        match self {
            SeqSpec::Short(s) => parse_sequence(s),
            SeqSpec::Node(n) => n.build(),
        }
    }
}

impl SeqNode {
    fn build(&self) -> CliResult<IndexSequence> {
        Ok(match self {
            SeqNode::List { values } => IndexSequence::explicit(values.clone())?,
            SeqNode::Arithmetic { start, step } => IndexSequence::arithmetic(*start, *step)?,
            SeqNode::Geometric { start, ratio } => IndexSequence::geometric(*start, *ratio)?,
            SeqNode::Ip { generators } => {
                let label = generators.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
                IndexSequence::ip(IndexSequence::explicit(generators.clone())?).with_label(format!("ip({label})"))
            }
            SeqNode::Merge { sources, rounds } => {
                let s = sources.iter().map(SeqSpec::build).collect::<CliResult<Vec<_>>>()?;
                merge_full_density(&s, *rounds)?.sequence
            }
            SeqNode::CoverQuotient { base, r, half } => cover_quotient(&base.build()?, *r, *half)?.blocks,
            SeqNode::Transform { base, r, mode } => transform_sequence(&base.build()?, *r, *mode)?,
        })
    }
}

/// `from:to` with arbitrary-precision integers.
pub fn parse_range(s: &str) -> CliResult<(BigInt, BigInt)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| schema(format!("range {s:?} must read from:to")))?;
    let p = |v: &str| -> CliResult<BigInt> {
        v.trim().parse().map_err(|_| schema(format!("range {s:?}: {v:?} is not an integer")))
    };
    let (a, b) = (p(a)?, p(b)?);
    if a >= b {
        return Err(schema(format!("range {s:?} is empty")));
    }
    Ok((a, b))
}

/// A natural number written as a JSON number or a decimal string, for
/// checkpoints too large for JSON numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BigNat {
    Small(u64),
    Text(String),
}

impl BigNat {
    pub fn value(&self) -> CliResult<BigUint> {
        match self {
            BigNat::Small(v) => Ok(BigUint::from(*v)),
            BigNat::Text(s) => s.trim().parse().map_err(|_| schema(format!("{s:?} is not a natural number"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// Checkpoints `2^from, ..., 2^to`.
    Geometric { from: u32, to: u32 },
    Checkpoints(Vec<BigNat>),
    /// The checkpoints the tuple's construction was designed for.
    Design,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Geometric { from: 6, to: 20 }
    }
}

impl ScheduleSpec {
    /// `FROM:TO` (binary exponents) or `design`.
    pub fn parse(s: &str) -> CliResult<Self> {
        if s == "design" {
            return Ok(ScheduleSpec::Design);
        }
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| schema(format!("schedule {s:?} must read FROM:TO or design")))?;
        let p = |v: &str| v.trim().parse::<u32>().map_err(|_| schema(format!("schedule {s:?}: bad exponent {v:?}")));
        Ok(ScheduleSpec::Geometric { from: p(a)?, to: p(b)? })
    }

    /// The explicit schedule, or `None` for [`ScheduleSpec::Design`].
    pub fn explicit(&self) -> CliResult<Option<CheckpointSchedule>> {
        match self {
            ScheduleSpec::Geometric { from, to } => {
                if *to > 4096 {
                    return Err(schema(format!("schedule exponent {to} is too large")));
                }
                Ok(Some(CheckpointSchedule::geometric(*from, *to)?))
            }
            ScheduleSpec::Checkpoints(v) => {
                let v = v.iter().map(BigNat::value).collect::<CliResult<Vec<_>>>()?;
                Ok(Some(CheckpointSchedule::new(v)?))
            }
            ScheduleSpec::Design => Ok(None),
        }
    }
}

/// A rational written as a JSON number or as `"p/q"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalSpec {
    Float(f64),
    Text(String),
}

impl RationalSpec {
    pub fn value(&self) -> CliResult<BigRational> {
        match self {
            RationalSpec::Float(f) => {
                BigRational::from_float(*f).ok_or_else(|| schema(format!("{f} is not finite")))
            }
            RationalSpec::Text(s) => {
                let bad = || schema(format!("{s:?} is not a rational p/q"));
                let (n, d) = s.split_once('/').unwrap_or((s.as_str(), "1"));
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                if d == BigInt::from(0) {
                    return Err(bad());
                }
                Ok(BigRational::new(n, d))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    Tent,
    Doubling,
    PiecewiseLinear {
        breakpoints: Vec<RationalSpec>,
        values: Vec<RationalSpec>,
    },
}

impl MapSpec {
    pub fn build(&self) -> CliResult<IntervalMapSpec> {
        Ok(match self {
            MapSpec::Tent => IntervalMapSpec::tent(),
            MapSpec::Doubling => IntervalMapSpec::doubling(),
            MapSpec::PiecewiseLinear { breakpoints, values } => {
                let conv = |v: &[RationalSpec]| v.iter().map(RationalSpec::value).collect::<CliResult<Vec<_>>>();
                IntervalMapSpec::piecewise_linear(conv(breakpoints)?, conv(values)?)?
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PointSpec {
    Constant(u8),
    Periodic(Vec<u8>),
    /// `word` at coordinates `0..len`, `fill` elsewhere.
    Word { word: Vec<u8>, fill: u8 },
    /// Run starts with their symbols; `before` below the first start.
    Runs { before: u8, runs: Vec<(BigNat, u8)> },
    Real(f64),
    Exact(RationalSpec),
}

impl PointSpec {
    pub fn build(&self, shift: Option<(Alphabet, Sidedness)>) -> CliResult<State> {
        let need = || {
            shift.ok_or_else(|| schema("symbolic points need a full-shift system"))
        };
        Ok(match self {
            PointSpec::Constant(s) => {
                let (a, side) = need()?;
                SymbolicPoint::constant(a, side, *s)?.into()
            }
            PointSpec::Periodic(w) => {
                let (a, side) = need()?;
                SymbolicPoint::periodic(a, side, w)?.into()
            }
            PointSpec::Word { word, fill } => {
                let (a, side) = need()?;
                SymbolicPoint::from_word(a, side, word, *fill)?.into()
            }
            PointSpec::Runs { before, runs } => {
                let (a, side) = need()?;
                let runs = runs
                    .iter()
                    .map(|(s, sym)| Ok((BigInt::from(s.value()?), *sym)))
                    .collect::<CliResult<Vec<_>>>()?;
                SymbolicPoint::from_layout(a, side, RunLayout::new(*before, runs)?)?.into()
            }
            PointSpec::Real(x) => State::Real(*x),
            PointSpec::Exact(r) => State::Exact(r.value()?),
        })
    }
}
