//! Experiment configuration, version 1.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dchaos::chaos::{ProfileMode, Strategy};
use dchaos::Sidedness;

use crate::error::{CliError, CliResult};
use crate::specs::{parse_sequence, MapSpec, PointSpec, ScheduleSpec, SeqSpec};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Fixes every randomized sampling step.
    #[serde(default)]
    pub seed: u64,
    /// Precision window for profiles and verdicts; defaults per analysis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<u32>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    /// Named sequences; analyses refer to these names or to shorthands.
    #[serde(default)]
    pub sequences: BTreeMap<String, SeqSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple: Option<TupleSpec>,
    #[serde(default)]
    pub analyses: Vec<AnalysisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSpec {
    FullShift { symbols: u8, sidedness: Sidedness },
    Interval { map: MapSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TupleSpec {
    SparseBlocks {
        n: u8,
        #[serde(default = "default_blocks")]
        blocks: usize,
        /// Periodic selector words, one per point; constants `0..n` if absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        selectors: Option<Vec<Vec<u8>>>,
        /// Last block whose end enters the design schedule.
        #[serde(default = "default_design_block")]
        design_last_block: usize,
    },
    FullshiftQp {
        n: u8,
        #[serde(default = "naturals")]
        q: String,
        #[serde(default = "naturals")]
        p: String,
        #[serde(default = "default_growth")]
        growth: u64,
        #[serde(default = "default_windows")]
        windows: usize,
        #[serde(default = "default_first_len")]
        first_len: u64,
        /// Trailing proximal times left uncounted; defaults to the window.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        guard: Option<u32>,
        /// Defaults to the schedule end.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<u64>,
    },
    Explicit { points: Vec<PointSpec> },
}

fn default_blocks() -> usize {
    dchaos::constructions::SparseBlockParams::DEFAULT_BLOCKS
}
fn default_design_block() -> usize {
    4
}
fn naturals() -> String {
    "naturals".into()
}
fn default_growth() -> u64 {
    4
}
fn default_windows() -> usize {
    8
}
fn default_first_len() -> u64 {
    16
}
fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    /// Minimum pairwise distance.
    Lower,
    /// Maximum pairwise distance.
    Upper,
}

impl PairMode {
    pub fn profile_mode(self) -> ProfileMode {
        match self {
            PairMode::Lower => ProfileMode::Lower,
            PairMode::Upper => ProfileMode::Upper,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// `#(P ∩ {q_1..q_m}) / m`
    Upper,
    /// Smallest cluster bound `K` over the first `m` elements of `P`.
    Cluster,
    /// Lower Banach density of `P` in windows of width `w`.
    Banach,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalysisSpec {
    Profile {
        name: String,
        mode: PairMode,
        threshold: f64,
        #[serde(default = "naturals")]
        sequence: String,
        #[serde(default)]
        strategy: Strategy,
        /// Tolerated fraction of undecided samples.
        #[serde(default)]
        tolerance: f64,
    },
    Classify {
        name: String,
        delta: f64,
        #[serde(default = "naturals")]
        q: String,
        #[serde(default = "naturals")]
        p: String,
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
        #[serde(default)]
        slack: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps_ladder: Option<Vec<f64>>,
    },
    Witness {
        name: String,
        eps: f64,
        horizon: u64,
        /// Compose a return time divisible by this power.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        power: Option<u64>,
    },
    VerifyPigeonhole {
        name: String,
        n: u8,
        radius: u64,
        samples: usize,
        #[serde(default = "default_blocks")]
        blocks: usize,
    },
    Density {
        name: String,
        measure: Measure,
        p: String,
        #[serde(default = "naturals")]
        q: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_bound: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<u64>,
    },
}

impl AnalysisSpec {
    pub fn name(&self) -> &str {
        match self {
            AnalysisSpec::Profile { name, .. }
            | AnalysisSpec::Classify { name, .. }
            | AnalysisSpec::Witness { name, .. }
            | AnalysisSpec::VerifyPigeonhole { name, .. }
            | AnalysisSpec::Density { name, .. } => name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisSpec::Profile { .. } => "profile",
            AnalysisSpec::Classify { .. } => "classify",
            AnalysisSpec::Witness { .. } => "witness",
            AnalysisSpec::VerifyPigeonhole { .. } => "verify-pigeonhole",
            AnalysisSpec::Density { .. } => "density",
        }
    }

    pub fn needs_tuple(&self) -> bool {
        matches!(
            self,
            AnalysisSpec::Profile { .. } | AnalysisSpec::Classify { .. } | AnalysisSpec::Witness { .. }
        )
    }

    fn sequence_refs(&self) -> Vec<&str> {
        match self {
            AnalysisSpec::Profile { sequence, .. } => vec![sequence],
            AnalysisSpec::Classify { q, p, .. } | AnalysisSpec::Density { q, p, .. } => vec![q, p],
            _ => vec![],
        }
    }
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

impl ExperimentConfig {
    /// An empty version-1 config, for subcommands assembling one from flags.
    pub fn empty() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            seed: 0,
            window: None,
            schedule: ScheduleSpec::default(),
            system: None,
            sequences: BTreeMap::new(),
            tuple: None,
            analyses: Vec::new(),
            output_dir: None,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything serde cannot: version, names, references and
    /// parameter ranges that do not need any computation.
    pub fn validate(&self) -> CliResult<()> {
        if self.version != CONFIG_VERSION {
            return Err(schema(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if let Some(w) = self.window {
            if !(1..=1024).contains(&w) {
                return Err(schema(format!("window {w} outside 1..=1024")));
            }
        }
        self.schedule.explicit().map_err(|e| schema(format!("schedule: {e}")))?;
        for (name, spec) in &self.sequences {
            check_name(name)?;
            if parse_sequence(name).is_ok() {
                return Err(schema(format!("sequence name {name:?} shadows a built-in")));
            }
            spec.build()
                .map_err(|e| schema(format!("sequence {name:?}: {e}")))?;
        }
        match (&self.tuple, &self.system) {
            (Some(TupleSpec::Explicit { points }), None) if !points.is_empty() => {
                return Err(schema("explicit tuples need a system"));
            }
            (Some(TupleSpec::Explicit { points }), _) if points.len() < 2 => {
                return Err(schema("a tuple needs at least two points"));
            }
            (Some(TupleSpec::SparseBlocks { .. } | TupleSpec::FullshiftQp { .. }), Some(_)) => {
                return Err(schema("constructions define their own system; drop the system entry"));
            }
            _ => {}
        }
        if let Some(TupleSpec::FullshiftQp { q, p, .. }) = &self.tuple {
            self.sequence(q)?;
            self.sequence(p)?;
        }
        if matches!(self.schedule, ScheduleSpec::Design)
            && !matches!(
                self.tuple,
                Some(TupleSpec::SparseBlocks { .. } | TupleSpec::FullshiftQp { .. })
            )
            && self.analyses.iter().any(|a| matches!(a, AnalysisSpec::Profile { .. } | AnalysisSpec::Classify { .. }))
        {
            return Err(schema("the design schedule needs a construction tuple"));
        }
        let mut names = BTreeSet::new();
        for a in &self.analyses {
            check_name(a.name())?;
            if a.name() == "construction" || !names.insert(a.name()) {
                return Err(schema(format!("analysis name {:?} is reserved or repeated", a.name())));
            }
            if a.needs_tuple() && self.tuple.is_none() {
                return Err(schema(format!("analysis {:?} needs a tuple", a.name())));
            }
            for r in a.sequence_refs() {
                self.sequence(r)?;
            }
        }
        Ok(())
    }

    /// A declared sequence name or a shorthand.
    pub fn sequence(&self, reference: &str) -> CliResult<dchaos::IndexSequence> {
        match self.sequences.get(reference) {
            Some(spec) => Ok(spec.build()?.with_label(reference)),
            None => parse_sequence(reference)
                .map_err(|_| schema(format!("sequence {reference:?} is neither declared nor a shorthand"))),
        }
    }
}

fn check_name(name: &str) -> CliResult<()> {
    let ok = !name.is_empty()
        && name.len() <= 64
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(schema(format!("name {name:?} must be 1-64 of [A-Za-z0-9._-], not starting with '.'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> CliResult<ExperimentConfig> {
        ExperimentConfig::parse(s)
    }

    #[test]
    fn minimal_config() {
        let c = parse(r#"{"version":1}"#).unwrap();
        assert!(c.analyses.is_empty());
        assert_eq!(c.schedule, ScheduleSpec::Geometric { from: 6, to: 20 });
    }

    #[test]
    fn constructions_and_analyses() {
        let c = parse(
            r#"{"version":1,"schedule":"design",
                "tuple":{"construction":"sparse-blocks","n":3},
                "analyses":[{"kind":"classify","name":"dc","delta":0.5,"slack":0.05}]}"#,
        )
        .unwrap();
        assert!(matches!(c.tuple, Some(TupleSpec::SparseBlocks { n: 3, blocks: 6, .. })));
    }

    #[test]
    fn rejections() {
        for bad in [
            r#"{"version":2}"#,
            r#"{"version":1,"bogus":0}"#,
            r#"{"version":1,"schedule":{"geometric":{"from":9,"to":3}}}"#,
            r#"{"version":1,"analyses":[{"kind":"profile","name":"x","mode":"lower","threshold":0.5}]}"#,
            r#"{"version":1,"analyses":[{"kind":"density","name":"a/b","measure":"upper","p":"evens"}]}"#,
            r#"{"version":1,"analyses":[{"kind":"density","name":"d","measure":"upper","p":"nope"}]}"#,
            r#"{"version":1,"analyses":[
                {"kind":"density","name":"d","measure":"upper","p":"evens"},
                {"kind":"density","name":"d","measure":"upper","p":"odds"}]}"#,
            r#"{"version":1,"system":{"kind":"full-shift","symbols":2,"sidedness":"one-sided"},
                "tuple":{"construction":"sparse-blocks","n":2}}"#,
            r#"{"version":1,"sequences":{"evens":"odds"}}"#,
        ] {
            assert!(matches!(parse(bad), Err(CliError::Schema(_))), "{bad}");
        }
    }

    #[test]
    fn declared_sequences_resolve() {
        let c = parse(
            r#"{"version":1,"sequences":{"Q":"ip:3,5,9"},
                "analyses":[{"kind":"density","name":"k","measure":"cluster","p":"Q","n":2,"m":8,"k_bound":17}]}"#,
        )
        .unwrap();
        assert_eq!(c.sequence("Q").unwrap().label(), "Q");
    }
}
