//! Executes a validated config: builds the tuple once, runs each analysis
//! in order and hands every report and profile to the output sink.

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use dchaos::chaos::{
    classify_scrambled, phi_profile, power_recurrence_compose, proximal_recurrent_witness,
    uniform_proximality_time, uniform_recurrence_time, CheckpointSchedule, DensityProfile, OrbitTuple,
    ProfileOptions, ScrambleParams,
};
use dchaos::constructions::{
    fullshift_scrambled_tuple, random_centers, random_points, sparse_block_checkpoints, sparse_block_tuple,
    verify_pigeonhole, BlockSchedule, SparseBlockParams,
};
use dchaos::numfmt;
use dchaos::sequences::{cluster_property_k, lower_banach_density, upper_density};
use dchaos::{Alphabet, Sidedness, State, SymbolicPoint, System};

use crate::config::{AnalysisSpec, ExperimentConfig, Measure, SystemSpec, TupleSpec};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

pub const SCHEMA_VERSION: u32 = 1;

/// Design checkpoints below this are dropped: at tiny prefixes every
/// profile value is trivially 0 or 1.
const DESIGN_MIN_CHECKPOINT: u64 = 64;
const DEFAULT_WINDOW: u32 = 8;
/// Largest window `construct` exports.
const MAX_EXPORT: u64 = 1 << 26;

/// The JSON wrapper around every report and certificate.
#[derive(Clone, Debug, Serialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub kind: String,
    pub name: String,
    pub report: Value,
}

/// One finished analysis: its envelope and the profiles it measured.
pub struct Outcome {
    pub envelope: Envelope,
    pub profiles: Vec<(String, DensityProfile)>,
}

/// The tuple a config describes, with its construction certificate and
/// design schedule when it came from a construction.
pub struct Built {
    pub tuple: OrbitTuple,
    pub construction: Option<Envelope>,
    pub design: Option<CheckpointSchedule>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn envelope(kind: &str, name: &str, report: impl Serialize) -> CliResult<Envelope> {
    Ok(Envelope {
        schema_version: SCHEMA_VERSION,
        kind: kind.into(),
        name: name.into(),
        report: serde_json::to_value(report)?,
    })
}

fn system_of(spec: &SystemSpec) -> CliResult<System> {
    Ok(match spec {
        SystemSpec::FullShift { symbols, sidedness } => System::full_shift(Alphabet::new(*symbols)?, *sidedness),
        SystemSpec::Interval { map } => System::interval(map.build()?),
    })
}

pub fn build_tuple(cfg: &ExperimentConfig) -> CliResult<Option<Built>> {
    let Some(spec) = &cfg.tuple else { return Ok(None) };
    let built = match spec {
        TupleSpec::SparseBlocks {
            n,
            blocks,
            selectors,
            design_last_block,
        } => {
            let params = SparseBlockParams::canonical(*n, *blocks)?;
            let xs = selectors
                .as_ref()
                .map(|ws| {
                    ws.iter()
                        .map(|w| SymbolicPoint::periodic(params.alphabet(), Sidedness::OneSided, w))
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?;
            let (tuple, cert) = sparse_block_tuple(&params, xs.as_deref())?;
            let design = sparse_block_checkpoints(&params, *design_last_block, DESIGN_MIN_CHECKPOINT)?;
            Built {
                tuple,
                construction: Some(envelope("construction", "sparse-blocks", &cert)?),
                design: Some(design),
            }
        }
        TupleSpec::FullshiftQp {
            n,
            q,
            p,
            growth,
            windows,
            first_len,
            guard,
            horizon,
        } => {
            let (qs, ps) = (cfg.sequence(q)?, cfg.sequence(p)?);
            let guard = guard.or(cfg.window).unwrap_or(DEFAULT_WINDOW);
            let schedule = BlockSchedule::adapted(&qs, &ps, *growth, *windows, *first_len, guard)?;
            let horizon = horizon.unwrap_or(schedule.end());
            let (tuple, cert) = fullshift_scrambled_tuple(*n, &qs, &ps, &schedule, horizon)?;
            let design = cert.design_checkpoints()?;
            Built {
                tuple,
                construction: Some(envelope("construction", "fullshift-qp", &cert)?),
                design: Some(design),
            }
        }
        TupleSpec::Explicit { points } => {
            let system = system_of(cfg.system.as_ref().ok_or_else(|| schema("explicit tuples need a system"))?)?;
            let shift = system.alphabet().zip(system.sidedness());
            let states = points
                .iter()
                .map(|p| p.build(shift))
                .collect::<CliResult<Vec<State>>>()?;
            Built {
                tuple: OrbitTuple::new(system, states)?,
                construction: None,
                design: None,
            }
        }
    };
    Ok(Some(built))
}

fn schedule_for(cfg: &ExperimentConfig, built: &Built) -> CliResult<CheckpointSchedule> {
    match cfg.schedule.explicit()? {
        Some(s) => Ok(s),
        None => built
            .design
            .clone()
            .ok_or_else(|| schema("the design schedule needs a construction tuple")),
    }
}

fn profile_options(cfg: &ExperimentConfig) -> ProfileOptions {
    ProfileOptions {
        window: cfg.window,
        ..ProfileOptions::default()
    }
}

fn need<T: Copy>(v: Option<T>, what: &str, name: &str) -> CliResult<T> {
    v.ok_or_else(|| schema(format!("analysis {name:?} needs {what}")))
}

pub fn run_analysis(
    cfg: &ExperimentConfig,
    built: Option<&Built>,
    index: usize,
    a: &AnalysisSpec,
) -> CliResult<Outcome> {
    let name = a.name();
    let tuple = || -> CliResult<&Built> { built.ok_or_else(|| schema(format!("analysis {name:?} needs a tuple"))) };
    let mut profiles = Vec::new();
    let report = match a {
        AnalysisSpec::Profile {
            mode,
            threshold,
            sequence,
            strategy,
            tolerance,
            ..
        } => {
            let b = tuple()?;
            let opts = ProfileOptions {
                strategy: *strategy,
                tolerance: *tolerance,
                ..profile_options(cfg)
            };
            let q = cfg.sequence(sequence)?;
            let p = phi_profile(&b.tuple, *threshold, &q, &schedule_for(cfg, b)?, mode.profile_mode(), &opts)?;
            let summary = json!({
                "tail_sup": numfmt::ExactValue::from(&p.tail_sup()),
                "tail_inf": numfmt::ExactValue::from(&p.tail_inf()),
                "profile": &p,
            });
            profiles.push((name.to_string(), p));
            summary
        }
        AnalysisSpec::Classify {
            delta,
            q,
            p,
            a,
            b: bb,
            slack,
            eps_ladder,
            ..
        } => {
            let b = tuple()?;
            let params = ScrambleParams {
                delta: *delta,
                q: cfg.sequence(q)?,
                p: cfg.sequence(p)?,
                a: *a,
                b: *bb,
                eps_ladder: eps_ladder.clone(),
                slack: *slack,
                profile: profile_options(cfg),
            };
            let r = classify_scrambled(&b.tuple, &params, &schedule_for(cfg, b)?)?;
            for (i, p) in r.profiles.iter().enumerate() {
                profiles.push((format!("{name}.{i}"), p.clone()));
            }
            serde_json::to_value(&r)?
        }
        AnalysisSpec::Witness { eps, horizon, power, .. } => {
            let t = &tuple()?.tuple;
            match power {
                Some(r) => serde_json::to_value(power_recurrence_compose(t.system(), t.points(), *r, *eps, *horizon)?)?,
                None => json!({
                    "eps": eps,
                    "horizon": horizon,
                    "pair": proximal_recurrent_witness(t, *eps, *horizon)?,
                    "uniform_proximality": uniform_proximality_time(t.system(), t.points(), *eps, *horizon)?,
                    "uniform_recurrence": uniform_recurrence_time(t.system(), t.points(), *eps, *horizon)?,
                }),
            }
        }
        AnalysisSpec::VerifyPigeonhole {
            n,
            radius,
            samples,
            blocks,
            ..
        } => {
            let params = SparseBlockParams::canonical(*n, *blocks)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index as u64);
            let mut certs = Vec::with_capacity(*samples);
            for _ in 0..*samples {
                let pts = random_points(&params, *n as usize + 1, &mut rng)?;
                let k = random_centers(&params, *radius, 1, &mut rng)?.remove(0);
                certs.push(verify_pigeonhole(&params, &pts, *radius, &k)?);
            }
            json!({
                "n": n,
                "radius": radius,
                "blocks": blocks,
                "seed": cfg.seed,
                "samples": samples,
                "verified": certs.len(),
                "certificates": certs,
            })
        }
        AnalysisSpec::Density {
            measure,
            p,
            q,
            m,
            n,
            k_bound,
            w,
            bound,
            ..
        } => {
            let ps = cfg.sequence(p)?;
            match measure {
                Measure::Upper => {
                    let m = need(*m, "m", name)?;
                    let r = upper_density(&ps, &cfg.sequence(q)?, m)?;
                    json!({"measure": measure, "p": p, "q": q, "m": m,
                           "value": numfmt::ExactValue::from(&numfmt::frac(*r.numer(), *r.denom()))})
                }
                Measure::Cluster => {
                    let (n, m, kb) = (need(*n, "n", name)?, need(*m, "m", name)?, need(*k_bound, "k_bound", name)?);
                    let k = cluster_property_k(&ps, n, m as usize, kb)?;
                    json!({"measure": measure, "p": p, "n": n, "m": m, "k_bound": kb, "k": k})
                }
                Measure::Banach => {
                    let (w, b) = (need(*w, "w", name)?, need(*bound, "bound", name)?);
                    let r = lower_banach_density(&ps, w, b)?;
                    json!({"measure": measure, "p": p, "w": w, "bound": b,
                           "value": numfmt::ExactValue::from(&numfmt::frac(*r.numer(), *r.denom()))})
                }
            }
        }
    };
    Ok(Outcome {
        envelope: envelope(a.kind(), name, report)?,
        profiles,
    })
}

/// Writes `<name>.json` and one `<profile>.csv` per measured profile.
pub fn write_outcome(out: &mut OutputDir, o: &Outcome) -> CliResult<()> {
    out.write_json(&format!("{}.json", o.envelope.name), &o.envelope)?;
    for (file, p) in &o.profiles {
        out.write_bytes(&format!("{file}.csv"), p.to_csv().as_bytes())?;
    }
    Ok(())
}

/// Runs every analysis; artifacts are written as each one finishes, so a
/// failure leaves the earlier ones in place.
pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir, log: &mut dyn FnMut(&str)) -> CliResult<Vec<Envelope>> {
    if cfg.analyses.is_empty() {
        return Ok(Vec::new());
    }
    let built = if cfg.analyses.iter().any(AnalysisSpec::needs_tuple) {
        build_tuple(cfg)?
    } else {
        None
    };
    if let Some(c) = built.as_ref().and_then(|b| b.construction.as_ref()) {
        out.write_json("construction.json", c)?;
    }
    let mut done = Vec::new();
    for (i, a) in cfg.analyses.iter().enumerate() {
        log(&format!("{} {}: running", a.kind(), a.name()));
        let o = run_analysis(cfg, built.as_ref(), i, a)?;
        write_outcome(out, &o)?;
        log(&format!("{} {}: done", a.kind(), a.name()));
        done.push(o.envelope);
    }
    Ok(done)
}

/// Symbols of every tuple point on coordinates `from..to`.
pub fn export_window(tuple: &OrbitTuple, from: &BigInt, to: &BigInt) -> CliResult<(i64, Vec<Vec<u8>>)> {
    let len = u64::try_from(to - from).map_err(|_| schema("empty window"))?;
    if len > MAX_EXPORT {
        return Err(dchaos::Error::MaterializationBound(format!("window of {len} symbols exceeds {MAX_EXPORT}")).into());
    }
    let start = i64::try_from(from).map_err(|_| schema("window start out of range"))?;
    i64::try_from(to).map_err(|_| schema("window end out of range"))?;
    let mut rows = Vec::with_capacity(tuple.len());
    for s in tuple.points() {
        let p = s.as_symbolic().ok_or_else(|| schema("only symbolic points have symbol windows"))?;
        if p.sidedness() == Sidedness::OneSided && start < 0 {
            return Err(schema("one-sided points have no negative coordinates"));
        }
        rows.push(p.window(start, len as usize));
    }
    Ok((start, rows))
}

/// Checks an export window against what a construction materializes.
pub fn check_export(spec: &TupleSpec, to: &BigInt) -> CliResult<()> {
    let limit = match spec {
        TupleSpec::SparseBlocks { n, blocks, .. } => Some(BigInt::from(
            SparseBlockParams::canonical(*n, *blocks)?.exact_below().clone(),
        )),
        _ => None,
    };
    if let Some(l) = limit {
        if *to > l {
            return Err(dchaos::Error::MaterializationBound(format!(
                "window ends at {to}, past the exact region below {l}"
            ))
            .into());
        }
    }
    Ok(())
}
