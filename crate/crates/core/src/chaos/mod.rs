//! Pairwise-distance profiles along index sequences, attaching and
//! scrambling verdicts, and proximality and recurrence witnesses.

mod classify;
mod profile;
mod tuple;
mod witness;

pub use classify::{
    classify_attaching, classify_scrambled, AttachOptions, AttachReport, Cylinder, Observation,
    Predicate, ScrambleKind, ScrambleParams, ScrambleReport, TargetSet, ThresholdCheck,
};
pub use profile::{
    phi_profile, CheckpointSchedule, DensityProfile, ProfileMode, ProfileOptions, ProfilePoint,
    Strategy, Witness, CSV_HEADER,
};
pub use tuple::{pairwise_extrema, OrbitTuple};
pub(crate) use tuple::symbol_at_time;
pub use witness::{
    power_recurrence_compose, proximal_recurrent_witness, uniform_proximality_time,
    uniform_recurrence_time, CascadeCertificate, CascadeStep, Modulus, ProximalRecurrent,
    TimeWitness,
};
