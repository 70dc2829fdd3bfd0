//! Explicit witnesses: the sparse-block subshift (points copying a
//! selector onto ever sparser blocks), the coincidence check that rules
//! out larger scrambled tuples there, and scrambled tuples on the full
//! shift built from dominating windows.

mod fullshift;
mod pigeonhole;
mod sparse;

pub use fullshift::{
    fullshift_scrambled_tuple, BlockSchedule, BlockWindow, FullshiftCertificate, Regime,
    WindowCheck, FULLSHIFT_QP,
};
pub use pigeonhole::{random_centers, random_points, verify_pigeonhole, PigeonholeCertificate, WindowForm};
pub use sparse::{
    sparse_block_checkpoints, sparse_block_point, sparse_block_symbol, sparse_block_symbol_linear, sparse_block_system,
    sparse_block_tuple, SeparationBlock, SparseBlockCertificate, SparseBlockParams, ZeroGap,
    SPARSE_BLOCKS,
};
