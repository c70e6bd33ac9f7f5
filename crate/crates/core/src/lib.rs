//! Structural analysis of (multimode) differential- and difference-algebraic
//! equation systems.

pub mod arrays;
pub mod assignment;
pub mod error;
pub mod existq;
pub mod graph;
pub mod model;
pub mod multimode;
pub mod parser;
#[cfg(feature = "random")]
pub mod random;
pub mod sigma;

pub use arrays::{
    array_index_search, build_array, build_timevarying_array, ArrayRow, ArraySearch, ArraySystem,
    Instance,
};
pub use error::{Error, Result, Span};
pub use existq::{
    exist_quantif_eqn, exist_quantif_eqn_with, ExistQuantResult, PredecessorRule, Role,
    RolePartition,
};
pub use graph::{
    direct_and_scc, dm_decompose, dm_decompose_with, is_structurally_nonsingular,
    max_cardinality_matching, remove_overdetermined, Block, Btf, DmDecomposition, Matching,
    WeightedBipartiteGraph,
};
pub use model::{
    euler_map, restrict_to_mode, shift_equation, Equation, GuardCondition, Incidence, Literal,
    Mode, Model, ModelBuilder, TimeDomain, Variable, VariableKind,
};
pub use multimode::{
    analyze_all_modes, analyze_mode, resolve_conflicts, unfold_mode_change, ConflictReport,
    Instant, ModeAnalysis, ModeChange, ModeReport, Unfolded, UnfoldedEquation, UnfoldedInstance,
};
pub use parser::{enumerate_modes, parse, parse_with_diagnostics, to_source};
pub use sigma::{
    find_offsets, find_offsets_nonsquare, index_reduce, index_reduce_with, leading_graph,
    max_weight_complete_matching, pantelides_offsets, IndexReduction, OffsetSolution,
    PantelidesResult, Witness,
};
