//! Diagonal cylindrical Levy processes `L(t)u = sum_j l_j(t) <u, e_j>`:
//! validity conditions, the jump-accumulation rate `m^c(k)`, truncation
//! decompositions and large-jump stopping times.

mod checks;
mod decomposition;
mod process;
mod rules;
mod spec;
mod stopping;

pub use checks::{
    check_assumption_a6, check_series_conditions, lambda_n, m_c, series_verdict, sup_verdict, A6Report,
    ConvergenceVerdict, DivergenceRule, SeriesReport, VerdictStatus, DEFAULT_K_LIST,
};
pub use decomposition::{decompose, TruncationDecomposition, DECOMPOSE_CHECK_TERMS};
pub use process::{ClosedFormFamily, DiagonalCylindricalLevy, FamilyKind, TermRule};
pub use rules::{DecayRule, RuleKind, RuleSpec, SquareSummable, WeightSequence};
pub(crate) use checks::combine as combine_status;
pub(crate) use spec::json_error;
pub use spec::{BuiltModel, FamilySpec, ModelSpec, WeightKind, WeightSpec};
pub use stopping::{
    dichotomy_test, first_large_jump_time, Classification, DichotomyOptions, DichotomyReport, TauSample,
};
