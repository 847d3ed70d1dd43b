//! Spectral Galerkin approximation of
//! `dX = F(X) dt + G(X-) dL` on a Gelfand triple `V ⊆ H ⊆ V*`.

mod checks;
mod energy;
mod solver;
mod triple;

pub use checks::{
    check_coercivity, check_growth_hemicontinuity, check_monotonicity, hs_norm_sq, CheckReport, GrowthReport,
    MonotonicityForm,
};
pub use energy::{
    energy_monitor, energy_terms, expected_patch_count, v_energy_trend, EnergyReport, EnergyTerms, EnergyTrend,
};
pub use solver::{
    solve_patched, solve_projected, sup_distance, EnergyLedger, GalerkinSolution, PatchEvent, SolveError,
    SolveFailure, BLOWUP_GUARD,
};
pub use triple::{
    CoefficientPair, Constants, ConstantsFn, DiffusionFn, DriftFn, Preset, SpectralGelfandTriple,
};
