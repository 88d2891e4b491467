//! Equation-wise lasso estimation of sparse, high-dimensional VAR(p) models
//! driven by weakly dependent, heavy-tailed innovations.
//!
//! The numerical core is generic over [`Scalar`] (`f64` or `f32`). The
//! aliases at the bottom of this file fix the scalar for the common case.

pub mod bounds;
pub mod dgp;
pub mod error;
pub mod experiment;
pub mod lasso;
pub mod linalg;
pub mod panel_io;
pub mod scalar;
pub mod var;

pub use dgp::{
    build_table1_design, desk_design, simulate, stationary_innovation_covariance, step_stochastic_covariance,
    InnovationSpec, NoiseLaw, SimulationDesign, TimeSeriesPanel,
};
pub use bounds::{
    deviation_bound_check, gram_concentration_check, l2_error_bound, martingale_tail_bound, pi1, pi2,
    population_gram, prediction_error_bound, rsc_check, truncated_moment, weibull_tail_sums, GramConstants,
};
pub use error::{Error, Result};
pub use experiment::{
    run_cell, run_experiment, verify_theory, write_reports, CellReport, ExperimentConfig, ExperimentReport,
    OracleKind, TheoryConfig, TheoryReport,
};
pub use lasso::{
    bic_select, build_design, fit_all_equations, fit_panel, forecast, oracle_fit, solve_equation, solve_path,
    theoretical_lambda, DesignMatrices, GramCache, LassoFit, PathOptions, PenaltyStrategy, RegularizationPath,
    SolverOptions,
};
pub use scalar::{soft_threshold, Scalar};
pub use var::{
    build_companion, default_vma_horizon, ensure_stable, fit_tail_decay, gram_eigen_bounds, is_stable,
    sparsity_profile, spectral_radius, tail_sum_profile, vma_coefficients, CompanionMatrix, GramEigenBounds,
    SparsityProfile, Stability, TailDecayFit, VarSpec, VmaCoefficients,
};

pub type VarSpecF64 = VarSpec<f64>;
pub type VarSpecF32 = VarSpec<f32>;
pub type PanelF64 = TimeSeriesPanel<f64>;
pub type InnovationSpecF64 = InnovationSpec<f64>;
pub type LassoFitF64 = LassoFit<f64>;
