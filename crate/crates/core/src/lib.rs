//! Impulse responses to independently identified, possibly persistent shocks.
//!
//! The crate estimates local projections (with and without shock leads),
//! distributed lag models (on the shock or on its AR innovations), LP-IV,
//! state-dependent projections and bivariate VAR / VAR-X responses, and ships
//! the serial-correlation diagnostics and seeded simulators used to check each
//! estimator against its closed-form population response.

pub mod dgpsim;
pub mod diagnostics;
pub mod error;
pub mod irf;
pub mod regress;
pub mod tscore;
pub mod varmod;

pub use dgpsim::{
    closed_form_irf, simulate, simulate_replicate, DgpKind, DgpSpec, SimulatedData, RNG_ALGORITHM,
};
pub use diagnostics::{
    acf, box_pierce, chi_squared_sf, ljung_box, panel_serial_test, Correlogram, LagDetail, TestKind,
    TestResult,
};
pub use error::{Error, Result};
pub use irf::{
    cumulative_multiplier, dlm, dlm_innovation, estimate, estimate_innovations, lp, lp_iv, lp_leads,
    lp_residual_adjusted, nonlinear_lp, Estimator, IrfResult, IrfSpec, LeadsRule, Multiplier,
    NonlinearIrf, Regime,
};
pub use regress::{hc0, newey_west, ols, tsls, CovKind, FirstStage, RegressionFit};
pub use tscore::{
    build_design, load_csv, trim_common_sample, CsvSchema, DesignMatrix, Loaded, LoadedData,
    NaPolicy, Panel, Regressor, Series,
};
pub use varmod::{cholesky_irf, fit_var, varx_irf, VarFit};
