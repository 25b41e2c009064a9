//! Statistical layer: analysis table, OLS with robust errors and absorbed
//! fixed effects, elasticities, variance decomposition, binned scatters and
//! the city validation suite.

mod decomposition;
mod ols;
mod outcomes;
mod report;
mod stats;
mod table;
mod validation;

pub use decomposition::{standard_blocks, variance_decomposition, Block, Decomposition, DecompositionRow};
pub use ols::{group_codes, ols, OlsFit, SeType};
pub use outcomes::{arrests_per_hour, extreme_comparison, shift_hour_profile, ActionOutcome, ExtremeComparison, ShiftHourRow};
pub use report::{plain_or_exp, text_table, write_coefficients_csv};
pub use stats::{
    binned_scatter, elasticity_arsinh, mean, normal_p_value, pearson, quantile, stars, Bin, BinnedScatter, Elasticity,
};
pub use table::{
    build_design, controls, fit_model, interaction_name, relative_share, shift_hour_column, AnalysisTable, BgPresence,
    Design, ModelSpec, RegressionResult, Row, SampleFilter, Term, CRIME_BLOCK, INTERCEPT, RACE_GROUPS,
    RELATIVE_SHARES, SOCIO_BLOCK,
};
pub use validation::{
    city_validation_suite, ActionCheck, CityValidation, CompositionFit, OfficerRecord, ValidationInputs,
    ValidationReport, ZoneResidence,
};
