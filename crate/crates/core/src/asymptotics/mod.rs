//! Large-time statements as executable scenarios: error functionals over a
//! dyadic time schedule, rate fits and pass/fail verdicts.

pub mod dimension;
pub mod scenario;

pub use dimension::{
    critical_dimension_table, measure_critical_dimension, DimensionExponent, DimensionMeasurement,
};
pub use scenario::{
    relative_error_sup, run_scenario, Check, Constants, CurvePoint, ScenarioId, ScenarioReport,
    ScenarioSpec, TerminalMetric, Thresholds, TimeSchedule,
};
