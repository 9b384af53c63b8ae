//! Statistical experiments tying the simulator to the exact results.

pub mod chernoff;
pub mod correlation;
pub mod crossval;
pub mod heatmap;

pub use chernoff::{chernoff_check, ChernoffReport, TailCheck};
pub use correlation::{
    all_subsets, correlation_test, CorrelationEntry, CorrelationReport, Verdict,
};
pub use crossval::{
    cell_seed, cross_validate_cell, formula_cross_validation, standard_panel, CrossValCell,
    CrossValReport,
};
pub use heatmap::{heatmap, HeatmapGrid};
