//! A-posteriori audits of computed solutions.

mod estimates;
mod gauge;
mod localization;
mod random;
mod report;

pub use estimates::{
    audit_integral_residual, audit_max_principle, audit_schauder, audit_time_holder, gradient_and_laplacian, grid_f0, interior_mask, masked_norm_2alpha, pde_defect,
    schauder_ratio, schauder_sample, SchauderRatio,
};
pub use gauge::{audit_gauge_independence, compact_family, differenced_dt, model_ratio, ModelRatio};
pub use localization::{audit_localization, localization_row, worst_hessian_point, LocalizationRow};
pub use random::{random_growing_spec, RandomSpecOpts};
pub use report::{log_log_slope, spread, AuditReport, Check, Measurement};
