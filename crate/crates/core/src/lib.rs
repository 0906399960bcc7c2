//! Post-processing of phase-contrast MRI for cerebrospinal fluid dynamics:
//! velocity reconstruction, flow extraction, cardiac and respiratory gating,
//! ensemble averaging, stroke-volume metrics and paired cohort statistics,
//! plus a forward simulator with analytic ground truth.

pub mod ensemble;
pub mod flow;
pub mod gating;
pub mod ingest;
pub mod metrics;
pub mod phantom;
pub mod signal;
pub mod stats;
pub mod velocity;
pub mod pipeline;
pub mod report;
