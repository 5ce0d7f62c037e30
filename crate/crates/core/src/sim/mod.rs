//! Closed-loop scenario engine: reference generation, the plant, agents and
//! detector loop, trace recording and summary metrics.

mod engine;
mod metrics;
mod reference;
mod scenario;
mod trace;

pub use engine::{run_scenario, simulate, ScenarioRun};
pub use metrics::{compute_metrics, Metrics};
pub use reference::{make_references, Provenance, ReferencePath, ScenarioReferences};
pub use scenario::{
    diag2, q_d_obstacle_avoidance, q_d_path_following, PathShape, ScenarioConfig, ScenarioKind,
};
pub use trace::{SimTrace, TraceRow, CSV_HEADER};
