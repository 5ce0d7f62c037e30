//! Indirect driver-automation shared steering control for steer-by-wire
//! vehicles.
//!
//! The automation runs a condensed, unconstrained MPC on a linear bicycle
//! model. The driver is modelled as an MPC planner that has learned the
//! controller's blending law and feedback, so it plans with the closed-loop
//! ("tilde") dynamics. The plant receives `lambda_D u_D + lambda_A u_A`. A
//! sliding-window detector compares the driver's actual input with the input
//! expected under matched intentions and switches the authority weights.

pub mod agents;
pub mod authority;
pub mod error;
pub mod linalg;
pub mod predictor;
pub mod sim;
pub mod vehicle;

pub use agents::{blend, AgentBundle, AgentCommands, AuthorityWeights, DriverKind};
pub use authority::{
    apply_rule, expected_driver_input, DetectorState, DriverEstimator, SwitchingConfig,
};
pub use error::{Error, Result};
pub use predictor::{
    assemble_w_a, automation_command, build_tilde, driver_command, stack_prediction,
    synthesize_automation_gain, synthesize_driver_gain, FeedbackGain, LinearModel, MpcConfig,
    PredictionWorkspace, StackedPredictor, TildePredictor,
};
pub use sim::{
    compute_metrics, make_references, run_scenario, Metrics, ScenarioConfig, ScenarioKind, SimTrace,
};
pub use vehicle::{
    build_continuous, discretize, ContinuousDynamics, DiscreteDynamics, OutputSample,
    VehicleParams, VehicleState,
};
