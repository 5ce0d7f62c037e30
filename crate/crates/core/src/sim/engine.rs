use crate::agents::AgentBundle;
use crate::authority::{apply_rule, DetectorState, DriverEstimator};
use crate::error::{Error, Result};
use crate::predictor::{LinearModel, PredictionWorkspace};
use crate::vehicle::{DiscreteDynamics, VehicleState};

use super::metrics::{compute_metrics, Metrics};
use super::reference::{make_references, ScenarioReferences};
use super::scenario::ScenarioConfig;
use super::trace::{SimTrace, TraceRow};

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub trace: SimTrace,
    pub metrics: Metrics,
    pub references: ScenarioReferences,
    pub dynamics: DiscreteDynamics,
}

/// Runs the closed loop and returns the trace with metrics measured against
/// the driver's reference.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(SimTrace, Metrics)> {
    let run = simulate(cfg)?;
    Ok((run.trace, run.metrics))
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let steps = cfg.steps()?;
    let n = cfg.horizon;
    let dynamics = DiscreteDynamics::from_params(&cfg.vehicle, cfg.t_s)?;
    let references = make_references(
        cfg.kind,
        &cfg.path,
        cfg.vehicle.u_long,
        cfg.t_s,
        steps + 2 * n,
    )?;

    let mut bundle = AgentBundle::new(
        LinearModel::from(&dynamics),
        &cfg.automation_mpc()?,
        cfg.driver_mpc()?,
        cfg.weights()?,
        cfg.driver,
    )?;
    let (q_hat, r_hat, window) = match &cfg.switching {
        Some(sw) => (sw.q_d_hat.clone(), sw.r_d_hat, sw.window),
        None => (cfg.q_d.clone(), cfg.r_d, n),
    };
    let mut estimator = DriverEstimator::new(&bundle, q_hat, r_hat)?;
    let mut detector = DetectorState::new(window, bundle.weights());
    let mut ws = PredictionWorkspace::new(n);

    let mut x = VehicleState::default();
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let r_d = references.driver.window(k + 1, n);
        let r_a = references.automation.window(k + 1, 2 * n - 1);
        let cmd = bundle.step(&mut ws, &x, &r_d, &r_a)?;
        let u_d_hat = estimator.expected_input(&bundle, &ws, &x)?;
        let delta = detector.update(cmd.u_d, u_d_hat);
        let w = bundle.weights();
        rows.push(TraceRow {
            k,
            t: k as f64 * cfg.t_s,
            state: x,
            u_d: cmd.u_d,
            u_d_hat,
            u_a: cmd.u_a,
            u: cmd.u,
            lambda_d: w.lambda_d(),
            lambda_a: w.lambda_a(),
            delta,
            r_d: references.driver.sample(k),
            r_a: references.automation.sample(k),
        });

        if let Some(sw) = &cfg.switching {
            let next = apply_rule(delta, sw);
            if next != w {
                bundle = bundle.rebuild_for_weights(next)?;
                estimator = estimator.rebuild(&bundle)?;
                detector.weights = next;
                if sw.clear_on_switch {
                    detector.clear();
                }
            }
        }

        x = dynamics
            .step(&x, cmd.u)
            .map_err(|_| Error::Diverged { step: k })?;
        if !x.is_finite() {
            return Err(Error::Diverged { step: k + 1 });
        }
    }

    let trace = SimTrace { rows };
    trace.check_invariants(&dynamics)?;
    let metrics = compute_metrics(&trace, &references.driver)?;
    Ok(ScenarioRun {
        trace,
        metrics,
        references,
        dynamics,
    })
}
