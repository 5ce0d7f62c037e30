//! Automation controller, adaptive and conventional driver models, and the
//! weighted-summation blending law, packaged as one steppable bundle.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{ensure_len, invalid, Error, Result};
use crate::predictor::{
    automation_command, build_tilde, driver_command, stack_prediction, synthesize_automation_gain,
    synthesize_driver_gain, FeedbackGain, LinearModel, MpcConfig, PredictionWorkspace,
    StackedPredictor, TildePredictor,
};
use crate::vehicle::{OutputSample, VehicleState};

const SIMPLEX_TOL: f64 = 1e-12;

/// Driver and automation authority, non-negative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthorityWeights {
    lambda_d: f64,
    lambda_a: f64,
}

impl AuthorityWeights {
    pub fn new(lambda_d: f64, lambda_a: f64) -> Result<Self> {
        if !(lambda_d.is_finite() && lambda_d >= 0.0) {
            return Err(invalid("lambda_d", format!("must be >= 0, got {lambda_d}")));
        }
        if !(lambda_a.is_finite() && lambda_a >= 0.0) {
            return Err(invalid("lambda_a", format!("must be >= 0, got {lambda_a}")));
        }
        if (lambda_d + lambda_a - 1.0).abs() > SIMPLEX_TOL {
            return Err(invalid(
                "lambda_d + lambda_a",
                format!("weights must sum to 1, got {lambda_d} + {lambda_a}"),
            ));
        }
        Ok(Self { lambda_d, lambda_a })
    }

    /// Weights `(lambda_d, 1 - lambda_d)`.
    pub fn from_driver(lambda_d: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda_d) {
            return Err(invalid(
                "lambda_d",
                format!("must lie in [0, 1], got {lambda_d}"),
            ));
        }
        Ok(Self {
            lambda_d,
            lambda_a: 1.0 - lambda_d,
        })
    }

    pub fn manual() -> Self {
        Self {
            lambda_d: 1.0,
            lambda_a: 0.0,
        }
    }

    pub fn autonomous() -> Self {
        Self {
            lambda_d: 0.0,
            lambda_a: 1.0,
        }
    }

    pub fn lambda_d(&self) -> f64 {
        self.lambda_d
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }
}

/// `u = lambda_D u_D + lambda_A u_A`.
pub fn blend(u_d: f64, u_a: f64, w: AuthorityWeights) -> f64 {
    w.lambda_d * u_d + w.lambda_a * u_a
}

/// Which internal model the simulated driver plans with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriverKind {
    /// Plans with the plant plus the controller's blending and feedback.
    #[default]
    Adaptive,
    /// Plans as if driving manually, ignoring the controller.
    Conventional,
}

impl fmt::Display for DriverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriverKind::Adaptive => "adaptive",
            DriverKind::Conventional => "conventional",
        })
    }
}

impl FromStr for DriverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(DriverKind::Adaptive),
            "conventional" => Ok(DriverKind::Conventional),
            other => Err(invalid(
                "driver",
                format!("expected adaptive|conventional, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentCommands {
    pub u_d: f64,
    pub u_a: f64,
    pub u: f64,
}

/// Gains and predictors for both parties at one set of authority weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBundle {
    model: LinearModel,
    predictor: StackedPredictor,
    automation_gain: FeedbackGain,
    driver_cfg: MpcConfig,
    tilde: TildePredictor,
    driver_gain: FeedbackGain,
    manual_gain: FeedbackGain,
    weights: AuthorityWeights,
    // weights the driver gain and tilde predictor were synthesized for
    gain_weights: AuthorityWeights,
    kind: DriverKind,
}

impl AgentBundle {
    pub fn new(
        model: LinearModel,
        automation_cfg: &MpcConfig,
        driver_cfg: MpcConfig,
        weights: AuthorityWeights,
        kind: DriverKind,
    ) -> Result<Self> {
        ensure_len("vehicle state dimension", 4, model.n_states())?;
        ensure_len("vehicle output dimension", 2, model.n_outputs())?;
        ensure_len("driver horizon", automation_cfg.horizon, driver_cfg.horizon)?;
        let predictor = stack_prediction(&model, automation_cfg.horizon)?;
        let automation_gain = synthesize_automation_gain(&predictor, automation_cfg)?;
        let manual_gain = synthesize_automation_gain(&predictor, &driver_cfg)?;
        let tilde = build_tilde(&model, &predictor, &automation_gain, weights.lambda_a)?;
        let driver_gain = synthesize_driver_gain(&tilde, &driver_cfg, weights.lambda_d)?;
        Ok(Self {
            model,
            predictor,
            automation_gain,
            driver_cfg,
            tilde,
            driver_gain,
            manual_gain,
            weights,
            gain_weights: weights,
            kind,
        })
    }

    /// New bundle whose driver internal model matches `w`; the automation gain is reused.
    pub fn rebuild_for_weights(&self, w: AuthorityWeights) -> Result<Self> {
        let tilde = build_tilde(
            &self.model,
            &self.predictor,
            &self.automation_gain,
            w.lambda_a,
        )?;
        let driver_gain = synthesize_driver_gain(&tilde, &self.driver_cfg, w.lambda_d)?;
        Ok(Self {
            tilde,
            driver_gain,
            weights: w,
            gain_weights: w,
            ..self.clone()
        })
    }

    pub fn horizon(&self) -> usize {
        self.predictor.horizon
    }

    pub fn weights(&self) -> AuthorityWeights {
        self.weights
    }

    pub fn kind(&self) -> DriverKind {
        self.kind
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn predictor(&self) -> &StackedPredictor {
        &self.predictor
    }

    pub fn automation_gain(&self) -> &FeedbackGain {
        &self.automation_gain
    }

    pub fn tilde(&self) -> &TildePredictor {
        &self.tilde
    }

    pub fn driver_gain(&self) -> &FeedbackGain {
        &self.driver_gain
    }

    pub fn manual_gain(&self) -> &FeedbackGain {
        &self.manual_gain
    }

    pub fn driver_config(&self) -> &MpcConfig {
        &self.driver_cfg
    }

    pub(crate) fn check_fresh(&self) -> Result<()> {
        if self.gain_weights != self.weights {
            return Err(Error::StaleGain {
                synthesized: self.gain_weights.lambda_d,
                current: self.weights.lambda_d,
            });
        }
        Ok(())
    }

    /// One step of both agents.
    ///
    /// `r_d` holds `r_D(k+1..k+N)`, `r_a_long` holds `r_A(k+1..k+2N-1)`.
    /// On return `ws` holds the loaded windows and the current `w_A` stack.
    pub fn step(
        &self,
        ws: &mut PredictionWorkspace,
        x: &VehicleState,
        r_d: &[OutputSample],
        r_a_long: &[OutputSample],
    ) -> Result<AgentCommands> {
        self.check_fresh()?;
        ensure_len("workspace horizon", self.horizon(), ws.horizon())?;
        ws.load(r_d, r_a_long)?;
        ws.update_w_a(&self.automation_gain)?;
        let xv = DVector::from_column_slice(x.to_vector().as_slice());

        let u_a = automation_command(&self.automation_gain, &self.predictor, &xv, &ws.r_a_stack)?;
        let u_d = match self.kind {
            DriverKind::Adaptive => driver_command(
                &self.driver_gain,
                &self.tilde,
                &xv,
                &ws.r_d_stack,
                &ws.w_a,
                self.weights.lambda_a,
            )?,
            DriverKind::Conventional => {
                automation_command(&self.manual_gain, &self.predictor, &xv, &ws.r_d_stack)?
            }
        };
        Ok(AgentCommands {
            u_d,
            u_a,
            u: blend(u_d, u_a, self.weights),
        })
    }
}
