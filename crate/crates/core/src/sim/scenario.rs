use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::agents::{AuthorityWeights, DriverKind};
use crate::authority::SwitchingConfig;
use crate::error::{invalid, Error, Result};
use crate::predictor::{MpcConfig, DEFAULT_INPUT_WEIGHT};
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    PathFollowing,
    ObstacleAvoidance,
    /// Path following that turns into an obstacle deviation of the driver.
    Combined,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::PathFollowing,
        ScenarioKind::ObstacleAvoidance,
        ScenarioKind::Combined,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::PathFollowing => "path_following",
            ScenarioKind::ObstacleAvoidance => "obstacle_avoidance",
            ScenarioKind::Combined => "combined",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid("scenario", format!("unknown scenario `{s}`")))
    }
}

/// Reference-path shape parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PathShape {
    /// Sinusoid amplitude (m).
    pub amplitude: f64,
    /// Sinusoid period (s).
    pub period: f64,
    /// Driver lane-change offset (m); ignored for path following.
    pub offset: f64,
    /// Time the driver's path starts to deviate (s).
    pub lane_change_start: f64,
    /// Duration of the deviation (s).
    pub lane_change_duration: f64,
}

impl Default for PathShape {
    fn default() -> Self {
        Self {
            amplitude: 2.0,
            period: 10.0,
            offset: 3.0,
            lane_change_start: 3.0,
            lane_change_duration: 2.0,
        }
    }
}

pub fn diag2(a: f64, b: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
}

/// Driver output weight for path following.
pub fn q_d_path_following() -> DMatrix<f64> {
    diag2(0.036, 0.02)
}

/// Driver output weight for obstacle avoidance.
pub fn q_d_obstacle_avoidance() -> DMatrix<f64> {
    diag2(36.0, 20.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Run length (s).
    pub duration: f64,
    pub vehicle: VehicleParams,
    /// Sampling period (s).
    pub t_s: f64,
    pub horizon: usize,
    pub q_a: DMatrix<f64>,
    pub r_a: f64,
    pub q_d: DMatrix<f64>,
    pub r_d: f64,
    /// Initial driver weight.
    pub lambda_d: f64,
    /// Initial automation weight.
    pub lambda_a: f64,
    pub driver: DriverKind,
    pub switching: Option<SwitchingConfig>,
    pub path: PathShape,
}

impl ScenarioConfig {
    /// Defaults for `kind`: vehicle, sampling and MPC values of the reference
    /// setup, `R_A = R_D = DEFAULT_INPUT_WEIGHT`, and scenario-specific driver
    /// weights.
    pub fn defaults(kind: ScenarioKind) -> Self {
        let base = Self {
            kind,
            duration: 10.0,
            vehicle: VehicleParams::default(),
            t_s: 0.02,
            horizon: 50,
            q_a: diag2(1.5, 0.6),
            r_a: DEFAULT_INPUT_WEIGHT,
            q_d: q_d_path_following(),
            r_d: DEFAULT_INPUT_WEIGHT,
            lambda_d: 0.5,
            lambda_a: 0.5,
            driver: DriverKind::Adaptive,
            switching: None,
            path: PathShape::default(),
        };
        match kind {
            ScenarioKind::PathFollowing => base,
            ScenarioKind::ObstacleAvoidance => Self {
                q_d: q_d_obstacle_avoidance(),
                ..base
            },
            ScenarioKind::Combined => Self {
                duration: 20.0,
                lambda_d: 0.3,
                lambda_a: 0.7,
                switching: Some(SwitchingConfig::default()),
                path: PathShape {
                    lane_change_start: 12.0,
                    lane_change_duration: 6.0,
                    ..PathShape::default()
                },
                ..base
            },
        }
    }

    pub fn weights(&self) -> Result<AuthorityWeights> {
        AuthorityWeights::new(self.lambda_d, self.lambda_a)
    }

    /// Sets both initial weights from the automation share.
    pub fn with_lambda_a(mut self, lambda_a: f64) -> Self {
        self.lambda_a = lambda_a;
        self.lambda_d = 1.0 - lambda_a;
        self
    }

    pub fn automation_mpc(&self) -> Result<MpcConfig> {
        MpcConfig::new(self.horizon, self.q_a.clone(), self.r_a)
    }

    pub fn driver_mpc(&self) -> Result<MpcConfig> {
        MpcConfig::new(self.horizon, self.q_d.clone(), self.r_d)
    }

    /// Number of simulated steps, `duration / t_s`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid(
                "duration",
                format!("must be > 0, got {}", self.duration),
            ));
        }
        if !(self.t_s.is_finite() && self.t_s > 0.0) {
            return Err(invalid("t_s", format!("must be > 0, got {}", self.t_s)));
        }
        let ratio = self.duration / self.t_s;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-6 {
            return Err(invalid(
                "duration",
                format!(
                    "{} s is not a whole number of {} s periods",
                    self.duration, self.t_s
                ),
            ));
        }
        let steps = steps as usize;
        if steps < 2 * self.horizon {
            return Err(invalid(
                "duration",
                format!(
                    "{steps} steps is shorter than twice the horizon ({})",
                    2 * self.horizon
                ),
            ));
        }
        Ok(steps)
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.steps()?;
        for (name, r) in [("r_a", self.r_a), ("r_d", self.r_d)] {
            if !(r.is_finite() && r > 0.0) {
                return Err(invalid(name, format!("must be > 0, got {r}")));
            }
        }
        self.automation_mpc()?;
        self.driver_mpc()?;
        self.weights()?;
        self.path.validate()?;
        if let Some(sw) = &self.switching {
            sw.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for k in ScenarioKind::ALL {
            let c = ScenarioConfig::defaults(k);
            c.validate().unwrap();
            assert_eq!(k.as_str().parse::<ScenarioKind>().unwrap(), k);
        }
        assert_eq!(
            ScenarioConfig::defaults(ScenarioKind::PathFollowing)
                .steps()
                .unwrap(),
            500
        );
    }

    #[test]
    fn invalid_configs() {
        let mut c = ScenarioConfig::defaults(ScenarioKind::PathFollowing);
        c.lambda_d = 0.6;
        c.lambda_a = 0.6;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::defaults(ScenarioKind::PathFollowing);
        c.duration = 1.0;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::defaults(ScenarioKind::PathFollowing);
        c.duration = 10.005;
        assert!(c.steps().is_err());
        assert!("highway".parse::<ScenarioKind>().is_err());
    }
}
