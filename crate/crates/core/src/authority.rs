//! Intent-mismatch detection and threshold switching of authority weights.
//!
//! The detector compares the actual driver input with the input expected
//! under matched intentions (driver reference equal to the automation's) and
//! tracks `delta(k) = |sum of the last H residuals| / H`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::agents::{AgentBundle, AuthorityWeights};
use crate::error::{invalid, Result};
use crate::predictor::{
    assemble_w_a, driver_command, synthesize_driver_gain, FeedbackGain, MpcConfig,
    PredictionWorkspace, TildePredictor, DEFAULT_INPUT_WEIGHT,
};
use crate::vehicle::VehicleState;

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingConfig {
    /// Sliding window length `H` (steps).
    pub window: usize,
    /// Threshold `delta*` (rad).
    pub delta_star: f64,
    pub lambda_d_high: f64,
    pub lambda_d_low: f64,
    /// Estimated driver output weight.
    pub q_d_hat: DMatrix<f64>,
    /// Estimated driver input weight.
    pub r_d_hat: f64,
    /// Clear the residual window whenever the weights change.
    pub clear_on_switch: bool,
}

impl Default for SwitchingConfig {
    fn default() -> Self {
        Self {
            window: 50,
            delta_star: 0.1,
            lambda_d_high: 0.7,
            lambda_d_low: 0.3,
            q_d_hat: DMatrix::from_row_slice(2, 2, &[0.028, 0.0, 0.0, 0.015]),
            r_d_hat: DEFAULT_INPUT_WEIGHT,
            clear_on_switch: false,
        }
    }
}

impl SwitchingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(invalid("window", "must be >= 1"));
        }
        if !(self.delta_star.is_finite() && self.delta_star > 0.0) {
            return Err(invalid(
                "delta_star",
                format!("must be > 0, got {}", self.delta_star),
            ));
        }
        let (lo, hi) = (self.lambda_d_low, self.lambda_d_high);
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(invalid(
                "lambda_d_low/lambda_d_high",
                format!("need 0 <= low < high <= 1, got low {lo}, high {hi}"),
            ));
        }
        // shape and definiteness checks are shared with the MPC weights
        MpcConfig::new(1, self.q_d_hat.clone(), self.r_d_hat).map(|_| ())
    }

    pub fn high_driver(&self) -> AuthorityWeights {
        AuthorityWeights::from_driver(self.lambda_d_high).expect("validated weight")
    }

    pub fn low_driver(&self) -> AuthorityWeights {
        AuthorityWeights::from_driver(self.lambda_d_low).expect("validated weight")
    }
}

/// Expected driver input with `r_D := r_A` and estimated driver weights.
///
/// `r_a_long` is the stacked automation lookahead `r_A(k+1..k+2N-1)`.
pub fn expected_driver_input(
    gain_hat: &FeedbackGain,
    tp: &TildePredictor,
    k_a: &FeedbackGain,
    x: &DVector<f64>,
    r_a_long: &DVector<f64>,
) -> Result<f64> {
    let p = tp.stacked.n_outputs;
    let w_a = assemble_w_a(k_a, p, r_a_long)?;
    let r_d = r_a_long.rows(0, p * tp.stacked.horizon).into_owned();
    driver_command(gain_hat, tp, x, &r_d, &w_a, tp.lambda_a)
}

/// The automation's estimate of the driver, kept in step with the bundle's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverEstimator {
    cfg_hat: MpcConfig,
    gain_hat: FeedbackGain,
    weights: AuthorityWeights,
}

impl DriverEstimator {
    pub fn new(bundle: &AgentBundle, q_d_hat: DMatrix<f64>, r_d_hat: f64) -> Result<Self> {
        let cfg_hat = MpcConfig::new(bundle.horizon(), q_d_hat, r_d_hat)?;
        let weights = bundle.weights();
        let gain_hat = synthesize_driver_gain(bundle.tilde(), &cfg_hat, weights.lambda_d())?;
        Ok(Self {
            cfg_hat,
            gain_hat,
            weights,
        })
    }

    pub fn rebuild(&self, bundle: &AgentBundle) -> Result<Self> {
        Self::new(bundle, self.cfg_hat.q.clone(), self.cfg_hat.r)
    }

    pub fn gain(&self) -> &FeedbackGain {
        &self.gain_hat
    }

    /// Expected input for the windows already loaded in `ws` by [`AgentBundle::step`].
    pub fn expected_input(
        &self,
        bundle: &AgentBundle,
        ws: &PredictionWorkspace,
        x: &VehicleState,
    ) -> Result<f64> {
        if self.weights != bundle.weights() {
            return Err(crate::error::Error::StaleGain {
                synthesized: self.weights.lambda_d(),
                current: bundle.weights().lambda_d(),
            });
        }
        let xv = DVector::from_column_slice(x.to_vector().as_slice());
        let lambda_a = bundle.weights().lambda_a();
        driver_command(
            &self.gain_hat,
            bundle.tilde(),
            &xv,
            &ws.r_a_stack,
            &ws.w_a,
            lambda_a,
        )
    }
}

/// Sliding window of residuals `actual - expected`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    residuals: VecDeque<f64>,
    sum: f64,
    window: usize,
    pub weights: AuthorityWeights,
}

impl DetectorState {
    pub fn new(window: usize, weights: AuthorityWeights) -> Self {
        Self {
            residuals: VecDeque::with_capacity(window + 1),
            sum: 0.0,
            window: window.max(1),
            weights,
        }
    }

    /// Pushes one residual and returns `delta(k)`.
    ///
    /// Always normalizes by the full window length, so a partially filled
    /// window reports a proportionally smaller value.
    pub fn update(&mut self, actual: f64, expected: f64) -> f64 {
        let r = actual - expected;
        self.residuals.push_back(r);
        self.sum += r;
        if self.residuals.len() > self.window {
            if let Some(old) = self.residuals.pop_front() {
                self.sum -= old;
            }
        }
        self.delta()
    }

    pub fn delta(&self) -> f64 {
        self.sum.abs() / self.window as f64
    }

    pub fn running_sum(&self) -> f64 {
        self.sum
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.residuals.iter().copied()
    }

    pub fn clear(&mut self) {
        self.residuals.clear();
        self.sum = 0.0;
    }
}

/// Threshold rule: `delta >= delta*` gives the driver the high weight.
pub fn apply_rule(delta: f64, cfg: &SwitchingConfig) -> AuthorityWeights {
    if delta >= cfg.delta_star {
        cfg.high_driver()
    } else {
        cfg.low_driver()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> SwitchingConfig {
        SwitchingConfig::default()
    }

    #[test]
    fn zero_residuals() {
        let mut d = DetectorState::new(50, cfg().low_driver());
        for _ in 0..120 {
            assert_eq!(d.update(0.3, 0.3), 0.0);
        }
        assert_eq!(d.len(), 50);
    }

    #[test]
    fn alternating_cancels_and_constant_saturates() {
        let mut d = DetectorState::new(4, cfg().low_driver());
        let mut last = 1.0;
        for r in [0.2, -0.2, 0.2, -0.2] {
            last = d.update(r, 0.0);
        }
        assert!(last.abs() < 1e-17);

        let mut d = DetectorState::new(4, cfg().low_driver());
        for _ in 0..4 {
            last = d.update(0.2, 0.0);
        }
        assert!((last - 0.2).abs() < 1e-15);
    }

    #[test]
    fn warm_up_divides_by_full_window() {
        let mut d = DetectorState::new(50, cfg().low_driver());
        assert!((d.update(1.0, 0.0) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rule_branches() {
        let c = cfg();
        let w = apply_rule(0.05, &c);
        assert!((w.lambda_d() - 0.3).abs() < 1e-15 && (w.lambda_a() - 0.7).abs() < 1e-15);
        let w = apply_rule(0.1, &c);
        assert!((w.lambda_d() - 0.7).abs() < 1e-15 && (w.lambda_a() - 0.3).abs() < 1e-15);
        assert_eq!(apply_rule(0.0, &c), c.low_driver());
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.window = 0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.delta_star = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.lambda_d_low = 0.7;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.q_d_hat = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn clear_resets_window() {
        let mut d = DetectorState::new(3, cfg().low_driver());
        d.update(1.0, 0.0);
        d.clear();
        assert!(d.is_empty());
        assert_eq!(d.delta(), 0.0);
    }

    proptest! {
        #[test]
        fn running_sum_tracks_buffer(window in 1usize..60, rs in prop::collection::vec(-2.0f64..2.0, 1..300)) {
            let mut d = DetectorState::new(window, cfg().low_driver());
            for r in rs {
                d.update(r, 0.0);
                let direct: f64 = d.residuals().sum();
                prop_assert!((d.running_sum() - direct).abs() < 1e-12);
                prop_assert!(d.len() <= window);
            }
        }

        #[test]
        fn delta_is_order_invariant(rs in prop::collection::vec(-1.0f64..1.0, 10), seed in 0usize..10) {
            let run = |v: &[f64]| {
                let mut d = DetectorState::new(10, cfg().low_driver());
                v.iter().fold(0.0, |_, r| d.update(*r, 0.0))
            };
            let mut rotated = rs.clone();
            rotated.rotate_left(seed);
            rotated.reverse();
            prop_assert!((run(&rs) - run(&rotated)).abs() < 1e-12);
        }

        #[test]
        fn step_residual_trip_latency(c in 0.11f64..2.0, window in 1usize..80) {
            let c_cfg = SwitchingConfig { window, ..cfg() };
            let mut d = DetectorState::new(window, c_cfg.low_driver());
            for _ in 0..window { d.update(0.0, 0.0); }
            let bound = ((window as f64) * c_cfg.delta_star / c).ceil() as usize;
            let mut tripped = None;
            for step in 1..=window {
                let delta = d.update(c, 0.0);
                if tripped.is_none() && apply_rule(delta, &c_cfg) == c_cfg.high_driver() {
                    tripped = Some(step);
                }
                if step == window {
                    prop_assert!((delta - c).abs() < 1e-12);
                }
            }
            prop_assert!(tripped.unwrap() <= bound.max(1));
        }

        #[test]
        fn rule_is_memoryless_and_on_simplex(delta in 0.0f64..1.0) {
            let w = apply_rule(delta, &cfg());
            prop_assert!((w.lambda_d() + w.lambda_a() - 1.0).abs() < 1e-15);
            prop_assert_eq!(w, apply_rule(delta, &cfg()));
        }
    }
}
