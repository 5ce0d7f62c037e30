use std::borrow::Cow;

use crate::error::{invalid, Result};
use crate::vehicle::OutputSample;

use super::scenario::{PathShape, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Automation,
    Driver,
}

/// Sampled `(y_ref, psi_ref)` sequence; lookups past the end hold the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    samples: Vec<OutputSample>,
    pub provenance: Provenance,
}

impl ReferencePath {
    /// Samples `lateral(t)` at `t = k t_s` and derives the heading by the
    /// small-angle rule `psi(k) = (y(k+1) - y(k)) / (U t_s)`.
    pub fn from_lateral(
        lateral: impl Fn(f64) -> f64,
        len: usize,
        u_long: f64,
        t_s: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if len == 0 {
            return Err(invalid("path length", "must be >= 1"));
        }
        if !(u_long > 0.0 && t_s > 0.0) {
            return Err(invalid("path sampling", "u_long and t_s must be > 0"));
        }
        let ys: Vec<f64> = (0..=len).map(|k| lateral(k as f64 * t_s)).collect();
        let samples = ys
            .windows(2)
            .map(|w| OutputSample::new(w[0], (w[1] - w[0]) / (u_long * t_s)))
            .collect();
        Ok(Self {
            samples,
            provenance,
        })
    }

    pub fn from_samples(samples: Vec<OutputSample>, provenance: Provenance) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("path length", "must be >= 1"));
        }
        Ok(Self {
            samples,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[OutputSample] {
        &self.samples
    }

    pub fn sample(&self, k: usize) -> OutputSample {
        self.samples[k.min(self.samples.len() - 1)]
    }

    /// Samples `start..start+len`, borrowed when fully inside the path.
    pub fn window(&self, start: usize, len: usize) -> Cow<'_, [OutputSample]> {
        if start + len <= self.samples.len() {
            Cow::Borrowed(&self.samples[start..start + len])
        } else {
            Cow::Owned((start..start + len).map(|k| self.sample(k)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReferences {
    pub automation: ReferencePath,
    pub driver: ReferencePath,
}

/// Quintic smooth step on `[0, 1]`, zero slope and curvature at both ends.
fn smooth_step(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

impl PathShape {
    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(invalid(
                "path_period",
                format!("must be > 0, got {}", self.period),
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("path_amplitude", "must be finite"));
        }
        if !self.offset.is_finite() {
            return Err(invalid("lane_offset", "must be finite"));
        }
        if !(self.lane_change_start.is_finite() && self.lane_change_start >= 0.0) {
            return Err(invalid("lane_change_start", "must be >= 0"));
        }
        if !(self.lane_change_duration.is_finite() && self.lane_change_duration > 0.0) {
            return Err(invalid("lane_change_duration", "must be > 0"));
        }
        Ok(())
    }

    /// Base curve `A_y sin(2 pi t / T_p)` followed by the automation.
    pub fn base(&self, t: f64) -> f64 {
        self.amplitude * (std::f64::consts::TAU * t / self.period).sin()
    }

    /// Driver's lateral deviation from the base curve at time `t`.
    pub fn lane_offset(&self, t: f64) -> f64 {
        if t <= self.lane_change_start {
            0.0
        } else {
            self.offset * smooth_step((t - self.lane_change_start) / self.lane_change_duration)
        }
    }
}

pub fn make_references(
    kind: ScenarioKind,
    shape: &PathShape,
    u_long: f64,
    t_s: f64,
    len: usize,
) -> Result<ScenarioReferences> {
    shape.validate()?;
    let automation =
        ReferencePath::from_lateral(|t| shape.base(t), len, u_long, t_s, Provenance::Automation)?;
    let driver = match kind {
        ScenarioKind::PathFollowing => ReferencePath {
            provenance: Provenance::Driver,
            ..automation.clone()
        },
        ScenarioKind::ObstacleAvoidance | ScenarioKind::Combined => ReferencePath::from_lateral(
            |t| shape.base(t) + shape.lane_offset(t),
            len,
            u_long,
            t_s,
            Provenance::Driver,
        )?,
    };
    Ok(ScenarioReferences { automation, driver })
}
