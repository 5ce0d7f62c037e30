use crate::error::{Error, Result};

use super::reference::ReferencePath;
use super::trace::SimTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// RMS lateral error against the chosen reference (m).
    pub rms_y_err: f64,
    /// RMS heading error against the chosen reference (rad).
    pub rms_psi_err: f64,
    pub rms_u_d: f64,
    pub peak_u_d: f64,
    /// Time from the driver's reference diverging to the first switch (s).
    pub latency_s: Option<f64>,
    pub switches: usize,
    /// Step at which the first weight switch was decided.
    pub first_switch_step: Option<usize>,
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (sum / n as f64).sqrt()
}

/// Summary statistics of `trace` with tracking errors measured against `reference`.
pub fn compute_metrics(trace: &SimTrace, reference: &ReferencePath) -> Result<Metrics> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let rows = &trace.rows;
    let rms_y_err = rms(rows.iter().map(|r| r.state.y - reference.sample(r.k).y));
    let rms_psi_err = rms(rows.iter().map(|r| r.state.psi - reference.sample(r.k).psi));
    let rms_u_d = rms(rows.iter().map(|r| r.u_d));
    let peak_u_d = rows.iter().map(|r| r.u_d.abs()).fold(0.0, f64::max);

    let switch_steps = trace.switch_steps();
    let first_switch_step = switch_steps.first().copied();
    let latency_s = match (first_switch_step, trace.divergence_step()) {
        (Some(s), Some(d)) => {
            let t_s = if rows.len() > 1 {
                rows[1].t - rows[0].t
            } else {
                0.0
            };
            Some((s as f64 - d as f64) * t_s)
        }
        _ => None,
    };
    Ok(Metrics {
        rms_y_err,
        rms_psi_err,
        rms_u_d,
        peak_u_d,
        latency_s,
        switches: switch_steps.len(),
        first_switch_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::reference::Provenance;
    use crate::sim::trace::TraceRow;
    use crate::vehicle::{OutputSample, VehicleState};

    fn trace_following(path: &ReferencePath, err: f64) -> SimTrace {
        SimTrace {
            rows: (0..path.len())
                .map(|k| {
                    let r = path.sample(k);
                    TraceRow {
                        k,
                        t: k as f64 * 0.02,
                        state: VehicleState::new(0.0, 0.0, r.y + err, r.psi + err),
                        u_d: -err,
                        u_d_hat: 0.0,
                        u_a: 0.0,
                        u: 0.0,
                        lambda_d: 0.5,
                        lambda_a: 0.5,
                        delta: 0.0,
                        r_d: r,
                        r_a: r,
                    }
                })
                .collect(),
        }
    }

    fn path() -> ReferencePath {
        ReferencePath::from_lateral(|t| (t * 0.7).sin(), 200, 20.0, 0.02, Provenance::Driver)
            .unwrap()
    }

    #[test]
    fn exact_tracking_has_zero_error() {
        let m = compute_metrics(&trace_following(&path(), 0.0), &path()).unwrap();
        assert_eq!(m.rms_y_err, 0.0);
        assert_eq!(m.rms_psi_err, 0.0);
        assert_eq!(m.latency_s, None);
        assert_eq!(m.switches, 0);
    }

    #[test]
    fn constant_error_rms() {
        let m = compute_metrics(&trace_following(&path(), -0.25), &path()).unwrap();
        assert!((m.rms_y_err - 0.25).abs() < 1e-12);
        assert!((m.rms_u_d - 0.25).abs() < 1e-15);
        assert_eq!(m.peak_u_d, 0.25);
    }

    #[test]
    fn latency_from_divergence_to_switch() {
        let p = path();
        let mut t = trace_following(&p, 0.0);
        for row in t.rows.iter_mut().skip(40) {
            row.r_d = OutputSample::new(row.r_d.y + 1.0, row.r_d.psi);
        }
        for row in t.rows.iter_mut().skip(91) {
            row.lambda_d = 0.7;
            row.lambda_a = 0.3;
        }
        let m = compute_metrics(&t, &p).unwrap();
        assert_eq!(m.switches, 1);
        assert_eq!(m.first_switch_step, Some(90));
        assert!((m.latency_s.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_trace_rejected() {
        assert_eq!(
            compute_metrics(&SimTrace::default(), &path()),
            Err(Error::EmptyTrace)
        );
    }
}
