use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::vehicle::{DiscreteDynamics, OutputSample, VehicleState};

pub const CSV_HEADER: &str =
    "k,t,v,omega,y,psi,u_D,u_D_hat,u_A,u,lambda_D,lambda_A,delta,r_D_y,r_D_psi,r_A_y,r_A_psi";

const BLEND_TOL: f64 = 1e-12;
const DYNAMICS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub t: f64,
    pub state: VehicleState,
    pub u_d: f64,
    pub u_d_hat: f64,
    pub u_a: f64,
    pub u: f64,
    pub lambda_d: f64,
    pub lambda_a: f64,
    pub delta: f64,
    pub r_d: OutputSample,
    pub r_a: OutputSample,
}

impl TraceRow {
    fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.state.v,
            self.state.omega,
            self.state.y,
            self.state.psi,
            self.u_d,
            self.u_d_hat,
            self.u_a,
            self.u,
            self.lambda_d,
            self.lambda_a,
            self.delta,
            self.r_d.y,
            self.r_d.psi,
            self.r_a.y,
            self.r_a.psi,
        ]
    }
}

/// Per-step record of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Steps `k` at which the rule fired, i.e. `lambda_D(k+1) != lambda_D(k)`.
    pub fn switch_steps(&self) -> Vec<usize> {
        self.rows
            .windows(2)
            .filter(|w| w[1].lambda_d != w[0].lambda_d)
            .map(|w| w[0].k)
            .collect()
    }

    /// First step where the driver's and the automation's reference samples differ.
    pub fn divergence_step(&self) -> Option<usize> {
        self.rows.iter().find(|r| r.r_d != r.r_a).map(|r| r.k)
    }

    /// Checks the blend identity on every row and the plant update between rows.
    pub fn check_invariants(&self, dynamics: &DiscreteDynamics) -> Result<()> {
        for row in &self.rows {
            let blended = row.lambda_d * row.u_d + row.lambda_a * row.u_a;
            let scale = 1.0f64.max(row.u.abs());
            if (blended - row.u).abs() > BLEND_TOL * scale {
                return Err(Error::TraceInvariant {
                    step: row.k,
                    reason: format!("blend identity off by {:e}", (blended - row.u).abs()),
                });
            }
        }
        for w in self.rows.windows(2) {
            let predicted = dynamics.a * w[0].state.to_vector() + dynamics.b * w[0].u;
            let actual = w[1].state.to_vector();
            let scale = 1.0f64.max(actual.amax());
            let err = (predicted - actual).amax();
            if err > DYNAMICS_TOL * scale {
                return Err(Error::TraceInvariant {
                    step: w[1].k,
                    reason: format!("dynamics identity off by {err:e}"),
                });
            }
        }
        Ok(())
    }

    /// CSV text with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 400);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            write!(out, "{}", row.k).unwrap();
            for v in row.values() {
                write!(out, ",{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    pub fn read_csv(r: impl BufRead) -> io::Result<Self> {
        let bad = |line: usize, msg: String| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
        };
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some(CSV_HEADER) {
            return Err(bad(1, "missing or unexpected header".into()));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 17 {
                return Err(bad(
                    i + 2,
                    format!("expected 17 fields, got {}", fields.len()),
                ));
            }
            let k = fields[0]
                .parse::<usize>()
                .map_err(|e| bad(i + 2, e.to_string()))?;
            let mut v = [0.0; 16];
            for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                *slot = f.parse::<f64>().map_err(|e| bad(i + 2, e.to_string()))?;
            }
            rows.push(TraceRow {
                k,
                t: v[0],
                state: VehicleState::new(v[1], v[2], v[3], v[4]),
                u_d: v[5],
                u_d_hat: v[6],
                u_a: v[7],
                u: v[8],
                lambda_d: v[9],
                lambda_a: v[10],
                delta: v[11],
                r_d: OutputSample::new(v[12], v[13]),
                r_a: OutputSample::new(v[14], v[15]),
            });
        }
        Ok(Self { rows })
    }
}
