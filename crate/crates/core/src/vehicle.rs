//! Linearized single-track (bicycle) lateral dynamics and their zero-order-hold
//! discretization.
//!
//! State ordering is `(v, omega, y, psi)`: lateral velocity, yaw rate, lateral
//! displacement and yaw angle. The input is the steering-wheel angle; the
//! steering ratio is applied inside the input matrix.

use nalgebra::{Matrix2x4, Matrix4, SMatrix, Vector2, Vector4};

use crate::error::{invalid, Error, Result};
use crate::linalg::expm;

/// Physical constants of the vehicle at a fixed longitudinal speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Front cornering stiffness (N/rad).
    pub cf: f64,
    /// Rear cornering stiffness (N/rad).
    pub cr: f64,
    /// Mass center to front axle (m).
    pub a: f64,
    /// Mass center to rear axle (m).
    pub b: f64,
    /// Mass (kg).
    pub m: f64,
    /// Polar moment of inertia (kg m^2).
    pub iz: f64,
    /// Steering ratio, steering-wheel angle over road-wheel angle.
    pub steering_ratio: f64,
    /// Constant longitudinal velocity (m/s).
    pub u_long: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            cf: 12000.0,
            cr: 8000.0,
            a: 0.92,
            b: 1.38,
            m: 1200.0,
            iz: 1500.0,
            steering_ratio: 16.0,
            u_long: 20.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cf", self.cf),
            ("cr", self.cr),
            ("a", self.a),
            ("b", self.b),
            ("m", self.m),
            ("iz", self.iz),
            ("steering_ratio", self.steering_ratio),
            ("u_long", self.u_long),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value <= 0.0 {
                return Err(invalid(
                    name,
                    format!("must be finite and > 0, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// Continuous-time model `x' = a_c x + b_c u`, `z = c_c x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDynamics {
    pub a_c: Matrix4<f64>,
    pub b_c: Vector4<f64>,
    pub c_c: Matrix2x4<f64>,
}

/// Discrete-time model `x(k+1) = a x(k) + b u(k)`, `z(k) = c x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDynamics {
    pub a: Matrix4<f64>,
    pub b: Vector4<f64>,
    pub c: Matrix2x4<f64>,
    pub t_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub v: f64,
    pub omega: f64,
    pub y: f64,
    pub psi: f64,
}

impl VehicleState {
    pub fn new(v: f64, omega: f64, y: f64, psi: f64) -> Self {
        Self { v, omega, y, psi }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.v, self.omega, self.y, self.psi)
    }

    pub fn from_vector(x: &Vector4<f64>) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.omega.is_finite() && self.y.is_finite() && self.psi.is_finite()
    }
}

/// Measured output `(y, psi)`. Reference paths are sequences of these.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutputSample {
    pub y: f64,
    pub psi: f64,
}

impl OutputSample {
    pub fn new(y: f64, psi: f64) -> Self {
        Self { y, psi }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.y, self.psi)
    }
}

/// Output selector picking `(y, psi)` out of the state.
pub fn output_selector() -> Matrix2x4<f64> {
    Matrix2x4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

pub fn build_continuous(p: &VehicleParams) -> Result<ContinuousDynamics> {
    p.validate()?;
    let VehicleParams {
        cf,
        cr,
        a,
        b,
        m,
        iz,
        steering_ratio: is,
        u_long: u,
    } = *p;
    let a_c = Matrix4::new(
        -(cf + cr) / (m * u),
        -(a * cf - b * cr) / (m * u) - u,
        0.0,
        0.0,
        -(a * cf - b * cr) / (iz * u),
        -(a * a * cf + b * b * cr) / (iz * u),
        0.0,
        0.0,
        1.0,
        0.0,
        0.0,
        u,
        0.0,
        1.0,
        0.0,
        0.0,
    );
    let b_c = Vector4::new(cf / (is * m), a * cf / (is * iz), 0.0, 0.0);
    Ok(ContinuousDynamics {
        a_c,
        b_c,
        c_c: output_selector(),
    })
}

/// Exact zero-order-hold discretization at period `t_s`.
///
/// Exponentiates the augmented generator `[[a_c, b_c], [0, 0]] * t_s`; the
/// top blocks of the result are the discrete `a` and `b`.
pub fn discretize(cont: &ContinuousDynamics, t_s: f64) -> Result<DiscreteDynamics> {
    if !t_s.is_finite() || t_s <= 0.0 {
        return Err(invalid(
            "t_s",
            format!("sampling period must be > 0, got {t_s}"),
        ));
    }
    if cont
        .a_c
        .iter()
        .chain(cont.b_c.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("continuous dynamics"));
    }
    let mut gen = SMatrix::<f64, 5, 5>::zeros();
    gen.fixed_view_mut::<4, 4>(0, 0)
        .copy_from(&(cont.a_c * t_s));
    gen.fixed_view_mut::<4, 1>(0, 4)
        .copy_from(&(cont.b_c * t_s));
    let e = expm(&gen);
    Ok(DiscreteDynamics {
        a: e.fixed_view::<4, 4>(0, 0).into_owned(),
        b: e.fixed_view::<4, 1>(0, 4).into_owned(),
        c: cont.c_c,
        t_s,
    })
}

impl DiscreteDynamics {
    /// Builds and discretizes the model for `params` in one go.
    pub fn from_params(params: &VehicleParams, t_s: f64) -> Result<Self> {
        discretize(&build_continuous(params)?, t_s)
    }

    pub fn step(&self, x: &VehicleState, u: f64) -> Result<VehicleState> {
        if !x.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        if !u.is_finite() {
            return Err(Error::NonFinite("steering input"));
        }
        let next = self.a * x.to_vector() + self.b * u;
        Ok(VehicleState::from_vector(&next))
    }

    pub fn output(&self, x: &VehicleState) -> OutputSample {
        let z = self.c * x.to_vector();
        OutputSample::new(z[0], z[1])
    }
}
