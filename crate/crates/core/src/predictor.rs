//! Horizon-stacked prediction and the constant condensed-MPC gains.
//!
//! With horizon `N`, outputs of dimension `p` and a single input, the stacked
//! prediction is `z = phi x + theta u` where `phi` is `pN x n` (row block `i`
//! is `C A^i`, `i = 1..N`) and `theta` is `pN x N` lower block triangular
//! (block `(i, j)` is `C A^(i-j) B`).
//!
//! Both the automation and the adaptive driver solve the same least-squares
//! problem `min |sqrt(Q)(s theta u - eps)|^2 + |sqrt(R) u|^2` for a scale
//! `s` (1 for the automation, `lambda_D` for the driver). Its minimizer is
//! `u = K eps` with `K = (s^2 theta' Q theta + R)^-1 s theta' Q`, which is the
//! pseudo-inverse solution; `R > 0` keeps the normal matrix positive definite.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_len, invalid, Error, Result};
use crate::linalg::{block_diag, is_symmetric_positive_definite, solve_spd};
use crate::vehicle::{DiscreteDynamics, OutputSample};

/// Discrete single-input plant `(A, B, C)` in dynamic form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(invalid("a", "state matrix must be square and non-empty"));
        }
        if b.shape() != (n, 1) {
            return Err(invalid(
                "b",
                format!("expected {n}x1 input matrix, got {:?}", b.shape()),
            ));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(invalid(
                "c",
                format!("expected p x {n} output matrix, got {:?}", c.shape()),
            ));
        }
        if a.iter()
            .chain(b.iter())
            .chain(c.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("plant matrices"));
        }
        Ok(Self { a, b, c })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
}

impl From<&DiscreteDynamics> for LinearModel {
    fn from(d: &DiscreteDynamics) -> Self {
        Self {
            a: DMatrix::from_iterator(4, 4, d.a.iter().copied()),
            b: DMatrix::from_iterator(4, 1, d.b.iter().copied()),
            c: DMatrix::from_iterator(2, 4, d.c.iter().copied()),
        }
    }
}

/// Default scalar input weight for both parties.
pub const DEFAULT_INPUT_WEIGHT: f64 = 1e-4;

/// Horizon and quadratic weights of one MPC party.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig {
    pub horizon: usize,
    /// Output-error weight, `p x p`, symmetric positive definite.
    pub q: DMatrix<f64>,
    /// Input weight (scalar input).
    pub r: f64,
}

impl MpcConfig {
    pub fn new(horizon: usize, q: DMatrix<f64>, r: f64) -> Result<Self> {
        let cfg = Self { horizon, q, r };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be >= 1"));
        }
        if !is_symmetric_positive_definite(&self.q) {
            return Err(invalid("q", "must be symmetric positive definite"));
        }
        if !self.r.is_finite() || self.r <= 0.0 {
            return Err(invalid("r", format!("must be > 0, got {}", self.r)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedPredictor {
    pub horizon: usize,
    pub n_outputs: usize,
    pub phi: DMatrix<f64>,
    pub theta: DMatrix<f64>,
}

pub fn stack_prediction(model: &LinearModel, horizon: usize) -> Result<StackedPredictor> {
    if horizon == 0 {
        return Err(invalid("horizon", "must be >= 1"));
    }
    let (n, p) = (model.n_states(), model.n_outputs());
    let mut phi = DMatrix::zeros(p * horizon, n);
    let mut theta = DMatrix::zeros(p * horizon, horizon);

    // markov[m] = C A^m B
    let mut markov = Vec::with_capacity(horizon);
    let mut a_pow_b = model.b.clone();
    let mut c_a_pow = model.c.clone();
    for i in 0..horizon {
        markov.push(&model.c * &a_pow_b);
        a_pow_b = &model.a * a_pow_b;
        c_a_pow *= &model.a;
        phi.view_mut((i * p, 0), (p, n)).copy_from(&c_a_pow);
    }
    for i in 0..horizon {
        for j in 0..=i {
            theta.view_mut((i * p, j), (p, 1)).copy_from(&markov[i - j]);
        }
    }
    Ok(StackedPredictor {
        horizon,
        n_outputs: p,
        phi,
        theta,
    })
}

/// Constant gain mapping a stacked regressor (`pN`) to an input sequence (`N`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGain {
    k: DMatrix<f64>,
    horizon: usize,
}

impl FeedbackGain {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// First element of `K eps`, the receding-horizon command.
    pub fn first_input(&self, eps: &DVector<f64>) -> f64 {
        self.k
            .row(0)
            .iter()
            .zip(eps.iter())
            .map(|(k, e)| k * e)
            .sum()
    }
}

/// Least-squares gain for `[s sqrt(Q) theta; sqrt(R)] u = [sqrt(Q); 0] eps`.
fn condensed_gain(
    theta: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: f64,
    scale: f64,
    horizon: usize,
) -> Result<FeedbackGain> {
    let q_block = block_diag(q, horizon);
    let r_block = DMatrix::<f64>::identity(horizon, horizon) * r;
    let tq = theta.transpose() * &q_block;
    let normal = (&tq * theta) * (scale * scale) + r_block;
    let rhs = tq * scale;
    let k = solve_spd(normal, &rhs)?;
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Synthesis("non-finite gain entries".into()));
    }
    Ok(FeedbackGain { k, horizon })
}

fn check_cfg(sp: &StackedPredictor, cfg: &MpcConfig) -> Result<()> {
    cfg.validate()?;
    ensure_len("MPC horizon", sp.horizon, cfg.horizon)?;
    ensure_len("output weight dimension", sp.n_outputs, cfg.q.nrows())
}

pub fn synthesize_automation_gain(sp: &StackedPredictor, cfg: &MpcConfig) -> Result<FeedbackGain> {
    check_cfg(sp, cfg)?;
    condensed_gain(&sp.theta, &cfg.q, cfg.r, 1.0, sp.horizon)
}

/// Automation command `e1' K_A (r - phi x)`; `r_stack` holds `r(k+1)..r(k+N)`.
pub fn automation_command(
    gain: &FeedbackGain,
    sp: &StackedPredictor,
    x: &DVector<f64>,
    r_stack: &DVector<f64>,
) -> Result<f64> {
    ensure_len("reference window", sp.phi.nrows(), r_stack.len())?;
    ensure_len("state", sp.phi.ncols(), x.len())?;
    let eps = r_stack - &sp.phi * x;
    Ok(gain.first_input(&eps))
}

/// Prediction matrices of the plant with the automation's feedback absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct TildePredictor {
    pub a_tilde: DMatrix<f64>,
    pub stacked: StackedPredictor,
    pub lambda_a: f64,
}

fn check_weight(name: &'static str, w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(invalid(name, format!("must lie in [0, 1], got {w}")));
    }
    Ok(())
}

/// `A~ = A - lambda_A B e1' K_A phi`, then `phi~`, `theta~` rebuilt from `A~`.
pub fn build_tilde(
    model: &LinearModel,
    sp: &StackedPredictor,
    k_a: &FeedbackGain,
    lambda_a: f64,
) -> Result<TildePredictor> {
    check_weight("lambda_a", lambda_a)?;
    let feedback = k_a.matrix().rows(0, 1) * &sp.phi;
    let a_tilde = &model.a - (&model.b * feedback) * lambda_a;
    let closed = LinearModel {
        a: a_tilde.clone(),
        b: model.b.clone(),
        c: model.c.clone(),
    };
    Ok(TildePredictor {
        a_tilde,
        stacked: stack_prediction(&closed, sp.horizon)?,
        lambda_a,
    })
}

pub fn synthesize_driver_gain(
    tp: &TildePredictor,
    cfg_d: &MpcConfig,
    lambda_d: f64,
) -> Result<FeedbackGain> {
    check_weight("lambda_d", lambda_d)?;
    check_cfg(&tp.stacked, cfg_d)?;
    condensed_gain(
        &tp.stacked.theta,
        &cfg_d.q,
        cfg_d.r,
        lambda_d,
        tp.stacked.horizon,
    )
}

/// Feed-forward stack `w_A(k+i) = e1' K_A r_A(k+i)` for `i = 0..N-1`.
///
/// `r_long` holds `r_A(k+1)..r_A(k+2N-1)` stacked, `p (2N-1)` entries.
pub fn assemble_w_a(
    k_a: &FeedbackGain,
    n_outputs: usize,
    r_long: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(k_a.horizon());
    assemble_w_a_into(k_a, n_outputs, r_long, &mut out)?;
    Ok(out)
}

fn assemble_w_a_into(
    k_a: &FeedbackGain,
    n_outputs: usize,
    r_long: &DVector<f64>,
    out: &mut DVector<f64>,
) -> Result<()> {
    let n = k_a.horizon();
    ensure_len(
        "automation reference lookahead",
        n_outputs * (2 * n - 1),
        r_long.len(),
    )?;
    let row = k_a.matrix().row(0);
    let span = n_outputs * n;
    for i in 0..n {
        let window = r_long.rows(i * n_outputs, span);
        out[i] = row.iter().zip(window.iter()).map(|(k, r)| k * r).sum();
    }
    Ok(())
}

/// Driver regressor `eps_D = r_D - phi~ x - lambda_A theta~ w_A`.
pub fn driver_regressor(
    tp: &TildePredictor,
    x: &DVector<f64>,
    r_d_stack: &DVector<f64>,
    w_a: &DVector<f64>,
    lambda_a: f64,
) -> Result<DVector<f64>> {
    let sp = &tp.stacked;
    ensure_len("driver reference window", sp.phi.nrows(), r_d_stack.len())?;
    ensure_len("w_A stack", sp.horizon, w_a.len())?;
    ensure_len("state", sp.phi.ncols(), x.len())?;
    Ok(r_d_stack - &sp.phi * x - (&sp.theta * w_a) * lambda_a)
}

/// Adaptive driver command `e1' K_D eps_D`.
pub fn driver_command(
    k_d: &FeedbackGain,
    tp: &TildePredictor,
    x: &DVector<f64>,
    r_d_stack: &DVector<f64>,
    w_a: &DVector<f64>,
    lambda_a: f64,
) -> Result<f64> {
    let eps = driver_regressor(tp, x, r_d_stack, w_a, lambda_a)?;
    Ok(k_d.first_input(&eps))
}

/// Stacks output samples as `[y1, psi1, y2, psi2, ...]`.
pub fn stack_outputs(samples: &[OutputSample]) -> DVector<f64> {
    DVector::from_iterator(samples.len() * 2, samples.iter().flat_map(|s| [s.y, s.psi]))
}

/// Reusable per-step scratch for the stacked reference windows and `w_A`.
///
/// Owned by one evaluation loop at a time; contents are overwritten on each load.
#[derive(Debug, Clone)]
pub struct PredictionWorkspace {
    pub r_d_stack: DVector<f64>,
    pub r_a_stack: DVector<f64>,
    pub r_a_long: DVector<f64>,
    pub w_a: DVector<f64>,
    horizon: usize,
}

impl PredictionWorkspace {
    pub fn new(horizon: usize) -> Self {
        Self {
            r_d_stack: DVector::zeros(2 * horizon),
            r_a_stack: DVector::zeros(2 * horizon),
            r_a_long: DVector::zeros(2 * (2 * horizon - 1)),
            w_a: DVector::zeros(horizon),
            horizon,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Loads `r_D(k+1..k+N)` and `r_A(k+1..k+2N-1)`.
    pub fn load(&mut self, r_d: &[OutputSample], r_a_long: &[OutputSample]) -> Result<()> {
        let n = self.horizon;
        ensure_len("driver reference window", n, r_d.len())?;
        ensure_len("automation reference lookahead", 2 * n - 1, r_a_long.len())?;
        for (i, s) in r_d.iter().enumerate() {
            self.r_d_stack[2 * i] = s.y;
            self.r_d_stack[2 * i + 1] = s.psi;
        }
        for (i, s) in r_a_long.iter().enumerate() {
            self.r_a_long[2 * i] = s.y;
            self.r_a_long[2 * i + 1] = s.psi;
        }
        self.r_a_stack.copy_from(&self.r_a_long.rows(0, 2 * n));
        Ok(())
    }

    /// Refreshes `w_a` from the loaded automation lookahead.
    pub fn update_w_a(&mut self, k_a: &FeedbackGain) -> Result<()> {
        ensure_len("automation gain horizon", self.horizon, k_a.horizon())?;
        assemble_w_a_into(k_a, 2, &self.r_a_long, &mut self.w_a)
    }
}
