//! Unity-feedback loop around a fractional plant and a PI^λD^δ controller.
//!
//! ```text
//!  w --(+)--e--> [G_c] --u--> [G_s] --+--> y
//!       ^-                            |
//!       +-----------------------------+
//! ```
//!
//! Both blocks may have direct feedthrough, so every step solves the scalar
//! algebraic loop
//!
//! ```text
//! y_k = P_k + g_p u_k,   u_k = C_k + g_c (w_k - y_k)
//! ```
//!
//! where `P_k`, `C_k` collect the GL history sums and `g_p`, `g_c` are the
//! instantaneous gains.

use crate::controller::{make_pd_delta, FracPid};
use crate::error::{Error, Result};
use crate::gl::{
    apply_operator, causal_sum, euler_weights, gl_coeffs, step_scale, Discretization, Rule,
};
use crate::system::{combined_weights, time_axis, FracSystem};

/// Sample index at which the reference example switches the setpoint on.
pub const DELAYED_STEP_ONSET: usize = 2;

/// Where a step setpoint starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepTiming {
    /// Zero for `k < 2`, matching the reference example.
    #[default]
    Delayed,
    /// On from `k = 0`.
    Immediate,
    /// On from the given sample.
    At(usize),
}

impl StepTiming {
    pub fn onset(self) -> usize {
        match self {
            StepTiming::Delayed => DELAYED_STEP_ONSET,
            StepTiming::Immediate => 0,
            StepTiming::At(k) => k,
        }
    }
}

/// `n` samples of a step of height `amplitude`.
pub fn step_setpoint(n: usize, timing: StepTiming, amplitude: f64) -> Vec<f64> {
    let onset = timing.onset();
    (0..n)
        .map(|k| if k >= onset { amplitude } else { 0.0 })
        .collect()
}

/// Closed-loop trajectories. `e[k] == w[k] - y[k]` for every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopResult {
    sample_period: f64,
    t: Vec<f64>,
    w: Vec<f64>,
    e: Vec<f64>,
    u: Vec<f64>,
    y: Vec<f64>,
}

impl LoopResult {
    /// Assembles a result from its input and output columns; the error column
    /// is derived from them.
    pub fn from_columns(sample_period: f64, w: Vec<f64>, u: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        for (what, col) in [("u", &u), ("y", &y)] {
            if col.len() != w.len() {
                return Err(Error::LengthMismatch {
                    what,
                    expected: w.len(),
                    found: col.len(),
                });
            }
        }
        let e = w.iter().zip(&y).map(|(w, y)| w - y).collect();
        Ok(LoopResult {
            sample_period,
            t: time_axis(sample_period, w.len()),
            w,
            e,
            u,
            y,
        })
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Simulates the closed loop for a given setpoint sequence.
///
/// `y_0 = 0`. From `k = 1` on, the plant and controller history sums are
/// formed first and the current sample is solved in closed form:
///
/// ```text
/// y_k = (P_k + g_p (C_k + g_c w_k)) / (1 + g_p g_c)
/// ```
pub fn simulate_loop(
    sys: &FracSystem,
    ctl: &FracPid,
    setpoint: &[f64],
    disc: &Discretization,
) -> Result<LoopResult> {
    disc.require(Rule::BackwardEuler)?;
    if setpoint.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n = setpoint.len();
    let a = combined_weights(sys.denom(), disc, n)?;
    let b = combined_weights(sys.numer(), disc, n)?;
    let c = ctl.weights(disc, n)?;
    if a[0] == 0.0 {
        return Err(Error::DegenerateStep);
    }
    let g_p = b[0] / a[0];
    let g_c = c[0];
    let gain = 1.0 + g_p * g_c;
    if gain == 0.0 {
        return Err(Error::DegenerateLoop);
    }

    let mut y = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut u = vec![0.0; n];
    e[0] = setpoint[0];
    u[0] = g_c * e[0];
    for k in 1..n {
        let plant_hist = (causal_sum(&b, &u, k, 1) - causal_sum(&a, &y, k, 1)) / a[0];
        let ctl_hist = causal_sum(&c, &e, k, 1);
        y[k] = (plant_hist + g_p * (ctl_hist + g_c * setpoint[k])) / gain;
        e[k] = setpoint[k] - y[k];
        u[k] = ctl_hist + g_c * e[k];
    }

    Ok(LoopResult {
        sample_period: disc.sample_period(),
        t: time_axis(disc.sample_period(), n),
        w: setpoint.to_vec(),
        e,
        u,
        y,
    })
}

/// The reference example: plant
/// `a2 D^beta2 y + a1 D^beta1 y + a0 y = u` under a PD^δ controller
/// `u = K e + T_d D^delta e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleParams {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub beta2: f64,
    pub beta1: f64,
    pub td: f64,
    pub k: f64,
    pub delta: f64,
    pub sample_period: f64,
    pub n_steps: usize,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams {
            a2: 0.8,
            a1: 0.5,
            a0: 1.0,
            beta2: 2.2,
            beta1: 0.9,
            td: 5.326,
            k: 50.0,
            delta: 1.286,
            sample_period: 0.05,
            n_steps: 2000,
        }
    }
}

impl ExampleParams {
    pub fn discretization(&self) -> Result<Discretization> {
        Discretization::backward_euler(self.sample_period)
    }

    pub fn plant(&self) -> Result<FracSystem> {
        FracSystem::new(
            [(self.a2, self.beta2), (self.a1, self.beta1), (self.a0, 0.0)],
            [(1.0, 0.0)],
        )
    }

    pub fn controller(&self) -> Result<FracPid> {
        make_pd_delta(self.k, self.td, self.delta)
    }

    /// Unit step switched on at `k = 2`.
    pub fn setpoint(&self) -> Vec<f64> {
        step_setpoint(self.n_steps, StepTiming::Delayed, 1.0)
    }

    /// `K / (a0 + K)`.
    pub fn steady_state(&self) -> f64 {
        self.k / (self.a0 + self.k)
    }

    fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::TooFewSteps {
                min: 2,
                found: self.n_steps,
            });
        }
        for (what, value) in [
            ("beta2", self.beta2),
            ("beta1", self.beta1),
            ("delta", self.delta),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidOrder { what, value });
            }
        }
        self.discretization().map(|_| ())
    }
}

/// Closed-loop difference equation of the reference example, written out
/// term by term:
///
/// ```text
/// y_k = ( K w_k + T_d T^-delta sum_{j=0..k} c_j^(delta) w_{k-j}
///       - a2 T^-beta2 sum_{j=1..k} c_j^(beta2) y_{k-j}
///       - a1 T^-beta1 sum_{j=1..k} c_j^(beta1) y_{k-j}
///       - T_d T^-delta sum_{j=1..k} c_j^(delta) y_{k-j} )
///     / ( a2 T^-beta2 + a1 T^-beta1 + T_d T^-delta + a0 + K )
/// ```
///
/// with `y_0 = 0`, `w_0 = w_1 = 0` and `w_k = 1` afterwards. Full memory.
pub fn simulate_example_direct(params: &ExampleParams) -> Result<LoopResult> {
    params.validate()?;
    let n = params.n_steps;
    let period = params.sample_period;
    let c_delta = gl_coeffs(params.delta, n)?;
    let c_beta2 = gl_coeffs(params.beta2, n)?;
    let c_beta1 = gl_coeffs(params.beta1, n)?;
    let (c_delta, c_beta2, c_beta1) = (c_delta.coeffs(), c_beta2.coeffs(), c_beta1.coeffs());

    let s_delta = params.td * step_scale(period, params.delta);
    let s2 = params.a2 * step_scale(period, params.beta2);
    let s1 = params.a1 * step_scale(period, params.beta1);
    let denom = s2 * c_beta2[0] + s1 * c_beta1[0] + s_delta * c_delta[0] + (params.a0 + params.k);
    if denom == 0.0 {
        return Err(Error::DegenerateStep);
    }

    let w = params.setpoint();
    let mut y = vec![0.0; n];
    for k in 1..n {
        let numer = params.k * w[k] + s_delta * causal_sum(c_delta, &w, k, 0)
            - s2 * causal_sum(c_beta2, &y, k, 1)
            - s1 * causal_sum(c_beta1, &y, k, 1)
            - s_delta * causal_sum(c_delta, &y, k, 1);
        y[k] = numer / denom;
    }

    let e: Vec<f64> = w.iter().zip(&y).map(|(w, y)| w - y).collect();
    let u = (0..n)
        .map(|k| params.k * e[k] + s_delta * causal_sum(c_delta, &e, k, 0))
        .collect();

    Ok(LoopResult {
        sample_period: period,
        t: time_axis(period, n),
        w,
        e,
        u,
        y,
    })
}

struct ClosedLoopTerms {
    lhs: Vec<[f64; 4]>,
    rhs: Vec<[f64; 2]>,
}

fn closed_loop_terms(result: &LoopResult, params: &ExampleParams) -> Result<ClosedLoopTerms> {
    params.validate()?;
    if result.len() != params.n_steps {
        return Err(Error::LengthMismatch {
            what: "loop result",
            expected: params.n_steps,
            found: result.len(),
        });
    }
    let disc = params.discretization()?;
    let n = result.len();
    let op = |order: f64, signal: &[f64]| -> Result<Vec<f64>> {
        apply_operator(&euler_weights(order, &disc, n)?, signal)
    };
    let d2y = op(params.beta2, result.y())?;
    let d1y = op(params.beta1, result.y())?;
    let ddy = op(params.delta, result.y())?;
    let ddw = op(params.delta, result.w())?;

    let lhs = (0..n)
        .map(|k| {
            [
                params.a2 * d2y[k],
                params.a1 * d1y[k],
                params.td * ddy[k],
                (params.a0 + params.k) * result.y()[k],
            ]
        })
        .collect();
    let rhs = (0..n)
        .map(|k| [params.k * result.w()[k], params.td * ddw[k]])
        .collect();
    Ok(ClosedLoopTerms { lhs, rhs })
}

/// Largest absolute residual of the discretized closed-loop equation
///
/// ```text
/// a2 D^beta2 y + a1 D^beta1 y + T_d D^delta y + (a0 + K) y - K w - T_d D^delta w
/// ```
///
/// over `k >= 1` (`y_0` is imposed, not solved for). Full memory.
pub fn closed_loop_equation_residual(result: &LoopResult, params: &ExampleParams) -> Result<f64> {
    let terms = closed_loop_terms(result, params)?;
    Ok(terms
        .lhs
        .iter()
        .zip(&terms.rhs)
        .skip(1)
        .map(|(l, r)| (l.iter().sum::<f64>() - r.iter().sum::<f64>()).abs())
        .fold(0.0, f64::max))
}

/// Largest magnitude of any individual term in the closed-loop equation over
/// `k >= 1`; the natural scale for [`closed_loop_equation_residual`].
pub fn closed_loop_term_scale(result: &LoopResult, params: &ExampleParams) -> Result<f64> {
    let terms = closed_loop_terms(result, params)?;
    Ok(terms
        .lhs
        .iter()
        .zip(&terms.rhs)
        .skip(1)
        .flat_map(|(l, r)| l.iter().chain(r.iter()).map(|x| x.abs()))
        .fold(0.0, f64::max))
}
