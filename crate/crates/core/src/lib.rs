//! Discrete fractional calculus for control.
//!
//! * [`gl`]: Grünwald-Letnikov coefficients and operator weights under the
//!   backward-Euler and Tustin generating functions, with optional short
//!   memory.
//! * [`system`]: fractional-order plants, their difference-equation response
//!   and frequency response.
//! * [`controller`]: the PI^λD^δ controller and its classical special cases.
//! * [`feedback`]: the unity-feedback loop and the reference PD^δ example.
//! * [`config`] and [`run`]: configuration parsing and CSV output for the
//!   `fracdisc` command-line tool.

pub mod config;
pub mod controller;
pub mod error;
pub mod feedback;
pub mod gl;
pub mod run;
pub mod system;

pub use config::{parse_config, parse_sweep, ConfigError, Mode, RunConfig};
pub use controller::{
    controller_feedthrough, controller_response, make_pd_delta, make_pid, FracPid,
};
pub use error::{Error, Result};
pub use feedback::{
    closed_loop_equation_residual, closed_loop_term_scale, simulate_example_direct, simulate_loop,
    step_setpoint, ExampleParams, LoopResult, StepTiming,
};
pub use gl::{
    apply_operator, euler_weights, gl_coeff_direct, gl_coeffs, tustin_weights, BinomialTable,
    Discretization, Memory, OperatorWeights, Rule,
};
pub use run::{run, run_sweep, Table};
pub use system::{freq_response, simulate_system, FracSystem, SimResult, Term};
