//! Run configuration files.
//!
//! A configuration is a TOML document with a handful of top-level keys and
//! one table per concern:
//!
//! ```toml
//! mode = "simulate-loop"      # coeffs | operator | simulate-system |
//!                             # simulate-loop | example | freq-resp
//! n_steps = 2000
//! output = "loop.csv"         # optional; --out overrides it
//!
//! [discretization]
//! rule = "backward_euler"     # or "tustin"; default backward_euler
//! sample_period = 0.05
//! memory_length = 5.0         # seconds; omit for full memory
//!
//! [system]
//! denominator = [[0.8, 2.2], [0.5, 0.9], [1.0, 0.0]]   # [coeff, order]
//! numerator = [[1.0, 0.0]]
//!
//! [controller]
//! k = 50.0
//! td = 5.326
//! delta = 1.286
//!
//! [setpoint]
//! step_time = 0.1             # seconds
//! amplitude = 1.0
//!
//! [expect]
//! column = "y"
//! value = 0.980392
//! tolerance = 1e-3
//! ```
//!
//! Each mode accepts only the tables it uses:
//!
//! | mode              | required                          | optional          |
//! |-------------------|-----------------------------------|-------------------|
//! | `coeffs`          | `[coeffs]`                        |                   |
//! | `operator`        | `n_steps`, `[discretization]`, `[operator]` | `[input]` |
//! | `simulate-system` | `n_steps`, `[discretization]`, `[system]`   | `[input]` |
//! | `simulate-loop`   | `n_steps`, `[discretization]`, `[system]`, `[controller]` | `[setpoint]` |
//! | `example`         | `n_steps`, `[discretization]`     |                   |
//! | `freq-resp`       | `[discretization]`, `[system]`, `[frequency]` |       |
//!
//! `output` and `[expect]` are accepted by every mode.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use serde::Deserialize;
use toml::Spanned;

use crate::controller::FracPid;
use crate::error::Error;
use crate::feedback::ExampleParams;
use crate::gl::{Discretization, Memory, Rule};
use crate::system::FracSystem;

/// Upper bound on sample counts, term counts and frequency grid sizes.
pub const MAX_SAMPLES: usize = 1_000_000;

/// A configuration problem, with the offending field and, when known, the
/// 1-based line it was found on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            line,
            message: message.into(),
        }
    }

    fn missing(field: &str, line: Option<usize>) -> Self {
        Self::new(field, line, format!("missing field: {field}"))
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Which computation a configuration asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Coeffs,
    Operator,
    SimulateSystem,
    SimulateLoop,
    Example,
    FreqResp,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Coeffs,
        Mode::Operator,
        Mode::SimulateSystem,
        Mode::SimulateLoop,
        Mode::Example,
        Mode::FreqResp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Coeffs => "coeffs",
            Mode::Operator => "operator",
            Mode::SimulateSystem => "simulate-system",
            Mode::SimulateLoop => "simulate-loop",
            Mode::Example => "example",
            Mode::FreqResp => "freq-resp",
        }
    }

    pub fn from_name(name: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == name)
    }

    /// CSV header written for this mode.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Mode::Coeffs => &["j", "c_j"],
            Mode::Operator | Mode::SimulateSystem => &["k", "t", "u", "y"],
            Mode::SimulateLoop | Mode::Example => &["k", "t", "w", "e", "u", "y"],
            Mode::FreqResp => &["omega", "re", "im", "mag_db", "phase_deg"],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape of an input or setpoint signal.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    Step,
    Impulse,
    Ramp,
    /// Explicit samples; length must equal `n_steps`.
    Values(Vec<f64>),
}

/// Input or setpoint description. `step_time` is in seconds and is turned
/// into a sample index once the sample period is known.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    /// `None` uses the caller's default onset.
    pub step_time: Option<f64>,
    pub amplitude: f64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec {
            kind: SignalKind::Step,
            step_time: None,
            amplitude: 1.0,
        }
    }
}

/// Which rows an expectation applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSelector {
    /// Python-style index; negative counts from the end.
    Index(i64),
    All,
}

/// An embedded expected-value check run after the computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub column: String,
    pub rows: RowSelector,
    pub value: f64,
    pub tolerance: f64,
}

/// The validated work item.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Coeffs {
        order: f64,
        n_terms: usize,
    },
    Operator {
        disc: Discretization,
        order: f64,
        input: SignalSpec,
        n_steps: usize,
    },
    SimulateSystem {
        disc: Discretization,
        system: FracSystem,
        input: SignalSpec,
        n_steps: usize,
    },
    SimulateLoop {
        disc: Discretization,
        system: FracSystem,
        controller: FracPid,
        setpoint: SignalSpec,
        n_steps: usize,
    },
    Example {
        params: ExampleParams,
        memory: Memory,
    },
    FreqResp {
        disc: Discretization,
        system: FracSystem,
        omegas: Vec<f64>,
    },
}

/// A parsed and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub job: Job,
    pub output: Option<PathBuf>,
    pub expect: Option<Expectation>,
}

impl RunConfig {
    pub fn mode(&self) -> Mode {
        match self.job {
            Job::Coeffs { .. } => Mode::Coeffs,
            Job::Operator { .. } => Mode::Operator,
            Job::SimulateSystem { .. } => Mode::SimulateSystem,
            Job::SimulateLoop { .. } => Mode::SimulateLoop,
            Job::Example { .. } => Mode::Example,
            Job::FreqResp { .. } => Mode::FreqResp,
        }
    }

    /// Same configuration with a different sample period.
    pub fn with_sample_period(&self, sample_period: f64) -> Result<RunConfig, Error> {
        let mut out = self.clone();
        match &mut out.job {
            Job::Coeffs { .. } => return Err(not_sweepable("sample_period", Mode::Coeffs)),
            Job::Operator { disc, .. }
            | Job::SimulateSystem { disc, .. }
            | Job::SimulateLoop { disc, .. }
            | Job::FreqResp { disc, .. } => {
                *disc = Discretization::new(disc.rule(), sample_period, disc.memory())?;
            }
            Job::Example { params, memory } => {
                Discretization::backward_euler(sample_period)?.with_memory(*memory)?;
                params.sample_period = sample_period;
            }
        }
        Ok(out)
    }

    /// Same configuration with a short-memory window of `length` seconds.
    pub fn with_memory_length(&self, length: f64) -> Result<RunConfig, Error> {
        let mut out = self.clone();
        let memory = Memory::Short(length);
        match &mut out.job {
            Job::Coeffs { .. } => return Err(not_sweepable("memory_length", Mode::Coeffs)),
            Job::Operator { disc, .. }
            | Job::SimulateSystem { disc, .. }
            | Job::SimulateLoop { disc, .. }
            | Job::FreqResp { disc, .. } => {
                *disc = disc.with_memory(memory)?;
            }
            Job::Example {
                params,
                memory: slot,
            } => {
                params.discretization()?.with_memory(memory)?;
                *slot = memory;
            }
        }
        Ok(out)
    }
}

fn not_sweepable(field: &str, mode: Mode) -> Error {
    ConfigError::new(
        field,
        None,
        format!("{field} cannot be swept in mode {mode}"),
    )
    .into()
}

// ---------------------------------------------------------------------------
// raw document

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    mode: Option<Spanned<String>>,
    n_steps: Option<Spanned<i64>>,
    output: Option<Spanned<String>>,
    discretization: Option<Spanned<RawDisc>>,
    coeffs: Option<Spanned<RawCoeffs>>,
    operator: Option<Spanned<RawOperator>>,
    system: Option<Spanned<RawSystem>>,
    controller: Option<Spanned<RawController>>,
    input: Option<Spanned<RawSignal>>,
    setpoint: Option<Spanned<RawSignal>>,
    frequency: Option<Spanned<RawFrequency>>,
    expect: Option<Spanned<RawExpect>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisc {
    rule: Option<Spanned<String>>,
    sample_period: Option<Spanned<f64>>,
    memory_length: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoeffs {
    order: Option<Spanned<f64>>,
    n_terms: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    order: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    denominator: Option<Spanned<Vec<(f64, f64)>>>,
    numerator: Option<Spanned<Vec<(f64, f64)>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    k: Option<Spanned<f64>>,
    ti: Option<Spanned<f64>>,
    td: Option<Spanned<f64>>,
    lambda: Option<Spanned<f64>>,
    delta: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    kind: Option<Spanned<String>>,
    step_time: Option<Spanned<f64>>,
    amplitude: Option<Spanned<f64>>,
    values: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrequency {
    omegas: Option<Spanned<Vec<f64>>>,
    start: Option<Spanned<f64>>,
    stop: Option<Spanned<f64>>,
    points: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpect {
    column: Option<Spanned<String>>,
    row: Option<Spanned<i64>>,
    every_row: Option<bool>,
    value: Option<Spanned<f64>>,
    tolerance: Option<Spanned<f64>>,
}

// ---------------------------------------------------------------------------
// validation

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn at(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0.as_bytes()[..end]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1
    }

    fn of<T>(&self, value: &Spanned<T>) -> Option<usize> {
        Some(self.at(value.span()))
    }
}

type CfgResult<T> = Result<T, ConfigError>;

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> CfgResult<RunConfig> {
    let lines = Lines(text);
    let doc: RawDoc = toml::from_str(text).map_err(|err| {
        let line = err.span().map(|s| lines.at(s));
        ConfigError::new(
            "document",
            line,
            err.message().trim_end().replace('\n', " "),
        )
    })?;

    let mode_field = doc
        .mode
        .as_ref()
        .ok_or_else(|| ConfigError::missing("mode", None))?;
    let mode = Mode::from_name(mode_field.get_ref()).ok_or_else(|| {
        let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
        ConfigError::new(
            "mode",
            lines.of(mode_field),
            format!(
                "unknown mode '{}', expected one of {}",
                mode_field.get_ref(),
                names.join(", ")
            ),
        )
    })?;

    check_sections(&doc, mode, &lines)?;

    let job = match mode {
        Mode::Coeffs => {
            let sec = required(&doc.coeffs, "coeffs")?;
            let line = lines.of(sec);
            let sec = sec.get_ref();
            let order = finite(
                req(&sec.order, "coeffs.order", line)?,
                "coeffs.order",
                &lines,
            )?;
            let n_terms = count(
                req(&sec.n_terms, "coeffs.n_terms", line)?,
                "coeffs.n_terms",
                &lines,
            )?;
            Job::Coeffs { order, n_terms }
        }
        Mode::Operator => {
            let disc = discretization(&doc, &lines)?;
            let sec = required(&doc.operator, "operator")?;
            let line = lines.of(sec);
            let order = finite(
                req(&sec.get_ref().order, "operator.order", line)?,
                "operator.order",
                &lines,
            )?;
            let n_steps = n_steps(&doc, &lines)?;
            let input = signal(&doc.input, "input", n_steps, &lines)?;
            Job::Operator {
                disc,
                order,
                input,
                n_steps,
            }
        }
        Mode::SimulateSystem => {
            let disc = euler_discretization(&doc, &lines)?;
            let system = system(&doc, &lines)?;
            let n_steps = n_steps(&doc, &lines)?;
            let input = signal(&doc.input, "input", n_steps, &lines)?;
            Job::SimulateSystem {
                disc,
                system,
                input,
                n_steps,
            }
        }
        Mode::SimulateLoop => {
            let disc = euler_discretization(&doc, &lines)?;
            let system = system(&doc, &lines)?;
            let controller = controller(&doc, &lines)?;
            let n_steps = n_steps(&doc, &lines)?;
            let setpoint = signal(&doc.setpoint, "setpoint", n_steps, &lines)?;
            Job::SimulateLoop {
                disc,
                system,
                controller,
                setpoint,
                n_steps,
            }
        }
        Mode::Example => {
            let disc = euler_discretization(&doc, &lines)?;
            let n_steps = n_steps(&doc, &lines)?;
            if n_steps < 2 {
                let field = doc.n_steps.as_ref().expect("n_steps present");
                return Err(ConfigError::new(
                    "n_steps",
                    lines.of(field),
                    "n_steps must be at least 2 in mode example",
                ));
            }
            let params = ExampleParams {
                sample_period: disc.sample_period(),
                n_steps,
                ..ExampleParams::default()
            };
            Job::Example {
                params,
                memory: disc.memory(),
            }
        }
        Mode::FreqResp => {
            let disc = discretization(&doc, &lines)?;
            let system = system(&doc, &lines)?;
            let omegas = frequencies(&doc, disc.sample_period(), &lines)?;
            Job::FreqResp {
                disc,
                system,
                omegas,
            }
        }
    };

    let output = doc.output.as_ref().map(|o| PathBuf::from(o.get_ref()));
    let expect = doc
        .expect
        .as_ref()
        .map(|e| expectation(e, mode, &lines))
        .transpose()?;

    Ok(RunConfig {
        job,
        output,
        expect,
    })
}

fn check_sections(doc: &RawDoc, mode: Mode, lines: &Lines) -> CfgResult<()> {
    use Mode::*;
    let present: [(&str, Option<usize>, &[Mode]); 9] = [
        (
            "n_steps",
            doc.n_steps.as_ref().and_then(|s| lines.of(s)),
            &[Operator, SimulateSystem, SimulateLoop, Example],
        ),
        (
            "discretization",
            doc.discretization.as_ref().and_then(|s| lines.of(s)),
            &[Operator, SimulateSystem, SimulateLoop, Example, FreqResp],
        ),
        (
            "coeffs",
            doc.coeffs.as_ref().and_then(|s| lines.of(s)),
            &[Coeffs],
        ),
        (
            "operator",
            doc.operator.as_ref().and_then(|s| lines.of(s)),
            &[Operator],
        ),
        (
            "system",
            doc.system.as_ref().and_then(|s| lines.of(s)),
            &[SimulateSystem, SimulateLoop, FreqResp],
        ),
        (
            "controller",
            doc.controller.as_ref().and_then(|s| lines.of(s)),
            &[SimulateLoop],
        ),
        (
            "input",
            doc.input.as_ref().and_then(|s| lines.of(s)),
            &[Operator, SimulateSystem],
        ),
        (
            "setpoint",
            doc.setpoint.as_ref().and_then(|s| lines.of(s)),
            &[SimulateLoop],
        ),
        (
            "frequency",
            doc.frequency.as_ref().and_then(|s| lines.of(s)),
            &[FreqResp],
        ),
    ];
    for (name, line, modes) in present {
        if line.is_some() && !modes.contains(&mode) {
            return Err(ConfigError::new(
                name,
                line,
                format!("{name} is not used by mode {mode}"),
            ));
        }
    }
    Ok(())
}

fn required<'a, T>(section: &'a Option<Spanned<T>>, name: &str) -> CfgResult<&'a Spanned<T>> {
    section
        .as_ref()
        .ok_or_else(|| ConfigError::missing(name, None))
}

fn req<'a, T>(
    field: &'a Option<Spanned<T>>,
    name: &str,
    section_line: Option<usize>,
) -> CfgResult<&'a Spanned<T>> {
    field
        .as_ref()
        .ok_or_else(|| ConfigError::missing(name, section_line))
}

fn short_name(field: &str) -> &str {
    field.rsplit('.').next().unwrap_or(field)
}

fn finite(v: &Spanned<f64>, field: &str, lines: &Lines) -> CfgResult<f64> {
    let x = *v.get_ref();
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::new(
            field,
            lines.of(v),
            format!("{} must be finite", short_name(field)),
        ))
    }
}

fn positive(v: &Spanned<f64>, field: &str, lines: &Lines) -> CfgResult<f64> {
    let x = *v.get_ref();
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::new(
            field,
            lines.of(v),
            format!("{} must be positive", short_name(field)),
        ))
    }
}

fn non_negative(v: &Spanned<f64>, field: &str, lines: &Lines) -> CfgResult<f64> {
    let x = *v.get_ref();
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::new(
            field,
            lines.of(v),
            format!("{} must be non-negative", short_name(field)),
        ))
    }
}

fn count(v: &Spanned<i64>, field: &str, lines: &Lines) -> CfgResult<usize> {
    let x = *v.get_ref();
    if x < 1 {
        return Err(ConfigError::new(
            field,
            lines.of(v),
            format!("{} must be at least 1", short_name(field)),
        ));
    }
    if x as u64 > MAX_SAMPLES as u64 {
        return Err(ConfigError::new(
            field,
            lines.of(v),
            format!("{} must be at most {MAX_SAMPLES}", short_name(field)),
        ));
    }
    Ok(x as usize)
}

fn n_steps(doc: &RawDoc, lines: &Lines) -> CfgResult<usize> {
    count(req(&doc.n_steps, "n_steps", None)?, "n_steps", lines)
}

fn discretization(doc: &RawDoc, lines: &Lines) -> CfgResult<Discretization> {
    let sec = required(&doc.discretization, "discretization")?;
    let line = lines.of(sec);
    let sec = sec.get_ref();
    let rule = match &sec.rule {
        None => Rule::BackwardEuler,
        Some(r) => match r.get_ref().as_str() {
            "backward_euler" => Rule::BackwardEuler,
            "tustin" => Rule::Tustin,
            other => {
                return Err(ConfigError::new(
                    "discretization.rule",
                    lines.of(r),
                    format!("unknown rule '{other}', expected backward_euler or tustin"),
                ))
            }
        },
    };
    let period = positive(
        req(&sec.sample_period, "discretization.sample_period", line)?,
        "discretization.sample_period",
        lines,
    )?;
    let memory = match &sec.memory_length {
        None => Memory::Full,
        Some(l) => {
            let length = positive(l, "discretization.memory_length", lines)?;
            if length < period {
                return Err(ConfigError::new(
                    "discretization.memory_length",
                    lines.of(l),
                    "memory_length must be at least sample_period",
                ));
            }
            Memory::Short(length)
        }
    };
    Discretization::new(rule, period, memory)
        .map_err(|e| ConfigError::new("discretization", line, e.to_string()))
}

fn euler_discretization(doc: &RawDoc, lines: &Lines) -> CfgResult<Discretization> {
    let disc = discretization(doc, lines)?;
    if disc.rule() != Rule::BackwardEuler {
        let sec = doc.discretization.as_ref().expect("checked above");
        let line = sec.get_ref().rule.as_ref().and_then(|r| lines.of(r));
        return Err(ConfigError::new(
            "discretization.rule",
            line,
            "time-domain simulation requires rule backward_euler",
        ));
    }
    Ok(disc)
}

fn system(doc: &RawDoc, lines: &Lines) -> CfgResult<FracSystem> {
    let sec = required(&doc.system, "system")?;
    let line = lines.of(sec);
    let raw = sec.get_ref();
    let denom = req(&raw.denominator, "system.denominator", line)?;
    let numer = req(&raw.numerator, "system.numerator", line)?;
    let fail =
        |field: &str, at: Option<usize>, e: Error| ConfigError::new(field, at, e.to_string());
    for (field, terms) in [("system.denominator", denom), ("system.numerator", numer)] {
        for (coeff, order) in terms.get_ref() {
            if !coeff.is_finite() {
                return Err(ConfigError::new(
                    field,
                    lines.of(terms),
                    "coefficients must be finite",
                ));
            }
            if !(order.is_finite() && *order >= 0.0) {
                return Err(ConfigError::new(
                    field,
                    lines.of(terms),
                    "orders must be non-negative",
                ));
            }
        }
    }
    FracSystem::new(
        denom.get_ref().iter().copied(),
        numer.get_ref().iter().copied(),
    )
    .map_err(|e| fail("system", line, e))
}

fn controller(doc: &RawDoc, lines: &Lines) -> CfgResult<FracPid> {
    let sec = required(&doc.controller, "controller")?;
    let line = lines.of(sec);
    let raw = sec.get_ref();
    let gain = |v: &Option<Spanned<f64>>, field: &str| -> CfgResult<f64> {
        v.as_ref()
            .map(|x| finite(x, field, lines))
            .transpose()
            .map(|x| x.unwrap_or(0.0))
    };
    let k = gain(&raw.k, "controller.k")?;
    let ti = gain(&raw.ti, "controller.ti")?;
    let td = gain(&raw.td, "controller.td")?;
    // an order is needed only when its gain is nonzero
    let order = |v: &Option<Spanned<f64>>, field: &str, needed: bool| -> CfgResult<f64> {
        match v {
            Some(x) => non_negative(x, field, lines),
            None if needed => Err(ConfigError::missing(field, line)),
            None => Ok(0.0),
        }
    };
    let lambda = order(&raw.lambda, "controller.lambda", ti != 0.0)?;
    let delta = order(&raw.delta, "controller.delta", td != 0.0)?;
    FracPid::new(k, ti, td, lambda, delta)
        .map_err(|e| ConfigError::new("controller", line, e.to_string()))
}

fn signal(
    section: &Option<Spanned<RawSignal>>,
    name: &str,
    n_steps: usize,
    lines: &Lines,
) -> CfgResult<SignalSpec> {
    let Some(sec) = section else {
        return Ok(SignalSpec::default());
    };
    let raw = sec.get_ref();
    let field = |f: &str| format!("{name}.{f}");
    let amplitude = raw
        .amplitude
        .as_ref()
        .map(|a| finite(a, &field("amplitude"), lines))
        .transpose()?
        .unwrap_or(1.0);
    let step_time = raw
        .step_time
        .as_ref()
        .map(|s| non_negative(s, &field("step_time"), lines))
        .transpose()?;
    let kind_name = raw.kind.as_ref().map(|k| k.get_ref().as_str());
    let kind = match (kind_name, &raw.values) {
        (None | Some("values"), Some(values)) => {
            if values.get_ref().iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::new(
                    field("values"),
                    lines.of(values),
                    "values must be finite",
                ));
            }
            if values.get_ref().len() != n_steps {
                return Err(ConfigError::new(
                    field("values"),
                    lines.of(values),
                    format!(
                        "values has {} samples but n_steps is {n_steps}",
                        values.get_ref().len()
                    ),
                ));
            }
            SignalKind::Values(values.get_ref().clone())
        }
        (Some("values"), None) => {
            return Err(ConfigError::missing(&field("values"), lines.of(sec)))
        }
        (_, Some(values)) => {
            return Err(ConfigError::new(
                field("values"),
                lines.of(values),
                "values is only allowed with kind = \"values\"",
            ))
        }
        (None | Some("step"), None) => SignalKind::Step,
        (Some("impulse"), None) => SignalKind::Impulse,
        (Some("ramp"), None) => SignalKind::Ramp,
        (Some(other), None) => {
            return Err(ConfigError::new(
                field("kind"),
                raw.kind.as_ref().and_then(|k| lines.of(k)),
                format!("unknown signal kind '{other}', expected step, impulse, ramp or values"),
            ))
        }
    };
    Ok(SignalSpec {
        kind,
        step_time,
        amplitude,
    })
}

fn frequencies(doc: &RawDoc, sample_period: f64, lines: &Lines) -> CfgResult<Vec<f64>> {
    let sec = required(&doc.frequency, "frequency")?;
    let line = lines.of(sec);
    let raw = sec.get_ref();
    let nyquist = std::f64::consts::PI / sample_period;
    let in_band = |w: f64| w > 0.0 && w <= nyquist;
    match (&raw.omegas, &raw.start, &raw.stop, &raw.points) {
        (Some(list), None, None, None) => {
            let omegas = list.get_ref();
            if omegas.is_empty() {
                return Err(ConfigError::new(
                    "frequency.omegas",
                    lines.of(list),
                    "omegas is empty",
                ));
            }
            if omegas.len() > MAX_SAMPLES {
                return Err(ConfigError::new(
                    "frequency.omegas",
                    lines.of(list),
                    format!("omegas must have at most {MAX_SAMPLES} entries"),
                ));
            }
            if let Some(bad) = omegas.iter().find(|w| !in_band(**w)) {
                return Err(ConfigError::new(
                    "frequency.omegas",
                    lines.of(list),
                    format!("omega {bad} outside (0, pi/T] = (0, {nyquist}]"),
                ));
            }
            Ok(omegas.clone())
        }
        (None, Some(start), Some(stop), Some(points)) => {
            let lo = positive(start, "frequency.start", lines)?;
            let hi = positive(stop, "frequency.stop", lines)?;
            let n = count(points, "frequency.points", lines)?;
            if hi < lo || !in_band(hi) {
                return Err(ConfigError::new(
                    "frequency.stop",
                    lines.of(stop),
                    format!("stop must lie in [start, pi/T] = [{lo}, {nyquist}]"),
                ));
            }
            Ok(log_grid(lo, hi, n))
        }
        _ => Err(ConfigError::new(
            "frequency",
            line,
            "frequency needs either omegas or all of start, stop, points",
        )),
    }
}

/// `n` logarithmically spaced points from `lo` to `hi`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn expectation(sec: &Spanned<RawExpect>, mode: Mode, lines: &Lines) -> CfgResult<Expectation> {
    let line = lines.of(sec);
    let raw = sec.get_ref();
    let column = req(&raw.column, "expect.column", line)?;
    if !mode.columns().contains(&column.get_ref().as_str()) {
        return Err(ConfigError::new(
            "expect.column",
            lines.of(column),
            format!(
                "unknown column '{}' for mode {mode}, expected one of {}",
                column.get_ref(),
                mode.columns().join(", ")
            ),
        ));
    }
    let rows = match (raw.every_row, &raw.row) {
        (Some(true), Some(row)) => {
            return Err(ConfigError::new(
                "expect.row",
                lines.of(row),
                "row and every_row are mutually exclusive",
            ))
        }
        (Some(true), None) => RowSelector::All,
        (_, Some(row)) => RowSelector::Index(*row.get_ref()),
        (_, None) => RowSelector::Index(-1),
    };
    let value = finite(
        req(&raw.value, "expect.value", line)?,
        "expect.value",
        lines,
    )?;
    let tolerance = non_negative(
        req(&raw.tolerance, "expect.tolerance", line)?,
        "expect.tolerance",
        lines,
    )?;
    Ok(Expectation {
        column: column.get_ref().clone(),
        rows,
        value,
        tolerance,
    })
}

// ---------------------------------------------------------------------------
// sweeps

/// A configuration field that `--sweep` can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepField {
    SamplePeriod,
    MemoryLength,
}

impl SweepField {
    pub fn name(self) -> &'static str {
        match self {
            SweepField::SamplePeriod => "sample_period",
            SweepField::MemoryLength => "memory_length",
        }
    }
}

/// `field=v1,v2,...`. Each value keeps its original spelling for file naming.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub field: SweepField,
    pub values: Vec<(String, f64)>,
}

impl Sweep {
    /// Applies one sweep value to a configuration.
    pub fn apply(&self, config: &RunConfig, value: f64) -> Result<RunConfig, Error> {
        match self.field {
            SweepField::SamplePeriod => config.with_sample_period(value),
            SweepField::MemoryLength => config.with_memory_length(value),
        }
    }
}

/// Parses a `--sweep` argument such as `memory_length=1,2,5,10`.
pub fn parse_sweep(arg: &str) -> CfgResult<Sweep> {
    let err = |msg: String| ConfigError::new("sweep", None, msg);
    let (name, list) = arg
        .split_once('=')
        .ok_or_else(|| err(format!("sweep '{arg}' is not of the form field=v1,v2,...")))?;
    let field = match name.trim() {
        "sample_period" => SweepField::SamplePeriod,
        "memory_length" => SweepField::MemoryLength,
        other => {
            return Err(err(format!(
                "cannot sweep '{other}', expected sample_period or memory_length"
            )))
        }
    };
    let mut values = Vec::new();
    for raw in list.split(',') {
        let text = raw.trim();
        let value: f64 = text
            .parse()
            .map_err(|_| err(format!("sweep value '{text}' is not a number")))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(err(format!(
                "{} must be positive, got {text}",
                field.name()
            )));
        }
        if values.iter().any(|(t, _)| t == text) {
            return Err(err(format!("sweep value {text} is repeated")));
        }
        values.push((text.to_string(), value));
    }
    Ok(Sweep { field, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_needs_mode() {
        let err = parse_config("").unwrap_err();
        assert_eq!(err.to_string(), "missing field: mode");
        assert_eq!(err.field, "mode");
    }

    #[test]
    fn example_preset_minimal() {
        let cfg = parse_config(
            "mode = \"example\"\nn_steps = 2000\n[discretization]\nsample_period = 0.05\n",
        )
        .unwrap();
        match cfg.job {
            Job::Example { params, memory } => {
                assert_eq!(params, ExampleParams::default());
                assert_eq!(memory, Memory::Full);
            }
            other => panic!("unexpected job {other:?}"),
        }
        assert_eq!(cfg.mode(), Mode::Example);
    }

    #[test]
    fn negative_sample_period() {
        let text = "mode = \"example\"\nn_steps = 10\n\n[discretization]\nsample_period = -0.1\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.to_string(), "line 5: sample_period must be positive");
        assert_eq!(err.field, "discretization.sample_period");
    }

    #[test]
    fn unknown_key_named() {
        let text = "mode = \"coeffs\"\n[coeffs]\norder = 1\nn_terms = 4\nbogus = 3\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.message.contains("bogus"), "{err}");
        assert_eq!(err.line, Some(5));
    }

    #[test]
    fn extraneous_section_rejected() {
        let text = "mode = \"coeffs\"\n[coeffs]\norder = 1\nn_terms = 4\n[controller]\nk = 1\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.field, "controller");
        assert!(
            err.to_string()
                .contains("controller is not used by mode coeffs"),
            "{err}"
        );
    }

    #[test]
    fn missing_nested_field() {
        let text = "mode = \"coeffs\"\n[coeffs]\norder = 1\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.field, "coeffs.n_terms");
        assert!(err.to_string().contains("missing field: coeffs.n_terms"));
    }

    #[test]
    fn malformed_document() {
        let err = parse_config("mode = \n").unwrap_err();
        assert_eq!(err.field, "document");
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn orders_must_be_non_negative() {
        let text = "mode = \"simulate-system\"\nn_steps = 5\n[discretization]\nsample_period = 0.1\n[system]\ndenominator = [[1.0, -1.0]]\nnumerator = [[1.0, 0.0]]\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.field, "system.denominator");
        assert_eq!(err.line, Some(6));
    }

    #[test]
    fn n_steps_range() {
        let text = "mode = \"example\"\nn_steps = 0\n[discretization]\nsample_period = 0.1\n";
        assert_eq!(
            parse_config(text).unwrap_err().to_string(),
            "line 2: n_steps must be at least 1"
        );
        let text = "mode = \"example\"\nn_steps = 1\n[discretization]\nsample_period = 0.1\n";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn tustin_only_for_operator_and_frequency() {
        let text = "mode = \"simulate-system\"\nn_steps = 5\n[discretization]\nrule = \"tustin\"\nsample_period = 0.1\n[system]\ndenominator = [[1.0, 1.0]]\nnumerator = [[1.0, 0.0]]\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.field, "discretization.rule");
        let text = "mode = \"operator\"\nn_steps = 5\n[discretization]\nrule = \"tustin\"\nsample_period = 0.1\n[operator]\norder = 0.5\n";
        assert!(parse_config(text).is_ok());
    }

    #[test]
    fn controller_orders_required_with_gain() {
        let base = "mode = \"simulate-loop\"\nn_steps = 5\n[discretization]\nsample_period = 0.1\n[system]\ndenominator = [[1.0, 1.0]]\nnumerator = [[1.0, 0.0]]\n";
        let err = parse_config(&format!("{base}[controller]\nk = 1\ntd = 2\n")).unwrap_err();
        assert_eq!(err.field, "controller.delta");
        let cfg =
            parse_config(&format!("{base}[controller]\nk = 1\ntd = 2\ndelta = 0.5\n")).unwrap();
        match cfg.job {
            Job::SimulateLoop { controller, .. } => {
                assert_eq!(controller, FracPid::new(1.0, 0.0, 2.0, 0.0, 0.5).unwrap())
            }
            other => panic!("unexpected job {other:?}"),
        }
    }

    #[test]
    fn frequency_grid() {
        let g = log_grid(0.1, 10.0, 3);
        assert_eq!(g[0], 0.1);
        assert!((g[1] - 1.0).abs() < 1e-12);
        assert_eq!(g[2], 10.0);
        let text = "mode = \"freq-resp\"\n[discretization]\nsample_period = 0.1\n[system]\ndenominator = [[1.0, 0.0]]\nnumerator = [[1.0, 0.0]]\n[frequency]\nomegas = [1.0, 40.0]\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.field, "frequency.omegas");
    }

    #[test]
    fn expectation_column_checked() {
        let text = "mode = \"coeffs\"\n[coeffs]\norder = 1\nn_terms = 4\n[expect]\ncolumn = \"y\"\nvalue = 0\ntolerance = 0\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.field, "expect.column");
    }

    #[test]
    fn signal_values_length() {
        let text = "mode = \"operator\"\nn_steps = 3\n[discretization]\nsample_period = 1\n[operator]\norder = 1\n[input]\nvalues = [0, 1]\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.field, "input.values");
    }

    #[test]
    fn sweep_parsing() {
        let s = parse_sweep("memory_length=1,2,5,10").unwrap();
        assert_eq!(s.field, SweepField::MemoryLength);
        assert_eq!(s.values.len(), 4);
        assert_eq!(s.values[2], ("5".to_string(), 5.0));
        assert!(parse_sweep("memory_length").is_err());
        assert!(parse_sweep("k=1,2").is_err());
        assert!(parse_sweep("sample_period=0.1,-1").is_err());
        assert!(parse_sweep("sample_period=0.1,0.1").is_err());
        assert!(parse_sweep("sample_period=").is_err());
    }

    #[test]
    fn sweep_overrides() {
        let cfg = parse_config(
            "mode = \"example\"\nn_steps = 100\n[discretization]\nsample_period = 0.05\n",
        )
        .unwrap();
        let swept = cfg.with_memory_length(2.0).unwrap();
        match swept.job {
            Job::Example { memory, .. } => assert_eq!(memory, Memory::Short(2.0)),
            other => panic!("unexpected job {other:?}"),
        }
        assert!(cfg.with_memory_length(0.01).is_err());
        let swept = cfg.with_sample_period(0.1).unwrap();
        match swept.job {
            Job::Example { params, .. } => assert_eq!(params.sample_period, 0.1),
            other => panic!("unexpected job {other:?}"),
        }
    }
}
