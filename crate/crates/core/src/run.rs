//! Executes a [`RunConfig`] and renders the result as CSV.
//!
//! Numbers are printed in plain decimal notation rounded to 12 significant
//! digits; index columns (`k`, `j`) are printed as integers. Lines end in LF.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{
    Expectation, Job, Mode, RowSelector, RunConfig, SignalKind, SignalSpec, Sweep,
};
use crate::controller::FracPid;
use crate::error::{Error, Result};
use crate::feedback::{simulate_example_direct, simulate_loop, LoopResult, DELAYED_STEP_ONSET};
use crate::gl::{
    apply_operator, euler_weights, gl_coeffs, tustin_weights, Discretization, Memory, Rule,
};
use crate::system::{freq_response, simulate_system, FracSystem};

/// Environment variable capping sweep concurrency.
pub const THREADS_ENV: &str = "FRACDISC_THREADS";

/// A computed result: a header plus rows of equal width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    mode: Mode,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn columns(&self) -> &'static [&'static str] {
        self.mode.columns()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Values of one named column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns().iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    fn integer_index(&self) -> bool {
        matches!(self.columns()[0], "k" | "j")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns().join(","));
        out.push('\n');
        let integer_index = self.integer_index();
        for row in &self.rows {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if i == 0 && integer_index {
                    let _ = write!(out, "{}", *x as u64);
                } else {
                    out.push_str(&format_number(*x));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Plain decimal rendering rounded to 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

fn onset_index(spec: &SignalSpec, sample_period: f64, default: usize) -> usize {
    match spec.step_time {
        None => default,
        Some(time) => ((time / sample_period) - 1e-9).ceil().max(0.0) as usize,
    }
}

/// Samples an input or setpoint description.
pub fn realize_signal(
    spec: &SignalSpec,
    n: usize,
    sample_period: f64,
    default_onset: usize,
) -> Vec<f64> {
    let onset = onset_index(spec, sample_period, default_onset);
    let a = spec.amplitude;
    match &spec.kind {
        SignalKind::Values(values) => values.clone(),
        SignalKind::Step => (0..n).map(|k| if k >= onset { a } else { 0.0 }).collect(),
        SignalKind::Impulse => (0..n).map(|k| if k == onset { a } else { 0.0 }).collect(),
        SignalKind::Ramp => (0..n)
            .map(|k| {
                if k >= onset {
                    a * (k - onset) as f64 * sample_period
                } else {
                    0.0
                }
            })
            .collect(),
    }
}

fn open_loop_rows(t: &[f64], u: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    (0..y.len())
        .map(|k| vec![k as f64, t[k], u[k], y[k]])
        .collect()
}

fn loop_rows(res: &LoopResult) -> Vec<Vec<f64>> {
    (0..res.len())
        .map(|k| {
            vec![
                k as f64,
                res.t()[k],
                res.w()[k],
                res.e()[k],
                res.u()[k],
                res.y()[k],
            ]
        })
        .collect()
}

fn run_loop(
    sys: &FracSystem,
    ctl: &FracPid,
    setpoint: &[f64],
    disc: &Discretization,
) -> Result<Vec<Vec<f64>>> {
    Ok(loop_rows(&simulate_loop(sys, ctl, setpoint, disc)?))
}

fn compute(job: &Job) -> Result<Vec<Vec<f64>>> {
    match job {
        Job::Coeffs { order, n_terms } => Ok(gl_coeffs(*order, *n_terms)?
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| vec![j as f64, *c])
            .collect()),
        Job::Operator {
            disc,
            order,
            input,
            n_steps,
        } => {
            let period = disc.sample_period();
            let u = realize_signal(input, *n_steps, period, 0);
            let weights = match disc.rule() {
                Rule::BackwardEuler => euler_weights(*order, disc, *n_steps)?,
                Rule::Tustin => tustin_weights(*order, disc, *n_steps)?,
            };
            let y = apply_operator(&weights, &u)?;
            let t: Vec<f64> = (0..*n_steps).map(|k| k as f64 * period).collect();
            Ok(open_loop_rows(&t, &u, &y))
        }
        Job::SimulateSystem {
            disc,
            system,
            input,
            n_steps,
        } => {
            let u = realize_signal(input, *n_steps, disc.sample_period(), 0);
            let res = simulate_system(system, &u, disc)?;
            Ok(open_loop_rows(res.t(), res.u(), res.y()))
        }
        Job::SimulateLoop {
            disc,
            system,
            controller,
            setpoint,
            n_steps,
        } => {
            let w = realize_signal(setpoint, *n_steps, disc.sample_period(), DELAYED_STEP_ONSET);
            run_loop(system, controller, &w, disc)
        }
        Job::Example { params, memory } => match memory {
            Memory::Full => Ok(loop_rows(&simulate_example_direct(params)?)),
            Memory::Short(_) => {
                let disc = params.discretization()?.with_memory(*memory)?;
                run_loop(
                    &params.plant()?,
                    &params.controller()?,
                    &params.setpoint(),
                    &disc,
                )
            }
        },
        Job::FreqResp {
            disc,
            system,
            omegas,
        } => {
            let h = freq_response(system, disc, omegas)?;
            Ok(omegas
                .iter()
                .zip(h)
                .map(|(w, h)| {
                    vec![
                        *w,
                        h.re,
                        h.im,
                        20.0 * h.norm().log10(),
                        h.arg().to_degrees(),
                    ]
                })
                .collect())
        }
    }
}

fn check(table: &Table, expect: &Expectation) -> Result<()> {
    let values = table
        .column(&expect.column)
        .ok_or_else(|| Error::Expectation(format!("no column {}", expect.column)))?;
    let rows: Vec<usize> = match expect.rows {
        RowSelector::All => (0..values.len()).collect(),
        RowSelector::Index(i) => {
            let n = values.len() as i64;
            let idx = if i < 0 { n + i } else { i };
            if idx < 0 || idx >= n {
                return Err(Error::Expectation(format!(
                    "row {i} out of range for {n} rows"
                )));
            }
            vec![idx as usize]
        }
    };
    for row in rows {
        let got = values[row];
        let diff = (got - expect.value).abs();
        if diff.is_nan() || diff > expect.tolerance {
            return Err(Error::Expectation(format!(
                "{} at row {row} is {}, expected {} +/- {}",
                expect.column,
                format_number(got),
                format_number(expect.value),
                format_number(expect.tolerance)
            )));
        }
    }
    Ok(())
}

/// Runs the configured computation and any embedded expectation.
pub fn run(config: &RunConfig) -> Result<Table> {
    let table = Table {
        mode: config.mode(),
        rows: compute(&config.job)?,
    };
    if let Some(expect) = &config.expect {
        check(&table, expect)?;
    }
    Ok(table)
}

/// Runs and writes the CSV to `path`.
pub fn run_to_file(config: &RunConfig, path: &Path) -> Result<()> {
    let table = run(config)?;
    fs::write(path, table.to_csv())?;
    Ok(())
}

/// Output path for one sweep value: `dir/stem.field=value.ext` becomes
/// `dir/stem_field_value.ext`.
pub fn sweep_output_path(out: &Path, field: &str, value_text: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{field}_{value_text}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{field}_{value_text}"),
    };
    out.with_file_name(name)
}

/// Runs `config` once per sweep value on up to `threads` workers, writing one
/// CSV per value. Returns the written paths in sweep order; on failure the
/// error of the first failing value (in sweep order) is returned.
pub fn run_sweep(
    config: &RunConfig,
    sweep: &Sweep,
    out: &Path,
    threads: Option<usize>,
) -> Result<Vec<PathBuf>> {
    let jobs = sweep
        .values
        .iter()
        .map(|(text, value)| {
            let cfg = sweep.apply(config, *value)?;
            Ok((cfg, sweep_output_path(out, sweep.field.name(), text)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Io(e.to_string()))?;
    let results: Vec<Result<PathBuf>> = pool.install(|| {
        jobs.par_iter()
            .map(|(cfg, path)| run_to_file(cfg, path).map(|_| path.clone()))
            .collect()
    });
    results.into_iter().collect()
}

/// Reads the sweep concurrency cap from the environment.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-1.5), "-1.5");
        assert_eq!(format_number(50.0 / 51.0), "0.980392156863");
        assert_eq!(format_number(1.0 / 3.0 * 1e-5), "0.00000333333333333");
        assert_eq!(format_number(123456789012345.0), "123456789012000");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn coeffs_csv() {
        let cfg = parse_config("mode = \"coeffs\"\n[coeffs]\norder = 1\nn_terms = 4\n").unwrap();
        let table = run(&cfg).unwrap();
        assert_eq!(table.to_csv(), "j,c_j\n0,1\n1,-1\n2,0\n3,0\n");
    }

    #[test]
    fn signal_shapes() {
        let step = SignalSpec {
            step_time: Some(0.2),
            ..SignalSpec::default()
        };
        assert_eq!(
            realize_signal(&step, 5, 0.1, 0),
            vec![0.0, 0.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(
            realize_signal(&SignalSpec::default(), 4, 0.1, DELAYED_STEP_ONSET),
            vec![0.0, 0.0, 1.0, 1.0]
        );
        let ramp = SignalSpec {
            kind: SignalKind::Ramp,
            step_time: None,
            amplitude: 2.0,
        };
        assert_eq!(realize_signal(&ramp, 3, 0.5, 0), vec![0.0, 1.0, 2.0]);
        let imp = SignalSpec {
            kind: SignalKind::Impulse,
            ..SignalSpec::default()
        };
        assert_eq!(realize_signal(&imp, 3, 0.5, 1), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn expectation_failure_reported() {
        let cfg = parse_config(
            "mode = \"coeffs\"\n[coeffs]\norder = 1\nn_terms = 4\n[expect]\ncolumn = \"c_j\"\nrow = 1\nvalue = 1\ntolerance = 0.5\n",
        )
        .unwrap();
        match run(&cfg) {
            Err(Error::Expectation(msg)) => assert!(msg.contains("row 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sweep_paths() {
        assert_eq!(
            sweep_output_path(Path::new("/tmp/x/run.csv"), "memory_length", "2.5"),
            PathBuf::from("/tmp/x/run_memory_length_2.5.csv")
        );
        assert_eq!(
            sweep_output_path(Path::new("run"), "sample_period", "0.1"),
            PathBuf::from("run_sample_period_0.1")
        );
    }
}
