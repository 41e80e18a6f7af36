//! Fractional-order LTI plants
//!
//! ```text
//! sum_i a_i D^beta_i y(t) = sum_i b_i D^alpha_i u(t)
//! ```
//!
//! simulated through their GL difference equation and evaluated on the unit
//! circle.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gl::{causal_sum, euler_weights, Discretization, Rule};

/// One `coeff * D^order` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub order: f64,
}

impl Term {
    pub fn new(coeff: f64, order: f64) -> Self {
        Term { coeff, order }
    }
}

impl From<(f64, f64)> for Term {
    fn from((coeff, order): (f64, f64)) -> Self {
        Term { coeff, order }
    }
}

/// A single-input single-output fractional-order system.
///
/// Terms are stored sorted by strictly increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct FracSystem {
    denom: Vec<Term>,
    numer: Vec<Term>,
}

impl FracSystem {
    /// Builds a system from `(coeff, order)` pairs for the output side
    /// (`denom`) and the input side (`numer`). Pairs may be given in any
    /// order; repeated orders within a side are rejected.
    pub fn new<D, N>(denom: D, numer: N) -> Result<Self>
    where
        D: IntoIterator,
        D::Item: Into<Term>,
        N: IntoIterator,
        N::Item: Into<Term>,
    {
        let denom = normalize(denom.into_iter().map(Into::into).collect(), "denominator")?;
        let numer = normalize(numer.into_iter().map(Into::into).collect(), "numerator")?;
        match denom.last() {
            None => return Err(Error::InvalidSystem("denominator is empty".into())),
            Some(lead) if lead.coeff == 0.0 => {
                return Err(Error::InvalidSystem(
                    "leading denominator coefficient is zero".into(),
                ))
            }
            Some(_) => {}
        }
        Ok(FracSystem { denom, numer })
    }

    /// Output-side terms, increasing order.
    pub fn denom(&self) -> &[Term] {
        &self.denom
    }

    /// Input-side terms, increasing order.
    pub fn numer(&self) -> &[Term] {
        &self.numer
    }

    /// `sum b_i T^-alpha_i / sum a_i T^-beta_i`, the instantaneous gain from
    /// `u_k` to `y_k` under backward Euler.
    pub fn feedthrough(&self, disc: &Discretization) -> Result<f64> {
        disc.require(Rule::BackwardEuler)?;
        let a0 = combined_weights(&self.denom, disc, 1)?[0];
        if a0 == 0.0 {
            return Err(Error::DegenerateStep);
        }
        let b0 = combined_weights(&self.numer, disc, 1)?[0];
        Ok(b0 / a0)
    }
}

fn normalize(mut terms: Vec<Term>, side: &str) -> Result<Vec<Term>> {
    for t in &terms {
        if !t.coeff.is_finite() {
            return Err(Error::InvalidSystem(format!(
                "{side} coefficient {} is not finite",
                t.coeff
            )));
        }
        if !(t.order.is_finite() && t.order >= 0.0) {
            return Err(Error::InvalidOrder {
                what: "system term",
                value: t.order,
            });
        }
    }
    terms.sort_by(|a, b| a.order.total_cmp(&b.order));
    if terms.windows(2).any(|w| w[0].order == w[1].order) {
        return Err(Error::InvalidSystem(format!("{side} repeats an order")));
    }
    Ok(terms)
}

/// `sum_i coeff_i T^-order_i c_j^(order_i)` for `j < n`, truncated by the
/// memory policy.
pub(crate) fn combined_weights(
    terms: &[Term],
    disc: &Discretization,
    n: usize,
) -> Result<Vec<f64>> {
    let len = disc.term_count(n.max(1));
    let mut out = vec![0.0; len];
    for term in terms {
        let w = euler_weights(term.order, disc, len)?;
        for (acc, x) in out.iter_mut().zip(w.weights()) {
            *acc += term.coeff * x;
        }
    }
    Ok(out)
}

/// Sampled open-loop response.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    sample_period: f64,
    t: Vec<f64>,
    u: Vec<f64>,
    y: Vec<f64>,
}

impl SimResult {
    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn t(&self) -> &[f64] {
        &self.t
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

pub(crate) fn time_axis(sample_period: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * sample_period).collect()
}

/// Simulates the plant's response to `input` with the backward-Euler GL
/// difference equation.
///
/// `y_0 = 0`; for `k >= 1`
///
/// ```text
/// y_k = ( sum_i b_i T^-alpha_i sum_{j>=0} c_j u_{k-j}
///       - sum_i a_i T^-beta_i sum_{j>=1} c_j y_{k-j} ) / sum_i a_i T^-beta_i
/// ```
///
/// with every inner sum truncated by the memory policy.
pub fn simulate_system(
    sys: &FracSystem,
    input: &[f64],
    disc: &Discretization,
) -> Result<SimResult> {
    disc.require(Rule::BackwardEuler)?;
    if input.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n = input.len();
    let a = combined_weights(&sys.denom, disc, n)?;
    let b = combined_weights(&sys.numer, disc, n)?;
    if a[0] == 0.0 {
        return Err(Error::DegenerateStep);
    }

    let mut y = vec![0.0; n];
    for k in 1..n {
        y[k] = (causal_sum(&b, input, k, 0) - causal_sum(&a, &y, k, 1)) / a[0];
    }

    Ok(SimResult {
        sample_period: disc.sample_period(),
        t: time_axis(disc.sample_period(), n),
        u: input.to_vec(),
        y,
    })
}

/// Generating function `omega(z^-1)` at `z = e^{i omega T}`.
fn generating_function(rule: Rule, sample_period: f64, omega: f64) -> Complex64 {
    let shift = Complex64::from_polar(1.0, -omega * sample_period);
    let one = Complex64::new(1.0, 0.0);
    match rule {
        Rule::BackwardEuler => (one - shift) / sample_period,
        Rule::Tustin => (one - shift) / (one + shift) * (2.0 / sample_period),
    }
}

fn power(base: Complex64, order: f64) -> Complex64 {
    if order == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        base.powf(order)
    }
}

/// Evaluates the discrete transfer function on the unit circle, raising the
/// generating function to each real order on the principal branch.
pub fn freq_response(
    sys: &FracSystem,
    disc: &Discretization,
    omegas: &[f64],
) -> Result<Vec<Complex64>> {
    let period = disc.sample_period();
    let nyquist = std::f64::consts::PI / period;
    omegas
        .iter()
        .map(|&omega| {
            if !(omega > 0.0 && omega <= nyquist) {
                return Err(Error::FrequencyOutOfRange { omega, nyquist });
            }
            let g = generating_function(disc.rule(), period, omega);
            let side = |terms: &[Term]| -> Complex64 {
                terms.iter().map(|t| t.coeff * power(g, t.order)).sum()
            };
            let num = side(&sys.numer);
            let den = side(&sys.denom);
            if den.norm().is_nan() || den.norm() < 1e-300 {
                return Err(Error::Pole { omega });
            }
            let h = num / den;
            if !(h.re.is_finite() && h.im.is_finite()) {
                return Err(Error::Pole { omega });
            }
            Ok(h)
        })
        .collect()
}
