//! Grünwald-Letnikov binomial coefficients and discrete differintegral operators.
//!
//! A fractional operator of order `r` is represented by its convolution weights
//! in powers of the backward shift `z^-1`. Positive orders differentiate,
//! negative orders integrate. Two generating functions are supported:
//!
//! * backward Euler, `(1 - z^-1) / T`, whose expansion is the GL sum itself;
//! * Tustin, `(2/T) (1 - z^-1) / (1 + z^-1)`, expanded as a product of two
//!   binomial series.
//!
//! Signals are taken to be zero before sample 0.

use std::fmt;

use crate::error::{Error, Result};

/// Binomial coefficients `c_j = (-1)^j binom(order, j)` for a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialTable {
    order: f64,
    coeffs: Vec<f64>,
}

impl BinomialTable {
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }
}

/// Computes `c_0 .. c_{n_terms-1}` with the recurrence
/// `c_0 = 1`, `c_j = (1 - (1 + order) / j) c_{j-1}`.
///
/// For a non-negative integer order `n` the factor at `j = n + 1` is exactly
/// zero, so every later coefficient is exactly zero as well.
pub fn gl_coeffs(order: f64, n_terms: usize) -> Result<BinomialTable> {
    if n_terms == 0 {
        return Err(Error::NoTerms);
    }
    Ok(BinomialTable {
        order,
        coeffs: recurrence(order, n_terms),
    })
}

fn recurrence(order: f64, n_terms: usize) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(n_terms);
    let mut c = 1.0;
    coeffs.push(c);
    for j in 1..n_terms {
        c *= 1.0 - (1.0 + order) / j as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Evaluates `c_j` directly as the product `prod_{i=1..j} (i - 1 - order) / i`.
///
/// Independent of [`gl_coeffs`]; the two agree to rounding.
pub fn gl_coeff_direct(order: f64, j: usize) -> f64 {
    (1..=j)
        .map(|i| {
            let i = i as f64;
            (i - 1.0 - order) / i
        })
        .product()
}

/// Generating function used to discretize the continuous operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    BackwardEuler,
    Tustin,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::BackwardEuler => f.write_str("backward_euler"),
            Rule::Tustin => f.write_str("tustin"),
        }
    }
}

/// How much history the GL sums retain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Memory {
    Full,
    /// Keep only the most recent `length` seconds.
    Short(f64),
}

/// Rule, sample period and memory policy for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    rule: Rule,
    sample_period: f64,
    memory: Memory,
}

impl Discretization {
    pub fn new(rule: Rule, sample_period: f64, memory: Memory) -> Result<Self> {
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::InvalidSamplePeriod);
        }
        if let Memory::Short(length) = memory {
            if !length.is_finite() || length < sample_period {
                return Err(Error::MemoryTooShort {
                    length,
                    sample_period,
                });
            }
        }
        Ok(Discretization {
            rule,
            sample_period,
            memory,
        })
    }

    pub fn backward_euler(sample_period: f64) -> Result<Self> {
        Self::new(Rule::BackwardEuler, sample_period, Memory::Full)
    }

    pub fn tustin(sample_period: f64) -> Result<Self> {
        Self::new(Rule::Tustin, sample_period, Memory::Full)
    }

    pub fn with_memory(self, memory: Memory) -> Result<Self> {
        Self::new(self.rule, self.sample_period, memory)
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn memory(&self) -> Memory {
        self.memory
    }

    /// Number of weights `w_0 .. w_[L/T]` kept under short memory, `None` under
    /// full memory.
    pub fn memory_terms(&self) -> Option<usize> {
        match self.memory {
            Memory::Full => None,
            // the small offset keeps e.g. 0.3 / 0.1 from flooring to 2
            Memory::Short(length) => {
                Some((length / self.sample_period + 1e-9).floor() as usize + 1)
            }
        }
    }

    /// `min(requested, floor(L/T) + 1)`.
    pub fn term_count(&self, requested: usize) -> usize {
        match self.memory_terms() {
            Some(limit) => requested.min(limit),
            None => requested,
        }
    }

    pub(crate) fn require(&self, expected: Rule) -> Result<()> {
        if self.rule == expected {
            Ok(())
        } else {
            Err(Error::WrongRule {
                expected,
                found: self.rule,
            })
        }
    }
}

/// `T^-order`, using integer powers when the order is integral so that
/// classical stencils come out exactly scaled.
pub(crate) fn step_scale(sample_period: f64, order: f64) -> f64 {
    if order.fract() == 0.0 && order.abs() <= i32::MAX as f64 {
        sample_period.powi(-(order as i32))
    } else {
        sample_period.powf(-order)
    }
}

/// Convolution weights of a discrete differintegral operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorWeights {
    order: f64,
    weights: Vec<f64>,
    discretization: Discretization,
}

impl OperatorWeights {
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn discretization(&self) -> &Discretization {
        &self.discretization
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Backward-Euler weights `w_j = T^-order c_j^(order)`.
pub fn euler_weights(order: f64, disc: &Discretization, n_terms: usize) -> Result<OperatorWeights> {
    disc.require(Rule::BackwardEuler)?;
    if n_terms == 0 {
        return Err(Error::NoTerms);
    }
    let n = disc.term_count(n_terms);
    let scale = step_scale(disc.sample_period(), order);
    let weights = recurrence(order, n)
        .into_iter()
        .map(|c| scale * c)
        .collect();
    Ok(OperatorWeights {
        order,
        weights,
        discretization: *disc,
    })
}

/// Tustin weights: the leading terms of
/// `(2/T)^order ((1 - x) / (1 + x))^order` in powers of `x = z^-1`.
///
/// The series is the product of `(1 - x)^order`, whose coefficients are
/// `c_j^(order)`, and `(1 + x)^-order`, whose coefficients are
/// `(-1)^j c_j^(-order)`.
pub fn tustin_weights(
    order: f64,
    disc: &Discretization,
    n_terms: usize,
) -> Result<OperatorWeights> {
    disc.require(Rule::Tustin)?;
    if n_terms == 0 {
        return Err(Error::NoTerms);
    }
    let n = disc.term_count(n_terms);
    let scale = (2.0 / disc.sample_period()).powf(order);
    let weights = tustin_series(order, n)
        .into_iter()
        .map(|c| scale * c)
        .collect();
    Ok(OperatorWeights {
        order,
        weights,
        discretization: *disc,
    })
}

/// Unscaled series of `((1 - x) / (1 + x))^order`, first `n` terms.
pub(crate) fn tustin_series(order: f64, n: usize) -> Vec<f64> {
    let numer = recurrence(order, n);
    let mut denom = recurrence(-order, n);
    for (j, c) in denom.iter_mut().enumerate() {
        if j % 2 == 1 {
            *c = -*c;
        }
    }
    truncated_product(&numer, &denom, n)
}

/// First `n` coefficients of the product of two power series.
pub fn truncated_product(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            (0..=k)
                .filter(|&j| j < a.len() && k - j < b.len())
                .map(|j| a[j] * b[k - j])
                .sum()
        })
        .collect()
}

/// Applies the operator to a sampled signal with zero prehistory:
/// `out[k] = sum_{j=0..min(k, N)} w_j signal[k-j]`.
pub fn apply_operator(weights: &OperatorWeights, signal: &[f64]) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok((0..signal.len())
        .map(|k| causal_sum(&weights.weights, signal, k, 0))
        .collect())
}

/// `sum_{j=from..=min(k, w.len()-1)} w[j] * signal[k-j]`.
#[inline]
pub(crate) fn causal_sum(weights: &[f64], signal: &[f64], k: usize, from: usize) -> f64 {
    let last = k.min(weights.len().saturating_sub(1));
    if from > last || weights.is_empty() {
        return 0.0;
    }
    weights[from..=last]
        .iter()
        .zip(signal[k - last..=k - from].iter().rev())
        .map(|(w, s)| w * s)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_term_is_one() {
        for order in [-2.5, 0.0, 0.3, 7.0] {
            assert_eq!(gl_coeffs(order, 1).unwrap().coeffs(), &[1.0]);
        }
    }

    #[test]
    fn first_difference_coeffs() {
        assert_eq!(gl_coeffs(1.0, 4).unwrap().coeffs(), &[1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn half_order_coeffs() {
        // (-1)^j binom(0.5, j) = prod (i - 1.5) / i
        let c = gl_coeffs(0.5, 4).unwrap();
        assert_eq!(c.coeffs(), &[1.0, -0.5, -0.125, -0.0625]);
    }

    #[test]
    fn zero_terms_rejected() {
        assert_eq!(gl_coeffs(0.5, 0), Err(Error::NoTerms));
    }

    #[test]
    fn direct_product() {
        assert_eq!(gl_coeff_direct(0.5, 0), 1.0);
        assert_eq!(gl_coeff_direct(2.0, 1), -2.0);
        // (-1.286) * (1 - 1.286) / 2
        assert_relative_eq!(gl_coeff_direct(1.286, 2), 0.183898, max_relative = 1e-14);
        let table = gl_coeffs(1.286, 3).unwrap();
        assert_relative_eq!(table.coeffs()[2], 0.183898, max_relative = 1e-14);
    }

    #[test]
    fn euler_weight_examples() {
        let d = Discretization::backward_euler(0.1).unwrap();
        assert_eq!(
            euler_weights(1.0, &d, 3).unwrap().weights(),
            &[10.0, -10.0, 0.0]
        );

        let d = Discretization::backward_euler(0.5).unwrap();
        assert_eq!(
            euler_weights(0.0, &d, 3).unwrap().weights(),
            &[1.0, 0.0, 0.0]
        );

        let d = Discretization::backward_euler(0.1).unwrap();
        let w = euler_weights(0.5, &d, 4).unwrap();
        let s = 10f64.sqrt();
        for (got, want) in w.weights().iter().zip([1.0, -0.5, -0.125, -0.0625]) {
            assert_relative_eq!(*got, s * want, max_relative = 1e-15);
        }
    }

    #[test]
    fn negative_order_integrates() {
        let d = Discretization::backward_euler(0.1).unwrap();
        let w = euler_weights(-1.0, &d, 5).unwrap();
        for x in w.weights() {
            assert_relative_eq!(*x, 0.1, max_relative = 1e-15);
        }
    }

    #[test]
    fn short_memory_truncates() {
        let d = Discretization::backward_euler(0.1)
            .unwrap()
            .with_memory(Memory::Short(0.3))
            .unwrap();
        assert_eq!(d.memory_terms(), Some(4));
        assert_eq!(euler_weights(0.5, &d, 100).unwrap().len(), 4);
        assert_eq!(euler_weights(0.5, &d, 2).unwrap().len(), 2);
    }

    #[test]
    fn discretization_validation() {
        assert_eq!(
            Discretization::backward_euler(-0.1),
            Err(Error::InvalidSamplePeriod)
        );
        assert_eq!(Discretization::tustin(0.0), Err(Error::InvalidSamplePeriod));
        assert!(Discretization::backward_euler(0.1)
            .unwrap()
            .with_memory(Memory::Short(0.05))
            .is_err());
        assert!(Discretization::backward_euler(0.1)
            .unwrap()
            .with_memory(Memory::Short(0.1))
            .is_ok());
    }

    #[test]
    fn rule_mismatch_rejected() {
        let be = Discretization::backward_euler(0.1).unwrap();
        let tu = Discretization::tustin(0.1).unwrap();
        assert!(matches!(
            euler_weights(0.5, &tu, 3),
            Err(Error::WrongRule { .. })
        ));
        assert!(matches!(
            tustin_weights(0.5, &be, 3),
            Err(Error::WrongRule { .. })
        ));
    }

    #[test]
    #[allow(clippy::approx_constant, clippy::excessive_precision)]
    fn tustin_examples() {
        let d = Discretization::tustin(1.0).unwrap();
        assert_eq!(
            tustin_weights(0.0, &d, 3).unwrap().weights(),
            &[1.0, 0.0, 0.0]
        );

        let d = Discretization::tustin(0.5).unwrap();
        assert_eq!(
            tustin_weights(1.0, &d, 3).unwrap().weights(),
            &[4.0, -8.0, 8.0]
        );

        // Taylor coefficients of sqrt(2) ((1-x)/(1+x))^0.5, 40-digit arithmetic
        let d = Discretization::tustin(1.0).unwrap();
        let w = tustin_weights(0.5, &d, 4).unwrap();
        let want = [
            1.414213562373095048801688724209698,
            -1.414213562373095048801688724209698,
            0.7071067811865475244008443621048490,
            -0.7071067811865475244008443621048490,
        ];
        for (got, want) in w.weights().iter().zip(want) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn apply_examples() {
        let d = Discretization::backward_euler(1.0).unwrap();
        let w = euler_weights(1.0, &d, 4).unwrap();
        assert_eq!(
            apply_operator(&w, &[0.0, 1.0, 2.0, 3.0]).unwrap(),
            vec![0.0, 1.0, 1.0, 1.0]
        );

        let w = euler_weights(0.0, &d, 4).unwrap();
        let signal = [3.0, -1.5, 2.25, 0.0, 8.0];
        assert_eq!(apply_operator(&w, &signal).unwrap(), signal.to_vec());

        assert_eq!(apply_operator(&w, &[]), Err(Error::EmptySignal));
    }

    #[test]
    fn causal_sum_respects_bounds() {
        let w = [1.0, 2.0, 3.0];
        let s = [1.0, 10.0, 100.0, 1000.0];
        assert_eq!(causal_sum(&w, &s, 0, 0), 1.0);
        assert_eq!(causal_sum(&w, &s, 0, 1), 0.0);
        assert_eq!(causal_sum(&w, &s, 3, 0), 1000.0 + 200.0 + 30.0);
        assert_eq!(causal_sum(&w, &s, 3, 1), 200.0 + 30.0);
        assert_eq!(causal_sum(&[], &s, 3, 0), 0.0);
    }

    #[test]
    fn truncated_product_matches_polynomial_multiply() {
        // (1 - x) (1 + x + x^2 + ...) = 1
        let a = [1.0, -1.0];
        let b = [1.0; 6];
        assert_eq!(
            truncated_product(&a, &b, 6),
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }
}
