//! Discrete fractional PI^λD^δ controller
//!
//! ```text
//! G_c = K + T_i / omega(z^-1)^lambda + T_d omega(z^-1)^delta
//! ```
//!
//! The integral term is the order `-lambda` operator and the derivative term
//! the order `+delta` operator, both under the backward-Euler rule.

use crate::error::{Error, Result};
use crate::gl::{causal_sum, euler_weights, Discretization, Rule};

/// Gains and orders of a PI^λD^δ controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracPid {
    k: f64,
    ti: f64,
    td: f64,
    lambda: f64,
    delta: f64,
}

fn check_order(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder { what, value })
    }
}

impl FracPid {
    pub fn new(k: f64, ti: f64, td: f64, lambda: f64, delta: f64) -> Result<Self> {
        check_order("lambda", lambda)?;
        check_order("delta", delta)?;
        Ok(FracPid {
            k,
            ti,
            td,
            lambda,
            delta,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn ti(&self) -> f64 {
        self.ti
    }

    pub fn td(&self) -> f64 {
        self.td
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Combined impulse response `K [j==0] + T_i T^lambda c_j^(-lambda) + T_d T^-delta c_j^(delta)`
    /// for `j < n`, truncated by the memory policy. A zero gain drops its term
    /// before any weights are generated.
    pub(crate) fn weights(&self, disc: &Discretization, n: usize) -> Result<Vec<f64>> {
        disc.require(Rule::BackwardEuler)?;
        let len = disc.term_count(n.max(1));
        let mut out = vec![0.0; len];
        out[0] = self.k;
        for (gain, order) in [(self.ti, -self.lambda), (self.td, self.delta)] {
            if gain == 0.0 {
                continue;
            }
            let w = euler_weights(order, disc, len)?;
            for (acc, x) in out.iter_mut().zip(w.weights()) {
                *acc += gain * x;
            }
        }
        Ok(out)
    }
}

/// Classical PID: `lambda = delta = 1`.
pub fn make_pid(k: f64, ti: f64, td: f64) -> FracPid {
    FracPid {
        k,
        ti,
        td,
        lambda: 1.0,
        delta: 1.0,
    }
}

/// PD^δ controller: `T_i = 0`, `lambda = 0`.
pub fn make_pd_delta(k: f64, td: f64, delta: f64) -> Result<FracPid> {
    FracPid::new(k, 0.0, td, 0.0, delta)
}

/// Controller output for an error sequence with zero prehistory.
pub fn controller_response(
    ctl: &FracPid,
    error: &[f64],
    disc: &Discretization,
) -> Result<Vec<f64>> {
    disc.require(Rule::BackwardEuler)?;
    if error.is_empty() {
        return Err(Error::EmptySignal);
    }
    let w = ctl.weights(disc, error.len())?;
    Ok((0..error.len())
        .map(|k| causal_sum(&w, error, k, 0))
        .collect())
}

/// `du_k / de_k = K + T_i T^lambda + T_d T^-delta`.
pub fn controller_feedthrough(ctl: &FracPid, disc: &Discretization) -> Result<f64> {
    Ok(ctl.weights(disc, 1)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gl::gl_coeff_direct;
    use approx::assert_relative_eq;

    fn be(t: f64) -> Discretization {
        Discretization::backward_euler(t).unwrap()
    }

    #[test]
    fn constructors() {
        assert_eq!(
            make_pid(2.0, 3.0, 4.0),
            FracPid::new(2.0, 3.0, 4.0, 1.0, 1.0).unwrap()
        );
        let pd = make_pd_delta(50.0, 5.326, 1.286).unwrap();
        assert_eq!((pd.k(), pd.ti(), pd.td()), (50.0, 0.0, 5.326));
        assert_eq!((pd.lambda(), pd.delta()), (0.0, 1.286));
        assert!(make_pd_delta(1.0, 1.0, -0.1).is_err());
        assert!(FracPid::new(1.0, 1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn proportional_only() {
        let p = make_pid(2.0, 0.0, 0.0);
        assert_eq!(
            controller_response(&p, &[1.0, 1.0, 1.0], &be(0.1)).unwrap(),
            vec![2.0, 2.0, 2.0]
        );
        let p = make_pd_delta(3.0, 0.0, 0.7).unwrap();
        assert_eq!(
            controller_response(&p, &[1.0, -2.0], &be(0.1)).unwrap(),
            vec![3.0, -6.0]
        );
    }

    #[test]
    fn pure_derivative() {
        let d = make_pd_delta(0.0, 1.0, 1.0).unwrap();
        let u = controller_response(&d, &[0.0, 1.0, 3.0, 3.0], &be(0.5)).unwrap();
        assert_eq!(u, vec![0.0, 2.0, 4.0, 0.0]);
    }

    #[test]
    fn rectangle_integral_of_step() {
        let pi = make_pid(1.0, 1.0, 0.0);
        let u = controller_response(&pi, &[1.0; 10], &be(1.0)).unwrap();
        for (k, x) in u.iter().enumerate() {
            assert_eq!(*x, 1.0 + (k + 1) as f64);
        }
    }

    #[test]
    fn impulse_gives_weights() {
        let ctl = make_pd_delta(50.0, 5.326, 1.286).unwrap();
        let mut impulse = vec![0.0; 40];
        impulse[0] = 1.0;
        let u = controller_response(&ctl, &impulse, &be(0.05)).unwrap();
        let scale = 5.326 * 0.05f64.powf(-1.286);
        for (k, x) in u.iter().enumerate() {
            let want = if k == 0 { 50.0 } else { 0.0 } + scale * gl_coeff_direct(1.286, k);
            assert_relative_eq!(*x, want, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn feedthrough_values() {
        let p = make_pid(3.0, 0.0, 0.0);
        assert_eq!(controller_feedthrough(&p, &be(0.37)).unwrap(), 3.0);

        let ctl = make_pd_delta(50.0, 5.326, 1.286).unwrap();
        assert_relative_eq!(
            controller_feedthrough(&ctl, &be(0.05)).unwrap(),
            50.0 + 5.326 * 0.05f64.powf(-1.286),
            max_relative = 1e-15
        );

        let i = FracPid::new(0.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(controller_feedthrough(&i, &be(0.1)).unwrap(), 0.1);
    }

    #[test]
    fn zero_lambda_integral_is_second_gain() {
        let ctl = FracPid::new(1.0, 2.0, 0.0, 0.0, 0.0).unwrap();
        let u = controller_response(&ctl, &[1.0, 2.0], &be(0.1)).unwrap();
        assert_eq!(u, vec![3.0, 6.0]);
    }

    #[test]
    fn empty_error_rejected() {
        let p = make_pid(1.0, 0.0, 0.0);
        assert_eq!(
            controller_response(&p, &[], &be(0.1)),
            Err(Error::EmptySignal)
        );
    }
}
