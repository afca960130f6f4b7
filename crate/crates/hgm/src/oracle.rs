//! Reference solutions named by problem files and the `oracle` command.

use crate::problem::{number, ProblemError};
use hgm_core::reference::{airy, hkn_derivatives};
use hgm_core::{Real, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OracleSpec {
    /// `Ai(t)`.
    Airy,
    /// `H^k_n(x, t)`.
    Hkn { k: u32, n: Value, x: Value },
    /// `exp(rate·t)`.
    Exp { rate: Value },
}

impl OracleSpec {
    pub fn bind<R: Real>(&self) -> std::result::Result<Oracle<R>, ProblemError> {
        Ok(match self {
            OracleSpec::Airy => Oracle::Airy,
            OracleSpec::Hkn { k, n, x } => Oracle::Hkn { k: *k, n: number(n)?, x: number(x)? },
            OracleSpec::Exp { rate } => Oracle::Exp { rate: number(rate)? },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Oracle<R> {
    Airy,
    Hkn { k: u32, n: R, x: R },
    Exp { rate: R },
}

impl<R: Real> Oracle<R> {
    /// Value and the first `order` derivatives at `t`.
    pub fn derivatives(&self, t: R, order: usize) -> Result<Vec<R>> {
        match *self {
            Oracle::Airy => {
                let v = airy(t)?;
                Ok(airy_jet(t, v.ai, v.ai_prime, order))
            }
            Oracle::Hkn { k, n, x } => hkn_derivatives(k, n, x, t, order),
            Oracle::Exp { rate } => {
                let e = (rate * t).exp();
                Ok((0..=order).map(|j| rate.powi(j as i32) * e).collect())
            }
        }
    }

    pub fn value(&self, t: R) -> Result<R> {
        Ok(self.derivatives(t, 0)?[0])
    }

    pub fn name(&self) -> String {
        match self {
            Oracle::Airy => "Ai".into(),
            Oracle::Hkn { k, n, x } => format!("H^{k}_{}(x={})", n.to_shortest_string(), x.to_shortest_string()),
            Oracle::Exp { rate } => format!("exp({}*t)", rate.to_shortest_string()),
        }
    }
}

/// Derivatives of a solution of `f'' = t f` from its value and slope:
/// `f^(j+2) = t f^(j) + j f^(j−1)`.
pub fn airy_jet<R: Real>(t: R, f: R, fp: R, order: usize) -> Vec<R> {
    let mut out = vec![f, fp];
    for j in 0..order.saturating_sub(1) {
        let lower = if j == 0 { R::zero() } else { R::from_usize(j) * out[j - 1] };
        out.push(t * out[j] + lower);
    }
    out.truncate(order + 1);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hgm_core::DoubleDouble;

    #[test]
    fn airy_jet_matches_the_equation() {
        let d = airy_jet(2.0, 3.0, 5.0, 4);
        assert_eq!(d, vec![3.0, 5.0, 6.0, 3.0 + 10.0, 2.0 * 6.0 + 2.0 * 5.0]);
        assert_eq!(airy_jet(1.0, 1.0, 2.0, 0), vec![1.0]);
    }

    #[test]
    fn airy_oracle_at_five() {
        let v = Oracle::<DoubleDouble>::Airy.value(DoubleDouble::from_f64(5.0)).unwrap();
        assert!((v.to_f64() - 0.000108344428136074).abs() < 1e-18);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec: OracleSpec = serde_json::from_str(r#"{"kind": "hkn", "k": 10, "n": 1, "x": "1/2"}"#).unwrap();
        let o = spec.bind::<f64>().unwrap();
        assert_eq!(o, Oracle::Hkn { k: 10, n: 1.0, x: 0.5 });
        let back: OracleSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<OracleSpec>(r#"{"kind": "bessel"}"#).is_err());
    }
}
