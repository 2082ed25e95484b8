//! Classical observables as real polynomials in one canonical pair `(q, p)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Result, WorkbenchError};

/// Highest total degree a polynomial observable may carry.
pub const MAX_DEGREE: u32 = 6;

/// `Σ c_ab q^a p^b` with finitely many nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialObservable {
    terms: BTreeMap<(u32, u32), f64>,
}

impl PolynomialObservable {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self::monomial(0, 0, value).expect("degree zero")
    }

    pub fn q() -> Self {
        Self::monomial(1, 0, 1.0).expect("degree one")
    }

    pub fn p() -> Self {
        Self::monomial(0, 1, 1.0).expect("degree one")
    }

    /// `coeff·q^q_power·p^p_power`.
    pub fn monomial(q_power: u32, p_power: u32, coeff: f64) -> Result<Self> {
        Self::from_terms([((q_power, p_power), coeff)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), f64)>) -> Result<Self> {
        let mut out = Self::zero();
        for ((a, b), c) in terms {
            if !c.is_finite() {
                return Err(WorkbenchError::Input(format!("coefficient of q^{a} p^{b} is not finite")));
            }
            if a + b > MAX_DEGREE {
                return Err(WorkbenchError::Degree { degree: a + b, cap: MAX_DEGREE });
            }
            *out.terms.entry((a, b)).or_insert(0.0) += c;
        }
        out.prune();
        Ok(out)
    }

    /// `p²/2m + mω²q²/2`.
    pub fn oscillator_hamiltonian(mass: f64, omega: f64) -> Self {
        Self::from_terms([((0, 2), 0.5 / mass), ((2, 0), 0.5 * mass * omega * omega)]).expect("degree two")
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn coefficient(&self, q_power: u32, p_power: u32) -> f64 {
        self.terms.get(&(q_power, p_power)).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in other.terms() {
            *out.terms.entry(k).or_insert(0.0) += c;
        }
        out.prune();
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = Self { terms: self.terms.iter().map(|(&k, &c)| (k, c * factor)).collect() };
        out.prune();
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero();
        for ((a, b), c) in self.terms() {
            for ((x, y), d) in other.terms() {
                let degree = a + b + x + y;
                if degree > MAX_DEGREE {
                    return Err(WorkbenchError::Degree { degree, cap: MAX_DEGREE });
                }
                *out.terms.entry((a + x, b + y)).or_insert(0.0) += c * d;
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn d_dq(&self) -> Self {
        let mut out = Self { terms: BTreeMap::new() };
        for ((a, b), c) in self.terms() {
            if a > 0 {
                *out.terms.entry((a - 1, b)).or_insert(0.0) += c * a as f64;
            }
        }
        out.prune();
        out
    }

    pub fn d_dp(&self) -> Self {
        let mut out = Self { terms: BTreeMap::new() };
        for ((a, b), c) in self.terms() {
            if b > 0 {
                *out.terms.entry((a, b - 1)).or_insert(0.0) += c * b as f64;
            }
        }
        out.prune();
        out
    }
}

impl fmt::Display for PolynomialObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, ((a, b), c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            if a > 0 {
                write!(f, "·q^{a}")?;
            }
            if b > 0 {
                write!(f, "·p^{b}")?;
            }
        }
        Ok(())
    }
}

/// Classical Poisson bracket `{A, H} = ∂A/∂q·∂H/∂p − ∂A/∂p·∂H/∂q`.
pub fn poisson_rhs_classical(a: &PolynomialObservable, h: &PolynomialObservable) -> Result<PolynomialObservable> {
    let forward = a.d_dq().mul(&h.d_dp())?;
    let backward = a.d_dp().mul(&h.d_dq())?;
    Ok(forward.add(&backward.scale(-1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillator_brackets() {
        let (m, w) = (2.0, 3.0);
        let h = PolynomialObservable::oscillator_hamiltonian(m, w);
        let q_dot = poisson_rhs_classical(&PolynomialObservable::q(), &h).unwrap();
        assert_eq!(q_dot, PolynomialObservable::monomial(0, 1, 1.0 / m).unwrap());
        let p_dot = poisson_rhs_classical(&PolynomialObservable::p(), &h).unwrap();
        assert_eq!(p_dot, PolynomialObservable::monomial(1, 0, -m * w * w).unwrap());
        assert!(poisson_rhs_classical(&h, &h).unwrap().is_zero());
    }

    #[test]
    fn canonical_pair_bracket_is_one() {
        let one = poisson_rhs_classical(&PolynomialObservable::q(), &PolynomialObservable::p()).unwrap();
        assert_eq!(one, PolynomialObservable::constant(1.0));
    }

    #[test]
    fn degree_cap_is_enforced() {
        assert!(matches!(PolynomialObservable::monomial(4, 3, 1.0), Err(WorkbenchError::Degree { degree: 7, .. })));
        let big = PolynomialObservable::monomial(3, 1, 1.0).unwrap();
        let other = PolynomialObservable::monomial(2, 3, 1.0).unwrap();
        // {q³p, q²p³} has degree 4 + 5 − 2 = 7
        assert!(matches!(poisson_rhs_classical(&big, &other), Err(WorkbenchError::Degree { .. })));
        assert!(PolynomialObservable::from_terms([((1, 0), f64::NAN)]).is_err());
    }

    #[test]
    fn derivatives() {
        let a = PolynomialObservable::from_terms([((2, 1), 3.0), ((0, 3), 1.0)]).unwrap();
        assert_eq!(a.d_dq(), PolynomialObservable::monomial(1, 1, 6.0).unwrap());
        assert_eq!(a.d_dp(), PolynomialObservable::from_terms([((2, 0), 3.0), ((0, 2), 3.0)]).unwrap());
        assert_eq!(a.degree(), 3);
    }
}
