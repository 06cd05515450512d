//! Exact optimum for two attributes with `m` and `n` values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Which branch of the piecewise solution applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Large budget, `x21 = 1`.
    I,
    /// Large budget, `x22 = 1`.
    II,
    /// Small budget, `x21 = x20`.
    III,
    /// Small budget, `x22 = x20`.
    IV,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::IV => "IV",
        };
        f.write_str(s)
    }
}

/// `x20` (identical output), `x21` (first attribute differs), `x22` (second
/// attribute differs), all relative to the both-differ class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAttrSolution {
    pub x20: Real,
    pub x21: Real,
    pub x22: Real,
    pub case: Case,
}

impl TwoAttrSolution {
    /// Per-attribute levels `(e^{ε1}, e^{ε2})` implied by the triple.
    pub fn levels(&self, m: u32, n: u32) -> (Real, Real) {
        let m1 = Real::from_u64(m as u64 - 1);
        let n1 = Real::from_u64(n as u64 - 1);
        let l1 = (self.x20 + n1 * self.x22) / (self.x21 + n1);
        let l2 = (self.x20 + m1 * self.x21) / (self.x22 + m1);
        (l1, l2)
    }
}

pub fn select_case(m: u32, n: u32, e1: Real, e2: Real) -> Case {
    let one = Real::ONE;
    let mr = Real::from_u64(m as u64);
    let nr = Real::from_u64(n as u64);
    let (m1, n1) = (mr - one, nr - one);
    let e12 = e1 * e2;
    if e12 >= m1 * n1 {
        if nr * (e1 - one) >= mr * (e2 - one) {
            Case::I
        } else {
            Case::II
        }
    } else {
        let sign = (nr - mr) * e12 - mr * n1 * e1 + m1 * nr * e2;
        if !sign.is_negative() {
            Case::III
        } else {
            Case::IV
        }
    }
}

/// Evaluate the branch `case` regardless of whether its condition holds.
pub fn evaluate_case(case: Case, m: u32, n: u32, e1: Real, e2: Real) -> TwoAttrSolution {
    let one = Real::ONE;
    let mr = Real::from_u64(m as u64);
    let nr = Real::from_u64(n as u64);
    let (m1, n1) = (mr - one, nr - one);
    let e12 = e1 * e2;
    let (x20, x21, x22) = match case {
        Case::I => {
            let d = e2 + n1;
            let x20 = (nr * e12 + m1 * n1 * (e2 - one)) / d;
            let x22 = (nr * e1 - m1 * (e2 - one)) / d;
            (x20, one, x22)
        }
        Case::II => {
            let d = e1 + m1;
            let x20 = (mr * e12 + m1 * n1 * (e1 - one)) / d;
            let x21 = (mr * e2 - n1 * (e1 - one)) / d;
            (x20, x21, one)
        }
        Case::III => {
            let d = mr * n1 - (e1 - one) * e2;
            let x20 = n1 * (e1 + m1) * e2 / d;
            let x22 = (mr * n1 * e1 + m1 * (e1 - one) * e2) / d;
            (x20, x20, x22)
        }
        Case::IV => {
            let d = m1 * nr - e1 * (e2 - one);
            let x20 = m1 * e1 * (e2 + n1) / d;
            let x21 = (m1 * nr * e2 + n1 * e1 * (e2 - one)) / d;
            (x20, x21, x20)
        }
    };
    TwoAttrSolution { x20, x21, x22, case }
}

fn check_inputs(m: u32, n: u32, eps1: f64, eps2: f64) -> Result<()> {
    if m < 2 {
        return Err(Error::DomainTooSmall { index: 0, size: m });
    }
    if n < 2 {
        return Err(Error::DomainTooSmall { index: 1, size: n });
    }
    for (index, value) in [(0, eps1), (1, eps2)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidEpsilon { index, value });
        }
    }
    Ok(())
}

/// Minimal `x20` subject to both level equalities and the chain
/// `x20 ≥ x21, x22 ≥ 1`.
pub fn optimal_two(m: u32, n: u32, eps1: f64, eps2: f64) -> Result<TwoAttrSolution> {
    check_inputs(m, n, eps1, eps2)?;
    let e1 = Real::exp(eps1);
    let e2 = Real::exp(eps2);
    Ok(evaluate_case(select_case(m, n, e1, e2), m, n, e1, e2))
}
