//! Inductive construction of a near-optimal collapsed-tail spec in O(k²).
//!
//! Starting from the exact two-attribute optimum, each further attribute is
//! folded in by rescaling the previous singleton values and solving a 2×2
//! system for the new identity value `x0` and the new singleton value.

use crate::closed_form::optimal_two;
use crate::error::{Error, Result};
use crate::types::{AttributeSchema, DistortionSpec, Method, PrivacyBudget, SpecKind};
use crate::Real;

/// Values for the first `i` attributes: `x[0]` is the identity class and
/// `x[j]` the class where only attribute `j` differs.
#[derive(Debug, Clone)]
pub struct InductionState {
    sizes: Vec<u32>,
    x: Vec<Real>,
    /// `∏ a_h` over the attributes folded in so far.
    prod: Real,
    sum_a: u64,
    /// Accumulators from the most recent step.
    pub a_ii: Real,
    pub b_ii: Real,
    pub c_ii: Real,
    achieved: Vec<f64>,
    fallbacks: Vec<usize>,
    ops: u64,
}

impl InductionState {
    /// Base case: the exact optimum for the first two attributes.
    pub fn base(a1: u32, a2: u32, eps1: f64, eps2: f64) -> Result<InductionState> {
        let sol = optimal_two(a1, a2, eps1, eps2)?;
        Ok(InductionState {
            sizes: vec![a1, a2],
            x: vec![sol.x20, sol.x21, sol.x22],
            prod: Real::from_u64(a1 as u64 * a2 as u64),
            sum_a: a1 as u64 + a2 as u64,
            a_ii: Real::ZERO,
            b_ii: Real::ZERO,
            c_ii: Real::ZERO,
            achieved: vec![eps1, eps2],
            fallbacks: Vec::new(),
            ops: 30,
        })
    }

    pub fn attributes(&self) -> usize {
        self.sizes.len()
    }

    pub fn values(&self) -> &[Real] {
        &self.x
    }

    pub fn achieved_eps(&self) -> &[f64] {
        &self.achieved
    }

    /// 0-based attributes whose level had to be recomputed.
    pub fn fallbacks(&self) -> &[usize] {
        &self.fallbacks
    }

    /// Arithmetic operations and comparisons performed so far.
    pub fn op_count(&self) -> u64 {
        self.ops
    }

    /// Fold in one more attribute with `a` values at level `eps`.
    pub fn step(&mut self, a: u32, eps: f64) -> Result<()> {
        let index = self.sizes.len();
        if a < 2 {
            return Err(Error::DomainTooSmall { index, size: a });
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidEpsilon { index, value: eps });
        }
        let one = Real::ONE;
        let ar = Real::from_u64(a as u64);
        let am1 = ar - one;
        let prev = self.sizes.len();
        let mut ops = 0u64;

        // rescale the existing singleton values and accumulate A
        let mut acc = Real::ZERO;
        for (h, xh) in self.x.iter_mut().enumerate().skip(1) {
            *xh = ar * *xh - am1;
            acc += Real::from_u64(self.sizes[h - 1] as u64 - 1) * *xh;
            ops += 5;
        }
        let big_c = self.prod - one;
        let big_b = self.prod - Real::from_u64(self.sum_a) + Real::from_u64(prev as u64 - 1);
        ops += 4;

        let e = Real::exp(eps);
        let x0_prev = self.x[0];
        let det = am1 + e;
        debug_assert!(!det.is_zero());
        let mut y = (ar * x0_prev + acc + big_b - e * big_c) / det;
        let mut x0 = ar * x0_prev - am1 * y;
        ops += 10;

        let mut bad = x0 < one || y < one || x0 < y;
        for xh in &self.x[1..] {
            ops += 1;
            if x0 < *xh {
                bad = true;
                break;
            }
        }
        let achieved = if bad {
            x0 = ar * x0_prev - am1;
            y = one;
            ops += 8;
            ((x0 + acc + big_b) / (y + big_c)).ln()
        } else {
            eps
        };
        if bad {
            self.fallbacks.push(index);
        }

        self.x[0] = x0;
        self.x.push(y);
        self.sizes.push(a);
        self.prod *= ar;
        self.sum_a += a as u64;
        self.a_ii = acc;
        self.b_ii = big_b;
        self.c_ii = big_c;
        self.achieved.push(achieved);
        self.ops += ops + 2;
        Ok(())
    }
}

/// Level of attribute `j` implied by collapsed-tail values `x` (length k+1):
/// `(x0 + A + B) / (x_j + C)`, with `A` the weighted sum of the other
/// singleton values, `B` the number of outputs that agree on `j` but differ
/// in two or more other attributes, and `C` the number that differ on `j`
/// minus one.
pub fn collapsed_levels(sizes: &[u32], x: &[Real]) -> Vec<Real> {
    let k = sizes.len();
    assert_eq!(x.len(), k + 1);
    let one = Real::ONE;
    let weighted: Vec<Real> = sizes
        .iter()
        .zip(&x[1..])
        .map(|(&a, &v)| Real::from_u64(a as u64 - 1) * v)
        .collect();
    // prefix and suffix sums avoid cancellation in "total minus own term"
    let mut prefix = vec![Real::ZERO; k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i] + weighted[i];
    }
    let mut suffix = vec![Real::ZERO; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] + weighted[i];
    }
    let prod: Real = sizes.iter().map(|&a| Real::from_u64(a as u64)).product();
    let sum_a: u64 = sizes.iter().map(|&a| a as u64).sum();
    (0..k)
        .map(|j| {
            let aj = sizes[j] as u64;
            let others = prod / Real::from_u64(aj);
            let a_kj = prefix[j] + suffix[j + 1];
            // Σ_{i≠j} a_i − (k − 2), as a signed quantity
            let shift = Real::from_i64((sum_a - aj) as i64 - k as i64 + 2);
            let b_kj = others - shift;
            let c_kj = others - one;
            (x[0] + a_kj + b_kj) / (x[j + 1] + c_kj)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct HeuristicOutcome {
    pub spec: DistortionSpec,
    /// 0-based attributes (in the caller's order) whose level was recomputed.
    pub fallbacks: Vec<usize>,
    pub op_count: u64,
}

/// Checks that `order` is a permutation of `0..k`.
fn check_order(order: &[usize], k: usize) -> Result<()> {
    if order.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: order.len(),
        });
    }
    let mut seen = vec![false; k];
    for &i in order {
        if i >= k || seen[i] {
            return Err(Error::AttributeOutOfRange { index: i, k });
        }
        seen[i] = true;
    }
    Ok(())
}

/// Default folding order: largest requested level first, ties by index.
///
/// Folding a large level in after small ones often leaves no room for it,
/// and the fallback then lowers it far below the request; taking the large
/// levels into the base case first avoids most of those fallbacks.
pub fn default_order(budget: &PrivacyBudget) -> Vec<usize> {
    let eps = budget.values();
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&x, &y| eps[y].total_cmp(&eps[x]));
    order
}

/// Build in the [`default_order`].
pub fn heuristic_build(schema: &AttributeSchema, budget: &PrivacyBudget) -> Result<DistortionSpec> {
    heuristic_build_with(schema, budget, None).map(|o| o.spec)
}

/// Build, folding attributes in the sequence `order` (defaults to
/// [`default_order`]). The returned spec is always indexed by the caller's attribute
/// numbering.
pub fn heuristic_build_with(
    schema: &AttributeSchema,
    budget: &PrivacyBudget,
    order: Option<&[usize]>,
) -> Result<HeuristicOutcome> {
    budget.check_len(schema)?;
    budget.require_positive()?;
    let k = schema.k();
    if k == 1 {
        // a single attribute: the identity class at e^ε against all others at 1
        let x = vec![Real::exp(budget.get(0)), Real::ONE];
        let spec = DistortionSpec::new(
            schema.clone(),
            SpecKind::CollapsedTail,
            x,
            budget.clone(),
            budget.clone(),
            Method::Heuristic,
        )?;
        return Ok(HeuristicOutcome {
            spec,
            fallbacks: Vec::new(),
            op_count: 1,
        });
    }
    let fallback_order;
    let order = match order {
        Some(o) => {
            check_order(o, k)?;
            o
        }
        None => {
            fallback_order = default_order(budget);
            &fallback_order[..]
        }
    };
    let sizes = schema.permuted(order);
    let eps = budget.permuted(order);
    let mut state = InductionState::base(sizes.size(0), sizes.size(1), eps.get(0), eps.get(1))?;
    for i in 2..k {
        state.step(sizes.size(i), eps.get(i))?;
    }

    let mut x = vec![Real::ZERO; k + 1];
    let mut achieved = vec![0.0; k];
    x[0] = state.x[0];
    for (p, &orig) in order.iter().enumerate() {
        x[orig + 1] = state.x[p + 1];
        achieved[orig] = state.achieved[p];
    }
    let mut fallbacks: Vec<usize> = state.fallbacks.iter().map(|&p| order[p]).collect();
    fallbacks.sort_unstable();
    let spec = DistortionSpec::new(
        schema.clone(),
        SpecKind::CollapsedTail,
        x,
        budget.clone(),
        PrivacyBudget::new(achieved)?,
        Method::Heuristic,
    )?;
    Ok(HeuristicOutcome {
        spec,
        fallbacks,
        op_count: state.ops,
    })
}
