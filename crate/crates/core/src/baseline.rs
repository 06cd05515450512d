//! The independent-product baseline: each attribute perturbed on its own by
//! the diagonal-optimal k-ary randomized response, composed by Kronecker
//! product.

use crate::error::Result;
use crate::subsets::SubsetIndex;
use crate::types::{AttributeSchema, DistortionSpec, Method, PrivacyBudget, SpecKind};
use crate::Real;

/// Full-classes spec with `x_S = e^{Σ_{i∉S} ε_i}`.
pub fn kronecker_spec(schema: &AttributeSchema, budget: &PrivacyBudget) -> Result<DistortionSpec> {
    budget.check_len(schema)?;
    let index = SubsetIndex::for_k(schema.k())?;
    let eps = budget.values();
    let x = (0..index.num_classes())
        .map(|j| {
            let mask = index.mask(j).expect("class in range");
            let kept: f64 = eps
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) == 0)
                .map(|(_, e)| e)
                .sum();
            Real::exp(kept)
        })
        .collect();
    DistortionSpec::new(
        schema.clone(),
        SpecKind::FullClasses,
        x,
        budget.clone(),
        budget.clone(),
        Method::Kronecker,
    )
}

/// The same mechanism stored as its `k` factors `e^{ε_i}`, for schemas too
/// wide to enumerate every class.
pub fn kronecker_factored(schema: &AttributeSchema, budget: &PrivacyBudget) -> Result<DistortionSpec> {
    budget.check_len(schema)?;
    let x = budget.values().iter().map(|&e| Real::exp(e)).collect();
    DistortionSpec::new(
        schema.clone(),
        SpecKind::Product,
        x,
        budget.clone(),
        budget.clone(),
        Method::Kronecker,
    )
}

/// Row-major `a × a` matrix: `e^ε/(e^ε+a-1)` on the diagonal,
/// `1/(e^ε+a-1)` elsewhere.
pub fn single_attribute_matrix(a: u32, eps: f64) -> Vec<Real> {
    let e = Real::exp(eps);
    let z = e + Real::from_u64(a as u64 - 1);
    let on = e / z;
    let off = Real::ONE / z;
    let n = a as usize;
    (0..n * n)
        .map(|idx| if idx / n == idx % n { on } else { off })
        .collect()
}
