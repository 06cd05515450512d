//! Schemas, budgets, distortion specifications and build reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subsets::SubsetIndex;
use crate::Real;

/// Per-attribute domain sizes `a_1..a_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct AttributeSchema {
    a: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    a: Vec<u32>,
}

impl TryFrom<SchemaRepr> for AttributeSchema {
    type Error = Error;
    fn try_from(r: SchemaRepr) -> Result<Self> {
        AttributeSchema::new(r.a)
    }
}

impl From<AttributeSchema> for SchemaRepr {
    fn from(s: AttributeSchema) -> Self {
        SchemaRepr { a: s.a }
    }
}

impl AttributeSchema {
    pub fn new(a: Vec<u32>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::EmptySchema);
        }
        if let Some((index, &size)) = a.iter().enumerate().find(|(_, &s)| s < 2) {
            return Err(Error::DomainTooSmall { index, size });
        }
        Ok(AttributeSchema { a })
    }

    pub fn uniform(k: usize, size: u32) -> Result<Self> {
        AttributeSchema::new(vec![size; k])
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn sizes(&self) -> &[u32] {
        &self.a
    }

    pub fn size(&self, i: usize) -> u32 {
        self.a[i]
    }

    /// `∏ a_i` in extended precision.
    pub fn domain_size(&self) -> Real {
        self.a.iter().map(|&v| Real::from_u64(v as u64)).product()
    }

    /// `∏ a_i` when it fits in a `u64`.
    pub fn domain_size_u64(&self) -> Option<u64> {
        self.a
            .iter()
            .try_fold(1u64, |acc, &v| acc.checked_mul(v as u64))
    }

    pub fn permuted(&self, order: &[usize]) -> AttributeSchema {
        AttributeSchema {
            a: order.iter().map(|&i| self.a[i]).collect(),
        }
    }
}

/// Per-attribute privacy levels in nats.
///
/// Levels are finite and non-negative; constructions that need strictly
/// positive levels check with [`PrivacyBudget::require_positive`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PrivacyBudget {
    eps: Vec<f64>,
}

impl TryFrom<Vec<f64>> for PrivacyBudget {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PrivacyBudget::new(v)
    }
}

impl From<PrivacyBudget> for Vec<f64> {
    fn from(b: PrivacyBudget) -> Self {
        b.eps
    }
}

impl PrivacyBudget {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = eps
            .iter()
            .enumerate()
            .find(|(_, e)| !e.is_finite() || **e < 0.0)
        {
            return Err(Error::InvalidEpsilon { index, value });
        }
        Ok(PrivacyBudget { eps })
    }

    pub fn uniform(k: usize, eps: f64) -> Result<Self> {
        PrivacyBudget::new(vec![eps; k])
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.eps
    }

    pub fn get(&self, i: usize) -> f64 {
        self.eps[i]
    }

    pub fn total(&self) -> f64 {
        self.eps.iter().sum()
    }

    pub fn require_positive(&self) -> Result<()> {
        match self.eps.iter().enumerate().find(|(_, e)| **e <= 0.0) {
            Some((index, &value)) => Err(Error::InvalidEpsilon { index, value }),
            None => Ok(()),
        }
    }

    pub fn check_len(&self, schema: &AttributeSchema) -> Result<()> {
        if self.eps.len() != schema.k() {
            return Err(Error::LengthMismatch {
                expected: schema.k(),
                actual: self.eps.len(),
            });
        }
        Ok(())
    }

    pub fn permuted(&self, order: &[usize]) -> PrivacyBudget {
        PrivacyBudget {
            eps: order.iter().map(|&i| self.eps[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    OptimalLp,
    Heuristic,
    Kronecker,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::OptimalLp, Method::Heuristic, Method::Kronecker];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::OptimalLp => "optimal-lp",
            Method::Heuristic => "heuristic",
            Method::Kronecker => "kronecker",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "optimal-lp" | "optimal" | "lp" => Ok(Method::OptimalLp),
            "heuristic" => Ok(Method::Heuristic),
            "kronecker" | "baseline" => Ok(Method::Kronecker),
            other => Err(format!(
                "unknown method {other:?} (expected optimal, heuristic or kronecker)"
            )),
        }
    }
}

/// How the class values of a [`DistortionSpec`] are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecKind {
    /// One value per differing-subset class, `2^k` values, last one equal to 1.
    FullClasses,
    /// `x_0..x_k` for the empty and singleton classes; every class with two
    /// or more differing attributes has value 1.
    CollapsedTail,
    /// Independent per-attribute factors `f_i = e^{ε_i}`; the class value of
    /// `S` is `∏_{i∉S} f_i`. This is the Kronecker mechanism at any `k`.
    Product,
}

/// Relative tolerance used when validating the monotone chain of a spec.
pub const CHAIN_TOLERANCE: f64 = 1e-9;

/// Sparse class-value representation of a distortion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct DistortionSpec {
    schema: AttributeSchema,
    kind: SpecKind,
    x: Vec<Real>,
    requested_eps: PrivacyBudget,
    achieved_eps: PrivacyBudget,
    method: Method,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    schema: AttributeSchema,
    kind: SpecKind,
    x: Vec<Real>,
    #[serde(default)]
    requested_eps: Option<PrivacyBudget>,
    achieved_eps: PrivacyBudget,
    method: Method,
    #[serde(default)]
    log_scale: bool,
}

impl TryFrom<SpecRepr> for DistortionSpec {
    type Error = Error;
    fn try_from(r: SpecRepr) -> Result<Self> {
        let requested = r.requested_eps.unwrap_or_else(|| r.achieved_eps.clone());
        DistortionSpec::new(r.schema, r.kind, r.x, requested, r.achieved_eps, r.method)
    }
}

impl From<DistortionSpec> for SpecRepr {
    fn from(s: DistortionSpec) -> Self {
        let log_scale = s.log_scale();
        SpecRepr {
            schema: s.schema,
            kind: s.kind,
            x: s.x,
            requested_eps: Some(s.requested_eps),
            achieved_eps: s.achieved_eps,
            method: s.method,
            log_scale,
        }
    }
}

impl DistortionSpec {
    /// Builds a spec and checks its structural invariants.
    pub fn new(
        schema: AttributeSchema,
        kind: SpecKind,
        x: Vec<Real>,
        requested_eps: PrivacyBudget,
        achieved_eps: PrivacyBudget,
        method: Method,
    ) -> Result<Self> {
        requested_eps.check_len(&schema)?;
        achieved_eps.check_len(&schema)?;
        let k = schema.k();
        let expected = match kind {
            SpecKind::FullClasses => {
                if k > crate::subsets::MAX_INDEX_K {
                    return Err(Error::TooLarge {
                        what: "full-classes spec",
                        size: 1u128 << k.min(127),
                        cap: 1u128 << crate::subsets::MAX_INDEX_K,
                    });
                }
                1usize << k
            }
            SpecKind::CollapsedTail => k + 1,
            SpecKind::Product => k,
        };
        if x.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: x.len(),
            });
        }
        let spec = DistortionSpec {
            schema,
            kind,
            x,
            requested_eps,
            achieved_eps,
            method,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.schema.k()
    }

    /// Raw stored values (layout depends on [`SpecKind`]).
    pub fn values(&self) -> &[Real] {
        &self.x
    }

    pub fn requested_eps(&self) -> &PrivacyBudget {
        &self.requested_eps
    }

    pub fn achieved_eps(&self) -> &PrivacyBudget {
        &self.achieved_eps
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// True when some class value is beyond the `f64` range, so consumers
    /// limited to doubles must work with logarithms of the values.
    pub fn log_scale(&self) -> bool {
        match self.kind {
            // the largest class is the product of every factor
            SpecKind::Product => self.x0().exceeds_f64(),
            _ => self.x.iter().any(|v| v.exceeds_f64()),
        }
    }

    /// Value of the class whose differing attributes are `mask`.
    ///
    /// `index` must be supplied for full-classes specs.
    pub fn class_value(&self, mask: u32, index: Option<&SubsetIndex>) -> Real {
        match self.kind {
            SpecKind::FullClasses => {
                let index = index.expect("full-classes lookup needs a subset index");
                self.x[index.index_of_mask(mask)]
            }
            SpecKind::CollapsedTail => match mask.count_ones() {
                0 => self.x[0],
                1 => self.x[mask.trailing_zeros() as usize + 1],
                _ => Real::ONE,
            },
            SpecKind::Product => (0..self.k())
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| self.x[i])
                .product(),
        }
    }

    /// Value of the "input reproduced exactly" class.
    pub fn x0(&self) -> Real {
        match self.kind {
            SpecKind::FullClasses | SpecKind::CollapsedTail => self.x[0],
            SpecKind::Product => self.x.iter().copied().product(),
        }
    }

    /// Overall privacy level `ln x_0`.
    pub fn eps_total(&self) -> f64 {
        self.x0().ln()
    }

    fn validate(&self) -> Result<()> {
        let one = Real::ONE;
        let tol = Real::from_f64(CHAIN_TOLERANCE);
        let ge = |hi: Real, lo: Real| hi >= lo - tol * hi.abs().max(lo.abs());
        if let Some(v) = self.x.iter().find(|v| !ge(**v, one)) {
            return Err(Error::InvalidSpec(format!("class value {v} is below 1")));
        }
        match self.kind {
            SpecKind::FullClasses => {
                let n = self.x.len();
                if self.x[n - 1] != one {
                    return Err(Error::InvalidSpec(
                        "the all-differ class must have value 1".into(),
                    ));
                }
                let index = SubsetIndex::for_k(self.k())?;
                for j in 0..n {
                    let m = index.mask(j)?;
                    for i in 0..self.k() {
                        if m & (1 << i) == 0 {
                            let up = index.index_of_mask(m | (1 << i));
                            if !ge(self.x[j], self.x[up]) {
                                return Err(Error::InvalidSpec(format!(
                                    "monotone chain violated between classes {j} and {up}"
                                )));
                            }
                        }
                    }
                }
            }
            SpecKind::CollapsedTail => {
                if let Some(j) = (1..self.x.len()).find(|&j| !ge(self.x[0], self.x[j])) {
                    return Err(Error::InvalidSpec(format!(
                        "x_0 is below the single-difference value x_{j}"
                    )));
                }
            }
            SpecKind::Product => {}
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Summary of one mechanism construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismReport {
    pub method: Method,
    pub requested_eps: Vec<f64>,
    pub achieved_eps: Vec<f64>,
    pub eps_total: f64,
    /// Attributes whose achieved level differs from the request.
    pub adjusted: Vec<usize>,
    pub build_time_secs: f64,
}

impl MechanismReport {
    pub fn from_spec(spec: &DistortionSpec, build_time_secs: f64) -> Self {
        let requested = spec.requested_eps().values().to_vec();
        let achieved = spec.achieved_eps().values().to_vec();
        let adjusted = requested
            .iter()
            .zip(&achieved)
            .enumerate()
            .filter(|(_, (r, a))| (*r - *a).abs() > 1e-12 * r.abs().max(1.0))
            .map(|(i, _)| i)
            .collect();
        MechanismReport {
            method: spec.method(),
            requested_eps: requested,
            achieved_eps: achieved,
            eps_total: spec.eps_total(),
            adjusted,
            build_time_secs,
        }
    }

    /// Sum of achieved per-attribute levels (the Kronecker composition).
    pub fn composed_eps(&self) -> f64 {
        self.achieved_eps.iter().sum()
    }
}
