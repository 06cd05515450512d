//! Executing a spec: the explicit matrix for small domains, a sampler that
//! never builds it, and privacy audits along both paths.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use web_time::Instant;

use crate::baseline::{kronecker_factored, kronecker_spec};
use crate::closed_form::optimal_two;
use crate::error::{Error, Result};
use crate::heuristic::{collapsed_levels, heuristic_build};
use crate::lp::{solve_optimal_with, LpOptions};
use crate::subsets::{SubsetIndex, MAX_INDEX_K};
use crate::types::{
    AttributeSchema, DistortionSpec, MechanismReport, Method, PrivacyBudget, SpecKind,
};
use crate::Real;

/// Largest domain `∏ a_i` that [`materialize`] accepts by default.
pub const DEFAULT_MATRIX_CAP: u64 = 1024;

/// Widest schema for which a Kronecker build enumerates every class;
/// beyond it the factored form is returned.
pub const KRONECKER_FULL_MAX_K: usize = 12;

/// Row-major position of a record: the first attribute is most significant.
pub fn encode(record: &[u32], sizes: &[u32]) -> Result<u64> {
    check_record(record, sizes)?;
    Ok(record
        .iter()
        .zip(sizes)
        .fold(0u64, |acc, (&v, &a)| acc * a as u64 + v as u64))
}

pub fn decode(mut code: u64, sizes: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32; sizes.len()];
    for (slot, &a) in out.iter_mut().zip(sizes).rev() {
        *slot = (code % a as u64) as u32;
        code /= a as u64;
    }
    out
}

pub fn check_record(record: &[u32], sizes: &[u32]) -> Result<()> {
    if record.len() != sizes.len() {
        return Err(Error::LengthMismatch {
            expected: sizes.len(),
            actual: record.len(),
        });
    }
    for (index, (&value, &size)) in record.iter().zip(sizes).enumerate() {
        if value >= size {
            return Err(Error::RecordOutOfRange { index, value, size });
        }
    }
    Ok(())
}

/// Total mass `Z = Σ_j t_j x_j` of one column.
pub fn normalizer(spec: &DistortionSpec) -> Real {
    let sizes = spec.schema().sizes();
    let x = spec.values();
    match spec.kind() {
        SpecKind::FullClasses => {
            let index = SubsetIndex::build(spec.schema()).expect("spec k is within the index cap");
            index
                .multiplicities()
                .iter()
                .zip(x)
                .map(|(&t, &v)| t * v)
                .sum()
        }
        SpecKind::CollapsedTail => {
            let singles: Real = sizes
                .iter()
                .zip(&x[1..])
                .map(|(&a, &v)| Real::from_u64(a as u64 - 1) * v)
                .sum();
            x[0] + singles + tail_weight(sizes)
        }
        SpecKind::Product => sizes
            .iter()
            .zip(x)
            .map(|(&a, &v)| v + Real::from_u64(a as u64 - 1))
            .product(),
    }
}

/// Number of outputs differing from the input in two or more attributes.
fn tail_weight(sizes: &[u32]) -> Real {
    let prod: Real = sizes.iter().map(|&a| Real::from_u64(a as u64)).product();
    let singles: Real = sizes.iter().map(|&a| Real::from_u64(a as u64 - 1)).sum();
    prod - Real::ONE - singles
}

/// Per-attribute levels computed from the class values.
pub fn audit_levels(spec: &DistortionSpec) -> Vec<f64> {
    let sizes = spec.schema().sizes();
    match spec.kind() {
        SpecKind::FullClasses => {
            let index = SubsetIndex::build(spec.schema()).expect("spec k is within the index cap");
            let x = spec.values();
            (0..sizes.len())
                .map(|i| {
                    let mut same = Real::ZERO;
                    let mut diff = Real::ZERO;
                    for (j, &v) in x.iter().enumerate() {
                        let w = index.multiplicity(j) * v;
                        if index.contains(j, i) {
                            diff += w;
                        } else {
                            same += w;
                        }
                    }
                    (same * Real::from_u64(sizes[i] as u64 - 1) / diff).ln()
                })
                .collect()
        }
        SpecKind::CollapsedTail => collapsed_levels(sizes, spec.values())
            .into_iter()
            .map(|l| l.ln())
            .collect(),
        SpecKind::Product => spec.values().iter().map(|v| v.ln()).collect(),
    }
}

/// Level of attribute `i`: the largest ratio between the probability that
/// output attribute `i` equals a value `u` given input `u`, and the same
/// probability given some other input value.
pub fn audit_attribute(spec: &DistortionSpec, i: usize) -> Result<f64> {
    if i >= spec.k() {
        return Err(Error::AttributeOutOfRange { index: i, k: spec.k() });
    }
    Ok(audit_levels(spec)[i])
}

/// Overall level: log of the largest to smallest class value.
pub fn audit_total(spec: &DistortionSpec) -> f64 {
    let x = spec.values();
    match spec.kind() {
        SpecKind::Product => spec.x0().ln(),
        SpecKind::FullClasses | SpecKind::CollapsedTail => {
            let mut hi = x[0];
            let mut lo = x[0];
            for &v in x {
                hi = hi.max(v);
                lo = lo.min(v);
            }
            if spec.kind() == SpecKind::CollapsedTail && spec.k() >= 2 {
                lo = lo.min(Real::ONE);
            }
            (hi / lo).ln()
        }
    }
}

/// Explicit column-stochastic matrix: `entry(u, v) = Pr[output u | input v]`.
#[derive(Debug, Clone)]
pub struct FullMatrix {
    sizes: Vec<u32>,
    dim: usize,
    entries: Vec<Real>,
    normalizer: Real,
}

pub fn materialize(spec: &DistortionSpec) -> Result<FullMatrix> {
    materialize_with_cap(spec, DEFAULT_MATRIX_CAP)
}

pub fn materialize_with_cap(spec: &DistortionSpec, cap: u64) -> Result<FullMatrix> {
    let sizes = spec.schema().sizes().to_vec();
    let dim = match spec.schema().domain_size_u64() {
        Some(d) if d <= cap => d as usize,
        _ => {
            return Err(Error::TooLarge {
                what: "distortion matrix dimension",
                size: spec.schema().domain_size().to_f64() as u128,
                cap: cap as u128,
            })
        }
    };
    let index = match spec.kind() {
        SpecKind::FullClasses => Some(SubsetIndex::for_k(spec.k())?),
        _ => None,
    };
    let z = normalizer(spec);
    let k = sizes.len();
    // one value per class mask, divided once
    let by_mask: Vec<Real> = (0..1u32 << k)
        .map(|m| spec.class_value(m, index.as_ref()) / z)
        .collect();
    let records: Vec<Vec<u32>> = (0..dim as u64).map(|c| decode(c, &sizes)).collect();
    let mut entries = Vec::with_capacity(dim * dim);
    for u in &records {
        for v in &records {
            let mask = u
                .iter()
                .zip(v)
                .enumerate()
                .fold(0u32, |m, (i, (a, b))| if a != b { m | 1 << i } else { m });
            entries.push(by_mask[mask as usize]);
        }
    }
    Ok(FullMatrix {
        sizes,
        dim,
        entries,
        normalizer: z,
    })
}

impl FullMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn normalizer(&self) -> Real {
        self.normalizer
    }

    pub fn entry(&self, u: usize, v: usize) -> Real {
        self.entries[u * self.dim + v]
    }

    pub fn column(&self, v: usize) -> Vec<Real> {
        (0..self.dim).map(|u| self.entry(u, v)).collect()
    }

    pub fn column_sums(&self) -> Vec<Real> {
        (0..self.dim).map(|v| self.column(v).into_iter().sum()).collect()
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|u| (0..self.dim).map(|v| self.entry(u, v).to_f64()).collect())
            .collect()
    }

    /// Per-attribute level by summing the matrix into marginals.
    pub fn audit_attribute(&self, i: usize) -> Result<f64> {
        let k = self.sizes.len();
        if i >= k {
            return Err(Error::AttributeOutOfRange { index: i, k });
        }
        let a = self.sizes[i] as usize;
        let records: Vec<Vec<u32>> = (0..self.dim as u64).map(|c| decode(c, &self.sizes)).collect();
        let mut best_same = vec![Real::ZERO; a];
        let mut worst_diff: Vec<Option<Real>> = vec![None; a];
        for (v, rec_v) in records.iter().enumerate() {
            let mut marg = vec![Real::ZERO; a];
            for (u, rec_u) in records.iter().enumerate() {
                marg[rec_u[i] as usize] += self.entry(u, v);
            }
            for (c, m) in marg.into_iter().enumerate() {
                if rec_v[i] as usize == c {
                    best_same[c] = best_same[c].max(m);
                } else {
                    worst_diff[c] = Some(worst_diff[c].map_or(m, |w| w.min(m)));
                }
            }
        }
        let ratio = (0..a)
            .map(|c| best_same[c] / worst_diff[c].expect("a >= 2"))
            .fold(Real::ZERO, Real::max);
        Ok(ratio.ln())
    }

    /// Overall level: largest within-row ratio of two entries.
    pub fn audit_total(&self) -> f64 {
        (0..self.dim)
            .map(|u| {
                let row = &self.entries[u * self.dim..(u + 1) * self.dim];
                let hi = row.iter().copied().fold(row[0], Real::max);
                let lo = row.iter().copied().fold(row[0], Real::min);
                (hi / lo).ln()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
enum Plan {
    /// One alias draw over every class mask.
    Classes(WeightedAliasIndex<f64>, Vec<u32>),
    /// Identity, one singleton per attribute, or the ≥2 tail.
    Collapsed {
        top: WeightedAliasIndex<f64>,
        tail: TailSampler,
    },
    /// Each attribute kept independently with its own probability.
    Product(Vec<f64>),
}

/// Draws differing-attribute sets of size ≥ 2 with probability proportional
/// to `∏_{i∈S} (a_i - 1)`, by a forward pass over states "0, 1, ≥2
/// differences so far" and backward sampling.
#[derive(Debug, Clone)]
struct TailSampler {
    /// Probability that attribute `i` differs when the state after it is ≥2.
    differ_from_many: Vec<f64>,
    /// Given that, the probability the state before it was exactly 1.
    prev_one: Vec<f64>,
    /// Probability that attribute `i` differs when the state after it is 1.
    differ_from_one: Vec<f64>,
}

impl TailSampler {
    fn new(sizes: &[u32]) -> TailSampler {
        let k = sizes.len();
        let mut f = vec![[Real::ONE, Real::ZERO, Real::ZERO]];
        for &a in sizes {
            let w = Real::from_u64(a as u64 - 1);
            let [s0, s1, s2] = *f.last().unwrap();
            f.push([s0, s1 + s0 * w, s2 + (s1 + s2) * w]);
        }
        let ratio = |num: Real, den: Real| if den.is_zero() { 0.0 } else { (num / den).to_f64() };
        let mut differ_from_many = vec![0.0; k];
        let mut prev_one = vec![0.0; k];
        let mut differ_from_one = vec![0.0; k];
        for i in 0..k {
            let w = Real::from_u64(sizes[i] as u64 - 1);
            let [s0, s1, s2] = f[i];
            let [_, n1, n2] = f[i + 1];
            differ_from_many[i] = ratio((s1 + s2) * w, n2);
            prev_one[i] = ratio(s1, s1 + s2);
            differ_from_one[i] = ratio(s0 * w, n1);
        }
        TailSampler {
            differ_from_many,
            prev_one,
            differ_from_one,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        let mut state = 2u8;
        for i in (0..self.differ_from_many.len()).rev() {
            match state {
                2 => {
                    if rng.random::<f64>() < self.differ_from_many[i] {
                        out.push(i);
                        if rng.random::<f64>() < self.prev_one[i] {
                            state = 1;
                        }
                    }
                }
                1 => {
                    if rng.random::<f64>() < self.differ_from_one[i] {
                        out.push(i);
                        state = 0;
                    }
                }
                _ => break,
            }
        }
    }
}

/// Perturbs records according to a spec in time linear in `k` per record.
#[derive(Debug, Clone)]
pub struct Sampler {
    sizes: Vec<u32>,
    plan: Plan,
}

impl Sampler {
    pub fn new(spec: &DistortionSpec) -> Result<Sampler> {
        let sizes = spec.schema().sizes().to_vec();
        let z = normalizer(spec);
        let alias = |w: Vec<f64>| {
            WeightedAliasIndex::new(w).map_err(|e| Error::InvalidSpec(format!("sampling weights: {e}")))
        };
        let plan = match spec.kind() {
            SpecKind::FullClasses => {
                let index = SubsetIndex::build(spec.schema())?;
                let weights = (0..index.num_classes())
                    .map(|j| (index.multiplicity(j) * spec.values()[j] / z).to_f64())
                    .collect();
                let masks = (0..index.num_classes())
                    .map(|j| index.mask(j))
                    .collect::<Result<Vec<_>>>()?;
                Plan::Classes(alias(weights)?, masks)
            }
            SpecKind::CollapsedTail => {
                let x = spec.values();
                let mut w = vec![(x[0] / z).to_f64()];
                for (&a, &v) in sizes.iter().zip(&x[1..]) {
                    w.push((Real::from_u64(a as u64 - 1) * v / z).to_f64());
                }
                w.push((tail_weight(&sizes) / z).to_f64());
                Plan::Collapsed {
                    top: alias(w)?,
                    tail: TailSampler::new(&sizes),
                }
            }
            SpecKind::Product => Plan::Product(
                sizes
                    .iter()
                    .zip(spec.values())
                    .map(|(&a, &v)| {
                        let other = Real::from_u64(a as u64 - 1);
                        (other / (v + other)).to_f64()
                    })
                    .collect(),
            ),
        };
        Ok(Sampler { sizes, plan })
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn perturb<R: Rng + ?Sized>(&self, record: &[u32], rng: &mut R) -> Result<Vec<u32>> {
        check_record(record, &self.sizes)?;
        let mut out = record.to_vec();
        let mut change = |i: usize, rng: &mut R| {
            let r = rng.random_range(0..self.sizes[i] - 1);
            out[i] = if r >= record[i] { r + 1 } else { r };
        };
        match &self.plan {
            Plan::Classes(alias, masks) => {
                let m = masks[alias.sample(rng)];
                for i in 0..self.sizes.len() {
                    if m & (1 << i) != 0 {
                        change(i, rng);
                    }
                }
            }
            Plan::Collapsed { top, tail } => {
                let k = self.sizes.len();
                match top.sample(rng) {
                    0 => {}
                    c if c <= k => change(c - 1, rng),
                    _ => {
                        let mut picked = Vec::new();
                        tail.sample(rng, &mut picked);
                        for i in picked {
                            change(i, rng);
                        }
                    }
                }
            }
            Plan::Product(p) => {
                for (i, &p) in p.iter().enumerate() {
                    if rng.random::<f64>() < p {
                        change(i, rng);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One-off perturbation. Builds a [`Sampler`] each call; reuse one for
/// datasets.
pub fn perturb<R: Rng + ?Sized>(record: &[u32], spec: &DistortionSpec, rng: &mut R) -> Result<Vec<u32>> {
    Sampler::new(spec)?.perturb(record, rng)
}

/// Records per independent random stream in [`perturb_all`].
const CHUNK: usize = 1024;

/// Perturb a whole dataset. Chunk `c` uses its own stream derived from
/// `seed` and `c`, so the output does not depend on thread count.
pub fn perturb_all(records: &[Vec<u32>], sampler: &Sampler, seed: u64) -> Result<Vec<Vec<u32>>> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let run = |(c, chunk): (usize, &[Vec<u32>])| -> Result<Vec<Vec<u32>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        chunk.iter().map(|r| sampler.perturb(r, &mut rng)).collect()
    };
    #[cfg(feature = "parallel")]
    let chunks: Vec<Result<Vec<Vec<u32>>>> = {
        use rayon::prelude::*;
        records.par_chunks(CHUNK).enumerate().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Result<Vec<Vec<u32>>>> = records.chunks(CHUNK).enumerate().map(run).collect();
    let mut out = Vec::with_capacity(records.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Options for [`build_mechanism_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    pub lp: LpOptions,
}

pub fn build_mechanism(
    schema: &AttributeSchema,
    budget: &PrivacyBudget,
    method: Method,
) -> Result<(DistortionSpec, MechanismReport)> {
    build_mechanism_with(schema, budget, method, &BuildOptions::default())
}

/// Build a spec with the chosen method and time it.
///
/// The optimum uses the single-attribute form for `k = 1`, the closed form
/// for `k = 2`, and the linear program beyond. Kronecker specs switch to
/// the factored kind above [`KRONECKER_FULL_MAX_K`] attributes.
pub fn build_mechanism_with(
    schema: &AttributeSchema,
    budget: &PrivacyBudget,
    method: Method,
    opts: &BuildOptions,
) -> Result<(DistortionSpec, MechanismReport)> {
    budget.check_len(schema)?;
    let start = Instant::now();
    let spec = match method {
        Method::Kronecker => {
            if schema.k() <= KRONECKER_FULL_MAX_K.min(MAX_INDEX_K) {
                kronecker_spec(schema, budget)?
            } else {
                kronecker_factored(schema, budget)?
            }
        }
        Method::Heuristic => heuristic_build(schema, budget)?,
        Method::OptimalLp => {
            budget.require_positive()?;
            match schema.k() {
                1 => DistortionSpec::new(
                    schema.clone(),
                    SpecKind::FullClasses,
                    vec![Real::exp(budget.get(0)), Real::ONE],
                    budget.clone(),
                    budget.clone(),
                    Method::OptimalLp,
                )?,
                2 => {
                    let s = optimal_two(schema.size(0), schema.size(1), budget.get(0), budget.get(1))?;
                    DistortionSpec::new(
                        schema.clone(),
                        SpecKind::FullClasses,
                        vec![s.x20, s.x21, s.x22, Real::ONE],
                        budget.clone(),
                        budget.clone(),
                        Method::OptimalLp,
                    )?
                }
                _ => solve_optimal_with(schema, budget, &opts.lp)?.spec,
            }
        }
    };
    let secs = start.elapsed().as_secs_f64();
    let report = MechanismReport::from_spec(&spec, secs);
    Ok((spec, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristic::heuristic_build_with;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn schema(a: &[u32]) -> AttributeSchema {
        AttributeSchema::new(a.to_vec()).unwrap()
    }

    fn budget(e: &[f64]) -> PrivacyBudget {
        PrivacyBudget::new(e.to_vec()).unwrap()
    }

    fn assert_stochastic(m: &FullMatrix) {
        for s in m.column_sums() {
            assert!((s.to_f64() - 1.0).abs() <= 1e-12);
        }
        for u in 0..m.dim() {
            for v in 0..m.dim() {
                assert!(m.entry(u, v) > Real::ZERO);
            }
        }
    }

    #[test]
    fn mixed_radix_round_trip() {
        let sizes = [3, 2, 4];
        for c in 0..24 {
            let r = decode(c, &sizes);
            assert_eq!(encode(&r, &sizes).unwrap(), c);
        }
        assert_eq!(decode(23, &sizes), vec![2, 1, 3]);
        assert!(matches!(
            encode(&[3, 0, 0], &sizes),
            Err(Error::RecordOutOfRange { index: 0, value: 3, size: 3 })
        ));
    }

    #[test]
    fn binary_pair_kronecker_matrix() {
        let e = 1.3f64;
        let spec = kronecker_spec(&schema(&[2, 2]), &budget(&[e, e])).unwrap();
        let m = materialize(&spec).unwrap();
        let z = (e.exp() + 1.0).powi(2);
        // records 00, 01, 10, 11
        let want = [
            [2.0 * e, e, e, 0.0],
            [e, 2.0 * e, 0.0, e],
            [e, 0.0, 2.0 * e, e],
            [0.0, e, e, 2.0 * e],
        ];
        for u in 0..4 {
            for v in 0..4 {
                let w = want[u][v].exp() / z;
                assert!((m.entry(u, v).to_f64() - w).abs() < 1e-15);
            }
        }
        assert_stochastic(&m);
    }

    #[test]
    fn kronecker_matrix_is_product_of_factors() {
        use crate::baseline::single_attribute_matrix;
        let sizes = [3u32, 2, 4];
        let eps = [0.4, 1.7, 2.2];
        let spec = kronecker_spec(&schema(&sizes), &budget(&eps)).unwrap();
        let m = materialize(&spec).unwrap();
        let factors: Vec<Vec<Real>> = sizes
            .iter()
            .zip(eps)
            .map(|(&a, e)| single_attribute_matrix(a, e))
            .collect();
        for u in 0..m.dim() {
            for v in 0..m.dim() {
                let (ru, rv) = (decode(u as u64, &sizes), decode(v as u64, &sizes));
                let p: Real = (0..3)
                    .map(|i| factors[i][ru[i] as usize * sizes[i] as usize + rv[i] as usize])
                    .product();
                assert!((m.entry(u, v) - p).abs().to_f64() <= 1e-12);
            }
        }
    }

    #[test]
    fn uniform_spec_gives_uniform_matrix() {
        let spec = kronecker_spec(&schema(&[2, 3]), &budget(&[0.0, 0.0])).unwrap();
        let m = materialize(&spec).unwrap();
        for u in 0..6 {
            for v in 0..6 {
                assert!((m.entry(u, v).to_f64() - 1.0 / 6.0).abs() < 1e-15);
            }
        }
        assert_eq!(audit_total(&spec), 0.0);
        assert!(m.audit_total().abs() < 1e-15);
    }

    #[test]
    fn heuristic_matrix_has_five_values_per_column() {
        let spec = heuristic_build(&schema(&[2, 2, 2]), &budget(&[1.0, 2.0, 1.5])).unwrap();
        let m = materialize(&spec).unwrap();
        assert_stochastic(&m);
        for v in 0..8 {
            let mut vals: Vec<Real> = m.column(v);
            vals.sort();
            vals.dedup();
            assert!(vals.len() <= 5);
        }
    }

    #[test]
    fn audits_agree_across_paths_and_kinds() {
        let sizes = [3u32, 2, 4];
        let b = budget(&[0.9, 2.1, 1.4]);
        let s = schema(&sizes);
        let specs = vec![
            kronecker_spec(&s, &b).unwrap(),
            kronecker_factored(&s, &b).unwrap(),
            heuristic_build(&s, &b).unwrap(),
            build_mechanism(&s, &b, Method::OptimalLp).unwrap().0,
        ];
        for spec in &specs {
            let m = materialize(spec).unwrap();
            assert_stochastic(&m);
            for i in 0..3 {
                let a = audit_attribute(spec, i).unwrap();
                let b = m.audit_attribute(i).unwrap();
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{:?} {i}", spec.kind());
                let want = spec.achieved_eps().get(i);
                assert!((a - want).abs() <= 1e-9 * want, "{:?} {i}: {a} vs {want}", spec.kind());
            }
            assert!((audit_total(spec) - m.audit_total()).abs() < 1e-9);
            assert!(m.audit_total() <= spec.eps_total() + 1e-9);
        }
        let kron = &specs[0];
        let sum: f64 = (0..3).map(|i| audit_attribute(kron, i).unwrap()).sum();
        assert!((audit_total(kron) - sum).abs() < 1e-12);
    }

    #[test]
    fn fallback_audit_reports_recomputed_level() {
        let out = heuristic_build_with(&schema(&[5, 5, 5]), &budget(&[0.01, 1.0, 0.01]), Some(&[0, 1, 2])).unwrap();
        assert_eq!(out.fallbacks, vec![2]);
        let spec = out.spec;
        let audited = audit_attribute(&spec, 2).unwrap();
        assert!((audited - spec.achieved_eps().get(2)).abs() < 1e-9);
        assert!(audited > 0.5);
        let m = materialize(&spec).unwrap();
        assert!((m.audit_attribute(2).unwrap() - audited).abs() < 1e-9);
    }

    #[test]
    fn binary_pair_optimum_total_is_ln3() {
        let ln2 = std::f64::consts::LN_2;
        let (spec, report) = build_mechanism(&schema(&[2, 2]), &budget(&[ln2, ln2]), Method::OptimalLp).unwrap();
        assert!((audit_total(&spec) - 3f64.ln()).abs() < 1e-12);
        assert!(report.adjusted.is_empty());
        assert!(report.eps_total < report.composed_eps());
    }

    #[test]
    fn class_mass_identity_holds_for_every_kind() {
        let s = schema(&[3, 4, 2]);
        let b = budget(&[1.0, 0.5, 2.0]);
        let full = kronecker_spec(&s, &b).unwrap();
        let fac = kronecker_factored(&s, &b).unwrap();
        assert!(Real::rel_diff(normalizer(&full), normalizer(&fac)) < 1e-30);
        let h = heuristic_build(&s, &b).unwrap();
        let m = materialize(&h).unwrap();
        let col: Real = m.column(5).into_iter().map(|p| p * m.normalizer()).sum();
        assert!(Real::rel_diff(col, normalizer(&h)) < 1e-30);
    }

    fn tvd(spec: &DistortionSpec, input: &[u32], draws: usize, seed: u64) -> f64 {
        let sizes = spec.schema().sizes().to_vec();
        let m = materialize(spec).unwrap();
        let sampler = Sampler::new(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0usize; m.dim()];
        for _ in 0..draws {
            let out = sampler.perturb(input, &mut rng).unwrap();
            counts[encode(&out, &sizes).unwrap() as usize] += 1;
        }
        let v = encode(input, &sizes).unwrap() as usize;
        (0..m.dim())
            .map(|u| (counts[u] as f64 / draws as f64 - m.entry(u, v).to_f64()).abs())
            .sum::<f64>()
            / 2.0
    }

    #[test]
    fn sampler_matches_matrix_for_each_kind() {
        let s = schema(&[3, 2, 4]);
        let b = budget(&[0.6, 0.3, 1.1]);
        for spec in [
            kronecker_spec(&s, &b).unwrap(),
            kronecker_factored(&s, &b).unwrap(),
            heuristic_build(&s, &b).unwrap(),
        ] {
            let d = tvd(&spec, &[2, 1, 0], 200_000, 3);
            assert!(d < 0.01, "{:?}: {d}", spec.kind());
        }
    }

    #[test]
    fn tail_sampler_marginals() {
        // sets of size >= 2 over sizes (3,2,4): weights 2*1, 2*3, 1*3, 2*1*3
        let t = TailSampler::new(&[3, 2, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = std::collections::HashMap::new();
        let mut buf = Vec::new();
        let n = 200_000;
        for _ in 0..n {
            t.sample(&mut rng, &mut buf);
            let mut s = buf.clone();
            s.sort();
            *counts.entry(s).or_insert(0usize) += 1;
        }
        let want = [(vec![0, 1], 2.0), (vec![0, 2], 6.0), (vec![1, 2], 3.0), (vec![0, 1, 2], 6.0)];
        assert_eq!(counts.len(), 4);
        for (set, w) in want {
            let p = counts[&set] as f64 / n as f64;
            assert!((p - w / 17.0).abs() < 0.005, "{set:?} {p}");
        }
    }

    #[test]
    fn huge_levels_almost_never_change_the_record() {
        let s = schema(&[2, 3, 2]);
        let spec = heuristic_build(&s, &budget(&[50.0, 50.0, 50.0])).unwrap();
        let sampler = Sampler::new(&spec).unwrap();
        let keep = (spec.x0() / normalizer(&spec)).to_f64();
        assert!(keep > 0.999);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let same = (0..10_000)
            .filter(|_| sampler.perturb(&[1, 2, 0], &mut rng).unwrap() == vec![1, 2, 0])
            .count();
        assert!(same >= 9_990);
    }

    #[test]
    fn wide_schema_sampling_is_linear() {
        let k = 1000;
        let s = AttributeSchema::uniform(k, 4).unwrap();
        let b = PrivacyBudget::uniform(k, 0.05).unwrap();
        let spec = heuristic_build(&s, &b).unwrap();
        let sampler = Sampler::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rec = vec![1u32; k];
        let out = sampler.perturb(&rec, &mut rng).unwrap();
        assert_eq!(out.len(), k);
        // at such a small per-attribute level most attributes change
        let changed = out.iter().filter(|&&v| v != 1).count();
        assert!(changed > k / 2);
    }

    #[test]
    fn perturbation_is_deterministic_per_seed() {
        let s = schema(&[3, 3, 3, 3]);
        let spec = heuristic_build(&s, &budget(&[1.0; 4])).unwrap();
        let sampler = Sampler::new(&spec).unwrap();
        let data: Vec<Vec<u32>> = (0..3000).map(|i| decode(i % 81, s.sizes())).collect();
        let a = perturb_all(&data, &sampler, 17).unwrap();
        let b = perturb_all(&data, &sampler, 17).unwrap();
        let c = perturb_all(&data, &sampler, 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_oversized_matrix_and_bad_records() {
        let spec = kronecker_spec(&schema(&[5, 5, 5, 5, 5]), &budget(&[1.0; 5])).unwrap();
        assert!(matches!(materialize(&spec), Err(Error::TooLarge { .. })));
        let sampler = Sampler::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sampler.perturb(&[0, 0, 0], &mut rng).is_err());
        assert!(sampler.perturb(&[0, 0, 0, 0, 5], &mut rng).is_err());
    }

    #[test]
    fn single_attribute_routes() {
        let s = schema(&[4]);
        let b = budget(&[1.2]);
        for method in Method::ALL {
            let (spec, _) = build_mechanism(&s, &b, method).unwrap();
            assert!((audit_attribute(&spec, 0).unwrap() - 1.2).abs() < 1e-12);
            assert!((spec.eps_total() - 1.2).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_kronecker_is_factored() {
        let s = AttributeSchema::uniform(40, 3).unwrap();
        let b = PrivacyBudget::uniform(40, 1.0).unwrap();
        let (spec, report) = build_mechanism(&s, &b, Method::Kronecker).unwrap();
        assert_eq!(spec.kind(), SpecKind::Product);
        assert!((report.eps_total - 40.0).abs() < 1e-9);
    }
}
