//! The optimal-matrix linear program over the `2^k - 1` free class values.
//!
//! Variables are `x_0..x_{2^k-2}` (the all-differ class is pinned to 1).
//! Inequalities encode the monotone chain between covering subsets;
//! equalities pin each attribute's privacy level.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::simplex::{self, SimplexOptions, SolveStats};
use crate::subsets::SubsetIndex;
use crate::types::{AttributeSchema, DistortionSpec, Method, PrivacyBudget, SpecKind};
use crate::Real;

/// Largest `k` solved exactly unless the caller raises the cap.
pub const DEFAULT_MAX_K: usize = 12;

/// Sparse row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, Real)>;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub k: usize,
    pub objective: Vec<Real>,
    pub a_ub: Vec<SparseRow>,
    pub b_ub: Vec<Real>,
    pub a_eq: Vec<Vec<Real>>,
    pub b_eq: Vec<Real>,
}

/// Chain inequalities; they depend on `k` only.
pub fn build_inequalities(index: &SubsetIndex) -> Result<(Vec<SparseRow>, Vec<Real>)> {
    let k = index.k();
    if k < 2 {
        return Err(Error::UnsupportedK {
            what: "the inequality system",
            requirement: "k >= 2",
            k,
        });
    }
    let minus = -Real::ONE;
    let rows_total = k << (k - 1);
    let mut a = Vec::with_capacity(rows_total);
    for h in 1..=k {
        a.push(vec![(0, minus), (h, Real::ONE)]);
    }
    for h in 1..=k - 2 {
        let upper = index.block(h + 1);
        for g in index.block(h) {
            let mg = index.mask(g)?;
            for j in upper.clone() {
                let mj = index.mask(j)?;
                if mg & mj == mg {
                    a.push(vec![(g, minus), (j, Real::ONE)]);
                }
            }
        }
    }
    for j in index.block(k - 1) {
        a.push(vec![(j, minus)]);
    }
    debug_assert_eq!(a.len(), rows_total);
    let mut b = vec![Real::ZERO; rows_total];
    for v in b.iter_mut().rev().take(k) {
        *v = minus;
    }
    Ok((a, b))
}

/// Privacy-level equalities, one row per attribute.
pub fn build_equalities(
    index: &SubsetIndex,
    schema: &AttributeSchema,
    budget: &PrivacyBudget,
) -> Result<(Vec<Vec<Real>>, Vec<Real>)> {
    let k = schema.k();
    if index.k() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: index.k(),
        });
    }
    budget.check_len(schema)?;
    budget.require_positive()?;
    let n = index.num_classes() - 1;
    let full: Real = (0..k)
        .map(|i| Real::from_u64(schema.size(i) as u64 - 1))
        .product();
    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    for i in 0..k {
        let e = Real::exp(budget.get(i));
        let ai = Real::from_u64(schema.size(i) as u64 - 1);
        let row: Vec<Real> = (0..n)
            .map(|j| {
                let t = index.multiplicity(j);
                if index.contains(j, i) {
                    -(e * t / ai)
                } else {
                    t
                }
            })
            .collect();
        a.push(row);
        b.push(e * full / ai);
    }
    Ok((a, b))
}

impl LinearProgram {
    pub fn build(schema: &AttributeSchema, budget: &PrivacyBudget) -> Result<Self> {
        let index = SubsetIndex::build(schema)?;
        let (a_ub, b_ub) = build_inequalities(&index)?;
        let (a_eq, b_eq) = build_equalities(&index, schema, budget)?;
        let n = index.num_classes() - 1;
        let mut objective = vec![Real::ZERO; n];
        objective[0] = Real::ONE;
        Ok(LinearProgram {
            k: schema.k(),
            objective,
            a_ub,
            b_ub,
            a_eq,
            b_eq,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn a_ub_dense(&self) -> Vec<Vec<Real>> {
        self.a_ub
            .iter()
            .map(|row| {
                let mut d = vec![Real::ZERO; self.num_vars()];
                for &(j, v) in row {
                    d[j] = v;
                }
                d
            })
            .collect()
    }

    /// Largest inequality violation `max(A_ub x - b_ub, 0)`.
    pub fn inequality_violation(&self, x: &[Real]) -> Real {
        self.a_ub
            .iter()
            .zip(&self.b_ub)
            .map(|(row, &b)| {
                let lhs: Real = row.iter().map(|&(j, v)| v * x[j]).sum();
                (lhs - b).max(Real::ZERO)
            })
            .max()
            .unwrap_or(Real::ZERO)
    }

    /// Largest equality residual relative to `|b_eq|`.
    pub fn equality_residual(&self, x: &[Real]) -> f64 {
        self.a_eq
            .iter()
            .zip(&self.b_eq)
            .map(|(row, &b)| {
                let lhs: Real = row.iter().zip(x).map(|(&a, &v)| a * v).sum();
                Real::rel_diff(lhs, b)
            })
            .fold(0.0, f64::max)
    }

    /// Dump `A_ub.csv`, `b_ub.csv`, `A_eq.csv`, `b_eq.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let write_matrix = |name: &str, rows: &[Vec<Real>]| -> Result<()> {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            for row in rows {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(f, "{}", line.join(","))?;
            }
            f.flush()?;
            Ok(())
        };
        write_matrix("A_ub.csv", &self.a_ub_dense())?;
        write_matrix("A_eq.csv", &self.a_eq)?;
        write_matrix("b_ub.csv", &self.b_ub.iter().map(|&v| vec![v]).collect::<Vec<_>>())?;
        write_matrix("b_eq.csv", &self.b_eq.iter().map(|&v| vec![v]).collect::<Vec<_>>())?;
        Ok(())
    }

    pub fn solve(&self, opts: &SimplexOptions) -> Result<(Vec<Real>, SolveStats)> {
        self.solve_scaled(opts, None)
    }

    /// Solve with a rough guess of each variable's magnitude, used only to
    /// scale the problem.
    pub fn solve_scaled(
        &self,
        opts: &SimplexOptions,
        magnitude: Option<&[Real]>,
    ) -> Result<(Vec<Real>, SolveStats)> {
        let n = self.num_vars();
        let a_eq: Vec<SparseRow> = self
            .a_eq
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        let sol = simplex::minimize_scaled(
            n,
            &self.objective,
            &self.a_ub,
            &self.b_ub,
            &a_eq,
            &self.b_eq,
            opts,
            magnitude,
        )?;
        Ok((sol.x, sol.stats))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub max_k: usize,
    pub simplex: SimplexOptions,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_k: DEFAULT_MAX_K,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub spec: DistortionSpec,
    pub stats: SolveStats,
    pub equality_residual: f64,
    pub inequality_violation: f64,
}

pub fn solve_optimal(schema: &AttributeSchema, budget: &PrivacyBudget) -> Result<DistortionSpec> {
    Ok(solve_optimal_with(schema, budget, &LpOptions::default())?.spec)
}

pub fn solve_optimal_with(
    schema: &AttributeSchema,
    budget: &PrivacyBudget,
    opts: &LpOptions,
) -> Result<LpOutcome> {
    let k = schema.k();
    if k > opts.max_k {
        return Err(Error::TooLarge {
            what: "exact linear program",
            size: (1u128 << k.min(127)) - 1,
            cap: (1u128 << opts.max_k) - 1,
        });
    }
    budget.check_len(schema)?;
    let lp = LinearProgram::build(schema, budget)?;
    let index = SubsetIndex::for_k(k)?;
    let guess = magnitude_guess(schema, budget, &index)?;

    // The problem is always feasible (the independent product satisfies
    // it), so any failure is numerical: retry once with plain equilibration.
    let mut last_err = None;
    let mut found = None;
    for hint in [Some(&guess[..]), None] {
        match lp.solve_scaled(&opts.simplex, hint) {
            Ok((x, stats)) => {
                let equality_residual = lp.equality_residual(&x);
                let inequality_violation = lp.inequality_violation(&x).to_f64();
                if equality_residual <= 1e-8 && inequality_violation <= 1e-9 {
                    found = Some((x, stats, equality_residual, inequality_violation));
                    break;
                }
                last_err = Some(Error::NoConvergence {
                    iterations: stats.float_iterations + stats.exact_iterations,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((mut x, stats, equality_residual, inequality_violation)) = found else {
        return Err(last_err.expect("at least one attempt"));
    };
    x.push(Real::ONE);
    let spec = DistortionSpec::new(
        schema.clone(),
        SpecKind::FullClasses,
        x,
        budget.clone(),
        budget.clone(),
        Method::OptimalLp,
    )?;
    Ok(LpOutcome {
        spec,
        stats,
        equality_residual,
        inequality_violation,
    })
}

/// Rough size of each free class value, from the inductive construction:
/// its identity and singleton values, and 1 for larger classes.
fn magnitude_guess(
    schema: &AttributeSchema,
    budget: &PrivacyBudget,
    index: &SubsetIndex,
) -> Result<Vec<Real>> {
    let spec = crate::heuristic::heuristic_build(schema, budget)?;
    let n = index.num_classes() - 1;
    Ok((0..n)
        .map(|j| match index.size_of(j) {
            0 => spec.values()[0],
            1 => spec.values()[1 + index.mask(j).unwrap_or(1).trailing_zeros() as usize],
            _ => Real::ONE,
        })
        .collect())
}
