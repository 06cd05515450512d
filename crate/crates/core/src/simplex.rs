//! Dense revised simplex for problems in standard form
//! `min dᵀz  s.t.  M z = r,  z ≥ 0`.
//!
//! The search runs in `f64` on an equilibrated copy of the problem with a
//! slightly perturbed right-hand side. The basis it ends on is then
//! refactored in [`Real`] arithmetic against the exact data and finished with
//! dual and primal pivots if anything is off, so returned points are accurate
//! far beyond `f64` even when the data spans many orders of magnitude.
//!
//! [`minimize`] wraps this for inequality-form problems by solving the dual.

use std::ops::{Add, Div, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Real;

pub(crate) trait Scalar:
    Copy
    + std::fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;
    fn magnitude(self) -> Self;
    fn is_zero(self) -> bool;
}

impl Scalar for f64 {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
}

impl Scalar for Real {
    const ZERO: Real = Real::ZERO;
    const ONE: Real = Real::ONE;
    fn magnitude(self) -> Real {
        self.abs()
    }
    fn is_zero(self) -> bool {
        Real::is_zero(self)
    }
}

/// Sparse column-major problem `min dᵀz, M z = r, z ≥ 0`.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub rows: usize,
    /// Column `j` as `(row, value)` pairs.
    pub cols: Vec<Vec<(usize, Real)>>,
    pub cost: Vec<Real>,
    pub rhs: Vec<Real>,
}

#[derive(Debug, Clone)]
pub struct StandardSolution {
    pub z: Vec<Real>,
    /// Simplex multipliers `y` with `Mᵀy ≤ d` at optimality.
    pub y: Vec<Real>,
    pub objective: Real,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub float_iterations: usize,
    pub exact_iterations: usize,
    /// True when the floating-point search had to be abandoned.
    pub float_phase_failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Infeasible,
    /// Columns carrying a nonzero component of an unbounded ray.
    Unbounded { ray: Vec<usize> },
    NoConvergence { iterations: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Iteration cap per phase, as a multiple of `rows + columns`.
    pub iteration_factor: usize,
    pub refactor_every: usize,
    pub seed: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            iteration_factor: 20,
            refactor_every: 200,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy)]
struct Tol<T> {
    feas: T,
    opt: T,
    /// Relative size below which a reduced cost with no ratio-test row is
    /// treated as noise rather than evidence of an unbounded ray.
    noise: T,
    pivot: T,
    singular: T,
}

enum Stop {
    Fail(Failure),
    Singular,
}

impl From<Failure> for Stop {
    fn from(f: Failure) -> Stop {
        Stop::Fail(f)
    }
}

struct Engine<T> {
    m: usize,
    cols: Vec<Vec<(usize, T)>>,
    /// Columns at or beyond this index are artificials.
    n_struct: usize,
    rhs: Vec<T>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<T>,
    xb: Vec<T>,
    iterations: usize,
    since_refactor: usize,
}

impl<T: Scalar> Engine<T> {
    fn new(m: usize, cols: Vec<Vec<(usize, T)>>, n_struct: usize, rhs: Vec<T>, basis: Vec<usize>) -> Self {
        let mut position = vec![None; cols.len()];
        for (r, &j) in basis.iter().enumerate() {
            position[j] = Some(r);
        }
        Engine {
            m,
            cols,
            n_struct,
            rhs,
            basis,
            position,
            binv: Vec::new(),
            xb: Vec::new(),
            iterations: 0,
            since_refactor: 0,
        }
    }

    /// Invert the basis matrix in place (Gauss-Jordan, partial pivoting).
    fn refactor(&mut self, tol: T) -> bool {
        let m = self.m;
        let mut a = vec![T::ZERO; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                a[i * m + c] = v;
            }
        }
        let mut perm = vec![0usize; m];
        let mut nz = Vec::with_capacity(m);
        for k in 0..m {
            let mut p = k;
            let mut best = a[k * m + k].magnitude();
            for i in k + 1..m {
                let v = a[i * m + k].magnitude();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tol) {
                return false;
            }
            perm[k] = p;
            if p != k {
                for c in 0..m {
                    a.swap(p * m + c, k * m + c);
                }
            }
            let inv = T::ONE / a[k * m + k];
            a[k * m + k] = T::ONE;
            nz.clear();
            for c in 0..m {
                let v = a[k * m + c] * inv;
                a[k * m + c] = v;
                if !v.is_zero() {
                    nz.push(c);
                }
            }
            for i in 0..m {
                if i == k {
                    continue;
                }
                let f = a[i * m + k];
                if f.is_zero() {
                    continue;
                }
                a[i * m + k] = T::ZERO;
                for &c in &nz {
                    a[i * m + c] = a[i * m + c] - f * a[k * m + c];
                }
            }
        }
        for k in (0..m).rev() {
            let p = perm[k];
            if p != k {
                for i in 0..m {
                    a.swap(i * m + p, i * m + k);
                }
            }
        }
        self.binv = a;
        self.xb = (0..m)
            .map(|r| {
                let row = &self.binv[r * m..(r + 1) * m];
                let mut s = T::ZERO;
                for (i, &b) in self.rhs.iter().enumerate() {
                    if !b.is_zero() {
                        s = s + row[i] * b;
                    }
                }
                s
            })
            .collect();
        self.since_refactor = 0;
        true
    }

    fn duals(&self, cost: &[T]) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::ZERO; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb.is_zero() {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            for i in 0..m {
                y[i] = y[i] + cb * row[i];
            }
        }
        y
    }

    fn reduced(&self, cost: &[T], y: &[T], j: usize) -> T {
        let mut s = cost[j];
        for &(i, v) in &self.cols[j] {
            s = s - y[i] * v;
        }
        s
    }

    /// Reduced cost together with the size of the terms that produced it,
    /// so pricing can ignore values that are only cancellation noise.
    fn reduced_scaled(&self, cost: &[T], y: &[T], j: usize) -> (T, T) {
        let mut s = cost[j];
        let mut size = cost[j].magnitude();
        for &(i, v) in &self.cols[j] {
            let t = y[i] * v;
            s = s - t;
            size = size + t.magnitude();
        }
        (s, size)
    }

    fn ftran(&self, j: usize) -> Vec<T> {
        let m = self.m;
        (0..m)
            .map(|r| {
                let row = &self.binv[r * m..(r + 1) * m];
                let mut s = T::ZERO;
                for &(i, v) in &self.cols[j] {
                    s = s + row[i] * v;
                }
                s
            })
            .collect()
    }

    fn row_times_col(&self, r: usize, j: usize) -> T {
        let row = &self.binv[r * self.m..(r + 1) * self.m];
        let mut s = T::ZERO;
        for &(i, v) in &self.cols[j] {
            s = s + row[i] * v;
        }
        s
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[T]) {
        let m = self.m;
        let inv = T::ONE / alpha[r];
        for c in 0..m {
            self.binv[r * m + c] = self.binv[r * m + c] * inv;
        }
        let theta = self.xb[r] * inv;
        self.xb[r] = theta;
        let pivot_row: Vec<(usize, T)> = (0..m)
            .filter_map(|c| {
                let v = self.binv[r * m + c];
                (!v.is_zero()).then_some((c, v))
            })
            .collect();
        for i in 0..m {
            if i == r || alpha[i].is_zero() {
                continue;
            }
            let f = alpha[i];
            for &(c, v) in &pivot_row {
                self.binv[i * m + c] = self.binv[i * m + c] - f * v;
            }
            self.xb[i] = self.xb[i] - f * theta;
        }
        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.position[q] = Some(r);
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    fn objective(&self, cost: &[T]) -> T {
        let mut s = T::ZERO;
        for (r, &j) in self.basis.iter().enumerate() {
            s = s + cost[j] * self.xb[r];
        }
        s
    }

    fn ray(&self, q: usize, alpha: &[T], tol: T) -> Vec<usize> {
        let mut ray = vec![q];
        for (r, &a) in alpha.iter().enumerate() {
            if a < -tol {
                ray.push(self.basis[r]);
            }
        }
        ray.sort_unstable();
        ray
    }

    /// Primal simplex from a primal feasible basis.
    ///
    /// `exact` selects a textbook ratio test with index tie-breaking (used in
    /// extended precision); otherwise a two-pass Harris test is used.
    fn primal(
        &mut self,
        cost: &[T],
        allowed: &dyn Fn(usize) -> bool,
        tol: Tol<T>,
        max_iter: usize,
        refactor_every: usize,
        exact: bool,
    ) -> std::result::Result<(), Stop> {
        let start = self.iterations;
        let mut degenerate = 0usize;
        let mut bland = false;
        // columns whose improving direction turned out to be rounding noise
        let mut suppressed = vec![false; self.cols.len()];
        loop {
            if self.iterations - start >= max_iter {
                return Err(Failure::NoConvergence {
                    iterations: self.iterations,
                }
                .into());
            }
            if !exact && self.since_refactor >= refactor_every && !self.refactor(tol.singular) {
                return Err(Stop::Singular);
            }
            let y = self.duals(cost);
            let mut entering = None;
            let mut best = T::ZERO;
            for j in 0..self.cols.len() {
                if self.position[j].is_some() || !allowed(j) || suppressed[j] {
                    continue;
                }
                let (d, size) = self.reduced_scaled(cost, &y, j);
                if d < -(tol.opt * (T::ONE + size)) && d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(());
            };
            let alpha = self.ftran(q);
            let leave = if exact {
                let big = alpha
                    .iter()
                    .fold(T::ZERO, |acc, a| if a.magnitude() > acc { a.magnitude() } else { acc });
                let piv = tol.pivot * big;
                let mut pick: Option<(usize, T)> = None;
                for r in 0..self.m {
                    if alpha[r] > piv {
                        let ratio = self.xb[r] / alpha[r];
                        let better = match pick {
                            None => true,
                            Some((pr, pt)) => {
                                ratio < pt || (!(ratio > pt) && self.basis[r] < self.basis[pr])
                            }
                        };
                        if better {
                            pick = Some((r, ratio));
                        }
                    }
                }
                pick.map(|(r, _)| r)
            } else {
                let mut bound: Option<T> = None;
                for r in 0..self.m {
                    if alpha[r] > tol.pivot {
                        let t = (self.xb[r] + tol.feas) / alpha[r];
                        if bound.map_or(true, |b| t < b) {
                            bound = Some(t);
                        }
                    }
                }
                bound.and_then(|b| {
                    let mut pick: Option<usize> = None;
                    for r in 0..self.m {
                        if alpha[r] > tol.pivot
                            && !(self.xb[r] / alpha[r] > b)
                            && pick.map_or(true, |p| alpha[r] > alpha[p])
                        {
                            pick = Some(r);
                        }
                    }
                    pick
                })
            };
            let Some(r) = leave else {
                let (d, size) = self.reduced_scaled(cost, &y, q);
                if !(d < -(tol.noise * (T::ONE + size))) {
                    suppressed[q] = true;
                    continue;
                }
                return Err(Failure::Unbounded {
                    ray: self.ray(q, &alpha, tol.pivot),
                }
                .into());
            };
            if !exact && self.xb[r] < T::ZERO {
                self.xb[r] = T::ZERO;
            }
            if self.xb[r].magnitude() > tol.feas {
                degenerate = 0;
            } else {
                degenerate += 1;
                if degenerate > if exact { 50 } else { 500 } {
                    bland = true;
                }
            }
            self.pivot(r, q, &alpha);
            suppressed.iter_mut().for_each(|s| *s = false);
        }
    }

    /// Dual simplex from a basis whose reduced costs are nonnegative under
    /// `cost`. Used to repair small primal infeasibilities.
    fn dual(
        &mut self,
        cost: &[T],
        allowed: &dyn Fn(usize) -> bool,
        tol: Tol<T>,
        max_iter: usize,
    ) -> std::result::Result<(), Stop> {
        let start = self.iterations;
        let mut stalled = 0usize;
        loop {
            if self.iterations - start >= max_iter {
                return Err(Failure::NoConvergence {
                    iterations: self.iterations,
                }
                .into());
            }
            let bland = stalled > 50;
            let mut leave: Option<usize> = None;
            for r in 0..self.m {
                if self.xb[r] < -tol.feas {
                    let better = match leave {
                        None => true,
                        Some(p) if bland => self.basis[r] < self.basis[p],
                        Some(p) => self.xb[r] < self.xb[p],
                    };
                    if better {
                        leave = Some(r);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(());
            };
            let y = self.duals(cost);
            let mut pick: Option<(usize, T)> = None;
            for j in 0..self.cols.len() {
                if self.position[j].is_some() || !allowed(j) {
                    continue;
                }
                let a = self.row_times_col(r, j);
                if a < -tol.pivot {
                    let mut d = self.reduced(cost, &y, j);
                    if d < T::ZERO {
                        d = T::ZERO;
                    }
                    let ratio = d / -a;
                    if pick.map_or(true, |(_, t)| ratio < t) {
                        pick = Some((j, ratio));
                    }
                }
            }
            let Some((q, step)) = pick else {
                return Err(Failure::Infeasible.into());
            };
            if step.magnitude() > tol.opt {
                stalled = 0;
            } else {
                stalled += 1;
            }
            let alpha = self.ftran(q);
            self.pivot(r, q, &alpha);
        }
    }

    /// Pivot basic artificials out wherever a structural column can replace them.
    fn drive_out_artificials(&mut self, tol: T) {
        for r in 0..self.m {
            if self.basis[r] < self.n_struct {
                continue;
            }
            let q = (0..self.n_struct).find(|&j| {
                self.position[j].is_none() && self.row_times_col(r, j).magnitude() > tol
            });
            if let Some(q) = q {
                let alpha = self.ftran(q);
                self.pivot(r, q, &alpha);
            }
        }
    }
}

/// Scaled, sign-normalized copy of a standard form plus the crash basis.
struct Prepared {
    m: usize,
    n_struct: usize,
    cols: Vec<Vec<(usize, Real)>>,
    cost: Vec<Real>,
    rhs: Vec<Real>,
    row_exp: Vec<i64>,
    col_exp: Vec<i64>,
    row_sign: Vec<bool>,
    crash: Vec<usize>,
}

fn log2_abs(v: Real) -> f64 {
    v.abs().ln() / std::f64::consts::LN_2
}

fn prepare(form: &StandardForm, row_hint: Option<&[i64]>) -> Prepared {
    let m = form.rows;
    let n = form.cols.len();
    let logs: Vec<Vec<(usize, f64)>> = form
        .cols
        .iter()
        .map(|c| {
            c.iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|&(i, v)| (i, log2_abs(v)))
                .collect()
        })
        .collect();
    let mut row_exp = row_hint.map_or_else(|| vec![0i64; m], |h| h.to_vec());
    let mut col_exp = vec![0i64; n];
    let passes = if row_hint.is_some() { 1 } else { 6 };
    for _ in 0..passes {
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for (j, c) in logs.iter().enumerate() {
            for &(i, l) in c {
                let l = l + col_exp[j] as f64;
                lo[i] = lo[i].min(l);
                hi[i] = hi[i].max(l);
            }
        }
        for i in 0..m {
            if row_hint.is_none() && lo[i].is_finite() {
                row_exp[i] = -((lo[i] + hi[i]) / 2.0).round() as i64;
            }
        }
        for (j, c) in logs.iter().enumerate() {
            if c.is_empty() {
                continue;
            }
            let (mut l0, mut l1) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(i, l) in c {
                let l = l + row_exp[i] as f64;
                l0 = l0.min(l);
                l1 = l1.max(l);
            }
            col_exp[j] = -((l0 + l1) / 2.0).round() as i64;
        }
    }
    let row_sign: Vec<bool> = form.rhs.iter().map(|r| r.is_negative()).collect();
    let cols: Vec<Vec<(usize, Real)>> = form
        .cols
        .iter()
        .enumerate()
        .map(|(j, c)| {
            c.iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|&(i, v)| {
                    let v = v.scale_pow2(row_exp[i] + col_exp[j]);
                    (i, if row_sign[i] { -v } else { v })
                })
                .collect()
        })
        .collect();
    let cost: Vec<Real> = form
        .cost
        .iter()
        .zip(&col_exp)
        .map(|(&c, &e)| c.scale_pow2(e))
        .collect();
    let rhs: Vec<Real> = form
        .rhs
        .iter()
        .zip(&row_exp)
        .map(|(&r, &e)| r.abs().scale_pow2(e))
        .collect();
    let mut crash: Vec<Option<usize>> = vec![None; m];
    for (j, c) in cols.iter().enumerate() {
        if let [(i, v)] = c.as_slice() {
            if crash[*i].is_none() && !v.is_negative() && !v.is_zero() {
                crash[*i] = Some(j);
            }
        }
    }
    let mut all_cols = cols;
    let n_struct = all_cols.len();
    let crash = crash
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.unwrap_or_else(|| {
                all_cols.push(vec![(i, Real::ONE)]);
                all_cols.len() - 1
            })
        })
        .collect();
    Prepared {
        m,
        n_struct,
        cols: all_cols,
        cost,
        rhs,
        row_exp,
        col_exp,
        row_sign,
        crash,
    }
}

fn float_tol() -> Tol<f64> {
    Tol {
        feas: 1e-9,
        opt: 1e-9,
        noise: 1e-6,
        pivot: 1e-9,
        singular: 1e-12,
    }
}

fn exact_tol() -> Tol<Real> {
    Tol {
        feas: Real::from_f64(1e-32),
        opt: Real::from_f64(1e-32),
        noise: Real::from_f64(1e-12),
        pivot: Real::from_f64(1e-28),
        singular: Real::from_f64(1e-40),
    }
}

fn phase_one_cost<T: Scalar>(n_total: usize, n_struct: usize) -> Vec<T> {
    (0..n_total)
        .map(|j| if j >= n_struct { T::ONE } else { T::ZERO })
        .collect()
}

/// Floating-point search. Returns a basis to hand to the exact phase.
fn float_phase(p: &Prepared, opts: &SimplexOptions, max_iter: usize) -> std::result::Result<(Vec<usize>, usize), Stop> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let rhs: Vec<f64> = p
        .rhs
        .iter()
        .map(|r| {
            let v = r.to_f64();
            v + 1e-7 * (1.0 + v.abs()) * rng.random_range(0.5..1.0)
        })
        .collect();
    let cols: Vec<Vec<(usize, f64)>> = p
        .cols
        .iter()
        .map(|c| c.iter().map(|&(i, v)| (i, v.to_f64())).collect())
        .collect();
    let cost: Vec<f64> = (0..p.cols.len())
        .map(|j| if j < p.n_struct { p.cost[j].to_f64() } else { 0.0 })
        .collect();
    let tol = float_tol();
    let mut e = Engine::new(p.m, cols, p.n_struct, rhs, p.crash.clone());
    if !e.refactor(tol.singular) {
        return Err(Stop::Singular);
    }
    let n_struct = p.n_struct;
    if p.cols.len() > n_struct {
        let c1 = phase_one_cost::<f64>(p.cols.len(), n_struct);
        e.primal(&c1, &|_| true, tol, max_iter, opts.refactor_every, false)?;
        if e.objective(&c1) > 1e-6 {
            return Err(Failure::Infeasible.into());
        }
        e.drive_out_artificials(1e-7);
    }
    e.primal(&cost, &|j| j < n_struct, tol, max_iter, opts.refactor_every, false)?;
    Ok((e.basis, e.iterations))
}

fn exact_phase(
    p: &Prepared,
    start: Option<Vec<usize>>,
    max_iter: usize,
) -> std::result::Result<Engine<Real>, Failure> {
    let tol = exact_tol();
    let cost: Vec<Real> = (0..p.cols.len())
        .map(|j| if j < p.n_struct { p.cost[j] } else { Real::ZERO })
        .collect();
    let n_struct = p.n_struct;
    let structural = |j: usize| j < n_struct;

    if let Some(basis) = start {
        let mut e = Engine::new(p.m, p.cols.clone(), p.n_struct, p.rhs.clone(), basis);
        let artificial_live = |e: &Engine<Real>| {
            e.basis
                .iter()
                .zip(&e.xb)
                .any(|(&j, x)| j >= n_struct && x.abs() > tol.feas)
        };
        if e.refactor(tol.singular) && !artificial_live(&e) {
            let y = e.duals(&cost);
            let mut shifted = cost.clone();
            for j in 0..shifted.len() {
                if e.position[j].is_none() && structural(j) {
                    let d = e.reduced(&cost, &y, j);
                    if d.is_negative() {
                        shifted[j] = shifted[j] - d;
                    }
                }
            }
            let warm = match e.dual(&shifted, &structural, tol, max_iter) {
                Ok(()) => e.primal(&cost, &structural, tol, max_iter, usize::MAX, true),
                Err(s) => Err(s),
            };
            match warm {
                Ok(()) if !artificial_live(&e) => return Ok(e),
                // a warm start can stall on a spurious ray; the crash basis
                // below re-derives everything from scratch
                _ => {}
            }
        }
    }

    let mut e = Engine::new(p.m, p.cols.clone(), p.n_struct, p.rhs.clone(), p.crash.clone());
    if !e.refactor(tol.singular) {
        return Err(Failure::NoConvergence { iterations: 0 });
    }
    let unwrap = |s: Stop| match s {
        Stop::Fail(f) => f,
        Stop::Singular => Failure::NoConvergence { iterations: 0 },
    };
    if p.cols.len() > n_struct {
        let c1 = phase_one_cost::<Real>(p.cols.len(), n_struct);
        e.primal(&c1, &|_| true, tol, max_iter, usize::MAX, true)
            .map_err(unwrap)?;
        if e.objective(&c1) > tol.feas {
            return Err(Failure::Infeasible);
        }
        e.drive_out_artificials(tol.pivot);
    }
    e.primal(&cost, &structural, tol, max_iter, usize::MAX, true)
        .map_err(unwrap)?;
    Ok(e)
}

/// Solve a standard-form problem.
pub fn solve_standard(
    form: &StandardForm,
    opts: &SimplexOptions,
) -> std::result::Result<StandardSolution, Failure> {
    solve_standard_scaled(form, opts, None)
}

/// As [`solve_standard`], with `row_hint[i]` the expected base-2 magnitude
/// of dual variable `i`. Rows are scaled by the hint instead of being
/// equilibrated, which keeps bases well conditioned when the solution
/// spans hundreds of orders of magnitude.
pub fn solve_standard_scaled(
    form: &StandardForm,
    opts: &SimplexOptions,
    row_hint: Option<&[i64]>,
) -> std::result::Result<StandardSolution, Failure> {
    assert_eq!(form.cost.len(), form.cols.len());
    assert_eq!(form.rhs.len(), form.rows);
    if let Some(h) = row_hint {
        assert_eq!(h.len(), form.rows);
    }
    let p = prepare(form, row_hint);
    let max_iter = opts.iteration_factor * (p.m + p.cols.len()) + 1000;
    let mut stats = SolveStats::default();
    let start = match float_phase(&p, opts, max_iter) {
        Ok((basis, iters)) => {
            stats.float_iterations = iters;
            Some(basis)
        }
        Err(Stop::Fail(Failure::Infeasible)) => None,
        Err(_) => {
            stats.float_phase_failed = true;
            None
        }
    };
    let e = exact_phase(&p, start, max_iter)?;
    stats.exact_iterations = e.iterations;

    let mut z = vec![Real::ZERO; p.n_struct];
    for (r, &j) in e.basis.iter().enumerate() {
        if j < p.n_struct {
            z[j] = e.xb[r].scale_pow2(p.col_exp[j]);
        }
    }
    let cost: Vec<Real> = (0..p.cols.len())
        .map(|j| if j < p.n_struct { p.cost[j] } else { Real::ZERO })
        .collect();
    let y: Vec<Real> = e
        .duals(&cost)
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let v = v.scale_pow2(p.row_exp[i]);
            if p.row_sign[i] {
                -v
            } else {
                v
            }
        })
        .collect();
    let objective = z.iter().zip(&form.cost).map(|(&a, &b)| a * b).sum();
    Ok(StandardSolution {
        z,
        y,
        objective,
        stats,
    })
}

/// Solution of an inequality-form problem.
#[derive(Debug, Clone)]
pub struct Minimizer {
    pub x: Vec<Real>,
    pub objective: Real,
    pub stats: SolveStats,
}

/// Minimize `cᵀx` subject to `A_ub x ≤ b_ub`, `A_eq x = b_eq`, `x ≥ 0`.
///
/// Rows are sparse `(column, value)` lists over `n` variables. The problem
/// is solved through its dual, whose basis has only `n` rows however many
/// inequalities there are.
pub fn minimize(
    n: usize,
    c: &[Real],
    a_ub: &[Vec<(usize, Real)>],
    b_ub: &[Real],
    a_eq: &[Vec<(usize, Real)>],
    b_eq: &[Real],
    opts: &SimplexOptions,
) -> Result<Minimizer> {
    minimize_scaled(n, c, a_ub, b_ub, a_eq, b_eq, opts, None)
}

/// As [`minimize`], with `magnitude[j]` a rough guess of `x_j` (any
/// positive value; only its binary exponent is used).
#[allow(clippy::too_many_arguments)]
pub fn minimize_scaled(
    n: usize,
    c: &[Real],
    a_ub: &[Vec<(usize, Real)>],
    b_ub: &[Real],
    a_eq: &[Vec<(usize, Real)>],
    b_eq: &[Real],
    opts: &SimplexOptions,
    magnitude: Option<&[Real]>,
) -> Result<Minimizer> {
    assert_eq!(c.len(), n);
    assert_eq!(a_ub.len(), b_ub.len());
    assert_eq!(a_eq.len(), b_eq.len());
    let mut cols = Vec::with_capacity(a_ub.len() + 2 * a_eq.len() + n);
    let mut cost = Vec::with_capacity(cols.capacity());
    for (row, &b) in a_ub.iter().zip(b_ub) {
        cols.push(row.iter().map(|&(j, v)| (j, -v)).collect());
        cost.push(b);
    }
    for (row, &b) in a_eq.iter().zip(b_eq) {
        cols.push(row.clone());
        cost.push(-b);
        cols.push(row.iter().map(|&(j, v)| (j, -v)).collect());
        cost.push(b);
    }
    for j in 0..n {
        cols.push(vec![(j, Real::ONE)]);
        cost.push(Real::ZERO);
    }
    let form = StandardForm {
        rows: n,
        cols,
        cost,
        rhs: c.to_vec(),
    };
    let hint: Option<Vec<i64>> = magnitude.map(|m| {
        assert_eq!(m.len(), n);
        m.iter().map(|v| v.log2_floor().unwrap_or(0)).collect()
    });
    match solve_standard_scaled(&form, opts, hint.as_deref()) {
        Ok(sol) => {
            let x: Vec<Real> = sol.y.iter().map(|&v| -v).collect();
            let objective = x.iter().zip(c).map(|(&a, &b)| a * b).sum();
            Ok(Minimizer {
                x,
                objective,
                stats: sol.stats,
            })
        }
        Err(Failure::Unbounded { ray }) => {
            let n_ub = a_ub.len();
            let n_eq = a_eq.len();
            let violated = ray
                .into_iter()
                .filter_map(|col| {
                    if col < n_ub {
                        Some(format!("inequality {col}"))
                    } else if col < n_ub + 2 * n_eq {
                        Some(format!("equality {}", (col - n_ub) / 2))
                    } else if col < n_ub + 2 * n_eq + n {
                        Some(format!("x{} >= 0", col - n_ub - 2 * n_eq))
                    } else {
                        None
                    }
                })
                .collect::<Vec<_>>();
            let mut violated = violated;
            violated.dedup();
            Err(Error::Infeasible { violated })
        }
        Err(Failure::Infeasible) => Err(Error::Unbounded),
        Err(Failure::NoConvergence { iterations }) => Err(Error::NoConvergence { iterations }),
    }
}
