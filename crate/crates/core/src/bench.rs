//! Experiment drivers: privacy-ratio sweeps, the χ² utility experiment on
//! synthetic SNP tables, and build-time measurements.

use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use web_time::Instant;

use crate::calibration::{calibrate_with, CalibrationOptions};
use crate::error::{Error, Result};
use crate::mechanism::{build_mechanism_with, perturb_all, BuildOptions, Sampler};
use crate::types::{AttributeSchema, Method, PrivacyBudget};

/// Widest schema for which sweeps and the runtime bench include the LP.
pub const LP_BENCH_MAX_K: usize = 10;

/// Random stream `index` of the root `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn map_trials<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Format with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub trial: usize,
    pub k: usize,
    pub sizes: Vec<u32>,
    pub requested: Vec<f64>,
    pub method: Method,
    /// `ln x_0` of the built spec; NaN when the build failed.
    pub eps_total: f64,
    /// `eps_total / Σ ε_i` over the requested levels.
    pub ratio: f64,
    /// `eps_total` over the optimum's, when the LP ran.
    pub ratio_to_optimal: Option<f64>,
    pub build_secs: f64,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn sum_eps(&self) -> f64 {
        self.requested.iter().sum()
    }

    pub fn sum_a(&self) -> u64 {
        self.sizes.iter().map(|&a| a as u64).sum()
    }
}

fn run_trial(trial: usize, sizes: Vec<u32>, eps: Vec<f64>, lp_max_k: usize, lp: &BuildOptions) -> Vec<SweepRow> {
    let k = sizes.len();
    let schema = AttributeSchema::new(sizes.clone()).expect("sweep sizes are >= 2");
    let budget = PrivacyBudget::new(eps.clone()).expect("sweep levels are positive");
    let sum: f64 = eps.iter().sum();
    let methods: Vec<Method> = if k <= lp_max_k {
        Method::ALL.to_vec()
    } else {
        vec![Method::Heuristic, Method::Kronecker]
    };
    let mut rows: Vec<SweepRow> = methods
        .into_iter()
        .map(|method| {
            let start = Instant::now();
            let built = build_mechanism_with(&schema, &budget, method, lp);
            let build_secs = start.elapsed().as_secs_f64();
            let (eps_total, error) = match built {
                Ok((spec, _)) => (spec.eps_total(), None),
                Err(e) => (f64::NAN, Some(e.to_string())),
            };
            SweepRow {
                trial,
                k,
                sizes: sizes.clone(),
                requested: eps.clone(),
                method,
                eps_total,
                ratio: eps_total / sum,
                ratio_to_optimal: None,
                build_secs,
                error,
            }
        })
        .collect();
    let opt = rows
        .iter()
        .find(|r| r.method == Method::OptimalLp && r.error.is_none())
        .map(|r| r.eps_total);
    if let Some(opt) = opt {
        for r in rows.iter_mut().filter(|r| r.error.is_none()) {
            r.ratio_to_optimal = Some(r.eps_total / opt);
        }
    }
    rows
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// The LP runs only for `k` up to this.
    pub lp_max_k: usize,
    pub build: BuildOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            lp_max_k: LP_BENCH_MAX_K,
            build: BuildOptions::default(),
        }
    }
}

/// Fixed domain size `a`, levels uniform on `[eps_lo, eps_hi)`.
/// Rows come back sorted by `Σ ε_i`, trial order breaking ties.
pub fn sweep_eps(
    k: usize,
    a: u32,
    eps_range: (f64, f64),
    trials: usize,
    seed: u64,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    AttributeSchema::uniform(k, a)?;
    check_range(eps_range)?;
    let per_trial = map_trials(trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let eps = (0..k).map(|_| rng.random_range(eps_range.0..eps_range.1)).collect();
        run_trial(t, vec![a; k], eps, opts.lp_max_k, &opts.build)
    });
    Ok(sorted(per_trial, |r| r.sum_eps()))
}

/// Fixed level `eps`, domain sizes uniform on `a_range` (inclusive).
/// Rows come back sorted by `Σ a_i`.
pub fn sweep_a(
    k: usize,
    eps: f64,
    a_range: (u32, u32),
    trials: usize,
    seed: u64,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    PrivacyBudget::uniform(k, eps)?.require_positive()?;
    AttributeSchema::new(vec![a_range.0, a_range.1])?;
    if a_range.0 > a_range.1 {
        return Err(Error::InvalidSpec(format!("empty range {}..={}", a_range.0, a_range.1)));
    }
    let per_trial = map_trials(trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let sizes = (0..k).map(|_| rng.random_range(a_range.0..=a_range.1)).collect();
        run_trial(t, sizes, vec![eps; k], opts.lp_max_k, &opts.build)
    });
    Ok(sorted(per_trial, |r| r.sum_a() as f64))
}

fn check_range((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::InvalidEpsilon { index: 0, value: lo });
    }
    Ok(())
}

fn sorted(per_trial: Vec<Vec<SweepRow>>, key: impl Fn(&SweepRow) -> f64) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by(|x, y| key(x).total_cmp(&key(y)).then(x.trial.cmp(&y.trial)));
    rows
}

/// `x_axis` names the second column: `sum_eps` or `sum_a`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], x_axis: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trial",
        x_axis,
        "method",
        "ratio",
        "eps_total",
        "ratio_to_optimal",
        "build_secs",
        "k",
        "sizes",
        "requested_eps",
        "error",
    ])?;
    for r in rows {
        let x = if x_axis == "sum_a" {
            r.sum_a().to_string()
        } else {
            sig12(r.sum_eps())
        };
        let join = |v: Vec<String>| v.join(";");
        w.write_record([
            r.trial.to_string(),
            x,
            r.method.to_string(),
            sig12(r.ratio),
            sig12(r.eps_total),
            r.ratio_to_optimal.map(sig12).unwrap_or_default(),
            sig12(r.build_secs),
            r.k.to_string(),
            join(r.sizes.iter().map(|a| a.to_string()).collect()),
            join(r.requested.iter().map(|&e| sig12(e)).collect()),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Allele counts of one SNP, `A + B + C + D = 2N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    /// Counts of category codes 0..3 in one column of records.
    pub fn from_codes(codes: impl IntoIterator<Item = u32>) -> ContingencyTable {
        let mut n = [0u64; 4];
        for c in codes {
            n[c as usize] += 1;
        }
        ContingencyTable {
            a: n[0],
            b: n[1],
            c: n[2],
            d: n[3],
        }
    }

    /// `A` copies of 0, `B` of 1, `C` of 2, `D` of 3.
    pub fn codes(&self) -> Vec<u32> {
        [(0, self.a), (1, self.b), (2, self.c), (3, self.d)]
            .into_iter()
            .flat_map(|(v, n)| std::iter::repeat_n(v, n as usize))
            .collect()
    }
}

pub fn draw_snp_table<R: Rng + ?Sized>(n: u64, rng: &mut R) -> ContingencyTable {
    let total = 2 * n;
    let draw = |trials: u64, p: f64, rng: &mut R| Binomial::new(trials, p).expect("valid p").sample(rng);
    let a = draw(total, 1.0 / 3.0, rng);
    let b = draw(total - a, 1.0 / 3.0, rng);
    let c = draw(total - a - b, 2.0 / 5.0, rng);
    ContingencyTable {
        a,
        b,
        c,
        d: total - a - b - c,
    }
}

pub fn gen_snp_tables(k: usize, n: u64, seed: u64) -> Result<Vec<ContingencyTable>> {
    if n == 0 {
        return Err(Error::InvalidSpec("N must be at least 1".into()));
    }
    let mut rng = trial_rng(seed, 0);
    Ok((0..k).map(|_| draw_snp_table(n, &mut rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub value: f64,
    /// Some marginal was zero; `value` is then 0.
    pub degenerate: bool,
}

/// `2N(AD - BC)^2 / ((A+B)(C+D)(A+C)(B+D))`, summed exactly in integers.
pub fn chi_square(t: &ContingencyTable) -> ChiSquare {
    let big = |v: u64| BigInt::from(v);
    let (a, b, c, d) = (big(t.a), big(t.b), big(t.c), big(t.d));
    let den = (&a + &b) * (&c + &d) * (&a + &c) * (&b + &d);
    if den.is_zero() {
        return ChiSquare {
            value: 0.0,
            degenerate: true,
        };
    }
    let cross = &a * &d - &b * &c;
    let num = big(t.total()) * &cross * &cross;
    let (q, r) = num.div_rem(&den);
    // the remainder is below den, so its ratio only needs the leading bits
    let shift = den.bits().saturating_sub(60);
    let frac = (r >> shift).to_f64().unwrap_or(0.0) / (den >> shift).to_f64().unwrap_or(1.0);
    ChiSquare {
        value: q.to_f64().unwrap_or(f64::INFINITY) + frac,
        degenerate: false,
    }
}

#[derive(Debug, Clone)]
pub struct ChisqConfig {
    pub k: usize,
    pub n: u64,
    pub eps_total: f64,
    pub weights: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl ChisqConfig {
    pub fn new(k: usize, n: u64, eps_total: f64, runs: usize, seed: u64) -> ChisqConfig {
        ChisqConfig {
            k,
            n,
            eps_total,
            weights: vec![1.0; k],
            runs,
            seed,
            methods: vec![Method::Heuristic, Method::Kronecker],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodChisq {
    pub method: Method,
    /// Per-attribute levels found by calibration.
    pub budget: Vec<f64>,
    pub achieved_total: f64,
    /// Mean `|Δχ²|` over every (run, SNP) pair.
    pub mean_error: f64,
    pub run_means: Vec<f64>,
    /// `errors[run][snp]`.
    pub errors: Vec<Vec<f64>>,
    /// Perturbed tables with a zero marginal, over all runs.
    pub degenerate: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChisqResult {
    pub k: usize,
    pub n: u64,
    pub eps_total: f64,
    pub runs: usize,
    pub seed: u64,
    pub methods: Vec<MethodChisq>,
}

impl ChisqResult {
    pub fn method(&self, m: Method) -> Option<&MethodChisq> {
        self.methods.iter().find(|r| r.method == m)
    }

    /// Per-run ratio of `a`'s mean error to `b`'s.
    pub fn run_ratios(&self, a: Method, b: Method) -> Option<Vec<f64>> {
        let (x, y) = (self.method(a)?, self.method(b)?);
        Some(x.run_means.iter().zip(&y.run_means).map(|(p, q)| p / q).collect())
    }
}

/// `2N` records of `k` attributes: column `i` is a seeded shuffle of SNP
/// `i`'s category multiset, so rebuilding the tables gives them back exactly.
pub fn expand_records<R: Rng + ?Sized>(tables: &[ContingencyTable], rng: &mut R) -> Vec<Vec<u32>> {
    let rows = tables.first().map_or(0, |t| t.total() as usize);
    let mut records = vec![Vec::with_capacity(tables.len()); rows];
    for t in tables {
        let mut col = t.codes();
        col.shuffle(rng);
        for (r, v) in records.iter_mut().zip(col) {
            r.push(v);
        }
    }
    records
}

pub fn tables_of(records: &[Vec<u32>], k: usize) -> Vec<ContingencyTable> {
    (0..k)
        .map(|i| ContingencyTable::from_codes(records.iter().map(|r| r[i])))
        .collect()
}

/// Run the χ² experiment: every attribute has 4 categories, budgets come
/// from calibrating each method to `eps_total`, and the error is
/// `|χ²(original) - χ²(perturbed)|` per SNP.
pub fn chisq_experiment(cfg: &ChisqConfig) -> Result<ChisqResult> {
    let schema = AttributeSchema::uniform(cfg.k, 4)?;
    let calib = cfg
        .methods
        .iter()
        .map(|&m| {
            let c = calibrate_with(&schema, &cfg.weights, cfg.eps_total, m, &CalibrationOptions::default())?;
            Ok((m, Sampler::new(&c.spec)?, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<Result<Vec<(Vec<f64>, usize)>>> = map_trials(cfg.runs, |run| {
        let mut rng = trial_rng(cfg.seed, run as u64);
        let tables: Vec<ContingencyTable> = (0..cfg.k).map(|_| draw_snp_table(cfg.n, &mut rng)).collect();
        let records = expand_records(&tables, &mut rng);
        let truth: Vec<f64> = tables.iter().map(|t| chi_square(t).value).collect();
        calib
            .iter()
            .enumerate()
            .map(|(mi, (_, sampler, _))| {
                let stream = rng.random::<u64>() ^ mi as u64;
                let noisy = perturb_all(&records, sampler, stream)?;
                let mut degenerate = 0;
                let errs = tables_of(&noisy, cfg.k)
                    .iter()
                    .zip(&truth)
                    .map(|(t, &x)| {
                        let s = chi_square(t);
                        degenerate += s.degenerate as usize;
                        (x - s.value).abs()
                    })
                    .collect();
                Ok((errs, degenerate))
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let methods = calib
        .iter()
        .enumerate()
        .map(|(mi, (m, _, c))| {
            let errors: Vec<Vec<f64>> = runs.iter().map(|r| r[mi].0.clone()).collect();
            let run_means = errors.iter().map(|e| mean(e)).collect();
            let pooled: Vec<f64> = errors.iter().flatten().copied().collect();
            MethodChisq {
                method: *m,
                budget: c.budget.values().to_vec(),
                achieved_total: c.eps_total,
                mean_error: mean(&pooled),
                run_means,
                errors,
                degenerate: runs.iter().map(|r| r[mi].1).sum(),
            }
        })
        .collect();
    Ok(ChisqResult {
        k: cfg.k,
        n: cfg.n,
        eps_total: cfg.eps_total,
        runs: cfg.runs,
        seed: cfg.seed,
        methods,
    })
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(f64::total_cmp);
    match s.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => s[n / 2],
        n => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    }
}

/// One row per (method, run, SNP), then one `mean` row per method.
pub fn write_chisq_csv<W: Write>(res: &ChisqResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "run", "snp", "abs_error"])?;
    for m in &res.methods {
        for (run, errs) in m.errors.iter().enumerate() {
            for (snp, e) in errs.iter().enumerate() {
                w.write_record([m.method.to_string(), run.to_string(), snp.to_string(), sig12(*e)])?;
            }
        }
    }
    for m in &res.methods {
        w.write_record([m.method.to_string(), "mean".into(), "all".into(), sig12(m.mean_error)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RuntimeRow {
    pub method: Method,
    pub k: usize,
    pub trials: usize,
    pub failures: usize,
    pub median_secs: f64,
    pub max_secs: f64,
}

/// Median build time per (method, k) over inputs with `a_i ∈ {2..5}` and
/// `ε_i ∈ [1, 10)`. Runs sequentially so timings do not contend. The LP
/// is skipped above `lp_max_k`.
pub fn runtime_bench(k_list: &[usize], trials: usize, seed: u64, methods: &[Method], lp_max_k: usize) -> Result<Vec<RuntimeRow>> {
    let mut rows = Vec::new();
    for (ki, &k) in k_list.iter().enumerate() {
        if k == 0 {
            return Err(Error::EmptySchema);
        }
        let inputs: Vec<(AttributeSchema, PrivacyBudget)> = (0..trials)
            .map(|t| {
                let mut rng = trial_rng(seed, ((ki as u64) << 32) | t as u64);
                let a = (0..k).map(|_| rng.random_range(2..=5)).collect();
                let e = (0..k).map(|_| rng.random_range(1.0..10.0)).collect();
                Ok((AttributeSchema::new(a)?, PrivacyBudget::new(e)?))
            })
            .collect::<Result<_>>()?;
        for &method in methods {
            if method == Method::OptimalLp && k > lp_max_k {
                continue;
            }
            let mut times = Vec::new();
            let mut failures = 0;
            for (s, b) in &inputs {
                let start = Instant::now();
                let ok = build_mechanism_with(s, b, method, &BuildOptions::default()).is_ok();
                times.push(start.elapsed().as_secs_f64());
                failures += !ok as usize;
            }
            rows.push(RuntimeRow {
                method,
                k,
                trials,
                failures,
                median_secs: median(&times),
                max_secs: times.iter().copied().fold(f64::NAN, f64::max),
            });
        }
    }
    Ok(rows)
}

pub fn write_runtime_csv<W: Write>(rows: &[RuntimeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "k", "trials", "failures", "median_secs", "max_secs"])?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.k.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            sig12(r.median_secs),
            sig12(r.max_secs),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(1234.5), "1234.5");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(2.0e20), "2.00000000000e20");
        assert_eq!(sig12(-80.0), "-80");
    }

    #[test]
    fn chi_square_fixtures() {
        let t = |a, b, c, d| ContingencyTable { a, b, c, d };
        assert_eq!(chi_square(&t(500, 500, 500, 500)).value, 0.0);
        let s = chi_square(&t(600, 400, 400, 600));
        assert_eq!(s.value, 80.0);
        assert!(!s.degenerate);
        let z = chi_square(&t(0, 0, 1000, 1000));
        assert_eq!(z, ChiSquare { value: 0.0, degenerate: true });
        // non-integer result
        let s = chi_square(&t(3, 1, 1, 2));
        let want = 7.0 * 25.0 / (4.0 * 3.0 * 4.0 * 3.0);
        assert!((s.value - want).abs() < 1e-15);
    }

    #[test]
    fn snp_tables_sum_to_2n() {
        for t in gen_snp_tables(50, 1000, 4).unwrap() {
            assert_eq!(t.total(), 2000);
        }
        for t in gen_snp_tables(50, 1, 4).unwrap() {
            assert_eq!(t.total(), 2);
            assert!([t.a, t.b, t.c, t.d].iter().all(|&v| v <= 2));
        }
        assert!(gen_snp_tables(3, 0, 1).is_err());
    }

    #[test]
    fn snp_first_count_has_binomial_mean() {
        let tables = gen_snp_tables(10_000, 1000, 11).unwrap();
        let m = tables.iter().map(|t| t.a as f64).sum::<f64>() / 1e4;
        // sd of A is sqrt(2000 * 1/3 * 2/3); of the mean, that over 100
        let sd = (2000.0 * 2.0 / 9.0f64).sqrt() / 100.0;
        assert!((m - 2000.0 / 3.0).abs() < 3.0 * sd, "{m}");
    }

    #[test]
    fn expansion_preserves_tables() {
        let tables = gen_snp_tables(6, 200, 5).unwrap();
        let recs = expand_records(&tables, &mut trial_rng(1, 0));
        assert_eq!(recs.len(), 400);
        assert_eq!(tables_of(&recs, 6), tables);
    }

    #[test]
    fn empty_sweep() {
        let rows = sweep_eps(3, 5, (1.0, 8.0), 0, 1, &SweepOptions::default()).unwrap();
        assert!(rows.is_empty());
        let mut buf = Vec::new();
        write_sweep_csv(&rows, "sum_eps", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("trial,sum_eps,method,ratio"));
    }

    #[test]
    fn sweep_is_seeded_and_sorted() {
        let opts = SweepOptions::default();
        let a = sweep_eps(3, 5, (1.0, 8.0), 6, 9, &opts).unwrap();
        let b = sweep_eps(3, 5, (1.0, 8.0), 6, 9, &opts).unwrap();
        assert_eq!(a.len(), 18);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.requested, y.requested);
            assert_eq!(x.eps_total.to_bits(), y.eps_total.to_bits());
        }
        assert!(a.windows(2).all(|w| w[0].sum_eps() <= w[1].sum_eps()));
        for r in &a {
            assert!(r.error.is_none());
            if r.method == Method::Kronecker {
                assert!((r.ratio - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn binary_sweep_runs() {
        let rows = sweep_a(3, 3.0, (2, 2), 3, 2, &SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.error.is_none() && r.ratio <= 1.0 + 1e-12));
    }

    #[test]
    fn chisq_is_reproducible_and_vanishes_at_huge_budget() {
        let cfg = ChisqConfig::new(3, 200, 12.0, 2, 7);
        let a = chisq_experiment(&cfg).unwrap();
        let b = chisq_experiment(&cfg).unwrap();
        for (x, y) in a.methods.iter().zip(&b.methods) {
            assert_eq!(x.errors, y.errors);
        }
        let big = chisq_experiment(&ChisqConfig::new(3, 200, 200.0, 2, 7)).unwrap();
        for m in &big.methods {
            assert_eq!(m.mean_error, 0.0, "{}", m.method);
        }
    }

    #[test]
    fn runtime_rows() {
        let rows = runtime_bench(&[2, 3], 3, 1, &Method::ALL, LP_BENCH_MAX_K).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.failures == 0 && r.median_secs >= 0.0));
    }
}
