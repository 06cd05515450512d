//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs without the libtest harness so the lines always show.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use multirr::bench::{chisq_experiment, median, trial_rng, ChisqConfig};
use multirr::closed_form::{optimal_two, Case};
use multirr::heuristic::heuristic_build_with;
use multirr::lp::solve_optimal;
use multirr::mechanism::{
    audit_attribute, audit_total, build_mechanism, encode, materialize, Sampler,
};
use multirr::{AttributeSchema, DistortionSpec, Method, PrivacyBudget, Real};
use rand::Rng;

/// Overall level the χ² experiment calibrates every method to.
const CHISQ_EPS_TOTAL: f64 = 15.0;
const CHISQ_SEED: u64 = 2024;
const DOMINANCE_SEED: u64 = 3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn schema(a: &[u32]) -> AttributeSchema {
    AttributeSchema::new(a.to_vec()).unwrap()
}

fn budget(e: &[f64]) -> PrivacyBudget {
    PrivacyBudget::new(e.to_vec()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn closed_form_matches_lp() -> Outcome {
    let start = Instant::now();
    // the small-budget cases are about 1% of uniform draws each, so keep
    // drawing from the same distribution until every case has 50 instances
    let mut rng = trial_rng(1, 0);
    let mut per_case: HashMap<Case, usize> = HashMap::new();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut drawn = 0;
    while per_case.values().sum::<usize>() < 200 && drawn < 1_000_000 {
        drawn += 1;
        let m = rng.random_range(2..=6);
        let n = rng.random_range(2..=6);
        let e1 = rng.random_range(0.2..8.0);
        let e2 = rng.random_range(0.2..8.0);
        let closed = optimal_two(m, n, e1, e2).unwrap();
        let slot = per_case.entry(closed.case).or_default();
        if *slot == 50 {
            continue;
        }
        *slot += 1;
        match solve_optimal(&schema(&[m, n]), &budget(&[e1, e2])) {
            Ok(spec) => worst = worst.max(Real::rel_diff(closed.x20, spec.x0())),
            Err(e) => failures.push(format!("({m},{n},{e1},{e2}): {e}")),
        }
    }
    let cases = per_case;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && failures.is_empty() && cases.values().all(|&c| c == 50) && cases.len() == 4 && secs <= 60.0,
        format!(
            "max relative x20 gap {worst:.2e}, 50 instances in each of {} cases, {} LP failures, {secs:.1} s",
            cases.len(),
            failures.len()
        ),
    )
}

fn binary_pair_identity() -> Outcome {
    let mut worst = 0.0f64;
    for e in [0.5, 1.0, 2.0, 5.0] {
        let want = Real::from_f64(2.0) * Real::exp(e) - Real::ONE;
        let closed = optimal_two(2, 2, e, e).unwrap().x20;
        let lp = solve_optimal(&schema(&[2, 2]), &budget(&[e, e])).unwrap().x0();
        worst = worst.max(Real::rel_diff(closed, want)).max(Real::rel_diff(lp, want));
    }
    outcome(worst <= 1e-12, format!("max relative error {worst:.2e}"))
}

fn dominance_ordering() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for k in [3usize, 5, 7] {
        let mut rng = trial_rng(DOMINANCE_SEED, k as u64);
        let s = AttributeSchema::uniform(k, 5).unwrap();
        let (mut opt_above_heur, mut heur_above_sum, mut errors) = (0, 0, 0);
        let mut ratios = Vec::new();
        for _ in 0..50 {
            let eps: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..8.0)).collect();
            let sum: f64 = eps.iter().sum();
            let b = budget(&eps);
            let heur = build_mechanism(&s, &b, Method::Heuristic).unwrap().0.eps_total();
            let opt = match solve_optimal(&s, &b) {
                Ok(spec) => spec.eps_total(),
                Err(_) => {
                    errors += 1;
                    continue;
                }
            };
            opt_above_heur += (opt > heur + 1e-9) as usize;
            heur_above_sum += (heur > sum + 1e-9) as usize;
            ratios.push(opt / sum);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
        pass &= opt_above_heur == 0 && heur_above_sum == 0 && errors == 0 && mean < 0.9;
        notes.push(format!(
            "k={k}: opt>heur {opt_above_heur}, heur>sum {heur_above_sum}, LP errors {errors}, mean opt ratio {mean:.3}"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 600.0;
    outcome(pass, format!("{}; {secs:.1} s", notes.join("; ")))
}

fn near_optimal_at_high_budget() -> Outcome {
    let s = schema(&[5, 5, 5]);
    let b = budget(&[8.0, 8.0, 8.0]);
    let heur = build_mechanism(&s, &b, Method::Heuristic).unwrap().0.eps_total();
    let opt = solve_optimal(&s, &b).unwrap().eps_total();
    let ratio = heur / opt;
    outcome(ratio <= 1.01, format!("heuristic/optimal = {ratio:.6}"))
}

/// Fixtures with at most 1024 records, levels drawn from a fixed stream.
fn small_fixtures() -> Vec<(AttributeSchema, PrivacyBudget)> {
    let shapes: [&[u32]; 9] = [
        &[2, 2],
        &[3, 5],
        &[2, 2, 2],
        &[3, 2, 4],
        &[5, 5, 5],
        &[2, 3, 2, 3],
        &[4, 4, 4, 4],
        &[2, 2, 2, 2, 2, 2],
        &[2; 10],
    ];
    let mut rng = trial_rng(5, 0);
    shapes
        .iter()
        .map(|a| {
            let eps: Vec<f64> = a.iter().map(|_| rng.random_range(0.5..4.0)).collect();
            (schema(a), budget(&eps))
        })
        .collect()
}

fn fixture_specs() -> Vec<DistortionSpec> {
    let mut specs = Vec::new();
    for (s, b) in small_fixtures() {
        for m in Method::ALL {
            specs.push(build_mechanism(&s, &b, m).unwrap().0);
        }
    }
    specs
}

fn audit_round_trips(specs: &[DistortionSpec]) -> Outcome {
    let (mut lp_kron, mut heur, mut paths) = (0.0f64, 0.0f64, 0.0f64);
    for spec in specs {
        let m = materialize(spec).unwrap();
        for i in 0..spec.k() {
            let a = audit_attribute(spec, i).unwrap();
            match spec.method() {
                Method::Heuristic => heur = heur.max((a - spec.achieved_eps().get(i)).abs()),
                _ => lp_kron = lp_kron.max(rel(a, spec.requested_eps().get(i))),
            }
            paths = paths.max((a - m.audit_attribute(i).unwrap()).abs());
        }
        paths = paths.max((audit_total(spec) - m.audit_total()).abs());
    }
    outcome(
        lp_kron <= 1e-6 && heur <= 1e-9 && paths <= 1e-9,
        format!(
            "{} specs: LP/Kronecker rel {lp_kron:.2e}, heuristic abs {heur:.2e}, spec vs matrix {paths:.2e}",
            specs.len()
        ),
    )
}

fn matrix_validity(specs: &[DistortionSpec]) -> Outcome {
    let (mut col, mut min_entry, mut leak) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for spec in specs {
        let m = materialize(spec).unwrap();
        for s in m.column_sums() {
            col = col.max((s.to_f64() - 1.0).abs());
        }
        for u in 0..m.dim() {
            for v in 0..m.dim() {
                min_entry = min_entry.min(m.entry(u, v).to_f64());
            }
        }
        leak = leak.max(m.audit_total() - spec.eps_total());
    }
    outcome(
        col <= 1e-12 && min_entry > 0.0 && leak <= 1e-9,
        format!("max column error {col:.2e}, min entry {min_entry:.2e}, max matrix total - recorded {leak:.2e}"),
    )
}

fn sampler_fidelity() -> Outcome {
    let sizes = [2u32, 2, 2];
    let (spec, _) = build_mechanism(&schema(&sizes), &budget(&[1.0, 2.0, 1.5]), Method::Heuristic).unwrap();
    let m = materialize(&spec).unwrap();
    let sampler = Sampler::new(&spec).unwrap();
    let draws = 1_000_000;
    let mut worst = 0.0f64;
    for (i, input) in [[0u32, 0, 0], [1, 0, 1], [1, 1, 0]].iter().enumerate() {
        let mut rng = trial_rng(7, i as u64);
        let mut counts = [0usize; 8];
        for _ in 0..draws {
            let out = sampler.perturb(input, &mut rng).unwrap();
            counts[encode(&out, &sizes).unwrap() as usize] += 1;
        }
        let v = encode(input, &sizes).unwrap() as usize;
        let tvd: f64 = (0..8)
            .map(|u| (counts[u] as f64 / draws as f64 - m.entry(u, v).to_f64()).abs())
            .sum::<f64>()
            / 2.0;
        worst = worst.max(tvd);
    }
    outcome(worst <= 0.005, format!("max TVD {worst:.5} over 3 inputs at 1e6 draws"))
}

fn chisq_utility() -> Outcome {
    let cfg = ChisqConfig::new(10, 1000, CHISQ_EPS_TOTAL, 10, CHISQ_SEED);
    let res = chisq_experiment(&cfg).unwrap();
    let ratios = res.run_ratios(Method::Heuristic, Method::Kronecker).unwrap();
    let med = median(&ratios);
    let h = res.method(Method::Heuristic).unwrap();
    let k = res.method(Method::Kronecker).unwrap();
    outcome(
        med < 0.7,
        format!(
            "eps_total {CHISQ_EPS_TOTAL}, mean |dchi2| heuristic {:.3} vs Kronecker {:.3}, median run ratio {med:.3}",
            h.mean_error, k.mean_error
        ),
    )
}

fn runtime_envelope() -> Outcome {
    let k = 1000;
    let mut rng = trial_rng(9, 0);
    let sizes: Vec<u32> = (0..k).map(|_| rng.random_range(2..=5)).collect();
    let eps: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..10.0)).collect();
    let start = Instant::now();
    heuristic_build_with(&schema(&sizes), &budget(&eps), None).unwrap();
    let heur = start.elapsed();

    let sizes: Vec<u32> = (0..10).map(|_| rng.random_range(2..=5)).collect();
    let eps: Vec<f64> = (0..10).map(|_| rng.random_range(1.0..10.0)).collect();
    let start = Instant::now();
    let lp_ok = solve_optimal(&schema(&sizes), &budget(&eps)).is_ok();
    let lp = start.elapsed();

    let mut per_k2 = Vec::new();
    for k in [10usize, 100, 1000] {
        let out = heuristic_build_with(
            &AttributeSchema::uniform(k, 4).unwrap(),
            &PrivacyBudget::uniform(k, 3.0).unwrap(),
            None,
        )
        .unwrap();
        per_k2.push(out.op_count as f64 / (k * k) as f64);
    }
    let c = per_k2.iter().copied().fold(0.0, f64::max);
    outcome(
        heur <= Duration::from_secs(10) && lp_ok && lp <= Duration::from_secs(300) && c <= 40.0,
        format!(
            "heuristic k=1000 {:.3} s, LP k=10 {:.2} s (solved: {lp_ok}), ops/k^2 {per_k2:.2?}",
            heur.as_secs_f64(),
            lp.as_secs_f64()
        ),
    )
}

fn fallback_correctness() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    // input order starves the third attribute; the default order raises
    // the smaller of two late levels
    let cases: [(&[f64], Option<&[usize]>); 2] = [
        (&[0.01, 1.0, 0.01], Some(&[0, 1, 2])),
        (&[2.642012227194221, 1.1442550917697156, 1.1374585279241445], None),
    ];
    for (eps, order) in cases {
        let s = schema(&[5, 5, 5]);
        let out = heuristic_build_with(&s, &budget(eps), order).unwrap();
        let x = out.spec.values();
        let chain = x[1..].iter().all(|v| *v <= x[0] && *v >= Real::ONE);
        let mut gap = 0.0f64;
        let mut moved = false;
        for i in 0..3 {
            let got = audit_attribute(&out.spec, i).unwrap();
            let achieved = out.spec.achieved_eps().get(i);
            gap = gap.max((got - achieved).abs());
            moved |= out.fallbacks.contains(&i) && (got - eps[i]).abs() > 1e-3;
        }
        let fired = !out.fallbacks.is_empty();
        pass &= fired && chain && moved && gap <= 1e-9;
        notes.push(format!(
            "fallbacks {:?}, chain {chain}, audit vs recomputed {gap:.1e}",
            out.fallbacks
        ));
    }
    outcome(pass, notes.join("; "))
}

fn main() {
    let specs = fixture_specs();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("closed form matches LP", Box::new(closed_form_matches_lp)),
        ("binary pair x0 = 2e^eps - 1", Box::new(binary_pair_identity)),
        ("dominance ordering", Box::new(dominance_ordering)),
        ("near-optimal at high budget", Box::new(near_optimal_at_high_budget)),
        ("audit round trips", Box::new(|| audit_round_trips(&specs))),
        ("matrix validity", Box::new(|| matrix_validity(&specs))),
        ("sampler fidelity", Box::new(sampler_fidelity)),
        ("chi-square utility", Box::new(chisq_utility)),
        ("run-time envelope", Box::new(runtime_envelope)),
        ("fallback correctness", Box::new(fallback_correctness)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += !o.pass as usize;
        println!(
            "criterion {:>2} {}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
