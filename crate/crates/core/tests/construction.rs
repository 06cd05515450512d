use multirr::baseline::{kronecker_spec, single_attribute_matrix};
use multirr::bench::trial_rng;
use multirr::heuristic::heuristic_build;
use multirr::lp::solve_optimal;
use multirr::mechanism::{audit_levels, encode, materialize};
use multirr::{AttributeSchema, PrivacyBudget, Real, SubsetIndex};
use rand::Rng;

fn schema(a: &[u32]) -> AttributeSchema {
    AttributeSchema::new(a.to_vec()).unwrap()
}

fn budget(e: &[f64]) -> PrivacyBudget {
    PrivacyBudget::new(e.to_vec()).unwrap()
}

#[test]
fn multiplicities_cover_the_domain() {
    for t in 0..100 {
        let mut rng = trial_rng(11, t);
        let k = rng.random_range(1..=8);
        let a: Vec<u32> = (0..k).map(|_| rng.random_range(2..=9)).collect();
        let s = schema(&a);
        let idx = SubsetIndex::build(&s).unwrap();
        let total: Real = idx.multiplicities().iter().copied().sum();
        assert_eq!(total, s.domain_size(), "sizes {a:?}");
    }
}

#[test]
fn kronecker_is_a_product_of_single_matrices() {
    for t in 0..20 {
        let mut rng = trial_rng(12, t);
        let k = rng.random_range(1..=3);
        let a: Vec<u32> = (0..k).map(|_| rng.random_range(2..=4)).collect();
        let e: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..6.0)).collect();
        let m = materialize(&kronecker_spec(&schema(&a), &budget(&e)).unwrap()).unwrap();
        let singles: Vec<Vec<Real>> = a.iter().zip(&e).map(|(&ai, &ei)| single_attribute_matrix(ai, ei)).collect();
        for u in 0..m.dim() {
            for v in 0..m.dim() {
                let ru = multirr::mechanism::decode(u as u64, &a);
                let rv = multirr::mechanism::decode(v as u64, &a);
                let p: Real = (0..k)
                    .map(|i| singles[i][(ru[i] * a[i] + rv[i]) as usize])
                    .product();
                let d = Real::rel_diff(m.entry(u, v), p);
                assert!(d < 1e-14, "sizes {a:?} eps {e:?} at ({u},{v}): {d}");
            }
        }
    }
}

#[test]
fn high_budget_lp_is_feasible_and_chained() {
    let s = schema(&[3, 3, 3]);
    let b = budget(&[50.0; 3]);
    let spec = solve_optimal(&s, &b).unwrap();
    let idx = SubsetIndex::for_k(3).unwrap();
    // the chain holds up to the solver's slack tolerance
    for j in 0..idx.num_classes() {
        for i in 0..3 {
            if !idx.contains(j, i) {
                let wider = idx.index_of_mask(idx.mask(j).unwrap() | 1 << i);
                let slack = (spec.values()[wider] - spec.values()[j]).to_f64();
                assert!(slack <= 1e-9, "class {j} vs {wider}: {slack}");
            }
        }
    }
    assert!(spec.eps_total() <= 150.0 + 1e-9);
    for (got, want) in audit_levels(&spec).iter().zip(b.values()) {
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }
}

#[test]
fn heuristic_low_budget_sits_between_optimum_and_composition() {
    let s = schema(&[5, 5, 5]);
    let b = budget(&[1.0; 3]);
    let h = heuristic_build(&s, &b).unwrap().eps_total();
    let o = solve_optimal(&s, &b).unwrap().eps_total();
    assert!(h >= o - 1e-9, "heuristic {h} optimum {o}");
    assert!(h < 3.0, "{h}");
}

#[test]
fn heuristic_high_budget_is_near_optimal() {
    let s = schema(&[5, 5, 5]);
    let b = budget(&[8.0; 3]);
    let h = heuristic_build(&s, &b).unwrap().eps_total();
    let o = solve_optimal(&s, &b).unwrap().eps_total();
    assert!(h / o <= 1.01 && h / o >= 1.0 - 1e-12, "{}", h / o);
}

#[test]
fn record_codes_are_mixed_radix() {
    assert_eq!(encode(&[1, 0, 2], &[2, 4, 3]).unwrap(), 14);
    assert!(encode(&[2, 0, 0], &[2, 4, 3]).is_err());
}
