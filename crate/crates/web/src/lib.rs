//! wasm-bindgen bindings for the demo page in `www/`.
//!
//! Every call takes plain strings and numbers and returns JSON text, so
//! the page needs no glue beyond `JSON.parse`.

use multirr::mechanism::{audit_levels, build_mechanism, materialize, Sampler};
use multirr::{AttributeSchema, DistortionSpec, Method, PrivacyBudget};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("{what}: cannot read {t:?}")))
        .collect()
}

fn build(sizes: &str, eps: &str, method: &str) -> Result<(DistortionSpec, f64), String> {
    let schema = AttributeSchema::new(parse_list(sizes, "sizes")?).map_err(|e| e.to_string())?;
    let mut levels: Vec<f64> = parse_list(eps, "levels")?;
    if levels.len() == 1 {
        levels = vec![levels[0]; schema.k()];
    }
    let budget = PrivacyBudget::new(levels).map_err(|e| e.to_string())?;
    let method: Method = method.parse()?;
    let (spec, report) = build_mechanism(&schema, &budget, method).map_err(|e| e.to_string())?;
    Ok((spec, report.build_time_secs))
}

fn summary(spec: &DistortionSpec, secs: f64) -> serde_json::Value {
    json!({
        "method": spec.method(),
        "kind": spec.kind(),
        "requested_eps": spec.requested_eps().values(),
        "achieved_eps": spec.achieved_eps().values(),
        "audited_eps": audit_levels(spec),
        "eps_total": spec.eps_total(),
        "composed_eps": spec.achieved_eps().total(),
        "build_ms": secs * 1e3,
    })
}

fn to_js(r: Result<serde_json::Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Build with every method and report the overall level of each.
#[wasm_bindgen]
pub fn compare(sizes: &str, eps: &str) -> Result<String, JsError> {
    to_js((|| {
        let rows = ["optimal", "heuristic", "kronecker"]
            .iter()
            .map(|m| match build(sizes, eps, m) {
                Ok((spec, secs)) => summary(&spec, secs),
                Err(e) => json!({ "method": m, "error": e }),
            })
            .collect::<Vec<_>>();
        Ok(json!(rows))
    })())
}

/// Output distribution for one input record, from the explicit matrix.
#[wasm_bindgen]
pub fn column(sizes: &str, eps: &str, method: &str, record: &str) -> Result<String, JsError> {
    to_js((|| {
        let (spec, _) = build(sizes, eps, method)?;
        let m = materialize(&spec).map_err(|e| e.to_string())?;
        let rec: Vec<u32> = parse_list(record, "record")?;
        let v = multirr::mechanism::encode(&rec, spec.schema().sizes()).map_err(|e| e.to_string())? as usize;
        let rows: Vec<_> = (0..m.dim())
            .map(|u| json!({ "record": multirr::mechanism::decode(u as u64, m.sizes()), "p": m.entry(u, v).to_f64() }))
            .collect();
        Ok(json!(rows))
    })())
}

/// Perturb one record `times` times and count the outputs.
#[wasm_bindgen]
pub fn perturb(sizes: &str, eps: &str, method: &str, record: &str, times: u32, seed: u64) -> Result<String, JsError> {
    to_js((|| {
        let (spec, _) = build(sizes, eps, method)?;
        let sampler = Sampler::new(&spec).map_err(|e| e.to_string())?;
        let rec: Vec<u32> = parse_list(record, "record")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut kept = 0u32;
        let mut first = Vec::new();
        for t in 0..times {
            let out = sampler.perturb(&rec, &mut rng).map_err(|e| e.to_string())?;
            kept += (out == rec) as u32;
            if t < 20 {
                first.push(out);
            }
        }
        Ok(json!({ "kept": kept, "times": times, "samples": first }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_reports_all_methods() {
        let v: serde_json::Value = serde_json::from_str(&compare("5,5,5", "2").unwrap()).unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 3);
        let kron = rows[2]["eps_total"].as_f64().unwrap();
        assert!((kron - 6.0).abs() < 1e-9);
        assert!(rows[0]["eps_total"].as_f64().unwrap() < kron);
    }

    #[test]
    fn column_sums_to_one() {
        let v: serde_json::Value = serde_json::from_str(&column("2,3", "1,2", "heuristic", "1,2").unwrap()).unwrap();
        let s: f64 = v.as_array().unwrap().iter().map(|r| r["p"].as_f64().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturb_counts() {
        let v: serde_json::Value =
            serde_json::from_str(&perturb("2,2", "50", "kronecker", "1,0", 100, 1).unwrap()).unwrap();
        assert_eq!(v["kept"], 100);
        assert!(build("2,x", "1", "heuristic").is_err());
    }
}
