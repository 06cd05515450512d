//! Find the per-attribute levels a method can afford under a fixed overall
//! level, with the ratios between attributes held fixed.

use crate::error::{Error, Result};
use crate::mechanism::{build_mechanism_with, BuildOptions};
use crate::types::{AttributeSchema, DistortionSpec, Method, PrivacyBudget};

#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    /// Bisection stops once `(hi - lo) <= rel_tol * lo`.
    pub rel_tol: f64,
    pub max_probes: usize,
    pub build: BuildOptions,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            rel_tol: 1e-6,
            max_probes: 200,
            build: BuildOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Calibrated {
    /// `ε_i = scale * w_i`.
    pub scale: f64,
    pub budget: PrivacyBudget,
    pub spec: DistortionSpec,
    /// Overall level of `spec`, at most the target.
    pub eps_total: f64,
    pub probes: usize,
}

pub fn calibrate(
    schema: &AttributeSchema,
    weights: &[f64],
    eps_total: f64,
    method: Method,
) -> Result<Calibrated> {
    calibrate_with(schema, weights, eps_total, method, &CalibrationOptions::default())
}

fn check_weights(schema: &AttributeSchema, weights: &[f64]) -> Result<()> {
    if weights.len() != schema.k() {
        return Err(Error::LengthMismatch {
            expected: schema.k(),
            actual: weights.len(),
        });
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w > 0.0))
    {
        return Err(Error::InvalidWeights(format!("weight {i} is {w}, must be positive")));
    }
    Ok(())
}

fn scaled(weights: &[f64], s: f64) -> Result<PrivacyBudget> {
    PrivacyBudget::new(weights.iter().map(|w| w * s).collect())
}

/// Largest `s` with `total(build(method, s·w)) <= eps_total`.
///
/// For Kronecker the answer is `eps_total / Σw` directly. Otherwise the
/// bracket starts at that value (feasible whenever the method beats
/// composition) and doubles upward; every probe is checked against the
/// bracket ends so a non-monotone total is reported instead of silently
/// bisected through. The heuristic is judged by the total it achieves,
/// which may differ from what was requested when its fallback fires.
pub fn calibrate_with(
    schema: &AttributeSchema,
    weights: &[f64],
    eps_total: f64,
    method: Method,
    opts: &CalibrationOptions,
) -> Result<Calibrated> {
    check_weights(schema, weights)?;
    if !(eps_total.is_finite() && eps_total > 0.0) {
        return Err(Error::Calibration(format!("target total must be positive, got {eps_total}")));
    }
    let wsum: f64 = weights.iter().sum();
    let s0 = eps_total / wsum;
    let mut probes = 0usize;
    let mut probe = |s: f64| -> Result<(DistortionSpec, f64)> {
        probes += 1;
        let (spec, _) = build_mechanism_with(schema, &scaled(weights, s)?, method, &opts.build)?;
        let t = spec.eps_total();
        Ok((spec, t))
    };

    if method == Method::Kronecker {
        let (spec, t) = probe(s0)?;
        return Ok(Calibrated {
            scale: s0,
            budget: spec.requested_eps().clone(),
            spec,
            eps_total: t,
            probes: 1,
        });
    }

    let slack = |t: f64| 1e-9 * t.abs().max(1.0);
    let (mut lo, mut lo_spec, mut lo_t) = {
        let mut s = s0;
        loop {
            let (spec, t) = probe(s)?;
            if t <= eps_total {
                break (s, spec, t);
            }
            s /= 2.0;
            if s < s0 * 1e-12 {
                return Err(Error::Calibration("no feasible scale found below the composition bound".into()));
            }
        }
    };
    let (mut hi, mut hi_t) = {
        let mut s = lo * 2.0;
        loop {
            let (spec, t) = probe(s)?;
            if t + slack(t) < lo_t {
                return Err(Error::Calibration(format!(
                    "total decreased from {lo_t} to {t} as the scale grew"
                )));
            }
            if t > eps_total {
                break (s, t);
            }
            (lo, lo_spec, lo_t) = (s, spec, t);
            s *= 2.0;
            if !s.is_finite() || s > s0 * 1e12 {
                return Err(Error::Calibration("total never exceeds the target".into()));
            }
        }
    };
    let mut iterations = 0;
    while hi - lo > opts.rel_tol * lo {
        iterations += 1;
        if iterations > opts.max_probes {
            return Err(Error::Calibration("bisection did not converge".into()));
        }
        let mid = 0.5 * (lo + hi);
        let (spec, t) = probe(mid)?;
        if t + slack(t) < lo_t || t > hi_t + slack(hi_t) {
            return Err(Error::Calibration(format!(
                "total {t} at scale {mid} falls outside [{lo_t}, {hi_t}]"
            )));
        }
        if t <= eps_total {
            (lo, lo_spec, lo_t) = (mid, spec, t);
        } else {
            (hi, hi_t) = (mid, t);
        }
    }
    Ok(Calibrated {
        scale: lo,
        budget: lo_spec.requested_eps().clone(),
        spec: lo_spec,
        eps_total: lo_t,
        probes,
    })
}
