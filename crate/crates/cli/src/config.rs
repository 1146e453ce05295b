//! Experiment configuration: JSON files plus flag overrides, flags win.
//!
//! Everything random flows from explicit seeds in the resolved
//! configuration; there is no ambient randomness anywhere in the binary.
//! Measures and schedules are compact named specs so sweeps stay scriptable
//! without templating:
//!
//! ```text
//!   schedule   linear | trig | vm:<kappa> | ou
//!              (polynomial schedules via config: {"alpha": [a0, a1, ...],
//!               "beta": [b0, b1, ...]} with coefficients in increasing
//!               degree)
//!   measure    std | gaussian:<mean>,<var> | gaussian:[m,...],[v,...] |
//!              gaussian_scaled:<kappa> | quartic1d | logcosh1d
//! ```
//!
//! Polynomial schedules pass through the endpoint contract before use and
//! the rejection message names every failed clause, so a config carrying
//! β(1) = 0.9 fails with "beta(1) = 1" in the error text rather than
//! producing curves for a non-interpolating path.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use siflow::measures::{GaussianMeasure, Measure, PotentialDensity};
use siflow::schedules::{check_endpoints, Schedule};

/// Grid used when validating config-defined schedules.
const VALIDATION_GRID: usize = 101;

/// A schedule given either by builtin name or by explicit polynomial
/// coefficients (increasing degree).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Name(String),
    Poly { alpha: Vec<f64>, beta: Vec<f64> },
}

/// Keys shared by the subcommands. Every field is optional: a missing key
/// falls back to the subcommand default, a present key is overridden by the
/// matching flag.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Integration / grid resolution (meaning documented per subcommand).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Ambient dimension for specs that do not pin one (std, gaussian_scaled).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Gauss–Hermite nodes per axis for quadrature drifts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Ensemble size for flow / sde runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    /// SDE stochasticity knob ε ∈ [0, 1]; ε = 1 is the deterministic flow.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Interpolation time for single-time studies (estimator).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Extra kernel variance h ≥ 0 of the empirical drift.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    /// Score regularizer ε > 0 of the empirical drift.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_floor: Option<f64>,
    /// Training sample count for `estimate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Sample-count sweep for `verify estimator`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_counts: Option<Vec<usize>>,
    /// Seed sweep for `verify estimator`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Trial count for `verify lemma-a2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Checkpoint times for `sde`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<f64>>,
}

impl ExperimentConfig {
    /// Read a config file; parse failures carry the file name and
    /// serde_json's line/column/key diagnostics.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Resolve a schedule spec. Builtins are constructed directly (their
/// contracts are enforced upstream); polynomial schedules are validated
/// against the endpoint contract and rejected with every failed clause
/// named.
pub fn build_schedule(spec: &ScheduleSpec) -> Result<Schedule> {
    match spec {
        ScheduleSpec::Name(name) => match name.as_str() {
            "linear" => Ok(Schedule::linear()),
            "trig" => Ok(Schedule::trig()),
            "ou" => Ok(Schedule::ou_reparam()),
            other => {
                if let Some(kappa_text) = other.strip_prefix("vm:") {
                    let kappa: f64 = kappa_text.parse().with_context(|| {
                        format!("invalid curvature in schedule spec '{other}'")
                    })?;
                    Ok(Schedule::variance_matched(kappa)?)
                } else {
                    bail!(
                        "unknown schedule '{other}' (expected linear | trig | vm:<kappa> | ou, \
                         or a polynomial config entry)"
                    )
                }
            }
        },
        ScheduleSpec::Poly { alpha, beta } => {
            let schedule = Schedule::from_polynomials(alpha.clone(), beta.clone());
            let report = check_endpoints(&schedule, VALIDATION_GRID)?;
            if !report.pass {
                bail!(
                    "polynomial schedule violates the endpoint contract: {}",
                    report.failed_clauses().join("; ")
                );
            }
            Ok(schedule)
        }
    }
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|cell| {
            cell.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid {what} entry '{}'", cell.trim()))
        })
        .collect()
}

/// Resolve a measure spec. `dim` supplies the ambient dimension for specs
/// that do not pin one.
pub fn build_measure(spec: &str, dim: usize) -> Result<Measure> {
    if spec == "std" || spec == "gaussian" {
        return Ok(Measure::Gaussian(GaussianMeasure::standard(dim)));
    }
    if let Some(rest) = spec.strip_prefix("gaussian:") {
        if rest.starts_with('[') {
            // gaussian:[m1,...],[v1,...] — diagonal covariance.
            let Some((mean_part, var_part)) = rest.split_once("],[") else {
                bail!("expected gaussian:[m,...],[v,...], got '{spec}'");
            };
            let mean = parse_list(mean_part.trim_start_matches('['), "mean")?;
            let vars = parse_list(var_part.trim_end_matches(']'), "variance")?;
            if mean.len() != vars.len() {
                bail!(
                    "gaussian spec has {} means but {} variances",
                    mean.len(),
                    vars.len()
                );
            }
            let cov = DMatrix::from_diagonal(&DVector::from_vec(vars));
            return Ok(Measure::Gaussian(GaussianMeasure::new(
                DVector::from_vec(mean),
                cov,
            )?));
        }
        let Some((mean_text, var_text)) = rest.split_once(',') else {
            bail!("expected gaussian:<mean>,<var>, got '{spec}'");
        };
        let mean: f64 = mean_text.trim().parse().context("invalid gaussian mean")?;
        let var: f64 = var_text.trim().parse().context("invalid gaussian variance")?;
        return Ok(Measure::Gaussian(GaussianMeasure::scalar(mean, var)?));
    }
    if let Some(kappa_text) = spec.strip_prefix("gaussian_scaled:") {
        let kappa: f64 =
            kappa_text.parse().with_context(|| format!("invalid curvature in '{spec}'"))?;
        return Ok(Measure::Potential(PotentialDensity::gaussian_scaled(kappa, dim)?));
    }
    match spec {
        "quartic1d" => Ok(Measure::Potential(PotentialDensity::quartic_1d())),
        "logcosh1d" => Ok(Measure::Potential(PotentialDensity::logcosh_1d())),
        other => bail!(
            "unknown measure '{other}' (expected std | gaussian:<mean>,<var> | \
             gaussian:[m,...],[v,...] | gaussian_scaled:<kappa> | quartic1d | logcosh1d)"
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_schedules_resolve_by_name() {
        for (name, expect) in
            [("linear", "linear"), ("trig", "trig"), ("ou", "ou"), ("vm:4", "vm:4")]
        {
            let s = build_schedule(&ScheduleSpec::Name(name.to_string())).unwrap();
            assert_eq!(s.name(), expect);
        }
        assert!(build_schedule(&ScheduleSpec::Name("cosine".into())).is_err());
        assert!(build_schedule(&ScheduleSpec::Name("vm:abc".into())).is_err());
    }

    #[test]
    fn polynomial_schedule_with_wrong_endpoint_names_the_clause() {
        // β(1) = 0.9: the interpolation never reaches the target.
        let spec = ScheduleSpec::Poly { alpha: vec![1.0, -1.0], beta: vec![0.0, 0.9] };
        let err = build_schedule(&spec).unwrap_err().to_string();
        assert!(err.contains("beta(1) = 1"), "clause missing from: {err}");

        let good = ScheduleSpec::Poly { alpha: vec![1.0, -1.0], beta: vec![0.0, 1.0] };
        let s = build_schedule(&good).unwrap();
        assert_relative_eq!(s.beta(0.25), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn measure_specs_resolve() {
        assert_eq!(build_measure("std", 3).unwrap().dim(), 3);

        let g = build_measure("gaussian:0.5,0.25", 1).unwrap();
        let Measure::Gaussian(g) = g else { panic!("expected gaussian") };
        assert_relative_eq!(g.mean()[0], 0.5);
        assert_relative_eq!(g.cov()[(0, 0)], 0.25);

        let d = build_measure("gaussian:[0,1],[4,1]", 2).unwrap();
        let Measure::Gaussian(d) = d else { panic!("expected gaussian") };
        assert_relative_eq!(d.mean()[1], 1.0);
        assert_relative_eq!(d.cov()[(0, 0)], 4.0);
        assert_relative_eq!(d.cov()[(0, 1)], 0.0);

        let p = build_measure("gaussian_scaled:4", 2).unwrap();
        assert_relative_eq!(p.as_potential().kappa(), 4.0);
        assert_eq!(p.dim(), 2);

        assert_eq!(build_measure("quartic1d", 1).unwrap().dim(), 1);
        assert_eq!(build_measure("logcosh1d", 1).unwrap().dim(), 1);
        assert!(build_measure("uniform", 1).is_err());
        assert!(build_measure("gaussian:0.0,-1.0", 1).is_err());
    }

    #[test]
    fn config_parse_errors_carry_key_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");

        std::fs::write(&path, r#"{"schdule": "linear"}"#).unwrap();
        let err = format!("{:#}", ExperimentConfig::load(&path).unwrap_err());
        assert!(err.contains("schdule"), "unknown key not named: {err}");
        assert!(err.contains("cfg.json"), "file not named: {err}");

        std::fs::write(&path, "{\"seed\": 1,\n  \"steps\": }").unwrap();
        let err = format!("{:#}", ExperimentConfig::load(&path).unwrap_err());
        assert!(err.contains("line 2"), "line diagnostics missing: {err}");
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{
            "schedule": {"alpha": [1.0, -1.0], "beta": [0.0, 1.0]},
            "target": "gaussian_scaled:4",
            "seed": 7,
            "sample_counts": [100, 1000],
            "checkpoints": [0.25, 0.5]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(cfg.schedule, Some(ScheduleSpec::Poly { .. })));
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.sample_counts.as_deref(), Some(&[100, 1000][..]));
        // Unset keys stay out of the serialized form entirely.
        let back = serde_json::to_value(&cfg).unwrap();
        assert!(back.get("eps").is_none());
    }
}
