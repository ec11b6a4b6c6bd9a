//! Seeded Monte Carlo sweeps.
//!
//! Every trial draws its data from RNG streams keyed by
//! `(seed, sweep index, trial index)`, so results do not depend on how the
//! trials are scheduled across threads.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use esprit_core::bounds::{md_scaling_bound, BoundInputs, Route};
use esprit_core::estimators::{estimate, EstimateOptions, Method, DEFAULT_MUSIC_GRID};
use esprit_core::metrics::matched_distance;
use esprit_core::model::{generate_with_covariance, ScenarioConfig};
use esprit_core::numerics::ComplexMatrix;
use esprit_core::smoothing::Smoothing;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Matched distance recorded for a trial whose estimator failed.
pub const FAILURE_MD: f64 = 0.5;
/// Trials per sweep point unless overridden.
pub const DEFAULT_TRIALS: usize = 200;
/// Trials per sweep point used for the published figures.
pub const PUBLISHED_TRIALS: usize = 1000;
pub const DEFAULT_SEED: u64 = 20240101;

pub const CSV_HEADER: [&str; 12] = [
    "sweep_name",
    "sweep_value",
    "method",
    "smoothing",
    "mean_md",
    "median_md",
    "failures",
    "bound_value",
    "bound_applicable",
    "probability_floor",
    "trials",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Custom,
}

impl FromStr for Preset {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" => Ok(Preset::Exp1),
            "exp2" => Ok(Preset::Exp2),
            "exp3" => Ok(Preset::Exp3),
            "exp4" => Ok(Preset::Exp4),
            "custom" => Ok(Preset::Custom),
            other => Err(LabError::UnknownPreset(other.to_string())),
        }
    }
}

/// Scenario parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NoiseSigma,
    Snapshots,
    /// Moves the second-to-last frequency to `last - value`.
    Separation,
    /// Array length `N`; with a fixed subarray length this varies `P`.
    NSensors,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::NoiseSigma => "noise_sigma",
            SweepAxis::Snapshots => "snapshots",
            SweepAxis::Separation => "separation",
            SweepAxis::NSensors => "n_sensors",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One estimation pipeline to run on every trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub smoothing: Smoothing,
    #[serde(default)]
    pub subarray_m: Option<usize>,
}

impl MethodSpec {
    pub fn esprit() -> Self {
        Self {
            method: Method::Esprit,
            smoothing: Smoothing::None,
            subarray_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    /// Scenario shared by all sweep points; its seed keys every RNG stream.
    pub base: ScenarioConfig,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_grid() -> usize {
    DEFAULT_MUSIC_GRID
}

fn log_grid(lo_exp: f64, hi_exp: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / steps as f64))
        .collect()
}

/// The configurations of the four published experiments.
pub fn preset(name: &str, trials: usize, seed: u64) -> Result<ExperimentSpec> {
    let which: Preset = name.parse()?;
    let exp1_freqs = [0.1, 0.5, 0.8];
    let spec = match which {
        Preset::Exp1 => ExperimentSpec {
            preset: which,
            sweep_axis: SweepAxis::NoiseSigma,
            sweep_values: log_grid(-2.0, 2.0, 16),
            trials,
            base: ScenarioConfig::noncoherent(&exp1_freqs, 10, 1000, 0.1, seed),
            methods: vec![MethodSpec::esprit()],
            grid_size: DEFAULT_MUSIC_GRID,
            output: None,
        },
        Preset::Exp2 => ExperimentSpec {
            preset: which,
            sweep_axis: SweepAxis::Snapshots,
            sweep_values: vec![
                1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10000.0,
            ],
            trials,
            base: ScenarioConfig::noncoherent(&exp1_freqs, 10, 1000, 0.1, seed),
            methods: vec![MethodSpec::esprit()],
            grid_size: DEFAULT_MUSIC_GRID,
            output: None,
        },
        Preset::Exp3 => ExperimentSpec {
            preset: which,
            sweep_axis: SweepAxis::Separation,
            sweep_values: vec![0.01, 0.03, 0.1, 0.3],
            trials,
            base: ScenarioConfig::noncoherent(&exp1_freqs, 10, 1000, 1.0, seed),
            methods: vec![MethodSpec::esprit()],
            grid_size: DEFAULT_MUSIC_GRID,
            output: None,
        },
        Preset::Exp4 => {
            let groups = vec![3, 2, 1];
            // Each group's vector has entries of modulus 1/√g, so a core
            // power of g gives every source unit power.
            let mut base = ScenarioConfig {
                groups: Some(groups),
                core_cov: Some(ComplexMatrix::from_real_diagonal(&[3.0, 2.0, 1.0])),
                ..ScenarioConfig::noncoherent(&[0.1, 0.2, 0.5, 0.6, 0.7, 0.9], 9, 1000, 0.1, seed)
            }
            .with_subarray(7);
            base.group_vectors = Some(base.coherence()?.group_vectors().to_vec());
            let ss = |smoothing| MethodSpec {
                method: Method::Esprit,
                smoothing,
                subarray_m: Some(7),
            };
            ExperimentSpec {
                preset: which,
                sweep_axis: SweepAxis::NSensors,
                sweep_values: (7..=15).map(f64::from).collect(),
                trials,
                base,
                methods: vec![ss(Smoothing::Foss), ss(Smoothing::Fbss)],
                grid_size: DEFAULT_MUSIC_GRID,
                output: None,
            }
        }
        Preset::Custom => return Err(LabError::UnknownPreset(name.to_string())),
    };
    Ok(spec)
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(LabError::InvalidSpec(format!("{what} must be a positive integer, got {v}")))
    }
}

impl ExperimentSpec {
    pub fn seed(&self) -> u64 {
        self.base.seed
    }

    /// The scenario at one sweep value.
    pub fn scenario_at(&self, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = self.base.clone();
        match self.sweep_axis {
            SweepAxis::NoiseSigma => cfg.noise_sigma = value,
            SweepAxis::Snapshots => cfg.snapshots = as_count(value, "snapshot count")?,
            SweepAxis::Separation => {
                let k = cfg.freqs.len();
                if k < 2 {
                    return Err(LabError::InvalidSpec("separation sweep needs at least two frequencies".into()));
                }
                let moved = (cfg.freqs[k - 1] - value).rem_euclid(1.0);
                cfg.freqs[k - 2] = if moved >= 1.0 { 0.0 } else { moved };
            }
            SweepAxis::NSensors => {
                cfg.n_sensors = as_count(value, "sensor count")?;
                if let Some(m) = cfg.subarray_m {
                    cfg.smoothing_p = Some((cfg.n_sensors + 1).saturating_sub(m));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn subarray_for(&self, m: &MethodSpec) -> Option<usize> {
        match m.smoothing {
            Smoothing::None => None,
            _ => m.subarray_m.or(self.base.subarray_m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(LabError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.sweep_values.is_empty() || self.sweep_values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidSpec("sweep values must be finite and non-empty".into()));
        }
        let up = self.sweep_values.windows(2).all(|w| w[0] < w[1]);
        let down = self.sweep_values.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(LabError::InvalidSpec("sweep values must be strictly monotone".into()));
        }
        if self.methods.is_empty() {
            return Err(LabError::InvalidSpec("at least one method is required".into()));
        }
        for m in &self.methods {
            if m.smoothing != Smoothing::None && self.subarray_for(m).is_none() {
                return Err(LabError::InvalidSpec(format!("{} {} needs a subarray length", m.method, m.smoothing)));
            }
        }
        for &v in &self.sweep_values {
            self.scenario_at(v)?;
        }
        Ok(())
    }
}

/// Outcome of one method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub trial: usize,
    pub method: Method,
    pub smoothing: Smoothing,
    /// `FAILURE_MD` when the estimator failed.
    pub md: f64,
    pub failed: bool,
    pub error: Option<String>,
}

/// Aggregate for one `(sweep value, method)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub method: Method,
    pub smoothing: Smoothing,
    pub subarray_m: Option<usize>,
    pub mean_md: f64,
    pub median_md: f64,
    pub failures: usize,
    /// Statistics over the trials that did not fail.
    pub mean_md_successful: Option<f64>,
    pub median_md_successful: Option<f64>,
    pub bound_value: Option<f64>,
    pub bound_applicable: bool,
    pub probability_floor: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<SummaryRow>,
    pub records: Vec<TrialRecord>,
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn run_trial(
    spec: &ExperimentSpec,
    cfg: &ScenarioConfig,
    sigma: &ComplexMatrix,
    sweep_index: usize,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let data = generate_with_covariance(cfg, sigma, sweep_index as u64, trial as u64)?;
    let k = cfg.freqs.len();
    Ok(spec
        .methods
        .iter()
        .map(|m| {
            let opts = EstimateOptions {
                method: m.method,
                smoothing: m.smoothing,
                subarray_m: spec.subarray_for(m),
                grid_size: spec.grid_size,
            };
            let outcome = estimate(&data.y, &opts, k).and_then(|est| matched_distance(&est.freqs, &cfg.freqs));
            let (md, error) = match outcome {
                Ok(r) => (r.md, None),
                Err(e) => (FAILURE_MD, Some(e.to_string())),
            };
            TrialRecord {
                sweep_index,
                sweep_value: spec.sweep_values[sweep_index],
                trial,
                method: m.method,
                smoothing: m.smoothing,
                md,
                failed: error.is_some(),
                error,
            }
        })
        .collect())
}

/// Population-route frequency-error bound for ESPRIT pipelines.
fn population_bound(spec: &ExperimentSpec, cfg: &ScenarioConfig, sigma: &ComplexMatrix, m: &MethodSpec) -> (Option<f64>, bool, Option<f64>) {
    if m.method != Method::Esprit {
        return (None, false, None);
    }
    let report = BoundInputs::from_covariance(
        &cfg.freqs,
        sigma,
        cfg.noise_sigma,
        cfg.n_sensors,
        m.smoothing,
        spec.subarray_for(m),
        cfg.snapshots,
        Route::Population,
    )
    .and_then(|inp| md_scaling_bound(&inp));
    match report {
        Ok(r) => (Some(r.value), r.applicable, Some(r.probability_floor)),
        Err(_) => (None, false, None),
    }
}

/// Runs the sweep; `threads` caps the worker pool (all cores when `None`).
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| LabError::InvalidSpec(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

fn run_sweep(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (si, &value) in spec.sweep_values.iter().enumerate() {
        let cfg = spec.scenario_at(value)?;
        let sigma = cfg.source_covariance()?.sigma_full;
        let per_trial: Vec<Vec<TrialRecord>> = (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, &cfg, &sigma, si, t))
            .collect::<Result<_>>()?;
        for (mi, m) in spec.methods.iter().enumerate() {
            let mds: Vec<f64> = per_trial.iter().map(|r| r[mi].md).collect();
            let ok: Vec<f64> = per_trial.iter().filter(|r| !r[mi].failed).map(|r| r[mi].md).collect();
            let (bound_value, bound_applicable, probability_floor) = population_bound(spec, &cfg, &sigma, m);
            rows.push(SummaryRow {
                sweep_name: spec.sweep_axis.name().to_string(),
                sweep_value: value,
                method: m.method,
                smoothing: m.smoothing,
                subarray_m: spec.subarray_for(m),
                mean_md: mean(&mds),
                median_md: median(&mds),
                failures: mds.len() - ok.len(),
                mean_md_successful: (!ok.is_empty()).then(|| mean(&ok)),
                median_md_successful: (!ok.is_empty()).then(|| median(&ok)),
                bound_value,
                bound_applicable,
                probability_floor,
                trials: spec.trials,
                seed: spec.seed(),
            });
        }
        for trial in per_trial {
            records.extend(trial);
        }
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        rows,
        records,
    })
}

/// Shortest round-trip text for a float, switching to exponent form for
/// very small or very large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_summary_csv<W: Write>(result: &ExperimentResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in &result.rows {
        out.write_record([
            r.sweep_name.clone(),
            fmt_f64(r.sweep_value),
            r.method.to_string(),
            r.smoothing.to_string(),
            fmt_f64(r.mean_md),
            fmt_f64(r.median_md),
            r.failures.to_string(),
            fmt_opt(r.bound_value),
            r.bound_applicable.to_string(),
            fmt_opt(r.probability_floor),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trials_csv<W: Write>(result: &ExperimentResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "sweep_name",
        "sweep_index",
        "sweep_value",
        "trial",
        "method",
        "smoothing",
        "md",
        "failed",
        "error",
        "seed",
    ])?;
    let name = result.spec.sweep_axis.name();
    for r in &result.records {
        out.write_record([
            name.to_string(),
            r.sweep_index.to_string(),
            fmt_f64(r.sweep_value),
            r.trial.to_string(),
            r.method.to_string(),
            r.smoothing.to_string(),
            fmt_f64(r.md),
            r.failed.to_string(),
            r.error.clone().unwrap_or_default(),
            result.spec.seed().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Paths of the per-trial sidecar and the JSON summary next to a CSV path.
pub fn sidecar_paths(csv_path: &Path) -> (PathBuf, PathBuf) {
    (csv_path.with_extension("trials.csv"), csv_path.with_extension("summary.json"))
}

/// Writes the summary CSV, the per-trial CSV and the JSON summary.
pub fn write_outputs(result: &ExperimentResult, csv_path: &Path) -> Result<()> {
    write_summary_csv(result, std::fs::File::create(csv_path)?)?;
    let (trials, summary) = sidecar_paths(csv_path);
    write_trials_csv(result, std::fs::File::create(trials)?)?;
    let json = serde_json::json!({ "spec": result.spec, "rows": result.rows });
    std::fs::write(summary, serde_json::to_string_pretty(&json)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_published_setups() {
        let p1 = preset("exp1", 10, 1).unwrap();
        assert_eq!(p1.base.freqs, vec![0.1, 0.5, 0.8]);
        assert_eq!(p1.base.n_sensors, 10);
        assert!((p1.sweep_values[0] - 0.01).abs() < 1e-15 && (p1.sweep_values[16] - 100.0).abs() < 1e-9);
        let p3 = preset("exp3", 10, 1).unwrap();
        assert_eq!(p3.sweep_values, vec![0.01, 0.03, 0.1, 0.3]);
        let cfg = p3.scenario_at(0.03).unwrap();
        assert!((cfg.freqs[1] - 0.77).abs() < 1e-12);
        assert_eq!(p3.scenario_at(0.3).unwrap().freqs, vec![0.1, 0.5, 0.8]);
        let p4 = preset("exp4", 10, 1).unwrap();
        assert_eq!(p4.base.subarray_m, Some(7));
        assert_eq!(p4.sweep_values.first(), Some(&7.0));
        assert_eq!(p4.sweep_values.last(), Some(&15.0));
        assert_eq!(p4.scenario_at(9.0).unwrap().smoothing_p, Some(3));
        let sigma = p4.base.source_covariance().unwrap().sigma_full;
        for i in 0..6 {
            assert!((sigma[(i, i)].re - 1.0).abs() < 1e-12);
        }
        assert!(matches!(preset("exp9", 1, 1), Err(LabError::UnknownPreset(_))));
    }

    #[test]
    fn spec_validation() {
        let mut s = preset("exp2", 1, 1).unwrap();
        s.sweep_values = vec![10.0, 5.0, 20.0];
        assert!(s.validate().is_err());
        s.sweep_values = vec![10.5];
        assert!(s.validate().is_err());
        s.sweep_values = vec![20.0, 10.0];
        assert!(s.validate().is_ok());
        s.trials = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn float_text_roundtrips() {
        for v in [0.0, 1.0, 0.5, 1e-9, 3.25e-5, 123.456, 1e20, -2.5e-7] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
