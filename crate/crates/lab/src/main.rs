use std::fs;
use std::io;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use esprit_core::bounds::{
    hadamard_eig_bounds, md_error_bound, md_scaling_bound, resolution_snapshot_threshold, subspace_error_bound, BoundInputs,
    Route,
};
use esprit_core::estimators::{estimate, EstimateOptions, Method, DEFAULT_MUSIC_GRID};
use esprit_core::metrics::{matched_distance, min_separation};
use esprit_core::model::{generate_snapshots, ScenarioConfig};
use esprit_core::smoothing::Smoothing;
use esprit_lab::experiment::{
    preset, run_experiment, sidecar_paths, write_outputs, write_summary_csv, ExperimentSpec, MethodSpec, DEFAULT_SEED,
    DEFAULT_TRIALS,
};
use esprit_lab::format::{load_data, read_scenario, save_data};
use esprit_lab::slope::fit_loglog_slope;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "esprit-lab", version, about = "Line-spectral estimation experiments with ESPRIT and MUSIC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long, value_parser = parse_smoothing)]
    smoothing: Option<Smoothing>,
    /// Subarray length M for spatial smoothing.
    #[arg(long = "subarray")]
    subarray: Option<usize>,
    /// MUSIC grid size.
    #[arg(long, default_value_t = DEFAULT_MUSIC_GRID)]
    grid: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one snapshot matrix from a scenario JSON file.
    Generate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate frequencies from a data file.
    Estimate {
        data: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Number of sources; defaults to the header's frequency count.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the error bounds for a scenario.
    Bound {
        scenario: PathBuf,
        #[arg(long, value_parser = parse_smoothing, default_value = "none")]
        smoothing: Smoothing,
        #[arg(long = "subarray")]
        subarray: Option<usize>,
        /// Use the sample source covariance of the seeded realization.
        #[arg(long)]
        empirical: bool,
        /// Separation for the resolution snapshot threshold; defaults to
        /// the minimum separation of the scenario.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a preset (exp1..exp4) or an experiment spec JSON file.
    Experiment {
        spec: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Summary CSV path; per-trial CSV and JSON summary are written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Fixed noise level (ignored when sweeping it).
        #[arg(long)]
        sigma: Option<f64>,
        /// Fixed snapshot count (ignored when sweeping it).
        #[arg(long)]
        snapshots: Option<usize>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Fit a log-log slope between two CSV columns.
    Slope {
        csv: PathBuf,
        #[arg(long, default_value = "sweep_value")]
        x: String,
        #[arg(long, default_value = "mean_md")]
        y: String,
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        #[arg(long, value_parser = parse_smoothing)]
        smoothing: Option<Smoothing>,
        /// Keep rows with x at least this value.
        #[arg(long)]
        min: Option<f64>,
        /// Keep rows with x at most this value.
        #[arg(long)]
        max: Option<f64>,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_smoothing(s: &str) -> Result<Smoothing, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn emit(value: &Value, out: Option<&PathBuf>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn report_json<T: serde::Serialize>(r: esprit_core::Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn cmd_estimate(data: PathBuf, pipeline: PipelineArgs, k: Option<usize>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let (cfg, y) = load_data(&data).with_context(|| format!("reading {}", data.display()))?;
    let smoothing = pipeline.smoothing.unwrap_or(Smoothing::None);
    let opts = EstimateOptions {
        method: pipeline.method.unwrap_or(Method::Esprit),
        smoothing,
        subarray_m: match smoothing {
            Smoothing::None => None,
            _ => pipeline.subarray.or(cfg.subarray_m),
        },
        grid_size: pipeline.grid,
    };
    let k = k.unwrap_or(cfg.freqs.len());
    let est = estimate(&y, &opts, k)?;
    let md = if k == cfg.freqs.len() {
        Some(matched_distance(&est.freqs, &cfg.freqs)?.md)
    } else {
        None
    };
    let eigs: Vec<[f64; 2]> = est.raw_eigs.iter().map(|z| [z.re, z.im]).collect();
    emit(
        &json!({
            "method": est.method,
            "smoothing": smoothing,
            "subarray_m": opts.subarray_m,
            "freqs": est.freqs,
            "md": md,
            "raw_eigs": eigs,
            "diagnostics": est.diagnostics,
        }),
        out.as_ref(),
    )
}

fn cmd_bound(
    scenario: PathBuf,
    smoothing: Smoothing,
    subarray: Option<usize>,
    empirical: bool,
    delta: Option<f64>,
    out: Option<PathBuf>,
) -> anyhow::Result<()> {
    let cfg = read_scenario(&scenario)?;
    let m = match smoothing {
        Smoothing::None => None,
        _ => Some(subarray.or(cfg.subarray_m).context("smoothing needs --subarray or subarray_m in the scenario")?),
    };
    let structure = cfg.coherence()?;
    let population = cfg.source_covariance()?.sigma_full;
    let (sigma, route) = if empirical {
        (generate_snapshots(&cfg)?.sample_source_covariance().context("realization has no source matrix")?, Route::Empirical)
    } else {
        (population.clone(), Route::Population)
    };
    let inp = BoundInputs::from_covariance(&cfg.freqs, &sigma, cfg.noise_sigma, cfg.n_sensors, smoothing, m, cfg.snapshots, route)?;
    let delta = match delta {
        Some(d) => d,
        None => min_separation(&cfg.freqs)?,
    };
    let p = m.map_or(1, |m| cfg.n_sensors + 1 - m);
    emit(
        &json!({
            "smoothing": smoothing,
            "subarray_m": m,
            "route": route,
            "inputs": inp.ingredients(),
            "subspace": report_json(subspace_error_bound(&inp)),
            "md": report_json(md_error_bound(&inp)),
            "md_scaling": report_json(md_scaling_bound(&inp)),
            "resolution": {
                "delta": delta,
                "snapshot_threshold": report_json(resolution_snapshot_threshold(&inp, delta)),
            },
            "hadamard": report_json(hadamard_eig_bounds(&population, Some(&structure), &cfg.freqs, p)),
        }),
        out.as_ref(),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    spec: String,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    values: Option<Vec<f64>>,
    sigma: Option<f64>,
    snapshots: Option<usize>,
    pipeline: PipelineArgs,
) -> anyhow::Result<()> {
    let mut spec: ExperimentSpec = if spec.ends_with(".json") {
        let text = fs::read_to_string(&spec).with_context(|| format!("reading {spec}"))?;
        serde_json::from_str(&text)?
    } else {
        preset(&spec, trials.unwrap_or(DEFAULT_TRIALS), seed.unwrap_or(DEFAULT_SEED))?
    };
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(s) = seed {
        spec.base.seed = s;
    }
    if let Some(v) = values {
        spec.sweep_values = v;
    }
    if let Some(s) = sigma {
        spec.base.noise_sigma = s;
    }
    if let Some(l) = snapshots {
        spec.base.snapshots = l;
    }
    if let Some(m) = pipeline.subarray {
        spec.base = spec.base.clone().with_subarray(m);
        for ms in &mut spec.methods {
            ms.subarray_m = Some(m);
        }
    }
    if pipeline.method.is_some() || pipeline.smoothing.is_some() {
        let smoothing = pipeline.smoothing.unwrap_or(Smoothing::None);
        spec.methods = vec![MethodSpec {
            method: pipeline.method.unwrap_or(Method::Esprit),
            smoothing,
            subarray_m: pipeline.subarray.or(spec.base.subarray_m),
        }];
    }
    spec.grid_size = pipeline.grid;
    let out = out.or_else(|| spec.output.clone());
    if out.is_some() {
        spec.output = out.clone();
    }
    let result = run_experiment(&spec, threads)?;
    match out {
        Some(path) => {
            write_outputs(&result, &path)?;
            let (trials, summary) = sidecar_paths(&path);
            eprintln!("wrote {}, {}, {}", path.display(), trials.display(), summary.display());
        }
        None => write_summary_csv(&result, io::stdout().lock())?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_slope(
    csv_path: PathBuf,
    x: String,
    y: String,
    method: Option<Method>,
    smoothing: Option<Smoothing>,
    min: Option<f64>,
    max: Option<f64>,
) -> anyhow::Result<()> {
    let mut reader = csv::Reader::from_path(&csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| esprit_lab::LabError::MissingColumn(name.to_string()))
    };
    let (xi, yi) = (col(&x)?, col(&y)?);
    let mi = col("method").ok();
    let si = col("smoothing").ok();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec?;
        if let (Some(m), Some(i)) = (method, mi) {
            if rec[i] != *m.to_string() {
                continue;
            }
        }
        if let (Some(s), Some(i)) = (smoothing, si) {
            if rec[i] != *s.to_string() {
                continue;
            }
        }
        let xv: f64 = rec[xi].parse().with_context(|| format!("column {x}: {:?}", &rec[xi]))?;
        if min.is_some_and(|m| xv < m) || max.is_some_and(|m| xv > m) {
            continue;
        }
        let yv: f64 = rec[yi].parse().with_context(|| format!("column {y}: {:?}", &rec[yi]))?;
        xs.push(xv);
        ys.push(yv);
    }
    let fit = fit_loglog_slope(&xs, &ys)?;
    emit(&json!({ "x": x, "y": y, "points": xs.len(), "fit": fit }), None)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { scenario, out, seed } => {
            let mut cfg: ScenarioConfig = read_scenario(&scenario)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let data = generate_snapshots(&cfg)?;
            save_data(&out, &cfg, &data.y)?;
        }
        Command::Estimate { data, pipeline, k, out } => cmd_estimate(data, pipeline, k, out)?,
        Command::Bound {
            scenario,
            smoothing,
            subarray,
            empirical,
            delta,
            out,
        } => cmd_bound(scenario, smoothing, subarray, empirical, delta, out)?,
        Command::Experiment {
            spec,
            trials,
            seed,
            out,
            threads,
            values,
            sigma,
            snapshots,
            pipeline,
        } => cmd_experiment(spec, trials, seed, out, threads, values, sigma, snapshots, pipeline)?,
        Command::Slope {
            csv,
            x,
            y,
            method,
            smoothing,
            min,
            max,
        } => cmd_slope(csv, x, y, method, smoothing, min, max)?,
    }
    Ok(())
}
