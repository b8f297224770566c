//! Replicated PSNR experiments and their CSV/JSON emission.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentSpec, NoiseLevel};
use super::{derive_seed, thread_pool};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorConfig, Method, ThresholdScale};
use crate::model::{blurred_signal, simulate_replication, ChannelSet};
use crate::series::FourierSeries;
use crate::signals::{psnr, Psnr, EXACT_RELATIVE_RMS};

const SIGMA_STREAM: u64 = 0;

/// One cell of the experiment grid, aggregated over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub function: String,
    pub d: u32,
    pub method: String,
    pub n: usize,
    pub bsnr_db: Option<f64>,
    /// White-noise level of the model.
    pub epsilon: f64,
    pub rho_n: f64,
    pub j1: Option<u32>,
    pub j2: Option<u32>,
    pub block_size: Option<usize>,
    pub replications: usize,
    /// Mean PSNR in dB; `+∞` means every replication was exact.
    pub psnr_mean: Option<f64>,
    pub psnr_std: Option<f64>,
    pub mise: Option<f64>,
    /// `ok` or `failed: <reason>`.
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanSummary {
    pub function: String,
    pub n: usize,
    pub bsnr_db: Option<f64>,
    pub d: u32,
    pub epsilon: f64,
    pub rho_n: f64,
    pub rho_star: f64,
    /// The `ρ` the level formulas were evaluated at.
    pub level_rho: f64,
    pub j1: u32,
    pub j2: u32,
    pub block_size: usize,
    pub clamps: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub spec: ExperimentSpec,
    pub seed: u64,
    /// `σ_v` for the largest channel count; smaller counts use a prefix.
    pub sigmas: Vec<f64>,
    pub bsnr_calibration: String,
    pub noise_scaling: String,
    pub term_threshold: String,
    pub plans: Vec<PlanSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub metadata: RunMetadata,
}

/// Noise level for a BSNR in dB.
///
/// The reference energy is the mean over channels of `(1/T) Σ_i (f ⋆ g_v)(t_i)²`.
/// The per-sample standard deviation this yields is divided by `sqrt(T)`, the
/// white-noise level whose Fourier coefficients match `T` noisy samples.
pub fn calibrate_epsilon(
    f_hat: &FourierSeries,
    channels: &ChannelSet,
    grid: usize,
    bsnr_db: f64,
) -> Result<f64> {
    let mut energy = 0.0;
    for kernel in channels.kernels() {
        let b = blurred_signal(f_hat, kernel, grid)?;
        energy += b.iter().map(|x| x * x).sum::<f64>() / grid as f64;
    }
    energy /= channels.len() as f64;
    if energy == 0.0 {
        return Err(Error::arg("blurred signal has zero energy"));
    }
    let per_sample = (energy / 10f64.powf(bsnr_db / 10.0)).sqrt();
    Ok(per_sample / (grid as f64).sqrt())
}

/// PSNR used for an exact replication when averaging with inexact ones.
fn exact_cap() -> f64 {
    -20.0 * EXACT_RELATIVE_RMS.log10()
}

struct Job {
    function: usize,
    n: usize,
    noise: usize,
    replication: usize,
}

/// `(mse, psnr)` per `(d, method)` for one replication.
type JobOutput = Vec<std::result::Result<(f64, Psnr), String>>;

fn estimator_config(spec: &ExperimentSpec, method: Method, d: u32) -> EstimatorConfig {
    let (j1, j2, block_size) = spec.level_overrides();
    EstimatorConfig {
        d,
        lambda: spec.lambda,
        method,
        j1,
        j2,
        block_size,
        term_lambda: spec.term_lambda,
        threshold_scale: spec.threshold_scale,
        level_scaling: spec.level_rule.scaling(),
        ..EstimatorConfig::default()
    }
}

/// Runs every `(function, d, method, n, noise level)` cell of `spec`.
///
/// All methods and derivative orders of a replication share one observation draw,
/// and smaller channel counts see a prefix of the larger draws. Results depend only
/// on `spec` and `seed`, never on `threads`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    seed: u64,
    threads: Option<usize>,
) -> Result<ExperimentResult> {
    spec.validate()?;
    let functions = spec.test_functions()?;
    let methods = spec.method_list()?;
    let noises = spec.noise_levels();
    let grid = spec.grid;
    let band = grid as i64 / 2 - 1;
    let n_max = *spec.n.iter().max().expect("validated non-empty");

    let sigma_seed = derive_seed(seed, SIGMA_STREAM);
    let sigmas = spec.kernel.sigmas(n_max, sigma_seed)?;
    let channel_sets: Vec<ChannelSet> = spec
        .n
        .iter()
        .map(|&n| spec.kernel.channels(n, sigma_seed))
        .collect::<Result<_>>()?;

    let f_hats: Vec<FourierSeries> = functions.iter().map(|f| f.fourier(band)).collect();
    let truths: Vec<Vec<Vec<f64>>> = functions
        .iter()
        .map(|f| spec.d.iter().map(|&d| f.sample(grid, d)).collect())
        .collect();

    // epsilon[function][n][noise]
    let mut epsilons = vec![vec![vec![0.0; noises.len()]; spec.n.len()]; functions.len()];
    for (fi, f_hat) in f_hats.iter().enumerate() {
        for (ni, channels) in channel_sets.iter().enumerate() {
            for (bi, noise) in noises.iter().enumerate() {
                epsilons[fi][ni][bi] = match *noise {
                    NoiseLevel::Epsilon(e) => e,
                    NoiseLevel::Bsnr(b) => calibrate_epsilon(f_hat, channels, grid, b)?,
                };
            }
        }
    }

    let mut plans = Vec::new();
    // plan_of[function][n][noise][d]
    let mut plan_of = Vec::new();
    for (fi, function) in functions.iter().enumerate() {
        let mut per_n = Vec::new();
        for (ni, channels) in channel_sets.iter().enumerate() {
            let mut per_noise = Vec::new();
            for (bi, noise) in noises.iter().enumerate() {
                let eps = epsilons[fi][ni][bi];
                let mut per_d = Vec::new();
                for &d in &spec.d {
                    let plan = estimator_config(spec, Method::BlockJS, d).plan(channels, eps, grid);
                    if let Ok(p) = &plan {
                        plans.push(PlanSummary {
                            function: function.name().to_string(),
                            n: spec.n[ni],
                            bsnr_db: match noise {
                                NoiseLevel::Bsnr(b) => Some(*b),
                                NoiseLevel::Epsilon(_) => None,
                            },
                            d,
                            epsilon: eps,
                            rho_n: channels.rho_n(),
                            rho_star: channels.rho_star(),
                            level_rho: p.rho_n,
                            j1: p.j1,
                            j2: p.j2,
                            block_size: p.block_size,
                            clamps: p.clamps.describe(),
                        });
                    }
                    per_d.push(plan.map_err(|e| e.to_string()));
                }
                per_noise.push(per_d);
            }
            per_n.push(per_noise);
        }
        plan_of.push(per_n);
    }

    let mut jobs = Vec::new();
    for function in 0..functions.len() {
        for n in 0..spec.n.len() {
            for noise in 0..noises.len() {
                for replication in 0..spec.replications {
                    jobs.push(Job {
                        function,
                        n,
                        noise,
                        replication,
                    });
                }
            }
        }
    }

    let run_job = |job: &Job| -> JobOutput {
        let channels = &channel_sets[job.n];
        let eps = epsilons[job.function][job.n][job.noise];
        let noise_seed = derive_seed(seed, 1 + ((job.function as u64) << 20) + job.noise as u64);
        let obs = match simulate_replication(
            &f_hats[job.function],
            channels,
            eps,
            noise_seed,
            job.replication as u64,
        ) {
            Ok(o) => o,
            Err(e) => return vec![Err(e.to_string()); spec.d.len() * methods.len()],
        };
        let mut out = Vec::with_capacity(spec.d.len() * methods.len());
        for (di, &d) in spec.d.iter().enumerate() {
            let truth = &truths[job.function][di];
            for &method in &methods {
                let config = estimator_config(spec, method, d);
                let r = estimate(&obs, channels, &config, grid).and_then(|est| {
                    let mse = est
                        .signal
                        .iter()
                        .zip(truth)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        / grid as f64;
                    Ok((mse, psnr(&est.signal, truth)?))
                });
                out.push(r.map_err(|e| e.to_string()));
            }
        }
        out
    };

    let outputs: Vec<JobOutput> =
        thread_pool(threads)?.install(|| jobs.par_iter().map(run_job).collect());

    let mut rows = Vec::new();
    for (fi, function) in functions.iter().enumerate() {
        for (di, &d) in spec.d.iter().enumerate() {
            for (mi, method) in methods.iter().enumerate() {
                for (ni, &n) in spec.n.iter().enumerate() {
                    for (bi, noise) in noises.iter().enumerate() {
                        let results: Vec<_> = jobs
                            .iter()
                            .zip(&outputs)
                            .filter(|(j, _)| j.function == fi && j.n == ni && j.noise == bi)
                            .map(|(_, o)| &o[di * methods.len() + mi])
                            .collect();
                        let plan = plan_of[fi][ni][bi][di].as_ref().ok();
                        let mut row = ResultRow {
                            function: function.name().to_string(),
                            d,
                            method: method.name().to_string(),
                            n,
                            bsnr_db: match noise {
                                NoiseLevel::Bsnr(b) => Some(*b),
                                NoiseLevel::Epsilon(_) => None,
                            },
                            epsilon: epsilons[fi][ni][bi],
                            rho_n: channel_sets[ni].rho_n(),
                            j1: plan.map(|p| p.j1),
                            j2: plan.map(|p| p.j2),
                            block_size: plan.map(|p| p.block_size),
                            replications: spec.replications,
                            psnr_mean: None,
                            psnr_std: None,
                            mise: None,
                            status: "ok".to_string(),
                        };
                        if let Some(Err(e)) = results.iter().find(|r| r.is_err()) {
                            row.status = format!("failed: {e}");
                        } else {
                            let ok: Vec<(f64, Psnr)> =
                                results.iter().map(|r| *r.as_ref().unwrap()).collect();
                            aggregate(&ok, &mut row);
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }

    let metadata = RunMetadata {
        spec: spec.clone(),
        seed,
        sigmas,
        bsnr_calibration:
            "mean over channels of the blurred-signal energy (1/T) sum_i (f*g_v)(t_i)^2".into(),
        noise_scaling: "epsilon = per-sample noise standard deviation / sqrt(T)".into(),
        term_threshold: match spec.threshold_scale {
            ThresholdScale::Nominal => {
                "sqrt(term_lambda) * epsilon * 2^(j(delta+d)) * sqrt(max(ln rho_n, 1) / rho_n)"
            }
            ThresholdScale::Variance => {
                "sqrt(term_lambda * v_j), v_j the exact level-j coefficient noise variance"
            }
        }
        .to_string()
            + "; term_lambda default 2 ln(detail count)",
        plans,
    };
    Ok(ExperimentResult { rows, metadata })
}

fn aggregate(reps: &[(f64, Psnr)], row: &mut ResultRow) {
    let r = reps.len() as f64;
    row.mise = Some(reps.iter().map(|(m, _)| m).sum::<f64>() / r);
    if reps.iter().all(|(_, p)| *p == Psnr::Exact) {
        row.psnr_mean = Some(f64::INFINITY);
        row.psnr_std = Some(0.0);
        return;
    }
    let values: Vec<f64> = reps
        .iter()
        .map(|(_, p)| match p {
            Psnr::Db(v) => *v,
            Psnr::Exact => exact_cap(),
        })
        .collect();
    let mean = values.iter().sum::<f64>() / r;
    let var = if reps.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        0.0
    };
    row.psnr_mean = Some(mean);
    row.psnr_std = Some(var.sqrt());
}

pub const RESULT_HEADER: [&str; 15] = [
    "function",
    "d",
    "method",
    "n",
    "bsnr_db",
    "epsilon",
    "rho_n",
    "j1",
    "j2",
    "block_size",
    "replications",
    "psnr_mean",
    "psnr_std",
    "mise",
    "status",
];

fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_psnr(x: Option<f64>) -> String {
    match x {
        Some(v) if v == f64::INFINITY => "exact".into(),
        other => fmt_opt(other),
    }
}

/// Long-format results, one row per cell. Floats use the shortest exact representation.
pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.function.clone(),
            r.d.to_string(),
            r.method.clone(),
            r.n.to_string(),
            fmt_opt(r.bsnr_db),
            r.epsilon.to_string(),
            r.rho_n.to_string(),
            fmt_opt(r.j1),
            fmt_opt(r.j2),
            fmt_opt(r.block_size),
            r.replications.to_string(),
            fmt_psnr(r.psnr_mean),
            fmt_opt(r.psnr_std),
            fmt_opt(r.mise),
            r.status.clone(),
        ])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Parses the output of [`results_csv`].
pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RESULT_HEADER {
        return Err(Error::Config(format!(
            "unexpected results header {header:?}"
        )));
    }
    let bad = |field: &str, value: &str| Error::Config(format!("bad {field} value `{value}`"));
    fn opt<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, ()> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| ())
        }
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let req =
            |i: usize| -> Result<f64> { f(i).parse().map_err(|_| bad(RESULT_HEADER[i], f(i))) };
        let psnr_mean = match f(11) {
            "exact" => Some(f64::INFINITY),
            s => opt(s).map_err(|_| bad("psnr_mean", s))?,
        };
        rows.push(ResultRow {
            function: f(0).to_string(),
            d: f(1).parse().map_err(|_| bad("d", f(1)))?,
            method: f(2).to_string(),
            n: f(3).parse().map_err(|_| bad("n", f(3)))?,
            bsnr_db: opt(f(4)).map_err(|_| bad("bsnr_db", f(4)))?,
            epsilon: req(5)?,
            rho_n: req(6)?,
            j1: opt(f(7)).map_err(|_| bad("j1", f(7)))?,
            j2: opt(f(8)).map_err(|_| bad("j2", f(8)))?,
            block_size: opt(f(9)).map_err(|_| bad("block_size", f(9)))?,
            replications: f(10).parse().map_err(|_| bad("replications", f(10)))?,
            psnr_mean,
            psnr_std: opt(f(12)).map_err(|_| bad("psnr_std", f(12)))?,
            mise: opt(f(13)).map_err(|_| bad("mise", f(13)))?,
            status: f(14).to_string(),
        });
    }
    Ok(rows)
}

fn noise_label(b: Option<f64>) -> String {
    match b {
        Some(b) => format!("bsnr{b}"),
        None => "fixed".into(),
    }
}

fn short_psnr(x: Option<f64>) -> String {
    match x {
        Some(v) if v == f64::INFINITY => "exact".into(),
        Some(v) => format!("{v:.2}"),
        None => "failed".into(),
    }
}

/// Wide tables, one per `(d, noise level)`: rows `function, method`, one PSNR column per `n`.
pub fn wide_tables(rows: &[ResultRow]) -> Result<Vec<(String, String)>> {
    let mut keys: Vec<(u32, String)> = Vec::new();
    for r in rows {
        let k = (r.d, noise_label(r.bsnr_db));
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = Vec::new();
    for (d, noise) in keys {
        let block: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.d == d && noise_label(r.bsnr_db) == noise)
            .collect();
        let ns: Vec<usize> = block
            .iter()
            .map(|r| r.n)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["function".to_string(), "method".to_string()];
        header.extend(ns.iter().map(|n| format!("n={n}")));
        w.write_record(&header)?;
        let mut seen: Vec<(&str, &str)> = Vec::new();
        for r in &block {
            let key = (r.function.as_str(), r.method.as_str());
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            let mut rec = vec![r.function.clone(), r.method.clone()];
            for n in &ns {
                let cell = block
                    .iter()
                    .find(|x| x.function == r.function && x.method == r.method && x.n == *n);
                rec.push(cell.map(|c| short_psnr(c.psnr_mean)).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        out.push((format!("table_d{d}_{noise}.csv"), finish(w)?));
    }
    Ok(out)
}

/// Plot data: PSNR against BSNR (`x` = BSNR) and against channel count (`x` = n).
pub fn plot_data(rows: &[ResultRow]) -> Result<Vec<(String, String)>> {
    let mut by_bsnr = csv::Writer::from_writer(Vec::new());
    by_bsnr.write_record(["x", "function", "d", "method", "n", "y"])?;
    let mut by_n = csv::Writer::from_writer(Vec::new());
    by_n.write_record(["x", "function", "d", "method", "bsnr_db", "y"])?;
    for r in rows.iter().filter(|r| r.is_ok()) {
        let y = fmt_psnr(r.psnr_mean);
        if let Some(b) = r.bsnr_db {
            by_bsnr.write_record([
                b.to_string(),
                r.function.clone(),
                r.d.to_string(),
                r.method.clone(),
                r.n.to_string(),
                y.clone(),
            ])?;
        }
        by_n.write_record([
            r.n.to_string(),
            r.function.clone(),
            r.d.to_string(),
            r.method.clone(),
            fmt_opt(r.bsnr_db),
            y,
        ])?;
    }
    Ok(vec![
        ("plot_psnr_vs_bsnr.csv".into(), finish(by_bsnr)?),
        ("plot_psnr_vs_n.csv".into(), finish(by_n)?),
    ])
}

/// Writes `results.csv`, the wide tables, plot data and `metadata.json` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = vec![("results.csv".to_string(), results_csv(&result.rows)?)];
    files.extend(wide_tables(&result.rows)?);
    files.extend(plot_data(&result.rows)?);
    let mut meta = serde_json::to_string_pretty(&result.metadata)?;
    meta.push('\n');
    files.push(("metadata.json".into(), meta));
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Human-readable summary of the rows, one line per cell.
pub fn summary(rows: &[ResultRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(
            s,
            "{:<16} d={} {:<8} n={:<4} {:<8} psnr={}",
            r.function,
            r.d,
            r.method,
            r.n,
            noise_label(r.bsnr_db),
            if r.is_ok() {
                short_psnr(r.psnr_mean)
            } else {
                r.status.clone()
            }
        );
    }
    s
}
