//! Config-driven experiment runner with reproducible run directories.
//!
//! A run is described by one JSON document (line comments allowed). The
//! snapshot written into the run directory plus the seed reproduce every
//! CSV/JSON body byte for byte; wall-clock metadata is segregated into
//! meta.json.

use crate::dynamics::{geodesic, krf_run, noncoercive_probe, ricci_iterate, FlowScheme, Trace};
use crate::error::{Error, Result};
use crate::functionals::{alpha_estimate, ding_mab};
use crate::lab;
use crate::model::ModelSpace;
use crate::report::{fmt_float, to_json_string, write_json, write_text};
use crate::sampling::Sampler;
use crate::solver::{Gauge, SolverConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    #[serde(default = "one")]
    pub beta0: f64,
    #[serde(default = "one")]
    pub beta_inf: f64,
    pub t: f64,
    pub n: usize,
    #[serde(default)]
    pub diagnostics: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub kind: String,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub gauge: Option<String>,
    #[serde(default)]
    pub scheme: Option<String>,
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub shifts: Option<Vec<f64>>,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    60
}
fn default_dt() -> f64 {
    0.01
}
fn default_t_end() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_count() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub run: RunBlock,
    pub sampling: SamplingBlock,
    pub output: OutputBlock,
}

/// Strip // line comments (outside strings such comments are the only kind we
/// accept) and parse.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let stripped: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with("//"))
        .collect::<Vec<_>>()
        .join("\n");
    let value: serde_json::Value = serde_json::from_str(&stripped)
        .map_err(|e| Error::InvalidConfig(format!("json parse: {e}")))?;
    serde_json::from_value(value).map_err(|e| Error::InvalidConfig(format!("schema: {e}")))
}

/// Apply dotted-key overrides like `run.dt=0.005` onto the raw JSON value.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let stripped: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with("//"))
        .collect::<Vec<_>>()
        .join("\n");
    let mut value: serde_json::Value = serde_json::from_str(&stripped)
        .map_err(|e| Error::InvalidConfig(format!("json parse: {e}")))?;
    for ov in overrides {
        let (path, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("override `{ov}` missing '='")))?;
        let leaf: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let mut cursor = &mut value;
        let parts: Vec<&str> = path.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if i + 1 == parts.len() {
                cursor[part] = leaf.clone();
            } else {
                if cursor.get(*part).is_none() {
                    cursor[part] = serde_json::json!({});
                }
                cursor = cursor.get_mut(*part).unwrap();
            }
        }
    }
    serde_json::from_value(value).map_err(|e| Error::InvalidConfig(format!("schema: {e}")))
}

pub fn build_model(cfg: &ModelConfig) -> Result<ModelSpace> {
    match cfg.kind.as_str() {
        "radial" => {
            if cfg.diagnostics {
                ModelSpace::radial_diagnostics(cfg.beta0, cfg.beta_inf, cfg.t, cfg.n)
            } else {
                ModelSpace::radial(cfg.beta0, cfg.beta_inf, cfg.t, cfg.n)
            }
        }
        "product" => ModelSpace::product(cfg.t, cfg.n),
        other => Err(Error::InvalidConfig(format!("unknown model kind `{other}`"))),
    }
}

fn gauge_of(run: &RunBlock) -> Result<Gauge> {
    match run.gauge.as_deref() {
        None | Some("none") => Ok(Gauge::None),
        Some("even") => Ok(Gauge::Even),
        Some(other) => Err(Error::InvalidConfig(format!("unknown gauge `{other}`"))),
    }
}

#[derive(Debug, Serialize)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub failure: Option<String>,
}

/// Execute one configured experiment, writing config.json, model.json, and
/// the run artifacts into the output directory. FANOLAB_OUT overrides the
/// configured directory.
pub fn run_experiment(config: &RunConfig) -> Result<RunOutcome> {
    let dir = std::env::var("FANOLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|_| PathBuf::from(&config.output.dir));
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("config.json"), config)?;
    let model = build_model(&config.model)?;
    write_json(&dir.join("model.json"), &model.provenance())?;
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let mut cfg = SolverConfig::default();
    cfg.residual_tol = config.run.tol;
    cfg.max_newton_steps = config.run.max_iter.max(1);
    let seed = config.sampling.seed;
    let count = config.sampling.count;
    let amp = config.run.amplitude.unwrap_or(0.6);
    let mut failure = None;

    match config.run.kind.as_str() {
        "ke" => {
            let gauge = gauge_of(&config.run)?;
            match crate::solver::ke_solve_traced(&model, &cfg, gauge) {
                Ok((phi, residual, newton)) => {
                    let rep = ding_mab(&model, &phi.values)?;
                    #[derive(Serialize)]
                    struct KeReport<'a> {
                        residual: f64,
                        functionals: &'a crate::functionals::FunctionalReport,
                    }
                    write_json(
                        &dir.join("report.json"),
                        &KeReport {
                            residual,
                            functionals: &rep,
                        },
                    )?;
                    write_text(&dir.join("trace.csv"), &newton.csv_body())?;
                    write_phi(&dir, &phi.values)?;
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    write_text(&dir.join("failure.txt"), &format!("{e}\n"))?;
                }
            }
        }
        "iterate" => {
            let gauge = gauge_of(&config.run)?;
            let mut sampler = Sampler::new(seed);
            let start = match gauge {
                Gauge::Even => sampler.radial_admissible_even(&model, amp)?,
                Gauge::None => sampler.radial_admissible(&model, amp)?,
            };
            let trace = ricci_iterate(
                &model,
                &start.values,
                config.run.max_iter,
                config.run.tol,
                gauge,
                &cfg,
            )?;
            write_trace(&dir, &trace, &config.output.formats)?;
            write_phi(&dir, &trace.final_phi)?;
            failure = trace.failure.clone();
        }
        "flow" => {
            let scheme = match config.run.scheme.as_deref() {
                None | Some("explicit") => FlowScheme::Explicit,
                Some("backward") => FlowScheme::Backward,
                Some(other) => {
                    return Err(Error::InvalidConfig(format!("unknown scheme `{other}`")))
                }
            };
            let mut sampler = Sampler::new(seed);
            let start = sampler.radial_positive(&model, amp, true)?;
            let trace = krf_run(
                &model,
                &start.values,
                config.run.dt,
                config.run.t_end,
                scheme,
                &cfg,
            )?;
            write_trace(&dir, &trace, &config.output.formats)?;
            write_phi(&dir, &trace.final_phi)?;
            failure = trace.failure.clone();
        }
        "geodesic" => {
            let mut sampler = Sampler::new(seed);
            let a = sampler.radial_admissible(&model, amp)?;
            let b = sampler.radial_admissible(&model, amp)?;
            let steps = config.run.steps.unwrap_or(12);
            let g = geodesic(&model, &a.values, &b.values, steps)?;
            let mut csv = String::from("s,E,Ding\n");
            for (k, (e, d)) in g.e_values.iter().zip(&g.ding_values).enumerate() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    fmt_float(k as f64 / steps as f64),
                    fmt_float(*e),
                    fmt_float(*d)
                ));
            }
            write_text(&dir.join("trace.csv"), &csv)?;
        }
        "alpha" => {
            let (lo, hi) = alpha_estimate(&model, 8, config.run.tol.max(0.004))?;
            #[derive(Serialize)]
            struct AlphaReport {
                alpha_lower: f64,
                alpha_upper: f64,
            }
            write_json(
                &dir.join("report.json"),
                &AlphaReport {
                    alpha_lower: lo,
                    alpha_upper: hi,
                },
            )?;
        }
        "verify" => {
            let mut reports = Vec::new();
            for suite in &config.run.suites {
                let rep = match suite.as_str() {
                    "ij_sandwich" => lab::verify_ij_sandwich(&model, count, seed)?,
                    "compen" => lab::verify_compen(&model, count, seed)?,
                    "quasi_triangle" => lab::verify_quasi_triangle(&model, count, seed)?,
                    "h_iterate" => lab::verify_h_iterate(1.0, count, 3)?,
                    "pinsker" => lab::verify_pinsker(count, seed)?,
                    "holder_young" => lab::verify_holder_young(&model, count, seed)?,
                    "legsci" => lab::verify_legsci(&model, count, seed)?,
                    "entropy_energy" => lab::verify_entropy_energy(
                        &model,
                        config.run.alpha.unwrap_or(0.25),
                        count,
                        seed,
                    )?,
                    "coercivity" => lab::verify_coercivity_transfer(
                        &model,
                        config.run.lambda.unwrap_or(0.5),
                        config.run.delta.unwrap_or(0.3),
                        count,
                        seed,
                        100.0,
                    )?,
                    "identities" => lab::verify_identities(&model, count, seed)?,
                    other => {
                        return Err(Error::InvalidConfig(format!("unknown suite `{other}`")))
                    }
                };
                reports.push(rep);
            }
            write_json(&dir.join("report.json"), &reports)?;
            let mut csv = String::from(lab::VerificationReport::CSV_HEADER);
            csv.push('\n');
            for r in &reports {
                csv.push_str(&r.csv_line());
                csv.push('\n');
            }
            write_text(&dir.join("summary.csv"), &csv)?;
            if reports.iter().any(|r| !r.passed()) {
                failure = Some("verification suite failed".into());
            }
        }
        "probe" => {
            let shifts = config
                .run
                .shifts
                .clone()
                .unwrap_or_else(|| vec![0.0, 1.0, 2.0, 4.0]);
            let rows = noncoercive_probe(&model, &shifts)?;
            write_json(&dir.join("report.json"), &rows)?;
            let mut csv = String::from("shift,J,Ding,Mab\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_float(r.shift),
                    fmt_float(r.j),
                    fmt_float(r.ding),
                    fmt_float(r.mab)
                ));
            }
            write_text(&dir.join("trace.csv"), &csv)?;
        }
        other => {
            return Err(Error::InvalidConfig(format!("unknown run kind `{other}`")));
        }
    }

    #[derive(Serialize)]
    struct Meta {
        started_unix: u64,
        finished_unix: u64,
    }
    let finished = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        &dir.join("meta.json"),
        &Meta {
            started_unix: started,
            finished_unix: finished,
        },
    )?;
    Ok(RunOutcome {
        run_dir: dir,
        failure,
    })
}

fn write_trace(dir: &Path, trace: &Trace, formats: &[String]) -> Result<()> {
    if formats.iter().any(|f| f == "csv") {
        write_text(&dir.join("trace.csv"), &trace.csv_body())?;
    }
    if formats.iter().any(|f| f == "json") {
        let rows: Vec<serde_json::Value> = trace
            .records
            .iter()
            .map(|r| {
                serde_json::json!({
                    "step": r.step,
                    "time": r.time,
                    "report": r.report,
                    "tv_residual": r.tv_residual,
                    "i_prev": r.i_prev,
                    "dissipation_cum": r.dissipation_cum,
                    "c2_interior": r.c2_interior,
                    "flags": r.flags,
                })
            })
            .collect();
        write_json(&dir.join("trace.json"), &rows)?;
    }
    Ok(())
}

fn write_phi(dir: &Path, phi: &[f64]) -> Result<()> {
    let mut body = String::from("phi\n");
    for v in phi {
        body.push_str(&fmt_float(*v));
        body.push('\n');
    }
    write_text(&dir.join("phi.csv"), &body)
}

fn read_phi(dir: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(dir.join("phi.csv"))?;
    text.lines()
        .skip(1)
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("phi.csv: {e}")))
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub runs: Vec<String>,
    /// Pairwise sup-norm discrepancies between sup-normalized final states.
    pub sup_discrepancies: Vec<(usize, usize, f64)>,
}

/// Merge run directories into a comparison document; no functional is
/// recomputed. Models must agree across the runs.
pub fn emit_report(run_dirs: &[PathBuf], out: &Path) -> Result<Comparison> {
    if run_dirs.is_empty() {
        return Err(Error::InvalidConfig("no run directories given".into()));
    }
    let mut provenance: Option<serde_json::Value> = None;
    let mut phis = Vec::new();
    for dir in run_dirs {
        let text = std::fs::read_to_string(dir.join("model.json"))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if let Some(prev) = &provenance {
            for key in ["kind", "beta0", "beta_inf", "t", "n"] {
                if prev.get(key) != value.get(key) {
                    return Err(Error::IncompatibleRuns(format!(
                        "field `{key}` differs: {:?} vs {:?}",
                        prev.get(key),
                        value.get(key)
                    )));
                }
            }
        } else {
            provenance = Some(value);
        }
        phis.push(read_phi(dir)?);
    }
    let norm = |p: &[f64]| -> Vec<f64> {
        let m = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        p.iter().map(|v| v - m).collect()
    };
    let mut sup_discrepancies = Vec::new();
    for i in 0..phis.len() {
        for j in i + 1..phis.len() {
            let a = norm(&phis[i]);
            let b = norm(&phis[j]);
            if a.len() != b.len() {
                return Err(Error::IncompatibleRuns("final states differ in length".into()));
            }
            let sup = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0_f64, f64::max);
            sup_discrepancies.push((i, j, sup));
        }
    }
    let cmp = Comparison {
        runs: run_dirs
            .iter()
            .map(|d| d.to_string_lossy().to_string())
            .collect(),
        sup_discrepancies,
    };
    std::fs::create_dir_all(out.parent().unwrap_or(Path::new(".")))?;
    write_text(&out.with_extension("json"), &to_json_string(&cmp)?)?;
    let mut csv = String::from("run_a,run_b,sup_discrepancy\n");
    for (i, j, s) in &cmp.sup_discrepancies {
        csv.push_str(&format!("{},{},{}\n", cmp.runs[*i], cmp.runs[*j], fmt_float(*s)));
    }
    write_text(&out.with_extension("csv"), &csv)?;
    Ok(cmp)
}

/// Exit code classification: schema/config 2, numerical 3, resource 4.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::Json(_)
        | Error::WrongModelKind { .. }
        | Error::DeltaWindow { .. }
        | Error::AlphaOutsideBracket { .. }
        | Error::NonKlt { .. }
        | Error::OddCells(_)
        | Error::TooFewCells(_)
        | Error::BadHalfWidth(_) => 2,
        Error::ResourceGuard { .. } => 4,
        Error::Io(_) => 1,
        _ => 3,
    }
}
