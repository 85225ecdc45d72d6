//! ε-sweeps of the solver, lifespan fits and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{classify_regime, exponent_report, ExponentReport, ProblemClass, RegimeTag, CRITICAL_TOL};
use crate::regression::linear_fit;
use crate::wavesolver::{combine_levels, run_level, BlowupReport, ModelParams, RunStatus, SolverSettings};

pub const DEFAULT_MIN_DECADES: f64 = 0.7;
pub const MIN_FIT_POINTS: usize = 4;
/// Relative slack on the subcritical slope comparison.
pub const SLOPE_TOLERANCE: f64 = 0.15;
/// Relative slack on monotonicity of `T_refined` in ε.
pub const MONOTONE_SLACK: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mp_template: ModelParams,
    /// Strictly decreasing.
    pub eps_values: Vec<f64>,
    #[serde(rename = "T_cap")]
    pub t_cap: f64,
    #[serde(default = "default_levels")]
    pub grid_levels: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Coarsest spacing; defaults to `r0/64`.
    #[serde(default)]
    pub dr: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_threshold")]
    pub blow_threshold: f64,
}

fn default_levels() -> usize {
    2
}
fn default_cfl() -> f64 {
    0.9
}
fn default_threshold() -> f64 {
    1e6
}

impl SweepConfig {
    pub fn new(mp_template: ModelParams, eps_values: Vec<f64>, t_cap: f64) -> Self {
        SweepConfig {
            mp_template,
            eps_values,
            t_cap,
            grid_levels: 2,
            output_dir: None,
            seed: 0,
            dr: None,
            cfl: 0.9,
            blow_threshold: 1e6,
        }
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            t_max: self.t_cap,
            dr: self.dr,
            cfl: self.cfl,
            blow_threshold: self.blow_threshold,
            ..SolverSettings::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_values.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParams("eps values must be positive and finite".into()));
        }
        if self.eps_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParams("eps values must be strictly decreasing".into()));
        }
        if self.grid_levels < 2 {
            return Err(Error::InvalidParams(format!(
                "grid_levels must be >= 2, got {}",
                self.grid_levels
            )));
        }
        self.settings().validate()?;
        if let Some(&eps) = self.eps_values.first() {
            ModelParams {
                eps,
                ..self.mp_template.clone()
            }
            .validate()?;
        } else {
            self.mp_template.pc.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub eps: f64,
    /// NaN (written as `null`) when the run failed.
    #[serde(rename = "T_est", deserialize_with = "nan_from_null")]
    pub t_est: f64,
    #[serde(rename = "T_refined", deserialize_with = "nan_from_null")]
    pub t_refined: f64,
    pub status: RunStatus,
    pub wall_time: f64,
    pub report: Option<BlowupReport>,
    /// Set when the integration itself failed.
    pub error: Option<String>,
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Runs `levels` grids, each half the spacing of the last, and combines
/// the two finest.
pub fn run_levels(mp: &ModelParams, settings: &SolverSettings, levels: usize) -> Result<BlowupReport> {
    mp.validate()?;
    settings.validate()?;
    let dr0 = settings.grid_for(mp).dr;
    let runs: Vec<_> = (0..levels.max(2))
        .into_par_iter()
        .map(|k| {
            let s = SolverSettings {
                dr: Some(dr0 / (1u64 << k) as f64),
                ..settings.clone()
            };
            run_level(mp, s.grid_for(mp), &s, None, None)
        })
        .collect::<Result<_>>()?;
    let n = runs.len();
    Ok(combine_levels(&runs[n - 2], &runs[n - 1]))
}

fn run_one(cfg: &SweepConfig, eps: f64) -> Result<LifespanRecord> {
    let mp = ModelParams {
        eps,
        ..cfg.mp_template.clone()
    };
    let start = Instant::now();
    let outcome = run_levels(&mp, &cfg.settings(), cfg.grid_levels);
    let wall_time = start.elapsed().as_secs_f64();
    match outcome {
        Ok(rep) => Ok(LifespanRecord {
            eps,
            t_est: rep.t_est,
            t_refined: rep.t_refined,
            status: rep.status,
            wall_time,
            report: Some(rep),
            error: None,
        }),
        Err(e) if e.is_numerical() => Ok(LifespanRecord {
            eps,
            t_est: f64::NAN,
            t_refined: f64::NAN,
            status: RunStatus::Diverged,
            wall_time,
            report: None,
            error: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

pub fn record_path(dir: &Path, eps: f64) -> PathBuf {
    dir.join("records").join(format!("eps_{eps:e}.json"))
}

fn load_record(path: &Path, eps: f64) -> Option<LifespanRecord> {
    let text = fs::read_to_string(path).ok()?;
    let rec: LifespanRecord = serde_json::from_str(&text).ok()?;
    (rec.eps == eps).then_some(rec)
}

/// Writes through a temporary file so a crash never leaves a half record.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// One record per ε, in the order of `eps_values`. With an output
/// directory, records are written as they finish and reused on rerun.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<LifespanRecord>> {
    cfg.validate()?;
    cfg.eps_values
        .par_iter()
        .with_max_len(1)
        .map(|&eps| {
            let path = cfg.output_dir.as_deref().map(|d| record_path(d, eps));
            if let Some(rec) = path.as_deref().and_then(|p| load_record(p, eps)) {
                return Ok(rec);
            }
            let rec = run_one(cfg, eps)?;
            if let Some(p) = &path {
                write_json(p, &rec)?;
            }
            Ok(rec)
        })
        .collect()
}

/// True when `T_refined` does not grow with ε beyond the relative slack,
/// comparing blowup records pairwise.
pub fn is_monotone(records: &[LifespanRecord], slack: f64) -> bool {
    let mut pts: Vec<(f64, f64)> = blowups(records).map(|r| (r.eps, r.t_refined)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.iter()
        .enumerate()
        .all(|(i, &(_, ti))| pts[i + 1..].iter().all(|&(_, tj)| tj <= ti * (1.0 + slack)))
}

fn blowups(records: &[LifespanRecord]) -> impl Iterator<Item = &LifespanRecord> {
    records
        .iter()
        .filter(|r| r.status == RunStatus::BlowupDetected && r.t_refined.is_finite() && r.t_refined > 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    PowerLaw,
    DoubleExp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// θ for subcritical classes, p(p−1) for critical ones.
    pub theory_exponent: Option<f64>,
    /// `None` when the class is outside the theorem.
    pub consistent: Option<bool>,
    pub regime: RegimeTag,
    pub points: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    pub decades: f64,
    /// Power-law fit kept for comparison when the model is `DoubleExp`.
    pub power_law_r_squared: Option<f64>,
}

/// Least squares of `log T` (or `log log T` in the critical case)
/// against `log(1/ε)` over the blowup records.
pub fn fit_lifespan(records: &[LifespanRecord], pc: &ProblemClass) -> Result<ScalingFit> {
    fit_lifespan_with(records, pc, DEFAULT_MIN_DECADES)
}

pub fn fit_lifespan_with(records: &[LifespanRecord], pc: &ProblemClass, min_decades: f64) -> Result<ScalingFit> {
    let used: Vec<&LifespanRecord> = blowups(records).collect();
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} blowup records, need {MIN_FIT_POINTS}",
            used.len()
        )));
    }
    let eps_min = used.iter().map(|r| r.eps).fold(f64::INFINITY, f64::min);
    let eps_max = used.iter().map(|r| r.eps).fold(0.0, f64::max);
    let decades = (eps_max / eps_min).log10();
    if decades < min_decades {
        return Err(Error::InsufficientData(format!(
            "eps spans {decades:.3} decades, need {min_decades}"
        )));
    }
    let x: Vec<f64> = used.iter().map(|r| -r.eps.ln()).collect();
    let log_t: Vec<f64> = used.iter().map(|r| r.t_refined.ln()).collect();
    let power = linear_fit(&x, &log_t).ok_or_else(|| Error::InsufficientData("degenerate eps values".into()))?;
    let regime = classify_regime(pc, CRITICAL_TOL);
    let base = ScalingFit {
        model: FitModel::PowerLaw,
        slope: power.slope,
        intercept: power.intercept,
        r_squared: power.r_squared,
        theory_exponent: None,
        consistent: None,
        regime: regime.tag,
        points: used.len(),
        eps_min,
        eps_max,
        decades,
        power_law_r_squared: None,
    };
    match regime.tag {
        RegimeTag::OutsideTheorem => Ok(base),
        RegimeTag::Subcritical => {
            let theta = crate::exponents::theta_exponent(pc)?;
            Ok(ScalingFit {
                theory_exponent: Some(theta),
                consistent: Some(power.slope <= theta * (1.0 + SLOPE_TOLERANCE)),
                ..base
            })
        }
        RegimeTag::Critical => {
            let theory = Some(pc.p * (pc.p - 1.0));
            if log_t.iter().any(|v| *v <= 0.0) {
                // log log T undefined: the double-exponential model cannot be fitted.
                return Ok(ScalingFit {
                    theory_exponent: theory,
                    consistent: Some(false),
                    ..base
                });
            }
            let loglog: Vec<f64> = log_t.iter().map(|v| v.ln()).collect();
            let dexp =
                linear_fit(&x, &loglog).ok_or_else(|| Error::InsufficientData("degenerate eps values".into()))?;
            Ok(ScalingFit {
                model: FitModel::DoubleExp,
                slope: dexp.slope,
                intercept: dexp.intercept,
                r_squared: dexp.r_squared,
                theory_exponent: theory,
                consistent: Some(dexp.r_squared > power.r_squared),
                power_law_r_squared: Some(power.r_squared),
                ..base
            })
        }
    }
}

/// Contents of `fit.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub comparison: String,
    pub fit: Option<ScalingFit>,
    pub consistent: Option<bool>,
    pub note: Option<String>,
    pub monotone: bool,
    pub problem: ProblemClass,
    pub theory: Option<TheoryValues>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryValues {
    pub gamma: f64,
    pub p_fujita: f64,
    pub p_strauss: Option<f64>,
    pub mu_star: f64,
    #[serde(rename = "sup_S")]
    pub sup_s: Option<f64>,
    pub theta: Option<f64>,
    pub regime: RegimeTag,
    pub branch: String,
}

impl From<ExponentReport> for TheoryValues {
    fn from(r: ExponentReport) -> Self {
        TheoryValues {
            gamma: r.gamma,
            p_fujita: r.p_fujita,
            p_strauss: r.p_strauss.finite(),
            mu_star: r.mu_star,
            sup_s: r.sup_s,
            theta: r.theta,
            regime: r.regime,
            branch: r.branch.label().to_string(),
        }
    }
}

pub fn fit_file(records: &[LifespanRecord], pc: &ProblemClass, fit: Result<ScalingFit>) -> FitFile {
    let (fit, note) = match fit {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    FitFile {
        comparison: "bound-consistency".into(),
        consistent: fit.as_ref().and_then(|f| f.consistent),
        fit,
        note,
        monotone: is_monotone(records, MONOTONE_SLACK),
        problem: *pc,
        theory: exponent_report(pc, CRITICAL_TOL).ok().map(Into::into),
    }
}

fn status_label(s: RunStatus) -> &'static str {
    match s {
        RunStatus::CompletedNoBlowup => "CompletedNoBlowup",
        RunStatus::BlowupDetected => "BlowupDetected",
        RunStatus::Diverged => "Diverged",
    }
}

pub fn sweep_csv(records: &[LifespanRecord]) -> String {
    let mut out = String::from("eps,T_est,T_refined,status\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", r.eps, r.t_est, r.t_refined, status_label(r.status));
    }
    out
}

/// Writes `sweep.csv`, `fit.json` and two-column files under `plotdata/`.
/// Floats use the shortest representation that parses back exactly.
pub fn emit_report(dir: &Path, records: &[LifespanRecord], fit: &FitFile) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let csv = dir.join("sweep.csv");
    write_atomic(&csv, sweep_csv(records).as_bytes())?;
    written.push(csv);
    let json = dir.join("fit.json");
    write_json(&json, fit)?;
    written.push(json);

    let plot = dir.join("plotdata");
    let mut lifespan = String::from("# eps T_refined\n");
    let mut loglog = String::from("# log(1/eps) log(T_refined)\n");
    for r in blowups(records) {
        let _ = writeln!(lifespan, "{} {}", r.eps, r.t_refined);
        let _ = writeln!(loglog, "{} {}", -r.eps.ln(), r.t_refined.ln());
    }
    let mut files = vec![("lifespan.dat", lifespan), ("loglog.dat", loglog)];
    if let Some(f) = &fit.fit {
        let mut line = format!("# log(1/eps) fitted ({:?})\n", f.model);
        for x in [-f.eps_max.ln(), -f.eps_min.ln()] {
            let _ = writeln!(line, "{} {}", x, f.intercept + f.slope * x);
        }
        files.push(("fit_line.dat", line));
    }
    for (name, body) in files {
        let p = plot.join(name);
        write_atomic(&p, body.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}
