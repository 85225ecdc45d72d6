use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use dampwave::exponents::{exponent_report, lifespan_bound, ExponentReport, LifespanBound, CRITICAL_TOL};
use dampwave::functionals::{
    blowup_ode_demo, check_base2_inequalities, check_base_identity, check_trick_identity, compute_g, default_beta,
    grid_data_moments, log_space, Base2Report, BaseIdentityReport, BlowupOdeProblem, DataMoments, OdeCase,
};
use dampwave::hypergeom::{self, ode_residual, EvalResult};
use dampwave::sweep::{
    emit_report, fit_file, fit_lifespan_with, run_sweep, write_atomic, FitFile, LifespanRecord, SweepConfig,
    DEFAULT_MIN_DECADES,
};
use dampwave::testfunc::{verify_identities, IdentityReport, VerifyOptions};
use dampwave::wavesolver::{combine_levels, integrate_levels, parse_snapshots_csv, snapshots_csv, SimulateConfig};
use dampwave::{EvalPolicy, HypergeomParams, ModelParams, ProblemClass, RunStatus, TestFunctionFamily};

use crate::config::{merge, parse_range, require};
use crate::{save_json, Ctx, Failure};

type Config = Map<String, Value>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExponentsFlags {
    #[arg(long = "N", alias = "n")]
    #[serde(rename = "N")]
    n: Option<u32>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Relative tolerance for p = p₀(N+μ).
    #[arg(long)]
    tol: Option<f64>,
    /// Evaluate the lifespan bound at this eps.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Free constant of the bound.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Serialize)]
struct ExponentsOut {
    #[serde(rename = "N")]
    n: u32,
    mu: f64,
    p: f64,
    #[serde(flatten)]
    report: ExponentReport,
    lifespan_bound: Option<LifespanBound>,
}

pub fn exponents(ctx: &Ctx, flags: &ExponentsFlags, cfg: Config) -> Result<(), Failure> {
    let f: ExponentsFlags = merge(flags, cfg)?;
    let pc = ProblemClass::new(require(f.n, "N")?, require(f.mu, "mu")?, require(f.p, "p")?)?;
    let report = exponent_report(&pc, f.tol.unwrap_or(CRITICAL_TOL))?;
    let bound = match f.eps {
        Some(eps) => Some(lifespan_bound(&pc, eps, f.delta.unwrap_or(0.0), f.c.unwrap_or(1.0))?),
        None => None,
    };
    let out = ExponentsOut {
        n: pc.n,
        mu: pc.mu,
        p: pc.p,
        report,
        lifespan_bound: bound,
    };
    ctx.save_json("exponents.json", &out)?;
    ctx.emit(&out, || {
        let r = &out.report;
        let mut s = String::new();
        let _ = writeln!(s, "N = {}, mu = {}, p = {}", pc.n, pc.mu, pc.p);
        let _ = writeln!(s, "gamma(N+mu; p) = {}", r.gamma);
        let _ = writeln!(s, "p_F(N)         = {}", r.p_fujita);
        let _ = writeln!(s, "p_0(N+mu)      = {}", r.p_strauss);
        let _ = writeln!(s, "mu*(N)         = {}", r.mu_star);
        match (r.s_interval, r.sup_s) {
            (Some([lo, hi]), Some(sup)) => {
                let _ = writeln!(s, "S_N            = ({lo}, {hi}), sup = {sup}");
            }
            _ => {
                let _ = writeln!(s, "S_N            = empty");
            }
        }
        if let Some(t) = r.theta {
            let _ = writeln!(s, "theta          = {t}");
        }
        let _ = writeln!(s, "regime         = {} ({})", r.regime, r.branch);
        if let Some(b) = &out.lifespan_bound {
            let _ = writeln!(s, "lifespan bound = {}", b.value());
        }
        s
    });
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Hyp2f1Flags {
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
    /// Evenly spaced points `lo:hi:n`, endpoints included.
    #[arg(long)]
    z_grid: Option<String>,
    #[arg(long)]
    series_tol: Option<f64>,
    #[arg(long)]
    max_terms: Option<usize>,
    #[arg(long)]
    z_split: Option<f64>,
}

#[derive(Serialize)]
struct Hyp2f1Row {
    z: f64,
    #[serde(flatten)]
    result: EvalResult,
    ode_residual: Option<f64>,
}

pub fn hyp2f1(ctx: &Ctx, flags: &Hyp2f1Flags, cfg: Config) -> Result<(), Failure> {
    let f: Hyp2f1Flags = merge(flags, cfg)?;
    let mut policy = EvalPolicy::default();
    policy.series_tol = f.series_tol.unwrap_or(policy.series_tol);
    policy.max_terms = f.max_terms.unwrap_or(policy.max_terms);
    policy.z_split = f.z_split.unwrap_or(policy.z_split);
    let params = HypergeomParams {
        policy,
        ..HypergeomParams::new(require(f.a, "a")?, require(f.b, "b")?, require(f.c, "c")?)
    };
    let zs = match (&f.z, &f.z_grid) {
        (Some(z), None) => vec![*z],
        (None, Some(g)) => {
            let (lo, hi, n) = parse_range(g)?;
            dampwave::testfunc::z_grid(lo, hi, n)
        }
        _ => return Err(Failure::Invalid("give exactly one of --z and --z-grid".into())),
    };
    let rows = zs
        .iter()
        .map(|&z| {
            let result = hypergeom::hyp2f1(&params, z)?;
            let ode_residual = (z > 0.0 && z < 1.0).then(|| ode_residual(&params, z)).transpose()?;
            Ok(Hyp2f1Row {
                z,
                result,
                ode_residual,
            })
        })
        .collect::<Result<Vec<_>, dampwave::Error>>()?;
    ctx.save_json("hyp2f1.json", &rows)?;
    ctx.emit(&rows, || {
        let mut s = String::from("z\tvalue\tterms\tmethod\tode_residual\n");
        for r in &rows {
            let res = r.ode_residual.map_or("-".to_string(), |v| format!("{v:.3e}"));
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:?}\t{}",
                r.z, r.result.value, r.result.terms_used, r.result.method, res
            );
        }
        s
    });
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyFlags {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long = "N", alias = "n")]
    #[serde(rename = "N")]
    n: Option<u32>,
    /// Random cone points for the time-derivative check.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn verify(ctx: &Ctx, flags: &VerifyFlags, cfg: Config) -> Result<(), Failure> {
    let f: VerifyFlags = merge(flags, cfg)?;
    let fam = TestFunctionFamily::new(require(f.beta, "beta")?, require(f.mu, "mu")?, require(f.n, "N")?)?;
    let mut opts = VerifyOptions::default();
    opts.samples = f.samples.unwrap_or(opts.samples);
    opts.seed = f.seed.unwrap_or(opts.seed);
    let report: IdentityReport = verify_identities(&fam, &opts)?;
    ctx.save_json("identity_checks.json", &report)?;
    ctx.emit(&report, || {
        let mut s = String::new();
        for c in &report.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            let _ = writeln!(s, "{mark} {:<28} {:.3e} (tol {:.0e})", c.name, c.max_error, c.tolerance);
        }
        match report.dual_richardson_ratio {
            Some(r) => {
                let _ = writeln!(s, "dual Richardson ratio {r:.3}");
            }
            None => {
                let _ = writeln!(
                    s,
                    "dual residual at rounding level ({:.1e})",
                    report.dual_richardson_residuals[1]
                );
            }
        }
        let _ = writeln!(s, "monotonicity gap      {:.3e}", report.monotonicity_gap);
        match (&report.bounds, &report.bounds_note) {
            (Some(b), _) => {
                let _ = writeln!(s, "bounds {:?}: [{}, {}]", b.regime, b.c_lower, b.c_upper);
            }
            (None, Some(note)) => {
                let _ = writeln!(s, "bounds skipped: {note}");
            }
            _ => {}
        }
        s
    });
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Numerical("identity checks failed".into()))
    }
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimulateFlags {
    #[arg(long = "N", alias = "n")]
    #[serde(rename = "N")]
    n: Option<u32>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    amp_f: Option<f64>,
    #[arg(long)]
    amp_g: Option<f64>,
    #[arg(long = "T-max", alias = "t-max")]
    #[serde(rename = "T_max")]
    t_max: Option<f64>,
    #[arg(long)]
    dr: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    blow_threshold: Option<f64>,
    /// Store every k-th step in snapshots.csv; 0 writes none.
    #[arg(long)]
    snapshot_every: Option<usize>,
}

pub fn simulate(ctx: &Ctx, flags: &SimulateFlags, cfg: Config) -> Result<(), Failure> {
    let sc: SimulateConfig = merge(flags, cfg)?;
    let mp = sc.model()?;
    let (coarse, fine) = integrate_levels(&mp, &sc.settings())?;
    let report = combine_levels(&coarse, &fine);
    if let Some(dir) = &ctx.output {
        save_json(&dir.join("config.json"), &sc)?;
        save_json(&dir.join("report.json"), &report)?;
        if sc.snapshot_every > 0 {
            let path = dir.join("snapshots.csv");
            write_atomic(&path, snapshots_csv(&fine.snapshots, fine.grid.dr).as_bytes())?;
        }
    }
    ctx.emit(&report, || {
        let mut s = format!("status     {:?}\n", report.status);
        let _ = writeln!(s, "T_est      {}", report.t_est);
        let _ = writeln!(s, "T_refined  {}", report.t_refined);
        let _ = writeln!(s, "peak |u|   {:.6e}", report.peak_amplitude);
        let _ = writeln!(s, "min u      {:.6e}", report.diagnostics["min_value"]);
        s
    });
    if report.status == RunStatus::Diverged {
        return Err(Failure::Numerical(format!(
            "integration diverged at t = {}",
            report.t_est
        )));
    }
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FunctionalsFlags {
    /// Output directory of a `simulate` run with snapshots.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Test-function parameter; the regime default when omitted.
    #[arg(long)]
    beta: Option<f64>,
    /// Exponent of the first data-plus-source bound; defaults to 2p.
    #[arg(long)]
    q: Option<f64>,
    /// Margin below sup S_N for the default beta.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Serialize)]
struct FunctionalsOut {
    beta: f64,
    trick_gap: f64,
    moments: DataMoments,
    base_identity: BaseIdentitySummary,
    base2: Option<Base2Report>,
    base2_note: Option<String>,
}

#[derive(Serialize)]
struct BaseIdentitySummary {
    gap_at_zero: f64,
    max_rel_gap: f64,
}

impl From<&BaseIdentityReport> for BaseIdentitySummary {
    fn from(r: &BaseIdentityReport) -> Self {
        BaseIdentitySummary {
            gap_at_zero: r.gap_at_zero,
            max_rel_gap: r.max_rel_gap,
        }
    }
}

pub fn functionals(ctx: &Ctx, flags: &FunctionalsFlags, cfg: Config) -> Result<(), Failure> {
    let f: FunctionalsFlags = merge(flags, cfg)?;
    let run = require(f.run, "run")?;
    let cfg_path = run.join("config.json");
    let sc: SimulateConfig = dampwave::sweep::read_json(&cfg_path)?;
    let mp = sc.model()?;
    let csv_path = run.join("snapshots.csv");
    let text = fs::read_to_string(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let (snaps, dr) = parse_snapshots_csv(&text)?;
    let beta = match f.beta {
        Some(b) => b,
        None => default_beta(&mp.pc, f.delta.unwrap_or(1e-3))?,
    };
    let fam = TestFunctionFamily::new(beta, mp.pc.mu, mp.pc.n)?;
    let trace = compute_g(&snaps, dr, &fam, mp.pc.p)?;
    let trick_gap = check_trick_identity(&trace);
    let moments = grid_data_moments(&mp, dr, snaps[0].values.len(), &fam)?;
    let base = check_base_identity(&trace, &moments, mp.eps, &snaps, dr, &fam, mp.nonlinear)?;
    let (base2, base2_note) = match check_base2_inequalities(&snaps, dr, &mp, f.q.unwrap_or(2.0 * mp.pc.p)) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let out = FunctionalsOut {
        beta,
        trick_gap,
        moments,
        base_identity: (&base).into(),
        base2,
        base2_note,
    };
    let dir = ctx.output.clone().unwrap_or(run);
    let mut csv = String::from("t,G,H,J\n");
    for k in 0..trace.times.len() {
        let _ = writeln!(csv, "{},{},{},{}", trace.times[k], trace.g[k], trace.h[k], trace.j[k]);
    }
    write_atomic(&dir.join("functionals.csv"), csv.as_bytes())?;
    save_json(&dir.join("identity_report.json"), &out)?;
    ctx.emit(&out, || {
        let mut s = format!("beta              {}\n", out.beta);
        let _ = writeln!(s, "trick gap         {:.3e}", out.trick_gap);
        let _ = writeln!(s, "base gap at t=0   {:.3e}", out.base_identity.gap_at_zero);
        let _ = writeln!(s, "base gap (max)    {:.3e}", out.base_identity.max_rel_gap);
        if let Some(b) = &out.base2 {
            let _ = writeln!(s, "C1 (i)            {:?}", b.c1_i);
            let _ = writeln!(s, "C1 (ii)           {:?}", b.c1_ii);
            let _ = writeln!(s, "Hoelder min gap   {:.3e}", b.holder_min_gap);
        }
        s
    });
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BlowupOdeFlags {
    /// `i` (power weight) or `ii` (logarithmic weight).
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    /// Log-spaced eps values `a:b:n`.
    #[arg(long)]
    eps_range: Option<String>,
    #[arg(long)]
    c_big: Option<f64>,
    #[arg(long)]
    c_small: Option<f64>,
}

pub fn blowup_ode(ctx: &Ctx, flags: &BlowupOdeFlags, cfg: Config) -> Result<(), Failure> {
    let f: BlowupOdeFlags = merge(flags, cfg)?;
    let kind = match require(f.case, "case")?.as_str() {
        "i" | "I" | "1" => OdeCase::PowerCaseI,
        "ii" | "II" | "2" => OdeCase::LogCaseII,
        other => return Err(Failure::Invalid(format!("case must be i or ii, got {other:?}"))),
    };
    let mut prob = BlowupOdeProblem::new(kind, require(f.p, "p")?);
    prob.c_big = f.c_big.unwrap_or(prob.c_big);
    prob.c_small = f.c_small.unwrap_or(prob.c_small);
    let (a, b, n) = parse_range(&f.eps_range.unwrap_or_else(|| "1e-5:1e-3:7".into()))?;
    if !(a > 0.0 && b > 0.0) || n < 2 {
        return Err(Failure::Invalid("eps range needs positive ends and n >= 2".into()));
    }
    let fit = blowup_ode_demo(&prob, &log_space(a, b, n))?;
    ctx.save_json("blowup_ode.json", &fit)?;
    ctx.emit(&fit, || {
        let mut s = String::from("eps\tsigma*\n");
        for (e, sg) in fit.eps.iter().zip(&fit.sigma_star) {
            let _ = writeln!(s, "{e:.6e}\t{sg:.6e}");
        }
        let _ = writeln!(
            s,
            "slope {:.6} (expected {}), r^2 {:.6}",
            fit.slope, fit.expected_slope, fit.r_squared
        );
        s
    });
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepFlags {
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    eps_values: Option<Vec<f64>>,
    #[arg(long = "T-cap", alias = "t-cap")]
    #[serde(rename = "T_cap")]
    t_cap: Option<f64>,
    #[arg(long)]
    grid_levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dr: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    blow_threshold: Option<f64>,
    #[arg(long = "N", alias = "n")]
    #[serde(rename = "N")]
    n: Option<u32>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    amp_f: Option<f64>,
    #[arg(long)]
    amp_g: Option<f64>,
    /// Least span of eps accepted by the fit.
    #[arg(long)]
    min_decades: Option<f64>,
}

const TEMPLATE_KEYS: [&str; 6] = ["N", "mu", "p", "r0", "amp_f", "amp_g"];

/// Builds the sweep config: `mp_template` from the config file, or from
/// the problem flags as a bump profile; problem flags override either.
fn sweep_config(ctx: &Ctx, flags: &SweepFlags, mut cfg: Config) -> Result<(SweepConfig, f64), Failure> {
    let mut merged: Map<String, Value> = match serde_json::to_value(flags) {
        Ok(Value::Object(m)) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    };
    let min_decades = match merged.remove("min_decades").or_else(|| cfg.remove("min_decades")) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Failure::Invalid("min_decades must be a number".into()))?,
        None => DEFAULT_MIN_DECADES,
    };
    let overrides: Map<String, Value> = TEMPLATE_KEYS
        .iter()
        .filter_map(|k| merged.remove(*k).map(|v| (k.to_string(), v)))
        .collect();
    let mut template = match cfg.remove("mp_template") {
        Some(Value::Object(t)) => t,
        Some(_) => return Err(Failure::Invalid("mp_template must be an object".into())),
        None => {
            let mp = ModelParams::bump(ProblemClass { n: 1, mu: 0.0, p: 2.0 }, 1.0, 0.5, 1.0, 0.0);
            if !TEMPLATE_KEYS[..3].iter().all(|k| overrides.contains_key(*k)) {
                return Err(Failure::Invalid(
                    "sweep needs mp_template in --config or --N, --mu, --p".into(),
                ));
            }
            match serde_json::to_value(mp) {
                Ok(Value::Object(t)) => t,
                _ => unreachable!("model params serialize to an object"),
            }
        }
    };
    for (k, v) in overrides {
        match k.as_str() {
            "N" | "mu" | "p" => {
                if let Some(Value::Object(pc)) = template.get_mut("pc") {
                    pc.insert(k, v);
                }
            }
            _ => {
                template.insert(k, v);
            }
        }
    }
    cfg.insert("mp_template".into(), Value::Object(template));
    if let Some(dir) = &ctx.output {
        cfg.insert("output_dir".into(), Value::String(dir.display().to_string()));
    }
    let sc: SweepConfig = merge(&merged, cfg)?;
    Ok((sc, min_decades))
}

pub fn sweep(ctx: &Ctx, flags: &SweepFlags, cfg: Config) -> Result<(), Failure> {
    let (sc, min_decades) = sweep_config(ctx, flags, cfg)?;
    let dir = require(sc.output_dir.clone(), "output")?;
    sc.validate()?;
    save_json(&dir.join("sweep_config.json"), &sc)?;
    let records = run_sweep(&sc)?;
    let pc = sc.mp_template.pc;
    let file = fit_file(&records, &pc, fit_lifespan_with(&records, &pc, min_decades));
    emit_report(&dir, &records, &file)?;
    report_sweep(ctx, &records, &file);
    Ok(())
}

#[derive(Serialize)]
struct SweepOut<'a> {
    records: &'a [LifespanRecord],
    fit: &'a FitFile,
}

fn report_sweep(ctx: &Ctx, records: &[LifespanRecord], file: &FitFile) {
    let summary: Vec<LifespanRecord> = records
        .iter()
        .map(|r| LifespanRecord {
            report: None,
            ..r.clone()
        })
        .collect();
    ctx.emit(
        &SweepOut {
            records: &summary,
            fit: file,
        },
        || {
            let mut s = String::from("eps\tT_est\tT_refined\tstatus\n");
            for r in records {
                let _ = writeln!(s, "{}\t{}\t{}\t{:?}", r.eps, r.t_est, r.t_refined, r.status);
            }
            match &file.fit {
                Some(f) => {
                    let theory = f.theory_exponent.map_or("-".to_string(), |t| format!("{t}"));
                    let consistent = f
                        .consistent
                        .map_or("n/a (outside the theorem)".to_string(), |c| c.to_string());
                    let _ = writeln!(
                        s,
                        "{:?} slope {:.4}, r^2 {:.4}, theory {theory}, bound-consistent {consistent}",
                        f.model, f.slope, f.r_squared
                    );
                }
                None => {
                    let _ = writeln!(s, "no fit: {}", file.note.as_deref().unwrap_or("-"));
                }
            }
            let _ = writeln!(s, "monotone in eps: {}", file.monotone);
            s
        },
    );
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FitFlags {
    /// Sweep output directory; defaults to --output.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long = "N", alias = "n")]
    #[serde(rename = "N")]
    n: Option<u32>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    min_decades: Option<f64>,
}

pub fn read_records(dir: &Path) -> Result<Vec<LifespanRecord>, Failure> {
    let rec_dir = dir.join("records");
    let entries = fs::read_dir(&rec_dir).map_err(|e| io_err(&rec_dir, e))?;
    let mut records = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(&rec_dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            records.push(dampwave::sweep::read_json::<LifespanRecord>(&path)?);
        }
    }
    records.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    Ok(records)
}

pub fn fit(ctx: &Ctx, flags: &FitFlags, cfg: Config) -> Result<(), Failure> {
    let f: FitFlags = merge(flags, cfg)?;
    let dir = require(f.records.or_else(|| ctx.output.clone()), "records")?;
    let records = read_records(&dir)?;
    let pc = match (f.n, f.mu, f.p) {
        (Some(n), Some(mu), Some(p)) => ProblemClass::new(n, mu, p)?,
        _ => {
            let sc: SweepConfig = dampwave::sweep::read_json(&dir.join("sweep_config.json"))?;
            let mut pc = sc.mp_template.pc;
            pc.n = f.n.unwrap_or(pc.n);
            pc.mu = f.mu.unwrap_or(pc.mu);
            pc.p = f.p.unwrap_or(pc.p);
            pc.validate()?;
            pc
        }
    };
    let outcome = fit_lifespan_with(&records, &pc, f.min_decades.unwrap_or(DEFAULT_MIN_DECADES));
    let insufficient = outcome.as_ref().err().map(|e| e.to_string());
    let file = fit_file(&records, &pc, outcome);
    emit_report(&ctx.output.clone().unwrap_or(dir), &records, &file)?;
    report_sweep(ctx, &records, &file);
    match insufficient {
        Some(msg) => Err(Failure::Invalid(msg)),
        None => Ok(()),
    }
}
