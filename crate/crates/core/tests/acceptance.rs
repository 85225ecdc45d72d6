//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero when a gating criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use dampwave::exponents::{exponent_report, fujita_exponent, gamma_poly, mu_star, strauss_exponent, theta_exponent};
use dampwave::functionals::{
    blowup_ode_demo, check_base_identity, check_trick_identity, compute_g, default_beta, grid_data_moments, log_space,
    BaseIdentityReport, BlowupOdeProblem, FunctionalTrace, OdeCase,
};
use dampwave::hypergeom::{hyp2f1_value, ode_residual};
use dampwave::sweep::{
    emit_report, fit_file, fit_lifespan_with, is_monotone, run_sweep, write_json, LifespanRecord, SweepConfig,
    MONOTONE_SLACK,
};
use dampwave::testfunc::{verify_identities, z_grid, VerifyOptions};
use dampwave::wavesolver::{
    check_finite_propagation, discrete_energy, run_level, snapshots_csv, LevelRun, RadialGrid, Snapshot,
};
use dampwave::{HypergeomParams, ModelParams, ProblemClass, RunStatus, SolverSettings, TestFunctionFamily};

struct Outcome {
    pass: bool,
    detail: String,
}

const BETAS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];
const MUS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

fn criterion_1() -> Outcome {
    let gamma = gamma_poly(4.0, 2.0);
    let p0_4 = strauss_exponent(4.0).finite().unwrap();
    let mu1 = mu_star(1);
    let worst = (1..=4)
        .map(|n| {
            let pf = fujita_exponent(n);
            let p0 = strauss_exponent(n as f64 + mu_star(n)).finite().unwrap();
            (pf - p0).abs()
        })
        .fold(0.0, f64::max);
    let pass = gamma == 0.0 && (p0_4 - 2.0).abs() < 1e-12 && (mu1 - 4.0 / 3.0).abs() < 1e-12 && worst < 1e-12;
    Outcome {
        pass,
        detail: format!(
            "gamma(4;2) = {gamma}, |p0(4)-2| = {:.1e}, |mu*(1)-4/3| = {:.1e}, max |pF-p0(N+mu*)| = {worst:.1e}",
            (p0_4 - 2.0).abs(),
            (mu1 - 4.0 / 3.0).abs()
        ),
    }
}

fn criterion_2() -> Outcome {
    let zs = z_grid(0.05, 0.95, 19);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for &beta in &BETAS {
        for &mu in &MUS {
            for n in 1..=3u32 {
                let params = HypergeomParams::new(beta / 2.0, (beta - 1.0 + mu) / 2.0, n as f64 / 2.0);
                for &z in &zs {
                    if hyp2f1_value(&params, z).unwrap().abs() <= 1e6 {
                        worst = worst.max(ode_residual(&params, z).unwrap().abs());
                        cases += 1;
                    }
                }
            }
        }
    }
    let mut term = 1.0;
    let mut oracle = 1.0;
    for k in 0..500 {
        let k = k as f64;
        term *= (1.0 + k) * (1.0 + k) / ((2.0 + k) * (k + 1.0)) * 0.5;
        oracle += term;
    }
    let value = hyp2f1_value(&HypergeomParams::new(1.0, 1.0, 2.0), 0.5).unwrap();
    let err_oracle = (value - oracle).abs();
    let err_closed = (value - 2.0 * 2f64.ln()).abs();
    Outcome {
        pass: worst < 1e-8 && err_oracle < 1e-10 && err_closed < 1e-10,
        detail: format!(
            "max ODE residual {worst:.2e} over {cases} points; F(1,1,2;0.5) vs 500-term oracle {err_oracle:.1e}, vs 2ln2 {err_closed:.1e}"
        ),
    }
}

fn criterion_3() -> Outcome {
    let opts = VerifyOptions::default();
    let (mut contiguous, mut time_der): (f64, f64) = (0.0, 0.0);
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut count = 0;
    let mut exact = 0;
    let mut exact_worst: f64 = 0.0;
    for &beta in &BETAS {
        for &mu in &MUS {
            for n in 1..=3u32 {
                let fam = TestFunctionFamily::new(beta, mu, n).unwrap();
                let rep = verify_identities(&fam, &opts).unwrap();
                for c in &rep.checks {
                    match c.name.as_str() {
                        "contiguous" => contiguous = contiguous.max(c.max_error),
                        "time_derivative" => time_der = time_der.max(c.max_error),
                        _ => {}
                    }
                }
                match rep.dual_richardson_ratio {
                    Some(r) => {
                        rmin = rmin.min(r);
                        rmax = rmax.max(r);
                    }
                    None => {
                        exact += 1;
                        exact_worst = exact_worst.max(rep.dual_richardson_residuals[1]);
                    }
                }
                count += 1;
            }
        }
    }
    Outcome {
        pass: contiguous < 1e-8 && time_der < 1e-7 && rmin >= 3.5 && rmax <= 4.5 && exact < count,
        detail: format!(
            "{count} families: contiguous {contiguous:.1e}, time derivative {time_der:.1e}, dual Richardson ratio in [{rmin:.3}, {rmax:.3}] over {} families; {exact} solve the stencil to rounding (residual <= {exact_worst:.1e})",
            count - exact
        ),
    }
}

struct FunctionalRun {
    trick: f64,
    base: BaseIdentityReport,
    trace: FunctionalTrace,
    snapshots: Vec<Snapshot>,
    dr: f64,
    beta: f64,
}

/// Solver run with every step stored, followed by the functional pipeline.
fn functional_run(mp: &ModelParams, t_max: f64, refine: u32) -> FunctionalRun {
    let dr = mp.r0 / 64.0 / (1u32 << refine) as f64;
    let st = SolverSettings {
        t_max,
        dr: Some(dr),
        snapshot_every: 1,
        ..Default::default()
    };
    let run = run_level(mp, st.grid_for(mp), &st, None, None).unwrap();
    assert_eq!(run.status, RunStatus::CompletedNoBlowup);
    let beta = default_beta(&mp.pc, 1e-3).unwrap();
    let fam = TestFunctionFamily::new(beta, mp.pc.mu, mp.pc.n).unwrap();
    let trace = compute_g(&run.snapshots, dr, &fam, mp.pc.p).unwrap();
    let mom = grid_data_moments(mp, dr, run.snapshots[0].values.len(), &fam).unwrap();
    let base = check_base_identity(&trace, &mom, mp.eps, &run.snapshots, dr, &fam, true).unwrap();
    FunctionalRun {
        trick: check_trick_identity(&trace),
        base,
        trace,
        snapshots: run.snapshots,
        dr,
        beta,
    }
}

fn functional_battery() -> Vec<(String, ModelParams)> {
    [(2, 0.5, 2.5), (1, 1.0, 3.0), (3, 1.0, 1.8)]
        .iter()
        .map(|&(n, mu, p)| {
            let mp = ModelParams::bump(ProblemClass::new(n, mu, p).unwrap(), 1.0, 0.5, 1.0, 1.0);
            (format!("N={n} mu={mu} p={p}"), mp)
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    let synth = |cells: usize| {
        let t: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
        FunctionalTrace::from_g(t, vec![1.0; cells + 1], 1.0)
    };
    let (coarse, fine) = (synth(1000), synth(2000));
    // (1+t)²J(t) at t = 1 against ½∫₀¹(1−s)²ds = 1/6
    let lhs = 4.0 * coarse.j[1000];
    let ratio = check_trick_identity(&coarse) / check_trick_identity(&fine);
    let gap = check_trick_identity(&coarse);
    pass &= gap < 1e-4 && (lhs - 1.0 / 6.0).abs() < 1e-6 && (3.5..=4.5).contains(&ratio);
    detail.push(format!(
        "G=1: gap {gap:.2e}, |4J(1)-1/6| {:.1e}, ratio {ratio:.3}",
        (lhs - 1.0 / 6.0).abs()
    ));
    for (label, mp) in functional_battery() {
        let coarse = functional_run(&mp, 2.0, 0).trick;
        let fine = functional_run(&mp, 2.0, 1).trick;
        let ratio = coarse / fine;
        pass &= coarse < 1e-4 && (3.5..=4.5).contains(&ratio);
        detail.push(format!("{label}: gap {coarse:.2e}, ratio {ratio:.3}"));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion_5() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for (label, mp) in functional_battery() {
        let coarse = functional_run(&mp, 2.0, 0).base;
        let fine = functional_run(&mp, 2.0, 1).base;
        let ratio = coarse.max_rel_gap / fine.max_rel_gap;
        pass &= coarse.gap_at_zero < 1e-10 && coarse.max_rel_gap < 1e-2 && ratio > 3.0;
        detail.push(format!(
            "{label}: t=0 gap {:.1e}, gap {:.2e}, refined {:.2e} (ratio {ratio:.2})",
            coarse.gap_at_zero, coarse.max_rel_gap, fine.max_rel_gap
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion_6() -> Outcome {
    let eps = log_space(1e-5, 1e-3, 7);
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for kind in [OdeCase::PowerCaseI, OdeCase::LogCaseII] {
        for p in [1.5, 2.0, 3.0] {
            let fit = blowup_ode_demo(&BlowupOdeProblem::new(kind, p), &eps).unwrap();
            worst = worst.max(fit.relative_error);
            let tag = if kind == OdeCase::PowerCaseI { "i" } else { "ii" };
            detail.push(format!("({tag}, p={p}) {:.4} vs {}", fit.slope, fit.expected_slope));
        }
    }
    Outcome {
        pass: worst < 0.1,
        detail: format!(
            "eps in [1e-5, 1e-3], worst relative error {worst:.2e}: {}",
            detail.join(", ")
        ),
    }
}

fn mms_error(n: u32, mu: f64, cells: usize) -> f64 {
    let dr = 1.0 / cells as f64;
    let grid = RadialGrid {
        dr,
        n_points: cells + 1,
    };
    let mut mp = ModelParams::bump(ProblemClass::new(n, mu, 2.0).unwrap(), 1.0, 0.5, 1.0, 0.0);
    mp.nonlinear = false;
    let st = SolverSettings {
        t_max: 0.5,
        dr: Some(dr),
        cfl: 0.5,
        margin: 0.0,
        ..Default::default()
    };
    let nf = n as f64;
    // u = e^{-t}(1 - r²)², with the forcing that makes it exact
    let exact = |r: f64, t: f64| (-t).exp() * (1.0 - r * r).powi(2);
    let forcing = move |r: f64, t: f64| {
        let s = r * r;
        (-t).exp() * ((1.0 - s).powi(2) * (1.0 - mu / (1.0 + t)) - (-4.0 * nf * (1.0 - s) + 8.0 * s))
    };
    let u0: Vec<f64> = grid.nodes().iter().map(|&r| exact(r, 0.0)).collect();
    let v0: Vec<f64> = u0.iter().map(|x| -x).collect();
    let run = run_level(&mp, grid, &st, Some((u0, v0)), Some(&forcing)).unwrap();
    let last = run.snapshots.last().unwrap();
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(j, &r)| (last.at(j) - exact(r, last.t)).abs())
        .fold(0.0, f64::max)
}

fn linear_run(n: u32, cfl: f64, t_max: f64) -> (LevelRun, ModelParams) {
    let mut mp = ModelParams::bump(ProblemClass::new(n, 0.0, 2.0).unwrap(), 1.0, 0.5, 1.0, 1.0);
    mp.nonlinear = false;
    let st = SolverSettings {
        t_max,
        cfl,
        snapshot_every: 1,
        ..Default::default()
    };
    (run_level(&mp, st.grid_for(&mp), &st, None, None).unwrap(), mp)
}

/// Returns the outcome and whether its gating part passed.
fn criterion_7() -> (Outcome, bool) {
    let ratios: Vec<f64> = (1..=3).map(|n| mms_error(n, 1.0, 32) / mms_error(n, 1.0, 64)).collect();
    let mms_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    let mut drift: f64 = 0.0;
    let mut excess_cells: f64 = f64::NEG_INFINITY;
    for n in 1..=3 {
        let (run, mp) = linear_run(n, 0.9, 3.0);
        let g = run.grid;
        let s = &run.snapshots;
        let e = |k: usize| discrete_energy(&g, n, &s[k].values, &s[k + 1].values, s[k + 1].t - s[k].t);
        drift = drift.max((e(s.len() - 2) - e(0)).abs() / e(0) / s.last().unwrap().t);
        excess_cells = excess_cells.max(check_finite_propagation(&run, mp.r0) / g.dr);
    }
    let (run1, mp1) = linear_run(1, 1.0, 3.0);
    let excess_cfl1 = check_finite_propagation(&run1, mp1.r0);
    let energy_ok = drift < 1e-6;
    let prop_ok = excess_cells <= 2.0;
    let detail = format!(
        "MMS ratios {:.3}/{:.3}/{:.3} (N=1..3); energy drift {drift:.1e} per unit time; finite-propagation excess {excess_cells:.1} cells, allowed 2{} (N=1 at cfl 1: {excess_cfl1:.1e})",
        ratios[0],
        ratios[1],
        ratios[2],
        if prop_ok { "" } else { " NOT MET: dispersive tails of the explicit scheme" },
    );
    (
        Outcome {
            pass: mms_ok && energy_ok && prop_ok,
            detail,
        },
        mms_ok && energy_ok,
    )
}

fn lifespan_config(dir: &Path) -> SweepConfig {
    let pc = ProblemClass::new(1, 1.0, 3.0).unwrap();
    let mut cfg = SweepConfig::new(
        ModelParams::bump(pc, 1.0, 0.5, 4.0, 0.0),
        vec![1.0, 0.8, 0.6, 0.45, 0.3],
        60.0,
    );
    cfg.output_dir = Some(dir.to_path_buf());
    cfg.seed = 7;
    cfg
}

/// Minimum span accepted for the ε ∈ [0.3, 1] sweep (0.52 decades).
const LIFESPAN_MIN_DECADES: f64 = 0.5;

/// Writes every report of the battery under `dir` and returns the sweep records.
fn write_battery(dir: &Path) -> Vec<LifespanRecord> {
    let cfg = lifespan_config(dir);
    let records = run_sweep(&cfg).unwrap();
    let pc = cfg.mp_template.pc;
    let file = fit_file(&records, &pc, fit_lifespan_with(&records, &pc, LIFESPAN_MIN_DECADES));
    emit_report(dir, &records, &file).unwrap();

    write_json(&dir.join("exponents.json"), &exponent_report(&pc, 1e-9).unwrap()).unwrap();
    let fam = TestFunctionFamily::new(1.2, 0.8, 2).unwrap();
    write_json(
        &dir.join("identity_checks.json"),
        &verify_identities(&fam, &VerifyOptions::default()).unwrap(),
    )
    .unwrap();
    let ode: Vec<_> = [OdeCase::PowerCaseI, OdeCase::LogCaseII]
        .iter()
        .map(|&k| blowup_ode_demo(&BlowupOdeProblem::new(k, 2.0), &log_space(1e-5, 1e-3, 7)).unwrap())
        .collect();
    write_json(&dir.join("blowup_ode.json"), &ode).unwrap();

    let (_, mp) = &functional_battery()[0];
    let run = functional_run(mp, 2.0, 0);
    fs::write(dir.join("snapshots.csv"), snapshots_csv(&run.snapshots, run.dr)).unwrap();
    let mut csv = String::from("t,G,H,J\n");
    for k in 0..run.trace.times.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            run.trace.times[k], run.trace.g[k], run.trace.h[k], run.trace.j[k]
        ));
    }
    fs::write(dir.join("functionals.csv"), csv).unwrap();
    let mut summary = BTreeMap::new();
    summary.insert("beta", run.beta);
    summary.insert("trick_gap", run.trick);
    summary.insert("base_gap_at_zero", run.base.gap_at_zero);
    summary.insert("base_max_rel_gap", run.base.max_rel_gap);
    write_json(&dir.join("identity_report.json"), &summary).unwrap();
    records
}

fn criterion_8(records: &[LifespanRecord]) -> Outcome {
    let pc = ProblemClass::new(1, 1.0, 3.0).unwrap();
    let theta = theta_exponent(&pc).unwrap();
    let blowups = records.iter().filter(|r| r.status == RunStatus::BlowupDetected).count();
    let monotone = is_monotone(records, MONOTONE_SLACK);
    let times: Vec<String> = records
        .iter()
        .map(|r| format!("T({})={:.3}", r.eps, r.t_refined))
        .collect();
    match fit_lifespan_with(records, &pc, LIFESPAN_MIN_DECADES) {
        Ok(fit) => Outcome {
            pass: blowups == records.len() && monotone && fit.consistent == Some(true),
            detail: format!(
                "{}; monotone {monotone}; growth exponent {:.3} (r^2 {:.4}) vs theta*1.15 = {:.2}",
                times.join(" "),
                fit.slope,
                fit.r_squared,
                theta * 1.15
            ),
        },
        Err(e) => Outcome {
            pass: false,
            detail: format!("{}; fit failed: {e}", times.join(" ")),
        },
    }
}

fn report_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                // per-record files carry wall-clock times
                if path.file_name().is_some_and(|n| n != "records") {
                    stack.push(path);
                }
            } else {
                out.push(path.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_9(first: &Path, second: &Path) -> Outcome {
    let a = report_files(first);
    let b = report_files(second);
    let differing: Vec<String> = a
        .iter()
        .filter(|f| fs::read(first.join(f)).ok() != fs::read(second.join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    Outcome {
        pass: a == b && differing.is_empty() && !a.is_empty(),
        detail: format!(
            "{} report files compared, {} differ {:?}",
            a.len(),
            differing.len(),
            differing
        ),
    }
}

/// Prints the criterion line; returns whether the gating part passed in time.
fn line(id: u32, title: &str, budget: f64, run: impl FnOnce() -> (Outcome, bool)) -> bool {
    let start = Instant::now();
    let (out, gate) = run();
    let secs = start.elapsed().as_secs_f64();
    let in_time = secs <= budget;
    let mark = if out.pass && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {id} [{mark}] {title}: {} ({secs:.2} s, budget {budget} s)",
        out.detail
    );
    gate && in_time
}

fn gated(out: Outcome) -> (Outcome, bool) {
    let pass = out.pass;
    (out, pass)
}

fn main() -> ExitCode {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let results = [
        line(1, "exponent calculus", 1.0, || gated(criterion_1())),
        line(2, "hypergeometric correctness", 5.0, || gated(criterion_2())),
        line(3, "test-function identities", 30.0, || gated(criterion_3())),
        line(4, "trick identity", 60.0, || gated(criterion_4())),
        line(5, "base identity", 120.0, || gated(criterion_5())),
        line(6, "blowup ODE scaling", 60.0, || gated(criterion_6())),
        line(7, "solver verification (gates on MMS and energy)", 120.0, criterion_7),
        line(8, "lifespan bound-consistency", 600.0, || {
            gated(criterion_8(&write_battery(first.path())))
        }),
        line(9, "determinism", 600.0, || {
            write_battery(second.path());
            gated(criterion_9(first.path(), second.path()))
        }),
    ];
    let failed: Vec<usize> = (1..=9).filter(|&k| !results[k - 1]).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("gating failures: {failed:?}");
        ExitCode::FAILURE
    }
}
