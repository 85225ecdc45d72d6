//! Integral functionals of a computed solution paired with the test
//! functions:
//!
//! ```text
//! G(t) = ∫ |u(x,t)|ᵖ Φ_β(x,t) dx
//! H(t) = ∫₀ᵗ (t−s)(1+s) G(s) ds
//! J(t) = ∫₀ᵗ (1+s)^{−3} H(s) ds
//! ```
//!
//! together with checks of the identities that tie them to the data, and
//! model ODEs whose blowup time scales like the lifespan.

use std::cell::RefCell;
use std::collections::BTreeMap;

use libm::tgamma as gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{admissible_set, classify_regime, holder_conjugate, RegimeTag, CRITICAL_TOL};
use crate::quadrature::{cumulative_trapezoid, gauss_legendre};
use crate::regression::linear_fit;
use crate::testfunc::TestFunctionFamily;
use crate::wavesolver::{ModelParams, Snapshot};
use crate::ProblemClass;

/// Area of the unit sphere in `ℝᴺ`, `2π^{N/2}/Γ(N/2)`.
pub fn sphere_area(n: u32) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Trapezoid weights for `∫_{ℝᴺ} v(|x|) dx` on nodes `j·dr`, for a
/// function that vanishes past the last node.
pub fn radial_weights(len: usize, dr: f64, n: u32) -> Vec<f64> {
    let area = sphere_area(n);
    (0..len)
        .map(|j| {
            let w = if j == 0 { 0.5 * dr } else { dr };
            area * w * (j as f64 * dr).powi(n as i32 - 1)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalTrace {
    pub times: Vec<f64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
    pub beta: f64,
    pub quadrature_meta: BTreeMap<String, f64>,
}

impl FunctionalTrace {
    /// Trace with given `G` samples and `H`, `J` filled in.
    pub fn from_g(times: Vec<f64>, g: Vec<f64>, beta: f64) -> Self {
        let mut trace = FunctionalTrace {
            h: vec![0.0; times.len()],
            j: vec![0.0; times.len()],
            times,
            g,
            beta,
            quadrature_meta: BTreeMap::new(),
        };
        compute_h_j(&mut trace);
        trace
    }
}

/// `Φ_β` on the first `len` nodes at time `t`.
fn phi_on_nodes(fam: &TestFunctionFamily, len: usize, dr: f64, t: f64) -> Result<Vec<f64>> {
    (0..len).map(|j| fam.phi(j as f64 * dr, t)).collect()
}

/// Number of leading nodes inside `Q₁`; errors if `u` is not negligible past them.
fn cone_len(s: &Snapshot, dr: f64) -> Result<usize> {
    let inside = s
        .values
        .iter()
        .enumerate()
        .take_while(|(j, _)| (*j as f64) * dr < 1.0 + s.t)
        .count();
    if let Some(k) = s.values[inside..].iter().position(|v| v.abs() > 1e-12) {
        return Err(Error::Domain {
            r: (inside + k) as f64 * dr,
            t: s.t,
        });
    }
    Ok(inside)
}

/// `G(t) = ∫|u|ᵖΦ_β dx` on every snapshot; `H` and `J` are filled too.
pub fn compute_g(snapshots: &[Snapshot], dr: f64, fam: &TestFunctionFamily, p: f64) -> Result<FunctionalTrace> {
    let mut times = Vec::with_capacity(snapshots.len());
    let mut g = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        let len = cone_len(s, dr)?;
        let w = radial_weights(len, dr, fam.n);
        let phi = phi_on_nodes(fam, len, dr, s.t)?;
        let val: f64 = (0..len).map(|j| w[j] * s.values[j].abs().powf(p) * phi[j]).sum();
        times.push(s.t);
        g.push(val);
    }
    let mut trace = FunctionalTrace::from_g(times, g, fam.beta);
    trace.quadrature_meta.insert("dr".into(), dr);
    trace.quadrature_meta.insert("snapshots".into(), snapshots.len() as f64);
    Ok(trace)
}

/// `H = ∫₀ᵗ∫₀^τ (1+s)G(s) ds dτ` and `J = ∫₀ᵗ (1+s)^{−3}H(s) ds`.
pub fn compute_h_j(trace: &mut FunctionalTrace) {
    let t = &trace.times;
    let inner: Vec<f64> = t.iter().zip(&trace.g).map(|(s, g)| (1.0 + s) * g).collect();
    let once = cumulative_trapezoid(t, &inner);
    trace.h = cumulative_trapezoid(t, &once);
    let weighted: Vec<f64> = t.iter().zip(&trace.h).map(|(s, h)| h / (1.0 + s).powi(3)).collect();
    trace.j = cumulative_trapezoid(t, &weighted);
}

/// `H` by direct quadrature of the `(t−s)` kernel at each sample.
pub fn h_by_kernel(trace: &FunctionalTrace) -> Vec<f64> {
    let t = &trace.times;
    (0..t.len())
        .map(|k| {
            let ys: Vec<f64> = (0..=k).map(|i| (t[k] - t[i]) * (1.0 + t[i]) * trace.g[i]).collect();
            crate::quadrature::trapezoid(&t[..=k], &ys)
        })
        .collect()
}

fn sample_indices(len: usize, max_samples: usize) -> Vec<usize> {
    let stride = len.div_ceil(max_samples).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if len > 0 && idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

/// Max over samples of `|(1+t)²J(t) − ½∫₀ᵗ(t−s)²G(s)ds|`, the latter by
/// direct kernel quadrature, relative to the largest value of the right
/// side. Both sides vanish like `t³` at the origin, so a pointwise ratio
/// there measures only the `O(1/k²)` relative error of any trapezoid rule
/// on the first `k` cells.
pub fn check_trick_identity(trace: &FunctionalTrace) -> f64 {
    let t = &trace.times;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in sample_indices(t.len(), 400) {
        let ys: Vec<f64> = (0..=k).map(|i| 0.5 * (t[k] - t[i]).powi(2) * trace.g[i]).collect();
        let rhs = crate::quadrature::trapezoid(&t[..=k], &ys);
        let lhs = (1.0 + t[k]).powi(2) * trace.j[k];
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(rhs.abs()).max(lhs.abs());
    }
    if scale > 0.0 {
        worst / scale
    } else {
        0.0
    }
}

/// `E_{β,0}` and `E_{β,1}` for unscaled data `f`, `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataMoments {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    pub beta: f64,
}

fn moment_integrands(mp: &ModelParams, fam: &TestFunctionFamily, r: f64) -> Result<(f64, f64)> {
    let (f, g) = mp.data_at(r);
    if f == 0.0 && g == 0.0 {
        return Ok((0.0, 0.0));
    }
    let z = r * r;
    let psi = fam.psi(z)?;
    let raised = fam.raised().psi(z)?;
    let e0 = f * psi;
    let e1 = g * psi + f * (fam.beta * raised + (fam.mu - 1.0) * psi);
    Ok((e0, e1))
}

fn check_moment_sign(m: DataMoments, fam: &TestFunctionFamily) -> Result<DataMoments> {
    if fam.beta - 1.0 + fam.mu > 0.0 && !(m.e1 > 0.0) {
        return Err(Error::PositivityViolated { value: m.e1 });
    }
    Ok(m)
}

/// Moments by composite Gauss–Legendre over `[0, r0]`.
pub fn compute_data_moments(mp: &ModelParams, fam: &TestFunctionFamily) -> Result<DataMoments> {
    let area = sphere_area(fam.n);
    let failure = RefCell::new(None);
    let integrate = |pick: fn((f64, f64)) -> f64| {
        gauss_legendre(
            |r| match moment_integrands(mp, fam, r) {
                Ok(v) => area * pick(v) * r.powi(fam.n as i32 - 1),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            0.0,
            mp.r0,
            64,
            10,
        )
    };
    let e0 = integrate(|v| v.0);
    let e1 = integrate(|v| v.1);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    check_moment_sign(DataMoments { e0, e1, beta: fam.beta }, fam)
}

/// Moments with the same radial trapezoid the functionals use.
pub fn grid_data_moments(mp: &ModelParams, dr: f64, len: usize, fam: &TestFunctionFamily) -> Result<DataMoments> {
    let w = radial_weights(len, dr, fam.n);
    let (mut e0, mut e1) = (0.0, 0.0);
    for (j, wj) in w.iter().enumerate() {
        let (a, b) = moment_integrands(mp, fam, j as f64 * dr)?;
        e0 += wj * a;
        e1 += wj * b;
    }
    check_moment_sign(DataMoments { e0, e1, beta: fam.beta }, fam)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseIdentityReport {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub gap_at_zero: f64,
    pub max_rel_gap: f64,
}

/// `∫₀ᵗ(t−s)v(s)ds` at every sample.
fn first_moment(times: &[f64], v: &[f64]) -> Vec<f64> {
    let once = cumulative_trapezoid(times, v);
    cumulative_trapezoid(times, &once)
}

fn lp_norm(values: &[f64], w: &[f64], p: f64) -> f64 {
    values
        .iter()
        .zip(w)
        .map(|(u, w)| w * u.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Compares both sides of
///
/// ```text
/// εE₀ + εE₁t + ∫₀ᵗ(t−s)G ds = ∫u(t)Φ_β(t)dx + ∫₀ᵗ(1+s)^{−β}∫u(s)ψ̃_β(|x|²/(1+s)²)dx ds
/// ```
///
/// With `source == false` the `G` term is dropped, matching a linear run.
pub fn check_base_identity(
    trace: &FunctionalTrace,
    moments: &DataMoments,
    eps: f64,
    snapshots: &[Snapshot],
    dr: f64,
    fam: &TestFunctionFamily,
    source: bool,
) -> Result<BaseIdentityReport> {
    if trace.times.len() != snapshots.len() {
        return Err(Error::InvalidParams("trace and snapshots differ in length".into()));
    }
    let times = trace.times.clone();
    let mut pairing = Vec::with_capacity(times.len());
    let mut tilde = Vec::with_capacity(times.len());
    for s in snapshots {
        let len = cone_len(s, dr)?;
        let w = radial_weights(len, dr, fam.n);
        let scale = 1.0 + s.t;
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..len {
            let r = j as f64 * dr;
            let u = s.values[j];
            if u == 0.0 {
                continue;
            }
            a += w[j] * u * fam.phi(r, s.t)?;
            b += w[j] * u * fam.psi_tilde((r / scale) * (r / scale))?;
        }
        pairing.push(a);
        tilde.push(scale.powf(-fam.beta) * b);
    }
    let tilde_int = cumulative_trapezoid(&times, &tilde);
    let g_term = if source {
        first_moment(&times, &trace.g)
    } else {
        vec![0.0; times.len()]
    };
    let lhs: Vec<f64> = times
        .iter()
        .zip(&g_term)
        .map(|(t, gt)| eps * moments.e0 + eps * moments.e1 * t + gt)
        .collect();
    let rhs: Vec<f64> = pairing.iter().zip(&tilde_int).map(|(a, b)| a + b).collect();
    let rel = |k: usize| (lhs[k] - rhs[k]).abs() / lhs[k].abs().max(rhs[k].abs()).max(f64::MIN_POSITIVE);
    let max_rel_gap = (0..times.len()).map(rel).fold(0.0, f64::max);
    Ok(BaseIdentityReport {
        gap_at_zero: if times.is_empty() { 0.0 } else { rel(0) },
        times,
        lhs,
        rhs,
        max_rel_gap,
    })
}

/// Fitted constants of the two upper bounds for the data-plus-source
/// functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Base2Report {
    pub q: f64,
    pub beta_i: f64,
    /// Smallest `C₁` making bound (i) hold over the run; `None` when both
    /// sides vanish.
    pub c1_i: Option<f64>,
    pub beta_0: Option<f64>,
    pub c1_ii: Option<f64>,
    /// Min over snapshots of the relative slack in Hölder's inequality for
    /// `∫uΦ_β`; negative values would indicate a quadrature defect.
    pub holder_min_gap: f64,
}

fn lp_norms(snapshots: &[Snapshot], dr: f64, n: u32, p: f64) -> Vec<f64> {
    snapshots
        .iter()
        .map(|s| lp_norm(&s.values, &radial_weights(s.values.len(), dr, n), p))
        .collect()
}

fn max_ratio(num: &[f64], den: &[f64]) -> Option<f64> {
    num.iter()
        .zip(den)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| a / b)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
}

/// Fits `C₁` in both upper bounds and checks Hölder's inequality.
/// `β = (N+1−μ)/2 − 1/q` for bound (i), `β₀ = (N+1−μ)/2 − 1/p` for (ii).
pub fn check_base2_inequalities(snapshots: &[Snapshot], dr: f64, mp: &ModelParams, q: f64) -> Result<Base2Report> {
    let pc = mp.pc;
    let (n, mu, p) = (pc.n as f64, pc.mu, pc.p);
    if !(q > p) {
        return Err(Error::InvalidParams(format!("q = {q} must exceed p = {p}")));
    }
    let floor = (1.0 - mu).max(0.0);
    let half = (n + 1.0 - mu) / 2.0;
    let beta_i = half - 1.0 / q;
    if !(beta_i > floor) {
        return Err(Error::InvalidParams(format!(
            "beta = {beta_i} must exceed max(0, 1-mu) = {floor}"
        )));
    }
    let pp = holder_conjugate(p);
    let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let norms = lp_norms(snapshots, dr, pc.n, p);
    let len0 = snapshots.first().map_or(0, |s| s.values.len());

    let fam_i = TestFunctionFamily::new(beta_i, mu, pc.n)?;
    let trace_i = compute_g(snapshots, dr, &fam_i, p)?;
    let mom_i = grid_data_moments(mp, dr, len0, &fam_i)?;
    let g_i = first_moment(&times, &trace_i.g);
    let lhs_i: Vec<f64> = times
        .iter()
        .zip(&g_i)
        .map(|(t, g)| mp.eps * mom_i.e0 + mp.eps * mom_i.e1 * t + g)
        .collect();
    let integrand_i: Vec<f64> = times
        .iter()
        .zip(&norms)
        .map(|(s, u)| u * (1.0 + s).powf(n / pp + 1.0 - half - 1.0 / pp))
        .collect();
    let int_i = cumulative_trapezoid(&times, &integrand_i);
    let bracket_i: Vec<f64> = (0..times.len())
        .map(|k| norms[k] * (1.0 + times[k]).powf(n / pp + 1.0 - beta_i) + int_i[k])
        .collect();
    let c1_i = max_ratio(&lhs_i, &bracket_i);

    let beta_0 = half - 1.0 / p;
    let case_ii = (pc.n >= 2 || (mu > 0.0 && p > 2.0 / mu)) && beta_0 > floor;
    let (beta_0, c1_ii) = if case_ii {
        let fam0 = TestFunctionFamily::new(beta_0, mu, pc.n)?;
        let trace0 = compute_g(snapshots, dr, &fam0, p)?;
        let lhs = first_moment(&times, &trace0.g);
        let integrand: Vec<f64> = times
            .iter()
            .zip(&norms)
            .map(|(s, u)| u * (1.0 + s).powf(n / pp - beta_0) * (1.0 + s).ln().powf(1.0 / pp))
            .collect();
        let int = cumulative_trapezoid(&times, &integrand);
        let bracket: Vec<f64> = (0..times.len())
            .map(|k| norms[k] * (1.0 + times[k]).powf(n / pp + 1.0 - beta_0) + int[k])
            .collect();
        (Some(beta_0), max_ratio(&lhs, &bracket))
    } else {
        (None, None)
    };

    let mut holder_min_gap = f64::INFINITY;
    for (s, norm) in snapshots.iter().zip(&norms) {
        let len = cone_len(s, dr)?;
        let w = radial_weights(len, dr, pc.n);
        let phi = phi_on_nodes(&fam_i, len, dr, s.t)?;
        let lhs: f64 = (0..len).map(|j| w[j] * s.values[j] * phi[j]).sum();
        let phi_norm = lp_norm(&phi, &w, pp);
        let rhs = norm * phi_norm;
        if rhs > 0.0 {
            holder_min_gap = holder_min_gap.min((rhs - lhs) / rhs);
        }
    }
    Ok(Base2Report {
        q,
        beta_i,
        c1_i,
        beta_0,
        c1_ii,
        holder_min_gap,
    })
}

/// Default `β` for a run: `(N+1−μ)/2 − (sup S_N − δ′)` in the subcritical
/// range, `β₀ = (N+1−μ)/2 − 1/p` in the critical one.
pub fn default_beta(pc: &ProblemClass, delta: f64) -> Result<f64> {
    let half = (pc.n as f64 + 1.0 - pc.mu) / 2.0;
    let regime = classify_regime(pc, CRITICAL_TOL);
    match regime.tag {
        RegimeTag::Subcritical => Ok(half - (admissible_set(pc)?.sup_value - delta)),
        RegimeTag::Critical => Ok(half - 1.0 / pc.p),
        RegimeTag::OutsideTheorem => Err(Error::OutsideTheorem {
            n: pc.n,
            mu: pc.mu,
            p: pc.p,
            reason: regime.branch.label().to_string(),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OdeCase {
    /// `C Hᵖ ≤ H″ + c H′/σ`, `H ≥ εᵖCσ²`.
    PowerCaseI,
    /// `C σ^{1−p} Hᵖ ≤ H″ + 2H′`, `H ≥ εᵖCσ`.
    LogCaseII,
}

/// The comparison ODE is solved for `H = h_ε(σ) + K` with the lower bound
/// `h_ε` (`εᵖCσ²` or `εᵖCσ`) and
///
/// ```text
/// (i)  K″ + cK′/σ = C Hᵖ        (ii)  K″ + 2K′ = C σ^{1−p} Hᵖ
/// ```
///
/// from `K = K′ = 0`, so `H` meets the inequality and both lower bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupOdeProblem {
    pub kind: OdeCase,
    pub p: f64,
    /// `C`.
    pub c_big: f64,
    /// `c`, the coefficient of `H′/σ` in case (i).
    pub c_small: f64,
    pub sigma0: f64,
    pub h_cap: f64,
    pub sigma_cap: f64,
}

impl BlowupOdeProblem {
    pub fn new(kind: OdeCase, p: f64) -> Self {
        BlowupOdeProblem {
            kind,
            p,
            c_big: 1.0,
            c_small: 1.0,
            sigma0: 1e-3,
            h_cap: 1e12,
            sigma_cap: 1e300,
        }
    }

    pub fn expected_slope(&self) -> f64 {
        match self.kind {
            OdeCase::PowerCaseI => -(self.p - 1.0) / 2.0,
            OdeCase::LogCaseII => -self.p * (self.p - 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(Error::InvalidParams(format!("p must be > 1, got {}", self.p)));
        }
        if !(self.c_big > 0.0 && self.c_small >= 0.0 && self.sigma0 > 0.0) {
            return Err(Error::InvalidParams("C, c and sigma0 must be positive".into()));
        }
        Ok(())
    }

    fn floor(&self, eps: f64, sigma: f64) -> (f64, f64) {
        let a = eps.powf(self.p) * self.c_big;
        match self.kind {
            OdeCase::PowerCaseI => (a * sigma * sigma, 2.0 * a * sigma),
            OdeCase::LogCaseII => (a * sigma, a),
        }
    }

    fn source(&self, sigma: f64, h: f64) -> f64 {
        let hp = h.powf(self.p);
        match self.kind {
            OdeCase::PowerCaseI => self.c_big * hp,
            OdeCase::LogCaseII => self.c_big * sigma.powf(1.0 - self.p) * hp,
        }
    }
}

/// First `σ` at which `H` exceeds `h_cap·max(1, h_ε(σ))`. The relative
/// form matters in case (ii) with large `p`, where the lower bound itself
/// passes any fixed cap before blowup.
pub fn blowup_sigma(prob: &BlowupOdeProblem, eps: f64) -> Result<f64> {
    prob.validate()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("eps must be > 0, got {eps}")));
    }
    let mut sigma = prob.sigma0;
    let (mut k, mut kp) = (0.0f64, 0.0f64);
    let total = |sigma: f64, k: f64| prob.floor(eps, sigma).0 + k;
    loop {
        let h = total(sigma, k);
        if h > prob.h_cap * prob.floor(eps, sigma).0.max(1.0) {
            return Ok(sigma);
        }
        if sigma > prob.sigma_cap || !h.is_finite() {
            return Err(Error::NoBlowup {
                eps,
                cap: prob.sigma_cap,
            });
        }
        let hp = prob.floor(eps, sigma).1 + kp;
        let mut ds = 0.05 * sigma;
        if hp > 0.0 {
            ds = ds.min(0.05 * h / hp);
        }
        // (i) stays non-stiff; (ii) handles 2K′ exactly over the step
        match prob.kind {
            OdeCase::PowerCaseI => {
                let c = prob.c_small;
                let f = |s: f64, k: f64, kp: f64| (kp, prob.source(s, total(s, k)) - c * kp / s);
                let (a1, b1) = f(sigma, k, kp);
                let (a2, b2) = f(sigma + 0.5 * ds, k + 0.5 * ds * a1, kp + 0.5 * ds * b1);
                let (a3, b3) = f(sigma + 0.5 * ds, k + 0.5 * ds * a2, kp + 0.5 * ds * b2);
                let (a4, b4) = f(sigma + ds, k + ds * a3, kp + ds * b3);
                k += ds / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                kp += ds / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            }
            OdeCase::LogCaseII => {
                let decay = (-2.0 * ds).exp();
                let relax = -(-2.0 * ds).exp_m1();
                // K′ ← e^{−2Δ}K′ + (1−e^{−2Δ})F/2, K by the matching exact integral
                let advance = |f: f64| {
                    let kp_new = decay * kp + relax * f / 2.0;
                    let k_new = k + f / 2.0 * ds + (kp - f / 2.0) * relax / 2.0;
                    (k_new, kp_new)
                };
                let f0 = prob.source(sigma, total(sigma, k));
                let (k_pred, _) = advance(f0);
                let f1 = prob.source(sigma + ds, total(sigma + ds, k_pred));
                let (k_new, kp_new) = advance(0.5 * (f0 + f1));
                k = k_new;
                kp = kp_new;
            }
        }
        sigma += ds;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeScalingFit {
    pub problem: BlowupOdeProblem,
    pub eps: Vec<f64>,
    pub sigma_star: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rms_residual: f64,
    pub expected_slope: f64,
    pub relative_error: f64,
}

/// Blowup `σ*` for each `ε` and the fit of `log σ*` against `log ε`.
pub fn blowup_ode_demo(prob: &BlowupOdeProblem, eps_list: &[f64]) -> Result<OdeScalingFit> {
    if eps_list.len() < 2 {
        return Err(Error::InvalidParams("need at least two eps values".into()));
    }
    let lo = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || (hi / lo).log10() < 1.5 - 1e-12 {
        return Err(Error::InvalidParams(
            "eps values must be positive and span at least 1.5 decades".into(),
        ));
    }
    let sigma_star = eps_list
        .iter()
        .map(|&e| blowup_sigma(prob, e))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = sigma_star.iter().map(|s| s.ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::InsufficientData("eps values must be distinct".into()))?;
    let expected = prob.expected_slope();
    Ok(OdeScalingFit {
        problem: *prob,
        eps: eps_list.to_vec(),
        sigma_star,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        rms_residual: fit.rms_residual,
        expected_slope: expected,
        relative_error: ((fit.slope - expected) / expected).abs(),
    })
}

/// `σ = (2/λ)(1+t)^{λ/2}`.
pub fn sigma_power(t: f64, lambda: f64) -> f64 {
    2.0 / lambda * (1.0 + t).powf(lambda / 2.0)
}

pub fn time_from_sigma_power(sigma: f64, lambda: f64) -> f64 {
    (lambda * sigma / 2.0).powf(2.0 / lambda) - 1.0
}

/// `σ = log(1+t)`.
pub fn sigma_log(t: f64) -> f64 {
    t.ln_1p()
}

pub fn time_from_sigma_log(sigma: f64) -> f64 {
    sigma.exp_m1()
}

/// `n` log-spaced values from `a` to `b`.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp())
        .collect()
}
