//! Self-similar test functions built from `₂F₁`.
//!
//! ```text
//! ψ_{β,μ}(z)    = F(β/2, (β−1+μ)/2, N/2; z)
//! Ψ_{β,μ}(x,t)  = (1+t)^{−β} ψ_{β,μ}(|x|²/(1+t)²)
//! Φ_β(x,t)      = (1+t) Ψ_{β,μ}(x,t)
//! ψ̃_β(z)        = 2β ψ_{β+2,μ−2}(z) + (μ−2) ψ_{β,μ}(z)
//! ```
//!
//! `Φ_β` solves the adjoint equation `∂ₜ²Φ − ΔΦ − ∂ₜ(μ/(1+t) Φ) = 0` in the
//! cone `|x| < 1+t`. The `check_*` functions measure how well the
//! evaluated functions satisfy the identities they are built on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergeom::{hyp2f1_derivative, hyp2f1_value, EvalPolicy, HypergeomParams};

/// Step for first-order finite differences.
pub const FD_STEP: f64 = 1e-5;
/// Step for the second-order adjoint-equation stencil.
pub const DUAL_FD_STEP: f64 = 1e-3;
/// Coarser of the two steps used for the convergence ratio of that stencil.
pub const RICHARDSON_STEP: f64 = 8e-3;
/// Evaluation noise of `Φ_β`, relative, as seen by the stencil.
pub const STENCIL_NOISE: f64 = 256.0 * f64::EPSILON;
/// z-scans towards 1 stop here.
pub const Z_SCAN_LIMIT: f64 = 1.0 - 1e-4;

/// `(β, μ, N)` indexing `ψ_{β,μ}`, `Ψ_{β,μ}`, `Φ_β` and `ψ̃_β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub beta: f64,
    pub mu: f64,
    #[serde(rename = "N")]
    pub n: u32,
    pub policy: EvalPolicy,
}

impl TestFunctionFamily {
    pub fn new(beta: f64, mu: f64, n: u32) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta must be > 0, got {beta}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParams("mu must be finite".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        Ok(TestFunctionFamily {
            beta,
            mu,
            n,
            policy: EvalPolicy::default(),
        })
    }

    pub fn with_policy(mut self, policy: EvalPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn hypergeom_params(&self) -> HypergeomParams {
        HypergeomParams::new(self.beta / 2.0, (self.beta - 1.0 + self.mu) / 2.0, self.n as f64 / 2.0)
            .with_policy(self.policy)
    }

    /// The family `(β+2, μ−2)` that appears in `∂ₜΨ_{β,μ}`.
    pub fn raised(&self) -> Self {
        TestFunctionFamily {
            beta: self.beta + 2.0,
            mu: self.mu - 2.0,
            ..*self
        }
    }

    /// `(N+1−μ)/2`, where ψ switches from bounded to singular at z = 1.
    pub fn critical_beta(&self) -> f64 {
        (self.n as f64 + 1.0 - self.mu) / 2.0
    }

    pub fn psi(&self, z: f64) -> Result<f64> {
        hyp2f1_value(&self.hypergeom_params(), z)
    }

    pub fn psi_prime(&self, z: f64) -> Result<f64> {
        hyp2f1_derivative(&self.hypergeom_params(), z)
    }

    /// `Ψ_{β,μ}(x, t)` at `|x| = r`.
    pub fn psi_field(&self, r: f64, t: f64) -> Result<f64> {
        if !ConeDomain::Q1.contains(r, t) {
            return Err(Error::Domain { r, t });
        }
        let s = 1.0 + t;
        let z = (r / s) * (r / s);
        Ok(s.powf(-self.beta) * self.psi(z)?)
    }

    /// `Φ_β(x, t) = (1+t)Ψ_{β,μ}(x, t)`.
    pub fn phi(&self, r: f64, t: f64) -> Result<f64> {
        Ok((1.0 + t) * self.psi_field(r, t)?)
    }

    pub fn psi_tilde(&self, z: f64) -> Result<f64> {
        Ok(2.0 * self.beta * self.raised().psi(z)? + (self.mu - 2.0) * self.psi(z)?)
    }
}

/// Light cones `Q₀ = {|x| < t}` and `Q₁ = {|x| < 1+t}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeDomain {
    Q0,
    Q1,
}

impl ConeDomain {
    pub fn contains(self, r: f64, t: f64) -> bool {
        let edge = match self {
            ConeDomain::Q0 => t,
            ConeDomain::Q1 => 1.0 + t,
        };
        r >= 0.0 && r < edge
    }
}

/// `n` equispaced points on `[lo, hi]`, endpoints included.
pub fn z_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// `max |βψ + 2zψ' − βψ_{β+2,μ−2}|` over the grid.
pub fn check_contiguous_identity(fam: &TestFunctionFamily, zs: &[f64]) -> Result<f64> {
    let raised = fam.raised();
    let mut worst: f64 = 0.0;
    for &z in zs {
        let lhs = fam.beta * fam.psi(z)? + 2.0 * z * fam.psi_prime(z)?;
        let rhs = fam.beta * raised.psi(z)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `min (ψ_{β+2,μ−2} − ψ_{β,μ})` over the grid; nonnegative when the
/// monotonicity in `a` holds.
pub fn monotonicity_gap(fam: &TestFunctionFamily, zs: &[f64]) -> Result<f64> {
    let raised = fam.raised();
    let mut least = f64::INFINITY;
    for &z in zs {
        least = least.min(raised.psi(z)? - fam.psi(z)?);
    }
    Ok(least)
}

/// Max relative error between the centred difference `∂ₜΨ_{β,μ}` and
/// `−β(1+t)Ψ_{β+2,μ−2}`.
pub fn check_time_derivative_identity(fam: &TestFunctionFamily, samples: &[(f64, f64)], h: f64) -> Result<f64> {
    let raised = fam.raised();
    let mut worst: f64 = 0.0;
    for &(r, t) in samples {
        let fd = (fam.psi_field(r, t + h)? - fam.psi_field(r, t - h)?) / (2.0 * h);
        let exact = -fam.beta * (1.0 + t) * raised.psi_field(r, t)?;
        worst = worst.max(((fd - exact) / exact).abs());
    }
    Ok(worst)
}

/// Reproducible sample points inside `Q₁`, keeping `r + h < 1 + t − h`.
pub fn cone_samples(count: usize, seed: u64, t_range: (f64, f64)) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t = rng.random_range(t_range.0..t_range.1);
            let r = rng.random_range(0.0..0.95 * (1.0 + t));
            (r, t)
        })
        .collect()
}

/// Rectangular `(r, t)` patch sampled on an `nr × nt` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub nr: usize,
    pub nt: usize,
}

impl Default for Patch {
    fn default() -> Self {
        Patch {
            r_min: 0.1,
            r_max: 0.8,
            t_min: 0.5,
            t_max: 1.5,
            nr: 8,
            nt: 6,
        }
    }
}

impl Patch {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let rs = z_grid(self.r_min, self.r_max, self.nr);
        let ts = z_grid(self.t_min, self.t_max, self.nt);
        ts.iter().flat_map(|&t| rs.iter().map(move |&r| (r, t))).collect()
    }
}

/// Centred-difference residual of `∂ₜ²Φ − ∂ᵣ²Φ − (N−1)/r ∂ᵣΦ − ∂ₜ(μΦ/(1+t))`.
pub fn dual_residual_at(fam: &TestFunctionFamily, r: f64, t: f64, h: f64) -> Result<f64> {
    let phi = |r: f64, t: f64| fam.phi(r.abs(), t);
    if !ConeDomain::Q1.contains(r + h, t - h) {
        return Err(Error::Domain { r: r + h, t: t - h });
    }
    let c = phi(r, t)?;
    let tp = phi(r, t + h)?;
    let tm = phi(r, t - h)?;
    let rp = phi(r + h, t)?;
    let rm = phi(r - h, t)?;
    let h2 = h * h;
    let dtt = (tp - 2.0 * c + tm) / h2;
    let drr = (rp - 2.0 * c + rm) / h2;
    let n = fam.n as f64;
    let lap = if r == 0.0 {
        n * drr
    } else {
        drr + (n - 1.0) / r * (rp - rm) / (2.0 * h)
    };
    let damp_p = fam.mu / (1.0 + t + h) * tp;
    let damp_m = fam.mu / (1.0 + t - h) * tm;
    Ok(dtt - lap - (damp_p - damp_m) / (2.0 * h))
}

/// Max residual of the adjoint equation over a patch.
pub fn check_dual_equation(fam: &TestFunctionFamily, patch: &Patch, h: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (r, t) in patch.points() {
        worst = worst.max(dual_residual_at(fam, r, t, h)?.abs());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundRegime {
    /// `max{0,1−μ} < β < (N+1−μ)/2`: `1 ≤ ψ ≤ c`.
    Bounded,
    /// `β > (N+1−μ)/2`: `ψ ≍ (1−√z)^{(N+1−μ)/2−β}`.
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Bounded: min and max of ψ. Singular: min and max of
    /// `ψ(z)(1−√z)^{β−(N+1−μ)/2}`.
    pub c_lower: f64,
    pub c_upper: f64,
    pub regime: BoundRegime,
}

/// Grid on `[0, Z_SCAN_LIMIT]` that clusters towards `z = 1`.
pub fn scan_to_one() -> Vec<f64> {
    let mut zs: Vec<f64> = (0..90).map(|k| k as f64 / 100.0).collect();
    let steps = 60;
    for k in 0..=steps {
        // 1 − z from 1e-1 down to 1e-4
        let e = -1.0 - 3.0 * k as f64 / steps as f64;
        zs.push(1.0 - 10f64.powf(e));
    }
    zs
}

/// Scans ψ towards `z = 1` and reports the empirical bound constants.
pub fn estimate_bound_constants(fam: &TestFunctionFamily) -> Result<BoundConstants> {
    let edge = fam.critical_beta();
    let beta = fam.beta;
    if (beta - edge).abs() <= 1e-9 {
        return Err(Error::WrongRegime {
            beta,
            reason: "beta = (N+1-mu)/2 is the boundary between the two regimes".into(),
        });
    }
    let zs = scan_to_one();
    if beta < edge {
        if beta < (1.0 - fam.mu).max(0.0) {
            return Err(Error::WrongRegime {
                beta,
                reason: format!(
                    "bounded regime needs beta >= max(0, 1-mu) = {}",
                    (1.0 - fam.mu).max(0.0)
                ),
            });
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &z in &zs {
            let v = fam.psi(z)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo < 1.0 - 1e-9 || !hi.is_finite() {
            return Err(Error::CheckFailed(format!(
                "psi range [{lo}, {hi}] violates 1 <= psi <= c"
            )));
        }
        Ok(BoundConstants {
            c_lower: lo,
            c_upper: hi,
            regime: BoundRegime::Bounded,
        })
    } else {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &z in &zs {
            let v = fam.psi(z)? * (1.0 - z.sqrt()).powf(beta - edge);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(Error::CheckFailed(format!(
                "normalised psi range [{lo}, {hi}] is not finite and positive"
            )));
        }
        Ok(BoundConstants {
            c_lower: lo,
            c_upper: hi,
            regime: BoundRegime::Singular,
        })
    }
}

/// Tolerances used by [`verify_identities`].
pub const CONTIGUOUS_TOL: f64 = 1e-8;
pub const TIME_DERIVATIVE_TOL: f64 = 1e-7;
pub const DUAL_TOL: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: &str, max_error: f64, tolerance: f64) -> Self {
        IdentityCheck {
            name: name.to_string(),
            max_error,
            tolerance,
            passed: max_error.is_finite() && max_error < tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub family: TestFunctionFamily,
    pub checks: Vec<IdentityCheck>,
    /// h / (h/2) error ratio of the adjoint stencil at `richardson_step`;
    /// about 4 for a second-order scheme. `None` when the residual at h/2 is
    /// below `dual_noise_floor`, i.e. `Φ_β` solves the difference equation
    /// up to rounding.
    pub dual_richardson_ratio: Option<f64>,
    /// Residuals at h and h/2.
    pub dual_richardson_residuals: [f64; 2],
    /// `STENCIL_NOISE · max|Φ_β| / (h/2)²` over the patch.
    pub dual_noise_floor: f64,
    pub monotonicity_gap: f64,
    pub bounds: Option<BoundConstants>,
    /// Set when the bound scan was skipped or failed.
    pub bounds_note: Option<String>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.monotonicity_gap >= 0.0
    }
}

/// Options for [`verify_identities`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub z_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub patch: Patch,
    pub fd_step: f64,
    pub dual_step: f64,
    pub richardson_step: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            z_grid: z_grid(0.05, 0.95, 19),
            samples: 20,
            seed: 7,
            patch: Patch::default(),
            fd_step: FD_STEP,
            dual_step: DUAL_FD_STEP,
            richardson_step: RICHARDSON_STEP,
        }
    }
}

/// Runs every identity check for one family.
pub fn verify_identities(fam: &TestFunctionFamily, opts: &VerifyOptions) -> Result<IdentityReport> {
    let contiguous = check_contiguous_identity(fam, &opts.z_grid)?;
    let samples = cone_samples(opts.samples, opts.seed, (0.05, 3.0));
    let time = check_time_derivative_identity(fam, &samples, opts.fd_step)?;
    let dual = check_dual_equation(fam, &opts.patch, opts.dual_step)?;
    let h = opts.richardson_step;
    let coarse = check_dual_equation(fam, &opts.patch, h)?;
    let fine = check_dual_equation(fam, &opts.patch, h / 2.0)?;
    let mut phi_max: f64 = 0.0;
    for (r, t) in opts.patch.points() {
        phi_max = phi_max.max(fam.phi(r, t)?.abs());
    }
    let floor = STENCIL_NOISE * phi_max / (h * h / 4.0);
    let gap = monotonicity_gap(fam, &opts.z_grid)?;
    let (bounds, bounds_note) = match estimate_bound_constants(fam) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(IdentityReport {
        family: *fam,
        checks: vec![
            IdentityCheck::new("contiguous", contiguous, CONTIGUOUS_TOL),
            IdentityCheck::new("time_derivative", time, TIME_DERIVATIVE_TOL),
            IdentityCheck::new("dual_equation", dual, DUAL_TOL),
        ],
        dual_richardson_ratio: (fine >= floor).then(|| coarse / fine),
        dual_richardson_residuals: [coarse, fine],
        dual_noise_floor: floor,
        monotonicity_gap: gap,
        bounds,
        bounds_note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(beta: f64, mu: f64, n: u32) -> TestFunctionFamily {
        TestFunctionFamily::new(beta, mu, n).unwrap()
    }

    fn series_oracle(a: f64, b: f64, c: f64, z: f64) -> f64 {
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 0..500 {
            let k = k as f64;
            term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
            sum += term;
        }
        sum
    }

    #[test]
    fn psi_basic_values() {
        let f = fam(1.2, 0.8, 2);
        assert_eq!(f.psi(0.0).unwrap(), 1.0);
        let v = f.psi(0.5).unwrap();
        assert!((v - series_oracle(0.6, 0.5, 1.0, 0.5)).abs() < 1e-13);
        // b = 0
        let g = fam(0.4, 0.6, 3);
        for z in [0.1, 0.5, 0.9] {
            assert_eq!(g.psi(z).unwrap(), 1.0);
        }
    }

    #[test]
    fn fields_compose() {
        let f = fam(1.2, 0.8, 2);
        assert_eq!(f.psi_field(0.0, 0.0).unwrap(), 1.0);
        assert!((f.psi_field(0.0, 2.0).unwrap() - 3f64.powf(-1.2)).abs() < 1e-15);
        let want = 2f64.powf(-1.2) * series_oracle(0.6, 0.5, 1.0, 0.0625);
        assert!((f.psi_field(0.5, 1.0).unwrap() - want).abs() < 1e-14);
        assert_eq!(f.phi(0.0, 0.0).unwrap(), 1.0);
        assert!((f.phi(0.0, 3.0).unwrap() - 4f64.powf(-0.2)).abs() < 1e-15);
        let want = 2f64.powf(-0.2) * series_oracle(0.6, 0.5, 1.0, 0.25);
        assert!((f.phi(1.0, 1.0).unwrap() - want).abs() < 1e-14);
        assert!(matches!(f.psi_field(2.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(f.phi(3.5, 2.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn psi_tilde_values() {
        let f = fam(1.2, 0.8, 2);
        assert!((f.psi_tilde(0.0).unwrap() - (2.4 + 0.8 - 2.0)).abs() < 1e-15);
        let g = fam(1.5, 2.0, 3);
        let z = 0.4;
        assert_eq!(g.psi_tilde(z).unwrap(), 3.0 * g.raised().psi(z).unwrap());
        let z = 0.3;
        let want = 2.4 * series_oracle(1.6, 0.5, 1.0, z) - 1.2 * series_oracle(0.6, 0.5, 1.0, z);
        assert!((f.psi_tilde(z).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn contiguous_identity() {
        let zs = z_grid(0.05, 0.95, 19);
        assert!(check_contiguous_identity(&fam(1.2, 0.8, 2), &zs).unwrap() < 1e-8);
        assert!(check_contiguous_identity(&fam(2.0, 0.0, 3), &zs).unwrap() < 1e-8);
        assert_eq!(check_contiguous_identity(&fam(1.2, 0.8, 2), &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn time_derivative_identity() {
        let f = fam(1.2, 0.8, 2);
        let samples = cone_samples(20, 11, (0.05, 3.0));
        assert!(samples.iter().all(|&(r, t)| r < 0.95 * (1.0 + t)));
        assert!(check_time_derivative_identity(&f, &samples, FD_STEP).unwrap() < 1e-7);
        let axis: Vec<_> = [0.1, 0.7, 2.0].iter().map(|&t| (0.0, t)).collect();
        assert!(check_time_derivative_identity(&f, &axis, 1e-4).unwrap() < 1e-7);
        assert!(monotonicity_gap(&f, &z_grid(0.05, 0.95, 19)).unwrap() >= 0.0);
    }

    #[test]
    fn dual_equation() {
        let f = fam(1.2, 0.8, 2);
        let patch = Patch::default();
        let r1 = check_dual_equation(&f, &patch, 1e-3).unwrap();
        assert!(r1 < 1e-5, "{r1}");
        let r2 = check_dual_equation(&f, &patch, 5e-4).unwrap();
        let ratio = r1 / r2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
        // on the axis
        let axis = dual_residual_at(&f, 0.0, 1.0, 1e-3).unwrap();
        assert!(axis.abs() < 1e-5);
    }

    #[test]
    fn richardson_ratio_or_rounding() {
        let opts = VerifyOptions::default();
        let rep = verify_identities(&fam(1.2, 0.8, 2), &opts).unwrap();
        let ratio = rep.dual_richardson_ratio.unwrap();
        assert!((3.9..4.1).contains(&ratio), "{ratio}");
        // N = 1, μ = 0: Φ = f(t−r) + g(t+r), exact on the diagonal stencil
        let rep = verify_identities(&fam(1.5, 0.0, 1), &opts).unwrap();
        assert_eq!(rep.dual_richardson_ratio, None);
        assert!(rep.dual_richardson_residuals[1] < rep.dual_noise_floor);
    }

    #[test]
    fn dual_equation_polynomial_case() {
        // a = 1, b = −1: ψ = 1 − (2/N) z
        let f = fam(2.0, -3.0, 3);
        let z: f64 = 0.3;
        assert!((f.psi(z).unwrap() - (1.0 - 2.0 / 3.0 * z)).abs() < 1e-15);
        // ψ is exact here, so what remains is the O(h²) stencil error in t
        let r1 = check_dual_equation(&f, &Patch::default(), 1e-3).unwrap();
        let r2 = check_dual_equation(&f, &Patch::default(), 5e-4).unwrap();
        assert!(r1 < 1e-5, "{r1}");
        assert!((3.5..4.5).contains(&(r1 / r2)), "ratio {}", r1 / r2);
    }

    #[test]
    fn bound_constants() {
        let b = estimate_bound_constants(&fam(1.2, 0.8, 2)).unwrap();
        assert_eq!(b.regime, BoundRegime::Singular);
        assert!(b.c_lower > 0.0 && b.c_upper.is_finite());
        let b = estimate_bound_constants(&fam(0.9, 0.8, 2)).unwrap();
        assert_eq!(b.regime, BoundRegime::Bounded);
        assert!(b.c_lower >= 1.0 - 1e-9 && b.c_upper.is_finite());
        let b = estimate_bound_constants(&fam(0.4, 0.6, 2)).unwrap();
        assert_eq!((b.c_lower, b.c_upper), (1.0, 1.0));
        assert!(matches!(
            estimate_bound_constants(&fam(1.1, 0.8, 2)),
            Err(Error::WrongRegime { .. })
        ));
    }

    #[test]
    fn self_similarity_without_shift() {
        let f = fam(1.2, 0.8, 2);
        let field = |r: f64, t: f64| t.powf(-f.beta) * f.psi((r / t) * (r / t)).unwrap();
        for &(r, t, l) in &[(0.3, 1.0, 2.0f64), (0.9, 1.5, 0.4), (1.0, 3.0, 7.0)] {
            let lhs = field(r, t);
            let rhs = l.powf(f.beta) * field(l * r, l * t);
            assert!(((lhs - rhs) / lhs).abs() < 1e-13);
        }
    }

    #[test]
    fn cones() {
        assert!(ConeDomain::Q0.contains(0.5, 1.0));
        assert!(!ConeDomain::Q0.contains(1.0, 1.0));
        assert!(ConeDomain::Q1.contains(1.5, 1.0));
        assert!(!ConeDomain::Q1.contains(2.0, 1.0));
    }

    #[test]
    fn report_default_family() {
        let r = verify_identities(&fam(1.2, 0.8, 2), &VerifyOptions::default()).unwrap();
        assert!(r.all_passed(), "{r:?}");
        assert!(r.bounds.is_some());
        assert!(TestFunctionFamily::new(0.0, 1.0, 2).is_err());
    }
}
