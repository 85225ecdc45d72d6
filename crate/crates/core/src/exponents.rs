//! Critical exponents and the lifespan table.
//!
//! Everything here is closed form: the Strauss polynomial `γ(n;p)`, the
//! Strauss exponent `p₀(n)`, the Fujita exponent, the damping threshold
//! `μ*`, the admissible interval `S_N` together with its supremum, and the
//! exponent `θ` governing the subcritical lifespan bound.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default relative tolerance for deciding `p = p₀(N+μ)`.
pub const CRITICAL_TOL: f64 = 1e-9;

/// `(N, μ, p)`: space dimension, damping coefficient and nonlinearity power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemClass {
    #[serde(rename = "N")]
    pub n: u32,
    pub mu: f64,
    pub p: f64,
}

impl ProblemClass {
    pub fn new(n: u32, mu: f64, p: f64) -> Result<Self> {
        let pc = ProblemClass { n, mu, p };
        pc.validate()?;
        Ok(pc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidParams(format!("p must be > 1, got {}", self.p)));
        }
        Ok(())
    }

    /// `N + μ`, the effective dimension of the damped problem.
    pub fn effective_dim(&self) -> f64 {
        self.n as f64 + self.mu
    }
}

/// Strauss exponent; `p₀(n)` is infinite for `n ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StraussExponent {
    Finite(f64),
    Infinite,
}

impl StraussExponent {
    pub fn finite(self) -> Option<f64> {
        match self {
            StraussExponent::Finite(v) => Some(v),
            StraussExponent::Infinite => None,
        }
    }

    /// `p < p₀`.
    pub fn is_above(self, p: f64) -> bool {
        match self {
            StraussExponent::Finite(v) => p < v,
            StraussExponent::Infinite => true,
        }
    }

    /// `p ≥ p₀`.
    pub fn is_at_or_below(self, p: f64) -> bool {
        !self.is_above(p)
    }
}

impl fmt::Display for StraussExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StraussExponent::Finite(v) => write!(f, "{v}"),
            StraussExponent::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for StraussExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StraussExponent::Finite(v) => s.serialize_f64(*v),
            StraussExponent::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `γ(n;p) = 2 + (n+1)p − (n−1)p²`.
pub fn gamma_poly(n: f64, p: f64) -> f64 {
    2.0 + (n + 1.0) * p - (n - 1.0) * p * p
}

/// Positive root of `γ(n;p) = 0`.
pub fn strauss_exponent(n: f64) -> StraussExponent {
    if n <= 1.0 {
        // γ(n;p) > 0 for every p > 0 when n ≤ 1
        return StraussExponent::Infinite;
    }
    let b = n + 1.0;
    let disc = b * b + 8.0 * (n - 1.0);
    StraussExponent::Finite((b + disc.sqrt()) / (2.0 * (n - 1.0)))
}

/// `p_F(N) = 1 + 2/N`.
pub fn fujita_exponent(n: u32) -> f64 {
    1.0 + 2.0 / n as f64
}

/// `μ* = (N² + N + 2)/(N + 2)`, the damping at which `p_F(N) = p₀(N+μ*)`.
pub fn mu_star(n: u32) -> f64 {
    let n = n as f64;
    (n * n + n + 2.0) / (n + 2.0)
}

/// Hölder conjugate `p' = p/(p−1)`.
pub fn holder_conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Row of the lifespan table a problem falls into, or the reason it falls
/// outside of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `N = 1`, `p = p₀(1+μ)`.
    N1Critical,
    /// `N = 1`, `max{3, 2/μ} ≤ p < p₀(1+μ)`.
    N1Strauss,
    /// `N = 1`, `0 < μ < 2/3`, `3 ≤ p < 2/μ`.
    N1Damping,
    /// `N ≥ 2`, `p = p₀(N+μ)`.
    Critical,
    /// `N ≥ 2`, `p₀(N+2+μ) ≤ p < p₀(N+μ)`.
    Strauss,
    /// `N ≥ 2`, `p_F(N) ≤ p < p₀(N+2+μ)`.
    Linear,
    /// `μ` outside `(0, 4/3)` for `N = 1` or outside `[0, μ*)` for `N ≥ 2`.
    MuOutOfRange,
    /// `p < p_F(N)`.
    BelowFujita,
    /// `p > p₀(N+μ)`.
    AboveStrauss,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::N1Critical => "N=1 and p=p0(1+mu)",
            Branch::N1Strauss => "N=1 and max{3,2/mu}<=p<p0(1+mu)",
            Branch::N1Damping => "N=1, 0<mu<2/3 and 3<=p<2/mu",
            Branch::Critical => "N>=2 and p=p0(N+mu)",
            Branch::Strauss => "N>=2 and p0(N+2+mu)<=p<p0(N+mu)",
            Branch::Linear => "N>=2 and pF(N)<=p<p0(N+2+mu)",
            Branch::MuOutOfRange => "mu outside the admissible damping range",
            Branch::BelowFujita => "p<pF(N)",
            Branch::AboveStrauss => "p>p0(N+mu)",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    Subcritical,
    Critical,
    OutsideTheorem,
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeTag::Subcritical => "Subcritical",
            RegimeTag::Critical => "Critical",
            RegimeTag::OutsideTheorem => "OutsideTheorem",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub branch: Branch,
}

impl Regime {
    fn outside(branch: Branch) -> Self {
        Regime {
            tag: RegimeTag::OutsideTheorem,
            branch,
        }
    }
}

/// Open interval `(lo, hi)`; empty when `lo ≥ hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenInterval {
    pub lo: f64,
    pub hi: f64,
}

impl OpenInterval {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn intersect(&self, other: &OpenInterval) -> OpenInterval {
        OpenInterval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupSnResult {
    pub interval: OpenInterval,
    pub sup_value: f64,
    pub branch: Branch,
}

fn damping_in_range(n: u32, mu: f64) -> bool {
    if n == 1 {
        mu > 0.0 && mu < 4.0 / 3.0
    } else {
        (0.0..mu_star(n)).contains(&mu)
    }
}

/// The three intervals whose intersection is `S_N`.
pub fn sn_constraints(pc: &ProblemClass) -> [OpenInterval; 3] {
    let (n, mu, p) = (pc.n as f64, pc.mu, pc.p);
    [
        OpenInterval { lo: 0.0, hi: 1.0 / p },
        OpenInterval {
            lo: 0.0,
            hi: (n - (1.0 - mu).abs()) / 2.0,
        },
        OpenInterval {
            lo: ((n - 1.0 + mu) * p - (n + 1.0 + mu)) / 2.0,
            hi: ((n + 1.0 + mu) * p - (n + 3.0 + mu)) / 2.0,
        },
    ]
}

/// `S_N` and `sup S_N` for `p_F(N) ≤ p < p₀(N+μ)`.
///
/// The supremum comes from the four-row closed-form table; the interval is
/// the explicit intersection of the three constraints. Outside the range
/// where the table is valid the set is reported as empty.
pub fn admissible_set(pc: &ProblemClass) -> Result<SupSnResult> {
    pc.validate()?;
    let empty = || Error::EmptySet {
        n: pc.n,
        mu: pc.mu,
        p: pc.p,
    };
    let (n, mu, p) = (pc.n, pc.mu, pc.p);
    if !damping_in_range(n, mu) || p < fujita_exponent(n) {
        return Err(empty());
    }
    if strauss_exponent(pc.effective_dim()).is_at_or_below(p) {
        return Err(empty());
    }

    let [a, b, c] = sn_constraints(pc);
    let interval = a.intersect(&b).intersect(&c);
    let interval = OpenInterval {
        lo: interval.lo.max(0.0),
        hi: interval.hi,
    };
    if interval.is_empty() {
        return Err(empty());
    }

    let nf = n as f64;
    let (sup_value, branch) = if n == 1 {
        if p >= 3f64.max(2.0 / mu) {
            (1.0 / p, Branch::N1Strauss)
        } else {
            (mu / 2.0, Branch::N1Damping)
        }
    } else if strauss_exponent(nf + 2.0 + mu).is_at_or_below(p) {
        (1.0 / p, Branch::Strauss)
    } else {
        (((nf + 1.0 + mu) * p - (nf + 3.0 + mu)) / 2.0, Branch::Linear)
    };

    Ok(SupSnResult {
        interval,
        sup_value,
        branch,
    })
}

/// `λ = γ(N+μ;p)/(2p) − 1/p + 1/q`.
pub fn lambda(pc: &ProblemClass, inv_q: f64) -> f64 {
    gamma_poly(pc.effective_dim(), pc.p) / (2.0 * pc.p) - 1.0 / pc.p + inv_q
}

/// `θ = (p−1)/λ` with `1/q = sup S_N`.
pub fn theta_exponent(pc: &ProblemClass) -> Result<f64> {
    let sn = admissible_set(pc)?;
    Ok((pc.p - 1.0) / lambda(pc, sn.sup_value))
}

/// Classifies `(N, μ, p)` against the lifespan table; `tol` is relative.
///
/// `p = p_F(N)` counts as subcritical.
pub fn classify_regime(pc: &ProblemClass, tol: f64) -> Regime {
    let (n, mu, p) = (pc.n, pc.mu, pc.p);
    if !damping_in_range(n, mu) {
        return Regime::outside(Branch::MuOutOfRange);
    }
    let p0 = strauss_exponent(pc.effective_dim());
    if let StraussExponent::Finite(v) = p0 {
        if (p - v).abs() <= tol * v {
            let branch = if n == 1 { Branch::N1Critical } else { Branch::Critical };
            return Regime {
                tag: RegimeTag::Critical,
                branch,
            };
        }
    }
    let pf = fujita_exponent(n);
    if p < pf * (1.0 - tol) {
        return Regime::outside(Branch::BelowFujita);
    }
    if p0.is_at_or_below(p) {
        return Regime::outside(Branch::AboveStrauss);
    }
    let nf = n as f64;
    let branch = if n == 1 {
        if p >= 3f64.max(2.0 / mu) {
            Branch::N1Strauss
        } else {
            Branch::N1Damping
        }
    } else if strauss_exponent(nf + 2.0 + mu).is_at_or_below(p) {
        Branch::Strauss
    } else {
        Branch::Linear
    };
    Regime {
        tag: RegimeTag::Subcritical,
        branch,
    }
}

/// Value of the lifespan upper bound for given constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum LifespanBound {
    /// `C·ε^{−exponent}`.
    Power { exponent: f64, value: f64 },
    /// `C·exp(argument)` with `argument = C·ε^{−p(p−1)}`.
    DoubleExponential { argument: f64, value: f64 },
}

impl LifespanBound {
    pub fn value(&self) -> f64 {
        match *self {
            LifespanBound::Power { value, .. } | LifespanBound::DoubleExponential { value, .. } => value,
        }
    }
}

/// Upper bound on the lifespan for data of size `eps`, with the free
/// constant `c` and slack `delta` supplied by the caller.
pub fn lifespan_bound(pc: &ProblemClass, eps: f64, delta: f64, c: f64) -> Result<LifespanBound> {
    if !(eps > 0.0) || !(delta >= 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParams(format!(
            "lifespan bound needs eps > 0, delta >= 0, C > 0 (got {eps}, {delta}, {c})"
        )));
    }
    let regime = classify_regime(pc, CRITICAL_TOL);
    match regime.tag {
        RegimeTag::Critical => {
            let argument = c * eps.powf(-pc.p * (pc.p - 1.0));
            Ok(LifespanBound::DoubleExponential {
                argument,
                value: c * argument.exp(),
            })
        }
        RegimeTag::Subcritical => {
            let exponent = theta_exponent(pc)? + delta;
            Ok(LifespanBound::Power {
                exponent,
                value: c * eps.powf(-exponent),
            })
        }
        RegimeTag::OutsideTheorem => Err(Error::OutsideTheorem {
            n: pc.n,
            mu: pc.mu,
            p: pc.p,
            reason: regime.branch.label().to_string(),
        }),
    }
}

/// Everything the `exponents` subcommand prints.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    pub gamma: f64,
    pub p_fujita: f64,
    pub p_strauss: StraussExponent,
    pub mu_star: f64,
    #[serde(rename = "S_interval")]
    pub s_interval: Option<[f64; 2]>,
    #[serde(rename = "sup_S")]
    pub sup_s: Option<f64>,
    pub theta: Option<f64>,
    pub regime: RegimeTag,
    pub branch: Branch,
}

pub fn exponent_report(pc: &ProblemClass, tol: f64) -> Result<ExponentReport> {
    pc.validate()?;
    let regime = classify_regime(pc, tol);
    let sn = admissible_set(pc).ok();
    Ok(ExponentReport {
        gamma: gamma_poly(pc.effective_dim(), pc.p),
        p_fujita: fujita_exponent(pc.n),
        p_strauss: strauss_exponent(pc.effective_dim()),
        mu_star: mu_star(pc.n),
        s_interval: sn.map(|s| [s.interval.lo, s.interval.hi]),
        sup_s: sn.map(|s| s.sup_value),
        theta: sn.map(|s| (pc.p - 1.0) / lambda(pc, s.sup_value)),
        regime: regime.tag,
        branch: regime.branch,
    })
}
