//! Gauss hypergeometric function `₂F₁(a, b; c; z)` for real parameters and
//! `z ∈ [0, 1)`.
//!
//! ```text
//! F(a,b,c;z) = Σ (a)ₙ (b)ₙ / (c)ₙ · zⁿ / n!
//! ```
//!
//! For `z ≤ z_split` (default 0.95, about 900 terms at worst) the series is
//! summed directly; its terms eventually share one sign, so the sum is
//! accurate to a few ulps. Above the split the standard connection formula
//! in `1 − z` is used:
//!
//! ```text
//! F(a,b,c;z) = Γ(c)Γ(c−a−b)/(Γ(c−a)Γ(c−b)) · F(a, b, a+b−c+1; 1−z)
//!            + (1−z)^{c−a−b} Γ(c)Γ(a+b−c)/(Γ(a)Γ(b)) · F(c−a, c−b, c−a−b+1; 1−z)
//! ```
//!
//! The formula degenerates when `c − a − b` is an integer. In that case the
//! direct series is tried first (it converges for every `z < 1`, only
//! slowly); if it runs out of terms, `F` is interpolated linearly in `b`
//! between the two non-degenerate neighbours `c − a − b = m ± h`, and the
//! offset `h` is reported in [`EvalResult::b_perturbation`].

use libm::tgamma as gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset used around integer `c − a − b`.
pub const INTEGER_GAP_PERTURBATION: f64 = 1e-6;

/// `c − a − b` closer than this to an integer counts as degenerate.
pub const INTEGER_GAP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPolicy {
    /// Relative cutoff on the estimated series tail.
    pub series_tol: f64,
    pub max_terms: usize,
    /// Direct summation for `z ≤ z_split`, connection formula above.
    pub z_split: f64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        EvalPolicy {
            series_tol: 1e-15,
            max_terms: 10_000,
            z_split: 0.5,
        }
    }
}

impl EvalPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_tol > 0.0) {
            return Err(Error::InvalidParams("series_tol must be positive".into()));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParams("max_terms must be positive".into()));
        }
        if !(self.z_split > 0.0 && self.z_split < 1.0) {
            return Err(Error::InvalidParams("z_split must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypergeomParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub policy: EvalPolicy,
}

impl HypergeomParams {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        HypergeomParams {
            a,
            b,
            c,
            policy: EvalPolicy::default(),
        }
    }

    pub fn with_policy(mut self, policy: EvalPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// `(a+k, b+k, c+k)`, the parameters of the k-th derivative.
    pub fn shifted(&self, k: u32) -> Self {
        let k = k as f64;
        HypergeomParams {
            a: self.a + k,
            b: self.b + k,
            c: self.c + k,
            policy: self.policy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(Error::InvalidParams("a, b, c must be finite".into()));
        }
        if is_nonpositive_integer(self.c) {
            return Err(Error::InvalidParams(format!("c = {} is a nonpositive integer", self.c)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    DirectSeries,
    TransformedSeries,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    pub terms_used: usize,
    pub method: Method,
    pub truncation_estimate: f64,
    /// Nonzero when the degenerate connection case was interpolated.
    pub b_perturbation: f64,
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Rising factorial `(d)ₙ = d(d+1)…(d+n−1)`.
pub fn pochhammer(d: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (d + k as f64))
}

/// `1/Γ(x)`, exactly zero at the poles.
fn recip_gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

struct Series {
    sum: f64,
    terms: usize,
    tail: f64,
}

fn sum_series(a: f64, b: f64, c: f64, z: f64, policy: &EvalPolicy) -> Result<Series> {
    let mut term = 1.0;
    let mut sum = 1.0;
    // Neumaier compensation
    let mut carry = 0.0;
    if z == 0.0 {
        return Ok(Series {
            sum,
            terms: 1,
            tail: 0.0,
        });
    }
    for n in 0..policy.max_terms {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        let next = sum + term;
        carry += if sum.abs() >= term.abs() {
            (sum - next) + term
        } else {
            (term - next) + sum
        };
        sum = next;
        if term == 0.0 {
            return Ok(Series {
                sum: sum + carry,
                terms: n + 2,
                tail: 0.0,
            });
        }
        let m = nf + 1.0;
        let next_ratio = ((a + m) * (b + m) / ((c + m) * (m + 1.0)) * z).abs();
        let rho = next_ratio.max(z);
        if rho < 1.0 {
            let tail = term.abs() * rho / (1.0 - rho);
            if tail <= policy.series_tol * sum.abs() {
                return Ok(Series {
                    sum: sum + carry,
                    terms: n + 2,
                    tail,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        terms: policy.max_terms,
        z,
    })
}

/// Direct power series, regardless of `z_split`.
pub fn hyp2f1_direct(params: &HypergeomParams, z: f64) -> Result<EvalResult> {
    check_args(params, z)?;
    let s = sum_series(params.a, params.b, params.c, z, &params.policy)?;
    Ok(EvalResult {
        value: s.sum,
        terms_used: s.terms,
        method: Method::DirectSeries,
        truncation_estimate: s.tail,
        b_perturbation: 0.0,
    })
}

fn connection(a: f64, b: f64, c: f64, z: f64, policy: &EvalPolicy) -> Result<EvalResult> {
    let w = 1.0 - z;
    let s = c - a - b;
    let gc = gamma(c);
    let coef1 = gc * gamma(s) * recip_gamma(c - a) * recip_gamma(c - b);
    let coef2 = gc * gamma(-s) * recip_gamma(a) * recip_gamma(b) * w.powf(s);
    if !(coef1.is_finite() && coef2.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "connection coefficients overflow for (a, b, c) = ({a}, {b}, {c})"
        )));
    }
    let mut value = 0.0;
    let mut terms = 0;
    let mut tail = 0.0;
    if coef1 != 0.0 {
        let f1 = sum_series(a, b, 1.0 - s, w, policy)?;
        value += coef1 * f1.sum;
        terms += f1.terms;
        tail += coef1.abs() * f1.tail;
    }
    if coef2 != 0.0 {
        let f2 = sum_series(c - a, c - b, 1.0 + s, w, policy)?;
        value += coef2 * f2.sum;
        terms += f2.terms;
        tail += coef2.abs() * f2.tail;
    }
    Ok(EvalResult {
        value,
        terms_used: terms,
        method: Method::TransformedSeries,
        truncation_estimate: tail,
        b_perturbation: 0.0,
    })
}

/// Connection formula in `1 − z`, regardless of `z_split`.
///
/// Degenerate `c − a − b` (within [`INTEGER_GAP_TOL`] of an integer) is
/// handled by interpolating between the neighbours `c − a − b = m ± h`.
pub fn hyp2f1_transformed(params: &HypergeomParams, z: f64) -> Result<EvalResult> {
    check_args(params, z)?;
    let HypergeomParams { a, b, c, policy } = *params;
    let s = c - a - b;
    let m = s.round();
    let gap = s - m;
    if gap.abs() >= INTEGER_GAP_TOL {
        return connection(a, b, c, z, &policy);
    }
    let h = INTEGER_GAP_PERTURBATION;
    // c − a − b' = m + h and m − h respectively
    let b_plus = c - a - (m + h);
    let b_minus = c - a - (m - h);
    let up = connection(a, b_plus, c, z, &policy)?;
    let down = connection(a, b_minus, c, z, &policy)?;
    // linear interpolation in s = c − a − b at s = m + gap
    let weight = (gap + h) / (2.0 * h);
    let value = down.value + weight * (up.value - down.value);
    Ok(EvalResult {
        value,
        terms_used: up.terms_used + down.terms_used,
        method: Method::TransformedSeries,
        truncation_estimate: up.truncation_estimate.max(down.truncation_estimate),
        b_perturbation: h,
    })
}

fn check_args(params: &HypergeomParams, z: f64) -> Result<()> {
    params.validate()?;
    if !(0.0..1.0).contains(&z) {
        return Err(Error::InvalidParams(format!("z = {z} outside [0, 1)")));
    }
    Ok(())
}

/// `(1−z)^{c−a−b} F(c−a, c−b, c; z)`, a polynomial times a power when
/// `c − a` or `c − b` is a nonpositive integer.
fn euler_terminating(params: &HypergeomParams, z: f64) -> Result<EvalResult> {
    let HypergeomParams { a, b, c, policy } = *params;
    let s = sum_series(c - a, c - b, c, z, &policy)?;
    let scale = (1.0 - z).powf(c - a - b);
    Ok(EvalResult {
        value: scale * s.sum,
        terms_used: s.terms,
        method: Method::TransformedSeries,
        truncation_estimate: scale * s.tail,
        b_perturbation: 0.0,
    })
}

/// `F(a, b, c; z)` with automatic method selection.
pub fn hyp2f1(params: &HypergeomParams, z: f64) -> Result<EvalResult> {
    check_args(params, z)?;
    let HypergeomParams { a, b, .. } = *params;
    let terminating = is_nonpositive_integer(a) || is_nonpositive_integer(b);
    if terminating || z <= params.policy.z_split {
        return hyp2f1_direct(params, z);
    }
    let c = params.c;
    if is_nonpositive_integer(c - a) || is_nonpositive_integer(c - b) {
        return euler_terminating(params, z);
    }
    let s = c - a - b;
    if (s - s.round()).abs() < INTEGER_GAP_TOL {
        match hyp2f1_direct(params, z) {
            Err(Error::NoConvergence { .. }) => {}
            other => return other,
        }
    }
    hyp2f1_transformed(params, z)
}

/// `F(a,b,c;z)` value only.
pub fn hyp2f1_value(params: &HypergeomParams, z: f64) -> Result<f64> {
    hyp2f1(params, z).map(|r| r.value)
}

/// `F' = (ab/c)·F(a+1, b+1, c+1; z)`.
pub fn hyp2f1_derivative(params: &HypergeomParams, z: f64) -> Result<f64> {
    check_args(params, z)?;
    let coef = params.a * params.b / params.c;
    if coef == 0.0 {
        return Ok(0.0);
    }
    Ok(coef * hyp2f1_value(&params.shifted(1), z)?)
}

/// `F'' = a(a+1)b(b+1)/(c(c+1))·F(a+2, b+2, c+2; z)`.
pub fn hyp2f1_second_derivative(params: &HypergeomParams, z: f64) -> Result<f64> {
    check_args(params, z)?;
    let HypergeomParams { a, b, c, .. } = *params;
    let coef = a * (a + 1.0) * b * (b + 1.0) / (c * (c + 1.0));
    if coef == 0.0 {
        return Ok(0.0);
    }
    Ok(coef * hyp2f1_value(&params.shifted(2), z)?)
}

/// `z(1−z)F'' + (c − (1+a+b)z)F' − abF`; zero up to evaluation error.
pub fn ode_residual(params: &HypergeomParams, z: f64) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::InvalidParams(format!("z = {z} outside (0, 1)")));
    }
    let HypergeomParams { a, b, c, .. } = *params;
    let f = hyp2f1_value(params, z)?;
    let f1 = hyp2f1_derivative(params, z)?;
    let f2 = hyp2f1_second_derivative(params, z)?;
    Ok(z * (1.0 - z) * f2 + (c - (1.0 + a + b) * z) * f1 - a * b * f)
}
