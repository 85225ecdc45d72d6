//! Explicit solver for the radial damped wave equation
//!
//! ```text
//! ∂ₜ²u − ∂ᵣ²u − (N−1)/r ∂ᵣu + μ/(1+t) ∂ₜu = |u|ᵖ
//! ```
//!
//! Leapfrog in time with the damping term centred, so each update is a
//! closed form. The radial Laplacian is written in flux form over the cell
//! volumes `(r_{j+1/2}ᴺ − r_{j−1/2}ᴺ)/N`; at the origin it reduces to
//! `2N(u₁−u₀)/dr²` and away from it to the usual centred stencil up to
//! `O(dr²)`. The flux form makes the linear undamped scheme conserve a
//! discrete energy exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ProblemClass;

/// Minimum number of cells across the data support.
pub const MIN_CELLS_PER_R0: usize = 32;
/// Values below this count as zero when measuring the support.
pub const SUPPORT_FLOOR: f64 = 1e-12;
/// Halve dt when `dt²·p·max|u|^{p−1}` exceeds this.
pub const SOURCE_STIFFNESS_LIMIT: f64 = 0.01;
const MAX_HALVINGS: u32 = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataProfile {
    /// `A(1−(r/r₀)²)⁴` inside the ball, zero outside.
    Bump4,
    /// Piecewise-linear tables on nodes `r`, zero past the last node.
    Custom { r: Vec<f64>, f: Vec<f64>, g: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub pc: ProblemClass,
    pub eps: f64,
    pub r0: f64,
    pub profile: DataProfile,
    pub amp_f: f64,
    pub amp_g: f64,
    /// Switches the `|u|ᵖ` source off when false.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
}

fn default_true() -> bool {
    true
}

impl ModelParams {
    pub fn bump(pc: ProblemClass, eps: f64, r0: f64, amp_f: f64, amp_g: f64) -> Self {
        ModelParams {
            pc,
            eps,
            r0,
            profile: DataProfile::Bump4,
            amp_f,
            amp_g,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pc.validate()?;
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParams(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.r0 > 0.0 && self.r0 < 1.0) {
            return Err(Error::InvalidParams(format!("r0 must lie in (0, 1), got {}", self.r0)));
        }
        if !(self.amp_f >= 0.0 && self.amp_g >= 0.0) || self.amp_f + self.amp_g <= 0.0 {
            return Err(Error::InvalidParams(
                "amplitudes must be nonnegative and not both zero".into(),
            ));
        }
        let n = self.pc.n;
        if n >= 3 && self.pc.p >= n as f64 / (n as f64 - 2.0) {
            return Err(Error::InvalidParams(format!(
                "p = {} must stay below N/(N-2) = {} for N = {n}",
                self.pc.p,
                n as f64 / (n as f64 - 2.0)
            )));
        }
        if let DataProfile::Custom { r, f, g } = &self.profile {
            if r.len() != f.len() || r.len() != g.len() || r.len() < 2 {
                return Err(Error::InvalidParams(
                    "custom profile tables must match in length".into(),
                ));
            }
            if r.windows(2).any(|w| w[1] <= w[0]) || r[0] != 0.0 {
                return Err(Error::InvalidParams(
                    "custom profile nodes must start at 0 and increase".into(),
                ));
            }
            if *r.last().unwrap() > self.r0 {
                return Err(Error::InvalidParams("custom profile extends past r0".into()));
            }
            if f.iter().chain(g).any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidParams("custom profile values must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Unscaled data `(f(r), g(r))`.
    pub fn data_at(&self, r: f64) -> (f64, f64) {
        match &self.profile {
            DataProfile::Bump4 => {
                if r >= self.r0 {
                    (0.0, 0.0)
                } else {
                    let s = 1.0 - (r / self.r0).powi(2);
                    let b = s.powi(4);
                    (self.amp_f * b, self.amp_g * b)
                }
            }
            DataProfile::Custom { r: nodes, f, g } => {
                let last = nodes.len() - 1;
                if r >= nodes[last] {
                    return (0.0, 0.0);
                }
                let k = nodes.partition_point(|x| *x <= r) - 1;
                let w = (r - nodes[k]) / (nodes[k + 1] - nodes[k]);
                let lerp = |v: &[f64]| v[k] + w * (v[k + 1] - v[k]);
                (self.amp_f * lerp(f), self.amp_g * lerp(g))
            }
        }
    }
}

/// Uniform grid `r_j = j·dr`, `j = 0..n_points`, Dirichlet at the last node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub dr: f64,
    pub n_points: usize,
}

impl RadialGrid {
    /// Smallest grid with spacing `dr` that reaches `r_max`.
    pub fn covering(dr: f64, r_max: f64) -> Self {
        let n_points = (r_max / dr - 1e-9).ceil() as usize + 1;
        RadialGrid { dr, n_points }
    }

    pub fn r_max(&self) -> f64 {
        self.dr * (self.n_points - 1) as f64
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.r(j)).collect()
    }

    /// Cell volumes `(r_{j+1/2}ᴺ − r_{j−1/2}ᴺ)/N` (without the sphere area).
    pub fn volumes(&self, n: u32) -> Vec<f64> {
        let nf = n as f64;
        (0..self.n_points)
            .map(|j| {
                let hi = (j as f64 + 0.5) * self.dr;
                let lo = (j as f64 - 0.5).max(0.0) * self.dr;
                (hi.powf(nf) - lo.powf(nf)) / nf
            })
            .collect()
    }

    /// Largest eigenvalue of `−Δ_h` with the Dirichlet node removed, by
    /// Sturm-sequence bisection on the symmetrised tridiagonal matrix.
    pub fn laplacian_spectral_radius(&self, n: u32) -> f64 {
        let m = self.n_points.saturating_sub(1);
        if m == 0 {
            return 0.0;
        }
        let vol = self.volumes(n);
        let face = self.face_weights(n);
        let diag: Vec<f64> = (0..m)
            .map(|j| (face[j] + if j == 0 { 0.0 } else { face[j - 1] }) / vol[j])
            .collect();
        let off2: Vec<f64> = (0..m.saturating_sub(1))
            .map(|j| face[j] * face[j] / (vol[j] * vol[j + 1]))
            .collect();
        // number of eigenvalues below x
        let count_below = |x: f64| {
            let mut count = 0;
            let mut q = diag[0] - x;
            if q < 0.0 {
                count += 1;
            }
            for j in 1..m {
                let prev = if q == 0.0 { f64::EPSILON } else { q };
                q = diag[j] - x - off2[j - 1] / prev;
                if q < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let mut hi = (0..m)
            .map(|j| {
                let left = if j == 0 { 0.0 } else { off2[j - 1].sqrt() };
                let right = if j + 1 < m { off2[j].sqrt() } else { 0.0 };
                diag[j] + left + right
            })
            .fold(0.0, f64::max);
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) < m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Leapfrog step `cfl·min(dr, 2/√λ_max)`.
    pub fn stable_dt(&self, n: u32, cfl: f64) -> f64 {
        let lam = self.laplacian_spectral_radius(n);
        let limit = if lam > 0.0 { 2.0 / lam.sqrt() } else { self.dr };
        cfl * self.dr.min(limit)
    }

    /// Face weights `r_{j+1/2}^{N−1}/dr`.
    pub fn face_weights(&self, n: u32) -> Vec<f64> {
        (0..self.n_points.saturating_sub(1))
            .map(|j| ((j as f64 + 0.5) * self.dr).powi(n as i32 - 1) / self.dr)
            .collect()
    }
}

/// Solution at time `t` and at `t − dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialField {
    pub t: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub prev_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// Values on the first `values.len()` nodes; the rest are zero.
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn at(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    CompletedNoBlowup,
    BlowupDetected,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub t_max: f64,
    /// Defaults to `r0/64`.
    pub dr: Option<f64>,
    pub cfl: f64,
    pub blow_threshold: f64,
    /// Keep every k-th step; 0 keeps only the first and last states.
    pub snapshot_every: usize,
    /// Distance between the light cone at `t_max` and the outer boundary.
    pub margin: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            t_max: 10.0,
            dr: None,
            cfl: 0.9,
            blow_threshold: 1e6,
            snapshot_every: 0,
            margin: 0.5,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidParams(format!("T_max must be > 0, got {}", self.t_max)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.blow_threshold > 0.0) {
            return Err(Error::InvalidParams("blow_threshold must be > 0".into()));
        }
        if let Some(dr) = self.dr {
            if !(dr > 0.0) {
                return Err(Error::InvalidParams(format!("dr must be > 0, got {dr}")));
            }
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidParams("margin must be >= 0".into()));
        }
        Ok(())
    }

    pub fn grid_for(&self, mp: &ModelParams) -> RadialGrid {
        let dr = self.dr.unwrap_or(mp.r0 / 64.0);
        RadialGrid::covering(dr, mp.r0 + self.t_max + self.margin)
    }
}

/// One integration on a single grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRun {
    pub status: RunStatus,
    /// Threshold-crossing time, or the last time reached.
    pub t_end: f64,
    pub grid: RadialGrid,
    pub dt0: f64,
    pub steps: usize,
    pub halvings: u32,
    pub peak_amplitude: f64,
    pub min_value: f64,
    /// Max of (support radius − (r0 + t)) over every step.
    pub support_excess: f64,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub status: RunStatus,
    #[serde(rename = "T_est")]
    pub t_est: f64,
    #[serde(rename = "T_refined")]
    pub t_refined: f64,
    pub peak_amplitude: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Sampled `f` and `g` on the grid, before scaling by ε.
pub fn make_initial_data(mp: &ModelParams, grid: &RadialGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let cells = mp.r0 / grid.dr;
    if cells < MIN_CELLS_PER_R0 as f64 - 1e-9 {
        return Err(Error::GridTooCoarse {
            cells,
            required: MIN_CELLS_PER_R0,
        });
    }
    let (f, g) = grid.nodes().into_iter().map(|r| mp.data_at(r)).unzip();
    Ok((f, g))
}

/// Forcing term `F(r, t)` added to the right-hand side.
pub type Forcing<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

struct Operator<'a> {
    grid: RadialGrid,
    inv_vol: Vec<f64>,
    face: Vec<f64>,
    mu: f64,
    p: f64,
    nonlinear: bool,
    forcing: Option<Forcing<'a>>,
}

impl<'a> Operator<'a> {
    fn new(mp: &ModelParams, grid: RadialGrid, forcing: Option<Forcing<'a>>) -> Self {
        Operator {
            grid,
            inv_vol: grid.volumes(mp.pc.n).iter().map(|v| 1.0 / v).collect(),
            face: grid.face_weights(mp.pc.n),
            mu: mp.pc.mu,
            p: mp.pc.p,
            nonlinear: mp.nonlinear,
            forcing,
        }
    }

    fn laplacian(&self, u: &[f64], j: usize) -> f64 {
        let right = self.face[j] * (u[j + 1] - u[j]);
        let left = if j == 0 {
            0.0
        } else {
            self.face[j - 1] * (u[j] - u[j - 1])
        };
        (right - left) * self.inv_vol[j]
    }

    /// `Δu + |u|ᵖ + F` at node `j`.
    fn rhs(&self, u: &[f64], j: usize, t: f64) -> f64 {
        let mut v = self.laplacian(u, j);
        if self.nonlinear {
            v += u[j].abs().powf(self.p);
        }
        if let Some(f) = self.forcing {
            v += f(self.grid.r(j), t);
        }
        v
    }

    fn damping(&self, t: f64) -> f64 {
        self.mu / (1.0 + t)
    }

    /// Number of leading nodes that need updating; node `n−1` stays zero.
    fn active_len(&self, support_end: usize) -> usize {
        let last = self.grid.n_points - 1;
        if self.forcing.is_some() {
            last
        } else {
            (support_end + 1).min(last)
        }
    }
}

/// Index one past the last node with `|u| > 0`.
fn nonzero_end(u: &[f64]) -> usize {
    u.iter().rposition(|v| *v != 0.0).map_or(0, |j| j + 1)
}

fn support_radius(u: &[f64], dr: f64) -> f64 {
    u.iter()
        .rposition(|v| v.abs() > SUPPORT_FLOOR)
        .map_or(0.0, |j| j as f64 * dr)
}

fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// One leapfrog update over the whole grid without forcing.
pub fn step(field: &RadialField, mp: &ModelParams, grid: &RadialGrid, dt: f64) -> Result<RadialField> {
    if (dt - field.dt).abs() > 1e-14 * dt {
        return Err(Error::InvalidParams(
            "leapfrog step must reuse the step size of the previous level".into(),
        ));
    }
    let op = Operator::new(mp, *grid, None);
    let mut next = vec![0.0; grid.n_points];
    leapfrog(&op, field, grid.n_points - 1, &mut next);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: field.t + dt });
    }
    Ok(RadialField {
        t: field.t + dt,
        dt,
        prev_values: field.values.clone(),
        values: next,
    })
}

fn leapfrog(op: &Operator, field: &RadialField, active: usize, next: &mut [f64]) {
    let dt = field.dt;
    let a = 0.5 * op.damping(field.t) * dt;
    let u = &field.values;
    let up = &field.prev_values;
    for j in 0..active {
        next[j] = (2.0 * u[j] - (1.0 - a) * up[j] + dt * dt * op.rhs(u, j, field.t)) / (1.0 + a);
    }
    for v in next[active..].iter_mut() {
        *v = 0.0;
    }
}

/// First step from `u(0)`, `∂ₜu(0)` by Taylor expansion.
fn first_state(op: &Operator, u0: Vec<f64>, v0: &[f64], dt: f64) -> RadialField {
    let k = op.damping(0.0);
    let active = op.active_len(nonzero_end(&u0).max(nonzero_end(v0)));
    let mut u1 = vec![0.0; u0.len()];
    for j in 0..active {
        let acc = op.rhs(&u0, j, 0.0) - k * v0[j];
        u1[j] = u0[j] + dt * v0[j] + 0.5 * dt * dt * acc;
    }
    RadialField {
        t: dt,
        dt,
        values: u1,
        prev_values: u0,
    }
}

/// Replaces `prev_values` so that the field continues with step `dt/2`.
fn halve_step(op: &Operator, field: &mut RadialField, active: usize) {
    let dt = field.dt;
    let h = 0.5 * dt;
    let k = op.damping(field.t);
    let mut prev = vec![0.0; field.values.len()];
    for j in 0..active {
        let u = field.values[j];
        let l = op.rhs(&field.values, j, field.t);
        let d = (u - field.prev_values[j]) / dt;
        let v = (d + 0.5 * dt * l) / (1.0 + 0.5 * k * dt);
        let acc = l - k * v;
        prev[j] = u - h * v + 0.5 * h * h * acc;
    }
    field.prev_values = prev;
    field.dt = h;
}

/// Time `τ ∈ (0, dt]` at which the quadratic interpolant through the step
/// from `u` to `next` first reaches `threshold`.
fn localize_crossing(field: &RadialField, next: &[f64], threshold: f64) -> f64 {
    let dt = field.dt;
    let u = &field.values;
    let up = &field.prev_values;
    let peak = |tau: f64| {
        u.iter()
            .zip(up)
            .zip(next)
            .map(|((&u, &up), &un)| {
                let v = (un - up) / (2.0 * dt);
                let a = (un - 2.0 * u + up) / (dt * dt);
                (u + tau * v + 0.5 * tau * tau * a).abs()
            })
            .fold(0.0, f64::max)
    };
    let (mut lo, mut hi) = (0.0, dt);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if peak(mid) >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Integrates on one grid. `init` overrides the profile data (already
/// scaled); otherwise the data are `ε·(f, g)`.
pub fn run_level(
    mp: &ModelParams,
    grid: RadialGrid,
    settings: &SolverSettings,
    init: Option<(Vec<f64>, Vec<f64>)>,
    forcing: Option<Forcing>,
) -> Result<LevelRun> {
    settings.validate()?;
    if grid.r_max() < mp.r0 + settings.t_max {
        return Err(Error::InvalidParams(format!(
            "grid ends at {} but the light cone reaches {}",
            grid.r_max(),
            mp.r0 + settings.t_max
        )));
    }
    let (u0, v0) = match init {
        Some((u, v)) => {
            if u.len() != grid.n_points || v.len() != grid.n_points {
                return Err(Error::InvalidParams("initial fields do not match the grid".into()));
            }
            (u, v)
        }
        None => {
            let (f, g) = make_initial_data(mp, &grid)?;
            (
                f.iter().map(|x| mp.eps * x).collect(),
                g.iter().map(|x| mp.eps * x).collect::<Vec<_>>(),
            )
        }
    };
    let op = Operator::new(mp, grid, forcing);
    let dt0 = grid.stable_dt(mp.pc.n, settings.cfl);
    let p = mp.pc.p;
    let stiff = |peak: f64, dt: f64| dt * dt * p * peak.powf(p - 1.0) > SOURCE_STIFFNESS_LIMIT;
    let eps_t = 1e-9 * dt0;

    let mut run = LevelRun {
        status: RunStatus::CompletedNoBlowup,
        t_end: 0.0,
        grid,
        dt0,
        steps: 0,
        halvings: 0,
        peak_amplitude: max_abs(&u0),
        min_value: u0.iter().copied().fold(f64::INFINITY, f64::min),
        support_excess: support_radius(&u0, grid.dr) - mp.r0,
        snapshots: vec![Snapshot {
            t: 0.0,
            values: u0[..nonzero_end(&u0)].to_vec(),
        }],
    };
    if run.peak_amplitude >= settings.blow_threshold {
        run.status = RunStatus::BlowupDetected;
        return Ok(run);
    }
    if dt0 > settings.t_max + eps_t {
        return Ok(run);
    }

    let mut dt = dt0;
    while stiff(run.peak_amplitude, dt) {
        dt *= 0.5;
        run.halvings += 1;
    }
    let mut field = first_state(&op, u0, &v0, dt);
    let mut t_base = 0.0;
    let mut k_base = 0usize;
    let mut k = 1usize;
    let mut active = op.active_len(nonzero_end(&field.values).max(nonzero_end(&v0)));
    let mut next = vec![0.0; grid.n_points];

    let record = |run: &mut LevelRun, field: &RadialField, active: usize| -> bool {
        let u = &field.values;
        if u[..active].iter().any(|v| !v.is_finite()) {
            return false;
        }
        let peak = max_abs(&u[..active]);
        run.peak_amplitude = run.peak_amplitude.max(peak);
        run.min_value = u[..active].iter().copied().fold(run.min_value, f64::min);
        run.support_excess = run
            .support_excess
            .max(support_radius(&u[..active], grid.dr) - (mp.r0 + field.t));
        true
    };

    if !record(&mut run, &field, active) {
        run.status = RunStatus::Diverged;
        return Ok(run);
    }
    run.steps = 1;
    if max_abs(&field.values) >= settings.blow_threshold {
        run.status = RunStatus::BlowupDetected;
        run.t_end = dt;
        return Ok(run);
    }
    let snap = |field: &RadialField, active: usize| Snapshot {
        t: field.t,
        values: field.values[..active].to_vec(),
    };
    if settings.snapshot_every == 1 {
        run.snapshots.push(snap(&field, active));
    }

    loop {
        if field.t + field.dt > settings.t_max + eps_t {
            run.t_end = field.t;
            break;
        }
        let peak = max_abs(&field.values[..active]);
        if stiff(peak, field.dt) {
            if run.halvings >= MAX_HALVINGS {
                run.status = RunStatus::Diverged;
                run.t_end = field.t;
                break;
            }
            halve_step(&op, &mut field, active);
            run.halvings += 1;
            t_base = field.t;
            k_base = k;
            continue;
        }
        let new_active = op.active_len(active);
        leapfrog(&op, &field, new_active, &mut next);
        let crossed = max_abs(&next[..new_active]) >= settings.blow_threshold;
        if crossed && next[..new_active].iter().all(|v| v.is_finite()) {
            run.t_end = field.t + localize_crossing(&field, &next, settings.blow_threshold);
            run.status = RunStatus::BlowupDetected;
            run.peak_amplitude = run.peak_amplitude.max(max_abs(&next[..new_active]));
            break;
        }
        k += 1;
        let t_new = t_base + (k - k_base) as f64 * field.dt;
        std::mem::swap(&mut field.prev_values, &mut field.values);
        std::mem::swap(&mut field.values, &mut next);
        field.t = t_new;
        active = new_active;
        run.steps += 1;
        if !record(&mut run, &field, active) {
            run.status = RunStatus::Diverged;
            run.t_end = field.t - field.dt;
            break;
        }
        if settings.snapshot_every > 0 && run.steps % settings.snapshot_every == 0 {
            run.snapshots.push(snap(&field, active));
        }
    }
    if run.status != RunStatus::Diverged && run.snapshots.last().map(|s| s.t) != Some(field.t) {
        run.snapshots.push(snap(&field, active));
    }
    Ok(run)
}

/// Runs the default grid and its `dr/2` refinement and combines them.
pub fn integrate(mp: &ModelParams, settings: &SolverSettings) -> Result<BlowupReport> {
    let (coarse, fine) = integrate_levels(mp, settings)?;
    Ok(combine_levels(&coarse, &fine))
}

/// Both runs behind [`integrate`]: the settings' grid and its halving.
pub fn integrate_levels(mp: &ModelParams, settings: &SolverSettings) -> Result<(LevelRun, LevelRun)> {
    mp.validate()?;
    settings.validate()?;
    let coarse_grid = settings.grid_for(mp);
    let fine_settings = SolverSettings {
        dr: Some(coarse_grid.dr / 2.0),
        ..settings.clone()
    };
    let fine_grid = fine_settings.grid_for(mp);
    let (coarse, fine) = rayon::join(
        || run_level(mp, coarse_grid, settings, None, None),
        || run_level(mp, fine_grid, &fine_settings, None, None),
    );
    Ok((coarse?, fine?))
}

/// Builds the report from a coarse and a fine run. `T_refined` is the
/// Richardson value `T_f + (T_f − T_c)/3` clamped to the bracket `[T_c, T_f]`.
pub fn combine_levels(coarse: &LevelRun, fine: &LevelRun) -> BlowupReport {
    let mut diag = BTreeMap::new();
    diag.insert("T_coarse".to_string(), coarse.t_end);
    diag.insert("T_fine".to_string(), fine.t_end);
    diag.insert("dr_coarse".to_string(), coarse.grid.dr);
    diag.insert("dr_fine".to_string(), fine.grid.dr);
    diag.insert("dt_fine".to_string(), fine.dt0);
    diag.insert("steps_fine".to_string(), fine.steps as f64);
    diag.insert("halvings_fine".to_string(), fine.halvings as f64);
    diag.insert("min_value".to_string(), coarse.min_value.min(fine.min_value));
    diag.insert(
        "support_excess".to_string(),
        coarse.support_excess.max(fine.support_excess),
    );
    diag.insert(
        "coarse_status".to_string(),
        match coarse.status {
            RunStatus::CompletedNoBlowup => 0.0,
            RunStatus::BlowupDetected => 1.0,
            RunStatus::Diverged => 2.0,
        },
    );
    let both = coarse.status == RunStatus::BlowupDetected && fine.status == RunStatus::BlowupDetected;
    let t_refined = if both {
        let rich = fine.t_end + (fine.t_end - coarse.t_end) / 3.0;
        diag.insert("T_richardson".to_string(), rich);
        let (lo, hi) = if coarse.t_end <= fine.t_end {
            (coarse.t_end, fine.t_end)
        } else {
            (fine.t_end, coarse.t_end)
        };
        rich.clamp(lo, hi)
    } else {
        fine.t_end
    };
    BlowupReport {
        status: fine.status,
        t_est: fine.t_end,
        t_refined,
        peak_amplitude: fine.peak_amplitude,
        diagnostics: diag,
    }
}

/// Max over snapshots of (support radius − (r0 + t)).
pub fn check_finite_propagation(run: &LevelRun, r0: f64) -> f64 {
    run.snapshots
        .iter()
        .map(|s| support_radius(&s.values, run.grid.dr) - (r0 + s.t))
        .fold(run.support_excess, f64::max)
}

/// Leapfrog energy between two consecutive levels `u_old` at `t` and
/// `u_new` at `t+dt`, for the linear undamped equation:
/// `½Σ V_j ((u_new−u_old)/dt)² + ½Σ w_{j+1/2} (Du_new)(Du_old)`.
pub fn discrete_energy(grid: &RadialGrid, n: u32, u_old: &[f64], u_new: &[f64], dt: f64) -> f64 {
    let vol = grid.volumes(n);
    let face = grid.face_weights(n);
    let at = |u: &[f64], j: usize| u.get(j).copied().unwrap_or(0.0);
    let len = u_old.len().max(u_new.len()) + 1;
    let len = len.min(grid.n_points);
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for j in 0..len {
        let v = (at(u_new, j) - at(u_old, j)) / dt;
        kinetic += vol[j] * v * v;
        if j + 1 < grid.n_points {
            let dn = at(u_new, j + 1) - at(u_new, j);
            let d_o = at(u_old, j + 1) - at(u_old, j);
            potential += face[j] * dn * d_o;
        }
    }
    0.5 * (kinetic + potential)
}

/// `t,r,u` rows, one per stored node of every snapshot.
pub fn snapshots_csv(snapshots: &[Snapshot], dr: f64) -> String {
    let mut out = String::from("t,r,u\n");
    for s in snapshots {
        for (j, u) in s.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", s.t, j as f64 * dr, u));
        }
    }
    out
}

/// Inverse of [`snapshots_csv`]; returns the snapshots and the spacing.
pub fn parse_snapshots_csv(text: &str) -> Result<(Vec<Snapshot>, f64)> {
    let bad = |line: usize, what: &str| Error::InvalidParams(format!("snapshot csv line {line}: {what}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "t,r,u" => {}
        _ => return Err(bad(1, "expected header t,r,u")),
    }
    let mut snaps: Vec<Snapshot> = Vec::new();
    let mut dr = None;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(i + 1, "not a number"))?;
        let [t, r, u] = cols[..] else {
            return Err(bad(i + 1, "expected three columns"));
        };
        match snaps.last_mut() {
            Some(s) if s.t == t => {
                let j = s.values.len();
                let step = dr.get_or_insert(r / j as f64);
                if (r - j as f64 * *step).abs() > 1e-9 * step.max(r) {
                    return Err(bad(i + 1, "nodes are not uniformly spaced from 0"));
                }
                s.values.push(u);
            }
            last => {
                if last.is_some_and(|s| s.t >= t) {
                    return Err(bad(i + 1, "times must increase"));
                }
                if r != 0.0 {
                    return Err(bad(i + 1, "each snapshot must start at r = 0"));
                }
                snaps.push(Snapshot { t, values: vec![u] });
            }
        }
    }
    if snaps.is_empty() {
        return Err(bad(2, "no rows"));
    }
    let dr = dr.ok_or_else(|| bad(2, "need at least two nodes to infer dr"))?;
    Ok((snaps, dr))
}

/// Input schema of the `simulate` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(rename = "N")]
    pub n: u32,
    pub mu: f64,
    pub p: f64,
    pub eps: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_amp_f")]
    pub amp_f: f64,
    #[serde(default)]
    pub amp_g: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    #[serde(default)]
    pub dr: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_threshold")]
    pub blow_threshold: f64,
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_r0() -> f64 {
    0.5
}
fn default_amp_f() -> f64 {
    1.0
}
fn default_cfl() -> f64 {
    0.9
}
fn default_threshold() -> f64 {
    1e6
}

impl SimulateConfig {
    pub fn model(&self) -> Result<ModelParams> {
        let mp = ModelParams::bump(
            ProblemClass::new(self.n, self.mu, self.p)?,
            self.eps,
            self.r0,
            self.amp_f,
            self.amp_g,
        );
        mp.validate()?;
        Ok(mp)
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            t_max: self.t_max,
            dr: self.dr,
            cfl: self.cfl,
            blow_threshold: self.blow_threshold,
            snapshot_every: self.snapshot_every,
            ..SolverSettings::default()
        }
    }
}
