//! Periodic fronts driven by a frozen rate `H(y)`.
//!
//! In the slope angle `θ = arctan v_y` the front equation reads
//!
//! ```text
//! μ·θ′ = −c + H(y)/cos θ,     θ(Y) = θ(0),     ∫₀^Y tan θ = 0,
//! ```
//!
//! and the unknowns are the speed `c` and the periodic angle `θ`. The angle
//! stays bounded where the slope may not, which keeps the integration away
//! from blow-up.
//!
//! The system is solved by multiple shooting: every node of the period grid
//! carries its own `(θ_i, Q_i, c_i)`, where `Q` is the running integral of
//! `tan θ`, and one classical RK4 step joins consecutive nodes. Newton's method
//! then acts on a banded system. A single long shot would amplify errors by
//! `exp(∫|∂f/∂θ|)`, which is astronomically large once `μ` is small.

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::linalg::BandMatrix;
use crate::medium::PeriodicField;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Angles this close to `±π/2` are treated as a loss of the graph property.
const THETA_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontConfig {
    /// Sup-norm target for the scaled ODE residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Base number of steps per period, before stiffness refinement.
    pub steps: usize,
    /// Target for `Δy·max|∂f/∂θ|`; smaller means finer grids for stiff fronts.
    pub stiffness: f64,
    pub max_steps: usize,
    /// Refine the base grid by an integer factor when `μ` is small.
    pub auto_refine: bool,
    /// Fall back to continuation from larger `μ` when a cold start fails.
    pub continuation: bool,
}

impl Default for FrontConfig {
    fn default() -> Self {
        FrontConfig {
            tol: 1e-9,
            max_iter: 50,
            steps: 2048,
            stiffness: 0.25,
            max_steps: 1 << 18,
            auto_refine: true,
            continuation: true,
        }
    }
}

impl FrontConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "must be positive"));
        }
        if self.steps == 0 || self.max_steps < self.steps {
            return Err(Error::config("steps", "need 0 < steps <= max_steps"));
        }
        if !(self.stiffness > 0.0) {
            return Err(Error::config("stiffness", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be positive"));
        }
        Ok(())
    }
}

/// Rate `H` sampled where RK4 needs it: `[H(y_i⁺), H(y_mid), H(y_{i+1}⁻)]` per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    grid: PeriodicGrid,
    stages: Vec<[f64; 3]>,
    min: f64,
    max: f64,
}

impl Forcing {
    pub fn from_stages(grid: PeriodicGrid, stages: Vec<[f64; 3]>) -> Result<Self> {
        if stages.len() != grid.steps() {
            return Err(Error::config("forcing", "one stage triple per grid step"));
        }
        let flat = stages.iter().flatten();
        let min = flat.clone().copied().fold(f64::INFINITY, f64::min);
        let max = flat.copied().fold(f64::NEG_INFINITY, f64::max);
        if !(min > 0.0) || !max.is_finite() {
            return Err(Error::Domain(format!(
                "rate must be positive and finite, range [{min}, {max}]"
            )));
        }
        Ok(Forcing { grid, stages, min, max })
    }

    pub fn from_field(h: &PeriodicField, grid: PeriodicGrid) -> Result<Self> {
        if (h.period() - grid.period()).abs() > 1e-12 * grid.period() {
            return Err(Error::config("grid", "grid period differs from the rate period"));
        }
        let y = grid.nodes();
        let stages = (0..grid.steps())
            .map(|i| [h.eval(y[i]), h.eval(0.5 * (y[i] + y[i + 1])), h.eval_left(y[i + 1])])
            .collect();
        Self::from_stages(grid, stages)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn stages(&self) -> &[[f64; 3]] {
        &self.stages
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }

    /// Bound on `|tan θ|` for any solution: `√(H_M²/H_m² − 1)`.
    pub fn slope_bound(&self) -> f64 {
        ((self.max / self.min).powi(2) - 1.0).max(0.0).sqrt()
    }

    /// Upper bound of `|∂f/∂θ|` along any solution.
    pub fn stiffness(&self, mu: f64) -> f64 {
        self.max * self.max * self.slope_bound() / (self.min * mu)
    }

    /// Integer refinement factor meeting `Δy·stiffness ≤ κ`, capped by `max_steps`.
    fn refinement(&self, mu: f64, cfg: &FrontConfig) -> usize {
        let need = self.grid.max_width() * self.stiffness(mu) / cfg.stiffness;
        let cap = (cfg.max_steps / self.grid.steps()).max(1);
        (need.ceil() as usize).clamp(1, cap)
    }

    fn refine(&self, m: usize) -> Forcing {
        if m == 1 {
            return self.clone();
        }
        let grid = self.grid.refine(m);
        let mut stages = Vec::with_capacity(grid.steps());
        for s in &self.stages {
            // piecewise-quadratic reconstruction through the three samples
            let q = |t: f64| {
                let (l, c, r) = (s[0], s[1], s[2]);
                l * (1.0 - t) * (1.0 - 2.0 * t) + 4.0 * c * t * (1.0 - t) + r * t * (2.0 * t - 1.0)
            };
            for k in 0..m {
                let (t0, t1) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
                stages.push([q(t0), q(0.5 * (t0 + t1)), q(t1)].map(|v| v.max(self.min).min(self.max)));
            }
        }
        Forcing {
            grid,
            stages,
            min: self.min,
            max: self.max,
        }
    }
}

#[inline]
fn rhs(c: f64, h: f64, mu: f64, theta: f64) -> f64 {
    (-c + h / theta.cos()) / mu
}

#[inline]
fn admissible(theta: f64) -> bool {
    theta.is_finite() && theta.abs() < FRAC_PI_2 - THETA_GUARD
}

/// One RK4 step of `(θ, q)` with the sensitivities to `θ_i` and `c`.
#[derive(Debug, Clone, Copy)]
struct StepMap {
    theta: f64,
    dq: f64,
    th_th: f64,
    th_c: f64,
    q_th: f64,
    q_c: f64,
}

fn shoot_step(theta0: f64, c: f64, h: &[f64; 3], dy: f64, mu: f64) -> Option<StepMap> {
    // state: θ, q, ∂θ/∂θ₀, ∂θ/∂c, ∂q/∂θ₀, ∂q/∂c
    let f = |hv: f64, s: &[f64; 6]| -> Option<[f64; 6]> {
        let th = s[0];
        if !admissible(th) {
            return None;
        }
        let (sn, cs) = th.sin_cos();
        let sec = 1.0 / cs;
        let f_th = hv * sn * sec * sec / mu;
        let sec2 = sec * sec;
        Some([
            (-c + hv * sec) / mu,
            sn * sec,
            f_th * s[2],
            f_th * s[3] - 1.0 / mu,
            sec2 * s[2],
            sec2 * s[3],
        ])
    };
    let axpy = |s: &[f64; 6], k: &[f64; 6], a: f64| -> [f64; 6] {
        let mut o = *s;
        for j in 0..6 {
            o[j] += a * k[j];
        }
        o
    };
    let s0 = [theta0, 0.0, 1.0, 0.0, 0.0, 0.0];
    let k1 = f(h[0], &s0)?;
    let k2 = f(h[1], &axpy(&s0, &k1, 0.5 * dy))?;
    let k3 = f(h[1], &axpy(&s0, &k2, 0.5 * dy))?;
    let k4 = f(h[2], &axpy(&s0, &k3, dy))?;
    let mut s = s0;
    for j in 0..6 {
        s[j] += dy / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    if !admissible(s[0]) {
        return None;
    }
    Some(StepMap {
        theta: s[0],
        dq: s[1],
        th_th: s[2],
        th_c: s[3],
        q_th: s[4],
        q_c: s[5],
    })
}

/// RK4 step of `θ` carrying `K` extra quadratures `a′ = g(H, θ, a)`.
fn augmented_step<const K: usize>(
    theta0: f64,
    c: f64,
    h: &[f64; 3],
    dy: f64,
    mu: f64,
    a0: [f64; K],
    g: &impl Fn(f64, f64, &[f64; K]) -> [f64; K],
) -> (f64, [f64; K]) {
    let eval = |hv: f64, th: f64, a: &[f64; K]| (rhs(c, hv, mu, th), g(hv, th, a));
    let shift = |a: &[f64; K], k: &[f64; K], s: f64| {
        let mut o = *a;
        for j in 0..K {
            o[j] += s * k[j];
        }
        o
    };
    let (t1, k1) = eval(h[0], theta0, &a0);
    let (t2, k2) = eval(h[1], theta0 + 0.5 * dy * t1, &shift(&a0, &k1, 0.5 * dy));
    let (t3, k3) = eval(h[1], theta0 + 0.5 * dy * t2, &shift(&a0, &k2, 0.5 * dy));
    let (t4, k4) = eval(h[2], theta0 + dy * t3, &shift(&a0, &k3, dy));
    let theta = theta0 + dy / 6.0 * (t1 + 2.0 * t2 + 2.0 * t3 + t4);
    let mut a = a0;
    for j in 0..K {
        a[j] += dy / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    (theta, a)
}

/// Node order that keeps the periodic wrap-around inside a narrow band.
fn interleave(n: usize) -> Vec<usize> {
    (0..n)
        .map(|k| if k < n.div_ceil(2) { 2 * k } else { 2 * (n - 1 - k) + 1 })
        .collect()
}

struct Shooter<'a> {
    forcing: &'a Forcing,
    mu: f64,
    pos: Vec<usize>,
}

struct Evaluation {
    residual: Vec<f64>,
    steps: Vec<StepMap>,
}

impl<'a> Shooter<'a> {
    fn new(forcing: &'a Forcing, mu: f64) -> Self {
        let pos = interleave(forcing.grid.steps());
        Shooter { forcing, mu, pos }
    }

    fn n(&self) -> usize {
        self.forcing.grid.steps()
    }

    #[inline]
    fn var(&self, node: usize, comp: usize) -> usize {
        3 * self.pos[node] + comp
    }

    fn unpack(&self, x: &[f64], node: usize) -> (f64, f64, f64) {
        (x[self.var(node, 0)], x[self.var(node, 1)], x[self.var(node, 2)])
    }

    fn pack(&self, theta: &[f64], q: &[f64], c: f64) -> Vec<f64> {
        let mut x = vec![0.0; 3 * self.n()];
        for i in 0..self.n() {
            x[self.var(i, 0)] = theta[i];
            x[self.var(i, 1)] = q[i];
            x[self.var(i, 2)] = c;
        }
        x
    }

    fn evaluate(&self, x: &[f64]) -> Option<Evaluation> {
        let n = self.n();
        let period = self.forcing.grid.period();
        let mut residual = vec![0.0; 3 * n];
        let mut steps = Vec::with_capacity(n);
        for i in 0..n {
            let j = (i + 1) % n;
            let (th_i, q_i, c_i) = self.unpack(x, i);
            let (th_j, q_j, c_j) = self.unpack(x, j);
            let dy = self.forcing.grid.width(i);
            let s = shoot_step(th_i, c_i, &self.forcing.stages[i], dy, self.mu)?;
            residual[self.var(i, 0)] = self.mu * (s.theta - th_j) / dy;
            residual[self.var(i, 1)] = (q_i + s.dq - q_j) / period;
            residual[self.var(i, 2)] = if i == n - 1 { q_j / period } else { c_i - c_j };
            steps.push(s);
        }
        Some(Evaluation { residual, steps })
    }

    fn jacobian(&self, ev: &Evaluation) -> BandMatrix {
        let n = self.n();
        let period = self.forcing.grid.period();
        let mut m = BandMatrix::zeros(3 * n, 8, 8);
        for i in 0..n {
            let j = (i + 1) % n;
            let s = &ev.steps[i];
            let dy = self.forcing.grid.width(i);
            let k = self.mu / dy;
            let (r0, r1, r2) = (self.var(i, 0), self.var(i, 1), self.var(i, 2));
            m.add(r0, self.var(i, 0), k * s.th_th);
            m.add(r0, self.var(i, 2), k * s.th_c);
            m.add(r0, self.var(j, 0), -k);
            m.add(r1, self.var(i, 0), s.q_th / period);
            m.add(r1, self.var(i, 1), 1.0 / period);
            m.add(r1, self.var(i, 2), s.q_c / period);
            m.add(r1, self.var(j, 1), -1.0 / period);
            if i == n - 1 {
                m.add(r2, self.var(j, 1), 1.0 / period);
            } else {
                m.add(r2, self.var(i, 2), 1.0);
                m.add(r2, self.var(j, 2), -1.0);
            }
        }
        m
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct NewtonOutcome {
    x: Vec<f64>,
    ev: Evaluation,
    iterations: usize,
}

/// Damped Newton; after reaching `tol` a few extra steps polish the solution
/// to rounding level so that nearby solves can be differenced.
fn newton(sh: &Shooter, x0: Vec<f64>, cfg: &FrontConfig) -> Result<NewtonOutcome> {
    let mut x = x0;
    let mut ev = sh.evaluate(&x).ok_or(Error::NonConvergence {
        solver: "front",
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let mut iterations = 0;
    let mut converged_at = None;
    loop {
        let res = sup(&ev.residual);
        if res < cfg.tol && converged_at.is_none() {
            converged_at = Some(iterations);
        }
        if let Some(k) = converged_at {
            if res == 0.0 || iterations >= k + 4 {
                break;
            }
        }
        if iterations >= cfg.max_iter {
            if converged_at.is_some() {
                break;
            }
            return Err(Error::NonConvergence {
                solver: "front",
                iterations,
                residual: res,
            });
        }
        let lu = sh.jacobian(&ev).factor()?;
        let mut dx = ev.residual.clone();
        lu.solve_in_place(&mut dx);

        // keep angle updates moderate so that the line search starts sensibly
        let dth = (0..sh.n()).map(|i| dx[sh.var(i, 0)].abs()).fold(0.0, f64::max);
        let mut alpha: f64 = if dth > 0.5 { 0.5 / dth } else { 1.0 };
        let merit0 = l2(&ev.residual);
        let mut accepted = None;
        while alpha > 1e-10 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - alpha * d).collect();
            if let Some(e) = sh.evaluate(&trial) {
                let m = l2(&e.residual);
                if m <= (1.0 - 1e-4 * alpha) * merit0 || (converged_at.is_some() && m < merit0) {
                    accepted = Some((trial, e));
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((t, e)) => {
                x = t;
                ev = e;
            }
            None if converged_at.is_some() => break,
            None => {
                return Err(Error::NonConvergence {
                    solver: "front",
                    iterations,
                    residual: res,
                })
            }
        }
    }
    Ok(NewtonOutcome { x, ev, iterations })
}

/// Periodic front `v` with slope `h` and slope angle `θ` on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontProfile {
    grid: PeriodicGrid,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub theta: Vec<f64>,
    pub mean_zero: bool,
}

impl FrontProfile {
    /// Flat front on `grid`.
    pub fn flat(grid: PeriodicGrid) -> Self {
        let n = grid.steps() + 1;
        FrontProfile {
            grid,
            v: vec![0.0; n],
            h: vec![0.0; n],
            theta: vec![0.0; n],
            mean_zero: true,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn period(&self) -> f64 {
        self.grid.period()
    }

    pub fn y(&self) -> &[f64] {
        self.grid.nodes()
    }

    /// `‖v‖_∞`.
    pub fn amplitude(&self) -> f64 {
        sup(&self.v)
    }

    pub fn max_slope(&self) -> f64 {
        sup(&self.h)
    }

    pub fn max_angle(&self) -> f64 {
        sup(&self.theta)
    }

    /// Cubic Hermite interpolation of `v` from nodal values and slopes.
    pub fn eval(&self, y: f64) -> f64 {
        let (i, t) = self.grid.locate(y);
        let d = self.grid.width(i);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.v[i]
            + (t3 - 2.0 * t2 + t) * d * self.h[i]
            + (-2.0 * t3 + 3.0 * t2) * self.v[i + 1]
            + (t3 - t2) * d * self.h[i + 1]
    }

    /// Slope through the linearly interpolated angle.
    pub fn slope(&self, y: f64) -> f64 {
        let (i, t) = self.grid.locate(y);
        ((1.0 - t) * self.theta[i] + t * self.theta[i + 1]).tan()
    }

    /// `(1/Y)∫₀^Y v` of the Hermite interpolant used by [`eval`](Self::eval).
    pub fn mean(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.grid.steps() {
            let d = self.grid.width(i);
            s += 0.5 * d * (self.v[i] + self.v[i + 1]) + d * d / 12.0 * (self.h[i] - self.h[i + 1]);
        }
        s / self.period()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontResiduals {
    /// Sup norm of `μ(Φ_i(θ_i) − θ_{i+1})/Δy_i`, the discrete ODE residual.
    pub ode: f64,
    /// Mismatch of `θ` across the period boundary.
    pub periodicity: f64,
    /// `|(1/Y)∫₀^Y tan θ|`.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSolution {
    pub speed: f64,
    pub mu: f64,
    pub tol: f64,
    pub profile: FrontProfile,
    pub forcing: Forcing,
    pub residuals: FrontResiduals,
    pub iterations: usize,
}

impl FrontSolution {
    pub fn period(&self) -> f64 {
        self.profile.period()
    }

    /// Integrates `K` quadratures along the solution, restarting `θ` from the
    /// nodal value at each step; returns the per-node cumulative values.
    pub fn integrate<const K: usize>(
        &self,
        init: [f64; K],
        g: impl Fn(f64, f64, &[f64; K]) -> [f64; K],
    ) -> Vec<[f64; K]> {
        let grid = self.forcing.grid();
        let mut out = Vec::with_capacity(grid.steps() + 1);
        let mut a = init;
        out.push(a);
        for i in 0..grid.steps() {
            let (_, next) = augmented_step(
                self.profile.theta[i],
                self.speed,
                &self.forcing.stages[i],
                grid.width(i),
                self.mu,
                a,
                &g,
            );
            a = next;
            out.push(a);
        }
        out
    }

    /// Curvature `κ = −v_yy/(1+v_y²)^{3/2} = (c·cos θ − H)/μ` at the nodes,
    /// using the rate on the right of each node.
    pub fn curvature(&self) -> Vec<f64> {
        let st = self.forcing.stages();
        let n = st.len();
        self.profile
            .theta
            .iter()
            .enumerate()
            .map(|(i, th)| (self.speed * th.cos() - st[i % n][0]) / self.mu)
            .collect()
    }

    /// Normal velocity `V_n = −H − μκ` at the nodes.
    pub fn normal_velocity(&self) -> Vec<f64> {
        let st = self.forcing.stages();
        let n = st.len();
        self.curvature()
            .iter()
            .enumerate()
            .map(|(i, k)| -st[i % n][0] - self.mu * k)
            .collect()
    }
}

/// Starting point for Newton: a speed and an angle profile on some grid.
#[derive(Debug, Clone, Copy)]
pub struct WarmStart<'a> {
    pub speed: f64,
    pub profile: &'a FrontProfile,
}

impl<'a> From<&'a FrontSolution> for WarmStart<'a> {
    fn from(s: &'a FrontSolution) -> Self {
        WarmStart {
            speed: s.speed,
            profile: &s.profile,
        }
    }
}

fn validate_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::config("mu", format!("must be positive, got {mu}")));
    }
    Ok(())
}

/// Solves the front equation for a layered `H` on its own period.
///
/// The grid has a node on every breakpoint of `H` and is refined when `μ` is
/// small enough to make the angle equation stiff.
pub fn solve_front(h: &PeriodicField, mu: f64, cfg: &FrontConfig) -> Result<FrontSolution> {
    validate_mu(mu)?;
    cfg.validate()?;
    if !(h.min() > 0.0) {
        return Err(Error::Domain(format!("essinf H = {} must be positive", h.min())));
    }
    let grid = PeriodicGrid::aligned(h.period(), h.edges(), cfg.steps)?;
    let forcing = Forcing::from_field(h, grid)?;
    solve_front_forcing(&forcing, mu, cfg, None)
}

/// Grid the solver would use for `forcing` at this `μ`.
pub fn refined_forcing(forcing: &Forcing, mu: f64, cfg: &FrontConfig) -> Forcing {
    if cfg.auto_refine {
        forcing.refine(forcing.refinement(mu, cfg))
    } else {
        forcing.clone()
    }
}

/// Solves on the grid of `forcing` (refined if `cfg.auto_refine`), optionally
/// starting from a nearby solution.
pub fn solve_front_forcing(
    forcing: &Forcing,
    mu: f64,
    cfg: &FrontConfig,
    warm: Option<WarmStart>,
) -> Result<FrontSolution> {
    validate_mu(mu)?;
    cfg.validate()?;
    let forcing = refined_forcing(forcing, mu, cfg);
    if let Some(w) = warm {
        if let Ok(s) = solve_on(&forcing, mu, cfg, Some(w)) {
            return Ok(s);
        }
    }
    match solve_on(&forcing, mu, cfg, None) {
        Ok(s) => Ok(s),
        Err(e) if !cfg.continuation => Err(e),
        Err(e) => continuation(&forcing, mu, cfg).map_err(|_| e),
    }
}

/// Walks `μ` down from a value where a cold start converges.
fn continuation(forcing: &Forcing, mu: f64, cfg: &FrontConfig) -> Result<FrontSolution> {
    let mut start = None;
    let mut m = mu;
    for _ in 0..40 {
        m *= 2.0;
        if let Ok(s) = solve_on(forcing, m, cfg, None) {
            start = Some(s);
            break;
        }
    }
    let mut cur = start.ok_or(Error::NonConvergence {
        solver: "front continuation",
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let mut ratio: f64 = 0.5;
    let mut total = cur.iterations;
    while cur.mu > mu {
        let next_mu = (cur.mu * ratio).max(mu);
        match solve_on(forcing, next_mu, cfg, Some(WarmStart::from(&cur))) {
            Ok(s) => {
                total += s.iterations;
                cur = s;
                ratio = (ratio * ratio).clamp(0.25, 0.5);
            }
            Err(e) => {
                ratio = ratio.sqrt();
                if ratio > 0.999 {
                    return Err(e);
                }
            }
        }
    }
    cur.iterations = total;
    Ok(cur)
}

fn solve_on(forcing: &Forcing, mu: f64, cfg: &FrontConfig, warm: Option<WarmStart>) -> Result<FrontSolution> {
    let grid = forcing.grid();
    let n = grid.steps();
    let period = grid.period();
    let sh = Shooter::new(forcing, mu);

    let (theta0, q0, c0) = match warm {
        Some(w) => {
            let y = grid.nodes();
            let th: Vec<f64> = (0..n)
                .map(|i| w.profile.slope(y[i]).atan())
                .map(|t| t.clamp(-1.5, 1.5))
                .collect();
            let v0 = w.profile.eval(0.0);
            let q: Vec<f64> = (0..n).map(|i| w.profile.eval(y[i]) - v0).collect();
            (th, q, w.speed)
        }
        None if forcing.is_constant() => (vec![0.0; n], vec![0.0; n], forcing.min),
        None => {
            // mean of H over the stages, Simpson-weighted
            let mean = (0..n)
                .map(|i| {
                    let s = forcing.stages[i];
                    grid.width(i) * (s[0] + 4.0 * s[1] + s[2]) / 6.0
                })
                .sum::<f64>()
                / period;
            (vec![0.0; n], vec![0.0; n], mean)
        }
    };
    let out = newton(&sh, sh.pack(&theta0, &q0, c0), cfg)?;
    finish(forcing, mu, cfg, &sh, out)
}

fn finish(forcing: &Forcing, mu: f64, cfg: &FrontConfig, sh: &Shooter, out: NewtonOutcome) -> Result<FrontSolution> {
    let grid = forcing.grid();
    let n = grid.steps();
    let period = grid.period();
    let x = &out.x;
    let theta: Vec<f64> = (0..n).map(|i| x[sh.var(i, 0)]).collect();
    let q: Vec<f64> = (0..n).map(|i| x[sh.var(i, 1)]).collect();
    let c_first = x[sh.var(0, 2)];
    let speed = if (0..n).all(|i| x[sh.var(i, 2)] == c_first) {
        c_first
    } else {
        (0..n).map(|i| x[sh.var(i, 2)]).sum::<f64>() / n as f64
    };

    // ∫Q over each step: Q_i·Δ plus the integral of the local running tan θ
    let mut q_mean = 0.0;
    for i in 0..n {
        let (_, a) = augmented_step(
            theta[i],
            x[sh.var(i, 2)],
            &forcing.stages[i],
            grid.width(i),
            mu,
            [0.0, 0.0],
            &|_, th, a: &[f64; 2]| [th.tan(), a[0]],
        );
        q_mean += q[i] * grid.width(i) + a[1];
    }
    q_mean /= period;

    let mut v: Vec<f64> = q.iter().map(|qi| qi - q_mean).collect();
    v.push(v[0]);
    let mut th = theta.clone();
    th.push(theta[0]);
    let h: Vec<f64> = th.iter().map(|t| t.tan()).collect();

    let res = &out.ev.residual;
    let ode = (0..n).map(|i| res[sh.var(i, 0)].abs()).fold(0.0, f64::max);
    let wrap = &out.ev.steps[n - 1];
    let periodicity = (wrap.theta - theta[0]).abs();
    let mean = (out.ev.steps.iter().map(|s| s.dq).sum::<f64>() / period).abs();

    let profile = FrontProfile {
        grid: grid.clone(),
        v,
        h,
        theta: th,
        mean_zero: true,
    };
    Ok(FrontSolution {
        speed,
        mu,
        tol: cfg.tol,
        profile,
        forcing: forcing.clone(),
        residuals: FrontResiduals { ode, periodicity, mean },
        iterations: out.iterations,
    })
}

/// Sup norm of `μ(Φ_i(θ_i) − θ_{i+1})/Δy_i` for given nodal angles and speed,
/// where `Φ_i` is the RK4 step of the angle equation with rate `forcing`.
///
/// `theta` holds one angle per node including the periodic copy. Infinite
/// when a step leaves the admissible range.
pub fn ode_residual(forcing: &Forcing, mu: f64, c: f64, theta: &[f64]) -> f64 {
    let grid = forcing.grid();
    let n = grid.steps();
    assert_eq!(theta.len(), n + 1, "one angle per node including the periodic copy");
    let mut worst = 0.0f64;
    for i in 0..n {
        let dy = grid.width(i);
        match shoot_step(theta[i], c, &forcing.stages[i], dy, mu) {
            Some(s) => worst = worst.max((mu * (s.theta - theta[i + 1]) / dy).abs()),
            None => return f64::INFINITY,
        }
    }
    worst
}

/// `|c − (1/Y)∫₀^Y H·√(1+h²)|`, integrated along the RK4 stages.
pub fn speed_identity_residual(sol: &FrontSolution) -> f64 {
    let acc = sol.integrate([0.0], |hv, th, _| [hv / th.cos()]);
    (sol.speed - acc.last().unwrap()[0] / sol.period()).abs()
}

/// `‖arctan v_y‖_∞ ≤ 2cY/μ + tol`.
pub fn arctan_bound_check(sol: &FrontSolution) -> bool {
    sol.profile.max_angle() <= 2.0 * sol.speed * sol.period() / sol.mu + sol.tol
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontEstimates {
    pub h_min: f64,
    pub h_max: f64,
    pub slope_bound: f64,
    pub speed_ok: bool,
    pub slope_ok: bool,
}

/// Checks `H_m ≤ c ≤ H_M` and `‖v_y‖_∞ ≤ √(H_M²/H_m² − 1)`, each up to `slack`.
pub fn front_estimates(sol: &FrontSolution, slack: f64) -> FrontEstimates {
    let f = &sol.forcing;
    let slope_bound = f.slope_bound();
    FrontEstimates {
        h_min: f.min(),
        h_max: f.max(),
        slope_bound,
        speed_ok: sol.speed >= f.min() - slack && sol.speed <= f.max() + slack,
        slope_ok: sol.profile.max_slope() <= slope_bound + slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_layer() -> PeriodicField {
        PeriodicField::layered(&[0.5, 0.5], &[1.0, 2.0]).unwrap()
    }

    #[test]
    fn interleaving_is_a_permutation_with_narrow_links() {
        for n in 1..40 {
            let sh_pos = interleave(n);
            let mut s = sh_pos.clone();
            s.sort();
            assert_eq!(s, (0..n).collect::<Vec<_>>(), "n={n}");
            for i in 0..n {
                let j = (i + 1) % n;
                assert!(sh_pos[i].abs_diff(sh_pos[j]) <= 2, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn constant_rate_is_exact_without_iterations() {
        let h = PeriodicField::constant(1.0, 1.5).unwrap();
        let s = solve_front(&h, 1.0, &FrontConfig::default()).unwrap();
        assert_eq!(s.speed, 1.5);
        assert_eq!(s.iterations, 0);
        assert!(s.profile.v.iter().all(|v| *v == 0.0));
        assert_eq!(speed_identity_residual(&s), 0.0);
        assert!(arctan_bound_check(&s));
    }

    #[test]
    fn two_layer_front_satisfies_estimates() {
        let s = solve_front(&two_layer(), 1.0, &FrontConfig::default()).unwrap();
        assert!(s.speed > 1.0 && s.speed < 2.0);
        assert!(s.residuals.ode < 1e-9);
        assert!(s.residuals.periodicity < 1e-9);
        assert!(s.residuals.mean < 1e-9);
        let est = front_estimates(&s, 1e-9);
        assert!(est.speed_ok && est.slope_ok);
        assert!(speed_identity_residual(&s) < 1e-8);
        assert!(arctan_bound_check(&s));
        assert!(s.profile.mean().abs() < 1e-9);
        assert_eq!(s.profile.v[0], *s.profile.v.last().unwrap());
    }

    #[test]
    fn large_mu_approaches_mean() {
        let s = solve_front(&two_layer(), 100.0, &FrontConfig::default()).unwrap();
        assert!((s.speed - 1.5).abs() < 1e-4);
        assert!(s.profile.max_slope() < 0.01);
        let s10 = solve_front(&two_layer(), 10.0, &FrontConfig::default()).unwrap();
        assert!(s10.profile.max_angle() <= 0.3 + 1e-9);
    }

    #[test]
    fn small_mu_needs_continuation_and_converges() {
        let s = solve_front(&two_layer(), 1e-2, &FrontConfig::default()).unwrap();
        assert!(s.speed > 1.9 && s.speed < 2.0, "{}", s.speed);
        assert!(s.residuals.ode < 1e-9);
        assert!(front_estimates(&s, 1e-9).slope_ok);
    }

    #[test]
    fn scaling_covariance() {
        let cfg = FrontConfig::default();
        let base = solve_front(&two_layer(), 1.0, &cfg).unwrap();
        let h2 = two_layer().scaled(2.0).unwrap();
        let big = solve_front(&h2, 2.0, &cfg).unwrap();
        assert!((base.speed - big.speed).abs() < 1e-12);
        for (a, b) in base.profile.v.iter().zip(&big.profile.v) {
            assert!((2.0 * a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn shift_equivariance() {
        let cfg = FrontConfig::default();
        let base = solve_front(&two_layer(), 1.0, &cfg).unwrap();
        // H shifted by a quarter period
        let shifted = PeriodicField::from_edges(1.0, vec![0.0, 0.25, 0.75], vec![2.0, 1.0, 2.0]).unwrap();
        let s = solve_front(&shifted, 1.0, &cfg).unwrap();
        assert!((base.speed - s.speed).abs() < 1e-10);
        for k in 0..20 {
            let y = k as f64 / 20.0;
            assert!((base.profile.eval(y) - s.profile.eval(y + 0.25)).abs() < 1e-7);
        }
    }

    #[test]
    fn invalid_inputs() {
        let h = two_layer();
        assert!(matches!(
            solve_front(&h, -1.0, &FrontConfig::default()),
            Err(Error::Config { .. })
        ));
        let z = PeriodicField::layered(&[0.5, 0.5], &[0.0, 1.0]).unwrap();
        assert!(matches!(
            solve_front(&z, 1.0, &FrontConfig::default()),
            Err(Error::Domain(_))
        ));
    }
}
