//! Travelling waves of the coupled front–temperature system.
//!
//! A wave is a fixed point of `H ↦ R(·, τ[H])`, where `τ[H]` is the front trace
//! of the temperature solved below the front driven by `H`. The iteration is
//! damped Picard:
//!
//! ```text
//! H_{k+1} = (1 − ω)·H_k + ω·R(·, τ_k)
//! ```
//!
//! Existence comes from a compactness argument, not from a contraction, so
//! the damping is halved whenever the defect grows.

use crate::error::{Error, Result};
use crate::front::{
    arctan_bound_check, front_estimates, ode_residual, solve_front_forcing, Forcing, FrontConfig, FrontEstimates,
    FrontProfile, FrontSolution, WarmStart,
};
use crate::grid::PeriodicGrid;
use crate::medium::{default_temperature_grid, DegeneracyTrend, MediumSpec, SmallPeriod};
use crate::temperature::{
    solve_temperature, verify_temperature_bounds, MeshConfig, TemperatureBounds, TemperatureField,
};
use serde::{Deserialize, Serialize};

/// Smallest trace temperature accepted before declaring a quench.
pub const QUENCH_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointConfig {
    /// Initial damping `ω ∈ (0, 1]`.
    pub damping: f64,
    /// Target for `‖R(·, τ_k) − H_k‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations without progress before giving up.
    pub stagnation_window: usize,
    pub front: FrontConfig,
    pub mesh: MeshConfig,
    /// Front steps per temperature cell in `y`.
    pub front_refine: usize,
    /// Accept a medium that fails both the small-period condition and the
    /// slow-decay condition at `T = 0`.
    pub acknowledge_degenerate: bool,
    /// Replace `R` by `max{R, 1/n}`.
    pub regularize: Option<u32>,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            damping: 0.5,
            tol: 1e-9,
            max_iter: 200,
            stagnation_window: 10,
            front: FrontConfig::default(),
            mesh: MeshConfig::default(),
            front_refine: 32,
            acknowledge_degenerate: false,
            regularize: None,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config(
                "damping",
                format!("must lie in (0, 1], got {}", self.damping),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "must be positive"));
        }
        if self.max_iter == 0 || self.stagnation_window == 0 || self.front_refine == 0 {
            return Err(Error::config("max_iter", "iteration counts must be positive"));
        }
        if self.regularize == Some(0) {
            return Err(Error::config("regularize", "n must be positive"));
        }
        self.front.validate()
    }
}

/// Certificates derived from the a-priori estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveCertificates {
    /// `H*_m ≤ c ≤ H*_M` and the slope bound, with `H*` the final rate.
    pub front: FrontEstimates,
    /// `‖arctan v_y‖_∞ ≤ 2cY/μ`.
    pub arctan: bool,
    pub temperature: TemperatureBounds,
    /// Envelope violation below `1e-3`.
    pub envelope_ok: bool,
    pub lower_bound: LowerBoundCertificate,
    /// `min u ≥ −1e-12`.
    pub nonnegative: bool,
}

impl WaveCertificates {
    pub fn all_passed(&self) -> bool {
        self.front.speed_ok
            && self.front.slope_ok
            && self.arctan
            && self.envelope_ok
            && self.temperature.h1_ok
            && self.lower_bound.passed()
            && self.nonnegative
    }

    /// Names of the failing certificates.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if !self.front.speed_ok {
            f.push("front_speed");
        }
        if !self.front.slope_ok {
            f.push("front_slope");
        }
        if !self.arctan {
            f.push("arctan");
        }
        if !self.envelope_ok {
            f.push("envelope");
        }
        if !self.temperature.h1_ok {
            f.push("h1");
        }
        if !self.lower_bound.passed() {
            f.push("lower_bound");
        }
        if !self.nonnegative {
            f.push("nonnegative");
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LowerBoundCertificate {
    /// Explicit bound available when `μ/Y > 4R_M/π`.
    Quantitative { bound: f64, min_trace: f64, margin: f64 },
    /// Only positivity of the trace can be asserted.
    Qualitative { min_trace: f64 },
}

impl LowerBoundCertificate {
    pub fn passed(&self) -> bool {
        match *self {
            LowerBoundCertificate::Quantitative { margin, .. } => margin >= -1e-9,
            LowerBoundCertificate::Qualitative { min_trace } => min_trace > 0.0,
        }
    }
}

/// `(g_m a_m/(a_M b_M))·exp(−(2R_M b_M Y/a_M)·tan(2R_M Y/μ))`, if `μ/Y > 4R_M/π`.
pub fn trace_lower_bound(medium: &MediumSpec, mu: f64) -> Option<f64> {
    if !medium.check_small_period(mu).holds {
        return None;
    }
    let (a, b, g) = (&medium.a, &medium.b, &medium.g);
    let rm = medium.rate.r_max();
    let y = medium.period();
    let pre = g.min() * a.min() / (a.max() * b.max());
    Some(pre * (-(2.0 * rm * b.max() * y / a.max()) * (2.0 * rm * y / mu).tan()).exp())
}

pub fn lower_bound_certificate(trace: &[f64], medium: &MediumSpec, mu: f64) -> LowerBoundCertificate {
    let min_trace = trace.iter().copied().fold(f64::INFINITY, f64::min);
    match trace_lower_bound(medium, mu) {
        Some(bound) => LowerBoundCertificate::Quantitative {
            bound,
            min_trace,
            margin: min_trace - bound,
        },
        None => LowerBoundCertificate::Qualitative { min_trace },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravellingWave {
    pub speed: f64,
    pub mu: f64,
    pub front: FrontSolution,
    pub temperature: TemperatureField,
    /// Trace on the temperature `y` nodes.
    pub trace: Vec<f64>,
    /// `H* = R(·, τ)` on the front grid.
    pub rate: Forcing,
    /// Final `‖R(·, τ_k) − H_k‖_∞`.
    pub defect: f64,
    pub history: Vec<f64>,
    pub iterations: usize,
    pub damping: f64,
    pub small_period: SmallPeriod,
    pub certificates: WaveCertificates,
}

impl TravellingWave {
    pub fn profile(&self) -> &FrontProfile {
        &self.front.profile
    }
}

/// Rate evaluator honoring the optional regularization.
struct RateSampler<'a> {
    medium: &'a MediumSpec,
    floor: f64,
}

impl RateSampler<'_> {
    fn eval(&self, y: f64, t: f64) -> f64 {
        self.medium.rate.eval_unchecked(y, t).max(self.floor)
    }

    /// Stage samples on `grid` for the trace `tau` (linear in `y`).
    fn stages(&self, grid: &PeriodicGrid, tau: &dyn Fn(f64) -> f64) -> Vec<[f64; 3]> {
        let y = grid.nodes();
        (0..grid.steps())
            .map(|i| {
                let (yl, yr) = (y[i], y[i + 1]);
                let ym = 0.5 * (yl + yr);
                [self.eval(ym, tau(yl)), self.eval(ym, tau(ym)), self.eval(ym, tau(yr))]
            })
            .collect()
    }
}

fn sup_diff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn check_preconditions(medium: &MediumSpec, mu: f64, cfg: &FixedPointConfig) -> Result<SmallPeriod> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::config("mu", format!("must be positive, got {mu}")));
    }
    cfg.validate()?;
    let report = medium.validate_assumptions(&default_temperature_grid())?;
    if let Some(f) = report.failures().next() {
        return Err(Error::config(
            f.id,
            f.witness.clone().unwrap_or_else(|| "assumption violated".into()),
        ));
    }
    let sp = medium.check_small_period(mu);
    if !sp.holds
        && report.degeneracy != DegeneracyTrend::Growing
        && cfg.regularize.is_none()
        && !cfg.acknowledge_degenerate
    {
        return Err(Error::config(
            "acknowledge_degenerate",
            format!(
                "μ/Y is below 4R_M/π (margin {:.4}) and R degenerates at T = 0; existence is not guaranteed",
                sp.margin
            ),
        ));
    }
    Ok(sp)
}

/// Damped fixed-point iteration for a travelling wave `(c, v, u)`.
pub fn solve_travelling_wave(medium: &MediumSpec, mu: f64, cfg: &FixedPointConfig) -> Result<TravellingWave> {
    let small_period = check_preconditions(medium, mu, cfg)?;
    let sampler = RateSampler {
        medium,
        floor: cfg.regularize.map_or(0.0, |n| 1.0 / n as f64),
    };

    let ygrid = PeriodicGrid::aligned(medium.period(), &medium.breakpoints(), cfg.mesh.n_y)?;
    let fgrid = ygrid.refine(cfg.front_refine);
    let t0 = medium.trace_temperature();
    let mut h = sampler.stages(&fgrid, &|_| t0);

    let mut omega = cfg.damping;
    let mut history: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut warm: Option<FrontSolution> = None;

    for k in 0..cfg.max_iter {
        let wrap = |e: Error| Error::Inner {
            iteration: k,
            source: Box::new(e),
        };
        let forcing = Forcing::from_stages(fgrid.clone(), h.clone()).map_err(wrap)?;
        let front = solve_front_forcing(&forcing, mu, &cfg.front, warm.as_ref().map(WarmStart::from)).map_err(wrap)?;
        let temp = solve_temperature(front.speed, &front.profile, medium, &cfg.mesh).map_err(wrap)?;
        let trace = temp.trace();
        let tmin = trace.iter().copied().fold(f64::INFINITY, f64::min);
        if !(tmin >= QUENCH_FLOOR) {
            return Err(Error::Quench {
                iteration: k,
                floor: QUENCH_FLOOR,
            });
        }
        let tau = |y: f64| temp.trace_at(y);
        let target = sampler.stages(&fgrid, &tau);
        let defect = sup_diff(&target, &h);
        history.push(defect);

        if defect < cfg.tol {
            let rate = Forcing::from_stages(fgrid.clone(), target).map_err(wrap)?;
            return Ok(finish(
                medium,
                mu,
                front,
                temp,
                trace,
                rate,
                defect,
                history,
                k + 1,
                omega,
                small_period,
            ));
        }
        if defect < best * (1.0 - 1e-3) {
            best = defect;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.stagnation_window {
                return Err(Error::Stagnation {
                    iteration: k,
                    defect,
                    history,
                });
            }
        }
        if history.len() >= 2 && defect > history[history.len() - 2] {
            omega = (0.5 * omega).max(1e-3);
        }
        for (hs, ts) in h.iter_mut().zip(&target) {
            for s in 0..3 {
                hs[s] = (1.0 - omega) * hs[s] + omega * ts[s];
            }
        }
        warm = Some(front);
    }
    Err(Error::NonConvergence {
        solver: "fixed point",
        iterations: cfg.max_iter,
        residual: *history.last().unwrap_or(&f64::INFINITY),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    medium: &MediumSpec,
    mu: f64,
    front: FrontSolution,
    temperature: TemperatureField,
    trace: Vec<f64>,
    rate: Forcing,
    defect: f64,
    history: Vec<f64>,
    iterations: usize,
    damping: f64,
    small_period: SmallPeriod,
) -> TravellingWave {
    let c = front.speed;
    // the estimates refer to the rate the front was solved with, measured
    // against H*; the two differ by the final defect
    let mut est = front_estimates(&front, 1e-6);
    est.h_min = rate.min();
    est.h_max = rate.max();
    est.slope_bound = rate.slope_bound();
    est.speed_ok = c >= rate.min() - 1e-6 && c <= rate.max() + 1e-6;
    est.slope_ok = front.profile.max_slope() <= est.slope_bound + 1e-6;
    let bounds = verify_temperature_bounds(&temperature, medium, c);
    let certificates = WaveCertificates {
        front: est,
        arctan: arctan_bound_check(&front),
        envelope_ok: bounds.envelope_violation < 1e-3,
        temperature: bounds,
        lower_bound: lower_bound_certificate(&trace, medium, mu),
        nonnegative: bounds.min_value >= -1e-12,
    };
    TravellingWave {
        speed: c,
        mu,
        front,
        temperature,
        trace,
        rate,
        defect,
        history,
        iterations,
        damping,
        small_period,
        certificates,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveResiduals {
    /// Front ODE residual with the rate `H* = R(·, τ)`.
    pub front: f64,
    /// Relative residual of the temperature linear system.
    pub temperature: f64,
    /// `‖H* − R(·, τ)‖_∞`.
    pub coupling: f64,
}

/// Residuals of `wv` as a solution of the coupled system.
pub fn wave_residuals(wv: &TravellingWave, medium: &MediumSpec, mu: f64) -> WaveResiduals {
    let sampler = RateSampler { medium, floor: 0.0 };
    let tau = |y: f64| wv.temperature.trace_at(y);
    let fresh = sampler.stages(wv.rate.grid(), &tau);
    let coupling = sup_diff(&fresh, wv.rate.stages());
    // the front may live on a refinement of the rate grid
    let rate = if wv.front.forcing.grid() == wv.rate.grid() {
        wv.rate.clone()
    } else {
        Forcing::from_stages(
            wv.front.forcing.grid().clone(),
            sampler.stages(wv.front.forcing.grid(), &tau),
        )
        .expect("positive rate")
    };
    WaveResiduals {
        front: ode_residual(&rate, mu, wv.speed, &wv.front.profile.theta),
        temperature: wv.temperature.linear_residual,
        coupling,
    }
}
