use super::{rtilde_integral_check, speed_derivative_formula, Corrector};
use crate::error::{Error, Result};
use crate::front::{solve_front_forcing, FrontConfig, WarmStart};
use crate::medium::PeriodicField;
use crate::par::{self, Execution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveConfig {
    pub front: FrontConfig,
    /// Central-difference step relative to `λ`.
    pub fd_rel: f64,
    pub exec: Execution,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            front: FrontConfig::default(),
            fd_rel: 1e-4,
            exec: Execution::default(),
        }
    }
}

/// One point of `λ ↦ c⁰(λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub speed: f64,
    /// `c⁰′` from the exponential-weight formula.
    pub formula: f64,
    /// `c⁰′` by central differences on the same grid.
    pub fd: f64,
    /// `|∫₀¹ ℛ̃₀|`.
    pub rtilde: f64,
    pub amplitude: f64,
    pub max_slope: f64,
    pub max_angle: f64,
    pub steps: usize,
}

impl CurvePoint {
    /// `|formula − fd| / |fd|`, or the absolute gap when both vanish.
    pub fn derivative_rel_err(&self) -> f64 {
        let gap = (self.formula - self.fd).abs();
        if self.fd == 0.0 {
            gap
        } else {
            gap / self.fd.abs()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Monotonicity {
    /// All speeds agree to rounding.
    Constant,
    /// Every consecutive drop is positive; `min_gap` is the smallest.
    StrictlyDecreasing { min_gap: f64 },
    /// `c(λ_{index+1}) − c(λ_index) = increase ≥ 0`.
    NotMonotone { index: usize, increase: f64 },
    /// Fewer than two points.
    Insufficient,
}

impl Monotonicity {
    fn classify(speeds: &[f64]) -> Self {
        if speeds.len() < 2 {
            return Monotonicity::Insufficient;
        }
        let hi = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            return Monotonicity::Constant;
        }
        let mut min_gap = f64::INFINITY;
        for (i, w) in speeds.windows(2).enumerate() {
            let drop = w[0] - w[1];
            if drop <= 0.0 {
                return Monotonicity::NotMonotone {
                    index: i,
                    increase: -drop,
                };
            }
            min_gap = min_gap.min(drop);
        }
        Monotonicity::StrictlyDecreasing { min_gap }
    }

    /// Strictly decreasing with every drop above `margin`.
    pub fn decreasing_with_margin(&self, margin: f64) -> bool {
        matches!(self, Monotonicity::StrictlyDecreasing { min_gap } if *min_gap > margin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedCurve {
    pub points: Vec<CurvePoint>,
    /// `λ` values whose solve failed, with the reason.
    pub failures: Vec<(f64, String)>,
    pub monotonicity: Monotonicity,
    pub rate_mean: f64,
    pub rate_max: f64,
}

impl SpeedCurve {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.speed).collect()
    }

    pub fn max_derivative_rel_err(&self) -> f64 {
        self.points
            .iter()
            .map(CurvePoint::derivative_rel_err)
            .fold(0.0, f64::max)
    }

    pub fn max_rtilde(&self) -> f64 {
        self.points.iter().map(|p| p.rtilde).fold(0.0, f64::max)
    }

    /// `n` points log-spaced over `[lo, hi]`.
    pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 || (n == 1 && hi != lo) {
            return Err(Error::config(
                "lambda_grid",
                format!("need 0 < lo <= hi and n >= 1, got {lo}:{hi}:{n}"),
            ));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        Ok((0..n)
            .map(|k| match k {
                0 => lo,
                k if k == n - 1 => hi,
                k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
            })
            .collect())
    }
}

fn curve_point(rate: &PeriodicField, lambda: f64, cfg: &CurveConfig) -> Result<CurvePoint> {
    let cor = Corrector::solve(rate, lambda, &cfg.front)?;
    let sol = &cor.solution;
    // Differences reuse the grid chosen at `λ` so both sides share the same
    // discretization error.
    let fixed = FrontConfig {
        auto_refine: false,
        ..cfg.front
    };
    let d = cfg.fd_rel * lambda;
    let plus = solve_front_forcing(&sol.forcing, lambda + d, &fixed, Some(WarmStart::from(sol)))?;
    let minus = solve_front_forcing(&sol.forcing, lambda - d, &fixed, Some(WarmStart::from(sol)))?;
    Ok(CurvePoint {
        lambda,
        speed: cor.speed(),
        formula: speed_derivative_formula(&cor),
        fd: (plus.speed - minus.speed) / (2.0 * d),
        rtilde: rtilde_integral_check(&cor),
        amplitude: sol.profile.amplitude(),
        max_slope: sol.profile.max_slope(),
        max_angle: sol.profile.max_angle(),
        steps: sol.forcing.grid().steps(),
    })
}

/// Samples `c⁰(λ)` and its derivative on `lambdas` for the unit-cell rate `ℛ`.
/// Points are solved independently; a failed point is recorded and skipped.
pub fn speed_curve(rate: &PeriodicField, lambdas: &[f64], cfg: &CurveConfig) -> Result<SpeedCurve> {
    cfg.front.validate()?;
    if !(cfg.fd_rel > 0.0 && cfg.fd_rel < 0.5) {
        return Err(Error::config(
            "fd_rel",
            format!("must lie in (0, 0.5), got {}", cfg.fd_rel),
        ));
    }
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::config("lambda", "need at least one positive finite value"));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("lambda", "values must be strictly increasing"));
    }
    let results = par::map(cfg.exec, lambdas, |&l| curve_point(rate, l, cfg));
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (l, r) in lambdas.iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push((*l, e.to_string())),
        }
    }
    let speeds: Vec<f64> = points.iter().map(|p| p.speed).collect();
    Ok(SpeedCurve {
        monotonicity: Monotonicity::classify(&speeds),
        points,
        failures,
        rate_mean: rate.mean(),
        rate_max: rate.max(),
    })
}

/// Behaviour of the corrector at the ends of the `λ` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorLimits {
    /// `|c⁰(λ_min) − max ℛ|`.
    pub small_lambda_gap: f64,
    /// `|c⁰(λ_max) − ∫ℛ|`.
    pub large_lambda_gap: f64,
    /// `‖w‖_{W^{1,∞}}` at each `λ`.
    pub w1inf: Vec<f64>,
    /// `‖w‖_{W^{1,∞}}` is non-increasing over `λ ≥ 1`.
    pub w1inf_decreasing: bool,
    /// `max λ·‖h‖_∞` over `λ ∈ [1, ∞)` in the sample.
    pub lambda_h_max: f64,
    /// `λ·‖arctan h‖_∞ ≤ 2c⁰(λ)` at every sampled `λ`.
    pub lambda_h_bounded: bool,
}

pub fn corrector_limits_check(curve: &SpeedCurve) -> Result<CorrectorLimits> {
    let (first, last) = match (curve.points.first(), curve.points.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::config("lambda", "the curve has no points")),
    };
    let w1inf: Vec<f64> = curve.points.iter().map(|p| p.amplitude.max(p.max_slope)).collect();
    let large: Vec<&CurvePoint> = curve.points.iter().filter(|p| p.lambda >= 1.0).collect();
    let w1inf_decreasing = large
        .windows(2)
        .all(|w| w[1].amplitude.max(w[1].max_slope) <= w[0].amplitude.max(w[0].max_slope) * (1.0 + 1e-12));
    let lambda_h_max = large.iter().map(|p| p.lambda * p.max_slope).fold(0.0, f64::max);
    let lambda_h_bounded = curve
        .points
        .iter()
        .all(|p| p.lambda * p.max_angle <= 2.0 * p.speed * (1.0 + 1e-9));
    Ok(CorrectorLimits {
        small_lambda_gap: (first.speed - curve.rate_max).abs(),
        large_lambda_gap: (last.speed - curve.rate_mean).abs(),
        w1inf,
        w1inf_decreasing,
        lambda_h_max,
        lambda_h_bounded,
    })
}
