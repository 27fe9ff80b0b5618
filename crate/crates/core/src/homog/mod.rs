//! Homogenized limits of travelling waves as the period shrinks.
//!
//! With period `ε` and curvature coefficient `μ(ε)`, the wave speed converges
//! to `c⁰(λ)` where `λ = lim μ(ε)/ε`. The limit is governed by the effective
//! rate `ℛ(z) = R(z, ḡ/b̄)` on the unit cell:
//!
//! * `λ = ∞`: `c⁰ = ∫₀¹ ℛ`, flat front;
//! * `λ = 0`: `c⁰ = esssup ℛ`;
//! * `0 < λ < ∞`: `c⁰(λ)` is the speed of the corrector, the front equation on
//!   the unit cell with `H = ℛ` and `μ = λ`.
//!
//! The limiting temperature is `u⁰(x) = (ḡ/b̄)·exp(c⁰·b̄·x/ā)` for `x < 0`.

mod curve;
mod second_order;
mod sweep;

pub use curve::{corrector_limits_check, speed_curve, CorrectorLimits, CurveConfig, Monotonicity, SpeedCurve};
pub use second_order::{second_order_profile, SecondOrderProfile};
pub use sweep::{epsilon_sweep, MuRule, SweepConfig, SweepMetrics, SweepOrders, SweepResult, SweepRow, SweepTrends};

use crate::error::{Error, Result};
use crate::front::{solve_front, FrontConfig, FrontSolution};
use crate::medium::{MediumSpec, PeriodicField};
use serde::{Deserialize, Serialize};

/// Limit of `μ(ε)/ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lambda {
    Zero,
    Finite(f64),
    Infinity,
}

impl Lambda {
    pub fn validate(self) -> Result<Self> {
        match self {
            Lambda::Finite(l) if !(l > 0.0 && l.is_finite()) => {
                Err(Error::config("lambda", format!("must be positive, got {l}")))
            }
            other => Ok(other),
        }
    }
}

/// Unit-cell front with `H = ℛ` and `μ = λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrector {
    pub lambda: f64,
    pub solution: FrontSolution,
}

impl Corrector {
    pub fn solve(rate: &PeriodicField, lambda: f64, cfg: &FrontConfig) -> Result<Self> {
        Lambda::Finite(lambda).validate()?;
        if (rate.period() - 1.0).abs() > 1e-12 {
            return Err(Error::config("period", "the corrector lives on the unit cell"));
        }
        Ok(Corrector {
            lambda,
            solution: solve_front(rate, lambda, cfg)?,
        })
    }

    pub fn speed(&self) -> f64 {
        self.solution.speed
    }

    /// `w(z)`, mean zero.
    pub fn eval(&self, z: f64) -> f64 {
        self.solution.profile.eval(z)
    }

    pub fn w(&self) -> &[f64] {
        &self.solution.profile.v
    }

    pub fn h(&self) -> &[f64] {
        &self.solution.profile.h
    }

    /// `‖w‖_{W^{1,∞}} = max(‖w‖_∞, ‖w_z‖_∞)`.
    pub fn w1inf(&self) -> f64 {
        self.solution.profile.amplitude().max(self.solution.profile.max_slope())
    }

    /// `ℛ̃₀ = ℛ·h·√(1+h²)` at the nodes, with `ℛ` taken to the right of each node.
    pub fn rtilde(&self) -> Vec<f64> {
        let st = self.solution.forcing.stages();
        let n = st.len();
        self.solution
            .profile
            .theta
            .iter()
            .enumerate()
            .map(|(i, th)| st[i % n][0] * th.tan() / th.cos())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedWave {
    pub lambda: Lambda,
    pub speed: f64,
    pub abar: f64,
    pub bbar: f64,
    pub gbar: f64,
    pub corrector: Option<Corrector>,
}

impl HomogenizedWave {
    /// `u⁰`, extended evenly to `x > 0`.
    pub fn u0(&self, x: f64) -> f64 {
        self.gbar / self.bbar * (-self.speed * self.bbar * x.abs() / self.abar).exp()
    }

    /// `du⁰/dx` for `x ≤ 0`.
    pub fn u0_x(&self, x: f64) -> f64 {
        self.speed * self.bbar / self.abar * self.u0(x)
    }
}

/// Homogenized speed for the regime `lambda` of a unit-cell medium.
pub fn homogenized_speed(lambda: Lambda, medium: &MediumSpec, cfg: &FrontConfig) -> Result<HomogenizedWave> {
    let lambda = lambda.validate()?;
    let rate = medium.effective_rate()?;
    let (speed, corrector) = match lambda {
        Lambda::Infinity => (rate.mean(), None),
        Lambda::Zero => (rate.max(), None),
        Lambda::Finite(l) => {
            let c = Corrector::solve(&rate, l, cfg)?;
            (c.speed(), Some(c))
        }
    };
    Ok(HomogenizedWave {
        lambda,
        speed,
        abar: medium.a.mean(),
        bbar: medium.b.mean(),
        gbar: medium.g.mean(),
        corrector,
    })
}

/// `c⁰′(λ₀) = −∫₀¹ θ′·e^{φ} / ∫₀¹ e^{φ}` with `φ(z) = (1/λ₀)∫_z¹ ℛ̃₀`.
///
/// `θ′ = (−c + ℛ/cos θ)/λ₀` is taken from the equation rather than by
/// differencing. The exponent is carried relative to its maximum, so the
/// common factor `e^{φ(0)}` cancels without overflow.
pub fn speed_derivative_formula(corrector: &Corrector) -> f64 {
    let sol = &corrector.solution;
    if sol.forcing.is_constant() {
        return 0.0;
    }
    let lam = corrector.lambda;
    let c = sol.speed;
    let psi = sol.integrate([0.0], |hv, th, _| [-hv * th.tan() / th.cos() / lam]);
    let top = psi.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let acc = sol.integrate([-top, 0.0, 0.0], |hv, th, a| {
        let sec = 1.0 / th.cos();
        let e = a[0].exp();
        [-hv * th.tan() * sec / lam, (-c + hv * sec) / lam * e, e]
    });
    let last = acc.last().unwrap();
    -last[1] / last[2]
}

/// `|∫₀¹ ℛ̃₀|`.
pub fn rtilde_integral_check(corrector: &Corrector) -> f64 {
    let sol = &corrector.solution;
    let acc = sol.integrate([0.0], |hv, th, _| [hv * th.tan() / th.cos()]);
    acc.last().unwrap()[0].abs() / sol.period()
}
