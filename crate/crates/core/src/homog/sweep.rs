use super::{second_order_profile, Corrector, Lambda, SecondOrderProfile};
use crate::error::{Error, Result};
use crate::front::{FrontConfig, FrontProfile};
use crate::medium::{MediumSpec, PeriodicField};
use crate::par::{self, Execution};
use crate::temperature::{solve_temperature, MeshConfig};
use crate::wave::{solve_travelling_wave, FixedPointConfig, TravellingWave, WaveCertificates};
use serde::{Deserialize, Serialize};

/// How `μ` depends on the period `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum MuRule {
    /// `μ(ε) = μ`, so `λ = ∞`.
    Fixed { mu: f64 },
    /// `μ(ε) = λ·ε`.
    Linear { lambda: f64 },
    /// One `μ` per `ε`, with the limit regime stated by the caller.
    Custom { mus: Vec<f64>, lambda: Lambda },
}

impl MuRule {
    pub fn lambda(&self) -> Lambda {
        match self {
            MuRule::Fixed { .. } => Lambda::Infinity,
            MuRule::Linear { lambda } => Lambda::Finite(*lambda),
            MuRule::Custom { lambda, .. } => *lambda,
        }
    }

    fn mu(&self, k: usize, eps: f64) -> f64 {
        match self {
            MuRule::Fixed { mu } => *mu,
            MuRule::Linear { lambda } => lambda * eps,
            MuRule::Custom { mus, .. } => mus[k],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let bad = |v: f64| !(v > 0.0 && v.is_finite());
        match self {
            MuRule::Fixed { mu } if bad(*mu) => Err(Error::config("mu", format!("must be positive, got {mu}"))),
            MuRule::Linear { lambda } if bad(*lambda) => {
                Err(Error::config("lambda", format!("must be positive, got {lambda}")))
            }
            MuRule::Custom { mus, lambda } => {
                if mus.len() != n || mus.iter().any(|m| bad(*m)) {
                    return Err(Error::config("mu_rule", "custom rule needs one positive mu per eps"));
                }
                lambda.validate().map(|_| ())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub wave: FixedPointConfig,
    /// Settings for the unit-cell corrector.
    pub corrector: FrontConfig,
    pub exec: Execution,
}

/// Measurements for one converged `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetrics {
    pub speed: f64,
    /// `‖v^ε‖_∞`.
    pub amplitude: f64,
    /// `‖v^ε − ε·w(·/ε)‖_∞`, or `‖v^ε‖_∞` when `λ = ∞`.
    pub e1: Option<f64>,
    /// `‖v^ε − ε²·Q(·/ε)‖_∞` for a fixed `μ`.
    pub e2: Option<f64>,
    /// `‖τ^ε − ḡ/b̄‖_∞`.
    pub trace_error: f64,
    pub max_slope: f64,
    /// `tan(2c^ε·ε/μ)` when the angle is below `π/2`.
    pub slope_bound: Option<f64>,
    pub slope_ok: bool,
    /// Per-period L² norm of `(u_x^ε − u⁰_x, u_y^ε)` on the mapped strip, with
    /// `u⁰` the homogenized problem solved on the same mesh.
    pub gradient_error: f64,
    /// The same norm against the closed-form `u⁰`, which also carries the
    /// discretization error of `u^ε`.
    pub gradient_error_exact: f64,
    /// `|c^ε − c⁰|`.
    pub speed_error: f64,
    pub iterations: usize,
    pub certificates: WaveCertificates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub mu: f64,
    pub metrics: Option<SweepMetrics>,
    pub error: Option<String>,
}

/// Least-squares slopes of `ln e` against `ln ε` over the converged rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOrders {
    pub amplitude: Option<f64>,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub trace_error: Option<f64>,
    pub gradient_error: Option<f64>,
    pub speed_error: Option<f64>,
}

/// Decrease checks over the converged rows; `None` when not applicable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepTrends {
    pub e1_over_eps_decreasing: Option<bool>,
    pub e2_over_eps2_decreasing: Option<bool>,
    /// Fitted order of `‖v^ε‖_∞` at least 1.8 (fixed `μ` only).
    pub amplitude_order_ok: Option<bool>,
    pub speed_error_decreasing: Option<bool>,
    pub trace_error_decreasing: Option<bool>,
    pub gradient_decreasing: Option<bool>,
    pub slopes_ok: Option<bool>,
    pub certificates_ok: Option<bool>,
}

impl SweepTrends {
    pub fn failures(&self) -> Vec<&'static str> {
        [
            ("e1_over_eps_decreasing", self.e1_over_eps_decreasing),
            ("e2_over_eps2_decreasing", self.e2_over_eps2_decreasing),
            ("amplitude_order", self.amplitude_order_ok),
            ("speed_error_decreasing", self.speed_error_decreasing),
            ("trace_error_decreasing", self.trace_error_decreasing),
            ("gradient_decreasing", self.gradient_decreasing),
            ("slope_estimate", self.slopes_ok),
            ("certificates", self.certificates_ok),
        ]
        .into_iter()
        .filter(|(_, v)| *v == Some(false))
        .map(|(n, _)| n)
        .collect()
    }

    pub fn all_passed(&self) -> bool {
        self.failures().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rule: MuRule,
    pub lambda: Lambda,
    /// Homogenized speed `c⁰(λ)`.
    pub c0: f64,
    pub trace_limit: f64,
    pub rows: Vec<SweepRow>,
    pub orders: SweepOrders,
    pub trends: SweepTrends,
    pub second_order: Option<SecondOrderProfile>,
}

impl SweepResult {
    pub fn converged(&self) -> impl Iterator<Item = (f64, &SweepMetrics)> {
        self.rows.iter().filter_map(|r| r.metrics.as_ref().map(|m| (r.eps, m)))
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.metrics.is_none())
    }
}

struct Limits<'a> {
    c0: f64,
    lambda: Lambda,
    corrector: Option<&'a Corrector>,
    q: Option<&'a SecondOrderProfile>,
    trace: f64,
    /// `c⁰·b̄/ā`.
    decay: f64,
}

/// Medium with the coefficients replaced by their means, keeping the
/// breakpoints so the temperature mesh is unchanged.
fn averaged(m: &MediumSpec) -> Result<MediumSpec> {
    let edges = m.breakpoints();
    let field = |v: f64| PeriodicField::from_edges(m.period(), edges.clone(), vec![v; edges.len()]);
    MediumSpec::new(
        field(m.a.mean())?,
        field(m.b.mean())?,
        field(m.g.mean())?,
        m.rate.clone(),
    )
}

/// Homogenized temperature on the mesh of `wv`.
fn reference_temperature(
    wv: &TravellingWave,
    medium: &MediumSpec,
    c0: f64,
    mesh: &MeshConfig,
) -> Result<crate::temperature::TemperatureField> {
    let hom = averaged(medium)?;
    let depth = wv.temperature.depth;
    // accept the wave's depth even if c⁰ would ask for a slightly longer strip
    let cutoff = mesh.cutoff.max((-depth * c0 * hom.b.min() / hom.a.max()).exp());
    let cfg = MeshConfig {
        depth: Some(depth),
        cutoff: cutoff.min(0.5),
        ..*mesh
    };
    solve_temperature(c0, &FrontProfile::flat(wv.profile().grid().clone()), &hom, &cfg)
}

fn measure(
    wv: &TravellingWave,
    medium: &MediumSpec,
    eps: f64,
    mu: f64,
    lim: &Limits,
    mesh: &MeshConfig,
) -> Result<SweepMetrics> {
    let prof = wv.profile();
    let y = prof.y();
    let sup = |f: &dyn Fn(usize) -> f64| (0..prof.v.len()).map(f).fold(0.0, f64::max);
    let e1 = match (lim.lambda, lim.corrector) {
        (Lambda::Infinity, _) => Some(prof.amplitude()),
        (Lambda::Finite(_), Some(w)) => Some(sup(&|i| (prof.v[i] - eps * w.eval(y[i] / eps)).abs())),
        _ => None,
    };
    let e2 = lim
        .q
        .map(|q| sup(&|i| (prof.v[i] - eps * eps * q.eval(y[i] / eps)).abs()));
    let angle = 2.0 * wv.speed * eps / mu;
    let slope_bound = (angle < std::f64::consts::FRAC_PI_2).then(|| angle.tan());
    let max_slope = prof.max_slope();
    let (decay, trace) = (lim.decay, lim.trace);
    let exact = wv.temperature.gradient_l2(
        |xi, _| (decay * trace * (decay * xi.min(0.0)).exp(), 0.0),
        f64::NEG_INFINITY,
    );
    let reference = reference_temperature(wv, medium, lim.c0, mesh)?;
    let grad = wv.temperature.gradient_l2_against(&reference)?;
    Ok(SweepMetrics {
        speed: wv.speed,
        amplitude: prof.amplitude(),
        e1,
        e2,
        trace_error: wv.trace.iter().map(|t| (t - lim.trace).abs()).fold(0.0, f64::max),
        max_slope,
        slope_bound,
        slope_ok: slope_bound.is_none_or(|b| max_slope <= b * (1.0 + 1e-9) + 1e-12),
        gradient_error: (grad / eps).sqrt(),
        gradient_error_exact: (exact / eps).sqrt(),
        speed_error: (wv.speed - lim.c0).abs(),
        iterations: wv.iterations,
        certificates: wv.certificates.clone(),
    })
}

fn fit_order(pts: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(_, e)| *e > 0.0 && e.is_finite())
        .map(|(x, e)| (x.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Strict decrease along decreasing `ε`; `None` with fewer than two values.
fn decreasing(vals: &[f64]) -> Option<bool> {
    (vals.len() >= 2).then(|| vals.windows(2).all(|w| w[1] < w[0]))
}

/// Solves the travelling wave on the medium compressed to each period `ε`
/// and compares it with the homogenized objects.
pub fn epsilon_sweep(medium: &MediumSpec, rule: &MuRule, eps_list: &[f64], cfg: &SweepConfig) -> Result<SweepResult> {
    if eps_list.is_empty() {
        return Err(Error::config("eps_list", "must not be empty"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::config("eps_list", "values must be positive"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("eps_list", "values must be strictly decreasing"));
    }
    rule.validate(eps_list.len())?;
    cfg.wave.validate()?;
    cfg.corrector.validate()?;

    let rate = medium.effective_rate()?;
    let lambda = rule.lambda();
    let corrector = match lambda {
        Lambda::Finite(l) => Some(Corrector::solve(&rate, l, &cfg.corrector)?),
        _ => None,
    };
    let c0 = match (&corrector, lambda) {
        (Some(w), _) => w.speed(),
        (None, Lambda::Zero) => rate.max(),
        (None, _) => rate.mean(),
    };
    let q = match rule {
        MuRule::Fixed { mu } => Some(second_order_profile(&rate, *mu)?),
        _ => None,
    };
    let trace = medium.trace_temperature();
    let lim = Limits {
        c0,
        lambda,
        corrector: corrector.as_ref(),
        q: q.as_ref(),
        trace,
        decay: c0 * medium.b.mean() / medium.a.mean(),
    };

    let jobs: Vec<(usize, f64)> = eps_list.iter().copied().enumerate().collect();
    let rows = par::map(cfg.exec, &jobs, |&(k, eps)| {
        let mu = rule.mu(k, eps);
        let outcome = medium.rescaled(eps).and_then(|m| {
            let wv = solve_travelling_wave(&m, mu, &cfg.wave)?;
            measure(&wv, &m, eps, mu, &lim, &cfg.wave.mesh)
        });
        match outcome {
            Ok(m) => SweepRow {
                eps,
                mu,
                metrics: Some(m),
                error: None,
            },
            Err(e) => SweepRow {
                eps,
                mu,
                metrics: None,
                error: Some(e.to_string()),
            },
        }
    });

    let ok: Vec<(f64, &SweepMetrics)> = rows
        .iter()
        .filter_map(|r| r.metrics.as_ref().map(|m| (r.eps, m)))
        .collect();
    let col = |f: &dyn Fn(f64, &SweepMetrics) -> Option<f64>| -> Vec<(f64, f64)> {
        ok.iter().filter_map(|(e, m)| f(*e, m).map(|v| (*e, v))).collect()
    };
    let amplitude = col(&|_, m| Some(m.amplitude));
    let e1 = col(&|_, m| m.e1);
    let e2 = col(&|_, m| m.e2);
    let trace_err = col(&|_, m| Some(m.trace_error));
    let grad = col(&|_, m| Some(m.gradient_error));
    let speed_err = col(&|_, m| Some(m.speed_error));
    let vals = |v: &[(f64, f64)]| v.iter().map(|p| p.1).collect::<Vec<f64>>();
    let scaled = |v: &[(f64, f64)], p: i32| v.iter().map(|(e, x)| x / e.powi(p)).collect::<Vec<f64>>();

    let orders = SweepOrders {
        amplitude: fit_order(&amplitude),
        e1: fit_order(&e1),
        e2: fit_order(&e2),
        trace_error: fit_order(&trace_err),
        gradient_error: fit_order(&grad),
        speed_error: fit_order(&speed_err),
    };
    let finite = matches!(lambda, Lambda::Finite(_));
    let fixed = matches!(rule, MuRule::Fixed { .. });
    let trends = SweepTrends {
        e1_over_eps_decreasing: if finite { decreasing(&scaled(&e1, 1)) } else { None },
        e2_over_eps2_decreasing: decreasing(&scaled(&e2, 2)),
        amplitude_order_ok: if fixed {
            orders.amplitude.map(|o| o >= 1.8)
        } else {
            None
        },
        speed_error_decreasing: decreasing(&vals(&speed_err)),
        trace_error_decreasing: decreasing(&vals(&trace_err)),
        gradient_decreasing: decreasing(&vals(&grad)),
        slopes_ok: (!ok.is_empty()).then(|| ok.iter().all(|(_, m)| m.slope_ok)),
        certificates_ok: (!ok.is_empty()).then(|| ok.iter().all(|(_, m)| m.certificates.all_passed())),
    };
    Ok(SweepResult {
        rule: rule.clone(),
        lambda,
        c0,
        trace_limit: trace,
        rows,
        orders,
        trends,
        second_order: q,
    })
}
