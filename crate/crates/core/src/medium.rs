//! Striated periodic media: layered coefficient fields, combustion kinetics and
//! the standing assumptions on both.

use crate::error::{Error, Result};
use serde::Serialize;

/// Piecewise-constant `Y`-periodic function.
///
/// Layer `k` occupies `[edges[k], edges[k+1])` with `edges[0] = 0` and an
/// implicit closing edge at `Y`. Evaluation on a breakpoint returns the value
/// of the layer to its right.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    period: f64,
    edges: Vec<f64>,
    values: Vec<f64>,
    min: f64,
    max: f64,
    mean: f64,
}

impl PeriodicField {
    pub fn from_edges(period: f64, edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::config("period", format!("must be positive, got {period}")));
        }
        if edges.is_empty() || edges.len() != values.len() {
            return Err(Error::config("layers", "need one value per layer"));
        }
        if edges[0] != 0.0 || edges.windows(2).any(|w| w[1] <= w[0]) || *edges.last().unwrap() >= period {
            return Err(Error::config(
                "layers",
                "layer edges must increase from 0 inside the period",
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config("layers", format!("non-finite value in layer {k}")));
        }
        let mut mean = 0.0;
        for (k, v) in values.iter().enumerate() {
            let hi = edges.get(k + 1).copied().unwrap_or(period);
            mean += (hi - edges[k]) * v;
        }
        mean /= period;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(PeriodicField {
            period,
            edges,
            values,
            min,
            max,
            mean,
        })
    }

    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::from_edges(period, vec![0.0], vec![value])
    }

    /// Layers listed by width, starting at `y = 0`; widths must sum to the period.
    pub fn layered(widths: &[f64], values: &[f64]) -> Result<Self> {
        if widths.is_empty() || widths.len() != values.len() {
            return Err(Error::config("layers", "need one value per layer"));
        }
        if let Some(k) = widths.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::config("layers", format!("layer {k} has non-positive width")));
        }
        let period: f64 = widths.iter().sum();
        let mut edges = Vec::with_capacity(widths.len());
        let mut acc = 0.0;
        for w in widths {
            edges.push(acc);
            acc += w;
        }
        Self::from_edges(period, edges, values.to_vec())
    }

    /// Samples on a uniform grid of cells, each evaluated at its midpoint.
    pub fn sampled(period: f64, samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        let edges = (0..n).map(|k| period * k as f64 / n as f64).collect();
        Self::from_edges(period, edges, samples.to_vec())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layer_count(&self) -> usize {
        self.values.len()
    }

    /// Exact essential infimum.
    pub fn min(&self) -> f64 {
        self.min
    }

    /// Exact essential supremum.
    pub fn max(&self) -> f64 {
        self.max
    }

    /// Average over one period.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }

    pub fn layer_index(&self, y: f64) -> usize {
        let r = y.rem_euclid(self.period);
        self.edges.partition_point(|&e| e <= r).saturating_sub(1)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.values[self.layer_index(y)]
    }

    /// Limit from the left, which differs from [`eval`](Self::eval) only on breakpoints.
    pub fn eval_left(&self, y: f64) -> f64 {
        let r = y.rem_euclid(self.period);
        let k = self.edges.partition_point(|&e| e < r);
        if k == 0 {
            *self.values.last().unwrap()
        } else {
            self.values[k - 1]
        }
    }

    /// `y ↦ f(y/s)` on the period `s·Y`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_edges(
            self.period * s,
            self.edges.iter().map(|e| e * s).collect(),
            self.values.clone(),
        )
    }

    /// Integral of `f` over `[0, y]` for `y` in `[0, Y]`.
    pub fn integral_to(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let lo = self.edges[k];
            if lo >= y {
                break;
            }
            let hi = self.edges.get(k + 1).copied().unwrap_or(self.period).min(y);
            acc += (hi - lo) * v;
        }
        acc
    }
}

fn merge_edges(period: f64, lists: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    all.push(0.0);
    all.retain(|e| *e >= 0.0 && *e < period);
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

fn segment_midpoints(period: f64, edges: &[f64]) -> Vec<f64> {
    (0..edges.len())
        .map(|k| 0.5 * (edges[k] + edges.get(k + 1).copied().unwrap_or(period)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateKind {
    /// `A(y)·exp(−E(y)/T)`.
    Arrhenius { a: PeriodicField, e: PeriodicField },
    /// `A(y)·T/(K(y) + T)`.
    Saturating { a: PeriodicField, k: PeriodicField },
    /// Per-layer table in `T`, linear between nodes and constant beyond the ends.
    Table {
        period: f64,
        edges: Vec<f64>,
        temperatures: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// Combustion rate `R(y, T)` together with its supremum `R_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombustionRate {
    kind: RateKind,
    r_max: f64,
}

impl CombustionRate {
    pub fn arrhenius(a: PeriodicField, e: PeriodicField) -> Result<Self> {
        if a.period() != e.period() {
            return Err(Error::config("E", "A and E must share the period"));
        }
        let r_max = if e.min() >= 0.0 {
            a.max()
        } else {
            // E < 0 somewhere: R is unbounded as T decreases, report the largest layer growth
            f64::INFINITY
        };
        Ok(CombustionRate {
            kind: RateKind::Arrhenius { a, e },
            r_max,
        })
    }

    pub fn saturating(a: PeriodicField, k: PeriodicField) -> Result<Self> {
        if a.period() != k.period() {
            return Err(Error::config("K", "A and K must share the period"));
        }
        let r_max = a.max();
        Ok(CombustionRate {
            kind: RateKind::Saturating { a, k },
            r_max,
        })
    }

    pub fn table(period: f64, edges: Vec<f64>, temperatures: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        // reuse the layer validation of PeriodicField
        PeriodicField::from_edges(period, edges.clone(), vec![0.0; edges.len()])?;
        if temperatures.is_empty() || temperatures.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("rate_table.temperatures", "must be strictly increasing"));
        }
        if temperatures[0] < 0.0 {
            return Err(Error::config("rate_table.temperatures", "must be nonnegative"));
        }
        if values.len() != edges.len() || values.iter().any(|row| row.len() != temperatures.len()) {
            return Err(Error::config(
                "rate_table.values",
                "need one row per layer and one entry per temperature",
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::config("rate_table.values", "non-finite entry"));
        }
        let r_max = values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(CombustionRate {
            kind: RateKind::Table {
                period,
                edges,
                temperatures,
                values,
            },
            r_max,
        })
    }

    pub fn kind(&self) -> &RateKind {
        &self.kind
    }

    pub fn period(&self) -> f64 {
        match &self.kind {
            RateKind::Arrhenius { a, .. } | RateKind::Saturating { a, .. } => a.period(),
            RateKind::Table { period, .. } => *period,
        }
    }

    /// `R_M = sup R`.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            RateKind::Arrhenius { a, e } => merge_edges(a.period(), &[a.edges(), e.edges()]),
            RateKind::Saturating { a, k } => merge_edges(a.period(), &[a.edges(), k.edges()]),
            RateKind::Table { edges, .. } => edges.clone(),
        }
    }

    /// Rate without the domain check; callers guarantee `t > 0`.
    pub fn eval_unchecked(&self, y: f64, t: f64) -> f64 {
        match &self.kind {
            RateKind::Arrhenius { a, e } => a.eval(y) * (-e.eval(y) / t).exp(),
            RateKind::Saturating { a, k } => a.eval(y) * t / (k.eval(y) + t),
            RateKind::Table {
                period,
                edges,
                temperatures,
                values,
            } => {
                let r = y.rem_euclid(*period);
                let layer = edges.partition_point(|&e| e <= r).saturating_sub(1);
                interp_clamped(temperatures, &values[layer], t)
            }
        }
    }

    /// `ln R(y, T)`, finite even where `R` itself underflows.
    pub fn ln_eval(&self, y: f64, t: f64) -> f64 {
        match &self.kind {
            RateKind::Arrhenius { a, e } => a.eval(y).ln() - e.eval(y) / t,
            RateKind::Saturating { a, k } => a.eval(y).ln() + t.ln() - (k.eval(y) + t).ln(),
            RateKind::Table { .. } => self.eval_unchecked(y, t).ln(),
        }
    }

    /// `R` frozen at a spatially constant temperature, as a layered field.
    pub fn frozen(&self, t: f64) -> Result<PeriodicField> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("temperature must be positive, got {t}")));
        }
        let period = self.period();
        let edges = self.breakpoints();
        let values = segment_midpoints(period, &edges)
            .into_iter()
            .map(|y| self.eval_unchecked(y, t))
            .collect();
        PeriodicField::from_edges(period, edges, values)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        match &self.kind {
            RateKind::Arrhenius { a, e } => Self::arrhenius(a.scaled(s)?, e.scaled(s)?),
            RateKind::Saturating { a, k } => Self::saturating(a.scaled(s)?, k.scaled(s)?),
            RateKind::Table {
                period,
                edges,
                temperatures,
                values,
            } => Self::table(
                period * s,
                edges.iter().map(|e| e * s).collect(),
                temperatures.clone(),
                values.clone(),
            ),
        }
    }
}

fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

/// Evaluates `R(y, T)`; rejects `T ≤ 0`.
pub fn eval_rate(rate: &CombustionRate, y: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {t}")));
    }
    Ok(rate.eval_unchecked(y, t))
}

/// Temperatures `10^(k/2)`, `k = −12..=6`, at which the standing assumptions
/// and the degeneracy proxy are sampled by default.
pub fn default_temperature_grid() -> Vec<f64> {
    (-12..=6).map(|k| 10f64.powf(0.5 * k as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallPeriod {
    pub holds: bool,
    /// `μ/Y − 4R_M/π`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

/// Behaviour of `|ln T|·essinf_y R(y,T)` as `T` decreases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegeneracyTrend {
    /// The proxy grows toward small `T`, consistent with a divergent limit.
    Growing,
    /// The proxy decays toward zero (Arrhenius-type degeneracy).
    Decaying,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// `(T, log10 of the proxy)` on the smallest grid temperatures, ascending in `T`.
    pub degeneracy_proxy: Vec<(f64, f64)>,
    pub degeneracy: DegeneracyTrend,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Diffusivity `a`, heat capacity `b`, heat release `g` and combustion rate `R`
/// of a striated medium with period `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumSpec {
    pub a: PeriodicField,
    pub b: PeriodicField,
    pub g: PeriodicField,
    pub rate: CombustionRate,
    period: f64,
}

impl MediumSpec {
    pub fn new(a: PeriodicField, b: PeriodicField, g: PeriodicField, rate: CombustionRate) -> Result<Self> {
        let period = a.period();
        for (name, p) in [("b", b.period()), ("g", g.period()), ("rate", rate.period())] {
            if (p - period).abs() > 1e-12 * period {
                return Err(Error::config(name, format!("period {p} differs from {period}")));
            }
        }
        Ok(MediumSpec { a, b, g, rate, period })
    }

    /// Homogeneous medium with constant coefficients.
    pub fn constant(period: f64, a: f64, b: f64, g: f64, rate: CombustionRate) -> Result<Self> {
        Self::new(
            PeriodicField::constant(period, a)?,
            PeriodicField::constant(period, b)?,
            PeriodicField::constant(period, g)?,
            rate,
        )
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Union of the breakpoints of every coefficient, starting at 0.
    pub fn breakpoints(&self) -> Vec<f64> {
        let rb = self.rate.breakpoints();
        merge_edges(self.period, &[self.a.edges(), self.b.edges(), self.g.edges(), &rb])
    }

    /// Homogenized front temperature `ḡ/b̄`.
    pub fn trace_temperature(&self) -> f64 {
        self.g.mean() / self.b.mean()
    }

    /// `R(·, T)` for a spatially constant `T`.
    pub fn frozen_rate(&self, t: f64) -> Result<PeriodicField> {
        self.rate.frozen(t)
    }

    /// Effective rate `ℛ(z) = R(z, ḡ/b̄)` of a unit-cell medium.
    pub fn effective_rate(&self) -> Result<PeriodicField> {
        if (self.period - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                "period",
                format!("effective rate needs the unit cell, got period {}", self.period),
            ));
        }
        self.frozen_rate(self.trace_temperature())
    }

    /// The same medium compressed to period `ε·Y`.
    pub fn rescaled(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::config("eps", format!("must be positive, got {eps}")));
        }
        Self::new(
            self.a.scaled(eps)?,
            self.b.scaled(eps)?,
            self.g.scaled(eps)?,
            self.rate.scaled(eps)?,
        )
    }

    /// Whether `μ/Y > 4R_M/π`.
    pub fn check_small_period(&self, mu: f64) -> SmallPeriod {
        let margin = mu / self.period - 4.0 * self.rate.r_max() / std::f64::consts::PI;
        SmallPeriod {
            holds: margin > 0.0,
            margin,
        }
    }

    pub fn validate_assumptions(&self, t_grid: &[f64]) -> Result<AssumptionReport> {
        if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::config("T_grid", "need a nonempty grid of positive temperatures"));
        }
        let mut temps = t_grid.to_vec();
        temps.sort_by(f64::total_cmp);
        temps.dedup();

        let fields = [("a", &self.a), ("b", &self.b), ("g", &self.g)];
        let ys = segment_midpoints(self.period, &self.breakpoints());
        let mut checks = Vec::with_capacity(6);

        // A1: shared period and exact periodicity of every coefficient
        let mut a1 = None;
        for (name, f) in fields {
            if (f.period() - self.period).abs() > 1e-12 * self.period {
                a1 = Some(format!("{name} has period {}", f.period()));
                break;
            }
            if let Some(y) = ys.iter().find(|&&y| f.eval(y + self.period) != f.eval(y)) {
                a1 = Some(format!("{name} not periodic at y={y}"));
                break;
            }
        }
        checks.push(AssumptionCheck {
            id: "A1",
            passed: a1.is_none(),
            witness: a1,
        });

        let mut a2 = None;
        for (name, f) in fields {
            if let Some(k) = f.values().iter().position(|v| !(*v > 0.0)) {
                a2 = Some(format!("{name} = {} in layer {k}", f.values()[k]));
                break;
            }
        }
        checks.push(AssumptionCheck {
            id: "A2",
            passed: a2.is_none(),
            witness: a2,
        });

        let mut a3 = None;
        'outer: for &y in &ys {
            for w in temps.windows(2) {
                let (r0, r1) = (self.rate.eval_unchecked(y, w[0]), self.rate.eval_unchecked(y, w[1]));
                if r1 < r0 {
                    a3 = Some(format!("R decreases at y={y} between T={} and T={}", w[0], w[1]));
                    break 'outer;
                }
            }
        }
        checks.push(AssumptionCheck {
            id: "A3",
            passed: a3.is_none(),
            witness: a3,
        });

        let mut a4 = None;
        'outer4: for &y in &ys {
            for &t in &temps {
                if self.rate.eval_unchecked(y + self.period, t) != self.rate.eval_unchecked(y, t) {
                    a4 = Some(format!("R not periodic at y={y}, T={t}"));
                    break 'outer4;
                }
            }
        }
        checks.push(AssumptionCheck {
            id: "A4",
            passed: a4.is_none(),
            witness: a4,
        });

        let r_max = self.rate.r_max();
        let mut a5 = if r_max.is_finite() && r_max > 0.0 {
            None
        } else {
            Some(format!("R_M = {r_max}"))
        };
        if a5.is_none() {
            'outer5: for &y in &ys {
                for &t in &temps {
                    let r = self.rate.eval_unchecked(y, t);
                    if !self.rate.ln_eval(y, t).is_finite() || r > r_max {
                        a5 = Some(format!("R({y}, {t}) = {r} outside (0, {r_max}]"));
                        break 'outer5;
                    }
                }
            }
        }
        checks.push(AssumptionCheck {
            id: "A5",
            passed: a5.is_none(),
            witness: a5,
        });

        let ln_essinf = |t: f64| {
            ys.iter()
                .map(|&y| self.rate.ln_eval(y, t))
                .fold(f64::INFINITY, f64::min)
        };
        let a6 = temps
            .iter()
            .find(|&&t| !ln_essinf(t).is_finite())
            .map(|t| format!("essinf R vanishes at T={t}"));
        checks.push(AssumptionCheck {
            id: "A6",
            passed: a6.is_none(),
            witness: a6,
        });

        // degeneracy proxy on the (up to) five smallest temperatures below 1
        let small: Vec<f64> = temps.iter().copied().filter(|t| *t < 1.0).take(5).collect();
        let degeneracy_proxy: Vec<(f64, f64)> = small
            .iter()
            .map(|&t| (t, (t.ln().abs().ln() + ln_essinf(t)) / std::f64::consts::LN_10))
            .collect();
        let degeneracy = if degeneracy_proxy.len() < 2 {
            DegeneracyTrend::Inconclusive
        } else {
            let increasing = degeneracy_proxy.windows(2).all(|w| w[1].1 >= w[0].1);
            let decreasing = degeneracy_proxy.windows(2).all(|w| w[1].1 <= w[0].1);
            if increasing && degeneracy_proxy[0].1 < degeneracy_proxy.last().unwrap().1 {
                // the proxy shrinks as T decreases
                DegeneracyTrend::Decaying
            } else if decreasing {
                DegeneracyTrend::Growing
            } else {
                DegeneracyTrend::Inconclusive
            }
        };

        Ok(AssumptionReport {
            checks,
            degeneracy_proxy,
            degeneracy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrhenius_const(a: f64, e: f64) -> CombustionRate {
        CombustionRate::arrhenius(
            PeriodicField::constant(1.0, a).unwrap(),
            PeriodicField::constant(1.0, e).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn arrhenius_values() {
        let r = arrhenius_const(2.0, 1.0);
        assert!((eval_rate(&r, 0.3, 1.0).unwrap() - 0.735_758_882_342_884_6).abs() < 1e-15);
        let r0 = arrhenius_const(3.0, 0.0);
        assert_eq!(eval_rate(&r0, 0.1, 1e-5).unwrap(), 3.0);
        let two = CombustionRate::arrhenius(
            PeriodicField::layered(&[0.5, 0.5], &[1.0, 2.0]).unwrap(),
            PeriodicField::layered(&[0.5, 0.5], &[1.0, 0.5]).unwrap(),
        )
        .unwrap();
        let v = eval_rate(&two, 0.75, 2.0).unwrap();
        assert!((v - 2.0 * (-0.25f64).exp()).abs() < 1e-15);
        assert!((v - 1.557_601_566_601_3).abs() < 1e-6);
        assert!(matches!(eval_rate(&two, 0.2, 0.0), Err(Error::Domain(_))));
        assert!(matches!(eval_rate(&two, 0.2, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn breakpoint_takes_right_limit() {
        let f = PeriodicField::layered(&[0.5, 0.5], &[1.0, 2.0]).unwrap();
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval_left(0.5), 1.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval_left(0.0), 2.0);
        assert_eq!(f.eval(-0.25), 2.0);
        assert_eq!(f.mean(), 1.5);
        assert_eq!(f.integral_to(0.75), 0.5 + 0.5);
    }

    #[test]
    fn effective_rate_examples() {
        let m = MediumSpec::constant(1.0, 1.0, 1.0, 1.0, arrhenius_const(1.0, 1.0)).unwrap();
        let r = m.effective_rate().unwrap();
        assert!(r.is_constant());
        assert!((r.mean() - (-1.0f64).exp()).abs() < 1e-16);

        let sat = CombustionRate::saturating(
            PeriodicField::constant(1.0, 1.0).unwrap(),
            PeriodicField::constant(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let m = MediumSpec::constant(1.0, 1.0, 1.0, 2.0, sat).unwrap();
        assert!((m.effective_rate().unwrap().mean() - 2.0 / 3.0).abs() < 1e-15);

        let two = CombustionRate::arrhenius(
            PeriodicField::layered(&[0.5, 0.5], &[1.0, 2.0]).unwrap(),
            PeriodicField::constant(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let m = MediumSpec::constant(1.0, 1.0, 1.0, 1.0, two).unwrap();
        let r = m.effective_rate().unwrap();
        let e1 = (-1.0f64).exp();
        assert_eq!(r.values(), &[e1, 2.0 * e1]);

        let scaled = m.rescaled(0.5).unwrap();
        assert!(matches!(scaled.effective_rate(), Err(Error::Config { .. })));
    }

    #[test]
    fn small_period_condition() {
        let m = MediumSpec::constant(1.0, 1.0, 1.0, 1.0, arrhenius_const(1.0, 1.0)).unwrap();
        let s = m.check_small_period(2.0);
        assert!(s.holds);
        assert!((s.margin - (2.0 - 4.0 / std::f64::consts::PI)).abs() < 1e-15);
        assert!(!m.check_small_period(1.0).holds);

        let m = MediumSpec::constant(0.1, 1.0, 1.0, 1.0, {
            CombustionRate::arrhenius(
                PeriodicField::constant(0.1, 0.5).unwrap(),
                PeriodicField::constant(0.1, 1.0).unwrap(),
            )
            .unwrap()
        })
        .unwrap();
        assert!(m.check_small_period(0.1).holds);
    }

    #[test]
    fn assumption_report() {
        let min_t = CombustionRate::table(1.0, vec![0.0], vec![0.0, 1.0], vec![vec![0.0, 1.0]]).unwrap();
        let m = MediumSpec::constant(1.0, 1.0, 1.0, 1.0, min_t).unwrap();
        let rep = m.validate_assumptions(&[0.01, 0.1, 0.5, 1.0, 2.0, 10.0]).unwrap();
        assert!(rep.all_passed(), "{:?}", rep.checks);

        let m = MediumSpec::new(
            PeriodicField::layered(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            PeriodicField::constant(1.0, 1.0).unwrap(),
            PeriodicField::constant(1.0, 1.0).unwrap(),
            arrhenius_const(1.0, 1.0),
        )
        .unwrap();
        let rep = m.validate_assumptions(&[1.0]).unwrap();
        let a2 = rep.failures().next().unwrap();
        assert_eq!(a2.id, "A2");
        assert!(a2.witness.as_ref().unwrap().contains("layer 1"));

        let m = MediumSpec::constant(1.0, 1.0, 1.0, 1.0, arrhenius_const(1.0, 1.0)).unwrap();
        let grid: Vec<f64> = (0..=6).map(|k| 10f64.powi(-k)).collect();
        let rep = m.validate_assumptions(&grid).unwrap();
        assert!(rep.all_passed());
        assert_eq!(rep.degeneracy, DegeneracyTrend::Decaying);
        // |ln T|·e^{−1/T} at T = 1e-6 is far below any representable positive number
        assert!(rep.degeneracy_proxy[0].1 < -400_000.0);
    }

    #[test]
    fn decreasing_rate_fails_a3() {
        let bad = CombustionRate::table(1.0, vec![0.0], vec![0.5, 1.0], vec![vec![2.0, 1.0]]).unwrap();
        let m = MediumSpec::constant(1.0, 1.0, 1.0, 1.0, bad).unwrap();
        let rep = m.validate_assumptions(&[0.5, 1.0]).unwrap();
        assert_eq!(rep.failures().next().unwrap().id, "A3");
    }
}
