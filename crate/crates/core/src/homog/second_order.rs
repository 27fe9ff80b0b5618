use crate::error::{Error, Result};
use crate::medium::PeriodicField;
use serde::Serialize;

/// Periodic, mean-zero `Q` with `μ·Q_zz = ℛ − ∫ℛ` on the unit cell.
///
/// For layered `ℛ` the solution is an explicit piecewise quadratic
/// `Q = q0 + q1·s + q2·s²` with `s = z − z_k` on layer `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondOrderProfile {
    pub mu: f64,
    pub rate_mean: f64,
    /// Layer edges including the closing `1`.
    pub edges: Vec<f64>,
    /// `[q0, q1, q2]` per layer.
    pub pieces: Vec<[f64; 3]>,
    /// `|∫₀¹ ∫₀^t (ℛ − ∫ℛ) dt| / μ`: the slope of the linear term separating
    /// `Q` from the unsymmetrized double antiderivative.
    pub linear_discrepancy: f64,
}

impl SecondOrderProfile {
    fn piece(&self, z: f64) -> (usize, f64) {
        let z = z.rem_euclid(1.0);
        let k = self
            .edges
            .partition_point(|e| *e <= z)
            .saturating_sub(1)
            .min(self.pieces.len() - 1);
        (k, z - self.edges[k])
    }

    pub fn eval(&self, z: f64) -> f64 {
        let (k, s) = self.piece(z);
        let [a, b, c] = self.pieces[k];
        a + s * (b + s * c)
    }

    pub fn eval_z(&self, z: f64) -> f64 {
        let (k, s) = self.piece(z);
        let [_, b, c] = self.pieces[k];
        b + 2.0 * c * s
    }

    pub fn eval_zz(&self, z: f64) -> f64 {
        2.0 * self.pieces[self.piece(z).0][2]
    }

    pub fn mean(&self) -> f64 {
        self.pieces
            .iter()
            .zip(self.edges.windows(2))
            .map(|([a, b, c], e)| {
                let w = e[1] - e[0];
                a * w + b * w * w / 2.0 + c * w * w * w / 3.0
            })
            .sum()
    }
}

pub fn second_order_profile(rate: &PeriodicField, mu: f64) -> Result<SecondOrderProfile> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::config("mu", format!("must be positive, got {mu}")));
    }
    if (rate.period() - 1.0).abs() > 1e-12 {
        return Err(Error::config("period", "the profile lives on the unit cell"));
    }
    let rbar = rate.mean();
    let mut edges = rate.edges().to_vec();
    edges.push(1.0);
    let f: Vec<f64> = rate.values().iter().map(|r| (r - rbar) / mu).collect();

    // F = ∫f and G = ∫F at the left edge of each layer, plus ∫G over the cell.
    let n = f.len();
    let (mut big_f, mut big_g, mut int_g) = (vec![0.0; n + 1], vec![0.0; n + 1], 0.0);
    for k in 0..n {
        let w = edges[k + 1] - edges[k];
        int_g += big_g[k] * w + big_f[k] * w * w / 2.0 + f[k] * w * w * w / 6.0;
        big_f[k + 1] = big_f[k] + f[k] * w;
        big_g[k + 1] = big_g[k] + big_f[k] * w + f[k] * w * w / 2.0;
    }
    let c1 = -big_g[n];
    let c0 = -c1 / 2.0 - int_g;
    let pieces = (0..n)
        .map(|k| [c0 + c1 * edges[k] + big_g[k], c1 + big_f[k], f[k] / 2.0])
        .collect();
    Ok(SecondOrderProfile {
        mu,
        rate_mean: rbar,
        edges,
        pieces,
        linear_discrepancy: c1.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_layer_closed_form() {
        let r = PeriodicField::layered(&[0.5, 0.5], &[1.0, 2.0]).unwrap();
        let q = second_order_profile(&r, 1.0).unwrap();
        assert!((q.eval(0.25) - 1.0 / 64.0).abs() < 1e-15);
        assert!((q.eval(0.75) + 1.0 / 64.0).abs() < 1e-15);
        assert!(q.mean().abs() < 1e-15);
        assert!((q.eval(0.0) - q.eval(1.0 - 1e-15)).abs() < 1e-12);
        assert!((q.eval_z(0.0) - q.eval_z(1.0 - 1e-15)).abs() < 1e-12);
        assert_eq!(q.linear_discrepancy, 0.125);
        assert_eq!(q.eval_zz(0.1), -0.5);
    }

    #[test]
    fn discrete_second_difference_matches_rate() {
        let r = PeriodicField::layered(&[0.2, 0.3, 0.5], &[1.0, 3.0, 2.0]).unwrap();
        let mu = 0.7;
        let q = second_order_profile(&r, mu).unwrap();
        let n = 1000;
        let dz = 1.0 / n as f64;
        for i in 0..n {
            let z = i as f64 * dz;
            let near_edge = z > 1.0 - 1.5 * dz || r.edges().iter().any(|e| (e - z).abs() < 1.5 * dz);
            if near_edge {
                continue;
            }
            let d2 = (q.eval(z + dz) - 2.0 * q.eval(z) + q.eval(z - dz)) / (dz * dz);
            let target = (r.eval(z) - r.mean()) / mu;
            assert!((d2 - target).abs() < 1e-6, "z={z}: {d2} vs {target}");
        }
        assert!(q.mean().abs() < 1e-14);
    }

    #[test]
    fn constant_rate_gives_zero() {
        let q = second_order_profile(&PeriodicField::constant(1.0, 2.0).unwrap(), 1.0).unwrap();
        assert_eq!(q.eval(0.3), 0.0);
        assert_eq!(q.linear_discrepancy, 0.0);
    }
}
