//! One-dimensional periodic grids on `[0, Y]`.

use crate::error::{Error, Result};

/// Nodes `0 = y_0 < y_1 < ... < y_N = Y`; node `N` is the periodic image of node `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    period: f64,
    nodes: Vec<f64>,
}

impl PeriodicGrid {
    pub fn uniform(period: f64, steps: usize) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::config("period", format!("must be positive, got {period}")));
        }
        if steps == 0 {
            return Err(Error::config("grid", "need at least one step"));
        }
        let nodes = (0..=steps)
            .map(|i| {
                if i == steps {
                    period
                } else {
                    period * i as f64 / steps as f64
                }
            })
            .collect();
        Ok(PeriodicGrid { period, nodes })
    }

    /// Grid with a node on every breakpoint; each segment receives a share of
    /// the `steps` proportional to its width, with at least one step.
    pub fn aligned(period: f64, breakpoints: &[f64], steps: usize) -> Result<Self> {
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .map(|b| b.rem_euclid(period))
            .filter(|b| *b > 0.0 && *b < period)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * period);
        if cuts.is_empty() {
            return Self::uniform(period, steps);
        }
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(0.0);
        edges.extend_from_slice(&cuts);
        edges.push(period);

        let mut nodes = vec![0.0];
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let k = (((hi - lo) / period) * steps as f64).round().max(1.0) as usize;
            for s in 1..=k {
                nodes.push(if s == k {
                    hi
                } else {
                    lo + (hi - lo) * s as f64 / k as f64
                });
            }
        }
        Ok(PeriodicGrid { period, nodes })
    }

    pub fn from_nodes(period: f64, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 || *nodes.last().unwrap() != period {
            return Err(Error::config("grid", "nodes must run from 0 to the period"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("grid", "nodes must be strictly increasing"));
        }
        Ok(PeriodicGrid { period, nodes })
    }

    /// Splits every cell into `m` equal parts.
    pub fn refine(&self, m: usize) -> Self {
        let m = m.max(1);
        let mut nodes = Vec::with_capacity(self.steps() * m + 1);
        nodes.push(0.0);
        for w in self.nodes.windows(2) {
            for s in 1..=m {
                nodes.push(if s == m {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * s as f64 / m as f64
                });
            }
        }
        PeriodicGrid {
            period: self.period,
            nodes,
        }
    }

    /// Same grid on the dilated period `s·Y`.
    pub fn scaled(&self, s: f64) -> Self {
        PeriodicGrid {
            period: self.period * s,
            nodes: self.nodes.iter().map(|y| y * s).collect(),
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn width(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.steps()).map(|i| self.width(i)).fold(0.0, f64::max)
    }

    /// Cell index containing `y` (reduced modulo the period) and the local
    /// coordinate `t ∈ [0, 1)` inside it.
    pub fn locate(&self, y: f64) -> (usize, f64) {
        let r = y.rem_euclid(self.period);
        let n = self.steps();
        let i = self.nodes.partition_point(|&x| x <= r).saturating_sub(1).min(n - 1);
        let t = ((r - self.nodes[i]) / self.width(i)).clamp(0.0, 1.0);
        (i, t)
    }
}
