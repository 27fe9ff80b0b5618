//! Temperature below a frozen periodic front.
//!
//! The fresh region `{x < v(y)}` is mapped onto the strip `ξ = x − v(y) < 0`,
//! truncated at `ξ = −L` where a homogeneous Dirichlet condition replaces the
//! decay at infinity. The map has unit Jacobian and turns the weak form into
//!
//! ```text
//! ∫∫ c·b·u_ξ·w + a·(u_ξ·w_ξ + (u_y − v_y·u_ξ)(w_y − v_y·w_ξ)) = ∫ c·g(y)·w(0, y) dy,
//! ```
//!
//! discretized with bilinear elements on a tensor grid, periodic in `y`.

use crate::error::{Error, Result};
use crate::front::FrontProfile;
use crate::grid::PeriodicGrid;
use crate::linalg::BandMatrix;
use crate::medium::MediumSpec;
use crate::par::{self, Execution};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Spacing of the `ξ` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    Uniform,
    /// Geometric growth away from the front, starting from the `y` spacing.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshConfig {
    pub n_xi: usize,
    /// Target number of `y` cells per period; layer breakpoints are always nodes.
    pub n_y: usize,
    /// Truncation depth; `None` picks the smallest admissible one.
    pub depth: Option<f64>,
    /// Relative size of the upper envelope at `ξ = −L`.
    pub cutoff: f64,
    pub grading: Grading,
    pub exec: Execution,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            n_xi: 256,
            n_y: 64,
            depth: None,
            cutoff: 1e-10,
            grading: Grading::Geometric,
            exec: Execution::Parallel,
        }
    }
}

/// Smallest depth at which the upper envelope has decayed below `cutoff`
/// relative to its value at the front.
pub fn min_depth(medium: &MediumSpec, c: f64, amplitude: f64, cutoff: f64) -> f64 {
    medium.a.max() / (c * medium.b.min()) * (1.0 / cutoff).ln() + 2.0 * amplitude
}

/// `ξ` nodes from `−L` to `0`.
pub fn xi_nodes(depth: f64, n: usize, h0: f64, grading: Grading) -> Vec<f64> {
    let uniform = depth / n as f64;
    let widths: Vec<f64> = if grading == Grading::Uniform || h0 >= uniform {
        vec![uniform; n]
    } else {
        // ratio r > 1 with h0·(rⁿ − 1)/(r − 1) = L, by bisection
        let total = |r: f64| h0 * ((r.ln() * n as f64).exp_m1() / (r - 1.0));
        let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
        while total(hi) < depth {
            hi = 1.0 + 2.0 * (hi - 1.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < depth {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        (0..n).map(|k| h0 * r.powi(k as i32)).collect()
    };
    // accumulate from the front backwards so that ξ = 0 is exact
    let mut xi = vec![0.0; n + 1];
    let mut acc = 0.0;
    for k in 0..n {
        acc += widths[k];
        xi[n - 1 - k] = -acc;
    }
    xi[0] = -depth;
    xi
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    pub xi: Vec<f64>,
    ygrid: PeriodicGrid,
    /// Row-major `(ξ_i, y_j)` values, `j = 0..=Ny` with the periodic copy last.
    values: Vec<f64>,
    pub speed: f64,
    pub depth: f64,
    /// Front height at the `y` nodes.
    pub front: Vec<f64>,
    /// Front slope at the two Gauss abscissae of every `y` cell.
    gauss_slope: Vec<[f64; 2]>,
    /// `|u|_{H¹♯} = ((1/Y)∫∫|∇u|²)^{1/2}`.
    pub h1_seminorm: f64,
    /// `‖Au − F‖_∞ / ‖F‖_∞`.
    pub linear_residual: f64,
    /// Smallest over largest pivot of the factorization.
    pub pivot_ratio: f64,
}

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

fn interleave(n: usize) -> Vec<usize> {
    (0..n)
        .map(|k| if k < n.div_ceil(2) { 2 * k } else { 2 * (n - 1 - k) + 1 })
        .collect()
}

/// Bilinear basis value and local derivative on `[0,1]`.
#[inline]
fn basis(p: usize, t: f64) -> (f64, f64) {
    if p == 0 {
        (1.0 - t, -1.0)
    } else {
        (t, 1.0)
    }
}

/// Element matrix `K[test][trial]` for local nodes ordered `(p, q) → 2q + p`.
fn element(hx: f64, hy: f64, a: f64, cb: f64, slopes: &[f64; 2]) -> [[f64; 4]; 4] {
    let mut k = [[0.0; 4]; 4];
    let w = 0.25 * hx * hy;
    for (gy, &s_pt) in GAUSS.iter().enumerate() {
        let s = slopes[gy];
        for &t_pt in &GAUSS {
            let mut val = [0.0; 4];
            let mut dx = [0.0; 4];
            let mut dy = [0.0; 4];
            for q in 0..2 {
                for p in 0..2 {
                    let (fp, dp) = basis(p, t_pt);
                    let (fq, dq) = basis(q, s_pt);
                    let l = 2 * q + p;
                    val[l] = fp * fq;
                    dx[l] = dp / hx * fq;
                    dy[l] = fp * dq / hy;
                }
            }
            for r in 0..4 {
                let (tr_x, tr_y) = (dx[r], dy[r] - s * dx[r]);
                for col in 0..4 {
                    let (u_x, u_y) = (dx[col], dy[col] - s * dx[col]);
                    k[r][col] += w * (cb * u_x * val[r] + a * (u_x * tr_x + u_y * tr_y));
                }
            }
        }
    }
    k
}

/// Solves the truncated strip problem for speed `c` below `front`.
pub fn solve_temperature(
    c: f64,
    front: &FrontProfile,
    medium: &MediumSpec,
    cfg: &MeshConfig,
) -> Result<TemperatureField> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("c", format!("speed must be positive, got {c}")));
    }
    let period = medium.period();
    if (front.period() - period).abs() > 1e-12 * period {
        return Err(Error::config("front", "front period differs from the medium period"));
    }
    if cfg.n_xi < 2 || cfg.n_y < 2 {
        return Err(Error::config("grid", "need at least 2 cells in each direction"));
    }
    if !(cfg.cutoff > 0.0 && cfg.cutoff < 1.0) {
        return Err(Error::config("cutoff", "must lie in (0, 1)"));
    }
    let amplitude = front.amplitude();
    let l_min = min_depth(medium, c, amplitude, cfg.cutoff);
    let depth = match cfg.depth {
        Some(l) if l < l_min => {
            return Err(Error::config(
                "depth",
                format!("L = {l} is below the minimum {l_min:.6}"),
            ))
        }
        Some(l) => l,
        None => l_min,
    };

    let ygrid = PeriodicGrid::aligned(period, &medium.breakpoints(), cfg.n_y)?;
    let ny = ygrid.steps();
    let h0 = ygrid.max_width();
    let xi = xi_nodes(depth, cfg.n_xi, h0, cfg.grading);
    let nx = xi.len() - 1;
    let yn = ygrid.nodes();

    let cell_coef: Vec<(f64, f64, f64)> = (0..ny)
        .map(|j| {
            let ym = 0.5 * (yn[j] + yn[j + 1]);
            (medium.a.eval(ym), medium.b.eval(ym), medium.g.eval(ym))
        })
        .collect();
    let gauss_slope: Vec<[f64; 2]> = (0..ny)
        .map(|j| GAUSS.map(|s| front.slope(yn[j] + s * ygrid.width(j))))
        .collect();

    let pos = interleave(ny);
    let idx = |i: usize, j: usize| (i - 1) * ny + pos[j % ny];
    let n = nx * ny;
    let band = if ny >= 3 { ny + 2 } else { 2 * ny };

    let elements: Vec<[[f64; 4]; 4]> = par::map_range(cfg.exec, nx * ny, |cell| {
        let (i, j) = (cell / ny, cell % ny);
        let (a, b, _) = cell_coef[j];
        element(xi[i + 1] - xi[i], ygrid.width(j), a, c * b, &gauss_slope[j])
    });

    let mut m = BandMatrix::zeros(n, band, band);
    for (cell, k) in elements.iter().enumerate() {
        let (i, j) = (cell / ny, cell % ny);
        let nodes = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
        for (r, &(ir, jr)) in nodes.iter().enumerate() {
            if ir == 0 {
                continue;
            }
            for (col, &(ic, jc)) in nodes.iter().enumerate() {
                if ic == 0 {
                    continue;
                }
                m.add(idx(ir, jr), idx(ic, jc), k[r][col]);
            }
        }
    }
    let mut rhs = vec![0.0; n];
    for j in 0..ny {
        let (_, _, g) = cell_coef[j];
        let half = 0.5 * c * g * ygrid.width(j);
        rhs[idx(nx, j)] += half;
        rhs[idx(nx, j + 1)] += half;
    }

    let matrix = m.clone();
    let lu = m.factor()?;
    let pivot_ratio = lu.pivot_ratio();
    if pivot_ratio < 1e-14 {
        return Err(Error::Singular(format!("pivot ratio {pivot_ratio:.3e}")));
    }
    let sol = lu.solve(&rhs);
    let ax = matrix.matvec(&sol);
    let fmax = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let linear_residual = ax.iter().zip(&rhs).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())) / fmax;

    let mut values = vec![0.0; (nx + 1) * (ny + 1)];
    for i in 1..=nx {
        for j in 0..=ny {
            values[i * (ny + 1) + j] = sol[idx(i, j)];
        }
    }
    let front_nodes: Vec<f64> = yn.iter().map(|&y| front.eval(y)).collect();

    let mut field = TemperatureField {
        xi,
        ygrid,
        values,
        speed: c,
        depth,
        front: front_nodes,
        gauss_slope,
        h1_seminorm: 0.0,
        linear_residual,
        pivot_ratio,
    };
    field.h1_seminorm = field.gradient_l2(|_, _| (0.0, 0.0), f64::NEG_INFINITY).sqrt() / period.sqrt();
    Ok(field)
}

impl TemperatureField {
    pub fn ygrid(&self) -> &PeriodicGrid {
        &self.ygrid
    }

    pub fn y(&self) -> &[f64] {
        self.ygrid.nodes()
    }

    pub fn nx(&self) -> usize {
        self.xi.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.ygrid.steps()
    }

    /// `u(ξ_i, y_j)` with `j ≤ Ny`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.ny() + 1) + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Front trace `τ_j = u(0, y_j)`, including the periodic copy at `y = Y`.
    pub fn trace(&self) -> Vec<f64> {
        let nx = self.nx();
        (0..=self.ny()).map(|j| self.value(nx, j)).collect()
    }

    /// Trace at any `y`, linear between nodes.
    pub fn trace_at(&self, y: f64) -> f64 {
        let (j, t) = self.ygrid.locate(y);
        let nx = self.nx();
        (1.0 - t) * self.value(nx, j) + t * self.value(nx, j + 1)
    }

    /// Bilinear interpolation; zero beyond the truncation depth.
    pub fn eval(&self, xi: f64, y: f64) -> f64 {
        if xi <= self.xi[0] {
            return 0.0;
        }
        let xi = xi.min(0.0);
        let i = self
            .xi
            .partition_point(|&x| x <= xi)
            .saturating_sub(1)
            .min(self.nx() - 1);
        let tx = (xi - self.xi[i]) / (self.xi[i + 1] - self.xi[i]);
        let (j, ty) = self.ygrid.locate(y);
        let v = |a: usize, b: usize| self.value(a, b);
        (1.0 - tx) * ((1.0 - ty) * v(i, j) + ty * v(i, j + 1)) + tx * ((1.0 - ty) * v(i + 1, j) + ty * v(i + 1, j + 1))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Physical gradient `(u_ξ, u_y − v_y·u_ξ)` at Gauss point `(gx, gy)` of
    /// cell `(i, j)`, with the point's coordinates and quadrature weight.
    fn gauss_gradient(&self, i: usize, j: usize, gx: usize, gy: usize) -> ([f64; 2], [f64; 2], f64) {
        let hx = self.xi[i + 1] - self.xi[i];
        let hy = self.ygrid.width(j);
        let (s, t) = (GAUSS[gy], GAUSS[gx]);
        let (u00, u10) = (self.value(i, j), self.value(i + 1, j));
        let (u01, u11) = (self.value(i, j + 1), self.value(i + 1, j + 1));
        let ux = ((1.0 - s) * (u10 - u00) + s * (u11 - u01)) / hx;
        let uy = ((1.0 - t) * (u01 - u00) + t * (u11 - u10)) / hy;
        let at = [self.xi[i] + t * hx, self.ygrid.nodes()[j] + s * hy];
        ([ux, uy - self.gauss_slope[j][gy] * ux], at, 0.25 * hx * hy)
    }

    fn gauss_sum(&self, xi_min: f64, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.nx() {
            if self.xi[i] < xi_min {
                continue;
            }
            for j in 0..self.ny() {
                for gy in 0..2 {
                    for gx in 0..2 {
                        acc += f(i, j, gx, gy);
                    }
                }
            }
        }
        acc
    }

    /// `∫∫ |(u_ξ − p, u_y − v_y·u_ξ − q)|²` over the cells with `ξ ≥ xi_min`,
    /// where `(p, q) = reference(ξ, y)`. Uses 2×2 Gauss points per cell.
    pub fn gradient_l2(&self, reference: impl Fn(f64, f64) -> (f64, f64), xi_min: f64) -> f64 {
        self.gauss_sum(xi_min, |i, j, gx, gy| {
            let (g, at, w) = self.gauss_gradient(i, j, gx, gy);
            let (p, q) = reference(at[0], at[1]);
            w * ((g[0] - p).powi(2) + (g[1] - q).powi(2))
        })
    }

    /// `∫∫ |∇u − ∇w|²` for a field `w` on the same mesh, comparing physical
    /// gradients at matching `(ξ, y)`.
    pub fn gradient_l2_against(&self, other: &TemperatureField) -> Result<f64> {
        if self.xi != other.xi || self.ygrid.nodes() != other.ygrid.nodes() {
            return Err(Error::config("mesh", "fields live on different meshes"));
        }
        Ok(self.gauss_sum(f64::NEG_INFINITY, |i, j, gx, gy| {
            let (g, _, w) = self.gauss_gradient(i, j, gx, gy);
            let (h, _, _) = other.gauss_gradient(i, j, gx, gy);
            w * ((g[0] - h[0]).powi(2) + (g[1] - h[1]).powi(2))
        }))
    }

    /// Relative defect of the balance `∫ b·τ dy = ∫ g dy` obtained by testing
    /// the equation with `w ≡ 1`.
    pub fn flux_balance(&self, medium: &MediumSpec) -> f64 {
        let nx = self.nx();
        let yn = self.ygrid.nodes();
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for j in 0..self.ny() {
            let ym = 0.5 * (yn[j] + yn[j + 1]);
            let hy = self.ygrid.width(j);
            lhs += medium.b.eval(ym) * 0.5 * (self.value(nx, j) + self.value(nx, j + 1)) * hy;
            rhs += medium.g.eval(ym) * hy;
        }
        (lhs - rhs).abs() / rhs
    }

    /// CSV rows `xi,y,u` with 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "xi,y,u")?;
        let yn = self.ygrid.nodes();
        for (i, xi) in self.xi.iter().enumerate() {
            for (j, y) in yn.iter().enumerate() {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", xi, y, self.value(i, j))?;
            }
        }
        Ok(())
    }

    /// Little-endian dump: magic `FFTF`, `u32` rows and columns, `f64` depth
    /// and period, then the row-major values.
    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(b"FFTF")?;
        w.write_all(&(self.xi.len() as u32).to_le_bytes())?;
        w.write_all(&((self.ny() + 1) as u32).to_le_bytes())?;
        w.write_all(&self.depth.to_le_bytes())?;
        w.write_all(&self.ygrid.period().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemperatureBounds {
    /// Largest amount by which `u` leaves the exponential envelope.
    pub envelope_violation: f64,
    pub lower_violation: f64,
    pub upper_violation: f64,
    pub h1_seminorm: f64,
    /// `2c·g_M²/(a_m·b_m)`.
    pub h1_bound: f64,
    pub h1_ok: bool,
    pub min_value: f64,
}

/// Lower and upper exponential envelopes at height `x` below a front of
/// amplitude `amp`.
pub fn envelopes(medium: &MediumSpec, c: f64, x: f64, amp: f64) -> (f64, f64) {
    let (a, b, g) = (&medium.a, &medium.b, &medium.g);
    let lower = g.min() * a.min() / (a.max() * b.max()) * (c * b.max() / a.min() * (x - amp)).exp();
    let upper = g.max() * a.max() / (a.min() * b.min()) * (c * b.min() / a.max() * (x + amp)).exp();
    (lower, upper)
}

pub fn verify_temperature_bounds(u: &TemperatureField, medium: &MediumSpec, c: f64) -> TemperatureBounds {
    let amp = u.front.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut lo, mut up) = (0.0f64, 0.0f64);
    for (i, xi) in u.xi.iter().enumerate() {
        for j in 0..=u.ny() {
            let x = xi + u.front[j];
            let (l, h) = envelopes(medium, c, x, amp);
            let val = u.value(i, j);
            lo = lo.max(l - val);
            up = up.max(val - h);
        }
    }
    let h1_bound = 2.0 * c * medium.g.max().powi(2) / (medium.a.min() * medium.b.min());
    TemperatureBounds {
        envelope_violation: lo.max(up),
        lower_violation: lo,
        upper_violation: up,
        h1_seminorm: u.h1_seminorm,
        h1_bound,
        h1_ok: u.h1_seminorm <= h1_bound * (1.0 + 1e-9),
        min_value: u.min_value(),
    }
}
