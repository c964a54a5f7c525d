//! Dirichlet eigenbasis of `-Δ` on an interval or a rectangle.
//!
//! On `(0, L)` the normalized eigenfunctions are `φ_k(x) = √(2/L) sin(kπx/L)`
//! with eigenvalues `(kπ/L)²`. Rectangles use tensor products, ordered by
//! eigenvalue with ties broken by the lexicographic mode index `(j, k)`.
//!
//! Nonlinear terms are evaluated on the interior nodes of a uniform grid with
//! `M = 2(N+1)` cells per dimension. The discrete sine orthogonality
//! `Σ_{q=1}^{M-1} sin(jπq/M) sin(kπq/M) = (M/2) δ_jk` makes `to_modal` an exact
//! inverse of `to_physical` and integrates trigonometric products of total
//! degree below `2M` exactly, which covers cubic nonlinearities without
//! aliasing.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// L² and H¹₀ norms of a modal vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
}

/// Per-dimension tables of the 1D sine basis.
#[derive(Debug, Clone)]
struct Axis {
    length: f64,
    /// Interior collocation nodes `x_q = qL/M`, `q = 1..M-1`.
    nodes: Vec<f64>,
    weight: f64,
    /// `sines[q * n + j] = φ_{j+1}(x_q)`.
    sines: Vec<f64>,
    /// Derivatives on the full grid `q = 0..M` (boundary included).
    cosines: Vec<f64>,
    full_weights: Vec<f64>,
}

impl Axis {
    fn new(n: usize, length: f64) -> Self {
        let cells = 2 * (n + 1);
        let h = length / cells as f64;
        let norm = (2.0 / length).sqrt();
        let nodes: Vec<f64> = (1..cells).map(|q| q as f64 * h).collect();
        let mut sines = Vec::with_capacity(nodes.len() * n);
        for q in 1..cells {
            for j in 1..=n {
                let arg = PI * ((j * q) % (2 * cells)) as f64 / cells as f64;
                sines.push(norm * arg.sin());
            }
        }
        let mut cosines = Vec::with_capacity((cells + 1) * n);
        let mut full_weights = Vec::with_capacity(cells + 1);
        for q in 0..=cells {
            for j in 1..=n {
                let arg = PI * ((j * q) % (2 * cells)) as f64 / cells as f64;
                cosines.push(norm * (j as f64 * PI / length) * arg.cos());
            }
            full_weights.push(if q == 0 || q == cells { 0.5 * h } else { h });
        }
        Axis {
            length,
            nodes,
            weight: h,
            sines,
            cosines,
            full_weights,
        }
    }

    fn points(&self) -> usize {
        self.nodes.len()
    }
}

/// Dirichlet eigenbasis with its collocation grid.
///
/// Immutable after construction; share it freely between worker threads.
#[derive(Debug, Clone)]
pub struct Basis {
    dim: usize,
    modes_per_dim: usize,
    axes: Vec<Axis>,
    /// 1-based mode index per dimension; second entry is 0 in 1D.
    modes: Vec<[usize; 2]>,
    eigenvalues: Vec<f64>,
    /// Position of mode `(j, k)` in the sorted ordering: `slot[(j-1)*n + (k-1)]`.
    slot: Vec<usize>,
    weights: Vec<f64>,
}

impl Basis {
    /// Builds the basis on `(0, L)` (`dim = 1`) or `(0, L₁)×(0, L₂)` (`dim = 2`).
    pub fn new(dim: usize, modes: usize, lengths: &[f64]) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidBasis(format!(
                "spatial dimension must be 1 or 2, got {dim}"
            )));
        }
        if modes < 1 {
            return Err(Error::InvalidBasis("need at least one mode".into()));
        }
        if lengths.len() != dim {
            return Err(Error::InvalidBasis(format!(
                "expected {dim} lengths, got {}",
                lengths.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidBasis(format!(
                "lengths must be positive and finite, got {l}"
            )));
        }

        let axes: Vec<Axis> = lengths.iter().map(|&l| Axis::new(modes, l)).collect();
        let mut indexed: Vec<([usize; 2], f64)> = if dim == 1 {
            (1..=modes)
                .map(|j| ([j, 0], (j as f64 * PI / lengths[0]).powi(2)))
                .collect()
        } else {
            let mut v = Vec::with_capacity(modes * modes);
            for j in 1..=modes {
                for k in 1..=modes {
                    let lam = (j as f64 * PI / lengths[0]).powi(2)
                        + (k as f64 * PI / lengths[1]).powi(2);
                    v.push(([j, k], lam));
                }
            }
            v
        };
        // eigenvalues equal to 12 significant digits count as ties
        let tie_key = |l: f64| format!("{l:.11e}").parse::<f64>().unwrap_or(l);
        indexed.sort_by(|a, b| tie_key(a.1).total_cmp(&tie_key(b.1)).then(a.0.cmp(&b.0)));

        let mut slot = vec![0; if dim == 1 { modes } else { modes * modes }];
        for (i, (m, _)) in indexed.iter().enumerate() {
            let flat = if dim == 1 {
                m[0] - 1
            } else {
                (m[0] - 1) * modes + (m[1] - 1)
            };
            slot[flat] = i;
        }

        let weights = if dim == 1 {
            vec![axes[0].weight; axes[0].points()]
        } else {
            let w = axes[0].weight * axes[1].weight;
            vec![w; axes[0].points() * axes[1].points()]
        };

        Ok(Basis {
            dim,
            modes_per_dim: modes,
            modes: indexed.iter().map(|(m, _)| *m).collect(),
            eigenvalues: indexed.iter().map(|(_, l)| *l).collect(),
            axes,
            slot,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes_per_dim(&self) -> usize {
        self.modes_per_dim
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.length).collect()
    }

    /// Total number of modes (`N` in 1D, `N²` in 2D).
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Smallest Dirichlet eigenvalue.
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// 1-based mode indices in eigenvalue order.
    pub fn mode_indices(&self) -> &[[usize; 2]] {
        &self.modes
    }

    /// `mes(Ω)`, the product of the side lengths.
    pub fn domain_measure(&self) -> f64 {
        self.axes.iter().map(|a| a.length).product()
    }

    /// Number of collocation points.
    pub fn grid_len(&self) -> usize {
        self.weights.len()
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Coordinates of collocation point `i` (second entry is 0 in 1D).
    pub fn quad_node(&self, i: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.axes[0].nodes[i], 0.0]
        } else {
            let ny = self.axes[1].points();
            [self.axes[0].nodes[i / ny], self.axes[1].nodes[i % ny]]
        }
    }

    /// Short human-readable descriptor used in provenance headers.
    pub fn descriptor(&self) -> String {
        let lengths: Vec<String> = self.lengths().iter().map(|l| format!("{l}")).collect();
        format!(
            "sine{}d(N={}, L=[{}], grid={})",
            self.dim,
            self.modes_per_dim,
            lengths.join(","),
            self.grid_len()
        )
    }

    /// Value of basis function `m` at collocation point `i`.
    pub fn basis_value(&self, m: usize, i: usize) -> f64 {
        let [j, k] = self.modes[m];
        let n = self.modes_per_dim;
        if self.dim == 1 {
            self.axes[0].sines[i * n + j - 1]
        } else {
            let ny = self.axes[1].points();
            self.axes[0].sines[(i / ny) * n + j - 1] * self.axes[1].sines[(i % ny) * n + k - 1]
        }
    }

    fn check_modal(&self, what: &'static str, a: &[f64]) -> Result<()> {
        if a.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.len(),
                got: a.len(),
            });
        }
        Ok(())
    }

    fn check_grid(&self, what: &'static str, g: &[f64]) -> Result<()> {
        if g.len() != self.grid_len() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.grid_len(),
                got: g.len(),
            });
        }
        Ok(())
    }

    /// Modal coefficients laid out as an `N×N` matrix indexed by `(j-1, k-1)`.
    fn to_matrix(&self, a: &[f64]) -> Vec<f64> {
        let n = self.modes_per_dim;
        let mut c = vec![0.0; n * n];
        for (flat, &s) in self.slot.iter().enumerate() {
            c[flat] = a[s];
        }
        debug_assert_eq!(c.len(), n * n);
        c
    }

    /// Evaluates a modal vector on the collocation grid.
    pub fn to_physical(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check_modal("modal coefficients", a)?;
        let mut out = vec![0.0; self.grid_len()];
        self.to_physical_into(a, &mut out);
        Ok(out)
    }

    /// Unchecked variant used on the hot path; lengths must already match.
    pub(crate) fn to_physical_into(&self, a: &[f64], out: &mut [f64]) {
        let n = self.modes_per_dim;
        let ax = &self.axes[0];
        if self.dim == 1 {
            // slot is the identity in 1D
            for (q, o) in out.iter_mut().enumerate() {
                let row = &ax.sines[q * n..(q + 1) * n];
                *o = row.iter().zip(a).map(|(s, c)| s * c).sum();
            }
            return;
        }
        let ay = &self.axes[1];
        let c = self.to_matrix(a);
        let (nx, ny) = (ax.points(), ay.points());
        // t[qx, k] = Σ_j S_x[qx, j] c[j, k]
        let mut t = vec![0.0; nx * n];
        for qx in 0..nx {
            for j in 0..n {
                let s = ax.sines[qx * n + j];
                if s == 0.0 {
                    continue;
                }
                for k in 0..n {
                    t[qx * n + k] += s * c[j * n + k];
                }
            }
        }
        for qx in 0..nx {
            let trow = &t[qx * n..(qx + 1) * n];
            for qy in 0..ny {
                let srow = &ay.sines[qy * n..(qy + 1) * n];
                out[qx * ny + qy] = trow.iter().zip(srow).map(|(a, b)| a * b).sum();
            }
        }
    }

    /// Projects grid values onto the modes by quadrature.
    pub fn to_modal(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.check_grid("grid values", g)?;
        let mut out = vec![0.0; self.len()];
        self.to_modal_into(g, &mut out);
        Ok(out)
    }

    pub(crate) fn to_modal_into(&self, g: &[f64], out: &mut [f64]) {
        let n = self.modes_per_dim;
        let ax = &self.axes[0];
        if self.dim == 1 {
            out.iter_mut().for_each(|o| *o = 0.0);
            for (q, &gq) in g.iter().enumerate() {
                let wg = ax.weight * gq;
                let row = &ax.sines[q * n..(q + 1) * n];
                for (o, s) in out.iter_mut().zip(row) {
                    *o += wg * s;
                }
            }
            return;
        }
        let ay = &self.axes[1];
        let (nx, ny) = (ax.points(), ay.points());
        // d[j, qy] = Σ_qx w_x S_x[qx, j] g[qx, qy]
        let mut d = vec![0.0; n * ny];
        for qx in 0..nx {
            let grow = &g[qx * ny..(qx + 1) * ny];
            for j in 0..n {
                let s = ax.weight * ax.sines[qx * n + j];
                let drow = &mut d[j * ny..(j + 1) * ny];
                for (dv, gv) in drow.iter_mut().zip(grow) {
                    *dv += s * gv;
                }
            }
        }
        for j in 0..n {
            let drow = &d[j * ny..(j + 1) * ny];
            for k in 0..n {
                let mut acc = 0.0;
                for (qy, dv) in drow.iter().enumerate() {
                    acc += dv * ay.sines[qy * n + k];
                }
                out[self.slot[j * n + k]] = ay.weight * acc;
            }
        }
    }

    /// Parseval norms: `l2² = Σ a_k²`, `h1² = Σ λ_k a_k²`.
    pub fn norms(&self, a: &[f64]) -> Result<Norms> {
        self.check_modal("modal vector", a)?;
        Ok(Norms {
            l2: self.l2_sq(a).sqrt(),
            h1: self.h1_sq(a).sqrt(),
        })
    }

    pub(crate) fn l2_sq(&self, a: &[f64]) -> f64 {
        a.iter().map(|x| x * x).sum()
    }

    pub(crate) fn h1_sq(&self, a: &[f64]) -> f64 {
        a.iter()
            .zip(&self.eigenvalues)
            .map(|(x, l)| l * x * x)
            .sum()
    }

    /// `∫_Ω g dx` for grid values `g` by the collocation quadrature.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// `∫_Ω |∇u|²` evaluated from the analytic derivative of the expansion on
    /// the full trapezoid grid (boundary nodes included). Independent of the
    /// modal formula `Σ λ_k a_k²`, against which it is checked.
    pub fn gradient_sq_quadrature(&self, a: &[f64]) -> Result<f64> {
        self.check_modal("modal vector", a)?;
        let n = self.modes_per_dim;
        let ax = &self.axes[0];
        if self.dim == 1 {
            let mut total = 0.0;
            for (q, w) in ax.full_weights.iter().enumerate() {
                let row = &ax.cosines[q * n..(q + 1) * n];
                let du: f64 = row.iter().zip(a).map(|(c, x)| c * x).sum();
                total += w * du * du;
            }
            return Ok(total);
        }
        let ay = &self.axes[1];
        let c = self.to_matrix(a);
        let mut total = 0.0;
        // ∂x u on (full x) × (interior y)
        for (qx, wx) in ax.full_weights.iter().enumerate() {
            for qy in 0..ay.points() {
                let mut du = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        du += c[j * n + k] * ax.cosines[qx * n + j] * ay.sines[qy * n + k];
                    }
                }
                total += wx * ay.weight * du * du;
            }
        }
        // ∂y u on (interior x) × (full y)
        for qx in 0..ax.points() {
            for (qy, wy) in ay.full_weights.iter().enumerate() {
                let mut du = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        du += c[j * n + k] * ax.sines[qx * n + j] * ay.cosines[qy * n + k];
                    }
                }
                total += ax.weight * wy * du * du;
            }
        }
        Ok(total)
    }
}
