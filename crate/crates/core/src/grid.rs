use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

/// Node spacing of a [`RadialGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    Logarithmic,
    Custom,
}

/// Surface area `ω_N` of the unit sphere in `ℝ^N`.
pub fn sphere_area(dim: u32) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        n => {
            let h = n as f64 / 2.0;
            2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
        }
    }
}

/// Volume of the ball of radius `r` in `ℝ^N`.
pub fn ball_volume(dim: u32, r: f64) -> f64 {
    sphere_area(dim) * r.powi(dim as i32) / dim as f64
}

/// Volume of the shell `a ≤ |x| ≤ b`.
pub fn shell_volume(dim: u32, a: f64, b: f64) -> f64 {
    sphere_area(dim) * (b.powi(dim as i32) - a.powi(dim as i32)) / dim as f64
}

/// Radii for radially symmetric functions on `ℝ^N` together with quadrature
/// weights for `∫ f(|x|) dx`.
///
/// The weights integrate, cell by cell, the local cubic interpolant of the
/// nodal values against `ω_N r^{N−1}`. When the first node is positive the
/// ball `[0, r₀]` is included with the value at `r₀`. All weights are
/// positive, except that a node at the origin carries weight zero in `ℝ³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    dim: u32,
    spacing: Spacing,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>, dim: u32, spacing: Spacing) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::domain("a radial grid needs at least two nodes"));
        }
        if dim == 0 {
            return Err(Error::domain("dimension must be positive"));
        }
        if nodes[0] < 0.0 || !nodes.iter().all(|x| x.is_finite()) {
            return Err(Error::domain("radial nodes must be finite and nonnegative"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("radial nodes must be strictly increasing"));
        }
        let weights = cell_weights(&nodes, dim, 0, nodes.len() - 1, true);
        let bad = weights
            .iter()
            .zip(&nodes)
            .position(|(w, r)| !(*w > 0.0 || (*w == 0.0 && *r == 0.0)));
        if let Some(i) = bad {
            return Err(Error::Invariant(format!(
                "nonpositive quadrature weight at node {i} (r = {})",
                nodes[i]
            )));
        }
        Ok(RadialGrid {
            dim,
            spacing,
            nodes,
            weights,
        })
    }

    /// `n` equally spaced nodes on `[0, r_max]`.
    pub fn uniform(r_max: f64, n: usize, dim: u32) -> Result<Self> {
        Self::uniform_between(0.0, r_max, n, dim)
    }

    /// `n` equally spaced nodes on `[a, b]`.
    pub fn uniform_between(a: f64, b: f64, n: usize, dim: u32) -> Result<Self> {
        if !(b > a) || n < 2 {
            return Err(Error::domain("uniform grid needs b > a and n ≥ 2"));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
        nodes[n - 1] = b;
        Self::from_nodes(nodes, dim, Spacing::Uniform)
    }

    /// `n` logarithmically spaced nodes on `[r_min, r_max]`, `r_min > 0`.
    pub fn logarithmic(r_min: f64, r_max: f64, n: usize, dim: u32) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || n < 2 {
            return Err(Error::domain(
                "logarithmic grid needs 0 < r_min < r_max and n ≥ 2",
            ));
        }
        let (la, lb) = (r_min.ln(), r_max.ln());
        let h = (lb - la) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| (la + h * i as f64).exp()).collect();
        nodes[0] = r_min;
        nodes[n - 1] = r_max;
        Self::from_nodes(nodes, dim, Spacing::Logarithmic)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `∫_{|x| ≤ r_max} f` for nodal values `f`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let mut acc = crate::quad::KahanSum::default();
        for (w, v) in self.weights.iter().zip(values) {
            acc.add(w * v);
        }
        acc.sum()
    }

    /// Weights restricted to the shell between nodes `i0 ≤ i1`. The ball
    /// `[0, r₀]` is included iff `i0 == 0` and `with_origin` is set.
    pub fn range_weights(&self, i0: usize, i1: usize, with_origin: bool) -> Vec<f64> {
        cell_weights(&self.nodes, self.dim, i0, i1, with_origin && i0 == 0)
    }

    /// Weights that leave out the ball `[0, r₀]`, for integrands whose
    /// near-origin contribution is added analytically.
    pub fn interior_weights(&self) -> Vec<f64> {
        cell_weights(&self.nodes, self.dim, 0, self.nodes.len() - 1, false)
    }

    /// Index of the largest node `≤ r` (0 if `r` is below the grid).
    pub fn floor_index(&self, r: f64) -> usize {
        match self.nodes.partition_point(|x| *x <= r) {
            0 => 0,
            k => k - 1,
        }
    }

    /// Index of the smallest node `≥ r` (last index if above the grid).
    pub fn ceil_index(&self, r: f64) -> usize {
        self.nodes
            .partition_point(|x| *x < r)
            .min(self.nodes.len() - 1)
    }
}

fn cell_weights(nodes: &[f64], dim: u32, i0: usize, i1: usize, with_origin: bool) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    let omega = sphere_area(dim);
    let k = dim as i32 - 1;
    if with_origin && nodes[0] > 0.0 {
        w[0] += ball_volume(dim, nodes[0]);
    }
    let gl = GaussLegendre::new(4);
    let m = n.min(4);
    for i in i0..i1.min(n - 1) {
        // Radial functions are even in r, so the cell touching the origin
        // interpolates through the mirror image of the second node.
        let (stencil, map): (Vec<f64>, Vec<usize>) = if i == 0 && nodes[0] == 0.0 && n >= 3 {
            (vec![-nodes[1], nodes[0], nodes[1], nodes[2]], vec![1, 0, 1, 2])
        } else {
            let j0 = i.saturating_sub(1).min(n - m);
            (nodes[j0..j0 + m].to_vec(), (j0..j0 + m).collect())
        };
        let (a, b) = (nodes[i], nodes[i + 1]);
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (x, gw) in gl.nodes.iter().zip(&gl.weights) {
            let r = c + h * x;
            let meas = gw * h * omega * r.powi(k);
            for (q, &xq) in stencil.iter().enumerate() {
                let mut l = 1.0;
                for (p, &xp) in stencil.iter().enumerate() {
                    if p != q {
                        l *= (r - xp) / (xq - xp);
                    }
                }
                w[map[q]] += meas * l;
            }
        }
    }
    // In three dimensions the origin carries no weight; flush the rounding.
    if nodes[0] == 0.0 && n > 1 && w[0].abs() <= 1e-12 * w[1].abs() {
        w[0] = 0.0;
    }
    w
}

/// Nodal values on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(RadialField { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialField { grid, values }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volume_reproduced_by_weights() {
        for dim in 1..=3 {
            for g in [
                RadialGrid::uniform(2.5, 40, dim).unwrap(),
                RadialGrid::logarithmic(1e-4, 1e3, 600, dim).unwrap(),
            ] {
                let ones = vec![1.0; g.len()];
                let v = g.integrate(&ones);
                let exact = ball_volume(dim, g.r_max());
                assert!(((v - exact) / exact).abs() < 1e-12, "dim {dim}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn gaussian_integral_on_log_grid() {
        // ∫_{ℝ³} e^{−r²} = π^{3/2}
        let g = RadialGrid::logarithmic(1e-4, 20.0, 800, 3).unwrap();
        let f = RadialField::from_fn(g, |r| (-r * r).exp());
        assert!((f.integral() - PI.powf(1.5)).abs() < 5e-6);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(RadialGrid::from_nodes(vec![0.0, 1.0, 1.0], 1, Spacing::Custom).is_err());
        assert!(RadialGrid::from_nodes(vec![-1.0, 1.0], 1, Spacing::Custom).is_err());
        assert!(RadialGrid::logarithmic(0.0, 1.0, 10, 1).is_err());
    }

    #[test]
    fn range_weights_cover_shell() {
        let g = RadialGrid::uniform(4.0, 81, 3).unwrap();
        let i0 = g.floor_index(1.0);
        let i1 = g.ceil_index(2.0);
        let w = g.range_weights(i0, i1, false);
        let v: f64 = w.iter().sum();
        assert!((v - shell_volume(3, 1.0, 2.0)).abs() < 1e-12);
    }

    #[test]
    fn index_lookup() {
        let g = RadialGrid::uniform(1.0, 11, 1).unwrap();
        assert_eq!(g.floor_index(0.35), 3);
        assert_eq!(g.ceil_index(0.35), 4);
        assert_eq!(g.ceil_index(0.3), 3);
        assert_eq!(g.floor_index(5.0), 10);
    }
}
