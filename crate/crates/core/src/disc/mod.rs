//! Condenser capacities in the closed unit disc.
//!
//! The plates are a union `E` of dyadic arcs of the unit circle (potential
//! `1`) and the closed disc `|z| <= r` (potential `0`). The Dirichlet energy
//! is normalized by `1/(2π)`, so the full circle has capacity
//! `1 / log(1/r)`.
//!
//! The annulus `r <= ρ <= 1` is discretized by a polar grid: `N` uniform
//! angular nodes and `M` radial layers graded towards the unit circle. The
//! five-point stencil gives a graph Laplacian with edge conductances
//!
//! * radial, between rings `i` and `i+1`: `Δθ ρ_{i+1/2} / (ρ_{i+1} - ρ_i)`
//! * angular, on ring `i`: `(ρ_{i+1/2} - ρ_{i-1/2}) / (ρ_i Δθ)`, with the
//!   dual cell cut off at `ρ = 1` on the outer ring.
//!
//! Nodes of `E` (arc endpoints included) are held at `1`, the inner ring at
//! `0`, and the rest of the outer ring is free, which is the zero-flux
//! condition of the energy minimizer.

mod cg;
pub mod fullgrid;
pub mod spectral;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary_set::BoundarySet;
use crate::error::{Error, Result};
use crate::tree::VertexId;

pub use fullgrid::solve_full_grid;
pub use spectral::{solve, DiscSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Angular node count, a power of two.
    pub angular: usize,
    /// Radial layer count.
    pub radial: usize,
    /// Grading exponent `λ`; `0` gives uniform layers.
    pub grading: f64,
    /// Relative residual for the iterative solve.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            angular: 1 << 10,
            radial: 200,
            grading: 3.0,
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

impl GridConfig {
    /// Both spacings halved.
    pub fn refined(&self) -> Self {
        GridConfig {
            angular: 2 * self.angular,
            radial: 2 * self.radial,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.angular.is_power_of_two() || self.angular < 4 {
            return Err(Error::InvalidGrid(format!(
                "angular count {} must be a power of two >= 4",
                self.angular
            )));
        }
        if self.radial == 0 {
            return Err(Error::InvalidGrid("need at least one radial layer".into()));
        }
        if !(self.grading >= 0.0 && self.grading.is_finite()) {
            return Err(Error::InvalidGrid(format!("grading {} must be >= 0", self.grading)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iter == 0 {
            return Err(Error::InvalidGrid("tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }

    /// Deepest condenser level `n` (inner radius `1 - 2^-n`) the grid
    /// resolves: an angular cell may span at most four gap widths.
    pub fn max_condenser_level(&self) -> u32 {
        let cell = 2.0 * PI / self.angular as f64;
        (4.0 / cell).log2().floor() as u32
    }
}

/// Plates of a disc condenser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondenserProblem {
    /// Arcs held at potential `1`, as tree vertices `(n, j)`.
    pub arcs: Vec<VertexId>,
    /// Radius of the grounded disc.
    pub inner_radius: f64,
}

impl CondenserProblem {
    pub fn new(arcs: Vec<VertexId>, inner_radius: f64) -> Result<Self> {
        let p = CondenserProblem { arcs, inner_radius };
        p.validate()?;
        Ok(p)
    }

    pub fn from_set(e: &BoundarySet, inner_radius: f64) -> Result<Self> {
        Self::new(e.full_leaves()?, inner_radius)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius > 0.0 && self.inner_radius < 1.0) {
            return Err(Error::Domain {
                value: self.inner_radius,
                domain: "inner radius in (0, 1)",
            });
        }
        let mut spans: Vec<(u128, u128)> = self
            .arcs
            .iter()
            .map(|v| {
                let shift = 64 - v.level();
                ((v.index() as u128) << shift, ((v.index() + 1) as u128) << shift)
            })
            .collect();
        spans.sort_unstable();
        if spans.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(Error::Parse("plate arcs overlap".into()));
        }
        Ok(())
    }

    /// Angular nodes lying on `E`, endpoints included.
    pub(crate) fn plate_mask(&self, angular: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; angular];
        for v in &self.arcs {
            if (2u128 << v.level()) > angular as u128 {
                return Err(Error::MisalignedArc {
                    level: v.level() as u64,
                    angular,
                });
            }
            let width = angular >> v.level();
            let start = v.index() as usize * width;
            for j in start..=start + width {
                mask[j % angular] = true;
            }
        }
        Ok(mask)
    }
}

/// Radii and edge conductances of the polar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverGrid {
    pub config: GridConfig,
    /// `ρ_0 = r < ... < ρ_M = 1`.
    pub radii: Vec<f64>,
    /// Radial edge conductance between rings `i` and `i + 1`.
    pub(crate) g_radial: Vec<f64>,
    /// Angular edge conductance on ring `i`; entry `0` is unused.
    pub(crate) g_angular: Vec<f64>,
}

impl SolverGrid {
    pub fn new(config: GridConfig, inner_radius: f64) -> Result<Self> {
        config.validate()?;
        if !(inner_radius > 0.0 && inner_radius < 1.0) {
            return Err(Error::Domain {
                value: inner_radius,
                domain: "inner radius in (0, 1)",
            });
        }
        let m = config.radial;
        let gap = 1.0 - inner_radius;
        let lambda = config.grading;
        let radii: Vec<f64> = (0..=m)
            .map(|i| {
                let xi = i as f64 / m as f64;
                let frac = if lambda == 0.0 {
                    1.0 - xi
                } else {
                    ((-lambda * xi).exp() - (-lambda).exp()) / (1.0 - (-lambda).exp())
                };
                1.0 - gap * frac
            })
            .collect();
        let radii = {
            let mut r = radii;
            r[0] = inner_radius;
            r[m] = 1.0;
            r
        };
        let dtheta = 2.0 * PI / config.angular as f64;
        let mid: Vec<f64> = radii.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let g_radial = radii
            .windows(2)
            .zip(&mid)
            .map(|(w, rm)| dtheta * rm / (w[1] - w[0]))
            .collect();
        let g_angular = (0..=m)
            .map(|i| {
                if i == 0 {
                    return 0.0;
                }
                let upper = if i == m { 1.0 } else { mid[i] };
                (upper - mid[i - 1]) / (radii[i] * dtheta)
            })
            .collect();
        Ok(SolverGrid {
            config,
            radii,
            g_radial,
            g_angular,
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.radii[0]
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.config.angular;
        (0..n).map(move |j| 2.0 * PI * j as f64 / n as f64)
    }
}

/// Nodal potential on the polar grid, ring-major: `values[i * N + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub radii: Vec<f64>,
    pub angular: usize,
    pub values: Vec<f64>,
}

impl PotentialField {
    pub fn at(&self, ring: usize, node: usize) -> f64 {
        self.values[ring * self.angular + node]
    }

    pub fn ring(&self, ring: usize) -> &[f64] {
        &self.values[ring * self.angular..(ring + 1) * self.angular]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| (lo.min(u), hi.max(u)))
    }

    /// Net flux `Σ g (u_{i+1} - u_i) / (2π)` across the layer between rings
    /// `layer` and `layer + 1`.
    pub fn flux_through(&self, grid: &SolverGrid, layer: usize) -> f64 {
        let g = grid.g_radial[layer];
        self.ring(layer + 1)
            .iter()
            .zip(self.ring(layer))
            .map(|(o, i)| g * (o - i))
            .sum::<f64>()
            / (2.0 * PI)
    }

    /// Discrete Dirichlet energy over all grid edges, normalized by `2π`.
    pub fn energy(&self, grid: &SolverGrid) -> f64 {
        let n = self.angular;
        let m = self.radii.len() - 1;
        let mut total = 0.0;
        for i in 0..m {
            let g = grid.g_radial[i];
            for (o, inner) in self.ring(i + 1).iter().zip(self.ring(i)) {
                total += g * (o - inner).powi(2);
            }
        }
        for i in 1..=m {
            let g = grid.g_angular[i];
            let ring = self.ring(i);
            for j in 0..n {
                total += g * (ring[(j + 1) % n] - ring[j]).powi(2);
            }
        }
        total / (2.0 * PI)
    }

    /// CSV rows `rho,theta,u`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rho,theta,u")?;
        for (i, rho) in self.radii.iter().enumerate() {
            for j in 0..self.angular {
                let theta = 2.0 * PI * j as f64 / self.angular as f64;
                writeln!(w, "{rho},{theta},{}", self.at(i, j))?;
            }
        }
        Ok(())
    }
}

/// Normalized set capacity: the condenser against `|z| <= 1/2`.
pub fn capacity_of_set(e: &BoundarySet, config: GridConfig) -> Result<f64> {
    let problem = CondenserProblem::from_set(e, 0.5)?;
    Ok(solve(&problem, config)?.capacity)
}

/// `(n, cap_n)` for `n = 1..=n_max`, with inner radius `1 - 2^-n`.
pub fn condenser_profile(e: &BoundarySet, n_max: u32, config: GridConfig) -> Result<Vec<(u32, f64)>> {
    let cap = config.max_condenser_level();
    if n_max > cap {
        return Err(Error::ResolutionOverflow {
            level: n_max as u64,
            max: cap as u64,
        });
    }
    let arcs = e.full_leaves()?;
    (1..=n_max)
        .map(|n| {
            let problem = CondenserProblem::new(arcs.clone(), 1.0 - (-(n as f64)).exp2())?;
            Ok((n, solve(&problem, config)?.capacity))
        })
        .collect()
}

/// Coarse value, value on the refined grid, and the extrapolation
/// `(4 fine - coarse) / 3` for a second-order scheme.
pub fn richardson(problem: &CondenserProblem, config: GridConfig) -> Result<(f64, f64, f64)> {
    let coarse = solve(problem, config)?.capacity;
    let fine = solve(problem, config.refined())?.capacity;
    Ok((coarse, fine, (4.0 * fine - coarse) / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_graded_towards_the_circle() {
        let grid = SolverGrid::new(GridConfig::default(), 0.5).unwrap();
        assert_eq!(grid.radii[0], 0.5);
        assert_eq!(*grid.radii.last().unwrap(), 1.0);
        let steps: Vec<f64> = grid.radii.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.windows(2).all(|w| w[1] < w[0]));
        // spacing ratio across the annulus is e^{-λ}
        let ratio = steps.last().unwrap() / steps[0];
        assert!((ratio - (-3.0f64).exp()).abs() < 0.01);
    }

    #[test]
    fn plate_mask_includes_endpoints() {
        let p = CondenserProblem::new(vec![VertexId::new(2, 3).unwrap()], 0.5).unwrap();
        let mask = p.plate_mask(16).unwrap();
        let on: Vec<usize> = (0..16).filter(|&j| mask[j]).collect();
        assert_eq!(on, vec![0, 12, 13, 14, 15]);
        let deep = CondenserProblem::new(vec![VertexId::new(4, 0).unwrap()], 0.5).unwrap();
        assert!(matches!(deep.plate_mask(16), Err(Error::MisalignedArc { .. })));
    }

    #[test]
    fn problem_validation() {
        let v = |n, j| VertexId::new(n, j).unwrap();
        assert!(CondenserProblem::new(vec![v(1, 0), v(2, 1)], 0.5).is_err());
        assert!(CondenserProblem::new(vec![v(1, 0), v(2, 2)], 0.5).is_ok());
        assert!(CondenserProblem::new(vec![], 1.0).is_err());
        let p = CondenserProblem::new(vec![v(1, 0)], 0.75).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"arcs":[[1,0]],"inner_radius":0.75}"#);
        assert_eq!(serde_json::from_str::<CondenserProblem>(&json).unwrap(), p);
    }

    #[test]
    fn grid_capability() {
        assert_eq!(GridConfig::default().max_condenser_level(), 9);
        let small = GridConfig {
            angular: 64,
            ..GridConfig::default()
        };
        assert!(matches!(
            condenser_profile(&BoundarySet::full(), 6, small),
            Err(Error::ResolutionOverflow { .. })
        ));
    }
}
