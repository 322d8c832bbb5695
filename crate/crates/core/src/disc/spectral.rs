//! Solve through the boundary Schur complement.
//!
//! The grid operator commutes with rotations by one angular cell, so the
//! discrete Fourier transform in `θ` splits it into `N` tridiagonal radial
//! problems. Eliminating the interior rings mode by mode leaves, for each
//! mode `k`, a scalar `σ_k` coupling the outer ring to itself. The outer
//! ring operator `S` is therefore diagonal in Fourier space, and conjugate
//! gradients on the free outer nodes only need FFTs.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::cg::pcg;
use super::{CondenserProblem, GridConfig, PotentialField, SolverGrid};
use crate::error::Result;

struct Modes {
    /// `D[k * M + (i - 1)]`: pivots of the elimination, rings `1..=M`.
    pivots: Vec<f64>,
    /// `σ_k = D_M` for mode `k`.
    sigma: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Modes {
    fn new(grid: &SolverGrid) -> Self {
        let n = grid.config.angular;
        let m = grid.config.radial;
        let gr = &grid.g_radial;
        let ga = &grid.g_angular;
        let mut pivots = vec![0.0; n * m];
        let mut sigma = vec![0.0; n];
        for k in 0..n {
            let mu = 4.0 * (PI * k as f64 / n as f64).sin().powi(2);
            let row = &mut pivots[k * m..(k + 1) * m];
            for i in 1..=m {
                let outer = if i < m { gr[i] } else { 0.0 };
                let diag = gr[i - 1] + outer + ga[i] * mu;
                row[i - 1] = if i == 1 {
                    diag
                } else {
                    diag - gr[i - 1] * gr[i - 1] / row[i - 2]
                };
            }
            sigma[k] = row[m - 1];
        }
        let mut planner = FftPlanner::new();
        Modes {
            pivots,
            sigma,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn spectrum(&self, v: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn real_inverse(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let scale = 1.0 / buf.len() as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }

    /// Outer-ring Schur complement applied to `v`.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut hat = self.spectrum(v);
        for (c, s) in hat.iter_mut().zip(&self.sigma) {
            *c *= s;
        }
        self.real_inverse(hat)
    }
}

/// Outcome of a disc solve.
pub struct DiscSolution {
    pub capacity: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Potential on the outer ring.
    pub boundary: Vec<f64>,
    pub grid: SolverGrid,
    modes: Modes,
}

impl std::fmt::Debug for DiscSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscSolution")
            .field("capacity", &self.capacity)
            .field("iterations", &self.iterations)
            .field("residual", &self.residual)
            .finish_non_exhaustive()
    }
}

/// Serializable summary of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscReport {
    pub problem: CondenserProblem,
    pub grid: GridConfig,
    pub capacity: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Discrete condenser capacity and outer-ring potential.
pub fn solve(problem: &CondenserProblem, config: GridConfig) -> Result<DiscSolution> {
    problem.validate()?;
    let grid = SolverGrid::new(config, problem.inner_radius)?;
    let mask = problem.plate_mask(config.angular)?;
    let modes = Modes::new(&grid);
    let n = config.angular;

    let free: Vec<usize> = (0..n).filter(|&j| !mask[j]).collect();
    let fixed: Vec<f64> = mask.iter().map(|&on| if on { 1.0 } else { 0.0 }).collect();
    let s_fixed = modes.apply(&fixed);
    let b: Vec<f64> = free.iter().map(|&j| -s_fixed[j]).collect();
    // circulant operator: every diagonal entry is the mean of the spectrum
    let d = modes.sigma.iter().sum::<f64>() / n as f64;
    let diag = vec![d; free.len()];

    let apply = |x: &[f64], out: &mut [f64]| {
        let mut v = vec![0.0; n];
        for (&j, &xj) in free.iter().zip(x) {
            v[j] = xj;
        }
        let sv = modes.apply(&v);
        for (o, &j) in out.iter_mut().zip(&free) {
            *o = sv[j];
        }
    };
    let outcome = pcg(apply, &diag, &b, config.tol, config.max_iter)?;

    let mut boundary = fixed;
    for (&j, &xj) in free.iter().zip(&outcome.x) {
        boundary[j] = xj;
    }
    let sv = modes.apply(&boundary);
    let energy: f64 = boundary.iter().zip(&sv).map(|(u, s)| u * s).sum();
    Ok(DiscSolution {
        capacity: energy / (2.0 * PI),
        iterations: outcome.iterations,
        residual: outcome.residual,
        boundary,
        grid,
        modes,
    })
}

impl DiscSolution {
    /// Interior potential by back-substitution in every Fourier mode.
    pub fn potential_field(&self) -> PotentialField {
        let n = self.grid.config.angular;
        let m = self.grid.config.radial;
        let top = self.modes.spectrum(&self.boundary);
        // rings 0..=M in Fourier space, ring 0 is grounded
        let mut hat = vec![Complex::new(0.0, 0.0); (m + 1) * n];
        for k in 0..n {
            let pivots = &self.modes.pivots[k * m..(k + 1) * m];
            let mut a = top[k];
            hat[m * n + k] = a;
            for i in (1..m).rev() {
                a *= self.grid.g_radial[i] / pivots[i - 1];
                hat[i * n + k] = a;
            }
        }
        let mut values = Vec::with_capacity((m + 1) * n);
        for ring in hat.chunks(n) {
            values.extend(self.modes.real_inverse(ring.to_vec()));
        }
        PotentialField {
            radii: self.grid.radii.clone(),
            angular: n,
            values,
        }
    }

    pub fn report(&self, problem: &CondenserProblem) -> DiscReport {
        DiscReport {
            problem: problem.clone(),
            grid: self.grid.config,
            capacity: self.capacity,
            iterations: self.iterations,
            residual: self.residual,
        }
    }
}
