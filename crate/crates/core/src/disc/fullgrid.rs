//! Reference route: conjugate gradients on every free node of the grid.
//!
//! Much slower than the spectral solve and sensitive to the grid's aspect
//! ratio, but shares no code with it beyond the grid geometry.

use super::cg::pcg;
use super::{CondenserProblem, GridConfig, PotentialField, SolverGrid};
use crate::error::Result;

pub struct FullGridSolution {
    pub capacity: f64,
    pub iterations: usize,
    pub residual: f64,
    pub field: PotentialField,
    pub grid: SolverGrid,
}

/// Graph Laplacian on rings `1..=M`, with ring `0` grounded.
fn laplacian(grid: &SolverGrid, u: &[f64], out: &mut [f64]) {
    let n = grid.config.angular;
    let m = grid.config.radial;
    for i in 1..=m {
        for j in 0..n {
            let c = u[i * n + j];
            let mut acc = grid.g_radial[i - 1] * (c - u[(i - 1) * n + j]);
            if i < m {
                acc += grid.g_radial[i] * (c - u[(i + 1) * n + j]);
            }
            let left = u[i * n + (j + n - 1) % n];
            let right = u[i * n + (j + 1) % n];
            acc += grid.g_angular[i] * (2.0 * c - left - right);
            out[i * n + j] = acc;
        }
    }
}

pub fn solve_full_grid(problem: &CondenserProblem, config: GridConfig) -> Result<FullGridSolution> {
    problem.validate()?;
    let grid = SolverGrid::new(config, problem.inner_radius)?;
    let mask = problem.plate_mask(config.angular)?;
    let n = config.angular;
    let m = config.radial;
    let total = (m + 1) * n;

    let free: Vec<usize> = (n..total)
        .filter(|&k| k < m * n || !mask[k - m * n])
        .collect();
    let mut fixed = vec![0.0; total];
    for j in (0..n).filter(|&j| mask[j]) {
        fixed[m * n + j] = 1.0;
    }
    let mut lf = vec![0.0; total];
    laplacian(&grid, &fixed, &mut lf);
    let b: Vec<f64> = free.iter().map(|&k| -lf[k]).collect();
    let diag: Vec<f64> = free
        .iter()
        .map(|&k| {
            let i = k / n;
            let outer = if i < m { grid.g_radial[i] } else { 0.0 };
            grid.g_radial[i - 1] + outer + 2.0 * grid.g_angular[i]
        })
        .collect();

    let apply = |x: &[f64], out: &mut [f64]| {
        let mut u = vec![0.0; total];
        for (&k, &xk) in free.iter().zip(x) {
            u[k] = xk;
        }
        let mut lu = vec![0.0; total];
        laplacian(&grid, &u, &mut lu);
        for (o, &k) in out.iter_mut().zip(&free) {
            *o = lu[k];
        }
    };
    let outcome = pcg(apply, &diag, &b, config.tol, config.max_iter)?;

    let mut values = fixed;
    for (&k, &xk) in free.iter().zip(&outcome.x) {
        values[k] = xk;
    }
    let field = PotentialField {
        radii: grid.radii.clone(),
        angular: n,
        values,
    };
    let capacity = field.energy(&grid);
    Ok(FullGridSolution {
        capacity,
        iterations: outcome.iterations,
        residual: outcome.residual,
        field,
        grid,
    })
}
