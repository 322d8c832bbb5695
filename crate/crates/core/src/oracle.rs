//! Independent capacity oracle: the finite quadratic program on a truncated
//! tree, solved through its dense KKT system.
//!
//! Variables are `φ(x)` on every vertex of depth at most `D`, plus a slack
//! `w_v` for each full vertex `v` at depth `D`. The slack carries the rest
//! of the path below `v`: two full subtrees of capacity `1/2` each, i.e. a
//! terminal conductance of `1`. The program is
//! `min Σφ² + Σw²` subject to `Iφ(v) + w_v = 1`.

use nalgebra::{DMatrix, DVector};

use crate::boundary_set::{BoundarySet, Coverage};
use crate::error::{Error, Result};
use crate::tree::VertexId;

pub const MAX_ORACLE_DEPTH: u32 = 8;

fn slot(v: VertexId) -> usize {
    (1usize << v.level()) - 1 + v.index() as usize
}

/// Minimum energy of the truncated program; equals `capacity(E)` when `E`
/// has trie depth at most `depth`.
pub fn brute_force_capacity(e: &BoundarySet, depth: u32) -> Result<f64> {
    if depth > MAX_ORACLE_DEPTH {
        return Err(Error::Domain {
            value: depth as f64,
            domain: "oracle depth 0..=8",
        });
    }
    if e.resolution() > depth as u64 {
        return Err(Error::ResolutionOverflow {
            level: e.resolution(),
            max: depth as u64,
        });
    }
    let terminals: Vec<VertexId> = (0..1u64 << depth)
        .map(|j| VertexId::new(depth, j).expect("depth <= 8"))
        .filter(|&v| e.coverage(v) == Coverage::Full)
        .collect();
    if terminals.is_empty() {
        return Err(Error::IllConditioned("no full vertex: the constraint set is empty".into()));
    }

    let vertices = (1usize << (depth + 1)) - 1;
    let primal = vertices + terminals.len();
    let size = primal + terminals.len();
    // [ 2I  Aᵀ ] [x]   [0]
    // [ A   0  ] [λ] = [b]
    let mut kkt = DMatrix::<f64>::zeros(size, size);
    for i in 0..primal {
        kkt[(i, i)] = 2.0;
    }
    let mut rhs = DVector::<f64>::zeros(size);
    for (k, &v) in terminals.iter().enumerate() {
        let row = primal + k;
        let mut cols: Vec<usize> = (0..=depth)
            .map(|l| slot(v.ancestor_at(l).expect("l <= depth")))
            .collect();
        cols.push(vertices + k);
        for c in cols {
            kkt[(row, c)] = 1.0;
            kkt[(c, row)] = 1.0;
        }
        rhs[row] = 1.0;
    }
    let solution = kkt
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::IllConditioned("singular KKT matrix".into()))?;
    let x = solution.rows(0, primal);
    let value = x.dot(&x);
    if !value.is_finite() {
        return Err(Error::IllConditioned(format!("non-finite energy {value}")));
    }
    Ok(value)
}
