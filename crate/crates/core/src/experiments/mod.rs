//! Named experiments producing [`ExperimentReport`]s.
//!
//! Every report embeds the parameter record it was produced from, so
//! [`replay`] can regenerate it.

pub mod report;
pub mod set_spec;

use std::time::Instant;

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::boundary_set::BoundarySet;
use crate::builder::{
    bound_r, calibrate, equal_split, lower_bound, lower_bound_delta, random_set, split_levels,
    BUILDER_MAX_RESOLUTION,
};
use crate::capacity::{capacity, condenser_capacity, condenser_capacity_exact};
use crate::disc::{capacity_of_set, solve, CondenserProblem, GridConfig};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

pub use report::{ExperimentReport, Verdict, VERSION};
pub use set_spec::{cantor_set, parse_set_spec};

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain {
            value: epsilon,
            domain: "epsilon in (0, 1/2)",
        })
    }
}

fn finish<P: Serialize>(
    name: &str,
    params: &P,
    columns: &[&str],
    rows: Vec<Vec<Option<f64>>>,
    verdict: Verdict,
    notes: Vec<String>,
    started: Instant,
) -> Result<ExperimentReport> {
    Ok(ExperimentReport {
        name: name.into(),
        version: VERSION.into(),
        params: serde_json::to_value(params)?,
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
        verdict,
        timing_seconds: started.elapsed().as_secs_f64(),
        notes,
    })
}

fn condenser_radius(n: u32) -> f64 {
    1.0 - (-(n as f64)).exp2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupParams {
    pub set: String,
    pub n_max: u32,
    /// Value the sequence must exceed by `n_max`.
    pub threshold: f64,
    /// Step ratios are checked against `[1.5, 2]` from this level on.
    pub ratio_from: u32,
    /// Attach disc values for `n = 1..=disc_n_max`; `0` for none.
    pub disc_n_max: u32,
    pub grid: GridConfig,
}

impl Default for BlowupParams {
    fn default() -> Self {
        BlowupParams {
            set: "prefix:1/2".into(),
            n_max: 20,
            threshold: 1e3,
            ratio_from: 8,
            disc_n_max: 0,
            grid: GridConfig::default(),
        }
    }
}

/// Growth of `cpc_n` for a fixed set of positive capacity.
pub fn cmd_blowup(params: &BlowupParams) -> Result<ExperimentReport> {
    let started = Instant::now();
    let e = parse_set_spec(&params.set)?;
    if capacity(&e) <= 0.0 {
        return Err(Error::Degenerate(format!(
            "set {:?} has zero capacity; its condensers stay bounded",
            params.set
        )));
    }
    let values: Vec<f64> = (0..=params.n_max)
        .map(|n| condenser_capacity(&e, n as u64))
        .collect();
    let disc: Vec<Option<f64>> = (0..=params.n_max)
        .into_par_iter()
        .map(|n| -> Result<Option<f64>> {
            if n == 0 || n > params.disc_n_max {
                return Ok(None);
            }
            let problem = CondenserProblem::from_set(&e, condenser_radius(n))?;
            Ok(Some(solve(&problem, params.grid)?.capacity))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut bad_ratio = None;
    for n in 0..=params.n_max as usize {
        let ratio = (n > 0).then(|| values[n] / values[n - 1]);
        if let Some(q) = ratio {
            if n as u32 >= params.ratio_from && !(1.5..=2.0).contains(&q) && bad_ratio.is_none() {
                bad_ratio = Some((n, q));
            }
        }
        rows.push(vec![Some(n as f64), Some(values[n]), ratio, disc[n]]);
    }
    let crossing = values.iter().position(|&v| v > params.threshold);
    let passed = crossing.is_some() && bad_ratio.is_none();
    let detail = match (crossing, bad_ratio) {
        (Some(n), None) => format!("exceeds {} at n = {n}; step ratios in [1.5, 2]", params.threshold),
        (None, _) => format!("stays below {} up to n = {}", params.threshold, params.n_max),
        (_, Some((n, q))) => format!("step ratio {q} at n = {n} outside [1.5, 2]"),
    };
    finish(
        "blowup",
        params,
        &["n", "tree_condenser", "step_ratio", "disc_condenser"],
        rows,
        Verdict { passed, detail },
        vec![],
        started,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauParams {
    pub epsilon: f64,
    pub n_max: u32,
    /// Construction tolerance of the equal-split family.
    pub tol: f64,
    /// Evaluate condenser capacities in exact rationals.
    pub exact: bool,
}

impl Default for PlateauParams {
    fn default() -> Self {
        PlateauParams {
            epsilon: 0.25,
            n_max: 12,
            tol: 1e-12,
            exact: true,
        }
    }
}

/// `cpc_n(E_n)` of the equal-split family stays below `ε / (1 - 2ε)`.
pub fn cmd_plateau(params: &PlateauParams) -> Result<ExperimentReport> {
    let started = Instant::now();
    check_epsilon(params.epsilon)?;
    let r = bound_r(params.epsilon);
    let rows: Vec<Vec<Option<f64>>> = (0..=params.n_max)
        .into_par_iter()
        .map(|n| -> Result<Vec<Option<f64>>> {
            let fam = equal_split(params.epsilon, n, params.tol)?;
            let computed = if params.exact {
                condenser_capacity_exact(&fam.carrier, n as u64)
                    .to_f64()
                    .ok_or_else(|| Error::Degenerate("exact value out of f64 range".into()))?
            } else {
                condenser_capacity(&fam.carrier, n as u64)
            };
            let closed = lower_bound(params.epsilon, n);
            Ok(vec![
                Some(n as f64),
                Some(fam.e[n as usize]),
                Some(computed),
                Some(closed),
                Some(r),
                Some((computed - closed).abs()),
            ])
        })
        .collect::<Result<_>>()?;
    let tol = 1e-9;
    let off = rows.iter().find(|row| row[5].unwrap() > tol);
    let above = rows.iter().find(|row| row[2].unwrap() > r);
    let (passed, detail) = match (off, above) {
        (None, None) => (true, format!("matches the closed form within {tol:e}; all values <= R = {r}")),
        (Some(row), _) => (false, format!("n = {}: off the closed form by {}", row[0].unwrap(), row[5].unwrap())),
        (_, Some(row)) => (false, format!("n = {}: value {} exceeds R = {r}", row[0].unwrap(), row[2].unwrap())),
    };
    finish(
        "plateau",
        params,
        &["n", "e_n", "computed", "closed_form", "bound_R", "abs_diff"],
        rows,
        Verdict { passed, detail },
        vec![],
        started,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundParams {
    pub epsilon: f64,
    pub n_max: u32,
    pub samples: usize,
    pub seed: u64,
    /// Depth bound of the random tries before calibration.
    pub depth: u32,
    pub p_full: f64,
    /// Calibration tolerance on the root capacity.
    pub tol: f64,
}

impl LowerBoundParams {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        LowerBoundParams {
            epsilon,
            n_max: 8,
            samples: 100,
            seed,
            depth: 6,
            p_full: 0.5,
            tol: 1e-9,
        }
    }
}

/// Sample `i` of a seeded run: its own ChaCha stream, independent of order.
pub fn calibrated_sample(params: &LowerBoundParams, i: usize) -> Result<BoundarySet> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(i as u64);
    let base = random_set(&mut rng, params.depth, params.p_full);
    calibrate(&base, params.epsilon, params.tol)
}

/// Random sets of capacity `ε` against the sharp bound `ε / (1 - (2 - 2^{1-n})ε)`.
pub fn cmd_lowerbound(params: &LowerBoundParams) -> Result<ExperimentReport> {
    let started = Instant::now();
    check_epsilon(params.epsilon)?;
    if params.samples == 0 {
        return Err(Error::Domain {
            value: 0.0,
            domain: "samples >= 1",
        });
    }
    let levels = params.n_max as usize + 1;
    let slack = 1e-6;
    let profiles: Vec<Vec<f64>> = (0..params.samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let e = calibrated_sample(params, i)?;
            if (capacity(&e) - params.epsilon).abs() > slack {
                return Err(Error::ToleranceUnreachable {
                    tol: slack,
                    max_resolution: BUILDER_MAX_RESOLUTION,
                    lo: capacity(&e),
                    hi: capacity(&e),
                });
            }
            Ok((0..levels).map(|n| condenser_capacity(&e, n as u64)).collect())
        })
        .collect::<Result<_>>()?;
    let attained: Vec<f64> = (0..=params.n_max)
        .into_par_iter()
        .map(|n| Ok(condenser_capacity(&equal_split(params.epsilon, n, 1e-12)?.carrier, n as u64)))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut violations = 0usize;
    let mut worst_gap = 0.0f64;
    for n in 0..levels {
        let bound = lower_bound(params.epsilon, n as u32);
        let column = profiles.iter().map(|p| p[n]);
        let min = column.clone().fold(f64::INFINITY, f64::min);
        let max = column.clone().fold(f64::NEG_INFINITY, f64::max);
        let bad = column.filter(|&v| v < bound - slack).count();
        violations += bad;
        let gap = (attained[n] - bound).abs();
        worst_gap = worst_gap.max(gap);
        rows.push(vec![
            Some(n as f64),
            Some(bound),
            Some(min),
            Some(max),
            Some(bad as f64),
            Some(attained[n]),
            Some(gap),
        ]);
    }
    let passed = violations == 0 && worst_gap <= slack;
    let detail = format!(
        "{violations} violations over {} samples; equal-split gap {worst_gap:e}",
        params.samples
    );
    finish(
        "lowerbound",
        params,
        &["n", "lower_bound", "sample_min", "sample_max", "violations", "equal_split", "abs_gap"],
        rows,
        Verdict { passed, detail },
        vec![],
        started,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareParams {
    pub set: String,
    pub n_max: u32,
    pub bracket: [f64; 2],
    /// Largest allowed max/min of the ratio over `n >= 1`.
    pub max_spread: f64,
    pub grid: GridConfig,
}

impl Default for CompareParams {
    fn default() -> Self {
        CompareParams {
            set: "shadow:1,0".into(),
            n_max: 6,
            bracket: [0.1, 10.0],
            max_spread: 20.0,
            grid: GridConfig::default(),
        }
    }
}

/// Disc condensers against tree condensers. Row `n = 0` compares the set
/// capacities themselves (inner radius `1/2`).
pub fn cmd_compare(params: &CompareParams) -> Result<ExperimentReport> {
    let started = Instant::now();
    let e = parse_set_spec(&params.set)?;
    if e.is_empty() {
        return Err(Error::Degenerate("empty plate".into()));
    }
    let cap = params.grid.max_condenser_level();
    if params.n_max > cap {
        return Err(Error::ResolutionOverflow {
            level: params.n_max as u64,
            max: cap as u64,
        });
    }
    let rows: Vec<Vec<Option<f64>>> = (0..=params.n_max)
        .into_par_iter()
        .map(|n| -> Result<Vec<Option<f64>>> {
            let (radius, tree, disc) = if n == 0 {
                (0.5, capacity(&e), capacity_of_set(&e, params.grid)?)
            } else {
                let r = condenser_radius(n);
                let problem = CondenserProblem::from_set(&e, r)?;
                (r, condenser_capacity(&e, n as u64), solve(&problem, params.grid)?.capacity)
            };
            Ok(vec![
                Some(n as f64),
                Some(radius),
                Some(tree),
                Some(disc),
                Some(disc / tree),
            ])
        })
        .collect::<Result<_>>()?;

    let [lo, hi] = params.bracket;
    let outside = rows.iter().find(|r| !(lo..=hi).contains(&r[4].unwrap()));
    let ratios: Vec<f64> = rows.iter().skip(1).map(|r| r[4].unwrap()).collect();
    let spread = if ratios.is_empty() {
        1.0
    } else {
        ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            / ratios.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let (passed, detail) = match outside {
        Some(row) => (false, format!("n = {}: ratio {} outside [{lo}, {hi}]", row[0].unwrap(), row[4].unwrap())),
        None if spread > params.max_spread => (false, format!("ratio spread {spread} exceeds {}", params.max_spread)),
        None => (true, format!("ratios in [{lo}, {hi}]; spread {spread:.4}")),
    };
    finish(
        "compare",
        params,
        &["n", "radius", "tree_condenser", "disc_condenser", "ratio"],
        rows,
        Verdict { passed, detail },
        vec![],
        started,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureParams {
    pub deltas: Vec<f64>,
    pub n_max: u32,
    /// Disc values for `n = 1..=disc_n_max`; `0` for none.
    pub disc_n_max: u32,
    pub grid: GridConfig,
}

impl Default for ConjectureParams {
    fn default() -> Self {
        ConjectureParams {
            deltas: vec![0.25, 0.1, 1.0 / 32.0, 1.0 / 256.0],
            n_max: 16,
            disc_n_max: 0,
            grid: GridConfig::default(),
        }
    }
}

/// Prefix set with endpoint at resolution `q` whose capacity is closest
/// to `target`.
fn coarse_prefix(target: f64, q: u32) -> Result<BoundarySet> {
    let at = |p: u128| -> Result<BoundarySet> { BoundarySet::prefix(&Dyadic::from_ratio(p, q)?, q as u64) };
    let (mut lo, mut hi) = (0u128, 1u128 << q);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if at(mid)?.capacity() <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (at(lo)?, at(hi)?);
    Ok(if (a.capacity() - target).abs() <= (b.capacity() - target).abs() { a } else { b })
}

/// Equal-split carrier coarsened so that its arcs fit the angular grid.
fn gridable_split(epsilon: f64, n: u32, grid: &GridConfig) -> Result<BoundarySet> {
    let finest = grid.angular.trailing_zeros().saturating_sub(1);
    if n > finest {
        return Err(Error::MisalignedArc {
            level: n as u64,
            angular: grid.angular,
        });
    }
    let e_n = split_levels(epsilon, n)[n as usize];
    Ok(coarse_prefix(e_n, finest - n)?.replicate(n))
}

/// Doubling-then-plateau shape of the sharp bound in terms of the deficit
/// `δ = 1/2 - ε`. Disc values, when requested, are exploratory.
pub fn cmd_conjecture(params: &ConjectureParams) -> Result<ExperimentReport> {
    let started = Instant::now();
    for &d in &params.deltas {
        if !(d > 0.0 && d < 0.5) {
            return Err(Error::Domain {
                value: d,
                domain: "delta in (0, 1/2)",
            });
        }
    }
    let cells: Vec<(f64, u32)> = params
        .deltas
        .iter()
        .flat_map(|&d| (0..=params.n_max).map(move |n| (d, n)))
        .collect();
    let rows: Vec<Vec<Option<f64>>> = cells
        .into_par_iter()
        .map(|(delta, n)| -> Result<Vec<Option<f64>>> {
            let eps = 0.5 - delta;
            let tree = lower_bound(eps, n);
            let shape = lower_bound_delta(delta, n);
            let (disc, disc_tree) = if n >= 1 && n <= params.disc_n_max {
                let carrier = gridable_split(eps, n, &params.grid)?;
                let problem = CondenserProblem::from_set(&carrier, condenser_radius(n))?;
                let value = solve(&problem, params.grid)?.capacity;
                (Some(value), Some(condenser_capacity(&carrier, n as u64)))
            } else {
                (None, None)
            };
            Ok(vec![
                Some(delta),
                Some(n as f64),
                Some(tree),
                Some(shape),
                Some((tree - shape).abs()),
                Some((n as f64).exp2() * eps),
                Some(eps / (2.0 * delta)),
                disc,
                disc_tree,
            ])
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().map(|r| r[4].unwrap()).fold(0.0, f64::max);
    let passed = worst <= 1e-12;
    let notes = params
        .deltas
        .iter()
        .map(|d| format!("delta {d}: knee near n = {:.2}", (1.0 / d).log2()))
        .chain(std::iter::once(
            "disc columns are exploratory and carry no verdict".to_string(),
        ))
        .collect();
    finish(
        "conjecture",
        params,
        &[
            "delta",
            "n",
            "lower_bound",
            "delta_form",
            "abs_diff",
            "doubling_ref",
            "plateau_ref",
            "disc_condenser",
            "disc_set_tree_condenser",
        ],
        rows,
        Verdict {
            passed,
            detail: format!("two evaluations of the bound differ by at most {worst:e}"),
        },
        notes,
        started,
    )
}

fn params_of<P: DeserializeOwned>(report: &ExperimentReport) -> Result<P> {
    Ok(serde_json::from_value(report.params.clone())?)
}

/// Re-runs the experiment recorded in `report`.
pub fn replay(report: &ExperimentReport) -> Result<ExperimentReport> {
    match report.name.as_str() {
        "blowup" => cmd_blowup(&params_of(report)?),
        "plateau" => cmd_plateau(&params_of(report)?),
        "lowerbound" => cmd_lowerbound(&params_of(report)?),
        "compare" => cmd_compare(&params_of(report)?),
        "conjecture" => cmd_conjecture(&params_of(report)?),
        other => Err(Error::Parse(format!("unknown experiment {other:?}"))),
    }
}
