//! Sets of prescribed capacity, the equal-split family and the `ψ` bounds.
//!
//! `f(t) = capacity(prefix(t))` is continuous and increasing from `f(0) = 0`
//! to `f(1) = 1/2`, so a target capacity is reached by bisection over dyadic
//! `t`. Small targets need long runs of zero bits; the bisection skips those
//! by galloping, which visits the same dyadics as plain bisection would.

use rand::Rng;
use serde_json::json;

use crate::boundary_set::BoundarySet;
use crate::capacity::capacity;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// Resolution cap for built sets. Far above [`crate::boundary_set::DEFAULT_MAX_RESOLUTION`]
/// because tiny capacities live deep in the tree: `capacity(S(x)) = 1/(d(x)+2)`.
pub const BUILDER_MAX_RESOLUTION: u64 = 1 << 40;

/// Finds `t` with `|eval(t) - target| <= tol` for a nondecreasing `eval`.
///
/// Returns the first bisection midpoint within tolerance, so exact hits at
/// coarse dyadics are returned at their smallest resolution.
pub fn bisect_dyadic(
    eval: impl Fn(&Dyadic) -> Result<f64>,
    target: f64,
    tol: f64,
    max_resolution: u64,
) -> Result<Dyadic> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain {
            value: tol,
            domain: "tolerance > 0",
        });
    }
    let f0 = eval(&Dyadic::zero())?;
    if (f0 - target).abs() <= tol {
        return Ok(Dyadic::zero());
    }
    let f1 = eval(&Dyadic::one())?;
    if (f1 - target).abs() <= tol {
        return Ok(Dyadic::one());
    }
    if !(f0..=f1).contains(&target) {
        return Err(Error::Domain {
            value: target,
            domain: "the range of the family",
        });
    }

    // invariant: f(lo) < target - tol, f(lo + 2^-m) > target + tol
    let mut lo = Dyadic::zero();
    let mut m = 0u64;
    let (mut f_lo, mut f_hi) = (f0, f1);
    loop {
        let above = |k: u64| -> Result<bool> { Ok(eval(&lo.with_bit(m + k))? > target + tol) };
        let limit = max_resolution.saturating_sub(m);
        let unreachable = |f_lo: f64, f_hi: f64| Error::ToleranceUnreachable {
            tol,
            max_resolution,
            lo: f_lo,
            hi: f_hi,
        };
        if limit == 0 {
            return Err(unreachable(f_lo, f_hi));
        }
        // smallest k >= 1 whose midpoint is not above the target band
        let k = if !above(1)? {
            1
        } else {
            let (mut good, mut probe) = (1u64, 2u64);
            loop {
                let p = probe.min(limit);
                if !above(p)? {
                    break;
                }
                if p == limit {
                    let f = eval(&lo.with_bit(m + limit))?;
                    return Err(unreachable(f_lo, f));
                }
                good = p;
                probe = probe.saturating_mul(2);
            }
            let mut bad = probe.min(limit);
            while bad - good > 1 {
                let mid = good + (bad - good) / 2;
                if above(mid)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            bad
        };
        let mid = lo.with_bit(m + k);
        let f_mid = eval(&mid)?;
        if f_mid >= target - tol {
            return Ok(mid);
        }
        if k > 1 {
            f_hi = eval(&lo.with_bit(m + k - 1))?;
        }
        lo = mid;
        f_lo = f_mid;
        m += k;
    }
}

/// `prefix(t)` with `|capacity - target| <= tol`.
pub fn set_of_capacity(target: f64, tol: f64) -> Result<BoundarySet> {
    set_of_capacity_with(target, tol, BUILDER_MAX_RESOLUTION).map(|(_, e)| e)
}

/// As [`set_of_capacity`], also returning the endpoint `t`.
pub fn set_of_capacity_with(
    target: f64,
    tol: f64,
    max_resolution: u64,
) -> Result<(Dyadic, BoundarySet)> {
    if !(0.0..=0.5).contains(&target) {
        return Err(Error::Domain {
            value: target,
            domain: "[0, 1/2]",
        });
    }
    let t = bisect_dyadic(
        |t| Ok(BoundarySet::prefix(t, max_resolution)?.capacity()),
        target,
        tol,
        max_resolution,
    )?;
    let e = BoundarySet::prefix(&t, max_resolution)?;
    Ok((t, e))
}

/// Per-level capacities `e_0 = ε`, `e_k = e_{k-1} / (2 - 2 e_{k-1})`.
pub fn split_levels(epsilon: f64, n: u32) -> Vec<f64> {
    std::iter::successors(Some(epsilon), |&e| Some(e / (2.0 - 2.0 * e)))
        .take(n as usize + 1)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitFamily {
    pub epsilon: f64,
    pub n: u32,
    pub e: Vec<f64>,
    /// Endpoint of the prefix set placed in every level-`n` shadow.
    pub piece_t: Dyadic,
    pub carrier: BoundarySet,
}

/// `2^n` copies of a set of capacity `e_n`, one per level-`n` shadow.
pub fn equal_split(epsilon: f64, n: u32, tol: f64) -> Result<SplitFamily> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain {
            value: epsilon,
            domain: "(0, 1/2)",
        });
    }
    let e = split_levels(epsilon, n);
    let piece_tol = tol * (-(n as f64)).exp2();
    let (piece_t, piece) = set_of_capacity_with(e[n as usize], piece_tol, BUILDER_MAX_RESOLUTION)?;
    let carrier = piece.replicate(n);
    let achieved = capacity(&carrier);
    if (achieved - epsilon).abs() > tol {
        return Err(Error::ToleranceUnreachable {
            tol,
            max_resolution: BUILDER_MAX_RESOLUTION,
            lo: achieved,
            hi: achieved,
        });
    }
    Ok(SplitFamily {
        epsilon,
        n,
        e,
        piece_t,
        carrier,
    })
}

impl SplitFamily {
    pub fn bound_r(&self) -> f64 {
        bound_r(self.epsilon)
    }

    /// `{epsilon, n, e, bound_R, piece_t, carrier}`; `carrier` is `null`
    /// when its leaves are too deep to address.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "epsilon": self.epsilon,
            "n": self.n,
            "e": self.e,
            "bound_R": self.bound_r(),
            "piece_t": self.piece_t.to_string(),
            "carrier": self.carrier.to_json().ok(),
        })
    }
}

fn check_half_interval(t: f64) -> Result<()> {
    if (0.0..=0.5).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: t,
            domain: "[0, 1/2]",
        })
    }
}

/// `ψ(t) = t / (2(1 - t))`: the capacity of each half when a set of
/// capacity `t` splits into two equal halves.
pub fn psi(t: f64) -> Result<f64> {
    check_half_interval(t)?;
    Ok(t / (2.0 * (1.0 - t)))
}

/// `ψ^n(t) = t / (2^n - (2^{n+1} - 2) t)`.
pub fn psi_iterate(t: f64, n: u32) -> Result<f64> {
    check_half_interval(t)?;
    let p = (n as f64).exp2();
    Ok(t / (p - (2.0 * p - 2.0) * t))
}

/// Smallest level-`n` condenser capacity among sets of capacity `ε`:
/// `ε / (1 - (2 - 2^{1-n}) ε)`.
pub fn lower_bound(epsilon: f64, n: u32) -> f64 {
    epsilon / (1.0 - (2.0 - (1.0 - n as f64).exp2()) * epsilon)
}

/// [`lower_bound`] at `ε = 1/2 - δ`, written in terms of the deficit `δ`.
pub fn lower_bound_delta(delta: f64, n: u32) -> f64 {
    (0.5 - delta) / ((2.0 - (1.0 - n as f64).exp2()) * delta + (-(n as f64)).exp2())
}

/// `ε / (1 - 2ε)`, the level-independent ceiling of the equal-split family.
pub fn bound_r(epsilon: f64) -> f64 {
    epsilon / (1.0 - 2.0 * epsilon)
}

/// Random trie of depth at most `max_depth`: the top two levels always
/// split, deeper vertices split with probability 0.6, and leaves are full
/// with probability `p_full`.
pub fn random_set<R: Rng + ?Sized>(rng: &mut R, max_depth: u32, p_full: f64) -> BoundarySet {
    fn grow<R: Rng + ?Sized>(rng: &mut R, level: u32, max_depth: u32, p_full: f64) -> BoundarySet {
        if level < max_depth && (level < 2 || rng.random_bool(0.6)) {
            let l = grow(rng, level + 1, max_depth, p_full);
            let r = grow(rng, level + 1, max_depth, p_full);
            BoundarySet::join(&l, &r)
        } else if rng.random_bool(p_full) {
            BoundarySet::full()
        } else {
            BoundarySet::empty()
        }
    }
    grow(rng, 0, max_depth, p_full)
}

/// Adjusts `base` to capacity `target` by adding or trimming a prefix set:
/// `base ∪ prefix(t)` when `base` is too small, `base ∩ prefix(t)` otherwise.
pub fn calibrate(base: &BoundarySet, target: f64, tol: f64) -> Result<BoundarySet> {
    if !(0.0..=0.5).contains(&target) {
        return Err(Error::Domain {
            value: target,
            domain: "[0, 1/2]",
        });
    }
    let grow = capacity(base) < target;
    let member = |t: &Dyadic| -> Result<BoundarySet> {
        let p = BoundarySet::prefix(t, BUILDER_MAX_RESOLUTION)?;
        Ok(if grow { base.union(&p) } else { base.intersection(&p) })
    };
    let t = bisect_dyadic(
        |t| Ok(member(t)?.capacity()),
        target,
        tol,
        BUILDER_MAX_RESOLUTION,
    )?;
    member(&t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{condenser_capacity, condenser_capacity_exact};
    use crate::tree::VertexId;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn set_of_capacity_examples() {
        assert!(set_of_capacity(0.5, 1e-3).unwrap().is_full());
        assert!(set_of_capacity(0.0, 1e-3).unwrap().is_empty());
        let third = set_of_capacity(1.0 / 3.0, 1e-12).unwrap();
        assert_eq!(third, BoundarySet::prefix(&"1/2".parse().unwrap(), 1).unwrap());
        assert!(set_of_capacity(0.6, 1e-3).is_err());
    }

    #[test]
    fn tiny_targets_are_reachable() {
        for &x in &[1e-3, 1e-5, 3.7e-7] {
            let e = set_of_capacity(x, 1e-13).unwrap();
            assert!(close(capacity(&e), x, 1e-13), "target {x}");
        }
    }

    #[test]
    fn unreachable_tolerance_reports_bracket() {
        match set_of_capacity_with(0.31, 1e-15, 8) {
            Err(Error::ToleranceUnreachable { lo, hi, .. }) => {
                assert!(lo < 0.31 && 0.31 < hi, "bracket [{lo}, {hi}]");
            }
            other => panic!("expected a bracket, got {other:?}"),
        }
    }

    #[test]
    fn equal_split_example() {
        let fam = equal_split(0.25, 3, 1e-12).unwrap();
        let want = [0.25, 1.0 / 6.0, 0.1, 1.0 / 18.0];
        for (a, b) in fam.e.iter().zip(want) {
            assert!(close(*a, b, 1e-15));
        }
        assert!(close(condenser_capacity(&fam.carrier, 3), 4.0 / 9.0, 1e-11));
        assert!(close(fam.bound_r(), 0.5, 1e-15));
        // every level-3 subtree carries capacity e_3
        for j in 0..8 {
            let sub = fam.carrier.restrict(VertexId::new(3, j).unwrap());
            assert!(close(capacity(&sub), 1.0 / 18.0, 1e-12));
        }
        let json = fam.to_json();
        assert_eq!(json["n"], 3);
        assert!(json["carrier"].is_array() || json["carrier"].is_null());
    }

    #[test]
    fn equal_split_without_split_is_a_prefix_set() {
        let fam = equal_split(0.2, 0, 1e-12).unwrap();
        assert_eq!(fam.carrier, set_of_capacity(0.2, 1e-12).unwrap());
        assert!(equal_split(0.5, 2, 1e-9).is_err());
    }

    #[test]
    fn equal_split_stays_under_the_ceiling() {
        for &eps in &[0.05, 0.25, 0.4] {
            for n in 0..=20 {
                let fam = equal_split(eps, n, 1e-10).unwrap();
                let value = condenser_capacity(&fam.carrier, n as u64);
                assert!(value <= bound_r(eps) + 1e-9);
                assert!(close(value, lower_bound(eps, n), 1e-8), "eps {eps} n {n}");
            }
        }
    }

    #[test]
    fn equal_split_exact_mode() {
        let fam = equal_split(0.25, 6, 1e-12).unwrap();
        let exact = condenser_capacity_exact(&fam.carrier, 6).to_f64().unwrap();
        assert!(close(exact, lower_bound(0.25, 6), 1e-9));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.5).unwrap(), 0.5);
        assert_eq!(psi(0.0).unwrap(), 0.0);
        assert!(close(psi_iterate(0.25, 3).unwrap(), 1.0 / 18.0, 1e-15));
        assert!(psi(0.7).is_err());
        assert!(psi_iterate(-0.1, 2).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(lower_bound(0.3, 0), 0.3);
        assert!(close(lower_bound(0.25, 3), 4.0 / 9.0, 1e-15));
        for &eps in &[0.05, 0.2, 0.45] {
            assert!(close(lower_bound(eps, 40), bound_r(eps), 1e-10));
        }
    }

    #[test]
    fn prefix_sets_blow_up() {
        // prefix(t) contains a full leaf at depth m; it alone contributes 2^{n-1-m}
        for s in ["1/2", "3/8", "5/16", "1/2^4"] {
            let t: Dyadic = s.parse().unwrap();
            let e = BoundarySet::prefix(&t, 64).unwrap();
            let m = t.ones()[0];
            let mut prev = condenser_capacity(&e, 0);
            for n in 1..=20u64 {
                let cur = condenser_capacity(&e, n);
                if n > m {
                    assert!(cur >= ((n - 1 - m) as f64).exp2());
                }
                if n > t.resolution() + 1 {
                    assert!(close(cur / prev, 2.0, 1e-12));
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn knee_of_the_deficit_form() {
        for &delta in &[1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0] {
            let knee = (1.0f64 / delta).log2() as u32;
            let step = |n: u32| lower_bound_delta(delta, n + 1) / lower_bound_delta(delta, n);
            assert!(step(knee - 4) > 1.75);
            assert!(step(knee + 3) < 1.25);
        }
    }

    #[test]
    fn doubling_then_plateau_shape() {
        for &delta in &[0.3, 0.1, 1.0 / 32.0, 1e-3, 1e-5] {
            for n in 0..=40u32 {
                let lb = lower_bound_delta(delta, n);
                let gap = (-(n as f64)).exp2();
                let doubling = (n as f64).exp2() * (0.5 - delta);
                let plateau = (0.5 - delta) / (2.0 * delta);
                // the factor reaches 3 - 2^{1-n} at the knee 2^-n = δ
                if gap >= delta {
                    assert!(lb <= doubling && doubling <= 3.0 * lb);
                }
                if gap >= 2.0 * delta {
                    assert!(doubling <= 2.0 * lb);
                }
                if gap <= delta {
                    assert!(lb <= 2.0 * plateau && plateau <= 2.0 * lb);
                }
            }
        }
    }

    #[test]
    fn calibration_hits_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &eps in &[0.1, 0.2, 0.3] {
            for _ in 0..20 {
                let base = random_set(&mut rng, 6, 0.5);
                let e = calibrate(&base, eps, 1e-9).unwrap();
                assert!(close(capacity(&e), eps, 1e-9));
            }
        }
    }

    proptest! {
        #[test]
        fn psi_iterate_is_composition(t in 0.0f64..=0.5, n in 0u32..=40) {
            let composed = (0..n).fold(t, |x, _| psi(x).unwrap());
            prop_assert!((psi_iterate(t, n).unwrap() - composed).abs() <= 1e-12);
        }

        #[test]
        fn bound_forms_agree(eps in 1e-6f64..0.499_999, n in 0u32..=60) {
            prop_assert!((lower_bound(eps, n) - lower_bound_delta(0.5 - eps, n)).abs() <= 1e-12 * lower_bound(eps, n).max(1.0));
            prop_assert!((lower_bound(eps, n) - (n as f64).exp2() * psi_iterate(eps, n).unwrap()).abs() <= 1e-12 * lower_bound(eps, n).max(1.0));
        }

        #[test]
        fn random_sets_respect_the_lower_bound(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_set(&mut rng, 8, 0.4);
            let eps = capacity(&e);
            prop_assume!(eps > 0.0 && eps < 0.5);
            for n in 0..=12u32 {
                let bound = (n as f64).exp2() * psi_iterate(eps, n).unwrap();
                prop_assert!(condenser_capacity(&e, n as u64) >= bound - 1e-9);
            }
        }

        #[test]
        fn set_of_capacity_meets_tolerance(x in 0.0f64..=0.5) {
            let e = set_of_capacity(x, 1e-10).unwrap();
            prop_assert!((capacity(&e) - x).abs() <= 1e-10);
        }
    }
}
