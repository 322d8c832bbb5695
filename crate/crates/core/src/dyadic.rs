//! Dyadic rationals in `[0, 1]`, stored sparsely by the positions of the
//! one-bits of their binary expansion.
//!
//! `t = Σ 2^-p` over the stored positions `p`. The value `1` is the single
//! position `0`. The sparse form keeps numbers such as `2^-70000 (1 + ...)`
//! cheap, which is what sets of very small capacity need.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Dyadic {
    ones: Vec<u64>,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { ones: Vec::new() }
    }

    pub fn one() -> Self {
        Dyadic { ones: vec![0] }
    }

    /// `p / 2^q` for `p <= 2^q`, `q <= 64`.
    pub fn from_ratio(p: u128, q: u32) -> Result<Self> {
        if q > 64 {
            return Err(Error::Parse(format!("denominator 2^{q} too large; use the `2^-a+2^-b` form")));
        }
        let denom = 1u128 << q;
        match p.cmp(&denom) {
            Ordering::Greater => Err(Error::Domain {
                value: p as f64 / denom as f64,
                domain: "[0, 1]",
            }),
            Ordering::Equal => Ok(Dyadic::one()),
            Ordering::Less => {
                let ones = (0..q)
                    .rev()
                    .filter(|&i| (p >> i) & 1 == 1)
                    .map(|i| (q - i) as u64)
                    .collect();
                Ok(Dyadic { ones })
            }
        }
    }

    /// Build from one-bit positions, which must be distinct and `>= 1`
    /// (or the single position `0` for the value one).
    pub fn from_positions(mut positions: Vec<u64>) -> Result<Self> {
        positions.sort_unstable();
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parse("repeated bit position".into()));
        }
        if positions.first() == Some(&0) && positions.len() > 1 {
            return Err(Error::Domain {
                value: 1.0 + (-(positions[1] as f64)).exp2(),
                domain: "[0, 1]",
            });
        }
        Ok(Dyadic { ones: positions })
    }

    pub fn is_zero(&self) -> bool {
        self.ones.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.ones == [0]
    }

    /// Positions of the one-bits, ascending.
    pub fn ones(&self) -> &[u64] {
        &self.ones
    }

    /// Exponent `q` of the lowest-terms denominator `2^q`.
    pub fn resolution(&self) -> u64 {
        self.ones.last().copied().unwrap_or(0)
    }

    /// `self + 2^-position`, valid when `position` exceeds the resolution.
    pub fn with_bit(&self, position: u64) -> Dyadic {
        assert!(
            position > self.resolution() && !self.is_one(),
            "bit {position} must lie below the current resolution {}",
            self.resolution()
        );
        let mut ones = self.ones.clone();
        ones.push(position);
        Dyadic { ones }
    }

    pub fn to_f64(&self) -> f64 {
        self.ones.iter().rev().map(|&p| (-(p as f64)).exp2()).sum()
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.ones.iter().zip(&other.ones) {
            if a != b {
                // the number holding the more significant bit is larger
                return b.cmp(a);
            }
        }
        self.ones.len().cmp(&other.ones.len())
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.is_one() {
            return write!(f, "1");
        }
        let q = self.resolution();
        if q <= 64 {
            let p: u128 = self.ones.iter().map(|&b| 1u128 << (q - b)).sum();
            return write!(f, "{p}/2^{q}");
        }
        let terms: Vec<String> = self.ones.iter().map(|b| format!("2^-{b}")).collect();
        write!(f, "{}", terms.join("+"))
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `0`, `1`, `p/2^q`, `p/d` with `d` a power of two, and sums of
    /// powers `2^-a+2^-b+...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "0" => return Ok(Dyadic::zero()),
            "1" => return Ok(Dyadic::one()),
            _ => {}
        }
        if s.starts_with("2^-") {
            let positions = s
                .split('+')
                .map(|term| {
                    term.trim()
                        .strip_prefix("2^-")
                        .and_then(|e| e.parse::<u64>().ok())
                        .filter(|&e| e >= 1)
                        .ok_or_else(|| Error::Parse(format!("bad power term {term:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Dyadic::from_positions(positions);
        }
        let (p, d) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("expected a dyadic fraction, got {s:?}")))?;
        let p = p
            .trim()
            .parse::<u128>()
            .map_err(|e| Error::Parse(format!("numerator {p:?}: {e}")))?;
        let d = d.trim();
        let q = if let Some(e) = d.strip_prefix("2^") {
            e.parse::<u32>()
                .map_err(|e| Error::Parse(format!("exponent {d:?}: {e}")))?
        } else {
            let d = d
                .parse::<u128>()
                .map_err(|e| Error::Parse(format!("denominator {d:?}: {e}")))?;
            if !d.is_power_of_two() {
                return Err(Error::Parse(format!("denominator {d} is not a power of two")));
            }
            d.trailing_zeros()
        };
        Dyadic::from_ratio(p, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ratio_is_reduced() {
        let t = Dyadic::from_ratio(6, 4).unwrap(); // 3/8
        assert_eq!(t.ones(), &[2, 3]);
        assert_eq!(t.resolution(), 3);
        assert_eq!(t.to_string(), "3/2^3");
        assert_eq!(Dyadic::from_ratio(8, 3).unwrap(), Dyadic::one());
        assert_eq!(Dyadic::from_ratio(0, 3).unwrap(), Dyadic::zero());
        assert!(Dyadic::from_ratio(9, 3).is_err());
    }

    #[test]
    fn parse_forms() {
        assert_eq!("1/2".parse::<Dyadic>().unwrap().ones(), &[1]);
        assert_eq!("3/2^3".parse::<Dyadic>().unwrap().ones(), &[2, 3]);
        assert_eq!("2^-3+2^-2".parse::<Dyadic>().unwrap().ones(), &[2, 3]);
        assert!("1/3".parse::<Dyadic>().is_err());
        let deep = "2^-100+2^-70".parse::<Dyadic>().unwrap();
        assert_eq!(deep.to_string(), "2^-70+2^-100");
    }

    #[test]
    fn ordering() {
        let a: Dyadic = "3/8".parse().unwrap();
        let b: Dyadic = "1/2".parse().unwrap();
        assert!(a < b);
        assert!(Dyadic::zero() < a);
        assert!(b < Dyadic::one());
        assert!(a < a.with_bit(10));
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip((p, q) in (0u32..=40).prop_flat_map(|q| (0u64..=(1u64 << q), Just(q)))) {
            let t = Dyadic::from_ratio(p as u128, q).unwrap();
            prop_assert_eq!(t.to_string().parse::<Dyadic>().unwrap(), t.clone());
            prop_assert_eq!(t.to_f64(), p as f64 / (1u64 << q) as f64);
        }

        #[test]
        fn order_matches_value(p in 0u64..4096, r in 0u64..4096) {
            let a = Dyadic::from_ratio(p as u128, 12).unwrap();
            let b = Dyadic::from_ratio(r as u128, 12).unwrap();
            prop_assert_eq!(a.cmp(&b), p.cmp(&r));
        }
    }
}
