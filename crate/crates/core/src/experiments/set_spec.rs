//! Textual set descriptions.
//!
//! ```text
//! full | empty
//! prefix:<dyadic>        initial segment [0, t], e.g. prefix:3/2^3
//! shadow:<n>,<j>         the arc of vertex (n, j)
//! cap:<x>                a prefix set of capacity x
//! split:<eps>,<n>        equal-split carrier
//! cantor:<g>             outer quarters kept g times
//! file:<path>            leaf list, text or JSON
//! union(<e>, ...)  inter(<e>, ...)
//! ```

use crate::boundary_set::BoundarySet;
use crate::builder::{equal_split, set_of_capacity, BUILDER_MAX_RESOLUTION};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::tree::VertexId;

/// Tolerance used by `cap:` and `split:`.
pub const SPEC_TOL: f64 = 1e-12;

/// Keep the outer quarters of every arc, `g` times; trie depth `2g`.
pub fn cantor_set(g: u32) -> BoundarySet {
    let empty = BoundarySet::empty();
    (0..g).fold(BoundarySet::full(), |s, _| {
        BoundarySet::join(&BoundarySet::join(&s, &empty), &BoundarySet::join(&empty, &s))
    })
}

pub fn parse_set_spec(spec: &str) -> Result<BoundarySet> {
    let mut p = Parser { src: spec, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != spec.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn error(&self, what: &str) -> Error {
        Error::Parse(format!("set spec {:?}: {what} at offset {}", self.src, self.pos))
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {s:?}")))
        }
    }

    /// Raw text up to the next `,` or `)` or end.
    fn atom(&mut self) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find([',', ')']).unwrap_or(rest.len());
        self.pos += end;
        rest[..end].trim()
    }

    fn number<T: std::str::FromStr>(&mut self) -> Result<T> {
        let text = self.atom();
        text.parse()
            .map_err(|_| self.error(&format!("bad number {text:?}")))
    }

    fn list(&mut self, combine: fn(&BoundarySet, &BoundarySet) -> BoundarySet) -> Result<BoundarySet> {
        let mut acc = self.expr()?;
        while self.eat(",") {
            acc = combine(&acc, &self.expr()?);
        }
        self.expect(")")?;
        Ok(acc)
    }

    fn expr(&mut self) -> Result<BoundarySet> {
        if self.eat("union(") {
            return self.list(BoundarySet::union);
        }
        if self.eat("inter(") {
            return self.list(BoundarySet::intersection);
        }
        if self.eat("full") {
            return Ok(BoundarySet::full());
        }
        if self.eat("empty") {
            return Ok(BoundarySet::empty());
        }
        if self.eat("prefix:") {
            let t: Dyadic = self.atom().parse()?;
            return BoundarySet::prefix(&t, BUILDER_MAX_RESOLUTION);
        }
        if self.eat("shadow:") {
            let n = self.number()?;
            self.expect(",")?;
            let j = self.number()?;
            return Ok(BoundarySet::shadow(VertexId::new(n, j)?));
        }
        if self.eat("cap:") {
            return set_of_capacity(self.number()?, SPEC_TOL);
        }
        if self.eat("split:") {
            let eps = self.number()?;
            self.expect(",")?;
            let n = self.number()?;
            return Ok(equal_split(eps, n, SPEC_TOL)?.carrier);
        }
        if self.eat("cantor:") {
            return Ok(cantor_set(self.number()?));
        }
        if self.eat("file:") {
            let path = self.atom();
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{path}: {e}")))?;
            return BoundarySet::parse_any(&text);
        }
        Err(self.error("unknown set form"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::capacity;

    fn v(n: u32, j: u64) -> VertexId {
        VertexId::new(n, j).unwrap()
    }

    #[test]
    fn atoms() {
        assert!(parse_set_spec("full").unwrap().is_full());
        assert!(parse_set_spec(" empty ").unwrap().is_empty());
        assert_eq!(
            parse_set_spec("prefix:3/2^3").unwrap().full_leaves().unwrap(),
            vec![v(2, 0), v(3, 2)]
        );
        assert_eq!(parse_set_spec("shadow:4,11").unwrap(), BoundarySet::shadow(v(4, 11)));
        assert!((capacity(&parse_set_spec("cap:0.2").unwrap()) - 0.2).abs() < 1e-12);
        assert!((capacity(&parse_set_spec("split:0.25,3").unwrap()) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn combinators() {
        let e = parse_set_spec("union(shadow:2,0, shadow:3,2)").unwrap();
        assert_eq!(e, parse_set_spec("prefix:3/8").unwrap());
        let i = parse_set_spec("inter(prefix:1/2, shadow:2,1, full)").unwrap();
        assert_eq!(i, BoundarySet::shadow(v(2, 1)));
        let nested = parse_set_spec("union(inter(full, shadow:1,0), shadow:1,1)").unwrap();
        assert!(nested.is_full());
    }

    #[test]
    fn cantor_levels() {
        let c = cantor_set(3);
        assert_eq!(c.resolution(), 6);
        assert_eq!(c.full_leaf_count(), 8);
        assert_eq!(parse_set_spec("cantor:3").unwrap(), c);
        assert!(c.full_leaves().unwrap().contains(&v(6, 0)));
        assert!(c.full_leaves().unwrap().contains(&v(6, 63)));
    }

    #[test]
    fn files() {
        let dir = std::env::temp_dir().join(format!("set-spec-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("e.txt");
        std::fs::write(&path, "# two arcs\n2:0\n3:2\n").unwrap();
        let spec = format!("union(file:{}, shadow:1,1)", path.display());
        let e = parse_set_spec(&spec).unwrap();
        assert_eq!(e.full_leaves().unwrap(), vec![v(1, 1), v(2, 0), v(3, 2)]);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn errors() {
        for bad in ["", "half", "union(full", "shadow:2", "shadow:2,9", "prefix:1/3", "full full", "cap:0.7"] {
            assert!(parse_set_spec(bad).is_err(), "{bad:?}");
        }
    }
}
