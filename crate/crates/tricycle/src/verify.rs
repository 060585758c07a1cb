//! Independent certificate checker.
//!
//! Takes nothing on faith from the constructor: given part sizes and a
//! cycle list, it re-derives every edge and tallies coverage over a dense
//! index, in time linear in the edge count. All problems are reported, not
//! thrown.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{Decomposition, Edge, Params, Part, Vertex};
use crate::trades::{expand_trade_to_cycles, trade_edges, Trade};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    BadLength { cycle: usize, len: usize },
    BadIndex { cycle: usize, vertex: Vertex },
    IntraPartEdge { cycle: usize, a: Vertex, b: Vertex },
    RepeatedVertex { cycle: usize, vertex: Vertex },
    MissingEdge { edge: Edge },
    DuplicateEdge { edge: Edge, count: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadLength { cycle, len } => {
                write!(f, "cycle {cycle}: length {len} not allowed")
            }
            Violation::BadIndex { cycle, vertex } => {
                write!(f, "cycle {cycle}: vertex {vertex} out of range")
            }
            Violation::IntraPartEdge { cycle, a, b } => {
                write!(f, "cycle {cycle}: step {a}-{b} stays inside one part")
            }
            Violation::RepeatedVertex { cycle, vertex } => {
                write!(f, "cycle {cycle}: vertex {vertex} repeated")
            }
            Violation::MissingEdge { edge } => write!(f, "edge {edge} never covered"),
            Violation::DuplicateEdge { edge, count } => {
                write!(f, "edge {edge} covered {count} times")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct VerifyOutcome {
    pub violations: Vec<Violation>,
}

impl VerifyOutcome {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self, limit: usize) -> String {
        if self.ok() {
            return "ok".to_string();
        }
        let mut out = format!("{} violations\n", self.violations.len());
        for v in self.violations.iter().take(limit) {
            out.push_str(&format!("  {v}\n"));
        }
        if self.violations.len() > limit {
            out.push_str(&format!("  ... and {} more\n", self.violations.len() - limit));
        }
        out
    }
}

/// Dense edge indexing over the three part pairs.
struct EdgeIndex {
    p: Params,
}

impl EdgeIndex {
    fn new(p: Params) -> EdgeIndex {
        EdgeIndex { p }
    }

    fn len(&self) -> usize {
        self.p.edge_count() as usize
    }

    fn index(&self, e: &Edge) -> usize {
        let (a, b) = e.endpoints();
        let (r, s, t) = (self.p.r as usize, self.p.s as usize, self.p.t as usize);
        let (ai, bi) = (a.index as usize - 1, b.index as usize - 1);
        match (a.part, b.part) {
            (Part::R, Part::S) => ai * s + bi,
            (Part::R, Part::T) => r * s + ai * t + bi,
            (Part::S, Part::T) => r * s + r * t + ai * t + bi,
            _ => unreachable!("edge endpoints are stored in part order"),
        }
    }

    fn edge_at(&self, idx: usize) -> Edge {
        let (r, s, t) = (self.p.r as usize, self.p.s as usize, self.p.t as usize);
        let (a, b) = if idx < r * s {
            (Vertex::r((idx / s) as u32 + 1), Vertex::s((idx % s) as u32 + 1))
        } else if idx < r * s + r * t {
            let k = idx - r * s;
            (Vertex::r((k / t) as u32 + 1), Vertex::t((k % t) as u32 + 1))
        } else {
            let k = idx - r * s - r * t;
            (Vertex::s((k / t) as u32 + 1), Vertex::t((k % t) as u32 + 1))
        };
        Edge::new(a, b).expect("cross-part by construction")
    }
}

/// Checks that the cycles partition the edge set of `K_{r,s,t}` exactly and
/// that every cycle is well-formed with a length in `allowed_lengths`.
pub fn verify(dec: &Decomposition, allowed_lengths: &BTreeSet<usize>) -> VerifyOutcome {
    let p = dec.params;
    let idx = EdgeIndex::new(p);
    let mut counts = vec![0u32; idx.len()];
    let mut out = VerifyOutcome::default();

    for (ci, cycle) in dec.cycles.iter().enumerate() {
        let vs = cycle.vertices();
        if !allowed_lengths.contains(&vs.len()) {
            out.violations.push(Violation::BadLength { cycle: ci, len: vs.len() });
        }
        let mut all_in_bounds = true;
        for &v in vs {
            if !v.in_bounds(&p) {
                out.violations.push(Violation::BadIndex { cycle: ci, vertex: v });
                all_in_bounds = false;
            }
        }
        for i in 0..vs.len() {
            for j in (i + 1)..vs.len() {
                if vs[i] == vs[j] {
                    out.violations.push(Violation::RepeatedVertex { cycle: ci, vertex: vs[i] });
                }
            }
        }
        for i in 0..vs.len() {
            let (a, b) = (vs[i], vs[(i + 1) % vs.len()]);
            if a.part == b.part {
                out.violations.push(Violation::IntraPartEdge { cycle: ci, a, b });
                continue;
            }
            if all_in_bounds {
                let e = Edge::new(a, b).expect("checked cross-part");
                counts[idx.index(&e)] += 1;
            }
        }
    }

    for (i, &c) in counts.iter().enumerate() {
        match c {
            1 => {}
            0 => out.violations.push(Violation::MissingEdge { edge: idx.edge_at(i) }),
            n => out
                .violations
                .push(Violation::DuplicateEdge { edge: idx.edge_at(i), count: n }),
        }
    }
    out
}

/// Recomputes both sides of a trade's exchange independently and compares
/// them as edge multisets: the cells' triangles-and-edges on one side, the
/// produced cycles' edges on the other.
pub fn verify_trade_exchange(tr: &Trade, p: &Params) -> VerifyOutcome {
    let mut out = VerifyOutcome::default();
    let left = match trade_edges(tr, p) {
        Ok(edges) => edges,
        Err(e) => {
            out.violations.push(Violation::BadLength { cycle: 0, len: 0 });
            let _ = e;
            return out;
        }
    };
    let cycles = match expand_trade_to_cycles(tr) {
        Ok(cycles) => cycles,
        Err(_) => {
            out.violations.push(Violation::BadLength { cycle: 0, len: 0 });
            return out;
        }
    };
    let mut right: Vec<Edge> = cycles.iter().flat_map(|c| c.edges().collect::<Vec<_>>()).collect();
    right.sort();

    // Multiset difference in both directions.
    let mut li = 0;
    let mut ri = 0;
    while li < left.len() || ri < right.len() {
        if ri >= right.len() || (li < left.len() && left[li] < right[ri]) {
            out.violations.push(Violation::MissingEdge { edge: left[li] });
            li += 1;
        } else if li >= left.len() || right[ri] < left[li] {
            out.violations
                .push(Violation::DuplicateEdge { edge: right[ri], count: 2 });
            ri += 1;
        } else {
            li += 1;
            ri += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{wrap1, Cycle};

    fn lengths(ls: &[usize]) -> BTreeSet<usize> {
        ls.iter().copied().collect()
    }

    /// The classical triangulation of an equal-parts instance from the
    /// cyclic square: cell (i, j) with entry i+j-1 is a triangle.
    fn latin_triangles(n: u32) -> Decomposition {
        let p = Params::new(n, n, n).unwrap();
        let mut cycles = Vec::new();
        for row in 1..=n {
            for col in 1..=n {
                let e = wrap1(row as i64 + col as i64 - 1, n);
                cycles.push(
                    Cycle::new(vec![Vertex::r(col), Vertex::s(row), Vertex::t(e)]).unwrap(),
                );
            }
        }
        Decomposition::new(p, cycles)
    }

    #[test]
    fn accepts_latin_triangulation() {
        let dec = latin_triangles(3);
        assert!(verify(&dec, &lengths(&[3])).ok());
    }

    #[test]
    fn duplicate_triangle_reports_both_sides() {
        let mut dec = latin_triangles(3);
        dec.cycles[0] = dec.cycles[1].clone();
        let out = verify(&dec, &lengths(&[3]));
        let dups = out
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::DuplicateEdge { .. }))
            .count();
        let missing = out
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::MissingEdge { .. }))
            .count();
        assert_eq!(dups, 3);
        assert_eq!(missing, 3);
    }

    #[test]
    fn intra_part_step_is_reported() {
        let p = Params::new(2, 2, 2).unwrap();
        let vs = vec![
            Vertex::r(1),
            Vertex::r(2),
            Vertex::s(1),
            Vertex::t(1),
            Vertex::s(2),
        ];
        // Bypass the checked constructor: the verifier must catch malformed
        // input on its own.
        let cycle = Cycle::new_unchecked(vs);
        let dec = Decomposition::new(p, vec![cycle]);
        let out = verify(&dec, &lengths(&[5]));
        assert!(out
            .violations
            .iter()
            .any(|v| matches!(v, Violation::IntraPartEdge { .. })));
    }

    #[test]
    fn bad_length_and_bad_index() {
        let p = Params::new(1, 1, 1).unwrap();
        let tri = Cycle::new(vec![Vertex::r(1), Vertex::s(1), Vertex::t(1)]).unwrap();
        let out = verify(&Decomposition::new(p, vec![tri.clone()]), &lengths(&[5]));
        assert!(out
            .violations
            .iter()
            .any(|v| matches!(v, Violation::BadLength { .. })));

        let bad = Cycle::new(vec![Vertex::r(1), Vertex::s(1), Vertex::t(2)]).unwrap();
        let out = verify(&Decomposition::new(p, vec![bad]), &lengths(&[3]));
        assert!(out
            .violations
            .iter()
            .any(|v| matches!(v, Violation::BadIndex { .. })));
    }

    #[test]
    fn construction_output_verifies() {
        let p = Params::new(25, 27, 33).unwrap();
        let c = crate::expansion::construct_decomposition(&p).unwrap();
        let out = verify(&c.decomposition, &lengths(&[3, 5]));
        assert!(out.ok(), "{}", out.summary(10));
        // And every trade's exchange is conservative.
        for tr in &c.trades {
            assert!(verify_trade_exchange(tr, &p).ok());
        }
    }

    #[test]
    fn single_cycle_mutations_are_rejected() {
        let p = Params::new(23, 25, 29).unwrap();
        let c = crate::expansion::construct_decomposition(&p).unwrap();
        let ls = lengths(&[3, 5]);
        assert!(verify(&c.decomposition, &ls).ok());
        let mut seed = 0xdecau64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) as usize
        };
        for _ in 0..40 {
            let mut dec = c.decomposition.clone();
            let n = dec.cycles.len();
            match next() % 3 {
                0 => {
                    let i = next() % n;
                    dec.cycles.remove(i);
                }
                1 => {
                    let i = next() % n;
                    let c = dec.cycles[i].clone();
                    dec.cycles.push(c);
                }
                _ => {
                    let i = next() % n;
                    let j = (next() % (n - 1) + 1 + i) % n;
                    let c = dec.cycles[j].clone();
                    dec.cycles[i] = c;
                }
            }
            assert!(!verify(&dec, &ls).ok());
        }
    }
}
