//! Exhaustive cycle-cover search for tiny instances.
//!
//! Ground truth for base constants and negative cases: covers the
//! lexicographically smallest uncovered edge by every admissible cycle
//! through it and recurses. Nonexistence answers are exhaustive; there is
//! no sampling and no timeout inside the edge cap.

use std::collections::BTreeSet;

use crate::conditions::{check_necessary, FeasibilityReport};
use crate::model::{Cycle, Decomposition, Params, Part, Vertex};

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub allowed_lengths: BTreeSet<usize>,
    /// Instances with more edges than this are refused outright.
    pub edge_cap: u64,
    /// Canonical labeling of the first cycle; sound for existence and
    /// nonexistence, not for counting.
    pub symmetry_breaking: bool,
}

impl SearchConfig {
    pub fn new(lengths: &[usize]) -> SearchConfig {
        SearchConfig {
            allowed_lengths: lengths.iter().copied().collect(),
            edge_cap: 200,
            symmetry_breaking: true,
        }
    }
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig::new(&[3, 5])
    }
}

/// The instance exceeds the configured cap; distinct from "no decomposition
/// exists".
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("instance has {edges} edges, over the oracle cap {cap}")]
pub struct CapExceeded {
    pub edges: u64,
    pub cap: u64,
}

struct Search {
    p: Params,
    n: usize,
    parts: Vec<Part>,
    /// Adjacency: true while the edge is uncovered.
    open: Vec<bool>,
    lengths: Vec<usize>,
    chosen: Vec<Vec<usize>>,
    uncovered: usize,
    symmetry: bool,
}

impl Search {
    fn vertex_of(&self, id: usize) -> Vertex {
        let (r, s) = (self.p.r as usize, self.p.s as usize);
        if id < r {
            Vertex::r(id as u32 + 1)
        } else if id < r + s {
            Vertex::s((id - r) as u32 + 1)
        } else {
            Vertex::t((id - r - s) as u32 + 1)
        }
    }

    fn eidx(&self, a: usize, b: usize) -> usize {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        lo * self.n + hi
    }

    fn new(p: Params, cfg: &SearchConfig) -> Search {
        let n = (p.r + p.s + p.t) as usize;
        let mut parts = Vec::with_capacity(n);
        for _ in 0..p.r {
            parts.push(Part::R);
        }
        for _ in 0..p.s {
            parts.push(Part::S);
        }
        for _ in 0..p.t {
            parts.push(Part::T);
        }
        let mut open = vec![false; n * n];
        let mut uncovered = 0;
        for a in 0..n {
            for b in (a + 1)..n {
                if parts[a] != parts[b] {
                    open[a * n + b] = true;
                    uncovered += 1;
                }
            }
        }
        Search {
            p,
            n,
            parts,
            open,
            lengths: cfg.allowed_lengths.iter().copied().collect(),
            chosen: Vec::new(),
            uncovered,
            symmetry: cfg.symmetry_breaking,
        }
    }

    /// Leftover edge counts that no combination of allowed lengths can
    /// consume are pruned immediately.
    fn count_reachable(&self, m: usize) -> bool {
        if m == 0 {
            return true;
        }
        // Coin problem over the allowed lengths, small enough to just DP.
        let mut can = vec![false; m + 1];
        can[0] = true;
        for v in 1..=m {
            for &l in &self.lengths {
                if v >= l && can[v - l] {
                    can[v] = true;
                    break;
                }
            }
        }
        can[m]
    }

    fn degrees_even(&self) -> bool {
        for a in 0..self.n {
            let mut deg = 0;
            for b in 0..self.n {
                if a != b && self.open[self.eidx(a, b)] {
                    deg += 1;
                }
            }
            if deg % 2 == 1 {
                return false;
            }
        }
        true
    }

    /// Branching edge: most constrained first (minimum degree sum), ties
    /// broken lexicographically so runs stay deterministic.
    fn branch_edge(&self) -> Option<(usize, usize)> {
        let mut deg = vec![0u32; self.n];
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if self.open[a * self.n + b] {
                    deg[a] += 1;
                    deg[b] += 1;
                }
            }
        }
        let mut best: Option<(u32, usize, usize)> = None;
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if self.open[a * self.n + b] {
                    let score = deg[a] + deg[b];
                    if best.is_none_or(|(s, _, _)| score < s) {
                        best = Some((score, a, b));
                    }
                }
            }
        }
        best.map(|(_, a, b)| (a, b))
    }

    fn solve(&mut self) -> bool {
        let Some((a, b)) = self.branch_edge() else {
            return true;
        };
        if !self.count_reachable(self.uncovered) {
            return false;
        }
        // Enumerate cycles a -> b -> ... -> a over open edges. Fixing the
        // direction a->b enumerates each cycle through {a,b} exactly once.
        let max_len = *self.lengths.last().unwrap();
        let mut path = Vec::with_capacity(max_len);
        path.push(a);
        path.push(b);
        self.extend_path(&mut path)
    }

    fn extend_path(&mut self, path: &mut Vec<usize>) -> bool {
        let a = path[0];
        let last = *path.last().unwrap();
        if self.lengths.contains(&path.len()) && self.open[self.eidx(last, a)] {
            let cycle: Vec<usize> = path.clone();
            self.cover(&cycle, false);
            self.chosen.push(cycle.clone());
            if self.solve() {
                return true;
            }
            self.chosen.pop();
            self.cover(&cycle, true);
        }
        if path.len() >= *self.lengths.last().unwrap() {
            return false;
        }
        // First-cycle canonical labeling: a fresh vertex of a part must be
        // the smallest index of that part not already on the path.
        let first_cycle = self.symmetry && self.chosen.is_empty();
        for next in 0..self.n {
            if path.contains(&next) {
                continue;
            }
            if !self.open[self.eidx(last, next)] {
                continue;
            }
            if first_cycle && !self.canonical_extension(path, next) {
                continue;
            }
            path.push(next);
            if self.extend_path(path) {
                return true;
            }
            path.pop();
        }
        false
    }

    fn canonical_extension(&self, path: &[usize], next: usize) -> bool {
        let part = self.parts[next];
        let min_unused = (0..self.n)
            .find(|&v| self.parts[v] == part && !path.contains(&v))
            .expect("next itself qualifies");
        next == min_unused
    }

    fn cover(&mut self, cycle: &[usize], reopen: bool) {
        for i in 0..cycle.len() {
            let e = self.eidx(cycle[i], cycle[(i + 1) % cycle.len()]);
            debug_assert_ne!(self.open[e], reopen);
            self.open[e] = reopen;
        }
        if reopen {
            self.uncovered += cycle.len();
        } else {
            self.uncovered -= cycle.len();
        }
    }

    fn decomposition(&self) -> Decomposition {
        let cycles = self
            .chosen
            .iter()
            .map(|c| {
                Cycle::new(c.iter().map(|&id| self.vertex_of(id)).collect())
                    .expect("search emits well-formed cycles")
            })
            .collect();
        Decomposition::new(self.p, cycles)
    }
}

/// Finds a decomposition into cycles of the allowed lengths, or proves none
/// exists. `None` is an exhaustive verdict.
pub fn brute_force_decompose(
    p: &Params,
    cfg: &SearchConfig,
) -> Result<Option<Decomposition>, CapExceeded> {
    if p.edge_count() > cfg.edge_cap {
        return Err(CapExceeded { edges: p.edge_count(), cap: cfg.edge_cap });
    }
    let mut search = Search::new(*p, cfg);
    // A cycle decomposition needs every degree even and a representable
    // edge count; checking up front saves the whole tree.
    if !search.degrees_even() || !search.count_reachable(search.uncovered) {
        return Ok(None);
    }
    if search.solve() {
        Ok(Some(search.decomposition()))
    } else {
        Ok(None)
    }
}

/// Oracle existence vs. the necessary conditions, for pure 5-cycle targets.
#[derive(Clone, Debug)]
pub struct CrossValidation {
    pub params: Params,
    pub conditions: FeasibilityReport,
    pub exists: bool,
    /// False exactly when the oracle found a decomposition on an instance
    /// that fails a necessary condition — which would falsify the
    /// conditions — or when a conditions-satisfying tiny instance has none,
    /// which would be a counterexample to the sufficiency conjecture.
    pub consistent: bool,
}

pub fn cross_validate(p: &Params, cfg: &SearchConfig) -> Result<CrossValidation, CapExceeded> {
    let mut cfg5 = cfg.clone();
    cfg5.allowed_lengths = [5].into_iter().collect();
    let exists = brute_force_decompose(p, &cfg5)?.is_some();
    let conditions = check_necessary(p);
    let consistent = if exists {
        conditions.necessary_ok()
    } else {
        !conditions.necessary_ok()
    };
    Ok(CrossValidation { params: *p, conditions, exists, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::verify;

    fn p(r: u32, s: u32, t: u32) -> Params {
        Params::new(r, s, t).unwrap()
    }

    #[test]
    fn single_triangle() {
        let dec = brute_force_decompose(&p(1, 1, 1), &SearchConfig::new(&[3]))
            .unwrap()
            .unwrap();
        assert_eq!(dec.cycles.len(), 1);
        assert!(verify(&dec, &[3].into_iter().collect()).ok());
    }

    #[test]
    fn equal_two_parts_triangulate() {
        let dec = brute_force_decompose(&p(2, 2, 2), &SearchConfig::new(&[3]))
            .unwrap()
            .unwrap();
        assert_eq!(dec.cycles.len(), 4);
        assert!(verify(&dec, &[3].into_iter().collect()).ok());
    }

    #[test]
    fn no_pure_five_cycles_on_27_edges() {
        // 27 edges is not a multiple of 5.
        let none = brute_force_decompose(&p(3, 3, 3), &SearchConfig::new(&[5])).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn smallest_positive_pure_instance() {
        // 15 edges, three 5-cycles; all three conditions hold.
        let dec = brute_force_decompose(&p(1, 3, 3), &SearchConfig::new(&[5]))
            .unwrap()
            .unwrap();
        assert_eq!(dec.cycles.len(), 3);
        assert!(verify(&dec, &[5].into_iter().collect()).ok());
    }

    #[test]
    fn bound_violation_has_none() {
        let none = brute_force_decompose(&p(1, 1, 5), &SearchConfig::new(&[5])).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn cap_refusal_is_distinct() {
        let mut cfg = SearchConfig::new(&[5]);
        cfg.edge_cap = 10;
        let err = brute_force_decompose(&p(3, 3, 3), &cfg).unwrap_err();
        assert_eq!(err.edges, 27);
    }

    #[test]
    fn determinism() {
        let cfg = SearchConfig::new(&[5]);
        let a = brute_force_decompose(&p(1, 3, 3), &cfg).unwrap().unwrap();
        let b = brute_force_decompose(&p(1, 3, 3), &cfg).unwrap().unwrap();
        assert_eq!(a.cycles, b.cycles);
    }
}
