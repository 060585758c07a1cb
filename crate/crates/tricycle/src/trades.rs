//! The trade catalogue: which cell patterns can be exchanged for 5-cycles,
//! and the exact exchange each produces.
//!
//! A trade owns a set of grid cells (part-A cells are triangles, the rest
//! single edges) together with an explicit role binding that names the
//! vertices appearing in the exchange. The binding makes the check
//! independent: the edges represented by the cells and the edges of the
//! produced cycles are computed by two separate routes and compared as
//! multisets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    cell_entry, region_of, CellRef, Cycle, Edge, Params, Region, Vertex,
};

/// The four trade shapes the construction uses.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum TradeKind {
    T1A,
    T1B,
    T1C,
    T1E,
}

impl TradeKind {
    pub fn label(self) -> &'static str {
        match self {
            TradeKind::T1A => "1A",
            TradeKind::T1B => "1B",
            TradeKind::T1C => "1C",
            TradeKind::T1E => "1E",
        }
    }

    pub fn from_label(s: &str) -> Option<TradeKind> {
        match s {
            "1A" => Some(TradeKind::T1A),
            "1B" => Some(TradeKind::T1B),
            "1C" => Some(TradeKind::T1C),
            "1E" => Some(TradeKind::T1E),
            _ => None,
        }
    }

    /// Number of part-A cells the completed trade consumes.
    pub fn a_cells(self) -> usize {
        match self {
            TradeKind::T1E => 3,
            _ => 2,
        }
    }

    /// Number of edge cells outside part A.
    pub fn outside_cells(self) -> usize {
        2 * self.a_cells()
    }
}

impl fmt::Display for TradeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Named slots in the exchange formulas. `IA`/`JA` share one part, `JB`/`KB`/`LB`
/// another, and `T1..T6` the third; which concrete graph part each group maps
/// to depends on the trade's orientation in the grid.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Role {
    Ia,
    Ja,
    Jb,
    Kb,
    Lb,
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Ia => "ia",
            Role::Ja => "ja",
            Role::Jb => "jb",
            Role::Kb => "kb",
            Role::Lb => "lb",
            Role::T1 => "t1",
            Role::T2 => "t2",
            Role::T3 => "t3",
            Role::T4 => "t4",
            Role::T5 => "t5",
            Role::T6 => "t6",
        }
    }

    pub fn from_label(s: &str) -> Option<Role> {
        Some(match s {
            "ia" => Role::Ia,
            "ja" => Role::Ja,
            "jb" => Role::Jb,
            "kb" => Role::Kb,
            "lb" => Role::Lb,
            "t1" => Role::T1,
            "t2" => Role::T2,
            "t3" => Role::T3,
            "t4" => Role::T4,
            "t5" => Role::T5,
            "t6" => Role::T6,
            _ => return None,
        })
    }

    pub fn for_kind(kind: TradeKind) -> &'static [Role] {
        use Role::*;
        match kind {
            TradeKind::T1A | TradeKind::T1B => &[Ia, Ja, Kb, Lb, T1, T2, T3],
            TradeKind::T1C => &[Ia, Ja, Kb, T1, T2, T3, T4],
            TradeKind::T1E => &[Ia, Jb, Kb, Lb, T1, T2, T3, T4, T5, T6],
        }
    }
}

/// A completed trade: kind, cells, and the role binding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trade {
    pub kind: TradeKind,
    pub cells: Vec<CellRef>,
    pub roles: Vec<(Role, Vertex)>,
}

impl Trade {
    pub fn new(kind: TradeKind, cells: Vec<CellRef>, mut roles: Vec<(Role, Vertex)>) -> Trade {
        roles.sort_by_key(|(r, _)| *r);
        Trade { kind, cells, roles }
    }

    pub fn role(&self, role: Role) -> Result<Vertex> {
        self.roles
            .iter()
            .find(|(r, _)| *r == role)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::MalformedTrade(format!("missing role {role:?}")))
    }
}

/// A trade still missing its part-A cells; carries only the edge cells
/// placed by the covering phase plus enough origin data to complete it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartialTrade {
    pub kind: TradeKind,
    pub cells: Vec<CellRef>,
    pub origin: PartialOrigin,
}

/// Where a partial trade came from; drives which completion rule applies.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PartialOrigin {
    /// Odd-entry pair in B1 plus the matching pair two columns from the end
    /// of the grid; rows `(entry+1, entry+2)`.
    B1Odd { entry: u32 },
    /// Even-entry pair in B1 plus last- or second-to-last-column cells;
    /// rows `(entry-r, entry+1)` mod s.
    B1Even { entry: u32, edge_col: u32 },
    /// Entry-`s` pair in B1 plus fourth-from-last-column cells; rows
    /// `(2k-1, 2k)`.
    B1SCell { pair: u32 },
    /// Interior pair with entries `(entry, entry+1)`; rows
    /// `(entry+2j-1, entry+2j)` mod s.
    B2 { entry: u32, top_row: u32 },
    /// Parity-fix partials joining one C2 row to first-column D2 cells.
    ParityFix1B { which: u8 },
    /// Parity-fix partial joining three C2 rows (three-triangle shape).
    ParityFix1E,
    /// Leftover C2 rows paired within a column class.
    C2 { rows: (u32, u32), cols: (u32, u32) },
    /// D2 column pairs over one of the two bottom row pairs.
    D2 { rows: (u32, u32), cols: (u32, u32) },
}

/// The edges represented by a trade's cells: triangles for part-A cells,
/// single S-T or R-T edges for the rest. Returned as a sorted multiset.
pub fn trade_edges(tr: &Trade, p: &Params) -> Result<Vec<Edge>> {
    let mut edges = Vec::with_capacity(tr.cells.len() * 2);
    for &cell in &tr.cells {
        edges.extend(cell_edges(cell, p)?);
    }
    edges.sort();
    Ok(edges)
}

/// Edges represented by a single cell.
pub fn cell_edges(cell: CellRef, p: &Params) -> Result<Vec<Edge>> {
    let region = region_of(cell, p)?;
    let entry = cell_entry(cell, p);
    Ok(match region {
        Region::A => {
            let r = Vertex::r(cell.col);
            let s = Vertex::s(cell.row);
            let t = Vertex::t(entry);
            vec![Edge::new(r, s)?, Edge::new(r, t)?, Edge::new(s, t)?]
        }
        Region::B1 | Region::B2 | Region::C1 | Region::C2 => {
            vec![Edge::new(Vertex::s(cell.row), Vertex::t(entry))?]
        }
        Region::D1 | Region::D2 => {
            vec![Edge::new(Vertex::r(cell.col), Vertex::t(entry))?]
        }
    })
}

/// The exchange's right-hand side: the 5-cycles a trade turns into, with
/// roles substituted.
pub fn expand_trade_to_cycles(tr: &Trade) -> Result<Vec<Cycle>> {
    use Role::*;
    let v = |role| tr.role(role);
    let cycles: Vec<Vec<Vertex>> = match tr.kind {
        TradeKind::T1A => vec![
            vec![v(Ia)?, v(Lb)?, v(T1)?, v(Ja)?, v(T2)?],
            vec![v(Ia)?, v(T1)?, v(Kb)?, v(Ja)?, v(T3)?],
        ],
        TradeKind::T1B => vec![
            vec![v(Ia)?, v(Lb)?, v(T1)?, v(Kb)?, v(T2)?],
            vec![v(Ia)?, v(T1)?, v(Ja)?, v(Kb)?, v(T3)?],
        ],
        TradeKind::T1C => vec![
            vec![v(Ia)?, v(Kb)?, v(T2)?, v(Ja)?, v(T3)?],
            vec![v(Ia)?, v(T1)?, v(Kb)?, v(Ja)?, v(T4)?],
        ],
        TradeKind::T1E => vec![
            vec![v(Ia)?, v(T1)?, v(Jb)?, v(T4)?, v(Lb)?],
            vec![v(Ia)?, v(T2)?, v(Kb)?, v(T5)?, v(Jb)?],
            vec![v(Ia)?, v(T3)?, v(Lb)?, v(T6)?, v(Kb)?],
        ],
    };
    cycles.into_iter().map(Cycle::new).collect()
}

/// Structural check of a bound trade against its kind's cell diagram.
///
/// Each kind admits two orientations: the row form, where the `a`-slots are
/// grid rows and the edge cells are S-T cells, and the column form, where
/// the `a`-slots are columns and the edge cells sit in the bottom block.
pub fn validate_trade_pattern(tr: &Trade, p: &Params) -> bool {
    validate_pattern_inner(tr, p).is_some()
}

fn validate_pattern_inner(tr: &Trade, p: &Params) -> Option<()> {
    let mut a_cells = Vec::new();
    let mut st_cells = Vec::new(); // B or C regions: S-T edge cells
    let mut rt_cells = Vec::new(); // D region: R-T edge cells
    for &cell in &tr.cells {
        match region_of(cell, p).ok()? {
            Region::A => a_cells.push(cell),
            Region::B1 | Region::B2 | Region::C1 | Region::C2 => st_cells.push(cell),
            Region::D1 | Region::D2 => rt_cells.push(cell),
        }
    }
    if a_cells.len() != tr.kind.a_cells()
        || st_cells.len() + rt_cells.len() != tr.kind.outside_cells()
    {
        return None;
    }
    let entry = |c: CellRef| cell_entry(c, p);

    // The T vertex carried by an edge cell.
    let edge_t = entry;

    match tr.kind {
        TradeKind::T1A => {
            let [a1, a2] = [a_cells[0], a_cells[1]];
            if entry(a1) != entry(a2) {
                return None;
            }
            if st_cells.len() == 4 {
                // Row form: edge cells occupy the two A rows, two per row,
                // with the same entry pair in both rows.
                pairs_over_rows(&st_cells, a1.row, a2.row, edge_t, entry(a1))
            } else if rt_cells.len() == 4 {
                // Column form: edge cells occupy the two A columns.
                pairs_over_cols(&rt_cells, a1.col, a2.col, edge_t, entry(a1))
            } else {
                None
            }
        }
        TradeKind::T1B => {
            // A cells in consecutive rows and columns on one diagonal; two
            // S-T cells in the top row, two R-T cells under the bottom
            // column, with matching T pairs.
            let (top, bottom) = if tr.cells.is_empty() {
                return None;
            } else {
                let [a1, a2] = [a_cells[0], a_cells[1]];
                if entry(a1) != entry(a2) {
                    return None;
                }
                if crate::model::wrap1(a1.row as i64 + 1, p.s) == a2.row && a2.col + 1 == a1.col {
                    (a1, a2)
                } else if crate::model::wrap1(a2.row as i64 + 1, p.s) == a1.row
                    && a1.col + 1 == a2.col
                {
                    (a2, a1)
                } else {
                    return None;
                }
            };
            if st_cells.len() != 2 || rt_cells.len() != 2 {
                return None;
            }
            if st_cells.iter().any(|c| c.row != top.row) {
                return None;
            }
            if rt_cells.iter().any(|c| c.col != bottom.col) {
                return None;
            }
            let mut st_ts: Vec<u32> = st_cells.iter().map(|&c| edge_t(c)).collect();
            let mut rt_ts: Vec<u32> = rt_cells.iter().map(|&c| edge_t(c)).collect();
            st_ts.sort();
            rt_ts.sort();
            if st_ts != rt_ts || st_ts[0] == st_ts[1] || st_ts.contains(&entry(top)) {
                return None;
            }
            Some(())
        }
        TradeKind::T1C => {
            let [a1, a2] = [a_cells[0], a_cells[1]];
            if entry(a1) == entry(a2) {
                return None;
            }
            if st_cells.len() == 4 {
                // Row form: A cells share a column, edge cells sit in the
                // two A rows.
                if a1.col != a2.col || a1.row == a2.row {
                    return None;
                }
                pairs_over_rows_1c(&st_cells, a1, a2, edge_t, entry)
            } else if rt_cells.len() == 4 {
                // Column form: A cells share a row, edge cells sit in the
                // two A columns.
                if a1.row != a2.row || a1.col == a2.col {
                    return None;
                }
                pairs_over_cols_1c(&rt_cells, a1, a2, edge_t, entry)
            } else {
                None
            }
        }
        TradeKind::T1E => {
            let [a1, a2, a3] = [a_cells[0], a_cells[1], a_cells[2]];
            if st_cells.len() == 6 {
                // Column form: three A cells in one column, edge cells in
                // the three A rows forming a six-cycle over three T values.
                if a1.col != a2.col || a2.col != a3.col {
                    return None;
                }
                six_cycle_over(&st_cells, [a1.row, a2.row, a3.row], |c| c.row, edge_t)?;
                let entries = [entry(a1), entry(a2), entry(a3)];
                let ts: Vec<u32> = st_cells.iter().map(|&c| edge_t(c)).collect();
                if entries.iter().any(|e| ts.contains(e)) {
                    return None;
                }
                Some(())
            } else if rt_cells.len() == 6 {
                // Row form: three A cells in one row, edge cells under the
                // three A columns.
                if a1.row != a2.row || a2.row != a3.row {
                    return None;
                }
                six_cycle_over(&rt_cells, [a1.col, a2.col, a3.col], |c| c.col, edge_t)?;
                let entries = [entry(a1), entry(a2), entry(a3)];
                let ts: Vec<u32> = rt_cells.iter().map(|&c| edge_t(c)).collect();
                if entries.iter().any(|e| ts.contains(e)) {
                    return None;
                }
                Some(())
            } else {
                None
            }
        }
    }
}

fn pairs_over_rows(
    cells: &[CellRef],
    row1: u32,
    row2: u32,
    edge_t: impl Fn(CellRef) -> u32,
    a_entry: u32,
) -> Option<()> {
    if row1 == row2 {
        return None;
    }
    let mut ts1 = Vec::new();
    let mut ts2 = Vec::new();
    for &c in cells {
        if c.row == row1 {
            ts1.push(edge_t(c));
        } else if c.row == row2 {
            ts2.push(edge_t(c));
        } else {
            return None;
        }
    }
    ts1.sort();
    ts2.sort();
    if ts1.len() != 2 || ts1 != ts2 || ts1[0] == ts1[1] || ts1.contains(&a_entry) {
        return None;
    }
    Some(())
}

fn pairs_over_cols(
    cells: &[CellRef],
    col1: u32,
    col2: u32,
    edge_t: impl Fn(CellRef) -> u32,
    a_entry: u32,
) -> Option<()> {
    if col1 == col2 {
        return None;
    }
    let mut ts1 = Vec::new();
    let mut ts2 = Vec::new();
    for &c in cells {
        if c.col == col1 {
            ts1.push(edge_t(c));
        } else if c.col == col2 {
            ts2.push(edge_t(c));
        } else {
            return None;
        }
    }
    ts1.sort();
    ts2.sort();
    if ts1.len() != 2 || ts1 != ts2 || ts1[0] == ts1[1] || ts1.contains(&a_entry) {
        return None;
    }
    Some(())
}

fn pairs_over_rows_1c(
    cells: &[CellRef],
    a1: CellRef,
    a2: CellRef,
    edge_t: impl Fn(CellRef) -> u32,
    entry: impl Fn(CellRef) -> u32,
) -> Option<()> {
    let mut ts1 = Vec::new();
    let mut ts2 = Vec::new();
    for &c in cells {
        if c.row == a1.row {
            ts1.push(edge_t(c));
        } else if c.row == a2.row {
            ts2.push(edge_t(c));
        } else {
            return None;
        }
    }
    ts1.sort();
    ts2.sort();
    if ts1.len() != 2 || ts1 != ts2 || ts1[0] == ts1[1] {
        return None;
    }
    if ts1.contains(&entry(a1)) || ts1.contains(&entry(a2)) {
        return None;
    }
    Some(())
}

fn pairs_over_cols_1c(
    cells: &[CellRef],
    a1: CellRef,
    a2: CellRef,
    edge_t: impl Fn(CellRef) -> u32,
    entry: impl Fn(CellRef) -> u32,
) -> Option<()> {
    let mut ts1 = Vec::new();
    let mut ts2 = Vec::new();
    for &c in cells {
        if c.col == a1.col {
            ts1.push(edge_t(c));
        } else if c.col == a2.col {
            ts2.push(edge_t(c));
        } else {
            return None;
        }
    }
    ts1.sort();
    ts2.sort();
    if ts1.len() != 2 || ts1 != ts2 || ts1[0] == ts1[1] {
        return None;
    }
    if ts1.contains(&entry(a1)) || ts1.contains(&entry(a2)) {
        return None;
    }
    Some(())
}

/// Checks that six edge cells, grouped by `line` into the three given lines
/// (two cells per line), carry T values forming a single 6-cycle across the
/// lines.
fn six_cycle_over(
    cells: &[CellRef],
    lines: [u32; 3],
    line: impl Fn(&CellRef) -> u32,
    edge_t: impl Fn(CellRef) -> u32,
) -> Option<()> {
    let mut per_line: [Vec<u32>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for c in cells {
        let idx = lines.iter().position(|&l| l == line(c))?;
        per_line[idx].push(edge_t(*c));
    }
    if per_line.iter().any(|v| v.len() != 2) {
        return None;
    }
    // Each T value must appear on exactly two lines, and no line may repeat
    // a value; that makes the bipartite (line, value) incidence a 6-cycle.
    let mut all: Vec<u32> = per_line.iter().flatten().copied().collect();
    all.sort();
    let distinct: std::collections::BTreeSet<u32> = all.iter().copied().collect();
    if distinct.len() != 3 {
        return None;
    }
    for v in &distinct {
        if all.iter().filter(|&&x| x == *v).count() != 2 {
            return None;
        }
    }
    for l in &per_line {
        if l[0] == l[1] {
            return None;
        }
    }
    // Three lines, three values, each value on two lines, no line repeats:
    // the incidence graph is 2-regular bipartite on 3+3 vertices, and it is
    // a 6-cycle exactly when no two lines have the same value pair.
    let mut sets: Vec<(u32, u32)> = per_line
        .iter()
        .map(|l| {
            let mut p = [l[0], l[1]];
            p.sort();
            (p[0], p[1])
        })
        .collect();
    sets.sort();
    sets.dedup();
    if sets.len() != 3 {
        return None;
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p61216() -> Params {
        Params::new(6, 12, 16).unwrap()
    }

    fn roles_1a_generic() -> Vec<(Role, Vertex)> {
        vec![
            (Role::Ia, Vertex::s(1)),
            (Role::Ja, Vertex::s(2)),
            (Role::Kb, Vertex::r(1)),
            (Role::Lb, Vertex::r(2)),
            (Role::T1, Vertex::t(2)),
            (Role::T2, Vertex::t(13)),
            (Role::T3, Vertex::t(14)),
        ]
    }

    /// The 1A trade drawn in the reference grid: entry-2 cells at (1,2) and
    /// (2,1), plus the four cells in columns 13-14 of rows 1-2.
    fn reference_1a_trade() -> Trade {
        Trade::new(
            TradeKind::T1A,
            vec![
                CellRef::new(1, 2),
                CellRef::new(2, 1),
                CellRef::new(1, 13),
                CellRef::new(1, 14),
                CellRef::new(2, 13),
                CellRef::new(2, 14),
            ],
            roles_1a_generic(),
        )
    }

    #[test]
    fn expansion_formulas() {
        let tr = reference_1a_trade();
        let cycles = expand_trade_to_cycles(&tr).unwrap();
        assert_eq!(cycles.len(), 2);
        assert_eq!(
            cycles[0].vertices(),
            &[
                Vertex::s(1),
                Vertex::r(2),
                Vertex::t(2),
                Vertex::s(2),
                Vertex::t(13)
            ]
        );
        assert_eq!(
            cycles[1].vertices(),
            &[
                Vertex::s(1),
                Vertex::t(2),
                Vertex::r(1),
                Vertex::s(2),
                Vertex::t(14)
            ]
        );
    }

    #[test]
    fn cell_edges_by_region() {
        let p = p61216();
        // Core cell: a full triangle.
        let a = cell_edges(CellRef::new(1, 1), &p).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.contains(&Edge::new(Vertex::r(1), Vertex::s(1)).unwrap()));
        assert!(a.contains(&Edge::new(Vertex::r(1), Vertex::t(1)).unwrap()));
        assert!(a.contains(&Edge::new(Vertex::s(1), Vertex::t(1)).unwrap()));
        // Row extension: a single middle-to-largest edge.
        let c = cell_edges(CellRef::new(1, 13), &p).unwrap();
        assert_eq!(c, vec![Edge::new(Vertex::s(1), Vertex::t(13)).unwrap()]);
        // Column extension: a single smallest-to-largest edge.
        let d = cell_edges(CellRef::new(13, 1), &p).unwrap();
        assert_eq!(d, vec![Edge::new(Vertex::r(1), Vertex::t(13)).unwrap()]);
    }

    #[test]
    fn one_b_expansion_order() {
        let roles = vec![
            (Role::Ia, Vertex::s(1)),
            (Role::Ja, Vertex::s(2)),
            (Role::Kb, Vertex::r(1)),
            (Role::Lb, Vertex::r(2)),
            (Role::T1, Vertex::t(2)),
            (Role::T2, Vertex::t(13)),
            (Role::T3, Vertex::t(14)),
        ];
        let tr = Trade::new(TradeKind::T1B, vec![], roles);
        let cycles = expand_trade_to_cycles(&tr).unwrap();
        assert_eq!(
            cycles[0].vertices(),
            &[Vertex::s(1), Vertex::r(2), Vertex::t(2), Vertex::r(1), Vertex::t(13)]
        );
        assert_eq!(
            cycles[1].vertices(),
            &[Vertex::s(1), Vertex::t(2), Vertex::s(2), Vertex::r(1), Vertex::t(14)]
        );
    }

    #[test]
    fn reference_1a_exchange_is_conservative() {
        let p = p61216();
        let tr = reference_1a_trade();
        let left = trade_edges(&tr, &p).unwrap();
        let mut right: Vec<Edge> = expand_trade_to_cycles(&tr)
            .unwrap()
            .iter()
            .flat_map(|c| c.edges().collect::<Vec<_>>())
            .collect();
        right.sort();
        assert_eq!(left, right);
    }

    #[test]
    fn reference_1a_pattern_validates_as_1a_not_1b() {
        let p = p61216();
        let tr = reference_1a_trade();
        assert!(validate_trade_pattern(&tr, &p));
        let mut as_1b = tr.clone();
        as_1b.kind = TradeKind::T1B;
        assert!(!validate_trade_pattern(&as_1b, &p));
    }

    /// The 1E trade drawn in the reference grid: row 7 entries 8, 9, 10 and
    /// the six bottom-block cells in columns 2-4 of rows 13-15.
    #[test]
    fn reference_1e_pattern_validates() {
        let p = p61216();
        let tr = Trade::new(
            TradeKind::T1E,
            vec![
                CellRef::new(7, 2),
                CellRef::new(7, 3),
                CellRef::new(7, 4),
                CellRef::new(13, 2),
                CellRef::new(14, 2),
                CellRef::new(14, 3),
                CellRef::new(15, 3),
                CellRef::new(15, 4),
                CellRef::new(13, 4),
            ],
            vec![],
        );
        assert!(validate_trade_pattern(&tr, &p));
    }

    #[test]
    fn one_e_expansion_matches_formula() {
        // Column-form 1E on a synthetic binding; conservation checked.
        let roles = vec![
            (Role::Ia, Vertex::r(2)),
            (Role::Jb, Vertex::s(1)),
            (Role::Kb, Vertex::s(3)),
            (Role::Lb, Vertex::s(2)),
            (Role::T1, Vertex::t(2)),
            (Role::T2, Vertex::t(4)),
            (Role::T3, Vertex::t(3)),
            (Role::T4, Vertex::t(14)),
            (Role::T5, Vertex::t(16)),
            (Role::T6, Vertex::t(17)),
        ];
        let tr = Trade::new(TradeKind::T1E, vec![], roles);
        let cycles = expand_trade_to_cycles(&tr).unwrap();
        assert_eq!(cycles.len(), 3);
        assert_eq!(
            cycles[0].vertices(),
            &[
                Vertex::r(2),
                Vertex::t(2),
                Vertex::s(1),
                Vertex::t(14),
                Vertex::s(2)
            ]
        );
    }

    /// Random role bindings per kind must conserve the edge multiset. This
    /// is the content of each exchange row of the catalogue.
    #[test]
    fn exchange_conservation_randomized() {
        let p = Params::new(20, 29, 41).unwrap();
        let mut seed = 0x7261646573u64;
        for kind in [TradeKind::T1A, TradeKind::T1B, TradeKind::T1C, TradeKind::T1E] {
            for _ in 0..200 {
                let tr = test_support::random_role_trade(kind, &p, &mut seed);
                let left = trade_edges(&tr, &p).unwrap();
                let mut right: Vec<Edge> = expand_trade_to_cycles(&tr)
                    .unwrap()
                    .iter()
                    .flat_map(|c| c.edges().collect::<Vec<_>>())
                    .collect();
                right.sort();
                assert_eq!(left, right, "{kind} binding failed");
                assert!(validate_trade_pattern(&tr, &p), "{kind} pattern failed");
            }
        }
    }

    #[test]
    fn corrupted_binding_is_caught() {
        // Swapping one T role asymmetrically must break conservation.
        let p = Params::new(20, 29, 41).unwrap();
        let mut seed = 99;
        let mut tr = test_support::random_role_trade(TradeKind::T1B, &p, &mut seed);
        for rv in tr.roles.iter_mut() {
            if rv.0 == Role::T2 {
                rv.1 = Vertex::t(p.t - 5);
            }
        }
        let left = trade_edges(&tr, &p).unwrap();
        let mut right: Vec<Edge> = expand_trade_to_cycles(&tr)
            .unwrap()
            .iter()
            .flat_map(|c| c.edges().collect::<Vec<_>>())
            .collect();
        right.sort();
        assert_ne!(left, right);
    }
}

/// Deterministic pseudo-random trade bindings for exchange checks.
///
/// The cells are synthesized to realize the binding, so the cell route and
/// the cycle route stay independent. Kept out of `cfg(test)` so integration
/// suites can drive it too.
pub mod test_support {
    use super::*;
    use crate::model::wrap1;

    fn next(seed: &mut u64) -> u64 {
        // splitmix64
        *seed = seed.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *seed;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn pick(seed: &mut u64, lo: u32, hi: u32) -> u32 {
        lo + (next(seed) % (hi - lo + 1) as u64) as u32
    }

    fn pick_distinct(seed: &mut u64, n: usize, lo: u32, hi: u32) -> Vec<u32> {
        let mut out = Vec::new();
        while out.len() < n {
            let v = pick(seed, lo, hi);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Builds a trade whose cells realize a pseudo-random role binding for
    /// `kind`. Requires `t >= s + 3` so extension cells exist.
    pub fn random_role_trade(kind: TradeKind, p: &Params, seed: &mut u64) -> Trade {
        assert!(p.t >= p.s + 3 && p.r >= 4);
        match kind {
            TradeKind::T1A => random_1a(p, seed),
            TradeKind::T1B => random_1b(p, seed),
            TradeKind::T1C => random_1c(p, seed),
            TradeKind::T1E => random_1e(p, seed),
        }
    }

    fn diag_cell(row: u32, entry: u32, p: &Params) -> CellRef {
        CellRef::new(row, wrap1(entry as i64 - row as i64 + 1, p.s))
    }

    fn random_1a(p: &Params, seed: &mut u64) -> Trade {
        loop {
            let rows = pick_distinct(seed, 2, 1, p.s);
            let v = pick(seed, 1, p.s);
            let a1 = diag_cell(rows[0], v, p);
            let a2 = diag_cell(rows[1], v, p);
            if a1.col > p.r || a2.col > p.r {
                continue;
            }
            let ecols = pick_distinct(seed, 2, p.s + 1, p.t);
            let cells = vec![
                a1,
                a2,
                CellRef::new(rows[0], ecols[0]),
                CellRef::new(rows[0], ecols[1]),
                CellRef::new(rows[1], ecols[0]),
                CellRef::new(rows[1], ecols[1]),
            ];
            let roles = vec![
                (Role::Ia, Vertex::s(rows[0])),
                (Role::Ja, Vertex::s(rows[1])),
                (Role::Lb, Vertex::r(a1.col)),
                (Role::Kb, Vertex::r(a2.col)),
                (Role::T1, Vertex::t(v)),
                (Role::T2, Vertex::t(ecols[0])),
                (Role::T3, Vertex::t(ecols[1])),
            ];
            return Trade::new(TradeKind::T1A, cells, roles);
        }
    }

    fn random_1b(p: &Params, seed: &mut u64) -> Trade {
        let top = pick(seed, 1, p.s);
        let bottom = wrap1(top as i64 + 1, p.s);
        // Column in 3..=r so the bottom cell stays inside part A.
        let col = pick(seed, 3, p.r);
        let v = cell_entry(CellRef::new(top, col), p);
        let a1 = CellRef::new(top, col);
        let a2 = CellRef::new(bottom, col - 1);
        let es = pick_distinct(seed, 2, p.s + 1, p.t);
        let cells = vec![
            a1,
            a2,
            CellRef::new(top, es[0]),
            CellRef::new(top, es[1]),
            CellRef::new(es[0], a2.col),
            CellRef::new(es[1], a2.col),
        ];
        let roles = vec![
            (Role::Ia, Vertex::s(top)),
            (Role::Ja, Vertex::s(bottom)),
            (Role::Lb, Vertex::r(a1.col)),
            (Role::Kb, Vertex::r(a2.col)),
            (Role::T1, Vertex::t(v)),
            (Role::T2, Vertex::t(es[0])),
            (Role::T3, Vertex::t(es[1])),
        ];
        Trade::new(TradeKind::T1B, cells, roles)
    }

    fn random_1c(p: &Params, seed: &mut u64) -> Trade {
        let col = pick(seed, 1, p.r);
        let rows = pick_distinct(seed, 2, 1, p.s);
        let a1 = CellRef::new(rows[0], col);
        let a2 = CellRef::new(rows[1], col);
        let es = pick_distinct(seed, 2, p.s + 1, p.t);
        let cells = vec![
            a1,
            a2,
            CellRef::new(rows[0], es[0]),
            CellRef::new(rows[0], es[1]),
            CellRef::new(rows[1], es[0]),
            CellRef::new(rows[1], es[1]),
        ];
        let roles = vec![
            (Role::Ia, Vertex::s(rows[0])),
            (Role::Ja, Vertex::s(rows[1])),
            (Role::Kb, Vertex::r(col)),
            (Role::T1, Vertex::t(cell_entry(a1, p))),
            (Role::T2, Vertex::t(cell_entry(a2, p))),
            (Role::T3, Vertex::t(es[0])),
            (Role::T4, Vertex::t(es[1])),
        ];
        Trade::new(TradeKind::T1C, cells, roles)
    }

    fn random_1e(p: &Params, seed: &mut u64) -> Trade {
        let col = pick(seed, 1, p.r);
        let rows = pick_distinct(seed, 3, 1, p.s);
        let a: Vec<CellRef> = rows.iter().map(|&u| CellRef::new(u, col)).collect();
        let es = pick_distinct(seed, 3, p.s + 1, p.t);
        let (x, y, z) = (es[0], es[1], es[2]);
        // Six-cycle over three T values: row0 {x, y}, row1 {x, z}, row2 {y, z}.
        let cells = vec![
            a[0],
            a[1],
            a[2],
            CellRef::new(rows[0], x),
            CellRef::new(rows[0], y),
            CellRef::new(rows[1], x),
            CellRef::new(rows[1], z),
            CellRef::new(rows[2], y),
            CellRef::new(rows[2], z),
        ];
        let roles = vec![
            (Role::Ia, Vertex::r(col)),
            (Role::Jb, Vertex::s(rows[0])),
            (Role::Lb, Vertex::s(rows[1])),
            (Role::Kb, Vertex::s(rows[2])),
            (Role::T1, Vertex::t(cell_entry(a[0], p))),
            (Role::T3, Vertex::t(cell_entry(a[1], p))),
            (Role::T2, Vertex::t(cell_entry(a[2], p))),
            (Role::T4, Vertex::t(x)),
            (Role::T6, Vertex::t(z)),
            (Role::T5, Vertex::t(y)),
        ];
        Trade::new(TradeKind::T1E, cells, roles)
    }
}
