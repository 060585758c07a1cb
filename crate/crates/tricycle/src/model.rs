//! Tripartite vertices, edges, cycles, and the latin representation.
//!
//! A complete tripartite graph `K_{r,s,t}` is encoded as a grid: an `s x r`
//! back-circulant core whose entries are triangles, extended by `t - r`
//! columns per row (edges between the middle and largest parts) and `t - s`
//! rows under the first `r` columns (edges between the smallest and largest
//! parts). Everything downstream — trades, placement, expansion — addresses
//! cells of this grid.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based wrap: maps `x` into `1..=m`.
///
/// Entries of the grid are 1-based, so all modular arithmetic on rows,
/// columns and entries goes through this instead of a bare `%`.
pub fn wrap1(x: i64, m: u32) -> u32 {
    debug_assert!(m >= 1);
    ((x - 1).rem_euclid(m as i64) + 1) as u32
}

/// 0-based remainder in `0..m`.
pub fn mod0(x: i64, m: u32) -> u32 {
    x.rem_euclid(m as i64) as u32
}

/// The three vertex parts, ordered `R < S < T` with sizes `r <= s <= t`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Part {
    R,
    S,
    T,
}

impl Part {
    pub fn tag(self) -> char {
        match self {
            Part::R => 'r',
            Part::S => 's',
            Part::T => 't',
        }
    }

    pub fn from_tag(c: char) -> Option<Part> {
        match c {
            'r' => Some(Part::R),
            's' => Some(Part::S),
            't' => Some(Part::T),
            _ => None,
        }
    }
}

/// A vertex, identified by its part and a 1-based index within the part.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Vertex {
    pub part: Part,
    pub index: u32,
}

impl Vertex {
    pub fn new(part: Part, index: u32) -> Vertex {
        Vertex { part, index }
    }

    pub fn r(index: u32) -> Vertex {
        Vertex::new(Part::R, index)
    }

    pub fn s(index: u32) -> Vertex {
        Vertex::new(Part::S, index)
    }

    pub fn t(index: u32) -> Vertex {
        Vertex::new(Part::T, index)
    }

    pub fn in_bounds(&self, p: &Params) -> bool {
        self.index >= 1 && self.index <= p.part_size(self.part)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.part.tag(), self.index)
    }
}

/// Part sizes of `K_{r,s,t}` with the convention `r <= s <= t`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Params {
    pub r: u32,
    pub s: u32,
    pub t: u32,
}

impl Params {
    pub fn new(r: u32, s: u32, t: u32) -> Result<Params> {
        if r < 1 || !(r <= s && s <= t) {
            return Err(Error::BadParams { r, s, t });
        }
        Ok(Params { r, s, t })
    }

    pub fn part_size(&self, part: Part) -> u32 {
        match part {
            Part::R => self.r,
            Part::S => self.s,
            Part::T => self.t,
        }
    }

    /// Number of edges of `K_{r,s,t}`: `rs + rt + st`.
    pub fn edge_count(&self) -> u64 {
        let (r, s, t) = (self.r as u64, self.s as u64, self.t as u64);
        r * s + r * t + s * t
    }

    pub fn scaled(&self, k: u32) -> Params {
        Params {
            r: self.r * k,
            s: self.s * k,
            t: self.t * k,
        }
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K_{{{},{},{}}}", self.r, self.s, self.t)
    }
}

/// An unordered cross-part edge, stored with endpoints in `(part, index)` order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Edge {
    a: Vertex,
    b: Vertex,
}

impl Edge {
    pub fn new(u: Vertex, v: Vertex) -> Result<Edge> {
        if u.part == v.part {
            return Err(Error::IntraPartEdge { a: u, b: v });
        }
        if u <= v {
            Ok(Edge { a: u, b: v })
        } else {
            Ok(Edge { a: v, b: u })
        }
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.a, self.b)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// A simple cycle of length 3 or 5 whose consecutive vertices lie in
/// distinct parts.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cycle {
    vertices: Vec<Vertex>,
}

impl Cycle {
    pub fn new(vertices: Vec<Vertex>) -> Result<Cycle> {
        let n = vertices.len();
        if n != 3 && n != 5 {
            return Err(Error::BadCycleLength { len: n });
        }
        for i in 0..n {
            let u = vertices[i];
            let v = vertices[(i + 1) % n];
            if u.part == v.part {
                return Err(Error::IntraPartEdge { a: u, b: v });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if vertices[i] == vertices[j] {
                    return Err(Error::RepeatedVertex { v: vertices[i] });
                }
            }
        }
        Ok(Cycle { vertices })
    }

    /// Builds a cycle without invariant checks. For input paths (parsers,
    /// negative tests) where the verifier, not the constructor, judges
    /// validity. `edges()` must not be called on unchecked cycles.
    pub fn new_unchecked(vertices: Vec<Vertex>) -> Cycle {
        Cycle { vertices }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    #[allow(clippy::len_without_is_empty)] // cycles are never empty
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// The cycle's edges, one per consecutive (cyclic) pair.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| {
            Edge::new(self.vertices[i], self.vertices[(i + 1) % n])
                .expect("cycle invariant: cross-part steps")
        })
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.vertices {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// A claimed decomposition: a list of cycles over `K_{r,s,t}`.
///
/// Whether the cycles really partition the edge set is established by the
/// verifier, never assumed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Decomposition {
    pub params: Params,
    pub cycles: Vec<Cycle>,
}

impl Decomposition {
    pub fn new(params: Params, cycles: Vec<Cycle>) -> Decomposition {
        Decomposition { params, cycles }
    }

    pub fn count_by_len(&self, len: usize) -> usize {
        self.cycles.iter().filter(|c| c.len() == len).count()
    }
}

/// A grid cell address. Valid cells satisfy
/// `(row <= s && col <= t) || (s < row <= t && col <= r)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct CellRef {
    pub row: u32,
    pub col: u32,
}

impl CellRef {
    pub fn new(row: u32, col: u32) -> CellRef {
        CellRef { row, col }
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// The seven zones of the grid. `A` holds triangles available for trade
/// completion, `B`/`C` hold S-T edges, `D` holds R-T edges.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Region {
    A,
    B1,
    B2,
    C1,
    C2,
    D1,
    D2,
}

impl Region {
    /// Collapses the sub-zones to the four coarse blocks.
    pub fn block(self) -> char {
        match self {
            Region::A => 'A',
            Region::B1 | Region::B2 => 'B',
            Region::C1 | Region::C2 => 'C',
            Region::D1 | Region::D2 => 'D',
        }
    }
}

pub fn is_valid_cell(cell: CellRef, p: &Params) -> bool {
    let CellRef { row, col } = cell;
    if row < 1 || col < 1 {
        return false;
    }
    (row <= p.s && col <= p.t) || (row > p.s && row <= p.t && col <= p.r)
}

/// Entry of the filled grid at `cell`.
///
/// Core rows carry the back-circulant fill `wrap1(row + col - 1, s)` in
/// columns `1..=s` and the literal column number beyond; extension rows
/// carry their own row number.
pub fn cell_entry(cell: CellRef, p: &Params) -> u32 {
    debug_assert!(is_valid_cell(cell, p), "invalid cell {cell}");
    let CellRef { row, col } = cell;
    if row <= p.s {
        if col <= p.s {
            wrap1(row as i64 + col as i64 - 1, p.s)
        } else {
            col
        }
    } else {
        row
    }
}

/// Which of the seven zones `cell` belongs to.
pub fn region_of(cell: CellRef, p: &Params) -> Result<Region> {
    if !is_valid_cell(cell, p) {
        return Err(Error::InvalidCell { cell });
    }
    let CellRef { row, col } = cell;
    if row > p.s {
        // Extension rows: the last four are D2.
        return Ok(if row > p.t - 4 { Region::D2 } else { Region::D1 });
    }
    if col <= p.r {
        return Ok(Region::A);
    }
    if col > p.s {
        return Ok(if col > p.t - 4 { Region::C2 } else { Region::C1 });
    }
    // Part B: split by the column/entry rules.
    let entry = cell_entry(cell, p);
    let b1 = (col == p.r + 1 && entry.is_multiple_of(2))
        || (col == p.s - 1 && entry % 2 == 1)
        || col == p.s
        || entry == p.s;
    Ok(if b1 { Region::B1 } else { Region::B2 })
}

/// Identifier of the trade (or partial trade) occupying a cell.
pub type OwnerId = u32;

/// The filled grid plus a per-cell usage ledger.
///
/// The fill itself is a formula, so only the ledger is stored. Any attempt
/// to claim a cell twice is a hard error: placement and expansion share this
/// single conflict-detection mechanism.
#[derive(Clone, Debug)]
pub struct LatinRep {
    params: Params,
    usage: Vec<Option<OwnerId>>,
}

impl LatinRep {
    pub fn new(params: Params) -> LatinRep {
        let cells = params.s as usize * params.t as usize
            + (params.t - params.s) as usize * params.r as usize;
        LatinRep {
            params,
            usage: vec![None; cells],
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    fn index(&self, cell: CellRef) -> usize {
        debug_assert!(is_valid_cell(cell, &self.params));
        let p = &self.params;
        if cell.row <= p.s {
            (cell.row as usize - 1) * p.t as usize + cell.col as usize - 1
        } else {
            p.s as usize * p.t as usize
                + (cell.row - p.s - 1) as usize * p.r as usize
                + cell.col as usize
                - 1
        }
    }

    pub fn entry(&self, cell: CellRef) -> u32 {
        cell_entry(cell, &self.params)
    }

    pub fn region(&self, cell: CellRef) -> Result<Region> {
        region_of(cell, &self.params)
    }

    pub fn owner(&self, cell: CellRef) -> Option<OwnerId> {
        self.usage[self.index(cell)]
    }

    pub fn is_used(&self, cell: CellRef) -> bool {
        self.owner(cell).is_some()
    }

    /// Claims `cell` for `owner`; double use is a construction error.
    pub fn use_cell(&mut self, cell: CellRef, owner: OwnerId) -> Result<()> {
        if !is_valid_cell(cell, &self.params) {
            return Err(Error::InvalidCell { cell });
        }
        let idx = self.index(cell);
        if let Some(prior) = self.usage[idx] {
            return Err(Error::CellConflict { cell, prior, claimant: owner });
        }
        self.usage[idx] = Some(owner);
        Ok(())
    }

    /// All valid cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellRef> + '_ {
        let p = self.params;
        (1..=p.t).flat_map(move |row| {
            let width = if row <= p.s { p.t } else { p.r };
            (1..=width).map(move |col| CellRef::new(row, col))
        })
    }

    /// CSV dump of the grid, one line per row, empty cells blank.
    ///
    /// `annotations` attaches a suffix to specific cells (`entry:tag`),
    /// in the subscripted style used for worked examples.
    pub fn to_csv(&self, annotations: Option<&BTreeMap<CellRef, String>>) -> String {
        let p = self.params;
        let mut out = String::new();
        for row in 1..=p.t {
            let width = if row <= p.s { p.t } else { p.r };
            for col in 1..=p.t {
                if col > 1 {
                    out.push(',');
                }
                if col <= width {
                    let cell = CellRef::new(row, col);
                    let entry = self.entry(cell);
                    match annotations.and_then(|m| m.get(&cell)) {
                        Some(tag) => out.push_str(&format!("{entry}:{tag}")),
                        None => out.push_str(&entry.to_string()),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Diagonal `v`: the cells of part A with entry `v`, ordered by decreasing
/// column from column `r`. This is the traversal order every expansion step
/// uses.
pub fn diagonal_cells(v: u32, p: &Params) -> Vec<CellRef> {
    debug_assert!(v >= 1 && v <= p.s);
    (1..=p.r)
        .rev()
        .map(|col| CellRef::new(wrap1(v as i64 - col as i64 + 1, p.s), col))
        .collect()
}

/// Two cells of one diagonal in consecutive rows (`top_row`, `top_row + 1`
/// mod `s`); the atomic unit consumed when completing row-pair trades.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct DualCell {
    pub diagonal: u32,
    pub top_row: u32,
}

impl DualCell {
    /// Member cells, top row first. The top cell sits one column to the
    /// right of the bottom cell (the back-circulant diagonal runs down-left).
    pub fn cells(&self, p: &Params) -> [CellRef; 2] {
        let top_col = wrap1(self.diagonal as i64 - self.top_row as i64 + 1, p.s);
        let bottom_row = wrap1(self.top_row as i64 + 1, p.s);
        [
            CellRef::new(self.top_row, top_col),
            CellRef::new(bottom_row, top_col - 1),
        ]
    }

    pub fn bottom_row(&self, p: &Params) -> u32 {
        wrap1(self.top_row as i64 + 1, p.s)
    }

    pub fn is_odd(&self) -> bool {
        self.top_row % 2 == 1
    }

    pub fn is_even(&self) -> bool {
        self.top_row.is_multiple_of(2)
    }

    /// Distance of the top cell from the diagonal's end, `(v - i) mod s`.
    /// Ranges over `1..=r-1` for valid dual cells and decreases along the
    /// traversal.
    pub fn depth(&self, p: &Params) -> u32 {
        mod0(self.diagonal as i64 - self.top_row as i64, p.s)
    }
}

/// The `r - 1` dual cells of diagonal `v`, in traversal order (depth
/// descending, i.e. from the column-`r` end toward column 1).
pub fn dual_cells_of_diagonal(v: u32, p: &Params) -> Vec<DualCell> {
    (1..p.r)
        .map(|k| DualCell {
            diagonal: v,
            top_row: wrap1(v as i64 - p.r as i64 + k as i64, p.s),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(r: u32, s: u32, t: u32) -> Params {
        Params::new(r, s, t).unwrap()
    }

    #[test]
    fn wrap1_examples() {
        assert_eq!(wrap1(13, 12), 1);
        assert_eq!(wrap1(12, 12), 12);
        assert_eq!(wrap1(-3, 12), 9);
        assert_eq!(wrap1(1, 1), 1);
        assert_eq!(wrap1(0, 5), 5);
    }

    #[test]
    fn fill_matches_reference_grid() {
        // K_{6,12,16}: the reference grid used throughout.
        let p = params(6, 12, 16);
        assert_eq!(cell_entry(CellRef::new(1, 2), &p), 2);
        assert_eq!(cell_entry(CellRef::new(2, 1), &p), 2);
        assert_eq!(cell_entry(CellRef::new(3, 2), &p), 4);
        assert_eq!(cell_entry(CellRef::new(1, 13), &p), 13);
        assert_eq!(cell_entry(CellRef::new(1, 14), &p), 14);
        assert_eq!(cell_entry(CellRef::new(13, 1), &p), 13);
        assert_eq!(cell_entry(CellRef::new(16, 6), &p), 16);
    }

    #[test]
    fn region_examples() {
        let p = params(6, 12, 16);
        // Column r+1, even entry 8.
        assert_eq!(region_of(CellRef::new(2, 7), &p).unwrap(), Region::B1);
        // t-4 = 12 = s, so all of C is C2 here.
        assert_eq!(region_of(CellRef::new(1, 13), &p).unwrap(), Region::C2);
        assert_eq!(region_of(CellRef::new(5, 5), &p).unwrap(), Region::A);
        assert!(region_of(CellRef::new(13, 7), &p).is_err());
    }

    #[test]
    fn regions_partition_and_have_expected_sizes() {
        for p in [params(6, 12, 16), params(25, 27, 33), params(19, 23, 27)] {
            let rep = LatinRep::new(p);
            let mut counts: BTreeMap<char, u64> = BTreeMap::new();
            let mut total = 0u64;
            for cell in rep.cells() {
                let region = region_of(cell, &p).unwrap();
                *counts.entry(region.block()).or_default() += 1;
                total += 1;
            }
            let (r, s, t) = (p.r as u64, p.s as u64, p.t as u64);
            assert_eq!(counts[&'A'], r * s);
            assert_eq!(counts[&'B'], s * (s - r));
            assert_eq!(counts[&'C'], s * (t - s));
            assert_eq!(counts[&'D'], r * (t - s));
            assert_eq!(total, s * t + (t - s) * r);
        }
    }

    #[test]
    fn core_is_latin() {
        let p = params(6, 12, 16);
        for line in 1..=p.s {
            let mut row_seen = vec![false; p.s as usize + 1];
            let mut col_seen = vec![false; p.s as usize + 1];
            for k in 1..=p.s {
                let re = cell_entry(CellRef::new(line, k), &p) as usize;
                let ce = cell_entry(CellRef::new(k, line), &p) as usize;
                assert!(!row_seen[re] && !col_seen[ce]);
                row_seen[re] = true;
                col_seen[ce] = true;
            }
        }
    }

    #[test]
    fn diagonal_cells_examples() {
        let p = params(6, 12, 16);
        let d7 = diagonal_cells(7, &p);
        assert_eq!(d7[0], CellRef::new(2, 6));
        assert!(d7.iter().all(|&c| cell_entry(c, &p) == 7));

        let d1 = diagonal_cells(1, &p);
        assert!(d1.contains(&CellRef::new(1, 1)));
        assert!(d1.contains(&CellRef::new(8, 6)));

        for v in 1..=p.s {
            let cells = diagonal_cells(v, &p);
            assert_eq!(cells.len(), p.r as usize);
            assert_eq!(*cells.last().unwrap(), CellRef::new(wrap1(v as i64, p.s), 1));
        }
    }

    #[test]
    fn diagonals_partition_part_a() {
        let p = params(25, 27, 33);
        let mut seen = std::collections::HashSet::new();
        for v in 1..=p.s {
            for cell in diagonal_cells(v, &p) {
                assert_eq!(cell_entry(cell, &p), v);
                assert!(seen.insert(cell));
            }
        }
        assert_eq!(seen.len(), (p.r * p.s) as usize);
    }

    #[test]
    fn dual_cells_cover_adjacent_pairs() {
        let p = params(6, 12, 16);
        for v in 1..=p.s {
            let duals = dual_cells_of_diagonal(v, &p);
            assert_eq!(duals.len(), p.r as usize - 1);
            assert_eq!(duals[0].depth(&p), p.r - 1);
            assert_eq!(duals.last().unwrap().depth(&p), 1);
            for dc in &duals {
                let [a, b] = dc.cells(&p);
                assert_eq!(cell_entry(a, &p), v);
                assert_eq!(cell_entry(b, &p), v);
                assert_eq!(b.row, wrap1(a.row as i64 + 1, p.s));
                assert_eq!(b.col, a.col - 1);
            }
        }
    }

    #[test]
    fn ledger_rejects_double_use() {
        let p = params(6, 12, 16);
        let mut rep = LatinRep::new(p);
        let cell = CellRef::new(3, 4);
        rep.use_cell(cell, 7).unwrap();
        let err = rep.use_cell(cell, 9).unwrap_err();
        assert!(matches!(err, Error::CellConflict { .. }));
    }

    #[test]
    fn csv_dump_shape() {
        let p = params(6, 12, 16);
        let rep = LatinRep::new(p);
        let csv = rep.to_csv(None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), p.t as usize);
        assert!(lines[0].starts_with("1,2,3"));
        // Extension rows leave columns beyond r blank.
        assert!(lines[12].starts_with("13,13,13,13,13,13,"));
        assert!(lines[12].ends_with(','));
    }
}
