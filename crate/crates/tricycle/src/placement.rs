//! The covering phase: lays non-overlapping partial trades over every cell
//! of parts B, C2 and D2, tracks which rows of the last four columns remain
//! uncovered, and applies the corrective partials that make every
//! uncovered-row class even. The middle blocks C1/D1 are grouped here but
//! their cells are bound during expansion, where the anchor row of each
//! group's bridging trade is decided.

use std::collections::BTreeMap;

use crate::error::{Error, Result, Step};
use crate::model::{wrap1, CellRef, LatinRep, Params, Region};
use crate::trades::{PartialOrigin, PartialTrade, TradeKind};

/// Quantities the covering rules are parameterized by.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DerivedConstants {
    /// Interior row-pair count per odd entry: `(s - r - 2) / 2`.
    pub interior_pairs: u32,
    /// Width of the middle extension block: `t - s - 4`. C1 has this many
    /// columns and D1 this many rows; both are grouped in twos.
    pub middle_span: u32,
}

impl DerivedConstants {
    pub fn of(p: &Params) -> DerivedConstants {
        debug_assert!(p.s >= p.r + 2 && p.t >= p.s + 4);
        DerivedConstants {
            interior_pairs: (p.s - p.r - 2) / 2,
            middle_span: p.t - p.s - 4,
        }
    }
}

/// Which corrective partials were placed.
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
pub enum CorrectionKind {
    None,
    Pt1Pt2,
    Pt3,
    Pt1Pt2AndPt3,
}

/// Column-pair key into the uncovered-row bookkeeping, `(i, j)` with
/// `t-3 <= i < j <= t`.
pub type ColPair = (u32, u32);

#[derive(Clone, Debug)]
pub struct PlacementState {
    pub params: Params,
    pub rep: LatinRep,
    pub partials: Vec<PartialTrade>,
    /// Uncovered-row counts straight from the case formulas.
    pub f_formula: BTreeMap<ColPair, u32>,
    /// Same, adjusted for the `s = r + 2` reroute (the configuration the
    /// grid is actually in when measuring).
    pub f_adjusted: BTreeMap<ColPair, u32>,
    /// Counts measured directly from the grid after the B1 cover.
    pub f_measured: BTreeMap<ColPair, u32>,
    /// Rows of each class, ascending, measured before corrections.
    pub class_rows: BTreeMap<ColPair, Vec<u32>>,
    pub correction: CorrectionKind,
    /// Number of C1/D1 groups (half the middle span); cells bound at
    /// expansion.
    pub middle_groups: u32,
}

pub fn col_pairs(p: &Params) -> Vec<ColPair> {
    let t = p.t;
    let mut out = Vec::new();
    for i in (t - 3)..=t {
        for j in (i + 1)..=t {
            out.push((i, j));
        }
    }
    out
}

/// Uncovered-row counts for the four sparse columns from the closed-form
/// case analysis, without the `s = r + 2` adjustment.
pub fn compute_f(p: &Params) -> BTreeMap<ColPair, u32> {
    let (r, s, t) = (p.r as i64, p.s as i64, p.t as i64);
    let mut f: BTreeMap<ColPair, i64> = col_pairs(p).into_iter().map(|k| (k, 0)).collect();
    let half_gap = (s - r - 2) / 2;
    if s < 2 * r + 4 {
        f.insert(((t - 3) as u32, (t - 1) as u32), 2 * r + 2 - s + half_gap);
        f.insert(((t - 3) as u32, t as u32), half_gap);
    } else {
        f.insert(
            ((t - 3) as u32, (t - 1) as u32),
            (2 * r + 3 - (s - r) - 1) / 2 + s - (2 * r + 3),
        );
        f.insert(((t - 3) as u32, t as u32), (2 * r + 4 - (s - r)) / 2);
    }
    f.insert(((t - 2) as u32, (t - 1) as u32), 1);
    f.insert(((t - 1) as u32, t as u32), (s - r) / 2);
    f.into_iter()
        .map(|(k, v)| {
            assert!(v >= 0, "negative uncovered-row count at {k:?}: {v}");
            (k, v as u32)
        })
        .collect()
}

/// The counts after the `s = r + 2` reroute (rows 3 and 4 trade their
/// last-column cells for second-to-last-column cells, moving two rows from
/// the (t-3, t-1) class to the (t-3, t) class).
pub fn compute_f_adjusted(p: &Params) -> BTreeMap<ColPair, u32> {
    let mut f = compute_f(p);
    if p.s == p.r + 2 {
        let t = p.t;
        *f.get_mut(&(t - 3, t - 1)).unwrap() -= 2;
        *f.get_mut(&(t - 3, t)).unwrap() += 2;
    }
    f
}

/// Cells of the B1 partial for an odd entry: the two entry cells plus the
/// third-from-last-column cells in the same rows.
pub(crate) fn b1_odd_cells(entry: u32, p: &Params) -> [CellRef; 4] {
    let rho1 = wrap1(entry as i64 + 1, p.s);
    let rho2 = wrap1(entry as i64 + 2, p.s);
    [
        CellRef::new(rho1, p.s),
        CellRef::new(rho2, p.s - 1),
        CellRef::new(rho1, p.t - 2),
        CellRef::new(rho2, p.t - 2),
    ]
}

/// The sparse-block column paired with an even B1 entry: the last column
/// for the low and high ranges, the second-to-last for the middle range,
/// `None` in the (unreachable for odd `r`) gap.
pub(crate) fn b1_even_edge_col(entry: u32, p: &Params) -> Option<u32> {
    let (r, s) = (p.r, p.s);
    if entry <= r + 1 || entry >= 2 * r + 4 {
        Some(p.t)
    } else if entry >= r + 3 && entry <= (2 * r + 3).min(s) {
        Some(p.t - 1)
    } else {
        None
    }
}

pub(crate) fn b1_even_cells(entry: u32, edge_col: u32, p: &Params) -> [CellRef; 4] {
    let rho1 = wrap1(entry as i64 - p.r as i64, p.s);
    let rho2 = wrap1(entry as i64 + 1, p.s);
    [
        CellRef::new(rho1, p.r + 1),
        CellRef::new(rho2, p.s),
        CellRef::new(rho1, edge_col),
        CellRef::new(rho2, edge_col),
    ]
}

/// Cells of the k-th entry-`s` partial: rows `2k-1`, `2k`.
pub(crate) fn b1_scell_cells(k: u32, p: &Params) -> [CellRef; 4] {
    [
        CellRef::new(2 * k - 1, p.s + 2 - 2 * k),
        CellRef::new(2 * k, p.s + 1 - 2 * k),
        CellRef::new(2 * k - 1, p.t - 3),
        CellRef::new(2 * k, p.t - 3),
    ]
}

/// Cells of the interior partial for odd `entry` at layer `j`
/// (`2 <= j <= (s-r)/2`): entries `entry` and `entry+1` over two
/// consecutive rows.
pub(crate) fn b2_cells(entry: u32, j: u32, p: &Params) -> ([CellRef; 4], u32) {
    let s = p.s;
    let top = wrap1(entry as i64 + 2 * j as i64 - 1, s);
    let bot = wrap1(entry as i64 + 2 * j as i64, s);
    (
        [
            CellRef::new(top, s - 2 * j + 2),
            CellRef::new(top, s - 2 * j + 3),
            CellRef::new(bot, s - 2 * j + 1),
            CellRef::new(bot, s - 2 * j + 2),
        ],
        top,
    )
}

impl PlacementState {
    fn push_partial(&mut self, kind: TradeKind, cells: Vec<CellRef>, origin: PartialOrigin) -> Result<()> {
        let id = self.partials.len() as u32;
        for &cell in &cells {
            self.rep.use_cell(cell, id)?;
        }
        self.partials.push(PartialTrade { kind, cells, origin });
        Ok(())
    }

    fn cover_b1(&mut self) -> Result<()> {
        let p = self.params;
        let mut entry = 1;
        while entry <= p.s - 2 {
            self.push_partial(
                TradeKind::T1A,
                b1_odd_cells(entry, &p).to_vec(),
                PartialOrigin::B1Odd { entry },
            )?;
            entry += 2;
        }
        let mut entry = 2;
        while entry < p.s {
            let mut edge_col = b1_even_edge_col(entry, &p).ok_or(Error::Construction {
                step: Step::ChainEvenB1,
                detail: format!("even entry {entry} falls in the covering gap"),
            })?;
            if p.s == p.r + 2 && entry == 2 {
                // Reroute rows 3 and 4 onto the second-to-last column so the
                // (t-3, t) class is non-empty for the corrective partials.
                edge_col = p.t - 1;
            }
            self.push_partial(
                TradeKind::T1C,
                b1_even_cells(entry, edge_col, &p).to_vec(),
                PartialOrigin::B1Even { entry, edge_col },
            )?;
            entry += 2;
        }
        for k in 1..=(p.s - p.r) / 2 {
            self.push_partial(
                TradeKind::T1A,
                b1_scell_cells(k, &p).to_vec(),
                PartialOrigin::B1SCell { pair: k },
            )?;
        }
        Ok(())
    }

    fn cover_b2(&mut self) -> Result<()> {
        let p = self.params;
        let layers = (p.s - p.r) / 2;
        let mut entry = 1;
        while entry <= p.s - 2 {
            for j in 2..=layers {
                let (cells, top_row) = b2_cells(entry, j, &p);
                self.push_partial(
                    TradeKind::T1A,
                    cells.to_vec(),
                    PartialOrigin::B2 { entry, top_row },
                )?;
            }
            entry += 2;
        }
        Ok(())
    }

    /// Measures, per row, which of the last four columns are still
    /// uncovered. Every row must have zero or two uncovered cells.
    fn measure_classes(&mut self) -> Result<()> {
        let p = self.params;
        for key in col_pairs(&p) {
            self.class_rows.insert(key, Vec::new());
            self.f_measured.insert(key, 0);
        }
        for row in 1..=p.s {
            let open: Vec<u32> = ((p.t - 3)..=p.t)
                .filter(|&col| !self.rep.is_used(CellRef::new(row, col)))
                .collect();
            match open.len() {
                0 => {}
                2 => {
                    let key = (open[0], open[1]);
                    self.class_rows.get_mut(&key).unwrap().push(row);
                    *self.f_measured.get_mut(&key).unwrap() += 1;
                }
                n => {
                    return Err(Error::Construction {
                        step: Step::C2,
                        detail: format!("row {row} has {n} uncovered sparse cells, want 0 or 2"),
                    })
                }
            }
        }
        Ok(())
    }

    /// Places the corrective partials and returns the per-class rows that
    /// remain for pairing.
    fn apply_parity_correction(&mut self) -> Result<BTreeMap<ColPair, Vec<u32>>> {
        let p = self.params;
        let t = p.t;
        let dc = DerivedConstants::of(&p);
        let mut remaining = self.class_rows.clone();

        let take = |remaining: &mut BTreeMap<ColPair, Vec<u32>>, key: ColPair, which: usize| {
            let rows = remaining.get_mut(&key).unwrap();
            if which >= rows.len() {
                return Err(Error::Construction {
                    step: Step::ParityFixes,
                    detail: format!("class {key:?} lacks row #{which}"),
                });
            }
            Ok(rows.remove(which))
        };

        // First fix: the single (t-2, t-1) row, tied to the top two cells of
        // the first extension column block.
        let u1 = take(&mut remaining, (t - 2, t - 1), 0)?;
        let cells = vec![
            CellRef::new(u1, t - 2),
            CellRef::new(u1, t - 1),
            CellRef::new(t - 2, 1),
            CellRef::new(t - 1, 1),
        ];
        self.push_partial(TradeKind::T1B, cells, PartialOrigin::ParityFix1B { which: 1 })?;

        // Second fix: the first (t-3, t) row.
        let u2 = take(&mut remaining, (t - 3, t), 0)?;
        let cells = vec![
            CellRef::new(u2, t - 3),
            CellRef::new(u2, t),
            CellRef::new(t - 3, 1),
            CellRef::new(t, 1),
        ];
        self.push_partial(TradeKind::T1B, cells, PartialOrigin::ParityFix1B { which: 2 })?;

        self.correction = CorrectionKind::Pt1Pt2;

        if dc.interior_pairs.is_multiple_of(2) {
            // Even case: one more three-row partial. It uses the *second*
            // (t-3, t) row; the first went to the fix above.
            let ua = take(&mut remaining, (t - 3, t - 1), 0)?;
            let ub = take(&mut remaining, (t - 3, t), 0)?;
            let uc = take(&mut remaining, (t - 1, t), 0)?;
            let cells = vec![
                CellRef::new(ua, t - 3),
                CellRef::new(ua, t - 1),
                CellRef::new(ub, t - 3),
                CellRef::new(ub, t),
                CellRef::new(uc, t - 1),
                CellRef::new(uc, t),
            ];
            self.push_partial(TradeKind::T1E, cells, PartialOrigin::ParityFix1E)?;
            self.correction = CorrectionKind::Pt1Pt2AndPt3;
        }

        for (key, rows) in &remaining {
            if rows.len() % 2 != 0 {
                return Err(Error::Construction {
                    step: Step::ParityFixes,
                    detail: format!("class {key:?} still odd after fixes: {rows:?}"),
                });
            }
        }
        Ok(remaining)
    }

    fn cover_c2(&mut self, remaining: &BTreeMap<ColPair, Vec<u32>>) -> Result<()> {
        for (&(c1, c2), rows) in remaining {
            for pair in rows.chunks(2) {
                let (a, b) = (pair[0], pair[1]);
                if b - a > 2 {
                    return Err(Error::Construction {
                        step: Step::C2,
                        detail: format!("paired rows {a},{b} in class ({c1},{c2}) too far apart"),
                    });
                }
                let cells = vec![
                    CellRef::new(a, c1),
                    CellRef::new(a, c2),
                    CellRef::new(b, c1),
                    CellRef::new(b, c2),
                ];
                self.push_partial(
                    TradeKind::T1A,
                    cells,
                    PartialOrigin::C2 { rows: (a, b), cols: (c1, c2) },
                )?;
            }
        }
        Ok(())
    }

    fn cover_d2(&mut self) -> Result<()> {
        let p = self.params;
        let t = p.t;
        for rows in [(t - 3, t), (t - 2, t - 1)] {
            let mut col = 2;
            while col < p.r {
                let cells = vec![
                    CellRef::new(rows.0, col),
                    CellRef::new(rows.0, col + 1),
                    CellRef::new(rows.1, col),
                    CellRef::new(rows.1, col + 1),
                ];
                self.push_partial(
                    TradeKind::T1A,
                    cells,
                    PartialOrigin::D2 { rows, cols: (col, col + 1) },
                )?;
                col += 2;
            }
        }
        Ok(())
    }

    /// Diagnostic dump: per-block coverage, uncovered-row counts before and
    /// after the corrective partials, and the correction record.
    pub fn diagnostics(&self) -> String {
        let p = self.params;
        let mut covered: BTreeMap<char, (u64, u64)> = BTreeMap::new();
        for cell in LatinRep::new(p).cells() {
            let block = self.rep.region(cell).expect("valid cell").block();
            let slot = covered.entry(block).or_default();
            slot.1 += 1;
            if self.rep.is_used(cell) {
                slot.0 += 1;
            }
        }
        let mut out = String::new();
        out.push_str(&format!("instance: {p}\n"));
        for (block, (used, total)) in covered {
            out.push_str(&format!("block {block}: {used}/{total} covered\n"));
        }
        out.push_str("uncovered-row counts (pair: formula adjusted measured):\n");
        for (key, raw) in &self.f_formula {
            out.push_str(&format!(
                "  {:?}: {} {} {}\n",
                key,
                raw,
                self.f_adjusted[key],
                self.f_measured.get(key).copied().unwrap_or(0),
            ));
        }
        out.push_str(&format!("correction: {:?}\n", self.correction));
        out.push_str(&format!("middle groups: {}\n", self.middle_groups));
        out
    }

    /// Checks that every cell of the given blocks is claimed by exactly one
    /// partial (the ledger already forbids double claims).
    pub fn audit_blocks(&self, blocks: &[Region]) -> Result<()> {
        let p = self.params;
        for cell in LatinRep::new(p).cells() {
            let region = self.rep.region(cell)?;
            if blocks.contains(&region) && !self.rep.is_used(cell) {
                return Err(Error::Construction {
                    step: Step::C2,
                    detail: format!("cell {cell} in {region:?} left uncovered"),
                });
            }
        }
        Ok(())
    }
}

/// Runs the whole covering phase. The instance must already have passed the
/// construction gate.
pub fn place_all(p: &Params) -> Result<PlacementState> {
    let mut state = PlacementState {
        params: *p,
        rep: LatinRep::new(*p),
        partials: Vec::new(),
        f_formula: compute_f(p),
        f_adjusted: compute_f_adjusted(p),
        f_measured: BTreeMap::new(),
        class_rows: BTreeMap::new(),
        correction: CorrectionKind::None,
        middle_groups: DerivedConstants::of(p).middle_span / 2,
    };
    state.cover_b1()?;
    state.cover_b2()?;
    state.measure_classes()?;
    if state.f_measured != state.f_adjusted {
        return Err(Error::Construction {
            step: Step::C2,
            detail: format!(
                "uncovered-row counts disagree: measured {:?}, formula {:?}",
                state.f_measured, state.f_adjusted
            ),
        });
    }
    let remaining = state.apply_parity_correction()?;
    state.cover_c2(&remaining)?;
    state.cover_d2()?;
    state.audit_blocks(&[Region::B1, Region::B2, Region::C2, Region::D2])?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::supported_instances;

    fn p(r: u32, s: u32, t: u32) -> Params {
        Params::new(r, s, t).unwrap()
    }

    #[test]
    fn b1_odd_rule_on_reference_grid() {
        // Odd entry 7 pairs with the (t-2)-cells of its rows.
        let p = p(6, 12, 16);
        let cells = b1_odd_cells(7, &p);
        assert_eq!(cells[0], CellRef::new(8, 12));
        assert_eq!(cells[1], CellRef::new(9, 11));
        assert_eq!(cells[2], CellRef::new(8, 14));
        assert_eq!(cells[3], CellRef::new(9, 14));
        for c in &cells[..2] {
            assert_eq!(crate::model::cell_entry(*c, &p), 7);
        }
    }

    #[test]
    fn scell_partial_count_matches_band() {
        let p = p(6, 12, 16);
        assert_eq!((p.s - p.r) / 2, 3);
        for k in 1..=3 {
            let cells = b1_scell_cells(k, &p);
            assert_eq!(crate::model::cell_entry(cells[0], &p), p.s);
            assert_eq!(crate::model::cell_entry(cells[1], &p), p.s);
            assert_eq!(cells[2].col, p.t - 3);
        }
    }

    #[test]
    fn even_entry_gap_is_skipped() {
        // The even ranges skip r+2; with an even smallest part this entry
        // is reachable and must map to no column.
        let p = p(6, 12, 16);
        assert_eq!(b1_even_edge_col(8, &p), None);
        assert_eq!(b1_even_edge_col(2, &p), Some(p.t));
        assert_eq!(b1_even_edge_col(10, &p), Some(p.t - 1));
        // Odd smallest part: every even entry has a column.
        let q = Params::new(19, 23, 31).unwrap();
        for e in (2..q.s).step_by(2) {
            assert!(b1_even_edge_col(e, &q).is_some(), "entry {e}");
        }
    }

    #[test]
    fn f_formula_flagship_values() {
        // s = r + 2 instance, raw formulas.
        let f = compute_f(&p(25, 27, 33));
        assert_eq!(f[&(30, 32)], 25);
        assert_eq!(f[&(30, 33)], 0);
        assert_eq!(f[&(31, 32)], 1);
        assert_eq!(f[&(32, 33)], 1);
        // With the reroute two rows migrate.
        let f = compute_f_adjusted(&p(25, 27, 33));
        assert_eq!(f[&(30, 32)], 23);
        assert_eq!(f[&(30, 33)], 2);

        // Wide instance in the second case.
        let f = compute_f(&p(45, 95, 99));
        assert_eq!(f[&(96, 98)], 23);
        assert_eq!(f[&(96, 99)], 22);
        assert_eq!(f[&(97, 98)], 1);
        assert_eq!(f[&(98, 99)], 25);
    }

    #[test]
    fn parity_pattern_matches_band_parity() {
        // Odd interior band: (even, odd, odd, even); even band:
        // (odd, even, odd, odd). Checked on the raw formulas.
        for inst in supported_instances(99) {
            if inst.s == inst.r + 2 {
                continue; // rerouted; pattern stated for the generic case
            }
            let band = (inst.s - inst.r - 2) / 2;
            let f = compute_f(&inst);
            let t = inst.t;
            let par = [
                f[&(t - 3, t - 1)] % 2,
                f[&(t - 3, t)] % 2,
                f[&(t - 2, t - 1)] % 2,
                f[&(t - 1, t)] % 2,
            ];
            if band % 2 == 1 {
                assert_eq!(par, [0, 1, 1, 0], "{inst}");
            } else {
                assert_eq!(par, [1, 0, 1, 1], "{inst}");
            }
        }
    }

    #[test]
    fn measured_equals_formula_on_flagships() {
        for inst in [p(25, 27, 33), p(23, 25, 29), p(45, 95, 99), p(19, 23, 27)] {
            let state = place_all(&inst).unwrap();
            assert_eq!(state.f_measured, state.f_adjusted, "{inst}");
            let total: u32 = state.f_measured.values().sum();
            assert!(total <= inst.s, "{inst}: {total}");
        }
    }

    #[test]
    fn placement_covers_b_c2_d2_exactly() {
        let state = place_all(&p(25, 27, 33)).unwrap();
        // audit_blocks ran inside place_all; spot-check multiplicities here.
        let mut owners = std::collections::HashMap::new();
        for partial in &state.partials {
            for &cell in &partial.cells {
                assert!(owners.insert(cell, partial.origin).is_none(), "{cell}");
            }
        }
        // Interior block sizing: (s-1) * 2 * band cells in B2.
        let band = (state.params.s - state.params.r - 2) / 2;
        let b2_cells = owners
            .keys()
            .filter(|c| state.rep.region(**c).unwrap() == Region::B2)
            .count();
        assert_eq!(b2_cells as u32, (state.params.s - 1) * 2 * band);
    }

    #[test]
    fn correction_kind_follows_band_parity() {
        let state = place_all(&p(23, 29, 35)).unwrap(); // band (29-23-2)/2 = 2: even
        assert_eq!(state.correction, CorrectionKind::Pt1Pt2AndPt3);
        let state = place_all(&p(23, 27, 33)).unwrap(); // band 1: odd
        assert_eq!(state.correction, CorrectionKind::Pt1Pt2);
    }

    #[test]
    fn d2_pairs_use_all_but_first_column() {
        let state = place_all(&p(25, 27, 33)).unwrap();
        let d2: Vec<&PartialTrade> = state
            .partials
            .iter()
            .filter(|pt| matches!(pt.origin, PartialOrigin::D2 { .. }))
            .collect();
        assert_eq!(d2.len() as u32, state.params.r - 1);
        // Column 1 cells belong to the corrective partials.
        for row in (state.params.t - 3)..=state.params.t {
            assert!(state.rep.is_used(CellRef::new(row, 1)));
        }
    }
}
