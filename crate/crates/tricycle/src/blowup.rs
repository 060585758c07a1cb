//! The 5-blowup: replaces every vertex by five copies and rewrites each
//! source cycle as pure 5-cycles over the copies. Triangles lift through a
//! fixed 15-cycle pattern (the blowup of a triangle is a complete
//! tripartite graph on 5+5+5), 5-cycles through twenty-five base cycles.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{Cycle, Decomposition, Params, Vertex};
use crate::verify::verify;

/// The five copies a source vertex turns into: part preserved, indices
/// `5(i-1)+1 ..= 5i`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BlowupClass {
    pub source: Vertex,
}

impl BlowupClass {
    pub fn new(source: Vertex) -> BlowupClass {
        BlowupClass { source }
    }

    /// The `m`-th copy, `1 <= m <= 5`.
    pub fn member(&self, m: u32) -> Vertex {
        debug_assert!((1..=5).contains(&m));
        Vertex::new(self.source.part, 5 * (self.source.index - 1) + m)
    }
}

/// A fixed 5-cycle decomposition of the blown-up triangle, as
/// (class slot, copy index) pairs. Found once by the exhaustive search
/// (`oracle` module, pure 5-cycles on the 5+5+5 instance) and frozen here;
/// re-verified on first use.
const TRIANGLE_LIFT: [[(u8, u8); 5]; 15] = [
    [(0, 1), (1, 1), (0, 2), (1, 2), (2, 1)],
    [(0, 1), (1, 2), (0, 3), (1, 1), (2, 2)],
    [(1, 1), (2, 1), (0, 2), (1, 3), (0, 4)],
    [(0, 1), (1, 3), (0, 3), (1, 4), (2, 3)],
    [(0, 1), (1, 4), (0, 2), (1, 5), (2, 4)],
    [(0, 1), (1, 5), (2, 1), (0, 3), (2, 5)],
    [(0, 3), (1, 5), (2, 2), (0, 2), (2, 3)],
    [(0, 3), (2, 2), (0, 4), (1, 2), (2, 4)],
    [(0, 2), (2, 4), (0, 4), (1, 4), (2, 5)],
    [(0, 4), (1, 5), (2, 3), (1, 1), (2, 5)],
    [(0, 4), (2, 1), (0, 5), (1, 2), (2, 3)],
    [(1, 1), (2, 4), (1, 3), (2, 2), (0, 5)],
    [(1, 2), (2, 2), (1, 4), (0, 5), (2, 5)],
    [(1, 4), (2, 1), (1, 3), (0, 5), (2, 4)],
    [(0, 5), (1, 5), (2, 5), (1, 3), (2, 3)],
];

fn triangle_lift_checked() -> Result<&'static [[(u8, u8); 5]; 15]> {
    static CHECK: OnceLock<bool> = OnceLock::new();
    let ok = *CHECK.get_or_init(|| {
        let p = Params::new(5, 5, 5).expect("valid sizes");
        let classes = [
            BlowupClass::new(Vertex::r(1)),
            BlowupClass::new(Vertex::s(1)),
            BlowupClass::new(Vertex::t(1)),
        ];
        match lift_triangle(&classes) {
            Ok(cycles) => {
                let dec = Decomposition::new(p, cycles);
                verify(&dec, &[5usize].into_iter().collect::<BTreeSet<_>>()).ok()
            }
            Err(_) => false,
        }
    });
    if ok {
        Ok(&TRIANGLE_LIFT)
    } else {
        Err(Error::Integrity(
            "frozen triangle-lift constant fails verification".into(),
        ))
    }
}

fn lift_triangle(classes: &[BlowupClass; 3]) -> Result<Vec<Cycle>> {
    TRIANGLE_LIFT
        .iter()
        .map(|pattern| {
            Cycle::new(
                pattern
                    .iter()
                    .map(|&(slot, m)| classes[slot as usize].member(m as u32))
                    .collect(),
            )
        })
        .collect()
}

/// The fifteen 5-cycles decomposing the blowup of one triangle; the classes
/// must sit in three distinct parts.
pub fn k555_cycles(classes: &[BlowupClass; 3]) -> Result<Vec<Cycle>> {
    triangle_lift_checked()?;
    lift_triangle(classes)
}

/// The twenty-five base cycles decomposing the blowup of one 5-cycle: copy
/// pattern `1 + i + (j-1)(p-1) mod 5` for family `p`, shift `i`, position
/// `j`, which covers every edge between consecutive classes exactly once.
pub fn b5_c5_cycles(classes: &[BlowupClass; 5]) -> Result<Vec<Cycle>> {
    let mut out = Vec::with_capacity(25);
    for family in 0..5u32 {
        for shift in 0..5u32 {
            let vertices = (0..5u32)
                .map(|j| {
                    let copy = 1 + (shift + j * family) % 5;
                    classes[j as usize].member(copy)
                })
                .collect();
            out.push(Cycle::new(vertices)?);
        }
    }
    Ok(out)
}

/// Lifts a verified triangles-and-5-cycles decomposition of `K_{r,s,t}` to
/// a pure 5-cycle decomposition of `K_{5r,5s,5t}`.
///
/// The input is re-verified first; a certificate that does not pass is
/// rejected rather than lifted.
pub fn blowup_decomposition(dec: &Decomposition) -> Result<Decomposition> {
    let allowed: BTreeSet<usize> = [3usize, 5].into_iter().collect();
    let outcome = verify(dec, &allowed);
    if !outcome.ok() {
        return Err(Error::Integrity(format!(
            "refusing to lift an invalid decomposition: {}",
            outcome.summary(5)
        )));
    }
    let big = dec.params.scaled(5);
    let mut cycles = Vec::with_capacity(15 * dec.cycles.len());
    for cycle in &dec.cycles {
        let classes: Vec<BlowupClass> = cycle
            .vertices()
            .iter()
            .map(|&v| BlowupClass::new(v))
            .collect();
        match classes.len() {
            3 => cycles.extend(k555_cycles(&[classes[0], classes[1], classes[2]])?),
            5 => cycles.extend(b5_c5_cycles(&[
                classes[0], classes[1], classes[2], classes[3], classes[4],
            ])?),
            n => return Err(Error::BadCycleLength { len: n }),
        }
    }
    Ok(Decomposition::new(big, cycles))
}
