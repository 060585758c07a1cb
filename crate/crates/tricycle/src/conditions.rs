//! Feasibility gates: necessary conditions for 5-cycle decompositions and
//! the (stricter) domain the constructor actually covers.
//!
//! All arithmetic is exact integer arithmetic; the `t <= 4rs/(r+s)` bound is
//! tested as `t(r+s) <= 4rs`, the slack variant as `(t+18)(r+s) <= 4rs`.

use serde::{Deserialize, Serialize};

use crate::model::Params;

/// Why an instance fails a gate.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Reason {
    ParityMismatch,
    DivisibilityFails,
    BoundFails,
    NotAllOdd,
    SlackBoundFails,
    TIsSPlus2,
    TEqualsS,
    EqualPartsUnsupported,
}

/// Outcome of the feasibility checks for one instance.
///
/// The three `*_ok` flags are the classical necessary conditions for a pure
/// 5-cycle decomposition; `construction_supported` is the constructor's own
/// gate, which is strictly stronger than conditions 1 and 3.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub params: Params,
    pub parity_ok: bool,
    pub divisibility_ok: bool,
    pub bound_ok: bool,
    pub construction_supported: bool,
    pub reasons: Vec<Reason>,
}

impl FeasibilityReport {
    pub fn necessary_ok(&self) -> bool {
        self.parity_ok && self.divisibility_ok && self.bound_ok
    }

    pub fn to_text(&self) -> String {
        let p = self.params;
        let mut out = String::new();
        out.push_str(&format!("instance: {p}\n"));
        out.push_str(&format!("parity_ok: {}\n", self.parity_ok));
        out.push_str(&format!("divisibility_ok: {}\n", self.divisibility_ok));
        out.push_str(&format!("bound_ok: {}\n", self.bound_ok));
        out.push_str(&format!(
            "construction_supported: {}\n",
            self.construction_supported
        ));
        if !self.reasons.is_empty() {
            out.push_str(&format!("reasons: {:?}\n", self.reasons));
        }
        out
    }
}

fn build_report(p: &Params) -> FeasibilityReport {
    let (r, s, t) = (p.r as u64, p.s as u64, p.t as u64);
    let parity_ok = r % 2 == s % 2 && s % 2 == t % 2;
    let divisibility_ok = (r * s + r * t + s * t) % 5 == 0;
    let bound_ok = t * (r + s) <= 4 * r * s;

    let mut reasons = Vec::new();
    if !parity_ok {
        reasons.push(Reason::ParityMismatch);
    }
    if !divisibility_ok {
        reasons.push(Reason::DivisibilityFails);
    }
    if !bound_ok {
        reasons.push(Reason::BoundFails);
    }

    let all_odd = r % 2 == 1 && s % 2 == 1 && t % 2 == 1;
    let slack_ok = (t + 18) * (r + s) <= 4 * r * s;
    let mut gate = Vec::new();
    if !all_odd {
        gate.push(Reason::NotAllOdd);
    }
    if !slack_ok {
        gate.push(Reason::SlackBoundFails);
    }
    if t == s + 2 {
        gate.push(Reason::TIsSPlus2);
    }
    if t == s {
        gate.push(Reason::TEqualsS);
    }
    if r == s {
        gate.push(Reason::EqualPartsUnsupported);
    }
    let construction_supported = gate.is_empty();
    reasons.extend(gate);

    FeasibilityReport {
        params: *p,
        parity_ok,
        divisibility_ok,
        bound_ok,
        construction_supported,
        reasons,
    }
}

/// The three necessary conditions: same parity, `5 | rs+rt+st`, and
/// `t(r+s) <= 4rs`.
pub fn check_necessary(p: &Params) -> FeasibilityReport {
    build_report(p)
}

/// The constructor's gate: all sizes odd and distinct in the right way,
/// `(t+18)(r+s) <= 4rs`, `t != s+2`, `t != s`, `r < s`.
///
/// `t = s` is rejected because the extension blocks are then empty and the
/// covering rules have no cells to pair with; equal smallest parts are
/// settled elsewhere and excluded here.
pub fn check_construction_domain(p: &Params) -> FeasibilityReport {
    build_report(p)
}

/// Sanity check behind the gate: whenever `(t+18)(r+s) <= 4rs` holds with
/// `r <= s <= t`, both `r` and `s` are at least 18. Vacuously true when the
/// premise fails.
pub fn bound_forces_part_floor(p: &Params) -> bool {
    let (r, s, t) = (p.r as u64, p.s as u64, p.t as u64);
    let premise = (t + 18) * (r + s) <= 4 * r * s;
    !premise || (r >= 18 && s >= 18)
}

/// Enumerates the constructor-supported odd instances with `t <= max_t`,
/// in lexicographic order. This is the sweep domain.
pub fn supported_instances(max_t: u32) -> Vec<Params> {
    let mut out = Vec::new();
    let mut r = 19;
    while r <= max_t {
        let mut s = r + 2;
        while s <= max_t {
            let mut t = s;
            while t <= max_t {
                let p = Params::new(r, s, t).unwrap();
                if check_construction_domain(&p).construction_supported {
                    out.push(p);
                }
                t += 2;
            }
            s += 2;
        }
        r += 2;
    }
    out
}
