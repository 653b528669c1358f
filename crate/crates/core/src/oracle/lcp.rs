//! Membership test for the relaxed code polytope.
//!
//! A point `f` in `[0,1]^n` lies in the relaxation iff for every check and
//! every odd-cardinality subset `S` of its neighborhood,
//! `sum_{i in S} f_i - sum_{i in N(j)\S} f_i <= |S| - 1`.
//! Exponential in check degree, so degrees are capped.

use alloc::vec::Vec;

use crate::code::TannerGraph;
use crate::oracle::OracleError;

#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeViolation {
    pub check: usize,
    /// Bitmask over the check's neighbor list selecting the odd subset.
    pub subset: u32,
    /// Amount by which the inequality is exceeded.
    pub excess: f64,
}

/// Returns the worst violated odd-subset inequality, or `None` when `f` is
/// inside the relaxation (within `tol`). Box constraints are checked first.
pub fn polytope_violation(
    graph: &TannerGraph,
    f: &[f64],
    tol: f64,
) -> Result<Option<PolytopeViolation>, OracleError> {
    if f.len() != graph.num_vars() {
        return Err(OracleError::Shape("point length != code length"));
    }
    for &v in f {
        if !(-tol..=1.0 + tol).contains(&v) {
            return Err(OracleError::Shape("point leaves the unit box"));
        }
    }
    let mut worst: Option<PolytopeViolation> = None;
    for j in 0..graph.num_checks() {
        let members = graph.check_vars(j);
        let d = members.len();
        if d >= 31 {
            return Err(OracleError::TooLarge("check degree exceeds subset enumeration cap"));
        }
        let values: Vec<f64> = members.iter().map(|&i| f[i]).collect();
        let total: f64 = values.iter().sum();
        for mask in 0u32..(1u32 << d) {
            if mask.count_ones() % 2 == 0 {
                continue;
            }
            let inside: f64 = (0..d).filter(|&p| mask >> p & 1 == 1).map(|p| values[p]).sum();
            let lhs = inside - (total - inside);
            let excess = lhs - (mask.count_ones() as f64 - 1.0);
            if excess > tol && worst.as_ref().map_or(true, |w| excess > w.excess) {
                worst = Some(PolytopeViolation { check: j, subset: mask, excess });
            }
        }
    }
    Ok(worst)
}
