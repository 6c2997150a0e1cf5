//! Partition agreement.

use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

/// Rand index: the fraction of point pairs on which two labellings agree,
/// either placed together in both or apart in both.
///
/// Counted from the contingency table, so the cost is linear in the number of
/// points plus the number of non-empty table cells.
pub fn rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len() as u128;
    if n < 2 {
        return Err(Error::invalid(format!("the Rand index needs at least 2 points, got {n}")));
    }
    let mut rows: HashMap<&A, u128> = HashMap::new();
    let mut cols: HashMap<&B, u128> = HashMap::new();
    let mut cells: HashMap<(&A, &B), u128> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
        *cells.entry((x, y)).or_default() += 1;
    }
    let pairs = |c: u128| c * c.saturating_sub(1) / 2;
    let together_both: u128 = cells.values().copied().map(pairs).sum();
    let together_a: u128 = rows.values().copied().map(pairs).sum();
    let together_b: u128 = cols.values().copied().map(pairs).sum();
    let total = pairs(n);
    // pairs apart in both = total - together_a - together_b + together_both
    let agree = total + 2 * together_both - together_a - together_b;
    Ok(agree as f64 / total as f64)
}
