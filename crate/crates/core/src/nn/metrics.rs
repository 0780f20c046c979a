use alloc::vec::Vec;

use crate::{Error, Result};

/// How pairs with equal scores count towards the Mann-Whitney statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Only strictly greater positive scores count.
    #[default]
    Strict,
    /// Ties count one half.
    Half,
}

/// Area under the ROC curve as the fraction of (positive, negative) pairs in
/// which the positive scores higher.
///
/// Runs in `O((m + n) log n)` by sorting the negatives; the pair count is
/// exact, so the result equals the direct double loop bit for bit.
pub fn auc_mann_whitney(pos: &[f64], neg: &[f64], ties: TieRule) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut sorted: Vec<f64> = neg.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Twice the (possibly half-weighted) pair count, kept integral.
    let mut doubled: u128 = 0;
    for &x in pos {
        let below = sorted.partition_point(|&y| y < x) as u128;
        doubled += 2 * below;
        if ties == TieRule::Half {
            let upto = sorted.partition_point(|&y| y <= x) as u128;
            doubled += upto - below;
        }
    }
    let pairs = pos.len() as u128 * neg.len() as u128;
    Ok(doubled as f64 / (2 * pairs) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(auc_mann_whitney(&[0.9, 0.8], &[0.1, 0.2], TieRule::Strict).unwrap(), 1.0);
        assert_eq!(auc_mann_whitney(&[0.7, 0.3], &[0.5, 0.1], TieRule::Strict).unwrap(), 0.75);
        assert_eq!(auc_mann_whitney(&[0.5], &[0.5], TieRule::Strict).unwrap(), 0.0);
        assert_eq!(auc_mann_whitney(&[0.5], &[0.5], TieRule::Half).unwrap(), 0.5);
    }

    #[test]
    fn empty_lists_are_rejected() {
        assert!(auc_mann_whitney(&[], &[0.1], TieRule::Strict).is_err());
        assert!(auc_mann_whitney(&[0.1], &[], TieRule::Strict).is_err());
    }
}
