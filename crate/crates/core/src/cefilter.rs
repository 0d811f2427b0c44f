//! Comparative elimination (CE) filter.
//!
//! An agent sorts the `n - 1` estimates it received by Euclidean distance from
//! its own estimate and drops the `f` farthest. Equal distances are ordered by
//! ascending sender id, so the output does not depend on arrival order.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{check_dim, Error, Result};
use crate::{AgentId, Point};

/// One received estimate together with its distance from the filtering
/// agent's own estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub sender: AgentId,
    pub value: Point,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// The `n - f - 1` closest estimates, nearest first.
    pub kept: Vec<Received>,
    /// The `f` farthest estimates, nearest first.
    pub eliminated: Vec<Received>,
}

impl FilterResult {
    pub fn kept_ids(&self) -> Vec<AgentId> {
        self.kept.iter().map(|r| r.sender).collect()
    }

    pub fn eliminated_ids(&self) -> Vec<AgentId> {
        self.eliminated.iter().map(|r| r.sender).collect()
    }

    pub fn kept_values(&self) -> Vec<Point> {
        self.kept.iter().map(|r| r.value.clone()).collect()
    }
}

fn by_distance_then_id(a: &Received, b: &Received) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.sender.cmp(&b.sender))
}

/// Applies the CE filter for one agent in a network of `n` agents with fault
/// budget `f`.
///
/// `received` must hold exactly one entry per other agent (`n - 1` entries,
/// any order).
pub fn apply_ce_filter(
    own: &Point,
    received: &[(AgentId, Point)],
    n: usize,
    f: usize,
) -> Result<FilterResult> {
    if f >= n {
        return Err(Error::Argument(format!("fault budget f={f} must be below n={n}")));
    }
    if received.len() + 1 != n {
        return Err(Error::Protocol(format!(
            "inbox holds {} estimates, expected n - 1 = {}",
            received.len(),
            n - 1
        )));
    }
    let mut seen = BTreeSet::new();
    let mut sorted = Vec::with_capacity(received.len());
    for (sender, value) in received {
        if !seen.insert(*sender) {
            return Err(Error::Protocol(format!("duplicate sender {sender} in inbox")));
        }
        check_dim(own.len(), value.len())?;
        sorted.push(Received {
            sender: *sender,
            value: value.clone(),
            distance: (own - value).norm(),
        });
    }
    sorted.sort_by(by_distance_then_id);

    let eliminated = sorted.split_off(n - f - 1);
    Ok(FilterResult {
        kept: sorted,
        eliminated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn inbox(entries: &[(AgentId, f64)]) -> Vec<(AgentId, Point)> {
        entries.iter().map(|&(id, v)| (id, p(&[v]))).collect()
    }

    #[test]
    fn zero_budget_keeps_everything() {
        let received = inbox(&[(2, 5.0), (3, -1.0), (4, 0.5)]);
        let out = apply_ce_filter(&p(&[0.0]), &received, 4, 0).unwrap();
        assert_eq!(out.kept.len(), 3);
        assert!(out.eliminated.is_empty());
    }

    #[test]
    fn drops_the_farthest() {
        let received = inbox(&[(1, 1.0), (2, 3.0), (3, 2.0)]);
        let out = apply_ce_filter(&p(&[0.0]), &received, 4, 1).unwrap();
        assert_eq!(out.kept_ids(), vec![1, 3]);
        assert_eq!(out.eliminated_ids(), vec![2]);
    }

    #[test]
    fn ties_break_by_sender_id() {
        let received = inbox(&[(1, 2.0), (2, -2.0), (3, 1.0)]);
        let out = apply_ce_filter(&p(&[0.0]), &received, 4, 1).unwrap();
        assert_eq!(out.kept_ids(), vec![3, 1]);
        assert_eq!(out.eliminated_ids(), vec![2]);

        let reversed: Vec<_> = received.into_iter().rev().collect();
        let again = apply_ce_filter(&p(&[0.0]), &reversed, 4, 1).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn wrong_inbox_size_is_a_protocol_error() {
        let received = inbox(&[(1, 1.0), (2, 3.0)]);
        assert!(matches!(
            apply_ce_filter(&p(&[0.0]), &received, 4, 1),
            Err(Error::Protocol(_))
        ));
        let dup = inbox(&[(1, 1.0), (1, 3.0), (2, 0.0)]);
        assert!(matches!(
            apply_ce_filter(&p(&[0.0]), &dup, 4, 1),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn dimension_and_budget_errors() {
        let received = vec![(1, p(&[1.0, 2.0])), (2, p(&[1.0]))];
        assert!(matches!(
            apply_ce_filter(&p(&[0.0]), &received, 3, 1),
            Err(Error::Dimension { .. })
        ));
        let received = inbox(&[(1, 1.0), (2, 3.0)]);
        assert!(matches!(
            apply_ce_filter(&p(&[0.0]), &received, 3, 3),
            Err(Error::Argument(_))
        ));
    }

    fn arb_inbox() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, usize)> {
        (2usize..=7, 1usize..=3).prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(-5.0..5.0f64, d),
                prop::collection::vec(prop::collection::vec(-5.0..5.0f64, d), n - 1),
                0..n,
            )
        })
    }

    proptest! {
        #[test]
        fn kept_distances_dominate((own, values, f) in arb_inbox()) {
            let n = values.len() + 1;
            let received: Vec<_> = values.iter().enumerate().map(|(k, v)| (k + 1, p(v))).collect();
            let out = apply_ce_filter(&p(&own), &received, n, f).unwrap();
            prop_assert_eq!(out.kept.len(), n - f - 1);
            prop_assert_eq!(out.eliminated.len(), f);
            let worst_kept = out.kept.iter().map(|r| r.distance).fold(f64::NEG_INFINITY, f64::max);
            let best_dropped = out.eliminated.iter().map(|r| r.distance).fold(f64::INFINITY, f64::min);
            prop_assert!(worst_kept <= best_dropped);
        }

        #[test]
        fn output_ignores_arrival_order((own, values, f) in arb_inbox(), shift in 0usize..7) {
            let n = values.len() + 1;
            let received: Vec<_> = values.iter().enumerate().map(|(k, v)| (k + 1, p(v))).collect();
            let mut rotated = received.clone();
            rotated.rotate_left(shift % received.len());
            rotated.reverse();
            prop_assert_eq!(
                apply_ce_filter(&p(&own), &received, n, f).unwrap(),
                apply_ce_filter(&p(&own), &rotated, n, f).unwrap()
            );
        }
    }
}
