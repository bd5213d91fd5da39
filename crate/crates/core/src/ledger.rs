//! Resource accounting shared by every learner.

use std::ops::{Add, AddAssign};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Oracle calls, kernel shots and classical evaluations spent by a computation.
///
/// Ledgers only ever grow; merging is componentwise addition, so the total of
/// a run is independent of the order its parts were merged in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub oracle_queries: u64,
    pub shots: u64,
    pub classical_evaluations: u64,
}

impl QueryLedger {
    pub fn oracle(queries: u64) -> Self {
        Self {
            oracle_queries: queries,
            ..Self::default()
        }
    }

    pub fn merge(&mut self, other: &QueryLedger) {
        *self += *other;
    }
}

impl Add for QueryLedger {
    type Output = QueryLedger;

    fn add(self, rhs: Self) -> Self {
        QueryLedger {
            oracle_queries: self.oracle_queries + rhs.oracle_queries,
            shots: self.shots + rhs.shots,
            classical_evaluations: self.classical_evaluations + rhs.classical_evaluations,
        }
    }
}

impl AddAssign for QueryLedger {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for QueryLedger {
    fn sum<I: Iterator<Item = QueryLedger>>(iter: I) -> Self {
        iter.fold(QueryLedger::default(), Add::add)
    }
}

/// Shared monotone counter. Clones observe the same count.
#[derive(Debug, Clone, Default)]
pub struct QueryCounter(Arc<AtomicU64>);

impl QueryCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&self, amount: u64) {
        self.0.fetch_add(amount, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn same_as(&self, other: &QueryCounter) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counter_clones_share_state() {
        let a = QueryCounter::new();
        let b = a.clone();
        a.charge(3);
        b.charge(4);
        assert_eq!(a.get(), 7);
        assert!(a.same_as(&b));
    }

    fn ledger() -> impl Strategy<Value = QueryLedger> {
        (0u64..1 << 40, 0u64..1 << 40, 0u64..1 << 40).prop_map(|(a, b, c)| QueryLedger {
            oracle_queries: a,
            shots: b,
            classical_evaluations: c,
        })
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_commutative(a in ledger(), b in ledger(), c in ledger()) {
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a + b, b + a);
            let total: QueryLedger = [a, b, c].into_iter().sum();
            prop_assert_eq!(total, a + b + c);
        }
    }
}
