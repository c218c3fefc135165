//! Simulated time. Runs count whole seconds from zero; the daily demand
//! models work on the fraction of the current day.

use serde::{Deserialize, Serialize};
use std::fmt;

pub const DAY_SECONDS: u64 = 86_400;

/// Seconds since the start of the run.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    #[inline]
    pub fn seconds(self) -> u64 {
        self.0
    }

    /// Fraction of the current day in [0, 1).
    #[inline]
    pub fn day_fraction(self) -> f64 {
        (self.0 % DAY_SECONDS) as f64 / DAY_SECONDS as f64
    }

    #[inline]
    pub fn saturating_sub(self, other: SimTime) -> u64 {
        self.0.saturating_sub(other.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

impl std::ops::Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: u64) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn day_fraction_basics() {
        assert_eq!(SimTime(0).day_fraction(), 0.0);
        assert_eq!(SimTime(21_600).day_fraction(), 0.25);
        assert_eq!(SimTime(DAY_SECONDS).day_fraction(), 0.0);
    }

    proptest! {
        #[test]
        fn day_fraction_is_periodic(s in 0u64..u64::MAX - DAY_SECONDS) {
            prop_assert_eq!(
                SimTime(s).day_fraction(),
                SimTime(s + DAY_SECONDS).day_fraction()
            );
        }

        #[test]
        fn day_fraction_in_unit_interval(s in any::<u64>()) {
            let f = SimTime(s).day_fraction();
            prop_assert!((0.0..1.0).contains(&f));
        }
    }
}
