//! Exact averages kept as integer pairs.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// An arithmetic mean stored as `total / count` with `count > 0`.
///
/// Equality and ordering compare the rational values, so `7/2 == 14/4`.
/// Nothing is rounded until [`Mean::to_two_decimals`] is called.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Mean {
    pub total: u64,
    pub count: u64,
}

impl Mean {
    /// Returns `None` when `count` is zero.
    pub fn new(total: u64, count: u64) -> Option<Self> {
        (count > 0).then_some(Self { total, count })
    }

    /// Mean of an iterator of integer values; `None` when empty.
    pub fn of<I: IntoIterator<Item = u64>>(values: I) -> Option<Self> {
        let (total, count) = values
            .into_iter()
            .fold((0u64, 0u64), |(t, c), v| (t + v, c + 1));
        Self::new(total, count)
    }

    /// Hundredths rounded half-up.
    pub fn hundredths(&self) -> u64 {
        let num = self.total as u128 * 200 + self.count as u128;
        (num / (2 * self.count as u128)) as u64
    }

    /// Renders with two decimals, rounding half-up: `10/3` is `"3.33"`.
    pub fn to_two_decimals(&self) -> String {
        let h = self.hundredths();
        format!("{}.{:02}", h / 100, h % 100)
    }

    /// Integer part of the mean.
    pub fn floor(&self) -> u64 {
        self.total / self.count
    }

    pub fn as_f64(&self) -> f64 {
        self.total as f64 / self.count as f64
    }
}

impl PartialEq for Mean {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Mean {}

impl PartialOrd for Mean {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mean {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.total as u128 * other.count as u128;
        let rhs = other.total as u128 * self.count as u128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Mean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_two_decimals())
    }
}
