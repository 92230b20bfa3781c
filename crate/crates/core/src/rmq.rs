//! Range-maximum queries over a score column.
//!
//! Sparse table of argmax indices: level `l` stores, for every start `i`,
//! the index of the maximum over `[i, i + 2^l)`. Ties resolve to the smaller
//! index, which the DP relies on for deterministic backpointers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RmqError {
    #[error("cannot build a range-max index over an empty sequence")]
    Empty,
    #[error("invalid query range [{lo}, {hi}] for length {len}")]
    Range { lo: usize, hi: usize, len: usize },
}

#[derive(Debug, Clone)]
pub struct RangeMaxIndex {
    values: Vec<f64>,
    levels: Vec<Vec<u32>>,
}

impl RangeMaxIndex {
    pub fn build(values: &[f64]) -> Result<Self, RmqError> {
        if values.is_empty() {
            return Err(RmqError::Empty);
        }
        Ok(Self::build_unchecked(values.to_vec()))
    }

    fn build_unchecked(values: Vec<f64>) -> Self {
        let len = values.len();
        let mut levels: Vec<Vec<u32>> = vec![(0..len as u32).collect()];
        let mut width = 1;
        while width * 2 <= len {
            let prev = levels.last().unwrap();
            let next: Vec<u32> = (0..=len - width * 2)
                .map(|i| pick(&values, prev[i], prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        Self { values, levels }
    }

    /// Builds from an owned column without copying.
    pub fn from_vec(values: Vec<f64>) -> Result<Self, RmqError> {
        if values.is_empty() {
            return Err(RmqError::Empty);
        }
        Ok(Self::build_unchecked(values))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Maximal value on `[lo, hi]` and its smallest index. An all `-inf`
    /// range yields `(lo, -inf)`.
    pub fn query_max(&self, lo: usize, hi: usize) -> Result<(usize, f64), RmqError> {
        if lo > hi || hi >= self.values.len() {
            return Err(RmqError::Range { lo, hi, len: self.values.len() });
        }
        Ok(self.max_in(lo, hi))
    }

    /// Unchecked variant of [`RangeMaxIndex::query_max`] for hot loops.
    #[inline]
    pub fn max_in(&self, lo: usize, hi: usize) -> (usize, f64) {
        debug_assert!(lo <= hi && hi < self.values.len());
        let span = hi - lo + 1;
        let level = (usize::BITS - 1 - span.leading_zeros()) as usize;
        let row = &self.levels[level];
        let m = pick(&self.values, row[lo], row[hi + 1 - (1 << level)]) as usize;
        (m, self.values[m])
    }
}

#[inline]
fn pick(values: &[f64], a: u32, b: u32) -> u32 {
    let (va, vb) = (values[a as usize], values[b as usize]);
    if vb > va || (vb == va && b < a) {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(values: &[f64], lo: usize, hi: usize) -> (usize, f64) {
        let mut best = lo;
        for m in lo..=hi {
            if values[m] > values[best] {
                best = m;
            }
        }
        (best, values[best])
    }

    #[test]
    fn singleton() {
        let rmq = RangeMaxIndex::build(&[5.0]).unwrap();
        assert_eq!(rmq.query_max(0, 0).unwrap(), (0, 5.0));
    }

    #[test]
    fn hand_case() {
        let rmq = RangeMaxIndex::build(&[3.0, 1.0, 4.0, 1.0, 5.0]).unwrap();
        assert_eq!(rmq.query_max(1, 3).unwrap(), (2, 4.0));
        assert_eq!(rmq.query_max(0, 4).unwrap(), (4, 5.0));
    }

    #[test]
    fn ties_go_to_smallest_index() {
        let rmq = RangeMaxIndex::build(&[2.0; 9]).unwrap();
        for lo in 0..9 {
            for hi in lo..9 {
                assert_eq!(rmq.query_max(lo, hi).unwrap().0, lo);
            }
        }
    }

    #[test]
    fn all_negative_infinity() {
        let rmq = RangeMaxIndex::build(&[1.0, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap();
        assert_eq!(rmq.query_max(1, 3).unwrap(), (1, f64::NEG_INFINITY));
    }

    #[test]
    fn errors() {
        assert_eq!(RangeMaxIndex::build(&[]).unwrap_err(), RmqError::Empty);
        let rmq = RangeMaxIndex::build(&[1.0, 2.0]).unwrap();
        assert!(rmq.query_max(1, 0).is_err());
        assert!(rmq.query_max(0, 2).is_err());
    }

    #[test]
    fn exhaustive_small_arrays() {
        // Small value alphabet to force plenty of ties.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for len in 1..=64usize {
            let values: Vec<f64> = (0..len)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    match state % 5 {
                        0 => f64::NEG_INFINITY,
                        r => r as f64,
                    }
                })
                .collect();
            let rmq = RangeMaxIndex::build(&values).unwrap();
            for lo in 0..len {
                for hi in lo..len {
                    assert_eq!(rmq.query_max(lo, hi).unwrap(), scan(&values, lo, hi), "len={len} [{lo},{hi}]");
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn matches_linear_scan(values in proptest::collection::vec(-1e6f64..1e6, 1..400), a in 0usize..400, b in 0usize..400) {
            let len = values.len();
            let (lo, hi) = { let (x, y) = (a % len, b % len); (x.min(y), x.max(y)) };
            let rmq = RangeMaxIndex::build(&values).unwrap();
            proptest::prop_assert_eq!(rmq.query_max(lo, hi).unwrap(), scan(&values, lo, hi));
            // Repeated queries are stable.
            proptest::prop_assert_eq!(rmq.query_max(lo, hi).unwrap(), rmq.query_max(lo, hi).unwrap());
        }
    }
}
