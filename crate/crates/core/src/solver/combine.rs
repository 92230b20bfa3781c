use crate::discretization::{combine_prob, Discretization};
use crate::rmq::RangeMaxIndex;

use super::table::{Backpointer, CladeTable};

/// Left-child configuration fed into the inner maximization.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    budget: usize,
    row: usize,
    value: f64,
}

/// Which enumeration produced a combined table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinePath {
    General,
    /// The left child is a pendant: only its skip entry at budget 0 and its
    /// conserve entry at budget `c` are enumerated.
    Pendant,
}

/// One budget column of the right child.
enum Column {
    /// Sparse table, worth building when many candidates query the column.
    Indexed(RangeMaxIndex),
    /// Plain values. For a fixed candidate the k-intervals of successive
    /// rows partition the column, so scanning costs O(t) per candidate.
    Plain(Vec<f64>),
}

impl Column {
    /// Maximum on `[lo, hi]`, smallest index on ties.
    #[inline]
    fn max_in(&self, lo: usize, hi: usize) -> (usize, f64) {
        match self {
            Column::Indexed(rmq) => rmq.max_in(lo, hi),
            Column::Plain(values) => {
                let mut best = (lo, values[lo]);
                for (k, &v) in values.iter().enumerate().take(hi + 1).skip(lo + 1) {
                    if v > best.1 {
                        best = (k, v);
                    }
                }
                best
            }
        }
    }
}

/// Right child prepared for range-max lookups, plus the span of finite rows
/// in every budget column.
struct RightColumns {
    columns: Vec<Column>,
    spans: Vec<Option<(usize, usize)>>,
}

impl RightColumns {
    fn new(table: &CladeTable, indexed: bool) -> Self {
        let mut columns = Vec::with_capacity(table.budget() + 1);
        let mut spans = Vec::with_capacity(table.budget() + 1);
        for b in 0..=table.budget() {
            let col = table.available_column(b);
            let first = col.iter().position(|v| v.is_finite());
            let last = col.iter().rposition(|v| v.is_finite());
            spans.push(first.zip(last));
            columns.push(if indexed {
                Column::Indexed(RangeMaxIndex::from_vec(col).expect("grid has at least two rows"))
            } else {
                Column::Plain(col)
            });
        }
        Self { columns, spans }
    }
}

/// Table of an internal edge of length `length` from its children:
/// `T(b, p) = p * length + max T_l(i, j) + T_r(b - i, k)` over
/// `i <= b` and grid rows with `pi(j + k - jk) = p`.
///
/// For each `(b, i, j)` the best `k` comes from one range-max query on the
/// right child's column `b - i`, restricted to the k-interval of `(p, j)`.
/// The pendant path has O(1) candidates per budget and scans instead.
/// Ties keep the smallest `i`, then the largest `j`, then the largest `k`.
///
/// With `allow_pendant_path`, a pendant left child is enumerated through its
/// two meaningful entries only; the resulting table is identical.
pub fn combine_tables(
    length: f64,
    left: &CladeTable,
    right: &CladeTable,
    d: &Discretization,
    allow_pendant_path: bool,
) -> (CladeTable, CombinePath) {
    let budget = left.budget().min(right.budget());
    let rows = d.rows();
    let grid = d.grid();
    let path = if allow_pendant_path && left.is_pendant() {
        CombinePath::Pendant
    } else {
        CombinePath::General
    };
    let right_cols = RightColumns::new(right, path == CombinePath::General);
    let candidates: Vec<Candidate> = match path {
        CombinePath::General => (0..=budget)
            .flat_map(|i| {
                (0..rows).filter_map(move |j| {
                    let value = left.available(i, j);
                    value.is_finite().then_some(Candidate { budget: i, row: j, value })
                })
            })
            .collect(),
        CombinePath::Pendant => pendant_candidates(left, budget),
    };

    let mut scores = vec![f64::NEG_INFINITY; (budget + 1) * rows];
    let mut back = vec![Backpointer::None; scores.len()];
    let mut best = vec![f64::NEG_INFINITY; rows];
    let mut arg = vec![Backpointer::None; rows];
    for b in 0..=budget {
        best.fill(f64::NEG_INFINITY);
        arg.fill(Backpointer::None);
        for cand in candidates.iter().take_while(|c| c.budget <= b) {
            let r = b - cand.budget;
            let Some((k_first, k_last)) = right_cols.spans[r] else {
                continue;
            };
            let column = &right_cols.columns[r];
            let j = grid[cand.row];
            let p_first = d.pi_index(combine_prob(j, grid[k_first]));
            let p_last = d.pi_index(combine_prob(j, grid[k_last]));
            let k_row = d.k_row(cand.row);
            for p in p_first..=p_last {
                let Some(range) = k_row[p] else {
                    continue;
                };
                let (lo, hi) = (range.lo.max(k_first), range.hi.min(k_last));
                if lo > hi {
                    continue;
                }
                let (k, right_value) = column.max_in(lo, hi);
                if right_value == f64::NEG_INFINITY {
                    continue;
                }
                let total = cand.value + right_value;
                if total > best[p] {
                    best[p] = total;
                    arg[p] = Backpointer::Split { left_budget: cand.budget as u32, j: cand.row as u32, k: k as u32 };
                }
            }
        }
        let base = b * rows;
        for p in 0..rows {
            if best[p] > f64::NEG_INFINITY {
                scores[base + p] = grid[p] * length + best[p];
                back[base + p] = arg[p];
            }
        }
    }
    (CladeTable::from_parts(budget, rows, scores, back), path)
}

/// The skip entry at budget 0 and, when different, the conserve entry at
/// budget `c`. Any other `(i, j)` is matched by one of these at a smaller or
/// equal budget, which never loses against a nondecreasing right column.
fn pendant_candidates(left: &CladeTable, budget: usize) -> Vec<Candidate> {
    let info = left.pendant().expect("pendant table");
    let rows = left.rows();
    let mut out: Vec<Candidate> = (0..rows)
        .filter_map(|j| {
            let value = left.available(0, j);
            value.is_finite().then_some(Candidate { budget: 0, row: j, value })
        })
        .collect();
    let cost = info.cost as usize;
    if info.cost > 0 && info.cost as usize <= budget {
        for j in 0..rows {
            let value = left.available(cost, j);
            if value.is_finite() && value != left.available(0, j) {
                out.push(Candidate { budget: cost, row: j, value });
            }
        }
    }
    out
}
