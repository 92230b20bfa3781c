use crate::discretization::Discretization;
use crate::instance::Taxon;

/// How a pendant entry was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafDecision {
    Conserve,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backpointer {
    /// The entry is infeasible.
    None,
    Leaf(LeafDecision),
    /// `left_budget` dollars and row `j` on the left child, the remainder and
    /// row `k` on the right child.
    Split { left_budget: u32, j: u32, k: u32 },
}

/// What a pendant table needs to answer reads without its score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PendantInfo {
    pub taxon: usize,
    pub cost: u64,
    pub skip_row: usize,
    pub skip_value: f64,
    pub conserve_row: usize,
    pub conserve_value: f64,
    /// Conserving changes the survival probability (`b > a`).
    pub informative: bool,
}

/// DP table of one clade: `score[b][m]` is the best expected PD of the clade
/// with `b` dollars assigned and survival probability at least `v[m]`.
/// Infeasible entries hold `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct CladeTable {
    budget: usize,
    rows: usize,
    scores: Vec<f64>,
    back: Vec<Backpointer>,
    pendant: Option<PendantInfo>,
}

impl CladeTable {
    pub(crate) fn from_parts(budget: usize, rows: usize, scores: Vec<f64>, back: Vec<Backpointer>) -> Self {
        debug_assert_eq!(scores.len(), (budget + 1) * rows);
        debug_assert_eq!(back.len(), scores.len());
        Self { budget, rows, scores, back, pendant: None }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn pendant(&self) -> Option<&PendantInfo> {
        self.pendant.as_ref()
    }

    pub fn is_pendant(&self) -> bool {
        self.pendant.is_some()
    }

    /// Whether the score matrix is still held (see [`CladeTable::release_scores`]).
    pub fn has_scores(&self) -> bool {
        !self.scores.is_empty()
    }

    /// Raw table entry.
    pub fn score(&self, b: usize, m: usize) -> f64 {
        self.scores[b * self.rows + m]
    }

    pub fn backpointer(&self, b: usize, m: usize) -> Backpointer {
        self.back[b * self.rows + m]
    }

    /// Best entry reachable with at most `b` dollars at row `m`.
    ///
    /// Combined tables are already nondecreasing in `b`, so this is the raw
    /// entry. Pendant tables only hold the exact-budget entries; unspent
    /// dollars let the skip entry stay available at every budget.
    #[inline]
    pub fn available(&self, b: usize, m: usize) -> f64 {
        match &self.pendant {
            None => self.score(b, m),
            Some(p) => {
                let mut best = f64::NEG_INFINITY;
                if p.cost > 0 && m == p.skip_row {
                    best = p.skip_value;
                }
                if b as u64 >= p.cost && m == p.conserve_row {
                    best = best.max(p.conserve_value);
                }
                best
            }
        }
    }

    pub fn available_column(&self, b: usize) -> Vec<f64> {
        (0..self.rows).map(|m| self.available(b, m)).collect()
    }

    /// Decision of a pendant read through [`CladeTable::available`].
    pub fn pendant_decision(&self, b: usize, m: usize) -> Option<LeafDecision> {
        let p = self.pendant.as_ref()?;
        if !self.available(b, m).is_finite() {
            return None;
        }
        if p.informative && m == p.conserve_row && b as u64 >= p.cost {
            Some(LeafDecision::Conserve)
        } else {
            Some(LeafDecision::Skip)
        }
    }

    /// Frees the score matrix; backpointers (and pendant reads) survive.
    pub fn release_scores(&mut self) {
        self.scores = Vec::new();
    }
}

/// Table of a pendant edge of length `length` above `taxon`:
/// `a * length` at row `pi(a)` below the cost, `b * length` at row `pi(b)`
/// from the cost on; everything else infeasible.
pub fn build_pendant_table(taxon_index: usize, taxon: &Taxon, length: f64, budget: usize, d: &Discretization) -> CladeTable {
    let rows = d.rows();
    let skip_row = d.pi_index(taxon.a);
    let conserve_row = d.pi_index(taxon.b);
    let skip_value = taxon.a * length;
    let conserve_value = taxon.b * length;
    let mut scores = vec![f64::NEG_INFINITY; (budget + 1) * rows];
    let mut back = vec![Backpointer::None; scores.len()];
    for b in 0..=budget {
        let (row, value, decision) = if (b as u64) < taxon.c {
            (skip_row, skip_value, LeafDecision::Skip)
        } else {
            (conserve_row, conserve_value, LeafDecision::Conserve)
        };
        scores[b * rows + row] = value;
        back[b * rows + row] = Backpointer::Leaf(decision);
    }
    let mut table = CladeTable::from_parts(budget, rows, scores, back);
    table.pendant = Some(PendantInfo {
        taxon: taxon_index,
        cost: taxon.c,
        skip_row,
        skip_value,
        conserve_row,
        conserve_value,
        informative: taxon.b > taxon.a,
    });
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Discretization {
        Discretization::new(0.5, 0.1, 1).unwrap()
    }

    #[test]
    fn pendant_table_reference() {
        let d = half();
        let table = build_pendant_table(0, &Taxon::new("s", 0.2, 0.9, 3), 2.0, 5, &d);
        let row_skip = d.grid_index(0.125).unwrap();
        let row_keep = d.grid_index(0.5).unwrap();
        for b in 0..=5 {
            for m in 0..d.rows() {
                let want = match (b < 3, m) {
                    (true, m) if m == row_skip => 0.4,
                    (false, m) if m == row_keep => 1.8,
                    _ => f64::NEG_INFINITY,
                };
                let got = table.score(b, m);
                assert!(got == want || (got - want).abs() < 1e-12, "b={b} m={m}: {got} vs {want}");
                assert_eq!(got.is_finite(), table.backpointer(b, m) != Backpointer::None);
            }
        }
    }

    #[test]
    fn zero_initial_probability_uses_zero_row() {
        let d = half();
        let table = build_pendant_table(0, &Taxon::new("s", 0.0, 0.9, 2), 3.0, 3, &d);
        assert_eq!(table.score(0, d.zero_index()), 0.0);
        assert_eq!(table.score(1, d.zero_index()), 0.0);
    }

    #[test]
    fn certain_survival_has_no_rounding_loss() {
        let d = half();
        let table = build_pendant_table(0, &Taxon::new("s", 0.3, 1.0, 1), 4.0, 2, &d);
        assert_eq!(table.score(1, 0), 4.0);
        assert_eq!(table.score(2, 0), 4.0);
    }

    #[test]
    fn shared_row_keeps_conserved_value() {
        let d = half();
        // pi(0.3) = pi(0.4) = 0.25
        let table = build_pendant_table(0, &Taxon::new("s", 0.3, 0.4, 1), 1.0, 2, &d);
        let row = d.grid_index(0.25).unwrap();
        assert_eq!(table.score(0, row), 0.3);
        assert_eq!(table.score(1, row), 0.4);
        assert_eq!(table.available(0, row), 0.3);
        assert_eq!(table.available(2, row), 0.4);
    }

    #[test]
    fn available_keeps_skip_entry_and_decisions() {
        let d = half();
        let table = build_pendant_table(0, &Taxon::new("s", 0.2, 0.9, 3), 2.0, 5, &d);
        let (skip, keep) = (d.grid_index(0.125).unwrap(), d.grid_index(0.5).unwrap());
        assert_eq!(table.available(4, skip), 0.4);
        assert_eq!(table.available(2, keep), f64::NEG_INFINITY);
        assert_eq!(table.pendant_decision(4, skip), Some(LeafDecision::Skip));
        assert_eq!(table.pendant_decision(4, keep), Some(LeafDecision::Conserve));
        assert_eq!(table.pendant_decision(1, keep), None);
    }

    #[test]
    fn no_op_taxon_is_never_conserved() {
        let d = half();
        let table = build_pendant_table(0, &Taxon::new("s", 0.3, 0.3, 0), 1.0, 2, &d);
        let row = d.grid_index(0.25).unwrap();
        assert_eq!(table.available(0, row), 0.3);
        assert_eq!(table.pendant_decision(2, row), Some(LeafDecision::Skip));
    }
}
