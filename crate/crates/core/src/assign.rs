//! Gated minimum-cost assignment plus the two distance primitives.
//!
//! Association between tracks and detections is phrased as a rectangular
//! assignment problem. Infeasible pairs (failed gate, category mismatch) are
//! marked with the sentinel cost [`GATE`]; the solver treats the sentinel as a
//! hard exclusion, so a gated pair is never part of the returned matching.
//!
//! Among matchings that use only feasible pairs, the solver maximizes the
//! number of matched pairs first and minimizes the summed cost second. Because
//! [`GATE`] dwarfs any realizable sum of feasible costs, one run of a plain
//! min-cost solver on the sentinel-padded square matrix yields exactly that
//! ordering; the sentinel pairs are stripped from the result afterwards.
//!
//! Exact cost ties are resolved toward the lexicographically smallest
//! `(row, column)` pair sequence, which keeps outputs stable across runs and
//! platforms.

use crate::error::Error;
use crate::model::{BoundingBox, Embedding};
use crate::Result;

/// Sentinel cost marking an infeasible pair. Feasible costs must stay strictly
/// below this value; appearance and IoU costs live in `[0, 2]`.
pub const GATE: f64 = 1e9;

/// Dense row-major cost matrix for one association round.
///
/// Rows conventionally index tracks and columns detections. Cells default to
/// [`GATE`]; builders only write the feasible entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    /// Matrix of the given shape with every cell infeasible.
    pub fn new(rows: usize, cols: usize) -> Self {
        CostMatrix {
            rows,
            cols,
            costs: vec![GATE; rows * cols],
        }
    }

    /// Builds each cell from a closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = CostMatrix::new(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Cost at `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.costs[row * self.cols + col]
    }

    /// Writes a cost; finite values only, anything `>= GATE` is stored as the
    /// exact sentinel so feasibility tests stay unambiguous.
    pub fn set(&mut self, row: usize, col: usize, cost: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        debug_assert!(cost.is_finite(), "assignment costs must be finite");
        self.costs[row * self.cols + col] = if cost >= GATE { GATE } else { cost };
    }

    /// True when the cell is the infeasible sentinel.
    pub fn is_gated(&self, row: usize, col: usize) -> bool {
        self.get(row, col) >= GATE
    }
}

/// Solves the gated assignment problem.
///
/// Returns matched `(row, col)` pairs sorted by row. Properties:
///
/// * only feasible cells (cost `< GATE`) appear in the result;
/// * each row and each column is used at most once;
/// * the matching has maximum cardinality over feasible cells, and the
///   minimum summed cost among matchings of that cardinality;
/// * exact cost ties break toward the lexicographically smallest pair
///   sequence.
///
/// Runs the O(n³) shortest-augmenting-path method on a square matrix padded
/// with zero-cost virtual cells.
pub fn solve_assignment(matrix: &CostMatrix) -> Vec<(usize, usize)> {
    let n = matrix.rows();
    let m = matrix.cols();
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let dim = n.max(m);
    // Padded square lookup: cells outside the real matrix are free. A real row
    // prefers a free virtual column over any gated real cell, which is what
    // guarantees gated pairs lose to staying unmatched.
    let cost = |r: usize, c: usize| -> f64 {
        if r < n && c < m {
            matrix.get(r, c)
        } else {
            0.0
        }
    };

    // Shortest augmenting path with row/column potentials (1-based arrays;
    // index 0 is the virtual start column of each augmentation).
    let mut u = vec![0.0f64; dim + 1];
    let mut v = vec![0.0f64; dim + 1];
    let mut row_of_col = vec![0usize; dim + 1];
    let mut way = vec![0usize; dim + 1];
    for i in 1..=dim {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; dim + 1];
        let mut used = vec![false; dim + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=dim {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=dim {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 1..=dim {
        let i = row_of_col[j];
        if i >= 1 && i <= n && j <= m && matrix.get(i - 1, j - 1) < GATE {
            pairs.push((i - 1, j - 1));
        }
    }
    pairs.sort_unstable();
    lex_polish(matrix, &mut pairs);
    pairs
}

/// Rewrites the matching toward the lexicographically smallest pair sequence
/// among exactly cost-equal optima. Each rewrite strictly decreases the
/// sequence in lexicographic order, so the loop terminates.
fn lex_polish(matrix: &CostMatrix, pairs: &mut Vec<(usize, usize)>) {
    let n = matrix.rows();
    let m = matrix.cols();
    loop {
        let mut changed = false;

        // Move a match to a smaller unmatched row at identical cost.
        let mut matched_rows = vec![false; n];
        for &(r, _) in pairs.iter() {
            matched_rows[r] = true;
        }
        for idx in 0..pairs.len() {
            let (r, c) = pairs[idx];
            for r2 in 0..r {
                if !matched_rows[r2] && matrix.get(r2, c) < GATE && matrix.get(r2, c) == matrix.get(r, c)
                {
                    matched_rows[r] = false;
                    matched_rows[r2] = true;
                    pairs[idx] = (r2, c);
                    changed = true;
                    break;
                }
            }
        }

        // Move a match to a smaller unmatched column at identical cost.
        let mut matched_cols = vec![false; m];
        for &(_, c) in pairs.iter() {
            matched_cols[c] = true;
        }
        for idx in 0..pairs.len() {
            let (r, c) = pairs[idx];
            for c2 in 0..c {
                if !matched_cols[c2] && matrix.get(r, c2) < GATE && matrix.get(r, c2) == matrix.get(r, c)
                {
                    matched_cols[c] = false;
                    matched_cols[c2] = true;
                    pairs[idx] = (r, c2);
                    changed = true;
                    break;
                }
            }
        }

        // Swap columns between two matches when the exchange is exactly
        // cost-neutral, both new cells are feasible, and the swap lowers the
        // lexicographic order of the row-sorted sequence.
        pairs.sort_unstable();
        'outer: for a in 0..pairs.len() {
            for b in (a + 1)..pairs.len() {
                let (r1, c1) = pairs[a];
                let (r2, c2) = pairs[b];
                if c2 < c1
                    && matrix.get(r1, c2) < GATE
                    && matrix.get(r2, c1) < GATE
                    && matrix.get(r1, c2) + matrix.get(r2, c1)
                        == matrix.get(r1, c1) + matrix.get(r2, c2)
                {
                    pairs[a] = (r1, c2);
                    pairs[b] = (r2, c1);
                    changed = true;
                    break 'outer;
                }
            }
        }

        if !changed {
            break;
        }
    }
    pairs.sort_unstable();
}

/// Cosine distance `1 - a · b` between two unit embeddings, clamped to `[0, 2]`.
///
/// # Errors
///
/// [`Error::DimensionMismatch`] when the embeddings differ in width.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let dot = a.dot(b)?;
    Ok((1.0 - dot).clamp(0.0, 2.0))
}

/// Intersection-over-union of two boxes, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

// ===========================================================================
// Tests
// ===========================================================================
