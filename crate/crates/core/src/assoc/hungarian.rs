//! Minimum-cost assignment (Kuhn-Munkres with potentials).
//!
//! Rectangular inputs are padded with zero-cost dummy rows or columns, which
//! adds the same constant to every complete assignment. Among all optimal
//! assignments the lexicographically smallest one (by column of row 0, then
//! row 1, ...) is returned, so the result only depends on the input values.

use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row, `min(rows, cols)` of them.
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

/// Solves the assignment problem for a row-major `rows x cols` matrix.
///
/// Entries must be finite.
pub fn hungarian<R: AsRef<[f64]>>(costs: &[R]) -> Assignment {
    let rows = costs.len();
    let cols = costs.first().map_or(0, |r| r.as_ref().len());
    if rows == 0 || cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            total: 0.0,
        };
    }
    let n = rows.max(cols);
    let mut a = vec![vec![0.0; n]; n];
    let mut max_abs = 0.0f64;
    for (i, row) in costs.iter().enumerate() {
        let row = row.as_ref();
        assert_eq!(row.len(), cols, "ragged cost matrix");
        for (j, &c) in row.iter().enumerate() {
            debug_assert!(c.is_finite(), "non-finite cost at ({i}, {j})");
            a[i][j] = c;
            max_abs = max_abs.max(c.abs());
        }
    }

    let (u, v, mut col_of_row) = solve_square(&a);
    let tol = 1e-9 * (1.0 + max_abs);
    let tight = |i: usize, j: usize| a[i][j] - u[i] - v[j] <= tol;
    lexicographic_refine(n, &tight, &mut col_of_row);

    let pairs: Vec<(usize, usize)> = col_of_row
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < rows && j < cols)
        .map(|(i, &j)| (i, j))
        .collect();
    let total = pairs.iter().map(|&(i, j)| a[i][j]).sum();
    Assignment { pairs, total }
}

/// Shortest augmenting path solver. Returns row potentials, column
/// potentials and the row -> column matching.
fn solve_square(a: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = a.len();
    // 1-based internally; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[p[j] - 1] = j - 1;
    }
    (u[1..].to_vec(), v[1..].to_vec(), col_of_row)
}

/// Every optimal assignment is a perfect matching of the tight-edge graph.
/// Walk rows in order and move each to its smallest tight column for which
/// the unfixed rows can still be rematched.
fn lexicographic_refine(n: usize, tight: &dyn Fn(usize, usize) -> bool, col_of_row: &mut [usize]) {
    let mut row_of_col = vec![0usize; n];
    for (i, &j) in col_of_row.iter().enumerate() {
        row_of_col[j] = i;
    }
    for r in 0..n {
        for c in 0..n {
            if c == col_of_row[r] {
                break;
            }
            if !tight(r, c) || row_of_col[c] < r {
                continue;
            }
            let freed = col_of_row[r];
            let start = row_of_col[c];
            if let Some(path) = alternating_path(n, r, start, c, freed, tight, col_of_row, &row_of_col) {
                // path: rows [start, z1, z2, ...] with the columns they take next
                for &(row, col) in &path {
                    col_of_row[row] = col;
                    row_of_col[col] = row;
                }
                col_of_row[r] = c;
                row_of_col[c] = r;
                break;
            }
        }
    }
}

/// BFS from `start` (rows > `fixed` only) to the column `target`, never
/// using `reserved`. Returns the `(row, new column)` reassignments.
#[allow(clippy::too_many_arguments)]
fn alternating_path(
    n: usize,
    fixed: usize,
    start: usize,
    reserved: usize,
    target: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    col_of_row: &[usize],
    row_of_col: &[usize],
) -> Option<Vec<(usize, usize)>> {
    // parent[col] = row that reached it
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut queue = VecDeque::from([start]);
    let mut seen_row = vec![false; n];
    seen_row[start] = true;
    while let Some(x) = queue.pop_front() {
        for y in 0..n {
            if y == reserved || parent[y].is_some() || y == col_of_row[x] || !tight(x, y) {
                continue;
            }
            parent[y] = Some(x);
            if y == target {
                let mut moves = Vec::new();
                let mut col = y;
                loop {
                    let row = parent[col].expect("broken alternating path");
                    moves.push((row, col));
                    if row == start {
                        return Some(moves);
                    }
                    col = col_of_row[row];
                }
            }
            let z = row_of_col[y];
            if z > fixed && !seen_row[z] {
                seen_row[z] = true;
                queue.push_back(z);
            }
        }
    }
    None
}
