//! Decomposition of sparse matrices into 1-sparse parts.

use crate::graph::RMatrix;

/// One 1-sparse part: column `j` holds `values[j]` in row `perm[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneSparsePart {
    /// `c(j)`; a bijection on `0..dim`.
    pub perm: Vec<usize>,
    /// `M[c(j), j]`, zero on completion entries.
    pub values: Vec<f64>,
    /// True where the entry is a nonzero of the source matrix.
    pub support: Vec<bool>,
}

impl OneSparsePart {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn to_matrix(&self) -> RMatrix {
        let n = self.dim();
        let mut m = RMatrix::zeros(n, n);
        for j in 0..n {
            m[(self.perm[j], j)] = self.values[j];
        }
        m
    }

    /// `c⁻¹`, mapping a row back to its column.
    pub fn inverse_perm(&self) -> Vec<usize> {
        let mut inv = vec![0; self.dim()];
        for (j, &r) in self.perm.iter().enumerate() {
            inv[r] = j;
        }
        inv
    }

    pub fn is_identity_perm(&self) -> bool {
        self.perm.iter().enumerate().all(|(j, &r)| j == r)
    }

    /// Same part after renaming index `j` to `relabel[j]`.
    pub fn relabeled(&self, relabel: &[usize]) -> Self {
        let n = self.dim();
        let mut perm = vec![0; n];
        let mut values = vec![0.0; n];
        let mut support = vec![false; n];
        for j in 0..n {
            perm[relabel[j]] = relabel[self.perm[j]];
            values[relabel[j]] = self.values[j];
            support[relabel[j]] = self.support[j];
        }
        Self { perm, values, support }
    }

    /// Identity permutation with unit values.
    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect(), values: vec![1.0; n], support: vec![true; n] }
    }
}

/// Parts whose elementwise sum is the source matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OneSparseDecomposition {
    pub dim: usize,
    pub parts: Vec<OneSparsePart>,
}

impl OneSparseDecomposition {
    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn reconstruct(&self) -> RMatrix {
        self.parts.iter().fold(RMatrix::zeros(self.dim, self.dim), |acc, p| acc + p.to_matrix())
    }
}

/// Largest nonzero count over rows and columns.
pub fn max_line_nnz(m: &RMatrix) -> usize {
    let rows = (0..m.nrows()).map(|i| m.row(i).iter().filter(|v| **v != 0.0).count());
    let cols = (0..m.ncols()).map(|j| m.column(j).iter().filter(|v| **v != 0.0).count());
    rows.chain(cols).max().unwrap_or(0)
}

/// Splits a square matrix into 1-sparse parts.
///
/// Nonzeros are edges of the row/column bipartite graph; a proper edge
/// colouring with alternating-path recolouring uses exactly `s` colours
/// (`s` = max nonzeros in a line). Each colour class is then completed to a
/// full permutation with explicit zero entries.
pub fn one_sparse_decompose(m: &RMatrix) -> OneSparseDecomposition {
    assert_eq!(m.nrows(), m.ncols(), "decomposition needs a square matrix");
    let n = m.nrows();
    let s = max_line_nnz(m);
    // row_col[r][colour] = column, col_row[c][colour] = row.
    let mut row_col: Vec<Vec<Option<usize>>> = vec![vec![None; s]; n];
    let mut col_row: Vec<Vec<Option<usize>>> = vec![vec![None; s]; n];
    for c in 0..n {
        for r in 0..n {
            if m[(r, c)] == 0.0 {
                continue;
            }
            let a = (0..s).find(|&k| row_col[r][k].is_none()).expect("row has a free colour");
            let b = (0..s).find(|&k| col_row[c][k].is_none()).expect("column has a free colour");
            if col_row[c][a].is_some() {
                // Flip the a/b alternating path starting at column c so that
                // colour a becomes free there. The path cannot reach row r.
                let mut path = Vec::new();
                let mut at_col = true;
                let mut v = c;
                let mut colour = a;
                loop {
                    let next = if at_col { col_row[v][colour] } else { row_col[v][colour] };
                    let Some(w) = next else { break };
                    path.push(if at_col { (w, v, colour) } else { (v, w, colour) });
                    v = w;
                    at_col = !at_col;
                    colour = if colour == a { b } else { a };
                }
                for &(pr, pc, k) in &path {
                    row_col[pr][k] = None;
                    col_row[pc][k] = None;
                }
                for &(pr, pc, k) in &path {
                    let flipped = if k == a { b } else { a };
                    row_col[pr][flipped] = Some(pc);
                    col_row[pc][flipped] = Some(pr);
                }
            }
            row_col[r][a] = Some(c);
            col_row[c][a] = Some(r);
        }
    }
    let parts = (0..s)
        .map(|k| {
            let mut perm = vec![usize::MAX; n];
            let mut support = vec![false; n];
            let mut row_used = vec![false; n];
            for c in 0..n {
                if let Some(r) = col_row[c][k] {
                    perm[c] = r;
                    support[c] = true;
                    row_used[r] = true;
                }
            }
            let mut free_rows = (0..n).filter(|&r| !row_used[r]);
            for p in perm.iter_mut().filter(|p| **p == usize::MAX) {
                *p = free_rows.next().expect("matching completes");
            }
            let values = (0..n).map(|c| if support[c] { m[(perm[c], c)] } else { 0.0 }).collect();
            OneSparsePart { perm, values, support }
        })
        .collect();
    OneSparseDecomposition { dim: n, parts }
}
