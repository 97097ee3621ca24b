//! Compressed sparse column matrices and a direct LU solver.
//!
//! The solver orders columns by minimum degree on the pattern of `A + A^T` and
//! factors left-looking with threshold partial pivoting that prefers the diagonal,
//! so it handles the indefinite and saddle-point systems of this crate.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::{Error, Result};

/// Coordinate-format builder; duplicates are summed on conversion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripletMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, ..Self::default() }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.rows.push(i);
        self.cols.push(j);
        self.vals.push(v);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn to_csc(&self) -> CscMatrix {
        let (m, n) = (self.n_rows, self.n_cols);
        let mut count = vec![0usize; n + 1];
        for &j in &self.cols {
            count[j + 1] += 1;
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let mut next = count.clone();
        let mut ri = vec![0usize; self.len()];
        let mut rv = vec![0.0; self.len()];
        for k in 0..self.len() {
            let p = next[self.cols[k]];
            ri[p] = self.rows[k];
            rv[p] = self.vals[k];
            next[self.cols[k]] += 1;
        }
        // Sum duplicates within each column.
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(self.len());
        let mut values = Vec::with_capacity(self.len());
        let mut slot = vec![usize::MAX; m];
        for j in 0..n {
            let start = row_idx.len();
            for p in count[j]..count[j + 1] {
                let i = ri[p];
                if slot[i] != usize::MAX && slot[i] >= start {
                    values[slot[i]] += rv[p];
                } else {
                    slot[i] = row_idx.len();
                    row_idx.push(i);
                    values.push(rv[p]);
                }
            }
            col_ptr[j + 1] = row_idx.len();
        }
        let mut a = CscMatrix { n_rows: m, n_cols: n, col_ptr, row_idx, values };
        a.sort_indices();
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Entries as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |j| self.column(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[r.clone()].binary_search(&i) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (i, v) in self.column(j) {
                    y[i] += v * xj;
                }
            }
        }
        y
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut t = TripletMatrix::with_capacity(self.n_cols, self.n_rows, self.nnz());
        for (i, j, v) in self.triplets() {
            t.push(j, i, v);
        }
        t.to_csc()
    }

    /// Replace `A` by `diag(d) A diag(d)`.
    pub fn scale_symmetric(&mut self, d: &[f64]) {
        for j in 0..self.n_cols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                self.values[p] *= d[self.row_idx[p]] * d[j];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    fn sort_indices(&mut self) {
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for j in 0..self.n_cols {
            let r = self.col_ptr[j]..self.col_ptr[j + 1];
            if self.row_idx[r.clone()].windows(2).all(|w| w[0] < w[1]) {
                continue;
            }
            buf.clear();
            buf.extend(self.row_idx[r.clone()].iter().copied().zip(self.values[r.clone()].iter().copied()));
            buf.sort_unstable_by_key(|e| e.0);
            for (k, (i, v)) in buf.iter().enumerate() {
                self.row_idx[r.start + k] = *i;
                self.values[r.start + k] = *v;
            }
        }
    }
}

/// Symmetric equilibration: returns `d` such that every row and column of
/// `diag(d) A diag(d)` has largest entry close to one.
pub fn equilibrate(a: &CscMatrix, iterations: usize) -> Vec<f64> {
    let n = a.n_cols();
    let mut d = vec![1.0; n];
    let mut m = vec![0.0f64; n];
    for _ in 0..iterations {
        m.iter_mut().for_each(|x| *x = 0.0);
        for (i, j, v) in a.triplets() {
            let s = (d[i] * v * d[j]).abs();
            m[i] = m[i].max(s);
            m[j] = m[j].max(s);
        }
        for (di, &mi) in d.iter_mut().zip(&m) {
            if mi > 0.0 {
                *di /= libm::sqrt(mi);
            }
        }
    }
    d
}

/// Fill-reducing column order: minimum degree on the explicit elimination graph of
/// `A + A^T`, ties going to the lower index.
///
/// Each `(first, second)` in `pairs` is ordered as a single node, `first` immediately
/// before `second`. Together with [`pivot_rows`] this eliminates 2x2 saddle blocks
/// whose large entries are off the diagonal.
pub fn minimum_degree_order(a: &CscMatrix, pairs: &[(usize, usize)]) -> Vec<usize> {
    let n = a.n_cols();
    let mut rep: Vec<usize> = (0..n).collect();
    let mut second: Vec<Option<usize>> = vec![None; n];
    for &(f, s) in pairs {
        rep[s] = f;
        second[f] = Some(s);
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        let (ri, rj) = (rep[i], rep[j]);
        if ri != rj {
            adj[ri].push(rj as u32);
            adj[rj].push(ri as u32);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).filter(|&v| rep[v] == v).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut merged: Vec<u32> = Vec::new();
    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        order.push(v);
        if let Some(s) = second[v] {
            order.push(s);
        }
        let clique = core::mem::take(&mut adj[v]);
        for &w in &clique {
            let w = w as usize;
            merge_excluding(&adj[w], &clique, v as u32, w as u32, &mut merged);
            core::mem::swap(&mut adj[w], &mut merged);
            heap.push(Reverse((adj[w].len(), w)));
        }
    }
    order
}

/// Preferred pivot row of every column: the diagonal, except that the two columns of
/// each pair swap rows.
pub fn pivot_rows(n: usize, pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..n).collect();
    for &(f, s) in pairs {
        rows[f] = s;
        rows[s] = f;
    }
    rows
}

/// Sorted union of `a` and `b` without `skip1` and `skip2`.
fn merge_excluding(a: &[u32], b: &[u32], skip1: u32, skip2: u32, out: &mut Vec<u32>) {
    out.clear();
    out.reserve(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = if j == b.len() || (i < a.len() && a[i] < b[j]) {
            i += 1;
            a[i - 1]
        } else if i == a.len() || b[j] < a[i] {
            j += 1;
            b[j - 1]
        } else {
            i += 1;
            j += 1;
            a[i - 1]
        };
        if x != skip1 && x != skip2 {
            out.push(x);
        }
    }
}

/// Sparse LU factors with `P A Q = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    l: CscMatrix,
    u: CscMatrix,
    /// Row `i` of `A` is row `pinv[i]` of `P A`.
    pinv: Vec<usize>,
    q: Vec<usize>,
    off_diagonal_pivots: usize,
    min_pivot: f64,
}

impl LuFactors {
    /// Factor `A` with column order `q`. Column `j` pivots on row `preferred[j]` unless
    /// that entry is smaller than `threshold` times the largest candidate, in which case
    /// the largest candidate is taken. Pivots below `singular_tol * max|A|` raise
    /// [`Error::SingularMatrix`].
    pub fn factor(
        a: &CscMatrix,
        q: &[usize],
        preferred: &[usize],
        threshold: f64,
        singular_tol: f64,
    ) -> Result<Self> {
        let n = a.n_cols();
        if a.n_rows() != n || q.len() != n || preferred.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix with a column order of length {}",
                a.n_rows(),
                n,
                q.len()
            )));
        }
        let scale = a.max_abs();
        let guess = 4 * a.nnz() + n;
        let mut lp = vec![0usize; n + 1];
        let mut li: Vec<usize> = Vec::with_capacity(guess);
        let mut lx: Vec<f64> = Vec::with_capacity(guess);
        let mut up = vec![0usize; n + 1];
        let mut ui: Vec<usize> = Vec::with_capacity(guess);
        let mut ux: Vec<f64> = Vec::with_capacity(guess);

        const NONE: usize = usize::MAX;
        let mut pinv = vec![NONE; n];
        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![0usize; n];
        let mut stamp = 0usize;
        let mut off_diagonal_pivots = 0usize;
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            lp[k] = li.len();
            up[k] = ui.len();
            let col = q[k];

            // Nonzero pattern of L \ A(:, col) in topological order: xi[top..n].
            stamp += 1;
            let mut top = n;
            for (start, _) in a.column(col) {
                if mark[start] == stamp {
                    continue;
                }
                let mut head = 0usize;
                xi[0] = start;
                loop {
                    let j = xi[head];
                    let jnew = pinv[j];
                    if mark[j] != stamp {
                        mark[j] = stamp;
                        pstack[head] = if jnew == NONE { 0 } else { lp[jnew] };
                    }
                    let end = if jnew == NONE { 0 } else { lp[jnew + 1] };
                    let mut done = true;
                    let mut p = pstack[head];
                    while p < end {
                        let i = li[p];
                        p += 1;
                        if mark[i] != stamp {
                            pstack[head] = p;
                            head += 1;
                            xi[head] = i;
                            done = false;
                            break;
                        }
                    }
                    if done {
                        top -= 1;
                        xi[top] = j;
                        if head == 0 {
                            break;
                        }
                        head -= 1;
                    }
                }
            }

            // Sparse triangular solve.
            for &i in &xi[top..n] {
                x[i] = 0.0;
            }
            for (i, v) in a.column(col) {
                x[i] = v;
            }
            for px in top..n {
                let j = xi[px];
                let jn = pinv[j];
                if jn == NONE {
                    continue;
                }
                let xj = x[j];
                // Column jn of L starts with its unit diagonal.
                for p in lp[jn] + 1..lp[jn + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }

            // Pivot selection.
            let mut ipiv = NONE;
            let mut amax = -1.0;
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    if x[i].abs() > amax {
                        amax = x[i].abs();
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || amax <= singular_tol * scale || !amax.is_finite() {
                return Err(Error::SingularMatrix { step: k, pivot: amax.max(0.0) });
            }
            let want = preferred[col];
            if pinv[want] == NONE && mark[want] == stamp && x[want].abs() >= threshold * amax {
                ipiv = want;
            }
            if ipiv != want {
                off_diagonal_pivots += 1;
            }
            let pivot = x[ipiv];
            min_pivot = min_pivot.min(pivot.abs());
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(1.0);
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        lp[n] = li.len();
        up[n] = ui.len();
        for i in li.iter_mut() {
            *i = pinv[*i];
        }
        let l = CscMatrix { n_rows: n, n_cols: n, col_ptr: lp, row_idx: li, values: lx };
        let u = CscMatrix { n_rows: n, n_cols: n, col_ptr: up, row_idx: ui, values: ux };
        Ok(Self { n, l, u, pinv, q: q.to_vec(), off_diagonal_pivots, min_pivot })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Columns whose pivot is not the preferred row.
    pub fn off_diagonal_pivots(&self) -> usize {
        self.off_diagonal_pivots
    }

    /// Smallest pivot magnitude.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Number of stored entries in `L` and `U`.
    pub fn nnz(&self) -> usize {
        self.l.nnz() + self.u.nnz()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for (i, v) in self.l.column(j).skip(1) {
                    y[i] -= v * yj;
                }
            }
        }
        for j in (0..self.n).rev() {
            // The diagonal of U is stored last in its column.
            let r = self.u.col_ptr[j]..self.u.col_ptr[j + 1];
            y[j] /= self.u.values[r.end - 1];
            let yj = y[j];
            if yj != 0.0 {
                for p in r.start..r.end - 1 {
                    y[self.u.row_idx[p]] -= self.u.values[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (k, &c) in self.q.iter().enumerate() {
            x[c] = y[k];
        }
        x
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}
