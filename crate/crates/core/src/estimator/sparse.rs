//! Block-sparse Cholesky for the 3×3-blocked normal equations of a pose graph.
//!
//! Ordering is greedy minimum degree on the block graph with ties broken by
//! index, so factorizations are reproducible bit for bit. The elimination
//! graph at each step gives the column structure of the factor directly.

use nalgebra::{Matrix3, Vector3};

/// Fill-reducing ordering and factor structure for a fixed block graph.
#[derive(Debug, Clone)]
pub struct BlockPattern {
    /// `perm[k]` is the original index eliminated k-th.
    perm: Vec<usize>,
    /// Inverse of `perm`.
    iperm: Vec<usize>,
    /// Strictly-lower rows of each factor column, in eliminated positions, ascending.
    cols: Vec<Vec<usize>>,
}

fn insert_sorted(v: &mut Vec<usize>, x: usize) {
    if let Err(p) = v.binary_search(&x) {
        v.insert(p, x);
    }
}

fn union_without(a: &[usize], b: &[usize], skip: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (_, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if next != skip {
            out.push(next);
        }
    }
    out
}

impl BlockPattern {
    /// `edges` lists coupled block pairs; self-pairs and duplicates are ignored.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (a, b) in edges {
            if a != b {
                insert_sorted(&mut adj[a], b);
                insert_sorted(&mut adj[b], a);
            }
        }
        let mut alive = vec![true; n];
        let mut perm = Vec::with_capacity(n);
        let mut fronts = Vec::with_capacity(n);
        for _ in 0..n {
            let v = (0..n)
                .filter(|&u| alive[u])
                .min_by_key(|&u| (adj[u].len(), u))
                .expect("a node is left");
            alive[v] = false;
            let nv = std::mem::take(&mut adj[v]);
            for &u in &nv {
                adj[u] = union_without(&adj[u], &nv, u);
                if let Ok(p) = adj[u].binary_search(&v) {
                    adj[u].remove(p);
                }
            }
            perm.push(v);
            fronts.push(nv);
        }
        let mut iperm = vec![0; n];
        for (k, &v) in perm.iter().enumerate() {
            iperm[v] = k;
        }
        let cols = fronts
            .into_iter()
            .map(|f| {
                let mut c: Vec<usize> = f.into_iter().map(|u| iperm[u]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        BlockPattern { perm, iperm, cols }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of strictly-lower blocks in the factor.
    pub fn factor_blocks(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite;

/// Symmetric block matrix with the pattern's structure, factored in place.
#[derive(Debug, Clone)]
pub struct BlockCholesky<'p> {
    pat: &'p BlockPattern,
    diag: Vec<Matrix3<f64>>,
    lower: Vec<Vec<Matrix3<f64>>>,
}

impl<'p> BlockCholesky<'p> {
    pub fn new(pat: &'p BlockPattern) -> Self {
        BlockCholesky {
            pat,
            diag: vec![Matrix3::zeros(); pat.dim()],
            lower: pat.cols.iter().map(|c| vec![Matrix3::zeros(); c.len()]).collect(),
        }
    }

    pub fn add_diag(&mut self, a: usize, m: &Matrix3<f64>) {
        self.diag[self.pat.iperm[a]] += m;
    }

    /// Adds `m` at block `(a, b)` and `mᵀ` at `(b, a)`; `a != b`.
    pub fn add_offdiag(&mut self, a: usize, b: usize, m: &Matrix3<f64>) {
        let (pa, pb) = (self.pat.iperm[a], self.pat.iperm[b]);
        let (row, col, blk) = if pa > pb { (pa, pb, *m) } else { (pb, pa, m.transpose()) };
        let k = self.pat.cols[col]
            .binary_search(&row)
            .expect("block outside the pattern");
        self.lower[col][k] += blk;
    }

    /// Adds `lambda` to every diagonal entry.
    pub fn damp(&mut self, lambda: f64) {
        for d in &mut self.diag {
            for k in 0..3 {
                d[(k, k)] += lambda;
            }
        }
    }

    /// Right-looking block factorization `A = L Lᵀ`.
    pub fn factor(&mut self) -> Result<(), NotPositiveDefinite> {
        let cols = &self.pat.cols;
        for k in 0..cols.len() {
            let l = self.diag[k].cholesky().ok_or(NotPositiveDefinite)?.unpack();
            self.diag[k] = l;
            let lt = l.transpose();
            for blk in &mut self.lower[k] {
                // Solve X Lᵀ = A_rk, i.e. L Xᵀ = A_rkᵀ.
                let xt = l.solve_lower_triangular(&blk.transpose()).ok_or(NotPositiveDefinite)?;
                debug_assert!((xt.transpose() * lt - *blk).norm() <= 1e-6 * blk.norm().max(1.0));
                *blk = xt.transpose();
            }
            let (head, tail) = self.lower.split_at_mut(k + 1);
            let col_k = &head[k];
            let rows = &cols[k];
            for (ib, &rb) in rows.iter().enumerate() {
                let lb_t = col_k[ib].transpose();
                self.diag[rb] -= col_k[ib] * lb_t;
                let target_rows = &cols[rb];
                let target = &mut tail[rb - k - 1];
                let mut p = 0;
                for ia in ib + 1..rows.len() {
                    let ra = rows[ia];
                    while target_rows[p] < ra {
                        p += 1;
                    }
                    debug_assert_eq!(target_rows[p], ra);
                    target[p] -= col_k[ia] * lb_t;
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` with the factored matrix; `b` in original indexing.
    pub fn solve(&self, b: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let pat = self.pat;
        let n = pat.dim();
        let mut y: Vec<Vector3<f64>> = pat.perm.iter().map(|&v| b[v]).collect();
        for k in 0..n {
            let yk = self.diag[k].solve_lower_triangular(&y[k]).expect("factored");
            y[k] = yk;
            for (blk, &r) in self.lower[k].iter().zip(&pat.cols[k]) {
                y[r] -= blk * yk;
            }
        }
        for k in (0..n).rev() {
            let mut t = y[k];
            for (blk, &r) in self.lower[k].iter().zip(&pat.cols[k]) {
                t -= blk.transpose() * y[r];
            }
            y[k] = self.diag[k].transpose().solve_upper_triangular(&t).expect("factored");
        }
        let mut x = vec![Vector3::zeros(); n];
        for (k, &v) in pat.perm.iter().enumerate() {
            x[v] = y[k];
        }
        x
    }
}
