//! Compressed-row matrices, reverse Cuthill–McKee ordering and an envelope
//! (skyline) LU factorization without pivoting.
//!
//! The LU is meant for structurally symmetric matrices whose symmetric part
//! is positive definite (SPD stiffness matrices, and the APS block system
//! after negating its second block row), for which every leading principal
//! minor is nonsingular and no pivoting is needed.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pivots smaller than this times the largest entry of their row fail.
pub const PIVOT_THRESHOLD: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Zero matrix with the given sparsity pattern; columns of every row
    /// must be sorted and unique.
    pub fn from_pattern(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        debug_assert_eq!(row_ptr.len(), n + 1);
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            values: vec![T::zero(); nnz],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last = usize::MAX;
            for (j, v) in r {
                if j == last {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = j;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.position(i, j).map(|p| self.values[p]).unwrap_or(T::zero())
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                y[j] += a * x[i];
            }
        }
        y
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut big = T::zero();
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
                big = big.max(a.abs());
            }
        }
        if big > T::zero() {
            worst / big
        } else {
            T::zero()
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn pattern(&self) -> (&[usize], &[usize]) {
        (&self.row_ptr, &self.col_idx)
    }

    /// Dense copy (tests and small problems only).
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                d[i][j] = a;
            }
        }
        d
    }
}

/// Euclidean norm.
pub fn norm2<T: Real>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Reverse Cuthill–McKee ordering of a symmetric graph given in CSR form;
/// returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(offsets: &[usize], cols: &[usize]) -> Vec<usize> {
    let n = offsets.len() - 1;
    let degree = |v: usize| offsets[v + 1] - offsets[v];
    let nbrs = |v: usize| &cols[offsets[v]..offsets[v + 1]];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree(v), v));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        let root = pseudo_peripheral(start, n, &nbrs, &degree);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = nbrs(v).iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral<'a>(
    start: usize,
    n: usize,
    nbrs: &impl Fn(usize) -> &'a [usize],
    degree: &impl Fn(usize) -> usize,
) -> usize {
    let mut root = start;
    let mut ecc = 0;
    let mut level = vec![usize::MAX; n];
    let mut touched = Vec::new();
    for _ in 0..8 {
        for &v in &touched {
            level[v] = usize::MAX;
        }
        touched.clear();
        let mut queue = VecDeque::from([root]);
        level[root] = 0;
        touched.push(root);
        let mut last = root;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &u in nbrs(v) {
                if level[u] == usize::MAX {
                    level[u] = level[v] + 1;
                    touched.push(u);
                    queue.push_back(u);
                }
            }
        }
        let depth = level[last];
        let cand = touched
            .iter()
            .copied()
            .filter(|&v| level[v] == depth)
            .min_by_key(|&v| (degree(v), v))
            .unwrap();
        if depth <= ecc {
            break;
        }
        ecc = depth;
        root = cand;
    }
    root
}

/// Envelope LU factors `P A Pᵀ = L U` with unit lower `L`.
#[derive(Clone, Debug)]
pub struct SkylineLu<T> {
    n: usize,
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    lower: Vec<T>,
    upper: Vec<T>,
    diag: Vec<T>,
    min_pivot: T,
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

impl<T: Real> SkylineLu<T> {
    /// Factors `a` in the order `perm` (`perm[new] = old`).
    pub fn factor(a: &CsrMatrix<T>, perm: Vec<usize>) -> Result<Self> {
        let n = a.n();
        if perm.len() != n {
            return Err(Error::InvalidArgument(format!(
                "ordering has {} entries for {n} rows",
                perm.len()
            )));
        }
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        let mut row_max = vec![T::zero(); n];
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let (i, j) = (inv[r], inv[c]);
                let hi = i.max(j);
                first[hi] = first[hi].min(i.min(j));
                row_max[i] = row_max[i].max(v.abs());
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i]);
        }
        let size = offset[n];
        let mut lower = vec![T::zero(); size];
        let mut upper = vec![T::zero(); size];
        let mut diag = vec![T::zero(); n];
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let (i, j) = (inv[r], inv[c]);
                match i.cmp(&j) {
                    std::cmp::Ordering::Greater => lower[offset[i] + j - first[i]] += v,
                    std::cmp::Ordering::Less => upper[offset[j] + i - first[j]] += v,
                    std::cmp::Ordering::Equal => diag[i] += v,
                }
            }
        }
        let mut min_pivot = T::infinity();
        for i in 0..n {
            let fi = first[i];
            let (l_done, l_rest) = lower.split_at_mut(offset[i]);
            let (u_done, u_rest) = upper.split_at_mut(offset[i]);
            let li = &mut l_rest[..i - fi];
            let ui = &mut u_rest[..i - fi];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let lj = &l_done[offset[j]..offset[j] + (j - fj)];
                let uj = &u_done[offset[j]..offset[j] + (j - fj)];
                let s = dot(&li[k0 - fi..j - fi], &uj[k0 - fj..]);
                li[j - fi] = (li[j - fi] - s) / diag[j];
                let s2 = dot(&lj[k0 - fj..], &ui[k0 - fi..j - fi]);
                ui[j - fi] -= s2;
            }
            diag[i] -= dot(li, ui);
            let piv = diag[i].abs();
            min_pivot = min_pivot.min(piv);
            if !(piv > T::lit(PIVOT_THRESHOLD) * row_max[i]) {
                return Err(Error::SingularPivot {
                    index: perm[i],
                    value: diag[i].as_f64(),
                    smallest: min_pivot.as_f64(),
                });
            }
        }
        Ok(Self {
            n,
            perm,
            inv,
            first,
            offset,
            lower,
            upper,
            diag,
            min_pivot,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` plus `U`, diagonal included.
    pub fn envelope_size(&self) -> usize {
        2 * self.offset[self.n] + self.n
    }

    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y: Vec<T> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let li = &self.lower[self.offset[i]..self.offset[i + 1]];
            let s = dot(li, &y[fi..i]);
            y[i] -= s;
        }
        for i in (0..n).rev() {
            y[i] /= self.diag[i];
            let fi = self.first[i];
            let ui = &self.upper[self.offset[i]..self.offset[i + 1]];
            let xi = y[i];
            for (k, &u) in ui.iter().enumerate() {
                y[fi + k] -= u * xi;
            }
        }
        let mut x = vec![T::zero(); n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y: Vec<T> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ui = &self.upper[self.offset[i]..self.offset[i + 1]];
            y[i] = (y[i] - dot(ui, &y[fi..i])) / self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let li = &self.lower[self.offset[i]..self.offset[i + 1]];
            let xi = y[i];
            for (k, &l) in li.iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![T::zero(); n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Position of original row `old` in the factor ordering.
    pub fn position(&self, old: usize) -> usize {
        self.inv[old]
    }
}

/// Solve with `steps` rounds of iterative refinement; returns the solution
/// and the final residual norm `‖b − A x‖`.
pub fn solve_refined<T: Real>(
    a: &CsrMatrix<T>,
    lu: &SkylineLu<T>,
    b: &[T],
    steps: usize,
) -> (Vec<T>, T) {
    let mut x = lu.solve(b);
    for _ in 0..steps {
        let ax = a.mul_vec(&x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += *di;
        }
    }
    let ax = a.mul_vec(&x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
    (x, norm2(&r))
}

/// Two-norm condition estimate `σ_max/σ_min` by `iters` power iterations on
/// `AᵀA` and on `(AᵀA)⁻¹` (through the factorization).
pub fn condition_estimate<T: Real>(a: &CsrMatrix<T>, lu: &SkylineLu<T>, iters: usize) -> T {
    let n = a.n();
    if n == 0 {
        return T::one();
    }
    // deterministic, non-degenerate start vector
    let start: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.5) * T::lit(((i * 7919) % 101) as f64 / 101.0))
        .collect();
    let normalize = |v: &mut Vec<T>| {
        let s = norm2(v);
        if s > T::zero() {
            for x in v.iter_mut() {
                *x /= s;
            }
        }
        s
    };
    let mut v = start.clone();
    normalize(&mut v);
    let mut big = T::zero();
    for _ in 0..iters {
        let w = a.mul_vec(&v);
        let mut z = a.transpose_mul_vec(&w);
        big = normalize(&mut z);
        v = z;
    }
    let mut v = start;
    normalize(&mut v);
    let mut small_inv = T::zero();
    for _ in 0..iters {
        let w = lu.solve_transpose(&v);
        let mut z = lu.solve(&w);
        small_inv = normalize(&mut z);
        v = z;
    }
    (big * small_inv).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplace_1d(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn tridiagonal_solve_and_condition() {
        let n = 40;
        let a = laplace_1d(n);
        let (off, cols) = a.pattern();
        let perm = rcm_ordering(off, cols);
        let lu = SkylineLu::factor(&a, perm).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x, r) = solve_refined(&a, &lu, &b, 2);
        assert!(r < 1e-12);
        let xt = lu.solve_transpose(&b);
        assert!((norm2(&x) - norm2(&xt)).abs() < 1e-10);
        // eigenvalues 2 − 2cos(kπ/(n+1))
        let pi = std::f64::consts::PI;
        let h = pi / (n as f64 + 1.0);
        let exact = (2.0 - 2.0 * (n as f64 * h).cos()) / (2.0 - 2.0 * h.cos());
        let est = condition_estimate(&a, &lu, 50);
        assert!(est <= exact * 1.0001 && est > 0.5 * exact, "{est} vs {exact}");
    }

    #[test]
    fn zero_pivot_reports_location() {
        let a = CsrMatrix::from_triplets(
            3,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)],
        );
        match SkylineLu::factor(&a, vec![0, 1, 2]) {
            Err(Error::SingularPivot { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rcm_is_a_permutation_with_small_bandwidth() {
        // 2D grid graph numbered column-major with a shuffle
        let (nx, ny) = (12, 7);
        let id = |i: usize, j: usize| ((i * ny + j) * 37) % (nx * ny);
        let mut t = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                t.push((id(i, j), id(i, j), 4.0));
                if i + 1 < nx {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                    t.push((id(i + 1, j), id(i, j), -1.0));
                }
                if j + 1 < ny {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(nx * ny, &t);
        let (off, cols) = a.pattern();
        let perm = rcm_ordering(off, cols);
        let mut seen = perm.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..nx * ny).collect::<Vec<_>>());
        let mut inv = vec![0; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut band = 0;
        for i in 0..a.n() {
            for &j in a.row(i).0 {
                band = band.max(inv[i].abs_diff(inv[j]));
            }
        }
        assert!(band <= 2 * ny, "bandwidth {band}");
    }

    proptest! {
        #[test]
        fn random_positive_real_systems(seed in 0u64..500, n in 2usize..30) {
            // symmetric positive definite part plus a skew part: no pivoting needed
            let mut t = Vec::new();
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut rnd = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5 };
            for i in 0..n {
                t.push((i, i, 3.0 + rnd().abs()));
                for j in 0..i {
                    if rnd() > 0.2 {
                        let sym = rnd();
                        let skew = rnd();
                        t.push((i, j, sym + skew));
                        t.push((j, i, sym - skew));
                    }
                }
            }
            let a = CsrMatrix::from_triplets(n, &t);
            let (off, cols) = a.pattern();
            let lu = SkylineLu::factor(&a, rcm_ordering(off, cols)).unwrap();
            let b: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
            let (x, r) = solve_refined(&a, &lu, &b, 2);
            prop_assert!(r <= 1e-10 * norm2(&b));
            let at_x = lu.solve_transpose(&a.transpose_mul_vec(&x));
            for i in 0..n {
                prop_assert!((at_x[i] - x[i]).abs() < 1e-8);
            }
        }
    }
}
