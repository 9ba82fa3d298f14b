//! Plain complex linear algebra on coordinate vectors: elimination-based
//! nullspaces and orthonormal spans. Nothing here touches the eigensolver, so
//! it serves as an independent oracle for the projection-based fast paths.

use crate::matstar::{AlgebraElement, FinStarAlgebra, C64, ZERO};
use crate::tol;

/// Row-reduced echelon form with partial (column-wise) pivoting.
struct Echelon {
    rows: Vec<Vec<C64>>,
    pivots: Vec<usize>,
    ncols: usize,
}

fn reduce(mut rows: Vec<Vec<C64>>, ncols: usize, threshold: f64) -> Echelon {
    let scale = rows.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let cut = threshold * scale;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let (best, mag) = (r..rows.len())
            .map(|i| (i, rows[i][c].norm()))
            .fold((r, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if mag <= cut {
            for row in rows.iter_mut().skip(r) {
                row[c] = ZERO;
            }
            continue;
        }
        rows.swap(r, best);
        let inv = C64::new(1.0, 0.0) / rows[r][c];
        for z in rows[r].iter_mut() {
            *z *= inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f == ZERO {
                continue;
            }
            for (z, p) in row.iter_mut().zip(&pivot_row) {
                *z -= f * p;
            }
            row[c] = ZERO;
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    Echelon { rows, pivots, ncols }
}

/// Basis of `{v : A v = 0}` for `A` given by rows.
pub fn nullspace(rows: Vec<Vec<C64>>, ncols: usize) -> Vec<Vec<C64>> {
    let ech = reduce(rows, ncols, tol::PIVOT);
    let mut is_pivot = vec![false; ech.ncols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for f in (0..ech.ncols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![ZERO; ech.ncols];
        v[f] = C64::new(1.0, 0.0);
        for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
            v[p] = -row[f];
        }
        basis.push(v);
    }
    basis
}

/// Numerical rank by elimination.
pub fn rank(rows: Vec<Vec<C64>>, ncols: usize) -> usize {
    reduce(rows, ncols, tol::PIVOT).pivots.len()
}

/// Matrix (as rows) of the linear map `x ↦ f(x)` on the algebra's coordinate
/// space, built column by column from the matrix-unit basis.
pub fn operator_rows(algebra: &FinStarAlgebra, f: impl Fn(&AlgebraElement) -> AlgebraElement) -> Vec<Vec<C64>> {
    let d = algebra.dimension();
    let mut rows = vec![vec![ZERO; d]; d];
    for (j, e) in algebra.basis().iter().enumerate() {
        for (i, z) in f(e).to_vector().into_iter().enumerate() {
            rows[i][j] = z;
        }
    }
    rows
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis of a span of coordinate vectors.
#[derive(Clone, Debug)]
pub struct Span {
    dim_ambient: usize,
    basis: Vec<Vec<C64>>,
}

impl Span {
    pub fn new(dim_ambient: usize) -> Self {
        Self {
            dim_ambient,
            basis: Vec::new(),
        }
    }

    pub fn from_vectors<I: IntoIterator<Item = Vec<C64>>>(dim_ambient: usize, vectors: I) -> Self {
        let mut s = Self::new(dim_ambient);
        for v in vectors {
            s.push(v);
        }
        s
    }

    pub fn from_elements<'a, I: IntoIterator<Item = &'a AlgebraElement>>(
        algebra: &FinStarAlgebra,
        elements: I,
    ) -> Self {
        Self::from_vectors(algebra.dimension(), elements.into_iter().map(|e| e.to_vector()))
    }

    /// Adds `v` if it is independent of the current span; returns whether it was.
    pub fn push(&mut self, v: Vec<C64>) -> bool {
        let scale = vnorm(&v);
        if scale == 0.0 {
            return false;
        }
        let mut w = v;
        // two passes of Gram-Schmidt for stability
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let n = vnorm(&w);
        if n <= tol::PIVOT * scale.max(1.0) {
            return false;
        }
        self.basis.push(w.into_iter().map(|z| z / n).collect());
        true
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim_ambient
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    /// Distance from `v` to the span.
    pub fn residual(&self, v: &[C64]) -> f64 {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        vnorm(&w)
    }

    pub fn contains(&self, v: &[C64], tol: f64) -> bool {
        tol::within(self.residual(v), vnorm(v), tol)
    }

    /// Whether every basis vector of `other` lies in `self`.
    pub fn includes(&self, other: &Span, tol: f64) -> bool {
        other.basis.iter().all(|v| self.residual(v) <= tol)
    }
}
