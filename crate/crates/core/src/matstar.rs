//! Finite-dimensional C*-algebras `M_{n_1} ⊕ … ⊕ M_{n_k}`.
//!
//! Elements are stored as one dense complex matrix per block. All arithmetic is
//! blockwise; the Hermitian eigensolver is a cyclic complex Jacobi iteration so
//! that results are reproducible bit for bit.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::tol;

pub type C64 = Complex64;

/// One dense square block of an algebra element.
pub type Block = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Builds a real block from rows.
pub fn real_block(rows: &[&[f64]]) -> Block {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j], 0.0))
}

/// Signature `(n_1, …, n_k)` of a finite-dimensional C*-algebra.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinStarAlgebra {
    block_sizes: Vec<usize>,
    label: String,
}

impl FinStarAlgebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return precondition("an algebra needs at least one block");
        }
        if let Some(i) = block_sizes.iter().position(|&n| n == 0) {
            return precondition(format!("block {i} has size 0"));
        }
        Ok(Self {
            block_sizes,
            label: String::new(),
        })
    }

    /// The zero algebra; used for degenerate corners.
    pub fn empty() -> Self {
        Self {
            block_sizes: Vec::new(),
            label: "0".into(),
        }
    }

    /// Full matrix algebra `M_n`.
    pub fn matrix(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.block_sizes.is_empty()
    }

    /// Complex vector-space dimension `Σ n_i²`.
    pub fn dimension(&self) -> usize {
        self.block_sizes.iter().map(|n| n * n).sum()
    }

    /// Same block structure, ignoring labels.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.block_sizes == other.block_sizes
    }

    /// Matrix units `E_ij` of every block, in block-major, row-major order.
    /// This is the vector-space basis matching [`AlgebraElement::to_vector`].
    pub fn basis(&self) -> Vec<AlgebraElement> {
        let mut out = Vec::with_capacity(self.dimension());
        for (b, &n) in self.block_sizes.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let mut e = AlgebraElement::zero(self);
                    e.blocks[b][(i, j)] = ONE;
                    out.push(e);
                }
            }
        }
        out
    }

    /// Unit of block `b` (a central projection).
    pub fn block_unit(&self, b: usize) -> AlgebraElement {
        let mut e = AlgebraElement::zero(self);
        e.blocks[b] = Block::identity(self.block_sizes[b], self.block_sizes[b]);
        e
    }
}

impl fmt::Display for FinStarAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.block_sizes.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.block_sizes.iter().map(|n| format!("M{n}")).collect();
        write!(f, "{}", parts.join("⊕"))
    }
}

/// Binary and unary operations of [`arith`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Scale(C64),
    Involution,
}

/// An element of a finite-dimensional C*-algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    algebra: FinStarAlgebra,
    blocks: Vec<Block>,
}

impl AlgebraElement {
    pub fn new(algebra: &FinStarAlgebra, blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::BlockCount {
                expected: algebra.num_blocks(),
                found: blocks.len(),
            });
        }
        for (b, (blk, &n)) in blocks.iter().zip(&algebra.block_sizes).enumerate() {
            if blk.nrows() != n || blk.ncols() != n {
                return Err(Error::Shape {
                    block: b,
                    expected: n,
                    rows: blk.nrows(),
                    cols: blk.ncols(),
                });
            }
        }
        Ok(Self {
            algebra: algebra.clone(),
            blocks,
        })
    }

    /// Element of `M_n` from a single block.
    pub fn from_block(block: Block) -> Result<Self> {
        let alg = FinStarAlgebra::new(vec![block.nrows()])?;
        Self::new(&alg, vec![block])
    }

    /// Real diagonal element of `M_n`.
    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::from_block(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn zero(algebra: &FinStarAlgebra) -> Self {
        Self {
            algebra: algebra.clone(),
            blocks: algebra.block_sizes.iter().map(|&n| Block::zeros(n, n)).collect(),
        }
    }

    pub fn identity(algebra: &FinStarAlgebra) -> Self {
        Self {
            algebra: algebra.clone(),
            blocks: algebra.block_sizes.iter().map(|&n| Block::identity(n, n)).collect(),
        }
    }

    pub fn algebra(&self) -> &FinStarAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &Block {
        &self.blocks[b]
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    pub(crate) fn from_parts_unchecked(algebra: FinStarAlgebra, blocks: Vec<Block>) -> Self {
        Self { algebra, blocks }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::BlockCount {
                expected: self.blocks.len(),
                found: other.blocks.len(),
            });
        }
        for (b, (x, y)) in self.blocks.iter().zip(&other.blocks).enumerate() {
            if x.shape() != y.shape() {
                return Err(Error::Shape {
                    block: b,
                    expected: x.nrows(),
                    rows: y.nrows(),
                    cols: y.ncols(),
                });
            }
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Block, &Block) -> Block) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(x, y)| f(x, y)).collect(),
        })
    }

    fn map_blocks(&self, f: impl Fn(&Block) -> Block) -> Self {
        Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x * y)
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_blocks(|x| x * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// The involution `x ↦ x*` (blockwise conjugate transpose).
    pub fn adjoint(&self) -> Self {
        self.map_blocks(|x| x.adjoint())
    }

    /// `xy − yx`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x * y - y * x)
    }

    /// `1 − x`.
    pub fn complement(&self) -> Self {
        self.map_blocks(|x| Block::identity(x.nrows(), x.ncols()) - x)
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Operator (C*) norm: the largest singular value over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(block_norm).fold(0.0, f64::max)
    }

    /// `‖x − y‖` in operator norm; `+∞` on shape mismatch.
    pub fn dist(&self, other: &Self) -> f64 {
        self.sub(other).map_or(f64::INFINITY, |d| d.norm())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dist(&self.adjoint());
        tol::within(d, self.norm(), tol)
    }

    /// `‖x − x*‖ ≤ tol` and `‖x² − x‖ ≤ tol`.
    pub fn is_projection(&self, tol: f64) -> bool {
        let sq = self.mul(self).expect("same algebra");
        self.dist(&self.adjoint()) <= tol && self.dist(&sq) <= tol
    }

    /// Per-block traces.
    pub fn traces(&self) -> Vec<C64> {
        self.blocks.iter().map(|b| b.trace()).collect()
    }

    /// Coordinates in the matrix-unit basis (block-major, row-major).
    pub fn to_vector(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.algebra.dimension());
        for b in &self.blocks {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    v.push(b[(i, j)]);
                }
            }
        }
        v
    }

    pub fn from_vector(algebra: &FinStarAlgebra, v: &[C64]) -> Result<Self> {
        if v.len() != algebra.dimension() {
            return precondition(format!(
                "vector of length {} does not match algebra dimension {}",
                v.len(),
                algebra.dimension()
            ));
        }
        let mut offset = 0;
        let blocks = algebra
            .block_sizes
            .iter()
            .map(|&n| {
                let blk = DMatrix::from_fn(n, n, |i, j| v[offset + i * n + j]);
                offset += n * n;
                blk
            })
            .collect();
        Ok(Self {
            algebra: algebra.clone(),
            blocks,
        })
    }
}

/// Blockwise arithmetic dispatch; `y` is ignored by unary operations.
pub fn arith(x: &AlgebraElement, y: &AlgebraElement, op: ArithOp) -> Result<AlgebraElement> {
    match op {
        ArithOp::Add => x.add(y),
        ArithOp::Sub => x.sub(y),
        ArithOp::Mul => x.mul(y),
        ArithOp::Scale(c) => Ok(x.scale(c)),
        ArithOp::Involution => Ok(x.adjoint()),
    }
}

fn block_norm(b: &Block) -> f64 {
    if b.nrows() == 0 {
        return 0.0;
    }
    let gram = b.adjoint() * b;
    let (vals, _) = jacobi_hermitian(&gram);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

fn off_diagonal_frobenius(a: &Block) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi on a Hermitian block.
///
/// Returns ascending eigenvalues and a unitary whose columns are the matching
/// eigenvectors. Each eigenvector is rotated so its first non-negligible
/// component is real and positive.
pub(crate) fn jacobi_hermitian(input: &Block) -> (Vec<f64>, Block) {
    let n = input.nrows();
    let mut a = (input + input.adjoint()) * C64::new(0.5, 0.0);
    let mut v = Block::identity(n, n);

    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        if off_diagonal_frobenius(&a) < tol::JACOBI_OFF_DIAGONAL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let e = apq / r;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + theta.hypot(1.0))
                } else {
                    -1.0 / (-theta + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                let se = e * s;
                let sec = e.conj() * s;
                // A <- A J with J = [[c, s e], [-s conj(e), c]] on (p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * sec;
                    a[(k, q)] = akp * se + akq * c;
                }
                // A <- J* A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * se;
                    a[(q, k)] = apk * sec + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * sec;
                    v[(k, q)] = vkp * se + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = Block::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut column = v.column(src).clone_owned();
        let max = column.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(z) = column.iter().find(|z| z.norm() > 1e-8 * max.max(f64::MIN_POSITIVE)) {
            let phase = z.conj() / z.norm();
            column *= phase;
        }
        vectors.set_column(col, &column);
    }
    (values, vectors)
}

/// Spectral data of a self-adjoint element: `x = U diag(t) U*` per block.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    /// Ascending eigenvalues, one list per block.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Unitary whose block columns are eigenvectors.
    pub unitary: AlgebraElement,
}

impl EigenDecomposition {
    /// `U f(D) U*` for a real function applied to the clustered eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> AlgebraElement {
        self.apply_complex(|t| C64::new(f(t), 0.0))
    }

    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> AlgebraElement {
        let clustered = self.clustered_eigenvalues();
        let blocks = self
            .unitary
            .blocks()
            .iter()
            .zip(&clustered)
            .map(|(u, vals)| {
                let n = u.nrows();
                let mut scaled = u.clone();
                for (j, &t) in vals.iter().enumerate() {
                    let ft = f(t);
                    for i in 0..n {
                        scaled[(i, j)] *= ft;
                    }
                }
                scaled * u.adjoint()
            })
            .collect();
        AlgebraElement::from_parts_unchecked(self.unitary.algebra().clone(), blocks)
    }

    /// `U diag(t) U*` with the raw eigenvalues.
    pub fn reconstruct(&self) -> AlgebraElement {
        let blocks = self
            .unitary
            .blocks()
            .iter()
            .zip(&self.eigenvalues)
            .map(|(u, vals)| {
                let d = Block::from_diagonal(&nalgebra::DVector::from_iterator(
                    vals.len(),
                    vals.iter().map(|&t| C64::new(t, 0.0)),
                ));
                u * d * u.adjoint()
            })
            .collect();
        AlgebraElement::from_parts_unchecked(self.unitary.algebra().clone(), blocks)
    }

    /// Eigenvalues with every cluster (consecutive gaps at most
    /// [`tol::CLUSTER`]) replaced by its mean.
    pub fn clustered_eigenvalues(&self) -> Vec<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|vals| {
                let mut out = vals.clone();
                let mut start = 0;
                while start < vals.len() {
                    let mut end = start + 1;
                    while end < vals.len() && vals[end] - vals[end - 1] <= tol::CLUSTER {
                        end += 1;
                    }
                    let mean = vals[start..end].iter().sum::<f64>() / (end - start) as f64;
                    out[start..end].iter_mut().for_each(|t| *t = mean);
                    start = end;
                }
                out
            })
            .collect()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().flatten().map(|t| t.abs()).fold(0.0, f64::max)
    }

    /// Rank-one projections onto the eigenvectors, block-major order.
    pub fn eigenprojections(&self) -> Vec<AlgebraElement> {
        let alg = self.unitary.algebra();
        let mut out = Vec::new();
        for (b, u) in self.unitary.blocks().iter().enumerate() {
            for j in 0..u.ncols() {
                let col = u.column(j);
                let mut e = AlgebraElement::zero(alg);
                e.blocks[b] = &col * col.adjoint();
                out.push(e);
            }
        }
        out
    }
}

/// Eigendecomposition of a self-adjoint element.
pub fn hermitian_eigen(x: &AlgebraElement) -> Result<EigenDecomposition> {
    hermitian_eigen_tol(x, tol::DEFAULT)
}

pub fn hermitian_eigen_tol(x: &AlgebraElement, tol: f64) -> Result<EigenDecomposition> {
    if !x.is_hermitian(tol) {
        return precondition(format!(
            "element is not self-adjoint: ‖x − x*‖ = {:e}",
            x.dist(&x.adjoint())
        ));
    }
    let mut eigenvalues = Vec::with_capacity(x.blocks.len());
    let mut vectors = Vec::with_capacity(x.blocks.len());
    for b in &x.blocks {
        let (vals, vecs) = jacobi_hermitian(b);
        eigenvalues.push(vals);
        vectors.push(vecs);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        unitary: AlgebraElement::from_parts_unchecked(x.algebra.clone(), vectors),
    })
}

/// `a = a₊ − a₋`, `|a| = a₊ + a₋`.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfAdjointParts {
    pub positive: AlgebraElement,
    pub negative: AlgebraElement,
    pub absolute: AlgebraElement,
}

pub fn decompose_selfadjoint(a: &AlgebraElement) -> Result<SelfAdjointParts> {
    let eig = hermitian_eigen(a)?;
    Ok(SelfAdjointParts {
        positive: eig.apply(|t| t.max(0.0)),
        negative: eig.apply(|t| (-t).max(0.0)),
        absolute: eig.apply(f64::abs),
    })
}

/// Projection onto the range of a positive semidefinite element: eigenvalues
/// above `CLUSTER * max(1, ‖p‖)` count as nonzero.
pub fn range_projection(p: &AlgebraElement) -> Result<AlgebraElement> {
    let eig = hermitian_eigen(p)?;
    let cut = tol::CLUSTER * eig.spectral_radius().max(1.0);
    Ok(eig.apply(|t| if t > cut { 1.0 } else { 0.0 }))
}

/// Projection onto the kernel of a positive semidefinite element.
pub fn kernel_projection(p: &AlgebraElement) -> Result<AlgebraElement> {
    Ok(range_projection(p)?.complement())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn nil() -> AlgebraElement {
        AlgebraElement::from_block(real_block(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap()
    }

    fn swap() -> AlgebraElement {
        AlgebraElement::from_block(real_block(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap()
    }

    #[test]
    fn involution_examples() {
        let d = AlgebraElement::diag(&[1.0, 2.0]).unwrap();
        assert_eq!(d.adjoint(), d);
        let expected = AlgebraElement::from_block(real_block(&[&[0.0, 0.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(nil().adjoint(), expected);
        let prod = nil().mul(&nil().adjoint()).unwrap();
        assert_eq!(prod, AlgebraElement::diag(&[1.0, 0.0]).unwrap());
    }

    #[test]
    fn shape_mismatch_names_block() {
        let a = FinStarAlgebra::new(vec![2, 3]).unwrap();
        let b = FinStarAlgebra::new(vec![2, 2]).unwrap();
        let err = AlgebraElement::zero(&a).add(&AlgebraElement::zero(&b)).unwrap_err();
        assert!(matches!(err, Error::Shape { block: 1, .. }), "{err}");
        let err = AlgebraElement::new(&a, vec![Block::zeros(2, 2)]).unwrap_err();
        assert!(matches!(err, Error::BlockCount { expected: 2, found: 1 }));
    }

    #[test]
    fn rejects_bad_signatures() {
        assert!(FinStarAlgebra::new(vec![]).is_err());
        assert!(FinStarAlgebra::new(vec![2, 0]).is_err());
        assert_eq!(FinStarAlgebra::new(vec![2, 3]).unwrap().dimension(), 13);
    }

    #[test]
    fn eigen_of_diagonal_is_permutation() {
        let e = hermitian_eigen(&AlgebraElement::diag(&[2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![vec![1.0, 2.0]]);
        let u = e.unitary.block(0);
        assert_abs_diff_eq!(u[(1, 0)].re, 1.0);
        assert_abs_diff_eq!(u[(0, 1)].re, 1.0);
        assert_abs_diff_eq!(u[(0, 0)].norm(), 0.0);
    }

    #[test]
    fn eigen_of_swap_matches_closed_form() {
        let e = hermitian_eigen(&swap()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0][0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[0][1], 1.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = e.unitary.block(0);
        // (1, -1)/√2 for -1 and (1, 1)/√2 for +1
        assert_abs_diff_eq!(u[(0, 0)].re, h, epsilon = 1e-14);
        assert_abs_diff_eq!(u[(1, 0)].re, -h, epsilon = 1e-14);
        assert_abs_diff_eq!(u[(0, 1)].re, h, epsilon = 1e-14);
        assert_abs_diff_eq!(u[(1, 1)].re, h, epsilon = 1e-14);
    }

    #[test]
    fn eigen_of_zero_is_identity() {
        let alg = FinStarAlgebra::new(vec![3]).unwrap();
        let e = hermitian_eigen(&AlgebraElement::zero(&alg)).unwrap();
        assert_eq!(e.eigenvalues, vec![vec![0.0; 3]]);
        assert_eq!(e.unitary, AlgebraElement::identity(&alg));
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        assert!(matches!(hermitian_eigen(&nil()), Err(Error::Precondition(_))));
    }

    #[test]
    fn decomposition_examples() {
        let p = decompose_selfadjoint(&AlgebraElement::diag(&[3.0, -2.0]).unwrap()).unwrap();
        assert!(p.positive.dist(&AlgebraElement::diag(&[3.0, 0.0]).unwrap()) < 1e-14);
        assert!(p.negative.dist(&AlgebraElement::diag(&[0.0, 2.0]).unwrap()) < 1e-14);
        assert!(p.absolute.dist(&AlgebraElement::diag(&[3.0, 2.0]).unwrap()) < 1e-14);

        let alg = FinStarAlgebra::new(vec![2]).unwrap();
        let z = decompose_selfadjoint(&AlgebraElement::zero(&alg)).unwrap();
        assert_eq!(z.positive.norm(), 0.0);
        assert_eq!(z.absolute.norm(), 0.0);

        let s = decompose_selfadjoint(&swap()).unwrap();
        let plus = AlgebraElement::from_block(real_block(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        let minus = AlgebraElement::from_block(real_block(&[&[0.5, -0.5], &[-0.5, 0.5]])).unwrap();
        assert!(s.positive.dist(&plus) < 1e-12);
        assert!(s.negative.dist(&minus) < 1e-12);
    }

    #[test]
    fn norm_examples() {
        assert_abs_diff_eq!(AlgebraElement::diag(&[1.0, -3.0]).unwrap().norm(), 3.0, epsilon = 1e-14);
        let p = AlgebraElement::from_block(real_block(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert_abs_diff_eq!(p.norm(), 1.0, epsilon = 1e-14);
        let x = AlgebraElement::from_block(real_block(&[&[0.0, 2.0], &[0.0, 0.0]])).unwrap();
        assert_abs_diff_eq!(x.norm(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn projection_predicate() {
        let tol = tol::DEFAULT;
        assert!(AlgebraElement::diag(&[1.0, 0.0]).unwrap().is_projection(tol));
        let p = AlgebraElement::from_block(real_block(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert!(p.is_projection(tol));
        assert!(!AlgebraElement::diag(&[0.5, 0.0]).unwrap().is_projection(tol));
    }

    #[test]
    fn vector_round_trip_matches_basis() {
        let alg = FinStarAlgebra::new(vec![1, 2]).unwrap();
        let basis = alg.basis();
        assert_eq!(basis.len(), 5);
        for (k, e) in basis.iter().enumerate() {
            let v = e.to_vector();
            assert_eq!(v.iter().position(|z| *z == ONE), Some(k));
            assert_eq!(&AlgebraElement::from_vector(&alg, &v).unwrap(), e);
        }
    }
}
