//! Right and left annihilators, their generating projections, supports, and a
//! Baer certification against an elimination-based oracle.
//!
//! Fast path: per block, `R(S) = gA` where `g` is the kernel projection of
//! `Σ s*s`. Oracle: the algebra viewed as `ℂ^{Σ n²}`, with `R(S)` the common
//! nullspace of the left-multiplication operators `x ↦ s x`.

use rand::Rng;
use serde::Serialize;

use crate::error::{precondition, Result};
use crate::linear::{self, Span};
use crate::matstar::{kernel_projection, AlgebraElement, FinStarAlgebra};
use crate::projlat::{sup_family, Projection};
use crate::random::{self, SeededRng};
use crate::report::CheckRecord;
use crate::tol;

/// `R(S) = gA` (or `L(S) = Ae`) with its dimension cross-checked by the oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnihilatorResult {
    pub generator: Projection,
    /// `dim gA` (or `dim Ae`) from the projection ranks.
    pub subspace_dim: usize,
    /// Dimension of the annihilator computed by elimination.
    pub oracle_dim: usize,
    /// Largest residual of the two inclusions checked against the oracle.
    pub membership_residual: f64,
}

impl AnnihilatorResult {
    pub fn agrees(&self) -> bool {
        self.subspace_dim == self.oracle_dim && self.membership_residual <= tol::COHERENCE
    }
}

fn common_algebra(set: &[AlgebraElement]) -> Result<FinStarAlgebra> {
    let Some(first) = set.first() else {
        return precondition("annihilator of an empty set");
    };
    if let Some(i) = set.iter().position(|s| !s.algebra().same_shape(first.algebra())) {
        return precondition(format!("element {i} lives in a different algebra"));
    }
    Ok(first.algebra().clone())
}

/// The projection `g` with `R(S) = gA`.
pub fn right_annihilating_projection(set: &[AlgebraElement]) -> Result<Projection> {
    let alg = common_algebra(set)?;
    let mut gram = AlgebraElement::zero(&alg);
    for s in set {
        gram = gram.add(&s.adjoint().mul(s)?)?;
    }
    Ok(Projection::from_element_unchecked(kernel_projection(&gram)?))
}

/// The projection `e` with `L(S) = Ae`, via `L(S) = (R(S*))*`.
pub fn left_annihilating_projection(set: &[AlgebraElement]) -> Result<Projection> {
    let adj: Vec<AlgebraElement> = set.iter().map(AlgebraElement::adjoint).collect();
    right_annihilating_projection(&adj)
}

/// Basis of `R(S)` by elimination on the stacked operators `x ↦ s x`.
pub fn right_annihilator_oracle(set: &[AlgebraElement]) -> Result<Vec<AlgebraElement>> {
    let alg = common_algebra(set)?;
    let mut rows = Vec::new();
    for s in set {
        rows.extend(linear::operator_rows(&alg, |x| s.mul(x).expect("same algebra")));
    }
    linear::nullspace(rows, alg.dimension())
        .iter()
        .map(|v| AlgebraElement::from_vector(&alg, v))
        .collect()
}

/// Basis of `L(S)` by elimination on the stacked operators `x ↦ x s`.
pub fn left_annihilator_oracle(set: &[AlgebraElement]) -> Result<Vec<AlgebraElement>> {
    let alg = common_algebra(set)?;
    let mut rows = Vec::new();
    for s in set {
        rows.extend(linear::operator_rows(&alg, |x| x.mul(s).expect("same algebra")));
    }
    linear::nullspace(rows, alg.dimension())
        .iter()
        .map(|v| AlgebraElement::from_vector(&alg, v))
        .collect()
}

fn unit_scaled(x: &AlgebraElement) -> AlgebraElement {
    let n = x.frobenius();
    if n > 0.0 {
        x.scale_real(1.0 / n)
    } else {
        x.clone()
    }
}

fn compressed_dim(g: &Projection) -> usize {
    g.rank_per_block()
        .iter()
        .zip(g.algebra().block_sizes())
        .map(|(r, n)| r * n)
        .sum()
}

/// `R(S) = gA`, certified against the oracle.
pub fn right_annihilator(set: &[AlgebraElement]) -> Result<AnnihilatorResult> {
    let g = right_annihilating_projection(set)?;
    let oracle = right_annihilator_oracle(set)?;
    let mut residual = 0.0_f64;
    // gA ⊆ R(S): s g = 0
    for s in set {
        residual = residual.max(s.mul(g.element())?.norm() / s.norm().max(1.0));
    }
    // R(S) ⊆ gA: g y = y
    for y in &oracle {
        let y = unit_scaled(y);
        residual = residual.max(g.element().mul(&y)?.dist(&y));
    }
    Ok(AnnihilatorResult {
        subspace_dim: compressed_dim(&g),
        oracle_dim: oracle.len(),
        generator: g,
        membership_residual: residual,
    })
}

/// `L(S) = Ae`, certified against the oracle.
pub fn left_annihilator(set: &[AlgebraElement]) -> Result<AnnihilatorResult> {
    let e = left_annihilating_projection(set)?;
    let oracle = left_annihilator_oracle(set)?;
    let mut residual = 0.0_f64;
    for s in set {
        residual = residual.max(e.element().mul(s)?.norm() / s.norm().max(1.0));
    }
    for y in &oracle {
        let y = unit_scaled(y);
        residual = residual.max(y.mul(e.element())?.dist(&y));
    }
    Ok(AnnihilatorResult {
        subspace_dim: compressed_dim(&e),
        oracle_dim: oracle.len(),
        generator: e,
        membership_residual: residual,
    })
}

/// Right and left supports `r(x) = 1 − g`, `l(x) = 1 − e`.
pub fn supports(x: &AlgebraElement) -> Result<(Projection, Projection)> {
    let set = std::slice::from_ref(x);
    let r = right_annihilating_projection(set)?.complement();
    let l = left_annihilating_projection(set)?.complement();
    Ok((r, l))
}

/// Sampling plan for [`certify_baer`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub count: usize,
    pub seed: u64,
    pub max_subset_size: usize,
}

impl SamplingPlan {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            max_subset_size: 3,
        }
    }
}

/// Random element for annihilator sampling: mostly rank-deficient, sometimes
/// zero, sometimes confined to one block.
pub fn sample_element(rng: &mut SeededRng, alg: &FinStarAlgebra) -> AlgebraElement {
    match rng.gen_range(0..6) {
        0 => AlgebraElement::zero(alg),
        1 => random::element(rng, alg),
        2 => {
            let b = rng.gen_range(0..alg.num_blocks());
            alg.block_unit(b)
                .mul(&random::low_rank(rng, alg))
                .expect("same algebra")
        }
        _ => random::low_rank(rng, alg),
    }
}

pub fn sample_subset(rng: &mut SeededRng, alg: &FinStarAlgebra, max_size: usize) -> Vec<AlgebraElement> {
    let k = rng.gen_range(1..=max_size.max(1));
    (0..k).map(|_| sample_element(rng, alg)).collect()
}

/// Outcome of the checks on one subset.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetCheck {
    pub right: AnnihilatorResult,
    pub left: AnnihilatorResult,
    /// `‖g − (sup r(s))⊥‖`.
    pub sup_residual: f64,
    /// Distance between `L(S)` and `(R(S*))*` as subspaces (oracle side).
    pub duality_residual: f64,
    pub dim_r_of_adjoint: usize,
}

impl SubsetCheck {
    pub fn passed(&self) -> bool {
        self.right.agrees()
            && self.left.agrees()
            && self.sup_residual <= tol::COHERENCE
            && self.duality_residual <= tol::COHERENCE
            && self.dim_r_of_adjoint == self.left.oracle_dim
    }
}

pub fn check_subset(set: &[AlgebraElement]) -> Result<SubsetCheck> {
    let alg = common_algebra(set)?;
    let right = right_annihilator(set)?;
    let left = left_annihilator(set)?;

    let mut supports_r = Vec::with_capacity(set.len());
    for s in set {
        supports_r.push(supports(s)?.0);
    }
    let sup = sup_family(&supports_r)?;
    let sup_residual = right.generator.dist(&sup.complement());

    let adj: Vec<AlgebraElement> = set.iter().map(AlgebraElement::adjoint).collect();
    let r_adj: Vec<AlgebraElement> = right_annihilator_oracle(&adj)?
        .iter()
        .map(AlgebraElement::adjoint)
        .collect();
    let l_or = left_annihilator_oracle(set)?;
    let span_a = Span::from_elements(&alg, &r_adj);
    let span_b = Span::from_elements(&alg, &l_or);
    let mut duality_residual = 0.0_f64;
    for v in span_a.basis() {
        duality_residual = duality_residual.max(span_b.residual(v));
    }
    for v in span_b.basis() {
        duality_residual = duality_residual.max(span_a.residual(v));
    }
    Ok(SubsetCheck {
        right,
        left,
        sup_residual,
        duality_residual,
        dim_r_of_adjoint: span_a.dim(),
    })
}

const REF_BAER: &str = "Baer *-algebra: every right annihilator is generated by a projection";
const REF_SUP: &str = "R(S) = g⊥A with g = sup r(s)";
const REF_DUAL: &str = "L(S) = (R(S*))*";

/// Checks sampled subsets of `alg` against the oracle. One record per
/// property, carrying the first counterexample if any.
pub fn certify_baer(alg: &FinStarAlgebra, plan: SamplingPlan) -> Result<Vec<CheckRecord>> {
    let mut rng = random::rng(plan.seed);
    let subsets: Vec<Vec<AlgebraElement>> = (0..plan.count)
        .map(|_| sample_subset(&mut rng, alg, plan.max_subset_size))
        .collect();
    certify_subsets(alg, &subsets)
}

pub fn certify_subsets(alg: &FinStarAlgebra, subsets: &[Vec<AlgebraElement>]) -> Result<Vec<CheckRecord>> {
    let mut oracle = (0usize, 0.0_f64, None::<String>);
    let mut sup = (0.0_f64, None::<String>);
    let mut dual = (0.0_f64, None::<String>);
    for (i, set) in subsets.iter().enumerate() {
        let c = check_subset(set)?;
        let res = c.right.membership_residual.max(c.left.membership_residual);
        oracle.1 = oracle.1.max(res);
        if !(c.right.agrees() && c.left.agrees()) {
            oracle.0 += 1;
            oracle.2.get_or_insert(format!(
                "subset {i} (size {}): right dim {} vs oracle {}, left dim {} vs oracle {}, residual {:e}",
                set.len(),
                c.right.subspace_dim,
                c.right.oracle_dim,
                c.left.subspace_dim,
                c.left.oracle_dim,
                res
            ));
        }
        sup.0 = sup.0.max(c.sup_residual);
        if c.sup_residual > tol::COHERENCE {
            sup.1
                .get_or_insert(format!("subset {i}: residual {:e}", c.sup_residual));
        }
        dual.0 = dual.0.max(c.duality_residual);
        if c.duality_residual > tol::COHERENCE || c.dim_r_of_adjoint != c.left.oracle_dim {
            dual.1
                .get_or_insert(format!("subset {i}: residual {:e}", c.duality_residual));
        }
    }
    let id = |s: &str| format!("{s}[{alg}]");
    let mut r1 = CheckRecord::new(id("baer-annihilator-oracle"), REF_BAER, oracle.2.is_none())
        .with_residual("subsets", subsets.len() as f64)
        .with_residual("mismatches", oracle.0 as f64)
        .with_residual("max_residual", oracle.1);
    if let Some(w) = oracle.2 {
        r1 = r1.with_witness(w);
    }
    let mut r2 =
        CheckRecord::new(id("baer-sup-identity"), REF_SUP, sup.1.is_none()).with_residual("max_residual", sup.0);
    if let Some(w) = sup.1 {
        r2 = r2.with_witness(w);
    }
    let mut r3 =
        CheckRecord::new(id("left-right-duality"), REF_DUAL, dual.1.is_none()).with_residual("max_residual", dual.0);
    if let Some(w) = dual.1 {
        r3 = r3.with_witness(w);
    }
    Ok(vec![r1, r2, r3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matstar::real_block;

    fn nil() -> AlgebraElement {
        AlgebraElement::from_block(real_block(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap()
    }

    fn d(v: &[f64]) -> AlgebraElement {
        AlgebraElement::diag(v).unwrap()
    }

    #[test]
    fn right_annihilator_examples() {
        let r = right_annihilator(&[d(&[1.0, 0.0])]).unwrap();
        assert!(r.generator.element().dist(&d(&[0.0, 1.0])) < 1e-12);
        assert_eq!((r.subspace_dim, r.oracle_dim), (2, 2));
        assert!(r.agrees());

        let z = right_annihilator(&[d(&[0.0, 0.0])]).unwrap();
        assert!(z.generator.element().dist(&d(&[1.0, 1.0])) < 1e-12);
        assert_eq!(z.oracle_dim, 4);

        let both = right_annihilator(&[nil(), d(&[1.0, 0.0])]).unwrap();
        assert!(both.generator.element().norm() < 1e-12);
        assert_eq!((both.subspace_dim, both.oracle_dim), (0, 0));
        assert!(right_annihilator(&[]).is_err());
    }

    #[test]
    fn left_annihilator_examples() {
        let l = left_annihilator(&[d(&[1.0, 0.0])]).unwrap();
        assert!(l.generator.element().dist(&d(&[0.0, 1.0])) < 1e-12);
        assert!(l.agrees());
        let z = left_annihilator(&[d(&[0.0, 0.0])]).unwrap();
        assert!(z.generator.element().dist(&d(&[1.0, 1.0])) < 1e-12);
        // x e_2 = 0 only for... x [[0,1],[0,0]] = 0 iff first column of x is 0
        let n = left_annihilator(&[nil()]).unwrap();
        assert!(n.generator.element().dist(&d(&[0.0, 1.0])) < 1e-12);
        assert!(n.agrees());
    }

    #[test]
    fn support_examples() {
        let (r, l) = supports(&d(&[0.0, 5.0])).unwrap();
        assert!(r.element().dist(&d(&[0.0, 1.0])) < 1e-12);
        assert!(l.element().dist(&d(&[0.0, 1.0])) < 1e-12);
        let (r, l) = supports(&d(&[1.0, 1.0])).unwrap();
        assert!(r.element().dist(&d(&[1.0, 1.0])) < 1e-12);
        assert!(l.element().dist(&d(&[1.0, 1.0])) < 1e-12);
        let (r, l) = supports(&nil()).unwrap();
        assert!(r.element().dist(&d(&[0.0, 1.0])) < 1e-12);
        assert!(l.element().dist(&d(&[1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn support_is_a_right_identity() {
        let mut rng = random::rng(5);
        let alg = FinStarAlgebra::new(vec![2, 3]).unwrap();
        for _ in 0..30 {
            let x = random::low_rank(&mut rng, &alg);
            let (r, l) = supports(&x).unwrap();
            assert!(x.mul(r.element()).unwrap().dist(&x) <= 1e-9 * x.norm().max(1.0));
            assert!(l.element().mul(&x).unwrap().dist(&x) <= 1e-9 * x.norm().max(1.0));
        }
    }

    #[test]
    fn baer_certification_small_algebras() {
        for (sizes, count) in [(vec![1], 20), (vec![2], 200), (vec![2, 2], 100)] {
            let alg = FinStarAlgebra::new(sizes).unwrap();
            let recs = certify_baer(&alg, SamplingPlan::new(count, 17)).unwrap();
            for r in &recs {
                assert!(r.passed, "{r:?}");
            }
        }
    }
}
