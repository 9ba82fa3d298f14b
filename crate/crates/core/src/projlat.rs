//! The projection lattice of a finite-dimensional C*-algebra.

use serde::Serialize;

use crate::error::{precondition, Result};
use crate::linear::{self, Span};
use crate::matstar::{range_projection, AlgebraElement, Block, FinStarAlgebra, C64};
use crate::random;
use crate::tol;

/// A self-adjoint idempotent together with its per-block ranks.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    element: AlgebraElement,
    rank_per_block: Vec<usize>,
}

impl Projection {
    pub fn new(element: AlgebraElement, tol: f64) -> Result<Self> {
        if !element.is_projection(tol) {
            return precondition("element is not a projection");
        }
        Ok(Self::from_element_unchecked(element))
    }

    /// Trusts the caller that `element` is a projection; ranks come from traces.
    pub(crate) fn from_element_unchecked(element: AlgebraElement) -> Self {
        let rank_per_block = element
            .traces()
            .iter()
            .map(|t| t.re.round().max(0.0) as usize)
            .collect();
        Self {
            element,
            rank_per_block,
        }
    }

    pub fn zero(alg: &FinStarAlgebra) -> Self {
        Self::from_element_unchecked(AlgebraElement::zero(alg))
    }

    pub fn one(alg: &FinStarAlgebra) -> Self {
        Self::from_element_unchecked(AlgebraElement::identity(alg))
    }

    pub fn element(&self) -> &AlgebraElement {
        &self.element
    }

    pub fn into_element(self) -> AlgebraElement {
        self.element
    }

    pub fn algebra(&self) -> &FinStarAlgebra {
        self.element.algebra()
    }

    pub fn rank_per_block(&self) -> &[usize] {
        &self.rank_per_block
    }

    pub fn rank(&self) -> usize {
        self.rank_per_block.iter().sum()
    }

    /// `e⊥ = 1 − e`.
    pub fn complement(&self) -> Self {
        Self::from_element_unchecked(self.element.complement())
    }

    pub fn dist(&self, other: &Projection) -> f64 {
        self.element.dist(&other.element)
    }
}

/// `e ≤ f` iff `e = ef`.
pub fn leq(e: &Projection, f: &Projection, tol: f64) -> Result<bool> {
    let ef = e.element.mul(&f.element)?;
    Ok(e.element.dist(&ef) <= tol)
}

/// `ef = 0`.
pub fn orthogonal(e: &Projection, f: &Projection, tol: f64) -> Result<bool> {
    Ok(e.element.mul(&f.element)?.norm() <= tol)
}

/// Least upper bound: the range projection of `Σ e`.
pub fn sup_family(family: &[Projection]) -> Result<Projection> {
    let Some(first) = family.first() else {
        return precondition("supremum of an empty family (use the zero projection)");
    };
    let mut sum = first.element.clone();
    for e in &family[1..] {
        sum = sum.add(&e.element)?;
    }
    Ok(Projection::from_element_unchecked(range_projection(&sum)?))
}

/// Greatest lower bound: `(⋁ e⊥)⊥`, the projection onto the intersection of ranges.
pub fn inf_family(family: &[Projection]) -> Result<Projection> {
    if family.is_empty() {
        return precondition("infimum of an empty family (use the unit)");
    }
    let complements: Vec<Projection> = family.iter().map(Projection::complement).collect();
    Ok(sup_family(&complements)?.complement())
}

/// Projection onto `⋂ range(e)` computed per block by elimination: the
/// intersection is the common kernel of the `1 − e`. Independent of the
/// eigensolver.
pub fn intersection_oracle(family: &[Projection]) -> Result<AlgebraElement> {
    let Some(first) = family.first() else {
        return precondition("empty family");
    };
    let alg = first.algebra().clone();
    let mut blocks = Vec::with_capacity(alg.num_blocks());
    for (b, &n) in alg.block_sizes().iter().enumerate() {
        let mut rows = Vec::new();
        for e in family {
            let c = Block::identity(n, n) - e.element.block(b);
            for i in 0..n {
                rows.push((0..n).map(|j| c[(i, j)]).collect::<Vec<C64>>());
            }
        }
        let ns = linear::nullspace(rows, n);
        let span = Span::from_vectors(n, ns);
        let mut p = Block::zeros(n, n);
        for q in span.basis() {
            for i in 0..n {
                for j in 0..n {
                    p[(i, j)] += q[i] * q[j].conj();
                }
            }
        }
        blocks.push(p);
    }
    AlgebraElement::new(&alg, blocks)
}

/// One failed lattice law.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeViolation {
    pub sample: usize,
    pub law: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeReport {
    pub algebra: String,
    pub samples: usize,
    pub checks: usize,
    pub max_residual: f64,
    pub violations: Vec<LatticeViolation>,
}

impl LatticeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct LawCheck<'a> {
    report: &'a mut LatticeReport,
    sample: usize,
}

impl LawCheck<'_> {
    fn residual(&mut self, law: &str, residual: f64) {
        self.report.checks += 1;
        self.report.max_residual = self.report.max_residual.max(residual);
        if !(residual <= tol::COHERENCE) {
            self.report.violations.push(LatticeViolation {
                sample: self.sample,
                law: law.to_string(),
                residual,
            });
        }
    }

    fn holds(&mut self, law: &str, ok: bool) {
        self.residual(law, if ok { 0.0 } else { f64::INFINITY });
    }
}

/// Pairwise orthogonal family built from disjoint groups of the columns of a
/// random unitary, per block.
pub fn random_orthogonal_family(rng: &mut random::SeededRng, alg: &FinStarAlgebra, members: usize) -> Vec<Projection> {
    let mut blocks: Vec<Vec<Block>> = vec![Vec::new(); members];
    for &n in alg.block_sizes() {
        let u = random::unitary(rng, n);
        // one extra label so some columns stay outside the family
        let labels = random::grouping(rng, n, members + 1);
        for (m, slot) in blocks.iter_mut().enumerate() {
            let mut p = Block::zeros(n, n);
            for (col, _) in labels.iter().enumerate().filter(|(_, &l)| l == m) {
                let c = u.column(col);
                p += &c * c.adjoint();
            }
            slot.push(p);
        }
    }
    blocks
        .into_iter()
        .map(|b| Projection::from_element_unchecked(AlgebraElement::new(alg, b).expect("shape")))
        .collect()
}

/// Samples random projections and checks the lattice laws.
pub fn verify_lattice(alg: &FinStarAlgebra, samples: usize, seed: u64) -> Result<LatticeReport> {
    if samples == 0 {
        return precondition("at least one sample is required");
    }
    let mut rng = random::rng(seed);
    let mut report = LatticeReport {
        algebra: alg.to_string(),
        samples,
        checks: 0,
        max_residual: 0.0,
        violations: Vec::new(),
    };
    let t = tol::COHERENCE;
    let one = Projection::one(alg);
    let zero = Projection::zero(alg);
    for sample in 0..samples {
        let mut check = LawCheck {
            report: &mut report,
            sample,
        };
        let draw = |rng: &mut random::SeededRng| Projection::from_element_unchecked(random::projection(rng, alg));
        let e = draw(&mut rng);
        let f = draw(&mut rng);
        let g = draw(&mut rng);

        // partial order on a comparable chain e' ≤ f' ≤ g
        let f2 = inf_family(&[f.clone(), g.clone()])?;
        let e2 = inf_family(&[e.clone(), f2.clone()])?;
        check.holds("reflexive", leq(&e, &e, t)?);
        check.holds(
            "transitive",
            !leq(&e2, &f2, t)? || !leq(&f2, &g, t)? || leq(&e2, &g, t)?,
        );
        if leq(&e, &f, t)? && leq(&f, &e, t)? {
            check.residual("antisymmetric", e.dist(&f));
        }

        let family = vec![e.clone(), f.clone(), g.clone()];
        let sup = sup_family(&family)?;
        let inf = inf_family(&family)?;
        check.holds("sup-is-projection", sup.element.is_projection(t));
        check.holds("inf-is-projection", inf.element.is_projection(t));
        for m in &family {
            check.holds("sup-upper-bound", leq(m, &sup, t)?);
            check.holds("inf-lower-bound", leq(&inf, m, t)?);
        }
        // least upper bound against an upper bound that is not the unit
        let u = sup_family(&[sup.clone(), draw(&mut rng)])?;
        check.holds("sup-least", leq(&sup, &u, t)?);
        let v = inf_family(&[inf.clone(), draw(&mut rng)])?;
        check.holds("inf-greatest", leq(&v, &inf, t)?);

        let join = sup_family(&[e.clone(), f.clone()])?;
        let meet = inf_family(&[e.clone(), f.clone()])?;
        check.residual("absorption-meet", inf_family(&[e.clone(), join])?.dist(&e));
        check.residual("absorption-join", sup_family(&[e.clone(), meet])?.dist(&e));

        let ec = e.complement();
        check.residual("complement-join", sup_family(&[e.clone(), ec.clone()])?.dist(&one));
        check.residual("complement-meet", inf_family(&[e.clone(), ec])?.dist(&zero));

        let oracle = intersection_oracle(&family)?;
        check.residual("meet-oracle", inf.element.dist(&oracle));

        let members = 1 + sample % 3;
        let ortho = random_orthogonal_family(&mut rng, alg, members);
        let mut sum = AlgebraElement::zero(alg);
        for p in &ortho {
            sum = sum.add(&p.element)?;
        }
        check.residual("orthogonal-sup-is-sum", sup_family(&ortho)?.element.dist(&sum));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matstar::real_block;

    fn p(e: AlgebraElement) -> Projection {
        Projection::new(e, tol::DEFAULT).unwrap()
    }

    fn diag(v: &[f64]) -> Projection {
        p(AlgebraElement::diag(v).unwrap())
    }

    fn plus() -> Projection {
        p(AlgebraElement::from_block(real_block(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap())
    }

    fn minus() -> Projection {
        p(AlgebraElement::from_block(real_block(&[&[0.5, -0.5], &[-0.5, 0.5]])).unwrap())
    }

    const T: f64 = tol::DEFAULT;

    #[test]
    fn order_examples() {
        assert!(leq(&diag(&[1.0, 0.0, 0.0]), &diag(&[1.0, 1.0, 0.0]), T).unwrap());
        let e = plus();
        assert!(leq(&e, &e, T).unwrap());
        assert!(!leq(&diag(&[1.0, 0.0]), &plus(), T).unwrap());
        assert!(!leq(&plus(), &diag(&[1.0, 0.0]), T).unwrap());
    }

    #[test]
    fn orthogonality_examples() {
        assert!(orthogonal(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), T).unwrap());
        assert!(!orthogonal(&plus(), &plus(), T).unwrap());
        assert!(orthogonal(&plus(), &minus(), T).unwrap());
    }

    #[test]
    fn sup_examples() {
        let one = diag(&[1.0, 1.0]);
        let s = sup_family(&[diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        assert!(s.dist(&one) < 1e-12);
        assert!(sup_family(&[plus()]).unwrap().dist(&plus()) < 1e-12);
        let s = sup_family(&[diag(&[1.0, 0.0]), plus()]).unwrap();
        assert!(s.dist(&one) < 1e-12);
        assert_eq!(s.rank_per_block(), &[2]);
        assert!(sup_family(&[]).is_err());
    }

    #[test]
    fn inf_examples() {
        let i = inf_family(&[diag(&[1.0, 1.0, 0.0]), diag(&[0.0, 1.0, 1.0])]).unwrap();
        assert!(i.dist(&diag(&[0.0, 1.0, 0.0])) < 1e-12);
        let one = diag(&[1.0, 1.0]);
        assert!(inf_family(&[plus(), one]).unwrap().dist(&plus()) < 1e-12);
        let i = inf_family(&[diag(&[1.0, 0.0]), plus()]).unwrap();
        assert!(i.element().norm() < 1e-12);
        let oracle = intersection_oracle(&[diag(&[1.0, 0.0]), plus()]).unwrap();
        assert!(oracle.norm() < 1e-12);
        assert!(inf_family(&[]).is_err());
    }

    #[test]
    fn lattice_suite_small_algebras() {
        for sizes in [vec![1], vec![2], vec![2, 3]] {
            let alg = FinStarAlgebra::new(sizes).unwrap();
            let r = verify_lattice(&alg, 100, 11).unwrap();
            assert!(r.passed(), "{:?}", r.violations);
        }
        assert!(verify_lattice(&FinStarAlgebra::matrix(2).unwrap(), 0, 1).is_err());
    }

    #[test]
    fn rejects_non_projection() {
        assert!(Projection::new(AlgebraElement::diag(&[0.5]).unwrap(), T).is_err());
    }
}
