//! Locally AW* structure of a projective system.
//!
//! Subalgebras are carried as spanning sets inside each coordinate algebra and
//! certified numerically: closure, restricted-map coherence, commutativity,
//! maximality, generation by projections, and the Baer property relative to
//! the ambient algebra. On top of that sit the equivalence verifier, the
//! approximation of commutative elements by projection multiples, the
//! supremum and annihilation check for orthogonal families, central annihilators of right ideals, and the
//! bounded part.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::annihil::{self, right_annihilating_projection, SamplingPlan};
use crate::error::{precondition, Error, Result};
use crate::limits::{validate_system, ChainGenerator, ConnectingMap, ProjectiveSystem, Thread, Verdict};
use crate::linear::{self, Span};
use crate::matstar::{hermitian_eigen, AlgebraElement, Block, FinStarAlgebra, C64};
use crate::projlat::{self, leq, sup_family, Projection};
use crate::random::{self, SeededRng};
use crate::report::CheckRecord;
use crate::tol;

const T: f64 = tol::COHERENCE;

pub mod refs {
    pub const EQUIVALENCE: &str = "Baer ⇔ Kaplansky (i)+(ii) ⇔ coordinatewise AW*";
    pub const BAER_LIMIT: &str = "right annihilators in the limit are generated by coherent projections";
    pub const BAER_COORD: &str = "every coordinate algebra is a Baer *-algebra";
    pub const KAPLANSKY_SUP: &str = "orthogonal families of projections have a supremum";
    pub const KAPLANSKY_MASA: &str = "maximal commutative *-subalgebras are generated by their projections";
    pub const CENTER: &str = "the center is a locally AW*-subalgebra";
    pub const MASA: &str = "a maximal commutative *-subalgebra is a locally AW*-subalgebra";
    pub const CORNER: &str = "a corner eAe is a locally AW*-subalgebra";
    pub const COMMUTANT: &str = "commutants of self-adjoint sets are Baer *-subalgebras";
    pub const APPROX: &str = "commutative elements are approximated by projection multiples";
    pub const SUP_ANNIHILATION: &str = "sup of orthogonal projections inherits annihilation and commutation";
    pub const IDEAL: &str = "the right annihilator of a right ideal is generated by a central projection";
    pub const PROJ_BOUNDED: &str = "projections are bounded elements";
    pub const BOUNDED_PART: &str = "the bounded part b(A) is an AW*-algebra";
    pub const UNIT: &str = "the unit has seminorm 1 at every node";
}

/// Linear subspace of one coordinate algebra, given by a basis.
#[derive(Clone, Debug)]
pub struct Subalgebra {
    algebra: FinStarAlgebra,
    basis: Vec<AlgebraElement>,
    span: Span,
    unit: AlgebraElement,
}

impl Subalgebra {
    /// Span of `generators` (dependent ones are dropped).
    pub fn spanned_by(algebra: &FinStarAlgebra, generators: Vec<AlgebraElement>) -> Self {
        let mut span = Span::new(algebra.dimension());
        let mut basis = Vec::new();
        for g in generators {
            if span.push(g.to_vector()) {
                basis.push(g);
            }
        }
        Self {
            algebra: algebra.clone(),
            basis,
            span,
            unit: AlgebraElement::identity(algebra),
        }
    }

    /// Sets the unit of the subalgebra (a projection of the ambient algebra).
    pub fn with_unit(mut self, unit: AlgebraElement) -> Self {
        self.unit = unit;
        self
    }

    pub fn unit(&self) -> &AlgebraElement {
        &self.unit
    }

    pub fn algebra(&self) -> &FinStarAlgebra {
        &self.algebra
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Distance from `x` to the subspace, relative to `max(1, ‖x‖_F)`.
    pub fn residual(&self, x: &AlgebraElement) -> f64 {
        self.span.residual(&x.to_vector()) / x.frobenius().max(1.0)
    }

    pub fn contains(&self, x: &AlgebraElement) -> bool {
        self.residual(x) <= T
    }

    /// Worst residual of `b_i b_j` and `b_i*` against the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.basis.iter().enumerate() {
            worst = worst.max(self.residual(&a.adjoint()));
            for b in &self.basis[i..] {
                worst = worst.max(self.residual(&a.mul(b).expect("same algebra")));
                worst = worst.max(self.residual(&b.mul(a).expect("same algebra")));
            }
        }
        worst
    }

    /// Worst `‖[b_i, b_j]‖`.
    pub fn commutator_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                worst = worst.max(a.commutator(b).expect("same algebra").norm());
            }
        }
        worst
    }

    pub fn is_commutative(&self) -> bool {
        self.commutator_residual() <= T
    }

    /// Projections of the subalgebra, as the spectral projections of a generic
    /// self-adjoint element of it. For a commutative subalgebra these are its
    /// minimal projections.
    pub fn spectral_projections(&self, rng: &mut SeededRng) -> Result<Vec<AlgebraElement>> {
        let mut h = AlgebraElement::zero(&self.algebra);
        for b in &self.basis {
            let re = b.add(&b.adjoint())?.scale_real(0.5);
            let im = b.sub(&b.adjoint())?.scale(C64::new(0.0, -0.5));
            h = h.add(&re.scale_real(rng.gen_range(0.5..1.5)))?;
            h = h.add(&im.scale_real(rng.gen_range(0.5..1.5)))?;
        }
        let eig = hermitian_eigen(&h)?;
        let clustered = eig.clustered_eigenvalues();
        let mut out = Vec::new();
        for (b, vals) in clustered.iter().enumerate() {
            let mut start = 0;
            while start < vals.len() {
                let mut end = start + 1;
                while end < vals.len() && vals[end] == vals[start] {
                    end += 1;
                }
                let u = eig.unitary.block(b);
                let cols = u.columns(start, end - start);
                let mut e = AlgebraElement::zero(&self.algebra);
                let mut blocks = e.clone().into_blocks();
                blocks[b] = &cols * cols.adjoint();
                e = AlgebraElement::new(&self.algebra, blocks)?;
                out.push(e);
                start = end;
            }
        }
        Ok(out)
    }

    /// Dimension of the commutant of the subalgebra inside its algebra, by
    /// elimination.
    pub fn commutant_dim(&self) -> usize {
        commutant_of(&self.algebra, &self.basis).dim()
    }

    /// Samples subsets of the subalgebra and returns the worst distance of
    /// their right annihilating projections, compressed by the unit, from the
    /// subalgebra.
    pub fn baer_residual(&self, rng: &mut SeededRng, samples: usize) -> Result<f64> {
        let mut worst = 0.0_f64;
        if self.basis.is_empty() {
            return Ok(0.0);
        }
        for _ in 0..samples {
            let k = rng.gen_range(1..=3);
            let set: Vec<AlgebraElement> = (0..k)
                .map(|_| {
                    // sparse combination so annihilators are nontrivial
                    let mut x = AlgebraElement::zero(&self.algebra);
                    for b in &self.basis {
                        if rng.gen_bool(0.4) {
                            x = x.add(&b.scale(random::complex(rng))).expect("same algebra");
                        }
                    }
                    x
                })
                .collect();
            let g = right_annihilating_projection(&set)?;
            let g = self.unit.mul(g.element())?.mul(&self.unit)?;
            worst = worst.max(self.residual(&g));
        }
        Ok(worst)
    }
}

/// `{x : x s = s x for all s}` by elimination on stacked commutation operators.
pub fn commutant_of(alg: &FinStarAlgebra, set: &[AlgebraElement]) -> Subalgebra {
    let mut rows = Vec::new();
    for s in set {
        rows.extend(linear::operator_rows(alg, |x| x.commutator(s).expect("same algebra")));
    }
    let ns = linear::nullspace(rows, alg.dimension());
    let gens = ns
        .iter()
        .map(|v| AlgebraElement::from_vector(alg, v).expect("dimension"))
        .collect();
    Subalgebra::spanned_by(alg, gens)
}

/// What a [`Subsystem`] represents; selects the certification checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SubsystemKind {
    Center,
    Masa,
    Commutant,
    Corner,
}

/// Compression data of a corner `eAe`.
#[derive(Clone, Debug)]
pub struct CornerData {
    /// The compressed system with blocks of size `rank(e_α)` per block.
    pub compressed: Arc<ProjectiveSystem>,
    /// Per node, the isometry `V` of each nonzero block (`V*V = 1`, `VV* = e`).
    pub isometries: Vec<Vec<Block>>,
    /// Which parent block each compressed block comes from.
    pub block_origin: Vec<Vec<usize>>,
    /// `e = 0`: the zero algebra at every node.
    pub degenerate: bool,
}

/// Family of subalgebras `B_α ⊆ A_α` with restricted maps `g_α^β|B_β`.
#[derive(Clone, Debug)]
pub struct Subsystem {
    pub kind: SubsystemKind,
    pub parent: Arc<ProjectiveSystem>,
    pub nodes: Vec<Subalgebra>,
    pub corner: Option<CornerData>,
}

impl Subsystem {
    pub fn dims(&self) -> Vec<usize> {
        self.nodes.iter().map(Subalgebra::dim).collect()
    }

    /// Worst distance of `g_α^β(b)` from `B_α` over basis elements `b` of
    /// `B_β`, for all comparable pairs.
    pub fn restriction_residual(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (&(a, b), m) in self.parent.maps() {
            for x in self.nodes[b].basis() {
                let img = m.apply(x, self.parent.algebra(a))?;
                worst = worst.max(self.nodes[a].residual(&img));
            }
        }
        Ok(worst)
    }

    /// Runs every check relevant to the kind; one record per check.
    pub fn certify(&self, seed: u64) -> Result<Vec<CheckRecord>> {
        let reference = match self.kind {
            SubsystemKind::Center => refs::CENTER,
            SubsystemKind::Masa => refs::MASA,
            SubsystemKind::Commutant => refs::COMMUTANT,
            SubsystemKind::Corner => refs::CORNER,
        };
        let tag = match self.kind {
            SubsystemKind::Center => "center",
            SubsystemKind::Masa => "masa",
            SubsystemKind::Commutant => "commutant",
            SubsystemKind::Corner => "corner",
        };
        let mut rng = random::rng(seed);
        let mut out = Vec::new();

        let closure = self.nodes.iter().map(Subalgebra::closure_residual).fold(0.0, f64::max);
        out.push(CheckRecord::bounded(format!("{tag}-closure"), reference, closure, T));

        let restriction = self.restriction_residual()?;
        out.push(CheckRecord::bounded(
            format!("{tag}-restricted-maps"),
            reference,
            restriction,
            T,
        ));

        let mut baer = 0.0_f64;
        for node in &self.nodes {
            baer = baer.max(node.baer_residual(&mut rng, 20)?);
        }
        out.push(CheckRecord::bounded(
            format!("{tag}-baer-subalgebra"),
            reference,
            baer,
            T,
        ));

        if matches!(self.kind, SubsystemKind::Center | SubsystemKind::Masa) {
            let comm = self
                .nodes
                .iter()
                .map(Subalgebra::commutator_residual)
                .fold(0.0, f64::max);
            out.push(CheckRecord::bounded(format!("{tag}-commutative"), reference, comm, T));
            out.push(self.projection_span_record(tag, reference, &mut rng)?);
        }
        match self.kind {
            SubsystemKind::Masa => {
                let mut witness = None;
                for (i, node) in self.nodes.iter().enumerate() {
                    let c = node.commutant_dim();
                    if c != node.dim() {
                        witness.get_or_insert(format!(
                            "node `{}`: commutant dim {c} vs subalgebra dim {}",
                            self.parent.label(i),
                            node.dim()
                        ));
                    }
                }
                out.push(match witness {
                    None => CheckRecord::pass("masa-maximal", reference),
                    Some(w) => CheckRecord::fail("masa-maximal", reference, w),
                });
            }
            SubsystemKind::Center => {
                let mut witness = None;
                for (i, node) in self.nodes.iter().enumerate() {
                    let alg = self.parent.algebra(i);
                    let oracle = commutant_of(alg, &alg.basis());
                    if node.dim() != alg.num_blocks() || oracle.dim() != node.dim() {
                        witness.get_or_insert(format!(
                            "node `{}`: dim {} (blocks {}, commutant oracle {})",
                            self.parent.label(i),
                            node.dim(),
                            alg.num_blocks(),
                            oracle.dim()
                        ));
                    }
                }
                out.push(match witness {
                    None => CheckRecord::pass("center-dimension", reference),
                    Some(w) => CheckRecord::fail("center-dimension", reference, w),
                });
            }
            SubsystemKind::Corner => {
                if let Some(c) = &self.corner {
                    let recs = validate_system(&c.compressed);
                    let failed = recs.iter().find(|r| !r.passed);
                    out.push(match failed {
                        None => CheckRecord::pass("corner-compressed-system", reference),
                        Some(r) => CheckRecord::fail(
                            "corner-compressed-system",
                            reference,
                            format!("{}: {}", r.id, r.witness.clone().unwrap_or_default()),
                        ),
                    });
                    let mut iso = 0.0_f64;
                    for vs in &c.isometries {
                        for v in vs {
                            let r = v.ncols();
                            iso = iso.max((v.adjoint() * v - Block::identity(r, r)).norm());
                        }
                    }
                    out.push(CheckRecord::bounded("corner-isometries", reference, iso, T));
                    let dims_ok = self
                        .nodes
                        .iter()
                        .zip(c.compressed.algebras())
                        .all(|(n, a)| n.dim() == a.dimension());
                    out.push(CheckRecord::new("corner-dimension", reference, dims_ok));
                }
            }
            SubsystemKind::Commutant => {}
        }
        Ok(out)
    }

    fn projection_span_record(&self, tag: &str, reference: &str, rng: &mut SeededRng) -> Result<CheckRecord> {
        let mut witness = None;
        let mut worst = 0.0_f64;
        for (i, node) in self.nodes.iter().enumerate() {
            let projections = node.spectral_projections(rng)?;
            for p in &projections {
                worst = worst.max(node.residual(p));
            }
            let span = Subalgebra::spanned_by(node.algebra(), projections);
            if span.dim() != node.dim() {
                witness.get_or_insert(format!(
                    "node `{}`: projections span {} of {} dimensions",
                    self.parent.label(i),
                    span.dim(),
                    node.dim()
                ));
            }
        }
        let mut rec = CheckRecord::new(
            format!("{tag}-generated-by-projections"),
            reference,
            witness.is_none() && worst <= T,
        )
        .with_residual("max_residual", worst);
        if let Some(w) = witness {
            rec = rec.with_witness(w);
        }
        Ok(rec)
    }
}

/// Maximal commutative subalgebra containing a self-adjoint `x`: the diagonal
/// algebra in the eigenbasis of each block (repeated eigenvalues refined by the
/// solver's eigenvector order).
pub fn masa_of_element(x: &AlgebraElement) -> Result<Subalgebra> {
    let eig = hermitian_eigen(x)?;
    Ok(Subalgebra::spanned_by(x.algebra(), eig.eigenprojections()))
}

/// MASA containing a self-adjoint thread: built at the top node and pushed
/// down the connecting maps, so the restricted maps are coherent.
pub fn masa_containing(x: &Thread) -> Result<Subsystem> {
    let sys = Arc::clone(x.system());
    let top = sys.top()?;
    let x_top = x.project(top)?;
    let eig = hermitian_eigen(&x_top)?;
    let minimal = eig.eigenprojections();
    let nodes = (0..sys.len())
        .map(|a| {
            let imgs = minimal
                .iter()
                .map(|p| sys.apply(a, top, p))
                .collect::<Result<Vec<_>>>()?;
            Ok(Subalgebra::spanned_by(sys.algebra(a), imgs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Subsystem {
        kind: SubsystemKind::Masa,
        parent: sys,
        nodes,
        corner: None,
    })
}

fn check_self_adjoint_set(set: &[AlgebraElement]) -> Result<()> {
    for (i, s) in set.iter().enumerate() {
        let adj = s.adjoint();
        if !set.iter().any(|t| t.dist(&adj) <= T * s.norm().max(1.0)) {
            return precondition(format!(
                "set is not self-adjoint: element {i} has no adjoint in the set"
            ));
        }
    }
    Ok(())
}

/// Commutant of a self-adjoint set in one algebra.
pub fn commutant(set: &[AlgebraElement]) -> Result<Subalgebra> {
    let Some(first) = set.first() else {
        return precondition("commutant of an empty set");
    };
    check_self_adjoint_set(set)?;
    Ok(commutant_of(first.algebra(), set))
}

/// Coordinatewise commutant of a self-adjoint set of threads.
pub fn commutant_system(set: &[Thread]) -> Result<Subsystem> {
    let Some(first) = set.first() else {
        return precondition("commutant of an empty set");
    };
    let sys = Arc::clone(first.system());
    let nodes = (0..sys.len())
        .map(|a| {
            let coords = set.iter().map(|t| t.project(a)).collect::<Result<Vec<_>>>()?;
            commutant(&coords)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Subsystem {
        kind: SubsystemKind::Commutant,
        parent: sys,
        nodes,
        corner: None,
    })
}

/// The center: scalars per block at every node.
pub fn center(sys: &Arc<ProjectiveSystem>) -> Subsystem {
    let nodes = sys
        .algebras()
        .iter()
        .map(|alg| Subalgebra::spanned_by(alg, (0..alg.num_blocks()).map(|b| alg.block_unit(b)).collect()))
        .collect();
    Subsystem {
        kind: SubsystemKind::Center,
        parent: Arc::clone(sys),
        nodes,
        corner: None,
    }
}

fn range_isometry(e: &Block) -> Result<Block> {
    let el = AlgebraElement::from_block(e.clone())?;
    let eig = hermitian_eigen(&el)?;
    let vals = &eig.eigenvalues[0];
    let u = eig.unitary.block(0);
    let first = vals.iter().position(|&t| t > 0.5).unwrap_or(vals.len());
    Ok(u.columns(first, vals.len() - first).into_owned())
}

/// The corner `eAe` for a coherent projection thread `e`.
pub fn corner(e: &Thread) -> Result<Subsystem> {
    let sys = Arc::clone(e.system());
    if !e.is_projection(tol::DEFAULT) {
        return precondition("corner needs a projection thread");
    }
    let mut isometries = Vec::with_capacity(sys.len());
    let mut origin = Vec::with_capacity(sys.len());
    let mut algebras = Vec::with_capacity(sys.len());
    let mut nodes = Vec::with_capacity(sys.len());
    for a in 0..sys.len() {
        let ea = e.project(a)?;
        let mut vs = Vec::new();
        let mut from = Vec::new();
        for (b, blk) in ea.blocks().iter().enumerate() {
            let v = range_isometry(blk)?;
            if v.ncols() > 0 {
                vs.push(v);
                from.push(b);
            }
        }
        let alg = if vs.is_empty() {
            FinStarAlgebra::empty().with_label(sys.label(a).to_string())
        } else {
            FinStarAlgebra::new(vs.iter().map(|v| v.ncols()).collect())?.with_label(sys.label(a).to_string())
        };
        // basis V E_ij V* of e_α A_α e_α
        let parent_alg = sys.algebra(a);
        let mut gens = Vec::new();
        for (v, &b) in vs.iter().zip(&from) {
            let r = v.ncols();
            for i in 0..r {
                for j in 0..r {
                    let unit = v.column(i) * v.column(j).adjoint();
                    let mut blocks = AlgebraElement::zero(parent_alg).into_blocks();
                    blocks[b] = unit;
                    gens.push(AlgebraElement::new(parent_alg, blocks)?);
                }
            }
        }
        nodes.push(Subalgebra::spanned_by(parent_alg, gens).with_unit(ea));
        algebras.push(alg);
        isometries.push(vs);
        origin.push(from);
    }
    let degenerate = algebras.iter().all(FinStarAlgebra::is_degenerate);

    // restricted maps on the generating pairs, transported to the compressions
    let mut maps = Vec::new();
    for m in sys.given_maps() {
        let (a, b) = (m.target, m.source);
        let mut kept = Vec::new();
        let mut us = Vec::new();
        for (j, &pb) in origin[a].iter().enumerate() {
            let src_parent_block = m.kept_blocks[pb];
            let Some(k) = origin[b].iter().position(|&x| x == src_parent_block) else {
                return Err(Error::Structure(format!(
                    "corner: block {pb} of `{}` has no preimage in `{}`",
                    sys.label(a),
                    sys.label(b)
                )));
            };
            let u = m.unitaries[pb]
                .clone()
                .unwrap_or_else(|| Block::identity(isometries[b][k].nrows(), isometries[b][k].nrows()));
            let w = isometries[a][j].adjoint() * u * &isometries[b][k];
            kept.push(k);
            us.push(Some(w));
        }
        maps.push(ConnectingMap::new(b, a, kept).with_unitaries(us));
    }
    let compressed = ProjectiveSystem::new(sys.poset().clone(), algebras, maps)?;
    Ok(Subsystem {
        kind: SubsystemKind::Corner,
        parent: sys,
        nodes,
        corner: Some(CornerData {
            compressed: Arc::new(compressed),
            isometries,
            block_origin: origin,
            degenerate,
        }),
    })
}

/// Projection `e ∈ B` with `e = x y` for some `y ∈ B` and `‖x − e x‖ < ε`.
#[derive(Clone, Debug)]
pub struct ProjectionApprox {
    pub projection: Projection,
    pub multiplier: AlgebraElement,
    /// `‖x − e x‖`.
    pub residual: f64,
    /// `‖e − x y‖`.
    pub multiple_residual: f64,
    /// Worst distance of `e` and `y` from `B`.
    pub membership_residual: f64,
}

/// Keeps the spectral coordinates of `x` with `|x_i| > ε/2`. The multiplier is
/// the pseudo-inverse of `x` on the kept coordinates.
pub fn kaplansky_approx(b: &Subalgebra, x: &AlgebraElement, eps: f64) -> Result<ProjectionApprox> {
    if !(eps > 0.0) {
        return precondition(format!("ε must be positive, got {eps}"));
    }
    if !b.is_commutative() {
        return precondition("subalgebra is not commutative");
    }
    if !b.contains(x) {
        return precondition(format!(
            "element is not in the subalgebra (residual {:e})",
            b.residual(x)
        ));
    }
    let gram = x.adjoint().mul(x)?;
    let eig = hermitian_eigen(&gram)?;
    let cut = (eps / 2.0).powi(2);
    let e = eig.apply(|t| if t > cut { 1.0 } else { 0.0 });
    let inv = eig.apply(|t| if t > cut { 1.0 / t } else { 0.0 });
    let y = inv.mul(&x.adjoint())?;
    let residual = x.sub(&e.mul(x)?)?.norm();
    let multiple_residual = e.dist(&x.mul(&y)?);
    let membership_residual = b.residual(&e).max(b.residual(&y));
    Ok(ProjectionApprox {
        projection: Projection::from_element_unchecked(e),
        multiplier: y,
        residual,
        multiple_residual,
        membership_residual,
    })
}

/// Generic self-adjoint element of `C*(x)` for a normal `x`: its eigenspaces
/// refine the joint eigenspaces of the real and imaginary parts.
fn generic_hermitian(x: &AlgebraElement) -> AlgebraElement {
    let re = x.add(&x.adjoint()).expect("same algebra").scale_real(0.5);
    let im = x.sub(&x.adjoint()).expect("same algebra").scale(C64::new(0.0, -0.5));
    re.add(&im.scale_real(std::f64::consts::SQRT_2)).expect("same algebra")
}

/// Threadwise approximation: per node inside a MASA containing `x`, with the
/// projections lifted to a coherent thread.
pub fn kaplansky_approx_thread(x: &Thread, eps: f64) -> Result<(Thread, Vec<ProjectionApprox>)> {
    let sys = Arc::clone(x.system());
    let h_top = generic_hermitian(&x.project(sys.top()?)?);
    let h = Thread::from_top(&sys, h_top)?;
    let masa = masa_containing(&h)?;
    let mut approx = Vec::with_capacity(sys.len());
    for a in 0..sys.len() {
        approx.push(kaplansky_approx(&masa.nodes[a], &x.project(a)?, eps)?);
    }
    let e = Thread::lift(&sys, approx.iter().map(|p| p.projection.element().clone()).collect())?;
    Ok((e, approx))
}

fn coordinatewise_sup(family: &[Thread]) -> Result<Thread> {
    let Some(first) = family.first() else {
        return precondition("empty family");
    };
    let sys = Arc::clone(first.system());
    let coords = (0..sys.len())
        .map(|a| {
            let ps = family
                .iter()
                .map(|t| Ok(Projection::from_element_unchecked(t.project(a)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(sup_family(&ps)?.into_element())
        })
        .collect::<Result<Vec<_>>>()?;
    Thread::lift(&sys, coords)
}

/// Supremum of projection threads, computed per node and lifted.
pub fn sup_threads(family: &[Thread]) -> Result<Thread> {
    coordinatewise_sup(family)
}

fn max_over_nodes(x: &Thread, f: impl Fn(&AlgebraElement) -> f64) -> f64 {
    x.coordinates().iter().map(f).fold(0.0, f64::max)
}

/// For an orthogonal family with supremum `e`: `x e_λ = 0 ∀λ ⇒ x e = 0` and
/// `[x, e_λ] = 0 ∀λ ⇒ [x, e] = 0`. Returns the records and `e`.
pub fn orthogonal_sup_check(family: &[Thread], x: &Thread) -> Result<(Vec<CheckRecord>, Thread)> {
    if family.is_empty() {
        return precondition("empty family");
    }
    let mut out = Vec::new();
    let mut ortho = 0.0_f64;
    for (i, p) in family.iter().enumerate() {
        if !p.is_projection(tol::DEFAULT) {
            return precondition(format!("family member {i} is not a projection thread"));
        }
        for q in &family[i + 1..] {
            ortho = ortho.max(max_over_nodes(&p.mul(q)?, |z| z.norm()));
        }
    }
    if ortho > T {
        return precondition(format!("family is not pairwise orthogonal ({ortho:e})"));
    }
    out.push(CheckRecord::bounded(
        "family-orthogonal",
        refs::SUP_ANNIHILATION,
        ortho,
        T,
    ));
    let e = coordinatewise_sup(family)?;

    let premise_a = family
        .iter()
        .map(|p| x.mul(p).map(|xp| max_over_nodes(&xp, |z| z.norm())))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let concl_a = max_over_nodes(&x.mul(&e)?, |z| z.norm());
    out.push(implication_record("sup-annihilation", premise_a, concl_a));

    let premise_b = family
        .iter()
        .map(|p| {
            let c = x.mul(p)?.sub(&p.mul(x)?)?;
            Ok(max_over_nodes(&c, |z| z.norm()))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let concl_b = max_over_nodes(&x.mul(&e)?.sub(&e.mul(x)?)?, |z| z.norm());
    out.push(implication_record("sup-commutation", premise_b, concl_b));
    Ok((out, e))
}

fn implication_record(id: &str, premise: f64, conclusion: f64) -> CheckRecord {
    let holds = premise > T || conclusion <= T;
    let mut r = CheckRecord::new(id, refs::SUP_ANNIHILATION, holds)
        .with_residual("premise", premise)
        .with_residual("conclusion", conclusion);
    if premise > T {
        r = r.with_witness("premise does not hold; implication vacuous");
    }
    r
}

/// Right annihilator of the right ideal generated by `set`: a central
/// projection thread, with centrality and oracle records.
pub fn ideal_annihilator_central(sys: &Arc<ProjectiveSystem>, set: &[Thread]) -> Result<(Thread, Vec<CheckRecord>)> {
    if set.is_empty() {
        return precondition("empty generating set");
    }
    let mut coords = Vec::with_capacity(sys.len());
    let mut centrality = 0.0_f64;
    let mut oracle_witness = None;
    let mut oracle_residual = 0.0_f64;
    for a in 0..sys.len() {
        let alg = sys.algebra(a);
        let basis = alg.basis();
        let mut ideal = Vec::with_capacity(set.len() * basis.len());
        for t in set {
            let ta = t.project(a)?;
            for b in &basis {
                ideal.push(ta.mul(b)?);
            }
        }
        let res = annihil::right_annihilator(&ideal)?;
        oracle_residual = oracle_residual.max(res.membership_residual);
        if !res.agrees() {
            oracle_witness.get_or_insert(format!(
                "node `{}`: dim {} vs oracle {}",
                sys.label(a),
                res.subspace_dim,
                res.oracle_dim
            ));
        }
        let g = res.generator.into_element();
        for b in &basis {
            centrality = centrality.max(g.commutator(b)?.norm());
        }
        coords.push(g);
    }
    let g = Thread::lift(sys, coords)?;
    let mut oracle = CheckRecord::new("ideal-annihilator-oracle", refs::IDEAL, oracle_witness.is_none())
        .with_residual("max_residual", oracle_residual);
    if let Some(w) = oracle_witness {
        oracle = oracle.with_witness(w);
    }
    let records = vec![
        oracle,
        CheckRecord::bounded("ideal-annihilator-central", refs::IDEAL, centrality, T),
    ];
    Ok((g, records))
}

/// Right annihilating projections of a set of threads, computed per node and
/// lifted; the lift checks coherence. Also returns the worst oracle residual
/// and whether every node agreed with the oracle.
pub fn limit_annihilator(set: &[Thread]) -> Result<(Thread, f64, Option<String>)> {
    let Some(first) = set.first() else {
        return precondition("empty set");
    };
    let sys = Arc::clone(first.system());
    let mut coords = Vec::with_capacity(sys.len());
    let mut worst = 0.0_f64;
    let mut witness = None;
    for a in 0..sys.len() {
        let s = set.iter().map(|t| t.project(a)).collect::<Result<Vec<_>>>()?;
        let r = annihil::right_annihilator(&s)?;
        worst = worst.max(r.membership_residual);
        if !r.agrees() {
            witness.get_or_insert(format!(
                "node `{}`: dim {} vs oracle {}",
                sys.label(a),
                r.subspace_dim,
                r.oracle_dim
            ));
        }
        coords.push(r.generator.into_element());
    }
    Ok((Thread::lift(&sys, coords)?, worst, witness))
}

/// Pass/fail of one of the equivalent conditions, with a witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub passed: bool,
    pub checks: usize,
    pub max_residual: f64,
    pub witness: Option<String>,
}

impl ConditionVerdict {
    fn new() -> Self {
        Self {
            passed: true,
            checks: 0,
            max_residual: 0.0,
            witness: None,
        }
    }

    fn observe(&mut self, residual: f64, witness: impl FnOnce() -> String) {
        self.checks += 1;
        self.max_residual = self.max_residual.max(residual);
        if !(residual <= T) {
            self.passed = false;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    fn fail(&mut self, witness: String) {
        self.checks += 1;
        self.passed = false;
        self.witness.get_or_insert(witness);
    }
}

/// The four equivalent conditions and their agreement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub baer: ConditionVerdict,
    pub kaplansky_sup: ConditionVerdict,
    pub kaplansky_masa: ConditionVerdict,
    pub coordinatewise_aw: ConditionVerdict,
    pub agreement: bool,
}

impl EquivalenceReport {
    pub fn verdicts(&self) -> [bool; 4] {
        [
            self.baer.passed,
            self.kaplansky_sup.passed,
            self.kaplansky_masa.passed,
            self.coordinatewise_aw.passed,
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.agreement && self.verdicts().iter().all(|&v| v)
    }

    pub fn records(&self) -> Vec<CheckRecord> {
        let rec = |id: &str, reference: &str, v: &ConditionVerdict| {
            let mut r = CheckRecord::new(id, reference, v.passed)
                .with_residual("checks", v.checks as f64)
                .with_residual("max_residual", v.max_residual);
            if let Some(w) = &v.witness {
                r = r.with_witness(w.clone());
            }
            r
        };
        let mut agree = CheckRecord::new("equivalence-agreement", refs::EQUIVALENCE, self.agreement);
        if !self.agreement {
            agree = agree.with_witness(format!("verdicts disagree: {:?}", self.verdicts()));
        }
        vec![
            rec("limit-baer", refs::BAER_LIMIT, &self.baer),
            rec("kaplansky-orthogonal-sup", refs::KAPLANSKY_SUP, &self.kaplansky_sup),
            rec("kaplansky-masa-projections", refs::KAPLANSKY_MASA, &self.kaplansky_masa),
            rec("coordinatewise-aw", refs::BAER_COORD, &self.coordinatewise_aw),
            agree,
        ]
    }
}

/// Random thread determined by a sampled element at the top node.
pub fn sample_thread(
    rng: &mut SeededRng,
    sys: &Arc<ProjectiveSystem>,
    draw: impl Fn(&mut SeededRng, &FinStarAlgebra) -> AlgebraElement,
) -> Result<Thread> {
    let top = sys.top()?;
    let x = draw(rng, sys.algebra(top));
    Thread::from_top(sys, x)
}

/// Runs the four equivalent conditions on sampled instances and checks that
/// their verdicts agree.
pub fn verify_equivalences(sys: &Arc<ProjectiveSystem>, plan: SamplingPlan) -> Result<EquivalenceReport> {
    if let Some(r) = validate_system(sys).into_iter().find(|r| !r.passed) {
        return precondition(format!("system is not valid: {}", r.id));
    }
    let mut rng = random::rng(plan.seed);
    let top = sys.top()?;

    // (a) Baer in the limit via coordinatewise annihilators
    let mut baer = ConditionVerdict::new();
    for i in 0..plan.count {
        let k = rng.gen_range(1..=plan.max_subset_size.max(1));
        let set = (0..k)
            .map(|_| sample_thread(&mut rng, sys, annihil::sample_element))
            .collect::<Result<Vec<_>>>()?;
        match limit_annihilator(&set) {
            Ok((g, worst, witness)) => {
                baer.observe(worst, || format!("subset {i}: oracle residual {worst:e}"));
                if let Some(w) = witness {
                    baer.fail(format!("subset {i}: {w}"));
                }
                // s g = 0 in the limit
                let mut res = 0.0_f64;
                for s in &set {
                    res = res.max(max_over_nodes(&s.mul(&g)?, |z| z.norm()) / max_over_nodes(s, |z| z.norm()).max(1.0));
                }
                baer.observe(res, || format!("subset {i}: s·g residual {res:e}"));
            }
            Err(e) => baer.fail(format!("subset {i}: {e}")),
        }
    }

    // (b) every coordinate algebra is Baer
    let mut coord = ConditionVerdict::new();
    for a in 0..sys.len() {
        let per_node = SamplingPlan {
            count: plan.count.div_ceil(sys.len()).max(1),
            seed: plan.seed.wrapping_add(a as u64 + 1),
            max_subset_size: plan.max_subset_size,
        };
        for r in annihil::certify_baer(sys.algebra(a), per_node)? {
            let v = r.max_residual();
            if r.passed {
                coord.observe(v.min(T), || unreachable!());
            } else {
                coord.fail(format!("node `{}`: {}", sys.label(a), r.witness.unwrap_or_default()));
            }
        }
    }

    // (c) sups of orthogonal families, coordinatewise + lift
    let mut ksup = ConditionVerdict::new();
    for i in 0..plan.count {
        let members = rng.gen_range(1..=3);
        let family_top = projlat::random_orthogonal_family(&mut rng, sys.algebra(top), members);
        let family = family_top
            .into_iter()
            .map(|p| Thread::from_top(sys, p.into_element()))
            .collect::<Result<Vec<_>>>()?;
        let e = match coordinatewise_sup(&family) {
            Ok(e) => e,
            Err(err) => {
                ksup.fail(format!("family {i}: {err}"));
                continue;
            }
        };
        let extra = sample_thread(&mut rng, sys, random::projection)?;
        for a in 0..sys.len() {
            let ea = Projection::from_element_unchecked(e.project(a)?);
            let mut sum = AlgebraElement::zero(sys.algebra(a));
            let mut upper = vec![extra.project(a)?];
            for p in &family {
                let pa = p.project(a)?;
                sum = sum.add(&pa)?;
                upper.push(pa.clone());
                let pa = Projection::from_element_unchecked(pa);
                if !leq(&pa, &ea, T)? {
                    ksup.fail(format!("family {i}, node `{}`: member not below sup", sys.label(a)));
                }
            }
            let d = ea.element().dist(&sum);
            ksup.observe(d, || {
                format!("family {i}, node `{}`: sup differs from sum by {d:e}", sys.label(a))
            });
            let u = sup_family(
                &upper
                    .into_iter()
                    .map(Projection::from_element_unchecked)
                    .collect::<Vec<_>>(),
            )?;
            if !leq(&ea, &u, T)? {
                ksup.fail(format!(
                    "family {i}, node `{}`: sup not below an upper bound",
                    sys.label(a)
                ));
            }
        }
    }

    // (d) MASAs are generated by their projections
    let mut kmasa = ConditionVerdict::new();
    let masa_samples = plan.count.div_ceil(4).max(1);
    for i in 0..masa_samples {
        let draw = if i % 2 == 0 {
            random::hermitian
        } else {
            random::degenerate_hermitian
        };
        let x = sample_thread(&mut rng, sys, draw)?;
        let masa = masa_containing(&x)?;
        for (a, node) in masa.nodes.iter().enumerate() {
            let xa = x.project(a)?;
            let r = node.residual(&xa);
            kmasa.observe(r, || {
                format!("sample {i}, node `{}`: x not in MASA ({r:e})", sys.label(a))
            });
            let c = node.commutator_residual();
            kmasa.observe(c, || format!("sample {i}, node `{}`: not commutative", sys.label(a)));
            if node.commutant_dim() != node.dim() {
                kmasa.fail(format!("sample {i}, node `{}`: not maximal", sys.label(a)));
            }
            let projections = node.spectral_projections(&mut rng)?;
            let span = Subalgebra::spanned_by(node.algebra(), projections);
            if span.dim() != node.dim() {
                kmasa.fail(format!(
                    "sample {i}, node `{}`: projections span {} of {}",
                    sys.label(a),
                    span.dim(),
                    node.dim()
                ));
            }
        }
        let r = masa.restriction_residual()?;
        kmasa.observe(r, || format!("sample {i}: restricted maps leave the MASA ({r:e})"));
    }

    let verdicts = [baer.passed, ksup.passed, kmasa.passed, coord.passed];
    let agreement = verdicts.iter().all(|&v| v == verdicts[0]);
    Ok(EquivalenceReport {
        baer,
        kaplansky_sup: ksup,
        kaplansky_masa: kmasa,
        coordinatewise_aw: coord,
        agreement,
    })
}

/// Unit of the limit as a thread with a certified bound; generator-backed on
/// lazy chains so boundedness is decidable there.
pub fn unit_thread(sys: &Arc<ProjectiveSystem>) -> Result<Thread> {
    match sys.chain_descriptor() {
        Some(c) => Thread::generated(
            sys,
            ChainGenerator::ConstBlock(Block::identity(c.block_size, c.block_size)),
            None,
        ),
        None => Ok(Thread::unit(sys)),
    }
}

/// Certificate that the bounded part is an AW*-algebra: projections are
/// bounded, annihilator generators of bounded sets are bounded, and
/// `R_{b(A)}(S) = g·b(A)` against the oracle at every node.
pub fn bounded_part(sys: &Arc<ProjectiveSystem>, horizon: usize, plan: SamplingPlan) -> Result<Vec<CheckRecord>> {
    let mut rng = random::rng(plan.seed);
    let mut out = Vec::new();
    let probe = if sys.is_lazy_chain() { horizon } else { sys.len() };
    let qualifier = |s: String| {
        if sys.is_lazy_chain() {
            format!("{s} (horizon {probe})")
        } else {
            s
        }
    };

    let unit = unit_thread(sys)?.sup_norm(probe)?;
    let unit_ok = matches!(unit.verdict, Verdict::Bounded { sup } if (sup - 1.0).abs() <= tol::DEFAULT);
    out.push(
        CheckRecord::new("unit-norm", refs::UNIT, unit_ok)
            .with_residual("sup_norm", unit.sup_over_horizon)
            .with_witness(qualifier(format!("{:?}", unit.verdict))),
    );

    if !sys.is_lazy_chain() {
        out.push(
            CheckRecord::pass("bounded-part-is-whole", refs::BOUNDED_PART)
                .with_witness("finite index set: every thread has sup norm = max of finitely many seminorms"),
        );
    }

    let mut worst = 0.0_f64;
    for _ in 0..plan.count {
        let e = sample_thread(&mut rng, sys, random::projection)?;
        let mut sup = 0.0_f64;
        for a in 0..probe.min(sys.len()) {
            sup = sup.max(e.seminorm(a)?);
        }
        worst = worst.max(sup);
    }
    out.push(
        CheckRecord::bounded("projections-bounded", refs::PROJ_BOUNDED, worst, 1.0 + tol::DEFAULT)
            .with_witness(qualifier(format!("{} sampled projection threads", plan.count))),
    );

    let mut gen_sup = 0.0_f64;
    let mut oracle_res = 0.0_f64;
    let mut witness = None;
    for i in 0..plan.count {
        let k = rng.gen_range(1..=plan.max_subset_size.max(1));
        let set = (0..k)
            .map(|_| sample_thread(&mut rng, sys, annihil::sample_element))
            .collect::<Result<Vec<_>>>()?;
        let (g, res, w) = limit_annihilator(&set)?;
        oracle_res = oracle_res.max(res);
        if let Some(w) = w {
            witness.get_or_insert(format!("subset {i}: {w}"));
        }
        for a in 0..probe.min(sys.len()) {
            gen_sup = gen_sup.max(g.seminorm(a)?);
        }
    }
    out.push(CheckRecord::bounded(
        "annihilator-generators-bounded",
        refs::BOUNDED_PART,
        gen_sup,
        1.0 + tol::DEFAULT,
    ));
    let mut rec = CheckRecord::new(
        "bounded-annihilator-oracle",
        refs::BOUNDED_PART,
        witness.is_none() && oracle_res <= T,
    )
    .with_residual("max_residual", oracle_res);
    rec = rec.with_witness(witness.unwrap_or_else(|| qualifier(format!("{} sampled subsets", plan.count))));
    out.push(rec);
    Ok(out)
}
