//! Spectral families `e_λ(x) = r((λ1 − x)₊)`, their axioms, partitions of the
//! integration interval and their per-coordinate affine rescaling, integral
//! sums, and the reconstruction `x = ∫ λ de_λ` with per-coordinate error
//! bounds.

use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::lawstruct::masa_containing;
use crate::limits::{BoundednessVerdict, Thread, Verdict};
use crate::matstar::{decompose_selfadjoint, hermitian_eigen, range_projection, AlgebraElement, EigenDecomposition};
use crate::projlat::Projection;
use crate::report::CheckRecord;
use crate::tol;

const T: f64 = tol::COHERENCE;

pub mod refs {
    pub const FAMILY: &str = "spectral family: monotone, sup 1, inf 0, left continuous";
    pub const PROJECTION: &str = "e_λ(x) = r((λ1 − x)₊)";
    pub const RECONSTRUCTION: &str = "x = ∫ λ de_λ with ‖π_α(x − σ)‖_α ≤ δ_α";
    pub const RESCALING: &str = "per-coordinate partitions are affine images with constant ratios";
    pub const MASA: &str = "e_λ belongs to a maximal commutative *-subalgebra containing x";
}

/// Choice of the tag point `μ_n ∈ [λ_{n−1}, λ_n]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MuRule {
    #[default]
    Midpoint,
    Left,
    Right,
}

impl MuRule {
    pub fn name(self) -> &'static str {
        match self {
            MuRule::Midpoint => "midpoint",
            MuRule::Left => "left",
            MuRule::Right => "right",
        }
    }

    pub fn tag(self, lo: f64, hi: f64) -> f64 {
        match self {
            MuRule::Midpoint => 0.5 * (lo + hi),
            MuRule::Left => lo,
            MuRule::Right => hi,
        }
    }
}

impl FromStr for MuRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(MuRule::Midpoint),
            "left" => Ok(MuRule::Left),
            "right" => Ok(MuRule::Right),
            other => precondition(format!("unknown μ rule `{other}` (midpoint, left, right)")),
        }
    }
}

/// Global partition `λ₀ < … < λ_m` of `[−N, N + ε]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionSpec {
    nodes: Vec<f64>,
    epsilon: f64,
    mesh_target: f64,
}

impl PartitionSpec {
    /// Uniform partition of `[−norm, norm + ε]` into `2^k` pieces, `k` the
    /// least with gap ≤ `mesh_target`. Powers of two make the partitions for
    /// halved meshes refinements of each other.
    pub fn uniform(norm: f64, epsilon: f64, mesh_target: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return precondition(format!("ε must be positive, got {epsilon}"));
        }
        if !(mesh_target > 0.0) || !mesh_target.is_finite() {
            return precondition(format!("mesh must be positive, got {mesh_target}"));
        }
        if !(norm >= 0.0) || !norm.is_finite() {
            return precondition(format!("norm must be finite and nonnegative, got {norm}"));
        }
        let (lo, hi) = (-norm, norm + epsilon);
        let len = hi - lo;
        let mut m = 1_usize;
        while len / m as f64 > mesh_target {
            m *= 2;
            if m > 1 << 24 {
                return precondition("partition would exceed 2^24 intervals");
            }
        }
        let nodes = (0..=m)
            .map(|i| if i == m { hi } else { lo + len * i as f64 / m as f64 })
            .collect();
        Ok(Self {
            nodes,
            epsilon,
            mesh_target,
        })
    }

    /// Explicit nodes; checked to be strictly increasing with mesh at most
    /// `mesh_target`.
    pub fn from_nodes(nodes: Vec<f64>, epsilon: f64, mesh_target: f64) -> Result<Self> {
        if nodes.len() < 2 {
            return precondition("a partition needs at least two nodes");
        }
        if !(epsilon > 0.0) {
            return precondition(format!("ε must be positive, got {epsilon}"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return precondition("partition nodes must be strictly increasing");
        }
        let spec = Self {
            nodes,
            epsilon,
            mesh_target,
        };
        if spec.mesh() > mesh_target {
            return precondition(format!("mesh {} exceeds target {mesh_target}", spec.mesh()));
        }
        Ok(spec)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mesh_target(&self) -> f64 {
        self.mesh_target
    }

    pub fn lower(&self) -> f64 {
        self.nodes[0]
    }

    pub fn upper(&self) -> f64 {
        *self.nodes.last().expect("nonempty")
    }

    /// Largest gap.
    pub fn mesh(&self) -> f64 {
        mesh(&self.nodes)
    }

    /// Checks that the partition covers `[−norm, norm + ε]` for an element of
    /// the given norm.
    pub fn check_covers(&self, norm: f64) -> Result<()> {
        if self.lower() > -norm + tol::DEFAULT * norm.max(1.0) || self.upper() <= norm {
            return precondition(format!(
                "partition [{}, {}] does not cover [−{norm}, {norm} + ε]",
                self.lower(),
                self.upper()
            ));
        }
        Ok(())
    }
}

pub fn mesh(nodes: &[f64]) -> f64 {
    nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// Affine image of the global nodes onto `[−norm_α, norm_α + ε]`.
pub fn rescale_nodes(spec: &PartitionSpec, norm_alpha: f64) -> Result<Vec<f64>> {
    let (lo, hi) = (-norm_alpha, norm_alpha + spec.epsilon);
    if !(hi > lo) {
        return precondition("degenerate rescaling interval");
    }
    let (g0, g1) = (spec.lower(), spec.upper());
    let scale = (hi - lo) / (g1 - g0);
    let n = spec.nodes.len();
    Ok(spec
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i == 0 {
                lo
            } else if i + 1 == n {
                hi
            } else {
                lo + (t - g0) * scale
            }
        })
        .collect())
}

/// Nodes for coordinate `alpha` of `x`.
pub fn rescale_partition(spec: &PartitionSpec, x: &Thread, alpha: usize) -> Result<Vec<f64>> {
    rescale_nodes(spec, x.seminorm(alpha)?)
}

/// Largest deviation of the gap ratios `(λ'_{i+1} − λ'_i)/(λ_{i+1} − λ_i)` and
/// the tag-point ratios `(λ'_n − μ'_n)/(λ_n − μ_n)` from their first value.
pub fn ratio_residual(global: &[f64], local: &[f64], rule: MuRule) -> f64 {
    let r0 = (local[1] - local[0]) / (global[1] - global[0]);
    let mut worst = 0.0_f64;
    for (g, l) in global.windows(2).zip(local.windows(2)) {
        let r = (l[1] - l[0]) / (g[1] - g[0]);
        worst = worst.max((r - r0).abs());
        let (mg, ml) = (rule.tag(g[0], g[1]), rule.tag(l[0], l[1]));
        if g[1] - mg > 0.0 {
            worst = worst.max(((l[1] - ml) / (g[1] - mg) - r0).abs());
        }
    }
    worst
}

/// Strict cut `t < λ`, with eigenvalues within [`tol::CLUSTER`] of `λ` taken
/// as equal to it.
fn below(t: f64, lambda: f64) -> bool {
    t < lambda - tol::CLUSTER
}

fn indicator(eig: &EigenDecomposition, lambda: f64) -> AlgebraElement {
    eig.apply(|t| if below(t, lambda) { 1.0 } else { 0.0 })
}

/// `e_λ(x)`: the eigenprojection onto eigenvalues `t < λ`.
pub fn spectral_projection(x: &AlgebraElement, lambda: f64) -> Result<Projection> {
    let eig = hermitian_eigen(x)?;
    Ok(Projection::from_element_unchecked(indicator(&eig, lambda)))
}

/// `e_λ` of a thread, computed per coordinate and lifted (coherence checked).
pub fn spectral_projection_thread(x: &Thread, lambda: f64) -> Result<Thread> {
    let coords = x
        .coordinates()
        .iter()
        .map(|c| Ok(spectral_projection(c, lambda)?.into_element()))
        .collect::<Result<Vec<_>>>()?;
    Thread::lift(x.system(), coords)
}

/// Residuals of the four axioms plus the definition oracle.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomCertificate {
    /// `max ‖e_{λ_i} − e_{λ_i} e_{λ_{i+1}}‖`.
    pub monotone: f64,
    /// `‖e_{λ_m} − 1‖`.
    pub sup_is_one: f64,
    /// `‖e_{λ_0}‖`.
    pub inf_is_zero: f64,
    /// `max ‖e_t − e_{t−h}‖` over eigenvalues `t`.
    pub left_continuous: f64,
    /// Worst distance from the independent evaluation of `r((λ1 − x)₊)`, and
    /// from the diagonal indicator when `x` is diagonal.
    pub definition: f64,
    /// `max ‖[e_λ, x]‖`.
    pub commutation: f64,
}

impl AxiomCertificate {
    pub fn passed(&self) -> bool {
        self.axioms_pass() && self.definition <= T && self.commutation <= T
    }

    /// The four axioms only.
    pub fn axioms_pass(&self) -> bool {
        self.monotone <= T && self.sup_is_one <= T && self.inf_is_zero <= T && self.left_continuous <= T
    }

    pub fn merge(&mut self, other: &AxiomCertificate) {
        self.monotone = self.monotone.max(other.monotone);
        self.sup_is_one = self.sup_is_one.max(other.sup_is_one);
        self.inf_is_zero = self.inf_is_zero.max(other.inf_is_zero);
        self.left_continuous = self.left_continuous.max(other.left_continuous);
        self.definition = self.definition.max(other.definition);
        self.commutation = self.commutation.max(other.commutation);
    }

    pub fn records(&self, scope: &str) -> Vec<CheckRecord> {
        let id = |name: &str| {
            if scope.is_empty() {
                name.to_string()
            } else {
                format!("{name}[{scope}]")
            }
        };
        vec![
            CheckRecord::bounded(id("family-monotone"), refs::FAMILY, self.monotone, T),
            CheckRecord::bounded(id("family-sup-one"), refs::FAMILY, self.sup_is_one, T),
            CheckRecord::bounded(id("family-inf-zero"), refs::FAMILY, self.inf_is_zero, T),
            CheckRecord::bounded(id("family-left-continuous"), refs::FAMILY, self.left_continuous, T),
            CheckRecord::bounded(id("family-definition-oracle"), refs::PROJECTION, self.definition, T),
            CheckRecord::bounded(id("family-commutes"), refs::PROJECTION, self.commutation, T),
        ]
    }
}

/// `e_λ` at every partition node, with its certificate.
#[derive(Clone, Debug)]
pub struct SpectralFamily {
    pub nodes: Vec<f64>,
    pub projections: Vec<AlgebraElement>,
    pub certificate: AxiomCertificate,
}

fn diagonal_entries(x: &AlgebraElement) -> Option<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for b in x.blocks() {
        let n = b.nrows();
        for i in 0..n {
            for j in 0..n {
                if i != j && b[(i, j)].norm() > 0.0 {
                    return None;
                }
            }
        }
        out.push((0..n).map(|i| b[(i, i)].re).collect());
    }
    Some(out)
}

fn distinct_eigenvalues(eig: &EigenDecomposition) -> Vec<f64> {
    let mut all: Vec<f64> = eig.clustered_eigenvalues().into_iter().flatten().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() <= tol::CLUSTER);
    all
}

/// Builds the family on `nodes` and certifies it.
pub fn build_family(x: &AlgebraElement, nodes: &[f64]) -> Result<SpectralFamily> {
    if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return precondition("family nodes must be strictly increasing, at least two");
    }
    let eig = hermitian_eigen(x)?;
    let projections: Vec<AlgebraElement> = nodes.iter().map(|&l| indicator(&eig, l)).collect();
    let alg = x.algebra();
    let mut cert = AxiomCertificate {
        sup_is_one: projections
            .last()
            .expect("nonempty")
            .dist(&AlgebraElement::identity(alg)),
        inf_is_zero: projections[0].norm(),
        ..Default::default()
    };
    for w in projections.windows(2) {
        cert.monotone = cert.monotone.max(w[0].dist(&w[0].mul(&w[1])?));
    }
    for p in &projections {
        cert.commutation = cert.commutation.max(p.commutator(x)?.norm());
    }

    let scale = x.norm().max(1.0);
    let h = 1e-7 * scale;
    let distinct = distinct_eigenvalues(&eig);
    for (i, &t) in distinct.iter().enumerate() {
        // stay above the next lower eigenvalue so the probe is a true left limit
        let gap = if i == 0 { f64::INFINITY } else { t - distinct[i - 1] };
        let hh = h.min(gap / 2.0);
        cert.left_continuous = cert
            .left_continuous
            .max(indicator(&eig, t).dist(&indicator(&eig, t - hh)));
    }

    // independent evaluation at probes between and on eigenvalues
    let mut probes = vec![nodes[0], *nodes.last().expect("nonempty")];
    probes.extend(distinct.iter().copied());
    probes.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let one = AlgebraElement::identity(alg);
    for &l in &probes {
        let shifted = one.scale_real(l).sub(x)?;
        let oracle = range_projection(&decompose_selfadjoint(&shifted)?.positive)?;
        cert.definition = cert.definition.max(oracle.dist(&indicator(&eig, l)));
    }
    if let Some(diag) = diagonal_entries(x) {
        for (&l, p) in nodes.iter().zip(&projections) {
            let closed: Vec<f64> = diag
                .iter()
                .flatten()
                .map(|&t| if below(t, l) { 1.0 } else { 0.0 })
                .collect();
            let mut blocks = Vec::new();
            let mut k = 0;
            for d in &diag {
                blocks.push(&closed[k..k + d.len()]);
                k += d.len();
            }
            let mut worst = 0.0_f64;
            for (b, ind) in blocks.iter().enumerate() {
                let m = p.block(b);
                for i in 0..ind.len() {
                    for j in 0..ind.len() {
                        let want = if i == j { ind[i] } else { 0.0 };
                        worst = worst.max((m[(i, j)].re - want).abs() + m[(i, j)].im.abs());
                    }
                }
            }
            cert.definition = cert.definition.max(worst);
        }
    }
    Ok(SpectralFamily {
        nodes: nodes.to_vec(),
        projections,
        certificate: cert,
    })
}

/// `σ = Σ μ_n (e_{λ_n} − e_{λ_{n−1}})`.
pub fn riemann_sum(family: &SpectralFamily, rule: MuRule) -> Result<AlgebraElement> {
    let alg = family.projections[0].algebra();
    let mut sigma = AlgebraElement::zero(alg);
    for (w, e) in family.nodes.windows(2).zip(family.projections.windows(2)) {
        let mu = rule.tag(w[0], w[1]);
        sigma = sigma.add(&e[1].sub(&e[0])?.scale_real(mu))?;
    }
    Ok(sigma)
}

/// Integral sum at one coordinate.
#[derive(Clone, Debug)]
pub struct CoordinateSum {
    pub node: usize,
    pub label: String,
    pub norm: f64,
    pub nodes: Vec<f64>,
    pub sigma: AlgebraElement,
    /// `‖π_α(x) − σ_α‖_α`.
    pub error: f64,
    /// Largest gap of the coordinate's partition.
    pub delta: f64,
    pub family: SpectralFamily,
}

impl CoordinateSum {
    pub fn within_bound(&self) -> bool {
        self.error <= self.delta + T
    }
}

/// Sum for a single element on explicit nodes.
pub fn integral_sum_element(
    x: &AlgebraElement,
    nodes: &[f64],
    rule: MuRule,
) -> Result<(AlgebraElement, f64, SpectralFamily)> {
    let family = build_family(x, nodes)?;
    let sigma = riemann_sum(&family, rule)?;
    let error = x.sub(&sigma)?.norm();
    Ok((sigma, error, family))
}

/// Integral sums over the first `upto` coordinates, each on the affine image
/// of the global partition onto its own interval.
pub fn integral_sum(x: &Thread, spec: &PartitionSpec, rule: MuRule, upto: usize) -> Result<Vec<CoordinateSum>> {
    let sys = x.system();
    let upto = upto.min(sys.len());
    (0..upto)
        .map(|a| {
            let xa = x.project(a)?;
            let norm = xa.norm();
            let nodes = rescale_nodes(spec, norm)?;
            let (sigma, error, family) = integral_sum_element(&xa, &nodes, rule)?;
            Ok(CoordinateSum {
                node: a,
                label: sys.label(a).to_string(),
                norm,
                delta: mesh(&nodes),
                nodes,
                sigma,
                error,
                family,
            })
        })
        .collect()
}

/// Options of [`reconstruct`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructOptions {
    pub mesh: f64,
    pub epsilon: f64,
    pub rule: MuRule,
    pub horizon: usize,
    /// Accept threads without a bounded verdict, reconstructing each
    /// coordinate on its own interval only.
    pub per_coordinate_fallback: bool,
}

impl ReconstructOptions {
    pub fn new(mesh: f64, epsilon: f64) -> Self {
        Self {
            mesh,
            epsilon,
            rule: MuRule::default(),
            horizon: usize::MAX,
            per_coordinate_fallback: false,
        }
    }
}

/// Outcome of [`reconstruct`].
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub boundedness: BoundednessVerdict,
    pub partition: PartitionSpec,
    pub coordinates: Vec<CoordinateSum>,
    /// `σ` on the unrescaled global partition, a coherent thread; absent in
    /// per-coordinate mode.
    pub global_sigma: Option<Thread>,
    pub per_coordinate_only: bool,
    pub records: Vec<CheckRecord>,
}

impl Reconstruction {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn max_error(&self) -> f64 {
        self.coordinates.iter().map(|c| c.error).fold(0.0, f64::max)
    }
}

/// End-to-end reconstruction of a self-adjoint thread.
pub fn reconstruct(x: &Thread, opts: ReconstructOptions) -> Result<Reconstruction> {
    let sys = Arc::clone(x.system());
    let horizon = if sys.is_lazy_chain() {
        opts.horizon.min(sys.len())
    } else {
        sys.len()
    };
    if !x.is_hermitian(tol::DEFAULT) {
        return precondition("reconstruction needs a self-adjoint thread");
    }
    let boundedness = x.sup_norm(horizon.max(1))?;
    let (norm, per_coordinate_only) = match boundedness.verdict {
        Verdict::Bounded { sup } => (sup, false),
        _ if opts.per_coordinate_fallback => (boundedness.sup_over_horizon, true),
        _ => {
            return precondition(format!(
                "thread is not certified bounded ({:?}); request per-coordinate reconstruction",
                boundedness.verdict
            ))
        }
    };
    let partition = PartitionSpec::uniform(norm, opts.epsilon, opts.mesh)?;
    let coordinates = integral_sum(x, &partition, opts.rule, horizon)?;

    let mut records = Vec::new();
    for c in &coordinates {
        let mut r = CheckRecord::new(
            format!("reconstruction[{}]", c.label),
            refs::RECONSTRUCTION,
            c.within_bound(),
        )
        .with_residual("error", c.error)
        .with_residual("delta", c.delta);
        if per_coordinate_only {
            r = r.with_witness("per-coordinate interval only: no certified global bound");
        }
        records.push(r);
    }
    let mut cert = AxiomCertificate::default();
    for c in &coordinates {
        cert.merge(&c.family.certificate);
    }
    records.extend(cert.records(""));

    let mut ratio = 0.0_f64;
    for c in &coordinates {
        ratio = ratio.max(ratio_residual(partition.nodes(), &c.nodes, opts.rule));
    }
    records.push(CheckRecord::bounded("partition-ratios", refs::RESCALING, ratio, T));

    // MASA membership: the MASA is built at the top node and transported down
    let masa = if sys.is_lazy_chain() && horizon < sys.len() {
        None
    } else {
        Some(masa_containing(x)?)
    };
    if let Some(masa) = &masa {
        let mut worst = 0.0_f64;
        for c in &coordinates {
            for p in &c.family.projections {
                worst = worst.max(masa.nodes[c.node].residual(p));
            }
        }
        records.push(CheckRecord::bounded("family-in-masa", refs::MASA, worst, T));
    }

    let mut global_sigma = None;
    if !per_coordinate_only && horizon == sys.len() {
        // coherence of the unrescaled family and of its sum
        let mut coherence = 0.0_f64;
        let mut sigmas = Vec::with_capacity(sys.len());
        let mut families = Vec::with_capacity(sys.len());
        for a in 0..sys.len() {
            let xa = x.project(a)?;
            let (sigma, _, family) = integral_sum_element(&xa, partition.nodes(), opts.rule)?;
            sigmas.push(sigma);
            families.push(family);
        }
        for (&(a, b), m) in sys.maps() {
            for (pa, pb) in families[a].projections.iter().zip(&families[b].projections) {
                coherence = coherence.max(pa.dist(&m.apply(pb, sys.algebra(a))?));
            }
        }
        records.push(CheckRecord::bounded("family-coherence", refs::FAMILY, coherence, T));
        match Thread::lift(&sys, sigmas) {
            Ok(s) => {
                let err = x.sub(&s)?.coordinates().iter().map(|z| z.norm()).fold(0.0, f64::max);
                records.push(
                    CheckRecord::new("global-sum", refs::RECONSTRUCTION, err <= partition.mesh() + T)
                        .with_residual("error", err)
                        .with_residual("mesh", partition.mesh()),
                );
                global_sigma = Some(s);
            }
            Err(e) => records.push(CheckRecord::fail("global-sum", refs::RECONSTRUCTION, e.to_string())),
        }
    }

    Ok(Reconstruction {
        boundedness,
        partition,
        coordinates,
        global_sigma,
        per_coordinate_only,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::{ChainGenerator, ProjectiveSystem};
    use crate::matstar::{real_block, FinStarAlgebra};
    use crate::random;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> AlgebraElement {
        AlgebraElement::diag(v).unwrap()
    }

    fn swap() -> AlgebraElement {
        AlgebraElement::from_block(real_block(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap()
    }

    #[test]
    fn projection_examples() {
        let e = spectral_projection(&d(&[1.0, 2.0]), 1.5).unwrap();
        assert!(e.element().dist(&d(&[1.0, 0.0])) < 1e-12);
        let mut r = random::rng(1);
        let x = random::hermitian(&mut r, &FinStarAlgebra::matrix(4).unwrap());
        let n = x.norm();
        assert!(
            spectral_projection(&x, n + 1e-6)
                .unwrap()
                .element()
                .dist(&AlgebraElement::identity(x.algebra()))
                < 1e-9
        );
        assert!(spectral_projection(&x, -n).unwrap().element().norm() < 1e-9);
        let e = spectral_projection(&swap(), 0.0).unwrap();
        let want = AlgebraElement::from_block(real_block(&[&[0.5, -0.5], &[-0.5, 0.5]])).unwrap();
        assert!(e.element().dist(&want) < 1e-12);
        // the cut is strict
        assert!(spectral_projection(&d(&[1.0, 2.0]), 1.0).unwrap().element().norm() < 1e-12);
        assert!(spectral_projection(
            &AlgebraElement::from_block(real_block(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap(),
            0.0
        )
        .is_err());
    }

    #[test]
    fn family_examples() {
        let zero = d(&[0.0]);
        let p = PartitionSpec::uniform(0.0, 0.1, 0.05).unwrap();
        let f = build_family(&zero, p.nodes()).unwrap();
        for (&l, e) in f.nodes.iter().zip(&f.projections) {
            let want = if l > 0.0 { 1.0 } else { 0.0 };
            assert!((e.block(0)[(0, 0)].re - want).abs() < 1e-12);
        }
        assert!(f.certificate.passed());

        let x = d(&[0.0, 1.0]);
        let p = PartitionSpec::uniform(1.0, 0.1, 0.25).unwrap();
        let f = build_family(&x, p.nodes()).unwrap();
        assert!(f.certificate.passed(), "{:?}", f.certificate);

        let mut r = random::rng(2);
        let x = random::hermitian(&mut r, &FinStarAlgebra::matrix(4).unwrap());
        let p = PartitionSpec::uniform(x.norm(), 0.1, 0.1).unwrap();
        assert!(build_family(&x, p.nodes()).unwrap().certificate.passed());
    }

    #[test]
    fn rescaling_examples() {
        let p = PartitionSpec::from_nodes(vec![-1.0, 0.0, 1.1], 0.1, 1.1).unwrap();
        assert_eq!(rescale_nodes(&p, 1.0).unwrap(), p.nodes());
        let local = rescale_nodes(&p, 0.5).unwrap();
        assert!((local[0] + 0.5).abs() < 1e-15 && (local[2] - 0.6).abs() < 1e-15);
        assert!(ratio_residual(p.nodes(), &local, MuRule::Midpoint) < 1e-12);
        assert!(rescale_nodes(&p, 0.0).is_ok());
        assert!(PartitionSpec::uniform(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn partitions_are_nested() {
        let coarse = PartitionSpec::uniform(1.3, 0.1, 0.5).unwrap();
        let fine = PartitionSpec::uniform(1.3, 0.1, 0.25).unwrap();
        assert_eq!(fine.nodes().len(), 2 * coarse.nodes().len() - 1);
        for (i, &t) in coarse.nodes().iter().enumerate() {
            assert!((fine.nodes()[2 * i] - t).abs() < 1e-12);
        }
    }

    #[test]
    fn sum_examples() {
        let x = d(&[0.0, 1.0]);
        let p = PartitionSpec::uniform(1.0, 0.1, 0.25).unwrap();
        let (_, err, _) = integral_sum_element(&x, p.nodes(), MuRule::Midpoint).unwrap();
        assert!(err <= p.mesh());
        // nodes on the spectrum: the left rule is exact there
        let nodes = vec![0.0, 1.0, 1.1];
        let (sigma, err, _) = integral_sum_element(&x, &nodes, MuRule::Left).unwrap();
        assert!(err < 1e-12 && sigma.dist(&x) < 1e-12);
        let mut prev = f64::INFINITY;
        for mesh in [0.5, 0.25, 0.125] {
            let p = PartitionSpec::uniform(1.0, 0.1, mesh).unwrap();
            let (_, err, _) = integral_sum_element(&d(&[0.3, 0.77]), p.nodes(), MuRule::Left).unwrap();
            assert!(err <= prev + 1e-15);
            prev = err;
        }
        assert!(prev < 0.13);
    }

    #[test]
    fn reconstruct_examples() {
        let sys = Arc::new(ProjectiveSystem::chain(2, 20).unwrap());
        let unit = crate::lawstruct::unit_thread(&sys).unwrap();
        let r = reconstruct(
            &unit,
            ReconstructOptions {
                horizon: 20,
                ..ReconstructOptions::new(0.1, 0.1)
            },
        )
        .unwrap();
        assert!(r.passed(), "{:?}", r.records);

        let h = Thread::generated(&sys, ChainGenerator::DiagHarmonic, None).unwrap();
        let r = reconstruct(
            &h,
            ReconstructOptions {
                horizon: 20,
                ..ReconstructOptions::new(0.05, 0.05)
            },
        )
        .unwrap();
        assert!(r.passed(), "{:?}", r.records);

        let lin = Thread::generated(&sys, ChainGenerator::DiagLinear, None).unwrap();
        assert!(reconstruct(
            &lin,
            ReconstructOptions {
                horizon: 20,
                ..ReconstructOptions::new(0.5, 0.1)
            }
        )
        .is_err());
        let r = reconstruct(
            &lin,
            ReconstructOptions {
                horizon: 20,
                per_coordinate_fallback: true,
                ..ReconstructOptions::new(0.5, 0.1)
            },
        )
        .unwrap();
        assert!(r.per_coordinate_only && r.passed());

        let mut rng = random::rng(8);
        let sys = Arc::new(random::system(&mut rng));
        let x = crate::lawstruct::sample_thread(&mut rng, &sys, random::hermitian).unwrap();
        let r = reconstruct(&x, ReconstructOptions::new(0.1, 0.1)).unwrap();
        assert!(r.passed(), "{:?}", r.records);
        assert!(r.global_sigma.is_some());
    }

    #[test]
    fn thread_projection_is_coherent() {
        let mut rng = random::rng(12);
        for _ in 0..20 {
            let sys = Arc::new(random::system(&mut rng));
            let x = crate::lawstruct::sample_thread(&mut rng, &sys, random::degenerate_hermitian).unwrap();
            for l in [-1.0, 0.0, 0.5, 1.0] {
                spectral_projection_thread(&x, l).unwrap();
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn error_within_mesh(seed in any::<u64>(), mesh in 0.05f64..1.0, rule in 0usize..3) {
            let mut r = random::rng(seed);
            let alg = random::algebra(&mut r, 3, 5);
            let x = random::hermitian(&mut r, &alg);
            let p = PartitionSpec::uniform(x.norm(), 0.1, mesh).unwrap();
            let rule = [MuRule::Midpoint, MuRule::Left, MuRule::Right][rule];
            let (_, err, fam) = integral_sum_element(&x, p.nodes(), rule).unwrap();
            prop_assert!(err <= p.mesh() + 1e-8);
            prop_assert!(fam.certificate.passed());
        }
    }
}
