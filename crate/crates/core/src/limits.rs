//! Projective systems of finite-dimensional C*-algebras and their threads.
//!
//! A system is a directed poset of nodes, an algebra per node, and a surjective
//! *-homomorphism `g_α^β : A_β → A_α` for every comparable pair `α ⪯ β`.
//! Connecting maps are block deletions followed by per-block unitary
//! conjugation. Lazy chains model `ℕ` truncated at a horizon; their threads may
//! be given by a built-in generator instead of explicit coordinates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::matstar::{AlgebraElement, ArithOp, Block, FinStarAlgebra, C64};
use crate::report::CheckRecord;
use crate::tol;

/// Finite directed index set with a partial order.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexPoset {
    labels: Vec<String>,
    /// `leq[a][b]` iff `a ⪯ b`; reflexive-transitive closure of the given pairs.
    leq: Vec<Vec<bool>>,
}

impl IndexPoset {
    /// Builds the reflexive-transitive closure of `pairs` (`(a, b)` means `a ⪯ b`).
    pub fn new(labels: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return precondition("a poset needs at least one node");
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::Structure(format!("duplicate node label `{l}`")));
            }
        }
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::Structure(format!("order pair ({a}, {b}) out of range")));
            }
            leq[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    let row = leq[k].clone();
                    for (j, &kj) in row.iter().enumerate() {
                        leq[i][j] |= kj;
                    }
                }
            }
        }
        Ok(Self { labels, leq })
    }

    /// `1 ⪯ 2 ⪯ … ⪯ n`.
    pub fn chain(n: usize) -> Result<Self> {
        let labels = (1..=n).map(|k| k.to_string()).collect();
        let pairs: Vec<_> = (1..n).map(|k| (k - 1, k)).collect();
        Self::new(labels, &pairs)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    /// First pair `a ≠ b` with `a ⪯ b ⪯ a`.
    pub fn antisymmetry_witness(&self) -> Option<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .find(|&(a, b)| self.leq[a][b] && self.leq[b][a])
    }

    /// First pair without a common upper bound.
    pub fn directedness_witness(&self) -> Option<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .find(|&(a, b)| !(0..n).any(|c| self.leq[a][c] && self.leq[b][c]))
    }

    /// The greatest node; exists for every finite directed poset.
    pub fn top(&self) -> Option<usize> {
        (0..self.len()).find(|&t| (0..self.len()).all(|a| self.leq[a][t]))
    }

    /// All `(α, β)` with `α ⪯ β`, `α ≠ β`, in lexicographic order.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b && self.leq[a][b])
            .collect()
    }
}

/// `g_α^β : A_β → A_α`: keeps source block `kept_blocks[j]` as target block
/// `j`, conjugated by `unitaries[j]` when present.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectingMap {
    pub source: usize,
    pub target: usize,
    pub kept_blocks: Vec<usize>,
    pub unitaries: Vec<Option<Block>>,
}

impl ConnectingMap {
    pub fn new(source: usize, target: usize, kept_blocks: Vec<usize>) -> Self {
        let unitaries = vec![None; kept_blocks.len()];
        Self {
            source,
            target,
            kept_blocks,
            unitaries,
        }
    }

    pub fn with_unitaries(mut self, unitaries: Vec<Option<Block>>) -> Self {
        self.unitaries = unitaries;
        self
    }

    pub fn identity(node: usize, alg: &FinStarAlgebra) -> Self {
        Self::new(node, node, (0..alg.num_blocks()).collect())
    }

    /// Image of `x ∈ A_source` in an algebra of `target`'s shape.
    pub fn apply(&self, x: &AlgebraElement, target: &FinStarAlgebra) -> Result<AlgebraElement> {
        let blocks = self
            .kept_blocks
            .iter()
            .zip(&self.unitaries)
            .map(|(&k, u)| {
                let b = x
                    .blocks()
                    .get(k)
                    .ok_or_else(|| Error::Structure(format!("map keeps missing source block {k}")))?;
                Ok(match u {
                    Some(u) => u * b * u.adjoint(),
                    None => b.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        AlgebraElement::new(target, blocks)
    }

    /// `self ∘ inner`, where `inner : A_γ → A_β` and `self : A_β → A_α`.
    pub fn compose(&self, inner: &ConnectingMap) -> Result<ConnectingMap> {
        if inner.target != self.source {
            return Err(Error::Structure(format!(
                "cannot compose maps {}→{} and {}→{}",
                inner.source, inner.target, self.source, self.target
            )));
        }
        let mut kept = Vec::with_capacity(self.kept_blocks.len());
        let mut unitaries = Vec::with_capacity(self.kept_blocks.len());
        for (&k, u) in self.kept_blocks.iter().zip(&self.unitaries) {
            let k2 = *inner
                .kept_blocks
                .get(k)
                .ok_or_else(|| Error::Structure(format!("map keeps missing block {k}")))?;
            kept.push(k2);
            unitaries.push(match (u, &inner.unitaries[k]) {
                (None, None) => None,
                (Some(u), None) => Some(u.clone()),
                (None, Some(v)) => Some(v.clone()),
                (Some(u), Some(v)) => Some(u * v),
            });
        }
        Ok(ConnectingMap {
            source: inner.source,
            target: self.target,
            kept_blocks: kept,
            unitaries,
        })
    }

    /// Compares the induced maps: equal kept blocks and unitaries equal up to
    /// a phase. Returns a description of the first difference.
    pub fn difference(&self, other: &ConnectingMap, tol: f64) -> Option<String> {
        if self.kept_blocks != other.kept_blocks {
            return Some(format!("kept blocks {:?} vs {:?}", self.kept_blocks, other.kept_blocks));
        }
        for (j, (u, v)) in self.unitaries.iter().zip(&other.unitaries).enumerate() {
            let w = match (u, v) {
                (None, None) => continue,
                (Some(u), None) => u.clone(),
                (None, Some(v)) => v.adjoint(),
                (Some(u), Some(v)) => v.adjoint() * u,
            };
            // conjugation by w is the identity iff w is a scalar of modulus one
            let n = w.nrows();
            let c = w[(0, 0)];
            let dev = (&w - Block::identity(n, n) * c).norm() + (c.norm() - 1.0).abs();
            if dev > tol {
                return Some(format!("block {j}: unitaries differ by more than a phase ({dev:e})"));
            }
        }
        None
    }
}

/// Descriptor of a lazy chain: node `k` carries `M_n^{⊕k}` and the maps drop
/// trailing blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainDescriptor {
    pub block_size: usize,
    pub horizon: usize,
}

/// Arens–Michael presentation of a locally C*-algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveSystem {
    poset: IndexPoset,
    algebras: Vec<FinStarAlgebra>,
    /// Keyed by `(α, β)` with `α ⪯ β`; self-maps only when given explicitly.
    maps: BTreeMap<(usize, usize), ConnectingMap>,
    given: BTreeSet<(usize, usize)>,
    chain: Option<ChainDescriptor>,
}

impl ProjectiveSystem {
    /// Builds a system from the maps of (at least) the generating pairs; maps of
    /// the remaining comparable pairs are derived by composition.
    pub fn new(poset: IndexPoset, algebras: Vec<FinStarAlgebra>, maps: Vec<ConnectingMap>) -> Result<Self> {
        if algebras.len() != poset.len() {
            return Err(Error::Structure(format!(
                "{} algebras for {} nodes",
                algebras.len(),
                poset.len()
            )));
        }
        let mut table = BTreeMap::new();
        let mut given = BTreeSet::new();
        for m in maps {
            let (a, b) = (m.target, m.source);
            if a >= poset.len() || b >= poset.len() {
                return Err(Error::Structure(format!("map {b}→{a} references a missing node")));
            }
            if !poset.leq(a, b) {
                return Err(Error::Structure(format!(
                    "map from `{}` to `{}` but `{}` ⪯ `{}` does not hold",
                    poset.label(b),
                    poset.label(a),
                    poset.label(a),
                    poset.label(b)
                )));
            }
            if m.unitaries.len() != m.kept_blocks.len() {
                return Err(Error::Structure(format!(
                    "map {}→{}: {} unitaries for {} kept blocks",
                    poset.label(b),
                    poset.label(a),
                    m.unitaries.len(),
                    m.kept_blocks.len()
                )));
            }
            if !given.insert((a, b)) {
                return Err(Error::Structure(format!(
                    "duplicate map {}→{}",
                    poset.label(b),
                    poset.label(a)
                )));
            }
            table.insert((a, b), m);
        }
        let pairs = poset.strict_pairs();
        loop {
            let mut progress = false;
            let mut missing = false;
            for &(a, b) in &pairs {
                if table.contains_key(&(a, b)) {
                    continue;
                }
                let via = (0..poset.len())
                    .find(|&c| c != a && c != b && table.contains_key(&(a, c)) && table.contains_key(&(c, b)));
                match via {
                    Some(c) => {
                        let composed = table[&(a, c)].compose(&table[&(c, b)])?;
                        table.insert((a, b), composed);
                        progress = true;
                    }
                    None => missing = true,
                }
            }
            if !missing {
                break;
            }
            if !progress {
                let (a, b) = pairs
                    .iter()
                    .copied()
                    .find(|p| !table.contains_key(p))
                    .expect("a missing pair");
                return Err(Error::Structure(format!(
                    "no connecting map from `{}` to `{}`",
                    poset.label(b),
                    poset.label(a)
                )));
            }
        }
        let algebras = algebras
            .into_iter()
            .zip(poset.labels())
            .map(|(alg, l)| {
                if alg.label().is_empty() {
                    alg.with_label(l.clone())
                } else {
                    alg
                }
            })
            .collect();
        Ok(Self {
            poset,
            algebras,
            maps: table,
            given,
            chain: None,
        })
    }

    /// One node carrying `alg`.
    pub fn single(alg: FinStarAlgebra) -> Result<Self> {
        Self::new(IndexPoset::new(vec!["0".into()], &[])?, vec![alg], Vec::new())
    }

    /// Lazy chain truncated at `horizon`: node `k` is `M_n^{⊕k}`.
    pub fn chain(block_size: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 || block_size == 0 {
            return precondition("chain needs a positive horizon and block size");
        }
        let poset = IndexPoset::chain(horizon)?;
        let algebras = (1..=horizon)
            .map(|k| FinStarAlgebra::new(vec![block_size; k]).map(|a| a.with_label(k.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut maps = BTreeMap::new();
        for b in 0..horizon {
            for a in 0..b {
                maps.insert((a, b), ConnectingMap::new(b, a, (0..=a).collect()));
            }
        }
        let given = (1..horizon).map(|b| (b - 1, b)).collect();
        Ok(Self {
            poset,
            algebras,
            maps,
            given,
            chain: Some(ChainDescriptor { block_size, horizon }),
        })
    }

    pub fn poset(&self) -> &IndexPoset {
        &self.poset
    }

    pub fn len(&self) -> usize {
        self.poset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poset.is_empty()
    }

    pub fn label(&self, node: usize) -> &str {
        self.poset.label(node)
    }

    pub fn algebras(&self) -> &[FinStarAlgebra] {
        &self.algebras
    }

    pub fn algebra(&self, node: usize) -> &FinStarAlgebra {
        &self.algebras[node]
    }

    pub fn chain_descriptor(&self) -> Option<&ChainDescriptor> {
        self.chain.as_ref()
    }

    pub fn is_lazy_chain(&self) -> bool {
        self.chain.is_some()
    }

    /// Node index, with a horizon error for chain nodes past the truncation.
    pub fn check_node(&self, node: usize) -> Result<usize> {
        if node < self.len() {
            return Ok(node);
        }
        match &self.chain {
            Some(c) => Err(Error::Horizon {
                node: node + 1,
                horizon: c.horizon,
            }),
            None => Err(Error::UnknownNode(node.to_string())),
        }
    }

    /// Resolves a label; for chains, labels past the horizon are horizon errors.
    pub fn node(&self, label: &str) -> Result<usize> {
        match self.poset.index_of(label) {
            Ok(i) => Ok(i),
            Err(e) => match (&self.chain, label.parse::<usize>()) {
                (Some(c), Ok(k)) if k > c.horizon => Err(Error::Horizon {
                    node: k,
                    horizon: c.horizon,
                }),
                _ => Err(e),
            },
        }
    }

    pub fn top(&self) -> Result<usize> {
        self.poset
            .top()
            .ok_or_else(|| Error::Structure("index set has no greatest node (not directed)".into()))
    }

    /// `g_α^β`; `None` unless `α ⪯ β`. The identity for `α = β` unless given.
    pub fn map(&self, alpha: usize, beta: usize) -> Option<ConnectingMap> {
        if alpha == beta {
            return Some(
                self.maps
                    .get(&(alpha, alpha))
                    .cloned()
                    .unwrap_or_else(|| ConnectingMap::identity(alpha, &self.algebras[alpha])),
            );
        }
        self.maps.get(&(alpha, beta)).cloned()
    }

    pub fn maps(&self) -> impl Iterator<Item = (&(usize, usize), &ConnectingMap)> {
        self.maps.iter()
    }

    pub fn is_given(&self, alpha: usize, beta: usize) -> bool {
        self.given.contains(&(alpha, beta))
    }

    /// Maps of generating pairs, as supplied at construction.
    pub fn given_maps(&self) -> Vec<&ConnectingMap> {
        self.given.iter().filter_map(|k| self.maps.get(k)).collect()
    }

    /// `g_α^β(x)` for `x ∈ A_β`.
    pub fn apply(&self, alpha: usize, beta: usize, x: &AlgebraElement) -> Result<AlgebraElement> {
        let m = self.map(alpha, beta).ok_or_else(|| {
            Error::Structure(format!(
                "`{}` ⪯ `{}` does not hold",
                self.label(alpha),
                self.label(beta)
            ))
        })?;
        m.apply(x, &self.algebras[alpha])
    }

    /// The same limit presented through per-node unitaries `W_α` (one unitary
    /// block per algebra block): `A'_α = W_α A_α W_α*`, maps transported.
    pub fn represented(&self, unitaries: &[AlgebraElement]) -> Result<Self> {
        if unitaries.len() != self.len() {
            return precondition("one unitary per node is required");
        }
        let mut out = self.clone();
        for ((a, b), m) in out.maps.iter_mut() {
            let wa = &unitaries[*a];
            let wb = &unitaries[*b];
            for (j, u) in m.unitaries.iter_mut().enumerate() {
                let k = m.kept_blocks[j];
                let inner = match u.as_ref() {
                    Some(u) => wa.block(j) * u * wb.block(k).adjoint(),
                    None => wa.block(j) * wb.block(k).adjoint(),
                };
                *u = Some(inner);
            }
        }
        Ok(out)
    }

    /// `W x W*` coordinatewise for the presentation built by [`represented`](Self::represented).
    pub fn transport(unitaries: &[AlgebraElement], coords: &[AlgebraElement]) -> Result<Vec<AlgebraElement>> {
        coords
            .iter()
            .zip(unitaries)
            .map(|(x, w)| w.mul(x)?.mul(&w.adjoint()))
            .collect()
    }
}

impl fmt::Display for ProjectiveSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.len())
            .map(|i| format!("{}:{}", self.label(i), self.algebras[i]))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

const REF_SYSTEM: &str = "projective system with surjective connecting *-homomorphisms";
const REF_COMPOSITION: &str = "composition law g_a^b ∘ g_b^c = g_a^c";

fn unitary_defect(u: &Block) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - Block::identity(n, n)).norm()
}

/// Certifies poset axioms, directedness, identities, the composition law, and
/// that each map is a surjective *-homomorphism.
pub fn validate_system(sys: &ProjectiveSystem) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let p = &sys.poset;

    out.push(match p.antisymmetry_witness() {
        None => CheckRecord::pass("poset-order", "index set is a partial order"),
        Some((a, b)) => CheckRecord::fail(
            "poset-order",
            "index set is a partial order",
            format!("`{}` ⪯ `{}` ⪯ `{}`", p.label(a), p.label(b), p.label(a)),
        ),
    });
    out.push(match p.directedness_witness() {
        None => CheckRecord::pass("poset-directed", "index set is directed"),
        Some((a, b)) => CheckRecord::fail(
            "poset-directed",
            "index set is directed",
            format!("`{}` and `{}` have no upper bound", p.label(a), p.label(b)),
        ),
    });

    // identities
    let mut worst = 0.0_f64;
    let mut witness = None;
    for a in 0..sys.len() {
        if let Some(m) = sys.maps.get(&(a, a)) {
            if let Some(d) = m.difference(&ConnectingMap::identity(a, &sys.algebras[a]), tol::COHERENCE) {
                witness.get_or_insert(format!("`{}`: {d}", p.label(a)));
                worst = f64::INFINITY;
            }
        }
    }
    out.push(
        CheckRecord::new("identity-maps", "g_a^a is the identity", witness.is_none())
            .with_residual("max_residual", worst),
    );

    // each given map is a surjective *-homomorphism
    let mut map_witness = None;
    let mut map_residual = 0.0_f64;
    for (&(a, b), m) in &sys.maps {
        if !sys.given.contains(&(a, b)) && a != b {
            continue;
        }
        let src = &sys.algebras[b];
        let dst = &sys.algebras[a];
        let name = format!("{}→{}", p.label(b), p.label(a));
        if m.kept_blocks.len() != dst.num_blocks() {
            map_witness.get_or_insert(format!(
                "{name}: keeps {} blocks, target has {}",
                m.kept_blocks.len(),
                dst.num_blocks()
            ));
            continue;
        }
        let distinct: BTreeSet<_> = m.kept_blocks.iter().collect();
        if distinct.len() != m.kept_blocks.len() {
            map_witness.get_or_insert(format!("{name}: kept blocks repeat"));
            continue;
        }
        let mut ok = true;
        for (j, &k) in m.kept_blocks.iter().enumerate() {
            if k >= src.num_blocks() || src.block_sizes()[k] != dst.block_sizes()[j] {
                map_witness.get_or_insert(format!("{name}: block {j} does not match source block {k}"));
                ok = false;
                break;
            }
            if let Some(u) = &m.unitaries[j] {
                let d = unitary_defect(u);
                map_residual = map_residual.max(d);
                if d > tol::COHERENCE {
                    map_witness.get_or_insert(format!("{name}: block {j} unitary defect {d:e}"));
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        // homomorphism on matrix-unit generators, per source block
        let unit_img = m.apply(&AlgebraElement::identity(src), dst);
        match unit_img {
            Ok(img) => {
                let d = img.dist(&AlgebraElement::identity(dst));
                map_residual = map_residual.max(d);
                if d > tol::COHERENCE {
                    map_witness.get_or_insert(format!("{name}: unit not preserved ({d:e})"));
                }
            }
            Err(e) => {
                map_witness.get_or_insert(format!("{name}: {e}"));
                continue;
            }
        }
        // products E_ij E_jl within each block; products of other matrix units
        // vanish on both sides because kept blocks are distinct
        let basis = src.basis();
        let images: Vec<AlgebraElement> = basis.iter().map(|e| m.apply(e, dst).expect("checked")).collect();
        let mut offset = 0;
        for &n in src.block_sizes() {
            let idx = |i: usize, j: usize| offset + i * n + j;
            for i in 0..n {
                for j in 0..n {
                    let x = idx(i, j);
                    let d = images[idx(j, i)].dist(&images[x].adjoint());
                    map_residual = map_residual.max(d);
                    if d > tol::COHERENCE {
                        map_witness.get_or_insert(format!("{name}: involution not preserved ({d:e})"));
                    }
                    for l in 0..n {
                        let y = idx(j, l);
                        let prod = images[x].mul(&images[y]).expect("same algebra");
                        let d = images[idx(i, l)].dist(&prod);
                        map_residual = map_residual.max(d);
                        if d > tol::COHERENCE {
                            map_witness.get_or_insert(format!("{name}: product not preserved ({d:e})"));
                        }
                    }
                }
            }
            offset += n * n;
        }
    }
    let mut rec = CheckRecord::new("maps-surjective-star-homomorphisms", REF_SYSTEM, map_witness.is_none())
        .with_residual("max_residual", map_residual);
    if let Some(w) = map_witness {
        rec = rec.with_witness(w);
    }
    out.push(rec);

    // composition law on every chain α ≺ β ≺ γ
    let mut comp_witness = None;
    let mut triples = 0usize;
    'outer: for (&(a, b), inner_outer) in &sys.maps {
        if a == b {
            continue;
        }
        for c in 0..sys.len() {
            if c == b || c == a || !p.leq(b, c) {
                continue;
            }
            let Some(inner) = sys.maps.get(&(b, c)) else { continue };
            let Some(direct) = sys.maps.get(&(a, c)) else {
                comp_witness = Some(format!("({}, {}, {}): missing map", p.label(a), p.label(b), p.label(c)));
                break 'outer;
            };
            triples += 1;
            match inner_outer.compose(inner) {
                Ok(composed) => {
                    if let Some(d) = composed.difference(direct, tol::COHERENCE) {
                        comp_witness = Some(format!("({}, {}, {}): {d}", p.label(a), p.label(b), p.label(c)));
                        break 'outer;
                    }
                }
                Err(e) => {
                    comp_witness = Some(format!("({}, {}, {}): {e}", p.label(a), p.label(b), p.label(c)));
                    break 'outer;
                }
            }
        }
    }
    let mut rec = CheckRecord::new("composition-law", REF_COMPOSITION, comp_witness.is_none())
        .with_residual("triples", triples as f64);
    if let Some(w) = comp_witness {
        rec = rec.with_witness(w);
    }
    out.push(rec);
    out
}

/// Convenience: `Ok(())` when every validation record passes.
pub fn ensure_valid(sys: &ProjectiveSystem) -> Result<()> {
    match validate_system(sys).into_iter().find(|r| !r.passed) {
        None => Ok(()),
        Some(r) => Err(Error::Structure(format!("{}: {}", r.id, r.witness.unwrap_or_default()))),
    }
}

/// Built-in generator rules for lazy-chain threads. Block `i` (1-based) of the
/// coordinate at node `k` is produced for `i = 1..=k`.
#[derive(Clone, Debug, PartialEq)]
pub enum ChainGenerator {
    /// `diag(1, 1/2, …, 1/k)`.
    DiagHarmonic,
    /// `diag(1, 2, …, k)`.
    DiagLinear,
    /// The same matrix in every block.
    ConstBlock(Block),
}

impl ChainGenerator {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DiagHarmonic => "diag_harmonic",
            Self::DiagLinear => "diag_linear",
            Self::ConstBlock(_) => "const_block",
        }
    }

    fn block(&self, i: usize, n: usize) -> Block {
        match self {
            Self::DiagHarmonic => Block::identity(n, n) * C64::new(1.0 / i as f64, 0.0),
            Self::DiagLinear => Block::identity(n, n) * C64::new(i as f64, 0.0),
            Self::ConstBlock(b) => b.clone(),
        }
    }

    /// Whether seminorms never grow past the probed prefix.
    pub fn is_monotone(&self) -> bool {
        !matches!(self, Self::DiagLinear)
    }

    /// The bound the rule guarantees by construction, if any.
    pub fn intrinsic_bound(&self) -> Option<f64> {
        match self {
            Self::DiagHarmonic => Some(1.0),
            Self::DiagLinear => None,
            Self::ConstBlock(b) => Some(AlgebraElement::from_block(b.clone()).map_or(0.0, |e| e.norm())),
        }
    }
}

/// Declared bound on `sup_α ‖x‖_α`, with the author's monotonicity flag.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundDeclaration {
    pub bound: f64,
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq)]
enum Coords {
    Explicit(Vec<AlgebraElement>),
    Generator(ChainGenerator),
}

/// A coherent family `{x_α}`: an element of the projective limit.
#[derive(Clone, Debug)]
pub struct Thread {
    system: Arc<ProjectiveSystem>,
    coords: Coords,
    declaration: Option<BoundDeclaration>,
}

impl PartialEq for Thread {
    fn eq(&self, other: &Self) -> bool {
        same_system(&self.system, &other.system) && self.coordinates() == other.coordinates()
    }
}

fn same_system(a: &Arc<ProjectiveSystem>, b: &Arc<ProjectiveSystem>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Largest coherence residual `‖x_α − g_α^β(x_β)‖` over comparable pairs, with
/// the worst pair.
pub fn coherence_residual(sys: &ProjectiveSystem, coords: &[AlgebraElement]) -> Result<(f64, Option<(usize, usize)>)> {
    let mut worst = (0.0, None);
    for (&(a, b), m) in sys.maps.iter() {
        let image = m.apply(&coords[b], &sys.algebras[a])?;
        let r = coords[a].dist(&image) / coords[a].norm().max(1.0);
        if r > worst.0 || worst.1.is_none() {
            worst = (r, Some((a, b)));
        }
    }
    Ok(worst)
}

/// How `sup_α ‖x‖_α` was settled.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Verdict {
    Bounded { sup: f64 },
    ExceedsBound { node: String, value: f64 },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundednessVerdict {
    pub sup_over_horizon: f64,
    pub horizon: usize,
    pub verdict: Verdict,
}

impl BoundednessVerdict {
    pub fn is_bounded(&self) -> bool {
        matches!(self.verdict, Verdict::Bounded { .. })
    }
}

impl Thread {
    /// Builds the thread with the given coordinates after checking coherence on
    /// every comparable pair.
    pub fn lift(system: &Arc<ProjectiveSystem>, coords: Vec<AlgebraElement>) -> Result<Self> {
        if coords.len() != system.len() {
            return Err(Error::Structure(format!(
                "{} coordinates for {} nodes",
                coords.len(),
                system.len()
            )));
        }
        for (i, (x, alg)) in coords.iter().zip(&system.algebras).enumerate() {
            if !x.algebra().same_shape(alg) {
                return Err(Error::Structure(format!(
                    "coordinate at `{}` lives in {}, expected {}",
                    system.label(i),
                    x.algebra(),
                    alg
                )));
            }
        }
        for (&(a, b), m) in system.maps.iter() {
            let image = m.apply(&coords[b], &system.algebras[a])?;
            let residual = coords[a].dist(&image);
            if !tol::within(residual, coords[a].norm(), tol::COHERENCE) {
                return Err(Error::Coherence {
                    lower: system.label(a).to_string(),
                    upper: system.label(b).to_string(),
                    residual,
                });
            }
        }
        Ok(Self {
            system: Arc::clone(system),
            coords: Coords::Explicit(coords),
            declaration: None,
        })
    }

    /// The thread determined by its coordinate at the greatest node.
    pub fn from_top(system: &Arc<ProjectiveSystem>, top_coordinate: AlgebraElement) -> Result<Self> {
        let top = system.top()?;
        if !top_coordinate.algebra().same_shape(system.algebra(top)) {
            return precondition("top coordinate does not live in the top algebra");
        }
        let coords = (0..system.len())
            .map(|a| system.apply(a, top, &top_coordinate))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            system: Arc::clone(system),
            coords: Coords::Explicit(coords),
            declaration: None,
        })
    }

    /// Thread of a lazy chain given by a generator rule. `bound` overrides the
    /// rule's intrinsic bound.
    pub fn generated(system: &Arc<ProjectiveSystem>, rule: ChainGenerator, bound: Option<f64>) -> Result<Self> {
        let Some(chain) = system.chain_descriptor() else {
            return precondition("generator threads need a lazy chain system");
        };
        if let ChainGenerator::ConstBlock(b) = &rule {
            if b.nrows() != chain.block_size || b.ncols() != chain.block_size {
                return precondition(format!("const_block matrix must be {0}x{0}", chain.block_size));
            }
        }
        let declaration = bound.or_else(|| rule.intrinsic_bound()).map(|bound| BoundDeclaration {
            bound,
            monotone: rule.is_monotone(),
        });
        Ok(Self {
            system: Arc::clone(system),
            coords: Coords::Generator(rule),
            declaration,
        })
    }

    pub fn zero(system: &Arc<ProjectiveSystem>) -> Self {
        Self {
            system: Arc::clone(system),
            coords: Coords::Explicit(system.algebras.iter().map(AlgebraElement::zero).collect()),
            declaration: None,
        }
    }

    /// The unit `{1_α}`.
    pub fn unit(system: &Arc<ProjectiveSystem>) -> Self {
        Self {
            system: Arc::clone(system),
            coords: Coords::Explicit(system.algebras.iter().map(AlgebraElement::identity).collect()),
            declaration: None,
        }
    }

    pub fn with_declaration(mut self, declaration: Option<BoundDeclaration>) -> Self {
        self.declaration = declaration;
        self
    }

    pub fn declaration(&self) -> Option<&BoundDeclaration> {
        self.declaration.as_ref()
    }

    pub fn generator(&self) -> Option<&ChainGenerator> {
        match &self.coords {
            Coords::Generator(g) => Some(g),
            Coords::Explicit(_) => None,
        }
    }

    pub fn system(&self) -> &Arc<ProjectiveSystem> {
        &self.system
    }

    /// `π_α(x)`.
    pub fn project(&self, node: usize) -> Result<AlgebraElement> {
        let node = self.system.check_node(node)?;
        match &self.coords {
            Coords::Explicit(c) => Ok(c[node].clone()),
            Coords::Generator(g) => {
                let alg = &self.system.algebras[node];
                let n = self.system.chain.as_ref().map_or(1, |c| c.block_size);
                let blocks = (1..=alg.num_blocks()).map(|i| g.block(i, n)).collect();
                AlgebraElement::new(alg, blocks)
            }
        }
    }

    pub fn project_label(&self, label: &str) -> Result<AlgebraElement> {
        self.project(self.system.node(label)?)
    }

    /// All coordinates in node order.
    pub fn coordinates(&self) -> Vec<AlgebraElement> {
        (0..self.system.len())
            .map(|a| self.project(a).expect("node in range"))
            .collect()
    }

    /// `‖x‖_α = ‖π_α(x)‖`.
    pub fn seminorm(&self, node: usize) -> Result<f64> {
        Ok(self.project(node)?.norm())
    }

    /// Supremum of the seminorms over the first `horizon` nodes (all nodes for
    /// finite systems), with a boundedness verdict.
    pub fn sup_norm(&self, horizon: usize) -> Result<BoundednessVerdict> {
        if horizon == 0 {
            return precondition("horizon must be at least 1");
        }
        let Some(chain) = self.system.chain_descriptor() else {
            let mut sup = 0.0_f64;
            for a in 0..self.system.len() {
                sup = sup.max(self.seminorm(a)?);
            }
            return Ok(BoundednessVerdict {
                sup_over_horizon: sup,
                horizon: self.system.len(),
                verdict: Verdict::Bounded { sup },
            });
        };
        if horizon > chain.horizon {
            return Err(Error::Horizon {
                node: horizon,
                horizon: chain.horizon,
            });
        }
        let mut sup = 0.0_f64;
        let mut exceeded = None;
        for k in 0..horizon {
            let v = self.seminorm(k)?;
            sup = sup.max(v);
            if let Some(d) = &self.declaration {
                if exceeded.is_none() && !tol::within(v - d.bound, d.bound, tol::DEFAULT) {
                    exceeded = Some((self.system.label(k).to_string(), v));
                }
            }
        }
        let verdict = match (&self.declaration, exceeded) {
            (Some(_), Some((node, value))) => Verdict::ExceedsBound { node, value },
            (Some(d), None) if d.monotone => Verdict::Bounded { sup },
            _ => Verdict::Inconclusive,
        };
        Ok(BoundednessVerdict {
            sup_over_horizon: sup,
            horizon,
            verdict,
        })
    }

    fn check_same_system(&self, other: &Thread) -> Result<()> {
        if same_system(&self.system, &other.system) {
            Ok(())
        } else {
            Err(Error::Structure("threads belong to different systems".into()))
        }
    }

    /// Coordinatewise arithmetic. Connecting maps are *-homomorphisms, so the
    /// result is coherent; debug builds re-verify it.
    pub fn arith(&self, other: &Thread, op: ArithOp) -> Result<Thread> {
        self.check_same_system(other)?;
        let xs = self.coordinates();
        let ys = other.coordinates();
        let coords = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| crate::matstar::arith(x, y, op))
            .collect::<Result<Vec<_>>>()?;
        if cfg!(debug_assertions) {
            let (r, _) = coherence_residual(&self.system, &coords)?;
            debug_assert!(r <= tol::COHERENCE, "thread arithmetic broke coherence: {r:e}");
        }
        Ok(Thread {
            system: Arc::clone(&self.system),
            coords: Coords::Explicit(coords),
            declaration: None,
        })
    }

    pub fn add(&self, other: &Thread) -> Result<Thread> {
        self.arith(other, ArithOp::Add)
    }

    pub fn sub(&self, other: &Thread) -> Result<Thread> {
        self.arith(other, ArithOp::Sub)
    }

    pub fn mul(&self, other: &Thread) -> Result<Thread> {
        self.arith(other, ArithOp::Mul)
    }

    pub fn adjoint(&self) -> Thread {
        self.arith(self, ArithOp::Involution).expect("same system")
    }

    pub fn scale(&self, c: C64) -> Thread {
        self.arith(self, ArithOp::Scale(c)).expect("same system")
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.coordinates().iter().all(|x| x.is_hermitian(tol))
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.coordinates().iter().all(|x| x.is_projection(tol))
    }

    /// `max_α ‖x_α − y_α‖`.
    pub fn dist(&self, other: &Thread) -> f64 {
        self.coordinates()
            .iter()
            .zip(other.coordinates())
            .map(|(x, y)| x.dist(&y))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matstar::real_block;

    fn m2_m3_chain() -> Arc<ProjectiveSystem> {
        // A_2 = M2 ⊕ M3 → A_1 = M2 by dropping block 1
        let poset = IndexPoset::new(vec!["1".into(), "2".into()], &[(0, 1)]).unwrap();
        let algs = vec![
            FinStarAlgebra::new(vec![2]).unwrap(),
            FinStarAlgebra::new(vec![2, 3]).unwrap(),
        ];
        Arc::new(ProjectiveSystem::new(poset, algs, vec![ConnectingMap::new(1, 0, vec![0])]).unwrap())
    }

    fn all_pass(recs: &[CheckRecord]) -> bool {
        recs.iter().all(|r| r.passed)
    }

    #[test]
    fn single_node_is_valid() {
        let sys = ProjectiveSystem::single(FinStarAlgebra::matrix(2).unwrap()).unwrap();
        assert!(all_pass(&validate_system(&sys)));
    }

    #[test]
    fn deletion_chain_is_valid() {
        assert!(all_pass(&validate_system(&m2_m3_chain())));
    }

    #[test]
    fn unitary_mismatch_is_reported_with_triple() {
        let poset = IndexPoset::new(vec!["a".into(), "b".into(), "c".into()], &[(0, 1), (1, 2)]).unwrap();
        let algs = vec![FinStarAlgebra::matrix(2).unwrap(); 3];
        let swap = real_block(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let maps = vec![
            ConnectingMap::new(1, 0, vec![0]).with_unitaries(vec![Some(swap)]),
            ConnectingMap::new(2, 1, vec![0]),
            // direct map ignores the swap: composition law fails
            ConnectingMap::new(2, 0, vec![0]),
        ];
        let sys = ProjectiveSystem::new(poset, algs, maps).unwrap();
        let recs = validate_system(&sys);
        let comp = recs.iter().find(|r| r.id == "composition-law").unwrap();
        assert!(!comp.passed);
        assert!(comp.witness.as_ref().unwrap().contains("(a, b, c)"));
    }

    #[test]
    fn phase_difference_is_not_a_difference() {
        let i = C64::new(0.0, 1.0);
        let m1 = ConnectingMap::new(1, 0, vec![0]).with_unitaries(vec![Some(Block::identity(2, 2) * i)]);
        let m2 = ConnectingMap::new(1, 0, vec![0]);
        assert!(m1.difference(&m2, 1e-12).is_none());
    }

    #[test]
    fn derived_maps_compose() {
        let sys = ProjectiveSystem::chain(2, 4).unwrap();
        let m = sys.map(0, 3).unwrap();
        assert_eq!(m.kept_blocks, vec![0]);
        assert!(all_pass(&validate_system(&sys)));
    }

    #[test]
    fn missing_map_is_an_error() {
        let poset = IndexPoset::new(vec!["a".into(), "b".into()], &[(0, 1)]).unwrap();
        let algs = vec![FinStarAlgebra::matrix(1).unwrap(); 2];
        assert!(ProjectiveSystem::new(poset, algs, vec![]).is_err());
    }

    #[test]
    fn lift_and_project() {
        let sys = m2_m3_chain();
        let zero = Thread::lift(&sys, sys.algebras().iter().map(AlgebraElement::zero).collect()).unwrap();
        assert_eq!(zero.seminorm(1).unwrap(), 0.0);
        let unit = Thread::lift(&sys, sys.algebras().iter().map(AlgebraElement::identity).collect()).unwrap();
        assert_eq!(unit.project(0).unwrap(), AlgebraElement::identity(sys.algebra(0)));
        for a in 0..2 {
            assert!((unit.seminorm(a).unwrap() - 1.0).abs() < 1e-14);
        }

        let x2 = AlgebraElement::new(
            sys.algebra(1),
            vec![real_block(&[&[1.0, 2.0], &[3.0, 4.0]]), Block::identity(3, 3)],
        )
        .unwrap();
        let x = Thread::from_top(&sys, x2.clone()).unwrap();
        let again = Thread::lift(&sys, x.coordinates()).unwrap();
        assert_eq!(again.project(1).unwrap(), x2);
    }

    #[test]
    fn incoherent_lift_reports_residual() {
        let sys = m2_m3_chain();
        let x1 = AlgebraElement::diag(&[1.0, 0.0]).unwrap();
        let x2 = AlgebraElement::zero(sys.algebra(1));
        match Thread::lift(&sys, vec![x1, x2]) {
            Err(Error::Coherence { lower, upper, residual }) => {
                assert_eq!((lower.as_str(), upper.as_str()), ("1", "2"));
                assert!((residual - 1.0).abs() < 1e-12);
            }
            other => panic!("expected coherence error, got {other:?}"),
        }
    }

    #[test]
    fn chain_generators() {
        let sys = Arc::new(ProjectiveSystem::chain(1, 50).unwrap());
        let h = Thread::generated(&sys, ChainGenerator::DiagHarmonic, None).unwrap();
        let x3 = h.project(2).unwrap();
        assert!(
            x3.dist(
                &AlgebraElement::new(
                    sys.algebra(2),
                    vec![
                        real_block(&[&[1.0]]),
                        real_block(&[&[0.5]]),
                        real_block(&[&[1.0 / 3.0]]),
                    ]
                )
                .unwrap()
            ) < 1e-15
        );
        assert!(matches!(h.project(50), Err(Error::Horizon { node: 51, horizon: 50 })));
        let v = h.sup_norm(50).unwrap();
        assert_eq!(v.verdict, Verdict::Bounded { sup: 1.0 });

        let l = Thread::generated(&sys, ChainGenerator::DiagLinear, Some(10.0)).unwrap();
        assert_eq!(l.seminorm(3).unwrap(), 4.0);
        match l.sup_norm(50).unwrap().verdict {
            Verdict::ExceedsBound { node, value } => {
                assert_eq!(node, "11");
                assert_eq!(value, 11.0);
            }
            v => panic!("unexpected {v:?}"),
        }
        let undeclared = Thread::generated(&sys, ChainGenerator::DiagLinear, None).unwrap();
        assert_eq!(undeclared.sup_norm(50).unwrap().verdict, Verdict::Inconclusive);
        assert!(matches!(h.sup_norm(51), Err(Error::Horizon { .. })));
    }

    #[test]
    fn finite_sup_is_exact_max() {
        let poset = IndexPoset::new(vec!["a".into(), "b".into(), "c".into()], &[(0, 2), (1, 2)]).unwrap();
        let algs = vec![
            FinStarAlgebra::matrix(1).unwrap(),
            FinStarAlgebra::matrix(1).unwrap(),
            FinStarAlgebra::new(vec![1, 1]).unwrap(),
        ];
        let maps = vec![ConnectingMap::new(2, 0, vec![0]), ConnectingMap::new(2, 1, vec![1])];
        let sys = Arc::new(ProjectiveSystem::new(poset, algs, maps).unwrap());
        let top = AlgebraElement::new(sys.algebra(2), vec![real_block(&[&[2.0]]), real_block(&[&[-5.0]])]).unwrap();
        let x = Thread::from_top(&sys, top).unwrap();
        let v = x.sup_norm(1).unwrap();
        assert_eq!(v.verdict, Verdict::Bounded { sup: 5.0 });
        assert_eq!(v.horizon, 3);
    }

    #[test]
    fn arithmetic_is_coordinatewise() {
        let sys = m2_m3_chain();
        let a = AlgebraElement::new(
            sys.algebra(1),
            vec![
                real_block(&[&[1.0, 2.0], &[0.0, 1.0]]),
                real_block(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[1.0, 0.0, 3.0]]),
            ],
        )
        .unwrap();
        let x = Thread::from_top(&sys, a.clone()).unwrap();
        let z = Thread::zero(&sys);
        assert_eq!(x.add(&z).unwrap(), x);
        assert_eq!(x.adjoint().adjoint(), x);
        let xy = x.mul(&x.adjoint()).unwrap();
        for n in 0..2 {
            let expect = x.project(n).unwrap().mul(&x.project(n).unwrap().adjoint()).unwrap();
            assert!(xy.project(n).unwrap().dist(&expect) < 1e-12);
        }
        let other = Arc::new(ProjectiveSystem::single(FinStarAlgebra::matrix(2).unwrap()).unwrap());
        assert!(x.add(&Thread::zero(&other)).is_err());
    }
}
