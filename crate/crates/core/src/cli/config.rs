//! TOML description of a projective system and its named threads.
//!
//! ```toml
//! seed = 7
//! order = [["a", "b"]]          # a ≤ b
//!
//! [[nodes]]
//! label = "a"
//! blocks = [2]
//!
//! [[nodes]]
//! label = "b"
//! blocks = [2, 3]
//!
//! [[maps]]                       # g_a^b : A_b → A_a
//! source = "b"
//! target = "a"
//! kept_blocks = [0]
//! unitaries = []                 # identity; else one matrix per kept block
//!
//! [elements.x]
//! top = [[[1, 0], [0, 1]], [[1, 0, 0], [0, 2, 0], [0, 0, 3]]]
//! ```
//!
//! Complex entries are `[re, im]` pairs or plain reals; matrices are lists of
//! rows. An element gives exactly one of `coords` (blocks per node label),
//! `top` (blocks at the greatest node) or `generator` (lazy chains only).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{ChainGenerator, ConnectingMap, IndexPoset, ProjectiveSystem, Thread};
use crate::matstar::{AlgebraElement, Block, FinStarAlgebra, C64};

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    pub fn value(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Complex {
    Pair([Number; 2]),
    Real(Number),
}

impl Complex {
    pub fn value(self) -> C64 {
        match self {
            Complex::Pair([re, im]) => C64::new(re.value(), im.value()),
            Complex::Real(re) => C64::new(re.value(), 0.0),
        }
    }

    pub fn canonical(c: C64) -> Self {
        Complex::Pair([Number::Float(c.re), Number::Float(c.im)])
    }
}

pub type Matrix = Vec<Vec<Complex>>;

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub label: String,
    pub blocks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub source: String,
    pub target: String,
    pub kept_blocks: Vec<usize>,
    /// Empty: identity on every kept block. Otherwise one matrix per kept
    /// block, an empty matrix standing for the identity.
    #[serde(default)]
    pub unitaries: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub block_size: usize,
    pub horizon: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ElementConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<BTreeMap<String, Vec<Matrix>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<Vec<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Input validation: unitarity of declared maps, self-adjointness and
    /// idempotence of element arguments.
    pub input: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { input: 1e-8 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub maps: Vec<MapConfig>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub elements: BTreeMap<String, ElementConfig>,
}

fn config_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        location: location.into(),
        message: message.into(),
    }
}

/// A built configuration.
#[derive(Clone, Debug)]
pub struct Model {
    pub system: Arc<ProjectiveSystem>,
    pub elements: BTreeMap<String, Thread>,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
}

impl Model {
    pub fn element(&self, name: &str) -> Result<&Thread> {
        self.elements.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.elements.keys().map(String::as_str).collect();
            config_error(
                format!("elements.{name}"),
                format!("no such element (known: {known:?})"),
            )
        })
    }
}

fn matrix_to_block(m: &Matrix, n: usize, location: &str) -> Result<Block> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        let cols = m.first().map_or(0, Vec::len);
        return Err(config_error(
            location,
            format!("expected a {n}x{n} matrix, found {}x{cols}", m.len()),
        ));
    }
    for (i, row) in m.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let v = c.value();
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(config_error(format!("{location}[{i}][{j}]"), "non-finite entry"));
            }
        }
    }
    Ok(Block::from_fn(n, n, |i, j| m[i][j].value()))
}

/// Rows of `b` as canonical `[re, im]` pairs.
pub fn block_to_matrix(b: &Block) -> Matrix {
    (0..b.nrows())
        .map(|i| (0..b.ncols()).map(|j| Complex::canonical(b[(i, j)])).collect())
        .collect()
}

fn element_from_blocks(alg: &FinStarAlgebra, blocks: &[Matrix], location: &str) -> Result<AlgebraElement> {
    if blocks.len() != alg.num_blocks() {
        return Err(config_error(
            location,
            format!("expected {} blocks, found {}", alg.num_blocks(), blocks.len()),
        ));
    }
    let converted = blocks
        .iter()
        .zip(alg.block_sizes())
        .enumerate()
        .map(|(b, (m, &n))| matrix_to_block(m, n, &format!("{location}[{b}]")))
        .collect::<Result<Vec<_>>>()?;
    AlgebraElement::new(alg, converted).map_err(|e| config_error(location, e.to_string()))
}

impl SystemConfig {
    /// Parses strictly: unknown fields are rejected, and syntax errors carry
    /// line and column.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    let col = span.start - text[..span.start].rfind('\n').map_or(0, |p| p + 1) + 1;
                    format!("line {line}, column {col}")
                }
                None => "document".to_string(),
            };
            config_error(location, e.message().to_string())
        })
    }

    /// Canonical text: every number written as a float, complex entries as
    /// `[re, im]` pairs.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.canonical()).expect("config serializes")
    }

    fn canonical(&self) -> SystemConfig {
        let canon_matrix = |m: &Matrix| -> Matrix {
            m.iter()
                .map(|r| r.iter().map(|c| Complex::canonical(c.value())).collect())
                .collect()
        };
        let mut out = self.clone();
        for m in &mut out.maps {
            m.unitaries = m.unitaries.iter().map(canon_matrix).collect();
        }
        for e in out.elements.values_mut() {
            if let Some(c) = &mut e.coords {
                for blocks in c.values_mut() {
                    *blocks = blocks.iter().map(canon_matrix).collect();
                }
            }
            if let Some(t) = &mut e.top {
                *t = t.iter().map(canon_matrix).collect();
            }
            if let Some(m) = &mut e.matrix {
                *m = canon_matrix(m);
            }
        }
        out
    }

    /// Builds the system and its threads; every failure names the field.
    pub fn build(&self) -> Result<Model> {
        let tolerances = self.tolerances.clone().unwrap_or_default();
        if !(tolerances.input > 0.0) {
            return Err(config_error("tolerances.input", "must be positive"));
        }
        let system = Arc::new(self.build_system(tolerances.input)?);
        let mut elements = BTreeMap::new();
        for (name, e) in &self.elements {
            elements.insert(name.clone(), self.build_element(&system, name, e)?);
        }
        Ok(Model {
            system,
            elements,
            seed: self.seed,
            tolerances,
        })
    }

    fn build_system(&self, tol: f64) -> Result<ProjectiveSystem> {
        if let Some(chain) = &self.chain {
            if !self.nodes.is_empty() || !self.maps.is_empty() || !self.order.is_empty() {
                return Err(config_error("chain", "a chain excludes nodes, order and maps"));
            }
            return ProjectiveSystem::chain(chain.block_size, chain.horizon)
                .map_err(|e| config_error("chain", e.to_string()));
        }
        if self.nodes.is_empty() {
            return Err(config_error("nodes", "at least one node is required"));
        }
        let mut index = BTreeMap::new();
        let mut algebras = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let loc = format!("nodes[{i}]");
            if index.insert(n.label.clone(), i).is_some() {
                return Err(config_error(
                    format!("{loc}.label"),
                    format!("duplicate label `{}`", n.label),
                ));
            }
            let alg = FinStarAlgebra::new(n.blocks.clone())
                .map_err(|e| config_error(format!("{loc}.blocks"), e.to_string()))?;
            algebras.push(alg.with_label(n.label.clone()));
        }
        let lookup = |label: &str, loc: String| {
            index
                .get(label)
                .copied()
                .ok_or_else(|| config_error(loc, format!("unknown node `{label}`")))
        };
        let mut pairs = BTreeSet::new();
        for (i, [a, b]) in self.order.iter().enumerate() {
            pairs.insert((
                lookup(a, format!("order[{i}][0]"))?,
                lookup(b, format!("order[{i}][1]"))?,
            ));
        }
        let mut maps = Vec::with_capacity(self.maps.len());
        for (i, m) in self.maps.iter().enumerate() {
            let loc = format!("maps[{i}]");
            let s = lookup(&m.source, format!("{loc}.source"))?;
            let t = lookup(&m.target, format!("{loc}.target"))?;
            pairs.insert((t, s));
            let target_sizes = algebras[t].block_sizes();
            if m.kept_blocks.len() != target_sizes.len() {
                return Err(config_error(
                    format!("{loc}.kept_blocks"),
                    format!(
                        "target `{}` has {} blocks, {} kept",
                        m.target,
                        target_sizes.len(),
                        m.kept_blocks.len()
                    ),
                ));
            }
            let mut seen = BTreeSet::new();
            for (j, &k) in m.kept_blocks.iter().enumerate() {
                let Some(&n) = algebras[s].block_sizes().get(k) else {
                    return Err(config_error(
                        format!("{loc}.kept_blocks[{j}]"),
                        format!("source `{}` has no block {k}", m.source),
                    ));
                };
                if !seen.insert(k) {
                    return Err(config_error(
                        format!("{loc}.kept_blocks[{j}]"),
                        format!("block {k} kept twice"),
                    ));
                }
                if n != target_sizes[j] {
                    return Err(config_error(
                        format!("{loc}.kept_blocks[{j}]"),
                        format!(
                            "source block {k} has size {n}, target block {j} has size {}",
                            target_sizes[j]
                        ),
                    ));
                }
            }
            let unitaries = if m.unitaries.is_empty() {
                vec![None; m.kept_blocks.len()]
            } else {
                if m.unitaries.len() != m.kept_blocks.len() {
                    return Err(config_error(
                        format!("{loc}.unitaries"),
                        format!("{} matrices for {} kept blocks", m.unitaries.len(), m.kept_blocks.len()),
                    ));
                }
                m.unitaries
                    .iter()
                    .enumerate()
                    .map(|(j, u)| {
                        if u.is_empty() {
                            return Ok(None);
                        }
                        let uloc = format!("{loc}.unitaries[{j}]");
                        let n = target_sizes[j];
                        let b = matrix_to_block(u, n, &uloc)?;
                        let defect = (b.adjoint() * &b - Block::identity(n, n)).norm();
                        if defect > tol {
                            return Err(config_error(uloc, format!("not unitary: ‖U*U − 1‖ = {defect:e}")));
                        }
                        Ok(Some(b))
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            maps.push(ConnectingMap::new(s, t, m.kept_blocks.clone()).with_unitaries(unitaries));
        }
        let labels = self.nodes.iter().map(|n| n.label.clone()).collect();
        let pairs: Vec<_> = pairs.into_iter().collect();
        let poset = IndexPoset::new(labels, &pairs).map_err(|e| config_error("order", e.to_string()))?;
        ProjectiveSystem::new(poset, algebras, maps).map_err(|e| config_error("maps", e.to_string()))
    }

    fn build_element(&self, sys: &Arc<ProjectiveSystem>, name: &str, e: &ElementConfig) -> Result<Thread> {
        let loc = format!("elements.{name}");
        let forms = [e.coords.is_some(), e.top.is_some(), e.generator.is_some()];
        if forms.iter().filter(|&&f| f).count() != 1 {
            return Err(config_error(loc, "give exactly one of `coords`, `top`, `generator`"));
        }
        if e.generator.is_none() && (e.bound.is_some() || e.matrix.is_some()) {
            return Err(config_error(loc, "`bound` and `matrix` belong to generator elements"));
        }
        let wrap = |r: Result<Thread>, at: String| r.map_err(|err| config_error(at, err.to_string()));
        if let Some(coords) = &e.coords {
            for label in coords.keys() {
                if sys.poset().index_of(label).is_err() {
                    return Err(config_error(
                        format!("{loc}.coords.{label}"),
                        format!("unknown node `{label}`"),
                    ));
                }
            }
            let mut elems = Vec::with_capacity(sys.len());
            for a in 0..sys.len() {
                let label = sys.label(a);
                let Some(blocks) = coords.get(label) else {
                    return Err(config_error(format!("{loc}.coords"), format!("missing node `{label}`")));
                };
                elems.push(element_from_blocks(
                    sys.algebra(a),
                    blocks,
                    &format!("{loc}.coords.{label}"),
                )?);
            }
            return wrap(Thread::lift(sys, elems), loc);
        }
        if let Some(top) = &e.top {
            let t = sys
                .top()
                .map_err(|err| config_error(format!("{loc}.top"), err.to_string()))?;
            let x = element_from_blocks(sys.algebra(t), top, &format!("{loc}.top"))?;
            return wrap(Thread::from_top(sys, x), loc);
        }
        let name = e.generator.as_deref().expect("one form present");
        let gloc = format!("{loc}.generator");
        let rule = match name {
            "diag_harmonic" => ChainGenerator::DiagHarmonic,
            "diag_linear" => ChainGenerator::DiagLinear,
            "const_block" => {
                let Some(m) = &e.matrix else {
                    return Err(config_error(format!("{loc}.matrix"), "const_block needs `matrix`"));
                };
                let n = sys.chain_descriptor().map_or(m.len(), |c| c.block_size);
                ChainGenerator::ConstBlock(matrix_to_block(m, n, &format!("{loc}.matrix"))?)
            }
            other => {
                return Err(config_error(
                    gloc,
                    format!("unknown generator `{other}` (diag_harmonic, diag_linear, const_block)"),
                ))
            }
        };
        if !matches!(rule, ChainGenerator::ConstBlock(_)) && e.matrix.is_some() {
            return Err(config_error(format!("{loc}.matrix"), "only const_block takes a matrix"));
        }
        wrap(Thread::generated(sys, rule, e.bound), gloc)
    }
}

/// Configuration describing `sys` with the given named top coordinates.
pub fn describe(
    sys: &ProjectiveSystem,
    elements: &[(&str, &AlgebraElement)],
    seed: Option<u64>,
) -> Result<SystemConfig> {
    let mut cfg = SystemConfig {
        seed,
        ..Default::default()
    };
    if let Some(c) = sys.chain_descriptor() {
        cfg.chain = Some(ChainConfig {
            block_size: c.block_size,
            horizon: c.horizon,
        });
    } else {
        for a in 0..sys.len() {
            cfg.nodes.push(NodeConfig {
                label: sys.label(a).to_string(),
                blocks: sys.algebra(a).block_sizes().to_vec(),
            });
        }
        for m in sys.given_maps() {
            cfg.maps.push(MapConfig {
                source: sys.label(m.source).to_string(),
                target: sys.label(m.target).to_string(),
                kept_blocks: m.kept_blocks.clone(),
                unitaries: if m.unitaries.iter().all(Option::is_none) {
                    Vec::new()
                } else {
                    m.unitaries
                        .iter()
                        .map(|u| u.as_ref().map(block_to_matrix).unwrap_or_default())
                        .collect()
                },
            });
        }
        // order pairs not implied by the maps
        let labels: Vec<String> = (0..sys.len()).map(|a| sys.label(a).to_string()).collect();
        let implied: Vec<(usize, usize)> = sys.given_maps().iter().map(|m| (m.target, m.source)).collect();
        let from_maps = IndexPoset::new(labels, &implied)?;
        for (a, b) in sys.poset().strict_pairs() {
            if !from_maps.leq(a, b) {
                cfg.order.push([sys.label(a).to_string(), sys.label(b).to_string()]);
            }
        }
    }
    for (name, x) in elements {
        cfg.elements.insert(
            (*name).to_string(),
            ElementConfig {
                top: Some(x.blocks().iter().map(block_to_matrix).collect()),
                ..Default::default()
            },
        );
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[[nodes]]\nlabel = \"a\"\nblocks = [2]\n";

    #[test]
    fn minimal_config_parses() {
        let cfg = SystemConfig::parse(MINIMAL).unwrap();
        let m = cfg.build().unwrap();
        assert_eq!(m.system.len(), 1);
    }

    #[test]
    fn dangling_map_reference_is_located() {
        let text = format!("{MINIMAL}\n[[maps]]\nsource = \"b\"\ntarget = \"a\"\nkept_blocks = [0]\n");
        let err = SystemConfig::parse(&text).unwrap().build().unwrap_err();
        match err {
            Error::Config { location, message } => {
                assert_eq!(location, "maps[0].source");
                assert!(message.contains("`b`"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = SystemConfig::parse("[[nodes]]\nlabel = \"a\"\nblocks = [2,\n").unwrap_err();
        assert!(
            matches!(err, Error::Config { ref location, .. } if location.starts_with("line")),
            "{err}"
        );
        let err = SystemConfig::parse("[[nodes]]\nlabel = \"a\"\nblocks = [2]\ncolour = 1\n").unwrap_err();
        assert!(
            matches!(err, Error::Config { ref location, .. } if location.starts_with("line 4")),
            "{err}"
        );
    }

    #[test]
    fn non_unitary_rejected() {
        let text = "[[nodes]]\nlabel = \"a\"\nblocks = [1]\n[[nodes]]\nlabel = \"b\"\nblocks = [1]\n\
                    [[maps]]\nsource = \"b\"\ntarget = \"a\"\nkept_blocks = [0]\nunitaries = [[[[2, 0]]]]\n";
        let err = SystemConfig::parse(text).unwrap().build().unwrap_err();
        assert!(
            matches!(err, Error::Config { ref location, .. } if location == "maps[0].unitaries[0]"),
            "{err}"
        );
    }

    #[test]
    fn round_trip_is_semantic_identity() {
        let text =
            "seed = 3\n[[nodes]]\nlabel = \"a\"\nblocks = [2]\n[elements.x]\ntop = [[[1, [0, 1]], [[0, -1], 2]]]\n";
        let cfg = SystemConfig::parse(text).unwrap();
        let emitted = cfg.to_toml();
        let again = SystemConfig::parse(&emitted).unwrap();
        assert_eq!(again.to_toml(), emitted);
        let (a, b) = (cfg.build().unwrap(), again.build().unwrap());
        assert_eq!(*a.system, *b.system);
        assert_eq!(a.elements["x"], b.elements["x"]);
    }

    #[test]
    fn element_forms() {
        let chain = "[chain]\nblock_size = 1\nhorizon = 4\n[elements.h]\ngenerator = \"diag_harmonic\"\n\
                     [elements.c]\ngenerator = \"const_block\"\nmatrix = [[2]]\n";
        let m = SystemConfig::parse(chain).unwrap().build().unwrap();
        assert_eq!(m.element("c").unwrap().seminorm(3).unwrap(), 2.0);
        let bad = "[chain]\nblock_size = 1\nhorizon = 4\n[elements.h]\ngenerator = \"diag_cubic\"\n";
        assert!(SystemConfig::parse(bad).unwrap().build().is_err());
        assert!(m.element("nope").is_err());
    }
}
