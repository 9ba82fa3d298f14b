//! Seeded random instances for the property suites and `gen-random`.
//!
//! Everything draws from a caller-supplied [`ChaCha8Rng`], so a seed fixes the
//! whole instance.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::limits::{ConnectingMap, IndexPoset, ProjectiveSystem};
use crate::matstar::{AlgebraElement, Block, FinStarAlgebra, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut SeededRng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn block(rng: &mut SeededRng, rows: usize, cols: usize) -> Block {
    DMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

/// Random algebra with `1..=max_blocks` blocks of size `1..=max_size`.
pub fn algebra(rng: &mut SeededRng, max_blocks: usize, max_size: usize) -> FinStarAlgebra {
    let k = rng.gen_range(1..=max_blocks);
    let sizes = (0..k).map(|_| rng.gen_range(1..=max_size)).collect();
    FinStarAlgebra::new(sizes).expect("positive sizes")
}

pub fn element(rng: &mut SeededRng, alg: &FinStarAlgebra) -> AlgebraElement {
    let blocks = alg.block_sizes().iter().map(|&n| block(rng, n, n)).collect();
    AlgebraElement::new(alg, blocks).expect("conforming blocks")
}

pub fn hermitian(rng: &mut SeededRng, alg: &FinStarAlgebra) -> AlgebraElement {
    let x = element(rng, alg);
    x.add(&x.adjoint()).expect("same algebra").scale_real(0.5)
}

/// Haar-ish unitary: Gram-Schmidt on the columns of a random complex matrix.
pub fn unitary(rng: &mut SeededRng, n: usize) -> Block {
    loop {
        let mut m = block(rng, n, n);
        let mut ok = true;
        for j in 0..n {
            for k in 0..j {
                let qk = m.column(k).clone_owned();
                let c = qk.dotc(&m.column(j));
                let mut cj = m.column_mut(j);
                cj -= qk * c;
            }
            let nrm = m.column(j).norm();
            if nrm < 1e-6 {
                ok = false;
                break;
            }
            let mut cj = m.column_mut(j);
            cj /= C64::new(nrm, 0.0);
        }
        if ok {
            return m;
        }
    }
}

/// Element whose block `b` has rank drawn uniformly from `0..=n_b`.
pub fn low_rank(rng: &mut SeededRng, alg: &FinStarAlgebra) -> AlgebraElement {
    let blocks = alg
        .block_sizes()
        .iter()
        .map(|&n| {
            let r = rng.gen_range(0..=n);
            block(rng, n, r) * block(rng, n, r).adjoint()
        })
        .collect();
    AlgebraElement::new(alg, blocks).expect("conforming blocks")
}

/// Projection whose block `b` has rank drawn uniformly from `0..=n_b`.
pub fn projection(rng: &mut SeededRng, alg: &FinStarAlgebra) -> AlgebraElement {
    let blocks = alg
        .block_sizes()
        .iter()
        .map(|&n| {
            let r = rng.gen_range(0..=n);
            projection_block(rng, n, r)
        })
        .collect();
    AlgebraElement::new(alg, blocks).expect("conforming blocks")
}

pub fn projection_block(rng: &mut SeededRng, n: usize, rank: usize) -> Block {
    let u = unitary(rng, n);
    let cols = u.columns(0, rank);
    &cols * cols.adjoint()
}

/// Self-adjoint element with eigenvalues drawn from a small integer set, so
/// that repeated eigenvalues are common.
pub fn degenerate_hermitian(rng: &mut SeededRng, alg: &FinStarAlgebra) -> AlgebraElement {
    let blocks = alg
        .block_sizes()
        .iter()
        .map(|&n| {
            let u = unitary(rng, n);
            let d = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(rng.gen_range(-2..=2) as f64, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            &u * d * u.adjoint()
        })
        .collect();
    AlgebraElement::new(alg, blocks).expect("conforming blocks")
}

/// Labels `0..n` with `parts` groups, each group nonempty.
pub fn grouping(rng: &mut SeededRng, n: usize, parts: usize) -> Vec<usize> {
    let parts = parts.clamp(1, n.max(1));
    let mut labels: Vec<usize> = (0..n)
        .map(|i| if i < parts { i } else { rng.gen_range(0..parts) })
        .collect();
    // Fisher-Yates so the forced labels are not always first
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

fn nonempty_subset(rng: &mut SeededRng, of: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = of.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    if out.is_empty() {
        out.push(of[rng.gen_range(0..of.len())]);
    }
    out
}

/// Size limits of a random system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub max_nodes: usize,
    pub max_blocks: usize,
    pub max_size: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            max_nodes: 4,
            max_blocks: 3,
            max_size: 4,
        }
    }
}

/// Random valid projective system of the default shape: at most 4 nodes, at
/// most 3 blocks of size 1..=4.
pub fn system(rng: &mut SeededRng) -> ProjectiveSystem {
    system_with(rng, Shape::default())
}

/// Random valid projective system (single node, chain, fork or diamond) with
/// random unitaries on every map.
///
/// Each node keeps a subset of the top node's blocks, nested along the order,
/// and carries a unitary per kept block relative to the top.
pub fn system_with(rng: &mut SeededRng, shape: Shape) -> ProjectiveSystem {
    let top_alg = algebra(rng, shape.max_blocks.max(1), shape.max_size.max(1));
    let all: Vec<usize> = (0..top_alg.num_blocks()).collect();
    let max_nodes = shape.max_nodes.max(1);
    let kinds = if max_nodes >= 4 { 4 } else { max_nodes.min(3) };
    let (kept, pairs): (Vec<Vec<usize>>, Vec<(usize, usize)>) = match rng.gen_range(0..kinds) {
        0 => (vec![all.clone()], vec![]),
        1 => {
            let len = rng.gen_range(2..=max_nodes);
            let mut sets = vec![all.clone()];
            for _ in 1..len {
                let next = nonempty_subset(rng, sets.last().expect("nonempty"));
                sets.push(next);
            }
            sets.reverse();
            let pairs = (1..len).map(|i| (i - 1, i)).collect();
            (sets, pairs)
        }
        2 => {
            let children = rng.gen_range(2..=(max_nodes - 1).clamp(2, 3));
            let mut sets: Vec<Vec<usize>> = (0..children).map(|_| nonempty_subset(rng, &all)).collect();
            sets.push(all.clone());
            let pairs = (0..children).map(|c| (c, children)).collect();
            (sets, pairs)
        }
        _ => {
            let bottom = nonempty_subset(rng, &all);
            let widen = |rng: &mut SeededRng| {
                let mut s = bottom.clone();
                for &b in &all {
                    if !s.contains(&b) && rng.gen_bool(0.5) {
                        s.push(b);
                    }
                }
                s.sort_unstable();
                s
            };
            let left = widen(rng);
            let right = widen(rng);
            (
                vec![bottom.clone(), left, right, all.clone()],
                vec![(0, 1), (0, 2), (1, 3), (2, 3)],
            )
        }
    };
    let top = kept.len() - 1;
    let sizes = top_alg.block_sizes();
    let unitaries: Vec<Vec<Block>> = kept
        .iter()
        .enumerate()
        .map(|(node, set)| {
            set.iter()
                .map(|&b| {
                    if node == top {
                        Block::identity(sizes[b], sizes[b])
                    } else {
                        unitary(rng, sizes[b])
                    }
                })
                .collect()
        })
        .collect();
    let algebras = kept
        .iter()
        .map(|set| FinStarAlgebra::new(set.iter().map(|&b| sizes[b]).collect()).expect("nonempty"))
        .collect();
    let maps = pairs
        .iter()
        .map(|&(a, b)| {
            let mut kept_blocks = Vec::new();
            let mut us = Vec::new();
            for (j, t) in kept[a].iter().enumerate() {
                let pos = kept[b].iter().position(|x| x == t).expect("nested block sets");
                kept_blocks.push(pos);
                us.push(Some(&unitaries[a][j] * unitaries[b][pos].adjoint()));
            }
            ConnectingMap::new(b, a, kept_blocks).with_unitaries(us)
        })
        .collect();
    let labels = (0..kept.len()).map(|i| format!("n{i}")).collect();
    let poset = IndexPoset::new(labels, &pairs).expect("valid order");
    ProjectiveSystem::new(poset, algebras, maps).expect("consistent maps")
}

/// Per-node unitaries for re-presenting a system.
pub fn presentation(rng: &mut SeededRng, sys: &ProjectiveSystem) -> Vec<AlgebraElement> {
    sys.algebras()
        .iter()
        .map(|alg| {
            let blocks = alg.block_sizes().iter().map(|&n| unitary(rng, n)).collect();
            AlgebraElement::new(alg, blocks).expect("conforming blocks")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

    #[test]
    fn unitaries_are_unitary() {
        let mut r = rng(3);
        for n in 1..6 {
            let u = unitary(&mut r, n);
            let d = (u.adjoint() * &u - Block::identity(n, n)).norm();
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn projections_are_projections() {
        let mut r = rng(4);
        let alg = FinStarAlgebra::new(vec![1, 3, 4]).unwrap();
        for _ in 0..20 {
            assert!(projection(&mut r, &alg).is_projection(tol::DEFAULT));
        }
    }

    #[test]
    fn random_systems_validate() {
        let mut r = rng(21);
        for _ in 0..200 {
            let sys = system(&mut r);
            assert!(sys.len() <= 4);
            let recs = crate::limits::validate_system(&sys);
            assert!(recs.iter().all(|c| c.passed), "{sys}: {recs:?}");
        }
        let shape = Shape {
            max_nodes: 5,
            max_blocks: 3,
            max_size: 6,
        };
        for _ in 0..50 {
            let sys = system_with(&mut r, shape);
            assert!(sys.len() <= 5);
            assert!(crate::limits::validate_system(&sys).iter().all(|c| c.passed));
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let a = element(&mut rng(9), &FinStarAlgebra::new(vec![3]).unwrap());
        let b = element(&mut rng(9), &FinStarAlgebra::new(vec![3]).unwrap());
        assert_eq!(a, b);
    }
}
