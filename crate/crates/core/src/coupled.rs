//! One-dimensional coupled shifts: the multiplicative constraint
//! `x_i · x_{Qi} ∈ C` intersected with an additive shift of finite type on
//! consecutive coordinates.
//!
//! The coupled system is cut into disjoint generation graphs `M_{Q;k}(l)`
//! grown from a root block `{l, …, l+Q−2}` by `i ↦ Qi + t, |t| < Q`. Counting
//! admissible labelings of one such graph brackets the entropy between a
//! lower bound (labelled copies, everything else zero) and an upper bound
//! (unused cells free).

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frontier::{Constraint, Model, Rule};
use crate::pattern::{check_enumeration_size, ConstraintSystem, PatternCount, TransitionMatrix};

/// Integer-labelled graph with multiplicative edges `(i, Qi)` and additive
/// edges `(m, m+1)`, both induced by the vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledGraph {
    pub q: u64,
    /// Number of generations; 0 for a graph induced from an arbitrary set.
    pub degree: usize,
    pub root: Option<u64>,
    /// Ascending.
    pub vertices: Vec<u64>,
    /// Generation index (1-based) of each vertex, aligned with `vertices`.
    pub generations: Vec<u32>,
    pub mult_edges: Vec<(u64, u64)>,
    pub add_edges: Vec<(u64, u64)>,
}

impl CoupledGraph {
    /// The graph induced on `vertices`: every `(i, Qi)` and `(m, m+1)` with
    /// both ends present.
    pub fn induced(q: u64, vertices: impl IntoIterator<Item = u64>) -> Self {
        let set: BTreeSet<u64> = vertices.into_iter().collect();
        let vertices: Vec<u64> = set.iter().copied().collect();
        let mult_edges = vertices
            .iter()
            .filter_map(|&i| i.checked_mul(q).filter(|m| set.contains(m)).map(|m| (i, m)))
            .collect();
        let add_edges = vertices
            .windows(2)
            .filter(|w| w[1] == w[0] + 1)
            .map(|w| (w[0], w[1]))
            .collect();
        Self {
            q,
            degree: 0,
            root: None,
            generations: vec![0; vertices.len()],
            vertices,
            mult_edges,
            add_edges,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn index_of(&self, v: u64) -> usize {
        self.vertices
            .binary_search(&v)
            .expect("edge endpoint is a vertex")
    }

    fn generation_of(&self, v: u64) -> u32 {
        self.generations[self.index_of(v)]
    }
}

/// `|L_{Q;k}| = Q(Q^k − 1)/(Q − 1) − k`.
pub fn lattice_size(q: u64, k: u32) -> BigUint {
    let qb = BigUint::from(q);
    qb.clone() * (qb.pow(k) - 1u32) / (q - 1) - k
}

/// Generation graph `M_{Q;k}(l)`.
///
/// Roots must avoid multiples of `Q` and be large enough that successive
/// generations neither overlap nor touch (`l = 1` never qualifies, nor
/// `l = 2` for `Q ≥ 3`); otherwise the graph is not a faithful copy of
/// `L_{Q;k}` and [`Error::RootTooSmall`] is returned.
pub fn build_coupled_graph(q: u64, l: u64, k: usize) -> Result<CoupledGraph> {
    if q < 2 {
        return Err(Error::OutOfRange {
            what: "Q",
            min: 2,
            got: q,
        });
    }
    if k < 1 {
        return Err(Error::OutOfRange {
            what: "k",
            min: 1,
            got: 0,
        });
    }
    if l < 1 {
        return Err(Error::OutOfRange {
            what: "root",
            min: 1,
            got: l,
        });
    }
    if l.is_multiple_of(q) {
        return Err(Error::RootNotInComplement { root: l, q });
    }

    let mut generation: BTreeSet<u64> = (l..=l + q - 2).collect();
    let mut tagged: Vec<(u64, u32)> = Vec::new();
    for gen in 1..=k as u32 {
        tagged.extend(generation.iter().map(|&v| (v, gen)));
        if gen as usize == k {
            break;
        }
        let mut next = BTreeSet::new();
        for &i in &generation {
            let centre = i
                .checked_mul(q)
                .ok_or(Error::Overflow("growing a generation graph"))?;
            next.extend(centre - (q - 1)..=centre + (q - 1));
        }
        generation = next;
    }
    tagged.sort_unstable();
    if tagged.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::RootTooSmall { root: l, q });
    }

    let mut graph = CoupledGraph::induced(q, tagged.iter().map(|&(v, _)| v));
    graph.generations = tagged.iter().map(|&(_, g)| g).collect();
    graph.degree = k;
    graph.root = Some(l);

    let consistent = graph
        .add_edges
        .iter()
        .all(|&(a, b)| graph.generation_of(a) == graph.generation_of(b))
        && graph
            .mult_edges
            .iter()
            .all(|&(a, b)| graph.generation_of(a) + 1 == graph.generation_of(b));
    if !consistent {
        return Err(Error::RootTooSmall { root: l, q });
    }
    Ok(graph)
}

/// Smallest admissible root for `(Q, k)`.
pub fn canonical_root(q: u64, k: usize) -> Result<u64> {
    let mut l = 2;
    loop {
        match build_coupled_graph(q, l, k) {
            Ok(_) => return Ok(l),
            Err(Error::RootNotInComplement { .. }) | Err(Error::RootTooSmall { .. }) => l += 1,
            Err(e) => return Err(e),
        }
    }
}

fn matrix_of(graph_symbols: u32, cs: &ConstraintSystem) -> Result<&TransitionMatrix> {
    let m = cs.sft_matrix.as_ref().ok_or(Error::MissingMatrix)?;
    if m.size() != graph_symbols as usize {
        return Err(Error::MatrixShape {
            expected: graph_symbols,
            got: m.size(),
        });
    }
    Ok(m)
}

/// Exact count of labelings with `A[x_m][x_{m+1}] = 1` on additive edges and
/// `x_i · x_{Qi} ∈ C` on multiplicative edges, by elimination in ascending
/// vertex order.
pub fn count_coupled_patterns(graph: &CoupledGraph, cs: &ConstraintSystem) -> Result<PatternCount> {
    let matrix = matrix_of(cs.num_symbols, cs)?;
    let constraints = graph
        .add_edges
        .iter()
        .map(|&(a, b)| Constraint {
            scope: vec![graph.index_of(a), graph.index_of(b)],
            rule: Rule::Transition(matrix),
        })
        .chain(graph.mult_edges.iter().map(|&(a, b)| Constraint {
            scope: vec![graph.index_of(a), graph.index_of(b)],
            rule: Rule::ProductIn(&cs.allowed_products),
        }))
        .collect();
    let model = Model {
        num_vars: graph.len(),
        num_symbols: cs.num_symbols,
        constraints,
    };
    Ok(model.count()?.into())
}

/// Exhaustive oracle for [`count_coupled_patterns`].
pub fn brute_force_coupled(graph: &CoupledGraph, cs: &ConstraintSystem) -> Result<PatternCount> {
    let matrix = matrix_of(cs.num_symbols, cs)?;
    let v = graph.len();
    check_enumeration_size(cs.num_symbols, v)?;
    let n = cs.num_symbols as u64;
    let pos = |x: u64| graph.vertices.iter().position(|&w| w == x).unwrap();
    let add: Vec<(usize, usize)> = graph
        .add_edges
        .iter()
        .map(|&(a, b)| (pos(a), pos(b)))
        .collect();
    let mult: Vec<(usize, usize)> = graph
        .mult_edges
        .iter()
        .map(|&(a, b)| (pos(a), pos(b)))
        .collect();

    // fix the labels of the last `split` vertices per task
    let split = v.min(6);
    let tasks = n.pow(split as u32);
    let free = v - split;
    let total: u64 = (0..tasks)
        .into_par_iter()
        .map(|mut t| {
            let mut x = vec![0u64; v];
            for slot in x[free..].iter_mut() {
                *slot = t % n;
                t /= n;
            }
            let mut hits = 0u64;
            loop {
                let ok = add
                    .iter()
                    .all(|&(a, b)| matrix.allows(x[a] as usize, x[b] as usize))
                    && mult.iter().all(|&(a, b)| cs.allows_product(x[a] * x[b]));
                hits += ok as u64;
                let mut p = 0;
                loop {
                    if p == free {
                        return hits;
                    }
                    x[p] += 1;
                    if x[p] < n {
                        break;
                    }
                    x[p] = 0;
                    p += 1;
                }
            }
        })
        .sum();
    Ok(PatternCount::new(BigUint::from(total)))
}

/// Entropy sandwich from one generation graph of degree `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledBounds {
    pub q: u64,
    pub k: usize,
    pub root: u64,
    pub vertices: usize,
    pub count: PatternCount,
    pub lower: f64,
    pub upper: f64,
    /// The lower bound pads unused cells with symbol 0, which needs
    /// `0 ∈ C` and `A[0][x] = A[x][0] = 1` for every symbol `x`.
    pub lower_certified: bool,
}

pub fn entropy_bounds(q: u64, cs: &ConstraintSystem, k: usize) -> Result<CoupledBounds> {
    if k < 2 {
        return Err(Error::OutOfRange {
            what: "k",
            min: 2,
            got: k as u64,
        });
    }
    entropy_bounds_at(q, cs, k, canonical_root(q, k)?)
}

/// As [`entropy_bounds`], counting on the graph grown from `root`.
pub fn entropy_bounds_at(
    q: u64,
    cs: &ConstraintSystem,
    k: usize,
    root: u64,
) -> Result<CoupledBounds> {
    if k < 2 {
        return Err(Error::OutOfRange {
            what: "k",
            min: 2,
            got: k as u64,
        });
    }
    let graph = build_coupled_graph(q, root, k)?;
    let count = count_coupled_patterns(&graph, cs)?;
    let density = lower_density(q, k as u32);
    let lower = density * count.log_value;
    let upper = lower + density * k as f64 * (cs.num_symbols as f64).ln();
    let matrix = matrix_of(cs.num_symbols, cs)?;
    Ok(CoupledBounds {
        q,
        k,
        root,
        vertices: graph.len(),
        count,
        lower,
        upper,
        lower_certified: cs.allows_product(0)
            && (0..matrix.size()).all(|x| matrix.allows(0, x) && matrix.allows(x, 0)),
    })
}

/// Disjoint copies of `M_{Q;k}` inside `(1, Q^n)` and their limiting density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledCopies {
    pub alpha: BigUint,
    pub m_star: u64,
    pub density_limit: BigRational,
}

fn check_qkn(q: u64, k: u64, n: u64) -> Result<()> {
    if q < 2 {
        return Err(Error::OutOfRange {
            what: "Q",
            min: 2,
            got: q,
        });
    }
    if k < 1 {
        return Err(Error::OutOfRange {
            what: "k",
            min: 1,
            got: 0,
        });
    }
    if n < k + 1 {
        return Err(Error::OutOfRange {
            what: "n",
            min: k + 1,
            got: n,
        });
    }
    Ok(())
}

/// `α_{Q;k}(n) = (Q−1) Q^{n−k−1} (1 + Q^{−k} + … + Q^{−m*k})`, `m* = ⌊(n−1)/k⌋ − 1`.
pub fn copy_count_coupled(q: u64, k: u64, n: u64) -> Result<CoupledCopies> {
    check_qkn(q, k, n)?;
    let m_star = (n - 1) / k - 1;
    let qb = BigUint::from(q);
    let alpha = (0..=m_star).fold(BigUint::zero(), |acc, j| {
        acc + (q - 1) * qb.pow((n - k * (j + 1) - 1) as u32)
    });
    let density_limit = BigRational::new(
        BigInt::from(q - 1),
        BigInt::from(qb.clone() * (qb.pow(k as u32) - 1u32)),
    );
    Ok(CoupledCopies {
        alpha,
        m_star,
        density_limit,
    })
}

/// Cells of `[1, Q^n]` left outside the copies counted by
/// [`copy_count_coupled`], from the closed form
/// `(Q−1)k/(Q(Q^k−1))·(Q^n − Q^r) + Q^r` with `r = n − k(m*+1)`.
pub fn unused_vertex_count(q: u64, k: u64, n: u64) -> Result<BigUint> {
    check_qkn(q, k, n)?;
    let m_star = (n - 1) / k - 1;
    let qb = BigInt::from(q);
    let rest = qb.pow((n - k * (m_star + 1)) as u32);
    let full = qb.pow(n as u32);
    let frac = BigRational::new(
        BigInt::from((q - 1) * k),
        qb.clone() * (qb.pow(k as u32) - 1),
    );
    let value = frac * BigRational::from_integer(&full - &rest) + BigRational::from_integer(rest);
    if !value.is_integer() {
        return Err(Error::Overflow("evaluating the unused-cell formula"));
    }
    Ok(value.to_integer().to_biguint().expect("non-negative"))
}

/// Disjoint, no consecutive pair, no pair related by a factor `Q`.
pub fn independence_check(a: &BTreeSet<u64>, b: &BTreeSet<u64>, q: u64) -> bool {
    a.is_disjoint(b)
        && a.iter().all(|&m| {
            !(b.contains(&(m + 1))
                || (m > 0 && b.contains(&(m - 1)))
                || m.checked_mul(q).is_some_and(|x| b.contains(&x))
                || (m % q == 0 && b.contains(&(m / q))))
        })
}

/// Exhaustive count of length-`n` strings obeying the SFT on consecutive
/// pairs and `x_k · x_{Qk} ∈ C` whenever `Qk ≤ n`.
pub fn coupled_sequence_naive(q: u64, cs: &ConstraintSystem, n: u64) -> Result<PatternCount> {
    let matrix = matrix_of(cs.num_symbols, cs)?;
    check_enumeration_size(cs.num_symbols, n as usize)?;
    let n = n as usize;
    let sym = cs.num_symbols as u64;
    let q = q as usize;
    let mut x = vec![0u64; n + 1];
    let mut total = 0u64;
    loop {
        let ok = (1..n).all(|m| matrix.allows(x[m] as usize, x[m + 1] as usize))
            && (1..=n / q).all(|k| cs.allows_product(x[k] * x[q * k]));
        total += ok as u64;
        let mut p = 1;
        loop {
            if p > n {
                return Ok(PatternCount::new(BigUint::from(total)));
            }
            x[p] += 1;
            if x[p] < sym {
                break;
            }
            x[p] = 0;
            p += 1;
        }
    }
}

/// `(Q−1)/(Q(Q^k−1))`: limiting density of generation-graph copies.
pub fn lower_density(q: u64, k: u32) -> f64 {
    let qk = BigUint::from(q).pow(k).to_f64().unwrap();
    (q - 1) as f64 / (q as f64 * (qk - 1.0))
}
