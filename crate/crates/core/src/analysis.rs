//! Diagnostics for the two-dimensional coupled system `x_i x_{2i} x_{3i}`
//! with an additive constraint: which chains `iM_k` sit next to each other
//! on the integer line, and whether the resulting graph is connected.
//!
//! `M_k` is the set of the first `k` `{2,3}`-smooth numbers, so
//! `M_4 = {1, 2, 3, 4}`. The splitting of chains into independent families
//! is not attempted here.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use petgraph::dot::{Config, Dot};
use petgraph::graph::{NodeIndex, UnGraph};

use crate::error::{Error, Result};
use crate::relation::{GammaSet, SmoothSequence};

/// First `k` elements of `{2^a 3^b}` in increasing order.
pub fn smooth_block(k: usize) -> Result<Vec<u64>> {
    let g = GammaSet::new(&[2, 3])?;
    Ok(SmoothSequence::generate(g.prime_base(), k)?.values)
}

/// `i · M_k`.
pub fn chain(i: u64, k: usize) -> Result<Vec<u64>> {
    smooth_block(k)?
        .into_iter()
        .map(|m| m.checked_mul(i).ok_or(Error::Overflow("chain element")))
        .collect()
}

/// `v = 2^a 3^b j` with `gcd(j, 6) = 1`; returns `(2^a 3^b, j)`.
pub fn split_23(v: u64) -> (u64, u64) {
    if v == 0 {
        return (0, 0);
    }
    let (mut s, mut j) = (1, v);
    for p in [2, 3] {
        while j % p == 0 {
            j /= p;
            s *= p;
        }
    }
    (s, j)
}

/// A pair of chain families `(c₁l + o₁)M_{k₁}` and `(c₂l + o₂)M_{k₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Family {
    pub family: u8,
    pub sub: u8,
    pub left: (u64, u64, usize),
    pub right: (u64, u64, usize),
}

const fn fam(family: u8, sub: u8, left: (u64, u64, usize), right: (u64, u64, usize)) -> Family {
    Family {
        family,
        sub,
        left,
        right,
    }
}

pub const FAMILIES: [Family; 10] = [
    fam(1, 1, (6, 1, 2), (12, 1, 1)),
    fam(1, 2, (6, 5, 2), (12, 11, 1)),
    fam(2, 1, (24, 5, 3), (36, 7, 2)),
    fam(2, 2, (24, 11, 3), (36, 17, 2)),
    fam(2, 3, (24, 13, 3), (36, 19, 2)),
    fam(2, 4, (24, 19, 3), (36, 29, 2)),
    fam(3, 1, (18, 1, 4), (72, 5, 1)),
    fam(3, 2, (18, 17, 4), (72, 67, 1)),
    fam(4, 1, (54, 23, 4), (72, 31, 3)),
    fam(4, 2, (54, 31, 4), (72, 41, 3)),
];

pub fn family(family: u8, sub: u8) -> Result<Family> {
    FAMILIES
        .iter()
        .find(|f| f.family == family && f.sub == sub)
        .copied()
        .ok_or(Error::UnknownFamily { family, sub })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCheck {
    pub l: u64,
    pub left_root: u64,
    pub right_root: u64,
    /// `(m, m')` with `m ∈ left chain`, `m' ∈ right chain`, `|m − m'| = 1`.
    pub witness: Option<(u64, u64)>,
}

/// Searches each `l ∈ [0, l_max]` for a pair of integers one apart, one in
/// each chain of the family.
pub fn verify_consecutive_family(
    family_id: u8,
    sub_id: u8,
    l_max: u64,
) -> Result<Vec<FamilyCheck>> {
    let f = family(family_id, sub_id)?;
    let lm = smooth_block(f.left.2)?;
    let rm = smooth_block(f.right.2)?;
    (0..=l_max)
        .map(|l| {
            let a = f.left.0 * l + f.left.1;
            let b = f.right.0 * l + f.right.1;
            let witness = lm.iter().find_map(|&x| {
                let m = a * x;
                rm.iter()
                    .map(|&y| b * y)
                    .find(|&n| m.abs_diff(n) == 1)
                    .map(|n| (m, n))
            });
            Ok(FamilyCheck {
                l,
                left_root: a,
                right_root: b,
                witness,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    /// Lands back on the chain it came from (only `i = 1`).
    Itself,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arm {
    /// Multiplier `c` and sign `s` of the arm value `c·i + s`.
    pub multiplier: u64,
    pub sign: i8,
    pub value: u64,
    /// `(l, j)` with `value = l·j`, `l ∈ {1,2,3,4}`, `gcd(j, 6) = 1`.
    pub landing: Option<(u64, u64)>,
    pub direction: Option<Direction>,
}

/// Column order used throughout: `4i+1, 4i−1, 3i+1, 3i−1, 2i+1, 2i−1, i+1, i−1`.
pub const ARM_ORDER: [(u64, i8); 8] = [
    (4, 1),
    (4, -1),
    (3, 1),
    (3, -1),
    (2, 1),
    (2, -1),
    (1, 1),
    (1, -1),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmReport {
    pub i: u64,
    /// 1 for `i ≡ 1 (mod 6)`, 2 for `i ≡ 5 (mod 6)`.
    pub part: u8,
    /// `⌊i/6⌋ mod 12`.
    pub row: u8,
    pub residue_72: u64,
    pub arms: [Arm; 8],
    pub up: u32,
    pub down: u32,
    pub itself: u32,
}

impl ArmReport {
    /// Landing multipliers in column order, 0 where the arm misses.
    pub fn labels(&self) -> [u8; 8] {
        self.arms.map(|a| a.landing.map_or(0, |(l, _)| l as u8))
    }
}

pub fn classify_arms(i: u64) -> Result<ArmReport> {
    if i == 0 || i.is_multiple_of(2) || i.is_multiple_of(3) {
        return Err(Error::NotCoprimeToSix(i));
    }
    if i > u64::MAX / 8 {
        return Err(Error::Overflow("arm value"));
    }
    let arms = ARM_ORDER.map(|(c, s)| {
        let value = if s > 0 { c * i + 1 } else { c * i - 1 };
        let (l, j) = split_23(value);
        let landing = (value > 0 && l <= 4).then_some((l, j));
        let direction = landing.map(|(_, j)| match j.cmp(&i) {
            std::cmp::Ordering::Greater => Direction::Up,
            std::cmp::Ordering::Less => Direction::Down,
            std::cmp::Ordering::Equal => Direction::Itself,
        });
        Arm {
            multiplier: c,
            sign: s,
            value,
            landing,
            direction,
        }
    });
    let tally = |d| arms.iter().filter(|a| a.direction == Some(d)).count() as u32;
    Ok(ArmReport {
        i,
        part: if i % 6 == 1 { 1 } else { 2 },
        row: ((i / 6) % 12) as u8,
        residue_72: i % 72,
        arms,
        up: tally(Direction::Up),
        down: tally(Direction::Down),
        itself: tally(Direction::Itself),
    })
}

/// Reference arm table: 8 landing multipliers in [`ARM_ORDER`], then the
/// up and down counts. Rows are `⌊i/6⌋ mod 12`.
pub const ARM_TABLE_1: [[u8; 10]; 12] = [
    [1, 3, 4, 2, 3, 1, 2, 0, 4, 3],
    [1, 0, 2, 4, 3, 1, 0, 0, 3, 2],
    [1, 3, 0, 2, 0, 1, 2, 0, 4, 1],
    [1, 3, 2, 0, 3, 1, 4, 0, 4, 2],
    [1, 0, 4, 2, 3, 1, 2, 0, 3, 3],
    [1, 3, 2, 4, 0, 1, 0, 0, 4, 1],
    [1, 3, 0, 2, 3, 1, 2, 0, 4, 2],
    [1, 0, 2, 0, 3, 1, 4, 0, 3, 2],
    [1, 3, 4, 2, 0, 1, 2, 0, 4, 2],
    [1, 3, 2, 4, 3, 1, 0, 0, 4, 2],
    [1, 0, 0, 2, 3, 1, 2, 0, 3, 2],
    [1, 3, 2, 0, 0, 1, 4, 0, 4, 1],
];

/// Same layout as [`ARM_TABLE_1`] for `i ≡ 5 (mod 6)`.
pub const ARM_TABLE_2: [[u8; 10]; 12] = [
    [3, 1, 0, 2, 1, 0, 0, 4, 4, 1],
    [0, 1, 2, 0, 1, 3, 0, 2, 3, 2],
    [3, 1, 4, 2, 1, 3, 0, 0, 4, 2],
    [3, 1, 2, 4, 1, 0, 0, 2, 4, 2],
    [0, 1, 0, 2, 1, 3, 0, 4, 3, 2],
    [3, 1, 2, 0, 1, 3, 0, 2, 4, 2],
    [3, 1, 4, 2, 1, 0, 0, 0, 4, 1],
    [0, 1, 2, 4, 1, 3, 0, 2, 3, 3],
    [3, 1, 0, 2, 1, 3, 0, 4, 4, 2],
    [3, 1, 2, 0, 1, 0, 0, 2, 4, 1],
    [0, 1, 4, 2, 1, 3, 0, 0, 3, 2],
    [3, 1, 2, 4, 1, 3, 0, 2, 4, 3],
];

pub fn reference_row(i: u64) -> Result<[u8; 10]> {
    if i == 0 || i.is_multiple_of(2) || i.is_multiple_of(3) {
        return Err(Error::NotCoprimeToSix(i));
    }
    let row = ((i / 6) % 12) as usize;
    Ok(if i % 6 == 1 {
        ARM_TABLE_1[row]
    } else {
        ARM_TABLE_2[row]
    })
}

/// Arm labels by `i mod 72`, from direct factorisation of one
/// representative per class.
pub fn residue_lookup() -> BTreeMap<u64, [u8; 8]> {
    (73..145u64)
        .filter(|i| i % 2 != 0 && i % 3 != 0)
        .map(|i| (i % 72, classify_arms(i).expect("coprime to 6").labels()))
        .collect()
}

/// Chains `iM_k`, `i ≤ bound`, `gcd(i, 6) = 1`, joined when they hold two
/// integers one apart.
#[derive(Debug, Clone)]
pub struct ObstructionGraph {
    pub degree: usize,
    pub bound: u64,
    pub graph: UnGraph<u64, ()>,
    index: HashMap<u64, NodeIndex>,
}

pub fn build_obstruction_graph(k: usize, bound: u64) -> Result<ObstructionGraph> {
    if k < 1 {
        return Err(Error::OutOfRange {
            what: "k",
            min: 1,
            got: 0,
        });
    }
    let block = smooth_block(k)?;
    let top = *block.last().expect("k >= 1");
    if bound
        .checked_mul(top)
        .and_then(|x| x.checked_add(1))
        .is_none()
    {
        return Err(Error::Overflow("obstruction graph bound"));
    }
    let mut graph = UnGraph::new_undirected();
    let mut index = HashMap::new();
    for i in (1..=bound).filter(|i| i % 2 != 0 && i % 3 != 0) {
        index.insert(i, graph.add_node(i));
    }
    let in_block = |s: u64| block.binary_search(&s).is_ok();
    for i in (1..=bound).filter(|i| i % 2 != 0 && i % 3 != 0) {
        let mut seen = Vec::new();
        for &m in &block {
            for v in [i * m - 1, i * m + 1] {
                let (s, j) = split_23(v);
                if j > i && j <= bound && in_block(s) && !seen.contains(&j) {
                    seen.push(j);
                    graph.add_edge(index[&i], index[&j], ());
                }
            }
        }
    }
    Ok(ObstructionGraph {
        degree: k,
        bound,
        graph,
        index,
    })
}

impl ObstructionGraph {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn roots(&self) -> Vec<u64> {
        self.graph.node_weights().copied().collect()
    }

    /// Pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = self
            .graph
            .edge_indices()
            .map(|e| {
                let (a, b) = self.graph.edge_endpoints(e).unwrap();
                let (a, b) = (self.graph[a], self.graph[b]);
                (a.min(b), a.max(b))
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn neighbours(&self, i: u64) -> Vec<u64> {
        let mut out: Vec<u64> = match self.index.get(&i) {
            Some(&n) => self.graph.neighbors(n).map(|x| self.graph[x]).collect(),
            None => Vec::new(),
        };
        out.sort_unstable();
        out
    }

    pub fn component_count(&self) -> usize {
        petgraph::algo::connected_components(&self.graph)
    }

    pub fn to_dot(&self) -> String {
        let labelled = self
            .graph
            .map(|_, &i| format!("{i}M_{}", self.degree), |_, _| "");
        format!("{}", Dot::with_config(&labelled, &[Config::EdgeNoLabel]))
    }

    /// Breadth-first parents towards node 1.
    fn bfs_from_one(&self) -> HashMap<u64, u64> {
        let mut parent = HashMap::new();
        let Some(&start) = self.index.get(&1) else {
            return parent;
        };
        parent.insert(1, 1);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for x in self.graph.neighbors(n) {
                let w = self.graph[x];
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(w) {
                    e.insert(self.graph[n]);
                    queue.push_back(x);
                }
            }
        }
        parent
    }

    /// For each node, the smallest neighbour from which node 1 is reachable
    /// by strictly decreasing steps.
    fn decreasing_steps(&self) -> HashMap<u64, u64> {
        let mut roots = self.roots();
        roots.sort_unstable();
        let mut step = HashMap::new();
        step.insert(1, 1);
        for &i in roots.iter().skip(1) {
            if let Some(j) = self
                .neighbours(i)
                .into_iter()
                .find(|&j| j < i && step.contains_key(&j))
            {
                step.insert(i, j);
            }
        }
        step
    }
}

pub const SPLITTING_NOTE: &str =
    "diagnostic only: no splitting of chains into independent families is constructed";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathWitness {
    pub root: u64,
    /// From `root` to 1 inclusive.
    pub path: Vec<u64>,
    /// A strictly decreasing path to 1, when one exists in the searched graph.
    pub decreasing: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub degree: usize,
    pub bound: u64,
    /// Largest root admitted as an intermediate node.
    pub search_bound: u64,
    pub nodes: usize,
    pub edges: usize,
    /// Components of the graph on roots `≤ bound`.
    pub components: usize,
    pub paths: Vec<PathWitness>,
    pub unreached: Vec<u64>,
    pub note: &'static str,
}

impl ConnectivityReport {
    pub fn connected(&self) -> bool {
        self.unreached.is_empty()
    }

    pub fn max_path_len(&self) -> usize {
        self.paths
            .iter()
            .map(|p| p.path.len() - 1)
            .max()
            .unwrap_or(0)
    }
}

fn walk(mut i: u64, next: &HashMap<u64, u64>) -> Vec<u64> {
    let mut out = vec![i];
    while i != 1 {
        i = next[&i];
        out.push(i);
    }
    out
}

/// Paths from every root `≤ bound` to root 1. Intermediate roots may exceed
/// `bound`; the search bound doubles until everything is reached or it
/// passes `8 · bound`.
pub fn connectivity_report(k: usize, bound: u64) -> Result<ConnectivityReport> {
    let query = build_obstruction_graph(k, bound)?;
    let targets = query.roots();
    let limit = bound.saturating_mul(8);
    let mut search_bound = bound;
    let mut graph = query.clone();
    loop {
        let parent = graph.bfs_from_one();
        let done = targets.iter().all(|t| parent.contains_key(t));
        if done || search_bound >= limit {
            let steps = graph.decreasing_steps();
            let mut paths = Vec::new();
            let mut unreached = Vec::new();
            for &t in &targets {
                if parent.contains_key(&t) {
                    paths.push(PathWitness {
                        root: t,
                        path: walk(t, &parent),
                        decreasing: steps.contains_key(&t).then(|| walk(t, &steps)),
                    });
                } else {
                    unreached.push(t);
                }
            }
            return Ok(ConnectivityReport {
                degree: k,
                bound,
                search_bound,
                nodes: query.node_count(),
                edges: query.edge_count(),
                components: query.component_count(),
                paths,
                unreached,
                note: SPLITTING_NOTE,
            });
        }
        search_bound = (search_bound.max(1) * 2).min(limit);
        graph = build_obstruction_graph(k, search_bound)?;
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Itself => "self",
        })
    }
}
