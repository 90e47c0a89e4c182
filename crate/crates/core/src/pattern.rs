//! L-shaped smooth lattices, basic shapes, and exact admissible-pattern
//! counts on them.
//!
//! A lattice cell is an exponent vector over the prime base; its value is
//! the corresponding smooth number. A constraint instance is a translate
//! `m·({1} ∪ Γ)` lying entirely inside the lattice, and a labeling is
//! admissible when the product of labels over every instance lies in the
//! allowed set `C`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::frontier::{Constraint, Model, Rule};
use crate::relation::{GammaSet, SmoothSequence};

/// Which cells of `L_k` are kept: values `≤ q_k` or `< q_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Convention {
    #[default]
    Inclusive,
    Strict,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Inclusive => "inclusive",
            Convention::Strict => "strict",
        })
    }
}

impl FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inclusive" => Ok(Convention::Inclusive),
            "strict" => Ok(Convention::Strict),
            other => Err(format!(
                "unknown convention `{other}` (expected inclusive or strict)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub exponents: Vec<u32>,
    pub value: u64,
}

/// Exponents of `value` over `base`; `None` if `value` is not base-smooth.
pub fn exponents_over(mut value: u64, base: &[u64]) -> Option<Vec<u32>> {
    let mut out = vec![0u32; base.len()];
    for (e, &p) in out.iter_mut().zip(base) {
        while value.is_multiple_of(p) {
            value /= p;
            *e += 1;
        }
    }
    (value == 1).then_some(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmoothLattice {
    pub base: Vec<u64>,
    /// Multipliers whose basic shape constrains this lattice.
    pub gammas: Vec<u64>,
    /// Cells in ascending value order.
    pub cells: Vec<Cell>,
    pub bound: u64,
    pub k: usize,
    pub convention: Convention,
}

impl SmoothLattice {
    pub fn values(&self) -> Vec<u64> {
        self.cells.iter().map(|c| c.value).collect()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// `L_k` over the prime base of `g`: `k` cells (inclusive) or `k − 1` (strict).
pub fn build_lattice(g: &GammaSet, k: usize, convention: Convention) -> Result<SmoothLattice> {
    if k < 1 {
        return Err(Error::OutOfRange {
            what: "k",
            min: 1,
            got: 0,
        });
    }
    let seq = SmoothSequence::generate(g.prime_base(), k)?;
    let bound = seq.values[k - 1];
    let take = match convention {
        Convention::Inclusive => k,
        Convention::Strict => k - 1,
    };
    let cells = seq.values[..take]
        .iter()
        .map(|&value| Cell {
            exponents: exponents_over(value, g.prime_base()).expect("generated from the base"),
            value,
        })
        .collect();
    Ok(SmoothLattice {
        base: g.prime_base().to_vec(),
        gammas: g.gammas().to_vec(),
        cells,
        bound,
        k,
        convention,
    })
}

/// The translate-invariant cell set `{1} ∪ Γ` in prime-base exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicShape {
    pub offsets: Vec<Vec<u32>>,
    pub values: Vec<u64>,
}

pub fn basic_shape(g: &GammaSet) -> BasicShape {
    let values: Vec<u64> = std::iter::once(1)
        .chain(g.gammas().iter().copied())
        .collect();
    let offsets = values
        .iter()
        .map(|&v| {
            exponents_over(v, g.prime_base()).expect("multiplier factors over its prime base")
        })
        .collect();
    BasicShape { offsets, values }
}

/// Every translate `m·shape` fully inside the lattice, listed by cell value
/// in shape order, ascending in `m`.
pub fn constraint_instances(lat: &SmoothLattice, shape: &BasicShape) -> Vec<Vec<u64>> {
    let present: BTreeSet<u64> = lat.cells.iter().map(|c| c.value).collect();
    lat.cells
        .iter()
        .filter_map(|c| {
            let inst: Option<Vec<u64>> = shape
                .values
                .iter()
                .map(|&s| c.value.checked_mul(s).filter(|v| present.contains(v)))
                .collect();
            inst
        })
        .collect()
}

/// Square 0-1 matrix of an additive shift of finite type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<bool>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::MalformedMatrix("no rows".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != size) {
            return Err(Error::MalformedMatrix(format!(
                "row of length {} in a {size}-row matrix",
                r.len()
            )));
        }
        Ok(Self {
            size,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn golden_mean() -> Self {
        Self::new(vec![vec![true, true], vec![true, false]]).unwrap()
    }

    pub fn full(size: usize) -> Self {
        Self::new(vec![vec![true; size]; size]).unwrap()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.entries[from * self.size + to]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.entries
            .chunks(self.size)
            .map(|r| r.iter().map(|&b| b as u8).collect())
            .collect()
    }
}

impl FromStr for TransitionMatrix {
    type Err = Error;

    /// Rows separated by `;` or newlines, entries by `,` or whitespace.
    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .split([';', '\n'])
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .map(|r| {
                r.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| match t {
                        "0" => Ok(false),
                        "1" => Ok(true),
                        other => Err(Error::MalformedMatrix(format!(
                            "entry `{other}` is not 0 or 1"
                        ))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }
}

/// Alphabet size, allowed products, and an optional additive SFT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub num_symbols: u32,
    pub allowed_products: BTreeSet<u64>,
    pub sft_matrix: Option<TransitionMatrix>,
}

impl ConstraintSystem {
    pub fn new(num_symbols: u32, allowed: impl IntoIterator<Item = u64>) -> Result<Self> {
        if num_symbols < 1 {
            return Err(Error::OutOfRange {
                what: "num_symbols",
                min: 1,
                got: 0,
            });
        }
        let allowed_products: BTreeSet<u64> = allowed.into_iter().collect();
        if allowed_products.is_empty() {
            return Err(Error::EmptyAllowedSet);
        }
        Ok(Self {
            num_symbols,
            allowed_products,
            sft_matrix: None,
        })
    }

    /// Binary symbols, product must vanish: no instance labelled all ones.
    pub fn binary() -> Self {
        Self::new(2, [0]).unwrap()
    }

    pub fn with_sft(mut self, matrix: TransitionMatrix) -> Result<Self> {
        if matrix.size() != self.num_symbols as usize {
            return Err(Error::MatrixShape {
                expected: self.num_symbols,
                got: matrix.size(),
            });
        }
        self.sft_matrix = Some(matrix);
        Ok(self)
    }

    pub fn allows_product(&self, product: u64) -> bool {
        self.allowed_products.contains(&product)
    }
}

/// Exact count plus its natural logarithm (`-inf` for zero).
#[derive(Debug, Clone, PartialEq)]
pub struct PatternCount {
    pub exact: BigUint,
    pub log_value: f64,
}

/// Natural log of a big integer, accurate to a few ulps.
pub fn ln_biguint(b: &BigUint) -> f64 {
    if b.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = b.bits();
    if bits <= 64 {
        return (b.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (b >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

impl PatternCount {
    pub fn new(exact: BigUint) -> Self {
        let log_value = ln_biguint(&exact);
        Self { exact, log_value }
    }
}

impl From<BigUint> for PatternCount {
    fn from(b: BigUint) -> Self {
        Self::new(b)
    }
}

fn lattice_model<'a>(lat: &SmoothLattice, cs: &'a ConstraintSystem) -> Result<Model<'a>> {
    if cs.sft_matrix.is_some() {
        return Err(Error::UnexpectedMatrix);
    }
    let g = GammaSet::new(&lat.gammas)?;
    let index: HashMap<u64, usize> = lat
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| (c.value, i))
        .collect();
    let constraints = constraint_instances(lat, &basic_shape(&g))
        .into_iter()
        .map(|inst| Constraint {
            scope: inst.iter().map(|v| index[v]).collect(),
            rule: Rule::ProductIn(&cs.allowed_products),
        })
        .collect();
    Ok(Model {
        num_vars: lat.cells.len(),
        num_symbols: cs.num_symbols,
        constraints,
    })
}

/// Exact number of admissible labelings of the lattice.
pub fn count_patterns(lat: &SmoothLattice, cs: &ConstraintSystem) -> Result<PatternCount> {
    Ok(lattice_model(lat, cs)?.count()?.into())
}

/// Inclusive counts `b_1, …, b_{k_max}` from a single elimination sweep:
/// the prefix of `L_K` through its `k`-th cell is exactly `L_k`.
pub fn inclusive_series(
    g: &GammaSet,
    cs: &ConstraintSystem,
    k_max: usize,
) -> Result<Vec<PatternCount>> {
    let lat = build_lattice(g, k_max, Convention::Inclusive)?;
    Ok(lattice_model(&lat, cs)?
        .prefix_counts()?
        .into_iter()
        .map(PatternCount::new)
        .collect())
}

/// Counts `b_1, …, b_{k_max}` under either convention. Strict `b_k` is the
/// inclusive count on `k − 1` cells, with `b_1 = 1` for the empty lattice.
pub fn count_series(
    g: &GammaSet,
    cs: &ConstraintSystem,
    k_max: usize,
    convention: Convention,
) -> Result<Vec<PatternCount>> {
    match convention {
        Convention::Inclusive => inclusive_series(g, cs, k_max),
        Convention::Strict => {
            let mut out = vec![PatternCount::new(BigUint::from(1u32))];
            if k_max > 1 {
                out.extend(inclusive_series(g, cs, k_max - 1)?);
            }
            Ok(out)
        }
    }
}

/// Largest exhaustive enumeration accepted, as a power of two.
pub const BRUTE_FORCE_LOG2_LIMIT: u32 = 27;

pub(crate) fn check_enumeration_size(symbols: u32, cells: usize) -> Result<()> {
    let log2 = cells as f64 * (symbols.max(1) as f64).log2();
    if log2 > BRUTE_FORCE_LOG2_LIMIT as f64 + 1e-9 {
        return Err(Error::TooLarge {
            symbols,
            cells,
            limit_log2: BRUTE_FORCE_LOG2_LIMIT,
        });
    }
    Ok(())
}

/// Exhaustive oracle for [`count_patterns`]: tries every labeling.
pub fn brute_force_count(lat: &SmoothLattice, cs: &ConstraintSystem) -> Result<PatternCount> {
    if cs.sft_matrix.is_some() {
        return Err(Error::UnexpectedMatrix);
    }
    let n = cs.num_symbols;
    let cells = lat.cells.len();
    check_enumeration_size(n, cells)?;

    // instances recomputed by direct search over pairs (cell, multiplier)
    let values = lat.values();
    let mut instances: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let mut inst = vec![i];
        let complete = lat.gammas.iter().all(|&g| {
            match values.iter().position(|&w| Some(w) == v.checked_mul(g)) {
                Some(j) => {
                    inst.push(j);
                    true
                }
                None => false,
            }
        });
        if complete {
            instances.push(inst);
        }
    }

    let mut labels = vec![0u64; cells];
    let mut total: u64 = 0;
    loop {
        let ok = instances.iter().all(|inst| {
            let prod: u128 = inst.iter().map(|&c| labels[c] as u128).product();
            u64::try_from(prod).is_ok_and(|p| cs.allows_product(p))
        });
        if ok {
            total += 1;
        }
        // odometer
        let mut pos = 0;
        loop {
            if pos == cells {
                return Ok(PatternCount::new(BigUint::from(total)));
            }
            labels[pos] += 1;
            if labels[pos] < n as u64 {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact ratios `r_k = b_k / b_{k−1}`, `k = 2..=k_max`, from inclusive counts.
pub fn ratio_sequence(
    g: &GammaSet,
    cs: &ConstraintSystem,
    k_max: usize,
) -> Result<Vec<BigRational>> {
    if k_max < 2 {
        return Err(Error::OutOfRange {
            what: "k_max",
            min: 2,
            got: k_max as u64,
        });
    }
    let series = inclusive_series(g, cs, k_max)?;
    Ok(series
        .windows(2)
        .map(|w| {
            BigRational::new(
                BigInt::from(w[1].exact.clone()),
                BigInt::from(w[0].exact.clone()),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma(raw: &[u64]) -> GammaSet {
        GammaSet::new(raw).unwrap()
    }

    fn count(raw: &[u64], k: usize, conv: Convention, cs: &ConstraintSystem) -> u64 {
        let lat = build_lattice(&gamma(raw), k, conv).unwrap();
        (&count_patterns(&lat, cs).unwrap().exact)
            .try_into()
            .unwrap()
    }

    #[test]
    fn lattices() {
        let l = build_lattice(&gamma(&[2, 3]), 5, Convention::Inclusive).unwrap();
        assert_eq!(l.values(), vec![1, 2, 3, 4, 6]);
        assert_eq!(l.cells[4].exponents, vec![1, 1]);
        let l = build_lattice(&gamma(&[2, 3]), 5, Convention::Strict).unwrap();
        assert_eq!(l.values(), vec![1, 2, 3, 4]);
        assert_eq!(l.bound, 6);
        let l = build_lattice(&gamma(&[2, 3, 5]), 5, Convention::Inclusive).unwrap();
        assert_eq!(l.values(), vec![1, 2, 3, 4, 5]);
        assert!(build_lattice(&gamma(&[2]), 0, Convention::Inclusive).is_err());
    }

    #[test]
    fn shapes() {
        assert_eq!(
            basic_shape(&gamma(&[2, 3])).offsets,
            vec![vec![0, 0], vec![1, 0], vec![0, 1]]
        );
        assert_eq!(
            basic_shape(&gamma(&[2, 8])).offsets,
            vec![vec![0], vec![1], vec![3]]
        );
        assert_eq!(basic_shape(&gamma(&[2])).offsets, vec![vec![0], vec![1]]);
    }

    #[test]
    fn instances() {
        let g = gamma(&[2, 3]);
        let l = build_lattice(&g, 5, Convention::Inclusive).unwrap();
        assert_eq!(
            constraint_instances(&l, &basic_shape(&g)),
            vec![vec![1, 2, 3], vec![2, 4, 6]]
        );
        let g = gamma(&[2, 3, 5]);
        let l = build_lattice(&g, 5, Convention::Inclusive).unwrap();
        assert_eq!(
            constraint_instances(&l, &basic_shape(&g)),
            vec![vec![1, 2, 3, 5]]
        );
        let l = build_lattice(&g, 1, Convention::Inclusive).unwrap();
        assert!(constraint_instances(&l, &basic_shape(&g)).is_empty());
    }

    #[test]
    fn reference_counts() {
        let cs = ConstraintSystem::binary();
        assert_eq!(count(&[2, 3, 5], 5, Convention::Inclusive, &cs), 30);
        assert_eq!(count(&[2, 3, 5], 10, Convention::Inclusive, &cs), 904);
        assert_eq!(count(&[2, 3], 5, Convention::Strict, &cs), 14);
        assert_eq!(count(&[2, 3], 4, Convention::Inclusive, &cs), 14);
        assert_eq!(count(&[2, 3], 5, Convention::Inclusive, &cs), 25);
    }

    #[test]
    fn powers_of_two_give_fibonacci() {
        let cs = ConstraintSystem::binary();
        let s = inclusive_series(&gamma(&[2]), &cs, 12).unwrap();
        let got: Vec<u64> = s.iter().map(|c| (&c.exact).try_into().unwrap()).collect();
        assert_eq!(got, vec![2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377]);
    }

    #[test]
    fn sparse_shape_chain() {
        // {2, 8}: strings avoiding ones at positions {i, i+1, i+3}
        let cs = ConstraintSystem::binary();
        let s = inclusive_series(&gamma(&[2, 8]), &cs, 4).unwrap();
        let got: Vec<u64> = s.iter().map(|c| (&c.exact).try_into().unwrap()).collect();
        assert_eq!(got, vec![2, 4, 8, 14]);
    }

    #[test]
    fn ternary_pairs() {
        // N = 3, C = {0, 2}: pairs (a, b) with a·b ∈ {0, 2}
        let cs = ConstraintSystem::new(3, [0, 2]).unwrap();
        assert_eq!(count(&[2], 2, Convention::Inclusive, &cs), 7);
    }

    #[test]
    fn oracle_edges() {
        let cs = ConstraintSystem::binary();
        let l = build_lattice(&gamma(&[2, 3]), 1, Convention::Strict).unwrap();
        assert!(l.is_empty());
        assert_eq!(
            brute_force_count(&l, &cs).unwrap().exact,
            BigUint::from(1u32)
        );
        assert_eq!(count_patterns(&l, &cs).unwrap().exact, BigUint::from(1u32));

        // one symbol (0): every product is 0
        let always = ConstraintSystem::new(1, [0]).unwrap();
        let l = build_lattice(&gamma(&[2]), 3, Convention::Inclusive).unwrap();
        let never = ConstraintSystem::new(1, [1]).unwrap();
        assert_eq!(
            brute_force_count(&l, &never).unwrap().exact,
            BigUint::zero()
        );
        assert_eq!(count_patterns(&l, &never).unwrap().exact, BigUint::zero());
        assert_eq!(
            brute_force_count(&l, &always).unwrap().exact,
            BigUint::from(1u32)
        );
        assert_eq!(
            count_patterns(&l, &always).unwrap().exact,
            BigUint::from(1u32)
        );

        let l = build_lattice(&gamma(&[2, 3]), 28, Convention::Inclusive).unwrap();
        assert!(matches!(
            brute_force_count(&l, &cs),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn log_of_counts() {
        let c = PatternCount::new(BigUint::from(14u32));
        assert!((c.log_value - 14f64.ln()).abs() < 1e-15);
        assert_eq!(
            PatternCount::new(BigUint::zero()).log_value,
            f64::NEG_INFINITY
        );
        let big = BigUint::from(3u32).pow(200);
        let c = PatternCount::new(big);
        assert!((c.log_value / (200.0 * 3f64.ln()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratios() {
        let r = ratio_sequence(&gamma(&[2, 3]), &ConstraintSystem::binary(), 5).unwrap();
        let two = BigRational::from_integer(2.into());
        assert_eq!(r[0], two);
        assert_eq!(r[1], BigRational::new(7.into(), 4.into()));
        assert!(ratio_sequence(&gamma(&[2]), &ConstraintSystem::binary(), 1).is_err());
    }

    #[test]
    fn matrix_parsing() {
        let m: TransitionMatrix = "1,1;1,0".parse().unwrap();
        assert_eq!(m, TransitionMatrix::golden_mean());
        let m: TransitionMatrix = "1 1\n1 0\n".parse().unwrap();
        assert_eq!(m.rows(), vec![vec![1, 1], vec![1, 0]]);
        assert!("1,1;1".parse::<TransitionMatrix>().is_err());
        assert!("1,2;1,0".parse::<TransitionMatrix>().is_err());
        let cs = ConstraintSystem::new(3, [0]).unwrap();
        assert!(matches!(
            cs.with_sft(TransitionMatrix::golden_mean()),
            Err(Error::MatrixShape {
                expected: 3,
                got: 2
            })
        ));
    }
}
