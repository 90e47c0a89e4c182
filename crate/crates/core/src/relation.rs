//! Multiplier sets, the smooth-number semigroups they generate, and the
//! complementary root sets that split the positive integers into disjoint
//! geometric chains `i·M`.
//!
//! Everything here is exact integer or rational arithmetic. A non-coprime
//! multiplier set is always reduced to its prime base before sequences,
//! complements or densities are taken; the original multipliers only matter
//! for the constraint geometry in [`crate::pattern`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;

use crate::error::{Error, Result};

/// A validated multiplier set together with its prime base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaSet {
    gammas: Vec<u64>,
    pairwise_coprime: bool,
    prime_base: Vec<u64>,
}

impl GammaSet {
    /// Validates `raw` (any order). Non-coprime sets are accepted.
    pub fn new(raw: &[u64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyGamma);
        }
        let mut gammas = raw.to_vec();
        gammas.sort_unstable();
        if let Some(&g) = gammas.iter().find(|&&g| g < 2) {
            return Err(Error::GammaTooSmall(g));
        }
        if let Some(w) = gammas.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateGamma(w[0]));
        }

        let pairwise_coprime = gammas
            .iter()
            .enumerate()
            .all(|(i, a)| gammas[i + 1..].iter().all(|b| a.gcd(b) == 1));

        let mut prime_base: Vec<u64> = gammas.iter().flat_map(|&g| prime_factors(g)).collect();
        prime_base.sort_unstable();
        prime_base.dedup();

        Ok(Self {
            gammas,
            pairwise_coprime,
            prime_base,
        })
    }

    pub fn gammas(&self) -> &[u64] {
        &self.gammas
    }

    pub fn prime_base(&self) -> &[u64] {
        &self.prime_base
    }

    pub fn is_pairwise_coprime(&self) -> bool {
        self.pairwise_coprime
    }

    /// Largest multiplier; a constraint rooted at `m` ends at `max_gamma·m`.
    pub fn max_gamma(&self) -> u64 {
        *self.gammas.last().expect("validated non-empty")
    }

    /// Product of the prime base, the period of the complement set.
    pub fn primorial(&self) -> u64 {
        self.prime_base.iter().product()
    }
}

/// Distinct prime factors of `n` in ascending order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `validate_gamma`: thin alias over [`GammaSet::new`].
pub fn validate_gamma(raw: &[u64]) -> Result<GammaSet> {
    GammaSet::new(raw)
}

/// Ascending elements `q_1 = 1 < q_2 < …` of the semigroup generated by `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmoothSequence {
    pub base: Vec<u64>,
    pub values: Vec<u64>,
}

impl SmoothSequence {
    /// First `count` elements generated by `base`.
    ///
    /// Ordered merge: each generator keeps a pointer into the output and
    /// proposes `out[ptr]·g`; the minimum proposal is emitted and every
    /// generator that proposed it advances, which suppresses duplicates
    /// such as `2·3 = 3·2` or `2·8 = 8·2`.
    pub fn generate(base: &[u64], count: usize) -> Result<Self> {
        Self::generate_while(base, count, u64::MAX)
    }

    /// All elements `≤ bound`.
    pub fn up_to(base: &[u64], bound: u64) -> Result<Self> {
        Self::generate_while(base, usize::MAX, bound)
    }

    fn generate_while(base: &[u64], count: usize, bound: u64) -> Result<Self> {
        let mut values = Vec::new();
        if count == 0 || bound == 0 {
            return Ok(Self {
                base: base.to_vec(),
                values,
            });
        }
        values.push(1u64);
        let mut ptr = vec![0usize; base.len()];
        while values.len() < count {
            let mut next = u64::MAX;
            let mut any = false;
            for (j, &g) in base.iter().enumerate() {
                if let Some(c) = values[ptr[j]].checked_mul(g) {
                    next = next.min(c);
                    any = true;
                }
            }
            if !any || next > bound {
                if count == usize::MAX {
                    break;
                }
                return Err(Error::Overflow("generating the smooth sequence"));
            }
            for (j, &g) in base.iter().enumerate() {
                if values[ptr[j]].checked_mul(g) == Some(next) {
                    ptr[j] += 1;
                }
            }
            values.push(next);
        }
        Ok(Self {
            base: base.to_vec(),
            values,
        })
    }
}

/// `smooth_sequence`: first `limit_count` elements over the multipliers
/// themselves or over their prime base.
pub fn smooth_sequence(
    g: &GammaSet,
    use_prime_base: bool,
    limit_count: usize,
) -> Result<SmoothSequence> {
    if limit_count < 1 {
        return Err(Error::OutOfRange {
            what: "limit_count",
            min: 1,
            got: 0,
        });
    }
    let base = if use_prime_base {
        g.prime_base()
    } else {
        g.gammas()
    };
    SmoothSequence::generate(base, limit_count)
}

/// True iff no prime of the base divides `n`.
pub fn in_complement(n: u64, g: &GammaSet) -> bool {
    g.prime_base().iter().all(|p| !n.is_multiple_of(*p))
}

/// Number of complement members in `[1, x]`.
pub fn complement_count_up_to(x: u64, g: &GammaSet) -> u64 {
    let period = g.primorial();
    let per_period = (1..=period).filter(|&r| in_complement(r, g)).count() as u64;
    let rem = x % period;
    (x / period) * per_period + (1..=rem).filter(|&r| in_complement(r, g)).count() as u64
}

pub fn rational(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Density of the chain roots. Counted over one period of the prime base and
/// checked against the Euler product `Π (1 − 1/p)`.
pub fn beta(g: &GammaSet) -> BigRational {
    let period = g.primorial();
    let counted = rational(complement_count_up_to(period, g), period);
    let product = g
        .prime_base()
        .iter()
        .fold(rational(1, 1), |acc, &p| acc * rational(p - 1, p));
    assert_eq!(
        counted, product,
        "root density disagrees with its Euler product"
    );
    counted
}

/// One chain `root·{q_1, …, q_length}` of the range decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chain {
    pub root: u64,
    pub length: usize,
}

/// Splits `[1, n]` into maximal chains `i·q_1 < … < i·q_k ≤ n` over the
/// complement roots `i ≤ n`, in ascending root order.
pub fn decompose_range(n: u64, g: &GammaSet) -> Result<Vec<Chain>> {
    if n < 1 {
        return Err(Error::OutOfRange {
            what: "n",
            min: 1,
            got: n,
        });
    }
    let seq = SmoothSequence::up_to(g.prime_base(), n)?;
    Ok((1..=n)
        .filter(|&i| in_complement(i, g))
        .map(|i| {
            let cap = n / i;
            Chain {
                root: i,
                length: seq.values.partition_point(|&q| q <= cap),
            }
        })
        .collect())
}

/// Exact copy count `α(k; n)` and its limiting density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    pub k: usize,
    pub n: u64,
    pub alpha: u64,
    pub empirical: BigRational,
    pub limit: BigRational,
}

/// Counts complement roots in `(n/q_{k+1}, n/q_k]`, i.e. the roots whose
/// chain inside `[1, n]` has exactly `k` cells.
pub fn copy_count(k: usize, n: u64, g: &GammaSet) -> Result<DensityReport> {
    if k < 1 {
        return Err(Error::OutOfRange {
            what: "k",
            min: 1,
            got: 0,
        });
    }
    if n < 1 {
        return Err(Error::OutOfRange {
            what: "n",
            min: 1,
            got: 0,
        });
    }
    let seq = SmoothSequence::generate(g.prime_base(), k + 1)?;
    let (qk, qk1) = (seq.values[k - 1], seq.values[k]);
    let alpha = complement_count_up_to(n / qk, g) - complement_count_up_to(n / qk1, g);
    let limit = beta(g) * (rational(1, qk) - rational(1, qk1));
    Ok(DensityReport {
        k,
        n,
        alpha,
        empirical: rational(alpha, n),
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma(raw: &[u64]) -> GammaSet {
        GammaSet::new(raw).unwrap()
    }

    #[test]
    fn validation() {
        let g = gamma(&[2, 3]);
        assert_eq!(g.gammas(), &[2, 3]);
        assert!(g.is_pairwise_coprime());
        assert_eq!(g.prime_base(), &[2, 3]);

        let g = gamma(&[8, 2]);
        assert_eq!(g.gammas(), &[2, 8]);
        assert!(!g.is_pairwise_coprime());
        assert_eq!(g.prime_base(), &[2]);

        assert_eq!(GammaSet::new(&[3, 2, 2]), Err(Error::DuplicateGamma(2)));
        assert_eq!(GammaSet::new(&[1, 2]), Err(Error::GammaTooSmall(1)));
        assert_eq!(GammaSet::new(&[]), Err(Error::EmptyGamma));
        assert_eq!(gamma(&[6, 10]).prime_base(), &[2, 3, 5]);
    }

    #[test]
    fn smooth_sequences() {
        let s = smooth_sequence(&gamma(&[2, 3]), false, 9).unwrap();
        assert_eq!(s.values, vec![1, 2, 3, 4, 6, 8, 9, 12, 16]);
        let s = smooth_sequence(&gamma(&[2]), false, 5).unwrap();
        assert_eq!(s.values, vec![1, 2, 4, 8, 16]);
        let s = smooth_sequence(&gamma(&[2, 3, 5]), true, 5).unwrap();
        assert_eq!(s.values, vec![1, 2, 3, 4, 5]);
        // {2, 8} generates powers of two with 16 = 2·8 = 8·2 only once
        let s = smooth_sequence(&gamma(&[2, 8]), false, 6).unwrap();
        assert_eq!(s.values, vec![1, 2, 4, 8, 16, 32]);
        assert!(smooth_sequence(&gamma(&[2]), false, 0).is_err());
    }

    #[test]
    fn complement_membership() {
        assert!(in_complement(7, &gamma(&[2, 3])));
        assert!(!in_complement(9, &gamma(&[2, 3])));
        assert!(!in_complement(25, &gamma(&[2, 3, 5])));
        assert!(in_complement(1, &gamma(&[2, 8])));
        assert!(!in_complement(6, &gamma(&[2, 8])));
    }

    #[test]
    fn root_density() {
        assert_eq!(beta(&gamma(&[2, 3])), rational(1, 3));
        assert_eq!(beta(&gamma(&[2, 3, 5])), rational(4, 15));
        assert_eq!(beta(&gamma(&[2])), rational(1, 2));
        assert_eq!(beta(&gamma(&[2, 8])), rational(1, 2));
    }

    #[test]
    fn decomposition_of_36() {
        let chains = decompose_range(36, &gamma(&[2, 3])).unwrap();
        let long: Vec<(u64, usize)> = chains
            .iter()
            .filter(|c| c.length > 1)
            .map(|c| (c.root, c.length))
            .collect();
        assert_eq!(
            long,
            vec![(1, 14), (5, 5), (7, 4), (11, 3), (13, 2), (17, 2)]
        );
        let singles: Vec<u64> = chains
            .iter()
            .filter(|c| c.length == 1)
            .map(|c| c.root)
            .collect();
        assert_eq!(singles, vec![19, 23, 25, 29, 31, 35]);
    }

    #[test]
    fn decomposition_of_16_powers_of_two() {
        let chains = decompose_range(16, &gamma(&[2])).unwrap();
        let lengths: Vec<usize> = chains.iter().map(|c| c.length).collect();
        assert_eq!(lengths, vec![5, 3, 2, 2, 1, 1, 1, 1]);
        assert_eq!(
            decompose_range(1, &gamma(&[2, 3])).unwrap(),
            vec![Chain { root: 1, length: 1 }]
        );
    }

    #[test]
    fn copy_counts() {
        let g = gamma(&[2, 3]);
        let r = copy_count(1, 36, &g).unwrap();
        assert_eq!(r.alpha, 6);
        assert_eq!(r.limit, rational(1, 6));
        assert_eq!(copy_count(2, 36, &g).unwrap().alpha, 2);
        // n < q_k: empty interval
        assert_eq!(copy_count(6, 7, &g).unwrap().alpha, 0);
    }
}
