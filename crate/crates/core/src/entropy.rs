//! Entropy series for decoupled multiplicative shifts.
//!
//! The entropy is the weighted sum `Σ_k c_k · ln b_k` with exact rational
//! weights `c_k = β·(1/q_k − 1/q_{k+1})`: `c_k` is the limiting share of
//! roots whose chain has exactly `k` cells, and `b_k` the admissible
//! patterns on such a chain. Truncating after `n` terms gives a lower
//! bound; bounding every omitted `b_k` by `N^k` gives the tail.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::pattern::{count_series, ln_biguint, ConstraintSystem, Convention, PatternCount};
use crate::relation::{beta, decompose_range, rational, GammaSet, SmoothSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub terms: usize,
    /// Partial sum through `terms`, natural log.
    pub value: f64,
    pub tail_bound: f64,
    pub convention: Convention,
    pub beta: BigRational,
    /// Per-term breakdown, `terms` entries.
    pub series: Vec<SeriesTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerm {
    pub k: usize,
    pub q: u64,
    pub weight: BigRational,
    pub count: PatternCount,
    /// Partial sum through this term.
    pub partial: f64,
}

/// Compensated (Kahan–Babuška) accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    // numerator and denominator may exceed f64 range independently
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(900);
        let n = (r.numer() >> shift).to_f64().unwrap();
        let d = (r.denom() >> shift).to_f64().unwrap();
        n / d
    }
}

/// Series weights `β·(1/q_k − 1/q_{k+1})` for `k = 1..=n`, with `q` over
/// the prime base.
pub fn series_weights(g: &GammaSet, n: usize) -> Result<(Vec<u64>, Vec<BigRational>)> {
    let seq = SmoothSequence::generate(g.prime_base(), n + 1)?;
    let b = beta(g);
    let weights = seq
        .values
        .windows(2)
        .map(|w| &b * (rational(1, w[0]) - rational(1, w[1])))
        .collect();
    Ok((seq.values, weights))
}

pub fn partial_entropy(
    g: &GammaSet,
    cs: &ConstraintSystem,
    n: usize,
    convention: Convention,
) -> Result<EntropyEstimate> {
    if n < 1 {
        return Err(Error::OutOfRange {
            what: "n",
            min: 1,
            got: 0,
        });
    }
    let (q, weights) = series_weights(g, n)?;
    let counts = count_series(g, cs, n, convention)?;
    let mut acc = CompensatedSum::default();
    let mut series = Vec::with_capacity(n);
    for (k, (w, c)) in weights.into_iter().zip(counts).enumerate() {
        acc.add(to_f64(&w) * c.log_value);
        series.push(SeriesTerm {
            k: k + 1,
            q: q[k],
            weight: w,
            count: c,
            partial: acc.value(),
        });
    }
    Ok(EntropyEstimate {
        terms: n,
        value: acc.value(),
        tail_bound: tail_bound(g, cs.num_symbols, n)?,
        convention,
        beta: beta(g),
        series,
    })
}

/// `Σ_{q ∈ M} 1/q = Π p/(p − 1)` over the prime base.
pub fn reciprocal_sum(g: &GammaSet) -> BigRational {
    g.prime_base()
        .iter()
        .fold(BigRational::one(), |acc, &p| acc * rational(p, p - 1))
}

/// Exact rational factor of the tail bound: `β·((n+1)/q_{n+1} + S − Σ_{k≤n+1} 1/q_k)`.
pub fn tail_factor(g: &GammaSet, n: usize) -> Result<BigRational> {
    let seq = SmoothSequence::generate(g.prime_base(), n + 1)?;
    let head = seq
        .values
        .iter()
        .fold(BigRational::zero(), |acc, &q| acc + rational(1, q));
    let qn1 = seq.values[n];
    Ok(beta(g) * (rational(n as u64 + 1, qn1) + reciprocal_sum(g) - head))
}

/// Upper bound on the omitted terms after `n`, replacing each `b_k` by `N^k`.
pub fn tail_bound(g: &GammaSet, num_symbols: u32, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::OutOfRange {
            what: "n",
            min: 1,
            got: 0,
        });
    }
    Ok(to_f64(&tail_factor(g, n)?) * (num_symbols as f64).ln())
}

/// `a_1 = 2, a_2 = 3, a_{k+1} = a_k + a_{k−1}`.
pub fn golden_counts(terms: usize) -> Vec<BigUint> {
    let mut a = Vec::with_capacity(terms);
    let (mut x, mut y) = (BigUint::from(2u32), BigUint::from(3u32));
    for _ in 0..terms {
        a.push(x.clone());
        let z = &x + &y;
        x = std::mem::replace(&mut y, z);
    }
    a
}

/// Closed-form series `(Q−1)² Σ_{k=1}^{terms} ln a_k / Q^{k+1}` for the
/// single-multiplier binary shift.
pub fn closed_form_xq0(q: u64, terms: usize) -> Result<f64> {
    if q < 2 {
        return Err(Error::OutOfRange {
            what: "Q",
            min: 2,
            got: q,
        });
    }
    if terms < 1 {
        return Err(Error::OutOfRange {
            what: "terms",
            min: 1,
            got: 0,
        });
    }
    let lead = rational((q - 1) * (q - 1), 1);
    let mut acc = CompensatedSum::default();
    let mut power = BigUint::from(q * q);
    for a in golden_counts(terms) {
        let w = &lead / BigRational::from_integer(power.clone().into());
        acc.add(to_f64(&w) * ln_biguint(&a));
        power *= q;
    }
    Ok(acc.value())
}

fn ensure_plain(cs: &ConstraintSystem) -> Result<()> {
    if cs.sft_matrix.is_some() {
        return Err(Error::UnexpectedMatrix);
    }
    Ok(())
}

/// `|X_n|` through the chain decomposition: `Π_k b_k^{α(k; n)}`.
pub fn sequence_count_exact(g: &GammaSet, cs: &ConstraintSystem, n: u64) -> Result<PatternCount> {
    ensure_plain(cs)?;
    let chains = decompose_range(n, g)?;
    let longest = chains.iter().map(|c| c.length).max().unwrap_or(1);
    let b = count_series(g, cs, longest, Convention::Inclusive)?;
    let mut multiplicity = vec![0u32; longest + 1];
    for c in &chains {
        multiplicity[c.length] += 1;
    }
    let exact = multiplicity
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &m)| m > 0)
        .fold(BigUint::one(), |acc, (k, &m)| acc * b[k - 1].exact.pow(m));
    Ok(PatternCount::new(exact))
}

/// Exhaustive oracle for [`sequence_count_exact`]: filters all `N^n` strings
/// against `x_k · Π_j x_{γ_j k} ∈ C` for every `k` with `max Γ · k ≤ n`.
pub fn sequence_count_naive(g: &GammaSet, cs: &ConstraintSystem, n: u64) -> Result<PatternCount> {
    ensure_plain(cs)?;
    crate::pattern::check_enumeration_size(cs.num_symbols, n as usize)?;
    let n = n as usize;
    let top = g.max_gamma() as usize;
    let roots: Vec<usize> = (1..=n).filter(|k| top * k <= n).collect();
    let mut x = vec![0u64; n + 1];
    let mut total: u64 = 0;
    loop {
        let ok = roots.iter().all(|&k| {
            let prod = g
                .gammas()
                .iter()
                .fold(x[k] as u128, |acc, &gm| acc * x[gm as usize * k] as u128);
            u64::try_from(prod).is_ok_and(|p| cs.allows_product(p))
        });
        total += ok as u64;
        let mut pos = 1;
        loop {
            if pos > n {
                return Ok(PatternCount::new(BigUint::from(total)));
            }
            x[pos] += 1;
            if x[pos] < cs.num_symbols as u64 {
                break;
            }
            x[pos] = 0;
            pos += 1;
        }
    }
}

pub fn minkowski_dimension(h: f64, num_symbols: u32) -> Result<f64> {
    if num_symbols < 2 {
        return Err(Error::OutOfRange {
            what: "num_symbols",
            min: 2,
            got: num_symbols as u64,
        });
    }
    if h.is_nan() || h < 0.0 {
        return Err(Error::OutOfRange {
            what: "entropy",
            min: 0,
            got: 0,
        });
    }
    Ok(h / (num_symbols as f64).ln())
}

/// Exact check of `Q^n = (n+1) + n(Q−2) + (Q−1)² Σ_{k=1}^{n−1} k Q^{n−1−k}`.
pub fn proposition_identity(q: u64, n: u32) -> Result<bool> {
    if q < 2 {
        return Err(Error::OutOfRange {
            what: "Q",
            min: 2,
            got: q,
        });
    }
    if n < 1 {
        return Err(Error::OutOfRange {
            what: "n",
            min: 1,
            got: 0,
        });
    }
    let qb = BigUint::from(q);
    let lhs = qb.pow(n);
    let sum = (1..n).fold(BigUint::zero(), |acc, k| {
        acc + BigUint::from(k) * qb.pow(n - 1 - k)
    });
    let rhs = BigUint::from(n + 1)
        + BigUint::from(n) * BigUint::from(q - 2)
        + BigUint::from((q - 1) * (q - 1)) * sum;
    Ok(lhs == rhs)
}
