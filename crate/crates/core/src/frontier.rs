//! Exact counting of constrained labelings by variable elimination.
//!
//! Variables are eliminated in index order. The state is the labeling of
//! the *frontier*: already-labelled variables that still occur in a
//! constraint whose last variable has not been reached. Each frontier
//! variable owns a fixed bit-slot of the state index while it is live, so
//! the table is a dense array of `2^(slot_bits · width)` wide counters.
//! Counts are fixed-width multi-limb integers sized from `N^V`, so no
//! intermediate value can overflow.

use std::collections::BTreeSet;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::pattern::TransitionMatrix;

/// Largest dense state table accepted, in bits of state index.
pub const MAX_STATE_BITS: u32 = 26;

#[derive(Debug, Clone)]
pub enum Rule<'a> {
    /// Product of the labels over the scope must lie in the set.
    ProductIn(&'a BTreeSet<u64>),
    /// `matrix[label(scope[0])][label(scope[1])] == 1`.
    Transition(&'a TransitionMatrix),
}

#[derive(Debug, Clone)]
pub struct Constraint<'a> {
    pub scope: Vec<usize>,
    pub rule: Rule<'a>,
}

/// Labelings `0..num_vars → 0..num_symbols` subject to `constraints`.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    pub num_vars: usize,
    pub num_symbols: u32,
    pub constraints: Vec<Constraint<'a>>,
}

pub(crate) fn product_in(labels: impl IntoIterator<Item = u64>, allowed: &BTreeSet<u64>) -> bool {
    let mut prod: u64 = 1;
    for x in labels {
        if x == 0 {
            return allowed.contains(&0);
        }
        prod = match prod.checked_mul(x) {
            Some(p) => p,
            // larger than any representable member of the set
            None => return false,
        };
    }
    allowed.contains(&prod)
}

struct Step {
    var: usize,
    /// `(rule, slots of the other scope members, position of `var` in scope)`
    checks: Vec<(usize, Vec<u32>, usize)>,
    keep_slot: Option<u32>,
    clear_mask: usize,
}

fn limbs_for(num_vars: usize, num_symbols: u32) -> usize {
    let bits_per_symbol = (num_symbols.max(2) as f64).log2();
    let bits = (num_vars as f64 * bits_per_symbol).ceil() as usize + 2;
    bits / 64 + 1
}

#[inline]
fn add_into(dst: &mut [u64], src: &[u64]) {
    let mut carry = false;
    for (i, d) in dst.iter_mut().enumerate() {
        let s = src.get(i).copied().unwrap_or(0);
        if s == 0 && !carry && i >= src.len() {
            break;
        }
        let (v, c1) = d.overflowing_add(s);
        let (v, c2) = v.overflowing_add(carry as u64);
        *d = v;
        carry = c1 || c2;
    }
    debug_assert!(!carry, "wide counter overflow");
}

fn to_biguint(limbs: &[u64]) -> BigUint {
    let mut digits = Vec::with_capacity(limbs.len() * 2);
    for &l in limbs {
        digits.push(l as u32);
        digits.push((l >> 32) as u32);
    }
    BigUint::new(digits)
}

impl<'a> Model<'a> {
    /// Prefix counts: entry `t` is the number of labelings of variables
    /// `0..=t` satisfying every constraint whose scope lies in `0..=t`.
    pub fn prefix_counts(&self) -> Result<Vec<BigUint>> {
        let v = self.num_vars;
        let n = self.num_symbols as usize;
        if v == 0 {
            return Ok(Vec::new());
        }

        let mut last_use: Vec<usize> = (0..v).collect();
        let mut by_last: Vec<Vec<usize>> = vec![Vec::new(); v];
        for (ci, c) in self.constraints.iter().enumerate() {
            let hi = *c.scope.iter().max().expect("constraint scope is non-empty");
            by_last[hi].push(ci);
            for &x in &c.scope {
                last_use[x] = last_use[x].max(hi);
            }
        }

        let slot_bits = usize::BITS - (n.max(2) - 1).leading_zeros();
        let digit_mask = (1usize << slot_bits) - 1;

        // assign slots, lowest free first
        let mut slot_of = vec![u32::MAX; v];
        let mut free: BTreeSet<u32> = BTreeSet::new();
        let mut next_slot = 0u32;
        let mut live: Vec<usize> = Vec::new();
        let mut steps = Vec::with_capacity(v);
        for t in 0..v {
            let checks = by_last[t]
                .iter()
                .map(|&ci| {
                    let scope = &self.constraints[ci].scope;
                    let pos = scope.iter().position(|&x| x == t).unwrap();
                    let slots = scope
                        .iter()
                        .filter(|&&x| x != t)
                        .map(|&x| slot_of[x])
                        .collect();
                    (ci, slots, pos)
                })
                .collect();
            let mut clear_mask = 0usize;
            live.retain(|&u| {
                if last_use[u] == t {
                    clear_mask |= digit_mask << (slot_of[u] as usize * slot_bits as usize);
                    free.insert(slot_of[u]);
                    slot_of[u] = u32::MAX;
                    false
                } else {
                    true
                }
            });
            let keep_slot = if last_use[t] > t {
                let s = match free.pop_first() {
                    Some(s) => s,
                    None => {
                        next_slot += 1;
                        next_slot - 1
                    }
                };
                slot_of[t] = s;
                live.push(t);
                Some(s)
            } else {
                None
            };
            steps.push(Step {
                var: t,
                checks,
                keep_slot,
                clear_mask,
            });
        }

        let state_bits = slot_bits * next_slot;
        if state_bits > MAX_STATE_BITS {
            return Err(Error::FrontierTooWide {
                bits: state_bits,
                limit: MAX_STATE_BITS,
            });
        }
        let states = 1usize << state_bits;
        let limbs = limbs_for(v, self.num_symbols);

        let mut table = vec![0u64; states * limbs];
        table[0] = 1;
        let mut next = vec![0u64; states * limbs];
        let mut prefix = Vec::with_capacity(v);
        let mut scratch: Vec<u64> = Vec::new();

        for step in &steps {
            next.iter_mut().for_each(|x| *x = 0);
            let mut total = vec![0u64; limbs + 1];
            for s in 0..states {
                let src = &table[s * limbs..(s + 1) * limbs];
                if src.iter().all(|&x| x == 0) {
                    continue;
                }
                let base = s & !step.clear_mask;
                for x in 0..n {
                    let ok = step.checks.iter().all(|(ci, slots, pos)| {
                        scratch.clear();
                        scratch.extend(slots.iter().map(|&sl| {
                            ((s >> (sl as usize * slot_bits as usize)) & digit_mask) as u64
                        }));
                        scratch.insert(*pos, x as u64);
                        match &self.constraints[*ci].rule {
                            Rule::ProductIn(allowed) => {
                                product_in(scratch.iter().copied(), allowed)
                            }
                            Rule::Transition(m) => {
                                m.allows(scratch[0] as usize, scratch[1] as usize)
                            }
                        }
                    });
                    if !ok {
                        continue;
                    }
                    let ns = match step.keep_slot {
                        Some(sl) => base | (x << (sl as usize * slot_bits as usize)),
                        None => base,
                    };
                    add_into(&mut next[ns * limbs..(ns + 1) * limbs], src);
                    add_into(&mut total, src);
                }
            }
            debug_assert!(step.var == prefix.len());
            prefix.push(to_biguint(&total));
            std::mem::swap(&mut table, &mut next);
        }
        Ok(prefix)
    }

    /// Count over all variables.
    pub fn count(&self) -> Result<BigUint> {
        Ok(self
            .prefix_counts()?
            .pop()
            .unwrap_or_else(|| BigUint::from(1u32)))
    }
}
