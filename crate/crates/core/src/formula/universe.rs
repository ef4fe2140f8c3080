//! Canonical indexing of the clause universe.
//!
//! A width-`k` clause over `n` variables is identified by the index
//!
//! ```text
//! index = rank(vars) * 2^k + signs
//! ```
//!
//! where `rank` is the colexicographic rank of the ascending variable tuple
//! `v_0 < v_1 < ... < v_{k-1}`, i.e. `sum_i C(v_i, i + 1)`, and bit `i` of
//! `signs` is set when the `i`-th literal (in ascending variable order) is
//! negated. Indices therefore range over `[0, 2^k * C(n, k))`.

use smallvec::SmallVec;

use super::{Clause, Literal};
use crate::error::{Error, Result};

/// `C(n, k)`, or `None` on `u64` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Number of width-`k` clauses over `n` variables: `2^k * C(n, k)`.
pub fn clause_universe_size(n: usize, k: usize) -> Result<u64> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameters(format!(
            "clause width k={k} must satisfy 1 <= k <= n={n}"
        )));
    }
    let overflow = || Error::Range(format!("2^{k} * C({n}, {k}) overflows u64"));
    let c = binomial(n as u64, k as u64).ok_or_else(overflow)?;
    let signs = 1u64.checked_shl(k as u32).filter(|_| k < 64).ok_or_else(overflow)?;
    c.checked_mul(signs).ok_or_else(overflow)
}

/// Bijection between `[0, M)` and the width-`k` clauses over `n` variables.
#[derive(Clone, Debug)]
pub struct ClauseUniverse {
    n: usize,
    k: usize,
    size: u64,
    /// `table[j][v] = C(v, j)` for `j <= k`, `v <= n`.
    table: Vec<Vec<u64>>,
}

impl ClauseUniverse {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let size = clause_universe_size(n, k)?;
        let table = (0..=k)
            .map(|j| {
                (0..=n)
                    .map(|v| binomial(v as u64, j as u64).expect("bounded by C(n,k)"))
                    .collect()
            })
            .collect();
        Ok(ClauseUniverse { n, k, size, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `M = 2^k * C(n, k)`.
    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn combinations(&self) -> u64 {
        self.size >> self.k
    }

    pub fn clause_at(&self, index: u64) -> Result<Clause> {
        if index >= self.size {
            return Err(Error::Range(format!(
                "clause index {index} outside [0, {})",
                self.size
            )));
        }
        let signs = index & ((1u64 << self.k) - 1);
        let mut rank = index >> self.k;
        let mut vars: SmallVec<[usize; 4]> = smallvec::smallvec![0; self.k];
        let mut upper = self.n;
        for j in (1..=self.k).rev() {
            // Largest v < upper with C(v, j) <= rank.
            let col = &self.table[j];
            let mut lo = j - 1;
            let mut hi = upper - 1;
            while lo < hi {
                let mid = (lo + hi + 1) / 2;
                if col[mid] <= rank {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            vars[j - 1] = lo;
            rank -= col[lo];
            upper = lo;
        }
        let lits = vars
            .iter()
            .enumerate()
            .map(|(i, &v)| Literal::new(v, signs >> i & 1 == 0))
            .collect();
        Ok(Clause::from_sorted_unchecked(lits))
    }

    pub fn index_of(&self, clause: &Clause) -> Result<u64> {
        if clause.width() != self.k {
            return Err(Error::Width {
                expected: self.k,
                found: clause.width(),
            });
        }
        let mut rank = 0u64;
        let mut signs = 0u64;
        for (i, lit) in clause.literals().iter().enumerate() {
            if lit.var() >= self.n {
                return Err(Error::Range(format!(
                    "variable {} exceeds n={}",
                    lit.var() + 1,
                    self.n
                )));
            }
            rank += self.table[i + 1][lit.var()];
            if !lit.is_positive() {
                signs |= 1 << i;
            }
        }
        Ok((rank << self.k) | signs)
    }

    /// Index of the unique clause whose literals are all false under `values`
    /// restricted to `vars` (ascending).
    pub fn sign_mask_falsified_by(&self, values: impl Iterator<Item = bool>) -> u64 {
        // A literal over v is false when it is negated and v is TRUE, or
        // positive and v is FALSE: negate exactly the TRUE variables.
        values
            .enumerate()
            .fold(0u64, |m, (i, b)| m | ((b as u64) << i))
    }

    /// Variables of the combination with colexicographic rank `rank`.
    pub fn combination_at(&self, rank: u64) -> Result<SmallVec<[usize; 4]>> {
        let clause = self.clause_at(rank << self.k)?;
        Ok(clause.vars().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn universe_sizes() {
        assert_eq!(clause_universe_size(4, 3).unwrap(), 32);
        assert_eq!(clause_universe_size(3, 3).unwrap(), 8);
        assert_eq!(clause_universe_size(100, 3).unwrap(), 1_293_600);
        assert!(matches!(
            clause_universe_size(3, 4),
            Err(Error::InvalidParameters(_))
        ));
        assert!(matches!(
            clause_universe_size(1 << 40, 3),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn large_universe_matches_big_integer_arithmetic() {
        // 8 * 100 * 99 * 98 / 6 computed independently in u128.
        let expected = 8u128 * 100 * 99 * 98 / 6;
        assert_eq!(clause_universe_size(100, 3).unwrap() as u128, expected);
        let expected = 16u128 * 2000 * 1999 * 1998 * 1997 / 24;
        assert_eq!(clause_universe_size(2000, 4).unwrap() as u128, expected);
    }

    #[test]
    fn full_round_trip_n4_k3() {
        let u = ClauseUniverse::new(4, 3).unwrap();
        let clauses: HashSet<Clause> = (0..32)
            .map(|i| {
                let c = u.clause_at(i).unwrap();
                assert_eq!(u.index_of(&c).unwrap(), i);
                c
            })
            .collect();
        assert_eq!(clauses.len(), 32);
        assert!(u.clause_at(32).is_err());
    }

    #[test]
    fn n5_k3_has_no_duplicates() {
        let u = ClauseUniverse::new(5, 3).unwrap();
        let set: HashSet<Clause> = (0..80).map(|i| u.clause_at(i).unwrap()).collect();
        assert_eq!(set.len(), 80);
    }

    #[test]
    fn exhaustive_bijection_small_universes() {
        for k in 2..=4 {
            for n in k..=12 {
                let u = ClauseUniverse::new(n, k).unwrap();
                let mut seen = HashSet::new();
                for i in 0..u.size() {
                    let c = u.clause_at(i).unwrap();
                    assert_eq!(c.width(), k);
                    assert!(c.max_var() < n);
                    assert_eq!(u.index_of(&c).unwrap(), i);
                    assert!(seen.insert(c));
                }
            }
        }
    }

    #[test]
    fn index_of_rejects_invalid_clauses() {
        let u = ClauseUniverse::new(5, 3).unwrap();
        assert!(u.index_of(&Clause::from_dimacs(&[1, 2]).unwrap()).is_err());
        assert!(u.index_of(&Clause::from_dimacs(&[1, 2, 6]).unwrap()).is_err());
        // A repeated variable cannot even be turned into a clause.
        assert!(Clause::from_dimacs(&[1, 1, 2]).is_err());
    }

    #[test]
    fn falsified_mask_picks_the_all_false_clause() {
        let u = ClauseUniverse::new(3, 3).unwrap();
        let mask = u.sign_mask_falsified_by([true, false, true].into_iter());
        let c = u.clause_at(mask).unwrap();
        assert_eq!(c.to_dimacs(), vec![-1, 2, -3]);
    }
}
