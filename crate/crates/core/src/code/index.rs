//! s-ary coordinate indexing within a plane.
//!
//! An index `a` in `0..s^n` is read as `n` base-`s` digits, one per node.
//! Digit position 0 (node 1) is the least-significant digit. All positions
//! here are 0-based.

use crate::error::{Error, Result};

/// Base-`s` expansion of `a` over `n` digits, least-significant first.
pub fn digits(a: usize, s: usize, n: usize) -> Result<Vec<usize>> {
    let radix = Radix::new(s, n)?;
    radix.check(a)?;
    Ok((0..n).map(|i| radix.digit(a, i)).collect())
}

/// Rebuilds the index from its digits.
pub fn from_digits(digits: &[usize], s: usize) -> Result<usize> {
    let mut a = 0usize;
    for &d in digits.iter().rev() {
        if d >= s {
            return Err(Error::OutOfRange { value: d, limit: s });
        }
        a = a * s + d;
    }
    Ok(a)
}

/// `a(i, u)`: `a` with digit `i` overwritten by `u`.
pub fn replace_digit(a: usize, i: usize, u: usize, s: usize, n: usize) -> Result<usize> {
    let radix = Radix::new(s, n)?;
    radix.check(a)?;
    if i >= n {
        return Err(Error::OutOfRange { value: i, limit: n });
    }
    if u >= s {
        return Err(Error::OutOfRange { value: u, limit: s });
    }
    Ok(radix.with_digit(a, i, u))
}

/// Precomputed powers of `s` for fast digit access in the hot loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Radix {
    s: usize,
    n: usize,
    pow: Vec<usize>,
}

impl Radix {
    pub fn new(s: usize, n: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidParams(
                "digit base s must be at least 1".into(),
            ));
        }
        let mut pow = Vec::with_capacity(n + 1);
        let mut p = 1usize;
        pow.push(p);
        for _ in 0..n {
            p = p
                .checked_mul(s)
                .ok_or_else(|| Error::InvalidParams(format!("{s}^{n} overflows the index type")))?;
            pow.push(p);
        }
        Ok(Radix { s, n, pow })
    }

    pub fn base(&self) -> usize {
        self.s
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of indices, `s^n`.
    pub fn span(&self) -> usize {
        self.pow[self.n]
    }

    fn check(&self, a: usize) -> Result<()> {
        if a >= self.span() {
            return Err(Error::OutOfRange {
                value: a,
                limit: self.span(),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn digit(&self, a: usize, i: usize) -> usize {
        (a / self.pow[i]) % self.s
    }

    #[inline]
    pub fn with_digit(&self, a: usize, i: usize, u: usize) -> usize {
        a - self.digit(a, i) * self.pow[i] + u * self.pow[i]
    }

    /// `a(i, a_i ⊕ j)` where `⊕` is addition modulo `s`.
    #[inline]
    pub fn shifted(&self, a: usize, i: usize, j: usize) -> usize {
        self.with_digit(a, i, (self.digit(a, i) + j) % self.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn digit_examples() {
        assert_eq!(digits(0, 3, 4).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(digits(5, 2, 4).unwrap(), vec![1, 0, 1, 0]);
        assert_eq!(digits(7, 3, 3).unwrap(), vec![1, 2, 0]);
        assert!(digits(16, 2, 4).is_err());
    }

    #[test]
    fn replace_examples() {
        // Position 2 in 1-based terms is index 1 here.
        assert_eq!(replace_digit(5, 1, 1, 2, 4).unwrap(), 7);
        assert_eq!(replace_digit(5, 0, 1, 2, 4).unwrap(), 5);
        assert!(replace_digit(5, 4, 0, 2, 4).is_err());
        assert!(replace_digit(5, 0, 2, 2, 4).is_err());
        assert!(replace_digit(16, 0, 0, 2, 4).is_err());
    }

    #[test]
    fn shifted_is_a_bijection() {
        let r = Radix::new(3, 4).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let mut seen = vec![false; r.span()];
                for a in 0..r.span() {
                    let b = r.shifted(a, i, j);
                    assert!(!seen[b]);
                    seen[b] = true;
                }
            }
        }
    }

    #[test]
    fn unary_base() {
        let r = Radix::new(1, 5).unwrap();
        assert_eq!(r.span(), 1);
        assert_eq!(r.shifted(0, 3, 0), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn digits_round_trip(s in 2usize..6, n in 1usize..7, seed in any::<u64>(), i in 0usize..7, u in 0usize..6, v in 0usize..6) {
            let span = s.pow(n as u32);
            let a = (seed % span as u64) as usize;
            let ds = digits(a, s, n).unwrap();
            prop_assert!(ds.iter().all(|&x| x < s));
            prop_assert_eq!(from_digits(&ds, s).unwrap(), a);

            let i = i % n;
            let (u, v) = (u % s, v % s);
            prop_assert_eq!(replace_digit(a, i, ds[i], s, n).unwrap(), a);
            let once = replace_digit(a, i, u, s, n).unwrap();
            prop_assert_eq!(digits(once, s, n).unwrap()[i], u);
            prop_assert_eq!(
                replace_digit(once, i, v, s, n).unwrap(),
                replace_digit(a, i, v, s, n).unwrap()
            );
        }
    }
}
