//! The projective line over `Z/NZ` for `N` prime (or `N = 1`).

use crate::{ModSymError, Result};

#[derive(Clone, Debug)]
pub struct P1List {
    n: i64,
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn inv_mod(a: i64, n: i64) -> Option<i64> {
    let (mut r0, mut r1) = (a.rem_euclid(n), n);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(n))
}

impl P1List {
    pub fn new(level: u64) -> Result<Self> {
        if level != 1 && !is_prime(level) {
            return Err(ModSymError::UnsupportedLevel(level));
        }
        Ok(Self { n: level as i64 })
    }

    pub fn level(&self) -> u64 {
        self.n as u64
    }

    pub fn len(&self) -> usize {
        if self.n == 1 {
            1
        } else {
            self.n as usize + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the point `(c : d)`, or `None` when `(c, d)` is not a point
    /// (both coordinates divisible by `N`).
    pub fn index(&self, c: i64, d: i64) -> Option<usize> {
        let n = self.n;
        if n == 1 {
            return Some(0);
        }
        let c = c.rem_euclid(n);
        let d = d.rem_euclid(n);
        if c == 0 {
            if d == 0 {
                None
            } else {
                Some(n as usize)
            }
        } else {
            let ci = inv_mod(c, n).expect("prime modulus");
            Some(((d * ci) % n) as usize)
        }
    }

    /// Canonical lift `(c, d)` of the point with the given index.
    pub fn point(&self, idx: usize) -> (i64, i64) {
        if self.n == 1 || idx == self.n as usize {
            (0, 1)
        } else {
            (1, idx as i64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_point_round_trips() {
        let p1 = P1List::new(11).unwrap();
        assert_eq!(p1.len(), 12);
        for i in 0..p1.len() {
            let (c, d) = p1.point(i);
            assert_eq!(p1.index(c, d), Some(i));
            assert_eq!(p1.index(3 * c, 3 * d), Some(i));
        }
        assert_eq!(p1.index(11, 22), None);
    }

    #[test]
    fn composite_levels_are_rejected() {
        assert!(P1List::new(12).is_err());
        assert_eq!(P1List::new(1).unwrap().len(), 1);
    }
}
