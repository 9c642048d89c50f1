//! Exact arithmetic over prime fields, p-adic digit combinatorics, and
//! graded-lexicographic multi-indices.
//!
//! Everything downstream (series, distribution algebras, rewriting) reduces
//! to three ingredients implemented here:
//!
//! * `F_p` scalar arithmetic with exact inverses (Fermat powering);
//! * p-adic digit machinery: digit expansions, the digitwise factorial
//!   `n!_p = prod_i (n_i)!` (always a unit mod p), and binomial
//!   coefficients mod p via the Lucas factorization
//!   `C(n,k) = prod_i C(n_i, k_i) mod p`;
//! * multi-indices with the graded-lexicographic order: higher total degree
//!   wins, ties are broken at the leftmost coordinate where the exponents
//!   differ, larger exponent first.

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A verified prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Prime(u32);

impl Prime {
    /// Checks primality by trial division. The moduli in play are tiny, so
    /// nothing cleverer is warranted.
    pub fn new(p: u32) -> Result<Prime> {
        if p < 2 {
            return Err(Error::NotPrime(u64::from(p)));
        }
        let mut d = 2u32;
        while d.saturating_mul(d) <= p {
            if p % d == 0 {
                return Err(Error::NotPrime(u64::from(p)));
            }
            d += 1;
        }
        Ok(Prime(p))
    }

    #[must_use]
    pub fn get(self) -> u32 {
        self.0
    }

    /// Reduces an unsigned value.
    #[must_use]
    pub fn elt(self, n: u64) -> Fp {
        Fp { value: (n % u64::from(self.0)) as u32, p: self }
    }

    /// Reduces a signed value into `[0, p)`.
    #[must_use]
    pub fn elt_signed(self, n: i64) -> Fp {
        let p = i64::from(self.0);
        Fp { value: (n.rem_euclid(p)) as u32, p: self }
    }

    #[must_use]
    pub fn zero(self) -> Fp {
        self.elt(0)
    }

    #[must_use]
    pub fn one(self) -> Fp {
        self.elt(1)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A residue mod p. Arithmetic between elements of different fields is a
/// programming error and panics; public entry points that combine
/// containers check modulus equality up front and return typed errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u32,
    p: Prime,
}

impl Fp {
    #[must_use]
    pub fn value(self) -> u32 {
        self.value
    }

    #[must_use]
    pub fn modulus(self) -> Prime {
        self.p
    }

    #[must_use]
    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    #[must_use]
    pub fn pow(self, mut e: u64) -> Fp {
        let mut base = self;
        let mut acc = self.p.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem. Panics on zero.
    #[must_use]
    pub fn inverse(self) -> Fp {
        assert!(!self.is_zero(), "inverse of zero in F_{}", self.p);
        self.pow(u64::from(self.p.get()) - 2)
    }
}

impl std::ops::Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        assert_eq!(self.p, rhs.p, "mixed moduli {} vs {}", self.p, rhs.p);
        self.p.elt(u64::from(self.value) + u64::from(rhs.value))
    }
}

impl std::ops::Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        assert_eq!(self.p, rhs.p, "mixed moduli {} vs {}", self.p, rhs.p);
        self.p.elt(u64::from(self.value) + u64::from(self.p.get()) - u64::from(rhs.value))
    }
}

impl std::ops::Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        assert_eq!(self.p, rhs.p, "mixed moduli {} vs {}", self.p, rhs.p);
        self.p.elt(u64::from(self.value) * u64::from(rhs.value))
    }
}

impl std::ops::Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        self.p.elt(u64::from(self.p.get()) - u64::from(self.value))
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Little-endian base-p digits of `n`. Zero has an empty expansion.
#[must_use]
pub fn padic_digits(mut n: u64, p: Prime) -> SmallVec<[u32; 8]> {
    let base = u64::from(p.get());
    let mut digits = SmallVec::new();
    while n > 0 {
        digits.push((n % base) as u32);
        n /= base;
    }
    digits
}

/// The digitwise factorial `n!_p = prod_i (n_i)! mod p` over the base-p
/// digits `n_i` of `n`. Every digit is below p, so every factor is a unit.
#[must_use]
pub fn padic_factorial(n: u64, p: Prime) -> Fp {
    let mut acc = p.one();
    for d in padic_digits(n, p) {
        for k in 2..=d {
            acc = acc * p.elt(u64::from(k));
        }
    }
    acc
}

/// `C(n, k) mod p` by Lucas: the product of digitwise binomials.
#[must_use]
pub fn binom_mod_p(n: u64, k: u64, p: Prime) -> Fp {
    if k > n {
        return p.zero();
    }
    let nd = padic_digits(n, p);
    let kd = padic_digits(k, p);
    let mut acc = p.one();
    for i in 0..nd.len().max(kd.len()) {
        let ni = u64::from(*nd.get(i).unwrap_or(&0));
        let ki = u64::from(*kd.get(i).unwrap_or(&0));
        if ki > ni {
            return p.zero();
        }
        // Digitwise C(ni, ki) with ni < p: numerator and denominator are
        // products of units.
        let mut num = p.one();
        let mut den = p.one();
        for j in 0..ki {
            num = num * p.elt(ni - j);
            den = den * p.elt(ki - j);
        }
        acc = acc * num * den.inverse();
    }
    acc
}

/// An exponent vector of fixed length. The length is the number of variable
/// slots of whatever ring the index lives in; all indices of one ring share
/// it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub SmallVec<[u32; 8]>);

impl MultiIndex {
    #[must_use]
    pub fn zero(len: usize) -> MultiIndex {
        MultiIndex(smallvec::smallvec![0; len])
    }

    /// The standard basis index `e_slot` scaled by `exp`.
    #[must_use]
    pub fn single(len: usize, slot: usize, exp: u32) -> MultiIndex {
        let mut v: SmallVec<[u32; 8]> = smallvec::smallvec![0; len];
        v[slot] = exp;
        MultiIndex(v)
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[must_use]
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| u64::from(e)).sum()
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    #[must_use]
    pub fn get(&self, slot: usize) -> u32 {
        self.0[slot]
    }

    #[must_use]
    pub fn add(&self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), rhs.len());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise subtraction; `None` if any component would go
    /// negative.
    #[must_use]
    pub fn checked_sub(&self, rhs: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.len(), rhs.len());
        let mut out: SmallVec<[u32; 8]> = SmallVec::with_capacity(self.len());
        for (a, b) in self.0.iter().zip(&rhs.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    /// True when every component is bounded by the matching component of
    /// `bounds` (used for level-box membership).
    #[must_use]
    pub fn within(&self, bound: u32) -> bool {
        self.0.iter().all(|&e| e <= bound)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }
}

impl Ord for MultiIndex {
    /// Graded-lexicographic: total degree first, then the leftmost
    /// coordinate where the exponents differ decides (larger exponent is
    /// larger index). With two variables this sorts `x^2 > x y > y^2`
    /// within degree 2.
    fn cmp(&self, other: &MultiIndex) -> Ordering {
        debug_assert_eq!(self.len(), other.len(), "comparing indices of different arity");
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.iter().cmp(other.0.iter()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &MultiIndex) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: u32) -> Prime {
        Prime::new(v).unwrap()
    }

    #[test]
    fn primality() {
        for good in [2u32, 3, 5, 7, 11, 101] {
            assert!(Prime::new(good).is_ok());
        }
        for bad in [0u32, 1, 4, 6, 9, 100] {
            assert!(matches!(Prime::new(bad), Err(Error::NotPrime(_))));
        }
    }

    #[test]
    fn field_ops() {
        let f = p(7);
        let a = f.elt(5);
        let b = f.elt(4);
        assert_eq!((a + b).value(), 2);
        assert_eq!((a - b).value(), 1);
        assert_eq!((a * b).value(), 6);
        assert_eq!((-a).value(), 2);
        assert_eq!(a.inverse().value(), 3); // 5 * 3 = 15 = 1 mod 7
        assert_eq!(f.elt_signed(-3).value(), 4);
        for x in 1..7u64 {
            let e = f.elt(x);
            assert_eq!((e * e.inverse()).value(), 1);
        }
    }

    #[test]
    fn digits_and_digit_factorial() {
        let three = p(3);
        assert_eq!(padic_digits(7, three).as_slice(), &[1, 2]);
        assert_eq!(padic_digits(0, three).len(), 0);
        // 7 = (1,2) base 3, so 7!_3 = 1! * 2! = 2.
        assert_eq!(padic_factorial(7, three).value(), 2);
        // 4 = (0,2) base 2: 4!_2 = 0!... digits of 4 base 2 are (0,0,1).
        assert_eq!(padic_factorial(4, p(2)).value(), 1);
        // 8 = (3,1) base 5: 3! * 1! = 6 = 1 mod 5.
        assert_eq!(padic_factorial(8, p(5)).value(), 1);
    }

    /// Lucas binomials against a Pascal triangle built with plain integer
    /// addition and reduced afterwards.
    #[test]
    fn binomials_match_pascal() {
        for &q in &[2u32, 3, 5, 7] {
            let pr = p(q);
            let n_max = 40usize;
            let mut row: Vec<u64> = vec![1];
            for n in 0..=n_max {
                for (k, &c) in row.iter().enumerate() {
                    let expect = c % u64::from(q);
                    assert_eq!(
                        binom_mod_p(n as u64, k as u64, pr).value(),
                        expect as u32,
                        "C({n},{k}) mod {q}"
                    );
                }
                let mut next = vec![1u64; n + 2];
                for k in 1..=n {
                    // Reduce as we go so the table never overflows.
                    next[k] = (row[k - 1] + row[k]) % (u64::from(q) * 1_000_000_007);
                }
                row = next;
            }
        }
    }

    #[test]
    fn binomials_out_of_range() {
        assert!(binom_mod_p(3, 5, p(3)).is_zero());
        assert_eq!(binom_mod_p(3, 0, p(3)).value(), 1);
    }

    #[test]
    fn graded_lex_order() {
        let xx = MultiIndex(smallvec::smallvec![2, 0]);
        let xy = MultiIndex(smallvec::smallvec![1, 1]);
        let yy = MultiIndex(smallvec::smallvec![0, 2]);
        let y = MultiIndex(smallvec::smallvec![0, 1]);
        assert!(xx > xy && xy > yy, "degree ties break at the leftmost coordinate");
        assert!(yy > y, "higher degree dominates");
        let x2y = MultiIndex(smallvec::smallvec![2, 1]);
        assert!(x2y > xx);
    }

    #[test]
    fn index_arithmetic() {
        let a = MultiIndex(smallvec::smallvec![2, 1]);
        let b = MultiIndex(smallvec::smallvec![1, 1]);
        assert_eq!(a.add(&b).0.as_slice(), &[3, 2]);
        assert_eq!(a.checked_sub(&b).unwrap().0.as_slice(), &[1, 0]);
        assert!(b.checked_sub(&a).is_none());
        assert_eq!(a.degree(), 3);
        assert!(a.within(2));
        assert!(!a.within(1));
    }
}
