//! Prime-field arithmetic.
//!
//! Moduli are restricted to primes below 2^31 so that every product of two
//! residues fits in a `u64`. The same field doubles as the verifier's
//! randomness universe, hence the enumeration and sampling helpers here.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest admissible modulus (exclusive).
pub const MODULUS_LIMIT: u64 = 1 << 31;

/// The generator behind every seeded experiment: ChaCha8 seeded from a `u64`.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A prime modulus `p` with `2 <= p < 2^31`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(p: u64) -> Result<Self> {
        if !(2..MODULUS_LIMIT).contains(&p) {
            return Err(Error::ModulusOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Modulus(p))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    /// Field order as a `usize`, for sizing enumerations.
    #[inline]
    pub fn order(self) -> usize {
        self.0 as usize
    }

    pub fn zero(self) -> Fe {
        Fe { value: 0, modulus: self }
    }

    pub fn one(self) -> Fe {
        Fe { value: 1, modulus: self }
    }

    /// Reduces an arbitrary unsigned integer into the field.
    pub fn elem(self, value: u64) -> Fe {
        Fe { value: value % self.0, modulus: self }
    }

    /// Reduces a signed integer into the field (`-1` maps to `p - 1`).
    pub fn elem_signed(self, value: i64) -> Fe {
        let v = value.rem_euclid(self.0 as i64) as u64;
        Fe { value: v, modulus: self }
    }

    /// All `p` elements in ascending residue order.
    pub fn elements(self) -> impl ExactSizeIterator<Item = Fe> + Clone {
        (0..self.0 as u32).map(move |value| Fe { value: value as u64, modulus: self })
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Modulus {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.0)
    }
}

/// Deterministic trial division up to the square root.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A canonical residue in `[0, p)` tagged with its modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fe {
    value: u64,
    modulus: Modulus,
}

impl Fe {
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_modulus(self, other: Fe) -> Result<()> {
        if self.modulus == other.modulus {
            Ok(())
        } else {
            Err(Error::ModulusMismatch(self.modulus.0, other.modulus.0))
        }
    }

    pub fn checked_add(self, other: Fe) -> Result<Fe> {
        self.same_modulus(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn checked_sub(self, other: Fe) -> Result<Fe> {
        self.same_modulus(other)?;
        Ok(self.add_unchecked(other.neg_unchecked()))
    }

    pub fn checked_mul(self, other: Fe) -> Result<Fe> {
        self.same_modulus(other)?;
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    fn add_unchecked(self, other: Fe) -> Fe {
        let p = self.modulus.0;
        let s = self.value + other.value;
        Fe { value: if s >= p { s - p } else { s }, modulus: self.modulus }
    }

    #[inline]
    fn neg_unchecked(self) -> Fe {
        let p = self.modulus.0;
        Fe { value: if self.value == 0 { 0 } else { p - self.value }, modulus: self.modulus }
    }

    #[inline]
    fn mul_unchecked(self, other: Fe) -> Fe {
        Fe { value: self.value * other.value % self.modulus.0, modulus: self.modulus }
    }

    pub fn pow(self, mut exp: u64) -> Fe {
        let mut base = self;
        let mut acc = self.modulus.one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_unchecked(base);
            }
            base = base.mul_unchecked(base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(self) -> Result<Fe> {
        if self.value == 0 {
            return Err(Error::NoInverse);
        }
        let p = self.modulus.0 as i64;
        let (mut old_r, mut r) = (self.value as i64, p);
        let (mut old_s, mut s) = (1i64, 0i64);
        while r != 0 {
            let q = old_r / r;
            (old_r, r) = (r, old_r - q * r);
            (old_s, s) = (s, old_s - q * s);
        }
        debug_assert_eq!(old_r, 1);
        Ok(self.modulus.elem_signed(old_s))
    }
}

#[inline]
fn assert_same(a: Fe, b: Fe) {
    assert!(a.modulus == b.modulus, "incompatible moduli: {} vs {}", a.modulus, b.modulus);
}

// Operator impls panic on mismatched moduli; the `checked_*` methods report it.
impl Add for Fe {
    type Output = Fe;
    fn add(self, rhs: Fe) -> Fe {
        assert_same(self, rhs);
        self.add_unchecked(rhs)
    }
}

impl Sub for Fe {
    type Output = Fe;
    fn sub(self, rhs: Fe) -> Fe {
        assert_same(self, rhs);
        self.add_unchecked(rhs.neg_unchecked())
    }
}

impl Mul for Fe {
    type Output = Fe;
    fn mul(self, rhs: Fe) -> Fe {
        assert_same(self, rhs);
        self.mul_unchecked(rhs)
    }
}

impl Neg for Fe {
    type Output = Fe;
    fn neg(self) -> Fe {
        self.neg_unchecked()
    }
}

impl AddAssign for Fe {
    fn add_assign(&mut self, rhs: Fe) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fe {
    fn sub_assign(&mut self, rhs: Fe) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fe {
    fn mul_assign(&mut self, rhs: Fe) {
        *self = *self * rhs;
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus.0)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for Fe {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.value)
    }
}

/// Every element of the field, ascending.
pub fn enumerate_field(m: Modulus) -> Vec<Fe> {
    m.elements().collect()
}

/// Draws a uniform element; the generator is advanced in place.
pub fn sample_uniform<R: Rng + ?Sized>(m: Modulus, rng: &mut R) -> Fe {
    Fe { value: rng.gen_range(0..m.0), modulus: m }
}
