//! Exact coefficient rings: the integers, the rationals and prime fields.
//!
//! Every ring is a small context value (the prime field needs its modulus at
//! runtime) and elements are plain data manipulated through the context.

use std::fmt;

use dashu_int::ops::{BitTest, UnsignedAbs};
use dashu_int::IBig;
use dashu_ratio::RBig;

pub type Integer = IBig;
pub type Rational = RBig;

pub trait Ring: Clone + Send + Sync + fmt::Debug + 'static {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync + 'static;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_integer(&self, v: &Integer) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem {
        self.from_integer(&IBig::from(v))
    }

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    /// `acc += a * b`
    fn add_mul_assign(&self, acc: &mut Self::Elem, a: &Self::Elem, b: &Self::Elem) {
        *acc = self.add(acc, &self.mul(a, b));
    }

    fn is_unit(&self, a: &Self::Elem) -> bool;
    /// Inverse of a unit, `None` otherwise.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;

    /// Euclidean division `a = q*b + r` with `size(r) < size(b)`.
    fn div_rem(&self, a: &Self::Elem, b: &Self::Elem) -> (Self::Elem, Self::Elem);
    /// Euclidean size used for pivot selection. Zero only for zero.
    fn size(&self, a: &Self::Elem) -> usize;
    /// A unit `u` such that `u*a` is the canonical associate of `a`.
    fn normalizing_unit(&self, a: &Self::Elem) -> Self::Elem;

    fn is_field(&self) -> bool;
    /// Characteristic, 0 for Z and Q.
    fn characteristic(&self) -> u64;
    /// Canonical integer representative, when the element has one.
    fn to_integer(&self, a: &Self::Elem) -> Option<Integer>;
    /// Smallest positive d with d*a integral (fraction fields only).
    fn denominator(&self, _a: &Self::Elem) -> Integer {
        IBig::ONE
    }
    fn render(&self, a: &Self::Elem) -> String;
    fn name(&self) -> String;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Integers;

impl Ring for Integers {
    type Elem = IBig;

    fn zero(&self) -> IBig {
        IBig::ZERO
    }
    fn one(&self) -> IBig {
        IBig::ONE
    }
    fn from_integer(&self, v: &Integer) -> IBig {
        v.clone()
    }
    fn add(&self, a: &IBig, b: &IBig) -> IBig {
        a + b
    }
    fn sub(&self, a: &IBig, b: &IBig) -> IBig {
        a - b
    }
    fn mul(&self, a: &IBig, b: &IBig) -> IBig {
        a * b
    }
    fn neg(&self, a: &IBig) -> IBig {
        -a
    }
    fn is_zero(&self, a: &IBig) -> bool {
        a.is_zero()
    }
    fn add_mul_assign(&self, acc: &mut IBig, a: &IBig, b: &IBig) {
        *acc += a * b;
    }
    fn is_unit(&self, a: &IBig) -> bool {
        a.is_one() || *a == IBig::NEG_ONE
    }
    fn inv(&self, a: &IBig) -> Option<IBig> {
        self.is_unit(a).then(|| a.clone())
    }
    fn div_rem(&self, a: &IBig, b: &IBig) -> (IBig, IBig) {
        // floor-style division keeps |r| < |b|
        let q = a / b;
        let r = a - &q * b;
        (q, r)
    }
    fn size(&self, a: &IBig) -> usize {
        if a.is_zero() {
            0
        } else {
            // magnitude ordering, exact for comparisons between small values
            let mag = a.unsigned_abs();
            match u64::try_from(&mag) {
                Ok(v) => v.min(u64::MAX / 2) as usize,
                Err(_) => usize::MAX / 2 + mag.bit_len(),
            }
        }
    }
    fn normalizing_unit(&self, a: &IBig) -> IBig {
        if a < &IBig::ZERO {
            IBig::NEG_ONE
        } else {
            IBig::ONE
        }
    }
    fn is_field(&self) -> bool {
        false
    }
    fn characteristic(&self) -> u64 {
        0
    }
    fn to_integer(&self, a: &IBig) -> Option<Integer> {
        Some(a.clone())
    }
    fn render(&self, a: &IBig) -> String {
        a.to_string()
    }
    fn name(&self) -> String {
        "Z".into()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Rationals;

impl Ring for Rationals {
    type Elem = RBig;

    fn zero(&self) -> RBig {
        RBig::ZERO
    }
    fn one(&self) -> RBig {
        RBig::ONE
    }
    fn from_integer(&self, v: &Integer) -> RBig {
        RBig::from(v.clone())
    }
    fn add(&self, a: &RBig, b: &RBig) -> RBig {
        a + b
    }
    fn sub(&self, a: &RBig, b: &RBig) -> RBig {
        a - b
    }
    fn mul(&self, a: &RBig, b: &RBig) -> RBig {
        a * b
    }
    fn neg(&self, a: &RBig) -> RBig {
        -a
    }
    fn is_zero(&self, a: &RBig) -> bool {
        a.is_zero()
    }
    fn is_unit(&self, a: &RBig) -> bool {
        !a.is_zero()
    }
    fn inv(&self, a: &RBig) -> Option<RBig> {
        (!a.is_zero()).then(|| RBig::ONE / a)
    }
    fn div_rem(&self, a: &RBig, b: &RBig) -> (RBig, RBig) {
        (a / b, RBig::ZERO)
    }
    fn size(&self, a: &RBig) -> usize {
        if a.is_zero() {
            0
        } else {
            // prefer entries with small height to limit coefficient growth
            a.numerator().unsigned_abs().bit_len() + a.denominator().bit_len()
        }
    }
    fn normalizing_unit(&self, a: &RBig) -> RBig {
        self.inv(a).unwrap_or(RBig::ONE)
    }
    fn is_field(&self) -> bool {
        true
    }
    fn characteristic(&self) -> u64 {
        0
    }
    fn denominator(&self, a: &RBig) -> Integer {
        IBig::from(a.denominator().clone())
    }
    fn to_integer(&self, a: &RBig) -> Option<Integer> {
        a.is_int().then(|| a.numerator().clone())
    }
    fn render(&self, a: &RBig) -> String {
        if a.is_int() {
            a.numerator().to_string()
        } else {
            format!("{}/{}", a.numerator(), a.denominator())
        }
    }
    fn name(&self) -> String {
        "Q".into()
    }
}

/// The field with `p` elements, `p` prime and below 2^31.
#[derive(Clone, Copy, Debug)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u32) -> Self {
        assert!(is_prime(p as u64), "{p} is not prime");
        PrimeField { p: p as u64 }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.p;
            }
            base = base * base % self.p;
            exp >>= 1;
        }
        acc
    }
}

impl Ring for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn from_integer(&self, v: &Integer) -> u64 {
        let p = IBig::from(self.p);
        let r = ((v % &p) + &p) % &p;
        u64::try_from(&r).expect("residue fits in u64")
    }
    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.p
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.p - b) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.p
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.p - a) % self.p
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add_mul_assign(&self, acc: &mut u64, a: &u64, b: &u64) {
        *acc = (*acc + a * b % self.p) % self.p;
    }
    fn is_unit(&self, a: &u64) -> bool {
        *a != 0
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        (*a != 0).then(|| self.pow(*a, self.p - 2))
    }
    fn div_rem(&self, a: &u64, b: &u64) -> (u64, u64) {
        (self.mul(a, &self.inv(b).expect("division by zero")), 0)
    }
    fn size(&self, a: &u64) -> usize {
        usize::from(*a != 0)
    }
    fn normalizing_unit(&self, a: &u64) -> u64 {
        self.inv(a).unwrap_or(1)
    }
    fn is_field(&self) -> bool {
        true
    }
    fn characteristic(&self) -> u64 {
        self.p
    }
    fn to_integer(&self, a: &u64) -> Option<Integer> {
        Some(IBig::from(*a))
    }
    fn render(&self, a: &u64) -> String {
        a.to_string()
    }
    fn name(&self) -> String {
        format!("F{}", self.p)
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn gcd(a: &Integer, b: &Integer) -> Integer {
    let mut a = a.clone();
    let mut b = b.clone();
    if a < IBig::ZERO {
        a = -a;
    }
    if b < IBig::ZERO {
        b = -b;
    }
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

pub fn abs(a: &Integer) -> Integer {
    IBig::from(a.unsigned_abs())
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn determinant(matrix: &[Vec<Integer>]) -> Integer {
    let n = matrix.len();
    if n == 0 {
        return IBig::ONE;
    }
    let mut a: Vec<Vec<Integer>> = matrix.to_vec();
    let mut sign = IBig::ONE;
    let mut prev = IBig::ONE;
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return IBig::ZERO;
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}
