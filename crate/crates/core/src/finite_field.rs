//! Arithmetic in GF(2^L) for 1 <= L <= 16.
//!
//! Elements are stored as `u16` bit patterns whose bit `k` is the
//! coefficient of `x^k`. Addition is XOR. Multiplication is the polynomial
//! product reduced modulo the context's defining polynomial, served from
//! log/antilog tables for `L <= 8` and by interleaved shift-and-reduce above
//! that.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 16;

/// Degrees up to this bound get log/antilog tables.
const TABLE_DEGREE_LIMIT: u32 = 8;

/// Built-in defining polynomial for every degree `1..=16`, as bitmasks
/// including the leading `x^L` term.
const DEFAULT_POLYNOMIALS: [u32; 17] = [
    0, 0b11,     // x + 1
    0b111,    // x^2 + x + 1
    0b1011,   // x^3 + x + 1
    0b1_0011, // x^4 + x + 1
    0x25,     // x^5 + x^2 + 1
    0x43,     // x^6 + x + 1
    0x83,     // x^7 + x + 1
    0x11b,    // x^8 + x^4 + x^3 + x + 1
    0x211,    // x^9 + x^4 + 1
    0x409,    // x^10 + x^3 + 1
    0x805,    // x^11 + x^2 + 1
    0x1053,   // x^12 + x^6 + x^4 + x + 1
    0x201b,   // x^13 + x^4 + x^3 + x + 1
    0x4443,   // x^14 + x^10 + x^6 + x + 1
    0x8003,   // x^15 + x + 1
    0x1100b,  // x^16 + x^12 + x^3 + x + 1
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("extension degree {0} outside supported range 1..={MAX_DEGREE}")]
    DegreeOutOfRange(u32),
    #[error("polynomial {poly:#b} does not have degree {degree}")]
    PolynomialDegree { degree: u32, poly: u32 },
    #[error("polynomial {0:#b} is reducible over GF(2)")]
    Reducible(u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("value {value} is not an element of a field of order {order}")]
    ValueOutOfRange { value: u32, order: u32 },
}

/// An element of GF(2^L). Only meaningful together with the [`GfContext`]
/// that produced it.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(u16);

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    #[inline]
    pub const fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug)]
struct LogTables {
    /// `exp[k] = g^k`, stored twice over so that `log a + log b` never wraps.
    exp: Vec<u16>,
    /// `log[a]` for nonzero `a`; `log[0]` is unused.
    log: Vec<u16>,
}

/// A concrete field GF(2^L) fixed by its defining polynomial.
///
/// Cloning is cheap; the lookup tables are shared.
#[derive(Clone)]
pub struct GfContext {
    degree: u32,
    poly: u32,
    tables: Option<Arc<LogTables>>,
}

impl fmt::Debug for GfContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GfContext").field("degree", &self.degree).field("poly", &format_args!("{:#x}", self.poly)).finish()
    }
}

impl PartialEq for GfContext {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.poly == other.poly
    }
}

impl Eq for GfContext {}

impl GfContext {
    /// Field of degree `degree` with the built-in defining polynomial.
    pub fn new(degree: u32) -> Result<Self, FieldError> {
        let poly = default_polynomial(degree)?;
        Self::with_polynomial(degree, poly)
    }

    /// Field of degree `degree` defined by `poly`, which must be an
    /// irreducible polynomial of exactly that degree.
    pub fn with_polynomial(degree: u32, poly: u32) -> Result<Self, FieldError> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(FieldError::DegreeOutOfRange(degree));
        }
        if poly_degree(poly) != Some(degree) {
            return Err(FieldError::PolynomialDegree { degree, poly });
        }
        if !is_irreducible(poly) {
            return Err(FieldError::Reducible(poly));
        }
        let tables = (degree <= TABLE_DEGREE_LIMIT).then(|| Arc::new(build_tables(degree, poly)));
        Ok(Self { degree, poly, tables })
    }

    /// Extension degree `L`.
    #[inline]
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Defining polynomial as a bitmask with bit `L` set.
    #[inline]
    pub fn polynomial(&self) -> u32 {
        self.poly
    }

    /// Field order `q = 2^L`.
    #[inline]
    pub fn order(&self) -> u32 {
        1 << self.degree
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, FieldError> {
        if value < self.order() {
            Ok(FieldElement(value as u16))
        } else {
            Err(FieldError::ValueOutOfRange { value, order: self.order() })
        }
    }

    /// All `q` elements in increasing value order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order()).map(|v| FieldElement(v as u16))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        match &self.tables {
            Some(t) => {
                let idx = t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize;
                FieldElement(t.exp[idx])
            }
            None => FieldElement(shift_reduce_mul(a.0 as u32, b.0 as u32, self.poly, self.degree) as u16),
        }
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        Ok(match &self.tables {
            Some(t) => {
                let group = (self.order() - 1) as usize;
                FieldElement(t.exp[group - t.log[a.0 as usize] as usize])
            }
            // a^(q-2) = a^-1 in the multiplicative group of order q-1.
            None => self.pow(a, u64::from(self.order()) - 2),
        })
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, mut exp: u64) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }
}

/// The built-in defining polynomial for `degree`.
pub fn default_polynomial(degree: u32) -> Result<u32, FieldError> {
    DEFAULT_POLYNOMIALS.get(degree as usize).copied().filter(|&p| p != 0).ok_or(FieldError::DegreeOutOfRange(degree))
}

/// Smallest extension degree whose field has at least `size` elements.
pub fn min_degree_for(size: usize) -> u32 {
    let mut degree = 1;
    while (1usize << degree) < size {
        degree += 1;
    }
    degree
}

fn poly_degree(p: u32) -> Option<u32> {
    (p != 0).then(|| 31 - p.leading_zeros())
}

/// Remainder of `a` divided by `b` in GF(2)[x].
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b).expect("division by the zero polynomial");
    while let Some(da) = poly_degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Trial division by every polynomial of degree `1..=deg/2`.
fn is_irreducible(poly: u32) -> bool {
    let Some(deg) = poly_degree(poly) else {
        return false;
    };
    (1..=deg / 2).all(|d| ((1u32 << d)..(1u32 << (d + 1))).all(|div| poly_rem(poly, div) != 0))
}

/// Multiplies with reduction folded into each shift step.
#[inline]
fn shift_reduce_mul(mut a: u32, mut b: u32, poly: u32, degree: u32) -> u32 {
    let top = 1u32 << degree;
    let mut acc = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= poly;
        }
    }
    acc
}

fn prime_factors(mut n: u32) -> Vec<u32> {
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

fn build_tables(degree: u32, poly: u32) -> LogTables {
    let q = 1u32 << degree;
    let group = q - 1;
    let slow_pow = |g: u32, mut e: u32| {
        let (mut base, mut acc) = (g, 1u32);
        while e > 0 {
            if e & 1 == 1 {
                acc = shift_reduce_mul(acc, base, poly, degree);
            }
            base = shift_reduce_mul(base, base, poly, degree);
            e >>= 1;
        }
        acc
    };
    // x itself need not be primitive (e.g. the AES polynomial), so search
    // for the smallest generator of the multiplicative group.
    let factors = prime_factors(group);
    let generator =
        (1..q).find(|&g| factors.iter().all(|&p| slow_pow(g, group / p) != 1)).expect("multiplicative group of a finite field is cyclic");

    let mut exp = vec![0u16; 2 * group as usize];
    let mut log = vec![0u16; q as usize];
    let mut x = 1u32;
    for k in 0..group {
        exp[k as usize] = x as u16;
        exp[(k + group) as usize] = x as u16;
        log[x as usize] = k as u16;
        x = shift_reduce_mul(x, generator, poly, degree);
    }
    LogTables { exp, log }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Full carry-less product followed by long division; independent of
    /// both multiplication paths in the context.
    fn oracle_mul(a: u32, b: u32, poly: u32) -> u32 {
        let mut prod = 0u64;
        for k in 0..16 {
            if (b >> k) & 1 == 1 {
                prod ^= u64::from(a) << k;
            }
        }
        let pd = 63 - u64::from(poly).leading_zeros();
        for bit in (pd..64).rev() {
            if (prod >> bit) & 1 == 1 {
                prod ^= u64::from(poly) << (bit - pd);
            }
        }
        prod as u32
    }

    fn gf16() -> GfContext {
        GfContext::with_polynomial(4, 0b10011).unwrap()
    }

    fn el(ctx: &GfContext, v: u32) -> FieldElement {
        ctx.element(v).unwrap()
    }

    #[test]
    fn add_is_xor() {
        let ctx = gf16();
        assert_eq!(ctx.add(el(&ctx, 0x5), el(&ctx, 0x3)), el(&ctx, 0x6));
        for a in ctx.elements() {
            assert_eq!(ctx.add(a, a), FieldElement::ZERO);
            assert_eq!(ctx.add(a, FieldElement::ZERO), a);
        }
    }

    #[test]
    fn mul_known_values_gf16() {
        let ctx = gf16();
        assert_eq!(oracle_mul(0x2, 0x8, 0b10011), 0x3);
        assert_eq!(ctx.mul(el(&ctx, 0x2), el(&ctx, 0x8)), el(&ctx, 0x3));
        for a in ctx.elements() {
            assert_eq!(ctx.mul(a, FieldElement::ONE), a);
            assert_eq!(ctx.mul(a, FieldElement::ZERO), FieldElement::ZERO);
        }
    }

    #[test]
    fn inverse_known_values_gf16() {
        let ctx = gf16();
        let two = el(&ctx, 0x2);
        let found: Vec<_> = ctx.elements().filter(|&b| ctx.mul(two, b) == FieldElement::ONE).collect();
        assert_eq!(found, vec![el(&ctx, 0x9)]);
        assert_eq!(ctx.inv(two).unwrap(), el(&ctx, 0x9));
        assert_eq!(ctx.inv(FieldElement::ONE).unwrap(), FieldElement::ONE);
        assert_eq!(ctx.inv(FieldElement::ZERO), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn mul_matches_oracle_exhaustively_small_fields() {
        for degree in 1..=4 {
            let ctx = GfContext::new(degree).unwrap();
            for a in 0..ctx.order() {
                for b in 0..ctx.order() {
                    assert_eq!(
                        u32::from(ctx.mul(el(&ctx, a), el(&ctx, b)).value()),
                        oracle_mul(a, b, ctx.polynomial()),
                        "L={degree} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn table_free_path_matches_oracle() {
        for degree in [9, 12, 16] {
            let ctx = GfContext::new(degree).unwrap();
            assert!(ctx.tables.is_none());
            let q = ctx.order();
            for i in 0..2000u32 {
                let a = (i.wrapping_mul(2_654_435_761)) % q;
                let b = (i.wrapping_mul(40_503).wrapping_add(7)) % q;
                assert_eq!(u32::from(ctx.mul(el(&ctx, a), el(&ctx, b)).value()), oracle_mul(a, b, ctx.polynomial()));
            }
        }
    }

    #[test]
    fn fermat_holds_up_to_degree_8() {
        for degree in 1..=8 {
            let ctx = GfContext::new(degree).unwrap();
            let group = u64::from(ctx.order() - 1);
            for a in ctx.elements().skip(1) {
                assert_eq!(ctx.pow(a, group), FieldElement::ONE, "L={degree} a={a:?}");
                assert_eq!(ctx.mul(a, ctx.inv(a).unwrap()), FieldElement::ONE);
            }
        }
    }

    #[test]
    fn default_polynomials_are_irreducible() {
        for degree in 1..=MAX_DEGREE {
            assert!(GfContext::new(degree).is_ok(), "L={degree}");
        }
    }

    #[test]
    fn aes_polynomial_gets_non_x_generator() {
        // x has order 51 modulo the AES polynomial, so the table builder
        // must pick another generator.
        let ctx = GfContext::new(8).unwrap();
        assert_eq!(ctx.polynomial(), 0x11b);
        assert_eq!(ctx.mul(el(&ctx, 0x57), el(&ctx, 0x83)), el(&ctx, 0xc1));
        assert_eq!(ctx.inv(el(&ctx, 0x53)).unwrap(), el(&ctx, 0xca));
    }

    #[test]
    fn rejects_bad_construction() {
        assert_eq!(GfContext::new(0).unwrap_err(), FieldError::DegreeOutOfRange(0));
        assert_eq!(GfContext::new(17).unwrap_err(), FieldError::DegreeOutOfRange(17));
        assert!(matches!(GfContext::with_polynomial(4, 0b1011), Err(FieldError::PolynomialDegree { .. })));
        // x^4 + 1 = (x + 1)^4
        assert_eq!(GfContext::with_polynomial(4, 0b10001).unwrap_err(), FieldError::Reducible(0b10001));
        assert!(GfContext::with_polynomial(4, 0b11111).is_ok()); // irreducible, not primitive
        assert!(gf16().element(16).is_err());
    }

    #[test]
    fn min_degree() {
        assert_eq!(min_degree_for(1), 1);
        assert_eq!(min_degree_for(2), 1);
        assert_eq!(min_degree_for(3), 2);
        assert_eq!(min_degree_for(16), 4);
        assert_eq!(min_degree_for(17), 5);
    }
}
