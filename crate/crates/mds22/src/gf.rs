//! Exact arithmetic in small finite fields GF(q).
//!
//! Supports prime fields GF(p) and binary extensions GF(2^m) up to
//! q = 2^16. Binary fields multiply through log/antilog tables built once
//! per field; prime fields use plain modular arithmetic. Every field
//! carries a verified primitive element.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Shared handle to an immutable field description.
pub type Field = Arc<FieldSpec>;

pub const MAX_FIELD_ORDER: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("modulus {0:#x} is reducible over GF(2)")]
    ReducibleModulus(u32),
    #[error("modulus {modulus:#x} does not have degree {expected}")]
    WrongModulusDegree { modulus: u32, expected: u32 },
    #[error("no primitive element found (internal error)")]
    NoGeneratorFound,
    #[error("division by zero")]
    DivisionByZero,
    #[error("field order {0} outside supported range 2..=65536")]
    UnsupportedOrder(u64),
    #[error("bad field descriptor `{0}` (expected gf:p=<prime>, gf:2^<m> or gf:2^<m>/0x<poly>)")]
    BadDescriptor(String),
}

/// What kind of field, with enough data to rebuild it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Prime { p: u32 },
    Binary { m: u32, modulus: u32 },
}

/// One field element, stored as its canonical integer in [0, q).
///
/// For prime fields this is the residue; for binary fields the polynomial
/// bit pattern. Elements carry no field pointer; all arithmetic goes
/// through the owning [`FieldSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElem(pub u16);

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A concrete finite field with a designated primitive element.
///
/// Immutable after construction; safe to share across threads.
pub struct FieldSpec {
    kind: FieldKind,
    order: u32,
    generator: FieldElem,
    // Binary fields only: exp has 2(q-1) entries so exp[log a + log b]
    // needs no reduction; log[0] is unused.
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldSpec({})", self.descriptor())
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}
impl Eq for FieldSpec {}

/// Default irreducible modulus per extension degree m (primitive
/// polynomials; m = 8 is the classical Reed-Solomon polynomial 0x11d).
pub fn default_modulus(m: u32) -> Option<u32> {
    Some(match m {
        1 => 0x3,
        2 => 0x7,
        3 => 0xb,
        4 => 0x13,
        5 => 0x25,
        6 => 0x43,
        7 => 0x89,
        8 => 0x11d,
        9 => 0x211,
        10 => 0x409,
        11 => 0x805,
        12 => 0x1053,
        13 => 0x201b,
        14 => 0x4443,
        15 => 0x8003,
        16 => 0x1100b,
        _ => return None,
    })
}

impl FieldSpec {
    /// GF(p) for prime p.
    pub fn prime(p: u32) -> Result<Field, GfError> {
        if p < 2 || p as u64 > MAX_FIELD_ORDER {
            return Err(GfError::UnsupportedOrder(p as u64));
        }
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        let mut spec = FieldSpec {
            kind: FieldKind::Prime { p },
            order: p,
            generator: FieldElem(0),
            exp: Vec::new(),
            log: Vec::new(),
        };
        spec.generator = spec.find_generator()?;
        Ok(Arc::new(spec))
    }

    /// GF(2^m) with the given irreducible modulus.
    pub fn binary(m: u32, modulus: u32) -> Result<Field, GfError> {
        if !(1..=16).contains(&m) {
            return Err(GfError::UnsupportedOrder(1u64 << m.min(63)));
        }
        if poly_degree(modulus) != m {
            return Err(GfError::WrongModulusDegree { modulus, expected: m });
        }
        if !poly_irreducible(modulus, m) {
            return Err(GfError::ReducibleModulus(modulus));
        }
        let q = 1u32 << m;
        let mut spec = FieldSpec {
            kind: FieldKind::Binary { m, modulus },
            order: q,
            generator: FieldElem(0),
            exp: Vec::new(),
            log: Vec::new(),
        };
        spec.generator = spec.find_generator()?;
        spec.build_tables();
        Ok(Arc::new(spec))
    }

    /// GF(2^m) with the default modulus for m.
    pub fn binary_default(m: u32) -> Result<Field, GfError> {
        let modulus = default_modulus(m).ok_or(GfError::UnsupportedOrder(1u64 << m.min(63)))?;
        Self::binary(m, modulus)
    }

    /// Parses `gf:p=<prime>`, `gf:2^<m>` or `gf:2^<m>/0x<poly>`.
    pub fn parse(desc: &str) -> Result<Field, GfError> {
        let bad = || GfError::BadDescriptor(desc.to_string());
        let rest = desc.strip_prefix("gf:").ok_or_else(bad)?;
        if let Some(p) = rest.strip_prefix("p=") {
            let p: u32 = p.parse().map_err(|_| bad())?;
            return Self::prime(p);
        }
        if let Some(rest) = rest.strip_prefix("2^") {
            let (m, modulus) = match rest.split_once('/') {
                None => (rest, None),
                Some((m, poly)) => {
                    let poly = poly.strip_prefix("0x").ok_or_else(bad)?;
                    (m, Some(u32::from_str_radix(poly, 16).map_err(|_| bad())?))
                }
            };
            let m: u32 = m.parse().map_err(|_| bad())?;
            return match modulus {
                None => Self::binary_default(m),
                Some(poly) => Self::binary(m, poly),
            };
        }
        Err(bad())
    }

    /// Canonical descriptor string, parseable by [`FieldSpec::parse`].
    pub fn descriptor(&self) -> String {
        match self.kind {
            FieldKind::Prime { p } => format!("gf:p={p}"),
            FieldKind::Binary { m, modulus } => {
                if default_modulus(m) == Some(modulus) {
                    format!("gf:2^{m}")
                } else {
                    format!("gf:2^{m}/{modulus:#x}")
                }
            }
        }
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// Field order q.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn char2(&self) -> bool {
        matches!(self.kind, FieldKind::Binary { .. }) || self.order == 2
    }

    /// The verified primitive element (multiplicative order q-1).
    pub fn generator(&self) -> FieldElem {
        self.generator
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem(0)
    }

    pub fn one(&self) -> FieldElem {
        FieldElem(1)
    }

    /// Element with canonical value v; panics if v >= q.
    pub fn elem(&self, v: u32) -> FieldElem {
        assert!(v < self.order, "value {v} out of range for {self:?}");
        FieldElem(v as u16)
    }

    /// Element from an arbitrary integer, reduced mod q (residue for
    /// prime fields, value order for binary fields).
    pub fn from_int(&self, v: u64) -> FieldElem {
        FieldElem((v % self.order as u64) as u16)
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match self.kind {
            FieldKind::Prime { p } => FieldElem(((a.0 as u32 + b.0 as u32) % p) as u16),
            FieldKind::Binary { .. } => FieldElem(a.0 ^ b.0),
        }
    }

    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match self.kind {
            FieldKind::Prime { p } => {
                FieldElem(((a.0 as u32 + p - b.0 as u32) % p) as u16)
            }
            FieldKind::Binary { .. } => FieldElem(a.0 ^ b.0),
        }
    }

    pub fn neg(&self, a: FieldElem) -> FieldElem {
        self.sub(self.zero(), a)
    }

    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match self.kind {
            FieldKind::Prime { p } => {
                FieldElem(((a.0 as u64 * b.0 as u64) % p as u64) as u16)
            }
            FieldKind::Binary { .. } => {
                if a.0 == 0 || b.0 == 0 {
                    return FieldElem(0);
                }
                FieldElem(self.exp[self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize])
            }
        }
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem, GfError> {
        if a.0 == 0 {
            return Err(GfError::DivisionByZero);
        }
        match self.kind {
            FieldKind::Prime { p } => Ok(self.pow(a, p as u64 - 2)),
            FieldKind::Binary { .. } => {
                let q1 = self.order as usize - 1;
                Ok(FieldElem(self.exp[q1 - self.log[a.0 as usize] as usize]))
            }
        }
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// a^e by square-and-multiply; 0^0 = 1.
    pub fn pow(&self, a: FieldElem, e: u64) -> FieldElem {
        if e == 0 {
            return self.one();
        }
        if a.0 == 0 {
            return self.zero();
        }
        let mut base = a;
        let mut e = e;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: FieldElem) -> Result<u64, GfError> {
        if a.0 == 0 {
            return Err(GfError::DivisionByZero);
        }
        let q1 = self.order as u64 - 1;
        let mut ord = q1;
        for f in prime_factors(q1) {
            while ord % f == 0 && self.pow(a, ord / f) == self.one() {
                ord /= f;
            }
        }
        Ok(ord)
    }

    fn find_generator(&self) -> Result<FieldElem, GfError> {
        let q1 = self.order as u64 - 1;
        if q1 == 1 {
            return Ok(FieldElem(1));
        }
        let factors = prime_factors(q1);
        for cand in 2..self.order {
            let g = FieldElem(cand as u16);
            let primitive = factors
                .iter()
                .all(|&f| self.pow_slow(g, q1 / f) != self.one());
            if primitive {
                return Ok(g);
            }
        }
        Err(GfError::NoGeneratorFound)
    }

    // Table-free power, usable before build_tables runs.
    fn pow_slow(&self, a: FieldElem, e: u64) -> FieldElem {
        let mut base = a;
        let mut e = e;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_slow(acc, base);
            }
            base = self.mul_slow(base, base);
            e >>= 1;
        }
        acc
    }

    // Carry-less multiply followed by modulus reduction.
    fn mul_slow(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match self.kind {
            FieldKind::Prime { p } => {
                FieldElem(((a.0 as u64 * b.0 as u64) % p as u64) as u16)
            }
            FieldKind::Binary { m, modulus } => {
                let mut prod: u64 = 0;
                let (a, b) = (a.0 as u64, b.0 as u64);
                for bit in 0..16 {
                    if (b >> bit) & 1 == 1 {
                        prod ^= a << bit;
                    }
                }
                let modulus = modulus as u64;
                for bit in (m..=31).rev() {
                    if (prod >> bit) & 1 == 1 {
                        prod ^= modulus << (bit - m);
                    }
                }
                FieldElem(prod as u16)
            }
        }
    }

    fn build_tables(&mut self) {
        let q1 = self.order as usize - 1;
        self.exp = vec![0; 2 * q1];
        self.log = vec![0; self.order as usize];
        let mut x = self.one();
        for i in 0..q1 {
            self.exp[i] = x.0;
            self.exp[i + q1] = x.0;
            self.log[x.0 as usize] = i as u16;
            x = self.mul_slow(x, self.generator);
        }
    }
}

/// The designated primitive element of a field.
pub fn primitive_element(field: &FieldSpec) -> FieldElem {
    field.generator()
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn poly_degree(p: u32) -> u32 {
    31 - p.leading_zeros()
}

// Irreducible over GF(2) iff no divisor of degree in [1, m/2].
fn poly_irreducible(modulus: u32, m: u32) -> bool {
    let mut g = 2u32;
    while poly_degree(g) <= m / 2 {
        if poly_rem(modulus, g) == 0 {
            return false;
        }
        g += 1;
    }
    true
}

fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b);
    while a != 0 && poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn prime_field_basics() {
        let f = FieldSpec::prime(11).unwrap();
        assert_eq!(f.order(), 11);
        assert_eq!(f.generator(), FieldElem(2));
        assert_eq!(f.mul(FieldElem(7), FieldElem(8)), FieldElem(1));
        assert_eq!(f.inv(FieldElem(1)).unwrap(), FieldElem(1));
    }

    #[test]
    fn composite_is_rejected() {
        assert_eq!(FieldSpec::prime(4).unwrap_err(), GfError::NotPrime(4));
        assert_eq!(FieldSpec::prime(1).unwrap_err(), GfError::UnsupportedOrder(1));
    }

    #[test]
    fn gf256_default() {
        let f = FieldSpec::binary(8, 0x11d).unwrap();
        assert_eq!(f.order(), 256);
        assert_eq!(f.generator(), FieldElem(2));
        // x * (x^7) = x^8 = x^4 + x^3 + x^2 + 1 under 0x11d
        assert_eq!(f.mul(FieldElem(2), FieldElem(128)), FieldElem(29));
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^8 + 1 = (x + 1)^8 over GF(2)
        assert_eq!(
            FieldSpec::binary(8, 0x101).unwrap_err(),
            GfError::ReducibleModulus(0x101)
        );
        assert!(matches!(
            FieldSpec::binary(8, 0x1d).unwrap_err(),
            GfError::WrongModulusDegree { .. }
        ));
    }

    #[test]
    fn primitive_elements() {
        assert_eq!(primitive_element(&FieldSpec::prime(11).unwrap()), FieldElem(2));
        assert_eq!(primitive_element(&FieldSpec::prime(5).unwrap()), FieldElem(2));
        assert_eq!(primitive_element(&FieldSpec::prime(2).unwrap()), FieldElem(1));
        // 2 has order 3 mod 7; the first primitive root is 3.
        assert_eq!(primitive_element(&FieldSpec::prime(7).unwrap()), FieldElem(3));
    }

    #[test]
    fn generator_powers_are_distinct() {
        for f in [
            FieldSpec::prime(13).unwrap(),
            FieldSpec::binary_default(4).unwrap(),
            FieldSpec::binary_default(8).unwrap(),
        ] {
            let q1 = f.order() as u64 - 1;
            assert_eq!(f.multiplicative_order(f.generator()).unwrap(), q1);
            let mut seen = std::collections::HashSet::new();
            for i in 0..q1 {
                assert!(seen.insert(f.pow(f.generator(), i)));
            }
            assert_eq!(f.pow(f.generator(), q1), f.one());
        }
    }

    #[test]
    fn default_moduli_all_build() {
        for m in 1..=16 {
            let f = FieldSpec::binary_default(m).unwrap();
            assert_eq!(f.order() as u64, 1u64 << m);
        }
    }

    #[test]
    fn table_mul_matches_carryless_oracle() {
        let f = FieldSpec::binary(8, 0x11d).unwrap();
        for a in 0..256u32 {
            for b in 0..256u32 {
                let (a, b) = (FieldElem(a as u16), FieldElem(b as u16));
                assert_eq!(f.mul(a, b), f.mul_slow(a, b));
            }
        }
    }

    #[test]
    fn field_axioms_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for f in [
            FieldSpec::prime(11).unwrap(),
            FieldSpec::prime(13).unwrap(),
            FieldSpec::binary_default(3).unwrap(),
            FieldSpec::binary_default(8).unwrap(),
        ] {
            let q = f.order();
            for _ in 0..10_000 {
                let a = f.elem(rng.gen_range(0..q));
                let b = f.elem(rng.gen_range(0..q));
                let c = f.elem(rng.gen_range(0..q));
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                assert_eq!(f.sub(f.add(a, b), b), a);
                if a.0 != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
                }
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for desc in ["gf:p=11", "gf:2^8", "gf:2^4/0x19"] {
            let f = FieldSpec::parse(desc).unwrap();
            assert_eq!(f.descriptor(), desc);
            let g = FieldSpec::parse(&f.descriptor()).unwrap();
            assert_eq!(f.kind(), g.kind());
        }
        assert!(FieldSpec::parse("gf:p=abc").is_err());
        assert!(FieldSpec::parse("p=11").is_err());
        assert!(FieldSpec::parse("gf:2^40").is_err());
    }
}
