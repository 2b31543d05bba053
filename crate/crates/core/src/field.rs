//! Exact scalars: arbitrary-precision rationals and prime fields GF(p).
//!
//! Every [`FieldElement`] carries its [`FieldSpec`], and values are kept in
//! canonical form (reduced fraction with positive denominator, or residue in
//! `[0, p)`), so structural equality is field equality.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A prime modulus. Can only be obtained through [`Prime::new`], which
/// rejects composites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Prime(p))
        } else {
            Err(Error::InvalidModulus(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

/// Which exact field the scalars live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FieldDescriptor", into = "FieldDescriptor")]
pub enum FieldSpec {
    Rationals,
    PrimeField(Prime),
}

impl FieldSpec {
    pub fn prime(p: u64) -> Result<Self> {
        Prime::new(p).map(FieldSpec::PrimeField)
    }

    pub fn modulus(self) -> Option<u64> {
        match self {
            FieldSpec::Rationals => None,
            FieldSpec::PrimeField(p) => Some(p.get()),
        }
    }

    pub fn zero(self) -> FieldElement {
        FieldElement::zero(self)
    }

    pub fn one(self) -> FieldElement {
        FieldElement::one(self)
    }

    pub fn from_i64(self, v: i64) -> FieldElement {
        FieldElement::from_i64(self, v)
    }

    fn ensure_same(self, other: FieldSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::FieldMismatch {
                left: self,
                right: other,
            })
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rationals => write!(f, "Q"),
            FieldSpec::PrimeField(p) => write!(f, "GF({})", p.get()),
        }
    }
}

/// Parses the command-line spelling: `q` for the rationals, `gfp:<p>` for GF(p).
impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "q" {
            return Ok(FieldSpec::Rationals);
        }
        match t.strip_prefix("gfp:") {
            Some(p) => {
                let p = p
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad modulus in field `{s}`")))?;
                FieldSpec::prime(p)
            }
            None => Err(Error::Parse(format!(
                "unknown field `{s}` (expected `q` or `gfp:<p>`)"
            ))),
        }
    }
}

/// JSON form of a field: `{"type":"Q"}` or `{"type":"GFp","p":7}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum FieldDescriptor {
    #[serde(rename = "Q")]
    Rationals,
    #[serde(rename = "GFp")]
    PrimeField { p: u64 },
}

impl TryFrom<FieldDescriptor> for FieldSpec {
    type Error = Error;

    fn try_from(d: FieldDescriptor) -> Result<Self> {
        match d {
            FieldDescriptor::Rationals => Ok(FieldSpec::Rationals),
            FieldDescriptor::PrimeField { p } => FieldSpec::prime(p),
        }
    }
}

impl From<FieldSpec> for FieldDescriptor {
    fn from(spec: FieldSpec) -> Self {
        match spec {
            FieldSpec::Rationals => FieldDescriptor::Rationals,
            FieldSpec::PrimeField(p) => FieldDescriptor::PrimeField { p: p.get() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Value {
    Rational(BigRational),
    Residue(u64),
}

/// A scalar in a [`FieldSpec`]. Mixing specs in the operator impls panics;
/// the `checked_*` methods return [`Error::FieldMismatch`] instead.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    spec: FieldSpec,
    value: Value,
}

impl FieldElement {
    pub fn zero(spec: FieldSpec) -> Self {
        Self::from_i64(spec, 0)
    }

    pub fn one(spec: FieldSpec) -> Self {
        Self::from_i64(spec, 1)
    }

    pub fn from_i64(spec: FieldSpec, v: i64) -> Self {
        Self::from_bigint(spec, &BigInt::from(v))
    }

    pub fn from_bigint(spec: FieldSpec, v: &BigInt) -> Self {
        let value = match spec {
            FieldSpec::Rationals => Value::Rational(BigRational::from_integer(v.clone())),
            FieldSpec::PrimeField(p) => Value::Residue(reduce_bigint(v, p.get())),
        };
        FieldElement { spec, value }
    }

    /// `num / den` in the field. Over GF(p) this is `num * den^-1`.
    pub fn from_ratio(spec: FieldSpec, num: &BigInt, den: &BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        match spec {
            FieldSpec::Rationals => Ok(FieldElement {
                spec,
                value: Value::Rational(BigRational::new(num.clone(), den.clone())),
            }),
            FieldSpec::PrimeField(_) => {
                let n = Self::from_bigint(spec, num);
                let d = Self::from_bigint(spec, den);
                n.checked_div(&d)
            }
        }
    }

    /// Parses the textual scalar encoding: `"int"` or `"num/den"` over the
    /// rationals, a decimal integer (reduced mod p) over GF(p).
    pub fn parse(spec: FieldSpec, s: &str) -> Result<Self> {
        let s = s.trim();
        let int = |t: &str| {
            BigInt::from_str(t.trim()).map_err(|_| Error::Parse(format!("bad scalar `{s}`")))
        };
        match spec {
            FieldSpec::Rationals => match s.split_once('/') {
                Some((n, d)) => {
                    Self::from_ratio(spec, &int(n)?, &int(d)?).map_err(|e| match e {
                        Error::DivisionByZero => Error::Parse(format!("zero denominator in `{s}`")),
                        other => other,
                    })
                }
                None => Ok(Self::from_bigint(spec, &int(s)?)),
            },
            FieldSpec::PrimeField(_) => {
                if s.contains('/') {
                    return Err(Error::Parse(format!(
                        "GF(p) scalars are decimal residues, got `{s}`"
                    )));
                }
                Ok(Self::from_bigint(spec, &int(s)?))
            }
        }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        match &self.value {
            Value::Rational(r) => r.is_zero(),
            Value::Residue(v) => *v == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.value {
            Value::Rational(r) => r.is_one(),
            Value::Residue(v) => *v == 1,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.value {
            Value::Rational(r) => Some(r),
            Value::Residue(_) => None,
        }
    }

    pub fn residue(&self) -> Option<u64> {
        match &self.value {
            Value::Rational(_) => None,
            Value::Residue(v) => Some(*v),
        }
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        self.spec.ensure_same(rhs.spec)?;
        Ok(self.add_unchecked(rhs))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self> {
        self.spec.ensure_same(rhs.spec)?;
        Ok(self.add_unchecked(&rhs.neg_ref()))
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        self.spec.ensure_same(rhs.spec)?;
        Ok(self.mul_unchecked(rhs))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        self.spec.ensure_same(rhs.spec)?;
        Ok(self.mul_unchecked(&rhs.inv()?))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let value = match (&self.value, self.spec) {
            (Value::Rational(r), _) => Value::Rational(r.recip()),
            (Value::Residue(v), FieldSpec::PrimeField(p)) => Value::Residue(inv_mod(*v, p.get())),
            (Value::Residue(_), FieldSpec::Rationals) => unreachable!(),
        };
        Ok(FieldElement {
            spec: self.spec,
            value,
        })
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.spec);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            base = base.mul_unchecked(&base);
            exp >>= 1;
        }
        acc
    }

    fn neg_ref(&self) -> Self {
        let value = match (&self.value, self.spec) {
            (Value::Rational(r), _) => Value::Rational(-r),
            (Value::Residue(v), FieldSpec::PrimeField(p)) => {
                Value::Residue(if *v == 0 { 0 } else { p.get() - v })
            }
            (Value::Residue(_), FieldSpec::Rationals) => unreachable!(),
        };
        FieldElement {
            spec: self.spec,
            value,
        }
    }

    fn add_unchecked(&self, rhs: &Self) -> Self {
        let value = match (&self.value, &rhs.value, self.spec) {
            (Value::Rational(a), Value::Rational(b), _) => Value::Rational(a + b),
            (Value::Residue(a), Value::Residue(b), FieldSpec::PrimeField(p)) => {
                Value::Residue(((*a as u128 + *b as u128) % p.get() as u128) as u64)
            }
            _ => unreachable!("field specs checked by caller"),
        };
        FieldElement {
            spec: self.spec,
            value,
        }
    }

    fn mul_unchecked(&self, rhs: &Self) -> Self {
        let value = match (&self.value, &rhs.value, self.spec) {
            (Value::Rational(a), Value::Rational(b), _) => Value::Rational(a * b),
            (Value::Residue(a), Value::Residue(b), FieldSpec::PrimeField(p)) => {
                Value::Residue(((*a as u128 * *b as u128) % p.get() as u128) as u64)
            }
            _ => unreachable!("field specs checked by caller"),
        };
        FieldElement {
            spec: self.spec,
            value,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Value::Rational(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Value::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Residue(v) => write!(f, "{v}"),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&FieldElement> for &FieldElement {
            type Output = FieldElement;

            fn $method(self, rhs: &FieldElement) -> FieldElement {
                match self.$checked(rhs) {
                    Ok(v) => v,
                    Err(e) => panic!("{e}"),
                }
            }
        }

        impl $trait<FieldElement> for FieldElement {
            type Output = FieldElement;

            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$method(&rhs)
            }
        }

        impl $trait<&FieldElement> for FieldElement {
            type Output = FieldElement;

            fn $method(self, rhs: &FieldElement) -> FieldElement {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        self.neg_ref()
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        self.neg_ref()
    }
}

fn reduce_bigint(v: &BigInt, p: u64) -> u64 {
    let r = v.mod_floor(&BigInt::from(p));
    r.to_u64().expect("residue fits in u64")
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // extended Euclid on (a, p); a is nonzero and p prime
    let (mut old_r, mut r) = (a as i128, p as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1);
    old_s.rem_euclid(p as i128) as u64
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n.is_multiple_of(w) {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Lifts a rational to `(numerator, denominator)` with positive denominator.
pub(crate) fn rational_parts(r: &BigRational) -> (BigInt, BigInt) {
    debug_assert!(r.denom().is_positive());
    (r.numer().clone(), r.denom().clone())
}
