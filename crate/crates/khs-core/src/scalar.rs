//! Exact arithmetic in the coefficient ring: the localization of Q[λ] at
//! the maximal ideal (λ), a discrete valuation ring with uniformizer λ.
//!
//! Every element is stored in a canonical form
//!   λ^shift · num / den
//! where `num` has nonzero constant term (or the element is zero),
//! gcd(num, den) = 1, and `den` is normalized to constant term 1. Equality
//! and valuation are O(1) reads off this form.

use crate::poly::Poly;
use crate::{Error, Result};

use num_rational::BigRational;
use num_traits::Zero;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// λ-adic valuation: a non-negative integer, or infinite for zero.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn is_zero_val(self) -> bool {
        self == Valuation::Finite(0)
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(k) => Some(k),
            Valuation::Infinite => None,
        }
    }
}

impl PartialOrd<u32> for Valuation {
    fn partial_cmp(&self, other: &u32) -> Option<std::cmp::Ordering> {
        match self {
            Valuation::Finite(k) => k.partial_cmp(other),
            Valuation::Infinite => Some(std::cmp::Ordering::Greater),
        }
    }
}

impl PartialEq<u32> for Valuation {
    fn eq(&self, other: &u32) -> bool {
        matches!(self, Valuation::Finite(k) if k == other)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(k) => write!(f, "{k}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

/// An element of Q[λ] localized at (λ), in canonical form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DvrScalar {
    /// λ-power factored out of the numerator. Zero for the zero element.
    shift: u32,
    /// Numerator with nonzero constant term; the zero polynomial iff the
    /// element is zero.
    num: Poly,
    /// Denominator with constant term 1.
    den: Poly,
}

impl DvrScalar {
    pub fn zero() -> Self {
        DvrScalar { shift: 0, num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        DvrScalar { shift: 0, num: Poly::one(), den: Poly::one() }
    }

    pub fn from_int(n: i64) -> Self {
        DvrScalar::from_fraction(Poly::from_int(n), Poly::one())
            .expect("integer constant")
    }

    pub fn from_rational(c: BigRational) -> Self {
        DvrScalar::from_fraction(Poly::constant(c), Poly::one())
            .expect("rational constant")
    }

    /// λ^k.
    pub fn lambda_pow(k: u32) -> Self {
        DvrScalar { shift: k, num: Poly::one(), den: Poly::one() }
    }

    /// c·λ^k.
    pub fn monomial(c: BigRational, k: u32) -> Self {
        if c.is_zero() {
            return DvrScalar::zero();
        }
        DvrScalar { shift: k, num: Poly::constant(c), den: Poly::one() }
    }

    /// Build from a fraction of polynomials. Fails when the reduced
    /// denominator vanishes at λ = 0, i.e. the fraction lies outside the
    /// localization.
    pub fn from_fraction(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        if num.is_zero() {
            return Ok(DvrScalar::zero());
        }
        // Factor λ-powers out of both sides first.
        let nv = num.order().unwrap();
        let dv = den.order().unwrap();
        if dv > nv {
            return Err(Error::InsufficientValuation);
        }
        let shift = (nv - dv) as u32;
        let mut n0 = num.shift_down(nv);
        let mut d0 = den.shift_down(dv);
        let g = n0.gcd(&d0);
        if !g.is_one() {
            n0 = n0.div_rem(&g).0;
            d0 = d0.div_rem(&g).0;
        }
        // Normalize denominator constant term to 1.
        let c = d0.constant_term();
        debug_assert!(!c.is_zero());
        let cinv = c.recip();
        let d0 = d0.scale(&cinv);
        let n0 = n0.scale(&cinv);
        Ok(DvrScalar { shift, num: n0, den: d0 })
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.shift == 0 && self.num.is_one() && self.den.is_one()
    }

    pub fn is_unit(&self) -> bool {
        !self.is_zero() && self.shift == 0
    }

    /// λ-adic valuation; infinite for zero.
    pub fn valuation(&self) -> Valuation {
        if self.is_zero() {
            Valuation::Infinite
        } else {
            Valuation::Finite(self.shift)
        }
    }

    /// True when the element is a monomial c·λ^k (unit denominator and a
    /// single numerator term). Homogeneous scalars in graded chains have
    /// this shape.
    pub fn is_monomial(&self) -> bool {
        self.is_zero() || (self.den.is_one() && self.num.is_monomial())
    }

    /// The unit part u with self = λ^v · u; errors on zero.
    pub fn unit_part(&self) -> Result<DvrScalar> {
        if self.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(DvrScalar { shift: 0, num: self.num.clone(), den: self.den.clone() })
    }

    /// Exact inverse of a unit. Distinguishes zero from positive valuation.
    pub fn invert(&self) -> Result<DvrScalar> {
        if self.is_zero() {
            return Err(Error::ZeroInverse);
        }
        if self.shift > 0 {
            return Err(Error::NotAUnit);
        }
        DvrScalar::from_fraction(self.den.clone(), self.num.clone())
    }

    /// Exact quotient q with q·b = a, defined when val(a) ≥ val(b).
    pub fn divide_exact(&self, b: &DvrScalar) -> Result<DvrScalar> {
        if b.is_zero() {
            return Err(Error::ZeroInverse);
        }
        if self.is_zero() {
            return Ok(DvrScalar::zero());
        }
        if self.shift < b.shift {
            return Err(Error::InsufficientValuation);
        }
        let num = &self.num * &b.den;
        let den = &self.den * &b.num;
        let mut q = DvrScalar::from_fraction(num, den)?;
        q.shift += self.shift - b.shift;
        Ok(q)
    }

    /// Multiply by λ^k.
    pub fn mul_lambda_pow(&self, k: u32) -> DvrScalar {
        if self.is_zero() {
            return DvrScalar::zero();
        }
        DvrScalar { shift: self.shift + k, num: self.num.clone(), den: self.den.clone() }
    }

    /// Evaluate at a rational point, e.g. λ = 1 for the Lee specialization.
    /// Errors when the denominator vanishes there.
    pub fn eval(&self, x: &BigRational) -> Result<BigRational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::InvariantViolation(
                "denominator vanishes at specialization point".into(),
            ));
        }
        let mut n = self.num.eval(x);
        for _ in 0..self.shift {
            n *= x;
        }
        Ok(n / d)
    }

    /// Degree of the λ-monomial when `is_monomial()`, e.g. for grading
    /// checks. None for zero.
    pub fn monomial_degree(&self) -> Option<u32> {
        if self.is_zero() || !self.is_monomial() {
            return None;
        }
        Some(self.shift + self.num.order().unwrap() as u32)
    }

    /// Parse the textual form, e.g. `(2*l^2 - l^3)/(1 + l)` or `-1/2*l^4`.
    pub fn parse(text: &str) -> Result<Self> {
        parser::parse(text)
    }

    /// The element as a reduced fraction (numerator with the λ-power
    /// folded back in, denominator with constant term 1).
    pub fn to_fraction(&self) -> (Poly, Poly) {
        (self.num.shift_up(self.shift as usize), self.den.clone())
    }
}

impl Default for DvrScalar {
    fn default() -> Self {
        DvrScalar::zero()
    }
}

impl Add for &DvrScalar {
    type Output = DvrScalar;
    fn add(self, rhs: &DvrScalar) -> DvrScalar {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let s = self.shift.min(rhs.shift) as usize;
        let a = self.num.shift_up(self.shift as usize - s);
        let b = rhs.num.shift_up(rhs.shift as usize - s);
        let num = &(&a * &rhs.den) + &(&b * &self.den);
        let den = &self.den * &rhs.den;
        let mut r = DvrScalar::from_fraction(num, den).expect("sum stays in localization");
        if !r.is_zero() {
            r.shift += s as u32;
        }
        r
    }
}

impl Sub for &DvrScalar {
    type Output = DvrScalar;
    fn sub(self, rhs: &DvrScalar) -> DvrScalar {
        self + &(-rhs)
    }
}

impl Mul for &DvrScalar {
    type Output = DvrScalar;
    fn mul(self, rhs: &DvrScalar) -> DvrScalar {
        if self.is_zero() || rhs.is_zero() {
            return DvrScalar::zero();
        }
        let num = &self.num * &rhs.num;
        let den = &self.den * &rhs.den;
        let mut r = DvrScalar::from_fraction(num, den).expect("product stays in localization");
        r.shift += self.shift + rhs.shift;
        r
    }
}

impl Neg for &DvrScalar {
    type Output = DvrScalar;
    fn neg(self) -> DvrScalar {
        DvrScalar { shift: self.shift, num: -&self.num, den: self.den.clone() }
    }
}

macro_rules! forward_owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for DvrScalar {
            type Output = DvrScalar;
            fn $method(self, rhs: DvrScalar) -> DvrScalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&DvrScalar> for DvrScalar {
            type Output = DvrScalar;
            fn $method(self, rhs: &DvrScalar) -> DvrScalar {
                (&self).$method(rhs)
            }
        }
    };
}
forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

impl Neg for DvrScalar {
    type Output = DvrScalar;
    fn neg(self) -> DvrScalar {
        -&self
    }
}

impl fmt::Display for DvrScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let full_num = self.num.shift_up(self.shift as usize);
        if self.den.is_one() {
            write!(f, "{full_num}")
        } else {
            write!(f, "({full_num})/({})", self.den)
        }
    }
}

impl serde::Serialize for DvrScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for DvrScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        DvrScalar::parse(&text).map_err(serde::de::Error::custom)
    }
}

mod parser {
    //! Recursive-descent parser for fraction-of-polynomial expressions in
    //! the variable `l`, with `+ - * / ^` and parentheses. Division is
    //! exact division in the localization and fails outside it.

    use super::*;

    pub fn parse(text: &str) -> Result<DvrScalar> {
        let mut p = P { bytes: text.as_bytes(), pos: 0 };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input at byte {} in scalar '{text}'",
                p.pos
            )));
        }
        Ok(v)
    }

    struct P<'a> {
        bytes: &'a [u8],
        pos: usize,
    }

    impl<'a> P<'a> {
        fn skip_ws(&mut self) {
            while self.bytes.get(self.pos).map_or(false, |b| b.is_ascii_whitespace()) {
                self.pos += 1;
            }
        }

        fn peek(&mut self) -> Option<u8> {
            self.skip_ws();
            self.bytes.get(self.pos).copied()
        }

        fn expr(&mut self) -> Result<DvrScalar> {
            let mut acc = match self.peek() {
                Some(b'-') => {
                    self.pos += 1;
                    -&self.term()?
                }
                Some(b'+') => {
                    self.pos += 1;
                    self.term()?
                }
                _ => self.term()?,
            };
            loop {
                match self.peek() {
                    Some(b'+') => {
                        self.pos += 1;
                        acc = &acc + &self.term()?;
                    }
                    Some(b'-') => {
                        self.pos += 1;
                        acc = &acc - &self.term()?;
                    }
                    _ => return Ok(acc),
                }
            }
        }

        fn term(&mut self) -> Result<DvrScalar> {
            let mut acc = self.factor()?;
            loop {
                match self.peek() {
                    Some(b'*') => {
                        self.pos += 1;
                        acc = &acc * &self.factor()?;
                    }
                    Some(b'/') => {
                        self.pos += 1;
                        let d = self.factor()?;
                        acc = acc.divide_exact(&d)?;
                    }
                    _ => return Ok(acc),
                }
            }
        }

        fn factor(&mut self) -> Result<DvrScalar> {
            let base = self.atom()?;
            if self.peek() == Some(b'^') {
                self.pos += 1;
                let e = self.integer()?;
                if e < 0 {
                    return Err(Error::Parse("negative exponent".into()));
                }
                let mut acc = DvrScalar::one();
                for _ in 0..e {
                    acc = &acc * &base;
                }
                return Ok(acc);
            }
            Ok(base)
        }

        fn atom(&mut self) -> Result<DvrScalar> {
            match self.peek() {
                Some(b'(') => {
                    self.pos += 1;
                    let v = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(Error::Parse("expected ')'".into()));
                    }
                    self.pos += 1;
                    Ok(v)
                }
                Some(b'l') => {
                    self.pos += 1;
                    Ok(DvrScalar::lambda_pow(1))
                }
                Some(b) if b.is_ascii_digit() => {
                    let n = self.integer()?;
                    Ok(DvrScalar::from_int(n))
                }
                other => Err(Error::Parse(format!("unexpected token {other:?}"))),
            }
        }

        fn integer(&mut self) -> Result<i64> {
            self.skip_ws();
            let neg = if self.bytes.get(self.pos) == Some(&b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let start = self.pos;
            while self.bytes.get(self.pos).map_or(false, u8::is_ascii_digit) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(Error::Parse("expected integer".into()));
            }
            let s = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
            let mut v: i64 = s.parse().map_err(|e| Error::Parse(format!("{e}")))?;
            if neg {
                v = -v;
            }
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(text: &str) -> DvrScalar {
        DvrScalar::parse(text).unwrap()
    }

    #[test]
    fn add_examples() {
        // λ + (−λ) = 0
        assert!((&s("l") + &s("-l")).is_zero());
        // 1 + λ has valuation 0
        assert_eq!((&s("1") + &s("l")).valuation(), Valuation::Finite(0));
        // λ/(1−λ) + λ = (2λ − λ²)/(1 − λ), checked by cross-multiplying:
        // λ + λ(1−λ) = 2λ − λ².
        assert_eq!(&s("l/(1-l)") + &s("l"), s("(2*l - l^2)/(1 - l)"));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&s("l") * &s("l"), s("l^2"));
        assert!((&s("1-l") * &s("1/(1-l)")).is_one());
        // 2λ² · 2 = 4λ²
        assert_eq!(&s("2*l^2") * &s("2"), s("4*l^2"));
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(s("l^3 + l^5").valuation(), Valuation::Finite(3));
        assert_eq!(s("0").valuation(), Valuation::Infinite);
        // factor numerator; denominator is a unit
        assert_eq!(s("(l^2 - l^3)/(2 + l)").valuation(), Valuation::Finite(2));
    }

    #[test]
    fn invert_examples() {
        assert_eq!(s("1+l").invert().unwrap(), s("1/(1+l)"));
        assert_eq!(s("2").invert().unwrap(), s("1/2"));
        assert!(matches!(s("l").invert(), Err(Error::NotAUnit)));
        assert!(matches!(s("0").invert(), Err(Error::ZeroInverse)));
    }

    #[test]
    fn divide_exact_examples() {
        assert_eq!(s("l^3").divide_exact(&s("l")).unwrap(), s("l^2"));
        assert_eq!(s("4*l^2").divide_exact(&s("2")).unwrap(), s("2*l^2"));
        assert!(matches!(
            s("l").divide_exact(&s("l^2")),
            Err(Error::InsufficientValuation)
        ));
    }

    #[test]
    fn canonical_form_equality() {
        // same element, different presentations
        assert_eq!(s("(2*l^2 - l^3)/(1 + l)"), s("l^2*(2 - l)/(1 + l)"));
        assert_eq!(s("(1+l)*(1-l)"), s("1 - l^2"));
        // denominator normalized to constant term 1
        assert_eq!(s("1/(2+2*l)"), s("(1/2)/(1+l)"));
    }

    #[test]
    fn specialization() {
        use num_traits::One;
        let one = BigRational::one();
        assert_eq!(s("l^2").eval(&one).unwrap(), one);
        assert_eq!(
            s("(2*l - l^2)/(1 - l)").eval(&BigRational::new(1.into(), 2.into())).unwrap(),
            BigRational::new(3.into(), 2.into())
        );
    }

    fn arb_scalar() -> impl Strategy<Value = DvrScalar> {
        // numerators up to degree 3, denominators of the form 1 + a·λ + b·λ²
        (
            proptest::collection::vec(-4i64..5, 1..4),
            0u32..3,
            -3i64..4,
            -3i64..4,
        )
            .prop_map(|(coeffs, shift, d1, d2)| {
                let num = Poly::from_coeffs(
                    coeffs
                        .into_iter()
                        .map(|c| BigRational::from_integer(c.into()))
                        .collect(),
                );
                let den = Poly::from_coeffs(vec![
                    BigRational::from_integer(1.into()),
                    BigRational::from_integer(d1.into()),
                    BigRational::from_integer(d2.into()),
                ]);
                match DvrScalar::from_fraction(num.shift_up(shift as usize), den) {
                    Ok(v) => v,
                    Err(_) => DvrScalar::zero(),
                }
            })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            // associativity and commutativity
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            // distributivity
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            // additive inverse
            prop_assert!((&a - &a).is_zero());
        }

        #[test]
        fn valuation_laws(a in arb_scalar(), b in arb_scalar()) {
            use Valuation::*;
            // valuations add under multiplication
            let prod = &a * &b;
            match (a.valuation(), b.valuation()) {
                (Finite(x), Finite(y)) => prop_assert_eq!(prod.valuation(), Finite(x + y)),
                _ => prop_assert_eq!(prod.valuation(), Infinite),
            }
            // ultrametric inequality, equality when valuations differ
            let sum = &a + &b;
            match (a.valuation(), b.valuation()) {
                (Finite(x), Finite(y)) if x != y => {
                    prop_assert_eq!(sum.valuation(), Finite(x.min(y)));
                }
                (Finite(x), Infinite) => prop_assert_eq!(sum.valuation(), Finite(x)),
                (Infinite, Finite(y)) => prop_assert_eq!(sum.valuation(), Finite(y)),
                (Finite(x), Finite(_)) => {
                    prop_assert!(sum.valuation() >= Finite(x.min(x)));
                }
                (Infinite, Infinite) => prop_assert_eq!(sum.valuation(), Infinite),
            }
        }

        #[test]
        fn units_and_associates(a in arb_scalar()) {
            // a is a unit iff valuation 0; invert(a)·a = 1 exactly
            if a.is_unit() {
                let inv = a.invert().unwrap();
                prop_assert!((&inv * &a).is_one());
            } else {
                prop_assert!(a.invert().is_err());
            }
            // associates: a ~ λ^v·unit at the same valuation
            if let Valuation::Finite(v) = a.valuation() {
                let u = a.unit_part().unwrap();
                prop_assert!(u.is_unit());
                prop_assert_eq!(&u * &DvrScalar::lambda_pow(v), a.clone());
            }
        }

        #[test]
        fn display_parse_roundtrip(a in arb_scalar()) {
            let text = a.to_string();
            let back = DvrScalar::parse(&text).unwrap();
            prop_assert_eq!(back, a);
        }

        #[test]
        fn divisibility_matches_valuation(a in arb_scalar(), b in arb_scalar()) {
            // b | a in the DVR iff val(a) ≥ val(b)
            if b.is_zero() {
                prop_assert!(a.divide_exact(&b).is_err());
            } else if a.valuation() >= b.valuation() {
                let q = a.divide_exact(&b).unwrap();
                prop_assert_eq!(&q * &b, a.clone());
            } else {
                prop_assert!(a.divide_exact(&b).is_err());
            }
        }
    }
}
