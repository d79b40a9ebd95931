//! The rank-2 Frobenius algebra over the coefficient ring that labels
//! resolution circles: basis v₊, v₋ with multiplication deformed by λ².

use crate::scalar::DvrScalar;

/// Label carried by one circle of a resolution.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Label {
    Plus,
    Minus,
}

impl Label {
    /// Quantum degree of the basis vector: +1 or −1.
    pub fn q(self) -> i64 {
        match self {
            Label::Plus => 1,
            Label::Minus => -1,
        }
    }
}

/// Structure constants of the deformed theory:
///
/// m(v₊⊗v₊)=v₊, m(v₊⊗v₋)=m(v₋⊗v₊)=v₋, m(v₋⊗v₋)=λ²v₊;
/// Δ(v₊)=v₊⊗v₋+v₋⊗v₊, Δ(v₋)=v₋⊗v₋+λ²v₊⊗v₊.
#[derive(Clone, Debug)]
pub struct FrobeniusAlgebra {
    /// Deformation parameter multiplying the extremal structure constants.
    pub t: DvrScalar,
}

impl FrobeniusAlgebra {
    /// The λ²-deformed algebra used by the cube.
    pub fn deformed() -> Self {
        FrobeniusAlgebra { t: DvrScalar::lambda_pow(2) }
    }

    pub fn mul(&self, x: Label, y: Label) -> Vec<(Label, DvrScalar)> {
        use Label::*;
        match (x, y) {
            (Plus, Plus) => vec![(Plus, DvrScalar::one())],
            (Plus, Minus) | (Minus, Plus) => vec![(Minus, DvrScalar::one())],
            (Minus, Minus) => vec![(Plus, self.t.clone())],
        }
    }

    pub fn comul(&self, x: Label) -> Vec<((Label, Label), DvrScalar)> {
        use Label::*;
        match x {
            Plus => vec![
                ((Plus, Minus), DvrScalar::one()),
                ((Minus, Plus), DvrScalar::one()),
            ],
            Minus => vec![
                ((Minus, Minus), DvrScalar::one()),
                ((Plus, Plus), self.t.clone()),
            ],
        }
    }

    /// Unit 1 ↦ v₊ (the image of the canonical generator under a birth).
    pub fn unit(&self) -> Label {
        Label::Plus
    }

    /// Counit: v₊ ↦ 0, v₋ ↦ 1 (a death).
    pub fn counit(&self, x: Label) -> DvrScalar {
        match x {
            Label::Plus => DvrScalar::zero(),
            Label::Minus => DvrScalar::one(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    type Vec1 = BTreeMap<Label, DvrScalar>;
    type Vec2 = BTreeMap<(Label, Label), DvrScalar>;

    fn add1(m: &mut Vec1, l: Label, c: DvrScalar) {
        let e = m.entry(l).or_insert_with(DvrScalar::zero);
        *e = &*e + &c;
        if e.is_zero() {
            m.remove(&l);
        }
    }

    fn add2(m: &mut Vec2, l: (Label, Label), c: DvrScalar) {
        let e = m.entry(l).or_insert_with(DvrScalar::zero);
        *e = &*e + &c;
        if e.is_zero() {
            m.remove(&l);
        }
    }

    /// Δ∘m on V⊗V.
    fn comul_mul(a: &FrobeniusAlgebra, x: Label, y: Label) -> Vec2 {
        let mut out = Vec2::new();
        for (z, c) in a.mul(x, y) {
            for ((p, q), c2) in a.comul(z) {
                add2(&mut out, (p, q), &c * &c2);
            }
        }
        out
    }

    /// (m⊗id)∘(id⊗Δ) on V⊗V.
    fn right_route(a: &FrobeniusAlgebra, x: Label, y: Label) -> Vec2 {
        let mut out = Vec2::new();
        for ((p, q), c) in a.comul(y) {
            for (z, c2) in a.mul(x, p) {
                add2(&mut out, (z, q), &c * &c2);
            }
        }
        out
    }

    /// (id⊗m)∘(Δ⊗id) on V⊗V.
    fn left_route(a: &FrobeniusAlgebra, x: Label, y: Label) -> Vec2 {
        let mut out = Vec2::new();
        for ((p, q), c) in a.comul(x) {
            for (z, c2) in a.mul(q, y) {
                add2(&mut out, (p, z), &c * &c2);
            }
        }
        out
    }

    #[test]
    fn frobenius_identities() {
        let a = FrobeniusAlgebra::deformed();
        for x in [Label::Plus, Label::Minus] {
            for y in [Label::Plus, Label::Minus] {
                let mid = comul_mul(&a, x, y);
                assert_eq!(mid, right_route(&a, x, y), "(m⊗id)(id⊗Δ) = Δm at {x:?}{y:?}");
                assert_eq!(mid, left_route(&a, x, y), "(id⊗m)(Δ⊗id) = Δm at {x:?}{y:?}");
            }
        }
    }

    #[test]
    fn commutative_and_cocommutative() {
        let a = FrobeniusAlgebra::deformed();
        for x in [Label::Plus, Label::Minus] {
            for y in [Label::Plus, Label::Minus] {
                assert_eq!(a.mul(x, y), a.mul(y, x));
            }
            let mut swapped = Vec2::new();
            for ((p, q), c) in a.comul(x) {
                add2(&mut swapped, (q, p), c);
            }
            let mut plain = Vec2::new();
            for ((p, q), c) in a.comul(x) {
                add2(&mut plain, (p, q), c);
            }
            assert_eq!(plain, swapped);
        }
    }

    #[test]
    fn counit_laws() {
        let a = FrobeniusAlgebra::deformed();
        // (id⊗ε)∘Δ = id = (ε⊗id)∘Δ
        for x in [Label::Plus, Label::Minus] {
            let mut right = Vec1::new();
            let mut left = Vec1::new();
            for ((p, q), c) in a.comul(x) {
                add1(&mut right, p, &c * &a.counit(q));
                add1(&mut left, q, &c * &a.counit(p));
            }
            let expected: Vec1 = [(x, DvrScalar::one())].into_iter().collect();
            assert_eq!(right, expected);
            assert_eq!(left, expected);
        }
        // unit is a two-sided identity for m
        for x in [Label::Plus, Label::Minus] {
            assert_eq!(a.mul(a.unit(), x), vec![(x, DvrScalar::one())]);
        }
    }
}
