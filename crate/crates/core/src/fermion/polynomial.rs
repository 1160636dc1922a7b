use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// A single creation (`dagger = true`) or annihilation operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LadderOp {
    pub mode: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self {
            mode,
            dagger: false,
        }
    }

    pub fn adjoint(self) -> Self {
        Self {
            mode: self.mode,
            dagger: !self.dagger,
        }
    }

    // Normal-order rank: creators before annihilators, ascending modes.
    fn rank(self) -> (u8, usize) {
        (!self.dagger as u8, self.mode)
    }
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dagger {
            write!(f, "f†{}", self.mode)
        } else {
            write!(f, "f{}", self.mode)
        }
    }
}

/// Product of ladder operators, leftmost factor applied last.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<LadderOp>);

impl Monomial {
    pub fn new(ops: Vec<LadderOp>) -> Self {
        Self(ops)
    }

    pub fn ops(&self) -> &[LadderOp] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_even(&self) -> bool {
        self.0.len() % 2 == 0
    }

    #[cfg(test)]
    fn is_normal_ordered(&self) -> bool {
        self.0.windows(2).all(|w| w[0].rank() < w[1].rank())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, op) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

/// Complex linear combination of normal-ordered monomials.
///
/// Every monomial is kept in the canonical normal order (creators first,
/// then annihilators, modes ascending within each group); the anticommutation
/// relations are applied during normalization, so two polynomials representing
/// the same operator compare equal term by term. Exactly-zero coefficients are
/// dropped.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FermionPolynomial {
    terms: BTreeMap<Monomial, Complex64>,
}

impl FermionPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::term(c, [])
    }

    /// `coeff · ops[0] ops[1] …`, normal-ordered on construction.
    pub fn term<I: IntoIterator<Item = LadderOp>>(coeff: Complex64, ops: I) -> Self {
        let mut p = Self::zero();
        p.accumulate(Monomial(ops.into_iter().collect()), coeff);
        p
    }

    pub fn create(mode: usize) -> Self {
        Self::term(Complex64::new(1.0, 0.0), [LadderOp::create(mode)])
    }

    pub fn annihilate(mode: usize) -> Self {
        Self::term(Complex64::new(1.0, 0.0), [LadderOp::annihilate(mode)])
    }

    /// `f†_m f_m`.
    pub fn number(mode: usize) -> Self {
        Self::term(
            Complex64::new(1.0, 0.0),
            [LadderOp::create(mode), LadderOp::annihilate(mode)],
        )
    }

    /// `f†_j f_k + f†_k f_j`.
    pub fn hopping(j: usize, k: usize) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self::term(one, [LadderOp::create(j), LadderOp::annihilate(k)])
            + Self::term(one, [LadderOp::create(k), LadderOp::annihilate(j)])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, Complex64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All modes touched by some monomial, ascending.
    pub fn modes(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().map(|op| op.mode))
            .collect();
        set.into_iter().collect()
    }

    /// True when every monomial has even degree (the physical algebra).
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(Monomial::is_even)
    }

    pub fn is_odd(&self) -> bool {
        self.terms.keys().all(|m| !m.is_even())
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let ops: Vec<LadderOp> = m.0.iter().rev().map(|op| op.adjoint()).collect();
            out.accumulate(Monomial(ops), c.conj());
        }
        out
    }

    /// Largest coefficient modulus of `self − self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        (self - &self.adjoint())
            .terms
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        if c == Complex64::new(0.0, 0.0) {
            return out;
        }
        for (m, v) in &self.terms {
            out.terms.insert(m.clone(), v * c);
        }
        out
    }

    fn add_normalized(&mut self, m: Monomial, c: Complex64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                if c != Complex64::new(0.0, 0.0) {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == Complex64::new(0.0, 0.0) {
                    o.remove();
                }
            }
        }
    }

    /// Normal-orders `c · m` and adds the result.
    fn accumulate(&mut self, m: Monomial, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let mut stack = vec![(m.0, c)];
        while let Some((mut ops, coeff)) = stack.pop() {
            let violation = ops.windows(2).position(|w| w[0].rank() >= w[1].rank());
            let Some(i) = violation else {
                self.add_normalized(Monomial(ops), coeff);
                continue;
            };
            let (a, b) = (ops[i], ops[i + 1]);
            if a == b {
                // f f = 0, f† f† = 0
                continue;
            }
            if !a.dagger && b.dagger && a.mode == b.mode {
                // f_m f†_m = 1 − f†_m f_m
                let mut contracted = ops.clone();
                contracted.drain(i..i + 2);
                stack.push((contracted, coeff));
            }
            ops.swap(i, i + 1);
            stack.push((ops, -coeff));
        }
    }

    #[cfg(test)]
    fn debug_assert_normal(&self) {
        debug_assert!(self.terms.keys().all(Monomial::is_normal_ordered));
    }
}

impl fmt::Display for FermionPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c}) {m}")?;
        }
        Ok(())
    }
}

impl From<LadderOp> for FermionPolynomial {
    fn from(op: LadderOp) -> Self {
        Self::term(Complex64::new(1.0, 0.0), [op])
    }
}

impl Add<&FermionPolynomial> for &FermionPolynomial {
    type Output = FermionPolynomial;

    fn add(self, rhs: &FermionPolynomial) -> FermionPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_normalized(m.clone(), *c);
        }
        out
    }
}

impl Sub<&FermionPolynomial> for &FermionPolynomial {
    type Output = FermionPolynomial;

    fn sub(self, rhs: &FermionPolynomial) -> FermionPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_normalized(m.clone(), -*c);
        }
        out
    }
}

impl Mul<&FermionPolynomial> for &FermionPolynomial {
    type Output = FermionPolynomial;

    fn mul(self, rhs: &FermionPolynomial) -> FermionPolynomial {
        let mut out = FermionPolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let ops: Vec<LadderOp> = ma.0.iter().chain(mb.0.iter()).copied().collect();
                out.accumulate(Monomial(ops), ca * cb);
            }
        }
        out
    }
}

impl Neg for &FermionPolynomial {
    type Output = FermionPolynomial;

    fn neg(self) -> FermionPolynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<FermionPolynomial> for FermionPolynomial {
            type Output = FermionPolynomial;
            fn $method(self, rhs: FermionPolynomial) -> FermionPolynomial {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&FermionPolynomial> for FermionPolynomial {
            type Output = FermionPolynomial;
            fn $method(self, rhs: &FermionPolynomial) -> FermionPolynomial {
                (&self).$method(rhs)
            }
        }
        impl $tr<FermionPolynomial> for &FermionPolynomial {
            type Output = FermionPolynomial;
            fn $method(self, rhs: FermionPolynomial) -> FermionPolynomial {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for FermionPolynomial {
    type Output = FermionPolynomial;

    fn neg(self) -> FermionPolynomial {
        -&self
    }
}

impl Mul<Complex64> for &FermionPolynomial {
    type Output = FermionPolynomial;

    fn mul(self, rhs: Complex64) -> FermionPolynomial {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for FermionPolynomial {
    type Output = FermionPolynomial;

    fn mul(self, rhs: Complex64) -> FermionPolynomial {
        self.scale(rhs)
    }
}

impl Mul<f64> for FermionPolynomial {
    type Output = FermionPolynomial;

    fn mul(self, rhs: f64) -> FermionPolynomial {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Mul<f64> for &FermionPolynomial {
    type Output = FermionPolynomial;

    fn mul(self, rhs: f64) -> FermionPolynomial {
        self.scale(Complex64::new(rhs, 0.0))
    }
}
