use crate::error::{Error, Result};
use crate::fermion::{
    represent_polynomial, FermionPolynomial, Grading, ModeOrder, OrderedOperator,
};
use crate::linalg;
use crate::reorder::{reorder, UNITARITY_TOL};

/// Hermiticity tolerance on generator coefficients.
const HERMITIAN_TOL: f64 = 1e-12;

/// A parity-preserving unitary on a few modes, applied at `time`.
///
/// The unitary is stored in the ascending order of its support. Gates built
/// from a generator `H` hold `U = exp(iH)`; gates built directly from a
/// matrix (for instance after optimization) carry no generator.
#[derive(Clone, Debug)]
pub struct FermionGate {
    unitary: OrderedOperator,
    generator: Option<FermionPolynomial>,
    time: u64,
}

impl FermionGate {
    /// `U = exp(i·generator)` for an even, hermitian generator.
    pub fn from_generator(generator: FermionPolynomial, time: u64) -> Result<Self> {
        if !generator.is_even() {
            return Err(Error::OddObservable);
        }
        let deviation = generator.hermiticity_defect();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitian { deviation });
        }
        let modes = generator.modes();
        if modes.is_empty() {
            return Err(Error::EmptySupport);
        }
        let order = ModeOrder::ascending(modes);
        let h = represent_polynomial(&generator, &order)?;
        let unitary = linalg::exp_i_even(&h);
        Ok(Self {
            unitary,
            generator: Some(generator),
            time,
        })
    }

    /// Wraps an explicit even unitary; it is re-expressed in ascending order.
    pub fn from_unitary(unitary: OrderedOperator, time: u64) -> Result<Self> {
        if unitary.order().is_empty() {
            return Err(Error::EmptySupport);
        }
        if unitary.grading() != Grading::Even {
            return Err(Error::GradingViolation {
                expected: Grading::Even,
                found: unitary.grading(),
            });
        }
        let deviation = unitary.unitarity_defect();
        if deviation > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        let order = ModeOrder::ascending(unitary.order().modes().iter().copied());
        let unitary = reorder(&unitary, &order)?;
        Ok(Self {
            unitary,
            generator: None,
            time,
        })
    }

    /// For unitaries the crate itself keeps even and unitary; ascending
    /// order is required and the grading is checked in debug builds.
    pub(crate) fn from_trusted_unitary(unitary: OrderedOperator, time: u64) -> Self {
        debug_assert!(unitary.order().is_ascending());
        debug_assert_eq!(unitary.grading(), Grading::Even);
        Self {
            unitary,
            generator: None,
            time,
        }
    }

    pub fn support(&self) -> &ModeOrder {
        self.unitary.order()
    }

    pub fn unitary(&self) -> &OrderedOperator {
        &self.unitary
    }

    pub fn generator(&self) -> Option<&FermionPolynomial> {
        self.generator.as_ref()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn with_time(mut self, time: u64) -> Self {
        self.time = time;
        self
    }

    pub fn touches(&self, mode: usize) -> bool {
        self.support().contains(mode)
    }
}
