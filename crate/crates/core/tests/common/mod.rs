//! Shared fixtures for the integration suites.

use varpn_core::equation::EquationContext;
use varpn_core::operator::DiffOp;
use varpn_core::poly::{rat, DPoly, Generator, VecFun};
use rand_chacha::ChaCha8Rng;
use rand::Rng;

pub fn u(k: usize) -> DPoly {
    DPoly::generator(Generator::jet(1, k))
}

pub fn kdv() -> EquationContext {
    let f = u(0).mul(&u(1)).add(&u(3));
    EquationContext::new("kdv", 1, VecFun::section(vec![f])).unwrap()
}

pub fn burgers() -> EquationContext {
    let f = u(0).mul(&u(1)).add(&u(2));
    EquationContext::new("burgers", 1, VecFun::section(vec![f])).unwrap()
}

pub fn linear3() -> EquationContext {
    EquationContext::new("linear3", 1, VecFun::section(vec![u(3)])).unwrap()
}

pub fn kdv_a1() -> DiffOp {
    DiffOp::d_x(1, 1)
}

pub fn kdv_a2() -> DiffOp {
    DiffOp::scalar(vec![
        (DPoly::one(), 3),
        (u(0).scale(&rat(2, 3)), 1),
        (u(1).scale(&rat(1, 3)), 0),
    ])
}

/// The parity-homogeneous part of a polynomial.
pub fn homogeneous_part(p: &DPoly, odd: bool) -> DPoly {
    let mut out = DPoly::zero();
    for (m, c) in p.terms() {
        if m.is_odd() == odd {
            out = out.add(&DPoly::term(m.clone(), c.clone()));
        }
    }
    out
}

/// Parity of a homogeneous polynomial (zero counts as even).
pub fn parity_of(p: &DPoly) -> bool {
    p.parity().expect("homogeneous input")
}

pub fn random_generator(rng: &mut ChaCha8Rng, allow_odd: bool) -> Generator {
    let comp = rng.gen_range(1..=2usize);
    let order = rng.gen_range(0..=3usize);
    match rng.gen_range(0..if allow_odd { 4 } else { 2 }) {
        0 => Generator::jet(comp, order),
        1 => Generator::BaseX,
        2 => Generator::odd_p(comp, order),
        _ => Generator::odd_q(comp, order),
    }
}

/// Structural canonicality: no stored zero coefficients.
pub fn assert_canonical(p: &DPoly) {
    let zero = varpn_core::poly::rat_int(0);
    for (_, c) in p.terms() {
        assert!(*c != zero, "stored zero coefficient");
    }
}
