//! Seeded random generation of differential polynomials, sections and
//! operators, plus deterministic generic arguments with undetermined
//! parameter coefficients. Used by the randomized identity checks and the
//! test suites.

use num::{BigInt, One};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equation::CoveringMode;
use crate::operator::DiffOp;
use crate::poly::{DPoly, Generator, Rat, Role, VecFun};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small nonzero rational with numerator in [-3, 3] and denominator in
/// [1, 3].
pub fn rand_rat(rng: &mut ChaCha8Rng) -> Rat {
    let mut n = 0i64;
    while n == 0 {
        n = rng.gen_range(-3..=3);
    }
    let d = rng.gen_range(1..=3i64);
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Shape of a random polynomial: which generator families may appear, how
/// deep the jets go and how many factors a monomial may have.
#[derive(Debug, Clone, Copy)]
pub struct PolySpec {
    pub components: usize,
    pub max_jet: usize,
    pub max_degree: usize,
    pub terms: usize,
    pub mode: CoveringMode,
    pub allow_xt: bool,
}

impl PolySpec {
    pub fn plain(components: usize, max_jet: usize, max_degree: usize, terms: usize) -> Self {
        PolySpec {
            components,
            max_jet,
            max_degree,
            terms,
            mode: CoveringMode::Plain,
            allow_xt: false,
        }
    }
}

fn rand_generator(rng: &mut ChaCha8Rng, spec: &PolySpec) -> Generator {
    let families: &[u8] = match (spec.mode, spec.allow_xt) {
        (CoveringMode::Plain, false) => &[0],
        (CoveringMode::Plain, true) => &[0, 3, 3],
        (CoveringMode::LStar, false) => &[0, 1],
        (CoveringMode::LStar, true) => &[0, 1, 3],
        (CoveringMode::L, false) => &[0, 2],
        (CoveringMode::L, true) => &[0, 2, 3],
        (CoveringMode::Whitney, false) => &[0, 1, 2],
        (CoveringMode::Whitney, true) => &[0, 1, 2, 3],
    };
    let fam = families[rng.gen_range(0..families.len())];
    let comp = rng.gen_range(1..=spec.components);
    let order = rng.gen_range(0..=spec.max_jet);
    match fam {
        0 => Generator::jet(comp, order),
        1 => Generator::odd_p(comp, order),
        2 => Generator::odd_q(comp, order),
        _ => {
            if rng.gen_bool(0.5) {
                Generator::BaseX
            } else {
                Generator::BaseT
            }
        }
    }
}

pub fn rand_poly(rng: &mut ChaCha8Rng, spec: &PolySpec) -> DPoly {
    let mut out = DPoly::zero();
    for _ in 0..spec.terms {
        let mut term = DPoly::constant(rand_rat(rng));
        let degree = rng.gen_range(0..=spec.max_degree);
        for _ in 0..degree {
            term = term.mul(&DPoly::generator(rand_generator(rng, spec)));
        }
        out = out.add(&term);
    }
    out
}

pub fn rand_section(rng: &mut ChaCha8Rng, spec: &PolySpec) -> VecFun {
    VecFun::section((0..spec.components).map(|_| rand_poly(rng, spec)).collect())
}

/// Random operator with even polynomial coefficients.
pub fn rand_op(
    rng: &mut ChaCha8Rng,
    m: usize,
    max_order: usize,
    coeff_jet: usize,
    coeff_degree: usize,
) -> DiffOp {
    let spec = PolySpec::plain(m, coeff_jet, coeff_degree, 1);
    let mut op = DiffOp::zero(m, m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..=max_order {
                if rng.gen_bool(0.6) {
                    op.add_term(i, j, k, rand_poly(rng, &spec));
                }
            }
        }
    }
    op
}

/// Random skew-adjoint operator, built as S - S*.
pub fn rand_skew_op(
    rng: &mut ChaCha8Rng,
    m: usize,
    max_order: usize,
    coeff_jet: usize,
    coeff_degree: usize,
) -> DiffOp {
    let s = rand_op(rng, m, max_order, coeff_jet, coeff_degree);
    let s_star = s
        .adjoint(CoveringMode::Plain)
        .expect("plain adjoint of a random operator");
    s.sub(&s_star).expect("same shape")
}

/// Random x-polynomial covector/section of the given degree with small
/// rational coefficients: conclusive test arguments for operator
/// identities when the degree exceeds every derivative order applied.
pub fn rand_x_args(rng: &mut ChaCha8Rng, m: usize, degree: usize, role: Role) -> VecFun {
    let x = DPoly::generator(Generator::BaseX);
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let mut p = DPoly::zero();
        for a in 0..=degree {
            p = p.add(&x.pow(a as u32).scale(&rand_rat(rng)));
        }
        entries.push(p);
    }
    VecFun::new(entries, role)
}

/// Deterministic generic argument: component j is
/// sum_a <prefix>{j}_{a} x^a with fresh parameter coefficients.
pub fn generic_x_arg(m: usize, degree: usize, prefix: &str, role: Role) -> VecFun {
    let x = DPoly::generator(Generator::BaseX);
    let mut entries = Vec::with_capacity(m);
    for j in 1..=m {
        let mut p = DPoly::zero();
        for a in 0..=degree {
            let c = DPoly::generator(Generator::param(format!("{prefix}{j}_{a}")));
            p = p.add(&c.mul(&x.pow(a as u32)));
        }
        entries.push(p);
    }
    VecFun::new(entries, role)
}

/// One when the polynomial is exactly the constant 1; test helper.
pub fn is_one(p: &DPoly) -> bool {
    p == &DPoly::constant(Rat::one())
}
