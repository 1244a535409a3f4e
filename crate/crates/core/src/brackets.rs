//! Operator-level brackets and derived structures: the higher Jacobi
//! bracket, the variational Schouten bracket, the Frölicher--Nijenhuis
//! bracket, the compatibility operators C and C*, Lie derivatives, the
//! pairing and the Euler operator.
//!
//! All brackets are exposed as evaluators on explicit test arguments;
//! "the bracket vanishes" is certified by evaluating on generic arguments
//! of sufficient order (see [`crate::verify`]).

use crate::equation::{total_x_power, CoveringMode};
use crate::error::{CoreError, Result};
use crate::operator::{ev_derive, linearize, DiffOp};
use crate::poly::{DPoly, Generator, Role, VecFun};

/// A horizontal density `value dx`; equality of classes is tested modulo
/// the image of D_x via the Euler operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Density {
    pub value: DPoly,
}

impl Density {
    pub fn new(value: DPoly) -> Self {
        Density { value }
    }
}

/// l_{A,psi}(arg) = e_arg(A)(psi): directional derivative of the operator
/// coefficients along `arg`, evaluated at `psi`.
pub fn ell_dir(mode: CoveringMode, a: &DiffOp, psi: &VecFun, arg: &VecFun) -> Result<VecFun> {
    a.directional(mode, arg)?.apply(mode, psi)
}

/// The adjoint of the operator `phi -> e_phi(A)(psi)`.
pub fn ell_star(mode: CoveringMode, a: &DiffOp, psi: &VecFun) -> Result<DiffOp> {
    a.linearization_at(mode, psi)?.adjoint(mode)
}

/// Higher Jacobi bracket of two generating sections.
pub fn jacobi(mode: CoveringMode, m: usize, phi: &VecFun, psi: &VecFun) -> Result<VecFun> {
    if phi.len() != m || psi.len() != m {
        return Err(CoreError::ShapeMismatch(format!(
            "sections of length {} and {}, expected {m}",
            phi.len(),
            psi.len()
        )));
    }
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let a = ev_derive(mode, phi, psi.entry(j))?;
        let b = ev_derive(mode, psi, phi.entry(j))?;
        out.push(a.sub(&b));
    }
    Ok(VecFun::new(out, Role::Section))
}

/// Variational Schouten bracket of two skew-adjoint operators, evaluated
/// on two covectors.
pub fn schouten(
    mode: CoveringMode,
    a: &DiffOp,
    b: &DiffOp,
    psi1: &VecFun,
    psi2: &VecFun,
) -> Result<VecFun> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(CoreError::ShapeMismatch(
            "schouten bracket needs square operators of equal size".into(),
        ));
    }
    let a_psi1 = a.apply(mode, psi1)?;
    let a_psi2 = a.apply(mode, psi2)?;
    let b_psi1 = b.apply(mode, psi1)?;
    let b_psi2 = b.apply(mode, psi2)?;

    let t1 = ell_dir(mode, a, psi1, &b_psi2)?.neg();
    let t2 = ell_dir(mode, a, psi2, &b_psi1)?;
    let t3 = a.apply(mode, &ell_star(mode, b, psi1)?.apply(mode, psi2)?)?.neg();
    let t4 = ell_dir(mode, b, psi1, &a_psi2)?.neg();
    let t5 = ell_dir(mode, b, psi2, &a_psi1)?;
    let t6 = b.apply(mode, &ell_star(mode, a, psi1)?.apply(mode, psi2)?)?.neg();

    Ok(t1.add(&t2).add(&t3).add(&t4).add(&t5).add(&t6).with_role(Role::Section))
}

/// Frölicher--Nijenhuis bracket of two operators kappa -> kappa, evaluated
/// on two sections.
pub fn fn_bracket(
    mode: CoveringMode,
    r: &DiffOp,
    s: &DiffOp,
    phi1: &VecFun,
    phi2: &VecFun,
) -> Result<VecFun> {
    if !r.is_square() || !s.is_square() || r.rows() != s.rows() {
        return Err(CoreError::ShapeMismatch(
            "Frölicher-Nijenhuis bracket needs square operators of equal size".into(),
        ));
    }
    let r_phi1 = r.apply(mode, phi1)?;
    let r_phi2 = r.apply(mode, phi2)?;
    let s_phi1 = s.apply(mode, phi1)?;
    let s_phi2 = s.apply(mode, phi2)?;

    let t1 = ell_dir(mode, r, phi1, &s_phi2)?.neg();
    let t2 = ell_dir(mode, s, phi1, &r_phi2)?.neg();
    let t3 = ell_dir(mode, r, phi2, &s_phi1)?;
    let t4 = ell_dir(mode, s, phi2, &r_phi1)?;
    let inner_s = ell_dir(mode, s, phi1, phi2)?.sub(&ell_dir(mode, s, phi2, phi1)?);
    let t5 = r.apply(mode, &inner_s)?;
    let inner_r = ell_dir(mode, r, phi1, phi2)?.sub(&ell_dir(mode, r, phi2, phi1)?);
    let t6 = s.apply(mode, &inner_r)?;

    Ok(t1.add(&t2).add(&t3).add(&t4).add(&t5).add(&t6).with_role(Role::Section))
}

/// Compatibility operator C(A,R) of a Poisson--Nijenhuis candidate pair,
/// in linearization form, evaluated on two covectors.
pub fn c_compat(
    mode: CoveringMode,
    a: &DiffOp,
    r: &DiffOp,
    psi1: &VecFun,
    psi2: &VecFun,
) -> Result<VecFun> {
    let r_star = r.adjoint(mode)?;
    let a_psi1 = a.apply(mode, psi1)?;
    let a_psi2 = a.apply(mode, psi2)?;

    let t1 = ell_dir(mode, &r_star, psi1, &a_psi2)?.neg();
    let t2 = ell_dir(mode, &r_star, psi2, &a_psi1)?;
    let t3 = ell_star(mode, a, psi1)?.apply(mode, &r_star.apply(mode, psi2)?)?;
    let t4 = ell_star(mode, &r_star, psi1)?.apply(mode, &a_psi2)?;
    let t5 = r_star
        .apply(mode, &ell_star(mode, a, psi1)?.apply(mode, psi2)?)?
        .neg();

    Ok(t1.add(&t2).add(&t3).add(&t4).add(&t5).with_role(Role::Covector))
}

/// The operator C*(A,R) paired with C(A,R) through the variational pairing,
/// evaluated on a covector and a section.
pub fn c_star(
    mode: CoveringMode,
    a: &DiffOp,
    r: &DiffOp,
    psi: &VecFun,
    phi: &VecFun,
) -> Result<VecFun> {
    let r_star = r.adjoint(mode)?;
    let a_psi = a.apply(mode, psi)?;
    let r_phi = r.apply(mode, phi)?;

    let t1 = ell_dir(mode, a, psi, &r_phi)?.neg();
    let t2 = ell_dir(mode, r, phi, &a_psi)?;
    let t3 = r.apply(mode, &ell_dir(mode, a, psi, phi)?)?;
    let inner = ell_star(mode, r, phi)?
        .apply(mode, psi)?
        .sub(&ell_dir(mode, &r_star, psi, phi)?);
    let t4 = a.apply(mode, &inner)?;

    Ok(t1.add(&t2).add(&t3).add(&t4).with_role(Role::Section))
}

/// Lie derivative along a generating section acting on sections.
pub fn lie_on_sections(mode: CoveringMode, phi: &VecFun, target: &VecFun) -> Result<VecFun> {
    let ell_phi = linearize(phi.len(), phi);
    let mut out = Vec::with_capacity(target.len());
    let lin = ell_phi.apply(mode, target)?;
    for j in 0..target.len() {
        out.push(ev_derive(mode, phi, target.entry(j))?.sub(lin.entry(j)));
    }
    Ok(VecFun::new(out, Role::Section))
}

/// Lie derivative along a generating section acting on covectors.
pub fn lie_on_covectors(mode: CoveringMode, phi: &VecFun, target: &VecFun) -> Result<VecFun> {
    let ell_phi_star = linearize(phi.len(), phi).adjoint(mode)?;
    let lin = ell_phi_star.apply(mode, target)?;
    let mut out = Vec::with_capacity(target.len());
    for j in 0..target.len() {
        out.push(ev_derive(mode, phi, target.entry(j))?.add(lin.entry(j)));
    }
    Ok(VecFun::new(out, Role::Covector))
}

/// Natural pairing of a covector with a section as a horizontal density.
pub fn pairing(psi: &VecFun, phi: &VecFun) -> Result<Density> {
    if psi.len() != phi.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "pairing of lengths {} and {}",
            psi.len(),
            phi.len()
        )));
    }
    let mut value = DPoly::zero();
    for j in 0..psi.len() {
        value = value.add(&psi.entry(j).mul(phi.entry(j)));
    }
    Ok(Density::new(value))
}

/// Euler operator (variational derivative): component j is
/// sum_k (-D_x)^k d(omega)/d(u^j_k). Annihilates total x-derivatives.
pub fn euler_operator(m: usize, omega: &Density) -> Result<VecFun> {
    CoveringMode::Plain.check(&omega.value)?;
    let mut out = Vec::with_capacity(m);
    for j in 1..=m {
        let mut acc = DPoly::zero();
        for g in omega.value.generators() {
            if let Generator::EvenJet { comp, order } = g {
                if comp != j {
                    continue;
                }
                let d = omega.value.partial(&Generator::jet(comp, order));
                let mut term = total_x_power(CoveringMode::Plain, &d, order)?;
                if order % 2 == 1 {
                    term = term.neg();
                }
                acc = acc.add(&term);
            }
        }
        out.push(acc);
    }
    Ok(VecFun::new(out, Role::Covector))
}

/// Whether a density is a total x-derivative up to a constant, i.e. its
/// variational derivative vanishes in every component.
pub fn euler_trivial(m: usize, omega: &Density) -> Result<bool> {
    Ok(euler_operator(m, omega)?.is_zero())
}

/// Divergence defect of Green's identity for one operator and a pair of
/// arguments: E(<psi, A phi> - <A* psi, phi>), which must vanish.
pub fn green_defect(mode: CoveringMode, a: &DiffOp, psi: &VecFun, phi: &VecFun) -> Result<VecFun> {
    let lhs = pairing(psi, &a.apply(mode, phi)?)?;
    let rhs = pairing(&a.adjoint(mode)?.apply(mode, psi)?, phi)?;
    euler_operator(psi.len(), &Density::new(lhs.value.sub(&rhs.value)))
}
