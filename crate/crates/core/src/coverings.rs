//! Shadows of symmetries on the linearization coverings, their lifts to
//! honest covering symmetries, the shadow-level Jacobi brackets and the
//! polarization back to operator brackets.

use crate::brackets::{fn_bracket, schouten};
use crate::equation::{total_x_power, CoveringMode, EquationContext};
use crate::error::{CoreError, Result};
use crate::operator::{linearize, DiffOp};
use crate::poly::{rat, DPoly, Generator, Role, VecFun};

/// Which covering a shadow lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShadowFamily {
    /// p-linear functions encoding operators kappa-hat -> kappa.
    LStar,
    /// q-linear functions encoding operators kappa -> kappa.
    L,
}

impl ShadowFamily {
    pub fn mode(&self) -> CoveringMode {
        match self {
            ShadowFamily::LStar => CoveringMode::LStar,
            ShadowFamily::L => CoveringMode::L,
        }
    }
}

/// An odd-linear vector function on a covering, optionally remembering the
/// operator it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Shadow {
    pub value: VecFun,
    pub family: ShadowFamily,
    pub origin: Option<DiffOp>,
}

impl Shadow {
    /// Wrap a vector function, checking it is exactly linear in the odd
    /// family of the covering and free of the other family.
    pub fn new(value: VecFun, family: ShadowFamily) -> Result<Self> {
        for p in value.iter() {
            for (m, _) in p.terms() {
                let (dp, dq) = (m.odd_degree_p(), m.odd_degree_q());
                let ok = match family {
                    ShadowFamily::LStar => dp == 1 && dq == 0,
                    ShadowFamily::L => dq == 1 && dp == 0,
                };
                if !ok {
                    return Err(CoreError::NotLinear(format!(
                        "term {m:?} is not linear in the {family:?} odd family"
                    )));
                }
            }
        }
        let role = match family {
            ShadowFamily::LStar => Role::ShadowLStar,
            ShadowFamily::L => Role::ShadowL,
        };
        Ok(Shadow { value: value.with_role(role), family, origin: None })
    }

    pub fn zero(m: usize, family: ShadowFamily) -> Self {
        let role = match family {
            ShadowFamily::LStar => Role::ShadowLStar,
            ShadowFamily::L => Role::ShadowL,
        };
        Shadow { value: VecFun::zero(m, role), family, origin: None }
    }

    /// The encoded operator: the remembered origin, or the one read off the
    /// odd-linear coefficients.
    pub fn operator(&self) -> Result<DiffOp> {
        match &self.origin {
            Some(op) => Ok(op.clone()),
            None => from_shadow(self),
        }
    }
}

/// The m-vector (p^1_0, ..., p^m_0).
pub fn p_vector(m: usize) -> VecFun {
    VecFun::new(
        (1..=m).map(|j| DPoly::generator(Generator::odd_p(j, 0))).collect(),
        Role::Covector,
    )
}

/// The m-vector (q^1_0, ..., q^m_0).
pub fn q_vector(m: usize) -> VecFun {
    VecFun::new(
        (1..=m).map(|j| DPoly::generator(Generator::odd_q(j, 0))).collect(),
        Role::Section,
    )
}

/// Encode an operator as an odd-linear function: D^i acting in column j
/// becomes the odd generator of order i and component j.
pub fn to_shadow(a: &DiffOp, family: ShadowFamily) -> Result<Shadow> {
    if !a.is_square() {
        return Err(CoreError::ShapeMismatch("shadows encode square operators".into()));
    }
    let m = a.rows();
    let mut entries = Vec::with_capacity(m);
    for l in 0..m {
        let mut h = DPoly::zero();
        for j in 0..m {
            for (i, coeff) in a.entry(l, j) {
                CoveringMode::Plain.check(coeff)?;
                let odd = match family {
                    ShadowFamily::LStar => Generator::odd_p(j + 1, *i),
                    ShadowFamily::L => Generator::odd_q(j + 1, *i),
                };
                h = h.add(&coeff.mul(&DPoly::generator(odd)));
            }
        }
        entries.push(h);
    }
    let mut s = Shadow::new(VecFun::residual(entries), family)?;
    s.origin = Some(a.clone());
    Ok(s)
}

/// Decode an odd-linear function back into the operator it encodes.
pub fn from_shadow(s: &Shadow) -> Result<DiffOp> {
    let m = s.value.len();
    let mut op = DiffOp::zero(m, m);
    for (l, h) in s.value.iter().enumerate() {
        for (mono, c) in h.terms() {
            let odd = mono.odd_factors();
            if odd.len() != 1 {
                return Err(CoreError::NotLinear(format!("term of odd degree {}", odd.len())));
            }
            let (j, i) = match (&odd[0], s.family) {
                (Generator::OddP { comp, order }, ShadowFamily::LStar) => (*comp, *order),
                (Generator::OddQ { comp, order }, ShadowFamily::L) => (*comp, *order),
                _ => {
                    return Err(CoreError::NotLinear(
                        "odd generator from the wrong covering family".into(),
                    ));
                }
            };
            let coeff = DPoly::term(mono.even_only(), c.clone());
            op.add_term(l, j - 1, i, coeff);
        }
    }
    Ok(op)
}

/// A shadow completed to a symmetry of the covering: generators for the
/// even jets and for each odd family present.
#[derive(Debug, Clone)]
pub struct LiftedField {
    pub u_gen: VecFun,
    pub p_gen: Option<VecFun>,
    pub q_gen: Option<VecFun>,
}

impl LiftedField {
    /// Action of the completed derivation on a function of the covering.
    pub fn derive(&self, a: &DPoly) -> Result<DPoly> {
        let mode = CoveringMode::Whitney;
        let mut out = DPoly::zero();
        for g in a.generators() {
            let (gen_vec, comp, order) = match &g {
                Generator::EvenJet { comp, order } => (Some(&self.u_gen), *comp, *order),
                Generator::OddP { comp, order } => (self.p_gen.as_ref(), *comp, *order),
                Generator::OddQ { comp, order } => (self.q_gen.as_ref(), *comp, *order),
                _ => continue,
            };
            let Some(v) = gen_vec else { continue };
            let prefactor = total_x_power(mode, v.entry(comp - 1), order)?;
            out = out.add(&prefactor.mul(&a.partial(&g)));
        }
        Ok(out)
    }

    fn derive_vec(&self, v: &VecFun) -> Result<VecFun> {
        let mut out = Vec::with_capacity(v.len());
        for p in v.iter() {
            out.push(self.derive(p)?);
        }
        Ok(VecFun::residual(out))
    }

    /// Residuals of the symmetry condition against each covering relation:
    /// (u-relation, p-relation, q-relation). All must vanish for the field
    /// to be a symmetry of the covering equation.
    pub fn residuals(&self, ctx: &EquationContext) -> Result<Vec<VecFun>> {
        let mode = CoveringMode::Whitney;
        let mut out = Vec::new();
        out.push(ctx.ell_e(mode, &self.u_gen)?);
        if let Some(pg) = &self.p_gen {
            let mut res = Vec::with_capacity(ctx.components());
            for j in 0..ctx.components() {
                let dt = ctx.total_t(mode, pg.entry(j))?;
                let sg = self.derive(ctx.p_evolution().entry(j))?;
                res.push(dt.sub(&sg));
            }
            out.push(VecFun::residual(res));
        }
        if let Some(qg) = &self.q_gen {
            let mut res = Vec::with_capacity(ctx.components());
            for j in 0..ctx.components() {
                let dt = ctx.total_t(mode, qg.entry(j))?;
                let sg = self.derive(ctx.q_evolution().entry(j))?;
                res.push(dt.sub(&sg));
            }
            out.push(VecFun::residual(res));
        }
        Ok(out)
    }
}

fn require_shadow(ctx: &EquationContext, s: &Shadow) -> Result<()> {
    let res = ctx.ell_e(s.family.mode(), &s.value)?;
    if let Some((j, _)) = res.first_nonzero() {
        return Err(CoreError::NotAShadow(j + 1));
    }
    Ok(())
}

/// Completion of a p-linear shadow to a symmetry of the adjoint covering,
/// with p-components -1/2 adj(l_H)(p).
pub fn lift_lstar(ctx: &EquationContext, s: &Shadow) -> Result<LiftedField> {
    if s.family != ShadowFamily::LStar {
        return Err(CoreError::Invalid("expected a p-linear shadow".into()));
    }
    require_shadow(ctx, s)?;
    let m = ctx.components();
    let mode = CoveringMode::LStar;
    let alpha = linearize(m, &s.value)
        .adjoint(mode)?
        .apply(mode, &p_vector(m))?
        .scale(&rat(-1, 2));
    Ok(LiftedField {
        u_gen: s.value.clone(),
        p_gen: Some(alpha),
        q_gen: None,
    })
}

/// Completion of a q-linear shadow to a symmetry of the linearization
/// covering, with q-components l_N(q).
pub fn lift_l(ctx: &EquationContext, s: &Shadow) -> Result<LiftedField> {
    if s.family != ShadowFamily::L {
        return Err(CoreError::Invalid("expected a q-linear shadow".into()));
    }
    require_shadow(ctx, s)?;
    let m = ctx.components();
    let mode = CoveringMode::L;
    let beta = linearize(m, &s.value).apply(mode, &q_vector(m))?;
    Ok(LiftedField {
        u_gen: s.value.clone(),
        p_gen: None,
        q_gen: Some(beta),
    })
}

/// Completion of a shadow to a symmetry of the Whitney product, adding the
/// opposite odd family's components.
pub fn lift_whitney(ctx: &EquationContext, s: &Shadow) -> Result<LiftedField> {
    require_shadow(ctx, s)?;
    let m = ctx.components();
    let mode = CoveringMode::Whitney;
    match s.family {
        ShadowFamily::LStar => {
            let base = lift_lstar(ctx, s)?;
            let alpha_q = linearize(m, &s.value).apply(mode, &q_vector(m))?;
            Ok(LiftedField { q_gen: Some(alpha_q), ..base })
        }
        ShadowFamily::L => {
            let base = lift_l(ctx, s)?;
            let r_star = s.operator()?.adjoint(CoveringMode::Plain)?;
            let rho = linearize(m, &s.value)
                .adjoint_koszul(mode)?
                .apply(mode, &p_vector(m))?
                .add(
                    &r_star
                        .directional(mode, &q_vector(m))?
                        .apply(mode, &p_vector(m))?,
                );
            Ok(LiftedField { p_gen: Some(rho), ..base })
        }
    }
}

/// Jacobi bracket of two p-linear shadows in closed form; the result is
/// p-quadratic.
pub fn bracket_hh(s1: &Shadow, s2: &Shadow) -> Result<VecFun> {
    if s1.family != ShadowFamily::LStar || s2.family != ShadowFamily::LStar {
        return Err(CoreError::Invalid("bracket_hh expects p-linear shadows".into()));
    }
    let m = s1.value.len();
    let mode = CoveringMode::LStar;
    let a = s1.operator()?;
    let b = s2.operator()?;
    let p = p_vector(m);

    let la = linearize(m, &s1.value);
    let lb = linearize(m, &s2.value);
    let t1 = la.apply(mode, &s2.value)?.neg();
    let t2 = lb.apply(mode, &s1.value)?.neg();
    let t3 = a
        .apply(mode, &lb.adjoint(mode)?.apply(mode, &p)?)?
        .add(&b.apply(mode, &la.adjoint(mode)?.apply(mode, &p)?)?)
        .scale(&rat(-1, 2));
    Ok(t1.add(&t2).add(&t3))
}

/// Jacobi bracket of two q-linear shadows in closed form; q-quadratic.
pub fn bracket_nn(s1: &Shadow, s2: &Shadow) -> Result<VecFun> {
    if s1.family != ShadowFamily::L || s2.family != ShadowFamily::L {
        return Err(CoreError::Invalid("bracket_nn expects q-linear shadows".into()));
    }
    let m = s1.value.len();
    let mode = CoveringMode::L;
    let r = s1.operator()?;
    let s = s2.operator()?;
    let q = q_vector(m);

    let lr = linearize(m, &s1.value);
    let ls = linearize(m, &s2.value);
    let t1 = lr.apply(mode, &s2.value)?.neg();
    let t2 = ls.apply(mode, &s1.value)?.neg();
    let t3 = r.apply(mode, &ls.apply(mode, &q)?)?;
    let t4 = s.apply(mode, &lr.apply(mode, &q)?)?;
    Ok(t1.add(&t2).add(&t3).add(&t4))
}

/// Mixed Jacobi bracket of a p-linear and a q-linear shadow on the Whitney
/// product; bilinear in (p, q).
pub fn bracket_hn(h: &Shadow, n: &Shadow) -> Result<VecFun> {
    if h.family != ShadowFamily::LStar || n.family != ShadowFamily::L {
        return Err(CoreError::Invalid(
            "bracket_hn expects a p-linear and a q-linear shadow".into(),
        ));
    }
    let m = h.value.len();
    let mode = CoveringMode::Whitney;
    let a = h.operator()?;
    let r = n.operator()?;
    let r_star = r.adjoint(CoveringMode::Plain)?;
    let p = p_vector(m);
    let q = q_vector(m);

    let lh = linearize(m, &h.value);
    let ln = linearize(m, &n.value);
    let t1 = ln.apply(mode, &h.value)?.neg();
    let t2 = lh.apply(mode, &n.value)?.neg();
    // The completion of the q-side lift enters with the Koszul-signed
    // adjoint; with that convention the A-term carries a plus sign.
    let inner = ln
        .adjoint_koszul(mode)?
        .apply(mode, &p)?
        .add(&r_star.directional(mode, &q)?.apply(mode, &p)?);
    let t3 = a.apply(mode, &inner)?;
    let t4 = r.apply(mode, &lh.apply(mode, &q)?)?;
    Ok(t1.add(&t2).add(&t3).add(&t4))
}

/// Jacobi bracket of two shadows computed from the definition, through the
/// lifted covering symmetries. Used as the independent route for checking
/// the closed forms.
pub fn bracket_via_lifts(ctx: &EquationContext, s1: &Shadow, s2: &Shadow) -> Result<VecFun> {
    let (f1, f2) = if s1.family == s2.family {
        match s1.family {
            ShadowFamily::LStar => (lift_lstar(ctx, s1)?, lift_lstar(ctx, s2)?),
            ShadowFamily::L => (lift_l(ctx, s1)?, lift_l(ctx, s2)?),
        }
    } else {
        (lift_whitney(ctx, s1)?, lift_whitney(ctx, s2)?)
    };
    Ok(f1.derive_vec(&s2.value)?.add(&f2.derive_vec(&s1.value)?))
}

/// Evaluate an odd-quadratic function on two test arguments, recovering the
/// underlying bilinear operator value. p-jets are substituted from the
/// first argument's family source and q-jets from the second in the mixed
/// case; quadratic cases antisymmetrize. The normalization constant is 1,
/// fixed once by the calibration against the operator brackets.
pub fn polarize(f: &VecFun, arg1: &VecFun, arg2: &VecFun) -> Result<VecFun> {
    let mode = CoveringMode::Plain;
    let mut out = Vec::with_capacity(f.len());
    for component in f.iter() {
        let mut acc = DPoly::zero();
        for (mono, c) in component.terms() {
            let odd = mono.odd_factors();
            if odd.len() != 2 {
                return Err(CoreError::DegreeMismatch { expected: 2, found: odd.len() });
            }
            let even = DPoly::term(mono.even_only(), c.clone());
            let value = match (&odd[0], &odd[1]) {
                (
                    Generator::OddP { comp: j1, order: k1 },
                    Generator::OddP { comp: j2, order: k2 },
                ) => antisym_pair(mode, arg1, arg2, (*j1, *k1), (*j2, *k2))?,
                (
                    Generator::OddQ { comp: j1, order: k1 },
                    Generator::OddQ { comp: j2, order: k2 },
                ) => antisym_pair(mode, arg1, arg2, (*j1, *k1), (*j2, *k2))?,
                (
                    Generator::OddP { comp: j1, order: k1 },
                    Generator::OddQ { comp: j2, order: k2 },
                ) => {
                    let a = total_x_power(mode, arg1.entry(j1 - 1), *k1)?;
                    let b = total_x_power(mode, arg2.entry(j2 - 1), *k2)?;
                    a.mul(&b)
                }
                _ => {
                    return Err(CoreError::Invalid(
                        "unexpected odd pair ordering in canonical monomial".into(),
                    ));
                }
            };
            acc = acc.add(&even.mul(&value));
        }
        out.push(acc);
    }
    Ok(VecFun::residual(out))
}

fn antisym_pair(
    mode: CoveringMode,
    arg1: &VecFun,
    arg2: &VecFun,
    (j1, k1): (usize, usize),
    (j2, k2): (usize, usize),
) -> Result<DPoly> {
    let a1 = total_x_power(mode, arg1.entry(j1 - 1), k1)?;
    let b2 = total_x_power(mode, arg2.entry(j2 - 1), k2)?;
    let a2 = total_x_power(mode, arg2.entry(j1 - 1), k1)?;
    let b1 = total_x_power(mode, arg1.entry(j2 - 1), k2)?;
    Ok(a1.mul(&b2).sub(&a2.mul(&b1)))
}

/// The three shadow-vs-operator consistency checks in one place; each
/// returns the polarized shadow bracket and the operator bracket, which
/// must agree exactly.
pub fn consistency_hh(
    a: &DiffOp,
    b: &DiffOp,
    psi1: &VecFun,
    psi2: &VecFun,
) -> Result<(VecFun, VecFun)> {
    let sa = to_shadow(a, ShadowFamily::LStar)?;
    let sb = to_shadow(b, ShadowFamily::LStar)?;
    let shadow_route = polarize(&bracket_hh(&sa, &sb)?, psi1, psi2)?;
    let operator_route = schouten(CoveringMode::Plain, a, b, psi1, psi2)?;
    Ok((shadow_route, operator_route))
}

pub fn consistency_nn(
    r: &DiffOp,
    s: &DiffOp,
    phi1: &VecFun,
    phi2: &VecFun,
) -> Result<(VecFun, VecFun)> {
    let sr = to_shadow(r, ShadowFamily::L)?;
    let ss = to_shadow(s, ShadowFamily::L)?;
    let shadow_route = polarize(&bracket_nn(&sr, &ss)?, phi1, phi2)?;
    let operator_route = fn_bracket(CoveringMode::Plain, r, s, phi1, phi2)?;
    Ok((shadow_route, operator_route))
}

pub fn consistency_hn(
    a: &DiffOp,
    r: &DiffOp,
    psi: &VecFun,
    phi: &VecFun,
) -> Result<(VecFun, VecFun)> {
    let sa = to_shadow(a, ShadowFamily::LStar)?;
    let sr = to_shadow(r, ShadowFamily::L)?;
    let shadow_route = polarize(&bracket_hn(&sa, &sr)?, psi, phi)?;
    let operator_route = crate::brackets::c_star(CoveringMode::Plain, a, r, psi, phi)?;
    Ok((shadow_route, operator_route))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat_int;

    fn u(k: usize) -> DPoly {
        DPoly::generator(Generator::jet(1, k))
    }

    fn p(k: usize) -> DPoly {
        DPoly::generator(Generator::odd_p(1, k))
    }

    fn q(k: usize) -> DPoly {
        DPoly::generator(Generator::odd_q(1, k))
    }

    fn d() -> DiffOp {
        DiffOp::d_x(1, 1)
    }

    fn kdv_a2() -> DiffOp {
        DiffOp::scalar(vec![
            (DPoly::one(), 3),
            (u(0).scale(&rat(2, 3)), 1),
            (u(1).scale(&rat(1, 3)), 0),
        ])
    }

    fn kdv() -> EquationContext {
        let f = u(0).mul(&u(1)).add(&u(3));
        EquationContext::new("kdv", 1, VecFun::section(vec![f])).unwrap()
    }

    fn transport() -> EquationContext {
        EquationContext::new("transport", 1, VecFun::section(vec![u(1)])).unwrap()
    }

    #[test]
    fn to_shadow_examples() {
        let s = to_shadow(&d(), ShadowFamily::LStar).unwrap();
        assert_eq!(s.value.entry(0), &p(1));
        let s2 = to_shadow(&kdv_a2(), ShadowFamily::LStar).unwrap();
        let expected = p(3)
            .add(&u(0).mul(&p(1)).scale(&rat(2, 3)))
            .add(&u(1).mul(&p(0)).scale(&rat(1, 3)));
        assert_eq!(s2.value.entry(0), &expected);
        let s3 = to_shadow(&DiffOp::identity(1), ShadowFamily::L).unwrap();
        assert_eq!(s3.value.entry(0), &q(0));
    }

    #[test]
    fn shadow_round_trips() {
        for op in [d(), kdv_a2(), DiffOp::scalar(vec![(u(1).pow(2), 2), (u(0), 0)])] {
            let s = to_shadow(&op, ShadowFamily::LStar).unwrap();
            let bare = Shadow::new(s.value.clone(), ShadowFamily::LStar).unwrap();
            assert_eq!(from_shadow(&bare).unwrap(), op);
        }
    }

    #[test]
    fn from_shadow_rejects_nonlinear() {
        let bad = VecFun::residual(vec![p(0).mul(&p(1))]);
        assert!(Shadow::new(bad, ShadowFamily::LStar).is_err());
    }

    #[test]
    fn lift_lstar_on_kdv() {
        let ctx = kdv();
        // A = D: no even-jet dependence, completion vanishes.
        let s = to_shadow(&d(), ShadowFamily::LStar).unwrap();
        let lifted = lift_lstar(&ctx, &s).unwrap();
        assert!(lifted.p_gen.as_ref().unwrap().is_zero());
        for r in lifted.residuals(&ctx).unwrap() {
            assert!(r.is_zero());
        }
        // Second structure: alpha = 1/3 p0 p1, and the completed field is a
        // symmetry of the covering.
        let s2 = to_shadow(&kdv_a2(), ShadowFamily::LStar).unwrap();
        let lifted2 = lift_lstar(&ctx, &s2).unwrap();
        let expected = p(0).mul(&p(1)).scale(&rat(1, 3));
        assert_eq!(lifted2.p_gen.as_ref().unwrap().entry(0), &expected);
        for r in lifted2.residuals(&ctx).unwrap() {
            assert!(r.is_zero(), "nonzero residual {r}");
        }
    }

    #[test]
    fn lift_lstar_rejects_non_shadows() {
        let ctx = kdv();
        let s = to_shadow(&DiffOp::scalar(vec![(u(0), 1)]), ShadowFamily::LStar).unwrap();
        assert!(matches!(lift_lstar(&ctx, &s), Err(CoreError::NotAShadow(_))));
    }

    #[test]
    fn lift_l_examples() {
        // R = I on any equation: beta = 0.
        let ctx = kdv();
        let s = to_shadow(&DiffOp::identity(1), ShadowFamily::L).unwrap();
        let lifted = lift_l(&ctx, &s).unwrap();
        assert!(lifted.q_gen.as_ref().unwrap().is_zero());
        for r in lifted.residuals(&ctx).unwrap() {
            assert!(r.is_zero());
        }
        // R = u D on the transport equation: beta = -q0 q1, still a symmetry.
        let ctx2 = transport();
        let r = DiffOp::scalar(vec![(u(0), 1)]);
        let s2 = to_shadow(&r, ShadowFamily::L).unwrap();
        let lifted2 = lift_l(&ctx2, &s2).unwrap();
        assert_eq!(
            lifted2.q_gen.as_ref().unwrap().entry(0),
            &q(0).mul(&q(1)).neg()
        );
        for r in lifted2.residuals(&ctx2).unwrap() {
            assert!(r.is_zero(), "nonzero residual {r}");
        }
    }

    #[test]
    fn lift_whitney_examples() {
        let ctx = transport();
        // H = p_1: every completion vanishes.
        let h = to_shadow(&d(), ShadowFamily::LStar).unwrap();
        let lifted = lift_whitney(&ctx, &h).unwrap();
        assert!(lifted.q_gen.as_ref().unwrap().is_zero());
        for r in lifted.residuals(&ctx).unwrap() {
            assert!(r.is_zero());
        }
        // N = q_0 (R = I): rho = 0.
        let n = to_shadow(&DiffOp::identity(1), ShadowFamily::L).unwrap();
        let lifted_n = lift_whitney(&ctx, &n).unwrap();
        assert!(lifted_n.p_gen.as_ref().unwrap().is_zero());
        // N = u q_0 (R = u I) on the transport equation: symbolic rho with
        // vanishing symmetry residuals.
        let r_op = DiffOp::scalar(vec![(u(0), 0)]);
        let n2 = to_shadow(&r_op, ShadowFamily::L).unwrap();
        let lifted_n2 = lift_whitney(&ctx, &n2).unwrap();
        for r in lifted_n2.residuals(&ctx).unwrap() {
            assert!(r.is_zero(), "nonzero residual {r}");
        }
    }

    #[test]
    fn bracket_hh_examples() {
        let s_d = to_shadow(&d(), ShadowFamily::LStar).unwrap();
        assert!(bracket_hh(&s_d, &s_d).unwrap().is_zero());
        // The classical KdV pair is compatible.
        let s_a2 = to_shadow(&kdv_a2(), ShadowFamily::LStar).unwrap();
        let out = bracket_hh(&s_d, &s_a2).unwrap();
        assert!(out.is_zero(), "nonzero: {out}");
        let zero = Shadow::zero(1, ShadowFamily::LStar);
        assert!(bracket_hh(&s_a2, &zero).unwrap().is_zero());
    }

    #[test]
    fn bracket_nn_examples() {
        let s_d2 = to_shadow(&DiffOp::d_x(1, 2), ShadowFamily::L).unwrap();
        assert!(bracket_nn(&s_d2, &s_d2).unwrap().is_zero());
        let s_id = to_shadow(&DiffOp::identity(1), ShadowFamily::L).unwrap();
        let s_rich = to_shadow(
            &DiffOp::scalar(vec![(u(0), 1), (u(1).pow(2), 0)]),
            ShadowFamily::L,
        )
        .unwrap();
        assert!(bracket_nn(&s_id, &s_rich).unwrap().is_zero());
        let zero = Shadow::zero(1, ShadowFamily::L);
        assert!(bracket_nn(&s_rich, &zero).unwrap().is_zero());
    }

    #[test]
    fn bracket_hn_examples() {
        let h = to_shadow(&d(), ShadowFamily::LStar).unwrap();
        let n = to_shadow(&DiffOp::d_x(1, 2), ShadowFamily::L).unwrap();
        assert!(bracket_hn(&h, &n).unwrap().is_zero());
        // R = I is compatible with every Hamiltonian operator.
        let h_kdv = to_shadow(&kdv_a2(), ShadowFamily::LStar).unwrap();
        let n_id = to_shadow(&DiffOp::identity(1), ShadowFamily::L).unwrap();
        assert!(bracket_hn(&h_kdv, &n_id).unwrap().is_zero());
        let zero = Shadow::zero(1, ShadowFamily::LStar);
        assert!(bracket_hn(&zero, &n).unwrap().is_zero());
    }

    #[test]
    fn definition_route_matches_closed_forms() {
        // hh on the KdV pair.
        let ctx = kdv();
        let s1 = to_shadow(&d(), ShadowFamily::LStar).unwrap();
        let s2 = to_shadow(&kdv_a2(), ShadowFamily::LStar).unwrap();
        assert_eq!(
            bracket_via_lifts(&ctx, &s1, &s2).unwrap(),
            bracket_hh(&s1, &s2).unwrap()
        );
        // nn with nonconstant recursion operators of the transport equation.
        let ctx2 = transport();
        let r1 = to_shadow(&DiffOp::scalar(vec![(u(0), 0)]), ShadowFamily::L).unwrap();
        let r2 = to_shadow(&DiffOp::scalar(vec![(u(0), 1)]), ShadowFamily::L).unwrap();
        assert_eq!(
            bracket_via_lifts(&ctx2, &r1, &r2).unwrap(),
            bracket_nn(&r1, &r2).unwrap()
        );
    }

    #[test]
    fn polarize_basics() {
        let c = u(1);
        let f = VecFun::residual(vec![c.mul(&p(0)).mul(&p(1))]);
        let psi = VecFun::covector(vec![u(0)]);
        assert!(polarize(&f, &psi, &psi).unwrap().is_zero());
        let zero = VecFun::residual(vec![DPoly::zero()]);
        assert!(polarize(&zero, &psi, &psi).unwrap().is_zero());
        // p_1 p_2 polarizes to D(a) D^2(b) - D(b) D^2(a).
        let f2 = VecFun::residual(vec![p(1).mul(&p(2))]);
        let a = VecFun::covector(vec![u(0)]);
        let b = VecFun::covector(vec![u(0).pow(2)]);
        let out = polarize(&f2, &a, &b).unwrap();
        let u0 = u(0);
        let d1a = u(1);
        let d2a = u(2);
        let d1b = u0.mul(&u(1)).scale(&rat_int(2));
        let d2b = u(1).pow(2).scale(&rat_int(2)).add(&u0.mul(&u(2)).scale(&rat_int(2)));
        assert_eq!(out.entry(0), &d1a.mul(&d2b).sub(&d1b.mul(&d2a)));
    }

    #[test]
    fn polarize_rejects_wrong_degree() {
        let f = VecFun::residual(vec![p(0)]);
        let psi = VecFun::covector(vec![u(0)]);
        assert!(matches!(
            polarize(&f, &psi, &psi),
            Err(CoreError::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn calibration_case_hh() {
        // A = D, B = u_1 D + D u_1: both routes produce the same nonzero
        // value, pinning the polarization normalization to 1.
        let a = d();
        let b = DiffOp::scalar(vec![(u(1).scale(&rat_int(2)), 1), (u(2), 0)]);
        let psi1 = VecFun::covector(vec![u(0)]);
        let psi2 = VecFun::covector(vec![u(1).pow(2)]);
        let (shadow_route, operator_route) = consistency_hh(&a, &b, &psi1, &psi2).unwrap();
        assert!(!operator_route.is_zero());
        assert_eq!(shadow_route, operator_route);
        // The constant-coefficient pair A = D, B = uD + Du produces zero on
        // both routes.
        let b2 = DiffOp::scalar(vec![(u(0).scale(&rat_int(2)), 1), (u(1), 0)]);
        let (sr2, or2) = consistency_hh(&a, &b2, &psi1, &psi2).unwrap();
        assert!(sr2.is_zero());
        assert!(or2.is_zero());
    }

    #[test]
    fn consistency_mixed_example() {
        // A = uD + Du, R = u I: nonzero agreement of the mixed bracket with
        // the pairing operator.
        let a = DiffOp::scalar(vec![(u(0).scale(&rat_int(2)), 1), (u(1), 0)]);
        let r = DiffOp::scalar(vec![(u(0), 0)]);
        let psi = VecFun::covector(vec![u(0)]);
        let phi = VecFun::section(vec![u(1)]);
        let (shadow_route, operator_route) = consistency_hn(&a, &r, &psi, &phi).unwrap();
        assert!(!operator_route.is_zero());
        assert_eq!(shadow_route, operator_route);
    }
}
