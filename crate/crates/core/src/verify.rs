//! High-level predicates and theorem-scale checks: symmetries,
//! cosymmetries, conservation laws, Hamiltonian and Nijenhuis properties,
//! Poisson--Nijenhuis compatibility, hierarchy generation and the
//! proof-identity regression suite.

use std::fmt;

use crate::brackets::{c_compat, fn_bracket, schouten};
use crate::coverings::{bracket_hn, to_shadow, ShadowFamily};
use crate::equation::{total_x, CoveringMode, EquationContext};
use crate::error::{CoreError, Result};
use crate::operator::{ev_derive, DiffOp};
use crate::poly::{rat, rat_int, DPoly, Generator, Role, VecFun};
use crate::sample;

/// Boolean result with a symbolic witness for failures and a label of the
/// computation path that decided it.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub route: String,
}

#[derive(Debug, Clone)]
pub enum Witness {
    Poly(DPoly),
    Vec(VecFun),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Poly(p) => write!(f, "{p}"),
            Witness::Vec(v) => write!(f, "{v}"),
        }
    }
}

impl Verdict {
    pub fn pass(route: impl Into<String>) -> Self {
        Verdict { holds: true, witness: None, route: route.into() }
    }

    pub fn fail_vec(route: impl Into<String>, witness: VecFun) -> Self {
        Verdict {
            holds: false,
            witness: Some(Witness::Vec(witness)),
            route: route.into(),
        }
    }

    pub fn fail_poly(route: impl Into<String>, witness: DPoly) -> Self {
        Verdict {
            holds: false,
            witness: Some(Witness::Poly(witness)),
            route: route.into(),
        }
    }

    fn from_residual(route: &str, residual: VecFun) -> Self {
        if residual.is_zero() {
            Verdict::pass(route)
        } else {
            Verdict::fail_vec(route, residual)
        }
    }
}

/// phi is a symmetry iff the linearized equation annihilates it.
pub fn is_symmetry(ctx: &EquationContext, phi: &VecFun) -> Result<Verdict> {
    let residual = ctx.ell_e(CoveringMode::Plain, phi)?;
    Ok(Verdict::from_residual("linearized-equation residual", residual))
}

/// psi is a cosymmetry iff the adjoint linearized equation annihilates it.
pub fn is_cosymmetry(ctx: &EquationContext, psi: &VecFun) -> Result<Verdict> {
    let residual = ctx.ell_e_star(CoveringMode::Plain, psi)?;
    Ok(Verdict::from_residual("adjoint linearized-equation residual", residual))
}

/// A horizontal 1-form X dx + T dt.
#[derive(Debug, Clone)]
pub struct ConservationLaw {
    pub x: DPoly,
    pub t: DPoly,
}

pub fn is_conservation_law(ctx: &EquationContext, cl: &ConservationLaw) -> Result<Verdict> {
    let lhs = ctx.total_t(CoveringMode::Plain, &cl.x)?;
    let rhs = total_x(CoveringMode::Plain, &cl.t)?;
    let defect = lhs.sub(&rhs);
    if defect.is_zero() {
        Ok(Verdict::pass("D_t(X) - D_x(T)"))
    } else {
        Ok(Verdict::fail_poly("D_t(X) - D_x(T)", defect))
    }
}

/// Variational derivative of the X-component; for a conservation law this
/// is its generating function, which is a cosymmetry.
pub fn generating_function(ctx: &EquationContext, cl: &ConservationLaw) -> Result<VecFun> {
    let density = crate::brackets::Density::new(cl.x.clone());
    crate::brackets::euler_operator(ctx.components(), &density)
}

/// Highest jet order appearing in the operator coefficients.
pub fn coeff_jet_order(op: &DiffOp) -> usize {
    let mut out = 0;
    for i in 0..op.rows() {
        for j in 0..op.cols() {
            for coeff in op.entry(i, j).values() {
                for g in coeff.generators() {
                    if let Generator::EvenJet { order, .. } = g {
                        out = out.max(order);
                    }
                }
            }
        }
    }
    out
}

/// Degree of generic x-polynomial arguments that makes vanishing of a
/// bilinear C-differential expression in the two operators conclusive.
pub fn generic_degree(a: &DiffOp, b: &DiffOp, extra: usize) -> usize {
    a.order() + b.order() + coeff_jet_order(a).max(coeff_jet_order(b)) + extra
}

fn generic_pair(m: usize, degree: usize, role: Role) -> (VecFun, VecFun) {
    (
        sample::generic_x_arg(m, degree, "ga", role),
        sample::generic_x_arg(m, degree, "gb", role),
    )
}

/// A is Hamiltonian iff it is skew-adjoint, its shadow solves the lifted
/// linearized equation, and its Schouten square vanishes on generic
/// arguments. The route labels the first conjunct that failed.
pub fn is_hamiltonian(ctx: &EquationContext, a: &DiffOp) -> Result<Verdict> {
    let mode = CoveringMode::Plain;
    let skew_defect = a.adjoint(mode)?.add(a)?;
    if !skew_defect.is_zero() {
        let w = to_shadow(&skew_defect, ShadowFamily::LStar)?.value;
        return Ok(Verdict::fail_vec("skew-adjointness", w));
    }
    let shadow = to_shadow(a, ShadowFamily::LStar)?;
    let residual = ctx.ell_e(CoveringMode::LStar, &shadow.value)?;
    if !residual.is_zero() {
        return Ok(Verdict::fail_vec("shadow invariance", residual));
    }
    let degree = generic_degree(a, a, ctx.max_order() + 2);
    let (psi1, psi2) = generic_pair(ctx.components(), degree, Role::Covector);
    let value = schouten(mode, a, a, &psi1, &psi2)?;
    if !value.is_zero() {
        return Ok(Verdict::fail_vec("schouten square on generic arguments", value));
    }
    Ok(Verdict::pass("skew-adjoint, invariant, schouten square zero"))
}

/// R is invariant (a recursion operator) iff its q-linear shadow solves the
/// lifted linearized equation.
pub fn is_recursion(ctx: &EquationContext, r: &DiffOp) -> Result<Verdict> {
    let shadow = to_shadow(r, ShadowFamily::L)?;
    let residual = ctx.ell_e(CoveringMode::L, &shadow.value)?;
    Ok(Verdict::from_residual("shadow invariance", residual))
}

/// R is a Nijenhuis recursion operator iff it is invariant and its FN
/// square vanishes on generic arguments.
pub fn is_nijenhuis_recursion(ctx: &EquationContext, r: &DiffOp) -> Result<Verdict> {
    let inv = is_recursion(ctx, r)?;
    if !inv.holds {
        return Ok(inv);
    }
    let degree = generic_degree(r, r, ctx.max_order() + 2);
    let (phi1, phi2) = generic_pair(ctx.components(), degree, Role::Section);
    let value = fn_bracket(CoveringMode::Plain, r, r, &phi1, &phi2)?;
    if !value.is_zero() {
        return Ok(Verdict::fail_vec("FN square on generic arguments", value));
    }
    Ok(Verdict::pass("invariant, FN square zero"))
}

/// Poisson--Nijenhuis pair check: Hamiltonian A, Nijenhuis R, the
/// intertwining R A = A R*, the compatibility operator C(A,R) vanishing on
/// generic arguments, and the mixed shadow bracket vanishing. The last two
/// are cross-checking routes for the same condition.
pub fn is_pn_pair(ctx: &EquationContext, a: &DiffOp, r: &DiffOp) -> Result<Verdict> {
    let mode = CoveringMode::Plain;
    let ham = is_hamiltonian(ctx, a)?;
    if !ham.holds {
        return Ok(Verdict { route: format!("A: {}", ham.route), ..ham });
    }
    let nij = is_nijenhuis_recursion(ctx, r)?;
    if !nij.holds {
        return Ok(Verdict { route: format!("R: {}", nij.route), ..nij });
    }
    let ra = r.compose(mode, a)?;
    let ar_star = a.compose(mode, &r.adjoint(mode)?)?;
    let defect = ra.sub(&ar_star)?;
    if !defect.is_zero() {
        let w = to_shadow(&defect, ShadowFamily::LStar)?.value;
        return Ok(Verdict::fail_vec("R o A = A o R*", w));
    }
    let degree = generic_degree(a, r, ctx.max_order() + 2);
    let (psi1, psi2) = generic_pair(ctx.components(), degree, Role::Covector);
    let c = c_compat(mode, a, r, &psi1, &psi2)?;
    if !c.is_zero() {
        return Ok(Verdict::fail_vec("C(A,R) on generic arguments", c));
    }
    let h = to_shadow(a, ShadowFamily::LStar)?;
    let n = to_shadow(r, ShadowFamily::L)?;
    let mixed = bracket_hn(&h, &n)?;
    if !mixed.is_zero() {
        return Ok(Verdict::fail_vec("mixed shadow bracket", mixed));
    }
    Ok(Verdict::pass("PN pair: all conjuncts hold"))
}

/// The hierarchy of iterated operators R^i A with pairwise compatibility
/// verdicts and per-operator skewness/invariance checks.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub operators: Vec<DiffOp>,
    pub compatible: Vec<Vec<bool>>,
    pub skew: Vec<bool>,
    pub invariant: Vec<bool>,
}

impl Hierarchy {
    pub fn all_hold(&self) -> bool {
        self.skew.iter().all(|&b| b)
            && self.invariant.iter().all(|&b| b)
            && self.compatible.iter().flatten().all(|&b| b)
    }
}

pub fn hierarchy(
    ctx: &EquationContext,
    a: &DiffOp,
    r: &DiffOp,
    n: usize,
) -> Result<Hierarchy> {
    let pn = is_pn_pair(ctx, a, r)?;
    if !pn.holds {
        return Err(CoreError::PreconditionFailed(format!(
            "not a Poisson-Nijenhuis pair ({})",
            pn.route
        )));
    }
    let mode = CoveringMode::Plain;
    let mut operators = vec![a.clone()];
    for _ in 0..n {
        let next = r.compose(mode, operators.last().unwrap())?;
        operators.push(next);
    }
    let mut skew = Vec::with_capacity(operators.len());
    let mut invariant = Vec::with_capacity(operators.len());
    for op in &operators {
        skew.push(op.adjoint(mode)?.add(op)?.is_zero());
        let shadow = to_shadow(op, ShadowFamily::LStar)?;
        invariant.push(ctx.ell_e(CoveringMode::LStar, &shadow.value)?.is_zero());
    }
    let mut compatible = vec![vec![false; operators.len()]; operators.len()];
    for i in 0..operators.len() {
        for j in i..operators.len() {
            let degree = generic_degree(&operators[i], &operators[j], ctx.max_order() + 2);
            let (psi1, psi2) = generic_pair(ctx.components(), degree, Role::Covector);
            let ok = schouten(mode, &operators[i], &operators[j], &psi1, &psi2)?.is_zero();
            compatible[i][j] = ok;
            compatible[j][i] = ok;
        }
    }
    Ok(Hierarchy { operators, compatible, skew, invariant })
}

/// Operator-route invariance defect for a candidate Hamiltonian operator:
/// coefficientwise D_t(A) - (l_f o A + A o l_f^*). Zero iff the shadow of
/// A solves the lifted linearized equation.
pub fn invariance_defect_ham(ctx: &EquationContext, a: &DiffOp) -> Result<DiffOp> {
    let mode = CoveringMode::Plain;
    let dt_a = op_dt(ctx, a)?;
    let lhs = ctx.ell_f().compose(mode, a)?;
    let rhs = a.compose(mode, ctx.ell_f_star())?;
    dt_a.sub(&lhs.add(&rhs)?)
}

/// Operator-route invariance defect for a candidate recursion operator:
/// coefficientwise D_t(R) - [l_f, R].
pub fn invariance_defect_rec(ctx: &EquationContext, r: &DiffOp) -> Result<DiffOp> {
    let mode = CoveringMode::Plain;
    let dt_r = op_dt(ctx, r)?;
    let lhs = ctx.ell_f().compose(mode, r)?;
    let rhs = r.compose(mode, ctx.ell_f())?;
    dt_r.sub(&lhs.sub(&rhs)?)
}

/// Coefficientwise flow derivative d/dt + e_f.
fn op_dt(ctx: &EquationContext, op: &DiffOp) -> Result<DiffOp> {
    let mut out = DiffOp::zero(op.rows(), op.cols());
    for i in 0..op.rows() {
        for j in 0..op.cols() {
            for (k, c) in op.entry(i, j) {
                let dt = c
                    .partial(&Generator::BaseT)
                    .add(&ev_derive(CoveringMode::Plain, ctx.rhs(), c)?);
                out.add_term(i, j, *k, dt);
            }
        }
    }
    Ok(out)
}

/// The five proof identities behind the hierarchy theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    /// [[RA,RA]] - 2R[[A,RA]] + R^2[[A,A]] - [R,R]_FN(A.,A.)
    IterSquare,
    /// 2[[A,RA]] - [[A,A]](R*.,.) - [[A,A]](.,R*.) - 2A(C(A,R))
    IterCross,
    /// Two-operator version of IterSquare.
    IterSquareTwo,
    /// Two-operator version of IterCross.
    IterCrossTwo,
    /// C(RA,R) + C(A,R^2) - C(A,R)(R*.,.) - C(A,R)(.,R*.) - R*(C(A,R))
    CompatShift,
}

pub const IDENTITY_KINDS: [IdentityKind; 5] = [
    IdentityKind::IterSquare,
    IdentityKind::IterCross,
    IdentityKind::IterSquareTwo,
    IdentityKind::IterCrossTwo,
    IdentityKind::CompatShift,
];

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            IdentityKind::IterSquare => "iter-square",
            IdentityKind::IterCross => "iter-cross",
            IdentityKind::IterSquareTwo => "iter-square-two",
            IdentityKind::IterCrossTwo => "iter-cross-two",
            IdentityKind::CompatShift => "compat-shift",
        };
        write!(f, "{name}")
    }
}

/// The signed terms of one proof identity evaluated on explicit arguments;
/// the identity asserts that they sum to zero. Exposing the terms lets the
/// mutation test flip each sign separately.
pub fn identity_terms(
    kind: IdentityKind,
    a: &DiffOp,
    b: &DiffOp,
    r: &DiffOp,
    psi1: &VecFun,
    psi2: &VecFun,
) -> Result<Vec<VecFun>> {
    let mode = CoveringMode::Plain;
    let ra = r.compose(mode, a)?;
    let rb = r.compose(mode, b)?;
    let rr = r.compose(mode, r)?;
    let r_star = r.adjoint(mode)?;
    let rs_psi1 = r_star.apply(mode, psi1)?.with_role(Role::Covector);
    let rs_psi2 = r_star.apply(mode, psi2)?.with_role(Role::Covector);
    let a_psi1 = a.apply(mode, psi1)?;
    let a_psi2 = a.apply(mode, psi2)?;

    let terms = match kind {
        IdentityKind::IterSquare => vec![
            schouten(mode, &ra, &ra, psi1, psi2)?,
            r.apply(mode, &schouten(mode, a, &ra, psi1, psi2)?)?
                .scale(&rat_int(-2)),
            rr.apply(mode, &schouten(mode, a, a, psi1, psi2)?)?,
            fn_bracket(mode, r, r, &a_psi1, &a_psi2)?.neg(),
        ],
        IdentityKind::IterCross => vec![
            schouten(mode, a, &ra, psi1, psi2)?.scale(&rat_int(2)),
            schouten(mode, a, a, &rs_psi1, psi2)?.neg(),
            schouten(mode, a, a, psi1, &rs_psi2)?.neg(),
            a.apply(mode, &c_compat(mode, a, r, psi1, psi2)?)?
                .scale(&rat_int(-2)),
        ],
        IdentityKind::IterSquareTwo => {
            // The mixed FN terms carry weight 1/2: polarizing the square
            // identity in A -> A + B fixes the normalization (the forms
            // coincide when FN(R,R) vanishes).
            let b_psi1 = b.apply(mode, psi1)?;
            let b_psi2 = b.apply(mode, psi2)?;
            vec![
                schouten(mode, &ra, &rb, psi1, psi2)?,
                r.apply(mode, &schouten(mode, &ra, b, psi1, psi2)?)?.neg(),
                r.apply(mode, &schouten(mode, a, &rb, psi1, psi2)?)?.neg(),
                rr.apply(mode, &schouten(mode, a, b, psi1, psi2)?)?,
                fn_bracket(mode, r, r, &a_psi1, &b_psi2)?.scale(&rat(-1, 2)),
                fn_bracket(mode, r, r, &b_psi1, &a_psi2)?.scale(&rat(-1, 2)),
            ]
        }
        IdentityKind::IterCrossTwo => vec![
            schouten(mode, &ra, b, psi1, psi2)?,
            schouten(mode, a, &rb, psi1, psi2)?,
            schouten(mode, a, b, &rs_psi1, psi2)?.neg(),
            schouten(mode, a, b, psi1, &rs_psi2)?.neg(),
            a.apply(mode, &c_compat(mode, b, r, psi1, psi2)?)?.neg(),
            b.apply(mode, &c_compat(mode, a, r, psi1, psi2)?)?.neg(),
        ],
        IdentityKind::CompatShift => vec![
            c_compat(mode, &ra, r, psi1, psi2)?,
            c_compat(mode, a, &rr, psi1, psi2)?,
            c_compat(mode, a, r, &rs_psi1, psi2)?.neg(),
            c_compat(mode, a, r, psi1, &rs_psi2)?.neg(),
            r_star
                .apply(mode, &c_compat(mode, a, r, psi1, psi2)?)?
                .neg(),
        ],
    };
    Ok(terms)
}

pub fn identity_value(
    kind: IdentityKind,
    a: &DiffOp,
    b: &DiffOp,
    r: &DiffOp,
    psi1: &VecFun,
    psi2: &VecFun,
) -> Result<VecFun> {
    let terms = identity_terms(kind, a, b, r, psi1, psi2)?;
    let mut acc = VecFun::zero(psi1.len(), Role::Residual);
    for t in &terms {
        acc = acc.add(t);
    }
    Ok(acc)
}

/// Evaluate all five proof identities on `trials` random argument draws;
/// holds iff every residual is the zero polynomial.
///
/// The last three identities require the intertwining relation
/// R o A = A o R* (and B from the iterated family R^k A); they are false
/// for unconstrained R, so callers must draw operators accordingly, e.g.
/// via [`identity_family_draw`].
pub fn identity_suite(
    ctx: &EquationContext,
    a: &DiffOp,
    b: &DiffOp,
    r: &DiffOp,
    trials: usize,
    seed: u64,
) -> Result<Verdict> {
    if a.rows() != ctx.components() || b.rows() != ctx.components() || r.rows() != ctx.components()
    {
        return Err(CoreError::ShapeMismatch(
            "identity suite operators must match the equation size".into(),
        ));
    }
    let m = ctx.components();
    let degree = a.order() + b.order() + 2 * r.order() + coeff_jet_order(a)
        .max(coeff_jet_order(b))
        .max(coeff_jet_order(r))
        + 2;
    let mut rng = sample::rng(seed);
    for trial in 0..trials {
        let psi1 = sample::rand_x_args(&mut rng, m, degree, Role::Covector);
        let psi2 = sample::rand_x_args(&mut rng, m, degree, Role::Covector);
        for kind in IDENTITY_KINDS {
            let value = identity_value(kind, a, b, r, &psi1, &psi2)?;
            if !value.is_zero() {
                return Ok(Verdict::fail_vec(
                    format!("identity {kind} failed on trial {trial}"),
                    value,
                ));
            }
        }
    }
    Ok(Verdict::pass(format!("all five identities over {trials} trials")))
}

/// Random triple (A, B, R) on which the proof identities hold: A = S - S*
/// skew-adjoint, R = A o W with W skew (so that R A = A R*), and
/// B = R^j A for j in {0, 1, 2}.
pub fn identity_family_draw(
    rng: &mut rand_chacha::ChaCha8Rng,
    m: usize,
    order: usize,
    coeff_jet: usize,
    coeff_degree: usize,
    b_power: usize,
) -> Result<(DiffOp, DiffOp, DiffOp)> {
    let mode = CoveringMode::Plain;
    let a = sample::rand_skew_op(rng, m, order, coeff_jet, coeff_degree);
    let w = sample::rand_skew_op(rng, m, order, coeff_jet, coeff_degree);
    let r = a.compose(mode, &w)?;
    let mut b = a.clone();
    for _ in 0..b_power {
        b = r.compose(mode, &b)?;
    }
    Ok((a, b, r))
}

/// Run the identity suite on freshly drawn compatible triples, one per
/// trial, with random argument pairs.
pub fn identity_suite_randomized(
    ctx: &EquationContext,
    trials: usize,
    seed: u64,
) -> Result<Verdict> {
    let m = ctx.components();
    let mut rng = sample::rng(seed);
    for trial in 0..trials {
        let (a, b, r) = identity_family_draw(&mut rng, m, 1, 1, 1, trial % 3)?;
        let v = identity_suite(ctx, &a, &b, &r, 1, seed.wrapping_add(trial as u64))?;
        if !v.holds {
            return Ok(Verdict {
                route: format!("trial {trial}: {}", v.route),
                ..v
            });
        }
    }
    Ok(Verdict::pass(format!(
        "all five identities over {trials} randomized triples"
    )))
}
