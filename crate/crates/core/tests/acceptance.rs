//! Acceptance suite: one test per criterion, each printing a PASS line on
//! success. Criterion 10 (byte-identical CLI reports under a fixed seed)
//! lives in the cli crate's acceptance test. Everything is exact; there
//! are no numerical tolerances anywhere.

mod common;

use common::*;

use varpn_core::ansatz::{solve_shadows, AnsatzSpec};
use varpn_core::brackets::{euler_operator, green_defect, jacobi, schouten, Density};
use varpn_core::coverings::{
    bracket_hh, consistency_hh, consistency_hn, consistency_nn, from_shadow, polarize, to_shadow,
    ShadowFamily,
};
use varpn_core::equation::{total_x, CoveringMode};
use varpn_core::operator::DiffOp;
use varpn_core::poly::{rat, DPoly, Generator, Role, VecFun};
use varpn_core::sample::{self, PolySpec};
use varpn_core::verify::{self, identity_terms, ConservationLaw, IDENTITY_KINDS};

const P: CoveringMode = CoveringMode::Plain;

#[test]
fn c01_kernel_laws() {
    let mut rng = sample::rng(101);
    let spec = PolySpec {
        components: 2,
        max_jet: 3,
        max_degree: 3,
        terms: 3,
        mode: CoveringMode::Whitney,
        allow_xt: true,
    };
    for case in 0..1000 {
        // Graded commutativity on parity-homogeneous parts.
        let a = homogeneous_part(&sample::rand_poly(&mut rng, &spec), case % 2 == 0);
        let b = homogeneous_part(&sample::rand_poly(&mut rng, &spec), case % 3 == 0);
        let ab = a.mul(&b);
        let ba = b.mul(&a);
        let sign_flip = parity_of(&a) && parity_of(&b);
        assert_eq!(ab, if sign_flip { ba.neg() } else { ba });
        assert_canonical(&ab);

        // Graded Leibniz for the partial derivative.
        let g = random_generator(&mut rng, true);
        let lhs = a.mul(&b).partial(&g);
        let second = a.mul(&b.partial(&g));
        let signed = if g.is_odd() && parity_of(&a) { second.neg() } else { second };
        assert_eq!(lhs, a.partial(&g).mul(&b).add(&signed));

        // Canonical-form uniqueness under reassociation and reordering.
        let c = sample::rand_poly(&mut rng, &spec);
        assert_eq!(a.add(&b).add(&c), c.add(&a.add(&b)));
        let p1 = a.mul(&b).mul(&c);
        let p2 = a.mul(&b.mul(&c));
        assert_eq!(p1, p2);
        assert_canonical(&p1);

        // Odd squares annihilate.
        let odd = homogeneous_part(&sample::rand_poly(&mut rng, &spec), true);
        assert!(odd.mul(&odd).is_zero());
        let g_odd = Generator::odd_p(1, case % 4);
        assert!(DPoly::generator(g_odd).pow(2).is_zero());
    }
    println!("acceptance 01 (kernel laws, 1000 fuzzed cases each, exact): PASS");
}

#[test]
fn c02_calculus_identities() {
    let ctx = kdv();
    let ctx_b = burgers();
    let mut rng = sample::rng(202);

    // [D_x, D_t] = 0 in all four covering modes, 200 random inputs.
    let modes = [
        CoveringMode::Plain,
        CoveringMode::LStar,
        CoveringMode::L,
        CoveringMode::Whitney,
    ];
    for case in 0..200 {
        let mode = modes[case % 4];
        let spec = PolySpec {
            components: 1,
            max_jet: 3,
            max_degree: 2,
            terms: 3,
            mode,
            allow_xt: true,
        };
        let a = sample::rand_poly(&mut rng, &spec);
        let ctx_used = if case % 2 == 0 { &ctx } else { &ctx_b };
        let xt = ctx_used.total_t(mode, &total_x(mode, &a).unwrap()).unwrap();
        let tx = total_x(mode, &ctx_used.total_t(mode, &a).unwrap()).unwrap();
        assert_eq!(xt, tx, "commutation fails in {mode} on {a}");
    }

    // The Euler operator annihilates total x-derivatives, 200 random
    // densities.
    for _ in 0..200 {
        let spec = PolySpec::plain(2, 3, 3, 3);
        let a = sample::rand_poly(&mut rng, &spec);
        let density = Density::new(total_x(P, &a).unwrap());
        assert!(euler_operator(2, &density).unwrap().is_zero());
    }

    // Adjoint involution and composition reversal, 200 random operators of
    // order <= 3 and m <= 2.
    for case in 0..200 {
        let m = 1 + case % 2;
        let a = sample::rand_op(&mut rng, m, 3, 2, 2);
        let b = sample::rand_op(&mut rng, m, 3, 2, 2);
        let a_star = a.adjoint(P).unwrap();
        assert_eq!(a_star.adjoint(P).unwrap(), a);
        let ab = a.compose(P, &b).unwrap();
        let rhs = b.adjoint(P).unwrap().compose(P, &a_star).unwrap();
        assert_eq!(ab.adjoint(P).unwrap(), rhs);
    }

    // Green's identity, 100 random triples.
    for case in 0..100 {
        let m = 1 + case % 2;
        let a = sample::rand_op(&mut rng, m, 3, 2, 1);
        let spec = PolySpec::plain(m, 3, 2, 2);
        let psi = VecFun::covector((0..m).map(|_| sample::rand_poly(&mut rng, &spec)).collect());
        let phi = VecFun::section((0..m).map(|_| sample::rand_poly(&mut rng, &spec)).collect());
        assert!(green_defect(P, &a, &psi, &phi).unwrap().is_zero());
    }
    println!("acceptance 02 (calculus identities, exact): PASS");
}

#[test]
fn c03_kdv_classical_structures() {
    let ctx = kdv();
    let a1 = kdv_a1();
    let a2 = kdv_a2();
    assert!(verify::is_hamiltonian(&ctx, &a1).unwrap().holds);
    assert!(verify::is_hamiltonian(&ctx, &a2).unwrap().holds);

    // Compatibility, operator route: the Schouten bracket vanishes on
    // generic arguments of order 8.
    let psi1 = sample::generic_x_arg(1, 8, "ga", Role::Covector);
    let psi2 = sample::generic_x_arg(1, 8, "gb", Role::Covector);
    let operator_route = schouten(P, &a1, &a2, &psi1, &psi2).unwrap();
    assert!(operator_route.is_zero(), "operator route: {operator_route}");

    // Shadow route, independently: the covering Jacobi bracket of the two
    // shadows vanishes, and so does its polarization.
    let s1 = to_shadow(&a1, ShadowFamily::LStar).unwrap();
    let s2 = to_shadow(&a2, ShadowFamily::LStar).unwrap();
    let shadow_bracket = bracket_hh(&s1, &s2).unwrap();
    assert!(shadow_bracket.is_zero(), "shadow route: {shadow_bracket}");
    let polarized = polarize(&shadow_bracket, &psi1, &psi2).unwrap();
    assert!(polarized.is_zero());
    println!("acceptance 03 (KdV classical pair, two independent routes, exact): PASS");
}

#[test]
fn c04_consistency_theorems() {
    let mut rng = sample::rng(404);
    let draws = 50;
    for case in 0..draws {
        // hh: skew-adjoint pairs of order <= 2, coefficient jets <= 2,
        // degree <= 1.
        let a = sample::rand_skew_op(&mut rng, 1, 2, 2, 1);
        let b = sample::rand_skew_op(&mut rng, 1, 2, 2, 1);
        let deg = verify::generic_degree(&a, &b, 4);
        let psi1 = sample::rand_x_args(&mut rng, 1, deg, Role::Covector);
        let psi2 = sample::rand_x_args(&mut rng, 1, deg, Role::Covector);
        let (shadow, operator) = consistency_hh(&a, &b, &psi1, &psi2).unwrap();
        assert_eq!(shadow, operator, "hh case {case}");

        // nn: arbitrary operator pairs.
        let r = sample::rand_op(&mut rng, 1, 2, 2, 1);
        let s = sample::rand_op(&mut rng, 1, 2, 2, 1);
        let deg = verify::generic_degree(&r, &s, 4);
        let phi1 = sample::rand_x_args(&mut rng, 1, deg, Role::Section);
        let phi2 = sample::rand_x_args(&mut rng, 1, deg, Role::Section);
        let (shadow, operator) = consistency_nn(&r, &s, &phi1, &phi2).unwrap();
        assert_eq!(shadow, operator, "nn case {case}");

        // hn: skew-adjoint A with arbitrary R.
        let a = sample::rand_skew_op(&mut rng, 1, 2, 2, 1);
        let r = sample::rand_op(&mut rng, 1, 2, 2, 1);
        let deg = verify::generic_degree(&a, &r, 4);
        let psi = sample::rand_x_args(&mut rng, 1, deg, Role::Covector);
        let phi = sample::rand_x_args(&mut rng, 1, deg, Role::Section);
        let (shadow, operator) = consistency_hn(&a, &r, &psi, &phi).unwrap();
        assert_eq!(shadow, operator, "hn case {case}");
    }

    // The calibration case is a committed golden file.
    let golden: serde_json::Value = serde_json::from_str(include_str!("golden/calibration.json"))
        .expect("golden calibration file parses");
    let a = kdv_a1();
    let b = DiffOp::scalar(vec![(u(1).scale(&rat(2, 1)), 1), (u(2), 0)]);
    let psi1 = VecFun::covector(vec![u(0)]);
    let psi2 = VecFun::covector(vec![u(1).pow(2)]);
    let (shadow, operator) = consistency_hh(&a, &b, &psi1, &psi2).unwrap();
    assert!(!operator.is_zero());
    assert_eq!(shadow, operator);
    assert_eq!(golden["calibration"]["value"], shadow.to_string());
    assert_eq!(golden["calibration"]["lambda"], "1");
    // The degenerate named case: both routes vanish identically.
    let b2 = DiffOp::scalar(vec![(u(0).scale(&rat(2, 1)), 1), (u(1), 0)]);
    let (shadow2, operator2) = consistency_hh(&a, &b2, &psi1, &psi2).unwrap();
    assert!(shadow2.is_zero() && operator2.is_zero());
    assert_eq!(golden["degenerate"]["value"], "0");
    println!("acceptance 04 (consistency theorems, 50 draws each, calibration golden, exact): PASS");
}

#[test]
fn c05_proof_identity_suite() {
    let ctx = kdv();
    let verdict = verify::identity_suite_randomized(&ctx, 100, 505).unwrap();
    assert!(verdict.holds, "{}", verdict.route);

    // Mutation detection: flipping the sign of any single term of any
    // identity must be caught on a witness input where every term is
    // individually nonzero.
    let mut rng = sample::rng(99);
    for kind in IDENTITY_KINDS {
        let mut found = false;
        for _ in 0..40 {
            let (a, b, r) = verify::identity_family_draw(&mut rng, 1, 1, 1, 1, 1).unwrap();
            let deg = a.order() + b.order() + 3 * r.order() + 8;
            let psi1 = sample::rand_x_args(&mut rng, 1, deg, Role::Covector);
            let psi2 = sample::rand_x_args(&mut rng, 1, deg, Role::Covector);
            let terms = identity_terms(kind, &a, &b, &r, &psi1, &psi2).unwrap();
            if terms.iter().any(|t| t.is_zero()) {
                continue;
            }
            found = true;
            let mut total = VecFun::zero(1, Role::Residual);
            for t in &terms {
                total = total.add(t);
            }
            assert!(total.is_zero(), "identity {kind} fails unmutated");
            for (i, t) in terms.iter().enumerate() {
                // A sign flip replaces +t by -t, changing the sum by -2t.
                let mutated = total.sub(&t.scale(&rat(2, 1)));
                assert!(!mutated.is_zero(), "sign flip of term {i} in {kind} undetected");
            }
            break;
        }
        assert!(found, "no witness input with all terms nonzero for {kind}");
    }
    println!("acceptance 05 (proof identities, 100 draws + mutation detection, exact): PASS");
}

#[test]
fn c06_hierarchy_theorem() {
    let ctx = linear3();
    let h = verify::hierarchy(&ctx, &DiffOp::d_x(1, 1), &DiffOp::d_x(1, 2), 3).unwrap();
    assert_eq!(h.operators.len(), 4);
    for (i, op) in h.operators.iter().enumerate() {
        assert_eq!(op, &DiffOp::d_x(1, 2 * i + 1));
    }
    assert!(h.skew.iter().all(|&b| b));
    assert!(h.invariant.iter().all(|&b| b));
    assert!(h.compatible.iter().flatten().all(|&b| b));
    println!("acceptance 06 (hierarchy D, D^3, D^5, D^7 with all checks, exact): PASS");
}

#[test]
fn c07_discovery() {
    let ctx = kdv();
    let spec = AnsatzSpec::new(ShadowFamily::LStar, 3, 1, 1);
    let shadows = solve_shadows(&ctx, &spec).unwrap();
    assert_eq!(shadows.len(), 2, "nullspace dimension");

    let first = DPoly::generator(Generator::odd_p(1, 1));
    let second = DPoly::generator(Generator::odd_p(1, 3))
        .add(&u(0).mul(&DPoly::generator(Generator::odd_p(1, 1))).scale(&rat(2, 3)))
        .add(&u(1).mul(&DPoly::generator(Generator::odd_p(1, 0))).scale(&rat(1, 3)));
    let values: Vec<&DPoly> = shadows.iter().map(|s| s.value.entry(0)).collect();
    assert!(values.contains(&&first), "missing p1_1 among {values:?}");
    assert!(values.contains(&&second), "missing second structure among {values:?}");

    for s in &shadows {
        // Re-verify the shadow equation and Hamiltonianity of the encoded
        // operator.
        assert!(ctx.ell_e(CoveringMode::LStar, &s.value).unwrap().is_zero());
        let op = from_shadow(s).unwrap();
        assert!(verify::is_hamiltonian(&ctx, &op).unwrap().holds);
    }
    println!("acceptance 07 (discovery of both KdV structures, dimension 2, exact): PASS");
}

#[test]
fn c08_symmetry_corpus() {
    let ctx = kdv();
    assert!(verify::is_symmetry(&ctx, &VecFun::section(vec![u(1)])).unwrap().holds);
    assert!(verify::is_symmetry(&ctx, &ctx.rhs().clone()).unwrap().holds);
    assert!(verify::is_cosymmetry(&ctx, &VecFun::covector(vec![DPoly::one()])).unwrap().holds);
    assert!(verify::is_cosymmetry(&ctx, &VecFun::covector(vec![u(0)])).unwrap().holds);
    let bad = verify::is_cosymmetry(&ctx, &VecFun::covector(vec![u(1)])).unwrap();
    assert!(!bad.holds);
    let witness = bad.witness.expect("failure carries a witness");
    assert!(!witness.to_string().is_empty() && witness.to_string() != "0");

    let law = ConservationLaw {
        x: u(0),
        t: u(0).pow(2).scale(&rat(1, 2)).add(&u(2)),
    };
    assert!(verify::is_conservation_law(&ctx, &law).unwrap().holds);
    let gf = verify::generating_function(&ctx, &law).unwrap();
    assert_eq!(gf.entry(0), &DPoly::one());
    println!("acceptance 08 (KdV symmetry/cosymmetry corpus, exact): PASS");
}

#[test]
fn c09_jacobi_structure() {
    let mut rng = sample::rng(909);
    for case in 0..100 {
        let m = 1 + case % 2;
        let spec = PolySpec {
            components: m,
            max_jet: 3,
            max_degree: 2,
            terms: 2,
            mode: CoveringMode::Plain,
            allow_xt: true,
        };
        let a = VecFun::section((0..m).map(|_| sample::rand_poly(&mut rng, &spec)).collect());
        let b = VecFun::section((0..m).map(|_| sample::rand_poly(&mut rng, &spec)).collect());
        let c = VecFun::section((0..m).map(|_| sample::rand_poly(&mut rng, &spec)).collect());
        // Antisymmetry.
        let ab = jacobi(P, m, &a, &b).unwrap();
        assert_eq!(ab, jacobi(P, m, &b, &a).unwrap().neg());
        // Jacobi identity.
        let bc = jacobi(P, m, &b, &c).unwrap();
        let ca = jacobi(P, m, &c, &a).unwrap();
        let total = jacobi(P, m, &a, &bc.with_role(Role::Section))
            .unwrap()
            .add(&jacobi(P, m, &b, &ca.with_role(Role::Section)).unwrap())
            .add(&jacobi(P, m, &c, &ab.with_role(Role::Section)).unwrap());
        assert!(total.is_zero(), "Jacobi identity fails on case {case}");
    }
    println!("acceptance 09 (higher Jacobi bracket: antisymmetry and Jacobi identity, exact): PASS");
}
