//! Evolution systems u_t = f and their total derivatives, plain and
//! extended to the coverings carrying the odd variables p and q.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use crate::error::{CoreError, Result};
use crate::operator::{linearize, DiffOp};
use crate::poly::{DPoly, Generator, Role, VecFun};

/// Which odd families are present in the function algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoveringMode {
    /// The equation itself, no odd variables.
    Plain,
    /// Adjoint-linearization covering: odd p only, p_t = -l_f^*(p).
    LStar,
    /// Linearization covering: odd q only, q_t = l_f(q).
    L,
    /// Whitney product of the two coverings: both p and q.
    Whitney,
}

impl CoveringMode {
    pub fn allows(&self, g: &Generator) -> bool {
        match g {
            Generator::OddP { .. } => matches!(self, CoveringMode::LStar | CoveringMode::Whitney),
            Generator::OddQ { .. } => matches!(self, CoveringMode::L | CoveringMode::Whitney),
            _ => true,
        }
    }

    pub fn check(&self, a: &DPoly) -> Result<()> {
        for g in a.generators() {
            if !self.allows(&g) {
                return Err(CoreError::IllegalGenerator(g.to_string(), format!("{self}")));
            }
        }
        Ok(())
    }

    pub fn check_vec(&self, v: &VecFun) -> Result<()> {
        v.iter().try_for_each(|p| self.check(p))
    }
}

impl fmt::Display for CoveringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CoveringMode::Plain => "plain",
            CoveringMode::LStar => "lstar",
            CoveringMode::L => "l",
            CoveringMode::Whitney => "whitney",
        };
        write!(f, "{name}")
    }
}

/// Extended total x-derivative. Purely structural: shifts every jet
/// generator present in the input one order up, for the families the mode
/// admits.
pub fn total_x(mode: CoveringMode, a: &DPoly) -> Result<DPoly> {
    mode.check(a)?;
    let mut out = a.partial(&Generator::BaseX);
    for g in a.generators() {
        let shifted = match &g {
            Generator::EvenJet { comp, order } => Generator::jet(*comp, order + 1),
            Generator::OddP { comp, order } => Generator::odd_p(*comp, order + 1),
            Generator::OddQ { comp, order } => Generator::odd_q(*comp, order + 1),
            _ => continue,
        };
        out = out.add(&DPoly::generator(shifted).mul(&a.partial(&g)));
    }
    Ok(out)
}

pub fn total_x_power(mode: CoveringMode, a: &DPoly, k: usize) -> Result<DPoly> {
    let mut out = a.clone();
    for _ in 0..k {
        out = total_x(mode, &out)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Family {
    Even,
    P,
    Q,
}

/// An evolution system u_t = f(x, t, u, ..., u_k) together with the cached
/// linearization data driving all total t-derivatives.
#[derive(Debug)]
pub struct EquationContext {
    name: String,
    m: usize,
    f: VecFun,
    max_order: usize,
    ell_f: DiffOp,
    ell_f_star: DiffOp,
    /// Right-hand sides of the covering relations: p_t and q_t.
    p_t: VecFun,
    q_t: VecFun,
    /// Iterated x-derivatives of the t-evolution right-hand sides.
    dx_cache: Mutex<HashMap<(Family, usize, usize), DPoly>>,
}

impl EquationContext {
    pub fn new(name: impl Into<String>, m: usize, f: VecFun) -> Result<Self> {
        if f.len() != m || m == 0 {
            return Err(CoreError::Invalid(format!(
                "expected {m} right-hand sides, found {}",
                f.len()
            )));
        }
        let mut max_order = 0;
        for p in f.iter() {
            for g in p.generators() {
                match g {
                    Generator::BaseX | Generator::BaseT => {}
                    Generator::EvenJet { comp, order } => {
                        if comp == 0 || comp > m {
                            return Err(CoreError::Invalid(format!(
                                "component u{comp} out of range 1..={m}"
                            )));
                        }
                        max_order = max_order.max(order);
                    }
                    other => {
                        return Err(CoreError::IllegalGenerator(
                            other.to_string(),
                            "equation right-hand side".into(),
                        ));
                    }
                }
            }
        }
        let f = f.with_role(Role::Section);
        let ell_f = linearize(m, &f);
        let ell_f_star = ell_f.adjoint(CoveringMode::Plain)?;

        let p_vec = VecFun::new(
            (1..=m).map(|j| DPoly::generator(Generator::odd_p(j, 0))).collect(),
            Role::Covector,
        );
        let q_vec = VecFun::new(
            (1..=m).map(|j| DPoly::generator(Generator::odd_q(j, 0))).collect(),
            Role::Section,
        );
        let p_t = ell_f_star.apply(CoveringMode::LStar, &p_vec)?.neg();
        let q_t = ell_f.apply(CoveringMode::L, &q_vec)?;

        Ok(EquationContext {
            name: name.into(),
            m,
            f,
            max_order,
            ell_f,
            ell_f_star,
            p_t,
            q_t,
            dx_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn rhs(&self) -> &VecFun {
        &self.f
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Linearization of the right-hand side, l_f.
    pub fn ell_f(&self) -> &DiffOp {
        &self.ell_f
    }

    /// Adjoint linearization, l_f^*.
    pub fn ell_f_star(&self) -> &DiffOp {
        &self.ell_f_star
    }

    /// Right-hand side of the covering relation p_t = -l_f^*(p).
    pub fn p_evolution(&self) -> &VecFun {
        &self.p_t
    }

    /// Right-hand side of the covering relation q_t = l_f(q).
    pub fn q_evolution(&self) -> &VecFun {
        &self.q_t
    }

    /// D_x^k of the t-evolution of the given family/component, memoized.
    fn dx_evolution(&self, fam: Family, comp: usize, k: usize) -> DPoly {
        if let Some(hit) = self.dx_cache.lock().unwrap().get(&(fam, comp, k)) {
            return hit.clone();
        }
        let value = if k == 0 {
            match fam {
                Family::Even => self.f.entry(comp - 1).clone(),
                Family::P => self.p_t.entry(comp - 1).clone(),
                Family::Q => self.q_t.entry(comp - 1).clone(),
            }
        } else {
            let prev = self.dx_evolution(fam, comp, k - 1);
            total_x(CoveringMode::Whitney, &prev).expect("cached evolutions stay in-mode")
        };
        self.dx_cache
            .lock()
            .unwrap()
            .insert((fam, comp, k), value.clone());
        value
    }

    /// Extended total t-derivative in the given covering mode.
    pub fn total_t(&self, mode: CoveringMode, a: &DPoly) -> Result<DPoly> {
        mode.check(a)?;
        let mut out = a.partial(&Generator::BaseT);
        for g in a.generators() {
            let (fam, comp, order) = match &g {
                Generator::EvenJet { comp, order } => (Family::Even, *comp, *order),
                Generator::OddP { comp, order } => (Family::P, *comp, *order),
                Generator::OddQ { comp, order } => (Family::Q, *comp, *order),
                _ => continue,
            };
            if comp == 0 || comp > self.m {
                return Err(CoreError::Invalid(format!(
                    "component index {comp} out of range 1..={}",
                    self.m
                )));
            }
            let rhs = self.dx_evolution(fam, comp, order);
            out = out.add(&rhs.mul(&a.partial(&g)));
        }
        Ok(out)
    }

    /// Linearization operator of the equation applied to a vector function:
    /// l_E(v) = D_t(v) - l_f(v), componentwise, in the given mode.
    pub fn ell_e(&self, mode: CoveringMode, v: &VecFun) -> Result<VecFun> {
        if v.len() != self.m {
            return Err(CoreError::ShapeMismatch(format!(
                "vector length {} does not match {} components",
                v.len(),
                self.m
            )));
        }
        let lf = self.ell_f.apply(mode, v)?;
        let mut out = Vec::with_capacity(self.m);
        for (i, p) in v.iter().enumerate() {
            out.push(self.total_t(mode, p)?.sub(lf.entry(i)));
        }
        Ok(VecFun::residual(out))
    }

    /// Adjoint linearization residual: D_t(v) + l_f^*(v), whose kernel is
    /// the space of cosymmetries.
    pub fn ell_e_star(&self, mode: CoveringMode, v: &VecFun) -> Result<VecFun> {
        if v.len() != self.m {
            return Err(CoreError::ShapeMismatch(format!(
                "vector length {} does not match {} components",
                v.len(),
                self.m
            )));
        }
        let lfs = self.ell_f_star.apply(mode, v)?;
        let mut out = Vec::with_capacity(self.m);
        for (i, p) in v.iter().enumerate() {
            out.push(self.total_t(mode, p)?.add(lfs.entry(i)));
        }
        Ok(VecFun::residual(out))
    }
}
