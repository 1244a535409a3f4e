//! Matrix operators in the total x-derivative with differential-polynomial
//! coefficients: composition, adjoints, linearization, evolutionary
//! derivations and directional derivatives of coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, One};

use crate::equation::{total_x, total_x_power, CoveringMode};
use crate::error::{CoreError, Result};
use crate::poly::{DPoly, Generator, Rat, VecFun};

fn binom(n: usize, k: usize) -> Rat {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    Rat::new(num, den)
}

/// A matrix operator sum a_k D_x^k; at most one coefficient per power in
/// every entry, zero coefficients pruned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffOp {
    rows: usize,
    cols: usize,
    entries: Vec<BTreeMap<usize, DPoly>>,
}

impl DiffOp {
    pub fn zero(rows: usize, cols: usize) -> Self {
        DiffOp {
            rows,
            cols,
            entries: vec![BTreeMap::new(); rows * cols],
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut op = DiffOp::zero(m, m);
        for i in 0..m {
            op.add_term(i, i, 0, DPoly::one());
        }
        op
    }

    /// Diagonal operator D_x^k.
    pub fn d_x(m: usize, k: usize) -> Self {
        let mut op = DiffOp::zero(m, m);
        for i in 0..m {
            op.add_term(i, i, k, DPoly::one());
        }
        op
    }

    /// Scalar (1 x 1) operator from (coefficient, power) terms.
    pub fn scalar(terms: Vec<(DPoly, usize)>) -> Self {
        let mut op = DiffOp::zero(1, 1);
        for (c, k) in terms {
            op.add_term(0, 0, k, c);
        }
        op
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(BTreeMap::is_empty)
    }

    pub fn entry(&self, i: usize, j: usize) -> &BTreeMap<usize, DPoly> {
        &self.entries[i * self.cols + j]
    }

    pub fn add_term(&mut self, i: usize, j: usize, power: usize, coeff: DPoly) {
        if coeff.is_zero() {
            return;
        }
        let slot = &mut self.entries[i * self.cols + j];
        let sum = match slot.get(&power) {
            Some(old) => old.add(&coeff),
            None => coeff,
        };
        if sum.is_zero() {
            slot.remove(&power);
        } else {
            slot.insert(power, sum);
        }
    }

    /// Highest D-power appearing anywhere.
    pub fn order(&self) -> usize {
        self.entries
            .iter()
            .flat_map(|e| e.keys().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (k, c) in other.entry(i, j) {
                    out.add_term(i, j, *k, c.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DiffOp) -> Result<DiffOp> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DiffOp {
        self.map_coefficients(|c| c.neg())
    }

    pub fn scale(&self, r: &Rat) -> DiffOp {
        self.map_coefficients(|c| c.scale(r))
    }

    pub fn map_coefficients(&self, f: impl Fn(&DPoly) -> DPoly) -> DiffOp {
        let mut out = DiffOp::zero(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (k, c) in self.entry(i, j) {
                    out.add_term(i, j, *k, f(c));
                }
            }
        }
        out
    }

    fn check_same_shape(&self, other: &DiffOp) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(CoreError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Apply the operator to a vector function in the given mode.
    pub fn apply(&self, mode: CoveringMode, v: &VecFun) -> Result<VecFun> {
        if v.len() != self.cols {
            return Err(CoreError::ShapeMismatch(format!(
                "operator is {}x{}, argument has {} components",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = DPoly::zero();
            for j in 0..self.cols {
                for (k, c) in self.entry(i, j) {
                    let dv = total_x_power(mode, v.entry(j), *k)?;
                    acc = acc.add(&c.mul(&dv));
                }
            }
            out.push(acc);
        }
        Ok(VecFun::residual(out))
    }

    /// Operator composition, normalized by pushing D-powers through the
    /// right factor's coefficients via Leibniz.
    pub fn compose(&self, mode: CoveringMode, other: &DiffOp) -> Result<DiffOp> {
        if self.cols != other.rows {
            return Err(CoreError::ShapeMismatch(format!(
                "{}x{} composed with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DiffOp::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                for (s, a) in self.entry(i, l) {
                    for j in 0..other.cols {
                        for (t, b) in other.entry(l, j) {
                            // a D^s (b D^t) = sum_r C(s,r) a D^r(b) D^{s+t-r}
                            let mut db = b.clone();
                            for r in 0..=*s {
                                if r > 0 {
                                    db = total_x(mode, &db)?;
                                }
                                let coeff = a.mul(&db).scale(&binom(*s, r));
                                out.add_term(i, j, s + t - r, coeff);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Formal adjoint: (a D^k)* = (-1)^k D^k o a entrywise, with matrix
    /// transpose.
    pub fn adjoint(&self, mode: CoveringMode) -> Result<DiffOp> {
        self.adjoint_inner(mode, false)
    }

    /// Adjoint with the Koszul sign (-1)^{|a|} on odd coefficient parts,
    /// used for the adjoint linearization of q-linear shadows.
    pub fn adjoint_koszul(&self, mode: CoveringMode) -> Result<DiffOp> {
        self.adjoint_inner(mode, true)
    }

    fn adjoint_inner(&self, mode: CoveringMode, koszul: bool) -> Result<DiffOp> {
        let mut out = DiffOp::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (k, a) in self.entry(i, j) {
                    let sign_k = if k % 2 == 0 { Rat::one() } else { -Rat::one() };
                    let parts: Vec<DPoly> = if koszul {
                        let (even, odd) = split_parity(a);
                        vec![even, odd.neg()]
                    } else {
                        vec![a.clone()]
                    };
                    for part in parts {
                        if part.is_zero() {
                            continue;
                        }
                        // (-1)^k D^k o a = (-1)^k sum_r C(k,r) D^r(a) D^{k-r}
                        let mut da = part;
                        for r in 0..=*k {
                            if r > 0 {
                                da = total_x(mode, &da)?;
                            }
                            out.add_term(j, i, k - r, da.scale(&binom(*k, r)).scale(&sign_k));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Applies the evolutionary derivation of phi to every coefficient,
    /// leaving D-powers fixed.
    pub fn directional(&self, mode: CoveringMode, phi: &VecFun) -> Result<DiffOp> {
        let mut out = DiffOp::zero(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (k, c) in self.entry(i, j) {
                    out.add_term(i, j, *k, ev_derive(mode, phi, c)?);
                }
            }
        }
        Ok(out)
    }

    /// The operator `phi -> e_phi(A)(psi)` with the argument slot frozen at
    /// `psi`, as an explicit operator acting on phi.
    pub fn linearization_at(&self, mode: CoveringMode, psi: &VecFun) -> Result<DiffOp> {
        if psi.len() != self.cols {
            return Err(CoreError::ShapeMismatch(format!(
                "operator is {}x{}, frozen argument has {} components",
                self.rows,
                self.cols,
                psi.len()
            )));
        }
        // The argument slot ranges over sections, so the output has one
        // column per component; all uses are square.
        let mut out = DiffOp::zero(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (k, a) in self.entry(i, j) {
                    let dpsi = total_x_power(mode, psi.entry(j), *k)?;
                    for g in a.generators() {
                        if let Generator::EvenJet { comp, order } = g {
                            let coeff = a.partial(&Generator::jet(comp, order)).mul(&dpsi);
                            out.add_term(i, comp - 1, order, coeff);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn split_parity(a: &DPoly) -> (DPoly, DPoly) {
    let mut even = DPoly::zero();
    let mut odd = DPoly::zero();
    for (m, c) in a.terms() {
        let t = DPoly::term(m.clone(), c.clone());
        if m.is_odd() {
            odd = odd.add(&t);
        } else {
            even = even.add(&t);
        }
    }
    (even, odd)
}

/// Linearization of a vector function: entries sum_k d(phi^i)/d(u^j_k) D^k.
/// Differentiates with respect to even jet generators only; odd variables
/// are treated as coefficients.
pub fn linearize(m: usize, phi: &VecFun) -> DiffOp {
    let mut out = DiffOp::zero(phi.len(), m);
    for (i, p) in phi.iter().enumerate() {
        for g in p.generators() {
            if let Generator::EvenJet { comp, order } = g {
                out.add_term(i, comp - 1, order, p.partial(&Generator::jet(comp, order)));
            }
        }
    }
    out
}

/// Evolutionary derivation: e_phi(a) = sum D^k(phi^j) da/du^j_k.
pub fn ev_derive(mode: CoveringMode, phi: &VecFun, a: &DPoly) -> Result<DPoly> {
    let mut out = DPoly::zero();
    let mut cache: BTreeMap<(usize, usize), DPoly> = BTreeMap::new();
    for g in a.generators() {
        if let Generator::EvenJet { comp, order } = g {
            if comp == 0 || comp > phi.len() {
                return Err(CoreError::Invalid(format!(
                    "component u{comp} out of range 1..={}",
                    phi.len()
                )));
            }
            let dphi = match cache.get(&(comp, order)) {
                Some(v) => v.clone(),
                None => {
                    let v = total_x_power(mode, phi.entry(comp - 1), order)?;
                    cache.insert((comp, order), v.clone());
                    v
                }
            };
            out = out.add(&dphi.mul(&a.partial(&Generator::jet(comp, order))));
        }
    }
    Ok(out)
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows == 1 && self.cols == 1 {
            return write!(f, "{}", fmt_entry(self.entry(0, 0)));
        }
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", fmt_entry(self.entry(i, j)))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

fn fmt_entry(entry: &BTreeMap<usize, DPoly>) -> String {
    if entry.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (idx, (k, c)) in entry.iter().rev().enumerate() {
        let piece = fmt_term(c, *k);
        if idx == 0 {
            out.push_str(&piece);
        } else if let Some(rest) = piece.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(&piece);
        }
    }
    out
}

fn fmt_term(c: &DPoly, k: usize) -> String {
    let d = match k {
        0 => String::new(),
        1 => "D".into(),
        _ => format!("D^{k}"),
    };
    if k == 0 {
        return wrap_coeff(c, false);
    }
    if c == &DPoly::one() {
        return d;
    }
    if c == &DPoly::one().neg() {
        return format!("-{d}");
    }
    format!("{}*{d}", wrap_coeff(c, true))
}

fn wrap_coeff(c: &DPoly, parens_for_sum: bool) -> String {
    let s = c.to_string();
    let needs = parens_for_sum && (c.num_terms() > 1 || is_negative_lead(c));
    if needs {
        format!("({s})")
    } else {
        s
    }
}

fn is_negative_lead(c: &DPoly) -> bool {
    c.to_string().starts_with('-')
}

/// Convenience: the entry map of a scalar operator as (coeff, power) pairs.
pub fn scalar_terms(op: &DiffOp) -> Vec<(DPoly, usize)> {
    op.entry(0, 0)
        .iter()
        .map(|(k, c)| (c.clone(), *k))
        .collect()
}
