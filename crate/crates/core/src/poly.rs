//! Canonical-form arithmetic for graded differential polynomials in even
//! jet variables, odd covering variables and undetermined parameters.
//!
//! The canonical form is unique: structural equality of [`DPoly`] values is
//! mathematical equality. Coefficients are exact rationals throughout; odd
//! generators follow the Koszul sign rule and square to zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{CoreError, Result};

/// Exact rational coefficient type used everywhere in the kernel.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

/// A single commuting or anticommuting variable.
///
/// The derive order of the variants fixes the total order on generators
/// (kind, then component, then derivative order, then name), which in turn
/// fixes the canonical monomial order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    /// The space variable x.
    BaseX,
    /// The time variable t.
    BaseT,
    /// k-th x-derivative of the j-th dependent variable (components from 1).
    EvenJet { comp: usize, order: usize },
    /// Odd variable of the adjoint-linearization covering, p^j_k.
    OddP { comp: usize, order: usize },
    /// Odd variable of the linearization covering, q^j_k.
    OddQ { comp: usize, order: usize },
    /// Undetermined even scalar parameter.
    Param(String),
}

impl Generator {
    pub fn jet(comp: usize, order: usize) -> Self {
        Generator::EvenJet { comp, order }
    }

    pub fn odd_p(comp: usize, order: usize) -> Self {
        Generator::OddP { comp, order }
    }

    pub fn odd_q(comp: usize, order: usize) -> Self {
        Generator::OddQ { comp, order }
    }

    pub fn param(name: impl Into<String>) -> Self {
        Generator::Param(name.into())
    }

    pub fn is_odd(&self) -> bool {
        matches!(self, Generator::OddP { .. } | Generator::OddQ { .. })
    }

    pub fn is_param(&self) -> bool {
        matches!(self, Generator::Param(_))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::BaseX => write!(f, "x"),
            Generator::BaseT => write!(f, "t"),
            Generator::EvenJet { comp, order } => write!(f, "u{comp}_{order}"),
            Generator::OddP { comp, order } => write!(f, "p{comp}_{order}"),
            Generator::OddQ { comp, order } => write!(f, "q{comp}_{order}"),
            Generator::Param(name) => write!(f, "{name}"),
        }
    }
}

/// A product of generators in canonical form: even factors with positive
/// exponents sorted by generator, odd factors as a strictly ascending list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    even: Vec<(Generator, u32)>,
    odd: Vec<Generator>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn from_generator(g: Generator) -> Self {
        if g.is_odd() {
            Monomial { even: vec![], odd: vec![g] }
        } else {
            Monomial { even: vec![(g, 1)], odd: vec![] }
        }
    }

    pub fn is_one(&self) -> bool {
        self.even.is_empty() && self.odd.is_empty()
    }

    pub fn even_factors(&self) -> &[(Generator, u32)] {
        &self.even
    }

    pub fn odd_factors(&self) -> &[Generator] {
        &self.odd
    }

    pub fn degree(&self) -> usize {
        self.even.iter().map(|(_, e)| *e as usize).sum::<usize>() + self.odd.len()
    }

    pub fn odd_degree(&self) -> usize {
        self.odd.len()
    }

    /// Parity as an element of the graded algebra: odd iff the number of
    /// anticommuting factors is odd.
    pub fn is_odd(&self) -> bool {
        self.odd.len() % 2 == 1
    }

    pub fn exponent(&self, g: &Generator) -> u32 {
        if g.is_odd() {
            u32::from(self.odd.iter().any(|h| h == g))
        } else {
            self.even
                .iter()
                .find(|(h, _)| h == g)
                .map(|(_, e)| *e)
                .unwrap_or(0)
        }
    }

    /// Number of odd generators of the OddP family (and OddQ respectively).
    pub fn odd_degree_p(&self) -> usize {
        self.odd
            .iter()
            .filter(|g| matches!(g, Generator::OddP { .. }))
            .count()
    }

    pub fn odd_degree_q(&self) -> usize {
        self.odd
            .iter()
            .filter(|g| matches!(g, Generator::OddQ { .. }))
            .count()
    }

    /// The even factors alone, as a monomial.
    pub fn even_only(&self) -> Monomial {
        Monomial { even: self.even.clone(), odd: vec![] }
    }

    /// Product with the Koszul sign; `None` when an odd generator repeats.
    pub fn mul(&self, other: &Monomial) -> Option<(Monomial, i8)> {
        let mut even = Vec::with_capacity(self.even.len() + other.even.len());
        let (mut i, mut j) = (0, 0);
        while i < self.even.len() || j < other.even.len() {
            if j == other.even.len()
                || (i < self.even.len() && self.even[i].0 < other.even[j].0)
            {
                even.push(self.even[i].clone());
                i += 1;
            } else if i == self.even.len() || other.even[j].0 < self.even[i].0 {
                even.push(other.even[j].clone());
                j += 1;
            } else {
                even.push((self.even[i].0.clone(), self.even[i].1 + other.even[j].1));
                i += 1;
                j += 1;
            }
        }

        // Merge the odd lists counting crossings; each element of `other`
        // that lands before a remaining element of `self` contributes the
        // sign of the corresponding transpositions.
        let mut odd = Vec::with_capacity(self.odd.len() + other.odd.len());
        let mut crossings = 0usize;
        let (mut a, mut b) = (0, 0);
        while a < self.odd.len() || b < other.odd.len() {
            if b == other.odd.len() {
                odd.push(self.odd[a].clone());
                a += 1;
            } else if a == self.odd.len() {
                odd.push(other.odd[b].clone());
                b += 1;
            } else if self.odd[a] < other.odd[b] {
                odd.push(self.odd[a].clone());
                a += 1;
            } else if other.odd[b] < self.odd[a] {
                crossings += self.odd.len() - a;
                odd.push(other.odd[b].clone());
                b += 1;
            } else {
                return None; // odd square
            }
        }
        let sign = if crossings % 2 == 0 { 1 } else { -1 };
        Some((Monomial { even, odd }, sign))
    }

    fn factors(&self) -> impl Iterator<Item = (&Generator, u32)> {
        // Even and odd generator kinds are disjoint, so a plain merge by
        // generator order yields the canonical ascending factor sequence.
        let mut all: Vec<(&Generator, u32)> = self
            .even
            .iter()
            .map(|(g, e)| (g, *e))
            .chain(self.odd.iter().map(|g| (g, 1)))
            .collect();
        all.sort();
        all.into_iter()
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order over the generator total order.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.factors().cmp(other.factors()))
    }
}

/// A graded differential polynomial in canonical form.
///
/// Stored as a map from canonical monomials to nonzero rational
/// coefficients; the empty map is the zero polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DPoly {
    terms: BTreeMap<Monomial, Rat>,
}

impl DPoly {
    pub fn zero() -> Self {
        DPoly::default()
    }

    pub fn one() -> Self {
        DPoly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        DPoly { terms }
    }

    pub fn from_int(n: i64) -> Self {
        DPoly::constant(rat_int(n))
    }

    pub fn generator(g: Generator) -> Self {
        DPoly::term(Monomial::from_generator(g), Rat::one())
    }

    pub fn term(m: Monomial, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        DPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    fn insert(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &DPoly) -> DPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &DPoly) -> DPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DPoly {
        DPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> DPoly {
        if c.is_zero() {
            return DPoly::zero();
        }
        DPoly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul(&self, other: &DPoly) -> DPoly {
        let mut out = DPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some((m, sign)) = m1.mul(m2) {
                    let mut c = c1 * c2;
                    if sign < 0 {
                        c = -c;
                    }
                    out.insert(m, c);
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> DPoly {
        let mut out = DPoly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Left graded partial derivative with respect to one generator.
    pub fn partial(&self, g: &Generator) -> DPoly {
        let mut out = DPoly::zero();
        for (m, c) in &self.terms {
            if g.is_odd() {
                if let Some(pos) = m.odd.iter().position(|h| h == g) {
                    let mut odd = m.odd.clone();
                    odd.remove(pos);
                    let sign = if pos % 2 == 0 { Rat::one() } else { -Rat::one() };
                    out.insert(Monomial { even: m.even.clone(), odd }, c * sign);
                }
            } else if let Some(idx) = m.even.iter().position(|(h, _)| h == g) {
                let (_, e) = &m.even[idx];
                let mut even = m.even.clone();
                if *e == 1 {
                    even.remove(idx);
                } else {
                    even[idx].1 -= 1;
                }
                let factor = Rat::from(BigInt::from(*e));
                out.insert(Monomial { even, odd: m.odd.clone() }, c * factor);
            }
        }
        out
    }

    /// All generators mentioned by the polynomial.
    pub fn generators(&self) -> BTreeSet<Generator> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (g, _) in &m.even {
                out.insert(g.clone());
            }
            for g in &m.odd {
                out.insert(g.clone());
            }
        }
        out
    }

    /// `Some(parity)` when every term has the same parity, `None` for a
    /// mixed or zero polynomial (zero counts as even).
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.keys().map(|m| m.is_odd());
        match it.next() {
            None => Some(false),
            Some(first) => it.all(|p| p == first).then_some(first),
        }
    }

    pub fn max_odd_degree(&self) -> usize {
        self.terms.keys().map(|m| m.odd_degree()).max().unwrap_or(0)
    }

    /// Simultaneous substitution, re-canonicalized.
    ///
    /// With `strict` set, an even generator mapped to a polynomial that
    /// contains odd terms is rejected; odd generators may be mapped to
    /// values of any parity only when `strict` is off (polarization).
    pub fn substitute(&self, map: &BTreeMap<Generator, DPoly>, strict: bool) -> Result<DPoly> {
        if strict {
            for (g, img) in map {
                let has_odd = img.terms.keys().any(|m| m.is_odd());
                let all_odd = img.terms.keys().all(|m| m.is_odd());
                if !g.is_odd() && has_odd {
                    return Err(CoreError::ParityMismatch(g.to_string()));
                }
                if g.is_odd() && !img.is_zero() && !all_odd {
                    return Err(CoreError::ParityMismatch(g.to_string()));
                }
            }
        }
        let mut out = DPoly::zero();
        for (m, c) in &self.terms {
            let mut acc = DPoly::constant(c.clone());
            for (g, e) in &m.even {
                let factor = match map.get(g) {
                    Some(img) => img.pow(*e),
                    None => DPoly::term(
                        Monomial {
                            even: vec![(g.clone(), *e)],
                            odd: vec![],
                        },
                        Rat::one(),
                    ),
                };
                acc = acc.mul(&factor);
            }
            // Odd factors are substituted in canonical order; multiplying
            // the images in that order reproduces the Koszul signs.
            for g in &m.odd {
                let factor = match map.get(g) {
                    Some(img) => img.clone(),
                    None => DPoly::generator(g.clone()),
                };
                acc = acc.mul(&factor);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Decomposition of every term as (parameter part, parameter-free part).
    /// Used by the ansatz solver; errors when some term is not exactly
    /// linear in the parameters is left to the caller.
    pub fn split_params(&self) -> Vec<(Vec<String>, Monomial, Rat)> {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let mut params = Vec::new();
            let mut even = Vec::new();
            for (g, e) in &m.even {
                if let Generator::Param(name) = g {
                    for _ in 0..*e {
                        params.push(name.clone());
                    }
                } else {
                    even.push((g.clone(), *e));
                }
            }
            out.push((params, Monomial { even, odd: m.odd.clone() }, c.clone()));
        }
        out
    }
}

impl fmt::Display for DPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff_is_one = abs.is_one();
            if m.is_one() {
                write!(f, "{}", fmt_rat(&abs))?;
            } else {
                let mut lead = true;
                if !coeff_is_one {
                    write!(f, "{}", fmt_rat(&abs))?;
                    lead = false;
                }
                for (g, e) in m.factors() {
                    if !lead {
                        write!(f, "*")?;
                    }
                    lead = false;
                    if e == 1 {
                        write!(f, "{g}")?;
                    } else {
                        write!(f, "{g}^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Role tag for vector functions, mirroring the module they belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Generating section of an evolutionary field (element of kappa).
    Section,
    /// Variational covector (element of kappa-hat).
    Covector,
    /// p-linear shadow on the adjoint-linearization covering.
    ShadowLStar,
    /// q-linear shadow on the linearization covering.
    ShadowL,
    /// Computation result with no particular role.
    Residual,
}

/// An m-tuple of differential polynomials with a role tag. Equality is
/// mathematical: the role tag is bookkeeping and does not participate.
#[derive(Debug, Clone)]
pub struct VecFun {
    entries: Vec<DPoly>,
    role: Role,
}

impl PartialEq for VecFun {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for VecFun {}

impl VecFun {
    pub fn new(entries: Vec<DPoly>, role: Role) -> Self {
        VecFun { entries, role }
    }

    pub fn section(entries: Vec<DPoly>) -> Self {
        VecFun::new(entries, Role::Section)
    }

    pub fn covector(entries: Vec<DPoly>) -> Self {
        VecFun::new(entries, Role::Covector)
    }

    pub fn residual(entries: Vec<DPoly>) -> Self {
        VecFun::new(entries, Role::Residual)
    }

    pub fn zero(m: usize, role: Role) -> Self {
        VecFun::new(vec![DPoly::zero(); m], role)
    }

    pub fn scalar(p: DPoly, role: Role) -> Self {
        VecFun::new(vec![p], role)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize) -> &DPoly {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[DPoly] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &DPoly> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(DPoly::is_zero)
    }

    pub fn add(&self, other: &VecFun) -> VecFun {
        assert_eq!(self.len(), other.len());
        VecFun::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
            self.role,
        )
    }

    pub fn sub(&self, other: &VecFun) -> VecFun {
        assert_eq!(self.len(), other.len());
        VecFun::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.sub(b))
                .collect(),
            self.role,
        )
    }

    pub fn neg(&self) -> VecFun {
        VecFun::new(self.entries.iter().map(DPoly::neg).collect(), self.role)
    }

    pub fn scale(&self, c: &Rat) -> VecFun {
        VecFun::new(self.entries.iter().map(|p| p.scale(c)).collect(), self.role)
    }

    pub fn map(&self, f: impl Fn(&DPoly) -> DPoly) -> VecFun {
        VecFun::new(self.entries.iter().map(f).collect(), self.role)
    }

    /// First nonzero component, for failure witnesses.
    pub fn first_nonzero(&self) -> Option<(usize, &DPoly)> {
        self.entries.iter().enumerate().find(|(_, p)| !p.is_zero())
    }
}

impl fmt::Display for VecFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.len() == 1 {
            return write!(f, "{}", self.entries[0]);
        }
        write!(f, "(")?;
        for (i, p) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}
