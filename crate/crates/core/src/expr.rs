//! Expression front end: a recursive-descent parser for differential
//! polynomials and matrix operators, inverse to the canonical printers.
//!
//! Grammar: `+ - * ^` with standard precedence and left association,
//! parentheses, rationals `a/b`, variables `x t u<j>_<k> p<j>_<k> q<j>_<k>`,
//! free identifiers as parameters; in operator expressions `D` is the total
//! x-derivative, `I` the identity, and `[[...],[...]]` a row-major matrix.

use num::BigInt;

use crate::equation::CoveringMode;
use crate::error::{CoreError, Result};
use crate::operator::DiffOp;
use crate::poly::{DPoly, Generator, Rat, Role, VecFun};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

fn lex(s: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => { out.push((Tok::Plus, i)); i += 1; }
            '-' => { out.push((Tok::Minus, i)); i += 1; }
            '*' => { out.push((Tok::Star, i)); i += 1; }
            '^' => { out.push((Tok::Caret, i)); i += 1; }
            '/' => { out.push((Tok::Slash, i)); i += 1; }
            '(' => { out.push((Tok::LParen, i)); i += 1; }
            ')' => { out.push((Tok::RParen, i)); i += 1; }
            '[' => { out.push((Tok::LBracket, i)); i += 1; }
            ']' => { out.push((Tok::RBracket, i)); i += 1; }
            ',' => { out.push((Tok::Comma, i)); i += 1; }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = s[start..i].parse().expect("digits");
                out.push((Tok::Int(n), start));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(s[start..i].to_string()), start));
            }
            _ => {
                return Err(CoreError::Syntax {
                    pos: i,
                    expected: format!("token (found {c:?})"),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Ast {
    Num(Rat),
    Var(String, usize),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, u32),
    Matrix(Vec<Vec<Ast>>, usize),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn new(s: &str) -> Result<Self> {
        Ok(Parser { toks: lex(s)?, pos: 0, len: s.len() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(CoreError::Syntax { pos: self.here(), expected: what.into() })
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Ast::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Ast::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Ast::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Ast::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let pos = self.here();
            match self.bump() {
                Some(Tok::Int(n)) => {
                    let e = u32::try_from(n).map_err(|_| CoreError::Syntax {
                        pos,
                        expected: "small nonnegative integer exponent".into(),
                    })?;
                    return Ok(Ast::Pow(Box::new(base), e));
                }
                _ => {
                    return Err(CoreError::Syntax {
                        pos,
                        expected: "integer exponent".into(),
                    });
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Int(n)) => {
                // A '/' directly after an integer forms a rational literal.
                if self.peek() == Some(&Tok::Slash) {
                    self.pos += 1;
                    let dpos = self.here();
                    match self.bump() {
                        Some(Tok::Int(d)) if d != BigInt::from(0) => {
                            Ok(Ast::Num(Rat::new(n, d)))
                        }
                        _ => Err(CoreError::Syntax {
                            pos: dpos,
                            expected: "nonzero integer denominator".into(),
                        }),
                    }
                } else {
                    Ok(Ast::Num(Rat::from(n)))
                }
            }
            Some(Tok::Ident(name)) => Ok(Ast::Var(name, pos)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some(Tok::LBracket) => {
                let mut rows = Vec::new();
                loop {
                    self.expect(Tok::LBracket, "matrix row opening bracket")?;
                    let mut row = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        row.push(self.expr()?);
                    }
                    self.expect(Tok::RBracket, "matrix row closing bracket")?;
                    rows.push(row);
                    if self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        continue;
                    }
                    break;
                }
                self.expect(Tok::RBracket, "matrix closing bracket")?;
                Ok(Ast::Matrix(rows, pos))
            }
            _ => Err(CoreError::Syntax {
                pos,
                expected: "number, variable or parenthesized expression".into(),
            }),
        }
    }

    fn finish(&self) -> Result<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(CoreError::Syntax {
                pos: self.here(),
                expected: "end of input".into(),
            })
        }
    }
}

fn classify(name: &str, pos: usize) -> Result<Option<Generator>> {
    match name {
        "x" => return Ok(Some(Generator::BaseX)),
        "t" => return Ok(Some(Generator::BaseT)),
        "D" | "I" => return Ok(None),
        _ => {}
    }
    let mut chars = name.chars();
    let head = chars.next().expect("nonempty identifier");
    if matches!(head, 'u' | 'p' | 'q') {
        let rest: &str = &name[1..];
        if let Some((comp_s, order_s)) = rest.split_once('_') {
            if !comp_s.is_empty()
                && !order_s.is_empty()
                && comp_s.bytes().all(|b| b.is_ascii_digit())
                && order_s.bytes().all(|b| b.is_ascii_digit())
            {
                let comp: usize = comp_s.parse().map_err(|_| CoreError::Syntax {
                    pos,
                    expected: "component index".into(),
                })?;
                let order: usize = order_s.parse().map_err(|_| CoreError::Syntax {
                    pos,
                    expected: "derivative order".into(),
                })?;
                if comp == 0 {
                    return Err(CoreError::Syntax {
                        pos,
                        expected: "component index starting at 1".into(),
                    });
                }
                let g = match head {
                    'u' => Generator::jet(comp, order),
                    'p' => Generator::odd_p(comp, order),
                    _ => Generator::odd_q(comp, order),
                };
                return Ok(Some(g));
            }
        }
    }
    Ok(Some(Generator::param(name)))
}

fn eval_poly(ast: &Ast, mode: CoveringMode) -> Result<DPoly> {
    match ast {
        Ast::Num(r) => Ok(DPoly::constant(r.clone())),
        Ast::Var(name, pos) => match classify(name, *pos)? {
            Some(g) => {
                if !mode.allows(&g) {
                    return Err(CoreError::IllegalGenerator(g.to_string(), mode.to_string()));
                }
                Ok(DPoly::generator(g))
            }
            None => Err(CoreError::Syntax {
                pos: *pos,
                expected: "scalar expression (D and I are operator symbols)".into(),
            }),
        },
        Ast::Neg(a) => Ok(eval_poly(a, mode)?.neg()),
        Ast::Add(a, b) => Ok(eval_poly(a, mode)?.add(&eval_poly(b, mode)?)),
        Ast::Sub(a, b) => Ok(eval_poly(a, mode)?.sub(&eval_poly(b, mode)?)),
        Ast::Mul(a, b) => Ok(eval_poly(a, mode)?.mul(&eval_poly(b, mode)?)),
        Ast::Pow(a, e) => Ok(eval_poly(a, mode)?.pow(*e)),
        Ast::Matrix(_, pos) => Err(CoreError::Syntax {
            pos: *pos,
            expected: "scalar expression (matrices are operators)".into(),
        }),
    }
}

fn lift_scalar(op: DiffOp, n: usize) -> DiffOp {
    if op.rows() == n || op.rows() != 1 {
        return op;
    }
    let mut out = DiffOp::zero(n, n);
    for i in 0..n {
        for (k, c) in op.entry(0, 0) {
            out.add_term(i, i, *k, c.clone());
        }
    }
    out
}

fn eval_op(ast: &Ast) -> Result<DiffOp> {
    match ast {
        Ast::Num(r) => Ok(DiffOp::scalar(vec![(DPoly::constant(r.clone()), 0)])),
        Ast::Var(name, pos) => match name.as_str() {
            "D" => Ok(DiffOp::d_x(1, 1)),
            "I" => Ok(DiffOp::identity(1)),
            _ => match classify(name, *pos)? {
                Some(g) => {
                    if g.is_odd() {
                        return Err(CoreError::IllegalGenerator(
                            g.to_string(),
                            "operator coefficient".into(),
                        ));
                    }
                    Ok(DiffOp::scalar(vec![(DPoly::generator(g), 0)]))
                }
                None => unreachable!("D and I handled above"),
            },
        },
        Ast::Neg(a) => Ok(eval_op(a)?.neg()),
        Ast::Add(a, b) => {
            let (a, b) = (eval_op(a)?, eval_op(b)?);
            let n = a.rows().max(b.rows());
            lift_scalar(a, n).add(&lift_scalar(b, n))
        }
        Ast::Sub(a, b) => {
            let (a, b) = (eval_op(a)?, eval_op(b)?);
            let n = a.rows().max(b.rows());
            lift_scalar(a, n).sub(&lift_scalar(b, n))
        }
        Ast::Mul(a, b) => {
            let (a, b) = (eval_op(a)?, eval_op(b)?);
            let n = a.rows().max(b.rows());
            lift_scalar(a, n).compose(CoveringMode::Plain, &lift_scalar(b, n))
        }
        Ast::Pow(a, e) => {
            let base = eval_op(a)?;
            if !base.is_square() {
                return Err(CoreError::ShapeMismatch("power of a non-square operator".into()));
            }
            let mut out = DiffOp::identity(base.rows());
            for _ in 0..*e {
                out = out.compose(CoveringMode::Plain, &base)?;
            }
            Ok(out)
        }
        Ast::Matrix(rows, pos) => {
            let r = rows.len();
            let c = rows[0].len();
            if rows.iter().any(|row| row.len() != c) {
                return Err(CoreError::Syntax {
                    pos: *pos,
                    expected: "matrix rows of equal length".into(),
                });
            }
            let mut out = DiffOp::zero(r, c);
            for (i, row) in rows.iter().enumerate() {
                for (j, cell) in row.iter().enumerate() {
                    let op = eval_op(cell)?;
                    if op.rows() != 1 || op.cols() != 1 {
                        return Err(CoreError::Syntax {
                            pos: *pos,
                            expected: "scalar operator entries in a matrix".into(),
                        });
                    }
                    for (k, coeff) in op.entry(0, 0) {
                        out.add_term(i, j, *k, coeff.clone());
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Parse a differential polynomial, checking odd variables against the
/// covering mode.
pub fn parse_expr(s: &str, mode: CoveringMode) -> Result<DPoly> {
    let mut p = Parser::new(s)?;
    let ast = p.expr()?;
    p.finish()?;
    eval_poly(&ast, mode)
}

/// Parse a matrix operator in D.
pub fn parse_op(s: &str) -> Result<DiffOp> {
    let mut p = Parser::new(s)?;
    let ast = p.expr()?;
    p.finish()?;
    eval_op(&ast)
}

/// Parse a vector function: a bare expression for one component, or a
/// bracketed list `[e1, e2, ...]`.
pub fn parse_vec(s: &str, mode: CoveringMode, role: Role) -> Result<VecFun> {
    let trimmed = s.trim_start();
    if trimmed.starts_with('[') {
        let mut p = Parser::new(s)?;
        p.expect(Tok::LBracket, "opening bracket")?;
        let mut entries = vec![eval_poly(&p.expr()?, mode)?];
        while p.peek() == Some(&Tok::Comma) {
            p.pos += 1;
            entries.push(eval_poly(&p.expr()?, mode)?);
        }
        p.expect(Tok::RBracket, "closing bracket")?;
        p.finish()?;
        Ok(VecFun::new(entries, role))
    } else {
        Ok(VecFun::new(vec![parse_expr(s, mode)?], role))
    }
}

/// Largest component index mentioned by a polynomial, for validation
/// against the equation size.
pub fn max_component(p: &DPoly) -> usize {
    p.generators()
        .into_iter()
        .map(|g| match g {
            Generator::EvenJet { comp, .. }
            | Generator::OddP { comp, .. }
            | Generator::OddQ { comp, .. } => comp,
            _ => 0,
        })
        .max()
        .unwrap_or(0)
}

pub fn max_component_op(op: &DiffOp) -> usize {
    let mut out = 0;
    for i in 0..op.rows() {
        for j in 0..op.cols() {
            for c in op.entry(i, j).values() {
                out = out.max(max_component(c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;
    use crate::sample;
    use proptest::prelude::*;

    fn u(k: usize) -> DPoly {
        DPoly::generator(Generator::jet(1, k))
    }

    #[test]
    fn parse_kdv_rhs() {
        let f = parse_expr("u1_1*u1_0 + u1_3", CoveringMode::Plain).unwrap();
        assert_eq!(f, u(0).mul(&u(1)).add(&u(3)));
    }

    #[test]
    fn parse_second_kdv_operator() {
        let op = parse_op("D^3 + (2/3)*u1_0*D + (1/3)*u1_1").unwrap();
        let expected = DiffOp::scalar(vec![
            (DPoly::one(), 3),
            (u(0).scale(&rat(2, 3)), 1),
            (u(1).scale(&rat(1, 3)), 0),
        ]);
        assert_eq!(op, expected);
        // Entered verbatim, the operator is skew-adjoint.
        assert_eq!(op.adjoint(CoveringMode::Plain).unwrap(), op.neg());
    }

    #[test]
    fn odd_square_collapses_to_zero() {
        let p = parse_expr("p1_0^2", CoveringMode::LStar).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn mode_legality_enforced() {
        assert!(matches!(
            parse_expr("p1_0", CoveringMode::Plain),
            Err(CoreError::IllegalGenerator(..))
        ));
        assert!(parse_expr("p1_0", CoveringMode::LStar).is_ok());
        assert!(matches!(
            parse_expr("q1_0", CoveringMode::LStar),
            Err(CoreError::IllegalGenerator(..))
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_expr("u1_0 + ", CoveringMode::Plain) {
            Err(CoreError::Syntax { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_expr("u1_0 $ 2", CoveringMode::Plain) {
            Err(CoreError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn operator_composition_in_products() {
        // D*u1_0 normalizes through Leibniz.
        let op = parse_op("D*u1_0").unwrap();
        let expected = DiffOp::scalar(vec![(u(0), 1), (u(1), 0)]);
        assert_eq!(op, expected);
    }

    #[test]
    fn matrix_operators_parse() {
        let op = parse_op("[[D,0],[u1_0,D^2]]").unwrap();
        assert_eq!(op.rows(), 2);
        assert_eq!(op.cols(), 2);
        let printed = op.to_string();
        let back = parse_op(&printed).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn scalars_lift_over_matrices() {
        let op = parse_op("2*[[D,0],[0,D]]").unwrap();
        let expected = parse_op("[[2*D,0],[0,2*D]]").unwrap();
        assert_eq!(op, expected);
    }

    #[test]
    fn vector_parsing() {
        let v = parse_vec("[u1_0, u2_1]", CoveringMode::Plain, Role::Section).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(max_component(v.entry(1)), 2);
        let s = parse_vec("u1_0", CoveringMode::Plain, Role::Section).unwrap();
        assert_eq!(s.len(), 1);
    }

    proptest! {
        #[test]
        fn print_parse_round_trip_poly(seed in any::<u64>()) {
            let spec = sample::PolySpec {
                components: 2,
                max_jet: 3,
                max_degree: 3,
                terms: 4,
                mode: CoveringMode::Whitney,
                allow_xt: true,
            };
            let p = sample::rand_poly(&mut sample::rng(seed), &spec);
            let printed = p.to_string();
            let back = parse_expr(&printed, CoveringMode::Whitney).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn print_parse_round_trip_op(seed in any::<u64>()) {
            let op = sample::rand_op(&mut sample::rng(seed), 2, 2, 2, 2);
            let printed = op.to_string();
            let back = parse_op(&printed).unwrap();
            prop_assert_eq!(back, op);
        }
    }
}
