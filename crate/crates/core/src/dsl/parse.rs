//! Lexer and recursive-descent parser for the map-definition language.
//!
//! ```text
//! file   := decl*
//! decl   := 'space' IDENT '=' space | 'map' IDENT '=' pw | 'phi' '=' pw
//! space  := sterm ('|' sterm)*
//! sterm  := 'interval' ival | 'seq' '(' 'dim' '=' INT ',' 'interval' ival ')'
//! ival   := ('['|'(') cexpr ',' (cexpr|'inf') (']'|')')
//! pw     := 'piecewise' IDENT '{' (ival '->' expr ';')* '}'
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' INT)?
//! atom   := NUMBER | IDENT | '-' atom | '(' expr ')'
//! ```
//!
//! Numbers are integers, decimals, or rationals `p/q` (rationals arrive via
//! the division operator and constant folding). `[`/`]` endpoints are
//! closed, `(`/`)` open; `#` starts a comment. Constant subexpressions fold
//! at parse time, so `1/3` and `(3/2)*t^2` carry exact rationals.

use std::fmt;

use thiserror::Error;

use crate::dsl::expr::Expr;
use crate::dsl::piecewise::{MapError, Piece, PiecewiseMap};
use crate::metric::{IntervalDomain, IntervalUnion, MetricSpace};
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("map '{name}': {source}")]
    Map { name: String, source: MapError },
    #[error("missing 'space' declaration")]
    MissingSpace,
    #[error("no 'map' declarations found")]
    NoMaps,
    #[error("duplicate declaration of '{0}'")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(Real),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Arrow,
    Eq,
    Pipe,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::Plus => write!(f, "'+'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::Star => write!(f, "'*'"),
            Tok::Slash => write!(f, "'/'"),
            Tok::Caret => write!(f, "'^'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::LBrace => write!(f, "'{{'"),
            Tok::RBrace => write!(f, "'}}'"),
            Tok::Comma => write!(f, "','"),
            Tok::Semi => write!(f, "';'"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::Eq => write!(f, "'='"),
            Tok::Pipe => write!(f, "'|'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();
    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            out.push(Lexed { tok: $tok, line: $line, col: $col })
        };
    }
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
            }
            '0'..='9' | '.' => {
                let mut s = String::new();
                let mut seen_dot = false;
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        bump(&mut chars);
                    } else if c == '.' && !seen_dot {
                        seen_dot = true;
                        s.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                let n = Real::parse(&s).map_err(|e| ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    msg: format!("bad number '{s}': {e}"),
                })?;
                push!(Tok::Number(n), tline, tcol);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(s), tline, tcol);
            }
            _ => {
                bump(&mut chars);
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => {
                        if chars.peek() == Some(&'>') {
                            bump(&mut chars);
                            Tok::Arrow
                        } else {
                            Tok::Minus
                        }
                    }
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '=' => Tok::Eq,
                    '|' => Tok::Pipe,
                    other => {
                        return Err(ParseError::Syntax {
                            line: tline,
                            col: tcol,
                            msg: format!("unexpected character '{other}'"),
                        })
                    }
                };
                push!(tok, tline, tcol);
            }
        }
    }
    out.push(Lexed { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (u32, u32) {
        (self.toks[self.pos].line, self.toks[self.pos].col)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax { line, col, msg: msg.into() })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected an identifier, found {other}")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => self.err(format!("expected '{kw}', found {other}")),
        }
    }

    // ---- expressions ----

    fn fold_binary(&self, op: &Tok, l: Expr, r: Expr) -> Result<Expr, ParseError> {
        if let (Expr::Const(a), Expr::Const(b)) = (&l, &r) {
            let folded = match op {
                Tok::Plus => Ok(a.clone() + b.clone()),
                Tok::Minus => Ok(a.clone() - b.clone()),
                Tok::Star => Ok(a.clone() * b.clone()),
                Tok::Slash => a.checked_div(b),
                _ => unreachable!(),
            };
            return match folded {
                Ok(v) => Ok(Expr::Const(v)),
                Err(e) => self.err(format!("constant arithmetic failed: {e}")),
            };
        }
        Ok(match op {
            Tok::Plus => Expr::Add(Box::new(l), Box::new(r)),
            Tok::Minus => Expr::Sub(Box::new(l), Box::new(r)),
            Tok::Star => Expr::Mul(Box::new(l), Box::new(r)),
            Tok::Slash => Expr::Div(Box::new(l), Box::new(r)),
            _ => unreachable!(),
        })
    }

    fn expr(&mut self, var: &str) -> Result<Expr, ParseError> {
        let mut acc = self.term(var)?;
        while matches!(self.peek(), Tok::Plus | Tok::Minus) {
            let op = self.next();
            let rhs = self.term(var)?;
            acc = self.fold_binary(&op, acc, rhs)?;
        }
        Ok(acc)
    }

    fn term(&mut self, var: &str) -> Result<Expr, ParseError> {
        let mut acc = self.factor(var)?;
        while matches!(self.peek(), Tok::Star | Tok::Slash) {
            let op = self.next();
            let rhs = self.factor(var)?;
            acc = self.fold_binary(&op, acc, rhs)?;
        }
        Ok(acc)
    }

    fn factor(&mut self, var: &str) -> Result<Expr, ParseError> {
        let base = self.atom(var)?;
        if *self.peek() == Tok::Caret {
            self.next();
            let neg = if *self.peek() == Tok::Minus {
                self.next();
                true
            } else {
                false
            };
            let k = match self.peek().clone() {
                Tok::Number(n) => {
                    self.next();
                    match n.to_exact().and_then(|q| {
                        if q.is_integer() {
                            use num_traits::ToPrimitive;
                            q.to_integer().to_i32()
                        } else {
                            None
                        }
                    }) {
                        Some(k) => k,
                        None => return self.err("exponent must be a small integer"),
                    }
                }
                other => return self.err(format!("expected an integer exponent, found {other}")),
            };
            let k = if neg { -k } else { k };
            if let Expr::Const(c) = &base {
                return match c.powi(k) {
                    Ok(v) => Ok(Expr::Const(v)),
                    Err(e) => self.err(format!("constant arithmetic failed: {e}")),
                };
            }
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self, var: &str) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.next();
                Ok(Expr::Const(n))
            }
            Tok::Ident(name) => {
                if name == var {
                    self.next();
                    Ok(Expr::Var)
                } else {
                    self.err(format!("unknown identifier '{name}' (the variable here is '{var}')"))
                }
            }
            Tok::Minus => {
                self.next();
                let inner = self.atom(var)?;
                Ok(match inner {
                    Expr::Const(c) => Expr::Const(-c),
                    e => Expr::Neg(Box::new(e)),
                })
            }
            Tok::LParen => {
                self.next();
                let e = self.expr(var)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.err(format!("expected a number, variable, or '(', found {other}")),
        }
    }

    fn const_expr(&mut self) -> Result<Real, ParseError> {
        // parse with an unmatchable variable name so identifiers error out
        let e = self.expr("\u{1}")?;
        match e {
            Expr::Const(c) => Ok(c),
            _ => self.err("interval endpoints must be constant"),
        }
    }

    // ---- intervals, spaces, maps ----

    fn interval(&mut self) -> Result<IntervalDomain, ParseError> {
        let lo_closed = match self.next() {
            Tok::LBracket => true,
            Tok::LParen => false,
            other => return self.err(format!("expected '[' or '(', found {other}")),
        };
        let lo = self.const_expr()?;
        self.expect(Tok::Comma)?;
        let hi = match self.peek() {
            Tok::Ident(s) if s == "inf" => {
                self.next();
                None
            }
            _ => Some(self.const_expr()?),
        };
        let hi_closed = match self.next() {
            Tok::RBracket => true,
            Tok::RParen => false,
            other => return self.err(format!("expected ']' or ')', found {other}")),
        };
        if hi.is_none() && hi_closed {
            return self.err("an unbounded endpoint must be open: use 'inf)'");
        }
        Ok(IntervalDomain::new(lo, hi, lo_closed, hi_closed))
    }

    fn space(&mut self) -> Result<MetricSpace, ParseError> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "interval" => {
                let mut parts = Vec::new();
                loop {
                    self.expect_keyword("interval")?;
                    parts.push(self.interval()?);
                    if *self.peek() == Tok::Pipe {
                        self.next();
                    } else {
                        break;
                    }
                }
                let u = IntervalUnion::new(parts);
                if u.is_empty() {
                    return self.err("empty space domain");
                }
                Ok(MetricSpace::Interval(u))
            }
            Tok::Ident(kw) if kw == "seq" => {
                self.next();
                self.expect(Tok::LParen)?;
                self.expect_keyword("dim")?;
                self.expect(Tok::Eq)?;
                let dim = match self.peek().clone() {
                    Tok::Number(n) => {
                        self.next();
                        match n.to_exact().and_then(|q| {
                            if q.is_integer() {
                                use num_traits::ToPrimitive;
                                q.to_integer().to_usize()
                            } else {
                                None
                            }
                        }) {
                            Some(d) if d >= 1 => d,
                            _ => return self.err("dim must be a positive integer"),
                        }
                    }
                    other => return self.err(format!("expected a dimension, found {other}")),
                };
                self.expect(Tok::Comma)?;
                self.expect_keyword("interval")?;
                let coord = self.interval()?;
                self.expect(Tok::RParen)?;
                if coord.is_empty() {
                    return self.err("empty coordinate domain");
                }
                Ok(MetricSpace::SeqSpace { dim, coord })
            }
            other => self.err(format!("expected 'interval' or 'seq', found {other}")),
        }
    }

    fn piecewise(&mut self, name: &str) -> Result<PiecewiseMap, ParseError> {
        self.expect_keyword("piecewise")?;
        let var = self.expect_ident()?;
        self.expect(Tok::LBrace)?;
        let mut pieces = Vec::new();
        while *self.peek() != Tok::RBrace {
            let domain = self.interval()?;
            self.expect(Tok::Arrow)?;
            let body = self.expr(&var)?;
            self.expect(Tok::Semi)?;
            pieces.push(Piece { domain, body });
        }
        self.expect(Tok::RBrace)?;
        PiecewiseMap::new(var, pieces)
            .map_err(|source| ParseError::Map { name: name.to_string(), source })
    }
}

/// One parsed definition file: a space, named maps, and an optional phi.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub space_name: String,
    pub space: MetricSpace,
    pub maps: Vec<(String, PiecewiseMap)>,
    pub phi: Option<PiecewiseMap>,
}

impl MapFile {
    pub fn get(&self, name: &str) -> Option<&PiecewiseMap> {
        self.maps.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// Override the dimension of a sequence space (no effect on intervals).
    pub fn with_seq_dim(mut self, dim: usize) -> Self {
        if let MetricSpace::SeqSpace { dim: d, .. } = &mut self.space {
            *d = dim;
        }
        self
    }
}

impl fmt::Display for MapFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "space {} = ", self.space_name)?;
        match &self.space {
            MetricSpace::Interval(u) => {
                for (i, c) in u.components().iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "interval{c}")?;
                }
            }
            MetricSpace::SeqSpace { dim, coord } => {
                write!(f, "seq(dim={dim}, interval{coord})")?;
            }
        }
        writeln!(f)?;
        for (name, m) in &self.maps {
            writeln!(f, "map {name} = {m}")?;
        }
        if let Some(phi) = &self.phi {
            writeln!(f, "phi = {phi}")?;
        }
        Ok(())
    }
}

/// Parse a single `piecewise ...` definition.
pub fn parse_map(text: &str) -> Result<PiecewiseMap, ParseError> {
    let mut p = Parser::new(text)?;
    let m = p.piecewise("<map>")?;
    p.expect(Tok::Eof)?;
    Ok(m)
}

/// Parse a standalone expression in the given variable (mostly for tests).
pub fn parse_expr(text: &str, var: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr(var)?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

/// Parse a full definition file and validate coverage: every map must cover
/// the declared space's scalar domain, and phi must cover [0, inf).
pub fn parse_mapfile(text: &str) -> Result<MapFile, ParseError> {
    let mut p = Parser::new(text)?;
    let mut space: Option<(String, MetricSpace)> = None;
    let mut maps: Vec<(String, PiecewiseMap)> = Vec::new();
    let mut phi: Option<PiecewiseMap> = None;
    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(kw) if kw == "space" => {
                p.next();
                let name = p.expect_ident()?;
                p.expect(Tok::Eq)?;
                let s = p.space()?;
                if space.is_some() {
                    return Err(ParseError::Duplicate("space".into()));
                }
                space = Some((name, s));
            }
            Tok::Ident(kw) if kw == "map" => {
                p.next();
                let name = p.expect_ident()?;
                p.expect(Tok::Eq)?;
                let m = p.piecewise(&name)?;
                if maps.iter().any(|(n, _)| *n == name) {
                    return Err(ParseError::Duplicate(name));
                }
                maps.push((name, m));
            }
            Tok::Ident(kw) if kw == "phi" => {
                p.next();
                p.expect(Tok::Eq)?;
                let m = p.piecewise("phi")?;
                if phi.is_some() {
                    return Err(ParseError::Duplicate("phi".into()));
                }
                phi = Some(m);
            }
            other => {
                return p.err(format!("expected 'space', 'map', or 'phi', found {other}"));
            }
        }
    }
    let (space_name, space) = space.ok_or(ParseError::MissingSpace)?;
    if maps.is_empty() {
        return Err(ParseError::NoMaps);
    }
    let scalar_domain = space.scalar_domain();
    for (name, m) in &maps {
        m.check_covers(&scalar_domain)
            .map_err(|source| ParseError::Map { name: name.clone(), source })?;
    }
    if let Some(phi_map) = &phi {
        let half_line =
            IntervalUnion::single(IntervalDomain::unbounded_above(Real::zero(), true));
        phi_map
            .check_covers(&half_line)
            .map_err(|source| ParseError::Map { name: "phi".into(), source })?;
    }
    Ok(MapFile { space_name, space, maps, phi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_piecewise_map() {
        let m = parse_map("piecewise x { [0, 2/3) -> 2/3; [2/3, 1) -> 4/3 - x; }").unwrap();
        assert_eq!(m.pieces.len(), 2);
        assert_eq!(m.pieces[0].body, Expr::Const(Real::from_ratio(2, 3)));
        assert_eq!(
            m.eval_scalar(&Real::from_ratio(2, 3)).unwrap(),
            Real::from_ratio(2, 3)
        );
    }

    #[test]
    fn parses_rational_function() {
        let m = parse_map("piecewise t { [0, inf) -> t^2/(1+t); }").unwrap();
        assert_eq!(
            m.eval_scalar(&Real::from_ratio(1, 3)).unwrap(),
            Real::from_ratio(1, 12)
        );
    }

    #[test]
    fn rejects_overlapping_pieces() {
        let err = parse_map("piecewise x { [0,1) -> x; [0.5, 2) -> 1; }").unwrap_err();
        assert!(matches!(err, ParseError::Map { source: MapError::OverlappingPieces { .. }, .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_map("piecewise x {\n [0, 1) -> ; }").unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert!(col > 1);
            }
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn constant_folding_yields_exact_rationals() {
        let e = parse_expr("1 - (1/2)*2/3", "x").unwrap();
        assert_eq!(e, Expr::Const(Real::from_ratio(2, 3)));
        let e = parse_expr("(3/2)*t^2", "t").unwrap();
        let v = e.eval(&Real::from_ratio(1, 3)).unwrap();
        assert_eq!(v, Real::from_ratio(1, 6));
    }

    #[test]
    fn mapfile_roundtrip() {
        let text = "\
# a small worked pair
space X = interval[1/2, 1]
map f = piecewise x { [1/2, 2/3) -> 1; [2/3, 1] -> x; }
map T = piecewise x { [1/2, 2/3) -> 1/2; [2/3, 1] -> 1 - (1/2)*x; }
phi   = piecewise t { [0, 2/3] -> (3/2)*t^2; (2/3, inf) -> 10/(9*(1+t)); }
";
        let parsed = parse_mapfile(text).unwrap();
        let printed = parsed.to_string();
        let reparsed = parse_mapfile(&printed).unwrap();
        assert_eq!(parsed, reparsed);
    }

    #[test]
    fn mapfile_with_union_space() {
        let text = "\
space K = interval[0, 0] | interval[1/3, 1]
map T = piecewise x { [0, 0] -> 1/3; [1/3, 1] -> 1/3 + (1/2)*x; }
";
        let parsed = parse_mapfile(text).unwrap();
        match &parsed.space {
            MetricSpace::Interval(u) => assert_eq!(u.components().len(), 2),
            other => panic!("expected an interval union, got {other:?}"),
        }
        let reparsed = parse_mapfile(&parsed.to_string()).unwrap();
        assert_eq!(parsed, reparsed);
    }

    #[test]
    fn mapfile_seq_space() {
        let text = "\
space X = seq(dim=8, interval[0, 1])
map f = piecewise x { [0, 1] -> x; }
map T = piecewise x { [0, 1] -> x/(1+x); }
phi = piecewise t { [0, inf) -> t^2/(1+t); }
";
        let parsed = parse_mapfile(text).unwrap();
        assert_eq!(parsed.space.dim(), 8);
        let resized = parsed.clone().with_seq_dim(32);
        assert_eq!(resized.space.dim(), 32);
        let reparsed = parse_mapfile(&parsed.to_string()).unwrap();
        assert_eq!(parsed, reparsed);
    }

    #[test]
    fn coverage_gap_is_rejected() {
        let text = "\
space X = interval[0, 1]
map f = piecewise x { [0, 1/2] -> x; }
";
        let err = parse_mapfile(text).unwrap_err();
        assert!(matches!(err, ParseError::Map { source: MapError::CoverageGap { .. }, .. }));
    }
}
