//! S-expression reader for cover-tree documents.

use std::fmt;
use std::str::FromStr;

use super::{Branch, CountExpr, Factor, Node, TreeDoc, WedgeGroup};
use crate::intmath::Natural;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self, c: char) {
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.bump(c);
            } else if c == ';' {
                while let Some(c) = self.src[self.pos..].chars().next() {
                    self.bump(c);
                    if c == '\n' {
                        break;
                    }
                }
            } else if c == '(' {
                out.push((Tok::Open, self.line, self.col));
                self.bump(c);
            } else if c == ')' {
                out.push((Tok::Close, self.line, self.col));
                self.bump(c);
            } else {
                let (line, col) = (self.line, self.col);
                let start = self.pos;
                while let Some(c) = self.src[self.pos..].chars().next() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    self.bump(c);
                }
                out.push((Tok::Atom(self.src[start..self.pos].to_string()), line, col));
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    idx: usize,
}

impl Parser {
    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.idx)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|&(_, l, c)| (l, c + 1))
                    .unwrap_or((1, 1))
            })
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expect_open(&mut self) -> Result<(), ParseError> {
        match self.next() {
            Some(Tok::Open) => Ok(()),
            _ => {
                self.idx = self.idx.saturating_sub(1);
                self.err("expected `(`")
            }
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Close) => {
                self.idx += 1;
                Ok(())
            }
            _ => self.err("expected `)`"),
        }
    }

    fn atom(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Atom(_)) => match self.next() {
                Some(Tok::Atom(s)) => Ok(s),
                _ => unreachable!(),
            },
            _ => self.err("expected an atom"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let got = self.atom()?;
        if got == kw {
            Ok(())
        } else {
            self.idx -= 1;
            self.err(format!("expected `{kw}`, found `{got}`"))
        }
    }

    /// True if the next token is the given bare atom (without consuming).
    fn peek_atom(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Atom(s)) if s == kw)
    }

    /// True if the next two tokens are `(` followed by the given head atom.
    fn peek_list(&self, head: &str) -> bool {
        matches!(self.toks.get(self.idx).map(|(t, _, _)| t), Some(Tok::Open))
            && matches!(
                self.toks.get(self.idx + 1).map(|(t, _, _)| t),
                Some(Tok::Atom(s)) if s == head
            )
    }

    fn factor(&mut self) -> Result<Factor, ParseError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.idx += 1;
                self.keyword("^")?;
                let base = self.factor()?;
                let exp = self.small_int()?;
                self.expect_close()?;
                Ok(Factor::Pow(Box::new(base), exp))
            }
            Some(Tok::Atom(s)) => {
                let s = s.clone();
                self.idx += 1;
                if s.chars().all(|c| c.is_ascii_digit()) {
                    match Natural::from_str(&s) {
                        Ok(n) => Ok(Factor::Int(n)),
                        Err(_) => {
                            self.idx -= 1;
                            self.err(format!("bad integer `{s}`"))
                        }
                    }
                } else {
                    Ok(Factor::Sym(s))
                }
            }
            _ => self.err("expected a factor"),
        }
    }

    fn small_int(&mut self) -> Result<u32, ParseError> {
        let s = self.atom()?;
        s.parse::<u32>().map_err(|_| {
            let (line, col) = self.here();
            ParseError {
                line,
                col,
                message: format!("expected a small integer, found `{s}`"),
            }
        })
    }

    fn count_expr(&mut self) -> Result<CountExpr, ParseError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.idx += 1;
                let op = self.atom()?;
                let a = self.count_expr()?;
                let b = self.count_expr()?;
                self.expect_close()?;
                match op.as_str() {
                    "+" => Ok(CountExpr::Add(Box::new(a), Box::new(b))),
                    "-" => Ok(CountExpr::Sub(Box::new(a), Box::new(b))),
                    "*" => Ok(CountExpr::Mul(Box::new(a), Box::new(b))),
                    _ => self.err(format!("unknown count operator `{op}`")),
                }
            }
            Some(Tok::Atom(s)) => {
                let s = s.clone();
                self.idx += 1;
                if s.chars().all(|c| c.is_ascii_digit())
                    || (s.starts_with('-') && s.len() > 1)
                {
                    match s.parse::<i64>() {
                        Ok(n) => Ok(CountExpr::Int(n)),
                        Err(_) => {
                            self.idx -= 1;
                            self.err(format!("bad count integer `{s}`"))
                        }
                    }
                } else {
                    Ok(CountExpr::Sym(s))
                }
            }
            _ => self.err("expected a count expression"),
        }
    }

    /// One or more factors, stopping at `)`, any `:keyword`, or `@pin`.
    fn factors(&mut self) -> Result<Vec<Factor>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Close) | None => break,
                Some(Tok::Atom(s)) if s.starts_with(':') || s == "@pin" => break,
                _ => out.push(self.factor()?),
            }
        }
        if out.is_empty() {
            self.err("expected at least one factor")
        } else {
            Ok(out)
        }
    }

    fn branch(&mut self) -> Result<Branch, ParseError> {
        self.expect_open()?;
        let head = self.atom()?;
        let branch = match head.as_str() {
            "leaf" => {
                let factors = self.factors()?;
                let pin = if self.peek_atom("@pin") {
                    self.idx += 1;
                    Some(self.count_expr()?)
                } else {
                    None
                };
                Branch::Leaf { factors, pin }
            }
            "rep" => {
                let factors = self.factors()?;
                self.keyword(":count")?;
                let count = self.count_expr()?;
                Branch::Rep { factors, count }
            }
            "wedge" => {
                let mut groups = Vec::new();
                while self.peek_list("set") || self.peek_list("pow") {
                    self.expect_open()?;
                    let kind = self.atom()?;
                    groups.push(if kind == "set" {
                        WedgeGroup::Set(self.factors()?)
                    } else {
                        let base = self.factor()?;
                        let alpha = self.small_int()?;
                        WedgeGroup::Pow(base, alpha)
                    });
                    self.expect_close()?;
                }
                if groups.is_empty() {
                    return self.err("wedge needs at least one group");
                }
                self.keyword(":base")?;
                let base = self.factors()?;
                let take = if self.peek_atom(":take") {
                    self.idx += 1;
                    Some(self.count_expr()?)
                } else {
                    None
                };
                Branch::Wedge { groups, base, take }
            }
            "arrow" => Branch::Arrow,
            "node" => {
                self.idx -= 2; // rewind `(` `node` for the node parser
                return Ok(Branch::Sub(self.node_inner()?));
            }
            other => {
                self.idx -= 1;
                return self.err(format!("unknown branch head `{other}`"));
            }
        };
        self.expect_close()?;
        Ok(branch)
    }

    fn node_inner(&mut self) -> Result<Node, ParseError> {
        self.expect_open()?;
        self.keyword("node")?;
        let split = self.factor()?;
        let mut branches = Vec::new();
        while !matches!(self.peek(), Some(Tok::Close) | None) {
            branches.push(self.branch()?);
        }
        self.expect_close()?;
        Ok(Node { split, branches })
    }

    fn document(&mut self) -> Result<TreeDoc, ParseError> {
        self.expect_open()?;
        self.keyword("cover-tree")?;
        self.keyword(":id")?;
        let id = self.atom()?;
        self.keyword(":qmin")?;
        let q_min = self.atom()?.parse::<u64>().map_err(|_| {
            let (line, col) = self.here();
            ParseError {
                line,
                col,
                message: "bad :qmin value".into(),
            }
        })?;
        self.keyword(":k")?;
        let k = self.factor()?;
        self.keyword(":t")?;
        let t = self.count_expr()?;
        let params = if self.peek_atom(":params") {
            self.idx += 1;
            self.expect_open()?;
            let mut ps = Vec::new();
            while let Some(Tok::Atom(_)) = self.peek() {
                ps.push(self.atom()?);
            }
            self.expect_close()?;
            ps
        } else {
            Vec::new()
        };
        let root = self.node_inner()?;
        self.expect_close()?;
        if self.peek().is_some() {
            return self.err("trailing tokens after the document");
        }
        Ok(TreeDoc {
            id,
            q_min,
            k,
            t,
            params,
            root,
        })
    }
}

/// Parses a cover-tree document from source text.
pub fn parse_doc(src: &str) -> Result<TreeDoc, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    Parser { toks, idx: 0 }.document()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intmath::nat;

    #[test]
    fn minimal_document() {
        let doc = parse_doc(
            "(cover-tree :id tiny :qmin 5 :k 3 :t 2\n\
             \x20 (node 3 (leaf 3) (rep 3 :count 1) (arrow)))",
        )
        .unwrap();
        assert_eq!(doc.id, "tiny");
        assert_eq!(doc.q_min, 5);
        assert_eq!(doc.k, Factor::Int(nat(3)));
        assert_eq!(doc.root.branches.len(), 3);
        assert!(matches!(doc.root.branches[2], Branch::Arrow));
    }

    #[test]
    fn comments_and_pins() {
        let doc = parse_doc(
            "; a covering sketch\n\
             (cover-tree :id c :qmin 5 :k 9 :t 3 ; inline note\n\
             \x20 (node 3 (leaf 3 @pin 1) (leaf (^ 3 2)) (leaf 3 5)))",
        )
        .unwrap();
        match &doc.root.branches[0] {
            Branch::Leaf { pin: Some(p), .. } => assert_eq!(p, &CountExpr::Int(1)),
            other => panic!("unexpected branch {other:?}"),
        }
        match &doc.root.branches[1] {
            Branch::Leaf { factors, .. } => {
                assert_eq!(factors[0], Factor::Pow(Box::new(Factor::Int(nat(3))), 2))
            }
            other => panic!("unexpected branch {other:?}"),
        }
        match &doc.root.branches[2] {
            Branch::Leaf { factors, .. } => assert_eq!(factors.len(), 2),
            other => panic!("unexpected branch {other:?}"),
        }
    }

    #[test]
    fn wedges_params_and_nesting() {
        let doc = parse_doc(
            "(cover-tree :id w :qmin 31 :k P :t (- P 5) :params (P)\n\
             \x20 (node 3\n\
             \x20   (leaf 3)\n\
             \x20   (node 5 (arrow) (wedge (set 3 P) :base 5 11 :take 2)\n\
             \x20           (rep P :count 2))\n\
             \x20   (wedge (pow 3 2) (set 5 7) :base 13)))",
        )
        .unwrap();
        assert_eq!(doc.params, vec!["P".to_string()]);
        let Branch::Sub(inner) = &doc.root.branches[1] else {
            panic!("expected a nested node");
        };
        let Branch::Wedge { groups, base, take } = &inner.branches[1] else {
            panic!("expected a wedge");
        };
        assert_eq!(groups.len(), 1);
        assert_eq!(base.len(), 2);
        assert_eq!(take, &Some(CountExpr::Int(2)));
        let Branch::Wedge { groups, .. } = &doc.root.branches[2] else {
            panic!("expected a wedge");
        };
        assert!(matches!(&groups[0], WedgeGroup::Pow(_, 2)));
    }

    #[test]
    fn error_positions() {
        let err = parse_doc("(cover-tree :id x :qmin 5 :k 3)").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.col, 31); // the `)` where `:t` was expected
        let err = parse_doc("(cover-tree :id x :qmin 5 :k 3 :t 1\n(node 3 (what)))").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("what"));
    }
}
