//! An s-expression DSL for tree-diagram descriptions of covering systems.
//!
//! A document describes a rooted tree. Each node splits its residue class
//! `c (mod M)` by a prime `p` into the `p` subclasses `c + uM (mod pM)`, and
//! its branches claim exactly those `p` slots:
//!
//! - `(leaf f...)` — one congruence whose modulus is the product of the
//!   factors; it covers its slot outright. `@pin r` forces the residue.
//! - `(rep f... :count n)` — `n` slots, each emitting a congruence with the
//!   same modulus (used for the one repeated modulus `k`).
//! - `(wedge group... :base f... [:take n])` — a block of congruences whose
//!   moduli are products of one choice from each group times the base, in a
//!   fixed enumeration order; each modulus takes one slot.
//! - `(arrow)` — a tower of prime-power congruences `p^j` descending a
//!   canonical chain, leaving a single deep class for the mop-up step.
//! - a nested `(node ...)`.
//!
//! Residues are nowhere written in the source diagrams; [`expand`] assigns
//! them deterministically, maximizing exact duplicates so that repeated
//! labels collapse to a single congruence, backtracking where the greedy
//! choice paints itself into a corner.

mod expand;
mod parse;

pub use expand::{
    default_q, expand, expand_lenient, mop_up, ExpandError, Expansion, LeftoverClass, MopUpError,
};
pub use parse::parse_doc;

use std::collections::BTreeMap;
use std::fmt;

use crate::intmath::Natural;
use num_traits::One;

/// A multiplicative factor in a modulus expression: an integer literal, a
/// symbolic parameter, or a power of another factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factor {
    Int(Natural),
    Sym(String),
    Pow(Box<Factor>, u32),
}

/// An arithmetic count expression: integer, parameter, or `(+ - *)` of two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CountExpr {
    Int(i64),
    Sym(String),
    Add(Box<CountExpr>, Box<CountExpr>),
    Sub(Box<CountExpr>, Box<CountExpr>),
    Mul(Box<CountExpr>, Box<CountExpr>),
}

/// One choice group of a wedge: either a set of optional factors (each in or
/// out) or a power ladder `1, m, m^2, ..., m^alpha`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WedgeGroup {
    Set(Vec<Factor>),
    Pow(Factor, u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Branch {
    Leaf {
        factors: Vec<Factor>,
        pin: Option<CountExpr>,
    },
    Rep {
        factors: Vec<Factor>,
        count: CountExpr,
    },
    Wedge {
        groups: Vec<WedgeGroup>,
        base: Vec<Factor>,
        take: Option<CountExpr>,
    },
    Arrow,
    Sub(Node),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub split: Factor,
    pub branches: Vec<Branch>,
}

/// A parsed cover-tree document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDoc {
    pub id: String,
    pub q_min: u64,
    pub k: Factor,
    pub t: CountExpr,
    pub params: Vec<String>,
    pub root: Node,
}

/// Parameter bindings for evaluating symbolic factors and counts.
pub type Bindings = BTreeMap<String, Natural>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    UnboundSymbol(String),
    NegativeCount(i64),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnboundSymbol(s) => write!(f, "unbound symbol `{s}`"),
            EvalError::NegativeCount(n) => write!(f, "count expression evaluated to {n} < 0"),
        }
    }
}

impl std::error::Error for EvalError {}

impl Factor {
    pub fn eval(&self, bindings: &Bindings) -> Result<Natural, EvalError> {
        match self {
            Factor::Int(n) => Ok(n.clone()),
            Factor::Sym(s) => bindings
                .get(s)
                .cloned()
                .ok_or_else(|| EvalError::UnboundSymbol(s.clone())),
            Factor::Pow(base, exp) => Ok(base.eval(bindings)?.pow(*exp)),
        }
    }
}

/// Evaluates a product of factors.
pub fn eval_product(factors: &[Factor], bindings: &Bindings) -> Result<Natural, EvalError> {
    let mut acc = Natural::one();
    for f in factors {
        acc *= f.eval(bindings)?;
    }
    Ok(acc)
}

impl CountExpr {
    pub fn eval_signed(&self, bindings: &Bindings) -> Result<i64, EvalError> {
        Ok(match self {
            CountExpr::Int(n) => *n,
            CountExpr::Sym(s) => {
                let v = bindings
                    .get(s)
                    .ok_or_else(|| EvalError::UnboundSymbol(s.clone()))?;
                i64::try_from(v.clone()).expect("parameter too large for a count")
            }
            CountExpr::Add(a, b) => a.eval_signed(bindings)? + b.eval_signed(bindings)?,
            CountExpr::Sub(a, b) => a.eval_signed(bindings)? - b.eval_signed(bindings)?,
            CountExpr::Mul(a, b) => a.eval_signed(bindings)? * b.eval_signed(bindings)?,
        })
    }

    pub fn eval(&self, bindings: &Bindings) -> Result<u64, EvalError> {
        let v = self.eval_signed(bindings)?;
        u64::try_from(v).map_err(|_| EvalError::NegativeCount(v))
    }
}

/// Enumerates the moduli of a wedge in canonical order.
///
/// Each group contributes one digit position of a mixed-radix counter: a set
/// of `l` factors contributes `l` binary digits (one per member, in listed
/// order), a power ladder of exponent `alpha` one digit of radix `alpha + 1`.
/// The counter increments with the first-listed digit varying fastest, and
/// every modulus is the product of the selected factors times the base.
pub fn wedge_moduli(
    groups: &[WedgeGroup],
    base: &[Factor],
    bindings: &Bindings,
) -> Result<Vec<Natural>, EvalError> {
    // Digit radices plus, per digit, the value choices it ranges over.
    let mut digits: Vec<Vec<Natural>> = Vec::new();
    for g in groups {
        match g {
            WedgeGroup::Set(members) => {
                for m in members {
                    digits.push(vec![Natural::one(), m.eval(bindings)?]);
                }
            }
            WedgeGroup::Pow(base_f, alpha) => {
                let b = base_f.eval(bindings)?;
                digits.push((0..=*alpha).map(|e| b.pow(e)).collect());
            }
        }
    }
    let base_val = eval_product(base, bindings)?;
    let total: usize = digits.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut m = base_val.clone();
        for choices in &digits {
            m *= &choices[idx % choices.len()];
            idx /= choices.len();
        }
        out.push(m);
    }
    Ok(out)
}

/// Number of slots a branch claims at its parent node.
pub fn branch_slots(branch: &Branch, bindings: &Bindings) -> Result<u64, EvalError> {
    Ok(match branch {
        Branch::Leaf { .. } | Branch::Arrow | Branch::Sub(_) => 1,
        Branch::Rep { count, .. } => count.eval(bindings)?,
        Branch::Wedge { groups, base: _, take } => {
            let full: u64 = groups
                .iter()
                .map(|g| match g {
                    WedgeGroup::Set(m) => 1u64 << (m.len() as u64),
                    WedgeGroup::Pow(_, alpha) => u64::from(*alpha) + 1,
                })
                .product();
            match take {
                Some(t) => {
                    let t = t.eval(bindings)?;
                    t.min(full)
                }
                None => full,
            }
        }
    })
}

/// A diagnostic from [`validate_doc`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Structural validation: split primes are prime, slot counts match the split
/// prime at every node, and counts are non-negative — all under the given
/// bindings (symbolic documents need their parameters bound to be checkable).
pub fn validate_doc(doc: &TreeDoc, bindings: &Bindings) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    validate_node(&doc.root, "root", bindings, &mut diags);
    if let Err(e) = doc.t.eval(bindings) {
        diags.push(Diagnostic {
            path: "t".into(),
            message: e.to_string(),
        });
    }
    if let Err(e) = doc.k.eval(bindings) {
        diags.push(Diagnostic {
            path: "k".into(),
            message: e.to_string(),
        });
    }
    diags
}

fn validate_node(node: &Node, path: &str, bindings: &Bindings, diags: &mut Vec<Diagnostic>) {
    let p = match node.split.eval(bindings) {
        Ok(p) => p,
        Err(e) => {
            diags.push(Diagnostic {
                path: path.into(),
                message: e.to_string(),
            });
            return;
        }
    };
    if !crate::intmath::is_prime(&p) {
        diags.push(Diagnostic {
            path: path.into(),
            message: format!("split value {p} is not prime"),
        });
    }
    let mut slots: u64 = 0;
    for (i, b) in node.branches.iter().enumerate() {
        match branch_slots(b, bindings) {
            Ok(n) => slots += n,
            Err(e) => diags.push(Diagnostic {
                path: format!("{path}.{i}"),
                message: e.to_string(),
            }),
        }
        if let Branch::Sub(child) = b {
            validate_node(child, &format!("{path}.{i}"), bindings, diags);
        }
    }
    if Natural::from(slots) != p {
        diags.push(Diagnostic {
            path: path.into(),
            message: format!("branches claim {slots} slots but the split prime is {p}"),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intmath::nat;

    fn b() -> Bindings {
        Bindings::new()
    }

    fn ints(ns: &[u64]) -> Vec<Natural> {
        ns.iter().copied().map(nat).collect()
    }

    #[test]
    fn wedge_single_set() {
        // {m1, m2, m3} x m0: binary subset order, first member fastest.
        let groups = [WedgeGroup::Set(vec![
            Factor::Int(nat(3)),
            Factor::Int(nat(5)),
            Factor::Int(nat(11)),
        ])];
        let base = [Factor::Int(nat(7))];
        let got = wedge_moduli(&groups, &base, &b()).unwrap();
        assert_eq!(
            got,
            ints(&[7, 21, 35, 105, 77, 231, 385, 1155])
        );
    }

    #[test]
    fn wedge_power_then_set() {
        // [3^2] x {5} x 7: power digit fastest, then the set member.
        let groups = [
            WedgeGroup::Pow(Factor::Int(nat(3)), 2),
            WedgeGroup::Set(vec![Factor::Int(nat(5))]),
        ];
        let base = [Factor::Int(nat(7))];
        let got = wedge_moduli(&groups, &base, &b()).unwrap();
        assert_eq!(got, ints(&[7, 21, 63, 35, 105, 315]));
    }

    #[test]
    fn wedge_power_and_two_sets() {
        let groups = [
            WedgeGroup::Pow(Factor::Int(nat(3)), 1),
            WedgeGroup::Set(vec![Factor::Int(nat(5)), Factor::Int(nat(7))]),
        ];
        let base = [Factor::Int(nat(11))];
        let got = wedge_moduli(&groups, &base, &b()).unwrap();
        assert_eq!(
            got,
            ints(&[11, 33, 55, 165, 77, 231, 385, 1155])
        );
    }

    #[test]
    fn wedge_symbolic() {
        let mut bind = Bindings::new();
        bind.insert("P".into(), nat(17));
        let groups = [WedgeGroup::Set(vec![
            Factor::Int(nat(3)),
            Factor::Sym("P".into()),
        ])];
        let base = [Factor::Int(nat(11))];
        let got = wedge_moduli(&groups, &base, &bind).unwrap();
        assert_eq!(got, ints(&[11, 33, 187, 561]));
    }

    #[test]
    fn count_arithmetic() {
        let mut bind = Bindings::new();
        bind.insert("P".into(), nat(17));
        let e = CountExpr::Sub(
            Box::new(CountExpr::Sym("P".into())),
            Box::new(CountExpr::Int(5)),
        );
        assert_eq!(e.eval(&bind).unwrap(), 12);
        let neg = CountExpr::Sub(Box::new(CountExpr::Int(2)), Box::new(CountExpr::Int(5)));
        assert_eq!(neg.eval(&b()), Err(EvalError::NegativeCount(-3)));
    }

    #[test]
    fn factor_pow_eval() {
        let f = Factor::Pow(Box::new(Factor::Int(nat(3))), 4);
        assert_eq!(f.eval(&b()).unwrap(), nat(81));
        let unbound = Factor::Sym("Q".into());
        assert_eq!(
            unbound.eval(&b()),
            Err(EvalError::UnboundSymbol("Q".into()))
        );
    }

    #[test]
    fn slot_counting() {
        let wedge = Branch::Wedge {
            groups: vec![
                WedgeGroup::Pow(Factor::Int(nat(3)), 2),
                WedgeGroup::Set(vec![Factor::Int(nat(5)), Factor::Int(nat(7))]),
            ],
            base: vec![Factor::Int(nat(13))],
            take: None,
        };
        assert_eq!(branch_slots(&wedge, &b()).unwrap(), 12);
        let taken = Branch::Wedge {
            groups: vec![WedgeGroup::Set(vec![
                Factor::Int(nat(3)),
                Factor::Int(nat(5)),
            ])],
            base: vec![Factor::Int(nat(23))],
            take: Some(CountExpr::Int(3)),
        };
        assert_eq!(branch_slots(&taken, &b()).unwrap(), 3);
        assert_eq!(branch_slots(&Branch::Arrow, &b()).unwrap(), 1);
    }
}
