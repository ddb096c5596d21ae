//! Congruences, residue classes, covering systems, the shift lemma, and the
//! modulus audit.
//!
//! A [`Congruence`] and a [`ResidueClass`] have the same shape — a residue and
//! a modulus — but are read differently: the former as a constraint
//! `x = r (mod m)`, the latter as the set `{x : x = r (mod m)}` of density
//! `1/m`. Residues are always normalized into `[0, m)`, so structural equality
//! is mathematical equality and exact duplicates can be collapsed by
//! [`dedupe`].
//!
//! The file format shared with the CLI is JSON with decimal-string big
//! integers: `{"k": "9"|null, "t": 3|null, "congruences": [{"r": "...", "m":
//! "..."}]}`.

use crate::intmath::{crt_pair, Natural, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Congruence {
    pub residue: Natural,
    pub modulus: Natural,
}

/// Same data as [`Congruence`], set semantics: `{x : x = representative (mod
/// modulus)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResidueClass {
    pub representative: Natural,
    pub modulus: Natural,
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}

impl fmt::Display for ResidueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.representative, self.modulus)
    }
}

impl Congruence {
    pub fn new(residue: Natural, modulus: Natural) -> Self {
        assert!(!modulus.is_zero(), "zero modulus");
        Congruence { residue: residue % &modulus, modulus }
    }

    pub fn as_class(&self) -> ResidueClass {
        ResidueClass { representative: self.residue.clone(), modulus: self.modulus.clone() }
    }

    /// Does an integer satisfy this congruence?
    pub fn contains_int(&self, x: &BigInt) -> bool {
        let m = BigInt::from(self.modulus.clone());
        let mut r = x % &m;
        if r.is_negative() {
            r += &m;
        }
        r == BigInt::from(self.residue.clone())
    }
}

impl ResidueClass {
    pub fn new(representative: Natural, modulus: Natural) -> Self {
        assert!(!modulus.is_zero(), "zero modulus");
        ResidueClass { representative: representative % &modulus, modulus }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringSystem {
    pub congruences: Vec<Congruence>,
    /// The repeated modulus k, when declared.
    pub declared_k: Option<Natural>,
    /// Claimed multiplicity bound t for k, when declared.
    pub declared_t: Option<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CongruenceError {
    #[error("modulus must be nonzero")]
    ZeroModulus,
}

/// Reduces a possibly negative residue into `[0, modulus)`.
pub fn normalize(residue: &BigInt, modulus: &Natural) -> Result<Congruence, CongruenceError> {
    if modulus.is_zero() {
        return Err(CongruenceError::ZeroModulus);
    }
    let m = BigInt::from(modulus.clone());
    let mut r = residue % &m;
    if r.is_negative() {
        r += &m;
    }
    Ok(Congruence {
        residue: r.to_biguint().expect("nonnegative after normalization"),
        modulus: modulus.clone(),
    })
}

/// `a ∩ b` as a class mod lcm, or `None` when disjoint.
pub fn intersect_class(a: &ResidueClass, b: &ResidueClass) -> Option<ResidueClass> {
    crt_pair(&a.representative, &a.modulus, &b.representative, &b.modulus)
        .map(|(r, m)| ResidueClass { representative: r, modulus: m })
}

/// True iff the whole class `x` sits inside the congruence `c`, i.e.
/// `c.modulus | x.modulus` and the representatives agree mod `c.modulus`.
pub fn congruence_contains_class(c: &Congruence, x: &ResidueClass) -> bool {
    (&x.modulus % &c.modulus).is_zero() && &x.representative % &c.modulus == c.residue
}

impl CoveringSystem {
    pub fn new(congruences: Vec<Congruence>) -> Self {
        CoveringSystem { congruences, declared_k: None, declared_t: None }
    }

    pub fn with_k(mut self, k: Natural, t: usize) -> Self {
        self.declared_k = Some(k);
        self.declared_t = Some(t);
        self
    }

    /// Does an integer satisfy at least one congruence?
    pub fn covers_int(&self, x: &BigInt) -> bool {
        self.congruences.iter().any(|c| c.contains_int(x))
    }

    /// lcm of all moduli.
    pub fn lcm(&self) -> Natural {
        let mut l = Natural::one();
        for c in &self.congruences {
            l = crate::intmath::gcd_lcm(&l, &c.modulus).1;
        }
        l
    }
}

/// Multiset report on a system's moduli: oddness, distinctness except the
/// declared repeated modulus k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModulusAudit {
    pub multiplicities: BTreeMap<Natural, usize>,
    pub all_odd: bool,
    pub all_greater_than_one: bool,
    /// All moduli distinct except `declared_k`, which appears at most
    /// `declared_t` times.
    pub repeated_ok: bool,
    pub k_count: usize,
    /// Non-k moduli with multiplicity > 1.
    pub offending: Vec<(Natural, usize)>,
}

/// Shift every residue by `j` (negative allowed), preserving moduli and order.
/// If the input covers the integers so does the output: `x` satisfies the
/// shifted congruence iff `x - j` satisfies the original.
pub fn shift_system(s: &CoveringSystem, j: &BigInt) -> CoveringSystem {
    let congruences = s
        .congruences
        .iter()
        .map(|c| {
            normalize(&(BigInt::from(c.residue.clone()) + j), &c.modulus)
                .expect("modulus nonzero by invariant")
        })
        .collect();
    CoveringSystem { congruences, declared_k: s.declared_k.clone(), declared_t: s.declared_t }
}

/// Audit the multiset of moduli. Exact duplicate congruences are counted once
/// (they denote the same constraint; see [`dedupe`]).
pub fn audit_moduli(s: &CoveringSystem) -> ModulusAudit {
    let deduped = dedupe(s);
    let mut multiplicities: BTreeMap<Natural, usize> = BTreeMap::new();
    for c in &deduped.congruences {
        *multiplicities.entry(c.modulus.clone()).or_insert(0) += 1;
    }
    let two = Natural::from(2u32);
    let all_odd = multiplicities.keys().all(|m| !(m % &two).is_zero());
    let all_greater_than_one = multiplicities.keys().all(|m| !m.is_one());
    let k_count = s
        .declared_k
        .as_ref()
        .and_then(|k| multiplicities.get(k))
        .copied()
        .unwrap_or(0);
    let offending: Vec<(Natural, usize)> = multiplicities
        .iter()
        .filter(|(m, &n)| n > 1 && Some(*m) != s.declared_k.as_ref())
        .map(|(m, &n)| (m.clone(), n))
        .collect();
    let repeated_ok = offending.is_empty() && k_count <= s.declared_t.unwrap_or(usize::MAX);
    ModulusAudit { multiplicities, all_odd, all_greater_than_one, repeated_ok, k_count, offending }
}

/// Stable-order removal of exact `(residue, modulus)` duplicates.
pub fn dedupe(s: &CoveringSystem) -> CoveringSystem {
    let mut seen = std::collections::HashSet::new();
    let congruences = s
        .congruences
        .iter()
        .filter(|c| seen.insert((*c).clone()))
        .cloned()
        .collect();
    CoveringSystem { congruences, declared_k: s.declared_k.clone(), declared_t: s.declared_t }
}

/// Exact `Σ 1/m_i` over the deduplicated congruences. A covering system
/// necessarily has density sum >= 1.
pub fn density_sum(s: &CoveringSystem) -> Rational {
    let mut sum = Rational::from(Natural::zero());
    for c in &dedupe(s).congruences {
        sum += Rational::new(Natural::one(), c.modulus.clone());
    }
    sum
}

// --- JSON file format -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CongruenceJson {
    r: String,
    m: String,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    k: Option<String>,
    t: Option<usize>,
    congruences: Vec<CongruenceJson>,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad decimal integer {0:?}")]
    BadInteger(String),
    #[error("residue {r} not below modulus {m}")]
    ResidueOutOfRange { r: String, m: String },
    #[error("modulus must be nonzero")]
    ZeroModulus,
}

fn parse_nat(s: &str) -> Result<Natural, FormatError> {
    s.parse().map_err(|_| FormatError::BadInteger(s.to_string()))
}

pub fn to_json(s: &CoveringSystem) -> String {
    let doc = SystemJson {
        k: s.declared_k.as_ref().map(|k| k.to_string()),
        t: s.declared_t,
        congruences: s
            .congruences
            .iter()
            .map(|c| CongruenceJson { r: c.residue.to_string(), m: c.modulus.to_string() })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serialization cannot fail")
}

pub fn from_json(text: &str) -> Result<CoveringSystem, FormatError> {
    let doc: SystemJson = serde_json::from_str(text)?;
    let mut congruences = Vec::with_capacity(doc.congruences.len());
    for cj in &doc.congruences {
        let r = parse_nat(&cj.r)?;
        let m = parse_nat(&cj.m)?;
        if m.is_zero() {
            return Err(FormatError::ZeroModulus);
        }
        if r >= m {
            return Err(FormatError::ResidueOutOfRange { r: cj.r.clone(), m: cj.m.clone() });
        }
        congruences.push(Congruence { residue: r, modulus: m });
    }
    let declared_k = match &doc.k {
        Some(k) => Some(parse_nat(k)?),
        None => None,
    };
    Ok(CoveringSystem { congruences, declared_k, declared_t: doc.t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intmath::nat;

    fn cg(r: u64, m: u64) -> Congruence {
        Congruence::new(nat(r), nat(m))
    }

    #[test]
    fn normalize_basics() {
        assert_eq!(normalize(&BigInt::from(-1), &nat(9)).unwrap(), cg(8, 9));
        assert_eq!(normalize(&BigInt::from(14), &nat(7)).unwrap(), cg(0, 7));
        assert_eq!(normalize(&BigInt::from(100), &nat(15)).unwrap(), cg(10, 15));
        assert_eq!(normalize(&BigInt::from(3), &nat(0)), Err(CongruenceError::ZeroModulus));
    }

    fn rc(r: u64, m: u64) -> ResidueClass {
        ResidueClass::new(nat(r), nat(m))
    }

    #[test]
    fn intersect_basics() {
        assert_eq!(intersect_class(&rc(0, 3), &rc(0, 9)), Some(rc(0, 9)));
        assert_eq!(intersect_class(&rc(1, 2), &rc(0, 4)), None);
        assert_eq!(intersect_class(&rc(2, 3), &rc(4, 5)), Some(rc(14, 15)));
    }

    #[test]
    fn contains_class_basics() {
        assert!(congruence_contains_class(&cg(1, 3), &rc(4, 9)));
        assert!(!congruence_contains_class(&cg(1, 3), &rc(5, 9)));
        assert!(congruence_contains_class(&cg(7, 15), &rc(22, 45)));
    }

    #[test]
    fn shift_basics() {
        let c = CoveringSystem::new(vec![cg(0, 2), cg(1, 2)]);
        let shifted = shift_system(&c, &BigInt::from(5));
        assert_eq!(shifted.congruences, vec![cg(1, 2), cg(0, 2)]);
        assert_eq!(shift_system(&c, &BigInt::from(0)), c);

        let nine = CoveringSystem::new(vec![cg(0, 9), cg(3, 9), cg(6, 9)]);
        let s1 = shift_system(&nine, &BigInt::from(1));
        assert_eq!(s1.congruences, vec![cg(1, 9), cg(4, 9), cg(7, 9)]);
    }

    #[test]
    fn shift_composes() {
        let c = CoveringSystem::new(vec![cg(0, 3), cg(2, 5), cg(4, 7)]);
        for j1 in -4i64..5 {
            for j2 in -4i64..5 {
                let a = shift_system(&shift_system(&c, &BigInt::from(j1)), &BigInt::from(j2));
                let b = shift_system(&c, &BigInt::from(j1 + j2));
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn shift_pointwise() {
        let c = CoveringSystem::new(vec![cg(0, 3), cg(1, 4), cg(5, 6)]);
        for j in [-3i64, 1, 9] {
            let s = shift_system(&c, &BigInt::from(j));
            for x in -50i64..50 {
                assert_eq!(
                    s.covers_int(&BigInt::from(x)),
                    c.covers_int(&BigInt::from(x - j))
                );
            }
        }
    }

    #[test]
    fn audit_basics() {
        let c = CoveringSystem::new(vec![cg(0, 3), cg(1, 3), cg(2, 3)]).with_k(nat(3), 3);
        let a = audit_moduli(&c);
        assert_eq!(a.k_count, 3);
        assert!(a.repeated_ok);
        assert!(a.all_odd);
        assert!(a.all_greater_than_one);
        assert!(a.offending.is_empty());
        assert_eq!(a.multiplicities.values().sum::<usize>(), 3);

        let even = CoveringSystem::new(vec![cg(0, 2), cg(1, 2)]);
        assert!(!audit_moduli(&even).all_odd);
    }

    #[test]
    fn dedupe_basics() {
        let c = CoveringSystem::new(vec![cg(0, 3), cg(0, 3)]);
        assert_eq!(dedupe(&c).congruences, vec![cg(0, 3)]);
        let d = CoveringSystem::new(vec![cg(0, 3), cg(3, 9)]);
        assert_eq!(dedupe(&d).congruences.len(), 2);
        assert_eq!(dedupe(&dedupe(&c)), dedupe(&c));
    }

    #[test]
    fn density_basics() {
        use crate::intmath::Rational;
        let c = CoveringSystem::new(vec![cg(0, 2), cg(1, 2)]);
        assert_eq!(density_sum(&c), Rational::from(nat(1)));
        let d = CoveringSystem::new(vec![cg(0, 3)]);
        assert_eq!(density_sum(&d), Rational::new(nat(1), nat(3)));
        let e = CoveringSystem::new(vec![cg(0, 2), cg(0, 3), cg(1, 4), cg(5, 6), cg(7, 12)]);
        assert_eq!(density_sum(&e), Rational::new(nat(4), nat(3)));
    }

    #[test]
    fn json_round_trip() {
        let c = CoveringSystem::new(vec![cg(0, 3), cg(2, 9)]).with_k(nat(9), 3);
        let text = to_json(&c);
        let back = from_json(&text).unwrap();
        assert_eq!(back, c);
        assert!(from_json("{\"k\":null,\"t\":null,\"congruences\":[{\"r\":\"5\",\"m\":\"3\"}]}").is_err());
        assert!(from_json("not json").is_err());
    }
}
