//! Built-in covering constructions and the transformations between them.
//!
//! Five tree encodings ship as DSL assets, one per achieved repetition count:
//! the modulus 9 used three times, 15 four, 21 five, 25 eight, and a prime
//! parameter P used P − 5 times (with no modulus divisible by P²). Building a
//! figure expands its tree, mops up the tower leftovers, and asserts the
//! audit — and, unless skipped, full coverage — before returning.
//!
//! Two transformations act on finished systems: modulus splitting, which
//! trades a modulus k used t times for km used at most m(t−1)+1 times
//! (coprime variant: (m−1)(t−1)+1, at the cost of one extra congruence mod
//! m), and the subset coverings: dropping two of the three 9-congruences of
//! the 9×3 system leaves an odd covering, with all moduli distinct, of the
//! integers outside two classes mod 9, and finitely many exceptions can be
//! patched back in with fresh large moduli.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::congruence::{
    audit_moduli, dedupe, normalize, shift_system, Congruence, CoveringSystem, ModulusAudit,
};
use crate::intmath::{gcd_lcm, is_prime, mod_inverse, nat, Natural};
use crate::treedsl::{
    default_q, expand_lenient, mop_up, parse_doc, Bindings, ExpandError, LeftoverClass,
    MopUpError, TreeDoc,
};
use crate::verifier::{verify, CoverageResult, Mode, VerifyError};

/// The built-in tree encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// k = 9 used three times.
    Nine3,
    /// k = 15 used four times.
    Fifteen4,
    /// k = 21 used five times.
    TwentyOne5,
    /// k = 25 used eight times.
    TwentyFive8,
    /// k = P used P − 5 times, P a prime parameter.
    PMinus5,
}

pub const ALL_FIGURES: [FigureId; 5] = [
    FigureId::Nine3,
    FigureId::Fifteen4,
    FigureId::TwentyOne5,
    FigureId::TwentyFive8,
    FigureId::PMinus5,
];

impl FigureId {
    pub fn id_str(self) -> &'static str {
        match self {
            FigureId::Nine3 => "three9s",
            FigureId::Fifteen4 => "four15s",
            FigureId::TwentyOne5 => "five21s",
            FigureId::TwentyFive8 => "eight25s",
            FigureId::PMinus5 => "pminus5",
        }
    }

    pub fn from_id_str(s: &str) -> Option<FigureId> {
        ALL_FIGURES.into_iter().find(|f| f.id_str() == s)
    }
}

/// DSL source text for a figure.
pub fn figure_source(id: FigureId) -> &'static str {
    match id {
        FigureId::Nine3 => include_str!("../assets/figures/three9s.cov"),
        FigureId::Fifteen4 => include_str!("../assets/figures/four15s.cov"),
        FigureId::TwentyOne5 => include_str!("../assets/figures/five21s.cov"),
        FigureId::TwentyFive8 => include_str!("../assets/figures/eight25s.cov"),
        FigureId::PMinus5 => include_str!("../assets/figures/pminus5.cov"),
    }
}

/// Parses the stored encoding for a figure. The assets are part of the
/// library, so a parse failure is a build defect and panics.
pub fn builtin_doc(id: FigureId) -> TreeDoc {
    parse_doc(figure_source(id)).expect("built-in figure asset must parse")
}

/// A fully built figure: the expanded and mopped-up covering system together
/// with the data needed to reproduce or inspect it.
#[derive(Debug, Clone)]
pub struct FigureBuild {
    pub id: FigureId,
    pub q: Natural,
    pub bindings: Bindings,
    /// Congruences from the tree alone, before mop-up.
    pub pre_mop: CoveringSystem,
    /// The classes the towers leave uncovered, tiled by the mop-up.
    pub leftovers: Vec<LeftoverClass>,
    /// The finished covering system (tree + mop-up, deduplicated).
    pub system: CoveringSystem,
    /// Congruences displaced during expansion because their modulus was
    /// already in use with a different residue. Empty when the figure
    /// admits an exact assignment; otherwise each entry marks a class the
    /// finished system may fail to cover.
    pub slack: Vec<Congruence>,
    pub audit: ModulusAudit,
    /// Verifier verdict on the finished system, when coverage was checked.
    pub coverage: Option<CoverageResult>,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("parameter P = {0} must be a prime >= 17")]
    BadParameter(Natural),
    #[error("figure takes no parameter")]
    UnexpectedParameter,
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    MopUp(#[from] MopUpError),
    #[error("postcondition failed: {0}")]
    PostconditionFailed(String),
    #[error("verifier: {0}")]
    Verify(#[from] VerifyError),
}

/// Expands a figure, mops up, and audits. Unless `skip_verify`, the
/// recursive verifier is then run and its verdict recorded in the result;
/// a non-covering verdict is reported, not treated as a build failure.
pub fn build_figure_with(
    id: FigureId,
    p: Option<Natural>,
    q: Option<Natural>,
    skip_verify: bool,
) -> Result<FigureBuild, BuildError> {
    let doc = builtin_doc(id);
    let mut bindings = Bindings::new();
    match (id, p) {
        (FigureId::PMinus5, p) => {
            let p = p.unwrap_or_else(|| nat(17));
            if p < nat(17) || !is_prime(&p) {
                return Err(BuildError::BadParameter(p));
            }
            bindings.insert("P".to_string(), p);
        }
        (_, None) => {}
        (_, Some(_)) => return Err(BuildError::UnexpectedParameter),
    }
    let q = match q {
        Some(q) => q,
        None => default_q(&doc, &bindings)?,
    };
    let expansion = expand_lenient(&doc, &bindings, &q)?;
    let mop = mop_up(&expansion.leftovers, &q)?;
    let mut congruences = expansion.system.congruences.clone();
    congruences.extend(mop);
    let declared_k = expansion.system.declared_k.clone().expect("expand sets k");
    let declared_t = expansion.system.declared_t.expect("expand sets t");
    let system = dedupe(&CoveringSystem::new(congruences).with_k(declared_k.clone(), declared_t));
    let audit = audit_moduli(&system);

    if !(audit.all_odd && audit.all_greater_than_one && audit.offending.is_empty()) {
        return Err(BuildError::PostconditionFailed(format!(
            "modulus audit: odd={} >1={} offending={:?}",
            audit.all_odd, audit.all_greater_than_one, audit.offending
        )));
    }
    if audit.k_count != declared_t {
        return Err(BuildError::PostconditionFailed(format!(
            "modulus {declared_k} appears {} times, expected {declared_t}",
            audit.k_count
        )));
    }
    if id == FigureId::PMinus5 {
        let p2 = bindings["P"].pow(2);
        if let Some(m) = audit.multiplicities.keys().find(|m| (*m % &p2).is_zero()) {
            return Err(BuildError::PostconditionFailed(format!(
                "modulus {m} is divisible by P^2 = {p2}"
            )));
        }
    }
    let coverage = if skip_verify {
        None
    } else {
        Some(verify(&system, Mode::Recursive, &Natural::zero())?)
    };
    Ok(FigureBuild {
        id,
        q,
        bindings,
        pre_mop: expansion.system,
        leftovers: expansion.leftovers,
        system,
        slack: expansion.slack,
        audit,
        coverage,
    })
}

/// [`build_figure_with`] at default parameters, coverage checked.
pub fn build_figure(id: FigureId) -> Result<FigureBuild, BuildError> {
    build_figure_with(id, None, None, false)
}

// --- Modulus splitting ------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitVariant {
    General,
    Coprime,
}

/// Split the modulus `k`, used `t` times, into `km`: the first `t − 1`
/// congruences mod `k` are traded for congruences mod `km`, the last is kept.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub k: Natural,
    pub m: Natural,
    pub variant: SplitVariant,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("no congruence with modulus {0} to split")]
    MissingRepeatedModulus(Natural),
    #[error("coprime variant requires gcd(k, m) = 1, got k = {k}, m = {m}")]
    NotCoprime { k: Natural, m: Natural },
    #[error("km must be odd and m >= 2, got k = {k}, m = {m}")]
    BadSpec { k: Natural, m: Natural },
}

/// The guaranteed multiplicity bound for `km` after a split of `k` used `t`
/// times: `m(t−1)+1` in general, `(m−1)(t−1)+1` when `gcd(k, m) = 1`; one
/// less when `km` is not already a modulus of the rest of the system.
pub fn split_bound(t: usize, m: &Natural, variant: SplitVariant, km_present: bool) -> Natural {
    let per = match variant {
        SplitVariant::General => m.clone(),
        SplitVariant::Coprime => m - Natural::one(),
    };
    let t1 = Natural::from(t.saturating_sub(1));
    per * t1 + if km_present { Natural::one() } else { Natural::zero() }
}

/// Applies the splitting transformation. Returns the new system and the
/// multiplicity of `km` in it.
///
/// General variant: each of the first `t − 1` congruences `r_i (mod k)`
/// becomes the `m` congruences `kj + r_i (mod km)`, `0 <= j < m`; the last
/// stays `r_t (mod k)`. Coprime variant: the whole system is first shifted so
/// that an existing congruence with modulus `m`, if any, reads `0 (mod m)`;
/// `0 (mod m)` is added if absent, and the value `j = -k^{-1} r_i (mod m)` is
/// skipped for each `i` — integers in that skipped class are `0 (mod m)`.
pub fn split_covering(
    s: &CoveringSystem,
    spec: &SplitSpec,
) -> Result<(CoveringSystem, usize), SplitError> {
    let SplitSpec { k, m, variant } = spec;
    let two = nat(2);
    let km = k * m;
    if *m < two || (&km % &two).is_zero() {
        return Err(SplitError::BadSpec { k: k.clone(), m: m.clone() });
    }
    let mut s = s.clone();
    if *variant == SplitVariant::Coprime {
        if !gcd_lcm(k, m).0.is_one() {
            return Err(SplitError::NotCoprime { k: k.clone(), m: m.clone() });
        }
        // Normalize an existing mod-m congruence to 0 (mod m).
        if let Some(c) = s.congruences.iter().find(|c| c.modulus == *m) {
            let shift = -BigInt::from(c.residue.clone());
            s = shift_system(&s, &shift);
        }
    }
    let t = s.congruences.iter().filter(|c| c.modulus == *k).count();
    if t == 0 {
        return Err(SplitError::MissingRepeatedModulus(k.clone()));
    }
    let m_u = u64::try_from(m.clone()).expect("split factor m fits in u64");
    let k_inv = match variant {
        SplitVariant::Coprime => Some(mod_inverse(k, m).expect("coprime by check above")),
        SplitVariant::General => None,
    };
    let mut out: Vec<Congruence> = Vec::new();
    let mut seen_k = 0usize;
    for c in &s.congruences {
        if c.modulus != *k {
            out.push(c.clone());
            continue;
        }
        seen_k += 1;
        if seen_k == t {
            // The last repeated congruence is kept as is.
            out.push(c.clone());
            continue;
        }
        let skip = k_inv
            .as_ref()
            .map(|inv| (m - (inv * &c.residue) % m) % m);
        for j in 0..m_u {
            let j = nat(j);
            if skip.as_ref() == Some(&j) {
                continue;
            }
            out.push(Congruence::new(k * &j + &c.residue, km.clone()));
        }
    }
    if *variant == SplitVariant::Coprime && !out.iter().any(|c| c.modulus == *m) {
        out.push(Congruence::new(Natural::zero(), m.clone()));
    }
    let achieved = out.iter().filter(|c| c.modulus == km).count();
    let result = CoveringSystem::new(out).with_k(km, achieved);
    Ok((result, achieved))
}

// --- Subset coverings modulo 9 ----------------------------------------------

/// An odd covering, all moduli distinct, of `Z \ S_j` plus finitely many
/// exceptions, where `S_j = {x : x = j+3 or j-3 (mod 9)}`.
///
/// Built from the 9×3 system: its three 9-congruences form `{c, c+3, c+6}
/// (mod 9)`; shifting the whole system by `j - c - 3` turns them into
/// `{j-3, j, j+3}`, and dropping the two outer ones removes coverage exactly
/// on `S_j`. Each exception `a_l` (1-based) is then restored by the fresh
/// congruence `a_l (mod M + 2l)`, `M` the largest modulus present.
pub fn subset_covering_mod9(j: i64, exceptions: &[BigInt]) -> CoveringSystem {
    let base = &nine3_cached().system;
    let nine = nat(9);
    let mut nine_res: Vec<Natural> = base
        .congruences
        .iter()
        .filter(|c| c.modulus == nine)
        .map(|c| c.residue.clone())
        .collect();
    nine_res.sort();
    assert_eq!(nine_res.len(), 3);
    let c0 = &nine_res[0];
    assert_eq!(nine_res[1], c0 + nat(3));
    assert_eq!(nine_res[2], c0 + nat(6));
    let shift = BigInt::from(j) - BigInt::from(c0.clone()) - BigInt::from(3);
    let shifted = shift_system(base, &shift);
    let keep = normalize(&BigInt::from(j), &nine).expect("modulus 9");
    let mut congruences: Vec<Congruence> = shifted
        .congruences
        .into_iter()
        .filter(|c| c.modulus != nine || *c == keep)
        .collect();
    let mut big_m = congruences
        .iter()
        .map(|c| c.modulus.clone())
        .max()
        .expect("nonempty system");
    for a in exceptions {
        big_m += nat(2);
        congruences.push(normalize(a, &big_m).expect("modulus nonzero"));
    }
    CoveringSystem::new(congruences)
}

fn nine3_cached() -> &'static FigureBuild {
    static NINE3: OnceLock<FigureBuild> = OnceLock::new();
    NINE3.get_or_init(|| build_figure(FigureId::Nine3).expect("9x3 figure must build"))
}

/// Multiplicity of each modulus, for reporting.
pub fn modulus_multiplicities(s: &CoveringSystem) -> BTreeMap<Natural, usize> {
    audit_moduli(s).multiplicities
}
