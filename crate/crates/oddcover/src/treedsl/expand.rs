//! Expansion of a cover-tree document into an explicit covering system.
//!
//! Residue assignment is a depth-first search: at each node the branch slots
//! are matched, left to right, with the `p` subclasses. A slot that emits a
//! congruence must either reuse an already-emitted residue for its modulus
//! (collapsing repeated labels into one congruence) or claim a fresh modulus;
//! which subclass a slot receives is chosen to maximize such reuse, with ties
//! broken by the smallest representative, and the search backtracks when a
//! choice strands a later slot.
//!
//! An arrow claims one subclass of its node. Writing the subclass modulus as
//! `s * p^v` with `p` the node prime and `gcd(s, p) = 1`, the arrow expands
//! into a tower of bare prime-power congruences `b + p^(j-1) (mod p^j)` for
//! `j = v+1 .. q-1`, where `b = z mod p^v` is the chain base: level `j`
//! covers the subclass whose next base-`p` digit is 1 while the chain
//! descends into the digit-0 subclass, ending at the leftover class
//! `b (mod p^(q-1))` recorded as a [`LeftoverClass`]. Because the moduli
//! carry no context factor, every arrow on the same prime must ride the same
//! chain: the solver aligns their subclasses so the shared tower congruences
//! coincide, and misaligned choices backtrack. Everything a tower skips is
//! the document's responsibility — the figures interleave wedge values and
//! sibling branches that land exactly there — so coverage of the whole
//! expansion is a property to verify, not a local invariant.
//!
//! [`mop_up`] tiles each leftover with `q` congruences
//! `x = z (mod s * p^j), x = j (mod q)` of modulus `q * s * p^j`,
//! `j = 0 .. q-1`: within the leftover they partition it by residue mod `q`.
//! Multiples of `q` are reserved for this purpose, which is why `q` must be
//! coprime to every tree modulus.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{eval_product, wedge_moduli, Bindings, Branch, EvalError, Node, TreeDoc, WedgeGroup};
use crate::congruence::{Congruence, CoveringSystem, ResidueClass};
use crate::intmath::{
    crt_pair, is_prime, nat, next_usable_prime, valuation, Natural,
};

/// One class left uncovered by the expansion, to be tiled by [`mop_up`]:
/// `cls = z (mod s * p^D)` with `gcd(s, p) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeftoverClass {
    pub cls: ResidueClass,
    pub p: Natural,
    pub s: Natural,
}

/// Result of expanding a document: the covering system before mop-up, and the
/// leftover classes the mop-up must tile.
///
/// `slack` is empty when every duplicated label collapsed exactly. When the
/// duplicate-modulus constraints are unsatisfiable (some source drawings reuse
/// a product under branches that disagree in a coprime coordinate), the
/// fallback pass keeps the first residue seen for each modulus and records
/// here each congruence it had to displace; the slots those congruences were
/// meant to cover are then only covered where the kept residue agrees.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub system: CoveringSystem,
    pub leftovers: Vec<LeftoverClass>,
    pub slack: Vec<Congruence>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExpandError {
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("split value {0} is not prime")]
    SplitNotPrime(Natural),
    #[error("node splitting by {p} has branches claiming {got} slots")]
    SlotCountMismatch { p: Natural, got: u64 },
    #[error("branch modulus {m} does not divide the slot modulus {slot}")]
    NonDividingModulus { m: Natural, slot: Natural },
    #[error("q = {0} must be a prime coprime to every tree modulus")]
    UnusableQ(Natural),
    #[error("no residue assignment satisfies the duplicate-modulus constraints")]
    AssignmentInfeasible,
    #[error("residue assignment search exceeded its step budget")]
    SearchBudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MopUpError {
    #[error("leftover {cls} does not have the tower shape s * p^(q-1)")]
    Untileable { cls: ResidueClass },
    #[error("mop-up modulus {m} collides across leftovers (two arrows share s and p)")]
    Collision { m: Natural },
}

enum Fail {
    /// Local dead end; the search backtracks.
    Conflict,
    /// Abort the whole expansion.
    Hard(ExpandError),
}

enum Slot<'a> {
    Emit { modulus: Natural, pin: Option<Natural> },
    Arrow,
    Sub(&'a Node),
}

enum Action {
    Emit(Natural),
    KRes,
    Window,
    Slack,
}

struct Window {
    base: Natural,
    p: Natural,
}

struct State {
    k: Natural,
    q: Natural,
    emitted: Vec<Congruence>,
    mod_map: HashMap<Natural, Natural>,
    k_residues: Vec<Natural>,
    windows: Vec<Window>,
    trail: Vec<Action>,
    steps: u64,
    budget: u64,
    conflicts: HashMap<Natural, u64>,
    /// Accept residue clashes at duplicated moduli instead of backtracking,
    /// keeping the first residue and recording the displaced congruence.
    tolerant: bool,
    slack: Vec<Congruence>,
}

impl State {
    fn mark(&self) -> usize {
        self.trail.len()
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Action::Emit(m) => {
                    self.emitted.pop();
                    self.mod_map.remove(&m);
                }
                Action::KRes => {
                    self.emitted.pop();
                    self.k_residues.pop();
                }
                Action::Window => {
                    self.windows.pop();
                }
                Action::Slack => {
                    self.slack.pop();
                }
            }
        }
    }

    /// Emits `residue (mod modulus)`, deduplicating exact repeats. Fails on a
    /// second residue for a non-`k` modulus.
    fn emit(&mut self, residue: Natural, modulus: Natural) -> Result<(), Fail> {
        if modulus == self.k {
            if !self.k_residues.contains(&residue) {
                self.k_residues.push(residue.clone());
                self.emitted.push(Congruence::new(residue, modulus.clone()));
                self.trail.push(Action::KRes);
            }
            return Ok(());
        }
        match self.mod_map.get(&modulus) {
            Some(r) if *r == residue => Ok(()),
            Some(_) if self.tolerant => {
                self.slack.push(Congruence::new(residue, modulus));
                self.trail.push(Action::Slack);
                Ok(())
            }
            Some(_) => {
                *self.conflicts.entry(modulus).or_insert(0) += 1;
                Err(Fail::Conflict)
            }
            None => {
                self.mod_map.insert(modulus.clone(), residue.clone());
                self.emitted.push(Congruence::new(residue, modulus.clone()));
                self.trail.push(Action::Emit(modulus));
                Ok(())
            }
        }
    }

    /// Emits a tower congruence: like [`State::emit`], except the repeated
    /// modulus `k` is off limits (a tower joining the `k` pool would corrupt
    /// its multiplicity).
    fn emit_tower(&mut self, residue: Natural, modulus: Natural) -> Result<(), Fail> {
        if modulus == self.k {
            if self.tolerant {
                self.slack.push(Congruence::new(residue, modulus));
                self.trail.push(Action::Slack);
                return Ok(());
            }
            return Err(Fail::Conflict);
        }
        self.emit(residue, modulus)
    }
}

fn flatten_slots<'a>(
    node: &'a Node,
    bindings: &Bindings,
    slot_modulus: &Natural,
    p: &Natural,
) -> Result<Vec<Slot<'a>>, Fail> {
    let mut slots = Vec::new();
    for branch in &node.branches {
        match branch {
            Branch::Leaf { factors, pin } => {
                let m = eval_product(factors, bindings).map_err(hard)?;
                check_divides(&m, slot_modulus)?;
                let pin = match pin {
                    Some(e) => Some(nat(e.eval(bindings).map_err(hard)?) % &m),
                    None => None,
                };
                slots.push(Slot::Emit { modulus: m, pin });
            }
            Branch::Rep { factors, count } => {
                let m = eval_product(factors, bindings).map_err(hard)?;
                check_divides(&m, slot_modulus)?;
                for _ in 0..count.eval(bindings).map_err(hard)? {
                    slots.push(Slot::Emit { modulus: m.clone(), pin: None });
                }
            }
            Branch::Wedge { groups, base, take } => {
                let mut moduli = wedge_moduli(groups, base, bindings).map_err(hard)?;
                if let Some(t) = take {
                    moduli.truncate(t.eval(bindings).map_err(hard)? as usize);
                }
                for m in moduli {
                    check_divides(&m, slot_modulus)?;
                    slots.push(Slot::Emit { modulus: m, pin: None });
                }
            }
            Branch::Arrow => slots.push(Slot::Arrow),
            Branch::Sub(child) => slots.push(Slot::Sub(child)),
        }
    }
    let claimed = slots.len() as u64;
    if Natural::from(claimed) != *p {
        return Err(Fail::Hard(ExpandError::SlotCountMismatch {
            p: p.clone(),
            got: claimed,
        }));
    }
    Ok(slots)
}

fn hard(e: EvalError) -> Fail {
    Fail::Hard(ExpandError::Eval(e))
}

fn check_divides(m: &Natural, slot_modulus: &Natural) -> Result<(), Fail> {
    if m.is_one() || !(slot_modulus % m).is_zero() {
        Err(Fail::Hard(ExpandError::NonDividingModulus {
            m: m.clone(),
            slot: slot_modulus.clone(),
        }))
    } else {
        Ok(())
    }
}

fn expand_node(
    state: &mut State,
    class_rep: &Natural,
    class_mod: &Natural,
    node: &Node,
    bindings: &Bindings,
) -> Result<(), Fail> {
    let p = node.split.eval(bindings).map_err(hard)?;
    if !is_prime(&p) {
        return Err(Fail::Hard(ExpandError::SplitNotPrime(p)));
    }
    let pm = &p * class_mod;
    let slots = flatten_slots(node, bindings, &pm, &p)?;
    let p_u = p.to_u64().expect("split primes fit in u64");
    let candidates: Vec<Natural> = (0..p_u)
        .map(|u| class_rep + class_mod * nat(u))
        .collect();
    let mut used = vec![false; candidates.len()];
    let mut assigned = vec![false; slots.len()];
    assign(state, &slots, &mut assigned, &candidates, &mut used, &pm, &p, bindings)
}

/// Ranks the feasible subclasses for one slot: best duplicate reuse first,
/// then smallest representative (candidates are already ascending).
fn feasible(
    state: &mut State,
    slot: &Slot<'_>,
    candidates: &[Natural],
    used: &[bool],
    pm: &Natural,
    p: &Natural,
) -> Vec<(i32, usize)> {
    let mut order: Vec<(i32, usize)> = Vec::new();
    for (i, cand) in candidates.iter().enumerate() {
        if used[i] {
            continue;
        }
        let score = match slot {
            Slot::Emit { modulus, pin } => {
                let res = cand % modulus;
                if let Some(pinned) = pin {
                    if res != *pinned {
                        continue;
                    }
                }
                if *modulus == state.k {
                    i32::from(state.k_residues.contains(&res))
                } else {
                    let hit = state.mod_map.get(modulus).map(|r| *r == res);
                    match hit {
                        Some(true) => 1,
                        Some(false) if state.tolerant => -1,
                        Some(false) => {
                            *state.conflicts.entry(modulus.clone()).or_insert(0) += 1;
                            continue;
                        }
                        None => 0,
                    }
                }
            }
            // An arrow must ride the chain of its prime: if the first tower
            // modulus is already claimed, only the aligned subclass fits.
            Slot::Arrow => {
                let v = valuation(pm, p);
                let step = p.pow(v);
                match state.mod_map.get(&(&step * p)) {
                    Some(r) if *r == cand % &step + &step => 1,
                    Some(_) if state.tolerant => -1,
                    Some(_) => continue,
                    None => 0,
                }
            }
            Slot::Sub(_) => 0,
        };
        order.push((score, i));
    }
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    order
}

#[allow(clippy::too_many_arguments)]
fn assign(
    state: &mut State,
    slots: &[Slot<'_>],
    assigned: &mut [bool],
    candidates: &[Natural],
    used: &mut [bool],
    pm: &Natural,
    p: &Natural,
    bindings: &Bindings,
) -> Result<(), Fail> {
    // Most-constrained slot first: forced duplicates, pins, and claimed
    // chains propagate before anything branches; subtrees go last.
    let mut pick: Option<(usize, Vec<(i32, usize)>)> = None;
    for (s, slot) in slots.iter().enumerate() {
        if assigned[s] {
            continue;
        }
        let order = feasible(state, slot, candidates, used, pm, p);
        let tiebreak = match slot {
            Slot::Emit { .. } | Slot::Arrow => 0,
            Slot::Sub(_) => 1,
        };
        let better = match &pick {
            None => true,
            Some((b, best)) => {
                let bt = match slots[*b] {
                    Slot::Emit { .. } | Slot::Arrow => 0,
                    Slot::Sub(_) => 1,
                };
                (order.len(), tiebreak) < (best.len(), bt)
            }
        };
        if better {
            if order.is_empty() {
                return Err(Fail::Conflict);
            }
            pick = Some((s, order));
        }
    }
    let Some((s, order)) = pick else {
        return Ok(());
    };
    let slot = &slots[s];
    assigned[s] = true;
    let result = 'search: {
        for (_, i) in order {
            state.steps += 1;
            if state.steps > state.budget {
                break 'search Err(Fail::Hard(ExpandError::SearchBudgetExceeded));
            }
            let mark = state.mark();
            used[i] = true;
            let cand = &candidates[i];
            let applied: Result<(), Fail> = match slot {
                Slot::Emit { modulus, .. } => state.emit(cand % modulus, modulus.clone()),
                Slot::Arrow => {
                    let q_u = state.q.to_u32().expect("q fits in u32");
                    let v = valuation(pm, p);
                    let base = cand % p.pow(v);
                    let mut towers = Ok(());
                    for j in v + 1..q_u {
                        let step = p.pow(j - 1);
                        if let Err(e) = state.emit_tower(&base + &step, &step * p) {
                            towers = Err(e);
                            break;
                        }
                    }
                    towers.map(|()| {
                        state.windows.push(Window { base, p: p.clone() });
                        state.trail.push(Action::Window);
                    })
                }
                Slot::Sub(child) => expand_node(state, cand, pm, child, bindings),
            };
            match applied.and_then(|()| {
                assign(state, slots, assigned, candidates, used, pm, p, bindings)
            }) {
                Ok(()) => break 'search Ok(()),
                Err(Fail::Conflict) => {
                    state.undo_to(mark);
                    used[i] = false;
                }
                Err(hard @ Fail::Hard(_)) => break 'search Err(hard),
            }
        }
        Err(Fail::Conflict)
    };
    if result.is_err() {
        assigned[s] = false;
    }
    result
}

/// Collapses the recorded arrow windows into leftover classes: all arrows on
/// one prime share a single chain, so they contribute one leftover
/// `b (mod p^(q-1))`.
fn collect_leftovers(state: &mut State) -> Vec<LeftoverClass> {
    let q_u = state.q.to_u32().expect("q fits in u32");
    let mut out: Vec<LeftoverClass> = Vec::new();
    for w in std::mem::take(&mut state.windows) {
        if out.iter().any(|lo| lo.p == w.p) {
            continue;
        }
        out.push(LeftoverClass {
            cls: ResidueClass::new(w.base.clone(), w.p.pow(q_u - 1)),
            p: w.p,
            s: Natural::one(),
        });
    }
    out
}


/// Expands a document under the given parameter bindings and mop-up prime
/// `q`. Returns the pre-mop-up system (declared `k` and `t` attached) plus
/// the leftover classes. Every duplicate label must collapse exactly; if no
/// assignment does that, the error is [`ExpandError::AssignmentInfeasible`].
pub fn expand(doc: &TreeDoc, bindings: &Bindings, q: &Natural) -> Result<Expansion, ExpandError> {
    expand_inner(doc, bindings, q, false, 4_000_000)
}

/// Like [`expand`], but when the strict pass fails (no assignment collapses
/// every duplicated modulus exactly, or the search budget runs out), a second
/// pass keeps the first residue seen at each clashing modulus and reports the
/// displaced congruences in [`Expansion::slack`]. The emitted modulus list is
/// identical either way; only slot coverage for the displaced values weakens.
pub fn expand_lenient(
    doc: &TreeDoc,
    bindings: &Bindings,
    q: &Natural,
) -> Result<Expansion, ExpandError> {
    match expand_inner(doc, bindings, q, false, 300_000) {
        Ok(exp) => Ok(exp),
        Err(ExpandError::AssignmentInfeasible | ExpandError::SearchBudgetExceeded) => {
            expand_inner(doc, bindings, q, true, 4_000_000)
        }
        Err(e) => Err(e),
    }
}

fn expand_inner(
    doc: &TreeDoc,
    bindings: &Bindings,
    q: &Natural,
    tolerant: bool,
    budget: u64,
) -> Result<Expansion, ExpandError> {
    let k = doc.k.eval(bindings)?;
    let t = doc.t.eval(bindings)?;
    if q.to_u32().is_none() || !is_prime(q) {
        return Err(ExpandError::UnusableQ(q.clone()));
    }
    let mut state = State {
        k,
        q: q.clone(),
        emitted: Vec::new(),
        mod_map: HashMap::new(),
        k_residues: Vec::new(),
        windows: Vec::new(),
        trail: Vec::new(),
        steps: 0,
        budget,
        conflicts: HashMap::new(),
        tolerant,
        slack: Vec::new(),
    };
    let dbg = std::env::var("ODDCOVER_DEBUG").is_ok();
    if dbg {
        eprintln!("assignment search starting (tolerant: {tolerant})");
    }
    match expand_node(&mut state, &Natural::zero(), &Natural::one(), &doc.root, bindings) {
        Ok(()) => {}
        Err(fail) => {
            if dbg {
                let mut worst: Vec<_> = state.conflicts.iter().collect();
                worst.sort_by(|a, b| b.1.cmp(a.1));
                for (m, n) in worst.iter().take(12) {
                    eprintln!("  conflict modulus {m}: {n} hits");
                }
            }
            return Err(match fail {
                Fail::Conflict => ExpandError::AssignmentInfeasible,
                Fail::Hard(e) => e,
            });
        }
    }
    for c in &state.emitted {
        if (&c.modulus % q).is_zero() {
            return Err(ExpandError::UnusableQ(q.clone()));
        }
    }
    if dbg {
        eprintln!(
            "assignment done: {} congruences, {} windows, {} steps, {} slack",
            state.emitted.len(),
            state.windows.len(),
            state.steps,
            state.slack.len()
        );
    }
    let leftovers = collect_leftovers(&mut state);
    let system = CoveringSystem::new(state.emitted).with_k(state.k, t as usize);
    Ok(Expansion { system, leftovers, slack: state.slack })
}

/// The congruences tiling the leftover classes: for a leftover
/// `c (mod s * p^(q-1))`, the `q` congruences `x = c (mod s * p^j),
/// x = j (mod q)` with moduli `q * s * p^j`, `j = 0 .. q-1`. Every member of
/// the leftover satisfies all the first conditions and exactly one of the
/// second, so they partition the leftover by residue mod `q`. Moduli are
/// distinct across leftovers by unique factorization in `(s, p, j)`; a
/// repeated identical leftover reuses its congruences, but a residue clash at
/// a shared modulus is an error.
pub fn mop_up(leftovers: &[LeftoverClass], q: &Natural) -> Result<Vec<Congruence>, MopUpError> {
    let q_u = q.to_u32().expect("q fits in u32");
    let mut seen: HashMap<Natural, Natural> = HashMap::new();
    let mut out: Vec<Congruence> = Vec::new();
    for lo in leftovers {
        if lo.cls.modulus != &lo.s * lo.p.pow(q_u - 1)
            || !lo.s.gcd(&lo.p).is_one()
            || !(&lo.s * &lo.p).gcd(q).is_one()
        {
            return Err(MopUpError::Untileable { cls: lo.cls.clone() });
        }
        for j in 0..q_u {
            let d = &lo.s * lo.p.pow(j);
            let m = q * &d;
            let (r, _) = crt_pair(&(&lo.cls.representative % &d), &d, &nat(u64::from(j)), q)
                .expect("q is coprime to every tree modulus");
            match seen.get(&m) {
                Some(prev) if *prev == r => {}
                Some(_) => return Err(MopUpError::Collision { m }),
                None => {
                    seen.insert(m.clone(), r.clone());
                    out.push(Congruence::new(r, m));
                }
            }
        }
    }
    Ok(out)
}

/// The default mop-up prime: the smallest prime above `q_min` dividing no
/// modulus of the expanded tree.
pub fn default_q(doc: &TreeDoc, bindings: &Bindings) -> Result<Natural, ExpandError> {
    let mut primes: Vec<Natural> = Vec::new();
    collect_primes(&doc.root, bindings, &mut primes)?;
    Ok(next_usable_prime(&nat(doc.q_min.saturating_sub(1)), &primes))
}

fn collect_primes(node: &Node, bindings: &Bindings, out: &mut Vec<Natural>) -> Result<(), ExpandError> {
    let push_factors_of = |m: Natural, out: &mut Vec<Natural>| {
        if let Ok(f) = crate::intmath::factorize(&m) {
            for (p, _) in f.factors {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
    };
    let p = node.split.eval(bindings)?;
    if !out.contains(&p) {
        out.push(p.clone());
    }
    for branch in &node.branches {
        match branch {
            Branch::Leaf { factors, .. } | Branch::Rep { factors, .. } => {
                push_factors_of(eval_product(factors, bindings)?, out);
            }
            Branch::Wedge { groups, base, .. } => {
                push_factors_of(eval_product(base, bindings)?, out);
                for g in groups {
                    match g {
                        WedgeGroup::Set(ms) => {
                            for m in ms {
                                push_factors_of(m.eval(bindings)?, out);
                            }
                        }
                        WedgeGroup::Pow(b, _) => push_factors_of(b.eval(bindings)?, out),
                    }
                }
            }
            Branch::Arrow => {}
            Branch::Sub(child) => collect_primes(child, bindings, out)?,
        }
    }
    Ok(())
}
