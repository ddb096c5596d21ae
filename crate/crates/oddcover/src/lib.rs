//! Toolkit for covering systems of the integers with odd moduli.
//!
//! A covering system is a finite set of congruences `r_i (mod m_i)` such that
//! every integer satisfies at least one of them. This crate builds, transforms,
//! and rigorously verifies covering systems whose moduli are odd, greater than
//! one, and pairwise distinct except for one designated modulus `k` that may
//! repeat a bounded number of times.
//!
//! Layers, bottom up:
//! - [`intmath`]: exact big-integer and rational primitives (gcd/lcm, CRT,
//!   primality, factorization).
//! - [`congruence`]: congruences, residue classes, covering systems, the shift
//!   lemma, and the modulus audit.
//! - [`verifier`]: decides coverage by recursive residue-class splitting (for
//!   systems whose lcm is astronomically large) or by a brute-force sieve.
//! - [`treedsl`]: a small s-expression DSL for tree-diagram descriptions of
//!   coverings, with expansion, residue assignment, and a mop-up step that
//!   tiles the one class each tower of prime-power moduli leaves uncovered.
//! - [`constructions`]: built-in tree encodings achieving small repetition
//!   counts (9 used 3 times, 15 four, 21 five, 25 eight, a prime P used P-5
//!   times), plus the modulus-splitting transformation and odd coverings of
//!   integer subsets defined modulo 9.
//! - [`sequences`]: generators and residue analyzers for seven classical
//!   integer sequences (sums of two squares, sums of two cubes, powerful
//!   numbers, prime powers, derangements, Fermat numbers, perfect numbers)
//!   whose union admits such an odd covering.

pub mod congruence;
pub mod constructions;
pub mod intmath;
pub mod sequences;
pub mod treedsl;
pub mod verifier;
