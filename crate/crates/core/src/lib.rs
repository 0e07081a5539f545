//! Synthesis and verification of structured reactive programs over Boolean
//! variables.
//!
//! Programs are checked against an omega-regular specification given as a
//! nondeterministic Büchi automaton for the *complement* of the
//! specification. Two independent routes compute the same three verdicts
//! (specification compliance, reactivity, k-bounded delay):
//!
//! * [`ioi`] — executable semantics: explicit machines, a simulator and
//!   brute-force product-graph oracles;
//! * [`engine`] — compositional signatures computed bottom-up over the
//!   program tree, the states of a deterministic tree automaton.
//!
//! [`synth`] saturates the reachable signature states over the program
//! alphabet, decides emptiness and extracts a height-minimal accepted
//! program.

use std::fmt;

pub mod engine;
pub mod ioi;
pub mod nba;
pub mod packed;
pub mod program;
pub mod syntax;
pub mod synth;

/// The three properties an accepted program must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Verdict {
    /// All k-bounded behaviors satisfy the specification.
    pub sat: bool,
    /// Every maximal initial computation is infinite with infinitely many
    /// inputs and infinitely many outputs.
    pub reactive: bool,
    /// No initial computation lets the input/output length difference
    /// exceed k.
    pub delay_ok: bool,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.sat && self.reactive && self.delay_ok
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sat={} reactive={} delay={}",
            self.sat as u8, self.reactive as u8, self.delay_ok as u8
        )
    }
}
