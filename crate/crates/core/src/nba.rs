//! Nondeterministic Büchi automata over input/output bit pairs, with a
//! line-oriented text format.
//!
//! ```text
//! states: q0 q1
//! initial: q0
//! accepting: q1
//! trans: q0 (0,1) q1
//! ```
//!
//! The automaton is expected to recognize the *complement* of the
//! specification; this crate never complements Büchi automata itself.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// One of the four symbols of the pair alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairSymbol {
    pub input: bool,
    pub output: bool,
}

impl PairSymbol {
    pub const ALL: [PairSymbol; 4] = [
        PairSymbol { input: false, output: false },
        PairSymbol { input: false, output: true },
        PairSymbol { input: true, output: false },
        PairSymbol { input: true, output: true },
    ];

    pub fn index(self) -> usize {
        (self.input as usize) << 1 | self.output as usize
    }
}

impl fmt::Display for PairSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.input as u8, self.output as u8)
    }
}

/// Index of a state in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u16);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NbaError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undeclared state `{name}`")]
    UndeclaredState { line: usize, name: String },
    #[error("line {line}: more than one initial state")]
    MultipleInitial { line: usize },
    #[error("missing `initial:` line")]
    MissingInitial,
    #[error("missing `states:` line")]
    MissingStates,
}

/// A nondeterministic Büchi automaton over `PairSymbol`s with a single
/// initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecAutomaton {
    names: Vec<String>,
    initial: StateId,
    finals: BTreeSet<StateId>,
    transitions: BTreeSet<(StateId, PairSymbol, StateId)>,
    // successor table indexed by [state][symbol]
    succ: Vec<[Vec<StateId>; 4]>,
}

impl SpecAutomaton {
    pub fn new(
        names: Vec<String>,
        initial: StateId,
        finals: BTreeSet<StateId>,
        transitions: BTreeSet<(StateId, PairSymbol, StateId)>,
    ) -> SpecAutomaton {
        let n = names.len();
        assert!((initial.0 as usize) < n, "initial state out of range");
        assert!(finals.iter().all(|s| (s.0 as usize) < n));
        assert!(transitions
            .iter()
            .all(|(s, _, t)| (s.0 as usize) < n && (t.0 as usize) < n));
        let mut succ: Vec<[Vec<StateId>; 4]> = (0..n).map(|_| Default::default()).collect();
        for &(s, sym, t) in &transitions {
            succ[s.0 as usize][sym.index()].push(t);
        }
        SpecAutomaton { names, initial, finals, transitions, succ }
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.names.len() as u16).map(StateId)
    }

    pub fn name(&self, s: StateId) -> &str {
        &self.names[s.0 as usize]
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.finals.contains(&s)
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    pub fn transitions(&self) -> &BTreeSet<(StateId, PairSymbol, StateId)> {
        &self.transitions
    }

    /// All states reachable from `s` on `sym`. Panics if `s` is out of range.
    pub fn successors(&self, s: StateId, sym: PairSymbol) -> &[StateId] {
        &self.succ[s.0 as usize][sym.index()]
    }
}

fn parse_symbol(s: &str, line: usize) -> Result<PairSymbol, NbaError> {
    let bits: Option<(bool, bool)> = match s {
        "(0,0)" => Some((false, false)),
        "(0,1)" => Some((false, true)),
        "(1,0)" => Some((true, false)),
        "(1,1)" => Some((true, true)),
        _ => None,
    };
    bits.map(|(input, output)| PairSymbol { input, output })
        .ok_or_else(|| NbaError::Syntax {
            line,
            msg: format!("expected a symbol `(a,b)` with a,b in {{0,1}}, found `{s}`"),
        })
}

/// Parses the line-oriented NBA format.
pub fn parse_nba(text: &str) -> Result<SpecAutomaton, NbaError> {
    let mut names: Option<Vec<String>> = None;
    let mut initial: Option<(StateId, usize)> = None;
    let mut finals = BTreeSet::new();
    let mut transitions = BTreeSet::new();

    let lookup = |names: &Option<Vec<String>>, name: &str, line: usize| -> Result<StateId, NbaError> {
        let names = names.as_ref().ok_or(NbaError::MissingStates)?;
        names
            .iter()
            .position(|n| n == name)
            .map(|i| StateId(i as u16))
            .ok_or_else(|| NbaError::UndeclaredState { line, name: name.to_string() })
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(':').ok_or_else(|| NbaError::Syntax {
            line: line_no,
            msg: "expected `key: ...`".to_string(),
        })?;
        let rest = rest.trim();
        match key.trim() {
            "states" => {
                if names.is_some() {
                    return Err(NbaError::Syntax {
                        line: line_no,
                        msg: "duplicate `states:` line".to_string(),
                    });
                }
                let list: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                if list.is_empty() {
                    return Err(NbaError::Syntax {
                        line: line_no,
                        msg: "state list must not be empty".to_string(),
                    });
                }
                for (i, n) in list.iter().enumerate() {
                    if list[..i].contains(n) {
                        return Err(NbaError::Syntax {
                            line: line_no,
                            msg: format!("duplicate state `{n}`"),
                        });
                    }
                }
                names = Some(list);
            }
            "initial" => {
                let mut parts = rest.split_whitespace();
                let first = parts.next().ok_or_else(|| NbaError::Syntax {
                    line: line_no,
                    msg: "expected a state name".to_string(),
                })?;
                if parts.next().is_some() || initial.is_some() {
                    return Err(NbaError::MultipleInitial { line: line_no });
                }
                initial = Some((lookup(&names, first, line_no)?, line_no));
            }
            "accepting" => {
                for name in rest.split_whitespace() {
                    finals.insert(lookup(&names, name, line_no)?);
                }
            }
            "trans" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(NbaError::Syntax {
                        line: line_no,
                        msg: format!("expected `trans: src (a,b) dst`, found `{rest}`"),
                    });
                }
                let src = lookup(&names, parts[0], line_no)?;
                let sym = parse_symbol(parts[1], line_no)?;
                let dst = lookup(&names, parts[2], line_no)?;
                transitions.insert((src, sym, dst));
            }
            other => {
                return Err(NbaError::Syntax {
                    line: line_no,
                    msg: format!("unknown key `{other}`"),
                });
            }
        }
    }

    let names = names.ok_or(NbaError::MissingStates)?;
    let (initial, _) = initial.ok_or(NbaError::MissingInitial)?;
    Ok(SpecAutomaton::new(names, initial, finals, transitions))
}

/// Serializes in canonical line order; `parse_nba(serialize(a)) == a`.
pub fn serialize_nba(a: &SpecAutomaton) -> String {
    let mut out = String::new();
    out.push_str("states:");
    for s in a.states() {
        out.push(' ');
        out.push_str(a.name(s));
    }
    out.push('\n');
    out.push_str(&format!("initial: {}\n", a.name(a.initial())));
    out.push_str("accepting:");
    for s in a.finals() {
        out.push(' ');
        out.push_str(a.name(*s));
    }
    out.push('\n');
    for &(src, sym, dst) in a.transitions() {
        out.push_str(&format!("trans: {} {} {}\n", a.name(src), sym, a.name(dst)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const A_NONE: &str = "states: q0\ninitial: q0\naccepting:\n";
    pub(crate) const A_NEQ: &str = "\
states: q0 q1
initial: q0
accepting: q1
trans: q0 (0,0) q0
trans: q0 (1,1) q0
trans: q0 (0,1) q1
trans: q0 (1,0) q1
trans: q1 (0,0) q1
trans: q1 (0,1) q1
trans: q1 (1,0) q1
trans: q1 (1,1) q1
";

    #[test]
    fn parse_a_none() {
        let a = parse_nba(A_NONE).unwrap();
        assert_eq!(a.num_states(), 1);
        assert!(a.finals().is_empty());
        assert!(a.transitions().is_empty());
        for sym in PairSymbol::ALL {
            assert!(a.successors(StateId(0), sym).is_empty());
        }
    }

    #[test]
    fn parse_a_neq_successors() {
        let a = parse_nba(A_NEQ).unwrap();
        let q0 = StateId(0);
        let q1 = StateId(1);
        assert_eq!(a.successors(q0, PairSymbol { input: false, output: false }), &[q0]);
        assert_eq!(a.successors(q0, PairSymbol { input: true, output: false }), &[q1]);
        assert!(a.is_final(q1));
        assert!(!a.is_final(q0));
    }

    #[test]
    fn rejects_multiple_initial() {
        let text = "states: q0 q1\ninitial: q0 q1\n";
        assert!(matches!(parse_nba(text), Err(NbaError::MultipleInitial { .. })));
        let text2 = "states: q0 q1\ninitial: q0\ninitial: q1\n";
        assert!(matches!(parse_nba(text2), Err(NbaError::MultipleInitial { .. })));
    }

    #[test]
    fn rejects_undeclared_state() {
        let text = "states: q0\ninitial: q0\ntrans: q0 (0,0) q7\n";
        assert!(matches!(parse_nba(text), Err(NbaError::UndeclaredState { .. })));
    }

    #[test]
    fn round_trip_fixtures() {
        for text in [A_NONE, A_NEQ] {
            let a = parse_nba(text).unwrap();
            assert_eq!(parse_nba(&serialize_nba(&a)).unwrap(), a);
        }
    }

    #[test]
    fn successors_cover_the_transition_relation() {
        let a = parse_nba(A_NEQ).unwrap();
        let mut rebuilt = BTreeSet::new();
        for s in a.states() {
            for sym in PairSymbol::ALL {
                for &t in a.successors(s, sym) {
                    rebuilt.insert((s, sym, t));
                }
            }
        }
        assert_eq!(&rebuilt, a.transitions());
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        fn arb_nba() -> impl Strategy<Value = SpecAutomaton> {
            (1usize..=5).prop_flat_map(|n| {
                let trans = proptest::collection::btree_set(
                    (0..n as u16, 0usize..4, 0..n as u16).prop_map(|(s, sym, t)| {
                        (StateId(s), PairSymbol::ALL[sym], StateId(t))
                    }),
                    0..=3 * n,
                );
                let finals = proptest::collection::btree_set(
                    (0..n as u16).prop_map(StateId),
                    0..=n,
                );
                let initial = (0..n as u16).prop_map(StateId);
                (Just(n), initial, finals, trans).prop_map(|(n, initial, finals, trans)| {
                    let names = (0..n).map(|i| format!("q{i}")).collect();
                    SpecAutomaton::new(names, initial, finals, trans)
                })
            })
        }

        proptest! {
            #[test]
            fn serialize_parse_round_trip(a in arb_nba()) {
                prop_assert_eq!(parse_nba(&serialize_nba(&a)).unwrap(), a);
            }
        }
    }
}
