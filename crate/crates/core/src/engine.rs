//! Compositional signature computation: co-execution signatures for
//! specification compliance, reactivity signatures, and delay signatures.
//! Evaluating a program bottom-up yields one product state per node; the
//! root state decides the three verdicts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::nba::{PairSymbol, SpecAutomaton, StateId};
use crate::program::{BoolFunction, Prog, Valuation, VarId, VariableSet};
use crate::Verdict;

/// Flags accumulated along relation compositions.
pub trait Flag: Copy + Ord {
    const ZERO: Self;
    fn join(self, other: Self) -> Self;
}

impl Flag for bool {
    const ZERO: bool = false;
    fn join(self, other: bool) -> bool {
        self || other
    }
}

impl Flag for (bool, bool) {
    const ZERO: (bool, bool) = (false, false);
    fn join(self, other: (bool, bool)) -> (bool, bool) {
        (self.0 || other.0, self.1 || other.1)
    }
}

impl Flag for () {
    const ZERO: () = ();
    fn join(self, _other: ()) {}
}

/// Reflexive-transitive closure with flag accumulation: the smallest
/// relation containing `(x, 0, x)` for every carrier element and closed
/// under `(x,f1,y) ∈ D, (y,f2,z) ∈ rel ⇒ (x, f1∨f2, z) ∈ D`.
pub fn closure<X, F>(
    carrier: impl IntoIterator<Item = X>,
    rel: &BTreeSet<(X, F, X)>,
) -> BTreeSet<(X, F, X)>
where
    X: Ord + Copy,
    F: Flag,
{
    let mut by_source: BTreeMap<X, Vec<(F, X)>> = BTreeMap::new();
    for &(x, f, y) in rel {
        by_source.entry(x).or_default().push((f, y));
    }
    let mut result: BTreeSet<(X, F, X)> = carrier.into_iter().map(|x| (x, F::ZERO, x)).collect();
    let mut work: Vec<(X, F, X)> = result.iter().copied().collect();
    while let Some((x, f1, y)) = work.pop() {
        if let Some(steps) = by_source.get(&y) {
            for &(f2, z) in steps {
                let t = (x, f1.join(f2), z);
                if result.insert(t) {
                    work.push(t);
                }
            }
        }
    }
    result
}

/// Transitive closure (paths of at least one step), same flag accumulation
/// as `closure` but without the reflexive base.
pub fn plus_closure<X, F>(rel: &BTreeSet<(X, F, X)>) -> BTreeSet<(X, F, X)>
where
    X: Ord + Copy,
    F: Flag,
{
    let mut by_source: BTreeMap<X, Vec<(F, X)>> = BTreeMap::new();
    for &(x, f, y) in rel {
        by_source.entry(x).or_default().push((f, y));
    }
    let mut result = rel.clone();
    let mut work: Vec<(X, F, X)> = result.iter().copied().collect();
    while let Some((x, f1, y)) = work.pop() {
        if let Some(steps) = by_source.get(&y) {
            for &(f2, z) in steps {
                let t = (x, f1.join(f2), z);
                if result.insert(t) {
                    work.push(t);
                }
            }
        }
    }
    result
}

/// The overhanging suffix of a co-execution: either pending inputs or
/// pending outputs, never both, each of length at most k.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Overhang {
    /// `true` if the bits are pending outputs. The empty overhang is
    /// canonically input-sided.
    pub out_side: bool,
    pub bits: Vec<bool>,
}

impl Overhang {
    pub fn empty() -> Overhang {
        Overhang { out_side: false, bits: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn canonical(out_side: bool, bits: Vec<bool>) -> Overhang {
        Overhang { out_side: out_side && !bits.is_empty(), bits }
    }
}

/// Index into the co-configuration universe of a `SigCtx`.
pub type CoId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoConfig {
    pub sigma: Valuation,
    pub nba_state: StateId,
    pub overhang_id: u16,
}

/// Evaluation context: the variable set, the complement-specification NBA,
/// the delay bound, and the enumerated co-configuration universe.
pub struct SigCtx<'a> {
    pub vars: &'a VariableSet,
    pub nba: &'a SpecAutomaton,
    pub k: usize,
    overhangs: Vec<Overhang>,
    overhang_index: HashMap<Overhang, u16>,
}

impl<'a> SigCtx<'a> {
    pub fn new(vars: &'a VariableSet, nba: &'a SpecAutomaton, k: usize) -> SigCtx<'a> {
        let mut overhangs = Vec::new();
        for out_side in [false, true] {
            for len in 0..=k {
                if out_side && len == 0 {
                    continue; // the empty overhang is input-sided
                }
                for word in 0..1u32 << len {
                    let bits = (0..len).map(|i| word >> i & 1 == 1).collect();
                    overhangs.push(Overhang { out_side, bits });
                }
            }
        }
        let overhang_index = overhangs
            .iter()
            .enumerate()
            .map(|(i, o)| (o.clone(), i as u16))
            .collect();
        SigCtx { vars, nba, k, overhangs, overhang_index }
    }

    pub fn num_coconfigs(&self) -> usize {
        self.vars.num_valuations() * self.nba.num_states() * self.overhangs.len()
    }

    pub fn coconfig_ids(&self) -> impl Iterator<Item = CoId> {
        0..self.num_coconfigs() as CoId
    }

    pub fn overhang(&self, id: u16) -> &Overhang {
        &self.overhangs[id as usize]
    }

    pub fn coconfig(&self, id: CoId) -> CoConfig {
        let n_over = self.overhangs.len() as u32;
        let n_states = self.nba.num_states() as u32;
        let overhang_id = (id % n_over) as u16;
        let rest = id / n_over;
        CoConfig {
            sigma: Valuation(rest / n_states),
            nba_state: StateId((rest % n_states) as u16),
            overhang_id,
        }
    }

    pub fn coconfig_id(&self, sigma: Valuation, s: StateId, overhang: &Overhang) -> CoId {
        let n_over = self.overhangs.len() as u32;
        let n_states = self.nba.num_states() as u32;
        let ov = self.overhang_index[overhang] as u32;
        (sigma.0 * n_states + s.0 as u32) * n_over + ov
    }

    /// The initial co-configuration `(σ₀, s₀, ε, ε)`.
    pub fn initial_coconfig(&self) -> CoId {
        self.coconfig_id(Valuation::ZERO, self.nba.initial(), &Overhang::empty())
    }

    fn format_coconfig(&self, id: CoId) -> String {
        let c = self.coconfig(id);
        let ov = self.overhang(c.overhang_id);
        let word: String = ov.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let (u, v) = if ov.out_side { (String::new(), word) } else { (word, String::new()) };
        format!(
            "({}, {}, {}|{})",
            self.vars.format_valuation(c.sigma),
            self.nba.name(c.nba_state),
            u,
            v
        )
    }
}

/// Co-execution signature: the state of the compliance automaton.
/// `fin` relates co-configurations connected by a complete k-bounded
/// co-execution (flag: some NBA transition entered a final state);
/// `inf` holds the co-configurations starting an infinite k-bounded
/// co-execution whose NBA run visits final states infinitely often.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CoSig {
    pub fin: BTreeSet<(CoId, bool, CoId)>,
    pub inf: BTreeSet<CoId>,
}

/// Reactivity signature. `fin` relates entry and exit valuations of
/// terminating runs, flagged with input/output presence; `bad_inf` holds
/// entry valuations admitting an infinite run with finitely many inputs or
/// finitely many outputs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ReactSig {
    pub fin: BTreeSet<(Valuation, (bool, bool), Valuation)>,
    pub bad_inf: BTreeSet<Valuation>,
}

/// A delay configuration: valuation plus the running input/output length
/// difference.
pub type DelayCfg = (Valuation, i32);

/// Delay signature. `fin` relates delay configurations of terminating
/// runs that stay within the bound; `viol` holds configurations from which
/// some run pushes `|d|` beyond k.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DelaySig {
    pub fin: BTreeSet<(DelayCfg, DelayCfg)>,
    pub viol: BTreeSet<DelayCfg>,
}

/// The product state assigned to a program node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DtaState {
    pub co: CoSig,
    pub react: ReactSig,
    pub delay: DelaySig,
}

impl DtaState {
    /// Componentwise set inclusion. All combiners are monotone and the
    /// verdict only checks the absence of facts, so a superset state
    /// accepts in a context only if the subset state does too.
    pub fn subsumes(&self, other: &DtaState) -> bool {
        self.co.fin.len() <= other.co.fin.len()
            && self.co.inf.len() <= other.co.inf.len()
            && self.react.fin.len() <= other.react.fin.len()
            && self.delay.fin.len() <= other.delay.fin.len()
            && self.co.fin.is_subset(&other.co.fin)
            && self.co.inf.is_subset(&other.co.inf)
            && self.react.fin.is_subset(&other.react.fin)
            && self.react.bad_inf.is_subset(&other.react.bad_inf)
            && self.delay.fin.is_subset(&other.delay.fin)
            && self.delay.viol.is_subset(&other.delay.viol)
    }
}

/// A node of the ranked program alphabet, with expressions replaced by
/// their denotations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Input(VarId),
    Output(VarId),
    Assign(VarId, BoolFunction),
    Seq,
    If(BoolFunction),
    While(BoolFunction),
}

impl NodeKind {
    pub fn arity(&self) -> usize {
        match self {
            NodeKind::Input(_) | NodeKind::Output(_) | NodeKind::Assign(..) => 0,
            NodeKind::While(_) => 1,
            NodeKind::Seq | NodeKind::If(_) => 2,
        }
    }
}

fn check_arity<T>(kind: &NodeKind, children: &[T]) {
    assert_eq!(
        children.len(),
        kind.arity(),
        "arity mismatch for {kind:?}: got {} children",
        children.len()
    );
}

pub fn cosig_of(kind: &NodeKind, children: &[&CoSig], ctx: &SigCtx) -> CoSig {
    check_arity(kind, children);
    match kind {
        NodeKind::Input(b) => {
            let mut fin = BTreeSet::new();
            for id in ctx.coconfig_ids() {
                let c = ctx.coconfig(id);
                let ov = ctx.overhang(c.overhang_id);
                for a in [false, true] {
                    let sigma2 = c.sigma.with(*b, a);
                    if ov.out_side {
                        // pair the new input with the oldest pending output
                        let sym = PairSymbol { input: a, output: ov.bits[0] };
                        let rest = Overhang::canonical(true, ov.bits[1..].to_vec());
                        for &s2 in ctx.nba.successors(c.nba_state, sym) {
                            let target = ctx.coconfig_id(sigma2, s2, &rest);
                            fin.insert((id, ctx.nba.is_final(s2), target));
                        }
                    } else if ov.bits.len() < ctx.k {
                        let mut bits = ov.bits.clone();
                        bits.push(a);
                        let target =
                            ctx.coconfig_id(sigma2, c.nba_state, &Overhang { out_side: false, bits });
                        fin.insert((id, false, target));
                    }
                }
            }
            CoSig { fin, inf: BTreeSet::new() }
        }
        NodeKind::Output(b) => {
            let mut fin = BTreeSet::new();
            for id in ctx.coconfig_ids() {
                let c = ctx.coconfig(id);
                let ov = ctx.overhang(c.overhang_id);
                let bit = c.sigma.get(*b);
                if !ov.out_side && !ov.bits.is_empty() {
                    // pair the oldest pending input with the emitted bit
                    let sym = PairSymbol { input: ov.bits[0], output: bit };
                    let rest = Overhang::canonical(false, ov.bits[1..].to_vec());
                    for &s2 in ctx.nba.successors(c.nba_state, sym) {
                        let target = ctx.coconfig_id(c.sigma, s2, &rest);
                        fin.insert((id, ctx.nba.is_final(s2), target));
                    }
                } else if ov.bits.len() < ctx.k {
                    let mut bits = ov.bits.clone();
                    bits.push(bit);
                    let target =
                        ctx.coconfig_id(c.sigma, c.nba_state, &Overhang { out_side: true, bits });
                    fin.insert((id, false, target));
                }
            }
            CoSig { fin, inf: BTreeSet::new() }
        }
        NodeKind::Assign(b, fun) => {
            let mut fin = BTreeSet::new();
            for id in ctx.coconfig_ids() {
                let c = ctx.coconfig(id);
                let sigma2 = c.sigma.with(*b, fun.contains(c.sigma));
                let target = ctx.coconfig_id(sigma2, c.nba_state, ctx.overhang(c.overhang_id));
                fin.insert((id, false, target));
            }
            CoSig { fin, inf: BTreeSet::new() }
        }
        NodeKind::Seq => {
            let (first, second) = (children[0], children[1]);
            let mut by_source: BTreeMap<CoId, Vec<(bool, CoId)>> = BTreeMap::new();
            for &(x, f, y) in &second.fin {
                by_source.entry(x).or_default().push((f, y));
            }
            let mut fin = BTreeSet::new();
            let mut inf = first.inf.clone();
            for &(x, f1, y) in &first.fin {
                if second.inf.contains(&y) {
                    inf.insert(x);
                }
                if let Some(steps) = by_source.get(&y) {
                    for &(f2, z) in steps {
                        fin.insert((x, f1 || f2, z));
                    }
                }
            }
            CoSig { fin, inf }
        }
        NodeKind::If(cond) => {
            let (then_sig, else_sig) = (children[0], children[1]);
            let pick = |id: &CoId| cond.contains(ctx.coconfig(*id).sigma);
            let fin = then_sig
                .fin
                .iter()
                .filter(|(x, _, _)| pick(x))
                .chain(else_sig.fin.iter().filter(|(x, _, _)| !pick(x)))
                .copied()
                .collect();
            let inf = then_sig
                .inf
                .iter()
                .filter(|id| pick(id))
                .chain(else_sig.inf.iter().filter(|id| !pick(id)))
                .copied()
                .collect();
            CoSig { fin, inf }
        }
        NodeKind::While(cond) => {
            let body = children[0];
            let steps: BTreeSet<(CoId, bool, CoId)> = body
                .fin
                .iter()
                .filter(|(x, _, _)| cond.contains(ctx.coconfig(*x).sigma))
                .copied()
                .collect();
            let star = closure(ctx.coconfig_ids(), &steps);
            let mut fin = BTreeSet::new();
            let mut inf = BTreeSet::new();
            for &(x, f, y) in &star {
                if cond.contains(ctx.coconfig(y).sigma) {
                    // the loop continues at y: either the body diverges
                    // there, or a flagged cycle returns to y
                    if body.inf.contains(&y) || star.contains(&(y, true, y)) {
                        inf.insert(x);
                    }
                } else {
                    fin.insert((x, f, y));
                }
            }
            CoSig { fin, inf }
        }
    }
}

pub fn react_sig_of(kind: &NodeKind, children: &[&ReactSig], ctx: &SigCtx) -> ReactSig {
    check_arity(kind, children);
    let valuations = || ctx.vars.valuations();
    match kind {
        NodeKind::Input(b) => ReactSig {
            fin: valuations()
                .flat_map(|s| [false, true].map(|a| (s, (true, false), s.with(*b, a))))
                .collect(),
            bad_inf: BTreeSet::new(),
        },
        NodeKind::Output(_) => ReactSig {
            fin: valuations().map(|s| (s, (false, true), s)).collect(),
            bad_inf: BTreeSet::new(),
        },
        NodeKind::Assign(b, fun) => ReactSig {
            fin: valuations()
                .map(|s| (s, (false, false), s.with(*b, fun.contains(s))))
                .collect(),
            bad_inf: BTreeSet::new(),
        },
        NodeKind::Seq => {
            let (first, second) = (children[0], children[1]);
            let mut by_source: BTreeMap<Valuation, Vec<((bool, bool), Valuation)>> = BTreeMap::new();
            for &(x, f, y) in &second.fin {
                by_source.entry(x).or_default().push((f, y));
            }
            let mut fin = BTreeSet::new();
            let mut bad_inf = first.bad_inf.clone();
            for &(x, f1, y) in &first.fin {
                if second.bad_inf.contains(&y) {
                    bad_inf.insert(x);
                }
                if let Some(steps) = by_source.get(&y) {
                    for &(f2, z) in steps {
                        fin.insert((x, f1.join(f2), z));
                    }
                }
            }
            ReactSig { fin, bad_inf }
        }
        NodeKind::If(cond) => {
            let (then_sig, else_sig) = (children[0], children[1]);
            let fin = then_sig
                .fin
                .iter()
                .filter(|(x, _, _)| cond.contains(*x))
                .chain(else_sig.fin.iter().filter(|(x, _, _)| !cond.contains(*x)))
                .copied()
                .collect();
            let bad_inf = then_sig
                .bad_inf
                .iter()
                .filter(|x| cond.contains(**x))
                .chain(else_sig.bad_inf.iter().filter(|x| !cond.contains(**x)))
                .copied()
                .collect();
            ReactSig { fin, bad_inf }
        }
        NodeKind::While(cond) => {
            let body = children[0];
            let steps: BTreeSet<(Valuation, (bool, bool), Valuation)> = body
                .fin
                .iter()
                .filter(|(x, _, _)| cond.contains(*x))
                .copied()
                .collect();
            let star = closure(valuations(), &steps);
            let fin = star
                .iter()
                .filter(|(_, _, y)| !cond.contains(*y))
                .copied()
                .collect();
            // valuations lying on a cycle of iterations with no input
            // (resp. no output) anywhere along the cycle
            let cycle_entries = |input_free: bool| -> BTreeSet<Valuation> {
                let restricted: BTreeSet<_> = steps
                    .iter()
                    .filter(|(_, (i, o), _)| if input_free { !i } else { !o })
                    .copied()
                    .collect();
                plus_closure(&restricted)
                    .iter()
                    .filter(|(x, _, y)| x == y)
                    .map(|(x, _, _)| *x)
                    .collect()
            };
            let starving = {
                let mut s = cycle_entries(true);
                s.extend(cycle_entries(false));
                s
            };
            let mut bad_inf = BTreeSet::new();
            for &(x, _, y) in &star {
                if (cond.contains(y) && body.bad_inf.contains(&y)) || starving.contains(&y) {
                    bad_inf.insert(x);
                }
            }
            ReactSig { fin, bad_inf }
        }
    }
}

pub fn delay_sig_of(kind: &NodeKind, children: &[&DelaySig], ctx: &SigCtx) -> DelaySig {
    check_arity(kind, children);
    let k = ctx.k as i32;
    let carrier = || {
        ctx.vars
            .valuations()
            .flat_map(move |s| (-k..=k).map(move |d| (s, d)))
    };
    match kind {
        NodeKind::Input(b) => DelaySig {
            fin: carrier()
                .filter(|(_, d)| d + 1 <= k)
                .flat_map(|(s, d)| [false, true].map(|a| ((s, d), (s.with(*b, a), d + 1))))
                .collect(),
            viol: ctx.vars.valuations().map(|s| (s, k)).collect(),
        },
        NodeKind::Output(_) => DelaySig {
            fin: carrier()
                .filter(|(_, d)| d - 1 >= -k)
                .map(|(s, d)| ((s, d), (s, d - 1)))
                .collect(),
            viol: ctx.vars.valuations().map(|s| (s, -k)).collect(),
        },
        NodeKind::Assign(b, fun) => DelaySig {
            fin: carrier()
                .map(|(s, d)| ((s, d), (s.with(*b, fun.contains(s)), d)))
                .collect(),
            viol: BTreeSet::new(),
        },
        NodeKind::Seq => {
            let (first, second) = (children[0], children[1]);
            let mut by_source: BTreeMap<DelayCfg, Vec<DelayCfg>> = BTreeMap::new();
            for &(x, y) in &first.fin {
                by_source.entry(x).or_default().push(y);
            }
            let mut viol = first.viol.clone();
            let mut fin = BTreeSet::new();
            for (&x, targets) in &by_source {
                for &y in targets {
                    if second.viol.contains(&y) {
                        viol.insert(x);
                    }
                    for &(y2, z) in second.fin.range((y, (Valuation(0), i32::MIN))..) {
                        if y2 != y {
                            break;
                        }
                        fin.insert((x, z));
                    }
                }
            }
            DelaySig { fin, viol }
        }
        NodeKind::If(cond) => {
            let (then_sig, else_sig) = (children[0], children[1]);
            let fin = then_sig
                .fin
                .iter()
                .filter(|((x, _), _)| cond.contains(*x))
                .chain(else_sig.fin.iter().filter(|((x, _), _)| !cond.contains(*x)))
                .copied()
                .collect();
            let viol = then_sig
                .viol
                .iter()
                .filter(|(x, _)| cond.contains(*x))
                .chain(else_sig.viol.iter().filter(|(x, _)| !cond.contains(*x)))
                .copied()
                .collect();
            DelaySig { fin, viol }
        }
        NodeKind::While(cond) => {
            let body = children[0];
            let steps: BTreeSet<(DelayCfg, (), DelayCfg)> = body
                .fin
                .iter()
                .filter(|((x, _), _)| cond.contains(*x))
                .map(|&(x, y)| (x, (), y))
                .collect();
            let star = closure(carrier(), &steps);
            let mut fin = BTreeSet::new();
            let mut viol = BTreeSet::new();
            for &(x, (), y) in &star {
                if cond.contains(y.0) {
                    if body.viol.contains(&y) {
                        viol.insert(x);
                    }
                } else {
                    fin.insert((x, y));
                }
            }
            DelaySig { fin, viol }
        }
    }
}

/// Applies all three signature constructions at one node.
pub fn combine(kind: &NodeKind, children: &[&DtaState], ctx: &SigCtx) -> DtaState {
    let co: Vec<&CoSig> = children.iter().map(|c| &c.co).collect();
    let react: Vec<&ReactSig> = children.iter().map(|c| &c.react).collect();
    let delay: Vec<&DelaySig> = children.iter().map(|c| &c.delay).collect();
    DtaState {
        co: cosig_of(kind, &co, ctx),
        react: react_sig_of(kind, &react, ctx),
        delay: delay_sig_of(kind, &delay, ctx),
    }
}

/// Bottom-up evaluation: the run of the product automaton on the program
/// tree.
pub fn eval_program(p: &Prog, ctx: &SigCtx) -> DtaState {
    match p {
        Prog::Input(b) => combine(&NodeKind::Input(*b), &[], ctx),
        Prog::Output(b) => combine(&NodeKind::Output(*b), &[], ctx),
        Prog::Assign(b, e) => {
            combine(&NodeKind::Assign(*b, BoolFunction::of_expr(e, ctx.vars)), &[], ctx)
        }
        Prog::Seq(a, b) => {
            let (sa, sb) = (eval_program(a, ctx), eval_program(b, ctx));
            combine(&NodeKind::Seq, &[&sa, &sb], ctx)
        }
        Prog::If(e, a, b) => {
            let (sa, sb) = (eval_program(a, ctx), eval_program(b, ctx));
            combine(&NodeKind::If(BoolFunction::of_expr(e, ctx.vars)), &[&sa, &sb], ctx)
        }
        Prog::While(e, body) => {
            let sb = eval_program(body, ctx);
            combine(&NodeKind::While(BoolFunction::of_expr(e, ctx.vars)), &[&sb], ctx)
        }
    }
}

/// Reads the three verdicts off a root state.
pub fn verdict(st: &DtaState, ctx: &SigCtx) -> Verdict {
    let gamma0 = ctx.initial_coconfig();
    let sigma0 = Valuation::ZERO;
    let sat = !st.co.inf.contains(&gamma0);
    let terminates = st.react.fin.iter().any(|(x, _, _)| *x == sigma0);
    let reactive = !terminates && !st.react.bad_inf.contains(&sigma0);
    let delay_ok = !st.delay.viol.contains(&(sigma0, 0));
    Verdict { sat, reactive, delay_ok }
}

/// Deterministic line-oriented dump of a product state.
pub fn dump_signatures(st: &DtaState, ctx: &SigCtx) -> String {
    let mut out = String::new();
    let fmt_val = |s: Valuation| ctx.vars.format_valuation(s);
    writeln!(out, "cosig.fin:").unwrap();
    for &(x, f, y) in &st.co.fin {
        writeln!(
            out,
            "  {} --{}--> {}",
            ctx.format_coconfig(x),
            f as u8,
            ctx.format_coconfig(y)
        )
        .unwrap();
    }
    writeln!(out, "cosig.inf:").unwrap();
    for &x in &st.co.inf {
        writeln!(out, "  {}", ctx.format_coconfig(x)).unwrap();
    }
    writeln!(out, "react.fin:").unwrap();
    for &(x, (i, o), y) in &st.react.fin {
        writeln!(out, "  ({}) --i{},o{}--> ({})", fmt_val(x), i as u8, o as u8, fmt_val(y)).unwrap();
    }
    writeln!(out, "react.badinf:").unwrap();
    for &x in &st.react.bad_inf {
        writeln!(out, "  ({})", fmt_val(x)).unwrap();
    }
    writeln!(out, "delay.fin:").unwrap();
    for &((x, dx), (y, dy)) in &st.delay.fin {
        writeln!(out, "  ({},{dx}) --> ({},{dy})", fmt_val(x), fmt_val(y)).unwrap();
    }
    writeln!(out, "delay.viol:").unwrap();
    for &(x, d) in &st.delay.viol {
        writeln!(out, "  ({},{d})", fmt_val(x)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nba::parse_nba;
    use crate::program::Expr;
    use crate::syntax::parse_program;
    use crate::ioi::oracle_verdict;

    fn vars_b() -> VariableSet {
        VariableSet::new(["b"]).unwrap()
    }

    fn a_neq() -> SpecAutomaton {
        parse_nba(include_str!("../fixtures/a_neq.nba")).unwrap()
    }

    fn a_none() -> SpecAutomaton {
        parse_nba(include_str!("../fixtures/a_none.nba")).unwrap()
    }

    #[test]
    fn closure_of_empty_relation_is_reflexive() {
        let rel: BTreeSet<(u8, bool, u8)> = BTreeSet::new();
        let star = closure(0u8..4, &rel);
        let expected: BTreeSet<_> = (0u8..4).map(|x| (x, false, x)).collect();
        assert_eq!(star, expected);
    }

    #[test]
    fn closure_accumulates_flags_around_a_cycle() {
        let rel: BTreeSet<(u8, bool, u8)> = [(1, false, 2), (2, true, 1)].into();
        let star = closure(1u8..3, &rel);
        // every pair on the cycle is reachable both with and without the
        // flag once the flagged edge can be traversed
        for x in 1u8..3 {
            for y in 1u8..3 {
                assert!(star.contains(&(x, true, y)), "missing flagged ({x},{y})");
            }
            assert!(star.contains(&(x, false, x)));
        }
        assert!(star.contains(&(1, false, 2)));
        assert!(!star.contains(&(2, false, 1)));
    }

    #[test]
    fn closure_is_idempotent() {
        let rel: BTreeSet<(u8, bool, u8)> = [(0, true, 1), (1, false, 2), (3, false, 0)].into();
        let star = closure(0u8..4, &rel);
        assert_eq!(closure(0u8..4, &star), star);
    }

    #[test]
    fn plus_closure_has_no_trivial_self_loops() {
        let rel: BTreeSet<(u8, (), u8)> = [(0, (), 1), (1, (), 2)].into();
        let plus = plus_closure(&rel);
        let expected: BTreeSet<_> = [(0, (), 1), (1, (), 2), (0, (), 2)].into();
        assert_eq!(plus, expected);

        let cyc: BTreeSet<(u8, (), u8)> = [(0, (), 1), (1, (), 0)].into();
        let plus = plus_closure(&cyc);
        assert!(plus.contains(&(0, (), 0)));
        assert!(plus.contains(&(1, (), 1)));
    }

    #[test]
    fn input_cosig_respects_the_overhang_bound() {
        let vars = vars_b();
        let nba = a_neq();
        let ctx = SigCtx::new(&vars, &nba, 1);
        let b = vars.index_of("b").unwrap();
        let sig = cosig_of(&NodeKind::Input(b), &[], &ctx);
        assert!(sig.inf.is_empty());
        // from the empty overhang, reading input a stores it as overhang a
        let q0 = nba.initial();
        let src = ctx.coconfig_id(Valuation::ZERO, q0, &Overhang::empty());
        for a in [false, true] {
            let sigma2 = Valuation::ZERO.with(b, a);
            let dst =
                ctx.coconfig_id(sigma2, q0, &Overhang { out_side: false, bits: vec![a] });
            assert!(sig.fin.contains(&(src, false, dst)));
        }
        // from a full input overhang there is no step at k = 1
        let full = ctx.coconfig_id(
            Valuation::ZERO,
            q0,
            &Overhang { out_side: false, bits: vec![true] },
        );
        assert!(!sig.fin.iter().any(|(x, _, _)| *x == full));
    }

    #[test]
    fn output_cosig_pairs_against_pending_input() {
        let vars = vars_b();
        let nba = a_neq();
        let ctx = SigCtx::new(&vars, &nba, 1);
        let b = vars.index_of("b").unwrap();
        let sig = cosig_of(&NodeKind::Output(b), &[], &ctx);
        // pending input 1, sigma(b)=0: emits (1,0), a mismatch, so A_neq
        // can move to its accepting sink and raise the flag
        let q0 = nba.initial();
        let src = ctx.coconfig_id(
            Valuation::ZERO,
            q0,
            &Overhang { out_side: false, bits: vec![true] },
        );
        assert!(sig
            .fin
            .iter()
            .any(|&(x, f, _)| x == src && f), "mismatched pair must be flagged");
        // pending input 0, sigma(b)=0: emits (0,0), only q0 continues
        let src_eq = ctx.coconfig_id(
            Valuation::ZERO,
            q0,
            &Overhang { out_side: false, bits: vec![false] },
        );
        let dst = ctx.coconfig_id(Valuation::ZERO, q0, &Overhang::empty());
        assert!(sig.fin.contains(&(src_eq, false, dst)));
        assert!(!sig.fin.iter().any(|&(x, f, _)| x == src_eq && f));
    }

    #[test]
    fn echo_satisfies_and_negation_violates_a_neq() {
        let vars = vars_b();
        let nba = a_neq();
        let ctx = SigCtx::new(&vars, &nba, 1);
        let echo = parse_program("while true do { input b ; output b }", &vars).unwrap();
        let st = eval_program(&echo, &ctx);
        let v = verdict(&st, &ctx);
        assert_eq!((v.sat, v.reactive, v.delay_ok), (true, true, true));

        let neg =
            parse_program("while true do { input b ; b := !b ; output b }", &vars).unwrap();
        let st = eval_program(&neg, &ctx);
        let v = verdict(&st, &ctx);
        assert_eq!((v.sat, v.reactive, v.delay_ok), (false, true, true));
    }

    #[test]
    fn empty_complement_language_accepts_everything_satisfiable() {
        let vars = vars_b();
        let nba = a_none();
        let ctx = SigCtx::new(&vars, &nba, 1);
        for text in [
            "input b",
            "while true do { input b ; output b }",
            "while true do { b := !b }",
        ] {
            let p = parse_program(text, &vars).unwrap();
            let st = eval_program(&p, &ctx);
            assert!(verdict(&st, &ctx).sat, "{text}");
        }
    }

    #[test]
    fn reactivity_signature_examples() {
        let vars = vars_b();
        let nba = a_none();
        let ctx = SigCtx::new(&vars, &nba, 1);
        // a lone input terminates: not reactive
        let p = parse_program("input b", &vars).unwrap();
        let v = verdict(&eval_program(&p, &ctx), &ctx);
        assert!(!v.reactive);
        // an output-free loop starves the environment of outputs
        let p = parse_program("while true do { input b }", &vars).unwrap();
        let v = verdict(&eval_program(&p, &ctx), &ctx);
        assert!(!v.reactive);
        // an input-free loop diverges internally
        let p = parse_program("while true do { b := !b }", &vars).unwrap();
        let v = verdict(&eval_program(&p, &ctx), &ctx);
        assert!(!v.reactive);
        // a routing-only loop body spins without any transition
        let p = parse_program("while true do { while false do { b := b } }", &vars).unwrap();
        let v = verdict(&eval_program(&p, &ctx), &ctx);
        assert!(!v.reactive);
    }

    #[test]
    fn delay_signature_examples() {
        let vars = vars_b();
        let nba = a_none();
        let echo = parse_program("while true do { input b ; output b }", &vars).unwrap();
        let ctx1 = SigCtx::new(&vars, &nba, 1);
        assert!(verdict(&eval_program(&echo, &ctx1), &ctx1).delay_ok);
        let ctx0 = SigCtx::new(&vars, &nba, 0);
        assert!(!verdict(&eval_program(&echo, &ctx0), &ctx0).delay_ok);
        // double input before any output overflows k = 1
        let p = parse_program(
            "while true do { input b ; input b ; output b ; output b }",
            &vars,
        )
        .unwrap();
        assert!(!verdict(&eval_program(&p, &ctx1), &ctx1).delay_ok);
        let ctx2 = SigCtx::new(&vars, &nba, 2);
        assert!(verdict(&eval_program(&p, &ctx2), &ctx2).delay_ok);
    }

    #[test]
    fn verdict_matches_oracle_on_handpicked_programs() {
        let vars = vars_b();
        for nba in [a_none(), a_neq()] {
            for k in [1usize, 2] {
                let ctx = SigCtx::new(&vars, &nba, k);
                for text in [
                    "input b",
                    "output b",
                    "b := !b",
                    "while true do { input b ; output b }",
                    "while true do { input b ; b := !b ; output b }",
                    "while true do { output b }",
                    "while b do { input b }",
                    "if b then { input b } else { output b }",
                    "while true do { input b ; input b ; output b ; output b }",
                ] {
                    let p = parse_program(text, &vars).unwrap();
                    let got = verdict(&eval_program(&p, &ctx), &ctx);
                    let want = oracle_verdict(&p, &vars, &nba, k);
                    assert_eq!(got, want, "{text} (k={k})");
                }
            }
        }
    }

    #[test]
    fn loop_unrolling_gives_the_same_state() {
        let vars = vars_b();
        let nba = a_neq();
        let ctx = SigCtx::new(&vars, &nba, 1);
        let b = vars.index_of("b").unwrap();
        let body = parse_program("input b ; output b", &vars).unwrap();
        let cond = BoolFunction::of_expr(&Expr::Var(b), &vars);
        let body_st = eval_program(&body, &ctx);
        let while_st = combine(&NodeKind::While(cond), &[&body_st], &ctx);
        // while e do p  ==  if e then { p ; while e do p } else { skip }
        let seq_st = combine(&NodeKind::Seq, &[&body_st, &while_st], &ctx);
        let skip = eval_program(&Prog::Assign(b, Expr::Var(b)), &ctx);
        let unrolled = combine(&NodeKind::If(cond), &[&seq_st, &skip], &ctx);
        assert_eq!(while_st, unrolled);
    }

    #[test]
    fn dump_is_deterministic_and_sectioned() {
        let vars = vars_b();
        let nba = a_neq();
        let ctx = SigCtx::new(&vars, &nba, 1);
        let p = parse_program("while true do { input b ; output b }", &vars).unwrap();
        let st = eval_program(&p, &ctx);
        let d1 = dump_signatures(&st, &ctx);
        let d2 = dump_signatures(&st, &ctx);
        assert_eq!(d1, d2);
        for section in ["cosig.fin", "cosig.inf", "react.fin", "react.badinf", "delay.fin", "delay.viol"] {
            assert!(d1.contains(section), "missing section {section}:\n{d1}");
        }
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        fn arb_rel() -> impl Strategy<Value = BTreeSet<(u8, bool, u8)>> {
            proptest::collection::btree_set((0u8..5, any::<bool>(), 0u8..5), 0..12)
        }

        proptest! {
            #[test]
            fn closure_idempotent(rel in arb_rel()) {
                let star = closure(0u8..5, &rel);
                prop_assert_eq!(closure(0u8..5, &star), star);
            }

            #[test]
            fn closure_monotone(a in arb_rel(), b in arb_rel()) {
                let ab: BTreeSet<_> = a.union(&b).copied().collect();
                let star_a = closure(0u8..5, &a);
                let star_ab = closure(0u8..5, &ab);
                // every reachability fact of the smaller relation persists,
                // possibly with the flag upgraded by extra edges
                for &(x, f, y) in &star_a {
                    prop_assert!(star_ab.contains(&(x, f, y)) || star_ab.contains(&(x, true, y)));
                }
            }
        }
    }
}
