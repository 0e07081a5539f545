//! Executable program semantics: IOI machines, a simulator, and brute-force
//! oracles for specification compliance, reactivity, and delay.
//!
//! This module is deliberately independent of the signature engine; it
//! serves as ground truth for cross-checking.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::nba::{PairSymbol, SpecAutomaton, StateId};
use crate::program::{BoolFunction, Prog, Valuation, VarId, VariableSet};
use crate::Verdict;

/// Transition labels: input, output, or internal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IoLabel {
    In(bool),
    Out(bool),
    Internal,
}

impl fmt::Display for IoLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoLabel::In(a) => write!(f, "({},e)", *a as u8),
            IoLabel::Out(a) => write!(f, "(e,{})", *a as u8),
            IoLabel::Internal => write!(f, "(e,e)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

/// Flattened control-flow nodes. Branch nodes route by the condition value
/// without consuming a transition.
#[derive(Debug, Clone)]
enum CfgNode {
    Input { var: VarId, next: NodeId },
    Output { var: VarId, next: NodeId },
    Assign { var: VarId, fun: BoolFunction, next: NodeId },
    Branch { cond: BoolFunction, then_to: NodeId, else_to: NodeId },
    Halt,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    nodes: Vec<CfgNode>,
    entry: NodeId,
}

impl Cfg {
    pub fn compile(p: &Prog, vars: &VariableSet) -> Cfg {
        let mut nodes = vec![CfgNode::Halt];
        let entry = compile_into(p, vars, NodeId(0), &mut nodes);
        Cfg { nodes, entry }
    }

    pub fn entry(&self) -> NodeId {
        self.entry
    }

    fn node(&self, id: NodeId) -> &CfgNode {
        &self.nodes[id.0 as usize]
    }
}

fn compile_into(p: &Prog, vars: &VariableSet, next: NodeId, nodes: &mut Vec<CfgNode>) -> NodeId {
    let push = |nodes: &mut Vec<CfgNode>, n: CfgNode| {
        nodes.push(n);
        NodeId(nodes.len() as u32 - 1)
    };
    match p {
        Prog::Input(v) => push(nodes, CfgNode::Input { var: *v, next }),
        Prog::Output(v) => push(nodes, CfgNode::Output { var: *v, next }),
        Prog::Assign(v, e) => push(
            nodes,
            CfgNode::Assign { var: *v, fun: BoolFunction::of_expr(e, vars), next },
        ),
        Prog::Seq(a, b) => {
            let b_entry = compile_into(b, vars, next, nodes);
            compile_into(a, vars, b_entry, nodes)
        }
        Prog::If(cond, a, b) => {
            let then_to = compile_into(a, vars, next, nodes);
            let else_to = compile_into(b, vars, next, nodes);
            push(
                nodes,
                CfgNode::Branch { cond: BoolFunction::of_expr(cond, vars), then_to, else_to },
            )
        }
        Prog::While(cond, body) => {
            // reserve the branch node so the body can loop back to it
            let branch = push(nodes, CfgNode::Halt);
            let body_entry = compile_into(body, vars, branch, nodes);
            nodes[branch.0 as usize] = CfgNode::Branch {
                cond: BoolFunction::of_expr(cond, vars),
                then_to: body_entry,
                else_to: next,
            };
            branch
        }
    }
}

/// A resolved control point: routing through branch nodes has been applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ctl {
    /// At an atomic statement node.
    At(NodeId),
    /// At the whole-program exit.
    Done,
    /// Routing cycles forever without taking a transition.
    Stuck,
}

/// Follows branch nodes until an atomic node or the exit is reached.
/// A repeated branch node means the routing loops forever.
fn resolve(cfg: &Cfg, mut id: NodeId, sigma: Valuation) -> Ctl {
    let mut seen: Vec<NodeId> = Vec::new();
    loop {
        match cfg.node(id) {
            CfgNode::Halt => return Ctl::Done,
            CfgNode::Branch { cond, then_to, else_to } => {
                if seen.contains(&id) {
                    return Ctl::Stuck;
                }
                seen.push(id);
                id = if cond.contains(sigma) { *then_to } else { *else_to };
            }
            _ => return Ctl::At(id),
        }
    }
}

/// A machine state: resolved control point plus variable valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IoiState {
    pub ctl: Ctl,
    pub sigma: Valuation,
}

/// Explicit-state IOI machine: the reachable transition graph together with
/// the per-valuation entry and exit maps.
#[derive(Debug)]
pub struct IoiMachine {
    cfg: Cfg,
    pub states: Vec<IoiState>,
    pub transitions: Vec<(usize, IoLabel, usize)>,
    /// Entry state per valuation, in valuation order.
    pub entries: Vec<usize>,
    succ: Vec<Vec<(IoLabel, usize)>>,
}

impl IoiMachine {
    pub fn initial(&self) -> usize {
        self.entries[Valuation::ZERO.0 as usize]
    }

    pub fn outgoing(&self, state: usize) -> &[(IoLabel, usize)] {
        &self.succ[state]
    }

    /// Exit states, i.e. states at the whole-program exit.
    pub fn exits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.states[i].ctl == Ctl::Done)
    }

    pub fn state(&self, i: usize) -> IoiState {
        self.states[i]
    }

    fn outgoing_raw(&self, st: IoiState) -> Vec<(IoLabel, IoiState)> {
        let mut out = Vec::new();
        let ctl = match st.ctl {
            Ctl::At(id) => id,
            Ctl::Done | Ctl::Stuck => return out,
        };
        match self.cfg.node(ctl) {
            CfgNode::Input { var, next } => {
                for a in [false, true] {
                    let sigma = st.sigma.with(*var, a);
                    out.push((IoLabel::In(a), IoiState { ctl: resolve(&self.cfg, *next, sigma), sigma }));
                }
            }
            CfgNode::Output { var, next } => {
                let bit = st.sigma.get(*var);
                out.push((
                    IoLabel::Out(bit),
                    IoiState { ctl: resolve(&self.cfg, *next, st.sigma), sigma: st.sigma },
                ));
            }
            CfgNode::Assign { var, fun, next } => {
                let sigma = st.sigma.with(*var, fun.contains(st.sigma));
                out.push((IoLabel::Internal, IoiState { ctl: resolve(&self.cfg, *next, sigma), sigma }));
            }
            CfgNode::Branch { .. } | CfgNode::Halt => unreachable!("resolved control point"),
        }
        out
    }
}

/// Constructs the IOI machine of `p`: states reachable from any entry
/// valuation, with labeled transitions.
pub fn build_ioi(p: &Prog, vars: &VariableSet) -> IoiMachine {
    let cfg = Cfg::compile(p, vars);
    let mut machine = IoiMachine {
        cfg,
        states: Vec::new(),
        transitions: Vec::new(),
        entries: Vec::new(),
        succ: Vec::new(),
    };
    let mut index: HashMap<IoiState, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let intern = |st: IoiState,
                      index: &mut HashMap<IoiState, usize>,
                      states: &mut Vec<IoiState>,
                      queue: &mut VecDeque<usize>| {
        *index.entry(st).or_insert_with(|| {
            states.push(st);
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };
    for sigma in vars.valuations() {
        let st = IoiState { ctl: resolve(&machine.cfg, machine.cfg.entry(), sigma), sigma };
        let i = intern(st, &mut index, &mut machine.states, &mut queue);
        machine.entries.push(i);
    }
    while let Some(i) = queue.pop_front() {
        let st = machine.states[i];
        for (label, target) in machine.outgoing_raw(st) {
            let j = intern(target, &mut index, &mut machine.states, &mut queue);
            machine.transitions.push((i, label, j));
        }
    }
    machine.succ = vec![Vec::new(); machine.states.len()];
    for &(i, label, j) in &machine.transitions {
        machine.succ[i].push((label, j));
    }
    machine
}

/// Simulation outcome status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimStatus {
    Running,
    Terminated,
    InputStarved,
    StepLimit,
}

impl fmt::Display for SimStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimStatus::Running => "running",
            SimStatus::Terminated => "terminated",
            SimStatus::InputStarved => "input-starved",
            SimStatus::StepLimit => "step-limit",
        })
    }
}

/// The label of a finite computation prefix: consumed inputs, emitted
/// outputs, and how the run stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLabel {
    pub input_word: Vec<bool>,
    pub output_word: Vec<bool>,
    pub status: SimStatus,
}

/// Runs the initial computation, feeding `inputs` in order. Stops on
/// termination, input exhaustion at an input transition, or after
/// `max_steps` transitions. An internal routing loop counts as running out
/// of steps.
pub fn simulate(p: &Prog, vars: &VariableSet, inputs: &[bool], max_steps: usize) -> TraceLabel {
    let cfg = Cfg::compile(p, vars);
    let mut sigma = Valuation::ZERO;
    let mut ctl = resolve(&cfg, cfg.entry(), sigma);
    let mut next_input = 0usize;
    let mut input_word = Vec::new();
    let mut output_word = Vec::new();
    for _ in 0..max_steps {
        let id = match ctl {
            Ctl::Done => {
                return TraceLabel { input_word, output_word, status: SimStatus::Terminated }
            }
            Ctl::Stuck => break,
            Ctl::At(id) => id,
        };
        match cfg.node(id) {
            CfgNode::Input { var, next } => {
                let Some(&a) = inputs.get(next_input) else {
                    return TraceLabel { input_word, output_word, status: SimStatus::InputStarved };
                };
                next_input += 1;
                input_word.push(a);
                sigma = sigma.with(*var, a);
                ctl = resolve(&cfg, *next, sigma);
            }
            CfgNode::Output { var, next } => {
                output_word.push(sigma.get(*var));
                ctl = resolve(&cfg, *next, sigma);
            }
            CfgNode::Assign { var, fun, next } => {
                sigma = sigma.with(*var, fun.contains(sigma));
                ctl = resolve(&cfg, *next, sigma);
            }
            CfgNode::Branch { .. } | CfgNode::Halt => unreachable!(),
        }
    }
    if ctl == Ctl::Done {
        return TraceLabel { input_word, output_word, status: SimStatus::Terminated };
    }
    TraceLabel { input_word, output_word, status: SimStatus::StepLimit }
}

fn reachable_from_initial(machine: &IoiMachine) -> Vec<usize> {
    let mut seen = vec![false; machine.states.len()];
    let mut queue = VecDeque::from([machine.initial()]);
    seen[machine.initial()] = true;
    let mut order = Vec::new();
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &(_, j) in machine.outgoing(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    order
}

/// Cycle detection on the subgraph of `nodes` restricted to edges that
/// satisfy `keep`.
fn has_cycle(machine: &IoiMachine, nodes: &[usize], keep: impl Fn(IoLabel) -> bool) -> bool {
    let mut color: HashMap<usize, u8> = HashMap::new(); // 1 = on stack, 2 = done
    for &start in nodes {
        if color.contains_key(&start) {
            continue;
        }
        // iterative DFS with explicit edge cursors
        let mut stack = vec![(start, 0usize)];
        color.insert(start, 1);
        while let Some(&mut (node, ref mut edge)) = stack.last_mut() {
            let succ = machine.outgoing(node);
            let mut descended = false;
            while *edge < succ.len() {
                let (label, j) = succ[*edge];
                *edge += 1;
                if !keep(label) {
                    continue;
                }
                match color.get(&j) {
                    Some(1) => return true,
                    Some(_) => {}
                    None => {
                        color.insert(j, 1);
                        stack.push((j, 0));
                        descended = true;
                        break;
                    }
                }
            }
            if !descended {
                color.insert(node, 2);
                stack.pop();
            }
        }
    }
    false
}

/// Strict reactivity: from the initial state, no exit and no routing dead
/// end is reachable, and no reachable cycle is input-free or output-free.
pub fn oracle_reactive(p: &Prog, vars: &VariableSet) -> bool {
    let machine = build_ioi(p, vars);
    let reachable = reachable_from_initial(&machine);
    for &i in &reachable {
        match machine.state(i).ctl {
            Ctl::Done | Ctl::Stuck => return false,
            Ctl::At(_) => {}
        }
    }
    if has_cycle(&machine, &reachable, |l| !matches!(l, IoLabel::In(_))) {
        return false; // an input-free cycle starves the input sequence
    }
    if has_cycle(&machine, &reachable, |l| !matches!(l, IoLabel::Out(_))) {
        return false;
    }
    true
}

/// `true` iff every initial computation keeps `|#inputs - #outputs| <= k`.
pub fn oracle_delay(p: &Prog, vars: &VariableSet, k: usize) -> bool {
    let machine = build_ioi(p, vars);
    let k = k as i64;
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([(machine.initial(), 0i64)]);
    seen.insert((machine.initial(), 0i64));
    while let Some((i, d)) = queue.pop_front() {
        for &(label, j) in machine.outgoing(i) {
            let d2 = match label {
                IoLabel::In(_) => d + 1,
                IoLabel::Out(_) => d - 1,
                IoLabel::Internal => d,
            };
            if d2.abs() > k {
                return false;
            }
            if seen.insert((j, d2)) {
                queue.push_back((j, d2));
            }
        }
    }
    true
}

/// One configuration of the product of IOI machine, NBA and overhang buffer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductCfg {
    pub state: IoiState,
    pub nba_state: StateId,
    /// Pending input bits not yet paired (exclusive with `pending_out`).
    pub pending_in: Vec<bool>,
    /// Pending output bits not yet paired.
    pub pending_out: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoStep {
    pub from: ProductCfg,
    pub label: IoLabel,
    pub to: ProductCfg,
}

/// A counterexample: a finite stem followed by a cycle whose NBA run
/// enters a final state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Vec<LassoStep>,
    pub cycle: Vec<LassoStep>,
}

fn fmt_word(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl Lasso {
    /// Line-oriented counterexample dump.
    pub fn render(&self, vars: &VariableSet, nba: &SpecAutomaton) -> String {
        let fmt_cfg = |c: &ProductCfg| {
            let ctl = match c.state.ctl {
                Ctl::At(NodeId(n)) => format!("n{n}"),
                Ctl::Done => "exit".to_string(),
                Ctl::Stuck => "stuck".to_string(),
            };
            format!(
                "({}, {}, {}, {}|{})",
                ctl,
                vars.format_valuation(c.state.sigma),
                nba.name(c.nba_state),
                fmt_word(&c.pending_in),
                fmt_word(&c.pending_out),
            )
        };
        let mut out = String::new();
        for (section, steps) in [("stem:", &self.stem), ("cycle:", &self.cycle)] {
            out.push_str(section);
            out.push('\n');
            for s in steps {
                out.push_str(&format!(
                    "  {} --{}--> {}\n",
                    fmt_cfg(&s.from),
                    s.label,
                    fmt_cfg(&s.to)
                ));
            }
        }
        out
    }
}

struct ProductGraph {
    cfgs: Vec<ProductCfg>,
    // (target, label, enters a final NBA state)
    succ: Vec<Vec<(usize, IoLabel, bool)>>,
}

fn explore_product(machine: &IoiMachine, nba: &SpecAutomaton, k: usize) -> ProductGraph {
    let mut index: HashMap<ProductCfg, usize> = HashMap::new();
    let mut cfgs = Vec::new();
    let mut succ: Vec<Vec<(usize, IoLabel, bool)>> = Vec::new();
    let init = ProductCfg {
        state: machine.state(machine.initial()),
        nba_state: nba.initial(),
        pending_in: Vec::new(),
        pending_out: Vec::new(),
    };
    index.insert(init.clone(), 0);
    cfgs.push(init);
    succ.push(Vec::new());
    // state indices in the machine, rediscovered by value
    let machine_index: HashMap<IoiState, usize> =
        machine.states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let cfg = cfgs[i].clone();
        let mi = machine_index[&cfg.state];
        let mut edges = Vec::new();
        for &(label, j) in machine.outgoing(mi) {
            let target_state = machine.state(j);
            match label {
                IoLabel::Internal => edges.push((
                    ProductCfg { state: target_state, ..cfg.clone() },
                    label,
                    None,
                )),
                IoLabel::In(a) => {
                    if let Some(&b) = cfg.pending_out.first() {
                        let sym = PairSymbol { input: a, output: b };
                        for &s2 in nba.successors(cfg.nba_state, sym) {
                            edges.push((
                                ProductCfg {
                                    state: target_state,
                                    nba_state: s2,
                                    pending_in: Vec::new(),
                                    pending_out: cfg.pending_out[1..].to_vec(),
                                },
                                label,
                                Some(s2),
                            ));
                        }
                    } else if cfg.pending_in.len() < k {
                        let mut pending_in = cfg.pending_in.clone();
                        pending_in.push(a);
                        edges.push((
                            ProductCfg { state: target_state, pending_in, ..cfg.clone() },
                            label,
                            None,
                        ));
                    }
                    // else: the computation is not k-bounded; no product edge
                }
                IoLabel::Out(b) => {
                    if let Some(&a) = cfg.pending_in.first() {
                        let sym = PairSymbol { input: a, output: b };
                        for &s2 in nba.successors(cfg.nba_state, sym) {
                            edges.push((
                                ProductCfg {
                                    state: target_state,
                                    nba_state: s2,
                                    pending_in: cfg.pending_in[1..].to_vec(),
                                    pending_out: Vec::new(),
                                },
                                label,
                                Some(s2),
                            ));
                        }
                    } else if cfg.pending_out.len() < k {
                        let mut pending_out = cfg.pending_out.clone();
                        pending_out.push(b);
                        edges.push((
                            ProductCfg { state: target_state, pending_out, ..cfg.clone() },
                            label,
                            None,
                        ));
                    }
                }
            }
        }
        for (target, label, entered) in edges {
            let j = *index.entry(target.clone()).or_insert_with(|| {
                cfgs.push(target);
                succ.push(Vec::new());
                queue.push_back(cfgs.len() - 1);
                cfgs.len() - 1
            });
            let accepting = entered.map(|s| nba.is_final(s)).unwrap_or(false);
            succ[i].push((j, label, accepting));
        }
    }
    ProductGraph { cfgs, succ }
}

/// Tarjan's strongly connected components, iterative.
fn sccs(succ: &[Vec<(usize, IoLabel, bool)>]) -> Vec<usize> {
    let n = succ.len();
    let mut comp = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut num = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0usize;
    let mut ncomp = 0usize;
    for root in 0..n {
        if num[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        num[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            if *ei < succ[v].len() {
                let (w, _, _) = succ[v][*ei];
                *ei += 1;
                if num[w] == usize::MAX {
                    num[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(num[w]);
                }
            } else {
                if low[v] == num[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
                call.pop();
                if let Some(&mut (u, _)) = call.last_mut() {
                    low[u] = low[u].min(low[v]);
                }
            }
        }
    }
    comp
}

fn path(graph: &ProductGraph, from: usize, to: usize) -> Vec<(usize, IoLabel, usize)> {
    // BFS returning the edge list of some shortest path
    let mut prev: HashMap<usize, (usize, IoLabel)> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = vec![false; graph.succ.len()];
    seen[from] = true;
    while let Some(i) = queue.pop_front() {
        if i == to {
            break;
        }
        for &(j, label, _) in &graph.succ[i] {
            if !seen[j] {
                seen[j] = true;
                prev.insert(j, (i, label));
                queue.push_back(j);
            }
        }
    }
    let mut edges = Vec::new();
    let mut cur = to;
    while cur != from {
        let (p, label) = prev[&cur];
        edges.push((p, label, cur));
        cur = p;
    }
    edges.reverse();
    edges
}

/// Decides `<<p>>_k ∩ L(nba) = ∅` by accepting-cycle search on the product
/// of the IOI machine, the NBA, and the overhang buffer. Returns `false`
/// together with a lasso witness when the intersection is nonempty.
pub fn oracle_sat(
    p: &Prog,
    vars: &VariableSet,
    nba: &SpecAutomaton,
    k: usize,
) -> (bool, Option<Lasso>) {
    let machine = build_ioi(p, vars);
    let graph = explore_product(&machine, nba, k);
    let comp = sccs(&graph.succ);
    // an accepting cycle exists iff some final-entering edge stays inside
    // one strongly connected component
    let mut witness = None;
    'outer: for i in 0..graph.succ.len() {
        for &(j, label, accepting) in &graph.succ[i] {
            if accepting && comp[i] == comp[j] {
                witness = Some((i, label, j));
                break 'outer;
            }
        }
    }
    let Some((x, label, y)) = witness else {
        return (true, None);
    };
    let to_steps = |edges: Vec<(usize, IoLabel, usize)>| {
        edges
            .into_iter()
            .map(|(a, l, b)| LassoStep {
                from: graph.cfgs[a].clone(),
                label: l,
                to: graph.cfgs[b].clone(),
            })
            .collect::<Vec<_>>()
    };
    let stem = to_steps(path(&graph, 0, x));
    let mut cycle = vec![LassoStep {
        from: graph.cfgs[x].clone(),
        label,
        to: graph.cfgs[y].clone(),
    }];
    if y != x {
        cycle.extend(to_steps(path(&graph, y, x)));
    }
    (false, Some(Lasso { stem, cycle }))
}

/// The three ground-truth verdicts in one call.
pub fn oracle_verdict(p: &Prog, vars: &VariableSet, nba: &SpecAutomaton, k: usize) -> Verdict {
    Verdict {
        sat: oracle_sat(p, vars, nba, k).0,
        reactive: oracle_reactive(p, vars),
        delay_ok: oracle_delay(p, vars, k),
    }
}
