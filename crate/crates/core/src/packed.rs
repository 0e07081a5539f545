//! Bit-packed signature states for the saturation search.
//!
//! Saturation evaluates the combiners billions of times, so the set-based
//! signatures of [`crate::engine`] are mirrored here as bit matrices over
//! the same carriers: relations become row-indexed bitsets and the
//! combiners become boolean matrix operations. [`pack`] converts a
//! reference state; the unit tests check that both routes agree
//! combiner-by-combiner.

use std::collections::{BTreeSet, HashMap};

use smallvec::SmallVec;

use crate::engine::{cosig_of, delay_sig_of, react_sig_of, DtaState, NodeKind, SigCtx};
use crate::program::{BoolFunction, Valuation};
use crate::Verdict;

/// A bitset over a fixed finite carrier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mask {
    words: SmallVec<[u64; 2]>,
}

impl Mask {
    fn empty(n: usize) -> Mask {
        Mask { words: SmallVec::from_elem(0, n.div_ceil(64)) }
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn or_with(&mut self, other: &Mask) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn and(&self, other: &Mask) -> Mask {
        Mask { words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    fn not(&self, n: usize) -> Mask {
        let mut words: SmallVec<[u64; 2]> = self.words.iter().map(|w| !w).collect();
        if n % 64 != 0 {
            *words.last_mut().unwrap() &= (1u64 << (n % 64)) - 1;
        }
        Mask { words }
    }

    fn is_subset(&self, other: &Mask) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// A binary relation over a carrier of `n` elements as `n` row bitsets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rel {
    n: usize,
    w: usize,
    bits: SmallVec<[u64; 16]>,
}

impl Rel {
    fn empty(n: usize) -> Rel {
        let w = n.div_ceil(64);
        Rel { n, w, bits: SmallVec::from_elem(0, n * w) }
    }

    fn identity(n: usize) -> Rel {
        let mut r = Rel::empty(n);
        for i in 0..n {
            r.set(i, i);
        }
        r
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.w..(i + 1) * self.w]
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.w + j / 64] |= 1 << (j % 64);
    }

    fn or_with(&mut self, other: &Rel) -> bool {
        let mut changed = false;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            changed |= *a | b != *a;
            *a |= b;
        }
        changed
    }

    /// Relational composition: `(x, z)` iff some `y` has `(x, y)` in
    /// `self` and `(y, z)` in `other`.
    fn compose(&self, other: &Rel) -> Rel {
        let mut out = Rel::empty(self.n);
        for i in 0..self.n {
            let lo = i * self.w;
            for wi in 0..self.w {
                let mut word = self.bits[lo + wi];
                while word != 0 {
                    let j = wi * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    let src = j * self.w;
                    for k in 0..self.w {
                        out.bits[lo + k] |= other.bits[src + k];
                    }
                }
            }
        }
        out
    }

    /// Keep only rows whose index is in `keep`.
    fn mask_rows(&self, keep: &Mask) -> Rel {
        let mut out = self.clone();
        for i in 0..self.n {
            if !keep.get(i) {
                out.bits[i * self.w..(i + 1) * self.w].fill(0);
            }
        }
        out
    }

    /// Keep only columns whose index is in `keep`.
    fn mask_cols(&self, keep: &Mask) -> Rel {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in 0..self.w {
                out.bits[i * self.w + k] &= keep.words[k];
            }
        }
        out
    }

    /// Indices whose row intersects `targets`.
    fn rows_hitting(&self, targets: &Mask) -> Mask {
        let mut out = Mask::empty(self.n);
        for i in 0..self.n {
            if self.row(i).iter().zip(&targets.words).any(|(a, b)| a & b != 0) {
                out.set(i);
            }
        }
        out
    }

    /// Indices `x` with `(x, x)` in the relation.
    fn diagonal(&self) -> Mask {
        let mut out = Mask::empty(self.n);
        for i in 0..self.n {
            if self.get(i, i) {
                out.set(i);
            }
        }
        out
    }

    fn row_is_empty(&self, i: usize) -> bool {
        self.row(i).iter().all(|&w| w == 0)
    }

    fn is_subset(&self, other: &Rel) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Transitive closure, at least one step (no reflexive base).
fn plus_closure(steps: &Rel) -> Rel {
    let mut p = steps.clone();
    loop {
        let next = p.compose(steps);
        if !p.or_with(&next) {
            return p;
        }
    }
}

/// Reflexive-transitive closure of a flag-free step relation.
fn star_closure(steps: &Rel) -> Rel {
    let mut d = Rel::identity(steps.n);
    loop {
        let next = d.compose(steps);
        if !d.or_with(&next) {
            return d;
        }
    }
}

/// Reflexive-transitive closure of a Boolean-flagged step relation,
/// accumulating flags with max: `d0` holds flag-free paths (including the
/// empty path), `d1` paths traversing at least one flagged step.
fn star_closure_flagged(s0: &Rel, s1: &Rel) -> (Rel, Rel) {
    let n = s0.n;
    let mut any = s0.clone();
    any.or_with(s1);
    let mut d0 = Rel::identity(n);
    let mut d1 = Rel::empty(n);
    loop {
        let n0 = d0.compose(s0);
        let mut n1 = d1.compose(&any);
        n1.or_with(&d0.compose(s1));
        let mut changed = d0.or_with(&n0);
        changed |= d1.or_with(&n1);
        if !changed {
            return (d0, d1);
        }
    }
}

fn react_layer(has_input: bool, has_output: bool) -> usize {
    (has_input as usize) << 1 | has_output as usize
}

/// The flag join table of the reactivity layers: layer(f1 ∨ f2).
fn react_join(a: usize, b: usize) -> usize {
    a | b
}

/// Bit-matrix form of a [`DtaState`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackedState {
    co0: Rel,
    co1: Rel,
    co_inf: Mask,
    re: [Rel; 4],
    re_bad: Mask,
    de: Rel,
    de_viol: Mask,
}

impl PackedState {
    /// Componentwise inclusion; see [`DtaState::subsumes`].
    pub fn subsumes(&self, other: &PackedState) -> bool {
        self.co0.is_subset(&other.co0)
            && self.co1.is_subset(&other.co1)
            && self.co_inf.is_subset(&other.co_inf)
            && self.re.iter().zip(&other.re).all(|(a, b)| a.is_subset(b))
            && self.re_bad.is_subset(&other.re_bad)
            && self.de.is_subset(&other.de)
            && self.de_viol.is_subset(&other.de_viol)
    }

    /// OR-fold of all fact words: monotone, so `a.subsumes(b)` requires
    /// `a.fold() & !b.fold() == 0`. A one-word filter in front of the
    /// full inclusion test.
    pub fn fold(&self) -> u64 {
        let mut acc = 0u64;
        for r in [&self.co0, &self.co1, &self.re[0], &self.re[1], &self.re[2], &self.re[3], &self.de]
        {
            for &w in &r.bits {
                acc |= w;
            }
        }
        for m in [&self.co_inf, &self.re_bad, &self.de_viol] {
            for &w in &m.words {
                acc |= w;
            }
        }
        acc
    }

    /// Total number of facts; used to commit small states first.
    pub fn weight(&self) -> usize {
        self.co0.count()
            + self.co1.count()
            + self.co_inf.count()
            + self.re.iter().map(Rel::count).sum::<usize>()
            + self.re_bad.count()
            + self.de.count()
            + self.de_viol.count()
    }
}

/// Carrier sizes, distinguished initial indices, and precomputed
/// condition masks for one evaluation context.
pub struct PackedCtx<'a> {
    pub sig: &'a SigCtx<'a>,
    n_co: usize,
    n_val: usize,
    n_de: usize,
    k: i32,
    co_init: usize,
    val_init: usize,
    de_init: usize,
    /// valuation index of each co-configuration class
    co_sigma: Vec<u32>,
    /// co-configuration id -> bisimulation class
    co_class: Vec<usize>,
    cond_cache: HashMap<BoolFunction, (Mask, Mask, Mask)>,
    atom_cache: HashMap<NodeKind, PackedState>,
}

/// Partition the co-configurations by strong bisimulation with respect to
/// the input/output atom relations (flag layers as separate labels),
/// keeping classes valuation-pure and uniform across valuations so that
/// assignments — which only rewrite the valuation — are respected for
/// every possible right-hand side. Every co-signature is built from the
/// atom relations by unions, compositions, flagged closures, diagonals,
/// and valuation masks, all of which commute with such a quotient, so
/// working on classes is exact for signatures and verdicts alike.
fn quotient_coconfigs(sig: &SigCtx) -> Vec<usize> {
    let n_raw = sig.num_coconfigs();
    let n_val = sig.vars.num_valuations();
    let n_states = sig.nba.num_states();
    let n_over = n_raw / (n_val * n_states);
    // the valuation-independent part of a co-configuration
    let rest = |id: u32| {
        let c = sig.coconfig(id);
        c.nba_state.0 as usize * n_over + c.overhang_id as usize
    };
    let n_rest = n_states * n_over;
    // labeled transitions (source rest, source σ, label, target σ, target rest)
    let mut edges: Vec<(usize, u32, u32, u32, usize)> = Vec::new();
    for (vi, v) in sig.vars.vars().enumerate() {
        for (dir, kind) in [(0u32, NodeKind::Input(v)), (1, NodeKind::Output(v))] {
            let cs = cosig_of(&kind, &[], sig);
            for &(x, f, y) in &cs.fin {
                let (cx, cy) = (sig.coconfig(x), sig.coconfig(y));
                let label = (vi as u32) << 2 | dir << 1 | f as u32;
                edges.push((rest(x), cx.sigma.0, label, cy.sigma.0, rest(y)));
            }
        }
    }
    let mut q = vec![0usize; n_rest];
    let mut n_q = 1;
    loop {
        let mut sigs: Vec<BTreeSet<(u32, u32, u32, usize)>> = vec![BTreeSet::new(); n_rest];
        for &(rx, sx, label, sy, ry) in &edges {
            sigs[rx].insert((sx, label, sy, q[ry]));
        }
        // split blocks by signature; class ids in first-occurrence order
        let mut seen: HashMap<(usize, &BTreeSet<(u32, u32, u32, usize)>), usize> = HashMap::new();
        let next: Vec<usize> = (0..n_rest)
            .map(|r| {
                let fresh = seen.len();
                *seen.entry((q[r], &sigs[r])).or_insert(fresh)
            })
            .collect();
        let next_n = seen.len();
        drop(seen);
        if next_n == n_q {
            break;
        }
        q = next;
        n_q = next_n;
    }
    (0..n_raw as u32).map(|id| sig.coconfig(id).sigma.0 as usize * n_q + q[rest(id)]).collect()
}

impl<'a> PackedCtx<'a> {
    pub fn new(sig: &'a SigCtx<'a>) -> PackedCtx<'a> {
        let n_val = sig.vars.num_valuations();
        let k = sig.k as i32;
        let n_de = n_val * (2 * sig.k + 1);
        let co_class = quotient_coconfigs(sig);
        let n_co = co_class.iter().max().map_or(0, |m| m + 1);
        let mut co_sigma = vec![0u32; n_co];
        for id in sig.coconfig_ids() {
            co_sigma[co_class[id as usize]] = sig.coconfig(id).sigma.0;
        }
        PackedCtx {
            sig,
            n_co,
            n_val,
            n_de,
            k,
            co_init: co_class[sig.initial_coconfig() as usize],
            val_init: 0,
            de_init: Self::de_index_raw(Valuation::ZERO, 0, k),
            co_sigma,
            co_class,
            cond_cache: HashMap::new(),
            atom_cache: HashMap::new(),
        }
    }

    fn de_index_raw(sigma: Valuation, d: i32, k: i32) -> usize {
        sigma.0 as usize * (2 * k as usize + 1) + (d + k) as usize
    }

    fn de_index(&self, sigma: Valuation, d: i32) -> usize {
        Self::de_index_raw(sigma, d, self.k)
    }

    /// Masks of the co-configuration, valuation, and delay carriers whose
    /// valuation satisfies `cond`.
    fn cond_masks(&mut self, cond: BoolFunction) -> &(Mask, Mask, Mask) {
        let (n_co, n_val, n_de, k) = (self.n_co, self.n_val, self.n_de, self.k);
        let co_sigma = &self.co_sigma;
        self.cond_cache.entry(cond).or_insert_with(|| {
            let mut co = Mask::empty(n_co);
            for (i, &s) in co_sigma.iter().enumerate() {
                if cond.contains(Valuation(s)) {
                    co.set(i);
                }
            }
            let mut val = Mask::empty(n_val);
            let mut de = Mask::empty(n_de);
            for s in 0..n_val as u32 {
                if cond.contains(Valuation(s)) {
                    val.set(s as usize);
                    for d in -k..=k {
                        de.set(Self::de_index_raw(Valuation(s), d, k));
                    }
                }
            }
            (co, val, de)
        })
    }
}

/// Convert a reference state into bit-matrix form.
pub fn pack(state: &DtaState, p: &PackedCtx) -> PackedState {
    let mut co0 = Rel::empty(p.n_co);
    let mut co1 = Rel::empty(p.n_co);
    for &(x, f, y) in &state.co.fin {
        if f { &mut co1 } else { &mut co0 }.set(p.co_class[x as usize], p.co_class[y as usize]);
    }
    let mut co_inf = Mask::empty(p.n_co);
    for &x in &state.co.inf {
        co_inf.set(p.co_class[x as usize]);
    }
    let mut re = [Rel::empty(p.n_val), Rel::empty(p.n_val), Rel::empty(p.n_val), Rel::empty(p.n_val)];
    for &(x, (i, o), y) in &state.react.fin {
        re[react_layer(i, o)].set(x.0 as usize, y.0 as usize);
    }
    let mut re_bad = Mask::empty(p.n_val);
    for &x in &state.react.bad_inf {
        re_bad.set(x.0 as usize);
    }
    let mut de = Rel::empty(p.n_de);
    for &((xs, xd), (ys, yd)) in &state.delay.fin {
        de.set(p.de_index(xs, xd), p.de_index(ys, yd));
    }
    let mut de_viol = Mask::empty(p.n_de);
    for &(s, d) in &state.delay.viol {
        de_viol.set(p.de_index(s, d));
    }
    PackedState { co0, co1, co_inf, re, re_bad, de, de_viol }
}

/// Packed form of [`crate::engine::combine`].
pub fn combine_packed(kind: &NodeKind, children: &[&PackedState], p: &mut PackedCtx) -> PackedState {
    match kind {
        NodeKind::Input(_) | NodeKind::Output(_) | NodeKind::Assign(..) => {
            if let Some(st) = p.atom_cache.get(kind) {
                return st.clone();
            }
            // atoms are evaluated once through the reference rules
            let slow = DtaState {
                co: cosig_of(kind, &[], p.sig),
                react: react_sig_of(kind, &[], p.sig),
                delay: delay_sig_of(kind, &[], p.sig),
            };
            let st = pack(&slow, p);
            p.atom_cache.insert(kind.clone(), st.clone());
            st
        }
        NodeKind::Seq => {
            let (a, b) = (children[0], children[1]);
            let co_any_b = {
                let mut r = b.co0.clone();
                r.or_with(&b.co1);
                r
            };
            let co0 = a.co0.compose(&b.co0);
            let mut co1 = a.co1.compose(&co_any_b);
            co1.or_with(&a.co0.compose(&b.co1));
            let mut co_inf = a.co_inf.clone();
            let co_any_a = {
                let mut r = a.co0.clone();
                r.or_with(&a.co1);
                r
            };
            co_inf.or_with(&co_any_a.rows_hitting(&b.co_inf));

            let mut re = [
                Rel::empty(p.n_val),
                Rel::empty(p.n_val),
                Rel::empty(p.n_val),
                Rel::empty(p.n_val),
            ];
            for fa in 0..4 {
                for fb in 0..4 {
                    re[react_join(fa, fb)].or_with(&a.re[fa].compose(&b.re[fb]));
                }
            }
            let re_any_a = {
                let mut r = a.re[0].clone();
                for f in 1..4 {
                    r.or_with(&a.re[f]);
                }
                r
            };
            let mut re_bad = a.re_bad.clone();
            re_bad.or_with(&re_any_a.rows_hitting(&b.re_bad));

            let de = a.de.compose(&b.de);
            let mut de_viol = a.de_viol.clone();
            de_viol.or_with(&a.de.rows_hitting(&b.de_viol));
            PackedState { co0, co1, co_inf, re, re_bad, de, de_viol }
        }
        NodeKind::If(cond) => {
            let (t, e) = (children[0], children[1]);
            let (co_m, val_m, de_m) = p.cond_masks(*cond).clone();
            let pick_rel = |a: &Rel, b: &Rel, m: &Mask, n: usize| {
                let mut r = a.mask_rows(m);
                r.or_with(&b.mask_rows(&m.not(n)));
                r
            };
            let pick_mask = |a: &Mask, b: &Mask, m: &Mask, n: usize| {
                let mut s = a.and(m);
                s.or_with(&b.and(&m.not(n)));
                s
            };
            PackedState {
                co0: pick_rel(&t.co0, &e.co0, &co_m, p.n_co),
                co1: pick_rel(&t.co1, &e.co1, &co_m, p.n_co),
                co_inf: pick_mask(&t.co_inf, &e.co_inf, &co_m, p.n_co),
                re: [0, 1, 2, 3].map(|f| pick_rel(&t.re[f], &e.re[f], &val_m, p.n_val)),
                re_bad: pick_mask(&t.re_bad, &e.re_bad, &val_m, p.n_val),
                de: pick_rel(&t.de, &e.de, &de_m, p.n_de),
                de_viol: pick_mask(&t.de_viol, &e.de_viol, &de_m, p.n_de),
            }
        }
        NodeKind::While(cond) => {
            let body = children[0];
            let (co_m, val_m, de_m) = p.cond_masks(*cond).clone();

            // co-execution: closure of the body steps from condition-true
            // entries; exits leave the condition, diverging or flag-cycling
            // continuations feed inf
            let s0 = body.co0.mask_rows(&co_m);
            let s1 = body.co1.mask_rows(&co_m);
            let (d0, d1) = star_closure_flagged(&s0, &s1);
            let not_m = co_m.not(p.n_co);
            let co0 = d0.mask_cols(&not_m);
            let co1 = d1.mask_cols(&not_m);
            let mut bad = body.co_inf.and(&co_m);
            bad.or_with(&d1.diagonal().and(&co_m));
            let mut star_any = d0.clone();
            star_any.or_with(&d1);
            let co_inf = star_any.rows_hitting(&bad);

            // reactivity: layered closure over (hasInput, hasOutput)
            let steps: [Rel; 4] = [0, 1, 2, 3].map(|f| body.re[f].mask_rows(&val_m));
            let mut dr = [
                Rel::identity(p.n_val),
                Rel::empty(p.n_val),
                Rel::empty(p.n_val),
                Rel::empty(p.n_val),
            ];
            loop {
                let mut changed = false;
                for fa in 0..4 {
                    for fb in 0..4 {
                        let next = dr[fa].compose(&steps[fb]);
                        changed |= dr[react_join(fa, fb)].or_with(&next);
                    }
                }
                if !changed {
                    break;
                }
            }
            let val_not = val_m.not(p.n_val);
            let re = [0, 1, 2, 3].map(|f| dr[f].mask_cols(&val_not));
            let starving = {
                // iteration cycles with no input (layers 00, 01), and
                // with no output (layers 00, 10)
                let mut input_free = steps[react_layer(false, false)].clone();
                input_free.or_with(&steps[react_layer(false, true)]);
                let mut output_free = steps[react_layer(false, false)].clone();
                output_free.or_with(&steps[react_layer(true, false)]);
                let mut s = plus_closure(&input_free).diagonal();
                s.or_with(&plus_closure(&output_free).diagonal());
                s
            };
            let mut re_bad_targets = body.re_bad.and(&val_m);
            re_bad_targets.or_with(&starving);
            let mut star_re = dr[0].clone();
            for f in 1..4 {
                star_re.or_with(&dr[f]);
            }
            let re_bad = star_re.rows_hitting(&re_bad_targets);

            // delay: closure, exits leave the condition, violations are
            // reachable body violations at condition-true entries
            let de_steps = body.de.mask_rows(&de_m);
            let de_star = star_closure(&de_steps);
            let de = de_star.mask_cols(&de_m.not(p.n_de));
            let de_viol = de_star.rows_hitting(&body.de_viol.and(&de_m));

            PackedState { co0, co1, co_inf, re, re_bad, de, de_viol }
        }
    }
}

/// Packed form of [`crate::engine::verdict`].
pub fn verdict_packed(st: &PackedState, p: &PackedCtx) -> Verdict {
    let terminating = (0..4).any(|f| !st.re[f].row_is_empty(p.val_init));
    Verdict {
        sat: !st.co_inf.get(p.co_init),
        reactive: !terminating && !st.re_bad.get(p.val_init),
        delay_ok: !st.de_viol.get(p.de_init),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{combine, verdict};
    use crate::nba::parse_nba;
    use crate::program::{Expr, Prog, VariableSet};

    fn exhaustive_programs(vars: &VariableSet, max_size: usize) -> Vec<Prog> {
        let b = vars.index_of("b").unwrap();
        let pool = [Expr::Const(true), Expr::Const(false), Expr::Var(b), Expr::not(Expr::Var(b))];
        let mut by_size: Vec<Vec<Prog>> = vec![Vec::new(); max_size + 1];
        by_size[1] = vec![Prog::Input(b), Prog::Output(b)];
        for e in &pool {
            by_size[1].push(Prog::Assign(b, e.clone()));
        }
        for s in 2..=max_size {
            let mut batch = Vec::new();
            for body in &by_size[s - 1] {
                for e in &pool {
                    batch.push(Prog::while_(e.clone(), body.clone()));
                }
            }
            for ls in 1..s - 1 {
                for l in &by_size[ls] {
                    for r in &by_size[s - 1 - ls] {
                        batch.push(Prog::seq(l.clone(), r.clone()));
                        for e in &pool {
                            batch.push(Prog::if_(e.clone(), l.clone(), r.clone()));
                        }
                    }
                }
            }
            by_size[s] = batch;
        }
        by_size.into_iter().flatten().collect()
    }

    fn eval_packed(prog: &Prog, p: &mut PackedCtx, vars: &VariableSet) -> PackedState {
        match prog {
            Prog::Input(b) => combine_packed(&NodeKind::Input(*b), &[], p),
            Prog::Output(b) => combine_packed(&NodeKind::Output(*b), &[], p),
            Prog::Assign(b, e) => {
                combine_packed(&NodeKind::Assign(*b, BoolFunction::of_expr(e, vars)), &[], p)
            }
            Prog::Seq(a, b) => {
                let (sa, sb) = (eval_packed(a, p, vars), eval_packed(b, p, vars));
                combine_packed(&NodeKind::Seq, &[&sa, &sb], p)
            }
            Prog::If(e, a, b) => {
                let (sa, sb) = (eval_packed(a, p, vars), eval_packed(b, p, vars));
                combine_packed(&NodeKind::If(BoolFunction::of_expr(e, vars)), &[&sa, &sb], p)
            }
            Prog::While(e, a) => {
                let sa = eval_packed(a, p, vars);
                combine_packed(&NodeKind::While(BoolFunction::of_expr(e, vars)), &[&sa], p)
            }
        }
    }

    fn eval_slow(prog: &Prog, ctx: &SigCtx, vars: &VariableSet) -> DtaState {
        match prog {
            Prog::Input(b) => combine(&NodeKind::Input(*b), &[], ctx),
            Prog::Output(b) => combine(&NodeKind::Output(*b), &[], ctx),
            Prog::Assign(b, e) => {
                combine(&NodeKind::Assign(*b, BoolFunction::of_expr(e, vars)), &[], ctx)
            }
            Prog::Seq(a, b) => {
                let (sa, sb) = (eval_slow(a, ctx, vars), eval_slow(b, ctx, vars));
                combine(&NodeKind::Seq, &[&sa, &sb], ctx)
            }
            Prog::If(e, a, b) => {
                let (sa, sb) = (eval_slow(a, ctx, vars), eval_slow(b, ctx, vars));
                combine(&NodeKind::If(BoolFunction::of_expr(e, vars)), &[&sa, &sb], ctx)
            }
            Prog::While(e, a) => {
                let sa = eval_slow(a, ctx, vars);
                combine(&NodeKind::While(BoolFunction::of_expr(e, vars)), &[&sa], ctx)
            }
        }
    }

    #[test]
    fn packed_agrees_with_reference_combiners() {
        let vars = VariableSet::new(["b"]).unwrap();
        let nbas = [
            parse_nba(include_str!("../fixtures/a_none.nba")).unwrap(),
            parse_nba(include_str!("../fixtures/a_all.nba")).unwrap(),
            parse_nba(include_str!("../fixtures/a_neq.nba")).unwrap(),
        ];
        let programs = exhaustive_programs(&vars, 4);
        for nba in &nbas {
            for k in [0usize, 1, 2] {
                let ctx = SigCtx::new(&vars, nba, k);
                let mut pctx = PackedCtx::new(&ctx);
                for prog in &programs {
                    let slow = eval_slow(prog, &ctx, &vars);
                    let fast = eval_packed(prog, &mut pctx, &vars);
                    assert_eq!(pack(&slow, &pctx), fast, "{prog:?} k={k}");
                    assert_eq!(verdict(&slow, &ctx), verdict_packed(&fast, &pctx), "{prog:?} k={k}");
                }
            }
        }
    }

    #[test]
    fn subsumption_matches_reference() {
        let vars = VariableSet::new(["b"]).unwrap();
        let nba = parse_nba(include_str!("../fixtures/a_neq.nba")).unwrap();
        let ctx = SigCtx::new(&vars, &nba, 1);
        let pctx = PackedCtx::new(&ctx);
        let programs = exhaustive_programs(&vars, 3);
        let slow: Vec<DtaState> = programs.iter().map(|q| eval_slow(q, &ctx, &vars)).collect();
        let fast: Vec<PackedState> = slow.iter().map(|s| pack(s, &pctx)).collect();
        for i in (0..slow.len()).step_by(7) {
            for j in (0..slow.len()).step_by(11) {
                assert_eq!(slow[i].subsumes(&slow[j]), fast[i].subsumes(&fast[j]));
            }
        }
    }
}
