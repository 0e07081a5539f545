//! Abstract syntax and expression semantics for the structured program language.

use std::fmt;

use thiserror::Error;

/// Maximum number of program variables. Boolean functions are stored as
/// 64-bit truth-table masks, which caps the variable count at 6.
pub const MAX_VARS: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VarSetError {
    #[error("variable set must not be empty")]
    Empty,
    #[error("duplicate variable `{0}`")]
    Duplicate(String),
    #[error("invalid identifier `{0}`")]
    BadIdent(String),
    #[error("at most {MAX_VARS} variables are supported, got {0}")]
    TooMany(usize),
}

/// The finite, ordered set of program variables. The declaration order is
/// fixed and used for all canonical encodings (valuation bit vectors,
/// minterm order, rendering).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSet {
    names: Vec<String>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl VariableSet {
    pub fn new<I, S>(names: I) -> Result<Self, VarSetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(VarSetError::Empty);
        }
        if names.len() > MAX_VARS {
            return Err(VarSetError::TooMany(names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if !is_ident(n) {
                return Err(VarSetError::BadIdent(n.clone()));
            }
            if names[..i].contains(n) {
                return Err(VarSetError::Duplicate(n.clone()));
            }
        }
        Ok(VariableSet { names })
    }

    /// Parses a comma-separated list, e.g. `b` or `b1,b2`.
    pub fn parse_list(s: &str) -> Result<Self, VarSetError> {
        Self::new(s.split(',').map(|p| p.trim().to_string()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(|i| VarId(i as u16))
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0 as usize]
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        (0..self.names.len() as u16).map(VarId)
    }

    pub fn num_valuations(&self) -> usize {
        1 << self.names.len()
    }

    pub fn valuations(&self) -> impl Iterator<Item = Valuation> {
        (0..1u32 << self.names.len()).map(Valuation)
    }

    /// Renders a valuation as a bit string in declaration order.
    pub fn format_valuation(&self, sigma: Valuation) -> String {
        self.vars()
            .map(|v| if sigma.get(v) { '1' } else { '0' })
            .collect()
    }
}

/// Index of a variable in its `VariableSet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u16);

/// A total assignment of Boolean values to the variables, packed as a bit
/// vector in declaration order. Bit `i` holds the value of variable `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Valuation(pub u32);

impl Valuation {
    /// The initial valuation: every variable is 0.
    pub const ZERO: Valuation = Valuation(0);

    pub fn get(self, v: VarId) -> bool {
        self.0 >> v.0 & 1 == 1
    }

    pub fn with(self, v: VarId, value: bool) -> Valuation {
        if value {
            Valuation(self.0 | 1 << v.0)
        } else {
            Valuation(self.0 & !(1 << v.0))
        }
    }
}

/// Boolean expressions over the program variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(bool),
    Var(VarId),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    /// Evaluates the expression under the given valuation.
    pub fn eval(&self, sigma: Valuation) -> bool {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => sigma.get(*v),
            Expr::And(l, r) => l.eval(sigma) && r.eval(sigma),
            Expr::Or(l, r) => l.eval(sigma) || r.eval(sigma),
            Expr::Not(e) => !e.eval(sigma),
        }
    }

    pub fn var(v: VarId) -> Expr {
        Expr::Var(v)
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Expr, r: Expr) -> Expr {
        Expr::Or(Box::new(l), Box::new(r))
    }
}

/// The semantic denotation of an expression: the set of satisfying
/// valuations, stored as a truth-table mask (bit `sigma` set iff the
/// valuation with packed value `sigma` satisfies the function).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoolFunction {
    mask: u64,
    num_vars: u16,
}

impl BoolFunction {
    pub fn constant(value: bool, num_vars: usize) -> BoolFunction {
        assert!(num_vars <= MAX_VARS);
        let full = if num_vars == 6 { u64::MAX } else { (1u64 << (1 << num_vars)) - 1 };
        BoolFunction {
            mask: if value { full } else { 0 },
            num_vars: num_vars as u16,
        }
    }

    pub fn from_mask(mask: u64, num_vars: usize) -> BoolFunction {
        let full = BoolFunction::constant(true, num_vars).mask;
        assert_eq!(mask & !full, 0, "mask has bits outside the valuation universe");
        BoolFunction { mask, num_vars: num_vars as u16 }
    }

    /// The denotation of an expression: `{ sigma : e.eval(sigma) = 1 }`.
    pub fn of_expr(e: &Expr, vars: &VariableSet) -> BoolFunction {
        let mut mask = 0u64;
        for sigma in vars.valuations() {
            if e.eval(sigma) {
                mask |= 1 << sigma.0;
            }
        }
        BoolFunction { mask, num_vars: vars.len() as u16 }
    }

    pub fn from_valuations<I: IntoIterator<Item = Valuation>>(sigmas: I, num_vars: usize) -> BoolFunction {
        let mut mask = 0u64;
        for s in sigmas {
            assert!((s.0 as u64) < 1 << (1 << num_vars));
            mask |= 1 << s.0;
        }
        BoolFunction { mask, num_vars: num_vars as u16 }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars as usize
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, sigma: Valuation) -> bool {
        self.mask >> sigma.0 & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// The pointwise negation.
    pub fn complement(&self) -> BoolFunction {
        let full = BoolFunction::constant(true, self.num_vars as usize).mask;
        BoolFunction { mask: self.mask ^ full, num_vars: self.num_vars }
    }

    pub fn is_full(&self) -> bool {
        self.mask == BoolFunction::constant(true, self.num_vars()).mask
    }

    /// All Boolean functions over `num_vars` variables, in mask order.
    pub fn all(num_vars: usize) -> impl Iterator<Item = BoolFunction> {
        assert!(num_vars <= 4, "function pool enumeration is only supported up to 4 variables");
        let n = 1u64 << (1 << num_vars);
        (0..n).map(move |mask| BoolFunction { mask, num_vars: num_vars as u16 })
    }

    /// The canonical minterm-DNF expression for this function: one full
    /// conjunction of literals per satisfying valuation, valuations in
    /// ascending packed order, literals in variable order, left-associated.
    pub fn to_expr(&self, vars: &VariableSet) -> Expr {
        assert_eq!(self.num_vars(), vars.len());
        if self.is_empty() {
            return Expr::Const(false);
        }
        if self.is_full() {
            return Expr::Const(true);
        }
        let mut dnf: Option<Expr> = None;
        for sigma in vars.valuations() {
            if !self.contains(sigma) {
                continue;
            }
            let mut minterm: Option<Expr> = None;
            for v in vars.vars() {
                let lit = if sigma.get(v) {
                    Expr::Var(v)
                } else {
                    Expr::not(Expr::Var(v))
                };
                minterm = Some(match minterm {
                    None => lit,
                    Some(m) => Expr::and(m, lit),
                });
            }
            let m = minterm.expect("variable set is nonempty");
            dnf = Some(match dnf {
                None => m,
                Some(d) => Expr::or(d, m),
            });
        }
        dnf.unwrap()
    }
}

/// Program statements. `Seq` is a binary statement node; the concrete
/// syntax cannot distinguish sequence associativity, so the canonical form
/// produced by the parser is right-nested.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prog {
    Assign(VarId, Expr),
    Input(VarId),
    Output(VarId),
    Seq(Box<Prog>, Box<Prog>),
    If(Expr, Box<Prog>, Box<Prog>),
    While(Expr, Box<Prog>),
}

impl Prog {
    pub fn seq(a: Prog, b: Prog) -> Prog {
        Prog::Seq(Box::new(a), Box::new(b))
    }

    pub fn if_(cond: Expr, then_branch: Prog, else_branch: Prog) -> Prog {
        Prog::If(cond, Box::new(then_branch), Box::new(else_branch))
    }

    pub fn while_(cond: Expr, body: Prog) -> Prog {
        Prog::While(cond, Box::new(body))
    }

    /// Number of statement nodes (expression subtrees excluded).
    pub fn stmt_size(&self) -> usize {
        match self {
            Prog::Assign(..) | Prog::Input(_) | Prog::Output(_) => 1,
            Prog::Seq(a, b) => 1 + a.stmt_size() + b.stmt_size(),
            Prog::If(_, a, b) => 1 + a.stmt_size() + b.stmt_size(),
            Prog::While(_, p) => 1 + p.stmt_size(),
        }
    }

    /// Height of the statement tree (expression subtrees excluded).
    pub fn stmt_height(&self) -> usize {
        match self {
            Prog::Assign(..) | Prog::Input(_) | Prog::Output(_) => 1,
            Prog::Seq(a, b) => 1 + a.stmt_height().max(b.stmt_height()),
            Prog::If(_, a, b) => 1 + a.stmt_height().max(b.stmt_height()),
            Prog::While(_, p) => 1 + p.stmt_height(),
        }
    }
}

impl fmt::Display for VariableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b1b2() -> VariableSet {
        VariableSet::new(["b1", "b2"]).unwrap()
    }

    #[test]
    fn variable_set_rejects_duplicates_and_empty() {
        assert_eq!(
            VariableSet::new(["b", "b"]).unwrap_err(),
            VarSetError::Duplicate("b".into())
        );
        assert_eq!(VariableSet::new(Vec::<String>::new()).unwrap_err(), VarSetError::Empty);
    }

    #[test]
    fn eval_basics() {
        let vars = VariableSet::new(["b"]).unwrap();
        let b = vars.index_of("b").unwrap();
        let sigma1 = Valuation::ZERO.with(b, true);
        assert!(Expr::Const(true).eval(Valuation::ZERO));
        assert!(Expr::Var(b).eval(sigma1));
        // contradiction is false everywhere
        let contra = Expr::and(Expr::Var(b), Expr::not(Expr::Var(b)));
        assert!(!contra.eval(Valuation::ZERO));
        assert!(!contra.eval(sigma1));
    }

    #[test]
    fn sem_expr_examples() {
        let vars = b1b2();
        let (b1, b2) = (vars.index_of("b1").unwrap(), vars.index_of("b2").unwrap());
        assert!(BoolFunction::of_expr(&Expr::Const(false), &vars).is_empty());
        let f = BoolFunction::of_expr(&Expr::or(Expr::Var(b1), Expr::Var(b2)), &vars);
        assert_eq!(f.mask().count_ones(), 3);
    }

    #[test]
    fn canonical_expr_round_trips_all_two_var_functions() {
        let vars = b1b2();
        for f in BoolFunction::all(2) {
            let e = f.to_expr(&vars);
            assert_eq!(BoolFunction::of_expr(&e, &vars), f, "function mask {:#b}", f.mask());
        }
    }

    #[test]
    fn canonical_expr_examples() {
        let vars = b1b2();
        let (b1, b2) = (vars.index_of("b1").unwrap(), vars.index_of("b2").unwrap());
        assert_eq!(BoolFunction::constant(false, 2).to_expr(&vars), Expr::Const(false));
        assert_eq!(BoolFunction::constant(true, 2).to_expr(&vars), Expr::Const(true));
        // {b1=1,b2=0} and {b1=0,b2=1}
        let f = BoolFunction::from_valuations(
            [Valuation(0b01), Valuation(0b10)],
            2,
        );
        let expected = Expr::or(
            Expr::and(Expr::Var(b1), Expr::not(Expr::Var(b2))),
            Expr::and(Expr::not(Expr::Var(b1)), Expr::Var(b2)),
        );
        assert_eq!(f.to_expr(&vars), expected);
    }

    #[test]
    fn eval_agrees_with_sem_membership() {
        let vars = b1b2();
        let (b1, b2) = (vars.index_of("b1").unwrap(), vars.index_of("b2").unwrap());
        let exprs = [
            Expr::Const(true),
            Expr::Const(false),
            Expr::Var(b1),
            Expr::not(Expr::Var(b2)),
            Expr::and(Expr::Var(b1), Expr::Var(b2)),
            Expr::or(Expr::not(Expr::Var(b1)), Expr::Var(b2)),
        ];
        for e in &exprs {
            let f = BoolFunction::of_expr(e, &vars);
            for sigma in vars.valuations() {
                assert_eq!(e.eval(sigma), f.contains(sigma));
            }
        }
    }
}
