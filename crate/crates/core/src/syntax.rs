//! Concrete syntax: lexer, recursive-descent parser and canonical printer
//! for program files.
//!
//! Grammar (LL(1)):
//! ```text
//! prog   := stmt { ";" stmt }
//! stmt   := "input" ident | "output" ident | ident ":=" expr
//!         | "if" expr "then" "{" prog "}" "else" "{" prog "}"
//!         | "while" expr "do" "{" prog "}"
//! expr   := term { "||" term }
//! term   := factor { "&&" factor }
//! factor := "!" factor | "true" | "false" | ident | "(" expr ")"
//! ```
//! `#` starts a comment that runs to the end of the line.

use std::fmt;

use thiserror::Error;

use crate::program::{Expr, Prog, VariableSet};

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: expected {expected}, found {found}")]
    Syntax {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{pos}: unknown variable `{name}`")]
    UnknownVariable { pos: Pos, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Input,
    Output,
    If,
    Then,
    Else,
    While,
    Do,
    True,
    False,
    Semi,
    Assign,
    AndAnd,
    OrOr,
    Bang,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(n) => return write!(f, "`{n}`"),
            Tok::Input => "`input`",
            Tok::Output => "`output`",
            Tok::If => "`if`",
            Tok::Then => "`then`",
            Tok::Else => "`else`",
            Tok::While => "`while`",
            Tok::Do => "`do`",
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::Semi => "`;`",
            Tok::Assign => "`:=`",
            Tok::AndAnd => "`&&`",
            Tok::OrOr => "`||`",
            Tok::Bang => "`!`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }
    loop {
        let pos = Pos { line, col };
        let c = match chars.peek().copied() {
            None => {
                out.push((Tok::Eof, pos));
                return Ok(out);
            }
            Some(c) => c,
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            ';' => {
                bump!();
                out.push((Tok::Semi, pos));
            }
            '{' => {
                bump!();
                out.push((Tok::LBrace, pos));
            }
            '}' => {
                bump!();
                out.push((Tok::RBrace, pos));
            }
            '(' => {
                bump!();
                out.push((Tok::LParen, pos));
            }
            ')' => {
                bump!();
                out.push((Tok::RParen, pos));
            }
            '!' => {
                bump!();
                out.push((Tok::Bang, pos));
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    out.push((Tok::Assign, pos));
                } else {
                    return Err(ParseError::Syntax {
                        pos,
                        expected: "`:=`".into(),
                        found: "`:`".into(),
                    });
                }
            }
            '&' | '|' => {
                bump!();
                if chars.peek() == Some(&c) {
                    bump!();
                    out.push((if c == '&' { Tok::AndAnd } else { Tok::OrOr }, pos));
                } else {
                    return Err(ParseError::Syntax {
                        pos,
                        expected: if c == '&' { "`&&`" } else { "`||`" }.into(),
                        found: format!("`{c}`"),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                let tok = match ident.as_str() {
                    "input" => Tok::Input,
                    "output" => Tok::Output,
                    "if" => Tok::If,
                    "then" => Tok::Then,
                    "else" => Tok::Else,
                    "while" => Tok::While,
                    "do" => Tok::Do,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(ident),
                };
                out.push((tok, pos));
            }
            other => {
                return Err(ParseError::Syntax {
                    pos,
                    expected: "a token".into(),
                    found: format!("`{other}`"),
                });
            }
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    vars: &'a VariableSet,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos(),
            expected: expected.into(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&tok.to_string()))
        }
    }

    fn variable(&mut self) -> Result<crate::program::VarId, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(name) => self
                .vars
                .index_of(&name)
                .ok_or(ParseError::UnknownVariable { pos, name }),
            other => Err(ParseError::Syntax {
                pos,
                expected: "an identifier".into(),
                found: other.to_string(),
            }),
        }
    }

    fn prog(&mut self) -> Result<Prog, ParseError> {
        let mut stmts = vec![self.stmt()?];
        while *self.peek() == Tok::Semi {
            self.bump();
            stmts.push(self.stmt()?);
        }
        // right-nested canonical sequence
        let mut p = stmts.pop().unwrap();
        while let Some(s) = stmts.pop() {
            p = Prog::seq(s, p);
        }
        Ok(p)
    }

    fn block(&mut self) -> Result<Prog, ParseError> {
        self.expect(Tok::LBrace)?;
        let p = self.prog()?;
        self.expect(Tok::RBrace)?;
        Ok(p)
    }

    fn stmt(&mut self) -> Result<Prog, ParseError> {
        match self.peek() {
            Tok::Input => {
                self.bump();
                Ok(Prog::Input(self.variable()?))
            }
            Tok::Output => {
                self.bump();
                Ok(Prog::Output(self.variable()?))
            }
            Tok::If => {
                self.bump();
                let cond = self.expr()?;
                self.expect(Tok::Then)?;
                let then_branch = self.block()?;
                self.expect(Tok::Else)?;
                let else_branch = self.block()?;
                Ok(Prog::if_(cond, then_branch, else_branch))
            }
            Tok::While => {
                self.bump();
                let cond = self.expr()?;
                self.expect(Tok::Do)?;
                let body = self.block()?;
                Ok(Prog::while_(cond, body))
            }
            Tok::Ident(_) => {
                let v = self.variable()?;
                self.expect(Tok::Assign)?;
                Ok(Prog::Assign(v, self.expr()?))
            }
            _ => Err(self.err("a statement")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            e = Expr::or(e, self.term()?);
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.factor()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            e = Expr::and(e, self.factor()?);
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Expr::not(self.factor()?))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::Const(true))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::Const(false))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(_) => Ok(Expr::Var(self.variable()?)),
            _ => Err(self.err("an expression")),
        }
    }
}

/// Parses a program file into its AST. Sequences associate to the right.
pub fn parse_program(text: &str, vars: &VariableSet) -> Result<Prog, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, i: 0, vars };
    let prog = p.prog()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err("`;` or end of input"));
    }
    Ok(prog)
}

// Expression precedence levels for minimal parenthesization.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(_) => 3,
        Expr::Const(_) | Expr::Var(_) => 4,
    }
}

fn render_expr_into(e: &Expr, min_prec: u8, vars: &VariableSet, out: &mut String) {
    let parens = prec(e) < min_prec;
    if parens {
        out.push('(');
    }
    match e {
        Expr::Const(true) => out.push_str("true"),
        Expr::Const(false) => out.push_str("false"),
        Expr::Var(v) => out.push_str(vars.name(*v)),
        Expr::And(l, r) => {
            render_expr_into(l, 2, vars, out);
            out.push_str(" && ");
            render_expr_into(r, 3, vars, out);
        }
        Expr::Or(l, r) => {
            render_expr_into(l, 1, vars, out);
            out.push_str(" || ");
            render_expr_into(r, 2, vars, out);
        }
        Expr::Not(inner) => {
            out.push('!');
            render_expr_into(inner, 3, vars, out);
        }
    }
    if parens {
        out.push(')');
    }
}

pub fn render_expr(e: &Expr, vars: &VariableSet) -> String {
    let mut s = String::new();
    render_expr_into(e, 0, vars, &mut s);
    s
}

fn flatten<'p>(p: &'p Prog, out: &mut Vec<&'p Prog>) {
    match p {
        Prog::Seq(a, b) => {
            flatten(a, out);
            flatten(b, out);
        }
        other => out.push(other),
    }
}

/// Canonical formatting: one statement per line, two-space indentation,
/// mandatory braces, ` ;` separators at line ends. The output parses back
/// to the same AST (with sequences right-nested).
pub fn render_program(p: &Prog, vars: &VariableSet) -> String {
    let mut out = String::new();
    render_block_body(p, 0, vars, &mut out);
    // drop the trailing newline so a single statement renders on one line
    if out.ends_with('\n') {
        out.pop();
    }
    out
}

fn render_block_body(p: &Prog, indent: usize, vars: &VariableSet, out: &mut String) {
    let mut stmts = Vec::new();
    flatten(p, &mut stmts);
    let n = stmts.len();
    for (i, s) in stmts.iter().enumerate() {
        render_one(s, indent, vars, out);
        if i + 1 < n {
            out.push_str(" ;");
        }
        out.push('\n');
    }
}

fn render_one(p: &Prog, indent: usize, vars: &VariableSet, out: &mut String) {
    let pad = "  ".repeat(indent);
    out.push_str(&pad);
    match p {
        Prog::Input(v) => {
            out.push_str("input ");
            out.push_str(vars.name(*v));
        }
        Prog::Output(v) => {
            out.push_str("output ");
            out.push_str(vars.name(*v));
        }
        Prog::Assign(v, e) => {
            out.push_str(vars.name(*v));
            out.push_str(" := ");
            render_expr_into(e, 0, vars, out);
        }
        Prog::If(cond, then_branch, else_branch) => {
            out.push_str("if ");
            render_expr_into(cond, 0, vars, out);
            out.push_str(" then {\n");
            render_block_body(then_branch, indent + 1, vars, out);
            out.push_str(&pad);
            out.push_str("} else {\n");
            render_block_body(else_branch, indent + 1, vars, out);
            out.push_str(&pad);
            out.push('}');
        }
        Prog::While(cond, body) => {
            out.push_str("while ");
            render_expr_into(cond, 0, vars, out);
            out.push_str(" do {\n");
            render_block_body(body, indent + 1, vars, out);
            out.push_str(&pad);
            out.push('}');
        }
        Prog::Seq(..) => unreachable!("sequences are flattened before rendering"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::VariableSet;

    fn vars_b() -> VariableSet {
        VariableSet::new(["b"]).unwrap()
    }

    #[test]
    fn parse_single_statements() {
        let vars = vars_b();
        let b = vars.index_of("b").unwrap();
        assert_eq!(parse_program("input b", &vars).unwrap(), Prog::Input(b));
        assert_eq!(
            parse_program("while true do { input b ; output b }", &vars).unwrap(),
            Prog::while_(Expr::Const(true), Prog::seq(Prog::Input(b), Prog::Output(b)))
        );
    }

    #[test]
    fn unknown_variable_is_reported() {
        let vars = vars_b();
        match parse_program("input c", &vars) {
            Err(ParseError::UnknownVariable { name, .. }) => assert_eq!(name, "c"),
            other => panic!("expected UnknownVariable, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_position_and_expectation() {
        let vars = vars_b();
        match parse_program("input b ;", &vars) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos.line, 1),
            other => panic!("expected Syntax error, got {other:?}"),
        }
    }

    #[test]
    fn comments_are_skipped() {
        let vars = vars_b();
        let text = "# echo loop\ninput b # read\n; output b";
        let b = vars.index_of("b").unwrap();
        assert_eq!(
            parse_program(text, &vars).unwrap(),
            Prog::seq(Prog::Input(b), Prog::Output(b))
        );
    }

    #[test]
    fn render_examples() {
        let vars = vars_b();
        let b = vars.index_of("b").unwrap();
        assert_eq!(render_program(&Prog::Input(b), &vars), "input b");
        assert_eq!(
            render_program(&Prog::seq(Prog::Input(b), Prog::Output(b)), &vars),
            "input b ;\noutput b"
        );
        let echo = Prog::while_(Expr::Const(true), Prog::seq(Prog::Input(b), Prog::Output(b)));
        assert_eq!(
            render_program(&echo, &vars),
            "while true do {\n  input b ;\n  output b\n}"
        );
    }

    #[test]
    fn expr_parenthesization_round_trips() {
        let vars = VariableSet::new(["b1", "b2"]).unwrap();
        let (b1, b2) = (vars.index_of("b1").unwrap(), vars.index_of("b2").unwrap());
        let cases = [
            Expr::or(Expr::Var(b1), Expr::or(Expr::Var(b2), Expr::Var(b1))),
            Expr::and(Expr::or(Expr::Var(b1), Expr::Var(b2)), Expr::Var(b2)),
            Expr::not(Expr::and(Expr::Var(b1), Expr::Var(b2))),
            Expr::not(Expr::not(Expr::Var(b1))),
        ];
        for e in cases {
            let p = Prog::Assign(b1, e);
            let text = render_program(&p, &vars);
            assert_eq!(parse_program(&text, &vars).unwrap(), p, "text: {text}");
        }
    }

    // parse . render = id on every right-nested program of size <= 5
    #[test]
    fn round_trip_enumerated_programs() {
        let vars = VariableSet::new(["b1", "b2"]).unwrap();
        let b1 = vars.index_of("b1").unwrap();
        let b2 = vars.index_of("b2").unwrap();
        let exprs = vec![
            Expr::Const(true),
            Expr::Var(b1),
            Expr::not(Expr::Var(b2)),
            Expr::or(Expr::Var(b1), Expr::Var(b2)),
        ];
        // enumerate canonical (right-nested-seq) programs by statement size
        let mut by_size: Vec<Vec<Prog>> = vec![Vec::new(); 6];
        by_size[1] = vec![Prog::Input(b1), Prog::Output(b2)];
        for e in &exprs {
            by_size[1].push(Prog::Assign(b1, e.clone()));
        }
        for n in 2..=5usize {
            let mut progs = Vec::new();
            for left in 1..n - 1 {
                let right = n - 1 - left;
                for a in &by_size[left] {
                    if matches!(a, Prog::Seq(..)) {
                        continue; // canonical form: no Seq as a first component
                    }
                    for bprog in &by_size[right] {
                        progs.push(Prog::seq(a.clone(), bprog.clone()));
                    }
                }
                for e in exprs.iter().take(2) {
                    for a in &by_size[left] {
                        for bprog in &by_size[right] {
                            progs.push(Prog::if_(e.clone(), a.clone(), bprog.clone()));
                        }
                    }
                }
            }
            for e in exprs.iter().take(2) {
                for body in &by_size[n - 1] {
                    progs.push(Prog::while_(e.clone(), body.clone()));
                }
            }
            by_size[n] = progs;
        }
        let mut count = 0usize;
        for size in 1..=5usize {
            for p in &by_size[size] {
                let text = render_program(p, &vars);
                let parsed = parse_program(&text, &vars)
                    .unwrap_or_else(|e| panic!("failed to reparse:\n{text}\nerror: {e}"));
                assert_eq!(&parsed, p, "round trip failed for:\n{text}");
                count += 1;
            }
        }
        assert!(count > 1000, "enumeration too small: {count}");
    }
}
