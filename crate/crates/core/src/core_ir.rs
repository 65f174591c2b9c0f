//! The small core language the evaluator runs. Pattern matching lives only
//! in rule left-hand sides; guards are explicit `Cond` nodes, logic variables
//! are introduced by `Free` nodes carrying their dictionary expressions, and
//! class dictionaries are first-class (`MkDict` / `Proj`).

use crate::ast::{Lit, Span};
use crate::types::{ClassEnv, DataTable};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq)]
pub enum CorePat {
    Var(String),
    Con(String, Vec<CorePat>),
    Lit(Lit),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeVar {
    pub name: String,
    /// Data dictionary for the variable's type, when one is statically
    /// constructible. Variables whose type stays polymorphic inside the rule
    /// carry none and cannot be narrowed.
    pub dict: Option<CoreExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoreExpr {
    /// Rule parameter, let/free-bound variable or dictionary parameter.
    Var(String),
    /// Top-level operation.
    Global(String),
    /// Constructor, unapplied.
    Con(String),
    Lit(Lit),
    App(Box<CoreExpr>, Vec<CoreExpr>),
    Lam(Vec<String>, Rc<CoreExpr>),
    /// Recursive binding group; bodies of the bindings see all names.
    Let(Vec<(String, CoreExpr)>, Box<CoreExpr>),
    Free(Vec<FreeVar>, Box<CoreExpr>),
    /// Guarded expression: evaluate the body only if the guard is True.
    Cond(Box<CoreExpr>, Box<CoreExpr>),
    Choice(Box<CoreExpr>, Box<CoreExpr>),
    /// Dictionary construction: class, type constructor, context dictionaries.
    MkDict(String, String, Vec<CoreExpr>),
    /// Method projection out of a dictionary. The span points at the call
    /// site that demanded the method; the optimizer reports through it.
    Proj(Box<CoreExpr>, String, Span),
}

impl CoreExpr {
    pub fn app(f: CoreExpr, args: Vec<CoreExpr>) -> CoreExpr {
        if args.is_empty() {
            return f;
        }
        match f {
            CoreExpr::App(head, mut prev) => {
                prev.extend(args);
                CoreExpr::App(head, prev)
            }
            other => CoreExpr::App(Box::new(other), args),
        }
    }

    pub fn con_true() -> CoreExpr {
        CoreExpr::Con("True".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prim {
    /// Strict unification; returns True or fails, never False.
    Unify,
    /// Lazy unification for functional patterns: binds the first occurrence
    /// of a pattern variable without evaluating the bound expression.
    LazyUnify,
    /// Catch-all of derived equality: False on distinct constructor heads,
    /// failure on equal heads (a positive rule already covers that case).
    ConMismatch,
    EqInt,
    EqChar,
    /// Infinite enumerations behind `aValue`: argument is the number of
    /// values already produced.
    EnumInt,
    EnumChar,
}

#[derive(Debug, Clone)]
pub struct CoreRule {
    pub pats: Vec<CorePat>,
    /// Shared so the evaluator can instantiate the body without cloning it.
    pub body: Rc<CoreExpr>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum FunImpl {
    Rules(Vec<Rc<CoreRule>>),
    Prim(Prim),
}

#[derive(Debug, Clone)]
pub struct CoreFun {
    pub name: String,
    pub arity: usize,
    pub imp: FunImpl,
}

#[derive(Debug, Clone)]
pub struct CoreProgram {
    pub funs: BTreeMap<String, Rc<CoreFun>>,
    /// Declaration order, for stable dumps.
    pub order: Vec<String>,
    pub data: DataTable,
    pub classes: ClassEnv,
}

impl CoreProgram {
    pub fn fun(&self, name: &str) -> Option<&Rc<CoreFun>> {
        self.funs.get(name)
    }

    pub fn add(&mut self, f: CoreFun) {
        self.order.push(f.name.clone());
        self.funs.insert(f.name.clone(), Rc::new(f));
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for name in &self.order {
            let f = &self.funs[name];
            match &f.imp {
                FunImpl::Prim(p) => {
                    let _ = writeln!(out, "{} = <prim {:?}>", f.name, p);
                }
                FunImpl::Rules(rules) => {
                    if rules.is_empty() {
                        let _ = writeln!(out, "{} = <no rules>", f.name);
                    }
                    for r in rules {
                        let mut line = f.name.clone();
                        for p in &r.pats {
                            line.push(' ');
                            show_pat(p, true, &mut line);
                        }
                        line.push_str(" = ");
                        show_core(&r.body, false, &mut line);
                        let _ = writeln!(out, "{line}");
                    }
                }
            }
        }
        out
    }

    pub fn dump_fun(&self, name: &str) -> Option<String> {
        if !self.funs.contains_key(name) {
            return None;
        }
        let keep: Vec<String> = self.order.iter().filter(|n| *n == name).cloned().collect();
        let sub = CoreProgram {
            funs: self.funs.clone(),
            order: keep,
            data: self.data.clone(),
            classes: self.classes.clone(),
        };
        Some(sub.dump())
    }
}

fn show_pat(p: &CorePat, atom: bool, out: &mut String) {
    match p {
        CorePat::Var(n) => out.push_str(n),
        CorePat::Lit(l) => out.push_str(&crate::pretty::show_lit(l)),
        CorePat::Con(name, args) => {
            let wrap = atom && !args.is_empty();
            if wrap {
                out.push('(');
            }
            if name.chars().next().is_some_and(|c| !c.is_alphanumeric()) && !name.starts_with('(') {
                out.push('(');
                out.push_str(name);
                out.push(')');
            } else {
                out.push_str(name);
            }
            for a in args {
                out.push(' ');
                show_pat(a, true, out);
            }
            if wrap {
                out.push(')');
            }
        }
    }
}

fn show_name(n: &str, out: &mut String) {
    if n.chars().next().is_some_and(|c| !c.is_alphanumeric() && c != '(' && c != '_') {
        out.push('(');
        out.push_str(n);
        out.push(')');
    } else {
        out.push_str(n);
    }
}

fn show_core(e: &CoreExpr, atom: bool, out: &mut String) {
    match e {
        CoreExpr::Var(n) => show_name(n, out),
        CoreExpr::Global(n) => show_name(n, out),
        CoreExpr::Con(n) => show_name(n, out),
        CoreExpr::Lit(l) => {
            let s = crate::pretty::show_lit(l);
            if s.starts_with('-') && atom {
                out.push('(');
                out.push_str(&s);
                out.push(')');
            } else {
                out.push_str(&s);
            }
        }
        CoreExpr::App(f, args) => {
            if atom {
                out.push('(');
            }
            show_core(f, true, out);
            for a in args {
                out.push(' ');
                show_core(a, true, out);
            }
            if atom {
                out.push(')');
            }
        }
        CoreExpr::Lam(params, body) => {
            if atom {
                out.push('(');
            }
            out.push('\\');
            out.push_str(&params.join(" "));
            out.push_str(" -> ");
            show_core(body, false, out);
            if atom {
                out.push(')');
            }
        }
        CoreExpr::Let(binds, body) => {
            if atom {
                out.push('(');
            }
            out.push_str("let ");
            for (i, (name, bound)) in binds.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                out.push_str(name);
                out.push_str(" = ");
                show_core(bound, false, out);
            }
            out.push_str(" in ");
            show_core(body, false, out);
            if atom {
                out.push(')');
            }
        }
        CoreExpr::Free(vars, body) => {
            if atom {
                out.push('(');
            }
            out.push_str("free");
            for v in vars {
                out.push(' ');
                out.push_str(&v.name);
                if let Some(d) = &v.dict {
                    out.push('{');
                    show_core(d, false, out);
                    out.push('}');
                }
            }
            out.push_str(" in ");
            show_core(body, false, out);
            if atom {
                out.push(')');
            }
        }
        CoreExpr::Cond(g, body) => {
            if atom {
                out.push('(');
            }
            out.push_str("cond ");
            show_core(g, true, out);
            out.push(' ');
            show_core(body, true, out);
            if atom {
                out.push(')');
            }
        }
        CoreExpr::Choice(a, b) => {
            if atom {
                out.push('(');
            }
            show_core(a, true, out);
            out.push_str(" ? ");
            show_core(b, true, out);
            if atom {
                out.push(')');
            }
        }
        CoreExpr::MkDict(class, tycon, args) => {
            out.push('{');
            out.push_str(class);
            out.push(' ');
            out.push_str(tycon);
            for a in args {
                out.push(' ');
                show_core(a, true, out);
            }
            out.push('}');
        }
        CoreExpr::Proj(d, method, _) => {
            if atom {
                out.push('(');
            }
            show_core(d, true, out);
            out.push('.');
            out.push_str(method);
            if atom {
                out.push(')');
            }
        }
    }
}

pub fn show_core_expr(e: &CoreExpr) -> String {
    let mut s = String::new();
    show_core(e, false, &mut s);
    s
}
