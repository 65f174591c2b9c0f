//! Equality optimizations.
//!
//! In positions whose value must be True for the enclosing computation to
//! succeed, strict equality `===` may be replaced by the unification
//! operator `=:=`, which binds logic variables instead of enumerating their
//! values. Independently, `==` collapses to `===` wherever the type is
//! concrete and every involved Eq instance is the derived one, since both
//! then compute the same function.

use crate::ast::Span;
use crate::core_ir::*;
use crate::types::ClassEnv;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq)]
pub struct OptEntry {
    pub span: Span,
    pub what: &'static str,
}

/// Whether a dictionary expression is a closed tree of derived Eq instances
/// whose types all have a Data instance.
fn rewritable_eq_dict(classes: &ClassEnv, d: &CoreExpr) -> bool {
    match d {
        CoreExpr::MkDict(class, tycon, args) => {
            class == "Eq"
                && classes.instance("Eq", tycon).is_some_and(|i| i.derived)
                && classes.instance("Data", tycon).is_some()
                && args.iter().all(|a| rewritable_eq_dict(classes, a))
        }
        _ => false,
    }
}

/// Derived Eq and Data instances of one type constrain the same parameters,
/// so the dictionary arguments transfer positionally.
fn to_data_dict(d: &CoreExpr) -> CoreExpr {
    match d {
        CoreExpr::MkDict(_, tycon, args) => {
            CoreExpr::MkDict("Data".into(), tycon.clone(), args.iter().map(to_data_dict).collect())
        }
        other => other.clone(),
    }
}

struct Opt<'a> {
    classes: &'a ClassEnv,
    report: Vec<OptEntry>,
}

impl<'a> Opt<'a> {
    /// `rt` marks positions that must evaluate to True.
    fn expr(&mut self, e: &mut CoreExpr, rt: bool) {
        // `==` to `===` holds anywhere the instances are known and derived.
        if let CoreExpr::Proj(d, method, sp) = e {
            if method == "==" && rewritable_eq_dict(self.classes, d) {
                self.report.push(OptEntry { span: *sp, what: "== -> ===" });
                *e = CoreExpr::Proj(Box::new(to_data_dict(d)), "===".into(), *sp);
            }
        }
        // `===` to `=:=` only where True is required.
        if rt {
            if let CoreExpr::App(head, args) = e {
                if args.len() == 2 {
                    if let CoreExpr::Proj(_, method, sp) = head.as_ref() {
                        if method == "===" {
                            self.report.push(OptEntry { span: *sp, what: "=== -> =:=" });
                            let args = std::mem::take(args);
                            *e = CoreExpr::app(CoreExpr::Global("=:=".into()), args);
                        }
                    }
                }
            }
        }
        match e {
            CoreExpr::Var(..) | CoreExpr::Global(..) | CoreExpr::Con(..) | CoreExpr::Lit(..) => {}
            CoreExpr::App(head, args) => {
                let rt_args = rt
                    && matches!(head.as_ref(), CoreExpr::Global(g) if g == "&&")
                    && args.len() == 2;
                let solve_arg =
                    matches!(head.as_ref(), CoreExpr::Global(g) if g == "solve") && args.len() == 1;
                self.expr(head, false);
                for a in args.iter_mut() {
                    self.expr(a, rt_args || solve_arg);
                }
            }
            CoreExpr::Lam(_, body) => self.expr(Rc::make_mut(body), false),
            CoreExpr::Let(binds, body) => {
                for (_, b) in binds.iter_mut() {
                    self.expr(b, false);
                }
                self.expr(body, rt);
            }
            CoreExpr::Free(vars, body) => {
                for v in vars.iter_mut() {
                    if let Some(d) = &mut v.dict {
                        self.expr(d, false);
                    }
                }
                self.expr(body, rt);
            }
            CoreExpr::Cond(g, body) => {
                self.expr(g, true);
                self.expr(body, rt);
            }
            CoreExpr::Choice(a, b) => {
                self.expr(a, rt);
                self.expr(b, rt);
            }
            CoreExpr::MkDict(_, _, args) => {
                for a in args.iter_mut() {
                    self.expr(a, false);
                }
            }
            CoreExpr::Proj(d, _, _) => self.expr(d, false),
        }
    }
}

/// Rewrites the named functions in place and reports every change.
pub fn optimize_funs(prog: &mut CoreProgram, names: &[String]) -> Vec<OptEntry> {
    let classes = prog.classes.clone();
    let mut opt = Opt { classes: &classes, report: vec![] };
    for name in names {
        let Some(f) = prog.funs.get_mut(name) else { continue };
        let f = Rc::make_mut(f);
        if let FunImpl::Rules(rules) = &mut f.imp {
            for r in rules.iter_mut() {
                let r = Rc::make_mut(r);
                opt.expr(Rc::make_mut(&mut r.body), false);
            }
        }
    }
    opt.report
}

/// Rewrites the whole program in place and reports every change.
pub fn optimize_program(prog: &mut CoreProgram) -> Vec<OptEntry> {
    let names: Vec<String> = prog.order.clone();
    optimize_funs(prog, &names)
}

/// Rewrites a single goal expression.
pub fn optimize_goal(classes: &ClassEnv, e: &mut CoreExpr) -> Vec<OptEntry> {
    let mut opt = Opt { classes, report: vec![] };
    opt.expr(e, false);
    opt.report
}
