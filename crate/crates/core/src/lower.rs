//! Lowering of elaborated rules into the core language, inserting the
//! dictionary parameters and arguments that inference resolved.

use crate::analyze::{Analysis, GlobalKind};
use crate::ast::*;
use crate::core_ir::*;
use crate::elaborate::{Conj, ElabFun, ElabRule};
use crate::infer::{DictParam, Evidence, InferResult};
use std::collections::HashMap;

struct Lower<'a> {
    analysis: &'a Analysis,
    node_evidence: &'a HashMap<NodeId, Vec<Evidence>>,
    /// (class, tv) -> dictionary parameter name of the enclosing function.
    dict_params: HashMap<(String, u32), String>,
    scope: Vec<String>,
}

impl<'a> Lower<'a> {
    fn evidence_expr(&self, ev: &Evidence) -> CoreExpr {
        match ev {
            Evidence::Param(class, tv) => {
                let name = self
                    .dict_params
                    .get(&(class.clone(), *tv))
                    .expect("evidence refers to a context dictionary");
                CoreExpr::Var(name.clone())
            }
            Evidence::Inst { class, ty_con, args } => CoreExpr::MkDict(
                class.clone(),
                ty_con.clone(),
                args.iter().map(|a| self.evidence_expr(a)).collect(),
            ),
        }
    }

    fn node_dicts(&self, id: NodeId) -> Vec<CoreExpr> {
        self.node_evidence
            .get(&id)
            .map(|evs| evs.iter().map(|e| self.evidence_expr(e)).collect())
            .unwrap_or_default()
    }

    fn expr(&mut self, e: &Expr) -> CoreExpr {
        match e {
            Expr::Lit(_, _, l) => CoreExpr::Lit(*l),
            Expr::Con(_, _, n) => CoreExpr::Con(n.clone()),
            Expr::Anon(..) => unreachable!("anonymous variables are desugared"),
            Expr::Var(id, sp, n) => {
                if self.scope.iter().any(|s| s == n) {
                    return CoreExpr::Var(n.clone());
                }
                match self.analysis.global_kind(n) {
                    Some(GlobalKind::Method) => {
                        let evs = self.node_dicts(*id);
                        let dict = evs.into_iter().next().expect("method call has a dictionary");
                        CoreExpr::Proj(Box::new(dict), n.clone(), *sp)
                    }
                    _ if n == "=:=" => {
                        // The unification primitive never consults its
                        // dictionary; the static constraint is enough.
                        CoreExpr::Global(n.clone())
                    }
                    _ => CoreExpr::app(CoreExpr::Global(n.clone()), self.node_dicts(*id)),
                }
            }
            Expr::App(_, f, a) => {
                let lf = self.expr(f);
                let la = self.expr(a);
                CoreExpr::app(lf, vec![la])
            }
            Expr::Lambda(_, _, ps, b) => {
                let depth = self.scope.len();
                self.scope.extend(ps.iter().cloned());
                let body = self.expr(b);
                self.scope.truncate(depth);
                CoreExpr::Lam(ps.clone(), std::rc::Rc::new(body))
            }
            Expr::Let(_, _, n, bound, body) => {
                self.scope.push(n.clone());
                let lb = self.expr(bound);
                let lbody = self.expr(body);
                self.scope.pop();
                CoreExpr::Let(vec![(n.clone(), lb)], Box::new(lbody))
            }
            Expr::FreeIn(id, _, ns, body) => {
                let dicts = self.node_dicts(*id);
                let vars: Vec<FreeVar> = ns
                    .iter()
                    .enumerate()
                    .map(|(i, n)| FreeVar { name: n.clone(), dict: dicts.get(i).cloned() })
                    .collect();
                let depth = self.scope.len();
                self.scope.extend(ns.iter().cloned());
                let lbody = self.expr(body);
                self.scope.truncate(depth);
                CoreExpr::Free(vars, Box::new(lbody))
            }
            Expr::Annot(_, _, inner, _) => self.expr(inner),
        }
    }

    fn conj(&mut self, c: &Conj) -> CoreExpr {
        match c {
            Conj::Lazy { pat, var, .. } => {
                let lp = self.expr(pat);
                CoreExpr::app(CoreExpr::Global("=:<=".into()), vec![lp, CoreExpr::Var(var.clone())])
            }
            Conj::NonLin { a, b, .. } => CoreExpr::app(
                CoreExpr::Global("=:=".into()),
                vec![CoreExpr::Var(a.clone()), CoreExpr::Var(b.clone())],
            ),
            Conj::User(g) => self.expr(g),
        }
    }
}

fn lower_pat(p: &Pattern) -> CorePat {
    match p {
        Pattern::Var(_, n) => CorePat::Var(n.clone()),
        Pattern::Lit(_, l) => CorePat::Lit(*l),
        Pattern::Con(_, n, args) => CorePat::Con(n.clone(), args.iter().map(lower_pat).collect()),
        Pattern::Fun(..) => unreachable!("functional patterns are elaborated away"),
    }
}

fn pattern_names(p: &Pattern, out: &mut Vec<String>) {
    match p {
        Pattern::Var(_, n) => out.push(n.clone()),
        Pattern::Lit(..) => {}
        Pattern::Con(_, _, args) => {
            for a in args {
                pattern_names(a, out);
            }
        }
        Pattern::Fun(..) => {}
    }
}

pub fn lower_fun(analysis: &Analysis, inferred: &InferResult, f: &ElabFun) -> CoreFun {
    let dict_params: &[DictParam] = inferred
        .dict_params
        .get(&f.name)
        .map(|v| v.as_slice())
        .unwrap_or(&[]);
    let mut rules = vec![];
    for (idx, rule) in f.rules.iter().enumerate() {
        rules.push(std::rc::Rc::new(lower_rule(analysis, inferred, f, idx, rule, dict_params)));
    }
    CoreFun {
        name: f.name.clone(),
        arity: dict_params.len() + f.arity,
        imp: FunImpl::Rules(rules),
    }
}

fn lower_rule(
    analysis: &Analysis,
    inferred: &InferResult,
    f: &ElabFun,
    idx: usize,
    rule: &ElabRule,
    dict_params: &[DictParam],
) -> CoreRule {
    let mut lower = Lower {
        analysis,
        node_evidence: &inferred.node_evidence,
        dict_params: dict_params
            .iter()
            .map(|d| ((d.class.clone(), d.tv), d.name.clone()))
            .collect(),
        scope: vec![],
    };
    let mut pats: Vec<CorePat> =
        dict_params.iter().map(|d| CorePat::Var(d.name.clone())).collect();
    for p in &rule.params {
        pattern_names(p, &mut lower.scope);
        pats.push(lower_pat(p));
    }
    for fv in &rule.frees {
        lower.scope.push(fv.name.clone());
    }
    for (n, _) in &rule.wheres {
        lower.scope.push(n.clone());
    }

    let mut body = lower.expr(&rule.rhs);
    if !rule.conjs.is_empty() {
        let mut parts: Vec<CoreExpr> = rule.conjs.iter().map(|c| lower.conj(c)).collect();
        let guard = {
            let last = parts.pop().expect("nonempty");
            parts
                .into_iter()
                .rev()
                .fold(last, |acc, p| CoreExpr::app(CoreExpr::Global("&&".into()), vec![p, acc]))
        };
        body = CoreExpr::Cond(Box::new(guard), Box::new(body));
    }
    if !rule.wheres.is_empty() {
        let binds: Vec<(String, CoreExpr)> =
            rule.wheres.iter().map(|(n, e)| (n.clone(), lower.expr(e))).collect();
        body = CoreExpr::Let(binds, Box::new(body));
    }
    if !rule.frees.is_empty() {
        let vars: Vec<FreeVar> = rule
            .frees
            .iter()
            .map(|fv| {
                let ev = inferred
                    .free_dicts
                    .get(&(f.name.clone(), idx, fv.name.clone()))
                    .cloned()
                    .flatten();
                FreeVar { name: fv.name.clone(), dict: ev.map(|e| lower.evidence_expr(&e)) }
            })
            .collect();
        body = CoreExpr::Free(vars, Box::new(body));
    }
    CoreRule { pats, body: std::rc::Rc::new(body), span: rule.span }
}

/// Lowers a goal expression; goals have no dictionary parameters, so all
/// evidence is instance-built.
pub fn lower_goal(
    analysis: &Analysis,
    node_evidence: &HashMap<NodeId, Vec<Evidence>>,
    expr: &Expr,
) -> CoreExpr {
    let mut lower = Lower { analysis, node_evidence, dict_params: HashMap::new(), scope: vec![] };
    lower.expr(expr)
}
