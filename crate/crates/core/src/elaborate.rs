//! Rule elaboration: turns parsed rules into a form with purely structural
//! parameters. Functional patterns move into lazy-unification guard
//! conjuncts, repeated pattern variables into strict-unification conjuncts,
//! and every `_` expression becomes a named logic variable.

use crate::analyze::{method_global, Analysis};
use crate::ast::*;
use crate::error::{Error, TypeError};
use crate::types::{Type, TypeScheme};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub enum SigSpec {
    /// A user-written signature, converted during inference.
    Surface(SigExpr),
    /// A prebuilt scheme (instance methods).
    Scheme(TypeScheme),
}

#[derive(Debug, Clone)]
pub struct ElabFree {
    pub name: String,
    pub span: Span,
    /// Variables taken from a functional pattern get their Data constraint
    /// through the pattern itself, not individually.
    pub from_funpat: bool,
}

/// One guard conjunct. Conjuncts are solved left to right; the whole rule
/// applies only if all of them evaluate to True.
#[derive(Debug, Clone)]
pub enum Conj {
    /// `pat =:<= var`: functional-pattern match against the parameter that
    /// replaced the pattern.
    Lazy { span: Span, pat: Expr, var: String },
    /// `a =:= b`: strict equation from a repeated pattern variable.
    NonLin { span: Span, a: String, b: String },
    /// The user-written boolean guard.
    User(Expr),
}

#[derive(Debug, Clone)]
pub struct ElabRule {
    pub span: Span,
    pub params: Vec<Pattern>,
    pub conjs: Vec<Conj>,
    pub rhs: Expr,
    pub wheres: Vec<(String, Expr)>,
    pub frees: Vec<ElabFree>,
}

#[derive(Debug, Clone)]
pub struct ElabFun {
    pub name: String,
    pub span: Span,
    pub sig: Option<SigSpec>,
    pub arity: usize,
    pub rules: Vec<ElabRule>,
}

#[derive(Debug)]
pub struct ElabModule {
    pub funs: Vec<ElabFun>,
}

struct Elab<'a> {
    analysis: &'a Analysis,
    next_id: u32,
    next_var: u32,
}

impl<'a> Elab<'a> {
    fn fresh_id(&mut self) -> NodeId {
        self.next_id += 1;
        NodeId(self.next_id)
    }

    fn fresh_var(&mut self, prefix: &str) -> String {
        self.next_var += 1;
        format!("_{prefix}{}", self.next_var)
    }

    /// Replaces `_` by `let v free in v`; `_` is an anonymous logic variable
    /// scoped to its occurrence.
    fn desugar_anons(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::Anon(_, sp) => {
                let name = self.fresh_var("a");
                let var = Expr::Var(self.fresh_id(), *sp, name.clone());
                Expr::FreeIn(self.fresh_id(), *sp, vec![name], Box::new(var))
            }
            Expr::Var(..) | Expr::Con(..) | Expr::Lit(..) => e.clone(),
            Expr::App(id, f, a) => {
                Expr::App(*id, Box::new(self.desugar_anons(f)), Box::new(self.desugar_anons(a)))
            }
            Expr::Lambda(id, sp, ps, b) => {
                Expr::Lambda(*id, *sp, ps.clone(), Box::new(self.desugar_anons(b)))
            }
            Expr::Let(id, sp, n, e1, e2) => Expr::Let(
                *id,
                *sp,
                n.clone(),
                Box::new(self.desugar_anons(e1)),
                Box::new(self.desugar_anons(e2)),
            ),
            Expr::FreeIn(id, sp, ns, b) => {
                Expr::FreeIn(*id, *sp, ns.clone(), Box::new(self.desugar_anons(b)))
            }
            Expr::Annot(id, sp, inner, t) => {
                Expr::Annot(*id, *sp, Box::new(self.desugar_anons(inner)), t.clone())
            }
        }
    }

    /// Classifies identifiers inside a functional pattern. Defined operations
    /// stay references; names bound by ordinary patterns of the same rule are
    /// shared occurrences; anything else becomes a rule-local logic variable.
    fn classify_funpat(
        &mut self,
        e: &Expr,
        scope: &mut Vec<String>,
        ordinary: &BTreeSet<String>,
        fp_locals: &mut Vec<(String, Span)>,
    ) -> Result<Expr, Error> {
        match e {
            Expr::Var(_, sp, n) => {
                let local = scope.iter().any(|s| s == n)
                    || ordinary.contains(n)
                    || self.analysis.globals.contains_key(n);
                if !local && !fp_locals.iter().any(|(m, _)| m == n) {
                    fp_locals.push((n.clone(), *sp));
                }
                Ok(e.clone())
            }
            Expr::Anon(id, sp) => {
                let name = self.fresh_var("f");
                fp_locals.push((name.clone(), *sp));
                Ok(Expr::Var(*id, *sp, name))
            }
            Expr::Con(..) | Expr::Lit(..) => Ok(e.clone()),
            Expr::App(id, f, a) => Ok(Expr::App(
                *id,
                Box::new(self.classify_funpat(f, scope, ordinary, fp_locals)?),
                Box::new(self.classify_funpat(a, scope, ordinary, fp_locals)?),
            )),
            Expr::Lambda(id, sp, ps, b) => {
                scope.extend(ps.iter().cloned());
                let b2 = self.classify_funpat(b, scope, ordinary, fp_locals)?;
                scope.truncate(scope.len() - ps.len());
                Ok(Expr::Lambda(*id, *sp, ps.clone(), Box::new(b2)))
            }
            Expr::Let(id, sp, n, e1, e2) => {
                let e1b = self.classify_funpat(e1, scope, ordinary, fp_locals)?;
                scope.push(n.clone());
                let e2b = self.classify_funpat(e2, scope, ordinary, fp_locals)?;
                scope.pop();
                Ok(Expr::Let(*id, *sp, n.clone(), Box::new(e1b), Box::new(e2b)))
            }
            Expr::FreeIn(id, sp, ns, b) => {
                scope.extend(ns.iter().cloned());
                let b2 = self.classify_funpat(b, scope, ordinary, fp_locals)?;
                scope.truncate(scope.len() - ns.len());
                Ok(Expr::FreeIn(*id, *sp, ns.clone(), Box::new(b2)))
            }
            Expr::Annot(id, sp, inner, t) => Ok(Expr::Annot(
                *id,
                *sp,
                Box::new(self.classify_funpat(inner, scope, ordinary, fp_locals)?),
                t.clone(),
            )),
        }
    }

    /// Collects variable names of the structural parts and validates
    /// constructor patterns.
    fn pattern_vars(&self, p: &Pattern, out: &mut Vec<String>) -> Result<(), Error> {
        match p {
            Pattern::Var(_, n) => {
                out.push(n.clone());
                Ok(())
            }
            Pattern::Lit(..) => Ok(()),
            Pattern::Con(sp, name, args) => {
                let arity = self
                    .analysis
                    .data
                    .con_arity(name)
                    .ok_or(TypeError::UnknownConstructor { span: *sp, name: name.clone() })?;
                if arity != args.len() {
                    return Err(TypeError::ConArity {
                        span: *sp,
                        con: name.clone(),
                        expected: arity,
                        found: args.len(),
                    }
                    .into());
                }
                for a in args {
                    self.pattern_vars(a, out)?;
                }
                Ok(())
            }
            Pattern::Fun(..) => Ok(()),
        }
    }

    /// Renames repeated variables left-to-right, outside-in, emitting one
    /// strict equation per repetition.
    fn linearize(&mut self, p: &mut Pattern, seen: &mut BTreeSet<String>, conjs: &mut Vec<Conj>) {
        match p {
            Pattern::Var(sp, n) => {
                if !seen.insert(n.clone()) {
                    let fresh = self.fresh_var("q");
                    conjs.push(Conj::NonLin { span: *sp, a: n.clone(), b: fresh.clone() });
                    *n = fresh;
                }
            }
            Pattern::Lit(..) | Pattern::Fun(..) => {}
            Pattern::Con(_, _, args) => {
                for a in args {
                    self.linearize(a, seen, conjs);
                }
            }
        }
    }

    fn elab_rule(&mut self, rule: &Rule) -> Result<ElabRule, Error> {
        // Names bound by the structural pattern parts.
        let mut ordinary_vars: Vec<String> = vec![];
        for p in &rule.params {
            self.pattern_vars(p, &mut ordinary_vars)?;
        }
        let ordinary: BTreeSet<String> = ordinary_vars.iter().cloned().collect();

        let mut params = rule.params.clone();
        let mut conjs: Vec<Conj> = vec![];
        let mut fp_locals: Vec<(String, Span)> = vec![];
        for p in &mut params {
            if let Pattern::Fun(sp, fp_expr) = p {
                let rewritten =
                    self.classify_funpat(fp_expr, &mut vec![], &ordinary, &mut fp_locals)?;
                let holder = self.fresh_var("p");
                conjs.push(Conj::Lazy { span: *sp, pat: rewritten, var: holder.clone() });
                *p = Pattern::Var(*sp, holder);
            }
        }

        let mut seen = BTreeSet::new();
        let mut nonlin: Vec<Conj> = vec![];
        for p in &mut params {
            self.linearize(p, &mut seen, &mut nonlin);
        }
        conjs.extend(nonlin);

        // All rule-local names must be distinct.
        let mut names: BTreeSet<&str> = seen.iter().map(|s| s.as_str()).collect();
        for (n, sp) in fp_locals.iter() {
            if !names.insert(n) {
                return Err(TypeError::DuplicateDefinition { span: *sp, name: n.clone() }.into());
            }
        }
        for (n, _) in &rule.wheres {
            if !names.insert(n) {
                return Err(
                    TypeError::DuplicateDefinition { span: rule.span, name: n.clone() }.into()
                );
            }
        }
        for n in &rule.frees {
            if !names.insert(n) {
                return Err(
                    TypeError::DuplicateDefinition { span: rule.span, name: n.clone() }.into()
                );
            }
        }

        if let Some(g) = &rule.guard {
            let g = self.desugar_anons(g);
            conjs.push(Conj::User(g));
        }
        let rhs = self.desugar_anons(&rule.rhs);
        let wheres: Vec<(String, Expr)> = rule
            .wheres
            .iter()
            .map(|(n, e)| (n.clone(), self.desugar_anons(e)))
            .collect();

        let mut frees: Vec<ElabFree> = rule
            .frees
            .iter()
            .map(|n| ElabFree { name: n.clone(), span: rule.span, from_funpat: false })
            .collect();
        frees.extend(
            fp_locals
                .into_iter()
                .map(|(name, span)| ElabFree { name, span, from_funpat: true }),
        );

        Ok(ElabRule { span: rule.span, params, conjs, rhs, wheres, frees })
    }

    fn elab_fun(&mut self, f: &FunDef, name: String, sig: Option<SigSpec>) -> Result<ElabFun, Error> {
        let arity = f.rules.first().map_or(0, |r| r.params.len());
        let rules: Vec<ElabRule> =
            f.rules.iter().map(|r| self.elab_rule(r)).collect::<Result<_, _>>()?;
        Ok(ElabFun { name, span: f.span, sig, arity, rules })
    }
}

/// The scheme an instance method implementation must have: the class
/// method's type at the instance head, qualified by the instance context.
pub fn instance_method_scheme(analysis: &Analysis, inst: &InstanceDecl, method: &str) -> TypeScheme {
    let class = &analysis.classes.classes[&inst.class];
    let mty = &class.methods.iter().find(|(m, _)| m == method).expect("validated").1;
    let n = inst.ty_args.len() as u32;
    let head = Type::Con(inst.ty_con.clone(), (0..n).map(Type::Var).collect());
    let body = mty.subst_params(std::slice::from_ref(&head));
    let inst_info = analysis.classes.instance(&inst.class, &inst.ty_con).expect("registered");
    TypeScheme {
        vars: (0..n).collect(),
        context: inst_info.context.iter().map(|(c, i)| (c.clone(), *i as u32)).collect(),
        body,
    }
}

pub fn elaborate(analysis: &Analysis, modules: &[&SourceModule]) -> Result<ElabModule, Error> {
    let mut max_id = 0u32;
    let mut track = |e: &Expr| max_id = max_id.max(e.max_node_id());
    for m in modules {
        for f in m.funs.iter().chain(m.instances.iter().flat_map(|i| i.methods.iter())) {
            for r in &f.rules {
                if let Some(g) = &r.guard {
                    track(g);
                }
                track(&r.rhs);
                for (_, e) in &r.wheres {
                    track(e);
                }
                for p in &r.params {
                    if let Pattern::Fun(_, e) = p {
                        track(e);
                    }
                }
            }
        }
    }

    let mut elab = Elab { analysis, next_id: max_id, next_var: 0 };
    let mut funs = vec![];
    for m in modules {
        for f in &m.funs {
            let sig = f.sig.clone().map(SigSpec::Surface);
            funs.push(elab.elab_fun(f, f.name.clone(), sig)?);
        }
        for inst in &m.instances {
            for f in &inst.methods {
                let scheme = instance_method_scheme(analysis, inst, &f.name);
                funs.push(elab.elab_fun(
                    f,
                    method_global(&f.name, &inst.ty_con),
                    Some(SigSpec::Scheme(scheme)),
                )?);
            }
        }
    }
    Ok(ElabModule { funs })
}

/// Anonymous-variable desugaring for goal expressions.
pub fn desugar_goal(analysis: &Analysis, goal: &Goal) -> Goal {
    let mut elab = Elab { analysis, next_id: goal.expr.max_node_id(), next_var: 0 };
    Goal { expr: elab.desugar_anons(&goal.expr), frees: goal.frees.clone() }
}
