//! Hindley-Milner inference with class contexts and dictionary evidence.
//!
//! Constraints (`Want`s) accumulate while rule bodies are inferred. When a
//! binding group is finished they are discharged: against an instance, into
//! the function's own dictionary parameters, or reported as errors. Every
//! discharge leaves an `Evidence` tree that lowering turns into dictionary
//! expressions.

use crate::analyze::{check_type_expr, Analysis, GlobalKind};
use crate::ast::*;
use crate::elaborate::*;
use crate::error::{Error, TypeError};
use crate::types::*;
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    /// A dictionary parameter of the enclosing function.
    Param(String, TvId),
    /// An instance dictionary; `args` follow the instance context order.
    Inst { class: String, ty_con: String, args: Vec<Evidence> },
}

#[derive(Debug, Clone)]
pub struct DictParam {
    pub class: String,
    pub tv: TvId,
    pub name: String,
}

#[derive(Debug, Default)]
pub struct InferResult {
    /// Final scheme of every operation, prelude and module alike.
    pub schemes: BTreeMap<String, TypeScheme>,
    /// Dictionary parameters per operation, in context order.
    pub dict_params: BTreeMap<String, Vec<DictParam>>,
    /// Dictionary arguments demanded at each expression node.
    pub node_evidence: HashMap<NodeId, Vec<Evidence>>,
    /// Dictionary for each rule-level logic variable, when constructible:
    /// key is (function, rule index, variable).
    pub free_dicts: HashMap<(String, usize, String), Option<Evidence>>,
}

#[derive(Debug, Clone)]
struct Want {
    class: String,
    ty: Type,
    span: Span,
    origin: String,
}

#[derive(Clone)]
enum EnvEntry {
    Fun(TypeScheme),
    /// Monomorphic placeholder for a member of the binding group currently
    /// being inferred.
    Mono(Type),
}

struct ResolveCtx<'a> {
    /// (class, tv) pairs available as dictionary parameters.
    params: &'a [(String, TvId)],
    /// Skolem constructor name -> signature variable, for signed functions.
    skolems: Option<&'a BTreeMap<String, TvId>>,
    /// Goals report ambiguity differently from function bodies.
    goal: bool,
    item: &'a str,
}

pub struct Inferencer<'a> {
    analysis: &'a Analysis,
    env: BTreeMap<String, EnvEntry>,
    subst: Vec<Option<Type>>,
    wants: Vec<Want>,
    want_ev: Vec<Option<Evidence>>,
    node_wants: HashMap<NodeId, Vec<usize>>,
    /// Calls of same-group members: (call node, callee, caller).
    mono_calls: Vec<(NodeId, String, String)>,
    /// Want of each declared rule-level free variable.
    free_wants: HashMap<(String, usize, String), usize>,
    /// Type of each functional-pattern variable.
    funpat_types: HashMap<(String, usize, String), Type>,
    scope: Vec<(String, Type)>,
    current_fun: String,
}

fn unskolem(s: &str) -> String {
    s.replace('%', "")
}

impl<'a> Inferencer<'a> {
    pub fn new(analysis: &'a Analysis) -> Self {
        Inferencer {
            analysis,
            env: BTreeMap::new(),
            subst: vec![],
            wants: vec![],
            want_ev: vec![],
            node_wants: HashMap::new(),
            mono_calls: vec![],
            free_wants: HashMap::new(),
            funpat_types: HashMap::new(),
            scope: vec![],
            current_fun: String::new(),
        }
    }

    fn fresh(&mut self) -> Type {
        self.subst.push(None);
        Type::Var((self.subst.len() - 1) as TvId)
    }

    fn fresh_id(&mut self) -> TvId {
        self.subst.push(None);
        (self.subst.len() - 1) as TvId
    }

    /// Follows substitution links at the root.
    fn prune(&self, t: &Type) -> Type {
        let mut t = t.clone();
        while let Type::Var(v) = t {
            match self.subst.get(v as usize).and_then(|o| o.as_ref()) {
                Some(bound) => t = bound.clone(),
                None => return Type::Var(v),
            }
        }
        t
    }

    fn zonk(&self, t: &Type) -> Type {
        match self.prune(t) {
            Type::Var(v) => Type::Var(v),
            Type::Con(n, args) => Type::Con(n, args.iter().map(|a| self.zonk(a)).collect()),
            Type::Fun(a, b) => Type::fun(self.zonk(&a), self.zonk(&b)),
        }
    }

    fn occurs(&self, v: TvId, t: &Type) -> bool {
        match self.prune(t) {
            Type::Var(w) => w == v,
            Type::Con(_, args) => args.iter().any(|a| self.occurs(v, a)),
            Type::Fun(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
        }
    }

    fn shown_pair(&self, a: &Type, b: &Type) -> (String, String) {
        let mut namer = TvNamer::default();
        let sa = render_type(&self.zonk(a), &mut namer);
        let sb = render_type(&self.zonk(b), &mut namer);
        (unskolem(&sa), unskolem(&sb))
    }

    fn unify(&mut self, a: &Type, b: &Type, span: Span) -> Result<(), TypeError> {
        let pa = self.prune(a);
        let pb = self.prune(b);
        match (&pa, &pb) {
            (Type::Var(v), Type::Var(w)) if v == w => Ok(()),
            (Type::Var(v), _) => {
                if self.occurs(*v, &pb) {
                    let (sa, sb) = self.shown_pair(&pa, &pb);
                    return Err(TypeError::OccursCheck { span, var: sa, ty: sb });
                }
                self.subst[*v as usize] = Some(pb);
                Ok(())
            }
            (_, Type::Var(w)) => {
                if self.occurs(*w, &pa) {
                    let (sb, sa) = self.shown_pair(&pb, &pa);
                    return Err(TypeError::OccursCheck { span, var: sb, ty: sa });
                }
                self.subst[*w as usize] = Some(pa);
                Ok(())
            }
            (Type::Fun(a1, b1), Type::Fun(a2, b2)) => {
                self.unify(&a1.clone(), &a2.clone(), span)?;
                self.unify(&b1.clone(), &b2.clone(), span)
            }
            (Type::Con(n1, a1), Type::Con(n2, a2)) if n1 == n2 && a1.len() == a2.len() => {
                for (x, y) in a1.clone().iter().zip(a2.clone().iter()) {
                    self.unify(x, y, span)?;
                }
                Ok(())
            }
            _ => {
                let (sa, sb) = self.shown_pair(&pa, &pb);
                Err(TypeError::Unification { span, expected: sa, found: sb })
            }
        }
    }

    fn want(&mut self, class: &str, ty: Type, span: Span, origin: String) -> usize {
        self.wants.push(Want { class: class.into(), ty, span, origin });
        self.want_ev.push(None);
        self.wants.len() - 1
    }

    fn instantiate(&mut self, scheme: &TypeScheme, span: Span, origin: &str, node: NodeId) -> Type {
        let map: BTreeMap<TvId, Type> = scheme.vars.iter().map(|v| (*v, self.fresh())).collect();
        let mut ids = vec![];
        for (class, tv) in &scheme.context {
            let ty = map.get(tv).cloned().unwrap_or(Type::Var(*tv));
            ids.push(self.want(class, ty, span, origin.to_string()));
        }
        if !ids.is_empty() {
            self.node_wants.entry(node).or_default().extend(ids);
        }
        subst_scheme(&scheme.body, &map)
    }

    fn lookup_local(&self, name: &str) -> Option<Type> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone())
    }

    fn con_type(&mut self, span: Span, name: &str) -> Result<Type, TypeError> {
        let (info, con) = self
            .analysis
            .data
            .con(name)
            .ok_or(TypeError::UnknownConstructor { span, name: name.to_string() })?;
        let fresh: Vec<Type> = info.params.iter().map(|_| self.fresh()).collect();
        let result = Type::Con(info.name.clone(), fresh.clone());
        let mut t = result;
        for a in con.args.iter().rev() {
            t = Type::fun(a.subst_params(&fresh), t);
        }
        Ok(t)
    }

    pub fn infer_expr(&mut self, e: &Expr) -> Result<Type, TypeError> {
        match e {
            Expr::Lit(_, _, Lit::Int(_)) => Ok(Type::int()),
            Expr::Lit(_, _, Lit::Char(_)) => Ok(Type::char()),
            Expr::Anon(_, sp) => {
                // Elaboration rewrites `_`; tolerate a stray one.
                let t = self.fresh();
                self.want("Data", t.clone(), *sp, "`_`".into());
                Ok(t)
            }
            Expr::Con(_, sp, name) => self.con_type(*sp, name),
            Expr::Var(id, sp, name) => {
                if let Some(t) = self.lookup_local(name) {
                    return Ok(t);
                }
                match self.env.get(name).cloned() {
                    Some(EnvEntry::Fun(scheme)) => {
                        Ok(self.instantiate(&scheme, *sp, &format!("use of `{name}`"), *id))
                    }
                    Some(EnvEntry::Mono(t)) => {
                        self.mono_calls.push((*id, name.clone(), self.current_fun.clone()));
                        Ok(t)
                    }
                    None => {
                        if self.analysis.global_kind(name) == Some(GlobalKind::Method) {
                            let (class, mty) = self
                                .analysis
                                .classes
                                .method(name)
                                .map(|(c, t)| (c.to_string(), t.clone()))
                                .expect("method registered");
                            let beta = self.fresh();
                            let id_w =
                                self.want(&class, beta.clone(), *sp, format!("use of `{name}`"));
                            self.node_wants.entry(*id).or_default().push(id_w);
                            Ok(mty.subst_params(std::slice::from_ref(&beta)))
                        } else {
                            Err(TypeError::UnknownName {
                                span: *sp,
                                what: "identifier",
                                name: name.clone(),
                            })
                        }
                    }
                }
            }
            Expr::App(_, f, a) => {
                let tf = self.infer_expr(f)?;
                let ta = self.infer_expr(a)?;
                let beta = self.fresh();
                self.unify(&tf, &Type::fun(ta, beta.clone()), a.span())?;
                Ok(beta)
            }
            Expr::Lambda(_, _, params, body) => {
                let depth = self.scope.len();
                let mut tys = vec![];
                for p in params {
                    let t = self.fresh();
                    self.scope.push((p.clone(), t.clone()));
                    tys.push(t);
                }
                let tb = self.infer_expr(body);
                self.scope.truncate(depth);
                let tb = tb?;
                Ok(tys.into_iter().rev().fold(tb, |acc, t| Type::fun(t, acc)))
            }
            Expr::Let(_, _, name, bound, body) => {
                let tb = self.infer_expr(bound)?;
                self.scope.push((name.clone(), tb));
                let t = self.infer_expr(body);
                self.scope.pop();
                t
            }
            Expr::FreeIn(id, sp, names, body) => {
                let depth = self.scope.len();
                let mut ids = vec![];
                for n in names {
                    let t = self.fresh();
                    ids.push(self.want("Data", t.clone(), *sp, format!("free variable `{n}`")));
                    self.scope.push((n.clone(), t));
                }
                self.node_wants.entry(*id).or_default().extend(ids);
                let t = self.infer_expr(body);
                self.scope.truncate(depth);
                t
            }
            Expr::Annot(_, sp, inner, texpr) => {
                let t = self.conv_annot(texpr, *sp)?;
                let ti = self.infer_expr(inner)?;
                self.unify(&ti, &t, *sp)?;
                Ok(t)
            }
        }
    }

    /// Annotation types: variables become fresh unification variables,
    /// shared within the annotation.
    fn conv_annot(&mut self, te: &TypeExpr, span: Span) -> Result<Type, TypeError> {
        let mut names = BTreeSet::new();
        collect_tvars(te, &mut names);
        let params: BTreeSet<&str> = names.iter().map(|s| s.as_str()).collect();
        check_type_expr(te, span, &params, &self.analysis.data)?;
        let mut map = BTreeMap::new();
        for n in names {
            let t = self.fresh();
            map.insert(n, t);
        }
        Ok(conv_type(te, &map))
    }

    fn pat_type(&mut self, p: &Pattern) -> Result<Type, TypeError> {
        match p {
            Pattern::Var(_, n) => {
                let t = self.fresh();
                self.scope.push((n.clone(), t.clone()));
                Ok(t)
            }
            Pattern::Lit(_, Lit::Int(_)) => Ok(Type::int()),
            Pattern::Lit(_, Lit::Char(_)) => Ok(Type::char()),
            Pattern::Con(sp, name, args) => {
                let (info, con) = self
                    .analysis
                    .data
                    .con(name)
                    .ok_or(TypeError::UnknownConstructor { span: *sp, name: name.clone() })?;
                let info_name = info.name.clone();
                let con_args = con.args.clone();
                let n_params = info.params.len();
                let fresh: Vec<Type> = (0..n_params).map(|_| self.fresh()).collect();
                for (sub, arg_ty) in args.iter().zip(con_args.iter()) {
                    let tp = self.pat_type(sub)?;
                    self.unify(&tp, &arg_ty.subst_params(&fresh), *sp)?;
                }
                Ok(Type::Con(info_name, fresh))
            }
            Pattern::Fun(sp, _) => {
                // Elaboration replaces functional patterns before inference.
                Err(TypeError::KindError { span: *sp, message: "unexpected functional pattern".into() })
            }
        }
    }

    fn infer_rule(&mut self, f: &ElabFun, idx: usize, rule: &ElabRule, alpha: &Type) -> Result<(), TypeError> {
        let depth = self.scope.len();
        let result = self.infer_rule_inner(f, idx, rule, alpha);
        self.scope.truncate(depth);
        result
    }

    fn infer_rule_inner(
        &mut self,
        f: &ElabFun,
        idx: usize,
        rule: &ElabRule,
        alpha: &Type,
    ) -> Result<(), TypeError> {
        let mut param_tys = vec![];
        for p in &rule.params {
            param_tys.push(self.pat_type(p)?);
        }
        for fv in &rule.frees {
            let t = self.fresh();
            let key = (f.name.clone(), idx, fv.name.clone());
            if fv.from_funpat {
                self.funpat_types.insert(key, t.clone());
            } else {
                let w = self.want("Data", t.clone(), fv.span, format!("free variable `{}`", fv.name));
                self.free_wants.insert(key, w);
            }
            self.scope.push((fv.name.clone(), t));
        }
        // `where` bindings are monomorphic and mutually recursive.
        let mut where_tys = vec![];
        for (n, _) in &rule.wheres {
            let t = self.fresh();
            self.scope.push((n.clone(), t.clone()));
            where_tys.push(t);
        }
        for ((_, e), t) in rule.wheres.iter().zip(where_tys.iter()) {
            let te = self.infer_expr(e)?;
            self.unify(&te, t, rule.span)?;
        }
        for conj in &rule.conjs {
            match conj {
                Conj::Lazy { span, pat, var } => {
                    let tp = self.infer_expr(pat)?;
                    let tv = self.lookup_local(var).expect("holder in scope");
                    self.unify(&tp, &tv, *span)?;
                    self.want("Data", tp, *span, "functional pattern".into());
                }
                Conj::NonLin { span, a, b } => {
                    let ta = self.lookup_local(a).expect("pattern variable in scope");
                    let tb = self.lookup_local(b).expect("pattern variable in scope");
                    self.unify(&ta, &tb, *span)?;
                    self.want("Data", ta, *span, format!("repeated variable `{a}`"));
                }
                Conj::User(g) => {
                    let tg = self.infer_expr(g)?;
                    self.unify(&tg, &Type::bool(), g.span())?;
                }
            }
        }
        let tr = self.infer_expr(&rule.rhs)?;
        let rule_ty = param_tys.into_iter().rev().fold(tr, |acc, t| Type::fun(t, acc));
        self.unify(&rule_ty, alpha, rule.span)
    }

    /// The variable-level constraints a want turns into once instances
    /// decompose it: `Eq [a]` demands `Eq a`. These are what generalization
    /// must keep in the context for resolution to succeed.
    fn context_demands(&self, class: &str, ty: &Type, out: &mut Vec<(String, TvId)>) {
        match self.prune(ty) {
            Type::Var(v) => out.push((class.to_string(), v)),
            Type::Con(name, args) => {
                if let Some(inst) = self.analysis.classes.instance(class, &name) {
                    for (c, idx) in &inst.context {
                        if let Some(arg) = args.get(*idx) {
                            self.context_demands(c, arg, out);
                        }
                    }
                }
            }
            Type::Fun(..) => {}
        }
    }

    /// Discharges one constraint against the instance table.
    fn resolve(&mut self, class: &str, ty: &Type, span: Span, origin: &str, ctx: &ResolveCtx) -> Result<Evidence, TypeError> {
        match self.prune(ty) {
            Type::Var(v) => {
                if ctx.params.iter().any(|(c, w)| c == class && *w == v) {
                    Ok(Evidence::Param(class.into(), v))
                } else if ctx.goal {
                    let mut namer = TvNamer::default();
                    Err(TypeError::AmbiguousGoal {
                        class: class.into(),
                        ty: namer.name(v),
                    })
                } else {
                    Err(TypeError::AmbiguousContext {
                        span,
                        class: class.into(),
                        item: ctx.item.to_string(),
                    })
                }
            }
            Type::Fun(a, b) => {
                let mut namer = TvNamer::default();
                let shown = unskolem(&render_type(&self.zonk(&Type::Fun(a, b)), &mut namer));
                Err(TypeError::UnresolvedInstance {
                    span,
                    class: class.into(),
                    ty: shown,
                    origin: origin.to_string(),
                })
            }
            Type::Con(name, args) => {
                if let Some(sk) = name.strip_prefix('%') {
                    let tv = ctx
                        .skolems
                        .and_then(|m| m.get(&name).copied());
                    if let Some(tv) = tv {
                        if ctx.params.iter().any(|(c, w)| c == class && *w == tv) {
                            return Ok(Evidence::Param(class.into(), tv));
                        }
                    }
                    return Err(TypeError::UnresolvedInstance {
                        span,
                        class: class.into(),
                        ty: sk.to_string(),
                        origin: origin.to_string(),
                    });
                }
                let inst = match self.analysis.classes.instance(class, &name) {
                    Some(i) => i.clone(),
                    None => {
                        let mut namer = TvNamer::default();
                        let shown =
                            unskolem(&render_type(&self.zonk(&Type::Con(name, args)), &mut namer));
                        return Err(TypeError::UnresolvedInstance {
                            span,
                            class: class.into(),
                            ty: shown,
                            origin: origin.to_string(),
                        });
                    }
                };
                let mut sub = vec![];
                for (c, idx) in &inst.context {
                    sub.push(self.resolve(c, &args[*idx].clone(), span, origin, ctx)?);
                }
                Ok(Evidence::Inst { class: class.into(), ty_con: name, args: sub })
            }
        }
    }

    /// Dictionary for an arbitrary type, when every variable in it has a
    /// matching dictionary parameter. Used for functional-pattern variables,
    /// which carry no constraint of their own.
    fn evidence_of_type(&self, class: &str, ty: &Type, params: &[(String, TvId)]) -> Option<Evidence> {
        match self.prune(ty) {
            Type::Var(v) => params
                .iter()
                .any(|(c, w)| c == class && *w == v)
                .then(|| Evidence::Param(class.into(), v)),
            Type::Fun(..) => None,
            Type::Con(name, args) => {
                if name.starts_with('%') {
                    return None;
                }
                let inst = self.analysis.classes.instance(class, &name)?;
                let mut sub = vec![];
                for (c, idx) in inst.context.clone() {
                    sub.push(self.evidence_of_type(&c, &args[idx], params)?);
                }
                Some(Evidence::Inst { class: class.into(), ty_con: name, args: sub })
            }
        }
    }
}

fn subst_scheme(t: &Type, map: &BTreeMap<TvId, Type>) -> Type {
    match t {
        Type::Var(v) => map.get(v).cloned().unwrap_or(Type::Var(*v)),
        Type::Con(n, args) => Type::Con(n.clone(), args.iter().map(|a| subst_scheme(a, map)).collect()),
        Type::Fun(a, b) => Type::fun(subst_scheme(a, map), subst_scheme(b, map)),
    }
}

fn collect_tvars(te: &TypeExpr, out: &mut BTreeSet<String>) {
    match te {
        TypeExpr::Var(n) => {
            out.insert(n.clone());
        }
        TypeExpr::Con(_, args) => {
            for a in args {
                collect_tvars(a, out);
            }
        }
        TypeExpr::Fun(a, b) => {
            collect_tvars(a, out);
            collect_tvars(b, out);
        }
    }
}

fn conv_type(te: &TypeExpr, map: &BTreeMap<String, Type>) -> Type {
    match te {
        TypeExpr::Var(n) => map[n].clone(),
        TypeExpr::Con(name, args) => {
            Type::Con(name.clone(), args.iter().map(|a| conv_type(a, map)).collect())
        }
        TypeExpr::Fun(a, b) => Type::fun(conv_type(a, map), conv_type(b, map)),
    }
}

/// Context entries ordered by class name, then first occurrence of the
/// variable in the body. Dictionary parameters follow this order everywhere.
fn canonical_context(mut ctx: Vec<(String, TvId)>, body: &Type) -> Vec<(String, TvId)> {
    let mut order = vec![];
    body.vars(&mut order);
    ctx.sort_by_key(|(class, tv)| {
        let pos = order.iter().position(|v| v == tv).unwrap_or(usize::MAX);
        (class.clone(), pos, *tv)
    });
    ctx.dedup();
    ctx
}

fn dict_param_names(context: &[(String, TvId)], body: &Type) -> Vec<DictParam> {
    let mut namer = TvNamer::default();
    let mut order = vec![];
    body.vars(&mut order);
    for v in order {
        namer.name(v);
    }
    context
        .iter()
        .map(|(class, tv)| DictParam {
            class: class.clone(),
            tv: *tv,
            name: format!("$d{class}_{}", namer.name(*tv)),
        })
        .collect()
}

/// The scheme of the built-in unification operator.
fn unify_scheme() -> TypeScheme {
    TypeScheme {
        vars: vec![0],
        context: vec![("Data".into(), 0)],
        body: Type::fun(Type::Var(0), Type::fun(Type::Var(0), Type::bool())),
    }
}

struct SigInfo {
    scheme: TypeScheme,
    span: Span,
}

fn convert_sig(
    analysis: &Analysis,
    inf: &mut Inferencer,
    name: &str,
    sig: &SigExpr,
    span: Span,
) -> Result<TypeScheme, TypeError> {
    let mut names = BTreeSet::new();
    collect_tvars(&sig.body, &mut names);
    let mut ctx_names = BTreeSet::new();
    for c in &sig.context {
        collect_tvars(&c.ty, &mut ctx_names);
    }
    let all: BTreeSet<String> = names.union(&ctx_names).cloned().collect();
    let params: BTreeSet<&str> = all.iter().map(|s| s.as_str()).collect();
    check_type_expr(&sig.body, span, &params, &analysis.data)?;
    let mut map = BTreeMap::new();
    for n in &all {
        map.insert(n.clone(), Type::Var(inf.fresh_id()));
    }
    let body = conv_type(&sig.body, &map);
    let mut context = vec![];
    for c in &sig.context {
        if !analysis.classes.classes.contains_key(&c.class) {
            return Err(TypeError::UnknownClass { span, name: c.class.clone() });
        }
        let tv_name = match &c.ty {
            TypeExpr::Var(n) => n,
            _ => {
                return Err(TypeError::BadInstanceHead {
                    span,
                    message: format!("constraints in the signature of `{name}` must be on type variables"),
                })
            }
        };
        if !names.contains(tv_name) {
            return Err(TypeError::AmbiguousContext {
                span,
                class: c.class.clone(),
                item: name.to_string(),
            });
        }
        let Type::Var(tv) = map[tv_name] else { unreachable!() };
        context.push((c.class.clone(), tv));
    }
    let context = canonical_context(context, &body);
    let mut vars = vec![];
    body.vars(&mut vars);
    Ok(TypeScheme { vars, context, body })
}

/// One-way match of an inferred type against a (skolemized) signature type.
enum SigErr {
    TooGeneral,
    Shape,
}

fn match_sig(inf: &mut Inferencer, got: &Type, sig: &Type) -> Result<(), SigErr> {
    let pg = inf.prune(got);
    match (&pg, sig) {
        (Type::Var(v), _) => {
            inf.subst[*v as usize] = Some(sig.clone());
            Ok(())
        }
        (Type::Con(n1, a1), Type::Con(n2, a2)) if n1 == n2 && a1.len() == a2.len() => {
            for (x, y) in a1.clone().iter().zip(a2.iter()) {
                match_sig(inf, x, y)?;
            }
            Ok(())
        }
        (_, Type::Con(n, _)) if n.starts_with('%') => Err(SigErr::TooGeneral),
        (Type::Fun(a1, b1), Type::Fun(a2, b2)) => {
            match_sig(inf, a1, a2)?;
            match_sig(inf, &b1.clone(), b2)
        }
        _ => Err(SigErr::Shape),
    }
}

fn fun_names_in_rule(rule: &ElabRule, out: &mut BTreeSet<String>) {
    let mut visit = |e: &Expr| {
        e.walk(&mut |x| {
            if let Expr::Var(_, _, n) = x {
                out.insert(n.clone());
            }
        })
    };
    for c in &rule.conjs {
        match c {
            Conj::Lazy { pat, .. } => visit(pat),
            Conj::User(g) => visit(g),
            Conj::NonLin { .. } => {}
        }
    }
    visit(&rule.rhs);
    for (_, e) in &rule.wheres {
        visit(e);
    }
}

/// Strongly connected components of the call graph, callees first.
fn sccs(funs: &[&ElabFun], edges: &BTreeMap<String, BTreeSet<String>>) -> Vec<Vec<String>> {
    struct St<'b> {
        edges: &'b BTreeMap<String, BTreeSet<String>>,
        index: BTreeMap<String, usize>,
        low: BTreeMap<String, usize>,
        on: BTreeSet<String>,
        stack: Vec<String>,
        next: usize,
        out: Vec<Vec<String>>,
    }
    fn go(st: &mut St, v: &str) {
        st.index.insert(v.into(), st.next);
        st.low.insert(v.into(), st.next);
        st.next += 1;
        st.stack.push(v.into());
        st.on.insert(v.into());
        let succs: Vec<String> = st.edges.get(v).map(|s| s.iter().cloned().collect()).unwrap_or_default();
        for w in succs {
            if !st.index.contains_key(&w) {
                go(st, &w);
                let lw = st.low[&w];
                let lv = st.low[v];
                st.low.insert(v.into(), lv.min(lw));
            } else if st.on.contains(&w) {
                let iw = st.index[&w];
                let lv = st.low[v];
                st.low.insert(v.into(), lv.min(iw));
            }
        }
        if st.low[v] == st.index[v] {
            let mut comp = vec![];
            loop {
                let w = st.stack.pop().unwrap();
                st.on.remove(&w);
                let done = w == v;
                comp.push(w);
                if done {
                    break;
                }
            }
            st.out.push(comp);
        }
    }
    let mut st = St {
        edges,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        on: BTreeSet::new(),
        stack: vec![],
        next: 0,
        out: vec![],
    };
    for f in funs {
        if !st.index.contains_key(&f.name) {
            go(&mut st, &f.name);
        }
    }
    st.out
}

pub fn infer_module(analysis: &Analysis, elab: &ElabModule) -> Result<InferResult, Error> {
    let mut inf = Inferencer::new(analysis);
    let mut result = InferResult::default();

    result.schemes.insert("=:=".into(), unify_scheme());
    result.dict_params.insert("=:=".into(), vec![]);
    inf.env.insert("=:=".into(), EnvEntry::Fun(unify_scheme()));

    // Seed all declared signatures.
    let mut sigs: BTreeMap<String, SigInfo> = BTreeMap::new();
    for f in &elab.funs {
        match &f.sig {
            Some(SigSpec::Surface(s)) => {
                let scheme = convert_sig(analysis, &mut inf, &f.name, s, f.span).map_err(Error::Type)?;
                inf.env.insert(f.name.clone(), EnvEntry::Fun(scheme.clone()));
                sigs.insert(f.name.clone(), SigInfo { scheme, span: f.span });
            }
            Some(SigSpec::Scheme(scheme)) => {
                // Re-number the prebuilt scheme into fresh variable ids.
                let map: BTreeMap<TvId, Type> =
                    scheme.vars.iter().map(|v| (*v, Type::Var(inf.fresh_id()))).collect();
                let body = subst_scheme(&scheme.body, &map);
                let context = scheme
                    .context
                    .iter()
                    .map(|(c, v)| {
                        let Type::Var(w) = map[v] else { unreachable!() };
                        (c.clone(), w)
                    })
                    .collect();
                let mut vars = vec![];
                body.vars(&mut vars);
                let scheme = TypeScheme { vars, context: canonical_context(context, &body), body };
                inf.env.insert(f.name.clone(), EnvEntry::Fun(scheme.clone()));
                sigs.insert(f.name.clone(), SigInfo { scheme, span: f.span });
            }
            None => {}
        }
    }

    // Call graph over unsigned functions.
    let unsigned: Vec<&ElabFun> = elab.funs.iter().filter(|f| f.sig.is_none()).collect();
    let unsigned_names: BTreeSet<String> = unsigned.iter().map(|f| f.name.clone()).collect();
    let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for f in &unsigned {
        let mut used = BTreeSet::new();
        for r in &f.rules {
            fun_names_in_rule(r, &mut used);
        }
        edges.insert(
            f.name.clone(),
            used.intersection(&unsigned_names).cloned().collect(),
        );
    }
    let by_name: BTreeMap<&str, &ElabFun> = elab.funs.iter().map(|f| (f.name.as_str(), f)).collect();

    for comp in sccs(&unsigned, &edges) {
        infer_group(&mut inf, &comp, &by_name, &mut result)?;
    }

    // Signed functions, each on its own; signatures break recursion.
    for f in &elab.funs {
        if let Some(si) = sigs.get(&f.name) {
            let scheme = si.scheme.clone();
            let span = si.span;
            infer_signed(&mut inf, f, &scheme, span, &mut result)?;
        }
    }
    Ok(result)
}

fn drain_range(inf: &mut Inferencer, from: usize) -> Vec<(usize, Want)> {
    (from..inf.wants.len()).map(|i| (i, inf.wants[i].clone())).collect()
}

fn infer_group(
    inf: &mut Inferencer,
    comp: &[String],
    by_name: &BTreeMap<&str, &ElabFun>,
    result: &mut InferResult,
) -> Result<(), Error> {
    let members: Vec<&ElabFun> = comp.iter().map(|n| by_name[n.as_str()]).collect();
    let mut alphas: BTreeMap<String, Type> = BTreeMap::new();
    for m in &members {
        let a = inf.fresh();
        alphas.insert(m.name.clone(), a.clone());
        inf.env.insert(m.name.clone(), EnvEntry::Mono(a));
    }
    let want_start = inf.wants.len();
    let mono_start = inf.mono_calls.len();
    let mut member_ranges: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for m in &members {
        inf.current_fun = m.name.clone();
        let start = inf.wants.len();
        for (idx, rule) in m.rules.iter().enumerate() {
            inf.infer_rule(m, idx, rule, &alphas[&m.name]).map_err(Error::Type)?;
        }
        member_ranges.insert(m.name.clone(), (start, inf.wants.len()));
    }

    // Generalize: each member quantifies the variables of its own type and
    // carries the group constraints that mention them.
    let mut deferred: Vec<(String, TvId)> = vec![];
    for (_, w) in drain_range(inf, want_start) {
        inf.context_demands(&w.class, &w.ty, &mut deferred);
    }
    let mut contexts: BTreeMap<String, Vec<(String, TvId)>> = BTreeMap::new();
    for m in &members {
        let body = inf.zonk(&alphas[&m.name]);
        let mut vars = vec![];
        body.vars(&mut vars);
        let ctx: Vec<(String, TvId)> = deferred
            .iter()
            .filter(|(_, v)| vars.contains(v))
            .cloned()
            .collect();
        let ctx = canonical_context(ctx, &body);
        let scheme = TypeScheme { vars, context: ctx.clone(), body: body.clone() };
        result.dict_params.insert(m.name.clone(), dict_param_names(&ctx, &body));
        result.schemes.insert(m.name.clone(), scheme);
        contexts.insert(m.name.clone(), ctx);
    }

    // Discharge every constraint of the group.
    for m in &members {
        let (ws, we) = member_ranges[&m.name];
        let ctx = ResolveCtx {
            params: &contexts[&m.name],
            skolems: None,
            goal: false,
            item: &m.name,
        };
        for i in ws..we {
            let w = inf.wants[i].clone();
            let ty = inf.zonk(&w.ty);
            let ev = inf.resolve(&w.class, &ty, w.span, &w.origin, &ctx).map_err(Error::Type)?;
            inf.want_ev[i] = Some(ev);
        }
    }

    // Calls between members: pass the caller's own dictionaries through.
    for (node, callee, caller) in inf.mono_calls.split_off(mono_start) {
        let callee_ctx = contexts[&callee].clone();
        let caller_ctx = &contexts[&caller];
        let mut evs = vec![];
        for (class, tv) in callee_ctx {
            if caller_ctx.iter().any(|(c, v)| *c == class && *v == tv) {
                evs.push(Evidence::Param(class, tv));
            } else {
                return Err(TypeError::AmbiguousContext {
                    span: by_name[callee.as_str()].span,
                    class,
                    item: caller.clone(),
                }
                .into());
            }
        }
        result.node_evidence.insert(node, evs);
    }

    finish_member_evidence(inf, &contexts, result);

    for m in &members {
        let scheme = result.schemes[&m.name].clone();
        inf.env.insert(m.name.clone(), EnvEntry::Fun(scheme));
    }
    Ok(())
}

fn infer_signed(
    inf: &mut Inferencer,
    f: &ElabFun,
    scheme: &TypeScheme,
    span: Span,
    result: &mut InferResult,
) -> Result<(), Error> {
    let want_start = inf.wants.len();
    inf.current_fun = f.name.clone();
    let alpha = inf.fresh();
    for (idx, rule) in f.rules.iter().enumerate() {
        inf.infer_rule(f, idx, rule, &alpha).map_err(Error::Type)?;
    }

    // Skolemize the signature and match the inferred type against it.
    let mut namer = TvNamer::default();
    let mut order = vec![];
    scheme.body.vars(&mut order);
    let mut sk_map: BTreeMap<TvId, Type> = BTreeMap::new();
    let mut sk_names: BTreeMap<String, TvId> = BTreeMap::new();
    for v in scheme.vars.iter() {
        let n = format!("%{}", namer.name(*v));
        sk_map.insert(*v, Type::Con(n.clone(), vec![]));
        sk_names.insert(n, *v);
    }
    let sk_body = subst_scheme(&scheme.body, &sk_map);
    if !f.rules.is_empty() {
        if let Err(e) = match_sig(inf, &alpha.clone(), &sk_body) {
            let declared = scheme.render();
            let inferred = {
                let mut nm = TvNamer::default();
                unskolem(&render_type(&inf.zonk(&alpha), &mut nm))
            };
            return Err(match e {
                SigErr::TooGeneral => TypeError::SignatureTooGeneral {
                    span,
                    name: f.name.clone(),
                    declared,
                    inferred,
                },
                SigErr::Shape => TypeError::SignatureMismatch {
                    span,
                    name: f.name.clone(),
                    declared,
                    inferred,
                },
            }
            .into());
        }
    }

    let ctx = ResolveCtx {
        params: &scheme.context,
        skolems: Some(&sk_names),
        goal: false,
        item: &f.name,
    };
    for i in want_start..inf.wants.len() {
        let w = inf.wants[i].clone();
        let ty = inf.zonk(&w.ty);
        let ev = inf.resolve(&w.class, &ty, w.span, &w.origin, &ctx).map_err(Error::Type)?;
        inf.want_ev[i] = Some(ev);
    }

    let contexts: BTreeMap<String, Vec<(String, TvId)>> =
        [(f.name.clone(), scheme.context.clone())].into_iter().collect();
    finish_member_evidence(inf, &contexts, result);

    result.dict_params.insert(f.name.clone(), dict_param_names(&scheme.context, &scheme.body));
    result.schemes.insert(f.name.clone(), scheme.clone());
    Ok(())
}

/// Moves resolved evidence into the result maps: per-node dictionary
/// arguments and per-rule logic-variable dictionaries.
fn finish_member_evidence(
    inf: &mut Inferencer,
    contexts: &BTreeMap<String, Vec<(String, TvId)>>,
    result: &mut InferResult,
) {
    let node_wants = std::mem::take(&mut inf.node_wants);
    for (node, ids) in node_wants {
        let evs: Vec<Evidence> = ids
            .iter()
            .map(|i| inf.want_ev[*i].clone().expect("resolved"))
            .collect();
        result.node_evidence.insert(node, evs);
    }
    let free_wants = std::mem::take(&mut inf.free_wants);
    for (key, wid) in free_wants {
        result.free_dicts.insert(key, inf.want_ev[wid].clone());
    }
    let funpat_types = std::mem::take(&mut inf.funpat_types);
    for ((fun, idx, name), ty) in funpat_types {
        let ctx = &contexts[&fun];
        let ty = inf.zonk(&ty);
        let ev = inf.evidence_of_type("Data", &ty, ctx);
        result.free_dicts.insert((fun, idx, name), ev);
    }
}

/// Result of typing a goal expression.
#[derive(Debug)]
pub struct GoalTyping {
    pub rendered: String,
    pub node_evidence: HashMap<NodeId, Vec<Evidence>>,
}

/// Types a goal. With `for_eval` every constraint must be discharged by an
/// instance; otherwise (`:type`) leftover constraints are displayed.
pub fn infer_goal(
    analysis: &Analysis,
    schemes: &BTreeMap<String, TypeScheme>,
    expr: &Expr,
    for_eval: bool,
) -> Result<GoalTyping, Error> {
    let mut inf = Inferencer::new(analysis);
    for (n, s) in schemes {
        inf.env.insert(n.clone(), EnvEntry::Fun(s.clone()));
    }
    inf.current_fun = "goal".into();
    let ty = inf.infer_expr(expr).map_err(Error::Type)?;

    if for_eval {
        let empty: Vec<(String, TvId)> = vec![];
        let ctx = ResolveCtx { params: &empty, skolems: None, goal: true, item: "goal" };
        for i in 0..inf.wants.len() {
            let w = inf.wants[i].clone();
            let t = inf.zonk(&w.ty);
            let ev = inf.resolve(&w.class, &t, w.span, &w.origin, &ctx).map_err(Error::Type)?;
            inf.want_ev[i] = Some(ev);
        }
    }

    let body = inf.zonk(&ty);
    let mut vars = vec![];
    body.vars(&mut vars);
    let mut context: Vec<(String, TvId)> = vec![];
    if !for_eval {
        // Constraints on variables stay in the displayed context; anything
        // ground must still be satisfiable.
        let mut all: Vec<(String, TvId)> = vec![];
        for w in inf.wants.clone() {
            inf.context_demands(&w.class, &w.ty, &mut all);
        }
        let ctx = ResolveCtx { params: &all, skolems: None, goal: true, item: "goal" };
        for w in inf.wants.clone() {
            let t = inf.zonk(&w.ty);
            inf.resolve(&w.class, &t, w.span, &w.origin, &ctx).map_err(Error::Type)?;
        }
        context = canonical_context(all, &body);
        context.retain(|(_, v)| vars.contains(v));
    }
    let rendered = TypeScheme { vars, context, body }.render();

    let mut node_evidence = HashMap::new();
    if for_eval {
        let node_wants = std::mem::take(&mut inf.node_wants);
        for (node, ids) in node_wants {
            let evs: Vec<Evidence> =
                ids.iter().map(|i| inf.want_ev[*i].clone().expect("resolved")).collect();
            node_evidence.insert(node, evs);
        }
    }
    Ok(GoalTyping { rendered, node_evidence })
}
