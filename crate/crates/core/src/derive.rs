//! Code generation for derived instances and built-in operations.
//!
//! A derived `aValue` is a right-nested choice over the constructors, each
//! argument filled by the argument type's own generator. Derived equality
//! has one rule per constructor comparing componentwise, plus a catch-all
//! that yields False exactly when the two heads differ.

use crate::analyze::{method_global, Analysis};
use crate::ast::Lit;
use crate::core_ir::*;
use crate::types::{DataInfo, InstanceInfo, Type};
use std::collections::{BTreeMap, BTreeSet};

fn dict_var(j: usize) -> String {
    format!("d{j}")
}

/// Maps a type parameter index to the dictionary parameter holding its
/// instance, per the instance context.
fn param_dicts(inst: &InstanceInfo) -> BTreeMap<usize, String> {
    inst.context.iter().enumerate().map(|(j, (_, idx))| (*idx, dict_var(j))).collect()
}

/// Dictionary expression for a constructor argument type.
fn dict_of(analysis: &Analysis, class: &str, ty: &Type, params: &BTreeMap<usize, String>) -> CoreExpr {
    match ty {
        Type::Var(i) => CoreExpr::Var(params[&(*i as usize)].clone()),
        Type::Con(name, args) => {
            let inst = analysis.classes.instance(class, name).expect("checked derivable");
            let sub = inst
                .context
                .iter()
                .map(|(c, idx)| dict_of(analysis, c, &args[*idx], params))
                .collect();
            CoreExpr::MkDict(class.into(), name.clone(), sub)
        }
        Type::Fun(..) => unreachable!("functional arguments are rejected before codegen"),
    }
}

/// Instance-method call at a known argument type.
fn method_call(
    analysis: &Analysis,
    class: &str,
    method: &str,
    ty: &Type,
    params: &BTreeMap<usize, String>,
    args: Vec<CoreExpr>,
) -> CoreExpr {
    match ty {
        Type::Var(i) => {
            let d = CoreExpr::Var(params[&(*i as usize)].clone());
            CoreExpr::app(
                CoreExpr::Proj(Box::new(d), method.into(), crate::ast::Span::default()),
                args,
            )
        }
        Type::Con(name, targs) => {
            let inst = analysis.classes.instance(class, name).expect("checked derivable");
            let mut all: Vec<CoreExpr> = inst
                .context
                .iter()
                .map(|(c, idx)| dict_of(analysis, c, &targs[*idx], params))
                .collect();
            all.extend(args);
            CoreExpr::app(CoreExpr::Global(method_global(method, name)), all)
        }
        Type::Fun(..) => unreachable!("functional arguments are rejected before codegen"),
    }
}

fn avalue_fun(analysis: &Analysis, info: &DataInfo) -> CoreFun {
    let inst = analysis.classes.instance("Data", &info.name).expect("derived");
    let params = param_dicts(inst);
    let pats: Vec<CorePat> = (0..inst.context.len()).map(|j| CorePat::Var(dict_var(j))).collect();
    let mut alts: Vec<CoreExpr> = info
        .cons
        .iter()
        .map(|c| {
            let args: Vec<CoreExpr> = c
                .args
                .iter()
                .map(|a| method_call(analysis, "Data", "aValue", a, &params, vec![]))
                .collect();
            CoreExpr::app(CoreExpr::Con(c.name.clone()), args)
        })
        .collect();
    let body = {
        let last = alts.pop().expect("data types have constructors");
        alts.into_iter()
            .rev()
            .fold(last, |acc, alt| CoreExpr::Choice(Box::new(alt), Box::new(acc)))
    };
    CoreFun {
        name: method_global("aValue", &info.name),
        arity: inst.context.len(),
        imp: FunImpl::Rules(vec![std::rc::Rc::new(CoreRule {
            pats,
            body: std::rc::Rc::new(body),
            span: info.span,
        })]),
    }
}

/// Componentwise equality: one rule per constructor plus the mismatch rule.
fn eq_fun(analysis: &Analysis, info: &DataInfo, class: &str, method: &str) -> CoreFun {
    let inst = analysis.classes.instance(class, &info.name).expect("derived");
    let params = param_dicts(inst);
    let dict_pats: Vec<CorePat> = (0..inst.context.len()).map(|j| CorePat::Var(dict_var(j))).collect();
    let mut rules = vec![];
    for c in &info.cons {
        let xs: Vec<String> = (0..c.args.len()).map(|i| format!("x{i}")).collect();
        let ys: Vec<String> = (0..c.args.len()).map(|i| format!("y{i}")).collect();
        let mut pats = dict_pats.clone();
        pats.push(CorePat::Con(c.name.clone(), xs.iter().map(|x| CorePat::Var(x.clone())).collect()));
        pats.push(CorePat::Con(c.name.clone(), ys.iter().map(|y| CorePat::Var(y.clone())).collect()));
        let mut parts: Vec<CoreExpr> = c
            .args
            .iter()
            .zip(xs.iter().zip(ys.iter()))
            .map(|(a, (x, y))| {
                method_call(
                    analysis,
                    class,
                    method,
                    a,
                    &params,
                    vec![CoreExpr::Var(x.clone()), CoreExpr::Var(y.clone())],
                )
            })
            .collect();
        let body = match parts.pop() {
            None => CoreExpr::con_true(),
            Some(last) => parts
                .into_iter()
                .rev()
                .fold(last, |acc, p| CoreExpr::app(CoreExpr::Global("&&".into()), vec![p, acc])),
        };
        rules.push(std::rc::Rc::new(CoreRule { pats, body: std::rc::Rc::new(body), span: info.span }));
    }
    if info.cons.len() > 1 {
        let mut pats = dict_pats.clone();
        pats.push(CorePat::Var("x".into()));
        pats.push(CorePat::Var("y".into()));
        rules.push(std::rc::Rc::new(CoreRule {
            pats,
            body: std::rc::Rc::new(CoreExpr::app(
                CoreExpr::Global("mismatch#".into()),
                vec![CoreExpr::Var("x".into()), CoreExpr::Var("y".into())],
            )),
            span: info.span,
        }));
    }
    CoreFun {
        name: method_global(method, &info.name),
        arity: inst.context.len() + 2,
        imp: FunImpl::Rules(rules),
    }
}

/// `/=` in terms of `==` (or the reverse, for user instances that define
/// only one of them).
fn negated_eq_fun(name: String, other: String, n_dicts: usize) -> CoreFun {
    let mut pats: Vec<CorePat> = (0..n_dicts).map(|j| CorePat::Var(dict_var(j))).collect();
    pats.push(CorePat::Var("x".into()));
    pats.push(CorePat::Var("y".into()));
    let mut args: Vec<CoreExpr> = (0..n_dicts).map(|j| CoreExpr::Var(dict_var(j))).collect();
    args.push(CoreExpr::Var("x".into()));
    args.push(CoreExpr::Var("y".into()));
    let inner = CoreExpr::app(CoreExpr::Global(other), args);
    CoreFun {
        name,
        arity: n_dicts + 2,
        imp: FunImpl::Rules(vec![std::rc::Rc::new(CoreRule {
            pats,
            body: std::rc::Rc::new(CoreExpr::app(CoreExpr::Global("not".into()), vec![inner])),
            span: crate::ast::Span::default(),
        })]),
    }
}

fn prim(name: &str, arity: usize, p: Prim) -> CoreFun {
    CoreFun { name: name.into(), arity, imp: FunImpl::Prim(p) }
}

fn enum_avalue(name: String, enum_global: &str) -> CoreFun {
    CoreFun {
        name,
        arity: 0,
        imp: FunImpl::Rules(vec![std::rc::Rc::new(CoreRule {
            pats: vec![],
            body: std::rc::Rc::new(CoreExpr::app(CoreExpr::Global(enum_global.into()), vec![CoreExpr::Lit(Lit::Int(0))])),
            span: crate::ast::Span::default(),
        })]),
    }
}

/// All generated operations: built-in primitives, instances of the built-in
/// types, derived instances of the module's types, and defaulted methods of
/// user instances. `defined` lists the method globals the module implements.
pub fn codegen(analysis: &Analysis, defined: &BTreeSet<String>) -> Vec<CoreFun> {
    let mut out = vec![];
    out.push(prim("=:=", 2, Prim::Unify));
    out.push(prim("=:<=", 2, Prim::LazyUnify));
    out.push(prim("mismatch#", 2, Prim::ConMismatch));
    out.push(prim("enumInt#", 1, Prim::EnumInt));
    out.push(prim("enumChar#", 1, Prim::EnumChar));
    for (ty, eq_prim, enum_global) in
        [("Int", Prim::EqInt, "enumInt#"), ("Char", Prim::EqChar, "enumChar#")]
    {
        out.push(prim(&method_global("===", ty), 2, eq_prim));
        out.push(prim(&method_global("==", ty), 2, eq_prim));
        out.push(negated_eq_fun(method_global("/=", ty), method_global("==", ty), 0));
        out.push(enum_avalue(method_global("aValue", ty), enum_global));
    }

    let builtin: Vec<String> = crate::types::builtin_data().types.keys().cloned().collect();
    let mut derived: Vec<(String, &str)> = vec![];
    for b in &builtin {
        derived.push((b.clone(), "Eq"));
        derived.push((b.clone(), "Data"));
    }
    for t in &analysis.derived_eq {
        derived.push((t.clone(), "Eq"));
    }
    for t in &analysis.derived_data {
        derived.push((t.clone(), "Data"));
    }
    for (ty, class) in derived {
        let info = analysis.data.types[&ty].clone();
        if class == "Data" {
            out.push(avalue_fun(analysis, &info));
            out.push(eq_fun(analysis, &info, "Data", "==="));
        } else {
            out.push(eq_fun(analysis, &info, "Eq", "=="));
            let n = analysis.classes.instance("Eq", &ty).expect("derived").context.len();
            out.push(negated_eq_fun(method_global("/=", &ty), method_global("==", &ty), n));
        }
    }

    // Defaults for user Eq instances that gave only one direction.
    for inst in analysis.classes.instances.values() {
        if inst.derived || inst.class != "Eq" {
            continue;
        }
        let n = inst.context.len();
        let eq = method_global("==", &inst.ty_con);
        let ne = method_global("/=", &inst.ty_con);
        if !defined.contains(&eq) {
            out.push(negated_eq_fun(eq.clone(), ne.clone(), n));
        }
        if !defined.contains(&ne) {
            out.push(negated_eq_fun(ne, eq, n));
        }
    }
    out
}
