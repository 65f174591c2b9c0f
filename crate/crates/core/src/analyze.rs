//! Module-level validation: data declarations, instances, deriving checks
//! and the table of global names.

use crate::ast::*;
use crate::error::{Error, TypeError};
use crate::types::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlobalKind {
    Fun,
    Method,
}

#[derive(Debug)]
pub struct Analysis {
    pub data: DataTable,
    pub classes: ClassEnv,
    /// Source-visible function and method names.
    pub globals: BTreeMap<String, GlobalKind>,
    /// Module types with `deriving Data` / `deriving Eq`, in declaration order.
    pub derived_data: Vec<String>,
    pub derived_eq: Vec<String>,
}

impl Analysis {
    pub fn global_kind(&self, name: &str) -> Option<GlobalKind> {
        self.globals.get(name).copied()
    }
}

/// Method implementation globals are named `method@tycon`; the `@` keeps them
/// out of the source namespace.
pub fn method_global(method: &str, ty_con: &str) -> String {
    format!("{method}@{ty_con}")
}

/// Validates a type expression against the table; `span` locates errors at
/// the enclosing declaration.
pub fn check_type_expr(
    te: &TypeExpr,
    span: Span,
    params: &BTreeSet<&str>,
    data: &DataTable,
) -> Result<(), TypeError> {
    match te {
        TypeExpr::Var(n) => {
            if params.contains(n.as_str()) {
                Ok(())
            } else {
                Err(TypeError::UnknownName { span, what: "type variable", name: n.clone() })
            }
        }
        TypeExpr::Con(name, args) => {
            let arity = data
                .tycon_arity(name)
                .ok_or_else(|| TypeError::UnknownName { span, what: "type", name: name.clone() })?;
            if arity != args.len() {
                return Err(TypeError::KindError {
                    span,
                    message: format!("{name} expects {arity} type argument(s), got {}", args.len()),
                });
            }
            for a in args {
                check_type_expr(a, span, params, data)?;
            }
            Ok(())
        }
        TypeExpr::Fun(a, b) => {
            check_type_expr(a, span, params, data)?;
            check_type_expr(b, span, params, data)
        }
    }
}

/// Converts a constructor argument type; `Type::Var(i)` is the i-th parameter.
fn conv_con_arg(te: &TypeExpr, params: &[String]) -> Type {
    match te {
        TypeExpr::Var(n) => {
            let i = params.iter().position(|p| p == n).expect("checked");
            Type::Var(i as u32)
        }
        TypeExpr::Con(name, args) => {
            Type::Con(name.clone(), args.iter().map(|a| conv_con_arg(a, params)).collect())
        }
        TypeExpr::Fun(a, b) => Type::fun(conv_con_arg(a, params), conv_con_arg(b, params)),
    }
}

/// Whether `ty` admits a derived instance of `class`, given the set of type
/// constructors that have (or are getting) one. Functional arguments never do.
fn instance_reachable(ty: &Type, class_having: &BTreeSet<String>) -> Result<(), String> {
    match ty {
        Type::Var(_) => Ok(()),
        Type::Fun(..) => Err("functional".into()),
        Type::Con(name, args) => {
            if !class_having.contains(name) {
                return Err(name.clone());
            }
            for a in args {
                instance_reachable(a, class_having)?;
            }
            Ok(())
        }
    }
}

fn check_deriving(
    class: &str,
    info: &DataInfo,
    having: &BTreeSet<String>,
) -> Result<(), TypeError> {
    for con in &info.cons {
        for arg in &con.args {
            if let Err(what) = instance_reachable(arg, having) {
                let mut namer = TvNamer::default();
                for (i, _) in info.params.iter().enumerate() {
                    namer.name(i as u32);
                }
                let shown = render_type(arg, &mut namer);
                let detail = if what == "functional" {
                    format!("constructor {} has a functional argument ({shown})", con.name)
                } else {
                    format!("argument {shown} of constructor {} has no {class} instance", con.name)
                };
                return Err(TypeError::Derive {
                    span: con.span,
                    message: format!("cannot derive {class} for {}: {detail}", info.name),
                });
            }
        }
    }
    Ok(())
}

/// Instance context of a derived instance: one constraint per type parameter
/// that occurs in some constructor argument.
pub fn derived_context(class: &str, info: &DataInfo) -> Vec<(String, usize)> {
    let mut used: Vec<TvId> = vec![];
    for c in &info.cons {
        for a in &c.args {
            a.vars(&mut used);
        }
    }
    let mut idxs: Vec<usize> = used.into_iter().map(|v| v as usize).collect();
    idxs.sort_unstable();
    idxs.into_iter().map(|i| (class.to_string(), i)).collect()
}

fn install_prim_instances(classes: &mut ClassEnv) {
    for ty in ["Int", "Char"] {
        for class in ["Eq", "Data"] {
            let methods: BTreeMap<String, String> = classes.classes[class]
                .methods
                .iter()
                .map(|(m, _)| (m.clone(), method_global(m, ty)))
                .collect();
            classes.add_instance(InstanceInfo {
                class: class.into(),
                ty_con: ty.into(),
                context: vec![],
                derived: true,
                methods,
                span: Span::default(),
            });
        }
    }
}

fn install_derived_instance(classes: &mut ClassEnv, class: &str, info: &DataInfo) {
    let methods: BTreeMap<String, String> = classes.classes[class]
        .methods
        .iter()
        .map(|(m, _)| (m.clone(), method_global(m, &info.name)))
        .collect();
    classes.add_instance(InstanceInfo {
        class: class.into(),
        ty_con: info.name.clone(),
        context: derived_context(class, info),
        derived: true,
        methods,
        span: info.span,
    });
}

pub fn analyze(modules: &[&SourceModule], auto_data: bool) -> Result<Analysis, Error> {
    let mut data = builtin_data();
    let mut classes = builtin_classes();
    install_prim_instances(&mut classes);
    // Built-in structural types come with both instances derived.
    let builtin_names: Vec<String> = data.types.keys().cloned().collect();
    for name in &builtin_names {
        let info = data.types[name].clone();
        install_derived_instance(&mut classes, "Eq", &info);
        install_derived_instance(&mut classes, "Data", &info);
    }

    // First pass: register all data declarations so mutually recursive
    // types and forward references resolve.
    let mut decls: Vec<(&DataDecl, DataInfo)> = vec![];
    for m in modules {
        for d in &m.data {
            if data.tycon_arity(&d.name).is_some() {
                return Err(TypeError::DuplicateDefinition {
                    span: d.span,
                    name: format!("type {}", d.name),
                }
                .into());
            }
            let mut seen = BTreeSet::new();
            for p in &d.params {
                if !seen.insert(p.as_str()) {
                    return Err(TypeError::DuplicateDefinition {
                        span: d.span,
                        name: format!("type parameter {p}"),
                    }
                    .into());
                }
            }
            let placeholder = DataInfo {
                name: d.name.clone(),
                params: d.params.clone(),
                cons: vec![],
                span: d.span,
            };
            data.types.insert(d.name.clone(), placeholder.clone());
            decls.push((d, placeholder));
        }
    }
    // Second pass: constructors, with every type name now in scope.
    for (d, info) in &mut decls {
        let params: BTreeSet<&str> = d.params.iter().map(|s| s.as_str()).collect();
        for c in &d.cons {
            if data.con_owner.contains_key(&c.name) {
                return Err(TypeError::DuplicateDefinition {
                    span: c.span,
                    name: format!("constructor {}", c.name),
                }
                .into());
            }
            for a in &c.args {
                check_type_expr(a, c.span, &params, &data).map_err(Error::Type)?;
            }
            let ci = ConInfo {
                name: c.name.clone(),
                args: c.args.iter().map(|a| conv_con_arg(a, &d.params)).collect(),
                span: c.span,
            };
            info.cons.push(ci);
            data.con_owner.insert(c.name.clone(), d.name.clone());
        }
        data.types.insert(info.name.clone(), info.clone());
    }

    // Deriving: collect the eventual instance sets, then check reachability.
    let mut derived_data: Vec<String> = vec![];
    let mut derived_eq: Vec<String> = vec![];
    let mut having_data: BTreeSet<String> = classes
        .instances
        .keys()
        .filter(|(c, _)| c == "Data")
        .map(|(_, t)| t.clone())
        .collect();
    let mut having_eq: BTreeSet<String> = classes
        .instances
        .keys()
        .filter(|(c, _)| c == "Eq")
        .map(|(_, t)| t.clone())
        .collect();
    for m in modules {
        for d in &m.data {
            for class in &d.deriving {
                match class.as_str() {
                    "Data" => having_data.insert(d.name.clone()),
                    "Eq" => having_eq.insert(d.name.clone()),
                    other => {
                        return Err(TypeError::UnknownClass { span: d.span, name: other.to_string() }.into())
                    }
                };
            }
        }
        // User Eq instances also satisfy reachability for derived Eq.
        for inst in &m.instances {
            if inst.class == "Eq" {
                having_eq.insert(inst.ty_con.clone());
            }
        }
    }
    // Auto mode: every declared type gets Data when derivable. Optimistic
    // fixpoint so mutually recursive types qualify together.
    let mut auto_set: BTreeSet<String> = BTreeSet::new();
    if auto_data {
        for m in modules {
            for d in &m.data {
                if !having_data.contains(&d.name) {
                    auto_set.insert(d.name.clone());
                    having_data.insert(d.name.clone());
                }
            }
        }
        loop {
            let mut dropped = false;
            for t in auto_set.clone() {
                let info = data.types[&t].clone();
                if check_deriving("Data", &info, &having_data).is_err() {
                    auto_set.remove(&t);
                    having_data.remove(&t);
                    dropped = true;
                }
            }
            if !dropped {
                break;
            }
        }
    }

    for m in modules {
        for d in &m.data {
            let info = data.types[&d.name].clone();
            for class in &d.deriving {
                let having = if class == "Data" { &having_data } else { &having_eq };
                check_deriving(class, &info, having).map_err(Error::Type)?;
                if classes.instance(class, &d.name).is_some() {
                    return Err(TypeError::DuplicateInstance {
                        span: d.span,
                        class: class.clone(),
                        ty: d.name.clone(),
                    }
                    .into());
                }
                install_derived_instance(&mut classes, class, &info);
                if class == "Data" {
                    derived_data.push(d.name.clone());
                } else {
                    derived_eq.push(d.name.clone());
                }
            }
        }
    }
    for m in modules {
        for d in &m.data {
            if auto_set.contains(&d.name) && classes.instance("Data", &d.name).is_none() {
                let info = data.types[&d.name].clone();
                install_derived_instance(&mut classes, "Data", &info);
                derived_data.push(d.name.clone());
            }
        }
    }

    // Instances.
    for m in modules {
        for inst in &m.instances {
            if inst.class == "Data" {
                let shown = if inst.ty_args.is_empty() {
                    inst.ty_con.clone()
                } else {
                    format!("({} {})", inst.ty_con, inst.ty_args.join(" "))
                };
                return Err(TypeError::UserDataInstance { span: inst.span, ty: shown }.into());
            }
            let class_info = classes
                .classes
                .get(&inst.class)
                .ok_or(TypeError::UnknownClass { span: inst.span, name: inst.class.clone() })?
                .clone();
            let arity = data
                .tycon_arity(&inst.ty_con)
                .ok_or_else(|| TypeError::UnknownName {
                    span: inst.span,
                    what: "type",
                    name: inst.ty_con.clone(),
                })?;
            if arity != inst.ty_args.len() {
                return Err(TypeError::KindError {
                    span: inst.span,
                    message: format!(
                        "{} expects {arity} type argument(s), got {}",
                        inst.ty_con,
                        inst.ty_args.len()
                    ),
                }
                .into());
            }
            let mut seen = BTreeSet::new();
            for a in &inst.ty_args {
                if !seen.insert(a.as_str()) {
                    return Err(TypeError::BadInstanceHead {
                        span: inst.span,
                        message: format!("repeated type variable {a} in instance head"),
                    }
                    .into());
                }
            }
            if classes.instance(&inst.class, &inst.ty_con).is_some() {
                return Err(TypeError::DuplicateInstance {
                    span: inst.span,
                    class: inst.class.clone(),
                    ty: inst.ty_con.clone(),
                }
                .into());
            }
            let mut context: Vec<(String, usize)> = vec![];
            for c in &inst.context {
                if !classes.classes.contains_key(&c.class) {
                    return Err(TypeError::UnknownClass { span: inst.span, name: c.class.clone() }.into());
                }
                let tv = match &c.ty {
                    TypeExpr::Var(n) => n,
                    _ => {
                        return Err(TypeError::BadInstanceHead {
                            span: inst.span,
                            message: "instance context constraints must be on type variables".into(),
                        }
                        .into())
                    }
                };
                let idx = inst.ty_args.iter().position(|a| a == tv).ok_or_else(|| {
                    TypeError::BadInstanceHead {
                        span: inst.span,
                        message: format!("context variable {tv} not bound by the instance head"),
                    }
                })?;
                context.push((c.class.clone(), idx));
            }
            context.sort();
            context.dedup();
            let mut methods = BTreeMap::new();
            for f in &inst.methods {
                if !class_info.methods.iter().any(|(m, _)| *m == f.name) {
                    return Err(TypeError::UnknownMethod {
                        span: f.span,
                        class: inst.class.clone(),
                        method: f.name.clone(),
                    }
                    .into());
                }
                if methods
                    .insert(f.name.clone(), method_global(&f.name, &inst.ty_con))
                    .is_some()
                {
                    return Err(TypeError::DuplicateDefinition {
                        span: f.span,
                        name: format!("method {}", f.name),
                    }
                    .into());
                }
            }
            // Eq has mutual defaults; at least one direction must be given.
            if inst.class == "Eq" && !methods.contains_key("==") && !methods.contains_key("/=") {
                return Err(TypeError::MissingMethod {
                    span: inst.span,
                    class: inst.class.clone(),
                    ty: inst.ty_con.clone(),
                    method: "==".into(),
                }
                .into());
            }
            for (mname, _) in &class_info.methods {
                methods
                    .entry(mname.clone())
                    .or_insert_with(|| method_global(mname, &inst.ty_con));
            }
            classes.add_instance(InstanceInfo {
                class: inst.class.clone(),
                ty_con: inst.ty_con.clone(),
                context,
                derived: false,
                methods,
                span: inst.span,
            });
        }
    }

    // Global names: builtin unification, class methods, module functions.
    let mut globals: BTreeMap<String, GlobalKind> = BTreeMap::new();
    globals.insert("=:=".into(), GlobalKind::Fun);
    for c in classes.classes.values() {
        for (m, _) in &c.methods {
            globals.insert(m.clone(), GlobalKind::Method);
        }
    }
    for m in modules {
        for f in &m.funs {
            if globals.contains_key(&f.name) {
                return Err(TypeError::DuplicateDefinition { span: f.span, name: f.name.clone() }.into());
            }
            if f.rules.is_empty() && f.sig.is_none() {
                return Err(TypeError::NoRules { span: f.span, name: f.name.clone() }.into());
            }
            let arities: BTreeSet<usize> = f.rules.iter().map(|r| r.params.len()).collect();
            if arities.len() > 1 {
                return Err(TypeError::MixedArity { span: f.span, name: f.name.clone() }.into());
            }
            globals.insert(f.name.clone(), GlobalKind::Fun);
        }
    }

    Ok(Analysis { data, classes, globals, derived_data, derived_eq })
}
