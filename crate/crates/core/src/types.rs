//! Semantic types, type schemes and the class/instance environment.

use crate::ast::Span;
use std::collections::BTreeMap;
use std::fmt;

pub type TvId = u32;

#[derive(Debug, Clone, PartialEq)]
pub enum Type {
    Var(TvId),
    Con(String, Vec<Type>),
    Fun(Box<Type>, Box<Type>),
}

impl Type {
    pub fn fun(a: Type, b: Type) -> Type {
        Type::Fun(Box::new(a), Box::new(b))
    }

    pub fn int() -> Type {
        Type::Con("Int".into(), vec![])
    }

    pub fn char() -> Type {
        Type::Con("Char".into(), vec![])
    }

    pub fn bool() -> Type {
        Type::Con("Bool".into(), vec![])
    }

    pub fn list(t: Type) -> Type {
        Type::Con("[]".into(), vec![t])
    }

    pub fn vars(&self, out: &mut Vec<TvId>) {
        match self {
            Type::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Type::Con(_, args) => {
                for a in args {
                    a.vars(out);
                }
            }
            Type::Fun(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    pub fn contains_var(&self, v: TvId) -> bool {
        match self {
            Type::Var(w) => *w == v,
            Type::Con(_, args) => args.iter().any(|a| a.contains_var(v)),
            Type::Fun(a, b) => a.contains_var(v) || b.contains_var(v),
        }
    }

    pub fn contains_fun(&self) -> bool {
        match self {
            Type::Var(_) => false,
            Type::Con(_, args) => args.iter().any(|a| a.contains_fun()),
            Type::Fun(..) => true,
        }
    }

    /// Substitutes `Type::Var(i)` by `args[i]`; used to instantiate
    /// constructor argument types whose variables are parameter indices.
    pub fn subst_params(&self, args: &[Type]) -> Type {
        match self {
            Type::Var(i) => args[*i as usize].clone(),
            Type::Con(n, ts) => Type::Con(n.clone(), ts.iter().map(|t| t.subst_params(args)).collect()),
            Type::Fun(a, b) => Type::fun(a.subst_params(args), b.subst_params(args)),
        }
    }
}

/// Canonical display names: a, b, ..., z, a1, b1, ...
fn tv_display(idx: usize) -> String {
    let letter = (b'a' + (idx % 26) as u8) as char;
    let round = idx / 26;
    if round == 0 {
        letter.to_string()
    } else {
        format!("{letter}{round}")
    }
}

/// Assigns display names to type variables in first-occurrence order.
#[derive(Default)]
pub struct TvNamer {
    names: BTreeMap<TvId, String>,
    order: Vec<TvId>,
}

impl TvNamer {
    pub fn name(&mut self, v: TvId) -> String {
        if let Some(n) = self.names.get(&v) {
            return n.clone();
        }
        let n = tv_display(self.order.len());
        self.order.push(v);
        self.names.insert(v, n.clone());
        n
    }
}

fn render(ty: &Type, namer: &mut TvNamer, out: &mut String, atom: bool) {
    match ty {
        Type::Var(v) => out.push_str(&namer.name(*v)),
        Type::Con(name, args) => match name.as_str() {
            "[]" => {
                out.push('[');
                render(&args[0], namer, out, false);
                out.push(']');
            }
            t if t.starts_with("(,") => {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    render(a, namer, out, false);
                }
                out.push(')');
            }
            _ => {
                let wrap = atom && !args.is_empty();
                if wrap {
                    out.push('(');
                }
                out.push_str(name);
                for a in args {
                    out.push(' ');
                    render(a, namer, out, true);
                }
                if wrap {
                    out.push(')');
                }
            }
        },
        Type::Fun(a, b) => {
            if atom {
                out.push('(');
            }
            let left_atom = matches!(a.as_ref(), Type::Fun(..));
            if left_atom {
                out.push('(');
            }
            render(a, namer, out, false);
            if left_atom {
                out.push(')');
            }
            out.push_str(" -> ");
            render(b, namer, out, false);
            if atom {
                out.push(')');
            }
        }
    }
}

pub fn render_type(ty: &Type, namer: &mut TvNamer) -> String {
    let mut s = String::new();
    render(ty, namer, &mut s, false);
    s
}

/// A qualified polymorphic type. Context constraints are restricted to
/// quantified type variables; constraints on concrete types are discharged
/// during inference.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeScheme {
    pub vars: Vec<TvId>,
    pub context: Vec<(String, TvId)>,
    pub body: Type,
}

impl TypeScheme {
    pub fn mono(body: Type) -> Self {
        TypeScheme { vars: vec![], context: vec![], body }
    }

    /// Canonical rendering: variables named in first occurrence order of the
    /// body, context sorted by class then variable.
    pub fn render(&self) -> String {
        let mut namer = TvNamer::default();
        let body = render_type(&self.body, &mut namer);
        if self.context.is_empty() {
            return body;
        }
        let mut ctx: Vec<String> = self
            .context
            .iter()
            .map(|(class, v)| format!("{class} {}", namer.name(*v)))
            .collect();
        ctx.sort();
        ctx.dedup();
        if ctx.len() == 1 {
            format!("{} => {body}", ctx[0])
        } else {
            format!("({}) => {body}", ctx.join(", "))
        }
    }
}

impl fmt::Display for TypeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

#[derive(Debug, Clone)]
pub struct ConInfo {
    pub name: String,
    /// Argument types; `Type::Var(i)` refers to the i-th type parameter.
    pub args: Vec<Type>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct DataInfo {
    pub name: String,
    pub params: Vec<String>,
    pub cons: Vec<ConInfo>,
    pub span: Span,
}

/// All algebraic data types in scope: built-ins (Bool, lists, tuples) plus
/// the module's declarations. Int and Char are primitive, not listed here.
#[derive(Debug, Clone, Default)]
pub struct DataTable {
    pub types: BTreeMap<String, DataInfo>,
    /// Constructor name -> owning type name.
    pub con_owner: BTreeMap<String, String>,
}

impl DataTable {
    pub fn add(&mut self, info: DataInfo) {
        for c in &info.cons {
            self.con_owner.insert(c.name.clone(), info.name.clone());
        }
        self.types.insert(info.name.clone(), info);
    }

    pub fn con(&self, name: &str) -> Option<(&DataInfo, &ConInfo)> {
        let owner = self.con_owner.get(name)?;
        let info = self.types.get(owner)?;
        let con = info.cons.iter().find(|c| c.name == name)?;
        Some((info, con))
    }

    pub fn con_arity(&self, name: &str) -> Option<usize> {
        self.con(name).map(|(_, c)| c.args.len())
    }

    /// Arity of a type constructor, including the primitive ones.
    pub fn tycon_arity(&self, name: &str) -> Option<usize> {
        match name {
            "Int" | "Char" => Some(0),
            _ => self.types.get(name).map(|t| t.params.len()),
        }
    }

    pub fn is_prim(name: &str) -> bool {
        matches!(name, "Int" | "Char")
    }
}

pub fn builtin_data() -> DataTable {
    let sp = Span::default();
    let mut t = DataTable::default();
    t.add(DataInfo {
        name: "Bool".into(),
        params: vec![],
        cons: vec![
            ConInfo { name: "False".into(), args: vec![], span: sp },
            ConInfo { name: "True".into(), args: vec![], span: sp },
        ],
        span: sp,
    });
    t.add(DataInfo {
        name: "[]".into(),
        params: vec!["a".into()],
        cons: vec![
            ConInfo { name: "[]".into(), args: vec![], span: sp },
            ConInfo { name: ":".into(), args: vec![Type::Var(0), Type::Con("[]".into(), vec![Type::Var(0)])], span: sp },
        ],
        span: sp,
    });
    for n in 2..=4usize {
        let name = format!("({})", ",".repeat(n - 1));
        let params: Vec<String> = (0..n).map(|i| tv_display(i)).collect();
        t.add(DataInfo {
            name: name.clone(),
            params,
            cons: vec![ConInfo {
                name: name.clone(),
                args: (0..n as u32).map(Type::Var).collect(),
                span: sp,
            }],
            span: sp,
        });
    }
    t
}

#[derive(Debug, Clone)]
pub struct ClassInfo {
    pub name: String,
    /// Method name and its type over the class variable `Type::Var(0)`.
    pub methods: Vec<(String, Type)>,
}

#[derive(Debug, Clone)]
pub struct InstanceInfo {
    pub class: String,
    pub ty_con: String,
    /// Constraints on the instance's type parameters: (class, param index),
    /// sorted. Dictionary arguments follow this order.
    pub context: Vec<(String, usize)>,
    pub derived: bool,
    /// Method name -> global function implementing it.
    pub methods: BTreeMap<String, String>,
    pub span: Span,
}

#[derive(Debug, Clone, Default)]
pub struct ClassEnv {
    pub classes: BTreeMap<String, ClassInfo>,
    pub instances: BTreeMap<(String, String), InstanceInfo>,
}

impl ClassEnv {
    pub fn instance(&self, class: &str, ty_con: &str) -> Option<&InstanceInfo> {
        self.instances.get(&(class.to_string(), ty_con.to_string()))
    }

    pub fn add_instance(&mut self, info: InstanceInfo) {
        self.instances.insert((info.class.clone(), info.ty_con.clone()), info);
    }

    /// Looks up a method: returns (class name, method type over Var(0)).
    pub fn method(&self, name: &str) -> Option<(&str, &Type)> {
        for c in self.classes.values() {
            for (m, ty) in &c.methods {
                if m == name {
                    return Some((c.name.as_str(), ty));
                }
            }
        }
        None
    }
}

pub fn builtin_classes() -> ClassEnv {
    let a = Type::Var(0);
    let cmp = Type::fun(a.clone(), Type::fun(a.clone(), Type::bool()));
    let mut env = ClassEnv::default();
    env.classes.insert(
        "Eq".into(),
        ClassInfo { name: "Eq".into(), methods: vec![("==".into(), cmp.clone()), ("/=".into(), cmp.clone())] },
    );
    env.classes.insert(
        "Data".into(),
        ClassInfo { name: "Data".into(), methods: vec![("aValue".into(), a.clone()), ("===".into(), cmp)] },
    );
    env
}
