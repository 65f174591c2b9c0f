//! Surface abstract syntax.
//!
//! Produced by the parser, consumed by analysis, inference and elaboration.
//! Every expression and pattern carries a source span and a unique node id;
//! the id is the key under which inference records instantiation evidence.

use std::fmt;

/// 1-based line/column position of a token in its source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Unique id for an expression node within one parsed unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lit {
    Int(i64),
    Char(char),
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lit::Int(n) => write!(f, "{n}"),
            Lit::Char(c) => write!(f, "{}", show_char(*c)),
        }
    }
}

/// Renders a character literal with the escapes the lexer accepts.
pub fn show_char(c: char) -> String {
    match c {
        '\n' => "'\\n'".into(),
        '\t' => "'\\t'".into(),
        '\\' => "'\\\\'".into(),
        '\'' => "'\\''".into(),
        c => format!("'{c}'"),
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    /// Lower-case identifier: local variable or defined operation.
    Var(NodeId, Span, String),
    /// Constructor name (upper-case identifier, `[]`, `:`, tuple).
    Con(NodeId, Span, String),
    Lit(NodeId, Span, Lit),
    /// `_` in expression position: an anonymous logic variable.
    Anon(NodeId, Span),
    App(NodeId, Box<Expr>, Box<Expr>),
    Lambda(NodeId, Span, Vec<String>, Box<Expr>),
    /// `let x = e in body` (single binding).
    Let(NodeId, Span, String, Box<Expr>, Box<Expr>),
    /// `let x, y free in body`.
    FreeIn(NodeId, Span, Vec<String>, Box<Expr>),
    /// `e :: type`.
    Annot(NodeId, Span, Box<Expr>, TypeExpr),
}

impl Expr {
    pub fn id(&self) -> NodeId {
        match self {
            Expr::Var(id, ..)
            | Expr::Con(id, ..)
            | Expr::Lit(id, ..)
            | Expr::Anon(id, ..)
            | Expr::App(id, ..)
            | Expr::Lambda(id, ..)
            | Expr::Let(id, ..)
            | Expr::FreeIn(id, ..)
            | Expr::Annot(id, ..) => *id,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Expr::Var(_, sp, _)
            | Expr::Con(_, sp, _)
            | Expr::Lit(_, sp, _)
            | Expr::Anon(_, sp)
            | Expr::Lambda(_, sp, ..)
            | Expr::Let(_, sp, ..)
            | Expr::FreeIn(_, sp, ..)
            | Expr::Annot(_, sp, ..) => *sp,
            Expr::App(_, f, _) => f.span(),
        }
    }

    /// The head and argument list of a (possibly nested) application.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut head = self;
        let mut args = Vec::new();
        while let Expr::App(_, f, a) = head {
            args.push(a.as_ref());
            head = f;
        }
        args.reverse();
        (head, args)
    }

    /// Preorder visit of this expression and all subexpressions.
    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Var(..) | Expr::Con(..) | Expr::Lit(..) | Expr::Anon(..) => {}
            Expr::App(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Lambda(_, _, _, body) => body.walk(f),
            Expr::Let(_, _, _, bound, body) => {
                bound.walk(f);
                body.walk(f);
            }
            Expr::FreeIn(_, _, _, body) => body.walk(f),
            Expr::Annot(_, _, inner, _) => inner.walk(f),
        }
    }

    pub fn max_node_id(&self) -> u32 {
        let mut max = 0;
        self.walk(&mut |e| max = max.max(e.id().0));
        max
    }
}

#[derive(Debug, Clone)]
pub enum Pattern {
    /// Pattern variable. `_` parses to a fresh variable whose name starts
    /// with `_`, which the printer renders back as `_`.
    Var(Span, String),
    Lit(Span, Lit),
    Con(Span, String, Vec<Pattern>),
    /// Functional pattern: an expression containing defined operations.
    Fun(Span, Expr),
}

impl Pattern {
    pub fn span(&self) -> Span {
        match self {
            Pattern::Var(sp, _) | Pattern::Lit(sp, _) | Pattern::Con(sp, ..) | Pattern::Fun(sp, _) => *sp,
        }
    }
}

/// Type expressions as written in signatures and data declarations.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeExpr {
    Var(String),
    /// Constructor applied to arguments; lists are `Con("[]", [t])`,
    /// tuples `Con("(,)", [a, b])` and so on.
    Con(String, Vec<TypeExpr>),
    Fun(Box<TypeExpr>, Box<TypeExpr>),
}

/// A single class constraint, e.g. `Data a` or `Eq (IVal a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintExpr {
    pub class: String,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone)]
pub struct SigExpr {
    pub context: Vec<ConstraintExpr>,
    pub body: TypeExpr,
}

/// One defining rule: `f p1 .. pn | guard = rhs where ...`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub span: Span,
    pub params: Vec<Pattern>,
    pub guard: Option<Expr>,
    pub rhs: Expr,
    /// `where x = e` bindings, in source order.
    pub wheres: Vec<(String, Expr)>,
    /// `where x, y free` declarations.
    pub frees: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FunDef {
    pub name: String,
    pub span: Span,
    pub sig: Option<SigExpr>,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone)]
pub struct ConDecl {
    pub span: Span,
    pub name: String,
    pub args: Vec<TypeExpr>,
}

#[derive(Debug, Clone)]
pub struct DataDecl {
    pub span: Span,
    pub name: String,
    pub params: Vec<String>,
    pub cons: Vec<ConDecl>,
    pub deriving: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct InstanceDecl {
    pub span: Span,
    pub class: String,
    pub context: Vec<ConstraintExpr>,
    /// Instance head: type constructor name and its variable arguments.
    pub ty_con: String,
    pub ty_args: Vec<String>,
    /// Method definitions grouped by method name.
    pub methods: Vec<FunDef>,
}

#[derive(Debug, Clone, Default)]
pub struct SourceModule {
    pub file: String,
    pub data: Vec<DataDecl>,
    pub instances: Vec<InstanceDecl>,
    pub funs: Vec<FunDef>,
}

/// A goal as typed at the REPL or passed to `-e`: an expression plus the
/// logic variables declared free at the top level (`where x free` suffix or
/// a `let x free in` spine), whose bindings are reported per answer.
#[derive(Debug, Clone)]
pub struct Goal {
    pub expr: Expr,
    pub frees: Vec<String>,
}
