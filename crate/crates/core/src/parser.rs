//! Parser for modules, expressions and goals.
//!
//! Layout is line-oriented: a token in column 1 opens a new top-level
//! declaration, indented lines continue it, `--` starts a comment. Inside a
//! declaration, `;` separates `where` items and instance methods.
//!
//! Rule left-hand sides are parsed with the expression grammar and then
//! reinterpreted as patterns; an argument that is not a constructor term is
//! kept as a candidate functional pattern for name analysis to vet. This
//! gives infix definitions (`x ? _ = x`) and functional patterns
//! (`last (_ ++ [x]) = x`) for free.

use crate::ast::*;
use crate::error::ParseError;
use crate::lexer::{lex, Tok, Token};

/// Binary operators with (level, name, is-constructor). Application binds
/// tighter than all of them; `?` binds loosest.
fn op_info(tok: &Tok) -> Option<(u8, Assoc, &'static str, bool)> {
    Some(match tok {
        Tok::Question => (1, Assoc::Right, "?", false),
        Tok::OrOr => (2, Assoc::Right, "||", false),
        Tok::AndAnd => (3, Assoc::Right, "&&", false),
        Tok::EqEq => (4, Assoc::None, "==", false),
        Tok::NeqOp => (4, Assoc::None, "/=", false),
        Tok::EqEqEq => (4, Assoc::None, "===", false),
        Tok::UnifyOp => (4, Assoc::None, "=:=", false),
        Tok::Colon => (5, Assoc::Right, ":", true),
        Tok::PlusPlus => (5, Assoc::Right, "++", false),
        _ => return None,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Assoc {
    Right,
    None,
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: u32,
    /// Counter for fresh names of `_` patterns.
    next_anon: u32,
}

/// End-of-input position: one past the last token.
fn end_span(toks: &[Token]) -> Span {
    toks.last().map(|t| Span::new(t.span.line, t.span.col + 1)).unwrap_or(Span::new(1, 1))
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, next_id: 0, next_anon: 0 }
    }

    fn fresh_id(&mut self) -> NodeId {
        self.next_id += 1;
        NodeId(self.next_id)
    }

    fn fresh_anon(&mut self) -> String {
        self.next_anon += 1;
        format!("_{}", self.next_anon)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or_else(|| end_span(&self.toks))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn err_here(&self, expected: Vec<&str>) -> ParseError {
        let found = match self.peek() {
            Some(t) => format!("`{t}`"),
            None => "end of input".to_string(),
        };
        ParseError::expecting(self.peek_span(), expected.into_iter().map(String::from).collect(), found)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, ParseError> {
        match self.peek() {
            Some(t) if *t == tok => Ok(self.next().unwrap().span),
            _ => Err(self.err_here(vec![what])),
        }
    }

    fn expect_lident(&mut self, what: &str) -> Result<(Span, String), ParseError> {
        match self.peek() {
            Some(Tok::LIdent(_)) => {
                let t = self.next().unwrap();
                if let Tok::LIdent(s) = t.tok {
                    Ok((t.span, s))
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err_here(vec![what])),
        }
    }

    fn expect_uident(&mut self, what: &str) -> Result<(Span, String), ParseError> {
        match self.peek() {
            Some(Tok::UIdent(_)) => {
                let t = self.next().unwrap();
                if let Tok::UIdent(s) = t.tok {
                    Ok((t.span, s))
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err_here(vec![what])),
        }
    }

    // ---- expressions ----

    fn con(&mut self, sp: Span, name: &str) -> Expr {
        Expr::Con(self.fresh_id(), sp, name.to_string())
    }

    fn app2(&mut self, f: Expr, a: Expr) -> Expr {
        Expr::App(self.fresh_id(), Box::new(f), Box::new(a))
    }

    fn cons_cell(&mut self, sp: Span, head: Expr, tail: Expr) -> Expr {
        let c = self.con(sp, ":");
        let f = self.app2(c, head);
        self.app2(f, tail)
    }

    /// Full expression: binary levels plus an optional `:: type` suffix.
    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let e = self.binary(1)?;
        if self.peek() == Some(&Tok::DColon) {
            let sp = self.next().unwrap().span;
            let ty = self.type_expr()?;
            return Ok(Expr::Annot(self.fresh_id(), sp, Box::new(e), ty));
        }
        Ok(e)
    }

    fn binary(&mut self, min_level: u8) -> Result<Expr, ParseError> {
        let mut left = self.application()?;
        while let Some((level, assoc, name, is_con)) = self.peek().and_then(op_info) {
            if level < min_level {
                break;
            }
            let sp = self.next().unwrap().span;
            let right = match assoc {
                Assoc::Right => self.binary(level)?,
                Assoc::None => {
                    let r = self.binary(level + 1)?;
                    if let Some((l2, Assoc::None, n2, _)) = self.peek().and_then(op_info) {
                        if l2 == level {
                            return Err(ParseError::new(
                                self.peek_span(),
                                format!("`{name}` and `{n2}` are non-associative; parenthesize"),
                            ));
                        }
                    }
                    r
                }
            };
            let head = if is_con {
                self.con(sp, name)
            } else {
                Expr::Var(self.fresh_id(), sp, name.to_string())
            };
            let f = self.app2(head, left);
            left = self.app2(f, right);
        }
        Ok(left)
    }

    fn starts_atom(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::LIdent(_)
                | Tok::UIdent(_)
                | Tok::Int(_)
                | Tok::CharLit(_)
                | Tok::StrLit(_)
                | Tok::LParen
                | Tok::LBracket
                | Tok::Underscore
        )
    }

    fn application(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Backslash) => return self.lambda(),
            Some(Tok::Let) => return self.let_expr(),
            _ => {}
        }
        let mut e = self.atom()?;
        while let Some(t) = self.peek() {
            if Self::starts_atom(t) {
                let a = self.atom()?;
                e = self.app2(e, a);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn lambda(&mut self) -> Result<Expr, ParseError> {
        let sp = self.expect(Tok::Backslash, "\\")?;
        let mut params = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::LIdent(_)) => params.push(self.expect_lident("parameter")?.1),
                Some(Tok::Underscore) => {
                    self.next();
                    params.push(self.fresh_anon());
                }
                _ => break,
            }
        }
        if params.is_empty() {
            return Err(self.err_here(vec!["lambda parameter"]));
        }
        self.expect(Tok::Arrow, "->")?;
        let body = self.expr()?;
        Ok(Expr::Lambda(self.fresh_id(), sp, params, Box::new(body)))
    }

    fn let_expr(&mut self) -> Result<Expr, ParseError> {
        let sp = self.expect(Tok::Let, "let")?;
        let (_, first) = self.expect_lident("variable")?;
        match self.peek() {
            Some(Tok::Equals) => {
                self.next();
                let bound = self.expr()?;
                self.expect(Tok::In, "in")?;
                let body = self.expr()?;
                Ok(Expr::Let(self.fresh_id(), sp, first, Box::new(bound), Box::new(body)))
            }
            Some(Tok::Comma) | Some(Tok::Free) => {
                let mut names = vec![first];
                while self.peek() == Some(&Tok::Comma) {
                    self.next();
                    names.push(self.expect_lident("variable")?.1);
                }
                self.expect(Tok::Free, "free")?;
                self.expect(Tok::In, "in")?;
                let body = self.expr()?;
                Ok(Expr::FreeIn(self.fresh_id(), sp, names, Box::new(body)))
            }
            _ => Err(self.err_here(vec!["=", "free"])),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let sp = self.peek_span();
        match self.peek() {
            Some(Tok::LIdent(_)) => {
                let (sp, name) = self.expect_lident("identifier")?;
                Ok(Expr::Var(self.fresh_id(), sp, name))
            }
            Some(Tok::UIdent(_)) => {
                let (sp, name) = self.expect_uident("constructor")?;
                Ok(Expr::Con(self.fresh_id(), sp, name))
            }
            Some(Tok::Int(n)) => {
                let n = *n;
                self.next();
                Ok(Expr::Lit(self.fresh_id(), sp, Lit::Int(n)))
            }
            Some(Tok::CharLit(c)) => {
                let c = *c;
                self.next();
                Ok(Expr::Lit(self.fresh_id(), sp, Lit::Char(c)))
            }
            Some(Tok::StrLit(_)) => {
                let t = self.next().unwrap();
                let s = match t.tok {
                    Tok::StrLit(s) => s,
                    _ => unreachable!(),
                };
                let mut e = self.con(sp, "[]");
                for c in s.chars().rev() {
                    let ch = Expr::Lit(self.fresh_id(), sp, Lit::Char(c));
                    e = self.cons_cell(sp, ch, e);
                }
                Ok(e)
            }
            Some(Tok::Underscore) => {
                self.next();
                Ok(Expr::Anon(self.fresh_id(), sp))
            }
            Some(Tok::LParen) => self.paren_atom(),
            Some(Tok::LBracket) => self.list_atom(),
            _ => Err(self.err_here(vec!["expression"])),
        }
    }

    fn paren_atom(&mut self) -> Result<Expr, ParseError> {
        let open = self.expect(Tok::LParen, "(")?;
        // parenthesized operator name: (++), (?), (==), (:), ...
        if let Some((_, _, name, is_con)) = self.peek().and_then(op_info) {
            let name = name.to_string();
            let is_con = is_con;
            let op_span = self.next().unwrap().span;
            self.expect(Tok::RParen, ")")?;
            return Ok(if is_con {
                Expr::Con(self.fresh_id(), op_span, name)
            } else {
                Expr::Var(self.fresh_id(), op_span, name)
            });
        }
        let first = self.expr()?;
        let mut items = vec![first];
        while self.peek() == Some(&Tok::Comma) {
            self.next();
            items.push(self.expr()?);
        }
        self.expect(Tok::RParen, ")")?;
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        if items.len() > 4 {
            return Err(ParseError::new(open, "tuples have at most 4 components".to_string()));
        }
        let name = tuple_con(items.len());
        let mut e = self.con(open, name);
        for item in items {
            e = self.app2(e, item);
        }
        Ok(e)
    }

    fn list_atom(&mut self) -> Result<Expr, ParseError> {
        let open = self.expect(Tok::LBracket, "[")?;
        let mut items = Vec::new();
        if self.peek() != Some(&Tok::RBracket) {
            items.push(self.expr()?);
            while self.peek() == Some(&Tok::Comma) {
                self.next();
                items.push(self.expr()?);
            }
        }
        self.expect(Tok::RBracket, "]")?;
        let mut e = self.con(open, "[]");
        for item in items.into_iter().rev() {
            e = self.cons_cell(open, item, e);
        }
        Ok(e)
    }

    // ---- types ----

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        let lhs = self.type_app()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.next();
            let rhs = self.type_expr()?;
            return Ok(TypeExpr::Fun(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn type_app(&mut self) -> Result<TypeExpr, ParseError> {
        let head = self.type_atom()?;
        let mut args = Vec::new();
        while let Some(t) = self.peek() {
            if matches!(t, Tok::LIdent(_) | Tok::UIdent(_) | Tok::LParen | Tok::LBracket) {
                args.push(self.type_atom()?);
            } else {
                break;
            }
        }
        if args.is_empty() {
            return Ok(head);
        }
        match head {
            TypeExpr::Con(name, mut existing) => {
                existing.extend(args);
                Ok(TypeExpr::Con(name, existing))
            }
            _ => Err(ParseError::new(self.peek_span(), "type variables cannot be applied to arguments".to_string())),
        }
    }

    fn type_atom(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek() {
            Some(Tok::LIdent(_)) => {
                let (_, name) = self.expect_lident("type variable")?;
                Ok(TypeExpr::Var(name))
            }
            Some(Tok::UIdent(_)) => {
                let (_, name) = self.expect_uident("type constructor")?;
                Ok(TypeExpr::Con(name, Vec::new()))
            }
            Some(Tok::LBracket) => {
                self.next();
                let inner = self.type_expr()?;
                self.expect(Tok::RBracket, "]")?;
                Ok(TypeExpr::Con("[]".to_string(), vec![inner]))
            }
            Some(Tok::LParen) => {
                let open = self.next().unwrap().span;
                let first = self.type_expr()?;
                let mut items = vec![first];
                while self.peek() == Some(&Tok::Comma) {
                    self.next();
                    items.push(self.type_expr()?);
                }
                self.expect(Tok::RParen, ")")?;
                if items.len() == 1 {
                    return Ok(items.pop().unwrap());
                }
                if items.len() > 4 {
                    return Err(ParseError::new(open, "tuples have at most 4 components".to_string()));
                }
                Ok(TypeExpr::Con(tuple_con(items.len()).to_string(), items))
            }
            _ => Err(self.err_here(vec!["type"])),
        }
    }

    /// `C t => body`, `(C1 t1, C2 t2) => body`, or a bare type.
    fn sig_expr(&mut self) -> Result<SigExpr, ParseError> {
        let first = self.type_expr()?;
        if self.peek() == Some(&Tok::DArrow) {
            let sp = self.next().unwrap().span;
            let context = context_of_type(&first, sp)?;
            let body = self.type_expr()?;
            return Ok(SigExpr { context, body });
        }
        Ok(SigExpr { context: Vec::new(), body: first })
    }
}

fn tuple_con(n: usize) -> &'static str {
    match n {
        2 => "(,)",
        3 => "(,,)",
        4 => "(,,,)",
        _ => unreachable!("tuple arity checked by caller"),
    }
}

/// Reinterprets a parsed type as a constraint context (`Data a`,
/// `(Data a, Eq a)`).
fn context_of_type(ty: &TypeExpr, sp: Span) -> Result<Vec<ConstraintExpr>, ParseError> {
    let items: Vec<&TypeExpr> = match ty {
        TypeExpr::Con(name, args) if name.starts_with("(,") => args.iter().collect(),
        other => vec![other],
    };
    let mut out = Vec::new();
    for item in items {
        match item {
            TypeExpr::Con(class, args) if args.len() == 1 => {
                out.push(ConstraintExpr { class: class.clone(), ty: args[0].clone() });
            }
            _ => {
                return Err(ParseError::new(sp, "malformed context before `=>`".to_string()));
            }
        }
    }
    Ok(out)
}

/// Converts an expression to a pattern when it is a pure constructor term;
/// anything else becomes a candidate functional pattern for analysis to vet.
fn expr_to_pattern(p: &mut Parser, e: &Expr) -> Pattern {
    fn pure(p: &mut Parser, e: &Expr) -> Option<Pattern> {
        match e {
            Expr::Var(_, sp, name) => Some(Pattern::Var(*sp, name.clone())),
            Expr::Anon(_, sp) => Some(Pattern::Var(*sp, p.fresh_anon())),
            Expr::Lit(_, sp, lit) => Some(Pattern::Lit(*sp, *lit)),
            Expr::Con(_, sp, name) => Some(Pattern::Con(*sp, name.clone(), Vec::new())),
            Expr::App(..) => {
                let (head, args) = e.spine();
                if let Expr::Con(_, sp, name) = head {
                    let mut pats = Vec::with_capacity(args.len());
                    for a in args {
                        pats.push(pure(p, a)?);
                    }
                    Some(Pattern::Con(*sp, name.clone(), pats))
                } else {
                    None
                }
            }
            _ => None,
        }
    }
    match pure(p, e) {
        Some(pat) => pat,
        None => Pattern::Fun(e.span(), e.clone()),
    }
}

/// One parsed `where` block.
#[derive(Default)]
struct WhereBlock {
    wheres: Vec<(String, Expr)>,
    frees: Vec<String>,
}

impl Parser {
    /// `where` items, `;`-separated: `x, y free` or `x = expr`.
    fn where_block(&mut self) -> Result<WhereBlock, ParseError> {
        self.expect(Tok::Where, "where")?;
        let mut block = WhereBlock::default();
        loop {
            let (_, first) = self.expect_lident("variable")?;
            match self.peek() {
                Some(Tok::Comma) | Some(Tok::Free) => {
                    let mut names = vec![first];
                    while self.peek() == Some(&Tok::Comma) {
                        self.next();
                        names.push(self.expect_lident("variable")?.1);
                    }
                    self.expect(Tok::Free, "free")?;
                    block.frees.extend(names);
                }
                Some(Tok::Equals) => {
                    self.next();
                    let e = self.expr()?;
                    block.wheres.push((first, e));
                }
                _ => return Err(self.err_here(vec!["free", "="])),
            }
            if self.peek() == Some(&Tok::Semi) {
                self.next();
                continue;
            }
            break;
        }
        Ok(block)
    }

    /// A defining rule, starting from its left-hand side tokens.
    fn rule(&mut self) -> Result<(String, Rule), ParseError> {
        let lhs_span = self.peek_span();
        let lhs = self.binary(1)?;
        let guard = if self.peek() == Some(&Tok::Pipe) {
            self.next();
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Equals, "=")?;
        let rhs = self.expr()?;
        let block = if self.peek() == Some(&Tok::Where) {
            self.where_block()?
        } else {
            WhereBlock::default()
        };

        let (head, args) = lhs.spine();
        let name = match head {
            Expr::Var(_, _, name) => name.clone(),
            _ => {
                return Err(ParseError::new(
                    lhs_span,
                    "left-hand side must be an operation applied to patterns".to_string(),
                ));
            }
        };
        let args: Vec<Expr> = args.into_iter().cloned().collect();
        let params = args.iter().map(|a| expr_to_pattern(self, a)).collect();
        Ok((
            name,
            Rule { span: lhs_span, params, guard, rhs, wheres: block.wheres, frees: block.frees },
        ))
    }
}

/// Splits a token stream into logical declarations by the column-1 rule.
fn logical_decls(toks: Vec<Token>) -> Result<Vec<Vec<Token>>, ParseError> {
    let mut decls: Vec<Vec<Token>> = Vec::new();
    for t in toks {
        if t.span.col == 1 {
            decls.push(vec![t]);
        } else {
            match decls.last_mut() {
                Some(d) => d.push(t),
                None => {
                    return Err(ParseError::new(
                        t.span,
                        "unexpected indentation: top-level declarations start in column 1".to_string(),
                    ));
                }
            }
        }
    }
    Ok(decls)
}

pub fn parse_module(file: &str, src: &str) -> Result<SourceModule, ParseError> {
    let toks = lex(src)?;
    let decls = logical_decls(toks)?;
    let mut module = SourceModule { file: file.to_string(), ..Default::default() };
    // Shared id space across the whole module.
    let mut next_id = 0;
    let mut next_anon = 0;
    for decl in decls {
        let mut p = Parser::new(decl);
        p.next_id = next_id;
        p.next_anon = next_anon;
        match p.peek() {
            Some(Tok::Data) => {
                let d = p.data_decl()?;
                p.finish()?;
                module.data.push(d);
            }
            Some(Tok::Instance) => {
                let d = p.instance_decl()?;
                p.finish()?;
                module.instances.push(d);
            }
            _ => {
                if p.is_signature() {
                    let (span, name, sig) = p.signature()?;
                    p.finish()?;
                    attach_sig(&mut module, span, name, sig)?;
                } else {
                    let (name, rule) = p.rule()?;
                    p.finish()?;
                    attach_rule(&mut module, name, rule);
                }
            }
        }
        next_id = p.next_id;
        next_anon = p.next_anon;
    }
    Ok(module)
}

fn attach_sig(module: &mut SourceModule, span: Span, name: String, sig: SigExpr) -> Result<(), ParseError> {
    if let Some(f) = module.funs.iter_mut().find(|f| f.name == name) {
        if f.sig.is_some() {
            return Err(ParseError::new(span, format!("duplicate signature for `{name}`")));
        }
        f.sig = Some(sig);
    } else {
        module.funs.push(FunDef { name, span, sig: Some(sig), rules: Vec::new() });
    }
    Ok(())
}

fn attach_rule(module: &mut SourceModule, name: String, rule: Rule) {
    if let Some(f) = module.funs.iter_mut().find(|f| f.name == name) {
        f.rules.push(rule);
    } else {
        module.funs.push(FunDef { name: name.clone(), span: rule.span, sig: None, rules: vec![rule] });
    }
}

impl Parser {
    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err_here(vec!["end of declaration"]))
        }
    }

    /// `name :: sig` or `(op) :: sig`, detected by lookahead.
    fn is_signature(&self) -> bool {
        match self.peek() {
            Some(Tok::LIdent(_)) => self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::DColon),
            Some(Tok::LParen) => {
                self.toks.get(self.pos + 1).map(|t| &t.tok).is_some_and(|t| op_info(t).is_some())
                    && self.toks.get(self.pos + 2).map(|t| &t.tok) == Some(&Tok::RParen)
                    && self.toks.get(self.pos + 3).map(|t| &t.tok) == Some(&Tok::DColon)
            }
            _ => false,
        }
    }

    fn signature(&mut self) -> Result<(Span, String, SigExpr), ParseError> {
        let sp = self.peek_span();
        let name = match self.peek() {
            Some(Tok::LIdent(_)) => self.expect_lident("name")?.1,
            Some(Tok::LParen) => {
                self.next();
                let (_, _, name, _) = self.peek().and_then(op_info).expect("checked by is_signature");
                let name = name.to_string();
                self.next();
                self.expect(Tok::RParen, ")")?;
                name
            }
            _ => return Err(self.err_here(vec!["name"])),
        };
        self.expect(Tok::DColon, "::")?;
        let sig = self.sig_expr()?;
        Ok((sp, name, sig))
    }

    fn data_decl(&mut self) -> Result<DataDecl, ParseError> {
        let span = self.expect(Tok::Data, "data")?;
        let (_, name) = self.expect_uident("type name")?;
        let mut params = Vec::new();
        while let Some(Tok::LIdent(_)) = self.peek() {
            params.push(self.expect_lident("type parameter")?.1);
        }
        self.expect(Tok::Equals, "=")?;
        let mut cons = Vec::new();
        loop {
            let (csp, cname) = self.expect_uident("constructor")?;
            let mut args = Vec::new();
            while let Some(t) = self.peek() {
                if matches!(t, Tok::LIdent(_) | Tok::UIdent(_) | Tok::LParen | Tok::LBracket) {
                    args.push(self.type_atom()?);
                } else {
                    break;
                }
            }
            cons.push(ConDecl { span: csp, name: cname, args });
            if self.peek() == Some(&Tok::Pipe) {
                self.next();
                continue;
            }
            break;
        }
        let mut deriving = Vec::new();
        if self.peek() == Some(&Tok::Deriving) {
            self.next();
            match self.peek() {
                Some(Tok::UIdent(_)) => deriving.push(self.expect_uident("class name")?.1),
                Some(Tok::LParen) => {
                    self.next();
                    deriving.push(self.expect_uident("class name")?.1);
                    while self.peek() == Some(&Tok::Comma) {
                        self.next();
                        deriving.push(self.expect_uident("class name")?.1);
                    }
                    self.expect(Tok::RParen, ")")?;
                }
                _ => return Err(self.err_here(vec!["class name", "("])),
            }
        }
        Ok(DataDecl { span, name, params, cons, deriving })
    }

    fn instance_decl(&mut self) -> Result<InstanceDecl, ParseError> {
        let span = self.expect(Tok::Instance, "instance")?;
        // Parse up to `where` as a signature shape: optional context, then
        // the class applied to the instance head.
        let sig = self.sig_expr()?;
        let (class, head) = match sig.body {
            TypeExpr::Con(class, args) if args.len() == 1 => (class, args.into_iter().next().unwrap()),
            _ => {
                return Err(ParseError::new(span, "instance head must be `Class (T a ...)`".to_string()));
            }
        };
        let (ty_con, ty_args) = match head {
            TypeExpr::Con(name, args) => {
                let mut vars = Vec::new();
                for a in args {
                    match a {
                        TypeExpr::Var(v) => vars.push(v),
                        _ => {
                            return Err(ParseError::new(
                                span,
                                "instance head arguments must be distinct type variables".to_string(),
                            ));
                        }
                    }
                }
                (name, vars)
            }
            _ => {
                return Err(ParseError::new(span, "instance head must name a type constructor".to_string()));
            }
        };
        self.expect(Tok::Where, "where")?;
        // Method rules, `;`-separated. Split on top-level semicolons.
        let rest: Vec<Token> = self.toks[self.pos..].to_vec();
        self.pos = self.toks.len();
        let mut methods: Vec<FunDef> = Vec::new();
        for chunk in split_semis(rest) {
            if chunk.is_empty() {
                continue;
            }
            let mut mp = Parser::new(chunk);
            mp.next_id = self.next_id;
            mp.next_anon = self.next_anon;
            let (name, rule) = mp.rule()?;
            mp.finish()?;
            self.next_id = mp.next_id;
            self.next_anon = mp.next_anon;
            if let Some(m) = methods.iter_mut().find(|m| m.name == name) {
                m.rules.push(rule);
            } else {
                methods.push(FunDef { span: rule.span, name, sig: None, rules: vec![rule] });
            }
        }
        Ok(InstanceDecl { span, class, context: sig.context, ty_con, ty_args, methods })
    }
}

fn split_semis(toks: Vec<Token>) -> Vec<Vec<Token>> {
    let mut out: Vec<Vec<Token>> = vec![Vec::new()];
    let mut depth = 0i32;
    for t in toks {
        match t.tok {
            Tok::LParen | Tok::LBracket => depth += 1,
            Tok::RParen | Tok::RBracket => depth -= 1,
            Tok::Semi if depth == 0 => {
                out.push(Vec::new());
                continue;
            }
            _ => {}
        }
        out.last_mut().unwrap().push(t);
    }
    out
}

/// Parses a standalone expression (used by tests and `:type`).
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks);
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a goal: an expression with an optional `where x, y free` suffix.
/// Free variables declared by the suffix or by a `let ... free in` spine are
/// reported in answer bindings.
pub fn parse_goal(src: &str) -> Result<Goal, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks);
    let expr = p.expr()?;
    let mut frees = Vec::new();
    if p.peek() == Some(&Tok::Where) {
        let block = p.where_block()?;
        if !block.wheres.is_empty() {
            return Err(ParseError::new(
                p.peek_span(),
                "goal `where` may only declare free variables; use `let x = e in ...` for bindings".to_string(),
            ));
        }
        frees = block.frees;
    }
    p.finish()?;
    // Collect the top-level `let ... free in` spine for answer reporting.
    let mut spine = &expr;
    let mut spine_frees = Vec::new();
    while let Expr::FreeIn(_, _, names, body) = spine {
        spine_frees.extend(names.iter().cloned());
        spine = body;
    }
    let expr = if frees.is_empty() {
        expr
    } else {
        let sp = expr.span();
        let id = {
            let id = p.next_id + 1;
            p.next_id = id;
            NodeId(id)
        };
        Expr::FreeIn(id, sp, frees.clone(), Box::new(expr))
    };
    spine_frees.extend(frees);
    Ok(Goal { expr, frees: spine_frees })
}
