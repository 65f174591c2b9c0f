//! Re-parseable rendering of surface expressions and type expressions.

use crate::ast::{Expr, Lit, TypeExpr};

#[derive(Clone, Copy, PartialEq)]
pub enum Assoc {
    Right,
    None,
}

/// Binding levels of the infix operators; application binds tighter than all.
pub fn op_prec(name: &str) -> Option<(u8, Assoc)> {
    match name {
        "?" => Some((1, Assoc::Right)),
        "||" => Some((2, Assoc::Right)),
        "&&" => Some((3, Assoc::Right)),
        "==" | "/=" | "===" | "=:=" => Some((4, Assoc::None)),
        ":" | "++" => Some((5, Assoc::Right)),
        _ => None,
    }
}

const APP_PREC: u8 = 10;

fn is_op_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().next().unwrap().is_alphanumeric() && name != "_"
}

fn head_name(e: &Expr) -> Option<&str> {
    match e {
        Expr::Var(_, _, n) | Expr::Con(_, _, n) => Some(n),
        _ => None,
    }
}

fn atom_name(name: &str, out: &mut String) {
    if is_op_name(name) {
        out.push('(');
        out.push_str(name);
        out.push(')');
    } else {
        out.push_str(name);
    }
}

pub fn show_lit(l: &Lit) -> String {
    match l {
        Lit::Int(n) => n.to_string(),
        Lit::Char(c) => crate::ast::show_char(*c),
    }
}

fn walk(e: &Expr, min: u8, out: &mut String) {
    // Infix reconstruction: App(App(op, l), r) with a known operator head.
    let (head, args) = e.spine();
    if args.len() == 2 {
        if let Some(op) = head_name(head) {
            if let Some((lvl, assoc)) = op_prec(op) {
                let wrap = lvl < min;
                if wrap {
                    out.push('(');
                }
                let (lmin, rmin) = match assoc {
                    Assoc::Right => (lvl + 1, lvl),
                    Assoc::None => (lvl + 1, lvl + 1),
                };
                walk(args[0], lmin, out);
                out.push(' ');
                out.push_str(op);
                out.push(' ');
                walk(args[1], rmin, out);
                if wrap {
                    out.push(')');
                }
                return;
            }
        }
    }
    // Saturated tuple constructors print in parenthesized form.
    if let Some(name) = head_name(head) {
        if name.starts_with("(,") && args.len() == name.len() - 1 {
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                walk(a, 0, out);
            }
            out.push(')');
            return;
        }
    }
    if !args.is_empty() {
        let wrap = APP_PREC < min;
        if wrap {
            out.push('(');
        }
        walk(head, APP_PREC + 1, out);
        for a in args {
            out.push(' ');
            walk(a, APP_PREC + 1, out);
        }
        if wrap {
            out.push(')');
        }
        return;
    }
    match e {
        Expr::Var(_, _, n) | Expr::Con(_, _, n) => atom_name(n, out),
        Expr::Lit(_, _, l) => {
            let s = show_lit(l);
            if s.starts_with('-') && min > 0 {
                out.push('(');
                out.push_str(&s);
                out.push(')');
            } else {
                out.push_str(&s);
            }
        }
        Expr::Anon(..) => out.push('_'),
        Expr::Lambda(_, _, params, body) => {
            let wrap = min > 0;
            if wrap {
                out.push('(');
            }
            out.push('\\');
            out.push_str(&params.join(" "));
            out.push_str(" -> ");
            walk(body, 0, out);
            if wrap {
                out.push(')');
            }
        }
        Expr::Let(_, _, name, bound, body) => {
            let wrap = min > 0;
            if wrap {
                out.push('(');
            }
            out.push_str("let ");
            out.push_str(name);
            out.push_str(" = ");
            walk(bound, 0, out);
            out.push_str(" in ");
            walk(body, 0, out);
            if wrap {
                out.push(')');
            }
        }
        Expr::FreeIn(_, _, names, body) => {
            let wrap = min > 0;
            if wrap {
                out.push('(');
            }
            out.push_str("let ");
            out.push_str(&names.join(", "));
            out.push_str(" free in ");
            walk(body, 0, out);
            if wrap {
                out.push(')');
            }
        }
        Expr::Annot(_, _, inner, ty) => {
            let wrap = min > 0;
            if wrap {
                out.push('(');
            }
            walk(inner, 1, out);
            out.push_str(" :: ");
            out.push_str(&show_type_expr(ty));
            if wrap {
                out.push(')');
            }
        }
        Expr::App(..) => unreachable!("handled via spine"),
    }
}

pub fn show_expr(e: &Expr) -> String {
    let mut s = String::new();
    walk(e, 0, &mut s);
    s
}

fn walk_type(t: &TypeExpr, atom: bool, out: &mut String) {
    match t {
        TypeExpr::Var(n) => out.push_str(n),
        TypeExpr::Con(name, args) => match name.as_str() {
            "[]" => {
                out.push('[');
                walk_type(&args[0], false, out);
                out.push(']');
            }
            t if t.starts_with("(,") => {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    walk_type(a, false, out);
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
                    walk_type(a, true, out);
                }
                if wrap {
                    out.push(')');
                }
            }
        },
        TypeExpr::Fun(a, b) => {
            if atom {
                out.push('(');
            }
            let left_paren = matches!(a.as_ref(), TypeExpr::Fun(..));
            if left_paren {
                out.push('(');
            }
            walk_type(a, false, out);
            if left_paren {
                out.push(')');
            }
            out.push_str(" -> ");
            walk_type(b, false, out);
            if atom {
                out.push(')');
            }
        }
    }
}

pub fn show_type_expr(t: &TypeExpr) -> String {
    let mut s = String::new();
    walk_type(t, false, &mut s);
    s
}

/// Structural equality ignoring node ids, spans and generated anon names;
/// used to check that printing then re-parsing preserves an expression.
pub fn same_shape(a: &Expr, b: &Expr) -> bool {
    use Expr::*;
    match (a, b) {
        (Var(_, _, x), Var(_, _, y)) | (Con(_, _, x), Con(_, _, y)) => x == y,
        (Lit(_, _, x), Lit(_, _, y)) => x == y,
        (Anon(..), Anon(..)) => true,
        (App(_, f, x), App(_, g, y)) => same_shape(f, g) && same_shape(x, y),
        (Lambda(_, _, p, e), Lambda(_, _, q, f)) => p == q && same_shape(e, f),
        (Let(_, _, n, e1, e2), Let(_, _, m, f1, f2)) => n == m && same_shape(e1, f1) && same_shape(e2, f2),
        (FreeIn(_, _, ns, e), FreeIn(_, _, ms, f)) => ns == ms && same_shape(e, f),
        (Annot(_, _, e, t), Annot(_, _, f, u)) => same_shape(e, f) && show_type_expr(t) == show_type_expr(u),
        _ => false,
    }
}
