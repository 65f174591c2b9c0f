//! Rendering of fully evaluated answers.
//!
//! Values print in source syntax: constructor applications, `[1,2]` lists,
//! `"ab"` character lists, tuples. Unbound logic variables print as `_`, or
//! as `_1`, `_2`, ... when the same variable occurs more than once so
//! sharing stays visible.

use crate::ast::Lit;
use crate::machine::{Addr, Cell, Machine};
use std::collections::{HashMap, HashSet};
use std::fmt::Write;

/// Renders the goal's free-variable bindings (sorted by name) and its value.
pub fn render_answer(m: &Machine) -> (Vec<(String, String)>, String) {
    let mut binds: Vec<(String, Addr)> = m.bindings().to_vec();
    binds.sort_by(|a, b| a.0.cmp(&b.0));

    let mut r = Renderer { m, occurs: HashMap::new(), names: HashMap::new(), next: 0 };
    for (_, a) in &binds {
        r.count(*a, &mut HashSet::new());
    }
    r.count(m.root(), &mut HashSet::new());

    let rendered = binds
        .iter()
        .map(|(n, a)| (n.clone(), r.render(*a, 0, &mut HashSet::new())))
        .collect();
    let value = r.render(m.root(), 0, &mut HashSet::new());
    (rendered, value)
}

/// Formats one answer line: `{x = S Z, y = Z} True`, or just the value when
/// the goal had no free variables.
pub fn answer_line(bindings: &[(String, String)], value: &str) -> String {
    if bindings.is_empty() {
        return value.to_string();
    }
    let mut out = String::from("{");
    for (i, (n, v)) in bindings.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{n} = {v}").unwrap();
    }
    write!(out, "}} {value}").unwrap();
    out
}

struct Renderer<'a> {
    m: &'a Machine,
    /// How often each unbound variable address occurs across the answer.
    occurs: HashMap<Addr, u32>,
    names: HashMap<Addr, String>,
    next: u32,
}

impl Renderer<'_> {
    fn count(&mut self, a: Addr, path: &mut HashSet<Addr>) {
        let a = self.m.resolve_read(a);
        if !path.insert(a) {
            return;
        }
        match self.m.cell(a) {
            Cell::FreeCell { .. } => {
                *self.occurs.entry(a).or_insert(0) += 1;
            }
            Cell::ConC(_, args) => {
                for &x in args {
                    self.count(x, path);
                }
            }
            _ => {}
        }
        path.remove(&a);
    }

    fn var_name(&mut self, a: Addr) -> String {
        if self.occurs.get(&a).copied().unwrap_or(0) <= 1 {
            return "_".to_string();
        }
        if let Some(n) = self.names.get(&a) {
            return n.clone();
        }
        self.next += 1;
        let n = format!("_{}", self.next);
        self.names.insert(a, n.clone());
        n
    }

    /// `prec` is the surrounding precedence: 0 top level, 6 inside a cons
    /// chain, 11 a constructor argument.
    fn render(&mut self, a: Addr, prec: u8, path: &mut HashSet<Addr>) -> String {
        let a = self.m.resolve_read(a);
        if !path.insert(a) {
            return "<cycle>".to_string();
        }
        let out = match self.m.cell(a) {
            Cell::LitC(Lit::Int(n)) if *n < 0 && prec > 0 => format!("({n})"),
            Cell::LitC(l) => l.to_string(),
            Cell::FreeCell { .. } => self.var_name(a),
            Cell::ConC(name, args) => self.con(a, name, args, prec, path),
            Cell::Closure(..) | Cell::PartialFun(..) | Cell::PartialCon(..) => {
                "<function>".to_string()
            }
            _ => "<thunk>".to_string(),
        };
        path.remove(&a);
        out
    }

    fn con(&mut self, addr: Addr, name: &str, args: &[Addr], prec: u8, path: &mut HashSet<Addr>) -> String {
        if name == ":" || name == "[]" {
            return self.list(addr, prec, path);
        }
        if name.starts_with("(,") {
            let parts: Vec<String> =
                args.iter().map(|&x| self.render(x, 0, path)).collect();
            return format!("({})", parts.join(","));
        }
        if args.is_empty() {
            return name.to_string();
        }
        let mut out = name.to_string();
        for &x in args {
            out.push(' ');
            out.push_str(&self.render(x, 11, path));
        }
        if prec > 10 {
            format!("({out})")
        } else {
            out
        }
    }

    /// Proper lists print as `[1,2]` (or `"ab"` when every element is a
    /// character); a list ending in something else prints as a cons chain.
    fn list(&mut self, addr: Addr, prec: u8, path: &mut HashSet<Addr>) -> String {
        let mut elems: Vec<Addr> = vec![];
        let mut spine: Vec<Addr> = vec![];
        let mut cur = self.m.resolve_read(addr);
        let closed = loop {
            if spine.contains(&cur) {
                break None;
            }
            match self.m.cell(cur) {
                Cell::ConC(n, args) if n == ":" => {
                    elems.push(args[0]);
                    spine.push(cur);
                    cur = self.m.resolve_read(args[1]);
                }
                Cell::ConC(n, _) if n == "[]" => break Some(()),
                _ => break None,
            }
        };
        if closed.is_some() {
            let chars: Option<String> = elems
                .iter()
                .map(|&e| match self.m.cell(self.m.resolve_read(e)) {
                    Cell::LitC(Lit::Char(c)) => Some(*c),
                    _ => None,
                })
                .collect();
            if let Some(s) = chars {
                if !elems.is_empty() {
                    return format!("\"{}\"", escape_string(&s));
                }
            }
            let parts: Vec<String> =
                elems.iter().map(|&e| self.render(e, 0, path)).collect();
            return format!("[{}]", parts.join(","));
        }
        // Improper or cyclic tail: fall back to explicit cons syntax.
        let mut parts: Vec<String> =
            elems.iter().map(|&e| self.render(e, 6, path)).collect();
        parts.push(if spine.contains(&cur) {
            "<cycle>".to_string()
        } else {
            self.render(cur, 6, path)
        });
        let out = parts.join(" : ");
        if prec > 5 {
            format!("({out})")
        } else {
            out
        }
    }
}

fn escape_string(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            c => out.push(c),
        }
    }
    out
}
