//! Graph-reduction evaluator with logic variables and branching.
//!
//! The heap copies on write at page granularity, so a choice point clones
//! the whole machine cheaply and each branch continues on its own copy; a
//! thunk evaluated in a branch is updated in that branch only, which is
//! exactly call-time choice. Free variables carry an optional runtime Data
//! dictionary and are instantiated one constructor layer at a time when a
//! rule demands them.

use crate::analyze::method_global;
use crate::ast::Lit;
use crate::core_ir::*;
use crate::error::FailReason;
use crate::types::Type;
use im::HashMap as PMap;
use im::HashSet as PSet;
use std::collections::HashMap;
use std::rc::Rc;

pub type Addr = u32;
pub type Env = PMap<String, Addr>;

/// Cells per heap page.
const PAGE: usize = 64;

/// Dense-address cell store with page-level copy-on-write. Cloning shares
/// every page; the first write a branch makes to a page copies just that
/// page.
#[derive(Debug, Clone, Default)]
struct Heap {
    pages: Vec<Rc<Vec<Cell>>>,
    len: usize,
}

impl Heap {
    fn len(&self) -> usize {
        self.len
    }

    fn get(&self, a: Addr) -> &Cell {
        &self.pages[a as usize / PAGE][a as usize % PAGE]
    }

    fn set(&mut self, a: Addr, c: Cell) {
        Rc::make_mut(&mut self.pages[a as usize / PAGE])[a as usize % PAGE] = c;
    }

    fn push(&mut self, c: Cell) -> Addr {
        if self.len % PAGE == 0 {
            self.pages.push(Rc::new(Vec::with_capacity(PAGE)));
        }
        Rc::make_mut(self.pages.last_mut().expect("page")).push(c);
        let a = self.len as Addr;
        self.len += 1;
        a
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    /// Unevaluated expression closed over an environment.
    Thunk(Rc<CoreExpr>, Env),
    /// Saturated call, ready for rule matching or a builtin.
    FunApp(Rc<CoreFun>, Vec<Addr>),
    /// Application whose head is not yet known to be a function value.
    Apply(Addr, Vec<Addr>),
    /// Guard and body; the guard must come out True or the branch fails.
    CondCell(Addr, Addr),
    ChoiceCell(Addr, Addr),
    ConC(String, Vec<Addr>),
    LitC(Lit),
    Closure(Vec<String>, Rc<CoreExpr>, Env),
    PartialFun(Rc<CoreFun>, Vec<Addr>),
    PartialCon(String, usize, Vec<Addr>),
    /// Unbound logic variable; the dictionary drives instantiation.
    FreeCell { dict: Option<Addr> },
    /// Class, type constructor, argument dictionaries.
    DictC(String, String, Vec<Addr>),
    /// Method selection from a dictionary.
    ProjCell(Addr, String),
    Ind(Addr),
    /// Reserved slot, filled before anything can reach it.
    Hole,
}

impl Cell {
    pub fn is_whnf(&self) -> bool {
        matches!(
            self,
            Cell::ConC(..)
                | Cell::LitC(..)
                | Cell::Closure(..)
                | Cell::PartialFun(..)
                | Cell::PartialCon(..)
                | Cell::FreeCell { .. }
                | Cell::DictC(..)
        )
    }
}

#[derive(Debug)]
pub enum Step {
    Progress,
    /// Root and goal bindings are in normal form.
    Done,
    Failed(FailReason),
    /// Self continues as the left alternative, the returned machine as the right.
    Fork(Box<Machine>),
}

/// Outcome of inspecting one cell during reduction.
enum Act {
    Need(Addr),
    Narrow(Addr),
    Rewrite(Cell, bool),
    Fail(FailReason),
}

enum Trial {
    Need(Addr),
    Narrow(Addr),
    Clash,
    Match(Vec<(String, Addr)>),
}

#[derive(Debug, Clone)]
pub struct Machine {
    prog: Rc<CoreProgram>,
    heap: Heap,
    /// Cells whose weak-head normal form is demanded, innermost last.
    stack: Vec<Addr>,
    /// Normalization worklist and the already-normalized set.
    todo: Vec<Addr>,
    norm: PSet<Addr>,
    root: Addr,
    bindings: Vec<(String, Addr)>,
    /// Rule applications and builtin reductions taken on this branch.
    pub steps: u64,
    /// Choice points passed on this branch.
    pub depth: u32,
}

impl Machine {
    pub fn new(prog: Rc<CoreProgram>, goal: CoreExpr) -> Machine {
        let mut m = Machine {
            prog,
            heap: Heap::default(),
            stack: vec![],
            todo: vec![],
            norm: PSet::new(),
            root: 0,
            bindings: vec![],
            steps: 0,
            depth: 0,
        };
        // The goal's declared free variables sit on a top-level Free spine;
        // peel it so their addresses are known for answer bindings.
        let mut env: Env = PMap::new();
        let mut expr = goal;
        while let CoreExpr::Free(vars, body) = expr {
            for fv in vars {
                let dict = fv.dict.map(|d| m.thunk(&d, &env));
                let a = m.alloc(Cell::FreeCell { dict });
                env.insert(fv.name.clone(), a);
                m.bindings.push((fv.name, a));
            }
            expr = *body;
        }
        m.root = m.thunk(&expr, &env);
        for (_, a) in m.bindings.iter().rev() {
            m.todo.push(*a);
        }
        m.todo.push(m.root);
        m
    }

    pub fn root(&self) -> Addr {
        self.root
    }

    pub fn bindings(&self) -> &[(String, Addr)] {
        &self.bindings
    }

    pub fn cell(&self, a: Addr) -> &Cell {
        self.heap.get(a)
    }

    /// Read-only indirection chasing; stops rather than loops on a cycle.
    pub fn resolve_read(&self, mut a: Addr) -> Addr {
        let mut hops = 0usize;
        while let Cell::Ind(b) = self.cell(a) {
            a = *b;
            hops += 1;
            if hops > self.heap.len() {
                break;
            }
        }
        a
    }

    fn alloc(&mut self, c: Cell) -> Addr {
        self.heap.push(c)
    }

    fn thunk(&mut self, e: &CoreExpr, env: &Env) -> Addr {
        self.alloc(Cell::Thunk(Rc::new(e.clone()), env.clone()))
    }

    /// Chases indirections with path compression.
    fn resolve(&mut self, a: Addr) -> Result<Addr, FailReason> {
        let mut cur = a;
        let mut seen = 0usize;
        while let Cell::Ind(b) = self.cell(cur) {
            cur = *b;
            seen += 1;
            if seen > self.heap.len() {
                return Err(FailReason::NonproductiveLoop);
            }
        }
        if cur != a {
            self.heap.set(a, Cell::Ind(cur));
        }
        Ok(cur)
    }

    fn push_eval(&mut self, a: Addr) -> Step {
        let r = match self.resolve(a) {
            Ok(r) => r,
            Err(e) => return Step::Failed(e),
        };
        if self.cell(r).is_whnf() {
            return Step::Progress;
        }
        if self.stack.contains(&r) {
            return Step::Failed(FailReason::NonproductiveLoop);
        }
        self.stack.push(r);
        Step::Progress
    }

    pub fn step(&mut self) -> Step {
        let Some(&top) = self.stack.last() else {
            return self.advance_todo();
        };
        let a = match self.resolve(top) {
            Ok(a) => a,
            Err(e) => return Step::Failed(e),
        };
        if a != top {
            *self.stack.last_mut().expect("nonempty") = a;
        }
        let cell = self.cell(a).clone();
        if cell.is_whnf() {
            self.stack.pop();
            return Step::Progress;
        }
        match cell {
            Cell::Thunk(e, env) => {
                self.flatten(a, &e, &env);
                Step::Progress
            }
            Cell::FunApp(f, args) => {
                let act = self.apply_fun(&f, &args);
                self.handle_act(a, act)
            }
            Cell::Apply(h, args) => self.reduce_apply(a, h, &args),
            Cell::CondCell(g, b) => {
                let rg = match self.resolve(g) {
                    Ok(r) => r,
                    Err(e) => return Step::Failed(e),
                };
                match self.cell(rg).clone() {
                    Cell::ConC(c, _) if c == "True" => {
                        self.heap.set(a, Cell::Ind(b));
                        Step::Progress
                    }
                    // A free Boolean guard: the type is known, no dictionary
                    // needed to instantiate it.
                    Cell::FreeCell { .. } => {
                        let fa = self.alloc(Cell::ConC("False".into(), vec![]));
                        let ta = self.alloc(Cell::ConC("True".into(), vec![]));
                        self.heap.set(rg, Cell::ChoiceCell(fa, ta));
                        self.steps += 1;
                        Step::Progress
                    }
                    c if c.is_whnf() => Step::Failed(FailReason::GuardFalse),
                    _ => self.push_eval(rg),
                }
            }
            Cell::ChoiceCell(l, r) => {
                self.compress_frontier();
                let mut right = self.clone();
                right.heap.set(a, Cell::Ind(r));
                right.depth += 1;
                self.heap.set(a, Cell::Ind(l));
                self.depth += 1;
                Step::Fork(Box::new(right))
            }
            Cell::ProjCell(d, m) => {
                let rd = match self.resolve(d) {
                    Ok(r) => r,
                    Err(e) => return Step::Failed(e),
                };
                match self.cell(rd).clone() {
                    Cell::DictC(_, tycon, dargs) => {
                        let name = method_global(&m, &tycon);
                        let f = self
                            .prog
                            .fun(&name)
                            .unwrap_or_else(|| panic!("missing method implementation {name}"))
                            .clone();
                        let cell = if dargs.len() == f.arity {
                            Cell::FunApp(f, dargs)
                        } else {
                            Cell::PartialFun(f, dargs)
                        };
                        self.heap.set(a, cell);
                        Step::Progress
                    }
                    c if c.is_whnf() => {
                        Step::Failed(FailReason::Clash(head_name(&c), "dictionary".into()))
                    }
                    _ => self.push_eval(rd),
                }
            }
            Cell::Ind(_) => unreachable!("resolved above"),
            _ => unreachable!("whnf handled above"),
        }
    }

    /// Shortens the indirection chains the evaluation stack can see, so both
    /// sides of a fork inherit one-hop paths. Without this, every discarded
    /// alternative re-walks the chains its ancestors built up: a chain of n
    /// choices behind one variable would cost n * n/2 reads overall.
    fn compress_frontier(&mut self) {
        for i in 0..self.stack.len() {
            let Ok(r) = self.resolve(self.stack[i]) else { continue };
            self.stack[i] = r;
            let kids: Vec<Addr> = match self.cell(r) {
                Cell::FunApp(_, args) | Cell::ConC(_, args) => args.clone(),
                Cell::Apply(h, args) => {
                    let mut v = vec![*h];
                    v.extend_from_slice(args);
                    v
                }
                Cell::CondCell(g, b) => vec![*g, *b],
                _ => vec![],
            };
            for k in kids {
                let _ = self.resolve(k);
            }
        }
    }

    fn handle_act(&mut self, a: Addr, act: Act) -> Step {
        match act {
            Act::Need(b) => self.push_eval(b),
            Act::Narrow(v) => match self.narrow_var(v) {
                Ok(None) => Step::Progress,
                Ok(Some(need)) => self.push_eval(need),
                Err(e) => Step::Failed(e),
            },
            Act::Rewrite(cell, counted) => {
                self.heap.set(a, cell);
                if counted {
                    self.steps += 1;
                }
                Step::Progress
            }
            Act::Fail(e) => Step::Failed(e),
        }
    }

    /// Pulls the next non-normalized cell out of the worklist.
    fn advance_todo(&mut self) -> Step {
        loop {
            let Some(t) = self.todo.pop() else {
                return Step::Done;
            };
            let r = match self.resolve(t) {
                Ok(r) => r,
                Err(e) => return Step::Failed(e),
            };
            if self.norm.contains(&r) {
                continue;
            }
            let c = self.cell(r).clone();
            if !c.is_whnf() {
                self.todo.push(r);
                self.stack.push(r);
                return Step::Progress;
            }
            self.norm.insert(r);
            if let Cell::ConC(_, args) = c {
                for &x in args.iter().rev() {
                    self.todo.push(x);
                }
            }
        }
    }

    /// Rewrites a thunk into a graph node, allocating its parts.
    fn flatten(&mut self, a: Addr, e: &CoreExpr, env: &Env) {
        let cell = match e {
            CoreExpr::Var(x) => {
                let t = *env.get(x).unwrap_or_else(|| panic!("unbound local {x}"));
                Cell::Ind(t)
            }
            CoreExpr::Global(g) => self.global_cell(g),
            CoreExpr::Con(c) => {
                let n = self.con_arity(c);
                if n == 0 {
                    Cell::ConC(c.clone(), vec![])
                } else {
                    Cell::PartialCon(c.clone(), n, vec![])
                }
            }
            CoreExpr::Lit(l) => Cell::LitC(l.clone()),
            CoreExpr::App(h, args) => {
                let argaddrs: Vec<Addr> = args.iter().map(|x| self.thunk(x, env)).collect();
                self.app_cell(h, argaddrs, env)
            }
            CoreExpr::Lam(ps, b) => Cell::Closure(ps.clone(), b.clone(), env.clone()),
            CoreExpr::Let(binds, body) => {
                let mut env2 = env.clone();
                let addrs: Vec<Addr> = binds
                    .iter()
                    .map(|(n, _)| {
                        let x = self.alloc(Cell::Hole);
                        env2.insert(n.clone(), x);
                        x
                    })
                    .collect();
                for ((_, bexpr), &ad) in binds.iter().zip(&addrs) {
                    self.heap.set(ad, Cell::Thunk(Rc::new(bexpr.clone()), env2.clone()));
                }
                Cell::Thunk(Rc::new((**body).clone()), env2)
            }
            CoreExpr::Free(vars, body) => {
                let mut env2 = env.clone();
                for fv in vars {
                    let dict = fv.dict.as_ref().map(|d| self.thunk(d, env));
                    let va = self.alloc(Cell::FreeCell { dict });
                    env2.insert(fv.name.clone(), va);
                }
                Cell::Thunk(Rc::new((**body).clone()), env2)
            }
            CoreExpr::Cond(g, b) => {
                let ga = self.thunk(g, env);
                let ba = self.thunk(b, env);
                Cell::CondCell(ga, ba)
            }
            CoreExpr::Choice(l, r) => {
                let la = self.thunk(l, env);
                let ra = self.thunk(r, env);
                Cell::ChoiceCell(la, ra)
            }
            CoreExpr::MkDict(class, tycon, args) => {
                let da: Vec<Addr> = args.iter().map(|x| self.thunk(x, env)).collect();
                Cell::DictC(class.clone(), tycon.clone(), da)
            }
            CoreExpr::Proj(d, m, _) => {
                let da = self.thunk(d, env);
                Cell::ProjCell(da, m.clone())
            }
        };
        self.heap.set(a, cell);
    }

    fn con_arity(&self, c: &str) -> usize {
        self.prog.data.con_arity(c).unwrap_or_else(|| panic!("unknown constructor {c}"))
    }

    fn global_cell(&mut self, g: &str) -> Cell {
        let f = self.prog.fun(g).unwrap_or_else(|| panic!("unknown global {g}")).clone();
        if f.arity == 0 {
            Cell::FunApp(f, vec![])
        } else {
            Cell::PartialFun(f, vec![])
        }
    }

    fn app_cell(&mut self, head: &CoreExpr, args: Vec<Addr>, env: &Env) -> Cell {
        match head {
            CoreExpr::Global(g) => {
                let f = self.prog.fun(g).unwrap_or_else(|| panic!("unknown global {g}")).clone();
                match args.len().cmp(&f.arity) {
                    std::cmp::Ordering::Equal => Cell::FunApp(f, args),
                    std::cmp::Ordering::Less => Cell::PartialFun(f, args),
                    std::cmp::Ordering::Greater => {
                        let (now, rest) = args.split_at(f.arity);
                        let inner = self.alloc(Cell::FunApp(f, now.to_vec()));
                        Cell::Apply(inner, rest.to_vec())
                    }
                }
            }
            CoreExpr::Con(c) => {
                let n = self.con_arity(c);
                match args.len().cmp(&n) {
                    std::cmp::Ordering::Equal => Cell::ConC(c.clone(), args),
                    std::cmp::Ordering::Less => Cell::PartialCon(c.clone(), n, args),
                    std::cmp::Ordering::Greater => {
                        let (now, rest) = args.split_at(n);
                        let inner = self.alloc(Cell::ConC(c.clone(), now.to_vec()));
                        Cell::Apply(inner, rest.to_vec())
                    }
                }
            }
            other => {
                let ha = self.thunk(other, env);
                Cell::Apply(ha, args)
            }
        }
    }

    fn reduce_apply(&mut self, a: Addr, h: Addr, args: &[Addr]) -> Step {
        let rh = match self.resolve(h) {
            Ok(r) => r,
            Err(e) => return Step::Failed(e),
        };
        let hc = self.cell(rh).clone();
        if !hc.is_whnf() {
            return self.push_eval(rh);
        }
        let cell = match hc {
            Cell::Closure(ps, body, cenv) => {
                if args.len() >= ps.len() {
                    let mut env2 = cenv;
                    for (p, &x) in ps.iter().zip(args) {
                        env2.insert(p.clone(), x);
                    }
                    if args.len() == ps.len() {
                        Cell::Thunk(body, env2)
                    } else {
                        let inner = self.alloc(Cell::Thunk(body, env2));
                        Cell::Apply(inner, args[ps.len()..].to_vec())
                    }
                } else {
                    let mut env2 = cenv;
                    for (p, &x) in ps.iter().zip(args) {
                        env2.insert(p.clone(), x);
                    }
                    Cell::Closure(ps[args.len()..].to_vec(), body, env2)
                }
            }
            Cell::PartialFun(f, mut got) => {
                got.extend_from_slice(args);
                match got.len().cmp(&f.arity) {
                    std::cmp::Ordering::Less => Cell::PartialFun(f, got),
                    std::cmp::Ordering::Equal => Cell::FunApp(f, got),
                    std::cmp::Ordering::Greater => {
                        let rest = got.split_off(f.arity);
                        let inner = self.alloc(Cell::FunApp(f, got));
                        Cell::Apply(inner, rest)
                    }
                }
            }
            Cell::PartialCon(c, n, mut got) => {
                got.extend_from_slice(args);
                match got.len().cmp(&n) {
                    std::cmp::Ordering::Less => Cell::PartialCon(c, n, got),
                    std::cmp::Ordering::Equal => Cell::ConC(c, got),
                    std::cmp::Ordering::Greater => {
                        return Step::Failed(FailReason::FunctionalValue)
                    }
                }
            }
            _ => return Step::Failed(FailReason::FunctionalValue),
        };
        self.heap.set(a, cell);
        Step::Progress
    }

    fn apply_fun(&mut self, f: &Rc<CoreFun>, args: &[Addr]) -> Act {
        match &f.imp {
            FunImpl::Prim(p) => self.prim(*p, args),
            FunImpl::Rules(rules) => {
                if rules.is_empty() {
                    return Act::Fail(FailReason::NoRuleMatched(f.name.clone()));
                }
                let mut matched: Vec<(Rc<CoreRule>, Vec<(String, Addr)>)> = vec![];
                for r in rules {
                    match self.match_pats(&r.pats, args) {
                        Trial::Need(b) => return Act::Need(b),
                        Trial::Narrow(v) => return Act::Narrow(v),
                        Trial::Clash => {}
                        Trial::Match(binds) => matched.push((r.clone(), binds)),
                    }
                }
                if matched.is_empty() {
                    return Act::Fail(FailReason::NoRuleMatched(f.name.clone()));
                }
                // Every matching rule is one alternative; several matches
                // make a choice, tried left to right.
                let mut cells: Vec<Cell> = matched
                    .into_iter()
                    .map(|(r, binds)| {
                        let env: Env = binds.into_iter().collect();
                        Cell::Thunk(r.body.clone(), env)
                    })
                    .collect();
                if cells.len() == 1 {
                    return Act::Rewrite(cells.pop().expect("one"), true);
                }
                let mut addrs: Vec<Addr> = cells.into_iter().map(|c| self.alloc(c)).collect();
                let mut rest = addrs.pop().expect("nonempty");
                while addrs.len() > 1 {
                    let left = addrs.pop().expect("len > 1");
                    rest = self.alloc(Cell::ChoiceCell(left, rest));
                }
                Act::Rewrite(Cell::ChoiceCell(addrs.pop().expect("first"), rest), true)
            }
        }
    }

    fn match_pats(&self, pats: &[CorePat], args: &[Addr]) -> Trial {
        debug_assert_eq!(pats.len(), args.len());
        let mut binds = vec![];
        let mut work: Vec<(&CorePat, Addr)> = pats.iter().zip(args.iter().copied()).rev().collect();
        while let Some((p, a)) = work.pop() {
            let a = self.resolve_read(a);
            match p {
                CorePat::Var(x) => binds.push((x.clone(), a)),
                CorePat::Lit(l) => match self.cell(a) {
                    Cell::LitC(m) => {
                        if m != l {
                            return Trial::Clash;
                        }
                    }
                    Cell::FreeCell { .. } => return Trial::Narrow(a),
                    c if c.is_whnf() => return Trial::Clash,
                    _ => return Trial::Need(a),
                },
                CorePat::Con(c, subs) => match self.cell(a) {
                    Cell::ConC(c2, cargs) => {
                        if c2 != c {
                            return Trial::Clash;
                        }
                        for (sp, &sa) in subs.iter().zip(cargs).rev() {
                            work.push((sp, sa));
                        }
                    }
                    Cell::FreeCell { .. } => return Trial::Narrow(a),
                    c if c.is_whnf() => return Trial::Clash,
                    _ => return Trial::Need(a),
                },
            }
        }
        Trial::Match(binds)
    }

    /// Instantiates an unbound variable one constructor layer deep, guided
    /// by its Data dictionary. `Ok(Some(d))` asks for the dictionary first.
    fn narrow_var(&mut self, v: Addr) -> Result<Option<Addr>, FailReason> {
        let rv = self.resolve(v)?;
        let Cell::FreeCell { dict } = self.cell(rv).clone() else {
            return Ok(None);
        };
        let Some(d) = dict else {
            return Err(FailReason::NoDict);
        };
        let rd = self.resolve(d)?;
        let dc = self.cell(rd).clone();
        let Cell::DictC(_, tycon, dargs) = dc else {
            if dc.is_whnf() {
                return Err(FailReason::NoDict);
            }
            return Ok(Some(rd));
        };
        if tycon == "Int" || tycon == "Char" {
            let name = if tycon == "Int" { "enumInt#" } else { "enumChar#" };
            let f = self.prog.fun(name).expect("enum builtin").clone();
            let zero = self.alloc(Cell::LitC(Lit::Int(0)));
            self.heap.set(rv, Cell::FunApp(f, vec![zero]));
            self.steps += 1;
            return Ok(None);
        }
        let inst = self
            .prog
            .classes
            .instance("Data", &tycon)
            .unwrap_or_else(|| panic!("dictionary without instance: Data {tycon}"));
        let param_dicts: HashMap<usize, Addr> =
            inst.context.iter().map(|(_, k)| *k).zip(dargs.iter().copied()).collect();
        let info = self
            .prog
            .data
            .types
            .get(&tycon)
            .unwrap_or_else(|| panic!("unknown data type {tycon}"))
            .clone();
        let mut skels: Vec<Cell> = vec![];
        for ci in &info.cons {
            let mut argaddrs = vec![];
            for ty in &ci.args {
                let dict = self.dict_for_type(ty, &param_dicts);
                argaddrs.push(self.alloc(Cell::FreeCell { dict }));
            }
            skels.push(Cell::ConC(ci.name.clone(), argaddrs));
        }
        let cell = if skels.len() == 1 {
            skels.pop().expect("one")
        } else {
            let mut addrs: Vec<Addr> = skels.into_iter().map(|c| self.alloc(c)).collect();
            let mut rest = addrs.pop().expect("nonempty");
            while addrs.len() > 1 {
                let left = addrs.pop().expect("len > 1");
                rest = self.alloc(Cell::ChoiceCell(left, rest));
            }
            Cell::ChoiceCell(addrs.pop().expect("first"), rest)
        };
        self.heap.set(rv, cell);
        self.steps += 1;
        Ok(None)
    }

    /// Builds a Data dictionary for a constructor argument type, mapping
    /// parameter indices through the parent dictionary's arguments.
    fn dict_for_type(&mut self, ty: &Type, params: &HashMap<usize, Addr>) -> Option<Addr> {
        match ty {
            Type::Var(i) => params.get(&(*i as usize)).copied(),
            Type::Con(t, targs) => {
                let ctx = self.prog.classes.instance("Data", t)?.context.clone();
                let mut sub = vec![];
                for (_, k) in &ctx {
                    sub.push(self.dict_for_type(&targs[*k], params)?);
                }
                Some(self.alloc(Cell::DictC("Data".into(), t.clone(), sub)))
            }
            Type::Fun(..) => None,
        }
    }

    /// Dictionaries for the fresh variables created when `con` is imitated
    /// against a variable whose dictionary lives at `dict`.
    fn con_arg_dicts(
        &mut self,
        dict: Option<Addr>,
        con: &str,
        n: usize,
    ) -> Result<Vec<Option<Addr>>, Result<Addr, FailReason>> {
        let Some(d) = dict else {
            return Ok(vec![None; n]);
        };
        let rd = match self.resolve(d) {
            Ok(r) => r,
            Err(e) => return Err(Err(e)),
        };
        let dc = self.cell(rd).clone();
        let Cell::DictC(_, tycon, dargs) = dc else {
            if dc.is_whnf() {
                return Ok(vec![None; n]);
            }
            return Err(Ok(rd));
        };
        let Some(inst) = self.prog.classes.instance("Data", &tycon) else {
            return Ok(vec![None; n]);
        };
        let param_dicts: HashMap<usize, Addr> =
            inst.context.iter().map(|(_, k)| *k).zip(dargs.iter().copied()).collect();
        let Some((_, ci)) = self.prog.data.con(con) else {
            return Ok(vec![None; n]);
        };
        let arg_tys: Vec<Type> = ci.args.clone();
        Ok(arg_tys.iter().map(|t| self.dict_for_type(t, &param_dicts)).collect())
    }

    /// True when `v` occurs in the already-evaluated structure under `roots`.
    fn occurs(&mut self, v: Addr, roots: &[Addr]) -> Result<bool, FailReason> {
        let mut seen: std::collections::HashSet<Addr> = Default::default();
        let mut work: Vec<Addr> = roots.to_vec();
        while let Some(a) = work.pop() {
            let r = self.resolve(a)?;
            if !seen.insert(r) {
                continue;
            }
            match self.cell(r) {
                Cell::FreeCell { .. } if r == v => return Ok(true),
                Cell::ConC(_, args) => work.extend(args.iter().copied()),
                _ => {}
            }
        }
        Ok(false)
    }

    /// Builds `u1 & u2 & ... & True` as nested guards: each sub-constraint
    /// can only be True or fail the branch.
    fn constraint_chain(&mut self, prim_name: &str, pairs: Vec<(Addr, Addr)>) -> Cell {
        let f = self.prog.fun(prim_name).expect("builtin registered").clone();
        let mut cell = Cell::ConC("True".into(), vec![]);
        for (x, y) in pairs.into_iter().rev() {
            let u = self.alloc(Cell::FunApp(f.clone(), vec![x, y]));
            let body = self.alloc(cell);
            cell = Cell::CondCell(u, body);
        }
        cell
    }

    fn prim(&mut self, p: Prim, args: &[Addr]) -> Act {
        match p {
            Prim::Unify => self.unify(args[0], args[1]),
            Prim::LazyUnify => self.lazy_unify(args[0], args[1]),
            Prim::ConMismatch => self.mismatch(args[0], args[1]),
            Prim::EqInt | Prim::EqChar => self.eq_lit(args[0], args[1]),
            Prim::EnumInt => self.enum_int(args[0]),
            Prim::EnumChar => self.enum_char(args[0]),
        }
    }

    /// Imitation step: bind `v` to `con` applied to fresh variables, then
    /// continue with componentwise constraints against `against`.
    fn imitate(
        &mut self,
        prim_name: &str,
        v: Addr,
        vdict: Option<Addr>,
        con: &str,
        against: &[Addr],
        pattern_side_left: bool,
    ) -> Act {
        let dicts = match self.con_arg_dicts(vdict, con, against.len()) {
            Ok(ds) => ds,
            Err(Ok(need)) => return Act::Need(need),
            Err(Err(e)) => return Act::Fail(e),
        };
        let fresh: Vec<Addr> =
            dicts.into_iter().map(|dict| self.alloc(Cell::FreeCell { dict })).collect();
        self.heap.set(v, Cell::ConC(con.to_string(), fresh.clone()));
        let pairs: Vec<(Addr, Addr)> = if pattern_side_left {
            against.iter().copied().zip(fresh).collect()
        } else {
            fresh.into_iter().zip(against.iter().copied()).collect()
        };
        Act::Rewrite(self.constraint_chain(prim_name, pairs), true)
    }

    fn unify(&mut self, a: Addr, b: Addr) -> Act {
        let ra = match self.resolve(a) {
            Ok(r) => r,
            Err(e) => return Act::Fail(e),
        };
        let ca = self.cell(ra).clone();
        if !ca.is_whnf() {
            return Act::Need(ra);
        }
        let rb = match self.resolve(b) {
            Ok(r) => r,
            Err(e) => return Act::Fail(e),
        };
        let cb = self.cell(rb).clone();
        if !cb.is_whnf() {
            return Act::Need(rb);
        }
        match (ca, cb) {
            (Cell::FreeCell { .. }, Cell::FreeCell { .. }) => {
                if ra != rb {
                    self.heap.set(ra, Cell::Ind(rb));
                }
                Act::Rewrite(true_cell(), true)
            }
            (Cell::FreeCell { dict }, Cell::ConC(c, cargs)) => {
                match self.occurs(ra, &cargs) {
                    Ok(true) => return Act::Fail(FailReason::OccursCheck),
                    Ok(false) => {}
                    Err(e) => return Act::Fail(e),
                }
                self.imitate("=:=", ra, dict, &c, &cargs, false)
            }
            (Cell::ConC(c, cargs), Cell::FreeCell { dict }) => {
                match self.occurs(rb, &cargs) {
                    Ok(true) => return Act::Fail(FailReason::OccursCheck),
                    Ok(false) => {}
                    Err(e) => return Act::Fail(e),
                }
                self.imitate("=:=", rb, dict, &c, &cargs, true)
            }
            (Cell::FreeCell { .. }, Cell::LitC(l)) => {
                self.heap.set(ra, Cell::LitC(l));
                Act::Rewrite(true_cell(), true)
            }
            (Cell::LitC(l), Cell::FreeCell { .. }) => {
                self.heap.set(rb, Cell::LitC(l));
                Act::Rewrite(true_cell(), true)
            }
            (Cell::ConC(c1, a1), Cell::ConC(c2, a2)) => {
                if c1 != c2 {
                    return Act::Fail(FailReason::Clash(c1, c2));
                }
                let pairs = a1.into_iter().zip(a2).collect();
                Act::Rewrite(self.constraint_chain("=:=", pairs), true)
            }
            (Cell::LitC(l1), Cell::LitC(l2)) => {
                if l1 == l2 {
                    Act::Rewrite(true_cell(), true)
                } else {
                    Act::Fail(FailReason::Clash(l1.to_string(), l2.to_string()))
                }
            }
            (Cell::Closure(..), _)
            | (_, Cell::Closure(..))
            | (Cell::PartialFun(..), _)
            | (_, Cell::PartialFun(..))
            | (Cell::PartialCon(..), _)
            | (_, Cell::PartialCon(..)) => Act::Fail(FailReason::FunctionalValue),
            (x, y) => Act::Fail(clash(&x, &y)),
        }
    }

    fn lazy_unify(&mut self, p: Addr, e: Addr) -> Act {
        let rp = match self.resolve(p) {
            Ok(r) => r,
            Err(err) => return Act::Fail(err),
        };
        let cp = self.cell(rp).clone();
        if !cp.is_whnf() {
            return Act::Need(rp);
        }
        // A pattern variable seen for the first time takes the actual
        // argument unevaluated; afterwards it resolves through the binding
        // and the structural cases below give strict unification.
        if let Cell::FreeCell { .. } = cp {
            let re = match self.resolve(e) {
                Ok(r) => r,
                Err(err) => return Act::Fail(err),
            };
            if rp != re {
                self.heap.set(rp, Cell::Ind(re));
            }
            return Act::Rewrite(true_cell(), true);
        }
        let re = match self.resolve(e) {
            Ok(r) => r,
            Err(err) => return Act::Fail(err),
        };
        let ce = self.cell(re).clone();
        if !ce.is_whnf() {
            return Act::Need(re);
        }
        match (cp, ce) {
            (Cell::ConC(c, pargs), Cell::FreeCell { dict }) => {
                self.imitate("=:<=", re, dict, &c, &pargs, true)
            }
            (Cell::ConC(c1, a1), Cell::ConC(c2, a2)) => {
                if c1 != c2 {
                    return Act::Fail(FailReason::Clash(c1, c2));
                }
                let pairs = a1.into_iter().zip(a2).collect();
                Act::Rewrite(self.constraint_chain("=:<=", pairs), true)
            }
            (Cell::LitC(l), Cell::FreeCell { .. }) => {
                self.heap.set(re, Cell::LitC(l));
                Act::Rewrite(true_cell(), true)
            }
            (Cell::LitC(l1), Cell::LitC(l2)) => {
                if l1 == l2 {
                    Act::Rewrite(true_cell(), true)
                } else {
                    Act::Fail(FailReason::Clash(l1.to_string(), l2.to_string()))
                }
            }
            (Cell::Closure(..), _)
            | (_, Cell::Closure(..))
            | (Cell::PartialFun(..), _)
            | (_, Cell::PartialFun(..))
            | (Cell::PartialCon(..), _)
            | (_, Cell::PartialCon(..)) => Act::Fail(FailReason::FunctionalValue),
            (x, y) => Act::Fail(clash(&x, &y)),
        }
    }

    /// Catch-all of derived equality: False on different heads, silent
    /// failure on equal heads (a positive rule covers that case).
    fn mismatch(&mut self, a: Addr, b: Addr) -> Act {
        let ra = match self.resolve(a) {
            Ok(r) => r,
            Err(e) => return Act::Fail(e),
        };
        let ca = self.cell(ra).clone();
        if let Cell::FreeCell { .. } = ca {
            return Act::Narrow(ra);
        }
        if !ca.is_whnf() {
            return Act::Need(ra);
        }
        let rb = match self.resolve(b) {
            Ok(r) => r,
            Err(e) => return Act::Fail(e),
        };
        let cb = self.cell(rb).clone();
        if let Cell::FreeCell { .. } = cb {
            return Act::Narrow(rb);
        }
        if !cb.is_whnf() {
            return Act::Need(rb);
        }
        match (ca, cb) {
            (Cell::ConC(c1, _), Cell::ConC(c2, _)) => {
                if c1 == c2 {
                    Act::Fail(FailReason::NoRuleMatched("mismatch#".into()))
                } else {
                    Act::Rewrite(Cell::ConC("False".into(), vec![]), true)
                }
            }
            (Cell::LitC(l1), Cell::LitC(l2)) => {
                if l1 == l2 {
                    Act::Fail(FailReason::NoRuleMatched("mismatch#".into()))
                } else {
                    Act::Rewrite(Cell::ConC("False".into(), vec![]), true)
                }
            }
            (Cell::Closure(..), _)
            | (_, Cell::Closure(..))
            | (Cell::PartialFun(..), _)
            | (_, Cell::PartialFun(..))
            | (Cell::PartialCon(..), _)
            | (_, Cell::PartialCon(..)) => Act::Fail(FailReason::FunctionalValue),
            (x, y) => Act::Fail(clash(&x, &y)),
        }
    }

    /// Primitive equality on literals; a free side is enumerated through
    /// its dictionary so False answers stay reachable.
    fn eq_lit(&mut self, a: Addr, b: Addr) -> Act {
        let ra = match self.resolve(a) {
            Ok(r) => r,
            Err(e) => return Act::Fail(e),
        };
        let ca = self.cell(ra).clone();
        if let Cell::FreeCell { .. } = ca {
            return Act::Narrow(ra);
        }
        if !ca.is_whnf() {
            return Act::Need(ra);
        }
        let rb = match self.resolve(b) {
            Ok(r) => r,
            Err(e) => return Act::Fail(e),
        };
        let cb = self.cell(rb).clone();
        if let Cell::FreeCell { .. } = cb {
            return Act::Narrow(rb);
        }
        if !cb.is_whnf() {
            return Act::Need(rb);
        }
        match (ca, cb) {
            (Cell::LitC(l1), Cell::LitC(l2)) => {
                let c = if l1 == l2 { "True" } else { "False" };
                Act::Rewrite(Cell::ConC(c.into(), vec![]), true)
            }
            (Cell::Closure(..), _)
            | (_, Cell::Closure(..))
            | (Cell::PartialFun(..), _)
            | (_, Cell::PartialFun(..))
            | (Cell::PartialCon(..), _)
            | (_, Cell::PartialCon(..)) => Act::Fail(FailReason::FunctionalValue),
            (x, y) => Act::Fail(clash(&x, &y)),
        }
    }

    /// k-th integer in the order 0, 1, -1, 2, -2, ...
    fn zigzag(k: i64) -> i64 {
        if k == 0 {
            0
        } else if k % 2 == 1 {
            k / 2 + 1
        } else {
            -(k / 2)
        }
    }

    fn enum_int(&mut self, karg: Addr) -> Act {
        let rk = match self.resolve(karg) {
            Ok(r) => r,
            Err(e) => return Act::Fail(e),
        };
        let Cell::LitC(Lit::Int(k)) = self.cell(rk).clone() else {
            if self.cell(rk).is_whnf() {
                return Act::Fail(FailReason::Clash(head_name(self.cell(rk)), "Int".into()));
            }
            return Act::Need(rk);
        };
        let f = self.prog.fun("enumInt#").expect("enum builtin").clone();
        let here = self.alloc(Cell::LitC(Lit::Int(Self::zigzag(k))));
        let karg2 = self.alloc(Cell::LitC(Lit::Int(k + 1)));
        let rest = self.alloc(Cell::FunApp(f, vec![karg2]));
        Act::Rewrite(Cell::ChoiceCell(here, rest), true)
    }

    fn enum_char(&mut self, karg: Addr) -> Act {
        let rk = match self.resolve(karg) {
            Ok(r) => r,
            Err(e) => return Act::Fail(e),
        };
        let Cell::LitC(Lit::Int(k)) = self.cell(rk).clone() else {
            if self.cell(rk).is_whnf() {
                return Act::Fail(FailReason::Clash(head_name(self.cell(rk)), "Int".into()));
            }
            return Act::Need(rk);
        };
        let mut code = k.max(0) as u32;
        let c = loop {
            if code > 0x10FFFF {
                return Act::Fail(FailReason::NoRuleMatched("enumChar#".into()));
            }
            if let Some(c) = char::from_u32(code) {
                break c;
            }
            code += 1;
        };
        let f = self.prog.fun("enumChar#").expect("enum builtin").clone();
        let here = self.alloc(Cell::LitC(Lit::Char(c)));
        let karg2 = self.alloc(Cell::LitC(Lit::Int(code as i64 + 1)));
        let rest = self.alloc(Cell::FunApp(f, vec![karg2]));
        Act::Rewrite(Cell::ChoiceCell(here, rest), true)
    }
}

fn true_cell() -> Cell {
    Cell::ConC("True".into(), vec![])
}

/// Short description of an evaluated cell's head, for failure reports.
fn head_name(c: &Cell) -> String {
    match c {
        Cell::ConC(n, _) => n.clone(),
        Cell::LitC(l) => l.to_string(),
        Cell::DictC(class, tycon, _) => format!("{class}@{tycon}"),
        _ => "<function>".to_string(),
    }
}

fn clash(a: &Cell, b: &Cell) -> FailReason {
    FailReason::Clash(head_name(a), head_name(b))
}
