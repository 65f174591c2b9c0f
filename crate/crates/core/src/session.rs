//! A loaded program and the operations the command line and the REPL share:
//! evaluating goals, showing types, dumping the intermediate form.
//!
//! Loading parses the prelude (the file named by `MINICURRY_PRELUDE`, or the
//! embedded one) together with the user module, type checks everything,
//! generates instance operations and lowers the result. The equality
//! rewrites run over the user module's operations at load time and over each
//! goal before evaluation.

use crate::analyze::{analyze, method_global, Analysis};
use crate::ast::SourceModule;
use crate::core_ir::CoreProgram;
use crate::derive::codegen;
use crate::elaborate::{desugar_goal, elaborate};
use crate::error::Error;
use crate::infer::{infer_goal, infer_module};
use crate::lower::{lower_fun, lower_goal};
use crate::machine::Machine;
use crate::optimize::{optimize_funs, optimize_goal, OptEntry};
use crate::parser::{parse_goal, parse_module};
use crate::prelude::{PRELUDE, PRELUDE_FILE};
use crate::search::{enumerate, Limits, Outcome, Strategy};
use crate::types::TypeScheme;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::rc::Rc;

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub strategy: Strategy,
    pub max_answers: Option<usize>,
    pub max_steps: u64,
    pub max_depth: Option<u32>,
    pub optimize: bool,
    /// Treat module types without explicit `deriving Data` as derivable
    /// wherever their constructor arguments allow it.
    pub auto_data: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            strategy: Strategy::Bfs,
            max_answers: None,
            max_steps: 100_000,
            max_depth: None,
            optimize: true,
            auto_data: false,
        }
    }
}

#[derive(Debug)]
pub struct GoalResult {
    pub outcome: Outcome,
    /// Rewrites applied to the goal expression itself.
    pub opt_lines: Vec<String>,
}

pub struct Session {
    pub config: SessionConfig,
    analysis: Analysis,
    schemes: BTreeMap<String, TypeScheme>,
    program: Rc<CoreProgram>,
    /// Source-level functions of the loaded module, in declaration order.
    surface_funs: Vec<String>,
    /// Every operation the module owns, instance methods included.
    module_funs: Vec<String>,
    module_file: String,
    opt_entries: Vec<OptEntry>,
}

fn prelude_source() -> Result<(String, String), Error> {
    match std::env::var("MINICURRY_PRELUDE") {
        Ok(path) => {
            let src = std::fs::read_to_string(&path)
                .map_err(|e| Error::Io(format!("cannot read prelude {path}: {e}")))?;
            Ok((path, src))
        }
        Err(_) => Ok((PRELUDE_FILE.to_string(), PRELUDE.to_string())),
    }
}

fn report_line(file: &str, e: &OptEntry) -> String {
    format!("{}:{}:{}: {}", file, e.span.line, e.span.col, e.what)
}

impl Session {
    /// A session with nothing loaded beyond the prelude.
    pub fn prelude_only(config: SessionConfig) -> Result<Session, Error> {
        Session::build(None, config)
    }

    pub fn load_file(path: &str, config: SessionConfig) -> Result<Session, Error> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {path}: {e}")))?;
        Session::load(path, &src, config)
    }

    pub fn load(file: &str, src: &str, config: SessionConfig) -> Result<Session, Error> {
        let module = parse_module(file, src)?;
        Session::build(Some(module), config)
    }

    fn build(module: Option<SourceModule>, config: SessionConfig) -> Result<Session, Error> {
        let (pfile, psrc) = prelude_source()?;
        let prelude = parse_module(&pfile, &psrc)?;
        let mut modules: Vec<&SourceModule> = vec![&prelude];
        if let Some(m) = &module {
            modules.push(m);
        }
        let analysis = analyze(&modules, config.auto_data)?;
        let elab = elaborate(&analysis, &modules)?;
        let inferred = infer_module(&analysis, &elab)?;

        let defined: BTreeSet<String> = elab.funs.iter().map(|f| f.name.clone()).collect();
        let mut program = CoreProgram {
            funs: BTreeMap::new(),
            order: vec![],
            data: analysis.data.clone(),
            classes: analysis.classes.clone(),
        };
        for f in codegen(&analysis, &defined) {
            program.add(f);
        }
        for f in &elab.funs {
            program.add(lower_fun(&analysis, &inferred, f));
        }

        let (surface_funs, module_funs, module_file) = match &module {
            Some(m) => {
                let surface: Vec<String> = m.funs.iter().map(|f| f.name.clone()).collect();
                let mut all = surface.clone();
                for inst in &m.instances {
                    for f in &inst.methods {
                        all.push(method_global(&f.name, &inst.ty_con));
                    }
                }
                (surface, all, m.file.clone())
            }
            None => (vec![], vec![], String::new()),
        };

        let opt_entries =
            if config.optimize { optimize_funs(&mut program, &module_funs) } else { vec![] };

        Ok(Session {
            config,
            schemes: inferred.schemes,
            analysis,
            program: Rc::new(program),
            surface_funs,
            module_funs,
            module_file,
            opt_entries,
        })
    }

    pub fn eval(&self, input: &str) -> Result<GoalResult, Error> {
        let goal = parse_goal(input)?;
        let goal = desugar_goal(&self.analysis, &goal);
        let expr = goal.expr;
        let typing = infer_goal(&self.analysis, &self.schemes, &expr, true)?;
        let mut core = lower_goal(&self.analysis, &typing.node_evidence, &expr);
        let opt_lines = if self.config.optimize {
            optimize_goal(&self.analysis.classes, &mut core)
                .iter()
                .map(|e| report_line("goal", e))
                .collect()
        } else {
            vec![]
        };
        let machine = Machine::new(self.program.clone(), core);
        let limits = Limits {
            max_answers: self.config.max_answers,
            max_steps: self.config.max_steps,
            max_depth: self.config.max_depth,
        };
        Ok(GoalResult { outcome: enumerate(machine, self.config.strategy, &limits), opt_lines })
    }

    pub fn type_of(&self, input: &str) -> Result<String, Error> {
        let goal = parse_goal(input)?;
        let goal = desugar_goal(&self.analysis, &goal);
        let typing = infer_goal(&self.analysis, &self.schemes, &goal.expr, false)?;
        Ok(format!("{} :: {}", input.trim(), typing.rendered))
    }

    /// Inferred type of every module function, in declaration order.
    pub fn dump_types(&self) -> String {
        let mut out = String::new();
        for n in &self.surface_funs {
            if let Some(s) = self.schemes.get(n) {
                let _ = writeln!(out, "{} :: {}", n, s.render());
            }
        }
        out
    }

    /// Lowered form of the module's operations, as evaluated.
    pub fn dump_core(&self) -> String {
        let mut out = String::new();
        for n in &self.module_funs {
            if let Some(d) = self.program.dump_fun(n) {
                out.push_str(&d);
            }
        }
        out
    }

    pub fn core_of(&self, name: &str) -> Option<String> {
        self.program.dump_fun(name)
    }

    /// Rewrites applied to the module at load time, one line each.
    pub fn opt_report(&self) -> Vec<String> {
        self.opt_entries.iter().map(|e| report_line(&self.module_file, e)).collect()
    }

    pub fn program(&self) -> &Rc<CoreProgram> {
        &self.program
    }
}
