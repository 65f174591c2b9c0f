//! A small functional logic language with typed logic variables.
//!
//! Programs are Haskell-like: algebraic data types, pattern matching, type
//! classes with dictionary passing. On top of that, rules may overlap
//! (overlap means nondeterministic choice), variables may be declared
//! `free`, and evaluation narrows such variables step by step to whatever
//! values make the computation succeed. The values a variable may take are
//! described by the `Data` class: structurally derived generators and strict
//! equality, available exactly for first-order types.
//!
//! The pipeline: [`parser`] builds the surface tree, [`analyze`] collects
//! types/classes/instances and checks derivability, [`infer`] runs
//! Hindley-Milner with dictionary evidence, [`lower`] emits the core form,
//! [`optimize`] strengthens equalities, and [`machine`]/[`search`] evaluate
//! by needed narrowing with call-time choice. [`session`] ties the stages
//! together behind one interface.

pub mod analyze;
pub mod ast;
pub mod core_ir;
pub mod derive;
pub mod elaborate;
pub mod error;
pub mod infer;
pub mod lexer;
pub mod lower;
pub mod machine;
pub mod optimize;
pub mod parser;
pub mod prelude;
pub mod pretty;
pub mod search;
pub mod session;
pub mod show;
pub mod types;

pub use error::{Error, FailReason, ParseError, TypeError};
pub use machine::{Machine, Step};
pub use search::{Answer, Exhaustion, Limits, Outcome, Strategy};
pub use session::{GoalResult, Session, SessionConfig};
