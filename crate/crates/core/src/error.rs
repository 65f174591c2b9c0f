//! Error types for the whole pipeline.

use crate::ast::Span;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    /// Token kinds that would have been accepted at the failure point.
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(span: Span, message: String) -> Self {
        ParseError { span, message, expected: Vec::new() }
    }

    pub fn expecting(span: Span, expected: Vec<String>, found: String) -> Self {
        let message = format!("expected {}, found {found}", expected.join(" or "));
        ParseError { span, message, expected }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Static errors from name analysis, type inference and instance handling.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeError {
    Unification { span: Span, expected: String, found: String },
    OccursCheck { span: Span, var: String, ty: String },
    /// No instance can discharge the constraint; `origin` names the
    /// construct that demanded it.
    UnresolvedInstance { span: Span, class: String, ty: String, origin: String },
    /// A constraint is left on a type variable that does not occur in the
    /// inferred type, so no use site could ever discharge it.
    AmbiguousContext { span: Span, class: String, item: String },
    /// A goal's type still carries constraints; evaluation would need a
    /// concrete type. No defaulting is performed.
    AmbiguousGoal { class: String, ty: String },
    Derive { span: Span, message: String },
    UserDataInstance { span: Span, ty: String },
    UnknownName { span: Span, what: &'static str, name: String },
    UnknownConstructor { span: Span, name: String },
    UnknownClass { span: Span, name: String },
    ConArity { span: Span, con: String, expected: usize, found: usize },
    DuplicateDefinition { span: Span, name: String },
    SignatureMismatch { span: Span, name: String, declared: String, inferred: String },
    SignatureTooGeneral { span: Span, name: String, declared: String, inferred: String },
    NoRules { span: Span, name: String },
    MixedArity { span: Span, name: String },
    DuplicateInstance { span: Span, class: String, ty: String },
    MissingMethod { span: Span, class: String, ty: String, method: String },
    BadInstanceHead { span: Span, message: String },
    UnknownMethod { span: Span, class: String, method: String },
    KindError { span: Span, message: String },
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeError::Unification { span, expected, found } => {
                write!(f, "{span}: type mismatch: cannot match `{expected}` with `{found}`")
            }
            TypeError::OccursCheck { span, var, ty } => {
                write!(f, "{span}: infinite type: `{var}` occurs in `{ty}`")
            }
            TypeError::UnresolvedInstance { span, class, ty, origin } => {
                let hint = if matches!(class.as_str(), "Data") && ty.contains("->") {
                    " (functions have no Data instance)"
                } else {
                    ""
                };
                write!(f, "{span}: no instance for {class} ({ty}){hint}, required by {origin}")
            }
            TypeError::AmbiguousContext { span, class, item } => {
                write!(
                    f,
                    "{span}: ambiguous context in `{item}`: constraint {class} on a type variable not \
                     reachable from the type"
                )
            }
            TypeError::AmbiguousGoal { class, ty } => {
                write!(
                    f,
                    "goal has an ambiguous type: unresolved constraint {class} {ty}; \
                     annotate the goal (e.g. `expr :: Nat`)"
                )
            }
            TypeError::Derive { span, message } => write!(f, "{span}: {message}"),
            TypeError::UserDataInstance { span, ty } => {
                write!(f, "{span}: explicit Data instances are forbidden (instance Data {ty}); Data can only be derived")
            }
            TypeError::UnknownName { span, what, name } => {
                write!(f, "{span}: unknown {what} `{name}`")
            }
            TypeError::UnknownConstructor { span, name } => {
                write!(f, "{span}: unknown constructor `{name}`")
            }
            TypeError::UnknownClass { span, name } => write!(f, "{span}: unknown class `{name}`"),
            TypeError::ConArity { span, con, expected, found } => {
                write!(f, "{span}: constructor {con} expects {expected} arguments, found {found}")
            }
            TypeError::DuplicateDefinition { span, name } => {
                write!(f, "{span}: duplicate definition of `{name}`")
            }
            TypeError::SignatureMismatch { span, name, declared, inferred } => {
                write!(
                    f,
                    "{span}: signature of `{name}` does not match its rules: declared `{declared}`, inferred `{inferred}`"
                )
            }
            TypeError::SignatureTooGeneral { span, name, declared, inferred } => {
                write!(
                    f,
                    "{span}: signature of `{name}` is more general than its rules allow: declared `{declared}`, inferred `{inferred}`"
                )
            }
            TypeError::NoRules { span, name } => {
                write!(f, "{span}: `{name}` has a signature but no rules (only the prelude's `failed` may omit rules)")
            }
            TypeError::MixedArity { span, name } => {
                write!(f, "{span}: rules of `{name}` have differing numbers of arguments")
            }
            TypeError::DuplicateInstance { span, class, ty } => {
                write!(f, "{span}: duplicate instance {class} {ty}")
            }
            TypeError::MissingMethod { span, class, ty, method } => {
                write!(f, "{span}: instance {class} {ty} is missing a definition of `{method}`")
            }
            TypeError::BadInstanceHead { span, message } => write!(f, "{span}: {message}"),
            TypeError::UnknownMethod { span, class, method } => {
                write!(f, "{span}: class {class} has no method `{method}`")
            }
            TypeError::KindError { span, message } => write!(f, "{span}: {message}"),
        }
    }
}

impl std::error::Error for TypeError {}

/// Why one branch of the search died. Branch failure is silent during
/// enumeration; the reasons are kept for diagnostics and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailReason {
    /// No rule of the named operation matched (`failed` has zero rules).
    NoRuleMatched(String),
    /// Constructor clash during matching or unification.
    Clash(String, String),
    OccursCheck,
    GuardFalse,
    /// A thunk demanded its own value.
    NonproductiveLoop,
    /// A demanded logic variable carries no Data dictionary. Typing rules
    /// this out; kept as a defensive runtime error.
    NoDict,
    /// A functional value reached a position that needs constructor terms.
    FunctionalValue,
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailReason::NoRuleMatched(name) => write!(f, "no rule of `{name}` matched"),
            FailReason::Clash(a, b) => write!(f, "constructor clash: {a} vs {b}"),
            FailReason::OccursCheck => write!(f, "occurs check failed"),
            FailReason::GuardFalse => write!(f, "guard evaluated to False"),
            FailReason::NonproductiveLoop => write!(f, "nonproductive loop"),
            FailReason::NoDict => write!(f, "demanded logic variable has no Data dictionary"),
            FailReason::FunctionalValue => write!(f, "functional value in a first-order position"),
        }
    }
}

/// Any static error a source file or goal can produce.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Parse(ParseError),
    Type(TypeError),
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(e) => write!(f, "{e}"),
            Error::Type(e) => write!(f, "{e}"),
            Error::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}

impl From<TypeError> for Error {
    fn from(e: TypeError) -> Self {
        Error::Type(e)
    }
}
