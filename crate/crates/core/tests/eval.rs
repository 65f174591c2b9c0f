//! End to end evaluation: load a module, run goals, compare answer lines.

use minicurry_core::{Session, SessionConfig, Strategy};

const PEANO: &str = "
data Nat = Z | S Nat
  deriving (Eq, Data)

add :: Nat -> Nat -> Nat
add Z y = y
add (S x) y = S (add x y)
";

fn session(src: &str) -> Session {
    Session::load("test.mcy", src, SessionConfig::default()).expect("load")
}

fn answers_of(s: &Session, goal: &str) -> Vec<String> {
    let r = s.eval(goal).expect("eval");
    assert!(r.outcome.exhaustion.is_none(), "search exhausted on {goal}");
    r.outcome.answers.iter().map(|a| a.line()).collect()
}

fn answers(src: &str, goal: &str) -> Vec<String> {
    answers_of(&session(src), goal)
}

#[test]
fn ground_goals() {
    assert_eq!(answers("", "True"), ["True"]);
    assert_eq!(answers("", "not True"), ["False"]);
    assert_eq!(answers("", "0"), ["0"]);
    assert_eq!(answers("", "'a'"), ["'a'"]);
}

#[test]
fn choice_answers_in_order() {
    assert_eq!(answers("", "0 ? 1"), ["0", "1"]);
    let mut dfs = SessionConfig::default();
    dfs.strategy = Strategy::Dfs;
    let s = Session::load("test.mcy", "", dfs).expect("load");
    assert_eq!(answers_of(&s, "0 ? 1"), ["0", "1"]);
    // Depth-first runs the whole left alternative first; breadth-first
    // reaches the shallower right answer earlier.
    assert_eq!(answers_of(&s, "(0 ? 1) ? 2"), ["0", "1", "2"]);
    assert_eq!(answers("", "(0 ? 1) ? 2"), ["2", "0", "1"]);
}

#[test]
fn peano_addition() {
    assert_eq!(answers(PEANO, "add (S Z) (S Z)"), ["S (S Z)"]);
    assert_eq!(answers(PEANO, "add Z Z"), ["Z"]);
}

#[test]
fn narrowing_splits_addition() {
    assert_eq!(
        answers(PEANO, "add x y =:= S Z where x, y free"),
        ["{x = Z, y = S Z} True", "{x = S Z, y = Z} True"]
    );
    assert_eq!(
        answers(PEANO, "solve (add x y === S Z) where x, y free"),
        ["{x = Z, y = S Z} True", "{x = S Z, y = Z} True"]
    );
    // Without solve the goal is an ordinary Boolean expression, so False
    // answers appear as well.
    let all = answers(PEANO, "add x y === S Z where x, y free");
    assert!(all.contains(&"{x = Z, y = S Z} True".to_string()));
    assert!(all.iter().any(|l| l.ends_with("False")));
}

#[test]
fn list_append() {
    assert_eq!(answers("", "[0,1] ++ [2]"), ["[0,1,2]"]);
    assert_eq!(answers("", "\"ab\" ++ \"c\""), ["\"abc\""]);
}
