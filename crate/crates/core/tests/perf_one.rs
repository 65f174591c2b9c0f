use minicurry_core::{Session, SessionConfig, Strategy};
use std::time::Instant;

const IVAL: &str = "
data IVal = IVal Int Char
  deriving Data

instance Eq IVal where
  IVal i _ == IVal j _ = i == j

last :: (Data a, Eq a) => [a] -> a
last xs | ys ++ [y] == xs = y where ys, y free
";

#[test]
fn perf_one() {
    let mut cfg = SessionConfig::default();
    cfg.max_steps = 10_000;
    cfg.strategy = Strategy::Dfs;
    let s = Session::load("t.mcy", IVAL, cfg).expect("load ival");
    let t = Instant::now();
    let r = s.eval("last [IVal 1 'a']").expect("eval");
    println!("steps {}, {:?}", r.outcome.total_steps, t.elapsed());
}
