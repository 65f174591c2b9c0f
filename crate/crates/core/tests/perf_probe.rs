use minicurry_core::{Session, SessionConfig};
use std::time::Instant;

const IVAL: &str = "
data IVal = IVal Int Char
  deriving Data

instance Eq IVal where
  IVal i _ == IVal j _ = i == j

last :: (Data a, Eq a) => [a] -> a
last xs | ys ++ [y] == xs = y where ys, y free
";

const SRC: &str = "
f1 :: Bool -> Bool
f1 x = f1 x

data Nat = Z | S Nat
  deriving (Eq, Data)

add :: Nat -> Nat -> Nat
add Z y = y
add (S x) y = S (add x y)

double :: Nat -> Nat
double Z = Z
double (S x) = S (S (double x))

big :: Nat
big = double (double (double (double (double (double (double (double (S Z))))))))
";

#[test]
fn perf_probe() {
    let s = Session::load("t.mcy", SRC, SessionConfig::default()).expect("load");

    let t = Instant::now();
    let r = s.eval("f1 True =:= f1 True").expect("eval");
    let dt = t.elapsed();
    println!(
        "loop goal: {} answers, steps {}, {:?} ({:.0} steps/s)",
        r.outcome.answers.len(),
        r.outcome.total_steps,
        dt,
        r.outcome.total_steps as f64 / dt.as_secs_f64()
    );

    let t = Instant::now();
    let r = s.eval("add big big == add big big").expect("eval");
    let dt = t.elapsed();
    println!(
        "ground goal: answers {:?}, steps {}, {:?} ({:.0} steps/s)",
        r.outcome.answers.iter().map(|a| a.line()).collect::<Vec<_>>(),
        r.outcome.total_steps,
        dt,
        r.outcome.total_steps as f64 / dt.as_secs_f64()
    );

    for strat in [minicurry_core::Strategy::Bfs, minicurry_core::Strategy::Dfs] {
        for limit in [5_000u64, 10_000, 20_000, 40_000] {
            let mut cfg = SessionConfig::default();
            cfg.max_steps = limit;
            cfg.strategy = strat;
            let s = Session::load("t.mcy", IVAL, cfg).expect("load ival");
            let t = Instant::now();
            let r = s.eval("last [IVal 1 'a']").expect("eval");
            let dt = t.elapsed();
            println!(
                "{strat:?} limit {limit}: steps {}, {:?} ({:.0} steps/s)",
                r.outcome.total_steps,
                dt,
                r.outcome.total_steps as f64 / dt.as_secs_f64()
            );
        }
    }
}
