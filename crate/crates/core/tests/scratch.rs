use minicurry_core::{Session, SessionConfig};

const IVAL: &str = "
data IVal = IVal Int Char
  deriving Data

instance Eq IVal where
  IVal i _ == IVal j _ = i == j

last :: (Data a, Eq a) => [a] -> a
last xs | ys ++ [y] == xs = y where ys, y free
";

const FUNPAT: &str = "
data Nat = Z | S Nat
  deriving (Eq, Data)

last (_ ++ [x]) = x

dup x = (x, x)

someDup (_ ++ [x] ++ _ ++ [x] ++ _) = x
";

#[test]
fn scratch() {
    let s = Session::load("t.mcy", IVAL, SessionConfig::default()).expect("load ival");
    println!("== types ==\n{}", s.dump_types());
    println!("== core of last ==\n{}", s.core_of("last").unwrap_or_default());
    println!("== opt report ==\n{:?}", s.opt_report());
    for g in ["elemEq (IVal 1 'b') [IVal 1 'a']", "last [IVal 1 'a']", "last [IVal 1 'a', IVal 2 'b']"] {
        println!("--- goal: {g}");
        match s.eval(g) {
            Ok(r) => {
                for a in &r.outcome.answers { println!("answer: {}", a.line()); }
                println!("exhaustion: {:?}, steps {}", r.outcome.exhaustion, r.outcome.total_steps);
            }
            Err(e) => println!("eval error: {e}"),
        }
    }

    let s2 = Session::load("t.mcy", FUNPAT, SessionConfig::default()).expect("load funpat");
    println!("== funpat types ==\n{}", s2.dump_types());
    println!("== core of last ==\n{}", s2.core_of("last").unwrap_or_default());
    println!("== core of someDup ==\n{}", s2.core_of("someDup").unwrap_or_default());
    let mut cfg = SessionConfig::default();
    cfg.max_answers = Some(4);
    let s3 = Session::load("t.mcy", FUNPAT, cfg).expect("load funpat");
    for g in ["last [failed, 3]", "someDup [1,2,2,1]", "dup (0 ? 1)", "unknown :: Bool", "aValue :: Nat"] {
        println!("--- goal: {g}");
        match s3.eval(g) {
            Ok(r) => {
                for a in &r.outcome.answers { println!("answer: {}", a.line()); }
                println!("exhaustion: {:?}, steps {}", r.outcome.exhaustion, r.outcome.total_steps);
            }
            Err(e) => println!("eval error: {e}"),
        }
    }
}
