use minicurry_core::{Session, SessionConfig};

#[test]
fn parameterized_instance_head() {
    let src = r#"
data IVal a = IVal Int a
  deriving Data

instance Eq a => Eq (IVal a) where
  IVal i1 _ == IVal i2 _  =  i1 == i2

last :: (Data a, Eq a) => [a] -> a
last xs | ys ++ [y] == xs  = y
  where ys, y free
"#;
    let mut cfg = SessionConfig::default();
    cfg.max_answers = Some(1);
    let s = Session::load("t.mcy", src, cfg).expect("load");
    println!("== types ==\n{}", s.dump_types());
    for g in ["elemEq (IVal 1 'b') [IVal 1 'a']", "last [IVal 1 'a']"] {
        println!("--- goal: {g}");
        match s.eval(g) {
            Ok(r) => {
                for a in &r.outcome.answers {
                    println!("answer: {}", a.line());
                }
                println!("exhaustion: {:?}, steps {}", r.outcome.exhaustion, r.outcome.total_steps);
            }
            Err(e) => println!("eval error: {e}"),
        }
    }
}
