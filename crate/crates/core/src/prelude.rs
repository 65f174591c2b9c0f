//! Built-in operations every program sees. Loaded before the user module;
//! `MINICURRY_PRELUDE` substitutes a file for this source.

pub const PRELUDE_FILE: &str = "<prelude>";

pub const PRELUDE: &str = r#"x ? _ = x
_ ? y = y

solve True = True

True  && x = x
False && _ = False

True  || _ = True
False || x = x

not True  = False
not False = True

id x = x

const x _ = x

fst (x, _) = x

snd (_, y) = y

[] ++ ys = ys
(x:xs) ++ ys = x : (xs ++ ys)

map _ [] = []
map f (x:xs) = f x : map f xs

elem _ [] = False
elem x (y:ys) = x === y || elem x ys

elemEq _ [] = False
elemEq x (y:ys) = x == y || elemEq x ys

failed :: a

unknown :: Data a => a
unknown = x where x free

lastEq xs | ys ++ [y] == xs = y where ys, y free

lastStrict xs | ys ++ [y] === xs = y where ys, y free
"#;
