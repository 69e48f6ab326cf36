use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use modstat_core::dsl::{parse_script, Arg, Call, ScriptAst, Value};

use crate::ensure;

const ASTS: usize = 1000;

const NAME_PARTS: &[&str] = &["t", "test", "fit", "x", "load", "data", "plot", "_", "q2", "données", "μ"];
const RESERVED: &[&str] = &["col", "true", "false"];
const STRING_POOL: &[&str] = &[
    "",
    "mpg.csv",
    "a \"quoted\" word",
    "back\\slash",
    "two\nlines",
    "# not a comment",
    "ünïcødé ✓",
    "tab\tinside",
    "=,()[]",
];

fn ident(rng: &mut StdRng) -> String {
    loop {
        let parts = rng.gen_range(1..=3);
        let name: String = (0..parts).map(|_| *NAME_PARTS.choose(rng).unwrap()).collect::<Vec<_>>().join("_");
        let starts_ok = name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_');
        if starts_ok && !RESERVED.contains(&name.as_str()) {
            return name;
        }
    }
}

fn number(rng: &mut StdRng) -> f64 {
    match rng.gen_range(0..8) {
        0 => rng.gen_range(-1000..1000) as f64,
        1 => -0.0,
        2 => f64::MAX * rng.gen_range(-1.0..1.0),
        3 => f64::MIN_POSITIVE * rng.gen_range(0.0..1.0), // subnormal
        4 => rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-300..300)),
        5 => 0.1 + 0.2,
        _ => loop {
            let x = f64::from_bits(rng.gen());
            if x.is_finite() {
                break x;
            }
        },
    }
}

fn string(rng: &mut StdRng) -> String {
    if rng.gen_bool(0.6) {
        STRING_POOL.choose(rng).unwrap().to_string()
    } else {
        let len = rng.gen_range(0..12);
        (0..len)
            .map(|_| loop {
                if let Some(c) = char::from_u32(rng.gen_range(0x20..0x3000)) {
                    break c;
                }
            })
            .collect()
    }
}

fn value(rng: &mut StdRng, depth: usize) -> Value {
    let branch = if depth >= 4 { rng.gen_range(0..4) } else { rng.gen_range(0..6) };
    match branch {
        0 => Value::Number(number(rng)),
        1 => Value::Str(string(rng)),
        2 => Value::Bool(rng.gen()),
        3 => Value::ColumnRef(string(rng)),
        4 => Value::List((0..rng.gen_range(0..4)).map(|_| value(rng, depth + 1)).collect()),
        _ => Value::Call(call(rng, depth + 1)),
    }
}

fn call(rng: &mut StdRng, depth: usize) -> Call {
    let args = (0..rng.gen_range(0..5))
        .map(|_| {
            let v = value(rng, depth);
            if rng.gen_bool(0.5) {
                Arg::keyword(ident(rng), v)
            } else {
                Arg::positional(v)
            }
        })
        .collect();
    Call::new(ident(rng), args)
}

/// (source, line, column, message fragment)
const FIXTURES: &[(&str, usize, usize, &str)] = &[
    ("t_test(", 1, 8, "unexpected end of input"),
    ("ok()\nf(x = )", 2, 7, "unexpected token `)`"),
    ("f(\"abc", 1, 3, "unterminated string"),
    ("f(\"a\\t\")", 1, 5, "invalid escape"),
    ("f(1) g(2)", 1, 6, "unexpected token `g`"),
    ("f(1x)", 1, 3, "malformed number"),
    ("f(1.)", 1, 3, "malformed number"),
    ("f(1e999)", 1, 3, "out of range"),
    ("f(col(1))", 1, 3, "col() takes exactly one string argument"),
    ("col(\"x\")", 1, 1, "a column reference is not a statement"),
    ("f(a) # trailing", 1, 6, "unexpected character `#`"),
    ("# c\n\n  g(1,, 2)", 3, 7, "unexpected token `,`"),
    ("f([1, 2)", 1, 8, "unexpected token `)`"),
    ("f(a = = 1)", 1, 7, "unexpected token `=`"),
    ("f(true = 1)", 1, 8, "unexpected token `=`"),
    ("f(\"ü\", §)", 1, 8, "unexpected character `§`"),
    ("a()\nb()\n\n  ))", 4, 3, "unexpected token `)`"),
    ("f(1, 2", 1, 7, "unexpected end of input"),
    ("= f()", 1, 1, "unexpected token `=`"),
    ("f()(y)", 1, 4, "unexpected token `(`"),
];

pub fn run() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0xd51_0001);
    for i in 0..ASTS {
        let ast = ScriptAst { statements: (0..rng.gen_range(1..=4)).map(|_| call(&mut rng, 0)).collect() };
        let text = ast.to_string();
        let back = parse_script(&text).map_err(|e| format!("AST {i} did not reparse: {e}\n{text}"))?;
        ensure(back == ast, || format!("AST {i} changed on reparse:\n{text}"))?;
        ensure(back.to_string() == text, || format!("AST {i} printed differently after reparse"))?;
    }
    for (src, line, column, fragment) in FIXTURES {
        let e = match parse_script(src) {
            Ok(_) => return Err(format!("{src:?} parsed without error")),
            Err(e) => e,
        };
        ensure(e.line == *line && e.column == *column && e.message.contains(fragment), || {
            format!("{src:?}: got line {}, column {}: {}; want {line}:{column} {fragment}", e.line, e.column, e.message)
        })?;
    }
    Ok(format!("{ASTS} ASTs round-trip; {} syntax-error fixtures located", FIXTURES.len()))
}
