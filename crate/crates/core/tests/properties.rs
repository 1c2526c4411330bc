use std::collections::HashMap;

use mathlog_core::{
    format_term, read_term, BindingStore, Database, EngineError, EvalError, FormatOptions,
    SolveOptions, Term, VarId,
};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        ..ProptestConfig::default()
    }
}

const ATOMS: &[&str] = &[
    "a", "foo", "x1", "[]", "{}", "!", ";", "hello world", "Abc", "_x", "", "it's", "+", "-",
    "*", "=", "is", ":-", ",", "|", "\\+", "mod", "=..", "a\\b", "\n",
];

const FUNCTORS: &[(&str, usize)] = &[
    ("f", 1),
    ("g", 2),
    ("h", 3),
    ("+", 2),
    ("-", 2),
    ("-", 1),
    ("*", 2),
    ("/", 2),
    ("^", 2),
    ("=", 2),
    ("is", 2),
    (",", 2),
    (";", 2),
    ("->", 2),
    (":-", 2),
    (":-", 1),
    ("\\+", 1),
    ("#=", 2),
    ("..", 2),
    ("in", 2),
    ("Big", 1),
    ("{}", 1),
    (".", 2),
];

fn leaf() -> impl Strategy<Value = Term> {
    prop_oneof![
        prop::sample::select(ATOMS).prop_map(Term::atom),
        (-1_000_000_000_000i64..1_000_000_000_000).prop_map(Term::Int),
        prop_oneof![Just(i64::MAX), Just(i64::MIN + 1), Just(0i64)].prop_map(Term::Int),
        (-400i32..400).prop_map(|k| Term::Float(f64::from(k) / 8.0)),
        (0u32..4).prop_map(|v| Term::Var(VarId(v))),
    ]
}

fn term() -> impl Strategy<Value = Term> {
    leaf().prop_recursive(4, 32, 3, |inner| {
        prop::sample::select(FUNCTORS).prop_flat_map(move |(name, arity)| {
            prop::collection::vec(inner.clone(), arity)
                .prop_map(move |args| Term::compound(name, args))
        })
    })
}

/// Renumbers variables by first occurrence so terms can be compared up to
/// renaming.
fn canonical(t: &Term) -> Term {
    let mut seen: HashMap<VarId, u32> = HashMap::new();
    t.map_vars(&mut |v| {
        let n = seen.len() as u32;
        Term::Var(VarId(*seen.entry(v).or_insert(n)))
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn quoted_output_reads_back(t in term()) {
        let text = format_term(&t, &FormatOptions::quoted());
        let back = read_term(&format!("{text} ."))
            .unwrap_or_else(|e| panic!("{text}: {e}"));
        prop_assert_eq!(canonical(&back.term), canonical(&t), "{}", text);
    }

    #[test]
    fn formatting_is_stable(t in term()) {
        let once = format_term(&t, &FormatOptions::quoted());
        let back = read_term(&format!("{once} .")).unwrap();
        let twice = format_term(&back.term, &FormatOptions::quoted().with_names(&back.names()));
        let again = read_term(&format!("{twice} .")).unwrap();
        prop_assert_eq!(canonical(&again.term), canonical(&t));
    }
}

// ---------------------------------------------------------------- unification

fn small_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(&["a", "b", "[]"][..]).prop_map(Term::atom),
        (0i64..3).prop_map(Term::Int),
        (0u32..6).prop_map(|v| Term::Var(VarId(v))),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Term::compound("f", vec![a])),
            (inner.clone(), inner).prop_map(|(a, b)| Term::compound("g", vec![a, b])),
        ]
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn undo_restores_an_empty_store(pairs in prop::collection::vec((small_term(), small_term()), 1..6)) {
        let mut store = BindingStore::with_vars(6);
        let mark = store.mark();
        for (a, b) in &pairs {
            let _ = store.unify(a, b);
        }
        store.undo_to(mark).unwrap();
        prop_assert!(store.is_empty());
        for v in 0..6 {
            let var = Term::Var(VarId(v));
            prop_assert_eq!(store.reify(&var), var);
        }
    }

    #[test]
    fn unification_is_symmetric(a in small_term(), b in small_term()) {
        let mut left = BindingStore::with_vars(6);
        let mut right = BindingStore::with_vars(6);
        left.set_occurs_check(true);
        right.set_occurs_check(true);
        let l = left.unify(&a, &b);
        let r = right.unify(&b, &a);
        prop_assert_eq!(l, r);
        if l {
            prop_assert_eq!(left.reify(&a), left.reify(&b));
            prop_assert_eq!(canonical(&left.reify(&a)), canonical(&right.reify(&a)));
        }
    }

    #[test]
    fn unifiable_leaves_no_trace(a in small_term(), b in small_term()) {
        let mut store = BindingStore::with_vars(6);
        let _ = store.unifiable(&a, &b);
        prop_assert!(store.is_empty());
    }
}

// ---------------------------------------------------------------- engine

fn solve_all(db: &Database, goal: &str) -> Result<Vec<String>, EngineError> {
    let mut sols = db.solve_text(goal, SolveOptions::default()).unwrap();
    let mut out = Vec::new();
    while let Some(a) = sols.next_solution()? {
        out.push(a.to_line());
    }
    Ok(out)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn negation_agrees_with_enumeration(
        facts in prop::collection::vec(-20i64..20, 0..8),
        k in -20i64..20,
    ) {
        let mut program = String::new();
        for f in &facts {
            program.push_str(&format!("p({f}).\n"));
        }
        program.push_str("p(0) :- fail.\n");
        let mut db = Database::new();
        db.consult_text(&program).unwrap();
        let goal = format!("p(X), X > {k}");
        let some = !solve_all(&db, &format!("{goal}.")).unwrap().is_empty();
        let negated = solve_all(&db, &format!("\\+ ({goal}).")).unwrap();
        prop_assert_eq!(negated.is_empty(), some);
        prop_assert_eq!(some, facts.iter().any(|&f| f > k));
    }
}

#[derive(Clone, Debug)]
enum Expr {
    Lit(i64),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-50i64..50).prop_map(Expr::Lit),
        prop_oneof![Just(i64::MAX), Just(i64::MIN + 1), Just(1i64 << 40)].prop_map(Expr::Lit),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (prop::sample::select(&['+', '-', '*'][..]), inner.clone(), inner)
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
        ]
    })
}

impl Expr {
    fn text(&self) -> String {
        match self {
            Expr::Lit(n) => format!("({n})"),
            Expr::Neg(e) => format!("-({})", e.text()),
            Expr::Bin(op, a, b) => format!("({} {op} {})", a.text(), b.text()),
        }
    }

    /// Value in 128-bit arithmetic; `None` once any intermediate leaves the
    /// 64-bit range.
    fn value(&self) -> Option<i64> {
        let v: i128 = match self {
            Expr::Lit(n) => i128::from(*n),
            Expr::Neg(e) => -i128::from(e.value()?),
            Expr::Bin(op, a, b) => {
                let (x, y) = (i128::from(a.value()?), i128::from(b.value()?));
                match op {
                    '+' => x + y,
                    '-' => x - y,
                    _ => x * y,
                }
            }
        };
        i64::try_from(v).ok()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn integer_arithmetic_matches_host(e in expr()) {
        let db = Database::new();
        let got = solve_all(&db, &format!("V is {}.", e.text()));
        match e.value() {
            Some(v) => prop_assert_eq!(got.unwrap(), vec![format!("V = {v}")]),
            None => prop_assert!(matches!(
                got,
                Err(EngineError::Evaluation(EvalError::IntOverflow))
            )),
        }
    }

    #[test]
    fn division_is_exact_or_float(x in -10_000i64..10_000, y in -100i64..100) {
        let db = Database::new();
        let mut sols = db.solve_text(&format!("V is {x} / ({y})."), SolveOptions::default()).unwrap();
        let got = sols.next_solution();
        if y == 0 {
            prop_assert!(matches!(got, Err(EngineError::Evaluation(EvalError::ZeroDivisor))));
        } else {
            let v = got.unwrap().unwrap().get("V").cloned().unwrap();
            if x % y == 0 {
                prop_assert_eq!(v, Term::Int(x / y));
            } else {
                prop_assert_eq!(v, Term::Float(x as f64 / y as f64));
            }
        }
    }

    #[test]
    fn comparison_matches_host(x in -1000i64..1000, y in -1000i64..1000) {
        let db = Database::new();
        for (op, want) in [("<", x < y), ("=<", x <= y), (">", x > y), (">=", x >= y), ("=:=", x == y), ("=\\=", x != y)] {
            let got = !solve_all(&db, &format!("{x} {op} {y}.")).unwrap().is_empty();
            prop_assert_eq!(got, want, "{} {} {}", x, op, y);
        }
    }
}

// ---------------------------------------------------------------- constraints

#[derive(Clone, Copy, Debug)]
enum Rel {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    fn op(self) -> &'static str {
        match self {
            Rel::Eq => "#=",
            Rel::Lt => "#<",
            Rel::Le => "#=<",
            Rel::Gt => "#>",
            Rel::Ge => "#>=",
        }
    }

    fn holds(self, l: i64, r: i64) -> bool {
        match self {
            Rel::Eq => l == r,
            Rel::Lt => l < r,
            Rel::Le => l <= r,
            Rel::Gt => l > r,
            Rel::Ge => l >= r,
        }
    }
}

fn rel() -> impl Strategy<Value = Rel> {
    prop::sample::select(&[Rel::Eq, Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge][..])
}

fn range() -> impl Strategy<Value = (i64, i64)> {
    (-6i64..6, 0i64..8).prop_map(|(lo, w)| (lo, lo + w))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn linear_labeling_matches_brute_force(
        (xlo, xhi) in range(),
        (ylo, yhi) in range(),
        a in -4i64..5,
        b in -4i64..5,
        c in -20i64..20,
        r in rel(),
    ) {
        let db = Database::new();
        let goal = format!(
            "X in {xlo} .. {xhi}, Y in {ylo} .. {yhi}, {a}*X + {b}*Y {} {c}, label([X,Y]).",
            r.op()
        );
        let mut expected = Vec::new();
        for x in xlo..=xhi {
            for y in ylo..=yhi {
                if r.holds(a * x + b * y, c) {
                    expected.push(format!("X = {x}, Y = {y}"));
                }
            }
        }
        prop_assert_eq!(solve_all(&db, &goal).unwrap(), expected, "{}", goal);
    }

    #[test]
    fn product_labeling_matches_brute_force(
        (xlo, xhi) in range(),
        (ylo, yhi) in range(),
        c in -20i64..20,
        r in rel(),
    ) {
        let db = Database::new();
        let goal = format!(
            "X in {xlo} .. {xhi}, Y in {ylo} .. {yhi}, X*Y - X {} {c}, label([X,Y]).",
            r.op()
        );
        let mut expected = Vec::new();
        for x in xlo..=xhi {
            for y in ylo..=yhi {
                if r.holds(x * y - x, c) {
                    expected.push(format!("X = {x}, Y = {y}"));
                }
            }
        }
        prop_assert_eq!(solve_all(&db, &goal).unwrap(), expected, "{}", goal);
    }

    #[test]
    fn constraints_posted_after_labeling_agree(
        (xlo, xhi) in range(),
        a in -4i64..5,
        c in -20i64..20,
        r in rel(),
    ) {
        // Posting on a bound variable is a plain check.
        let db = Database::new();
        let early = solve_all(&db, &format!("X in {xlo} .. {xhi}, {a}*X {} {c}, label([X]).", r.op())).unwrap();
        let late = solve_all(&db, &format!("X in {xlo} .. {xhi}, label([X]), {a}*X {} {c}.", r.op())).unwrap();
        prop_assert_eq!(early, late);
    }
}
