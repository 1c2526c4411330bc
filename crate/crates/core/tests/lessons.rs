use mathlog_core::lessons::{self, fractions_variant, FractionsVariant};
use mathlog_core::{read_term, Database, EngineError, Error, SolveOptions, Term};

fn load(program: &str) -> Database {
    let mut db = Database::new();
    db.consult_text(program).unwrap();
    db
}

fn lines(db: &Database, goal: &str) -> Vec<String> {
    let mut sols = db.solve_text(goal, SolveOptions::default()).unwrap();
    let mut out = Vec::new();
    while let Some(a) = sols.next_solution().unwrap() {
        out.push(a.to_line());
    }
    out
}

fn first_value(db: &Database, goal: &str, var: &str) -> Term {
    let mut sols = db.solve_text(goal, SolveOptions::default()).unwrap();
    let answer = sols.next_solution().unwrap().expect("a solution");
    answer.get(var).cloned().expect("variable bound")
}

fn term(text: &str) -> Term {
    read_term(text).unwrap().term
}

#[test]
fn every_canonical_goal_passes() {
    let mut failures = Vec::new();
    for pack in lessons::catalog() {
        for report in pack.check() {
            if !report.passed {
                failures.push(format!("{}: {}\n{}", pack.name, report.goal, report.detail));
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n\n"));
}

// ---------------------------------------------------------------- fractions

#[test]
fn fraction_sum_is_symbolic() {
    let db = lessons::lesson_fractions().database();
    let r = first_value(&db, "add(fract(3,8),fract(4,7),R).", "R");
    let expected = Term::compound(
        "fract",
        vec![
            Term::compound(
                "+",
                vec![
                    Term::compound("*", vec![Term::Int(3), Term::Int(7)]),
                    Term::compound("*", vec![Term::Int(4), Term::Int(8)]),
                ],
            ),
            Term::compound("*", vec![Term::Int(8), Term::Int(7)]),
        ],
    );
    assert_eq!(r, expected);
}

#[test]
fn fraction_sum_evaluates_with_is() {
    let db = lessons::lesson_fractions().database();
    let goal = "add(fract(3,8),fract(4,7),fract(N,D)), Num is N, Den is D.";
    let mut sols = db.solve_text(goal, SolveOptions::default()).unwrap();
    let a = sols.next_solution().unwrap().unwrap();
    assert_eq!(a.get("Num"), Some(&Term::Int(3 * 7 + 4 * 8)));
    assert_eq!(a.get("Den"), Some(&Term::Int(8 * 7)));
}

#[test]
fn symbolic_operands_stay_symbolic() {
    let db = lessons::lesson_fractions().database();
    assert_eq!(
        first_value(&db, "add(fract(red,blue),fract(green,yellow),R).", "R"),
        term("fract(red*yellow+green*blue, blue*yellow)")
    );
    assert_eq!(
        first_value(&db, "add(fract(x,2*y),fract(2*x,z),R).", "R"),
        term("fract(x*z+2*x*(2*y), 2*y*z)")
    );
}

#[test]
fn evaluating_variants() {
    for v in [FractionsVariant::Compare, FractionsVariant::Shared] {
        let db = load(fractions_variant(v));
        assert_eq!(
            first_value(&db, "add(fract(1,4),fract(1,4),R).", "R"),
            term("fract(2,4)")
        );
        assert_eq!(
            first_value(&db, "add(fract(3,8),fract(4,7),R).", "R"),
            term("fract(53,8*7)")
        );
        // Symbols cannot be evaluated by is/2.
        let err = db
            .solve_text("add(fract(red,blue),fract(green,yellow),R).", SolveOptions::default())
            .unwrap()
            .next_solution()
            .unwrap_err();
        assert!(matches!(err, EngineError::Type { .. }), "{err}");
    }
}

#[test]
fn like_denominators_give_one_answer() {
    let db = lessons::lesson_fractions().database();
    assert_eq!(lines(&db, "add(fract(1,4),fract(1,4),R)."), ["R = fract(1+1,4)"]);
}

// ---------------------------------------------------------------- points

const POINTS: [(i64, i64); 9] = [
    (-4, 4),
    (-3, 2),
    (-1, 1),
    (0, 0),
    (-3, 0),
    (1, 3),
    (3, 3),
    (-4, -4),
    (3, -3),
];

type Line = ((i64, i64), (i64, i64));

fn oracle_lines() -> Vec<Line> {
    let mut out = Vec::new();
    for &p in &POINTS {
        for &q in &POINTS {
            if p != q {
                out.push((p, q));
            }
        }
    }
    out
}

fn horiz(l: Line) -> bool {
    l.0 .1 == l.1 .1
}

fn vert(l: Line) -> bool {
    l.0 .0 == l.1 .0
}

fn show_line(l: Line) -> String {
    format!("[({},{}),({},{})]", l.0 .0, l.0 .1, l.1 .0, l.1 .1)
}

#[test]
fn lines_enumerate_ordered_pairs() {
    let db = lessons::lesson_points().database();
    let expected: Vec<String> = oracle_lines()
        .into_iter()
        .map(|l| format!("L = {}", show_line(l)))
        .collect();
    assert_eq!(lines(&db, "line(L)."), expected);
    assert_eq!(expected.len(), 72);
}

#[test]
fn horizontal_and_vertical_lines() {
    let db = lessons::lesson_points().database();
    let h: Vec<String> = oracle_lines()
        .into_iter()
        .filter(|&l| horiz(l))
        .map(|l| format!("L = {}", show_line(l)))
        .collect();
    let v: Vec<String> = oracle_lines()
        .into_iter()
        .filter(|&l| vert(l))
        .map(|l| format!("L = {}", show_line(l)))
        .collect();
    assert_eq!(lines(&db, "line(L), horiz(L)."), h);
    assert_eq!(lines(&db, "line(L), vert(L)."), v);
    assert_eq!(h.len(), 4);
    assert_eq!(v.len(), 6);
}

#[test]
fn horizontal_and_vertical_sets_closed_under_reversal() {
    for pred in [horiz, vert] {
        let set: Vec<Line> = oracle_lines().into_iter().filter(|&l| pred(l)).collect();
        for &(p, q) in &set {
            assert!(set.contains(&(q, p)));
        }
    }
}

/// All answers of `line(A), line(B), perp(A,B)` in resolution order: both
/// perp clauses are tried for every pair, horizontal-first.
fn oracle_perp() -> Vec<(Line, Line)> {
    let mut out = Vec::new();
    for a in oracle_lines() {
        for b in oracle_lines() {
            if horiz(a) && vert(b) {
                out.push((a, b));
            }
            if vert(a) && horiz(b) {
                out.push((a, b));
            }
        }
    }
    out
}

fn show_pair((a, b): (Line, Line)) -> String {
    format!("A = {}, B = {}", show_line(a), show_line(b))
}

#[test]
fn perpendicular_pairs_follow_resolution_order() {
    let db = lessons::lesson_points().database();
    let expected: Vec<String> = oracle_perp().into_iter().map(show_pair).collect();
    assert_eq!(lines(&db, "line(A), line(B), perp(A,B)."), expected);
    assert_eq!(expected.len(), 48);
}

#[test]
fn perpendicular_set_is_symmetric() {
    let pairs = oracle_perp();
    for &(a, b) in &pairs {
        assert!(pairs.contains(&(b, a)));
    }
}

#[test]
fn horizontal_first_pairs_form_one_block() {
    // With A fixed to the first horizontal line, B runs over the vertical
    // lines in order.
    let db = lessons::lesson_points().database();
    let got = lines(&db, "A = [(0,0),(-3,0)], line(A), line(B), perp(A,B).");
    let expected: Vec<String> = oracle_lines()
        .into_iter()
        .filter(|&l| vert(l))
        .map(|b| {
            format!(
                "A = [(0,0),(-3,0)], B = {}",
                show_line(b)
            )
        })
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn perp_first_goal_order() {
    let db = lessons::lesson_points().database();
    let got = lines(&db, "perp(A,B), line(A), line(B).");
    let mut expected = Vec::new();
    // perp/2 clause 1 enumerates horiz(A) then vert(B) from the open
    // patterns, then line/1 checks both; clause 2 the other way round.
    for a in oracle_lines().into_iter().filter(|&l| horiz(l)) {
        for b in oracle_lines().into_iter().filter(|&l| vert(l)) {
            expected.push(show_pair((a, b)));
        }
    }
    for a in oracle_lines().into_iter().filter(|&l| vert(l)) {
        for b in oracle_lines().into_iter().filter(|&l| horiz(l)) {
            expected.push(show_pair((a, b)));
        }
    }
    assert_eq!(got, expected);
}

#[test]
fn right_triangles_match_brute_force() {
    let db = lessons::lesson_points().database();
    let got = lines(&db, "rtri(P1,P2,P3).");
    let mut expected = Vec::new();
    for &p1 in &POINTS {
        for &p2 in &POINTS {
            for &p3 in &POINTS {
                if p1 == p2 || p2 == p3 || p3 == p1 {
                    continue;
                }
                let (l1, l2) = ((p1, p2), (p2, p3));
                let hits = usize::from(horiz(l1) && vert(l2)) + usize::from(vert(l1) && horiz(l2));
                for _ in 0..hits {
                    expected.push(format!(
                        "P1 = ({},{}), P2 = ({},{}), P3 = ({},{})",
                        p1.0, p1.1, p2.0, p2.1, p3.0, p3.1
                    ));
                }
            }
        }
    }
    assert_eq!(got, expected);
    assert!(got.contains(&"P1 = (-3,2), P2 = (-3,0), P3 = (0,0)".to_string()));
}

#[test]
fn slope_perpendicularity_matches_cross_product() {
    let db = lessons::lesson_points().database();
    let got = lines(&db, "line(A), line(B), perp_slope(A,B).");
    let mut expected = Vec::new();
    for a in oracle_lines() {
        for b in oracle_lines() {
            let ((x1, y1), (x2, y2)) = a;
            let ((x3, y3), (x4, y4)) = b;
            if x1 != x2 && x3 != x4 && (y2 - y1) * (y4 - y3) + (x2 - x1) * (x4 - x3) == 0 {
                expected.push(show_pair((a, b)));
            }
        }
    }
    assert!(!expected.is_empty());
    assert_eq!(got, expected);
}

// ---------------------------------------------------------------- units

const FACTS: [(&str, &str); 8] = [
    ("ft", "inch"),
    ("yard", "ft"),
    ("mile", "ft"),
    ("yard", "furlong"),
    ("cm", "inch"),
    ("mm", "cm"),
    ("cm", "meter"),
    ("meter", "km"),
];

fn direct(x: &str) -> Vec<&'static str> {
    let forward = FACTS.iter().filter(|f| f.0 == x).map(|f| f.1);
    let backward = FACTS.iter().filter(|f| f.1 == x).map(|f| f.0);
    forward.chain(backward).collect()
}

/// Every plan `convert/3` produces, in order, by the same depth-first
/// search with the terminal case first.
fn oracle_plans(from: &str, to: &str) -> Vec<Vec<String>> {
    fn go(x: &str, y: &str, trail: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if x == y {
            let mut plan = trail.clone();
            plan.push(x.to_string());
            out.push(plan);
        }
        for z in direct(x) {
            if trail.iter().any(|t| t == z) {
                continue;
            }
            trail.push(x.to_string());
            go(z, y, trail, out);
            trail.pop();
        }
    }
    let mut out = Vec::new();
    go(from, to, &mut Vec::new(), &mut out);
    out
}

#[test]
fn conversion_plans_match_depth_first_search() {
    let db = lessons::lesson_units().database();
    let units = ["inch", "ft", "yard", "mile", "furlong", "cm", "mm", "meter", "km"];
    for from in units {
        for to in units {
            let expected: Vec<String> = oracle_plans(from, to)
                .into_iter()
                .map(|p| format!("Plan = [{}]", p.join(",")))
                .collect();
            let got = lines(&db, &format!("convert({from},{to},Plan)."));
            assert_eq!(got, expected, "{from} -> {to}");
        }
    }
}

#[test]
fn canonical_conversions() {
    assert_eq!(
        oracle_plans("inch", "km")[0],
        ["inch", "cm", "meter", "km"]
    );
    assert_eq!(
        oracle_plans("mile", "furlong")[0],
        ["mile", "ft", "yard", "furlong"]
    );
    assert_eq!(oracle_plans("km", "km")[0], ["km"]);
}

#[test]
fn plans_are_chains_of_direct_conversions_without_repeats() {
    let units = ["inch", "ft", "yard", "mile", "furlong", "cm", "mm", "meter", "km"];
    for from in units {
        for to in units {
            for plan in oracle_plans(from, to) {
                for w in plan.windows(2) {
                    assert!(direct(&w[0]).contains(&w[1].as_str()));
                }
                let mut sorted = plan.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), plan.len());
            }
        }
    }
}

// ---------------------------------------------------------------- triangle

const RULES: [(&[char], &str); 8] = [
    (&['c', 'a', 'b'], "c^2=a^2+b^2"),
    (&['d', 'e'], "d+e+90=180"),
    (&['d', 'a', 'c'], "sin(d)=a/c"),
    (&['d', 'b', 'c'], "cos(d)=b/c"),
    (&['d', 'a', 'b'], "tan(d)=a/b"),
    (&['e', 'b', 'c'], "sin(e)=b/c"),
    (&['e', 'a', 'c'], "cos(e)=a/c"),
    (&['e', 'b', 'a'], "tan(e)=b/a"),
];

/// Source-order forward chaining: fire the first rule with exactly one
/// unknown, prepend it to the knowns, repeat.
fn oracle_plan(knowns: &[char]) -> Vec<(char, &'static str)> {
    let mut known: Vec<char> = knowns.to_vec();
    let mut steps = Vec::new();
    loop {
        let fired = RULES.iter().find_map(|(vars, desc)| {
            let unknown: Vec<char> = vars.iter().copied().filter(|v| !known.contains(v)).collect();
            (unknown.len() == 1).then(|| (unknown[0], *desc))
        });
        match fired {
            Some((x, desc)) => {
                steps.push((x, desc));
                known.insert(0, x);
            }
            None => return steps,
        }
    }
}

fn show_knowns(k: &[char]) -> String {
    let items: Vec<String> = k.iter().map(|c| c.to_string()).collect();
    format!("[{}]", items.join(","))
}

#[test]
fn plans_match_forward_chaining() {
    let db = lessons::lesson_triangle().database();
    let all = ['a', 'b', 'c', 'd', 'e'];
    for mask in 0u32..32 {
        let knowns: Vec<char> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, c)| *c)
            .collect();
        let steps = oracle_plan(&knowns);
        let shown: Vec<String> = steps.iter().map(|(x, d)| format!("({x},'{d}')")).collect();
        let expected = format!("S = [{}]", shown.join(","));
        let got = lines(&db, &format!("plan({},S).", show_knowns(&knowns)));
        assert_eq!(got, [expected], "knowns {knowns:?}");

        // Planned quantities are new and stay within the five quantities.
        for (x, _) in &steps {
            assert!(!knowns.contains(x));
            assert!(all.contains(x));
        }
    }
}

#[test]
fn worked_plans() {
    assert_eq!(
        oracle_plan(&['a', 'b']),
        [
            ('c', "c^2=a^2+b^2"),
            ('d', "sin(d)=a/c"),
            ('e', "d+e+90=180")
        ]
    );
    assert!(oracle_plan(&['d', 'e']).is_empty());
}

#[test]
fn advise_prints_each_step() {
    let db = lessons::lesson_triangle().database();
    let mut sols = db.solve_text("advise([b,c]).", SolveOptions::default()).unwrap();
    assert!(sols.next_solution().unwrap().is_some());
    let mut expected = String::new();
    let mut known = vec!['b', 'c'];
    for (x, desc) in oracle_plan(&known.clone()) {
        known.insert(0, x);
        expected.push_str(&format!(
            "Solve for {x} using \n{desc}\nYou now know \n{}\n\n",
            show_knowns(&known)
        ));
    }
    assert_eq!(sols.output(), expected);
    assert_eq!(sols.output(), lessons::ADVISE_BC_OUTPUT);
    assert_eq!(sols.next_solution().unwrap(), None);
}

#[test]
fn unknown_quantity_is_a_domain_error() {
    let db = lessons::lesson_triangle().database();
    let err = db
        .solve_text("plan([b,z],S).", SolveOptions::default())
        .unwrap()
        .next_solution()
        .unwrap_err();
    assert!(matches!(err, EngineError::Domain { .. }), "{err}");
    assert!(err.to_string().contains('z'));
}

// ---------------------------------------------------------------- constraints

fn fib(n: u32) -> i64 {
    let (mut a, mut b) = (0i64, 1i64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

#[test]
fn reverse_fraction_denominator() {
    // 2/d + 3/7 = 1/2, checked exactly over the whole range.
    let oracle: Vec<i64> = (1..=10_000i64)
        .filter(|&d| (2 * 7 + 3 * d) * 2 == 7 * d)
        .collect();
    assert_eq!(oracle, [28]);
    let db = lessons::lesson_clp_extras().database();
    assert_eq!(
        lines(&db, "add_clp(fract(2,D1),fract(3,7),fract(1,2)), label([D1])."),
        ["D1 = 28"]
    );
}

#[test]
fn reverse_fibonacci() {
    let oracle: Vec<u32> = (0..=20).filter(|&n| fib(n) == 13).collect();
    assert_eq!(oracle, [7]);
    let db = lessons::lesson_clp_extras().database();
    assert_eq!(
        lines(&db, "fib_clp(N,13), N in 0..20, label([N])."),
        ["N = 7"]
    );
}

#[test]
fn forward_and_reverse_fibonacci_agree_with_table() {
    let db = lessons::lesson_clp_extras().database();
    for n in 0..=12u32 {
        assert_eq!(
            lines(&db, &format!("fib_clp({n},F).")),
            [format!("F = {}", fib(n))]
        );
    }
    for n in 3..=9u32 {
        let got = lines(&db, &format!("fib_clp(N,{}), label([N]).", fib(n)));
        assert_eq!(got, [format!("N = {n}")]);
    }
}

#[test]
fn whole_fraction_sum() {
    let db = lessons::lesson_clp_extras().database();
    assert_eq!(
        lines(&db, "add_clp(fract(1,2),fract(1,2),fract(N,D)), D = 1."),
        ["N = 1, D = 1"]
    );
}

#[test]
fn constraint_errors() {
    let db = lessons::lesson_clp_extras().database();
    let err = db
        .solve_text("X #= 1.5.", SolveOptions::default())
        .unwrap()
        .next_solution()
        .unwrap_err();
    assert!(matches!(err, EngineError::Type { .. }));
    let err = db
        .solve_text("label([X]).", SolveOptions::default())
        .unwrap()
        .next_solution()
        .unwrap_err();
    assert!(matches!(err, EngineError::Usage(_)));
    let err = db
        .solve_text("X in 3..1.", SolveOptions::default())
        .unwrap()
        .next_solution()
        .unwrap_err();
    assert!(matches!(err, EngineError::Domain { .. }));
}

#[test]
fn labeling_enumerates_ascending() {
    let db = Database::new();
    assert_eq!(
        lines(&db, "X in 2..4, label([X])."),
        ["X = 2", "X = 3", "X = 4"]
    );
    assert_eq!(
        lines(&db, "X in 1..2, Y in 1..2, label([X,Y])."),
        ["X = 1, Y = 1", "X = 1, Y = 2", "X = 2, Y = 1", "X = 2, Y = 2"]
    );
}

#[test]
fn constraints_from_failed_branches_are_gone() {
    let db = Database::new();
    assert_eq!(
        lines(&db, "X in 1..5, (X #> 3, fail ; true), label([X])."),
        ["X = 1", "X = 2", "X = 3", "X = 4", "X = 5"]
    );
}

#[test]
fn constraints_propagate_through_unification() {
    let db = Database::new();
    assert_eq!(lines(&db, "X #= Y + 1, Y = 3."), ["X = 4, Y = 3"]);
    assert_eq!(lines(&db, "X #= Y + 1, X = 4."), ["X = 4, Y = 3"]);
    assert!(lines(&db, "X #= X + 1.").is_empty());
    assert!(lines(&db, "X in 1..10, X #= 11.").is_empty());
    assert!(lines(&db, "X in 1..10, X = 11.").is_empty());
}

#[test]
fn syntax_error_positions_are_in_range() {
    let mut db = Database::new();
    let Err(Error::Read(errs)) = db.consult_text("p(1).\nq(1 2).\n") else {
        panic!("expected a syntax error");
    };
    assert_eq!(errs.first().pos.line, 2);
}
