//! The bundled lesson packs: programs plus canonical goals with their
//! expected results.

use crate::engine::{Database, Error, SolveOptions};

/// What a canonical goal is expected to produce. Answers are compared as
/// `Var = value` lines (`true` for an answer with no bindings).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    /// The complete answer sequence, in order.
    Exactly(&'static [&'static str]),
    /// The leading answers, in order; more may follow.
    Starts(&'static [&'static str]),
    /// Text written by the first solution.
    Output(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonicalGoal {
    pub goal: &'static str,
    pub expect: Expectation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LessonPack {
    pub name: &'static str,
    pub description: &'static str,
    pub program: &'static str,
    pub canonical_goals: &'static [CanonicalGoal],
}

impl LessonPack {
    /// File name used when the pack is exported.
    pub fn file_name(&self) -> String {
        format!("{}.pl", self.name)
    }

    /// A fresh database with this pack consulted.
    pub fn database(&self) -> Database {
        let mut db = Database::new();
        db.consult_text(self.program)
            .expect("bundled lesson programs load");
        db
    }

    /// Runs every canonical goal.
    pub fn check(&self) -> Vec<GoalReport> {
        let db = self.database();
        self.canonical_goals
            .iter()
            .map(|g| check_goal(&db, g))
            .collect()
    }
}

const fn goal(goal: &'static str, expect: Expectation) -> CanonicalGoal {
    CanonicalGoal { goal, expect }
}

use Expectation::{Exactly, Output, Starts};

/// Transcript of `advise([b,c])`. Label lines end with a space.
pub const ADVISE_BC_OUTPUT: &str = concat!(
    "Solve for a using \n",
    "c^2=a^2+b^2\n",
    "You now know \n",
    "[a,b,c]\n",
    "\n",
    "Solve for d using \n",
    "sin(d)=a/c\n",
    "You now know \n",
    "[d,a,b,c]\n",
    "\n",
    "Solve for e using \n",
    "d+e+90=180\n",
    "You now know \n",
    "[e,d,a,b,c]\n",
    "\n",
);

static FRACTIONS: LessonPack = LessonPack {
    name: "fractions",
    description: "Adding fractions symbolically, with like and unlike denominators",
    program: include_str!("../lessons/fractions.pl"),
    canonical_goals: &[
        goal(
            "add(fract(3,8),fract(4,7),R).",
            Exactly(&["R = fract(3*7+4*8,8*7)"]),
        ),
        goal(
            "add(fract(red,blue),fract(green,yellow),R).",
            Exactly(&["R = fract(red*yellow+green*blue,blue*yellow)"]),
        ),
        goal(
            "add(fract(x,2*y),fract(2*x,z),R).",
            Exactly(&["R = fract(x*z+2*x*(2*y),2*y*z)"]),
        ),
        goal(
            "add(fract(1,4),fract(1,4),R).",
            Exactly(&["R = fract(1+1,4)"]),
        ),
        goal(
            "add(fract(3,8),fract(4,7),fract(N,D)), Num is N, Den is D.",
            Exactly(&["N = 3*7+4*8, D = 8*7, Num = 53, Den = 56"]),
        ),
    ],
};

static TRIANGLE: LessonPack = LessonPack {
    name: "triangle",
    description: "Planning how to solve a right triangle from known quantities",
    program: include_str!("../lessons/triangle.pl"),
    canonical_goals: &[
        goal("advise([b,c]).", Output(ADVISE_BC_OUTPUT)),
        goal(
            "plan([a,b],S).",
            Exactly(&["S = [(c,'c^2=a^2+b^2'),(d,'sin(d)=a/c'),(e,'d+e+90=180')]"]),
        ),
        goal("plan([d,e],S).", Exactly(&["S = []"])),
    ],
};

static POINTS: LessonPack = LessonPack {
    name: "points",
    description: "Lines, horizontal and vertical lines, and perpendicularity among points",
    program: include_str!("../lessons/points.pl"),
    canonical_goals: &[
        goal(
            "line(L), horiz(L).",
            Exactly(&[
                "L = [(0,0),(-3,0)]",
                "L = [(-3,0),(0,0)]",
                "L = [(1,3),(3,3)]",
                "L = [(3,3),(1,3)]",
            ]),
        ),
        goal(
            "line(L), vert(L).",
            Exactly(&[
                "L = [(-4,4),(-4,-4)]",
                "L = [(-3,2),(-3,0)]",
                "L = [(-3,0),(-3,2)]",
                "L = [(3,3),(3,-3)]",
                "L = [(-4,-4),(-4,4)]",
                "L = [(3,-3),(3,3)]",
            ]),
        ),
        goal(
            "line(A), line(B), perp(A,B).",
            Starts(&[
                "A = [(-4,4),(-4,-4)], B = [(0,0),(-3,0)]",
                "A = [(-4,4),(-4,-4)], B = [(-3,0),(0,0)]",
                "A = [(-4,4),(-4,-4)], B = [(1,3),(3,3)]",
                "A = [(-4,4),(-4,-4)], B = [(3,3),(1,3)]",
            ]),
        ),
        goal("rtri((-3,2),(-3,0),(0,0)).", Exactly(&["true"])),
        goal(
            "perp_slope([(-1,1),(0,0)],[(0,0),(1,1)]).",
            Exactly(&["true"]),
        ),
    ],
};

static UNITS: LessonPack = LessonPack {
    name: "units",
    description: "Finding a chain of direct conversions between units",
    program: include_str!("../lessons/units.pl"),
    canonical_goals: &[
        goal(
            "convert(inch,km,Plan).",
            Starts(&["Plan = [inch,cm,meter,km]"]),
        ),
        goal(
            "convert(mile,furlong,Plan).",
            Starts(&["Plan = [mile,ft,yard,furlong]"]),
        ),
        goal("convert(km,km,Plan).", Starts(&["Plan = [km]"])),
    ],
};

static CLP_EXTRAS: LessonPack = LessonPack {
    name: "clp-extras",
    description: "Running fraction addition and Fibonacci numbers in reverse with constraints",
    program: include_str!("../lessons/clp-extras.pl"),
    canonical_goals: &[
        goal(
            "add_clp(fract(2,D1),fract(3,7),fract(1,2)), label([D1]).",
            Exactly(&["D1 = 28"]),
        ),
        goal("fib_clp(N,13), N in 0..20, label([N]).", Starts(&["N = 7"])),
        goal(
            "add_clp(fract(1,2),fract(1,2),fract(N,D)), D = 1.",
            Exactly(&["N = 1, D = 1"]),
        ),
    ],
};

static CATALOG: [&LessonPack; 5] = [&FRACTIONS, &TRIANGLE, &POINTS, &UNITS, &CLP_EXTRAS];

/// All packs, in catalog order.
pub fn catalog() -> impl Iterator<Item = &'static LessonPack> {
    CATALOG.iter().copied()
}

pub fn find(name: &str) -> Option<&'static LessonPack> {
    catalog().find(|p| p.name == name)
}

pub fn lesson_fractions() -> &'static LessonPack {
    &FRACTIONS
}

pub fn lesson_triangle() -> &'static LessonPack {
    &TRIANGLE
}

pub fn lesson_points() -> &'static LessonPack {
    &POINTS
}

pub fn lesson_units() -> &'static LessonPack {
    &UNITS
}

pub fn lesson_clp_extras() -> &'static LessonPack {
    &CLP_EXTRAS
}

/// The three ways of writing the like-denominator rule for `add/3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FractionsVariant {
    /// `D1 == D2` test, numerator evaluated with `is`.
    Compare,
    /// Shared denominator variable in the head, numerator evaluated with `is`.
    Shared,
    /// Fully symbolic head `fract(N1+N2,D)`; the default pack.
    Symbolic,
}

pub fn fractions_variant(v: FractionsVariant) -> &'static str {
    match v {
        FractionsVariant::Compare => include_str!("../lessons/fractions-compare.pl"),
        FractionsVariant::Shared => include_str!("../lessons/fractions-shared.pl"),
        FractionsVariant::Symbolic => FRACTIONS.program,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoalReport {
    pub goal: &'static str,
    pub passed: bool,
    /// What was observed, for failure messages.
    pub detail: String,
}

fn check_goal(db: &Database, g: &CanonicalGoal) -> GoalReport {
    let report = |passed: bool, detail: String| GoalReport {
        goal: g.goal,
        passed,
        detail,
    };
    let mut sols = match db.solve_text(g.goal, SolveOptions::default()) {
        Ok(s) => s,
        Err(e) => return report(false, e.to_string()),
    };
    let wanted = match g.expect {
        Exactly(a) => a.len() + 1,
        Starts(a) => a.len(),
        Output(_) => 1,
    };
    let answers = match sols.take_answers(wanted) {
        Ok(a) => a,
        Err(e) => return report(false, Error::from(e).to_string()),
    };
    let lines: Vec<String> = answers.iter().map(|a| a.to_line()).collect();
    match g.expect {
        Exactly(want) | Starts(want) => {
            let passed = lines.iter().map(String::as_str).eq(want.iter().copied());
            report(passed, lines.join("\n"))
        }
        Output(want) => {
            let out = sols.output().to_string();
            report(!answers.is_empty() && out == want, out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reader::parse_program;

    #[test]
    fn catalog_is_fixed() {
        let names: Vec<_> = catalog().map(|p| p.name).collect();
        assert_eq!(
            names,
            ["fractions", "triangle", "points", "units", "clp-extras"]
        );
        assert!(find("nosuch").is_none());
    }

    #[test]
    fn every_program_parses() {
        for pack in catalog() {
            parse_program(pack.program).unwrap_or_else(|e| panic!("{}: {e}", pack.name));
        }
        for v in [
            FractionsVariant::Compare,
            FractionsVariant::Shared,
            FractionsVariant::Symbolic,
        ] {
            parse_program(fractions_variant(v)).unwrap();
        }
    }
}
