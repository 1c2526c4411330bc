//! The solver: an explicit goal list plus a choice-point stack.

use std::cmp::Ordering;
use std::rc::Rc;
use std::sync::Arc;
use std::time::Instant;

use super::arith::{compare, eval_arith};
use super::{is_builtin, Answer, Database, EngineError, ResourceKind, SolveOptions};
use crate::clp::{ConstraintStore, Relation};
use crate::reader::{format_term, FormatOptions};
use crate::term::{rename_apart, BindingStore, Clause, Term, TrailMark, VarId, VarNames, NIL};

/// How often (in steps) the wall clock is consulted.
const CLOCK_INTERVAL: u64 = 256;

enum Frame {
    Call { goal: Term, depth: usize },
    /// Only pushed when tracing, to report the exit port.
    Exit { goal: Term, depth: usize },
    /// End of a (sub-)query.
    Barrier,
}

struct Node {
    frame: Frame,
    next: Goals,
}

type Goals = Option<Rc<Node>>;

// Goal lists can grow very long under deep recursion; unlink them
// iteratively so dropping one cannot exhaust the stack.
impl Drop for Node {
    fn drop(&mut self) {
        let mut next = self.next.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => next = node.next.take(),
                Err(_) => break,
            }
        }
    }
}

fn push(frame: Frame, next: Goals) -> Goals {
    Some(Rc::new(Node { frame, next }))
}

#[derive(Clone, Copy)]
struct Mark {
    bindings: TrailMark,
    constraints: usize,
}

enum Alternative<'db> {
    Clauses {
        goal: Term,
        depth: usize,
        clauses: &'db [Clause],
        next: usize,
        cont: Goals,
    },
    Goals(Goals),
    Label {
        var: VarId,
        next: i64,
        hi: i64,
        cont: Goals,
    },
}

struct ChoicePoint<'db> {
    mark: Mark,
    alt: Alternative<'db>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Fresh,
    Yielded,
    Done,
}

/// A lazy, ordered stream of answers to one query.
pub struct Solutions<'db> {
    db: &'db Database,
    store: BindingStore,
    clp: ConstraintStore,
    goals: Goals,
    choices: Vec<ChoicePoint<'db>>,
    query_vars: Vec<(String, VarId)>,
    names: Arc<VarNames>,
    options: SolveOptions,
    started: Instant,
    steps: u64,
    produced: usize,
    state: State,
    initial: Mark,
    output: String,
    trace_lines: Vec<String>,
    trace_sink: Option<Box<dyn FnMut(&str) + 'db>>,
}

impl<'db> Solutions<'db> {
    pub(super) fn new(
        db: &'db Database,
        goal: Term,
        query_vars: Vec<(String, VarId)>,
        options: SolveOptions,
    ) -> Solutions<'db> {
        let mut max_var = 0u32;
        goal.for_each_var(&mut |v| max_var = max_var.max(v.0 + 1));
        for (_, v) in &query_vars {
            max_var = max_var.max(v.0 + 1);
        }
        let mut store = BindingStore::with_vars(max_var);
        store.set_occurs_check(options.occurs_check);
        let names: VarNames = query_vars
            .iter()
            .map(|(n, v)| (*v, Arc::from(n.as_str())))
            .collect();
        let initial = Mark {
            bindings: store.mark(),
            constraints: 0,
        };
        Solutions {
            db,
            store,
            clp: ConstraintStore::new(),
            goals: push(Frame::Call { goal, depth: 1 }, push(Frame::Barrier, None)),
            choices: Vec::new(),
            query_vars,
            names: Arc::new(names),
            options,
            started: Instant::now(),
            steps: 0,
            produced: 0,
            state: State::Fresh,
            initial,
            output: String::new(),
            trace_lines: Vec::new(),
            trace_sink: None,
        }
    }

    /// Streams trace lines to `sink` instead of buffering them. Enables
    /// tracing.
    pub fn with_trace_sink(mut self, sink: impl FnMut(&str) + 'db) -> Self {
        self.options.trace = true;
        self.trace_sink = Some(Box::new(sink));
        self
    }

    /// Text written by `write/1` and `nl/0` so far.
    pub fn output(&self) -> &str {
        &self.output
    }

    pub fn take_output(&mut self) -> String {
        std::mem::take(&mut self.output)
    }

    /// Buffered trace lines (when tracing without a sink).
    pub fn trace(&self) -> &[String] {
        &self.trace_lines
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// The binding store; fully unwound once the stream is exhausted.
    pub fn store(&self) -> &BindingStore {
        &self.store
    }

    pub fn var_names(&self) -> &VarNames {
        &self.names
    }

    /// Produces the next answer, or `None` once the search is exhausted.
    /// After an error the stream is finished.
    pub fn next_solution(&mut self) -> Result<Option<Answer>, EngineError> {
        if self.state == State::Done {
            return Ok(None);
        }
        if let Some(max) = self.options.limits.max_solutions {
            if self.produced >= max {
                self.finish();
                return Ok(None);
            }
        }
        let found = match self.state {
            State::Fresh => self.run(0),
            _ => match self.backtrack(0) {
                Ok(true) => self.run(0),
                other => other,
            },
        };
        match found {
            Ok(true) => {
                self.state = State::Yielded;
                self.produced += 1;
                Ok(Some(self.answer()))
            }
            Ok(false) => {
                self.finish();
                Ok(None)
            }
            Err(e) => {
                self.finish();
                Err(e)
            }
        }
    }

    /// Collects up to `n` answers.
    pub fn take_answers(&mut self, n: usize) -> Result<Vec<Answer>, EngineError> {
        let mut out = Vec::new();
        while out.len() < n {
            match self.next_solution()? {
                Some(a) => out.push(a),
                None => break,
            }
        }
        Ok(out)
    }

    fn finish(&mut self) {
        self.state = State::Done;
        self.choices.clear();
        self.goals = None;
        self.undo(self.initial);
    }

    fn answer(&self) -> Answer {
        let bindings = self
            .query_vars
            .iter()
            .filter_map(|(name, v)| {
                let value = self.store.reify(&Term::Var(*v));
                (value != Term::Var(*v)).then(|| (name.clone(), value))
            })
            .collect();
        Answer {
            bindings,
            names: Arc::clone(&self.names),
        }
    }

    fn mark(&mut self) -> Mark {
        Mark {
            bindings: self.store.mark(),
            constraints: self.clp.mark(),
        }
    }

    fn undo(&mut self, mark: Mark) {
        self.store
            .undo_to(mark.bindings)
            .expect("choice-point marks are never stale");
        self.clp.undo_to(mark.constraints);
    }

    fn emit_trace(&mut self, port: &str, depth: usize, goal: &Term) {
        if !self.options.trace {
            return;
        }
        let goal = self.store.reify(goal);
        let line = format!(
            "{port} {depth} {}",
            format_term(&goal, &FormatOptions::quoted().with_names(&self.names))
        );
        match self.trace_sink.as_mut() {
            Some(sink) => sink(&line),
            None => self.trace_lines.push(line),
        }
    }

    /// Runs until the next barrier (success) or until the choice stack is
    /// back to `base` with nothing left to try (failure).
    fn run(&mut self, base: usize) -> Result<bool, EngineError> {
        loop {
            let Some(node) = self.goals.take() else {
                return Ok(true);
            };
            self.goals = node.next.clone();
            match &node.frame {
                Frame::Barrier => return Ok(true),
                Frame::Exit { goal, depth } => self.emit_trace("exit", *depth, goal),
                Frame::Call { goal, depth } => {
                    let t0 = self.store.trail_len();
                    let ok = self.call(goal, *depth)? && self.wake(t0)?;
                    if !ok && !self.backtrack(base)? {
                        return Ok(false);
                    }
                }
            }
        }
    }

    /// Lets the constraint store react to bindings made since `t0`.
    fn wake(&mut self, t0: usize) -> Result<bool, EngineError> {
        if self.clp.is_empty() {
            return Ok(true);
        }
        let vars: Vec<VarId> = self
            .store
            .bound_since(t0)
            .iter()
            .copied()
            .filter(|v| self.clp.is_enrolled(*v))
            .collect();
        if vars.is_empty() {
            return Ok(true);
        }
        self.clp.wake(&mut self.store, &vars)
    }

    /// Resumes the most recent alternative above `base`.
    fn backtrack(&mut self, base: usize) -> Result<bool, EngineError> {
        while self.choices.len() > base {
            let cp = self.choices.pop().unwrap();
            self.undo(cp.mark);
            let t0 = self.store.trail_len();
            let resumed = match cp.alt {
                Alternative::Goals(goals) => {
                    self.store.release(cp.mark.bindings);
                    self.goals = goals;
                    true
                }
                Alternative::Clauses {
                    goal,
                    depth,
                    clauses,
                    next,
                    cont,
                } => {
                    self.emit_trace("redo", depth, &goal);
                    self.try_clauses(goal, depth, clauses, next, cont, cp.mark)
                }
                Alternative::Label {
                    var,
                    next,
                    hi,
                    cont,
                } => self.try_label(var, next, hi, cont, cp.mark)?,
            };
            if resumed && self.wake(t0)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn tick(&mut self, depth: usize) -> Result<(), EngineError> {
        self.steps += 1;
        let limits = &self.options.limits;
        if self.steps > limits.max_steps {
            return Err(EngineError::Resource(ResourceKind::Steps(limits.max_steps)));
        }
        if depth > limits.max_depth {
            return Err(EngineError::Resource(ResourceKind::Depth(limits.max_depth)));
        }
        if let Some(timeout) = limits.timeout {
            if self.steps.is_multiple_of(CLOCK_INTERVAL) && self.started.elapsed() > timeout {
                return Err(EngineError::Resource(ResourceKind::Time));
            }
        }
        Ok(())
    }

    fn call(&mut self, goal: &Term, depth: usize) -> Result<bool, EngineError> {
        self.tick(depth)?;
        let goal = self.store.walk(goal).clone();
        let (name, arity) = match &goal {
            Term::Var(_) => {
                return Err(EngineError::Instantiation(
                    "goal is an unbound variable".into(),
                ))
            }
            Term::Int(_) | Term::Float(_) => {
                return Err(EngineError::type_error("callable", goal.to_string()))
            }
            t => t.functor().unwrap(),
        };
        let args = goal.args();
        match (name, arity) {
            (",", 2) => {
                let rest = push(
                    Frame::Call {
                        goal: args[1].clone(),
                        depth,
                    },
                    self.goals.take(),
                );
                self.goals = push(
                    Frame::Call {
                        goal: args[0].clone(),
                        depth,
                    },
                    rest,
                );
                Ok(true)
            }
            ("true", 0) => Ok(true),
            (";", 2) => {
                let mark = self.mark();
                let cont = self.goals.take();
                self.choices.push(ChoicePoint {
                    mark,
                    alt: Alternative::Goals(push(
                        Frame::Call {
                            goal: args[1].clone(),
                            depth,
                        },
                        cont.clone(),
                    )),
                });
                self.goals = push(
                    Frame::Call {
                        goal: args[0].clone(),
                        depth,
                    },
                    cont,
                );
                Ok(true)
            }
            ("call", 1) => {
                self.goals = push(
                    Frame::Call {
                        goal: args[0].clone(),
                        depth: depth + 1,
                    },
                    self.goals.take(),
                );
                Ok(true)
            }
            ("\\+", 1) => {
                self.emit_trace("call", depth, &goal);
                let found = self.sub_solve(&args[0], depth + 1, false)?;
                self.emit_trace(if found { "fail" } else { "exit" }, depth, &goal);
                Ok(!found)
            }
            ("once", 1) => {
                self.emit_trace("call", depth, &goal);
                let found = self.sub_solve(&args[0], depth + 1, true)?;
                self.emit_trace(if found { "exit" } else { "fail" }, depth, &goal);
                Ok(found)
            }
            ("label", 1) => self.label(&args[0], depth),
            _ if is_builtin(name, arity) => {
                self.emit_trace("call", depth, &goal);
                let ok = self.builtin(name, args)?;
                self.emit_trace(if ok { "exit" } else { "fail" }, depth, &goal);
                Ok(ok)
            }
            _ => {
                let db = self.db;
                let clauses = db
                    .clauses(name, arity)
                    .ok_or_else(|| EngineError::Existence {
                        name: name.to_string(),
                        arity,
                    })?;
                self.emit_trace("call", depth, &goal);
                let mark = self.mark();
                let cont = self.goals.take();
                Ok(self.try_clauses(goal.clone(), depth, clauses, 0, cont, mark))
            }
        }
    }

    /// Tries clauses from index `start` on; leaves a choice point behind if
    /// more remain after the first match.
    fn try_clauses(
        &mut self,
        goal: Term,
        depth: usize,
        clauses: &'db [Clause],
        start: usize,
        cont: Goals,
        mark: Mark,
    ) -> bool {
        for i in start..clauses.len() {
            let renamed = rename_apart(&clauses[i], &mut self.store);
            if self.store.unify(&renamed.head, &goal) {
                let mut goals = cont.clone();
                if self.options.trace {
                    goals = push(
                        Frame::Exit {
                            goal: goal.clone(),
                            depth,
                        },
                        goals,
                    );
                }
                for g in renamed.body.into_iter().rev() {
                    goals = push(
                        Frame::Call {
                            goal: g,
                            depth: depth + 1,
                        },
                        goals,
                    );
                }
                if i + 1 < clauses.len() {
                    self.choices.push(ChoicePoint {
                        mark,
                        alt: Alternative::Clauses {
                            goal,
                            depth,
                            clauses,
                            next: i + 1,
                            cont,
                        },
                    });
                } else {
                    self.store.release(mark.bindings);
                }
                self.goals = goals;
                return true;
            }
            self.undo(mark);
        }
        self.emit_trace("fail", depth, &goal);
        self.store.release(mark.bindings);
        false
    }

    /// Proves `goal` in isolation. With `keep`, the first solution's
    /// bindings stay; otherwise everything is undone.
    fn sub_solve(&mut self, goal: &Term, depth: usize, keep: bool) -> Result<bool, EngineError> {
        let saved = self.goals.take();
        let mark = self.mark();
        let base = self.choices.len();
        self.goals = push(
            Frame::Call {
                goal: goal.clone(),
                depth,
            },
            push(Frame::Barrier, None),
        );
        let result = self.run(base);
        self.choices.truncate(base);
        self.goals = saved;
        let found = result?;
        if found && keep {
            self.store.release(mark.bindings);
        } else {
            self.undo(mark);
            self.store.release(mark.bindings);
        }
        Ok(found)
    }

    fn label(&mut self, list: &Term, depth: usize) -> Result<bool, EngineError> {
        let mut cursor = self.store.walk(list).clone();
        let mut target = None;
        loop {
            match cursor {
                Term::Atom(ref a) if &**a == NIL => break,
                Term::Struct(ref f, ref args) if &**f == "." && args.len() == 2 => {
                    match self.store.walk(&args[0]) {
                        Term::Var(v) if target.is_none() => target = Some(*v),
                        Term::Var(_) | Term::Int(_) => {}
                        other => return Err(EngineError::type_error("integer", other.to_string())),
                    }
                    cursor = self.store.walk(&args[1]).clone();
                }
                Term::Var(_) => {
                    return Err(EngineError::Instantiation(
                        "label/1 needs a proper list".into(),
                    ))
                }
                other => return Err(EngineError::type_error("list", other.to_string())),
            }
        }
        let Some(var) = target else {
            return Ok(true);
        };
        let Some(dom) = self.clp.domain(&self.store, &Term::Var(var)) else {
            return Err(EngineError::Usage(
                "label/1: variable has no finite domain".into(),
            ));
        };
        let cont = push(
            Frame::Call {
                goal: Term::compound("label", vec![list.clone()]),
                depth,
            },
            self.goals.take(),
        );
        let mark = self.mark();
        self.try_label(var, dom.lo, dom.hi, cont, mark)
    }

    fn try_label(
        &mut self,
        var: VarId,
        from: i64,
        hi: i64,
        cont: Goals,
        mark: Mark,
    ) -> Result<bool, EngineError> {
        let mut value = from;
        while value <= hi {
            self.tick(0)?;
            let t0 = self.store.trail_len();
            if self.store.unify(&Term::Var(var), &Term::Int(value)) && self.wake(t0)? {
                if value < hi {
                    self.choices.push(ChoicePoint {
                        mark,
                        alt: Alternative::Label {
                            var,
                            next: value + 1,
                            hi,
                            cont: cont.clone(),
                        },
                    });
                } else {
                    self.store.release(mark.bindings);
                }
                self.goals = cont;
                return Ok(true);
            }
            self.undo(mark);
            value += 1;
        }
        self.store.release(mark.bindings);
        Ok(false)
    }

    fn builtin(&mut self, name: &str, args: &[Term]) -> Result<bool, EngineError> {
        let arith_cmp = |s: &Self, want: fn(Ordering) -> bool| -> Result<bool, EngineError> {
            let a = eval_arith(&args[0], &s.store)?;
            let b = eval_arith(&args[1], &s.store)?;
            Ok(want(compare(a, b)))
        };
        match name {
            "fail" | "false" => Ok(false),
            "=" => Ok(self.store.unify(&args[0], &args[1])),
            "\\=" => Ok(!self.store.unifiable(&args[0], &args[1])),
            "==" => Ok(self.store.reify(&args[0]) == self.store.reify(&args[1])),
            "\\==" => Ok(self.store.reify(&args[0]) != self.store.reify(&args[1])),
            "is" => {
                let value = eval_arith(&args[1], &self.store)?.to_term();
                Ok(self.store.unify(&args[0], &value))
            }
            "<" => arith_cmp(self, |o| o == Ordering::Less),
            ">" => arith_cmp(self, |o| o == Ordering::Greater),
            "=<" => arith_cmp(self, |o| o != Ordering::Greater),
            ">=" => arith_cmp(self, |o| o != Ordering::Less),
            "=:=" => arith_cmp(self, |o| o == Ordering::Equal),
            "=\\=" => arith_cmp(self, |o| o != Ordering::Equal),
            "write" => {
                let t = self.store.reify(&args[0]);
                let text = format_term(&t, &FormatOptions::plain().with_names(&self.names));
                self.output.push_str(&text);
                Ok(true)
            }
            "nl" => {
                self.output.push('\n');
                Ok(true)
            }
            "domain_error" => Err(EngineError::Domain {
                domain: format_term(&self.store.reify(&args[0]), &FormatOptions::plain()),
                culprit: self.store.reify(&args[1]).to_string(),
            }),
            "#=" => self.post(Relation::Eq, args),
            "#<" => self.post(Relation::Lt, args),
            "#=<" => self.post(Relation::Le, args),
            "#>" => self.post(Relation::Gt, args),
            "#>=" => self.post(Relation::Ge, args),
            "in" => {
                let range = self.store.walk(&args[1]).clone();
                let bounds = match &range {
                    Term::Struct(f, r) if &**f == ".." && r.len() == 2 => {
                        match (self.store.walk(&r[0]), self.store.walk(&r[1])) {
                            (Term::Int(lo), Term::Int(hi)) => Some((*lo, *hi)),
                            (Term::Var(_), _) | (_, Term::Var(_)) => {
                                return Err(EngineError::Instantiation(
                                    "domain bounds must be integers".into(),
                                ))
                            }
                            _ => None,
                        }
                    }
                    _ => None,
                };
                let Some((lo, hi)) = bounds else {
                    return Err(EngineError::type_error(
                        "range",
                        self.store.reify(&range).to_string(),
                    ));
                };
                self.clp.declare_domain(&mut self.store, &args[0], lo, hi)
            }
            _ => unreachable!("builtin {name} has no implementation"),
        }
    }

    fn post(&mut self, rel: Relation, args: &[Term]) -> Result<bool, EngineError> {
        self.clp.post(&mut self.store, rel, &args[0], &args[1])
    }
}

impl Iterator for Solutions<'_> {
    type Item = Result<Answer, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_solution().transpose()
    }
}
