//! Terms, bindings and unification.
//!
//! A [`Term`] is the single value type of the engine. Variables are plain
//! indices into a [`BindingStore`], which records every binding on a trail so
//! that the search can roll back to any earlier [`TrailMark`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Interned-ish name of an atom or functor.
pub type Name = Arc<str>;

/// Identifier of a logic variable inside one [`BindingStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug)]
pub enum Term {
    Atom(Name),
    Var(VarId),
    Int(i64),
    Float(f64),
    /// Compound term. The argument slice is never empty.
    Struct(Name, Arc<[Term]>),
}

pub const NIL: &str = "[]";
pub const CONS: &str = ".";

/// Recursive evaluators look for cyclic bindings once they get this deep.
/// Shallower terms never pay for the check.
pub const CYCLE_CHECK_DEPTH: usize = 512;

const UNIFY_TRACK_AFTER: usize = 10_000;

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Arc::from(name))
    }

    pub fn nil() -> Term {
        Term::atom(NIL)
    }

    /// Builds `name(args...)`; zero arguments produce an atom.
    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::atom(name)
        } else {
            Term::Struct(Arc::from(name), args.into())
        }
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::compound(",", vec![a, b])
    }

    /// Builds a list from `items` ending in `tail`.
    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Term {
        items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::compound(CONS, vec![item, acc]))
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Struct(..))
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self, Term::Atom(a) if &**a == name)
    }

    /// Name and arity for atoms and compounds.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(a) => Some((a, 0)),
            Term::Struct(f, args) => Some((f, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Struct(_, args) => args,
            _ => &[],
        }
    }

    /// Splits a proper list into its elements. Returns `None` for partial or
    /// improper lists.
    pub fn list_items(&self) -> Option<Vec<Term>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Atom(a) if &**a == NIL => return Some(items),
                Term::Struct(f, args) if &**f == CONS && args.len() == 2 => {
                    items.push(args[0].clone());
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }

    /// Calls `f` on every variable occurrence, left to right.
    pub fn for_each_var(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Term::Var(v) => f(*v),
            Term::Struct(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
            _ => {}
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Struct(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Rebuilds the term with every variable replaced by `f(var)`.
    pub fn map_vars(&self, f: &mut impl FnMut(VarId) -> Term) -> Term {
        match self {
            Term::Var(v) => f(*v),
            Term::Struct(name, args) => {
                Term::Struct(name.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
            other => other.clone(),
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Atom(a), Term::Atom(b)) => a == b,
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Int(a), Term::Int(b)) => a == b,
            // Bit equality: `2.54` is an exact token, and -0.0 differs from 0.0.
            (Term::Float(a), Term::Float(b)) => a.to_bits() == b.to_bits(),
            (Term::Struct(f, xs), Term::Struct(g, ys)) => f == g && xs == ys,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::reader::format_term(
            self,
            &crate::reader::FormatOptions::quoted(),
        ))
    }
}

/// Variable names as written in a query or clause, keyed by id.
pub type VarNames = HashMap<VarId, Name>;

/// A program clause. Facts have an empty body.
///
/// Variables are numbered densely from zero inside each clause, so renaming a
/// clause apart is a matter of offsetting ids into a fresh block.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Term>,
    pub source_index: usize,
    var_count: u32,
}

impl Clause {
    /// Normalizes variable ids to `0..n` in order of first occurrence.
    pub fn new(head: Term, body: Vec<Term>, source_index: usize) -> Clause {
        let mut map: HashMap<VarId, VarId> = HashMap::new();
        let mut renumber = |v: VarId| {
            let next = VarId(map.len() as u32);
            Term::Var(*map.entry(v).or_insert(next))
        };
        let head = head.map_vars(&mut renumber);
        let body = body.iter().map(|g| g.map_vars(&mut renumber)).collect();
        Clause {
            head,
            body,
            source_index,
            var_count: map.len() as u32,
        }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    /// Name and arity of the predicate this clause belongs to.
    pub fn key(&self) -> Option<(&str, usize)> {
        self.head.functor()
    }
}

/// Returns a copy of `clause` whose variables are fresh in `store`.
pub fn rename_apart(clause: &Clause, store: &mut BindingStore) -> Clause {
    let base = store.alloc_vars(clause.var_count);
    let mut shift = |v: VarId| Term::Var(VarId(base.0 + v.0));
    Clause {
        head: clause.head.map_vars(&mut shift),
        body: clause.body.iter().map(|g| g.map_vars(&mut shift)).collect(),
        source_index: clause.source_index,
        var_count: clause.var_count,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("stale trail mark: the store was already rolled back past it")]
    StaleMark,
}

/// A point the store can be rolled back to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrailMark {
    trail_len: usize,
    var_count: usize,
    stamp: u64,
}

/// Variable bindings plus the trail used to undo them.
#[derive(Clone, Debug, Default)]
pub struct BindingStore {
    slots: Vec<Option<Term>>,
    trail: Vec<VarId>,
    // Outstanding marks, oldest first. Stamps are strictly increasing.
    live_marks: Vec<TrailMark>,
    next_stamp: u64,
    occurs_check: bool,
}

impl BindingStore {
    pub fn new() -> BindingStore {
        BindingStore::default()
    }

    /// A store that already holds `n` unbound variables `0..n`.
    pub fn with_vars(n: u32) -> BindingStore {
        let mut store = BindingStore::new();
        store.alloc_vars(n);
        store
    }

    pub fn set_occurs_check(&mut self, on: bool) {
        self.occurs_check = on;
    }

    pub fn fresh_var(&mut self) -> VarId {
        self.alloc_vars(1)
    }

    /// Allocates `n` consecutive unbound variables and returns the first id.
    pub fn alloc_vars(&mut self, n: u32) -> VarId {
        let base = self.slots.len();
        assert!(base + n as usize <= u32::MAX as usize, "variable space exhausted");
        self.slots.resize(base + n as usize, None);
        VarId(base as u32)
    }

    pub fn var_count(&self) -> usize {
        self.slots.len()
    }

    pub fn trail_len(&self) -> usize {
        self.trail.len()
    }

    /// Variables bound since the trail had length `len`.
    pub fn bound_since(&self, len: usize) -> &[VarId] {
        &self.trail[len.min(self.trail.len())..]
    }

    pub fn binding(&self, v: VarId) -> Option<&Term> {
        self.slots.get(v.index()).and_then(Option::as_ref)
    }

    pub fn is_empty(&self) -> bool {
        self.trail.is_empty() && self.slots.iter().all(Option::is_none)
    }

    /// Dereferences `t` until it is not a bound variable. Arguments of
    /// compound terms are left alone.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.binding(*v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Deep substitution of all bound variables.
    ///
    /// Without the occurs check a binding can mention its own variable. Such
    /// a variable is substituted once and then left in place, so `X = f(X)`
    /// reifies to `f(X)` instead of unfolding forever.
    pub fn reify(&self, t: &Term) -> Term {
        enum Work<'a> {
            Visit(&'a Term),
            Build(&'a Arc<str>, usize, Vec<VarId>),
        }
        let mut open: HashSet<VarId> = HashSet::new();
        let mut work = vec![Work::Visit(t)];
        let mut out: Vec<Term> = Vec::new();
        while let Some(item) = work.pop() {
            match item {
                Work::Visit(mut t) => {
                    let mut entered = Vec::new();
                    while let Term::Var(v) = t {
                        match self.binding(*v) {
                            Some(next) if open.insert(*v) => {
                                entered.push(*v);
                                t = next;
                            }
                            _ => break,
                        }
                    }
                    match t {
                        Term::Struct(name, args) => {
                            work.push(Work::Build(name, args.len(), entered));
                            work.extend(args.iter().rev().map(Work::Visit));
                        }
                        other => {
                            for v in entered {
                                open.remove(&v);
                            }
                            out.push(other.clone());
                        }
                    }
                }
                Work::Build(name, n, entered) => {
                    for v in entered {
                        open.remove(&v);
                    }
                    let args: Arc<[Term]> = out.drain(out.len() - n..).collect();
                    out.push(Term::Struct(name.clone(), args));
                }
            }
        }
        out.pop().expect("reify produces one term")
    }

    /// True if following bindings from `t` can lead back to a variable
    /// whose binding is still being expanded.
    pub fn is_cyclic(&self, t: &Term) -> bool {
        enum Work<'a> {
            Visit(&'a Term),
            Leave(VarId),
        }
        let mut open: HashSet<VarId> = HashSet::new();
        let mut done: HashSet<VarId> = HashSet::new();
        let mut work = vec![Work::Visit(t)];
        while let Some(item) = work.pop() {
            match item {
                Work::Visit(Term::Var(v)) => {
                    let Some(next) = self.binding(*v) else { continue };
                    if open.contains(v) {
                        return true;
                    }
                    if done.contains(v) {
                        continue;
                    }
                    open.insert(*v);
                    work.push(Work::Leave(*v));
                    work.push(Work::Visit(next));
                }
                Work::Visit(Term::Struct(_, args)) => {
                    work.extend(args.iter().map(Work::Visit));
                }
                Work::Visit(_) => {}
                Work::Leave(v) => {
                    open.remove(&v);
                    done.insert(v);
                }
            }
        }
        false
    }

    pub fn mark(&mut self) -> TrailMark {
        let mark = TrailMark {
            trail_len: self.trail.len(),
            var_count: self.slots.len(),
            stamp: self.next_stamp,
        };
        self.next_stamp += 1;
        self.live_marks.push(mark);
        mark
    }

    /// Restores the store to its state when `mark` was taken. The mark stays
    /// usable; every mark taken after it becomes stale.
    pub fn undo_to(&mut self, mark: TrailMark) -> Result<(), StoreError> {
        let pos = self
            .live_marks
            .binary_search_by_key(&mark.stamp, |m| m.stamp)
            .map_err(|_| StoreError::StaleMark)?;
        self.live_marks.truncate(pos + 1);
        self.unwind(mark.trail_len);
        self.slots.truncate(mark.var_count);
        Ok(())
    }

    /// Forgets `mark` and every mark taken after it, keeping the bindings.
    pub fn release(&mut self, mark: TrailMark) {
        if let Ok(pos) = self
            .live_marks
            .binary_search_by_key(&mark.stamp, |m| m.stamp)
        {
            self.live_marks.truncate(pos);
        }
    }

    fn unwind(&mut self, len: usize) {
        while self.trail.len() > len {
            let v = self.trail.pop().unwrap();
            if let Some(slot) = self.slots.get_mut(v.index()) {
                *slot = None;
            }
        }
    }

    fn bind(&mut self, v: VarId, t: Term) {
        self.slots[v.index()] = Some(t);
        self.trail.push(v);
    }

    fn occurs(&self, v: VarId, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::Struct(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }

    /// Unifies `a` and `b`. On failure every trial binding is undone.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let start = self.trail.len();
        let mut pending: Vec<(Term, Term)> = vec![(a.clone(), b.clone())];
        // Argument pairs already taken apart. Only kept once a unification
        // runs long enough to suggest cyclic bindings; skipping a repeat is
        // sound because the first visit settles that pair.
        let mut struct_pairs = 0usize;
        let mut seen: HashSet<(*const Term, *const Term)> = HashSet::new();
        while let Some((x, y)) = pending.pop() {
            let x = self.walk(&x).clone();
            let y = self.walk(&y).clone();
            let ok = match (&x, &y) {
                (Term::Var(v), Term::Var(w)) if v == w => true,
                (Term::Var(v), Term::Var(w)) => {
                    // Younger variables point at older ones.
                    if v > w {
                        self.bind(*v, y.clone());
                    } else {
                        self.bind(*w, x.clone());
                    }
                    true
                }
                (Term::Var(v), t) | (t, Term::Var(v)) => {
                    if self.occurs_check && self.occurs(*v, t) {
                        false
                    } else {
                        self.bind(*v, t.clone());
                        true
                    }
                }
                (Term::Struct(f, xs), Term::Struct(g, ys)) => {
                    if f == g && xs.len() == ys.len() {
                        struct_pairs += 1;
                        if struct_pairs > UNIFY_TRACK_AFTER
                            && !seen.insert((xs.as_ptr(), ys.as_ptr()))
                        {
                            continue;
                        }
                        pending.extend(xs.iter().cloned().zip(ys.iter().cloned()).rev());
                        true
                    } else {
                        false
                    }
                }
                _ => x == y,
            };
            if !ok {
                self.unwind(start);
                return false;
            }
        }
        true
    }

    /// Succeeds iff `a` and `b` would unify. Leaves no bindings.
    pub fn unifiable(&mut self, a: &Term, b: &Term) -> bool {
        let start = self.trail.len();
        let ok = self.unify(a, b);
        self.unwind(start);
        ok
    }
}
