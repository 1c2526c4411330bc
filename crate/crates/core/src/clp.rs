//! Finite-domain integer constraints with bounds propagation.
//!
//! Every constraint is normalised to `Σ coef·monomial + constant REL 0` with
//! `REL` either `=` or `≤`. Propagation narrows variable intervals until a
//! fixpoint; a variable whose interval shrinks to one value is bound in the
//! main store.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use crate::engine::{EngineError, EvalError, ResourceKind};
use crate::term::{BindingStore, Term, VarId, CYCLE_CHECK_DEPTH};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Inclusive integer interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Interval {
        Interval { lo, hi }
    }

    pub fn contains(&self, n: i64) -> bool {
        self.lo <= n && n <= self.hi
    }
}

pub const DEFAULT_DOMAIN: Interval = Interval {
    lo: -1_000_000,
    hi: 1_000_000,
};

/// Revisions allowed per propagation run before giving up.
const REVISION_BUDGET: usize = 1_000_000;

// Bounds at or beyond INF in magnitude stand for infinity. Domain bounds are
// i64, so products of two of them stay exact in i128.
const INF: i128 = 1 << 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Iv {
    lo: i128,
    hi: i128,
}

fn norm_lo(x: i128) -> i128 {
    if x <= -INF {
        -INF
    } else {
        x.min(INF - 1)
    }
}

fn norm_hi(x: i128) -> i128 {
    if x >= INF {
        INF
    } else {
        x.max(-INF + 1)
    }
}

fn mul_bound(a: i128, b: i128) -> i128 {
    if a == 0 || b == 0 {
        return 0;
    }
    let positive = (a > 0) == (b > 0);
    let saturated = if positive { INF } else { -INF };
    if a.abs() >= INF || b.abs() >= INF {
        return saturated;
    }
    a.checked_mul(b).unwrap_or(saturated)
}

impl Iv {
    fn point(n: i128) -> Iv {
        Iv { lo: n, hi: n }
    }

    fn from(d: Interval) -> Iv {
        Iv {
            lo: d.lo as i128,
            hi: d.hi as i128,
        }
    }

    fn is_finite(&self) -> bool {
        self.lo > -INF && self.hi < INF
    }

    fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    fn mul(self, o: Iv) -> Iv {
        let c = [
            mul_bound(self.lo, o.lo),
            mul_bound(self.lo, o.hi),
            mul_bound(self.hi, o.lo),
            mul_bound(self.hi, o.hi),
        ];
        Iv {
            lo: norm_lo(*c.iter().min().unwrap()),
            hi: norm_hi(*c.iter().max().unwrap()),
        }
    }

    fn add(self, o: Iv) -> Iv {
        let lo = if self.lo <= -INF || o.lo <= -INF {
            -INF
        } else {
            norm_lo(self.lo + o.lo)
        };
        let hi = if self.hi >= INF || o.hi >= INF {
            INF
        } else {
            norm_hi(self.hi + o.hi)
        };
        Iv { lo, hi }
    }

    fn pow(self, p: u32) -> Iv {
        let mut acc = Iv::point(1);
        for _ in 0..p {
            acc = acc.mul(self);
        }
        if p.is_multiple_of(2) && self.contains_zero() {
            // x^p is never negative for even p.
            acc.lo = 0;
        } else if p.is_multiple_of(2) {
            let a = Iv::point(self.lo).pow_exact(p);
            let b = Iv::point(self.hi).pow_exact(p);
            acc = Iv {
                lo: a.lo.min(b.lo),
                hi: a.hi.max(b.hi),
            };
        }
        acc
    }

    fn pow_exact(self, p: u32) -> Iv {
        let mut acc = Iv::point(1);
        for _ in 0..p {
            acc = acc.mul(self);
        }
        acc
    }

    /// Integers x with x·r ∈ self for some r in `divisor` (which excludes 0
    /// and is finite).
    fn div(self, divisor: Iv) -> Iv {
        let mut lo = INF;
        let mut hi = -INF;
        for t in [self.lo, self.hi] {
            for r in [divisor.lo, divisor.hi] {
                let (q_lo, q_hi) = if t.abs() >= INF {
                    let v = if (t > 0) == (r > 0) { INF } else { -INF };
                    (v, v)
                } else {
                    (div_ceil(t, r), div_floor(t, r))
                };
                lo = lo.min(q_lo);
                hi = hi.max(q_hi);
            }
        }
        Iv {
            lo: norm_lo(lo),
            hi: norm_hi(hi),
        }
    }
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Largest r ≥ 0 with r^p ≤ x, for x ≥ 0.
fn root_floor(x: i128, p: u32) -> i128 {
    let pow_le = |r: i128| match r.checked_pow(p) {
        Some(v) => v <= x,
        None => false,
    };
    let mut r = (x as f64).powf(1.0 / p as f64) as i128;
    while r > 0 && !pow_le(r) {
        r -= 1;
    }
    while pow_le(r + 1) {
        r += 1;
    }
    r
}

/// Smallest r ≥ 0 with r^p ≥ x, for x ≥ 0.
fn root_ceil(x: i128, p: u32) -> i128 {
    let r = root_floor(x, p);
    if r.checked_pow(p) == Some(x) {
        r
    } else {
        r + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rel {
    Eq,
    Le,
}

#[derive(Clone, Debug)]
struct Constraint {
    /// Monomials as sorted factor lists; never empty.
    terms: Vec<(i128, Vec<VarId>)>,
    constant: i128,
    rel: Rel,
}

type Poly = BTreeMap<Vec<VarId>, i128>;

fn poly_add(a: &mut Poly, b: &Poly, sign: i128) -> Result<(), EngineError> {
    for (k, v) in b {
        let e = a.entry(k.clone()).or_insert(0);
        *e = v
            .checked_mul(sign)
            .and_then(|v| e.checked_add(v))
            .ok_or(EngineError::Evaluation(EvalError::IntOverflow))?;
    }
    a.retain(|_, v| *v != 0);
    Ok(())
}

fn poly_mul(a: &Poly, b: &Poly) -> Result<Poly, EngineError> {
    let mut out = Poly::new();
    for (ka, va) in a {
        for (kb, vb) in b {
            let mut k: Vec<VarId> = ka.iter().chain(kb).copied().collect();
            k.sort();
            let prod = va
                .checked_mul(*vb)
                .ok_or(EngineError::Evaluation(EvalError::IntOverflow))?;
            let e = out.entry(k).or_insert(0);
            *e = e
                .checked_add(prod)
                .ok_or(EngineError::Evaluation(EvalError::IntOverflow))?;
        }
    }
    out.retain(|_, v| *v != 0);
    Ok(out)
}

/// What a constraint variable currently stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Rep {
    Var(VarId),
    Val(i64),
}

#[derive(Clone, Debug)]
enum Undo {
    Domain(VarId, Option<Interval>),
    Constraint,
    Watch(VarId, usize),
}

/// Position in the constraint store's undo log.
pub type ClpMark = usize;

#[derive(Clone, Debug, Default)]
pub struct ConstraintStore {
    domains: HashMap<VarId, Interval>,
    constraints: Vec<Constraint>,
    watchers: HashMap<VarId, Vec<usize>>,
    trail: Vec<Undo>,
}

impl ConstraintStore {
    pub fn new() -> ConstraintStore {
        ConstraintStore::default()
    }

    /// No variable has ever been enrolled (or all enrolments were undone).
    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn mark(&self) -> ClpMark {
        self.trail.len()
    }

    pub fn undo_to(&mut self, mark: ClpMark) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Undo::Domain(v, Some(d)) => {
                    self.domains.insert(v, d);
                }
                Undo::Domain(v, None) => {
                    self.domains.remove(&v);
                }
                Undo::Constraint => {
                    self.constraints.pop();
                }
                Undo::Watch(v, len) => {
                    if let Some(w) = self.watchers.get_mut(&v) {
                        w.truncate(len);
                    }
                }
            }
        }
    }

    pub fn is_enrolled(&self, v: VarId) -> bool {
        self.domains.contains_key(&v)
    }

    /// Current interval of `t`, which must be an integer or an enrolled
    /// variable.
    pub fn domain(&self, store: &BindingStore, t: &Term) -> Option<Interval> {
        match store.walk(t) {
            Term::Int(n) => Some(Interval::new(*n, *n)),
            Term::Var(v) => self.domains.get(v).copied(),
            _ => None,
        }
    }

    fn enroll(&mut self, v: VarId, d: Interval) {
        if !self.domains.contains_key(&v) {
            self.trail.push(Undo::Domain(v, None));
            self.domains.insert(v, d);
        }
    }

    fn watch(&mut self, v: VarId, c: usize) {
        let list = self.watchers.entry(v).or_default();
        self.trail.push(Undo::Watch(v, list.len()));
        list.push(c);
    }

    fn expand(&mut self, store: &BindingStore, t: &Term) -> Result<Poly, EngineError> {
        self.expand_at(store, t, 0)
    }

    fn expand_at(
        &mut self,
        store: &BindingStore,
        t: &Term,
        depth: usize,
    ) -> Result<Poly, EngineError> {
        if depth == CYCLE_CHECK_DEPTH && store.is_cyclic(t) {
            return Err(EngineError::type_error("acyclic_term", "cyclic term"));
        }
        let constant = |n: i128| -> Poly {
            let mut p = Poly::new();
            if n != 0 {
                p.insert(Vec::new(), n);
            }
            p
        };
        match store.walk(t) {
            Term::Int(n) => Ok(constant(*n as i128)),
            Term::Var(v) => {
                self.enroll(*v, DEFAULT_DOMAIN);
                let mut p = Poly::new();
                p.insert(vec![*v], 1);
                Ok(p)
            }
            Term::Struct(f, args) => match (&**f, args.len()) {
                ("+", 2) | ("-", 2) => {
                    let mut a = self.expand_at(store, &args[0], depth + 1)?;
                    let b = self.expand_at(store, &args[1], depth + 1)?;
                    poly_add(&mut a, &b, if &**f == "+" { 1 } else { -1 })?;
                    Ok(a)
                }
                ("*", 2) => {
                    let a = self.expand_at(store, &args[0], depth + 1)?;
                    let b = self.expand_at(store, &args[1], depth + 1)?;
                    poly_mul(&a, &b)
                }
                ("-", 1) => {
                    let mut out = Poly::new();
                    let a = self.expand_at(store, &args[0], depth + 1)?;
                    poly_add(&mut out, &a, -1)?;
                    Ok(out)
                }
                _ => Err(EngineError::type_error("integer", store.reify(t).to_string())),
            },
            other => Err(EngineError::type_error("integer", other.to_string())),
        }
    }

    /// Posts `lhs REL rhs` and propagates.
    pub fn post(
        &mut self,
        store: &mut BindingStore,
        rel: Relation,
        lhs: &Term,
        rhs: &Term,
    ) -> Result<bool, EngineError> {
        let (a, b, rel) = match rel {
            Relation::Gt => (rhs, lhs, Relation::Lt),
            Relation::Ge => (rhs, lhs, Relation::Le),
            r => (lhs, rhs, r),
        };
        let mut poly = self.expand(store, a)?;
        let right = self.expand(store, b)?;
        poly_add(&mut poly, &right, -1)?;
        let mut constant = poly.remove(&Vec::new()).unwrap_or(0);
        let rel = match rel {
            Relation::Eq => Rel::Eq,
            Relation::Le => Rel::Le,
            _ => {
                constant += 1;
                Rel::Le
            }
        };
        if poly.is_empty() {
            return Ok(match rel {
                Rel::Eq => constant == 0,
                Rel::Le => constant <= 0,
            });
        }
        let terms: Vec<(i128, Vec<VarId>)> = poly.into_iter().map(|(k, c)| (c, k)).collect();
        let mut vars: Vec<VarId> = terms.iter().flat_map(|(_, k)| k.iter().copied()).collect();
        vars.sort();
        vars.dedup();
        let idx = self.constraints.len();
        self.constraints.push(Constraint {
            terms,
            constant,
            rel,
        });
        self.trail.push(Undo::Constraint);
        for v in vars {
            self.watch(v, idx);
        }
        self.propagate(store, VecDeque::from([idx]))
    }

    /// `t in lo..hi`.
    pub fn declare_domain(
        &mut self,
        store: &mut BindingStore,
        t: &Term,
        lo: i64,
        hi: i64,
    ) -> Result<bool, EngineError> {
        if lo > hi {
            return Err(EngineError::Domain {
                domain: "non_empty_range".into(),
                culprit: format!("{lo}..{hi}"),
            });
        }
        match store.walk(t).clone() {
            Term::Int(n) => Ok(lo <= n && n <= hi),
            Term::Var(v) => {
                if !self.is_enrolled(v) {
                    self.enroll(v, Interval::new(lo, hi));
                    if lo == hi {
                        store.unify(&Term::Var(v), &Term::Int(lo));
                    }
                    return Ok(true);
                }
                let mut queue = VecDeque::new();
                if !self.narrow(store, v, lo as i128, hi as i128, &mut queue) {
                    return Ok(false);
                }
                self.propagate(store, queue)
            }
            other => Err(EngineError::type_error("integer", other.to_string())),
        }
    }

    /// Reacts to bindings of enrolled variables made by ordinary
    /// unification.
    pub fn wake(&mut self, store: &mut BindingStore, vars: &[VarId]) -> Result<bool, EngineError> {
        let mut queue = VecDeque::new();
        for &v in vars {
            let Some(dom) = self.domains.get(&v).copied() else {
                continue;
            };
            match store.walk(&Term::Var(v)).clone() {
                Term::Int(n) => {
                    if !dom.contains(n) {
                        return Ok(false);
                    }
                }
                Term::Var(w) if w == v => continue,
                Term::Var(w) => {
                    // Aliased to another variable: merge domain and watchers.
                    if !self.is_enrolled(w) {
                        self.enroll(w, dom);
                    } else if !self.narrow(store, w, dom.lo as i128, dom.hi as i128, &mut queue) {
                        return Ok(false);
                    }
                    let moved: Vec<usize> = self.watchers.get(&v).cloned().unwrap_or_default();
                    for c in moved {
                        self.watch(w, c);
                    }
                    if let Some(d) = self.domains.get(&w) {
                        if d.lo == d.hi {
                            let n = d.lo;
                            store.unify(&Term::Var(w), &Term::Int(n));
                        }
                    }
                }
                other => return Err(EngineError::type_error("integer", other.to_string())),
            }
            if let Some(ws) = self.watchers.get(&v) {
                queue.extend(ws.iter().copied());
            }
        }
        if queue.is_empty() {
            return Ok(true);
        }
        self.propagate(store, queue)
    }

    fn rep(&self, store: &BindingStore, v: VarId) -> Result<Rep, EngineError> {
        match store.walk(&Term::Var(v)) {
            Term::Int(n) => Ok(Rep::Val(*n)),
            Term::Var(w) => Ok(Rep::Var(*w)),
            other => Err(EngineError::type_error("integer", other.to_string())),
        }
    }

    fn rep_iv(&self, r: Rep) -> Iv {
        match r {
            Rep::Val(n) => Iv::point(n as i128),
            Rep::Var(w) => Iv::from(self.domains.get(&w).copied().unwrap_or(DEFAULT_DOMAIN)),
        }
    }

    /// Intersects the domain of unbound `v` with `[lo, hi]`. Returns false
    /// when the result is empty.
    fn narrow(
        &mut self,
        store: &mut BindingStore,
        v: VarId,
        lo: i128,
        hi: i128,
        queue: &mut VecDeque<usize>,
    ) -> bool {
        let cur = self.domains.get(&v).copied().unwrap_or(DEFAULT_DOMAIN);
        let new_lo = (cur.lo as i128).max(lo);
        let new_hi = (cur.hi as i128).min(hi);
        if new_lo > new_hi {
            return false;
        }
        let new = Interval::new(new_lo as i64, new_hi as i64);
        if Some(new) == self.domains.get(&v).copied() {
            return true;
        }
        self.trail.push(Undo::Domain(v, self.domains.get(&v).copied()));
        self.domains.insert(v, new);
        if let Some(ws) = self.watchers.get(&v) {
            queue.extend(ws.iter().copied());
        }
        if new.lo == new.hi {
            store.unify(&Term::Var(v), &Term::Int(new.lo));
        }
        true
    }

    fn propagate(
        &mut self,
        store: &mut BindingStore,
        mut queue: VecDeque<usize>,
    ) -> Result<bool, EngineError> {
        let mut queued: HashSet<usize> = queue.iter().copied().collect();
        let mut budget = REVISION_BUDGET;
        while let Some(c) = queue.pop_front() {
            queued.remove(&c);
            if budget == 0 {
                return Err(EngineError::Resource(ResourceKind::Propagation));
            }
            budget -= 1;
            let mut changed = VecDeque::new();
            if !self.revise(store, c, &mut changed)? {
                return Ok(false);
            }
            for d in changed {
                if queued.insert(d) {
                    queue.push_back(d);
                }
            }
        }
        Ok(true)
    }

    /// Checks constraint `ci` against current bounds and narrows each
    /// monomial's factors.
    fn revise(
        &mut self,
        store: &mut BindingStore,
        ci: usize,
        queue: &mut VecDeque<usize>,
    ) -> Result<bool, EngineError> {
        let c = self.constraints[ci].clone();
        // Resolve each monomial into (coefficient, grouped factors).
        let mut terms: Vec<(i128, Vec<(Rep, u32)>)> = Vec::with_capacity(c.terms.len());
        for (coef, factors) in &c.terms {
            let mut coef = *coef;
            let mut groups: Vec<(Rep, u32)> = Vec::new();
            for &f in factors {
                match self.rep(store, f)? {
                    Rep::Val(n) => {
                        coef = coef
                            .checked_mul(n as i128)
                            .ok_or(EngineError::Evaluation(EvalError::IntOverflow))?
                    }
                    r => match groups.iter_mut().find(|(g, _)| *g == r) {
                        Some((_, p)) => *p += 1,
                        None => groups.push((r, 1)),
                    },
                }
            }
            terms.push((coef, groups));
        }
        let mut constant = c.constant;
        terms.retain(|(coef, groups)| {
            if groups.is_empty() {
                constant += coef;
                false
            } else {
                *coef != 0
            }
        });

        let term_iv = |s: &Self, coef: i128, groups: &[(Rep, u32)]| -> Iv {
            groups
                .iter()
                .fold(Iv::point(coef), |acc, &(r, p)| acc.mul(s.rep_iv(r).pow(p)))
        };
        let ivs: Vec<Iv> = terms.iter().map(|(c, g)| term_iv(self, *c, g)).collect();
        let total = ivs.iter().fold(Iv::point(constant), |acc, iv| acc.add(*iv));
        match c.rel {
            Rel::Eq if total.lo > 0 || total.hi < 0 => return Ok(false),
            Rel::Le if total.lo > 0 => return Ok(false),
            _ => {}
        }

        for k in 0..terms.len() {
            let rest = ivs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .fold(Iv::point(constant), |acc, (_, iv)| acc.add(*iv));
            // term_k ∈ target
            let target = Iv {
                lo: match c.rel {
                    Rel::Eq if rest.hi < INF => norm_lo(-rest.hi),
                    _ => -INF,
                },
                hi: if rest.lo > -INF { norm_hi(-rest.lo) } else { INF },
            };
            if target.lo <= -INF && target.hi >= INF {
                continue;
            }
            let (coef, groups) = &terms[k];
            let mono_target = target.div(Iv::point(*coef));
            for (g, &(rep, p)) in groups.iter().enumerate() {
                let Rep::Var(v) = rep else { continue };
                let others = groups
                    .iter()
                    .enumerate()
                    .filter(|(h, _)| *h != g)
                    .fold(Iv::point(1), |acc, (_, &(r, q))| acc.mul(self.rep_iv(r).pow(q)));
                if others.contains_zero() || !others.is_finite() {
                    continue;
                }
                let q = mono_target.div(others);
                let (lo, hi) = if p == 1 {
                    (q.lo, q.hi)
                } else if p.is_multiple_of(2) {
                    if q.hi < 0 {
                        return Ok(false);
                    }
                    if q.hi >= INF {
                        continue;
                    }
                    let r = root_floor(q.hi, p);
                    (-r, r)
                } else {
                    let lo = if q.lo <= -INF {
                        -INF
                    } else if q.lo >= 0 {
                        root_ceil(q.lo, p)
                    } else {
                        -root_floor(-q.lo, p)
                    };
                    let hi = if q.hi >= INF {
                        INF
                    } else if q.hi >= 0 {
                        root_floor(q.hi, p)
                    } else {
                        -root_ceil(-q.hi, p)
                    };
                    (lo, hi)
                };
                if !self.narrow(store, v, lo, hi, queue) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
