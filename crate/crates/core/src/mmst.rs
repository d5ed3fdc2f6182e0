//! The multi-satisfiability table.
//!
//! For every variable `v` the table keeps, over the clauses containing `v`:
//!
//! - `C_k(v)`: clauses satisfied by exactly `k` literals, `k` in `0..=3`;
//! - `S_k(v)`: those with `k >= 1` where `v`'s own literal is true;
//! - `U_k(v)`: those with `k >= 1` where `v`'s own literal is false.
//!
//! so `C_k = S_k + U_k` for `k >= 1`, and `U_3 = 0`. Flipping `v` moves
//! every clause it touches by one satisfier, which makes both the fitness
//! change (`C_0 - S_1`) and the change of the once/twice-satisfied counts
//! readable from `v`'s own row.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::Result;
use crate::instance::{clause_sat_count, Assignment, Instance, SatProfile};

/// Work counters shared between every table built for one run.
///
/// Cloning a `Tally` (or an [`Mmst`]) shares the counters.
#[derive(Debug, Clone, Default)]
pub struct Tally(Arc<TallyCounts>);

#[derive(Debug, Default)]
struct TallyCounts {
    full_evaluations: AtomicU64,
    flip_updates: AtomicU64,
}

impl Tally {
    pub fn new() -> Self {
        Tally::default()
    }

    pub fn full_evaluations(&self) -> u64 {
        self.0.full_evaluations.load(Ordering::Relaxed)
    }

    pub fn flip_updates(&self) -> u64 {
        self.0.flip_updates.load(Ordering::Relaxed)
    }

    fn count_evaluation(&self) {
        self.0.full_evaluations.fetch_add(1, Ordering::Relaxed);
    }

    fn count_flip(&self) {
        self.0.flip_updates.fetch_add(1, Ordering::Relaxed);
    }
}

/// One variable's row. Index 0 of `s` and `u`, and index 3 of `u`, stay 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VarCounters {
    c: [u32; 4],
    s: [u32; 4],
    u: [u32; 4],
}

impl VarCounters {
    pub fn c(&self, k: usize) -> u32 {
        self.c[k]
    }

    pub fn s(&self, k: usize) -> u32 {
        self.s[k]
    }

    pub fn u(&self, k: usize) -> u32 {
        self.u[k]
    }

    #[inline]
    fn add(&mut self, k: u8, own_true: bool) {
        let k = k as usize;
        self.c[k] += 1;
        if k > 0 {
            if own_true {
                self.s[k] += 1;
            } else {
                self.u[k] += 1;
            }
        }
    }

    #[inline]
    fn remove(&mut self, k: u8, own_true: bool) {
        let k = k as usize;
        self.c[k] -= 1;
        if k > 0 {
            if own_true {
                self.s[k] -= 1;
            } else {
                self.u[k] -= 1;
            }
        }
    }

    #[inline]
    fn fitness_delta(&self) -> i64 {
        self.c[0] as i64 - self.s[1] as i64
    }

    #[inline]
    fn fcf_delta(&self) -> i64 {
        let [c0, _, _, _] = self.c.map(i64::from);
        let [_, s1, s2, s3] = self.s.map(i64::from);
        let [_, u1, u2, _] = self.u.map(i64::from);
        let d1 = (c0 + s2) - (s1 + u1);
        let d2 = (u1 + s3) - (s2 + u2);
        d1 - d2
    }
}

/// Incremental satisfiability bookkeeping for one assignment.
#[derive(Debug, Clone)]
pub struct Mmst<'a> {
    instance: &'a Instance,
    x: Assignment,
    sat: Vec<u8>,
    vars: Vec<VarCounters>,
    profile: SatProfile,
    tally: Tally,
}

impl<'a> Mmst<'a> {
    /// Builds the table from scratch with a fresh [`Tally`].
    pub fn build(instance: &'a Instance, x: Assignment) -> Result<Self> {
        Self::with_tally(instance, x, Tally::new())
    }

    pub fn with_tally(instance: &'a Instance, x: Assignment, tally: Tally) -> Result<Self> {
        instance.check_assignment(&x)?;
        let mut sat = Vec::with_capacity(instance.num_clauses());
        let mut vars = vec![VarCounters::default(); instance.num_vars()];
        let mut profile = SatProfile::default();
        for clause in instance.clauses() {
            let k = clause_sat_count(clause, &x);
            for lit in clause.literals() {
                vars[lit.var].add(k, lit.is_true(&x));
            }
            *profile.count_mut(k) += 1;
            sat.push(k);
        }
        tally.count_evaluation();
        Ok(Mmst {
            instance,
            x,
            sat,
            vars,
            profile,
            tally,
        })
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn assignment(&self) -> &Assignment {
        &self.x
    }

    pub fn into_assignment(self) -> Assignment {
        self.x
    }

    pub fn profile(&self) -> SatProfile {
        self.profile
    }

    pub fn fitness(&self) -> usize {
        self.profile.fitness()
    }

    pub fn tally(&self) -> &Tally {
        &self.tally
    }

    pub fn counters(&self, v: usize) -> Result<&VarCounters> {
        self.instance.check_var(v)?;
        Ok(&self.vars[v])
    }

    /// Satisfier count of clause `ci`.
    pub fn clause_sat(&self, ci: usize) -> u8 {
        self.sat[ci]
    }

    /// Fitness change caused by flipping `v`: `C_0(v) - S_1(v)`.
    pub fn fitness_delta(&self, v: usize) -> Result<i64> {
        self.instance.check_var(v)?;
        Ok(self.gain(v))
    }

    /// Clause-satisfiability score of flipping `v`, i.e.
    /// `f_cf(profile after flip, profile now)`, read from `v`'s row.
    pub fn fcf_delta(&self, v: usize) -> Result<i64> {
        self.instance.check_var(v)?;
        Ok(self.fcf_gain(v))
    }

    #[inline]
    pub(crate) fn gain(&self, v: usize) -> i64 {
        self.vars[v].fitness_delta()
    }

    #[inline]
    pub(crate) fn fcf_gain(&self, v: usize) -> i64 {
        self.vars[v].fcf_delta()
    }

    pub fn flip(&mut self, v: usize) -> Result<()> {
        self.instance.check_var(v)?;
        self.flip_var(v);
        Ok(())
    }

    /// Toggles `v` and updates every clause containing it together with the
    /// rows of that clause's three variables.
    pub(crate) fn flip_var(&mut self, v: usize) {
        let instance = self.instance;
        self.x.flip(v);
        for &ci in instance.occurrences(v) {
            let clause = instance.clause(ci);
            let old_k = self.sat[ci];
            let v_true = clause
                .literals()
                .iter()
                .find(|l| l.var == v)
                .expect("membership index is consistent")
                .is_true(&self.x);
            let new_k = if v_true { old_k + 1 } else { old_k - 1 };
            for lit in clause.literals() {
                let now = lit.is_true(&self.x);
                let before = if lit.var == v { !now } else { now };
                let row = &mut self.vars[lit.var];
                row.remove(old_k, before);
                row.add(new_k, now);
            }
            *self.profile.count_mut(old_k) -= 1;
            *self.profile.count_mut(new_k) += 1;
            self.sat[ci] = new_k;
        }
        self.tally.count_flip();
    }

    /// Variables whose flip strictly increases fitness, with their gains,
    /// ascending by variable.
    pub fn improving_flips(&self) -> Vec<(usize, i64)> {
        (0..self.vars.len())
            .filter_map(|v| {
                let d = self.gain(v);
                (d > 0).then_some((v, d))
            })
            .collect()
    }

    pub fn is_local_optimum(&self) -> bool {
        (0..self.vars.len()).all(|v| self.gain(v) <= 0)
    }

    /// Indices of unsatisfied clauses, ascending.
    pub fn unsatisfied_clauses(&self) -> Vec<usize> {
        self.sat
            .iter()
            .enumerate()
            .filter_map(|(ci, &k)| (k == 0).then_some(ci))
            .collect()
    }

    /// Copies the state of `saved` (a clone of `self` taken earlier) back
    /// into `self`. Work counters are left alone.
    pub fn restore(&mut self, saved: &Mmst<'a>) {
        self.x.clone_from(&saved.x);
        self.sat.clone_from(&saved.sat);
        self.vars.clone_from(&saved.vars);
        self.profile = saved.profile;
    }
}

/// Tables compare equal when assignment, clause counts, rows and profile
/// agree; the tally is not part of the state.
impl PartialEq for Mmst<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x
            && self.sat == other.sat
            && self.vars == other.vars
            && self.profile == other.profile
    }
}

/// Clause-satisfiability function: the gain in once-satisfied clauses minus
/// the gain in twice-satisfied clauses when moving from `before` to `after`.
pub fn f_cf(before: &SatProfile, after: &SatProfile) -> i64 {
    let d1 = after.c1 as i64 - before.c1 as i64;
    let d2 = after.c2 as i64 - before.c2 as i64;
    d1 - d2
}
