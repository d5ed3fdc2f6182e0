//! The leveled population and the optimizer drivers.
//!
//! All three optimizers share one loop:
//!
//! 1. every pyramid member gets one ILS step (plain or directed);
//! 2. a fresh random climber gets one ILS step and joins level 0;
//! 3. the climber is crossed with every member, level by level; a child
//!    that beats the climber is placed one level above its partner and
//!    becomes the new climber;
//! 4. optionally, members drift with the long-connection operator.
//!
//! The optimizers differ only in the [`Plan`] for steps 1, 2 and 4.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance};
use crate::mmst::{Mmst, Tally};
use crate::operators::{directed_ils_step, ils_step, long_connection};
use crate::px::px_decompose;
use crate::vig::Vig;
use crate::{rng_from_seed, RunRng};

/// Anything that can live in a [`Pyramid`].
pub trait Keyed {
    fn key(&self) -> &Assignment;
}

impl Keyed for Assignment {
    fn key(&self) -> &Assignment {
        self
    }
}

impl Keyed for Mmst<'_> {
    fn key(&self) -> &Assignment {
        self.assignment()
    }
}

/// Levels of unique solutions. Duplicates are detected across the whole
/// pyramid.
#[derive(Debug, Clone)]
pub struct Pyramid<T> {
    levels: Vec<Vec<T>>,
    // Reference counts, so members that converge onto the same assignment
    // through in-place optimization stay accounted for.
    membership: HashMap<Assignment, usize>,
}

impl<T> Default for Pyramid<T> {
    fn default() -> Self {
        Pyramid {
            levels: Vec::new(),
            membership: HashMap::new(),
        }
    }
}

impl<T: Keyed> Pyramid<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, level: usize) -> &[T] {
        &self.levels[level]
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: &Assignment) -> bool {
        self.membership.contains_key(x)
    }

    /// Inserts `item` at `level` unless its assignment is already present
    /// somewhere. `level == num_levels()` opens a new level.
    pub fn add_unique(&mut self, level: usize, item: T) -> Result<bool> {
        if level > self.levels.len() {
            return Err(Error::LevelGap {
                level,
                levels: self.levels.len(),
            });
        }
        if self.contains(item.key()) {
            return Ok(false);
        }
        self.membership.insert(item.key().clone(), 1);
        if level == self.levels.len() {
            self.levels.push(Vec::new());
        }
        self.levels[level].push(item);
        Ok(true)
    }

    /// `(level, index)` of every member, level-major in insertion order.
    pub fn positions(&self) -> Vec<(usize, usize)> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(l, members)| (0..members.len()).map(move |i| (l, i)))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.levels.iter().flatten()
    }

    /// Mutates a member in place and keeps the membership index in sync.
    pub fn update<R>(&mut self, level: usize, index: usize, f: impl FnOnce(&mut T) -> R) -> R {
        let member = &mut self.levels[level][index];
        let old = member.key().clone();
        let out = f(member);
        if *member.key() != old {
            if let Some(count) = self.membership.get_mut(&old) {
                *count -= 1;
                if *count == 0 {
                    self.membership.remove(&old);
                }
            }
            *self.membership.entry(member.key().clone()).or_insert(0) += 1;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ipp,
    Mocsm,
    MocsmMixed,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ipp, Algorithm::Mocsm, Algorithm::MocsmMixed];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ipp => "ipp",
            Algorithm::Mocsm => "mocsm",
            Algorithm::MocsmMixed => "mocsm-mixed",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected ipp, mocsm or mocsm-mixed)"))
    }
}

/// Any criterion that is set ends the run. Reaching the target (the clause
/// count when unset) always ends it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StopCriteria {
    pub time_limit: Option<Duration>,
    pub flip_limit: Option<u64>,
    pub target: Option<usize>,
}

impl StopCriteria {
    pub fn flips(limit: u64) -> Self {
        StopCriteria {
            flip_limit: Some(limit),
            ..Self::default()
        }
    }

    pub fn with_target(mut self, target: usize) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    fn is_set(&self) -> bool {
        self.time_limit.is_some() || self.flip_limit.is_some() || self.target.is_some()
    }
}

pub const DEFAULT_LONG_CONNECTION_STEPS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub stop: StopCriteria,
    pub long_connection_steps: usize,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, seed: u64, stop: StopCriteria) -> Self {
        RunConfig {
            algorithm,
            seed,
            stop,
            long_connection_steps: DEFAULT_LONG_CONNECTION_STEPS,
        }
    }

    pub fn plan(&self) -> Plan {
        Plan::for_algorithm(self.algorithm, self.long_connection_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlsKind {
    Plain,
    Directed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberIls {
    All(IlsKind),
    /// Even positions plain, odd positions directed.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LongConnectionPolicy {
    Never,
    All,
    EvenPositions,
}

/// How a driver treats members and climbers. Positions count members
/// level-major, in insertion order within a level, starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plan {
    pub label: Algorithm,
    pub member_ils: MemberIls,
    pub climber_ils: IlsKind,
    pub long_connection: LongConnectionPolicy,
    pub long_connection_steps: usize,
}

impl Plan {
    pub fn for_algorithm(algorithm: Algorithm, long_connection_steps: usize) -> Self {
        let (member_ils, climber_ils, long_connection) = match algorithm {
            Algorithm::Ipp => (
                MemberIls::All(IlsKind::Plain),
                IlsKind::Plain,
                LongConnectionPolicy::Never,
            ),
            Algorithm::Mocsm => (
                MemberIls::All(IlsKind::Directed),
                IlsKind::Directed,
                LongConnectionPolicy::All,
            ),
            Algorithm::MocsmMixed => (
                MemberIls::Alternating,
                IlsKind::Directed,
                LongConnectionPolicy::EvenPositions,
            ),
        };
        Plan {
            label: algorithm,
            member_ils,
            climber_ils,
            long_connection,
            long_connection_steps,
        }
    }

    pub fn member_ils(&self, position: usize) -> IlsKind {
        match self.member_ils {
            MemberIls::All(kind) => kind,
            MemberIls::Alternating if position.is_multiple_of(2) => IlsKind::Plain,
            MemberIls::Alternating => IlsKind::Directed,
        }
    }

    pub fn applies_long_connection(&self, position: usize) -> bool {
        match self.long_connection {
            LongConnectionPolicy::Never => false,
            LongConnectionPolicy::All => true,
            LongConnectionPolicy::EvenPositions => position.is_multiple_of(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub fitness: usize,
    pub flip_updates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub best: Assignment,
    pub best_fitness: usize,
    pub target: usize,
    pub success: bool,
    pub full_evaluations: u64,
    pub flip_updates: u64,
    pub wall: Duration,
    /// One entry per new best, strictly increasing in fitness.
    pub history: Vec<HistoryEntry>,
    pub iterations: u64,
    /// Final pyramid members, level-major.
    pub population: Vec<Assignment>,
}

/// The JSON form of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub best_fitness: usize,
    pub target: usize,
    pub success: bool,
    pub full_evaluations: u64,
    pub flip_updates: u64,
    pub wall_ms: u64,
    pub history: Vec<HistoryEntry>,
}

impl RunResult {
    pub fn record(&self, instance: impl Into<String>) -> RunRecord {
        RunRecord {
            instance: instance.into(),
            algorithm: self.algorithm,
            seed: self.seed,
            n: self.n,
            m: self.m,
            best_fitness: self.best_fitness,
            target: self.target,
            success: self.success,
            full_evaluations: self.full_evaluations,
            flip_updates: self.flip_updates,
            wall_ms: self.wall.as_millis() as u64,
            history: self.history.clone(),
        }
    }
}

struct Run<'a> {
    instance: &'a Instance,
    vig: Vig,
    plan: Plan,
    stop: StopCriteria,
    target: usize,
    rng: RunRng,
    tally: Tally,
    started: Instant,
    best: Assignment,
    best_fitness: usize,
    history: Vec<HistoryEntry>,
}

impl<'a> Run<'a> {
    fn observe(&mut self, m: &Mmst<'_>) {
        if m.fitness() > self.best_fitness || self.history.is_empty() {
            self.best_fitness = m.fitness();
            self.best.clone_from(m.assignment());
            self.history.push(HistoryEntry {
                fitness: self.best_fitness,
                flip_updates: self.tally.flip_updates(),
            });
        }
    }

    fn should_stop(&self) -> bool {
        if !self.history.is_empty() && self.best_fitness >= self.target {
            return true;
        }
        if self
            .stop
            .flip_limit
            .is_some_and(|limit| self.tally.flip_updates() >= limit)
        {
            return true;
        }
        self.stop
            .time_limit
            .is_some_and(|limit| self.started.elapsed() >= limit)
    }

    fn fresh(&mut self) -> Result<Mmst<'a>> {
        let x = Assignment::random(self.instance.num_vars(), &mut self.rng);
        Mmst::with_tally(self.instance, x, self.tally.clone())
    }

    fn ils(&mut self, kind: IlsKind, m: &mut Mmst<'_>) {
        match kind {
            IlsKind::Plain => ils_step(m, &mut self.rng),
            IlsKind::Directed => directed_ils_step(m, &mut self.rng),
        };
    }

    /// Runs the loop until a stop criterion fires; returns the pyramid and
    /// the number of started iterations.
    fn execute(&mut self) -> Result<(Pyramid<Mmst<'a>>, u64)> {
        let mut pyramid: Pyramid<Mmst<'a>> = Pyramid::new();
        let mut iterations = 0;
        // The first climber is drawn up front so a zero budget still
        // reports a solution.
        let first = self.fresh()?;
        self.observe(&first);
        let mut pending = Some(first);

        'run: while !self.should_stop() {
            iterations += 1;

            for (pos, (level, idx)) in pyramid.positions().into_iter().enumerate() {
                let kind = self.plan.member_ils(pos);
                pyramid.update(level, idx, |m| self.ils(kind, m));
                self.observe(&pyramid.level(level)[idx]);
                if self.should_stop() {
                    break 'run;
                }
            }

            let mut climber = match pending.take() {
                Some(c) => c,
                None => self.fresh()?,
            };
            self.ils(self.plan.climber_ils, &mut climber);
            self.observe(&climber);
            pyramid.add_unique(0, climber.clone())?;
            if self.should_stop() {
                break;
            }

            let mut level = 0;
            while level < pyramid.num_levels() {
                let mut idx = 0;
                while idx < pyramid.level(level).len() {
                    let partner = pyramid.level(level)[idx].assignment();
                    if partner != climber.assignment() {
                        let d =
                            px_decompose(self.instance, &self.vig, climber.assignment(), partner)?;
                        let (child, gain) = d.best_offspring(climber.assignment(), partner);
                        if gain > 0 {
                            climber = Mmst::with_tally(self.instance, child, self.tally.clone())?;
                            self.observe(&climber);
                            pyramid.add_unique(level + 1, climber.clone())?;
                            if self.should_stop() {
                                break 'run;
                            }
                        }
                    }
                    idx += 1;
                }
                level += 1;
            }

            if self.plan.long_connection_steps > 0 {
                let steps = self.plan.long_connection_steps;
                for (pos, (level, idx)) in pyramid.positions().into_iter().enumerate() {
                    if !self.plan.applies_long_connection(pos) {
                        continue;
                    }
                    pyramid.update(level, idx, |m| long_connection(m, steps, &mut self.rng));
                    self.observe(&pyramid.level(level)[idx]);
                    if self.should_stop() {
                        break 'run;
                    }
                }
            }
        }
        Ok((pyramid, iterations))
    }
}

/// Runs `plan` on `instance`. Deterministic for a given seed unless a time
/// limit is what ends the run.
pub fn run_plan(
    instance: &Instance,
    plan: Plan,
    seed: u64,
    stop: StopCriteria,
) -> Result<RunResult> {
    if !stop.is_set() {
        return Err(Error::NoStopCriterion);
    }
    let m = instance.num_clauses();
    let mut run = Run {
        instance,
        vig: Vig::build(instance),
        plan,
        stop,
        target: stop.target.unwrap_or(m),
        rng: rng_from_seed(seed),
        tally: Tally::new(),
        started: Instant::now(),
        best: Assignment::default(),
        best_fitness: 0,
        history: Vec::new(),
    };
    let (pyramid, iterations) = run.execute()?;
    Ok(RunResult {
        algorithm: plan.label,
        seed,
        n: instance.num_vars(),
        m,
        success: run.best_fitness >= run.target,
        best: run.best,
        best_fitness: run.best_fitness,
        target: run.target,
        full_evaluations: run.tally.full_evaluations(),
        flip_updates: run.tally.flip_updates(),
        wall: run.started.elapsed(),
        history: run.history,
        iterations,
        population: pyramid.iter().map(|m| m.assignment().clone()).collect(),
    })
}

pub fn run(instance: &Instance, config: &RunConfig) -> Result<RunResult> {
    run_plan(instance, config.plan(), config.seed, config.stop)
}

/// The undirected baseline: plain ILS, PX ascent, no long connections.
pub fn ipp_run(instance: &Instance, config: &RunConfig) -> Result<RunResult> {
    run(
        instance,
        &RunConfig {
            algorithm: Algorithm::Ipp,
            ..*config
        },
    )
}

/// Directed ILS everywhere plus long connections on every member.
pub fn mocsm_run(instance: &Instance, config: &RunConfig) -> Result<RunResult> {
    run(
        instance,
        &RunConfig {
            algorithm: Algorithm::Mocsm,
            ..*config
        },
    )
}

/// Alternates plain and directed ILS by position; long connections only on
/// even positions.
pub fn mocsm_mixed_run(instance: &Instance, config: &RunConfig) -> Result<RunResult> {
    run(
        instance,
        &RunConfig {
            algorithm: Algorithm::MocsmMixed,
            ..*config
        },
    )
}
