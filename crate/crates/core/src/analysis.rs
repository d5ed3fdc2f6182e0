//! Backbone analysis of Max3Sat instances.
//!
//! The backbone is the partial assignment shared by every globally optimal
//! solution. Small instances get it by exhaustive enumeration; larger ones
//! from a supplied set of optima. Around it sit the overlap statistics of
//! near-optimal solutions, the backbone-distance difficulty measure and
//! Spearman rank correlation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, SatProfile};

pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 26;
/// Hard ceiling for exhaustive enumeration, whatever limit is requested.
pub const MAX_EXHAUSTIVE_VARS: usize = 40;
pub const DEFAULT_DIFFICULTY_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Backbone {
    n: usize,
    fixed: BTreeMap<usize, bool>,
    optimum: Option<usize>,
}

impl Backbone {
    pub fn new(n: usize, fixed: BTreeMap<usize, bool>, optimum: Option<usize>) -> Self {
        Backbone { n, fixed, optimum }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn fixed(&self) -> &BTreeMap<usize, bool> {
        &self.fixed
    }

    pub fn size(&self) -> usize {
        self.fixed.len()
    }

    pub fn optimum(&self) -> Option<usize> {
        self.optimum
    }

    /// Number of fixed positions on which `x` agrees with the backbone.
    pub fn overlap(&self, x: &Assignment) -> usize {
        self.fixed.iter().filter(|(&v, &b)| x.get(v) == b).count()
    }

    /// Backbone size minus overlap.
    pub fn back_dist(&self, x: &Assignment) -> usize {
        self.size() - self.overlap(x)
    }

    pub fn to_record(&self) -> BackboneRecord {
        BackboneRecord {
            optimum: self.optimum,
            size: self.size(),
            fixed: self.fixed.iter().map(|(&v, &b)| (v + 1, b as u8)).collect(),
        }
    }
}

pub fn overlap(x: &Assignment, backbone: &Backbone) -> usize {
    backbone.overlap(x)
}

pub fn back_dist(x: &Assignment, backbone: &Backbone) -> usize {
    backbone.back_dist(x)
}

/// JSON form of a backbone: variables 1-based, values 0/1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneRecord {
    pub optimum: Option<usize>,
    pub size: usize,
    pub fixed: BTreeMap<usize, u8>,
}

impl BackboneRecord {
    pub fn into_backbone(self, n: usize) -> Result<Backbone> {
        let mut fixed = BTreeMap::new();
        for (var, bit) in self.fixed {
            if var == 0 || var > n {
                return Err(Error::VariableOutOfRange { var, n });
            }
            fixed.insert(var - 1, bit != 0);
        }
        Ok(Backbone::new(n, fixed, self.optimum))
    }
}

/// Variables fixed iff identical across every input.
pub fn backbone_from_set(optima: &[Assignment]) -> Result<Backbone> {
    let first = optima.first().ok_or(Error::EmptyInput("optima set"))?;
    let n = first.len();
    let mut agree = vec![true; n];
    for x in &optima[1..] {
        if x.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: x.len(),
            });
        }
        for (v, flag) in agree.iter_mut().enumerate() {
            *flag &= x.get(v) == first.get(v);
        }
    }
    let fixed = (0..n)
        .filter(|&v| agree[v])
        .map(|v| (v, first.get(v)))
        .collect();
    Ok(Backbone::new(n, fixed, None))
}

/// [`backbone_from_set`] over the fittest solutions in `solutions`,
/// recording their fitness as the optimum.
pub fn backbone_from_best(instance: &Instance, solutions: &[Assignment]) -> Result<Backbone> {
    let scored = solutions
        .iter()
        .map(|x| instance.fitness(x))
        .collect::<Result<Vec<_>>>()?;
    let best = *scored.iter().max().ok_or(Error::EmptyInput("solutions"))?;
    let optima: Vec<Assignment> = solutions
        .iter()
        .zip(&scored)
        .filter(|(_, &f)| f == best)
        .map(|(x, _)| x.clone())
        .collect();
    let mut backbone = backbone_from_set(&optima)?;
    backbone.optimum = Some(best);
    Ok(backbone)
}

/// Result of enumerating every assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveScan {
    pub optimum: usize,
    pub optima_count: u64,
    pub backbone: Backbone,
    /// Every optimal assignment, in mask order; empty unless requested.
    pub optima: Vec<Assignment>,
}

#[derive(Debug, Clone)]
struct Partial {
    optimum: usize,
    count: u64,
    all_ones: u64,
    all_zeros: u64,
    optima: Vec<u64>,
}

impl Partial {
    fn merge(self, other: Partial) -> Partial {
        use std::cmp::Ordering::*;
        match self.optimum.cmp(&other.optimum) {
            Greater => self,
            Less => other,
            Equal => {
                let mut optima = self.optima;
                optima.extend(other.optima);
                Partial {
                    optimum: self.optimum,
                    count: self.count + other.count,
                    all_ones: self.all_ones & other.all_ones,
                    all_zeros: self.all_zeros & other.all_zeros,
                    optima,
                }
            }
        }
    }
}

/// Walks `start..end` in Gray-code order, flipping one variable per step
/// and updating only the clauses that contain it.
fn scan_range(instance: &Instance, start: u64, end: u64, collect: bool) -> Partial {
    let gray = |i: u64| i ^ (i >> 1);
    let n = instance.num_vars();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut mask = gray(start);
    let lit_true = |mask: u64, var: usize, negated: bool| (mask >> var & 1 == 1) != negated;

    let mut sat: Vec<u8> = instance
        .clauses()
        .iter()
        .map(|c| {
            c.literals()
                .iter()
                .filter(|l| lit_true(mask, l.var, l.negated))
                .count() as u8
        })
        .collect();
    let mut unsat = sat.iter().filter(|&&k| k == 0).count();

    let mut best = Partial {
        optimum: 0,
        count: 0,
        all_ones: full,
        all_zeros: full,
        optima: Vec::new(),
    };
    let record = |mask: u64, unsat: usize, best: &mut Partial| {
        let fitness = instance.num_clauses() - unsat;
        if fitness > best.optimum || best.count == 0 {
            best.optimum = fitness;
            best.count = 0;
            best.all_ones = full;
            best.all_zeros = full;
            best.optima.clear();
        }
        if fitness == best.optimum {
            best.count += 1;
            best.all_ones &= mask;
            best.all_zeros &= !mask & full;
            if collect {
                best.optima.push(mask);
            }
        }
    };
    record(mask, unsat, &mut best);

    for i in start + 1..end {
        let var = i.trailing_zeros() as usize;
        mask ^= 1 << var;
        for &ci in instance.occurrences(var) {
            let lit = instance
                .clause(ci)
                .literals()
                .iter()
                .find(|l| l.var == var)
                .expect("membership index is consistent");
            let old = sat[ci];
            let new = if lit_true(mask, var, lit.negated) {
                old + 1
            } else {
                old - 1
            };
            if old == 0 {
                unsat -= 1;
            } else if new == 0 {
                unsat += 1;
            }
            sat[ci] = new;
        }
        record(mask, unsat, &mut best);
    }
    best
}

/// Enumerates all `2^n` assignments (in parallel chunks) and returns the
/// optimum, the number of optima and their backbone. With `collect_optima`
/// the optima themselves are returned too.
pub fn exhaustive_scan(
    instance: &Instance,
    limit: usize,
    collect_optima: bool,
) -> Result<ExhaustiveScan> {
    let n = instance.num_vars();
    let limit = limit.min(MAX_EXHAUSTIVE_VARS);
    if n > limit {
        return Err(Error::ExhaustiveLimit { n, limit });
    }
    let total = 1u64 << n;
    let chunk_bits = n.saturating_sub(14).min(10);
    let chunks = 1u64 << chunk_bits;
    let per_chunk = total / chunks;
    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|c| scan_range(instance, c * per_chunk, (c + 1) * per_chunk, collect_optima))
        .collect();
    let merged = partials
        .into_iter()
        .reduce(Partial::merge)
        .expect("at least one chunk");

    let fixed = (0..n)
        .filter_map(|v| {
            if merged.all_ones >> v & 1 == 1 {
                Some((v, true))
            } else if merged.all_zeros >> v & 1 == 1 {
                Some((v, false))
            } else {
                None
            }
        })
        .collect();
    let mut masks = merged.optima;
    masks.sort_unstable();
    Ok(ExhaustiveScan {
        optimum: merged.optimum,
        optima_count: merged.count,
        backbone: Backbone::new(n, fixed, Some(merged.optimum)),
        optima: masks
            .into_iter()
            .map(|m| Assignment::from_mask(m, n))
            .collect(),
    })
}

pub fn backbone_exhaustive(instance: &Instance, limit: usize) -> Result<Backbone> {
    Ok(exhaustive_scan(instance, limit, false)?.backbone)
}

/// Every optimal assignment, in mask order.
pub fn exhaustive_optima(instance: &Instance, limit: usize) -> Result<Vec<Assignment>> {
    Ok(exhaustive_scan(instance, limit, true)?.optima)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HqClass {
    /// Exactly one unsatisfied clause.
    A,
    /// At least two unsatisfied clauses, but at or above the bar.
    B,
}

impl HqClass {
    pub fn label(self) -> &'static str {
        match self {
            HqClass::A => "A",
            HqClass::B => "B",
        }
    }
}

/// `ceil(0.995 * m)` satisfied clauses.
pub fn default_quality_bar(m: usize) -> usize {
    (995 * m).div_ceil(1000)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HighQualitySet {
    pub class_a: Vec<Assignment>,
    pub class_b: Vec<Assignment>,
}

impl HighQualitySet {
    pub fn class(&self, class: HqClass) -> &[Assignment] {
        match class {
            HqClass::A => &self.class_a,
            HqClass::B => &self.class_b,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.class_a.is_empty() && self.class_b.is_empty()
    }
}

/// Which class, if any, a solution of the given fitness belongs to.
pub fn quality_class(fitness: usize, m: usize, bar: usize) -> Option<HqClass> {
    if m >= 1 && fitness == m - 1 {
        Some(HqClass::A)
    } else if fitness + 2 <= m && fitness >= bar {
        Some(HqClass::B)
    } else {
        None
    }
}

pub fn classify_high_quality(
    instance: &Instance,
    solutions: &[Assignment],
) -> Result<HighQualitySet> {
    classify_high_quality_with_bar(
        instance,
        solutions,
        default_quality_bar(instance.num_clauses()),
    )
}

/// Classification with an explicit minimum number of satisfied clauses for
/// class B. Duplicates are kept.
pub fn classify_high_quality_with_bar(
    instance: &Instance,
    solutions: &[Assignment],
    bar: usize,
) -> Result<HighQualitySet> {
    let m = instance.num_clauses();
    let mut hq = HighQualitySet::default();
    for x in solutions {
        match quality_class(instance.fitness(x)?, m, bar) {
            Some(HqClass::A) => hq.class_a.push(x.clone()),
            Some(HqClass::B) => hq.class_b.push(x.clone()),
            None => {}
        }
    }
    Ok(hq)
}

/// Per class: overlap value -> number of solutions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OverlapDistribution {
    pub class_a: BTreeMap<usize, usize>,
    pub class_b: BTreeMap<usize, usize>,
}

pub const OVERLAP_CSV_HEADER: &str = "class,overlap,count";

impl OverlapDistribution {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{OVERLAP_CSV_HEADER}\n");
        for (class, hist) in [(HqClass::A, &self.class_a), (HqClass::B, &self.class_b)] {
            for (overlap, count) in hist {
                writeln!(out, "{},{overlap},{count}", class.label()).unwrap();
            }
        }
        out
    }
}

pub fn overlap_distribution(backbone: &Backbone, hq: &HighQualitySet) -> OverlapDistribution {
    let histogram = |xs: &[Assignment]| {
        let mut h = BTreeMap::new();
        for x in xs {
            *h.entry(backbone.overlap(x)).or_insert(0) += 1;
        }
        h
    };
    OverlapDistribution {
        class_a: histogram(&hq.class_a),
        class_b: histogram(&hq.class_b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

impl Summary {
    fn of(values: &[usize]) -> Summary {
        Summary {
            min: *values.iter().min().expect("non-empty bucket"),
            max: *values.iter().max().expect("non-empty bucket"),
            mean: values.iter().sum::<usize>() as f64 / values.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSatRow {
    pub class: HqClass,
    pub overlap: usize,
    pub count: usize,
    pub c1: Summary,
    pub c2: Summary,
}

pub const C1C2_CSV_HEADER: &str = "class,overlap,count,c1_min,c1_mean,c1_max,c2_min,c2_mean,c2_max";

/// Groups each class by backbone overlap and summarises the once- and
/// twice-satisfied clause counts of every group.
pub fn c1c2_by_overlap(
    instance: &Instance,
    backbone: &Backbone,
    hq: &HighQualitySet,
) -> Result<Vec<OverlapSatRow>> {
    let mut rows = Vec::new();
    for class in [HqClass::A, HqClass::B] {
        let mut groups: BTreeMap<usize, Vec<SatProfile>> = BTreeMap::new();
        for x in hq.class(class) {
            groups
                .entry(backbone.overlap(x))
                .or_default()
                .push(instance.evaluate(x)?);
        }
        for (overlap, profiles) in groups {
            let c1: Vec<usize> = profiles.iter().map(|p| p.c1).collect();
            let c2: Vec<usize> = profiles.iter().map(|p| p.c2).collect();
            rows.push(OverlapSatRow {
                class,
                overlap,
                count: profiles.len(),
                c1: Summary::of(&c1),
                c2: Summary::of(&c2),
            });
        }
    }
    Ok(rows)
}

pub fn c1c2_csv(rows: &[OverlapSatRow]) -> String {
    let mut out = format!("{C1C2_CSV_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.4},{},{},{:.4},{}",
            r.class.label(),
            r.overlap,
            r.count,
            r.c1.min,
            r.c1.mean,
            r.c1.max,
            r.c2.min,
            r.c2.mean,
            r.c2.max
        )
        .unwrap();
    }
    out
}

/// Mean backbone distance of the best `ceil(fraction * count)` solutions
/// (fitness descending, input order among equal fitness).
pub fn difficulty(
    instance: &Instance,
    backbone: &Backbone,
    solutions: &[Assignment],
    fraction: f64,
) -> Result<f64> {
    if solutions.is_empty() {
        return Err(Error::EmptyInput("solutions"));
    }
    let mut scored = solutions
        .iter()
        .map(|x| Ok((instance.fitness(x)?, x)))
        .collect::<Result<Vec<_>>>()?;
    // Stable sort keeps input order among ties.
    scored.sort_by_key(|&(f, _)| std::cmp::Reverse(f));
    let take =
        ((fraction * solutions.len() as f64 - 1e-9).ceil() as usize).clamp(1, solutions.len());
    let total: usize = scored[..take]
        .iter()
        .map(|(_, x)| backbone.back_dist(x))
        .sum();
    Ok(total as f64 / take as f64)
}

/// Ranks starting at 1; ties get the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of the average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Correlation("at least two observations are required"));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mean = (xs.len() as f64 + 1.0) / 2.0;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mean) * (b - mean);
        vx += (a - mean) * (a - mean);
        vy += (b - mean) * (b - mean);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Correlation("one of the samples is constant"));
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}
