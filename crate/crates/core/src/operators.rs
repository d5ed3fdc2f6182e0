//! Single-solution operators working on an [`Mmst`]: hill climbers,
//! perturbation masks, the two iterated-local-search steps and the
//! long-connection drift.
//!
//! Every random choice, including argmax tie breaks, draws from the run's
//! generator so a run replays exactly from its seed.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::mmst::Mmst;
use crate::vig::Vig;

/// Variables to re-randomize, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PerturbationMask {
    pub variables: Vec<usize>,
}

impl PerturbationMask {
    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }
}

/// Picks uniformly among the indices in `ties`.
fn pick<R: Rng + ?Sized>(ties: &[usize], rng: &mut R) -> usize {
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.gen_range(0..ties.len())]
    }
}

/// First-improvement hill climber. Each pass visits the variables in a
/// fresh random order and flips every variable that currently improves
/// fitness; it stops after a pass without flips. Returns the number of
/// flips made.
pub fn fihc<R: Rng + ?Sized>(mmst: &mut Mmst<'_>, rng: &mut R) -> usize {
    let mut order: Vec<usize> = (0..mmst.instance().num_vars()).collect();
    let mut flips = 0;
    loop {
        order.shuffle(rng);
        let mut improved = false;
        for &v in &order {
            if mmst.gain(v) > 0 {
                mmst.flip_var(v);
                flips += 1;
                improved = true;
            }
        }
        if !improved {
            return flips;
        }
    }
}

/// Hill climber that, among the improving flips, always takes one with the
/// highest clause-satisfiability score. Returns the flipped variables in
/// order.
pub fn directed_fihc<R: Rng + ?Sized>(mmst: &mut Mmst<'_>, rng: &mut R) -> Vec<usize> {
    let n = mmst.instance().num_vars();
    let mut taken = Vec::new();
    let mut ties = Vec::new();
    loop {
        let mut best = i64::MIN;
        ties.clear();
        for v in 0..n {
            if mmst.gain(v) <= 0 {
                continue;
            }
            let score = mmst.fcf_gain(v);
            if score > best {
                best = score;
                ties.clear();
            }
            if score == best {
                ties.push(v);
            }
        }
        if ties.is_empty() {
            return taken;
        }
        let v = pick(&ties, rng);
        mmst.flip_var(v);
        taken.push(v);
    }
}

/// Repeats the best single flip by clause-satisfiability score, ignoring
/// fitness, for at most `steps_limit` steps. Stops early once every score
/// is negative; zero-score flips are still taken. Returns the flipped
/// variables in order.
pub fn long_connection<R: Rng + ?Sized>(
    mmst: &mut Mmst<'_>,
    steps_limit: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = mmst.instance().num_vars();
    let mut taken = Vec::new();
    let mut ties = Vec::new();
    while taken.len() < steps_limit {
        let mut best = i64::MIN;
        ties.clear();
        for v in 0..n {
            let score = mmst.fcf_gain(v);
            if score > best {
                best = score;
                ties.clear();
            }
            if score == best {
                ties.push(v);
            }
        }
        if ties.is_empty() || best < 0 {
            break;
        }
        let v = pick(&ties, rng);
        mmst.flip_var(v);
        taken.push(v);
    }
    taken
}

/// Variables of the seed clause and of every clause sharing a variable with
/// it, sorted.
pub fn clause_neighbourhood(instance: &Instance, seed_clause: usize) -> Result<Vec<usize>> {
    if seed_clause >= instance.num_clauses() {
        return Err(Error::ClauseOutOfRange {
            clause: seed_clause,
            m: instance.num_clauses(),
        });
    }
    let mut vars: Vec<usize> = instance
        .clause(seed_clause)
        .variables()
        .iter()
        .flat_map(|&v| instance.occurrences(v))
        .flat_map(|&ci| instance.clause(ci).variables())
        .collect();
    vars.sort_unstable();
    vars.dedup();
    Ok(vars)
}

/// Clause-based perturbation mask: a uniformly random quarter (rounded up)
/// of [`clause_neighbourhood`].
pub fn clause_mask<R: Rng + ?Sized>(
    instance: &Instance,
    seed_clause: usize,
    rng: &mut R,
) -> Result<PerturbationMask> {
    let union = clause_neighbourhood(instance, seed_clause)?;
    let keep = union.len().div_ceil(4);
    let mut variables: Vec<usize> = index::sample(rng, union.len(), keep)
        .into_iter()
        .map(|i| union[i])
        .collect();
    variables.sort_unstable();
    Ok(PerturbationMask { variables })
}

/// VIG-based mask around a uniformly random centre variable.
pub fn vigbp_mask<R: Rng + ?Sized>(vig: &Vig, max_size: usize, rng: &mut R) -> PerturbationMask {
    if vig.num_vars() == 0 {
        return PerturbationMask::default();
    }
    let centre = rng.gen_range(0..vig.num_vars());
    vigbp_mask_at(vig, centre, max_size, rng).expect("centre drawn from the variable range")
}

/// `{centre} ∪ neighbours(centre)`, thinned at random to `max_size`
/// members without ever dropping the centre.
pub fn vigbp_mask_at<R: Rng + ?Sized>(
    vig: &Vig,
    centre: usize,
    max_size: usize,
    rng: &mut R,
) -> Result<PerturbationMask> {
    let neighbours = vig.neighbors(centre)?;
    let room = max_size.max(1) - 1;
    let mut variables: Vec<usize> = if neighbours.len() <= room {
        neighbours.to_vec()
    } else {
        index::sample(rng, neighbours.len(), room)
            .into_iter()
            .map(|i| neighbours[i])
            .collect()
    };
    variables.push(centre);
    variables.sort_unstable();
    Ok(PerturbationMask { variables })
}

/// Sets every masked variable to a fresh uniform bit.
pub fn randomize<R: Rng + ?Sized>(mmst: &mut Mmst<'_>, mask: &PerturbationMask, rng: &mut R) {
    for &v in &mask.variables {
        let bit = rng.gen_bool(0.5);
        if bit != mmst.assignment().get(v) {
            mmst.flip_var(v);
        }
    }
}

/// What an ILS step did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlsOutcome {
    /// `None` when no seed clause was available and the step did nothing.
    pub seed_clause: Option<usize>,
    pub mask: PerturbationMask,
    pub reverted: bool,
}

impl IlsOutcome {
    fn skipped() -> Self {
        IlsOutcome {
            seed_clause: None,
            mask: PerturbationMask::default(),
            reverted: false,
        }
    }
}

fn perturb_and_climb<R: Rng + ?Sized>(
    mmst: &mut Mmst<'_>,
    seed_clause: usize,
    directed: bool,
    rng: &mut R,
) -> IlsOutcome {
    let saved = mmst.clone();
    let before = mmst.fitness();
    let mask = clause_mask(mmst.instance(), seed_clause, rng).expect("seed clause in range");
    randomize(mmst, &mask, rng);
    if directed {
        directed_fihc(mmst, rng);
    } else {
        fihc(mmst, rng);
    }
    let reverted = mmst.fitness() < before;
    if reverted {
        mmst.restore(&saved);
    }
    IlsOutcome {
        seed_clause: Some(seed_clause),
        mask,
        reverted,
    }
}

/// Perturbs around a uniformly random clause, re-optimizes with [`fihc`]
/// and reverts only if fitness dropped.
pub fn ils_step<R: Rng + ?Sized>(mmst: &mut Mmst<'_>, rng: &mut R) -> IlsOutcome {
    let m = mmst.instance().num_clauses();
    if m == 0 {
        return IlsOutcome::skipped();
    }
    let seed_clause = rng.gen_range(0..m);
    perturb_and_climb(mmst, seed_clause, false, rng)
}

/// Like [`ils_step`] but seeded by a uniformly random unsatisfied clause
/// and re-optimized with [`directed_fihc`]. No-op when every clause is
/// satisfied.
pub fn directed_ils_step<R: Rng + ?Sized>(mmst: &mut Mmst<'_>, rng: &mut R) -> IlsOutcome {
    let unsatisfied = mmst.unsatisfied_clauses();
    if unsatisfied.is_empty() {
        return IlsOutcome::skipped();
    }
    let seed_clause = unsatisfied[rng.gen_range(0..unsatisfied.len())];
    perturb_and_climb(mmst, seed_clause, true, rng)
}
