//! Max3Sat instances: literals, clauses, assignments, DIMACS text I/O,
//! the two random generators, and the reference (full scan) evaluation.
//!
//! Variables are 0-based everywhere in the library. DIMACS is 1-based and
//! the conversion happens only in [`parse_dimacs`] and [`write_dimacs`].

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn new(var: usize, negated: bool) -> Self {
        Literal { var, negated }
    }

    /// Converts a nonzero DIMACS literal (`-k` is variable `k-1` negated).
    pub fn from_dimacs(lit: i64) -> Option<Self> {
        if lit == 0 {
            return None;
        }
        Some(Literal::new(lit.unsigned_abs() as usize - 1, lit < 0))
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }

    #[inline]
    pub fn is_true(self, x: &Assignment) -> bool {
        x.get(self.var) != self.negated
    }
}

/// A disjunction of exactly three literals over distinct variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Clause(pub [Literal; 3]);

impl Clause {
    pub fn new(literals: [Literal; 3]) -> Self {
        Clause(literals)
    }

    pub fn literals(&self) -> &[Literal; 3] {
        &self.0
    }

    pub fn variables(&self) -> [usize; 3] {
        [self.0[0].var, self.0[1].var, self.0[2].var]
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0.iter().any(|l| l.var == var)
    }

    fn repeated_variable(&self) -> Option<usize> {
        let [a, b, c] = self.variables();
        if a == b || a == c {
            Some(a)
        } else if b == c {
            Some(b)
        } else {
            None
        }
    }
}

/// Number of literals of `clause` made true by `x`, in `0..=3`.
#[inline]
pub fn clause_sat_count(clause: &Clause, x: &Assignment) -> u8 {
    clause.0.iter().filter(|l| l.is_true(x)).count() as u8
}

/// A full assignment, one bit per variable. Prints as a `0`/`1` string
/// with variable 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Assignment((0..n).map(|_| rng.gen_bool(0.5)).collect())
    }

    /// Bit `i` of `mask` becomes variable `i`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Assignment((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, var: usize) -> bool {
        self.0[var]
    }

    #[inline]
    pub fn set(&mut self, var: usize, value: bool) {
        self.0[var] = value;
    }

    #[inline]
    pub fn flip(&mut self, var: usize) {
        self.0[var] = !self.0[var];
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Variables on which `self` and `other` disagree, ascending.
    pub fn differing(&self, other: &Assignment) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter_map(|(i, (a, b))| (a != b).then_some(i))
            .collect()
    }

    pub fn hamming(&self, other: &Assignment) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_char(if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("unexpected character {other:?} in assignment")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Assignment)
    }
}

/// Clause counts by number of satisfying literals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SatProfile {
    pub c0: usize,
    pub c1: usize,
    pub c2: usize,
    pub c3: usize,
}

impl SatProfile {
    pub fn total(&self) -> usize {
        self.c0 + self.c1 + self.c2 + self.c3
    }

    /// Number of satisfied clauses.
    pub fn fitness(&self) -> usize {
        self.c1 + self.c2 + self.c3
    }

    pub fn count(&self, k: u8) -> usize {
        match k {
            0 => self.c0,
            1 => self.c1,
            2 => self.c2,
            3 => self.c3,
            _ => panic!("satisfier count {k} out of range"),
        }
    }

    pub(crate) fn count_mut(&mut self, k: u8) -> &mut usize {
        match k {
            0 => &mut self.c0,
            1 => &mut self.c1,
            2 => &mut self.c2,
            3 => &mut self.c3,
            _ => panic!("satisfier count {k} out of range"),
        }
    }
}

/// An immutable Max3Sat instance together with its variable-to-clause
/// membership index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    clauses: Vec<Clause>,
    occurrences: Vec<Vec<usize>>,
}

impl Instance {
    /// Validates that every clause uses three distinct in-range variables.
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        for (ci, clause) in clauses.iter().enumerate() {
            if let Some(lit) = clause.0.iter().find(|l| l.var >= n) {
                return Err(Error::VariableOutOfRange { var: lit.var, n });
            }
            if let Some(var) = clause.repeated_variable() {
                return Err(Error::RepeatedVariable { clause: ci, var });
            }
        }
        let occurrences = membership_index(n, &clauses);
        Ok(Instance {
            n,
            clauses,
            occurrences,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, index: usize) -> &Clause {
        &self.clauses[index]
    }

    /// Indices of the clauses containing `var`, ascending.
    pub fn occurrences(&self, var: usize) -> &[usize] {
        &self.occurrences[var]
    }

    pub fn check_assignment(&self, x: &Assignment) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.n {
            return Err(Error::VariableOutOfRange { var, n: self.n });
        }
        Ok(())
    }

    /// Full-scan evaluation. This is the reference every incremental
    /// structure is checked against.
    pub fn evaluate(&self, x: &Assignment) -> Result<SatProfile> {
        self.check_assignment(x)?;
        let mut profile = SatProfile::default();
        for clause in &self.clauses {
            *profile.count_mut(clause_sat_count(clause, x)) += 1;
        }
        Ok(profile)
    }

    /// Shorthand for `evaluate(x)?.fitness()`.
    pub fn fitness(&self, x: &Assignment) -> Result<usize> {
        Ok(self.evaluate(x)?.fitness())
    }
}

fn membership_index(n: usize, clauses: &[Clause]) -> Vec<Vec<usize>> {
    let mut occurrences = vec![Vec::new(); n];
    for (ci, clause) in clauses.iter().enumerate() {
        for var in clause.variables() {
            occurrences[var].push(ci);
        }
    }
    occurrences
}

/// Parses DIMACS CNF restricted to 3-literal clauses, one clause per line.
///
/// Comment lines start with `c`. A line consisting of `%` ends the clause
/// section (the SATLIB uniform benchmarks carry such a trailer).
pub fn parse_dimacs(text: &str) -> Result<Instance, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::new(line_no, ParseErrorKind::DuplicateHeader));
            }
            header = Some(parse_header(line).map_err(|k| ParseError::new(line_no, k))?);
            continue;
        }
        let (n, _) = header.ok_or(ParseError::new(line_no, ParseErrorKind::MissingHeader))?;
        let clause = parse_clause(line, n).map_err(|k| ParseError::new(line_no, k))?;
        clauses.push(clause);
    }

    let (n, m) = header.ok_or(ParseError::new(
        last_line.max(1),
        ParseErrorKind::MissingHeader,
    ))?;
    if clauses.len() != m {
        return Err(ParseError::new(
            last_line.max(1),
            ParseErrorKind::ClauseCountMismatch {
                declared: m,
                found: clauses.len(),
            },
        ));
    }
    // Range and repetition were checked per line already.
    let occurrences = membership_index(n, &clauses);
    Ok(Instance {
        n,
        clauses,
        occurrences,
    })
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize), ParseErrorKind> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    match parts.as_slice() {
        ["p", "cnf", n, m] => {
            let n = n
                .parse()
                .map_err(|_| ParseErrorKind::MalformedHeader(line.to_string()))?;
            let m = m
                .parse()
                .map_err(|_| ParseErrorKind::MalformedHeader(line.to_string()))?;
            Ok((n, m))
        }
        _ => Err(ParseErrorKind::MalformedHeader(line.to_string())),
    }
}

fn parse_clause(line: &str, n: usize) -> std::result::Result<Clause, ParseErrorKind> {
    let mut lits = Vec::with_capacity(3);
    let mut terminated = false;
    for token in line.split_whitespace() {
        if terminated {
            // Anything after the terminating 0 would start a second clause.
            return Err(ParseErrorKind::Arity(lits.len() + 1));
        }
        let value: i64 = token
            .parse()
            .map_err(|_| ParseErrorKind::InvalidLiteral(token.to_string()))?;
        match Literal::from_dimacs(value) {
            None => terminated = true,
            Some(lit) => {
                if lit.var >= n {
                    return Err(ParseErrorKind::VariableOutOfRange {
                        var: lit.var + 1,
                        n,
                    });
                }
                lits.push(lit);
            }
        }
    }
    if !terminated {
        return Err(ParseErrorKind::Unterminated);
    }
    let literals: [Literal; 3] = lits
        .as_slice()
        .try_into()
        .map_err(|_| ParseErrorKind::Arity(lits.len()))?;
    let clause = Clause(literals);
    if let Some(var) = clause.repeated_variable() {
        return Err(ParseErrorKind::RepeatedVariable(var + 1));
    }
    Ok(clause)
}

/// Writes the instance as DIMACS CNF, preserving clause and literal order.
pub fn write_dimacs(instance: &Instance) -> String {
    let mut out = format!("p cnf {} {}\n", instance.n, instance.clauses.len());
    for clause in &instance.clauses {
        let [a, b, c] = clause.0;
        writeln!(
            out,
            "{} {} {} 0",
            a.to_dimacs(),
            b.to_dimacs(),
            c.to_dimacs()
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GeneratorKind {
    Uniform,
    ScaleFree { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub n: usize,
    /// Clauses per variable.
    pub cr: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn uniform(n: usize, cr: f64, seed: u64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::Uniform,
            n,
            cr,
            seed,
        }
    }

    pub fn scale_free(n: usize, cr: f64, beta: f64, seed: u64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::ScaleFree { beta },
            n,
            cr,
            seed,
        }
    }

    /// `floor(n * cr)`. The tiny epsilon keeps products such as
    /// `100 * 4.1` from landing one below the intended integer.
    pub fn clause_count(&self) -> usize {
        (self.n as f64 * self.cr + 1e-9).floor().max(0.0) as usize
    }

    pub fn generate(&self) -> Result<Instance> {
        match self.kind {
            GeneratorKind::Uniform => generate_uniform(self.n, self.cr, self.seed),
            GeneratorKind::ScaleFree { beta } => {
                generate_scale_free(self.n, self.cr, beta, self.seed)
            }
        }
    }

    fn validated_clause_count(&self) -> Result<usize> {
        if self.n < 3 {
            return Err(Error::TooFewVariables(self.n));
        }
        let m = self.clause_count();
        if m == 0 {
            return Err(Error::NoClauses {
                n: self.n,
                cr: self.cr,
            });
        }
        Ok(m)
    }
}

/// Uniform random 3-SAT: three distinct variables drawn without
/// replacement, each negated with probability 1/2.
pub fn generate_uniform(n: usize, cr: f64, seed: u64) -> Result<Instance> {
    let m = GeneratorConfig::uniform(n, cr, seed).validated_clause_count()?;
    let mut rng = rng_from_seed(seed);
    let clauses = (0..m)
        .map(|_| {
            let vars = rand::seq::index::sample(&mut rng, n, 3);
            Clause([
                Literal::new(vars.index(0), rng.gen_bool(0.5)),
                Literal::new(vars.index(1), rng.gen_bool(0.5)),
                Literal::new(vars.index(2), rng.gen_bool(0.5)),
            ])
        })
        .collect();
    Instance::new(n, clauses)
}

/// Sampling weights of the scale-free generator: variable `i` (0-based,
/// rank `i + 1`) has weight `(i + 1)^(-1/beta)`.
pub fn scale_free_weights(n: usize, beta: f64) -> Vec<f64> {
    (1..=n)
        .map(|rank| (rank as f64).powf(-1.0 / beta))
        .collect()
}

/// Power-law 3-SAT. Variables are drawn from [`scale_free_weights`] and
/// redrawn until the three variables of a clause are distinct.
pub fn generate_scale_free(n: usize, cr: f64, beta: f64, seed: u64) -> Result<Instance> {
    let m = GeneratorConfig::scale_free(n, cr, beta, seed).validated_clause_count()?;
    if beta.is_nan() || beta <= 1.0 {
        return Err(Error::InvalidBeta(beta));
    }
    let weights =
        WeightedIndex::new(scale_free_weights(n, beta)).expect("weights are finite and positive");
    let mut rng = rng_from_seed(seed);
    let mut clauses = Vec::with_capacity(m);
    for _ in 0..m {
        let mut vars = [0usize; 3];
        let mut filled = 0;
        while filled < 3 {
            let v = weights.sample(&mut rng);
            if !vars[..filled].contains(&v) {
                vars[filled] = v;
                filled += 1;
            }
        }
        clauses.push(Clause(vars.map(|v| Literal::new(v, rng.gen_bool(0.5)))));
    }
    Instance::new(n, clauses)
}

/// Reads a solutions file: one `0`/`1` string of length `n` per line.
/// Blank lines are skipped.
pub fn parse_solutions(text: &str, n: usize) -> Result<Vec<Assignment>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let x: Assignment = line.parse().map_err(|reason| Error::MalformedSolution {
            line: idx + 1,
            reason,
        })?;
        if x.len() != n {
            return Err(Error::MalformedSolution {
                line: idx + 1,
                reason: format!("expected {n} bits, found {}", x.len()),
            });
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const E1_TEXT: &str = "p cnf 6 3\n1 -2 3 0\n-2 3 5 0\n-4 5 -6 0\n";

    pub fn e1() -> Instance {
        parse_dimacs(E1_TEXT).unwrap()
    }

    pub fn x(s: &str) -> Assignment {
        s.parse().unwrap()
    }
}
