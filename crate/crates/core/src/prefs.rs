//! Preference profiles, lotteries, rank histograms and the rank-approximation
//! metric.
//!
//! The `i`-rank of an outcome is the number of agents holding it among their
//! top `i` choices. An outcome (or a lottery over outcomes) is an
//! `α`-rank-approximation when its (expected) `i`-rank is at least
//! `maxrank_i / α` for every position `i`, where `maxrank_i` is the best
//! `i`-rank over all feasible outcomes.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, from_usize, Rational};

/// Read access to per-agent positions of outcomes. Positions are 1-based.
pub trait Ranking {
    fn n_agents(&self) -> usize;
    /// Number of outcomes in the universe.
    fn n_outcomes(&self) -> usize;
    /// Histogram length: `m` for strict profiles, `max_j m_j` with indifferences.
    fn n_positions(&self) -> usize;
    /// Position of `outcome` for `agent`; callers guarantee `outcome < n_outcomes()`.
    fn position(&self, agent: usize, outcome: usize) -> usize;
}

/// An outcome as seen by the agents: which item each agent receives.
///
/// In the general setting the outcome itself is the "item" every agent
/// receives; in matching, matroid and scheduling markets an agent may be left
/// with the null item, which ranks below every real item.
pub trait Outcome: Ord + Clone + fmt::Debug {
    fn received(&self, agent: usize) -> Option<usize>;
    /// The outcome in which `agent` receives `item` and nobody else receives anything.
    fn singleton(n_agents: usize, agent: usize, item: usize) -> Self;
}

impl Outcome for usize {
    fn received(&self, _agent: usize) -> Option<usize> {
        Some(*self)
    }

    fn singleton(_n_agents: usize, _agent: usize, item: usize) -> Self {
        item
    }
}

/// Strict and complete preference lists over a universe `0..m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrictProfile {
    m: usize,
    lists: Vec<Vec<usize>>,
    pos: Vec<Vec<usize>>,
}

impl StrictProfile {
    /// `lists[j][r-1]` is agent `j`'s `r`-th choice.
    pub fn new(m: usize, lists: Vec<Vec<usize>>) -> Result<Self> {
        let mut pos = Vec::with_capacity(lists.len());
        for (j, list) in lists.iter().enumerate() {
            pos.push(positions_of(m, list).ok_or_else(|| {
                Error::domain(format!("list of agent {j} is not a permutation of 0..{m}: {list:?}"))
            })?);
        }
        Ok(StrictProfile { m, lists, pos })
    }

    pub fn n_items(&self) -> usize {
        self.m
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    pub fn list(&self, agent: usize) -> &[usize] {
        &self.lists[agent]
    }

    /// The item agent `agent` ranks at position `r` (1-based).
    pub fn alt(&self, agent: usize, r: usize) -> usize {
        self.lists[agent][r - 1]
    }

    /// Position of the item an agent receives in `o`; the null item sits at `m + 1`.
    pub fn position_of<O: Outcome>(&self, agent: usize, o: &O) -> usize {
        match o.received(agent) {
            Some(item) => self.pos[agent][item],
            None => self.m + 1,
        }
    }

    /// Profile with agent `agent`'s list replaced (a unilateral deviation).
    pub fn with_list(&self, agent: usize, list: Vec<usize>) -> Result<Self> {
        let mut lists = self.lists.clone();
        lists[agent] = list;
        StrictProfile::new(self.m, lists)
    }

    /// Restriction to a subset of agents, in the given order.
    pub fn restrict(&self, agents: &[usize]) -> StrictProfile {
        StrictProfile {
            m: self.m,
            lists: agents.iter().map(|&j| self.lists[j].clone()).collect(),
            pos: agents.iter().map(|&j| self.pos[j].clone()).collect(),
        }
    }
}

pub(crate) fn positions_of(m: usize, list: &[usize]) -> Option<Vec<usize>> {
    if list.len() != m {
        return None;
    }
    let mut pos = vec![0; m];
    for (r, &o) in list.iter().enumerate() {
        if o >= m || pos[o] != 0 {
            return None;
        }
        pos[o] = r + 1;
    }
    Some(pos)
}

impl Ranking for StrictProfile {
    fn n_agents(&self) -> usize {
        self.lists.len()
    }

    fn n_outcomes(&self) -> usize {
        self.m
    }

    fn n_positions(&self) -> usize {
        self.m
    }

    fn position(&self, agent: usize, outcome: usize) -> usize {
        self.pos[agent][outcome]
    }
}

/// Per-agent ordered partitions of the outcomes into indifference classes,
/// each class with one designated representative outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndiffProfile {
    n_outcomes: usize,
    classes: Vec<Vec<Vec<usize>>>,
    representatives: Vec<Vec<usize>>,
    class_of: Vec<Vec<usize>>,
}

impl IndiffProfile {
    /// Representatives default to the smallest outcome of every class.
    pub fn new(n_outcomes: usize, classes: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let reps = classes
            .iter()
            .map(|cls| cls.iter().map(|c| c.iter().copied().min().unwrap_or(0)).collect())
            .collect();
        Self::with_representatives(n_outcomes, classes, reps)
    }

    pub fn with_representatives(
        n_outcomes: usize,
        classes: Vec<Vec<Vec<usize>>>,
        representatives: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if representatives.len() != classes.len() {
            return Err(Error::domain("one representative list per agent required"));
        }
        let mut class_of = Vec::with_capacity(classes.len());
        for (j, cls) in classes.iter().enumerate() {
            let mut idx = vec![0usize; n_outcomes];
            for (r, class) in cls.iter().enumerate() {
                if class.is_empty() {
                    return Err(Error::domain(format!("agent {j} has an empty class")));
                }
                for &o in class {
                    if o >= n_outcomes || idx[o] != 0 {
                        return Err(Error::domain(format!(
                            "classes of agent {j} do not partition 0..{n_outcomes}"
                        )));
                    }
                    idx[o] = r + 1;
                }
            }
            if idx.contains(&0) {
                return Err(Error::domain(format!("classes of agent {j} miss an outcome")));
            }
            let reps = &representatives[j];
            if reps.len() != cls.len() || reps.iter().enumerate().any(|(r, &o)| o >= n_outcomes || idx[o] != r + 1) {
                return Err(Error::domain(format!(
                    "representatives of agent {j} must lie in their classes"
                )));
            }
            class_of.push(idx);
        }
        Ok(IndiffProfile {
            n_outcomes,
            classes,
            representatives,
            class_of,
        })
    }

    /// Number of classes `m_j` of agent `agent`.
    pub fn n_classes(&self, agent: usize) -> usize {
        self.classes[agent].len()
    }

    pub fn classes(&self, agent: usize) -> &[Vec<usize>] {
        &self.classes[agent]
    }

    /// Representative outcome of class `r` (1-based) of `agent`.
    pub fn representative(&self, agent: usize, r: usize) -> usize {
        self.representatives[agent][r - 1]
    }
}

impl Ranking for IndiffProfile {
    fn n_agents(&self) -> usize {
        self.classes.len()
    }

    fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    fn n_positions(&self) -> usize {
        self.classes.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn position(&self, agent: usize, outcome: usize) -> usize {
        self.class_of[agent][outcome]
    }
}

/// Partial assignment of agents to items (or jobs to machines). Used for
/// matchings, matroid allocations and schedules alike.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<Option<usize>>);

impl Assignment {
    pub fn empty(n_agents: usize) -> Self {
        Assignment(vec![None; n_agents])
    }

    pub fn n_agents(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, agent: usize) -> Option<usize> {
        self.0[agent]
    }

    pub fn set(&mut self, agent: usize, item: Option<usize>) {
        self.0[agent] = item;
    }

    pub fn assigned_count(&self) -> usize {
        self.0.iter().filter(|a| a.is_some()).count()
    }

    /// `(agent, item)` pairs in agent order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().enumerate().filter_map(|(j, a)| a.map(|i| (j, i)))
    }

    /// Agents assigned to `item`, ascending.
    pub fn holders(&self, item: usize) -> Vec<usize> {
        self.pairs().filter(|&(_, i)| i == item).map(|(j, _)| j).collect()
    }

    /// True when no item is held by two agents.
    pub fn is_matching(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.pairs().all(|(_, i)| seen.insert(i))
    }

    /// Union of two assignments; agents assigned in both must agree.
    pub fn merge(&self, other: &Assignment) -> Result<Assignment> {
        if self.n_agents() != other.n_agents() {
            return Err(Error::domain("assignment sizes differ"));
        }
        let mut out = self.clone();
        for (j, i) in other.pairs() {
            match out.0[j] {
                Some(prev) if prev != i => {
                    return Err(Error::domain(format!("agent {j} assigned to {prev} and {i}")))
                }
                _ => out.0[j] = Some(i),
            }
        }
        Ok(out)
    }
}

impl Outcome for Assignment {
    fn received(&self, agent: usize) -> Option<usize> {
        self.0[agent]
    }

    fn singleton(n_agents: usize, agent: usize, item: usize) -> Self {
        let mut a = Assignment::empty(n_agents);
        a.0[agent] = Some(item);
        a
    }
}

/// A probability distribution over outcomes with exact rational weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lottery<O: Ord> {
    probs: BTreeMap<O, Rational>,
}

impl<O: Ord + Clone> Lottery<O> {
    pub fn point(o: O) -> Self {
        let mut probs = BTreeMap::new();
        probs.insert(o, Rational::one());
        Lottery { probs }
    }

    /// Builds a lottery from weighted outcomes; repeated outcomes are merged
    /// and zero weights dropped. Weights must be non-negative and sum to 1.
    pub fn new(entries: impl IntoIterator<Item = (O, Rational)>) -> Result<Self> {
        let mut probs: BTreeMap<O, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (o, w) in entries {
            if w.is_negative() {
                return Err(Error::domain("negative lottery weight"));
            }
            if w.is_zero() {
                continue;
            }
            total += &w;
            *probs.entry(o).or_insert_with(Rational::zero) += w;
        }
        if !total.is_one() {
            return Err(Error::domain(format!(
                "lottery weights sum to {}, not 1",
                rational::to_text(&total)
            )));
        }
        Ok(Lottery { probs })
    }

    /// Convex combination of lotteries.
    pub fn mix(parts: impl IntoIterator<Item = (Rational, Lottery<O>)>) -> Result<Self> {
        let mut entries = Vec::new();
        for (w, l) in parts {
            for (o, p) in l.probs {
                entries.push((o, &w * p));
            }
        }
        Lottery::new(entries)
    }

    pub fn prob(&self, o: &O) -> Rational {
        self.probs.get(o).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&O, &Rational)> {
        self.probs.iter()
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    /// Image lottery under `f` (weights of outcomes with equal images add up).
    pub fn map<P: Ord + Clone>(&self, f: impl Fn(&O) -> P) -> Lottery<P> {
        let mut probs: BTreeMap<P, Rational> = BTreeMap::new();
        for (o, p) in &self.probs {
            *probs.entry(f(o)).or_insert_with(Rational::zero) += p;
        }
        Lottery { probs }
    }

    /// `E[g(o)]` for a rational-valued statistic.
    pub fn expect(&self, g: impl Fn(&O) -> Rational) -> Rational {
        self.probs.iter().map(|(o, p)| p * g(o)).sum()
    }
}

/// `counts[i-1]` = number of agents holding the outcome in their top `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankHistogram {
    pub counts: Vec<usize>,
}

impl RankHistogram {
    /// Histogram of length `len` from per-agent positions (positions beyond
    /// `len`, e.g. the null item, contribute nothing).
    pub fn from_positions(positions: impl IntoIterator<Item = usize>, len: usize) -> Self {
        let mut at = vec![0usize; len + 1];
        for p in positions {
            if (1..=len).contains(&p) {
                at[p] += 1;
            }
        }
        let mut counts = Vec::with_capacity(len);
        let mut acc = 0;
        for c in at.iter().skip(1) {
            acc += c;
            counts.push(acc);
        }
        RankHistogram { counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `rank_i` for 1-based `i`.
    pub fn rank(&self, i: usize) -> usize {
        self.counts[i - 1]
    }

    pub fn as_rationals(&self) -> Vec<Rational> {
        self.counts.iter().map(|&c| from_usize(c)).collect()
    }

    /// Coordinate-wise `self >= other`.
    pub fn dominates(&self, other: &RankHistogram) -> bool {
        self.counts.len() == other.counts.len()
            && self.counts.iter().zip(&other.counts).all(|(a, b)| a >= b)
    }
}

/// Rank-approximation factor, `1 <= α <= ∞`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Finite(Rational),
    Infinite,
}

impl Factor {
    pub fn one() -> Self {
        Factor::Finite(Rational::one())
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Factor::Finite(r) => Some(r),
            Factor::Infinite => None,
        }
    }

    /// `α <= bound`.
    pub fn at_most(&self, bound: &Rational) -> bool {
        matches!(self, Factor::Finite(r) if r <= bound)
    }

    /// `1/α`, the fraction convention (0 for an infinite factor).
    pub fn fraction(&self) -> Rational {
        match self {
            Factor::Finite(r) => r.recip(),
            Factor::Infinite => Rational::zero(),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Finite(r) => write!(f, "{}", rational::to_text(r)),
            Factor::Infinite => write!(f, "inf"),
        }
    }
}

/// Position scores shared by all agents (a consistent homogeneous utility
/// profile, or equivalently a positional scoring rule).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoringVector {
    scores: Vec<Rational>,
}

impl ScoringVector {
    pub fn new(scores: Vec<Rational>) -> Result<Self> {
        if scores.iter().any(Signed::is_negative) {
            return Err(Error::domain("scores must be non-negative"));
        }
        if scores.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::domain("scores must be non-increasing"));
        }
        Ok(ScoringVector { scores })
    }

    /// Borda: position `k` scores `m - k`.
    pub fn borda(m: usize) -> Self {
        ScoringVector {
            scores: (1..=m).map(|k| from_usize(m - k)).collect(),
        }
    }

    /// Plurality: 1 for the top position, 0 elsewhere.
    pub fn plurality(m: usize) -> Self {
        ScoringVector {
            scores: (0..m).map(|k| if k == 0 { Rational::one() } else { Rational::zero() }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `U(position)`; positions past the end (the null item) score 0.
    pub fn score(&self, position: usize) -> Rational {
        self.scores
            .get(position.wrapping_sub(1))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn scores(&self) -> &[Rational] {
        &self.scores
    }
}

fn check_outcome(profile: &impl Ranking, outcome: usize) -> Result<()> {
    if outcome >= profile.n_outcomes() {
        return Err(Error::domain(format!("unknown outcome {outcome}")));
    }
    Ok(())
}

/// `rank_i(o) = |{j : pos_j(o) <= i}|`.
pub fn rank_of(profile: &impl Ranking, outcome: usize, i: usize) -> Result<usize> {
    check_outcome(profile, outcome)?;
    if i == 0 || i > profile.n_positions() {
        return Err(Error::domain(format!("position {i} outside 1..={}", profile.n_positions())));
    }
    Ok((0..profile.n_agents())
        .filter(|&j| profile.position(j, outcome) <= i)
        .count())
}

pub fn histogram(profile: &impl Ranking, outcome: usize) -> Result<RankHistogram> {
    check_outcome(profile, outcome)?;
    Ok(RankHistogram::from_positions(
        (0..profile.n_agents()).map(|j| profile.position(j, outcome)),
        profile.n_positions(),
    ))
}

/// Histogram of a structured outcome (matching, allocation, schedule).
pub fn histogram_of<O: Outcome>(profile: &StrictProfile, o: &O) -> RankHistogram {
    RankHistogram::from_positions(
        (0..profile.n_agents()).map(|j| profile.position_of(j, o)),
        profile.n_items(),
    )
}

/// `maxrank_i` over every outcome of the universe (general setting).
pub fn maxranks_by_enumeration(profile: &impl Ranking) -> Vec<usize> {
    let mut best = vec![0usize; profile.n_positions()];
    for o in 0..profile.n_outcomes() {
        let h = histogram(profile, o).expect("outcome in range");
        for (b, c) in best.iter_mut().zip(&h.counts) {
            *b = (*b).max(*c);
        }
    }
    best
}

/// Exact expected histogram of a lottery.
pub fn expected_counts<O: Ord + Clone>(
    lottery: &Lottery<O>,
    hist: impl Fn(&O) -> RankHistogram,
) -> Vec<Rational> {
    let mut acc: Vec<Rational> = Vec::new();
    for (o, p) in lottery.iter() {
        let h = hist(o);
        if acc.is_empty() {
            acc = vec![Rational::zero(); h.len()];
        }
        for (a, &c) in acc.iter_mut().zip(&h.counts) {
            *a += p * from_usize(c);
        }
    }
    acc
}

/// `α = max_i maxranks[i] / E[counts[i]]` over positions with a positive
/// maxrank, and at least 1. Positions with `maxrank_i = 0` count as met.
pub fn rank_approx_factor(expected: &[Rational], maxranks: &[usize]) -> Result<Factor> {
    if expected.len() != maxranks.len() {
        return Err(Error::domain(format!(
            "histogram length {} does not match {} maxranks",
            expected.len(),
            maxranks.len()
        )));
    }
    let mut alpha = Rational::one();
    for (e, &mr) in expected.iter().zip(maxranks) {
        if mr == 0 {
            continue;
        }
        if e.is_zero() {
            return Ok(Factor::Infinite);
        }
        let ratio = from_usize(mr) / e;
        if ratio > alpha {
            alpha = ratio;
        }
    }
    Ok(Factor::Finite(alpha))
}

pub fn histogram_factor(h: &RankHistogram, maxranks: &[usize]) -> Result<Factor> {
    rank_approx_factor(&h.as_rationals(), maxranks)
}

/// `Σ_j U(pos_j(o))`.
pub fn scoring_welfare<O: Outcome>(profile: &StrictProfile, o: &O, sv: &ScoringVector) -> Result<Rational> {
    if sv.len() != profile.n_items() {
        return Err(Error::domain("scoring vector length must equal the number of items"));
    }
    Ok((0..profile.n_agents())
        .map(|j| sv.score(profile.position_of(j, o)))
        .sum())
}

/// Welfare through the histogram: `Σ_i (U(i) - U(i+1)) · rank_i`, with `U(m+1) = 0`.
pub fn welfare_from_histogram(counts: &[Rational], sv: &ScoringVector) -> Result<Rational> {
    if counts.len() != sv.len() {
        return Err(Error::domain("histogram and scoring vector lengths differ"));
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(k, c)| (sv.score(k + 1) - sv.score(k + 2)) * c)
        .sum())
}

/// Checks the simultaneous scoring-rule guarantee: the expected welfare of a
/// mechanism output with expected histogram `expected` is at least `1/α` of
/// `best_welfare`, the welfare of the best feasible outcome, where `α` is the
/// output's rank-approximation factor against `maxranks`.
pub fn check_homutil(
    expected: &[Rational],
    maxranks: &[usize],
    sv: &ScoringVector,
    best_welfare: &Rational,
) -> Result<bool> {
    let alpha = rank_approx_factor(expected, maxranks)?;
    let welfare = welfare_from_histogram(expected, sv)?;
    Ok(match alpha {
        Factor::Infinite => true,
        Factor::Finite(a) => welfare * a >= *best_welfare,
    })
}

/// CSV dump `outcome,i,rank_i` for the given outcomes.
pub fn histogram_csv(profile: &impl Ranking, outcomes: &[usize]) -> Result<String> {
    let mut out = String::from("outcome,i,rank_i\n");
    for &o in outcomes {
        let h = histogram(profile, o)?;
        for (i, c) in h.counts.iter().enumerate() {
            out.push_str(&format!("{o},{},{c}\n", i + 1));
        }
    }
    Ok(out)
}
