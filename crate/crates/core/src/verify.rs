//! Dominance relations between lotteries, exhaustive truthfulness and
//! pseudomonotonicity checkers, and the ε-lottery wrapper that turns a
//! pseudomonotone social choice function into a lex-truthful mechanism.
//!
//! Lotteries are compared from one agent's point of view through the
//! aggregated vector `v[r-1] = Pr[agent's outcome lies in its r-th class]`.
//! For strict lists the classes are single items (or outcomes), with a final
//! slot for the null item.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefs::{positions_of, Lottery, Outcome, StrictProfile};
use crate::rational::{self, from_usize, Rational};

/// Largest number of profiles an exhaustive check will enumerate.
pub const PROFILE_LIMIT: u128 = 2_000_000;

/// One agent's report, as seen by the verifiers.
pub trait Report: Clone + fmt::Debug + PartialEq + Serialize + Send + Sync {
    /// Number of real classes (`m` for strict lists, `m_j` with indifferences).
    fn n_real(&self) -> usize;
    /// 1-based class of an item; the null item sits in slot `n_real() + 1`.
    fn slot(&self, item: Option<usize>) -> usize;
    /// Representative item of class `r`.
    fn representative(&self, r: usize) -> usize;
    /// Size of the item/outcome universe.
    fn n_atoms(&self) -> usize;
}

/// A strict preference list.
impl Report for Vec<usize> {
    fn n_real(&self) -> usize {
        self.len()
    }

    fn slot(&self, item: Option<usize>) -> usize {
        item.and_then(|i| self.iter().position(|&x| x == i))
            .map_or(self.len() + 1, |p| p + 1)
    }

    fn representative(&self, r: usize) -> usize {
        self[r - 1]
    }

    fn n_atoms(&self) -> usize {
        self.len()
    }
}

/// Ordered indifference classes with one representative per class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassReport {
    pub classes: Vec<Vec<usize>>,
    pub representatives: Vec<usize>,
}

impl ClassReport {
    /// Representatives default to each class's smallest member.
    pub fn new(classes: Vec<Vec<usize>>) -> Self {
        let representatives = classes.iter().map(|c| c.iter().copied().min().unwrap_or(0)).collect();
        ClassReport {
            classes,
            representatives,
        }
    }
}

impl Report for ClassReport {
    fn n_real(&self) -> usize {
        self.classes.len()
    }

    fn slot(&self, item: Option<usize>) -> usize {
        item.and_then(|i| self.classes.iter().position(|c| c.contains(&i)))
            .map_or(self.classes.len() + 1, |p| p + 1)
    }

    fn representative(&self, r: usize) -> usize {
        self.representatives[r - 1]
    }

    fn n_atoms(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }
}

/// Builds a strict profile from reported lists over `0..m`.
pub fn profile_of(m: usize, reports: &[Vec<usize>]) -> Result<StrictProfile> {
    StrictProfile::new(m, reports.to_vec())
}

/// Aggregated class probabilities of `lottery` for `agent` reporting `report`.
pub fn aggregate<R: Report, O: Outcome>(lottery: &Lottery<O>, report: &R, agent: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); report.n_real() + 1];
    for (o, p) in lottery.iter() {
        v[report.slot(o.received(agent)) - 1] += p;
    }
    v
}

fn same_len(p: &[Rational], q: &[Rational]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::domain(format!("vectors of length {} and {} are not comparable", p.len(), q.len())));
    }
    Ok(())
}

/// `p ≠ q` and `p` is larger at the first coordinate where they differ.
pub fn lex_dominates(p: &[Rational], q: &[Rational]) -> Result<bool> {
    same_len(p, q)?;
    Ok(p.iter().zip(q).find(|(a, b)| a != b).is_some_and(|(a, b)| a > b))
}

/// Every prefix sum of `p` is at least the matching prefix sum of `q` (weak dominance).
pub fn stoch_dominates(p: &[Rational], q: &[Rational]) -> Result<bool> {
    same_len(p, q)?;
    let mut sp = Rational::zero();
    let mut sq = Rational::zero();
    for (a, b) in p.iter().zip(q) {
        sp += a;
        sq += b;
        if sp < sq {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Strong,
    Lex,
    Weak,
    Pseudo,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Strong => "strong",
            Property::Lex => "lex",
            Property::Weak => "weak",
            Property::Pseudo => "pseudo",
        })
    }
}

/// A deviation witnessing a failed property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationReport<R> {
    pub property: Property,
    pub agent: usize,
    /// The full truthful profile.
    pub profile: Vec<R>,
    pub misreport: R,
    /// Aggregated vector (or outcome slot) under the truthful report.
    pub truthful: Vec<String>,
    /// Same under the misreport, both measured with the truthful report.
    pub deviating: Vec<String>,
}

/// Truthfulness classes checked by [`classify_truthfulness`]. Universal
/// truthfulness is never certified, so the best answer is `Strong`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthClass {
    None,
    Weak,
    Lex,
    Strong,
}

impl fmt::Display for TruthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthClass::None => "none",
            TruthClass::Weak => "weak",
            TruthClass::Lex => "lex",
            TruthClass::Strong => "strong",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruthReport<R> {
    pub class: TruthClass,
    pub strong: Option<ViolationReport<R>>,
    pub lex: Option<ViolationReport<R>>,
    pub weak: Option<ViolationReport<R>>,
}

impl<R> TruthReport<R> {
    pub fn violation(&self, property: Property) -> Option<&ViolationReport<R>> {
        match property {
            Property::Strong => self.strong.as_ref(),
            Property::Lex => self.lex.as_ref(),
            Property::Weak => self.weak.as_ref(),
            Property::Pseudo => None,
        }
    }
}

/// A finite product domain `Σ = Σ_1 × … × Σ_n` of admissible reports.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain<R> {
    pub per_agent: Vec<Vec<R>>,
}

impl Domain<Vec<usize>> {
    /// Every agent may report any strict list over `0..m`.
    pub fn full_strict(n: usize, m: usize) -> Self {
        let lists = all_permutations(m);
        Domain {
            per_agent: vec![lists; n],
        }
    }
}

/// All permutations of `0..m` in lexicographic order.
pub fn all_permutations(m: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..m).permutations(m).collect()
}

impl<R: Report> Domain<R> {
    pub fn new(per_agent: Vec<Vec<R>>) -> Result<Self> {
        if per_agent.iter().any(Vec::is_empty) {
            return Err(Error::domain("every agent needs at least one admissible report"));
        }
        Ok(Domain { per_agent })
    }

    pub fn n_agents(&self) -> usize {
        self.per_agent.len()
    }

    /// Number of profiles (saturating).
    pub fn size(&self) -> u128 {
        self.per_agent
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    fn check_size(&self) -> Result<usize> {
        let size = self.size();
        if size > PROFILE_LIMIT {
            return Err(Error::Resource {
                what: "domain profiles",
                needed: size,
                limit: PROFILE_LIMIT,
            });
        }
        Ok(size as usize)
    }

    fn decode(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n_agents()];
        for j in (0..self.n_agents()).rev() {
            let k = self.per_agent[j].len();
            idx[j] = flat % k;
            flat /= k;
        }
        idx
    }

    fn encode(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.per_agent)
            .fold(0, |acc, (&i, s)| acc * s.len() + i)
    }

    fn reports(&self, idx: &[usize]) -> Vec<R> {
        idx.iter().enumerate().map(|(j, &i)| self.per_agent[j][i].clone()).collect()
    }

    /// Evaluates `f` on every profile (in parallel), indexed by flat profile index.
    fn evaluate_all<T: Send>(&self, f: &(impl Fn(&[R]) -> Result<T> + Sync)) -> Result<Vec<T>> {
        let size = self.check_size()?;
        (0..size)
            .into_par_iter()
            .map(|flat| f(&self.reports(&self.decode(flat))))
            .collect()
    }

    /// Calls `visit(flat, idx, agent, alt_flat, alt)` for every unilateral deviation,
    /// stopping early when it returns `false`.
    fn for_each_deviation(&self, mut visit: impl FnMut(usize, &[usize], usize, usize, usize) -> bool) {
        let size = self.size() as usize;
        for flat in 0..size {
            let idx = self.decode(flat);
            for j in 0..self.n_agents() {
                for alt in 0..self.per_agent[j].len() {
                    if alt == idx[j] {
                        continue;
                    }
                    let mut dev = idx.clone();
                    dev[j] = alt;
                    if !visit(flat, &idx, j, self.encode(&dev), alt) {
                        return;
                    }
                }
            }
        }
    }
}

fn texts(v: &[Rational]) -> Vec<String> {
    v.iter().map(rational::to_text).collect()
}

/// Does the deviation from truthful vector `p` to `q` break `property`?
pub fn deviation_violates(property: Property, p: &[Rational], q: &[Rational]) -> Result<bool> {
    Ok(match property {
        Property::Strong => !stoch_dominates(p, q)?,
        Property::Lex => lex_dominates(q, p)?,
        Property::Weak => q != p && stoch_dominates(q, p)?,
        Property::Pseudo => return Err(Error::domain("pseudomonotonicity is a property of SCFs")),
    })
}

/// Exhaustively classifies a lottery-valued mechanism over `domain`.
///
/// Strong: the truthful lottery stochastically dominates every deviation.
/// Lex: no deviation lex-dominates the truthful lottery. Weak: no deviation
/// yields a different lottery that stochastically dominates the truthful one.
pub fn classify_truthfulness<R, O, M>(mech: &M, domain: &Domain<R>) -> Result<TruthReport<R>>
where
    R: Report,
    O: Outcome + Send,
    M: Fn(&[R]) -> Result<Lottery<O>> + Sync,
{
    let lotteries = domain.evaluate_all(mech)?;
    let mut report = TruthReport {
        class: TruthClass::Strong,
        strong: None,
        lex: None,
        weak: None,
    };
    let mut err = None;
    domain.for_each_deviation(|flat, idx, j, alt_flat, alt| {
        let truth = &domain.per_agent[j][idx[j]];
        let p = aggregate(&lotteries[flat], truth, j);
        let q = aggregate(&lotteries[alt_flat], truth, j);
        for property in [Property::Strong, Property::Lex, Property::Weak] {
            let slot = match property {
                Property::Strong => &mut report.strong,
                Property::Lex => &mut report.lex,
                _ => &mut report.weak,
            };
            if slot.is_some() {
                continue;
            }
            match deviation_violates(property, &p, &q) {
                Ok(true) => {
                    *slot = Some(ViolationReport {
                        property,
                        agent: j,
                        profile: domain.reports(idx),
                        misreport: domain.per_agent[j][alt].clone(),
                        truthful: texts(&p),
                        deviating: texts(&q),
                    })
                }
                Ok(false) => {}
                Err(e) => {
                    err = Some(e);
                    return false;
                }
            }
        }
        report.weak.is_none()
    });
    if let Some(e) = err {
        return Err(e);
    }
    report.class = if report.weak.is_some() {
        TruthClass::None
    } else if report.lex.is_some() {
        TruthClass::Weak
    } else if report.strong.is_some() {
        TruthClass::Lex
    } else {
        TruthClass::Strong
    };
    Ok(report)
}

/// Re-runs a recorded deviation and reports whether the violation reproduces.
pub fn replay<R, O, M>(mech: &M, v: &ViolationReport<R>) -> Result<bool>
where
    R: Report,
    O: Outcome,
    M: Fn(&[R]) -> Result<Lottery<O>>,
{
    let truth = &v.profile[v.agent];
    let mut dev = v.profile.clone();
    dev[v.agent] = v.misreport.clone();
    let p = aggregate(&mech(&v.profile)?, truth, v.agent);
    let q = aggregate(&mech(&dev)?, truth, v.agent);
    deviation_violates(v.property, &p, &q)
}

/// Checks pseudomonotonicity of a deterministic SCF over `domain`: for every
/// deviation either the truthful outcome is weakly preferred, or some item
/// preferred to the deviation outcome was demoted by the misreport.
/// Returns the first violation, or `None` when the property holds.
pub fn is_pseudomonotone<R, O, F>(f: &F, domain: &Domain<R>) -> Result<Option<ViolationReport<R>>>
where
    R: Report,
    O: Outcome + Send,
    F: Fn(&[R]) -> Result<O> + Sync,
{
    let outcomes = domain.evaluate_all(f)?;
    let mut found = None;
    domain.for_each_deviation(|flat, idx, j, alt_flat, alt| {
        let truth = &domain.per_agent[j][idx[j]];
        let lie = &domain.per_agent[j][alt];
        let s = truth.slot(outcomes[flat].received(j));
        let s_dev = truth.slot(outcomes[alt_flat].received(j));
        if s <= s_dev {
            return true;
        }
        let demoted = (0..truth.n_atoms()).any(|x| {
            let sx = truth.slot(Some(x));
            sx < s_dev && sx < lie.slot(Some(x))
        });
        if demoted {
            return true;
        }
        found = Some(ViolationReport {
            property: Property::Pseudo,
            agent: j,
            profile: domain.reports(idx),
            misreport: lie.clone(),
            truthful: vec![s.to_string()],
            deviating: vec![s_dev.to_string()],
        });
        false
    });
    Ok(found)
}

/// Strictly decreasing positive parts `ε_1 > … > ε_m` summing to `ε ∈ (0,1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonSchedule {
    eps: Rational,
    parts: Vec<Rational>,
}

impl EpsilonSchedule {
    pub fn new(parts: Vec<Rational>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|p| !p.is_positive()) {
            return Err(Error::domain("schedule parts must be positive"));
        }
        if parts.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::domain("schedule parts must be strictly decreasing"));
        }
        let eps: Rational = parts.iter().sum();
        if eps >= Rational::one() {
            return Err(Error::domain("schedule total must be below 1"));
        }
        Ok(EpsilonSchedule { eps, parts })
    }

    /// `ε_i = ε·(m+1-i) / (m(m+1)/2)`.
    pub fn linear(eps: Rational, m: usize) -> Result<Self> {
        if !eps.is_positive() || eps >= Rational::one() {
            return Err(Error::domain("ε must lie in (0,1)"));
        }
        let total = from_usize(m * (m + 1) / 2);
        EpsilonSchedule::new((1..=m).map(|i| &eps * from_usize(m + 1 - i) / &total).collect())
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn parts(&self) -> &[Rational] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// `(1-ε)·δ_{f(≻)} + Σ_a Σ_r (ε^a_r / n)·δ_{rep(a, r)}`, where `rep(a, r)`
/// gives agent `a` its `r`-th class representative and nobody else anything.
fn lt_mixture<R: Report, O: Outcome>(
    reports: &[R],
    base: Lottery<O>,
    sched: &impl Fn(&R) -> Result<EpsilonSchedule>,
) -> Result<Lottery<O>> {
    let n = reports.len();
    let mut entries: Vec<(O, Rational)> = Vec::new();
    let mut eps = None;
    for (a, rep) in reports.iter().enumerate() {
        let s = sched(rep)?;
        if s.len() != rep.n_real() {
            return Err(Error::domain(format!(
                "schedule has {} parts, agent {a} reports {} classes",
                s.len(),
                rep.n_real()
            )));
        }
        match &eps {
            None => eps = Some(s.eps().clone()),
            Some(e) if e != s.eps() => return Err(Error::domain("all agents must share the same ε")),
            _ => {}
        }
        for (r, part) in s.parts().iter().enumerate() {
            entries.push((O::singleton(n, a, rep.representative(r + 1)), part / from_usize(n)));
        }
    }
    let eps = eps.unwrap_or_else(Rational::zero);
    let keep = Rational::one() - &eps;
    for (o, p) in base.iter() {
        entries.push((o.clone(), &keep * p));
    }
    Lottery::new(entries)
}

/// The lex-truthful ε-implementation of a (pseudomonotone) SCF with a fixed schedule.
pub fn lt_wrapper<R, O, F>(f: F, sched: EpsilonSchedule) -> impl Fn(&[R]) -> Result<Lottery<O>> + Sync
where
    R: Report,
    O: Outcome,
    F: Fn(&[R]) -> Result<O> + Sync,
{
    move |reports: &[R]| lt_mixture(reports, Lottery::point(f(reports)?), &|_: &R| Ok(sched.clone()))
}

/// Same with the linear schedule sized per agent (`m_a` parts).
pub fn lt_wrapper_linear<R, O, F>(f: F, eps: Rational) -> impl Fn(&[R]) -> Result<Lottery<O>> + Sync
where
    R: Report,
    O: Outcome,
    F: Fn(&[R]) -> Result<O> + Sync,
{
    move |reports: &[R]| {
        lt_mixture(reports, Lottery::point(f(reports)?), &|r: &R| {
            EpsilonSchedule::linear(eps.clone(), r.n_real())
        })
    }
}

/// Mixes a randomized base mechanism with the ε-lotteries (same construction,
/// base lottery in place of a point mass).
pub fn lt_wrapper_lottery<R, O, M>(mech: M, eps: Rational) -> impl Fn(&[R]) -> Result<Lottery<O>> + Sync
where
    R: Report,
    O: Outcome,
    M: Fn(&[R]) -> Result<Lottery<O>> + Sync,
{
    move |reports: &[R]| {
        lt_mixture(reports, mech(reports)?, &|r: &R| EpsilonSchedule::linear(eps.clone(), r.n_real()))
    }
}

/// `g: O^n -> O` is a top-choice SCF when `g(o, o_{-j}) = o'` implies
/// `g(o', o_{-j}) = o'` for all `j`, `o_{-j}` and `o`.
pub fn is_top_choice_scf(g: impl Fn(&[usize]) -> usize, n: usize, m: usize) -> bool {
    let total = (m as u128).pow(n as u32);
    let mut tops = vec![0usize; n];
    for flat in 0..total {
        let mut rest = flat;
        for t in tops.iter_mut().rev() {
            *t = (rest % m as u128) as usize;
            rest /= m as u128;
        }
        let o = g(&tops);
        for j in 0..n {
            let mut sub = tops.clone();
            sub[j] = o;
            if g(&sub) != o {
                return false;
            }
        }
    }
    true
}

/// The SCF `≻ ↦ g(tops of ≻)`.
pub fn top_choice_scf(g: impl Fn(&[usize]) -> usize + Sync) -> impl Fn(&[Vec<usize>]) -> Result<usize> + Sync {
    move |reports: &[Vec<usize>]| {
        let tops: Vec<usize> = reports
            .iter()
            .map(|l| l.first().copied().ok_or_else(|| Error::domain("empty list")))
            .collect::<Result<_>>()?;
        Ok(g(&tops))
    }
}

/// One agent's top two outcomes, each with probability 1/2 (strongly but
/// not universally truthful).
pub fn unilateral_top_two(agent: usize) -> impl Fn(&[Vec<usize>]) -> Result<Lottery<usize>> + Sync {
    move |reports: &[Vec<usize>]| {
        let list = reports
            .get(agent)
            .ok_or_else(|| Error::domain(format!("no agent {agent}")))?;
        if list.len() < 2 {
            return Err(Error::domain("needs at least two outcomes"));
        }
        Lottery::new(vec![(list[0], rational::q(1, 2)), (list[1], rational::q(1, 2))])
    }
}

/// One agent, four outcomes: on `(0,1,2,3)` return 0 w.p. 1/2 and each other
/// outcome w.p. 1/6; on any other list return one of its top three uniformly.
/// Weakly but not lex-truthful.
pub fn weak_not_lex_mechanism(reports: &[Vec<usize>]) -> Result<Lottery<usize>> {
    let [list] = reports else {
        return Err(Error::domain("single-agent mechanism"));
    };
    if positions_of(4, list).is_none() {
        return Err(Error::domain("needs a strict list over 4 outcomes"));
    }
    if list == &[0, 1, 2, 3] {
        Lottery::new(vec![
            (0, rational::q(1, 2)),
            (1, rational::q(1, 6)),
            (2, rational::q(1, 6)),
            (3, rational::q(1, 6)),
        ])
    } else {
        Lottery::new(list[..3].iter().map(|&o| (o, rational::q(1, 3))))
    }
}

/// `g(a) = a, g(b) = g(c) = c` on three outcomes for one agent.
pub fn a_or_c(tops: &[usize]) -> usize {
    if tops[0] == 0 {
        0
    } else {
        2
    }
}
