//! Matroid markets: each item `i` carries a matroid over the agents, and the
//! set of agents receiving `i` must be independent in it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefs::{Assignment, Ranking, StrictProfile};

pub type Allocation = Assignment;

/// Independence oracle over the ground set `0..n`.
pub trait Matroid {
    fn is_independent(&self, set: &[usize]) -> bool;

    /// Rank by greedy closure.
    fn rank(&self, set: &[usize]) -> usize {
        let mut basis = Vec::new();
        for &e in set {
            basis.push(e);
            if !self.is_independent(&basis) {
                basis.pop();
            }
        }
        basis.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatroidSpec {
    /// Sets of size at most `k`.
    Uniform { k: usize },
    /// At most `caps[b]` elements from `blocks[b]`; elements in no block are free.
    Partition { caps: Vec<usize>, blocks: Vec<Vec<usize>> },
    /// The listed family of independent sets.
    Explicit { independent: Vec<Vec<usize>> },
}

impl Matroid for MatroidSpec {
    fn is_independent(&self, set: &[usize]) -> bool {
        match self {
            MatroidSpec::Uniform { k } => set.len() <= *k,
            MatroidSpec::Partition { caps, blocks } => blocks
                .iter()
                .zip(caps)
                .all(|(b, &c)| set.iter().filter(|e| b.contains(e)).count() <= c),
            MatroidSpec::Explicit { independent } => {
                let mut s = set.to_vec();
                s.sort_unstable();
                independent.iter().any(|t| {
                    let mut t = t.clone();
                    t.sort_unstable();
                    t == s
                })
            }
        }
    }
}

impl MatroidSpec {
    /// Structural validation over the ground set `0..n`; explicit families are
    /// checked against the matroid axioms exhaustively.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            MatroidSpec::Uniform { .. } => Ok(()),
            MatroidSpec::Partition { caps, blocks } => {
                if caps.len() != blocks.len() {
                    return Err(Error::domain("partition matroid needs one capacity per block"));
                }
                let mut seen = vec![false; n];
                for &e in blocks.iter().flatten() {
                    if e >= n || seen[e] {
                        return Err(Error::domain("partition blocks must be disjoint subsets of the agents"));
                    }
                    seen[e] = true;
                }
                Ok(())
            }
            MatroidSpec::Explicit { independent } => {
                if independent.iter().flatten().any(|&e| e >= n) {
                    return Err(Error::domain("explicit matroid mentions an unknown agent"));
                }
                check_axioms(self, n)
            }
        }
    }
}

/// Exhaustive axiom check on ground sets of at most 12 elements: the empty set
/// is independent, independence is downward closed, and the exchange property holds.
pub fn check_axioms(m: &impl Matroid, n: usize) -> Result<()> {
    if n > 12 {
        return Err(Error::Resource {
            what: "matroid axiom check ground set",
            needed: n as u128,
            limit: 12,
        });
    }
    let members = |mask: u32| -> Vec<usize> { (0..n).filter(|&e| mask >> e & 1 == 1).collect() };
    let indep: Vec<bool> = (0..1u32 << n).map(|mask| m.is_independent(&members(mask))).collect();
    if !indep[0] {
        return Err(Error::domain("empty set is not independent"));
    }
    for mask in 0..1u32 << n {
        if !indep[mask as usize] {
            continue;
        }
        for e in 0..n {
            if mask >> e & 1 == 1 && !indep[(mask & !(1 << e)) as usize] {
                return Err(Error::domain(format!("independent set {:?} has a dependent subset", members(mask))));
            }
        }
    }
    for a in 0..1u32 << n {
        if !indep[a as usize] {
            continue;
        }
        for b in 0..1u32 << n {
            if !indep[b as usize] || b.count_ones() <= a.count_ones() {
                continue;
            }
            let diff = b & !a;
            if !(0..n).any(|e| diff >> e & 1 == 1 && indep[(a | 1 << e) as usize]) {
                return Err(Error::domain(format!(
                    "exchange fails between {:?} and {:?}",
                    members(a),
                    members(b)
                )));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatroidMarket {
    pub profile: StrictProfile,
    /// One matroid over the agents per item.
    pub matroids: Vec<MatroidSpec>,
}

impl MatroidMarket {
    pub fn new(profile: StrictProfile, matroids: Vec<MatroidSpec>) -> Result<Self> {
        if matroids.len() != profile.n_items() {
            return Err(Error::domain("one matroid per item required"));
        }
        for m in &matroids {
            m.validate(profile.n_agents())?;
        }
        Ok(MatroidMarket { profile, matroids })
    }

    pub fn n(&self) -> usize {
        self.profile.n_agents()
    }

    pub fn m(&self) -> usize {
        self.profile.n_items()
    }

    /// Every item's holders form an independent set.
    pub fn is_feasible(&self, a: &Allocation) -> bool {
        (0..self.m()).all(|i| self.matroids[i].is_independent(&a.holders(i)))
    }

    fn can_add(&self, a: &Allocation, agent: usize, item: usize) -> bool {
        let mut h = a.holders(item);
        h.push(agent);
        self.matroids[item].is_independent(&h)
    }
}

/// Staged allocation, returning the allocation after every stage `r = 1..=m`.
///
/// In stage `r` items are visited in ascending order, and each item admits
/// free agents ranking it in the top `r`, lowest index first, while its
/// holder set stays independent. The result is checked to be maximal and
/// within half of the optimum at every stage; a failure means the oracle
/// violates the matroid axioms.
pub fn matroid_max_match_stages(market: &MatroidMarket) -> Result<Vec<Allocation>> {
    let p = &market.profile;
    let mut a = Allocation::empty(market.n());
    let mut stages = Vec::with_capacity(market.m());
    for r in 1..=market.m() {
        for item in 0..market.m() {
            for j in 0..market.n() {
                if a.get(j).is_none() && p.position(j, item) <= r && market.can_add(&a, j, item) {
                    a.set(j, Some(item));
                }
            }
        }
        if !market.is_feasible(&a) {
            return Err(Error::domain(format!("stage {r}: allocation became dependent; oracle is not a matroid")));
        }
        for j in (0..market.n()).filter(|&j| a.get(j).is_none()) {
            if let Some(&i) = p.list(j)[..r].iter().find(|&&i| market.can_add(&a, j, i)) {
                return Err(Error::domain(format!(
                    "stage {r}: agent {j} can still join item {i}; oracle is not downward closed"
                )));
            }
        }
        let optimum = max_common_independent(market, r);
        let edges: Vec<(usize, usize)> = a.pairs().collect();
        if !check_matint(&edges, &optimum) {
            return Err(Error::structural(format!(
                "stage {r}: maximal set of size {} below half of optimum {}",
                edges.len(),
                optimum.len()
            )));
        }
        stages.push(a.clone());
    }
    Ok(stages)
}

pub fn matroid_max_match(market: &MatroidMarket) -> Result<Allocation> {
    Ok(matroid_max_match_stages(market)?
        .pop()
        .unwrap_or_else(|| Allocation::empty(market.n())))
}

/// A maximal common independent set has at least half the size of a maximum one.
pub fn check_matint(s: &[(usize, usize)], a: &[(usize, usize)]) -> bool {
    2 * s.len() >= a.len()
}

/// Largest common independent set of the item matroids (direct sum) and the
/// one-item-per-agent partition matroid on the top-`r` edges, by exchange-graph
/// augmenting paths. Returns `(agent, item)` edges.
pub fn max_common_independent(market: &MatroidMarket, r: usize) -> Vec<(usize, usize)> {
    let edges: Vec<(usize, usize)> = (0..market.n())
        .flat_map(|j| {
            let mut items = market.profile.list(j)[..r.min(market.m())].to_vec();
            items.sort_unstable();
            items.into_iter().map(move |i| (j, i))
        })
        .collect();
    let ne = edges.len();
    let mut in_set = vec![false; ne];

    // M1: direct sum of the item matroids.
    let indep1 = |set: &[bool]| -> bool {
        (0..market.m()).all(|i| {
            let holders: Vec<usize> = (0..ne).filter(|&e| set[e] && edges[e].1 == i).map(|e| edges[e].0).collect();
            market.matroids[i].is_independent(&holders)
        })
    };
    // M2: every agent on at most one edge.
    let indep2 = |set: &[bool]| -> bool {
        let mut seen = vec![false; market.n()];
        (0..ne).filter(|&e| set[e]).all(|e| !std::mem::replace(&mut seen[edges[e].0], true))
    };

    loop {
        let outside: Vec<usize> = (0..ne).filter(|&e| !in_set[e]).collect();
        let inside: Vec<usize> = (0..ne).filter(|&e| in_set[e]).collect();
        let with = |base: &[bool], add: usize, drop: Option<usize>| {
            let mut s = base.to_vec();
            s[add] = true;
            if let Some(d) = drop {
                s[d] = false;
            }
            s
        };
        let sources: Vec<usize> = outside.iter().copied().filter(|&z| indep1(&with(&in_set, z, None))).collect();
        let sinks: Vec<bool> = (0..ne).map(|z| !in_set[z] && indep2(&with(&in_set, z, None))).collect();
        let mut prev = vec![usize::MAX; ne];
        let mut visited = vec![false; ne];
        let mut queue = VecDeque::new();
        for &s in &sources {
            visited[s] = true;
            queue.push_back(s);
        }
        let mut end = None;
        while let Some(u) = queue.pop_front() {
            if sinks[u] {
                end = Some(u);
                break;
            }
            let next: Vec<usize> = if in_set[u] {
                // y -> z when I - y + z is independent in M1.
                outside.iter().copied().filter(|&z| indep1(&with(&in_set, z, Some(u)))).collect()
            } else {
                // z -> y when I - y + z is independent in M2.
                inside.iter().copied().filter(|&y| indep2(&with(&in_set, u, Some(y)))).collect()
            };
            for v in next {
                if !visited[v] {
                    visited[v] = true;
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let Some(mut cur) = end else { break };
        loop {
            in_set[cur] = !in_set[cur];
            if prev[cur] == usize::MAX {
                break;
            }
            cur = prev[cur];
        }
    }
    (0..ne).filter(|&e| in_set[e]).map(|e| edges[e]).collect()
}

pub fn maxrank_matroid(market: &MatroidMarket, r: usize) -> usize {
    max_common_independent(market, r).len()
}

pub fn maxranks_matroid(market: &MatroidMarket) -> Vec<usize> {
    (1..=market.m()).map(|r| maxrank_matroid(market, r)).collect()
}

/// Matching market as a matroid market with rank-1 uniform matroids.
pub fn unit_market(profile: StrictProfile) -> MatroidMarket {
    let m = profile.n_items();
    MatroidMarket {
        profile,
        matroids: vec![MatroidSpec::Uniform { k: 1 }; m],
    }
}
