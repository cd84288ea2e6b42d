//! One-sided matching markets: agents rank items, each agent receives at most
//! one item and each item goes to at most one agent.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prefs::{Assignment, Lottery, Ranking, StrictProfile};
use crate::rational::{from_usize, Rational};

pub type Matching = Assignment;

/// Largest `n` for which exact RSD enumerates all `n!` orders.
pub const RSD_EXACT_LIMIT: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingInstance {
    pub profile: StrictProfile,
}

impl MatchingInstance {
    pub fn new(profile: StrictProfile) -> Self {
        MatchingInstance { profile }
    }

    pub fn from_lists(m: usize, lists: Vec<Vec<usize>>) -> Result<Self> {
        Ok(MatchingInstance::new(StrictProfile::new(m, lists)?))
    }

    pub fn n(&self) -> usize {
        self.profile.n_agents()
    }

    pub fn m(&self) -> usize {
        self.profile.n_items()
    }

    /// Adjacency of the top-`r` graph `G_r`, items ascending.
    pub fn top_graph(&self, r: usize) -> Vec<Vec<usize>> {
        (0..self.n())
            .map(|j| {
                let mut items: Vec<usize> = self.profile.list(j)[..r.min(self.m())].to_vec();
                items.sort_unstable();
                items
            })
            .collect()
    }
}

/// Doubly stochastic assignment: `x[j][i]` is the probability agent `j` gets item `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalMatching {
    pub x: Vec<Vec<Rational>>,
}

impl FractionalMatching {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        let n = self.n();
        let one = Rational::one();
        self.x.iter().all(|row| row.len() == n && row.iter().all(|v| *v >= Rational::zero()))
            && self.x.iter().all(|row| row.iter().sum::<Rational>() == one)
            && (0..n).all(|i| self.x.iter().map(|row| &row[i]).sum::<Rational>() == one)
    }

    /// Expected number of agents receiving their top item.
    pub fn expected_top(&self, profile: &StrictProfile) -> Rational {
        (0..self.n()).map(|j| self.x[j][profile.alt(j, 1)].clone()).sum()
    }
}

/// Maximum-cardinality bipartite matching (Hopcroft–Karp). `adj[u]` lists the
/// right vertices adjacent to left vertex `u`; returns each left vertex's partner.
pub fn hopcroft_karp(n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let n_left = adj.len();
    let mut left: Vec<Option<usize>> = vec![None; n_left];
    let mut right: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![usize::MAX; n_left];

    fn bfs(adj: &[Vec<usize>], left: &[Option<usize>], right: &[Option<usize>], dist: &mut [usize]) -> bool {
        let mut queue = std::collections::VecDeque::new();
        for u in 0..adj.len() {
            if left[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                match right[v] {
                    None => found = true,
                    Some(w) if dist[w] == usize::MAX => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        found
    }

    fn dfs(
        u: usize,
        adj: &[Vec<usize>],
        left: &mut [Option<usize>],
        right: &mut [Option<usize>],
        dist: &mut [usize],
    ) -> bool {
        for &v in &adj[u] {
            let ok = match right[v] {
                None => true,
                Some(w) => dist[w] == dist[u] + 1 && dfs(w, adj, left, right, dist),
            };
            if ok {
                left[u] = Some(v);
                right[v] = Some(u);
                return true;
            }
        }
        dist[u] = usize::MAX;
        false
    }

    while bfs(adj, &left, &right, &mut dist) {
        for u in 0..n_left {
            if left[u].is_none() {
                dfs(u, adj, &mut left, &mut right, &mut dist);
            }
        }
    }
    left
}

/// `maxrank_r`: size of a maximum matching in the top-`r` graph.
pub fn maxrank_matching(inst: &MatchingInstance, r: usize) -> usize {
    hopcroft_karp(inst.m(), &inst.top_graph(r)).iter().flatten().count()
}

pub fn maxranks_matching(inst: &MatchingInstance) -> Vec<usize> {
    (1..=inst.m()).map(|r| maxrank_matching(inst, r)).collect()
}

/// MaxMatch, returning the matching held after every stage `r = 1..=m`.
///
/// In stage `r` every still-free item, in ascending order, goes to the
/// lowest-index free agent ranking it in the top `r`, which keeps the
/// matching maximal in `G_r`.
pub fn max_match_stages(inst: &MatchingInstance) -> Vec<Matching> {
    let p = &inst.profile;
    let mut m = Matching::empty(inst.n());
    let mut taken = vec![false; inst.m()];
    let mut stages = Vec::with_capacity(inst.m());
    for r in 1..=inst.m() {
        for (item, taken_item) in taken.iter_mut().enumerate() {
            if *taken_item {
                continue;
            }
            if let Some(j) = (0..inst.n()).find(|&j| m.get(j).is_none() && p.position(j, item) <= r) {
                m.set(j, Some(item));
                *taken_item = true;
            }
        }
        stages.push(m.clone());
    }
    stages
}

pub fn max_match(inst: &MatchingInstance) -> Matching {
    max_match_stages(inst).pop().unwrap_or_else(|| Matching::empty(inst.n()))
}

/// True when no agent and item, both unmatched, are adjacent in `G_r`.
pub fn is_maximal_in(inst: &MatchingInstance, m: &Matching, r: usize) -> bool {
    let mut taken = vec![false; inst.m()];
    for (_, i) in m.pairs() {
        taken[i] = true;
    }
    (0..inst.n())
        .filter(|&j| m.get(j).is_none())
        .all(|j| inst.profile.list(j)[..r].iter().all(|&i| taken[i]))
}

/// Hard instance for MaxMatch with `n = 2K - 1` agents and items.
pub fn gen_matching_lb(k: usize) -> Result<MatchingInstance> {
    if k < 1 {
        return Err(Error::domain("K must be at least 1"));
    }
    let n = 2 * k - 1;
    let mut lists = Vec::with_capacity(n);
    for j in 1..=n {
        // 1-based item labels for the first K preferences.
        let mut head = vec![if j == 1 { 1 } else { n }];
        for r in 2..k {
            head.push(if j == r {
                r
            } else if j == r - 1 {
                k + r - 1
            } else {
                r - 1
            });
        }
        if k >= 2 {
            head.push(if j == k - 1 { k } else { k - 1 });
        }
        lists.push(fill_tail(head.iter().map(|x| x - 1).collect(), n));
    }
    MatchingInstance::from_lists(n, lists)
}

/// Completes a list prefix with the unused items in ascending order.
pub(crate) fn fill_tail(mut head: Vec<usize>, m: usize) -> Vec<usize> {
    let mut used = vec![false; m];
    for &i in &head {
        used[i] = true;
    }
    head.extend((0..m).filter(|&i| !used[i]));
    head
}

/// Serial dictatorship along `order`.
pub fn serial_dictatorship(inst: &MatchingInstance, order: &[usize]) -> Matching {
    let mut m = Matching::empty(inst.n());
    let mut taken = vec![false; inst.m()];
    for &j in order {
        if let Some(&i) = inst.profile.list(j).iter().find(|&&i| !taken[i]) {
            taken[i] = true;
            m.set(j, Some(i));
        }
    }
    m
}

/// Exact RSD lottery over all `n!` agent orders.
pub fn rsd(inst: &MatchingInstance) -> Result<Lottery<Matching>> {
    let n = inst.n();
    if n > RSD_EXACT_LIMIT {
        return Err(Error::Resource {
            what: "rsd permutations",
            needed: (1..=n as u128).product(),
            limit: (1..=RSD_EXACT_LIMIT as u128).product(),
        });
    }
    if n == 0 {
        return Ok(Lottery::point(Matching::empty(0)));
    }
    let counts = (0..n)
        .into_par_iter()
        .map(|first| {
            let rest: Vec<usize> = (0..n).filter(|&j| j != first).collect();
            let mut local: BTreeMap<Matching, u64> = BTreeMap::new();
            for tail in rest.iter().copied().permutations(rest.len()) {
                let mut order = Vec::with_capacity(n);
                order.push(first);
                order.extend(tail);
                *local.entry(serial_dictatorship(inst, &order)).or_default() += 1;
            }
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let total: u64 = counts.values().sum();
    Lottery::new(
        counts
            .into_iter()
            .map(|(m, c)| (m, Rational::new(c.into(), total.into()))),
    )
}

/// Empirical RSD lottery from `samples` random orders.
pub fn rsd_sampled<R: Rng>(inst: &MatchingInstance, samples: usize, rng: &mut R) -> Result<Lottery<Matching>> {
    if samples == 0 {
        return Err(Error::domain("at least one sample required"));
    }
    let mut counts: BTreeMap<Matching, usize> = BTreeMap::new();
    let mut order: Vec<usize> = (0..inst.n()).collect();
    for _ in 0..samples {
        order.shuffle(rng);
        *counts.entry(serial_dictatorship(inst, &order)).or_default() += 1;
    }
    Lottery::new(
        counts
            .into_iter()
            .map(|(m, c)| (m, from_usize(c) / from_usize(samples))),
    )
}

/// Which cycle TTCA trades first in each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleRule {
    /// The cycle reached by following pointers from the lowest-index active agent.
    Lowest,
    /// Same, starting from the highest-index active agent.
    Highest,
}

pub fn ttca(inst: &MatchingInstance, endowment: &Matching) -> Result<Matching> {
    ttca_with(inst, endowment, CycleRule::Lowest)
}

pub fn ttca_with(inst: &MatchingInstance, endowment: &Matching, rule: CycleRule) -> Result<Matching> {
    let n = inst.n();
    if inst.m() != n || endowment.n_agents() != n || endowment.assigned_count() != n || !endowment.is_matching() {
        return Err(Error::domain("TTCA needs n = m and a perfect endowment"));
    }
    let mut owner = vec![0usize; n];
    for (j, i) in endowment.pairs() {
        owner[i] = j;
    }
    let mut active = vec![true; n];
    let mut out = Matching::empty(n);
    let mut remaining = n;
    while remaining > 0 {
        let point = |j: usize, active: &[bool]| -> usize {
            let item = *inst
                .profile
                .list(j)
                .iter()
                .find(|&&i| active[owner[i]])
                .expect("an active owner exists");
            owner[item]
        };
        let start = match rule {
            CycleRule::Lowest => (0..n).find(|&j| active[j]),
            CycleRule::Highest => (0..n).rev().find(|&j| active[j]),
        }
        .expect("active agent");
        let mut seen = vec![false; n];
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = point(cur, &active);
        }
        let cycle_start = cur;
        let mut cycle = vec![cycle_start];
        let mut next = point(cycle_start, &active);
        while next != cycle_start {
            cycle.push(next);
            next = point(next, &active);
        }
        for &j in &cycle {
            let target = point(j, &active);
            out.set(j, endowment.get(target));
        }
        for &j in &cycle {
            active[j] = false;
        }
        remaining -= cycle.len();
    }
    Ok(out)
}

/// Probabilistic serial (simultaneous eating), exactly.
pub fn ps(inst: &MatchingInstance) -> Result<FractionalMatching> {
    let n = inst.n();
    if inst.m() != n {
        return Err(Error::domain("PS needs as many items as agents"));
    }
    let mut x = vec![vec![Rational::zero(); n]; n];
    let mut cap = vec![Rational::zero(); n];
    let mut allocated = vec![false; n];
    let one = Rational::one();
    while allocated.iter().any(|a| !a) {
        let target: Vec<usize> = (0..n)
            .map(|j| {
                *inst
                    .profile
                    .list(j)
                    .iter()
                    .find(|&&i| !allocated[i])
                    .expect("some item is unallocated")
            })
            .collect();
        let mut eaters = vec![0usize; n];
        for &i in &target {
            eaters[i] += 1;
        }
        let step = (0..n)
            .filter(|&i| eaters[i] > 0)
            .map(|i| (&one - &cap[i]) / from_usize(eaters[i]))
            .min()
            .expect("every agent eats");
        for (j, &i) in target.iter().enumerate() {
            x[j][i] += &step;
        }
        for i in 0..n {
            if eaters[i] > 0 {
                cap[i] += &step * from_usize(eaters[i]);
                if cap[i] == one {
                    allocated[i] = true;
                }
            }
        }
    }
    Ok(FractionalMatching { x })
}

/// Birkhoff–von Neumann decomposition: repeatedly peel off a perfect matching
/// in the support with the smallest entry on it as weight.
pub fn bvn_decompose(fm: &FractionalMatching) -> Result<Lottery<Matching>> {
    if !fm.is_doubly_stochastic() {
        return Err(Error::domain("matrix is not doubly stochastic"));
    }
    let n = fm.n();
    let mut rest = fm.x.clone();
    let mut parts = Vec::new();
    while rest.iter().flatten().any(|v| !v.is_zero()) {
        let adj: Vec<Vec<usize>> = rest
            .iter()
            .map(|row| (0..n).filter(|&i| !row[i].is_zero()).collect())
            .collect();
        let pm = hopcroft_karp(n, &adj);
        if pm.iter().any(Option::is_none) {
            return Err(Error::structural("support has no perfect matching"));
        }
        let w = pm
            .iter()
            .enumerate()
            .map(|(j, i)| rest[j][i.expect("perfect")].clone())
            .min()
            .expect("n > 0");
        for (j, i) in pm.iter().enumerate() {
            rest[j][i.expect("perfect")] -= &w;
        }
        parts.push((Assignment(pm), w));
    }
    if n == 0 {
        return Ok(Lottery::point(Matching::empty(0)));
    }
    Lottery::new(parts)
}

/// PS as a lottery over matchings.
pub fn ps_lottery(inst: &MatchingInstance) -> Result<Lottery<Matching>> {
    bvn_decompose(&ps(inst)?)
}

/// Grouped instance with `k = ⌈√n⌉`: agents `0..k` top their own item, the
/// other `n - k` agents top item `n - 1` and, in `k` groups of `n/k - 1`,
/// rank item `ℓ` second. Requires `k` to divide `n`.
pub fn gen_sqrt_instance(n: usize) -> Result<MatchingInstance> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let k = (1..=n).find(|k| k * k >= n).expect("k <= n");
    if !n.is_multiple_of(k) || n < 4 {
        return Err(Error::domain(format!("need n >= 4 with ⌈√n⌉ = {k} dividing n = {n}")));
    }
    let group = n / k - 1;
    let lists = (0..n)
        .map(|j| {
            if j < k {
                fill_tail(vec![j], n)
            } else {
                fill_tail(vec![n - 1, (j - k) / group], n)
            }
        })
        .collect();
    MatchingInstance::from_lists(n, lists)
}

/// `k = ⌈√n⌉` for the grouped instance.
pub fn sqrt_k(n: usize) -> usize {
    (1..=n.max(1)).find(|k| k * k >= n).unwrap_or(1)
}
