//! Brute-force oracles and seeded corpora shared by the integration tests.
//! Nothing here calls the library's own optimizers.

#![allow(dead_code)]

use num_traits::{One, Zero};
use ordmech::matroid::{MatroidMarket, MatroidSpec};
use ordmech::rational::{from_usize, q};
use ordmech::sched::SchedulingInstance;
use ordmech::{Assignment, Rational, Ranking, ScoringVector, StrictProfile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_lists(rng: &mut impl Rng, n: usize, m: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|_| {
            let mut l: Vec<usize> = (0..m).collect();
            l.shuffle(rng);
            l
        })
        .collect()
}

pub fn random_profile(rng: &mut impl Rng, n: usize, m: usize) -> StrictProfile {
    StrictProfile::new(m, random_lists(rng, n, m)).unwrap()
}

/// Every strict profile of `n` agents over `m` items.
pub fn all_profiles(n: usize, m: usize) -> Vec<StrictProfile> {
    let perms = permutations(m);
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &out {
            for p in &perms {
                let mut v: Vec<Vec<usize>> = prefix.clone();
                v.push(p.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(|lists| StrictProfile::new(m, lists).unwrap()).collect()
}

pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for at in 0..=p.len() {
            let mut v = p.clone();
            v.insert(at, m - 1);
            out.push(v);
        }
    }
    out
}

/// All assignments of `n` agents to `0..m` or nothing, without any feasibility filter.
pub fn all_assignments(n: usize, m: usize) -> Vec<Assignment> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &out {
            for choice in std::iter::once(None).chain((0..m).map(Some)) {
                let mut v: Vec<Option<usize>> = prefix.clone();
                v.push(choice);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(Assignment).collect()
}

/// All partial matchings (each item used at most once).
pub fn all_matchings(n: usize, m: usize) -> Vec<Assignment> {
    fn rec(j: usize, n: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Assignment>) {
        if j == n {
            out.push(Assignment(cur.clone()));
            return;
        }
        cur.push(None);
        rec(j + 1, n, used, cur, out);
        cur.pop();
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(Some(i));
                rec(j + 1, n, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

/// `counts[r-1]` = agents holding an item among their top `r`.
pub fn rank_vector(p: &StrictProfile, a: &Assignment) -> Vec<usize> {
    let m = p.n_items();
    let mut counts = vec![0; m];
    for (j, slot) in a.0.iter().enumerate() {
        if let Some(i) = slot {
            let pos = p.position(j, *i);
            for c in counts.iter_mut().skip(pos - 1) {
                *c += 1;
            }
        }
    }
    counts
}

fn pointwise_max(acc: &mut [usize], v: &[usize]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a = (*a).max(*b);
    }
}

/// `maxrank_r` for matchings, by dynamic programming over used-item sets.
pub fn brute_maxranks_matching(p: &StrictProfile) -> Vec<usize> {
    let m = p.n_items();
    assert!(m <= 16);
    (1..=m)
        .map(|r| {
            let mut dp: Vec<Option<usize>> = vec![None; 1 << m];
            dp[0] = Some(0);
            for j in 0..p.n_agents() {
                let mut next = dp.clone();
                for mask in 0..1usize << m {
                    let Some(c) = dp[mask] else { continue };
                    for &i in &p.list(j)[..r] {
                        if mask & (1 << i) == 0 {
                            let slot = &mut next[mask | (1 << i)];
                            *slot = Some(slot.map_or(c + 1, |s| s.max(c + 1)));
                        }
                    }
                }
                dp = next;
            }
            dp.into_iter().flatten().max().unwrap_or(0)
        })
        .collect()
}

/// Best welfare of any matching, by dynamic programming over used-item sets.
pub fn best_matching_welfare(p: &StrictProfile, sv: &ScoringVector) -> Rational {
    let m = p.n_items();
    assert!(m <= 16);
    let mut dp: Vec<Option<Rational>> = vec![None; 1 << m];
    dp[0] = Some(Rational::zero());
    for j in 0..p.n_agents() {
        let mut next = dp.clone();
        for mask in 0..1usize << m {
            let Some(base) = &dp[mask] else { continue };
            for i in (0..m).filter(|i| mask & (1 << i) == 0) {
                let v = base + sv.score(p.position(j, i));
                let slot = &mut next[mask | (1 << i)];
                if slot.as_ref().is_none_or(|s| *s < v) {
                    *slot = Some(v);
                }
            }
        }
        dp = next;
    }
    dp.into_iter().flatten().max().unwrap()
}

pub fn brute_maxranks_general(p: &StrictProfile) -> Vec<usize> {
    let m = p.n_items();
    (1..=m)
        .map(|r| (0..m).map(|o| (0..p.n_agents()).filter(|&j| p.position(j, o) <= r).count()).max().unwrap_or(0))
        .collect()
}

pub fn best_general_welfare(p: &StrictProfile, sv: &ScoringVector) -> Rational {
    (0..p.n_items())
        .map(|o| (0..p.n_agents()).map(|j| sv.score(p.position(j, o))).sum::<Rational>())
        .max()
        .unwrap()
}

/// Distinct rank vectors of every feasible allocation of a matroid market.
pub fn matroid_rank_vectors(market: &MatroidMarket) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = all_assignments(market.n(), market.m())
        .into_iter()
        .filter(|a| market.is_feasible(a))
        .map(|a| rank_vector(&market.profile, &a))
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn maxranks_of(vectors: &[Vec<usize>], m: usize) -> Vec<usize> {
    let mut best = vec![0; m];
    for v in vectors {
        pointwise_max(&mut best, v);
    }
    best
}

/// Welfare from a rank vector: `Σ_r (U(r) - U(r+1)) · rank_r`.
pub fn welfare_of_ranks(ranks: &[usize], sv: &ScoringVector) -> Rational {
    ranks
        .iter()
        .enumerate()
        .map(|(k, &c)| (sv.score(k + 1) - sv.score(k + 2)) * from_usize(c))
        .sum()
}

/// `maxrank_r` over schedules of `jobs` with makespan at most `T`, by enumeration.
pub fn brute_maxrank_sched(inst: &SchedulingInstance, jobs: &[usize], r: usize) -> usize {
    let m = inst.m();
    let mut best = 0;
    let mut choice = vec![0usize; jobs.len()];
    loop {
        let mut loads = vec![Rational::zero(); m];
        let mut ok = true;
        let mut count = 0;
        for (idx, &c) in choice.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let (j, i) = (jobs[idx], c - 1);
            match inst.time(j, i) {
                Some(p) => loads[i] += p,
                None => {
                    ok = false;
                    break;
                }
            }
            if inst.profile.position(j, i) <= r {
                count += 1;
            }
        }
        if ok && loads.iter().all(|l| *l <= inst.t) {
            best = best.max(count);
        }
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return best;
            }
            choice[pos] += 1;
            if choice[pos] <= m {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Borda, plurality and `count - 2` random non-increasing integer vectors.
pub fn scoring_vectors(rng: &mut impl Rng, m: usize, count: usize) -> Vec<ScoringVector> {
    let mut out = vec![ScoringVector::borda(m), ScoringVector::plurality(m)];
    while out.len() < count {
        let mut s: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=10)).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s[0] = s[0].max(1);
        out.push(ScoringVector::new(s.into_iter().map(|v| q(v, 1)).collect()).unwrap());
    }
    out
}

/// Parallel-machine instance with sizes `T·a/40`, `a ∈ 1..=40`, and `T = 1`.
pub fn random_parallel(rng: &mut impl Rng, n: usize, m: usize) -> SchedulingInstance {
    let profile = random_profile(rng, n, m);
    let p = (0..n).map(|_| Some(q(rng.gen_range(1..=40), 40))).collect();
    SchedulingInstance::parallel(p, Rational::one(), profile).unwrap()
}

/// Unrelated-machine instance with `T = 1`: each pair is infeasible with
/// probability 1/7, otherwise takes `a/8` for `a ∈ 1..=12`.
pub fn random_unrelated(rng: &mut impl Rng, n: usize, m: usize) -> SchedulingInstance {
    let profile = random_profile(rng, n, m);
    let p = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| (rng.gen_range(0..7) != 0).then(|| q(rng.gen_range(1..=12), 8)))
                .collect()
        })
        .collect();
    SchedulingInstance::new(p, Rational::one(), profile).unwrap()
}

fn random_matroid(rng: &mut impl Rng, n: usize) -> MatroidSpec {
    match rng.gen_range(0..5) {
        0 | 1 => MatroidSpec::Uniform { k: rng.gen_range(1..=3) },
        2 | 3 => {
            let blocks = rng.gen_range(1..=3);
            let mut parts = vec![Vec::new(); blocks];
            for j in 0..n {
                parts[rng.gen_range(0..blocks)].push(j);
            }
            MatroidSpec::Partition {
                caps: (0..blocks).map(|_| rng.gen_range(1..=2)).collect(),
                blocks: parts,
            }
        }
        _ => {
            // Explicit listing of a uniform matroid's independent sets.
            let k = rng.gen_range(1..=2);
            let independent = (0..1usize << n)
                .filter(|s| s.count_ones() as usize <= k)
                .map(|s| (0..n).filter(|j| s & (1 << j) != 0).collect())
                .collect();
            MatroidSpec::Explicit { independent }
        }
    }
}

pub fn random_market(rng: &mut impl Rng, n: usize, m: usize) -> MatroidMarket {
    let profile = random_profile(rng, n, m);
    let matroids = (0..m).map(|_| random_matroid(rng, n)).collect();
    MatroidMarket::new(profile, matroids).unwrap()
}

/// The 500 random matching instances (`n, m <= 8`).
pub fn matching_corpus() -> Vec<StrictProfile> {
    let mut r = rng(0x4d41_5443);
    (0..500)
        .map(|_| {
            let (n, m) = (r.gen_range(1..=8), r.gen_range(1..=8));
            random_profile(&mut r, n, m)
        })
        .collect()
}

/// Every profile with `n, m <= 3`.
pub fn exhaustive_small() -> Vec<StrictProfile> {
    (1..=3)
        .flat_map(|n| (1..=3).flat_map(move |m| all_profiles(n, m)))
        .collect()
}

/// The 500 random general instances (`2 <= n <= 10`, `m <= 10`).
pub fn general_corpus() -> Vec<StrictProfile> {
    let mut r = rng(0x4745_4e52);
    (0..500)
        .map(|_| {
            let (n, m) = (r.gen_range(2..=10), r.gen_range(1..=10));
            random_profile(&mut r, n, m)
        })
        .collect()
}

/// The 300 random matroid markets (`n <= 6`, `m <= 4`).
pub fn matroid_corpus() -> Vec<MatroidMarket> {
    let mut r = rng(0x4d41_5452);
    (0..300)
        .map(|_| {
            let (n, m) = (r.gen_range(1..=6), r.gen_range(1..=4));
            random_market(&mut r, n, m)
        })
        .collect()
}

/// The 100 random parallel instances (`2 <= n <= 10`, `m <= 3`).
pub fn parallel_corpus() -> Vec<SchedulingInstance> {
    let mut r = rng(0x5041_5241);
    (0..100)
        .map(|_| {
            let (n, m) = (r.gen_range(2..=10), r.gen_range(1..=3));
            random_parallel(&mut r, n, m)
        })
        .collect()
}

/// The 200 random unrelated instances (`n <= 6`, `m <= 3`).
pub fn unrelated_corpus() -> Vec<SchedulingInstance> {
    let mut r = rng(0x554e_5245);
    (0..200)
        .map(|_| {
            let (n, m) = (r.gen_range(1..=6), r.gen_range(1..=3));
            random_unrelated(&mut r, n, m)
        })
        .collect()
}
