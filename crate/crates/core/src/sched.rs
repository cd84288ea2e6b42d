//! Scheduling markets: jobs (agents) rank machines (items) and are assigned
//! subject to a makespan bound `T`. Processing times are public.
//!
//! Processing times are stored per job: `p[j][i]` is job `j`'s time on machine
//! `i`, with `None` meaning the job cannot run there.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{decompose, Cmp, ConvexDecomposition, RationalLP};
use crate::matching::hopcroft_karp;
use crate::matroid::{matroid_max_match, MatroidMarket, MatroidSpec};
use crate::prefs::{histogram_of, Assignment, Lottery, Ranking, StrictProfile};
use crate::rational::{ceil_div, ceil_log2, floor_usize, from_usize, Rational};
use crate::verify::EpsilonSchedule;

pub type Schedule = Assignment;

/// Largest job count accepted by the exact `maxrank` oracle.
pub const MAXRANK_JOB_LIMIT: usize = 12;
/// Largest machine count accepted by the exact `maxrank` oracle.
pub const MAXRANK_MACHINE_LIMIT: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedulingInstance {
    pub p: Vec<Vec<Option<Rational>>>,
    pub t: Rational,
    pub profile: StrictProfile,
}

impl SchedulingInstance {
    pub fn new(p: Vec<Vec<Option<Rational>>>, t: Rational, profile: StrictProfile) -> Result<Self> {
        if !t.is_positive() {
            return Err(Error::domain("makespan bound T must be positive"));
        }
        if p.len() != profile.n_agents() {
            return Err(Error::domain(format!("{} processing rows for {} jobs", p.len(), profile.n_agents())));
        }
        for (j, row) in p.iter().enumerate() {
            if row.len() != profile.n_items() {
                return Err(Error::domain(format!("job {j}: {} times for {} machines", row.len(), profile.n_items())));
            }
            if row.iter().flatten().any(|x| !x.is_positive()) {
                return Err(Error::domain(format!("job {j}: processing times must be positive")));
            }
        }
        Ok(SchedulingInstance { p, t, profile })
    }

    /// Parallel machines: job `j` takes `p[j]` everywhere.
    pub fn parallel(p: Vec<Option<Rational>>, t: Rational, profile: StrictProfile) -> Result<Self> {
        let m = profile.n_items();
        SchedulingInstance::new(p.into_iter().map(|x| vec![x; m]).collect(), t, profile)
    }

    pub fn n(&self) -> usize {
        self.profile.n_agents()
    }

    pub fn m(&self) -> usize {
        self.profile.n_items()
    }

    pub fn time(&self, job: usize, machine: usize) -> Option<&Rational> {
        self.p[job][machine].as_ref()
    }

    /// `p_{ij} <= T`.
    pub fn fits(&self, job: usize, machine: usize) -> bool {
        self.time(job, machine).is_some_and(|x| *x <= self.t)
    }

    pub fn is_parallel(&self) -> bool {
        self.p.iter().all(|row| row.windows(2).all(|w| w[0] == w[1]))
    }

    /// Same instance with different preferences.
    pub fn with_profile(&self, profile: StrictProfile) -> Result<Self> {
        SchedulingInstance::new(self.p.clone(), self.t.clone(), profile)
    }

    fn parallel_time(&self, job: usize) -> Result<Option<&Rational>> {
        if !self.is_parallel() {
            return Err(Error::domain("instance is not a parallel-machine instance"));
        }
        Ok(self.p[job].first().and_then(Option::as_ref))
    }
}

/// Per-machine load; assigning a job to a machine it cannot run on is an error.
pub fn loads(inst: &SchedulingInstance, s: &Schedule) -> Result<Vec<Rational>> {
    let mut out = vec![Rational::zero(); inst.m()];
    for (j, i) in s.pairs() {
        let t = inst
            .time(j, i)
            .ok_or_else(|| Error::domain(format!("job {j} cannot run on machine {i}")))?;
        out[i] += t;
    }
    Ok(out)
}

pub fn makespan(inst: &SchedulingInstance, s: &Schedule) -> Result<Rational> {
    Ok(loads(inst, s)?.into_iter().max().unwrap_or_else(Rational::zero))
}

/// `rank_r(s)` for `r = 1..=m`.
pub fn rank_counts(inst: &SchedulingInstance, s: &Schedule) -> Vec<usize> {
    histogram_of(&inst.profile, s).counts
}

/// `maxrank_r(≻_S)`: most jobs of `jobs` placed on top-`r` machines with
/// makespan at most `T`, by branch and bound.
pub fn maxrank_sched(inst: &SchedulingInstance, jobs: &[usize], r: usize) -> Result<usize> {
    if jobs.len() > MAXRANK_JOB_LIMIT {
        return Err(Error::Resource {
            what: "maxrank_sched jobs",
            needed: jobs.len() as u128,
            limit: MAXRANK_JOB_LIMIT as u128,
        });
    }
    if inst.m() > MAXRANK_MACHINE_LIMIT {
        return Err(Error::Resource {
            what: "maxrank_sched machines",
            needed: inst.m() as u128,
            limit: MAXRANK_MACHINE_LIMIT as u128,
        });
    }
    let options: Vec<Vec<(usize, Rational)>> = jobs
        .iter()
        .map(|&j| {
            inst.profile.list(j)[..r.min(inst.m())]
                .iter()
                .filter(|&&i| inst.fits(j, i))
                .map(|&i| (i, inst.time(j, i).expect("fits").clone()))
                .collect()
        })
        .filter(|o: &Vec<_>| !o.is_empty())
        .collect();
    let mut load = vec![Rational::zero(); inst.m()];
    let mut best = 0;
    branch(&options, 0, 0, &mut load, &inst.t, &mut best);
    Ok(best)
}

fn branch(
    options: &[Vec<(usize, Rational)>],
    idx: usize,
    placed: usize,
    load: &mut [Rational],
    t: &Rational,
    best: &mut usize,
) {
    if placed + (options.len() - idx) <= *best {
        return;
    }
    if idx == options.len() {
        *best = placed;
        return;
    }
    for (i, p) in &options[idx] {
        if &load[*i] + p <= *t {
            load[*i] += p;
            branch(options, idx + 1, placed + 1, load, t, best);
            load[*i] -= p;
            if *best == options.len() {
                return;
            }
        }
    }
    branch(options, idx + 1, placed, load, t, best);
}

pub fn maxranks_sched(inst: &SchedulingInstance, jobs: &[usize]) -> Result<Vec<usize>> {
    (1..=inst.m()).map(|r| maxrank_sched(inst, jobs, r)).collect()
}

/// Jobs grouped by processing time: `N_0 = {p_j <= T/n}` and
/// `N_ℓ = {2^{ℓ-1}T/n < p_j <= 2^ℓ T/n}` for `ℓ = 1..=k`, `k = ⌈log₂ n⌉`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JobClasses {
    pub k: usize,
    /// `classes[ℓ]` lists `N_ℓ`, ascending.
    pub classes: Vec<Vec<usize>>,
    /// Jobs with `p_j > T`; no schedule can place them.
    pub dropped: Vec<usize>,
    /// The lowest-index schedulable job, always placed in `N_0`.
    pub designated: Option<usize>,
}

impl JobClasses {
    pub fn class_of(&self, job: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&job))
    }

    /// Jobs outside `N_0`, ascending.
    pub fn upper_jobs(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.classes[1..].iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }
}

pub fn bucketize(inst: &SchedulingInstance) -> Result<JobClasses> {
    let n = inst.n();
    let k = ceil_log2(n);
    let mut classes = vec![Vec::new(); k + 1];
    let mut dropped = Vec::new();
    let mut designated = None;
    let unit = &inst.t / from_usize(n.max(1));
    for j in 0..n {
        let p = match inst.parallel_time(j)? {
            Some(p) if *p <= inst.t => p,
            _ => {
                dropped.push(j);
                continue;
            }
        };
        if designated.is_none() {
            designated = Some(j);
            classes[0].push(j);
            continue;
        }
        let mut l = 0;
        let mut bound = unit.clone();
        while *p > bound {
            l += 1;
            bound = &bound * from_usize(2);
        }
        classes[l].push(j);
    }
    Ok(JobClasses {
        k,
        classes,
        dropped,
        designated,
    })
}

/// Per-machine job cap `⌈n / 2^{ℓ-1}⌉` for class `ℓ >= 1`.
pub fn class_capacity(n: usize, l: usize) -> usize {
    ceil_div(n, 1 << (l - 1))
}

fn n0_schedule(inst: &SchedulingInstance, classes: &JobClasses) -> Schedule {
    let mut s = Schedule::empty(inst.n());
    for &j in &classes.classes[0] {
        s.set(j, Some(inst.profile.alt(j, 1)));
    }
    s
}

/// Concatenation of the per-class matroid schedules (`N_0` excluded).
fn class_schedules(inst: &SchedulingInstance, classes: &JobClasses) -> Result<Schedule> {
    let mut s = Schedule::empty(inst.n());
    for l in 1..=classes.k {
        let jobs = &classes.classes[l];
        if jobs.is_empty() {
            continue;
        }
        let cap = class_capacity(inst.n(), l);
        let market = MatroidMarket::new(inst.profile.restrict(jobs), vec![MatroidSpec::Uniform { k: cap }; inst.m()])?;
        let alloc = matroid_max_match(&market)?;
        for (local, i) in alloc.pairs() {
            s.set(jobs[local], Some(i));
        }
    }
    Ok(s)
}

/// Deterministic parallel-machine algorithm: `N_0` jobs to their top
/// machines, every other class solved as a capacitated matroid market.
pub fn parallel_det(inst: &SchedulingInstance) -> Result<Schedule> {
    let classes = bucketize(inst)?;
    n0_schedule(inst, &classes).merge(&class_schedules(inst, &classes)?)
}

/// Output of the randomized parallel-machine algorithm.
#[derive(Clone, Debug)]
pub struct ParallelRand {
    pub classes: JobClasses,
    /// `N_0` jobs on their top machines.
    pub base: Schedule,
    /// Concatenated class schedules.
    pub sigma: Schedule,
    /// Jobs with an edge in `sigma`, ascending; the polytope has one variable per job.
    pub edge_jobs: Vec<usize>,
    /// `B_r` for `r = 1..=m`.
    pub b: Vec<usize>,
    pub polytope: RationalLP,
    pub target: Vec<Rational>,
    pub decomposition: ConvexDecomposition,
    /// Lottery over full schedules `base + Y`.
    pub lottery: Lottery<Schedule>,
}

/// Randomized parallel-machine algorithm: spreads the class schedules with
/// weight `1/k` each and rounds through an integral polytope, so every
/// support schedule has makespan at most `8T` and `rank_r >= |N_0| + B_r`.
pub fn parallel_rand(inst: &SchedulingInstance) -> Result<ParallelRand> {
    let classes = bucketize(inst)?;
    let base = n0_schedule(inst, &classes);
    let sigma = class_schedules(inst, &classes)?;
    let edge_jobs: Vec<usize> = sigma.pairs().map(|(j, _)| j).collect();
    let m = inst.m();
    let k = classes.k.max(1);
    let kq = from_usize(k);
    let ranks = rank_counts(inst, &sigma);
    let b: Vec<usize> = ranks.iter().map(|&c| c / k).collect();

    let mut poly = RationalLP::new(edge_jobs.len());
    for v in 0..edge_jobs.len() {
        poly.set_bounds(v, Some(Rational::zero()), Some(Rational::one()))?;
    }
    for i in 0..m {
        for l in 1..=classes.k {
            let row: Vec<(usize, Rational)> = edge_jobs
                .iter()
                .enumerate()
                .filter(|(_, &j)| sigma.get(j) == Some(i) && classes.classes[l].contains(&j))
                .map(|(v, _)| (v, Rational::one()))
                .collect();
            if row.is_empty() {
                continue;
            }
            let a = ceil_div(inst.n(), (1 << (l - 1)) * k);
            poly.add_constraint(row, Cmp::Le, from_usize(a))?;
        }
    }
    for (r, &br) in b.iter().enumerate() {
        let row: Vec<(usize, Rational)> = edge_jobs
            .iter()
            .enumerate()
            .filter(|(_, &j)| inst.profile.position(j, sigma.get(j).expect("edge job")) <= r + 1)
            .map(|(v, _)| (v, Rational::one()))
            .collect();
        if row.is_empty() {
            continue;
        }
        poly.add_constraint(row, Cmp::Ge, from_usize(br))?;
    }
    let target = vec![Rational::one() / &kq; edge_jobs.len()];
    let decomposition = if edge_jobs.is_empty() {
        ConvexDecomposition {
            points: vec![Vec::new()],
            weights: vec![Rational::one()],
        }
    } else {
        decompose(&target, &poly)?
    };
    let lottery = Lottery::new(decomposition.points.iter().zip(&decomposition.weights).map(|(y, w)| {
        let mut s = base.clone();
        for (v, &j) in edge_jobs.iter().enumerate() {
            if y[v].is_one() {
                s.set(j, sigma.get(j));
            }
        }
        (s, w.clone())
    }))?;
    Ok(ParallelRand {
        classes,
        base,
        sigma,
        edge_jobs,
        b,
        polytope: poly,
        target,
        decomposition,
        lottery,
    })
}

/// Lex-truthful implementation of [`parallel_rand`]: for every job `j`
/// outside `N_0` and every `r`, with probability `ε_r/n` only `j` (besides
/// the `N_0` jobs) is scheduled, on its `r`-th machine. The remaining mass
/// goes to the randomized schedule.
pub fn parallel_rand_lt(inst: &SchedulingInstance, sched: &EpsilonSchedule) -> Result<Lottery<Schedule>> {
    if sched.len() != inst.m() {
        return Err(Error::domain(format!("schedule has {} parts for {} machines", sched.len(), inst.m())));
    }
    let run = parallel_rand(inst)?;
    let n = from_usize(inst.n());
    let mut entries = Vec::new();
    let mut spent = Rational::zero();
    for j in run.classes.upper_jobs() {
        for (r, part) in sched.parts().iter().enumerate() {
            let mut s = run.base.clone();
            s.set(j, Some(inst.profile.alt(j, r + 1)));
            let w = part / &n;
            spent += &w;
            entries.push((s, w));
        }
    }
    let keep = Rational::one() - spent;
    for (s, w) in run.lottery.iter() {
        entries.push((s.clone(), &keep * w));
    }
    Lottery::new(entries)
}

/// Result of the GAP-rounding approximation of `maxrank_r(≻_S)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RnkComp {
    pub schedule: Schedule,
    /// Jobs placed, all on top-`r` machines.
    pub count: usize,
    #[serde(with = "crate::rational::text")]
    pub lp_value: Rational,
}

/// Places jobs of `jobs` on top-`r` machines with makespan at most `T`,
/// placing at least `⌈LP/2⌉ >= ⌈maxrank_r(≻_S)/2⌉` of them.
pub fn rnkcomp(inst: &SchedulingInstance, jobs: &[usize], r: usize) -> Result<RnkComp> {
    let m = inst.m();
    let mut vars: Vec<(usize, usize)> = Vec::new();
    for &j in jobs {
        for &i in &inst.profile.list(j)[..r.min(m)] {
            if inst.fits(j, i) {
                vars.push((j, i));
            }
        }
    }
    let mut schedule = Schedule::empty(inst.n());
    if vars.is_empty() {
        return Ok(RnkComp {
            schedule,
            count: 0,
            lp_value: Rational::zero(),
        });
    }
    let mut lp = RationalLP::new(vars.len());
    for &j in jobs {
        let row: Vec<(usize, Rational)> = (0..vars.len())
            .filter(|&v| vars[v].0 == j)
            .map(|v| (v, Rational::one()))
            .collect();
        if !row.is_empty() {
            lp.add_constraint(row, Cmp::Le, Rational::one())?;
        }
    }
    for i in 0..m {
        let row: Vec<(usize, Rational)> = (0..vars.len())
            .filter(|&v| vars[v].1 == i)
            .map(|v| (v, inst.time(vars[v].0, i).expect("fits").clone()))
            .collect();
        if !row.is_empty() {
            lp.add_constraint(row, Cmp::Le, inst.t.clone())?;
        }
    }
    lp.maximize((0..vars.len()).map(|v| (v, Rational::one())).collect());
    let sol = lp.solve()?;

    // Machine slots: jobs in non-increasing p order pour their mass into
    // consecutive unit slots.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); jobs.len()];
    let local = |j: usize| jobs.iter().position(|&x| x == j).expect("job in S");
    let mut slot_machine: Vec<usize> = Vec::new();
    for i in 0..m {
        let mut on_i: Vec<(usize, &Rational)> = (0..vars.len())
            .filter(|&v| vars[v].1 == i && sol.x[v].is_positive())
            .map(|v| (vars[v].0, &sol.x[v]))
            .collect();
        if on_i.is_empty() {
            continue;
        }
        on_i.sort_by(|a, b| inst.time(b.0, i).cmp(&inst.time(a.0, i)).then(a.0.cmp(&b.0)));
        let mut cur = slot_machine.len();
        slot_machine.push(i);
        let mut fill = Rational::zero();
        for (j, x) in on_i {
            let mut rest = x.clone();
            while rest.is_positive() {
                if fill.is_one() {
                    fill = Rational::zero();
                    cur = slot_machine.len();
                    slot_machine.push(i);
                }
                adj[local(j)].push(cur);
                let room = Rational::one() - &fill;
                let take = if rest < room { rest.clone() } else { room };
                fill += &take;
                rest -= &take;
            }
        }
    }
    let matched = hopcroft_karp(slot_machine.len(), &adj);
    for (u, s) in matched.iter().enumerate() {
        if let Some(s) = s {
            schedule.set(jobs[u], Some(slot_machine[*s]));
        }
    }
    // Drop the longest job from every overloaded machine.
    let l = loads(inst, &schedule)?;
    for (i, load) in l.iter().enumerate() {
        if *load > inst.t {
            let worst = schedule
                .holders(i)
                .into_iter()
                .max_by(|&a, &b| inst.time(a, i).cmp(&inst.time(b, i)).then(b.cmp(&a)))
                .expect("overloaded machine has jobs");
            schedule.set(worst, None);
        }
    }
    Ok(RnkComp {
        count: schedule.assigned_count(),
        schedule,
        lp_value: sol.value,
    })
}

/// Rank buckets of the unrelated-machine algorithm.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankBuckets {
    /// `n_r` for `r = 1..=m` (non-decreasing).
    pub n: Vec<usize>,
    /// Bucket starts `r_1 < … < r_k`.
    pub starts: Vec<usize>,
    /// `S_{r_ℓ}` per bucket.
    pub sets: Vec<Vec<usize>>,
    /// First bucket (1-based) with `n_{r_ℓ} >= 2k`, if any.
    pub q: Option<usize>,
}

impl RankBuckets {
    pub fn k(&self) -> usize {
        self.starts.len()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnrelatedRun {
    pub schedule: Schedule,
    pub buckets: RankBuckets,
    /// `σ^r` for `r = 1..=m`, after making `n_r` non-decreasing.
    pub sigmas: Vec<Schedule>,
}

/// Deterministic unrelated-machine algorithm with makespan at most `3T` and
/// `rank_r >= maxrank_r / 24k`.
pub fn unrelated(inst: &SchedulingInstance) -> Result<UnrelatedRun> {
    let m = inst.m();
    let all: Vec<usize> = (0..inst.n()).collect();
    let runs: Vec<RnkComp> = (1..=m)
        .into_par_iter()
        .map(|r| rnkcomp(inst, &all, r))
        .collect::<Result<_>>()?;
    let mut sigmas: Vec<Schedule> = Vec::with_capacity(m);
    for run in runs {
        match sigmas.last() {
            Some(prev) if prev.assigned_count() > run.count => sigmas.push(prev.clone()),
            _ => sigmas.push(run.schedule),
        }
    }
    let n: Vec<usize> = sigmas.iter().map(Assignment::assigned_count).collect();
    let mut starts = Vec::new();
    let mut prev = 0;
    for r in 1..=m {
        if n[r - 1] > 4 * prev {
            starts.push(r);
            prev = n[r - 1];
        }
    }
    let mut sets = Vec::with_capacity(starts.len());
    let mut seen = vec![false; inst.n()];
    for &r in &starts {
        let s: Vec<usize> = sigmas[r - 1].pairs().map(|(j, _)| j).filter(|&j| !seen[j]).collect();
        for (j, _) in sigmas[r - 1].pairs() {
            seen[j] = true;
        }
        sets.push(s);
    }
    let k = starts.len();
    let q = (1..=k).find(|&l| n[starts[l - 1] - 1] >= 2 * k);
    let buckets = RankBuckets { n, starts, sets, q };
    if k == 0 {
        return Ok(UnrelatedRun {
            schedule: Schedule::empty(inst.n()),
            buckets,
            sigmas,
        });
    }
    let first = sigmas[buckets.starts[0] - 1].clone();
    let Some(q) = q else {
        return Ok(UnrelatedRun {
            schedule: first,
            buckets,
            sigmas,
        });
    };
    let g = k - q + 1;
    // σ on S, one variable per job of S.
    let mut s_jobs: Vec<(usize, usize, usize)> = Vec::new();
    for l in q..=k {
        let sig = &sigmas[buckets.starts[l - 1] - 1];
        for &j in &buckets.sets[l - 1] {
            s_jobs.push((j, sig.get(j).expect("job of S_r is scheduled"), l));
        }
    }
    let mut poly = RationalLP::new(s_jobs.len());
    for v in 0..s_jobs.len() {
        poly.set_bounds(v, Some(Rational::zero()), Some(Rational::one()))?;
    }
    for i in 0..m {
        let mut on_i: Vec<usize> = (0..s_jobs.len()).filter(|&v| s_jobs[v].1 == i).collect();
        on_i.sort_by(|&a, &b| {
            inst.time(s_jobs[b].0, i)
                .cmp(&inst.time(s_jobs[a].0, i))
                .then(s_jobs[a].0.cmp(&s_jobs[b].0))
        });
        for chunk in on_i.chunks(g) {
            if chunk.len() > 1 {
                poly.add_constraint(chunk.iter().map(|&v| (v, Rational::one())).collect(), Cmp::Le, Rational::one())?;
            }
        }
    }
    for l in q..=k {
        let row: Vec<(usize, Rational)> = (0..s_jobs.len())
            .filter(|&v| s_jobs[v].2 == l)
            .map(|v| (v, Rational::one()))
            .collect();
        let need = buckets.sets[l - 1].len() / g;
        if !row.is_empty() && need > 0 {
            poly.add_constraint(row, Cmp::Ge, from_usize(need))?;
        }
    }
    let target = vec![Rational::one() / from_usize(g); s_jobs.len()];
    let y = decompose(&target, &poly)?.points.swap_remove(0);
    let mut extra = Schedule::empty(inst.n());
    for (v, &(j, i, _)) in s_jobs.iter().enumerate() {
        if y[v].is_one() {
            extra.set(j, Some(i));
        }
    }
    Ok(UnrelatedRun {
        schedule: first.merge(&extra)?,
        buckets,
        sigmas,
    })
}

/// Parallel-machine instance on which every schedule of makespan `βT` has
/// rank-approximation factor `Ω(k/β)`. Requires `1 <= k <= m`.
///
/// For `i < k`, group `A^(i)` holds `2^{i-1}` jobs of size `T/2^{i-1}` per
/// machine `ℓ = i..=m`; those jobs rank machine `r` at position `r` for
/// `r < i` and machine `ℓ` at position `i`. Group `A^(k)` holds `2^k·m` jobs
/// of size `T/2^k`, spread round-robin over `ℓ = k..=m`, with the same
/// pattern at position `k`.
pub fn gen_parallel_lb(m: usize, k: usize, t: Rational) -> Result<SchedulingInstance> {
    if k == 0 || k > m || k > 16 {
        return Err(Error::domain("gen_parallel_lb needs 1 <= k <= min(m, 16)"));
    }
    let mut lists = Vec::new();
    let mut sizes = Vec::new();
    let head = |i: usize, l: usize| -> Vec<usize> {
        let mut h: Vec<usize> = (0..i - 1).collect();
        h.push(l - 1);
        crate::matching::fill_tail(h, m)
    };
    for i in 1..k {
        let size = &t / from_usize(1 << (i - 1));
        for l in i..=m {
            for _ in 0..1usize << (i - 1) {
                lists.push(head(i, l));
                sizes.push(Some(size.clone()));
            }
        }
    }
    let size = &t / from_usize(1 << k);
    let parts = m - k + 1;
    for c in 0..(1usize << k) * m {
        lists.push(head(k, k + c % parts));
        sizes.push(Some(size.clone()));
    }
    SchedulingInstance::parallel(sizes, t, StrictProfile::new(m, lists)?)
}

/// Witness schedule for `maxrank_r >= 2^{r-1}·m` on [`gen_parallel_lb`]
/// instances, `r <= k`.
pub fn parallel_lb_witness(inst: &SchedulingInstance, k: usize, r: usize) -> Schedule {
    let m = inst.m();
    let mut s = Schedule::empty(inst.n());
    let mut load = vec![Rational::zero(); m];
    for j in 0..inst.n() {
        let size = inst.time(j, 0).expect("finite sizes").clone();
        let big = (r < k && size == &inst.t / from_usize(1 << (r - 1))) || (r == k && size == &inst.t / from_usize(1 << k));
        let small = size == &inst.t / from_usize(1 << k);
        let target = if big {
            Some(inst.profile.alt(j, r))
        } else if small {
            (1..r).map(|x| x - 1).find(|&i| &load[i] + &size <= inst.t)
        } else {
            None
        };
        if let Some(i) = target {
            if &load[i] + &size <= inst.t {
                load[i] += &size;
                s.set(j, Some(i));
            }
        }
    }
    s
}

/// Floor of `rank_r(σ)/k` for every `r`, as used by [`parallel_rand`].
pub fn floor_ranks(ranks: &[usize], k: usize) -> Vec<usize> {
    ranks.iter().map(|&c| floor_usize(&(from_usize(c) / from_usize(k.max(1))))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::rank_approx_factor;
    use crate::rational::{int, q};
    use crate::verify::{classify_truthfulness, Domain, TruthClass};
    use proptest::prelude::*;

    fn parallel(p: Vec<Rational>, t: i64, lists: Vec<Vec<usize>>) -> SchedulingInstance {
        let m = lists[0].len();
        SchedulingInstance::parallel(p.into_iter().map(Some).collect(), int(t), StrictProfile::new(m, lists).unwrap())
            .unwrap()
    }

    /// Exhaustive oracle: every assignment of each job to a top-`r` machine or nowhere.
    fn brute_maxrank(inst: &SchedulingInstance, jobs: &[usize], r: usize) -> usize {
        let base = r + 1;
        let mut best = 0;
        for code in 0..base.pow(jobs.len() as u32) {
            let mut c = code;
            let mut s = Schedule::empty(inst.n());
            let mut ok = true;
            for &j in jobs {
                let d = c % base;
                c /= base;
                if d > 0 {
                    let i = inst.profile.alt(j, d);
                    if inst.time(j, i).is_none() {
                        ok = false;
                        break;
                    }
                    s.set(j, Some(i));
                }
            }
            if ok && makespan(inst, &s).unwrap() <= inst.t {
                best = best.max(s.assigned_count());
            }
        }
        best
    }

    #[test]
    fn bucket_boundaries() {
        let inst = parallel(vec![int(4); 4], 4, vec![vec![0, 1]; 4]);
        let c = bucketize(&inst).unwrap();
        assert_eq!(c.k, 2);
        assert_eq!(c.classes, vec![vec![0], vec![], vec![1, 2, 3]]);
        let inst = parallel(vec![int(1); 4], 4, vec![vec![0, 1]; 4]);
        assert_eq!(bucketize(&inst).unwrap().classes[0], vec![0, 1, 2, 3]);
        let inst = parallel(vec![int(5), q(3, 2), int(2), int(1)], 4, vec![vec![0, 1]; 4]);
        let c = bucketize(&inst).unwrap();
        assert_eq!(c.dropped, vec![0]);
        assert_eq!(c.designated, Some(1));
        assert_eq!(c.classes, vec![vec![1, 3], vec![2], vec![]]);
    }

    #[test]
    fn single_machine_unit_jobs() {
        let inst = parallel(vec![int(1); 5], 3, vec![vec![0]; 5]);
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(maxrank_sched(&inst, &all, 1).unwrap(), 3);
        assert_eq!(maxrank_sched(&inst, &all[..2], 1).unwrap(), 2);
        let big: Vec<usize> = (0..13).collect();
        assert!(matches!(maxrank_sched(&inst, &big, 1), Err(Error::Resource { .. })));
    }

    #[test]
    fn rnkcomp_single_job() {
        let inst = parallel(vec![int(1)], 2, vec![vec![0, 1]]);
        let out = rnkcomp(&inst, &[0], 1).unwrap();
        assert_eq!(out.count, 1);
        assert_eq!(out.schedule.get(0), Some(0));
    }

    #[test]
    fn unrelated_all_too_long() {
        let p = vec![vec![Some(int(5)), None], vec![None, Some(int(9))]];
        let inst = SchedulingInstance::new(p, int(4), StrictProfile::new(2, vec![vec![0, 1], vec![1, 0]]).unwrap()).unwrap();
        let run = unrelated(&inst).unwrap();
        assert_eq!(run.schedule, Schedule::empty(2));
        assert_eq!(run.buckets.k(), 0);
    }

    #[test]
    fn single_class_is_degenerate() {
        // n = 2, k = 1: job 0 is designated, job 1 alone in N_1.
        let inst = parallel(vec![int(2), int(2)], 2, vec![vec![0, 1], vec![0, 1]]);
        let run = parallel_rand(&inst).unwrap();
        assert_eq!(run.lottery.support_size(), 1);
        assert_eq!(run.decomposition.points.len(), 1);
    }

    #[test]
    fn parallel_lb_shape() {
        let inst = gen_parallel_lb(2, 1, int(8)).unwrap();
        assert_eq!(inst.n(), 4);
        let inst = gen_parallel_lb(4, 3, int(8)).unwrap();
        assert_eq!(inst.n(), 4 + 2 * 3 + 8 * 4);
        for r in 1..=3 {
            let w = parallel_lb_witness(&inst, 3, r);
            assert!(makespan(&inst, &w).unwrap() <= inst.t);
            assert!(rank_counts(&inst, &w)[r - 1] >= (1 << (r - 1)) * 4);
        }
        let small = gen_parallel_lb(2, 2, int(4)).unwrap();
        let all: Vec<usize> = (0..small.n()).collect();
        for r in 1..=2 {
            let exact = maxrank_sched(&small, &all, r).unwrap();
            assert!(exact >= (1 << (r - 1)) * 2);
            assert_eq!(exact, brute_maxrank(&small, &all, r));
        }
    }

    #[test]
    fn parallel_lb_tradeoff() {
        // Every schedule satisfies α·β·2(m + 2^{k+1}) >= k·m against the witness bounds.
        for (m, k) in [(4, 2), (4, 3), (8, 3)] {
            let inst = gen_parallel_lb(m, k, int(8)).unwrap();
            let det = parallel_det(&inst).unwrap();
            let mut runs = vec![det];
            runs.extend(parallel_rand(&inst).unwrap().lottery.iter().map(|(s, _)| s.clone()));
            for s in runs {
                let beta = makespan(&inst, &s).unwrap() / &inst.t;
                let counts = rank_counts(&inst, &s);
                let lower: Vec<usize> = (1..=k).map(|r| (1 << (r - 1)) * m).collect();
                let e: Vec<Rational> = counts[..k].iter().map(|&c| from_usize(c)).collect();
                let alpha = rank_approx_factor(&e, &lower).unwrap();
                if let Some(a) = alpha.finite() {
                    assert!(a * &beta * from_usize(2 * (m + (1 << (k + 1)))) >= from_usize(k * m));
                }
            }
        }
    }

    #[test]
    fn lt_wrapper_is_lex_on_small_domain() {
        let eps = q(1, 10);
        for p in [vec![int(3), int(3), int(2)], vec![int(4), int(4), int(3), int(2)]] {
            let n = p.len();
            let inst = parallel(p, 3, vec![vec![0, 1]; n]);
            let sched = EpsilonSchedule::linear(eps.clone(), 2).unwrap();
            let mech = |reports: &[Vec<usize>]| {
                parallel_rand_lt(&inst.with_profile(StrictProfile::new(2, reports.to_vec())?)?, &sched)
            };
            let truthful = mech(&vec![vec![0, 1]; n]).unwrap();
            let base = parallel_rand(&inst).unwrap();
            for (s, w) in base.lottery.iter() {
                assert!(truthful.prob(s) >= (Rational::one() - &eps) * w);
            }
            for (s, _) in truthful.iter() {
                for &j in &base.classes.classes[0] {
                    assert_eq!(s.get(j), Some(inst.profile.alt(j, 1)));
                }
            }
            let report = classify_truthfulness(&mech, &Domain::full_strict(n, 2)).unwrap();
            assert!(report.class >= TruthClass::Lex, "{:?}", report.lex);
        }
    }

    fn arb_parallel(max_n: usize, max_m: usize) -> impl Strategy<Value = SchedulingInstance> {
        (1..=max_n, 1..=max_m, 1i64..=12).prop_flat_map(|(n, m, t)| {
            (
                proptest::collection::vec(1i64..=14, n),
                proptest::collection::vec(Just((0..m).collect::<Vec<_>>()).prop_shuffle(), n),
            )
                .prop_map(move |(p, lists)| {
                    SchedulingInstance::parallel(
                        p.into_iter().map(|x| Some(q(x, 2))).collect(),
                        int(t),
                        StrictProfile::new(m, lists).unwrap(),
                    )
                    .unwrap()
                })
        })
    }

    fn arb_unrelated(max_n: usize, max_m: usize) -> impl Strategy<Value = SchedulingInstance> {
        (1..=max_n, 1..=max_m, 2i64..=10).prop_flat_map(|(n, m, t)| {
            (
                proptest::collection::vec(proptest::collection::vec(proptest::option::weighted(0.85, 1i64..=12), m), n),
                proptest::collection::vec(Just((0..m).collect::<Vec<_>>()).prop_shuffle(), n),
            )
                .prop_map(move |(p, lists)| {
                    let p = p
                        .into_iter()
                        .map(|row| row.into_iter().map(|x| x.map(|v| q(v, 2))).collect())
                        .collect();
                    SchedulingInstance::new(p, int(t), StrictProfile::new(m, lists).unwrap()).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bucketize_matches_predicates(inst in arb_parallel(10, 3)) {
            let c = bucketize(&inst).unwrap();
            let n = from_usize(inst.n());
            for j in 0..inst.n() {
                let p = inst.time(j, 0).unwrap();
                if *p > inst.t {
                    prop_assert!(c.dropped.contains(&j));
                    continue;
                }
                let l = c.class_of(j).unwrap();
                if Some(j) == c.designated {
                    prop_assert_eq!(l, 0);
                } else if l == 0 {
                    prop_assert!(p * &n <= inst.t);
                } else {
                    let lo = &inst.t * from_usize(1 << (l - 1)) / &n;
                    prop_assert!(*p > lo && *p <= &lo * from_usize(2));
                }
            }
        }

        #[test]
        fn branch_and_bound_matches_brute_force(inst in arb_unrelated(6, 3), r in 1usize..=3) {
            let r = r.min(inst.m());
            let all: Vec<usize> = (0..inst.n()).collect();
            prop_assert_eq!(maxrank_sched(&inst, &all, r).unwrap(), brute_maxrank(&inst, &all, r));
            let (a, b) = all.split_at(inst.n() / 2);
            prop_assert!(maxrank_sched(&inst, &all, r).unwrap()
                <= maxrank_sched(&inst, a, r).unwrap() + maxrank_sched(&inst, b, r).unwrap());
        }

        #[test]
        fn parallel_det_guarantees(inst in arb_parallel(6, 3)) {
            let s = parallel_det(&inst).unwrap();
            let c = bucketize(&inst).unwrap();
            for l in 1..=c.k {
                for i in 0..inst.m() {
                    let on = c.classes[l].iter().filter(|&&j| s.get(j) == Some(i)).count();
                    prop_assert!(on <= class_capacity(inst.n(), l));
                }
            }
            let ms = makespan(&inst, &s).unwrap();
            prop_assert!(ms <= &inst.t * from_usize(2 * (c.k + 1)));
            let all: Vec<usize> = (0..inst.n()).collect();
            let mr = maxranks_sched(&inst, &all).unwrap();
            let e: Vec<Rational> = rank_counts(&inst, &s).into_iter().map(from_usize).collect();
            prop_assert!(rank_approx_factor(&e, &mr).unwrap().at_most(&int(2)));
        }

        #[test]
        fn parallel_rand_guarantees(inst in arb_parallel(10, 3)) {
            let run = parallel_rand(&inst).unwrap();
            prop_assert_eq!(run.decomposition.recompose(), run.target.clone());
            prop_assert!(crate::lp::verify_tu_laminar(&run.polytope));
            let k = run.classes.k.max(1);
            let n0 = run.classes.classes[0].len();
            let all: Vec<usize> = (0..inst.n()).collect();
            let mr = maxranks_sched(&inst, &all).unwrap();
            for (s, _) in run.lottery.iter() {
                prop_assert!(makespan(&inst, s).unwrap() <= &inst.t * from_usize(8));
                let counts = rank_counts(&inst, s);
                for r in 0..inst.m() {
                    prop_assert!(counts[r] >= n0 + run.b[r]);
                    prop_assert!(mr[r] <= 4 * k * (n0 + run.b[r]));
                }
            }
            for &j in &run.edge_jobs {
                let marginal: Rational = run.lottery.iter().filter(|(s, _)| s.get(j).is_some()).map(|(_, w)| w.clone()).sum();
                prop_assert_eq!(marginal, Rational::one() / from_usize(k));
            }
            prop_assert_eq!(floor_ranks(&rank_counts(&inst, &run.sigma), k), run.b.clone());
        }

        #[test]
        fn rnkcomp_half_of_optimum(inst in arb_unrelated(6, 3), r in 1usize..=3) {
            let r = r.min(inst.m());
            let all: Vec<usize> = (0..inst.n()).collect();
            let out = rnkcomp(&inst, &all, r).unwrap();
            prop_assert!(makespan(&inst, &out.schedule).unwrap() <= inst.t);
            for (j, i) in out.schedule.pairs() {
                prop_assert!(inst.profile.position(j, i) <= r);
            }
            let opt = maxrank_sched(&inst, &all, r).unwrap();
            prop_assert!(out.lp_value >= from_usize(opt));
            prop_assert!(from_usize(2 * out.count) >= out.lp_value);
            prop_assert!(2 * out.count >= opt);
        }

        #[test]
        fn unrelated_guarantees(inst in arb_unrelated(6, 3)) {
            let run = unrelated(&inst).unwrap();
            prop_assert!(makespan(&inst, &run.schedule).unwrap() <= &inst.t * from_usize(3));
            let all: Vec<usize> = (0..inst.n()).collect();
            let mr = maxranks_sched(&inst, &all).unwrap();
            let counts = rank_counts(&inst, &run.schedule);
            let k = run.buckets.k();
            for r in 0..inst.m() {
                prop_assert!(24 * k * counts[r] >= mr[r]);
            }
            if let Some(q) = run.buckets.q {
                let g = k - q + 1;
                for l in q..=k {
                    let lo = run.buckets.starts[l - 1];
                    let hi = run.buckets.starts.get(l).copied().unwrap_or(inst.m() + 1);
                    for r in lo..hi {
                        prop_assert!(counts[r - 1] >= run.buckets.sets[l - 1].len() / g);
                    }
                }
            }
        }
    }
}
