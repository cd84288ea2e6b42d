//! General ordinal settings: every agent ranks the full outcome set and any
//! outcome is feasible.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{Cmp, RationalLP};
use crate::matching::fill_tail;
use crate::prefs::{
    expected_counts, histogram, maxranks_by_enumeration, rank_approx_factor, Factor, Lottery, Ranking, StrictProfile,
};
use crate::rational::{self, from_usize, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralInstance {
    pub profile: StrictProfile,
}

impl GeneralInstance {
    pub fn new(profile: StrictProfile) -> Self {
        GeneralInstance { profile }
    }

    pub fn from_lists(m: usize, lists: Vec<Vec<usize>>) -> Result<Self> {
        Ok(GeneralInstance::new(StrictProfile::new(m, lists)?))
    }

    pub fn n(&self) -> usize {
        self.profile.n_agents()
    }

    pub fn m(&self) -> usize {
        self.profile.n_items()
    }

    /// `maxrank_r` for every `r`, by enumerating all outcomes.
    pub fn maxranks(&self) -> Vec<usize> {
        maxranks_by_enumeration(&self.profile)
    }

    /// Lowest-index outcome attaining `maxrank_r`.
    pub fn argmax(&self, r: usize) -> usize {
        let mut best = (0, 0);
        for o in 0..self.m() {
            let c = histogram(&self.profile, o).expect("outcome in range").rank(r);
            if c > best.1 {
                best = (o, c);
            }
        }
        best.0
    }
}

/// Bucket starts `r_1 = 1 < r_2 < …`: a new bucket opens at the first rank
/// whose `maxrank` exceeds twice the `maxrank` at the current bucket start.
pub fn randrank_buckets(maxranks: &[usize]) -> Vec<usize> {
    let mut starts = Vec::new();
    for (idx, &nr) in maxranks.iter().enumerate() {
        match starts.last() {
            None => starts.push(idx + 1),
            Some(&s) if nr > 2 * maxranks[s - 1] => starts.push(idx + 1),
            _ => {}
        }
    }
    starts
}

/// Picks a bucket uniformly and returns the argmax outcome of its start rank.
pub fn randrank(inst: &GeneralInstance) -> Result<Lottery<usize>> {
    if inst.m() == 0 {
        return Err(Error::domain("no outcomes"));
    }
    let starts = randrank_buckets(&inst.maxranks());
    let k = from_usize(starts.len());
    Lottery::new(starts.iter().map(|&r| (inst.argmax(r), Rational::one() / &k)))
}

/// Plurality with lowest-index tie-break, from the agents' top choices.
pub fn plurality_of_tops(tops: &[usize], m: usize) -> usize {
    let mut count = vec![0usize; m];
    for &t in tops {
        count[t] += 1;
    }
    let mut best = 0;
    for o in 1..m {
        if count[o] > count[best] {
            best = o;
        }
    }
    best
}

pub fn plurality(inst: &GeneralInstance) -> usize {
    let tops: Vec<usize> = (0..inst.n()).map(|j| inst.profile.alt(j, 1)).collect();
    plurality_of_tops(&tops, inst.m())
}

/// Agent `agent`'s top outcome.
pub fn dictatorship(inst: &GeneralInstance, agent: usize) -> usize {
    inst.profile.alt(agent, 1)
}

/// `n` agents with distinct tops `0..n` and common second choice `n`.
pub fn gen_det_lb(n: usize) -> Result<GeneralInstance> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let lists = (0..n).map(|j| fill_tail(vec![j, n], n + 1)).collect();
    GeneralInstance::from_lists(n + 1, lists)
}

/// Size parameters `(n, m)` of the randomized lower-bound instance.
pub fn randrank_lb_size(k: usize) -> (usize, usize) {
    let n = (1usize << (k + 1)) - 2;
    (n, (k - 1) * n + k)
}

/// Groups `A_ℓ` of `2^ℓ` consecutive agents (`ℓ = 1..=k`). Outcome `ℓ - 1` is
/// the special outcome `o_ℓ`, ranked `ℓ`-th by group `A_ℓ`; agent `j` fills its
/// other top-`k` positions with its private outcomes `k + j(k-1) + t`.
pub fn gen_randrank_lb(k: usize) -> Result<GeneralInstance> {
    if k == 0 || k > 12 {
        return Err(Error::domain("k must lie in 1..=12"));
    }
    let (n, m) = randrank_lb_size(k);
    let mut lists = Vec::with_capacity(n);
    let mut j = 0;
    for l in 1..=k {
        for _ in 0..1usize << l {
            let mut own = (0..k - 1).map(|t| k + j * (k - 1) + t);
            let head: Vec<usize> = (1..=k)
                .map(|pos| if pos == l { l - 1 } else { own.next().expect("k - 1 private outcomes") })
                .collect();
            lists.push(fill_tail(head, m));
            j += 1;
        }
    }
    GeneralInstance::from_lists(m, lists)
}

/// Optimal simultaneous guarantee of any lottery over outcomes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BestLottery {
    /// Largest `a` with `E[rank_r] >= a·maxrank_r` for all `r` (fraction convention).
    #[serde(with = "rational::text")]
    pub fraction: Rational,
    /// `1 / fraction`, the rank-approximation factor.
    #[serde(serialize_with = "factor_text")]
    pub factor: Factor,
    #[serde(with = "rational::text_vec")]
    pub weights: Vec<Rational>,
}

fn factor_text<S: serde::Serializer>(f: &Factor, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_string())
}

/// The LP over lottery weights `p_0..p_{m-1}` (variables `0..m`) and the
/// fraction `a` (variable `m`): maximize `a` subject to
/// `Σ_o p_o·rank_r(o) >= a·maxrank_r` for every `r` with `maxrank_r > 0`.
pub fn best_factor_lp(inst: &GeneralInstance) -> RationalLP {
    let m = inst.m();
    let mr = inst.maxranks();
    let hists: Vec<Vec<usize>> = (0..m)
        .map(|o| histogram(&inst.profile, o).expect("outcome in range").counts)
        .collect();
    let mut lp = RationalLP::new(m + 1);
    lp.add_constraint((0..m).map(|o| (o, Rational::one())).collect(), Cmp::Eq, Rational::one())
        .expect("variables exist");
    for (r, &n_r) in mr.iter().enumerate() {
        if n_r == 0 {
            continue;
        }
        let mut row: Vec<(usize, Rational)> = (0..m)
            .filter(|&o| hists[o][r] > 0)
            .map(|o| (o, from_usize(hists[o][r])))
            .collect();
        row.push((m, -from_usize(n_r)));
        lp.add_constraint(row, Cmp::Ge, Rational::zero()).expect("variables exist");
    }
    lp.maximize(vec![(m, Rational::one())]);
    lp
}

pub fn best_factor_lottery(inst: &GeneralInstance) -> Result<BestLottery> {
    let sol = best_factor_lp(inst).solve()?;
    let fraction = sol.value;
    let factor = if fraction.is_zero() {
        Factor::Infinite
    } else {
        Factor::Finite(fraction.recip())
    };
    Ok(BestLottery {
        fraction,
        factor,
        weights: sol.x[..inst.m()].to_vec(),
    })
}

/// Rank-approximation factor of a lottery over outcomes.
pub fn lottery_factor(inst: &GeneralInstance, lottery: &Lottery<usize>) -> Result<Factor> {
    let e = expected_counts(lottery, |o| histogram(&inst.profile, *o).expect("outcome in range"));
    rank_approx_factor(&e, &inst.maxranks())
}
