use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ordmech::io::{ProfileDoc, ProfileKind, SchedDoc};
use ordmech::matroid::MatroidSpec;
use ordmech::rational::q;
use ordmech::sched::{self, SchedulingInstance};
use ordmech::{general, matching, Rational, StrictProfile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::failure::{emit, rational_arg, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Matching lower bound, `--K`.
    MatchingLb,
    /// Grouped PS instance, `--n`.
    Sqrt,
    /// Deterministic general lower bound, `--n`.
    DetLb,
    /// Randomized general lower bound, `--k`.
    RandrankLb,
    /// Parallel-machine lower bound, `--m --k --T`.
    ParallelLb,
    /// Uniformly random strict profile (matching market), `--n --m`.
    RandomMatching,
    /// Uniformly random general instance, `--n --m`.
    RandomGeneral,
    /// Random matroid market with uniform matroids, `--n --m`.
    RandomMatroid,
    /// Random parallel-machine instance, `--n --m`.
    RandomParallel,
    /// Random unrelated-machine instance, `--n --m`.
    RandomUnrelated,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub family: Family,
    #[arg(long = "K")]
    pub big_k: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Makespan bound for scheduling families.
    #[arg(long = "T", default_value = "1")]
    pub t: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn need(v: Option<usize>, flag: &str) -> Result<usize, Failure> {
    v.ok_or_else(|| Failure::Invalid(format!("this family needs --{flag}")))
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

/// Processing times are multiples of `T/4` in `(0, T]` for parallel machines;
/// unrelated times range over `(0, 3T/2]` with about one pair in seven
/// infeasible.
pub fn random_sched(rng: &mut impl Rng, n: usize, m: usize, t: &Rational, parallel: bool) -> Result<SchedulingInstance, Failure> {
    let profile = StrictProfile::new(m, random_lists(rng, n, m))?;
    let inst = if parallel {
        let p = (0..n).map(|_| Some(t * q(rng.gen_range(1..=4), 4))).collect();
        SchedulingInstance::parallel(p, t.clone(), profile)?
    } else {
        let p = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| (rng.gen_range(0..7) != 0).then(|| t * q(rng.gen_range(1..=6), 4)))
                    .collect()
            })
            .collect();
        SchedulingInstance::new(p, t.clone(), profile)?
    };
    Ok(inst)
}

pub fn random_matroid_doc(rng: &mut impl Rng, n: usize, m: usize) -> Result<ProfileDoc, Failure> {
    let profile = StrictProfile::new(m, random_lists(rng, n, m))?;
    let mut doc = ProfileDoc::strict(ProfileKind::Strict, &profile);
    doc.matroids = Some((0..m).map(|_| MatroidSpec::Uniform { k: rng.gen_range(1..=2) }).collect());
    Ok(doc)
}

enum Generated {
    Profile(ProfileDoc),
    Sched(SchedulingInstance),
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let t = rational_arg(&args.t)?;
    let strict = |kind, p: &StrictProfile| Generated::Profile(ProfileDoc::strict(kind, p));
    let g = match args.family {
        Family::MatchingLb => strict(ProfileKind::Strict, &matching::gen_matching_lb(need(args.big_k, "K")?)?.profile),
        Family::Sqrt => strict(ProfileKind::Strict, &matching::gen_sqrt_instance(need(args.n, "n")?)?.profile),
        Family::DetLb => strict(ProfileKind::General, &general::gen_det_lb(need(args.n, "n")?)?.profile),
        Family::RandrankLb => strict(ProfileKind::General, &general::gen_randrank_lb(need(args.k, "k")?)?.profile),
        Family::ParallelLb => Generated::Sched(sched::gen_parallel_lb(need(args.m, "m")?, need(args.k, "k")?, t)?),
        Family::RandomMatching | Family::RandomGeneral => {
            let (n, m) = (need(args.n, "n")?, need(args.m, "m")?);
            let kind = if args.family == Family::RandomGeneral {
                ProfileKind::General
            } else {
                ProfileKind::Strict
            };
            strict(kind, &StrictProfile::new(m, random_lists(&mut rng, n, m))?)
        }
        Family::RandomMatroid => Generated::Profile(random_matroid_doc(&mut rng, need(args.n, "n")?, need(args.m, "m")?)?),
        Family::RandomParallel | Family::RandomUnrelated => Generated::Sched(random_sched(
            &mut rng,
            need(args.n, "n")?,
            need(args.m, "m")?,
            &t,
            args.family == Family::RandomParallel,
        )?),
    };
    let (text, stats) = match g {
        Generated::Profile(doc) => {
            let maxranks = match (doc.kind, &doc.matroids) {
                (_, Some(_)) => Some(ordmech::matroid::maxranks_matroid(&doc.matroid_market()?)),
                (ProfileKind::General, _) => Some(doc.general()?.maxranks()),
                (ProfileKind::Strict, _) => Some(matching::maxranks_matching(&doc.matching()?)),
                (ProfileKind::Indiff, _) => None,
            };
            (doc.to_json(), format!("n={} m={} maxranks={:?}", doc.n, doc.m, maxranks.unwrap_or_default()))
        }
        Generated::Sched(inst) => {
            let all: Vec<usize> = (0..inst.n()).collect();
            let mr = match sched::maxranks_sched(&inst, &all) {
                Ok(mr) => format!("{mr:?}"),
                Err(_) => "omitted (instance too large for the exact oracle)".to_string(),
            };
            let stats = format!(
                "n={} m={} T={} maxranks={mr}",
                inst.n(),
                inst.m(),
                ordmech::rational::to_text(&inst.t)
            );
            (SchedDoc::of(&inst).to_json(), stats)
        }
    };
    eprintln!("{stats}");
    emit(args.out.as_deref(), &text)
}
