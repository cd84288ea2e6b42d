use clap::ValueEnum;
use ordmech::io::{factor_csv, lottery_json, ProfileDoc, SchedDoc};
use ordmech::matching::{self, MatchingInstance, RSD_EXACT_LIMIT};
use ordmech::prefs::{expected_counts, histogram, histogram_of, rank_approx_factor};
use ordmech::rational::to_text;
use ordmech::sched::{self, SchedulingInstance};
use ordmech::verify::{lt_wrapper_linear, EpsilonSchedule};
use ordmech::{general, matroid, Assignment, Lottery, Rational, StrictProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::failure::{emit, rational_arg, read, Failure};
use crate::{Format, RunOpts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Maxmatch,
    MaxmatchLt,
    SerialDictatorship,
    Rsd,
    Ttca,
    Ps,
    Randrank,
    Plurality,
    PluralityLt,
    Dictator,
    BestLottery,
    MatroidMaxmatch,
    Det,
    Rand,
    RandLt,
    Unrelated,
}

/// What a run produced, before formatting.
pub struct RunResult {
    pub fields: Map<String, Value>,
    pub ranks: Vec<Rational>,
    pub maxranks: Option<Vec<usize>>,
    pub notice: Option<String>,
}

impl RunResult {
    fn new(ranks: Vec<Rational>, maxranks: Option<Vec<usize>>) -> Self {
        RunResult {
            fields: Map::new(),
            ranks,
            maxranks,
            notice: None,
        }
    }

    fn with(mut self, key: &str, v: Value) -> Self {
        self.fields.insert(key.to_string(), v);
        self
    }

    pub fn factor(&self) -> Option<ordmech::Factor> {
        self.maxranks
            .as_ref()
            .and_then(|mr| rank_approx_factor(&self.ranks, mr).ok())
    }
}

fn texts(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(to_text(x))).collect())
}

fn assignment_ranks(p: &StrictProfile, a: &Assignment) -> Vec<Rational> {
    histogram_of(p, a).as_rationals()
}

fn lottery_ranks(p: &StrictProfile, l: &Lottery<Assignment>) -> Vec<Rational> {
    expected_counts(l, |a| histogram_of(p, a))
}

fn identity(n: usize, m: usize) -> Result<Assignment, Failure> {
    if n != m {
        return Err(Failure::Invalid("this algorithm needs as many items as agents".into()));
    }
    Ok(Assignment((0..n).map(Some).collect()))
}

fn eps(opts: &RunOpts) -> Result<Rational, Failure> {
    rational_arg(&opts.eps)
}

fn matching_run(algo: Algo, inst: &MatchingInstance, opts: &RunOpts) -> Result<RunResult, Failure> {
    let p = &inst.profile;
    let mr = Some(matching::maxranks_matching(inst));
    let point = |a: Assignment| RunResult::new(assignment_ranks(p, &a), mr.clone()).with("outcome", json!(a));
    let lottery = |l: Lottery<Assignment>| RunResult::new(lottery_ranks(p, &l), mr.clone()).with("lottery", lottery_json(&l));
    Ok(match algo {
        Algo::Maxmatch => point(matching::max_match(inst)),
        Algo::SerialDictatorship => point(matching::serial_dictatorship(inst, &(0..inst.n()).collect::<Vec<_>>())),
        Algo::Ttca => point(matching::ttca(inst, &identity(inst.n(), inst.m())?)?),
        Algo::MaxmatchLt => {
            let m = inst.m();
            let mech = lt_wrapper_linear(
                move |r: &[Vec<usize>]| Ok(matching::max_match(&MatchingInstance::from_lists(m, r.to_vec())?)),
                eps(opts)?,
            );
            lottery(mech(p.lists())?)
        }
        Algo::Rsd => {
            if inst.n() > RSD_EXACT_LIMIT {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                let mut r = lottery(matching::rsd_sampled(inst, opts.samples, &mut rng)?);
                r.notice = Some(format!("RSD sampled with {} orders (seed {})", opts.samples, opts.seed));
                r.with("sampled", json!(true))
            } else {
                lottery(matching::rsd(inst)?)
            }
        }
        Algo::Ps => {
            let x = matching::ps(inst)?;
            let table: Vec<Value> = x.x.iter().map(|row| texts(row)).collect();
            lottery(matching::bvn_decompose(&x)?).with("x", Value::Array(table))
        }
        _ => unreachable!("not a matching algorithm"),
    })
}

fn general_run(algo: Algo, inst: &general::GeneralInstance, opts: &RunOpts) -> Result<RunResult, Failure> {
    let p = &inst.profile;
    let mr = Some(inst.maxranks());
    let point = |o: usize| -> Result<RunResult, Failure> {
        Ok(RunResult::new(histogram(p, o)?.as_rationals(), mr.clone()).with("outcome", json!(o)))
    };
    let lottery = |l: Lottery<usize>| -> Result<RunResult, Failure> {
        let e = expected_counts(&l, |o| histogram(p, *o).expect("outcome in range"));
        Ok(RunResult::new(e, mr.clone()).with("lottery", lottery_json(&l)))
    };
    match algo {
        Algo::Plurality => point(general::plurality(inst)),
        Algo::Dictator => {
            if opts.agent >= inst.n() {
                return Err(Failure::Invalid(format!("no agent {}", opts.agent)));
            }
            point(general::dictatorship(inst, opts.agent))
        }
        Algo::PluralityLt => {
            let m = inst.m();
            let mech = lt_wrapper_linear(
                move |r: &[Vec<usize>]| {
                    let tops: Vec<usize> = r.iter().map(|l| l[0]).collect();
                    Ok(general::plurality_of_tops(&tops, m))
                },
                eps(opts)?,
            );
            lottery(mech(p.lists())?)
        }
        Algo::Randrank => {
            let l = general::randrank(inst)?;
            let starts = general::randrank_buckets(&inst.maxranks());
            Ok(lottery(l)?.with("buckets", json!(starts)))
        }
        Algo::BestLottery => {
            let b = general::best_factor_lottery(inst)?;
            let l = Lottery::new(b.weights.iter().cloned().enumerate())?;
            Ok(lottery(l)?
                .with("fraction", json!(to_text(&b.fraction)))
                .with("optimal_factor", json!(b.factor.to_string())))
        }
        _ => unreachable!("not a general algorithm"),
    }
}

fn sched_run(algo: Algo, inst: &SchedulingInstance, opts: &RunOpts) -> Result<RunResult, Failure> {
    let all: Vec<usize> = (0..inst.n()).collect();
    let (mr, notice) = match sched::maxranks_sched(inst, &all) {
        Ok(mr) => (Some(mr), None),
        Err(e) => (None, Some(format!("maxrank columns omitted: {e}"))),
    };
    let p = &inst.profile;
    let t = &inst.t;
    let ms = |s: &Assignment| -> Result<Rational, Failure> { Ok(sched::makespan(inst, s)? / t) };
    let mut res = match algo {
        Algo::Det => {
            let s = sched::parallel_det(inst)?;
            RunResult::new(assignment_ranks(p, &s), mr)
                .with("makespan_over_T", json!(to_text(&ms(&s)?)))
                .with("outcome", json!(s))
        }
        Algo::Unrelated => {
            let run = sched::unrelated(inst)?;
            RunResult::new(assignment_ranks(p, &run.schedule), mr)
                .with("makespan_over_T", json!(to_text(&ms(&run.schedule)?)))
                .with("buckets", json!(run.buckets))
                .with("outcome", json!(run.schedule))
        }
        Algo::Rand | Algo::RandLt => {
            let l = if algo == Algo::Rand {
                sched::parallel_rand(inst)?.lottery
            } else {
                sched::parallel_rand_lt(inst, &EpsilonSchedule::linear(eps(opts)?, inst.m())?)?
            };
            let worst = l.iter().map(|(s, _)| ms(s)).collect::<Result<Vec<_>, _>>()?.into_iter().max();
            RunResult::new(lottery_ranks(p, &l), mr)
                .with("makespan_over_T", json!(worst.map(|w| to_text(&w))))
                .with("lottery", lottery_json(&l))
        }
        _ => unreachable!("not a scheduling algorithm"),
    };
    res.notice = notice;
    Ok(res)
}

pub fn execute(algo: Algo, text: &str, opts: &RunOpts) -> Result<RunResult, Failure> {
    match algo {
        Algo::Det | Algo::Rand | Algo::RandLt | Algo::Unrelated => {
            sched_run(algo, &SchedDoc::from_json(text)?.instance()?, opts)
        }
        Algo::Randrank | Algo::Plurality | Algo::PluralityLt | Algo::Dictator | Algo::BestLottery => {
            general_run(algo, &ProfileDoc::from_json(text)?.general()?, opts)
        }
        Algo::MatroidMaxmatch => {
            let market = ProfileDoc::from_json(text)?.matroid_market()?;
            let a = matroid::matroid_max_match(&market)?;
            Ok(RunResult::new(assignment_ranks(&market.profile, &a), Some(matroid::maxranks_matroid(&market)))
                .with("outcome", json!(a)))
        }
        _ => matching_run(algo, &ProfileDoc::from_json(text)?.matching()?, opts),
    }
}

pub fn render(algo: Algo, res: &RunResult, format: Format) -> String {
    match format {
        Format::Csv => factor_csv(&res.ranks, res.maxranks.as_deref()),
        Format::Json => {
            let mut obj = Map::new();
            obj.insert(
                "algo".into(),
                json!(algo.to_possible_value().expect("named").get_name()),
            );
            obj.extend(res.fields.clone());
            obj.insert("expected_ranks".into(), texts(&res.ranks));
            if let Some(mr) = &res.maxranks {
                obj.insert("maxranks".into(), json!(mr));
            }
            if let Some(f) = res.factor() {
                obj.insert("factor".into(), json!(f.to_string()));
            }
            serde_json::to_string_pretty(&Value::Object(obj)).expect("json")
        }
    }
}

pub fn cmd_run(algo: Algo, opts: &RunOpts) -> Result<(), Failure> {
    let text = read(&opts.input)?;
    let res = execute(algo, &text, opts)?;
    emit(opts.out.as_deref(), &render(algo, &res, opts.format))?;
    match (&res.notice, &res.maxranks) {
        (Some(n), None) => Err(Failure::Oracle(n.clone())),
        (Some(n), Some(_)) => {
            eprintln!("note: {n}");
            Ok(())
        }
        _ => Ok(()),
    }
}
