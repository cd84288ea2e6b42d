use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ordmech::matching::{self, MatchingInstance};
use ordmech::verify::{
    a_or_c, classify_truthfulness, is_pseudomonotone, lt_wrapper_linear, top_choice_scf, unilateral_top_two,
    weak_not_lex_mechanism, Domain, Property, TruthClass, ViolationReport, PROFILE_LIMIT,
};
use ordmech::{general, Assignment, Lottery, Rational, Result as CoreResult};
use serde::Deserialize;

use crate::failure::{emit, rational_arg, read, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Prop {
    Strong,
    Lex,
    Weak,
    Pseudo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mechanism {
    /// MaxMatch on `n` agents and `m` items.
    Maxmatch,
    MaxmatchLt,
    /// Serial dictatorship in agent order.
    SerialDictatorship,
    /// Top-trading cycles from the identity endowment.
    Ttca,
    Ps,
    Rsd,
    Plurality,
    PluralityLt,
    /// Agent 0's top outcome.
    Dictator,
    DictatorLt,
    Randrank,
    /// Single agent over three outcomes: its top if that is outcome 0, else outcome 2.
    AOrC,
    AOrCLt,
    /// Single agent over four outcomes; weakly but not lex-truthful.
    WeakNotLex,
    /// Agent 0's top two outcomes, half each.
    TopTwo,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub property: Prop,
    #[arg(value_enum)]
    pub mechanism: Mechanism,
    /// `NxM` for every strict list of `N` agents over `M` outcomes, or a JSON
    /// file `{"per_agent": [[[…]]]}` listing each agent's admissible reports.
    #[arg(long)]
    pub domain: Option<String>,
    /// ε for the lex-truthful wrappers.
    #[arg(long, default_value = "1/10")]
    pub eps: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct DomainFile {
    per_agent: Vec<Vec<Vec<usize>>>,
}

fn default_domain(mech: Mechanism) -> &'static str {
    match mech {
        Mechanism::AOrC | Mechanism::AOrCLt => "1x3",
        Mechanism::WeakNotLex => "1x4",
        _ => "3x3",
    }
}

fn parse_domain(domain_arg: &str) -> Result<(Domain<Vec<usize>>, usize), Failure> {
    if let Some((n, m)) = domain_arg.split_once('x') {
        if let (Ok(n), Ok(m)) = (n.parse::<usize>(), m.parse::<usize>()) {
            let lists: u128 = (1..=m as u128).product();
            let size = (0..n).fold(1u128, |acc, _| acc.saturating_mul(lists));
            if size > PROFILE_LIMIT {
                return Err(Failure::Resource(format!(
                    "domain {domain_arg} exceeds the limit of {PROFILE_LIMIT} profiles"
                )));
            }
            return Ok((Domain::full_strict(n, m), m));
        }
    }
    let file: DomainFile =
        serde_json::from_str(&read(&PathBuf::from(domain_arg))?).map_err(|e| Failure::Invalid(format!("domain file: {e}")))?;
    let m = file
        .per_agent
        .iter()
        .flatten()
        .map(Vec::len)
        .next()
        .ok_or_else(|| Failure::Invalid("empty domain".into()))?;
    Ok((Domain::new(file.per_agent)?, m))
}

fn matching_of(m: usize, r: &[Vec<usize>]) -> CoreResult<MatchingInstance> {
    MatchingInstance::from_lists(m, r.to_vec())
}

fn identity(n: usize) -> Assignment {
    Assignment((0..n).map(Some).collect())
}

fn print_report<R: serde::Serialize>(v: &ViolationReport<R>, out: Option<&std::path::Path>) -> Result<(), Failure> {
    emit(out, &serde_json::to_string_pretty(v).expect("json"))?;
    Err(Failure::Violation)
}

fn check_scf<O, F>(prop: Prop, f: F, domain: &Domain<Vec<usize>>, out: Option<&std::path::Path>) -> Result<(), Failure>
where
    O: ordmech::prefs::Outcome + Send + Sync + serde::Serialize,
    F: Fn(&[Vec<usize>]) -> CoreResult<O> + Sync,
{
    if prop == Prop::Pseudo {
        return match is_pseudomonotone(&f, domain)? {
            None => emit(out, "holds"),
            Some(v) => print_report(&v, out),
        };
    }
    check_lottery(prop, move |r: &[Vec<usize>]| Ok(Lottery::point(f(r)?)), domain, out)
}

fn check_lottery<O, M>(prop: Prop, mech: M, domain: &Domain<Vec<usize>>, out: Option<&std::path::Path>) -> Result<(), Failure>
where
    O: ordmech::prefs::Outcome + Send + Sync + serde::Serialize,
    M: Fn(&[Vec<usize>]) -> CoreResult<Lottery<O>> + Sync,
{
    let (property, needed) = match prop {
        Prop::Strong => (Property::Strong, TruthClass::Strong),
        Prop::Lex => (Property::Lex, TruthClass::Lex),
        Prop::Weak => (Property::Weak, TruthClass::Weak),
        Prop::Pseudo => {
            return Err(Failure::Invalid("pseudomonotonicity applies to deterministic mechanisms only".into()))
        }
    };
    let report = classify_truthfulness(&mech, domain)?;
    if report.class >= needed {
        return emit(out, &format!("holds (class: {})", report.class));
    }
    match report.violation(property) {
        Some(v) => print_report(v, out),
        None => Err(Failure::Violation),
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let domain_arg = args.domain.clone().unwrap_or_else(|| default_domain(args.mechanism).to_string());
    let (domain, m) = parse_domain(&domain_arg)?;
    let eps: Rational = rational_arg(&args.eps)?;
    let out = args.out.as_deref();
    let p = args.property;
    match args.mechanism {
        Mechanism::Maxmatch => check_scf(p, move |r: &[Vec<usize>]| Ok(matching::max_match(&matching_of(m, r)?)), &domain, out),
        Mechanism::SerialDictatorship => check_scf(
            p,
            move |r: &[Vec<usize>]| Ok(matching::serial_dictatorship(&matching_of(m, r)?, &(0..r.len()).collect::<Vec<_>>())),
            &domain,
            out,
        ),
        Mechanism::Ttca => check_scf(p, move |r: &[Vec<usize>]| matching::ttca(&matching_of(m, r)?, &identity(r.len())), &domain, out),
        Mechanism::Plurality => check_scf(p, plurality(m), &domain, out),
        Mechanism::Dictator => check_scf(p, dictator, &domain, out),
        Mechanism::AOrC => check_scf(p, top_choice_scf(a_or_c), &domain, out),
        Mechanism::MaxmatchLt => check_lottery(
            p,
            lt_wrapper_linear(move |r: &[Vec<usize>]| Ok(matching::max_match(&matching_of(m, r)?)), eps),
            &domain,
            out,
        ),
        Mechanism::PluralityLt => check_lottery(p, lt_wrapper_linear(plurality(m), eps), &domain, out),
        Mechanism::DictatorLt => check_lottery(p, lt_wrapper_linear(dictator, eps), &domain, out),
        Mechanism::AOrCLt => check_lottery(p, lt_wrapper_linear(top_choice_scf(a_or_c), eps), &domain, out),
        Mechanism::Ps => check_lottery(p, move |r: &[Vec<usize>]| matching::ps_lottery(&matching_of(m, r)?), &domain, out),
        Mechanism::Rsd => check_lottery(p, move |r: &[Vec<usize>]| matching::rsd(&matching_of(m, r)?), &domain, out),
        Mechanism::Randrank => check_lottery(
            p,
            move |r: &[Vec<usize>]| general::randrank(&general::GeneralInstance::from_lists(m, r.to_vec())?),
            &domain,
            out,
        ),
        Mechanism::WeakNotLex => check_lottery(p, weak_not_lex_mechanism, &domain, out),
        Mechanism::TopTwo => check_lottery(p, unilateral_top_two(0), &domain, out),
    }
}

fn plurality(m: usize) -> impl Fn(&[Vec<usize>]) -> CoreResult<usize> + Sync {
    move |r: &[Vec<usize>]| {
        let tops: Vec<usize> = r.iter().map(|l| l[0]).collect();
        Ok(general::plurality_of_tops(&tops, m))
    }
}

fn dictator(r: &[Vec<usize>]) -> CoreResult<usize> {
    Ok(r[0][0])
}
