use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ordmech::io::{ProfileDoc, ProfileKind, SchedDoc};
use ordmech::StrictProfile;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::failure::{emit, rational_arg, Failure};
use crate::gen::{random_lists, random_matroid_doc, random_sched};
use crate::run::{execute, Algo};
use crate::{Format, RunOpts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchFamily {
    Matching,
    General,
    Matroid,
    Parallel,
    Unrelated,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub family: BenchFamily,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long = "T", default_value = "4")]
    pub t: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn algos(family: BenchFamily, n: usize, m: usize) -> Vec<Algo> {
    match family {
        BenchFamily::Matching => {
            let mut v = vec![Algo::Maxmatch, Algo::Rsd];
            if n == m {
                v.push(Algo::Ps);
            }
            v
        }
        BenchFamily::General => vec![Algo::Randrank, Algo::Plurality, Algo::BestLottery],
        BenchFamily::Matroid => vec![Algo::MatroidMaxmatch],
        BenchFamily::Parallel => vec![Algo::Det, Algo::Rand],
        BenchFamily::Unrelated => vec![Algo::Unrelated],
    }
}

/// One CSV row per (instance, algorithm): `instance,algo,factor,makespan_over_T`.
/// Instance `i` is drawn from ChaCha8 seeded with `seed` on stream `i`.
pub fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let t = rational_arg(&args.t)?;
    let opts = RunOpts {
        input: PathBuf::new(),
        out: None,
        format: Format::Json,
        seed: args.seed,
        samples: 10_000,
        eps: "1/10".into(),
        agent: 0,
    };
    let rows: Vec<Result<Vec<String>, Failure>> = (0..args.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            rng.set_stream(i as u64);
            let text = match args.family {
                BenchFamily::Matching | BenchFamily::General => {
                    let kind = if args.family == BenchFamily::General {
                        ProfileKind::General
                    } else {
                        ProfileKind::Strict
                    };
                    let p = StrictProfile::new(args.m, random_lists(&mut rng, args.n, args.m))?;
                    ProfileDoc::strict(kind, &p).to_json()
                }
                BenchFamily::Matroid => random_matroid_doc(&mut rng, args.n, args.m)?.to_json(),
                BenchFamily::Parallel | BenchFamily::Unrelated => {
                    let inst = random_sched(&mut rng, args.n, args.m, &t, args.family == BenchFamily::Parallel)?;
                    SchedDoc::of(&inst).to_json()
                }
            };
            let mut out = Vec::new();
            for algo in algos(args.family, args.n, args.m) {
                let res = execute(algo, &text, &opts)?;
                let factor = res.factor().map(|f| f.to_string()).unwrap_or_default();
                let ms = res
                    .fields
                    .get("makespan_over_T")
                    .and_then(|v| v.as_str())
                    .unwrap_or("")
                    .to_string();
                let name = algo.to_possible_value().expect("named").get_name().to_string();
                out.push(format!("{i},{name},{factor},{ms}"));
            }
            Ok(out)
        })
        .collect();
    let mut csv = String::from("instance,algo,factor,makespan_over_T\n");
    for r in rows {
        for line in r? {
            csv.push_str(&line);
            csv.push('\n');
        }
    }
    emit(args.out.as_deref(), &csv)
}
