//! JSON instance files, lottery output and per-rank CSV tables.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::general::GeneralInstance;
use crate::matching::MatchingInstance;
use crate::matroid::{MatroidMarket, MatroidSpec};
use crate::prefs::{IndiffProfile, Lottery, StrictProfile};
use crate::rational::{self, from_usize, Rational};
use crate::sched::SchedulingInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Strict,
    Indiff,
    General,
}

/// `{"kind": "strict|indiff|general", "n": …, "m": …, "lists": [[…]], "classes": [[[…]]]}`.
/// Matroid markets add `"matroids": [...]` (one per item) to a strict file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub kind: ProfileKind,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lists: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matroids: Option<Vec<MatroidSpec>>,
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::domain(format!("invalid JSON: {e}"))
}

impl ProfileDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(parse_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn strict(kind: ProfileKind, profile: &StrictProfile) -> Self {
        ProfileDoc {
            kind,
            n: profile.lists().len(),
            m: profile.n_items(),
            lists: Some(profile.lists().to_vec()),
            classes: None,
            matroids: None,
        }
    }

    pub fn indiff(profile: &IndiffProfile) -> Self {
        let n = crate::prefs::Ranking::n_agents(profile);
        ProfileDoc {
            kind: ProfileKind::Indiff,
            n,
            m: crate::prefs::Ranking::n_outcomes(profile),
            lists: None,
            classes: Some((0..n).map(|j| profile.classes(j).to_vec()).collect()),
            matroids: None,
        }
    }

    pub fn strict_profile(&self) -> Result<StrictProfile> {
        let lists = self
            .lists
            .clone()
            .ok_or_else(|| Error::domain("strict instance needs \"lists\""))?;
        if lists.len() != self.n {
            return Err(Error::domain(format!("\"n\" is {} but {} lists given", self.n, lists.len())));
        }
        StrictProfile::new(self.m, lists)
    }

    pub fn indiff_profile(&self) -> Result<IndiffProfile> {
        let classes = self
            .classes
            .clone()
            .ok_or_else(|| Error::domain("indifference instance needs \"classes\""))?;
        if classes.len() != self.n {
            return Err(Error::domain(format!("\"n\" is {} but {} class lists given", self.n, classes.len())));
        }
        IndiffProfile::new(self.m, classes)
    }

    pub fn matching(&self) -> Result<MatchingInstance> {
        Ok(MatchingInstance::new(self.strict_profile()?))
    }

    pub fn general(&self) -> Result<GeneralInstance> {
        Ok(GeneralInstance::new(self.strict_profile()?))
    }

    pub fn matroid_market(&self) -> Result<MatroidMarket> {
        let matroids = self
            .matroids
            .clone()
            .ok_or_else(|| Error::domain("matroid market needs \"matroids\""))?;
        MatroidMarket::new(self.strict_profile()?, matroids)
    }
}

/// A processing time: a rational (number or `"p/q"`) or the string `"inf"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Time(pub Option<Rational>);

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.0 {
            None => s.serialize_str("inf"),
            Some(x) => s.serialize_str(&rational::to_text(x)),
        }
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        if v.as_str().is_some_and(|s| s.trim() == "inf") {
            return Ok(Time(None));
        }
        rational::text::from_json(&v)
            .map(|x| Time(Some(x)))
            .ok_or_else(|| de::Error::custom(format!("not a processing time: {v}")))
    }
}

/// `{"n": …, "m": …, "T": …, "p": [[…]], "prefs": [[…]]}` with `p[j][i]`
/// the time of job `j` on machine `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedDoc {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T", with = "rational::text")]
    pub t: Rational,
    pub p: Vec<Vec<Time>>,
    pub prefs: Vec<Vec<usize>>,
}

impl SchedDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(parse_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn of(inst: &SchedulingInstance) -> Self {
        SchedDoc {
            n: inst.n(),
            m: inst.m(),
            t: inst.t.clone(),
            p: inst.p.iter().map(|row| row.iter().cloned().map(Time).collect()).collect(),
            prefs: inst.profile.lists().to_vec(),
        }
    }

    pub fn instance(&self) -> Result<SchedulingInstance> {
        if self.p.len() != self.n || self.prefs.len() != self.n {
            return Err(Error::domain(format!("\"n\" is {} but p/prefs have other lengths", self.n)));
        }
        let p = self.p.iter().map(|row| row.iter().map(|t| t.0.clone()).collect()).collect();
        SchedulingInstance::new(p, self.t.clone(), StrictProfile::new(self.m, self.prefs.clone())?)
    }
}

/// `[{"p": "1/2", "outcome": …}, …]` in the lottery's outcome order.
pub fn lottery_json<O: Ord + Clone + Serialize>(l: &Lottery<O>) -> Value {
    Value::Array(
        l.iter()
            .map(|(o, p)| json!({"p": rational::to_text(p), "outcome": o}))
            .collect(),
    )
}

/// CSV `r,rank_r,maxrank_r,ratio` with `ratio = maxrank_r / rank_r`
/// (`inf` when only the denominator vanishes, empty when both do). Without
/// maxranks the last two columns are left empty.
pub fn factor_csv(ranks: &[Rational], maxranks: Option<&[usize]>) -> String {
    let mut out = String::from("r,rank_r,maxrank_r,ratio\n");
    for (idx, e) in ranks.iter().enumerate() {
        let (mr, ratio) = match maxranks.and_then(|m| m.get(idx)) {
            None => (String::new(), String::new()),
            Some(&0) => ("0".to_string(), String::new()),
            Some(&mr) if num_traits::Zero::is_zero(e) => (mr.to_string(), "inf".to_string()),
            Some(&mr) => (mr.to_string(), rational::to_text(&(from_usize(mr) / e))),
        };
        out.push_str(&format!("{},{},{},{}\n", idx + 1, rational::to_text(e), mr, ratio));
    }
    out
}
