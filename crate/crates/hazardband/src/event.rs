//! Event-history ingestion: subject-level transition records and the
//! per-transition counting/at-risk processes built from them.
//!
//! The model is a finite-state multistate process under independent
//! left-truncation and right-censoring. A subject contributes one record per
//! observation period: it enters a state at `entry_time` (its truncation
//! point for that period) and leaves at `exit_time`, either through a
//! transition to another state or through censoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HazardError, Result};

/// CSV token marking a censored exit.
pub const CENSORED_TOKEN: &str = "cens";

/// One observation period of one subject. `to_state == None` means the
/// period ended by censoring rather than by a transition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub entry_time: f64,
    pub exit_time: f64,
    pub from_state: String,
    pub to_state: Option<String>,
}

impl SubjectRecord {
    pub fn is_censored(&self) -> bool {
        self.to_state.is_none()
    }

    fn check(&self) -> Result<()> {
        if !self.entry_time.is_finite() || !self.exit_time.is_finite() || self.entry_time < 0.0 {
            return Err(HazardError::Validation(format!(
                "subject {}: times must be finite and nonnegative",
                self.subject_id
            )));
        }
        if self.entry_time >= self.exit_time {
            return Err(HazardError::Validation(format!(
                "subject {}: entry time {} is not before exit time {}",
                self.subject_id, self.entry_time, self.exit_time
            )));
        }
        if let Some(to) = &self.to_state {
            if *to == self.from_state {
                return Err(HazardError::Validation(format!(
                    "subject {}: self-transition {} -> {}",
                    self.subject_id, self.from_state, to
                )));
            }
        }
        Ok(())
    }
}

/// An ordered pair of distinct states, the index of one counting process.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionKey {
    pub from: String,
    pub to: String,
}

impl TransitionKey {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Result<Self> {
        let key = TransitionKey { from: from.into(), to: to.into() };
        if key.from == key.to {
            return Err(HazardError::Validation(format!(
                "transition must connect distinct states, got {} -> {}",
                key.from, key.to
            )));
        }
        if key.from.is_empty() || key.to.is_empty() || key.from.contains('>') || key.to.contains('>') {
            return Err(HazardError::Validation(
                "state labels must be nonempty and must not contain '>'".into(),
            ));
        }
        Ok(key)
    }
}

impl fmt::Display for TransitionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}", self.from, self.to)
    }
}

impl FromStr for TransitionKey {
    type Err = HazardError;

    fn from_str(s: &str) -> Result<Self> {
        let (from, to) = s.split_once('>').ok_or_else(|| {
            HazardError::Validation(format!("transition key `{s}` is not of the form from>to"))
        })?;
        TransitionKey::new(from, to)
    }
}

impl Serialize for TransitionKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TransitionKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Aggregated jump data for one transition: jump times with multiplicities
/// (tied events share a jump time) and the left-continuous at-risk counts
/// evaluated at those times.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingPath {
    pub transition: TransitionKey,
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<u64>,
    pub at_risk: Vec<u64>,
    pub n_subjects: u64,
    pub tau: f64,
}

impl CountingPath {
    pub fn new(
        transition: TransitionKey,
        jump_times: Vec<f64>,
        jump_sizes: Vec<u64>,
        at_risk: Vec<u64>,
        n_subjects: u64,
        tau: f64,
    ) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(HazardError::Validation(format!("tau must be positive, got {tau}")));
        }
        if jump_times.len() != jump_sizes.len() || jump_times.len() != at_risk.len() {
            return Err(HazardError::Validation("jump arrays must have equal length".into()));
        }
        if n_subjects == 0 {
            return Err(HazardError::Validation("n_subjects must be positive".into()));
        }
        for i in 0..jump_times.len() {
            let t = jump_times[i];
            if !t.is_finite() || t <= 0.0 || t > tau {
                return Err(HazardError::Validation(format!("jump time {t} outside (0, {tau}]")));
            }
            if i > 0 && t <= jump_times[i - 1] {
                return Err(HazardError::Validation("jump times must be strictly increasing".into()));
            }
            if jump_sizes[i] == 0 {
                return Err(HazardError::Validation("jump sizes must be positive".into()));
            }
            if jump_sizes[i] > at_risk[i] {
                return Err(HazardError::Validation(format!(
                    "{} events at time {t} exceed the {} subjects at risk",
                    jump_sizes[i], at_risk[i]
                )));
            }
        }
        Ok(CountingPath { transition, jump_times, jump_sizes, at_risk, n_subjects, tau })
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// Total number of observed events on (0, tau].
    pub fn total_events(&self) -> u64 {
        self.jump_sizes.iter().sum()
    }
}

/// Parse the `id,from,to,entry,exit` CSV format; `to` may be the literal
/// token `cens` for a censored exit. Row order is preserved and the full
/// record set is validated, including path connectivity per subject.
pub fn parse_event_csv(source: impl Read) -> Result<Vec<SubjectRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    {
        let headers = reader
            .headers()
            .map_err(|e| HazardError::Parse { line: 1, message: e.to_string() })?;
        let expected = ["id", "from", "to", "entry", "exit"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(HazardError::Parse {
                line: 1,
                message: format!("expected header id,from,to,entry,exit, got {}", got.join(",")),
            });
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            HazardError::Parse { line, message: e.to_string() }
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 5 {
            return Err(HazardError::Parse {
                line,
                message: format!("expected 5 fields, got {}", row.len()),
            });
        }
        let num = |idx: usize, name: &str| -> Result<f64> {
            row[idx].parse::<f64>().map_err(|_| HazardError::Parse {
                line,
                message: format!("field `{name}` is not a number: `{}`", &row[idx]),
            })
        };
        let to_raw = &row[2];
        let record = SubjectRecord {
            subject_id: row[0].to_string(),
            from_state: row[1].to_string(),
            to_state: if to_raw == CENSORED_TOKEN { None } else { Some(to_raw.to_string()) },
            entry_time: num(3, "entry")?,
            exit_time: num(4, "exit")?,
        };
        records.push(record);
    }

    validate_records(&records)?;
    Ok(records)
}

/// Check per-record invariants and path connectivity: consecutive records of
/// a subject must chain states and times, and a censored record must be the
/// subject's last.
pub fn validate_records(records: &[SubjectRecord]) -> Result<()> {
    let mut by_subject: BTreeMap<&str, Vec<&SubjectRecord>> = BTreeMap::new();
    for r in records {
        r.check()?;
        by_subject.entry(&r.subject_id).or_default().push(r);
    }
    for (id, recs) in by_subject {
        for pair in recs.windows(2) {
            let (prev, next) = (pair[0], pair[1]);
            match &prev.to_state {
                None => {
                    return Err(HazardError::Validation(format!(
                        "subject {id}: record follows a censored record"
                    )))
                }
                Some(to) => {
                    if *to != next.from_state || prev.exit_time != next.entry_time {
                        return Err(HazardError::Validation(format!(
                            "subject {id}: broken path, ({} at {}) then ({} at {})",
                            to, prev.exit_time, next.from_state, next.entry_time
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Build one [`CountingPath`] per transition with at least one observed jump
/// at time <= tau.
///
/// The at-risk convention is left-continuous: Y for a transition out of
/// state `l` at time t counts records in `l` with `entry < t <= exit`, so a
/// subject is still at risk at its own event time. Tied events on the same
/// transition aggregate into a single jump with the tie multiplicity.
pub fn build_counting_paths(
    records: &[SubjectRecord],
    tau: f64,
) -> Result<BTreeMap<TransitionKey, CountingPath>> {
    if records.is_empty() {
        return Err(HazardError::Validation("no records supplied".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(HazardError::Validation(format!("tau must be positive, got {tau}")));
    }
    validate_records(records)?;

    let n_subjects = records
        .iter()
        .map(|r| r.subject_id.as_str())
        .collect::<BTreeSet<_>>()
        .len() as u64;

    // Per-state sorted entry and exit times; Y(t) = #{entry < t} - #{exit < t}.
    let mut entries: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut exits: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        entries.entry(&r.from_state).or_default().push(r.entry_time);
        exits.entry(&r.from_state).or_default().push(r.exit_time);
    }
    for v in entries.values_mut().chain(exits.values_mut()) {
        v.sort_unstable_by(f64::total_cmp);
    }
    let at_risk = |state: &str, t: f64| -> u64 {
        let started = entries[state].partition_point(|&x| x < t);
        let ended = exits[state].partition_point(|&x| x < t);
        (started - ended) as u64
    };

    // Event times per transition, ties aggregated by exact equality.
    let mut event_times: BTreeMap<TransitionKey, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(to) = &r.to_state {
            if r.exit_time <= tau {
                let key = TransitionKey::new(r.from_state.clone(), to.clone())?;
                event_times.entry(key).or_default().push(r.exit_time);
            }
        }
    }

    let mut out = BTreeMap::new();
    for (key, mut times) in event_times {
        times.sort_unstable_by(f64::total_cmp);
        let mut jump_times = Vec::new();
        let mut jump_sizes: Vec<u64> = Vec::new();
        for &t in &times {
            if jump_times.last() == Some(&t) {
                *jump_sizes.last_mut().unwrap() += 1;
            } else {
                jump_times.push(t);
                jump_sizes.push(1);
            }
        }
        let risks: Vec<u64> = jump_times.iter().map(|&t| at_risk(&key.from, t)).collect();
        let path = CountingPath::new(key.clone(), jump_times, jump_sizes, risks, n_subjects, tau)?;
        out.insert(key, path);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct PathArrays {
    times: Vec<f64>,
    dn: Vec<u64>,
    y: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct PathsDocument {
    n: u64,
    tau: f64,
    paths: BTreeMap<TransitionKey, PathArrays>,
}

/// Serialize a counting-path map to its JSON document
/// (`{"n":..,"tau":..,"paths":{"from>to":{"times":[..],"dn":[..],"y":[..]}}}`).
pub fn paths_to_json(paths: &BTreeMap<TransitionKey, CountingPath>) -> Result<String> {
    let mut iter = paths.values();
    let first = iter
        .next()
        .ok_or_else(|| HazardError::Validation("cannot serialize an empty path map".into()))?;
    if iter.any(|p| p.n_subjects != first.n_subjects || p.tau != first.tau) {
        return Err(HazardError::Validation("paths disagree on n or tau".into()));
    }
    let doc = PathsDocument {
        n: first.n_subjects,
        tau: first.tau,
        paths: paths
            .iter()
            .map(|(k, p)| {
                (
                    k.clone(),
                    PathArrays { times: p.jump_times.clone(), dn: p.jump_sizes.clone(), y: p.at_risk.clone() },
                )
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn paths_from_json(json: &str) -> Result<BTreeMap<TransitionKey, CountingPath>> {
    let doc: PathsDocument = serde_json::from_str(json)?;
    let mut out = BTreeMap::new();
    for (key, arrays) in doc.paths {
        let path = CountingPath::new(key.clone(), arrays.times, arrays.dn, arrays.y, doc.n, doc.tau)?;
        out.insert(key, path);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn d0_records() -> Vec<SubjectRecord> {
        // three subjects in state 0 from t=0: events 0->1 at t=1 and t=2,
        // censoring at t=2.5
        vec![
            SubjectRecord {
                subject_id: "a".into(),
                entry_time: 0.0,
                exit_time: 1.0,
                from_state: "0".into(),
                to_state: Some("1".into()),
            },
            SubjectRecord {
                subject_id: "b".into(),
                entry_time: 0.0,
                exit_time: 2.0,
                from_state: "0".into(),
                to_state: Some("1".into()),
            },
            SubjectRecord {
                subject_id: "c".into(),
                entry_time: 0.0,
                exit_time: 2.5,
                from_state: "0".into(),
                to_state: None,
            },
        ]
    }

    #[test]
    fn parses_csv_rows() {
        let csv = "id,from,to,entry,exit\n1,0,2,0,4.5\n1,2,cens,4.5,6\n";
        let records = parse_event_csv(csv.as_bytes()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].subject_id, "1");
        assert_eq!(records[0].from_state, "0");
        assert_eq!(records[0].to_state.as_deref(), Some("2"));
        assert_eq!(records[0].entry_time, 0.0);
        assert_eq!(records[0].exit_time, 4.5);
        assert!(records[1].is_censored());
    }

    #[test]
    fn csv_errors_carry_context() {
        let bad_time = "id,from,to,entry,exit\n1,0,2,zero,4.5\n";
        match parse_event_csv(bad_time.as_bytes()) {
            Err(HazardError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let entry_after_exit = "id,from,to,entry,exit\n1,0,2,5,5\n";
        match parse_event_csv(entry_after_exit.as_bytes()) {
            Err(HazardError::Validation(msg)) => assert!(msg.contains("1"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }

        let wrong_arity = "id,from,to,entry,exit\n1,0,2,0\n";
        assert!(matches!(parse_event_csv(wrong_arity.as_bytes()), Err(HazardError::Parse { .. })));

        let broken_path = "id,from,to,entry,exit\n1,0,1,0,2\n1,0,2,2,3\n";
        assert!(matches!(
            parse_event_csv(broken_path.as_bytes()),
            Err(HazardError::Validation(_))
        ));

        let gap_in_time = "id,from,to,entry,exit\n1,0,1,0,2\n1,1,2,2.5,3\n";
        assert!(matches!(parse_event_csv(gap_in_time.as_bytes()), Err(HazardError::Validation(_))));
    }

    #[test]
    fn d0_counting_path() {
        let paths = build_counting_paths(&d0_records(), 3.0).unwrap();
        assert_eq!(paths.len(), 1);
        let p = &paths[&TransitionKey::new("0", "1").unwrap()];
        assert_eq!(p.jump_times, vec![1.0, 2.0]);
        assert_eq!(p.jump_sizes, vec![1, 1]);
        assert_eq!(p.at_risk, vec![3, 2]);
        assert_eq!(p.n_subjects, 3);
    }

    #[test]
    fn left_truncation_enters_risk_set_after_entry() {
        let records = vec![SubjectRecord {
            subject_id: "s".into(),
            entry_time: 2.0,
            exit_time: 5.0,
            from_state: "0".into(),
            to_state: Some("1".into()),
        }];
        let paths = build_counting_paths(&records, 6.0).unwrap();
        let p = &paths[&TransitionKey::new("0", "1").unwrap()];
        assert_eq!(p.at_risk, vec![1]);
        // the subject is not at risk at or before its entry time
        let mut entries = vec![records[0].entry_time];
        entries.sort_by(f64::total_cmp);
        assert_eq!(entries.partition_point(|&x| x < 2.0), 0);
    }

    #[test]
    fn tied_events_aggregate() {
        let mut records = d0_records();
        records[0].exit_time = 1.0;
        records[1].exit_time = 1.0;
        let paths = build_counting_paths(&records, 3.0).unwrap();
        let p = &paths[&TransitionKey::new("0", "1").unwrap()];
        assert_eq!(p.jump_times, vec![1.0]);
        assert_eq!(p.jump_sizes, vec![2]);
        assert_eq!(p.at_risk, vec![3]);
    }

    #[test]
    fn jumps_after_tau_are_discarded() {
        let paths = build_counting_paths(&d0_records(), 1.5).unwrap();
        let p = &paths[&TransitionKey::new("0", "1").unwrap()];
        assert_eq!(p.jump_times, vec![1.0]);

        // tau before every event: no transitions observed at all
        let empty = build_counting_paths(&d0_records(), 0.5).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(build_counting_paths(&[], 1.0).is_err());
        assert!(build_counting_paths(&d0_records(), 0.0).is_err());
        assert!(build_counting_paths(&d0_records(), -1.0).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let paths = build_counting_paths(&d0_records(), 3.0).unwrap();
        let json = paths_to_json(&paths).unwrap();
        let back = paths_from_json(&json).unwrap();
        assert_eq!(paths, back);
    }

    #[test]
    fn transition_key_string_form() {
        let key = TransitionKey::new("0", "1").unwrap();
        assert_eq!(key.to_string(), "0>1");
        assert_eq!("0>1".parse::<TransitionKey>().unwrap(), key);
        assert!("01".parse::<TransitionKey>().is_err());
        assert!(TransitionKey::new("0", "0").is_err());
    }
}
