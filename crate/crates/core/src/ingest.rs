//! Message-log parsing and collaboration-network induction.
//!
//! A pair of people is linked in a window when they exchanged at least
//! `min_total` messages with at least `min_each_direction` in each direction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{CollabGraph, GraphBuilder, OrgTree, PersonId};
use crate::month::Month;

pub use crate::graph::{parse_org_csv, read_org_csv as load_org_snapshots};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub sender: PersonId,
    pub recipient: PersonId,
    pub sent_at: DateTime<Utc>,
}

impl MessageRecord {
    pub fn month(&self) -> Month {
        Month::of(&self.sent_at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_total: u32,
    pub min_each_direction: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_total: 4,
            min_each_direction: 1,
        }
    }
}

/// How the whole-period graph applies the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LongitudinalRule {
    pub thresholds: Thresholds,
    /// Multiply `min_total` by the number of months.
    pub scale_with_months: bool,
}

impl Default for LongitudinalRule {
    fn default() -> Self {
        LongitudinalRule {
            thresholds: Thresholds::default(),
            scale_with_months: true,
        }
    }
}

/// Messages that failed to parse, with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLog {
    pub records: Vec<MessageRecord>,
    pub rejected: Vec<(usize, String)>,
}

/// Directed message counts per ordered pair.
fn count_pairs<'a>(records: impl Iterator<Item = &'a MessageRecord>) -> HashMap<(&'a PersonId, &'a PersonId), u32> {
    let mut counts = HashMap::new();
    for r in records {
        if r.sender != r.recipient {
            *counts.entry((&r.sender, &r.recipient)).or_insert(0) += 1;
        }
    }
    counts
}

fn graph_from_counts(
    counts: &HashMap<(&PersonId, &PersonId), u32>,
    min_total: u32,
    min_each: u32,
    window: String,
) -> CollabGraph {
    // visit each unordered pair once, from its smaller id
    let mut pairs: BTreeSet<(&PersonId, &PersonId)> = BTreeSet::new();
    for &(a, b) in counts.keys() {
        pairs.insert(if a < b { (a, b) } else { (b, a) });
    }
    let mut builder = GraphBuilder::new().window(window);
    for (a, b) in pairs {
        let ab = counts.get(&(a, b)).copied().unwrap_or(0);
        let ba = counts.get(&(b, a)).copied().unwrap_or(0);
        if ab + ba >= min_total && ab >= min_each && ba >= min_each {
            builder
                .add_edge(a.clone(), b.clone(), f64::from(ab + ba))
                .expect("distinct endpoints and positive weight");
        }
    }
    builder.build()
}

/// The collaboration graph for one calendar month. Zero surviving edges yields
/// an empty graph.
pub fn induce_monthly(records: &[MessageRecord], month: Month, th: Thresholds) -> CollabGraph {
    let counts = count_pairs(records.iter().filter(|r| r.month() == month));
    graph_from_counts(&counts, th.min_total, th.min_each_direction, month.to_string())
}

/// Whole-period graph over `months`, restricted to its largest connected
/// component.
pub fn induce_longitudinal(
    records: &[MessageRecord],
    months: &[Month],
    rule: LongitudinalRule,
) -> Result<CollabGraph> {
    if months.is_empty() {
        return Err(Error::InvalidParameter("at least one month is required".into()));
    }
    let wanted: BTreeSet<Month> = months.iter().copied().collect();
    let counts = count_pairs(records.iter().filter(|r| wanted.contains(&r.month())));
    let min_total = if rule.scale_with_months {
        rule.thresholds.min_total * wanted.len() as u32
    } else {
        rule.thresholds.min_total
    };
    let g = graph_from_counts(
        &counts,
        min_total,
        rule.thresholds.min_each_direction,
        "longitudinal".into(),
    );
    if g.is_empty() {
        return Ok(g);
    }
    g.largest_connected_component()
}

/// Monthly graphs plus the longitudinal frame of reference.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    pub months: Vec<Month>,
    pub graphs: BTreeMap<Month, CollabGraph>,
    pub longitudinal: CollabGraph,
}

impl MonthlySeries {
    /// Graphs in month order.
    pub fn ordered(&self) -> Vec<&CollabGraph> {
        self.months.iter().map(|m| &self.graphs[m]).collect()
    }
}

pub fn induce_series(
    records: &[MessageRecord],
    months: &[Month],
    rule: LongitudinalRule,
) -> Result<MonthlySeries> {
    let mut months = months.to_vec();
    months.sort();
    months.dedup();
    let graphs: BTreeMap<Month, CollabGraph> = months
        .par_iter()
        .map(|&m| (m, induce_monthly(records, m, rule.thresholds)))
        .collect();
    let longitudinal = induce_longitudinal(records, &months, rule)?;
    Ok(MonthlySeries {
        months,
        graphs,
        longitudinal,
    })
}

/// Distinct months covered by the records, ascending.
pub fn months_in(records: &[MessageRecord]) -> Vec<Month> {
    let set: BTreeSet<Month> = records.iter().map(MessageRecord::month).collect();
    set.into_iter().collect()
}

fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc());
        }
    }
    Err(format!("malformed timestamp `{s}`"))
}

#[derive(Deserialize)]
struct RawMessage {
    sender: String,
    recipient: String,
    sent_at: String,
}

fn to_record(raw: RawMessage) -> std::result::Result<MessageRecord, String> {
    let sender = PersonId::new(raw.sender).map_err(|_| "empty sender".to_string())?;
    let recipient = PersonId::new(raw.recipient).map_err(|_| "empty recipient".to_string())?;
    let sent_at = parse_timestamp(&raw.sent_at)?;
    Ok(MessageRecord {
        sender,
        recipient,
        sent_at,
    })
}

/// CSV with a `sender,recipient,sent_at` header. Bad rows are collected in
/// [`ParsedLog::rejected`] rather than failing the whole file.
pub fn parse_messages_csv(reader: impl Read) -> ParsedLog {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut log = ParsedLog::default();
    for (i, row) in rdr.deserialize::<RawMessage>().enumerate() {
        let line = i + 2;
        match row.map_err(|e| e.to_string()).and_then(to_record) {
            Ok(r) => log.records.push(r),
            Err(e) => log.rejected.push((line, e)),
        }
    }
    log
}

/// JSON-lines with `sender`, `recipient`, `sent_at` fields.
pub fn parse_messages_jsonl(reader: impl Read) -> ParsedLog {
    let mut log = ParsedLog::default();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                log.rejected.push((line_no, e.to_string()));
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawMessage>(&line)
            .map_err(|e| e.to_string())
            .and_then(to_record)
        {
            Ok(r) => log.records.push(r),
            Err(e) => log.rejected.push((line_no, e)),
        }
    }
    log
}

/// Reads a message log, choosing JSON-lines for `.jsonl`/`.json` and CSV otherwise.
pub fn read_messages(path: impl AsRef<Path>) -> Result<ParsedLog> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let jsonl = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("json")
    );
    Ok(if jsonl {
        parse_messages_jsonl(file)
    } else {
        parse_messages_csv(file)
    })
}

pub fn format_messages_csv(records: &[MessageRecord]) -> String {
    let mut out = String::from("sender,recipient,sent_at\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{}\n",
            r.sender,
            r.recipient,
            r.sent_at.format("%Y-%m-%dT%H:%M:%SZ")
        ));
    }
    out
}

/// Keyed hash of an identifier: hex of the first 16 bytes of
/// `SHA-256(salt ‖ 0x1f ‖ id)`.
pub fn pseudonymize_id(id: &PersonId, salt: &str) -> PersonId {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update([0x1f]);
    h.update(id.as_str().as_bytes());
    let digest = h.finalize();
    let hex: String = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
    PersonId::new(hex).expect("hex digest is non-empty")
}

pub fn pseudonymize(records: &[MessageRecord], salt: &str) -> Vec<MessageRecord> {
    records
        .iter()
        .map(|r| MessageRecord {
            sender: pseudonymize_id(&r.sender, salt),
            recipient: pseudonymize_id(&r.recipient, salt),
            sent_at: r.sent_at,
        })
        .collect()
}

/// The snapshot dated nearest to the 15th of `month`; exact ties go to the
/// earlier snapshot.
pub fn select_snapshot(trees: &[OrgTree], month: Month) -> Option<&OrgTree> {
    let mid = month.midpoint();
    trees.iter().min_by_key(|t| {
        let d = t.snapshot_date();
        ((d - mid).num_days().abs(), d)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::pid;
    use chrono::TimeZone;

    fn msg(from: &str, to: &str, y: i32, m: u32, d: u32) -> MessageRecord {
        MessageRecord {
            sender: pid(from),
            recipient: pid(to),
            sent_at: Utc.with_ymd_and_hms(y, m, d, 12, 0, 0).unwrap(),
        }
    }

    fn march() -> Month {
        Month::new(2020, 3).unwrap()
    }

    #[test]
    fn three_plus_one_makes_an_edge() {
        let mut recs = vec![msg("a", "b", 2020, 3, 1); 3];
        recs.push(msg("b", "a", 2020, 3, 2));
        let g = induce_monthly(&recs, march(), Thresholds::default());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.total_weight(), 4.0);
        assert_eq!(g.window(), Some("2020-03"));
    }

    #[test]
    fn one_direction_is_not_enough() {
        let recs = vec![msg("a", "b", 2020, 3, 1); 4];
        assert!(induce_monthly(&recs, march(), Thresholds::default()).is_empty());
    }

    #[test]
    fn counting_is_per_month() {
        let mut recs = vec![msg("a", "b", 2020, 3, 1); 2];
        recs.extend(vec![msg("b", "a", 2020, 4, 1); 2]);
        assert!(induce_monthly(&recs, march(), Thresholds::default()).is_empty());
        assert!(induce_monthly(&recs, march().next(), Thresholds::default()).is_empty());
    }

    #[test]
    fn self_messages_are_dropped() {
        let recs = vec![msg("a", "a", 2020, 3, 1); 10];
        assert!(induce_monthly(&recs, march(), Thresholds::default()).is_empty());
    }

    #[test]
    fn longitudinal_scales_threshold() {
        let months = march().range(2);
        let mut recs = Vec::new();
        for m in [3, 4] {
            recs.extend(vec![msg("a", "b", 2020, m, 1); 2]);
            recs.extend(vec![msg("b", "a", 2020, m, 2); 2]);
        }
        let g = induce_longitudinal(&recs, &months, LongitudinalRule::default()).unwrap();
        assert_eq!(g.total_weight(), 8.0);

        let mut few = vec![msg("a", "b", 2020, 3, 1); 3];
        few.extend(vec![msg("b", "a", 2020, 4, 1); 2]);
        let g = induce_longitudinal(&few, &months, LongitudinalRule::default()).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn longitudinal_single_month_equals_monthly_lcc() {
        let mut recs = Vec::new();
        for (a, b) in [("a", "b"), ("b", "c"), ("x", "y")] {
            recs.extend(vec![msg(a, b, 2020, 3, 1); 2]);
            recs.extend(vec![msg(b, a, 2020, 3, 1); 2]);
        }
        let long = induce_longitudinal(&recs, &[march()], LongitudinalRule::default()).unwrap();
        let monthly = induce_monthly(&recs, march(), Thresholds::default())
            .largest_connected_component()
            .unwrap();
        assert_eq!(long.edges().collect::<Vec<_>>(), monthly.edges().collect::<Vec<_>>());
        assert_eq!(long.ids(), monthly.ids());
    }

    #[test]
    fn csv_rejects_bad_timestamps_with_line_numbers() {
        let text = "sender,recipient,sent_at\na,b,2020-03-01T10:00:00Z\na,b,not-a-date\nb,a,2020-03-02 08:00:00\n";
        let log = parse_messages_csv(text.as_bytes());
        assert_eq!(log.records.len(), 2);
        assert_eq!(log.rejected.len(), 1);
        assert_eq!(log.rejected[0].0, 3);
        assert!(log.rejected[0].1.contains("malformed timestamp"));
    }

    #[test]
    fn jsonl_parses() {
        let text = "{\"sender\":\"a\",\"recipient\":\"b\",\"sent_at\":\"2020-03-01T10:00:00+02:00\"}\n\n{\"sender\":\"a\"}\n";
        let log = parse_messages_jsonl(text.as_bytes());
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.records[0].sent_at.format("%H").to_string(), "08");
        assert_eq!(log.rejected[0].0, 3);
    }

    #[test]
    fn pseudonymization_is_keyed_and_stable() {
        let a = pseudonymize_id(&pid("alice@example.com"), "salt");
        assert_eq!(a, pseudonymize_id(&pid("alice@example.com"), "salt"));
        assert_ne!(a, pseudonymize_id(&pid("alice@example.com"), "pepper"));
        assert_eq!(a.as_str().len(), 32);
    }

    #[test]
    fn snapshot_nearest_mid_month_with_early_tie() {
        let csv = "employee_id,manager_id,snapshot_date\nr,,2020-03-10\nr,,2020-03-20\nr,,2020-04-30\n";
        let trees = parse_org_csv(csv.as_bytes()).unwrap();
        let chosen = select_snapshot(&trees, march()).unwrap();
        assert_eq!(chosen.snapshot_date().to_string(), "2020-03-10");
        let april = select_snapshot(&trees, march().next()).unwrap();
        assert_eq!(april.snapshot_date().to_string(), "2020-04-30");
    }
}
