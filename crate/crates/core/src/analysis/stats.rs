use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::ingest::{ActionKind, RawEvent};

const KINDS: usize = ActionKind::ALL.len();

/// Action counts per cluster, attributed to the acting user's cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterStats {
    pub clusters: Vec<u32>,
    pub counts: Vec<[u64; KINDS]>,
    pub users: Vec<u64>,
}

/// One table row: per-cluster values plus the summary columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub label: String,
    pub values: Vec<u64>,
    pub average: f64,
    pub std: f64,
    pub max: u64,
    pub total: u64,
}

impl StatsRow {
    fn new(label: &str, values: Vec<u64>) -> Self {
        let n = values.len() as f64;
        let total: u64 = values.iter().sum();
        let (average, std) = if values.is_empty() {
            (0.0, 0.0)
        } else {
            let mean = total as f64 / n;
            let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        let max = values.iter().copied().max().unwrap_or(0);
        Self { label: label.to_string(), values, average, std, max, total }
    }
}

/// Counts every event of a clustered user; events of unclustered users are
/// ignored.
pub fn cluster_stats(events: &[RawEvent], assignment: &HashMap<String, u32>) -> ClusterStats {
    let clusters: Vec<u32> = assignment.values().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let slot: HashMap<u32, usize> = clusters.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut counts = vec![[0u64; KINDS]; clusters.len()];
    let mut users = vec![0u64; clusters.len()];
    for c in assignment.values() {
        users[slot[c]] += 1;
    }
    for e in events {
        if let Some(c) = assignment.get(&e.did) {
            counts[slot[c]][e.kind.index()] += 1;
        }
    }
    ClusterStats { clusters, counts, users }
}

impl ClusterStats {
    pub fn total(&self, kind: ActionKind) -> u64 {
        self.counts.iter().map(|c| c[kind.index()]).sum()
    }

    /// The 13 action rows, then total actions, then users.
    pub fn rows(&self) -> Vec<StatsRow> {
        let mut rows: Vec<StatsRow> = ActionKind::ALL
            .iter()
            .map(|k| StatsRow::new(k.as_str(), self.counts.iter().map(|c| c[k.index()]).collect()))
            .collect();
        rows.push(StatsRow::new("total", self.counts.iter().map(|c| c.iter().sum()).collect()));
        rows.push(StatsRow::new("users", self.users.clone()));
        rows
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["action".to_string()];
        header.extend(self.clusters.iter().map(|c| format!("cluster_{c}")));
        header.extend(["average", "std", "max", "total"].map(String::from));
        w.write_record(&header)?;
        for r in self.rows() {
            let mut rec = vec![r.label.clone()];
            rec.extend(r.values.iter().map(u64::to_string));
            rec.extend([format!("{:.2}", r.average), format!("{:.2}", r.std), r.max.to_string(), r.total.to_string()]);
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("UTF-8"))
    }

    /// Fixed-width text table with `Average ± std`, `Max` and `Total`
    /// columns.
    pub fn to_text_table(&self) -> String {
        let mut header = vec!["Action".to_string()];
        header.extend(self.clusters.iter().map(|c| format!("Cluster {c}")));
        header.extend(["Average ± std", "Max", "Total"].map(String::from));
        let rows = self.rows();
        let mut cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let mut row = vec![r.label.clone()];
                row.extend(r.values.iter().map(u64::to_string));
                row.extend([format!("{:.2} ± {:.2}", r.average, r.std), r.max.to_string(), r.total.to_string()]);
                row
            })
            .collect();
        cells.insert(0, header);
        let widths: Vec<usize> =
            (0..cells[0].len()).map(|j| cells.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
        let rule: String = "-".repeat(widths.iter().sum::<usize>() + 3 * (widths.len() - 1));
        let mut out = String::new();
        for (i, row) in cells.iter().enumerate() {
            if i == 1 || i == 1 + KINDS || i == 2 + KINDS {
                out.push_str(&rule);
                out.push('\n');
            }
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let pad = widths[j] - c.chars().count();
                    if j == 0 {
                        format!("{c}{}", " ".repeat(pad))
                    } else {
                        format!("{}{c}", " ".repeat(pad))
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(" | "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn like(did: &str) -> RawEvent {
        RawEvent {
            did: did.into(),
            uri: format!("{did}-l"),
            kind: ActionKind::Like,
            text: None,
            langs: None,
            created_at: 0,
            subject_uri: Some("x".into()),
            subject_did: None,
            parent_uri: None,
            root_uri: None,
        }
    }

    #[test]
    fn like_totals() {
        let mut events: Vec<RawEvent> = (0..3).map(|_| like("a")).collect();
        events.extend((0..5).map(|_| like("b")));
        let assignment = HashMap::from([("a".to_string(), 0), ("b".to_string(), 1)]);
        let s = cluster_stats(&events, &assignment);
        let row = &s.rows()[ActionKind::Like.index()];
        assert_eq!(row.total, 8);
        assert_eq!(row.average, 4.0);
        assert_eq!(row.max, 5);
        assert_eq!(row.std, 1.0);
        assert_eq!(s.total(ActionKind::Like), 8);
    }

    #[test]
    fn empty_dataset() {
        let s = cluster_stats(&[], &HashMap::new());
        assert!(s.rows().iter().all(|r| r.total == 0 && r.values.is_empty()));
        assert!(s.to_csv().unwrap().starts_with("action,average,std,max,total\n"));
    }

    #[test]
    fn table_layout() {
        let assignment = HashMap::from([("a".to_string(), 0)]);
        let text = cluster_stats(&[like("a")], &assignment).to_text_table();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("Action") && lines[0].ends_with("Total"));
        assert_eq!(lines.len(), 1 + 3 + KINDS + 2);
        assert!(text.contains("1.00 ± 0.00"));
    }
}
