use serde::{Deserialize, Serialize};

use super::EvalError;

/// Accuracies (percent) of one method over a set of protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub method: String,
    pub entries: Vec<(String, f64)>,
}

impl ResultsTable {
    pub fn mean(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|e| e.1).sum::<f64>() / self.entries.len() as f64
    }

    pub fn get(&self, protocol: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == protocol).map(|e| e.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(format!("unknown report format {s:?} (expected csv or markdown)")),
        }
    }
}

const MEAN: &str = "Mean";

fn columns(tables: &[ResultsTable]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for t in tables {
        for (p, _) in &t.entries {
            if !cols.contains(p) {
                cols.push(p.clone());
            }
        }
    }
    cols
}

/// One row per table, one column per protocol (in first-seen order) plus
/// `Mean`. Cells for protocols a table lacks are left empty.
pub fn emit_report(tables: &[ResultsTable], format: ReportFormat) -> Result<String, EvalError> {
    if tables.is_empty() {
        return Err(EvalError::Report("no tables to report".into()));
    }
    let cols = columns(tables);
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["method".to_string()];
            header.extend(cols.iter().cloned());
            header.push(MEAN.into());
            w.write_record(&header).map_err(|e| EvalError::Report(e.to_string()))?;
            for t in tables {
                let mut row = vec![t.method.clone()];
                row.extend(cols.iter().map(|c| t.get(c).map(|v| v.to_string()).unwrap_or_default()));
                row.push(t.mean().to_string());
                w.write_record(&row).map_err(|e| EvalError::Report(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| EvalError::Report(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
        }
        ReportFormat::Markdown => {
            let mut out = format!("| Method | {} | {MEAN} |\n", cols.join(" | "));
            out.push_str(&format!("|---|{}---|\n", "---|".repeat(cols.len())));
            for t in tables {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|c| t.get(c).map_or_else(|| "-".to_string(), |v| format!("{v:.1}")))
                    .collect();
                out.push_str(&format!("| {} | {} | {:.1} |\n", t.method, cells.join(" | "), t.mean()));
            }
            Ok(out)
        }
    }
}

/// Parses a CSV report and checks every `Mean` cell against the recomputed
/// mean.
pub fn parse_report_csv(text: &str) -> Result<Vec<ResultsTable>, EvalError> {
    let err = |m: String| EvalError::Report(m);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| err(e.to_string()))?.iter().map(String::from).collect();
    if header.len() < 2 || header[0] != "method" || header.last().map(String::as_str) != Some(MEAN) {
        return Err(err("header must be method,<protocols...>,Mean".into()));
    }
    let protocols = &header[1..header.len() - 1];
    let mut tables = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let mut entries = Vec::new();
        for (i, p) in protocols.iter().enumerate() {
            let cell = &rec[i + 1];
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| err(format!("bad accuracy {cell:?} for {p}")))?;
            if !(0.0..=100.0).contains(&v) {
                return Err(err(format!("accuracy {v} for {p} outside [0, 100]")));
            }
            entries.push((p.clone(), v));
        }
        let table = ResultsTable {
            method: rec[0].to_string(),
            entries,
        };
        let stated: f64 = rec[header.len() - 1]
            .parse()
            .map_err(|_| err(format!("bad mean {:?}", &rec[header.len() - 1])))?;
        if (stated - table.mean()).abs() > 1e-9 {
            return Err(err(format!("{}: stated mean {stated} differs from {}", table.method, table.mean())));
        }
        tables.push(table);
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(method: &str, accs: &[(&str, f64)]) -> ResultsTable {
        ResultsTable {
            method: method.into(),
            entries: accs.iter().map(|&(p, a)| (p.to_string(), a)).collect(),
        }
    }

    #[test]
    fn means() {
        assert_eq!(table("a", &[("p", 81.0)]).mean(), 81.0);
        assert_eq!(table("a", &[("p", 80.0), ("q", 90.0)]).mean(), 85.0);
    }

    #[test]
    fn csv_round_trip() {
        let tables = vec![
            table("hpm", &[("V_{1,2}^3", 100.0), ("V_{1,3}^2", 200.0 / 3.0)]),
            table("traj", &[("V_{1,3}^2", 12.5)]),
        ];
        let csv = emit_report(&tables, ReportFormat::Csv).unwrap();
        assert!(csv.starts_with("method,\"V_{1,2}^3\",\"V_{1,3}^2\",Mean\n"));
        assert_eq!(parse_report_csv(&csv).unwrap(), tables);
    }

    #[test]
    fn markdown_layout() {
        let md = emit_report(&[table("hpm", &[("V_{1,2}^3", 80.0), ("V_{1,2}^4", 90.0)])], ReportFormat::Markdown).unwrap();
        assert_eq!(md, "| Method | V_{1,2}^3 | V_{1,2}^4 | Mean |\n|---|---|---|---|\n| hpm | 80.0 | 90.0 | 85.0 |\n");
    }

    #[test]
    fn rejects_bad_mean_and_empty() {
        assert!(parse_report_csv("method,p,Mean\nx,80,81\n").is_err());
        assert!(emit_report(&[], ReportFormat::Csv).is_err());
    }
}
