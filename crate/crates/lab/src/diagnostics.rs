//! Output files: `diagnostics.csv`, `summary.json` and `plotdata/*.tsv`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, LabResult};

/// Tracked quantities at one output time. Per-soliton vectors have length
/// `N`; `i_j` holds `𝓘_j` for `j = 2..N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub mass: f64,
    pub momentum: f64,
    pub q: Vec<f64>,
    pub eps_l2: f64,
    pub eps_h1: f64,
    pub i_value: f64,
    pub i_j: Vec<f64>,
    pub h_value: f64,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    pub c: Vec<f64>,
    pub fit_residual: f64,
}

pub fn column_names(n: usize) -> Vec<String> {
    let per = |name: &'static str, from: usize| (from..=n).map(move |j| format!("{name}_{j}"));
    let mut cols: Vec<String> = ["t", "E", "M", "P"].iter().map(|s| s.to_string()).collect();
    cols.extend(per("Q", 1));
    cols.extend(["eps_l2", "eps_h1", "I"].iter().map(|s| s.to_string()));
    cols.extend(per("I", 2));
    cols.push("H".into());
    for name in ["theta", "x", "omega", "c"] {
        cols.extend(per(name, 1));
    }
    cols.push("fit_residual".into());
    cols
}

impl DiagnosticsRecord {
    fn values(&self) -> Vec<f64> {
        let mut v = vec![self.t, self.energy, self.mass, self.momentum];
        v.extend(&self.q);
        v.extend([self.eps_l2, self.eps_h1, self.i_value]);
        v.extend(&self.i_j);
        v.push(self.h_value);
        for s in [&self.theta, &self.x, &self.omega, &self.c] {
            v.extend(s.iter());
        }
        v.push(self.fit_residual);
        v
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
fn fmt_f64(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a string");
}

pub fn render_csv(records: &[DiagnosticsRecord], n: usize) -> String {
    let cols = column_names(n);
    let mut out = String::new();
    writeln!(out, "# columns: {}", cols.join(" ")).unwrap();
    writeln!(out, "{}", cols.join(",")).unwrap();
    for r in records {
        for (k, v) in r.values().into_iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            fmt_f64(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// One machine-checkable verdict in `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
            note: None,
        }
    }

    /// Passes when `value > threshold`.
    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value > threshold,
            note: None,
        }
    }

    pub fn exact(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: expected,
            pass: value == expected,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub pass: bool,
    pub verdicts: Vec<Verdict>,
    /// Scenario-specific figures that carry no verdict.
    pub details: serde_json::Map<String, serde_json::Value>,
    /// Set when the run stopped early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub t: Option<f64>,
    pub message: String,
}

impl Summary {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.into(),
            pass: true,
            verdicts: Vec::new(),
            details: serde_json::Map::new(),
            failure: None,
        }
    }

    pub fn push(&mut self, v: Verdict) {
        self.pass &= v.pass;
        self.verdicts.push(v);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("serializable detail");
        self.details.insert(key.into(), v);
    }

    pub fn fail(&mut self, t: Option<f64>, message: impl Into<String>) {
        self.pass = false;
        self.failure = Some(Failure {
            t,
            message: message.into(),
        });
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

/// A named table for external plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join("\t"));
        for row in &self.rows {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push('\t');
                }
                fmt_f64(&mut out, *v);
            }
            out.push('\n');
        }
        out
    }
}

/// Everything a scenario produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Summary,
    pub records: Option<(usize, Vec<DiagnosticsRecord>)>,
    pub plots: Vec<PlotTable>,
}

impl Report {
    pub fn new(summary: Summary) -> Self {
        Self {
            summary,
            records: None,
            plots: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> LabResult<()> {
        fn io(p: &Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
            move |e| LabError::io(p, e)
        }
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        if let Some((n, records)) = &self.records {
            let p = dir.join("diagnostics.csv");
            std::fs::write(&p, render_csv(records, *n)).map_err(io(&p))?;
        }
        let p = dir.join("summary.json");
        let json = serde_json::to_string_pretty(&self.summary).expect("serializable summary");
        std::fs::write(&p, json + "\n").map_err(io(&p))?;
        if !self.plots.is_empty() {
            let plot_dir: PathBuf = dir.join("plotdata");
            std::fs::create_dir_all(&plot_dir).map_err(io(&plot_dir))?;
            for t in &self.plots {
                let p = plot_dir.join(format!("{}.tsv", t.name));
                std::fs::write(&p, t.render()).map_err(io(&p))?;
            }
        }
        Ok(())
    }
}

/// Plot table of the scalar columns of `records` against time.
pub fn time_series(records: &[DiagnosticsRecord], n: usize) -> PlotTable {
    let cols = column_names(n);
    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = PlotTable::new("time_series", &refs);
    t.rows = records.iter().map(DiagnosticsRecord::values).collect();
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            energy: -1.0 / 3.0,
            mass: 2.0,
            momentum: 0.1,
            q: vec![1.0, 2.0],
            eps_l2: 0.0,
            eps_h1: 0.0,
            i_value: 3.0,
            i_j: vec![0.5],
            h_value: 0.0,
            theta: vec![0.0, 0.1],
            x: vec![-1.0, 1.0],
            omega: vec![2.0, 5.0],
            c: vec![2.0, 4.0],
            fit_residual: 1e-12,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = render_csv(&[record(0.0), record(0.5)], 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# columns: t E M P Q_1 Q_2 eps_l2"));
        assert_eq!(lines[1].split(',').count(), column_names(2).len());
        assert_eq!(lines.len(), 4);
        let fields: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields.len(), column_names(2).len());
        // 17 significant digits round-trip exactly
        assert_eq!(fields[1], -1.0 / 3.0);
        assert_eq!(
            column_names(1)
                .iter()
                .filter(|c| c.starts_with("I_"))
                .count(),
            0
        );
    }

    #[test]
    fn summary_aggregates_verdicts() {
        let mut s = Summary::new("x");
        s.push(Verdict::at_most("a", 1.0, 2.0));
        assert!(s.pass);
        s.push(Verdict::above("b", 0.0, 0.0));
        assert!(!s.pass);
        assert!(!s.verdict("b").unwrap().pass);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["verdicts"][0]["threshold"], 2.0);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new(Summary::new("x"));
        r.records = Some((2, vec![record(0.0)]));
        r.plots.push(time_series(&[record(0.0)], 2));
        r.write(dir.path()).unwrap();
        assert!(dir.path().join("diagnostics.csv").exists());
        assert!(dir.path().join("plotdata/time_series.tsv").exists());
        let s: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("summary.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(s["scenario"], "x");
    }
}
