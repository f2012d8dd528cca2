//! Per-case evaluation rows and their CSV / JSON emission.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::stats::{summarize, Summary, BOOTSTRAP_RESAMPLES};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub case: String,
    pub structure: String,
    /// `ok` or `error`.
    pub status: String,
    pub error: Option<String>,
    /// `;`-separated diagnostic codes.
    pub warnings: String,
    pub dice: Option<f64>,
    pub asd_mm: Option<f64>,
    pub hd_mm: Option<f64>,
    pub angulation_anterior_deg: Option<f64>,
    pub angulation_posterior_deg: Option<f64>,
    pub angulation_shaft_deg: Option<f64>,
    pub displacement_anterior_mm: Option<f64>,
    pub displacement_posterior_mm: Option<f64>,
    pub displacement_shaft_mm: Option<f64>,
}

impl EvaluationRow {
    pub fn failed(case: &str, structure: &str, error: impl ToString) -> Self {
        Self {
            case: case.into(),
            structure: structure.into(),
            status: "error".into(),
            error: Some(error.to_string()),
            ..Self::default()
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn metrics(&self) -> [(&'static str, Option<f64>); 9] {
        [
            ("dice", self.dice),
            ("asd_mm", self.asd_mm),
            ("hd_mm", self.hd_mm),
            ("angulation_anterior_deg", self.angulation_anterior_deg),
            ("angulation_posterior_deg", self.angulation_posterior_deg),
            ("angulation_shaft_deg", self.angulation_shaft_deg),
            ("displacement_anterior_mm", self.displacement_anterior_mm),
            ("displacement_posterior_mm", self.displacement_posterior_mm),
            ("displacement_shaft_mm", self.displacement_shaft_mm),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// How the median confidence interval was obtained.
    pub ci_method: String,
    pub seed: u64,
    pub rows: Vec<EvaluationRow>,
    /// structure → metric → summary over successful rows.
    pub summary: BTreeMap<String, BTreeMap<String, Summary>>,
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    /// Rows are sorted by `(case, structure)` before summarizing.
    pub fn new(mut rows: Vec<EvaluationRow>, seed: u64) -> Self {
        rows.sort_by(|a, b| (&a.case, &a.structure).cmp(&(&b.case, &b.structure)));
        let mut columns: BTreeMap<String, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
        for row in rows.iter().filter(|r| r.is_ok()) {
            let per = columns.entry(row.structure.clone()).or_default();
            for (name, value) in row.metrics() {
                if let Some(v) = value {
                    per.entry(name).or_default().push(v);
                }
            }
        }
        let summary = columns
            .into_iter()
            .map(|(structure, metrics)| {
                let stats = metrics
                    .into_iter()
                    .filter_map(|(name, values)| Some((name.to_string(), summarize(&values, seed)?)))
                    .collect();
                (structure, stats)
            })
            .collect();
        let mut warnings = Vec::new();
        if rows.is_empty() {
            warnings.push("no cases found".to_string());
        }
        Self {
            ci_method: format!(
                "percentile bootstrap of the median, {BOOTSTRAP_RESAMPLES} resamples, seed {seed}"
            ),
            seed,
            rows,
            summary,
            warnings,
        }
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// One line per row, then `summary:<stat>` lines per structure.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "case", "structure", "status", "error", "warnings", "dice", "asd_mm", "hd_mm",
            "angulation_anterior_deg", "angulation_posterior_deg", "angulation_shaft_deg",
            "displacement_anterior_mm", "displacement_posterior_mm", "displacement_shaft_mm",
        ];
        w.write_record(header).expect("in-memory csv");
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.rows {
            let mut rec = vec![
                row.case.clone(),
                row.structure.clone(),
                row.status.clone(),
                row.error.clone().unwrap_or_default(),
                row.warnings.clone(),
            ];
            rec.extend(row.metrics().iter().map(|(_, v)| fmt(*v)));
            w.write_record(&rec).expect("in-memory csv");
        }
        type Stat = (&'static str, fn(&Summary) -> f64);
        let stats: [Stat; 7] = [
            ("n", |s| s.n as f64),
            ("mean", |s| s.mean),
            ("std", |s| s.std),
            ("median", |s| s.median),
            ("ci95_low", |s| s.ci_low),
            ("ci95_high", |s| s.ci_high),
            ("max", |s| s.max),
        ];
        for (structure, metrics) in &self.summary {
            for (stat, get) in stats {
                let mut rec = vec![
                    format!("summary:{stat}"),
                    structure.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                ];
                rec.extend(header[5..].iter().map(|name| fmt(metrics.get(*name).map(get))));
                w.write_record(&rec).expect("in-memory csv");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}
