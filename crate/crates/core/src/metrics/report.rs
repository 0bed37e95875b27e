use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{RunKpis, INDICATORS};

/// Sample mean with a two-sided 95% Student-t confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

pub fn aggregate(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate {
            mean: 0.0,
            ci_low: None,
            ci_high: None,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate {
            mean,
            ci_low: None,
            ci_high: None,
        };
    }
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * (variance / n as f64).sqrt();
    Estimate {
        mean,
        ci_low: Some(mean - half),
        ci_high: Some(mean + half),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSummary {
    pub name: String,
    pub unit: String,
    #[serde(flatten)]
    pub estimate: Estimate,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub warmup_years: f64,
    pub horizon_years: f64,
    pub indicators: Vec<IndicatorSummary>,
    /// Per simulated year, the indicator means over runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_year: Vec<Vec<f64>>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl Report {
    pub fn from_runs(scenario: &str, warmup_years: f64, horizon_years: f64, runs: &[RunKpis]) -> Self {
        let per_run: Vec<Vec<f64>> = runs.iter().map(RunKpis::indicators).collect();
        let indicators = INDICATORS
            .iter()
            .enumerate()
            .map(|(k, ind)| {
                let values: Vec<f64> = per_run.iter().map(|v| v[k]).collect();
                IndicatorSummary {
                    name: ind.name.to_string(),
                    unit: ind.unit.to_string(),
                    estimate: aggregate(&values),
                    values,
                }
            })
            .collect();
        let yearly: Vec<Vec<Vec<f64>>> = runs.iter().map(RunKpis::yearly_indicators).collect();
        let years = yearly.iter().map(Vec::len).min().unwrap_or(0);
        let per_year = (0..years)
            .map(|y| {
                (0..INDICATORS.len())
                    .map(|k| yearly.iter().map(|r| r[y][k]).sum::<f64>() / yearly.len() as f64)
                    .collect()
            })
            .collect();
        Report {
            scenario: scenario.to_string(),
            seeds: runs.iter().map(|r| r.seed).collect(),
            warmup_years,
            horizon_years,
            indicators,
            per_year,
        }
    }

    pub fn get(&self, name: &str) -> Option<&IndicatorSummary> {
        self.indicators.iter().find(|i| i.name == name)
    }

    pub fn mean(&self, name: &str) -> f64 {
        self.get(name).unwrap_or_else(|| panic!("unknown indicator {name}")).estimate.mean
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("indicator,mean,ci_low,ci_high,unit\n");
        for i in &self.indicators {
            let e = &i.estimate;
            writeln!(out, "{},{:.6},{},{},{}", i.name, e.mean, fmt_opt(e.ci_low), fmt_opt(e.ci_high), i.unit).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        text.push('\n');
        text
    }

    /// Long format: one row per year and indicator.
    pub fn per_year_csv(&self) -> String {
        let mut out = String::from("year,indicator,value\n");
        for (y, values) in self.per_year.iter().enumerate() {
            for (ind, v) in INDICATORS.iter().zip(values) {
                writeln!(out, "{},{},{:.6}", y + 1, ind.name, v).unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    indicator: String,
    mean: f64,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    unit: String,
}

pub fn read_csv_report(path: &Path) -> Result<Vec<IndicatorSummary>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    reader
        .deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(IndicatorSummary {
                name: row.indicator,
                unit: row.unit,
                estimate: Estimate {
                    mean: row.mean,
                    ci_low: row.ci_low,
                    ci_high: row.ci_high,
                },
                values: Vec::new(),
            })
        })
        .collect()
}

/// Several reports side by side, with relative changes against the first.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub rows: Vec<(String, String, Vec<Estimate>)>,
}

pub fn compare_reports(reports: &[(String, Vec<IndicatorSummary>)]) -> Result<Comparison, String> {
    let (first_label, first) = reports.first().ok_or("no reports to compare")?;
    let names: Vec<&str> = first.iter().map(|i| i.name.as_str()).collect();
    for (label, r) in &reports[1..] {
        let other: Vec<&str> = r.iter().map(|i| i.name.as_str()).collect();
        if other != names {
            return Err(format!("{label} has different indicators than {first_label}"));
        }
    }
    let rows = first
        .iter()
        .enumerate()
        .map(|(k, i)| (i.name.clone(), i.unit.clone(), reports.iter().map(|(_, r)| r[k].estimate).collect()))
        .collect();
    Ok(Comparison {
        labels: reports.iter().map(|(l, _)| l.clone()).collect(),
        rows,
    })
}

fn delta_percent(base: f64, value: f64) -> Option<f64> {
    (base != 0.0).then(|| 100.0 * (value - base) / base.abs())
}

impl Comparison {
    /// Relative change of report `column` against the first, in percent.
    pub fn delta(&self, indicator: &str, column: usize) -> Option<f64> {
        let (_, _, est) = self.rows.iter().find(|(n, _, _)| n == indicator)?;
        delta_percent(est[0].mean, est[column].mean)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("indicator,unit");
        for (k, l) in self.labels.iter().enumerate() {
            write!(out, ",{l}:mean,{l}:ci_low,{l}:ci_high").unwrap();
            if k > 0 {
                write!(out, ",{l}:delta_pct").unwrap();
            }
        }
        out.push('\n');
        for (name, unit, est) in &self.rows {
            write!(out, "{name},{unit}").unwrap();
            for (k, e) in est.iter().enumerate() {
                write!(out, ",{:.6},{},{}", e.mean, fmt_opt(e.ci_low), fmt_opt(e.ci_high)).unwrap();
                if k > 0 {
                    write!(out, ",{}", fmt_opt(delta_percent(est[0].mean, e.mean))).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text table of means and deltas.
    pub fn to_table(&self) -> String {
        let mut header = vec!["indicator".to_string(), "unit".to_string()];
        for (k, l) in self.labels.iter().enumerate() {
            header.push(l.clone());
            if k > 0 {
                header.push("delta %".into());
            }
        }
        let mut lines = vec![header];
        for (name, unit, est) in &self.rows {
            let mut line = vec![name.clone(), unit.clone()];
            for (k, e) in est.iter().enumerate() {
                let ci = match (e.ci_low, e.ci_high) {
                    (Some(lo), Some(hi)) => format!(" [{lo:.2}, {hi:.2}]"),
                    _ => String::new(),
                };
                line.push(format!("{:.2}{ci}", e.mean));
                if k > 0 {
                    line.push(delta_percent(est[0].mean, e.mean).map(|d| format!("{d:+.1}")).unwrap_or_else(|| "-".into()));
                }
            }
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for l in &lines {
            let cells: Vec<String> = l.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
