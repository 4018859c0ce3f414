//! Requirement-to-test traceability.

use super::TestSuite;
use crate::model::SafetyRequirement;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceabilityMatrix {
    pub ssrs: Vec<String>,
    pub tests: Vec<String>,
    /// `cells[i][j]`: test `j` exercises a transition labelled with requirement `i`.
    pub cells: Vec<Vec<bool>>,
    /// Number of tests per requirement.
    pub counts: Vec<usize>,
    /// Share of requirements exercised by at least one test.
    pub coverage_percent: f64,
}

pub fn traceability(suite: &TestSuite, ssrs: &[SafetyRequirement]) -> TraceabilityMatrix {
    let tests: Vec<String> = suite.cases.iter().map(|c| c.id.clone()).collect();
    let cells: Vec<Vec<bool>> = ssrs
        .iter()
        .map(|r| suite.cases.iter().map(|c| c.covered_ssrs.contains(&r.id)).collect())
        .collect();
    let counts: Vec<usize> = cells.iter().map(|row| row.iter().filter(|&&b| b).count()).collect();
    let covered = counts.iter().filter(|&&n| n > 0).count();
    let coverage_percent = if ssrs.is_empty() {
        100.0
    } else {
        100.0 * covered as f64 / ssrs.len() as f64
    };
    TraceabilityMatrix {
        ssrs: ssrs.iter().map(|r| r.id.clone()).collect(),
        tests,
        cells,
        counts,
        coverage_percent,
    }
}

impl TraceabilityMatrix {
    /// Requirements no test exercises.
    pub fn uncovered(&self) -> Vec<&str> {
        self.ssrs
            .iter()
            .zip(&self.counts)
            .filter(|(_, &n)| n == 0)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    /// One row per requirement (`x` marks a cell) and a final `coverage_percent` row.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["ssr_id".to_string()];
        header.extend(self.tests.iter().cloned());
        header.push("count".into());
        w.write_record(&header)?;
        for (i, ssr) in self.ssrs.iter().enumerate() {
            let mut row = vec![ssr.clone()];
            row.extend(self.cells[i].iter().map(|&b| if b { "x" } else { "" }.to_string()));
            row.push(self.counts[i].to_string());
            w.write_record(&row)?;
        }
        let mut footer = vec!["coverage_percent".to_string()];
        footer.extend(self.tests.iter().map(|_| String::new()));
        footer.push(format!("{:.1}", self.coverage_percent));
        w.write_record(&footer)?;
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
