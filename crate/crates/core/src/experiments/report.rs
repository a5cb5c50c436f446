use crate::fmt::num;
use crate::ensemble::ParticleEnsemble;
use serde::Serialize;
use std::fmt::Write;

/// One statistic of one experiment. `pass` is `value ≤ tolerance` when a
/// tolerance is stated and absent otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub n: usize,
    pub d: usize,
    pub t: f64,
    pub statistic: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
    pub replicas: usize,
    pub seed: u64,
}

impl ReportRow {
    pub fn new(head: &RowHead, statistic: impl Into<String>, value: f64) -> Self {
        ReportRow {
            experiment: head.experiment.to_string(),
            n: head.n,
            d: head.d,
            t: head.t,
            statistic: statistic.into(),
            value,
            tolerance: None,
            pass: None,
            replicas: head.replicas,
            seed: head.seed,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self.pass = Some(self.value <= tolerance);
        self
    }
}

/// Fields shared by every row of one report.
#[derive(Debug, Clone, Copy)]
pub struct RowHead {
    pub experiment: &'static str,
    pub n: usize,
    pub d: usize,
    pub t: f64,
    pub replicas: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    pub summary: serde_json::Value,
    /// Per-replica snapshots, kept only on request.
    #[serde(skip)]
    pub snapshots: Vec<Vec<ParticleEnsemble>>,
}

impl Report {
    /// False when any row with a tolerance failed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn row(&self, statistic: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.statistic == statistic)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,N,d,t,statistic,value,tolerance,pass,replicas,seed_base\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.experiment,
                r.n,
                r.d,
                num(r.t),
                r.statistic,
                num(r.value),
                r.tolerance.map(num).unwrap_or_default(),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
                r.replicas,
                r.seed
            )
            .unwrap();
        }
        out
    }
}
