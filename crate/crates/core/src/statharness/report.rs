use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub passed: bool,
    /// Headline statistic (p-value, distance, slope, ...).
    pub value: f64,
    /// Human-readable pass condition.
    pub threshold: String,
    /// Replicates behind the statistic (0 for exact checks).
    pub reps: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CriterionResult {
    pub fn new(
        name: impl Into<String>,
        passed: bool,
        value: f64,
        threshold: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed,
            value,
            threshold: threshold.into(),
            reps: 0,
            detail: String::new(),
        }
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps as u64;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "[{}] {}: {} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            fmt_value(self.value),
            self.threshold
        );
        if self.reps > 0 {
            s.push_str(&format!(" reps={}", self.reps));
        }
        if !self.detail.is_empty() {
            s.push_str(" -- ");
            s.push_str(&self.detail);
        }
        s
    }
}

fn fmt_value(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-3 && v.abs() < 1e6) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub suite: String,
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
}

impl TestReport {
    pub fn new(suite: impl Into<String>, seed: u64) -> Self {
        Self {
            suite: suite.into(),
            seed,
            criteria: Vec::new(),
        }
    }

    pub fn push(&mut self, c: CriterionResult) {
        self.criteria.push(c);
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.criteria.iter().map(|c| c.line()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
