//! Weak dominance of baseline frontier points by IAC-MDSF points.

use crate::output::{fmt_num, ReportRecord};

pub const DOMINANCE_SLACK: f64 = 1e-12;

/// Whether `a` is at least as good as `b` in both coordinates. PF wants less
/// leakage and more utility; IB wants more relevance `I(S;X̂)` at a lower
/// rate `I(X;X̂)`.
pub fn weakly_dominates(a: &ReportRecord, b: &ReportRecord, problem: &str) -> bool {
    if problem == "ib" {
        a.leakage_bits >= b.leakage_bits - DOMINANCE_SLACK && a.utility_bits <= b.utility_bits + DOMINANCE_SLACK
    } else {
        a.leakage_bits <= b.leakage_bits + DOMINANCE_SLACK && a.utility_bits >= b.utility_bits - DOMINANCE_SLACK
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub baseline: ReportRecord,
    /// `λ` of the first IAC-MDSF point dominating the baseline point.
    pub dominated_by: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceTable {
    pub problem: String,
    pub rows: Vec<DominanceRow>,
}

impl DominanceTable {
    pub fn build(iac: &[ReportRecord], baseline: &[ReportRecord]) -> DominanceTable {
        let problem = baseline.first().or(iac.first()).map_or_else(|| "pf".to_string(), |r| r.problem.clone());
        let rows = baseline
            .iter()
            .map(|b| DominanceRow {
                baseline: b.clone(),
                dominated_by: iac.iter().find(|a| weakly_dominates(a, b, &problem)).map(|a| a.lambda),
            })
            .collect();
        DominanceTable { problem, rows }
    }

    pub fn dominated(&self) -> usize {
        self.rows.iter().filter(|r| r.dominated_by.is_some()).count()
    }

    /// Percentage of baseline points dominated; `None` without baseline
    /// points.
    pub fn percentage(&self) -> Option<f64> {
        if self.rows.is_empty() {
            None
        } else {
            Some(100.0 * self.dominated() as f64 / self.rows.len() as f64)
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{:>16} {:>16} {:>16} {:>8}  dominated_by_lambda\n",
            "threshold_bits", "leakage_bits", "utility_bits", "|X^|"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:>16} {:>16} {:>16} {:>8}  {}\n",
                fmt_num(r.baseline.lambda),
                fmt_num(r.baseline.leakage_bits),
                fmt_num(r.baseline.utility_bits),
                r.baseline.alphabet_size,
                r.dominated_by.map_or_else(|| "-".to_string(), fmt_num),
            ));
        }
        match self.percentage() {
            Some(p) => out.push_str(&format!(
                "{} of {} pairwise points weakly dominated ({}%)\n",
                self.dominated(),
                self.rows.len(),
                fmt_num(p)
            )),
            None => out.push_str("no pairwise points to compare\n"),
        }
        out
    }
}
