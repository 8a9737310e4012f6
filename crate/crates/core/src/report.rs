//! Named pass/fail conditions with their residuals.

use std::fmt;

use crate::matrix::MatrixSeries;

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: String,
    pub pass: bool,
    /// Stored coefficients of the residual; zero for boolean conditions.
    pub nonzero_terms: usize,
    /// Where the first nonzero residual entry sits, or a note.
    pub detail: String,
    pub residual: Option<MatrixSeries>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditionReport {
    pub conditions: Vec<Condition>,
}

impl ConditionReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a matrix residual; the condition passes iff it vanishes.
    pub fn push_matrix(&mut self, name: impl Into<String>, residual: MatrixSeries) {
        let detail = first_nonzero(&residual).unwrap_or_default();
        self.conditions.push(Condition {
            name: name.into(),
            pass: residual.is_zero(),
            nonzero_terms: residual.nonzero_terms(),
            detail,
            residual: Some(residual),
        });
    }

    /// Records a residual given only by its nonzero-term count.
    pub fn push_count(&mut self, name: impl Into<String>, nonzero_terms: usize, detail: impl Into<String>) {
        self.conditions.push(Condition {
            name: name.into(),
            pass: nonzero_terms == 0,
            nonzero_terms,
            detail: detail.into(),
            residual: None,
        });
    }

    pub fn push_flag(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.conditions.push(Condition {
            name: name.into(),
            pass,
            nonzero_terms: 0,
            detail: detail.into(),
            residual: None,
        });
    }

    pub fn extend(&mut self, other: ConditionReport) {
        self.conditions.extend(other.conditions);
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.conditions.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }
}

fn first_nonzero(m: &MatrixSeries) -> Option<String> {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if let Some((e, c)) = m.get(i, j).terms().next() {
                return Some(format!("entry ({i},{j}), exponent {e:?}, coefficient {c}"));
            }
        }
    }
    None
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.conditions.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.conditions {
            write!(f, "{:<width$}  {}", c.name, if c.pass { "pass" } else { "FAIL" })?;
            if !c.pass && c.nonzero_terms > 0 {
                write!(f, "  ({} nonzero terms)", c.nonzero_terms)?;
            }
            if !c.detail.is_empty() && !c.pass {
                write!(f, "  {}", c.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
