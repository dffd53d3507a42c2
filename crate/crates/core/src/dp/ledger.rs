use serde::{Deserialize, Serialize};

use super::PrivacyParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub params: PrivacyParams,
}

/// Append-only record of releases; totals follow sequential composition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    spent_epsilon: f64,
    spent_delta: f64,
    entries: Vec<LedgerEntry>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    #[must_use]
    pub fn charge(mut self, label: impl Into<String>, params: PrivacyParams) -> BudgetLedger {
        self.spent_epsilon += params.epsilon;
        self.spent_delta += params.delta;
        self.entries.push(LedgerEntry {
            label: label.into(),
            params,
        });
        self
    }

    pub fn spent_epsilon(&self) -> f64 {
        self.spent_epsilon
    }

    pub fn spent_delta(&self) -> f64 {
        self.spent_delta
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }
}
