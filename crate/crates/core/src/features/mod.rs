//! Contextual features for `<user, program>` pairs, computed from a history
//! window of viewing.

mod dataset;
mod export;
mod extract;
mod funksvd;
mod stats;
pub mod text;

use serde::{Deserialize, Serialize};

pub use dataset::{build_dataset, FeatureContext, QueryGroup};
pub use export::{export_dataset, write_schema, write_svmlight};
pub use extract::{extract, Signals};
pub use funksvd::{FunkSvd, FunkSvdParams};
pub use stats::{build_stats, HistoryStats, UserCounters, WeekRange, WindowCounters};

use crate::error::{Error, Result};

const REPETITION: [&str; 7] = [
    "user_program_views",
    "user_program_time_share",
    "user_channel_share",
    "global_program_rank",
    "global_program_audience_share",
    "episodes_watched",
    "episodes_remaining",
];

const CATEGORY: [&str; 4] = [
    "user_category_share",
    "user_subcategory_share",
    "global_category_share",
    "global_subcategory_share",
];

const TIME: [&str; 8] = [
    "broadcast_on_weekend",
    "daypart_morning",
    "daypart_afternoon",
    "daypart_evening",
    "daypart_night",
    "user_daypart_share",
    "hours_since_broadcast",
    "days_since_last_watched",
];

const TEXT: [&str; 2] = ["title_jaccard", "content_similarity"];

const CHARACTERISTICS: [&str; 4] = ["is_series", "episode_count", "program_age_days", "duration_minutes"];

const COLLABORATIVE: [&str; 2] = ["wrmf_score", "funksvd_score"];

const PRESENCE: [&str; 4] = [
    "has_user_history",
    "program_seen_in_window",
    "has_watched_before",
    "cf_known",
];

/// Ordered, unique feature names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub names: Vec<String>,
}

impl FeatureSchema {
    /// Repetition, category, time, text, characteristics and collaborative
    /// groups, then repetition and category again over the last one and two
    /// weeks of the window, then presence indicators.
    pub fn standard() -> Self {
        let mut names: Vec<String> = Vec::new();
        let plain = |xs: &[&str], names: &mut Vec<String>| names.extend(xs.iter().map(|s| s.to_string()));
        plain(&REPETITION, &mut names);
        plain(&CATEGORY, &mut names);
        plain(&TIME, &mut names);
        plain(&TEXT, &mut names);
        plain(&CHARACTERISTICS, &mut names);
        plain(&COLLABORATIVE, &mut names);
        for suffix in ["last1w", "last2w"] {
            for n in REPETITION.iter().chain(CATEGORY.iter()) {
                names.push(format!("{n}_{suffix}"));
            }
        }
        plain(&PRESENCE, &mut names);
        FeatureSchema { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn check(&self, v: &FeatureVector) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::SchemaMismatch {
                expected: self.len(),
                actual: v.len(),
            });
        }
        Ok(())
    }
}

/// Feature values in schema order. Never contains NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Numerical(format!("feature {i} is NaN")));
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}
