//! Sliding-window cross-validation of the recommenders on Live and
//! Catch-up scenarios.

mod pipeline;
mod report;
mod run;
mod sessions;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use pipeline::{fit_window, train_ranker, training_groups, FoldModels, WindowModels};
pub use report::{read_report_csv, render_table, write_report_csv, Metric, ReportRow};
pub use run::{cross_validate, evaluate_fold, CrossValidation, FoldResult, LtrCurve, Prepared, Recommender, UserView};
pub use sessions::{
    build_queries, candidates, catchup_candidates, live_candidates, sessions, Candidate, Query, QueryCounts, Reference,
    Session, SESSION_GAP,
};

use crate::domain::{PreferenceRule, ViewEvent, ViewMode};
use crate::error::{Error, Result};
use crate::features::{FunkSvdParams, WeekRange};
use crate::ingestion::ViewLog;
use crate::ltr::LtrParams;
use crate::rerank::ObjectiveWeights;
use crate::wrmf::WrmfParams;

/// Six consecutive weeks: four of feature history, one of training labels,
/// one of evaluation targets. Week indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub history_weeks: [i64; 4],
    pub train_label_week: i64,
    pub target_week: i64,
}

impl FoldSpec {
    pub fn starting_at(first: i64) -> Self {
        FoldSpec {
            history_weeks: [first, first + 1, first + 2, first + 3],
            train_label_week: first + 4,
            target_week: first + 5,
        }
    }

    /// Feature window for the training queries.
    pub fn train_window(&self) -> WeekRange {
        WeekRange {
            first: self.history_weeks[0],
            last: self.history_weeks[3],
        }
    }

    /// Feature window for the target queries: the history slid by a week.
    pub fn target_window(&self) -> WeekRange {
        WeekRange {
            first: self.history_weeks[1],
            last: self.train_label_week,
        }
    }
}

/// Folds advancing one week at a time over `total_weeks` weeks.
pub fn make_folds(total_weeks: usize) -> Result<Vec<FoldSpec>> {
    if total_weeks < 6 {
        return Err(Error::Config(format!(
            "need at least 6 weeks for a fold, got {total_weeks}"
        )));
    }
    Ok((0..=(total_weeks - 6) as i64).map(FoldSpec::starting_at).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "live")]
    LiveTv,
    #[serde(rename = "catchup")]
    CatchUp,
}

impl ScenarioKind {
    /// The viewing mode whose sessions are scored in this scenario.
    pub fn mode(self) -> ViewMode {
        match self {
            ScenarioKind::LiveTv => ViewMode::Live,
            ScenarioKind::CatchUp => ViewMode::CatchUp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeedbackSource {
    #[serde(rename = "live+catchup")]
    LiveAndCatchup,
    #[serde(rename = "catchup")]
    CatchupOnly,
}

impl FeedbackSource {
    /// The part of the log models may learn from.
    pub fn filter(self, log: &ViewLog) -> ViewLog {
        match self {
            FeedbackSource::LiveAndCatchup => log.clone(),
            FeedbackSource::CatchupOnly => log.only_mode(ViewMode::CatchUp),
        }
    }

    pub fn admits(self, e: &ViewEvent) -> bool {
        self == FeedbackSource::LiveAndCatchup || e.mode == ViewMode::CatchUp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub feedback: FeedbackSource,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::LiveTv => "live",
            ScenarioKind::CatchUp => "catchup",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "live" => Ok(ScenarioKind::LiveTv),
            "catchup" => Ok(ScenarioKind::CatchUp),
            other => Err(format!("unknown scenario {other:?} (expected live or catchup)")),
        }
    }
}

impl fmt::Display for FeedbackSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackSource::LiveAndCatchup => "live+catchup",
            FeedbackSource::CatchupOnly => "catchup",
        })
    }
}

impl FromStr for FeedbackSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "live+catchup" => Ok(FeedbackSource::LiveAndCatchup),
            "catchup" => Ok(FeedbackSource::CatchupOnly),
            other => Err(format!(
                "unknown feedback source {other:?} (expected live+catchup or catchup)"
            )),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.feedback)
    }
}

impl FromStr for Scenario {
    type Err = String;

    /// `<kind>/<feedback>`, e.g. `live/live+catchup`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, feedback) = s
            .split_once('/')
            .ok_or_else(|| format!("expected <scenario>/<feedback>, got {s:?}"))?;
        Ok(Scenario {
            kind: kind.parse()?,
            feedback: feedback.parse()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Random,
    Popular,
    UserPopular,
    #[serde(rename = "WRMF")]
    Wrmf,
    #[serde(rename = "Content-based")]
    ContentBased,
    #[serde(rename = "L2R")]
    L2r,
    GreedyRec,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Random,
        Algorithm::Popular,
        Algorithm::UserPopular,
        Algorithm::Wrmf,
        Algorithm::ContentBased,
        Algorithm::L2r,
        Algorithm::GreedyRec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Random => "Random",
            Algorithm::Popular => "Popular",
            Algorithm::UserPopular => "UserPopular",
            Algorithm::Wrmf => "WRMF",
            Algorithm::ContentBased => "Content-based",
            Algorithm::L2r => "L2R",
            Algorithm::GreedyRec => "GreedyRec",
        }
    }

    fn needs_ranker(self) -> bool {
        matches!(self, Algorithm::L2r | Algorithm::GreedyRec)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

/// What to do with sessions whose ground truth is empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyTruth {
    /// Leave them out of every average.
    #[default]
    Exclude,
    /// Score their nDCG as 0 and keep them.
    ScoreZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub scenarios: Vec<Scenario>,
    pub algorithms: Vec<Algorithm>,
    pub ks: Vec<usize>,
    pub objective: ObjectiveWeights,
    pub rule: PreferenceRule,
    pub seed: u64,
    /// Fold indices to run; empty runs all.
    pub folds: Vec<usize>,
    pub catchup_reference: Reference,
    pub empty_truth: EmptyTruth,
    /// Re-rank only the ranker's top `m` candidates.
    pub rerank_pool: Option<usize>,
    /// Cap on the history used for content similarity.
    pub history_cap: Option<usize>,
    /// Negatives kept per training query; positives are always kept.
    pub negatives_per_query: usize,
    /// Share of users whose training queries go to the validation set.
    pub validation_share: f64,
    pub wrmf: WrmfParams,
    pub funksvd: FunkSvdParams,
    pub ltr: LtrParams,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            scenarios: vec![
                Scenario {
                    kind: ScenarioKind::LiveTv,
                    feedback: FeedbackSource::LiveAndCatchup,
                },
                Scenario {
                    kind: ScenarioKind::CatchUp,
                    feedback: FeedbackSource::LiveAndCatchup,
                },
            ],
            algorithms: Algorithm::ALL.to_vec(),
            ks: vec![5, 10],
            objective: ObjectiveWeights::default(),
            rule: PreferenceRule::default(),
            seed: 0,
            folds: Vec::new(),
            catchup_reference: Reference::PerSession,
            empty_truth: EmptyTruth::Exclude,
            rerank_pool: None,
            history_cap: None,
            negatives_per_query: 40,
            validation_share: 0.2,
            wrmf: WrmfParams::default(),
            funksvd: FunkSvdParams::default(),
            ltr: LtrParams::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios requested".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms requested".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("k values must be nonempty and positive".into()));
        }
        if self.catchup_reference == Reference::Weekly
            && !self.scenarios.iter().any(|s| s.kind == ScenarioKind::CatchUp)
        {
            return Err(Error::Config(
                "weekly reference points apply only to the catch-up scenario".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.validation_share) {
            return Err(Error::Config("validation_share must be in [0, 1)".into()));
        }
        if self.rerank_pool == Some(0) {
            return Err(Error::Config("rerank pool must hold at least one candidate".into()));
        }
        if let PreferenceRule::WatchedFraction(f) = self.rule {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::Config(format!("fraction threshold {f} outside [0, 1)")));
            }
        }
        self.objective.validate()?;
        self.wrmf.validate()?;
        self.ltr.validate()?;
        Ok(())
    }

    fn needs_ranker(&self) -> bool {
        self.algorithms.iter().any(|a| a.needs_ranker())
    }
}
