use std::collections::BTreeMap;

use rand::seq::index::sample;

use super::{build_queries, EvalConfig, FeedbackSource, FoldSpec, Query, Reference, ScenarioKind};
use crate::domain::{ProgramId, UserId};
use crate::error::Result;
use crate::features::FeatureSchema;
use crate::features::{build_dataset, build_stats, FeatureContext, FunkSvd, HistoryStats, QueryGroup, WeekRange};
use crate::ingestion::{Catalog, Interaction, ViewLog};
use crate::ltr::{self, GbmModel, RankingDataset};
use crate::recommenders::TfIdfIndex;
use crate::wrmf::{self, MfModel};
use crate::{par, seed};

/// Everything fitted on one history window.
#[derive(Debug, Clone)]
pub struct WindowModels {
    pub stats: HistoryStats,
    pub wrmf: MfModel,
    pub funksvd: FunkSvd,
}

impl WindowModels {
    pub fn context<'a>(
        &'a self,
        catalog: &'a Catalog,
        index: &'a TfIdfIndex,
        history_cap: Option<usize>,
    ) -> FeatureContext<'a> {
        FeatureContext {
            catalog,
            index,
            stats: &self.stats,
            wrmf: &self.wrmf,
            funksvd: &self.funksvd,
            history_cap,
        }
    }
}

/// Fits counters, WRMF and FunkSVD on the interactions and events inside
/// `window` only.
pub fn fit_window(
    interactions: &[Interaction],
    log: &ViewLog,
    catalog: &Catalog,
    window: WeekRange,
    cfg: &EvalConfig,
) -> Result<WindowModels> {
    let inside: Vec<&Interaction> = interactions.iter().filter(|r| window.contains(r.week)).collect();
    let path = [window.first as u64, window.last as u64];

    let (stats, (wrmf, funksvd)) = par::join(
        || build_stats(interactions, log, catalog, window, cfg.rule),
        || {
            par::join(
                || {
                    let counts: Vec<(UserId, ProgramId, f64)> = inside
                        .iter()
                        .filter(|r| r.positive_days > 0)
                        .map(|r| (r.user, r.program, f64::from(r.positive_days)))
                        .collect();
                    let params = wrmf::WrmfParams {
                        seed: seed::derive(cfg.seed ^ cfg.wrmf.seed, "wrmf", &path),
                        ..cfg.wrmf
                    };
                    if counts.is_empty() {
                        log::warn!("no positive interactions in weeks {}..={}", window.first, window.last);
                        return MfModel::from_factors(
                            vec![],
                            vec![],
                            params.factors,
                            vec![],
                            vec![],
                            params.alpha,
                            params.lambda,
                        );
                    }
                    wrmf::fit(&counts, params)
                },
                || {
                    let mut best: BTreeMap<(UserId, ProgramId), u8> = BTreeMap::new();
                    for r in &inside {
                        let e = best.entry((r.user, r.program)).or_default();
                        *e = (*e).max(r.preference);
                    }
                    let ratings: Vec<(UserId, ProgramId, f64)> =
                        best.into_iter().map(|((u, p), v)| (u, p, f64::from(v))).collect();
                    let params = crate::features::FunkSvdParams {
                        seed: seed::derive(cfg.seed ^ cfg.funksvd.seed, "funksvd", &path),
                        ..cfg.funksvd
                    };
                    FunkSvd::fit(&ratings, params)
                },
            )
        },
    );
    Ok(WindowModels {
        stats: stats?,
        wrmf: wrmf?,
        funksvd: funksvd?,
    })
}

/// Models for one fold and feedback source: the training window feeds the
/// ranker's training queries, the target window (slid one week) feeds the
/// features of the evaluated queries.
#[derive(Debug, Clone)]
pub struct FoldModels {
    pub fold: FoldSpec,
    pub feedback: FeedbackSource,
    pub train: WindowModels,
    pub target: WindowModels,
}

impl FoldModels {
    pub fn fit(
        fold: FoldSpec,
        feedback: FeedbackSource,
        interactions: &[Interaction],
        log: &ViewLog,
        catalog: &Catalog,
        cfg: &EvalConfig,
    ) -> Result<Self> {
        let (train, target) = par::join(
            || fit_window(interactions, log, catalog, fold.train_window(), cfg),
            || fit_window(interactions, log, catalog, fold.target_window(), cfg),
        );
        Ok(FoldModels {
            fold,
            feedback,
            train: train?,
            target: target?,
        })
    }
}

pub(crate) fn reference_for(kind: ScenarioKind, cfg: &EvalConfig) -> Reference {
    match kind {
        ScenarioKind::CatchUp => cfg.catchup_reference,
        ScenarioKind::LiveTv => Reference::PerSession,
    }
}

fn is_validation_user(user: UserId, cfg: &EvalConfig) -> bool {
    let h = seed::derive(cfg.seed, "validation", &[user.0]);
    ((h >> 11) as f64 / (1u64 << 53) as f64) < cfg.validation_share
}

/// Keeps every positive and a seeded sample of at most `n` negatives, in
/// the original candidate order.
fn subsample(q: &Query, n: usize, seed: u64) -> Query {
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..q.candidates.len()).partition(|&i| q.truth.contains(&q.candidates[i].program));
    let mut keep = pos;
    if neg.len() <= n {
        keep.extend(neg);
    } else {
        let mut rng = seed::rng(seed, "negatives", &[]);
        keep.extend(sample(&mut rng, neg.len(), n).into_iter().map(|i| neg[i]));
    }
    keep.sort_unstable();
    Query {
        user: q.user,
        time: q.time,
        candidates: keep.into_iter().map(|i| q.candidates[i]).collect(),
        truth: q.truth.clone(),
    }
}

/// Training and validation query groups for the ranker of one scenario.
///
/// Labels come from the feedback log in the fold's training-label week;
/// features come from the training window. Nothing at or after the target
/// week is read.
pub fn training_groups(
    models: &FoldModels,
    kind: ScenarioKind,
    feedback_log: &ViewLog,
    catalog: &Catalog,
    index: &TfIdfIndex,
    cfg: &EvalConfig,
) -> Result<(Vec<QueryGroup>, Vec<QueryGroup>)> {
    let week = models.fold.train_label_week;
    let (queries, _) = build_queries(feedback_log, catalog, week, kind, reference_for(kind, cfg), cfg.rule);
    let kind_id = match kind {
        ScenarioKind::LiveTv => 0,
        ScenarioKind::CatchUp => 1,
    };
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for (i, q) in queries.iter().enumerate().filter(|(_, q)| !q.truth.is_empty()) {
        let s = seed::derive(cfg.seed, "train-query", &[week as u64, kind_id, i as u64]);
        let q = subsample(q, cfg.negatives_per_query, s);
        if is_validation_user(q.user, cfg) {
            valid.push(q);
        } else {
            train.push(q);
        }
    }
    let ctx = models.train.context(catalog, index, cfg.history_cap);
    let (t, v) = par::join(|| build_dataset(&ctx, &train), || build_dataset(&ctx, &valid));
    Ok((t?, v?))
}

/// Fits LambdaMART on the training groups, reporting nDCG on the validation
/// groups after every round.
pub fn train_ranker(train: &[QueryGroup], validation: &[QueryGroup], cfg: &EvalConfig) -> Result<GbmModel> {
    let n = FeatureSchema::standard().len();
    let t = RankingDataset::from_groups(n, train)?;
    let v = RankingDataset::from_groups(n, validation)?;
    ltr::fit(&t, &v, cfg.ltr)
}
