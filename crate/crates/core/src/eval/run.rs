use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::pipeline::reference_for;
use super::report::{Metric, ReportRow};
use super::{
    build_queries, make_folds, train_ranker, training_groups, Algorithm, EmptyTruth, EvalConfig, FeedbackSource,
    FoldModels, FoldSpec, Query, QueryCounts, Scenario, ScenarioKind, WindowModels,
};
use crate::domain::{ChannelId, ProgramId, UserId, ViewMode};
use crate::error::{Error, Result};
use crate::features::FeatureContext;
use crate::ingestion::{build_interactions, Catalog, Interaction, ViewLog};
use crate::ltr::GbmModel;
use crate::metrics::{ild_at_k, mean_distance, msi_at_k, ndcg_at_k, novelty, unexpectedness_at_k, DistanceKey};
use crate::recommenders::{
    build_tfidf, popular_rank, random_rank, user_popular_rank, ContentProfile, ScoredList, TfIdfIndex,
};
use crate::rerank::{greedy_rec, AccuracySource, Item, ObjectiveSpec, ObjectiveWeights};
use crate::{par, seed};

/// The models and settings needed to rank one scenario's candidates.
#[derive(Clone, Copy)]
pub struct Recommender<'a> {
    pub catalog: &'a Catalog,
    pub index: &'a TfIdfIndex,
    pub models: &'a WindowModels,
    pub ranker: Option<&'a GbmModel>,
    pub objective: ObjectiveWeights,
    /// GreedyRec considers only the ranker's top `m` candidates.
    pub rerank_pool: Option<usize>,
    pub history_cap: Option<usize>,
}

/// Per-user state shared by all of a user's queries.
pub struct UserView {
    pub profile: ContentProfile,
    /// Distance keys of the programs in the user's history window.
    pub history_keys: Vec<DistanceKey>,
}

impl<'a> Recommender<'a> {
    fn context(&self) -> FeatureContext<'a> {
        self.models.context(self.catalog, self.index, self.history_cap)
    }

    pub fn user_view(&self, user: UserId) -> UserView {
        let history_keys = match self.models.stats.full.users.get(&user) {
            Some(u) => u
                .history
                .iter()
                .filter_map(|&p| {
                    let channel = u.history_channels.get(&p).copied().unwrap_or(ChannelId(0));
                    DistanceKey::of(self.catalog, p, channel)
                })
                .collect(),
            None => Vec::new(),
        };
        UserView {
            profile: self.context().profile(user),
            history_keys,
        }
    }

    fn ranker(&self) -> Result<&'a GbmModel> {
        self.ranker
            .ok_or_else(|| Error::Config("L2R and GreedyRec need a trained ranker".into()))
    }

    /// Ranker scores in candidate order.
    pub fn ranker_scores(&self, query: &Query, view: &UserView) -> Result<Vec<f64>> {
        let model = self.ranker()?;
        self.context()
            .vectors(query, &view.profile)?
            .iter()
            .map(|v| model.predict(v))
            .collect()
    }

    /// A full ranking of the candidates by one of the non-reranking
    /// algorithms. `ranker_scores` is used by L2R when given.
    pub fn ranking(
        &self,
        algorithm: Algorithm,
        query: &Query,
        view: &UserView,
        seed: u64,
        ranker_scores: Option<&[f64]>,
    ) -> Result<ScoredList> {
        let programs = query.programs();
        let stats = &self.models.stats;
        Ok(match algorithm {
            Algorithm::Random => random_rank(&programs, seed),
            Algorithm::Popular => popular_rank(&programs, stats),
            // a user with no time on a candidate has no opinion on it
            Algorithm::UserPopular => user_popular_rank(query.user, &programs, stats).positive_only(),
            Algorithm::Wrmf => ScoredList::from_scores(
                programs
                    .iter()
                    .map(|&p| (p, self.models.wrmf.predict(query.user, p)))
                    .collect(),
            ),
            Algorithm::ContentBased => ScoredList::from_scores(
                programs
                    .iter()
                    .map(|&p| (p, view.profile.score(self.index, p)))
                    .collect(),
            ),
            Algorithm::L2r => {
                let scores = match ranker_scores {
                    Some(s) => s.to_vec(),
                    None => self.ranker_scores(query, view)?,
                };
                ScoredList::from_scores(programs.into_iter().zip(scores).collect())
            }
            Algorithm::GreedyRec => {
                return Err(Error::Config("GreedyRec builds lists per cutoff; use rerank".into()));
            }
        })
    }

    /// GreedyRec's list of at most `k` programs over the ranker's scores.
    pub fn rerank(
        &self,
        query: &Query,
        view: &UserView,
        k: usize,
        ranker_scores: Option<&[f64]>,
    ) -> Result<Vec<ProgramId>> {
        let scores = match ranker_scores {
            Some(s) => s.to_vec(),
            None => self.ranker_scores(query, view)?,
        };
        let stats = &self.models.stats.full;
        let mut items: Vec<Item> = query
            .candidates
            .iter()
            .zip(&scores)
            .filter_map(|(c, &score)| {
                let key = DistanceKey::of(self.catalog, c.program, c.channel)?;
                Some(Item {
                    program: c.program,
                    score,
                    key,
                    novelty: novelty(stats.audience(c.program), stats.active_users),
                    unexpectedness: mean_distance(&key, &view.history_keys),
                    relevant: query.truth.contains(&c.program),
                })
            })
            .collect();
        if let Some(m) = self.rerank_pool {
            let pool: HashSet<ProgramId> =
                ScoredList::from_scores(items.iter().map(|i| (i.program, i.score)).collect())
                    .top(m)
                    .into_iter()
                    .collect();
            items.retain(|i| pool.contains(&i.program));
        }
        let spec = ObjectiveSpec {
            weights: self.objective,
            k,
            accuracy_source: AccuracySource::ModelScore,
        };
        Ok(greedy_rec(&items, &spec)
            .into_iter()
            .map(|i| items[i].program)
            .collect())
    }

    /// Top-`k` list of any algorithm.
    pub fn recommend(
        &self,
        algorithm: Algorithm,
        query: &Query,
        view: &UserView,
        k: usize,
        seed: u64,
    ) -> Result<Vec<ProgramId>> {
        match algorithm {
            Algorithm::GreedyRec => self.rerank(query, view, k, None),
            a => Ok(self.ranking(a, query, view, seed, None)?.top(k)),
        }
    }
}

/// Metrics averaged per user first, then over users.
const PER_LIST: [Metric; 5] = [
    Metric::Ndcg,
    Metric::Ild,
    Metric::Msi,
    Metric::Unexpectedness,
    Metric::NdcgNew,
];

#[derive(Clone)]
struct Accum {
    sum: Vec<f64>,
    n: Vec<u32>,
}

impl Accum {
    fn new(slots: usize) -> Self {
        Accum {
            sum: vec![0.0; slots],
            n: vec![0; slots],
        }
    }

    fn add(&mut self, slot: usize, v: f64) {
        self.sum[slot] += v;
        self.n[slot] += 1;
    }

    /// Adds each populated slot's mean of `other` once.
    fn add_means(&mut self, other: &Accum) {
        for s in 0..self.sum.len() {
            if other.n[s] > 0 {
                self.add(s, other.sum[s] / f64::from(other.n[s]));
            }
        }
    }

    fn mean(&self, slot: usize) -> Option<f64> {
        (self.n[slot] > 0).then(|| self.sum[slot] / f64::from(self.n[slot]))
    }
}

struct Layout<'c> {
    algorithms: &'c [Algorithm],
    ks: &'c [usize],
}

impl Layout<'_> {
    fn slots(&self) -> usize {
        self.algorithms.len() * self.ks.len() * PER_LIST.len()
    }

    fn slot(&self, a: usize, k: usize, m: usize) -> usize {
        (a * self.ks.len() + k) * PER_LIST.len() + m
    }
}

/// Everything a single session contributes, for every algorithm and cutoff.
#[allow(clippy::too_many_arguments)]
fn score_query(
    rec: &Recommender<'_>,
    layout: &Layout<'_>,
    q: &Query,
    view: &UserView,
    seen: Option<&HashSet<ProgramId>>,
    query_seed: u64,
    acc: &mut Accum,
) -> Result<()> {
    let truth_new: HashSet<ProgramId> = q
        .truth
        .iter()
        .filter(|p| seen.is_none_or(|s| !s.contains(p)))
        .copied()
        .collect();
    let channel_of: HashMap<ProgramId, ChannelId> = q.candidates.iter().map(|c| (c.program, c.channel)).collect();
    let stats = &rec.models.stats.full;
    let needs_ranker = layout.algorithms.iter().any(|a| a.needs_ranker());
    let ranker_scores = if needs_ranker {
        Some(rec.ranker_scores(q, view)?)
    } else {
        None
    };

    let mut record = |a: usize, ki: usize, list: &[ProgramId]| {
        let k = layout.ks[ki];
        let keys: Vec<DistanceKey> = list
            .iter()
            .take(k)
            .filter_map(|p| DistanceKey::of(rec.catalog, *p, channel_of[p]))
            .collect();
        acc.add(layout.slot(a, ki, 0), ndcg_at_k(list, &q.truth, k).unwrap_or(0.0));
        acc.add(layout.slot(a, ki, 1), ild_at_k(&keys, k));
        acc.add(layout.slot(a, ki, 2), msi_at_k(list, stats, k, stats.active_users));
        acc.add(layout.slot(a, ki, 3), unexpectedness_at_k(&keys, &view.history_keys, k));
        if let Some(v) = ndcg_at_k(list, &truth_new, k) {
            acc.add(layout.slot(a, ki, 4), v);
        }
    };

    for (a, &alg) in layout.algorithms.iter().enumerate() {
        if alg == Algorithm::GreedyRec {
            for (ki, &k) in layout.ks.iter().enumerate() {
                let list = rec.rerank(q, view, k, ranker_scores.as_deref())?;
                record(a, ki, &list);
            }
        } else {
            let longest = layout.ks.iter().copied().max().unwrap_or(0);
            let list = rec
                .ranking(alg, q, view, query_seed, ranker_scores.as_deref())?
                .top(longest);
            for ki in 0..layout.ks.len() {
                record(a, ki, &list);
            }
        }
    }
    Ok(())
}

/// Scores one scenario's target queries: per-user means, then the mean over
/// users. Sessions with empty truth are skipped unless configured otherwise.
fn evaluate_queries(
    rec: &Recommender<'_>,
    queries: &[Query],
    seen: &HashMap<UserId, HashSet<ProgramId>>,
    cfg: &EvalConfig,
    seed_path: [u64; 2],
) -> Result<Accum> {
    let layout = Layout {
        algorithms: &cfg.algorithms,
        ks: &cfg.ks,
    };
    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_by_key(|&i| (queries[i].user, i));
    let users: Vec<&[usize]> = order.chunk_by(|&a, &b| queries[a].user == queries[b].user).collect();
    let per_user = par::map(&users, |idxs| -> Result<Accum> {
        let user = queries[idxs[0]].user;
        let view = rec.user_view(user);
        let mut acc = Accum::new(layout.slots());
        for &i in idxs.iter() {
            let q = &queries[i];
            if q.truth.is_empty() && cfg.empty_truth == EmptyTruth::Exclude {
                continue;
            }
            let s = seed::derive(cfg.seed, "random-rank", &[seed_path[0], seed_path[1], i as u64]);
            score_query(rec, &layout, q, &view, seen.get(&user), s, &mut acc)?;
        }
        Ok(acc)
    });
    let mut total = Accum::new(layout.slots());
    for acc in per_user {
        total.add_means(&acc?);
    }
    Ok(total)
}

fn rows_from(acc: &Accum, scenario: Scenario, cfg: &EvalConfig) -> Vec<ReportRow> {
    let layout = Layout {
        algorithms: &cfg.algorithms,
        ks: &cfg.ks,
    };
    let mut rows = Vec::new();
    for (a, &algorithm) in cfg.algorithms.iter().enumerate() {
        for (ki, &k) in cfg.ks.iter().enumerate() {
            let value = |m: usize| acc.mean(layout.slot(a, ki, m));
            let mut push = |metric, v: Option<f64>| {
                if let Some(value) = v {
                    rows.push(ReportRow {
                        algorithm,
                        scenario,
                        metric,
                        k,
                        value,
                    });
                }
            };
            for (m, &metric) in PER_LIST.iter().enumerate() {
                push(metric, value(m));
            }
            if let (Some(acc_), Some(div), Some(nov), Some(ser)) = (value(0), value(1), value(2), value(3)) {
                push(Metric::Objective, Some(cfg.objective.combine(acc_, div, nov, ser)));
            }
        }
    }
    rows
}

/// Train and validation nDCG of a fold's ranker, per boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtrCurve {
    pub scenario: Scenario,
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub index: usize,
    pub fold: FoldSpec,
    pub rows: Vec<ReportRow>,
    pub curves: Vec<LtrCurve>,
    pub counts: Vec<(Scenario, QueryCounts)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
    /// Fold means of every row.
    pub average: Vec<ReportRow>,
}

/// Shared read-only inputs of every fold.
pub struct Prepared<'a> {
    pub catalog: &'a Catalog,
    pub log: &'a ViewLog,
    pub index: TfIdfIndex,
    pub feedback: Vec<(FeedbackSource, ViewLog, Vec<Interaction>)>,
    /// The log split by viewing mode; target sessions of a scenario come
    /// from its own mode only.
    pub live: ViewLog,
    pub catchup: ViewLog,
    pub folds: Vec<FoldSpec>,
}

impl<'a> Prepared<'a> {
    pub fn new(catalog: &'a Catalog, log: &'a ViewLog, cfg: &EvalConfig) -> Result<Self> {
        cfg.validate()?;
        if log.is_empty() {
            return Err(Error::Config("the view log is empty".into()));
        }
        let timeline = catalog.timeline();
        let last_week = log
            .events()
            .iter()
            .map(|e| timeline.week_of(e.watch_start))
            .max()
            .unwrap_or(0);
        let folds = make_folds(usize::try_from(last_week + 1).unwrap_or(0))?;
        let mut sources: Vec<FeedbackSource> = cfg.scenarios.iter().map(|s| s.feedback).collect();
        sources.sort();
        sources.dedup();
        let mut feedback = Vec::new();
        for source in sources {
            let flog = source.filter(log);
            if flog.is_empty() {
                return Err(Error::Config(format!(
                    "feedback source {source} has no events in this log"
                )));
            }
            let interactions = build_interactions(&flog, catalog, cfg.rule);
            feedback.push((source, flog, interactions));
        }
        Ok(Prepared {
            catalog,
            log,
            index: build_tfidf(catalog)?,
            feedback,
            live: log.only_mode(ViewMode::Live),
            catchup: log.only_mode(ViewMode::CatchUp),
            folds,
        })
    }

    pub fn feedback(&self, source: FeedbackSource) -> (&ViewLog, &[Interaction]) {
        let (_, log, inter) = self
            .feedback
            .iter()
            .find(|(s, _, _)| *s == source)
            .expect("every configured feedback source is prepared");
        (log, inter)
    }

    pub fn sessions_of(&self, kind: ScenarioKind) -> &ViewLog {
        match kind.mode() {
            ViewMode::Live => &self.live,
            ViewMode::CatchUp => &self.catchup,
        }
    }

    /// Fold indices selected by the configuration.
    pub fn selected(&self, cfg: &EvalConfig) -> Result<Vec<usize>> {
        if cfg.folds.is_empty() {
            return Ok((0..self.folds.len()).collect());
        }
        if let Some(bad) = cfg.folds.iter().find(|&&f| f >= self.folds.len()) {
            return Err(Error::Config(format!(
                "fold {bad} requested, data has {} folds",
                self.folds.len()
            )));
        }
        let mut f = cfg.folds.clone();
        f.sort_unstable();
        f.dedup();
        Ok(f)
    }
}

/// Programs each user touched before `week`, in the full log.
fn seen_before(log: &ViewLog, catalog: &Catalog, week: i64) -> HashMap<UserId, HashSet<ProgramId>> {
    let timeline = catalog.timeline();
    let mut out: HashMap<UserId, HashSet<ProgramId>> = HashMap::new();
    for e in log.events() {
        if timeline.week_of(e.watch_start) < week {
            out.entry(e.user).or_default().insert(e.program);
        }
    }
    out
}

/// Trains and evaluates every configured scenario on one fold.
pub fn evaluate_fold(prep: &Prepared<'_>, index: usize, cfg: &EvalConfig) -> Result<FoldResult> {
    let fold = prep.folds[index];
    let seen = seen_before(prep.log, prep.catalog, fold.target_week);
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut counts = Vec::new();
    let mut fitted: BTreeMap<FeedbackSource, FoldModels> = BTreeMap::new();

    for (si, &scenario) in cfg.scenarios.iter().enumerate() {
        let (flog, interactions) = prep.feedback(scenario.feedback);
        if let Entry::Vacant(slot) = fitted.entry(scenario.feedback) {
            slot.insert(FoldModels::fit(
                fold,
                scenario.feedback,
                interactions,
                flog,
                prep.catalog,
                cfg,
            )?);
        }
        let models = &fitted[&scenario.feedback];

        let ranker = if cfg.needs_ranker() {
            let (train, valid) = training_groups(models, scenario.kind, flog, prep.catalog, &prep.index, cfg)?;
            if train.is_empty() {
                return Err(Error::Config(format!(
                    "fold {index}: no {scenario} training query in week {} has a positive",
                    fold.train_label_week
                )));
            }
            let model = train_ranker(&train, &valid, cfg)?;
            curves.push(LtrCurve {
                scenario,
                train: model.train_ndcg.clone(),
                validation: model.validation_ndcg.clone(),
            });
            Some(model)
        } else {
            None
        };

        let (queries, c) = build_queries(
            prep.sessions_of(scenario.kind),
            prep.catalog,
            fold.target_week,
            scenario.kind,
            reference_for(scenario.kind, cfg),
            cfg.rule,
        );
        log::info!(
            "fold {index} {scenario}: {} sessions, {} queries, {} without truth",
            c.sessions,
            queries.len(),
            c.without_truth
        );
        counts.push((scenario, c));
        let rec = Recommender {
            catalog: prep.catalog,
            index: &prep.index,
            models: &models.target,
            ranker: ranker.as_ref(),
            objective: cfg.objective,
            rerank_pool: cfg.rerank_pool,
            history_cap: cfg.history_cap,
        };
        let acc = evaluate_queries(&rec, &queries, &seen, cfg, [index as u64, si as u64])?;
        rows.extend(rows_from(&acc, scenario, cfg));
    }
    Ok(FoldResult {
        index,
        fold,
        rows,
        curves,
        counts,
    })
}

fn average(folds: &[FoldResult]) -> Vec<ReportRow> {
    type Key = (Algorithm, Scenario, super::report::Metric, usize);
    let mut order: Vec<Key> = Vec::new();
    let mut sums: HashMap<Key, (f64, usize)> = HashMap::new();
    for f in folds {
        for r in &f.rows {
            let key = (r.algorithm, r.scenario, r.metric, r.k);
            let e = sums.entry(key).or_insert_with(|| {
                order.push(key);
                (0.0, 0)
            });
            e.0 += r.value;
            e.1 += 1;
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (s, n) = sums[&key];
            ReportRow {
                algorithm: key.0,
                scenario: key.1,
                metric: key.2,
                k: key.3,
                value: s / n as f64,
            }
        })
        .collect()
}

/// Sliding-window cross-validation over every selected fold, folds in
/// parallel.
pub fn cross_validate(catalog: &Catalog, log: &ViewLog, cfg: &EvalConfig) -> Result<CrossValidation> {
    let prep = Prepared::new(catalog, log, cfg)?;
    let selected = prep.selected(cfg)?;
    let results = par::map(&selected, |&i| evaluate_fold(&prep, i, cfg));
    let folds: Vec<FoldResult> = results.into_iter().collect::<Result<_>>()?;
    let average = average(&folds);
    Ok(CrossValidation { folds, average })
}
