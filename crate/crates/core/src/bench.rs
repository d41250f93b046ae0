//! Head-to-head experiments: embed every row, build ensembles, split 70/30,
//! train one forest per feature set on the training rows and score the
//! held-out rows.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{fit, EmbedConfig, EmbeddingResult, Method};
use crate::ensemble::{build_ensemble, Selection};
use crate::error::{Error, Result};
use crate::forest::{accuracy, rf_predict, rf_train, ForestParams};
use crate::ingest::DatasetSpec;
use crate::numcore::DenseMatrix;
use crate::preprocess::{encode, format_num, standardize, DataTable, FeatureMatrix};
use crate::seed::{derive_tagged, rng_from};
use crate::simgen::{simulate_dataset, GridCell};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const FULL_MODEL: &str = "full";

/// Splits `0..n` into sorted train and test index lists with
/// `round(fraction * n)` training rows. With `stratify_by`, each class is
/// split separately at the same fraction.
pub fn train_test_split(
    n: usize,
    fraction: f64,
    seed: u64,
    stratify_by: Option<&[u8]>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 rows to split, got {n}"
        )));
    }
    let mut rng = rng_from(seed);
    let groups: Vec<Vec<usize>> = match stratify_by {
        None => vec![(0..n).collect()],
        Some(y) => {
            if y.len() != n {
                return Err(Error::Shape(format!(
                    "{n} rows but {} stratification labels",
                    y.len()
                )));
            }
            let mut by_class = vec![Vec::new(), Vec::new()];
            for (i, &v) in y.iter().enumerate() {
                by_class[usize::from(v.min(1))].push(i);
            }
            by_class
        }
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut g in groups {
        g.shuffle(&mut rng);
        let k = (fraction * g.len() as f64).round() as usize;
        train.extend_from_slice(&g[..k]);
        test.extend_from_slice(&g[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Where an experiment's rows come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// A fresh simulated dataset per repetition, drawn from the cell's seeds.
    Simulated(GridCell),
    /// A dataset file, embedded once and re-split per repetition.
    Dataset(DatasetSpec),
    /// An in-memory table, treated like a dataset file.
    Table { label: String, table: DataTable },
}

impl DataSource {
    pub fn label(&self) -> String {
        match self {
            DataSource::Simulated(cell) => cell.label(),
            DataSource::Dataset(spec) => spec.label(),
            DataSource::Table { label, .. } => label.clone(),
        }
    }

    fn is_simulated(&self) -> bool {
        matches!(self, DataSource::Simulated(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSettings {
    pub methods: Vec<Method>,
    pub large_ensemble: bool,
    pub small_ensemble: bool,
    pub include_full_data_baseline: bool,
    pub repetitions: usize,
    pub split_fraction: f64,
    pub stratify: bool,
    pub seed: u64,
    pub embed: EmbedConfig,
    /// Forest settings; the seed field is replaced per model and repetition.
    pub forest: ForestParams,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            large_ensemble: true,
            small_ensemble: true,
            include_full_data_baseline: true,
            repetitions: 10,
            split_fraction: 0.7,
            stratify: false,
            seed: 0,
            embed: EmbedConfig::default(),
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub source: DataSource,
    pub settings: PlanSettings,
}

impl ExperimentPlan {
    pub fn new(source: DataSource) -> Self {
        Self {
            source,
            settings: PlanSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if s.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        if !(s.split_fraction > 0.0 && s.split_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split fraction must lie in (0, 1), got {}",
                s.split_fraction
            )));
        }
        if let DataSource::Simulated(cell) = &self.source {
            if cell.seeds.len() < s.repetitions {
                return Err(Error::InvalidArgument(format!(
                    "simulation cell has {} seeds but {} repetitions were requested",
                    cell.seeds.len(),
                    s.repetitions
                )));
            }
        }
        Ok(())
    }

    /// Model names in report order: single methods, then ensembles, then
    /// the full-data baseline.
    pub fn model_names(&self) -> Vec<String> {
        self.feature_sets().iter().map(|f| f.name()).collect()
    }

    fn feature_sets(&self) -> Vec<FeatureSet> {
        let s = &self.settings;
        let mut methods = s.methods.clone();
        methods.sort();
        methods.dedup();
        let mut sets: Vec<FeatureSet> = methods.into_iter().map(FeatureSet::Single).collect();
        if s.large_ensemble {
            sets.push(FeatureSet::Ensemble(Selection::Large));
        }
        if s.small_ensemble {
            sets.push(FeatureSet::Ensemble(Selection::Small));
        }
        if s.include_full_data_baseline {
            sets.push(FeatureSet::Full);
        }
        sets
    }

    /// Methods that must be fitted, including ensemble members.
    fn required_methods(&self) -> Vec<Method> {
        let mut all: Vec<Method> = self
            .feature_sets()
            .iter()
            .flat_map(|f| match f {
                FeatureSet::Single(m) => vec![*m],
                FeatureSet::Ensemble(sel) => sel.methods(),
                FeatureSet::Full => Vec::new(),
            })
            .collect();
        all.sort();
        all.dedup();
        all
    }
}

#[derive(Debug, Clone, PartialEq)]
enum FeatureSet {
    Single(Method),
    Ensemble(Selection),
    Full,
}

impl FeatureSet {
    fn name(&self) -> String {
        match self {
            FeatureSet::Single(m) => m.name().to_string(),
            FeatureSet::Ensemble(sel) => sel.name(),
            FeatureSet::Full => FULL_MODEL.to_string(),
        }
    }

    fn kind(&self) -> ModelKind {
        match self {
            FeatureSet::Single(_) => ModelKind::Single,
            FeatureSet::Ensemble(_) => ModelKind::Ensemble,
            FeatureSet::Full => ModelKind::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Single,
    Ensemble,
    Full,
}

/// One model's results across repetitions. Failed repetitions hold `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub accuracies: Vec<Option<f64>>,
    pub mean_accuracy: Option<f64>,
    /// Test-set predictions per repetition, aligned with
    /// `RepetitionInfo::test_indices`.
    pub predictions: Vec<Option<Vec<u8>>>,
    pub importances: Vec<Option<Vec<f64>>>,
}

impl ModelReport {
    pub fn completed(&self) -> usize {
        self.accuracies.iter().flatten().count()
    }

    /// Mean importance per feature over successful repetitions.
    pub fn mean_importances(&self) -> Option<Vec<f64>> {
        let done: Vec<&Vec<f64>> = self.importances.iter().flatten().collect();
        let first = done.first()?;
        let mut out = vec![0.0; first.len()];
        for v in &done {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += x;
            }
        }
        out.iter_mut().for_each(|v| *v /= done.len() as f64);
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionInfo {
    pub data_seed: Option<u64>,
    pub embed_seed: u64,
    pub split_seed: u64,
    pub test_indices: Vec<usize>,
    pub test_outcomes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub dataset: String,
    pub n_rows: usize,
    pub n_train: usize,
    /// How embeddings relate to repetitions.
    pub embedding_protocol: String,
    pub settings: PlanSettings,
    pub models: Vec<ModelReport>,
    pub repetitions: Vec<RepetitionInfo>,
    pub diagnostics: Vec<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl ExperimentReport {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn mean_accuracy(&self, name: &str) -> Option<f64> {
        self.model(name).and_then(|m| m.mean_accuracy)
    }

    /// Single method with the highest mean accuracy (earliest on ties).
    pub fn best_single(&self) -> Option<(&str, f64)> {
        self.singles()
            .fold(None, |best: Option<(&str, f64)>, (n, a)| match best {
                Some((_, b)) if b >= a => best,
                _ => Some((n, a)),
            })
    }

    /// Single method with the lowest mean accuracy (earliest on ties).
    pub fn worst_single(&self) -> Option<(&str, f64)> {
        self.singles()
            .fold(None, |worst: Option<(&str, f64)>, (n, a)| match worst {
                Some((_, b)) if b <= a => worst,
                _ => Some((n, a)),
            })
    }

    /// Median of the single-method mean accuracies.
    pub fn median_single(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.singles().map(|(_, a)| a).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_unstable_by(f64::total_cmp);
        let k = v.len();
        Some(if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        })
    }

    fn singles(&self) -> impl Iterator<Item = (&str, f64)> {
        self.models
            .iter()
            .filter(|m| m.kind == ModelKind::Single)
            .filter_map(|m| m.mean_accuracy.map(|a| (m.name.as_str(), a)))
    }

    /// Recomputes every stored accuracy from its predictions.
    pub fn check_consistency(&self) -> Result<()> {
        for m in &self.models {
            for (r, (acc, pred)) in m.accuracies.iter().zip(&m.predictions).enumerate() {
                let truth = &self.repetitions[r].test_outcomes;
                match (acc, pred) {
                    (Some(a), Some(p)) if accuracy(p, truth)? == *a => {}
                    (None, None) => {}
                    _ => {
                        return Err(Error::Data(format!(
                            "model {} repetition {r}: stored accuracy does not match predictions",
                            m.name
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "unsupported report schema version {}",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// Flat `dataset,model,repetition,accuracy` rows; failed repetitions
    /// have an empty accuracy.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dataset", "model", "repetition", "accuracy"])?;
        self.write_rows(&mut out)?;
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    fn write_rows<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<()> {
        for m in &self.models {
            for (r, acc) in m.accuracies.iter().enumerate() {
                let acc = acc.map(format_num).unwrap_or_default();
                out.write_record([self.dataset.as_str(), &m.name, &r.to_string(), &acc])?;
            }
        }
        Ok(())
    }
}

struct Prepared {
    features: FeatureMatrix,
    embeddings: Vec<std::result::Result<EmbeddingResult, String>>,
}

fn prepare(
    table: &DataTable,
    methods: &[Method],
    cfg: &EmbedConfig,
) -> Result<Prepared> {
    let features = standardize(&encode(table)?);
    let embeddings = methods
        .par_iter()
        .map(|&m| {
            let started = std::time::Instant::now();
            let out = fit(m, &features.x, cfg).map_err(|e| e.to_string());
            log::debug!("{} on {} rows: {:?}", m.name(), features.n_rows(), started.elapsed());
            out
        })
        .collect();
    Ok(Prepared {
        features,
        embeddings,
    })
}

fn load_source(source: &DataSource, rep: usize) -> Result<(DataTable, Option<u64>)> {
    match source {
        DataSource::Simulated(cell) => {
            let cfg = cell.config(rep);
            Ok((simulate_dataset(&cfg)?, Some(cfg.seed)))
        }
        DataSource::Dataset(spec) => Ok((spec.load()?, None)),
        DataSource::Table { table, .. } => Ok((table.clone(), None)),
    }
}

struct ModelOutcome {
    accuracy: f64,
    predictions: Vec<u8>,
    importances: Vec<f64>,
    feature_names: Vec<String>,
}

fn design_matrix(
    set: &FeatureSet,
    prepared: &Prepared,
    methods: &[Method],
) -> std::result::Result<(DenseMatrix, Vec<String>), String> {
    let y = &prepared.features.y;
    let lookup = |m: Method| -> std::result::Result<&EmbeddingResult, String> {
        let i = methods.iter().position(|&x| x == m).expect("method fitted");
        prepared.embeddings[i]
            .as_ref()
            .map_err(|e| format!("{} failed: {e}", m.label()))
    };
    match set {
        FeatureSet::Single(m) => {
            let r = lookup(*m)?;
            let names = (1..=r.dims()).map(|c| format!("{}:{c}", m.name())).collect();
            Ok((r.scores.clone(), names))
        }
        FeatureSet::Ensemble(sel) => {
            let results = sel
                .methods()
                .into_iter()
                .map(|m| lookup(m).cloned())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let e = build_ensemble(&results, sel, y).map_err(|e| e.to_string())?;
            let names = e.columns.iter().map(|c| c.label()).collect();
            Ok((e.x, names))
        }
        FeatureSet::Full => Ok((
            prepared.features.x.clone(),
            prepared
                .features
                .feature_names()
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )),
    }
}

fn train_and_score(
    x: &DenseMatrix,
    y: &[u8],
    train: &[usize],
    test: &[usize],
    params: &ForestParams,
) -> Result<(f64, Vec<u8>, Vec<f64>)> {
    let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<u8> = test.iter().map(|&i| y[i]).collect();
    let model = rf_train(&x.select_rows(train), &y_train, params)?;
    let pred = rf_predict(&model, &x.select_rows(test))?;
    let acc = accuracy(&pred, &y_test)?;
    Ok((acc, pred, model.importances))
}

type RepOutcome = (RepetitionInfo, Vec<std::result::Result<ModelOutcome, String>>, Vec<String>);

/// Runs every repetition of `plan`. Cell failures are recorded in the
/// report and leave the affected entries empty.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let s = &plan.settings;
    let sets = plan.feature_sets();
    let methods = plan.required_methods();
    let simulated = plan.source.is_simulated();

    let shared = if simulated {
        None
    } else {
        let (table, _) = load_source(&plan.source, 0)?;
        let cfg = s.embed.clone().with_seed(derive_tagged(s.seed, "embed", 0));
        Some(prepare(&table, &methods, &cfg)?)
    };

    let reps: Vec<Result<RepOutcome>> = (0..s.repetitions)
        .into_par_iter()
        .map(|rep| {
            let embed_seed = derive_tagged(s.seed, "embed", if simulated { rep as u64 } else { 0 });
            let (owned, data_seed) = if simulated {
                let (table, data_seed) = load_source(&plan.source, rep)?;
                let cfg = s.embed.clone().with_seed(embed_seed);
                (Some(prepare(&table, &methods, &cfg)?), data_seed)
            } else {
                (None, None)
            };
            let prepared = owned.as_ref().or(shared.as_ref()).expect("prepared data");
            let y = &prepared.features.y;
            let split_seed = derive_tagged(s.seed, "split", rep as u64);
            let (train, test) = train_test_split(
                y.len(),
                s.split_fraction,
                split_seed,
                s.stratify.then_some(y.as_slice()),
            )?;

            let mut notes = Vec::new();
            for (m, r) in methods.iter().zip(&prepared.embeddings) {
                match r {
                    Ok(res) => notes.extend(
                        res.diagnostics
                            .iter()
                            .map(|d| format!("repetition {rep}, {}: {d}", m.name())),
                    ),
                    Err(e) => notes.push(format!("repetition {rep}, {}: failed: {e}", m.name())),
                }
            }

            let outcomes = sets
                .par_iter()
                .map(|set| {
                    let (x, feature_names) = design_matrix(set, prepared, &methods)?;
                    let params = ForestParams {
                        seed: derive_tagged(s.seed, &format!("forest:{}", set.name()), rep as u64),
                        ..s.forest.clone()
                    };
                    let (accuracy, predictions, importances) =
                        train_and_score(&x, y, &train, &test, &params).map_err(|e| e.to_string())?;
                    Ok(ModelOutcome {
                        accuracy,
                        predictions,
                        importances,
                        feature_names,
                    })
                })
                .collect();

            let info = RepetitionInfo {
                data_seed,
                embed_seed,
                split_seed,
                test_outcomes: test.iter().map(|&i| y[i]).collect(),
                test_indices: test,
            };
            Ok((info, outcomes, notes))
        })
        .collect();

    let mut models: Vec<ModelReport> = sets
        .iter()
        .map(|set| ModelReport {
            name: set.name(),
            kind: set.kind(),
            feature_names: Vec::new(),
            accuracies: Vec::new(),
            mean_accuracy: None,
            predictions: Vec::new(),
            importances: Vec::new(),
        })
        .collect();
    let mut repetitions = Vec::with_capacity(s.repetitions);
    let mut diagnostics = Vec::new();
    for (rep, result) in reps.into_iter().enumerate() {
        let (info, outcomes, notes) = result?;
        diagnostics.extend(notes);
        for (model, outcome) in models.iter_mut().zip(outcomes) {
            match outcome {
                Ok(o) => {
                    if model.feature_names.is_empty() {
                        model.feature_names = o.feature_names;
                    }
                    model.accuracies.push(Some(o.accuracy));
                    model.predictions.push(Some(o.predictions));
                    model.importances.push(Some(o.importances));
                }
                Err(e) => {
                    diagnostics.push(format!("repetition {rep}, model {}: {e}", model.name));
                    model.accuracies.push(None);
                    model.predictions.push(None);
                    model.importances.push(None);
                }
            }
        }
        repetitions.push(info);
    }
    for m in &mut models {
        m.mean_accuracy = mean(m.accuracies.iter().flatten().copied());
    }

    let n_rows = match (&shared, &plan.source) {
        (Some(p), _) => p.features.n_rows(),
        (None, DataSource::Simulated(cell)) => cell.n,
        (None, _) => 0,
    };
    let protocol = if simulated {
        "transductive: a new dataset is simulated and embedded for every repetition before splitting"
    } else {
        "transductive: one embedding of all rows is reused across the repetitions' splits"
    };
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: plan.source.label(),
        n_rows,
        n_train: (s.split_fraction * n_rows as f64).round() as usize,
        embedding_protocol: protocol.to_string(),
        settings: s.clone(),
        models,
        repetitions,
        diagnostics,
    })
}

/// Reports for every cell of a simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub schema_version: u32,
    pub cells: Vec<ExperimentReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummaryRow {
    pub model: String,
    /// Mean over cells of each cell's mean accuracy.
    pub mean_accuracy: Option<f64>,
    pub per_cell: Vec<Option<f64>>,
}

impl GridReport {
    /// Runs `settings` on every cell; cells run one after another with
    /// parallelism inside each.
    pub fn run(cells: &[GridCell], settings: &PlanSettings) -> Result<Self> {
        let reports = cells
            .iter()
            .map(|cell| {
                let started = std::time::Instant::now();
                let plan = ExperimentPlan {
                    source: DataSource::Simulated(cell.clone()),
                    settings: settings.clone(),
                };
                let r = run_experiment(&plan);
                log::info!("cell {} finished in {:?}", cell.label(), started.elapsed());
                r
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            cells: reports,
        })
    }

    pub fn model_names(&self) -> Vec<String> {
        self.cells
            .first()
            .map(|c| c.models.iter().map(|m| m.name.clone()).collect())
            .unwrap_or_default()
    }

    pub fn summary(&self) -> Vec<GridSummaryRow> {
        self.model_names()
            .into_iter()
            .map(|model| {
                let per_cell: Vec<Option<f64>> =
                    self.cells.iter().map(|c| c.mean_accuracy(&model)).collect();
                GridSummaryRow {
                    mean_accuracy: mean(per_cell.iter().flatten().copied()),
                    model,
                    per_cell,
                }
            })
            .collect()
    }

    pub fn mean_accuracy(&self, model: &str) -> Option<f64> {
        mean(self.cells.iter().filter_map(|c| c.mean_accuracy(model)))
    }

    /// Mean over cells of the median single-method accuracy.
    pub fn mean_median_single(&self) -> Option<f64> {
        mean(self.cells.iter().filter_map(|c| c.median_single()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "unsupported report schema version {}",
                r.schema_version
            )));
        }
        Ok(r)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dataset", "model", "repetition", "accuracy"])?;
        for c in &self.cells {
            c.write_rows(&mut out)?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

pub fn save_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
