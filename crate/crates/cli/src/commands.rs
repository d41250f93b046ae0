use std::error::Error as StdError;
use std::fs;
use std::path::{Path, PathBuf};

use drens::bench::{
    run_experiment, DataSource, ExperimentPlan, ExperimentReport, GridReport, PlanSettings,
};
use drens::embed::{fit, EmbeddingResult, Method};
use drens::ensemble::{build_ensemble, Selection};
use drens::forest::ForestParams;
use drens::ingest::{load_breast_cancer, load_drug, DatasetSpec, Substance};
use drens::preprocess::{complete_cases, encode, format_num, standardize, DataTable, FeatureMatrix};
use drens::simgen::{simulate_dataset, simulation_grid, SimConfig};

use super::{
    BenchArgs, DatasetName, EmbedArgs, EnsembleArgs, InputArgs, PlotArgs, PlotKind, SimulateArgs,
};
use crate::svg::{bar_chart, scatter2d, Bar};

type CmdResult = Result<(), Box<dyn StdError>>;

const BREAST_CANCER_FILE: &str = "data/breast-cancer-wisconsin.data";
const DRUG_FILE: &str = "data/drug_consumption.data";

fn create_dir(path: &Path) -> Result<(), String> {
    fs::create_dir_all(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), String> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn simulate(a: SimulateArgs) -> CmdResult {
    create_dir(&a.out)?;
    if a.all {
        for cell in simulation_grid(a.seed, a.n) {
            for rep in 0..cell.seeds.len() {
                let table = simulate_dataset(&cell.config(rep))?;
                let path = a.out.join(format!("{}_rep{:02}.csv", cell.label(), rep + 1));
                table.save_csv(&path)?;
            }
        }
        return Ok(());
    }
    let cfg = SimConfig {
        relationship: a.relationship.expect("required by clap"),
        noise_variance: a.noise.expect("required by clap"),
        n: a.n,
        seed: a.seed,
    };
    let table = simulate_dataset(&cfg)?;
    table.save_csv(a.out.join(format!("{}.csv", cfg.label())))?;
    Ok(())
}

fn dataset_spec(name: DatasetName, data: Option<PathBuf>, substance: Substance) -> DatasetSpec {
    match name {
        DatasetName::BreastCancer => DatasetSpec::BreastCancer {
            path: data.unwrap_or_else(|| BREAST_CANCER_FILE.into()),
        },
        DatasetName::Drug => DatasetSpec::Drug {
            path: data.unwrap_or_else(|| DRUG_FILE.into()),
            substance,
        },
    }
}

/// Loads the input table and returns it encoded and standardized, with a
/// label for titles.
fn load_input(input: &InputArgs) -> Result<(FeatureMatrix, String), Box<dyn StdError>> {
    let (table, label): (DataTable, String) = match (&input.input, input.dataset) {
        (Some(path), _) => {
            let t = complete_cases(&DataTable::load_csv(path)?)?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            (t, label)
        }
        (None, Some(name)) => {
            let spec = dataset_spec(name, input.data.clone(), input.substance);
            let t = match &spec {
                DatasetSpec::BreastCancer { path } => load_breast_cancer(path)?,
                DatasetSpec::Drug { path, substance } => load_drug(path, *substance)?,
            };
            (t, spec.label())
        }
        (None, None) => return Err("either --in or --dataset is required".into()),
    };
    Ok((standardize(&encode(&table)?), label))
}

fn scores_csv(result: &EmbeddingResult, y: &[u8]) -> Result<Vec<u8>, Box<dyn StdError>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=result.dims())
        .map(|c| format!("{}:{c}", result.method.name()))
        .collect();
    header.push("outcome".into());
    w.write_record(&header)?;
    for (i, row) in result.scores.row_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|&v| format_num(v)).collect();
        rec.push(y[i].to_string());
        w.write_record(&rec)?;
    }
    Ok(w.into_inner().map_err(|e| e.to_string())?)
}

fn embedding_scatter(result: &EmbeddingResult, y: &[u8], dataset: &str) -> String {
    let points: Vec<(f64, f64)> = result
        .scores
        .row_iter()
        .map(|r| (r[0], r.get(1).copied().unwrap_or(0.0)))
        .collect();
    let name = result.method.label();
    scatter2d(
        &points,
        Some(y),
        &format!("{name} embedding of {dataset}"),
        &format!("{name} 1"),
        &format!("{name} 2"),
    )
}

pub fn embed(a: EmbedArgs) -> CmdResult {
    let methods = a.method.0.clone();
    if methods.is_empty() {
        return Err("no method given".into());
    }
    let (features, label) = load_input(&a.input)?;
    let cfg = a.params.config(a.seed);
    let single = methods.len() == 1;
    let out_dir = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
    for m in methods {
        let result = fit(m, &features.x, &cfg)?;
        for d in &result.diagnostics {
            log::warn!("{}: {d}", m.name());
        }
        let csv_path = match (&a.out, single) {
            (Some(p), true) => p.clone(),
            _ => out_dir.join(format!("{}_scores.csv", m.name())),
        };
        write_file(&csv_path, &scores_csv(&result, &features.y)?)?;
        if let Some(svg) = &a.svg {
            if result.dims() < 2 {
                return Err(format!("{} has a single component; nothing to scatter", m.label()).into());
            }
            let path = if single {
                svg.clone()
            } else {
                svg.join(format!("{}.svg", m.name()))
            };
            write_file(&path, embedding_scatter(&result, &features.y, &label).as_bytes())?;
        }
    }
    Ok(())
}

fn parse_selection(s: &str) -> Result<Selection, Box<dyn StdError>> {
    Ok(match s {
        "large" => Selection::Large,
        "small" => Selection::Small,
        list => Selection::Custom(
            list.split(',')
                .map(|p| p.trim().parse::<Method>())
                .collect::<Result<Vec<_>, _>>()?,
        ),
    })
}

pub fn ensemble(a: EnsembleArgs) -> CmdResult {
    let selection = parse_selection(&a.selection)?;
    let (features, _) = load_input(&a.input)?;
    let cfg = a.params.config(a.seed);
    let results = selection
        .methods()
        .into_iter()
        .map(|m| fit(m, &features.x, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let e = build_ensemble(&results, &selection, &features.y)?;
    let path = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}_ensemble.csv", selection.name())));
    let mut buf = Vec::new();
    e.write_csv(&mut buf)?;
    write_file(&path, &buf)?;
    Ok(())
}

fn settings(a: &BenchArgs) -> PlanSettings {
    PlanSettings {
        methods: a.methods.0.clone(),
        large_ensemble: !a.no_large,
        small_ensemble: !a.no_small,
        include_full_data_baseline: !a.no_baseline,
        repetitions: a.reps,
        stratify: a.stratify,
        seed: a.seed,
        embed: a.params.config(0),
        forest: ForestParams {
            n_trees: a.trees,
            mtry: a.mtry,
            min_node_size: a.min_node_size,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn accuracy_bars(report: &ExperimentReport) -> String {
    let bars: Vec<Bar> = report
        .models
        .iter()
        .map(|m| {
            let done: Vec<f64> = m.accuracies.iter().flatten().copied().collect();
            let lo = done.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = done.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Bar {
                label: m.name.clone(),
                value: m.mean_accuracy.unwrap_or(0.0),
                spread: (!done.is_empty()).then_some((lo, hi)),
            }
        })
        .collect();
    bar_chart(
        &bars,
        &format!("Test accuracy on {}", report.dataset),
        "mean accuracy (range over repetitions)",
        Some(accuracy_axis(&bars)),
    )
}

fn grid_accuracy_bars(grid: &GridReport) -> String {
    let bars: Vec<Bar> = grid
        .summary()
        .into_iter()
        .map(|row| {
            let done: Vec<f64> = row.per_cell.iter().flatten().copied().collect();
            let lo = done.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = done.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Bar {
                label: row.model,
                value: row.mean_accuracy.unwrap_or(0.0),
                spread: (!done.is_empty()).then_some((lo, hi)),
            }
        })
        .collect();
    bar_chart(
        &bars,
        "Test accuracy over the simulation grid",
        "mean accuracy (range over conditions)",
        Some(accuracy_axis(&bars)),
    )
}

/// Accuracy axis from a round lower bound below every bar up to 1.
fn accuracy_axis(bars: &[Bar]) -> (f64, f64) {
    let low = bars
        .iter()
        .map(|b| b.spread.map_or(b.value, |s| s.0.min(b.value)))
        .fold(1.0_f64, f64::min);
    (((low - 0.02) * 10.0).floor().max(0.0) / 10.0, 1.0)
}

fn importance_bars(report: &ExperimentReport, model: &str) -> Result<String, String> {
    let m = report
        .model(model)
        .ok_or_else(|| format!("report has no model `{model}`"))?;
    let imp = m
        .mean_importances()
        .ok_or_else(|| format!("model `{model}` has no completed repetitions"))?;
    let mut bars: Vec<Bar> = m
        .feature_names
        .iter()
        .zip(imp)
        .map(|(name, value)| Bar {
            label: name.clone(),
            value,
            spread: None,
        })
        .collect();
    bars.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(bar_chart(
        &bars,
        &format!("Impurity importance, {model} model, {}", report.dataset),
        "mean normalized Gini decrease",
        None,
    ))
}

pub fn bench(a: BenchArgs) -> CmdResult {
    let s = settings(&a);
    create_dir(&a.out)?;
    if a.simulated {
        let grid = GridReport::run(&simulation_grid(a.seed, a.n), &s)?;
        write_file(&a.out.join("grid_report.json"), grid.to_json()?.as_bytes())?;
        let mut buf = Vec::new();
        grid.write_csv(&mut buf)?;
        write_file(&a.out.join("grid_report.csv"), &buf)?;
        write_file(&a.out.join("accuracy.svg"), grid_accuracy_bars(&grid).as_bytes())?;
        for row in grid.summary() {
            println!(
                "{:<8} {}",
                row.model,
                row.mean_accuracy.map_or("-".into(), |v| format!("{v:.4}"))
            );
        }
        return Ok(());
    }
    let name = a.dataset.expect("required by clap");
    let spec = dataset_spec(name, a.data.clone(), a.substance);
    if !spec.path().exists() {
        return Err(format!("dataset file not found: {}", spec.path().display()).into());
    }
    let report = run_experiment(&ExperimentPlan {
        source: DataSource::Dataset(spec),
        settings: s,
    })?;
    write_file(&a.out.join("report.json"), report.to_json()?.as_bytes())?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_file(&a.out.join("report.csv"), &buf)?;
    write_file(&a.out.join("accuracy.svg"), accuracy_bars(&report).as_bytes())?;
    if report.model("full").is_some_and(|m| m.completed() > 0) {
        write_file(
            &a.out.join("importance.svg"),
            importance_bars(&report, "full")?.as_bytes(),
        )?;
    }
    for m in &report.models {
        println!(
            "{:<8} {}",
            m.name,
            m.mean_accuracy.map_or("-".into(), |v| format!("{v:.4}"))
        );
    }
    Ok(())
}

/// Reads a scores CSV: all columns but `outcome` are coordinates.
fn read_scores(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>, Option<Vec<u8>>), Box<dyn StdError>> {
    let text = read_file(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let outcome = header.iter().position(|h| h == "outcome");
    let mut coords = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::new();
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| format!("{}: row {}: `{field}` is not a number", path.display(), line + 2))?;
            if Some(c) == outcome {
                y.push(u8::from(v != 0.0));
            } else {
                row.push(v);
            }
        }
        coords.push(row);
    }
    let names = header
        .into_iter()
        .enumerate()
        .filter(|(c, _)| Some(*c) != outcome)
        .map(|(_, h)| h)
        .collect();
    Ok((names, coords, outcome.map(|_| y)))
}

fn load_report(path: &Path) -> Result<Result<ExperimentReport, GridReport>, Box<dyn StdError>> {
    let text = read_file(path)?;
    if let Ok(r) = ExperimentReport::from_json(&text) {
        return Ok(Ok(r));
    }
    match GridReport::from_json(&text) {
        Ok(g) => Ok(Err(g)),
        Err(e) => Err(format!("{}: not a benchmark report: {e}", path.display()).into()),
    }
}

pub fn plot(a: PlotArgs) -> CmdResult {
    let svg = match a.kind {
        PlotKind::Scatter2d => {
            let (names, coords, y) = read_scores(&a.input)?;
            if names.len() != 2 {
                return Err(format!(
                    "scatter2d needs exactly 2 score columns, {} has {}",
                    a.input.display(),
                    names.len()
                )
                .into());
            }
            let points: Vec<(f64, f64)> = coords.iter().map(|r| (r[0], r[1])).collect();
            let classes = if a.color_by_outcome {
                Some(y.ok_or("--color-by-outcome needs an `outcome` column")?)
            } else {
                None
            };
            let title = a.title.clone().unwrap_or_else(|| {
                a.input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            scatter2d(&points, classes.as_deref(), &title, &names[0], &names[1])
        }
        PlotKind::AccuracyBars => match load_report(&a.input)? {
            Ok(r) => accuracy_bars(&r),
            Err(g) => grid_accuracy_bars(&g),
        },
        PlotKind::ImportanceBars => match load_report(&a.input)? {
            Ok(r) => importance_bars(&r, &a.model)?,
            Err(_) => return Err("importance_bars needs a single-dataset report".into()),
        },
    };
    write_file(&a.out, svg.as_bytes())?;
    Ok(())
}
