use drens::bench::{
    run_experiment, DataSource, ExperimentPlan, ExperimentReport, ModelKind, PlanSettings,
};
use drens::forest::ForestParams;
use drens::simgen::{simulate_dataset, simulation_grid, Relationship, SimConfig};

fn quick_settings(reps: usize) -> PlanSettings {
    let mut s = PlanSettings {
        repetitions: reps,
        seed: 5,
        forest: ForestParams {
            n_trees: 25,
            ..Default::default()
        },
        ..Default::default()
    };
    s.embed.local.tsne_perplexity = 30.0;
    s.embed.local.tsne_iters = 300;
    s
}

fn table_plan(n: usize, settings: PlanSettings) -> ExperimentPlan {
    let cfg = SimConfig {
        n,
        ..SimConfig::new(Relationship::Mixed, 0.25, 77)
    };
    ExperimentPlan {
        source: DataSource::Table {
            label: "fixture".into(),
            table: simulate_dataset(&cfg).unwrap(),
        },
        settings,
    }
}

#[test]
fn full_plan_reports_eleven_models() {
    let report = run_experiment(&table_plan(240, quick_settings(3))).unwrap();
    let names: Vec<&str> = report.models.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(
        names,
        ["pca", "mds", "kpca", "isomap", "lle", "hlle", "le", "tsne", "large", "small", "full"]
    );
    for m in &report.models {
        assert_eq!(m.accuracies.len(), 3, "{}", m.name);
        assert_eq!(m.completed(), 3, "{}: {:?}", m.name, report.diagnostics);
        assert!(m.accuracies.iter().flatten().all(|a| (0.0..=1.0).contains(a)));
        let mean = m.accuracies.iter().flatten().sum::<f64>() / 3.0;
        assert!((m.mean_accuracy.unwrap() - mean).abs() < 1e-12);
    }
    assert_eq!(report.model("large").unwrap().feature_names.len(), 16);
    assert_eq!(
        report.model("small").unwrap().feature_names,
        ["pca:1", "pca:2", "mds:1", "mds:2", "tsne:1", "tsne:2"]
    );
    assert_eq!(report.model("full").unwrap().kind, ModelKind::Full);
    assert_eq!((report.n_rows, report.n_train), (240, 168));
    report.check_consistency().unwrap();
    for rep in &report.repetitions {
        assert_eq!(rep.test_indices.len(), 72);
        for m in &report.models {
            let r = report.repetitions.iter().position(|x| x == rep).unwrap();
            assert_eq!(m.predictions[r].as_ref().unwrap().len(), 72);
        }
    }
}

#[test]
fn filtering_leaves_single_methods() {
    let mut s = quick_settings(1);
    s.large_ensemble = false;
    s.small_ensemble = false;
    s.include_full_data_baseline = false;
    let report = run_experiment(&table_plan(150, s)).unwrap();
    assert_eq!(report.models.len(), 8);
    assert!(report.models.iter().all(|m| m.kind == ModelKind::Single));
}

#[test]
fn failed_embedder_is_recorded_and_run_continues() {
    let mut s = quick_settings(2);
    s.embed.local.tsne_perplexity = 80.0;
    let report = run_experiment(&table_plan(150, s)).unwrap();
    for name in ["tsne", "large", "small"] {
        let m = report.model(name).unwrap();
        assert_eq!(m.completed(), 0, "{name}");
        assert_eq!(m.mean_accuracy, None);
    }
    assert_eq!(report.model("pca").unwrap().completed(), 2);
    assert!(report
        .diagnostics
        .iter()
        .any(|d| d.contains("tsne: failed") && d.contains("3 * perplexity < n")));
    report.check_consistency().unwrap();
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 11 * 2);
    assert!(text.contains("fixture,tsne,0,\n"));
}

#[test]
fn report_is_identical_across_thread_counts() {
    let cell = simulation_grid(3, 150).remove(4);
    let mut s = quick_settings(2);
    s.methods = vec![
        drens::embed::Method::Pca,
        drens::embed::Method::Le,
        drens::embed::Method::Tsne,
    ];
    s.large_ensemble = false;
    let plan = ExperimentPlan {
        source: DataSource::Simulated(cell),
        settings: s,
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_experiment(&plan).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.models.len(), 5);
    assert_ne!(
        a.repetitions[0].data_seed, a.repetitions[1].data_seed,
        "simulated repetitions draw fresh data"
    );
    let back = ExperimentReport::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn invalid_plans_are_rejected() {
    let mut s = quick_settings(1);
    s.repetitions = 0;
    assert!(run_experiment(&table_plan(120, s)).is_err());
    let mut s = quick_settings(11);
    s.split_fraction = 0.7;
    let plan = ExperimentPlan {
        source: DataSource::Simulated(simulation_grid(1, 120).remove(0)),
        settings: s,
    };
    assert!(run_experiment(&plan).is_err());
}
