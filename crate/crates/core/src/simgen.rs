//! Simulated classification data: 13 mixed-type predictors, four of which
//! drive a binary outcome through main effects, interactions or a mix.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{Cell, Column, ColumnKind, DataTable};
use crate::seed::{derive_tagged, rng_from};

pub const NOISE_LEVELS: [f64; 3] = [0.25, 0.5, 0.75];
pub const REPETITIONS: usize = 10;
pub const DEFAULT_N: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relationship {
    MainEffects,
    Interactions,
    Mixed,
}

impl Relationship {
    pub const ALL: [Relationship; 3] = [
        Relationship::MainEffects,
        Relationship::Interactions,
        Relationship::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relationship::MainEffects => "main_effects",
            Relationship::Interactions => "interactions",
            Relationship::Mixed => "mixed",
        }
    }

    /// Latent score from the four predictive inputs, with `x3` already
    /// centred and scaled.
    fn latent(self, x1: f64, x2: f64, x3: f64, x4: f64) -> f64 {
        match self {
            Relationship::MainEffects => x1 + x2 + x3 + x4,
            Relationship::Interactions => x1 * x2 + x3 * x4,
            Relationship::Mixed => x1 + x2 + x3 * x4,
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relationship {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Relationship::ALL
            .into_iter()
            .find(|r| r.name() == key)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown relationship `{s}`; expected one of main_effects, interactions, mixed"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub relationship: Relationship,
    pub noise_variance: f64,
    pub n: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(relationship: Relationship, noise_variance: f64, seed: u64) -> Self {
        Self {
            relationship,
            noise_variance,
            n: DEFAULT_N,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {}",
                self.noise_variance
            )));
        }
        if self.n < 100 {
            return Err(Error::InvalidArgument(format!(
                "n must be at least 100, got {}",
                self.n
            )));
        }
        Ok(())
    }

    /// Short identifier such as `mixed_0.5`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.relationship, self.noise_variance)
    }
}

/// Column layout: name, kind, and whether the column feeds the outcome.
pub const LAYOUT: [(&str, ColumnKind, bool); 13] = [
    ("x1", ColumnKind::Continuous, true),
    ("x2", ColumnKind::Continuous, true),
    ("x3", ColumnKind::Ordinal, true),
    ("x4", ColumnKind::Binary, true),
    ("x5", ColumnKind::Continuous, false),
    ("x6", ColumnKind::Continuous, false),
    ("x7", ColumnKind::Ordinal, false),
    ("x8", ColumnKind::Ordinal, false),
    ("x9", ColumnKind::Ordinal, false),
    ("x10", ColumnKind::Binary, false),
    ("x11", ColumnKind::Binary, false),
    ("x12", ColumnKind::Binary, false),
    ("x13", ColumnKind::Binary, false),
];

pub const OUTCOME_NAME: &str = "y";

fn draw<R: Rng>(kind: ColumnKind, rng: &mut R, normal: &Normal<f64>) -> f64 {
    match kind {
        ColumnKind::Continuous => normal.sample(rng),
        ColumnKind::Ordinal => rng.random_range(1..=5) as f64,
        _ => f64::from(u8::from(rng.random_bool(0.5))),
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Draws one dataset: n rows of 13 predictors plus the outcome `y`.
pub fn simulate_dataset(cfg: &SimConfig) -> Result<DataTable> {
    cfg.validate()?;
    let mut rng = rng_from(cfg.seed);
    let standard = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, cfg.noise_variance.sqrt()).expect("valid normal");

    let mut predictors = Vec::with_capacity(cfg.n);
    let mut noisy = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let row: Vec<f64> = LAYOUT
            .iter()
            .map(|(_, kind, _)| draw(*kind, &mut rng, &standard))
            .collect();
        let x3 = (row[2] - 3.0) / 2f64.sqrt();
        let eta = cfg.relationship.latent(row[0], row[1], x3, row[3]);
        noisy.push(eta + noise.sample(&mut rng));
        predictors.push(row);
    }
    let cut = median(&noisy);

    let mut columns: Vec<Column> = LAYOUT
        .iter()
        .map(|(name, kind, _)| Column::new(*name, *kind))
        .collect();
    columns.push(Column::new(OUTCOME_NAME, ColumnKind::Outcome));
    let rows = predictors
        .into_iter()
        .zip(noisy)
        .map(|(row, score)| {
            let mut cells: Vec<Cell> = row.into_iter().map(Cell::Num).collect();
            cells.push(Cell::Num(f64::from(u8::from(score > cut))));
            cells
        })
        .collect();
    DataTable::new(columns, rows)
}

/// One simulation condition with its repetition seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub relationship: Relationship,
    pub noise_variance: f64,
    pub n: usize,
    pub seeds: Vec<u64>,
}

impl GridCell {
    pub fn label(&self) -> String {
        format!("{}_{}", self.relationship, self.noise_variance)
    }

    pub fn config(&self, rep: usize) -> SimConfig {
        SimConfig {
            relationship: self.relationship,
            noise_variance: self.noise_variance,
            n: self.n,
            seed: self.seeds[rep],
        }
    }
}

/// The 3 x 3 grid of relationship types and noise levels, each with
/// `REPETITIONS` seeds derived from `master`.
pub fn simulation_grid(master: u64, n: usize) -> Vec<GridCell> {
    let mut cells = Vec::with_capacity(9);
    for rel in Relationship::ALL {
        for noise in NOISE_LEVELS {
            let index = cells.len() as u64;
            let seeds = (0..REPETITIONS as u64)
                .map(|rep| derive_tagged(master, "simulate", index * 1000 + rep))
                .collect();
            cells.push(GridCell {
                relationship: rel,
                noise_variance: noise,
                n,
                seeds,
            });
        }
    }
    cells
}
