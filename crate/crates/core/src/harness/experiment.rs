use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::classifier::TrainConfig;
use crate::dataset::LabeledDataset;
use crate::datagen::{gen_dataset, SynthKind, SynthSpec};
use crate::error::{Error, Result};

use super::cv::{select_on_validation, Grid, GridPoint};
use super::format::{load_dataset, save_model, write_atomic, ModelFile, ModelMeta, config_hash};
use super::method::{fit, history_tsv, HistoryRow, Method};
use super::metrics::{evaluate, MetricsReport, RunMetrics};

/// Where each repetition gets its data.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// A fresh synthetic draw per repetition, seeded from the run seed.
    Synthetic(SynthKind),
    /// Fixed splits; repetitions differ only in training randomness.
    Files {
        train: PathBuf,
        validation: Option<PathBuf>,
        test: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub train: TrainConfig,
    pub data: DataSource,
    /// Receives `report.tsv`, per-run histories and models when set.
    pub output_dir: Option<PathBuf>,
    pub repetitions: usize,
    pub seed: u64,
    /// When set, every repetition selects its hyperparameters on the
    /// validation split before the final fit.
    pub selection: Option<Grid>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be positive".into()));
        }
        if self.method.is_iterative() {
            let dim = match self.data {
                DataSource::Synthetic(_) => SynthSpec::new(SynthKind::SynI, 0).dim,
                DataSource::Files { .. } => 1,
            };
            match &self.selection {
                Some(grid) if grid.is_empty() => {
                    return Err(Error::Config("selection grid is empty".into()))
                }
                Some(grid) => {
                    for p in grid.points() {
                        self.method.configure(&p.apply(&self.train)).validate(dim)?;
                    }
                }
                None => self.method.configure(&self.train).validate(dim)?,
            }
        }
        if self.selection.is_some() {
            if let DataSource::Files { validation: None, .. } = self.data {
                return Err(Error::Config(
                    "hyperparameter selection needs a validation split".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Seed of repetition `run`, decorrelated from neighbouring runs.
pub fn derive_seed(seed: u64, run: usize) -> u64 {
    let mut z = seed ^ (run as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub selected: Option<GridPoint>,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub report: MetricsReport,
    /// Sorted by run index.
    pub runs: Vec<RunOutcome>,
}

struct Splits {
    train: LabeledDataset,
    validation: Option<LabeledDataset>,
    test: LabeledDataset,
}

fn load_files(data: &DataSource) -> Result<Option<Splits>> {
    match data {
        DataSource::Synthetic(_) => Ok(None),
        DataSource::Files {
            train,
            validation,
            test,
        } => Ok(Some(Splits {
            train: load_dataset(train)?,
            validation: validation.as_deref().map(load_dataset).transpose()?,
            test: load_dataset(test)?,
        })),
    }
}

fn run_one(config: &ExperimentConfig, fixed: Option<&Splits>, run: usize) -> Result<RunOutcome> {
    let seed = derive_seed(config.seed, run);
    let generated;
    let splits = match (fixed, &config.data) {
        (Some(s), _) => s,
        (None, DataSource::Synthetic(kind)) => {
            let g = gen_dataset(&SynthSpec::new(*kind, seed))?;
            generated = Splits {
                train: g.train,
                validation: Some(g.validation),
                test: g.test,
            };
            &generated
        }
        (None, DataSource::Files { .. }) => unreachable!("file splits are loaded up front"),
    };

    let track = config.output_dir.is_some();
    let mut train_config = TrainConfig {
        rng_seed: seed,
        track_history: track,
        ..config.train.clone()
    };
    let mut selected = None;
    if let (Some(grid), true) = (&config.selection, config.method.is_iterative()) {
        let validation = splits
            .validation
            .as_ref()
            .ok_or_else(|| Error::Config("selection needs a validation split".into()))?;
        let result = select_on_validation(config.method, &splits.train, validation, &train_config, grid)?;
        train_config = result.best.apply(&train_config);
        selected = Some(result.best);
    }

    // Without hyperparameters to tune, MDRM learns from the validation split too.
    let merged;
    let train_data = match (config.method, &splits.validation) {
        (Method::Mdrm, Some(v)) => {
            merged = splits.train.concat(v)?;
            &merged
        }
        _ => &splits.train,
    };
    let monitor = track.then_some(&splits.test);
    let fitted = fit(config.method, train_data, &train_config, monitor)?;
    let metrics = evaluate(&fitted.model, &splits.test)?;

    if let Some(dir) = &config.output_dir {
        if config.method.is_iterative() {
            write_atomic(
                &dir.join(format!("history_run{run:03}.tsv")),
                history_tsv(&fitted.history).as_bytes(),
            )?;
        }
        let file = ModelFile {
            model: fitted.model,
            meta: ModelMeta {
                seed: Some(seed),
                config_hash: Some(config_hash(&config.method.configure(&train_config))),
            },
        };
        save_model(&dir.join(format!("model_run{run:03}.spdmodel")), &file)?;
    }
    Ok(RunOutcome {
        run,
        seed,
        metrics,
        selected,
        history: fitted.history,
    })
}

/// Runs every repetition, in parallel, and aggregates the test metrics.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let fixed = load_files(&config.data)?;
    let mut runs = (0..config.repetitions)
        .into_par_iter()
        .map(|run| {
            run_one(config, fixed.as_ref(), run).map_err(|e| Error::Run {
                run,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| r.run);
    let report = MetricsReport::from_runs(runs.iter().map(|r| r.metrics.clone()).collect());
    if let Some(dir) = &config.output_dir {
        write_atomic(&dir.join("report.tsv"), report_tsv(&report, &runs).as_bytes())?;
    }
    Ok(ExperimentOutcome { report, runs })
}

fn report_tsv(report: &MetricsReport, runs: &[RunOutcome]) -> String {
    let mut out = String::from("run\tseed\taccuracy\tkappa\tsigma_sq\txi\tepochs\n");
    for r in runs {
        let (s, xi, e) = match r.selected {
            Some(p) => (p.sigma_sq.to_string(), p.xi.to_string(), p.epochs.to_string()),
            None => ("-".into(), "-".into(), "-".into()),
        };
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{:.6}\t{s}\t{xi}\t{e}\n",
            r.run, r.seed, r.metrics.accuracy, r.metrics.kappa
        ));
    }
    out.push_str(&format!(
        "# accuracy {:.6} +- {:.6}, kappa {:.6} +- {:.6}\n",
        report.accuracy_mean, report.accuracy_std, report.kappa_mean, report.kappa_std
    ));
    out
}
