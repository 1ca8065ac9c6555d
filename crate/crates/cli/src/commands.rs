use std::fmt::Write as _;
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use plrsq_core::classifier::train as train_model;
use plrsq_core::datagen::{gen_dataset, SynthSpec};
use plrsq_core::harness::{
    config_hash, evaluate, fit, history_tsv, load_dataset, load_model, run_cv, run_experiment,
    save_dataset, save_model, write_atomic, DataSource, ExperimentConfig, Grid, ModelFile,
    ModelMeta,
};
use plrsq_core::spd::{geo_distance, sym_eig};
use plrsq_core::{Classifier, Error, Result, TrainConfig};

use crate::args::{BenchArgs, CvArgs, EvalArgs, GenSynthArgs, GridFlags, PredictArgs, TrainArgs};

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

pub fn gen_synth(a: GenSynthArgs) -> Result<()> {
    let mut spec = SynthSpec::new(a.kind, a.seed);
    spec.instances_per_class = a.instances_per_class;
    if let Some(e) = a.epsilon {
        spec.epsilon = e;
    }
    if let Some(nu) = a.nu {
        spec.nu = nu;
    }
    let splits = gen_dataset(&spec)?;
    create_dir(&a.out)?;
    for (name, data) in [("train", &splits.train), ("validation", &splits.validation), ("test", &splits.test)] {
        save_dataset(&a.out.join(format!("{name}.spdds")), data)?;
    }
    eprintln!(
        "wrote {} {} x {} samples per split to {}",
        a.kind.as_str(),
        splits.train.len(),
        spec.dim,
        a.out.display()
    );
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let data = load_dataset(&a.train)?;
    let monitor = a.test.as_deref().map(load_dataset).transpose()?;
    let config = a.method.configure(&a.flags.config(a.seed, a.history.is_some()));
    let fitted = fit(a.method, &data, &config, monitor.as_ref())?;
    let file = ModelFile {
        model: fitted.model,
        meta: ModelMeta {
            seed: Some(a.seed),
            config_hash: Some(config_hash(&config)),
        },
    };
    save_model(&a.out, &file)?;
    if let Some(path) = &a.history {
        write_atomic(path, history_tsv(&fitted.history).as_bytes())?;
    }
    let metrics = evaluate(&file.model, &data)?;
    eprintln!(
        "trained {} on {} samples; training accuracy {:.4}",
        a.method,
        data.len(),
        metrics.accuracy
    );
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let file = load_model(&a.model)?;
    let data = load_dataset(&a.data)?;
    let model = &file.model;
    let classes = model.num_classes();
    let mut out = String::from("index\tlabel\tpredicted");
    for k in 1..=classes {
        let _ = write!(out, "\tp{k}");
    }
    out.push('\n');
    for (i, (x, y)) in data.iter().enumerate() {
        let predicted = model.predict_class(x)?;
        let _ = write!(out, "{i}\t{y}\t{predicted}");
        match model.class_probs(x)? {
            Some(probs) => probs.iter().for_each(|p| {
                let _ = write!(out, "\t{p:.6e}");
            }),
            None => (0..classes).for_each(|_| out.push_str("\t-")),
        }
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)?;
    let metrics = evaluate(model, &data)?;
    eprintln!("accuracy {:.4}, kappa {:.4}", metrics.accuracy, metrics.kappa);
    Ok(())
}

fn or_default<T: Clone>(values: &[T], default: T) -> Vec<T> {
    if values.is_empty() {
        vec![default]
    } else {
        values.to_vec()
    }
}

fn grid(flags: &GridFlags, base: &TrainConfig) -> Grid {
    Grid {
        sigma_sq: or_default(&flags.grid_sigma_sq, base.sigma_sq_opt),
        prototypes_per_class: or_default(&flags.grid_xi, base.prototypes_per_class),
        epochs: or_default(&flags.grid_epochs, base.epochs),
    }
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let data = match (a.synthetic, &a.train, &a.test) {
        (Some(kind), _, _) => DataSource::Synthetic(kind),
        (None, Some(train), Some(test)) => DataSource::Files {
            train: train.clone(),
            validation: a.validation.clone(),
            test: test.clone(),
        },
        _ => {
            return Err(Error::Config(
                "eval needs --synthetic or both --train and --test".into(),
            ))
        }
    };
    let base = a.flags.config(a.seed, a.out_dir.is_some());
    let config = ExperimentConfig {
        method: a.method,
        selection: a.select.then(|| grid(&a.grid, &base)),
        train: base,
        data,
        output_dir: a.out_dir.clone(),
        repetitions: a.repetitions,
        seed: a.seed,
    };
    let outcome = run_experiment(&config)?;
    print!("{}", outcome.report.to_tsv());
    Ok(())
}

pub fn cv(a: CvArgs) -> Result<()> {
    let data = load_dataset(&a.data)?;
    let base = a.flags.config(a.seed, false);
    let result = run_cv(a.method, &data, &base, &grid(&a.grid, &base), a.folds, a.seed)?;
    emit(a.out.as_deref(), &result.to_tsv())?;
    let b = result.best;
    eprintln!("best: sigma_sq {} xi {} epochs {}", b.sigma_sq, b.xi, b.epochs);
    Ok(())
}

fn time_per_call(iterations: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..iterations {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() / iterations as f64)
}

pub fn bench(a: BenchArgs) -> Result<()> {
    if a.iterations == 0 || a.dim < 2 || a.dim > 12 {
        return Err(Error::Config("bench needs iterations >= 1 and 2 <= dim <= 12".into()));
    }
    let spec = SynthSpec {
        dim: a.dim,
        instances_per_class: 50,
        ..SynthSpec::new(plrsq_core::datagen::SynthKind::SynI, a.seed)
    };
    let data = gen_dataset(&spec)?.train;
    let (x, y) = (&data.samples()[0].0, &data.samples()[1].0);
    let eig = time_per_call(a.iterations, || sym_eig(x.matrix()).map(|e| drop(black_box(e))))?;
    let dist = time_per_call(a.iterations, || geo_distance(x, y).map(|d| {
        black_box(d);
    }))?;
    let config = TrainConfig {
        epochs: 1,
        rng_seed: a.seed,
        track_history: false,
        ..TrainConfig::default()
    };
    let mut model = train_model(&data, &config)?.model;
    let step = time_per_call(a.iterations, || model.sgd_step(x, data.samples()[0].1, 0.01))?;
    let epoch = time_per_call(3, || train_model(&data, &config).map(|o| drop(black_box(o))))?;
    println!("kernel\tdim\tseconds");
    println!("sym_eig\t{}\t{eig:.3e}", a.dim);
    println!("geo_distance\t{}\t{dist:.3e}", a.dim);
    println!("sgd_step\t{}\t{step:.3e}", a.dim);
    println!("epoch_{}_samples\t{}\t{epoch:.3e}", data.len(), a.dim);
    Ok(())
}
