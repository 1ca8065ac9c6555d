use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::classifier::{error_rate, seeded_rng, TrainConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

use super::method::{fit, Method};

/// Stream of the fold-assignment shuffle.
const FOLD_STREAM: u64 = 2;

/// Hyperparameter grid searched by [`run_cv`] and [`select_on_validation`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub sigma_sq: Vec<f64>,
    pub prototypes_per_class: Vec<usize>,
    pub epochs: Vec<usize>,
}

impl Grid {
    pub fn single(config: &TrainConfig) -> Self {
        Self {
            sigma_sq: vec![config.sigma_sq_opt],
            prototypes_per_class: vec![config.prototypes_per_class],
            epochs: vec![config.epochs],
        }
    }

    /// Every combination, σ² varying slowest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &sigma_sq in &self.sigma_sq {
            for &xi in &self.prototypes_per_class {
                for &epochs in &self.epochs {
                    out.push(GridPoint { sigma_sq, xi, epochs });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.sigma_sq.len() * self.prototypes_per_class.len() * self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub sigma_sq: f64,
    pub xi: usize,
    pub epochs: usize,
}

impl GridPoint {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            sigma_sq_opt: self.sigma_sq,
            prototypes_per_class: self.xi,
            epochs: self.epochs,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: GridPoint,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub best: GridPoint,
    /// One row per grid point, in [`Grid::points`] order.
    pub table: Vec<GridRow>,
}

impl SelectionResult {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sigma_sq\txi\tepochs\tmean_accuracy\tfold_accuracies\n");
        for row in &self.table {
            let folds: Vec<String> = row.fold_accuracies.iter().map(|a| format!("{a:.6}")).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\t{}\n",
                row.point.sigma_sq,
                row.point.xi,
                row.point.epochs,
                row.mean_accuracy,
                folds.join(",")
            ));
        }
        out
    }
}

/// Fold index of every sample. Each class is shuffled with a seeded stream
/// and dealt round-robin, so per-fold class counts differ by at most one.
pub fn stratified_folds(data: &LabeledDataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.num_classes()];
    for (i, (_, y)) in data.iter().enumerate() {
        by_class[y.index()].push(i);
    }
    let mut rng = seeded_rng(seed, FOLD_STREAM);
    let mut assignment = vec![0; data.len()];
    for (k, members) in by_class.iter_mut().enumerate() {
        if members.len() < folds {
            return Err(Error::Config(format!(
                "class {} has {} samples, fewer than the {folds} folds",
                k + 1,
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            assignment[i] = j % folds;
        }
    }
    Ok(assignment)
}

/// Highest mean accuracy; ties go to smaller σ², then fewer prototypes, then
/// fewer epochs.
fn pick_best(table: &[GridRow]) -> GridPoint {
    table
        .iter()
        .min_by(|a, b| {
            b.mean_accuracy
                .total_cmp(&a.mean_accuracy)
                .then(a.point.sigma_sq.total_cmp(&b.point.sigma_sq))
                .then(a.point.xi.cmp(&b.point.xi))
                .then(a.point.epochs.cmp(&b.point.epochs))
        })
        .expect("nonempty grid")
        .point
}

fn evaluate_grid(
    method: Method,
    base: &TrainConfig,
    grid: &Grid,
    splits: &[(LabeledDataset, LabeledDataset)],
) -> Result<SelectionResult> {
    if grid.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    if !method.is_iterative() {
        return Err(Error::Config(format!("{method} has no hyperparameters to select")));
    }
    let quiet = TrainConfig {
        track_history: false,
        ..base.clone()
    };
    let points = grid.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..splits.len()).map(move |s| (p, s)))
        .collect();
    let accuracies = jobs
        .par_iter()
        .map(|&(p, s)| {
            let (train, held_out) = &splits[s];
            let config = points[p].apply(&quiet);
            let fitted = fit(method, train, &config, None)?;
            Ok(1.0 - error_rate(&fitted.model, held_out)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let table: Vec<GridRow> = points
        .iter()
        .enumerate()
        .map(|(p, &point)| {
            let fold_accuracies = accuracies[p * splits.len()..(p + 1) * splits.len()].to_vec();
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
            GridRow {
                point,
                fold_accuracies,
                mean_accuracy,
            }
        })
        .collect();
    Ok(SelectionResult {
        best: pick_best(&table),
        table,
    })
}

/// Stratified `folds`-fold cross-validation of every grid point.
pub fn run_cv(
    method: Method,
    data: &LabeledDataset,
    base: &TrainConfig,
    grid: &Grid,
    folds: usize,
    seed: u64,
) -> Result<SelectionResult> {
    let assignment = stratified_folds(data, folds, seed)?;
    let splits: Vec<(LabeledDataset, LabeledDataset)> = (0..folds)
        .map(|f| {
            let (held, kept): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| assignment[i] == f);
            (data.subset(&kept), data.subset(&held))
        })
        .collect();
    evaluate_grid(method, base, grid, &splits)
}

/// Trains every grid point on `train` and scores it on `validation`.
pub fn select_on_validation(
    method: Method,
    train: &LabeledDataset,
    validation: &LabeledDataset,
    base: &TrainConfig,
    grid: &Grid,
) -> Result<SelectionResult> {
    evaluate_grid(method, base, grid, &[(train.clone(), validation.clone())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ClassId;
    use crate::spd::SpdMatrix;

    fn data(per_class: usize) -> LabeledDataset {
        let mut samples = Vec::new();
        for k in 0..3 {
            for i in 0..per_class {
                let mut d = vec![1.0; 2];
                d[k % 2] = 2.0 + k as f64 + 0.01 * i as f64;
                samples.push((SpdMatrix::from_diagonal(&d).unwrap(), ClassId::from_index(k)));
            }
        }
        LabeledDataset::new(2, 3, samples).unwrap()
    }

    #[test]
    fn folds_are_stratified_and_deterministic() {
        let d = data(7);
        let a = stratified_folds(&d, 3, 5).unwrap();
        assert_eq!(a, stratified_folds(&d, 3, 5).unwrap());
        for k in 0..3 {
            let mut counts = [0; 3];
            for (i, (_, y)) in d.iter().enumerate() {
                if y.index() == k {
                    counts[a[i]] += 1;
                }
            }
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn folds_reject_small_classes() {
        assert!(stratified_folds(&data(2), 3, 0).is_err());
        assert!(stratified_folds(&data(5), 1, 0).is_err());
    }

    #[test]
    fn tie_break_prefers_small_configs() {
        let row = |s, xi, e, acc| GridRow {
            point: GridPoint { sigma_sq: s, xi, epochs: e },
            fold_accuracies: vec![acc],
            mean_accuracy: acc,
        };
        let table = vec![
            row(2.0, 1, 10, 1.0),
            row(1.0, 2, 10, 1.0),
            row(1.0, 1, 20, 1.0),
            row(1.0, 1, 10, 0.9),
        ];
        assert_eq!(pick_best(&table), GridPoint { sigma_sq: 1.0, xi: 1, epochs: 20 });
        let better = vec![row(5.0, 3, 100, 1.0), row(0.5, 1, 1, 0.99)];
        assert_eq!(pick_best(&better).sigma_sq, 5.0);
    }

    #[test]
    fn grid_points_and_validation() {
        let g = Grid {
            sigma_sq: vec![1.0, 2.0],
            prototypes_per_class: vec![1],
            epochs: vec![5, 10],
        };
        assert_eq!(g.len(), 4);
        assert_eq!(g.points()[1], GridPoint { sigma_sq: 1.0, xi: 1, epochs: 10 });
        let empty = Grid { sigma_sq: vec![], ..g };
        let d = data(4);
        assert!(run_cv(Method::PlrsqAn, &d, &TrainConfig::default(), &empty, 2, 0).is_err());
        let one = Grid::single(&TrainConfig::default());
        assert!(run_cv(Method::Mdrm, &d, &TrainConfig::default(), &one, 2, 0).is_err());
    }
}
