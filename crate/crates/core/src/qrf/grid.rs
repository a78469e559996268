//! Hyperparameter grid search scored on a validation block.
//!
//! Every combination of the grid is fitted on the training block with the
//! same base seed and scored on the validation block. The leaderboard is
//! sorted by validation RMSE (combination order breaks exact ties); the
//! winning combination is the first entry.

use serde::{Deserialize, Serialize};

use super::{Hyperparameters, PredictionInterval, QrfError, QrfModel, WeightBasis};
use crate::event_log::Dataset;
use crate::metrics::{interval_metrics, point_metrics, MetricsError};

/// Candidate values per hyperparameter; the search covers their Cartesian
/// product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub mtry: Vec<usize>,
    pub trees: Vec<usize>,
    pub min_n: Vec<usize>,
}

impl GridSpec {
    pub fn n_combinations(&self) -> usize {
        self.mtry.len() * self.trees.len() * self.min_n.len()
    }
}

/// Validation scores of one hyperparameter combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub mtry: usize,
    pub trees: usize,
    pub min_n: usize,
    pub rmse: f64,
    pub mae: f64,
    pub picp: f64,
    pub mpiw: f64,
    /// Absent when no validation instance had a usable point prediction.
    pub mrpiw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: Hyperparameters,
    pub leaderboard: Vec<LeaderboardEntry>,
}

/// Fits and scores every combination of `grid` and ranks them by validation
/// RMSE. All fits share `seed` and `basis`, so combinations differ only in
/// their hyperparameters.
pub fn grid_search(
    train: &Dataset,
    validation: &Dataset,
    grid: &GridSpec,
    level: f64,
    epsilon: f64,
    basis: WeightBasis,
    seed: u64,
) -> Result<GridSearchResult, QrfError> {
    if grid.mtry.is_empty() || grid.trees.is_empty() || grid.min_n.is_empty() {
        return Err(QrfError::EmptyGrid);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(QrfError::InvalidLevel(level));
    }
    if train.is_empty() || validation.is_empty() {
        return Err(QrfError::EmptyDataset);
    }

    let actual = validation.targets();
    let mut leaderboard = Vec::with_capacity(grid.n_combinations());
    for &mtry in &grid.mtry {
        for &trees in &grid.trees {
            for &min_n in &grid.min_n {
                let hp = Hyperparameters {
                    trees,
                    mtry,
                    min_n,
                    seed,
                    weight_basis: basis,
                };
                let model = QrfModel::fit(train, hp)?;
                let intervals: Vec<PredictionInterval> = validation
                    .instances
                    .iter()
                    .map(|inst| model.predict_interval(inst.features.as_slice(), level))
                    .collect::<Result<_, _>>()?;
                let points: Vec<f64> = intervals.iter().map(|iv| iv.point).collect();
                let pm = point_metrics(&actual, &points)?;
                let (picp, mpiw, mrpiw) = match interval_metrics(&actual, &intervals, epsilon) {
                    Ok(im) => (im.picp, im.mpiw, Some(im.mrpiw)),
                    Err(MetricsError::AllExcluded) => {
                        let n = actual.len() as f64;
                        let covered = actual
                            .iter()
                            .zip(&intervals)
                            .filter(|(a, iv)| **a >= iv.lower && **a <= iv.upper)
                            .count();
                        let width_sum: f64 = intervals.iter().map(|iv| iv.width()).sum();
                        (covered as f64 / n, width_sum / n, None)
                    }
                    Err(e) => return Err(e.into()),
                };
                leaderboard.push(LeaderboardEntry {
                    mtry: hp.mtry,
                    trees,
                    min_n,
                    rmse: pm.rmse,
                    mae: pm.mae,
                    picp,
                    mpiw,
                    mrpiw,
                });
            }
        }
    }

    leaderboard.sort_by(|a, b| {
        a.rmse
            .total_cmp(&b.rmse)
            .then(a.mtry.cmp(&b.mtry))
            .then(a.trees.cmp(&b.trees))
            .then(a.min_n.cmp(&b.min_n))
    });
    let top = &leaderboard[0];
    Ok(GridSearchResult {
        best: Hyperparameters {
            trees: top.trees,
            mtry: top.mtry,
            min_n: top.min_n,
            seed,
            weight_basis: basis,
        },
        leaderboard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn blocks(seed: u64) -> (Dataset, Dataset) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let make = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let ys: Vec<f64> = rows
                .iter()
                .map(|r| 2.0 * r[0] + rng.gen_range(0.0..1.0))
                .collect();
            Dataset::from_numeric_matrix(&rows, &ys).unwrap()
        };
        (make(&mut rng, 80), make(&mut rng, 30))
    }

    #[test]
    fn leaderboard_covers_the_whole_grid_sorted_by_rmse() {
        let (train, val) = blocks(1);
        let grid = GridSpec {
            mtry: vec![1, 2],
            trees: vec![2, 5],
            min_n: vec![5, 10, 20],
        };
        let result = grid_search(&train, &val, &grid, 0.9, 1e-6, WeightBasis::default(), 7).unwrap();
        assert_eq!(result.leaderboard.len(), 12);
        assert!(result
            .leaderboard
            .windows(2)
            .all(|w| w[0].rmse <= w[1].rmse));
        assert_eq!(result.best.seed, 7);
        let top = &result.leaderboard[0];
        assert_eq!(
            (result.best.mtry, result.best.trees, result.best.min_n),
            (top.mtry, top.trees, top.min_n)
        );
    }

    #[test]
    fn single_combination_grids_work() {
        let (train, val) = blocks(2);
        let grid = GridSpec {
            mtry: vec![2],
            trees: vec![3],
            min_n: vec![8],
        };
        let result = grid_search(&train, &val, &grid, 0.9, 1e-6, WeightBasis::default(), 3).unwrap();
        assert_eq!(result.leaderboard.len(), 1);
        assert_eq!(result.best.trees, 3);
        assert!(result.leaderboard[0].mrpiw.is_some());
    }

    #[test]
    fn empty_grid_dimensions_are_rejected() {
        let (train, val) = blocks(3);
        let grid = GridSpec {
            mtry: vec![],
            trees: vec![2],
            min_n: vec![5],
        };
        assert!(matches!(
            grid_search(&train, &val, &grid, 0.9, 1e-6, WeightBasis::default(), 0),
            Err(QrfError::EmptyGrid)
        ));
    }

    #[test]
    fn search_is_deterministic() {
        let (train, val) = blocks(4);
        let grid = GridSpec {
            mtry: vec![1, 2],
            trees: vec![2],
            min_n: vec![5, 9],
        };
        let a = grid_search(&train, &val, &grid, 0.9, 1e-6, WeightBasis::default(), 11).unwrap();
        let b = grid_search(&train, &val, &grid, 0.9, 1e-6, WeightBasis::default(), 11).unwrap();
        assert_eq!(a, b);
    }
}
