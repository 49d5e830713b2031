use super::{assemble, singleton_players, BackgroundSet, Game, Imputation, Partition, ShapleyAttribution};
use crate::error::{Error, Result};
use crate::models::PredictFunction;

/// Largest player count accepted for enumeration.
pub const EXACT_LIMIT: usize = 15;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn exact_game<M: PredictFunction + ?Sized>(game: &Game<'_, M>) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    let p = game.n_players();
    if p > EXACT_LIMIT {
        return Err(Error::TooManyFeatures {
            features: p,
            limit: EXACT_LIMIT,
        });
    }
    let k = game.n_outputs();
    let masks: Vec<u64> = (0..1u64 << p).collect();
    let values = game.values(&masks);
    // |S|!(p-|S|-1)!/p! = 1 / (p * C(p-1, |S|))
    let weights: Vec<f64> = (0..p).map(|s| 1.0 / (p as f64 * binomial(p - 1, s))).collect();
    let mut phi = vec![vec![0.0; p]; k];
    for (mask, v) in values.iter().enumerate() {
        let size = (mask as u64).count_ones() as usize;
        for j in 0..p {
            if mask >> j & 1 == 0 {
                let with = &values[mask | 1 << j];
                for o in 0..k {
                    phi[o][j] += weights[size] * (with[o] - v[o]);
                }
            }
        }
    }
    Ok((phi, values[0].clone(), values[(1 << p) - 1].clone()))
}

/// Shapley values by enumerating every coalition, one attribution per model
/// output.
pub fn exact_shapley_outputs<M: PredictFunction + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &BackgroundSet,
) -> Result<Vec<ShapleyAttribution>> {
    let game = Game::new(
        model,
        instance,
        background,
        singleton_players(model.arity()),
        Imputation::BackgroundMean,
        0,
    )?;
    let (phi, phi0, prediction) = exact_game(&game)?;
    Ok(assemble(background.feature_names.clone(), phi, phi0, prediction, None))
}

/// Exact Shapley values of a single-output model.
pub fn exact_shapley<M: PredictFunction + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &BackgroundSet,
) -> Result<ShapleyAttribution> {
    Ok(exact_shapley_outputs(model, instance, background)?.swap_remove(0))
}

/// Exact values over a partition of the features (one player per group).
pub fn exact_shapley_grouped<M: PredictFunction + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &BackgroundSet,
    partition: &Partition,
) -> Result<ShapleyAttribution> {
    if partition.arity() != model.arity() {
        return Err(Error::Dimension {
            expected: model.arity(),
            actual: partition.arity(),
            context: "partition",
        });
    }
    let players = partition.groups().iter().map(|g| g.members.clone()).collect();
    let game = Game::new(model, instance, background, players, Imputation::BackgroundMean, 0)?;
    let (phi, phi0, prediction) = exact_game(&game)?;
    Ok(assemble(
        partition.names(),
        phi,
        phi0,
        prediction,
        Some(partition.groups().to_vec()),
    )
    .swap_remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{FnModel, OutputKind};

    #[test]
    fn one_feature() {
        let f = FnModel::new(1, OutputKind::Margin, |x: &[f64]| x[0] * x[0]);
        let bg = BackgroundSet::unnamed(vec![vec![1.0], vec![3.0]]).unwrap();
        let a = exact_shapley(&f, &[2.0], &bg).unwrap();
        assert_eq!(a.phi0, 5.0);
        assert_eq!(a.phi, vec![-1.0]);
    }

    #[test]
    fn interaction_split_evenly() {
        let f = FnModel::new(2, OutputKind::Margin, |x: &[f64]| x[0] * x[1]);
        let bg = BackgroundSet::unnamed(vec![vec![0.0, 0.0]]).unwrap();
        let a = exact_shapley(&f, &[1.0, 1.0], &bg).unwrap();
        assert_eq!(a.phi, vec![0.5, 0.5]);
    }

    #[test]
    fn guard() {
        let f = FnModel::new(16, OutputKind::Margin, |x: &[f64]| x[0]);
        let bg = BackgroundSet::unnamed(vec![vec![0.0; 16]]).unwrap();
        assert!(matches!(
            exact_shapley(&f, &[0.0; 16], &bg),
            Err(Error::TooManyFeatures { features: 16, .. })
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(14, 0), 1.0);
        assert_eq!(binomial(14, 14), 1.0);
    }
}
