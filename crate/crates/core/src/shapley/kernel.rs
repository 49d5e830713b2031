use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    assemble, singleton_players, BackgroundSet, Budget, Game, KernelShapConfig, Partition, ShapleyAttribution,
};
use crate::error::{Error, Result};
use crate::models::PredictFunction;

/// Largest player count the coalition bitmasks support.
pub const KERNEL_LIMIT: usize = 62;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(M - 1) / (C(M, s) * s * (M - s))`, for `0 < s < M`.
pub fn shapley_kernel_weight(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64)
}

struct Design {
    masks: Vec<u64>,
    weights: Vec<f64>,
}

fn enumerate_size(m: usize, s: usize, out: &mut Vec<u64>) {
    // Gosper's hack over all m-bit masks with s bits set.
    let mut mask: u64 = (1u64 << s) - 1;
    let limit = 1u64 << m;
    while mask < limit {
        out.push(mask);
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
}

/// Coalitions and regression weights. Size pairs `(s, M - s)` are enumerated
/// completely from the outside in while they fit the budget; the rest of the
/// budget is drawn without replacement in complement pairs, sizes in
/// proportion to their kernel mass, and shares that mass evenly.
fn design(m: usize, budget: Budget, seed: u64) -> Design {
    let total = (1u64 << m) - 2;
    let budget = match budget {
        Budget::Full => total,
        Budget::Samples(n) => (n as u64).min(total),
    };
    let mut masks = Vec::new();
    let mut weights = Vec::new();
    let mut remaining = budget;
    let mut s = 1;
    while s <= m / 2 {
        let paired = s != m - s;
        let count = binomial(m, s) as u64 * if paired { 2 } else { 1 };
        if count > remaining {
            break;
        }
        let w = shapley_kernel_weight(m, s);
        let start = masks.len();
        enumerate_size(m, s, &mut masks);
        if paired {
            enumerate_size(m, m - s, &mut masks);
        }
        weights.resize(masks.len(), w);
        debug_assert_eq!((masks.len() - start) as u64, count);
        remaining -= count;
        s += 1;
    }
    if s <= m / 2 && remaining >= 2 {
        let sizes: Vec<usize> = (s..=m - s).collect();
        let mass: Vec<f64> = sizes
            .iter()
            .map(|&k| binomial(m, k) * shapley_kernel_weight(m, k))
            .collect();
        let total_mass: f64 = mass.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let full = (1u64 << m) - 1;
        let mut seen: HashSet<u64> = HashSet::new();
        let mut drawn = Vec::new();
        let max_attempts = 100 * remaining as usize + 1000;
        let mut attempts = 0;
        while (drawn.len() as u64) + 2 <= remaining && attempts < max_attempts {
            attempts += 1;
            let mut u = rng.gen::<f64>() * total_mass;
            let mut k = sizes[sizes.len() - 1];
            for (&size, &w) in sizes.iter().zip(&mass) {
                if u < w {
                    k = size;
                    break;
                }
                u -= w;
            }
            let mask = sample(&mut rng, m, k).iter().fold(0u64, |acc, j| acc | 1 << j);
            let comp = full ^ mask;
            if seen.contains(&mask) {
                continue;
            }
            seen.insert(mask);
            drawn.push(mask);
            if comp != mask && seen.insert(comp) {
                drawn.push(comp);
            }
        }
        if !drawn.is_empty() {
            let w = total_mass / drawn.len() as f64;
            weights.extend(std::iter::repeat_n(w, drawn.len()));
            masks.extend(drawn);
        }
    }
    Design { masks, weights }
}

/// Weighted least squares under `sum(phi) = delta`, eliminating the last
/// player. `targets[o][i]` is `v(S_i) - phi0_o`.
fn solve(m: usize, d: &Design, targets: &[Vec<f64>], delta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = d.masks.len();
    let q = m - 1;
    let x = DMatrix::from_fn(n, q, |i, j| {
        let mask = d.masks[i];
        (mask >> j & 1) as f64 - (mask >> (m - 1) & 1) as f64
    });
    let mut xtw = x.transpose();
    for (i, w) in d.weights.iter().enumerate() {
        xtw.column_mut(i).scale_mut(*w);
    }
    let a = &xtw * &x;
    let mut out = Vec::with_capacity(targets.len());
    let chol = a.clone().cholesky();
    let svd = if chol.is_none() {
        let svd = a.clone().svd(true, true);
        let tol = svd.singular_values.max() * q as f64 * f64::EPSILON * 1e3;
        let rank = svd.rank(tol);
        if rank < q {
            return Err(Error::RankDeficient { rank, size: q });
        }
        Some((svd, tol))
    } else {
        None
    };
    for (t, &dl) in targets.iter().zip(delta) {
        let rhs_vec = DVector::from_fn(n, |i, _| t[i] - ((d.masks[i] >> (m - 1)) & 1) as f64 * dl);
        let rhs = &xtw * rhs_vec;
        let beta = match (&chol, &svd) {
            (Some(c), _) => c.solve(&rhs),
            (None, Some((s, tol))) => s.solve(&rhs, *tol).map_err(|e| Error::Model(e.to_string()))?,
            _ => unreachable!(),
        };
        let mut phi: Vec<f64> = beta.iter().copied().collect();
        phi.push(dl - phi.iter().sum::<f64>());
        out.push(phi);
    }
    Ok(out)
}

fn kernel_game<M: PredictFunction + ?Sized>(
    game: &Game<'_, M>,
    config: &KernelShapConfig,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    let m = game.n_players();
    if m == 0 {
        return Err(Error::Empty("players"));
    }
    if m > KERNEL_LIMIT {
        return Err(Error::TooManyFeatures {
            features: m,
            limit: KERNEL_LIMIT,
        });
    }
    if let Budget::Samples(n) = config.budget {
        if n < 2 {
            return Err(Error::arg("KernelSHAP needs a budget of at least 2 coalitions"));
        }
    }
    let phi0 = game.phi0();
    let prediction = game.prediction();
    let delta: Vec<f64> = prediction.iter().zip(&phi0).map(|(f, b)| f - b).collect();
    if m == 1 {
        return Ok((delta.iter().map(|d| vec![*d]).collect(), phi0, prediction));
    }
    let d = design(m, config.budget, config.seed);
    let values = game.values(&d.masks);
    let targets: Vec<Vec<f64>> = (0..phi0.len())
        .map(|o| values.iter().map(|v| v[o] - phi0[o]).collect())
        .collect();
    let phi = solve(m, &d, &targets, &delta)?;
    Ok((phi, phi0, prediction))
}

/// KernelSHAP with one attribution per model output.
pub fn kernel_shap_outputs<M: PredictFunction + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &BackgroundSet,
    config: &KernelShapConfig,
) -> Result<Vec<ShapleyAttribution>> {
    let game = Game::new(
        model,
        instance,
        background,
        singleton_players(model.arity()),
        config.imputation,
        config.seed,
    )?;
    let (phi, phi0, prediction) = kernel_game(&game, config)?;
    Ok(assemble(background.feature_names.clone(), phi, phi0, prediction, None))
}

/// KernelSHAP attribution of a single-output model.
pub fn kernel_shap<M: PredictFunction + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &BackgroundSet,
    config: &KernelShapConfig,
) -> Result<ShapleyAttribution> {
    Ok(kernel_shap_outputs(model, instance, background, config)?.swap_remove(0))
}

/// KernelSHAP with one player per group of `partition`; output 0 is
/// explained.
pub fn grouped_shap<M: PredictFunction + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &BackgroundSet,
    partition: &Partition,
    config: &KernelShapConfig,
) -> Result<ShapleyAttribution> {
    if partition.arity() != model.arity() {
        return Err(Error::Dimension {
            expected: model.arity(),
            actual: partition.arity(),
            context: "partition",
        });
    }
    let players = partition.groups().iter().map(|g| g.members.clone()).collect();
    let game = Game::new(model, instance, background, players, config.imputation, config.seed)?;
    let (phi, phi0, prediction) = kernel_game(&game, config)?;
    let grouping = (!partition.is_trivial()).then(|| partition.groups().to_vec());
    Ok(assemble(partition.names(), phi, phi0, prediction, grouping).swap_remove(0))
}
