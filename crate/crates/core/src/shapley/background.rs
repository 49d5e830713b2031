use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::BackgroundSet;
use crate::error::{Error, Result};
use crate::taxonomy::unit_interval;

/// Row indices of a class-proportional sample, ascending.
///
/// Per-class counts are `fraction * n_c` rounded by largest remainder so the
/// total is `round(fraction * n)`, then raised to at least one per class.
pub fn stratified_indices(labels: &[usize], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::OutOfRange {
            name: "fraction",
            value: fraction,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let n_classes = labels.iter().max().unwrap() + 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::arg(format!("class {c} has no rows")));
    }
    let n = labels.len() as f64;
    let total = ((fraction * n).round() as usize).max(1);
    let quotas: Vec<f64> = members.iter().map(|m| fraction * m.len() as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by(|&a, &b| {
        (quotas[b] - quotas[b].floor())
            .total_cmp(&(quotas[a] - quotas[a].floor()))
            .then(a.cmp(&b))
    });
    let mut short = total.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(n_classes * 2) {
        if short == 0 {
            break;
        }
        if counts[c] < members[c].len() {
            counts[c] += 1;
            short -= 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (m, &k) in members.iter_mut().zip(&counts) {
        let k = k.clamp(1, m.len());
        let (chosen, _) = m.partial_shuffle(&mut rng, k);
        out.extend_from_slice(chosen);
    }
    out.sort_unstable();
    Ok(out)
}

/// Background drawn by [`stratified_indices`] from `rows`.
pub fn stratified_background(
    feature_names: Vec<String>,
    rows: &[Vec<f64>],
    labels: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<BackgroundSet> {
    if rows.len() != labels.len() {
        return Err(Error::Dimension {
            expected: rows.len(),
            actual: labels.len(),
            context: "labels",
        });
    }
    let fraction = unit_interval("fraction", fraction)?;
    let idx = stratified_indices(labels, fraction, seed)?;
    let mut bg = BackgroundSet::new(feature_names, idx.iter().map(|&i| rows[i].clone()).collect())?;
    bg.strata = Some(idx.iter().map(|&i| labels[i]).collect());
    Ok(bg)
}
