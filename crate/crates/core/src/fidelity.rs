//! Fidelity curves for attributions: keep the top features, hide the rest by
//! mean-masking or background resampling, and track the model output or
//! accuracy as more features are kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{decide, PredictFunction};
use crate::shapley::{BackgroundSet, ShapleyAttribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    KeepPositiveMask,
    KeepPositiveResample,
    KeepAbsoluteResample,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::KeepPositiveMask => "keep_positive_mask",
            MetricKind::KeepPositiveResample => "keep_positive_resample",
            MetricKind::KeepAbsoluteResample => "keep_absolute_resample",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurve {
    pub metric: MetricKind,
    pub fractions: Vec<f64>,
    pub scores: Vec<f64>,
    /// Features kept at each point; only defined for keep-absolute, where it
    /// does not depend on the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_kept: Option<Vec<usize>>,
    pub auc: f64,
}

impl FidelityCurve {
    pub fn new(metric: MetricKind, fractions: Vec<f64>, scores: Vec<f64>) -> Result<Self> {
        validate_grid(&fractions)?;
        let auc = curve_auc(&fractions, &scores)?;
        Ok(Self {
            metric,
            fractions,
            scores,
            features_kept: None,
            auc,
        })
    }

    /// Score where exactly `k` features were kept.
    pub fn score_at_count(&self, k: usize) -> Option<f64> {
        let kept = self.features_kept.as_ref()?;
        kept.iter().position(|&c| c == k).map(|i| self.scores[i])
    }

    /// `fraction,features_kept,score` records.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,features_kept,score\n");
        for (i, (f, s)) in self.fractions.iter().zip(&self.scores).enumerate() {
            let k = self.features_kept.as_ref().map_or(String::new(), |v| v[i].to_string());
            out.push_str(&format!("{f:?},{k},{s:?}\n"));
        }
        out
    }
}

/// Trapezoidal area under `scores` over `fractions`, divided by the span.
pub fn curve_auc(fractions: &[f64], scores: &[f64]) -> Result<f64> {
    if fractions.len() != scores.len() {
        return Err(Error::Dimension {
            expected: fractions.len(),
            actual: scores.len(),
            context: "curve scores",
        });
    }
    if fractions.len() < 2 {
        return Err(Error::arg("a curve needs at least 2 points"));
    }
    let span = fractions[fractions.len() - 1] - fractions[0];
    if !(span > 0.0) {
        return Err(Error::arg("curve fractions must span a positive range"));
    }
    let area: f64 = fractions
        .windows(2)
        .zip(scores.windows(2))
        .map(|(f, s)| (f[1] - f[0]) * (s[0] + s[1]) / 2.0)
        .sum();
    Ok(area / span)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::arg("a fraction grid needs at least 2 points"));
    }
    if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
        return Err(Error::arg("a fraction grid must start at 0 and end at 1"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("fraction grid must be strictly increasing"));
    }
    Ok(())
}

/// `0, 1/m, ..., 1`: one point per feature count.
pub fn default_grid(m: usize) -> Vec<f64> {
    (0..=m).map(|j| j as f64 / m as f64).collect()
}

/// `ceil(t * m)`, with slack so that `j/m` maps back to `j`.
pub fn kept_count(t: f64, m: usize) -> usize {
    ((t * m as f64 - 1e-9).ceil().max(0.0) as usize).min(m)
}

/// How hidden features are resampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Resample {
    /// Average over every background row.
    #[default]
    Full,
    /// Average over `draws` rows drawn with replacement.
    Sampled { draws: usize, seed: u64 },
}

fn players_of(a: &ShapleyAttribution, arity: usize) -> Result<Vec<Vec<usize>>> {
    let players: Vec<Vec<usize>> = match &a.grouping {
        Some(groups) => groups.iter().map(|g| g.members.clone()).collect(),
        None => (0..a.phi.len()).map(|j| vec![j]).collect(),
    };
    if players.len() != a.phi.len() {
        return Err(Error::Dimension {
            expected: players.len(),
            actual: a.phi.len(),
            context: "attribution groups",
        });
    }
    let covered: usize = players.iter().map(Vec::len).sum();
    if covered != arity || players.iter().flatten().any(|&j| j >= arity) {
        return Err(Error::Dimension {
            expected: arity,
            actual: covered,
            context: "attribution players",
        });
    }
    Ok(players)
}

/// Players by descending key, ties by ascending index.
fn ranked(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    order
}

struct Setup<'a, M: ?Sized> {
    model: &'a M,
    instances: &'a [Vec<f64>],
    attributions: &'a [ShapleyAttribution],
    players: Vec<Vec<Vec<usize>>>,
}

fn setup<'a, M: PredictFunction + ?Sized>(
    model: &'a M,
    instances: &'a [Vec<f64>],
    attributions: &'a [ShapleyAttribution],
    background: &'a BackgroundSet,
    grid: &[f64],
) -> Result<Setup<'a, M>> {
    validate_grid(grid)?;
    if instances.is_empty() {
        return Err(Error::Empty("instances"));
    }
    if instances.len() != attributions.len() {
        return Err(Error::Dimension {
            expected: instances.len(),
            actual: attributions.len(),
            context: "attributions",
        });
    }
    let p = model.arity();
    if background.arity() != p {
        return Err(Error::Dimension {
            expected: p,
            actual: background.arity(),
            context: "background",
        });
    }
    let mut players = Vec::with_capacity(instances.len());
    for (x, a) in instances.iter().zip(attributions) {
        if x.len() != p {
            return Err(Error::Dimension {
                expected: p,
                actual: x.len(),
                context: "instance",
            });
        }
        players.push(players_of(a, p)?);
    }
    Ok(Setup {
        model,
        instances,
        attributions,
        players,
    })
}

enum Hide<'a> {
    Mean(Vec<f64>),
    Resample(&'a BackgroundSet, Resample),
}

/// Mean model outputs with `keep[j]` features from `x` and the rest hidden.
fn evaluate<M: PredictFunction + ?Sized>(
    model: &M,
    x: &[f64],
    keep: &[bool],
    hide: &Hide<'_>,
    stream: u64,
) -> Vec<f64> {
    let k = model.n_outputs();
    let mut out = vec![0.0; k];
    let mut z = vec![0.0; x.len()];
    let fill = |z: &mut [f64], base: &[f64]| {
        for j in 0..x.len() {
            z[j] = if keep[j] { x[j] } else { base[j] };
        }
    };
    match hide {
        Hide::Mean(mean) => {
            fill(&mut z, mean);
            model.predict_into(&z, &mut out);
            out
        }
        Hide::Resample(bg, mode) => {
            let mut acc = vec![0.0; k];
            let mut one = |row: &[f64], acc: &mut [f64]| {
                fill(&mut z, row);
                model.predict_into(&z, &mut out);
                for (a, o) in acc.iter_mut().zip(&out) {
                    *a += o;
                }
            };
            let n = match *mode {
                Resample::Full => {
                    for row in bg.rows() {
                        one(row, &mut acc);
                    }
                    bg.len()
                }
                Resample::Sampled { draws, seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(stream);
                    let draws = draws.max(1);
                    for _ in 0..draws {
                        one(&bg.rows()[rng.gen_range(0..bg.len())], &mut acc);
                    }
                    draws
                }
            };
            acc.iter_mut().for_each(|v| *v /= n as f64);
            acc
        }
    }
}

fn for_instances<M, T, F>(model: &M, n: usize, f: F) -> Vec<T>
where
    M: PredictFunction + ?Sized,
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if model.concurrent() && n > 1 {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

fn keep_mask(players: &[Vec<usize>], chosen: &[usize], arity: usize) -> Vec<bool> {
    let mut keep = vec![false; arity];
    for &c in chosen {
        for &j in &players[c] {
            keep[j] = true;
        }
    }
    keep
}

fn keep_positive<M: PredictFunction + ?Sized>(
    s: &Setup<'_, M>,
    grid: &[f64],
    hide: &Hide<'_>,
    metric: MetricKind,
) -> Result<FidelityCurve> {
    let p = s.model.arity();
    let per_instance: Vec<Vec<f64>> = for_instances(s.model, s.instances.len(), |i| {
        let phi = &s.attributions[i].phi;
        let positive: Vec<usize> = ranked(phi).into_iter().filter(|&j| phi[j] > 0.0).collect();
        grid.iter()
            .enumerate()
            .map(|(g, &t)| {
                let k = kept_count(t, positive.len());
                let keep = keep_mask(&s.players[i], &positive[..k], p);
                evaluate(s.model, &s.instances[i], &keep, hide, (i * grid.len() + g) as u64)[0]
            })
            .collect()
    });
    let scores = (0..grid.len())
        .map(|g| per_instance.iter().map(|v| v[g]).sum::<f64>() / per_instance.len() as f64)
        .collect();
    FidelityCurve::new(metric, grid.to_vec(), scores)
}

/// Keep the most positive features, replace the rest by their background
/// mean; score is the mean model output (output 0).
pub fn keep_positive_mask<M: PredictFunction + ?Sized>(
    model: &M,
    instances: &[Vec<f64>],
    attributions: &[ShapleyAttribution],
    background: &BackgroundSet,
    grid: &[f64],
) -> Result<FidelityCurve> {
    let s = setup(model, instances, attributions, background, grid)?;
    keep_positive(
        &s,
        grid,
        &Hide::Mean(background.mean_row()),
        MetricKind::KeepPositiveMask,
    )
}

/// As [`keep_positive_mask`], hidden features resampled from the background.
pub fn keep_positive_resample<M: PredictFunction + ?Sized>(
    model: &M,
    instances: &[Vec<f64>],
    attributions: &[ShapleyAttribution],
    background: &BackgroundSet,
    grid: &[f64],
    resample: Resample,
) -> Result<FidelityCurve> {
    let s = setup(model, instances, attributions, background, grid)?;
    keep_positive(
        &s,
        grid,
        &Hide::Resample(background, resample),
        MetricKind::KeepPositiveResample,
    )
}

/// Keep the `ceil(t * M)` features with largest `|phi|`, resample the rest,
/// and score the accuracy of the decisions on the averaged outputs.
pub fn keep_absolute_resample<M: PredictFunction + ?Sized>(
    model: &M,
    instances: &[Vec<f64>],
    labels: &[usize],
    attributions: &[ShapleyAttribution],
    background: &BackgroundSet,
    grid: &[f64],
    resample: Resample,
) -> Result<FidelityCurve> {
    let s = setup(model, instances, attributions, background, grid)?;
    if labels.len() != instances.len() {
        return Err(Error::Dimension {
            expected: instances.len(),
            actual: labels.len(),
            context: "labels",
        });
    }
    let p = model.arity();
    let m = attributions[0].phi.len();
    if attributions.iter().any(|a| a.phi.len() != m) {
        return Err(Error::arg("attributions differ in length"));
    }
    let hide = Hide::Resample(background, resample);
    let kind = model.output_kind();
    let counts: Vec<usize> = grid.iter().map(|&t| kept_count(t, m)).collect();
    let hits: Vec<Vec<bool>> = for_instances(model, instances.len(), |i| {
        let abs: Vec<f64> = s.attributions[i].phi.iter().map(|v| v.abs()).collect();
        let order = ranked(&abs);
        counts
            .iter()
            .enumerate()
            .map(|(g, &k)| {
                let keep = keep_mask(&s.players[i], &order[..k], p);
                let out = evaluate(model, &instances[i], &keep, &hide, (i * grid.len() + g) as u64);
                decide(kind, &out) == labels[i]
            })
            .collect()
    });
    let scores = (0..grid.len())
        .map(|g| hits.iter().filter(|h| h[g]).count() as f64 / hits.len() as f64)
        .collect();
    let mut curve = FidelityCurve::new(MetricKind::KeepAbsoluteResample, grid.to_vec(), scores)?;
    curve.features_kept = Some(counts);
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{FnModel, OutputKind};

    fn attr(phi: Vec<f64>) -> ShapleyAttribution {
        ShapleyAttribution {
            feature_names: (0..phi.len()).map(|j| format!("x{j}")).collect(),
            phi,
            phi0: 0.0,
            prediction: 0.0,
            grouping: None,
        }
    }

    #[test]
    fn auc_basics() {
        assert_eq!(curve_auc(&[0.0, 0.5, 1.0], &[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(curve_auc(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.5);
        assert!(curve_auc(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn kept_counts() {
        assert_eq!(kept_count(0.0, 3), 0);
        assert_eq!(kept_count(1.0 / 3.0, 3), 1);
        assert_eq!(kept_count(0.01, 3), 1);
        assert_eq!(kept_count(1.0, 3), 3);
        for m in 1..40 {
            for (j, t) in default_grid(m).iter().enumerate() {
                assert_eq!(kept_count(*t, m), j);
            }
        }
    }

    #[test]
    fn keep_positive_mask_linear() {
        let f = FnModel::new(3, OutputKind::Margin, |x: &[f64]| 2.0 * x[0] + x[1] - x[2]);
        let bg = BackgroundSet::unnamed(vec![vec![0.0, 0.0, 0.0], vec![2.0, 2.0, 2.0]]).unwrap();
        let x = vec![vec![3.0, 3.0, 3.0]];
        let a = vec![attr(vec![4.0, 2.0, -2.0])];
        let c = keep_positive_mask(&f, &x, &a, &bg, &default_grid(3)).unwrap();
        // mean row (1,1,1): base 2; keeping x0 adds 4, then x1 adds 2.
        assert_eq!(c.scores, vec![2.0, 6.0, 8.0, 8.0]);
        let r = keep_positive_resample(&f, &x, &a, &bg, &default_grid(3), Resample::Full).unwrap();
        assert_eq!(r.scores, c.scores);
    }

    #[test]
    fn no_positive_attributions_stay_masked() {
        let f = FnModel::new(2, OutputKind::Margin, |x: &[f64]| x[0] + x[1]);
        let bg = BackgroundSet::unnamed(vec![vec![1.0, 1.0]]).unwrap();
        let c = keep_positive_mask(&f, &[vec![0.0, 0.0]], &[attr(vec![-1.0, -1.0])], &bg, &default_grid(2)).unwrap();
        assert_eq!(c.scores, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn keep_absolute_endpoints() {
        let f = FnModel::new(2, OutputKind::Margin, |x: &[f64]| x[0] - 0.5);
        let bg = BackgroundSet::unnamed(vec![vec![0.0, 0.0], vec![0.2, 1.0]]).unwrap();
        let x = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let a = vec![attr(vec![0.9, 0.0]), attr(vec![-0.4, 0.0])];
        let c = keep_absolute_resample(&f, &x, &[1, 0], &a, &bg, &default_grid(2), Resample::Full).unwrap();
        assert_eq!(c.scores, vec![0.5, 1.0, 1.0]);
        assert_eq!(c.score_at_count(1), Some(1.0));
        assert_eq!(c.features_kept, Some(vec![0, 1, 2]));
        assert!(c.to_csv().starts_with("fraction,features_kept,score\n0.0,0,0.5\n"));
    }

    #[test]
    fn sampled_resample_is_deterministic() {
        let f = FnModel::new(2, OutputKind::Probability, |x: &[f64]| x[0] * x[1]);
        let bg =
            BackgroundSet::unnamed((0..10).map(|i| vec![i as f64 / 10.0, 1.0 - i as f64 / 10.0]).collect()).unwrap();
        let x = vec![vec![0.9, 0.9], vec![0.1, 0.3]];
        let a = vec![attr(vec![0.3, 0.1]), attr(vec![-0.1, 0.05])];
        let mode = Resample::Sampled { draws: 4, seed: 5 };
        let c1 = keep_positive_resample(&f, &x, &a, &bg, &default_grid(2), mode).unwrap();
        let c2 = keep_positive_resample(&f, &x, &a, &bg, &default_grid(2), mode).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn arity_mismatch() {
        let f = FnModel::new(2, OutputKind::Margin, |x: &[f64]| x[0]);
        let bg = BackgroundSet::unnamed(vec![vec![0.0, 0.0]]).unwrap();
        assert!(keep_positive_mask(&f, &[vec![0.0, 0.0]], &[attr(vec![1.0])], &bg, &default_grid(2)).is_err());
    }
}
