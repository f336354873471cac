//! Deterministic synthetic open-set adaptation datasets.
//!
//! Known classes are Gaussian clusters around well-separated centers;
//! the target domain sees the same clusters under a fixed random
//! translation (the domain shift) plus extra clusters, far from every
//! known center, that play the role of unknown classes.
//!
//! All randomness comes from a ChaCha8 stream seeded with
//! [`SynthConfig::seed`], drawn in a fixed order (known centers, shift
//! direction, unknown centers, source samples, target known samples,
//! target unknown samples), so equal configs yield bit-identical
//! datasets.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::data::{build_label_space, FeatureMatrix, SourceDataset, TargetDataset};
use crate::error::{Error, Result};

/// Configuration of the generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    /// Number of known classes (source and target).
    pub n_known: usize,
    /// Number of unknown clusters (target only).
    pub n_unknown: usize,
    /// Feature dimensionality.
    pub dim: usize,
    /// Samples per class per domain.
    pub per_class: usize,
    /// Norm of the source-to-target translation.
    pub shift: f64,
    /// Within-cluster standard deviation per coordinate.
    pub spread: f64,
    /// Minimum distance of an unknown center from every known center.
    pub unknown_margin: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_known < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 known classes, got {}",
                self.n_known
            )));
        }
        if self.dim == 0 || self.per_class == 0 {
            return Err(Error::InvalidArgument("dim and per_class must be positive".into()));
        }
        if self.shift <= 0.0 || self.spread <= 0.0 || self.unknown_margin <= 0.0 {
            return Err(Error::InvalidArgument(
                "shift, spread and unknown_margin must be positive".into(),
            ));
        }
        if self.unknown_margin <= 2.0 * self.spread {
            return Err(Error::InvalidArgument(format!(
                "unknown_margin = {} must exceed twice the spread ({})",
                self.unknown_margin,
                2.0 * self.spread
            )));
        }
        Ok(())
    }
}

const PLACEMENT_ATTEMPTS: usize = 1000;

/// Generate one source/target dataset pair. Target ground truth uses
/// the unified unknown id (`n_known`, since known ids are
/// `0..n_known`).
pub fn generate(cfg: &SynthConfig) -> Result<(SourceDataset, TargetDataset)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let known_centers = place_centers(&mut rng, cfg.n_known, cfg.dim, |cand, placed: &[Vec<f64>]| {
        placed.iter().all(|c| dist(cand, c) >= 4.0 * cfg.spread)
    })
    .map_err(|_| {
        Error::Generation(format!(
            "could not place {} known centers at pairwise distance >= {}; \
             try a larger dim or smaller spread",
            cfg.n_known,
            4.0 * cfg.spread
        ))
    })?;

    let translation = {
        let mut v = sample_vector(&mut rng, cfg.dim);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // A standard normal vector is zero with probability zero, but a
        // seed could in principle produce a denormal-tiny norm.
        if norm < 1e-12 {
            return Err(Error::Generation("degenerate shift direction".into()));
        }
        for x in &mut v {
            *x *= cfg.shift / norm;
        }
        v
    };

    let unknown_centers =
        place_centers(&mut rng, cfg.n_unknown, cfg.dim, |cand, _placed: &[Vec<f64>]| {
            known_centers.iter().all(|c| dist(cand, c) >= cfg.unknown_margin)
        })
        .map_err(|_| {
            Error::Generation(format!(
                "could not place {} unknown centers at distance >= {} from every known center; \
                 try a larger dim",
                cfg.n_unknown, cfg.unknown_margin
            ))
        })?;

    let mut source_rows = Vec::with_capacity(cfg.n_known * cfg.per_class);
    let mut source_labels = Vec::with_capacity(cfg.n_known * cfg.per_class);
    for (c, center) in known_centers.iter().enumerate() {
        for _ in 0..cfg.per_class {
            source_rows.push(jitter(&mut rng, center, cfg.spread));
            source_labels.push(c as i64);
        }
    }

    let n_target = (cfg.n_known + cfg.n_unknown) * cfg.per_class;
    let mut target_rows = Vec::with_capacity(n_target);
    let mut target_gt = Vec::with_capacity(n_target);
    for (c, center) in known_centers.iter().enumerate() {
        let shifted: Vec<f64> = center.iter().zip(&translation).map(|(a, b)| a + b).collect();
        for _ in 0..cfg.per_class {
            target_rows.push(jitter(&mut rng, &shifted, cfg.spread));
            target_gt.push(c as i64);
        }
    }
    let unknown_id = cfg.n_known as i64;
    for center in &unknown_centers {
        for _ in 0..cfg.per_class {
            target_rows.push(jitter(&mut rng, center, cfg.spread));
            target_gt.push(unknown_id);
        }
    }

    let space = build_label_space(&source_labels)?;
    let source = SourceDataset::new(rows_to_matrix(&source_rows)?, source_labels, &space)?;
    let target = TargetDataset::new(rows_to_matrix(&target_rows)?, Some(target_gt), &space)?;
    Ok((source, target))
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<FeatureMatrix> {
    let dim = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    FeatureMatrix::from_matrix(DMatrix::from_row_slice(rows.len(), dim, &flat))
}

fn sample_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn jitter(rng: &mut ChaCha8Rng, center: &[f64], spread: f64) -> Vec<f64> {
    center
        .iter()
        .map(|&c| c + spread * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn place_centers<F>(
    rng: &mut ChaCha8Rng,
    count: usize,
    dim: usize,
    accept: F,
) -> std::result::Result<Vec<Vec<f64>>, ()>
where
    F: Fn(&[f64], &[Vec<f64>]) -> bool,
{
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let cand = sample_vector(rng, dim);
            if accept(&cand, &centers) {
                centers.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(());
        }
    }
    Ok(centers)
}
