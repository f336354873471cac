//! End-to-end driver: subspace learning on the similarity graph,
//! alternated with pseudo-label selection and rejection.
//!
//! One run executes, deterministically:
//!
//! 1. l2-normalize all features and fit PCA on the concatenated
//!    source + target matrix, transforming both domains into a common
//!    input space;
//! 2. learn an initial projection from a source-only graph (all targets
//!    uncertain);
//! 3. project everything, compute source class means, pseudo-label all
//!    targets, and seed the rejected set with the `n_r` least confident
//!    ones;
//! 4. iterate `t = 1..=T`: select the top `(t + 1) / T` fraction of each
//!    class's pseudo-labels, propagate rejections by 1-NN, rebuild the
//!    graph over source + selected + rejected, relearn the projection,
//!    re-project, recompute means and pseudo-labels;
//! 5. emit final predictions: rejected targets map to the unknown id,
//!    everything else keeps its final pseudo-label.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::{build_label_space, FeatureMatrix, SourceDataset, TargetDataset};
use crate::error::{Error, Result};
use crate::graph::{build_similarity, SimilarityGraph, TargetState};
use crate::numerics::{fit_pca, l2_normalize_rows, pca_transform, solve_gev, Projection};
use crate::pseudo::{
    class_means, propagate_rejections, pseudo_label, seed_rejections, select, selection_fraction,
};

/// Hyper-parameters of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hyperparams {
    /// PCA dimensionality applied before subspace learning.
    pub d_pca: usize,
    /// Dimensionality of the learned common subspace.
    pub d: usize,
    /// Number of selection/rejection/alignment iterations.
    pub iterations: usize,
    /// Number of initially rejected target samples.
    pub n_r: usize,
    /// Seed reserved for randomized components. The pipeline itself is
    /// deterministic; the seed is carried into reports for provenance.
    pub seed: u64,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d_pca == 0 {
            return Err(Error::InvalidArgument("d and d_pca must be positive".into()));
        }
        if self.d > self.d_pca {
            return Err(Error::InvalidArgument(format!(
                "subspace dimension d = {} exceeds d_pca = {}",
                self.d, self.d_pca
            )));
        }
        if self.iterations < 2 {
            return Err(Error::InvalidArgument(format!(
                "iteration count must be at least 2, got {}",
                self.iterations
            )));
        }
        if self.n_r == 0 {
            return Err(Error::InvalidArgument("n_r must be at least 1".into()));
        }
        Ok(())
    }
}

/// Diagnostics recorded for one loop iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iteration: usize,
    /// Selection fraction used this iteration.
    pub fraction: f64,
    /// Selected target indices per class.
    pub selected: BTreeMap<i64, Vec<usize>>,
    /// Sorted rejected target indices after propagation.
    pub rejected: Vec<usize>,
    /// Eigenvalue spectrum of the learned projection, descending.
    pub eigenvalues: Vec<f64>,
    /// Locality objective of the learned projection on this iteration's
    /// graph.
    pub objective: f64,
}

impl IterationRecord {
    pub fn selected_count(&self) -> usize {
        self.selected.values().map(Vec::len).sum()
    }

    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }
}

/// Output of a full run.
#[derive(Debug, Clone)]
pub struct OsdaResult {
    /// Predicted class id per target sample; rejected samples carry the
    /// unknown id.
    pub predictions: Vec<i64>,
    /// Final learned projection.
    pub projection: Projection,
    /// Per-iteration diagnostics.
    pub trace: Vec<IterationRecord>,
    /// Projected source + target embedding after the initial projection
    /// and after each iteration (`iterations + 1` matrices), when
    /// requested via [`RunSettings::capture_embeddings`].
    pub embeddings: Option<Vec<DMatrix<f64>>>,
}

/// Optional knobs for [`run_with_settings`].
#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    /// Keep the projected embedding of every iteration in the result.
    pub capture_embeddings: bool,
}

/// Learn a projection from the data matrix (one row per participant)
/// and its similarity graph by solving the regularized generalized
/// eigenproblem on the graph's degree and Laplacian quadratic forms.
pub fn learn_projection(
    x_all: &DMatrix<f64>,
    g: &SimilarityGraph,
    d: usize,
) -> Result<Projection> {
    let m = g.participant_count();
    if x_all.nrows() != m {
        return Err(Error::Shape(format!(
            "data matrix has {} rows but the graph has {m} participants",
            x_all.nrows()
        )));
    }
    if d > x_all.ncols() {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension d = {d} exceeds the input dimension {}",
            x_all.ncols()
        )));
    }
    if g.is_degenerate() {
        return Err(Error::InvalidArgument("no supervision in graph".into()));
    }

    // With samples as rows, the paper-orientation forms X D X^T and
    // X L X^T become F^T diag(D) F and F^T L F.
    let a = xt_d_x(x_all, g);
    let xwx = x_all.transpose() * (g.w() * x_all);
    let dim = x_all.ncols();
    let mut b = &a - xwx;
    for i in 0..dim {
        b[(i, i)] += 1.0;
    }
    solve_gev(&a, &b, d)
}

/// `F^T diag(D) F` for a row-major data matrix `F`.
fn xt_d_x(x: &DMatrix<f64>, g: &SimilarityGraph) -> DMatrix<f64> {
    let mut scaled = x.clone();
    for i in 0..scaled.nrows() {
        let w = g.degrees()[i];
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= w;
        }
    }
    x.transpose() * scaled
}

/// Locality objective: the weighted sum of squared projected pairwise
/// distances, evaluated through the Laplacian quadratic form
/// `2 tr(P^T X L X^T P)`.
pub fn objective_value(p: &Projection, x_all: &DMatrix<f64>, g: &SimilarityGraph) -> f64 {
    assert_eq!(
        x_all.nrows(),
        g.participant_count(),
        "data matrix and graph participant counts must agree"
    );
    assert_eq!(x_all.ncols(), p.dim_in(), "projection input dimension mismatch");
    let z = p.project_rows(x_all);
    // tr(Z^T L Z) = sum_i D_i ||z_i||^2 - sum_ij W_ij <z_i, z_j>.
    let mut degree_term = 0.0;
    for i in 0..z.nrows() {
        let mut sq = 0.0;
        for j in 0..z.ncols() {
            sq += z[(i, j)] * z[(i, j)];
        }
        degree_term += g.degrees()[i] * sq;
    }
    let wz = g.w() * &z;
    let mut adjacency_term = 0.0;
    for j in 0..z.ncols() {
        for i in 0..z.nrows() {
            adjacency_term += z[(i, j)] * wz[(i, j)];
        }
    }
    2.0 * (degree_term - adjacency_term)
}

/// Run the full pipeline with default settings.
pub fn run(source: &SourceDataset, target: &TargetDataset, hp: &Hyperparams) -> Result<OsdaResult> {
    run_with_settings(source, target, hp, &RunSettings::default())
}

/// Run the full pipeline.
pub fn run_with_settings(
    source: &SourceDataset,
    target: &TargetDataset,
    hp: &Hyperparams,
    settings: &RunSettings,
) -> Result<OsdaResult> {
    hp.validate()?;
    if source.features().cols() != target.features().cols() {
        return Err(Error::Shape(format!(
            "source features have {} columns, target features {}",
            source.features().cols(),
            target.features().cols()
        )));
    }
    let space = build_label_space(source.labels())?;
    let n_s = source.len();
    let n_t = target.len();
    if n_t == 0 {
        return Err(Error::Validation("target dataset is empty".into()));
    }

    // Normalize, then reduce source and target jointly so both domains
    // share one input space.
    let xs = l2_normalize_rows(source.features());
    let xt = l2_normalize_rows(target.features());
    let d0 = xs.cols();
    let mut all = DMatrix::zeros(n_s + n_t, d0);
    all.rows_mut(0, n_s).copy_from(xs.matrix());
    all.rows_mut(n_s, n_t).copy_from(xt.matrix());
    let all = FeatureMatrix::from_matrix(all).expect("normalized features are finite");
    let pca = fit_pca(&all, hp.d_pca)?;
    let x_pca = pca_transform(&pca, &all)?.into_matrix();

    // Initial projection from the source-only graph.
    let uncertain = vec![TargetState::Uncertain; n_t];
    let g0 = build_similarity(source.labels(), &uncertain)?;
    let mut projection = learn_projection(&x_pca, &g0, hp.d)?;
    let mut z = projection.project_rows(&x_pca);
    let mut embeddings = settings.capture_embeddings.then(Vec::new);
    if let Some(e) = embeddings.as_mut() {
        e.push(z.clone());
    }

    let mut means = class_means(&z.rows(0, n_s).into_owned(), source.labels(), &space)?;
    let mut labeling = pseudo_label(&z.rows(n_s, n_t).into_owned(), &means)?;
    let mut rejected = seed_rejections(&labeling, hp.n_r)?;

    let total = hp.iterations;
    let mut trace = Vec::with_capacity(total);
    for t in 1..=total {
        let selected = select(&labeling, &rejected, t, total);
        let selected_set: BTreeSet<usize> = selected.values().flatten().copied().collect();
        debug_assert!(selected_set.is_disjoint(&rejected));

        let z_target = z.rows(n_s, n_t).into_owned();
        rejected = propagate_rejections(&z_target, &selected_set, &rejected);
        if rejected.len() == n_t && t < total {
            return Err(Error::Validation(format!(
                "every target sample was rejected at iteration {t} of {total}; \
                 reduce n_r or the iteration count"
            )));
        }

        let states: Vec<TargetState> = (0..n_t)
            .map(|i| {
                if rejected.contains(&i) {
                    TargetState::Rejected
                } else if selected_set.contains(&i) {
                    TargetState::Selected(labeling.labels()[i])
                } else {
                    TargetState::Uncertain
                }
            })
            .collect();
        let g = build_similarity(source.labels(), &states)?;
        projection = learn_projection(&x_pca, &g, hp.d)?;
        z = projection.project_rows(&x_pca);
        if let Some(e) = embeddings.as_mut() {
            e.push(z.clone());
        }

        means = class_means(&z.rows(0, n_s).into_owned(), source.labels(), &space)?;
        labeling = pseudo_label(&z.rows(n_s, n_t).into_owned(), &means)?;

        let record = IterationRecord {
            iteration: t,
            fraction: selection_fraction(t, total),
            selected,
            rejected: rejected.iter().copied().collect(),
            eigenvalues: projection.eigenvalues().to_vec(),
            objective: objective_value(&projection, &x_pca, &g),
        };
        log::debug!(
            "iteration {t}/{total}: selected {}, rejected {}, objective {:.6}",
            record.selected_count(),
            record.rejected_count(),
            record.objective
        );
        trace.push(record);
    }

    let predictions: Vec<i64> = (0..n_t)
        .map(|i| {
            if rejected.contains(&i) {
                space.unknown_id()
            } else {
                labeling.labels()[i]
            }
        })
        .collect();

    Ok(OsdaResult {
        predictions,
        projection,
        trace,
        embeddings,
    })
}
