//! Label-driven similarity graph over source and target samples.
//!
//! Participants are ordered source rows first, then target rows. Each
//! participant has an *effective label*: a source sample uses its ground
//! truth, a selected target uses its pseudo-label, and a rejected target
//! belongs to one unified unknown pseudo-class. Uncertain targets have
//! no effective label. Two participants are connected with weight 1
//! exactly when both have effective labels and the labels are equal;
//! labelled participants also carry a self-loop. Rows and columns of
//! uncertain samples are therefore identically zero and those samples
//! are inert in every derived quantity.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Decision state of a target sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetState {
    /// Not yet selected or rejected; carries no supervision.
    Uncertain,
    /// Confidently pseudo-labelled as the given known class.
    Selected(i64),
    /// Assigned to the unified unknown class.
    Rejected,
}

/// Effective label of a graph participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EffectiveLabel {
    Class(i64),
    Unknown,
}

/// Binary similarity matrix `W` plus the degree vector `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    w: DMatrix<f64>,
    degrees: DVector<f64>,
}

/// Build the similarity graph from source labels and target states.
///
/// Fails if a `Selected` class id does not occur among the source
/// labels.
pub fn build_similarity(
    source_labels: &[i64],
    target_states: &[TargetState],
) -> Result<SimilarityGraph> {
    if source_labels.is_empty() {
        return Err(Error::InvalidArgument(
            "similarity graph needs at least one source sample".into(),
        ));
    }
    let known: BTreeSet<i64> = source_labels.iter().copied().collect();
    for (i, st) in target_states.iter().enumerate() {
        if let TargetState::Selected(c) = st {
            if !known.contains(c) {
                return Err(Error::InvalidArgument(format!(
                    "target {i} selected as class {c}, which is not a known source class"
                )));
            }
        }
    }

    let n_s = source_labels.len();
    let m = n_s + target_states.len();
    let mut eff: Vec<Option<EffectiveLabel>> = Vec::with_capacity(m);
    eff.extend(source_labels.iter().map(|&c| Some(EffectiveLabel::Class(c))));
    eff.extend(target_states.iter().map(|st| match st {
        TargetState::Uncertain => None,
        TargetState::Selected(c) => Some(EffectiveLabel::Class(*c)),
        TargetState::Rejected => Some(EffectiveLabel::Unknown),
    }));

    let mut w = DMatrix::zeros(m, m);
    for j in 0..m {
        if let Some(lj) = eff[j] {
            for i in 0..m {
                if eff[i] == Some(lj) {
                    w[(i, j)] = 1.0;
                }
            }
        }
    }

    // Degree of a labelled participant is the size of its effective
    // class (self-loop included); uncertain samples have degree zero.
    let mut class_sizes: BTreeMap<i64, f64> = BTreeMap::new();
    let mut unknown_size = 0.0;
    for l in eff.iter().flatten() {
        match l {
            EffectiveLabel::Class(c) => *class_sizes.entry(*c).or_insert(0.0) += 1.0,
            EffectiveLabel::Unknown => unknown_size += 1.0,
        }
    }
    let degrees = DVector::from_fn(m, |i, _| match eff[i] {
        Some(EffectiveLabel::Class(c)) => class_sizes[&c],
        Some(EffectiveLabel::Unknown) => unknown_size,
        None => 0.0,
    });

    Ok(SimilarityGraph { w, degrees })
}

impl SimilarityGraph {
    /// Wrap an explicit symmetric 0/1 matrix. Mostly useful for tests
    /// and for driving the projection machinery with hand-built graphs.
    pub fn from_matrix(w: DMatrix<f64>) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::Shape(format!(
                "similarity matrix must be square, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                let v = w[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Validation(format!(
                        "similarity entries must be 0 or 1, found {v} at ({i},{j})"
                    )));
                }
                if w[(i, j)] != w[(j, i)] {
                    return Err(Error::Validation(format!(
                        "similarity matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let degrees = DVector::from_fn(w.nrows(), |i, _| w.row(i).sum());
        Ok(Self { w, degrees })
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Row sums of `W`.
    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn participant_count(&self) -> usize {
        self.w.nrows()
    }

    /// True when the graph carries no supervision at all (`W` is zero).
    pub fn is_degenerate(&self) -> bool {
        self.degrees.iter().all(|&d| d == 0.0)
    }
}

/// Graph Laplacian `L = diag(D) - W`.
pub fn laplacian(g: &SimilarityGraph) -> DMatrix<f64> {
    let mut l = -g.w.clone();
    for i in 0..l.nrows() {
        l[(i, i)] += g.degrees[i];
    }
    l
}
