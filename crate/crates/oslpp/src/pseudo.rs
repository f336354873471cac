//! Nearest-class-mean pseudo-labelling, the progressive selection
//! schedule, and unknown-class rejection (seeding plus 1-NN
//! propagation).
//!
//! All ties break toward the smaller index or class id, which makes
//! every operation here deterministic.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::data::LabelSpace;
use crate::error::{Error, Result};
use crate::numerics::pairwise_sq_dists;
use crate::par;

/// Per-class means of projected source samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeans {
    classes: Vec<i64>,
    means: DMatrix<f64>,
    counts: Vec<usize>,
}

impl ClassMeans {
    /// Known class ids, in the order of the rows of [`Self::means`].
    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    /// `C x d` matrix, one mean per row.
    pub fn means(&self) -> &DMatrix<f64> {
        &self.means
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// Pseudo-labels with class probabilities for every target sample.
///
/// `probs` has one row per target and one column per known class (in
/// [`Self::classes`] order); each row sums to 1. `labels[i]` is the
/// class of the most probable column and `top_prob[i]` its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabeling {
    classes: Vec<i64>,
    labels: Vec<i64>,
    probs: DMatrix<f64>,
    top_prob: Vec<f64>,
}

impl PseudoLabeling {
    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn top_prob(&self) -> &[f64] {
        &self.top_prob
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Arithmetic mean of the source rows of each known class.
///
/// Fails if some known class has no sample in `labels`.
pub fn class_means(
    z_source: &DMatrix<f64>,
    labels: &[i64],
    space: &LabelSpace,
) -> Result<ClassMeans> {
    if labels.len() != z_source.nrows() {
        return Err(Error::Shape(format!(
            "{} labels for {} source rows",
            labels.len(),
            z_source.nrows()
        )));
    }
    let classes: Vec<i64> = space.known_classes().to_vec();
    let d = z_source.ncols();
    let mut means = DMatrix::zeros(classes.len(), d);
    let mut counts = vec![0usize; classes.len()];
    for (i, &l) in labels.iter().enumerate() {
        let Some(c) = space.index_of(l) else {
            return Err(Error::Validation(format!(
                "source label {l} at row {i} is not in the label space"
            )));
        };
        counts[c] += 1;
        for j in 0..d {
            means[(c, j)] += z_source[(i, j)];
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            return Err(Error::InvalidArgument(format!(
                "known class {} has no source samples to average",
                classes[c]
            )));
        }
        for j in 0..d {
            means[(c, j)] /= count as f64;
        }
    }
    Ok(ClassMeans { classes, means, counts })
}

/// Pseudo-label every target row by its nearest class mean.
///
/// Probabilities are a softmax over negated Euclidean distances,
/// computed stably by shifting by the minimum distance. Argmin ties
/// break toward the smaller class id.
pub fn pseudo_label(z_target: &DMatrix<f64>, means: &ClassMeans) -> Result<PseudoLabeling> {
    let sq = pairwise_sq_dists(z_target, means.means())?;
    let n = z_target.nrows();
    let c = means.classes().len();
    let per_row = par::map_indexed(n, |i| {
        let dists: Vec<f64> = (0..c).map(|k| sq[(i, k)].sqrt()).collect();
        row_label_probs(&dists)
    });

    let mut labels = Vec::with_capacity(n);
    let mut top_prob = Vec::with_capacity(n);
    let mut flat = Vec::with_capacity(n * c);
    for (best, probs) in per_row {
        labels.push(means.classes()[best]);
        top_prob.push(probs[best]);
        flat.extend_from_slice(&probs);
    }
    Ok(PseudoLabeling {
        classes: means.classes().to_vec(),
        labels,
        probs: DMatrix::from_row_slice(n, c, &flat),
        top_prob,
    })
}

/// Sequential reference implementation of [`pseudo_label`];
/// bit-identical to the parallel path.
pub fn pseudo_label_seq(z_target: &DMatrix<f64>, means: &ClassMeans) -> Result<PseudoLabeling> {
    let sq = crate::numerics::pairwise_sq_dists_seq(z_target, means.means())?;
    let n = z_target.nrows();
    let c = means.classes().len();
    let mut labels = Vec::with_capacity(n);
    let mut top_prob = Vec::with_capacity(n);
    let mut flat = Vec::with_capacity(n * c);
    for i in 0..n {
        let dists: Vec<f64> = (0..c).map(|k| sq[(i, k)].sqrt()).collect();
        let (best, probs) = row_label_probs(&dists);
        labels.push(means.classes()[best]);
        top_prob.push(probs[best]);
        flat.extend_from_slice(&probs);
    }
    Ok(PseudoLabeling {
        classes: means.classes().to_vec(),
        labels,
        probs: DMatrix::from_row_slice(n, c, &flat),
        top_prob,
    })
}

/// Argmin index and stable softmax of negated distances for one sample.
fn row_label_probs(dists: &[f64]) -> (usize, Vec<f64>) {
    let mut best = 0;
    for (k, &d) in dists.iter().enumerate() {
        if d < dists[best] {
            best = k;
        }
    }
    let shift = dists[best];
    let mut probs: Vec<f64> = dists.iter().map(|&d| (-(d - shift)).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    (best, probs)
}

/// Fraction of pseudo-labelled samples to keep at iteration `t` of
/// `total`: `min(1, (t + 1) / total)`.
pub fn selection_fraction(t: usize, total: usize) -> f64 {
    assert!(total >= 2, "iteration count must be at least 2");
    assert!(t >= 1 && t <= total, "iteration index {t} outside 1..={total}");
    (((t + 1) as f64) / (total as f64)).min(1.0)
}

/// Select, per known class, the most confident non-rejected targets
/// pseudo-labelled as that class.
///
/// For a class with `n_c` candidates the selection keeps
/// `ceil(min(1, (t + 1) / total) * n_c)` of them, ranked by class
/// probability (descending, ties toward the smaller index). Selection
/// is recomputed from scratch each iteration.
pub fn select(
    pl: &PseudoLabeling,
    rejected: &BTreeSet<usize>,
    t: usize,
    total: usize,
) -> BTreeMap<i64, Vec<usize>> {
    // Fraction is computed in exact integer arithmetic to keep the
    // per-class count an exact ceiling: ceil((t + 1) * n_c / total).
    let _ = selection_fraction(t, total); // validates t, total
    let numer = (t + 1).min(total);

    let mut by_class: BTreeMap<i64, Vec<usize>> =
        pl.classes().iter().map(|&c| (c, Vec::new())).collect();
    for (i, &l) in pl.labels().iter().enumerate() {
        if !rejected.contains(&i) {
            by_class.get_mut(&l).expect("label from classes").push(i);
        }
    }

    let class_col: BTreeMap<i64, usize> =
        pl.classes().iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let mut out = BTreeMap::new();
    for (c, mut candidates) in by_class {
        let n_c = candidates.len();
        let keep = div_ceil(numer * n_c, total).min(n_c);
        let col = class_col[&c];
        candidates.sort_by(|&a, &b| {
            pl.probs()[(b, col)]
                .partial_cmp(&pl.probs()[(a, col)])
                .expect("finite probabilities")
                .then(a.cmp(&b))
        });
        candidates.truncate(keep);
        out.insert(c, candidates);
    }
    out
}

fn div_ceil(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Indices of the `n_r` targets with the lowest pseudo-labelling
/// confidence (ties toward the smaller index).
pub fn seed_rejections(pl: &PseudoLabeling, n_r: usize) -> Result<BTreeSet<usize>> {
    let n_t = pl.len();
    if n_r == 0 || n_r >= n_t {
        return Err(Error::InvalidArgument(format!(
            "n_r = {n_r} must be within 1..{n_t} (cannot reject every target)"
        )));
    }
    let mut order: Vec<usize> = (0..n_t).collect();
    order.sort_by(|&a, &b| {
        pl.top_prob()[a]
            .partial_cmp(&pl.top_prob()[b])
            .expect("finite probabilities")
            .then(a.cmp(&b))
    });
    Ok(order.into_iter().take(n_r).collect())
}

/// One synchronous 1-NN rejection pass.
///
/// For every undecided target, its nearest neighbour among the decided
/// pool (`selected` plus `rejected`, as given at entry) is found; the
/// target joins the output set when that neighbour is rejected.
/// Decisions never chain within one call, so the result is independent
/// of processing order. The output always contains the input `rejected`
/// set; an empty pool returns it unchanged.
pub fn propagate_rejections(
    z_target: &DMatrix<f64>,
    selected: &BTreeSet<usize>,
    rejected: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    assert!(
        selected.is_disjoint(rejected),
        "selected and rejected sets must be disjoint"
    );
    propagate_impl(z_target, selected, rejected, true)
}

/// Sequential reference implementation of [`propagate_rejections`];
/// bit-identical to the parallel path.
pub fn propagate_rejections_seq(
    z_target: &DMatrix<f64>,
    selected: &BTreeSet<usize>,
    rejected: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    assert!(
        selected.is_disjoint(rejected),
        "selected and rejected sets must be disjoint"
    );
    propagate_impl(z_target, selected, rejected, false)
}

fn propagate_impl(
    z_target: &DMatrix<f64>,
    selected: &BTreeSet<usize>,
    rejected: &BTreeSet<usize>,
    parallel: bool,
) -> BTreeSet<usize> {
    let n_t = z_target.nrows();
    // Pool in ascending index order; ties in distance resolve to the
    // smaller pool index.
    let pool: Vec<(usize, bool)> = (0..n_t)
        .filter_map(|i| {
            if rejected.contains(&i) {
                Some((i, true))
            } else if selected.contains(&i) {
                Some((i, false))
            } else {
                None
            }
        })
        .collect();
    let mut out = rejected.clone();
    if pool.is_empty() {
        return out;
    }
    let undecided: Vec<usize> = (0..n_t)
        .filter(|i| !rejected.contains(i) && !selected.contains(i))
        .collect();

    let zt = z_target.transpose();
    let decide = |&u: &usize| -> bool {
        let zu = zt.column(u);
        let mut best_dist = f64::INFINITY;
        let mut best_rejected = false;
        for &(p, is_rej) in &pool {
            let mut d = 0.0;
            let zp = zt.column(p);
            for k in 0..zt.nrows() {
                let diff = zu[k] - zp[k];
                d += diff * diff;
            }
            if d < best_dist {
                best_dist = d;
                best_rejected = is_rej;
            }
        }
        best_rejected
    };

    let newly: Vec<bool> = if parallel {
        par::map_indexed(undecided.len(), |k| decide(&undecided[k]))
    } else {
        undecided.iter().map(decide).collect()
    };
    for (k, &reject) in newly.iter().enumerate() {
        if reject {
            out.insert(undecided[k]);
        }
    }
    out
}
