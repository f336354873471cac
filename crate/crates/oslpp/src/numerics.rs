//! Dense numerical kernels: row normalization, PCA, the regularized
//! generalized symmetric eigensolver, and pairwise squared distances.
//!
//! Everything here is deterministic. Reductions always run in index
//! order, eigenvector and principal-component signs are pinned by a
//! largest-magnitude-entry-positive rule, and the parallel and
//! sequential code paths compute each output entry with identical
//! scalar operations.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::par;

/// A learned linear projection: columns of `basis` are generalized
/// eigenvectors, paired with eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    basis: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl Projection {
    /// Assemble a projection from an explicit basis and eigenvalue
    /// list, checking the type invariants.
    pub fn new(basis: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if basis.ncols() > basis.nrows() {
            return Err(Error::Shape(format!(
                "projection cannot expand dimensionality ({} -> {})",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if eigenvalues.len() != basis.ncols() {
            return Err(Error::Shape(format!(
                "{} eigenvalues for {} basis columns",
                eigenvalues.len(),
                basis.ncols()
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) || eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("projection contains non-finite values".into()));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Validation("eigenvalues must be sorted non-increasing".into()));
        }
        Ok(Self { basis, eigenvalues })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Input dimensionality of the projection.
    pub fn dim_in(&self) -> usize {
        self.basis.nrows()
    }

    /// Output (subspace) dimensionality.
    pub fn dim_out(&self) -> usize {
        self.basis.ncols()
    }

    /// Project row-major sample matrix `x` (one sample per row).
    pub fn project_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.ncols(), self.dim_in(), "projection dimension mismatch");
        x * &self.basis
    }
}

/// PCA model fitted on a training matrix: per-column mean, orthonormal
/// components, and the variance explained by each component.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: DVector<f64>,
    components: DMatrix<f64>,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// `d0 x d_pca` matrix whose columns are the principal directions.
    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn dim_in(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim_out(&self) -> usize {
        self.components.ncols()
    }
}

/// Scale every row to unit Euclidean norm; zero rows pass through
/// unchanged.
pub fn l2_normalize_rows(x: &FeatureMatrix) -> FeatureMatrix {
    let mut m = x.matrix().clone();
    for i in 0..m.nrows() {
        let mut sq = 0.0;
        for j in 0..m.ncols() {
            sq += m[(i, j)] * m[(i, j)];
        }
        if sq > 0.0 {
            let norm = sq.sqrt();
            for j in 0..m.ncols() {
                m[(i, j)] /= norm;
            }
        }
    }
    FeatureMatrix::from_matrix(m).expect("normalizing preserves finiteness")
}

/// Fit a PCA model with `d_pca` components via SVD of the centered
/// matrix.
///
/// Fails if `d_pca` is outside `1..=min(rows - 1, cols)` or exceeds the
/// numerical rank of the centered data.
pub fn fit_pca(x: &FeatureMatrix, d_pca: usize) -> Result<PcaModel> {
    let (n, d0) = (x.rows(), x.cols());
    let max_d = d0.min(n.saturating_sub(1));
    if d_pca == 0 || d_pca > max_d {
        return Err(Error::InvalidArgument(format!(
            "d_pca = {d_pca} out of range; must be within 1..={max_d} for a {n}x{d0} matrix"
        )));
    }

    let mut centered = x.matrix().clone();
    let mut mean = DVector::zeros(d0);
    for j in 0..d0 {
        let mut s = 0.0;
        for i in 0..n {
            s += centered[(i, j)];
        }
        let mu = s / n as f64;
        mean[j] = mu;
        for i in 0..n {
            centered[(i, j)] -= mu;
        }
    }

    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let singular = &svd.singular_values; // sorted descending by nalgebra

    // Numerical rank with the usual max(n, d0) * eps * s_max cutoff.
    let s_max = singular.max();
    let tol = (n.max(d0) as f64) * f64::EPSILON * s_max;
    let rank = singular.iter().filter(|&&s| s > tol).count();
    if rank < d_pca {
        return Err(Error::InvalidArgument(format!(
            "centered data has rank {rank}; cannot extract {d_pca} components"
        )));
    }

    let mut components = DMatrix::zeros(d0, d_pca);
    let mut explained = Vec::with_capacity(d_pca);
    for k in 0..d_pca {
        for j in 0..d0 {
            components[(j, k)] = v_t[(k, j)];
        }
        explained.push(singular[k] * singular[k] / (n as f64 - 1.0));
    }
    fix_column_signs(&mut components);

    Ok(PcaModel {
        mean,
        components,
        explained_variance: explained,
    })
}

/// Apply a fitted PCA model: `(x - mean) * components`.
pub fn pca_transform(model: &PcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.cols() != model.dim_in() {
        return Err(Error::InvalidArgument(format!(
            "input has {} columns but the PCA model was fitted on {}",
            x.cols(),
            model.dim_in()
        )));
    }
    let mut centered = x.matrix().clone();
    for j in 0..centered.ncols() {
        for i in 0..centered.nrows() {
            centered[(i, j)] -= model.mean[j];
        }
    }
    FeatureMatrix::from_matrix(centered * &model.components)
}

/// Solve the symmetric generalized eigenproblem `A p = lambda B p` for
/// the `d` largest eigenvalues, with `B` symmetric positive definite.
///
/// `B` is reduced by Cholesky (`B = L L^T`) and the standard symmetric
/// problem on `L^-1 A L^-T` is solved, which keeps everything in real
/// symmetric territory. Returned columns satisfy `p^T B p = 1` and the
/// largest-magnitude entry of each column is positive.
pub fn solve_gev(a: &DMatrix<f64>, b: &DMatrix<f64>, d: usize) -> Result<Projection> {
    let m = a.nrows();
    if a.ncols() != m || b.nrows() != m || b.ncols() != m {
        return Err(Error::InvalidArgument(format!(
            "A and B must be square and equally sized, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if d == 0 || d > m {
        return Err(Error::InvalidArgument(format!(
            "requested d = {d} eigenpairs from a {m}x{m} pencil"
        )));
    }
    check_symmetric(a, "A")?;
    check_symmetric(b, "B")?;

    let a_sym = symmetrize(a);
    let b_sym = symmetrize(b);

    let chol = Cholesky::new(b_sym.clone()).ok_or_else(|| {
        Error::Numerical("B is not positive definite (Cholesky factorization failed)".into())
    })?;
    let l = chol.l();

    // C = L^-1 A L^-T, re-symmetrized to absorb round-off.
    let y = l
        .solve_lower_triangular(&a_sym)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?
        .transpose();
    let c = symmetrize(&c);

    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("real eigenvalues")
            .then(i.cmp(&j))
    });

    let l_t = l.transpose();
    let mut basis = DMatrix::zeros(m, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (k, &idx) in order.iter().take(d).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if !lambda.is_finite() {
            return Err(Error::Numerical(format!("non-finite eigenvalue {lambda}")));
        }
        let q = eig.eigenvectors.column(idx).into_owned();
        let p = l_t
            .solve_upper_triangular(&q)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        // B-normalize; q is unit so p^T B p is already ~1.
        let scale = (p.transpose() * &b_sym * &p)[(0, 0)];
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::Numerical(format!("eigenvector has invalid B-norm {scale}")));
        }
        let p = p / scale.sqrt();
        basis.set_column(k, &p);
        eigenvalues.push(lambda);
    }
    fix_column_signs(&mut basis);

    Ok(Projection { basis, eigenvalues })
}

/// Matrix of squared Euclidean distances between the rows of `x` and the
/// rows of `y`: entry `(i, j)` is `||x_i - y_j||^2`.
pub fn pairwise_sq_dists(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_pairwise_shapes(x, y)?;
    let xt = x.transpose();
    let yt = y.transpose();
    let (nx, ny) = (x.nrows(), y.nrows());
    let mut out = DMatrix::zeros(nx, ny);
    // Column-major storage: chunk j is the distances of every x-row to y_j.
    par::for_each_chunk_mut(out.as_mut_slice(), nx, |j, col| {
        let yj = yt.column(j);
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = sq_dist(xt.column(i).as_slice(), yj.as_slice());
        }
    });
    Ok(out)
}

/// Sequential reference implementation of [`pairwise_sq_dists`]. Used by
/// the benchmarks and by differential tests; produces bit-identical
/// results to the parallel path.
pub fn pairwise_sq_dists_seq(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_pairwise_shapes(x, y)?;
    let xt = x.transpose();
    let yt = y.transpose();
    let (nx, ny) = (x.nrows(), y.nrows());
    let mut out = DMatrix::zeros(nx, ny);
    for (j, col) in out.as_mut_slice().chunks_mut(nx).enumerate() {
        let yj = yt.column(j);
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = sq_dist(xt.column(i).as_slice(), yj.as_slice());
        }
    }
    Ok(out)
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (va, vb) in a.iter().zip(b) {
        let diff = va - vb;
        acc += diff * diff;
    }
    // Squared differences cannot go negative; clamp regardless so the
    // contract survives a future change of accumulation scheme.
    acc.max(0.0)
}

fn check_pairwise_shapes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.ncols() != y.ncols() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: x has {} columns, y has {}",
            x.ncols(),
            y.ncols()
        )));
    }
    Ok(())
}

/// Largest absolute row sum (the induced infinity norm).
pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..m.nrows() {
        let mut row = 0.0;
        for j in 0..m.ncols() {
            row += m[(i, j)].abs();
        }
        best = best.max(row);
    }
    best
}

fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let scale = inf_norm(m);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > 1e-8 * scale {
        return Err(Error::InvalidArgument(format!(
            "{name} is not symmetric: max asymmetry {worst:.3e} exceeds 1e-8 * {scale:.3e}"
        )));
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Flip column signs so the entry of largest magnitude in each column is
/// positive (first such entry wins on ties). Pins the sign freedom of
/// eigenvectors and singular vectors, making runs reproducible.
pub(crate) fn fix_column_signs(m: &mut DMatrix<f64>) {
    for k in 0..m.ncols() {
        let mut best_idx = 0;
        let mut best_abs = 0.0;
        for i in 0..m.nrows() {
            let a = m[(i, k)].abs();
            if a > best_abs {
                best_abs = a;
                best_idx = i;
            }
        }
        if m[(best_idx, k)] < 0.0 {
            for i in 0..m.nrows() {
                m[(i, k)] = -m[(i, k)];
            }
        }
    }
}
