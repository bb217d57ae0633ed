//! Normal linear fixed-effects models: fitting, nested comparison, and the
//! noncentrality / KL-divergence quantities that drive the evidential layer.
//!
//! Fits go through a QR decomposition of the design matrix rather than the
//! normal equations; rank is checked at construction with the standard
//! singular-value threshold `max_dim * eps * sigma_max`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ncf::NcfParams;

/// Relative threshold below which a fitted residual variance is treated as
/// zero (perfect fit). Scaled by `1 + mean(y^2)` so it tracks the data scale.
const DEGENERATE_REL_TOL: f64 = 1e-20;

/// A full-column-rank design matrix with labeled columns.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
    column_labels: Vec<String>,
}

impl DesignMatrix {
    /// Validates finiteness and full column rank.
    pub fn new(entries: DMatrix<f64>, column_labels: Vec<String>) -> Result<Self> {
        let (n, r) = entries.shape();
        if r == 0 {
            return Err(Error::InvalidParameter {
                name: "entries",
                reason: "design matrix must have at least one column".into(),
            });
        }
        if column_labels.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: column_labels.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "entries",
                reason: "design matrix entries must be finite".into(),
            });
        }
        if n < r {
            return Err(Error::RankDeficient {
                rank: n,
                ncols: r,
                columns: column_labels[n..].to_vec(),
            });
        }
        let svals = entries.clone().svd(false, false).singular_values;
        let smax = svals.max();
        let tol = n.max(r) as f64 * f64::EPSILON * smax;
        let rank = svals.iter().filter(|&&s| s > tol).count();
        if rank < r {
            let columns = dependent_columns(&entries, &column_labels, tol);
            return Err(Error::RankDeficient { rank, ncols: r, columns });
        }
        Ok(Self { entries, column_labels })
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column_labels(&self) -> &[String] {
        &self.column_labels
    }

    /// Sub-design formed from the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<DesignMatrix> {
        for &i in indices {
            if i >= self.ncols() {
                return Err(Error::InvalidSpec(format!(
                    "column index {i} out of range for {} columns",
                    self.ncols()
                )));
            }
        }
        let entries = self.entries.select_columns(indices);
        let labels = indices.iter().map(|&i| self.column_labels[i].clone()).collect();
        DesignMatrix::new(entries, labels)
    }
}

/// Greedy Gram-Schmidt pass naming columns that lie in the span of earlier ones.
fn dependent_columns(m: &DMatrix<f64>, labels: &[String], tol: f64) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for (j, col) in m.column_iter().enumerate() {
        let mut v: DVector<f64> = col.into_owned();
        let norm0 = v.norm();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        if v.norm() <= tol.max(norm0 * 1e-12) {
            out.push(labels[j].clone());
        } else {
            let norm = v.norm();
            basis.push(v / norm);
        }
    }
    out
}

/// Observed response values paired with a design matrix.
#[derive(Debug, Clone)]
pub struct ResponseVector {
    values: DVector<f64>,
}

impl ResponseVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "response entries must be finite".into(),
            });
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(values))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// A fitted normal linear model.
///
/// `sigma2_ml` is the maximum-likelihood variance RSS/n; `sigma2_unbiased`
/// rescales it by n/(n - r). `log_likelihood` is the maximized value
/// `-(n/2) (log(2 pi sigma2_ml) + 1)`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta_hat: DVector<f64>,
    pub sigma2_ml: f64,
    pub sigma2_unbiased: f64,
    pub log_likelihood: f64,
    pub residuals: DVector<f64>,
    pub n: usize,
    pub r: usize,
    degenerate_threshold: f64,
}

impl FitResult {
    /// True when the residual variance is numerically zero, in which case F
    /// statistics and evidence values downstream are undefined.
    pub fn has_degenerate_variance(&self) -> bool {
        self.sigma2_ml <= self.degenerate_threshold
    }

    pub(crate) fn from_parts(
        beta_hat: DVector<f64>,
        residuals: DVector<f64>,
        mean_sq_y: f64,
        n: usize,
        r: usize,
    ) -> Self {
        let rss = residuals.norm_squared();
        let sigma2_ml = rss / n as f64;
        let sigma2_unbiased = rss / (n - r) as f64;
        let log_likelihood = if sigma2_ml > 0.0 {
            -(n as f64 / 2.0) * ((2.0 * std::f64::consts::PI * sigma2_ml).ln() + 1.0)
        } else {
            f64::INFINITY
        };
        FitResult {
            beta_hat,
            sigma2_ml,
            sigma2_unbiased,
            log_likelihood,
            residuals,
            n,
            r,
            degenerate_threshold: DEGENERATE_REL_TOL * (1.0 + mean_sq_y),
        }
    }
}

/// Specification of a nested model pair.
///
/// `DropColumns` zeroes a block of coefficients (the restricted design keeps
/// the complementary columns); `Contrast` restricts the coefficients to
/// satisfy `L beta = h` for a full-row-rank `L`.
#[derive(Debug, Clone)]
pub enum ComparisonSpec {
    DropColumns { drop: Vec<usize> },
    Contrast { l: DMatrix<f64>, h: DVector<f64> },
}

impl ComparisonSpec {
    pub fn drop_columns(drop: Vec<usize>) -> Self {
        ComparisonSpec::DropColumns { drop }
    }

    pub fn contrast(l: DMatrix<f64>, h: DVector<f64>) -> Self {
        ComparisonSpec::Contrast { l, h }
    }

    /// Number of restrictions q.
    pub fn q(&self) -> usize {
        match self {
            ComparisonSpec::DropColumns { drop } => drop.len(),
            ComparisonSpec::Contrast { l, .. } => l.nrows(),
        }
    }

    fn validate(&self, x: &DesignMatrix) -> Result<()> {
        let r = x.ncols();
        match self {
            ComparisonSpec::DropColumns { drop } => {
                if drop.is_empty() {
                    return Err(Error::InvalidSpec(
                        "the dropped-column set must not be empty".into(),
                    ));
                }
                let mut seen = vec![false; r];
                for &i in drop {
                    if i >= r {
                        return Err(Error::InvalidSpec(format!(
                            "dropped column index {i} out of range for {r} columns"
                        )));
                    }
                    if seen[i] {
                        return Err(Error::InvalidSpec(format!(
                            "column index {i} listed twice in the dropped set"
                        )));
                    }
                    seen[i] = true;
                }
                if drop.len() == r {
                    return Err(Error::InvalidSpec(
                        "cannot drop every column; the restricted model would be empty".into(),
                    ));
                }
                Ok(())
            }
            ComparisonSpec::Contrast { l, h } => {
                let q = l.nrows();
                if q == 0 {
                    return Err(Error::InvalidSpec("contrast matrix has no rows".into()));
                }
                if l.ncols() != r {
                    return Err(Error::DimensionMismatch { expected: r, found: l.ncols() });
                }
                if h.len() != q {
                    return Err(Error::DimensionMismatch { expected: q, found: h.len() });
                }
                if q > r {
                    return Err(Error::InvalidSpec(format!(
                        "contrast row count q = {q} exceeds the parameter count r = {r}"
                    )));
                }
                let svals = l.clone().svd(false, false).singular_values;
                let tol = l.nrows().max(l.ncols()) as f64 * f64::EPSILON * svals.max();
                if svals.iter().filter(|&&s| s > tol).count() < q {
                    return Err(Error::InvalidSpec(
                        "contrast matrix L must have full row rank".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Complement of the dropped set, in original column order.
    fn kept_columns(&self, r: usize) -> Vec<usize> {
        match self {
            ComparisonSpec::DropColumns { drop } => {
                (0..r).filter(|i| !drop.contains(i)).collect()
            }
            ComparisonSpec::Contrast { .. } => (0..r).collect(),
        }
    }
}

/// Result of a nested model comparison.
#[derive(Debug, Clone)]
pub struct ComparisonResult {
    pub f_stat: f64,
    pub q: usize,
    pub n: usize,
    pub r: usize,
    pub g_squared: f64,
    pub delta_sic: f64,
    pub p_value: f64,
    pub fit_full: FitResult,
    pub fit_restricted: FitResult,
}

/// An n-dimensional multivariate normal model.
#[derive(Debug, Clone)]
pub struct MvnModel {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl MvnModel {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: covariance.nrows() });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-10 {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        if covariance.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { mean, covariance })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Fits the model by QR least squares.
pub fn fit(x: &DesignMatrix, y: &ResponseVector) -> Result<FitResult> {
    let n = x.nrows();
    let r = x.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n <= r {
        return Err(Error::InsufficientData { n, r });
    }
    let beta_hat = qr_solve(x.entries(), y.values())?;
    let residuals = y.values() - x.entries() * &beta_hat;
    let mean_sq_y = y.values().norm_squared() / n as f64;
    Ok(FitResult::from_parts(beta_hat, residuals, mean_sq_y, n, r))
}

fn qr_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = x.clone().qr();
    let qty = qr.q().tr_mul(y);
    qr.r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numeric("QR back-substitution failed".into()))
}

/// Upper-triangular factor R of the thin QR of X, so that X'X = R'R.
fn r_factor(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().qr().r()
}

/// Compares the restricted model against the full model and maps the F
/// statistic to G^2 and the evidence scale.
pub fn compare(
    x: &DesignMatrix,
    y: &ResponseVector,
    spec: &ComparisonSpec,
) -> Result<ComparisonResult> {
    spec.validate(x)?;
    let n = x.nrows();
    let r = x.ncols();
    let q = spec.q();
    let fit_full = fit(x, y)?;
    if fit_full.has_degenerate_variance() {
        return Err(Error::DegenerateVariance);
    }

    let yv = y.values();
    let yty = yv.norm_squared();
    let bxy = fit_full.beta_hat.dot(&x.entries().tr_mul(yv));
    let denominator = (yty - bxy) / (n - r) as f64;
    if denominator <= 0.0 {
        return Err(Error::DegenerateVariance);
    }

    let (numerator, fit_restricted) = match spec {
        ComparisonSpec::DropColumns { .. } => {
            let kept = spec.kept_columns(r);
            let x1 = x.select_columns(&kept)?;
            let fit_r = fit(&x1, y)?;
            let b1x1y = fit_r.beta_hat.dot(&x1.entries().tr_mul(yv));
            ((bxy - b1x1y) / q as f64, fit_r)
        }
        ComparisonSpec::Contrast { l, h } => {
            let discrepancy = l * &fit_full.beta_hat - h;
            let quad = contrast_quadratic_form(x.entries(), l, &discrepancy)?;
            let beta_r = constrained_solution(x.entries(), l, h, &fit_full.beta_hat)?;
            let residuals = yv - x.entries() * &beta_r;
            let mean_sq_y = yty / n as f64;
            // Restricted model spends r - q free parameters.
            let fit_r = FitResult::from_parts(beta_r, residuals, mean_sq_y, n, r - q);
            (quad / q as f64, fit_r)
        }
    };

    let mut f_stat = numerator / denominator;
    if f_stat < 0.0 {
        if f_stat > -1e-8 {
            f_stat = 0.0;
        } else {
            return Err(Error::Numeric(format!(
                "negative F statistic {f_stat}: restricted fit beat the full fit"
            )));
        }
    }

    let nf = n as f64;
    let g_squared = nf * (1.0 + q as f64 * f_stat / (n - r) as f64).ln();
    let delta_sic = g_squared - q as f64 * nf.ln();
    let central = NcfParams::new(q, n - r, 0.0)?;
    let p_value = 1.0 - central.cdf(f_stat)?;

    Ok(ComparisonResult {
        f_stat,
        q,
        n,
        r,
        g_squared,
        delta_sic,
        p_value,
        fit_full,
        fit_restricted,
    })
}

/// (L b - h)' (L (X'X)^-1 L')^-1 (L b - h) evaluated through the R factor.
fn contrast_quadratic_form(
    x: &DMatrix<f64>,
    l: &DMatrix<f64>,
    discrepancy: &DVector<f64>,
) -> Result<f64> {
    let middle = contrast_middle_matrix(x, l)?;
    let chol = middle
        .cholesky()
        .ok_or_else(|| Error::Numeric("L (X'X)^-1 L' is singular".into()))?;
    let solved = chol.solve(discrepancy);
    Ok(discrepancy.dot(&solved))
}

/// L (X'X)^-1 L' computed as (L R^-1)(L R^-1)' from the QR factor R.
fn contrast_middle_matrix(x: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rf = r_factor(x);
    // W = R^-T L', so L (X'X)^-1 L' = W'W.
    let w = rf
        .transpose()
        .solve_lower_triangular(&l.transpose())
        .ok_or_else(|| Error::Numeric("R factor is singular".into()))?;
    Ok(w.tr_mul(&w))
}

/// Closed-form constrained least squares under L beta = h:
/// beta_hat - (X'X)^-1 L' (L (X'X)^-1 L')^-1 (L beta_hat - h).
fn constrained_solution(
    x: &DMatrix<f64>,
    l: &DMatrix<f64>,
    h: &DVector<f64>,
    beta_hat: &DVector<f64>,
) -> Result<DVector<f64>> {
    let rf = r_factor(x);
    let w = rf
        .transpose()
        .solve_lower_triangular(&l.transpose())
        .ok_or_else(|| Error::Numeric("R factor is singular".into()))?;
    let middle = w.tr_mul(&w);
    let chol = middle
        .cholesky()
        .ok_or_else(|| Error::Numeric("L (X'X)^-1 L' is singular".into()))?;
    let c = chol.solve(&(l * beta_hat - h));
    // (X'X)^-1 L' c = R^-1 (R^-T L') c = R^-1 (W c)
    let xc = rf
        .solve_upper_triangular(&(&w * &c))
        .ok_or_else(|| Error::Numeric("R factor is singular".into()))?;
    Ok(beta_hat - xc)
}

/// Noncentrality of the comparison F statistic at true coefficients `beta`
/// and variance `sigma2`.
///
/// For a dropped block this is the squared norm of the part of X2 beta2 that
/// is orthogonal to the restricted column space, over sigma2; it is zero
/// exactly when the restriction holds.
pub fn noncentrality(
    x: &DesignMatrix,
    spec: &ComparisonSpec,
    beta: &DVector<f64>,
    sigma2: f64,
) -> Result<f64> {
    spec.validate(x)?;
    if beta.len() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), found: beta.len() });
    }
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma2",
            reason: format!("must be > 0, got {sigma2}"),
        });
    }
    match spec {
        ComparisonSpec::DropColumns { drop } => {
            let kept = spec.kept_columns(x.ncols());
            let x1 = x.entries().select_columns(&kept);
            let x2 = x.entries().select_columns(drop);
            let beta2 = DVector::from_iterator(drop.len(), drop.iter().map(|&i| beta[i]));
            let v = &x2 * &beta2;
            if beta2.iter().all(|&b| b == 0.0) {
                return Ok(0.0);
            }
            // Residual of v after projecting onto col(X1).
            let coeffs = qr_solve(&x1, &v)?;
            let resid = &v - &x1 * coeffs;
            Ok(resid.norm_squared() / sigma2)
        }
        ComparisonSpec::Contrast { l, h } => {
            let d = l * beta - h;
            if d.iter().all(|&v| v == 0.0) {
                return Ok(0.0);
            }
            Ok(contrast_quadratic_form(x.entries(), l, &d)? / sigma2)
        }
    }
}

/// KL divergence K(f1, f2) = E_{f1}[log(f1/f2)] of two multivariate normals.
pub fn kl_mvn(f1: &MvnModel, f2: &MvnModel) -> Result<f64> {
    let n = f1.dim();
    if f2.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f2.dim() });
    }
    let chol2 = f2
        .covariance
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let chol1 = f1
        .covariance
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let ln_det = |c: &nalgebra::Cholesky<f64, nalgebra::Dyn>| {
        2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    };
    let trace = chol2.solve(&f1.covariance).trace();
    let d = &f1.mean - &f2.mean;
    let quad = d.dot(&chol2.solve(&d));
    Ok(0.5 * (trace - n as f64 + quad + ln_det(&chol2) - ln_det(&chol1)))
}

/// KL divergence between the nested pair of a dropped-block comparison with
/// equal spherical covariance: beta2' X2'X2 beta2 / (2 sigma2). Symmetric in
/// this case, so it equals the divergence taken in either direction.
pub fn kl_nested(
    x: &DesignMatrix,
    spec: &ComparisonSpec,
    beta2: &DVector<f64>,
    sigma2: f64,
) -> Result<f64> {
    let drop = match spec {
        ComparisonSpec::DropColumns { drop } => drop,
        ComparisonSpec::Contrast { .. } => {
            return Err(Error::InvalidSpec(
                "nested KL divergence requires a dropped-column comparison".into(),
            ))
        }
    };
    spec.validate(x)?;
    if beta2.len() != drop.len() {
        return Err(Error::DimensionMismatch { expected: drop.len(), found: beta2.len() });
    }
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma2",
            reason: format!("must be > 0, got {sigma2}"),
        });
    }
    let x2 = x.entries().select_columns(drop);
    Ok((&x2 * beta2).norm_squared() / (2.0 * sigma2))
}

/// Builds a two-factor design in leave-one-column-out coding: intercept,
/// main-effect indicators for all but the last level of each factor, and the
/// elementwise products as the interaction block. Returns the design together
/// with the dropped-block comparison spec that tests the interaction.
pub fn build_two_way_design(
    levels1: usize,
    levels2: usize,
    cell_counts: &[Vec<usize>],
) -> Result<(DesignMatrix, ComparisonSpec)> {
    if levels1 < 2 || levels2 < 2 {
        return Err(Error::InvalidSpec(
            "both factors must have at least 2 levels".into(),
        ));
    }
    if cell_counts.len() != levels1 || cell_counts.iter().any(|row| row.len() != levels2) {
        return Err(Error::InvalidSpec(format!(
            "cell_counts must be {levels1} x {levels2}"
        )));
    }
    if cell_counts.iter().flatten().any(|&c| c < 1) {
        return Err(Error::InvalidSpec("every cell count must be >= 1".into()));
    }

    let r = levels1 * levels2;
    let n: usize = cell_counts.iter().flatten().sum();
    let mut labels = vec!["intercept".to_string()];
    for i in 1..levels1 {
        labels.push(format!("f1_{i}"));
    }
    for j in 1..levels2 {
        labels.push(format!("f2_{j}"));
    }
    for i in 1..levels1 {
        for j in 1..levels2 {
            labels.push(format!("f1_{i}:f2_{j}"));
        }
    }

    let mut entries = DMatrix::zeros(n, r);
    let mut row = 0;
    for i in 0..levels1 {
        for j in 0..levels2 {
            for _ in 0..cell_counts[i][j] {
                entries[(row, 0)] = 1.0;
                // Last level of each factor is the reference (dropped column).
                if i + 1 < levels1 {
                    entries[(row, 1 + i)] = 1.0;
                }
                if j + 1 < levels2 {
                    entries[(row, levels1 + j)] = 1.0;
                }
                if i + 1 < levels1 && j + 1 < levels2 {
                    let col = levels1 + levels2 - 1 + i * (levels2 - 1) + j;
                    entries[(row, col)] = 1.0;
                }
                row += 1;
            }
        }
    }

    let interaction_start = levels1 + levels2 - 1;
    let drop = (interaction_start..r).collect();
    let design = DesignMatrix::new(entries, labels)?;
    Ok((design, ComparisonSpec::DropColumns { drop }))
}
