//! Bootstrap estimation of the evidence-function distribution.
//!
//! Three resampling schemes over a nested comparison: parametric (normal
//! draws from the fitted full model), semiparametric (resampled full-model
//! residuals added back to the fitted means), and a stratified nonparametric
//! scheme for cell-structured data (variance-inflated, median-centered
//! residuals resampled within cells).
//!
//! Every replicate draws from its own random stream derived from the master
//! seed and the replicate index, so results are identical whether replicates
//! run sequentially or in parallel. Replicates whose refit has zero residual
//! variance are recorded as failures and excluded from the summaries, with
//! the count reported.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linear_model::{
    compare, fit, ComparisonSpec, DesignMatrix, FitResult, ResponseVector,
};
use crate::rng::{derive_seed, stream_rng};

/// Default replicate count.
pub const DEFAULT_N_BOOT: usize = 1024;

/// Default simulated-dataset count for the sample-size study.
pub const DEFAULT_N_SIM: usize = 1024;

/// Default cap on total model refits in the sample-size study.
pub const DEFAULT_MAX_REFITS: u64 = 5_000_000;

/// Cell membership for stratified resampling.
#[derive(Debug, Clone)]
pub struct CellLayout {
    assignments: Vec<usize>,
    counts: Vec<usize>,
}

impl CellLayout {
    /// `assignments[i]` is the zero-based cell index of observation i;
    /// `n_cells` is the total number of cells.
    pub fn new(assignments: Vec<usize>, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidParameter {
                name: "n_cells",
                reason: "at least one cell is required".into(),
            });
        }
        let mut counts = vec![0usize; n_cells];
        for &c in &assignments {
            if c >= n_cells {
                return Err(Error::InvalidParameter {
                    name: "assignments",
                    reason: format!("cell index {c} out of range for {n_cells} cells"),
                });
            }
            counts[c] += 1;
        }
        if counts.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "assignments",
                reason: "every cell must contain at least one observation".into(),
            });
        }
        Ok(Self { assignments, counts })
    }

    pub fn n_obs(&self) -> usize {
        self.assignments.len()
    }

    pub fn n_cells(&self) -> usize {
        self.counts.len()
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Index lists per cell, in observation order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_cells()];
        for (i, &c) in self.assignments.iter().enumerate() {
            members[c].push(i);
        }
        members
    }
}

/// Resampling scheme identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapMethod {
    Parametric,
    Residual,
    Stratified,
}

impl std::fmt::Display for BootstrapMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BootstrapMethod::Parametric => f.write_str("parametric"),
            BootstrapMethod::Residual => f.write_str("residual"),
            BootstrapMethod::Stratified => f.write_str("stratified"),
        }
    }
}

/// Replicated evidence values from one bootstrap run.
#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// Delta-SIC value of each successful replicate, in replicate order.
    pub replicates: Vec<f64>,
    /// Observation count of the resampled datasets (divisor for Delta-K).
    pub n_obs: usize,
    pub seed: u64,
    pub method: BootstrapMethod,
    /// Replicates dropped because the refit had zero residual variance.
    pub failures: usize,
}

impl BootstrapResult {
    /// Per-replicate Delta-K estimates (evidence value over n).
    pub fn delta_k_replicates(&self) -> Vec<f64> {
        let n = self.n_obs as f64;
        self.replicates.iter().map(|d| d / n).collect()
    }
}

/// Summary statistics of a bootstrap run: EDF quantiles by linear
/// interpolation, the share of replicates above zero (apparent reliability),
/// and an equal-tail interval for Delta-K.
#[derive(Debug, Clone)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub median: f64,
    pub a_r: f64,
    pub ci_delta_k: (f64, f64),
    sorted: Vec<f64>,
    n_obs: usize,
}

impl BootstrapSummary {
    /// EDF quantile of the Delta-SIC replicates, by linear interpolation.
    pub fn quantile(&self, p: f64) -> f64 {
        interp_quantile(&self.sorted, p)
    }

    /// EDF quantile of the Delta-K replicates.
    pub fn quantile_delta_k(&self, p: f64) -> f64 {
        self.quantile(p) / self.n_obs as f64
    }

    /// Sorted replicate values with their EDF heights (plot-ready).
    pub fn edf_points(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, (i + 1) as f64 / n))
            .collect()
    }
}

fn interp_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n >= 1);
    let p = p.clamp(0.0, 1.0);
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Runs `n_boot` replicates in parallel, each on its own derived stream;
/// `Ok(None)` marks a degenerate replicate that is excluded and counted.
fn run_replicates<F>(n_boot: usize, seed: u64, replicate: F) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Option<f64>> + Sync,
{
    if n_boot < 1 {
        return Err(Error::InvalidParameter {
            name: "n_boot",
            reason: "at least one replicate is required".into(),
        });
    }
    let raw: Vec<Option<f64>> = (0..n_boot)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            replicate(&mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = raw.iter().filter(|v| v.is_none()).count();
    let replicates = raw.into_iter().flatten().collect();
    Ok((replicates, failures))
}

fn refit_delta_sic(
    x: &DesignMatrix,
    y_star: DVector<f64>,
    spec: &ComparisonSpec,
) -> Result<Option<f64>> {
    let y = ResponseVector::new(y_star)?;
    match compare(x, &y, spec) {
        Ok(res) => Ok(Some(res.delta_sic)),
        Err(Error::DegenerateVariance) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Parametric bootstrap: y* ~ Normal(X beta_hat, sigma2_unbiased I),
/// refitting both models on each replicate.
pub fn parametric_bootstrap(
    fit_full: &FitResult,
    x: &DesignMatrix,
    spec: &ComparisonSpec,
    n_boot: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if fit_full.beta_hat.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: fit_full.beta_hat.len(),
        });
    }
    if fit_full.has_degenerate_variance() {
        return Err(Error::DegenerateVariance);
    }
    let mu = x.entries() * &fit_full.beta_hat;
    let sd = fit_full.sigma2_unbiased.sqrt();
    let n = x.nrows();
    let (replicates, failures) = run_replicates(n_boot, seed, |rng| {
        let y_star = DVector::from_iterator(
            n,
            mu.iter().map(|&m| m + sd * rng.sample::<f64, _>(StandardNormal)),
        );
        refit_delta_sic(x, y_star, spec)
    })?;
    Ok(BootstrapResult {
        replicates,
        n_obs: n,
        seed,
        method: BootstrapMethod::Parametric,
        failures,
    })
}

/// Semiparametric bootstrap: full-model residuals resampled with replacement
/// and added back to the fitted means.
///
/// The pool is inflated by sqrt(n / (n - r)) before resampling, the same
/// degrees-of-freedom correction the stratified scheme applies per cell;
/// raw least-squares residuals underestimate the error variance by the
/// factor (n - r)/n, which badly skews the evidence distribution when the
/// model spends a large share of the degrees of freedom.
pub fn residual_bootstrap(
    fit_full: &FitResult,
    x: &DesignMatrix,
    spec: &ComparisonSpec,
    n_boot: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if fit_full.beta_hat.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: fit_full.beta_hat.len(),
        });
    }
    if fit_full.has_degenerate_variance() {
        return Err(Error::DegenerateVariance);
    }
    let mu = x.entries() * &fit_full.beta_hat;
    let inflation = (fit_full.n as f64 / (fit_full.n - fit_full.r) as f64).sqrt();
    let pool: Vec<f64> = fit_full.residuals.iter().map(|e| e * inflation).collect();
    let n = x.nrows();
    let (replicates, failures) = run_replicates(n_boot, seed, |rng| {
        let y_star = DVector::from_iterator(
            n,
            mu.iter().map(|&m| m + pool[rng.random_range(0..pool.len())]),
        );
        refit_delta_sic(x, y_star, spec)
    })?;
    Ok(BootstrapResult {
        replicates,
        n_obs: n,
        seed,
        method: BootstrapMethod::Residual,
        failures,
    })
}

/// Stratified nonparametric bootstrap for cell-structured data.
///
/// Within each cell the residuals about the cell median are inflated by
/// sqrt(n_i / (n_i - 1)) so their expected sample variance matches the cell
/// variance, then resampled with replacement and added to the cell median.
pub fn stratified_bootstrap(
    y: &ResponseVector,
    layout: &CellLayout,
    x: &DesignMatrix,
    spec: &ComparisonSpec,
    n_boot: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if layout.n_obs() != n {
        return Err(Error::DimensionMismatch { expected: n, found: layout.n_obs() });
    }
    for (cell, &count) in layout.counts().iter().enumerate() {
        if count < 2 {
            return Err(Error::Stratification { cell, count });
        }
    }
    let members = layout.members();
    let medians: Vec<f64> = members.iter().map(|m| median_of(y.values(), m)).collect();
    let pools: Vec<Vec<f64>> = members
        .iter()
        .zip(&medians)
        .map(|(m, &med)| {
            let scale = (m.len() as f64 / (m.len() as f64 - 1.0)).sqrt();
            m.iter().map(|&i| (y.values()[i] - med) * scale).collect()
        })
        .collect();
    let assignments = layout.assignments().to_vec();

    let (replicates, failures) = run_replicates(n_boot, seed, |rng| {
        let y_star = DVector::from_iterator(
            n,
            assignments.iter().map(|&c| {
                let pool = &pools[c];
                medians[c] + pool[rng.random_range(0..pool.len())]
            }),
        );
        refit_delta_sic(x, y_star, spec)
    })?;
    Ok(BootstrapResult {
        replicates,
        n_obs: n,
        seed,
        method: BootstrapMethod::Stratified,
        failures,
    })
}

/// Median of the selected entries (midpoint of the two central order
/// statistics for even counts).
fn median_of(values: &DVector<f64>, indices: &[usize]) -> f64 {
    let mut v: Vec<f64> = indices.iter().map(|&i| values[i]).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Summarizes a bootstrap run; `ci_level` is the two-sided coverage of the
/// Delta-K interval.
pub fn summarize(result: &BootstrapResult, ci_level: f64) -> Result<BootstrapSummary> {
    if result.replicates.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "replicates",
            reason: "at least two successful replicates are required".into(),
        });
    }
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "ci_level",
            reason: format!("confidence level must lie in (0, 1), got {ci_level}"),
        });
    }
    let mut sorted = result.replicates.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let count = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / count;
    let median = interp_quantile(&sorted, 0.5);
    let a_r = sorted.iter().filter(|&&v| v > 0.0).count() as f64 / count;
    let tail = (1.0 - ci_level) / 2.0;
    let n = result.n_obs as f64;
    let ci_delta_k = (
        interp_quantile(&sorted, tail) / n,
        interp_quantile(&sorted, 1.0 - tail) / n,
    );
    Ok(BootstrapSummary {
        mean,
        median,
        a_r,
        ci_delta_k,
        sorted,
        n_obs: result.n_obs,
    })
}

/// One row of the sample-size study: averaged Delta-K confidence points for
/// one cell size and method, with the pseudo-true Delta-K of the generator.
#[derive(Debug, Clone)]
pub struct SampleSizeRow {
    pub cell_size: usize,
    pub method: BootstrapMethod,
    pub ci05: f64,
    pub ci50: f64,
    pub ci95: f64,
    pub pseudo_true: f64,
}

/// Simulation study of evidence uncertainty against per-cell sample size.
///
/// The fitted full model is taken as the generator. For each requested cell
/// size the design is rebuilt by replicating each cell's design row, `n_sim`
/// datasets are simulated, and each is bootstrapped with the parametric and
/// stratified schemes; the 0.05 / 0.50 / 0.95 Delta-K points are averaged
/// over simulations. The pseudo-true Delta-K is the per-observation
/// divergence between the generator mean and its projection onto the
/// restricted column space.
#[allow(clippy::too_many_arguments)]
pub fn sample_size_curve(
    x: &DesignMatrix,
    spec: &ComparisonSpec,
    fit_full: &FitResult,
    base_layout: &CellLayout,
    cell_sizes: &[usize],
    n_sim: usize,
    n_boot: usize,
    seed: u64,
    max_refits: u64,
) -> Result<Vec<SampleSizeRow>> {
    if fit_full.beta_hat.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: fit_full.beta_hat.len(),
        });
    }
    if base_layout.n_obs() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: base_layout.n_obs(),
        });
    }
    if fit_full.has_degenerate_variance() {
        return Err(Error::DegenerateVariance);
    }
    if cell_sizes.iter().any(|&c| c < 2) {
        return Err(Error::InvalidParameter {
            name: "cell_sizes",
            reason: "stratified resampling requires cell sizes >= 2".into(),
        });
    }
    let total: u64 = 2 * n_sim as u64 * n_boot as u64 * cell_sizes.len() as u64;
    if total > max_refits {
        return Err(Error::ResourceCap {
            detail: format!(
                "2 methods x {n_sim} simulations x {n_boot} replicates x {} cell sizes \
                 = {total} refits > cap {max_refits}",
                cell_sizes.len()
            ),
        });
    }

    // Representative design row and fitted mean per cell; the generator mean
    // must be cell-constant for the scaled design to be well defined.
    let members = base_layout.members();
    let mu_base = x.entries() * &fit_full.beta_hat;
    let mut cell_rows = Vec::with_capacity(members.len());
    let mut cell_means = Vec::with_capacity(members.len());
    for (cell, m) in members.iter().enumerate() {
        let first = m[0];
        for &i in m {
            for j in 0..x.ncols() {
                if (x.entries()[(i, j)] - x.entries()[(first, j)]).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "design rows differ within cell {cell}; the layout does not \
                         stratify the design"
                    )));
                }
            }
        }
        cell_rows.push(x.entries().row(first).into_owned());
        cell_means.push(mu_base[first]);
    }

    let sigma = fit_full.sigma2_unbiased.sqrt();
    let mut rows = Vec::new();
    for (ci, &cell_size) in cell_sizes.iter().enumerate() {
        let n_cells = cell_rows.len();
        let n_new = n_cells * cell_size;
        let mut entries = DMatrix::zeros(n_new, x.ncols());
        let mut assignments = Vec::with_capacity(n_new);
        let mut mu_new = DVector::zeros(n_new);
        for (c, row) in cell_rows.iter().enumerate() {
            for k in 0..cell_size {
                let i = c * cell_size + k;
                entries.set_row(i, row);
                mu_new[i] = cell_means[c];
                assignments.push(c);
            }
        }
        let x_new = DesignMatrix::new(entries, x.column_labels().to_vec())?;
        let layout_new = CellLayout::new(assignments, n_cells)?;
        let pseudo_true = pseudo_true_delta_k(&x_new, spec, &mu_new, fit_full.sigma2_unbiased)?;

        let sims: Vec<(BootstrapSummary, BootstrapSummary)> = (0..n_sim)
            .into_par_iter()
            .map(|s| -> Result<(BootstrapSummary, BootstrapSummary)> {
                let tag = (ci as u64) << 32 | s as u64;
                let mut data_rng = stream_rng(derive_seed(seed, tag), 0);
                let y_sim = DVector::from_iterator(
                    n_new,
                    mu_new
                        .iter()
                        .map(|&m| m + sigma * data_rng.sample::<f64, _>(StandardNormal)),
                );
                let y_sim = ResponseVector::new(y_sim)?;
                let sim_fit = fit(&x_new, &y_sim)?;
                let par = parametric_bootstrap(
                    &sim_fit,
                    &x_new,
                    spec,
                    n_boot,
                    derive_seed(seed, tag ^ 0x5a5a_5a5a_0000_0001),
                )?;
                let strat = stratified_bootstrap(
                    &y_sim,
                    &layout_new,
                    &x_new,
                    spec,
                    n_boot,
                    derive_seed(seed, tag ^ 0x5a5a_5a5a_0000_0002),
                )?;
                Ok((summarize(&par, 0.90)?, summarize(&strat, 0.90)?))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut acc = [[0.0f64; 3]; 2];
        for (par, strat) in &sims {
            for (slot, summary) in [(0, par), (1, strat)] {
                acc[slot][0] += summary.quantile_delta_k(0.05);
                acc[slot][1] += summary.quantile_delta_k(0.50);
                acc[slot][2] += summary.quantile_delta_k(0.95);
            }
        }
        for (slot, method) in [
            (0usize, BootstrapMethod::Parametric),
            (1, BootstrapMethod::Stratified),
        ] {
            rows.push(SampleSizeRow {
                cell_size,
                method,
                ci05: acc[slot][0] / n_sim as f64,
                ci50: acc[slot][1] / n_sim as f64,
                ci95: acc[slot][2] / n_sim as f64,
                pseudo_true,
            });
        }
    }
    Ok(rows)
}

/// Per-observation KL divergence between the generator mean and its
/// projection onto the restricted column space, positive when the generator
/// carries the dropped block.
fn pseudo_true_delta_k(
    x: &DesignMatrix,
    spec: &ComparisonSpec,
    mu: &DVector<f64>,
    sigma2: f64,
) -> Result<f64> {
    let kept: Vec<usize> = match spec {
        ComparisonSpec::DropColumns { drop } => {
            (0..x.ncols()).filter(|i| !drop.contains(i)).collect()
        }
        ComparisonSpec::Contrast { .. } => {
            return Err(Error::InvalidSpec(
                "the sample-size study requires a dropped-column comparison".into(),
            ))
        }
    };
    let x1 = x.entries().select_columns(&kept);
    let qr = x1.clone().qr();
    let coeffs = qr
        .r()
        .solve_upper_triangular(&qr.q().tr_mul(mu))
        .ok_or_else(|| Error::Numeric("projection onto the restricted space failed".into()))?;
    let resid = mu - x1 * coeffs;
    Ok(resid.norm_squared() / (2.0 * sigma2) / x.nrows() as f64)
}
