//! CSV ingestion and design-matrix construction.
//!
//! Factor columns are encoded with the leave-one-column-out convention:
//! levels are ordered by first appearance in the file and the last level of
//! each factor is the reference (dropped) column. Column labels follow the
//! pattern `<factor>_<level>`, covariates keep their header names, and
//! interaction products are labelled `<a>_<la>:<b>_<lb>`.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};

use evlm_core::{CellLayout, ComparisonSpec, DesignMatrix, ResponseVector};

/// A column-labelled rectangular table with one numeric response, factor
/// (string-valued) columns, and numeric covariate columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub response_name: String,
    pub response: Vec<f64>,
    /// (name, per-row level strings)
    pub factors: Vec<(String, Vec<String>)>,
    /// (name, per-row values)
    pub covariates: Vec<(String, Vec<f64>)>,
    pub n_rows: usize,
}

/// How the nested comparison is specified on the command line.
#[derive(Debug, Clone)]
pub enum TestSpec {
    /// Drop the interaction block of the first two factors.
    Interaction,
    /// Drop the named design columns.
    Drop(Vec<String>),
    /// Linear contrasts read from a CSV file (L matrix columns then h).
    ContrastFile(std::path::PathBuf),
}

/// Everything a command needs to run a comparison on loaded data.
pub struct ModelInputs {
    pub design: DesignMatrix,
    pub response: ResponseVector,
    pub layout: CellLayout,
    pub spec: ComparisonSpec,
}

impl Dataset {
    /// Reads and validates the used columns of a CSV file.
    pub fn load(
        path: &Path,
        response: &str,
        factor_names: &[String],
        covariate_names: &[String],
    ) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("cannot open data file {}", path.display()))?;
        let headers: Vec<String> = reader
            .headers()
            .context("data file has no header row")?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let col_index = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| anyhow!("column '{name}' not found; file has columns {headers:?}"))
        };
        let resp_idx = col_index(response)?;
        let factor_idx: Vec<usize> =
            factor_names.iter().map(|f| col_index(f)).collect::<Result<_>>()?;
        let cov_idx: Vec<usize> =
            covariate_names.iter().map(|c| col_index(c)).collect::<Result<_>>()?;

        let mut resp = Vec::new();
        let mut factors: Vec<Vec<String>> = vec![Vec::new(); factor_idx.len()];
        let mut covs: Vec<Vec<f64>> = vec![Vec::new(); cov_idx.len()];
        for (row_no, record) in reader.records().enumerate() {
            let record = record.with_context(|| format!("malformed CSV record {}", row_no + 2))?;
            let get = |idx: usize, name: &str| -> Result<String> {
                let v = record
                    .get(idx)
                    .ok_or_else(|| anyhow!("row {} is too short", row_no + 2))?;
                if v.is_empty() {
                    bail!("missing value in column '{name}' at row {}", row_no + 2);
                }
                Ok(v.to_string())
            };
            let rv = get(resp_idx, response)?;
            resp.push(rv.parse::<f64>().map_err(|_| {
                anyhow!(
                    "non-numeric response '{rv}' in column '{response}' at row {}",
                    row_no + 2
                )
            })?);
            for (k, &idx) in factor_idx.iter().enumerate() {
                factors[k].push(get(idx, &factor_names[k])?);
            }
            for (k, &idx) in cov_idx.iter().enumerate() {
                let v = get(idx, &covariate_names[k])?;
                covs[k].push(v.parse::<f64>().map_err(|_| {
                    anyhow!(
                        "non-numeric covariate '{v}' in column '{}' at row {}",
                        covariate_names[k],
                        row_no + 2
                    )
                })?);
            }
        }
        if resp.len() < 2 {
            bail!("data file must contain at least 2 rows, found {}", resp.len());
        }
        Ok(Dataset {
            response_name: response.to_string(),
            n_rows: resp.len(),
            response: resp,
            factors: factor_names.iter().cloned().zip(factors).collect(),
            covariates: covariate_names.iter().cloned().zip(covs).collect(),
        })
    }

    /// Distinct levels of a factor in first-appearance order.
    fn levels(values: &[String]) -> Vec<String> {
        let mut seen = Vec::new();
        for v in values {
            if !seen.iter().any(|s| s == v) {
                seen.push(v.clone());
            }
        }
        seen
    }
}

/// Loads a CSV file and builds the design matrix, response, cell layout, and
/// comparison spec described by the configuration.
pub fn load_csv(
    path: &Path,
    response: &str,
    factor_names: &[String],
    covariate_names: &[String],
    test: &TestSpec,
) -> Result<ModelInputs> {
    let ds = Dataset::load(path, response, factor_names, covariate_names)?;
    build_model(&ds, test)
}

/// Builds the model inputs from a parsed dataset.
pub fn build_model(ds: &Dataset, test: &TestSpec) -> Result<ModelInputs> {
    let n = ds.n_rows;

    // Factor levels, first-appearance order; the last level is the reference.
    let mut level_sets: Vec<Vec<String>> = Vec::new();
    for (name, values) in &ds.factors {
        let levels = Dataset::levels(values);
        if levels.len() < 2 {
            bail!("factor '{name}' has a single level '{}'; nothing to encode", levels[0]);
        }
        level_sets.push(levels);
    }

    let mut labels: Vec<String> = vec!["intercept".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut factor_cols: Vec<Vec<usize>> = Vec::new(); // design columns per factor

    for (k, (name, values)) in ds.factors.iter().enumerate() {
        let levels = &level_sets[k];
        let mut cols = Vec::new();
        for level in &levels[..levels.len() - 1] {
            cols.push(columns.len());
            labels.push(format!("{name}_{level}"));
            columns.push(values.iter().map(|v| if v == level { 1.0 } else { 0.0 }).collect());
        }
        factor_cols.push(cols);
    }
    for (name, values) in &ds.covariates {
        labels.push(name.clone());
        columns.push(values.clone());
    }

    // Interaction block between the two factors. Built for the interaction
    // test, and for drop/contrast specs that reference `a:b` columns.
    let mut interaction_cols = Vec::new();
    if needs_interactions(test)? {
        if ds.factors.len() != 2 {
            bail!(
                "an interaction comparison needs exactly 2 factors, got {}",
                ds.factors.len()
            );
        }
        let (fa, fb) = (&factor_cols[0], &factor_cols[1]);
        for &ca in fa {
            for &cb in fb {
                interaction_cols.push(columns.len());
                labels.push(format!("{}:{}", labels[ca].clone(), labels[cb].clone()));
                let prod = columns[ca]
                    .iter()
                    .zip(columns[cb].iter())
                    .map(|(a, b)| a * b)
                    .collect();
                columns.push(prod);
            }
        }
    }

    let r = columns.len();
    let mut entries = DMatrix::zeros(n, r);
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            entries[(i, j)] = v;
        }
    }
    let design = DesignMatrix::new(entries, labels.clone())
        .context("the encoded design matrix is not usable")?;
    let response = ResponseVector::from_slice(&ds.response)?;

    // Cells are the observed combinations of all factor levels, numbered in
    // first-appearance order of the combination.
    let mut cell_of: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut assignments = Vec::with_capacity(n);
    for i in 0..n {
        let key: Vec<usize> = ds
            .factors
            .iter()
            .enumerate()
            .map(|(k, (_, values))| {
                level_sets[k].iter().position(|l| *l == values[i]).unwrap()
            })
            .collect();
        let next = cell_of.len();
        let cell = *cell_of.entry(key).or_insert(next);
        assignments.push(cell);
    }
    let layout = CellLayout::new(assignments, cell_of.len().max(1))?;

    let spec = match test {
        TestSpec::Interaction => ComparisonSpec::drop_columns(interaction_cols),
        TestSpec::Drop(names) => {
            let mut drop = Vec::new();
            for name in names {
                let idx = labels
                    .iter()
                    .position(|l| l == name)
                    .ok_or_else(|| anyhow!("design has no column '{name}'; columns: {labels:?}"))?;
                drop.push(idx);
            }
            ComparisonSpec::drop_columns(drop)
        }
        TestSpec::ContrastFile(path) => read_contrast_file(path, &labels)?,
    };

    Ok(ModelInputs { design, response, layout, spec })
}

/// Whether the test specification requires the two-factor interaction block.
fn needs_interactions(test: &TestSpec) -> Result<bool> {
    Ok(match test {
        TestSpec::Interaction => true,
        TestSpec::Drop(names) => names.iter().any(|n| n.contains(':')),
        TestSpec::ContrastFile(path) => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .trim(csv::Trim::All)
                .from_path(path)
                .with_context(|| format!("cannot open contrast file {}", path.display()))?;
            reader.headers()?.iter().any(|h| h.contains(':'))
        }
    })
}

/// Reads a contrast specification: q rows, one column per design column (the
/// L matrix) plus a final `h` column, with a header naming them.
fn read_contrast_file(path: &Path, labels: &[String]) -> Result<ComparisonSpec> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open contrast file {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let expected: Vec<String> = labels.iter().cloned().chain(["h".to_string()]).collect();
    if headers != expected {
        bail!(
            "contrast file header must name the design columns then 'h'; \
             expected {expected:?}, found {headers:?}"
        );
    }
    let r = labels.len();
    let mut l_rows: Vec<Vec<f64>> = Vec::new();
    let mut h = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != r + 1 {
            bail!(
                "contrast row {} has {} fields, expected {}",
                row_no + 2,
                record.len(),
                r + 1
            );
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| anyhow!("non-numeric contrast entry '{s}' at row {}", row_no + 2))
        };
        let mut row = Vec::with_capacity(r);
        for j in 0..r {
            row.push(parse(&record[j])?);
        }
        h.push(parse(&record[r])?);
        l_rows.push(row);
    }
    if l_rows.is_empty() {
        bail!("contrast file contains no rows");
    }
    let q = l_rows.len();
    let mut l = DMatrix::zeros(q, r);
    for (i, row) in l_rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            l[(i, j)] = v;
        }
    }
    Ok(ComparisonSpec::contrast(l, DVector::from_row_slice(&h)))
}
