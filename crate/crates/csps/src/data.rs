//! Dataset ingestion, standardization, radial-basis feature construction,
//! synthetic benchmark generators, and cross-validation splitters.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{default_intercept_mean, CoefficientMatrix, ProblemShape};

/// Bidirectional label bookkeeping: `names[i]` is the original label of class
/// index i, with index 0 the reference class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub names: Vec<String>,
}

impl LabelMap {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// A classification dataset: n×(p+1) design with intercept column of ones,
/// class indices in {0, …, c}, and the label map that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub design: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub label_map: LabelMap,
    pub predictor_names: Vec<String>,
}

impl Dataset {
    /// Assemble from a bare predictor matrix (no intercept column).
    pub fn from_predictors(
        predictors: DMatrix<f64>,
        labels: Vec<usize>,
        label_map: LabelMap,
        predictor_names: Vec<String>,
    ) -> Result<Self> {
        let n = predictors.nrows();
        let p = predictors.ncols();
        if p == 0 {
            return Err(Error::Data("need at least one predictor column".into()));
        }
        if labels.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {} design rows",
                labels.len(),
                n
            )));
        }
        if label_map.names.len() < 2 {
            return Err(Error::Data("need at least two classes".into()));
        }
        if predictor_names.len() != p {
            return Err(Error::Shape("predictor name count does not match p".into()));
        }
        let c = label_map.names.len() - 1;
        if labels.iter().any(|&y| y > c) {
            return Err(Error::Data(format!(
                "label index out of range for {} classes",
                c + 1
            )));
        }
        let mut design = DMatrix::zeros(n, p + 1);
        for i in 0..n {
            design[(i, 0)] = 1.0;
            for k in 0..p {
                design[(i, k + 1)] = predictors[(i, k)];
            }
        }
        Ok(Self {
            design,
            labels,
            label_map,
            predictor_names,
        })
    }

    pub fn shape(&self) -> ProblemShape {
        ProblemShape {
            n: self.design.nrows(),
            c: self.label_map.names.len() - 1,
            p: self.design.ncols() - 1,
        }
    }

    /// The predictor block (design without the intercept column).
    pub fn predictors(&self) -> DMatrix<f64> {
        self.design.columns(1, self.design.ncols() - 1).into_owned()
    }

    /// Row subset; the label map (and hence the declared class count) is
    /// preserved even if some classes are absent from the subset.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let p1 = self.design.ncols();
        let mut design = DMatrix::zeros(indices.len(), p1);
        let mut labels = Vec::with_capacity(indices.len());
        for (r, &i) in indices.iter().enumerate() {
            for k in 0..p1 {
                design[(r, k)] = self.design[(i, k)];
            }
            labels.push(self.labels[i]);
        }
        Self {
            design,
            labels,
            label_map: self.label_map.clone(),
            predictor_names: self.predictor_names.clone(),
        }
    }

    /// Keep a single predictor (1-based index), for univariate screening.
    pub fn single_predictor(&self, k: usize) -> Result<Self> {
        let p = self.design.ncols() - 1;
        if k == 0 || k > p {
            return Err(Error::Shape(format!("predictor index {k} out of 1..={p}")));
        }
        let n = self.design.nrows();
        let mut predictors = DMatrix::zeros(n, 1);
        for i in 0..n {
            predictors[(i, 0)] = self.design[(i, k)];
        }
        Dataset::from_predictors(
            predictors,
            self.labels.clone(),
            self.label_map.clone(),
            vec![self.predictor_names[k - 1].clone()],
        )
    }

    /// Write as CSV: predictor columns then the label column, 17 significant
    /// digits on numerics, original label names.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P, label_column: &str) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<&str> = self
            .predictor_names
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(label_column))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.design.nrows() {
            let mut fields: Vec<String> = (1..self.design.ncols())
                .map(|k| format!("{:.16e}", self.design[(i, k)]))
                .collect();
            fields.push(self.label_map.names[self.labels[i]].clone());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Load a headered CSV with one label column and numeric predictors.
/// Classes are indexed deterministically: the reference class maps to 0 and
/// the remaining labels follow in sorted order.
pub fn load_csv<P: AsRef<Path>>(
    path: P,
    label_column: &str,
    reference_class: Option<&str>,
) -> Result<Dataset> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| Error::Data(format!("cannot open {path_str}: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header of {path_str}: {e}")))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Data(format!("label column '{label_column}' not found in {path_str}")))?;
    let predictor_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if predictor_names.is_empty() {
        return Err(Error::Data(format!("{path_str} has no predictor columns")));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let file_row = r + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Csv {
            path: path_str.clone(),
            row: file_row,
            column: "<record>".into(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(predictor_names.len());
        for (idx, field) in record.iter().enumerate() {
            if idx == label_idx {
                if field.trim().is_empty() {
                    return Err(Error::Csv {
                        path: path_str.clone(),
                        row: file_row,
                        column: label_column.into(),
                        message: "missing label".into(),
                    });
                }
                raw_labels.push(field.trim().to_string());
                continue;
            }
            let column = headers.get(idx).unwrap_or("<unknown>").to_string();
            let trimmed = field.trim();
            if trimmed.is_empty() {
                return Err(Error::Csv {
                    path: path_str.clone(),
                    row: file_row,
                    column,
                    message: "missing value".into(),
                });
            }
            let value: f64 = trimmed.parse().map_err(|_| Error::Csv {
                path: path_str.clone(),
                row: file_row,
                column: column.clone(),
                message: format!("'{trimmed}' is not numeric"),
            })?;
            row.push(value);
        }
        if row.len() != predictor_names.len() {
            return Err(Error::Csv {
                path: path_str.clone(),
                row: file_row,
                column: "<record>".into(),
                message: format!(
                    "expected {} fields, found {}",
                    predictor_names.len() + 1,
                    row.len() + 1
                ),
            });
        }
        rows.push(row);
    }

    let mut distinct: Vec<String> = raw_labels.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Data(format!(
            "{path_str} contains a single class; classification needs at least two"
        )));
    }
    let reference = match reference_class {
        Some(r) => {
            if !distinct.iter().any(|d| d == r) {
                return Err(Error::Data(format!(
                    "reference class '{r}' does not occur in {path_str}"
                )));
            }
            r.to_string()
        }
        None => distinct[0].clone(),
    };
    let mut names = vec![reference.clone()];
    names.extend(distinct.into_iter().filter(|d| *d != reference));
    let label_map = LabelMap { names };
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|l| label_map.index_of(l).expect("label seen during scan"))
        .collect();

    let n = rows.len();
    let p = predictor_names.len();
    let predictors = DMatrix::from_fn(n, p, |i, k| rows[i][k]);
    Dataset::from_predictors(predictors, labels, label_map, predictor_names)
}

/// Per-column affine transform fitted on a training sample: columns 1..p get
/// shifted to mean zero and scaled to unit sample SD.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

fn column_mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Standardize the predictor columns; returns the transformed dataset and the
/// fitted parameters (to be reused on held-out data).
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Standardization)> {
    let n = ds.design.nrows();
    if n < 2 {
        return Err(Error::Data("standardization needs at least two rows".into()));
    }
    let p = ds.design.ncols() - 1;
    let mut shift = Vec::with_capacity(p);
    let mut scale = Vec::with_capacity(p);
    for k in 1..=p {
        let col: Vec<f64> = (0..n).map(|i| ds.design[(i, k)]).collect();
        let (mean, sd) = column_mean_sd(&col);
        if !(sd > 0.0) {
            return Err(Error::Data(format!(
                "predictor '{}' is constant; cannot standardize",
                ds.predictor_names[k - 1]
            )));
        }
        shift.push(mean);
        scale.push(sd);
    }
    let s = Standardization { shift, scale };
    let out = apply_standardization(ds, &s)?;
    Ok((out, s))
}

/// Apply previously fitted standardization parameters (training-set shifts
/// and scales) to a dataset; held-out columns need not end up at mean zero.
pub fn apply_standardization(ds: &Dataset, s: &Standardization) -> Result<Dataset> {
    let p = ds.design.ncols() - 1;
    if s.shift.len() != p || s.scale.len() != p {
        return Err(Error::Shape(format!(
            "standardization of width {} does not match {} predictors",
            s.shift.len(),
            p
        )));
    }
    let mut out = ds.clone();
    for k in 1..=p {
        for i in 0..ds.design.nrows() {
            out.design[(i, k)] = (ds.design[(i, k)] - s.shift[k - 1]) / s.scale[k - 1];
        }
    }
    Ok(out)
}

/// Radial-basis feature transform: X_k = a_k + b_k·exp(−‖V − v*_k‖²/(2h²)),
/// with (a_k, b_k) fitted on the construction sample so each feature column
/// has mean zero and unit sample SD there.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfConfig {
    pub knots: Vec<Vec<f64>>,
    pub bandwidth: f64,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl RbfConfig {
    /// Fit the standardizing constants on `covariates` for the given knots.
    /// Returns warnings for duplicate knots (which yield identical columns).
    pub fn fit(covariates: &DMatrix<f64>, knots: Vec<Vec<f64>>, bandwidth: f64) -> Result<(Self, Vec<String>)> {
        if knots.is_empty() {
            return Err(Error::Config("need at least one RBF knot".into()));
        }
        if !(bandwidth > 0.0) {
            return Err(Error::Config(format!(
                "RBF bandwidth must be > 0, got {bandwidth}"
            )));
        }
        let d = covariates.ncols();
        if knots.iter().any(|v| v.len() != d) {
            return Err(Error::Shape(format!(
                "knots must have the covariate dimension {d}"
            )));
        }
        let n = covariates.nrows();
        if n < 2 {
            return Err(Error::Data("RBF fitting needs at least two rows".into()));
        }

        let mut warnings = Vec::new();
        for a in 0..knots.len() {
            for b in a + 1..knots.len() {
                if knots[a] == knots[b] {
                    warnings.push(format!(
                        "knots {a} and {b} are identical; features will be duplicated"
                    ));
                }
            }
        }

        let mut offsets = Vec::with_capacity(knots.len());
        let mut scales = Vec::with_capacity(knots.len());
        for (k, knot) in knots.iter().enumerate() {
            let raw: Vec<f64> = (0..n)
                .map(|i| raw_rbf(covariates, i, knot, bandwidth))
                .collect();
            let (mean, sd) = column_mean_sd(&raw);
            if !(sd > 1e-300) {
                return Err(Error::Data(format!(
                    "RBF feature {k} has zero variance on the construction sample"
                )));
            }
            scales.push(1.0 / sd);
            offsets.push(-mean / sd);
        }
        Ok((
            Self {
                knots,
                bandwidth,
                offsets,
                scales,
            },
            warnings,
        ))
    }
}

#[inline]
fn raw_rbf(covariates: &DMatrix<f64>, row: usize, knot: &[f64], h: f64) -> f64 {
    let mut d2 = 0.0;
    for (k, &v) in knot.iter().enumerate() {
        let diff = covariates[(row, k)] - v;
        d2 += diff * diff;
    }
    (-d2 / (2.0 * h * h)).exp()
}

/// Evaluate the fitted transform on a covariate matrix.
pub fn rbf_features(covariates: &DMatrix<f64>, cfg: &RbfConfig) -> Result<DMatrix<f64>> {
    let d = cfg.knots[0].len();
    if covariates.ncols() != d {
        return Err(Error::Shape(format!(
            "covariates have {} columns, RBF transform expects {d}",
            covariates.ncols()
        )));
    }
    let n = covariates.nrows();
    let p = cfg.knots.len();
    let mut out = DMatrix::zeros(n, p);
    for k in 0..p {
        for i in 0..n {
            out[(i, k)] =
                cfg.offsets[k] + cfg.scales[k] * raw_rbf(covariates, i, &cfg.knots[k], cfg.bandwidth);
        }
    }
    Ok(out)
}

/// Draw `count` knot vectors as distinct random rows of the covariate matrix.
pub fn select_knots<R: Rng + ?Sized>(
    covariates: &DMatrix<f64>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let n = covariates.nrows();
    if count == 0 || count > n {
        return Err(Error::Config(format!(
            "cannot select {count} knots from {n} rows"
        )));
    }
    let picks = sample_indices(rng, n, count);
    Ok(picks
        .iter()
        .map(|i| (0..covariates.ncols()).map(|k| covariates[(i, k)]).collect())
        .collect())
}

/// Labels drawn through the latent rule: Z ~ N(βx, I_c) per unit, the largest
/// positive propensity wins, all-negative yields class 0.
pub fn generate_labels(design: &DMatrix<f64>, beta: &CoefficientMatrix, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_labels_with(design, beta, &mut rng)
}

pub(crate) fn generate_labels_with<R: Rng + ?Sized>(
    design: &DMatrix<f64>,
    beta: &CoefficientMatrix,
    rng: &mut R,
) -> Vec<usize> {
    let n = design.nrows();
    let c = beta.classes();
    assert_eq!(design.ncols(), beta.predictors() + 1);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = 0usize;
        let mut best_z = f64::NEG_INFINITY;
        for j in 0..c {
            let mut mean = 0.0;
            for k in 0..design.ncols() {
                mean += beta.get(j, k) * design[(i, k)];
            }
            let z = mean + rng.sample::<f64, _>(StandardNormal);
            if z > best_z {
                best_z = z;
                best = j + 1;
            }
        }
        labels.push(if best_z > 0.0 { best } else { 0 });
    }
    labels
}

fn scenario_names(c: usize, p: usize) -> (LabelMap, Vec<String>) {
    let label_map = LabelMap {
        names: (0..=c).map(|j| j.to_string()).collect(),
    };
    let names = (1..=p).map(|k| format!("x{k}")).collect();
    (label_map, names)
}

/// Correlation matrix of the 15 synthetic predictors: an equicorrelated block,
/// a noisy copy of it, and three independent tails.
fn scenario_correlation() -> DMatrix<f64> {
    let mut sigma = DMatrix::identity(15, 15);
    for a in 0..6 {
        for b in 0..6 {
            if a != b {
                sigma[(a, b)] = 0.5;
            }
        }
    }
    for a in 0..6 {
        for b in 0..6 {
            // Cov(X_{6+a}, X_b) = 0.8·Cov(X_a, X_b)
            let cross = 0.8 * if a == b { 1.0 } else { 0.5 };
            sigma[(6 + a, b)] = cross;
            sigma[(b, 6 + a)] = cross;
            // Cov(X_{6+a}, X_{6+b}) = 0.64·Cov(X_a, X_b) + 0.36·δ
            sigma[(6 + a, 6 + b)] = if a == b { 1.0 } else { 0.64 * 0.5 };
        }
    }
    sigma
}

fn simulate_covariates(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let sigma = scenario_correlation();
    let chol = nalgebra::Cholesky::new(sigma).expect("scenario correlation matrix is SPD");
    let l = chol.l();
    let mut x = DMatrix::zeros(n, 15);
    for i in 0..n {
        let eps = DVector::from_fn(15, |_, _| rng.sample::<f64, _>(StandardNormal));
        let row = &l * eps;
        for k in 0..15 {
            x[(i, k)] = row[k];
        }
    }
    x
}

fn scenario1_beta() -> CoefficientMatrix {
    let mut beta = CoefficientMatrix::zeros(5, 15);
    let mu0 = default_intercept_mean(5);
    for r in 0..5 {
        beta.set(r, 0, mu0);
        beta.set(r, r + 1, 0.75);
        beta.set(r, r + 2, 0.5);
    }
    beta
}

fn scenario2_beta() -> CoefficientMatrix {
    let mut beta = CoefficientMatrix::zeros(5, 15);
    let mu0 = default_intercept_mean(5);
    for r in 0..5 {
        beta.set(r, 0, mu0);
        let class = r + 1; // 1-based class index
        for k in 1..=6usize {
            let magnitude = if k <= 3 { 0.75 } else { 0.5 };
            // Bit (k−1) of the class index flips the sign of column k, giving
            // each row a distinct sign pattern.
            let sign = if class >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 };
            beta.set(r, k, sign * magnitude);
        }
    }
    beta
}

fn simulate_scenario(beta: CoefficientMatrix, seed: u64) -> (Dataset, CoefficientMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 250;
    let covariates = simulate_covariates(n, &mut rng);
    let (label_map, names) = scenario_names(5, 15);
    let mut ds = Dataset::from_predictors(covariates, vec![0; n], label_map, names)
        .expect("scenario dimensions are valid");
    ds.labels = generate_labels_with(&ds.design, &beta, &mut rng);
    (ds, beta)
}

/// First synthetic benchmark: 6 classes, 15 correlated predictors, two active
/// coefficients per class in a staircase pattern.
pub fn simulate_scenario1(seed: u64) -> (Dataset, CoefficientMatrix) {
    simulate_scenario(scenario1_beta(), seed)
}

/// Second synthetic benchmark: coefficient magnitudes constant within columns
/// (0.75 / 0.5 / zero), rows distinguished only by sign patterns — the layout
/// favorable to whole-column selection.
pub fn simulate_scenario2(seed: u64) -> (Dataset, CoefficientMatrix) {
    simulate_scenario(scenario2_beta(), seed)
}

/// Disjoint, exhaustive, size-balanced (within one) k-fold partition of 0..n.
pub fn kfold_splits(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    shuffle(&mut indices, &mut rng);
    let mut folds = vec![Vec::new(); k];
    for (pos, idx) in indices.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Leave-one-out partition.
pub fn loocv_splits(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| vec![i]).collect()
}

/// One random split into (train, validation) with `fraction` of the units in
/// the training side (rounded to the nearest count).
pub fn train_test_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0,1), got {fraction}"
        )));
    }
    let train_size = (n as f64 * fraction).round() as usize;
    if train_size == 0 || train_size == n {
        return Err(Error::Config(format!(
            "fraction {fraction} leaves an empty side of the split for n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    shuffle(&mut indices, &mut rng);
    let mut train: Vec<usize> = indices[..train_size].to_vec();
    let mut test: Vec<usize> = indices[train_size..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn shuffle<R: Rng + ?Sized>(values: &mut [usize], rng: &mut R) {
    for i in (1..values.len()).rev() {
        let j = rng.random_range(0..=i);
        values.swap(i, j);
    }
}
