//! Principal component analysis over sparse count rows.
//!
//! The eigenproblem is solved on whichever side of the centered data matrix is
//! smaller: the d x d covariance when there are fewer features than distinct
//! rows, otherwise the Gram matrix of the distinct rows. Duplicate rows are
//! folded into weights first, which is exact and matters for command corpora
//! where the same command appears many times.

mod eigen;

use std::collections::HashMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::featurize::FeatureVector;
use crate::{Error, Result};

/// Anything that can be read as a sparse row of length `dim`.
pub trait Sample {
    fn dim(&self) -> usize;
    /// Non-zero entries in increasing index order.
    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_;
}

impl Sample for FeatureVector {
    fn dim(&self) -> usize {
        FeatureVector::dim(self)
    }

    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.iter().map(|(i, c)| (i, f64::from(c)))
    }
}

impl Sample for [f64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.iter().copied().enumerate().filter(|e| e.1 != 0.0)
    }
}

impl Sample for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.as_slice().entries()
    }
}

/// A sparse real-valued row: count features with dense extras appended.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseRow {
    /// `features` followed by `extra` dense columns.
    pub fn from_features(features: &FeatureVector, extra: &[f64]) -> Self {
        let t = features.dim();
        let mut row = SparseRow {
            dim: t + extra.len(),
            indices: Vec::with_capacity(features.nnz() + extra.len()),
            values: Vec::with_capacity(features.nnz() + extra.len()),
        };
        for (i, c) in features.iter() {
            row.indices.push(i as u32);
            row.values.push(f64::from(c));
        }
        for (k, &v) in extra.iter().enumerate() {
            if v != 0.0 {
                row.indices.push((t + k) as u32);
                row.values.push(v);
            }
        }
        row
    }
}

impl Sample for SparseRow {
    fn dim(&self) -> usize {
        self.dim
    }

    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaConfig {
    /// Fraction of total variance the kept components must reach, in (0, 1].
    pub variance_target: f64,
    /// Divide each feature by its standard deviation before the decomposition.
    pub standardize: bool,
    /// Uniformly subsample the fit set above this many rows.
    pub max_fit_samples: Option<usize>,
    pub seed: u64,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig {
            variance_target: 0.999,
            standardize: false,
            max_fit_samples: None,
            seed: 0,
        }
    }
}

impl PcaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return Err(Error::config("variance_target", "must lie in (0, 1]"));
        }
        if self.max_fit_samples.is_some_and(|m| m < 2) {
            return Err(Error::config("max_fit_samples", "must be >= 2"));
        }
        Ok(())
    }
}

/// Fitted projection. Immutable; `transform` is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// Per-feature multiplier applied after centering (1/std) when standardizing.
    scale: Option<Vec<f64>>,
    /// q x d, row-major, rows orthonormal.
    components: Vec<f64>,
    explained_variance: Vec<f64>,
    total_variance: f64,
    variance_target: f64,
    /// `components * scale`, row-major; folded so transform touches only non-zeros.
    scaled_components: Vec<f64>,
    /// `scaled_components * mean`.
    projected_mean: Vec<f64>,
}

impl PcaModel {
    /// Reassembles a model from its persisted parts, checking shapes.
    pub fn from_parts(
        mean: Vec<f64>,
        scale: Option<Vec<f64>>,
        components: Vec<f64>,
        explained_variance: Vec<f64>,
        total_variance: f64,
        variance_target: f64,
    ) -> Result<Self> {
        let d = mean.len();
        let q = explained_variance.len();
        if d == 0 || q == 0 || components.len() != q * d || scale.as_ref().is_some_and(|s| s.len() != d) {
            return Err(Error::Format(format!(
                "PCA shapes inconsistent: d={d}, q={q}, components={}",
                components.len()
            )));
        }
        let all_finite = mean
            .iter()
            .chain(&components)
            .chain(&explained_variance)
            .chain(scale.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite || !total_variance.is_finite() {
            return Err(Error::Format("PCA parameters are not finite".into()));
        }
        let mut scaled_components = components.clone();
        if let Some(s) = &scale {
            for row in scaled_components.chunks_mut(d) {
                row.iter_mut().zip(s).for_each(|(c, s)| *c *= s);
            }
        }
        let projected_mean = scaled_components
            .chunks(d)
            .map(|row| row.iter().zip(&mean).map(|(c, m)| c * m).sum())
            .collect();
        Ok(PcaModel {
            mean,
            scale,
            components,
            explained_variance,
            total_variance,
            variance_target,
            scaled_components,
            projected_mean,
        })
    }

    /// Input dimension d.
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of kept components q.
    pub fn n_components(&self) -> usize {
        self.explained_variance.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> Option<&[f64]> {
        self.scale.as_deref()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &[f64] {
        let d = self.input_dim();
        &self.components[k * d..(k + 1) * d]
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    pub fn variance_target(&self) -> f64 {
        self.variance_target
    }

    pub fn retained_fraction(&self) -> f64 {
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }

    /// `components . scale . (x - mean)`.
    pub fn transform<S: Sample + ?Sized>(&self, x: &S) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if x.dim() != d {
            return Err(Error::Contract(format!("expected dimension {d}, got {}", x.dim())));
        }
        let mut out: Vec<f64> = self.projected_mean.iter().map(|m| -m).collect();
        for (j, v) in x.entries() {
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.scaled_components[k * d + j] * v;
            }
        }
        Ok(out)
    }

    /// Maps projected coordinates back to input space: `mean + scale^-1 . components^T . z`.
    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (d, q) = (self.input_dim(), self.n_components());
        if z.len() != q {
            return Err(Error::Contract(format!("expected {q} coordinates, got {}", z.len())));
        }
        let mut x = vec![0.0; d];
        for (k, &zk) in z.iter().enumerate() {
            for (xj, c) in x.iter_mut().zip(self.component(k)) {
                *xj += zk * c;
            }
        }
        for j in 0..d {
            if let Some(s) = &self.scale {
                x[j] /= s[j];
            }
            x[j] += self.mean[j];
        }
        Ok(x)
    }
}

struct Distinct {
    /// Distinct rows as (index, value) lists.
    rows: Vec<Vec<(usize, f64)>>,
    weights: Vec<f64>,
}

fn distinct_rows<S: Sample>(data: &[&S]) -> Distinct {
    let mut seen: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
    let mut rows = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for x in data {
        let entries: Vec<(usize, f64)> = x.entries().collect();
        let key = entries.iter().map(|&(i, v)| (i, v.to_bits())).collect();
        match seen.get(&key) {
            Some(&r) => weights[r] += 1.0,
            None => {
                seen.insert(key, rows.len());
                rows.push(entries);
                weights.push(1.0);
            }
        }
    }
    Distinct { rows, weights }
}

/// Fits PCA keeping the fewest components whose variance reaches `cfg.variance_target`.
pub fn fit_pca<S: Sample>(data: &[S], cfg: &PcaConfig) -> Result<PcaModel> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 samples, got {}", data.len())));
    }
    let d = data[0].dim();
    if d == 0 {
        return Err(Error::Fit("zero-dimensional input".into()));
    }
    if let Some(bad) = data.iter().position(|x| x.dim() != d) {
        return Err(Error::Fit(format!(
            "sample {bad} has dimension {}, expected {d}",
            data[bad].dim()
        )));
    }

    let mut chosen: Vec<&S> = data.iter().collect();
    if let Some(max) = cfg.max_fit_samples.filter(|&m| m < data.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut idx = index::sample(&mut rng, data.len(), max).into_vec();
        idx.sort_unstable();
        chosen = idx.into_iter().map(|i| &data[i]).collect();
    }
    let n = chosen.len() as f64;
    let Distinct { rows, weights } = distinct_rows(&chosen);

    let mut mean = vec![0.0; d];
    for (row, w) in rows.iter().zip(&weights) {
        for &(j, v) in row {
            mean[j] += w * v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let scale = cfg.standardize.then(|| {
        let mut sq = vec![0.0; d];
        for (row, w) in rows.iter().zip(&weights) {
            for &(j, v) in row {
                let c = v - mean[j];
                // zero entries contribute mean^2 each; corrected below
                sq[j] += w * (c * c - mean[j] * mean[j]);
            }
        }
        sq.iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s + n * m * m) / (n - 1.0);
                if var > 1e-24 {
                    1.0 / var.sqrt()
                } else {
                    1.0
                }
            })
            .collect::<Vec<f64>>()
    });

    let decomposition = if d <= rows.len() {
        covariance_side(&rows, &weights, &mean, scale.as_deref(), n)?
    } else {
        gram_side(&rows, &weights, &mean, scale.as_deref(), n)?
    };
    let Decomposition {
        eigenvalues,
        mut components,
        total,
    } = decomposition;

    if total.is_nan() || total <= 0.0 || !total.is_finite() {
        return Err(Error::Fit("training data has zero total variance".into()));
    }

    let needed = cfg.variance_target * total * (1.0 - 1e-12);
    let mut q = 0;
    let mut acc = 0.0;
    while q < eigenvalues.len() && eigenvalues[q] > 0.0 {
        acc += eigenvalues[q];
        q += 1;
        if acc >= needed {
            break;
        }
    }
    let q = q.max(1);
    components.truncate(q * d);
    for row in components.chunks_mut(d) {
        fix_sign(row);
    }
    let explained = eigenvalues[..q].iter().map(|&l| l.max(0.0)).collect();
    PcaModel::from_parts(mean, scale, components, explained, total, cfg.variance_target)
}

/// Eigenpairs in descending order, components row-major (k x d).
struct Decomposition {
    eigenvalues: Vec<f64>,
    components: Vec<f64>,
    total: f64,
}

fn covariance_side(
    rows: &[Vec<(usize, f64)>],
    weights: &[f64],
    mean: &[f64],
    scale: Option<&[f64]>,
    n: f64,
) -> Result<Decomposition> {
    let d = mean.len();
    let u = rows.len();
    // Y: u x d, row i = sqrt(w_i) * scale . (x_i - mean)
    let mut y = vec![0.0; u * d];
    for (i, (row, w)) in rows.iter().zip(weights).enumerate() {
        let yi = &mut y[i * d..(i + 1) * d];
        yi.iter_mut().zip(mean).for_each(|(v, m)| *v = -m);
        for &(j, v) in row {
            yi[j] += v;
        }
        let sw = w.sqrt();
        for (j, v) in yi.iter_mut().enumerate() {
            *v *= sw * scale.map_or(1.0, |s| s[j]);
        }
    }
    let cov = eigen::gram_transpose(&y, u, d, 1.0 / (n - 1.0));
    let total = (0..d).map(|j| cov[j * d + j]).sum();
    let (values, vectors) = eigen::symmetric_eigen(cov, d)?;
    let components = vectors.into_iter().flatten().collect();
    Ok(Decomposition {
        eigenvalues: values,
        components,
        total,
    })
}

fn gram_side(
    rows: &[Vec<(usize, f64)>],
    weights: &[f64],
    mean: &[f64],
    scale: Option<&[f64]>,
    n: f64,
) -> Result<Decomposition> {
    let d = mean.len();
    let u = rows.len();
    let sc = |j: usize| scale.map_or(1.0, |s| s[j]);
    // a_i = scale . x_i (sparse), m = scale . mean (dense); z_i = a_i - m
    let a: Vec<Vec<(usize, f64)>> = rows
        .iter()
        .map(|r| r.iter().map(|&(j, v)| (j, v * sc(j))).collect())
        .collect();
    let m: Vec<f64> = (0..d).map(|j| mean[j] * sc(j)).collect();
    let mm: f64 = m.iter().map(|v| v * v).sum();
    let am: Vec<f64> = a.iter().map(|r| r.iter().map(|&(j, v)| v * m[j]).sum()).collect();

    let mut k = vec![0.0; u * u];
    let mut dense = vec![0.0; d];
    let inv = 1.0 / (n - 1.0);
    for i in 0..u {
        for &(j, v) in &a[i] {
            dense[j] = v;
        }
        for jx in i..u {
            let dot: f64 = a[jx].iter().map(|&(j, v)| v * dense[j]).sum();
            let zz = dot - am[i] - am[jx] + mm;
            let val = (weights[i] * weights[jx]).sqrt() * zz * inv;
            k[i * u + jx] = val;
            k[jx * u + i] = val;
        }
        for &(j, _) in &a[i] {
            dense[j] = 0.0;
        }
    }
    let total = (0..u).map(|i| k[i * u + i]).sum();
    let (values, vectors) = eigen::symmetric_eigen(k, u)?;

    // component_k = Y^T v_k / sqrt((n-1) lambda_k), with Y rows sqrt(w_i) z_i
    let mut components = Vec::new();
    let mut kept = Vec::new();
    for (lambda, v) in values.into_iter().zip(vectors) {
        if lambda <= 0.0 {
            break;
        }
        let sigma = (lambda * (n - 1.0)).sqrt();
        let mut c = vec![0.0; d];
        let mut coef_sum = 0.0;
        for i in 0..u {
            let coef = weights[i].sqrt() * v[i];
            coef_sum += coef;
            for &(j, val) in &a[i] {
                c[j] += coef * val;
            }
        }
        for j in 0..d {
            c[j] = (c[j] - coef_sum * m[j]) / sigma;
        }
        components.extend(c);
        kept.push(lambda);
    }
    Ok(Decomposition {
        eigenvalues: kept,
        components,
        total,
    })
}

/// Makes the largest-magnitude entry non-negative (first one on ties).
fn fix_sign(row: &mut [f64]) {
    let mut best = 0;
    for (j, v) in row.iter().enumerate() {
        if v.abs() > row[best].abs() {
            best = j;
        }
    }
    if row[best] < 0.0 {
        row.iter_mut().for_each(|v| *v = -*v);
    }
}

#[cfg(test)]
mod tests;
