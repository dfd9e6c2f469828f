//! Low-dimensional embeddings of correlation samples.
//!
//! The flat coordinate spaces make principal geodesic analysis exact PCA on
//! mapped coordinates, with an explicit inverse back to valid correlation
//! matrices. Classical MDS, SMACOF, and t-SNE consume distance matrices (of
//! the samples under a flat geometry, or precomputed under any metric); the
//! shallow autoencoder trains on coordinate vectors directly.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{self, CoordinateSet, FlatGeometry, GeometryError};
use crate::linalg;
use crate::tol;
use crate::types::{CorrelationMatrix, SampleSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DimredError {
    #[error("embedding dimension {d} must be in 1..={max}")]
    BadDimension { d: usize, max: usize },
    #[error("perplexity {perplexity} must be positive and below the sample count {m}")]
    BadPerplexity { perplexity: f64, m: usize },
    #[error("distance matrix must be square, symmetric, finite, nonnegative, zero-diagonal")]
    BadDistanceMatrix,
    #[error("{method} embeds coordinate vectors and needs samples, not a distance matrix")]
    NeedsSamples { method: &'static str },
    #[error("autoencoder hidden width {width} must be at least the bottleneck size {d}")]
    BadHiddenWidth { width: usize, d: usize },
    #[error("score vector length {got} does not match component count {expected}")]
    BadScoreLength { got: usize, expected: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMethod {
    Pga,
    Cmds,
    Mmds,
    Tsne,
    Ae,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedFlag {
    /// Fewer informative directions than requested; components truncated.
    RankDeficient,
    /// Iteration cap reached before the convergence criterion.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    /// One embedded point per input row, in input order (m x d).
    pub points: DMatrix<f64>,
    pub method: EmbeddingMethod,
    /// Method-specific objective at the returned configuration: residual
    /// variance (PGA), dropped eigenvalue mass (CMDS), raw stress (MMDS),
    /// KL divergence (TSNE), reconstruction MSE (AE).
    pub stress_or_loss: f64,
    /// Fraction of coordinate variance per component; PGA only.
    pub explained_variance: Option<Vec<f64>>,
    pub flags: Vec<EmbedFlag>,
}

/// Input to the transductive embeddings: samples (distances computed under
/// the chosen flat geometry) or any precomputed distance matrix.
#[derive(Debug, Clone, Copy)]
pub enum EmbedInput<'a> {
    Samples(&'a SampleSet),
    Distances(&'a DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedOptions {
    pub seed: u64,
    /// Target perplexity of the conditional neighbor distributions (t-SNE).
    pub perplexity: f64,
    pub tsne_iterations: usize,
    pub tsne_learning_rate: f64,
    /// Hidden layer width of the autoencoder.
    pub hidden_width: usize,
    pub ae_max_epochs: usize,
    pub ae_learning_rate: f64,
    pub ae_batch: usize,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            perplexity: 10.0,
            tsne_iterations: 500,
            tsne_learning_rate: 100.0,
            hidden_width: 32,
            ae_max_epochs: 2000,
            ae_learning_rate: 0.01,
            ae_batch: 16,
        }
    }
}

/// Principal directions in coordinate space with an explicit inverse map.
#[derive(Debug, Clone, PartialEq)]
pub struct PgaModel {
    geometry: FlatGeometry,
    matrix_dim: usize,
    base: DVector<f64>,
    /// Orthonormal columns, one per retained component.
    directions: DMatrix<f64>,
    explained_variance: Vec<f64>,
    rank_deficient: bool,
}

impl PgaModel {
    pub fn geometry(&self) -> FlatGeometry {
        self.geometry
    }

    pub fn components(&self) -> usize {
        self.directions.ncols()
    }

    pub fn directions(&self) -> &DMatrix<f64> {
        &self.directions
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    /// Out-of-sample projection onto the principal directions.
    pub fn embed_point(&self, c: &CorrelationMatrix) -> Result<DVector<f64>, DimredError> {
        let x = geometry::to_coords(self.geometry, c)?;
        Ok(self.directions.tr_mul(&(x - &self.base)))
    }

    /// Inverse map: base + score-weighted directions, back through the
    /// coordinate chart. Valid for any real scores.
    pub fn reconstruct(&self, scores: &DVector<f64>) -> Result<CorrelationMatrix, DimredError> {
        if scores.len() != self.components() {
            return Err(DimredError::BadScoreLength {
                got: scores.len(),
                expected: self.components(),
            });
        }
        let x = &self.base + &self.directions * scores;
        Ok(geometry::from_coords(self.geometry, &x, self.matrix_dim)?)
    }
}

pub fn pga(
    s: &SampleSet,
    d: usize,
    geometry: FlatGeometry,
) -> Result<(PgaModel, EmbeddingResult), DimredError> {
    let coords = CoordinateSet::from_samples(s, geometry)?;
    let m = coords.len();
    let max = (m - 1).min(coords.dim()).max(1);
    if d == 0 || d > max {
        return Err(DimredError::BadDimension { d, max });
    }
    let mut centered = coords.coords().clone();
    let mean = {
        let mut mu = DVector::zeros(coords.dim());
        let mut row = vec![0.0; m];
        for i in 0..coords.dim() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = centered[(i, j)];
            }
            mu[i] = linalg::pairwise_sum(&row) / m as f64;
        }
        mu
    };
    for j in 0..m {
        let mut col = centered.column_mut(j);
        col -= &mean;
    }
    let svd = centered.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let sigma = svd.singular_values;
    let rank = sigma
        .iter()
        .filter(|&&v| v > tol::RANK_SINGULAR_VALUE_TOL)
        .count();
    let keep = d.min(rank.max(1));
    let rank_deficient = keep < d;
    let directions = u.columns(0, keep).into_owned();
    let total: f64 = sigma.iter().map(|v| v * v).sum();
    let explained: Vec<f64> = (0..keep)
        .map(|j| {
            if total > 0.0 {
                sigma[j] * sigma[j] / total
            } else {
                0.0
            }
        })
        .collect();
    let points = centered.tr_mul(&directions);
    let residual: f64 = (keep..sigma.len()).map(|j| sigma[j] * sigma[j]).sum::<f64>() / m as f64;
    let mut flags = Vec::new();
    if rank_deficient {
        flags.push(EmbedFlag::RankDeficient);
    }
    let model = PgaModel {
        geometry,
        matrix_dim: coords.matrix_dim(),
        base: mean,
        directions,
        explained_variance: explained.clone(),
        rank_deficient,
    };
    let result = EmbeddingResult {
        points,
        method: EmbeddingMethod::Pga,
        stress_or_loss: residual,
        explained_variance: Some(explained),
        flags,
    };
    Ok((model, result))
}

fn validate_distances(d: &DMatrix<f64>) -> Result<(), DimredError> {
    let m = d.nrows();
    if m != d.ncols() || m < 2 {
        return Err(DimredError::BadDistanceMatrix);
    }
    for i in 0..m {
        if d[(i, i)] != 0.0 {
            return Err(DimredError::BadDistanceMatrix);
        }
        for j in 0..i {
            let v = d[(i, j)];
            if !v.is_finite() || v < 0.0 || (v - d[(j, i)]).abs() > 1e-8 {
                return Err(DimredError::BadDistanceMatrix);
            }
        }
    }
    Ok(())
}

fn input_distances(
    input: EmbedInput<'_>,
    geometry: FlatGeometry,
) -> Result<DMatrix<f64>, DimredError> {
    match input {
        EmbedInput::Samples(s) => {
            Ok(geometry::pairwise_distances(s, geometry.to_kind())?)
        }
        EmbedInput::Distances(d) => {
            validate_distances(d)?;
            Ok(d.clone())
        }
    }
}

pub fn embed(
    method: EmbeddingMethod,
    input: EmbedInput<'_>,
    d: usize,
    geometry: FlatGeometry,
    options: &EmbedOptions,
) -> Result<EmbeddingResult, DimredError> {
    match method {
        EmbeddingMethod::Pga => match input {
            EmbedInput::Samples(s) => pga(s, d, geometry).map(|(_, r)| r),
            EmbedInput::Distances(_) => Err(DimredError::NeedsSamples { method: "pga" }),
        },
        EmbeddingMethod::Cmds => {
            let dist = input_distances(input, geometry)?;
            check_embed_dim(d, dist.nrows())?;
            Ok(cmds(&dist, d))
        }
        EmbeddingMethod::Mmds => {
            let dist = input_distances(input, geometry)?;
            check_embed_dim(d, dist.nrows())?;
            let (result, _history) = mmds(&dist, d);
            Ok(result)
        }
        EmbeddingMethod::Tsne => {
            let dist = input_distances(input, geometry)?;
            check_embed_dim(d, dist.nrows())?;
            tsne(&dist, d, options)
        }
        EmbeddingMethod::Ae => match input {
            EmbedInput::Samples(s) => autoencoder(s, d, geometry, options),
            EmbedInput::Distances(_) => Err(DimredError::NeedsSamples {
                method: "autoencoder",
            }),
        },
    }
}

fn check_embed_dim(d: usize, m: usize) -> Result<(), DimredError> {
    let max = m.saturating_sub(1).max(1);
    if d == 0 || d > max {
        return Err(DimredError::BadDimension { d, max });
    }
    Ok(())
}

/// Deterministic sign: each column's largest-magnitude entry is positive.
fn fix_signs(points: &mut DMatrix<f64>) {
    for j in 0..points.ncols() {
        let mut idx = 0;
        let mut best = 0.0_f64;
        for i in 0..points.nrows() {
            if points[(i, j)].abs() > best {
                best = points[(i, j)].abs();
                idx = i;
            }
        }
        if points[(idx, j)] < 0.0 {
            for i in 0..points.nrows() {
                points[(i, j)] = -points[(i, j)];
            }
        }
    }
}

fn cmds(dist: &DMatrix<f64>, d: usize) -> EmbeddingResult {
    let m = dist.nrows();
    let sq = dist.map(|v| v * v);
    // double centering: B = -1/2 J D2 J
    let row_means: Vec<f64> = (0..m).map(|i| sq.row(i).sum() / m as f64).collect();
    let grand = row_means.iter().sum::<f64>() / m as f64;
    let mut b = DMatrix::from_fn(m, m, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    linalg::symmetrize_mut(&mut b);
    let (vals, vecs) = linalg::sym_eigen(&b);
    // eigenvalues ascending; take the top d
    let mut points = DMatrix::zeros(m, d);
    let mut used = 0;
    for k in 0..d {
        let idx = m - 1 - k;
        let lambda = vals[idx];
        if lambda <= 0.0 {
            break;
        }
        let scale = lambda.sqrt();
        for i in 0..m {
            points[(i, k)] = vecs[(i, idx)] * scale;
        }
        used += 1;
    }
    fix_signs(&mut points);
    let dropped: f64 = (0..m - d.min(m)).map(|i| vals[i].max(0.0)).sum();
    let mut flags = Vec::new();
    if used < d {
        flags.push(EmbedFlag::RankDeficient);
    }
    EmbeddingResult {
        points,
        method: EmbeddingMethod::Cmds,
        stress_or_loss: dropped,
        explained_variance: None,
        flags,
    }
}

fn raw_stress(dist: &DMatrix<f64>, points: &DMatrix<f64>) -> f64 {
    let m = dist.nrows();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..i {
            let dij = (points.row(i) - points.row(j)).norm();
            let diff = dij - dist[(i, j)];
            s += diff * diff;
        }
    }
    s
}

/// SMACOF majorization from the classical-scaling start. Returns the stress
/// history alongside the result so the monotone guarantee is checkable.
fn mmds(dist: &DMatrix<f64>, d: usize) -> (EmbeddingResult, Vec<f64>) {
    let m = dist.nrows();
    let mut points = cmds(dist, d).points;
    let mut history = vec![raw_stress(dist, &points)];
    let mut flags = Vec::new();
    let mut converged = false;
    for _ in 0..tol::MMDS_MAX_ITERATIONS {
        // Guttman transform: X <- (1/m) B(X) X
        let mut bmat = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..i {
                let dij = (points.row(i) - points.row(j)).norm();
                let w = if dij > 0.0 { -dist[(i, j)] / dij } else { 0.0 };
                bmat[(i, j)] = w;
                bmat[(j, i)] = w;
            }
        }
        for i in 0..m {
            let off: f64 = (0..m).filter(|&j| j != i).map(|j| bmat[(i, j)]).sum();
            bmat[(i, i)] = -off;
        }
        points = (&bmat * &points) / m as f64;
        let stress = raw_stress(dist, &points);
        let last = *history.last().expect("seeded");
        history.push(stress);
        if last - stress < tol::MMDS_STRESS_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        flags.push(EmbedFlag::NotConverged);
    }
    let result = EmbeddingResult {
        points,
        method: EmbeddingMethod::Mmds,
        stress_or_loss: *history.last().expect("seeded"),
        explained_variance: None,
        flags,
    };
    (result, history)
}

/// Conditional neighbor distributions with per-point bandwidths found by
/// bisection on the entropy, then symmetrized.
fn tsne_affinities(dist: &DMatrix<f64>, perplexity: f64) -> DMatrix<f64> {
    let m = dist.nrows();
    let target_entropy = perplexity.ln();
    let mut p = DMatrix::zeros(m, m);
    for i in 0..m {
        let mut beta = 1.0;
        let mut beta_lo = 0.0_f64;
        let mut beta_hi = f64::INFINITY;
        for _ in 0..64 {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..m {
                if j == i {
                    continue;
                }
                let e = (-beta * dist[(i, j)] * dist[(i, j)]).exp();
                sum += e;
                weighted += e * beta * dist[(i, j)] * dist[(i, j)];
            }
            // Shannon entropy of the conditional distribution
            let entropy = if sum > 0.0 {
                sum.ln() + weighted / sum
            } else {
                0.0
            };
            let gap = entropy - target_entropy;
            if gap.abs() < tol::TSNE_ENTROPY_TOLERANCE {
                break;
            }
            if gap > 0.0 {
                beta_lo = beta;
                beta = if beta_hi.is_finite() {
                    (beta + beta_hi) / 2.0
                } else {
                    beta * 2.0
                };
            } else {
                beta_hi = beta;
                beta = (beta + beta_lo) / 2.0;
            }
        }
        let mut sum = 0.0;
        for j in 0..m {
            if j != i {
                let e = (-beta * dist[(i, j)] * dist[(i, j)]).exp();
                p[(i, j)] = e;
                sum += e;
            }
        }
        if sum > 0.0 {
            for j in 0..m {
                p[(i, j)] /= sum;
            }
        }
    }
    // symmetrize and normalize over all pairs
    let mut sym = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            sym[(i, j)] = ((p[(i, j)] + p[(j, i)]) / (2.0 * m as f64)).max(1e-12);
        }
        sym[(i, i)] = 0.0;
    }
    sym
}

fn tsne(
    dist: &DMatrix<f64>,
    d: usize,
    options: &EmbedOptions,
) -> Result<EmbeddingResult, DimredError> {
    let m = dist.nrows();
    if !(options.perplexity > 0.0) || options.perplexity >= m as f64 {
        return Err(DimredError::BadPerplexity {
            perplexity: options.perplexity,
            m,
        });
    }
    let p = tsne_affinities(dist, options.perplexity);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut y = DMatrix::from_fn(m, d, |_, _| {
        1e-4 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    let mut velocity = DMatrix::zeros(m, d);
    let exaggeration_until = 250.min(options.tsne_iterations);
    for iter in 0..options.tsne_iterations {
        let exaggeration = if iter < exaggeration_until { 12.0 } else { 1.0 };
        let momentum = if iter < 250 { 0.5 } else { 0.8 };
        // student-t affinities in the embedding
        let mut qnum = DMatrix::zeros(m, m);
        let mut qsum = 0.0;
        for i in 0..m {
            for j in 0..i {
                let w = 1.0 / (1.0 + (y.row(i) - y.row(j)).norm_squared());
                qnum[(i, j)] = w;
                qnum[(j, i)] = w;
                qsum += 2.0 * w;
            }
        }
        let mut grad = DMatrix::zeros(m, d);
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let q = (qnum[(i, j)] / qsum).max(1e-12);
                let coef = 4.0 * (exaggeration * p[(i, j)] - q) * qnum[(i, j)];
                for k in 0..d {
                    grad[(i, k)] += coef * (y[(i, k)] - y[(j, k)]);
                }
            }
        }
        velocity = velocity * momentum - grad * options.tsne_learning_rate;
        y += &velocity;
        // recenter to remove the translation drift
        for k in 0..d {
            let mean = y.column(k).mean();
            for i in 0..m {
                y[(i, k)] -= mean;
            }
        }
    }
    // final KL divergence
    let mut qnum = DMatrix::zeros(m, m);
    let mut qsum = 0.0;
    for i in 0..m {
        for j in 0..i {
            let w = 1.0 / (1.0 + (y.row(i) - y.row(j)).norm_squared());
            qnum[(i, j)] = w;
            qnum[(j, i)] = w;
            qsum += 2.0 * w;
        }
    }
    let mut kl = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let q = (qnum[(i, j)] / qsum).max(1e-12);
                kl += p[(i, j)] * (p[(i, j)] / q).ln();
            }
        }
    }
    Ok(EmbeddingResult {
        points: y,
        method: EmbeddingMethod::Tsne,
        stress_or_loss: kl.max(0.0),
        explained_variance: None,
        flags: Vec::new(),
    })
}

struct AeLayer {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    velocity_w: DMatrix<f64>,
    velocity_b: DVector<f64>,
}

impl AeLayer {
    fn new(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = (1.0 / cols as f64).sqrt();
        Self {
            weights: DMatrix::from_fn(rows, cols, |_, _| {
                scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            }),
            bias: DVector::zeros(rows),
            velocity_w: DMatrix::zeros(rows, cols),
            velocity_b: DVector::zeros(rows),
        }
    }

    fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.weights * x + &self.bias
    }

    fn update(&mut self, gw: &DMatrix<f64>, gb: &DVector<f64>, lr: f64, momentum: f64) {
        self.velocity_w = &self.velocity_w * momentum - gw * lr;
        self.velocity_b = &self.velocity_b * momentum - gb * lr;
        self.weights += &self.velocity_w;
        self.bias += &self.velocity_b;
    }
}

/// Encoder tanh(h) -> linear d, decoder tanh(h) -> linear out, squared loss,
/// minibatch gradient descent with momentum on per-channel standardized
/// coordinates. Standardizing keeps one learning rate workable across
/// geometries and dimensions.
fn autoencoder(
    s: &SampleSet,
    d: usize,
    geometry: FlatGeometry,
    options: &EmbedOptions,
) -> Result<EmbeddingResult, DimredError> {
    let coords = CoordinateSet::from_samples(s, geometry)?;
    let m = coords.len();
    let dim = coords.dim();
    if d == 0 {
        return Err(DimredError::BadDimension { d, max: dim });
    }
    if options.hidden_width < d {
        return Err(DimredError::BadHiddenWidth {
            width: options.hidden_width,
            d,
        });
    }
    // per-channel standardization
    let mut mean = DVector::zeros(dim);
    let mut scale = DVector::zeros(dim);
    for i in 0..dim {
        let row: Vec<f64> = (0..m).map(|j| coords.coords()[(i, j)]).collect();
        let (mu, sd) = linalg::mean_and_std(&row);
        mean[i] = mu;
        scale[i] = if sd > 0.0 { sd } else { 1.0 };
    }
    let data: Vec<DVector<f64>> = (0..m)
        .map(|j| {
            let mut x = coords.point(j);
            for i in 0..dim {
                x[i] = (x[i] - mean[i]) / scale[i];
            }
            x
        })
        .collect();

    let h = options.hidden_width;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut enc_hidden = AeLayer::new(h, dim, &mut rng);
    let mut enc_out = AeLayer::new(d, h, &mut rng);
    let mut dec_hidden = AeLayer::new(h, d, &mut rng);
    let mut dec_out = AeLayer::new(dim, h, &mut rng);
    let momentum = 0.9;
    let lr = options.ae_learning_rate;
    let batch = options.ae_batch.max(1).min(m);

    let mut order: Vec<usize> = (0..m).collect();
    let mut previous_loss = f64::INFINITY;
    let mut converged = false;
    for _ in 0..options.ae_max_epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut g_enc_hidden_w = DMatrix::zeros(h, dim);
            let mut g_enc_hidden_b = DVector::zeros(h);
            let mut g_enc_out_w = DMatrix::zeros(d, h);
            let mut g_enc_out_b = DVector::zeros(d);
            let mut g_dec_hidden_w = DMatrix::zeros(h, d);
            let mut g_dec_hidden_b = DVector::zeros(h);
            let mut g_dec_out_w = DMatrix::zeros(dim, h);
            let mut g_dec_out_b = DVector::zeros(dim);
            for &idx in chunk {
                let x = &data[idx];
                let a1 = enc_hidden.forward(x).map(f64::tanh);
                let z = enc_out.forward(&a1);
                let a2 = dec_hidden.forward(&z).map(f64::tanh);
                let out = dec_out.forward(&a2);
                let err = &out - x;
                epoch_loss += err.norm_squared();
                // backprop through the four layers
                let delta_out = err;
                g_dec_out_w += &delta_out * a2.transpose();
                g_dec_out_b += &delta_out;
                let mut delta_a2 = dec_out.weights.tr_mul(&delta_out);
                for i in 0..h {
                    delta_a2[i] *= 1.0 - a2[i] * a2[i];
                }
                g_dec_hidden_w += &delta_a2 * z.transpose();
                g_dec_hidden_b += &delta_a2;
                let delta_z = dec_hidden.weights.tr_mul(&delta_a2);
                g_enc_out_w += &delta_z * a1.transpose();
                g_enc_out_b += &delta_z;
                let mut delta_a1 = enc_out.weights.tr_mul(&delta_z);
                for i in 0..h {
                    delta_a1[i] *= 1.0 - a1[i] * a1[i];
                }
                g_enc_hidden_w += &delta_a1 * x.transpose();
                g_enc_hidden_b += &delta_a1;
            }
            let inv = 1.0 / chunk.len() as f64;
            enc_hidden.update(&(g_enc_hidden_w * inv), &(g_enc_hidden_b * inv), lr, momentum);
            enc_out.update(&(g_enc_out_w * inv), &(g_enc_out_b * inv), lr, momentum);
            dec_hidden.update(&(g_dec_hidden_w * inv), &(g_dec_hidden_b * inv), lr, momentum);
            dec_out.update(&(g_dec_out_w * inv), &(g_dec_out_b * inv), lr, momentum);
        }
        epoch_loss /= m as f64;
        if previous_loss.is_finite()
            && (previous_loss - epoch_loss).abs()
                < tol::AE_RELATIVE_IMPROVEMENT * previous_loss.max(1e-12)
        {
            converged = true;
            break;
        }
        previous_loss = epoch_loss;
    }

    let mut points = DMatrix::zeros(m, d);
    let mut final_loss = 0.0;
    for (j, x) in data.iter().enumerate() {
        let a1 = enc_hidden.forward(x).map(f64::tanh);
        let z = enc_out.forward(&a1);
        let a2 = dec_hidden.forward(&z).map(f64::tanh);
        let out = dec_out.forward(&a2);
        final_loss += (&out - x).norm_squared();
        for k in 0..d {
            points[(j, k)] = z[k];
        }
    }
    final_loss /= m as f64;
    let mut flags = Vec::new();
    if !converged {
        flags.push(EmbedFlag::NotConverged);
    }
    Ok(EmbeddingResult {
        points,
        method: EmbeddingMethod::Ae,
        stress_or_loss: final_loss,
        explained_variance: None,
        flags,
    })
}
