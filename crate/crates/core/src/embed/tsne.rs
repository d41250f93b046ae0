//! Exact t-SNE: perplexity-calibrated Gaussian affinities, Student-t
//! low-dimensional affinities and gradient descent on the KL divergence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{EmbeddingResult, LocalConfig, Method};
use crate::error::{Error, Result};
use crate::numcore::{squared_distance, DenseMatrix};

const MAX_BISECTION_STEPS: usize = 200;
/// Tolerance on the entropy (in nats) of each conditional distribution.
const ENTROPY_TOL: f64 = 1e-10;
const INITIAL_MOMENTUM: f64 = 0.5;
const FINAL_MOMENTUM: f64 = 0.8;
const MIN_GAIN: f64 = 0.01;
const INIT_SD: f64 = 1e-4;

fn squared_distances(x: &DenseMatrix) -> Vec<f64> {
    let n = x.rows();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = squared_distance(x.row(i), x.row(j));
            d2[i * n + j] = v;
            d2[j * n + i] = v;
        }
    }
    d2
}

fn check_perplexity(n: usize, perplexity: f64) -> Result<()> {
    if !(perplexity > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "perplexity must be positive, got {perplexity}"
        )));
    }
    if 3.0 * perplexity >= n as f64 {
        return Err(Error::InvalidArgument(format!(
            "perplexity {perplexity} is too large for {n} points: t-SNE requires 3 * perplexity < n ({} >= {n})",
            3.0 * perplexity
        )));
    }
    Ok(())
}

/// Row-stochastic conditional affinities `p_{j|i}` whose perplexities
/// match `perplexity`. Also returns the number of rows whose bisection did
/// not reach tolerance.
fn calibrate(d2: &[f64], n: usize, perplexity: f64) -> (Vec<f64>, usize) {
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    let mut unconverged = 0;
    for i in 0..n {
        let row = &d2[i * n..(i + 1) * n];
        let dmin = (0..n)
            .filter(|&j| j != i)
            .map(|j| row[j])
            .fold(f64::INFINITY, f64::min);
        let out = &mut p[i * n..(i + 1) * n];
        let mut beta = 1.0;
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut done = false;
        for _ in 0..MAX_BISECTION_STEPS {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                if j == i {
                    out[j] = 0.0;
                    continue;
                }
                let shifted = row[j] - dmin;
                let v = (-beta * shifted).exp();
                out[j] = v;
                sum += v;
                weighted += shifted * v;
            }
            let entropy = sum.ln() + beta * weighted / sum;
            let diff = entropy - target;
            if diff.abs() < ENTROPY_TOL {
                done = true;
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_infinite() { beta * 2.0 } else { 0.5 * (beta + hi) };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        if !done {
            unconverged += 1;
        }
        let sum: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= sum);
    }
    (p, unconverged)
}

/// Conditional affinities `p_{j|i}` as an n x n row-stochastic matrix.
pub fn conditional_affinities(x: &DenseMatrix, perplexity: f64) -> Result<DenseMatrix> {
    let n = x.rows();
    check_perplexity(n, perplexity)?;
    let (p, _) = calibrate(&squared_distances(x), n, perplexity);
    Ok(DenseMatrix::from_raw(n, n, p))
}

fn symmetrize(cond: &[f64], n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = cond[i * n + j] + cond[j * n + i];
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Symmetric joint affinities `p_ij = (p_{j|i} + p_{i|j}) / 2n`, summing to
/// one.
pub fn joint_affinities(x: &DenseMatrix, perplexity: f64) -> Result<DenseMatrix> {
    let n = x.rows();
    let cond = conditional_affinities(x, perplexity)?;
    Ok(DenseMatrix::from_raw(n, n, symmetrize(cond.as_slice(), n)))
}

/// Student-t numerators `1 / (1 + |y_i - y_j|^2)` (zero diagonal) and their
/// total.
fn student_t(y: &[f64], n: usize, m: usize, num: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        num[i * n + i] = 0.0;
        let yi = &y[i * m..(i + 1) * m];
        for j in (i + 1)..n {
            let v = 1.0 / (1.0 + squared_distance(yi, &y[j * m..(j + 1) * m]));
            num[i * n + j] = v;
            num[j * n + i] = v;
            total += 2.0 * v;
        }
    }
    total
}

fn kl_raw(p: &[f64], num: &[f64], total: f64) -> f64 {
    p.iter()
        .zip(num)
        .filter(|(pv, _)| **pv > 0.0)
        .map(|(pv, qv)| pv * (pv / (qv / total)).ln())
        .sum()
}

/// `KL(P || Q)` for joint affinities `p` and the Student-t affinities of
/// the rows of `y`.
pub fn kl_divergence(p: &DenseMatrix, y: &DenseMatrix) -> f64 {
    let (n, m) = y.shape();
    let mut num = vec![0.0; n * n];
    let total = student_t(y.as_slice(), n, m, &mut num);
    kl_raw(p.as_slice(), &num, total)
}

/// Accumulates `sum_j p_ij q_ij (y_i - y_j)` into `attract` and
/// `sum_j q_ij^2 (y_i - y_j)` into `repel`, where `q_ij = 1 / (1 + |y_i -
/// y_j|^2)`, visiting each pair once. Returns `Z = sum_{i != j} q_ij`.
fn pair_forces(
    y: &[f64],
    p: &[f64],
    n: usize,
    m: usize,
    attract: &mut [f64],
    repel: &mut [f64],
) -> f64 {
    attract.iter_mut().for_each(|v| *v = 0.0);
    repel.iter_mut().for_each(|v| *v = 0.0);
    let mut total = 0.0;
    let mut acc_a = vec![0.0; m];
    let mut acc_r = vec![0.0; m];
    let mut diff = vec![0.0; m];
    for i in 0..n {
        let yi = &y[i * m..(i + 1) * m];
        let prow = &p[i * n + i + 1..(i + 1) * n];
        let (head_a, tail_a) = attract.split_at_mut((i + 1) * m);
        let (head_r, tail_r) = repel.split_at_mut((i + 1) * m);
        let mut zi = 0.0;
        if m == 2 {
            let (y0, y1) = (yi[0], yi[1]);
            let (mut a0, mut a1, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0);
            for (((pj, yj), aj), rj) in prow
                .iter()
                .zip(y[(i + 1) * 2..].chunks_exact(2))
                .zip(tail_a.chunks_exact_mut(2))
                .zip(tail_r.chunks_exact_mut(2))
            {
                let dx = y0 - yj[0];
                let dy = y1 - yj[1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                zi += q;
                let a = pj * q;
                let r = q * q;
                a0 += a * dx;
                a1 += a * dy;
                r0 += r * dx;
                r1 += r * dy;
                aj[0] -= a * dx;
                aj[1] -= a * dy;
                rj[0] -= r * dx;
                rj[1] -= r * dy;
            }
            acc_a[0] = a0;
            acc_a[1] = a1;
            acc_r[0] = r0;
            acc_r[1] = r1;
        } else {
            acc_a.iter_mut().for_each(|v| *v = 0.0);
            acc_r.iter_mut().for_each(|v| *v = 0.0);
            for (((pj, yj), aj), rj) in prow
                .iter()
                .zip(y[(i + 1) * m..].chunks_exact(m))
                .zip(tail_a.chunks_exact_mut(m))
                .zip(tail_r.chunks_exact_mut(m))
            {
                let mut d2 = 0.0;
                for d in 0..m {
                    diff[d] = yi[d] - yj[d];
                    d2 += diff[d] * diff[d];
                }
                let q = 1.0 / (1.0 + d2);
                zi += q;
                let a = pj * q;
                let r = q * q;
                for d in 0..m {
                    acc_a[d] += a * diff[d];
                    acc_r[d] += r * diff[d];
                    aj[d] -= a * diff[d];
                    rj[d] -= r * diff[d];
                }
            }
        }
        for d in 0..m {
            head_a[i * m + d] += acc_a[d];
            head_r[i * m + d] += acc_r[d];
        }
        total += 2.0 * zi;
    }
    total
}

/// t-SNE embedding by gradient descent with momentum, per-parameter gains
/// and early exaggeration.
pub fn fit_tsne(x: &DenseMatrix, cfg: &LocalConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    let n = x.rows();
    let m = cfg.output_dims;
    check_perplexity(n, cfg.tsne_perplexity)?;

    let (cond, unconverged) = calibrate(&squared_distances(x), n, cfg.tsne_perplexity);
    let p = symmetrize(&cond, n);
    drop(cond);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, INIT_SD).expect("valid normal");
    let mut y: Vec<f64> = (0..n * m).map(|_| normal.sample(&mut rng)).collect();
    let mut update = vec![0.0; n * m];
    let mut gains = vec![1.0; n * m];
    let mut grad = vec![0.0; n * m];
    let mut attract = vec![0.0; n * m];
    let mut repel = vec![0.0; n * m];
    let mut num = vec![0.0; n * n];

    let total = student_t(&y, n, m, &mut num);
    let kl_initial = kl_raw(&p, &num, total);

    let eta = cfg.tsne_learning_rate;
    for iter in 0..cfg.tsne_iters {
        let early = iter < cfg.tsne_exaggeration_iters;
        let exaggeration = if early { cfg.tsne_early_exaggeration } else { 1.0 };
        let momentum = if early { INITIAL_MOMENTUM } else { FINAL_MOMENTUM };

        let total = pair_forces(&y, &p, n, m, &mut attract, &mut repel);
        for ((g, a), r) in grad.iter_mut().zip(&attract).zip(&repel) {
            *g = 4.0 * (exaggeration * a - r / total);
        }

        for ((g, u), gain) in grad.iter().zip(update.iter_mut()).zip(gains.iter_mut()) {
            *gain = if (*g > 0.0) != (*u > 0.0) {
                *gain + 0.2
            } else {
                *gain * 0.8
            };
            if *gain < MIN_GAIN {
                *gain = MIN_GAIN;
            }
            *u = momentum * *u - eta * *gain * g;
        }
        for (yv, u) in y.iter_mut().zip(&update) {
            *yv += u;
        }
        for d in 0..m {
            let mean = (0..n).map(|i| y[i * m + d]).sum::<f64>() / n as f64;
            for i in 0..n {
                y[i * m + d] -= mean;
            }
        }
    }

    let total = student_t(&y, n, m, &mut num);
    let kl_final = kl_raw(&p, &num, total);
    let scores = DenseMatrix::new(n, m, y)?;

    let mut out = EmbeddingResult::new(Method::Tsne, scores)
        .param("m", m)
        .param("perplexity", cfg.tsne_perplexity)
        .param("iterations", cfg.tsne_iters)
        .param("learning_rate", eta)
        .param("early_exaggeration", cfg.tsne_early_exaggeration)
        .param("seed", cfg.seed);
    out.metrics.insert("kl_initial".into(), kl_initial);
    out.metrics.insert("kl_final".into(), kl_final);
    if unconverged > 0 {
        out.diagnostics.push(format!(
            "perplexity calibration did not converge for {unconverged} point(s)"
        ));
    }
    out.metrics
        .insert("uncalibrated_points".into(), unconverged as f64);
    Ok(out)
}
