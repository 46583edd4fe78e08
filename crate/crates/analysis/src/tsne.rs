//! Exact t-SNE by gradient descent on the KL divergence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::AnalysisError;

pub const DEFAULT_PERPLEXITY_CAP: f64 = 30.0;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const LEARNING_RATE: f64 = 200.0;
pub const EXAGGERATION: f64 = 12.0;
pub const EXAGGERATION_ITERS: usize = 250;
pub const INITIAL_MOMENTUM: f64 = 0.5;
pub const FINAL_MOMENTUM: f64 = 0.8;
/// Standard deviation of the Gaussian the starting points are drawn from.
pub const INIT_STD: f64 = 1e-4;
pub const MIN_ROWS: usize = 4;
const MIN_GAIN: f64 = 0.01;
const BETA_SEARCH_STEPS: usize = 100;
const ENTROPY_TOLERANCE: f64 = 1e-5;
const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneParams {
    pub perplexity_cap: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity_cap: DEFAULT_PERPLEXITY_CAP,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub embedding: Vec<[f64; 2]>,
    pub perplexity: f64,
    /// KL divergence against the unexaggerated affinities after each
    /// iteration; entry `t - 1` belongs to iteration `t`.
    pub kl_history: Vec<f64>,
}

/// `min(cap, floor((n - 1) / 3))`.
pub fn effective_perplexity(n: usize, cap: f64) -> f64 {
    cap.min(((n.saturating_sub(1)) / 3) as f64)
}

fn squared_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    d
}

/// Row-conditional Gaussian affinities with each row's precision tuned by
/// bisection to hit the target entropy `ln(perplexity)`.
fn conditional_affinities(dist: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let row = &dist[i * n..(i + 1) * n];
        // Shift by the nearest distance so exponentials stay in range.
        let dmin = (0..n).filter(|&j| j != i).map(|j| row[j]).fold(f64::INFINITY, f64::min);
        let mut beta = 1.0;
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut weights = vec![0.0; n];
        for _ in 0..BETA_SEARCH_STEPS {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                weights[j] = if j == i { 0.0 } else { (-(row[j] - dmin) * beta).exp() };
                sum += weights[j];
                weighted += weights[j] * (row[j] - dmin);
            }
            let entropy = sum.ln() + beta * weighted / sum;
            let diff = entropy - target;
            if diff.abs() < ENTROPY_TOLERANCE {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        for j in 0..n {
            p[i * n + j] = weights[j] / sum;
        }
    }
    p
}

/// Symmetrized joint affinities `(p_j|i + p_i|j) / 2n`.
pub fn joint_affinities(rows: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = rows.len();
    let cond = conditional_affinities(&squared_distances(rows), n, perplexity);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(P_FLOOR);
            }
        }
    }
    p
}

/// Runs `f` for every row index on a few scoped threads and returns the
/// results in row order, so the outcome does not depend on scheduling.
fn par_rows<T: Send, F: Fn(usize) -> T + Sync>(n: usize, f: F) -> Vec<T> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |k| k.get())
        .min(n.div_ceil(64))
        .max(1);
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || (w * chunk..((w + 1) * chunk).min(n)).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Student-t kernel numerators, their sum, and `sum p_ij ln(num_ij)`.
struct Kernel {
    num: Vec<f64>,
    sum: f64,
    p_log_num: f64,
}

fn kernel(y: &[[f64; 2]], p: &[f64]) -> Kernel {
    let n = y.len();
    let rows = par_rows(n, |i| {
        let mut row = vec![0.0; n];
        let mut sum = 0.0;
        let mut p_log = 0.0;
        for j in 0..n {
            if i != j {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let d2 = dx * dx + dy * dy;
                row[j] = 1.0 / (1.0 + d2);
                sum += row[j];
                p_log -= p[i * n + j] * d2.ln_1p();
            }
        }
        (row, sum, p_log)
    });
    let mut num = Vec::with_capacity(n * n);
    let mut sum = 0.0;
    let mut p_log_num = 0.0;
    for (row, s, pl) in rows {
        num.extend(row);
        sum += s;
        p_log_num += pl;
    }
    Kernel { num, sum, p_log_num }
}

fn p_log_p(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum()
}

fn kl_from_kernel(p_log_p: f64, p_sum: f64, k: &Kernel) -> f64 {
    p_log_p - k.p_log_num + p_sum * k.sum.ln()
}

/// KL(P || Q) over `i != j`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let sum: f64 = p.iter().sum();
    kl_from_kernel(p_log_p(p), sum, &kernel(y, p))
}

pub fn tsne(rows: &[Vec<f64>], params: &TsneParams) -> Result<TsneResult, AnalysisError> {
    let n = rows.len();
    if n < MIN_ROWS {
        return Err(AnalysisError::TooFewRows {
            needed: MIN_ROWS,
            found: n,
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidInput("feature values must be finite".into()));
    }
    let perplexity = effective_perplexity(n, params.perplexity_cap);
    let p = joint_affinities(rows, perplexity);
    let (plogp, psum) = (p_log_p(&p), p.iter().sum::<f64>());

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, INIT_STD).expect("positive deviation");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_history = Vec::with_capacity(params.max_iter);

    for iter in 0..params.max_iter {
        let exaggeration = if iter < EXAGGERATION_ITERS { EXAGGERATION } else { 1.0 };
        let momentum = if iter < EXAGGERATION_ITERS {
            INITIAL_MOMENTUM
        } else {
            FINAL_MOMENTUM
        };
        let k = kernel(&y, &p);
        // The kernel describes the positions left by the previous iteration.
        if iter > 0 {
            kl_history.push(kl_from_kernel(plogp, psum, &k));
        }

        let grads = par_rows(n, |i| {
            let mut grad = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = k.num[i * n + j];
                let coeff = (exaggeration * p[i * n + j] - w / k.sum) * w;
                grad[0] += coeff * (y[i][0] - y[j][0]);
                grad[1] += coeff * (y[i][1] - y[j][1]);
            }
            [4.0 * grad[0], 4.0 * grad[1]]
        });
        for i in 0..n {
            for d in 0..2 {
                let g = grads[i][d];
                gains[i][d] = if (g > 0.0) != (velocity[i][d] > 0.0) {
                    gains[i][d] + 0.2
                } else {
                    (gains[i][d] * 0.8).max(MIN_GAIN)
                };
                velocity[i][d] = momentum * velocity[i][d] - LEARNING_RATE * gains[i][d] * g;
            }
        }
        for (yi, vi) in y.iter_mut().zip(&velocity) {
            yi[0] += vi[0];
            yi[1] += vi[1];
        }
        let centroid = y.iter().fold([0.0; 2], |c, v| [c[0] + v[0], c[1] + v[1]]);
        for yi in &mut y {
            yi[0] -= centroid[0] / n as f64;
            yi[1] -= centroid[1] / n as f64;
        }
    }
    if params.max_iter > 0 {
        kl_history.push(kl_from_kernel(plogp, psum, &kernel(&y, &p)));
    }

    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidInput("embedding diverged".into()));
    }
    Ok(TsneResult {
        embedding: y,
        perplexity,
        kl_history,
    })
}
