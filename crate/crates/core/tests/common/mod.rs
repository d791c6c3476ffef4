//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

pub mod invariants;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian matrix with unit-norm columns.
pub fn unit_columns(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut c in m.column_iter_mut() {
        let nrm = c.norm();
        c /= nrm;
    }
    m
}

fn dot_cols(x: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let mut s = 0.0;
    for r in 0..x.nrows() {
        s += x[(r, a)] * x[(r, b)];
    }
    s
}

/// `min_i max_{j != i} |x_i . x_j|` by a plain double loop.
pub fn brute_mu(x: &DMatrix<f64>) -> f64 {
    let n = x.ncols();
    let mut mu = f64::INFINITY;
    for i in 0..n {
        let mut best = 0.0f64;
        for j in 0..n {
            if j != i {
                best = best.max(dot_cols(x, i, j).abs());
            }
        }
        mu = mu.min(best);
    }
    mu
}

/// `lambda0 |z|_1 + 1/2 |x_i - X z|^2 + lambda1 sum_j w_j^2 z_j^2` evaluated entry by entry.
pub fn column_objective(x: &DMatrix<f64>, i: usize, w: &[f64], l0: f64, l1: f64, z: &[f64]) -> f64 {
    let mut resid = 0.0;
    for r in 0..x.nrows() {
        let mut v = x[(r, i)];
        for (j, &zj) in z.iter().enumerate() {
            v -= x[(r, j)] * zj;
        }
        resid += v * v;
    }
    let mut l1_term = 0.0;
    let mut ridge = 0.0;
    for (j, &zj) in z.iter().enumerate() {
        l1_term += zj.abs();
        ridge += w[j] * w[j] * zj * zj;
    }
    l0 * l1_term + 0.5 * resid + l1 * ridge
}

/// Gradient of the smooth part, `X^T (X z - x_i) + 2 lambda1 w^2 z`.
fn smooth_gradient(x: &DMatrix<f64>, i: usize, w: &[f64], l1: f64, z: &[f64]) -> Vec<f64> {
    let n = x.ncols();
    let mut r = vec![0.0; x.nrows()];
    for (row, rv) in r.iter_mut().enumerate() {
        let mut v = -x[(row, i)];
        for (j, &zj) in z.iter().enumerate() {
            v += x[(row, j)] * zj;
        }
        *rv = v;
    }
    (0..n)
        .map(|j| {
            let mut g = 0.0;
            for (row, &rv) in r.iter().enumerate() {
                g += x[(row, j)] * rv;
            }
            g + 2.0 * l1 * w[j] * w[j] * z[j]
        })
        .collect()
}

/// Solves the column problem with `z = u - v`, `u, v >= 0` and `u_i = v_i = 0`,
/// where the objective is smooth. Projected gradient steps onto that set with
/// Nesterov momentum; the step is `1 / L` with `L` from the Frobenius bound.
pub fn column_oracle(x: &DMatrix<f64>, i: usize, w: &[f64], l0: f64, l1: f64, iters: usize) -> Vec<f64> {
    let n = x.ncols();
    let frob: f64 = x.iter().map(|v| v * v).sum();
    let wmax = w.iter().fold(0.0f64, |m, v| m.max(v * v));
    let lip = 2.0 * (frob + 2.0 * l1 * wmax);
    let step = 1.0 / lip;
    let project = |v: f64, j: usize| if j == i { 0.0 } else { v.max(0.0) };

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut yu = u.clone();
    let mut yv = v.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let z: Vec<f64> = yu.iter().zip(&yv).map(|(a, b)| a - b).collect();
        let g = smooth_gradient(x, i, w, l1, &z);
        let nu: Vec<f64> = (0..n).map(|j| project(yu[j] - step * (l0 + g[j]), j)).collect();
        let nv: Vec<f64> = (0..n).map(|j| project(yv[j] - step * (l0 - g[j]), j)).collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for j in 0..n {
            yu[j] = nu[j] + beta * (nu[j] - u[j]);
            yv[j] = nv[j] + beta * (nv[j] - v[j]);
        }
        u = nu;
        v = nv;
        t = t_next;
    }
    u.iter().zip(&v).map(|(a, b)| a - b).collect()
}

/// Largest violation of the subgradient optimality conditions of the
/// column problem (zero means `z` is optimal).
pub fn kkt_violation(x: &DMatrix<f64>, i: usize, w: &[f64], l0: f64, l1: f64, z: &[f64]) -> f64 {
    let g = smooth_gradient(x, i, w, l1, z);
    let mut worst = z[i].abs();
    for j in 0..z.len() {
        if j == i {
            continue;
        }
        let v = if z[j] != 0.0 {
            (g[j] + l0 * z[j].signum()).abs()
        } else {
            (g[j].abs() - l0).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Best agreement count over every relabeling of `pred`.
pub fn exhaustive_agreement(pred: &[usize], truth: &[usize], clusters: usize) -> usize {
    permutations(clusters)
        .iter()
        .map(|perm| pred.iter().zip(truth).filter(|(&p, &t)| perm[p] == t).count())
        .max()
        .unwrap()
}

/// `1 - sum_{k != l} M_kl / ((C - 1) sum_k M_kk)` with `M_kl = sum_i p_ik p_il`.
pub fn omega_double_loop(p: &DMatrix<f64>) -> f64 {
    let (n, c) = p.shape();
    let mut diag = 0.0;
    let mut off = 0.0;
    for k in 0..c {
        for l in 0..c {
            let mut m = 0.0;
            for i in 0..n {
                m += p[(i, k)] * p[(i, l)];
            }
            if k == l {
                diag += m;
            } else {
                off += m;
            }
        }
    }
    1.0 - off / ((c - 1) as f64 * diag)
}

pub fn product_triple_loop(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, c) = phi.shape();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..c {
                s += phi[(i, k)] * phi[(j, k)];
            }
            a[(i, j)] = s;
        }
    }
    a
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Column rank of `b` from the eigenvalues of `b^T b`.
pub fn rank(b: &DMatrix<f64>, tol: f64) -> usize {
    jacobi_eigenvalues(&(b.transpose() * b))
        .iter()
        .filter(|&&e| e > tol)
        .count()
}

pub fn wcss(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&Vec<f64>> = points
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(p, _)| p)
            .collect();
        if members.is_empty() {
            continue;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
            .collect();
        for p in members {
            total += p.iter().zip(&centroid).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
    }
    total
}

/// Smallest WCSS over every split of the points into two non-empty groups.
pub fn exhaustive_two_means(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    (1..(1u32 << n) - 1)
        .map(|mask| {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            wcss(points, &labels, 2)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Similarity matrix made of `blocks` disjoint cycles of `size` vertices.
pub fn ring_blocks(blocks: usize, size: usize) -> DMatrix<f64> {
    let n = blocks * size;
    let mut w = DMatrix::zeros(n, n);
    for b in 0..blocks {
        for k in 0..size {
            let i = b * size + k;
            let j = b * size + (k + 1) % size;
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
    }
    w
}

/// Points on coordinate-aligned, mutually orthogonal subspaces: subspace `j`
/// spans coordinates `j*dim .. (j+1)*dim`.
pub fn orthogonal_blocks(clusters: usize, dim: usize, per: usize, rng: &mut impl Rng) -> (DMatrix<f64>, Vec<usize>) {
    let n = clusters * dim;
    let mut x = DMatrix::zeros(n, clusters * per);
    let mut labels = Vec::new();
    for j in 0..clusters {
        for p in 0..per {
            let col = j * per + p;
            let mut nrm = 0.0;
            for d in 0..dim {
                let v: f64 = rng.sample(StandardNormal);
                x[(j * dim + d, col)] = v;
                nrm += v * v;
            }
            let nrm = nrm.sqrt();
            for d in 0..dim {
                x[(j * dim + d, col)] /= nrm;
            }
            labels.push(j);
        }
    }
    (x, labels)
}
