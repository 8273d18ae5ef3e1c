//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's numerical kernels: eigenvalues come
//! from a cyclic Jacobi sweep, metrics from brute-force pair counting, and so
//! on.
#![allow(dead_code)]

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Ascending eigenvalues and column eigenvectors by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        let scale: f64 = m.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * m[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].total_cmp(&m[[j, j]]));
    let values = order.iter().map(|&i| m[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    (values, vectors)
}

pub fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (n, k) = a.dim();
    let m = b.ncols();
    assert_eq!(k, b.nrows());
    let mut out = Array2::<f64>::zeros((n, m));
    for i in 0..n {
        for l in 0..k {
            let ail = a[[i, l]];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                out[[i, j]] += ail * b[[l, j]];
            }
        }
    }
    out
}

pub fn transpose(a: &Array2<f64>) -> Array2<f64> {
    a.t().to_owned()
}

/// `V diag(f(λ)) Vᵀ` from the Jacobi decomposition.
pub fn sym_fn(a: &Array2<f64>, f: impl Fn(f64) -> f64) -> Array2<f64> {
    let (w, v) = jacobi_eigen(a);
    let n = w.len();
    let mut scaled = v.clone();
    for j in 0..n {
        let fj = f(w[j]);
        for i in 0..n {
            scaled[[i, j]] *= fj;
        }
    }
    let out = matmul(&scaled, &transpose(&v));
    (&out + &out.t()) * 0.5
}

/// `A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}`.
pub fn two_matrix_mean(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let root = sym_fn(a, f64::sqrt);
    let inv_root = sym_fn(a, |x| 1.0 / x.sqrt());
    let inner = matmul(&matmul(&inv_root, b), &inv_root);
    let inner = (&inner + &inner.t()) * 0.5;
    matmul(&matmul(&root, &sym_fn(&inner, f64::sqrt)), &root)
}

pub fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let num: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Random SPD matrix `G Gᵀ / n + c I` with moderate conditioning.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let g = gaussian_matrix(rng, n, n);
    let mut a = matmul(&g, &transpose(&g)) / n as f64;
    let c = rng.random_range(0.1..1.0);
    for i in 0..n {
        a[[i, i]] += c;
    }
    (&a + &a.t()) * 0.5
}

/// Symmetric nonnegative weights with zero diagonal; each pair is an edge
/// with probability `density`.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Array2<f64> {
    let mut w = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                let v = rng.random_range(0.1..2.0);
                w[[i, j]] = v;
                w[[j, i]] = v;
            }
        }
    }
    w
}

pub fn laplacian_of(w: &Array2<f64>) -> Array2<f64> {
    let n = w.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            w.row(i).sum()
        } else {
            -w[[i, j]]
        }
    })
}

/// Lower Cholesky factor by the textbook recurrence.
pub fn cholesky(p: &Array2<f64>) -> Array2<f64> {
    let n = p.nrows();
    let mut r = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| r[[i, k]] * r[[j, k]]).sum();
            if i == j {
                r[[i, i]] = (p[[i, i]] - s).sqrt();
            } else {
                r[[i, j]] = (p[[i, j]] - s) / r[[j, j]];
            }
        }
    }
    r
}

/// Inverse of a lower-triangular matrix, column by column.
pub fn lower_inverse(r: &Array2<f64>) -> Array2<f64> {
    let n = r.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    for c in 0..n {
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= r[[i, k]] * inv[[k, c]];
            }
            inv[[i, c]] = s / r[[i, i]];
        }
    }
    inv
}

pub fn trace(a: &Array2<f64>) -> f64 {
    a.diag().sum()
}

/// `Tr(R⁻¹ YᵀLY R⁻ᵀ)` computed directly.
pub fn objective(y: &Array2<f64>, l: &Array2<f64>) -> f64 {
    let r = cholesky(&matmul(&transpose(y), y));
    let a = lower_inverse(&r);
    let d = matmul(&matmul(&transpose(y), l), y);
    trace(&matmul(&matmul(&a, &d), &transpose(&a)))
}

/// `X − triu(X) + ½ diag(X)`.
fn phi(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i > j {
            x[[i, j]]
        } else if i == j {
            0.5 * x[[i, i]]
        } else {
            0.0
        }
    })
}

/// Gradient of the objective by the step-by-step reverse-mode table:
/// `C = A D Aᵀ`, `D = YᵀLY`, `A = R⁻¹`, `R = chol(P)`, `P = YᵀY`.
pub fn reverse_mode_jacobian(y: &Array2<f64>, l: &Array2<f64>) -> Array2<f64> {
    let yt = transpose(y);
    let p = matmul(&yt, y);
    let r = cholesky(&p);
    let a = lower_inverse(&r);
    let d = matmul(&matmul(&yt, l), y);

    let a_bar = matmul(&a, &d) * 2.0;
    let d_bar = matmul(&transpose(&a), &a);
    let y_tilde = matmul(&matmul(l, y), &d_bar) * 2.0;
    let r_inv_t = transpose(&a);
    let r_bar = -matmul(&matmul(&r_inv_t, &a_bar), &r_inv_t);
    let s = matmul(&matmul(&r_inv_t, &phi(&matmul(&transpose(&r), &r_bar))), &a);
    let p_bar = (&s + &s.t()) * 0.5;
    matmul(y, &p_bar) * 2.0 + y_tilde
}

/// Central differences of `f` along every coordinate.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let plus = f(&probe);
            probe[i] = orig - h;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

pub fn vec_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Brute-force purity: majority true label inside every predicted cluster.
pub fn purity_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let mut by_cluster: HashMap<usize, HashMap<usize, usize>> = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *by_cluster.entry(p).or_default().entry(t).or_default() += 1;
    }
    let hits: usize = by_cluster.values().map(|m| *m.values().max().unwrap()).sum();
    hits as f64 / pred.len() as f64
}

/// NMI from the label probabilities, arithmetic-mean normalization.
pub fn nmi_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    let mut pab: HashMap<(usize, usize), f64> = HashMap::new();
    for (&a, &b) in pred.iter().zip(truth) {
        *pa.entry(a).or_default() += 1.0 / n;
        *pb.entry(b).or_default() += 1.0 / n;
        *pab.entry((a, b)).or_default() += 1.0 / n;
    }
    let h = |m: &HashMap<usize, f64>| -m.values().map(|p| p * p.ln()).sum::<f64>();
    let mi: f64 = pab.iter().map(|(&(a, b), &p)| p * (p / (pa[&a] * pb[&b])).ln()).sum();
    let denom = 0.5 * (h(&pa) + h(&pb));
    if denom == 0.0 {
        1.0
    } else {
        mi / denom
    }
}

/// ARI by counting agreeing pairs one by one.
pub fn ari_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len();
    let (mut both, mut same_pred, mut same_truth) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = pred[i] == pred[j];
            let b = truth[i] == truth[j];
            if a {
                same_pred += 1.0;
            }
            if b {
                same_truth += 1.0;
            }
            if a && b {
                both += 1.0;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = same_pred * same_truth / pairs;
    let max = 0.5 * (same_pred + same_truth);
    if max == expected {
        return if pred_equivalent(pred, truth) { 1.0 } else { 0.0 };
    }
    (both - expected) / (max - expected)
}

fn pred_equivalent(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter().zip(b).all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// Component label of every vertex by union-find over positive weights.
pub fn components(w: &Array2<f64>) -> Vec<usize> {
    let n = w.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if w[[i, j]] > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

pub fn count_components(w: &Array2<f64>) -> usize {
    let mut roots = components(w);
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Same grouping up to relabeling.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && pred_equivalent(a, b)
}

/// k-NN adjacency by sorting all distances from every point.
pub fn knn_oracle(points: &Array2<f64>, k: usize) -> Array2<f64> {
    let n = points.nrows();
    let dist = |i: usize, j: usize| -> f64 {
        points
            .row(i)
            .iter()
            .zip(points.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut w = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)).then(a.cmp(&b)));
        for &j in &others[..k] {
            w[[i, j]] = 1.0 / dist(i, j);
            w[[j, i]] = 1.0 / dist(i, j);
        }
    }
    w
}

pub fn column_vector(v: &[f64]) -> Array1<f64> {
    Array1::from(v.to_vec())
}

/// Smallest |pre-activation| over all hidden units and rows, from a forward
/// pass written out here. Central differences are only meaningful when no
/// unit sits within the step of a PReLU kink.
pub fn kink_margin(model: &orthonet_core::EmbedderModel, x: &Array2<f64>) -> f64 {
    let layers = model.layers();
    let mut a = x.clone();
    let mut margin = f64::INFINITY;
    for (i, layer) in layers.iter().enumerate() {
        let mut z = matmul(&a, &layer.weights);
        for mut row in z.rows_mut() {
            row += &layer.bias;
        }
        if i + 1 < layers.len() {
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            let slope = model.prelu_slopes()[i];
            z.mapv_inplace(|v| if v > 0.0 { v } else { slope * v });
        }
        a = z;
    }
    margin
}
