//! Newton solver for L2-regularised logistic regression on sparse rows.

/// Sparse feature row: `(index, value)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(w: &[f64], row: &[(usize, f64)]) -> f64 {
    row.iter().map(|&(i, v)| w[i] * v).sum()
}

/// `log(1 + exp(-m))` without overflow.
fn log1pexp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// Objective `(1/n) sum log(1 + exp(-y w.x)) + (lambda/2) |w|^2`.
pub fn objective(w: &[f64], rows: &[SparseRow], labels: &[bool], lambda: f64) -> f64 {
    let n = rows.len() as f64;
    let loss: f64 = rows
        .iter()
        .zip(labels)
        .map(|(r, &y)| {
            let m = if y { dot(w, r) } else { -dot(w, r) };
            log1pexp_neg(m)
        })
        .sum();
    loss / n + 0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>()
}

/// In-place Cholesky solve of `a x = b` for symmetric positive definite `a`.
fn cholesky_solve(mut a: Vec<f64>, mut b: Vec<f64>, dim: usize) -> Option<Vec<f64>> {
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= a[j * dim + k] * a[j * dim + k];
        }
        if d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        a[j * dim + j] = d;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= a[i * dim + k] * a[j * dim + k];
            }
            a[i * dim + j] = s / d;
        }
    }
    for i in 0..dim {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * dim + k] * b[k];
        }
        b[i] = s / a[i * dim + i];
    }
    for i in (0..dim).rev() {
        let mut s = b[i];
        for k in (i + 1)..dim {
            s -= a[k * dim + i] * b[k];
        }
        b[i] = s / a[i * dim + i];
    }
    Some(b)
}

/// Minimises [`objective`] by damped Newton iterations until the gradient's
/// max-norm drops below `tolerance` or `max_iter` is reached.
pub fn fit_logistic(
    rows: &[SparseRow],
    labels: &[bool],
    dim: usize,
    lambda: f64,
    tolerance: f64,
    max_iter: usize,
) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut w = vec![0.0; dim];
    let mut current = objective(&w, rows, labels, lambda);
    for _ in 0..max_iter {
        let mut grad: Vec<f64> = w.iter().map(|x| lambda * x).collect();
        let mut hess = vec![0.0; dim * dim];
        for i in 0..dim {
            hess[i * dim + i] = lambda;
        }
        for (r, &y) in rows.iter().zip(labels) {
            let p = sigmoid(dot(&w, r));
            let residual = (p - if y { 1.0 } else { 0.0 }) / n;
            let curvature = p * (1.0 - p) / n;
            for &(i, vi) in r {
                grad[i] += residual * vi;
                for &(j, vj) in r {
                    if j <= i {
                        hess[i * dim + j] += curvature * vi * vj;
                    }
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                hess[j * dim + i] = hess[i * dim + j];
            }
        }
        if grad.iter().all(|g| g.abs() < tolerance) {
            break;
        }
        let step = match cholesky_solve(hess, grad.clone(), dim) {
            Some(s) => s,
            None => grad.clone(),
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let candidate: Vec<f64> = w.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let value = objective(&candidate, rows, labels, lambda);
            if value <= current {
                w = candidate;
                current = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    w
}

pub fn predict_probability(w: &[f64], row: &[(usize, f64)]) -> f64 {
    sigmoid(dot(w, row))
}
