use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Above this size the dense eigensolve is replaced by Lanczos.
const DENSE_LIMIT: usize = 4000;
const MAX_LANCZOS_STEPS: usize = 300;

pub fn is_connected(g: &Graph) -> bool {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in g.neighbors(u) {
            let v = v as usize;
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == g.n()
}

/// `max(|λ₂|, |λₙ|)` of the adjacency matrix.
pub fn spectral_lambda(g: &Graph) -> Result<f64> {
    if !is_connected(g) {
        return Err(Error::DisconnectedGraph);
    }
    if g.n() == 1 {
        return Ok(0.0);
    }
    if g.n() <= DENSE_LIMIT {
        Ok(dense_lambda(g))
    } else {
        Ok(lanczos_lambda(g))
    }
}

fn dense_lambda(g: &Graph) -> f64 {
    let n = g.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for &v in g.neighbors(u) {
            m[(u, v as usize)] = 1.0;
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev[1].abs().max(ev[n - 1].abs())
}

fn remove_mean(v: &mut DVector<f64>) {
    let mean = v.mean();
    v.add_scalar_mut(-mean);
}

/// Lanczos with full reorthogonalization on the complement of the all-ones
/// vector, which is the top eigenvector of a connected regular graph.
pub(super) fn lanczos_lambda(g: &Graph) -> f64 {
    let n = g.n();
    let steps = MAX_LANCZOS_STEPS.min(n - 1);
    let mut rng = RandomSource::new(0x1a2c_2057, 0);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    remove_mean(&mut v);
    v.normalize_mut();

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let tol = 1e-10 * g.d() as f64;
    let mut estimate = 0.0;
    for j in 0..steps {
        let mut w = DVector::from_fn(n, |u, _| g.neighbors(u).iter().map(|&x| v[x as usize]).sum());
        let a = w.dot(&v);
        alpha.push(a);
        w.axpy(-a, &v, 1.0);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            w.axpy(-b, prev, 1.0);
        }
        basis.push(v.clone());
        for _ in 0..2 {
            for q in &basis {
                let c = w.dot(q);
                w.axpy(-c, q, 1.0);
            }
            remove_mean(&mut w);
        }
        let b = w.norm();
        let exhausted = b < 1e-12 || j + 1 == steps;
        if (j + 1) % 10 == 0 || exhausted {
            let (value, residual) = extreme_ritz(&alpha, &beta, b);
            estimate = value;
            if residual < tol || exhausted {
                break;
            }
        }
        beta.push(b);
        v = w / b;
    }
    estimate
}

/// Largest-magnitude Ritz value of the tridiagonal matrix and the residual
/// norm of the extreme Ritz pairs.
fn extreme_ritz(alpha: &[f64], beta: &[f64], next_beta: f64) -> (f64, f64) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let (mut lo, mut hi) = (0, 0);
    for i in 0..m {
        if eig.eigenvalues[i] < eig.eigenvalues[lo] {
            lo = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[hi] {
            hi = i;
        }
    }
    let residual = |i: usize| (next_beta * eig.eigenvectors[(m - 1, i)]).abs();
    let value = eig.eigenvalues[lo].abs().max(eig.eigenvalues[hi].abs());
    (value, residual(lo).max(residual(hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_regular_graph;

    #[test]
    fn complete_graph() {
        for n in [3, 5, 10] {
            assert!((spectral_lambda(&Graph::complete(n)).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn four_cycle_is_bipartite() {
        assert!((spectral_lambda(&Graph::cycle(4).unwrap()).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn odd_cycle() {
        let expect = 2.0 * (2.0 * std::f64::consts::PI / 7.0).cos();
        let seven = 2.0 * (6.0 * std::f64::consts::PI / 7.0).cos();
        let g = Graph::cycle(7).unwrap();
        assert!((spectral_lambda(&g).unwrap() - expect.abs().max(seven.abs())).abs() < 1e-9);
    }

    #[test]
    fn disconnected_is_rejected() {
        let two_triangles = vec![vec![1, 2], vec![0, 2], vec![0, 1], vec![4, 5], vec![3, 5], vec![3, 4]];
        let g = Graph::from_adjacency(two_triangles).unwrap();
        assert!(matches!(spectral_lambda(&g), Err(Error::DisconnectedGraph)));
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let mut rng = RandomSource::new(17, 0);
        for (n, d) in [(400, 6), (1200, 10)] {
            let g = random_regular_graph(n, d, &mut rng).unwrap();
            let (x, y) = (dense_lambda(&g), lanczos_lambda(&g));
            assert!((x - y).abs() <= 1e-6 * x, "n={n}: dense {x}, lanczos {y}");
        }
        let c = Graph::cycle(6).unwrap();
        assert!((lanczos_lambda(&c) - 2.0).abs() < 1e-9);
    }
}
