//! Random problem instances shared by unit tests.

use ndarray::{Array2, ShapeBuilder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{Dataset, ResponseKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_matrix(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut x = Array2::zeros((n, p).f());
    x.iter_mut().for_each(|v| *v = normal(rng));
    x
}

/// First `k` coefficients nonzero with alternating signs.
pub fn sparse_beta(p: usize, k: usize, size: f64) -> Vec<f64> {
    (0..p)
        .map(|j| if j < k { if j % 2 == 0 { size } else { -size } } else { 0.0 })
        .collect()
}

fn linpred(x: &Array2<f64>, beta: &[f64]) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| beta.iter().enumerate().map(|(j, b)| x[[i, j]] * b).sum())
        .collect()
}

pub fn random_linear(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x = gaussian_matrix(n, p, &mut r);
    let eta = linpred(&x, &sparse_beta(p, 3.min(p), 1.0));
    let y = eta.iter().map(|e| e + normal(&mut r)).collect();
    Dataset::from_raw(x.view(), ResponseKind::continuous(y).unwrap()).unwrap()
}

pub fn random_logistic(n: usize, p: usize, seed: u64) -> Dataset {
    use rand::Rng;
    let mut r = rng(seed);
    let x = gaussian_matrix(n, p, &mut r);
    let eta = linpred(&x, &sparse_beta(p, 3.min(p), 0.8));
    let y = eta
        .iter()
        .map(|&e| if r.random::<f64>() < crate::family::sigmoid(e) { 1.0 } else { 0.0 })
        .collect();
    Dataset::from_raw(x.view(), ResponseKind::binary(y).unwrap()).unwrap()
}

pub fn random_cox(n: usize, p: usize, seed: u64) -> Dataset {
    use rand::Rng;
    let mut r = rng(seed);
    let x = gaussian_matrix(n, p, &mut r);
    let eta = linpred(&x, &sparse_beta(p, 3.min(p), 0.5));
    let mut time = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    for e in eta {
        let t = -r.random::<f64>().ln() / e.exp();
        let c = -r.random::<f64>().ln() / 0.2;
        time.push(t.min(c));
        status.push(t <= c);
    }
    Dataset::from_raw(x.view(), ResponseKind::survival(time, status).unwrap()).unwrap()
}
