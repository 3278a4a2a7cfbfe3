//! Lowest eigenpairs of Hermitian operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operators::{SparseOperator, C64};

/// Dimension up to which [`EigenMethod::Auto`] diagonalizes densely.
pub const DENSE_MAX_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense for `dim ≤ DENSE_MAX_DIM`, Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub method: EigenMethod,
    /// Krylov dimension cap for Lanczos.
    pub max_iter: usize,
    /// Ritz residual target for Lanczos.
    pub tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::Auto,
            max_iter: 400,
            tol: 1e-11,
        }
    }
}

/// Lowest eigenvalue, its vector, and the next eigenvalue (when available).
#[derive(Debug, Clone)]
pub struct LowestPair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub next_value: Option<f64>,
}

pub fn lowest_eigenpair(op: &SparseOperator, opts: &EigenOptions) -> Result<LowestPair> {
    let dense = match opts.method {
        EigenMethod::Auto => op.dim() <= DENSE_MAX_DIM,
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
    };
    if dense {
        dense_lowest(op)
    } else {
        lanczos_lowest(op, opts)
    }
}

/// Full diagonalization; takes the real symmetric path when possible.
pub fn dense_lowest(op: &SparseOperator) -> Result<LowestPair> {
    let n = op.dim();
    if op.is_real() {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (r, c, v) in op.iter() {
            m[(r, c)] = v.re;
        }
        let eig = SymmetricEigen::new(m);
        let order = ascending(eig.eigenvalues.as_slice());
        let k = order[0];
        Ok(LowestPair {
            value: eig.eigenvalues[k],
            vector: eig
                .eigenvectors
                .column(k)
                .iter()
                .map(|&x| C64::new(x, 0.0))
                .collect(),
            next_value: order.get(1).map(|&j| eig.eigenvalues[j]),
        })
    } else {
        let eig = SymmetricEigen::new(op.to_dense());
        let order = ascending(eig.eigenvalues.as_slice());
        let k = order[0];
        Ok(LowestPair {
            value: eig.eigenvalues[k],
            vector: eig.eigenvectors.column(k).iter().copied().collect(),
            next_value: order.get(1).map(|&j| eig.eigenvalues[j]),
        })
    }
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization and a fixed-seed start vector.
pub fn lanczos_lowest(op: &SparseOperator, opts: &EigenOptions) -> Result<LowestPair> {
    let n = op.dim();
    if n == 1 {
        return Ok(LowestPair {
            value: op.get(0, 0).re,
            vector: vec![C64::new(1.0, 0.0)],
            next_value: None,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let max_iter = opts.max_iter.min(n).max(2);
    let mut basis: Vec<Vec<C64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![C64::default(); n];
    let mut ritz: Option<(f64, Vec<f64>, Option<f64>)> = None;

    for j in 0..max_iter {
        op.matvec(&basis[j], &mut w);
        let alpha = dot(&basis[j], &w).re;
        alphas.push(alpha);
        // Two passes of classical Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = norm(&w);

        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let order = ascending(eig.eigenvalues.as_slice());
        let k0 = order[0];
        let theta = eig.eigenvalues[k0];
        let y: Vec<f64> = eig.eigenvectors.column(k0).iter().copied().collect();
        let resid0 = beta * y[m - 1].abs();
        let next = order.get(1).map(|&k| {
            (
                eig.eigenvalues[k],
                beta * eig.eigenvectors[(m - 1, k)].abs(),
            )
        });
        let scale = theta.abs().max(1.0);
        let done_second = next.is_none_or(|(_, r)| r <= opts.tol * scale);
        ritz = Some((theta, y, next.map(|(val, _)| val)));
        let invariant = beta <= 1e-13 * scale;
        if (resid0 <= opts.tol * scale && done_second && m >= 2) || invariant {
            break;
        }
        if j + 1 == max_iter {
            return Err(Error::Numerical(format!(
                "Lanczos did not converge in {max_iter} iterations (residual {resid0:e})"
            )));
        }
        let next_v: Vec<C64> = w.iter().map(|x| x / beta).collect();
        betas.push(beta);
        basis.push(next_v);
    }

    let (value, y, next_value) = ritz.expect("at least one iteration ran");
    let mut vector = vec![C64::default(); n];
    for (coef, q) in y.iter().zip(&basis) {
        vector.iter_mut().zip(q).for_each(|(x, b)| *x += *coef * b);
    }
    let nrm = norm(&vector);
    vector.iter_mut().for_each(|x| *x /= nrm);
    Ok(LowestPair {
        value,
        vector,
        next_value,
    })
}

/// `‖A x − λ x‖₂`.
pub fn residual(op: &SparseOperator, value: f64, vector: &[C64]) -> f64 {
    let ax = op.apply(vector);
    ax.iter()
        .zip(vector)
        .map(|(a, x)| (a - x * value).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
