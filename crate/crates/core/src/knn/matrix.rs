//! Dense matrix helpers shared by key generation, encryption and unmasking.

use faer::linalg::solvers::DenseSolveCore;
use faer::{ColRef, Mat};
use rand::Rng;

use super::{KnnError, NumericField};

pub type Matrix = Mat<f64>;

/// Draws attempted for a single invertible matrix before giving up.
pub const MAX_DRAWS: usize = 8;

const POWER_ITERATIONS: usize = 40;

/// A matrix together with its inverse.
#[derive(Clone, Debug)]
pub struct Invertible {
    pub mat: Matrix,
    pub inv: Matrix,
}

pub fn random_matrix<R: Rng + ?Sized>(dim: usize, bound: f64, rng: &mut R) -> Matrix {
    Mat::from_fn(dim, dim, |_, _| rng.random_range(-bound..=bound))
}

/// Inverts `mat`, rejecting it when the inverse is non-finite or the
/// spectral condition estimate exceeds `max_condition`.
pub fn invert_checked(mat: Matrix, max_condition: f64) -> Option<Invertible> {
    let inv = mat.partial_piv_lu().inverse();
    let finite = (0..inv.ncols()).all(|j| inv.col_as_slice(j).iter().all(|x| x.is_finite()));
    if !finite {
        return None;
    }
    let cond = condition_estimate(&mat, &inv);
    if !cond.is_finite() || cond > max_condition {
        return None;
    }
    Some(Invertible { mat, inv })
}

pub fn random_invertible<R: Rng + ?Sized>(
    dim: usize,
    field: &NumericField,
    rng: &mut R,
) -> Result<Invertible, KnnError> {
    for _ in 0..MAX_DRAWS {
        let mat = random_matrix(dim, field.entry_bound, rng);
        if let Some(inv) = invert_checked(mat, field.max_condition) {
            return Ok(inv);
        }
    }
    Err(KnnError::Singular { attempts: MAX_DRAWS })
}

/// Draws a random invertible `first` with `target - first` also invertible.
pub fn random_invertible_split<R: Rng + ?Sized>(
    target: &Matrix,
    field: &NumericField,
    rng: &mut R,
) -> Result<(Matrix, Matrix), KnnError> {
    let dim = target.nrows();
    for _ in 0..MAX_DRAWS {
        let first = random_matrix(dim, field.entry_bound, rng);
        let Some(first) = invert_checked(first, field.max_condition) else {
            continue;
        };
        let second = target - &first.mat;
        if let Some(second) = invert_checked(second, field.max_condition) {
            return Ok((first.mat, second.mat));
        }
    }
    Err(KnnError::Singular { attempts: MAX_DRAWS })
}

/// `||A||_2 * ||A^-1||_2`, both norms by power iteration on the Gram matrix.
pub fn condition_estimate(mat: &Matrix, inv: &Matrix) -> f64 {
    spectral_norm(mat) * spectral_norm(inv)
}

fn spectral_norm(mat: &Matrix) -> f64 {
    let n = mat.ncols();
    // deterministic, non-degenerate start vector
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    normalize(&mut v);
    let mut sigma_sq = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = mat_vec(mat, &v);
        let mut g = mat_t_vec(mat, &w);
        sigma_sq = norm(&g);
        if sigma_sq == 0.0 {
            return 0.0;
        }
        g.iter_mut().for_each(|x| *x /= sigma_sq);
        v = g;
    }
    sigma_sq.sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    v.iter_mut().for_each(|x| *x /= n);
}

/// `mat * v` for a column vector `v`.
pub fn mat_vec(mat: &Matrix, v: &[f64]) -> Vec<f64> {
    let out = mat.as_ref() * ColRef::from_slice(v);
    out.iter().copied().collect()
}

/// `v * mat` for a row vector `v`, computed as `mat^T * v^T`.
pub fn mat_t_vec(mat: &Matrix, v: &[f64]) -> Vec<f64> {
    let out = mat.as_ref().transpose() * ColRef::from_slice(v);
    out.iter().copied().collect()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for (x, y) in a.col_as_slice(j).iter().zip(b.col_as_slice(j)) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

pub fn identity_error(product: &Matrix) -> f64 {
    max_abs_diff(product, &Mat::identity(product.nrows(), product.ncols()))
}
