//! Small dense symmetric eigensolver and thin truncated left-SVD.
//!
//! The optimizer only ever needs the top-k left singular vectors of a tall,
//! thin matrix `Z` (n rows, d = k + m or v*k columns). Forming the d x d Gram
//! matrix `ZᵀZ`, diagonalizing it with Jacobi rotations and mapping back with
//! `U = Z V Σ⁻¹` costs O(n d²), which keeps every update linear in n.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;
/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_EPS: f64 = 1e-10;
/// Residual fraction below which a candidate column counts as linearly dependent.
const DEPENDENCE_EPS: f64 = 1e-8;
const COMPLETION_SEED: u64 = 0x5153_4545_4400_0001;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: Matrix,
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// n x k, orthonormal columns.
    pub left_vectors: Matrix,
    /// Descending, non-negative; zero for columns filled by orthonormal completion.
    pub singular_values: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eigh(s: &Matrix) -> Result<SymEig> {
    let d = s.rows();
    if d == 0 || s.cols() != d {
        return Err(Error::Argument(format!(
            "sym_eigh needs a non-empty square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if let Some(x) = s.data().iter().find(|x| !x.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite entry {x} in symmetric matrix"
        )));
    }
    let scale = s.max_abs().max(1.0);
    let mut a = s.clone();
    for i in 0..d {
        for j in 0..i {
            let (x, y) = (s[(i, j)], s[(j, i)]);
            if (x - y).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Contract(format!(
                    "matrix not symmetric at ({i}, {j}): {x} vs {y}"
                )));
            }
            let avg = 0.5 * (x + y);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }

    let tol = OFF_DIAGONAL_TOL * a.frobenius_norm();
    let mut v = Matrix::identity(d);
    let mut sweeps = 0;
    let mut residual = max_off_diagonal(&a);
    while residual > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Convergence { sweeps, residual });
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[(p, q)].abs() > tol {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
        sweeps += 1;
        residual = max_off_diagonal(&a);
    }

    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps the original order for equal eigenvalues.
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..d {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(SymEig { values, vectors })
}

fn max_off_diagonal(a: &Matrix) -> f64 {
    let d = a.rows();
    let mut m = 0.0f64;
    for p in 0..d {
        for q in p + 1..d {
            m = m.max(a[(p, q)].abs());
        }
    }
    m
}

/// Annihilates `a[p][q]` with a Givens rotation (Rutishauser's formulation).
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let d = a.rows();
    let apq = a[(p, q)];
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..d {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_p = c * arp - s * arq;
        let new_q = s * arp + c * arq;
        a[(r, p)] = new_p;
        a[(p, r)] = new_p;
        a[(r, q)] = new_q;
        a[(q, r)] = new_q;
    }
    for r in 0..d {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

/// Top-k left singular vectors of `z` (n x d).
///
/// Uses the d x d Gram matrix when `d <= n` and the n x n outer product
/// otherwise, so the eigenproblem is always the smaller of the two.
/// Directions with singular value at or below `RANK_EPS * σ_max` are replaced
/// by a seeded orthonormal completion, and every column is canonicalized so
/// its first significant entry is positive.
pub fn trunc_svd_left(z: &Matrix, k: usize) -> Result<TruncatedSvd> {
    let (n, d) = z.shape();
    if k == 0 || k > d {
        return Err(Error::Argument(format!(
            "truncated SVD rank {k} must be in 1..={d}"
        )));
    }
    if k > n {
        return Err(Error::Argument(format!(
            "cannot extract {k} orthonormal columns from {n} rows"
        )));
    }

    let mut candidates: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);
    let mut sigmas = Vec::with_capacity(k);
    if d <= n {
        let eig = sym_eigh(&z.gram())?;
        let sigma_max = eig.values[0].max(0.0).sqrt();
        for j in 0..k {
            let sigma = eig.values[j].max(0.0).sqrt();
            if sigma_max > 0.0 && sigma > RANK_EPS * sigma_max {
                let vj = eig.vectors.column(j);
                let u: Vec<f64> = z.row_iter().map(|row| dot(row, &vj) / sigma).collect();
                candidates.push(Some(u));
                sigmas.push(sigma);
            } else {
                candidates.push(None);
                sigmas.push(0.0);
            }
        }
    } else {
        let eig = sym_eigh(&z.matmul_t(z))?;
        let sigma_max = eig.values[0].max(0.0).sqrt();
        for j in 0..k {
            let sigma = eig.values[j].max(0.0).sqrt();
            if sigma_max > 0.0 && sigma > RANK_EPS * sigma_max {
                candidates.push(Some(eig.vectors.column(j)));
                sigmas.push(sigma);
            } else {
                candidates.push(None);
                sigmas.push(0.0);
            }
        }
    }

    let mut u = orthonormal_completion(n, candidates);
    canonicalize_signs(&mut u);
    Ok(TruncatedSvd {
        left_vectors: u,
        singular_values: sigmas,
    })
}

/// Gram–Schmidt orthonormalization of the columns of `m`.
///
/// Columns that are zero or dependent on earlier ones are replaced by seeded
/// random directions, so the result always has orthonormal columns.
pub fn orthonormalize_columns(m: &Matrix) -> Matrix {
    assert!(m.cols() <= m.rows(), "more columns than rows");
    let candidates = (0..m.cols()).map(|j| Some(m.column(j))).collect();
    orthonormal_completion(m.rows(), candidates)
}

fn orthonormal_completion(n: usize, candidates: Vec<Option<Vec<f64>>>) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(COMPLETION_SEED);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let accepted = candidate.and_then(|c| orthogonalize(c, &basis));
        let column = match accepted {
            Some(c) => c,
            None => loop {
                let r: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                if let Some(c) = orthogonalize(r, &basis) {
                    break c;
                }
            },
        };
        basis.push(column);
    }
    let mut out = Matrix::zeros(n, basis.len());
    for (j, col) in basis.iter().enumerate() {
        out.set_column(j, col);
    }
    out
}

/// Projects `c` off `basis` twice and normalizes, or `None` if little is left.
fn orthogonalize(mut c: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let original = dot(&c, &c).sqrt();
    if original == 0.0 || !original.is_finite() {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let proj = dot(&c, b);
            c.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
    }
    let norm = dot(&c, &c).sqrt();
    if norm <= DEPENDENCE_EPS * original {
        return None;
    }
    c.iter_mut().for_each(|x| *x /= norm);
    Some(c)
}

/// Flips columns so the first entry above `RANK_EPS * max|column|` is positive.
pub fn canonicalize_signs(u: &mut Matrix) {
    for j in 0..u.cols() {
        let col = u.column(j);
        let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = col.iter().find(|x| x.abs() > RANK_EPS * max) {
            if *first < 0.0 {
                for i in 0..u.rows() {
                    u[(i, j)] = -u[(i, j)];
                }
            }
        }
    }
}
