//! Dense linear algebra kernels shared by the semigroup machinery: scaling-and-
//! squaring matrix exponential, complex eigenvalues, null spaces and the real
//! spectral projection onto a conjugation-closed set of eigenvalues.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

/// 1-norm (maximum absolute column sum), the norm driving the squaring count.
pub fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Pade coefficients for the [13/13] approximant of exp, Higham's method.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a [13/13] Pade core.
/// Relative accuracy is near machine precision at desk scale.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        ((norm / THETA13).log2().ceil() as i32).max(0) as u32
    } else {
        0
    };
    let scaled = a.map(|v| v * 2f64.powi(-(squarings as i32)));

    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (PADE13[13] * &a6 + PADE13[11] * &a4 + PADE13[9] * &a2)
        + PADE13[7] * &a6
        + PADE13[5] * &a4
        + PADE13[3] * &a2
        + PADE13[1] * &id;
    let u = &scaled * u_inner;
    let v = &a6 * (PADE13[12] * &a6 + PADE13[10] * &a4 + PADE13[8] * &a2)
        + PADE13[6] * &a6
        + PADE13[4] * &a4
        + PADE13[2] * &a2
        + PADE13[0] * &id;

    // Pade approximant is (V + U) / (V - U)
    let numer = &v + &u;
    let denom = &v - &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is invertible for scaled input");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Complex eigenvalues of a real matrix via the real Schur form.
pub fn complex_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Spectral radius.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    complex_eigenvalues(m)
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// Orthonormal basis of the null space, detected by a relative singular value
/// threshold.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, b| a.max(*b));
    let cutoff = rel_tol * smax.max(1.0);
    let mut basis = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= cutoff {
            basis.push(v_t.row(k).transpose());
        }
    }
    // rows of v_t beyond the stored singular values also span the kernel
    for k in svd.singular_values.len()..v_t.nrows() {
        basis.push(v_t.row(k).transpose());
    }
    basis
}

/// Numerical rank with relative threshold.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, b| a.max(*b));
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|s| **s > rel_tol * smax).count()
}

/// Null space of a complex matrix with a known nullity: the right singular
/// vectors belonging to the smallest singular values.
pub fn complex_null_space_known(
    m: &DMatrix<Complex<f64>>,
    nullity: usize,
) -> Vec<DVector<Complex<f64>>> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    (0..nullity)
        .map(|k| v_t.row(n - 1 - k).map(|z| z.conjugate()).transpose())
        .collect()
}

/// Multiplicity-counted rank comparison deciding whether an eigenvalue of a
/// real matrix is semisimple: `rank(A) == rank(A^2)` for `A = M - lambda I`.
pub fn eigenvalue_is_semisimple(m: &DMatrix<f64>, lambda: Complex<f64>, rel_tol: f64) -> bool {
    let n = m.nrows();
    let mc = m.map(|v| Complex::new(v, 0.0));
    let a = &mc - DMatrix::<Complex<f64>>::identity(n, n) * lambda;
    let a2 = &a * &a;
    complex_rank(&a, rel_tol) == complex_rank(&a2, rel_tol)
}

fn complex_rank(m: &DMatrix<Complex<f64>>, rel_tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, b| a.max(*b));
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|s| **s > rel_tol * smax).count()
}

/// Real spectral projection of `m` onto the sum of eigenspaces belonging to
/// `selected` (counted with multiplicity and closed under conjugation).
///
/// Requires the selected eigenvalues to be semisimple, which holds for the
/// peripheral spectrum of power-bounded operators. The projection is computed
/// as the splitting `ker q(M) (+) ran q(M)` for the real polynomial `q` with
/// the selected eigenvalues as roots, followed by a Newton idempotence
/// cleanup step.
pub fn spectral_projection(m: &DMatrix<f64>, selected: &[Complex<f64>]) -> DMatrix<f64> {
    let n = m.nrows();
    let nullity = selected.len();
    if nullity == 0 {
        return DMatrix::zeros(n, n);
    }
    if nullity >= n {
        return DMatrix::identity(n, n);
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut q = id.clone();
    let im_tol = 1e-9;
    let mut used = vec![false; selected.len()];
    for (i, lambda) in selected.iter().enumerate() {
        if used[i] {
            continue;
        }
        if lambda.im.abs() <= im_tol {
            q = &q * (m - &id * lambda.re);
            used[i] = true;
        } else if lambda.im > 0.0 {
            // pair with a conjugate partner; quadratic real factor
            let partner = selected
                .iter()
                .enumerate()
                .position(|(j, other)| {
                    !used[j] && j != i && (other - lambda.conjugate()).norm() < 1e-6
                })
                .expect("conjugate eigenvalue must be selected too");
            used[i] = true;
            used[partner] = true;
            let factor = m * m - m * (2.0 * lambda.re) + &id * lambda.norm_sqr();
            q = &q * factor;
        }
        // negative imaginary parts are handled by their positive partners
        let scale = one_norm(&q);
        if scale > 0.0 {
            q /= scale;
        }
    }

    if one_norm(&q) <= 1e-14 {
        // q annihilates everything: the selected eigenvalues fill the space
        return DMatrix::identity(n, n);
    }

    // oblique projection onto ker q(M) along ran q(M), assembled from the two
    // null spaces: ran q(M) is the orthogonal complement of ker q(M)'. The
    // small singular vectors are the numerically reliable part of the SVD, so
    // both ingredients are taken from there with the known nullity.
    let smallest_right = |a: &DMatrix<f64>| -> DMatrix<f64> {
        let svd = a.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().expect("svd with v_t");
        let mut out = DMatrix::zeros(n, nullity);
        for k in 0..nullity {
            out.set_column(k, &v_t.row(n - 1 - k).transpose());
        }
        out
    };
    let right_null = smallest_right(&q);
    let left_null = smallest_right(&q.transpose());
    let cross = left_null.transpose() * &right_null;
    let cross_inv = cross
        .lu()
        .try_inverse()
        .expect("kernel and range of q(M) are complementary");
    let mut p = &right_null * cross_inv * left_null.transpose();

    // Newton cleanup towards idempotence
    for _ in 0..3 {
        let residual = (&p * &p - &p).norm();
        if residual <= 1e-13 * p.norm().max(1.0) {
            break;
        }
        p = 3.0 * (&p * &p) - 2.0 * (&p * &p * &p);
    }
    p
}

/// Projection onto the joint kernel of a family of matrices (their common
/// fixed space when applied to `M - I`), via SVD of the stacked system.
pub fn joint_null_space(mats: &[DMatrix<f64>], rel_tol: f64) -> Vec<DVector<f64>> {
    assert!(!mats.is_empty());
    let n = mats[0].ncols();
    let mut stacked = DMatrix::<f64>::zeros(mats.len() * n, n);
    for (k, m) in mats.iter().enumerate() {
        stacked.rows_mut(k * n, n).copy_from(m);
    }
    null_space(&stacked, rel_tol)
}
