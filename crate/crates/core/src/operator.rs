//! Positive operators with explicit band bookkeeping: a dense kernel-band part
//! plus a singular part made of weighted Koopman terms of total cell maps.
//! Composition routes kernel-with-anything into the kernel band and keeps
//! singular-with-singular in the singular band, mirroring the band algebra of
//! regular AM-compact operators.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::space::{LatticeSpace, LatticeVector};

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("operator dimension {got} does not match space dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel part has a negative entry ({row},{col}) = {value}")]
    NegativeKernelEntry { row: usize, col: usize, value: f64 },
    #[error("singular term scale must be nonnegative with a positive maximum")]
    InvalidScale,
    #[error("cell map sends atom {atom} to out-of-range index {target}")]
    MapOutOfRange { atom: usize, target: usize },
    #[error("operator is not monomial: {0}")]
    NotMonomial(String),
    #[error("operator is not invertible within the positive cone")]
    NotInvertible,
}

/// One weighted Koopman term: `(S v)_a = scale_a * v_{map(a)}`.
///
/// A plain Koopman operator with coefficient `c` has constant scale `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTerm {
    pub map: Vec<usize>,
    pub scale: DVector<f64>,
}

impl SingularTerm {
    pub fn koopman(map: Vec<usize>, coeff: f64) -> Self {
        let n = map.len();
        SingularTerm {
            map,
            scale: DVector::from_element(n, coeff),
        }
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.map.len();
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n {
            m[(a, self.map[a])] += self.scale[a];
        }
        m
    }
}

/// A positive operator split by construction into a kernel-band part and a
/// singular (deterministic transport) part.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredOperator {
    space: Arc<LatticeSpace>,
    kernel: DMatrix<f64>,
    singular: Vec<SingularTerm>,
}

impl StructuredOperator {
    pub fn new(
        space: Arc<LatticeSpace>,
        kernel: DMatrix<f64>,
        singular: Vec<SingularTerm>,
    ) -> Result<Self, OperatorError> {
        let n = space.dim();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(OperatorError::DimensionMismatch {
                expected: n,
                got: kernel.nrows(),
            });
        }
        let mut kernel = kernel;
        for i in 0..n {
            for j in 0..n {
                let v = kernel[(i, j)];
                if v < -1e-9 {
                    return Err(OperatorError::NegativeKernelEntry { row: i, col: j, value: v });
                }
                if v < 0.0 {
                    kernel[(i, j)] = 0.0; // clamp eigensolver noise
                }
            }
        }
        for term in &singular {
            if term.map.len() != n || term.scale.len() != n {
                return Err(OperatorError::DimensionMismatch {
                    expected: n,
                    got: term.map.len(),
                });
            }
            for (a, &target) in term.map.iter().enumerate() {
                if target >= n {
                    return Err(OperatorError::MapOutOfRange { atom: a, target });
                }
            }
            if term.scale.iter().any(|s| *s < 0.0) || !(term.scale.amax() > 0.0) {
                return Err(OperatorError::InvalidScale);
            }
        }
        let mut op = StructuredOperator { space, kernel, singular };
        op.canonicalize();
        Ok(op)
    }

    pub fn zero(space: Arc<LatticeSpace>) -> Self {
        let n = space.dim();
        StructuredOperator {
            space,
            kernel: DMatrix::zeros(n, n),
            singular: Vec::new(),
        }
    }

    /// Pure kernel operator from a nonnegative matrix.
    pub fn from_kernel(space: Arc<LatticeSpace>, kernel: DMatrix<f64>) -> Result<Self, OperatorError> {
        StructuredOperator::new(space, kernel, Vec::new())
    }

    /// Pure Koopman operator of a total cell map with coefficient `coeff`.
    pub fn koopman(
        space: Arc<LatticeSpace>,
        map: Vec<usize>,
        coeff: f64,
    ) -> Result<Self, OperatorError> {
        let n = space.dim();
        StructuredOperator::new(
            space,
            DMatrix::zeros(n, n),
            vec![SingularTerm::koopman(map, coeff)],
        )
    }

    /// Identity realized as the singular Koopman term of the identity map.
    pub fn identity_singular(space: Arc<LatticeSpace>) -> Self {
        let n = space.dim();
        StructuredOperator::koopman(space, (0..n).collect(), 1.0).expect("identity map is valid")
    }

    /// Identity realized in the kernel band.
    pub fn identity_kernel(space: Arc<LatticeSpace>) -> Self {
        let n = space.dim();
        StructuredOperator::from_kernel(space, DMatrix::identity(n, n)).expect("identity is valid")
    }

    // merge terms sharing a map, drop vanished ones, order lexicographically
    fn canonicalize(&mut self) {
        let mut merged: Vec<SingularTerm> = Vec::new();
        for term in self.singular.drain(..) {
            if let Some(existing) = merged.iter_mut().find(|t| t.map == term.map) {
                existing.scale += &term.scale;
            } else {
                merged.push(term);
            }
        }
        merged.retain(|t| t.scale.amax() > 0.0);
        merged.sort_by(|a, b| a.map.cmp(&b.map));
        self.singular = merged;
    }

    pub fn space(&self) -> &Arc<LatticeSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn kernel_part(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn singular_part(&self) -> &[SingularTerm] {
        &self.singular
    }

    /// Structural AM-compactness flag of the desk model: no singular terms.
    pub fn is_am_compact_model(&self) -> bool {
        self.singular.is_empty()
    }

    pub fn singular_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for term in &self.singular {
            m += term.matrix();
        }
        m
    }

    pub fn full_matrix(&self) -> DMatrix<f64> {
        &self.kernel + self.singular_matrix()
    }

    pub fn apply_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.kernel * v;
        for term in &self.singular {
            for a in 0..self.dim() {
                out[a] += term.scale[a] * v[term.map[a]];
            }
        }
        out
    }

    pub fn apply(&self, v: &LatticeVector) -> Result<LatticeVector, OperatorError> {
        if v.coords().len() != self.dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dim(),
                got: v.coords().len(),
            });
        }
        Ok(LatticeVector::from_dvector(self.space.clone(), self.apply_coords(v.coords()))
            .expect("dimension checked"))
    }

    /// Composition `self . other` (apply `other` first). Kernel-with-anything
    /// routes into the kernel band; singular composes with singular exactly.
    pub fn compose(&self, other: &StructuredOperator) -> Result<StructuredOperator, OperatorError> {
        let n = self.dim();
        if other.dim() != n {
            return Err(OperatorError::DimensionMismatch { expected: n, got: other.dim() });
        }
        let kernel = &self.kernel * other.full_matrix() + self.singular_matrix() * &other.kernel;
        let mut singular = Vec::with_capacity(self.singular.len() * other.singular.len());
        for t in &self.singular {
            for u in &other.singular {
                let map: Vec<usize> = (0..n).map(|a| u.map[t.map[a]]).collect();
                let scale = DVector::from_fn(n, |a, _| t.scale[a] * u.scale[t.map[a]]);
                singular.push(SingularTerm { map, scale });
            }
        }
        let mut op = StructuredOperator { space: self.space.clone(), kernel, singular };
        op.canonicalize();
        Ok(op)
    }

    /// Exact split `T = K + R` into the kernel-band and singular components.
    pub fn band_decompose(&self) -> (StructuredOperator, StructuredOperator) {
        let k = StructuredOperator {
            space: self.space.clone(),
            kernel: self.kernel.clone(),
            singular: Vec::new(),
        };
        let n = self.dim();
        let r = StructuredOperator {
            space: self.space.clone(),
            kernel: DMatrix::zeros(n, n),
            singular: self.singular.clone(),
        };
        (k, r)
    }

    /// Adjoint with respect to the weighted pairing `<phi, x> = sum w_i phi_i x_i`,
    /// living on the dual model space (conjugate exponent).
    ///
    /// Bijective transport terms stay singular with rescaled weights; a
    /// non-invertible cell map has no Koopman adjoint and its transpose is
    /// routed into the kernel band.
    pub fn adjoint(&self) -> StructuredOperator {
        let n = self.dim();
        let w = self.space.weights();
        let mut kernel = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                kernel[(i, j)] = self.kernel[(j, i)] * w[j] / w[i];
            }
        }
        let mut singular = Vec::new();
        for term in &self.singular {
            let mut inverse = vec![usize::MAX; n];
            let mut bijective = true;
            for (a, &b) in term.map.iter().enumerate() {
                if inverse[b] != usize::MAX {
                    bijective = false;
                    break;
                }
                inverse[b] = a;
            }
            bijective = bijective && inverse.iter().all(|x| *x != usize::MAX);
            if bijective {
                let scale = DVector::from_fn(n, |a, _| {
                    let pre = inverse[a];
                    term.scale[pre] * w[pre] / w[a]
                });
                singular.push(SingularTerm { map: inverse, scale });
            } else {
                let m = term.matrix();
                for i in 0..n {
                    for j in 0..n {
                        kernel[(i, j)] += m[(j, i)] * w[j] / w[i];
                    }
                }
            }
        }
        let mut op = StructuredOperator { space: self.space.dual(), kernel, singular };
        op.canonicalize();
        op
    }

    /// True iff the adjoint is a lattice homomorphism: every column of the
    /// full matrix carries at most one nonzero entry.
    pub fn is_adjoint_lattice_homomorphism(&self) -> bool {
        let m = self.full_matrix();
        let cutoff = 1e-12 * m.amax().max(1.0);
        (0..self.dim()).all(|j| m.column(j).iter().filter(|v| v.abs() > cutoff).count() <= 1)
    }

    /// Factor a lattice isomorphism as `T e_a = lambda(a) e_{sigma(a)}`.
    pub fn monomial_factorize(&self) -> Result<MonomialFactorization, OperatorError> {
        let n = self.dim();
        let m = self.full_matrix();
        let cutoff = 1e-12 * m.amax().max(1e-300);
        let mut permutation = vec![usize::MAX; n];
        let mut scalings = DVector::zeros(n);
        let mut hit_rows = vec![false; n];
        for a in 0..n {
            let mut found = None;
            for r in 0..n {
                if m[(r, a)].abs() > cutoff {
                    if found.is_some() {
                        return Err(OperatorError::NotMonomial(format!(
                            "column {a} has more than one nonzero entry"
                        )));
                    }
                    found = Some(r);
                }
            }
            let Some(r) = found else {
                return Err(OperatorError::NotMonomial(format!("column {a} is zero")));
            };
            if hit_rows[r] {
                return Err(OperatorError::NotMonomial(format!(
                    "row {r} carries more than one nonzero entry"
                )));
            }
            hit_rows[r] = true;
            permutation[a] = r;
            scalings[a] = m[(r, a)];
        }
        Ok(MonomialFactorization { permutation, scalings })
    }

    /// Inverse within the positive cone: exact for monomial operators, dense
    /// otherwise; fails when the inverse leaves the cone.
    pub fn positive_inverse(&self) -> Result<StructuredOperator, OperatorError> {
        if let Ok(fact) = self.monomial_factorize() {
            return Ok(fact.inverse().to_operator(self.space.clone()));
        }
        let inv = self
            .full_matrix()
            .lu()
            .try_inverse()
            .ok_or(OperatorError::NotInvertible)?;
        if inv.iter().any(|v| *v < -1e-9) {
            return Err(OperatorError::NotInvertible);
        }
        StructuredOperator::from_kernel(self.space.clone(), inv)
    }
}

/// Monomial form of a lattice isomorphism: a permutation of the atoms together
/// with strictly positive per-atom scalings.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialFactorization {
    pub permutation: Vec<usize>,
    pub scalings: DVector<f64>,
}

impl MonomialFactorization {
    pub fn identity(n: usize) -> Self {
        MonomialFactorization {
            permutation: (0..n).collect(),
            scalings: DVector::from_element(n, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.permutation.iter().enumerate().all(|(a, s)| a == *s)
            && self.scalings.iter().all(|l| (l - 1.0).abs() <= tol)
    }

    /// `(self . other)(e_a) = self(other(e_a))`.
    pub fn compose(&self, other: &MonomialFactorization) -> MonomialFactorization {
        let n = self.dim();
        let permutation = (0..n).map(|a| self.permutation[other.permutation[a]]).collect();
        let scalings =
            DVector::from_fn(n, |a, _| other.scalings[a] * self.scalings[other.permutation[a]]);
        MonomialFactorization { permutation, scalings }
    }

    pub fn inverse(&self) -> MonomialFactorization {
        let n = self.dim();
        let mut permutation = vec![0usize; n];
        let mut scalings = DVector::zeros(n);
        for a in 0..n {
            permutation[self.permutation[a]] = a;
            scalings[self.permutation[a]] = 1.0 / self.scalings[a];
        }
        MonomialFactorization { permutation, scalings }
    }

    pub fn pow(&self, k: i64) -> MonomialFactorization {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = MonomialFactorization::identity(self.dim());
        for _ in 0..k.unsigned_abs() {
            out = base.compose(&out);
        }
        out
    }

    /// Rebuild the operator, represented as a single weighted Koopman term.
    pub fn to_operator(&self, space: Arc<LatticeSpace>) -> StructuredOperator {
        let n = self.dim();
        // T e_a = lambda(a) e_{sigma(a)} means row sigma(a) reads from column a
        let inverse = self.inverse();
        let map = inverse.permutation.clone();
        let scale = DVector::from_fn(n, |b, _| self.scalings[map[b]]);
        StructuredOperator::new(
            space,
            DMatrix::zeros(n, n),
            vec![SingularTerm { map, scale }],
        )
        .expect("monomial data is valid")
    }
}
