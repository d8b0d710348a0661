//! The reversible/stable splitting of a bounded positive family: a positive
//! projection commuting with the family whose range carries an extended group
//! representation and whose kernel holds the orbits that vanish along the
//! directed net; plus the triviality test for the group part in the atomic
//! coordinates of the range.

use nalgebra::{DMatrix, DVector};
use num_traits::One;
use thiserror::Error;

use crate::groups::{self, GroupError, Rational};
use crate::linalg;
use crate::operator::{MonomialFactorization, OperatorError};
use crate::semigroup::{RepresentationKind, SemigroupRepresentation};
use crate::space::{induced_lattice, LatticeError, LatticeSpace, LatticeVector};

#[derive(Debug, Error)]
pub enum JdlgError {
    #[error("representation is not certified bounded: {0}")]
    NotBounded(String),
    #[error("family does not commute with its splitting projection (residual {0:e})")]
    NonCommutingFamily(f64),
    #[error("splitting projection violates positivity (minimum entry {0:e})")]
    PositivityViolated(f64),
    #[error("no quasi-interior fixed point available")]
    NoQuasiInteriorFixedPoint,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("restriction to the reversible part is not a lattice isomorphism: {0}")]
    NotLatticeIsomorphism(String),
    #[error(transparent)]
    Semigroup(#[from] crate::semigroup::SemigroupError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// The computed splitting: projection, bases of both parts, and access to the
/// group representation carried by the range.
#[derive(Debug, Clone)]
pub struct JdlgSplit {
    projection: DMatrix<f64>,
    reversible_basis: Vec<DVector<f64>>,
    stable_basis: Vec<DVector<f64>>,
}

/// Tolerance band around modulus one for the peripheral spectrum.
const UNIMODULAR_BAND: f64 = 1e-8;

/// Compute the splitting projection as the product of the per-generator
/// spectral projections onto the unimodular (respectively imaginary-axis)
/// part of the spectrum; commuting power-bounded matrices admit commuting
/// spectral projections, and a joint eigencomponent survives the net exactly
/// when every generator eigenvalue has modulus one.
pub fn jdlg_split(rep: &SemigroupRepresentation) -> Result<JdlgSplit, JdlgError> {
    let cert = rep.is_bounded()?;
    if !cert.certified {
        return Err(JdlgError::NotBounded(cert.detail));
    }
    let n = rep.dim();
    let mut projection = DMatrix::<f64>::identity(n, n);
    match rep.kind() {
        RepresentationKind::Generated { operators, .. } => {
            for op in operators {
                let m = op.full_matrix();
                let selected: Vec<_> = linalg::complex_eigenvalues(&m)
                    .into_iter()
                    .filter(|l| (l.norm() - 1.0).abs() <= UNIMODULAR_BAND)
                    .collect();
                let p = linalg::spectral_projection(&m, &selected);
                projection = &projection * p;
            }
        }
        RepresentationKind::ContinuousTime { .. } => {
            let q = rep.generator_matrix().expect("continuous kind");
            let selected: Vec<_> = linalg::complex_eigenvalues(&q)
                .into_iter()
                .filter(|l| l.re.abs() <= UNIMODULAR_BAND)
                .collect();
            projection = linalg::spectral_projection(&q, &selected);
        }
    }
    // the product of commuting projections can drift from idempotence
    for _ in 0..4 {
        let residual = (&projection * &projection - &projection).norm();
        if residual <= 1e-12 * projection.norm().max(1.0) {
            break;
        }
        projection = 3.0 * (&projection * &projection)
            - 2.0 * (&projection * &projection * &projection);
    }

    let min_entry = projection.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    if min_entry < -1e-9 {
        return Err(JdlgError::PositivityViolated(min_entry));
    }
    let scale = projection.amax().max(1.0);
    for m in rep.generator_full_matrices()? {
        let residual = (&projection * &m - &m * &projection).amax();
        let op_scale = m.amax().max(1.0);
        if residual > 1e-9 * scale * op_scale {
            return Err(JdlgError::NonCommutingFamily(residual));
        }
    }

    let svd = projection.clone().svd(true, true);
    let rank = svd.singular_values.iter().filter(|s| **s > 0.5).count();
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let reversible_basis = (0..rank).map(|k| u.column(k).into_owned()).collect();
    let stable_basis = (rank..n).map(|k| v_t.row(k).transpose()).collect();
    Ok(JdlgSplit { projection, reversible_basis, stable_basis })
}

impl JdlgSplit {
    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn reversible_basis(&self) -> &[DVector<f64>] {
        &self.reversible_basis
    }

    pub fn stable_basis(&self) -> &[DVector<f64>] {
        &self.stable_basis
    }

    pub fn reversible_dim(&self) -> usize {
        self.reversible_basis.len()
    }

    /// Atoms of the induced lattice on the range, sup-normalized.
    pub fn range_atoms(
        &self,
        space: &std::sync::Arc<LatticeSpace>,
    ) -> Result<Vec<DVector<f64>>, JdlgError> {
        if self.reversible_dim() == 0 {
            return Ok(Vec::new());
        }
        let induced = induced_lattice(space.clone(), self.projection.clone(), 1e-8)?;
        Ok(induced.range_atoms()?)
    }

    /// Monomial form of each generator restricted to the range, in the atomic
    /// coordinates of the induced lattice.
    pub fn restricted_monomials(
        &self,
        rep: &SemigroupRepresentation,
    ) -> Result<(Vec<Rational>, Vec<MonomialFactorization>), JdlgError> {
        let atoms = self.range_atoms(rep.space())?;
        let (times, mats): (Vec<Rational>, Vec<DMatrix<f64>>) = match rep.kind() {
            RepresentationKind::Generated { generators, operators, .. } => (
                generators.clone(),
                operators.iter().map(|o| o.full_matrix()).collect(),
            ),
            RepresentationKind::ContinuousTime { .. } => (
                vec![Rational::one()],
                vec![rep.evaluate_real(1.0)?.full_matrix()],
            ),
        };
        let mut monomials = Vec::new();
        for m in &mats {
            monomials.push(restrict_monomially(m, &atoms)?);
        }
        Ok((times, monomials))
    }

    /// The group evaluator on the reversible part: the restrictions are
    /// invertible lattice isomorphisms, so the semigroup assignment extends
    /// uniquely to the generated group.
    pub fn group_evaluator(
        &self,
        rep: &SemigroupRepresentation,
    ) -> Result<groups::GroupEvaluator, JdlgError> {
        let (times, monomials) = self.restricted_monomials(rep)?;
        let k = self.reversible_dim();
        let induced_space = LatticeSpace::unit(k.max(1), rep.space().exponent());
        let values: Vec<_> = monomials
            .iter()
            .map(|m| m.to_operator(induced_space.clone()))
            .collect();
        Ok(groups::extend_hom_to_group(&times, &values)?)
    }
}

// match T u_j against lambda * u_l for the positive disjoint atom basis
fn restrict_monomially(
    m: &DMatrix<f64>,
    atoms: &[DVector<f64>],
) -> Result<MonomialFactorization, JdlgError> {
    let k = atoms.len();
    let mut permutation = vec![usize::MAX; k];
    let mut scalings = DVector::zeros(k);
    let mut hit = vec![false; k];
    for j in 0..k {
        let v = m * &atoms[j];
        let nv = v.norm();
        let mut best: Option<(usize, f64, f64)> = None;
        for (l, a) in atoms.iter().enumerate() {
            let lambda = v.dot(a) / a.dot(a);
            let residual = (&v - a * lambda).norm();
            if best.map_or(true, |(_, _, r)| residual < r) {
                best = Some((l, lambda, residual));
            }
        }
        let (l, lambda, residual) = best.expect("at least one atom");
        if residual > 1e-7 * nv.max(1.0) || lambda <= 0.0 {
            return Err(JdlgError::NotLatticeIsomorphism(format!(
                "image of range atom {j} is not a positive multiple of a range atom"
            )));
        }
        if hit[l] {
            return Err(JdlgError::NotLatticeIsomorphism(format!(
                "two range atoms map onto atom {l}"
            )));
        }
        hit[l] = true;
        permutation[j] = l;
        scalings[j] = lambda;
    }
    Ok(MonomialFactorization { permutation, scalings })
}

/// Verdict of the triviality test for the group part on the reversible range.
#[derive(Debug, Clone, PartialEq)]
pub enum TrivialityVerdict {
    /// every generator acts as the identity on the range
    Trivial,
    /// non-divisible index class acting non-trivially: the expected witness
    NontrivialWitness {
        permutations: Vec<Vec<usize>>,
        lambdas: Vec<Vec<f64>>,
        orbits: Vec<Vec<usize>>,
    },
    /// divisible index class with a finite non-trivial orbit: impossible for
    /// a genuine representation of the declared class
    Inconsistent { obstruction: String, orbits: Vec<Vec<usize>> },
}

fn orbit_partition(permutations: &[Vec<usize>], k: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; k];
    let mut orbits = Vec::new();
    for start in 0..k {
        if seen[start] {
            continue;
        }
        let mut orbit = vec![start];
        seen[start] = true;
        let mut frontier = vec![start];
        while let Some(v) = frontier.pop() {
            for p in permutations {
                let w = p[v];
                if !seen[w] {
                    seen[w] = true;
                    orbit.push(w);
                    frontier.push(w);
                }
            }
        }
        orbit.sort();
        orbits.push(orbit);
    }
    orbits
}

fn permutation_order(p: &[usize]) -> u32 {
    let mut order = 1u32;
    let mut current: Vec<usize> = p.to_vec();
    while current.iter().enumerate().any(|(i, &x)| i != x) {
        current = current.iter().map(|&x| p[x]).collect();
        order += 1;
        if order > 10_000 {
            break;
        }
    }
    order
}

/// Factor the restricted family monomially over the range atoms and decide
/// whether the extended group representation is trivial. Requires a
/// quasi-interior fixed point lying in the range.
pub fn triviality_test_atomic(
    split: &JdlgSplit,
    rep: &SemigroupRepresentation,
) -> Result<TrivialityVerdict, JdlgError> {
    let y = rep
        .quasi_interior_fixed_point()?
        .ok_or(JdlgError::NoQuasiInteriorFixedPoint)?;
    let py = split.projection() * y.coords();
    if rep.space().norm(&(&py - y.coords())) > 1e-8 * (1.0 + rep.space().norm(y.coords())) {
        return Err(JdlgError::PreconditionViolated(
            "quasi-interior fixed point does not lie in the reversible range".into(),
        ));
    }
    let (_, monomials) = split.restricted_monomials(rep)?;
    let k = split.reversible_dim();
    let trivial = monomials.iter().all(|m| m.is_identity(1e-8));
    if trivial {
        return Ok(TrivialityVerdict::Trivial);
    }
    let permutations: Vec<Vec<usize>> = monomials.iter().map(|m| m.permutation.clone()).collect();
    let lambdas: Vec<Vec<f64>> = monomials
        .iter()
        .map(|m| m.scalings.iter().copied().collect())
        .collect();
    let orbits = orbit_partition(&permutations, k);
    let (divisible, _) = rep.index_is_divisible();
    if divisible {
        // a divisible group cannot act non-trivially on finitely many atoms;
        // name the obstruction concretely via the root search
        let mut obstruction =
            "divisible index class acts non-trivially on a finite atom set".to_string();
        let induced_space = LatticeSpace::unit(k, rep.space().exponent());
        for m in &monomials {
            if m.permutation.iter().enumerate().all(|(i, &x)| i == x) {
                continue;
            }
            let order = permutation_order(&m.permutation);
            if k <= 9 {
                let op = m.to_operator(induced_space.clone());
                if let Ok(None) = groups::nth_root_in_monomial_group(&op, order) {
                    obstruction = format!(
                        "atom permutation of order {order} admits no {order}-th root \
                         in the monomial group (exhaustive search)"
                    );
                    break;
                }
            }
        }
        return Ok(TrivialityVerdict::Inconsistent { obstruction, orbits });
    }
    Ok(TrivialityVerdict::NontrivialWitness { permutations, lambdas, orbits })
}

/// Check that a stable-part vector decays along the net before the horizon.
pub fn stable_decay_check(
    split: &JdlgSplit,
    rep: &SemigroupRepresentation,
    x: &LatticeVector,
    tol: f64,
    horizon: usize,
) -> Result<bool, JdlgError> {
    let px = split.projection() * x.coords();
    let nx = rep.space().norm(x.coords());
    if rep.space().norm(&px) > tol.max(1e-9 * nx.max(1.0)) {
        return Err(JdlgError::PreconditionViolated(
            "probe has a component in the reversible range".into(),
        ));
    }
    if nx <= tol {
        return Ok(true);
    }
    match rep.kind() {
        RepresentationKind::Generated { operators, .. } => {
            let mut state = x.coords().clone();
            for step in 0..horizon {
                state = operators[step % operators.len()].apply_coords(&state);
                if rep.space().norm(&state) < tol {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        RepresentationKind::ContinuousTime { .. } => {
            let mut t = 1.0;
            while t <= horizon as f64 {
                let norm = rep
                    .space()
                    .norm(&rep.evaluate_real(t)?.apply_coords(x.coords()));
                if norm < tol {
                    return Ok(true);
                }
                t *= 2.0;
            }
            Ok(false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{koopman_counterexample, RationalGroupClass};
    use crate::operator::StructuredOperator;
    use crate::semigroup::IndexClass;
    use crate::space::Exponent;
    use std::collections::BTreeSet;

    fn rat(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn single_generator(m: DMatrix<f64>, class: RationalGroupClass) -> SemigroupRepresentation {
        let n = m.nrows();
        let space = LatticeSpace::unit(n, Exponent::Finite(1.0));
        SemigroupRepresentation::generated(
            space.clone(),
            vec![rat("1")],
            vec![StructuredOperator::from_kernel(space, m).unwrap()],
            IndexClass::declare(class),
        )
        .unwrap()
    }

    #[test]
    fn swap_matrix_is_fully_reversible() {
        let rep = single_generator(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            RationalGroupClass::AllPrimes,
        );
        let split = jdlg_split(&rep).unwrap();
        assert!((split.projection() - DMatrix::identity(2, 2)).amax() < 1e-10);
        assert_eq!(split.stable_basis().len(), 0);
    }

    #[test]
    fn averaging_matrix_splits_into_perron_direction() {
        let pi = DMatrix::from_element(2, 2, 0.5);
        let rep = single_generator(pi.clone(), RationalGroupClass::AllPrimes);
        let split = jdlg_split(&rep).unwrap();
        assert!((split.projection() - &pi).amax() < 1e-10, "Pi is its own peripheral projection");
        assert_eq!(split.reversible_dim(), 1);
    }

    #[test]
    fn identity_splits_trivially() {
        let rep = single_generator(DMatrix::identity(3, 3), RationalGroupClass::AllPrimes);
        let split = jdlg_split(&rep).unwrap();
        assert!((split.projection() - DMatrix::identity(3, 3)).amax() < 1e-10);
        assert_eq!(
            triviality_test_atomic(&split, &rep).unwrap(),
            TrivialityVerdict::Trivial
        );
    }

    #[test]
    fn unbounded_family_is_rejected() {
        let rep = single_generator(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            RationalGroupClass::AllPrimes,
        );
        assert!(matches!(jdlg_split(&rep), Err(JdlgError::NotBounded(_))));
    }

    #[test]
    fn dyadic_counterexample_yields_nontrivial_witness() {
        let class = RationalGroupClass::prime_localized(BTreeSet::from([2])).unwrap();
        let rep = koopman_counterexample(&class, 3).unwrap();
        let split = jdlg_split(&rep).unwrap();
        // permutations have fully unimodular spectrum
        assert_eq!(split.reversible_dim(), 3);
        match triviality_test_atomic(&split, &rep).unwrap() {
            TrivialityVerdict::NontrivialWitness { permutations, lambdas, orbits } => {
                assert_eq!(orbits, vec![vec![0, 1, 2]], "single orbit of all three atoms");
                assert!(permutations.iter().any(|p| p.iter().enumerate().any(|(i, &x)| i != x)));
                for l in lambdas.iter().flatten() {
                    assert!((l - 1.0).abs() < 1e-10, "isometric cocycle");
                }
            }
            other => panic!("expected a nontrivial witness, got {other:?}"),
        }
    }

    #[test]
    fn dyadic_operators_over_full_rationals_are_inconsistent() {
        let class = RationalGroupClass::prime_localized(BTreeSet::from([2])).unwrap();
        let rep = koopman_counterexample(&class, 3).unwrap();
        // re-declare the same operators over the full rationals
        let RepresentationKind::Generated { generators, operators, .. } = rep.kind() else {
            unreachable!()
        };
        let lying = SemigroupRepresentation::generated(
            rep.space().clone(),
            generators.clone(),
            operators.clone(),
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        let split = jdlg_split(&lying).unwrap();
        match triviality_test_atomic(&split, &lying).unwrap() {
            TrivialityVerdict::Inconsistent { obstruction, .. } => {
                assert!(obstruction.contains("root"), "root obstruction named: {obstruction}");
            }
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn stable_decay_and_preconditions() {
        let pi = DMatrix::from_element(3, 3, 1.0 / 3.0);
        let mix = &pi * 0.5 + DMatrix::identity(3, 3) * 0.5;
        let rep = single_generator(mix, RationalGroupClass::AllPrimes);
        let split = jdlg_split(&rep).unwrap();
        assert_eq!(split.reversible_dim(), 1);
        // a mean-zero vector lies in the stable part and decays
        let x = LatticeVector::new(rep.space().clone(), vec![1.0, -1.0, 0.0]).unwrap();
        assert!(stable_decay_check(&split, &rep, &x, 1e-8, 200).unwrap());
        // zero decays immediately
        let zero = LatticeVector::zeros(rep.space().clone());
        assert!(stable_decay_check(&split, &rep, &zero, 1e-8, 1).unwrap());
        // a probe with a reversible component is rejected
        let bad = LatticeVector::new(rep.space().clone(), vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            stable_decay_check(&split, &rep, &bad, 1e-8, 10),
            Err(JdlgError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn ctmc_stable_decay_rate_matches_spectral_gap() {
        let space = LatticeSpace::unit(3, Exponent::Finite(1.0));
        let jump = DMatrix::from_element(3, 3, 1.0 / 3.0);
        let rep = SemigroupRepresentation::continuous_time(space, None, jump, true).unwrap();
        let split = jdlg_split(&rep).unwrap();
        assert_eq!(split.reversible_dim(), 1);
        let x = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        // spectral gap of Q = Pi - I is 1; observed decay over [2, 4] matches within 10%
        let n2 = rep.space().norm(&rep.evaluate_real(2.0).unwrap().apply_coords(&x));
        let n4 = rep.space().norm(&rep.evaluate_real(4.0).unwrap().apply_coords(&x));
        let observed_rate = -(n4 / n2).ln() / 2.0;
        assert!((observed_rate - 1.0).abs() < 0.1, "observed rate {observed_rate}");
    }

    #[test]
    fn fixed_vectors_are_preserved_by_projection() {
        let space = LatticeSpace::unit(4, Exponent::Finite(1.0));
        let jump = DMatrix::from_element(4, 4, 0.25);
        let rep = SemigroupRepresentation::continuous_time(space, None, jump, true).unwrap();
        let split = jdlg_split(&rep).unwrap();
        for f in rep.fixed_space().unwrap() {
            let pf = split.projection() * f.coords();
            assert!((pf - f.coords()).amax() < 1e-9);
        }
    }

    #[test]
    fn restriction_is_identity_on_convergent_range() {
        // the property behind strong convergence: once the net converges, the
        // restricted operators act as the identity on the range
        let space = LatticeSpace::unit(4, Exponent::Finite(1.0));
        let jump = DMatrix::from_element(4, 4, 0.25);
        let rep = SemigroupRepresentation::continuous_time(space, None, jump, true).unwrap();
        let split = jdlg_split(&rep).unwrap();
        let t1 = rep.evaluate_real(1.0).unwrap().full_matrix();
        for b in split.reversible_basis() {
            assert!((&t1 * b - b).amax() < 1e-8);
        }
        let (_, monomials) = split.restricted_monomials(&rep).unwrap();
        assert!(monomials[0].is_identity(1e-8));
    }

    #[test]
    fn cesaro_oracle_agrees_on_primitive_stochastic_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let n = rng.gen_range(2..6usize);
            let mut m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.05..1.0f64));
            for j in 0..n {
                let s: f64 = (0..n).map(|i| m[(i, j)]).sum();
                for i in 0..n {
                    m[(i, j)] /= s;
                }
            }
            let rep = single_generator(m.clone(), RationalGroupClass::AllPrimes);
            let split = jdlg_split(&rep).unwrap();
            // Cesaro averages of a primitive stochastic matrix converge to the
            // peripheral projection; independent construction by plain averaging
            let mut power = DMatrix::<f64>::identity(n, n);
            let mut cesaro = DMatrix::<f64>::zeros(n, n);
            let reps = 4000;
            for _ in 0..reps {
                cesaro += &power;
                power = &m * power;
            }
            cesaro /= reps as f64;
            assert!(
                (split.projection() - &cesaro).amax() < 1e-3,
                "spectral and Cesaro projections agree"
            );
        }
    }
}
