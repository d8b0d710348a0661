//! The verdict engine: evaluates the hypotheses of the convergence and
//! eigenvalue theorems on a concrete representation, issues rule-by-rule
//! verdicts whose consumed hypotheses are recorded, and cross-checks every
//! convergence claim by simulating the directed net against the computed
//! limit projection.

use nalgebra::{Complex, DMatrix, DVector};
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::groups::Rational;
use crate::jdlg::{self, JdlgError};
use crate::linalg;
use crate::operator::StructuredOperator;
use crate::report::{EigenvalueEntry, HypothesisStatus};
use crate::semigroup::{
    subinvariant_strictly_positive_functional, super_fixed_violation, RepresentationKind,
    SemigroupError, SemigroupRepresentation, Time,
};
use crate::space::{induced_lattice, LatticeError, LatticeVector};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("verdict contradicted by simulation: {0}")]
    CrossCheckFailed(String),
    #[error("space is not a sup-norm model")]
    NotAmSpace,
    #[error("representation is not irreducible")]
    NotIrreducible,
    #[error("transport remainder does not decay: stagnation at residual {residual:e}")]
    NoDecay { residual: f64, stagnation: Vec<f64> },
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Jdlg(#[from] JdlgError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Operator(#[from] crate::operator::OperatorError),
}

/// Tunable thresholds of the engine; all defaults are pinned here.
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// residual tolerance for the simulation cross-check
    pub tol: f64,
    /// net horizon: round-robin steps respectively the largest continuous time
    pub horizon: usize,
    /// depth of the domination search over sums of generators
    pub depth: usize,
    /// target residual for the transport-decay walk
    pub epsilon: f64,
    /// a coordinate counts as strictly positive above this relative threshold
    pub strictness: f64,
    /// cell flagged as a point mass; defaults to cell 0 on pure atomic models
    pub atom_cell: Option<usize>,
    /// user-supplied dominated kernel operator `0 <= K <= T_s` at time `s`
    pub dominated: Option<(Time, DMatrix<f64>)>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            tol: 1e-8,
            horizon: 64,
            depth: 8,
            epsilon: 0.1,
            strictness: 1e-10,
            atom_cell: None,
            dominated: None,
        }
    }
}

pub mod hypotheses {
    pub const POSITIVITY: &str = "positivity";
    pub const BOUNDEDNESS: &str = "boundedness";
    pub const DIVISIBILITY: &str = "divisibility";
    pub const ORDER_CONTINUOUS: &str = "order-continuous-norm";
    pub const QUASI_INTERIOR_FIXED_POINT: &str = "quasi-interior-fixed-point";
    pub const AM_COMPACT: &str = "am-compact-member";
    pub const IRREDUCIBILITY: &str = "irreducibility";
    pub const SUPER_FIXED: &str = "super-fixed-implies-fixed";
    pub const KERNEL_DOMINATION: &str = "kernel-domination";
}

pub mod rules {
    pub const CONVERGENCE_AM_COMPACT: &str = "convergence-am-compact";
    pub const CONVERGENCE_DOMINATED: &str = "convergence-dominated";
    pub const EIGENVALUE_ABSENCE_AM_COMPACT: &str = "eigenvalue-absence-am-compact";
    pub const EIGENVALUE_ABSENCE_DOMINATED: &str = "eigenvalue-absence-dominated";
    pub const ATOM_RANK_ONE: &str = "atom-rank-one-domination";
    pub const SUP_DUAL: &str = "sup-norm-dual-transfer";
}

/// Evidence for the super-fixed-implies-fixed property, in the order the
/// sufficient conditions are tested.
#[derive(Debug, Clone, PartialEq)]
pub enum SuperFixedEvidence {
    StrictlyMonotoneContractive,
    SubinvariantFunctional(DVector<f64>),
    Irreducible,
    AdjointLatticeHomomorphism,
    DirectSearchClean,
    Violation(DVector<f64>),
}

/// Test the sufficient conditions for "every super fixed point is fixed" in
/// order, falling back to a direct feasibility search for a violating vector.
pub fn check_super_fixed_implies_fixed(
    rep: &SemigroupRepresentation,
) -> Result<(HypothesisStatus, SuperFixedEvidence), AnalysisError> {
    let space = rep.space();
    // (a) strictly monotone norm and contractive operators
    if space.exponent().is_finite() {
        let all_contractive = rep
            .generator_full_matrices()?
            .iter()
            .all(|m| space.operator_norm(m) <= 1.0 + 1e-10);
        if all_contractive {
            return Ok((HypothesisStatus::Holds, SuperFixedEvidence::StrictlyMonotoneContractive));
        }
    }
    // (b) strictly positive subinvariant functional
    if let Some(phi) = subinvariant_strictly_positive_functional(rep)? {
        return Ok((HypothesisStatus::Holds, SuperFixedEvidence::SubinvariantFunctional(phi)));
    }
    // (c) irreducibility
    if rep.is_irreducible()? {
        return Ok((HypothesisStatus::Holds, SuperFixedEvidence::Irreducible));
    }
    // (d) order continuous norm with lattice homomorphism adjoints
    if space.exponent().is_finite() {
        let all_hom = match rep.kind() {
            RepresentationKind::Generated { operators, .. } => {
                operators.iter().all(|op| op.is_adjoint_lattice_homomorphism())
            }
            RepresentationKind::ContinuousTime { .. } => {
                rep.evaluate_real(1.0)?.is_adjoint_lattice_homomorphism()
            }
        };
        if all_hom {
            return Ok((HypothesisStatus::Holds, SuperFixedEvidence::AdjointLatticeHomomorphism));
        }
    }
    // direct search for a super fixed vector that is not fixed
    match super_fixed_violation(rep)? {
        Some(witness) => Ok((HypothesisStatus::Fails, SuperFixedEvidence::Violation(witness))),
        None => Ok((HypothesisStatus::Holds, SuperFixedEvidence::DirectSearchClean)),
    }
}

/// One domination witness: the time, the dominated kernel operator's source,
/// and the mass it gives to the fixed atom.
#[derive(Debug, Clone)]
pub struct DominationWitness {
    pub time: Time,
    pub source: &'static str,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct DominationOutcome {
    pub status: HypothesisStatus,
    /// one witness per positive fixed-lattice atom, in atom order
    pub witnesses: Vec<Option<DominationWitness>>,
    pub fixed_atoms: Vec<DVector<f64>>,
}

// search points of the net for domination and membership searches
fn search_times(rep: &SemigroupRepresentation, depth: usize) -> Vec<(Time, Vec<u64>)> {
    match rep.kind() {
        RepresentationKind::Generated { generators, .. } => {
            let k = generators.len();
            let mut out = Vec::new();
            let mut stack: Vec<Vec<u64>> = vec![vec![0; k]];
            // enumerate exponent vectors with total between 1 and depth
            fn enumerate(
                idx: usize,
                remaining: u64,
                current: &mut Vec<u64>,
                out: &mut Vec<Vec<u64>>,
            ) {
                if idx + 1 == current.len() {
                    for n in 0..=remaining {
                        current[idx] = n;
                        out.push(current.clone());
                    }
                    current[idx] = 0;
                    return;
                }
                for n in 0..=remaining {
                    current[idx] = n;
                    enumerate(idx + 1, remaining - n, current, out);
                }
                current[idx] = 0;
            }
            let mut exponents = Vec::new();
            enumerate(0, depth as u64, &mut stack[0], &mut exponents);
            exponents.retain(|e| e.iter().sum::<u64>() > 0);
            exponents.sort();
            exponents.dedup();
            for e in exponents {
                let mut t = Rational::from_integer(0.into());
                for (i, n) in e.iter().enumerate() {
                    t += &generators[i] * Rational::from_integer((*n).into());
                }
                out.push((Time::Rational(t), e));
            }
            out.sort_by(|a, b| {
                a.0.as_f64().partial_cmp(&b.0.as_f64()).unwrap_or(std::cmp::Ordering::Equal)
            });
            out
        }
        RepresentationKind::ContinuousTime { .. } => [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|t| (Time::Real(*t), Vec::new()))
            .collect(),
    }
}

fn evaluate_at(
    rep: &SemigroupRepresentation,
    time: &Time,
    exponents: &[u64],
) -> Result<StructuredOperator, SemigroupError> {
    match rep.kind() {
        RepresentationKind::Generated { operators, .. } => {
            let mut out = StructuredOperator::identity_singular(rep.space().clone());
            for (op, e) in operators.iter().zip(exponents) {
                for _ in 0..*e {
                    out = op.compose(&out)?;
                }
            }
            Ok(out)
        }
        RepresentationKind::ContinuousTime { .. } => rep.evaluate_real(time.as_f64()),
    }
}

/// Positive disjoint generators of the fixed lattice, obtained from the joint
/// spectral projection at eigenvalue one (eigenvalue zero of the generator).
pub fn fixed_lattice_atoms(
    rep: &SemigroupRepresentation,
) -> Result<Vec<DVector<f64>>, AnalysisError> {
    let n = rep.dim();
    let mut projection = DMatrix::<f64>::identity(n, n);
    match rep.kind() {
        RepresentationKind::Generated { operators, .. } => {
            for op in operators {
                let m = op.full_matrix();
                let selected: Vec<_> = linalg::complex_eigenvalues(&m)
                    .into_iter()
                    .filter(|l| (l - Complex::new(1.0, 0.0)).norm() <= 1e-8)
                    .collect();
                projection = &projection * linalg::spectral_projection(&m, &selected);
            }
        }
        RepresentationKind::ContinuousTime { .. } => {
            let q = rep.generator_matrix().expect("continuous kind");
            let selected: Vec<_> = linalg::complex_eigenvalues(&q)
                .into_iter()
                .filter(|l| l.norm() <= 1e-8)
                .collect();
            projection = linalg::spectral_projection(&q, &selected);
        }
    }
    if projection.amax() <= 1e-12 {
        return Ok(Vec::new());
    }
    let induced = induced_lattice(rep.space().clone(), projection, 1e-7)?;
    if induced.rank() == 0 {
        return Ok(Vec::new());
    }
    Ok(induced.range_atoms()?)
}

/// For every positive fixed-lattice atom, search the net for a dominated
/// kernel operator giving it strictly positive mass: either the structural
/// kernel band of an evaluated operator or a user-supplied dominated kernel.
pub fn check_kernel_domination(
    rep: &SemigroupRepresentation,
    options: &AnalysisOptions,
) -> Result<DominationOutcome, AnalysisError> {
    let fixed_atoms = fixed_lattice_atoms(rep)?;
    if fixed_atoms.is_empty() {
        // no positive fixed vectors: the domination requirement is vacuous
        return Ok(DominationOutcome {
            status: HypothesisStatus::Holds,
            witnesses: Vec::new(),
            fixed_atoms,
        });
    }
    let mut candidates: Vec<(Time, &'static str, DMatrix<f64>)> = Vec::new();
    let mut any_kernel_mass = false;
    for (time, exponents) in search_times(rep, options.depth) {
        let op = evaluate_at(rep, &time, &exponents)?;
        let kernel = op.kernel_part().clone();
        if kernel.amax() > 0.0 {
            any_kernel_mass = true;
        }
        candidates.push((time, "band-decomposition", kernel));
    }
    if let Some((time, supplied)) = &options.dominated {
        // verify 0 <= K <= T_s entrywise before use
        let op = match (rep.kind(), time) {
            (RepresentationKind::Generated { .. }, Time::Rational(r)) => {
                rep.evaluate_rational(r)?
            }
            _ => rep.evaluate_real(time.as_f64())?,
        };
        let full = op.full_matrix();
        let dominated = supplied.iter().all(|v| *v >= -1e-12)
            && (full - supplied).iter().all(|v| *v >= -1e-9);
        if dominated {
            any_kernel_mass = any_kernel_mass || supplied.amax() > 0.0;
            candidates.insert(0, (time.clone(), "supplied", supplied.clone()));
        }
    }
    let mut witnesses = Vec::new();
    for atom in &fixed_atoms {
        let threshold = options.strictness * rep.space().norm(atom).max(1.0);
        let mut found = None;
        for (time, source, kernel) in &candidates {
            let mass = rep.space().norm(&(kernel * atom));
            if mass > threshold {
                found = Some(DominationWitness { time: time.clone(), source, mass });
                break;
            }
        }
        witnesses.push(found);
    }
    let status = if witnesses.iter().all(|w| w.is_some()) {
        HypothesisStatus::Holds
    } else if !any_kernel_mass {
        // structurally zero kernel band along the whole searched net
        HypothesisStatus::Fails
    } else {
        // the search is finite while the requirement quantifies over the
        // whole semigroup: exhaustion is inconclusive
        HypothesisStatus::Undetermined
    };
    Ok(DominationOutcome { status, witnesses, fixed_atoms })
}

/// Walk of the directed net recording the transport-remainder decay
/// `||(T_t - K_t) y||` until it falls below `epsilon`.
#[derive(Debug, Clone)]
pub struct RemainderDecay {
    pub time: Time,
    pub residual: f64,
    pub trace: Vec<(f64, f64)>,
    pub monotone: bool,
}

pub fn remainder_decay(
    rep: &SemigroupRepresentation,
    y: &LatticeVector,
    epsilon: f64,
    horizon: usize,
) -> Result<RemainderDecay, AnalysisError> {
    let space = rep.space();
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut monotone = true;
    let mut last = f64::INFINITY;
    let push = |t: f64, r: f64, mon: &mut bool, last: &mut f64, trace: &mut Vec<(f64, f64)>| {
        if r > *last + 1e-12 * (1.0 + *last) {
            *mon = false;
        }
        *last = r;
        trace.push((t, r));
    };
    match rep.kind() {
        RepresentationKind::Generated { generators, operators, .. } => {
            let mut op = StructuredOperator::identity_singular(space.clone());
            let mut t = Rational::from_integer(0.into());
            for step in 0..horizon {
                let g = step % operators.len();
                op = operators[g].compose(&op)?;
                t += &generators[g];
                let (_, r_part) = op.band_decompose();
                let residual = space.norm(&r_part.apply_coords(y.coords()));
                push(
                    t.to_f64().unwrap_or(f64::NAN),
                    residual,
                    &mut monotone,
                    &mut last,
                    &mut trace,
                );
                if residual < epsilon {
                    return Ok(RemainderDecay {
                        time: Time::Rational(t),
                        residual,
                        trace,
                        monotone,
                    });
                }
            }
        }
        RepresentationKind::ContinuousTime { .. } => {
            let mut t = 1.0f64.min(horizon as f64);
            loop {
                let op = rep.evaluate_real(t)?;
                let (_, r_part) = op.band_decompose();
                let residual = space.norm(&r_part.apply_coords(y.coords()));
                push(t, residual, &mut monotone, &mut last, &mut trace);
                if residual < epsilon {
                    return Ok(RemainderDecay { time: Time::Real(t), residual, trace, monotone });
                }
                if 2.0 * t > horizon as f64 {
                    break;
                }
                t *= 2.0;
            }
        }
    }
    let stagnation = trace.last().map(|(_, r)| *r).unwrap_or(f64::INFINITY);
    Err(AnalysisError::NoDecay {
        residual: stagnation,
        stagnation: y.coords().iter().copied().collect(),
    })
}

/// Joint unimodular eigenvalue tuples of the family, computed on the
/// reversible part of the splitting; continuous-time families report
/// `lambda_t = exp(t mu)` through the generator eigenvalue `mu`.
pub fn unimodular_eigenvalues(
    rep: &SemigroupRepresentation,
) -> Result<Vec<EigenvalueEntry>, AnalysisError> {
    match rep.kind() {
        RepresentationKind::ContinuousTime { .. } => {
            let q = rep.generator_matrix().expect("continuous kind");
            let qc = q.map(|v| Complex::new(v, 0.0));
            let n = q.nrows();
            let eigs = linalg::complex_eigenvalues(&q);
            let mut central: Vec<Complex<f64>> =
                eigs.into_iter().filter(|l| l.re.abs() <= 1e-8).collect();
            central.sort_by(|a, b| {
                a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut out = Vec::new();
            let mut idx = 0;
            while idx < central.len() {
                let mu = central[idx];
                let mut multiplicity = 1;
                while idx + multiplicity < central.len()
                    && (central[idx + multiplicity] - mu).norm() < 1e-7
                {
                    multiplicity += 1;
                }
                let shifted = &qc - DMatrix::<Complex<f64>>::identity(n, n) * mu;
                for z in linalg::complex_null_space_known(&shifted, multiplicity) {
                    let residual = (&qc * &z - &z * mu).norm();
                    if residual > 1e-9 * z.norm() {
                        continue;
                    }
                    let lambda = mu.exp();
                    out.push(EigenvalueEntry {
                        per_generator: vec![[lambda.re, lambda.im]],
                        generator_exponent: Some([mu.re, mu.im]),
                        trivial: (lambda - Complex::new(1.0, 0.0)).norm() <= 1e-8,
                    });
                }
                idx += multiplicity;
            }
            Ok(out)
        }
        RepresentationKind::Generated { operators, .. } => {
            let split = jdlg::jdlg_split(rep)?;
            let k = split.reversible_dim();
            if k == 0 {
                return Ok(Vec::new());
            }
            let n = rep.dim();
            let mut basis = DMatrix::<f64>::zeros(n, k);
            for (j, b) in split.reversible_basis().iter().enumerate() {
                basis.set_column(j, b);
            }
            let restricted: Vec<DMatrix<f64>> = operators
                .iter()
                .map(|op| basis.transpose() * op.full_matrix() * &basis)
                .collect();
            let full: Vec<DMatrix<Complex<f64>>> = operators
                .iter()
                .map(|op| op.full_matrix().map(|v| Complex::new(v, 0.0)))
                .collect();
            // a generic combination of commuting semisimple matrices separates
            // the joint eigenspaces; retry over seeds until residuals confirm
            'seeds: for seed in 1..=8u64 {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut combo = DMatrix::<f64>::zeros(k, k);
                for m in &restricted {
                    combo += m * rng.gen_range(0.2..1.0);
                }
                let eigs = linalg::complex_eigenvalues(&combo);
                let comboc = combo.map(|v| Complex::new(v, 0.0));
                let mut used = vec![false; eigs.len()];
                let mut out = Vec::new();
                for i in 0..eigs.len() {
                    if used[i] {
                        continue;
                    }
                    let mu = eigs[i];
                    let mut cluster = vec![i];
                    for (j, other) in eigs.iter().enumerate().skip(i + 1) {
                        if !used[j] && (other - mu).norm() < 1e-7 {
                            cluster.push(j);
                        }
                    }
                    for &j in &cluster {
                        used[j] = true;
                    }
                    let shifted =
                        &comboc - DMatrix::<Complex<f64>>::identity(k, k) * mu;
                    for z in linalg::complex_null_space_known(&shifted, cluster.len()) {
                        let ambient = basis.map(|v| Complex::new(v, 0.0)) * &z;
                        let mut tuple = Vec::new();
                        let mut trivial = true;
                        for fm in &full {
                            let image = fm * &ambient;
                            let lambda = ambient.dotc(&image) / ambient.dotc(&ambient);
                            if (&image - &ambient * lambda).norm() > 1e-9 * ambient.norm() {
                                continue 'seeds;
                            }
                            if (lambda - Complex::new(1.0, 0.0)).norm() > 1e-8 {
                                trivial = false;
                            }
                            tuple.push([lambda.re, lambda.im]);
                        }
                        out.push(EigenvalueEntry {
                            per_generator: tuple,
                            generator_exponent: None,
                            trivial,
                        });
                    }
                }
                out.sort_by(|a, b| {
                    a.per_generator
                        .iter()
                        .flatten()
                        .partial_cmp(b.per_generator.iter().flatten())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                return Ok(out);
            }
            Err(AnalysisError::CrossCheckFailed(
                "joint eigenvector extraction did not converge".into(),
            ))
        }
    }
}

/// Period candidates of a continuous-time family: nonzero purely imaginary
/// generator eigenvalues `i b` yield candidate periods `2 pi / |b|`. An empty
/// list certifies the absence of non-trivial periodic orbits.
pub fn periodic_orbit_check(
    rep: &SemigroupRepresentation,
) -> Result<Vec<f64>, AnalysisError> {
    let Some(q) = rep.generator_matrix() else {
        return Err(AnalysisError::Semigroup(SemigroupError::RationalTimeRequired));
    };
    let mut periods: Vec<f64> = linalg::complex_eigenvalues(&q)
        .into_iter()
        .filter(|l| l.re.abs() <= 1e-8 && l.im.abs() > 1e-8)
        .map(|l| 2.0 * std::f64::consts::PI / l.im.abs())
        .collect();
    periods.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    periods.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(periods)
}

mod engine;

pub use engine::{am_space_dual_analysis, atom_theorem_check, VerdictEngine};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{koopman_counterexample, RationalGroupClass};
    use crate::semigroup::{Flow, IndexClass};
    use crate::space::{Exponent, LatticeSpace};
    use std::collections::BTreeSet;

    fn rat(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn uniform_ctmc(n: usize) -> SemigroupRepresentation {
        let space = LatticeSpace::unit(n, Exponent::Finite(1.0));
        let jump = DMatrix::from_element(n, n, 1.0 / n as f64);
        SemigroupRepresentation::continuous_time(space, None, jump, true).unwrap()
    }

    fn jump_flow(n: usize) -> SemigroupRepresentation {
        let space = LatticeSpace::new(
            (0..n).map(|i| format!("c{i}")).collect(),
            vec![1.0 / n as f64; n],
            Exponent::Finite(1.0),
        )
        .unwrap();
        let flow = Flow { rate: 1.0, map: (0..n).map(|a| (a + 1) % n).collect() };
        let jump = DMatrix::from_element(n, n, 1.0 / n as f64);
        SemigroupRepresentation::continuous_time(space, Some(flow), jump, true).unwrap()
    }

    #[test]
    fn super_fixed_conditions_in_order() {
        // conservative chain on L^1: contractive, so condition (a) fires
        let rep = uniform_ctmc(3);
        let (status, evidence) = check_super_fixed_implies_fixed(&rep).unwrap();
        assert_eq!(status, HypothesisStatus::Holds);
        assert_eq!(evidence, SuperFixedEvidence::StrictlyMonotoneContractive);

        // irreducible representation on a sup-norm space dodges (a) and (b)
        // fires via the constant functional or irreducibility
        let space = LatticeSpace::unit(3, Exponent::Sup);
        let shift = StructuredOperator::koopman(space.clone(), vec![1, 2, 0], 1.0).unwrap();
        let rep = SemigroupRepresentation::generated(
            space,
            vec![rat("1")],
            vec![shift],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        let (status, _) = check_super_fixed_implies_fixed(&rep).unwrap();
        assert_eq!(status, HypothesisStatus::Holds);

        // sub-stochastic reducible chain with strict mass loss: no violation
        let space = LatticeSpace::unit(2, Exponent::Sup);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        // sup-norm of this matrix is 1, but make the space sup-norm so (a)
        // does not fire; (b) fires with phi = 1
        let rep = SemigroupRepresentation::generated(
            space.clone(),
            vec![rat("1")],
            vec![StructuredOperator::from_kernel(space, m).unwrap()],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        let (status, _) = check_super_fixed_implies_fixed(&rep).unwrap();
        assert_eq!(status, HypothesisStatus::Holds);
    }

    #[test]
    fn domination_on_jump_flow_and_permutations() {
        // jump-flow: kernel band mass 1 - e^{-1} at t = 1 on the uniform density
        let rep = jump_flow(4);
        let outcome = check_kernel_domination(&rep, &AnalysisOptions::default()).unwrap();
        assert_eq!(outcome.status, HypothesisStatus::Holds);
        assert_eq!(outcome.fixed_atoms.len(), 1);
        let w = outcome.witnesses[0].as_ref().unwrap();
        assert_eq!(w.time.as_f64(), 1.0);
        // mass on the sup-normalized uniform atom: (1 - e^{-1}) * ||atom||
        let atom_norm = rep.space().norm(&outcome.fixed_atoms[0]);
        assert!((w.mass - (1.0 - (-1.0f64).exp()) * atom_norm).abs() < 1e-10);

        // pure permutation representation has no kernel band at all
        let class = RationalGroupClass::prime_localized(BTreeSet::from([2])).unwrap();
        let rep = koopman_counterexample(&class, 3).unwrap();
        let outcome = check_kernel_domination(&rep, &AnalysisOptions::default()).unwrap();
        assert_eq!(outcome.status, HypothesisStatus::Fails);
    }

    #[test]
    fn remainder_decay_on_jump_flow_matches_survival() {
        let rep = jump_flow(4);
        // the model is doubly stochastic, so the constant-one density is the
        // quasi-interior fixed point with mass one
        let y = LatticeVector::ones(rep.space().clone());
        assert!((rep.evaluate_real(1.0).unwrap().apply_coords(y.coords()) - y.coords()).amax() < 1e-12);
        let decay = remainder_decay(&rep, &y, 0.1, 64).unwrap();
        // ||R_t y|| = e^{-t} ||y||, so the first doubling time below 0.1 is t = 4
        assert!(decay.monotone);
        assert_eq!(decay.time.as_f64(), 4.0);
        let expected = (-4.0f64).exp() * rep.space().norm(y.coords());
        assert!((decay.residual - expected).abs() < 1e-12);

        // pure kernel representation: remainder vanishes at the first step
        let rep = uniform_ctmc(3);
        let y = rep.quasi_interior_fixed_point().unwrap().unwrap();
        let decay = remainder_decay(&rep, &y, 0.1, 64).unwrap();
        assert_eq!(decay.time.as_f64(), 1.0);
        assert_eq!(decay.residual, 0.0);

        // pure permutation representation: no decay, stagnation at ||y||
        let class = RationalGroupClass::prime_localized(BTreeSet::from([2])).unwrap();
        let rep = koopman_counterexample(&class, 3).unwrap();
        let y = rep.quasi_interior_fixed_point().unwrap().unwrap();
        match remainder_decay(&rep, &y, 0.1, 32) {
            Err(AnalysisError::NoDecay { residual, .. }) => {
                assert!((residual - rep.space().norm(y.coords())).abs() < 1e-12);
            }
            other => panic!("expected stagnation, got {other:?}"),
        }
    }

    #[test]
    fn ctmc_has_only_trivial_unimodular_eigenvalue() {
        // cyclic conservative chain: eigenvalues omega^k - 1 leave only mu = 0
        let space = LatticeSpace::unit(3, Exponent::Finite(1.0));
        let mut jump = DMatrix::zeros(3, 3);
        for a in 0..3 {
            jump[((a + 1) % 3, a)] = 1.0;
        }
        let rep = SemigroupRepresentation::continuous_time(space, None, jump, true).unwrap();
        let eigs = unimodular_eigenvalues(&rep).unwrap();
        assert_eq!(eigs.len(), 1);
        assert!(eigs[0].trivial);
        assert_eq!(periodic_orbit_check(&rep).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn dyadic_counterexample_has_third_roots_of_unity() {
        let class = RationalGroupClass::prime_localized(BTreeSet::from([2])).unwrap();
        let rep = koopman_counterexample(&class, 3).unwrap();
        let eigs = unimodular_eigenvalues(&rep).unwrap();
        assert_eq!(eigs.len(), 3);
        let nontrivial: Vec<_> = eigs.iter().filter(|e| !e.trivial).collect();
        assert_eq!(nontrivial.len(), 2);
        // generator t = 1 carries e^{+-2 pi i / 3}
        let omega_re = (2.0 * std::f64::consts::PI / 3.0).cos();
        for e in nontrivial {
            let [re, im] = e.per_generator[0];
            assert!((re - omega_re).abs() < 1e-9);
            assert!((im.abs() - (2.0 * std::f64::consts::PI / 3.0).sin()).abs() < 1e-9);
            // consistency of the tuple: lambda_1 = lambda_{1/2}^2
            let l1 = Complex::new(e.per_generator[0][0], e.per_generator[0][1]);
            let lh = Complex::new(e.per_generator[1][0], e.per_generator[1][1]);
            assert!((lh * lh - l1).norm() < 1e-9);
        }
    }

    #[test]
    fn identity_representation_has_only_ones() {
        let space = LatticeSpace::unit(2, Exponent::Finite(2.0));
        let rep = SemigroupRepresentation::generated(
            space.clone(),
            vec![rat("1")],
            vec![StructuredOperator::identity_singular(space)],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        let eigs = unimodular_eigenvalues(&rep).unwrap();
        assert_eq!(eigs.len(), 2);
        assert!(eigs.iter().all(|e| e.trivial));
    }

    #[test]
    fn two_cycle_chain_has_no_periods() {
        let space = LatticeSpace::unit(2, Exponent::Finite(1.0));
        let jump = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let rep = SemigroupRepresentation::continuous_time(space, None, jump, true).unwrap();
        // eigenvalues of Q are {0, -2}: nothing periodic
        assert_eq!(periodic_orbit_check(&rep).unwrap(), Vec::<f64>::new());
    }
}
