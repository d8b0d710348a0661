//! Indexed commuting families of structured operators: either finitely many
//! generators over a declared rational index class, or a continuous-time
//! family given by a flow/jump generator evaluated through the matrix
//! exponential with the survival-factored transport split.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::groups::{Rational, RationalGroupClass};
use crate::linalg;
use crate::linprog::{self, LpResult};
use crate::operator::{OperatorError, SingularTerm, StructuredOperator};
use crate::space::{LatticeError, LatticeSpace, LatticeVector};

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("time {0} is not positive")]
    NonPositiveTime(f64),
    #[error("{0} is not reachable as a nonnegative combination of the generators")]
    NotRepresentable(String),
    #[error("generated representations evaluate at rational times only")]
    RationalTimeRequired,
    #[error("generators {i} and {j} do not commute (residual {residual:e})")]
    NonCommutingGenerators { i: usize, j: usize, residual: f64 },
    #[error("jump rate matrix has a negative entry at ({row},{col})")]
    NegativeJumpRate { row: usize, col: usize },
    #[error("declared conservative but column {column} of the generator sums to {sum:e}")]
    NotConservative { column: usize, sum: f64 },
    #[error("representation is not certified bounded: {0}")]
    Unbounded(String),
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
}

/// Time parameter of a representation: exact rational for generated families,
/// real for continuous-time ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Time {
    Rational(Rational),
    Real(f64),
}

impl Time {
    pub fn as_f64(&self) -> f64 {
        match self {
            Time::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Time::Real(t) => *t,
        }
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Time::Rational(r) => write!(f, "{r}"),
            Time::Real(t) => write!(f, "{t}"),
        }
    }
}

/// The declared index class of a generated representation, with the cached
/// divisibility decision of the generated group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexClass {
    group: RationalGroupClass,
    divisible: bool,
    witness: Option<u64>,
}

impl IndexClass {
    pub fn declare(group: RationalGroupClass) -> Self {
        let (divisible, witness) = group.is_divisible();
        IndexClass { group, divisible, witness }
    }

    pub fn group(&self) -> &RationalGroupClass {
        &self.group
    }

    pub fn is_divisible(&self) -> bool {
        self.divisible
    }

    pub fn witness_prime(&self) -> Option<u64> {
        self.witness
    }
}

/// Deterministic transport component of a continuous-time model: the cell map
/// is applied at unit events of a Poisson clock with the given rate, so the
/// flow semigroup is an exact mixture of Koopman powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub rate: f64,
    pub map: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum RepresentationKind {
    Generated {
        generators: Vec<Rational>,
        operators: Vec<StructuredOperator>,
        index_class: IndexClass,
    },
    ContinuousTime {
        flow: Option<Flow>,
        jump: DMatrix<f64>,
        conservative: bool,
    },
}

/// A positive representation of a commutative semigroup on a lattice space.
#[derive(Debug, Clone)]
pub struct SemigroupRepresentation {
    space: Arc<LatticeSpace>,
    kind: RepresentationKind,
}

/// Boundedness decision: `certified` is a spectral certificate (power-bounded
/// generators respectively dissipative spectral bound), `bound` is the largest
/// operator norm observed along a sampled stretch of the net.
#[derive(Debug, Clone)]
pub struct BoundednessCertificate {
    pub certified: bool,
    pub bound: f64,
    pub detail: String,
}

/// Limit of the directed net at a probe vector.
#[derive(Debug, Clone)]
pub struct NetLimit {
    pub limit: LatticeVector,
    pub time: Time,
    /// agreement with a supplied limit projection, when one was available
    pub certified: Option<bool>,
}

impl SemigroupRepresentation {
    pub fn generated(
        space: Arc<LatticeSpace>,
        generators: Vec<Rational>,
        operators: Vec<StructuredOperator>,
        index_class: IndexClass,
    ) -> Result<Self, SemigroupError> {
        if generators.is_empty() || generators.len() != operators.len() {
            return Err(SemigroupError::InvalidRepresentation(
                "need equally many generators and operators".into(),
            ));
        }
        for g in &generators {
            if !g.is_positive() {
                return Err(SemigroupError::InvalidRepresentation(format!(
                    "generator {g} must be strictly positive"
                )));
            }
        }
        for op in &operators {
            if op.dim() != space.dim() {
                return Err(SemigroupError::Operator(OperatorError::DimensionMismatch {
                    expected: space.dim(),
                    got: op.dim(),
                }));
            }
        }
        let scale = operators
            .iter()
            .map(|o| o.full_matrix().amax())
            .fold(1.0f64, f64::max);
        for i in 0..operators.len() {
            for j in (i + 1)..operators.len() {
                let ij = operators[i].compose(&operators[j])?.full_matrix();
                let ji = operators[j].compose(&operators[i])?.full_matrix();
                let residual = (ij - ji).amax();
                if residual > 1e-10 * scale {
                    return Err(SemigroupError::NonCommutingGenerators { i, j, residual });
                }
            }
        }
        Ok(SemigroupRepresentation {
            space,
            kind: RepresentationKind::Generated { generators, operators, index_class },
        })
    }

    pub fn continuous_time(
        space: Arc<LatticeSpace>,
        flow: Option<Flow>,
        jump: DMatrix<f64>,
        conservative: bool,
    ) -> Result<Self, SemigroupError> {
        let n = space.dim();
        if jump.nrows() != n || jump.ncols() != n {
            return Err(SemigroupError::Operator(OperatorError::DimensionMismatch {
                expected: n,
                got: jump.nrows(),
            }));
        }
        for i in 0..n {
            for j in 0..n {
                if jump[(i, j)] < 0.0 {
                    return Err(SemigroupError::NegativeJumpRate { row: i, col: j });
                }
            }
        }
        if let Some(f) = &flow {
            if f.rate < 0.0 {
                return Err(SemigroupError::InvalidRepresentation(
                    "flow rate must be nonnegative".into(),
                ));
            }
            if f.map.len() != n || f.map.iter().any(|t| *t >= n) {
                return Err(SemigroupError::InvalidRepresentation(
                    "flow map must be a total map on the atom set".into(),
                ));
            }
        }
        let rep = SemigroupRepresentation {
            space,
            kind: RepresentationKind::ContinuousTime { flow, jump, conservative },
        };
        if conservative {
            let q = rep.generator_matrix().expect("continuous kind");
            for j in 0..n {
                let sum: f64 = (0..n).map(|i| q[(i, j)]).sum();
                if sum.abs() > 1e-9 {
                    return Err(SemigroupError::NotConservative { column: j, sum });
                }
            }
        }
        Ok(rep)
    }

    pub fn space(&self) -> &Arc<LatticeSpace> {
        &self.space
    }

    pub fn kind(&self) -> &RepresentationKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_continuous_time(&self) -> bool {
        matches!(self.kind, RepresentationKind::ContinuousTime { .. })
    }

    /// Index class: the declared one for generated families; continuous-time
    /// families are indexed over the positive reals, whose generated group is
    /// divisible.
    pub fn index_class(&self) -> Option<&IndexClass> {
        match &self.kind {
            RepresentationKind::Generated { index_class, .. } => Some(index_class),
            RepresentationKind::ContinuousTime { .. } => None,
        }
    }

    pub fn index_is_divisible(&self) -> (bool, Option<u64>) {
        match &self.kind {
            RepresentationKind::Generated { index_class, .. } => {
                (index_class.is_divisible(), index_class.witness_prime())
            }
            RepresentationKind::ContinuousTime { .. } => (true, None),
        }
    }

    /// Assembled generator `Q` of a continuous-time family.
    pub fn generator_matrix(&self) -> Option<DMatrix<f64>> {
        match &self.kind {
            RepresentationKind::ContinuousTime { flow, jump, .. } => {
                let n = self.dim();
                let mut q = jump.clone();
                for j in 0..n {
                    let beta: f64 = (0..n).map(|i| jump[(i, j)]).sum();
                    q[(j, j)] -= beta;
                }
                if let Some(f) = flow {
                    for a in 0..n {
                        q[(a, f.map[a])] += f.rate;
                        q[(a, a)] -= f.rate;
                    }
                }
                Some(q)
            }
            _ => None,
        }
    }

    /// Largest column sum of the jump rates, the survival exponent.
    pub fn total_jump_rate(&self) -> Option<f64> {
        match &self.kind {
            RepresentationKind::ContinuousTime { jump, .. } => {
                let n = self.dim();
                Some(
                    (0..n)
                        .map(|j| (0..n).map(|i| jump[(i, j)]).sum::<f64>())
                        .fold(0.0, f64::max),
                )
            }
            _ => None,
        }
    }

    /// Evaluate the representation at a time point, keeping the kernel/singular
    /// band bookkeeping exact for generated families and survival-factored for
    /// continuous-time ones.
    pub fn evaluate(&self, t: &Time) -> Result<StructuredOperator, SemigroupError> {
        match (&self.kind, t) {
            (RepresentationKind::Generated { .. }, Time::Rational(r)) => self.evaluate_rational(r),
            (RepresentationKind::Generated { .. }, Time::Real(_)) => {
                Err(SemigroupError::RationalTimeRequired)
            }
            (RepresentationKind::ContinuousTime { .. }, t) => self.evaluate_real(t.as_f64()),
        }
    }

    /// Generated evaluation: bounded Diophantine solve for nonnegative integer
    /// coordinates, then an exact product of generator powers.
    pub fn evaluate_rational(&self, t: &Rational) -> Result<StructuredOperator, SemigroupError> {
        let RepresentationKind::Generated { generators, operators, .. } = &self.kind else {
            return self.evaluate_real(t.to_f64().unwrap_or(f64::NAN));
        };
        let exponents = nonnegative_combination(generators, t, 64)
            .ok_or_else(|| SemigroupError::NotRepresentable(t.to_string()))?;
        let mut out = StructuredOperator::identity_singular(self.space.clone());
        for (op, e) in operators.iter().zip(exponents) {
            let mut acc = op.clone();
            let mut remaining = e;
            while remaining > 0 {
                if remaining & 1 == 1 {
                    out = out.compose(&acc)?;
                }
                remaining >>= 1;
                if remaining > 0 {
                    acc = acc.compose(&acc)?;
                }
            }
        }
        Ok(out)
    }

    /// Continuous-time evaluation: full operator by the matrix exponential,
    /// singular part as the survival-weighted Poisson mixture of flow powers,
    /// kernel part as the exact difference.
    pub fn evaluate_real(&self, t: f64) -> Result<StructuredOperator, SemigroupError> {
        let RepresentationKind::ContinuousTime { flow, .. } = &self.kind else {
            return Err(SemigroupError::RationalTimeRequired);
        };
        if !(t > 0.0) {
            return Err(SemigroupError::NonPositiveTime(t));
        }
        let q = self.generator_matrix().expect("continuous kind");
        let full = linalg::expm(&(q * t));
        let beta = self.total_jump_rate().expect("continuous kind");
        let n = self.dim();
        let singular: Vec<SingularTerm> = match flow {
            None => Vec::new(),
            Some(f) => poisson_flow_terms(f, beta, t, n),
        };
        let mut kernel = full;
        for term in &singular {
            for a in 0..n {
                kernel[(a, term.map[a])] -= term.scale[a];
            }
        }
        Ok(StructuredOperator::new(self.space.clone(), kernel, singular)?)
    }

    /// Full matrices of the generating operators (continuous time: `T_1`).
    pub fn generator_full_matrices(&self) -> Result<Vec<DMatrix<f64>>, SemigroupError> {
        match &self.kind {
            RepresentationKind::Generated { operators, .. } => {
                Ok(operators.iter().map(|o| o.full_matrix()).collect())
            }
            RepresentationKind::ContinuousTime { .. } => {
                Ok(vec![self.evaluate_real(1.0)?.full_matrix()])
            }
        }
    }

    /// Basis of the joint fixed space: kernel of the stacked `T_g - I`
    /// respectively kernel of `Q`.
    pub fn fixed_space(&self) -> Result<Vec<LatticeVector>, SemigroupError> {
        let n = self.dim();
        let basis = match &self.kind {
            RepresentationKind::Generated { operators, .. } => {
                let mats: Vec<DMatrix<f64>> = operators
                    .iter()
                    .map(|o| o.full_matrix() - DMatrix::identity(n, n))
                    .collect();
                linalg::joint_null_space(&mats, 1e-9)
            }
            RepresentationKind::ContinuousTime { .. } => {
                linalg::null_space(&self.generator_matrix().expect("continuous kind"), 1e-9)
            }
        };
        basis
            .into_iter()
            .map(|v| LatticeVector::from_dvector(self.space.clone(), v).map_err(Into::into))
            .collect()
    }

    /// Spectral boundedness certificate plus a sampled norm bound along the net.
    pub fn is_bounded(&self) -> Result<BoundednessCertificate, SemigroupError> {
        let mut certified = true;
        let mut detail = String::new();
        match &self.kind {
            RepresentationKind::Generated { operators, .. } => {
                for (g, op) in operators.iter().enumerate() {
                    let m = op.full_matrix();
                    let eigs = linalg::complex_eigenvalues(&m);
                    for lambda in &eigs {
                        if lambda.norm() > 1.0 + 1e-8 {
                            certified = false;
                            detail = format!(
                                "generator {g} has an eigenvalue of modulus {:.6} > 1",
                                lambda.norm()
                            );
                        } else if (lambda.norm() - 1.0).abs() <= 1e-8
                            && !linalg::eigenvalue_is_semisimple(&m, *lambda, 1e-10)
                        {
                            certified = false;
                            detail = format!(
                                "generator {g} has a defective peripheral eigenvalue"
                            );
                        }
                    }
                }
            }
            RepresentationKind::ContinuousTime { .. } => {
                let q = self.generator_matrix().expect("continuous kind");
                for lambda in linalg::complex_eigenvalues(&q) {
                    if lambda.re > 1e-8 {
                        certified = false;
                        detail = format!("spectral bound {} > 0", lambda.re);
                    } else if lambda.re.abs() <= 1e-8
                        && !linalg::eigenvalue_is_semisimple(&q, lambda, 1e-10)
                    {
                        certified = false;
                        detail = "defective eigenvalue on the imaginary axis".into();
                    }
                }
            }
        }
        // sampled bound along a stretch of the net
        let mut bound: f64 = 0.0;
        match &self.kind {
            RepresentationKind::Generated { operators, .. } => {
                let mut current = StructuredOperator::identity_singular(self.space.clone());
                bound = bound.max(self.space.operator_norm(&current.full_matrix()));
                let steps = 24.max(2 * operators.len());
                for step in 0..steps {
                    current = operators[step % operators.len()].compose(&current)?;
                    bound = bound.max(self.space.operator_norm(&current.full_matrix()));
                }
            }
            RepresentationKind::ContinuousTime { .. } => {
                for t in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
                    let op = self.evaluate_real(t)?;
                    bound = bound.max(self.space.operator_norm(&op.full_matrix()));
                }
            }
        }
        if detail.is_empty() {
            detail = "peripheral spectrum is semisimple and contractive".into();
        }
        Ok(BoundednessCertificate { certified, bound, detail })
    }

    /// Strong connectivity of the positivity graph of the family.
    pub fn is_irreducible(&self) -> Result<bool, SemigroupError> {
        let n = self.dim();
        let mut adjacency = vec![vec![false; n]; n];
        let mats: Vec<DMatrix<f64>> = match &self.kind {
            RepresentationKind::Generated { operators, .. } => {
                operators.iter().map(|o| o.full_matrix()).collect()
            }
            RepresentationKind::ContinuousTime { .. } => {
                vec![self.generator_matrix().expect("continuous kind")]
            }
        };
        for m in &mats {
            let cutoff = 1e-12 * m.amax().max(1.0);
            for j in 0..n {
                for i in 0..n {
                    // edge j -> i when mass flows from atom j to atom i
                    if i != j && m[(i, j)] > cutoff {
                        adjacency[j][i] = true;
                    }
                }
            }
        }
        let reaches = |adj: &dyn Fn(usize, usize) -> bool| -> bool {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for w in 0..n {
                    if !seen[w] && adj(v, w) {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen.iter().all(|s| *s)
        };
        Ok(reaches(&|v, w| adjacency[v][w]) && reaches(&|v, w| adjacency[w][v]))
    }

    /// A fixed vector with all coordinates strictly positive, when the fixed
    /// space admits one; decided by a small linear feasibility problem over
    /// the fixed-space basis.
    pub fn quasi_interior_fixed_point(&self) -> Result<Option<LatticeVector>, SemigroupError> {
        let basis = self.fixed_space()?;
        if basis.is_empty() {
            return Ok(None);
        }
        let n = self.dim();
        let k = basis.len();
        // fast path: a sign-normalized single basis vector
        if k == 1 {
            let b = basis[0].coords();
            let flip = if b.sum() < 0.0 { -1.0 } else { 1.0 };
            let v = b * flip;
            if v.iter().all(|x| *x > 1e-10 * v.amax()) {
                return Ok(Some(LatticeVector::from_dvector(self.space.clone(), v)?));
            }
            return Ok(None);
        }
        // feasibility: B (u - v) >= 1 coordinatewise, u, v >= 0
        let mut a = DMatrix::zeros(n, 2 * k);
        for j in 0..k {
            for i in 0..n {
                a[(i, j)] = -basis[j].coords()[i];
                a[(i, k + j)] = basis[j].coords()[i];
            }
        }
        let b = DVector::from_element(n, -1.0);
        match linprog::feasible_point(&a, &b) {
            Some(x) => {
                let mut v = DVector::zeros(n);
                for j in 0..k {
                    let c = x[j] - x[k + j];
                    v += basis[j].coords() * c;
                }
                let scale = v.amax();
                if scale > 0.0 {
                    v /= scale;
                }
                if v.iter().all(|x| *x > 1e-10) {
                    Ok(Some(LatticeVector::from_dvector(self.space.clone(), v)?))
                } else {
                    Ok(None)
                }
            }
            None => Ok(None),
        }
    }

    /// Cofinal chain of the directed net: round-robin cumulative sums of the
    /// generators, respectively doubling times up to the horizon.
    pub fn directed_limit(
        &self,
        x: &LatticeVector,
        horizon: usize,
        tol: f64,
        limit_projection: Option<&DMatrix<f64>>,
    ) -> Result<Option<NetLimit>, SemigroupError> {
        let cert = self.is_bounded()?;
        if !cert.certified {
            return Err(SemigroupError::Unbounded(cert.detail));
        }
        self.directed_limit_unchecked(x, horizon, tol, limit_projection)
    }

    pub(crate) fn directed_limit_unchecked(
        &self,
        x: &LatticeVector,
        horizon: usize,
        tol: f64,
        limit_projection: Option<&DMatrix<f64>>,
    ) -> Result<Option<NetLimit>, SemigroupError> {
        let certify = |limit: &DVector<f64>| -> Option<bool> {
            limit_projection.map(|p| {
                let target = p * x.coords();
                self.space.norm(&(limit - &target)) <= tol * 10.0 * (1.0 + self.space.norm(&target))
            })
        };
        match &self.kind {
            RepresentationKind::Generated { generators, operators, .. } => {
                let k = operators.len();
                let mut state = x.coords().clone();
                let mut t = Rational::zero();
                // already-fixed probe: every generator keeps it in place
                if operators
                    .iter()
                    .all(|op| self.space.norm(&(op.apply_coords(&state) - &state)) <= tol)
                {
                    return Ok(Some(NetLimit {
                        limit: x.clone(),
                        time: Time::Rational(t),
                        certified: certify(&state),
                    }));
                }
                let mut consecutive_small = 0usize;
                for step in 0..horizon {
                    let g = step % k;
                    let next = operators[g].apply_coords(&state);
                    t += &generators[g];
                    let diff = self.space.norm(&(&next - &state));
                    state = next;
                    if diff <= tol {
                        consecutive_small += 1;
                        if consecutive_small >= k {
                            return Ok(Some(NetLimit {
                                limit: LatticeVector::from_dvector(self.space.clone(), state.clone())?,
                                time: Time::Rational(t),
                                certified: certify(&state),
                            }));
                        }
                    } else {
                        consecutive_small = 0;
                    }
                }
                Ok(None)
            }
            RepresentationKind::ContinuousTime { .. } => {
                let horizon_t = horizon as f64;
                let mut t = 1.0f64.min(horizon_t);
                let mut current = self.evaluate_real(t)?.apply_coords(x.coords());
                if self.space.norm(&(&current - x.coords())) <= tol {
                    return Ok(Some(NetLimit {
                        limit: x.clone(),
                        time: Time::Real(0.0),
                        certified: certify(x.coords()),
                    }));
                }
                while 2.0 * t <= horizon_t {
                    let next = self.evaluate_real(2.0 * t)?.apply_coords(x.coords());
                    let diff = self.space.norm(&(&next - &current));
                    t *= 2.0;
                    current = next;
                    if diff <= tol {
                        return Ok(Some(NetLimit {
                            limit: LatticeVector::from_dvector(self.space.clone(), current.clone())?,
                            time: Time::Real(t),
                            certified: certify(&current),
                        }));
                    }
                }
                Ok(None)
            }
        }
    }
}

/// Survival-weighted Poisson mixture of Koopman powers of the flow map:
/// the zero-event term carries the coefficient `exp(-(a + beta) t)` and the
/// total singular mass is `exp(-beta t)`.
pub(crate) fn poisson_flow_terms(flow: &Flow, beta: f64, t: f64, n: usize) -> Vec<SingularTerm> {
    let a = flow.rate;
    let survival = (-(a + beta) * t).exp();
    if survival == 0.0 {
        return Vec::new();
    }
    let mean = a * t;
    let kmax = (mean + 60.0 * (mean + 1.0).sqrt() + 60.0).ceil() as usize;
    let mut terms: Vec<SingularTerm> = Vec::new();
    let mut map: Vec<usize> = (0..n).collect();
    let mut coeff = survival; // exp(-(a+beta) t) * (a t)^k / k!
    for k in 0..=kmax {
        if coeff > 0.0 {
            if let Some(existing) = terms.iter_mut().find(|term| term.map == map) {
                existing.scale.add_scalar_mut(coeff);
            } else {
                terms.push(SingularTerm::koopman(map.clone(), coeff));
            }
        }
        map = map.iter().map(|&x| flow.map[x]).collect();
        coeff *= mean / (k as f64 + 1.0);
        if k > mean as usize && coeff < 1e-300 {
            break;
        }
    }
    terms
}

/// Solve `sum n_i g_i = t` for nonnegative integers `n_i`. Exact division for
/// a single generator; depth-limited search otherwise.
fn nonnegative_combination(generators: &[Rational], t: &Rational, depth: u64) -> Option<Vec<u64>> {
    if t.is_negative() {
        return None;
    }
    let mut denom = BigInt::from(1);
    for g in generators {
        denom = num_integer::lcm(denom, g.denom().clone());
    }
    let scaled: Vec<BigInt> = generators.iter().map(|g| (g * &denom).to_integer()).collect();
    let target_r = t * &denom;
    if !target_r.is_integer() {
        return None;
    }
    let target = target_r.to_integer();
    if generators.len() == 1 {
        let (q, r) = num_integer::Integer::div_rem(&target, &scaled[0]);
        if r.is_zero() && !q.is_negative() {
            return q.to_u64().map(|n| vec![n]);
        }
        return None;
    }
    fn dfs(scaled: &[BigInt], target: &BigInt, depth: u64, out: &mut Vec<u64>) -> bool {
        if scaled.len() == 1 {
            let (q, r) = num_integer::Integer::div_rem(target, &scaled[0]);
            if r.is_zero() && !q.is_negative() {
                if let Some(n) = q.to_u64() {
                    if n <= depth {
                        out.push(n);
                        return true;
                    }
                }
            }
            return false;
        }
        let max_n = (target / &scaled[0]).to_u64().unwrap_or(0).min(depth);
        for n in 0..=max_n {
            let rest = target - &scaled[0] * BigInt::from(n);
            if rest.is_negative() {
                break;
            }
            if dfs(&scaled[1..], &rest, depth - n, out) {
                out.insert(0, n);
                return true;
            }
        }
        false
    }
    let mut out = Vec::new();
    if dfs(&scaled, &target, depth, &mut out) {
        Some(out)
    } else {
        None
    }
}

/// Search for a strictly positive functional `phi` with `T' phi <= phi` for
/// every generator: the fast candidates are the constant-one functional and
/// the cell weights; the general case is a linear feasibility problem.
pub fn subinvariant_strictly_positive_functional(
    rep: &SemigroupRepresentation,
) -> Result<Option<DVector<f64>>, SemigroupError> {
    let n = rep.dim();
    let adjoints: Vec<DMatrix<f64>> = match rep.kind() {
        RepresentationKind::Generated { operators, .. } => {
            operators.iter().map(|o| o.adjoint().full_matrix()).collect()
        }
        RepresentationKind::ContinuousTime { .. } => {
            vec![rep.evaluate_real(1.0)?.adjoint().full_matrix()]
        }
    };
    let candidates = [
        DVector::from_element(n, 1.0),
        rep.space().weights().clone(),
        DVector::from_fn(n, |i, _| 1.0 / rep.space().weights()[i]),
    ];
    'cand: for phi in &candidates {
        for adj in &adjoints {
            let diff = adj * phi - phi;
            if diff.iter().any(|d| *d > 1e-10) {
                continue 'cand;
            }
        }
        return Ok(Some(phi.clone()));
    }
    // LP: psi >= 0 with (T' - I)(psi + 1) <= 0, i.e. (T' - I) psi <= (I - T') 1
    let k = adjoints.len();
    let mut a = DMatrix::zeros(k * n, n);
    let mut b = DVector::zeros(k * n);
    let ones = DVector::from_element(n, 1.0);
    for (g, adj) in adjoints.iter().enumerate() {
        let block = adj - DMatrix::identity(n, n);
        a.rows_mut(g * n, n).copy_from(&block);
        let rhs = -(&block * &ones);
        for i in 0..n {
            b[g * n + i] = rhs[i];
        }
    }
    Ok(linprog::feasible_point(&a, &b).map(|psi| psi + ones))
}

/// Direct search for a super fixed vector that is not fixed: maximize the
/// total slack of `T_g x >= x` over `0 <= x <= 1`. A strictly positive
/// optimum yields a violation witness; optimum zero certifies that every
/// super fixed point is fixed.
pub fn super_fixed_violation(
    rep: &SemigroupRepresentation,
) -> Result<Option<DVector<f64>>, SemigroupError> {
    let n = rep.dim();
    let mats = rep.generator_full_matrices()?;
    let k = mats.len();
    let mut a = DMatrix::zeros(k * n + n, n);
    let mut b = DVector::zeros(k * n + n);
    let mut c = DVector::zeros(n);
    for (g, m) in mats.iter().enumerate() {
        let block = DMatrix::identity(n, n) - m;
        a.rows_mut(g * n, n).copy_from(&block);
        // maximize sum of (T_g - I) x: minimize sum of (I - T_g) x
        for j in 0..n {
            c[j] += block.row_sum()[j];
        }
    }
    for i in 0..n {
        a[(k * n + i, i)] = 1.0;
        b[k * n + i] = 1.0;
    }
    match linprog::solve(&c, &a, &b) {
        LpResult::Optimal { x, objective } => {
            if objective < -1e-7 {
                Ok(Some(x))
            } else {
                Ok(None)
            }
        }
        // bounded by construction; anything else means no certificate
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::koopman_counterexample;
    use crate::space::Exponent;
    use std::collections::BTreeSet;

    fn rat(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn dyadic_rep() -> SemigroupRepresentation {
        let class = RationalGroupClass::prime_localized(BTreeSet::from([2])).unwrap();
        koopman_counterexample(&class, 3).unwrap()
    }

    fn uniform_ctmc(n: usize) -> SemigroupRepresentation {
        let space = LatticeSpace::unit(n, Exponent::Finite(1.0));
        let jump = DMatrix::from_element(n, n, 1.0 / n as f64);
        SemigroupRepresentation::continuous_time(space, None, jump, true).unwrap()
    }

    #[test]
    fn dyadic_evaluation_is_exact_permutation_arithmetic() {
        let rep = dyadic_rep();
        // t = 3/2 = 1 + 1/2 evaluates to pi^2 . pi = pi^3 = identity
        let op = rep.evaluate_rational(&rat("3/2")).unwrap();
        let id = DMatrix::identity(3, 3);
        assert_eq!(op.full_matrix(), id);
        // semigroup law holds exactly
        let lhs = rep.evaluate_rational(&rat("5/2")).unwrap();
        let rhs = rep
            .evaluate_rational(&rat("1"))
            .unwrap()
            .compose(&rep.evaluate_rational(&rat("3/2")).unwrap())
            .unwrap();
        assert_eq!(lhs.full_matrix(), rhs.full_matrix());
    }

    #[test]
    fn unreachable_rational_is_detected() {
        let rep = dyadic_rep();
        assert!(matches!(
            rep.evaluate_rational(&rat("1/3")),
            Err(SemigroupError::NotRepresentable(_))
        ));
        assert!(matches!(
            rep.evaluate_rational(&rat("-1")),
            Err(SemigroupError::NotRepresentable(_))
        ));
    }

    #[test]
    fn rank_one_exponential_closed_form() {
        let rep = uniform_ctmc(2);
        let t = 2f64.ln();
        let op = rep.evaluate_real(t).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]);
        assert!((op.full_matrix() - expected).amax() < 1e-12);
        assert!(op.is_am_compact_model(), "pure jump model stays in the kernel band");
        assert!(matches!(
            rep.evaluate_real(0.0),
            Err(SemigroupError::NonPositiveTime(_))
        ));
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
    fn survival_split_of_jump_flow() {
        let rep = jump_flow(4);
        for t in [1.0, 2.0, 4.0] {
            let op = rep.evaluate_real(t).unwrap();
            let (k, r) = op.band_decompose();
            // both parts positive
            assert!(k.kernel_part().min() >= -1e-12);
            // singular mass per column is the survival probability e^{-beta t}
            let rm = r.full_matrix();
            for j in 0..4 {
                let col: f64 = (0..4).map(|i| rm[(i, j)]).sum();
                assert!(
                    (col - (-t).exp()).abs() < 1e-12,
                    "column mass {col} vs {}",
                    (-t).exp()
                );
            }
        }
    }

    #[test]
    fn zero_event_coefficient_is_survival_probability() {
        let flow = Flow { rate: 1.0, map: vec![1, 2, 3, 0] };
        let t = 1.3;
        let terms = poisson_flow_terms(&flow, 1.0, t, 4);
        // identity-map term collects k = 0, 4, 8, ... ; it dominates the pure
        // zero-event coefficient and matches the wrapped Poisson mass
        let id_term = terms.iter().find(|term| term.map == vec![0, 1, 2, 3]).unwrap();
        let base = (-(1.0 + 1.0) * t).exp();
        assert!(id_term.scale[0] >= base - 1e-15);
        let mut wrapped = 0.0;
        let mut coeff = base;
        for k in 0..200 {
            if k % 4 == 0 {
                wrapped += coeff;
            }
            coeff *= t / (k as f64 + 1.0);
        }
        assert!((id_term.scale[0] - wrapped).abs() < 1e-15);
        // total singular mass e^{-beta t}
        let total: f64 = terms.iter().map(|term| term.scale[0]).sum();
        assert!((total - (-t).exp()).abs() < 1e-14);
    }

    #[test]
    fn continuous_semigroup_law_within_tolerance() {
        let rep = jump_flow(4);
        let s = 0.7;
        let t = 1.9;
        let st = rep.evaluate_real(s + t).unwrap();
        let prod = rep
            .evaluate_real(s)
            .unwrap()
            .compose(&rep.evaluate_real(t).unwrap())
            .unwrap();
        assert!((st.full_matrix() - prod.full_matrix()).amax() < 1e-10);
        // band bookkeeping respects the law as well
        assert!((st.singular_matrix() - prod.singular_matrix()).amax() < 1e-12);
    }

    #[test]
    fn fixed_spaces() {
        // identity representation fixes everything
        let space = LatticeSpace::unit(3, Exponent::Finite(1.0));
        let id_rep = SemigroupRepresentation::generated(
            space.clone(),
            vec![rat("1")],
            vec![StructuredOperator::identity_singular(space)],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        assert_eq!(id_rep.fixed_space().unwrap().len(), 3);

        // dyadic counterexample fixes only the constants
        let rep = dyadic_rep();
        let fs = rep.fixed_space().unwrap();
        assert_eq!(fs.len(), 1);
        let v = fs[0].coords();
        assert!((v[0] - v[1]).abs() < 1e-12 && (v[1] - v[2]).abs() < 1e-12);

        // irreducible conservative chain: one-dimensional, strictly positive
        let rep = uniform_ctmc(5);
        let fs = rep.fixed_space().unwrap();
        assert_eq!(fs.len(), 1);
        let qifp = rep.quasi_interior_fixed_point().unwrap().expect("stationary density");
        assert!(qifp.is_quasi_interior().unwrap());
        // Perron oracle: power iteration on T_1
        let t1 = rep.evaluate_real(1.0).unwrap().full_matrix();
        let mut pi = DVector::from_element(5, 1.0 / 5.0);
        for _ in 0..500 {
            pi = &t1 * pi;
        }
        let mut v = qifp.coords().clone();
        v /= v.sum();
        assert!((v - pi).amax() < 1e-8);
    }

    #[test]
    fn boundedness_certificates() {
        let rep = dyadic_rep();
        let cert = rep.is_bounded().unwrap();
        assert!(cert.certified);
        assert!((cert.bound - 1.0).abs() < 1e-9, "isometries have bound 1");

        // defective eigenvalue 1 is rejected
        let space = LatticeSpace::unit(2, Exponent::Finite(1.0));
        let shear = StructuredOperator::from_kernel(
            space.clone(),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        )
        .unwrap();
        let rep = SemigroupRepresentation::generated(
            space,
            vec![rat("1")],
            vec![shear],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        assert!(!rep.is_bounded().unwrap().certified);

        let rep = uniform_ctmc(4);
        let cert = rep.is_bounded().unwrap();
        assert!(cert.certified);
        assert!((cert.bound - 1.0).abs() < 1e-9, "Markov contraction in L^1");
    }

    #[test]
    fn irreducibility_examples() {
        // cyclic shift is irreducible
        let space = LatticeSpace::unit(3, Exponent::Finite(1.0));
        let shift = StructuredOperator::koopman(space.clone(), vec![1, 2, 0], 1.0).unwrap();
        let rep = SemigroupRepresentation::generated(
            space.clone(),
            vec![rat("1")],
            vec![shift],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        assert!(rep.is_irreducible().unwrap());

        // block diagonal is not
        let block = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.5, 0.0, 0.0, //
                0.5, 0.5, 0.0, 0.0, //
                0.0, 0.0, 0.5, 0.5, //
                0.0, 0.0, 0.5, 0.5,
            ],
        );
        let space = LatticeSpace::unit(4, Exponent::Finite(1.0));
        let rep = SemigroupRepresentation::generated(
            space.clone(),
            vec![rat("1")],
            vec![StructuredOperator::from_kernel(space, block).unwrap()],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        assert!(!rep.is_irreducible().unwrap());

        // uniform averaging has the complete positivity graph
        assert!(uniform_ctmc(3).is_irreducible().unwrap());
    }

    #[test]
    fn quasi_interior_vanishes_on_transient_blocks() {
        // one conservative block, one strictly mass-losing block
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.5, 0.0, 0.0, //
                0.5, 0.5, 0.0, 0.0, //
                0.0, 0.0, 0.4, 0.1, //
                0.0, 0.0, 0.1, 0.4,
            ],
        );
        let space = LatticeSpace::unit(4, Exponent::Finite(1.0));
        let rep = SemigroupRepresentation::generated(
            space.clone(),
            vec![rat("1")],
            vec![StructuredOperator::from_kernel(space, m).unwrap()],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        assert!(rep.quasi_interior_fixed_point().unwrap().is_none());
    }

    #[test]
    fn directed_limits() {
        // contraction to the stationary density
        let rep = uniform_ctmc(4);
        let e0 = LatticeVector::new(rep.space().clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let lim = rep.directed_limit(&e0, 64, 1e-8, None).unwrap().expect("limit exists");
        let expected = DVector::from_element(4, 0.25);
        assert!((lim.limit.coords() - expected).amax() < 1e-7);

        // period-3 oscillation never settles
        let rep = dyadic_rep();
        let e0 = LatticeVector::new(rep.space().clone(), vec![1.0, 0.0, 0.0]).unwrap();
        assert!(rep.directed_limit(&e0, 300, 1e-8, None).unwrap().is_none());

        // fixed probes return immediately
        let ones = LatticeVector::ones(rep.space().clone());
        let lim = rep.directed_limit(&ones, 64, 1e-10, None).unwrap().expect("fixed point");
        assert_eq!(lim.time.as_f64(), 0.0);
    }

    #[test]
    fn functional_and_violation_searches() {
        // conservative chain: the constant-one functional is invariant
        let rep = uniform_ctmc(3);
        let phi = subinvariant_strictly_positive_functional(&rep).unwrap().expect("phi exists");
        assert!(phi.iter().all(|x| *x > 0.0));
        assert!(super_fixed_violation(&rep).unwrap().is_none());

        // projection onto a line admits a super fixed non-fixed vector: e0
        let space = LatticeSpace::unit(2, Exponent::Finite(1.0));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let rep = SemigroupRepresentation::generated(
            space.clone(),
            vec![rat("1")],
            vec![StructuredOperator::from_kernel(space, m.clone()).unwrap()],
            IndexClass::declare(RationalGroupClass::AllPrimes),
        )
        .unwrap();
        let witness = super_fixed_violation(&rep).unwrap().expect("violation exists");
        let moved = &m * &witness;
        assert!((0..2).all(|i| moved[i] >= witness[i] - 1e-9));
        assert!((moved - &witness).amax() > 1e-8, "witness is not fixed");
    }
}
