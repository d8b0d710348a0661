//! Divisibility decisions for the supported subgroup classes of the rationals,
//! finite quotient homomorphisms, the quotient-Koopman counterexample builder
//! and extension of commuting semigroup values to group evaluators.
//!
//! All group arithmetic is exact: elements are arbitrary-precision rationals
//! and homomorphism identities hold in integer arithmetic, never in floats.

use std::collections::BTreeSet;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::operator::{OperatorError, StructuredOperator};
use crate::semigroup::{IndexClass, SemigroupRepresentation};
use crate::space::{Exponent, LatticeSpace};

pub type Rational = BigRational;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} lies in the localization support, no quotient modulo it exists")]
    PrimeInSupport(u64),
    #[error("invalid group class: {0}")]
    InvalidClass(String),
    #[error("element {0} does not belong to the group class")]
    NotInClass(String),
    #[error("element {0} is not reachable from the generators")]
    NotRepresentable(String),
    #[error("values {i} and {j} do not commute")]
    NotCommuting { i: usize, j: usize },
    #[error("value {index} is not invertible within the positive cone")]
    NotInvertible { index: usize },
    #[error("generator relation violated: {0}")]
    InconsistentValues(String),
    #[error("requested power is too large to evaluate")]
    ExponentTooLarge,
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Supported subgroup classes of the additive rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RationalGroupClass {
    /// The subgroup generated by finitely many positive rationals; always
    /// cyclic, generated by the gcd of the fractions.
    FinitelyGenerated(Vec<Rational>),
    /// Rationals whose denominators factor over the given prime set; the
    /// dyadic numbers are `PrimeLocalized({2})`.
    PrimeLocalized(BTreeSet<u64>),
    /// The full additive group of rationals (localization at all primes).
    AllPrimes,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn smallest_prime_not_in(set: &BTreeSet<u64>) -> u64 {
    let mut q = 2;
    loop {
        if is_prime(q) && !set.contains(&q) {
            return q;
        }
        q += 1;
    }
}

fn rational_gcd(values: &[Rational]) -> Rational {
    // gcd(p_i / q_i) = gcd(p_i) / lcm(q_i)
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for v in values {
        num = num_integer::gcd(num, v.numer().abs());
        den = num_integer::lcm(den, v.denom().clone());
    }
    Rational::new(num, den)
}

impl RationalGroupClass {
    pub fn finitely_generated(generators: Vec<Rational>) -> Result<Self, GroupError> {
        if generators.is_empty() {
            return Err(GroupError::InvalidClass(
                "finitely generated class needs at least one generator".into(),
            ));
        }
        for g in &generators {
            if !g.is_positive() {
                return Err(GroupError::InvalidClass(format!(
                    "generator {g} must be strictly positive"
                )));
            }
        }
        Ok(RationalGroupClass::FinitelyGenerated(generators))
    }

    pub fn prime_localized(primes: BTreeSet<u64>) -> Result<Self, GroupError> {
        for p in &primes {
            if !is_prime(*p) {
                return Err(GroupError::NotPrime(*p));
            }
        }
        Ok(RationalGroupClass::PrimeLocalized(primes))
    }

    /// Generator of the cyclic group for the finitely generated variant.
    pub fn cyclic_generator(&self) -> Option<Rational> {
        match self {
            RationalGroupClass::FinitelyGenerated(gens) => Some(rational_gcd(gens)),
            _ => None,
        }
    }

    /// Membership test, exact.
    pub fn contains(&self, t: &Rational) -> bool {
        match self {
            RationalGroupClass::AllPrimes => true,
            RationalGroupClass::PrimeLocalized(primes) => {
                let mut den = t.denom().abs();
                for p in primes {
                    let big = BigInt::from(*p);
                    while (&den % &big).is_zero() {
                        den /= &big;
                    }
                }
                den.is_one()
            }
            RationalGroupClass::FinitelyGenerated(_) => {
                let g = self.cyclic_generator().expect("finitely generated");
                (t / g).is_integer()
            }
        }
    }

    /// Divisibility together with a deterministic witness: the smallest prime
    /// admitting a finite quotient when the group is not divisible.
    pub fn is_divisible(&self) -> (bool, Option<u64>) {
        match self {
            RationalGroupClass::AllPrimes => (true, None),
            RationalGroupClass::PrimeLocalized(primes) => {
                (false, Some(smallest_prime_not_in(primes)))
            }
            // a nontrivial cyclic group is never divisible
            RationalGroupClass::FinitelyGenerated(_) => (false, Some(2)),
        }
    }

    /// Deterministic sample of class elements, used to brute-check additivity.
    fn sample_elements(&self, count: usize) -> Vec<Rational> {
        let mut out = Vec::new();
        match self {
            RationalGroupClass::AllPrimes => {
                'all: for den in 1..8u32 {
                    for num in -6..7i32 {
                        out.push(Rational::new(BigInt::from(num), BigInt::from(den)));
                        if out.len() >= count {
                            break 'all;
                        }
                    }
                }
            }
            RationalGroupClass::PrimeLocalized(primes) => {
                let mut dens: Vec<BigInt> = vec![BigInt::one()];
                for p in primes.iter().take(3) {
                    let mut next = Vec::new();
                    for d in &dens {
                        for e in 0..3u32 {
                            next.push(d * BigInt::from(*p).pow(e));
                        }
                    }
                    dens = next;
                }
                dens.sort();
                dens.dedup();
                'pl: for den in &dens {
                    for num in -6..7i32 {
                        out.push(Rational::new(BigInt::from(num), den.clone()));
                        if out.len() >= count {
                            break 'pl;
                        }
                    }
                }
            }
            RationalGroupClass::FinitelyGenerated(_) => {
                let g = self.cyclic_generator().expect("finitely generated");
                for n in -(count as i64) / 2..=(count as i64) / 2 {
                    out.push(&g * BigInt::from(n));
                    if out.len() >= count {
                        break;
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum QuotientRule {
    /// `k/m -> k * m^{-1} mod q` on the localization.
    Localized,
    /// `n * g -> n mod q` on the cyclic group with generator `g`.
    Cyclic { generator: Rational },
}

/// A surjective additive homomorphism from a group class onto `Z/qZ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteQuotientHom {
    class: RationalGroupClass,
    modulus: u64,
    rule: QuotientRule,
}

/// Build the quotient homomorphism onto `Z/qZ`. Additivity is brute-checked
/// on a deterministic sample of one hundred pairs at construction time.
pub fn quotient_hom(class: &RationalGroupClass, q: u64) -> Result<FiniteQuotientHom, GroupError> {
    if !is_prime(q) {
        return Err(GroupError::NotPrime(q));
    }
    let rule = match class {
        RationalGroupClass::AllPrimes => return Err(GroupError::PrimeInSupport(q)),
        RationalGroupClass::PrimeLocalized(primes) => {
            if primes.contains(&q) {
                return Err(GroupError::PrimeInSupport(q));
            }
            QuotientRule::Localized
        }
        RationalGroupClass::FinitelyGenerated(_) => QuotientRule::Cyclic {
            generator: class.cyclic_generator().expect("finitely generated"),
        },
    };
    let hom = FiniteQuotientHom { class: class.clone(), modulus: q, rule };
    // additivity on a deterministic sample of 100 pairs, exact integer arithmetic
    let sample = class.sample_elements(20);
    let mut pairs = 0;
    'outer: for s in &sample {
        for t in &sample {
            let lhs = hom.evaluate(&(s + t))?;
            let rhs = (hom.evaluate(s)? + hom.evaluate(t)?) % q;
            if lhs != rhs {
                return Err(GroupError::InconsistentValues(format!(
                    "additivity fails at {s} + {t}"
                )));
            }
            pairs += 1;
            if pairs >= 100 {
                break 'outer;
            }
        }
    }
    Ok(hom)
}

impl FiniteQuotientHom {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn class(&self) -> &RationalGroupClass {
        &self.class
    }

    /// Evaluate the homomorphism; exact modular arithmetic throughout.
    pub fn evaluate(&self, t: &Rational) -> Result<u64, GroupError> {
        if !self.class.contains(t) {
            return Err(GroupError::NotInClass(t.to_string()));
        }
        let q = BigInt::from(self.modulus);
        let residue = match &self.rule {
            QuotientRule::Localized => {
                let k = t.numer();
                let m = t.denom();
                // q prime and coprime to m: invert by Fermat
                let m_inv = m.modpow(&(&q - BigInt::from(2)), &q);
                ((k * m_inv) % &q + &q) % &q
            }
            QuotientRule::Cyclic { generator } => {
                let n = t / generator;
                debug_assert!(n.is_integer());
                (n.numer() % &q + &q) % &q
            }
        };
        Ok(residue.to_u64().expect("residue fits"))
    }
}

/// Generator-to-operator assignment for the counterexample representation.
fn counterexample_generators(class: &RationalGroupClass) -> Vec<Rational> {
    match class {
        RationalGroupClass::PrimeLocalized(primes) => {
            let mut gens = vec![Rational::one()];
            for p in primes.iter().take(3) {
                gens.push(Rational::new(BigInt::one(), BigInt::from(*p)));
            }
            gens
        }
        RationalGroupClass::FinitelyGenerated(gens) => gens.clone(),
        RationalGroupClass::AllPrimes => vec![Rational::one()],
    }
}

/// The quotient-Koopman counterexample: a positive isometric representation of
/// the positive part of a non-divisible class on `l^2(Z/qZ)` that fixes the
/// constant-one vector yet does not converge along the semigroup net.
///
/// Generator `t` acts as the Koopman operator of the translation
/// `a -> a + phi(t) mod q`, so the semigroup law holds exactly in permutation
/// arithmetic.
pub fn koopman_counterexample(
    class: &RationalGroupClass,
    q: u64,
) -> Result<SemigroupRepresentation, GroupError> {
    let hom = quotient_hom(class, q)?;
    let n = q as usize;
    let atoms = (0..n).map(|i| i.to_string()).collect();
    let space = LatticeSpace::new(atoms, vec![1.0; n], Exponent::Finite(2.0))
        .expect("counterexample space is valid");
    let generators = counterexample_generators(class);
    let mut operators = Vec::new();
    for g in &generators {
        let shift = hom.evaluate(g)? as usize;
        let map: Vec<usize> = (0..n).map(|a| (a + shift) % n).collect();
        operators.push(StructuredOperator::koopman(space.clone(), map, 1.0)?);
    }
    SemigroupRepresentation::generated(
        space,
        generators,
        operators,
        IndexClass::declare(class.clone()),
    )
    .map_err(|e| GroupError::InconsistentValues(e.to_string()))
}

/// Evaluator for the unique group-homomorphism extension of a commuting
/// semigroup assignment `generators[i] -> values[i]`.
pub struct GroupEvaluator {
    generators: Vec<Rational>,
    values: Vec<StructuredOperator>,
    inverses: Vec<StructuredOperator>,
    /// integer generator images under clearing of denominators
    scaled: Vec<BigInt>,
    common_denominator: BigInt,
    gcd: BigInt,
    bezout: Vec<BigInt>,
}

/// Extend `generators[i] -> values[i]` to the generated group. The values must
/// commute pairwise and be invertible within the positive cone; consistency is
/// verified on a basis of the relation lattice of the generators.
pub fn extend_hom_to_group(
    generators: &[Rational],
    values: &[StructuredOperator],
) -> Result<GroupEvaluator, GroupError> {
    if generators.is_empty() || generators.len() != values.len() {
        return Err(GroupError::InvalidClass(
            "need equally many generators and values".into(),
        ));
    }
    for g in generators {
        if !g.is_positive() {
            return Err(GroupError::InvalidClass(format!(
                "generator {g} must be strictly positive"
            )));
        }
    }
    let scale = values
        .iter()
        .map(|v| v.full_matrix().amax())
        .fold(1.0f64, f64::max);
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let ij = values[i].compose(&values[j])?.full_matrix();
            let ji = values[j].compose(&values[i])?.full_matrix();
            if (ij - ji).amax() > 1e-10 * scale.max(1.0) {
                return Err(GroupError::NotCommuting { i, j });
            }
        }
    }
    let mut inverses = Vec::new();
    for (index, v) in values.iter().enumerate() {
        inverses.push(
            v.positive_inverse()
                .map_err(|_| GroupError::NotInvertible { index })?,
        );
    }

    let mut common_denominator = BigInt::one();
    for g in generators {
        common_denominator = num_integer::lcm(common_denominator, g.denom().clone());
    }
    let scaled: Vec<BigInt> = generators
        .iter()
        .map(|g| (g * &common_denominator).to_integer())
        .collect();

    // unimodular column reduction [a_1 .. a_k] U = [d 0 .. 0]; the trailing
    // columns of U form a basis of the relation lattice
    let k = scaled.len();
    let mut a = scaled.clone();
    let mut u: Vec<Vec<BigInt>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    for i in 1..k {
        let egcd = num_integer::Integer::extended_gcd(&a[0], &a[i]);
        let (g, x, y) = (egcd.gcd.clone(), egcd.x.clone(), egcd.y.clone());
        let (a0, ai) = (a[0].clone(), a[i].clone());
        for row in u.iter_mut() {
            let c0 = row[0].clone();
            let ci = row[i].clone();
            row[0] = &x * &c0 + &y * &ci;
            row[i] = -(&ai / &g) * &c0 + (&a0 / &g) * &ci;
        }
        a[0] = g;
        a[i] = BigInt::zero();
    }
    let gcd = a[0].clone();
    let bezout: Vec<BigInt> = u.iter().map(|row| row[0].clone()).collect();

    let evaluator = GroupEvaluator {
        generators: generators.to_vec(),
        values: values.to_vec(),
        inverses,
        scaled,
        common_denominator,
        gcd,
        bezout,
    };

    // every relation basis vector must evaluate to the identity
    let n = values[0].dim();
    let id = nalgebra::DMatrix::<f64>::identity(n, n);
    for col in 1..k {
        let relation: Vec<BigInt> = u.iter().map(|row| row[col].clone()).collect();
        let op = evaluator.power_product(&relation)?;
        if (op.full_matrix() - &id).amax() > 1e-9 * scale.max(1.0) {
            let pretty: Vec<String> = relation.iter().map(|z| z.to_string()).collect();
            return Err(GroupError::InconsistentValues(format!(
                "relation ({}) does not evaluate to the identity",
                pretty.join(", ")
            )));
        }
    }
    Ok(evaluator)
}

impl GroupEvaluator {
    pub fn generators(&self) -> &[Rational] {
        &self.generators
    }

    fn power_product(&self, exponents: &[BigInt]) -> Result<StructuredOperator, GroupError> {
        let space = self.values[0].space().clone();
        let mut out = StructuredOperator::identity_singular(space);
        for (i, e) in exponents.iter().enumerate() {
            let count = e.abs().to_u64().ok_or(GroupError::ExponentTooLarge)?;
            if count > 1_000_000 {
                return Err(GroupError::ExponentTooLarge);
            }
            let base = if e.is_negative() { &self.inverses[i] } else { &self.values[i] };
            // square-and-multiply keeps products short
            let mut acc = base.clone();
            let mut remaining = count;
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

    /// Evaluate the extension at any integer combination of the generators.
    pub fn evaluate(&self, t: &Rational) -> Result<StructuredOperator, GroupError> {
        let scaled_t = t * &self.common_denominator;
        if !scaled_t.is_integer() {
            return Err(GroupError::NotRepresentable(t.to_string()));
        }
        let target = scaled_t.to_integer();
        let (quot, rem) = num_integer::Integer::div_rem(&target, &self.gcd);
        if !rem.is_zero() {
            return Err(GroupError::NotRepresentable(t.to_string()));
        }
        let exponents: Vec<BigInt> = self.bezout.iter().map(|b| b * &quot).collect();
        self.power_product(&exponents)
    }

    /// The integer exponent vector chosen for a given element (diagnostics).
    pub fn decomposition(&self, t: &Rational) -> Option<Vec<BigInt>> {
        let scaled_t = t * &self.common_denominator;
        if !scaled_t.is_integer() {
            return None;
        }
        let target = scaled_t.to_integer();
        let (quot, rem) = num_integer::Integer::div_rem(&target, &self.gcd);
        if !rem.is_zero() {
            return None;
        }
        Some(self.bezout.iter().map(|b| b * &quot).collect())
    }

    pub fn scaled_generators(&self) -> &[BigInt] {
        &self.scaled
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    fn heap(k: usize, arr: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(arr.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, arr, out);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    heap(k, &mut current, &mut out);
    out.sort();
    out.dedup();
    out
}

fn compose_perm(p: &[usize], q: &[usize]) -> Vec<usize> {
    q.iter().map(|&a| p[a]).collect()
}

fn perm_pow(p: &[usize], n: u32) -> Vec<usize> {
    let mut out: Vec<usize> = (0..p.len()).collect();
    for _ in 0..n {
        out = compose_perm(p, &out);
    }
    out
}

/// Search for a monomial `n`-th root of a monomial operator: exhaustive over
/// the permutation roots of the underlying atom permutation, with positive
/// scalings solved (and compatibility-checked) per cycle in log space.
/// Returns `None` when no root exists; the search space is finite, so absence
/// is certified.
pub fn nth_root_in_monomial_group(
    t: &StructuredOperator,
    n: u32,
) -> Result<Option<StructuredOperator>, GroupError> {
    let fact = t.monomial_factorize()?;
    let k = fact.dim();
    if n == 0 {
        return Err(GroupError::InvalidClass("root order must be positive".into()));
    }
    if n == 1 {
        return Ok(Some(t.clone()));
    }
    if k > 9 {
        return Err(GroupError::InvalidClass(
            "exhaustive monomial root search supports at most 9 atoms".into(),
        ));
    }
    let sigma = &fact.permutation;
    let log_lambda: Vec<f64> = fact.scalings.iter().map(|l| l.ln()).collect();
    for rho in permutations(k) {
        if &perm_pow(&rho, n) != sigma {
            continue;
        }
        // scaling equations: prod_{j<n} mu(rho^j(a)) = lambda(a), per rho-cycle
        let mut seen = vec![false; k];
        let mut mu = vec![0.0f64; k];
        let mut solvable = true;
        for start in 0..k {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = rho[start];
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = rho[cur];
            }
            let c = cycle.len();
            let mut m = nalgebra::DMatrix::<f64>::zeros(c, c);
            let mut rhs = DVector::<f64>::zeros(c);
            for (i, &atom) in cycle.iter().enumerate() {
                for j in 0..n as usize {
                    m[(i, (i + j) % c)] += 1.0;
                }
                rhs[i] = log_lambda[atom];
            }
            let svd = m.svd(true, true);
            match svd.solve(&rhs, 1e-12) {
                Ok(sol) => {
                    let residual = {
                        let mut m2 = nalgebra::DMatrix::<f64>::zeros(c, c);
                        for i in 0..c {
                            for j in 0..n as usize {
                                m2[(i, (i + j) % c)] += 1.0;
                            }
                        }
                        (m2 * &sol - &rhs).amax()
                    };
                    if residual > 1e-9 {
                        solvable = false;
                        break;
                    }
                    for (i, &atom) in cycle.iter().enumerate() {
                        mu[atom] = sol[i].exp();
                    }
                }
                Err(_) => {
                    solvable = false;
                    break;
                }
            }
        }
        if !solvable {
            continue;
        }
        let root = crate::operator::MonomialFactorization {
            permutation: rho.clone(),
            scalings: DVector::from_vec(mu),
        }
        .to_operator(t.space().clone());
        // exactness check before claiming the root
        let mut power = StructuredOperator::identity_singular(t.space().clone());
        for _ in 0..n {
            power = root.compose(&power)?;
        }
        if (power.full_matrix() - t.full_matrix()).amax()
            <= 1e-9 * t.full_matrix().amax().max(1.0)
        {
            return Ok(Some(root));
        }
    }
    Ok(None)
}
