//! Model-file schema: JSON descriptions of a lattice space, a representation
//! (explicit operators, builtin kernels on a grid, or a flow/jump generator),
//! the declared index class and analysis options; plus the gallery of
//! ready-made instances.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::AnalysisOptions;
use crate::groups::{Rational, RationalGroupClass};
use crate::kernels::{self, GridSpec};
use crate::operator::{SingularTerm, StructuredOperator};
use crate::semigroup::{Flow, IndexClass, SemigroupRepresentation, Time};
use crate::space::{Exponent, LatticeSpace};

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("unknown gallery `{0}`")]
    UnknownGallery(String),
    #[error(transparent)]
    Group(#[from] crate::groups::GroupError),
    #[error(transparent)]
    Semigroup(#[from] crate::semigroup::SemigroupError),
    #[error(transparent)]
    Operator(#[from] crate::operator::OperatorError),
    #[error(transparent)]
    Lattice(#[from] crate::space::LatticeError),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Explicit { atoms: Vec<String>, weights: Vec<f64>, p: PSpec },
    Grid { grid: GridSpecDto },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpecDto {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    Number(f64),
    Label(String),
}

impl PSpec {
    fn to_exponent(&self) -> Result<Exponent, SchemaError> {
        match self {
            PSpec::Number(p) => Ok(Exponent::Finite(*p)),
            PSpec::Label(s) if s == "inf" || s == "infinity" || s == "sup" => Ok(Exponent::Sup),
            PSpec::Label(s) => Err(SchemaError::Invalid(format!("unknown exponent `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularTermSpec {
    pub map: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    /// named kernel evaluated on the grid of the model space
    Builtin {
        builtin: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        row_table: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        column_table: Option<Vec<f64>>,
    },
    /// inline kernel samples `samples[i][j] = k(x_i, y_j)` on the grid
    Sampled { samples: Vec<Vec<f64>> },
    /// explicit kernel matrix and singular terms
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kernel: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        singular: Option<Vec<SingularTermSpec>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RepresentationSpec {
    Generated {
        generators: Vec<String>,
        operators: Vec<OperatorSpec>,
    },
    ContinuousTime {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flow: Option<FlowSpec>,
        jump: Vec<Vec<f64>>,
        conservative: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSpec {
    pub rate: f64,
    pub map: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GroupClassSpec {
    PrimeLocalized { primes: Vec<u64> },
    AllPrimes,
    FinitelyGenerated { generators: Vec<String> },
}

impl GroupClassSpec {
    pub fn to_class(&self) -> Result<RationalGroupClass, SchemaError> {
        Ok(match self {
            GroupClassSpec::AllPrimes => RationalGroupClass::AllPrimes,
            GroupClassSpec::PrimeLocalized { primes } => RationalGroupClass::prime_localized(
                primes.iter().copied().collect::<BTreeSet<_>>(),
            )?,
            GroupClassSpec::FinitelyGenerated { generators } => {
                let parsed: Result<Vec<Rational>, _> =
                    generators.iter().map(|s| parse_rational(s)).collect();
                RationalGroupClass::finitely_generated(parsed?)?
            }
        })
    }

    pub fn from_class(class: &RationalGroupClass) -> Self {
        match class {
            RationalGroupClass::AllPrimes => GroupClassSpec::AllPrimes,
            RationalGroupClass::PrimeLocalized(primes) => GroupClassSpec::PrimeLocalized {
                primes: primes.iter().copied().collect(),
            },
            RationalGroupClass::FinitelyGenerated(gens) => GroupClassSpec::FinitelyGenerated {
                generators: gens.iter().map(|g| g.to_string()).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OptionsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_cell: Option<usize>,
}

/// Top-level model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub space: SpaceSpec,
    pub representation: RepresentationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_class: Option<GroupClassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsSpec>,
}

/// A parsed and validated model ready for analysis.
pub struct BuiltModel {
    pub representation: SemigroupRepresentation,
    pub options: AnalysisOptions,
}

pub fn parse_rational(s: &str) -> Result<Rational, SchemaError> {
    s.trim()
        .parse::<Rational>()
        .map_err(|e| SchemaError::Invalid(format!("cannot parse rational `{s}`: {e}")))
}

fn matrix_from_rows(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>, SchemaError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(SchemaError::Invalid(format!("{what} must be a {n} x {n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("model serializes");
        let mut out = crate::report::canonical_json(&value);
        out.push('\n');
        out
    }

    fn grid(&self) -> Result<Option<GridSpec>, SchemaError> {
        match &self.space {
            SpaceSpec::Grid { grid } => Ok(Some(GridSpec::new(grid.a, grid.b, grid.n)?)),
            SpaceSpec::Explicit { .. } => Ok(None),
        }
    }

    fn build_space(&self) -> Result<Arc<LatticeSpace>, SchemaError> {
        match &self.space {
            SpaceSpec::Explicit { atoms, weights, p } => {
                Ok(LatticeSpace::new(atoms.clone(), weights.clone(), p.to_exponent()?)?)
            }
            SpaceSpec::Grid { grid } => Ok(GridSpec::new(grid.a, grid.b, grid.n)?.space()),
        }
    }

    fn build_operator(
        &self,
        spec: &OperatorSpec,
        space: &Arc<LatticeSpace>,
    ) -> Result<StructuredOperator, SchemaError> {
        let n = space.dim();
        match spec {
            OperatorSpec::Explicit { kernel, singular } => {
                let kernel = match kernel {
                    Some(rows) => matrix_from_rows(rows, n, "kernel")?,
                    None => DMatrix::zeros(n, n),
                };
                let mut terms = Vec::new();
                for term in singular.iter().flatten() {
                    let scale = match (&term.coeff, &term.scale) {
                        (Some(c), None) => DVector::from_element(n, *c),
                        (None, Some(s)) => {
                            if s.len() != n {
                                return Err(SchemaError::Invalid(
                                    "singular scale length mismatch".into(),
                                ));
                            }
                            DVector::from_vec(s.clone())
                        }
                        _ => {
                            return Err(SchemaError::Invalid(
                                "singular term needs exactly one of `coeff` or `scale`".into(),
                            ))
                        }
                    };
                    terms.push(SingularTerm { map: term.map.clone(), scale });
                }
                Ok(StructuredOperator::new(space.clone(), kernel, terms)?)
            }
            OperatorSpec::Sampled { samples } => {
                let grid = self
                    .grid()?
                    .ok_or_else(|| SchemaError::Invalid("sampled kernels need a grid space".into()))?;
                if samples.len() != n || samples.iter().any(|r| r.len() != n) {
                    return Err(SchemaError::Invalid(format!("kernel samples must be {n} x {n}")));
                }
                let h = grid.width();
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let sample = samples[i][j];
                        if sample < 0.0 {
                            return Err(SchemaError::Invalid(format!(
                                "kernel sample at ({i},{j}) is negative"
                            )));
                        }
                        m[(j, i)] = sample * h;
                    }
                }
                Ok(StructuredOperator::from_kernel(space.clone(), m)?)
            }
            OperatorSpec::Builtin { builtin, t, row_table, column_table } => {
                let grid = self
                    .grid()?
                    .ok_or_else(|| SchemaError::Invalid("builtin kernels need a grid space".into()))?;
                match builtin.as_str() {
                    "gaussian" => {
                        let t = t.ok_or_else(|| {
                            SchemaError::Invalid("gaussian kernel needs `t`".into())
                        })?;
                        Ok(kernels::gaussian_semigroup(t, &grid)?)
                    }
                    "constant" => Ok(kernels::discretize(|_, _| 1.0, &grid)?),
                    "separable" => {
                        let f = row_table.as_ref().ok_or_else(|| {
                            SchemaError::Invalid("separable kernel needs `row_table`".into())
                        })?;
                        let g = column_table.as_ref().ok_or_else(|| {
                            SchemaError::Invalid("separable kernel needs `column_table`".into())
                        })?;
                        if f.len() != n || g.len() != n {
                            return Err(SchemaError::Invalid(
                                "separable tables must match the grid size".into(),
                            ));
                        }
                        let h = grid.width();
                        let mut m = DMatrix::zeros(n, n);
                        for i in 0..n {
                            for j in 0..n {
                                let sample = f[i] * g[j];
                                if sample < 0.0 {
                                    return Err(SchemaError::Invalid(format!(
                                        "separable kernel sample at ({i},{j}) is negative"
                                    )));
                                }
                                m[(j, i)] = sample * h;
                            }
                        }
                        Ok(StructuredOperator::from_kernel(space.clone(), m)?)
                    }
                    other => {
                        Err(SchemaError::Invalid(format!("unknown builtin kernel `{other}`")))
                    }
                }
            }
        }
    }

    /// Validate and assemble the model.
    pub fn build(&self) -> Result<BuiltModel, SchemaError> {
        let space = self.build_space()?;
        let representation = match &self.representation {
            RepresentationSpec::Generated { generators, operators } => {
                if generators.len() != operators.len() {
                    return Err(SchemaError::Invalid(
                        "need equally many generators and operators".into(),
                    ));
                }
                let parsed: Result<Vec<Rational>, _> =
                    generators.iter().map(|s| parse_rational(s)).collect();
                let ops: Result<Vec<StructuredOperator>, _> = operators
                    .iter()
                    .map(|spec| self.build_operator(spec, &space))
                    .collect();
                let class = self
                    .index_class
                    .as_ref()
                    .ok_or_else(|| {
                        SchemaError::Invalid("generated representations need an index_class".into())
                    })?
                    .to_class()?;
                SemigroupRepresentation::generated(space, parsed?, ops?, IndexClass::declare(class))
                    .map_err(|e| SchemaError::Invalid(e.to_string()))?
            }
            RepresentationSpec::ContinuousTime { flow, jump, conservative } => {
                let n = space.dim();
                let jump = matrix_from_rows(jump, n, "jump rate matrix")?;
                let flow = flow.as_ref().map(|f| Flow { rate: f.rate, map: f.map.clone() });
                SemigroupRepresentation::continuous_time(space, flow, jump, *conservative)
                    .map_err(|e| SchemaError::Invalid(e.to_string()))?
            }
        };
        let mut options = AnalysisOptions::default();
        if let Some(o) = &self.options {
            if let Some(tol) = o.tol {
                options.tol = tol;
            }
            if let Some(h) = o.horizon {
                options.horizon = h;
            }
            if let Some(d) = o.depth {
                options.depth = d;
            }
            if let Some(e) = o.epsilon {
                options.epsilon = e;
            }
            options.atom_cell = o.atom_cell;
        }
        Ok(BuiltModel { representation, options })
    }
}

pub const GALLERY_NAMES: [&str; 5] = [
    "irreducible-ctmc",
    "dyadic-counterexample",
    "jump-flow",
    "gaussian",
    "am-space-dual",
];

/// Deterministic ready-made model files.
pub fn gallery(name: &str) -> Result<ModelFile, SchemaError> {
    match name {
        "irreducible-ctmc" => Ok(irreducible_ctmc()),
        "dyadic-counterexample" => Ok(dyadic_counterexample()),
        "jump-flow" => Ok(jump_flow()),
        "gaussian" => Ok(gaussian()),
        "am-space-dual" => Ok(am_space_dual()),
        other => Err(SchemaError::UnknownGallery(other.to_string())),
    }
}

/// Conservative irreducible chain on eight states: ring transitions forward,
/// backward and a skip-by-three, all with fixed rates.
fn irreducible_ctmc() -> ModelFile {
    let n = 8;
    let mut jump = vec![vec![0.0; n]; n];
    for i in 0..n {
        jump[(i + 1) % n][i] = 1.0;
        jump[(i + n - 1) % n][i] = 0.5;
        jump[(i + 3) % n][i] = 0.25;
    }
    ModelFile {
        space: SpaceSpec::Explicit {
            atoms: (0..n).map(|i| format!("s{i}")).collect(),
            weights: vec![1.0; n],
            p: PSpec::Number(1.0),
        },
        representation: RepresentationSpec::ContinuousTime { flow: None, jump, conservative: true },
        index_class: None,
        options: Some(OptionsSpec {
            tol: Some(1e-8),
            horizon: Some(64),
            atom_cell: Some(0),
            ..OptionsSpec::default()
        }),
    }
}

/// The quotient-Koopman counterexample on three atoms over the dyadics:
/// generator 1 acts as the square of the three-cycle assigned to 1/2.
fn dyadic_counterexample() -> ModelFile {
    ModelFile {
        space: SpaceSpec::Explicit {
            atoms: vec!["0".into(), "1".into(), "2".into()],
            weights: vec![1.0; 3],
            p: PSpec::Number(2.0),
        },
        representation: RepresentationSpec::Generated {
            generators: vec!["1".into(), "1/2".into()],
            operators: vec![
                OperatorSpec::Explicit {
                    kernel: None,
                    singular: Some(vec![SingularTermSpec {
                        map: vec![1, 2, 0],
                        coeff: Some(1.0),
                        scale: None,
                    }]),
                },
                OperatorSpec::Explicit {
                    kernel: None,
                    singular: Some(vec![SingularTermSpec {
                        map: vec![2, 0, 1],
                        coeff: Some(1.0),
                        scale: None,
                    }]),
                },
            ],
        },
        index_class: Some(GroupClassSpec::PrimeLocalized { primes: vec![2] }),
        options: Some(OptionsSpec { horizon: Some(96), ..OptionsSpec::default() }),
    }
}

/// Transport along a four-cycle at rate one plus uniform jumps at rate one on
/// a weighted grid model of the circle.
fn jump_flow() -> ModelFile {
    let n = 4;
    ModelFile {
        space: SpaceSpec::Explicit {
            atoms: (0..n).map(|i| format!("c{i}")).collect(),
            weights: vec![0.25; n],
            p: PSpec::Number(1.0),
        },
        representation: RepresentationSpec::ContinuousTime {
            flow: Some(FlowSpec { rate: 1.0, map: vec![1, 2, 3, 0] }),
            jump: vec![vec![0.25; n]; n],
            conservative: true,
        },
        index_class: None,
        options: Some(OptionsSpec { epsilon: Some(0.1), ..OptionsSpec::default() }),
    }
}

/// Truncated heat semigroup on a 200-cell window, declared over the full
/// rationals through its quarter-time operator.
fn gaussian() -> ModelFile {
    ModelFile {
        space: SpaceSpec::Grid { grid: GridSpecDto { a: -5.0, b: 5.0, n: 200 } },
        representation: RepresentationSpec::Generated {
            generators: vec!["1/4".into()],
            operators: vec![OperatorSpec::Builtin {
                builtin: "gaussian".into(),
                t: Some(0.25),
                row_table: None,
                column_table: None,
            }],
        },
        index_class: Some(GroupClassSpec::AllPrimes),
        options: Some(OptionsSpec { horizon: Some(256), ..OptionsSpec::default() }),
    }
}

/// Doubly stochastic mixture of a six-cycle and the uniform averaging kernel
/// on a sup-norm model; the kernel part is the dominated compact witness.
fn am_space_dual() -> ModelFile {
    let n = 6;
    ModelFile {
        space: SpaceSpec::Explicit {
            atoms: (0..n).map(|i| format!("x{i}")).collect(),
            weights: vec![1.0; n],
            p: PSpec::Label("inf".into()),
        },
        representation: RepresentationSpec::Generated {
            generators: vec!["1".into()],
            operators: vec![OperatorSpec::Explicit {
                kernel: Some(vec![vec![0.5 / n as f64; n]; n]),
                singular: Some(vec![SingularTermSpec {
                    map: vec![1, 2, 3, 4, 5, 0],
                    coeff: Some(0.5),
                    scale: None,
                }]),
            }],
        },
        index_class: Some(GroupClassSpec::AllPrimes),
        options: None,
    }
}

/// Divisibility command payload: verdict, witness and a small quotient table.
pub fn divisibility_report(class: &RationalGroupClass) -> Value {
    let (divisible, witness) = class.is_divisible();
    let mut table = Vec::new();
    if let Some(q) = witness {
        if let Ok(hom) = crate::groups::quotient_hom(class, q) {
            let samples: Vec<Rational> = match class {
                RationalGroupClass::PrimeLocalized(primes) => {
                    let mut s = vec![Rational::from_integer(1.into())];
                    for p in primes.iter().take(2) {
                        s.push(Rational::new(1.into(), (*p).into()));
                        s.push(Rational::new(3.into(), (*p).into()));
                    }
                    s
                }
                _ => class
                    .cyclic_generator()
                    .into_iter()
                    .flat_map(|g| (1..4).map(move |k| &g * Rational::from_integer(k.into())))
                    .collect(),
            };
            for s in samples {
                if let Ok(v) = hom.evaluate(&s) {
                    table.push(json!({"element": s.to_string(), "image": v}));
                }
            }
        }
    }
    json!({
        "divisible": divisible,
        "witness_prime": witness,
        "cyclic_generator": class.cyclic_generator().map(|g| g.to_string()),
        "quotient_table": table,
    })
}

/// Trajectory of a probe under the net, as CSV rows `(t, probe, residual)`.
pub fn simulate_csv(
    built: &BuiltModel,
    probe_name: &str,
    horizon: usize,
) -> Result<String, SchemaError> {
    let rep = &built.representation;
    let space = rep.space();
    let n = space.dim();
    let probe: DVector<f64> = if probe_name == "ones" {
        DVector::from_element(n, 1.0)
    } else if probe_name == "uniform" {
        // mass-one uniform density
        let total: f64 = space.weights().iter().sum();
        DVector::from_element(n, 1.0 / total)
    } else if let Some(idx) = probe_name.strip_prefix('e') {
        let i: usize = idx
            .parse()
            .map_err(|_| SchemaError::Invalid(format!("unknown probe `{probe_name}`")))?;
        if i >= n {
            return Err(SchemaError::Invalid(format!("probe index {i} out of range")));
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    } else {
        return Err(SchemaError::Invalid(format!("unknown probe `{probe_name}`")));
    };

    // residual against the splitting projection when one is computable
    let projection = crate::jdlg::jdlg_split(rep).ok().map(|s| s.projection().clone());
    let mut out = String::from("t,probe,residual\n");
    let write_row = |out: &mut String, t: &Time, residual: f64| {
        out.push_str(&format!("{:.8},{},{:.12e}\n", t.as_f64(), probe_name, residual));
    };
    match rep.kind() {
        crate::semigroup::RepresentationKind::Generated { generators, operators, .. } => {
            let mut state = probe.clone();
            let mut t = Rational::from_integer(0.into());
            for step in 0..horizon {
                let g = step % operators.len();
                let next = operators[g].apply_coords(&state);
                t += &generators[g];
                let residual = match &projection {
                    Some(p) => space.norm(&(&next - p * &probe)),
                    None => space.norm(&(&next - &state)),
                };
                write_row(&mut out, &Time::Rational(t.clone()), residual);
                state = next;
            }
        }
        crate::semigroup::RepresentationKind::ContinuousTime { .. } => {
            let mut previous = probe.clone();
            for k in 1..=horizon {
                let t = k as f64;
                let current = rep.evaluate_real(t)?.apply_coords(&probe);
                let residual = match &projection {
                    Some(p) => space.norm(&(&current - p * &probe)),
                    None => space.norm(&(&current - &previous)),
                };
                write_row(&mut out, &Time::Real(t), residual);
                previous = current;
            }
        }
    }
    Ok(out)
}
