//! Quadrature discretization of integral kernels on an interval grid, the
//! truncated heat-kernel family, and an empirical covering-number diagnostic
//! for the compactness behaviour of order-interval images across refinements.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::operator::StructuredOperator;
use crate::space::{Exponent, LatticeSpace};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel sample k({x}, {y}) = {value} is negative")]
    NegativeKernelSample { x: f64, y: f64, value: f64 },
    #[error("time {0} is not positive")]
    NonPositiveTime(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("order-interval bound has a negative coordinate at cell {0}")]
    NegativeBound(usize),
    #[error(transparent)]
    Operator(#[from] crate::operator::OperatorError),
    #[error(transparent)]
    Lattice(#[from] crate::space::LatticeError),
}

/// Uniform cell grid on an interval; cell weights equal the cell width, so the
/// grid space models a discretized `L^1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self, KernelError> {
        if !(b > a) {
            return Err(KernelError::InvalidGrid(format!("need b > a, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(KernelError::InvalidGrid(format!("need at least 2 cells, got {n}")));
        }
        Ok(GridSpec { a, b, n })
    }

    pub fn width(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.width()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.midpoint(i)).collect()
    }

    pub fn space(&self) -> Arc<LatticeSpace> {
        let atoms = (0..self.n).map(|i| format!("cell{i}")).collect();
        LatticeSpace::new(atoms, vec![self.width(); self.n], Exponent::Finite(1.0))
            .expect("grid space is valid")
    }

    /// Coordinates of the indicator density of `[lo, hi]` on this grid.
    pub fn indicator(&self, lo: f64, hi: f64) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            let x = self.midpoint(i);
            if x >= lo && x <= hi {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Midpoint-rule discretization of a positive kernel `k(x, y)` into a pure
/// kernel operator on the grid's `L^1` model. Densities are columns:
/// `(Tf)_j = sum_i k(x_i, y_j) f_i h`.
pub fn discretize(
    kernel: impl Fn(f64, f64) -> f64,
    grid: &GridSpec,
) -> Result<StructuredOperator, KernelError> {
    let n = grid.n;
    let h = grid.width();
    let xs = grid.midpoints();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let sample = kernel(xs[i], xs[j]);
            if sample < 0.0 {
                return Err(KernelError::NegativeKernelSample {
                    x: xs[i],
                    y: xs[j],
                    value: sample,
                });
            }
            m[(j, i)] = sample * h;
        }
    }
    Ok(StructuredOperator::from_kernel(grid.space(), m)?)
}

/// The heat kernel `exp(-(x-y)^2 / 4t) / sqrt(4 pi t)` truncated to the grid
/// window. Mass leaks through the boundary and is deliberately not
/// renormalized; see [`boundary_mass_loss`].
pub fn gaussian_semigroup(t: f64, grid: &GridSpec) -> Result<StructuredOperator, KernelError> {
    if !(t > 0.0) {
        return Err(KernelError::NonPositiveTime(t));
    }
    let norm = 1.0 / (4.0 * PI * t).sqrt();
    discretize(|x, y| norm * (-(x - y) * (x - y) / (4.0 * t)).exp(), grid)
}

/// Largest per-source-cell mass defect `1 - sum_j k(x_i, y_j) h` of a
/// discretized Markov kernel: the boundary truncation loss.
pub fn boundary_mass_loss(op: &StructuredOperator) -> f64 {
    let m = op.full_matrix();
    let n = m.ncols();
    (0..n)
        .map(|i| 1.0 - (0..n).map(|j| m[(j, i)]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticVerdict {
    /// covering numbers stay bounded across refinements
    CompatibleWithAmCompact,
    /// covering numbers grow with the refinement (or saturate the sample set)
    NotAmCompactLike,
}

#[derive(Debug, Clone)]
pub struct LevelCover {
    pub n: usize,
    pub samples: usize,
    pub covering_number: usize,
}

#[derive(Debug, Clone)]
pub struct CoveringProfile {
    pub epsilon: f64,
    pub levels: Vec<LevelCover>,
    pub verdict: DiagnosticVerdict,
}

// deterministic mixing of (sample, cell) into a ternary digit
fn ternary_digit(sample: u64, cell: u64) -> u8 {
    let mut z = sample
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(cell.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z ^= z >> 30;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 27;
    (z % 3) as u8
}

/// Deterministic quasi-random lattice points of the order interval `[0, f]`:
/// each support coordinate takes one of `{0, f_i/2, f_i}`. All patterns are
/// enumerated when they fit into the budget.
fn interval_samples(f: &DVector<f64>, budget: usize) -> Vec<DVector<f64>> {
    let n = f.len();
    let support: Vec<usize> = (0..n).filter(|i| f[*i] > 0.0).collect();
    let exhaustive = u32::try_from(support.len())
        .ok()
        .and_then(|k| 3usize.checked_pow(k))
        .map(|total| total <= budget)
        .unwrap_or(false);
    let count = if exhaustive {
        3usize.pow(support.len() as u32)
    } else {
        budget
    };
    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let mut v = DVector::zeros(n);
        let mut code = s;
        for (rank, &i) in support.iter().enumerate() {
            let digit = if exhaustive {
                let d = (code % 3) as u8;
                code /= 3;
                d
            } else {
                ternary_digit(s as u64, rank as u64)
            };
            v[i] = f[i] * f64::from(digit) / 2.0;
        }
        out.push(v);
    }
    out
}

fn greedy_cover(images: &[DVector<f64>], space: &LatticeSpace, epsilon: f64) -> usize {
    let mut centers: Vec<&DVector<f64>> = Vec::new();
    for img in images {
        if !centers.iter().any(|c| space.norm(&(*c - img)) <= epsilon) {
            centers.push(img);
        }
    }
    centers.len()
}

/// Estimate covering numbers of `T[0, f]` across grid refinements. The
/// profile is an empirical diagnostic, not a proof: bounded covering numbers
/// are compatible with compact order-interval images, while growth (or a
/// saturated sample set) is the signature of the opposite.
pub fn am_compact_diagnostic(
    build: impl Fn(&GridSpec) -> Result<StructuredOperator, KernelError>,
    window: (f64, f64),
    levels: &[usize],
    bound_profile: impl Fn(f64) -> f64,
    epsilon: f64,
    budget: usize,
) -> Result<CoveringProfile, KernelError> {
    let mut out = Vec::new();
    for &n in levels {
        let grid = GridSpec::new(window.0, window.1, n)?;
        let op = build(&grid)?;
        let space = grid.space();
        let f = DVector::from_fn(n, |i, _| bound_profile(grid.midpoint(i)));
        for i in 0..n {
            if f[i] < 0.0 {
                return Err(KernelError::NegativeBound(i));
            }
        }
        let samples = interval_samples(&f, budget);
        let images: Vec<DVector<f64>> = samples.iter().map(|v| op.apply_coords(v)).collect();
        let covering_number = greedy_cover(&images, &space, epsilon);
        out.push(LevelCover { n, samples: samples.len(), covering_number });
    }
    let saturated = out
        .last()
        .map(|l| l.covering_number * 10 >= l.samples * 9)
        .unwrap_or(false);
    let growing = out
        .windows(2)
        .any(|w| w[1].covering_number as f64 > 1.2 * w[0].covering_number as f64);
    let verdict = if saturated || growing {
        DiagnosticVerdict::NotAmCompactLike
    } else {
        DiagnosticVerdict::CompatibleWithAmCompact
    };
    Ok(CoveringProfile { epsilon, levels: out, verdict })
}
