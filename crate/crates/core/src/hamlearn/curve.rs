use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::hamlearn::basis::OperatorBasis;
use crate::hamlearn::constraints::ConstraintSet;
use crate::hamlearn::kmatrix::{k_matrix_exact, KMatrix, SampledKModel, SamplingMode};
use crate::hamlearn::reconstruct::{parameter_distance, reconstruct_with_reference};
use crate::qsim::state::QuantumState;
use crate::rng::Seed;
use crate::stats::{median, quantile};
use crate::{Error, Result};

/// Variable swept by a learning curve.
#[derive(Clone, Debug, PartialEq)]
pub enum Control {
    /// Prefix lengths of the constraint set.
    Constraints(Vec<usize>),
    /// Shots per K entry, using the whole constraint set.
    Shots(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveSpec {
    pub control: Control,
    /// Shots per entry for a constraint sweep; `None` for exact K.
    pub shots: Option<u64>,
    pub seeds: Vec<u64>,
    pub mode: SamplingMode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub control: f64,
    pub median_distance: f64,
    pub q25: f64,
    pub q75: f64,
    /// Median over seeds of `lambda_2 - lambda_1`.
    pub gap: f64,
    /// Median over seeds of the smallest singular value.
    pub smallest_singular_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
    pub mode: SamplingMode,
}

impl LearningCurve {
    pub const CSV_HEADER: &'static str = "control,median_distance,q25,q75,gap,smallest_singular_value";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e}\n",
                r.control, r.median_distance, r.q25, r.q75, r.gap, r.smallest_singular_value
            ));
        }
        s
    }
}

/// Gaussian reference vector used to pick a representative from a
/// degenerate null space.
fn reference(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = Seed(seed).split(0x0072_6566).rng();
    (0..m).map(|_| rng.sample(StandardNormal)).collect()
}

fn summarize(control: f64, ks: &[(KMatrix, u64)], truth: &[f64]) -> Result<CurveRow> {
    let mut dist = Vec::with_capacity(ks.len());
    let mut gaps = Vec::with_capacity(ks.len());
    let mut smallest = Vec::with_capacity(ks.len());
    for (k, seed) in ks {
        let r = reconstruct_with_reference(k, &reference(k.n_elements(), *seed))?;
        dist.push(parameter_distance(truth, &r.coefficients)?);
        gaps.push(r.gap);
        smallest.push(r.singular_values[0]);
    }
    Ok(CurveRow {
        control,
        median_distance: median(&dist),
        q25: quantile(&dist, 0.25),
        q75: quantile(&dist, 0.75),
        gap: median(&gaps),
        smallest_singular_value: median(&smallest),
    })
}

/// Parameter distance to `truth` over a grid of constraint counts or shot
/// budgets, aggregated over seeds.
pub fn learning_curve(
    state: &QuantumState,
    basis: &OperatorBasis,
    constraints: &ConstraintSet,
    truth: &[f64],
    spec: &CurveSpec,
) -> Result<LearningCurve> {
    if spec.seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    let exact = match (&spec.control, spec.shots) {
        (Control::Constraints(_), None) => true,
        _ => spec.mode == SamplingMode::Exact,
    };
    let mut rows = Vec::new();
    let mode;
    if exact {
        mode = SamplingMode::Exact;
        let k = k_matrix_exact(state, basis, constraints)?;
        match &spec.control {
            Control::Constraints(grid) => {
                if grid.is_empty() {
                    return Err(Error::InvalidArgument("empty constraint grid".into()));
                }
                for &n in grid {
                    check_prefix(n, constraints)?;
                    let ks: Vec<_> = spec.seeds.iter().map(|&s| (k.prefix(n), s)).collect();
                    rows.push(summarize(n as f64, &ks, truth)?);
                }
            }
            Control::Shots(grid) => {
                if grid.is_empty() {
                    return Err(Error::InvalidArgument("empty shot grid".into()));
                }
                for &shots in grid {
                    let ks: Vec<_> = spec.seeds.iter().map(|&s| (k.clone(), s)).collect();
                    rows.push(summarize(shots as f64, &ks, truth)?);
                }
            }
        }
    } else {
        let model = SampledKModel::new(state, basis, constraints, spec.mode)?;
        mode = model.mode();
        match &spec.control {
            Control::Constraints(grid) => {
                let shots = spec.shots.unwrap_or(0);
                if grid.is_empty() {
                    return Err(Error::InvalidArgument("empty constraint grid".into()));
                }
                let full: Vec<_> = spec
                    .seeds
                    .iter()
                    .map(|&s| model.sample(shots, Seed(s)).map(|k| (k, s)))
                    .collect::<Result<_>>()?;
                for &n in grid {
                    check_prefix(n, constraints)?;
                    let ks: Vec<_> = full.iter().map(|(k, s)| (k.prefix(n), *s)).collect();
                    rows.push(summarize(n as f64, &ks, truth)?);
                }
            }
            Control::Shots(grid) => {
                if grid.is_empty() {
                    return Err(Error::InvalidArgument("empty shot grid".into()));
                }
                for &shots in grid {
                    let ks: Vec<_> = spec
                        .seeds
                        .iter()
                        .map(|&s| model.sample(shots, Seed(s).split(shots)).map(|k| (k, s)))
                        .collect::<Result<_>>()?;
                    rows.push(summarize(shots as f64, &ks, truth)?);
                }
            }
        }
    }
    Ok(LearningCurve { rows, mode })
}

fn check_prefix(n: usize, constraints: &ConstraintSet) -> Result<()> {
    if n == 0 || n > constraints.len() {
        return Err(Error::IndexOutOfRange {
            what: "constraint count",
            index: n,
            len: constraints.len(),
        });
    }
    Ok(())
}
