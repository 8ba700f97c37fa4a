use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gh::{gh_distance, GhMode};
use super::PointedSample;
use crate::algebra::{GradedAlgebra, Profile};
use crate::cc::{ball_sample, CcOptions};
use crate::error::{HensError, Result};

/// Relative disagreement tolerated between two optimizer runs on the same
/// pair of points.
pub const OPTIMIZER_RELATIVE_TOL: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Metric,
    Dilatation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub eps: f64,
    pub sample: PointedSample,
}

/// Samples of a profile along a strictly decreasing ladder of scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub kind: ProfileKind,
    pub points: Vec<ProfilePoint>,
}

impl ProfileCurve {
    pub fn new(kind: ProfileKind, points: Vec<ProfilePoint>) -> Result<Self> {
        check_ladder(&points.iter().map(|p| p.eps).collect::<Vec<_>>())?;
        Ok(Self { kind, points })
    }

    pub fn scales(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.eps).collect()
    }

    pub fn at(&self, eps: f64) -> Option<&PointedSample> {
        self.points.iter().find(|p| p.eps == eps).map(|p| &p.sample)
    }
}

fn check_ladder(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(HensError::InvalidParameter("empty scale list".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(HensError::InvalidParameter("scales must be positive".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HensError::InvalidParameter("scales must be strictly decreasing".into()));
    }
    Ok(())
}

/// `P^m(ε, x)`: the CC ball of radius `ε` around `x` with distances
/// multiplied by `1/ε`. Every scale reuses `point_seed`, so on cones the
/// samples are dilated copies of each other.
pub fn metric_profile(
    alg: &GradedAlgebra,
    x: &DVector<f64>,
    eps: &[f64],
    count: usize,
    point_seed: u64,
    opts: &CcOptions,
) -> Result<ProfileCurve> {
    check_ladder(eps)?;
    let points = eps
        .par_iter()
        .map(|&e| {
            let raw = ball_sample(alg, x, e, count, point_seed, opts)?;
            let mut sample = raw.rescaled(1.0 / e);
            sample.scale = e;
            Ok(ProfilePoint { eps: e, sample })
        })
        .collect::<Result<Vec<_>>>()?;
    ProfileCurve::new(ProfileKind::Metric, points)
}

/// Dilatation profile: for each `ε` the unit ball at the origin of
/// `δ_ε⁻¹ * σ`, the structure with the deformed bracket and the same metric.
pub fn dilatation_profile(
    alg: &GradedAlgebra,
    eps: &[f64],
    count: usize,
    point_seed: u64,
    opts: &CcOptions,
) -> Result<ProfileCurve> {
    check_ladder(eps)?;
    let report = [Profile::HomogeneousEnsemble, Profile::HomogeneousSpace]
        .map(|p| alg.validate(p));
    if !report.iter().any(|r| r.passed()) {
        return Err(HensError::InvalidAlgebra(format!(
            "{} is neither a homogeneous ensemble nor a homogeneous space (failed: {})",
            alg.name(),
            report[0].failures().join(", ")
        )));
    }
    let origin = DVector::zeros(alg.dim());
    let points = eps
        .par_iter()
        .map(|&e| {
            let deformed = alg.deformed(e)?;
            let mut sample = ball_sample(&deformed, &origin, 1.0, count, point_seed, opts)?;
            sample.scale = e;
            Ok(ProfilePoint { eps: e, sample })
        })
        .collect::<Result<Vec<_>>>()?;
    ProfileCurve::new(ProfileKind::Dilatation, points)
}

/// How far apart two samples of the same space may look purely from solver
/// error: their recorded noise plus the optimizer's relative tolerance on
/// the larger diameter.
pub fn tolerance_budget(a: &PointedSample, b: &PointedSample) -> f64 {
    a.noise + b.noise + OPTIMIZER_RELATIVE_TOL * a.diameter().max(b.diameter())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleComparison {
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
    /// `upper / eps`.
    pub ratio: f64,
    /// Recorded solver noise of the two samples.
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub scales: Vec<ScaleComparison>,
    /// Least-squares slope of `log upper` against `log eps`; `o(eps)` decay
    /// corresponds to a slope above one. `None` when some bound vanishes.
    pub decay_exponent: Option<f64>,
    pub consistent: bool,
    pub verdict: String,
}

/// Compare two profiles scale by scale with GH bounds. The verdict is
/// "consistent with o(a)" when every bound is within the recorded solver
/// noise, or when `upper/eps` decreases from each scale to the next by more
/// than the noise allows.
pub fn profile_equivalence(p1: &ProfileCurve, p2: &ProfileCurve, scales: &[f64]) -> Result<EquivalenceReport> {
    check_ladder(scales)?;
    let mut rows = Vec::with_capacity(scales.len());
    for &e in scales {
        let (a, b) = match (p1.at(e), p2.at(e)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(HensError::ScaleMismatch(format!(
                    "scale {e} missing from one of the profiles"
                )))
            }
        };
        let gh = gh_distance(a, b, GhMode::Bound)?;
        rows.push(ScaleComparison {
            eps: e,
            lower: gh.lower,
            upper: gh.upper,
            ratio: gh.upper / e,
            noise: a.noise + b.noise,
        });
    }
    let within_noise = rows.iter().all(|r| r.upper <= r.noise);
    let decaying = rows.len() >= 2
        && rows
            .windows(2)
            .all(|w| w[1].ratio + w[1].noise / w[1].eps < w[0].ratio - w[0].noise / w[0].eps);
    let consistent = within_noise || decaying;
    let verdict = if within_noise {
        "consistent with o(a): bounds within solver noise"
    } else if decaying {
        "consistent with o(a): upper/a decays"
    } else {
        "not consistent with o(a): upper/a does not decay"
    };
    Ok(EquivalenceReport {
        decay_exponent: decay_exponent(&rows),
        scales: rows,
        consistent,
        verdict: verdict.into(),
    })
}

fn decay_exponent(rows: &[ScaleComparison]) -> Option<f64> {
    if rows.len() < 2 || rows.iter().any(|r| !(r.upper > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.upper.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}
