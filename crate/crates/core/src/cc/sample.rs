use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use super::{cc_distance, CcOptions, Dynamics};
use crate::algebra::GradedAlgebra;
use crate::error::{HensError, Result};
use crate::profiles::PointedSample;
use crate::rng;

const PROPOSAL_SEGMENTS: usize = 4;
const PROPOSALS_PER_POINT: usize = 100;
/// Proposal lengths range up to this multiple of the radius, so that the
/// acceptance test does real work.
const PROPOSAL_OVERSHOOT: f64 = 1.25;

/// `count` points of the closed CC ball of `radius` around `center` with their
/// pairwise distance upper bounds. Point 0 is the center and the base point.
///
/// Candidates are endpoints of random horizontal paths from the center; a
/// candidate is kept when its path, an upper bound for its distance to the
/// center, is no longer than `radius`. Candidate paths are drawn at unit
/// scale and stretched by `radius`, so equal `point_seed`s give dilated
/// copies on cones. Distances use `opts.seed`, independently of the points.
pub fn ball_sample(
    alg: &GradedAlgebra,
    center: &DVector<f64>,
    radius: f64,
    count: usize,
    point_seed: u64,
    opts: &CcOptions,
) -> Result<PointedSample> {
    if count < 2 {
        return Err(HensError::InvalidParameter("a ball sample needs at least two points".into()));
    }
    if !(radius > 0.0) {
        return Err(HensError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if center.len() != alg.dim() {
        return Err(HensError::DimensionMismatch {
            expected: alg.dim(),
            got: center.len(),
        });
    }
    let dynamics = Dynamics::new(alg)?;
    let q = alg.v1_dim();
    let mut rng = rng::seeded(point_seed);
    let mut points = vec![center.clone()];
    let mut reach = vec![0.0];
    let mut proposals = 0;
    while points.len() < count {
        if proposals >= PROPOSALS_PER_POINT * count {
            return Err(HensError::SamplerBudget {
                accepted: points.len(),
                requested: count,
            });
        }
        proposals += 1;
        let controls: Vec<Vec<f64>> = (0..PROPOSAL_SEGMENTS)
            .map(|_| (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let length = super::path_length(alg, &controls);
        let wanted = PROPOSAL_OVERSHOOT * rng.gen::<f64>().sqrt();
        if length < 1e-12 || wanted > 1.0 {
            continue;
        }
        let stretch = radius * wanted / length;
        let scaled: Vec<Vec<f64>> = controls
            .iter()
            .map(|u| u.iter().map(|c| c * stretch).collect())
            .collect();
        points.push(dynamics.endpoint(center, &scaled));
        reach.push(radius * wanted);
    }
    pairwise_sample(alg, &points, 0, radius, opts, Some(&reach))
}

/// Pointed sample with pairwise CC upper bounds between given points; the
/// pair `(i, j)` uses an optimizer seed derived from `opts.seed`.
pub fn sample_from_points(
    alg: &GradedAlgebra,
    points: &[DVector<f64>],
    base: usize,
    scale: f64,
    opts: &CcOptions,
) -> Result<PointedSample> {
    pairwise_sample(alg, points, base, scale, opts, None)
}

/// `reach[i]` is the length of a known path from the base to point `i`; a
/// pair is then also bounded by the path through the base.
fn pairwise_sample(
    alg: &GradedAlgebra,
    points: &[DVector<f64>],
    base: usize,
    scale: f64,
    opts: &CcOptions,
    reach: Option<&[f64]>,
) -> Result<PointedSample> {
    let m = points.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let results = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(i, j))| {
            let o = CcOptions {
                seed: rng::derive_seed(opts.seed, idx as u64),
                ..opts.clone()
            };
            cc_distance(alg, &points[i], &points[j], &o)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = vec![vec![0.0; m]; m];
    let mut residual: f64 = 0.0;
    for (&(i, j), r) in pairs.iter().zip(&results) {
        let via_base = reach.map_or(f64::INFINITY, |l| l[i] + l[j]);
        d[i][j] = r.upper.min(via_base);
        d[j][i] = d[i][j];
        residual = residual.max(r.endpoint_residual);
    }
    let mut sample = PointedSample::new(d, base)?;
    sample.scale = scale;
    sample.noise = residual.max(sample.triangle_defect());
    sample.points = points.iter().map(|p| p.iter().copied().collect()).collect();
    Ok(sample)
}
