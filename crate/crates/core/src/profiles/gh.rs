//! Pointed Gromov distance between finite samples.
//!
//! Two facts make the finite problem tractable. A coupling of `X` and `Y`
//! with `d(a, b) ≤ r` for every pair of a relation `R` exists exactly when
//! `|d_X(a, a') − d_Y(b, b')| ≤ 2r` for all pairs of `R` (the coupling
//! `inf_R d_X(a, a') + r + d_Y(b', b)` realizes it). And the admissibility
//! conditions only ask each point of the two balls `B(base, 1/ε)` to be
//! related to something, with the base points related to each other.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PointedSample;
use crate::error::{HensError, Result};
use crate::rng;

/// Largest total number of points accepted by [`GhMode::Exact`].
pub const EXACT_MAX_POINTS: usize = 10;
/// Random greedy orders tried per direction in [`GhMode::Bound`].
pub const BOUND_RESTARTS: usize = 8;
const BOUND_SEED: u64 = 0x6768_626f_756e_64;
const SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhMode {
    Exact,
    Bound,
}

impl std::str::FromStr for GhMode {
    type Err = HensError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(GhMode::Exact),
            "bound" => Ok(GhMode::Bound),
            _ => Err(HensError::Parse(format!("unknown gh mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GhResult {
    pub lower: f64,
    pub upper: f64,
    pub mode: GhMode,
}

pub fn gh_distance(a: &PointedSample, b: &PointedSample, mode: GhMode) -> Result<GhResult> {
    a.check()?;
    b.check()?;
    a.check_diameter()?;
    b.check_diameter()?;
    match mode {
        GhMode::Exact => {
            let total = a.len() + b.len();
            if total > EXACT_MAX_POINTS {
                return Err(HensError::ExactModeTooLarge {
                    max: EXACT_MAX_POINTS,
                    got: total,
                });
            }
            let v = exact_value(a, b);
            Ok(GhResult {
                lower: v,
                upper: v,
                mode,
            })
        }
        GhMode::Bound => {
            let upper = correspondence_bound(a, b).min(correspondence_bound(b, a));
            let lower = anchored_lower_bound(a, b).min(upper);
            Ok(GhResult { lower, upper, mode })
        }
    }
}

/// Pair compatibility at scale `eps`: both pairs can sit within `eps` in one
/// coupling.
fn compatible(x: &PointedSample, y: &PointedSample, p: (usize, usize), q: (usize, usize), eps: f64) -> bool {
    (x.d(p.0, q.0) - y.d(p.1, q.1)).abs() <= 2.0 * eps + SLACK
}

/// Whether some admissible coupling exists at `eps`.
fn feasible(x: &PointedSample, y: &PointedSample, eps: f64) -> bool {
    let required = |s: &PointedSample| -> Vec<usize> {
        (0..s.len())
            .filter(|&i| eps == 0.0 || s.d(s.base, i) < 1.0 / eps)
            .collect()
    };
    let search = Search {
        x,
        y,
        eps,
        need_x: required(x),
        need_y: required(y),
    };
    let mut chosen = vec![(x.base, y.base)];
    search.extend(&mut chosen)
}

struct Search<'a> {
    x: &'a PointedSample,
    y: &'a PointedSample,
    eps: f64,
    need_x: Vec<usize>,
    need_y: Vec<usize>,
}

impl Search<'_> {
    fn options(&self, chosen: &[(usize, usize)], pair_of: impl Fn(usize) -> (usize, usize), range: usize) -> Vec<(usize, usize)> {
        (0..range)
            .map(pair_of)
            .filter(|&p| chosen.iter().all(|&q| compatible(self.x, self.y, p, q, self.eps)))
            .collect()
    }

    /// Backtracking over relations: cover the most constrained uncovered
    /// point first.
    fn extend(&self, chosen: &mut Vec<(usize, usize)>) -> bool {
        let mut best: Option<Vec<(usize, usize)>> = None;
        for &a in &self.need_x {
            if chosen.iter().any(|p| p.0 == a) {
                continue;
            }
            let opts = self.options(chosen, |b| (a, b), self.y.len());
            if best.as_ref().map_or(true, |o| opts.len() < o.len()) {
                best = Some(opts);
            }
        }
        for &b in &self.need_y {
            if chosen.iter().any(|p| p.1 == b) {
                continue;
            }
            let opts = self.options(chosen, |a| (a, b), self.x.len());
            if best.as_ref().map_or(true, |o| opts.len() < o.len()) {
                best = Some(opts);
            }
        }
        let Some(opts) = best else {
            return true;
        };
        for p in opts {
            chosen.push(p);
            if self.extend(chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// The infimum is attained at a distortion value `|d_X − d_Y| / 2` or at a
/// ball threshold `1/d(base, ·)`; feasibility is monotone in `eps`, so a
/// binary search over the sorted candidates finds it.
fn exact_value(x: &PointedSample, y: &PointedSample) -> f64 {
    let mut cands = vec![0.0];
    for i in 0..x.len() {
        for j in 0..x.len() {
            for k in 0..y.len() {
                for l in 0..y.len() {
                    cands.push((x.d(i, j) - y.d(k, l)).abs() / 2.0);
                }
            }
        }
    }
    for s in [x, y] {
        cands.extend((0..s.len()).map(|i| s.d(s.base, i)).filter(|&d| d > 0.0).map(|d| 1.0 / d));
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    // Only the base points are required beyond the last threshold, so the
    // largest candidate is always feasible.
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(x, y, cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

/// A correspondence stored as `f: X → Y` and `g: Y → X`.
#[derive(Clone)]
struct Correspondence {
    f: Vec<usize>,
    g: Vec<usize>,
}

impl Correspondence {
    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.f
            .iter()
            .enumerate()
            .map(|(a, &b)| (a, b))
            .chain(self.g.iter().enumerate().map(|(b, &a)| (a, b)))
    }
}

/// Distortion `max |d_X − d_Y|` of a correspondence, with the sum of the
/// mismatches as a tie-breaker that lets local search move off plateaus.
fn distortion(x: &PointedSample, y: &PointedSample, c: &Correspondence) -> (f64, f64) {
    let pairs: Vec<(usize, usize)> = c.pairs().collect();
    let mut worst: f64 = 0.0;
    let mut total = 0.0;
    for (i, p) in pairs.iter().enumerate() {
        for q in &pairs[i + 1..] {
            let m = (x.d(p.0, q.0) - y.d(p.1, q.1)).abs();
            worst = worst.max(m);
            total += m;
        }
    }
    (worst, total)
}

/// Partner of a new point minimizing the worst mismatch against the pairs
/// already placed.
fn best_partner(
    x: &PointedSample,
    y: &PointedSample,
    placed: &[(usize, usize)],
    a: usize,
) -> usize {
    (0..y.len())
        .map(|b| {
            let cost = placed
                .iter()
                .map(|&(a2, b2)| (x.d(a, a2) - y.d(b, b2)).abs())
                .fold(0.0, f64::max);
            (cost, b)
        })
        .min_by(|l, r| l.0.total_cmp(&r.0).then(l.1.cmp(&r.1)))
        .map(|(_, b)| b)
        .expect("nonempty sample")
}

fn greedy(x: &PointedSample, y: &PointedSample, order_x: &[usize], order_y: &[usize]) -> Correspondence {
    let mut placed = vec![(x.base, y.base)];
    let mut f = vec![usize::MAX; x.len()];
    let mut g = vec![usize::MAX; y.len()];
    f[x.base] = y.base;
    g[y.base] = x.base;
    for &a in order_x {
        if f[a] == usize::MAX {
            let b = best_partner(x, y, &placed, a);
            f[a] = b;
            placed.push((a, b));
        }
    }
    for &b in order_y {
        if g[b] == usize::MAX {
            let a = best_partner(y, x, &placed.iter().map(|&(a, b)| (b, a)).collect::<Vec<_>>(), b);
            g[b] = a;
            placed.push((a, b));
        }
    }
    Correspondence { f, g }
}

/// First-improvement reassignment of single partners, keeping the base pair.
fn local_search(x: &PointedSample, y: &PointedSample, mut c: Correspondence) -> (f64, f64) {
    let mut best = distortion(x, y, &c);
    loop {
        let mut improved = false;
        for a in (0..x.len()).filter(|&a| a != x.base) {
            for b in 0..y.len() {
                if c.f[a] == b {
                    continue;
                }
                let old = std::mem::replace(&mut c.f[a], b);
                let trial = distortion(x, y, &c);
                if trial < best {
                    best = trial;
                    improved = true;
                } else {
                    c.f[a] = old;
                }
            }
        }
        for b in (0..y.len()).filter(|&b| b != y.base) {
            for a in 0..x.len() {
                if c.g[b] == a {
                    continue;
                }
                let old = std::mem::replace(&mut c.g[b], a);
                let trial = distortion(x, y, &c);
                if trial < best {
                    best = trial;
                    improved = true;
                } else {
                    c.g[b] = old;
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Half the smallest distortion found over the index matching (when the
/// sizes and base indices agree), the greedy fill by distance to the base,
/// and seeded random greedy orders, each followed by local search.
fn correspondence_bound(x: &PointedSample, y: &PointedSample) -> f64 {
    let by_base = |s: &PointedSample| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.sort_by(|&i, &j| s.d(s.base, i).total_cmp(&s.d(s.base, j)).then(i.cmp(&j)));
        idx
    };
    let mut starts = vec![greedy(x, y, &by_base(x), &by_base(y))];
    if x.len() == y.len() && x.base == y.base {
        let id: Vec<usize> = (0..x.len()).collect();
        starts.push(Correspondence { f: id.clone(), g: id });
    }
    let mut random: Vec<Correspondence> = (0..BOUND_RESTARTS as u64)
        .map(|r| {
            let mut rng = rng::seeded(rng::derive_seed(BOUND_SEED, r));
            let mut ox: Vec<usize> = (0..x.len()).collect();
            let mut oy: Vec<usize> = (0..y.len()).collect();
            ox.shuffle(&mut rng);
            oy.shuffle(&mut rng);
            greedy(x, y, &ox, &oy)
        })
        .collect();
    starts.append(&mut random);
    starts
        .into_par_iter()
        .map(|c| local_search(x, y, c).0)
        .reduce(|| f64::INFINITY, f64::min)
        / 2.0
}

/// In any admissible coupling at `eps < 1/2` every point is related to a
/// point within `2 eps` of the same distance to its base, so half the
/// largest mismatch of distance-to-base profiles is a lower bound, capped
/// at `1/2` where that argument stops.
fn anchored_lower_bound(x: &PointedSample, y: &PointedSample) -> f64 {
    let one_sided = |s: &PointedSample, t: &PointedSample| -> f64 {
        (0..s.len())
            .map(|a| {
                (0..t.len())
                    .map(|b| (s.d(s.base, a) - t.d(t.base, b)).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    (one_sided(x, y).max(one_sided(y, x)) / 2.0).min(0.5)
}
