use nalgebra::DMatrix;

use crate::algebra::{GradeLabel, GradedAlgebra};
use crate::error::{HensError, Result};
use crate::linalg;

/// The three actions on structures `σ = ([·,·], δ, g)`.
#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleAction {
    /// `Fσ = (F[F⁻¹·, F⁻¹·], FδF⁻¹, g(F⁻¹·, F⁻¹·))`.
    Transport(DMatrix<f64>),
    /// `δ_ε * σ`: the deformed bracket at `ε`, same metric.
    DilatationStar(f64),
    /// `ε.σ = ([·,·], δ, ε² g)`.
    ScalarDot(f64),
}

pub fn ensemble_action(alg: &GradedAlgebra, action: &EnsembleAction) -> Result<GradedAlgebra> {
    match action {
        EnsembleAction::Transport(f) => transport(alg, f),
        EnsembleAction::DilatationStar(eps) => alg.deformed(*eps),
        EnsembleAction::ScalarDot(eps) => {
            if !eps.is_finite() {
                return Err(HensError::InvalidParameter(format!("scalar {eps}")));
            }
            alg.with_metric(alg.metric() * (eps * eps))
        }
    }
}

/// Transport keeps the basis ordering, so `F` must map every block of the
/// gradation (including `D0`) to itself; `FδF⁻¹ = δ` then holds.
fn transport(alg: &GradedAlgebra, f: &DMatrix<f64>) -> Result<GradedAlgebra> {
    let n = alg.dim();
    if f.nrows() != n || f.ncols() != n {
        return Err(HensError::DimensionMismatch {
            expected: n,
            got: f.nrows(),
        });
    }
    let f_inv = linalg::inverse(f)?;
    let mut offsets = Vec::new();
    let mut start = 0;
    for b in alg.blocks() {
        offsets.push((b.label, start, b.dim));
        start += b.dim;
    }
    let block_of = |i: usize| offsets.iter().position(|&(_, s, d)| i >= s && i < s + d);
    let mut leak: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            if block_of(r) != block_of(c) {
                leak = leak.max(f[(r, c)].abs());
            }
        }
    }
    if leak > 0.0 {
        return Err(HensError::GradingNotPreserved(leak));
    }

    let table = alg.conjugated_table(f, &f_inv);
    let q = alg.v1_dim();
    let f1_inv = f_inv.view((0, 0), (q, q)).into_owned();
    let metric = f1_inv.transpose() * alg.metric() * &f1_inv;
    let d0 = alg.d0_dim();
    let d0_rep = match (alg.d0_rep(), offsets.first()) {
        (Some(rep), Some(&(GradeLabel::D0, _, _))) => {
            // Q'(F e_i) = F_D Q(e_i) F_D⁻¹, re-expanded in the basis e_i.
            let p = alg.p();
            let f0_inv = f_inv.view((0, 0), (d0, d0)).into_owned();
            let fd = f.view((d0, d0), (p, p)).into_owned();
            let fd_inv = f_inv.view((d0, d0), (p, p)).into_owned();
            Some(
                (0..d0)
                    .map(|i| {
                        let mut m = DMatrix::zeros(p, p);
                        for (j, qj) in rep.iter().enumerate() {
                            m += qj * f0_inv[(j, i)];
                        }
                        &fd * m * &fd_inv
                    })
                    .collect(),
            )
        }
        _ => None,
    };
    Ok(alg.with_parts(table, metric, d0_rep))
}
