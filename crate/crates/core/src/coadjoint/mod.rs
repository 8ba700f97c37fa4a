//! The coadjoint layer: the polynomial `W_ε`, the bunch, the symmetry group
//! `G(σ)` and the coadjoint relation between them.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{GradeBlock, GradeLabel, GradedAlgebra};
use crate::error::{HensError, Result};
use crate::frame::{ambient_metric, build_normal_frame};
use crate::linalg;

mod prequant;

pub use prequant::{moment, prequant_apply, prequant_flow_point, PolyFunction, PrequantValue, DEFAULT_DEGREE_BOUND};

/// Default tolerance for symmetry-group membership.
pub const MEMBER_TOL: f64 = 1e-9;

/// The Euclidean metric `ḡ` on the whole algebra, in the ambient basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtendedMetric {
    #[serde(serialize_with = "crate::linalg::serialize_matrix")]
    pub matrix: DMatrix<f64>,
    /// False when `V1 + … + Vm` is not generated by `D` and the higher grades
    /// fell back to the identity, orthogonal to the rest.
    pub from_frame: bool,
}

/// `ḡ`: minus half the trace form of `d0_rep` on `D0`, the given metric on
/// `D`, and on `V2 … Vm` the product-rule extension along the normal frame
/// of the nilpotentized bracket. Different grades are orthogonal.
pub fn extended_metric(alg: &GradedAlgebra) -> Result<ExtendedMetric> {
    let n = alg.dim();
    let d0 = alg.d0_dim();
    let p = alg.p();
    let mut out = DMatrix::zeros(n, n);

    if d0 > 0 {
        let rep = alg.d0_rep().ok_or(HensError::MissingD0Rep)?;
        let k = DMatrix::from_fn(d0, d0, |a, b| -0.5 * (&rep[a] * &rep[b]).trace());
        linalg::cholesky_upper(&k)?;
        out.view_mut((0, 0), (d0, d0)).copy_from(&k);
    }

    let g = alg.metric_d();
    let upper = n - d0;
    let (block, from_frame) = match v_part_metric(alg, &g) {
        Ok(m) => (m, true),
        Err(HensError::NotBracketGenerating { .. }) | Err(HensError::DependentGenerators) => {
            let mut m = DMatrix::identity(upper, upper);
            m.view_mut((0, 0), (p, p)).copy_from(&g);
            (m, false)
        }
        Err(e) => return Err(e),
    };
    out.view_mut((d0, d0), (upper, upper)).copy_from(&block);
    Ok(ExtendedMetric { matrix: out, from_frame })
}

fn v_part_metric(alg: &GradedAlgebra, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d0 = alg.d0_dim();
    let p = alg.p();
    let nil = alg.nilpotentize()?;
    let blocks: Vec<GradeBlock> = alg
        .blocks()
        .iter()
        .copied()
        .filter(|b| b.label != GradeLabel::D0)
        .collect();
    let entries: Vec<(usize, usize, usize, f64)> = nil
        .structure_entries()
        .into_iter()
        .filter(|&(i, j, k, _)| i >= d0 && j >= d0 && k >= d0)
        .map(|(i, j, k, c)| (i - d0, j - d0, k - d0, c))
        .collect();
    let v = GradedAlgebra::new("v-part", blocks, &entries, g.clone(), None)?;
    let gens: Vec<DVector<f64>> = (0..p).map(|i| v.basis_vector(i)).collect();
    let tree = build_normal_frame(&v, &gens)?;
    let m = ambient_metric(&tree, g)?;
    // The frame may mix grades only through round-off.
    let grades = v.grade_indices();
    Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        if grades[r] == grades[c] {
            0.5 * (m[(r, c)] + m[(c, r)])
        } else {
            0.0
        }
    }))
}

/// A polynomial in `ε` with `n × n` matrix coefficients, lowest power first.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsMatrixPolynomial {
    coeffs: Vec<DMatrix<f64>>,
}

impl EpsMatrixPolynomial {
    /// Trailing zero coefficients are dropped; the constant term is always
    /// kept.
    pub fn new(mut coeffs: Vec<DMatrix<f64>>) -> Self {
        assert!(!coeffs.is_empty(), "a polynomial needs a constant term");
        while coeffs.len() > 1 && coeffs.last().is_some_and(|m| m.amax() == 0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            coeffs: vec![DMatrix::zeros(n, n)],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// Coefficient of `ε^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> DMatrix<f64> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.dim(), self.dim()))
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn eval(&self, eps: f64) -> DMatrix<f64> {
        self.coeffs
            .iter()
            .rev()
            .fold(DMatrix::zeros(self.dim(), self.dim()), |acc, c| acc * eps + c)
    }
}

impl Serialize for EpsMatrixPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Vec<f64>>> = self.coeffs.iter().map(linalg::to_rows).collect();
        rows.serialize(s)
    }
}

/// Structure constants split by their power of `ε` in the deformed bracket:
/// `tables[p][(i·n + j)·n + k]`.
fn eps_tables(alg: &GradedAlgebra) -> Result<Vec<Vec<f64>>> {
    let n = alg.dim();
    let deg = alg.degrees();
    let mut tables: Vec<Vec<f64>> = Vec::new();
    for (i, j, k, c) in alg.structure_entries() {
        let power = deg[i] as i32 + deg[j] as i32 - deg[k] as i32;
        if power < 0 {
            return Err(HensError::LimitDiverges { i, j, k, value: c });
        }
        let power = power as usize;
        if tables.len() <= power {
            tables.resize(power + 1, vec![0.0; n * n * n]);
        }
        tables[power][(i * n + j) * n + k] = c;
        tables[power][(j * n + i) * n + k] = -c;
    }
    if tables.is_empty() {
        tables.push(vec![0.0; n * n * n]);
    }
    Ok(tables)
}

/// `W` for one table: `ḡ(u, [x, y]) = ḡ(W(x) u, y)`, i.e.
/// `W(x) = ḡ⁻¹ ad_xᵀ ḡ`.
fn w_from_table(table: &[f64], n: usize, gbar: &DMatrix<f64>, gbar_inv: &DMatrix<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let mut ad = DMatrix::zeros(n, n);
    for i in 0..n {
        if x[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            for k in 0..n {
                ad[(k, j)] += x[i] * table[(i * n + j) * n + k];
            }
        }
    }
    gbar_inv * ad.transpose() * gbar
}

fn check_vec(alg: &GradedAlgebra, x: &DVector<f64>) -> Result<()> {
    if x.len() != alg.dim() {
        return Err(HensError::DimensionMismatch {
            expected: alg.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// `W_ε(x)` as a polynomial in `ε`, paired through `ḡ`.
pub fn w_polynomial(alg: &GradedAlgebra, x: &DVector<f64>) -> Result<EpsMatrixPolynomial> {
    check_vec(alg, x)?;
    let gbar = extended_metric(alg)?.matrix;
    w_with_metric(alg, x, &gbar)
}

fn w_with_metric(alg: &GradedAlgebra, x: &DVector<f64>, gbar: &DMatrix<f64>) -> Result<EpsMatrixPolynomial> {
    let n = alg.dim();
    let gbar_inv = linalg::inverse(gbar)?;
    let coeffs = eps_tables(alg)?
        .iter()
        .map(|t| w_from_table(t, n, gbar, &gbar_inv, x))
        .collect();
    Ok(EpsMatrixPolynomial::new(coeffs))
}

/// Residuals of the four membership conditions for `G(σ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryCandidate {
    #[serde(serialize_with = "crate::linalg::serialize_matrix")]
    pub f: DMatrix<f64>,
    /// (a) `F` preserves every `V0 + … + Vk`.
    pub filtration: f64,
    /// (b) `F` fixes `V0` pointwise.
    pub fixes_d0: f64,
    /// (c) `F Q(u0) = Q(u0) F` on `V1`.
    pub commutes: f64,
    /// (d) `F` restricted to `V1` is a `g`-isometry.
    pub isometry: f64,
    pub tol: f64,
    pub member: bool,
}

impl SymmetryCandidate {
    pub fn residuals(&self) -> [f64; 4] {
        [self.filtration, self.fixes_d0, self.commutes, self.isometry]
    }
}

fn check_square(alg: &GradedAlgebra, f: &DMatrix<f64>) -> Result<()> {
    let n = alg.dim();
    if f.nrows() != n || f.ncols() != n {
        return Err(HensError::DimensionMismatch {
            expected: n,
            got: if f.nrows() != n { f.nrows() } else { f.ncols() },
        });
    }
    Ok(())
}

pub fn in_symmetry_group(alg: &GradedAlgebra, f: &DMatrix<f64>) -> Result<SymmetryCandidate> {
    in_symmetry_group_tol(alg, f, MEMBER_TOL)
}

pub fn in_symmetry_group_tol(alg: &GradedAlgebra, f: &DMatrix<f64>, tol: f64) -> Result<SymmetryCandidate> {
    check_square(alg, f)?;
    let n = alg.dim();
    linalg::inverse(f)?;
    let grades = alg.grade_indices();
    let d0 = alg.d0_dim();
    let p = alg.p();

    let mut filtration: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            if grades[r] > grades[c] {
                filtration = filtration.max(f[(r, c)].abs());
            }
        }
    }

    let mut fixes_d0: f64 = 0.0;
    for c in 0..d0 {
        for r in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            fixes_d0 = fixes_d0.max((f[(r, c)] - target).abs());
        }
    }

    // Compare F[u0, u1] with [u0, F u1] for u1 in D, with the D0 action
    // written through its representation on D.
    let mut commutes: f64 = 0.0;
    if d0 > 0 {
        let rep = alg.d0_rep().ok_or(HensError::MissingD0Rep)?;
        let f_cols = f.columns(d0, p);
        for q in rep {
            let mut lifted = DMatrix::zeros(n, n);
            lifted.view_mut((d0, d0), (p, p)).copy_from(q);
            let lhs = f * lifted.columns(d0, p);
            let rhs = &lifted * f_cols;
            commutes = commutes.max((lhs - rhs).amax());
        }
    }

    let g = alg.metric_d();
    let fd = f.view((d0, d0), (p, p));
    let isometry = (fd.transpose() * &g * fd - &g).amax();

    let member = [filtration, fixes_d0, commutes, isometry].iter().all(|&r| r <= tol);
    Ok(SymmetryCandidate {
        f: f.clone(),
        filtration,
        fixes_d0,
        commutes,
        isometry,
        tol,
        member,
    })
}

/// Bunch element `[[W_ε(u), 0], [u, 0]]` coefficient by coefficient, written
/// in a `ḡ`-orthonormal basis so that transposes are `ḡ`-adjoints.
pub fn bunch_element(alg: &GradedAlgebra, u: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    check_vec(alg, u)?;
    let gbar = extended_metric(alg)?.matrix;
    let r = linalg::cholesky_upper(&gbar)?;
    let r_inv = linalg::inverse(&r)?;
    let w = w_with_metric(alg, u, &gbar)?;
    Ok(bunch_from(&w, &(&r * u), &r, &r_inv))
}

fn bunch_from(w: &EpsMatrixPolynomial, u_orth: &DVector<f64>, r: &DMatrix<f64>, r_inv: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = w.dim();
    w.coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut b = DMatrix::zeros(n + 1, n + 1);
            b.view_mut((0, 0), (n, n)).copy_from(&(r * c * r_inv));
            if k == 0 {
                b.view_mut((n, 0), (1, n)).copy_from(&u_orth.transpose());
            }
            b
        })
        .collect()
}

/// Largest entry of `Ad*_F̃ B(σ)(u) − B(Fσ)(F u)` over the basis vectors `u`
/// and every power of `ε`.
///
/// Here `F̃ = [[Fᵀ, 0], [0, 1]]` acts by `ξ ↦ F̃⁻¹ ξ F̃`, the coadjoint action
/// of `F̃ᵀ` for the pairing `tr(A Bᵀ)`. The transported bunch is computed
/// independently from the transported ε-tables `F[F⁻¹·, F⁻¹·]`.
pub fn coadjoint_check(alg: &GradedAlgebra, f: &DMatrix<f64>) -> Result<f64> {
    coadjoint_check_tol(alg, f, MEMBER_TOL)
}

pub fn coadjoint_check_tol(alg: &GradedAlgebra, f: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let cand = in_symmetry_group_tol(alg, f, tol)?;
    if !cand.member {
        return Err(HensError::NotMember(format!(
            "residuals (a) {:e}, (b) {:e}, (c) {:e}, (d) {:e}",
            cand.filtration, cand.fixes_d0, cand.commutes, cand.isometry
        )));
    }
    let n = alg.dim();
    let gbar = extended_metric(alg)?.matrix;
    let gbar_inv = linalg::inverse(&gbar)?;
    let r = linalg::cholesky_upper(&gbar)?;
    let r_inv = linalg::inverse(&r)?;
    let f_inv = linalg::inverse(f)?;

    let tables = eps_tables(alg)?;
    let moved: Vec<Vec<f64>> = tables.iter().map(|t| conjugate_table(t, n, f, &f_inv)).collect();

    let f_orth = &r * f * &r_inv;
    let mut tilde = DMatrix::identity(n + 1, n + 1);
    tilde.view_mut((0, 0), (n, n)).copy_from(&f_orth.transpose());
    let tilde_inv = linalg::inverse(&tilde)?;

    let mut worst: f64 = 0.0;
    for i in 0..n {
        let u = alg.basis_vector(i);
        let fu = f * &u;
        let w = EpsMatrixPolynomial::new(tables.iter().map(|t| w_from_table(t, n, &gbar, &gbar_inv, &u)).collect());
        let w_moved = EpsMatrixPolynomial::new(moved.iter().map(|t| w_from_table(t, n, &gbar, &gbar_inv, &fu)).collect());
        let lhs = bunch_from(&w, &(&r * &u), &r, &r_inv);
        let rhs = bunch_from(&w_moved, &(&r * &fu), &r, &r_inv);
        for k in 0..lhs.len().max(rhs.len()) {
            let zero = DMatrix::zeros(n + 1, n + 1);
            let a = lhs.get(k).map_or(zero.clone(), |b| &tilde_inv * b * &tilde);
            let b = rhs.get(k).unwrap_or(&zero);
            worst = worst.max((a - b).amax());
        }
    }
    Ok(worst)
}

fn conjugate_table(table: &[f64], n: usize, f: &DMatrix<f64>, f_inv: &DMatrix<f64>) -> Vec<f64> {
    // [e_a, e_b]' = F [F⁻¹e_a, F⁻¹e_b].
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            let mut v = DVector::zeros(n);
            for i in 0..n {
                let fi = f_inv[(i, a)];
                if fi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let fj = f_inv[(j, b)];
                    if fj == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        v[k] += fi * fj * table[(i * n + j) * n + k];
                    }
                }
            }
            let w = f * v;
            for k in 0..n {
                out[(a * n + b) * n + k] = w[k];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
