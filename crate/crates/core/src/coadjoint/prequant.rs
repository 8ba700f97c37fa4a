use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::EpsMatrixPolynomial;
use crate::algebra::GradedAlgebra;
use crate::error::{HensError, Result};
use crate::linalg;
use crate::poly::SparsePoly;

/// Default bound on the total degree of functions handed to `Q(f)`.
pub const DEFAULT_DEGREE_BOUND: u32 = 2;

/// A polynomial on `(W, u)`: variable `a·n + b` is the entry `W[a][b]`,
/// variable `n² + k` is `u[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFunction {
    pub n: usize,
    pub poly: SparsePoly,
}

#[derive(Deserialize)]
struct MonomialEntry {
    exponents: Vec<u32>,
    coefficient: f64,
}

impl PolyFunction {
    pub fn nvars(n: usize) -> usize {
        n * n + n
    }

    pub fn new(n: usize, poly: SparsePoly) -> Result<Self> {
        if poly.nvars() != Self::nvars(n) {
            return Err(HensError::DimensionMismatch {
                expected: Self::nvars(n),
                got: poly.nvars(),
            });
        }
        Ok(Self { n, poly })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self {
            n,
            poly: SparsePoly::constant(Self::nvars(n), c),
        }
    }

    pub fn w_var(n: usize, a: usize, b: usize) -> SparsePoly {
        SparsePoly::var(Self::nvars(n), a * n + b)
    }

    pub fn u_var(n: usize, k: usize) -> SparsePoly {
        SparsePoly::var(Self::nvars(n), n * n + k)
    }

    /// Parse `[{"exponents": [...], "coefficient": c}, ...]` with one exponent
    /// per variable.
    pub fn from_json_str(s: &str, n: usize) -> Result<Self> {
        let entries: Vec<MonomialEntry> = serde_json::from_str(s)?;
        let nv = Self::nvars(n);
        let mut poly = SparsePoly::zero(nv);
        for e in entries {
            if e.exponents.len() != nv {
                return Err(HensError::Parse(format!(
                    "monomial has {} exponents, expected {nv} ({n}x{n} entries of W then {n} of u)",
                    e.exponents.len()
                )));
            }
            poly.add_term(e.exponents, e.coefficient);
        }
        Ok(Self { n, poly })
    }

    pub fn eval(&self, w: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
        self.poly.eval(&self.point(w, u))
    }

    fn point(&self, w: &DMatrix<f64>, u: &DVector<f64>) -> Vec<f64> {
        let n = self.n;
        (0..n * n).map(|v| w[(v / n, v % n)]).chain(u.iter().copied()).collect()
    }
}

/// `Q(f)h` at a point, as `(re, im)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrequantValue {
    pub re: f64,
    pub im: f64,
}

/// Moment pairing `⟨J(W, u), f⟩ = (W, f) = tr(W fᵀ)`.
pub fn moment(w: &DMatrix<f64>, f: &DMatrix<f64>) -> f64 {
    w.component_mul(f).sum()
}

/// The point `(e^{−tf} W e^{tf}, e^{tf} u)` reached by the flow of `f`; its
/// `t`-derivative at zero is `([W, f], f u)`.
pub fn prequant_flow_point(w: &DMatrix<f64>, u: &DVector<f64>, f: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DVector<f64>) {
    let e = linalg::expm(&(f * t));
    let e_inv = linalg::expm(&(f * -t));
    (e_inv * w * &e, e * u)
}

/// `Q(f)h = (i/2π){(∂h/∂W, [W_ε, f]) + (∂h/∂u, f u)} + (W_ε, f) h`, with
/// `W_ε` evaluated at `eps` and `(A, B) = tr(A Bᵀ)`.
pub fn prequant_apply(
    alg: &GradedAlgebra,
    f: &DMatrix<f64>,
    h: &PolyFunction,
    w: &EpsMatrixPolynomial,
    u: &DVector<f64>,
    eps: f64,
    degree_bound: u32,
) -> Result<PrequantValue> {
    let n = alg.dim();
    if f.nrows() != n || f.ncols() != n || h.n != n || w.dim() != n || u.len() != n {
        return Err(HensError::DimensionMismatch {
            expected: n,
            got: [f.nrows(), f.ncols(), h.n, w.dim(), u.len()]
                .into_iter()
                .find(|&d| d != n)
                .unwrap_or(n),
        });
    }
    let degree = h.poly.total_degree();
    if degree > degree_bound {
        return Err(HensError::DegreeBoundExceeded {
            degree,
            bound: degree_bound,
        });
    }
    let wm = w.eval(eps);
    let point = h.point(&wm, u);
    let comm = &wm * f - f * &wm;
    let fu = f * u;
    let mut flow = 0.0;
    for a in 0..n {
        for b in 0..n {
            if comm[(a, b)] != 0.0 {
                flow += h.poly.partial(a * n + b).eval(&point) * comm[(a, b)];
            }
        }
    }
    for k in 0..n {
        if fu[k] != 0.0 {
            flow += h.poly.partial(n * n + k).eval(&point) * fu[k];
        }
    }
    Ok(PrequantValue {
        re: moment(&wm, f) * h.poly.eval(&point),
        im: flow / (2.0 * std::f64::consts::PI),
    })
}
