//! Group arithmetic in exponential coordinates of the first kind, the conical
//! product, horizontal-linear maps and Pansu-type finite differences.

mod bch;

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::algebra::GradedAlgebra;
use crate::error::{HensError, Result};
use crate::rng;

pub use bch::{bch_series, bch_series_generated, MAX_BCH_ORDER};

/// A point of the group; the exponential is the identity, so group and
/// algebra share coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement(pub DVector<f64>);

impl GroupElement {
    pub fn new(coords: DVector<f64>) -> Self {
        Self(coords)
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        Self(DVector::from_column_slice(xs))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn inverse(&self) -> Self {
        Self(-&self.0)
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl Deref for GroupElement {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<DVector<f64>> for GroupElement {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

/// Product together with whether it came from a truncated series on a
/// non-nilpotent algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct Product {
    pub value: GroupElement,
    pub approximate: bool,
    pub order: usize,
}

fn nilpotent_order(alg: &GradedAlgebra) -> Result<usize> {
    match alg.nilpotency_class() {
        Some(s) if s <= MAX_BCH_ORDER => Ok(s),
        Some(s) => Err(HensError::BchOrderTooLarge(s)),
        None => Err(HensError::NotNilpotent {
            order: alg.dim() + 1,
        }),
    }
}

/// Exact group product on a nilpotent algebra: the BCH series truncated at
/// the nilpotency class, beyond which every term vanishes.
pub fn bch_product(alg: &GradedAlgebra, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
    let order = nilpotent_order(alg)?;
    bch_series(alg, x, y, order).map(GroupElement)
}

/// BCH series truncated at `order`; flagged approximate unless the algebra is
/// nilpotent of class at most `order`.
pub fn bch_truncated(
    alg: &GradedAlgebra,
    x: &GroupElement,
    y: &GroupElement,
    order: usize,
) -> Result<Product> {
    let value = GroupElement(bch_series(alg, x, y, order)?);
    let exact = alg.nilpotency_class().is_some_and(|s| s <= order);
    Ok(Product {
        value,
        approximate: !exact,
        order,
    })
}

/// Exact product when the algebra is nilpotent, otherwise the series
/// truncated at [`MAX_BCH_ORDER`] (flagged approximate).
pub fn group_product(alg: &GradedAlgebra, x: &GroupElement, y: &GroupElement) -> Result<Product> {
    match nilpotent_order(alg) {
        Ok(order) => Ok(Product {
            value: GroupElement(bch_series(alg, x, y, order)?),
            approximate: false,
            order,
        }),
        Err(HensError::NotNilpotent { .. }) => bch_truncated(alg, x, y, MAX_BCH_ORDER),
        Err(e) => Err(e),
    }
}

fn product_value(alg: &GradedAlgebra, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
    group_product(alg, x, y).map(|p| p.value)
}

fn dilate(alg: &GradedAlgebra, eps: f64, x: &GroupElement) -> Result<GroupElement> {
    alg.dilate(eps, x).map(GroupElement)
}

/// `β(x, y) = lim_{ε→0} δ_ε⁻¹((δ_ε x)(δ_ε y))`, evaluated in closed form as the
/// BCH product of the nilpotentized algebra.
pub fn conical_product(alg: &GradedAlgebra, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
    bch_product(&alg.nilpotentize()?, x, y)
}

/// `δ_ε⁻¹((δ_ε x)(δ_ε y))` with the algebra's own product.
pub fn conical_quotient(
    alg: &GradedAlgebra,
    x: &GroupElement,
    y: &GroupElement,
    eps: f64,
) -> Result<GroupElement> {
    let p = product_value(alg, &dilate(alg, eps, x)?, &dilate(alg, eps, y)?)?;
    dilate(alg, 1.0 / eps, &p)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConicalLimit {
    pub eps: Vec<f64>,
    /// `δ_ε⁻¹((δ_ε x)(δ_ε y))` for each ε.
    pub samples: Vec<Vec<f64>>,
    /// Polynomial (Neville) extrapolation of the samples to ε = 0.
    pub extrapolated: Vec<f64>,
    pub closed_form: Vec<f64>,
    /// Sup-norm distance of each sample to the closed form.
    pub deviations: Vec<f64>,
    /// Ratios of consecutive deviations.
    pub ratios: Vec<f64>,
    pub extrapolation_error: f64,
    /// The extrapolation agrees with the closed form to 1e-6.
    pub converged: bool,
}

pub const CONICAL_AGREEMENT: f64 = 1e-6;

/// Numerical limit of the conical quotient over a ladder of ε values,
/// compared with [`conical_product`].
pub fn conical_limit(
    alg: &GradedAlgebra,
    x: &GroupElement,
    y: &GroupElement,
    eps: &[f64],
) -> Result<ConicalLimit> {
    if eps.len() < 2 {
        return Err(HensError::InvalidParameter(
            "conical limit needs at least two eps values".into(),
        ));
    }
    let closed = conical_product(alg, x, y)?;
    let samples = eps
        .iter()
        .map(|&e| conical_quotient(alg, x, y, e))
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = neville_at_zero(eps, &samples);
    let deviations: Vec<f64> = samples.iter().map(|s| (&s.0 - &closed.0).amax()).collect();
    let ratios = deviations
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let extrapolation_error = (&extrapolated - &closed.0).amax();
    Ok(ConicalLimit {
        eps: eps.to_vec(),
        samples: samples.iter().map(|s| s.iter().copied().collect()).collect(),
        extrapolated: extrapolated.iter().copied().collect(),
        closed_form: closed.iter().copied().collect(),
        deviations,
        ratios,
        extrapolation_error,
        converged: extrapolation_error <= CONICAL_AGREEMENT * (1.0 + closed.amax()),
    })
}

/// Value at 0 of the interpolating polynomial through `(eps_i, v_i)`.
fn neville_at_zero(eps: &[f64], values: &[GroupElement]) -> DVector<f64> {
    let mut p: Vec<DVector<f64>> = values.iter().map(|v| v.0.clone()).collect();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (eps[i], eps[i + level]);
            // P_{i..j}(0) = (0 − x_j) P_{i..j−1} − (0 − x_i) P_{i+1..j}, over x_i − x_j
            p[i] = (&p[i] * (-xj) - &p[i + 1] * (-xi)) / (xi - xj);
        }
    }
    p.swap_remove(0)
}

#[derive(Clone, Debug, Serialize)]
pub struct HorizontalLinearCheck {
    pub is_linear: bool,
    pub dilation_residual: f64,
    pub morphism_residual: f64,
}

/// Dilatation samples and number of random pairs used by
/// [`is_horizontal_linear`].
pub const HL_EPS: [f64; 3] = [0.5, 2.0, 3.7];
pub const HL_PAIRS: usize = 16;

/// Whether `F` commutes with the dilatations and is a group morphism, tested
/// on sampled ε and seeded random pairs.
pub fn is_horizontal_linear(
    alg: &GradedAlgebra,
    f: &DMatrix<f64>,
    tol: f64,
    seed: u64,
) -> Result<HorizontalLinearCheck> {
    let n = alg.dim();
    if f.nrows() != n || f.ncols() != n {
        return Err(HensError::DimensionMismatch {
            expected: n,
            got: f.nrows(),
        });
    }
    let mut dilation_residual: f64 = 0.0;
    for &eps in &HL_EPS {
        let d = alg.dilation_matrix(eps)?;
        let r = (f * &d - &d * f).amax() / (d.amax() * (1.0 + f.amax()));
        dilation_residual = dilation_residual.max(r);
    }
    let mut rng = rng::seeded(seed);
    let mut morphism_residual: f64 = 0.0;
    for _ in 0..HL_PAIRS {
        let x = GroupElement(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)));
        let y = GroupElement(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)));
        let lhs = f * bch_product(alg, &x, &y)?.0;
        let rhs = bch_product(alg, &GroupElement(f * &x.0), &GroupElement(f * &y.0))?;
        morphism_residual = morphism_residual.max((lhs - rhs.0).amax());
    }
    Ok(HorizontalLinearCheck {
        is_linear: dilation_residual <= tol && morphism_residual <= tol,
        dilation_residual,
        morphism_residual,
    })
}

/// `δ_t⁻¹(f(x)⁻¹ f(x δ_t y))`.
pub fn pansu_difference<F>(
    alg: &GradedAlgebra,
    f: F,
    x: &GroupElement,
    t: f64,
    y: &GroupElement,
) -> Result<GroupElement>
where
    F: Fn(&GroupElement) -> Result<GroupElement>,
{
    let fx = f(x)?;
    let moved = product_value(alg, x, &dilate(alg, t, y)?)?;
    let diff = product_value(alg, &fx.inverse(), &f(&moved)?)?;
    dilate(alg, 1.0 / t, &diff)
}

/// Derivative probe for the operation on the doubled group
/// `(x,u)(y,v) = (xy, y⁻¹uyv)`:
/// `δ_ε⁻¹(op(x,u)⁻¹ op((x,u)·(δ_ε y, δ_ε v)))`, which tends to `β(y, v)`.
pub fn op_derivative_probe(
    alg: &GradedAlgebra,
    x: &GroupElement,
    u: &GroupElement,
    y: &GroupElement,
    v: &GroupElement,
    eps: f64,
) -> Result<GroupElement> {
    let mul = |a: &GroupElement, b: &GroupElement| product_value(alg, a, b);
    let (dy, dv) = (dilate(alg, eps, y)?, dilate(alg, eps, v)?);
    // Doubled-group product (x, u)(dy, dv).
    let first = mul(x, &dy)?;
    let second = mul(&mul(&mul(&dy.inverse(), u)?, &dy)?, &dv)?;
    let op_xu = mul(x, u)?;
    let op_prod = mul(&first, &second)?;
    let diff = mul(&op_xu.inverse(), &op_prod)?;
    dilate(alg, 1.0 / eps, &diff)
}

/// The commutator `[L_{(δ_λ x)⁻¹}, δ_λ⁻¹]` applied to `y`, i.e.
/// `(δ_λ x)⁻¹ · δ_λ⁻¹((δ_λ x)(δ_λ y))`, which tends to `β(x, y)`.
pub fn translation_commutator_probe(
    alg: &GradedAlgebra,
    x: &GroupElement,
    y: &GroupElement,
    lambda: f64,
) -> Result<GroupElement> {
    let dx = dilate(alg, lambda, x)?;
    let inner = conical_quotient(alg, x, y, lambda)?;
    product_value(alg, &dx.inverse(), &inner)
}

#[cfg(test)]
mod tests;
