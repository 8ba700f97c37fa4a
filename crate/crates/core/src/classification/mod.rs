//! Parameterized bracket families, their Jacobi constraint systems, and the
//! normal forms of homogeneous surfaces and contact 3-manifolds.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{self, graded_admissible, GradeBlock, GradeLabel, GradedAlgebra, JacobiMode};
use crate::error::{HensError, Result};
use crate::poly::SparsePoly;

/// A bracket whose structure constants are polynomials in named real
/// parameters. Entries are stored for `i < j`; `[e_j, e_i]` is implied.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamBracket {
    pub name: String,
    pub blocks: Vec<GradeBlock>,
    pub params: Vec<String>,
    entries: Vec<(usize, usize, usize, SparsePoly)>,
}

impl ParamBracket {
    pub fn new(name: impl Into<String>, blocks: Vec<GradeBlock>, params: &[&str]) -> Self {
        Self {
            name: name.into(),
            blocks,
            params: params.iter().map(|s| s.to_string()).collect(),
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn nvars(&self) -> usize {
        self.params.len()
    }

    /// The polynomial `x_name`.
    pub fn var(&self, name: &str) -> SparsePoly {
        let idx = self
            .params
            .iter()
            .position(|p| p == name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        SparsePoly::var(self.nvars(), idx)
    }

    pub fn constant(&self, c: f64) -> SparsePoly {
        SparsePoly::constant(self.nvars(), c)
    }

    /// Add `coeff` to the `e_k` component of `[e_i, e_j]`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, coeff: SparsePoly) -> &mut Self {
        assert!(i != j, "diagonal bracket");
        let (a, b, c) = if i < j { (i, j, coeff) } else { (j, i, -&coeff) };
        match self.entries.iter_mut().find(|e| e.0 == a && e.1 == b && e.2 == k) {
            Some(e) => e.3 = &e.3 + &c,
            None => self.entries.push((a, b, k, c)),
        }
        self
    }

    /// `c[i][j][k]` as a polynomial, for any orientation of the pair.
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> SparsePoly {
        let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        self.entries
            .iter()
            .find(|e| e.0 == a && e.1 == b && e.2 == k)
            .map_or_else(|| SparsePoly::zero(self.nvars()), |e| e.3.scale(sign))
    }

    fn grade_indices(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .flat_map(|b| std::iter::repeat(b.label.grade_index()).take(b.dim))
            .collect()
    }

    /// Structure constants at a parameter point, as `(i, j, k, value)`.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<(usize, usize, usize, f64)>> {
        if point.len() != self.nvars() {
            return Err(HensError::DimensionMismatch {
                expected: self.nvars(),
                got: point.len(),
            });
        }
        Ok(self
            .entries
            .iter()
            .map(|(i, j, k, p)| (*i, *j, *k, p.eval(point)))
            .filter(|e| e.3 != 0.0)
            .collect())
    }

    /// The algebra at a parameter point, with the given metric on
    /// `D0 ⊕ D` (or on `D`).
    pub fn instantiate(
        &self,
        point: &[f64],
        metric: DMatrix<f64>,
        d0_rep: Option<Vec<DMatrix<f64>>>,
    ) -> Result<GradedAlgebra> {
        GradedAlgebra::new(self.name.clone(), self.blocks.clone(), &self.eval(point)?, metric, d0_rep)
    }
}

/// One component of one Jacobi triple.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiConstraint {
    pub triple: [usize; 3],
    pub component: usize,
    pub poly: SparsePoly,
}

/// Expand `[[e_i,e_j],e_k] + [[e_k,e_i],e_j] + [[e_j,e_k],e_i]` for every
/// triple `i < j < k` (restricted to graded-admissible grades in graded
/// mode). Identically vanishing components are dropped; the family satisfies
/// Jacobi at a point iff every returned polynomial vanishes there.
pub fn jacobi_constraints(pb: &ParamBracket, mode: JacobiMode) -> Vec<JacobiConstraint> {
    let n = pb.dim();
    let grades = pb.grade_indices();
    let step = pb
        .blocks
        .iter()
        .filter_map(|b| match b.label {
            GradeLabel::V(k) => Some(k as usize),
            GradeLabel::D0 => None,
        })
        .max()
        .unwrap_or(0);
    let table: Vec<SparsePoly> = (0..n * n * n)
        .map(|idx| pb.coeff(idx / (n * n), (idx / n) % n, idx % n))
        .collect();
    let c = |i: usize, j: usize, k: usize| &table[(i * n + j) * n + k];
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if mode == JacobiMode::Graded && !graded_admissible(grades[i], grades[j], grades[k], step) {
                    continue;
                }
                for l in 0..n {
                    let mut p = SparsePoly::zero(pb.nvars());
                    for a in 0..n {
                        for (x, y, z) in [(i, j, k), (k, i, j), (j, k, i)] {
                            let (f, g) = (c(x, y, a), c(a, z, l));
                            if !f.is_zero() && !g.is_zero() {
                                p = &p + &(f * g);
                            }
                        }
                    }
                    if !p.is_zero() {
                        out.push(JacobiConstraint {
                            triple: [i, j, k],
                            component: l,
                            poly: p,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Largest value of the constraint polynomials at a parameter point.
pub fn constraint_residual(constraints: &[JacobiConstraint], point: &[f64]) -> f64 {
    constraints
        .iter()
        .map(|c| c.poly.eval(point).abs())
        .fold(0.0, f64::max)
}

fn blocks(d0: usize, dims: &[usize]) -> Vec<GradeBlock> {
    let mut out = Vec::new();
    if d0 > 0 {
        out.push(GradeBlock {
            label: GradeLabel::D0,
            dim: d0,
        });
    }
    out.extend(dims.iter().enumerate().map(|(k, &dim)| GradeBlock {
        label: GradeLabel::V(k as u32 + 1),
        dim,
    }));
    out
}

/// Three-dimensional surface family before Jacobi:
/// `[X0,X1] = aX2`, `[X0,X2] = −aX1`, `[X1,X2] = bX0 + cX1 + dX2`.
pub fn surface_param_family() -> ParamBracket {
    let mut pb = ParamBracket::new("surface(a,b,c,d)", blocks(1, &[2]), &["a", "b", "c", "d"]);
    let (a, b, c, d) = (pb.var("a"), pb.var("b"), pb.var("c"), pb.var("d"));
    pb.set(0, 1, 2, a.clone())
        .set(0, 2, 1, -&a)
        .set(1, 2, 0, b)
        .set(1, 2, 1, c)
        .set(1, 2, 2, d);
    pb
}

const CONTACT4_GENERAL_PARAMS: [&str; 15] = [
    "a", "b03", "e03", "b12", "c12", "d12", "e12", "b23", "c23", "d23", "e23", "b13", "c13", "d13", "e13",
];

/// Four-dimensional contact family on `D0 ⊕ D ⊕ V2` with every bracket the
/// homogeneous-space axioms allow, before Jacobi.
pub fn contact4_general_family() -> ParamBracket {
    let mut pb = ParamBracket::new("contact4_general", blocks(1, &[2, 1]), &CONTACT4_GENERAL_PARAMS);
    let v = |pb: &ParamBracket, s: &str| pb.var(s);
    let a = v(&pb, "a");
    pb.set(0, 1, 2, a.clone()).set(0, 2, 1, -&a);
    let (b03, e03) = (v(&pb, "b03"), v(&pb, "e03"));
    pb.set(0, 3, 0, b03).set(0, 3, 3, e03);
    for (i, j, tag) in [(1, 2, "12"), (2, 3, "23"), (1, 3, "13")] {
        for (k, letter) in ["b", "c", "d", "e"].iter().enumerate() {
            let p = v(&pb, &format!("{letter}{tag}"));
            pb.set(i, j, k, p);
        }
    }
    pb
}

/// Assignment of the general family's parameters that realizes the solved
/// table with parameters `(a, b12, e12, d)`.
pub fn contact4_solved_point(a: f64, b12: f64, e12: f64, d: f64) -> Vec<f64> {
    CONTACT4_GENERAL_PARAMS
        .iter()
        .map(|&p| match p {
            "a" => a,
            "b12" => b12,
            "e12" => e12,
            "d13" => d,
            "c23" => -d,
            _ => 0.0,
        })
        .collect()
}

/// The solved four-dimensional table: `[X0,X1] = aX2`, `[X0,X2] = −aX1`,
/// `[X0,X3] = 0`, `[X1,X2] = b12 X0 + e12 X3`, `[X1,X3] = dX2`,
/// `[X2,X3] = −dX1`.
pub fn contact4_solved_family() -> ParamBracket {
    let mut pb = ParamBracket::new("contact4", blocks(1, &[2, 1]), &["a", "b12", "e12", "d"]);
    let (a, b12, e12, d) = (pb.var("a"), pb.var("b12"), pb.var("e12"), pb.var("d"));
    pb.set(0, 1, 2, a.clone())
        .set(0, 2, 1, -&a)
        .set(1, 2, 0, b12)
        .set(1, 2, 3, e12)
        .set(1, 3, 2, d.clone())
        .set(2, 3, 1, -&d);
    pb
}

/// The contact normal form at a fixed angle `phi`, polynomial in
/// `(rho, gamma)`.
pub fn contact3_param_family(phi: f64) -> ParamBracket {
    let (s, c) = phi.sin_cos();
    let mut pb = ParamBracket::new(format!("contact3(rho,{phi},gamma)"), blocks(0, &[2, 1]), &["rho", "gamma"]);
    let (rho, gamma) = (pb.var("rho"), pb.var("gamma"));
    pb.set(0, 1, 2, pb.constant(1.0))
        .set(1, 2, 0, rho.scale(c * c))
        .set(1, 2, 1, rho.scale(s * c))
        .set(1, 2, 2, gamma.scale(c))
        .set(2, 0, 0, rho.scale(s * c))
        .set(2, 0, 1, rho.scale(s * s))
        .set(2, 0, 2, gamma.scale(s));
    pb
}

/// A constructed algebra with its curvature label and remarks.
#[derive(Clone, Debug)]
pub struct Classified {
    pub algebra: GradedAlgebra,
    pub curvature: Option<f64>,
    pub notes: Vec<String>,
}

/// Homogeneous surface with isotropy: spheres of radius `1/|ab|`, labelled
/// with curvature `|ab|`.
pub fn surface_family(a: f64, b: f64) -> Classified {
    let mut notes = Vec::new();
    if a == 0.0 {
        notes.push("a = 0: the isotropy acts trivially (degenerate flat case)".into());
    }
    Classified {
        algebra: algebra::builtins::so3_surface(a, b),
        curvature: Some((a * b).abs()),
        notes,
    }
}

/// `[X1,X2] = aX1 + bX2`, labelled with curvature `−√(a² + b²)`.
pub fn hyperbolic_family(a: f64, b: f64) -> Classified {
    Classified {
        algebra: algebra::builtins::hyperbolic_surface(a, b),
        curvature: Some(-(a * a + b * b).sqrt()),
        notes: Vec::new(),
    }
}

pub fn contact3_normal_form(rho: f64, phi: f64, gamma: f64) -> GradedAlgebra {
    algebra::builtins::contact3(rho, phi, gamma)
}

/// Parameters `(λ1, λ2, b12, d, e12)` of the four-dimensional contact family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Contact4Params {
    pub l1: f64,
    pub l2: f64,
    pub b12: f64,
    pub d: f64,
    pub e12: f64,
}

impl Contact4Params {
    /// `(d·e12/λ1, λ2/λ1)`, unchanged by [`contact4_reduce`].
    pub fn invariants(&self) -> (f64, f64) {
        (self.d * self.e12 / self.l1, self.l2 / self.l1)
    }
}

/// Four-dimensional contact algebra at `a = 1`.
pub fn contact4_family(p: &Contact4Params) -> Result<Classified> {
    Ok(Classified {
        algebra: algebra::builtins::contact4(p.l1, p.l2, p.b12, p.d, p.e12, 1.0)?,
        curvature: None,
        notes: vec!["b12 drops out once the metric is factored by the isotropy rotation".into()],
    })
}

/// Rescaling `X1, X2` by `α1` and `X3` by `α2`:
/// `(λ1, λ2, b12, d, e12) ↦ (α1²λ1, α1²λ2, α1²b12, α2 d, α1²e12/α2)`.
pub fn contact4_reduce(p: &Contact4Params, alpha1: f64, alpha2: f64) -> Result<Contact4Params> {
    if alpha1 == 0.0 || alpha2 == 0.0 || !alpha1.is_finite() || !alpha2.is_finite() {
        return Err(HensError::InvalidParameter("rescaling factors must be nonzero".into()));
    }
    if !(p.l1 > 0.0) {
        return Err(HensError::InvalidParameter("lambda1 must be positive".into()));
    }
    let s = alpha1 * alpha1;
    Ok(Contact4Params {
        l1: s * p.l1,
        l2: s * p.l2,
        b12: s * p.b12,
        d: alpha2 * p.d,
        e12: s * p.e12 / alpha2,
    })
}
