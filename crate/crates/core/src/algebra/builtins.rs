//! Named algebras: the Heisenberg algebra, abelian algebras, and the
//! surface and contact families.

use nalgebra::DMatrix;

use super::{GradeBlock, GradeLabel, GradedAlgebra};
use crate::error::{HensError, Result};

fn blocks(d0: usize, dims: &[usize]) -> Vec<GradeBlock> {
    let mut out = Vec::new();
    if d0 > 0 {
        out.push(GradeBlock {
            label: GradeLabel::D0,
            dim: d0,
        });
    }
    for (k, &dim) in dims.iter().enumerate() {
        out.push(GradeBlock {
            label: GradeLabel::V(k as u32 + 1),
            dim,
        });
    }
    out
}

fn rotation_generator(a: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -a, a, 0.0])
}

/// Resolve a built-in name, with arguments in parentheses:
/// `heisenberg1`, `heisenberg_so2`, `abelian(n)`, `so3_surface(a,b)`,
/// `hyperbolic_surface(a,b)`, `contact3(rho,phi,gamma)`,
/// `contact4(l1,l2,b12,d,e12[,a])`.
pub fn builtin(spec: &str) -> Result<GradedAlgebra> {
    let spec = spec.trim();
    let (name, args) = match spec.find('(') {
        Some(pos) => {
            let inner = spec[pos + 1..]
                .strip_suffix(')')
                .ok_or_else(|| HensError::Parse(format!("unbalanced parentheses in {spec:?}")))?;
            let args = inner
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        HensError::InvalidParameter(format!("bad argument {s:?} in {spec:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (&spec[..pos], args)
        }
        None => (spec, Vec::new()),
    };
    let arity = |expected: &[usize]| -> Result<()> {
        if expected.contains(&args.len()) {
            Ok(())
        } else {
            Err(HensError::InvalidParameter(format!(
                "{name} takes {expected:?} arguments, got {}",
                args.len()
            )))
        }
    };
    match name {
        "heisenberg1" => {
            arity(&[0])?;
            Ok(heisenberg1())
        }
        "heisenberg_so2" => {
            arity(&[0])?;
            Ok(heisenberg_so2())
        }
        "abelian" => {
            arity(&[1])?;
            let n = args[0];
            if n < 1.0 || n.fract() != 0.0 {
                return Err(HensError::InvalidParameter(format!("abelian dimension {n}")));
            }
            Ok(abelian(n as usize))
        }
        "so3_surface" | "surface" => {
            arity(&[2])?;
            Ok(so3_surface(args[0], args[1]))
        }
        "hyperbolic_surface" => {
            arity(&[2])?;
            Ok(hyperbolic_surface(args[0], args[1]))
        }
        "contact3" => {
            arity(&[3])?;
            Ok(contact3(args[0], args[1], args[2]))
        }
        "contact4" => {
            arity(&[5, 6])?;
            let a = args.get(5).copied().unwrap_or(1.0);
            contact4(args[0], args[1], args[2], args[3], args[4], a)
        }
        _ => Err(HensError::Parse(format!("unknown built-in algebra {name:?}"))),
    }
}

/// Three-dimensional Heisenberg algebra, `[e0, e1] = e2`.
pub fn heisenberg1() -> GradedAlgebra {
    GradedAlgebra::new(
        "heisenberg1",
        blocks(0, &[2, 1]),
        &[(0, 1, 2, 1.0)],
        DMatrix::identity(2, 2),
        None,
    )
    .expect("built-in algebra is well formed")
}

/// Heisenberg algebra with `D0 = so(2)` rotating the distribution.
pub fn heisenberg_so2() -> GradedAlgebra {
    contact4(1.0, 1.0, 0.0, 0.0, 1.0, 1.0)
        .expect("built-in algebra is well formed")
        .with_name("heisenberg_so2")
}

pub fn abelian(n: usize) -> GradedAlgebra {
    GradedAlgebra::new(
        format!("abelian({n})"),
        blocks(0, &[n]),
        &[],
        DMatrix::identity(n, n),
        None,
    )
    .expect("built-in algebra is well formed")
}

/// `[X0,X1] = aX2`, `[X0,X2] = −aX1`, `[X1,X2] = bX0` with `D0 = span{X0}`.
pub fn so3_surface(a: f64, b: f64) -> GradedAlgebra {
    GradedAlgebra::new(
        format!("so3_surface({a},{b})"),
        blocks(1, &[2]),
        &[(0, 1, 2, a), (0, 2, 1, -a), (1, 2, 0, b)],
        DMatrix::identity(2, 2),
        Some(vec![rotation_generator(a)]),
    )
    .expect("built-in algebra is well formed")
}

/// Two-dimensional `[X1,X2] = aX1 + bX2`.
pub fn hyperbolic_surface(a: f64, b: f64) -> GradedAlgebra {
    GradedAlgebra::new(
        format!("hyperbolic_surface({a},{b})"),
        blocks(0, &[2]),
        &[(0, 1, 0, a), (0, 1, 1, b)],
        DMatrix::identity(2, 2),
        None,
    )
    .expect("built-in algebra is well formed")
}

/// Contact normal form on `span{X1, X2} ⊕ span{X3}` (basis indices 0, 1, 2).
///
/// The metric is the identity on the distribution.
pub fn contact3(rho: f64, phi: f64, gamma: f64) -> GradedAlgebra {
    let (s, c) = phi.sin_cos();
    let structure = [
        (0, 1, 2, 1.0),
        (1, 2, 0, rho * c * c),
        (1, 2, 1, rho * s * c),
        (1, 2, 2, gamma * c),
        (2, 0, 0, rho * s * c),
        (2, 0, 1, rho * s * s),
        (2, 0, 2, gamma * s),
    ];
    GradedAlgebra::new(
        format!("contact3({rho},{phi},{gamma})"),
        blocks(0, &[2, 1]),
        &structure,
        DMatrix::identity(2, 2),
        None,
    )
    .expect("built-in algebra is well formed")
}

/// Four-dimensional homogeneous contact family on `D0 ⊕ D ⊕ V2`:
/// `[X0,X1] = aX2`, `[X0,X2] = −aX1`, `[X0,X3] = 0`,
/// `[X1,X2] = b12 X0 + e12 X3`, `[X1,X3] = dX2`, `[X2,X3] = −dX1`,
/// with metric `diag(l1, l2)` on `D`.
pub fn contact4(l1: f64, l2: f64, b12: f64, d: f64, e12: f64, a: f64) -> Result<GradedAlgebra> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(HensError::InvalidParameter(
            "contact4 metric weights must be positive".into(),
        ));
    }
    GradedAlgebra::new(
        format!("contact4({l1},{l2},{b12},{d},{e12},{a})"),
        blocks(1, &[2, 1]),
        &[
            (0, 1, 2, a),
            (0, 2, 1, -a),
            (1, 2, 0, b12),
            (1, 2, 3, e12),
            (1, 3, 2, d),
            (2, 3, 1, -d),
        ],
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![l1, l2])),
        Some(vec![rotation_generator(a)]),
    )
}
