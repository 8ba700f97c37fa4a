//! Graded algebras with dilatations, stored through their structure constants.
//!
//! The basis is ordered block by block: an optional `D0` block first, then
//! `V1, …, Vm`. The metric lives on the degree-one part `D0 ⊕ V1` and vanishes
//! on `D0`.

pub(crate) mod builtins;
mod io;
mod validate;

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HensError, Result};
use crate::linalg;

pub use builtins::builtin;
pub use io::AlgebraFile;
pub use validate::{AxiomCheck, CheckStatus, Profile, ValidationReport, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GradeLabel {
    D0,
    V(u32),
}

impl GradeLabel {
    /// Dilatation degree; `D0` vectors have degree one.
    pub fn degree(self) -> u32 {
        match self {
            GradeLabel::D0 => 1,
            GradeLabel::V(k) => k,
        }
    }

    /// Position in the gradation `V0 + V1 + … + Vm`, with `D0` as `V0`.
    pub fn grade_index(self) -> usize {
        match self {
            GradeLabel::D0 => 0,
            GradeLabel::V(k) => k as usize,
        }
    }
}

impl fmt::Display for GradeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradeLabel::D0 => write!(f, "D0"),
            GradeLabel::V(k) => write!(f, "V{k}"),
        }
    }
}

impl std::str::FromStr for GradeLabel {
    type Err = HensError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "D0" || s == "V0" {
            return Ok(GradeLabel::D0);
        }
        s.strip_prefix('V')
            .and_then(|k| k.parse::<u32>().ok())
            .filter(|&k| k >= 1)
            .map(GradeLabel::V)
            .ok_or_else(|| HensError::Parse(format!("unknown grade label {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GradeBlock {
    pub label: GradeLabel,
    pub dim: usize,
}

/// Which Jacobi triples to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobiMode {
    Full,
    /// Only triples of grades `(i, j, k)` for which at least two of
    /// `i+j ≤ m`, `j+k ≤ m`, `k+i ≤ m` hold.
    Graded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiResidual {
    pub max: f64,
    pub worst: Option<[usize; 3]>,
    /// Triples whose residual exceeds the tolerance passed to the check.
    pub offending: Vec<[usize; 3]>,
    pub evaluated: usize,
}

#[derive(Clone, Debug)]
pub struct GradedAlgebra {
    name: String,
    blocks: Vec<GradeBlock>,
    degrees: Vec<u32>,
    grade_index: Vec<usize>,
    /// Dense `c[i][j][k]` at `(i * n + j) * n + k`.
    table: Vec<f64>,
    metric: DMatrix<f64>,
    d0_rep: Option<Vec<DMatrix<f64>>>,
    nilpotency: OnceLock<Option<usize>>,
}

impl PartialEq for GradedAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.blocks == other.blocks
            && self.table == other.table
            && self.metric == other.metric
            && self.d0_rep == other.d0_rep
    }
}

impl GradedAlgebra {
    /// Build an algebra from sparse structure constants `(i, j, k, c)` meaning
    /// `[e_i, e_j] ∋ c e_k`. Either orientation of a pair may be given; the
    /// antisymmetric completion is implied and contradictions are rejected.
    ///
    /// `metric` is either `(d0 + p) × (d0 + p)` or `p × p` (padded with zeros
    /// on `D0`).
    pub fn new(
        name: impl Into<String>,
        blocks: Vec<GradeBlock>,
        structure: &[(usize, usize, usize, f64)],
        metric: DMatrix<f64>,
        d0_rep: Option<Vec<DMatrix<f64>>>,
    ) -> Result<Self> {
        check_blocks(&blocks)?;
        let mut degrees = Vec::new();
        let mut grade_index = Vec::new();
        for b in &blocks {
            degrees.extend(std::iter::repeat(b.label.degree()).take(b.dim));
            grade_index.extend(std::iter::repeat(b.label.grade_index()).take(b.dim));
        }
        let n = degrees.len();
        if n == 0 {
            return Err(HensError::InvalidAlgebra("dimension must be positive".into()));
        }

        let mut table = vec![0.0; n * n * n];
        let mut seen = vec![false; n * n * n];
        for &(i, j, k, v) in structure {
            if i >= n || j >= n || k >= n {
                return Err(HensError::InvalidAlgebra(format!(
                    "structure index ({i}, {j}, {k}) out of range for dimension {n}"
                )));
            }
            if !v.is_finite() {
                return Err(HensError::InvalidAlgebra("non-finite structure constant".into()));
            }
            if i == j {
                if v != 0.0 {
                    return Err(HensError::InconsistentStructure {
                        i,
                        j,
                        k,
                        first: v,
                        second: -v,
                    });
                }
                continue;
            }
            let (a, b, val) = if i < j { (i, j, v) } else { (j, i, -v) };
            let idx = (a * n + b) * n + k;
            if seen[idx] && table[idx] != val {
                return Err(HensError::InconsistentStructure {
                    i,
                    j,
                    k,
                    first: if i < j { table[idx] } else { -table[idx] },
                    second: v,
                });
            }
            seen[idx] = true;
            table[idx] = val;
            table[(b * n + a) * n + k] = -val;
        }

        let d0 = blocks
            .iter()
            .filter(|b| b.label == GradeLabel::D0)
            .map(|b| b.dim)
            .sum::<usize>();
        let p = blocks
            .iter()
            .filter(|b| b.label == GradeLabel::V(1))
            .map(|b| b.dim)
            .sum::<usize>();
        let metric = normalize_metric(metric, d0, p)?;
        if let Some(rep) = &d0_rep {
            if rep.len() != d0 {
                return Err(HensError::DimensionMismatch {
                    expected: d0,
                    got: rep.len(),
                });
            }
            if rep.iter().any(|q| q.nrows() != p || q.ncols() != p) {
                return Err(HensError::InvalidAlgebra(format!(
                    "d0_rep matrices must be {p}x{p}"
                )));
            }
        }

        Ok(Self {
            name: name.into(),
            blocks,
            degrees,
            grade_index,
            table,
            metric,
            d0_rep,
            nilpotency: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn blocks(&self) -> &[GradeBlock] {
        &self.blocks
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn grade_indices(&self) -> &[usize] {
        &self.grade_index
    }

    /// Dimension of `D0`.
    pub fn d0_dim(&self) -> usize {
        self.block_dim(GradeLabel::D0)
    }

    /// Dimension `p` of the distribution part `D` (the `V1` block).
    pub fn p(&self) -> usize {
        self.block_dim(GradeLabel::V(1))
    }

    /// Dimension of the degree-one part `D0 ⊕ D`, which carries the metric.
    pub fn v1_dim(&self) -> usize {
        self.d0_dim() + self.p()
    }

    /// Largest grade index `m`.
    pub fn step(&self) -> usize {
        self.grade_index.iter().copied().max().unwrap_or(0)
    }

    pub fn block_dim(&self, label: GradeLabel) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.label == label)
            .map(|b| b.dim)
            .sum()
    }

    /// Basis indices of the vectors with the given grade index.
    pub fn grade_range(&self, grade: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.grade_index[i] == grade)
            .collect()
    }

    /// Metric on `D0 ⊕ D`, zero on `D0`.
    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    /// Metric restricted to `D`.
    pub fn metric_d(&self) -> DMatrix<f64> {
        let d0 = self.d0_dim();
        let p = self.p();
        self.metric.view((d0, d0), (p, p)).into_owned()
    }

    pub fn d0_rep(&self) -> Option<&[DMatrix<f64>]> {
        self.d0_rep.as_deref()
    }

    /// `Σ_i i·dim V_i`, with `D0` counted at degree one.
    pub fn homogeneous_dimension(&self) -> u32 {
        self.degrees.iter().sum()
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.table[(i * n + j) * n + k]
    }

    /// Nonzero constants with `i < j`, in lexicographic order.
    pub fn structure_entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let v = self.c(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(HensError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u)?;
        self.check_len(v)?;
        Ok(self.bracket_raw(u, v))
    }

    /// Sums over `i < j` of `(u_i v_j − u_j v_i) c[i][j][·]`, which makes the
    /// result exactly antisymmetric in floating point.
    pub(crate) fn bracket_raw(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let w = u[i] * v[j] - u[j] * v[i];
                if w == 0.0 {
                    continue;
                }
                let base = (i * n + j) * n;
                for k in 0..n {
                    out[k] += w * self.table[base + k];
                }
            }
        }
        out
    }

    /// Matrix of `ad_x = [x, ·]`.
    pub fn ad_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let base = (i * n + j) * n;
                for k in 0..n {
                    m[(k, j)] += x[i] * self.table[base + k];
                }
            }
        }
        m
    }

    /// Matrix `R_y` with `R_y x = [x, y]`.
    pub fn right_ad_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        -self.ad_matrix(y)
    }

    pub fn dilation_matrix(&self, eps: f64) -> Result<DMatrix<f64>> {
        check_eps(eps)?;
        Ok(DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.degrees.iter().map(|&d| eps.powi(d as i32)),
        )))
    }

    pub fn dilate(&self, eps: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_eps(eps)?;
        self.check_len(x)?;
        Ok(self.dilate_raw(eps, x))
    }

    pub(crate) fn dilate_raw(&self, eps: f64, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(&self.degrees)
                .map(|(v, &d)| v * eps.powi(d as i32)),
        )
    }

    /// `δ_ε^{-1}[δ_ε u, δ_ε v]`.
    pub fn deformed_bracket(
        &self,
        eps: f64,
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        check_eps(eps)?;
        self.check_len(u)?;
        self.check_len(v)?;
        let b = self.bracket_raw(&self.dilate_raw(eps, u), &self.dilate_raw(eps, v));
        Ok(self.dilate_raw(1.0 / eps, &b))
    }

    /// The algebra `σ_ε` whose bracket is the deformed bracket at `eps`.
    /// Structure constants pick up `ε^{deg i + deg j − deg k}`; the metric is
    /// kept and `d0_rep` scales by `ε`, so that `[u0, u]_ε = Q_ε(u0) u` still
    /// holds.
    pub fn deformed(&self, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let n = self.dim();
        let mut out = self.clone();
        out.nilpotency = OnceLock::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let idx = (i * n + j) * n + k;
                    if self.table[idx] != 0.0 {
                        let power = self.degrees[i] as i32 + self.degrees[j] as i32
                            - self.degrees[k] as i32;
                        out.table[idx] = self.table[idx] * eps.powi(power);
                    }
                }
            }
        }
        out.d0_rep = self
            .d0_rep
            .as_ref()
            .map(|rep| rep.iter().map(|q| q * eps).collect());
        Ok(out)
    }

    /// Limit of the deformed bracket as `ε → 0`: constants with
    /// `deg k < deg i + deg j` vanish, balanced ones survive, and a nonzero
    /// constant with `deg k > deg i + deg j` makes the limit diverge.
    ///
    /// The representation `d0_rep` is carried over unchanged.
    pub fn nilpotentize(&self) -> Result<Self> {
        let n = self.dim();
        let mut out = self.clone();
        out.nilpotency = OnceLock::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let idx = (i * n + j) * n + k;
                    let v = self.table[idx];
                    if v == 0.0 {
                        continue;
                    }
                    let balance = self.degrees[k] as i32
                        - self.degrees[i] as i32
                        - self.degrees[j] as i32;
                    match balance {
                        0 => {}
                        b if b < 0 => out.table[idx] = 0.0,
                        _ => {
                            let (a, b) = if i < j { (i, j) } else { (j, i) };
                            return Err(HensError::LimitDiverges {
                                i: a,
                                j: b,
                                k,
                                value: self.c(a, b, k),
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// True when every structure constant is degree-balanced, i.e. the
    /// bracket commutes with the dilatations.
    pub fn is_cone(&self) -> bool {
        self.structure_entries().iter().all(|&(i, j, k, _)| {
            self.degrees[k] == self.degrees[i] + self.degrees[j]
        })
    }

    pub fn jacobi_residual(&self, mode: JacobiMode) -> JacobiResidual {
        self.jacobi_residual_tol(mode, DEFAULT_TOL)
    }

    /// Jacobi residual over basis triples `i < j < k`; the identity is
    /// alternating, so these cover every triple.
    pub fn jacobi_residual_tol(&self, mode: JacobiMode, tol: f64) -> JacobiResidual {
        let n = self.dim();
        let m = self.step();
        let mut res = JacobiResidual {
            max: 0.0,
            worst: None,
            offending: Vec::new(),
            evaluated: 0,
        };
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if mode == JacobiMode::Graded
                        && !graded_admissible(
                            self.grade_index[i],
                            self.grade_index[j],
                            self.grade_index[k],
                            m,
                        )
                    {
                        continue;
                    }
                    res.evaluated += 1;
                    let r = self.jacobi_triple(i, j, k);
                    if r > tol {
                        res.offending.push([i, j, k]);
                    }
                    if r > res.max {
                        res.max = r;
                        res.worst = Some([i, j, k]);
                    }
                }
            }
        }
        res
    }

    /// Max component of `[[e_i,e_j],e_k] + [[e_k,e_i],e_j] + [[e_j,e_k],e_i]`.
    fn jacobi_triple(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|l| {
                let mut s = 0.0;
                for a in 0..n {
                    s += self.c(i, j, a) * self.c(a, k, l)
                        + self.c(k, i, a) * self.c(a, j, l)
                        + self.c(j, k, a) * self.c(a, i, l);
                }
                s.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Nilpotency class (length of the lower central series), or `None` when
    /// the series stalls before reaching zero.
    pub fn nilpotency_class(&self) -> Option<usize> {
        *self.nilpotency.get_or_init(|| self.compute_nilpotency())
    }

    fn compute_nilpotency(&self) -> Option<usize> {
        let n = self.dim();
        let mut current = DMatrix::<f64>::identity(n, n);
        for class in 1..=n + 1 {
            let mut cols = Vec::new();
            for i in 0..n {
                let mut e = DVector::zeros(n);
                e[i] = 1.0;
                let ad = self.ad_matrix(&e);
                for c in 0..current.ncols() {
                    cols.push(&ad * current.column(c));
                }
            }
            let next = linalg::orth_basis(&linalg::columns(n, &cols), linalg::RANK_TOL);
            if next.ncols() == 0 {
                return Some(class);
            }
            if next.ncols() == current.ncols() {
                return None;
            }
            current = next;
        }
        None
    }

    /// Replace the structure table by `F [F⁻¹·, F⁻¹·]`, used by the transport
    /// action; `f_inv` must be the inverse of `f`.
    pub(crate) fn conjugated_table(&self, f: &DMatrix<f64>, f_inv: &DMatrix<f64>) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                let u = f_inv.column(a).into_owned();
                let v = f_inv.column(b).into_owned();
                let w = f * self.bracket_raw(&u, &v);
                for k in 0..n {
                    out[(a * n + b) * n + k] = w[k];
                }
            }
        }
        out
    }

    pub(crate) fn with_parts(
        &self,
        table: Vec<f64>,
        metric: DMatrix<f64>,
        d0_rep: Option<Vec<DMatrix<f64>>>,
    ) -> Self {
        let mut out = self.clone();
        out.table = table;
        out.metric = metric;
        out.d0_rep = d0_rep;
        out.nilpotency = OnceLock::new();
        out
    }

    /// Same bracket and grading with a different metric on `D0 ⊕ D`.
    pub fn with_metric(&self, metric: DMatrix<f64>) -> Result<Self> {
        let metric = normalize_metric(metric, self.d0_dim(), self.p())?;
        Ok(self.with_parts(self.table.clone(), metric, self.d0_rep.clone()))
    }

    pub fn with_d0_rep(&self, d0_rep: Option<Vec<DMatrix<f64>>>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.blocks.clone(),
            &self.structure_entries(),
            self.metric.clone(),
            d0_rep,
        )
    }

    /// Largest difference between the structure constants of two algebras of
    /// the same dimension.
    pub fn structure_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(HensError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .table
            .iter()
            .zip(&other.table)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs())))
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim());
        e[i] = 1.0;
        e
    }
}

pub(crate) fn graded_admissible(i: usize, j: usize, k: usize, m: usize) -> bool {
    let conds = [i + j <= m, j + k <= m, k + i <= m];
    conds.iter().filter(|&&c| c).count() >= 2
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(HensError::NonPositiveEps(eps))
    }
}

fn check_blocks(blocks: &[GradeBlock]) -> Result<()> {
    let mut expected = 1;
    for (pos, b) in blocks.iter().enumerate() {
        match b.label {
            GradeLabel::D0 if pos == 0 => {}
            GradeLabel::D0 => {
                return Err(HensError::InvalidAlgebra(
                    "D0 block must come first".into(),
                ))
            }
            GradeLabel::V(k) => {
                if k != expected {
                    return Err(HensError::InvalidAlgebra(format!(
                        "expected grade V{expected}, found V{k}"
                    )));
                }
                expected += 1;
            }
        }
    }
    if expected == 1 {
        return Err(HensError::InvalidAlgebra("a V1 block is required".into()));
    }
    Ok(())
}

fn normalize_metric(metric: DMatrix<f64>, d0: usize, p: usize) -> Result<DMatrix<f64>> {
    let full = d0 + p;
    if metric.nrows() != metric.ncols() {
        return Err(HensError::InvalidAlgebra("metric must be square".into()));
    }
    let metric = if metric.nrows() == full {
        metric
    } else if metric.nrows() == p {
        let mut m = DMatrix::zeros(full, full);
        m.view_mut((d0, d0), (p, p)).copy_from(&metric);
        m
    } else {
        return Err(HensError::DimensionMismatch {
            expected: full,
            got: metric.nrows(),
        });
    };
    let asym = (&metric - metric.transpose()).abs().max();
    if asym > 1e-12 * (1.0 + metric.abs().max()) {
        return Err(HensError::InvalidAlgebra("metric must be symmetric".into()));
    }
    Ok(metric)
}
