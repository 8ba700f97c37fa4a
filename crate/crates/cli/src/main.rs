mod canonical;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use hens_core::carnot::{conical_limit, conical_product, bch_truncated, group_product};
use hens_core::cc::{cc_distance, CcOptions, CcStatus};
use hens_core::classification::{self as cls, Contact4Params};
use hens_core::coadjoint;
use hens_core::frame::{ambient_metric, build_normal_frame, extend_metric};
use hens_core::linalg;
use hens_core::profiles::{self, GhMode, PointedSample, ProfileCurve};
use hens_core::{GradedAlgebra, GroupElement, HensError, JacobiMode, Profile};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "hens", version, about = "Sub-Riemannian geometry on graded Lie algebras")]
struct Cli {
    /// Numerical tolerance for validation and membership checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Master seed for every stochastic choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the axioms of a profile and print the report.
    Validate {
        algebra: String,
        #[arg(long, default_value = "homogeneous_ensemble")]
        profile: String,
    },
    /// Group product by the Baker–Campbell–Hausdorff series.
    Bch {
        algebra: String,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        x: Coords,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        y: Coords,
        /// Truncation order; defaults to the nilpotency class.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Conical product, optionally with the numerical limit over scales.
    Conical {
        algebra: String,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        x: Coords,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        y: Coords,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        eps: Option<Coords>,
    },
    /// Normal frame generated by basis vectors and the extended metric.
    Frame {
        algebra: String,
        #[arg(long, value_parser = parse_indices)]
        generators: Indices,
    },
    /// Upper bound on the Carnot–Carathéodory distance between two points.
    Ccdist {
        algebra: String,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        from: Coords,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        to: Coords,
        #[command(flatten)]
        cc: CcArgs,
        /// Include the controls of the best path.
        #[arg(long)]
        controls: bool,
    },
    /// Metric or dilatation profile along a ladder of scales.
    Profile {
        algebra: String,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        point: Option<Coords>,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        eps: Coords,
        #[arg(long, default_value_t = 24)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Metric)]
        kind: KindArg,
        #[command(flatten)]
        cc: CcArgs,
        /// CSV with columns eps, pair_i, pair_j, rescaled_distance.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory receiving one pointed-sample JSON file per scale.
        #[arg(long)]
        sample_dir: Option<PathBuf>,
    },
    /// Pointed Gromov–Hausdorff distance between two sample files.
    Gh {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "bound")]
        mode: String,
    },
    /// Classification families and normal forms.
    Classify {
        #[command(subcommand)]
        family: Family,
    },
    /// Symmetry-group membership of F and the coadjoint relation.
    Coadjoint {
        algebra: String,
        #[arg(long)]
        check_f: PathBuf,
    },
    /// W_ε(x) as a polynomial in ε.
    WPoly {
        algebra: String,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        x: Coords,
    },
    /// Prequantization operator Q(f) applied to a polynomial h at the bunch
    /// point of u.
    Prequant {
        algebra: String,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        u: Coords,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = coadjoint::DEFAULT_DEGREE_BOUND)]
        degree_bound: u32,
    },
}

#[derive(Args)]
struct CcArgs {
    #[arg(long, default_value_t = 32)]
    segments: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
}

impl CcArgs {
    fn options(&self, seed: u64) -> CcOptions {
        CcOptions {
            segments: self.segments,
            restarts: self.restarts,
            seed,
            ..CcOptions::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Metric,
    Dilatation,
}

#[derive(Subcommand)]
enum Family {
    /// Contact normal form contact3(ρ, φ, γ).
    Contact3 {
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        #[arg(long, allow_negative_numbers = true)]
        phi: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Surface with isotropy, curvature |ab|.
    Surface {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Surface [X1,X2] = aX1 + bX2, curvature −√(a²+b²).
    Hyperbolic {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Four-dimensional contact family, parameters λ1,λ2,b12,d,e12.
    Contact4 {
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        params: Coords,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rescaling invariants of the four-dimensional family, with an optional
    /// rescaling α1,α2.
    #[command(name = "contact4-invariants")]
    Contact4Invariants {
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        params: Coords,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        alphas: Option<Coords>,
    },
    /// Jacobi constraint polynomials of a parameterized family.
    Jacobi {
        #[arg(long, value_enum)]
        family: JacobiFamily,
        #[arg(long, default_value_t = false)]
        graded: bool,
        /// Angle for the contact3 family.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum JacobiFamily {
    Surface,
    Contact4General,
    Contact4,
    Contact3,
}

/// Comma-separated reals, e.g. `1,0,-0.5`.
#[derive(Clone, Debug)]
struct Coords(Vec<f64>);

impl std::ops::Deref for Coords {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Comma-separated basis indices.
#[derive(Clone, Debug)]
struct Indices(Vec<usize>);

fn parse_vec(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Coords)
}

fn parse_indices(s: &str) -> Result<Indices, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Indices)
}

/// How a successful run ends: the JSON document and the exit status.
struct Outcome {
    doc: Value,
    code: u8,
}

impl Outcome {
    fn ok(doc: Value) -> Self {
        Self { doc, code: 0 }
    }
}

type CmdResult = Result<Outcome, HensError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            });
        }
    };
    if let Some(n) = std::env::var("HENS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(out) => {
            print!("{}", canonical::to_string(&out.doc));
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &HensError) -> u8 {
    match e {
        HensError::Parse(_)
        | HensError::Io(_)
        | HensError::Json(_)
        | HensError::InvalidParameter(_)
        | HensError::DimensionMismatch { .. }
        | HensError::NonPositiveEps(_)
        | HensError::InvalidSample(_)
        | HensError::ExactModeTooLarge { .. }
        | HensError::DegreeBoundExceeded { .. }
        | HensError::ScaleMismatch(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn vector(alg: &GradedAlgebra, v: &[f64], what: &str) -> Result<DVector<f64>, HensError> {
    if v.len() != alg.dim() {
        return Err(HensError::InvalidParameter(format!(
            "{what} has {} coordinates, the algebra has dimension {}",
            v.len(),
            alg.dim()
        )));
    }
    Ok(DVector::from_column_slice(v))
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>, HensError> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(&fs::read_to_string(path)?)?;
    linalg::from_rows(&rows)
}

fn write_algebra(alg: &GradedAlgebra, path: Option<&Path>) -> Result<(), HensError> {
    if let Some(p) = path {
        fs::write(p, canonical::to_string(&to_value(&alg.to_file())))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CmdResult {
    let (tol, seed) = (cli.tol, cli.seed);
    match &cli.command {
        Command::Validate { algebra, profile } => {
            let alg = GradedAlgebra::load(algebra)?;
            let report = alg.validate_tol(profile.parse::<Profile>()?, tol);
            let mut doc = to_value(&report);
            doc["passed"] = json!(report.passed());
            doc["failures"] = json!(report.failures());
            Ok(Outcome {
                doc,
                code: if report.passed() { 0 } else { EXIT_VALIDATION },
            })
        }
        Command::Bch { algebra, x, y, order } => {
            let alg = GradedAlgebra::load(algebra)?;
            let (x, y) = (GroupElement(vector(&alg, x, "x")?), GroupElement(vector(&alg, y, "y")?));
            let p = match order {
                Some(k) => bch_truncated(&alg, &x, &y, *k)?,
                None => group_product(&alg, &x, &y)?,
            };
            Ok(Outcome::ok(json!({
                "product": p.value.as_slice(),
                "approximate": p.approximate,
                "order": p.order,
            })))
        }
        Command::Conical { algebra, x, y, eps } => {
            let alg = GradedAlgebra::load(algebra)?;
            let (x, y) = (GroupElement(vector(&alg, x, "x")?), GroupElement(vector(&alg, y, "y")?));
            let product = conical_product(&alg, &x, &y)?;
            let mut doc = json!({ "product": product.as_slice() });
            if let Some(eps) = eps {
                let limit = conical_limit(&alg, &x, &y, eps)?;
                doc["limit"] = to_value(&limit);
            }
            Ok(Outcome::ok(doc))
        }
        Command::Frame { algebra, generators } => {
            let alg = GradedAlgebra::load(algebra)?;
            let gens: Vec<DVector<f64>> = generators
                .0
                .iter()
                .map(|&i| {
                    if i < alg.dim() {
                        Ok(alg.basis_vector(i))
                    } else {
                        Err(HensError::InvalidParameter(format!("generator index {i} out of range")))
                    }
                })
                .collect::<Result<_, _>>()?;
            let tree = build_normal_frame(&alg, &gens)?;
            let leaf = leaf_metric(&alg, &generators.0);
            let mut doc = json!({ "tree": to_value(&tree) });
            doc["frame_metric"] = json!(linalg::to_rows(&extend_metric(&tree, &leaf)?));
            doc["ambient_metric"] = json!(linalg::to_rows(&ambient_metric(&tree, &leaf)?));
            Ok(Outcome::ok(doc))
        }
        Command::Ccdist {
            algebra,
            from,
            to,
            cc,
            controls,
        } => {
            let alg = GradedAlgebra::load(algebra)?;
            let r = cc_distance(&alg, &vector(&alg, from, "from")?, &vector(&alg, to, "to")?, &cc.options(seed))?;
            let mut doc = to_value(&r);
            if !controls {
                doc.as_object_mut().expect("object").remove("controls");
            }
            let code = if r.status == CcStatus::EndpointInfeasible { EXIT_NUMERIC } else { 0 };
            Ok(Outcome { doc, code })
        }
        Command::Profile {
            algebra,
            point,
            eps,
            samples,
            kind,
            cc,
            out,
            sample_dir,
        } => {
            let alg = GradedAlgebra::load(algebra)?;
            let opts = cc.options(seed);
            let curve = match kind {
                KindArg::Metric => {
                    let x = match point {
                        Some(p) => vector(&alg, p, "point")?,
                        None => DVector::zeros(alg.dim()),
                    };
                    profiles::metric_profile(&alg, &x, eps, *samples, seed, &opts)?
                }
                KindArg::Dilatation => profiles::dilatation_profile(&alg, eps, *samples, seed, &opts)?,
            };
            if let Some(path) = out {
                fs::write(path, profile_csv(&curve))?;
            }
            if let Some(dir) = sample_dir {
                fs::create_dir_all(dir)?;
                for (k, p) in curve.points.iter().enumerate() {
                    fs::write(dir.join(format!("sample_{k}.json")), canonical::to_string(&to_value(&p.sample)))?;
                }
            }
            Ok(Outcome::ok(to_value(&curve)))
        }
        Command::Gh { a, b, mode } => {
            let a = PointedSample::from_json_str(&fs::read_to_string(a)?)?;
            let b = PointedSample::from_json_str(&fs::read_to_string(b)?)?;
            let r = profiles::gh_distance(&a, &b, mode.parse::<GhMode>()?)?;
            let mut doc = to_value(&r);
            doc["tolerance_budget"] = json!(profiles::tolerance_budget(&a, &b));
            Ok(Outcome::ok(doc))
        }
        Command::Classify { family } => classify(family, tol),
        Command::Coadjoint { algebra, check_f } => {
            let alg = GradedAlgebra::load(algebra)?;
            let f = read_matrix(check_f)?;
            let cand = coadjoint::in_symmetry_group_tol(&alg, &f, tol)?;
            let mut doc = json!({ "candidate": to_value(&cand) });
            if !cand.member {
                doc["residual"] = Value::Null;
                return Ok(Outcome {
                    doc,
                    code: EXIT_VALIDATION,
                });
            }
            doc["residual"] = json!(coadjoint::coadjoint_check_tol(&alg, &f, tol)?);
            Ok(Outcome::ok(doc))
        }
        Command::WPoly { algebra, x } => {
            let alg = GradedAlgebra::load(algebra)?;
            let w = coadjoint::w_polynomial(&alg, &vector(&alg, x, "x")?)?;
            let metric = coadjoint::extended_metric(&alg)?;
            Ok(Outcome::ok(json!({
                "degree": w.degree(),
                "coefficients": to_value(&w),
                "metric": to_value(&metric),
            })))
        }
        Command::Prequant {
            algebra,
            f,
            h,
            u,
            eps,
            degree_bound,
        } => {
            let alg = GradedAlgebra::load(algebra)?;
            let f = read_matrix(f)?;
            let h = coadjoint::PolyFunction::from_json_str(&fs::read_to_string(h)?, alg.dim())?;
            let u = vector(&alg, u, "u")?;
            let w = coadjoint::w_polynomial(&alg, &u)?;
            let q = coadjoint::prequant_apply(&alg, &f, &h, &w, &u, *eps, *degree_bound)?;
            Ok(Outcome::ok(json!({
                "re": q.re,
                "im": q.im,
                "moment": coadjoint::moment(&w.eval(*eps), &f),
            })))
        }
    }
}

/// The algebra's metric on the generators when they all lie in `D`, the
/// identity otherwise.
fn leaf_metric(alg: &GradedAlgebra, generators: &[usize]) -> DMatrix<f64> {
    let d0 = alg.d0_dim();
    let p = alg.p();
    let g = alg.metric_d();
    let k = generators.len();
    if generators.iter().all(|&i| i >= d0 && i < d0 + p) {
        DMatrix::from_fn(k, k, |r, c| g[(generators[r] - d0, generators[c] - d0)])
    } else {
        DMatrix::identity(k, k)
    }
}

fn profile_csv(curve: &ProfileCurve) -> String {
    let mut s = String::from("eps,pair_i,pair_j,rescaled_distance\n");
    for p in &curve.points {
        let n = p.sample.len();
        for i in 0..n {
            for j in i + 1..n {
                s.push_str(&format!(
                    "{},{i},{j},{}\n",
                    canonical::format_f64(p.eps),
                    canonical::format_f64(p.sample.d(i, j))
                ));
            }
        }
    }
    s
}

fn classified_doc(c: &cls::Classified, tol: f64, profile: Profile) -> Value {
    let report = c.algebra.validate_tol(profile, tol);
    json!({
        "algebra": to_value(&c.algebra.to_file()),
        "curvature": c.curvature,
        "notes": c.notes,
        "validation": { "profile": to_value(&profile), "passed": report.passed(), "failures": report.failures() },
    })
}

fn contact4_params(v: &[f64]) -> Result<Contact4Params, HensError> {
    match v {
        &[l1, l2, b12, d, e12] => Ok(Contact4Params { l1, l2, b12, d, e12 }),
        _ => Err(HensError::InvalidParameter(format!(
            "expected 5 parameters l1,l2,b12,d,e12, got {}",
            v.len()
        ))),
    }
}

fn classify(family: &Family, tol: f64) -> CmdResult {
    match family {
        Family::Contact3 { rho, phi, gamma, output } => {
            let c = cls::Classified {
                algebra: cls::contact3_normal_form(*rho, *phi, *gamma),
                curvature: None,
                notes: vec![],
            };
            write_algebra(&c.algebra, output.as_deref())?;
            Ok(Outcome::ok(classified_doc(&c, tol, Profile::HomogeneousEnsemble)))
        }
        Family::Surface { a, b, output } => {
            let c = cls::surface_family(*a, *b);
            write_algebra(&c.algebra, output.as_deref())?;
            Ok(Outcome::ok(classified_doc(&c, tol, Profile::HomogeneousSpace)))
        }
        Family::Hyperbolic { a, b, output } => {
            let c = cls::hyperbolic_family(*a, *b);
            write_algebra(&c.algebra, output.as_deref())?;
            Ok(Outcome::ok(classified_doc(&c, tol, Profile::HomogeneousEnsemble)))
        }
        Family::Contact4 { params, output } => {
            let c = cls::contact4_family(&contact4_params(params)?)?;
            write_algebra(&c.algebra, output.as_deref())?;
            Ok(Outcome::ok(classified_doc(&c, tol, Profile::HomogeneousSpace)))
        }
        Family::Contact4Invariants { params, alphas } => {
            let p = contact4_params(params)?;
            if !(p.l1 > 0.0) {
                return Err(HensError::InvalidParameter("lambda1 must be positive".into()));
            }
            let (i1, i2) = p.invariants();
            let mut doc = json!({ "params": to_value(&p), "invariants": [i1, i2] });
            if let Some(al) = alphas {
                let &[a1, a2] = &al[..] else {
                    return Err(HensError::InvalidParameter("expected two rescaling factors".into()));
                };
                let r = cls::contact4_reduce(&p, a1, a2)?;
                let (r1, r2) = r.invariants();
                doc["reduced"] = to_value(&r);
                doc["reduced_invariants"] = json!([r1, r2]);
            }
            Ok(Outcome::ok(doc))
        }
        Family::Jacobi { family, graded, phi } => {
            let pb = match family {
                JacobiFamily::Surface => cls::surface_param_family(),
                JacobiFamily::Contact4General => cls::contact4_general_family(),
                JacobiFamily::Contact4 => cls::contact4_solved_family(),
                JacobiFamily::Contact3 => cls::contact3_param_family(*phi),
            };
            let mode = if *graded { JacobiMode::Graded } else { JacobiMode::Full };
            let cons: Vec<Value> = cls::jacobi_constraints(&pb, mode)
                .iter()
                .map(|c| c.poly.pruned(tol))
                .zip(cls::jacobi_constraints(&pb, mode))
                .filter(|(p, _)| !p.is_zero())
                .map(|(p, c)| {
                    json!({
                        "triple": c.triple,
                        "component": c.component,
                        "polynomial": p.display_with(&pb.params).to_string(),
                    })
                })
                .collect();
            Ok(Outcome::ok(json!({
                "family": pb.name,
                "params": pb.params,
                "constraints": cons,
            })))
        }
    }
}
