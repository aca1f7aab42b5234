use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use newton_flow::catalog::{self, HypersurfaceModel};
use newton_flow::flow::{self, Diagnostics, FlowRun, FlowStatus};
use newton_flow::gapcheck;
use newton_flow::operators::{self, ConvergenceReport, Identity};
use newton_flow::symfun::{self, CurvatureVector, ShapeOperator};
use serde::Serialize;

use crate::json::{self, format_float};
use crate::scene::SceneConfig;
use crate::{AlgebraArgs, CliError, FlowArgs, SceneArgs, VerifyArgs};

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
            log::info!("wrote {}", p.display());
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = json::to_string(value).map_err(|e| CliError::Parse(format!("serialization: {e}")))?;
    emit(&text, path, stdout)
}

fn load_scene(args: &SceneArgs) -> Result<SceneConfig, CliError> {
    let mut scene = SceneConfig::load(&args.config)?;
    if let Some(r) = args.r {
        scene.r = r;
    }
    if let Some(res) = args.resolution {
        scene.resolution = res;
    }
    Ok(scene)
}

/// Parses `cyl:n=3,m=2,r=1`, `sphere:n=3,r=2` or `plane:n=3` into shrinker
/// curvatures and the preset's order.
pub fn parse_preset(spec: &str) -> Result<(Vec<f64>, usize), CliError> {
    let bad = |msg: &str| CliError::Parse(format!("preset {spec:?}: {msg}"));
    let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("expected KIND:key=value,..."))?;
    let (mut n, mut m, mut r) = (None, None, None);
    for pair in rest.split(',').filter(|s| !s.is_empty()) {
        let (key, value) = pair.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let value: usize = value.trim().parse().map_err(|_| bad("values must be non-negative integers"))?;
        match key.trim() {
            "n" => n = Some(value),
            "m" => m = Some(value),
            "r" => r = Some(value),
            other => return Err(bad(&format!("unknown key {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| bad("missing n"))?;
    let r = r.unwrap_or(1);
    let model = match kind {
        "cyl" | "cylinder" => HypersurfaceModel::shrinker_cylinder(n, m.ok_or_else(|| bad("missing m"))?, r)?,
        "sphere" => HypersurfaceModel::shrinker_sphere(n, r)?,
        "plane" | "hyperplane" => HypersurfaceModel::hyperplane(n)?,
        other => return Err(bad(&format!("unknown kind {other:?}"))),
    };
    let first = catalog::sample_points(&model, catalog::MIN_RESOLUTION)?
        .into_iter()
        .next()
        .ok_or(newton_flow::Error::EmptySamples)?;
    Ok((first.curvatures.as_slice().to_vec(), r))
}

#[derive(Serialize)]
struct AlgebraReport {
    k: Vec<f64>,
    n: usize,
    r: usize,
    sigmas: Vec<f64>,
    /// `σ_{r-1}(A_i)` in the order of `k`.
    p_eigenvalues: Vec<f64>,
    p_definiteness: symfun::Definiteness,
    modified_norm_sq: symfun::ModifiedNormSq,
    trace_identities: symfun::TraceIdentityReport,
    cauchy_schwarz: Option<symfun::CauchySchwarz>,
}

pub fn cmd_algebra(args: &AlgebraArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (k, preset_r) = match (&args.k, &args.preset, &args.config) {
        (Some(k), None, None) => (k.clone(), None),
        (None, Some(p), None) => {
            let (k, r) = parse_preset(p)?;
            (k, Some(r))
        }
        (None, None, Some(path)) => {
            let scene = SceneConfig::load(path)?;
            let first = catalog::sample_points(&scene.model, scene.resolution)?
                .into_iter()
                .next()
                .ok_or(newton_flow::Error::EmptySamples)?;
            (first.curvatures.as_slice().to_vec(), Some(scene.r))
        }
        _ => return Err(CliError::Parse("give exactly one of --k, --preset or --config".into())),
    };
    let r = args
        .r
        .or(preset_r)
        .ok_or_else(|| CliError::Parse("--r is required with --k".into()))?;
    let cv = CurvatureVector::new(k.clone())?;
    let s = ShapeOperator::from_curvatures(&cv);
    let modified_norm_sq = symfun::modified_sff_norm_sq(&s, r)?;
    let family = symfun::newton_family(&s);
    let report = AlgebraReport {
        n: cv.dim(),
        r,
        sigmas: cv.sigmas(),
        p_eigenvalues: cv.newton_eigenvalues(r - 1),
        p_definiteness: symfun::definiteness(family.p(r - 1), symfun::CLAMP_TOL),
        modified_norm_sq,
        trace_identities: symfun::trace_identities(&s, r)?,
        cauchy_schwarz: symfun::cauchy_schwarz_bound(&s, r).ok(),
        k,
    };
    emit_json(&report, args.out.as_deref(), stdout)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ResidualReport {
    model: HypersurfaceModel,
    r: usize,
    resolution: usize,
    samples: usize,
    sup_residual: f64,
}

pub fn cmd_residual(args: &SceneArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scene = load_scene(args)?;
    let samples = catalog::sample_points(&scene.model, scene.resolution)?;
    if scene.r == 0 || scene.r > scene.model.dim() {
        return Err(newton_flow::Error::Domain(format!("order r = {} outside 1..={}", scene.r, scene.model.dim())).into());
    }
    let sup_residual = samples
        .iter()
        .map(|s| (s.curvatures.sigma(scene.r) + s.support).abs())
        .fold(0.0, f64::max);
    let report = ResidualReport {
        model: scene.model.clone(),
        r: scene.r,
        resolution: scene.resolution,
        samples: samples.len(),
        sup_residual,
    };
    let out = args.out.as_deref().or(scene.output.report.as_deref());
    emit_json(&report, out, stdout)
}

pub fn cmd_gap(args: &SceneArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scene = load_scene(args)?;
    let report = gapcheck::evaluate(&scene.model, scene.r, scene.resolution)?;
    log::info!("classification {:?}", report.classification);
    let out = args.out.as_deref().or(scene.output.report.as_deref());
    emit_json(&report, out, stdout)
}

pub const CSV_HEADER: &str = "t,max_residual,homothety_defect,min_radius,dt";

pub fn diagnostics_csv(rows: &[Diagnostics]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for d in rows {
        let defect = d.homothety_defect.map(format_float).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(d.t),
            format_float(d.max_residual),
            defect,
            format_float(d.min_radius),
            format_float(d.dt)
        );
    }
    out
}

#[derive(Debug, Serialize)]
pub struct FlowSummary {
    pub status: FlowStatus,
    pub t_final: f64,
    pub steps: usize,
    pub records: usize,
    pub initial_min_radius: f64,
    pub final_min_radius: f64,
    /// Closed-form radius at `t_final` for round models.
    pub exact_min_radius: Option<f64>,
    pub max_residual: f64,
    pub max_homothety_defect: Option<f64>,
    pub resample_count: usize,
}

/// `(m, R0)` of a round model, for the closed-form law.
fn round_factor(model: &HypersurfaceModel) -> Option<(usize, f64)> {
    match *model {
        HypersurfaceModel::Sphere { n, radius } => Some((n, radius)),
        HypersurfaceModel::Cylinder { m, radius, .. } => Some((m, radius)),
        _ => None,
    }
}

pub fn summarize(model: &HypersurfaceModel, r: usize, run: &FlowRun) -> FlowSummary {
    let first = run.diagnostics.first();
    let t_final = run.final_state.t;
    let exact_min_radius = round_factor(model)
        .filter(|&(m, _)| r <= m)
        .and_then(|(m, r0)| flow::sphere_radius_exact(m, r, r0, t_final).ok());
    FlowSummary {
        status: run.status,
        t_final,
        steps: run.final_state.step_count,
        records: run.diagnostics.len(),
        initial_min_radius: first.map_or(f64::NAN, |d| d.min_radius),
        final_min_radius: run.final_state.geometry.min_radius(),
        exact_min_radius,
        max_residual: run.diagnostics.iter().map(|d| d.max_residual).fold(0.0, f64::max),
        max_homothety_defect: run
            .diagnostics
            .iter()
            .filter_map(|d| d.homothety_defect)
            .reduce(f64::max),
        resample_count: run.resample_count,
    }
}

pub fn cmd_flow(args: &FlowArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scene = load_scene(&args.scene)?;
    let config = scene.flow_config(args.t_end)?;
    let run = flow::run(&config)?;
    let summary = summarize(&config.model, config.r, &run);

    let csv_path = args.scene.out.as_deref().or(scene.output.csv.as_deref());
    emit(&diagnostics_csv(&run.diagnostics), csv_path, stdout)?;
    let summary_text = json::to_string(&summary).map_err(|e| CliError::Parse(format!("serialization: {e}")))?;
    match (args.summary.as_deref().or(scene.output.summary.as_deref()), csv_path) {
        (Some(p), _) => emit(&summary_text, Some(p), stdout)?,
        (None, Some(_)) => emit(&summary_text, None, stdout)?,
        (None, None) => eprint!("{summary_text}"),
    }

    if let FlowStatus::Extinct { t } = run.status {
        let expected = config.model.is_closed()
            || round_factor(&config.model)
                .filter(|&(m, _)| config.r <= m)
                .and_then(|(m, r0)| flow::extinction_time(m, config.r, r0).ok())
                .is_some_and(|te| config.t_end >= te * (1.0 - 1e-6));
        if !expected {
            return Err(CliError::Numerical(format!("surface went extinct at t = {t} before t_end = {}", config.t_end)));
        }
        log::info!("extinct at t = {t}");
    }
    Ok(())
}

/// One line of the verify table.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub suite: String,
    pub case: String,
    pub residual: f64,
    pub orders: Vec<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

/// Finest residual bound for the identity convergence suites.
pub const IDENTITY_FINEST_TOL: f64 = 1e-3;

fn identity_row(model: &HypersurfaceModel, label: &str, identity: Identity, r: usize, res: &[usize]) -> VerifyRow {
    let case = format!("{label} r={r}");
    match operators::verify_identity(identity, model, r, res) {
        Ok(report) => convergence_row(&report, case),
        Err(e) => VerifyRow {
            suite: identity.name().to_string(),
            case,
            residual: f64::NAN,
            orders: Vec::new(),
            passed: false,
            error: Some(e.to_string()),
        },
    }
}

fn convergence_row(report: &ConvergenceReport, case: String) -> VerifyRow {
    let residual = report.finest_residual();
    VerifyRow {
        suite: report.identity.name().to_string(),
        case,
        residual,
        orders: report.orders(),
        passed: report.passed() && residual <= IDENTITY_FINEST_TOL,
        error: None,
    }
}

/// Hyperplanes, shrinking spheres and cylinders with `n <= max_n`, every
/// admissible order.
pub fn shrinker_catalog(max_n: usize) -> Vec<(HypersurfaceModel, usize, String)> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for r in 1..=n {
            if let Ok(m) = HypersurfaceModel::hyperplane(n) {
                out.push((m, r, format!("hyperplane n={n} r={r}")));
            }
        }
        for m in 1..=n {
            for r in 1..=m {
                let model = if m == n {
                    HypersurfaceModel::shrinker_sphere(n, r)
                } else {
                    HypersurfaceModel::shrinker_cylinder(n, m, r)
                };
                if let Ok(model) = model {
                    let label = if m == n {
                        format!("sphere n={n} r={r}")
                    } else {
                        format!("cylinder n={n} m={m} r={r}")
                    };
                    out.push((model, r, label));
                }
            }
        }
    }
    out
}

fn shrinker_rows() -> Vec<VerifyRow> {
    shrinker_catalog(6)
        .into_iter()
        .map(|(model, r, case)| match operators::verify_shrinker_pde(&model, r) {
            Ok(report) => VerifyRow {
                suite: "shrinker_pde".into(),
                case,
                residual: report.max_residual(),
                orders: Vec::new(),
                passed: report.max_residual() <= operators::SHRINKER_TOL,
                error: None,
            },
            Err(e) => VerifyRow {
                suite: "shrinker_pde".into(),
                case,
                residual: f64::NAN,
                orders: Vec::new(),
                passed: false,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Built-in suites: both identities on the (1, 2) ellipsoid for `r ∈ {1, 2}`
/// and the shrinker identities on the catalog.
pub fn builtin_rows(resolutions: &[usize]) -> Vec<VerifyRow> {
    let ellipsoid = HypersurfaceModel::EllipsoidRev { a: 1.0, b: 2.0 };
    let cases: Vec<(Identity, usize)> =
        [Identity::Support, Identity::Position].into_iter().flat_map(|id| [(id, 1), (id, 2)]).collect();
    let mut rows: Vec<VerifyRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .iter()
            .map(|&(id, r)| {
                let model = &ellipsoid;
                scope.spawn(move || identity_row(model, "ellipsoid a=1 b=2", id, r, resolutions))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("verify worker panicked")).collect()
    });
    rows.extend(shrinker_rows());
    rows
}

pub fn render_table(rows: &[VerifyRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:<28} {:>24} {:<22} result", "suite", "case", "residual", "orders");
    for row in rows {
        let orders = row.orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(",");
        let verdict = if row.passed { "PASS" } else { "FAIL" };
        let _ = write!(out, "{:<14} {:<28} {:>24} {:<22} {verdict}", row.suite, row.case, format_float(row.residual), orders);
        if let Some(e) = &row.error {
            let _ = write!(out, " ({e})");
        }
        out.push('\n');
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    let _ = writeln!(out, "{} of {} checks passed", rows.len() - failed, rows.len());
    out
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.resolutions.len() < 2 || args.resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Parse("--resolutions needs at least two increasing values".into()));
    }
    let mut rows = Vec::new();
    let mut out_path = args.out.clone();
    if let Some(path) = &args.config {
        let scene = SceneConfig::load(path)?;
        let r = args.r.unwrap_or(scene.r);
        out_path = out_path.or(scene.output.report.clone());
        if scene.model.dim() == 2 {
            for id in [Identity::Support, Identity::Position] {
                rows.push(identity_row(&scene.model, "scene", id, r, &args.resolutions));
            }
        }
        if !matches!(scene.model, HypersurfaceModel::Revolution { .. } | HypersurfaceModel::EllipsoidRev { .. }) {
            let row = match operators::verify_shrinker_pde(&scene.model, r) {
                Ok(rep) => VerifyRow {
                    suite: "shrinker_pde".into(),
                    case: format!("scene r={r}"),
                    residual: rep.max_residual(),
                    orders: Vec::new(),
                    passed: rep.max_residual() <= operators::SHRINKER_TOL,
                    error: None,
                },
                Err(e) => VerifyRow {
                    suite: "shrinker_pde".into(),
                    case: format!("scene r={r}"),
                    residual: f64::NAN,
                    orders: Vec::new(),
                    passed: false,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    if args.all || args.config.is_none() {
        rows.extend(builtin_rows(&args.resolutions));
    }
    emit(&render_table(&rows), out_path.as_deref(), stdout)?;
    let failed: Vec<String> = rows.iter().filter(|r| !r.passed).map(|r| format!("{} {}", r.suite, r.case)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_cylinder() {
        let (k, r) = parse_preset("cyl:n=3,m=2,r=1").unwrap();
        assert_eq!(r, 1);
        assert_eq!(k.len(), 3);
        assert_eq!(k.iter().filter(|v| v.abs() < 1e-15).count(), 1);
        let nonzero: Vec<f64> = k.into_iter().filter(|v| v.abs() > 1e-15).collect();
        for v in nonzero {
            assert!((v - 2f64.powf(-0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn preset_errors() {
        assert!(matches!(parse_preset("cyl:n=3"), Err(CliError::Parse(_))));
        assert!(matches!(parse_preset("torus:n=3"), Err(CliError::Parse(_))));
        assert!(matches!(parse_preset("cyl:n=3,m=2,r=3"), Err(CliError::Core(_))));
    }

    #[test]
    fn csv_leaves_missing_defect_empty() {
        let row = Diagnostics { t: 0.0, max_residual: 1.0, homothety_defect: None, min_radius: 2.0, dt: 0.0 };
        let text = diagnostics_csv(&[row]);
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line.split(',').nth(2), Some(""));
    }

    #[test]
    fn catalog_counts() {
        let all = shrinker_catalog(2);
        // n=1: plane r1, circle r1; n=2: plane r1,r2, cyl m1 r1, sphere r1,r2
        assert_eq!(all.len(), 7);
    }
}
