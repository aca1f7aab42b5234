//! Acceptance gate: eight criteria, one PASS/FAIL line each, non-zero exit
//! if any fails. Oracles here are computed independently of the library
//! where the library would otherwise be checking itself.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use newton_flow::catalog::{self, HypersurfaceModel, ModelPoint};
use newton_flow::flow::{self, FlowConfig, FlowGeometry, FlowState, FlowStatus, Scheme};
use newton_flow::gapcheck::{self, GaussVerdict};
use newton_flow::operators::{self, Identity};
use newton_flow::symfun::{self, ShapeOperator};
use newton_flow::Error;
use newton_flow_cli::commands::{cmd_gap, shrinker_catalog};
use newton_flow_cli::SceneArgs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn choose(m: usize, k: usize) -> f64 {
    if k > m {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

fn brute_sigma(k: &[f64], r: usize) -> f64 {
    let n = k.len();
    if r > n {
        return 0.0;
    }
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == r)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| k[i]).product::<f64>())
        .sum()
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn shrinker_radius(m: usize, r: usize) -> f64 {
    choose(m, r).powf(1.0 / (r as f64 + 1.0))
}

/// `(n, m, r)` with `1 <= r <= m <= n <= max_n`.
fn round_triples(max_n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for m in 1..=n {
            for r in 1..=m {
                out.push((n, m, r));
            }
        }
    }
    out
}

fn round_shrinker(n: usize, m: usize, r: usize) -> Result<HypersurfaceModel, String> {
    let model = if m == n {
        HypersurfaceModel::shrinker_sphere(n, r)
    } else {
        HypersurfaceModel::shrinker_cylinder(n, m, r)
    };
    model.map_err(|e| format!("n={n} m={m} r={r}: {e}"))
}

fn c1_sigma_table() -> Check {
    let mut checked = 0;
    for (n, m, r) in round_triples(8) {
        let model = round_shrinker(n, m, r)?;
        let delta = shrinker_radius(m, r);
        for sample in catalog::sample_points(&model, 8).map_err(|e| e.to_string())? {
            let point = ModelPoint::Position(sample.position.clone());
            let k = catalog::principal_curvatures(&model, &point).map_err(|e| e.to_string())?;
            for p in 0..=n {
                let want = choose(m, p) * delta.powi(-(p as i32));
                let got = symfun::elem_sym(&k, p);
                ensure((got - want).abs() <= 1e-12 * want.abs(), || {
                    format!("n={n} m={m} r={r} p={p}: {got} vs {want}")
                })?;
                checked += 1;
            }
            let sigma_r = symfun::elem_sym(&k, r);
            let support = catalog::support_function(&model, &point).map_err(|e| e.to_string())?;
            ensure((sigma_r - delta).abs() <= 1e-12 * delta && (support + delta).abs() <= 1e-12 * delta, || {
                format!("n={n} m={m} r={r}: σ_r={sigma_r} ⟨X,N⟩={support} δ={delta}")
            })?;
        }
    }
    Ok(format!("{checked} table entries"))
}

fn c2_boundary_norm() -> Check {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (n, m, r) in round_triples(8) {
        let model = round_shrinker(n, m, r)?;
        // all samples go through the gap report below; the matrix forms on a subset
        for sample in catalog::sample_points(&model, 8).map_err(|e| e.to_string())?.iter().step_by(8) {
            let s = ShapeOperator::from_curvatures(&sample.curvatures);
            let norm = symfun::modified_sff_norm_sq(&s, r).map_err(|e| e.to_string())?;
            for v in [norm.trace_form, norm.eigen_form, norm.sigma_form] {
                worst = worst.max((v - r as f64).abs());
            }
            let k = sample.curvatures.as_slice();
            let brute: f64 = (0..n)
                .map(|j| {
                    let rest: Vec<f64> = (0..n).filter(|&i| i != j).map(|i| k[i]).collect();
                    brute_sigma(&rest, r - 1) * k[j] * k[j]
                })
                .sum();
            worst = worst.max((brute - r as f64).abs());
        }
        let report = gapcheck::evaluate(&model, r, 8).map_err(|e| e.to_string())?;
        worst = worst.max((report.sup_modified_norm_sq - r as f64).abs());
        cases += 1;
    }
    ensure(worst <= 1e-10, || format!("max |norm - r| = {worst:e}"))?;
    Ok(format!("{cases} models, max |‖√P A‖² - r| = {worst:.2e}"))
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q()
}

fn random_shape(rng: &mut ChaCha8Rng, definite: bool) -> DMatrix<f64> {
    let n = rng.gen_range(1..=6);
    if definite {
        let q = random_orthogonal(n, rng);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(0.05..3.0)));
        let m = &q * d * q.transpose();
        (&m + m.transpose()) * 0.5
    } else {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        (&m + m.transpose()) * 0.5
    }
}

#[derive(Default)]
struct AlgebraStats {
    trace: f64,
    poly: f64,
    cayley: f64,
    eigen: f64,
    frame: f64,
    bound_cases: usize,
    bound_violation: f64,
}

/// Every residual is divided by its allowed tolerance, so each stat must stay <= 1.
fn algebra_case(a: &DMatrix<f64>, rng: &mut ChaCha8Rng, stats: &mut AlgebraStats) -> Result<(), String> {
    let n = a.nrows();
    let s = ShapeOperator::new(a.clone()).map_err(|e| e.to_string())?;
    let fam = symfun::newton_family(&s);
    let eig = SymmetricEigen::new(a.clone());
    let k: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let sig: Vec<f64> = (0..=n + 1).map(|r| brute_sigma(&k, r)).collect();
    let norm_a = frobenius(a);
    let grow = |p: i32| (1.0 + norm_a).powi(p);

    let identity = DMatrix::<f64>::identity(n, n);
    let mut power = identity.clone();
    let mut powers = vec![identity.clone()];
    for _ in 1..=n {
        power = &power * a;
        powers.push(power.clone());
    }
    for r in 0..=n {
        let mut poly = DMatrix::<f64>::zeros(n, n);
        for j in 0..=r {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            poly += &powers[j] * (sign * sig[r - j]);
        }
        stats.poly = stats.poly.max(max_abs(&(&poly - fam.p(r))) / (1e-10 * grow(r as i32)));
    }
    stats.cayley = stats.cayley.max(frobenius(fam.p(n)) / (1e-10 * grow(n as i32)));

    let q = random_orthogonal(n, rng);
    let moved = ShapeOperator::new(&q * a * q.transpose()).map_err(|e| e.to_string())?;
    let moved_fam = symfun::newton_family(&moved);

    for r in 1..=n {
        let rf = r as f64;
        let p = fam.p(r - 1);
        let scale = 1e-10 * grow(r as i32 + 1);
        let t1 = (p.trace() - (n - r + 1) as f64 * sig[r - 1]).abs();
        let t2 = ((p * a).trace() - rf * sig[r]).abs();
        let t3 = ((p * a * a).trace() - (sig[1] * sig[r] - (rf + 1.0) * sig[r + 1])).abs();
        let lib = symfun::trace_identities(&s, r).map_err(|e| e.to_string())?.max_residual() / 1e-10;
        stats.trace = stats.trace.max(t1.max(t2).max(t3) / scale).max(lib);

        // eigen law, skipping indices inside clusters tighter than 1e-6
        let d = eig.eigenvectors.transpose() * p * &eig.eigenvectors;
        for i in 0..n {
            let clustered = (0..n).any(|j| j != i && (k[i] - k[j]).abs() < 1e-6);
            if clustered {
                continue;
            }
            let rest: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| k[j]).collect();
            let want = brute_sigma(&rest, r - 1);
            let off = (0..n).filter(|&j| j != i).map(|j| d[(i, j)].abs()).fold(0.0, f64::max);
            let tol = 1e-9 * grow(r as i32 - 1);
            stats.eigen = stats.eigen.max((d[(i, i)] - want).abs().max(off) / tol);
        }

        let x = symfun::modified_sff_norm_sq(&s, r).map_err(|e| e.to_string())?;
        let y = symfun::modified_sff_norm_sq(&moved, r).map_err(|e| e.to_string())?;
        let dx = (x.value() - y.value()).abs().max((x.sigma_form - y.sigma_form).abs());
        let def_a = symfun::definiteness(p, symfun::CLAMP_TOL);
        let def_b = symfun::definiteness(moved_fam.p(r - 1), symfun::CLAMP_TOL);
        let de = (def_a.min_eigenvalue - def_b.min_eigenvalue)
            .abs()
            .max((def_a.max_eigenvalue - def_b.max_eigenvalue).abs());
        stats.frame = stats.frame.max(dx / scale).max(de / (1e-10 * grow(r as i32)));

        let p_psd = SymmetricEigen::new(p.clone()).eigenvalues.iter().all(|&v| v >= -1e-12 * frobenius(p).max(1.0));
        if p_psd {
            stats.bound_cases += 1;
            let lhs = rf * rf * sig[r] * sig[r];
            let rhs = (n - r + 1) as f64 * sig[r - 1] * (sig[1] * sig[r] - (rf + 1.0) * sig[r + 1]);
            let tol = 1e-10 * grow(2 * r as i32 + 1);
            stats.bound_violation = stats.bound_violation.max((lhs - rhs) / tol);
            let lib = symfun::cauchy_schwarz_bound(&s, r).map_err(|e| format!("PSD case rejected: {e}"))?;
            ensure(lib.holds(tol), || format!("library bound fails: {lib:?}"))?;
        }
    }
    for r in 0..=n {
        let ds = (fam.sigma(r) - moved_fam.sigma(r)).abs() / (1e-10 * grow(r as i32 + 1));
        stats.frame = stats.frame.max(ds);
    }
    Ok(())
}

fn c3_algebra() -> Check {
    const CASES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut stats = AlgebraStats::default();
    for i in 0..CASES {
        let a = random_shape(&mut rng, i % 2 == 1);
        algebra_case(&a, &mut rng, &mut stats)?;
    }
    let worst = [stats.trace, stats.poly, stats.cayley, stats.eigen, stats.frame, stats.bound_violation];
    let names = ["trace", "polynomial", "P_n", "eigen law", "frame", "bound"];
    for (v, name) in worst.iter().zip(names) {
        ensure(*v <= 1.0, || format!("{name} residual at {v:.3} of tolerance"))?;
    }
    ensure(stats.bound_cases > CASES, || format!("only {} PSD cases", stats.bound_cases))?;
    Ok(format!(
        "{CASES} operators, {} PSD bound cases; worst/tol trace {:.1e} poly {:.1e} P_n {:.1e} eigen {:.1e} frame {:.1e}",
        stats.bound_cases, stats.trace, stats.poly, stats.cayley, stats.eigen, stats.frame
    ))
}

fn c4_operator_convergence() -> Check {
    let model = HypersurfaceModel::ellipsoid(1.0, 2.0).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for identity in [Identity::Support, Identity::Position] {
        for r in [1, 2] {
            let report = operators::verify_identity(identity, &model, r, &[64, 128, 256]).map_err(|e| e.to_string())?;
            let orders = report.orders();
            let finest = report.finest_residual();
            let label = format!("{} r={r}", identity.name());
            ensure(orders.len() == 2 && orders.iter().all(|p| (1.5..=2.5).contains(p)), || {
                format!("{label}: orders {orders:?}")
            })?;
            ensure(finest <= 1e-3, || format!("{label}: finest residual {finest:e}"))?;
            parts.push(format!("{label} {:.2}/{:.2} {finest:.1e}", orders[0], orders[1]));
        }
    }
    Ok(parts.join("; "))
}

fn c5_shrinker_pde() -> Check {
    let cases = shrinker_catalog(6);
    let mut worst: f64 = 0.0;
    for (model, r, label) in &cases {
        let report = operators::verify_shrinker_pde(model, *r).map_err(|e| format!("{label}: {e}"))?;
        worst = worst.max(report.max_residual());
    }
    ensure(worst <= 1e-10, || format!("max residual {worst:e}"))?;
    Ok(format!("{} shrinkers, max residual {worst:.2e}", cases.len()))
}

fn node_radii(g: &FlowGeometry) -> Vec<f64> {
    match g {
        FlowGeometry::Curve { vertices } => vertices.iter().map(|p| p[0].hypot(p[1])).collect(),
        FlowGeometry::Profile { profile, .. } => {
            profile.rho().iter().zip(profile.z()).map(|(a, b)| a.hypot(*b)).collect()
        }
        FlowGeometry::Radius { radius, .. } => vec![*radius],
        FlowGeometry::Plane { .. } => Vec::new(),
    }
}

fn coordinates(g: &FlowGeometry) -> Vec<f64> {
    match g {
        FlowGeometry::Curve { vertices } => vertices.iter().flatten().copied().collect(),
        FlowGeometry::Profile { profile, .. } => profile.rho().iter().chain(profile.z()).copied().collect(),
        FlowGeometry::Radius { radius, .. } => vec![*radius],
        FlowGeometry::Plane { .. } => Vec::new(),
    }
}

/// Max over steps up to `0.8 T` and over nodes of `|R² - (R0² - c t)|`.
fn round_law_error(n: usize, r0: f64, resolution: usize, c: f64) -> Result<(f64, usize), String> {
    let model = HypersurfaceModel::sphere(n, r0).map_err(|e| e.to_string())?;
    let t_stop = 0.8 * r0 * r0 / c;
    let mut state = FlowState::new(FlowGeometry::from_model(&model, resolution).map_err(|e| e.to_string())?);
    let mut worst: f64 = 0.0;
    while state.t < t_stop {
        let limit = state.geometry.stability_limit(1, resolution).map_err(|e| e.to_string())?;
        let dt = (flow::DEFAULT_CFL_SAFETY * limit).min(t_stop - state.t);
        state = flow::step(&state, 1, dt, Scheme::Heun, resolution).map_err(|e| e.to_string())?;
        let exact_sq = r0 * r0 - c * state.t;
        for radius in node_radii(&state.geometry) {
            worst = worst.max((radius * radius - exact_sq).abs()).max((radius - exact_sq.sqrt()).abs());
        }
    }
    Ok((worst, state.step_count))
}

fn c6_flow_law() -> Check {
    let (circle, circle_steps) = round_law_error(1, 1.0, 256, 2.0)?;
    ensure(circle <= 1e-3, || format!("circle law error {circle:e}"))?;
    let (sphere, sphere_steps) = round_law_error(2, 2.0, 256, 4.0)?;
    ensure(sphere <= 1e-3, || format!("sphere law error {sphere:e}"))?;

    let model = HypersurfaceModel::cylinder(2, 1, 1.0).map_err(|e| e.to_string())?;
    let resolution = 128;
    let mut state = FlowState::new(FlowGeometry::from_model(&model, resolution).map_err(|e| e.to_string())?);
    let mut drift: f64 = 0.0;
    for _ in 0..200 {
        let before = coordinates(&state.geometry);
        let limit = state.geometry.stability_limit(2, resolution).map_err(|e| e.to_string())?;
        state = flow::step(&state, 2, flow::DEFAULT_CFL_SAFETY * limit, Scheme::Heun, resolution)
            .map_err(|e| e.to_string())?;
        let after = coordinates(&state.geometry);
        drift = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(drift, f64::max);
    }
    ensure(drift <= 1e-10, || format!("cylinder moved {drift:e} in one step"))?;
    Ok(format!(
        "circle err {circle:.1e} ({circle_steps} steps), sphere err {sphere:.1e} ({sphere_steps} steps), cylinder r=2 drift {drift:.1e}"
    ))
}

fn c7_homothety() -> Check {
    let model = HypersurfaceModel::sphere(2, 2f64.sqrt()).map_err(|e| e.to_string())?;
    let config = FlowConfig { rescaled: true, resolution: 256, ..FlowConfig::new(model, 1, 0.4) };
    let run = flow::run(&config).map_err(|e| e.to_string())?;
    ensure(run.status == FlowStatus::Completed, || format!("status {:?}", run.status))?;
    let mut worst: f64 = 0.0;
    let mut records = 0;
    for d in &run.diagnostics {
        let phi_sq = 1.0 - 2.0 * d.t;
        if phi_sq < 0.2 - 1e-12 {
            continue;
        }
        let defect = d.homothety_defect.ok_or("missing homothety defect")?;
        worst = worst.max(defect);
        records += 1;
    }
    ensure(worst <= 1e-3, || format!("homothety defect {worst:e}"))?;
    Ok(format!("{records} records to t = 0.4, max defect {worst:.2e}"))
}

fn gap_via_cli(dir: &tempfile::TempDir, name: &str, model: &HypersurfaceModel, r: usize) -> Result<Value, String> {
    let path = dir.path().join(format!("{name}.json"));
    let scene = json!({"model": model, "r": r, "resolution": 8});
    std::fs::write(&path, scene.to_string()).map_err(|e| e.to_string())?;
    let args = SceneArgs { config: path, r: None, resolution: None, out: None };
    let mut out = Vec::new();
    cmd_gap(&args, &mut out).map_err(|e| format!("{name}: {e}"))?;
    serde_json::from_slice(&out).map_err(|e| e.to_string())
}

fn c8_gap_classification() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut counts = [0usize; 4];
    for n in 1..=6 {
        for r in 1..=n {
            let model = HypersurfaceModel::hyperplane(n).map_err(|e| e.to_string())?;
            let v = gap_via_cli(&dir, &format!("plane-{n}-{r}"), &model, r)?;
            ensure(v["classification"]["type"] == "hyperplane" && v["flags"]["thm1_strict"] == true, || {
                format!("hyperplane n={n} r={r}: {}", v["classification"])
            })?;
            counts[0] += 1;
        }
        for m in 1..=n {
            for r in 1..=m {
                let model = round_shrinker(n, m, r)?;
                let v = gap_via_cli(&dir, &format!("round-{n}-{m}-{r}"), &model, r)?;
                let boundary = v["flags"]["thm1_boundary"] == true && v["flags"]["thm1_strict"] == false;
                let class = &v["classification"];
                let right = if m == n {
                    class["type"] == "sphere"
                } else {
                    class["type"] == "cylinder" && class["m"] == m
                };
                ensure(boundary && right, || format!("n={n} m={m} r={r}: {class} boundary={boundary}"))?;
                counts[if m == n { 1 } else { 2 }] += 1;
            }
            if m < n {
                for r in m + 1..=n {
                    let model = HypersurfaceModel::cylinder(n, m, shrinker_radius(m, m)).map_err(|e| e.to_string())?;
                    let v = gap_via_cli(&dir, &format!("off-{n}-{m}-{r}"), &model, r)?;
                    ensure(v["classification"]["type"] == "not_shrinker", || {
                        format!("cylinder n={n} m={m} r={r}: {}", v["classification"])
                    })?;
                    let report = gapcheck::evaluate(&model, r, 8).map_err(|e| e.to_string())?;
                    ensure(matches!(gapcheck::classify(&report), Err(Error::NotShrinker { .. })), || {
                        format!("classify accepted cylinder n={n} m={m} r={r}")
                    })?;
                    counts[3] += 1;
                }
            }
        }
    }
    let mut hk_worst: f64 = 0.0;
    for n in 1..=6 {
        let model = HypersurfaceModel::sphere(n, 1.0).map_err(|e| e.to_string())?;
        let g = gapcheck::gauss_check(&model, 8).map_err(|e| e.to_string())?;
        hk_worst = hk_worst.max((g.sup_hk - n as f64).abs());
        ensure(g.weakly_convex && g.verdict == GaussVerdict::UnitSphere, || format!("S^{n}(1): {g:?}"))?;
    }
    ensure(hk_worst <= 1e-10, || format!("HK deviates from n by {hk_worst:e}"))?;
    Ok(format!(
        "{} hyperplane, {} sphere, {} cylinder, {} not-shrinker reports; HK = n to {hk_worst:.1e}",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "cylinder sigma_p table", budget: Duration::from_secs(1), run: c1_sigma_table },
        Criterion { id: 2, name: "modified norm boundary value", budget: Duration::from_secs(1), run: c2_boundary_norm },
        Criterion { id: 3, name: "algebra property suite", budget: Duration::from_secs(30), run: c3_algebra },
        Criterion { id: 4, name: "operator identity convergence", budget: Duration::from_secs(10), run: c4_operator_convergence },
        Criterion { id: 5, name: "shrinker PDE check", budget: Duration::from_secs(1), run: c5_shrinker_pde },
        Criterion { id: 6, name: "flow law", budget: Duration::from_secs(60), run: c6_flow_law },
        Criterion { id: 7, name: "homothety", budget: Duration::from_secs(60), run: c7_homothety },
        Criterion { id: 8, name: "gap classification", budget: Duration::from_secs(5), run: c8_gap_classification },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{}] {} ({:.3} s / {} s): {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
