//! Subcommand implementations. Each writes its artifacts through [`Output`]
//! and returns the failed assertions.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigidity_core::catalog;
use rigidity_core::config::{make_field, make_medium, MediumSpec};
use rigidity_core::hodograph::TwoPointTable;
use rigidity_core::reconstruction::{coefficient_rms_error, GaussNewtonResult};
use rigidity_core::rigidity::disc::disc_example;
use rigidity_core::rigidity::identities::{
    lemma_phi_identity_residual_with, squared_difference, CrossTermSign,
};
use rigidity_core::rigidity::inequality::check_boundary_agreement;
use rigidity_core::{
    build_hodograph, exit_angle_from_hodograph, gauss_newton_solve, trace_backward, trace_chord,
    Domain, GeodesicPath, ModelParameterization, RefractionField, Resolution, ScalarField,
    TomographyProblem, TraceOptions, Vec2,
};
use rigidity_core::rigidity::{
    fanbeam_check, fg_inequality, linearization_check, rnn_bracket, verify_inequality,
    InequalityReport,
};
use serde::Serialize;

use crate::error::{CliError, Context};
use crate::output::{num, Output};
use crate::scenario::Scenario;
use crate::svg;
use crate::{Cli, Command};

/// Coarse and fine grids used when neither `--grid` nor `grids` is given.
const DEFAULT_GRIDS: [Resolution; 2] = [Resolution::new(16, 32, 128), Resolution::new(32, 64, 256)];

/// Directions this close to tangency are left out of ray fans.
const FAN_EDGE: f64 = 0.1;

pub fn dispatch(cli: &Cli, scn: &Scenario) -> Result<Vec<String>, CliError> {
    let seed = cli.seed.or(scn.seed).unwrap_or(0);
    let mut out = Output::new(&cli.out)?;
    match &cli.command {
        Command::Trace {
            medium,
            x,
            phi,
            chord,
            s,
            fan,
        } => {
            let loaded;
            let src = match medium {
                Some(p) => {
                    loaded = Scenario::load(p)?;
                    &loaded
                }
                None => scn,
            };
            let x = if *chord { None } else { x.or(scn.trace.x) };
            let req = TraceRequest {
                x,
                s: s.unwrap_or(scn.trace.s),
                phi: phi.unwrap_or(scn.trace.phi),
                fan: fan.unwrap_or(scn.trace.fan).max(1),
            };
            trace(&mut out, src, &req)?
        }
        Command::Hodograph => hodograph(&mut out, scn, cli.grid)?,
        Command::Verify { pair } => verify(&mut out, scn, pair.as_deref(), &grids(cli, scn))?,
        Command::Xray => xray(&mut out, scn, &grids(cli, scn), seed)?,
        Command::FanbeamCheck => fanbeam(&mut out, scn)?,
        Command::DiscExample => disc(&mut out, scn)?,
        Command::ExitAngle { s_y, s_x } => exit_angle(
            &mut out,
            scn,
            s_y.unwrap_or(scn.exit_angle.s_y),
            s_x.unwrap_or(scn.exit_angle.s_x),
        )?,
        Command::Reconstruct { truth, basis, iters } => {
            reconstruct(&mut out, scn, truth.as_deref(), basis.as_deref(), *iters, cli.grid)?
        }
        Command::IdentityCheck => identity(&mut out, scn, seed)?,
    }
    out.finish()
}

fn grids(cli: &Cli, scn: &Scenario) -> Vec<Resolution> {
    match (cli.grid, scn.resolutions()) {
        (Some(g), _) => vec![g, g.refined()],
        (None, Some(r)) if !r.is_empty() => r,
        _ => DEFAULT_GRIDS.to_vec(),
    }
}

fn domain_of(scn: &Scenario) -> Result<Domain, CliError> {
    scn.domain.build().config()
}

fn medium_spec(spec: &Option<MediumSpec>) -> MediumSpec {
    spec.clone().unwrap_or(MediumSpec::Constant { c: 1.0 })
}

fn medium_of(scn: &Scenario, domain: &Domain) -> Result<RefractionField, CliError> {
    make_medium(&medium_spec(&scn.medium), domain).config()
}

fn perturbation_of(scn: &Scenario, domain: &Domain) -> Result<ScalarField, CliError> {
    match &scn.perturbation {
        Some(spec) => make_field(spec, domain).config(),
        None => Ok(catalog::standard_bump(domain, 1.0)),
    }
}

fn wrap_signed(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

struct TraceRequest {
    x: Option<[f64; 2]>,
    s: f64,
    phi: f64,
    fan: usize,
}

#[derive(Serialize)]
struct RaySummary {
    entry_s: f64,
    entry_phi: f64,
    exit_s: Option<f64>,
    exit_phi: Option<f64>,
    travel_time: f64,
    length: f64,
    status: rigidity_core::PathStatus,
}

fn trace(out: &mut Output, scn: &Scenario, req: &TraceRequest) -> Result<(), CliError> {
    let domain = domain_of(scn)?;
    let field = medium_of(scn, &domain)?;
    let opts = TraceOptions::default();
    let paths: Vec<GeodesicPath> = match req.x {
        Some([x, y]) => {
            let p = Vec2::new(x, y);
            if !domain.inside(&p) {
                return Err(CliError::Config(format!("point ({x}, {y}) is not inside the domain")));
            }
            vec![trace_backward(p, req.phi, &field, &domain, &opts).during("geodesic_tracer")?]
        }
        None if req.fan == 1 => vec![trace_chord(req.s, req.phi, &field, &domain, &opts).during("geodesic_tracer")?],
        None => {
            let nu = domain.boundary().inward_conormal(req.s);
            let beta = nu.y.atan2(nu.x);
            let half = 0.5 * PI - FAN_EDGE;
            (0..req.fan)
                .map(|k| {
                    let phi = beta - half + 2.0 * half * k as f64 / (req.fan - 1) as f64;
                    trace_chord(req.s, phi, &field, &domain, &opts)
                })
                .collect::<rigidity_core::Result<_>>()
                .during("geodesic_tracer")?
        }
    };
    out.csv(
        "rays.csv",
        &["ray", "sigma", "x", "y", "phi", "tau"],
        paths.iter().enumerate().flat_map(|(k, p)| {
            p.nodes.iter().map(move |n| {
                vec![k.to_string(), num(n.sigma), num(n.x.x), num(n.x.y), num(n.phi), num(n.tau)]
            })
        }),
    )?;
    let polylines: Vec<Vec<Vec2>> = paths.iter().map(|p| p.nodes.iter().map(|n| n.x).collect()).collect();
    out.text("rays.svg", &svg::ray_fan(&domain, &polylines))?;
    let summary: Vec<RaySummary> = paths
        .iter()
        .map(|p| RaySummary {
            entry_s: p.entry_s,
            entry_phi: p.first().phi,
            exit_s: p.exit.map(|h| h.s),
            exit_phi: p.exit.map(|h| h.phi),
            travel_time: p.travel_time(),
            length: p.length(),
            status: p.status,
        })
        .collect();
    out.json("trace.json", &summary)?;
    for (k, r) in summary.iter().enumerate() {
        out.line(format!(
            "ray {k}: entry s={:.6} phi={:.6}  tau={:.10}  length={:.6}  {:?}",
            r.entry_s, r.entry_phi, r.travel_time, r.length, r.status
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct HodographMeta<'a> {
    ns: usize,
    nphi: usize,
    total_length: f64,
    tangency_margin: f64,
    live_cells: usize,
    medium: &'a MediumSpec,
}

fn hodograph(out: &mut Output, scn: &Scenario, grid: Option<Resolution>) -> Result<(), CliError> {
    let domain = domain_of(scn)?;
    let spec = medium_spec(&scn.medium);
    let field = make_medium(&spec, &domain).config()?;
    let (ns, nphi) = match grid {
        Some(g) => (g.n_s, g.n_s),
        None => (scn.hodograph.ns, scn.hodograph.nphi),
    };
    let t = build_hodograph(&field, &domain, ns, nphi).config_or("hodograph")?;
    out.csv(
        "hodograph.csv",
        &["s", "phi", "tau", "live"],
        (0..t.ns).flat_map(|i| {
            let t = &t;
            (0..t.nphi).map(move |j| vec![num(t.s(i)), num(t.phi(j)), num(t.get(i, j)), t.is_live(i, j).to_string()])
        }),
    )?;
    out.json(
        "hodograph.json",
        &HodographMeta {
            ns: t.ns,
            nphi: t.nphi,
            total_length: t.total_length,
            tangency_margin: t.tangency_margin,
            live_cells: t.live_count(),
            medium: &spec,
        },
    )?;
    out.line(format!(
        "hodograph {}x{}: {} live cells, tangency margin {}",
        t.ns,
        t.nphi,
        t.live_count(),
        t.tangency_margin
    ));
    Ok(())
}

/// Invalid grid sizes are configuration errors; the rest are numerical.
trait ConfigOr<T> {
    fn config_or(self, module: &'static str) -> Result<T, CliError>;
}

impl<T> ConfigOr<T> for rigidity_core::Result<T> {
    fn config_or(self, module: &'static str) -> Result<T, CliError> {
        match self {
            Err(e) if matches!(e.root(), rigidity_core::Error::InvalidArgument(_)) => Err(CliError::Config(e.to_string())),
            other => other.during(module),
        }
    }
}

#[derive(Serialize)]
struct VerifyJson<'a> {
    pair: [String; 2],
    report: &'a InequalityReport,
}

fn report_table(out: &mut Output, report: &InequalityReport) {
    out.line(format!("{:>5} {:>5} {:>5}  {:>14} {:>14} {:>14} {:>10}", "N_x", "N_phi", "N_s", "lhs", "rhs", "margin", "drift"));
    for r in &report.resolutions {
        out.line(format!(
            "{:>5} {:>5} {:>5}  {:>14.8} {:>14.8} {:>14.8} {:>10.2e}",
            r.resolution.n_x, r.resolution.n_phi, r.resolution.n_s, r.lhs, r.rhs, r.margin, r.stencil_drift
        ));
    }
    out.line(format!(
        "drift {:.3e}, tolerance {:.3e}, collar {:.3e}, conclusive {}",
        report.drift, report.tolerance, report.collar_contribution, report.conclusive
    ));
}

fn margin_svg(out: &Output, report: &InequalityReport) -> Result<(), CliError> {
    let labels: Vec<String> = report
        .resolutions
        .iter()
        .map(|r| format!("{}/{}/{}", r.resolution.n_x, r.resolution.n_phi, r.resolution.n_s))
        .collect();
    let lhs: Vec<f64> = report.resolutions.iter().map(|r| r.lhs).collect();
    let rhs: Vec<f64> = report.resolutions.iter().map(|r| r.rhs).collect();
    out.text("margin.svg", &svg::margin_bars(&labels, &lhs, &rhs))
}

fn verify(
    out: &mut Output,
    scn: &Scenario,
    pair: Option<&[std::path::PathBuf]>,
    resolutions: &[Resolution],
) -> Result<(), CliError> {
    let (domain, names, f1, f2) = match (pair, &scn.medium, &scn.medium2) {
        (Some([a, b]), _, _) => {
            let (sa, sb) = (Scenario::load(a)?, Scenario::load(b)?);
            if sa.domain != sb.domain {
                return Err(CliError::Config("the two scenarios use different domains".into()));
            }
            let domain = domain_of(&sa)?;
            let f1 = medium_of(&sa, &domain)?;
            let f2 = medium_of(&sb, &domain)?;
            (domain, [a.display().to_string(), b.display().to_string()], f1, f2)
        }
        (Some(_), _, _) => return Err(CliError::Config("--pair takes two scenario files".into())),
        (None, Some(m1), Some(m2)) => {
            let domain = domain_of(scn)?;
            let f1 = make_medium(m1, &domain).config()?;
            let f2 = make_medium(m2, &domain).config()?;
            (domain, ["medium".into(), "medium2".into()], f1, f2)
        }
        (None, _, _) => {
            let domain = domain_of(scn)?;
            let (name, f1, f2) = catalog::boundary_matched_pairs(&domain)
                .config()?
                .into_iter()
                .next()
                .expect("catalog has pairs");
            let mut it = name.split("-vs-");
            let names = [it.next().unwrap_or(name).to_string(), it.next().unwrap_or(name).to_string()];
            (domain, names, f1, f2)
        }
    };
    check_boundary_agreement(&f1, &f2, &domain).config()?;
    let report = verify_inequality(&f1, &f2, &domain, resolutions).during("rigidity_suite")?;
    out.json(
        "report.json",
        &VerifyJson {
            pair: names.clone(),
            report: &report,
        },
    )?;
    margin_svg(out, &report)?;
    out.line(format!("pair: {} vs {}", names[0], names[1]));
    report_table(out, &report);
    out.check(
        report.holds,
        "Theorem (ineq)",
        format!("lhs={}, rhs={}", report.lhs, report.rhs),
    );
    Ok(())
}

#[derive(Serialize)]
struct XrayJson<'a> {
    fg: &'a InequalityReport,
    linearization: Vec<LinearizationSummary>,
}

#[derive(Serialize)]
struct LinearizationSummary {
    eps: f64,
    max_xray_relative_error: f64,
    max_first_variation_relative_error: f64,
    max_two_point_relative_error: f64,
}

fn random_incoming(domain: &Domain, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = domain.boundary().total_length();
    (0..count)
        .map(|_| {
            let s = rng.gen_range(0.0..l);
            let nu = domain.boundary().inward_conormal(s);
            let beta = nu.y.atan2(nu.x);
            // keep well inside the incoming cone
            (s, beta + rng.gen_range(-1.2..1.2))
        })
        .collect()
}

fn xray(out: &mut Output, scn: &Scenario, resolutions: &[Resolution], seed: u64) -> Result<(), CliError> {
    let domain = domain_of(scn)?;
    let field = medium_of(scn, &domain)?;
    let f = perturbation_of(scn, &domain)?;
    if !f.vanishes_on_boundary() {
        return Err(CliError::Config("perturbation must vanish on the boundary".into()));
    }
    let report = fg_inequality(&f, &field, &domain, resolutions).during("rigidity_suite")?;
    let dirs = random_incoming(&domain, scn.linearization.samples, seed);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &eps in &scn.linearization.eps {
        let samples = linearization_check(&f, &field, &domain, eps, &dirs).during("rigidity_suite")?;
        let max = |g: &dyn Fn(&rigidity_core::rigidity::LinearizationSample) -> f64| {
            samples.iter().map(g).fold(0.0, f64::max)
        };
        summary.push(LinearizationSummary {
            eps,
            max_xray_relative_error: max(&|s| s.xray_relative_error()),
            max_first_variation_relative_error: max(&|s| s.first_variation_relative_error()),
            max_two_point_relative_error: max(&|s| s.two_point_relative_error()),
        });
        rows.extend(samples);
    }
    out.csv(
        "linearization.csv",
        &["s", "phi", "eps", "quotient", "xray", "first_variation", "two_point_quotient"],
        rows.iter().map(|r| {
            vec![
                num(r.s),
                num(r.phi),
                num(r.eps),
                num(r.quotient),
                num(r.xray),
                num(r.first_variation),
                num(r.two_point_quotient),
            ]
        }),
    )?;
    margin_svg(out, &report)?;
    report_table(out, &report);
    for s in &summary {
        out.line(format!(
            "eps {:e}: max rel err vs X-ray {:.3e} (fixed entry), {:.3e} (fixed endpoints); vs first variation {:.3e}",
            s.eps, s.max_xray_relative_error, s.max_two_point_relative_error, s.max_first_variation_relative_error
        ));
    }
    out.json(
        "report.json",
        &XrayJson {
            fg: &report,
            linearization: summary,
        },
    )?;
    out.check(
        report.holds,
        "Theorem (fg)",
        format!("lhs={}, rhs={}", report.lhs, report.rhs),
    );
    Ok(())
}

fn fanbeam(out: &mut Output, scn: &Scenario) -> Result<(), CliError> {
    let domain = domain_of(scn)?;
    if !domain.is_disc() {
        return Err(CliError::Config("fanbeam-check runs on the unit disc".into()));
    }
    let f = perturbation_of(scn, &domain)?;
    let report = fanbeam_check(&f, 64, 256).during("rigidity_suite")?;
    out.json("fanbeam.json", &report)?;
    let cr = report.chain_rule;
    out.line(format!(
        "chain rule on {} points: max |g_s residual| {:.3e}, max |g_phi residual| {:.3e}",
        cr.points, cr.max_s, cr.max_phi
    ));
    out.line(format!(
        "rhs: fan-beam {:.8}, parallel-beam {:.8}, relative difference {:.3e}",
        report.rhs_fan,
        report.rhs_parallel,
        report.rhs_relative_difference()
    ));
    out.check(
        cr.max() < 1e-5,
        "fan-beam chain rule",
        format!("residual={:e} (bound 1e-5)", cr.max()),
    );
    out.check(
        report.rhs_relative_difference() < 0.01,
        "fan-beam and parallel-beam right sides agree",
        format!(
            "fan={}, parallel={} (bound 1%)",
            report.rhs_fan, report.rhs_parallel
        ),
    );
    Ok(())
}

fn disc(out: &mut Output, scn: &Scenario) -> Result<(), CliError> {
    let rows = disc_example(&scn.disc.radii, scn.disc.n_phi).config_or("rigidity_suite")?;
    let straight: Vec<f64> = rows
        .iter()
        .map(|r| rigidity_core::rigidity::disc_weight_straight_line(r.r))
        .collect::<rigidity_core::Result<_>>()
        .config()?;
    out.csv(
        "disc_example.csv",
        &["r", "closed_form", "quadrature", "rel_err", "straight_line"],
        rows.iter()
            .zip(&straight)
            .map(|(r, s)| vec![num(r.r), num(r.closed_form), num(r.quadrature), num(r.rel_err), num(*s)]),
    )?;
    for (r, s) in rows.iter().zip(&straight) {
        out.line(format!(
            "r={:<6} closed form {:.8}  quadrature {:.8}  2pi/sqrt(1-r^2) {:.8}  rel_err {:.3e}",
            r.r, r.closed_form, r.quadrature, s, r.rel_err
        ));
    }
    for r in &rows {
        out.check(
            r.rel_err < 1e-4,
            "Theorem (fg) disc example",
            format!(
                "closed form {} vs quadrature {} at r={}",
                r.closed_form, r.quadrature, r.r
            ),
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ExitAngleJson {
    s_y: f64,
    s_x: f64,
    sin_psi: f64,
    psi: f64,
    recovered_phi: f64,
    traced_phi: f64,
    error: f64,
    clamped: bool,
    travel_times: Vec<f64>,
}

fn exit_angle(out: &mut Output, scn: &Scenario, s_y: f64, s_x: f64) -> Result<(), CliError> {
    let domain = domain_of(scn)?;
    let field = medium_of(scn, &domain)?;
    let table =
        TwoPointTable::build(s_y, s_x, 2, scn.exit_angle.spacing, &field, &domain).during("hodograph")?;
    let rec = exit_angle_from_hodograph(&table, &field, &domain).during("hodograph")?;
    let traced = table.samples[table.samples.len() / 2].exit_phi;
    let err = wrap_signed(rec.phi - traced).abs();
    out.json(
        "exit_angle.json",
        &ExitAngleJson {
            s_y,
            s_x: table.s_x[table.s_x.len() / 2],
            sin_psi: rec.sin_psi,
            psi: rec.psi,
            recovered_phi: rec.phi,
            traced_phi: traced,
            error: err,
            clamped: rec.clamped,
            travel_times: table.times(),
        },
    )?;
    out.line(format!(
        "s_y={s_y} s_x={s_x}: sin psi={:.10}, recovered phi={:.10}, traced phi={:.10}",
        rec.sin_psi, rec.phi, traced
    ));
    out.check(
        err < 1e-4,
        "exit-angle proposition",
        format!("recovered phi={}, traced phi={}", rec.phi, traced),
    );
    Ok(())
}

#[derive(Serialize)]
struct CoefficientsJson {
    recovered: Vec<f64>,
    truth: Option<Vec<f64>>,
    rms_error: Option<f64>,
    iterations: usize,
    final_residual: f64,
}

fn default_truth(len: usize) -> Vec<f64> {
    (0..len).map(|k| 0.05 * (-0.5f64).powi(k as i32)).collect()
}

fn reconstruct(
    out: &mut Output,
    scn: &Scenario,
    truth_cfg: Option<&Path>,
    basis_cfg: Option<&Path>,
    iters: Option<usize>,
    grid: Option<Resolution>,
) -> Result<(), CliError> {
    let loaded;
    let bscn = match basis_cfg {
        Some(p) => {
            loaded = Scenario::load(p)?;
            &loaded
        }
        None => scn,
    };
    let domain = domain_of(bscn)?;
    let base = medium_of(bscn, &domain)?;
    let sec = &bscn.reconstruct;
    let param = match &sec.basis {
        Some(specs) => {
            let basis = specs
                .iter()
                .map(|s| make_field(s, &domain))
                .collect::<rigidity_core::Result<Vec<_>>>()
                .config()?;
            ModelParameterization::new(base, basis).config()?
        }
        None => ModelParameterization::radial(base, 3, &domain).config()?,
    };
    let (truth_field, truth_coeffs) = match truth_cfg {
        Some(p) => {
            let t = Scenario::load(p)?;
            if t.domain != bscn.domain {
                return Err(CliError::Config("truth and basis scenarios use different domains".into()));
            }
            (medium_of(&t, &domain)?, None)
        }
        None => {
            let c = sec.truth_coefficients.clone().unwrap_or_else(|| default_truth(param.len()));
            (param.field(&c, &domain).config()?, Some(c))
        }
    };
    let (ns, nphi) = match grid {
        Some(g) => (g.n_s, g.n_s),
        None => (sec.ns, sec.nphi),
    };
    let mut problem =
        TomographyProblem::synthetic(&truth_field, param.clone(), &domain, ns, nphi).config_or("reconstruction")?;
    problem.lambda_reg = sec.lambda_reg;
    let init = vec![0.0; param.len()];
    let res: GaussNewtonResult = gauss_newton_solve(&problem, &init, &domain, iters.unwrap_or(sec.iters), sec.tol)
        .config_or("reconstruction")?;
    out.csv(
        "residual_history.csv",
        &["iteration", "rms_residual"],
        res.residual_history
            .iter()
            .enumerate()
            .map(|(k, r)| vec![k.to_string(), num(*r)]),
    )?;
    let rms_error = truth_coeffs.as_ref().map(|t| coefficient_rms_error(&res.coefficients, t));
    let first = res.residual_history.first().copied().unwrap_or(0.0);
    let last = res.residual_history.last().copied().unwrap_or(0.0);
    out.json(
        "coefficients.json",
        &CoefficientsJson {
            recovered: res.coefficients.clone(),
            truth: truth_coeffs.clone(),
            rms_error,
            iterations: res.iterations,
            final_residual: last,
        },
    )?;
    out.line(format!("{:>3} {:>16} {:>16}", "k", "recovered", "truth"));
    for (k, c) in res.coefficients.iter().enumerate() {
        let t = truth_coeffs.as_ref().map(|t| format!("{:>16.10}", t[k])).unwrap_or_else(|| format!("{:>16}", "-"));
        out.line(format!("{k:>3} {c:>16.10} {t}"));
    }
    out.line(format!(
        "{} iterations, RMS residual {:.3e} -> {:.3e}",
        res.iterations, first, last
    ));
    match rms_error {
        Some(e) => out.check(
            e < 1e-6,
            "uniqueness corollary",
            format!("coefficient rms error={e:e} (bound 1e-6)"),
        ),
        None => out.check(
            last <= first,
            "Gauss-Newton residual decrease",
            format!("{first:e} -> {last:e}"),
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct IdentityJson {
    samples: usize,
    seed: u64,
    max_residual: f64,
    mean_residual: f64,
    max_residual_as_printed: f64,
    min_bracket_excess: f64,
}

fn identity(out: &mut Output, scn: &Scenario, seed: u64) -> Result<(), CliError> {
    let n = scn.identity.samples;
    if n == 0 {
        return Err(CliError::Config("identity.samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut max_printed = 0.0f64;
    let mut min_excess = f64::INFINITY;
    for _ in 0..n {
        let (w1, w2) = (rng.gen_range(-1.4..1.4), rng.gen_range(-1.4..1.4));
        let (d1, d2) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let r = lemma_phi_identity_residual_with(w1, w2, d1, d2, CrossTermSign::Corrected);
        max = max.max(r);
        sum += r;
        max_printed = max_printed.max(lemma_phi_identity_residual_with(w1, w2, d1, d2, CrossTermSign::AsPrinted));
        let (n1, n2) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        min_excess = min_excess.min(rnn_bracket(n1, n2, w1, w2) - squared_difference(n1, n2, w1, w2));
    }
    let report = IdentityJson {
        samples: n,
        seed,
        max_residual: max,
        mean_residual: sum / n as f64,
        max_residual_as_printed: max_printed,
        min_bracket_excess: min_excess,
    };
    out.json("identity.json", &report)?;
    out.line(format!(
        "{n} tuples: max residual {:.3e}, mean {:.3e}; with the cross-term sign as printed: max {:.3e}",
        report.max_residual, report.mean_residual, report.max_residual_as_printed
    ));
    out.check(
        max < 1e-12,
        "Lemma (rnn) phi-identity",
        format!("max residual={max:e} (bound 1e-12)"),
    );
    out.check(
        min_excess >= -1e-12,
        "Lemma (rnn) bracket bound",
        format!("min of bracket minus squared difference={min_excess:e}"),
    );
    Ok(())
}
