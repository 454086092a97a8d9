use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use fracheat_core::asymptotics::{critical_dimension_table, run_scenario, ScenarioReport};
use fracheat_core::fields::{
    mild_solution_convolution, mild_solution_fourier_with, riesz_potential, solution_grid,
    InitialDatum, MassCheck, Route, SolutionField,
};
use fracheat_core::kernel::{build_profile_unchecked, default_profile_grid, ProfileTable};
use fracheat_core::specfun::{mittag_leffler, mittag_leffler_deriv};
use fracheat_core::{
    critical_exponent, predicted_rate, Assumptions, ModelParams, NormSpec, RadialGrid,
    ScaleWindow, WindowKind,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::criteria::{checks, run_check, CheckOutcome};
use crate::{resolve, Command, Failure, EXIT_NUMERICAL, EXIT_OK, EXIT_SCENARIO};

const DEFAULT_OUT: &str = "fracheat-out";

/// Route disagreement above which `solve` reports a numerical failure.
const ROUTE_TOLERANCE: f64 = 1e-3;

pub(crate) fn dispatch(cmd: &Command) -> Result<i32, Failure> {
    match cmd {
        Command::Ml { x, range, common } => ml(&resolve(common)?, common.alpha, x, range.as_deref()),
        Command::Profile { common } => profile(&resolve(common)?),
        Command::Solve { common } => solve(&resolve(common)?),
        Command::Potential { common } => potential(&resolve(common)?),
        Command::Verify { common } => verify(&resolve(common)?),
        Command::Rates { common } => rates(&resolve(common)?, common.p.unwrap_or(2.0)),
    }
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    version: &'static str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: T,
}

struct Output {
    dir: PathBuf,
    hash: String,
}

impl Output {
    fn new(cfg: &RunConfig) -> Result<Self, Failure> {
        let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        std::fs::create_dir_all(&dir)
            .map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Output {
            dir,
            hash: cfg.hash(),
        })
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn sidecar<T: Serialize>(&self, name: &str, body: T) -> Result<PathBuf, Failure> {
        let s = Sidecar {
            version: env!("CARGO_PKG_VERSION"),
            config_hash: &self.hash,
            body,
        };
        let mut text = serde_json::to_string_pretty(&s).map_err(|e| Failure::usage(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn say(cfg: &RunConfig, line: impl AsRef<str>) {
    if cfg.verbosity > 0 {
        println!("{}", line.as_ref());
    }
}

fn params_tag(p: &ModelParams) -> String {
    format!("a{}_s{}_N{}", p.alpha(), p.s(), p.dim())
}

fn ml(cfg: &RunConfig, alpha: Option<f64>, x: &[f64], range: Option<&str>) -> Result<i32, Failure> {
    let alpha = alpha
        .or(cfg.params.map(|p| p.alpha()))
        .ok_or_else(|| Failure::usage("ml needs --alpha"))?;
    let mut xs = x.to_vec();
    if let Some(r) = range {
        let parts: Vec<&str> = r.split(',').collect();
        let bad = || Failure::usage(format!("--range expects LO,HI,N, got {r:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n < 2 || !(hi > lo) {
            return Err(bad());
        }
        xs.extend((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64));
    }
    if xs.is_empty() {
        return Err(Failure::usage("ml needs --x or --range"));
    }
    let rows = xs
        .iter()
        .map(|&v| Ok((v, mittag_leffler(alpha, v)?, mittag_leffler_deriv(alpha, v)?)))
        .collect::<Result<Vec<_>, fracheat_core::Error>>()?;
    say(cfg, "x\tE_alpha(-x)\td/dx");
    for (v, e, d) in &rows {
        println!("{v}\t{e:.10}\t{d:.10e}");
    }
    if cfg.out.is_some() {
        let out = Output::new(cfg)?;
        let mut csv = String::from("x,E,dE\n");
        for (v, e, d) in &rows {
            writeln!(csv, "{v:.16e},{e:.16e},{d:.16e}").unwrap();
        }
        out.write(&format!("ml_alpha{alpha}.csv"), &csv)?;
    }
    Ok(EXIT_OK)
}

fn profile(cfg: &RunConfig) -> Result<i32, Failure> {
    let params = cfg.params_or_default();
    params.require_supported_dim()?;
    let grid = match &cfg.grid {
        Some(g) => g.build(params.dim())?,
        None => default_profile_grid(params.dim())?,
    };
    let table = build_profile_unchecked(&params, &grid, cfg.method)?;
    let out = Output::new(cfg)?;
    let tag = params_tag(&params);
    out.write(&format!("profile_{tag}.csv"), &table.to_csv())?;
    let side = table.sidecar();
    out.sidecar(&format!("profile_{tag}.json"), &side)?;
    say(
        cfg,
        format!(
            "profile {tag}: kappa={} kappa_hat={:.10e} mass_error={:.3e} status={}",
            side.kappa.map_or("none".into(), |k| format!("{k:.10e}")),
            side.kappa_hat,
            side.mass_error,
            side.status
        ),
    );
    if table.diagnostics.failures.is_empty() && cfg.grid.is_none() {
        crate::cache::store(&table)?;
    } else if !table.diagnostics.failures.is_empty() {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!(
                "profile invariants violated: {}",
                table.diagnostics.failures.join("; ")
            ),
        });
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RouteEntry {
    route: Route,
    file: String,
    mass_check: MassCheck,
}

#[derive(Serialize)]
struct SolveSidecar<'a> {
    params: ModelParams,
    datum: &'a InitialDatum,
    t: f64,
    nodes: usize,
    routes: Vec<RouteEntry>,
    /// `max |u_fourier / u_convolution − 1|` when both routes ran.
    agreement: Option<f64>,
}

fn solve(cfg: &RunConfig) -> Result<i32, Failure> {
    let params = cfg.params_or_default();
    params.require_supported_dim()?;
    let datum = cfg.datum_for(&params)?;
    if cfg.times.is_empty() {
        return Err(Failure::usage("solve needs at least one time (--t)"));
    }
    if let Some(t) = cfg.times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Failure::usage(format!("time must be positive, got {t}")));
    }
    let routes = if cfg.routes.is_empty() {
        vec![if datum.has_closed_form_transform() {
            Route::Fourier
        } else {
            Route::Convolution
        }]
    } else {
        cfg.routes.clone()
    };
    if routes.contains(&Route::Kernel) {
        return Err(Failure::usage("solve routes are fourier and convolution"));
    }
    let table = if routes.contains(&Route::Convolution) {
        Some(crate::cache::profile(&params, cfg.method)?)
    } else {
        None
    };
    let transform = if routes.contains(&Route::Fourier) {
        Some(datum.transform()?)
    } else {
        None
    };
    let out = Output::new(cfg)?;
    let mut worst: f64 = 0.0;
    for &t in &cfg.times {
        let grid = match &cfg.grid {
            Some(g) => g.build(params.dim())?,
            None => solution_grid(&params, &datum, t, 400)?,
        };
        let mut fields: Vec<SolutionField> = Vec::new();
        for route in &routes {
            let f = match route {
                Route::Fourier => mild_solution_fourier_with(
                    &datum,
                    transform.as_ref().unwrap(),
                    &params,
                    t,
                    &grid,
                )?,
                _ => mild_solution_convolution(&datum, table.as_ref().unwrap(), t, &grid)?,
            };
            fields.push(f);
        }
        let mut entries = Vec::new();
        for f in &fields {
            let file = format!("solution_t{t}_{}.csv", f.route.label());
            out.write(&file, &f.to_csv())?;
            say(
                cfg,
                format!(
                    "t={t} route={} mass={:.10e} relative_error={:.3e}",
                    f.route.label(),
                    f.mass_check.computed,
                    f.mass_check.relative_error
                ),
            );
            entries.push(RouteEntry {
                route: f.route,
                file,
                mass_check: f.mass_check,
            });
        }
        let agreement = (fields.len() == 2).then(|| {
            fields[0]
                .values()
                .iter()
                .zip(fields[1].values())
                .map(|(a, b)| if a == b { 0.0 } else { (a / b - 1.0).abs() })
                .fold(0.0, f64::max)
        });
        if let Some(a) = agreement {
            say(cfg, format!("t={t} route agreement={a:.3e}"));
            worst = worst.max(a);
        }
        out.sidecar(
            &format!("solution_t{t}.json"),
            SolveSidecar {
                params,
                datum: &datum,
                t,
                nodes: grid.len(),
                routes: entries,
                agreement,
            },
        )?;
    }
    if !(worst <= ROUTE_TOLERANCE) {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!("routes disagree by {worst:.3e} > {ROUTE_TOLERANCE:e}"),
        });
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PotentialSidecar<'a> {
    params: ModelParams,
    datum: &'a InitialDatum,
    points: usize,
}

fn potential(cfg: &RunConfig) -> Result<i32, Failure> {
    let params = cfg.params_or_default();
    params.require_supported_dim()?;
    let datum = cfg.datum_for(&params)?;
    let points: Vec<f64> = match &cfg.grid {
        Some(g) => g.build(params.dim())?.nodes().to_vec(),
        None => {
            let w = datum.width();
            let mut v = vec![0.0];
            v.extend_from_slice(RadialGrid::logarithmic(1e-2 * w, 1e3 * w, 200, params.dim())?.nodes());
            v
        }
    };
    let phi = riesz_potential(&datum, &params, &points)?;
    let out = Output::new(cfg)?;
    let mut csv = String::from("r,Phi\n");
    for (r, v) in points.iter().zip(&phi) {
        writeln!(csv, "{r:.16e},{v:.16e}").unwrap();
    }
    let tag = params_tag(&params);
    out.write(&format!("potential_{tag}.csv"), &csv)?;
    out.sidecar(
        &format!("potential_{tag}.json"),
        PotentialSidecar {
            params,
            datum: &datum,
            points: points.len(),
        },
    )?;
    say(cfg, format!("potential {tag}: Phi(0)={:.10e}", phi[0]));
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    scenarios: Vec<ScenarioRow>,
    criteria: &'a [CheckOutcome],
    pass: bool,
}

#[derive(Serialize)]
struct ScenarioRow {
    name: String,
    file: String,
    pass: bool,
    terminal_error: Option<f64>,
    measured_slope: Option<f64>,
    predicted_slope: Option<f64>,
}

fn csv_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.16e}"))
}

fn verify(cfg: &RunConfig) -> Result<i32, Failure> {
    if cfg.scenarios.is_empty() && cfg.criteria.is_empty() {
        return Err(Failure::usage("nothing to verify"));
    }
    for spec in &cfg.scenarios {
        spec.validate()?;
    }
    let out = Output::new(cfg)?;
    let mut tables: HashMap<(u64, u64, u32), ProfileTable> = HashMap::new();
    let mut rows = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for spec in &cfg.scenarios {
        let p = spec.params;
        let key = (p.alpha().to_bits(), p.s().to_bits(), p.dim());
        if !tables.contains_key(&key) {
            tables.insert(key, crate::cache::profile(&p, cfg.method)?);
        }
        let report: ScenarioReport = run_scenario(spec, &tables[&key])?;
        let count = seen.entry(spec.id.to_string()).or_insert(0);
        *count += 1;
        let name = if *count == 1 {
            spec.id.to_string()
        } else {
            format!("{}_{}", spec.id, count)
        };
        let file = format!("{name}.json");
        out.sidecar(&file, &report)?;
        out.write(&format!("{name}_curve.csv"), &report.curve_csv())?;
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}={:.3e}>{:.1e}", c.name, c.value, c.threshold))
            .collect();
        say(
            cfg,
            format!(
                "{name:<28} {} {}",
                if report.pass { "PASS" } else { "FAIL" },
                failed.join(" ")
            ),
        );
        rows.push(ScenarioRow {
            name,
            file,
            pass: report.pass,
            terminal_error: report.terminal_error,
            measured_slope: report.measured.as_ref().map(|m| m.slope),
            predicted_slope: report.predicted_slope,
        });
    }
    let mut outcomes = Vec::new();
    for c in &cfg.criteria {
        for check in checks().iter().filter(|k| k.criterion == *c) {
            let o = run_check(check);
            let note = match (&o.known_failure, o.pass) {
                (Some(k), false) => format!(" (known: {k})"),
                _ => String::new(),
            };
            say(
                cfg,
                format!(
                    "{:<5}{:<23} {} {}{note}",
                    o.criterion.to_string(),
                    o.name,
                    if o.pass { "PASS" } else { "FAIL" },
                    o.summary()
                ),
            );
            outcomes.push(o);
        }
    }
    let pass = rows.iter().all(|r| r.pass) && outcomes.iter().all(|o| o.pass);
    let mut csv = String::from("name,kind,pass,terminal_error,measured_slope,predicted_slope\n");
    for r in &rows {
        writeln!(
            csv,
            "{},scenario,{},{},{},{}",
            r.name,
            r.pass,
            csv_opt(r.terminal_error),
            csv_opt(r.measured_slope),
            csv_opt(r.predicted_slope)
        )
        .unwrap();
    }
    for o in &outcomes {
        writeln!(csv, "{}:{},criterion,{},,,", o.criterion, o.name, o.pass).unwrap();
    }
    out.write("summary.csv", &csv)?;
    out.sidecar(
        "summary.json",
        VerifySummary {
            scenarios: rows,
            criteria: &outcomes,
            pass,
        },
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_SCENARIO })
}

fn rates(cfg: &RunConfig, p: f64) -> Result<i32, Failure> {
    let params = cfg.params_or_default();
    params.require_supported_dim()?;
    let norm = NormSpec::strong(p)?;
    let datum = cfg.datum_for(&params)?;
    let beta = datum.beta();
    let assumptions = Assumptions {
        decay_class_n: datum.in_decay_class(params.n()),
        local_lp: datum.locally_bounded(),
        beta: beta.is_finite().then_some(beta),
    };
    println!(
        "alpha={} s={} N={} p={p} regime={:?} p_c={:?}",
        params.alpha(),
        params.s(),
        params.dim(),
        params.regime(),
        critical_exponent(&params)
    );
    let windows = [
        ("whole_space", WindowKind::WholeSpace),
        ("compact(mu=1)", WindowKind::Compact { mu: 1.0 }),
        ("exterior(nu=1)", WindowKind::Exterior { nu: 1.0 }),
        ("characteristic(0.5,2)", WindowKind::Characteristic { nu: 0.5, mu: 2.0 }),
    ];
    for (name, kind) in windows {
        let line = ScaleWindow::new(kind, &params, assumptions.beta)
            .and_then(|w| predicted_rate(&params, &w, &norm, &assumptions));
        match line {
            Ok(r) => println!(
                "{name:<24} t^{:.6} log={:?} profile={:?}",
                r.power_exponent(),
                r.log_correction,
                r.profile
            ),
            Err(e) => println!("{name:<24} {e}"),
        }
    }
    if p > 1.0 {
        let table = critical_dimension_table(params.alpha(), params.s(), p, &[1, 2, 3])?;
        println!("N\tcharacteristic\tcompact\tdominant\tthreshold");
        for e in table {
            println!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                e.dim, e.characteristic, e.compact, e.dominant, e.threshold
            );
        }
    }
    Ok(EXIT_OK)
}
