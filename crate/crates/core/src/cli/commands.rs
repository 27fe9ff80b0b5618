use super::medium_file::{self, LoadedMedium};
use super::output::{dat, fmt_f64, fmt_opt, Artifacts, Csv};
use super::{parse_lambda, parse_lambda_grid, parse_list, usage, Command, CommonArgs, RuleArg, RunConfig};
use super::{EXIT_FAILURE, EXIT_OK, EXIT_WARNINGS};
use crate::error::{Error, Result};
use crate::front::FrontConfig;
use crate::homog::{
    corrector_limits_check, epsilon_sweep, homogenized_speed, rtilde_integral_check, second_order_profile, speed_curve,
    speed_derivative_formula, CurveConfig, Lambda, Monotonicity, MuRule, SweepConfig,
};
use crate::medium::{default_temperature_grid, DegeneracyTrend};
use crate::par::Execution;
use crate::temperature::MeshConfig;
use crate::wave::{solve_travelling_wave, wave_residuals, FixedPointConfig};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::Path;

/// Bound on `|∫ℛ̃|` used for warnings.
const RTILDE_LIMIT: f64 = 1e-7;
/// Bound on the relative gap between the derivative formula and differences.
const DERIVATIVE_LIMIT: f64 = 1e-3;

pub(super) fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Wave {
            common,
            mu,
            strict,
            damping,
            max_iter,
            n_xi,
            regularize,
        } => {
            let solver = FixedPointConfig {
                damping,
                tol: common.tol,
                max_iter,
                front: front_config(&common, None)?,
                mesh: mesh_config(&common, n_xi),
                acknowledge_degenerate: !strict,
                regularize,
                ..FixedPointConfig::default()
            };
            cmd_wave(&common, mu, solver)
        }
        Command::SpeedCurve {
            common,
            lambda_grid,
            fd_rel,
            small_tol,
            large_tol,
        } => {
            let lambdas = parse_lambda_grid(&lambda_grid)?;
            for (name, v) in [("small_tol", small_tol), ("large_tol", large_tol)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(usage(name, format!("must be positive, got {v}")));
                }
            }
            let curve = CurveConfig {
                front: front_config(&common, common.grid)?,
                fd_rel,
                exec: exec(&common),
            };
            cmd_speed_curve(&common, lambdas, curve, small_tol, large_tol)
        }
        Command::Homogenize {
            common,
            eps_list,
            mu_rule,
            mu,
            lambda,
            mu_list,
            strict,
            n_xi,
        } => {
            let eps = parse_list("eps_list", &eps_list)?;
            let rule = match mu_rule {
                RuleArg::Fixed => MuRule::Fixed { mu },
                RuleArg::Linear => match parse_lambda(lambda.as_deref().unwrap_or("1"))? {
                    Lambda::Finite(l) => MuRule::Linear { lambda: l },
                    _ => return Err(usage("lambda", "the linear rule needs a finite positive λ")),
                },
                RuleArg::Custom => MuRule::Custom {
                    mus: parse_list("mu_list", mu_list.as_deref().unwrap_or(""))?,
                    lambda: parse_lambda(
                        lambda
                            .as_deref()
                            .ok_or_else(|| usage("lambda", "the custom rule needs the limit regime"))?,
                    )?,
                },
            };
            let mesh = mesh_config(&common, n_xi);
            let front = front_config(&common, None)?;
            let wave = FixedPointConfig {
                tol: common.tol,
                front,
                mesh,
                acknowledge_degenerate: !strict,
                ..FixedPointConfig::default()
            };
            // the corrector uses the same number of front steps per period as each wave
            let corrector = FrontConfig {
                steps: mesh.n_y * wave.front_refine,
                ..front
            };
            let sweep = SweepConfig {
                wave,
                corrector,
                exec: exec(&common),
            };
            cmd_homogenize(&common, eps, rule, sweep)
        }
        Command::Corrector { common, lambda, mu } => {
            let lambda = parse_lambda(&lambda)?;
            cmd_corrector(&common, lambda, mu, front_config(&common, common.grid)?)
        }
        Command::Check { medium, mu, out } => cmd_check(&medium, mu, out.as_deref()),
    }
}

fn exec(common: &CommonArgs) -> Execution {
    if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn front_config(common: &CommonArgs, steps: Option<usize>) -> Result<FrontConfig> {
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(usage("tol", format!("must be positive, got {}", common.tol)));
    }
    let mut cfg = FrontConfig {
        tol: common.tol,
        ..FrontConfig::default()
    };
    if let Some(n) = steps {
        cfg.steps = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn mesh_config(common: &CommonArgs, n_xi: usize) -> MeshConfig {
    MeshConfig {
        n_xi,
        n_y: common.grid.unwrap_or(MeshConfig::default().n_y),
        exec: exec(common),
        ..MeshConfig::default()
    }
}

fn load(common: &CommonArgs) -> Result<LoadedMedium> {
    medium_file::load(&common.medium)
}

fn status(code: i32) -> (&'static str, i32) {
    match code {
        EXIT_OK => ("ok", EXIT_OK),
        EXIT_WARNINGS => ("warnings", EXIT_WARNINGS),
        _ => ("failed", EXIT_FAILURE),
    }
}

/// Records a solver failure next to the manifest before reporting it.
fn fail(mut art: Artifacts, out: &Path, config: RunConfig, sha: String, err: Error) -> Result<i32> {
    art.add_json("summary.json", &json!({ "status": "failed", "error": err.to_string() }))?;
    art.finish(out, config, sha, status(EXIT_FAILURE), BTreeMap::new())?;
    eprintln!("flamefront: {err}");
    Ok(EXIT_FAILURE)
}

fn cmd_wave(common: &CommonArgs, mu: f64, solver: FixedPointConfig) -> Result<i32> {
    let mut art = Artifacts::new();
    let loaded = load(common)?;
    let medium = &loaded.medium;
    let config = RunConfig::Wave {
        medium: common.medium.clone(),
        out: common.out.clone(),
        mu,
        dat: common.dat,
        solver,
    };
    art.stage("parse");
    let wv = match solve_travelling_wave(medium, mu, &solver) {
        Ok(w) => w,
        Err(e @ (Error::Config { .. } | Error::Domain(_))) => return Err(e),
        Err(e) => return fail(art, &common.out, config, loaded.sha256, e),
    };
    art.stage("solve");

    let prof = wv.profile();
    let stages = wv.rate.stages();
    let n = stages.len();
    let mut front = Csv::new(&["y", "v", "h", "theta", "rate"]);
    for (i, y) in prof.y().iter().enumerate() {
        front.floats(&[*y, prof.v[i], prof.h[i], prof.theta[i], stages[i % n][0]]);
    }
    art.add("front.csv", front.into_bytes());
    let mut trace = Csv::new(&["y", "tau"]);
    for (y, t) in wv.temperature.y().iter().zip(&wv.trace) {
        trace.floats(&[*y, *t]);
    }
    art.add("trace.csv", trace.into_bytes());
    let mut temp = Vec::new();
    wv.temperature.write_csv(&mut temp)?;
    art.add("temperature.csv", temp);
    let mut hist = Csv::new(&["iteration", "defect"]);
    for (k, d) in wv.history.iter().enumerate() {
        hist.row(&[k.to_string(), fmt_f64(*d)]);
    }
    art.add("history.csv", hist.into_bytes());
    if common.dat {
        art.add(
            "front.dat",
            dat("y v", prof.y().iter().zip(&prof.v).map(|(y, v)| vec![*y, *v])),
        );
        art.add(
            "trace.dat",
            dat(
                "y tau",
                wv.temperature.y().iter().zip(&wv.trace).map(|(y, t)| vec![*y, *t]),
            ),
        );
    }

    let certs = &wv.certificates;
    let code = if certs.all_passed() { EXIT_OK } else { EXIT_WARNINGS };
    let report = medium.validate_assumptions(&default_temperature_grid())?;
    let acknowledged = !wv.small_period.holds && report.degeneracy != DegeneracyTrend::Growing;
    art.add_json(
        "summary.json",
        &json!({
            "status": status(code).0,
            "speed": wv.speed,
            "mu": mu,
            "period": medium.period(),
            "iterations": wv.iterations,
            "defect": wv.defect,
            "damping": wv.damping,
            "amplitude": prof.amplitude(),
            "max_slope": prof.max_slope(),
            "small_period": wv.small_period,
            "degeneracy": report.degeneracy,
            "degenerate_acknowledged": acknowledged,
            "residuals": wave_residuals(&wv, medium, mu),
            "temperature": {
                "depth": wv.temperature.depth,
                "n_xi": wv.temperature.nx(),
                "n_y": wv.temperature.ny(),
                "h1_seminorm": wv.temperature.h1_seminorm,
                "linear_residual": wv.temperature.linear_residual,
                "pivot_ratio": wv.temperature.pivot_ratio,
                "flux_balance": wv.temperature.flux_balance(medium),
            },
            "certificates": certs,
            "certificate_failures": certs.failures(),
        }),
    )?;
    let names = [
        "front_speed",
        "front_slope",
        "arctan",
        "envelope",
        "h1",
        "lower_bound",
        "nonnegative",
    ];
    let failed = certs.failures();
    let verdicts = names.iter().map(|n| (n.to_string(), !failed.contains(n))).collect();
    art.finish(&common.out, config, loaded.sha256, status(code), verdicts)?;
    Ok(code)
}

fn cmd_speed_curve(
    common: &CommonArgs,
    lambdas: Vec<f64>,
    curve: CurveConfig,
    small_tol: f64,
    large_tol: f64,
) -> Result<i32> {
    let mut art = Artifacts::new();
    let loaded = load(common)?;
    let rate = loaded.medium.effective_rate()?;
    let config = RunConfig::SpeedCurve {
        medium: common.medium.clone(),
        out: common.out.clone(),
        lambdas: lambdas.clone(),
        dat: common.dat,
        small_tol,
        large_tol,
        curve,
    };
    art.stage("parse");
    let sc = speed_curve(&rate, &lambdas, &curve)?;
    art.stage("solve");
    if sc.points.is_empty() {
        let err = Error::NonConvergence {
            solver: "speed curve",
            iterations: 0,
            residual: f64::INFINITY,
        };
        return fail(art, &common.out, config, loaded.sha256, err);
    }

    let mut csv = Csv::new(&[
        "lambda",
        "c",
        "dc_formula",
        "dc_fd",
        "dc_rel_err",
        "rtilde",
        "amplitude",
        "max_slope",
        "steps",
    ]);
    for p in &sc.points {
        csv.row(&[
            fmt_f64(p.lambda),
            fmt_f64(p.speed),
            fmt_f64(p.formula),
            fmt_f64(p.fd),
            fmt_f64(p.derivative_rel_err()),
            fmt_f64(p.rtilde),
            fmt_f64(p.amplitude),
            fmt_f64(p.max_slope),
            p.steps.to_string(),
        ]);
    }
    art.add("speed_curve.csv", csv.into_bytes());
    if common.dat {
        art.add(
            "speed_curve.dat",
            dat("lambda c", sc.points.iter().map(|p| vec![p.lambda, p.speed])),
        );
    }

    let margin = 10.0 * curve.front.tol;
    let monotone = match sc.monotonicity {
        Monotonicity::Insufficient => None,
        Monotonicity::Constant => Some(rate.is_constant()),
        m => Some(!rate.is_constant() && m.decreasing_with_margin(margin)),
    };
    let derivative_ok = sc.max_derivative_rel_err() < DERIVATIVE_LIMIT;
    let rtilde_ok = sc.max_rtilde() < RTILDE_LIMIT;
    let (lo, hi) = (lambdas[0], lambdas[lambdas.len() - 1]);
    let spans = hi / lo >= 1e3 * (1.0 - 1e-12);
    let limits = if spans {
        Some(corrector_limits_check(&sc)?)
    } else {
        None
    };

    let mut verdicts = BTreeMap::new();
    if let Some(m) = monotone {
        verdicts.insert("monotone".to_string(), m);
    }
    verdicts.insert("derivative".to_string(), derivative_ok);
    verdicts.insert("rtilde".to_string(), rtilde_ok);
    verdicts.insert("all_points_solved".to_string(), sc.failures.is_empty());
    if let Some(l) = &limits {
        verdicts.insert("small_lambda_limit".to_string(), l.small_lambda_gap < small_tol);
        verdicts.insert("large_lambda_limit".to_string(), l.large_lambda_gap < large_tol);
        verdicts.insert("w1inf_decreasing".to_string(), l.w1inf_decreasing);
        verdicts.insert("lambda_h_bounded".to_string(), l.lambda_h_bounded);
    }
    let code = if verdicts.values().all(|v| *v) {
        EXIT_OK
    } else {
        EXIT_WARNINGS
    };
    art.add_json(
        "summary.json",
        &json!({
            "status": status(code).0,
            "points": sc.points.len(),
            "failures": sc.failures,
            "rate_mean": sc.rate_mean,
            "rate_max": sc.rate_max,
            "monotonicity": sc.monotonicity,
            "required_margin": margin,
            "max_derivative_rel_err": sc.max_derivative_rel_err(),
            "max_rtilde": sc.max_rtilde(),
            "limits": limits,
            "verdicts": verdicts,
        }),
    )?;
    art.finish(&common.out, config, loaded.sha256, status(code), verdicts)?;
    Ok(code)
}

fn cmd_homogenize(common: &CommonArgs, eps: Vec<f64>, rule: MuRule, sweep: SweepConfig) -> Result<i32> {
    let mut art = Artifacts::new();
    let loaded = load(common)?;
    let config = RunConfig::Homogenize {
        medium: common.medium.clone(),
        out: common.out.clone(),
        eps: eps.clone(),
        rule: rule.clone(),
        dat: common.dat,
        sweep,
    };
    art.stage("parse");
    let res = epsilon_sweep(&loaded.medium, &rule, &eps, &sweep)?;
    art.stage("solve");

    let mut csv = Csv::new(&[
        "eps",
        "mu",
        "status",
        "c",
        "amplitude",
        "e1",
        "e2",
        "e1_over_eps",
        "e2_over_eps2",
        "trace_error",
        "max_slope",
        "slope_bound",
        "slope_ok",
        "gradient_error",
        "gradient_error_exact",
        "speed_error",
        "iterations",
        "order_amplitude",
        "order_e1",
        "order_e2",
    ]);
    let mut prev: Option<(f64, &crate::homog::SweepMetrics)> = None;
    let order = |a: Option<f64>, b: Option<f64>, ea: f64, eb: f64| match (a, b) {
        (Some(x), Some(y)) if x > 0.0 && y > 0.0 => Some((x / y).ln() / (ea / eb).ln()),
        _ => None,
    };
    for row in &res.rows {
        let Some(m) = &row.metrics else {
            let mut cells = vec![fmt_f64(row.eps), fmt_f64(row.mu), "failed".to_string()];
            cells.resize(20, String::new());
            csv.row(&cells);
            continue;
        };
        let (oa, o1, o2) = match prev {
            Some((pe, pm)) => (
                order(Some(pm.amplitude), Some(m.amplitude), pe, row.eps),
                order(pm.e1, m.e1, pe, row.eps),
                order(pm.e2, m.e2, pe, row.eps),
            ),
            None => (None, None, None),
        };
        csv.row(&[
            fmt_f64(row.eps),
            fmt_f64(row.mu),
            "ok".to_string(),
            fmt_f64(m.speed),
            fmt_f64(m.amplitude),
            fmt_opt(m.e1),
            fmt_opt(m.e2),
            fmt_opt(m.e1.map(|e| e / row.eps)),
            fmt_opt(m.e2.map(|e| e / (row.eps * row.eps))),
            fmt_f64(m.trace_error),
            fmt_f64(m.max_slope),
            fmt_opt(m.slope_bound),
            m.slope_ok.to_string(),
            fmt_f64(m.gradient_error),
            fmt_f64(m.gradient_error_exact),
            fmt_f64(m.speed_error),
            m.iterations.to_string(),
            fmt_opt(oa),
            fmt_opt(o1),
            fmt_opt(o2),
        ]);
        prev = Some((row.eps, m));
    }
    art.add("sweep.csv", csv.into_bytes());
    if let Some(q) = &res.second_order {
        let mut c = Csv::new(&["z", "Q", "Q_z"]);
        for k in 0..=1024 {
            let z = k as f64 / 1024.0;
            c.floats(&[z, q.eval(z), q.eval_z(z)]);
        }
        art.add("second_order.csv", c.into_bytes());
    }
    if common.dat {
        let rows = res
            .converged()
            .map(|(e, m)| vec![e, m.speed, m.amplitude, m.trace_error, m.gradient_error]);
        art.add("sweep.dat", dat("eps c amplitude trace_error gradient_error", rows));
    }

    let converged = res.converged().count();
    let trend_failures = res.trends.failures();
    let code = if converged == 0 {
        EXIT_FAILURE
    } else if trend_failures.is_empty() && !res.any_failed() {
        EXIT_OK
    } else {
        EXIT_WARNINGS
    };
    let failures: Vec<_> = res
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| json!({ "eps": r.eps, "error": e })))
        .collect();
    art.add_json(
        "summary.json",
        &json!({
            "status": status(code).0,
            "rule": res.rule,
            "lambda": res.lambda,
            "c0": res.c0,
            "trace_limit": res.trace_limit,
            "orders": res.orders,
            "trends": res.trends,
            "trend_failures": trend_failures,
            "failures": failures,
            "second_order_linear_discrepancy": res.second_order.as_ref().map(|q| q.linear_discrepancy),
        }),
    )?;
    let t = &res.trends;
    let mut verdicts = BTreeMap::new();
    for (name, v) in [
        ("e1_over_eps_decreasing", t.e1_over_eps_decreasing),
        ("e2_over_eps2_decreasing", t.e2_over_eps2_decreasing),
        ("amplitude_order", t.amplitude_order_ok),
        ("speed_error_decreasing", t.speed_error_decreasing),
        ("trace_error_decreasing", t.trace_error_decreasing),
        ("gradient_decreasing", t.gradient_decreasing),
        ("slope_estimate", t.slopes_ok),
        ("certificates", t.certificates_ok),
    ] {
        if let Some(v) = v {
            verdicts.insert(name.to_string(), v);
        }
    }
    verdicts.insert("all_points_solved".to_string(), !res.any_failed());
    art.finish(&common.out, config, loaded.sha256, status(code), verdicts)?;
    Ok(code)
}

fn cmd_corrector(common: &CommonArgs, lambda: Lambda, mu: Option<f64>, front: FrontConfig) -> Result<i32> {
    let mut art = Artifacts::new();
    let loaded = load(common)?;
    let medium = &loaded.medium;
    let config = RunConfig::Corrector {
        medium: common.medium.clone(),
        out: common.out.clone(),
        lambda,
        mu,
        dat: common.dat,
        front,
    };
    art.stage("parse");
    let rate = medium.effective_rate()?;
    let q = mu.map(|m| second_order_profile(&rate, m)).transpose()?;
    let hw = match homogenized_speed(lambda, medium, &front) {
        Ok(h) => h,
        Err(e @ (Error::Config { .. } | Error::Domain(_))) => return Err(e),
        Err(e) => return fail(art, &common.out, config, loaded.sha256, e),
    };
    art.stage("solve");

    let mut verdicts = BTreeMap::new();
    let mut cor_json = serde_json::Value::Null;
    if let Some(cor) = &hw.corrector {
        let sol = &cor.solution;
        let rt = cor.rtilde();
        let mut csv = Csv::new(&["z", "w", "h", "theta", "rtilde"]);
        for (i, z) in sol.profile.y().iter().enumerate() {
            csv.floats(&[*z, sol.profile.v[i], sol.profile.h[i], sol.profile.theta[i], rt[i]]);
        }
        art.add("corrector.csv", csv.into_bytes());
        if common.dat {
            art.add(
                "corrector.dat",
                dat(
                    "z w",
                    sol.profile.y().iter().zip(&sol.profile.v).map(|(z, w)| vec![*z, *w]),
                ),
            );
        }
        let rtilde = rtilde_integral_check(cor);
        verdicts.insert("rtilde".to_string(), rtilde < RTILDE_LIMIT);
        cor_json = json!({
            "dc_dlambda": speed_derivative_formula(cor),
            "rtilde_integral": rtilde,
            "amplitude": sol.profile.amplitude(),
            "max_slope": sol.profile.max_slope(),
            "w1inf": cor.w1inf(),
            "steps": sol.forcing.grid().steps(),
            "residuals": sol.residuals,
        });
    }
    if let Some(q) = &q {
        let mut c = Csv::new(&["z", "Q", "Q_z"]);
        for k in 0..=1024 {
            let z = k as f64 / 1024.0;
            c.floats(&[z, q.eval(z), q.eval_z(z)]);
        }
        art.add("second_order.csv", c.into_bytes());
    }
    let code = if verdicts.values().all(|v| *v) {
        EXIT_OK
    } else {
        EXIT_WARNINGS
    };
    art.add_json(
        "summary.json",
        &json!({
            "status": status(code).0,
            "lambda": hw.lambda,
            "c0": hw.speed,
            "abar": hw.abar,
            "bbar": hw.bbar,
            "gbar": hw.gbar,
            "trace_temperature": hw.gbar / hw.bbar,
            "u0_decay": hw.speed * hw.bbar / hw.abar,
            "rate_mean": rate.mean(),
            "rate_max": rate.max(),
            "corrector": cor_json,
            "second_order": q.as_ref().map(|q| json!({
                "mu": q.mu,
                "linear_discrepancy": q.linear_discrepancy,
            })),
        }),
    )?;
    art.finish(&common.out, config, loaded.sha256, status(code), verdicts)?;
    Ok(code)
}

fn cmd_check(medium_path: &Path, mu: Option<f64>, out: Option<&Path>) -> Result<i32> {
    let mut art = Artifacts::new();
    let loaded = medium_file::load(medium_path)?;
    let medium = &loaded.medium;
    if let Some(m) = mu {
        if !(m > 0.0 && m.is_finite()) {
            return Err(usage("mu", format!("must be positive, got {m}")));
        }
    }
    let report = medium.validate_assumptions(&default_temperature_grid())?;
    let small = mu.map(|m| medium.check_small_period(m));
    let mut verdicts: BTreeMap<String, bool> = report.checks.iter().map(|c| (c.id.to_string(), c.passed)).collect();
    if let Some(s) = small {
        verdicts.insert("small_period".to_string(), s.holds);
    }
    let code = if verdicts.values().all(|v| *v) {
        EXIT_OK
    } else {
        EXIT_WARNINGS
    };
    let value = json!({
        "status": status(code).0,
        "period": medium.period(),
        "trace_temperature": medium.trace_temperature(),
        "r_max": medium.rate.r_max(),
        "checks": report.checks,
        "degeneracy": report.degeneracy,
        "degeneracy_proxy": report.degeneracy_proxy,
        "small_period": small,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&value).map_err(|e| Error::Parse(e.to_string()))?
    );
    if let Some(dir) = out {
        art.add_json("check.json", &value)?;
        let config = RunConfig::Check {
            medium: medium_path.to_path_buf(),
            out: Some(dir.to_path_buf()),
            mu,
        };
        art.finish(dir, config, loaded.sha256, status(code), verdicts)?;
    }
    Ok(code)
}
