//! Command implementations behind the `nonlocal-atlas` binary.
//!
//! Each command validates the whole configuration, computes everything in
//! memory, then writes its files in one pass. Floats are written as `%.12e`
//! and JSON keys are sorted, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::analyzer::{Analyzer, Thresholds};
use crate::aux_solver::AuxProblem;
use crate::bounds::BoundsContext;
use crate::config::{Command, RunConfig};
use crate::error::{AtlasError, Result};
use crate::io::{fmt_e, jnum, to_json_string};
use crate::model::{Nonlinearity, NonlinearityKind, NonlocalFunctional};
use crate::powerlike::{Mu0Kind, PowerlikeModel};
use crate::qmap::{tabulate_q, QMap, QTable, SamplingSpec};

/// Exit status for a command outcome.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(AtlasError::Config(_) | AtlasError::InvalidParameter(_)) => 2,
        Err(AtlasError::Verification(_)) => 4,
        Err(AtlasError::Io(_)) => 1,
        Err(_) => 3,
    }
}

/// Files written by a command.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
}

/// One named check of a `--verify` run.
#[derive(Debug, Clone)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Debug, Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn failures(&self) -> Vec<&Check> {
        self.0.iter().filter(|c| !c.passed).collect()
    }

    fn to_json(&self) -> Value {
        json!({
            "passed": self.failures().is_empty(),
            "checks": self.0.iter().map(|c| json!({
                "name": c.name,
                "passed": c.passed,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Collects output files and writes them after all computation is done.
struct Writer {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Writer {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn finish(self, checks: Option<Checks>) -> Result<Outcome> {
        let mut files = self.files;
        if let Some(c) = &checks {
            files.push(("verify.json".into(), to_json_string(&c.to_json())));
        }
        std::fs::create_dir_all(&self.dir)?;
        let mut out = Outcome::default();
        for (name, body) in files {
            let path = self.dir.join(name);
            std::fs::write(&path, body)?;
            out.files.push(path);
        }
        if let Some(c) = checks {
            let failed = c.failures();
            if !failed.is_empty() {
                let names: Vec<String> = failed.iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
                return Err(AtlasError::Verification(names.join("; ")));
            }
        }
        Ok(out)
    }
}

fn output_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn sampling(cfg: &RunConfig) -> SamplingSpec {
    cfg.analyzer_options().sampling
}

fn build_map(cfg: &RunConfig) -> Result<QMap> {
    let mesh = cfg.mesh()?;
    let aux = AuxProblem::new(mesh, cfg.nonlinearity()?)?.with_options(cfg.aux_options());
    Ok(QMap::new(aux, cfg.functional()?))
}

/// `Q` is provably increasing for functionals of `|u|` and for `∫|∇u|²`.
fn q_must_increase(g: &NonlocalFunctional) -> bool {
    !g.uses_gradient() || *g == NonlocalFunctional::LpOfGrad { gamma: 2.0 }
}

fn verify_table(checks: &mut Checks, map: &QMap, table: &QTable) {
    if q_must_increase(map.functional()) {
        let rep = table.certify_monotone();
        checks.push(
            "q_monotone",
            rep.monotone,
            match rep.violation {
                Some((i, j)) => format!("violation between samples {i} and {j}"),
                None => format!("{} samples strictly increasing", table.len()),
            },
        );
    }
    let nl = map.aux().nonlinearity();
    if let (NonlinearityKind::Power { p }, Some(gamma)) = (nl.kind(), map.functional().homogeneity()) {
        let (slope, _) = table.loglog_fit();
        let want = gamma / (2.0 - p);
        checks.push(
            "q_homogeneity",
            (slope - want).abs() <= 1e-3,
            format!("log-log slope {} vs {}", fmt_e(slope), fmt_e(want)),
        );
    }
}

pub fn cmd_qcurve(cfg: &RunConfig, out: Option<&Path>, verify: bool) -> Result<Outcome> {
    cfg.validate_for(Command::Qcurve)?;
    let map = build_map(cfg)?;
    let table = tabulate_q(&map, &sampling(cfg))?;
    let mut w = Writer::new(&output_dir(cfg, out));
    w.add("q.csv", table.to_csv());
    let mut meta = table.metadata_json();
    meta["mesh"] = map.aux().mesh().metadata_json();
    meta["lambda1"] = jnum(map.aux().lambda1());
    meta["nonlinearity"] = Value::String(map.aux().nonlinearity().label());
    meta["functional"] = Value::String(map.functional().label());
    w.add("q.meta.json", to_json_string(&meta));
    w.add("plot.gp", gnuplot_q());
    let checks = verify.then(|| {
        let mut c = Checks::default();
        verify_table(&mut c, &map, &table);
        c
    });
    w.finish(checks)
}

fn bracket_json(value: Option<f64>, bracket: Option<(f64, f64)>) -> Value {
    json!({
        "value": value.map_or(Value::Null, jnum),
        "bracket": bracket.map_or(Value::Null, |(a, b)| json!([jnum(a), jnum(b)])),
    })
}

struct FixedPointRow {
    alpha: f64,
    tangential: bool,
    s: f64,
    g_value: f64,
    g_residual: f64,
    pde_residual: f64,
    profile: Option<String>,
    error: Option<String>,
}

struct LambdaReport {
    lambda: f64,
    json: Value,
    rows: Vec<FixedPointRow>,
    checks: Vec<(String, bool, String)>,
}

struct WindowReport {
    index: usize,
    thresholds: Thresholds,
    lambdas: Vec<LambdaReport>,
}

fn analyze_lambda(an: &Analyzer, i: usize, th: &Thresholds, lambda: f64) -> Result<LambdaReport> {
    let set = an.admissible_set(i, lambda)?;
    let fps = an.find_fixed_points(i, lambda)?;
    let opts = an.options();
    let mesh = an.map().aux().mesh();
    let mut rows = Vec::new();
    for fp in &fps {
        match an.reconstruct_solution(lambda, fp.alpha) {
            Ok(rec) => rows.push(FixedPointRow {
                alpha: rec.alpha,
                tangential: fp.tangential,
                s: rec.s,
                g_value: rec.g_value,
                g_residual: rec.g_residual,
                pde_residual: rec.pde_residual,
                profile: Some(mesh.field_csv(&rec.solution.w)?),
                error: None,
            }),
            Err(e @ (AtlasError::GMismatch { .. } | AtlasError::OutOfRange { .. })) => rows.push(FixedPointRow {
                alpha: fp.alpha,
                tangential: fp.tangential,
                s: f64::NAN,
                g_value: f64::NAN,
                g_residual: f64::NAN,
                pde_residual: f64::NAN,
                profile: None,
                error: Some(e.to_string()),
            }),
            Err(e) => return Err(e),
        }
    }
    let mut checks = Vec::new();
    let tag = format!("w{i}_lambda_{}", fmt_e(lambda));
    for r in &rows {
        let ok = r.error.is_none()
            && r.pde_residual <= opts.tol_pde
            && r.g_residual <= opts.tol_g * (1.0 + r.alpha);
        checks.push((
            format!("{tag}_solution"),
            ok,
            match &r.error {
                Some(e) => e.clone(),
                None => format!(
                    "alpha {} residual {} g-mismatch {}",
                    fmt_e(r.alpha),
                    fmt_e(r.pde_residual),
                    fmt_e(r.g_residual)
                ),
            },
        ));
    }
    if let (Some(l0), Some(lt)) = (th.lambda0, th.lambda0_tilde) {
        if lambda < l0 * (1.0 - 1e-6) {
            checks.push((format!("{tag}_below_lambda0"), rows.len() >= 2, format!("{} fixed points", rows.len())));
        }
        if lambda > lt * (1.0 + 1e-6) {
            checks.push((format!("{tag}_above_lambda0_tilde"), rows.is_empty(), format!("{} fixed points", rows.len())));
        }
    }
    let nl = an.map().aux().nonlinearity();
    let w = an.window(i)?;
    checks.push((
        format!("{tag}_interval_order"),
        set.inf0_followed_by_0inf(),
        "every I_inf_0 followed by an I_0_inf".into(),
    ));
    let coercive_only = w.max_value < lambda * nl.beta() / an.lambda1();
    checks.push((
        format!("{tag}_interval_types"),
        set.is_empty() || set.all_inf_inf() == coercive_only,
        format!("all I_inf_inf = {}, A_i < lambda beta/lambda1 = {coercive_only}", set.all_inf_inf()),
    ));
    let json = json!({
        "i": i,
        "lambda": jnum(lambda),
        "window": { "lo": jnum(w.lo), "hi": jnum(w.hi), "max": jnum(w.max_value), "argmax": jnum(w.argmax) },
        "intervals": set.intervals.iter().map(|iv| json!({
            "lo": jnum(iv.lo),
            "hi": jnum(iv.hi),
            "type": iv.type_tag(),
        })).collect::<Vec<_>>(),
        "fixed_points": rows.iter().map(|r| {
            let mut v = json!({
                "alpha": jnum(r.alpha),
                "tangential": r.tangential,
                "g_residual": jnum(r.g_residual),
                "pde_residual": jnum(r.pde_residual),
            });
            if let Some(e) = &r.error {
                v["error"] = Value::String(e.clone());
            }
            v
        }).collect::<Vec<_>>(),
        "lambda0": bracket_json(th.lambda0, th.lambda0_bracket),
        "lambda0_tilde": bracket_json(th.lambda0_tilde, th.lambda0_tilde_bracket),
        "sharp": th.sharp.map_or(Value::Null, |(v, a)| json!({ "value": jnum(v), "argmax": jnum(a) })),
        "note": th.note.clone(),
    });
    Ok(LambdaReport {
        lambda,
        json,
        rows,
        checks,
    })
}

pub fn cmd_analyze(cfg: &RunConfig, out: Option<&Path>, verify: bool) -> Result<Outcome> {
    cfg.validate_for(Command::Analyze)?;
    let map = build_map(cfg)?;
    let coef = cfg.coefficient()?;
    let windows = cfg.window_indices(coef.windows().len())?;
    let an = Analyzer::new(map, coef, cfg.analyzer_options())?;
    let reports = windows
        .par_iter()
        .map(|&i| -> Result<WindowReport> {
            let th = an.thresholds(i)?;
            let lambdas = cfg.lambdas_for(th.lambda0, &[0.5])?;
            let lambdas = lambdas
                .iter()
                .map(|&l| analyze_lambda(&an, i, &th, l))
                .collect::<Result<Vec<_>>>()?;
            Ok(WindowReport {
                index: i,
                thresholds: th,
                lambdas,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w = Writer::new(&output_dir(cfg, out));
    let table = an.table();
    w.add("q.csv", table.to_csv());
    w.add("q.meta.json", table.metadata_string());
    let mut c_csv = String::from("window,lambda,c\n");
    let mut fp_csv = String::from("window,lambda,alpha,s,g,g_residual,pde_residual,tangential\n");
    let mut summary = Vec::new();
    for rep in &reports {
        for &(l, c) in &rep.thresholds.c_curve {
            writeln!(c_csv, "{},{},{}", rep.index, fmt_e(l), fmt_e(c)).unwrap();
        }
        for (k, lr) in rep.lambdas.iter().enumerate() {
            w.add(format!("window_{}_lambda_{k}.json", rep.index), to_json_string(&lr.json));
            for (j, r) in lr.rows.iter().enumerate() {
                writeln!(
                    fp_csv,
                    "{},{},{},{},{},{},{},{}",
                    rep.index,
                    fmt_e(lr.lambda),
                    fmt_e(r.alpha),
                    fmt_e(r.s),
                    fmt_e(r.g_value),
                    fmt_e(r.g_residual),
                    fmt_e(r.pde_residual),
                    u8::from(r.tangential)
                )
                .unwrap();
                if let Some(p) = &r.profile {
                    w.add(format!("profile_w{}_l{k}_{j}.csv", rep.index), p.clone());
                }
            }
        }
        summary.push(json!({
            "i": rep.index,
            "lambda0": bracket_json(rep.thresholds.lambda0, rep.thresholds.lambda0_bracket),
            "lambda0_tilde": bracket_json(rep.thresholds.lambda0_tilde, rep.thresholds.lambda0_tilde_bracket),
            "solutions": rep.lambdas.iter().map(|l| json!({
                "lambda": jnum(l.lambda),
                "count": l.rows.len(),
            })).collect::<Vec<_>>(),
        }));
    }
    w.add("c_lambda.csv", c_csv);
    w.add("fixed_points.csv", fp_csv);
    w.add(
        "summary.json",
        to_json_string(&json!({
            "mesh": an.map().aux().mesh().metadata_json(),
            "lambda1": jnum(an.lambda1()),
            "nonlinearity": an.map().aux().nonlinearity().label(),
            "functional": an.map().functional().label(),
            "coefficient": an.coefficient().label(),
            "windows": summary,
        })),
    );
    w.add("plot.gp", gnuplot_analyze(&reports));
    let checks = verify.then(|| {
        let mut c = Checks::default();
        verify_table(&mut c, an.map(), table);
        for rep in &reports {
            let th = &rep.thresholds;
            if let (Some(a), Some(b)) = (th.lambda0, th.lambda0_tilde) {
                c.push(format!("w{}_threshold_order", rep.index), a <= b, format!("{} <= {}", fmt_e(a), fmt_e(b)));
            } else {
                c.push(
                    format!("w{}_thresholds", rep.index),
                    false,
                    th.note.clone().unwrap_or_else(|| "no threshold bracketed".into()),
                );
            }
            for lr in &rep.lambdas {
                for (n, ok, d) in &lr.checks {
                    c.push(n.clone(), *ok, d.clone());
                }
            }
        }
        c
    });
    w.finish(checks)
}

pub fn cmd_powerlike(cfg: &RunConfig, out: Option<&Path>, verify: bool) -> Result<Outcome> {
    cfg.validate_for(Command::Powerlike)?;
    let mesh = cfg.mesh()?;
    let p = cfg.powerlike_p()?;
    let g = cfg.functional()?;
    let coef = cfg.coefficient()?;
    let model = PowerlikeModel::new(mesh.clone(), p, g)?;
    let windows = cfg.window_indices(coef.windows().len())?;
    let kappa = (p - 2.0) / model.gamma();
    let mu0 = model.mu0(&coef);
    let mut checks = Checks::default();
    let mut window_json = Vec::new();
    let mut curve_csv = String::from("window,alpha,lambda\n");
    let mut sol_csv = String::from("window,lambda,alpha,s,tangential,residual\n");
    // closed-form lower bound of the sin family: a(π/2 + iπ) = 1
    let sin_bound = (std::f64::consts::FRAC_PI_2 / model.c_v()).powf(-kappa);
    for &i in &windows {
        let win = *coef.window(i)?;
        let (l0, argmax) = model.threshold(&coef, i)?;
        let exact = model.exactness(&coef, i)?;
        for k in 1..=256 {
            let a = win.lo + win.width() * k as f64 / 257.0;
            writeln!(curve_csv, "{i},{},{}", fmt_e(a), fmt_e(model.lambda_of_alpha(&coef, a)?)).unwrap();
        }
        let mut sols_json = Vec::new();
        for l in cfg.lambdas_for(Some(l0), &[0.5, 1.0])? {
            let sols = model.enumerate_scaled_solutions(&coef, i, l)?;
            let mut arr = Vec::new();
            for s in &sols {
                let r = model.scaled_residual(&coef, l, s.alpha)?;
                checks.push(format!("w{i}_lambda_{}_scaled_residual", fmt_e(l)), r <= 1e-8, fmt_e(r));
                writeln!(
                    sol_csv,
                    "{i},{},{},{},{},{}",
                    fmt_e(l),
                    fmt_e(s.alpha),
                    fmt_e(s.s),
                    u8::from(s.tangential),
                    fmt_e(r)
                )
                .unwrap();
                arr.push(json!({
                    "alpha": jnum(s.alpha),
                    "s": jnum(s.s),
                    "tangential": s.tangential,
                    "residual": jnum(r),
                }));
            }
            sols_json.push(json!({ "lambda": jnum(l), "count": sols.len(), "solutions": arr }));
        }
        let mut wj = json!({
            "i": i,
            "lo": jnum(win.lo),
            "hi": jnum(win.hi),
            "lambda0": jnum(l0),
            "argmax": jnum(argmax),
            "exactness": exact,
            "scans": sols_json,
        });
        if coef.label().starts_with("abs_sin") && !coef.label().contains("weight") && win.hi - win.lo > 3.0 {
            wj["sin_lower_bound"] = jnum(sin_bound);
            checks.push(format!("w{i}_sin_lower_bound"), l0 >= sin_bound * (1.0 - 1e-12), format!("{} >= {}", fmt_e(l0), fmt_e(sin_bound)));
        }
        window_json.push(wj);
    }
    let scaled_mu0 = match mu0.kind {
        Mu0Kind::Finite => model.c_v().powf(kappa) * mu0.value,
        Mu0Kind::Zero => 0.0,
        Mu0Kind::Infinite => f64::INFINITY,
    };
    let mut doc = json!({
        "p": jnum(p),
        "gamma": jnum(model.gamma()),
        "c_v": jnum(model.c_v()),
        "normalized_residual": jnum(model.residual()),
        "mu0": { "kind": mu0.kind, "value": jnum(mu0.value), "limit_of_lambda": jnum(scaled_mu0) },
        "mesh": mesh.metadata_json(),
        "coefficient": coef.label(),
        "functional": model.functional().label(),
        "windows": window_json,
    });
    if p > 2.0 && mu0.kind == Mu0Kind::Finite && windows.contains(&0) {
        let (l0, _) = model.threshold(&coef, 0)?;
        doc["small_alpha_regime"] = Value::String(if scaled_mu0 < l0 {
            format!(
                "one solution for lambda <= {}, two for lambda in ({}, {})",
                fmt_e(scaled_mu0),
                fmt_e(scaled_mu0),
                fmt_e(l0)
            )
        } else {
            format!("one solution for lambda < {}", fmt_e(scaled_mu0))
        });
    }
    checks.push(
        "normalized_residual",
        model.residual() <= 1e-8 * model.v().norm_inf().max(1.0),
        fmt_e(model.residual()),
    );
    if verify && p < 2.0 {
        let nl = Nonlinearity::new(NonlinearityKind::Power { p })?;
        let aux = AuxProblem::new(mesh.clone(), nl)?.with_options(cfg.aux_options());
        let an = Analyzer::new(QMap::new(aux, *model.functional()), coef.clone(), cfg.analyzer_options())?;
        let mut cv_json = Vec::new();
        for &i in &windows {
            let (l0, _) = model.threshold(&coef, i)?;
            let cv = model.cross_validate(&an, i, &[0.5 * l0])?;
            checks.push(
                format!("w{i}_cross_validation"),
                cv.passes(),
                format!(
                    "threshold dev {} fixed-point dev {} Q^-1 dev {}",
                    fmt_e(cv.threshold_deviation),
                    fmt_e(cv.fixed_point_deviation),
                    fmt_e(cv.q_inverse_deviation)
                ),
            );
            cv_json.push(json!({
                "i": i,
                "generic": jnum(cv.threshold_generic),
                "closed_form": jnum(cv.threshold_closed),
                "relative_deviation": jnum(cv.threshold_deviation),
            }));
        }
        doc["cross_validation"] = Value::Array(cv_json);
    }
    let mut w = Writer::new(&output_dir(cfg, out));
    w.add("powerlike.json", to_json_string(&doc));
    w.add("lambda_alpha.csv", curve_csv);
    w.add("scaled_solutions.csv", sol_csv);
    w.add("v.csv", mesh.field_csv(model.v())?);
    w.add("plot.gp", gnuplot_powerlike());
    w.finish(verify.then_some(checks))
}

pub fn cmd_bounds(cfg: &RunConfig, out: Option<&Path>, verify: bool) -> Result<Outcome> {
    cfg.validate_for(Command::Bounds)?;
    let map = build_map(cfg)?;
    let coef = cfg.coefficient()?;
    let windows = cfg.window_indices(coef.windows().len())?;
    let ctx = BoundsContext::new(map.aux().mesh(), map.functional())?;
    let nl = map.aux().nonlinearity().clone();
    let slack = cfg.bounds_slack();
    let an = Analyzer::new(map, coef, cfg.analyzer_options())?;
    let table = an.table();
    let report = ctx.check_table(&nl, table, slack);
    let mut csv = String::from("s,lower,Q,upper\n");
    for p in table.samples() {
        let lo = ctx.q_lower(&nl, p.s).unwrap_or(f64::NAN);
        let hi = ctx.q_upper(&nl, p.s).unwrap_or(f64::NAN);
        writeln!(csv, "{},{},{},{}", fmt_e(p.s), fmt_e(lo), fmt_e(p.q), fmt_e(hi)).unwrap();
    }
    let mut checks = Checks::default();
    checks.push(
        "q_sandwich",
        report.holds(),
        format!("{} samples checked, {} violations", report.checked, report.violations.len()),
    );
    let per_window = windows
        .par_iter()
        .map(|&i| -> Result<(usize, crate::bounds::Lambda0Bounds, Option<f64>)> {
            let b = ctx.lambda0_bounds(&nl, an.coefficient(), i)?;
            Ok((i, b, an.thresholds(i)?.lambda0))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut wj = Vec::new();
    for (i, b, l0) in &per_window {
        let inside = l0.map(|l| b.contains(l, slack));
        checks.push(
            format!("w{i}_lambda0_sandwich"),
            inside.unwrap_or(false),
            format!(
                "{} <= {} <= {}",
                b.lower.map_or("absent".into(), fmt_e),
                l0.map_or("none".into(), fmt_e),
                fmt_e(b.upper)
            ),
        );
        wj.push(json!({
            "i": i,
            "lower": b.lower.map_or(Value::Null, jnum),
            "upper": jnum(b.upper),
            "lambda0": l0.map_or(Value::Null, jnum),
            "contained": inside,
            "note": if b.lower.is_none() { Value::String("f is unbounded: no lower bound".into()) } else { Value::Null },
        }));
    }
    let doc = json!({
        "constants": ctx.to_json(),
        "nonlinearity": nl.label(),
        "sup_f": nl.sup().map_or(Value::Null, jnum),
        "sandwich": {
            "checked": report.checked,
            "violations": report.violations.iter().map(|&(s, lo, q, hi)| json!({
                "s": jnum(s), "lower": jnum(lo), "q": jnum(q), "upper": hi.map_or(Value::Null, jnum),
            })).collect::<Vec<_>>(),
            "min_q_over_lower": jnum(report.lower_ratio),
            "max_q_over_upper": report.upper_ratio.map_or(Value::Null, jnum),
            "holds": report.holds(),
        },
        "windows": wj,
        "slack": jnum(slack),
    });
    let mut w = Writer::new(&output_dir(cfg, out));
    w.add("bounds.json", to_json_string(&doc));
    w.add("bounds.csv", csv);
    w.add("plot.gp", gnuplot_bounds());
    w.finish(verify.then_some(checks))
}

fn gnuplot_q() -> String {
    "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\nset xlabel 's'\nset ylabel 'Q(s)'\n\
plot 'q.csv' using 1:2 with linespoints title 'Q'\n"
        .into()
}

fn gnuplot_analyze(reports: &[WindowReport]) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str("set output 'c_lambda.png'\nset logscale x\nset xlabel 'lambda'\nset ylabel 'c(lambda)'\n");
    let plots: Vec<String> = reports
        .iter()
        .map(|r| format!("'c_lambda.csv' using ($1=={0}?$2:1/0):3 with lines title 'window {0}'", r.index))
        .collect();
    if !plots.is_empty() {
        writeln!(s, "plot {}", plots.join(", ")).unwrap();
    }
    s.push_str("unset logscale x\nset output 'profiles.png'\nset xlabel 'x'\nset ylabel 'u'\n");
    let mut profiles = Vec::new();
    for r in reports {
        for (k, l) in r.lambdas.iter().enumerate() {
            for (j, row) in l.rows.iter().enumerate() {
                if row.profile.is_some() {
                    profiles.push(format!(
                        "'profile_w{}_l{k}_{j}.csv' using 2:3 with lines title 'w{} l{k} #{j}'",
                        r.index, r.index
                    ));
                }
            }
        }
    }
    if !profiles.is_empty() {
        writeln!(s, "plot {}", profiles.join(", ")).unwrap();
    }
    s
}

fn gnuplot_powerlike() -> String {
    "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'alpha'\nset ylabel 'lambda(alpha)'\n\
plot 'lambda_alpha.csv' using 2:3 with lines title 'lambda(alpha)'\n"
        .into()
}

fn gnuplot_bounds() -> String {
    "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\nset xlabel 's'\n\
plot 'bounds.csv' using 1:2 with lines title 'lower', '' using 1:3 with points title 'Q', '' using 1:4 with lines title 'upper'\n"
        .into()
}
