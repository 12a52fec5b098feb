use std::fmt::Display;

use num_complex::Complex64;
use rkcl::analysis::{
    self, cfl_order_sweep, convergence_study, critical_cfl, dispersion_curves, dispersion_table, eigen_trajectory,
    gershgorin, max_amplification, operator_eigenvalues, periodic_spectrum, spectrum, theta_grid, AnalysisError,
    LevelStatus, StudyConfig, DEFAULT_SPECTRUM_NODES, DTS_2D, FAST_DTS, PAPER_DTS, SWEEP_DTS,
};
use rkcl::closures::{builtin_pairs, cancellation_residuals, ClosureRow, DesignMethod};
use rkcl::evolve::{optimize, DeConfig, ObjectiveKind};
use rkcl::problems::{Problem, TraceShape};
use rkcl::report::{fmt_f64, Table};
use rkcl::{ClosurePair, Tableau};
use serde::Serialize;

use crate::config::Settings;
use crate::output::Output;
use crate::{CliError, Command, PairTableau, RunInfo};

fn data(e: impl Display) -> CliError {
    CliError::Data(e.to_string())
}

fn analysis_err(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::Config(m) => CliError::Usage(m),
        other => CliError::Data(other.to_string()),
    }
}

fn tableau(s: &Settings, flag: Option<String>, default: &str) -> Result<Tableau, CliError> {
    let name = s.get("tableau", flag, default.to_string())?;
    Tableau::resolve(&name).map_err(data)
}

fn pair(s: &Settings, flag: Option<String>, default: &str) -> Result<ClosurePair, CliError> {
    let name = s.get("pair", flag, default.to_string())?;
    ClosurePair::resolve(&name).map_err(data)
}

fn pair_tableau(s: &Settings, pt: PairTableau) -> Result<(ClosurePair, Tableau), CliError> {
    Ok((pair(s, pt.pair, "standard")?, tableau(s, pt.tableau, "ssprk3")?))
}

fn problem(s: &Settings, flag: Option<String>, trace: Option<String>) -> Result<Problem, CliError> {
    let id = s.get("problem", flag, "adv1d".to_string())?;
    let base = Problem::by_name(&id).map_err(data)?;
    match s.opt::<String>("trace", trace)? {
        None => Ok(base),
        Some(t) => match base {
            Problem::Advection1D { .. } => Ok(Problem::advection(t.parse::<TraceShape>().map_err(data)?)),
            _ => Err(CliError::Usage(format!("--trace applies to adv1d only, not {id}"))),
        },
    }
}

fn default_dts(p: &Problem) -> &'static [f64] {
    match p {
        Problem::Advection2D { .. } => &DTS_2D,
        _ => &PAPER_DTS,
    }
}

fn stability_poly(t: &Tableau) -> String {
    t.stability_polynomial().iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(";")
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

pub fn dispatch(cmd: Command, s: &Settings, out: &mut Output) -> Result<RunInfo, CliError> {
    match cmd {
        Command::Scalars { tableau: t } => scalars(s, out, t),
        Command::Residuals { pair: p, cfl, speed } => residuals(s, out, p, cfl, speed),
        Command::Converge { pt, problem: pr, cfl, trace, dts, fast, t_end, dump_trace } => {
            converge(s, out, pt, pr, cfl, trace, dts, fast, t_end, dump_trace)
        }
        Command::SweepCfl { pt, problem: pr, cfls, dts } => sweep(s, out, pt, pr, cfls, dts),
        Command::Spectrum { pt, nodes, cfl, speed, periodic } => spectrum_cmd(s, out, pt, nodes, cfl, speed, periodic),
        Command::CriticalCfl { pt, nodes } => critical(s, out, pt, nodes),
        Command::Gershgorin { pt, cfl, nodes } => gershgorin_cmd(s, out, pt, cfl, nodes),
        Command::Dispersion { pair: p, points } => dispersion(s, out, p, points),
        Command::Trajectory { pt, cfls, nodes } => trajectory(s, out, pt, cfls, nodes),
        Command::Optimize { tableau: t, objective, seed, fast, population, generations, penalty_nodes } => {
            optimize_cmd(s, out, t, objective, seed, fast, population, generations, penalty_nodes)
        }
        Command::Reproduce { table } => reproduce(s, out, table),
    }
}

#[derive(Serialize)]
struct ScalarsReport {
    tableau: String,
    stages: usize,
    classical_order: u32,
    scalars: rkcl::TableauScalars,
    solvable: bool,
    stability_polynomial: Vec<f64>,
}

fn scalars(s: &Settings, out: &mut Output, t: Option<String>) -> Result<RunInfo, CliError> {
    let tab = tableau(s, t, "ssprk3")?;
    s.finish()?;
    let sc = tab.boundary_scalars();
    let mut t = Table::new("scalars", &["scalar", "value", "exact"]).meta("tableau", tab.name());
    for (name, v, ex) in [
        ("P", sc.p, sc.exact.as_ref().map(|e| e.p.to_string())),
        ("Q", sc.q, sc.exact.as_ref().map(|e| e.q.to_string())),
        ("R", sc.r, sc.exact.as_ref().map(|e| e.r.to_string())),
        ("S", sc.s, sc.exact.as_ref().map(|e| e.s.to_string())),
    ] {
        t.push(vec![name.into(), v.into(), ex.unwrap_or_default().into()]);
    }
    out.table("scalars.csv", &t)?;
    let rep = ScalarsReport {
        tableau: tab.name().to_string(),
        stages: tab.stages(),
        classical_order: tab.classical_order(),
        solvable: tab.solvable(None),
        stability_polynomial: tab.stability_polynomial(),
        scalars: sc,
    };
    out.json("scalars.json", "scalars", &rep)?;
    Ok(RunInfo::default())
}

fn residuals(
    s: &Settings,
    out: &mut Output,
    p: Option<String>,
    cfl: Option<f64>,
    speed: Option<f64>,
) -> Result<RunInfo, CliError> {
    let pair = pair(s, p, "ssprk3/acc_only")?;
    let cfl = s.get("cfl", cfl, 0.5)?;
    let speed = s.get("speed", speed, 1.0)?;
    s.finish()?;
    let r = cancellation_residuals(&pair, cfl, speed).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut t = Table::new("residuals", &["pair", "sigma1", "sigma2", "res1", "res2"])
        .meta("cfl", fmt_f64(cfl))
        .meta("speed", fmt_f64(speed));
    t.push(vec![pair.name().into(), r.sigma1.into(), r.sigma2.into(), r.res1.into(), r.res2.into()]);
    out.table("residuals.csv", &t)?;
    out.json("residuals.json", "residuals", &r)?;
    Ok(RunInfo::default())
}

#[allow(clippy::too_many_arguments)]
fn converge(
    s: &Settings,
    out: &mut Output,
    pt: PairTableau,
    pr: Option<String>,
    cfl: Option<f64>,
    trace: Option<String>,
    dts: Option<String>,
    fast: bool,
    t_end: Option<f64>,
    dump_trace: Option<usize>,
) -> Result<RunInfo, CliError> {
    let (pair, tab) = pair_tableau(s, pt)?;
    let problem = problem(s, pr, trace)?;
    let cfl = positive("cfl", s.get("cfl", cfl, 0.5)?)?;
    let fast = s.flag("fast", fast)?;
    if fast && dts.is_some() {
        return Err(CliError::Usage("--fast and --dts are mutually exclusive".into()));
    }
    let default = if fast { &FAST_DTS[..] } else { default_dts(&problem) };
    let dts = s.list("dts", dts.as_deref(), default)?;
    let t_end = positive("t-end", s.get("t-end", t_end, 1.0)?)?;
    let every = s.get("dump-trace", dump_trace, 0usize)?;
    s.finish()?;
    let cfg = StudyConfig { cfl, t_end, dts, trace_every: every };
    let rep = convergence_study(&problem, &pair, &tab, &cfg).map_err(analysis_err)?;
    out.table("convergence.csv", &rep.to_table())?;
    if every > 0 {
        let mut t = Table::new("trace", &["dt", "step", "t", "l2"])
            .meta("problem", rep.problem.as_str())
            .meta("pair", pair.name());
        for l in &rep.levels {
            for &(step, time, e) in &l.trace {
                t.push(vec![l.dt.into(), step.into(), time.into(), e.into()]);
            }
        }
        out.table("trace.csv", &t)?;
    }
    out.json("convergence.json", "convergence", &rep)?;
    let diverged = rep.levels.iter().find_map(|l| match l.status {
        LevelStatus::Unstable { step, time } => Some(format!("dt = {} unstable at step {step} (t = {time})", l.dt)),
        LevelStatus::Ok => None,
    });
    Ok(RunInfo { seeds: Vec::new(), diverged })
}

fn sweep(
    s: &Settings,
    out: &mut Output,
    pt: PairTableau,
    pr: Option<String>,
    cfls: Option<String>,
    dts: Option<String>,
) -> Result<RunInfo, CliError> {
    let (pair, tab) = pair_tableau(s, pt)?;
    let problem = problem(s, pr, None)?;
    let default_cfls: Vec<f64> = (2..=14).map(|k| k as f64 / 10.0).collect();
    let cfls = s.list("cfls", cfls.as_deref(), &default_cfls)?;
    let dts = s.list("dts", dts.as_deref(), &SWEEP_DTS)?;
    s.finish()?;
    let rows = cfl_order_sweep(&problem, &pair, &tab, &cfls, &dts).map_err(analysis_err)?;
    let mut t = Table::new("cfl_sweep", &["cfl", "order", "unstable_levels"])
        .meta("problem", problem.label())
        .meta("pair", pair.name())
        .meta("tableau", tab.name())
        .meta("dts", dts.iter().map(|d| fmt_f64(*d)).collect::<Vec<_>>().join(";"));
    for r in &rows {
        t.push(vec![r.cfl.into(), r.order.unwrap_or(f64::NAN).into(), r.unstable_levels.into()]);
    }
    out.table("sweep.csv", &t)?;
    out.json("sweep.json", "cfl_sweep", &rows)?;
    Ok(RunInfo::default())
}

fn spectrum_cmd(
    s: &Settings,
    out: &mut Output,
    pt: PairTableau,
    nodes: Option<usize>,
    cfl: Option<f64>,
    speed: Option<f64>,
    periodic: bool,
) -> Result<RunInfo, CliError> {
    let periodic = s.flag("periodic", periodic)?;
    if periodic && pt.pair.is_some() {
        return Err(CliError::Usage("--periodic uses the interior stencil only; drop --pair".into()));
    }
    let nodes = s.get("nodes", nodes, DEFAULT_SPECTRUM_NODES)?;
    let cfl = positive("cfl", s.get("cfl", cfl, 0.5)?)?;
    if periodic {
        let tab = tableau(s, pt.tableau, "ssprk3")?;
        s.finish()?;
        let zs = periodic_spectrum(nodes, cfl).map_err(analysis_err)?;
        let mut t = Table::new("spectrum_periodic", &["re_z", "im_z", "abs_r"])
            .meta("tableau", tab.name())
            .meta("nodes", nodes)
            .meta("cfl", fmt_f64(cfl))
            .meta("stability_poly", stability_poly(&tab));
        for z in &zs {
            t.push(vec![z.re.into(), z.im.into(), tab.stability_function(*z).norm().into()]);
        }
        out.table("spectrum_periodic.csv", &t)?;
        out.json("spectrum_periodic.json", "spectrum_periodic", &zs)?;
        return Ok(RunInfo::default());
    }
    let (pair, tab) = pair_tableau(s, pt)?;
    let speed = positive("speed", s.get("speed", speed, 1.0)?)?;
    s.finish()?;
    let rep = spectrum(&pair, &tab, nodes, cfl, speed).map_err(analysis_err)?;
    out.table("spectrum.csv", &rep.to_table().meta("stability_poly", stability_poly(&tab)))?;
    out.json("spectrum.json", "spectrum", &rep)?;
    Ok(RunInfo::default())
}

fn critical(s: &Settings, out: &mut Output, pt: PairTableau, nodes: Option<usize>) -> Result<RunInfo, CliError> {
    let (pair, tab) = pair_tableau(s, pt)?;
    let nodes = s.get("nodes", nodes, DEFAULT_SPECTRUM_NODES)?;
    s.finish()?;
    let c = critical_cfl(&pair, &tab, nodes).map_err(analysis_err)?;
    let mut t = Table::new("critical_cfl", &["pair", "tableau", "nodes", "cfl", "saturated", "unstable_at_min"]);
    t.push(vec![
        c.pair.as_str().into(),
        c.tableau.as_str().into(),
        c.nodes.into(),
        c.cfl.into(),
        c.saturated.into(),
        c.unstable_at_min.into(),
    ]);
    out.table("critical_cfl.csv", &t)?;
    out.json("critical_cfl.json", "critical_cfl", &c)?;
    Ok(RunInfo::default())
}

fn gershgorin_cmd(
    s: &Settings,
    out: &mut Output,
    pt: PairTableau,
    cfl: Option<f64>,
    nodes: Option<usize>,
) -> Result<RunInfo, CliError> {
    let (pair, tab) = pair_tableau(s, pt)?;
    let cfl = positive("cfl", s.get("cfl", cfl, 1.0)?)?;
    let nodes = s.get("nodes", nodes, 64usize)?;
    s.finish()?;
    let g = gershgorin(&pair, &tab, cfl, nodes).map_err(analysis_err)?;
    out.table("gershgorin.csv", &g.to_table().meta("stability_poly", stability_poly(&tab)))?;
    out.json("gershgorin.json", "gershgorin", &g)?;
    Ok(RunInfo::default())
}

fn dispersion(s: &Settings, out: &mut Output, p: Option<String>, points: Option<usize>) -> Result<RunInfo, CliError> {
    let pair = pair(s, p, "standard")?;
    let points = s.get("points", points, 200usize)?;
    s.finish()?;
    if points == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    let curves = dispersion_curves(&pair, &theta_grid(points));
    out.table("dispersion.csv", &dispersion_table(&pair, &curves))?;
    out.json("dispersion.json", "dispersion", &curves)?;
    Ok(RunInfo::default())
}

fn trajectory(
    s: &Settings,
    out: &mut Output,
    pt: PairTableau,
    cfls: Option<String>,
    nodes: Option<usize>,
) -> Result<RunInfo, CliError> {
    let (pair, tab) = pair_tableau(s, pt)?;
    let default: Vec<f64> = (2..=12).map(|k| k as f64 / 10.0).collect();
    let cfls = s.list("cfls", cfls.as_deref(), &default)?;
    let nodes = s.get("nodes", nodes, DEFAULT_SPECTRUM_NODES)?;
    s.finish()?;
    let pts = eigen_trajectory(&pair, &tab, &cfls, nodes).map_err(analysis_err)?;
    let mut t = Table::new("trajectory", &["cfl", "re_z", "im_z", "abs_r"])
        .meta("pair", pair.name())
        .meta("tableau", tab.name())
        .meta("nodes", nodes)
        .meta("stability_poly", stability_poly(&tab));
    for p in &pts {
        t.push(vec![p.cfl.into(), p.z.re.into(), p.z.im.into(), p.abs_r.into()]);
    }
    out.table("trajectory.csv", &t)?;
    out.json("trajectory.json", "trajectory", &pts)?;
    Ok(RunInfo::default())
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    config: &'a DeConfig,
    objective: ObjectiveKind,
    result: &'a rkcl::evolve::OptimizeResult,
}

#[allow(clippy::too_many_arguments)]
fn optimize_cmd(
    s: &Settings,
    out: &mut Output,
    t: Option<String>,
    objective: Option<String>,
    seed: Option<u64>,
    fast: bool,
    population: Option<usize>,
    generations: Option<usize>,
    penalty_nodes: Option<usize>,
) -> Result<RunInfo, CliError> {
    let tab = tableau(s, t, "ssprk3")?;
    let kind: ObjectiveKind = s
        .get("objective", objective, "acc".to_string())?
        .replace('-', "_")
        .parse()
        .map_err(CliError::Usage)?;
    let seed = s.get("seed", seed, 1u64)?;
    let base = if tab.name() == "ssprk3" {
        DeConfig::ssprk3(seed)
    } else {
        let p_target = if tab.classical_order() >= 4 { 4 } else { 3 };
        DeConfig { p_target, tableau: tab.clone(), ..DeConfig::rk4(seed) }
    };
    let fast = s.flag("fast", fast)?;
    let cfg = DeConfig {
        population: s.get("population", population, base.population)?,
        generations: s.get("generations", generations, base.generations)?,
        penalty_nodes: s.get("penalty-nodes", penalty_nodes, base.penalty_nodes)?,
        dts: if fast { FAST_DTS.to_vec() } else { base.dts.clone() },
        ..base
    };
    s.finish()?;
    let res = optimize(&cfg, kind).map_err(|e| CliError::Usage(e.to_string()))?;
    out.text("best.stencil", &res.pair.to_file_string())?;
    out.table("history.csv", &res.history_table())?;
    out.json("result.json", "optimize", &OptimizeReport { config: &cfg, objective: kind, result: &res })?;
    Ok(RunInfo { seeds: vec![seed], diverged: None })
}

fn reproduce(s: &Settings, out: &mut Output, table: Option<String>) -> Result<RunInfo, CliError> {
    let table = s.get("table", table, "3".to_string())?;
    s.finish()?;
    let t = match table.as_str() {
        "1" => weights_table(DesignMethod::Ssprk3),
        "2" => weights_table(DesignMethod::Rk4),
        "3" => trace_orders()?,
        "4" => stability_summary()?,
        "5" => residual_table()?,
        "rk4-conv" => rk4_orders()?,
        "euler" => euler_orders()?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown table `{other}` (expected 1, 2, 3, 4, 5, rk4-conv, euler)"
            )))
        }
    };
    let name = format!("table_{table}");
    out.table(&format!("{name}.csv"), &t)?;
    out.json(&format!("{name}.json"), &t.kind, &TableJson::from(&t))?;
    Ok(RunInfo::default())
}

/// JSON mirror of a CSV table.
#[derive(Serialize)]
struct TableJson {
    meta: std::collections::BTreeMap<String, String>,
    columns: Vec<String>,
    rows: Vec<Vec<serde_json::Value>>,
}

impl From<&Table> for TableJson {
    fn from(t: &Table) -> Self {
        use rkcl::report::Cell;
        let cell = |c: &Cell| match c {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::Int(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Bool(b) => (*b).into(),
        };
        TableJson {
            meta: t.meta.iter().cloned().collect(),
            columns: t.columns.clone(),
            rows: t.rows.iter().map(|r| r.iter().map(cell).collect()).collect(),
        }
    }
}

fn variant(p: &ClosurePair) -> &str {
    p.name().rsplit('/').next().unwrap_or(p.name())
}

fn weights_table(method: DesignMethod) -> Table {
    let mut t = Table::new(
        "closure_weights",
        &["variant", "node", "w0", "w1", "w2", "w3", "w4", "sum_w", "moment1_minus_1", "sigma"],
    )
    .meta("integrator", method.key())
    .meta("weights", "published_rounded");
    for p in builtin_pairs(method) {
        let raw = p.raw().copied().unwrap_or([*p.node1().weights(), *p.node2().weights()]);
        for (node, w) in [(1u8, raw[0]), (2, raw[1])] {
            let row = ClosureRow::unchecked(node, w).expect("node 1 or 2");
            let (r0, r1) = row.consistency_residuals();
            let mut cells = vec![variant(&p).into(), (node as usize).into()];
            cells.extend(w.iter().map(|&x| x.into()));
            cells.extend([r0.into(), r1.into(), row.second_moment().sigma.into()]);
            t.push(cells);
        }
    }
    t
}

fn order_of(problem: &Problem, pair: &ClosurePair, tab: &Tableau, dts: &[f64]) -> Result<f64, CliError> {
    let rep = convergence_study(problem, pair, tab, &StudyConfig::new(0.5, dts)).map_err(analysis_err)?;
    Ok(if rep.flagged { f64::NAN } else { rep.order().unwrap_or(f64::NAN) })
}

fn trace_orders() -> Result<Table, CliError> {
    let tab = Tableau::ssprk3();
    let pairs = builtin_pairs(DesignMethod::Ssprk3);
    let mut t = Table::new("trace_orders", &["trace", "standard", "acc_only", "acc_stab"])
        .meta("tableau", "ssprk3")
        .meta("cfl", fmt_f64(0.5));
    for shape in TraceShape::ALL {
        let p = Problem::advection(shape);
        let mut row = vec![shape.key().into()];
        for pair in &pairs {
            row.push(order_of(&p, pair, &tab, &PAPER_DTS)?.into());
        }
        t.push(row);
    }
    Ok(t)
}

fn stability_summary() -> Result<Table, CliError> {
    let mut t = Table::new("stability_summary", &["integrator", "variant", "critical_cfl", "order", "stable_at_cfl1"])
        .meta("nodes", DEFAULT_SPECTRUM_NODES);
    let sin = Problem::advection(TraceShape::SinPi);
    for (method, tab) in [(DesignMethod::Ssprk3, Tableau::ssprk3()), (DesignMethod::Rk4, Tableau::rk4())] {
        for p in builtin_pairs(method) {
            let c = critical_cfl(&p, &tab, DEFAULT_SPECTRUM_NODES).map_err(analysis_err)?;
            let mu = operator_eigenvalues(&p, DEFAULT_SPECTRUM_NODES).map_err(analysis_err)?;
            let zs: Vec<Complex64> = mu.iter().map(|m| -m).collect();
            let stable = max_amplification(&tab, &zs) <= 1.0 + analysis::STABILITY_SLACK;
            let order = order_of(&sin, &p, &tab, &PAPER_DTS)?;
            t.push(vec![method.key().into(), variant(&p).into(), c.cfl.into(), order.into(), stable.into()]);
        }
    }
    Ok(t)
}

fn residual_table() -> Result<Table, CliError> {
    let mut t = Table::new("cancellation_residuals", &["variant", "sigma1", "sigma2", "res1", "res2"])
        .meta("cfl", fmt_f64(0.5))
        .meta("sigma", "mu2/2");
    for p in builtin_pairs(DesignMethod::Ssprk3) {
        let r = cancellation_residuals(&p, 0.5, 1.0).map_err(data)?;
        t.push(vec![variant(&p).into(), r.sigma1.into(), r.sigma2.into(), r.res1.into(), r.res2.into()]);
    }
    Ok(t)
}

fn problem_orders(kind: &str, tab: &Tableau, method: DesignMethod, problems: &[Problem]) -> Result<Table, CliError> {
    let mut t = Table::new(kind, &["problem", "standard", "acc_only", "acc_stab"]).meta("tableau", tab.name());
    let pairs = builtin_pairs(method);
    for p in problems {
        let mut row = vec![p.label().into()];
        for pair in &pairs {
            row.push(order_of(p, pair, tab, default_dts(p))?.into());
        }
        t.push(row);
    }
    Ok(t)
}

fn rk4_orders() -> Result<Table, CliError> {
    let problems = [Problem::advection(TraceShape::SinPi), Problem::burgers(), Problem::advection_2d()];
    problem_orders("rk4_orders", &Tableau::rk4(), DesignMethod::Rk4, &problems)
}

fn euler_orders() -> Result<Table, CliError> {
    problem_orders("euler_orders", &Tableau::ssprk3(), DesignMethod::Ssprk3, &[Problem::euler()])
}
