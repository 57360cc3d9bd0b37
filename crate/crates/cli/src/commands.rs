use nifrde::builtin::example8_coefficient;
use nifrde::lyapunov::{caputo_fractional_dini, dini_fractional, LyapunovForm};
use nifrde::nifrde_core::{solve_nifrde, SegmentKind};
use nifrde::special_functions::{ml_one, ml_two, ML_ARGUMENT_LIMIT};
use nifrde::stability::{
    probe_uniform_stability, solver_tolerance, verify_caputo_dini_sign, verify_comparison, verify_impulse_decrease,
    verify_quadratic_corollary, ProbeConfig, Verdict, DEFAULT_TOLERANCE,
};
use nifrde::{DiniEvalContext, MLParams, StabilityReport};

use crate::config::{self, FileConfig};
use crate::output::{num, Destination, Table};
use crate::registry::{self, Built, Params};
use crate::{CheckArgs, Cli, CliError, Command, Format, LyapArgs, MlArgs, ProbeArgs, ProblemArgs, SolveArgs};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => FileConfig::default(),
    };
    let out_cfg = file.output.clone();
    let format = match (cli.format, out_cfg.as_ref().and_then(|o| o.format.as_deref())) {
        (Some(f), _) => f,
        (None, None | Some("csv")) => Format::Csv,
        (None, Some("tsv")) => Format::Tsv,
        (None, Some(other)) => return Err(CliError::Config(format!("unknown output format {other:?}"))),
    };
    let explicit = cli.output.clone().or_else(|| out_cfg.and_then(|o| o.path).map(Into::into));
    let (name, result) = match cli.command {
        Command::Ml(a) => ("ml", ml(&a)),
        Command::Solve(a) => ("solve", solve(&a, &file)),
        Command::Lyap(a) => ("lyap", lyap(&a, &file)),
        Command::Check(a) => ("check", check(&a, &file)),
        Command::Probe(a) => ("probe", probe(&a, &file)),
    };
    let (table, violated) = result?;
    Destination::resolve(explicit.as_deref(), name, format).emit(&table, format)?;
    if violated > 0 {
        return Err(CliError::Violated(violated));
    }
    Ok(())
}

type Outcome = Result<(Table, usize), CliError>;

fn ml(a: &MlArgs) -> Outcome {
    let zs: Vec<f64> = match (a.z, a.z_from, a.z_to) {
        (Some(z), _, _) => vec![z],
        (None, Some(lo), Some(hi)) => {
            if !(a.z_step > 0.0) || hi < lo {
                return Err(CliError::Config("need z-from <= z-to and a positive z-step".into()));
            }
            let n = ((hi - lo) / a.z_step + 1e-9).floor() as usize;
            (0..=n).map(|i| lo + a.z_step * i as f64).collect()
        }
        _ => return Err(CliError::Config("give --z or --z-from/--z-to".into())),
    };
    if let Some(&z) = zs.iter().find(|z| z.abs() > ML_ARGUMENT_LIMIT) {
        return Err(nifrde::Error::Range { z, reason: format!("|z| exceeds {ML_ARGUMENT_LIMIT}") }.into());
    }
    let eval: Box<dyn Fn(f64) -> nifrde::Result<f64>> = match (a.q, a.alpha, a.beta) {
        (Some(q), _, _) => Box::new(move |z| ml_one(q, z)),
        (None, Some(alpha), Some(beta)) => {
            let p = MLParams::new(alpha, beta)?;
            Box::new(move |z| ml_two(p, z))
        }
        _ => return Err(CliError::Config("give --q or --alpha and --beta".into())),
    };
    let mut table = Table::new(["z", "value"]);
    for z in zs {
        table.push(vec![num(z), num(eval(z)?)]);
    }
    Ok((table, 0))
}

fn params(args: &ProblemArgs, file: &FileConfig) -> (Option<String>, Params) {
    let fp = &file.problem;
    let name = args.builtin.clone().or_else(|| fp.builtin.clone());
    let p = Params {
        q: args.q.or(fp.q),
        a: args.a.or(fp.a),
        gains: args.gains.clone().or_else(|| fp.gains.clone()),
        x0: args.x0.or(fp.x0),
        t0: args.t0.or(fp.t0),
        horizon: args.horizon.or(fp.horizon),
        impulses: args.impulses.or(fp.impulses),
        schedule: fp.schedule.clone(),
    };
    (name, p)
}

fn build(args: &ProblemArgs, file: &FileConfig, adjust: impl FnOnce(&str, &mut Params)) -> Result<Built, CliError> {
    let (name, mut p) = params(args, file);
    let name = name.ok_or_else(|| CliError::Config("no problem given: use --builtin or [problem] builtin".into()))?;
    adjust(&name, &mut p);
    registry::build(&name, &p)
}

fn steps_per_unit(steps: usize, built: &Built) -> Result<usize, CliError> {
    if steps == 0 {
        return Err(CliError::Config("steps must be positive".into()));
    }
    let span = built.problem.schedule.horizon - built.problem.t0;
    Ok(((steps as f64 / span).ceil() as usize).max(1))
}

fn solve(a: &SolveArgs, file: &FileConfig) -> Outcome {
    let built = build(&a.problem, file, |_, _| ())?;
    let steps = a.steps.or(file.solver.steps).unwrap_or(4096);
    let traj = solve_nifrde(&built.problem, steps_per_unit(steps, &built)?)?;
    let dim = built.problem.dim();
    let mut header: Vec<String> = vec!["t".into(), "segment_kind".into(), "k".into()];
    header.extend((1..=dim).map(|i| format!("x_{i}")));
    let exact = built.exact.as_ref().filter(|_| dim == 1);
    if exact.is_some() {
        header.extend(["exact_1".into(), "abs_err".into()]);
    }
    let mut table = Table::new(header);
    for seg in traj.segments() {
        for (&t, x) in seg.grid.iter().zip(&seg.values) {
            let mut row = vec![num(t), seg.kind.to_string(), seg.index.to_string()];
            row.extend(x.iter().map(|&v| num(v)));
            if let Some(e) = exact {
                let ex = e(seg.kind, seg.interval, t)?;
                row.extend([num(ex), num((x[0] - ex).abs())]);
            }
            table.push(row);
        }
    }
    Ok((table, 0))
}

fn lyap(a: &LyapArgs, file: &FileConfig) -> Outcome {
    if a.figure2 {
        if !(a.t_from > 0.0 && a.t_step > 0.0 && a.t_to >= a.t_from) {
            return Err(CliError::Config("figure2 needs 0 < t-from <= t-to and a positive t-step".into()));
        }
        let mut table = Table::new(["t", "f"]);
        let n = ((a.t_to - a.t_from) / a.t_step + 1e-9).floor() as usize;
        for i in 0..=n {
            let t = a.t_from + a.t_step * i as f64;
            table.push(vec![num(t), num(example8_coefficient(t))]);
        }
        return Ok((table, 0));
    }
    // Derivatives are evaluated from t0 = 0 unless told otherwise.
    let built = build(&a.problem, file, |_, p| {
        p.t0.get_or_insert(0.0);
    })?;
    let v = registry::candidate_from(&file.lyapunov, built.candidate.clone())?;
    if a.t.is_empty() || a.x.is_empty() {
        return Err(CliError::Config("give evaluation points with --t and --x".into()));
    }
    let mut table =
        Table::new(["t", "x", "dini_value", "caputo_dini_value", "closed_form_value", "oscillation"]);
    for &t in &a.t {
        for &x in &a.x {
            let ctx = DiniEvalContext::new(&built.problem, t, vec![x])?;
            let d = dini_fractional(&v, &ctx, None)?;
            let c = caputo_fractional_dini(&v, &ctx, None)?;
            table.push(vec![
                num(t),
                num(x),
                num(d.value),
                num(c.value),
                c.closed_form.map(num).unwrap_or_default(),
                num(d.oscillation.max(c.oscillation)),
            ]);
        }
    }
    Ok((table, 0))
}

fn report_table(reports: &[StabilityReport]) -> (Table, usize) {
    let mut table = Table::new(StabilityReport::CSV_HEADER.split(','));
    for r in reports {
        table.push(r.fields().to_vec());
    }
    (table, reports.iter().filter(|r| r.verdict == Verdict::Violated).count())
}

fn check(a: &CheckArgs, file: &FileConfig) -> Outcome {
    let built = build(&a.problem, file, |_, _| ())?;
    let v = registry::candidate_from(&file.lyapunov, built.candidate.clone())?;
    let p = &built.problem;
    let steps = a.steps.or(file.solver.steps).unwrap_or(4000);
    let traj = solve_nifrde(p, steps_per_unit(steps, &built)?)?;
    let base = a.tol.or(file.stability.tol).unwrap_or(DEFAULT_TOLERANCE);
    let tol = solver_tolerance(&traj, &v, base)?;

    let mut reports = vec![verify_comparison(&traj, &v, tol)];
    if matches!(v.form, LyapunovForm::Quadratic) {
        reports.extend(verify_quadratic_corollary(&traj, tol)?.reports().into_iter().cloned());
    }
    let radius = p.x0[0].abs().max(1e-3);
    let xs: Vec<Vec<f64>> = (-4..=4).map(|i| vec![radius * i as f64 / 4.0]).collect();
    reports.push(verify_impulse_decrease(&v, p, &xs, 16, tol)?);
    let sched = &p.schedule;
    let interior: Vec<(f64, Vec<f64>)> = traj
        .points()
        .filter(|(kind, k, t, _)| {
            let start = sched.flow_start(*k).max(p.t0);
            *kind == SegmentKind::Flow && *t > start + 1e-3 * (sched.flow_end(*k) - start) && *t < sched.flow_end(*k)
        })
        .map(|(_, _, t, x)| (t, x.to_vec()))
        .collect();
    let stride = (interior.len() / 60).max(1);
    let samples: Vec<(f64, Vec<f64>)> = interior.into_iter().step_by(stride).collect();
    reports.push(verify_caputo_dini_sign(&v, p, &samples, tol)?);
    Ok(report_table(&reports))
}

fn probe(a: &ProbeArgs, file: &FileConfig) -> Outcome {
    // A longer default horizon makes growth visible for the linear family.
    let built = build(&a.problem, file, |name, p| {
        if name == "example1-linear" && p.horizon.is_none() && p.schedule.is_none() {
            p.horizon = Some(10.0);
        }
    })?;
    let p = &built.problem;
    let epsilon = a.epsilon.or(file.stability.epsilon).unwrap_or(0.1);
    let t0_samples = match a.t0_samples.clone().or_else(|| file.stability.t0_samples.clone()) {
        Some(v) => v,
        None => {
            let sched = &p.schedule;
            let flows = (sched.impulse_count() + 1).min(2);
            (0..flows)
                .flat_map(|k| {
                    let start = sched.flow_start(k).max(p.t0);
                    [start, start + 0.5 * (sched.flow_end(k) - start)]
                })
                .collect()
        }
    };
    let mut cfg = ProbeConfig::new(epsilon, t0_samples);
    if let Some(d) = a.deltas.clone().or_else(|| file.stability.deltas.clone()) {
        cfg.delta_grid = d;
    }
    cfg.steps_per_unit = a.steps_per_unit;
    let out = probe_uniform_stability(p, &cfg)?;
    let mut table = Table::new(StabilityReport::CSV_HEADER.split(','));
    for (delta, sup) in &out.sweep {
        let verdict = if *sup < epsilon { Verdict::Holds } else { Verdict::Violated };
        table.push(vec![format!("probe_delta={}", num(*delta)), verdict.to_string(), num(epsilon - sup), String::new(), String::new()]);
    }
    let mut summary = out.report.clone();
    summary.name = match out.delta {
        Some(d) => format!("probe(delta={})", num(d)),
        None => "probe(no delta)".into(),
    };
    table.push(summary.fields().to_vec());
    Ok((table, usize::from(out.delta.is_none())))
}
