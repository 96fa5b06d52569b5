//! Subcommand implementations.

use std::io::Write;
use std::path::Path;

use expsamp_core::analysis::{check_kernel_conditions, AnalysisOptions};
use expsamp_core::error_lab::{
    jitter_experiment, rate_experiment, roundoff_experiment, ErrorReport, LabOptions,
    PerturbationReport,
};
use expsamp_core::sampling::{
    analyze_jump, classify_alignment, divergence_witness, evaluate_series, predict_jump_limit,
    JumpConstants, DEFAULT_ALIGN_TOL,
};
use expsamp_core::{
    AlphaEstimate, Error, KernelReport, KernelSpec, PerturbationMode, PiecewiseSignal,
};

use crate::config::{ExperimentConfig, ExperimentDecl, KernelDecl, SignalDecl};
use crate::format::{fmt_num, Table};
use crate::{CliError, Command, CommonArgs, ModeArg};

pub const TABLE_WS: [f64; 6] = [5.0, 10.0, 20.0, 50.0, 100.0, 200.0];

/// Golden table cells: `(t, values at TABLE_WS)`.
pub const GOLDEN_TABLES: [(f64, [f64; 6]); 3] = [
    (1.5, [3.0036, 2.8669, 2.8059, 2.7717, 2.7608, 2.7554]),
    (3.5, [2.25, 2.25, 2.25, 2.25, 2.25, 2.25]),
    (5.5, [1.0492, 1.1420, 1.1939, 1.2271, 1.2384, 1.2442]),
];

pub const DEFAULT_TABLE_TOL: f64 = 1e-3;
/// Table 2 is exact: every node with nonzero weight falls on a flat piece.
pub const EXACT_TABLE_TOL: f64 = 1e-6;

pub const FIGURE_POINTS: usize = 2000;
pub const FIGURE_WINDOW: (f64, f64) = (0.5, 8.0);

/// Kernel, signal and parameters after merging config file and flags.
pub struct Setup {
    pub kernel_id: String,
    pub kernel: KernelSpec,
    pub signal_id: String,
    pub signal: PiecewiseSignal,
    pub experiment: ExperimentDecl,
}

fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    ExperimentConfig::parse(&text)
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

pub fn resolve(
    common: &CommonArgs,
    default_kernel: &str,
    default_signal: &str,
) -> Result<Setup, CliError> {
    let config = match &common.config {
        Some(path) => read_config(path)?,
        None => ExperimentConfig::default(),
    };
    let (kernel_id, kernel_decl) = match (&common.kernel, &config.kernel) {
        (Some(name), _) => (name.clone(), KernelDecl::builtin(name).map_err(usage)?),
        (None, Some(KernelDecl::Builtin { name })) => {
            (name.clone(), KernelDecl::builtin(name).map_err(usage)?)
        }
        (None, Some(decl)) => ("config".to_string(), decl.clone()),
        (None, None) => (
            default_kernel.to_string(),
            KernelDecl::builtin(default_kernel).map_err(usage)?,
        ),
    };
    let (signal_id, signal_decl) = match (&common.signal, &config.signal) {
        (Some(name), _) => (name.clone(), SignalDecl::builtin(name).map_err(usage)?),
        (None, Some(decl)) => (
            decl.builtin.clone().unwrap_or_else(|| "config".to_string()),
            decl.clone(),
        ),
        (None, None) => (
            default_signal.to_string(),
            SignalDecl::builtin(default_signal).map_err(usage)?,
        ),
    };
    let kernel = kernel_decl.build().map_err(usage)?;
    let signal = signal_decl.build().map_err(usage)?;
    let mut experiment = config.experiment;
    if !common.w.is_empty() {
        experiment.w = common.w.clone();
    }
    if !common.t.is_empty() {
        experiment.t = common.t.clone();
    }
    if common.seed.is_some() {
        experiment.seed = common.seed;
    }
    if common.tol.is_some() {
        experiment.tol = common.tol;
    }
    if let Some(out) = &common.out {
        experiment.out = Some(out.display().to_string());
    }
    Ok(Setup {
        kernel_id,
        kernel,
        signal_id,
        signal,
        experiment,
    })
}

fn ws_or(experiment: &ExperimentDecl, default: &[f64]) -> Vec<f64> {
    if experiment.w.is_empty() {
        default.to_vec()
    } else {
        experiment.w.clone()
    }
}

fn out_path(experiment: &ExperimentDecl) -> Option<&Path> {
    experiment.out.as_deref().map(Path::new)
}

fn mode_of(
    flag: Option<ModeArg>,
    experiment: &ExperimentDecl,
) -> Result<PerturbationMode, CliError> {
    if let Some(m) = flag {
        return Ok(match m {
            ModeArg::Uniform => PerturbationMode::Uniform,
            ModeArg::Adversarial => PerturbationMode::Adversarial,
        });
    }
    match experiment.mode.as_deref() {
        None | Some("uniform") => Ok(PerturbationMode::Uniform),
        Some("adversarial") => Ok(PerturbationMode::Adversarial),
        Some(other) => Err(usage(format!(
            "unknown mode '{other}' (uniform, adversarial)"
        ))),
    }
}

fn mode_label(mode: PerturbationMode) -> &'static str {
    match mode {
        PerturbationMode::Uniform => "uniform",
        PerturbationMode::Adversarial => "adversarial",
    }
}

pub fn execute(
    command: &Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    match command {
        Command::KernelCheck { common, nu, grid } => kernel_check(common, *nu, *grid, stdout),
        Command::Table { id, common } => table(*id, common, stdout, stderr),
        Command::Figure { id, common } => figure(*id, common, stdout),
        Command::Jump { common } => jump(common, stdout, stderr),
        Command::Diverge { common, m_max } => diverge(common, *m_max, stdout, stderr),
        Command::Rate { common, nu, t_grid } => rate(common, *nu, *t_grid, stdout, stderr),
        Command::Roundoff {
            common,
            xi,
            trials,
            mode,
            t_grid,
        } => perturbation(
            Perturbation::RoundOff,
            common,
            *xi,
            *trials,
            *mode,
            *t_grid,
            stdout,
            stderr,
        ),
        Command::Jitter {
            common,
            rho,
            trials,
            mode,
            t_grid,
        } => perturbation(
            Perturbation::Jitter,
            common,
            *rho,
            *trials,
            *mode,
            *t_grid,
            stdout,
            stderr,
        ),
    }
}

/// `key = value` lines describing a kernel report.
pub fn report_lines(report: &KernelReport) -> Vec<(String, String)> {
    let mut lines = vec![
        ("kernel".to_string(), report.kernel.clone()),
        ("chi_at_one".into(), fmt_num(report.chi_at_one)),
        (
            "partition_max_residual".into(),
            fmt_num(report.partition_max_residual),
        ),
        (
            "partition_tolerance".into(),
            fmt_num(report.partition_tolerance),
        ),
        ("M_0".into(), fmt_num(report.m0)),
        ("nu".into(), fmt_num(report.nu)),
        ("M_nu".into(), fmt_num(report.m_nu)),
        ("psi_minus_at_one".into(), fmt_num(report.psi_minus_at_one)),
    ];
    let alpha = match report.alpha_estimate {
        AlphaEstimate::Constant(a) => fmt_num(a),
        AlphaEstimate::NonConstant { min, max } => {
            format!("non-constant [{}, {}]", fmt_num(min), fmt_num(max))
        }
    };
    lines.push(("alpha_estimate".into(), alpha));
    for &(k, m) in &report.mellin_at_2kpi {
        lines.push((
            format!("mellin_2kpi[{k}]"),
            format!("{} {}i", fmt_num(m.re), fmt_num(m.im)),
        ));
    }
    let jc = &report.jump_conditions;
    lines.push(("lower_half_implied_alpha".into(), fmt_num(jc.implied_alpha)));
    lines.push(("lower_half_pass".into(), jc.lower_pass.to_string()));
    lines.push(("upper_half_pass".into(), jc.upper_pass.to_string()));
    if let Some(w) = &report.moment_warning {
        lines.push(("moment_warning".into(), w.clone()));
    }
    if let Some(w) = &jc.hypothesis_warning {
        lines.push(("hypothesis_warning".into(), w.clone()));
    }
    lines.push(("admissible".into(), report.admissible().to_string()));
    lines.push(("consistent".into(), report.consistent().to_string()));
    lines.push(("pass".into(), report.passes().to_string()));
    lines
}

fn kernel_check(
    common: &CommonArgs,
    nu: Option<f64>,
    grid: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = resolve(common, "combo", "worked-example")?;
    let mut opts = AnalysisOptions::default();
    if let Some(nu) = nu.or(s.experiment.nu) {
        opts.nu = nu;
    }
    if let Some(g) = grid {
        opts.grid_size = g;
    }
    let report = check_kernel_conditions(&s.kernel, &opts)?;
    let lines = report_lines(&report);
    for (k, v) in &lines {
        writeln!(stdout, "{k} = {v}")?;
    }
    if let Some(path) = out_path(&s.experiment) {
        let mut t = Table::new(&["key", "value"]);
        for (k, v) in lines {
            t.push(vec![k, v]);
        }
        t.emit(Some(path), stdout)?;
    }
    Ok(if report.passes() { 0 } else { 1 })
}

fn table(
    id: u8,
    common: &CommonArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = resolve(common, "combo", "worked-example")?;
    let (t, golden) = GOLDEN_TABLES[(id - 1) as usize];
    let mut tol = s.experiment.tol.unwrap_or(DEFAULT_TABLE_TOL);
    if id == 2 {
        tol = tol.min(EXACT_TABLE_TOL);
    }
    let ws = ws_or(&s.experiment, &TABLE_WS);
    let constants = JumpConstants::from_kernel(&s.kernel);
    let jump = s.signal.jump_at(t)?;
    let mut out = Table::new(&["w", "value", "predicted_limit", "abs_diff"]);
    let mut mismatches = Vec::new();
    for &w in &ws {
        let value = evaluate_series(&s.kernel, &s.signal, w, t)?;
        let case = classify_alignment(w, t, DEFAULT_ALIGN_TOL)?;
        let predicted = match predict_jump_limit(&constants, &jump, case) {
            Ok(p) => Some(p),
            Err(Error::NoLimit(_)) => None,
            Err(e) => return Err(e.into()),
        };
        out.push(vec![
            fmt_num(w),
            fmt_num(value),
            predicted.map(fmt_num).unwrap_or_default(),
            predicted
                .map(|p| fmt_num((value - p).abs()))
                .unwrap_or_default(),
        ]);
        if let Some(i) = TABLE_WS.iter().position(|&g| g == w) {
            if (value - golden[i]).abs() > tol {
                mismatches.push(format!(
                    "table {id} w={}: value {} differs from {} by more than {}",
                    fmt_num(w),
                    fmt_num(value),
                    fmt_num(golden[i]),
                    fmt_num(tol)
                ));
            }
        }
    }
    out.emit(out_path(&s.experiment), stdout)?;
    for m in &mismatches {
        writeln!(stderr, "mismatch: {m}")?;
    }
    Ok(if mismatches.is_empty() { 0 } else { 1 })
}

fn figure(id: u8, common: &CommonArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let s = resolve(common, "combo", "worked-example")?;
    let table = if id == 1 {
        let mut t = Table::new(&["t", "chi"]);
        for j in 1..=FIGURE_POINTS {
            let u = j as f64 / 200.0;
            t.push(vec![fmt_num(u), fmt_num(s.kernel.eval(u)?)]);
        }
        t
    } else {
        let w = s
            .experiment
            .w
            .first()
            .copied()
            .unwrap_or(if id == 2 { 5.0 } else { 10.0 });
        let series = format!("S_{}", fmt_num(w));
        let mut t = Table::new(&["t", "f", &series]);
        let (lo, hi) = FIGURE_WINDOW;
        for i in 0..FIGURE_POINTS {
            let x = lo + (hi - lo) * i as f64 / (FIGURE_POINTS - 1) as f64;
            t.push(vec![
                fmt_num(x),
                fmt_num(s.signal.eval(x)?),
                fmt_num(evaluate_series(&s.kernel, &s.signal, w, x)?),
            ]);
        }
        t
    };
    table.emit(out_path(&s.experiment), stdout)?;
    Ok(0)
}

fn jump(
    common: &CommonArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = resolve(common, "combo", "worked-example")?;
    let ws = ws_or(&s.experiment, &TABLE_WS);
    let ts = if s.experiment.t.is_empty() {
        s.signal.jumps().iter().map(|j| j.location).collect()
    } else {
        s.experiment.t.clone()
    };
    let constants = JumpConstants::from_kernel(&s.kernel);
    let mut out = Table::new(&[
        "kernel-id",
        "signal-id",
        "w",
        "t",
        "alignment",
        "value",
        "predicted",
        "abs-error",
    ]);
    let mut failures = 0;
    for &t in &ts {
        let analysis = analyze_jump(&s.kernel, &constants, &s.signal, t, &ws, DEFAULT_ALIGN_TOL)?;
        for m in &analysis.measured {
            let err = m.abs_error();
            if let (Some(tol), Some(e)) = (s.experiment.tol, err) {
                if e > tol {
                    failures += 1;
                    writeln!(
                        stderr,
                        "mismatch: t={} w={}: error {} > {}",
                        fmt_num(t),
                        fmt_num(m.w),
                        fmt_num(e),
                        fmt_num(tol)
                    )?;
                }
            }
            out.push(vec![
                s.kernel_id.clone(),
                s.signal_id.clone(),
                fmt_num(m.w),
                fmt_num(t),
                m.alignment.label().to_string(),
                fmt_num(m.value),
                m.predicted.map(fmt_num).unwrap_or_default(),
                err.map(fmt_num).unwrap_or_default(),
            ]);
        }
    }
    out.emit(out_path(&s.experiment), stdout)?;
    Ok(if failures == 0 { 0 } else { 1 })
}

fn diverge(
    common: &CommonArgs,
    m_max: Option<i64>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = resolve(common, "bspline2", "unit-step")?;
    let t = s.experiment.t.first().copied().unwrap_or(2.0);
    let m_max = m_max.or(s.experiment.m_max).unwrap_or(40);
    let tol = s.experiment.tol.unwrap_or(DEFAULT_TABLE_TOL);
    let witness = divergence_witness(&s.kernel, &s.signal, t, m_max)?;
    let mut out = Table::new(&["sequence", "m", "w", "value"]);
    for (label, seq) in [("aligned", &witness.aligned), ("offset", &witness.offset)] {
        for &(m, w, v) in seq.iter() {
            out.push(vec![
                label.to_string(),
                m.to_string(),
                fmt_num(w),
                fmt_num(v),
            ]);
        }
    }
    out.emit(out_path(&s.experiment), stdout)?;
    writeln!(
        stderr,
        "aligned_sequence_limit = {}",
        fmt_num(witness.aligned_sequence_limit)
    )?;
    writeln!(
        stderr,
        "offset_sequence_limit = {}",
        fmt_num(witness.offset_sequence_limit)
    )?;
    writeln!(stderr, "gap = {}", fmt_num(witness.gap))?;
    writeln!(stderr, "expected_gap = {}", fmt_num(witness.expected_gap))?;
    writeln!(stderr, "cauchy_ok = {}", witness.cauchy_ok)?;
    let pass = witness.cauchy_ok && (witness.gap - witness.expected_gap).abs() <= tol;
    Ok(if pass { 0 } else { 1 })
}

fn lab_options(t_grid: Option<usize>, experiment: &ExperimentDecl) -> LabOptions {
    let mut opts = LabOptions::default();
    if let Some(n) = t_grid.or(experiment.t_grid) {
        opts.t_grid = n;
    }
    opts
}

fn constituent(report: &ErrorReport, key: &str) -> String {
    report
        .constituents
        .get(key)
        .map(|&v| fmt_num(v))
        .unwrap_or_default()
}

fn rate(
    common: &CommonArgs,
    nu: Option<f64>,
    t_grid: Option<usize>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = resolve(common, "combo", "log")?;
    let nu = nu.or(s.experiment.nu).unwrap_or(0.5);
    let ws = ws_or(&s.experiment, &[10.0, 20.0, 50.0, 100.0, 200.0]);
    let opts = lab_options(t_grid, &s.experiment);
    let mut out = Table::new(&[
        "w",
        "nu",
        "bound",
        "empirical",
        "pass",
        "M_0",
        "M_nu",
        "omega",
        "sup_norm",
    ]);
    let mut failures = 0;
    for &w in &ws {
        let r = rate_experiment(&s.kernel, &s.signal, w, nu, &opts)?;
        if !r.pass {
            failures += 1;
            writeln!(
                stderr,
                "bound violated at w={}: {} > {}",
                fmt_num(w),
                fmt_num(r.empirical),
                fmt_num(r.bound)
            )?;
        }
        out.push(vec![
            fmt_num(w),
            fmt_num(nu),
            fmt_num(r.bound),
            fmt_num(r.empirical),
            r.pass.to_string(),
            constituent(&r, "M_0"),
            constituent(&r, "M_nu"),
            constituent(&r, "omega"),
            constituent(&r, "sup_norm"),
        ]);
    }
    out.emit(out_path(&s.experiment), stdout)?;
    Ok(if failures == 0 { 0 } else { 1 })
}

#[derive(Clone, Copy)]
enum Perturbation {
    RoundOff,
    Jitter,
}

#[allow(clippy::too_many_arguments)]
fn perturbation(
    which: Perturbation,
    common: &CommonArgs,
    size: Option<f64>,
    trials: Option<usize>,
    mode: Option<ModeArg>,
    t_grid: Option<usize>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let default_signal = match which {
        Perturbation::RoundOff => "worked-example",
        Perturbation::Jitter => "log",
    };
    let s = resolve(common, "combo", default_signal)?;
    let (size_name, size) = match which {
        Perturbation::RoundOff => ("xi", size.or(s.experiment.xi).unwrap_or(1e-3)),
        Perturbation::Jitter => ("rho", size.or(s.experiment.rho).unwrap_or(1e-4)),
    };
    let trials = trials.or(s.experiment.trials).unwrap_or(10);
    let seed = s.experiment.seed.unwrap_or(0);
    let mode = mode_of(mode, &s.experiment)?;
    let ws = ws_or(&s.experiment, &[10.0, 50.0]);
    let opts = lab_options(t_grid, &s.experiment);
    let mut header = vec![
        "w",
        size_name,
        "trials",
        "seed",
        "mode",
        "bound_kind",
        "bound",
        "empirical",
        "pass",
        "M_0",
        "M_1",
        "omega",
    ];
    if let Perturbation::Jitter = which {
        header.push("deriv_sup");
    }
    let mut out = Table::new(&header);
    let mut failures = 0;
    for &w in &ws {
        let report: PerturbationReport = match which {
            Perturbation::RoundOff => {
                roundoff_experiment(&s.kernel, &s.signal, w, size, trials, seed, mode, &opts)?
            }
            Perturbation::Jitter => {
                jitter_experiment(&s.kernel, &s.signal, w, size, trials, seed, mode, &opts)?
            }
        };
        for r in [&report.local, &report.total] {
            if !r.pass {
                failures += 1;
                writeln!(
                    stderr,
                    "{} bound violated at w={}: {} > {}",
                    r.kind.label(),
                    fmt_num(w),
                    fmt_num(r.empirical),
                    fmt_num(r.bound)
                )?;
            }
            let mut row = vec![
                fmt_num(w),
                fmt_num(size),
                trials.to_string(),
                seed.to_string(),
                mode_label(mode).to_string(),
                r.kind.label().to_string(),
                fmt_num(r.bound),
                fmt_num(r.empirical),
                r.pass.to_string(),
                constituent(r, "M_0"),
                constituent(r, "M_1"),
                constituent(r, "omega"),
            ];
            if let Perturbation::Jitter = which {
                row.push(constituent(r, "deriv_sup"));
            }
            out.push(row);
        }
    }
    out.emit(out_path(&s.experiment), stdout)?;
    Ok(if failures == 0 { 0 } else { 1 })
}
