//! Quantitative error bounds and randomized experiments against them.
//!
//! Three bounds are implemented:
//!
//! * rate: `omega(f, w^-nu)[M_nu + 2 M_0] + 2^{nu+1} |f| M_nu w^-nu`;
//! * round-off, samples `f(e^{k/w}) - xi_k` with `|xi_k| <= xi`:
//!   `xi M_0`, and `(M_0 + M_1) omega(f, 1/w) + xi M_0` for the total error;
//! * time-jitter, samples `f(e^{k/w} + rho_k)` with `|rho_k| <= rho`:
//!   `rho |f'| M_0`, and `(M_0 + M_1) omega(f, 1/w) + rho |f'| M_0`.
//!
//! Sups over the half-line are taken on the signal window (for `t`) and on
//! the window widened to every node the series touches (for the norms and
//! the modulus of continuity).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::sup_absolute_moment;
use crate::error::{domain, Error, Result};
use crate::kernel::KernelSpec;
use crate::sampling::{evaluate_series, evaluate_series_with, node_window};
use crate::signal::PiecewiseSignal;

pub const PASS_REL_SLACK: f64 = 1e-9;
pub const PASS_ABS_SLACK: f64 = 1e-12;

pub fn within_bound(empirical: f64, bound: f64) -> bool {
    empirical <= bound * (1.0 + PASS_REL_SLACK) + PASS_ABS_SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Rate,
    RoundOff,
    RoundOffTotal,
    Jitter,
    JitterTotal,
}

impl BoundKind {
    pub fn label(&self) -> &'static str {
        match self {
            BoundKind::Rate => "rate",
            BoundKind::RoundOff => "roundoff",
            BoundKind::RoundOffTotal => "roundoff-total",
            BoundKind::Jitter => "jitter",
            BoundKind::JitterTotal => "jitter-total",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub kind: BoundKind,
    pub bound: f64,
    pub empirical: f64,
    pub constituents: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub pass: bool,
}

impl ErrorReport {
    fn new(
        kind: BoundKind,
        bound: f64,
        empirical: f64,
        constituents: BTreeMap<String, f64>,
        seed: Option<u64>,
    ) -> Self {
        Self {
            kind,
            bound,
            empirical,
            constituents,
            seed,
            pass: within_bound(empirical, bound),
        }
    }

    /// `key = value` lines, constituents in name order.
    pub fn to_kv_block(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind = {}", self.kind.label());
        let _ = writeln!(out, "bound = {:e}", self.bound);
        let _ = writeln!(out, "empirical = {:e}", self.empirical);
        for (k, v) in &self.constituents {
            let _ = writeln!(out, "{k} = {v:e}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        let _ = writeln!(out, "pass = {}", self.pass);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Independent uniform draws per node and trial.
    Uniform,
    /// Full-size perturbations with the sign of the kernel weight, chosen
    /// per evaluation point; this makes the local bounds tight.
    Adversarial,
}

#[derive(Debug, Clone, Copy)]
pub struct LabOptions {
    /// Grid on `[1, e]` for the moment suprema.
    pub moment_grid: usize,
    /// Grid for sup norms and moduli of continuity.
    pub signal_grid: usize,
    /// Evaluation points `t` on the signal window.
    pub t_grid: usize,
}

impl Default for LabOptions {
    fn default() -> Self {
        Self {
            moment_grid: 10_000,
            signal_grid: 4000,
            t_grid: 1000,
        }
    }
}

/// Every node `e^{k/w}` that enters `S_w f(t)` for `t` in `window`.
pub fn node_extent(kernel: &KernelSpec, w: f64, window: (f64, f64)) -> (f64, f64) {
    let (lo, hi) = kernel.support_log();
    let a = (window.0.ln() - hi / w).clamp(-700.0, 700.0);
    let b = (window.1.ln() - lo / w).clamp(-700.0, 700.0);
    (a.exp(), b.exp())
}

fn check_w(w: f64) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(domain(format!("w must be positive and finite, got {w}")));
    }
    Ok(())
}

fn log_grid(window: (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = (window.0.ln(), window.1.ln());
    let n = n.max(2);
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Whether `t` lies within `1/w` (log distance) of a jump of `f`.
fn near_jump(f: &PiecewiseSignal, w: f64, t: f64) -> bool {
    f.jumps()
        .iter()
        .any(|j| (t.ln() - j.location.ln()).abs() <= 1.0 / w)
}

/// Grid points at least `1/w` away (in log distance) from every jump.
fn evaluation_points(f: &PiecewiseSignal, w: f64, window: (f64, f64), n: usize) -> Vec<f64> {
    log_grid(window, n)
        .into_iter()
        .filter(|&t| !near_jump(f, w, t))
        .collect()
}

fn moment(kernel: &KernelSpec, nu: f64, grid: usize) -> Result<f64> {
    let m = sup_absolute_moment(kernel, nu, grid)?;
    if !m.value.is_finite() {
        return Err(Error::Numerical(format!("moment M_{nu} is not finite")));
    }
    Ok(m.value)
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

/// The rate bound and its constituents.
pub fn rate_bound(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    w: f64,
    nu: f64,
    opts: &LabOptions,
) -> Result<(f64, BTreeMap<String, f64>)> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(domain(format!("nu must lie in (0, 1), got {nu}")));
    }
    check_w(w)?;
    let m0 = moment(kernel, 0.0, opts.moment_grid)?;
    let m_nu = moment(kernel, nu, opts.moment_grid)?;
    let extent = node_extent(kernel, w, f.window());
    let delta = w.powf(-nu);
    let omega = f.log_modulus_on(delta, extent, opts.signal_grid)?;
    let norm = f.sup_norm(extent, opts.signal_grid)?;
    let bound = omega * (m_nu + 2.0 * m0) + 2f64.powf(nu + 1.0) * norm * m_nu * delta;
    let constituents = BTreeMap::from([
        ("M_0".to_string(), m0),
        ("M_nu".to_string(), m_nu),
        ("omega".to_string(), omega),
        ("sup_norm".to_string(), norm),
        ("w".to_string(), w),
        ("nu".to_string(), nu),
    ]);
    Ok((bound, constituents))
}

/// `max |S_w f(t) - f(t)|` over a log grid on `window`, skipping points
/// within `1/w` (log distance) of a jump.
pub fn empirical_sup_error(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    w: f64,
    window: (f64, f64),
    grid: usize,
) -> Result<f64> {
    check_w(w)?;
    let errors = evaluation_points(f, w, window, grid)
        .par_iter()
        .map(|&t| Ok((evaluate_series(kernel, f, w, t)? - f.eval(t)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(max_of(errors.into_iter()))
}

pub fn rate_experiment(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    w: f64,
    nu: f64,
    opts: &LabOptions,
) -> Result<ErrorReport> {
    let (bound, constituents) = rate_bound(kernel, f, w, nu, opts)?;
    let empirical = empirical_sup_error(kernel, f, w, f.window(), opts.t_grid)?;
    Ok(ErrorReport::new(
        BoundKind::Rate,
        bound,
        empirical,
        constituents,
        None,
    ))
}

/// A local bound (perturbation effect only) and a total bound (distance of
/// the perturbed series from `f`).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub local: ErrorReport,
    pub total: ErrorReport,
}

/// Seeded uniform draws in `[-size, size]`, one vector per trial, indexed
/// from the first node of the window.
fn uniform_draws(size: f64, nodes: usize, trials: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..trials)
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            (0..nodes)
                .map(|_| {
                    if size == 0.0 {
                        0.0
                    } else {
                        rng.random_range(-size..=size)
                    }
                })
                .collect()
        })
        .collect()
}

struct Setup {
    /// Evaluation points, flagged when the total error is meaningful there
    /// (away from jumps).
    ts: Vec<(f64, bool)>,
    k_first: i64,
    draws: Vec<Vec<f64>>,
    m0: f64,
    m1: f64,
    omega: f64,
    extent: (f64, f64),
}

#[allow(clippy::too_many_arguments)]
fn setup(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    w: f64,
    size: f64,
    trials: usize,
    seed: u64,
    mode: PerturbationMode,
    opts: &LabOptions,
) -> Result<Setup> {
    check_w(w)?;
    if !(size >= 0.0) || !size.is_finite() {
        return Err(domain(format!(
            "perturbation size must be nonnegative and finite, got {size}"
        )));
    }
    if trials == 0 {
        return Err(domain("at least one trial is required"));
    }
    let (lo, hi) = f.window();
    let k_first = *node_window(kernel, w, lo)?.start();
    let k_last = *node_window(kernel, w, hi)?.end();
    let nodes = (k_last - k_first + 1).max(0) as usize;
    let draws = match mode {
        PerturbationMode::Uniform => uniform_draws(size, nodes, trials, seed),
        PerturbationMode::Adversarial => Vec::new(),
    };
    let extent = node_extent(kernel, w, f.window());
    Ok(Setup {
        ts: log_grid(f.window(), opts.t_grid)
            .into_iter()
            .map(|t| (t, !near_jump(f, w, t)))
            .collect(),
        k_first,
        draws,
        m0: moment(kernel, 0.0, opts.moment_grid)?,
        m1: moment(kernel, 1.0, opts.moment_grid)?,
        omega: f.log_modulus_on(1.0 / w, extent, opts.signal_grid)?,
        extent,
    })
}

/// Per evaluation point: max over trials of the local and total errors,
/// with samples `perturb(k, node, weight, draw)`.
fn run_trials<P>(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    w: f64,
    s: &Setup,
    size: f64,
    mode: PerturbationMode,
    perturb: P,
) -> Result<(f64, f64)>
where
    P: Fn(f64, f64) -> Result<f64> + Sync,
{
    let per_t = s
        .ts
        .par_iter()
        .map(|&(t, continuous)| {
            let base = evaluate_series(kernel, f, w, t)?;
            let ft = f.eval(t)?;
            let mut local = 0.0f64;
            let mut total = 0.0f64;
            let mut one = |draw: &dyn Fn(i64, f64) -> f64| -> Result<()> {
                let perturbed =
                    evaluate_series_with(kernel, w, t, |k, x, weight| perturb(x, draw(k, weight)))
                        .map_err(unwrap_rejection)?;
                local = local.max((base - perturbed).abs());
                if continuous {
                    total = total.max((ft - perturbed).abs());
                }
                Ok(())
            };
            match mode {
                PerturbationMode::Uniform => {
                    for trial in &s.draws {
                        one(&|k, _| trial[(k - s.k_first) as usize])?;
                    }
                }
                PerturbationMode::Adversarial => {
                    one(&|_, weight| size * weight.signum())?;
                }
            }
            Ok((local, total))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok((
        max_of(per_t.iter().map(|p| p.0)),
        max_of(per_t.iter().map(|p| p.1)),
    ))
}

fn unwrap_rejection(e: Error) -> Error {
    match e {
        Error::Node { source, .. } if matches!(*source, Error::Rejected(_)) => *source,
        other => other,
    }
}

/// Samples `f(e^{k/w}) - xi_k`, `|xi_k| <= xi`.
#[allow(clippy::too_many_arguments)]
pub fn roundoff_experiment(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    w: f64,
    xi: f64,
    trials: usize,
    seed: u64,
    mode: PerturbationMode,
    opts: &LabOptions,
) -> Result<PerturbationReport> {
    let s = setup(kernel, f, w, xi, trials, seed, mode, opts)?;
    let (local, total) = run_trials(kernel, f, w, &s, xi, mode, |x, xi_k| Ok(f.eval(x)? - xi_k))?;
    let c = s.m0 + s.m1;
    let constituents = BTreeMap::from([
        ("M_0".to_string(), s.m0),
        ("M_1".to_string(), s.m1),
        ("C".to_string(), c),
        ("omega".to_string(), s.omega),
        ("xi".to_string(), xi),
        ("w".to_string(), w),
        ("trials".to_string(), trials as f64),
    ]);
    let seed = Some(seed);
    Ok(PerturbationReport {
        local: ErrorReport::new(
            BoundKind::RoundOff,
            xi * s.m0,
            local,
            constituents.clone(),
            seed,
        ),
        total: ErrorReport::new(
            BoundKind::RoundOffTotal,
            c * s.omega + xi * s.m0,
            total,
            constituents,
            seed,
        ),
    })
}

/// Samples `f(e^{k/w} + rho_k)`, `|rho_k| <= rho`. A perturbed node that
/// leaves the half-line or changes piece rejects the experiment.
#[allow(clippy::too_many_arguments)]
pub fn jitter_experiment(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    w: f64,
    rho: f64,
    trials: usize,
    seed: u64,
    mode: PerturbationMode,
    opts: &LabOptions,
) -> Result<PerturbationReport> {
    let s = setup(kernel, f, w, rho, trials, seed, mode, opts)?;
    let deriv_window = ((s.extent.0 - rho).max(0.5 * s.extent.0), s.extent.1 + rho);
    let deriv_sup = f.derivative_sup(deriv_window, opts.signal_grid)?;
    let (local, total) = run_trials(kernel, f, w, &s, rho, mode, |x, rho_k| {
        let z = x + rho_k;
        if !(z > 0.0) {
            return Err(Error::Rejected(format!(
                "perturbed node {x} + {rho_k} is not positive"
            )));
        }
        if f.piece_index(z) != f.piece_index(x) {
            return Err(Error::Rejected(format!(
                "perturbed node {z} lies in a different piece than node {x}"
            )));
        }
        f.eval(z)
    })?;
    let c = s.m0 + s.m1;
    let constituents = BTreeMap::from([
        ("M_0".to_string(), s.m0),
        ("M_1".to_string(), s.m1),
        ("C".to_string(), c),
        ("omega".to_string(), s.omega),
        ("deriv_sup".to_string(), deriv_sup),
        ("rho".to_string(), rho),
        ("w".to_string(), w),
        ("trials".to_string(), trials as f64),
    ]);
    let local_bound = rho * deriv_sup * s.m0;
    let seed = Some(seed);
    Ok(PerturbationReport {
        local: ErrorReport::new(
            BoundKind::Jitter,
            local_bound,
            local,
            constituents.clone(),
            seed,
        ),
        total: ErrorReport::new(
            BoundKind::JitterTotal,
            c * s.omega + local_bound,
            total,
            constituents,
            seed,
        ),
    })
}
