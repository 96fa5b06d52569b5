//! Admissibility checks and the quantities that govern jump behaviour.
//!
//! All sums here are over the finitely many `k` with `e^{-k} u` inside the
//! kernel's (effective) support, evaluated in the log domain `x = ln u`.
//! Every quantity is recurrent in `u` with fundamental interval `[1, e]`,
//! i.e. periodic in `x` with period 1, so suprema are taken over `x in [0, 1]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::kernel::KernelSpec;
use crate::quadrature::{integrate_panels, QuadratureOptions};
use crate::sum::CompensatedSum;

/// Tolerance at which a Mellin sample is declared zero (or one).
pub const MELLIN_TOL: f64 = 1e-8;

/// Residual allowed in the partition of unity for compactly supported kernels.
pub const PARTITION_TOL: f64 = 1e-12;

/// `psi^-` is declared constant on `(1, e)` when its spread on the scan grid
/// is below this.
pub const CONSTANCY_TOL: f64 = 1e-9;

/// Inclusive range of `k` with `x - k` inside the kernel support.
pub fn node_range(kernel: &KernelSpec, x: f64) -> (i64, i64) {
    let (lo, hi) = kernel.support_log();
    ((x - hi).ceil() as i64, (x - lo).floor() as i64)
}

fn log_arg(u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(domain(format!(
            "argument must be positive and finite, got {u}"
        )));
    }
    Ok(u.ln())
}

/// `sum_k chi(e^{x-k})`.
pub fn partition_sum_at_log(kernel: &KernelSpec, x: f64) -> f64 {
    let (k0, k1) = node_range(kernel, x);
    let mut acc = CompensatedSum::new();
    for k in k0..=k1 {
        acc.add(kernel.value_at_log(x - k as f64));
    }
    acc.value()
}

/// `sum_k chi(e^{-k} u) - 1`.
pub fn partition_residual(kernel: &KernelSpec, u: f64) -> Result<f64> {
    Ok(partition_sum_at_log(kernel, log_arg(u)?) - 1.0)
}

/// `psi^-` at `u = e^x`: the sum over `k > x` (nodes where `e^{-k} u < 1`).
pub fn psi_minus_at_log(kernel: &KernelSpec, x: f64) -> f64 {
    let (k0, k1) = node_range(kernel, x);
    let mut acc = CompensatedSum::new();
    for k in k0..=k1 {
        if (k as f64) > x {
            acc.add(kernel.value_at_log(x - k as f64));
        }
    }
    acc.value()
}

/// `psi^+` at `u = e^x`: the sum over `k < x`.
pub fn psi_plus_at_log(kernel: &KernelSpec, x: f64) -> f64 {
    let (k0, k1) = node_range(kernel, x);
    let mut acc = CompensatedSum::new();
    for k in k0..=k1 {
        if (k as f64) < x {
            acc.add(kernel.value_at_log(x - k as f64));
        }
    }
    acc.value()
}

pub fn psi_minus(kernel: &KernelSpec, u: f64) -> Result<f64> {
    Ok(psi_minus_at_log(kernel, log_arg(u)?))
}

pub fn psi_plus(kernel: &KernelSpec, u: f64) -> Result<f64> {
    Ok(psi_plus_at_log(kernel, log_arg(u)?))
}

/// `M_nu(chi, e^x) = sum_k |chi(e^{x-k})| |k - x|^nu`.
pub fn absolute_moment_at_log(kernel: &KernelSpec, nu: f64, x: f64) -> f64 {
    let (k0, k1) = node_range(kernel, x);
    let mut acc = CompensatedSum::new();
    for k in k0..=k1 {
        let v = kernel.value_at_log(x - k as f64);
        if v != 0.0 {
            let dist = (k as f64 - x).abs();
            acc.add(v.abs() * if nu == 0.0 { 1.0 } else { dist.powf(nu) });
        }
    }
    acc.value()
}

pub fn absolute_moment(kernel: &KernelSpec, nu: f64, u: f64) -> Result<f64> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(domain(format!("moment order must be >= 0, got {nu}")));
    }
    Ok(absolute_moment_at_log(kernel, nu, log_arg(u)?))
}

/// `m_nu(chi, u) = sum_k chi(e^{-k} u) (k - ln u)^nu`.
pub fn algebraic_moment(kernel: &KernelSpec, nu: u32, u: f64) -> Result<f64> {
    let x = log_arg(u)?;
    let (k0, k1) = node_range(kernel, x);
    let mut acc = CompensatedSum::new();
    for k in k0..=k1 {
        let v = kernel.value_at_log(x - k as f64);
        if v != 0.0 {
            acc.add(v * (k as f64 - x).powi(nu as i32));
        }
    }
    Ok(acc.value())
}

/// Grid estimate of `M_nu(chi) = sup_u M_nu(chi, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupMoment {
    pub value: f64,
    /// `ln u` at which the maximum was found, in `[0, 1]`.
    pub argmax_log: f64,
    /// Set when the moment may be infinite and `value` is a truncated estimate.
    pub divergence_warning: Option<String>,
}

pub fn sup_absolute_moment(kernel: &KernelSpec, nu: f64, grid_size: usize) -> Result<SupMoment> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(domain(format!("moment order must be >= 0, got {nu}")));
    }
    if grid_size < 2 {
        return Err(domain("moment grid needs at least 2 points"));
    }
    let last = (grid_size - 1) as f64;
    let (value, idx) = (0..grid_size)
        .into_par_iter()
        .map(|i| (absolute_moment_at_log(kernel, nu, i as f64 / last), i))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    let divergence_warning = kernel.moment_order_limit().and_then(|limit| {
        (nu >= limit).then(|| {
            format!(
                "M_{nu} of {kernel} may be infinite (finite only for nu < {limit}); \
                 value is a truncated estimate"
            )
        })
    });
    Ok(SupMoment {
        value,
        argmax_log: idx as f64 / last,
        divergence_warning,
    })
}

/// Which part of the positive half-line a Mellin integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfLine {
    Full,
    /// `0 < u < 1`.
    Below,
    /// `u > 1`.
    Above,
}

/// `int chi(u) u^{s-1} du` over the whole half-line.
pub fn mellin_transform(kernel: &KernelSpec, s: Complex64) -> Result<Complex64> {
    mellin_transform_on(kernel, s, HalfLine::Full)
}

/// Mellin transform restricted to `u < 1` or `u > 1`, computed as
/// `int chi(e^y) e^{s y} dy` with panels split at the kernel breakpoints.
pub fn mellin_transform_on(kernel: &KernelSpec, s: Complex64, part: HalfLine) -> Result<Complex64> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(domain(format!("Mellin argument must be finite, got {s}")));
    }
    if kernel.moment_order_limit().is_some() && s.re != 0.0 {
        return Err(domain(format!(
            "{kernel} decays only polynomially in ln u; its Mellin transform exists on Re(s) = 0 only"
        )));
    }
    let (lo, hi) = kernel.support_log();
    let (a, b) = match part {
        HalfLine::Full => (lo, hi),
        HalfLine::Below => (lo, hi.min(0.0)),
        HalfLine::Above => (lo.max(0.0), hi),
    };
    if a >= b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut edges: Vec<f64> = kernel
        .breakpoints_log()
        .into_iter()
        .filter(|&y| y > a && y < b)
        .collect();
    edges.push(a);
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let opts = QuadratureOptions {
        abs_tol: 1e-12,
        rel_tol: 0.0,
        max_intervals: 4000,
    };
    let r = integrate_panels(|y| kernel.value_at_log(y) * (s * y).exp(), &edges, opts)
        .map_err(|e| Error::Numerical(format!("Mellin transform of {kernel} at s = {s}: {e}")))?;
    Ok(r.value)
}

fn two_k_pi_i(k: i64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * k as f64)
}

/// Mellin samples `chi^(2 k pi i)` for `k = -k_max..=k_max`.
pub fn mellin_samples(
    kernel: &KernelSpec,
    k_max: i64,
    part: HalfLine,
) -> Result<Vec<(i64, Complex64)>> {
    (-k_max..=k_max)
        .into_par_iter()
        .map(|k| mellin_transform_on(kernel, two_k_pi_i(k), part).map(|v| (k, v)))
        .collect()
}

/// `psi^-(u)` reconstructed from the Mellin samples of `chi` restricted to
/// `u < 1` by Poisson summation, truncated at `|k| <= k_max`.
pub fn psi_minus_via_mellin(kernel: &KernelSpec, u: f64, k_max: i64) -> Result<f64> {
    let x = log_arg(u)?;
    let samples = mellin_samples(kernel, k_max, HalfLine::Below)?;
    let total: Complex64 = samples
        .iter()
        .map(|&(k, m)| m * Complex64::new(0.0, -2.0 * PI * k as f64 * x).exp())
        .sum();
    Ok(total.re)
}

/// The half-line Mellin integrals that characterize convergence at jumps:
/// `int_0^1 chi(u) u^{2 k pi i} du/u` must be `alpha` at `k = 0` and vanish
/// otherwise; the integrals over `(1, inf)` must then be `1 - alpha` and 0.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpConditionReport {
    pub k_max: i64,
    pub lower: Vec<(i64, Complex64)>,
    pub upper: Vec<(i64, Complex64)>,
    pub implied_alpha: f64,
    pub lower_pass: bool,
    pub upper_pass: bool,
    /// Set when the kernel is not continuous or `chi(1) != 0`.
    pub hypothesis_warning: Option<String>,
}

impl JumpConditionReport {
    pub fn passes(&self) -> bool {
        self.lower_pass && self.upper_pass
    }
}

pub fn verify_jump_conditions(kernel: &KernelSpec, k_max: i64) -> Result<JumpConditionReport> {
    if k_max < 0 {
        return Err(domain("k_max must be nonnegative"));
    }
    let lower = mellin_samples(kernel, k_max, HalfLine::Below)?;
    let upper = mellin_samples(kernel, k_max, HalfLine::Above)?;
    let at_zero = |v: &[(i64, Complex64)]| {
        v.iter()
            .find(|(k, _)| *k == 0)
            .map(|p| p.1)
            .unwrap_or_default()
    };
    let implied_alpha = at_zero(&lower).re;
    let upper_zero = at_zero(&upper);
    let nonzero_vanish = |v: &[(i64, Complex64)]| {
        v.iter()
            .filter(|(k, _)| *k != 0)
            .all(|(_, m)| m.norm() <= MELLIN_TOL)
    };
    let lower_pass = nonzero_vanish(&lower) && at_zero(&lower).im.abs() <= MELLIN_TOL;
    let upper_pass = nonzero_vanish(&upper)
        && (upper_zero - Complex64::new(1.0 - implied_alpha, 0.0)).norm() <= MELLIN_TOL;

    let chi1 = kernel.value_at_one();
    let hypothesis_warning = if !kernel.is_continuous() {
        Some(format!(
            "{kernel} is not continuous; the Mellin characterization does not apply"
        ))
    } else if chi1 != 0.0 {
        Some(format!(
            "chi(1) = {chi1} != 0 for {kernel}; convergence at jumps along all w is not expected"
        ))
    } else {
        None
    };
    Ok(JumpConditionReport {
        k_max,
        lower,
        upper,
        implied_alpha,
        lower_pass,
        upper_pass,
        hypothesis_warning,
    })
}

/// Result of scanning `psi^-` over the open fundamental interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaEstimate {
    Constant(f64),
    NonConstant { min: f64, max: f64 },
}

impl AlphaEstimate {
    pub fn value(&self) -> Option<f64> {
        match *self {
            AlphaEstimate::Constant(a) => Some(a),
            AlphaEstimate::NonConstant { .. } => None,
        }
    }
}

/// Scan `psi^-` at `x = j / samples`, `j = 0..samples`, i.e. on `[1, e)`.
/// Constancy is judged on the open interval (`j >= 1`).
pub fn scan_psi_minus(
    kernel: &KernelSpec,
    samples: usize,
    tol: f64,
) -> (Vec<(f64, f64)>, AlphaEstimate) {
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|j| {
            let x = j as f64 / samples as f64;
            (x.exp(), psi_minus_at_log(kernel, x))
        })
        .collect();
    let (min, max) = pts
        .iter()
        .skip(1)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| {
            (lo.min(v), hi.max(v))
        });
    let estimate = if max - min < tol {
        AlphaEstimate::Constant(0.5 * (min + max))
    } else {
        AlphaEstimate::NonConstant { min, max }
    };
    (pts, estimate)
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    /// Grid on `[1, e]` for the moment suprema and the partition residual.
    pub grid_size: usize,
    pub nu: f64,
    pub mellin_k: i64,
    pub psi_samples: usize,
    pub constancy_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            grid_size: 10_000,
            nu: 0.5,
            mellin_k: 5,
            psi_samples: 1000,
            constancy_tol: CONSTANCY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub kernel: String,
    pub partition_max_residual: f64,
    pub partition_tolerance: f64,
    pub chi_at_one: f64,
    pub m0: f64,
    pub nu: f64,
    pub m_nu: f64,
    pub moment_warning: Option<String>,
    pub psi_minus_at_one: f64,
    pub psi_minus_fundamental: Vec<(f64, f64)>,
    pub alpha_estimate: AlphaEstimate,
    pub mellin_at_2kpi: Vec<(i64, Complex64)>,
    pub jump_conditions: JumpConditionReport,
}

impl KernelReport {
    /// Partition of unity, finite moments, and the matching Mellin samples
    /// (one at `k = 0`, zero elsewhere).
    pub fn admissible(&self) -> bool {
        let mellin_tol = MELLIN_TOL + self.partition_tolerance;
        let mellin_ok = self.mellin_at_2kpi.iter().all(|&(k, m)| {
            let target = if k == 0 { 1.0 } else { 0.0 };
            (m - Complex64::new(target, 0.0)).norm() <= mellin_tol
        });
        self.partition_max_residual <= self.partition_tolerance
            && self.m0.is_finite()
            && self.m_nu.is_finite()
            && mellin_ok
    }

    /// When the jump hypothesis holds (continuous, `chi(1) = 0`), the
    /// direct `psi^-` scan and the half-line Mellin route must agree on
    /// whether an `alpha` exists and on its value.
    pub fn consistent(&self) -> bool {
        if self.jump_conditions.hypothesis_warning.is_some() {
            return true;
        }
        match self.alpha_estimate {
            AlphaEstimate::Constant(alpha) => {
                self.jump_conditions.passes()
                    && (alpha - self.jump_conditions.implied_alpha).abs() <= MELLIN_TOL
            }
            AlphaEstimate::NonConstant { .. } => !self.jump_conditions.lower_pass,
        }
    }

    pub fn passes(&self) -> bool {
        self.admissible() && self.consistent()
    }
}

pub fn check_kernel_conditions(
    kernel: &KernelSpec,
    opts: &AnalysisOptions,
) -> Result<KernelReport> {
    if opts.grid_size < 2 || opts.psi_samples < 2 {
        return Err(domain("analysis grids need at least 2 points"));
    }
    let last = (opts.grid_size - 1) as f64;
    let partition_max_residual = (0..opts.grid_size)
        .into_par_iter()
        .map(|i| (partition_sum_at_log(kernel, i as f64 / last) - 1.0).abs())
        .reduce(|| 0.0, f64::max);
    let m0 = sup_absolute_moment(kernel, 0.0, opts.grid_size)?;
    let m_nu = sup_absolute_moment(kernel, opts.nu, opts.grid_size)?;
    let (psi_minus_fundamental, alpha_estimate) =
        scan_psi_minus(kernel, opts.psi_samples, opts.constancy_tol);
    let mellin_at_2kpi = mellin_samples(kernel, opts.mellin_k, HalfLine::Full)?;
    let jump_conditions = verify_jump_conditions(kernel, opts.mellin_k)?;
    Ok(KernelReport {
        kernel: kernel.to_string(),
        partition_max_residual,
        partition_tolerance: PARTITION_TOL + kernel.truncation_tail(),
        chi_at_one: kernel.value_at_one(),
        m0: m0.value,
        nu: opts.nu,
        m_nu: m_nu.value,
        moment_warning: m_nu.divergence_warning,
        psi_minus_at_one: psi_minus_at_log(kernel, 0.0),
        psi_minus_fundamental,
        alpha_estimate,
        mellin_at_2kpi,
        jump_conditions,
    })
}
